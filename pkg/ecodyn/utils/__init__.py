# Utilities package
from .workers import parallel_map

__all__ = ['parallel_map']
