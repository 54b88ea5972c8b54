# Services package
from .integrator import RungeKuttaIntegrator
from .dynamics import DynamicsAnalyzer
from .bifurcation_sweep import BifurcationSweep
from .csv_processor import CSVProcessor

__all__ = ['RungeKuttaIntegrator', 'DynamicsAnalyzer', 'BifurcationSweep', 'CSVProcessor']
