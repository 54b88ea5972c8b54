# Test package for ecodyn
