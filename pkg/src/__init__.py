"""
SCAD Intervals
Confidence intervals centred on the SCAD estimator: evaluation, design and reproduction runs
"""
