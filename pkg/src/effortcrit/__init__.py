"""Effort-based criticality scoring of 3D perception errors.

Converts false positives and false negatives into the braking and steering
effort they would impose on the ego vehicle (FSR, MDR, LEA), gated by a
reachable-set or separating-axis collision check.
"""

__version__ = "0.1.0"
