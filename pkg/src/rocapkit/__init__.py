"""Capture planning, eye-to-hand calibration, pose labeling and evaluation for
robot-collected 6D pose datasets of appearance-changing objects."""

__version__ = "0.1.0"
