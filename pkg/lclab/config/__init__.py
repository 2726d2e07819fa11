"""Configuration: environment, experiment settings, output paths and calibration cache."""
