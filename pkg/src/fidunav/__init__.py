"""Multi-camera fiducial-marker tracking and guidance streaming."""

__version__ = "0.1.0"
