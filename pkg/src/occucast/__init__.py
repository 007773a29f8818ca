"""Multi-scale occupancy forecasting from Wi-Fi association logs."""

__version__ = "0.1.0"
