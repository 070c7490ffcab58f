"""Logging utility
"""
from .logger import Logger, set_package_logger

__all__ = ["Logger", "set_package_logger"]
