"""Curve segment detection and description."""
