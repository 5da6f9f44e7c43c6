"""Bundle-adjustment problem format and solver."""
