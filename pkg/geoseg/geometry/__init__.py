"""Camera models, sphere geometry and 3D lines."""
