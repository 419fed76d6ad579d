"""Pseudo almost periodic mild solutions of neutral hyperbolic evolution equations."""
