"""Cross-curvature solvers on the three-sphere."""

__version__ = "0.1.0"
