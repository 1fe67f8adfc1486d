"""Numerical toolkit for almost contact B-metric structures on
coordinate charts: structural tensor and Lee form computation, class
residuals, contact conformal transformations, torse-forming vector field
analysis and Yamabe-soliton verification."""

__version__ = "0.1.0"
