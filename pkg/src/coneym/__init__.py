"""Numerical toolkit for cone Yang-Mills fields on structured grids."""
