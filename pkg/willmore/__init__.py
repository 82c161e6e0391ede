"""p-adaptive LDG level set Willmore flow with semi-implicit Runge-Kutta stepping and multigrid stage solves."""

__version__ = "1.0.0"
