"""Perturbative RG workbench for weakly nonlinear oscillators."""
