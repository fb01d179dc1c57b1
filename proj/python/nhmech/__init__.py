"""Nonholonomic mechanics in group frames: multiplier-free equations of
motion and Poincare-Cartan loop-invariant verification."""

from nhmech._core import Model, NhmechError, list_models, run_checks

__all__ = ["Model", "NhmechError", "list_models", "run_checks"]
