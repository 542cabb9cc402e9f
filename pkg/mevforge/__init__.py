"""
mevforge - Modèle mixte de valeurs extrêmes (réanalyse + instrumental)
"""

from mevforge.core import MixedModel, fit_gev, fit_hetreg

__all__ = ["MixedModel", "fit_gev", "fit_hetreg"]
