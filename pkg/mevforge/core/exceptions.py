"""
Hiérarchie d'exceptions de mevforge.

Chaque classe porte le code de sortie utilisé par la CLI.
"""


class MevError(Exception):
    """Erreur de base de mevforge"""

    exit_code: int = 1


class DataParseError(MevError):
    """Fichier d'entrée mal formé (ligne, horodatage, en-tête)"""

    exit_code = 2


class FitError(MevError):
    """Échantillon dégénéré ou ajustement impossible"""

    exit_code = 3


class NumericError(MevError):
    """Échec numérique : quadrature, recherche de racine, covariance invalide"""

    exit_code = 4


class DomainError(MevError, ValueError):
    """Argument hors du domaine de la fonction"""

    exit_code = 4
