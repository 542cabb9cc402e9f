"""
Configuration centralisée pour mevforge
"""

from pathlib import Path
from typing import List, Literal, Optional

from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class AnalysisConfig(BaseSettings):
    """Configuration principale d'une analyse mixte de valeurs extrêmes"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="MEVFORGE_",
        case_sensitive=False,
        extra="ignore",
    )

    # Modèles
    ev_model: Literal["gev", "pp"] = Field(default="gev", description="Modèle VE des maxima de réanalyse")
    threshold: Optional[float] = Field(default=None, description="Seuil u du modèle Pareto-Poisson")
    family: Literal["linear", "power"] = Field(default="linear", description="Famille de la régression hétéroscédastique")
    gumbel_selection: bool = Field(
        default=True,
        description="Réajuste avec ξ=0 et choisit par test du rapport de vraisemblance"
    )

    # Intervalles et périodes de retour
    alpha: float = Field(default=0.05, description="Niveau de signification")
    return_periods: List[float] = Field(
        default=[2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0],
        description="Périodes de retour T (années)"
    )

    # Données
    coverage_floor: float = Field(default=0.8, description="Couverture minimale d'une année")
    sampling_step_hours: Optional[float] = Field(
        default=None,
        description="Pas d'échantillonnage attendu (sinon pas médian du fichier)"
    )
    decluster_hours: float = Field(default=72.0, description="Séparation minimale entre pics au-dessus du seuil")

    # Ajustements
    min_ev_obs: int = Field(default=10, description="Taille minimale pour un ajustement VE")
    min_reg_obs: int = Field(default=8, description="Taille minimale pour la régression")
    max_restarts: int = Field(default=3, description="Redémarrages du simplexe")
    max_iterations: int = Field(default=4000, description="Itérations max du simplexe")
    gradient_tol: float = Field(default=1e-6, description="Tolérance relative sur le gradient")

    # Quadrature et racines
    quad_abs_tol: float = Field(default=1e-10, description="Tolérance absolue de quadrature")
    quad_rel_tol: float = Field(default=1e-10, description="Tolérance relative de quadrature")
    quad_limit: int = Field(default=10_000, description="Nombre max de sous-intervalles")
    quantile_tol: float = Field(default=1e-8, description="Résidu max |F_Z(z)-q|")
    max_bracket_doublings: int = Field(default=60, description="Doublements max de l'encadrement")
    gradient_eps: float = Field(default=1e-6, description="Pas relatif des différences finies")

    # Diagnostics
    ljung_box_lags: List[int] = Field(default=[1, 2, 3, 4, 5], description="Retards du test de Ljung-Box")
    acf_max_lag: int = Field(default=20, description="Retard max ACF/PACF")

    # Sorties
    seed: Optional[int] = Field(default=None, description="Graine des simulations")
    out_dir: Path = Field(default=Path("./results"), description="Répertoire des résultats")

    # Debug
    debug: bool = Field(default=False, description="Activer le debug")

    @model_validator(mode="after")
    def _validate_analysis_config(self) -> "AnalysisConfig":
        """Valide la cohérence des paramètres numériques."""
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha doit être dans (0,1), reçu {self.alpha}")

        tolerances = {
            "gradient_tol": self.gradient_tol,
            "quad_abs_tol": self.quad_abs_tol,
            "quad_rel_tol": self.quad_rel_tol,
            "quantile_tol": self.quantile_tol,
            "gradient_eps": self.gradient_eps,
        }
        for name, value in tolerances.items():
            if value <= 0:
                raise ValueError(f"{name} doit être > 0, reçu {value}")

        if not 0.0 <= self.coverage_floor <= 1.0:
            raise ValueError(f"coverage_floor doit être dans [0,1], reçu {self.coverage_floor}")
        if any(t <= 1.0 for t in self.return_periods):
            raise ValueError("Toutes les périodes de retour doivent être > 1")
        if self.ev_model == "pp" and self.threshold is None:
            raise ValueError("Le modèle Pareto-Poisson exige un seuil (threshold)")
        if self.quad_limit < 1 or self.max_bracket_doublings < 1:
            raise ValueError("quad_limit et max_bracket_doublings doivent être ≥ 1")
        return self

    @classmethod
    def from_env_file(cls, env_file: str = ".env") -> "AnalysisConfig":
        """Charge la configuration depuis un fichier .env"""
        return cls(_env_file=env_file)

    def get_quadrature_config(self) -> dict:
        """Retourne la configuration spécifique à la quadrature."""
        return {
            "epsabs": self.quad_abs_tol,
            "epsrel": self.quad_rel_tol,
            "limit": self.quad_limit,
        }

    def debug_info(self) -> str:
        """Retourne des informations de debug sur la configuration"""
        threshold = f" (u={self.threshold})" if self.ev_model == "pp" else ""
        return f"""
🔧 Configuration mevforge:
  - Modèle VE: {self.ev_model}{threshold}
  - Régression: {self.family}
  - Sélection Gumbel: {'✅' if self.gumbel_selection else '❌'}
  - alpha: {self.alpha}
  - Périodes de retour: {', '.join(f'{t:g}' for t in self.return_periods)}

🧮 Numérique:
  - Quadrature: abs={self.quad_abs_tol:g}, rel={self.quad_rel_tol:g}, {self.quad_limit} sous-intervalles
  - Quantile: résidu ≤ {self.quantile_tol:g}
  - Gradient: tol={self.gradient_tol:g}, eps={self.gradient_eps:g}

💾 Sorties:
  - Répertoire: {self.out_dir}
  - Couverture minimale: {self.coverage_floor}
        """.strip()


# Instance globale de configuration
_config: Optional[AnalysisConfig] = None


def get_config() -> AnalysisConfig:
    """Récupère la configuration globale"""
    global _config
    if _config is None:
        _config = AnalysisConfig.from_env_file()
    return _config


def set_config(config: AnalysisConfig):
    """Définit la configuration globale"""
    global _config
    _config = config


def reset_config():
    """Remet à zéro la configuration"""
    global _config
    _config = None
