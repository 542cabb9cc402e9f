"""
Rapports de tests statistiques (modèles pydantic sérialisables).
"""

from typing import ClassVar, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TestReport(BaseModel):
    """Résultat d'un test d'hypothèse au niveau alpha"""

    __test__: ClassVar[bool] = False

    model_config = ConfigDict(frozen=True)

    name: str = Field(default="", description="Nom du test")
    statistic: float
    p_value: float = Field(ge=0.0, le=1.0)
    alpha: float = Field(gt=0.0, lt=1.0)
    reject: bool
    lag: Optional[int] = Field(default=None, description="Retard (Ljung-Box)")
    dof: Optional[int] = Field(default=None, description="Degrés de liberté de la loi de référence")

    @model_validator(mode="after")
    def _check_decision(self) -> "TestReport":
        if self.reject != (self.p_value < self.alpha):
            raise ValueError("reject doit valoir p_value < alpha")
        return self

    @classmethod
    def from_p_value(cls, name: str, statistic: float, p_value: float, alpha: float, **extra) -> "TestReport":
        p_value = min(max(float(p_value), 0.0), 1.0)
        return cls(name=name, statistic=float(statistic), p_value=p_value, alpha=alpha,
                   reject=p_value < alpha, **extra)


class AcfReport(BaseModel):
    """Autocorrélations et autocorrélations partielles avec leur borne de confiance"""

    lags: List[int]
    acf: List[float]
    pacf: List[float]
    conf_bound: float

    @model_validator(mode="after")
    def _check_values(self) -> "AcfReport":
        if not (len(self.lags) == len(self.acf) == len(self.pacf)):
            raise ValueError("lags, acf et pacf doivent avoir la même longueur")
        if self.acf and self.acf[0] != 1.0:
            raise ValueError("L'autocorrélation au retard 0 doit valoir 1")
        if any(abs(v) > 1.0 for v in self.acf + self.pacf):
            raise ValueError("Autocorrélations hors de [-1, 1]")
        return self


class DiagnosticsReport(BaseModel):
    """Batterie de diagnostics d'un ajustement (VE ou régression)"""

    subject: str
    n: int
    ks: TestReport
    ljung_box: List[TestReport]
    acf: AcfReport
    pp_qq: Dict[str, List[float]]
    notes: List[str] = Field(default_factory=list)
