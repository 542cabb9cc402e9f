from datetime import datetime
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator


class SeriesHeader(BaseModel):
    """En-tête `# variable=<nom> units=<unité> [step_hours=<h>]` d'un fichier de série."""

    variable: str = Field(description="Nom de la variable (ex. hs)")
    units: str = Field(description="Unité des valeurs (ex. m)")
    step_hours: Optional[float] = Field(
        default=None, gt=0, description="Pas d'échantillonnage attendu, en heures"
    )

    def render(self) -> str:
        line = f"# variable={self.variable} units={self.units}"
        if self.step_hours is not None:
            line += f" step_hours={self.step_hours:g}"
        return line


class TimeSeriesFile(BaseModel):
    """Série temporelle horodatée (UTC) lue depuis un fichier texte."""

    header: SeriesHeader
    timestamps: List[datetime] = Field(description="Horodatages UTC strictement croissants")
    values: List[float] = Field(description="Valeurs, NaN pour les manquantes")
    source: Optional[str] = Field(default=None, description="Chemin du fichier d'origine")

    @model_validator(mode="after")
    def _check_rows(self) -> "TimeSeriesFile":
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps et values doivent avoir la même longueur")
        for previous, current in zip(self.timestamps, self.timestamps[1:]):
            if current <= previous:
                raise ValueError(f"Horodatages non strictement croissants: {previous} puis {current}")
        return self

    def __len__(self) -> int:
        return len(self.values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "timestamp": self.timestamps,
            "year": [t.year for t in self.timestamps],
            "value": np.asarray(self.values, dtype=float),
        })


class AnnualMaximaSeries(BaseModel):
    """Maxima par année civile (UTC) avec leur taux de couverture."""

    variable: str = Field(default="", description="Nom de la variable")
    units: str = Field(default="", description="Unité")
    years: List[int] = Field(default_factory=list)
    maxima: List[float] = Field(default_factory=list)
    coverage: List[float] = Field(default_factory=list, description="Échantillons observés / attendus")
    dropped_years: List[int] = Field(default_factory=list, description="Années sous le seuil de couverture")

    @model_validator(mode="after")
    def _check_years(self) -> "AnnualMaximaSeries":
        if not (len(self.years) == len(self.maxima) == len(self.coverage)):
            raise ValueError("years, maxima et coverage doivent avoir la même longueur")
        if len(set(self.years)) != len(self.years):
            raise ValueError("Une seule entrée par année")
        if any(not 0.0 <= c <= 1.0 for c in self.coverage):
            raise ValueError("La couverture doit être dans [0, 1]")
        return self

    def __len__(self) -> int:
        return len(self.years)

    def as_dict(self) -> dict:
        return dict(zip(self.years, self.maxima))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"year": self.years, "max": self.maxima, "coverage": self.coverage})
