import json
import logging
import math
import os
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from mevforge.core.fitting import FitResult

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
SIGNIFICANT_DIGITS = 10


def atomic_write_text(path: Path, text: str) -> Path:
    """Écrit dans un fichier temporaire du même répertoire puis le renomme"""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _round(value: float) -> Union[float, None]:
    if not math.isfinite(value):
        return None
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def normalize(payload: Any) -> Any:
    """Convertit récursivement en types JSON, flottants à 10 chiffres significatifs, NaN → null"""
    if isinstance(payload, BaseModel):
        return normalize(payload.model_dump(mode="python"))
    if isinstance(payload, dict):
        return {str(k): normalize(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [normalize(v) for v in payload]
    if isinstance(payload, np.ndarray):
        return normalize(payload.tolist())
    if isinstance(payload, Enum):
        return payload.value
    if isinstance(payload, (bool, np.bool_)):
        return bool(payload)
    if isinstance(payload, (int, np.integer)):
        return int(payload)
    if isinstance(payload, (float, np.floating)):
        return _round(float(payload))
    if isinstance(payload, Path):
        return str(payload)
    return payload


class ReportService:
    """Service d'écriture des rapports JSON et des tables CSV."""

    @staticmethod
    def render_json(payload: Dict[str, Any]) -> str:
        return json.dumps(normalize(payload), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"

    @staticmethod
    def write_json(path: Union[str, Path], payload: Dict[str, Any]) -> Path:
        """JSON déterministe : clés triées, 10 chiffres significatifs, écriture atomique"""
        path = atomic_write_text(Path(path), ReportService.render_json(payload))
        logger.info("💾 Rapport écrit: %s", path)
        return path

    @staticmethod
    def write_csv(path: Union[str, Path], frame: pd.DataFrame) -> Path:
        """Table CSV sans index, flottants en %.10g, écriture atomique"""
        text = frame.to_csv(index=False, float_format=f"%.{SIGNIFICANT_DIGITS}g", lineterminator="\n")
        path = atomic_write_text(Path(path), text)
        logger.info("💾 Table écrite: %s (%d lignes)", path, len(frame))
        return path

    @staticmethod
    def fit_summary(fit: FitResult, alpha: float = 0.05) -> Dict[str, Any]:
        """Résumé sérialisable d'un ajustement (estimations, écarts-types, intervalles)"""
        summary = fit.summary(alpha)
        summary["model"] = getattr(fit.model, "kind", None) or getattr(fit.model, "family", None)
        return normalize(summary)
