import calendar
import logging
import math
import warnings
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from mevforge.core.exceptions import DataParseError, DomainError
from mevforge.core.hetreg import PairedMaxima
from mevforge.core.simulate import SimulatedSample
from mevforge.io.models.series import AnnualMaximaSeries, SeriesHeader, TimeSeriesFile
from mevforge.io.services.report_service import atomic_write_text

logger = logging.getLogger(__name__)

_DELIMITER = r"[,;\t]"
_MISSING = {"", "nan"}
_HOURS_PER_YEAR = 8760.0


def _parse_header(line: str, path: Path) -> SeriesHeader:
    if not line.startswith("#"):
        raise DataParseError(f"{path}:1: en-tête '# variable=<nom> units=<unité>' attendu")
    fields = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise DataParseError(f"{path}:1: élément d'en-tête invalide '{token}'")
        fields[key.strip()] = value.strip()
    try:
        return SeriesHeader(**fields)
    except ValidationError as e:
        raise DataParseError(f"{path}:1: en-tête invalide ({e.errors()[0]['msg']})") from e


def _data_rows(lines: Sequence[str]) -> pd.Series:
    """Lignes de données indexées par leur numéro dans le fichier (commentaires et vides exclus)"""
    rows = pd.Series(lines[1:], index=pd.RangeIndex(2, len(lines) + 1), dtype=object).str.strip()
    rows = rows[(rows != "") & ~rows.str.startswith("#")]
    first_field = rows.str.split(_DELIMITER, n=1, regex=True).str[0].str.strip().str.lower()
    return rows[first_field != "timestamp"]


def _first_line(mask: pd.Series) -> int:
    return int(mask.index[mask.to_numpy()][0])


def _parse_rows(rows: pd.Series, path: Path) -> Tuple[pd.Series, np.ndarray]:
    """Horodatages UTC et valeurs ; la première ligne fautive est signalée par son numéro"""
    fields = rows.str.split(_DELIMITER, regex=True, expand=True)
    counts = fields.notna().sum(axis=1)
    if (counts != 2).any():
        line = _first_line(counts != 2)
        raise DataParseError(f"{path}:{line}: 2 champs attendus, {counts[line]} trouvés")

    stamp_text = fields[0].str.strip()
    stamps = pd.to_datetime(stamp_text, utc=True, errors="coerce", format="ISO8601")
    if stamps.isna().any():
        line = _first_line(stamps.isna())
        raise DataParseError(f"{path}:{line}: horodatage invalide '{stamp_text[line]}'")

    value_text = fields[1].str.strip()
    missing = value_text.str.lower().isin(_MISSING)
    numeric = pd.to_numeric(value_text.where(~missing), errors="coerce")
    invalid = ~missing & (numeric.isna() | np.isinf(numeric))
    if invalid.any():
        line = _first_line(invalid)
        raise DataParseError(f"{path}:{line}: valeur invalide '{value_text[line]}'")
    try:
        values = value_text.where(~missing, "nan").astype(float).to_numpy()
    except ValueError as e:
        raise DataParseError(f"{path}: valeur invalide ({e})") from e

    not_increasing = stamps.diff() <= pd.Timedelta(0)
    if not_increasing.any():
        line = _first_line(not_increasing)
        raise DataParseError(f"{path}:{line}: horodatage non croissant ({stamps[line].isoformat()})")
    return stamps, values


def _hours_in_year(year: int) -> float:
    return 8784.0 if calendar.isleap(year) else _HOURS_PER_YEAR


class SeriesService:
    """Service de lecture, d'écriture et d'agrégation des séries temporelles."""

    @staticmethod
    def ingest(path: Union[str, Path]) -> TimeSeriesFile:
        """Lit un fichier `timestamp,value` précédé de son en-tête ; erreurs localisées à la ligne."""
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise DataParseError(f"Lecture impossible de {path}: {e}") from e
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            line = raw.count(b"\n", 0, e.start) + 1
            raise DataParseError(f"{path}:{line}: encodage UTF-8 invalide (octet {e.start})") from e
        lines = text.splitlines()
        if not lines:
            raise DataParseError(f"{path}: fichier vide")

        header = _parse_header(lines[0].strip(), path)
        rows = _data_rows(lines)
        if rows.empty:
            raise DataParseError(f"{path}: aucune ligne de données")
        stamps, values = _parse_rows(rows, path)

        logger.info("✅ %d enregistrements lus depuis %s (%s)", len(values), path.name, header.variable)
        return TimeSeriesFile(header=header, timestamps=[stamp.to_pydatetime() for stamp in stamps],
                              values=values.tolist(), source=str(path))

    @staticmethod
    def write_series(path: Union[str, Path], series: TimeSeriesFile) -> Path:
        """Écriture atomique au format lu par ingest (valeurs en repr, sans perte)"""
        rows = [series.header.render(), "timestamp,value"]
        for stamp, value in zip(series.timestamps, series.values):
            rendered = "NaN" if math.isnan(value) else repr(float(value))
            rows.append(f"{stamp.astimezone(timezone.utc).isoformat()},{rendered}")
        return atomic_write_text(Path(path), "\n".join(rows) + "\n")

    @staticmethod
    def sampling_step_hours(series: TimeSeriesFile, override: Optional[float] = None) -> float:
        """Pas attendu : override, puis step_hours de l'en-tête, sinon pas médian"""
        if override is not None:
            return float(override)
        if series.header.step_hours is not None:
            return float(series.header.step_hours)
        if len(series) < 2:
            return _HOURS_PER_YEAR
        seconds = np.diff([t.timestamp() for t in series.timestamps])
        return float(np.median(seconds)) / 3600.0

    @staticmethod
    def annual_maxima(series: TimeSeriesFile, coverage_floor: float = 0.8,
                      step_hours: Optional[float] = None) -> AnnualMaximaSeries:
        """
        Maximum des valeurs présentes par année civile UTC.

        Couverture = échantillons présents / attendus (heures de l'année / pas) ; les années
        sous coverage_floor sont écartées et listées dans dropped_years.
        """
        step = SeriesService.sampling_step_hours(series, step_hours)
        frame = series.to_frame()
        grouped = frame.groupby("year")["value"].agg(["max", "count"])

        years, maxima, coverage, dropped = [], [], [], []
        for year, row in grouped.iterrows():
            expected = max(math.floor(_hours_in_year(int(year)) / step), 1)
            cov = min(float(row["count"]) / expected, 1.0)
            if row["count"] == 0 or cov < coverage_floor:
                dropped.append(int(year))
                continue
            years.append(int(year))
            maxima.append(float(row["max"]))
            coverage.append(cov)

        if dropped:
            logger.warning("⚠️ Années écartées (couverture < %.2f): %s", coverage_floor, dropped)
        return AnnualMaximaSeries(variable=series.header.variable, units=series.header.units,
                                  years=years, maxima=maxima, coverage=coverage, dropped_years=dropped)

    @staticmethod
    def pair_differences(x_max: AnnualMaximaSeries, z_max: AnnualMaximaSeries) -> PairedMaxima:
        """Intersection des années, yᵢ = zᵢ - xᵢ ; les années non appariées sont rapportées"""
        x_map, z_map = x_max.as_dict(), z_max.as_dict()
        common = sorted(set(x_map) & set(z_map))
        unpaired = tuple(sorted(set(x_map) ^ set(z_map)))
        if not common:
            message = "Aucune année commune entre réanalyse et instrumental"
            logger.warning("⚠️ %s", message)
            warnings.warn(message, RuntimeWarning, stacklevel=2)
        x = np.array([x_map[y] for y in common], dtype=float)
        z = np.array([z_map[y] for y in common], dtype=float)
        logger.info("🔧 %d années appariées, %d non appariées", len(common), len(unpaired))
        return PairedMaxima(x=x, y=z - x, years=np.array(common, dtype=int), unpaired_years=unpaired)

    @staticmethod
    def peaks_over_threshold(series: TimeSeriesFile, u: float, decluster_hours: float = 72.0,
                             years: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Pics de grappes au-dessus de u : deux dépassements séparés de plus de decluster_hours
        appartiennent à deux grappes distinctes. Renvoie (pics, années des pics), restreints
        aux années données.
        """
        frame = series.to_frame()
        above = frame[frame["value"] > u]
        if above.empty:
            return np.empty(0), np.empty(0, dtype=int)
        hours = np.array([t.timestamp() for t in above["timestamp"]]) / 3600.0
        cluster = np.concatenate([[0], np.cumsum(np.diff(hours) > decluster_hours)])
        peaks_index = above.groupby(cluster)["value"].idxmax()
        peaks = frame.loc[peaks_index]
        if years is not None:
            peaks = peaks[peaks["year"].isin(set(years))]
        logger.info("🔧 %d pics au-dessus de u=%g (%d grappes)", len(peaks), u, int(cluster[-1]) + 1)
        return peaks["value"].to_numpy(dtype=float), peaks["year"].to_numpy(dtype=int)

    @staticmethod
    def from_annual(years: Sequence[int], values: Sequence[float], variable: str, units: str) -> TimeSeriesFile:
        """Une ligne par année (1er juillet, 00:00 UTC), pas attendu d'un an"""
        stamps = [datetime(int(y), 7, 1, tzinfo=timezone.utc) for y in years]
        return TimeSeriesFile(header=SeriesHeader(variable=variable, units=units, step_hours=_HOURS_PER_YEAR),
                              timestamps=stamps, values=[float(v) for v in values])

    @staticmethod
    def from_exceedances(sample: SimulatedSample, variable: str, units: str) -> TimeSeriesFile:
        """
        Dépassements répartis régulièrement dans leur année ; une année sans dépassement
        reçoit une ligne égale au seuil (maximum censuré).
        """
        stamps, values = [], []
        for year in sample.years:
            events = sample.exceedances[sample.exceedance_years == year]
            start = datetime(int(year), 1, 1, tzinfo=timezone.utc)
            if events.size == 0:
                stamps.append(start + timedelta(hours=_hours_in_year(int(year)) / 2.0))
                values.append(float(sample.threshold))
                continue
            spacing = _HOURS_PER_YEAR / events.size
            for i, value in enumerate(events):
                stamps.append(start + timedelta(hours=(i + 0.5) * spacing))
                values.append(float(value))
        return TimeSeriesFile(header=SeriesHeader(variable=variable, units=units, step_hours=_HOURS_PER_YEAR),
                              timestamps=stamps, values=values)

    @staticmethod
    def write_simulation(sample: SimulatedSample, out_dir: Union[str, Path],
                         variable: str = "hs", units: str = "m") -> Tuple[Path, Path]:
        """reanalysis.csv (maxima annuels ou dépassements) et instrumental.csv (années appariées)"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if sample.threshold is None:
            reanalysis = SeriesService.from_annual(sample.years, sample.x_max, variable, units)
        else:
            reanalysis = SeriesService.from_exceedances(sample, variable, units)
        paired = sample.paired()
        instrumental = SeriesService.from_annual(paired.years, paired.z, variable, units)
        x_path = SeriesService.write_series(out_dir / "reanalysis.csv", reanalysis)
        z_path = SeriesService.write_series(out_dir / "instrumental.csv", instrumental)
        logger.info("✅ Simulation écrite dans %s", out_dir)
        return x_path, z_path
