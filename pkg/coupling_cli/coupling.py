"""
Coupling coordination between the two subsystem levels f and g.

C = 2 * sqrt(f*g / (f+g)^2), T = alpha*f + beta*g and D = C*T (or sqrt(C*T)), with D classified into
five right-closed stages.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Dict, Iterable, List, Mapping, Sequence

import numpy as np
import pandas as pd

from coupling_cli import config
from coupling_cli.entropy import IndexSeries
from coupling_cli.panel import MacroRegion, RegionSpec
from coupling_cli.utils import CouplingCliException

logger = logging.getLogger(__name__)


class CouplingCliOutOfRangeException(CouplingCliException):
    pass


class CouplingCliEmptyInputException(CouplingCliException):
    pass


class CouplingCliEmptyRegionException(CouplingCliException):
    pass


class DVariant(Enum):
    literal = 'literal'  # D = C * T
    sqrt = 'sqrt'  # D = sqrt(C * T)


class Stage(IntEnum):
    SeriousMaladjustment = 0
    ModerateDisorder = 1
    BasicCoordination = 2
    ModerateCoordination = 3
    HighCoordination = 4


@dataclass(frozen=True)
class CouplingConfig:
    alpha: float = config.default_alpha
    beta: float = config.default_beta
    d_variant: DVariant = DVariant.literal

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or not math.isclose(self.alpha + self.beta, 1.0, abs_tol=1e-12):
            raise CouplingCliOutOfRangeException(
                f'alpha and beta must be non-negative and sum to 1, got alpha={self.alpha}, beta={self.beta}')


@dataclass(frozen=True)
class CouplingRecord:
    year: int
    region: str
    f: float
    g: float
    c: float
    t: float
    d: float
    stage: Stage


@dataclass(frozen=True)
class YearStats:
    year: int
    mean: float
    std: float
    cv: float  # nan when mean == 0

    @property
    def cv_defined(self) -> bool:
        return not math.isnan(self.cv)


def coupling_degree(f: float, g: float) -> float:
    total = f + g
    if total <= 0:
        # Zero development in both subsystems is reported as uncoupled
        return 0.0
    c = 2 * math.sqrt(f * g / (total * total))
    return min(max(c, 0.0), 1.0)


def comprehensive_index(f: float, g: float, cfg: CouplingConfig) -> float:
    return cfg.alpha * f + cfg.beta * g


def coordination_degree(c: float, t: float, cfg: CouplingConfig) -> float:
    product = c * t
    if cfg.d_variant is DVariant.sqrt:
        return math.sqrt(product)
    return product


def classify(d: float) -> Stage:
    if not 0 <= d <= 1:
        raise CouplingCliOutOfRangeException(f'Coordination degree {d} is outside [0, 1]')

    for stage, upper_bound in zip(Stage, config.stage_upper_bounds):
        if d <= upper_bound:
            return stage
    return Stage.HighCoordination


def couple(year: int, region: str, f: float, g: float, cfg: CouplingConfig) -> CouplingRecord:
    c = coupling_degree(f, g)
    t = comprehensive_index(f, g, cfg)
    d = coordination_degree(c, t, cfg)
    return CouplingRecord(year=year, region=region, f=f, g=g, c=c, t=t, d=d, stage=classify(d))


def couple_series(series: IndexSeries, cfg: CouplingConfig) -> List[CouplingRecord]:
    records = [couple(year, region, float(series.f[t, i]), float(series.g[t, i]), cfg)
               for t, year in enumerate(series.years)
               for i, region in enumerate(series.region_ids)]
    logger.info(f'Coupling coordination computed for {len(records)} region-years ({cfg.d_variant.value} D)')
    return records


def descriptive_stats(values: Sequence[float], year: int = 0) -> YearStats:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise CouplingCliEmptyInputException(f'No values to describe for year {year}')

    mean = float(values.mean())
    std = float(values.std(ddof=0))
    cv = std / mean if mean != 0 else math.nan
    if math.isnan(cv):
        logger.warning(f'Coefficient of variation undefined for year {year} (mean is 0)')
    return YearStats(year=year, mean=mean, std=std, cv=cv)


def year_stats(records: Iterable[CouplingRecord]) -> List[YearStats]:
    by_year: Dict[int, List[float]] = {}
    for record in records:
        by_year.setdefault(record.year, []).append(record.d)
    return [descriptive_stats(values, year) for year, values in by_year.items()]


@dataclass(frozen=True)
class RegionMeans:
    per_year: Mapping[MacroRegion, Mapping[int, float]]
    overall: Mapping[MacroRegion, float]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for macro_region, yearly in self.per_year.items():
            rows.extend([macro_region.value, str(year), mean] for year, mean in yearly.items())
            rows.append([macro_region.value, 'all', self.overall[macro_region]])
        return pd.DataFrame(rows, columns=['macro_region', 'year', 'mean_D'])


def region_aggregate(records: Iterable[CouplingRecord], regions: Sequence[RegionSpec]) -> RegionMeans:
    macro_region_of = {region.id: region.macro_region for region in regions}
    grouped: Dict[MacroRegion, Dict[int, List[float]]] = {}
    for record in records:
        if record.region not in macro_region_of:
            raise CouplingCliEmptyRegionException(f'Region {record.region} has no macro-region')
        grouped.setdefault(macro_region_of[record.region], {}).setdefault(record.year, []).append(record.d)

    empty = [macro_region.value for macro_region in set(macro_region_of.values()) if macro_region not in grouped]
    if empty or not grouped:
        raise CouplingCliEmptyRegionException(f'No coupling records for macro-region(s) {sorted(empty) or "any"}')

    per_year = {}
    overall = {}
    for macro_region in MacroRegion:
        if macro_region not in grouped:
            continue
        yearly = {year: float(np.mean(values)) for year, values in sorted(grouped[macro_region].items())}
        per_year[macro_region] = yearly
        overall[macro_region] = float(np.mean(list(yearly.values())))
    return RegionMeans(per_year=per_year, overall=overall)


def stage_counts(records: Iterable[CouplingRecord]) -> pd.DataFrame:
    counts: Dict[int, Counter] = {}
    for record in records:
        counts.setdefault(record.year, Counter())[record.stage] += 1
    rows = [[year, stage.name, counter.get(stage, 0)] for year, counter in counts.items() for stage in Stage]
    return pd.DataFrame(rows, columns=['year', 'stage', 'count'])


def rank_regions(records: Iterable[CouplingRecord]) -> pd.DataFrame:
    by_region: Dict[str, List[float]] = {}
    for record in records:
        by_region.setdefault(record.region, []).append(record.d)

    frame = pd.DataFrame({'region': list(by_region), 'mean_D': [float(np.mean(v)) for v in by_region.values()]})
    # Stable sort keeps panel order among ties
    frame = frame.sort_values('mean_D', ascending=False, kind='mergesort').reset_index(drop=True)
    frame['rank'] = np.arange(1, len(frame) + 1)
    return frame


def records_frame(records: Iterable[CouplingRecord]) -> pd.DataFrame:
    return pd.DataFrame([[r.year, r.region, r.f, r.g, r.c, r.t, r.d, r.stage.name] for r in records],
                        columns=['year', 'region', 'f', 'g', 'C', 'T', 'D', 'stage'])


def year_stats_frame(stats: Iterable[YearStats]) -> pd.DataFrame:
    return pd.DataFrame([[s.year, s.mean, s.std, s.cv] for s in stats], columns=['year', 'mean', 'std', 'cv'])


def d_matrix(records: Iterable[CouplingRecord], years: Sequence[int], region_ids: Sequence[str]) -> np.ndarray:
    year_positions = {year: t for t, year in enumerate(years)}
    region_positions = {region: i for i, region in enumerate(region_ids)}
    d = np.full((len(years), len(region_ids)), np.nan)
    for record in records:
        d[year_positions[record.year], region_positions[record.region]] = record.d
    return d
