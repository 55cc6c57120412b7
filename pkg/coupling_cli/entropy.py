"""
Entropy weight method.

Indicators are min-max normalized over the pooled set of all (year, region) cells, turned into
proportions, and weighted by their divergence 1 - E_j from maximum entropy. The composite level of a
subsystem in a (year, region) cell is the weighted sum of its normalized indicators.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from coupling_cli.panel import Direction, IndicatorSpec, PanelDataset, Subsystem
from coupling_cli.utils import CouplingCliException

logger = logging.getLogger(__name__)


class CouplingCliEmptySubsystemException(CouplingCliException):
    pass


class CouplingCliZeroColumnException(CouplingCliException):
    pass


class CouplingCliDegenerateLogException(CouplingCliException):
    pass


class CouplingCliAllColumnsUninformativeException(CouplingCliException):
    pass


class CouplingCliDimensionMismatchException(CouplingCliException):
    pass


@dataclass(frozen=True, eq=False)
class NormalizationBounds:
    x_min: np.ndarray
    x_max: np.ndarray


@dataclass(frozen=True, eq=False)
class NormalizedPanel:
    subsystem: Optional[Subsystem]
    indicators: Tuple[IndicatorSpec, ...]
    z: np.ndarray  # z[year][region][indicator]
    bounds: NormalizationBounds
    constant: Optional[np.ndarray] = None  # per indicator, True when the raw column never varies


@dataclass(frozen=True, eq=False)
class EntropyWeights:
    entropy: np.ndarray
    divergence: np.ndarray
    weight: np.ndarray
    proportion_sum_check: Optional[np.ndarray] = None
    indicator_ids: Tuple[str, ...] = ()
    subsystem: Optional[Subsystem] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'subsystem': self.subsystem.value if self.subsystem else '',
            'indicator': list(self.indicator_ids) or list(range(len(self.weight))),
            'entropy': self.entropy,
            'divergence': self.divergence,
            'weight': self.weight,
        })


@dataclass(frozen=True, eq=False)
class IndexSeries:
    years: Tuple[int, ...]
    region_ids: Tuple[str, ...]
    f: np.ndarray  # f[year][region], new-infrastructure level
    g: np.ndarray  # g[year][region], digital-transformation level
    weights_x: EntropyWeights
    weights_y: EntropyWeights

    @property
    def national_f(self) -> np.ndarray:
        return self.f.mean(axis=1)

    @property
    def national_g(self) -> np.ndarray:
        return self.g.mean(axis=1)

    def to_frame(self) -> pd.DataFrame:
        v, m = self.f.shape
        return pd.DataFrame({
            'year': np.repeat(self.years, m),
            'region': np.tile(self.region_ids, v),
            'f': self.f.reshape(-1),
            'g': self.g.reshape(-1),
        })


def normalize(ds: PanelDataset, subsystem: Subsystem) -> NormalizedPanel:
    indices = ds.subsystem_indices(subsystem)
    if not indices:
        raise CouplingCliEmptySubsystemException(f'Subsystem {subsystem.value} has no indicators')

    indicators = tuple(ds.indicators[j] for j in indices)
    x = ds.values[:, :, indices]
    x_min = x.min(axis=(0, 1))
    x_max = x.max(axis=(0, 1))
    span = x_max - x_min
    constant = span == 0
    safe_span = np.where(constant, 1.0, span)

    negative = np.array([indicator.direction is Direction.negative for indicator in indicators])
    z = np.where(negative, (x_max - x) / safe_span, (x - x_min) / safe_span)
    # A constant column carries no information; mapping it to 1 keeps proportions defined and yields E=1, W=0
    z = np.where(constant, 1.0, z)

    for indicator in [indicator for indicator, is_constant in zip(indicators, constant) if is_constant]:
        logger.warning(f'Indicator {indicator.id} is constant; it gets zero weight')

    return NormalizedPanel(subsystem=subsystem, indicators=indicators, z=z,
                           bounds=NormalizationBounds(x_min=x_min, x_max=x_max), constant=constant)


def proportions(normalized: NormalizedPanel) -> np.ndarray:
    z = normalized.z
    column_sums = z.sum(axis=(0, 1))
    if np.any(column_sums <= 0):
        zero_ids = [indicator.id for indicator, total in zip(normalized.indicators, column_sums) if total <= 0]
        raise CouplingCliZeroColumnException(f'Indicators with an all-zero normalized column: {zero_ids}')
    return z / column_sums


def entropy(s: np.ndarray, v: int, m: int) -> np.ndarray:
    cells = v * m
    if cells <= 1:
        raise CouplingCliDegenerateLogException(f'Entropy needs more than one (year, region) cell, got {cells}')

    s = np.asarray(s, dtype=float)
    plogp = np.zeros_like(s)
    positive = s > 0
    plogp[positive] = s[positive] * np.log(s[positive])  # 0 * ln 0 = 0

    cell_axes = tuple(range(s.ndim - 1))
    e = -plogp.sum(axis=cell_axes) / np.log(cells)
    return np.clip(e, 0.0, 1.0)


def weights(e: Sequence[float], indicator_ids: Sequence[str] = (), subsystem: Optional[Subsystem] = None,
            proportion_sum_check: Optional[np.ndarray] = None) -> EntropyWeights:
    e = np.asarray(e, dtype=float)
    divergence = 1.0 - e
    total = divergence.sum()
    if total <= 0:
        raise CouplingCliAllColumnsUninformativeException(
            f'Every indicator of subsystem {subsystem.value if subsystem else "?"} has zero divergence')

    weight = divergence / total
    return EntropyWeights(entropy=e, divergence=divergence, weight=weight,
                          proportion_sum_check=proportion_sum_check,
                          indicator_ids=tuple(indicator_ids), subsystem=subsystem)


def composite_index(normalized: NormalizedPanel, w: EntropyWeights) -> np.ndarray:
    if len(w.weight) != normalized.z.shape[-1]:
        raise CouplingCliDimensionMismatchException(
            f'{len(w.weight)} weights for {normalized.z.shape[-1]} indicators')
    return np.clip(normalized.z @ w.weight, 0.0, 1.0)


def subsystem_weights(ds: PanelDataset, subsystem: Subsystem) -> Tuple[NormalizedPanel, EntropyWeights]:
    normalized = normalize(ds, subsystem)
    s = proportions(normalized)
    v, m, _ = s.shape
    e = entropy(s, v, m)
    if normalized.constant is not None:
        # Rounding leaves a constant column a hair below E=1; it carries no information
        e = np.where(normalized.constant, 1.0, e)
    w = weights(e, indicator_ids=[indicator.id for indicator in normalized.indicators], subsystem=subsystem,
                proportion_sum_check=s.sum(axis=(0, 1)))
    logger.debug(f'Subsystem {subsystem.value} weights: '
                 + ', '.join(f'{i}={x:.4f}' for i, x in zip(w.indicator_ids, w.weight)))
    return normalized, w


def compute_index_series(ds: PanelDataset) -> IndexSeries:
    normalized_x, weights_x = subsystem_weights(ds, Subsystem.X)
    normalized_y, weights_y = subsystem_weights(ds, Subsystem.Y)

    series = IndexSeries(years=ds.years, region_ids=tuple(ds.region_ids),
                         f=composite_index(normalized_x, weights_x), g=composite_index(normalized_y, weights_y),
                         weights_x=weights_x, weights_y=weights_y)
    logger.info(f'Composite indices computed for {len(ds.years)} years x {len(ds.regions)} regions')
    return series


def national_means(series: IndexSeries) -> pd.DataFrame:
    return pd.DataFrame({'year': list(series.years), 'f': series.national_f, 'g': series.national_g})
