"""
Exploratory spatial data analysis over a region adjacency.

Weights are libpysal ``W`` objects and the global statistic and its analytical moments come from esda.
Permutation inference, global and local, runs on per-stage seeded numpy streams so that results do not
depend on thread scheduling.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import List, Mapping, Optional, Sequence, Tuple

import libpysal
import numpy as np
import pandas as pd
from esda.moran import Moran
from scipy import stats

from coupling_cli import config
from coupling_cli.panel import RegionSpec
from coupling_cli.utils import CouplingCliException, derive_rng, parallel_map

logger = logging.getLogger(__name__)


class CouplingCliZeroVarianceException(CouplingCliException):
    pass


class CouplingCliEmptyWeightsException(CouplingCliException):
    pass


class CouplingCliMissingSeedException(CouplingCliException):
    pass


class WeightsScheme(Enum):
    binary = 'binary'
    row_standardized = 'row_standardized'


# libpysal transformation codes
TRANSFORMATIONS = {WeightsScheme.binary: 'b', WeightsScheme.row_standardized: 'r'}


class InferenceMethod(Enum):
    normal = 'normal'
    permutation = 'permutation'


class Cluster(Enum):
    HH = 'HH'
    HL = 'HL'
    LH = 'LH'
    LL = 'LL'
    NotSignificant = 'NS'


@dataclass(frozen=True, eq=False)
class SpatialWeights:
    order: Tuple[str, ...]
    neighbors: Mapping[str, Tuple[str, ...]]
    scheme: WeightsScheme
    islands: Tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.order)

    def to_libpysal(self) -> libpysal.weights.W:
        # esda sets the transformation in place, so every caller gets its own W
        w = libpysal.weights.W({region_id: list(self.neighbors[region_id]) for region_id in self.order},
                               id_order=list(self.order), silence_warnings=True)
        w.transform = TRANSFORMATIONS[self.scheme]
        return w

    @cached_property
    def w(self) -> np.ndarray:
        """Dense matrix in region order."""
        return np.asarray(self.to_libpysal().sparse.toarray(), dtype=float)

    def row_standardized(self) -> 'SpatialWeights':
        if self.scheme is WeightsScheme.row_standardized:
            return self
        return replace(self, scheme=WeightsScheme.row_standardized)


@dataclass(frozen=True)
class MoranResult:
    i_value: float
    expected: float
    z: float
    p: float
    method: InferenceMethod
    permutations: int = 0
    seed: Optional[int] = None

    @classmethod
    def undefined(cls, n: int, method: InferenceMethod) -> 'MoranResult':
        expected = expected_moran(n) if n > 1 else math.nan
        return cls(i_value=math.nan, expected=expected, z=math.nan, p=math.nan, method=method)


@dataclass(frozen=True, eq=False)
class LisaResult:
    order: Tuple[str, ...]
    local_i: np.ndarray
    p_local: np.ndarray
    clusters: Tuple[Cluster, ...]
    alpha: float

    @classmethod
    def undefined(cls, order: Sequence[str], alpha: float) -> 'LisaResult':
        n = len(order)
        return cls(order=tuple(order), local_i=np.full(n, np.nan), p_local=np.full(n, np.nan),
                   clusters=(Cluster.NotSignificant,) * n, alpha=alpha)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'region': list(self.order), 'local_i': self.local_i, 'p': self.p_local,
                             'cluster': [cluster.value for cluster in self.clusters]})


def build_weights(regions: Sequence[RegionSpec], scheme: WeightsScheme = WeightsScheme.row_standardized) \
        -> SpatialWeights:
    order = tuple(region.id for region in regions)
    known = set(order)
    neighbors = {region.id: tuple(neighbor for neighbor in dict.fromkeys(region.neighbors)
                                  if neighbor in known and neighbor != region.id)
                 for region in regions}

    islands = tuple(region_id for region_id in order if not neighbors[region_id])
    for island in islands:
        logger.warning(f'Region {island} has no neighbors; its weight row stays zero')

    return SpatialWeights(order=order, neighbors=neighbors, scheme=scheme, islands=islands)


def _deviations(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size < 2 or np.ptp(x) <= config.tie_tolerance * max(1.0, float(np.max(np.abs(x)))):
        raise CouplingCliZeroVarianceException('Values have zero variance across regions')
    return x - x.mean()


def _moran(x: Sequence[float], weights: SpatialWeights) -> Moran:
    _deviations(x)
    if not any(weights.neighbors.values()):
        raise CouplingCliEmptyWeightsException('Spatial weights sum to zero')

    # Tiny maps divide by zero in the randomization moments; those are not used below
    with np.errstate(divide='ignore', invalid='ignore'):
        return Moran(np.asarray(x, dtype=float), weights.to_libpysal(), transformation=TRANSFORMATIONS[weights.scheme],
                     permutations=0)


def morans_i(x: Sequence[float], weights: SpatialWeights) -> float:
    return float(_moran(x, weights).I)


def expected_moran(n: int) -> float:
    return -1.0 / (n - 1)


def morans_inference(x: Sequence[float], weights: SpatialWeights,
                     method: InferenceMethod = InferenceMethod.permutation,
                     permutations: int = config.default_permutations, seed: Optional[int] = None,
                     stream: Sequence[int] = ()) -> MoranResult:
    moran = _moran(x, weights)
    i_value = float(moran.I)
    expected = expected_moran(weights.n)

    if method is InferenceMethod.normal:
        # Randomization variance needs n >= 4; below that use the normality assumption
        variance = float(moran.VI_rand if weights.n >= 4 else moran.VI_norm)
        if not variance > 0:
            logger.warning('Moran\'s I variance is not positive; reporting z=0')
            z_score = 0.0
        else:
            z_score = (i_value - expected) / math.sqrt(variance)
        # One-sided upper tail: positive autocorrelation
        return MoranResult(i_value=i_value, expected=expected, z=z_score, p=float(stats.norm.sf(z_score)),
                           method=method)

    if seed is None:
        raise CouplingCliMissingSeedException('Permutation inference needs a seed')
    z = _deviations(x)
    rng = derive_rng(seed, *stream)
    s0 = float(weights.w.sum())
    permuted = rng.permuted(np.tile(z, (permutations, 1)), axis=1)
    simulated = np.einsum('pi,ij,pj->p', permuted, weights.w, permuted) * len(z) / (s0 * float(z @ z))

    larger = int(np.sum(simulated >= i_value - config.tie_tolerance))
    p = (larger + 1) / (permutations + 1)
    spread = simulated.std()
    z_score = (i_value - simulated.mean()) / spread if spread > 0 else 0.0
    return MoranResult(i_value=i_value, expected=expected, z=float(z_score), p=p, method=method,
                       permutations=permutations, seed=seed)


def lisa(x: Sequence[float], weights: SpatialWeights) -> np.ndarray:
    z = _deviations(x)
    lag = libpysal.weights.lag_spatial(weights.to_libpysal(), z)
    # Denominator summed over all regions
    return len(z) * z * lag / float(z @ z)


def _conditional_p_value(i: int, z: np.ndarray, w: np.ndarray, observed: float, permutations: int,
                         seed: int, stream: Sequence[int]) -> float:
    row = w[i]
    if not np.any(row):
        return 1.0

    others = np.delete(np.arange(len(z)), i)
    rng = derive_rng(seed, *stream, i)
    permuted = rng.permuted(np.tile(z[others], (permutations, 1)), axis=1)
    simulated = len(z) * z[i] * (permuted @ row[others]) / float(z @ z)

    upper = int(np.sum(simulated >= observed - config.tie_tolerance))
    lower = int(np.sum(simulated <= observed + config.tie_tolerance))
    # Two-sided: double the smaller tail
    return min(1.0, 2 * (min(upper, lower) + 1) / (permutations + 1))


def _quadrant(deviation: float, lag: float, scale: float) -> Cluster:
    if abs(deviation) <= config.tie_tolerance * scale or abs(lag) <= config.tie_tolerance * scale:
        return Cluster.NotSignificant
    if deviation > 0:
        return Cluster.HH if lag > 0 else Cluster.HL
    return Cluster.LH if lag > 0 else Cluster.LL


def lisa_classify(x: Sequence[float], weights: SpatialWeights,
                  permutations: int = config.default_permutations, seed: int = 0,
                  alpha: float = config.default_lisa_alpha, stream: Sequence[int] = (),
                  threads: int = 1) -> LisaResult:
    z = _deviations(x)
    local_i = lisa(x, weights)

    p_local = np.array(parallel_map(
        lambda i: _conditional_p_value(i, z, weights.w, float(local_i[i]), permutations, seed, stream),
        range(weights.n), threads))

    lag = weights.row_standardized().w @ z
    scale = float(np.max(np.abs(z)))
    clusters = tuple(_quadrant(z[i], lag[i], scale) if p_local[i] <= alpha else Cluster.NotSignificant
                     for i in range(weights.n))
    return LisaResult(order=weights.order, local_i=local_i, p_local=p_local, clusters=clusters, alpha=alpha)


@dataclass(frozen=True)
class ClusterTransition:
    region: str
    from_cluster: Cluster
    to_cluster: Cluster


def lisa_transitions(earlier: LisaResult, later: LisaResult) -> Tuple[List[ClusterTransition], float]:
    """Regions whose cluster label differs between two LISA runs, and their share of all regions."""
    if earlier.order != later.order:
        raise ValueError('LISA results cover different region orders')

    changed = [ClusterTransition(region, before, after)
               for region, before, after in zip(earlier.order, earlier.clusters, later.clusters)
               if before is not after]
    share = len(changed) / len(earlier.order) if earlier.order else 0.0
    return changed, share
