import json
import math
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import pandas as pd

from coupling_cli import config
from coupling_cli.ellipse import DriftSegment, EllipseParams, ellipse_polygon
from coupling_cli.panel import RegionSpec
from coupling_cli.spatial import ClusterTransition, LisaResult, MoranResult
from coupling_cli.utils import CouplingCliIoException

SOURCE_DATE_EPOCH_VARIABLE = 'SOURCE_DATE_EPOCH'
RANDOM_GENERATOR_FAMILY = 'numpy.random.default_rng(SeedSequence(seed, spawn_key=(stage, year index[, region index])))'


@dataclass(frozen=True)
class ScopeEllipse:
    scope: str
    year: int
    params: EllipseParams


@dataclass(frozen=True)
class ScopeDrift:
    scope: str
    segment: DriftSegment


@dataclass
class RunManifest:
    config: Dict[str, Any]
    input_digests: Dict[str, str]
    tool_version: str
    timestamp: str
    random_generator: str = RANDOM_GENERATOR_FAMILY
    row_counts: Dict[str, int] = field(default_factory=dict)
    islands: List[str] = field(default_factory=list)
    # Scope-years and years whose statistics are undefined and were skipped or left empty
    degenerate: List[str] = field(default_factory=list)


def run_timestamp() -> str:
    """UTC timestamp, pinned by SOURCE_DATE_EPOCH when set so that reruns are byte-identical."""
    epoch = os.environ.get(SOURCE_DATE_EPOCH_VARIABLE)
    moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch else datetime.now(tz=timezone.utc)
    return moment.strftime('%Y-%m-%dT%H:%M:%SZ')


def moran_frame(results: Mapping[int, MoranResult]) -> pd.DataFrame:
    return pd.DataFrame([[year, r.i_value, r.expected, r.z, r.p, r.method.value, r.permutations,
                          '' if r.seed is None else r.seed]
                         for year, r in results.items()],
                        columns=['year', 'I', 'expected', 'z', 'p', 'method', 'permutations', 'seed'])


def lisa_frame(results: Mapping[int, LisaResult]) -> pd.DataFrame:
    frames = []
    for year, result in results.items():
        frame = result.to_frame()
        frame.insert(0, 'year', year)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=['year', 'region', 'local_i', 'p', 'cluster'])
    return pd.concat(frames, ignore_index=True)


def lisa_transitions_frame(transitions: Sequence[ClusterTransition], from_year: int, to_year: int) -> pd.DataFrame:
    return pd.DataFrame([[t.region, from_year, to_year, t.from_cluster.value, t.to_cluster.value]
                         for t in transitions],
                        columns=['region', 'from_year', 'to_year', 'from_cluster', 'to_cluster'])


def sde_frame(ellipses: Iterable[ScopeEllipse]) -> pd.DataFrame:
    return pd.DataFrame([[e.scope, e.year, e.params.center_lon, e.params.center_lat, e.params.sigma_x_km,
                          e.params.sigma_y_km, e.params.azimuth_deg, e.params.area_1e4_km2] for e in ellipses],
                        columns=['scope', 'year', 'center_lon', 'center_lat', 'sigma_x_km', 'sigma_y_km',
                                 'azimuth_deg', 'area_1e4_km2'])


def drift_frame(drifts: Iterable[ScopeDrift]) -> pd.DataFrame:
    return pd.DataFrame([[d.scope, d.segment.from_year, d.segment.to_year, d.segment.distance_km,
                          d.segment.bearing_deg, d.segment.speed_km_per_year, d.segment.octant] for d in drifts],
                        columns=['scope', 'from_year', 'to_year', 'distance_km', 'bearing_deg',
                                 'speed_km_per_year', 'octant'])


def _finite_or_none(value) -> Optional[float]:
    # JSON has no NaN
    value = float(value)
    return value if math.isfinite(value) else None


def _feature(geometry: Dict[str, Any], properties: Dict[str, Any]) -> Dict[str, Any]:
    return {'type': 'Feature', 'geometry': geometry, 'properties': properties}


def geojson_collection(ellipses: Sequence[ScopeEllipse], lisa_results: Mapping[int, LisaResult],
                       regions: Sequence[RegionSpec], segments: int = config.ellipse_segments) -> Dict[str, Any]:
    if not ellipses and not lisa_results:
        raise ValueError('Nothing to emit: no ellipses and no LISA classifications')

    features = []
    for ellipse in ellipses:
        ring = [[lon, lat] for lon, lat in ellipse_polygon(ellipse.params, segments)]
        properties = {'kind': 'ellipse', 'scope': ellipse.scope, 'year': ellipse.year}
        properties.update({key: value for key, value in asdict(ellipse.params).items()
                           if key not in ('center_x_km', 'center_y_km')})
        features.append(_feature({'type': 'Polygon', 'coordinates': [ring]}, properties))
        features.append(_feature({'type': 'Point', 'coordinates': [ellipse.params.center_lon,
                                                                   ellipse.params.center_lat]},
                                 {'kind': 'center', 'scope': ellipse.scope, 'year': ellipse.year}))

    region_by_id = {region.id: region for region in regions}
    for year, result in lisa_results.items():
        for region_id, local_i, p, cluster in zip(result.order, result.local_i, result.p_local, result.clusters):
            region = region_by_id[region_id]
            features.append(_feature({'type': 'Point', 'coordinates': [region.centroid_lon, region.centroid_lat]},
                                     {'kind': 'lisa', 'year': year, 'region': region_id, 'cluster': cluster.value,
                                      'local_i': _finite_or_none(local_i), 'p': _finite_or_none(p)}))

    return {'type': 'FeatureCollection', 'features': features}


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as output_file:
            output_file.write(text)
    except OSError as e:
        raise CouplingCliIoException(path, e.strerror or str(e))
    return path


def emit_geojson(path, ellipses: Sequence[ScopeEllipse], lisa_results: Mapping[int, LisaResult],
                 regions: Sequence[RegionSpec]) -> Path:
    collection = geojson_collection(ellipses, lisa_results, regions)
    return _write_text(Path(path), json.dumps(collection) + '\n')


def write_manifest(path, manifest: RunManifest) -> Path:
    return _write_text(Path(path), json.dumps(asdict(manifest), indent=2, sort_keys=True) + '\n')
