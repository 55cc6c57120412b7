"""
Weighted mean center, standard deviational ellipse and centroid drift.

Coordinates are projected to a local equirectangular plane (km) about a reference point:
x = (lon - ref_lon) * K * cos(ref_lat), y = (lat - ref_lat) * K, K = pi * 6371 / 180.
Azimuths are clockwise from true north; the ellipse azimuth points along the major axis and lies in [0, 180).
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from coupling_cli import config
from coupling_cli.utils import CouplingCliException

logger = logging.getLogger(__name__)

OCTANTS = ('N', 'NE', 'E', 'SE', 'S', 'SW', 'W', 'NW')


class CouplingCliZeroTotalWeightException(CouplingCliException):
    pass


class CouplingCliDegenerateCloudException(CouplingCliException):
    pass


class CouplingCliDuplicateYearException(CouplingCliException):
    pass


@dataclass(frozen=True)
class PlanarFrame:
    ref_lon: float = 0.0
    ref_lat: float = 0.0

    def project(self, lon: float, lat: float) -> Tuple[float, float]:
        return project(lon, lat, self.ref_lon, self.ref_lat)

    def unproject(self, x_km: float, y_km: float) -> Tuple[float, float]:
        return unproject(x_km, y_km, self.ref_lon, self.ref_lat)


@dataclass(frozen=True)
class PlanarPoint:
    x_km: float
    y_km: float
    region: str = ''
    weight: float = 1.0


@dataclass(frozen=True)
class MeanCenter:
    x_km: float
    y_km: float
    lon: float
    lat: float


@dataclass(frozen=True)
class EllipseParams:
    center_lon: float
    center_lat: float
    sigma_x_km: float  # major semi-axis
    sigma_y_km: float  # minor semi-axis
    azimuth_deg: float
    area_1e4_km2: float
    center_x_km: float = 0.0
    center_y_km: float = 0.0


@dataclass(frozen=True)
class DriftSegment:
    from_year: int
    to_year: int
    dx_km: float
    dy_km: float
    distance_km: float
    bearing_deg: float
    speed_km_per_year: float
    octant: str
    quadrant: str


def project(lon: float, lat: float, ref_lon: float, ref_lat: float) -> Tuple[float, float]:
    x_km = (lon - ref_lon) * config.km_per_degree * math.cos(math.radians(ref_lat))
    y_km = (lat - ref_lat) * config.km_per_degree
    return x_km, y_km


def unproject(x_km: float, y_km: float, ref_lon: float, ref_lat: float) -> Tuple[float, float]:
    lon = ref_lon + x_km / (config.km_per_degree * math.cos(math.radians(ref_lat)))
    lat = ref_lat + y_km / config.km_per_degree
    return lon, lat


def ellipse_area(sigma_x_km: float, sigma_y_km: float) -> float:
    """Area in units of 10^4 km^2."""
    return math.pi * sigma_x_km * sigma_y_km / config.area_unit_km2


def _arrays(points: Sequence[PlanarPoint]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.array([point.x_km for point in points], dtype=float)
    y = np.array([point.y_km for point in points], dtype=float)
    w = np.array([point.weight for point in points], dtype=float)
    if np.any(w < 0):
        raise ValueError('Point weights must be non-negative')
    if w.size == 0 or w.sum() <= 0:
        raise CouplingCliZeroTotalWeightException('Total point weight is zero')
    return x, y, w


def mean_center(points: Sequence[PlanarPoint], frame: PlanarFrame = PlanarFrame()) -> MeanCenter:
    x, y, w = _arrays(points)
    total = w.sum()
    x_km = float(np.dot(w, x) / total)
    y_km = float(np.dot(w, y) / total)
    lon, lat = frame.unproject(x_km, y_km)
    return MeanCenter(x_km=x_km, y_km=y_km, lon=lon, lat=lat)


def sde(points: Sequence[PlanarPoint], frame: PlanarFrame = PlanarFrame()) -> EllipseParams:
    """
    Weighted one-standard-deviation ellipse.

    The deviation second moments (weight-normalized, no small-sample correction) give the major axis
    direction through tan(2*phi) = 2*sxy / (sxx - syy); the semi-axes are the square roots of the
    variances along the rotated axes. Isotropic clouds report azimuth 0.
    """
    center = mean_center(points, frame)
    x, y, w = _arrays(points)
    total = w.sum()
    dx = x - center.x_km
    dy = y - center.y_km

    sxx = float(np.dot(w, dx * dx) / total)
    syy = float(np.dot(w, dy * dy) / total)
    sxy = float(np.dot(w, dx * dy) / total)
    spread = sxx + syy
    if spread <= config.isotropy_tolerance ** 2 * max(1.0, center.x_km ** 2 + center.y_km ** 2):
        raise CouplingCliDegenerateCloudException('All weighted points coincide')

    half_difference = 0.5 * (sxx - syy)
    radius = math.hypot(half_difference, sxy)
    major_variance = 0.5 * spread + radius
    minor_variance = max(0.5 * spread - radius, 0.0)

    if radius <= config.isotropy_tolerance * spread:
        azimuth = 0.0
    else:
        # Major axis angle counterclockwise from east
        phi = 0.5 * math.degrees(math.atan2(2 * sxy, sxx - syy))
        azimuth = (90.0 - phi) % 180.0
        if azimuth >= 180.0:
            azimuth = 0.0

    sigma_x = math.sqrt(major_variance)
    sigma_y = math.sqrt(minor_variance)
    return EllipseParams(center_lon=center.lon, center_lat=center.lat, sigma_x_km=sigma_x, sigma_y_km=sigma_y,
                         azimuth_deg=azimuth, area_1e4_km2=ellipse_area(sigma_x, sigma_y),
                         center_x_km=center.x_km, center_y_km=center.y_km)


def compass_octant(bearing_deg: float) -> str:
    return OCTANTS[int(((bearing_deg + 22.5) % 360.0) // 45.0)]


def compass_quadrant(dx_km: float, dy_km: float) -> str:
    return ('N' if dy_km >= 0 else 'S') + ('E' if dx_km >= 0 else 'W')


def centroid_drift(centers: Sequence[Tuple[int, float, float]]) -> List[DriftSegment]:
    """
    Drift between consecutive (year, lon, lat) centers. Each later center is projected about the earlier one.
    """
    years = [year for year, _, _ in centers]
    duplicates = sorted({year for year in years if years.count(year) > 1})
    if duplicates:
        raise CouplingCliDuplicateYearException(f'Duplicate center years: {duplicates}')

    ordered = sorted(centers)
    segments = []
    for (from_year, from_lon, from_lat), (to_year, to_lon, to_lat) in zip(ordered, ordered[1:]):
        dx_km, dy_km = project(to_lon, to_lat, from_lon, from_lat)
        distance = math.hypot(dx_km, dy_km)
        bearing = math.degrees(math.atan2(dx_km, dy_km)) % 360.0
        segments.append(DriftSegment(from_year=from_year, to_year=to_year, dx_km=dx_km, dy_km=dy_km,
                                     distance_km=distance, bearing_deg=bearing,
                                     speed_km_per_year=distance / (to_year - from_year),
                                     octant=compass_octant(bearing), quadrant=compass_quadrant(dx_km, dy_km)))
    return segments


def ellipse_polygon(params: EllipseParams, segments: int = config.ellipse_segments) -> List[Tuple[float, float]]:
    """Closed (lon, lat) ring of `segments` edges, built in a plane centred on the ellipse."""
    frame = PlanarFrame(params.center_lon, params.center_lat)
    azimuth = math.radians(params.azimuth_deg)
    major = np.array([math.sin(azimuth), math.cos(azimuth)])
    minor = np.array([math.cos(azimuth), -math.sin(azimuth)])

    angles = np.linspace(0.0, 2 * math.pi, segments, endpoint=False)
    ring = [frame.unproject(*(params.sigma_x_km * math.cos(t) * major + params.sigma_y_km * math.sin(t) * minor))
            for t in angles]
    ring.append(ring[0])
    return ring
