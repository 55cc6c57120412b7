"""
Panel data model: indicators, regions and a dense (year, region, indicator) value cube.

Input files are CSV (UTF-8, `.` decimal point):

- indicators.csv: `id,name,subsystem,direction,unit`, subsystem in {X, Y}, direction in {+, -}
- regions.csv: `id,name,macro_region,lon,lat,neighbors`, neighbors `;`-separated
- values.csv: `year,region,indicator,value`, one row per cell

Orderings follow file order (years are sorted ascending). Loading rejects anything that would leave
a hole in the cube; softer problems (adjacency, coordinates, constant columns) are reported by `validate`.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from coupling_cli.utils import CouplingCliException, read_csv, write_csv

logger = logging.getLogger(__name__)

INDICATORS_HEADER = ['id', 'name', 'subsystem', 'direction', 'unit']
REGIONS_HEADER = ['id', 'name', 'macro_region', 'lon', 'lat', 'neighbors']
VALUES_HEADER = ['year', 'region', 'indicator', 'value']
NEIGHBOR_SEPARATOR = ';'

INDICATORS_FILE_NAME = 'indicators.csv'
REGIONS_FILE_NAME = 'regions.csv'
VALUES_FILE_NAME = 'values.csv'


class CouplingCliPanelLoadException(CouplingCliException):
    def __init__(self, message, path=None, line: Optional[int] = None):
        location = ''
        if path is not None:
            location = f'{path}:{line}: ' if line is not None else f'{path}: '
        super().__init__(location + message)
        self.path = path
        self.line = line


class CouplingCliPanelFormatException(CouplingCliPanelLoadException):
    pass


class CouplingCliMissingCellException(CouplingCliPanelLoadException):
    pass


class CouplingCliDuplicateRowException(CouplingCliPanelLoadException):
    pass


class CouplingCliUnknownRegionIdException(CouplingCliPanelLoadException):
    pass


class CouplingCliUnknownIndicatorIdException(CouplingCliPanelLoadException):
    pass


class CouplingCliNonFiniteValueException(CouplingCliPanelLoadException):
    pass


class Subsystem(Enum):
    X = 'X'  # new-infrastructure indicators
    Y = 'Y'  # digital-transformation indicators


class Direction(Enum):
    positive = '+'
    negative = '-'


class MacroRegion(Enum):
    east = 'east'
    central = 'central'
    west = 'west'
    northeast = 'northeast'


@dataclass(frozen=True)
class IndicatorSpec:
    id: str
    name: str
    subsystem: Subsystem
    direction: Direction
    unit: str = ''


@dataclass(frozen=True)
class RegionSpec:
    id: str
    name: str
    macro_region: MacroRegion
    centroid_lon: float
    centroid_lat: float
    neighbors: Tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class PanelDataset:
    years: Tuple[int, ...]
    regions: Tuple[RegionSpec, ...]
    indicators: Tuple[IndicatorSpec, ...]
    values: np.ndarray  # value[year][region][indicator]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        expected_shape = (len(self.years), len(self.regions), len(self.indicators))
        if values.shape != expected_shape:
            raise CouplingCliPanelFormatException(f'Value cube has shape {values.shape}, expected {expected_shape}')
        values.setflags(write=False)
        object.__setattr__(self, 'years', tuple(int(year) for year in self.years))
        object.__setattr__(self, 'regions', tuple(self.regions))
        object.__setattr__(self, 'indicators', tuple(self.indicators))
        object.__setattr__(self, 'values', values)

    @property
    def region_ids(self) -> List[str]:
        return [region.id for region in self.regions]

    @property
    def indicator_ids(self) -> List[str]:
        return [indicator.id for indicator in self.indicators]

    def region(self, region_id: str) -> RegionSpec:
        for region in self.regions:
            if region.id == region_id:
                return region
        raise KeyError(region_id)

    def subsystem_indices(self, subsystem: Subsystem) -> List[int]:
        return [j for j, indicator in enumerate(self.indicators) if indicator.subsystem is subsystem]

    def to_frame(self) -> pd.DataFrame:
        """Long-form view in file order: year, region, indicator, value."""
        v, m, n = self.values.shape
        return pd.DataFrame({
            'year': np.repeat(self.years, m * n),
            'region': np.tile(np.repeat(self.region_ids, n), v),
            'indicator': np.tile(self.indicator_ids, v * m),
            'value': self.values.reshape(-1),
        })


@dataclass(frozen=True)
class Finding:
    code: str
    location: str
    message: str


@dataclass
class ValidationReport:
    errors: List[Finding] = field(default_factory=list)
    warnings: List[Finding] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.errors


def _check_header(frame: pd.DataFrame, expected: Sequence[str], path) -> None:
    if list(frame.columns) != list(expected):
        raise CouplingCliPanelFormatException(f'expected header "{",".join(expected)}", '
                                              f'found "{",".join(map(str, frame.columns))}"', path, 1)


def _line_number(row_index: int) -> int:
    # The header is line 1
    return row_index + 2


def _parse_float(text: str, what: str, path, row_index: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise CouplingCliPanelFormatException(f'{what} "{text}" is not a number', path, _line_number(row_index))


def _load_indicators(path) -> List[IndicatorSpec]:
    frame = read_csv(path, dtype=str)
    _check_header(frame, INDICATORS_HEADER, path)

    indicators: List[IndicatorSpec] = []
    seen_ids = set()
    for row_index, row in enumerate(frame.itertuples(index=False)):
        indicator_id = row.id.strip()
        if not indicator_id:
            raise CouplingCliPanelFormatException('empty indicator id', path, _line_number(row_index))
        if indicator_id in seen_ids:
            raise CouplingCliPanelFormatException(f'duplicate indicator id "{indicator_id}"',
                                                  path, _line_number(row_index))
        try:
            subsystem = Subsystem(row.subsystem.strip())
            direction = Direction(row.direction.strip())
        except ValueError as e:
            raise CouplingCliPanelFormatException(str(e), path, _line_number(row_index))

        seen_ids.add(indicator_id)
        indicators.append(IndicatorSpec(id=indicator_id, name=row.name, subsystem=subsystem,
                                        direction=direction, unit=row.unit))
    return indicators


def load_regions(path) -> List[RegionSpec]:
    frame = read_csv(path, dtype=str)
    _check_header(frame, REGIONS_HEADER, path)

    regions: List[RegionSpec] = []
    seen_ids = set()
    for row_index, row in enumerate(frame.itertuples(index=False)):
        region_id = row.id.strip()
        if not region_id:
            raise CouplingCliPanelFormatException('empty region id', path, _line_number(row_index))
        if region_id in seen_ids:
            raise CouplingCliPanelFormatException(f'duplicate region id "{region_id}"', path, _line_number(row_index))
        try:
            macro_region = MacroRegion(row.macro_region.strip().lower())
        except ValueError as e:
            raise CouplingCliPanelFormatException(str(e), path, _line_number(row_index))

        neighbors = tuple(neighbor.strip() for neighbor in row.neighbors.split(NEIGHBOR_SEPARATOR) if neighbor.strip())
        seen_ids.add(region_id)
        regions.append(RegionSpec(id=region_id, name=row.name, macro_region=macro_region,
                                  centroid_lon=_parse_float(row.lon, 'lon', path, row_index),
                                  centroid_lat=_parse_float(row.lat, 'lat', path, row_index),
                                  neighbors=neighbors))
    return regions


def _load_values(path, regions: List[RegionSpec], indicators: List[IndicatorSpec]):
    frame = read_csv(path, dtype=str)
    _check_header(frame, VALUES_HEADER, path)

    region_positions = {region.id: i for i, region in enumerate(regions)}
    indicator_positions = {indicator.id: j for j, indicator in enumerate(indicators)}

    rows = []
    seen_cells: Dict[Tuple[int, str, str], int] = {}
    for row_index, row in enumerate(frame.itertuples(index=False)):
        line = _line_number(row_index)
        try:
            year = int(row.year.strip())
        except ValueError:
            raise CouplingCliPanelFormatException(f'year "{row.year}" is not an integer', path, line)
        region_id = row.region.strip()
        indicator_id = row.indicator.strip()
        if region_id not in region_positions:
            raise CouplingCliUnknownRegionIdException(f'unknown region id "{region_id}"', path, line)
        if indicator_id not in indicator_positions:
            raise CouplingCliUnknownIndicatorIdException(f'unknown indicator id "{indicator_id}"', path, line)

        value = _parse_float(row.value.strip(), 'value', path, row_index)
        if not math.isfinite(value):
            raise CouplingCliNonFiniteValueException(f'non-finite value "{row.value}"', path, line)

        cell = (year, region_id, indicator_id)
        if cell in seen_cells:
            raise CouplingCliDuplicateRowException(f'duplicate row for (year, region, indicator) {cell}, '
                                                   f'first seen on line {seen_cells[cell]}', path, line)
        seen_cells[cell] = line
        rows.append((year, region_positions[region_id], indicator_positions[indicator_id], value))

    if not rows:
        raise CouplingCliMissingCellException('no value rows', path)

    years = sorted({year for year, _, _, _ in rows})
    year_positions = {year: t for t, year in enumerate(years)}

    values = np.full((len(years), len(regions), len(indicators)), np.nan)
    for year, i, j, value in rows:
        values[year_positions[year], i, j] = value

    missing = np.argwhere(np.isnan(values))
    if len(missing):
        t, i, j = missing[0]
        raise CouplingCliMissingCellException(
            f'missing cell (year={years[t]}, region={regions[i].id}, indicator={indicators[j].id}); '
            f'{len(missing)} cell(s) missing in total', path)

    return years, values


def load_panel(indicators_path, regions_path, values_path) -> PanelDataset:
    indicators = _load_indicators(indicators_path)
    regions = load_regions(regions_path)
    years, values = _load_values(values_path, regions, indicators)

    dataset = PanelDataset(years=tuple(years), regions=tuple(regions), indicators=tuple(indicators), values=values)
    logger.info(f'Loaded panel: {len(years)} years x {len(regions)} regions x {len(indicators)} indicators')
    return dataset


def validate(ds: PanelDataset) -> ValidationReport:
    report = ValidationReport()
    known_ids = set(ds.region_ids)
    neighbor_sets = {region.id: set(region.neighbors) for region in ds.regions}

    for subsystem in Subsystem:
        if not ds.subsystem_indices(subsystem):
            report.errors.append(Finding('EmptySubsystem', f'subsystem {subsystem.value}',
                                         f'subsystem {subsystem.value} has no indicators'))

    for region in ds.regions:
        if not (-90 <= region.centroid_lat <= 90) or not (-180 <= region.centroid_lon <= 180):
            report.errors.append(Finding('CoordinateOutOfRange', f'region {region.id}',
                                         f'centroid ({region.centroid_lon}, {region.centroid_lat}) out of range'))
        if region.id in neighbor_sets[region.id]:
            report.errors.append(Finding('SelfNeighbor', f'region {region.id}', 'region lists itself as a neighbor'))
        for neighbor in region.neighbors:
            if neighbor == region.id:
                continue
            if neighbor not in known_ids:
                report.errors.append(Finding('UnknownNeighbor', f'region {region.id}',
                                             f'neighbor "{neighbor}" is not a known region'))
            elif region.id not in neighbor_sets[neighbor]:
                report.errors.append(Finding('AsymmetricAdjacency', f'region {region.id}',
                                             f'{region.id} lists {neighbor} as a neighbor, {neighbor} omits {region.id}'))
        if not neighbor_sets[region.id] - {region.id}:
            report.warnings.append(Finding('IslandRegion', f'region {region.id}', 'region has no neighbors'))

    if ds.values.size:
        column_ranges = ds.values.max(axis=(0, 1)) - ds.values.min(axis=(0, 1))
        for indicator, column_range in zip(ds.indicators, column_ranges):
            if column_range == 0:
                report.warnings.append(Finding('ConstantColumn', f'indicator {indicator.id}',
                                               'indicator is constant over all (year, region) cells; '
                                               'it will receive zero weight'))

    return report


def write_panel(ds: PanelDataset, directory) -> Tuple[Path, Path, Path]:
    directory = Path(directory)

    indicators_frame = pd.DataFrame([[indicator.id, indicator.name, indicator.subsystem.value,
                                      indicator.direction.value, indicator.unit]
                                     for indicator in ds.indicators], columns=INDICATORS_HEADER)
    regions_frame = pd.DataFrame([[region.id, region.name, region.macro_region.value, repr(region.centroid_lon),
                                   repr(region.centroid_lat), NEIGHBOR_SEPARATOR.join(region.neighbors)]
                                  for region in ds.regions], columns=REGIONS_HEADER)
    values_frame = ds.to_frame()
    values_frame['value'] = [repr(float(value)) for value in values_frame['value']]

    return (write_csv(indicators_frame, directory / INDICATORS_FILE_NAME, float_format=None),
            write_csv(regions_frame, directory / REGIONS_FILE_NAME, float_format=None),
            write_csv(values_frame, directory / VALUES_FILE_NAME, float_format=None))
