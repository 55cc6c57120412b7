from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml

from coupling_cli import config
from coupling_cli.coupling import CouplingRecord, classify
from coupling_cli.panel import (Direction, IndicatorSpec, MacroRegion, PanelDataset, RegionSpec, Subsystem,
                                load_regions, write_panel)

DATA_DIR = Path(__file__).parent / 'data'


def grid_regions(rows, cols, macro_region=MacroRegion.east, lon0=100.0, lat0=30.0):
    """Queen-contiguity grid, one degree between neighboring cells, row-major order."""
    def region_id(r, c):
        return f'r{r}c{c}'

    regions = []
    for r in range(rows):
        for c in range(cols):
            neighbors = tuple(region_id(r + dr, c + dc)
                              for dr in (-1, 0, 1) for dc in (-1, 0, 1)
                              if (dr or dc) and 0 <= r + dr < rows and 0 <= c + dc < cols)
            regions.append(RegionSpec(id=region_id(r, c), name=region_id(r, c), macro_region=macro_region,
                                      centroid_lon=lon0 + c, centroid_lat=lat0 + r, neighbors=neighbors))
    return tuple(regions)


def indicator_specs(n_x=2, n_y=2, negative=()):
    specs = []
    for subsystem, count in ((Subsystem.X, n_x), (Subsystem.Y, n_y)):
        for k in range(count):
            indicator_id = f'{subsystem.value.lower()}{k + 1}'
            direction = Direction.negative if indicator_id in negative else Direction.positive
            specs.append(IndicatorSpec(id=indicator_id, name=indicator_id, subsystem=subsystem, direction=direction))
    return tuple(specs)


def random_dataset(seed, years=(2019, 2020, 2021), regions=None, n_x=3, n_y=3, negative=()):
    regions = regions if regions is not None else grid_regions(3, 4)
    indicators = indicator_specs(n_x, n_y, negative)
    rng = np.random.default_rng(seed)
    values = rng.uniform(1.0, 100.0, size=(len(years), len(regions), len(indicators)))
    return PanelDataset(years=years, regions=regions, indicators=indicators, values=values)


def write_run_config(directory, **overrides):
    """Writes run.yaml next to panel files already in `directory` and returns its path."""
    raw = {
        'inputs': {'indicators': 'indicators.csv', 'regions': 'regions.csv', 'values': 'values.csv'},
        'spatial': {'seed': 7, 'permutations': 99},
        'output_dir': 'out',
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key] = {**raw[key], **value}
        else:
            raw[key] = value

    path = Path(directory) / 'run.yaml'
    path.write_text(yaml.safe_dump(raw), encoding='utf-8')
    return path


@pytest.fixture
def two_region_dataset():
    """Two mutually adjacent regions, two years; neither region is the minimum on every indicator."""
    regions = (
        RegionSpec(id='a', name='Alpha', macro_region=MacroRegion.east, centroid_lon=110.0, centroid_lat=30.0,
                   neighbors=('b',)),
        RegionSpec(id='b', name='Beta', macro_region=MacroRegion.east, centroid_lon=112.0, centroid_lat=31.0,
                   neighbors=('a',)),
    )
    values = np.array([
        # x1, x2, y1, y2
        [[1.0, 30.0, 0.4, 5.0], [3.0, 10.0, 0.1, 7.0]],
        [[2.0, 40.0, 0.9, 6.0], [5.0, 20.0, 0.2, 9.0]],
    ])
    return PanelDataset(years=(2020, 2021), regions=regions, indicators=indicator_specs(), values=values)


@pytest.fixture
def grid_dataset():
    return random_dataset(11, regions=grid_regions(4, 4))


@pytest.fixture
def panel_dir(tmp_path, two_region_dataset):
    write_panel(two_region_dataset, tmp_path)
    return tmp_path


@pytest.fixture
def run_config_path(panel_dir):
    return write_run_config(panel_dir)


@pytest.fixture
def province_d():
    """Coordination degree D per province (rows) and year (columns), 2014-2021."""
    frame = pd.read_csv(DATA_DIR / 'province_coordination.csv', index_col='region')
    frame.columns = [int(year) for year in frame.columns]
    return frame


@pytest.fixture
def province_records(province_d):
    return [CouplingRecord(year=year, region=region, f=0.0, g=0.0, c=0.0, t=0.0, d=float(d), stage=classify(d))
            for year in province_d.columns for region, d in province_d[year].items()]


@pytest.fixture
def province_ellipses():
    return pd.read_csv(DATA_DIR / 'province_ellipses.csv')


@pytest.fixture
def china_regions():
    return load_regions(config.bundled_regions_path)
