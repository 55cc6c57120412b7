from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import yaml

from coupling_cli import config
from coupling_cli.coupling import CouplingConfig, CouplingCliOutOfRangeException, DVariant
from coupling_cli.panel import MacroRegion
from coupling_cli.spatial import InferenceMethod, WeightsScheme
from coupling_cli.utils import CouplingCliException, CouplingCliIoException

ALL_REGIONS_FILTER = 'all'

TOP_LEVEL_KEYS = {'inputs', 'coupling', 'spatial', 'sde', 'geojson', 'threads', 'output_dir'}
INPUT_KEYS = {'indicators', 'regions', 'values'}
COUPLING_KEYS = {'alpha', 'beta', 'd_variant'}
SPATIAL_KEYS = {'scheme', 'inference', 'permutations', 'seed', 'lisa_alpha'}
SDE_KEYS = {'scopes', 'years'}
SCOPE_KEYS = {'label', 'filter'}


class CouplingCliConfigException(CouplingCliException):
    pass


@dataclass(frozen=True)
class SdeScope:
    label: str
    region_filter: Union[str, MacroRegion] = ALL_REGIONS_FILTER

    @property
    def filter_name(self) -> str:
        return self.region_filter.value if isinstance(self.region_filter, MacroRegion) else self.region_filter


@dataclass(frozen=True)
class RunConfig:
    indicators_path: Path
    regions_path: Path
    values_path: Path
    seed: int
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    scheme: WeightsScheme = WeightsScheme.row_standardized
    inference: InferenceMethod = InferenceMethod.permutation
    permutations: int = config.default_permutations
    lisa_alpha: float = config.default_lisa_alpha
    sde_scopes: Tuple[SdeScope, ...] = (SdeScope(ALL_REGIONS_FILTER),)
    sde_years: Optional[Tuple[int, ...]] = None  # None: every panel year
    geojson: bool = True
    threads: int = config.default_threads
    output_dir: Path = Path('out')
    config_path: Optional[Path] = None

    def with_output_dir(self, output_dir) -> 'RunConfig':
        return replace(self, output_dir=Path(output_dir))

    def to_dict(self) -> Dict[str, Any]:
        """Echo in the config file's own schema (used by the run manifest)."""
        return {
            'inputs': {'indicators': str(self.indicators_path), 'regions': str(self.regions_path),
                       'values': str(self.values_path)},
            'coupling': {'alpha': self.coupling.alpha, 'beta': self.coupling.beta,
                         'd_variant': self.coupling.d_variant.value},
            'spatial': {'scheme': self.scheme.value, 'inference': self.inference.value,
                        'permutations': self.permutations, 'seed': self.seed, 'lisa_alpha': self.lisa_alpha},
            'sde': {'scopes': [{'label': scope.label, 'filter': scope.filter_name} for scope in self.sde_scopes],
                    'years': list(self.sde_years) if self.sde_years is not None else None},
            'geojson': self.geojson,
            'threads': self.threads,
            'output_dir': str(self.output_dir),
        }


def _fail(path, message):
    raise CouplingCliConfigException(f'{path}: {message}')


def _section(raw: Dict[str, Any], key: str, allowed_keys, path) -> Dict[str, Any]:
    section = raw.get(key) or {}
    if not isinstance(section, dict):
        _fail(path, f'"{key}" must be a mapping')
    unknown = set(section) - allowed_keys
    if unknown:
        _fail(path, f'unknown key(s) in "{key}": {sorted(unknown)}')
    return section


def _typed(section: Dict[str, Any], key: str, expected_type, default, path, where: str):
    value = section.get(key, default)
    # bool is an int subclass; never accept it for numbers
    if isinstance(value, bool) and expected_type is not bool:
        _fail(path, f'"{where}.{key}" must be {expected_type.__name__}')
    if expected_type is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, expected_type):
        _fail(path, f'"{where}.{key}" must be {expected_type.__name__}, got {value!r}')
    return value


def _enum(enum_type, value, path, where: str):
    try:
        return enum_type(value)
    except ValueError:
        _fail(path, f'"{where}" must be one of {[member.value for member in enum_type]}, got {value!r}')


def _parse_scopes(raw_scopes, path) -> Tuple[SdeScope, ...]:
    if raw_scopes is None:
        return (SdeScope(ALL_REGIONS_FILTER),)
    if not isinstance(raw_scopes, list) or not raw_scopes:
        _fail(path, '"sde.scopes" must be a non-empty list')

    scopes = []
    for raw_scope in raw_scopes:
        if not isinstance(raw_scope, dict) or set(raw_scope) - SCOPE_KEYS or 'label' not in raw_scope:
            _fail(path, f'each SDE scope needs "label" and optional "filter", got {raw_scope!r}')
        region_filter = str(raw_scope.get('filter', ALL_REGIONS_FILTER)).lower()
        if region_filter != ALL_REGIONS_FILTER:
            region_filter = _enum(MacroRegion, region_filter, path, 'sde.scopes.filter')
        scopes.append(SdeScope(label=str(raw_scope['label']), region_filter=region_filter))

    labels = [scope.label for scope in scopes]
    if len(set(labels)) != len(labels):
        _fail(path, f'duplicate SDE scope labels: {labels}')
    return tuple(scopes)


def parse_run_config(raw: Dict[str, Any], path: Path) -> RunConfig:
    if not isinstance(raw, dict):
        _fail(path, 'top level must be a mapping')
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        _fail(path, f'unknown key(s): {sorted(unknown)}')

    base_dir = path.parent
    inputs = _section(raw, 'inputs', INPUT_KEYS, path)
    input_paths = {}
    for key in sorted(INPUT_KEYS):
        if key not in inputs:
            _fail(path, f'missing "inputs.{key}"')
        input_paths[key] = base_dir / _typed(inputs, key, str, None, path, 'inputs')

    coupling_section = _section(raw, 'coupling', COUPLING_KEYS, path)
    try:
        coupling_config = CouplingConfig(
            alpha=_typed(coupling_section, 'alpha', float, config.default_alpha, path, 'coupling'),
            beta=_typed(coupling_section, 'beta', float, config.default_beta, path, 'coupling'),
            d_variant=_enum(DVariant, coupling_section.get('d_variant', DVariant.literal.value), path,
                            'coupling.d_variant'))
    except CouplingCliOutOfRangeException as e:
        _fail(path, str(e))

    spatial = _section(raw, 'spatial', SPATIAL_KEYS, path)
    if 'seed' not in spatial:
        _fail(path, '"spatial.seed" is mandatory (LISA inference always permutes)')
    seed = _typed(spatial, 'seed', int, None, path, 'spatial')
    permutations = _typed(spatial, 'permutations', int, config.default_permutations, path, 'spatial')
    if permutations < 1:
        _fail(path, '"spatial.permutations" must be at least 1')
    lisa_alpha = _typed(spatial, 'lisa_alpha', float, config.default_lisa_alpha, path, 'spatial')
    if not 0 < lisa_alpha < 1:
        _fail(path, '"spatial.lisa_alpha" must lie in (0, 1)')

    sde_section = _section(raw, 'sde', SDE_KEYS, path)
    raw_years = sde_section.get('years')
    if raw_years is not None:
        if not isinstance(raw_years, list) or not all(isinstance(y, int) and not isinstance(y, bool)
                                                      for y in raw_years):
            _fail(path, '"sde.years" must be a list of integer years')
        raw_years = tuple(sorted(set(raw_years)))

    threads = _typed(raw, 'threads', int, config.default_threads, path, 'config')
    if threads < 1:
        _fail(path, '"threads" must be at least 1')

    return RunConfig(
        indicators_path=input_paths['indicators'],
        regions_path=input_paths['regions'],
        values_path=input_paths['values'],
        seed=seed,
        coupling=coupling_config,
        scheme=_enum(WeightsScheme, spatial.get('scheme', WeightsScheme.row_standardized.value), path,
                     'spatial.scheme'),
        inference=_enum(InferenceMethod, spatial.get('inference', InferenceMethod.permutation.value), path,
                        'spatial.inference'),
        permutations=permutations,
        lisa_alpha=lisa_alpha,
        sde_scopes=_parse_scopes(sde_section.get('scopes'), path),
        sde_years=raw_years,
        geojson=_typed(raw, 'geojson', bool, True, path, 'config'),
        threads=threads,
        output_dir=base_dir / _typed(raw, 'output_dir', str, 'out', path, 'config'),
        config_path=path,
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, encoding='utf-8') as configuration_file:
            raw = yaml.safe_load(configuration_file)
    except FileNotFoundError:
        raise CouplingCliConfigException(f'{path}: configuration file not found')
    except OSError as e:
        raise CouplingCliIoException(path, e.strerror or str(e))
    except yaml.YAMLError as e:
        raise CouplingCliConfigException(f'{path}: cannot parse YAML ({e})')

    return parse_run_config(raw or {}, path)


def check_years(run_config: RunConfig, panel_years: Sequence[int]) -> Tuple[int, ...]:
    """SDE reporting years, all of which must exist in the panel."""
    if run_config.sde_years is None:
        return tuple(panel_years)
    missing = sorted(set(run_config.sde_years) - set(panel_years))
    if missing:
        raise CouplingCliConfigException(f'{run_config.config_path}: SDE years {missing} are not in the panel')
    return run_config.sde_years
