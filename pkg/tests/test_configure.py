from pathlib import Path

import pytest
from conftest import write_run_config

from coupling_cli import config
from coupling_cli.configure import (ALL_REGIONS_FILTER, CouplingCliConfigException, check_years, load_run_config,
                                    parse_run_config)
from coupling_cli.coupling import DVariant
from coupling_cli.panel import MacroRegion
from coupling_cli.spatial import InferenceMethod, WeightsScheme

CONFIG_PATH = Path('/data/study/run.yaml')


def _raw(**overrides):
    raw = {
        'inputs': {'indicators': 'indicators.csv', 'regions': 'regions.csv', 'values': 'panel/values.csv'},
        'spatial': {'seed': 1},
    }
    raw.update(overrides)
    return raw


def test_defaults():
    run_config = parse_run_config(_raw(), CONFIG_PATH)

    assert run_config.values_path == Path('/data/study/panel/values.csv')
    assert run_config.seed == 1
    assert run_config.coupling.alpha == config.default_alpha
    assert run_config.coupling.d_variant is DVariant.literal
    assert run_config.scheme is WeightsScheme.row_standardized
    assert run_config.inference is InferenceMethod.permutation
    assert run_config.permutations == config.default_permutations
    assert run_config.lisa_alpha == config.default_lisa_alpha
    assert [scope.filter_name for scope in run_config.sde_scopes] == [ALL_REGIONS_FILTER]
    assert run_config.sde_years is None
    assert run_config.geojson is True
    assert run_config.threads == 1
    assert run_config.output_dir == Path('/data/study/out')


def test_full_config():
    run_config = parse_run_config(_raw(
        coupling={'alpha': 0.25, 'beta': 0.75, 'd_variant': 'sqrt'},
        spatial={'scheme': 'binary', 'inference': 'normal', 'permutations': 499, 'seed': 9, 'lisa_alpha': 0.1},
        sde={'years': [2021, 2014, 2017, 2014],
             'scopes': [{'label': 'whole_country', 'filter': 'all'}, {'label': 'east', 'filter': 'East'}]},
        geojson=False, threads=4, output_dir='/tmp/report'), CONFIG_PATH)

    assert (run_config.coupling.alpha, run_config.coupling.beta) == (0.25, 0.75)
    assert run_config.coupling.d_variant is DVariant.sqrt
    assert run_config.scheme is WeightsScheme.binary
    assert run_config.inference is InferenceMethod.normal
    assert (run_config.permutations, run_config.seed, run_config.lisa_alpha) == (499, 9, 0.1)
    assert run_config.sde_years == (2014, 2017, 2021)
    assert run_config.sde_scopes[1].region_filter is MacroRegion.east
    assert run_config.sde_scopes[1].label == 'east'
    assert run_config.geojson is False
    assert run_config.threads == 4
    assert run_config.output_dir == Path('/tmp/report')


def test_integer_weights_are_accepted():
    run_config = parse_run_config(_raw(coupling={'alpha': 1, 'beta': 0}), CONFIG_PATH)
    assert run_config.coupling.alpha == 1.0


@pytest.mark.parametrize('overrides, message', [
    ({'colour': 'blue'}, 'unknown key'),
    ({'inputs': {'indicators': 'i.csv', 'regions': 'r.csv'}}, 'inputs.values'),
    ({'spatial': {'permutations': 99}}, 'seed'),
    ({'spatial': {'seed': 'abc'}}, 'spatial.seed'),
    ({'spatial': {'seed': True}}, 'spatial.seed'),
    ({'spatial': {'seed': 1, 'permutations': 0}}, 'permutations'),
    ({'spatial': {'seed': 1, 'lisa_alpha': 1.5}}, 'lisa_alpha'),
    ({'spatial': {'seed': 1, 'scheme': 'knn'}}, 'spatial.scheme'),
    ({'spatial': {'seed': 1, 'bandwidth': 3}}, 'unknown key'),
    ({'coupling': {'alpha': 0.7, 'beta': 0.7}}, 'sum to 1'),
    ({'coupling': {'alpha': -0.5, 'beta': 1.5}}, 'non-negative'),
    ({'coupling': {'d_variant': 'cubic'}}, 'd_variant'),
    ({'sde': {'years': '2014'}}, 'sde.years'),
    ({'sde': {'scopes': []}}, 'sde.scopes'),
    ({'sde': {'scopes': [{'label': 'x', 'filter': 'south'}]}}, 'filter'),
    ({'sde': {'scopes': [{'label': 'x'}, {'label': 'x'}]}}, 'duplicate'),
    ({'threads': 0}, 'threads'),
    ({'geojson': 'yes'}, 'geojson'),
])
def test_invalid_config(overrides, message):
    with pytest.raises(CouplingCliConfigException, match=message) as e:
        parse_run_config(_raw(**overrides), CONFIG_PATH)
    assert str(CONFIG_PATH) in str(e.value)


def test_load_run_config(tmp_path):
    path = write_run_config(tmp_path, spatial={'seed': 3})
    run_config = load_run_config(path)

    assert run_config.config_path == path
    assert run_config.indicators_path == tmp_path / 'indicators.csv'
    assert run_config.seed == 3
    assert run_config.permutations == 99


def test_load_missing_config(tmp_path):
    with pytest.raises(CouplingCliConfigException, match='not found'):
        load_run_config(tmp_path / 'missing.yaml')


def test_load_malformed_yaml(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text('inputs: [unclosed\n', encoding='utf-8')
    with pytest.raises(CouplingCliConfigException, match='YAML'):
        load_run_config(path)


def test_with_output_dir_and_echo():
    run_config = parse_run_config(_raw(sde={'years': [2014]}), CONFIG_PATH).with_output_dir('/elsewhere')
    echo = run_config.to_dict()

    assert run_config.output_dir == Path('/elsewhere')
    assert echo['output_dir'] == '/elsewhere'
    assert echo['spatial']['seed'] == 1
    assert echo['sde'] == {'scopes': [{'label': 'all', 'filter': 'all'}], 'years': [2014]}
    assert set(echo) == {'inputs', 'coupling', 'spatial', 'sde', 'geojson', 'threads', 'output_dir'}


def test_check_years():
    run_config = parse_run_config(_raw(sde={'years': [2014, 2021]}), CONFIG_PATH)
    assert check_years(run_config, (2014, 2017, 2021)) == (2014, 2021)
    with pytest.raises(CouplingCliConfigException, match='2021'):
        check_years(run_config, (2014, 2017))

    run_config = parse_run_config(_raw(), CONFIG_PATH)
    assert check_years(run_config, [2014, 2017]) == (2014, 2017)
