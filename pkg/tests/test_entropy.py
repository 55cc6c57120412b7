import math

import numpy as np
import pytest
from conftest import grid_regions, indicator_specs, random_dataset

from coupling_cli.entropy import (CouplingCliAllColumnsUninformativeException, CouplingCliDegenerateLogException,
                                  CouplingCliDimensionMismatchException, CouplingCliEmptySubsystemException,
                                  composite_index, compute_index_series, entropy, national_means, normalize,
                                  proportions, subsystem_weights, weights)
from coupling_cli.panel import PanelDataset, Subsystem


def _column_dataset(column, negative=False):
    """One year, one region per value; y1 mirrors x1 so both subsystems are populated."""
    column = np.asarray(column, dtype=float)
    values = np.stack([column, column], axis=-1)[np.newaxis]
    return PanelDataset(years=(2020,), regions=grid_regions(1, len(column)),
                        indicators=indicator_specs(1, 1, negative=('x1',) if negative else ()), values=values)


@pytest.mark.parametrize('column, negative, expected', [
    ([1, 3], False, [0, 1]),
    ([1, 3], True, [1, 0]),
    ([2, 2], False, [1, 1]),
    ([1, 2, 5], False, [0, 0.25, 1]),
])
def test_normalize(column, negative, expected):
    normalized = normalize(_column_dataset(column, negative), Subsystem.X)
    np.testing.assert_allclose(normalized.z[0, :, 0], expected)
    assert normalized.bounds.x_min[0] == min(column)
    assert normalized.bounds.x_max[0] == max(column)


def test_normalize_pools_years_and_regions():
    dataset = random_dataset(3)
    normalized = normalize(dataset, Subsystem.Y)
    z = normalized.z

    assert z.shape == (3, 12, 3)
    np.testing.assert_allclose(z.min(axis=(0, 1)), 0.0)
    np.testing.assert_allclose(z.max(axis=(0, 1)), 1.0)
    assert [indicator.id for indicator in normalized.indicators] == ['y1', 'y2', 'y3']


def test_normalize_empty_subsystem():
    dataset = PanelDataset(years=(2020,), regions=grid_regions(1, 2), indicators=indicator_specs(2, 0),
                           values=np.ones((1, 2, 2)))
    with pytest.raises(CouplingCliEmptySubsystemException):
        normalize(dataset, Subsystem.Y)


@pytest.mark.parametrize('column, expected', [
    ([0, 1], [0, 1]),
    ([1, 1], [0.5, 0.5]),
    ([0.25, 0.75], [0.25, 0.75]),
])
def test_proportions(column, expected):
    normalized = normalize(_column_dataset([0, 1]), Subsystem.X)
    normalized = type(normalized)(subsystem=Subsystem.X, indicators=normalized.indicators,
                                  z=np.array(column, dtype=float).reshape(1, -1, 1), bounds=normalized.bounds)
    np.testing.assert_allclose(proportions(normalized)[0, :, 0], expected)


@pytest.mark.parametrize('s, v, m, expected', [
    ([0.25, 0.25, 0.25, 0.25], 2, 2, 1.0),
    ([0.0, 1.0], 1, 2, 0.0),
    ([0.25, 0.75], 1, 2, -(0.25 * math.log(0.25) + 0.75 * math.log(0.75)) / math.log(2)),
])
def test_entropy(s, v, m, expected):
    s = np.array(s).reshape(v, m, 1)
    assert entropy(s, v, m)[0] == pytest.approx(expected, abs=1e-12)


def test_entropy_single_cell():
    with pytest.raises(CouplingCliDegenerateLogException):
        entropy(np.ones((1, 1, 1)), 1, 1)


@pytest.mark.parametrize('e, expected', [
    ([0.0, 1.0], [1.0, 0.0]),
    ([0.5, 0.5], [0.5, 0.5]),
    ([0.2, 0.6, 0.8], [4 / 7, 2 / 7, 1 / 7]),
])
def test_weights(e, expected):
    result = weights(e)
    np.testing.assert_allclose(result.weight, expected)
    np.testing.assert_allclose(result.divergence, 1 - np.array(e))


def test_weights_all_uninformative():
    with pytest.raises(CouplingCliAllColumnsUninformativeException):
        weights([1.0, 1.0])


def test_composite_index():
    normalized = normalize(_column_dataset([0, 1]), Subsystem.X)
    z = np.array([[[0.0, 1.0], [1.0, 1.0], [0.0, 0.0]]])
    normalized = type(normalized)(subsystem=None, indicators=(), z=z, bounds=normalized.bounds)

    np.testing.assert_allclose(composite_index(normalized, weights([0.5, 0.5])), [[0.5, 1.0, 0.0]])

    with pytest.raises(CouplingCliDimensionMismatchException):
        composite_index(normalized, weights([0.5, 0.5, 0.5]))


def test_constant_column_gets_zero_weight():
    dataset = _column_dataset([1, 2, 3])
    values = np.concatenate([dataset.values[..., :1], np.full((1, 3, 1), 7.0), dataset.values[..., 1:]], axis=-1)
    dataset = PanelDataset(years=dataset.years, regions=dataset.regions, indicators=indicator_specs(2, 1),
                           values=values)
    _, w = subsystem_weights(dataset, Subsystem.X)

    assert w.entropy[1] == 1.0
    assert w.divergence[1] == 0.0
    assert w.weight.tolist() == pytest.approx([1.0, 0.0])
    assert w.indicator_ids == ('x1', 'x2')
    np.testing.assert_allclose(w.proportion_sum_check, 1.0)


def test_all_constant_subsystem_is_uninformative():
    # 21 cells: rounding alone leaves E just below 1
    rng = np.random.default_rng(8)
    values = np.concatenate([np.full((3, 7, 1), 0.1), np.full((3, 7, 1), 0.7), rng.uniform(1, 9, size=(3, 7, 2))],
                            axis=-1)
    dataset = PanelDataset(years=(2019, 2020, 2021), regions=grid_regions(1, 7), indicators=indicator_specs(2, 2),
                           values=values)

    with pytest.raises(CouplingCliAllColumnsUninformativeException):
        subsystem_weights(dataset, Subsystem.X)
    with pytest.raises(CouplingCliAllColumnsUninformativeException):
        compute_index_series(dataset)
    _, w = subsystem_weights(dataset, Subsystem.Y)
    assert w.weight.sum() == pytest.approx(1.0)


@pytest.mark.parametrize('seed', range(5))
def test_weights_sum_to_one(seed):
    series = compute_index_series(random_dataset(seed, negative=('x2', 'y1')))
    for w in (series.weights_x, series.weights_y):
        assert w.weight.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(w.weight >= 0)
        assert np.all((w.entropy >= 0) & (w.entropy <= 1))
    assert np.all((series.f >= 0) & (series.f <= 1))
    assert np.all((series.g >= 0) & (series.g <= 1))


def test_identical_subsystems_give_equal_levels():
    dataset = random_dataset(4)
    values = dataset.values.copy()
    values[..., 3:] = values[..., :3]
    series = compute_index_series(PanelDataset(years=dataset.years, regions=dataset.regions,
                                               indicators=dataset.indicators, values=values))
    np.testing.assert_allclose(series.f, series.g, atol=1e-15)


def test_scale_invariance():
    dataset = random_dataset(5)
    scaled = dataset.values * np.array([3.0, 0.01, 250.0, 1.0, 42.0, 0.5])
    reference = compute_index_series(dataset)
    series = compute_index_series(PanelDataset(years=dataset.years, regions=dataset.regions,
                                               indicators=dataset.indicators, values=scaled))

    np.testing.assert_allclose(series.weights_x.weight, reference.weights_x.weight, atol=1e-12)
    np.testing.assert_allclose(series.f, reference.f, atol=1e-12)
    np.testing.assert_allclose(series.g, reference.g, atol=1e-12)


def test_monotone_in_interior_value():
    dataset = random_dataset(6)
    _, w = subsystem_weights(dataset, Subsystem.X)
    normalized = normalize(dataset, Subsystem.X)
    x = normalized.z.copy()

    # An interior cell of x1, so the pooled bounds stay put
    t, i = np.argwhere((x[..., 0] > 0) & (x[..., 0] < 0.9))[0]
    before = composite_index(normalized, w)[t, i]
    x[t, i, 0] = min(1.0, x[t, i, 0] + 0.1)
    raised = type(normalized)(subsystem=Subsystem.X, indicators=normalized.indicators, z=x,
                              bounds=normalized.bounds)
    assert composite_index(raised, w)[t, i] >= before


def test_two_region_worked_example():
    # x1 = [1, 3]: z = [0, 1]; x2 = [4, 4] constant: z = [1, 1], E = 1
    values = np.array([[[1.0, 4.0, 2.0, 6.0], [3.0, 4.0, 5.0, 6.5]]])
    dataset = PanelDataset(years=(2020,), regions=grid_regions(1, 2), indicators=indicator_specs(), values=values)
    series = compute_index_series(dataset)

    # x1 proportions [0, 1] give E = 0, so W = [1, 0] and f equals x1's z
    np.testing.assert_allclose(series.weights_x.weight, [1.0, 0.0])
    np.testing.assert_allclose(series.f, [[0.0, 1.0]])
    # y1 and y2 are both [0, 1] after normalization: equal weights, g = [0, 1]
    np.testing.assert_allclose(series.weights_y.weight, [0.5, 0.5])
    np.testing.assert_allclose(series.g, [[0.0, 1.0]])


def _straight_line_levels(x, directions):
    """Independent loop-by-loop evaluation of normalization, proportions, entropy, weights and levels."""
    v, m, n = x.shape
    z = np.zeros_like(x)
    for j in range(n):
        cells = [x[t][i][j] for t in range(v) for i in range(m)]
        low, high = min(cells), max(cells)
        for t in range(v):
            for i in range(m):
                if high == low:
                    z[t][i][j] = 1.0
                elif directions[j] == '+':
                    z[t][i][j] = (x[t][i][j] - low) / (high - low)
                else:
                    z[t][i][j] = (high - x[t][i][j]) / (high - low)

    e = []
    for j in range(n):
        total = sum(z[t][i][j] for t in range(v) for i in range(m))
        acc = 0.0
        for t in range(v):
            for i in range(m):
                s = z[t][i][j] / total
                if s > 0:
                    acc += s * math.log(s)
        e.append(-acc / math.log(v * m))
    d = [1 - e_j for e_j in e]
    w = [d_j / sum(d) for d_j in d]

    levels = np.zeros((v, m))
    for t in range(v):
        for i in range(m):
            levels[t][i] = sum(w[j] * z[t][i][j] for j in range(n))
    return np.array(w), levels


@pytest.mark.parametrize('seed', range(100))
def test_matches_straight_line_evaluation(seed):
    rng = np.random.default_rng(seed)
    negative = tuple(indicator_id for indicator_id in ('x1', 'x2', 'x3', 'y1', 'y2', 'y3') if rng.random() < 0.3)
    dataset = random_dataset(seed, years=(2019, 2020, 2021), regions=grid_regions(1, 3), negative=negative)
    series = compute_index_series(dataset)

    for subsystem, w, level in ((Subsystem.X, series.weights_x, series.f), (Subsystem.Y, series.weights_y, series.g)):
        indices = dataset.subsystem_indices(subsystem)
        directions = [dataset.indicators[j].direction.value for j in indices]
        expected_w, expected_level = _straight_line_levels(dataset.values[:, :, indices], directions)
        np.testing.assert_allclose(w.weight, expected_w, rtol=0, atol=1e-12)
        np.testing.assert_allclose(level, expected_level, rtol=0, atol=1e-12)


def test_national_means(two_region_dataset):
    series = compute_index_series(two_region_dataset)
    frame = national_means(series)

    assert list(frame.columns) == ['year', 'f', 'g']
    assert frame['year'].tolist() == [2020, 2021]
    np.testing.assert_allclose(frame['f'], series.f.mean(axis=1))
    np.testing.assert_allclose(frame['g'], series.g.mean(axis=1))


def test_frames(two_region_dataset):
    series = compute_index_series(two_region_dataset)

    frame = series.to_frame()
    assert list(frame.columns) == ['year', 'region', 'f', 'g']
    assert frame[['year', 'region']].values.tolist() == [[2020, 'a'], [2020, 'b'], [2021, 'a'], [2021, 'b']]

    weights_frame = series.weights_y.to_frame()
    assert list(weights_frame.columns) == ['subsystem', 'indicator', 'entropy', 'divergence', 'weight']
    assert weights_frame['subsystem'].tolist() == ['Y', 'Y']
    assert weights_frame['indicator'].tolist() == ['y1', 'y2']
