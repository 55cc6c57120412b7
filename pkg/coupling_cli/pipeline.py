import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from coupling_cli import __version__, config
from coupling_cli.configure import ALL_REGIONS_FILTER, RunConfig, SdeScope, check_years
from coupling_cli.coupling import (CouplingRecord, YearStats, couple_series, d_matrix, rank_regions, records_frame,
                                   region_aggregate, stage_counts, year_stats, year_stats_frame)
from coupling_cli.ellipse import (CouplingCliDegenerateCloudException, CouplingCliZeroTotalWeightException,
                                   PlanarFrame, PlanarPoint, centroid_drift, sde)
from coupling_cli.entropy import IndexSeries, compute_index_series, national_means
from coupling_cli.panel import PanelDataset, ValidationReport, load_panel, validate
from coupling_cli.report import (RunManifest, ScopeDrift, ScopeEllipse, drift_frame, emit_geojson, lisa_frame,
                                 lisa_transitions_frame, moran_frame, run_timestamp, sde_frame, write_manifest)
from coupling_cli.spatial import (CouplingCliEmptyWeightsException, CouplingCliZeroVarianceException, LisaResult,
                                  MoranResult, SpatialWeights, build_weights, lisa_classify, lisa_transitions,
                                  morans_inference)
from coupling_cli.utils import CouplingCliException, file_digest, parallel_map, write_csv

logger = logging.getLogger(__name__)

# spawn_key prefixes that keep the random streams of different stages apart
MORAN_STREAM = 1
LISA_STREAM = 2


class CouplingCliValidationFailedException(CouplingCliException):
    def __init__(self, report: ValidationReport):
        super().__init__(f'Input validation failed with {len(report.errors)} error(s): '
                         + '; '.join(f'{e.code} at {e.location}' for e in report.errors))
        self.report = report


@dataclass
class PipelineResult:
    manifest: RunManifest
    dataset: PanelDataset
    validation: ValidationReport
    series: IndexSeries
    records: List[CouplingRecord]
    stats: List[YearStats]
    moran: Dict[int, MoranResult]
    lisa: Dict[int, LisaResult]
    ellipses: List[ScopeEllipse]
    drifts: List[ScopeDrift]
    degenerate: List[str]


def load_and_validate(run_config: RunConfig) -> Tuple[PanelDataset, ValidationReport]:
    dataset = load_panel(run_config.indicators_path, run_config.regions_path, run_config.values_path)
    report = validate(dataset)
    for warning in report.warnings:
        logger.warning(f'{warning.code} at {warning.location}: {warning.message}')
    for error in report.errors:
        logger.error(f'{error.code} at {error.location}: {error.message}')
    return dataset, report


def _spatial_year(args) -> Tuple[MoranResult, LisaResult, List[str]]:
    t, year, x, weights, run_config = args
    try:
        moran = morans_inference(x, weights, run_config.inference, run_config.permutations, run_config.seed,
                                 stream=(MORAN_STREAM, t))
        lisa = lisa_classify(x, weights, run_config.permutations, run_config.seed, run_config.lisa_alpha,
                             stream=(LISA_STREAM, t))
    except (CouplingCliZeroVarianceException, CouplingCliEmptyWeightsException) as e:
        logger.warning(f'Spatial statistics undefined for {year}: {e}')
        return (MoranResult.undefined(weights.n, run_config.inference),
                LisaResult.undefined(weights.order, run_config.lisa_alpha), [f'spatial {year}: {e}'])
    return moran, lisa, []


def spatial_statistics(d: np.ndarray, years: Sequence[int], weights: SpatialWeights, run_config: RunConfig) \
        -> Tuple[Dict[int, MoranResult], Dict[int, LisaResult], List[str]]:
    results = parallel_map(_spatial_year, [(t, year, d[t], weights, run_config) for t, year in enumerate(years)],
                           run_config.threads)
    moran = {year: result[0] for year, result in zip(years, results)}
    lisa = {year: result[1] for year, result in zip(years, results)}
    notes = [note for result in results for note in result[2]]
    for year, result in moran.items():
        logger.debug(f'{year}: Moran\'s I={result.i_value:.4f} z={result.z:.3f} p={result.p:.4f}')
    return moran, lisa, notes


def _scope_members(dataset: PanelDataset, scope: SdeScope) -> List[int]:
    return [i for i, region in enumerate(dataset.regions)
            if scope.region_filter == ALL_REGIONS_FILTER or region.macro_region is scope.region_filter]


def scope_ellipses(dataset: PanelDataset, d: np.ndarray, scope: SdeScope, sde_years: Sequence[int]) \
        -> Tuple[List[ScopeEllipse], List[ScopeDrift], List[str]]:
    """Ellipses for the SDE years, skipping years whose weighted cloud has no ellipse, and their drift."""
    members = _scope_members(dataset, scope)
    if not members:
        raise CouplingCliException(f'SDE scope "{scope.label}" matches no regions')

    lons = [dataset.regions[i].centroid_lon for i in members]
    lats = [dataset.regions[i].centroid_lat for i in members]
    frame = PlanarFrame(float(np.mean(lons)), float(np.mean(lats)))
    year_positions = {year: t for t, year in enumerate(dataset.years)}

    ellipses, notes = [], []
    for year in sde_years:
        row = d[year_positions[year]]
        points = [PlanarPoint(*frame.project(lon, lat), region=dataset.regions[i].id, weight=float(row[i]))
                  for i, lon, lat in zip(members, lons, lats)]
        try:
            params = sde(points, frame)
        except (CouplingCliZeroTotalWeightException, CouplingCliDegenerateCloudException) as e:
            notes.append(f'sde {scope.label} {year}: {e}')
            logger.warning(f'No ellipse for {scope.label} in {year}: {e}')
            continue
        ellipses.append(ScopeEllipse(scope=scope.label, year=year, params=params))

    centers = [(e.year, e.params.center_lon, e.params.center_lat) for e in ellipses]
    drifts = [ScopeDrift(scope=scope.label, segment=segment) for segment in centroid_drift(centers)]
    return ellipses, drifts, notes


def _emit(frame: pd.DataFrame, output_dir: Path, file_name: str, row_counts: Dict[str, int]) -> None:
    write_csv(frame, output_dir / file_name)
    row_counts[file_name] = len(frame)


def run_pipeline(run_config: RunConfig) -> PipelineResult:
    input_digests = {str(path): file_digest(path)
                     for path in (run_config.indicators_path, run_config.regions_path, run_config.values_path)}

    dataset, report = load_and_validate(run_config)
    if not report.accepted:
        raise CouplingCliValidationFailedException(report)
    sde_years = check_years(run_config, dataset.years)

    output_dir = run_config.output_dir
    row_counts: Dict[str, int] = {}

    series = compute_index_series(dataset)
    _emit(series.to_frame(), output_dir, config.index_series_file_name, row_counts)
    _emit(national_means(series), output_dir, config.national_index_file_name, row_counts)
    _emit(pd.concat([series.weights_x.to_frame(), series.weights_y.to_frame()], ignore_index=True),
          output_dir, config.weights_file_name, row_counts)

    records = couple_series(series, run_config.coupling)
    stats = year_stats(records)
    _emit(records_frame(records), output_dir, config.coupling_file_name, row_counts)
    _emit(year_stats_frame(stats), output_dir, config.year_stats_file_name, row_counts)
    _emit(region_aggregate(records, dataset.regions).to_frame(), output_dir, config.region_means_file_name,
          row_counts)
    _emit(stage_counts(records), output_dir, config.stage_counts_file_name, row_counts)
    _emit(rank_regions(records), output_dir, config.region_ranking_file_name, row_counts)

    logger.info('Computing spatial autocorrelation')
    d = d_matrix(records, dataset.years, dataset.region_ids)
    weights = build_weights(dataset.regions, run_config.scheme)
    moran, lisa, degenerate = spatial_statistics(d, dataset.years, weights, run_config)
    _emit(moran_frame(moran), output_dir, config.moran_file_name, row_counts)
    _emit(lisa_frame(lisa), output_dir, config.lisa_file_name, row_counts)

    first_year, last_year = dataset.years[0], dataset.years[-1]
    transitions, changed_share = lisa_transitions(lisa[first_year], lisa[last_year])
    logger.info(f'LISA clusters changed for {len(transitions)} region(s) ({changed_share:.1%}) '
                f'between {first_year} and {last_year}')
    _emit(lisa_transitions_frame(transitions, first_year, last_year), output_dir,
          config.lisa_transitions_file_name, row_counts)

    logger.info('Computing standard deviational ellipses')
    scope_results = parallel_map(lambda scope: scope_ellipses(dataset, d, scope, sde_years),
                                 run_config.sde_scopes, run_config.threads)
    ellipses = [ellipse for scope_ellipse_list, _, _ in scope_results for ellipse in scope_ellipse_list]
    drifts = [drift for _, scope_drift_list, _ in scope_results for drift in scope_drift_list]
    degenerate.extend(note for _, _, scope_notes in scope_results for note in scope_notes)
    _emit(sde_frame(ellipses), output_dir, config.sde_file_name, row_counts)
    _emit(drift_frame(drifts), output_dir, config.drift_file_name, row_counts)

    if run_config.geojson:
        emit_geojson(output_dir / config.geojson_file_name, ellipses, lisa, dataset.regions)

    manifest = RunManifest(config=run_config.to_dict(), input_digests=input_digests, tool_version=__version__,
                           timestamp=run_timestamp(), row_counts=row_counts,
                           islands=list(weights.islands), degenerate=degenerate)
    write_manifest(output_dir / config.manifest_file_name, manifest)
    logger.info(f'Wrote {len(row_counts)} report files to {output_dir}')

    return PipelineResult(manifest=manifest, dataset=dataset, validation=report, series=series, records=records,
                          stats=stats, moran=moran, lisa=lisa, ellipses=ellipses, drifts=drifts,
                          degenerate=degenerate)
