import math
from pathlib import Path

earth_radius_km = 6371.0
km_per_degree = math.pi * earth_radius_km / 180
ellipse_segments = 64
area_unit_km2 = 1e4

default_alpha = 0.5
default_beta = 0.5
default_permutations = 999
default_lisa_alpha = 0.05
default_threads = 1

# Right-closed upper bounds of the five coordination stages, lowest first
stage_upper_bounds = (0.2, 0.4, 0.5, 0.8, 1.0)

tie_tolerance = 1e-12
isotropy_tolerance = 1e-12

csv_float_format = '%.10g'
csv_line_terminator = '\n'

bundled_regions_path = Path(__file__).parent / 'data/china_provinces.csv'

index_series_file_name = 'index_series.csv'
national_index_file_name = 'national_index.csv'
weights_file_name = 'weights.csv'
coupling_file_name = 'coupling.csv'
year_stats_file_name = 'year_stats.csv'
region_means_file_name = 'region_means.csv'
stage_counts_file_name = 'stage_counts.csv'
region_ranking_file_name = 'region_ranking.csv'
moran_file_name = 'moran.csv'
lisa_file_name = 'lisa.csv'
lisa_transitions_file_name = 'lisa_transitions.csv'
sde_file_name = 'sde.csv'
drift_file_name = 'drift.csv'
geojson_file_name = 'report.geojson'
manifest_file_name = 'manifest.json'

exit_code_success = 0
exit_code_validation_failed = 2
exit_code_config_error = 3
exit_code_io_error = 4
