import argparse
import logging
import sys

from prettytable import PrettyTable

from coupling_cli import __version__, config
from coupling_cli.configure import CouplingCliConfigException, load_run_config
from coupling_cli.coupling import Stage
from coupling_cli.panel import CouplingCliPanelLoadException, ValidationReport
from coupling_cli.pipeline import (CouplingCliValidationFailedException, PipelineResult, load_and_validate,
                                   run_pipeline)
from coupling_cli.utils import CouplingCliException, CouplingCliIoException, configure_logging

logger = logging.getLogger(__name__)


class CouplingCli:
    def __init__(self, config_path, output_dir=None) -> None:
        self._run_config = load_run_config(config_path)
        if output_dir:
            self._run_config = self._run_config.with_output_dir(output_dir)

    @staticmethod
    def _format(value, digits=3):
        return f'{value:.{digits}f}'

    @staticmethod
    def _print_validation_report(report: ValidationReport):
        if not report.errors and not report.warnings:
            print('No validation findings')
            return

        table = PrettyTable()
        table.field_names = ['Severity', 'Code', 'Location', 'Message']
        table.align['Message'] = 'l'
        for finding in report.errors:
            table.add_row(['error', finding.code, finding.location, finding.message])
        for finding in report.warnings:
            table.add_row(['warning', finding.code, finding.location, finding.message])
        print(table)

    def _print_index_summary(self, result: PipelineResult):
        table = PrettyTable()
        table.field_names = ['Year', 'Mean f', 'Mean g']
        for year, f, g in zip(result.series.years, result.series.national_f, result.series.national_g):
            table.add_row([year, self._format(f), self._format(g)])
        print(table)

    def _print_coupling_summary(self, result: PipelineResult):
        table = PrettyTable()
        table.field_names = ['Year', 'Mean D', 'Std', 'CV'] + [stage.name for stage in Stage]
        for stats in result.stats:
            stages = [record.stage for record in result.records if record.year == stats.year]
            table.add_row([stats.year, self._format(stats.mean), self._format(stats.std),
                           self._format(stats.cv) if stats.cv_defined else 'n/a']
                          + [stages.count(stage) for stage in Stage])
        print(table)

    def _print_spatial_summary(self, result: PipelineResult):
        table = PrettyTable()
        table.field_names = ['Year', "Moran's I", 'E[I]', 'Z', 'P', 'HH', 'HL', 'LH', 'LL']
        for year, moran in result.moran.items():
            clusters = [cluster.value for cluster in result.lisa[year].clusters]
            table.add_row([year, self._format(moran.i_value), self._format(moran.expected),
                           self._format(moran.z), self._format(moran.p)]
                          + [clusters.count(label) for label in ('HH', 'HL', 'LH', 'LL')])
        print(table)

    def _print_ellipse_summary(self, result: PipelineResult):
        table = PrettyTable()
        table.field_names = ['Scope', 'Year', 'Center', 'Major (km)', 'Minor (km)', 'Azimuth', 'Area (1e4 km2)']
        for ellipse in result.ellipses:
            params = ellipse.params
            table.add_row([ellipse.scope, ellipse.year, f'{params.center_lon:.2f}E {params.center_lat:.2f}N',
                           self._format(params.sigma_x_km, 2), self._format(params.sigma_y_km, 2),
                           self._format(params.azimuth_deg, 2), self._format(params.area_1e4_km2, 2)])
        print(table)

        if result.drifts:
            table = PrettyTable()
            table.field_names = ['Scope', 'Period', 'Distance (km)', 'Bearing', 'Speed (km/year)', 'Direction']
            for drift in result.drifts:
                segment = drift.segment
                table.add_row([drift.scope, f'{segment.from_year}-{segment.to_year}',
                               self._format(segment.distance_km, 2), self._format(segment.bearing_deg, 1),
                               self._format(segment.speed_km_per_year, 2), f'{segment.octant} ({segment.quadrant})'])
            print(table)

    def run(self, args):
        if args.validate_only:
            _, report = load_and_validate(self._run_config)
            self._print_validation_report(report)
            if not report.accepted:
                raise CouplingCliValidationFailedException(report)
            return

        result = run_pipeline(self._run_config)
        if result.validation.warnings:
            self._print_validation_report(result.validation)
        self._print_index_summary(result)
        self._print_coupling_summary(result)
        self._print_spatial_summary(result)
        self._print_ellipse_summary(result)
        print(f'Reports written to {self._run_config.output_dir}')


def _parse_args(argv=None):
    main_parser = argparse.ArgumentParser(
        prog='coupling-cli',
        description='Coupling coordination, spatial autocorrelation and ellipse analysis of regional panel data',
        epilog='For more information about a given command, use "<command> -h"')
    main_parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    common_parser = argparse.ArgumentParser(add_help=False)
    common_parser.add_argument('--verbose', '-v', action='store_true', help='Verbose mode')

    subparsers = main_parser.add_subparsers(dest='command', required=True)

    subparser = subparsers.add_parser('run', parents=[common_parser], help='Run the full measurement pipeline')
    subparser.set_defaults(func=CouplingCli.run)
    subparser.add_argument('--config', required=True, help='YAML run configuration')
    subparser.add_argument('--output-dir', help='Override the configured output directory')
    subparser.add_argument('--validate-only', action='store_true',
                           help='Load and validate the inputs, then stop')

    if not (argv if argv is not None else sys.argv[1:]):
        main_parser.print_help()
        sys.exit(config.exit_code_success)

    return main_parser.parse_args(argv)


def main(argv=None):
    args = _parse_args(argv)
    configure_logging(args.verbose)

    try:
        cli = CouplingCli(args.config, args.output_dir)
        args.func(cli, args)
    except CouplingCliConfigException as e:
        logger.error(str(e))
        return config.exit_code_config_error
    except CouplingCliIoException as e:
        logger.error(str(e))
        return config.exit_code_io_error
    except (CouplingCliValidationFailedException, CouplingCliPanelLoadException) as e:
        logger.error(str(e))
        return config.exit_code_validation_failed
    except CouplingCliException as e:
        logger.error(f'Analysis failed: {e}')
        return config.exit_code_validation_failed

    return config.exit_code_success


if __name__ == '__main__':
    sys.exit(main())
