import logging
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from nads.exceptions import NumericalError, ParseError
from nads.scenarios import load_scenario
from nads.sweeps import REDUCERS, build_sweep, run_sweep
from nads.tables import evolve_table, render_csv, render_json, snapshot_table
from nads.validation import run_validation

logger = logging.getLogger(__name__)

EXIT_INVALID = 1
EXIT_NUMERICAL = 2


def describe(exc):
    if isinstance(exc, ValidationError) and hasattr(exc, 'error_dict'):
        return '; '.join(f'{key}: {" ".join(messages)}' for key, messages in exc.message_dict.items())
    if isinstance(exc, ValidationError):
        return '; '.join(exc.messages)
    return str(exc)


class Command(BaseCommand):
    help = 'Nonadiabatic dressed-state toolkit: snapshot, evolve, sweep and validate scenarios.'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='subcommand', required=True)

        snapshot = subparsers.add_parser('snapshot', help='NADS quantities, overlaps and P on the grid.')
        snapshot.add_argument('file')
        self._add_output_arguments(snapshot)

        evolve = subparsers.add_parser('evolve', help='Integrate the two-level equations.')
        evolve.add_argument('file')
        evolve.add_argument('--compare', action='store_true',
                            help='Add the integrated and the NADS amplitude ratios.')
        self._add_output_arguments(evolve)

        sweep = subparsers.add_parser('sweep', help='Reduce a scenario over a 1-2 axis parameter grid.')
        sweep.add_argument('file')
        sweep.add_argument('--axis', action='append', required=True,
                           help='PATH:MIN:MAX:COUNT[:log], e.g. field.envelope.tau:10:100:5')
        sweep.add_argument('--reduce', required=True, choices=sorted(REDUCERS))
        sweep.add_argument('--workers', type=int, default=None)
        self._add_output_arguments(sweep)

        validate = subparsers.add_parser('validate', help='Run the invariant suite.')
        validate.add_argument('--json', action='store_true')
        validate.add_argument('--scenarios', default=None, help='Scenario directory to validate against.')

    @staticmethod
    def _add_output_arguments(parser):
        parser.add_argument('--out', default=None, help='CSV path; stdout when omitted.')
        parser.add_argument('--json', action='store_true', help='Also write <out>.json.')

    def handle(self, *args, **options):
        subcommand = options['subcommand']
        try:
            return getattr(self, f'handle_{subcommand}')(options)
        except (ParseError, ValidationError) as exc:
            raise CommandError(describe(exc), returncode=EXIT_INVALID)
        except NumericalError as exc:
            raise CommandError(f'{type(exc).__name__}: {exc}', returncode=EXIT_NUMERICAL)

    def handle_snapshot(self, options):
        scenario = load_scenario(options['file'])
        frame = snapshot_table(scenario, omega_floor=settings.NADS_OMEGA_FLOOR)
        self.emit(frame, 'snapshot', scenario, options)

    def handle_evolve(self, options):
        scenario = load_scenario(options['file'])
        frame = evolve_table(scenario, compare=options['compare'], omega_floor=settings.NADS_OMEGA_FLOOR)
        self.emit(frame, 'evolve', scenario, options)

    def handle_sweep(self, options):
        scenario = load_scenario(options['file'])
        spec = build_sweep(scenario, options['axis'], options['reduce'])
        frame = run_sweep(spec, workers=options['workers'], omega_floor=settings.NADS_OMEGA_FLOOR)
        self.emit(frame, 'sweep ' + ' '.join(f'--axis {a}' for a in options['axis'])
                  + f' --reduce {options["reduce"]}', scenario, options)

    def handle_validate(self, options):
        report = run_validation(scenario_dir=options['scenarios'])
        self.stdout.write(report.to_json() if options['json'] else report.to_text(), ending='')
        if not report.passed:
            raise CommandError(f'validation failed: {", ".join(report.failures)}', returncode=EXIT_INVALID)

    def emit(self, frame, command, scenario, options):
        out = options['out']
        if out is None:
            text = render_json(frame, command, scenario) if options['json'] else render_csv(frame, command, scenario)
            self.stdout.write(text, ending='')
            return
        out = Path(out)
        out.write_text(render_csv(frame, command, scenario), encoding='utf-8')
        logger.info('wrote %d rows to %s', len(frame), out)
        if options['json']:
            mirror = out.with_name(out.name + '.json')
            mirror.write_text(render_json(frame, command, scenario), encoding='utf-8')
            logger.info('wrote JSON mirror %s', mirror)
