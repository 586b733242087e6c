import io
import json
import math
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from nads.management.commands.nads import describe
from nads.scenarios import load_scenario, scenario_from_dict, scenario_to_dict
from nads.tables import snapshot_table
from nads.validation import CheckResult, ValidationReport

SCENARIOS = Path(settings.NADS_SCENARIO_DIR)


def read_table(text):
    return pd.read_csv(io.StringIO(text), comment='#')


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.tmp_path = Path(self.tmp.name)

    def nads(self, *args):
        out = io.StringIO()
        call_command('nads', *[str(arg) for arg in args], stdout=out)
        return out.getvalue()

    def write_scenario(self, raw, name='scenario.json'):
        path = self.tmp_path / name
        path.write_text(json.dumps(raw), encoding='utf-8')
        return path

    def assertExits(self, code, *args):
        with self.assertRaises(CommandError) as ctx:
            self.nads(*args)
        self.assertEqual(ctx.exception.returncode, code)
        return str(ctx.exception)

    def assertDeterministic(self, *args):
        first = self.tmp_path / 'first.csv'
        second = self.tmp_path / 'second.csv'
        self.nads(*args, '--out', first, '--json')
        self.nads(*args, '--out', second, '--json')
        self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertEqual((self.tmp_path / 'first.csv.json').read_bytes(),
                         (self.tmp_path / 'second.csv.json').read_bytes())
        return first.read_text(encoding='utf-8')


class SnapshotCommandTests(CommandTestCase):
    def test_static_scenario(self):
        text = self.nads('snapshot', SCENARIOS / 'static_adiabatic.json')
        lines = text.splitlines()
        self.assertEqual(lines[0], '# command: snapshot')
        self.assertTrue(lines[1].startswith('# scenario: {'))
        resolved = json.loads(lines[1][len('# scenario: '):])
        self.assertEqual(resolved['integrator']['rtol'], 1e-10)
        frame = read_table(text)
        self.assertEqual(len(frame), 101)
        self.assertEqual(list(frame.columns[:4]), ['t', 'Omega', 'delta', 'Re_delta_tilde'])
        for column in ('gg', 'ee', 'Re_eg', 'Im_eg', 'P', 'omega_ads'):
            self.assertIn(column, frame.columns)
        self.assertLess(frame['P'].abs().max(), 1e-12)
        np.testing.assert_allclose(frame['Re_omega_tilde'], frame['omega_ads'], rtol=1e-14)

    def test_output_is_deterministic(self):
        self.assertDeterministic('snapshot', SCENARIOS / 'gaussian_chirped_damped.json')

    def test_json_mirror(self):
        out = self.tmp_path / 'snap.csv'
        self.nads('snapshot', SCENARIOS / 'static_adiabatic.json', '--out', out, '--json')
        document = json.loads((self.tmp_path / 'snap.csv.json').read_text(encoding='utf-8'))
        frame = read_table(out.read_text(encoding='utf-8'))
        self.assertEqual(document['command'], 'snapshot')
        self.assertEqual(document['scenario']['name'], 'static_adiabatic')
        self.assertEqual(document['columns'], list(frame.columns))
        self.assertEqual(len(document['rows']), len(frame))
        self.assertEqual(document['rows'][3][0], frame['t'][3])

    def test_json_to_stdout(self):
        document = json.loads(self.nads('snapshot', SCENARIOS / 'static_adiabatic.json', '--json'))
        self.assertEqual(len(document['rows']), 101)

    def test_two_point_grid(self):
        raw = scenario_to_dict(load_scenario(SCENARIOS / 'static_adiabatic.json'))
        raw['grid'] = {'t_start': 0.0, 't_end': 0.1, 'step': 0.1}
        frame = read_table(self.nads('snapshot', self.write_scenario(raw)))
        self.assertEqual(len(frame), 2)

    def test_field_off_is_a_numerical_failure(self):
        message = self.assertExits(2, 'snapshot', SCENARIOS / 'field_free_decay.json')
        self.assertIn('EnvelopeUnderflow', message)
        self.assertIn('grid index 0', message)

    def test_invalid_scenario(self):
        raw = scenario_to_dict(load_scenario(SCENARIOS / 'gaussian_pulse.json'))
        raw['field']['envelope']['tau'] = -1.0
        message = self.assertExits(1, 'snapshot', self.write_scenario(raw))
        self.assertIn('field.envelope.tau', message)

    def test_parse_error(self):
        raw = scenario_to_dict(load_scenario(SCENARIOS / 'static_damped.json'))
        raw['system']['gammma_e'] = raw['system'].pop('gamma_e')
        message = self.assertExits(1, 'snapshot', self.write_scenario(raw))
        self.assertIn('did you mean "gamma_e"', message)

    def test_malformed_file(self):
        path = self.tmp_path / 'broken.json'
        path.write_text('{"name": "broken",\n', encoding='utf-8')
        self.assertExits(1, 'snapshot', path)

    def test_missing_file(self):
        message = self.assertExits(1, 'snapshot', self.tmp_path / 'absent.json')
        self.assertIn('absent.json', message)

    def test_non_string_envelope_kind(self):
        raw = scenario_to_dict(load_scenario(SCENARIOS / 'gaussian_pulse.json'))
        raw['field']['envelope']['kind'] = ['gaussian']
        message = self.assertExits(1, 'snapshot', self.write_scenario(raw))
        self.assertIn('field.envelope.kind', message)


class EvolveCommandTests(CommandTestCase):
    def test_pi_pulse(self):
        frame = read_table(self.nads('evolve', SCENARIOS / 'rabi_pi_pulse.json'))
        self.assertEqual(list(frame.columns), ['t', 'Re_c_g', 'Im_c_g', 'Re_c_e', 'Im_c_e', 'norm'])
        final = frame.iloc[-1]
        self.assertAlmostEqual(final['Re_c_e'] ** 2 + final['Im_c_e'] ** 2, 1.0, delta=1e-8)

    def test_decay(self):
        frame = read_table(self.nads('evolve', SCENARIOS / 'field_free_decay.json'))
        np.testing.assert_allclose(frame['norm'], np.exp(-0.5 * frame['t']), atol=1e-8)

    def test_compare_on_slow_pulse(self):
        frame = read_table(self.nads('evolve', SCENARIOS / 'slow_gaussian.json', '--compare'))
        peak = frame.iloc[-1]
        self.assertEqual(peak['t'], 0.0)
        self.assertLess(abs(peak['ratio_nads'] - peak['ratio']) / peak['ratio'], 0.05)

    def test_compare_adds_ratio_columns(self):
        frame = read_table(self.nads('evolve', SCENARIOS / 'static_adiabatic.json', '--compare'))
        self.assertIn('ratio', frame.columns)
        self.assertIn('ratio_nads', frame.columns)
        # ground start: c_e vanishes at t = 0
        self.assertEqual(frame['ratio'][0], 0.0)

    def test_compare_output_is_deterministic(self):
        frame = read_table(self.assertDeterministic('evolve', SCENARIOS / 'rabi_pi_pulse.json', '--compare'))
        self.assertIn('ratio_nads', frame.columns)


class SweepCommandTests(CommandTestCase):
    def test_output_is_deterministic(self):
        frame = read_table(self.assertDeterministic(
            'sweep', SCENARIOS / 'static_damped.json',
            '--axis', 'system.gamma_e:0:0.4:3', '--axis', 'field.phase.beta:0:0.02:2',
            '--reduce', 'maxP', '--workers', 2,
        ))
        self.assertEqual(len(frame), 6)

    def test_chirp_sweep(self):
        text = self.nads('sweep', SCENARIOS / 'static_adiabatic.json',
                         '--axis', 'field.phase.beta:0:0.04:5', '--reduce', 'maxP', '--workers', 1)
        self.assertTrue(text.startswith('# command: sweep --axis field.phase.beta:0:0.04:5 --reduce maxP\n'))
        frame = read_table(text)
        self.assertEqual(list(frame.columns), ['field.phase.beta', 'maxP', 'error'])
        np.testing.assert_allclose(frame['field.phase.beta'], np.linspace(0.0, 0.04, 5))
        self.assertLess(frame['maxP'][0], 1e-12)
        self.assertTrue(np.all(np.diff(frame['maxP']) >= 0))
        self.assertTrue(frame['error'].isna().all())

        raw = scenario_to_dict(load_scenario(SCENARIOS / 'static_adiabatic.json'))
        raw['field']['phase']['beta'] = 0.04
        direct = snapshot_table(scenario_from_dict(raw))['P'].max()
        self.assertAlmostEqual(frame['maxP'].iloc[-1], direct, places=15)

    def test_two_axes_in_axis_major_order(self):
        frame = read_table(self.nads(
            'sweep', SCENARIOS / 'static_damped.json',
            '--axis', 'system.gamma_e:0:0.4:5', '--axis', 'field.envelope.omega0:0.1:1:5:log',
            '--reduce', 'finalNorm', '--workers', 1,
        ))
        self.assertEqual(len(frame), 25)
        np.testing.assert_array_equal(frame['system.gamma_e'][:5], 0.0)
        np.testing.assert_allclose(frame['field.envelope.omega0'][:5], np.geomspace(0.1, 1.0, 5))
        self.assertTrue(np.all(frame['finalNorm'] <= 1.0))

    def test_parallel_run_matches_sequential(self):
        args = ('sweep', SCENARIOS / 'static_adiabatic.json',
                '--axis', 'system.gamma_g:0:0.2:3', '--axis', 'field.phase.beta:0:0.02:2',
                '--reduce', 'finalPe')
        self.assertEqual(self.nads(*args, '--workers', 1), self.nads(*args, '--workers', 2))

    def test_failing_points_are_recorded(self):
        with self.assertLogs('nads.sweeps', 'WARNING') as logs:
            frame = read_table(self.nads('sweep', SCENARIOS / 'static_adiabatic.json',
                                         '--axis', 'system.omega_e:-1:5:3', '--reduce', 'minNorm',
                                         '--workers', 1))
        self.assertEqual(len(frame), 3)
        self.assertTrue(math.isnan(frame['minNorm'][0]))
        self.assertIn('omega_g', frame['error'][0])
        self.assertTrue(frame['error'][1:].isna().all())
        self.assertEqual(len(logs.output), 1)

    def test_axis_typo_fails_before_running(self):
        with mock.patch('nads.sweeps.run_point') as run_point:
            message = self.assertExits(1, 'sweep', SCENARIOS / 'static_adiabatic.json',
                                       '--axis', 'field.envelope.omgea0:0:1:3', '--reduce', 'maxP')
        run_point.assert_not_called()
        self.assertIn('did you mean "field.envelope.omega0"', message)

    def test_malformed_axis(self):
        message = self.assertExits(1, 'sweep', SCENARIOS / 'static_adiabatic.json',
                                   '--axis', 'field.phase.beta:0:1', '--reduce', 'maxP')
        self.assertIn('PATH:MIN:MAX:COUNT', message)

    def test_too_many_axes(self):
        self.assertExits(1, 'sweep', SCENARIOS / 'static_adiabatic.json',
                         '--axis', 'system.gamma_g:0:1:2', '--axis', 'system.gamma_e:0:1:2',
                         '--axis', 'field.phase.beta:0:1:2', '--reduce', 'maxP')


class ValidateCommandTests(CommandTestCase):
    def report(self, *passed):
        return ValidationReport(tuple(
            CheckResult(f'check_{i}', ok, 0.0 if ok else 1.0, 0.5) for i, ok in enumerate(passed)
        ))

    def test_passing_report(self):
        with mock.patch('nads.management.commands.nads.run_validation', return_value=self.report(True, True)):
            text = self.nads('validate')
        self.assertIn('PASS check_0', text)
        self.assertTrue(text.endswith('2/2 checks passed\n'))

    def test_failing_report_exits_nonzero(self):
        with mock.patch('nads.management.commands.nads.run_validation',
                        return_value=self.report(True, False)) as run_validation:
            message = self.assertExits(1, 'validate', '--json', '--scenarios', self.tmp_path)
        run_validation.assert_called_once_with(scenario_dir=str(self.tmp_path))
        self.assertIn('check_1', message)


class DescribeTests(SimpleTestCase):
    def test_field_keyed_errors(self):
        text = describe(ValidationError({'grid.step': ['too coarse'], 'system.mu': ['bad']}))
        self.assertEqual(text, 'grid.step: too coarse; system.mu: bad')
