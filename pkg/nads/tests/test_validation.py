import json
import math
import tempfile
from pathlib import Path
from unittest import mock

from django.conf import settings
from django.test import SimpleTestCase

from nads import nads_core
from nads.exceptions import NadsError
from nads.scenarios import load_scenario
from nads.validation import CHECKS, ValidationContext, ValidationReport, run_check, run_validation

real_lambdas = nads_core.lambdas


def flipped_lambda2(delta_tilde, omega_tilde, d_omega_tilde):
    lambda1, lambda2, lambda_t1, lambda_t2 = real_lambdas(delta_tilde, omega_tilde, d_omega_tilde)
    return lambda1, -lambda2, lambda_t1, lambda_t2


class ShippedSuiteTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.report = run_validation()

    def test_every_check_passes(self):
        self.assertEqual(self.report.failures, (), self.report.to_text())
        self.assertEqual([result.name for result in self.report.results], list(CHECKS))

    def test_cancellation_is_reported(self):
        result = self.report['cancellation']
        self.assertLess(result.worst, 1e-9)
        self.assertEqual(result.tolerance, 1e-9)

    def test_phase_derivatives_are_checked_separately(self):
        result = self.report['phase_derivatives']
        self.assertEqual(result.tolerance, 1e-8)
        self.assertLess(result.worst, 1e-8)
        self.assertEqual(self.report['derivative_hygiene'].tolerance, 1e-6)

    def test_oracles(self):
        self.assertLess(self.report['rabi_oracle'].worst, 1e-8)
        self.assertLess(self.report['decay_oracle'].worst, 1e-8)
        self.assertLess(self.report['landau_zener'].worst, 1e-3)

    def test_json_report(self):
        document = json.loads(self.report.to_json())
        self.assertTrue(document['passed'])
        self.assertEqual(len(document['checks']), len(CHECKS))
        self.assertEqual(set(document['checks'][0]), {'name', 'passed', 'worst', 'tolerance', 'detail'})

    def test_text_report(self):
        lines = self.report.to_text().splitlines()
        self.assertTrue(all(line.startswith('PASS ') for line in lines[:-1]))
        self.assertEqual(lines[-1], f'{len(CHECKS)}/{len(CHECKS)} checks passed')


class MutationTests(SimpleTestCase):
    def test_flipped_lambda2_is_caught(self):
        with mock.patch('nads.nads_core.lambdas', flipped_lambda2):
            report = run_validation(names=['lambda_consistency', 'cancellation'])
        self.assertIn('lambda_consistency', report.failures)
        self.assertGreater(report['lambda_consistency'].worst, 1e-3)


class FailureReportingTests(SimpleTestCase):
    def test_missing_scenario_fails_the_check(self):
        with tempfile.TemporaryDirectory() as directory:
            report = run_validation(scenario_dir=directory, names=['rabi_oracle', 'probability_bound'])
        self.assertEqual(report.failures, ('rabi_oracle',))
        result = report['rabi_oracle']
        self.assertTrue(math.isinf(result.worst))
        self.assertIn('rabi_pi_pulse', result.detail)
        self.assertTrue(report['probability_bound'].passed)

    def test_unknown_result_name(self):
        with self.assertRaises(KeyError):
            ValidationReport(())['nothing']

    def test_raising_check_is_reported(self):
        def broken(context):
            raise NadsError('no data')

        with mock.patch.dict(CHECKS, {'broken': (broken, 1.0)}):
            result = run_check('broken', ValidationContext([]))
        self.assertFalse(result.passed)
        self.assertTrue(math.isinf(result.worst))
        self.assertEqual(result.detail, 'NadsError: no data')

    def test_empty_report_passes(self):
        report = ValidationReport(())
        self.assertTrue(report.passed)
        self.assertTrue(report.to_text().endswith('0/0 checks passed\n'))


class ContextTests(SimpleTestCase):
    def test_series_skip_field_off_scenarios(self):
        directory = Path(settings.NADS_SCENARIO_DIR)
        context = ValidationContext([
            load_scenario(directory / 'field_free_decay.json'),
            load_scenario(directory / 'static_adiabatic.json'),
        ])
        self.assertEqual(set(context.scenarios), {'field_free_decay', 'static_adiabatic'})
        self.assertEqual(set(context.series), {'static_adiabatic'})

    def test_fuzz_pairs_are_seeded(self):
        first = ValidationContext([]).fuzz_pairs
        second = ValidationContext([]).fuzz_pairs
        self.assertTrue((first[0] == second[0]).all())
        magnitudes = abs(first[1])
        self.assertGreaterEqual(magnitudes.min(), 1e-3 * (1 - 1e-12))
        self.assertLessEqual(magnitudes.max(), 1e3 * (1 + 1e-12))
