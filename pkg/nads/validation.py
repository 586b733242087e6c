"""Invariant suite behind ``nads validate``.

Each check measures a worst-case deviation over the shipped scenarios (or a
fixed set of oracle runs) and compares it with its tolerance. A check that
raises is reported as failed with the error text; the suite always runs to
the end.
"""
import json
import logging
import math
from dataclasses import asdict, dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from .exceptions import NadsError
from .field_model import (
    OMEGA_FLOOR, Chirp, Constant, FieldModel, Gaussian, Sech, SystemParams, phase_at,
)
from .nads_core import NonadiabaticFactors, adiabatic_reference, snapshot_series
from .overlap_transitions import (
    InitialState, overlap_tables, probability_from_mixing, reconstruct_bare_amplitudes,
)
from .scenarios import load_scenario
from .tables import scenario_series
from .tdse_integrator import (
    Frame, evolve, landau_zener_survival, lz_oracle, propagate, rabi_oracle,
)

logger = logging.getLogger(__name__)

SEED = 20240917
FUZZ_PAIRS = 10_000
DERIVATIVE_POINTS = 1_000
ADIABATIC_DRAWS = 10
FACTORS_OFF = NonadiabaticFactors(damping=False, envelope=False, phase=False)

CHECKS = {}


def check(name, tolerance):
    def register(func):
        CHECKS[name] = (func, tolerance)
        return func
    return register


@dataclass(frozen=True)
class Outcome:
    worst: float
    passed: bool = None
    detail: str = ''


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ''


@dataclass(frozen=True)
class ValidationReport:
    results: tuple

    @property
    def passed(self):
        return all(result.passed for result in self.results)

    @property
    def failures(self):
        return tuple(result.name for result in self.results if not result.passed)

    def __getitem__(self, name):
        for result in self.results:
            if result.name == name:
                return result
        raise KeyError(name)

    def as_dict(self):
        return {'passed': self.passed, 'checks': [asdict(result) for result in self.results]}

    def to_json(self):
        return json.dumps(self.as_dict(), indent=1) + '\n'

    def to_text(self):
        lines = []
        for result in self.results:
            status = 'PASS' if result.passed else 'FAIL'
            line = f'{status} {result.name}: worst={result.worst:.3e} tolerance={result.tolerance:.1e}'
            if result.detail:
                line += f' ({result.detail})'
            lines.append(line)
        lines.append(f'{len(self.results) - len(self.failures)}/{len(self.results)} checks passed')
        return '\n'.join(lines) + '\n'


class ValidationContext:
    """Shipped scenarios and their snapshot series, computed once per run."""

    def __init__(self, scenarios, omega_floor=OMEGA_FLOOR):
        self.scenarios = {scenario.name: scenario for scenario in scenarios}
        self.omega_floor = omega_floor

    @classmethod
    def from_directory(cls, directory, omega_floor=OMEGA_FLOOR):
        paths = sorted(Path(directory).glob('*.json'))
        return cls([load_scenario(path) for path in paths], omega_floor)

    def scenario(self, name):
        try:
            return self.scenarios[name]
        except KeyError:
            raise NadsError(f'scenario "{name}" is not in the scenario set') from None

    @cached_property
    def series(self):
        """Series of every scenario with the field on; a failing one stops the checks that need it."""
        return {
            name: scenario_series(scenario, self.omega_floor)
            for name, scenario in self.scenarios.items()
            if scenario.field.envelope.omega0 > 0
        }

    @cached_property
    def fuzz_pairs(self):
        rng = np.random.default_rng(SEED)

        def draw():
            magnitude = 10.0 ** rng.uniform(-3.0, 3.0, FUZZ_PAIRS)
            return magnitude * np.exp(1j * rng.uniform(0.0, 2 * math.pi, FUZZ_PAIRS))

        return draw(), draw()

    @cached_property
    def static_draws(self):
        """Static undamped unchirped series with random Omega and nonzero detuning."""
        rng = np.random.default_rng(SEED + 1)
        draws = []
        for _ in range(ADIABATIC_DRAWS):
            delta = rng.uniform(0.1, 3.0) * rng.choice((-1.0, 1.0))
            params = SystemParams(omega_g=0.0, omega_e=5.0)
            field = FieldModel(5.0 - delta, Constant(rng.uniform(0.05, 3.0)))
            draws.append(snapshot_series(params, field, np.linspace(0.0, 10.0, 21), self.omega_floor))
        return draws


def _relative(a, b, scale):
    return abs(a - b) / max(abs(b), scale)


@check('derivative_hygiene', 1e-6)
def derivative_hygiene(context):
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    for kind in (Gaussian, Sech):
        for _ in range(DERIVATIVE_POINTS):
            tau = rng.uniform(0.5, 50.0)
            envelope = kind(omega0=rng.uniform(0.1, 5.0), t_center=rng.uniform(-10.0, 10.0), tau=tau)
            t = envelope.t_center + tau * rng.uniform(-3.0, 3.0)
            h = 1e-5 * tau
            fd_log = (envelope.shape(t + h) - envelope.shape(t - h)) / (2 * h * envelope.shape(t))
            fd_dlog = (envelope.log_derivative(t + h) - envelope.log_derivative(t - h)) / (2 * h)
            worst = max(
                worst,
                _relative(fd_log, envelope.log_derivative(t), 1.0 / tau),
                _relative(fd_dlog, envelope.dlog_derivative(t), 1.0 / tau ** 2),
            )
    return Outcome(worst)


@check('phase_derivatives', 1e-8)
def phase_derivatives(context):
    rng = np.random.default_rng(SEED + 3)
    worst = 0.0
    for _ in range(DERIVATIVE_POINTS):
        tau = rng.uniform(0.5, 50.0)
        field = FieldModel(1.0, Gaussian(1.0, rng.uniform(-10.0, 10.0), tau),
                           Chirp(rng.uniform(-1.0, 1.0), rng.choice((-1.0, 1.0)) * rng.uniform(1e-3, 0.1)))
        t = field.t_center + tau * rng.uniform(-3.0, 3.0)
        # central differences are exact on a quadratic, so only round-off is measured
        h = 0.5 * tau
        exact = phase_at(field, t)
        fd_dphi = (phase_at(field, t + h).phi - phase_at(field, t - h).phi) / (2 * h)
        fd_d2phi = (phase_at(field, t + h).dphi - phase_at(field, t - h).dphi) / (2 * h)
        beta = abs(field.phase.beta)
        worst = max(worst, _relative(fd_dphi, exact.dphi, beta * tau),
                    _relative(fd_d2phi, exact.d2phi, beta))
    return Outcome(worst)


@check('trig_identity', 1e-10)
def trig_identity(context):
    worst = 0.0
    for series in context.series.values():
        columns = series.columns
        identity = columns['cos_half'] ** 2 + columns['sin_half'] ** 2 - 1.0
        worst = max(worst, float(np.max(np.abs(identity))))
    return Outcome(worst, detail=f'{len(context.series)} scenarios')


@check('lambda_consistency', 1e-12)
def lambda_consistency(context):
    worst = 0.0
    for series in context.series.values():
        columns = series.columns
        omega_tilde = columns['omega_tilde']
        plain = np.abs(columns['lambda1'] - columns['lambda2'] - omega_tilde)
        shifted = np.abs(columns['lambda_t1'] - columns['lambda_t2'] - omega_tilde)
        worst = max(worst, float(np.max(plain / np.maximum(np.abs(omega_tilde), 1.0))),
                    float(np.max(shifted / np.maximum(np.abs(omega_tilde), 1.0))))
    return Outcome(worst)


@check('adiabatic_reality', 1e-12)
def adiabatic_reality(context):
    worst = 0.0
    names = ('delta_tilde', 'omega_tilde', 'lambda1', 'lambda2', 'lambda_t1', 'lambda_t2',
             'cos_half', 'sin_half')
    for series in context.static_draws:
        for name in names:
            worst = max(worst, float(np.max(np.abs(series.column(name).imag))))
    return Outcome(worst, detail=f'{ADIABATIC_DRAWS} static draws')


@check('adiabatic_theorem', 1e-12)
def adiabatic_theorem(context):
    worst = 0.0
    for series in context.static_draws:
        columns = series.columns
        worst = max(worst, float(np.max(probability_from_mixing(columns['sin_half'], columns['cos_half']))))
    return Outcome(worst)


@check('probability_bound', 1e-12)
def probability_bound(context):
    s, c = context.fuzz_pairs
    p = probability_from_mixing(s, c)
    worst = max(0.0, float(np.max(p)) - 1.0, -float(np.min(p)))
    return Outcome(worst, passed=bool(np.all(np.isfinite(p))) and worst <= 1e-12,
                   detail=f'{FUZZ_PAIRS} fuzzed pairs')


@check('microreversibility', 1e-12)
def microreversibility(context):
    s, c = context.fuzz_pairs
    worst = float(np.max(np.abs(probability_from_mixing(s, c) - probability_from_mixing(c, s))))
    for series in context.series.values():
        tables = overlap_tables(series)
        forward = tables.probability(InitialState.GROUND)
        backward = tables.probability(InitialState.EXCITED)
        worst = max(worst, float(np.max(np.abs(forward - backward))))
    return Outcome(worst)


@check('cancellation', 1e-9)
def cancellation(context):
    worst = 0.0
    for series in context.series.values():
        columns = series.columns
        pointwise = probability_from_mixing(columns['sin_half'], columns['cos_half'])
        via_overlaps = overlap_tables(series).probability(InitialState.GROUND)
        worst = max(worst, float(np.max(np.abs(pointwise - via_overlaps))))
    return Outcome(worst)


@check('conjugation', 1e-12)
def conjugation(context):
    worst = 0.0
    for series in context.series.values():
        tables = overlap_tables(series)
        deviation = np.abs(tables.ge - np.conj(tables.eg)) / np.maximum(np.abs(tables.eg), 1.0)
        worst = max(worst, float(np.max(deviation)))
    return Outcome(worst)


@check('positivity', 0.0)
def positivity(context):
    """Worst is the smallest gg or ee found; passes when it is finite and positive."""
    smallest = math.inf
    for name, series in context.series.items():
        tables = overlap_tables(series)
        values = np.concatenate([tables.gg, tables.ee])
        if not np.all(np.isfinite(values)):
            return Outcome(math.nan, passed=False, detail=f'non-finite overlap in {name}')
        smallest = min(smallest, float(np.min(values)))
    return Outcome(smallest, passed=smallest > 0)


@check('orthogonality_switch', 1e-12)
def orthogonality_switch(context):
    worst = 0.0
    for name, scenario in context.scenarios.items():
        if name not in context.series:
            continue
        off = snapshot_series(scenario.system, scenario.field, scenario.grid.times(),
                              context.omega_floor, FACTORS_OFF)
        worst = max(worst, float(np.max(np.abs(overlap_tables(off).eg))))
    chirped = context.series['gaussian_chirped_damped']
    center = int(np.argmin(np.abs(chirped.grid - chirped.field.t_center)))
    at_center = abs(overlap_tables(chirped).eg[center])
    return Outcome(worst, passed=worst < 1e-12 and at_center > 1e-6,
                   detail=f'|<E|G>| at pulse center with factors on = {at_center:.3e}')


def _continuity(values):
    step = np.abs(np.diff(values))
    total = np.abs(values[1:] + values[:-1])
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(step == 0, 0.0, step / total)
    return float(np.max(ratio)) if ratio.size else 0.0


@check('branch_continuity', 1.0)
def branch_continuity(context):
    """Worst is max |x[k+1] - x[k]| / |x[k+1] + x[k]|; the nearer root keeps it below 1."""
    worst = 0.0
    for series in context.series.values():
        for name in ('omega_tilde', 'cos_half', 'sin_half'):
            worst = max(worst, _continuity(series.column(name)))
    return Outcome(worst, passed=worst < 1.0)


@check('adiabatic_reduction', 1.0)
def adiabatic_reduction(context):
    """Omega~ approaches the adiabatic Rabi frequency as tau grows at fixed t/tau."""
    params = SystemParams(omega_g=0.0, omega_e=5.0)
    errors = []
    for tau in (10.0, 100.0, 1000.0):
        field = FieldModel(4.0, Gaussian(1.0, 0.0, tau))
        t = 0.5 * tau
        h = tau / 400
        series = snapshot_series(params, field, t + h * np.arange(-2, 3), context.omega_floor)
        middle = series[2]
        errors.append(abs(middle.omega_tilde - adiabatic_reference(middle.omega, middle.delta).omega_ads))
    ratios = [later / earlier for earlier, later in zip(errors, errors[1:])]
    return Outcome(max(ratios), passed=max(ratios) < 1.0,
                   detail='errors ' + ', '.join(f'{e:.3e}' for e in errors))


@check('rabi_oracle', 1e-8)
def rabi_oracle_check(context):
    scenario = context.scenario('rabi_pi_pulse')
    integrator = scenario.integrator
    trajectory = evolve(scenario.system, scenario.field, scenario.grid.times(), integrator.init,
                        Frame.ROTATING, integrator.rtol, integrator.atol)
    omega0 = scenario.system.mu * scenario.field.envelope.omega0
    expected = np.array([rabi_oracle(omega0, t - trajectory.grid[0])[1] for t in trajectory.grid])
    return Outcome(float(np.max(np.abs(np.abs(trajectory.c_e) ** 2 - expected))))


@check('decay_oracle', 1e-8)
def decay_oracle(context):
    scenario = context.scenario('field_free_decay')
    integrator = scenario.integrator
    trajectory = evolve(scenario.system, scenario.field, scenario.grid.times(), integrator.init,
                        integrator.frame, integrator.rtol, integrator.atol)
    elapsed = trajectory.grid - trajectory.grid[0]
    gamma = scenario.system.gamma_g if integrator.init is InitialState.GROUND else scenario.system.gamma_e
    return Outcome(float(np.max(np.abs(trajectory.norm - np.exp(-gamma * elapsed)))))


@check('landau_zener', 1e-3)
def landau_zener(context):
    worst = 0.0
    for coupling in (0.1, 0.25, 0.5):
        worst = max(worst, abs(landau_zener_survival(coupling, 1.0, rtol=1e-7)
                               - lz_oracle(coupling, 1.0)))
    return Outcome(worst, detail='V in 0.1, 0.25, 0.5 at unit sweep rate')


@check('rk4_order', 4.0)
def rk4_order(context):
    """Worst is |e(h)/e(h/2) - 16| for a resonant Rabi run on eight grid intervals."""
    omega0 = 0.2
    params = SystemParams(omega_g=0.0, omega_e=1.0)
    field = FieldModel(1.0, Constant(omega0))
    grid = np.linspace(0.0, math.pi / omega0, 9)
    exact = np.array([math.cos(0.5 * omega0 * grid[-1]), 1j * math.sin(0.5 * omega0 * grid[-1])])

    def error(substeps):
        trajectory = propagate(params, field, grid, substeps=substeps)
        return float(np.max(np.abs(np.array([trajectory.c_g[-1], trajectory.c_e[-1]]) - exact)))

    ratio = error(2) / error(4)
    return Outcome(abs(ratio - 16.0), detail=f'error ratio {ratio:.2f}')


@check('analytic_vs_numeric', 0.05)
def analytic_vs_numeric(context):
    """Relative gap between the NADS ratio and the integrated |c_e/c_g| at pulse center."""
    scenario = context.scenario('slow_gaussian')
    integrator = scenario.integrator
    grid = scenario.grid.times()
    trajectory = evolve(scenario.system, scenario.field, grid, integrator.init,
                        Frame.ROTATING, integrator.rtol, integrator.atol)
    center = int(np.argmin(np.abs(grid - scenario.field.t_center)))
    window = grid[max(0, center - 40):center + 41]
    series = snapshot_series(scenario.system, scenario.field, window, context.omega_floor, scenario.factors)
    k = int(np.argmin(np.abs(window - scenario.field.t_center)))
    analytic = abs(reconstruct_bare_amplitudes(series, k, integrator.init).ratio)
    numeric = float(trajectory.ratio(integrator.init)[center])
    return Outcome(abs(analytic - numeric) / numeric,
                   detail=f'NADS {analytic:.6g} vs integrated {numeric:.6g}')


def run_check(name, context):
    func, tolerance = CHECKS[name]
    try:
        outcome = func(context)
    except (NadsError, ValidationError, ValueError, KeyError) as exc:
        logger.info('check %s raised %s: %s', name, type(exc).__name__, exc)
        return CheckResult(name, False, math.inf, tolerance, f'{type(exc).__name__}: {exc}')
    passed = outcome.passed
    if passed is None:
        passed = math.isfinite(outcome.worst) and outcome.worst <= tolerance
    result = CheckResult(name, bool(passed), float(outcome.worst), tolerance, outcome.detail)
    logger.info('%s %s worst=%.3e', 'passed' if result.passed else 'FAILED', name, result.worst)
    return result


def run_validation(scenario_dir=None, names=None, omega_floor=None):
    """Run the named checks (all by default) against a scenario directory."""
    scenario_dir = scenario_dir or settings.NADS_SCENARIO_DIR
    omega_floor = omega_floor if omega_floor is not None else settings.NADS_OMEGA_FLOOR
    context = ValidationContext.from_directory(scenario_dir, omega_floor)
    return ValidationReport(tuple(run_check(name, context) for name in (names or CHECKS)))
