"""Instantaneous nonadiabatic dressed-state (NADS) quantities along a time grid.

The closed forms take the bare detuning, the damping sum, the envelope
log-derivative and the phase derivatives, and return the nonadiabatic detuning
and Rabi frequency, the Lambda splittings, the complex mixing functions
COS(theta/2), SIN(theta/2), and the NADS frequencies.

Square roots are taken on the principal branch at the first grid point and
continued to the nearest root afterwards; every choice is kept in the
series' branch log.
"""
import cmath
import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import BranchAmbiguity, DegenerateRabi, NumericalError
from .field_model import OMEGA_FLOOR, EnvelopeSample, PhaseSample, phase_at, rabi_at

logger = logging.getLogger(__name__)

BRANCH_TOL = 1e-14
DEGENERATE_TOL = 1e-12
UNIFORM_RTOL = 1e-9

SNAPSHOT_FIELDS = (
    't', 'omega', 'delta', 'delta_tilde', 'd_delta_tilde', 'omega_tilde', 'd_omega_tilde',
    'lambda1', 'lambda2', 'lambda_t1', 'lambda_t2', 'cos_half', 'sin_half',
    'omega_G', 'omega_E',
)


@dataclass(frozen=True)
class NonadiabaticFactors:
    """Switches for the nonadiabatic factors; all off gives the adiabatic dressed states."""

    damping: bool = True
    envelope: bool = True
    phase: bool = True

    @property
    def all_on(self):
        return self.damping and self.envelope and self.phase

    @property
    def keeps_derivatives(self):
        """d(Omega~)/dt is carried while either time-derivative factor is on."""
        return self.envelope or self.phase

    def mask(self, params, env, phase):
        if not self.damping:
            params = replace(params, gamma_g=0.0, gamma_e=0.0)
        if not self.envelope:
            env = env._replace(log_deriv=0.0, dlog_deriv=0.0)
        if not self.phase:
            phase = phase._replace(dphi=0.0, d2phi=0.0)
        return params, env, phase


ALL_FACTORS = NonadiabaticFactors()


@dataclass(frozen=True)
class NadsSnapshot:
    t: float
    omega: float
    delta: float
    delta_tilde: complex
    d_delta_tilde: complex
    omega_tilde: complex
    d_omega_tilde: complex
    lambda1: complex
    lambda2: complex
    lambda_t1: complex
    lambda_t2: complex
    cos_half: complex
    sin_half: complex
    omega_G: complex
    omega_E: complex


@dataclass(frozen=True)
class BranchLog:
    """Root choice per grid point: +1 kept the principal root (times sign_delta), -1 took its negative."""

    sign_delta: int
    omega_tilde: tuple
    cos_half: tuple
    sin_half: tuple

    def flips(self, quantity):
        choices = getattr(self, quantity)
        return tuple(k for k in range(1, len(choices)) if choices[k] != choices[k - 1])


@dataclass(frozen=True, eq=False)
class SnapshotSeries:
    grid: np.ndarray
    snapshots: tuple
    branch_log: BranchLog
    params: object
    field: object
    factors: NonadiabaticFactors = ALL_FACTORS

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, k):
        return self.snapshots[k]

    @property
    def step(self):
        return float(self.grid[1] - self.grid[0])

    @property
    def initial(self):
        """Subscript-0 quantities: the snapshot at the first grid point."""
        return self.snapshots[0]

    @cached_property
    def columns(self):
        return {
            name: np.array([getattr(s, name) for s in self.snapshots])
            for name in SNAPSHOT_FIELDS
        }

    def column(self, name):
        return self.columns[name]


class AdiabaticReference(NamedTuple):
    omega_ads: float
    cos_ads: float
    sin_ads: float


def sign_of(delta):
    """sgn with sgn(0) = +1."""
    return 1 if delta >= 0 else -1


def detuning(params, field):
    return params.omega_e - params.omega_g - field.carrier_omega


def nonadiabatic_detuning(delta, params, env, phase):
    delta_tilde = (
        delta - 0.5j * params.gamma_sum - (phase.dphi - 1j * env.log_deriv)
    )
    d_delta_tilde = -phase.d2phi + 1j * env.dlog_deriv
    return delta_tilde, d_delta_tilde


def _nearest_root(root, prev):
    """Pick root or -root, whichever is closer to prev; returns (value, choice)."""
    if prev is None or prev == 0 or root == 0:
        return root, 1
    d_same = abs(root - prev)
    d_flip = abs(root + prev)
    if abs(d_same - d_flip) <= BRANCH_TOL * max(d_same, d_flip):
        raise BranchAmbiguity(
            f'roots {root!r} and {-root!r} equidistant from previous value {prev!r}'
        )
    if d_same < d_flip:
        return root, 1
    return -root, -1


def _rabi_branch(omega, delta_tilde, d_delta_tilde, sign_delta, prev):
    root = cmath.sqrt(omega * omega + delta_tilde * delta_tilde - 2j * d_delta_tilde)
    return _nearest_root(sign_delta * root, prev)


def nonadiabatic_rabi(omega, delta_tilde, d_delta_tilde, sign_delta, prev=None):
    """sign_delta * sqrt(Omega^2 + dw~^2 - 2i d(dw~)/dt), continued from prev when given."""
    return _rabi_branch(omega, delta_tilde, d_delta_tilde, sign_delta, prev)[0]


def lambdas(delta_tilde, omega_tilde, d_omega_tilde):
    if abs(omega_tilde) < DEGENERATE_TOL:
        raise DegenerateRabi(f'nonadiabatic Rabi frequency {omega_tilde!r} is degenerate')
    lambda1 = 0.5 * (delta_tilde + omega_tilde)
    lambda2 = 0.5 * (delta_tilde - omega_tilde)
    shift = -1j * d_omega_tilde / (2.0 * omega_tilde)
    return lambda1, lambda2, lambda1 + shift, lambda2 + shift


def _mixing_branch(lambda_t1, lambda_t2, omega_tilde, sign_delta, prev):
    if abs(omega_tilde) < DEGENERATE_TOL:
        raise DegenerateRabi(f'nonadiabatic Rabi frequency {omega_tilde!r} is degenerate')
    prev_cos, prev_sin = prev if prev is not None else (None, None)
    cos_half, cos_choice = _nearest_root(cmath.sqrt(lambda_t1 / omega_tilde), prev_cos)
    sin_half, sin_choice = _nearest_root(
        sign_delta * cmath.sqrt(-lambda_t2 / omega_tilde), prev_sin
    )
    return cos_half, sin_half, cos_choice, sin_choice


def mixing_functions(lambda_t1, lambda_t2, omega_tilde, sign_delta, prev=None):
    """COS(theta/2) = sqrt(L~1/W~), SIN(theta/2) = sgn * sqrt(-L~2/W~)."""
    cos_half, sin_half, _, _ = _mixing_branch(lambda_t1, lambda_t2, omega_tilde, sign_delta, prev)
    return cos_half, sin_half


def nads_frequencies(params, lambda2, env, phase):
    omega_G = params.omega_g + lambda2
    omega_E = (
        params.omega_e - lambda2 - 0.5j * params.gamma_sum
        - (phase.dphi - 1j * env.log_deriv)
    )
    return omega_G, omega_E


def adiabatic_reference(omega, delta):
    """Adiabatic dressed-state limit: real Rabi frequency and mixing pair."""
    sign = sign_of(delta)
    omega_ads = sign * math.hypot(omega, delta)
    if omega_ads == 0:
        return AdiabaticReference(0.0, 1.0, 0.0)
    cos_ads = math.sqrt((delta + omega_ads) / (2.0 * omega_ads))
    sin_ads = sign * math.sqrt((omega_ads - delta) / (2.0 * omega_ads))
    return AdiabaticReference(omega_ads, cos_ads, sin_ads)


def _checked_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError('grid needs at least two points')
    steps = np.diff(grid)
    step = steps[0]
    if step <= 0 or not np.allclose(steps, step, rtol=UNIFORM_RTOL, atol=0.0):
        raise ValueError('grid must be uniform and increasing')
    return grid, float(step)


def snapshot_series(params, field, grid, omega_floor=OMEGA_FLOOR, factors=ALL_FACTORS):
    """Evaluate every NADS quantity on a uniform grid.

    d(Omega~)/dt comes from second-order finite differences of the
    branch-continuous Omega~ (one-sided at the ends). Inner errors are
    re-raised with the grid index attached.
    """
    grid, step = _checked_grid(grid)
    delta = detuning(params, field)
    sign_delta = sign_of(delta)

    samples = []
    omega_tilde = np.empty(grid.size, dtype=complex)
    rabi_choices = []
    prev = None
    for k, t in enumerate(grid):
        t = float(t)
        try:
            env = rabi_at(params, field, t, omega_floor)
            local, env, phase = factors.mask(params, env, phase_at(field, t))
            delta_tilde, d_delta_tilde = nonadiabatic_detuning(delta, local, env, phase)
            prev, choice = _rabi_branch(env.omega, delta_tilde, d_delta_tilde, sign_delta, prev)
        except NumericalError as exc:
            raise exc.at(k)
        samples.append((local, env, phase, delta_tilde, d_delta_tilde))
        omega_tilde[k] = prev
        rabi_choices.append(choice)

    d_omega_tilde = np.gradient(omega_tilde, step, edge_order=2 if grid.size > 2 else 1)
    if not factors.keeps_derivatives:
        d_omega_tilde = np.zeros_like(omega_tilde)

    snapshots = []
    cos_choices = []
    sin_choices = []
    prev = None
    for k, (local, env, phase, delta_tilde, d_delta_tilde) in enumerate(samples):
        w = complex(omega_tilde[k])
        dw = complex(d_omega_tilde[k])
        try:
            lambda1, lambda2, lambda_t1, lambda_t2 = lambdas(delta_tilde, w, dw)
            cos_half, sin_half, c_choice, s_choice = _mixing_branch(
                lambda_t1, lambda_t2, w, sign_delta, prev
            )
        except NumericalError as exc:
            raise exc.at(k)
        prev = (cos_half, sin_half)
        omega_G, omega_E = nads_frequencies(local, lambda2, env, phase)
        snapshots.append(NadsSnapshot(
            t=env.t, omega=env.omega, delta=delta,
            delta_tilde=delta_tilde, d_delta_tilde=d_delta_tilde,
            omega_tilde=w, d_omega_tilde=dw,
            lambda1=lambda1, lambda2=lambda2, lambda_t1=lambda_t1, lambda_t2=lambda_t2,
            cos_half=cos_half, sin_half=sin_half,
            omega_G=omega_G, omega_E=omega_E,
        ))
        cos_choices.append(c_choice)
        sin_choices.append(s_choice)

    branch_log = BranchLog(
        sign_delta=sign_delta,
        omega_tilde=tuple(rabi_choices),
        cos_half=tuple(cos_choices),
        sin_half=tuple(sin_choices),
    )
    for quantity in ('omega_tilde', 'cos_half', 'sin_half'):
        flips = branch_log.flips(quantity)
        if flips:
            logger.debug('%s left the principal branch %d times, first at index %d',
                         quantity, len(flips), flips[0])
    return SnapshotSeries(
        grid=grid, snapshots=tuple(snapshots), branch_log=branch_log,
        params=params, field=field, factors=factors,
    )
