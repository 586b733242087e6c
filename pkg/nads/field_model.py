"""Driving field in carrier-envelope form and the two-level system parameters.

Natural units with hbar = 1: every frequency and rate is in rad per time unit
and the envelope is parameterized directly by its peak Rabi frequency.
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

from .exceptions import EnvelopeUnderflow

OMEGA_FLOOR = 1e-30


@dataclass(frozen=True)
class SystemParams:
    omega_g: float
    omega_e: float
    mu: float = 1.0
    gamma_g: float = 0.0
    gamma_e: float = 0.0

    def __post_init__(self):
        if self.gamma_g < 0 or self.gamma_e < 0:
            raise ValueError('damping rates must be non-negative')
        if not self.omega_e > self.omega_g:
            raise ValueError('omega_e must lie above omega_g')

    @property
    def gamma_sum(self):
        return self.gamma_g + self.gamma_e


@dataclass(frozen=True)
class Constant:
    """Continuous-wave envelope. omega0 = 0 switches the field off."""

    omega0: float
    kind = 'constant'

    def __post_init__(self):
        if self.omega0 < 0:
            raise ValueError('omega0 must be non-negative')

    @property
    def t_center(self):
        return 0.0

    def shape(self, t):
        return self.omega0

    def log_derivative(self, t):
        return 0.0

    def dlog_derivative(self, t):
        return 0.0


@dataclass(frozen=True)
class Gaussian:
    """Omega(t) = omega0 * exp(-((t - t_center)/tau)**2)."""

    omega0: float
    t_center: float = 0.0
    tau: float = 1.0
    kind = 'gaussian'

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError('omega0 must be positive')
        if self.tau <= 0:
            raise ValueError('tau must be positive')

    def shape(self, t):
        x = (t - self.t_center) / self.tau
        return self.omega0 * math.exp(-x * x)

    def log_derivative(self, t):
        return -2.0 * (t - self.t_center) / self.tau ** 2

    def dlog_derivative(self, t):
        return -2.0 / self.tau ** 2


@dataclass(frozen=True)
class Sech:
    """Omega(t) = omega0 * sech((t - t_center)/tau)."""

    omega0: float
    t_center: float = 0.0
    tau: float = 1.0
    kind = 'sech'

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError('omega0 must be positive')
        if self.tau <= 0:
            raise ValueError('tau must be positive')

    def shape(self, t):
        # sech written through exp(-|x|) so that the wings underflow instead of overflowing cosh
        x = abs(t - self.t_center) / self.tau
        q = math.exp(-x)
        return self.omega0 * 2.0 * q / (1.0 + q * q)

    def log_derivative(self, t):
        return -math.tanh((t - self.t_center) / self.tau) / self.tau

    def dlog_derivative(self, t):
        x = abs(t - self.t_center) / self.tau
        q = math.exp(-x)
        sech = 2.0 * q / (1.0 + q * q)
        return -sech * sech / self.tau ** 2


Envelope = Union[Constant, Gaussian, Sech]

ENVELOPES = {
    'constant': Constant,
    'gaussian': Gaussian,
    'sech': Sech,
}


@dataclass(frozen=True)
class Chirp:
    """Quadratic phase phi(t) = phi0 + (beta/2)(t - t_center)**2."""

    phi0: float = 0.0
    beta: float = 0.0


@dataclass(frozen=True)
class FieldModel:
    carrier_omega: float
    envelope: Envelope
    phase: Chirp = field(default_factory=Chirp)

    @property
    def t_center(self):
        return self.envelope.t_center

    @property
    def is_pulsed(self):
        return self.envelope.kind != 'constant'


class EnvelopeSample(NamedTuple):
    t: float
    omega: float
    log_deriv: float
    dlog_deriv: float


class PhaseSample(NamedTuple):
    phi: float
    dphi: float
    d2phi: float


def rabi_envelope(params, field, t):
    """Unguarded Omega(t); zero is allowed (used by the integrator)."""
    return params.mu * field.envelope.shape(t)


def rabi_at(params, field, t, omega_floor=OMEGA_FLOOR):
    """Omega(t) with its logarithmic derivative and the derivative of that.

    Everything comes from closed forms of the envelope. Raises
    EnvelopeUnderflow when Omega(t) is below ``omega_floor``: the
    nonadiabatic factor Omega^-1 dOmega/dt is meaningless there.
    """
    omega = rabi_envelope(params, field, t)
    if not omega >= omega_floor:
        raise EnvelopeUnderflow(
            f'Rabi envelope {omega:.3e} below floor {omega_floor:.1e} at t={t!r}'
        )
    envelope = field.envelope
    return EnvelopeSample(t, omega, envelope.log_derivative(t), envelope.dlog_derivative(t))


def phase_at(field, t):
    s = t - field.t_center
    beta = field.phase.beta
    return PhaseSample(field.phase.phi0 + 0.5 * beta * s * s, beta * s, beta)


def field_value(field, params, t):
    """Real off-diagonal coupling -Omega(t) cos(omega t + phi(t)) of the lab-frame Hamiltonian."""
    phi = phase_at(field, t).phi
    return -rabi_envelope(params, field, t) * math.cos(field.carrier_omega * t + phi)
