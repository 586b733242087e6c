"""Reference integrator for the damped two-level Schrodinger equation.

Lab frame keeps the full real field (no rotating-wave approximation). Rotating
frame moves the excited amplitude to the carrier, c_e -> c_e exp(i(omega t + phi)),
and keeps only the co-rotating half of the coupling.

Classic fourth-order Runge-Kutta with a fixed substep; the substep is halved
until the final amplitudes stop changing within rtol/atol.
"""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import StepUnderflow
from .field_model import Chirp, Constant, FieldModel, SystemParams, field_value, phase_at, rabi_envelope
from .overlap_transitions import InitialState

logger = logging.getLogger(__name__)

MIN_SUBSTEP_FRACTION = 1e-12
# changes below this multiple of eps*|c| are round-off, not truncation error
ROUNDOFF_FLOOR = 1e3 * np.finfo(float).eps
# largest (fastest rate) * substep the controller starts from
START_PHASE_STEP = 0.25


class Frame(str, enum.Enum):
    LAB = 'lab'
    ROTATING = 'rotating'


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: np.ndarray
    c_g: np.ndarray
    c_e: np.ndarray
    frame: Frame
    substeps: int = 1

    @property
    def norm(self):
        return np.abs(self.c_g) ** 2 + np.abs(self.c_e) ** 2

    @property
    def populations(self):
        return np.abs(self.c_g) ** 2, np.abs(self.c_e) ** 2

    def ratio(self, init=InitialState.GROUND):
        """|c_e/c_g| for a ground start, |c_g/c_e| for an excited start."""
        if InitialState(init) is InitialState.GROUND:
            return np.abs(self.c_e) / np.abs(self.c_g)
        return np.abs(self.c_g) / np.abs(self.c_e)


def initial_amplitudes(init):
    if InitialState(init) is InitialState.GROUND:
        return 1 + 0j, 0j
    return 0j, 1 + 0j


def rhs(t, c, params, field, frame):
    c_g, c_e = c
    if Frame(frame) is Frame.LAB:
        coupling = field_value(field, params, t)
        return (
            -1j * (params.omega_g - 0.5j * params.gamma_g) * c_g - 1j * coupling * c_e,
            -1j * (params.omega_e - 0.5j * params.gamma_e) * c_e - 1j * coupling * c_g,
        )
    half_rabi = 0.5 * rabi_envelope(params, field, t)
    detuning = params.omega_e - params.omega_g - field.carrier_omega - phase_at(field, t).dphi
    return (
        -0.5 * params.gamma_g * c_g + 1j * half_rabi * c_e,
        -(1j * detuning + 0.5 * params.gamma_e) * c_e + 1j * half_rabi * c_g,
    )


def rk4_step(deriv, t, c_g, c_e, h):
    """Runge-Kutta 4 step for the amplitude pair."""
    h2 = 0.5 * h
    k1g, k1e = deriv(t, (c_g, c_e))
    k2g, k2e = deriv(t + h2, (c_g + h2 * k1g, c_e + h2 * k1e))
    k3g, k3e = deriv(t + h2, (c_g + h2 * k2g, c_e + h2 * k2e))
    k4g, k4e = deriv(t + h, (c_g + h * k3g, c_e + h * k3e))
    h6 = h / 6.0
    return (
        c_g + h6 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g),
        c_e + h6 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e),
    )


def _checked_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise ValueError('grid needs at least two increasing points')
    return grid


def propagate(params, field, grid, init=InitialState.GROUND, frame=Frame.ROTATING, substeps=1,
              c0=None):
    """Fixed-substep RK4 over the grid, reporting amplitudes at every grid point.

    ``c0`` overrides the bare initial state with an explicit (c_g, c_e) pair.
    """
    grid = _checked_grid(grid)
    frame = Frame(frame)

    def deriv(t, c):
        return rhs(t, c, params, field, frame)

    c_g = np.empty(grid.size, dtype=complex)
    c_e = np.empty(grid.size, dtype=complex)
    g, e = initial_amplitudes(init) if c0 is None else (complex(c0[0]), complex(c0[1]))
    c_g[0], c_e[0] = g, e
    for k in range(grid.size - 1):
        t0 = float(grid[k])
        h = (float(grid[k + 1]) - t0) / substeps
        for j in range(substeps):
            g, e = rk4_step(deriv, t0 + j * h, g, e, h)
        c_g[k + 1], c_e[k + 1] = g, e
    return Trajectory(grid=grid, c_g=c_g, c_e=c_e, frame=frame, substeps=substeps)


def _rate_scale(params, field, grid, frame):
    """Fastest rate in the equations, used to pick the starting substep."""
    peak_rabi = abs(params.mu * field.envelope.omega0)
    chirp = abs(field.phase.beta) * float(np.max(np.abs(grid - field.t_center)))
    damping = 0.5 * (params.gamma_g + params.gamma_e)
    if frame is Frame.LAB:
        return max(abs(params.omega_g), abs(params.omega_e)) + abs(field.carrier_omega) \
            + chirp + peak_rabi + damping
    detuning = abs(params.omega_e - params.omega_g - field.carrier_omega)
    return detuning + chirp + 0.5 * peak_rabi + damping


def evolve(params, field, grid, init=InitialState.GROUND, frame=Frame.ROTATING,
           rtol=1e-10, atol=1e-12, c0=None):
    """Integrate the damped two-level equations from a bare state; amplitudes on the requested grid.

    The substep count per grid interval doubles until one more halving
    changes the final amplitudes by less than atol + rtol*|c|. Raises
    StepUnderflow when the substep gets too small, or when the change has
    reached round-off without meeting the tolerance.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError('rtol and atol must be positive')
    grid = _checked_grid(grid)
    frame = Frame(frame)
    span = float(grid[-1] - grid[0])
    widest = float(np.max(np.diff(grid)))
    rate = _rate_scale(params, field, grid, frame)
    substeps = max(1, math.ceil(widest * rate / START_PHASE_STEP))

    coarse = propagate(params, field, grid, init, frame, substeps, c0)
    previous = math.inf
    while True:
        if widest / (2 * substeps) < MIN_SUBSTEP_FRACTION * span:
            raise StepUnderflow(
                f'substep {widest / (2 * substeps):.3e} below {MIN_SUBSTEP_FRACTION:g} of the span'
            )
        fine = propagate(params, field, grid, init, frame, 2 * substeps, c0)
        change = max(abs(fine.c_g[-1] - coarse.c_g[-1]), abs(fine.c_e[-1] - coarse.c_e[-1]))
        size = max(abs(fine.c_g[-1]), abs(fine.c_e[-1]))
        scale = atol + rtol * size
        if np.isfinite(change) and change <= scale:
            logger.debug('%s frame converged with %d substeps per grid step',
                         frame.value, fine.substeps)
            return fine
        if not change < previous or change <= ROUNDOFF_FLOOR * size:
            raise StepUnderflow(
                f'change {change:.3e} stopped shrinking at {fine.substeps} substeps; '
                f'tolerance {scale:.3e} cannot be met'
            )
        previous = change
        logger.debug('halving substep: %d -> %d (change %.3e)', substeps, 2 * substeps, change)
        coarse = fine
        substeps *= 2


def rabi_oracle(omega0, t):
    """Resonant undamped two-level populations (p_g, p_e)."""
    if omega0 <= 0:
        raise ValueError('omega0 must be positive')
    p_e = math.sin(0.5 * omega0 * t) ** 2
    return 1.0 - p_e, p_e


def lz_oracle(coupling, sweep_rate):
    """Landau-Zener diabatic survival exp(-2 pi V^2 / |alpha|)."""
    if sweep_rate == 0:
        raise ValueError('sweep_rate must be non-zero')
    return math.exp(-2.0 * math.pi * coupling * coupling / abs(sweep_rate))


def _diabatic_like(hamiltonian):
    """Eigenvector of a 2x2 Hermitian matrix with the largest ground-state weight."""
    _, vectors = np.linalg.eigh(hamiltonian)
    return vectors[:, int(np.argmax(np.abs(vectors[0])))]


def landau_zener_survival(coupling, sweep_rate, window=40.0, step=0.5, rtol=1e-8, atol=1e-10):
    """Diabatic survival of a linear sweep, integrated in the rotating frame.

    The sweep is a constant envelope 2V with chirp beta = sweep_rate at exact
    resonance, run over +/- window/sqrt(|sweep_rate|). The state starts in and is
    projected onto the adiabatic eigenvector that is ground-like at each edge,
    which removes the finite-window oscillation of the bare populations.
    """
    if sweep_rate == 0:
        raise ValueError('sweep_rate must be non-zero')
    params = SystemParams(omega_g=0.0, omega_e=1.0)
    field = FieldModel(1.0, Constant(2.0 * abs(coupling)), Chirp(beta=sweep_rate))
    half = window / math.sqrt(abs(sweep_rate))
    grid = np.linspace(-half, half, int(round(2.0 * half / step)) + 1)

    def hamiltonian(t):
        detuning = -phase_at(field, t).dphi
        return np.array([[0.0, -abs(coupling)], [-abs(coupling), detuning]])

    start = _diabatic_like(hamiltonian(grid[0]))
    trajectory = evolve(params, field, grid, frame=Frame.ROTATING, rtol=rtol, atol=atol, c0=start)
    final = np.array([trajectory.c_g[-1], trajectory.c_e[-1]])
    return float(abs(np.vdot(_diabatic_like(hamiltonian(grid[-1])), final)) ** 2)
