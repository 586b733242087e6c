"""Matrix elements between the NADS, transition probability and bare-basis reconstruction.

The inner product is the plain Hermitian one on the bare basis. Phase and
decay integrals run from the first grid point by cumulative trapezoid and are
computed once per series.
"""
import cmath
import enum
import logging
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import RatioUndefined
from .field_model import phase_at

logger = logging.getLogger(__name__)

RATIO_TOL = 1e-14


class InitialState(str, enum.Enum):
    GROUND = 'ground'
    EXCITED = 'excited'


@dataclass(frozen=True)
class OverlapSet:
    t: float
    gg: float
    ee: float
    eg: complex
    p_ge: float


@dataclass(frozen=True)
class NadsComponents:
    """Real and virtual components as (c_g, c_e) coefficient pairs on |g>, |e>."""

    g_real: tuple
    g_virtual: tuple
    e_real: tuple
    e_virtual: tuple


@dataclass(frozen=True)
class ReconstructedAmplitudes:
    t: float
    init: InitialState
    ratio: complex
    components: NadsComponents

    @property
    def ratio_eg(self):
        return self.ratio


def probability_from_mixing(sin_half, cos_half):
    """|s c* - s* c|^2 / (|s|^2 + |c|^2)^2; accepts scalars or arrays."""
    bracket = sin_half * np.conj(cos_half) - np.conj(sin_half) * cos_half
    norm = np.abs(sin_half) ** 2 + np.abs(cos_half) ** 2
    return np.abs(bracket) ** 2 / norm ** 2


def transition_probability(snapshot):
    return float(probability_from_mixing(snapshot.sin_half, snapshot.cos_half))


def reverse_transition_probability(snapshot):
    """P for the excited-to-ground direction, from the mirrored bracket."""
    return float(probability_from_mixing(snapshot.cos_half, snapshot.sin_half))


class OverlapTables:
    """All matrix elements of one series, in concise and expanded form."""

    def __init__(self, series):
        grid = series.grid
        params = series.params
        field = series.field
        factors = series.factors
        columns = series.columns

        def cumtrapz(y):
            return cumulative_trapezoid(y, grid, initial=0)

        s = columns['sin_half']
        c = columns['cos_half']
        omega_G = columns['omega_G']
        omega_E = columns['omega_E']
        omega_tilde = columns['omega_tilde']
        carrier = field.carrier_omega

        self.grid = grid
        self.elapsed = grid - grid[0]
        self.norm = np.abs(s) ** 2 + np.abs(c) ** 2
        self.bracket_eg = s * np.conj(c) - np.conj(s) * c
        self.bracket_ge = c * np.conj(s) - np.conj(c) * s

        self.int_omega_G = cumtrapz(omega_G)
        self.int_omega_E = cumtrapz(omega_E)
        int_eg = cumtrapz(np.conj(omega_E) - omega_G - carrier)
        int_ge = cumtrapz(omega_E - np.conj(omega_G) - carrier)

        self.gg = self.norm * np.exp(2.0 * self.int_omega_G.imag)
        self.ee = self.norm * np.exp(2.0 * self.int_omega_E.imag)
        self.eg = self.bracket_eg * np.exp(1j * int_eg)
        self.ge = self.bracket_ge * np.exp(-1j * int_ge)

        gamma_sum = params.gamma_sum if factors.damping else 0.0
        if factors.envelope:
            log_deriv = np.array([field.envelope.log_derivative(float(t)) for t in grid])
        else:
            log_deriv = np.zeros_like(grid)
        decay = -0.5 * gamma_sum * self.elapsed
        self.gg_expanded = self.norm * np.exp(decay + cumtrapz(log_deriv - omega_tilde.imag))
        self.ee_expanded = self.norm * np.exp(decay + cumtrapz(log_deriv + omega_tilde.imag))
        self.eg_expanded = self.bracket_eg * np.exp(
            decay + cumtrapz(log_deriv + 1j * omega_tilde.real)
        )

    def probability(self, init=InitialState.GROUND):
        overlap = self.eg if InitialState(init) is InitialState.GROUND else self.ge
        return np.abs(overlap) ** 2 / (self.gg * self.ee)


_tables = weakref.WeakKeyDictionary()


def overlap_tables(series):
    tables = _tables.get(series)
    if tables is None:
        tables = _tables[series] = OverlapTables(series)
    return tables


def overlap_gg(series, k):
    return float(overlap_tables(series).gg[k])


def overlap_ee(series, k):
    return float(overlap_tables(series).ee[k])


def overlap_eg(series, k):
    return complex(overlap_tables(series).eg[k])


def overlap_ge(series, k):
    return complex(overlap_tables(series).ge[k])


def overlap_gg_expanded(series, k):
    return float(overlap_tables(series).gg_expanded[k])


def overlap_ee_expanded(series, k):
    return float(overlap_tables(series).ee_expanded[k])


def overlap_eg_expanded(series, k):
    return complex(overlap_tables(series).eg_expanded[k])


def nads_norms(series, k):
    tables = overlap_tables(series)
    return float(np.sqrt(tables.gg[k])), float(np.sqrt(tables.ee[k]))


def transition_probability_via_overlaps(series, k, init=InitialState.GROUND):
    """|<E|G>|^2 / (<G|G><E|E>) from the full overlaps, exponentials included."""
    return float(overlap_tables(series).probability(init)[k])


def overlap_set(series, k):
    tables = overlap_tables(series)
    return OverlapSet(
        t=float(series.grid[k]),
        gg=float(tables.gg[k]),
        ee=float(tables.ee[k]),
        eg=complex(tables.eg[k]),
        p_ge=transition_probability(series[k]),
    )


def reconstruct_bare_amplitudes(series, k, init=InitialState.GROUND):
    """Bare-basis content of the NADS the system starts in, returned as an amplitude ratio.

    Ground start gives c_e/c_g of |G~>, excited start c_g/c_e of |E~>. The
    ratio does not depend on the overall prefactors of the state.
    """
    init = InitialState(init)
    tables = overlap_tables(series)
    snapshot = series[k]
    carrier = series.field.carrier_omega
    elapsed = float(tables.elapsed[k])
    phi = phase_at(series.field, snapshot.t).phi
    int_G = complex(tables.int_omega_G[k])
    int_E = complex(tables.int_omega_E[k])

    components = NadsComponents(
        g_real=(cmath.exp(-1j * int_G), 0j),
        g_virtual=(0j, cmath.exp(-1j * (int_G + carrier * elapsed) - 1j * phi)),
        e_real=(0j, cmath.exp(-1j * int_E - 1j * phi)),
        e_virtual=(cmath.exp(-1j * (int_E - carrier * elapsed)), 0j),
    )
    cos_half = snapshot.cos_half
    sin_half = snapshot.sin_half
    if init is InitialState.GROUND:
        numerator = sin_half * components.g_virtual[1]
        denominator = cos_half * components.g_real[0]
    else:
        numerator = -sin_half * components.e_virtual[0]
        denominator = cos_half * components.e_real[1]
    if denominator == 0 or abs(denominator) < RATIO_TOL * abs(numerator):
        raise RatioUndefined(
            f'{init.value}-start amplitude ratio overflows at t={snapshot.t!r}', index=k
        )
    return ReconstructedAmplitudes(
        t=snapshot.t, init=init, ratio=numerator / denominator, components=components,
    )
