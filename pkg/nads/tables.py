"""Result tables for the snapshot and evolve commands, and their file formats.

Tables are pandas DataFrames. Complex quantities become paired ``Re_``/``Im_``
columns. The CSV form carries the command and the fully resolved scenario in
``#`` header lines; numbers use the configured fixed format so identical runs
give identical bytes.
"""
import json
import logging
import math

import numpy as np
import pandas as pd
from django.conf import settings

from .exceptions import RatioUndefined
from .field_model import OMEGA_FLOOR
from .nads_core import adiabatic_reference, snapshot_series
from .overlap_transitions import (
    nads_norms, overlap_tables, probability_from_mixing, reconstruct_bare_amplitudes,
)
from .scenarios import scenario_to_dict
from .tdse_integrator import evolve

logger = logging.getLogger(__name__)


def _split(name, values):
    values = np.asarray(values, dtype=complex)
    return {f'Re_{name}': values.real, f'Im_{name}': values.imag}


def scenario_series(scenario, omega_floor=OMEGA_FLOOR):
    return snapshot_series(
        scenario.system, scenario.field, scenario.grid.times(),
        omega_floor=omega_floor, factors=scenario.factors,
    )


def snapshot_table(scenario, omega_floor=OMEGA_FLOOR, series=None):
    """One row per grid point with every NADS quantity, the overlaps and P."""
    if series is None:
        series = scenario_series(scenario, omega_floor)
    columns = series.columns
    tables = overlap_tables(series)
    reference = [adiabatic_reference(s.omega, s.delta) for s in series]
    norms = np.array([nads_norms(series, k) for k in range(len(series))])

    data = {'t': series.grid, 'Omega': columns['omega'], 'delta': columns['delta']}
    for name in ('delta_tilde', 'omega_tilde', 'cos_half', 'sin_half', 'omega_G', 'omega_E'):
        data.update(_split(name, columns[name]))
    data['gg'] = tables.gg
    data['ee'] = tables.ee
    data.update(_split('eg', tables.eg))
    data['P'] = probability_from_mixing(columns['sin_half'], columns['cos_half'])
    data['norm_G'] = norms[:, 0]
    data['norm_E'] = norms[:, 1]
    data['omega_ads'] = [r.omega_ads for r in reference]
    data['cos_ads'] = [r.cos_ads for r in reference]
    data['sin_ads'] = [r.sin_ads for r in reference]
    return pd.DataFrame(data)


def nads_ratio_column(series, init):
    """|ratio| from the NADS reconstruction; NaN where the ratio overflows."""
    ratios = np.empty(len(series))
    for k in range(len(series)):
        try:
            ratios[k] = abs(reconstruct_bare_amplitudes(series, k, init).ratio)
        except RatioUndefined as exc:
            logger.debug('%s', exc)
            ratios[k] = math.nan
    return ratios


def evolve_table(scenario, compare=False, omega_floor=OMEGA_FLOOR):
    """Integrated bare amplitudes; with ``compare`` also the two ratio routes."""
    integrator = scenario.integrator
    trajectory = evolve(
        scenario.system, scenario.field, scenario.grid.times(),
        init=integrator.init, frame=integrator.frame,
        rtol=integrator.rtol, atol=integrator.atol,
    )
    data = {'t': trajectory.grid}
    data.update(_split('c_g', trajectory.c_g))
    data.update(_split('c_e', trajectory.c_e))
    data['norm'] = trajectory.norm
    if compare or scenario.wants('ratio'):
        with np.errstate(divide='ignore', invalid='ignore'):
            data['ratio'] = trajectory.ratio(integrator.init)
        series = scenario_series(scenario, omega_floor)
        data['ratio_nads'] = nads_ratio_column(series, integrator.init)
    return pd.DataFrame(data)


def render_csv(frame, command, scenario=None, float_format=None):
    float_format = float_format or settings.NADS_FLOAT_FORMAT
    header = [f'# command: {command}']
    if scenario is not None:
        header.append('# scenario: ' + json.dumps(scenario_to_dict(scenario), sort_keys=True))
    body = frame.to_csv(index=False, float_format=float_format, na_rep='nan', lineterminator='\n')
    return ''.join(line + '\n' for line in header) + body


def _plain(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_json(frame, command, scenario=None):
    """JSON mirror of a table; non-finite numbers become null."""
    document = {
        'command': command,
        'scenario': scenario_to_dict(scenario) if scenario is not None else None,
        'columns': list(frame.columns),
        'rows': [
            [_plain(value) for value in row]
            for row in frame.astype(object).itertuples(index=False, name=None)
        ],
    }
    return json.dumps(document, indent=1, allow_nan=False) + '\n'
