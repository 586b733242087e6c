"""Parameter sweeps over a base scenario.

Axes name a dotted path in the resolved scenario (``field.envelope.tau``,
``system.gamma_e``). Every sweep point is a fresh scenario dict that goes
through the normal validation. Points run in a process pool and come back in
axis-major order; a failing point records its error and the sweep goes on.
"""
import copy
import difflib
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import django
import numpy as np
import pandas as pd
from django.conf import settings
from django.core.exceptions import ValidationError

from .exceptions import NadsError
from .field_model import OMEGA_FLOOR
from .overlap_transitions import probability_from_mixing
from .scenarios import scenario_from_dict, scenario_to_dict
from .tables import scenario_series
from .tdse_integrator import evolve

logger = logging.getLogger(__name__)

MAX_AXES = 2


def _max_p(scenario, omega_floor):
    columns = scenario_series(scenario, omega_floor).columns
    return float(np.max(probability_from_mixing(columns['sin_half'], columns['cos_half'])))


def _trajectory(scenario):
    integrator = scenario.integrator
    return evolve(
        scenario.system, scenario.field, scenario.grid.times(),
        init=integrator.init, frame=integrator.frame,
        rtol=integrator.rtol, atol=integrator.atol,
    )


def _final_pe(scenario, omega_floor):
    return float(abs(_trajectory(scenario).c_e[-1]) ** 2)


def _final_norm(scenario, omega_floor):
    return float(_trajectory(scenario).norm[-1])


def _min_norm(scenario, omega_floor):
    return float(np.min(_trajectory(scenario).norm))


REDUCERS = {
    'maxP': _max_p,
    'finalPe': _final_pe,
    'finalNorm': _final_norm,
    'minNorm': _min_norm,
}


@dataclass(frozen=True)
class SweepAxis:
    path: str
    start: float
    stop: float
    count: int
    log: bool = False

    def values(self):
        if self.log:
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SweepSpec:
    base: object
    axes: tuple
    reduce: str

    @property
    def shape(self):
        return tuple(axis.count for axis in self.axes)


def parse_axis(text):
    """``path:min:max:count[:log]`` -> SweepAxis."""
    parts = text.split(':')
    if len(parts) not in (4, 5) or (len(parts) == 5 and parts[4] != 'log'):
        raise ValidationError({'axis': [f'"{text}" is not PATH:MIN:MAX:COUNT[:log]']})
    path, start, stop, count = parts[:4]
    try:
        axis = SweepAxis(path, float(start), float(stop), int(count), log=len(parts) == 5)
    except ValueError as exc:
        raise ValidationError({'axis': [f'"{text}": {exc}']}) from exc
    if axis.count < 2:
        raise ValidationError({'axis': [f'"{text}": count must be at least 2']})
    if not (math.isfinite(axis.start) and math.isfinite(axis.stop)):
        raise ValidationError({'axis': [f'"{text}": bounds must be finite']})
    if axis.log and not (axis.start > 0 and axis.stop > 0):
        raise ValidationError({'axis': [f'"{text}": log axes need positive bounds']})
    return axis


def _leaf_paths(node, prefix=''):
    for key, value in node.items():
        path = f'{prefix}.{key}' if prefix else key
        if isinstance(value, dict):
            yield from _leaf_paths(value, path)
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            yield path


def _resolve(resolved, path):
    known = sorted(_leaf_paths(resolved))
    if path not in known:
        message = f'"{path}" is not a numeric scenario parameter'
        close = difflib.get_close_matches(path, known, n=1)
        if close:
            message += f'; did you mean "{close[0]}"?'
        raise ValidationError({'axis': [message]})
    return path


def _assign(resolved, path, value):
    *parents, leaf = path.split('.')
    node = resolved
    for key in parents:
        node = node[key]
    node[leaf] = float(value)


def build_sweep(base, axes, reduce):
    """Check axes and reducer against the base scenario before anything runs."""
    axes = tuple(parse_axis(a) if isinstance(a, str) else a for a in axes)
    if not 1 <= len(axes) <= MAX_AXES:
        raise ValidationError({'axis': [f'a sweep takes 1 to {MAX_AXES} axes, got {len(axes)}']})
    if reduce not in REDUCERS:
        raise ValidationError({'reduce': [f'unknown reducer "{reduce}"; use one of {", ".join(REDUCERS)}']})
    resolved = scenario_to_dict(base)
    paths = [_resolve(resolved, axis.path) for axis in axes]
    if len(set(paths)) != len(paths):
        raise ValidationError({'axis': ['the same parameter is swept twice']})
    return SweepSpec(base=base, axes=axes, reduce=reduce)


def sweep_points(spec):
    """(values, resolved scenario dict) per point, first axis outermost."""
    resolved = scenario_to_dict(spec.base)
    grids = [axis.values() for axis in spec.axes]
    for values in itertools.product(*grids):
        point = copy.deepcopy(resolved)
        for axis, value in zip(spec.axes, values):
            _assign(point, axis.path, value)
        yield tuple(float(v) for v in values), point


def run_point(point, reduce, omega_floor=OMEGA_FLOOR):
    """Reduced value of one sweep point, or the error that stopped it."""
    try:
        scenario = scenario_from_dict(point)
        return REDUCERS[reduce](scenario, omega_floor), ''
    except ValidationError as exc:
        return math.nan, '; '.join(exc.messages)
    except (NadsError, ValueError) as exc:
        return math.nan, f'{type(exc).__name__}: {exc}'


def _run_packed(args):
    return run_point(*args)


def run_sweep(spec, workers=None, omega_floor=OMEGA_FLOOR):
    """One row per sweep point: the axis values, the reduced scalar and an error column."""
    workers = workers or settings.NADS_WORKERS
    points = list(sweep_points(spec))
    jobs = [(point, spec.reduce, omega_floor) for _, point in points]
    logger.info('sweeping %s over %d points with %d workers',
                spec.base.name, len(jobs), min(workers, len(jobs)))
    if workers <= 1 or len(jobs) == 1:
        results = [_run_packed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs)), initializer=django.setup) as pool:
            results = list(pool.map(_run_packed, jobs))

    rows = []
    for (values, _), (value, error) in zip(points, results):
        if error:
            logger.warning('sweep point %s failed: %s', values, error)
        rows.append((*values, value, error))
    columns = [axis.path for axis in spec.axes] + [spec.reduce, 'error']
    return pd.DataFrame(rows, columns=columns)
