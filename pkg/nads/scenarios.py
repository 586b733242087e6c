"""Scenario files: strict JSON schema, validation, defaults and serialization."""
import difflib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from . import forms
from .exceptions import ParseError
from .field_model import ENVELOPES, Chirp, FieldModel, SystemParams
from .nads_core import NonadiabaticFactors
from .overlap_transitions import InitialState
from .tdse_integrator import Frame

logger = logging.getLogger(__name__)

TOP_KEYS = ('name', 'system', 'field', 'grid', 'integrator', 'factors', 'outputs', 'step_policy')
REQUIRED_KEYS = ('name', 'system', 'field', 'grid')
FIELD_KEYS = ('carrier_omega', 'envelope', 'phase')
ENVELOPE_KEYS = ('kind', 'omega0', 't_center', 'tau')

SECTION_FORMS = {
    'system': forms.SystemForm,
    'grid': forms.GridForm,
    'integrator': forms.IntegratorForm,
    'factors': forms.FactorsForm,
}


@dataclass(frozen=True)
class GridSpec:
    t_start: float
    t_end: float
    step: float

    @property
    def count(self):
        return int(round((self.t_end - self.t_start) / self.step)) + 1

    def times(self):
        return np.linspace(self.t_start, self.t_end, self.count)


@dataclass(frozen=True)
class IntegratorSpec:
    frame: Frame = Frame.ROTATING
    rtol: float = 1e-10
    atol: float = 1e-12
    init: InitialState = InitialState.GROUND


@dataclass(frozen=True)
class Scenario:
    name: str
    system: SystemParams
    field: FieldModel
    grid: GridSpec
    integrator: IntegratorSpec = IntegratorSpec()
    factors: NonadiabaticFactors = NonadiabaticFactors()
    outputs: tuple = ('snapshot',)
    step_policy: str = 'error'

    def wants(self, product):
        return product in self.outputs


def _check_keys(raw, allowed, path):
    if not isinstance(raw, dict):
        raise ParseError(f'{path or "scenario"} must be an object', field=path)
    for key in raw:
        if key not in allowed:
            where = f'{path}.{key}' if path else key
            message = f'unknown key "{where}"'
            close = difflib.get_close_matches(key, allowed, n=1)
            if close:
                message += f'; did you mean "{close[0]}"?'
            raise ParseError(message, field=where)


def _run_form(form_class, data, path, errors):
    form = form_class(data)
    if not form.is_valid():
        for name, messages in form.errors.items():
            key = path if name == '__all__' else f'{path}.{name}'
            errors.setdefault(key, []).extend(messages)
        return None
    return form.cleaned_data


def scenario_from_dict(raw, default_policy=None):
    """Validate a parsed scenario object and build the Scenario.

    Raises ParseError for structural problems (unknown keys, wrong nesting)
    and ValidationError keyed by dotted field path for violated invariants.
    """
    _check_keys(raw, TOP_KEYS, '')
    errors = {}
    for key in REQUIRED_KEYS:
        if key not in raw:
            errors[key] = ['This field is required.']

    raw_field = raw.get('field', {})
    _check_keys(raw_field, FIELD_KEYS, 'field')
    raw_envelope = raw_field.get('envelope')
    if raw_envelope is None:
        if 'field' in raw:
            errors['field.envelope'] = ['This field is required.']
        raw_envelope = {}
    _check_keys(raw_envelope, ENVELOPE_KEYS, 'field.envelope')
    kind = raw_envelope.get('kind')
    if kind is not None and not isinstance(kind, str):
        raise ParseError('field.envelope.kind must be a string', field='field.envelope.kind')
    kind_keys = forms.EnvelopeForm.KEYS.get(kind)
    if kind_keys is not None:
        _check_keys(raw_envelope, kind_keys, 'field.envelope')
    raw_phase = raw_field.get('phase', {})
    _check_keys(raw_phase, ('phi0', 'beta'), 'field.phase')

    sections = {}
    for key, form_class in SECTION_FORMS.items():
        data = raw.get(key, {})
        _check_keys(data, tuple(form_class.base_fields), key)
        sections[key] = _run_form(form_class, data, key, errors)
    envelope = _run_form(forms.EnvelopeForm, raw_envelope, 'field.envelope', errors)
    phase = _run_form(forms.PhaseForm, raw_phase, 'field.phase', errors)

    top = {k: raw[k] for k in ('name', 'outputs', 'step_policy') if k in raw}
    if 'carrier_omega' in raw_field:
        top['carrier_omega'] = raw_field['carrier_omega']
    top_errors = {}
    scalars = _run_form(forms.ScenarioForm, top, '', top_errors)
    for key, messages in top_errors.items():
        name = key.lstrip('.')
        if name == 'carrier_omega':
            name = 'field.carrier_omega'
        if name not in errors:
            errors.setdefault(name or 'scenario', []).extend(messages)

    if errors:
        raise ValidationError(errors)

    system = sections['system']
    grid = sections['grid']
    integrator = sections['integrator']
    kind = envelope['kind']
    envelope_args = {'omega0': envelope['omega0']}
    if kind != 'constant':
        envelope_args.update(t_center=envelope['t_center'], tau=envelope['tau'])
    field_model = FieldModel(
        carrier_omega=scalars['carrier_omega'],
        envelope=ENVELOPES[kind](**envelope_args),
        phase=Chirp(phi0=phase['phi0'], beta=phase['beta']),
    )
    policy = scalars.get('step_policy') or default_policy or getattr(settings, 'NADS_STEP_POLICY', 'error')
    scenario = Scenario(
        name=scalars['name'],
        system=SystemParams(**system),
        field=field_model,
        grid=GridSpec(**grid),
        integrator=IntegratorSpec(
            frame=Frame(integrator['frame']),
            rtol=integrator['rtol'],
            atol=integrator['atol'],
            init=InitialState(integrator['init']),
        ),
        factors=NonadiabaticFactors(**sections['factors']),
        outputs=tuple(scalars['outputs']),
        step_policy=policy,
    )
    _check_step(scenario)
    return scenario


def _check_step(scenario):
    if not scenario.field.is_pulsed:
        return
    tau = scenario.field.envelope.tau
    limit = tau / forms.STEPS_PER_TAU
    if scenario.grid.step <= limit * (1 + 1e-12):
        return
    message = f'step {scenario.grid.step} exceeds tau/{forms.STEPS_PER_TAU} = {limit}'
    if scenario.step_policy == 'error':
        raise ValidationError({'grid.step': [message]})
    logger.warning('%s: %s', scenario.name, message)


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f'{path}: cannot read scenario file ({exc.__class__.__name__})') from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f'{path}: {exc.msg} at line {exc.lineno} column {exc.colno}',
                         line=exc.lineno) from exc
    scenario = scenario_from_dict(raw)
    logger.info('loaded scenario %s: %s', scenario.name, json.dumps(scenario_to_dict(scenario), sort_keys=True))
    return scenario


def scenario_to_dict(scenario):
    """Fully resolved scenario, defaults included."""
    envelope = scenario.field.envelope
    raw_envelope = {'kind': envelope.kind, 'omega0': envelope.omega0}
    if envelope.kind != 'constant':
        raw_envelope.update(t_center=envelope.t_center, tau=envelope.tau)
    system = scenario.system
    integrator = scenario.integrator
    return {
        'name': scenario.name,
        'system': {
            'omega_g': system.omega_g, 'omega_e': system.omega_e, 'mu': system.mu,
            'gamma_g': system.gamma_g, 'gamma_e': system.gamma_e,
        },
        'field': {
            'carrier_omega': scenario.field.carrier_omega,
            'envelope': raw_envelope,
            'phase': {'phi0': scenario.field.phase.phi0, 'beta': scenario.field.phase.beta},
        },
        'grid': {
            't_start': scenario.grid.t_start, 't_end': scenario.grid.t_end,
            'step': scenario.grid.step,
        },
        'integrator': {
            'frame': integrator.frame.value, 'rtol': integrator.rtol,
            'atol': integrator.atol, 'init': integrator.init.value,
        },
        'factors': {
            'damping': scenario.factors.damping, 'envelope': scenario.factors.envelope,
            'phase': scenario.factors.phase,
        },
        'outputs': list(scenario.outputs),
        'step_policy': scenario.step_policy,
    }


def dump_scenario(scenario):
    return json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True)


def save_scenario(scenario, path):
    Path(path).write_text(dump_scenario(scenario) + '\n', encoding='utf-8')
