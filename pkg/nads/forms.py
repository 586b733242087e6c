from django import forms
from django.core.exceptions import ValidationError

from .field_model import ENVELOPES

# grid.step may not exceed tau / STEPS_PER_TAU for pulsed envelopes
STEPS_PER_TAU = 400
GRID_COUNT_TOL = 1e-9


def positive(value):
    if not value > 0:
        raise ValidationError('Ensure this value is greater than 0.', code='min_value')


class ScenarioSectionForm(forms.Form):
    """One section of a scenario file; DEFAULTS fill keys the file leaves out."""

    DEFAULTS = {}

    def __init__(self, data, *args, **kwargs):
        super().__init__({**self.DEFAULTS, **data}, *args, **kwargs)


class SystemForm(ScenarioSectionForm):
    DEFAULTS = {'mu': 1.0, 'gamma_g': 0.0, 'gamma_e': 0.0}

    omega_g = forms.FloatField()
    omega_e = forms.FloatField()
    mu = forms.FloatField()
    gamma_g = forms.FloatField(min_value=0.0)
    gamma_e = forms.FloatField(min_value=0.0)

    def clean(self):
        cleaned_data = super().clean()
        omega_g = cleaned_data.get('omega_g')
        omega_e = cleaned_data.get('omega_e')
        if omega_g is not None and omega_e is not None and not omega_e > omega_g:
            self.add_error('omega_e', f'Must be greater than omega_g ({omega_g}).')
        return cleaned_data


class EnvelopeForm(ScenarioSectionForm):
    KEYS = {
        'constant': {'kind', 'omega0'},
        'gaussian': {'kind', 'omega0', 't_center', 'tau'},
        'sech': {'kind', 'omega0', 't_center', 'tau'},
    }

    kind = forms.ChoiceField(choices=[(kind, kind) for kind in ENVELOPES])
    omega0 = forms.FloatField()
    t_center = forms.FloatField(required=False)
    tau = forms.FloatField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        kind = cleaned_data.get('kind')
        omega0 = cleaned_data.get('omega0')
        if kind == 'constant':
            if omega0 is not None and omega0 < 0:
                self.add_error('omega0', 'Ensure this value is greater than or equal to 0.')
            return cleaned_data
        if omega0 is not None and not omega0 > 0:
            self.add_error('omega0', 'Pulsed envelopes need a positive peak Rabi frequency.')
        tau = cleaned_data.get('tau')
        if tau is None and 'tau' not in self.errors:
            self.add_error('tau', 'This field is required for pulsed envelopes.')
        elif tau is not None and not tau > 0:
            self.add_error('tau', 'Ensure this value is greater than 0.')
        if cleaned_data.get('t_center') is None:
            cleaned_data['t_center'] = 0.0
        return cleaned_data


class PhaseForm(ScenarioSectionForm):
    DEFAULTS = {'phi0': 0.0, 'beta': 0.0}

    phi0 = forms.FloatField()
    beta = forms.FloatField()


class GridForm(ScenarioSectionForm):
    t_start = forms.FloatField()
    t_end = forms.FloatField()
    step = forms.FloatField(validators=[positive])

    def clean(self):
        cleaned_data = super().clean()
        t_start = cleaned_data.get('t_start')
        t_end = cleaned_data.get('t_end')
        step = cleaned_data.get('step')
        if t_start is None or t_end is None:
            return cleaned_data
        if not t_end > t_start:
            self.add_error('t_end', f'Must be greater than t_start ({t_start}).')
        elif step is not None and step > 0:
            intervals = (t_end - t_start) / step
            if abs(intervals - round(intervals)) > GRID_COUNT_TOL * max(1.0, intervals):
                self.add_error('step', 'Must divide t_end - t_start into a whole number of steps.')
        return cleaned_data


class IntegratorForm(ScenarioSectionForm):
    DEFAULTS = {'frame': 'rotating', 'rtol': 1e-10, 'atol': 1e-12, 'init': 'ground'}

    frame = forms.ChoiceField(choices=[('rotating', 'rotating'), ('lab', 'lab')])
    rtol = forms.FloatField(validators=[positive])
    atol = forms.FloatField(validators=[positive])
    init = forms.ChoiceField(choices=[('ground', 'ground'), ('excited', 'excited')])


class FactorsForm(ScenarioSectionForm):
    DEFAULTS = {'damping': True, 'envelope': True, 'phase': True}

    damping = forms.BooleanField(required=False)
    envelope = forms.BooleanField(required=False)
    phase = forms.BooleanField(required=False)


class ScenarioForm(ScenarioSectionForm):
    """Top-level scalar keys; sections are validated by their own forms."""

    OUTPUTS = ('snapshot', 'evolve', 'ratio')
    DEFAULTS = {'outputs': ['snapshot']}

    name = forms.CharField(max_length=200)
    carrier_omega = forms.FloatField()
    outputs = forms.MultipleChoiceField(choices=[(name, name) for name in OUTPUTS])
    step_policy = forms.ChoiceField(
        choices=[('error', 'error'), ('warn', 'warn')], required=False
    )
