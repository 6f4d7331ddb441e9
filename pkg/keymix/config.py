'''Run configuration: what to read, how to mix it and how to attack it.

A RunConfig is assembled from an optional JSON file and the command line,
flags taking precedence. The JSON form is checked against CONFIG_SCHEMA.
'''
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Tuple, Union

import jsonschema

from keymix import synth, utils
from keymix.features import DEFAULT_MIN_OBSERVATIONS
from keymix.forest import DEFAULT_N_TREES, ForestParams
from keymix.metrics import DEFAULT_BINS
from keymix.mixes import DEFAULT_EPSILON, DEFAULT_U_INIT, DelayMixParams, IntervalMixParams

DEFAULT_DELAY_GRID = (0.0, 50.0, 100.0, 200.0, 500.0, 1000.0)
DEFAULT_B_GRID = (0.1, 0.5, 1.0, 1.5, 2.0)
DEFAULT_GRIDS = {
    DelayMixParams.kind: DEFAULT_DELAY_GRID,
    IntervalMixParams.kind: DEFAULT_B_GRID,
}

SCOPES = ('all', 'test')

CONFIG_SCHEMA = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'type': 'object',
    'additionalProperties': False,
    'properties': {
        'input': {'type': ['string', 'null']},
        'synth': {'type': ['string', 'null']},
        'labels': {'type': ['string', 'null']},
        'mix': {'enum': list(DEFAULT_GRIDS)},
        'grid': {'type': 'array', 'minItems': 1, 'items': {'type': 'number', 'minimum': 0}},
        'epsilon': {'type': 'number', 'exclusiveMinimum': 0},
        'u_init': {'type': 'number', 'exclusiveMinimum': 0},
        'seed': {'type': 'integer', 'minimum': 0},
        'bins': {'type': 'integer', 'minimum': 2},
        'min_observations': {'type': 'integer', 'minimum': 1},
        'n_trees': {'type': 'integer', 'minimum': 1},
        'max_depth': {'type': ['integer', 'null'], 'minimum': 1},
        'n_jobs': {'type': 'integer'},
        'folds': {'type': 'integer', 'minimum': 2},
        'scope': {'enum': list(SCOPES)},
        'out': {'type': ['string', 'null']},
        'check': {'type': 'boolean'},
    },
}


class ConfigError(ValueError):
    pass


def validate(data):
    '''Raise ConfigError naming every path of data that breaks CONFIG_SCHEMA.'''
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda error: list(map(str, error.absolute_path)))
    if errors:
        problems = []
        for error in errors:
            path = '/'.join(str(part) for part in error.absolute_path) or '<root>'
            problems.append(f'{path}: {error.message}')
        raise ConfigError('Invalid config: ' + '; '.join(problems))


@dataclass(frozen=True)
class SynthSpec:
    '''Synthetic input, written users=U,sessions=K,chars=fixed:N|norm[,dispersion=D][,text=free|fixed][,sliced=0|1].

    input=short-fixed|long-fixed|long-free picks one of synth.INPUT_TYPES in
    place of chars, text and sliced.
    '''
    users: int
    sessions: int
    chars: Union[int, str] = synth.NORMAL_CHARS
    dispersion: float = 1.0
    text: str = 'free'
    sliced: bool = False
    input: Optional[str] = None

    @classmethod
    def parse(cls, text):
        '''
        >>> SynthSpec.parse('users=10,sessions=10,chars=fixed:20')
        SynthSpec(users=10, sessions=10, chars=20, dispersion=1.0, text='free', sliced=False, input=None)
        '''
        values = {}
        for part in text.split(','):
            part = part.strip()
            if not part:
                continue
            name, sep, value = part.partition('=')
            if not sep:
                raise ConfigError(f'synth spec item {part!r} is not name=value')
            values[name.strip()] = value.strip()
        missing = [name for name in ('users', 'sessions') if name not in values]
        if missing:
            raise ConfigError(f'synth spec {text!r} is missing {missing}')
        unknown = set(values) - {'users', 'sessions', 'chars', 'dispersion', 'text', 'sliced', 'input'}
        if unknown:
            raise ConfigError(f'unknown synth spec items {sorted(unknown)}')
        if 'input' in values:
            return cls._preset(text, values)
        try:
            spec = cls(users=int(values['users']),
                       sessions=int(values['sessions']),
                       chars=_parse_chars(values.get('chars', synth.NORMAL_CHARS)),
                       dispersion=float(values.get('dispersion', 1.0)),
                       text=values.get('text', 'free'),
                       sliced=values.get('sliced', '0') in ('1', 'true', 'yes'))
        except ValueError as exc:
            raise ConfigError(f'invalid synth spec {text!r}: {exc}') from exc
        return spec

    @classmethod
    def _preset(cls, text, values):
        name = values['input']
        preset = synth.INPUT_TYPES.get(name)
        if preset is None:
            raise ConfigError(f'synth input must be one of {sorted(synth.INPUT_TYPES)}, got {name!r}')
        clashing = sorted(set(values) & {'chars', 'text', 'sliced'})
        if clashing:
            raise ConfigError(f'synth input {name!r} cannot be combined with {clashing}')
        try:
            return cls(users=int(values['users']),
                       sessions=int(values['sessions']),
                       chars=preset['chars'],
                       dispersion=float(values.get('dispersion', 1.0)),
                       text='free' if preset['text'] is None else 'fixed',
                       sliced=preset['sliced'],
                       input=name)
        except ValueError as exc:
            raise ConfigError(f'invalid synth spec {text!r}: {exc}') from exc

    def __post_init__(self):
        if self.users < 2 or self.sessions < 1:
            raise ConfigError(f'synth spec needs users >= 2 and sessions >= 1, got {self.users} and {self.sessions}')
        if self.text not in ('free', 'fixed'):
            raise ConfigError(f"synth text must be 'free' or 'fixed', got {self.text!r}")
        if self.dispersion < 0:
            raise ConfigError(f'dispersion must be >= 0, got {self.dispersion}')
        if self.input is not None and self.input not in synth.INPUT_TYPES:
            raise ConfigError(f'synth input must be one of {sorted(synth.INPUT_TYPES)}, got {self.input!r}')

    def __str__(self):
        if self.input is not None:
            return f'users={self.users},sessions={self.sessions},dispersion={self.dispersion},input={self.input}'
        chars = self.chars if self.chars == synth.NORMAL_CHARS else f'fixed:{self.chars}'
        return (f'users={self.users},sessions={self.sessions},chars={chars},'
                f'dispersion={self.dispersion},text={self.text},sliced={int(self.sliced)}')

    def fixed_text(self):
        if self.input is not None:
            return synth.INPUT_TYPES[self.input]['text']
        if self.text == 'free':
            return None
        return synth.COPY_TEXT if self.chars == synth.NORMAL_CHARS else synth.PASSPHRASE

    @property
    def input_type(self):
        '''Name the report rows carry for this input.'''
        return self.input or 'synth'

    def generate(self, seed):
        return synth.generate_cohort(self.users, self.sessions, self.chars, self.dispersion, seed,
                                     text=self.fixed_text(), sliced=self.sliced)


def _parse_chars(value):
    if value == synth.NORMAL_CHARS:
        return value
    if value.startswith('fixed:'):
        return int(value[len('fixed:'):])
    raise ValueError(f"chars must be 'norm' or 'fixed:N', got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    input: Optional[str] = None
    synth: Optional[str] = None
    labels: Optional[str] = None
    mix: str = DelayMixParams.kind
    grid: Tuple[float, ...] = field(default=())
    epsilon: float = DEFAULT_EPSILON
    u_init: float = DEFAULT_U_INIT
    seed: int = 0
    bins: int = DEFAULT_BINS
    min_observations: int = DEFAULT_MIN_OBSERVATIONS
    n_trees: int = DEFAULT_N_TREES
    max_depth: Optional[int] = None
    n_jobs: int = 1
    folds: int = 10
    scope: str = 'all'
    out: Optional[str] = None
    check: bool = False

    def __post_init__(self):
        grid = self.grid or DEFAULT_GRIDS.get(self.mix, ())
        object.__setattr__(self, 'grid', tuple(float(value) for value in grid))
        validate(self.to_dict())
        if self.synth is not None:
            SynthSpec.parse(self.synth)

    @classmethod
    def from_dict(cls, data):
        validate(data)
        return cls(**data)

    @classmethod
    def from_sources(cls, file_path=None, **overrides):
        '''Config file values overridden by every override that is not None.'''
        data = utils.load_json(file_path) if file_path else {}
        if not isinstance(data, dict):
            raise ConfigError(f'config file {file_path} must hold a JSON object')
        validate(data)
        data.update({name: value for name, value in overrides.items() if value is not None})
        if 'seed' not in data:
            data['seed'] = utils.default_seed()
        names = {f.name for f in fields(cls)}
        return cls(**{name: value for name, value in data.items() if name in names})

    def to_dict(self):
        result = asdict(self)
        result['grid'] = list(self.grid)
        return result

    def require_input(self):
        '''Exactly one of input and synth must be set.'''
        if (self.input is None) == (self.synth is None):
            raise ConfigError('give exactly one input source: a log file or --synth')

    def synth_spec(self):
        return SynthSpec.parse(self.synth) if self.synth is not None else None

    def forest_params(self):
        return ForestParams(n_trees=self.n_trees, max_depth=self.max_depth, seed=self.seed, n_jobs=self.n_jobs)
