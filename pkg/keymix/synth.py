'''Seeded synthetic keystroke cohorts.

Users type with lognormal press-press latencies (PP) and key hold durations
(DU) drawn around population medians, with a user-level dispersion that
controls how separable users are. Keys follow English letter frequencies,
or a fixed text when one is given. Times are integer milliseconds.

The Poisson and constant-rate streams are the idealized typists of the
anonymity argument: users typing as Poisson processes of equal rate cannot
be told apart, and constant-rate typing is perfectly predictable.

The population medians (200 ms PP, 90 ms DU) are modelling constants only.
'''
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from keymix import utils
from keymix.events import Action, KeyEvent, Labels, Session, slice_session
from keymix.features import FeatureSpec
from keymix.logger import get_logger

LOGGER = get_logger()

PP_MEDIAN_MS = 200.0
DU_MEDIAN_MS = 90.0
CHARS_MEAN = 123
CHARS_SD = 38
MIN_CHARS = 20
NORMAL_CHARS = 'norm'

SPACE_KEY = 'space'
SPACE_SHARE = 0.18

# relative frequencies of English letters, in percent
LETTER_FREQUENCIES = {
    'e': 12.7, 't': 9.1, 'a': 8.2, 'o': 7.5, 'i': 7.0, 'n': 6.7, 's': 6.3, 'h': 6.1, 'r': 6.0,
    'd': 4.3, 'l': 4.0, 'c': 2.8, 'u': 2.8, 'm': 2.4, 'w': 2.4, 'f': 2.2, 'g': 2.0, 'y': 2.0,
    'p': 1.9, 'b': 1.5, 'v': 1.0, 'k': 0.8, 'j': 0.15, 'x': 0.15, 'q': 0.1, 'z': 0.07,
}

# share of users over 30, male and right handed
TRAIT_PROBABILITIES = {
    'age_group': ('over30', 'under30', 0.51),
    'gender': ('male', 'female', 0.68),
    'handedness': ('right', 'left', 0.88),
}

PASSPHRASE = 'the quick brown fox'
COPY_TEXT = ('it was the best of times it was the worst of times it was the age of wisdom '
             'it was the age of foolishness it was the epoch of belief it was the epoch of '
             'incredulity it was the season of light it was the season of darkness')

INPUT_TYPES = {
    'short-fixed': {'chars': len(PASSPHRASE), 'text': PASSPHRASE, 'sliced': False},
    'long-fixed': {'chars': NORMAL_CHARS, 'text': COPY_TEXT, 'sliced': False},
    'long-free': {'chars': NORMAL_CHARS, 'text': None, 'sliced': True},
}

# user-level spread of each profile parameter, per unit of dispersion
_SPREAD = {'du_mean': 0.10, 'du_sd': 0.25, 'pp_mean': 0.08, 'pp_sd': 0.1, 'group': 0.05}
DU_LOG_SD = 0.18
PP_LOG_SD = 0.45


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    pp_log_mean: float
    pp_log_sd: float
    du_log_mean: float
    du_log_sd: float
    labels: Labels = field(default_factory=Labels)
    # per key group multipliers of PP and DU
    pp_factors: Dict[str, float] = field(default_factory=dict, compare=False)
    du_factors: Dict[str, float] = field(default_factory=dict, compare=False)
    # events per ms; when set PP is exponential with this rate
    poisson_rate: Optional[float] = None

    def __post_init__(self):
        if not (self.pp_log_sd > 0 and self.du_log_sd > 0):
            raise SynthError(f'profile {self.user_id} needs positive sd parameters')
        if self.poisson_rate is not None and not self.poisson_rate > 0:
            raise SynthError(f'poisson rate must be > 0, got {self.poisson_rate}')


def session_from_keystrokes(user_id, session_id, keystrokes, labels=None):
    '''Build a session from (press, release[, key]) tuples.

    Events are ordered by time; a release and a press at the same time keep
    the order in which their keystrokes were given.
    '''
    events = []
    for press, release, *rest in keystrokes:
        key = rest[0] if rest else 'a'
        events.append(KeyEvent(float(press), Action.PRESS, key, user_id, session_id))
        events.append(KeyEvent(float(release), Action.RELEASE, key, user_id, session_id))
    events.sort(key=lambda event: event.time)
    return Session(user_id, session_id, tuple(events), labels or Labels())


def _check_chars(chars):
    if chars == NORMAL_CHARS:
        return chars
    if isinstance(chars, bool) or not isinstance(chars, (int, np.integer)) or chars < 2:
        raise SynthError(f"chars per session must be 'norm' or an int >= 2, got {chars!r}")
    return int(chars)


def session_length(chars, rng):
    '''Number of keystrokes of one sample: fixed, or normal(123, 38) cut at 20.'''
    if chars == NORMAL_CHARS:
        return max(MIN_CHARS, int(round(rng.normal(CHARS_MEAN, CHARS_SD))))
    return int(chars)


def draw_labels(rng):
    traits = {}
    for trait, (likely, other, probability) in TRAIT_PROBABILITIES.items():
        traits[trait] = likely if rng.random() < probability else other
    return Labels(**traits)


def draw_profile(user_id, seed, dispersion=1.0, pp_median=PP_MEDIAN_MS, du_median=DU_MEDIAN_MS,
                 poisson_rate=None):
    '''Profile of one user around the population medians; dispersion 0 gives identical users.'''
    if dispersion < 0:
        raise SynthError(f'dispersion must be >= 0, got {dispersion}')
    rng = np.random.default_rng(utils.derive_seed(seed, 'profile', user_id))
    z = rng.standard_normal(4)
    groups = [group.name for group in FeatureSpec().leaves()]
    group_z = rng.standard_normal((2, len(groups)))
    labels = draw_labels(rng)
    return UserProfile(
        user_id=user_id,
        pp_log_mean=math.log(pp_median) + _SPREAD['pp_mean'] * dispersion * z[0],
        pp_log_sd=PP_LOG_SD * math.exp(_SPREAD['pp_sd'] * dispersion * z[1]),
        du_log_mean=math.log(du_median) + _SPREAD['du_mean'] * dispersion * z[2],
        du_log_sd=DU_LOG_SD * math.exp(_SPREAD['du_sd'] * dispersion * z[3]),
        labels=labels,
        pp_factors={g: math.exp(_SPREAD['group'] * dispersion * v) for g, v in zip(groups, group_z[0])},
        du_factors={g: math.exp(_SPREAD['group'] * dispersion * v) for g, v in zip(groups, group_z[1])},
        poisson_rate=poisson_rate,
    )


def _keys(n_keys, rng, text):
    if text:
        symbols = [SPACE_KEY if char == ' ' else char for char in text]
        return [symbols[index % len(symbols)] for index in range(n_keys)]
    letters = list(LETTER_FREQUENCIES)
    weights = np.array([LETTER_FREQUENCIES[letter] for letter in letters])
    weights = (1.0 - SPACE_SHARE) * weights / weights.sum()
    alphabet = letters + [SPACE_KEY]
    probabilities = np.append(weights, SPACE_SHARE)
    return [alphabet[index] for index in rng.choice(len(alphabet), size=n_keys, p=probabilities)]


def type_keys(profile, keys, rng, session_id):
    '''Time a key sequence as the profile's user would type it.'''
    spec = FeatureSpec()
    groups = [spec.leaf_of(key).name for key in keys]
    pp_scale = np.array([profile.pp_factors.get(group, 1.0) for group in groups])
    du_scale = np.array([profile.du_factors.get(group, 1.0) for group in groups])
    if profile.poisson_rate is not None:
        latencies = rng.exponential(1.0 / profile.poisson_rate, size=len(keys))
    else:
        latencies = rng.lognormal(profile.pp_log_mean, profile.pp_log_sd, size=len(keys)) * pp_scale
    durations = rng.lognormal(profile.du_log_mean, profile.du_log_sd, size=len(keys)) * du_scale
    latencies[0] = 0.0
    presses = np.cumsum(np.maximum(np.rint(latencies), 1.0) * (np.arange(len(keys)) > 0))
    releases = presses + np.maximum(np.rint(durations), 1.0)
    # a held key has to come up before it can go down again
    last = {}
    for index, key in enumerate(keys):
        if key in last:
            releases[last[key]] = min(releases[last[key]], presses[index])
        last[key] = index
    return session_from_keystrokes(profile.user_id, session_id,
                                   zip(presses, releases, keys), profile.labels)


def generate_user_sessions(profile, n_sessions, chars=NORMAL_CHARS, seed=0, text=None, sliced=False):
    '''Samples of one user; sliced cuts a single long stream into consecutive samples.'''
    chars = _check_chars(chars)
    rng = np.random.default_rng(utils.derive_seed(seed, 'sessions', profile.user_id))
    lengths = [session_length(chars, rng) for _ in range(n_sessions)]
    if sliced:
        stream = type_keys(profile, _keys(sum(lengths), rng, text), rng, 'stream')
        return slice_session(stream, lengths)
    return [type_keys(profile, _keys(length, rng, text), rng, f's{index:03d}')
            for index, length in enumerate(lengths)]


def generate_cohort(n_users, sessions_per_user, chars_per_session=NORMAL_CHARS, profile_dispersion=1.0,
                    seed=0, text=None, sliced=False, pp_median=PP_MEDIAN_MS, du_median=DU_MEDIAN_MS,
                    poisson=False):
    '''Sessions of n_users synthetic users, grouped by user.

    With poisson=True users type as Poisson processes whose rates spread
    around 1/pp_median by a factor exp(dispersion) from one user to the next.
    '''
    if n_users < 2:
        raise SynthError(f'need at least 2 users, got {n_users}')
    if sessions_per_user < 1:
        raise SynthError(f'need at least 1 session per user, got {sessions_per_user}')
    chars_per_session = _check_chars(chars_per_session)
    sessions = []
    for index in range(n_users):
        user_id = f'u{index:02d}'
        rate = None
        if poisson:
            rate = math.exp(profile_dispersion * (index - (n_users - 1) / 2.0)) / pp_median
        profile = draw_profile(user_id, seed, profile_dispersion, pp_median, du_median, rate)
        sessions.extend(generate_user_sessions(profile, sessions_per_user, chars_per_session, seed, text, sliced))
    LOGGER.info('Generated %s sessions for %s users', len(sessions), n_users)
    return sessions


def generate_poisson_stream(rate, n_events, seed=0, user_id='u00', session_id='poisson',
                            duration=DU_MEDIAN_MS, resolution=1.0):
    '''A session of n_events keystrokes whose presses form a Poisson process of the given rate (per ms).

    Each key is held for a constant duration. resolution=None keeps exact times.
    '''
    if not rate > 0:
        raise SynthError(f'rate must be > 0, got {rate}')
    if n_events < 1:
        raise SynthError(f'need at least 1 event, got {n_events}')
    rng = np.random.default_rng(utils.derive_seed(seed, 'poisson', user_id, session_id))
    presses = np.cumsum(rng.exponential(1.0 / rate, size=n_events))
    if resolution:
        presses = np.rint(presses / resolution) * resolution
    keys = _keys(n_events, rng, None)
    return session_from_keystrokes(user_id, session_id, zip(presses, presses + duration, keys))


def generate_constant_stream(interval, n_events, user_id='u00', session_id='constant', duration=DU_MEDIAN_MS):
    '''Keystrokes pressed exactly every interval ms.'''
    if not interval > 0:
        raise SynthError(f'interval must be > 0, got {interval}')
    if n_events < 1:
        raise SynthError(f'need at least 1 event, got {n_events}')
    presses = np.arange(n_events, dtype=float) * interval
    keys = _keys(n_events, None, PASSPHRASE)
    return session_from_keystrokes(user_id, session_id, zip(presses, presses + duration, keys))
