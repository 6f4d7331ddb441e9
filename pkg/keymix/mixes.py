'''Order-preserving user mixes for keystroke event streams.

A mix sits between the generating process (event times as the user
produces them, t°) and the arrival process (event times as the application
observes them, t). It can only delay events and never reorders them.

Two strategies are provided:

  * the delay mix adds a bounded uniform delay to every event,
    δₙ ~ U(lₙ, Δ) with lₙ = max(δₙ₋₁ − τₙ°, 0) so order is preserved;

  * the interval mix draws the desired inter-arrival interval directly,
    τ̇ₙ ~ U(0, uₙ), releases the event at max(tₙ₋₁ + τ̇ₙ, tₙ°) and moves
    the bound toward the user's rate, uₙ₊₁ = max(uₙ + b(tₙ° − ṫₙ), ε).

Each step is a pure function of (state, params, generating time, noise)
returning the arrival time and the next state.
'''
from __future__ import annotations

import abc
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import ClassVar, NamedTuple, Optional

import numpy as np

from keymix import utils
from keymix.events import Session

DEFAULT_EPSILON = 1.0
DEFAULT_U_INIT = 100.0
DEFAULT_RESOLUTION = 1.0

# slack for float noise when checking scripted draws against their bounds
_SCRIPT_TOLERANCE = 1e-9


class MixError(ValueError):
    pass


class NoiseSource(abc.ABC):
    '''Provider of the uniform draws a mix consumes.'''

    @abc.abstractmethod
    def uniform(self, low, high):
        '''Return a draw from the closed interval [low, high].'''


class SeededNoise(NoiseSource):
    '''Pseudo-random draws; an identical seed gives an identical sequence.'''

    def __init__(self, seed):
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)

    @classmethod
    def for_session(cls, seed, session, run=0):
        '''Independent stream for one session, whatever order sessions are mixed in.'''
        return cls(utils.derive_seed(seed, session.user_id, session.session_id, run))

    def uniform(self, low, high):
        if high < low:
            raise MixError(f'empty draw interval [{low}, {high}]')
        if high == low:
            return float(low)
        return float(self._rng.uniform(low, high))

    def __repr__(self):
        return f'SeededNoise(seed={self.seed})'


class ScriptedNoise(NoiseSource):
    '''Replays a fixed list of draws, checking each against the requested bounds.'''

    def __init__(self, values):
        self._values = deque(float(value) for value in values)
        self.consumed = 0

    @property
    def remaining(self):
        return len(self._values)

    def uniform(self, low, high):
        if not self._values:
            raise MixError(f'scripted noise exhausted after {self.consumed} draws')
        value = self._values.popleft()
        if value < low - _SCRIPT_TOLERANCE or value > high + _SCRIPT_TOLERANCE:
            raise MixError(f'scripted draw {value} outside [{low}, {high}] at draw {self.consumed}')
        self.consumed += 1
        return min(max(value, low), high)


@dataclass(frozen=True)
class DelayMixParams:
    delta_max: float

    kind: ClassVar[str] = 'delay'

    def __post_init__(self):
        if not math.isfinite(self.delta_max) or self.delta_max < 0:
            raise MixError(f'delay bound must be a finite value >= 0, got {self.delta_max}')

    @property
    def parameter(self):
        return self.delta_max

    def initial_state(self):
        return DelayMixState()


@dataclass(frozen=True)
class DelayMixState:
    prev_delay: float = 0.0
    prev_arrival: Optional[float] = None
    prev_gen_time: Optional[float] = None
    # lower bound lₙ used by the most recent step
    lower_bound: float = 0.0


@dataclass(frozen=True)
class IntervalMixParams:
    b: float
    epsilon: float = DEFAULT_EPSILON
    u_init: float = DEFAULT_U_INIT

    kind: ClassVar[str] = 'interval'

    def __post_init__(self):
        if not math.isfinite(self.b) or self.b < 0:
            raise MixError(f'rate b must be a finite value >= 0, got {self.b}')
        if not math.isfinite(self.epsilon) or self.epsilon <= 0:
            raise MixError(f'epsilon must be > 0, got {self.epsilon}')
        if not math.isfinite(self.u_init) or self.u_init <= 0:
            raise MixError(f'initial bound must be > 0, got {self.u_init}')

    @property
    def parameter(self):
        return self.b

    def initial_state(self):
        return IntervalMixState(u=self.u_init)


@dataclass(frozen=True)
class IntervalMixState:
    u: float
    prev_arrival: Optional[float] = None
    prev_gen_time: Optional[float] = None
    # ṫ of the most recent step, None until the first delayed event
    desired_time: Optional[float] = None


def make_mix(kind, value, epsilon=DEFAULT_EPSILON, u_init=DEFAULT_U_INIT):
    '''Build mix params from a kind name and its grid parameter.'''
    if kind == DelayMixParams.kind:
        return DelayMixParams(float(value))
    if kind == IntervalMixParams.kind:
        return IntervalMixParams(float(value), epsilon=float(epsilon), u_init=float(u_init))
    raise MixError(f'unknown mix kind {kind!r}')


def _check_order(prev_gen_time, gen_time, strict):
    if prev_gen_time is None:
        return
    if gen_time < prev_gen_time or (strict and gen_time == prev_gen_time):
        raise MixError(f'generating time {gen_time} does not increase after {prev_gen_time}')


def delay_mix_step(state, params, gen_time, noise, strict=True):
    '''Release one event through the delay mix.

    With strict=False a generating time equal to the previous one is
    accepted as a zero interval; an earlier one is always an error.
    '''
    _check_order(state.prev_gen_time, gen_time, strict)
    if state.prev_gen_time is None:
        # τ₁° is infinite, so the first lower bound is 0
        lower = 0.0
    else:
        lower = max(state.prev_delay - (gen_time - state.prev_gen_time), 0.0)
    delay = noise.uniform(lower, params.delta_max)
    arrival = gen_time + delay
    new_state = DelayMixState(prev_delay=delay, prev_arrival=arrival,
                              prev_gen_time=gen_time, lower_bound=lower)
    return arrival, new_state


def interval_mix_step(state, params, gen_time, noise, strict=True):
    '''Release one event through the interval mix.

    The first event passes through untouched and leaves u unchanged.
    '''
    _check_order(state.prev_gen_time, gen_time, strict)
    if state.prev_arrival is None:
        return gen_time, replace(state, prev_arrival=gen_time, prev_gen_time=gen_time)
    interval = noise.uniform(0.0, state.u)
    desired = state.prev_arrival + interval
    arrival = max(desired, gen_time)
    u_next = max(state.u + params.b * (gen_time - desired), params.epsilon)
    new_state = IntervalMixState(u=u_next, prev_arrival=arrival,
                                 prev_gen_time=gen_time, desired_time=desired)
    return arrival, new_state


_STEPS = {
    DelayMixParams: delay_mix_step,
    IntervalMixParams: interval_mix_step,
}


class MixResult(NamedTuple):
    mixed: Session
    lags: np.ndarray


def apply_mix(session, mix, noise, resolution=DEFAULT_RESOLUTION):
    '''Pass every event of a session, presses and releases alike, through one mix.

    Arrival times are floored onto the clock grid given by resolution
    (None keeps them unquantized), never below the generating time.
    '''
    try:
        step = _STEPS[type(mix)]
    except KeyError as exc:
        raise MixError(f'not a mix: {mix!r}') from exc

    state = mix.initial_state()
    arrivals = np.empty(len(session.events), dtype=float)
    gen_times = session.times()
    for index, gen_time in enumerate(gen_times):
        arrival, state = step(state, mix, float(gen_time), noise, strict=False)
        if resolution:
            arrival = max(math.floor(arrival / resolution) * resolution, gen_time)
        arrivals[index] = arrival
    return MixResult(session.with_times(arrivals), arrivals - gen_times)


def check_mix(original, mixed, lags, mix):
    '''Return a list of violated mix properties, empty when the output is sound.'''
    problems = []
    if len(original.events) != len(mixed.events):
        return [f'event count changed from {len(original.events)} to {len(mixed.events)}']
    if original.key != mixed.key:
        problems.append(f'session {original.key} came back as {mixed.key}')
    previous = None
    for index, (before, after) in enumerate(zip(original.events, mixed.events)):
        if (before.key, before.action) != (after.key, after.action):
            problems.append(f'event {index} changed from {before.key}/{before.action.value} '
                            f'to {after.key}/{after.action.value}')
        if after.time < before.time:
            problems.append(f'event {index} arrives at {after.time} before it was generated at {before.time}')
        if previous is not None and after.time < previous:
            problems.append(f'event {index} arrives at {after.time} after a later event at {previous}')
        previous = after.time
    lags = np.asarray(lags, dtype=float)
    if len(lags) != len(mixed.events):
        problems.append(f'{len(lags)} lags for {len(mixed.events)} events')
    elif isinstance(mix, DelayMixParams):
        outside = np.flatnonzero((lags < 0) | (lags > mix.delta_max))
        for index in outside[:10]:
            problems.append(f'lag {lags[index]} of event {index} outside [0, {mix.delta_max}]')
    return problems
