'''Keystroke event model, log ingestion and serialization.

A log is a UTF-8 CSV file with the header

    user,session,key,action,time_ms

where action is P (press) or R (release) and time_ms is a non-negative
integer. Rows may arrive in any order; within a session events are sorted
by time, and events sharing a timestamp keep their file order.

Soft-biometric labels live in an optional sidecar CSV

    user,age_group,gender,handedness

with empty cells for unknown values.
'''
from __future__ import annotations

import csv
import enum
import io
import re
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Tuple

import numpy as np

from keymix.logger import get_logger

LOGGER = get_logger()

LOG_HEADER = ['user', 'session', 'key', 'action', 'time_ms']
LABEL_HEADER = ['user', 'age_group', 'gender', 'handedness']

TRAITS = ('age_group', 'gender', 'handedness')
TRAIT_VALUES = {
    'age_group': ('under30', 'over30'),
    'gender': ('male', 'female'),
    'handedness': ('left', 'right'),
}

_TIME_RE = re.compile(r'^[0-9]+$')


class LogParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class SessionError(ValueError):
    pass


class Action(str, enum.Enum):
    PRESS = 'P'
    RELEASE = 'R'


@dataclass(frozen=True)
class KeyEvent:
    time: float
    action: Action
    key: str
    user_id: str
    session_id: str


@dataclass(frozen=True)
class Labels:
    age_group: Optional[str] = None
    gender: Optional[str] = None
    handedness: Optional[str] = None

    def get(self, trait):
        if trait not in TRAITS:
            raise KeyError(trait)
        return getattr(self, trait)

    def asdict(self):
        return {trait: getattr(self, trait) for trait in TRAITS}


@dataclass(frozen=True)
class Keystroke:
    press_time: float
    release_time: float
    key: str

    @property
    def duration(self):
        return self.release_time - self.press_time


class Pairing(NamedTuple):
    '''Keystrokes of a session plus the number of presses left unmatched.'''
    keystrokes: Tuple[Keystroke, ...]
    unmatched: int

    @property
    def durations(self):
        return np.array([k.duration for k in self.keystrokes], dtype=float)

    @property
    def press_latencies(self):
        return np.diff(np.array([k.press_time for k in self.keystrokes], dtype=float))


@dataclass(frozen=True)
class Session:
    '''Ordered events of one user sample, the unit of classification.'''
    user_id: str
    session_id: str
    events: Tuple[KeyEvent, ...]
    labels: Labels = field(default_factory=Labels)

    def __post_init__(self):
        if not isinstance(self.events, tuple):
            object.__setattr__(self, 'events', tuple(self.events))
        _validate_events(self.user_id, self.session_id, self.events)

    @property
    def key(self):
        return (self.user_id, self.session_id)

    def times(self):
        return np.array([event.time for event in self.events], dtype=float)

    def intervals(self):
        '''Inter-event intervals; the undefined interval before the first event is left out.'''
        return np.diff(self.times())

    def with_times(self, times):
        '''Same events with new timestamps, order kept.'''
        if len(times) != len(self.events):
            raise SessionError(f'expected {len(self.events)} times, got {len(times)}')
        events = tuple(replace(event, time=float(time)) for event, time in zip(self.events, times))
        return replace(self, events=events)

    def with_labels(self, labels):
        return replace(self, labels=labels)


def _validate_events(user_id, session_id, events):
    open_presses = defaultdict(int)
    previous = None
    complete = 0
    for event in events:
        if event.user_id != user_id or event.session_id != session_id:
            raise SessionError(
                f'event for {event.user_id}/{event.session_id} in session {user_id}/{session_id}')
        if event.time < 0:
            raise SessionError(f'negative time {event.time} for key {event.key!r}')
        if previous is not None and event.time < previous:
            raise SessionError(f'events out of order at {event.time} ms in session {user_id}/{session_id}')
        previous = event.time
        if event.action == Action.PRESS:
            open_presses[event.key] += 1
        else:
            if open_presses[event.key] == 0:
                raise SessionError(f'unmatched release of key {event.key!r} at {event.time} ms')
            open_presses[event.key] -= 1
            complete += 1
    if complete < 1:
        raise SessionError(f'session {user_id}/{session_id} has no complete keystroke')


def pair_keystrokes(session):
    '''Match every press with the next release of the same key.

    A release closes the oldest open press of its key. Presses never
    released are dropped and counted in Pairing.unmatched.
    '''
    open_presses = defaultdict(deque)
    matched = []
    for index, event in enumerate(session.events):
        if event.action == Action.PRESS:
            open_presses[event.key].append((event.time, index))
        else:
            press_time, press_index = open_presses[event.key].popleft()
            matched.append((press_time, press_index, Keystroke(press_time, event.time, event.key)))
    matched.sort(key=lambda item: (item[0], item[1]))
    unmatched = sum(len(presses) for presses in open_presses.values())
    if unmatched:
        LOGGER.debug('Dropped %s unmatched presses in session %s/%s',
                     unmatched, session.user_id, session.session_id)
    return Pairing(tuple(item[2] for item in matched), unmatched)


def _keystroke_event_indices(session):
    '''Pairs of (press index, release index) in press order.'''
    open_presses = defaultdict(deque)
    pairs = []
    for index, event in enumerate(session.events):
        if event.action == Action.PRESS:
            open_presses[event.key].append(index)
        else:
            pairs.append((open_presses[event.key].popleft(), index))
    pairs.sort()
    return pairs


def slice_session(session, lengths):
    '''Cut a long session into consecutive samples of the given keystroke counts.

    Each slice keeps the press and release of its keystrokes. Slicing stops
    when the session runs out of keystrokes; a final slice shorter than
    requested is dropped.
    '''
    pairs = _keystroke_event_indices(session)
    slices = []
    start = 0
    for number, length in enumerate(lengths):
        length = int(length)
        if length < 1:
            raise SessionError(f'slice length must be positive, got {length}')
        if start + length > len(pairs):
            break
        indices = sorted(i for pair in pairs[start:start + length] for i in pair)
        session_id = f'{session.session_id}-{number}'
        events = tuple(replace(session.events[i], session_id=session_id) for i in indices)
        slices.append(Session(session.user_id, session_id, events, session.labels))
        start += length
    return slices


def _decode(data):
    if isinstance(data, bytes):
        return data.decode('utf-8')
    return data


def parse_labels(data):
    '''Parse a labels sidecar into a dict of user id to Labels.'''
    reader = csv.reader(io.StringIO(_decode(data), newline=''))
    labels = {}
    header = next(reader, None)
    if header != LABEL_HEADER:
        raise LogParseError(f'expected header {",".join(LABEL_HEADER)}, got {header}', line=1)
    for row in reader:
        if not row:
            continue
        if len(row) != len(LABEL_HEADER):
            raise LogParseError(f'expected {len(LABEL_HEADER)} fields, got {len(row)}', line=reader.line_num)
        user, values = row[0], row[1:]
        traits = {}
        for trait, value in zip(TRAITS, values):
            value = value.strip()
            if value == '':
                traits[trait] = None
                continue
            if value not in TRAIT_VALUES[trait]:
                raise LogParseError(f'invalid {trait} {value!r} for user {user!r}', line=reader.line_num)
            traits[trait] = value
        labels[user] = Labels(**traits)
    return labels


def parse_log(data, labels=None):
    '''Parse a CSV keystroke log into sessions.

    labels is either the text of a labels sidecar or an already parsed
    dict of user id to Labels. Sessions come back in order of first
    appearance in the file.
    '''
    if labels is not None and not isinstance(labels, dict):
        labels = parse_labels(labels)
    labels = labels or {}

    reader = csv.reader(io.StringIO(_decode(data), newline=''))
    header = next(reader, None)
    if header != LOG_HEADER:
        raise LogParseError(f'expected header {",".join(LOG_HEADER)}, got {header}', line=1)

    grouped = {}
    for row in reader:
        if not row:
            continue
        line = reader.line_num
        if len(row) != len(LOG_HEADER):
            raise LogParseError(f'expected {len(LOG_HEADER)} fields, got {len(row)}', line=line)
        user, session_id, key, action, time_ms = row
        if action not in ('P', 'R'):
            raise LogParseError(f'invalid action {action!r}, expected P or R', line=line)
        time_ms = time_ms.strip()
        if time_ms.startswith('-'):
            raise LogParseError(f'negative time {time_ms}', line=line)
        if not _TIME_RE.match(time_ms):
            raise LogParseError(f'invalid time {time_ms!r}, expected a non-negative integer', line=line)
        event = KeyEvent(float(int(time_ms)), Action(action), key, user, session_id)
        grouped.setdefault((user, session_id), []).append((line, event))

    sessions = []
    for (user, session_id), rows in grouped.items():
        # list.sort is stable, so equal times keep file order
        rows.sort(key=lambda item: item[1].time)
        open_presses = defaultdict(int)
        for line, event in rows:
            if event.action == Action.PRESS:
                open_presses[event.key] += 1
            elif open_presses[event.key] == 0:
                raise LogParseError(f'unmatched release of key {event.key!r} at {int(event.time)} ms', line=line)
            else:
                open_presses[event.key] -= 1
        try:
            session = Session(user, session_id, tuple(event for _, event in rows), labels.get(user, Labels()))
        except SessionError as exc:
            raise LogParseError(str(exc)) from exc
        sessions.append(session)
    return sessions


def _format_time(value):
    # half-to-even rounding onto the 1 ms grid of the file format
    return str(int(round(value)))


def write_log(sessions):
    '''Serialize sessions to CSV text; the inverse of parse_log.'''
    out = io.StringIO(newline='')
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(LOG_HEADER)
    for session in sessions:
        for event in session.events:
            writer.writerow([event.user_id, event.session_id, event.key,
                             event.action.value, _format_time(event.time)])
    return out.getvalue()


def write_labels(sessions):
    '''Serialize the labels of the users in sessions as a sidecar CSV.'''
    out = io.StringIO(newline='')
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(LABEL_HEADER)
    seen = set()
    for session in sessions:
        if session.user_id in seen:
            continue
        seen.add(session.user_id)
        writer.writerow([session.user_id] + [session.labels.get(trait) or '' for trait in TRAITS])
    return out.getvalue()
