'''Fixed-length keystroke feature vectors with a fallback hierarchy.

Every session becomes the mean and standard deviation of its key hold
durations (DU) and press-press latencies (PP), per key group. Groups form a
tree rooted at the all-keys group. A group with fewer than
min_observations values borrows the statistic of its nearest ancestor that
has enough, and failing that the population ("global") statistic.

A latency belongs to the group of the key pressed at its end.
'''
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from keymix.events import pair_keystrokes

ROOT_GROUP = 'all-keys'
GLOBAL_SOURCE = 'global'

MEASURES = ('du', 'pp')
STATS = ('mean', 'sd')

SPACE_KEYS = frozenset({'space', ' '})
FREQUENT_LETTERS = frozenset('etaoinshrd')

DEFAULT_MIN_OBSERVATIONS = 5
PP_CLIP_MS = 5000.0


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class KeyGroup:
    '''A node of the key hierarchy.

    keys is the set of (lower-cased) key symbols of a leaf group, or None
    for a catch-all leaf or an inner node. parent is None only for the root.
    '''
    name: str
    parent: Optional[str] = None
    keys: Optional[frozenset] = None


DEFAULT_GROUPS = (
    KeyGroup(ROOT_GROUP),
    KeyGroup('space', ROOT_GROUP, SPACE_KEYS),
    KeyGroup('frequent', ROOT_GROUP, FREQUENT_LETTERS),
    KeyGroup('other', ROOT_GROUP),
)


@dataclass(frozen=True)
class FeatureSpec:
    key_groups: Tuple[KeyGroup, ...] = DEFAULT_GROUPS
    min_observations: int = DEFAULT_MIN_OBSERVATIONS
    pp_clip: float = PP_CLIP_MS
    # {(measure, stat): value}; filled from the cohort by feature_matrix when None
    global_stats: Optional[Dict[Tuple[str, str], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.min_observations < 1:
            raise FeatureError(f'min_observations must be >= 1, got {self.min_observations}')
        names = [group.name for group in self.key_groups]
        if len(set(names)) != len(names):
            raise FeatureError(f'duplicate key group names in {names}')
        roots = [group for group in self.key_groups if group.parent is None]
        if len(roots) != 1:
            raise FeatureError('key groups must have exactly one root')
        known = set(names)
        for group in self.key_groups:
            if group.parent is not None and group.parent not in known:
                raise FeatureError(f'group {group.name!r} has unknown parent {group.parent!r}')
        for group in self.key_groups:
            # walking up must reach the root without revisiting a node
            seen = set()
            node = group
            while node.parent is not None:
                if node.name in seen:
                    raise FeatureError(f'cycle in key groups at {node.name!r}')
                seen.add(node.name)
                node = self.group(node.parent)

    @property
    def root(self):
        return next(group for group in self.key_groups if group.parent is None)

    def group(self, name):
        for group in self.key_groups:
            if group.name == name:
                return group
        raise KeyError(name)

    def leaves(self):
        parents = {group.parent for group in self.key_groups}
        return [group for group in self.key_groups if group.name not in parents]

    def ancestors(self, name):
        '''Names from the group's parent up to the root.'''
        chain = []
        node = self.group(name)
        while node.parent is not None:
            chain.append(node.parent)
            node = self.group(node.parent)
        return chain

    def leaf_of(self, key):
        '''Leaf group a key symbol belongs to; the first catch-all leaf takes the rest.'''
        symbol = key.lower() if len(key) == 1 else key
        catch_all = None
        for group in self.leaves():
            if group.keys is None:
                catch_all = catch_all or group
            elif symbol in group.keys or key in group.keys:
                return group
        if catch_all is None:
            return self.root
        return catch_all

    def feature_names(self):
        return tuple(f'{group.name}.{measure}.{stat}'
                     for group in self.key_groups for measure in MEASURES for stat in STATS)

    def __len__(self):
        return len(self.key_groups) * len(MEASURES) * len(STATS)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    # group that supplied each value, or 'global'
    sources: Tuple[str, ...]
    names: Tuple[str, ...]

    @property
    def fallback(self):
        '''True where a value was not computed from its own group.'''
        own = [name.split('.')[0] for name in self.names]
        return np.array([source != group for source, group in zip(self.sources, own)])

    def __len__(self):
        return len(self.values)


def _observations(session, spec):
    '''Per group and measure, the list of values observed in the session.'''
    keystrokes = pair_keystrokes(session).keystrokes
    if len(keystrokes) < 2:
        raise FeatureError(f'session {session.user_id}/{session.session_id} has '
                           f'{len(keystrokes)} keystrokes, need at least 2')
    observed = {(group.name, measure): [] for group in spec.key_groups for measure in MEASURES}
    for index, keystroke in enumerate(keystrokes):
        leaf = spec.leaf_of(keystroke.key)
        targets = [leaf.name] + spec.ancestors(leaf.name)
        for name in targets:
            observed[(name, 'du')].append(keystroke.duration)
        if index > 0:
            latency = min(keystroke.press_time - keystrokes[index - 1].press_time, spec.pp_clip)
            for name in targets:
                observed[(name, 'pp')].append(latency)
    return observed


def _stat(values, stat):
    if stat == 'mean':
        return float(np.mean(values))
    return float(np.std(values))


def extract_features(session, spec=None):
    '''Feature vector of a session; depends only on its intervals.'''
    spec = spec or FeatureSpec()
    observed = _observations(session, spec)
    values = []
    sources = []
    for group in spec.key_groups:
        for measure in MEASURES:
            for stat in STATS:
                value, source = _resolve(observed, spec, group.name, measure, stat)
                values.append(value)
                sources.append(source)
    return FeatureVector(np.array(values, dtype=float), tuple(sources), spec.feature_names())


def _resolve(observed, spec, name, measure, stat):
    for candidate in [name] + spec.ancestors(name):
        if len(observed[(candidate, measure)]) >= spec.min_observations:
            return _stat(observed[(candidate, measure)], stat), candidate
    if spec.global_stats is not None:
        return float(spec.global_stats[(measure, stat)]), GLOBAL_SOURCE
    # no population statistics to fall back on: use whatever the root holds
    root = spec.root.name
    return _stat(observed[(root, measure)], stat), root


def population_stats(sessions, spec=None):
    '''Statistics of all keystrokes of all sessions, the last level of fallback.'''
    spec = spec or FeatureSpec()
    root = spec.root.name
    pooled = {measure: [] for measure in MEASURES}
    for session in sessions:
        observed = _observations(session, spec)
        for measure in MEASURES:
            pooled[measure].extend(observed[(root, measure)])
    if not pooled['du']:
        raise FeatureError('no sessions to compute population statistics from')
    return {(measure, stat): _stat(pooled[measure], stat) for measure in MEASURES for stat in STATS}


def feature_matrix(sessions, spec=None):
    '''Stack the feature vectors of sessions; rows follow the input order.

    Returns the matrix and the spec actually used, with population
    statistics filled in.
    '''
    spec = spec or FeatureSpec()
    sessions = list(sessions)
    if spec.global_stats is None:
        spec = replace(spec, global_stats=population_stats(sessions, spec))
    rows = [extract_features(session, spec).values for session in sessions]
    if not rows:
        return np.empty((0, len(spec)), dtype=float), spec
    return np.vstack(rows), spec


def write_feature_csv(sessions, matrix):
    '''Feature matrix as CSV: session_id followed by numbered columns.'''
    out = io.StringIO(newline='')
    writer = csv.writer(out, lineterminator='\n')
    width = matrix.shape[1] if matrix.ndim == 2 else 0
    writer.writerow(['session_id'] + [f'f{index}' for index in range(width)])
    for session, row in zip(sessions, matrix):
        writer.writerow([f'{session.user_id}/{session.session_id}'] + [repr(float(value)) for value in row])
    return out.getvalue()
