'''Mix a cohort over a parameter grid and measure what an attacker still learns.'''
from __future__ import annotations

from dataclasses import replace
from typing import NamedTuple

import numpy as np
from joblib import Parallel, delayed

import keymix
from keymix import telemetry
from keymix.classify import cohort_smape, identity_cv, majority_baseline_for, soft_trait_cv
from keymix.events import TRAITS
from keymix.features import FeatureSpec
from keymix.forest import ClassificationError
from keymix.logger import get_logger
from keymix.metrics import PairedSamples, anonymity_rate, binned_entropy, buffer_occupancy, mutual_information
from keymix.mixes import DEFAULT_RESOLUTION, SeededNoise, apply_mix, check_mix, make_mix
from keymix.reports import ExperimentReport, LagSummary, MIReport, MIRow, ReportRow

LOGGER = get_logger()


class MixedCohort(NamedTuple):
    sessions: list
    lags: list
    summary: LagSummary
    # violations found by check_mix, empty unless checking was asked for
    problems: list


def mix_cohort(sessions, mix, seed, run=0, resolution=DEFAULT_RESOLUTION, check=False):
    '''Mix every session with its own noise stream.'''
    mixed, lags, problems = [], [], []
    max_buffered = 0
    with telemetry.mix_timer(mix.kind), telemetry.event_counter(mix.kind) as counter:
        for session in sessions:
            result = apply_mix(session, mix, SeededNoise.for_session(seed, session, run), resolution)
            mixed.append(result.mixed)
            lags.append(result.lags)
            max_buffered = max(max_buffered, buffer_occupancy(session.times(), result.mixed.times()))
            if check:
                problems.extend(f'{session.user_id}/{session.session_id}: {problem}'
                                for problem in check_mix(session, result.mixed, result.lags, mix))
            counter.increment(len(session.events))
    pooled = np.concatenate(lags) if lags else np.zeros(0)
    summary = LagSummary(mean=pooled.mean() if pooled.size else 0.0,
                         max=pooled.max() if pooled.size else 0.0,
                         count=pooled.size, max_buffered=max_buffered)
    for problem in problems:
        LOGGER.error('Mix check failed: %s', problem)
    return MixedCohort(mixed, lags, summary, problems)


def _trait_accuracy(trait, train, spec, params, test):
    if majority_baseline_for(train, trait) is None:
        LOGGER.info('Skipping %s: labels missing', trait)
        return None
    try:
        return soft_trait_cv(train, trait, spec, params, test_sessions=test).accuracy
    except ClassificationError as exc:
        LOGGER.warning('Skipping %s: %s', trait, exc)
        return None


def evaluate_point(sessions, mix, config, spec=None, params=None, input_type=None, traits=TRAITS):
    '''Mix the cohort with one mix and run every attack on the result.

    With scope 'test' the classifiers are trained on the unmixed sessions
    and tested on the mixed ones.
    '''
    spec = spec or FeatureSpec(min_observations=config.min_observations)
    params = params or config.forest_params()
    with telemetry.grid_point_timer(mix.kind, mix.parameter):
        cohort = mix_cohort(sessions, mix, config.seed, check=config.check)
        if config.scope == 'test':
            train, test = sessions, cohort.sessions
        else:
            train, test = cohort.sessions, None
        identity = identity_cv(train, spec, params, config.folds, test_sessions=test)
        accuracies = {trait: _trait_accuracy(trait, train, spec, params, test) for trait in traits}
        smape_pp, smape_du = cohort_smape(cohort.sessions)
    row = ReportRow(
        parameter=mix.parameter,
        mean_lag=cohort.summary.mean,
        acc_identity=identity.accuracy,
        acc_age=accuracies.get('age_group'),
        acc_gender=accuracies.get('gender'),
        acc_handedness=accuracies.get('handedness'),
        smape_pp=smape_pp,
        smape_du=smape_du,
        input_type=input_type,
        anonymity=anonymity_rate(identity.posteriors),
        max_lag=cohort.summary.max,
        max_buffered=cohort.summary.max_buffered,
        baselines={trait: majority_baseline_for(sessions, trait) for trait in traits},
    )
    LOGGER.info('%s %s: mean lag %.1f ms, identity %.3f', mix.kind, mix.parameter, row.mean_lag, row.acc_identity)
    return row, cohort.problems


def _mixes(config):
    return [make_mix(config.mix, value, config.epsilon, config.u_init) for value in config.grid]


def evaluate_grid(sessions, config, input_type=None, traits=TRAITS):
    '''One report row per grid value; grid values run in parallel with config.n_jobs.

    Returns the report and the mix check violations of all grid values.
    '''
    sessions = list(sessions)
    spec = FeatureSpec(min_observations=config.min_observations)
    # trees of one forest run serially when grid values already run in parallel
    params = config.forest_params()
    if config.n_jobs != 1:
        params = replace(params, n_jobs=1)
    results = Parallel(n_jobs=config.n_jobs)(
        delayed(evaluate_point)(sessions, mix, config, spec, params, input_type, traits)
        for mix in _mixes(config))
    rows = [row for row, _ in results]
    problems = [problem for _, found in results for problem in found]
    report = ExperimentReport(config.mix, rows, config.seed, config.to_dict(), keymix.__version__)
    return report, problems


def _pooled_intervals(sessions):
    return np.concatenate([session.intervals() for session in sessions])


def mi_point(sessions, mix, config):
    '''MI between generating and arrival intervals, and between the arrivals of runs 0 and 1.

    Returns the row and the mix check violations of both runs.
    '''
    original = _pooled_intervals(sessions)
    first = mix_cohort(sessions, mix, config.seed, run=0, check=config.check)
    second = mix_cohort(sessions, mix, config.seed, run=1, check=config.check)
    arrivals = _pooled_intervals(first.sessions)
    mi_original = mutual_information(PairedSamples.of(original, arrivals), config.bins)
    mi_runs = mutual_information(PairedSamples.truncated(arrivals, _pooled_intervals(second.sessions)), config.bins)
    row = MIRow(mix.parameter, mi_original, mi_runs, binned_entropy(original, config.bins), len(original))
    return row, first.problems + second.problems


def mi_grid(sessions, config):
    '''One MI row per grid value, and the mix check violations of all of them.'''
    sessions = list(sessions)
    results = Parallel(n_jobs=config.n_jobs)(delayed(mi_point)(sessions, mix, config) for mix in _mixes(config))
    rows = [row for row, _ in results]
    problems = [problem for _, found in results for problem in found]
    return MIReport(config.mix, rows, config.bins, config.seed, config.to_dict(), keymix.__version__), problems
