'''Identification and soft-trait attacks, and the running-mean interval predictor.

Identity is attacked with stratified k-fold cross validation: the sessions of
every user are shuffled and dealt round-robin into the folds. Soft traits are
attacked leave-one-user-out, so a user is never both in the training and the
testing set; class sizes of the training sets are left as they are.

Both attacks accept an optional second list of sessions to test on. Row i
of it must be the same session as row i of the training list, e.g. its
mixed version, which lets a model trained on unmixed typing be tested on
mixed typing.
'''
from __future__ import annotations

from dataclasses import replace
from typing import NamedTuple, Optional

import numpy as np

from keymix import telemetry, utils
from keymix.events import pair_keystrokes
from keymix.features import FeatureSpec, feature_matrix
from keymix.forest import ClassificationError, ForestParams, RandomForest
from keymix.logger import get_logger
from keymix.metrics import majority_baseline, smape

LOGGER = get_logger()

DEFAULT_FOLDS = 10
IDENTITY = 'identity'


class CVResult(NamedTuple):
    accuracy: float
    # one row per session, one column per class of `classes`
    posteriors: np.ndarray
    classes: np.ndarray
    predictions: np.ndarray
    n_folds: int


def train_forest(X, y, params=None):
    '''Fit a random forest, refusing inputs a classifier cannot learn from.'''
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ClassificationError(f'need at least 2 classes, got {len(classes)}')
    if counts.min() < 2:
        smallest = str(classes[np.argmin(counts)])
        raise ClassificationError(f'class {smallest!r} has {counts.min()} sample, need at least 2')
    return RandomForest(params or ForestParams()).fit(X, y)


def stratified_folds(labels, n_folds, seed):
    '''Fold number of every sample, dealing each class round-robin after a seeded shuffle.'''
    labels = np.asarray(labels)
    folds = np.empty(len(labels), dtype=int)
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        rng = np.random.default_rng(utils.derive_seed(seed, 'folds', str(label)))
        shuffled = members[rng.permutation(len(members))]
        folds[shuffled] = np.arange(len(shuffled)) % n_folds
    return folds


def _posterior_columns(model, classes):
    '''Map the model's class columns onto the full class list.'''
    return np.searchsorted(classes, model.classes_)


def _fit_fold(X, y, params, stream, fold):
    # a class may keep a single training sample once its other sessions are held out
    if len(np.unique(y)) < 2:
        raise ClassificationError(f'{stream} fold {fold} trains on a single class')
    return RandomForest(params).fit(X, y)


def cross_validate(X, labels, folds, params, X_test=None, stream=IDENTITY):
    '''Train on every fold but one and test on the held out one, for each fold.

    folds assigns each row a fold label. Returns pooled posteriors for every
    row; accuracy is the mean of the per-fold accuracies.
    '''
    X = np.asarray(X, dtype=float)
    X_test = X if X_test is None else np.asarray(X_test, dtype=float)
    if X_test.shape != X.shape:
        raise ClassificationError(f'test features {X_test.shape} do not match training features {X.shape}')
    labels = np.asarray(labels)
    folds = np.asarray(folds)
    classes = np.unique(labels)
    posteriors = np.zeros((len(labels), len(classes)), dtype=float)
    predictions = np.empty(len(labels), dtype=labels.dtype)
    fold_accuracies = []
    fold_ids = list(dict.fromkeys(folds.tolist()))
    for fold in fold_ids:
        test = folds == fold
        fold_params = replace(params, seed=utils.derive_seed(params.seed, stream, fold))
        model = _fit_fold(X[~test], labels[~test], fold_params, stream, fold)
        columns = _posterior_columns(model, classes)
        posteriors[np.ix_(np.flatnonzero(test), columns)] = model.predict_proba(X_test[test])
        predictions[test] = model.predict(X_test[test])
        fold_accuracies.append(float(np.mean(predictions[test] == labels[test])))
        LOGGER.debug('%s fold %s: accuracy %.3f', stream, fold, fold_accuracies[-1])
    return CVResult(float(np.mean(fold_accuracies)), posteriors, classes, predictions, len(fold_ids))


def identity_folds(users, n_folds=DEFAULT_FOLDS):
    '''Number of folds the identity attack can use for these users.'''
    users, counts = np.unique(np.asarray(users), return_counts=True)
    if len(users) < 2:
        raise ClassificationError(f'need at least 2 users, got {len(users)}')
    if counts.min() < 2:
        raise ClassificationError(f'user {str(users[np.argmin(counts)])!r} has {counts.min()} session, need at least 2')
    return min(n_folds, int(counts.min()))


def identity_cv_matrix(X, users, params=None, n_folds=DEFAULT_FOLDS, X_test=None):
    params = params or ForestParams()
    n_folds = identity_folds(users, n_folds)
    folds = stratified_folds(users, n_folds, params.seed)
    return cross_validate(X, users, folds, params, X_test=X_test, stream=IDENTITY)


def _matrices(sessions, spec, test_sessions):
    sessions = list(sessions)
    X, spec = feature_matrix(sessions, spec or FeatureSpec())
    if test_sessions is None:
        return sessions, X, None
    test_sessions = list(test_sessions)
    if [s.key for s in test_sessions] != [s.key for s in sessions]:
        raise ClassificationError('test sessions must be the training sessions in the same order')
    X_test, _ = feature_matrix(test_sessions, spec)
    return sessions, X, X_test


def identity_cv(sessions, spec=None, params=None, n_folds=DEFAULT_FOLDS, test_sessions=None):
    '''Stratified k-fold identification attack; k shrinks to the smallest per-user session count.'''
    with telemetry.cv_timer(IDENTITY):
        sessions, X, X_test = _matrices(sessions, spec, test_sessions)
        users = np.array([session.user_id for session in sessions])
        result = identity_cv_matrix(X, users, params, n_folds, X_test)
    LOGGER.info('Identity accuracy %.3f over %s folds, %s users',
                result.accuracy, result.n_folds, len(result.classes))
    return result


def soft_trait_cv_matrix(X, labels, users, params=None, X_test=None, trait='trait'):
    '''Leave-one-user-out attack on a per-user label; accuracy is pooled over all sessions.'''
    params = params or ForestParams()
    labels = np.asarray(labels)
    users = np.asarray(users)
    user_labels = {}
    for user, label in zip(users.tolist(), labels.tolist()):
        if user_labels.setdefault(user, label) != label:
            raise ClassificationError(f'user {user!r} has more than one {trait} label')
    values, per_class = np.unique(list(user_labels.values()), return_counts=True)
    if len(values) < 2:
        raise ClassificationError(f'{trait} has a single class {values.tolist()}')
    if per_class.min() < 2:
        raise ClassificationError(f'{trait} class {str(values[np.argmin(per_class)])!r} has fewer than 2 users')
    result = cross_validate(X, labels, users, params, X_test=X_test, stream=trait)
    pooled = float(np.mean(result.predictions == labels))
    return result._replace(accuracy=pooled)


def soft_trait_cv(sessions, trait, spec=None, params=None, test_sessions=None):
    '''Leave-one-user-out attack on one soft-biometric trait.'''
    sessions = list(sessions)
    missing = sorted({s.user_id for s in sessions if s.labels.get(trait) is None})
    if missing:
        raise ClassificationError(f'{trait} label missing for users {missing}')
    with telemetry.cv_timer(trait):
        sessions, X, X_test = _matrices(sessions, spec, test_sessions)
        labels = np.array([session.labels.get(trait) for session in sessions])
        users = np.array([session.user_id for session in sessions])
        result = soft_trait_cv_matrix(X, labels, users, params, X_test, trait)
    LOGGER.info('%s accuracy %.3f over %s users', trait, result.accuracy, result.n_folds)
    return result


def _running_mean_smape(values):
    # value n is predicted by the mean of values 1..n-1
    previous_means = np.cumsum(values)[:-1] / np.arange(1, len(values))
    return smape(previous_means, values[1:])


def predict_intervals(session):
    '''SMAPE of predicting each PP and DU by the running mean of the ones before it.

    >>> from keymix.synth import session_from_keystrokes
    >>> s = session_from_keystrokes('u', 's', [(0, 90), (100, 190), (300, 390)])
    >>> smape_pp, smape_du = predict_intervals(s)
    >>> round(smape_pp, 3), smape_du
    (0.333, 0.0)
    '''
    pairing = pair_keystrokes(session)
    if len(pairing.keystrokes) < 3:
        raise ClassificationError(f'session {session.user_id}/{session.session_id} has '
                                  f'{len(pairing.keystrokes)} keystrokes, need at least 3')
    return _running_mean_smape(pairing.press_latencies), _running_mean_smape(pairing.durations)


def cohort_smape(sessions):
    '''Mean of the per-session (PP, DU) SMAPEs.'''
    scores = np.array([predict_intervals(session) for session in sessions], dtype=float)
    if scores.size == 0:
        raise ClassificationError('no sessions to predict')
    return float(scores[:, 0].mean()), float(scores[:, 1].mean())


def majority_baseline_for(sessions, trait) -> Optional[float]:
    '''Session-level majority-class share of a trait, None when any user lacks it.'''
    labels = [session.labels.get(trait) for session in sessions]
    if not labels or any(label is None for label in labels):
        return None
    return majority_baseline(labels)
