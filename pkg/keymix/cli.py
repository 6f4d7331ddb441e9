'''keymix command line.

    keymix mix --delay 50 --seed 7 in.csv --out DIR
    keymix mix --interval --b 1.0 in.csv
    keymix eval --synth users=10,sessions=10,chars=norm --delay --out DIR
    keymix eval in.csv --delay --labels labels.csv --out DIR
    keymix mi --interval --grid 0.1,1,2 in.csv --labels labels.csv
    keymix synth --synth users=5,sessions=20,chars=fixed:20 --out DIR
    keymix features in.csv

Without --out, the main output of a command goes to stdout. Exit status is
0 on success, 1 on invalid input or I/O errors and 3 when --check finds a
mix violating its guarantees.
'''
from __future__ import annotations

import argparse
import os
import sys

from keymix import events, features, utils
from keymix.config import RunConfig
from keymix.experiment import evaluate_grid, mi_grid, mix_cohort
from keymix.logger import get_logger
from keymix.mixes import DelayMixParams, IntervalMixParams, make_mix
from keymix.reports import format_json, write_report
from keymix.telemetry import session_counter

LOGGER = get_logger()

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 3

# --delay given without a value
_WHOLE_GRID = object()


def _common_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('input', nargs='?', help='Keystroke log CSV')
    parser.add_argument('-c', '--config', help='JSON config file')
    parser.add_argument('--synth', help='Synthetic cohort, e.g. users=10,sessions=10,chars=norm')
    parser.add_argument('--labels', help='Soft-biometric labels CSV for a log input')
    parser.add_argument('--seed', type=int, help=f'Master seed (default: ${utils.SEED_ENV} or 0)')
    parser.add_argument('--out', help='Output directory (default: stdout)')
    return parser


def _mix_parser():
    parser = argparse.ArgumentParser(add_help=False)
    kind = parser.add_mutually_exclusive_group()
    kind.add_argument('--delay', nargs='?', type=float, const=_WHOLE_GRID, default=None, metavar='DELTA',
                      help='Delay mix, optionally with a single delay bound in ms')
    kind.add_argument('--interval', action='store_true', help='Interval mix')
    parser.add_argument('--b', type=float, help='Interval mix rate')
    parser.add_argument('--eps', type=float, help='Interval mix lower bound on u')
    parser.add_argument('--u0', type=float, help='Interval mix initial bound u')
    parser.add_argument('--grid', type=utils.parse_float_list, help='Parameter values, e.g. 0,50,100')
    parser.add_argument('--check', action='store_true', default=None, help='Validate every mixed session')
    return parser


def _attack_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--bins', type=int, help='Bins per axis of the MI estimate')
    parser.add_argument('--trees', type=int, help='Trees per random forest')
    parser.add_argument('--max-depth', type=int, help='Depth limit of the trees')
    parser.add_argument('--min-obs', type=int, help='Observations a key group needs before falling back')
    parser.add_argument('--folds', type=int, help='Folds of the identity cross validation')
    parser.add_argument('--scope', choices=['all', 'test'],
                        help="'test' trains on unmixed and tests on mixed sessions")
    parser.add_argument('--n-jobs', type=int, help='Parallel jobs')
    return parser


def build_parser():
    common, mixing, attack = _common_parser(), _mix_parser(), _attack_parser()
    parser = argparse.ArgumentParser(prog='keymix', description='Keystroke timing mixes and the attacks they resist')
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('mix', parents=[common, mixing], help='Mix a keystroke log')
    commands.add_parser('eval', parents=[common, mixing, attack], help='Attack a cohort over a parameter grid')
    commands.add_parser('mi', parents=[common, mixing, attack], help='Mutual information over a parameter grid')
    commands.add_parser('synth', parents=[common], help='Write a synthetic cohort')
    commands.add_parser('features', parents=[common, attack], help='Write the feature matrix of a log')
    return parser


def _mix_overrides(args):
    if not hasattr(args, 'interval'):
        return {}
    overrides = {'epsilon': args.eps, 'u_init': args.u0, 'check': args.check, 'grid': args.grid}
    if args.interval or args.b is not None:
        overrides['mix'] = IntervalMixParams.kind
        if args.b is not None:
            overrides['grid'] = [args.b]
    elif args.delay is not None:
        overrides['mix'] = DelayMixParams.kind
        if args.delay is not _WHOLE_GRID:
            overrides['grid'] = [args.delay]
    return overrides


def config_from_args(args):
    overrides = {
        'input': args.input,
        'synth': args.synth,
        'labels': args.labels,
        'seed': args.seed,
        'out': args.out,
    }
    overrides.update(_mix_overrides(args))
    if hasattr(args, 'trees'):
        overrides.update({
            'bins': args.bins,
            'n_trees': args.trees,
            'max_depth': args.max_depth,
            'min_observations': args.min_obs,
            'folds': args.folds,
            'scope': args.scope,
            'n_jobs': args.n_jobs,
        })
    return RunConfig.from_sources(args.config, **overrides)


def load_sessions(config):
    '''Sessions named by the config, a log file or a synthetic cohort.'''
    config.require_input()
    if config.synth is not None:
        spec = config.synth_spec()
        sessions = spec.generate(config.seed)
        source = spec.input_type
    else:
        with open(config.input, 'rb') as fil:
            data = fil.read()
        labels = None
        if config.labels:
            with open(config.labels, 'rb') as fil:
                labels = events.parse_labels(fil.read())
        sessions = events.parse_log(data, labels)
        source = os.path.basename(config.input)
    with session_counter(source) as counter:
        counter.increment(len(sessions))
    return sessions, source


def _emit(config, name, text):
    if config.out:
        path = os.path.join(config.out, name)
        utils.atomic_write(path, text)
        LOGGER.info('Wrote %s', path)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def cmd_mix(config):
    if len(config.grid) != 1:
        raise ValueError(f'mix takes a single parameter value, got {len(config.grid)}')
    sessions, _ = load_sessions(config)
    mix = make_mix(config.mix, config.grid[0], config.epsilon, config.u_init)
    cohort = mix_cohort(sessions, mix, config.seed, check=config.check)
    _emit(config, 'mixed.csv', events.write_log(cohort.sessions))
    if config.out:
        summary = cohort.summary.asdict()
        summary['config'] = config.to_dict()
        utils.atomic_write(os.path.join(config.out, 'lags.json'), format_json(summary))
    LOGGER.info('Lags: %s', cohort.summary)
    return EXIT_CHECK_FAILED if cohort.problems else EXIT_OK


def _write(config, report, name):
    if config.out:
        write_report(report, config.out, name)
    else:
        sys.stdout.write(report.to_csv())
        sys.stdout.flush()


def cmd_eval(config):
    sessions, source = load_sessions(config)
    report, problems = evaluate_grid(sessions, config, input_type=source)
    _write(config, report, 'report')
    return EXIT_CHECK_FAILED if problems else EXIT_OK


def cmd_mi(config):
    sessions, _ = load_sessions(config)
    report, problems = mi_grid(sessions, config)
    _write(config, report, 'mi')
    return EXIT_CHECK_FAILED if problems else EXIT_OK


def cmd_synth(config):
    if config.synth is None:
        raise ValueError('synth needs --synth')
    sessions, _ = load_sessions(config)
    _emit(config, 'cohort.csv', events.write_log(sessions))
    if config.out:
        _emit(config, 'labels.csv', events.write_labels(sessions))
    return EXIT_OK


def cmd_features(config):
    sessions, _ = load_sessions(config)
    matrix, _ = features.feature_matrix(sessions, features.FeatureSpec(min_observations=config.min_observations))
    _emit(config, 'features.csv', features.write_feature_csv(sessions, matrix))
    return EXIT_OK


COMMANDS = {
    'mix': cmd_mix,
    'eval': cmd_eval,
    'mi': cmd_mi,
    'synth': cmd_synth,
    'features': cmd_features,
}


@utils.handle_top_exception(LOGGER)
def run(args):
    config = config_from_args(args)
    return COMMANDS[args.command](config)


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, 'b', None) is not None and args.delay is not None:
        parser.error('--b sets the interval mix rate and cannot be used with --delay')
    return args


def main(argv=None):
    args = parse_args(argv)
    try:
        return run(args)
    except (ValueError, OSError):
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
