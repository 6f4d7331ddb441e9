__version__ = '0.1.0'

from keymix import utils
from keymix.utils import (
    atomic_write,
    derive_seed,
    load_json,
    parse_float_list,
)

from keymix.logger import get_logger

from keymix.telemetry import (
    Counter,
    Timer,
    cv_timer,
    event_counter,
    mix_timer,
)

from keymix.events import (
    Action,
    KeyEvent,
    Keystroke,
    Labels,
    LogParseError,
    Session,
    pair_keystrokes,
    parse_labels,
    parse_log,
    slice_session,
    write_labels,
    write_log,
)

from keymix.mixes import (
    DelayMixParams,
    IntervalMixParams,
    MixError,
    ScriptedNoise,
    SeededNoise,
    apply_mix,
    check_mix,
    delay_mix_step,
    interval_mix_step,
    make_mix,
)

from keymix.metrics import (
    MetricError,
    PairedSamples,
    anonymity_rate,
    buffer_occupancy,
    mean_lag,
    mutual_information,
    smape,
)

from keymix.features import (
    FeatureError,
    FeatureSpec,
    FeatureVector,
    extract_features,
    feature_matrix,
)

from keymix.forest import (
    ClassificationError,
    ForestParams,
    RandomForest,
)

from keymix.classify import (
    identity_cv,
    predict_intervals,
    soft_trait_cv,
    train_forest,
)

from keymix.synth import (
    SynthError,
    UserProfile,
    generate_cohort,
    generate_constant_stream,
    generate_poisson_stream,
)

from keymix.config import ConfigError, RunConfig

from keymix.reports import (
    ExperimentReport,
    LagSummary,
    MIReport,
    ReportRow,
)

from keymix.experiment import evaluate_grid, mi_grid, mix_cohort
