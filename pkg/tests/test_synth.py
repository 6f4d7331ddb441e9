import unittest

import numpy as np
from scipy import stats

from keymix.events import pair_keystrokes
from keymix.synth import (
    PASSPHRASE,
    SynthError,
    draw_labels,
    draw_profile,
    generate_cohort,
    generate_constant_stream,
    generate_poisson_stream,
    session_length,
    type_keys,
)


class TestCohort(unittest.TestCase):

    def test_same_seed_same_cohort(self):
        self.assertEqual(generate_cohort(3, 2, 40, seed=1), generate_cohort(3, 2, 40, seed=1))
        self.assertNotEqual(generate_cohort(3, 2, 40, seed=1), generate_cohort(3, 2, 40, seed=2))

    def test_layout(self):
        sessions = generate_cohort(3, 2, 40, seed=1)
        self.assertEqual([('u00', 's000'), ('u00', 's001'), ('u01', 's000'), ('u01', 's001'),
                          ('u02', 's000'), ('u02', 's001')], [s.key for s in sessions])
        for session in sessions:
            pairing = pair_keystrokes(session)
            self.assertEqual(40, len(pairing.keystrokes))
            self.assertEqual(0, pairing.unmatched)
            times = session.times()
            self.assertEqual(0.0, times[0])
            self.assertTrue(np.all(times == np.rint(times)))
            self.assertIsNotNone(session.labels.handedness)

    def test_sliced_stream(self):
        sessions = generate_cohort(2, 3, 40, seed=1, sliced=True)
        self.assertEqual(['stream-0', 'stream-1', 'stream-2'] * 2, [s.session_id for s in sessions])
        self.assertTrue(all(len(s.events) == 80 for s in sessions))

    def test_fixed_text(self):
        session = generate_cohort(2, 1, len(PASSPHRASE), text=PASSPHRASE, seed=1)[0]
        keys = [k.key for k in pair_keystrokes(session).keystrokes]
        self.assertEqual(['space' if c == ' ' else c for c in PASSPHRASE], keys)

    def test_poisson_users_type_at_increasing_rates(self):
        sessions = generate_cohort(3, 1, 200, profile_dispersion=1.0, seed=1, poisson=True)
        means = [np.mean(pair_keystrokes(s).press_latencies) for s in sessions]
        self.assertGreater(means[0], means[1])
        self.assertGreater(means[1], means[2])

    def test_invalid_arguments(self):
        with self.assertRaises(SynthError):
            generate_cohort(1, 2)
        with self.assertRaises(SynthError):
            generate_cohort(2, 0)
        for chars in ('long', 1, True):
            with self.assertRaises(SynthError):
                generate_cohort(2, 1, chars)


class TestProfiles(unittest.TestCase):

    def test_zero_dispersion_gives_identical_typists(self):
        first = draw_profile('u1', 1, 0.0)
        second = draw_profile('u2', 1, 0.0)
        self.assertEqual(first.pp_log_mean, second.pp_log_mean)
        self.assertEqual(first.du_log_sd, second.du_log_sd)
        self.assertEqual(first.du_factors, second.du_factors)
        self.assertAlmostEqual(np.log(200.0), first.pp_log_mean)

    def test_negative_dispersion(self):
        with self.assertRaises(SynthError):
            draw_profile('u1', 1, -1.0)

    def test_label_shares(self):
        rng = np.random.default_rng(3)
        labels = [draw_labels(rng) for _ in range(4000)]
        self.assertAlmostEqual(0.88, np.mean([lab.handedness == 'right' for lab in labels]), delta=0.03)
        self.assertAlmostEqual(0.68, np.mean([lab.gender == 'male' for lab in labels]), delta=0.03)

    def test_repeated_key_is_released_before_it_is_pressed_again(self):
        profile = draw_profile('u1', 2, 1.0, pp_median=40.0, du_median=300.0)
        session = type_keys(profile, ['a'] * 50, np.random.default_rng(1), 's1')
        pairing = pair_keystrokes(session)
        self.assertEqual(50, len(pairing.keystrokes))
        self.assertEqual(0, pairing.unmatched)
        self.assertTrue(np.all(pairing.durations >= 0))


class TestSessionLength(unittest.TestCase):

    def test_normal_lengths(self):
        rng = np.random.default_rng(5)
        lengths = [session_length('norm', rng) for _ in range(1000)]
        self.assertAlmostEqual(123, np.mean(lengths), delta=5)
        self.assertGreaterEqual(min(lengths), 20)

    def test_fixed_length(self):
        self.assertEqual(30, session_length(30, None))


class TestStreams(unittest.TestCase):

    def test_poisson_stream(self):
        session = generate_poisson_stream(0.01, 100000, seed=1, resolution=None)
        latencies = pair_keystrokes(session).press_latencies
        self.assertAlmostEqual(100.0, float(np.mean(latencies)), delta=1.0)
        self.assertGreater(stats.kstest(latencies, 'expon', args=(0, 100.0)).pvalue, 0.001)

    def test_same_rate_streams_look_alike(self):
        first = pair_keystrokes(generate_poisson_stream(0.01, 20000, seed=5, resolution=None)).press_latencies
        second = pair_keystrokes(generate_poisson_stream(0.01, 20000, seed=6, resolution=None)).press_latencies
        self.assertGreater(stats.ks_2samp(first, second).pvalue, 0.01)

    def test_poisson_stream_on_the_millisecond_grid(self):
        times = generate_poisson_stream(0.01, 1000, seed=1).times()
        self.assertTrue(np.all(times == np.rint(times)))

    def test_constant_stream(self):
        session = generate_constant_stream(150.0, 20)
        pairing = pair_keystrokes(session)
        self.assertEqual({150.0}, set(pairing.press_latencies))
        self.assertEqual({90.0}, set(pairing.durations))

    def test_invalid_streams(self):
        with self.assertRaises(SynthError):
            generate_poisson_stream(0, 10)
        with self.assertRaises(SynthError):
            generate_poisson_stream(0.01, 0)
        with self.assertRaises(SynthError):
            generate_constant_stream(-1, 10)
