import numpy as np
import pytest

from pilotwave.eprb import (EPRBRecords, MeasurementRecord, PairState,
                            SingletSpec, b_density_during_a, build_singlet,
                            chsh, correlation, correlation_stderr,
                            measure_A, measure_B, run_chsh, run_eprb,
                            singlet_reference, spatial_envelope,
                            two_body_amplitude)
from pilotwave.errors import EmptyRecords
from pilotwave.spin import MagnetConfig, SternGerlachNumerics


def small_spec(delta=0.0):
    return SingletSpec(delta=delta,
                       numerics=SternGerlachNumerics(nx=128, nz=384))


# ---------------------------------------------------------------------------
# singlet construction
# ---------------------------------------------------------------------------

def test_two_body_amplitude_antisymmetric():
    spec = small_spec()
    pair = PairState.from_hidden(0.8, 1.1)
    rng = np.random.default_rng(0)
    for _ in range(6):
        ra, rb = rng.normal(0, 1, (2, 2))
        for sa, sb in ((1, -1), (-1, 1), (1, 1), (-1, -1)):
            direct = two_body_amplitude(pair, spec, ra, rb, sa, sb)
            swapped = two_body_amplitude(pair, spec, rb, ra, sb, sa)
            assert direct == pytest.approx(-swapped, abs=1e-14)


def test_assembled_state_independent_of_hidden_orientation():
    spec = small_spec()
    pair1 = PairState.from_hidden(0.3, 0.4)
    pair2 = PairState.from_hidden(2.1, 5.0)
    rng = np.random.default_rng(1)
    # ratio to the singlet reference must be one global constant per pair
    ratios = {1: [], 2: []}
    for _ in range(5):
        ra, rb = rng.normal(0, 1, (2, 2))
        for sa, sb in ((1, -1), (-1, 1)):
            ref = singlet_reference(spec, ra, rb, sa, sb)
            ratios[1].append(two_body_amplitude(pair1, spec, ra, rb, sa, sb) / ref)
            ratios[2].append(two_body_amplitude(pair2, spec, ra, rb, sa, sb) / ref)
    for r in ratios.values():
        np.testing.assert_allclose(r, r[0], atol=1e-12)
    # and the magnitude matches the normalized singlet up to that constant
    assert abs(ratios[1][0]) == pytest.approx(abs(ratios[2][0]), abs=1e-12)


def test_two_body_parallel_spins_vanish():
    spec = small_spec()
    pair = PairState.from_hidden(1.0, 0.7)
    assert two_body_amplitude(pair, spec, (0.1, 0.2), (-0.3, 0.5), 1, 1) \
        == pytest.approx(0.0, abs=1e-14)
    assert two_body_amplitude(pair, spec, (0.1, 0.2), (-0.3, 0.5), -1, -1) \
        == pytest.approx(0.0, abs=1e-14)


def test_spatial_marginal_is_envelope_squared():
    spec = small_spec()
    pair = PairState.from_hidden(0.9, 0.2)
    r = np.array([[0.0, 0.0], [1.0, -0.5], [0.3, 2.0]])
    f2 = spatial_envelope(spec, r) ** 2
    # |Psi|^2 summed over spins factorizes into |f(rA)|^2 |f(rB)|^2
    rb = (0.7, 0.1)
    total = sum(abs(two_body_amplitude(pair, spec, ra, rb, sa, sb)) ** 2
                for ra in r for sa in (1, -1) for sb in (1, -1))
    # the raw antisymmetrized product is sqrt(2) times the normalized
    # singlet, so the spin sum contributes 2 |f(rA)|^2 |f(rB)|^2
    expected = 2.0 * np.sum(f2) * spatial_envelope(spec, np.asarray(rb)) ** 2
    assert total == pytest.approx(float(expected[0]), rel=1e-10)


def test_hidden_orientations_cover_the_sphere():
    from pilotwave.eprb import uniform_sphere_orientations

    rng = np.random.default_rng(7)
    theta, phi = uniform_sphere_orientations(40_000, rng)
    assert abs(np.mean(np.cos(theta))) < 0.02
    assert abs(np.mean(np.cos(phi))) < 0.02


# ---------------------------------------------------------------------------
# measurements
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def eprb_sweep():
    # one batched run serving several tests: mixed deltas
    spec = small_spec()
    deltas = [0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi]
    return run_eprb(spec, deltas, n_pairs_per_delta=800, seed=91)


def test_measure_A_aligned_hidden_orientation():
    spec = small_spec()
    pair = PairState.from_hidden(0.0, 0.0)  # A exactly up
    outcome, updated = measure_A(pair, spec, seed=5)
    assert outcome == 1
    assert updated.b_axis_angle == pytest.approx(np.pi - spec.delta)
    assert not updated.entangled


def test_measure_B_perfect_anticorrelation_delta0():
    spec = small_spec(delta=0.0)
    pair = PairState.from_hidden(0.0, 0.0)
    outcome_a, updated = measure_A(pair, spec, seed=6)
    outcome_b = measure_B(updated, spec, seed=7)
    assert outcome_a == 1 and outcome_b == -1


def test_marginal_fairness(eprb_sweep):
    n = len(eprb_sweep)
    assert abs(np.mean(eprb_sweep.outcome_a)) < 3.0 / np.sqrt(n)
    assert abs(np.mean(eprb_sweep.outcome_b)) < 3.0 / np.sqrt(n)


def test_perfect_anticorrelation_at_delta0(eprb_sweep):
    assert correlation(eprb_sweep, 0.0) == -1.0


def test_flipped_analyzer_at_delta_pi(eprb_sweep):
    assert correlation(eprb_sweep, np.pi) == 1.0


def test_delta_half_pi_unbiased(eprb_sweep):
    e = correlation(eprb_sweep, np.pi / 2)
    assert abs(e) < 3.0 / np.sqrt(800)


def test_correlation_matches_minus_cos(eprb_sweep):
    for d in (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi):
        e = correlation(eprb_sweep, d)
        assert abs(e - (-np.cos(d))) < 3.0 / np.sqrt(800)


def test_empty_records_error(eprb_sweep):
    with pytest.raises(EmptyRecords):
        correlation(eprb_sweep, 1.2345)
    with pytest.raises(EmptyRecords):
        correlation(EPRBRecords(*[np.array([])] * 7))


def test_chsh_combination_formula():
    assert chsh(-0.7, 0.7, -0.7, -0.7) == pytest.approx(2.8)


def test_chsh_violation():
    spec = small_spec()
    s, s_err, es, _ = run_chsh(spec, n_pairs=800, seed=17)
    assert s > 2.0
    assert abs(s - 2.0 * np.sqrt(2.0)) < 3.0 * s_err + 0.05


def test_order_independence():
    spec = small_spec()
    deltas = [np.pi / 3]
    ab = run_eprb(spec, deltas, 700, seed=23, order="AB")
    ba = run_eprb(spec, deltas, 700, seed=24, order="BA")
    e_ab = correlation(ab, np.pi / 3)
    e_ba = correlation(ba, np.pi / 3)
    bound = 3.0 * np.sqrt(correlation_stderr(ab, np.pi / 3) ** 2
                          + correlation_stderr(ba, np.pi / 3) ** 2)
    assert abs(e_ab - e_ba) < bound
    assert abs(e_ab - (-np.cos(np.pi / 3))) < 3 * correlation_stderr(ab, np.pi / 3)


def test_b_density_unchanged_during_a_measurement():
    spec = small_spec()
    dist = b_density_during_a(spec, theta_b=0.9, phi_b=0.3,
                              duration=spec.magnet.transit_time, steps=100)
    assert dist < 1e-12


def test_records_rows(eprb_sweep):
    row = next(eprb_sweep.rows())
    assert isinstance(row, MeasurementRecord)
    assert row.outcome_a in (-1, 1) and row.outcome_b in (-1, 1)


def test_build_singlet_opposite_orientations():
    pair = build_singlet(small_spec(), seed=3)
    assert pair.theta_b == pytest.approx(np.pi - pair.theta_a)
    assert pair.phi_b == pytest.approx(pair.phi_a - np.pi)