import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtgan.core import Dictionary, EnergyKind, GameConfig, LatentSpec, Transform
from dtgan.datagen import MixtureSpec, make_rng, sample_gmm
from dtgan.metrics import (
    MAX_GRID_POINTS,
    _dictionary_grid,
    _transform_grid,
    alignment_residual,
    bruteforce_saddle,
    component_recovery_error,
    config_hash,
    dictionary_recovery,
    fit_power_law,
    metric_record,
    rate_experiment,
    recovery_error,
    write_metric_records,
)
from dtgan.objective import SampleBatch, empirical_objective, nash_gap

# --- recovery error ----------------------------------------------------------


def naive_mean_distance(a, b):
    ma = [sum(row[i] for row in a) / len(a) for i in range(len(a[0]))]
    mb = [sum(row[i] for row in b) / len(b) for i in range(len(b[0]))]
    return sum((p - q) ** 2 for p, q in zip(ma, mb)) ** 0.5


def test_recovery_error_hand_values(rng):
    x = rng.standard_normal((10, 2))
    assert recovery_error(x, x) == 0
    assert recovery_error([[1.0, 0.0]], [[0.0, 0.0]]) == 1


def test_recovery_error_naive_oracle(rng):
    for _ in range(5):
        a, b = rng.standard_normal((30, 3)), rng.standard_normal((17, 3))
        assert recovery_error(a, b) == pytest.approx(naive_mean_distance(a, b), abs=1e-12)


def test_recovery_error_rejects_bad_input():
    with pytest.raises(ValueError):
        recovery_error(np.zeros((0, 2)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        recovery_error(np.zeros((2, 2)), np.zeros((3, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-100, 100), st.floats(-100, 100))
def test_recovery_error_symmetric_and_translation_covariant(seed, sx, sy):
    rng = make_rng(seed)
    a, b = rng.standard_normal((20, 2)), rng.standard_normal((25, 2))
    shift = np.array([sx, sy])
    base = recovery_error(a, b)
    assert recovery_error(b, a) == pytest.approx(base, abs=1e-12)
    assert recovery_error(a + shift, b + shift) == pytest.approx(base, abs=1e-12)


def test_component_diagnostic_small_for_matching_mixture():
    spec = MixtureSpec(separation=5.0)
    a = sample_gmm(spec, 20_000, make_rng(0))
    b = sample_gmm(spec, 20_000, make_rng(1))
    assert component_recovery_error(a, b, spec.means) < 0.05
    collapsed = np.zeros((100, 2))
    assert component_recovery_error(collapsed, b, spec.means) > 3.0


# --- dictionary recovery ----------------------------------------------------------


def unit_columns(rng, n, k):
    d = rng.standard_normal((n, k))
    return d / np.linalg.norm(d, axis=0)


def exhaustive_match(dh, d0):
    dn = dh / np.linalg.norm(dh, axis=0)
    k = d0.shape[1]
    best = None
    for perm in itertools.permutations(range(k)):
        for signs in itertools.product((1, -1), repeat=k):
            r = np.linalg.norm(dn[:, list(perm)] * np.array(signs) - d0)
            if best is None or r < best[0] - 1e-12:
                best = (r, perm, signs)
    return best


def test_recovery_swap_and_negation(rng):
    d0 = unit_columns(rng, 3, 2)
    dh = np.stack([d0[:, 1], -d0[:, 0]], axis=1)
    res = dictionary_recovery(Dictionary(dh, 5.0), Dictionary(d0, 5.0))
    assert res.residual < 1e-10
    assert res.permutation == (1, 0)
    assert res.signs == (-1, 1)


def test_recovery_identity(rng):
    d0 = unit_columns(rng, 3, 3)
    res = dictionary_recovery(d0, d0)
    assert res.permutation == (0, 1, 2) and res.signs == (1, 1, 1)
    assert res.residual == pytest.approx(0.0, abs=1e-14)  # column renormalization round-off


@pytest.mark.parametrize("k", [2, 3])
def test_recovery_matches_exhaustive_search(rng, k):
    for _ in range(30):
        d0 = unit_columns(rng, 2, k)
        dh = rng.standard_normal((2, k))
        res = dictionary_recovery(dh, d0)
        r, perm, signs = exhaustive_match(dh, d0)
        assert res.residual == pytest.approx(r, abs=1e-10)
        assert sorted(res.permutation) == list(range(k))
        dn = dh / np.linalg.norm(dh, axis=0)
        direct = np.linalg.norm(dn[:, list(res.permutation)] * np.array(res.signs) - d0)
        assert res.residual == pytest.approx(direct, abs=1e-12)


def test_recovery_shape_mismatch():
    with pytest.raises(ValueError):
        dictionary_recovery(np.eye(2), np.eye(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_recovery_invariant_under_permutation_and_sign(seed):
    rng = make_rng(seed)
    d0 = unit_columns(rng, 3, 4)
    dh = rng.standard_normal((3, 4))
    perm = rng.permutation(4)
    signs = rng.choice([-1.0, 1.0], size=4)
    a = dictionary_recovery(dh, d0).residual
    b = dictionary_recovery(dh[:, perm] * signs, d0).residual
    assert a == pytest.approx(b, abs=1e-10)


# --- alignment residual --------------------------------------------------------------


def test_alignment_perfect():
    d = np.array([[0.6], [0.8]])
    assert alignment_residual(d, d.T, LatentSpec(1, 1), 50, make_rng(0)) == pytest.approx(
        0.0, abs=1e-24)


def naive_offspan_response(t, d):
    # every row faces away from the span, and the complement is one-dimensional
    p = np.eye(d.shape[0]) - d @ np.linalg.pinv(d)
    w, v = np.linalg.eigh(p)
    normal = v[:, np.argmax(w)]
    total = 0.0
    for row in t:
        total += float(sum(a * b for a, b in zip(row, normal))) ** 2
    return total / len(t)


def test_alignment_orthogonal_rows_naive_oracle(rng):
    d = np.array([[1.0, 0.3], [0.2, 1.0], [0.0, 0.0]])
    t = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -2.0], [0.0, 0.0, 0.5]])
    got = alignment_residual(d, t, LatentSpec(2, 2), 40, rng)
    assert got == pytest.approx(naive_offspan_response(t, d), rel=1e-12)


def test_alignment_empty_complement():
    t = make_rng(0).standard_normal((4, 2))
    assert alignment_residual(np.eye(2), t, LatentSpec(2, 2), 10, make_rng(1)) == 0.0


# --- grid minimax oracle -------------------------------------------------------------------


def test_saddle_flat_game():
    b = SampleBatch(np.zeros((3, 1)), np.zeros((3, 1)))
    res = bruteforce_saddle(b, GameConfig(lam=0.0), 21)
    assert res.value == 0


def test_saddle_scalar_game():
    b = SampleBatch(np.full((4, 1), 2.0), np.ones((4, 1)))
    res = bruteforce_saddle(b, GameConfig(EnergyKind.L1, frob_bound=3.0), 601)
    # max over t in {-1, 1} of |2t| - |tD| = 2 - |D|, minimized on the ball boundary
    assert res.value == pytest.approx(-1.0, abs=1e-12)
    assert abs(res.D.entries[0, 0]) == pytest.approx(3.0)
    assert nash_gap(res.D, res.T, b, GameConfig(EnergyKind.L1, frob_bound=3.0), 200) < 1e-3


def test_saddle_grid_too_large():
    b = SampleBatch(np.ones((2, 2)), np.ones((2, 2)))
    with pytest.raises(ValueError):
        bruteforce_saddle(b, GameConfig(), 40)
    assert MAX_GRID_POINTS == 10**6


def two_d_instance():
    rng = make_rng(21)
    return SampleBatch(rng.standard_normal((12, 2)) * [1.5, 0.5], rng.standard_normal((12, 2)))


def test_saddle_refinement_within_bound():
    b, cfg = two_d_instance(), GameConfig(EnergyKind.L2SQ)
    coarse, fine = bruteforce_saddle(b, cfg, 4), bruteforce_saddle(b, cfg, 8)
    assert abs(coarse.value - fine.value) < coarse.grid_error_bound + fine.grid_error_bound


def test_saddle_sandwich():
    b, cfg = two_d_instance(), GameConfig(EnergyKind.L1)
    res = bruteforce_saddle(b, cfg, 6)
    t_grid, _ = _transform_grid(2, 2, 6)
    d_grid, _ = _dictionary_grid(2, 2, cfg.bound_for(2), 6)
    at_t = min(empirical_objective(Dictionary(d, cfg.bound_for(2)), res.T, b, cfg).total
               for d in d_grid)
    at_d = max(empirical_objective(res.D, Transform(t), b, cfg).total for t in t_grid)
    assert at_t - 1e-12 <= res.value <= at_d + 1e-12


def test_nash_gap_at_2d_grid_saddle_within_slack():
    b, cfg = two_d_instance(), GameConfig(EnergyKind.L2SQ)
    res = bruteforce_saddle(b, cfg, 8)
    assert nash_gap(res.D, res.T, b, cfg, 300) <= 2 * res.grid_error_bound


# --- rate fit ---------------------------------------------------------------------------


def test_power_law_flat_and_exact():
    assert fit_power_law([10, 100, 1000], [0.3, 0.3, 0.3]).fitted_exponent == pytest.approx(
        0.0, abs=1e-12)
    ns = [100, 400, 1600, 6400]
    fit = fit_power_law(ns, [2.0 / np.sqrt(n) for n in ns])
    assert abs(fit.fitted_exponent + 0.5) < 1e-8
    assert fit.fitted_log_constant == pytest.approx(np.log(2.0))


def test_power_law_validation():
    with pytest.raises(ValueError):
        fit_power_law([10, 100], [1.0, 0.5])
    with pytest.raises(ValueError):
        fit_power_law([10, 100, 1000], [1.0, 0.0, 0.5])


def test_rate_experiment_validation():
    with pytest.raises(ValueError):
        rate_experiment([100, 50, 200], 1)
    with pytest.raises(ValueError):
        rate_experiment([100, 200], 1)


# --- records ---------------------------------------------------------------------------------


def test_metric_records(tmp_path):
    cfg = {"a": 1, "b": [1, 2]}
    assert config_hash(cfg) == config_hash({"b": [1, 2], "a": 1})
    rec = metric_record("err", np.float64(0.5), cfg, seed=3, note="x")
    path = write_metric_records(tmp_path / "m.json", [rec])
    back = json.loads(path.read_text())
    assert back[0]["value"] == 0.5 and back[0]["seed"] == 3 and back[0]["note"] == "x"
