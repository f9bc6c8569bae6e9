"""One test per acceptance criterion, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict that is printed in the
pytest terminal summary. Run alone with::

    pytest tests/test_acceptance.py -v
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import spearmanr

from conftest import ACCEPTANCE_LINES
from gearscale.cwt import T_CUT, ScaleGrid, cwt
from gearscale.emd import STOP_CAP, count_extrema, count_zero_crossings, decompose
from gearscale.features import (
    DOT_PRODUCT,
    LOCAL_GAUSSIAN,
    NORMALIZED_DOT,
    FrameObjective,
    frame_similarity,
    gaussian_weights,
    objective_map,
    read_features_csv,
    select_scales,
)
from gearscale.pipeline import OBJECTIVES, PipelineConfig, compare_objectives, run_pipeline
from gearscale.signal import generate_example1, generate_example2
from gearscale.svm import TrainingSet, decision, train_binary


def verdict(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number} ({title}): {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# -- 1, 2: EMD ----------------------------------------------------------------


@pytest.fixture(scope="module")
def random_decompositions():
    rng = np.random.default_rng(2024)
    out = []
    t0 = time.perf_counter()
    for _ in range(50):
        n = int(rng.integers(2000, 10_001))
        t = np.arange(n)
        x = np.zeros(n)
        for _ in range(int(rng.integers(1, 5))):
            x += rng.uniform(0.2, 2) * np.sin(2 * np.pi * rng.uniform(0.002, 0.2) * t + rng.uniform(0, 2 * np.pi))
        x += rng.uniform(0, 0.5) * rng.normal(size=n)
        out.append((x, decompose(x)))
    return out, time.perf_counter() - t0


def test_criterion_1_emd_reconstruction(random_decompositions):
    runs, elapsed = random_decompositions
    err = max(float(np.max(np.abs(x - res.reconstruct()))) for x, res in runs)
    ok = err < 1e-9 and elapsed < 30
    verdict(1, "EMD reconstruction", ok, f"max error {err:.2e} (< 1e-9) over 50 signals in {elapsed:.1f} s (< 30 s)")


def test_criterion_2_imf_validity(random_decompositions):
    runs, _ = random_decompositions
    checked, worst, capped = 0, 0, 0
    for _, res in runs:
        for imf, why in zip(res.imfs, res.stop_reasons):
            if why == STOP_CAP:
                capped += 1
                continue
            checked += 1
            worst = max(worst, abs(count_zero_crossings(imf) - count_extrema(imf)))
    verdict(2, "IMF validity", worst <= 1, f"{checked} criteria-stopped IMFs, worst |zc - ext| = {worst} (<= 1); {capped} cap-stopped skipped")


# -- 3: CWT against quadrature -----------------------------------------------

QUAD_SIGNALS = {
    "tone": lambda t: math.cos(0.3 * t + 0.4),
    "two tones": lambda t: math.sin(0.05 * t) + 0.7 * math.cos(0.41 * t),
    "chirp": lambda t: math.cos(0.02 * t + 2.5e-4 * t * t),
    "gaussian burst": lambda t: math.exp(-(((t - 500) / 80) ** 2)) * math.sin(0.2 * t),
    "trend plus tone": lambda t: 1e-3 * t + math.cos(0.15 * t),
}


def quadrature_cwt(f, a, b):
    g = lambda t: f(t) * math.exp(-(((t - b) / a) ** 2)) * math.cos(5 * (t - b) / a) / math.sqrt(2 * math.pi * a)
    val, _ = quad(g, b - T_CUT * a, b + T_CUT * a, limit=500, epsabs=0, epsrel=1e-11)
    return val


def test_criterion_3_cwt_quadrature_oracle():
    """Sampled CWT against the continuous integral of the sampled function.

    The sum over integer samples equals the integral only while the
    integrand is oversampled, so probes use scales of 3 and above with
    signals below 0.5 rad/sample, and keep the whole support inside the
    record.
    """
    rng = np.random.default_rng(7)
    n = 1000
    worst = 0.0
    probes = 0
    for f in QUAD_SIGNALS.values():
        x = np.array([f(t) for t in range(n)])
        for _ in range(10):
            a = float(rng.uniform(3, 30))
            b = int(rng.integers(math.ceil(T_CUT * a), n - 1 - math.ceil(T_CUT * a)))
            w = cwt(x, ScaleGrid([a])).coefficients[0, b]
            q = quadrature_cwt(f, a, b)
            worst = max(worst, abs(w - q) / abs(q))
            probes += 1
    verdict(3, "CWT oracle", worst < 1e-6, f"{probes} probes on {len(QUAD_SIGNALS)} signals, worst relative error {worst:.2e} (< 1e-6)")


# -- 4, 5: the two worked examples ----------------------------------------------

GRID64 = ScaleGrid.integers(64)
LGC15 = FrameObjective(LOCAL_GAUSSIAN, 15)


def _modal_scale(x):
    tr = select_scales(x, cwt(x, GRID64), LGC15)
    vals, counts = np.unique(tr.selected_scales, return_counts=True)
    return tr, float(vals[np.argmax(counts)])


def test_criterion_4_example1():
    t0 = time.perf_counter()
    _, _, y = generate_example1()
    imfs = decompose(y).imfs
    tr, _ = _modal_scale(y.samples)
    frac = float(np.mean((tr.selected_scales >= 18) & (tr.selected_scales <= 22)))
    _, m1 = _modal_scale(imfs[0])
    _, m2 = _modal_scale(imfs[1])
    elapsed = time.perf_counter() - t0
    ok = frac >= 0.9 and 18 <= m1 <= 22 and 36 <= m2 <= 44 and elapsed < 10
    verdict(
        4, "Example 1", ok,
        f"y(t) in [18,22] for {100 * frac:.1f}% (>= 90%); IMF1 mode {m1:g} in [18,22]; IMF2 mode {m2:g} in [36,44]; {elapsed:.1f} s (< 10 s)",
    )


def test_criterion_5_example2():
    _, _, y = generate_example2()
    imf1 = decompose(y).imfs[0]
    tr = select_scales(imf1, cwt(imf1, GRID64), LGC15)
    # skip the outer 10% where end effects of EMD and CWT dominate
    keep = (tr.centers >= 100) & (tr.centers <= 900)
    rho = float(spearmanr(tr.centers[keep], tr.selected_scales[keep]).statistic)
    verdict(5, "Example 2", rho < -0.8, f"Spearman(center, scale) on IMF1 = {rho:.3f} (< -0.8) over samples 100..900")


# -- 6: objective properties -----------------------------------------------------


def test_criterion_6_objective_properties():
    rng = np.random.default_rng(6)
    nd = FrameObjective(NORMALIZED_DOT, 15)
    vals = np.array([frame_similarity(rng.normal(size=31) * rng.uniform(0.01, 100), rng.normal(size=31), nd) for _ in range(10_000)])
    bounded = bool(np.all(np.abs(vals) <= 1.0))

    zero_scalar = all(
        frame_similarity(np.full(31, c), rng.normal(size=31), FrameObjective(kind, 15)) == 0.0
        for kind in (DOT_PRODUCT, LOCAL_GAUSSIAN)
        for c in rng.normal(size=50) * 10
    )
    flat = np.full(300, 0.37)
    scg = cwt(flat, ScaleGrid.integers(16))
    zero_map = all(np.all(objective_map(flat, scg, FrameObjective(k, 15))[1] == 0.0) for k in (DOT_PRODUCT, LOCAL_GAUSSIAN))

    edge_err = max(max(abs(gaussian_weights(n)[0] - 0.01), abs(gaussian_weights(n)[-1] - 0.01)) for n in range(1, 101))

    x = np.sin(2 * np.pi * np.arange(2000) / 23.0) + 0.6 * rng.normal(size=2000)
    grid = ScaleGrid.integers(32)
    frames = np.sort(rng.choice(np.arange(15, 2000 - 15), size=100, replace=False))
    invariant = True
    for kind in OBJECTIVES:
        obj = FrameObjective(kind, 15)
        base = select_scales(x, cwt(x, grid), obj)
        for alpha in (1e-3, 0.37, 8.0, 1e4):
            other = select_scales(alpha * x, cwt(alpha * x, grid), obj)
            idx = frames - 15  # centres start at n
            invariant &= bool(np.array_equal(base.selected_scales[idx], other.selected_scales[idx]))

    ok = bounded and zero_scalar and zero_map and edge_err < 1e-12 and invariant
    verdict(
        6, "objective properties", ok,
        f"|ndot| <= 1 on 1e4 frames: {bounded}; constant frames exactly 0: {zero_scalar and zero_map}; "
        f"edge weight error {edge_err:.1e} (< 1e-12); argmax invariant on 100 frames x 4 scalings x 3 objectives: {invariant}",
    )


# -- 7: SVM correctness ------------------------------------------------------------


def _separable(rng, n, d):
    w = rng.normal(size=d)
    X = rng.normal(size=(3 * n, d))
    s = X @ w / np.linalg.norm(w)
    keep = np.abs(s) > 0.3
    X, s = X[keep][:n], s[keep][:n]
    return X, np.where(s > 0, 1.0, -1.0)


def test_criterion_7_svm_correctness():
    m = train_binary(TrainingSet(np.array([[0.0, 0.0], [2.0, 2.0]]), np.array([-1.0, 1.0])))
    two_point = float(max(np.max(np.abs(m.w - 0.5)), abs(m.b + 1.0)))

    rng = np.random.default_rng(77)
    dual_primal = sum_ay = retrain = 0.0
    for _ in range(20):
        X, y = _separable(rng, int(rng.integers(20, 120)), int(rng.integers(2, 40)))
        m = train_binary(TrainingSet(X, y))
        z = rng.normal(size=(50, X.shape[1]))
        dual_primal = max(dual_primal, float(np.max(np.abs(decision(m, z) - decision(m, z, "primal")))))
        sum_ay = max(sum_ay, abs(float(m.alphas @ y)))
        sv = m.support_indices
        m2 = train_binary(TrainingSet(X[sv], y[sv]))
        ref = np.append(m.w, m.b)
        retrain = max(retrain, float(np.linalg.norm(np.append(m2.w, m2.b) - ref) / np.linalg.norm(ref)))
    ok = two_point < 1e-4 and dual_primal < 1e-8 and sum_ay < 1e-6 and retrain < 1e-4
    verdict(
        7, "SVM correctness", ok,
        f"two-point error {two_point:.1e} (< 1e-4); dual/primal {dual_primal:.1e} (< 1e-8); "
        f"|sum alpha y| {sum_ay:.1e} (< 1e-6); SV retrain {retrain:.1e} (< 1e-4)",
    )


# -- 8: end-to-end synthetic run ------------------------------------------------------


def test_criterion_8_end_to_end(tmp_path):
    cfg = PipelineConfig(out_dir=str(tmp_path / "e2e"))
    t0 = time.perf_counter()
    reports = compare_objectives(cfg, emd_settings=(False,))["signal"]
    elapsed = time.perf_counter() - t0
    by_kind = {r.objective: r for r in reports}
    geometry = all(r.metrics["train"].n == 90 and r.metrics["test"].n == 150 for r in reports)
    dims = {read_features_csv(r.artifacts["features"])[0].shape[1] for r in reports}
    short = {NORMALIZED_DOT: "ndot", DOT_PRODUCT: "dot", LOCAL_GAUSSIAN: "lgc"}
    train_ok = {}
    for kind, r in by_kind.items():
        train_ok[kind] = all(v == 100.0 for v in r.metrics["train"].binary.values())
    lgc_test = by_kind[LOCAL_GAUSSIAN].metrics["test"].overall
    train_txt = ", ".join(
        f"{short[k]} " + "/".join(f"{v:.2f}" for v in by_kind[k].metrics["train"].binary.values()) for k in OBJECTIVES
    )
    ok = geometry and dims == {32} and all(train_ok.values()) and lgc_test >= 99.0 and elapsed < 300
    verdict(
        8, "end-to-end synthetic", ok,
        f"90/150 split: {geometry}; train success {train_txt} (all 100.00 required); "
        f"lgc test accuracy {lgc_test:.2f}% (>= 99%); {elapsed:.0f} s (< 300 s)",
    )


# -- 9: determinism -------------------------------------------------------------------


def test_criterion_9_determinism(tmp_path):
    reps = [run_pipeline(PipelineConfig(out_dir=str(tmp_path / name), figures=False)) for name in ("one", "two")]
    same = {
        key: open(reps[0].artifacts[key], "rb").read() == open(reps[1].artifacts[key], "rb").read() for key in ("features", "model")
    }
    verdict(9, "determinism", all(same.values()), f"features CSV identical: {same['features']}; model JSON identical: {same['model']}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
