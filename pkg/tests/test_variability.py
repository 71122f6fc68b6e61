import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alos.errors import DimensionMismatchError, TrialFailedError, ZeroNormError
from alos.gateway import EmbeddingVector, MockBackend
from alos.variability import (
    AnalysisConfig,
    SimilarityMatrix,
    Trial,
    TrialSet,
    cosine,
    matrix_csv,
    matrix_pgm,
    run_analysis,
    run_trials,
    similarity_matrix,
    summary,
)


def vec(*values):
    return EmbeddingVector(values=tuple(float(v) for v in values), sourceTextHash="t")


def trialset(embeddings, temperature=0.0):
    trials = tuple(Trial(i, f"t{i}", e) for i, e in enumerate(embeddings))
    return TrialSet(prompt="p", systemPrompt="", temperature=temperature,
                    trials=trials)


# --- cosine -----------------------------------------------------------------------


def test_cosine_identical_unit_vectors():
    assert cosine(vec(1, 0), vec(1, 0)) == pytest.approx(1.0, abs=1e-12)


def test_cosine_orthogonal():
    assert cosine(vec(1, 0), vec(0, 1)) == pytest.approx(0.0, abs=1e-12)


def test_cosine_45_degrees():
    assert cosine(vec(1, 1), vec(1, 0)) == pytest.approx(0.70710678, abs=1e-8)


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        cosine(vec(1, 0), vec(1, 0, 0))


def test_cosine_zero_norm():
    with pytest.raises(ZeroNormError):
        cosine((0.0, 0.0), (1.0, 0.0))


def brute_force_cosine(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def test_cosine_against_brute_force_random_pairs():
    rng = np.random.default_rng(12345)
    for _ in range(300):
        d = int(rng.integers(2, 257))
        a = rng.uniform(-1, 1, d)
        b = rng.uniform(-1, 1, d)
        assert cosine(tuple(a), tuple(b)) == pytest.approx(
            brute_force_cosine(a, b), abs=1e-12)


# --- matrices -----------------------------------------------------------------------


def test_matrix_of_identical_embeddings_is_all_ones():
    m = similarity_matrix(trialset([vec(1, 2, 3)] * 5))
    for i in range(5):
        for j in range(5):
            assert m.cells[i][j] == pytest.approx(1.0, abs=1e-9)


def test_matrix_of_orthogonal_pair():
    m = similarity_matrix(trialset([vec(1, 0), vec(0, 1)]))
    assert m.cells[0][1] == pytest.approx(0.0, abs=1e-12)
    assert m.cells[1][0] == m.cells[0][1]


def test_matrix_matches_brute_force_double_loop():
    rng = np.random.default_rng(7)
    vs = [vec(*rng.uniform(-1, 1, 24)) for _ in range(5)]
    m = similarity_matrix(trialset(vs))
    for i in range(5):
        for j in range(5):
            expected = brute_force_cosine(vs[i].values, vs[j].values)
            assert m.cells[i][j] == pytest.approx(expected, abs=1e-12)


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=40)
def test_matrix_properties_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    d = int(rng.integers(2, 64))
    vs = [vec(*rng.uniform(-1, 1, d)) for _ in range(n)]
    m = similarity_matrix(trialset(vs))
    for i in range(n):
        assert m.cells[i][i] == pytest.approx(1.0, abs=1e-9)
        for j in range(n):
            assert m.cells[i][j] == m.cells[j][i]  # mirrored, exactly
            assert -1.0 <= m.cells[i][j] <= 1.0


def test_trialset_rejects_gapped_indices():
    with pytest.raises(ValueError):
        TrialSet(prompt="p", systemPrompt="", temperature=0.0,
                 trials=(Trial(0, "a", vec(1, 0)), Trial(2, "b", vec(0, 1))))


def test_trialset_rejects_mixed_dims():
    with pytest.raises(ValueError):
        trialset([vec(1, 0), vec(1, 0, 0)])


# --- summaries -----------------------------------------------------------------------


def test_summary_hand_computed():
    cells = ((1.0, 0.9, 0.8),
             (0.9, 1.0, 0.7),
             (0.8, 0.7, 1.0))
    s = summary(SimilarityMatrix(3, cells))
    assert s.count == 3
    assert s.mean == pytest.approx(0.8, abs=1e-12)
    assert s.sd == pytest.approx(0.1, abs=1e-12)  # n-1 denominator


def test_summary_all_ones():
    m = similarity_matrix(trialset([vec(2, 1)] * 4))
    s = summary(m)
    assert s.mean == pytest.approx(1.0, abs=1e-9)
    assert s.sd == pytest.approx(0.0, abs=1e-9)
    assert s.count == 6


# --- exports ------------------------------------------------------------------------


def test_csv_golden_2x2():
    m = similarity_matrix(trialset([vec(3, 4), vec(3, 4)]))
    assert matrix_csv(m) == ("1.000000000,1.000000000\n"
                             "1.000000000,1.000000000\n")


def test_csv_fixed_width_formatting():
    m = SimilarityMatrix(2, ((1.0, -0.5), (-0.5, 1.0)))
    assert matrix_csv(m) == "1.000000000,-0.500000000\n-0.500000000,1.000000000\n"


def test_heatmap_all_ones_black_lower_white_upper():
    m = similarity_matrix(trialset([vec(1, 1)] * 4))
    pgm = matrix_pgm(m)
    assert pgm.startswith(b"P5\n4 4\n255\n")
    pixels = pgm[len(b"P5\n4 4\n255\n"):]
    assert len(pixels) == 16
    for i in range(4):
        for j in range(4):
            value = pixels[i * 4 + j]
            assert value == (255 if j > i else 0)


def test_exports_are_reproducible(tmp_path):
    from alos.variability import export_csv, export_heatmap
    m = similarity_matrix(trialset([vec(1, 2), vec(2, 1), vec(1, 1)]))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    export_csv(m, a), export_csv(m, b)
    assert a.read_bytes() == b.read_bytes()
    pa, pb = tmp_path / "a.pgm", tmp_path / "b.pgm"
    export_heatmap(m, pa), export_heatmap(m, pb)
    assert pa.read_bytes() == pb.read_bytes()


# --- trials against the mock backend ---------------------------------------------------


def test_run_trials_temp_zero_all_identical():
    ts = run_trials(MockBackend(), None, "Define banana in 300 words.",
                    n=20, temperature=0.0, seed=0)
    assert len(ts.trials) == 20
    assert len({t.completion for t in ts.trials}) == 1
    m = similarity_matrix(ts)
    s = summary(m)
    assert s.mean == pytest.approx(1.0, abs=1e-9)
    assert s.sd == pytest.approx(0.0, abs=1e-9)


def test_run_trials_needs_two():
    with pytest.raises(ValueError):
        run_trials(MockBackend(), None, "x", n=1)


def test_run_trials_is_seed_deterministic():
    a = run_trials(MockBackend(), None, "Define life.", n=6, temperature=0.7, seed=3)
    b = run_trials(MockBackend(), None, "Define life.", n=6, temperature=0.7, seed=3)
    assert [t.completion for t in a.trials] == [t.completion for t in b.trials]


class FlakyBackend:
    kind = "mock"

    def __init__(self):
        self.embedding = MockBackend().embed

    def complete(self, req):
        from alos.errors import BackendError
        if req.seed % 2 == 1:
            raise BackendError("flaky")
        return MockBackend().complete(req)

    def embed(self, texts):
        return self.embedding(texts)


def test_run_trials_surfaces_failed_indices():
    with pytest.raises(TrialFailedError) as err:
        run_trials(FlakyBackend(), None, "Define x.", n=4, temperature=0.0, seed=0)
    assert err.value.indices == (1, 3)


def test_temperature_monotonicity_over_seeds():
    means = {0.0: [], 0.7: [], 2.0: []}
    for seed in range(10):
        for temp in means:
            ts = run_trials(MockBackend(), None, "Define banana in 300 words.",
                            n=8, temperature=temp, seed=seed)
            means[temp].append(summary(similarity_matrix(ts)).mean)
    for seed in range(10):
        assert means[0.0][seed] >= means[0.7][seed] >= means[2.0][seed]


def test_run_analysis_writes_expected_files(tmp_path):
    config = AnalysisConfig(user_prompt="Define banana in 300 words.",
                            n=4, temperatures=(0.0, 0.7), seed=1)
    report = run_analysis(MockBackend(), config, tmp_path)
    for stem in ("matrix_0.0", "matrix_0.7"):
        assert (tmp_path / f"{stem}.csv").exists()
        assert (tmp_path / f"{stem}.pgm").exists()
    assert (tmp_path / "trials.jsonl").exists()
    assert (tmp_path / "summary.json").exists()
    assert [row["temperature"] for row in report["results"]] == [0.0, 0.7]
    lines = (tmp_path / "trials.jsonl").read_text().splitlines()
    assert len(lines) == 8  # 4 trials x 2 temperatures


class ParallelMock:
    """Mock content behind the live code path, to exercise the executor."""

    kind = "live"
    max_inflight = 5

    def __init__(self):
        self._inner = MockBackend()

    def complete(self, req):
        return self._inner.complete(req)

    def embed(self, texts):
        return self._inner.embed(texts)


def test_concurrent_assembly_matches_sequential():
    seq = run_trials(MockBackend(), None, "Define life.", n=12,
                     temperature=0.7, seed=2)
    par = run_trials(ParallelMock(), None, "Define life.", n=12,
                     temperature=0.7, seed=2)
    assert [t.completion for t in par.trials] == [t.completion for t in seq.trials]
    assert similarity_matrix(par).cells == similarity_matrix(seq).cells
