"""Response-variability analysis: repeated trials, cosine matrices, exports.

One prompt is completed N times per temperature, every response is
embedded, and the pairwise cosine similarities land in an N x N matrix.
Summary statistics use the strict lower triangle only (the upper half is a
duplicate) with the sample standard deviation (n-1 denominator). Exports
are a fixed-format CSV and an 8-bit portable graymap whose upper triangle
is blanked to white, similarity 0 maps to white and 1 to black.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    AloError,
    DimensionMismatchError,
    IoFailureError,
    TrialFailedError,
    ZeroNormError,
)
from .gateway import ChatRequest, EmbeddingVector, Message

PAPER_TEMPERATURES = (0.0, 0.7, 2.0)
DEFAULT_N = 20


def _values(v) -> Sequence[float]:
    return v.values if isinstance(v, EmbeddingVector) else v


def cosine(a, b) -> float:
    """similarity(a, b) = a.b / (|a||b|), clamped into [-1, 1]."""
    va, vb = _values(a), _values(b)
    if len(va) != len(vb):
        raise DimensionMismatchError(f"dims {len(va)} vs {len(vb)}")
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(va, vb):
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine undefined for a zero vector")
    return max(-1.0, min(1.0, dot / math.sqrt(na) / math.sqrt(nb)))


@dataclass(frozen=True)
class Trial:
    index: int
    completion: str
    embedding: EmbeddingVector


@dataclass(frozen=True)
class TrialSet:
    prompt: str
    systemPrompt: str
    temperature: float
    trials: tuple[Trial, ...]

    def __post_init__(self):
        for i, trial in enumerate(self.trials):
            if trial.index != i:
                raise ValueError("trial indices must be contiguous from 0")
        dims = {t.embedding.dim for t in self.trials}
        if len(dims) > 1:
            raise ValueError(f"mixed embedding dimensions {sorted(dims)}")


def run_trials(backend, system_prompt: Optional[str], user_prompt: str,
               n: int = DEFAULT_N, temperature: float = 0.7,
               seed: int = 0) -> TrialSet:
    """N completions of one prompt at one temperature, embedded in order.

    Failed trials are retried once; whatever still fails raises
    TrialFailed with the offending indices.
    """
    if n < 2:
        raise ValueError("a trial set needs n >= 2")
    msgs: tuple[Message, ...] = ()
    if system_prompt:
        msgs += (Message("system", system_prompt),)
    msgs += (Message("user", user_prompt),)
    requests = [ChatRequest(messages=msgs, temperature=temperature,
                            seed=seed * 1_000_003 + i) for i in range(n)]

    completions: list[Optional[str]] = [None] * n

    def attempt(indices: list[int]) -> list[int]:
        failed = []
        if getattr(backend, "kind", "mock") == "live":
            with ThreadPoolExecutor(
                    max_workers=getattr(backend, "max_inflight", 4)) as pool:
                futures = {i: pool.submit(backend.complete, requests[i])
                           for i in indices}
            for i in indices:
                try:
                    completions[i] = futures[i].result().content
                except Exception:
                    failed.append(i)
        else:
            for i in indices:
                try:
                    completions[i] = backend.complete(requests[i]).content
                except AloError:
                    failed.append(i)
        return failed

    failed = attempt(list(range(n)))
    if failed:
        failed = attempt(failed)
    if failed:
        raise TrialFailedError(sorted(failed))

    texts = [c if c else " " for c in completions]
    embeddings = backend.embed(texts)
    trials = tuple(Trial(index=i, completion=completions[i] or "",
                         embedding=embeddings[i]) for i in range(n))
    return TrialSet(prompt=user_prompt, systemPrompt=system_prompt or "",
                    temperature=temperature, trials=trials)


@dataclass(frozen=True)
class SimilarityMatrix:
    n: int
    cells: tuple[tuple[float, ...], ...]


def similarity_matrix(ts: TrialSet) -> SimilarityMatrix:
    """cell[i][j] = cosine(e_i, e_j); mirrored, so symmetry is exact."""
    n = len(ts.trials)
    if n < 2:
        raise ValueError("similarity matrix needs at least 2 trials")
    vecs = [t.embedding for t in ts.trials]
    rows = [[0.0] * n for _ in range(n)]
    for i in range(n):
        rows[i][i] = cosine(vecs[i], vecs[i])
        for j in range(i):
            c = cosine(vecs[i], vecs[j])
            rows[i][j] = c
            rows[j][i] = c
    return SimilarityMatrix(n=n, cells=tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class SimilaritySummary:
    mean: float
    sd: float
    count: int  # n(n-1)/2 strict lower-triangle cells


def summary(m: SimilarityMatrix) -> SimilaritySummary:
    values = [m.cells[i][j] for i in range(m.n) for j in range(i)]
    count = len(values)
    mean = math.fsum(values) / count
    if count > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (count - 1)
        sd = math.sqrt(var)
    else:
        sd = 0.0
    return SimilaritySummary(mean=mean, sd=sd, count=count)


def matrix_csv(m: SimilarityMatrix) -> str:
    return "".join(",".join(f"{v:.9f}" for v in row) + "\n" for row in m.cells)


def export_csv(m: SimilarityMatrix, path: Path) -> Path:
    try:
        Path(path).write_text(matrix_csv(m), encoding="utf-8")
    except OSError as e:
        raise IoFailureError(str(e)) from e
    return Path(path)


def matrix_pgm(m: SimilarityMatrix) -> bytes:
    """Binary PGM: lower triangle + diagonal, [0,1] -> [255,0]; upper blank."""
    header = f"P5\n{m.n} {m.n}\n255\n".encode("ascii")
    pixels = bytearray()
    for i in range(m.n):
        for j in range(m.n):
            if j > i:
                pixels.append(255)
            else:
                v = max(0.0, min(1.0, m.cells[i][j]))
                pixels.append(round(255 * (1.0 - v)))
    return header + bytes(pixels)


def export_heatmap(m: SimilarityMatrix, path: Path) -> Path:
    try:
        Path(path).write_bytes(matrix_pgm(m))
    except OSError as e:
        raise IoFailureError(str(e)) from e
    return Path(path)


# --- the end-to-end analysis pipeline ----------------------------------------------


@dataclass(frozen=True)
class AnalysisConfig:
    user_prompt: str
    system_prompt_variant: Optional[str] = None  # markdown | codegen | None
    n: int = DEFAULT_N
    temperatures: tuple[float, ...] = PAPER_TEMPERATURES
    backend: str = "mock"
    seed: int = 0

    @staticmethod
    def from_dict(d: dict) -> "AnalysisConfig":
        return AnalysisConfig(
            user_prompt=d["user_prompt"],
            system_prompt_variant=d.get("system_prompt_variant"),
            n=int(d.get("n", DEFAULT_N)),
            temperatures=tuple(float(t) for t in
                               d.get("temperatures", PAPER_TEMPERATURES)),
            backend=d.get("backend", "mock"),
            seed=int(d.get("seed", 0)),
        )


def run_analysis(backend, config: AnalysisConfig, out_dir: Path,
                 system_prompt: Optional[str] = None) -> dict:
    """Full sweep: trials, matrices, CSV + heatmap per temperature, summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    trial_lines = []
    for temp in config.temperatures:
        ts = run_trials(backend, system_prompt, config.user_prompt,
                        n=config.n, temperature=temp, seed=config.seed)
        m = similarity_matrix(ts)
        s = summary(m)
        export_csv(m, out / f"matrix_{temp:.1f}.csv")
        export_heatmap(m, out / f"matrix_{temp:.1f}.pgm")
        for trial in ts.trials:
            trial_lines.append(json.dumps({
                "temperature": temp,
                "index": trial.index,
                "content": trial.completion,
                "sourceTextHash": trial.embedding.sourceTextHash,
            }, sort_keys=True))
        results.append({"temperature": temp, "mean": s.mean, "sd": s.sd,
                        "count": s.count})
    (out / "trials.jsonl").write_text("\n".join(trial_lines) + "\n", encoding="utf-8")
    report = {
        "user_prompt": config.user_prompt,
        "system_prompt_variant": config.system_prompt_variant,
        "n": config.n,
        "seed": config.seed,
        "backend": config.backend,
        "results": results,
    }
    (out / "summary.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report
