"""Seeded simulation of sweep kernels, trajectories and empirical summaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import USE_NUMBA, python_impl
from .errors import InvalidInputError
from .kernels import SweepKernel, _run_sweeps, run_sweeps
from .matrix import MATRIX_CAP
from .model import BinaryModel, IsingLattice, as_index, require_dense, to_bits
from .rng import make_rng

CHUNK = 1 << 16


@dataclass
class Trajectory:
    """States after each full sweep (and optionally after each site visit)."""

    kernel: SweepKernel
    seed: int
    start: int
    states: np.ndarray
    substeps: np.ndarray | None = None

    def full(self) -> np.ndarray:
        """Start state followed by the state after every sweep."""
        return np.concatenate([[self.start], self.states])

    def phase_states(self) -> list[int]:
        """Start state, then the state at the end of every display phase."""
        if self.substeps is None:
            raise InvalidInputError("trajectory was recorded without substeps")
        cuts = [c - 1 for c in self.kernel.order.phases]
        out = [self.start]
        for row in self.substeps:
            out.extend(int(row[c]) for c in cuts)
        return out


@dataclass
class EmpiricalSummary:
    counts: dict
    total_sweeps: int
    burn_in: int
    tv_distance: float | None = None

    def to_json(self) -> dict:
        return {"total_sweeps": self.total_sweeps, "burn_in": self.burn_in,
                "samples": self.total_sweeps - self.burn_in,
                "distinct_states": len(self.counts), "tv_distance": self.tv_distance,
                "counts": {str(k): v for k, v in sorted(self.counts.items())}}


def run_chain(kernel: SweepKernel, sweeps: int, burn_in: int | None = None, seed: int = 0,
              start=0, record_substeps: bool = False, use_numba: bool | None = None):
    """Simulate ``sweeps`` full sweeps from ``start``.

    Parameters
    ----------
    kernel : SweepKernel
    sweeps : int
        Number of full sweeps.
    burn_in : int, optional
        Sweeps dropped from the visit counts; defaults to 10% of ``sweeps``.
    seed : int
        Key of the Philox stream that supplies one uniform per site visit.
    start : int or bit vector
    record_substeps : bool
        Also keep the state after every single-site update.
    use_numba : bool, optional
        ``False`` interprets the sweep loop (its small helpers stay compiled
        unless ``BINSWEEP_DISABLE_NUMBA`` is set).  Defaults to the env flag.

    Returns
    -------
    (Trajectory, EmpiricalSummary)
        The summary carries the TV distance to the exact distribution when
        ``n`` is within the dense cap.
    """
    n = kernel.model.n
    if burn_in is None:
        burn_in = sweeps // 10
    if not sweeps > burn_in >= 0:
        raise InvalidInputError("need sweeps > burn_in >= 0")
    x = as_index(start, n)
    use_numba = USE_NUMBA if use_numba is None else use_numba
    impl = None if use_numba else python_impl(_run_sweeps)
    rng = make_rng(seed)
    states = np.empty(sweeps, dtype=np.int64)
    sub = np.empty((sweeps, n), dtype=np.int64) if record_substeps else None
    cur = x
    for lo in range(0, sweeps, CHUNK):
        hi = min(sweeps, lo + CHUNK)
        out, s = run_sweeps(kernel, cur, rng.random((hi - lo, n)), record_substeps, impl)
        states[lo:hi] = out
        if record_substeps:
            sub[lo:hi] = s
        cur = int(out[-1])
    traj = Trajectory(kernel, int(seed), x, states, sub)
    vals, cnt = np.unique(states[burn_in:], return_counts=True)
    summary = EmpiricalSummary({int(v): int(c) for v, c in zip(vals, cnt)}, sweeps, burn_in)
    if n <= MATRIX_CAP:
        summary.tv_distance = tv_distance(summary, kernel.model)
    return traj, summary


def tv_distance(summary: EmpiricalSummary, model: BinaryModel) -> float:
    """Half the L1 distance between visit frequencies and the exact ``p``."""
    require_dense(model.n, MATRIX_CAP)
    p = model.probabilities()
    total = sum(summary.counts.values())
    if total == 0:
        raise InvalidInputError("empty summary")
    idx = np.fromiter(summary.counts.keys(), dtype=np.int64, count=len(summary.counts))
    freq = np.fromiter(summary.counts.values(), dtype=float, count=len(summary.counts)) / total
    seen = p[idx]
    return float(0.5 * (np.abs(freq - seen).sum() + max(0.0, 1.0 - seen.sum())))


def empirical_transitions(traj: Trajectory) -> np.ndarray:
    """Row-normalized one-sweep transition counts along a trajectory."""
    n = traj.kernel.model.n
    require_dense(n, MATRIX_CAP)
    seq = traj.full()
    N = 1 << n
    counts = np.bincount(seq[:-1] * N + seq[1:], minlength=N * N).reshape(N, N).astype(float)
    rows = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, rows, out=np.zeros_like(counts), where=rows > 0)


def detect_period(seq) -> int | None:
    """Smallest ``P`` with ``seq[t] == seq[t + P]`` throughout, if any.

    Only periods up to half the sequence length are considered.
    """
    seq = np.asarray(seq)
    for P in range(1, len(seq) // 2 + 1):
        if np.array_equal(seq[P:], seq[:-P]):
            return P
    return None


# -- lattice patterns and rendering --------------------------------------

def _from_grid(grid: np.ndarray) -> int:
    flat = grid.ravel()
    return int(np.sum((flat > 0).astype(np.int64) << np.arange(flat.size, dtype=np.int64)))


def horizontal_stripes(rows: int, cols: int) -> int:
    """Rows alternate all-plus / all-minus, top row plus."""
    grid = np.where(np.arange(rows)[:, None] % 2 == 0, 1, -1) * np.ones((1, cols), dtype=int)
    return _from_grid(grid)


def triangle(size: int) -> int:
    """Plus on and above the main diagonal, minus below."""
    r, c = np.indices((size, size))
    return _from_grid(np.where(c >= r, 1, -1))


def render_grid(x: int, rows: int, cols: int) -> str:
    bits = to_bits(x, rows * cols).reshape(rows, cols)
    return "\n".join(" ".join("+" if b else "-" for b in row) for row in bits)


def parse_grid(text: str) -> tuple[int, int, int]:
    """Inverse of :func:`render_grid`; returns ``(state, rows, cols)``."""
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or len({len(ln) for ln in lines}) != 1:
        raise InvalidInputError("grid rows must have equal length")
    try:
        grid = np.array([[{"+": 1, "-": -1}[c] for c in ln] for ln in lines])
    except KeyError:
        raise InvalidInputError("grid cells must be '+' or '-'") from None
    return _from_grid(grid), grid.shape[0], grid.shape[1]


def start_state(text: str, model: BinaryModel) -> int:
    """Parse a start state: an index, a site-1-first bit string, or a pattern name."""
    text = str(text).strip()
    if text in ("h-stripes", "triangle"):
        if not isinstance(model, IsingLattice):
            raise InvalidInputError(f"pattern {text!r} needs a lattice model")
        if text == "h-stripes":
            return horizontal_stripes(model.rows, model.cols)
        if model.rows != model.cols:
            raise InvalidInputError("triangle pattern needs a square lattice")
        return triangle(model.rows)
    if len(text) == model.n and set(text) <= {"0", "1"} and model.n > 1:
        return as_index([int(c) for c in text], model.n)
    try:
        return as_index(int(text), model.n)
    except ValueError:
        raise InvalidInputError(f"bad start state {text!r}") from None
