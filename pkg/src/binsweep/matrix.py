"""Dense site and sweep transition matrices and their spectra.

Row ``x`` of a matrix is the distribution of the next state given current
state ``x``; state indices follow the bit convention of :mod:`binsweep.model`.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalError
from .kernels import AcceptanceRule, SweepKernel, accept_prob
from .model import BinaryModel, require_dense

MATRIX_CAP = 12
ROW_SUM_TOL = 1e-12
# eigenvalue moduli this close to the top one count as a second unit eigenvalue
GAP_BAND = 1e-13

_MAGIC = b"BSWT"
_TAG = b"rowmajor;site1=lsb"
_HEADER = struct.Struct("<4sHH20s")


@dataclass(frozen=True)
class TransitionMatrix:
    n: int
    entries: np.ndarray

    def __post_init__(self):
        e = self.entries
        if e.shape != (1 << self.n, 1 << self.n):
            raise InvalidInputError(f"matrix shape {e.shape} does not match n={self.n}")

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.entries.sum(axis=1) - 1.0)))


@dataclass(frozen=True)
class SpectralReport:
    gap: float
    lambda2_modulus: float
    eigenvalue_moduli: np.ndarray

    def to_json(self) -> dict:
        return {"gap": self.gap, "lambda2_modulus": self.lambda2_modulus}


def _entries(T) -> np.ndarray:
    return T.entries if isinstance(T, TransitionMatrix) else np.asarray(T, dtype=float)


def site_matrix(rule: AcceptanceRule, model: BinaryModel, i: int) -> TransitionMatrix:
    """Exact matrix of the operator that may flip site ``i`` only."""
    require_dense(model.n, MATRIX_CAP)
    N = 1 << model.n
    p = accept_prob(rule, model.site_delta_logp(i))
    states = np.arange(N)
    T = np.zeros((N, N))
    T[states, states] = 1.0 - p
    T[states, states ^ (1 << (i - 1))] = p
    return TransitionMatrix(model.n, T)


def _apply_site(M: np.ndarray, p: np.ndarray, k: int, block: int = 512) -> np.ndarray:
    # right-multiply by the site-k operator: column y mixes y and f_k(y)
    N = M.shape[1]
    f = np.arange(N) ^ (1 << k)
    stay = 1.0 - p
    moved = p[f]
    out = np.empty_like(M)
    for r in range(0, M.shape[0], block):
        rows = M[r:r + block]
        out[r:r + block] = rows * stay + rows[:, f] * moved
    return out


def sweep_matrix(kernel: SweepKernel) -> TransitionMatrix:
    """Matrix of one full sweep, the first site of the order applied first."""
    model = kernel.model
    require_dense(model.n, MATRIX_CAP)
    N = 1 << model.n
    M = np.eye(N)
    for site in kernel.order.sites:
        p = accept_prob(kernel.rule, model.site_delta_logp(site))
        M = _apply_site(M, p, site - 1)
    T = TransitionMatrix(model.n, M)
    err = T.row_sum_error()
    if err > ROW_SUM_TOL:
        raise NumericalError(f"sweep matrix rows drift from 1 by {err:.3e}")
    return T


def stationary_residual(T, model: BinaryModel) -> float:
    """``max |p^T T - p^T|`` for the exactly normalized model distribution."""
    E = _entries(T)
    p = model.probabilities()
    if E.shape != (p.size, p.size):
        raise InvalidInputError("matrix and model dimensions disagree")
    return float(np.max(np.abs(p @ E - p)))


def spectral_gap(T, band: float = GAP_BAND) -> SpectralReport:
    """One minus the second largest eigenvalue modulus, clamped to ``[0, 1]``.

    The full (non-symmetric) spectrum is computed; if a second modulus lies
    within ``band`` of the top one the chain has several unit eigenvalues
    and the gap is reported as exactly 0.
    """
    E = _entries(T)
    if E.ndim != 2 or E.shape[0] != E.shape[1] or E.shape[0] < 2:
        raise InvalidInputError("need a square matrix with at least two states")
    try:
        eig = np.linalg.eigvals(E)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver failed on {E.shape} matrix (row-sum error "
            f"{np.max(np.abs(E.sum(axis=1) - 1.0)):.3e}): {exc}") from exc
    if not np.all(np.isfinite(eig)):
        raise NumericalError("eigensolver returned non-finite eigenvalues")
    moduli = np.sort(np.abs(eig))[::-1]
    if abs(moduli[0] - 1.0) > 1e-9:
        raise NumericalError(f"top eigenvalue modulus {moduli[0]!r} is not 1; "
                             "is the matrix row-stochastic?")
    lam2 = float(moduli[1])
    if moduli[0] - lam2 <= band:
        gap = 0.0
    else:
        gap = float(min(1.0, max(0.0, 1.0 - lam2)))
    return SpectralReport(gap, lam2, moduli)


def save_matrix(path, T: TransitionMatrix) -> None:
    """Write ``T`` as a small header plus row-major little-endian float64."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, T.n, _TAG))
        fh.write(np.ascontiguousarray(T.entries, dtype="<f8").tobytes())


def load_matrix(path) -> TransitionMatrix:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise InvalidInputError("truncated matrix file")
        magic, version, n, tag = _HEADER.unpack(head)
        if magic != _MAGIC or version != 1 or tag.rstrip(b"\0") != _TAG:
            raise InvalidInputError("not a binsweep matrix dump")
        N = 1 << n
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != N * N:
        raise InvalidInputError(f"expected {N * N} entries, found {data.size}")
    return TransitionMatrix(n, data.reshape(N, N).astype(float))
