"""Full-support distributions over binary state vectors and the flip algebra.

States are integers in ``[0, 2**n)``.  Site ``i`` (1-based) lives at bit
``i - 1``, so site 1 is the least significant bit and flipping a site is a
single xor.  Spins map bit 0 to -1 and bit 1 to +1.  Lattice sites are
numbered row-major from the top-left corner.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, ResourceCapError

MAX_SITES = 20
DEFAULT_TIE_TOL = 1e-12

# kernel data modes
MODE_TABLE = 0
MODE_LOCAL = 1


def check_n(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_SITES:
        raise InvalidInputError(f"site count must be an integer in [1, {MAX_SITES}], got {n!r}")
    return int(n)


def as_index(x, n: int) -> int:
    """Normalize a state given as an integer or a 0/1 vector to its index."""
    if isinstance(x, (int, np.integer)):
        x = int(x)
        if not 0 <= x < (1 << n):
            raise InvalidInputError(f"state index {x} out of range for n={n}")
        return x
    bits = np.asarray(x)
    if bits.ndim != 1 or bits.shape[0] != n:
        raise InvalidInputError(f"state vector must have length {n}, got shape {bits.shape}")
    return from_bits(bits)


def to_bits(x: int, n: int) -> np.ndarray:
    """Bit vector ``(x_1, ..., x_n)`` of state ``x``; site 1 first."""
    return ((int(x) >> np.arange(n)) & 1).astype(np.uint8)


def from_bits(bits: Sequence[int]) -> int:
    bits = np.asarray(bits).astype(np.int64)
    if bits.ndim != 1 or np.any((bits != 0) & (bits != 1)):
        raise InvalidInputError("state vector entries must be 0 or 1")
    return int(np.sum(bits << np.arange(bits.shape[0], dtype=np.int64)))


def bitstring(x: int, n: int) -> str:
    """Site-1-first rendering, e.g. ``bitstring(1, 3) == '100'``."""
    return "".join(str(b) for b in to_bits(x, n))


def parse_bitstring(s: str) -> int:
    s = s.strip()
    if not s or set(s) - {"0", "1"}:
        raise InvalidInputError(f"not a bit string: {s!r}")
    return from_bits([int(c) for c in s])


def _check_site(i: int, lo: int, hi: int) -> None:
    if not isinstance(i, (int, np.integer)) or not lo <= i <= hi:
        raise InvalidInputError(f"site index {i!r} outside [{lo}, {hi}]")


def flip(x: int, i: int, n: int) -> int:
    """f_i: flip site ``i`` (1-based)."""
    _check_site(i, 1, n)
    return int(x) ^ (1 << (i - 1))


def flip_prefix(x: int, i: int, n: int) -> int:
    """f_{<=i}: flip sites 1..i; ``i = 0`` is the identity."""
    _check_site(i, 0, n)
    return int(x) ^ ((1 << i) - 1)


def flip_suffix(x: int, i: int, n: int) -> int:
    """f_{>=i}: flip sites i..n; ``i = n + 1`` is the identity."""
    _check_site(i, 1, n + 1)
    full = (1 << n) - 1
    return int(x) ^ (full & ~((1 << (i - 1)) - 1))


def complement(x: int, n: int) -> int:
    return int(x) ^ ((1 << n) - 1)


def spin_table(n: int) -> np.ndarray:
    """``(2**n, n)`` array of spins in {-1, +1}; row = state index."""
    check_n(n)
    states = np.arange(1 << n, dtype=np.int64)
    bits = (states[:, None] >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


class BinaryModel:
    """Unnormalized log-probability ``-E(x)`` over ``{0,1}^n``.

    Subclasses provide ``energy``/``energies`` and the per-site
    ``delta_logp``; everything else is shared.
    """

    n: int
    variant: str

    # -- energies -----------------------------------------------------
    def energy(self, x) -> float:
        raise NotImplementedError

    def energies(self) -> np.ndarray:
        raise NotImplementedError

    def log_weights(self) -> np.ndarray:
        return -self.energies()

    def probabilities(self) -> np.ndarray:
        """Exactly normalized distribution over all ``2**n`` states."""
        lw = self.log_weights()
        w = np.exp(lw - lw.max())
        return w / w.sum()

    # -- flips --------------------------------------------------------
    def delta_logp(self, x: int, i: int) -> float:
        """``log p(f_i(x)) - log p(x)`` from local information."""
        raise NotImplementedError

    def site_delta_logp(self, i: int) -> np.ndarray:
        """``delta_logp(x, i)`` for every state ``x`` at once."""
        raise NotImplementedError

    def log_prob_ratio(self, x, y) -> float:
        """``log p(y) - log p(x)``; local difference when ``y = f_i(x)``."""
        x = as_index(x, self.n)
        y = as_index(y, self.n)
        if x == y:
            return 0.0
        d = x ^ y
        if d & (d - 1) == 0:
            return self.delta_logp(x, d.bit_length())
        return self.energy(x) - self.energy(y)

    def kernel_data(self):
        """Arrays consumed by the compiled sweep kernels.

        Returns ``(mode, log_weights, nbr, wts, scale, bias)``.  Unused
        members are empty placeholders of the right dtype.
        """
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError


def _local_delta(k: int, x: int, nbr: np.ndarray, wts: np.ndarray, scale: float,
                 bias: np.ndarray) -> float:
    # summation order is shared with the vectorized and compiled paths
    h = 0.0
    for j in range(nbr.shape[1]):
        m = nbr[k, j]
        if m < 0:
            break
        h += wts[k, j] * (1.0 if (x >> m) & 1 else -1.0)
    s = 1.0 if (x >> k) & 1 else -1.0
    return -2.0 * s * (scale * h + bias[k])


def _local_delta_all(k: int, n: int, nbr: np.ndarray, wts: np.ndarray, scale: float,
                     bias: np.ndarray) -> np.ndarray:
    states = np.arange(1 << n, dtype=np.int64)
    h = np.zeros(1 << n)
    for j in range(nbr.shape[1]):
        m = nbr[k, j]
        if m < 0:
            break
        h += wts[k, j] * (2.0 * ((states >> m) & 1) - 1.0)
    s = 2.0 * ((states >> k) & 1) - 1.0
    return -2.0 * s * (scale * h + bias[k])


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class _LocalModel(BinaryModel):
    """Pairwise spin models whose flip cost depends on a local field."""

    _nbr: np.ndarray
    _wts: np.ndarray
    _scale: float
    _bias: np.ndarray

    def delta_logp(self, x: int, i: int) -> float:
        x = as_index(x, self.n)
        _check_site(i, 1, self.n)
        return _local_delta(i - 1, x, self._nbr, self._wts, self._scale, self._bias)

    def site_delta_logp(self, i: int) -> np.ndarray:
        _check_site(i, 1, self.n)
        return _local_delta_all(i - 1, self.n, self._nbr, self._wts, self._scale, self._bias)

    def kernel_data(self):
        return (MODE_LOCAL, np.zeros(0), self._nbr, self._wts, float(self._scale), self._bias)


def _pack_neighbors(n: int, pairs: dict[int, list[tuple[int, float]]]):
    width = max(1, max((len(v) for v in pairs.values()), default=1))
    nbr = np.full((n, width), -1, dtype=np.int64)
    wts = np.zeros((n, width))
    for k in range(n):
        for j, (m, w) in enumerate(sorted(pairs.get(k, []))):
            nbr[k, j] = m
            wts[k, j] = w
    return _readonly(nbr), _readonly(wts)


class IsingLattice(_LocalModel):
    """Ferromagnetic Ising model ``E(s) = -J * sum_{(a,b) in edges} s_a s_b``.

    Parameters
    ----------
    rows, cols : int
        Lattice shape; sites are numbered row-major.
    periodic : bool
        Wrap the lattice into a torus.
    J : float
        Uniform coupling strength.
    """

    variant = "ising"

    def __init__(self, rows: int, cols: int, periodic: bool = True, J: float = 1.0):
        if rows < 1 or cols < 1:
            raise InvalidInputError("lattice dimensions must be positive")
        if not np.isfinite(J):
            raise InvalidInputError("coupling J must be finite")
        self.rows, self.cols = int(rows), int(cols)
        self.periodic = bool(periodic)
        self.J = float(J)
        self.n = check_n(self.rows * self.cols)
        self.edges = lattice_edges(self.rows, self.cols, self.periodic)
        adj: dict[int, list[tuple[int, float]]] = {}
        for a, b in self.edges:
            adj.setdefault(a, []).append((b, 1.0))
            adj.setdefault(b, []).append((a, 1.0))
        self._nbr, self._wts = _pack_neighbors(self.n, adj)
        self._scale = self.J
        self._bias = _readonly(np.zeros(self.n))
        self._edge_arr = np.array(self.edges, dtype=np.int64).reshape(-1, 2)

    def site(self, r: int, c: int) -> int:
        """1-based site number of lattice cell ``(r, c)``."""
        return r * self.cols + c + 1

    def with_coupling(self, J: float) -> "IsingLattice":
        return IsingLattice(self.rows, self.cols, self.periodic, J)

    def energy(self, x) -> float:
        x = as_index(x, self.n)
        s = 2 * to_bits(x, self.n).astype(np.int64) - 1
        total = int(np.sum(s[self._edge_arr[:, 0]] * s[self._edge_arr[:, 1]]))
        return -self.J * total

    def energies(self) -> np.ndarray:
        s = spin_table(self.n).astype(np.int64)
        total = np.sum(s[:, self._edge_arr[:, 0]] * s[:, self._edge_arr[:, 1]], axis=1)
        return -self.J * total.astype(float)

    def to_spec(self) -> dict:
        return {"variant": "ising", "rows": self.rows, "cols": self.cols,
                "periodic": self.periodic, "J": self.J}

    def __repr__(self):
        return (f"IsingLattice(rows={self.rows}, cols={self.cols}, "
                f"periodic={self.periodic}, J={self.J})")


def lattice_edges(rows: int, cols: int, periodic: bool) -> tuple[tuple[int, int], ...]:
    """Nearest-neighbour pairs ``(a, b)`` with ``a < b`` (0-based), each once."""
    out = set()
    for r in range(rows):
        for c in range(cols):
            a = r * cols + c
            for rr, cc in ((r, c + 1), (r + 1, c)):
                if periodic:
                    rr, cc = rr % rows, cc % cols
                elif rr >= rows or cc >= cols:
                    continue
                b = rr * cols + cc
                if a != b:
                    out.add((min(a, b), max(a, b)))
    return tuple(sorted(out))


def ising_energy(model: IsingLattice, x) -> float:
    """``-J * sum over lattice edges of s_i s_j`` for state ``x``."""
    if not isinstance(model, IsingLattice):
        raise InvalidInputError("ising_energy needs an IsingLattice")
    return model.energy(x)


class TableModel(BinaryModel):
    """Explicit table of ``2**n`` unnormalized log-probabilities."""

    variant = "table"

    def __init__(self, log_weights):
        lw = np.array(log_weights, dtype=float).ravel()
        size = lw.shape[0]
        if size < 2 or size & (size - 1):
            raise InvalidInputError(f"table length must be 2**n with n >= 1, got {size}")
        if not np.all(np.isfinite(lw)):
            raise InvalidInputError("table model needs full support: all log-weights finite")
        self.n = check_n(size.bit_length() - 1)
        self._lw = _readonly(lw)

    @classmethod
    def from_probabilities(cls, p) -> "TableModel":
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0):
            raise InvalidInputError("probabilities must be strictly positive")
        return cls(np.log(p))

    @classmethod
    def uniform(cls, n: int) -> "TableModel":
        return cls(np.zeros(1 << check_n(n)))

    def energy(self, x) -> float:
        return -float(self._lw[as_index(x, self.n)])

    def energies(self) -> np.ndarray:
        return -self._lw

    def log_weights(self) -> np.ndarray:
        return self._lw.copy()

    def log_prob_ratio(self, x, y) -> float:
        x = as_index(x, self.n)
        y = as_index(y, self.n)
        return float(self._lw[y] - self._lw[x])

    def delta_logp(self, x: int, i: int) -> float:
        x = as_index(x, self.n)
        _check_site(i, 1, self.n)
        return float(self._lw[x ^ (1 << (i - 1))] - self._lw[x])

    def site_delta_logp(self, i: int) -> np.ndarray:
        _check_site(i, 1, self.n)
        states = np.arange(1 << self.n)
        return self._lw[states ^ (1 << (i - 1))] - self._lw

    def kernel_data(self):
        return (MODE_TABLE, np.ascontiguousarray(self._lw), np.full((self.n, 1), -1, dtype=np.int64),
                np.zeros((self.n, 1)), 1.0, np.zeros(self.n))

    def to_spec(self) -> dict:
        return {"variant": "table", "log_weights": self._lw.tolist()}

    def __repr__(self):
        return f"TableModel(n={self.n})"


class QuadraticModel(_LocalModel):
    """Spin model ``E(s) = -sum_{i<j} W_ij s_i s_j - sum_i b_i s_i``.

    ``W`` must be symmetric with zero diagonal; ``b`` defaults to zero.
    """

    variant = "quadratic"

    def __init__(self, W, b=None):
        W = np.array(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise InvalidInputError("W must be a square matrix")
        n = check_n(W.shape[0])
        if not np.all(np.isfinite(W)):
            raise InvalidInputError("W must be finite")
        if not np.array_equal(W, W.T):
            raise InvalidInputError("W must be symmetric")
        if np.any(np.diag(W) != 0):
            raise InvalidInputError("W must have a zero diagonal")
        b = np.zeros(n) if b is None else np.array(b, dtype=float).ravel()
        if b.shape != (n,) or not np.all(np.isfinite(b)):
            raise InvalidInputError(f"bias must be a finite vector of length {n}")
        self.n = n
        self.W = _readonly(W)
        self.b = _readonly(b)
        adj = {k: [(m, W[k, m]) for m in range(n) if m != k and W[k, m] != 0.0] for k in range(n)}
        self._nbr, self._wts = _pack_neighbors(n, adj)
        self._scale = 1.0
        self._bias = self.b

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 1.0,
               bias_scale: float = 0.0) -> "QuadraticModel":
        """Weights drawn from a normal distribution (almost surely tie-free)."""
        A = rng.normal(0.0, scale, size=(n, n))
        W = np.triu(A, 1)
        W = W + W.T
        b = rng.normal(0.0, bias_scale, size=n) if bias_scale > 0 else None
        return cls(W, b)

    def energy(self, x) -> float:
        x = as_index(x, self.n)
        s = 2.0 * to_bits(x, self.n) - 1.0
        return float(-0.5 * s @ self.W @ s - self.b @ s)

    def energies(self) -> np.ndarray:
        S = spin_table(self.n).astype(float)
        return -0.5 * np.einsum("si,ij,sj->s", S, self.W, S) - S @ self.b

    def to_spec(self) -> dict:
        return {"variant": "quadratic", "W": self.W.tolist(), "b": self.b.tolist()}

    def __repr__(self):
        return f"QuadraticModel(n={self.n})"


def log_prob_ratio(model: BinaryModel, x, y) -> float:
    return model.log_prob_ratio(x, y)


@dataclass(frozen=True)
class TieReport:
    """Pairs ``(x, i)`` with ``|log p(f_i(x)) - log p(x)| <= tol``."""

    tie_free: bool
    violations: list = field(default_factory=list)
    tol: float = DEFAULT_TIE_TOL

    def to_json(self, limit: int | None = 20) -> dict:
        v = self.violations if limit is None else self.violations[:limit]
        return {"tie_free": self.tie_free, "tol": self.tol,
                "violation_count": len(self.violations),
                "violations": [{"state": x, "site": i} for x, i in v]}


def check_tie_condition(model: BinaryModel, tol: float = DEFAULT_TIE_TOL) -> TieReport:
    """Enumerate every ``(x, i)`` and collect probability ties under ``tol``."""
    if tol < 0:
        raise InvalidInputError("tol must be non-negative")
    violations = []
    for i in range(1, model.n + 1):
        d = model.site_delta_logp(i)
        for x in np.flatnonzero(np.abs(d) <= tol):
            violations.append((int(x), i))
    violations.sort()
    return TieReport(tie_free=not violations, violations=violations, tol=tol)


def model_from_spec(spec) -> BinaryModel:
    """Build a model from the JSON model description (dict, JSON text or path)."""
    if isinstance(spec, str):
        text = spec.strip()
        if not text.startswith("{"):
            try:
                with open(text) as fh:
                    text = fh.read()
            except OSError as exc:
                raise InvalidInputError(f"cannot read model file {spec!r}: {exc}") from exc
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"model spec is not valid JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise InvalidInputError("model spec must be a JSON object")
    variant = spec.get("variant")
    try:
        if variant == "ising":
            return IsingLattice(int(spec["rows"]), int(spec["cols"]),
                                bool(spec.get("periodic", True)), float(spec.get("J", 1.0)))
        if variant == "table":
            return TableModel(spec["log_weights"])
        if variant == "quadratic":
            return QuadraticModel(spec["W"], spec.get("b"))
    except KeyError as exc:
        raise InvalidInputError(f"model spec missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"bad model spec: {exc}") from exc
    raise InvalidInputError(f"unknown model variant {variant!r}")


def require_dense(n: int, cap: int) -> None:
    if n > cap:
        raise ResourceCapError(f"n={n} exceeds the dense cap n <= {cap}")
