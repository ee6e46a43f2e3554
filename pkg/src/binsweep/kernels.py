"""Acceptance functions, site operators and fixed-order sweep kernels."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import jit
from .errors import InvalidInputError
from .model import DEFAULT_TIE_TOL, BinaryModel, IsingLattice, MODE_TABLE, as_index

STANDARD = 0
MODIFIED = 1
GIBBS = 2

_RULE_NAMES = {STANDARD: "standard", MODIFIED: "modified", GIBBS: "gibbs"}
_RULE_CODES = {v: k for k, v in _RULE_NAMES.items()}


@dataclass(frozen=True)
class AcceptanceRule:
    """Single-site acceptance function.

    ``tol`` only matters for the modified rule, where ``|dlogp| <= tol``
    counts as a tie and is accepted with probability 1/2.
    """

    code: int
    tol: float = DEFAULT_TIE_TOL

    def __post_init__(self):
        if self.code not in _RULE_NAMES:
            raise InvalidInputError(f"unknown rule code {self.code}")
        if not self.tol >= 0:
            raise InvalidInputError("tie tolerance must be non-negative")

    @property
    def name(self) -> str:
        return _RULE_NAMES[self.code]

    @classmethod
    def standard(cls) -> "AcceptanceRule":
        return cls(STANDARD)

    @classmethod
    def modified(cls, tol: float = DEFAULT_TIE_TOL) -> "AcceptanceRule":
        return cls(MODIFIED, tol)

    @classmethod
    def gibbs(cls) -> "AcceptanceRule":
        return cls(GIBBS)

    @classmethod
    def parse(cls, name: str, tol: float = DEFAULT_TIE_TOL) -> "AcceptanceRule":
        try:
            return cls(_RULE_CODES[name.strip().lower()], tol)
        except KeyError:
            raise InvalidInputError(f"unknown rule {name!r}; expected one of "
                                    f"{sorted(_RULE_CODES)}") from None


ALL_RULES = ("standard", "modified", "gibbs")


@jit
def _accept(rule, d, tol):
    if rule == 0:
        if d >= 0.0:
            return 1.0
        return math.exp(d)
    if rule == 1:
        if d > tol:
            return 1.0
        if d < -tol:
            return math.exp(d)
        return 0.5
    if d >= 0.0:
        return 1.0 / (1.0 + math.exp(-d))
    e = math.exp(d)
    return e / (1.0 + e)


def accept_prob(rule: AcceptanceRule, dlogp):
    """Probability of accepting a proposed flip.

    Parameters
    ----------
    rule : AcceptanceRule
    dlogp : float or array
        ``log p(proposal) - log p(current)``.

    Returns
    -------
    float or ndarray
        Standard: ``min(1, exp(dlogp))``.  Modified: same, except ``1/2``
        when ``|dlogp| <= rule.tol``.  Gibbs: ``1 / (1 + exp(-dlogp))``.
    """
    d = np.asarray(dlogp, dtype=float)
    if not np.all(np.isfinite(d)):
        raise InvalidInputError("dlogp must be finite")
    if d.ndim == 0:
        return _accept(rule.code, float(d), rule.tol)
    neg = np.exp(np.minimum(d, 0.0))
    if rule.code == STANDARD:
        return np.where(d >= 0.0, 1.0, neg)
    if rule.code == MODIFIED:
        return np.where(d > rule.tol, 1.0, np.where(d < -rule.tol, neg, 0.5))
    return np.where(d >= 0.0, 1.0 / (1.0 + np.exp(-np.maximum(d, 0.0))), neg / (1.0 + neg))


@dataclass(frozen=True)
class SweepOrder:
    """Permutation of the 1-based sites, visited left to right each sweep.

    ``phases`` holds cumulative site counts at which a display phase ends
    (two phases for the chessboard order, one otherwise).
    """

    sites: tuple
    name: str = "custom"
    phases: tuple = ()

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        n = len(sites)
        if n == 0 or sorted(sites) != list(range(1, n + 1)):
            raise InvalidInputError(f"order must be a permutation of 1..{n}: {sites}")
        object.__setattr__(self, "sites", sites)
        if not self.phases:
            object.__setattr__(self, "phases", (n,))

    @property
    def n(self) -> int:
        return len(self.sites)

    def zero_based(self) -> np.ndarray:
        return np.array(self.sites, dtype=np.int64) - 1

    @classmethod
    def linear(cls, n: int) -> "SweepOrder":
        return cls(tuple(range(1, n + 1)), "linear")

    @classmethod
    def cyclic_shift(cls, n: int, shift: int) -> "SweepOrder":
        sites = tuple((k + shift) % n + 1 for k in range(n))
        return cls(sites, f"shift{shift % n}")

    @classmethod
    def chessboard(cls, rows: int, cols: int) -> "SweepOrder":
        """Color ``(r + c) % 2 == 0`` first, each color in row-major order."""
        cells = [(r, c) for r in range(rows) for c in range(cols)]
        first = [r * cols + c + 1 for r, c in cells if (r + c) % 2 == 0]
        second = [r * cols + c + 1 for r, c in cells if (r + c) % 2 == 1]
        return cls(tuple(first + second), "chessboard", (len(first), rows * cols))

    @classmethod
    def custom(cls, sites) -> "SweepOrder":
        return cls(tuple(sites), "custom")

    @classmethod
    def parse(cls, text: str, model: BinaryModel) -> "SweepOrder":
        """``linear``, ``chessboard`` (lattice models) or ``custom:3,1,2``."""
        text = text.strip()
        if text == "linear":
            return cls.linear(model.n)
        if text == "chessboard":
            if not isinstance(model, IsingLattice):
                raise InvalidInputError("chessboard order needs a lattice model")
            return cls.chessboard(model.rows, model.cols)
        if text.startswith("custom:"):
            try:
                sites = [int(s) for s in text[7:].split(",") if s.strip()]
            except ValueError:
                raise InvalidInputError(f"bad custom order {text!r}") from None
            order = cls.custom(sites)
            if order.n != model.n:
                raise InvalidInputError(f"custom order has {order.n} sites, model has {model.n}")
            return order
        raise InvalidInputError(f"unknown order {text!r}")


@dataclass(frozen=True)
class SweepKernel:
    """One full update step: the site operators applied in ``order``."""

    model: BinaryModel
    rule: AcceptanceRule
    order: SweepOrder

    def __post_init__(self):
        if self.order.n != self.model.n:
            raise InvalidInputError(
                f"order covers {self.order.n} sites but the model has {self.model.n}")

    @classmethod
    def build(cls, model: BinaryModel, rule="modified", order="linear",
              tol: float = DEFAULT_TIE_TOL) -> "SweepKernel":
        if isinstance(rule, str):
            rule = AcceptanceRule.parse(rule, tol)
        if isinstance(order, str):
            order = SweepOrder.parse(order, model)
        return cls(model, rule, order)

    def site_flip_prob(self, x, i: int) -> float:
        return site_flip_prob(self, x, i)

    def sweep_once(self, x, rng: np.random.Generator) -> int:
        return sweep_once(self, x, rng)


def site_flip_prob(kernel: SweepKernel, x, i: int) -> float:
    """``T_i(x -> f_i(x))``; staying has the complementary probability."""
    return float(accept_prob(kernel.rule, kernel.model.delta_logp(x, i)))


@jit
def _dlogp(x, k, mode, lw, nbr, wts, scale, bias):
    if mode == 0:
        return lw[x ^ (1 << k)] - lw[x]
    h = 0.0
    for j in range(nbr.shape[1]):
        m = nbr[k, j]
        if m < 0:
            break
        if (x >> m) & 1:
            h += wts[k, j]
        else:
            h -= wts[k, j]
    s = 1.0 if (x >> k) & 1 else -1.0
    return -2.0 * s * (scale * h + bias[k])


@jit
def _run_sweeps(x, order, rule, tol, mode, lw, nbr, wts, scale, bias, u, out, sub):
    """Apply ``u.shape[0]`` sweeps from state ``x``; one uniform per site visit."""
    record = sub.shape[0] > 0
    for t in range(u.shape[0]):
        for j in range(order.shape[0]):
            k = order[j]
            d = _dlogp(x, k, mode, lw, nbr, wts, scale, bias)
            if u[t, j] < _accept(rule, d, tol):
                x ^= 1 << k
            if record:
                sub[t, j] = x
        out[t] = x
    return x


def kernel_args(kernel: SweepKernel):
    mode, lw, nbr, wts, scale, bias = kernel.model.kernel_data()
    if mode != MODE_TABLE:
        lw = np.zeros(1)
    return (kernel.order.zero_based(), kernel.rule.code, float(kernel.rule.tol), mode,
            lw, nbr, wts, float(scale), bias)


def run_sweeps(kernel: SweepKernel, x: int, uniforms: np.ndarray, substeps: bool = False,
               impl=None):
    """Run ``len(uniforms)`` sweeps driven by the given ``(sweeps, n)`` uniforms.

    Returns ``(states, sub)`` where ``states[t]`` is the state after sweep
    ``t + 1`` and ``sub[t, j]`` the state after the ``j``-th site visit of
    that sweep (empty unless ``substeps``).
    """
    fn = impl or _run_sweeps
    u = np.ascontiguousarray(uniforms, dtype=np.float64)
    sweeps = u.shape[0]
    out = np.empty(sweeps, dtype=np.int64)
    sub = np.empty((sweeps if substeps else 0, kernel.model.n), dtype=np.int64)
    fn(np.int64(x), *kernel_args(kernel), u, out, sub)
    return out, sub


def sweep_once(kernel: SweepKernel, x, rng: np.random.Generator) -> int:
    """One full sweep from ``x``, consuming exactly ``n`` uniforms from ``rng``."""
    x = as_index(x, kernel.model.n)
    u = rng.random((1, kernel.model.n))
    out, _ = run_sweeps(kernel, x, u)
    return int(out[0])
