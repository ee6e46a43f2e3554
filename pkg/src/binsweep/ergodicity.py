"""Irreducibility and aperiodicity of sweep kernels by explicit graph analysis."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import jit
from .errors import NumericalError
from .kernels import SweepKernel
from .matrix import TransitionMatrix, sweep_matrix

# sweep-matrix zeros are exact structural zeros; genuine multi-site moves can
# carry probabilities far below 1e-14 at strong coupling
SUPPORT_THRESHOLD = 0.0
CLOSED_MASS_TOL = 1e-12


@dataclass(frozen=True)
class SupportGraph:
    """CSR adjacency of ``x -> y`` whenever ``T(x -> y) > threshold``."""

    size: int
    indptr: np.ndarray
    indices: np.ndarray
    threshold: float

    def successors(self, x: int) -> np.ndarray:
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)


@dataclass
class ErgodicityReport:
    irreducible: bool
    aperiodic: bool
    period: int
    scc_count: int
    closed_set_witness: list | None = None
    reference_state: int = 0
    reference_self_loop: bool = False
    ties: dict | None = field(default=None, repr=False)

    @property
    def ergodic(self) -> bool:
        return self.irreducible and self.aperiodic

    def to_json(self) -> dict:
        out = {"ergodic": self.ergodic, "irreducible": self.irreducible,
               "aperiodic": self.aperiodic, "period": self.period,
               "scc_count": self.scc_count, "closed_set_witness": self.closed_set_witness,
               "reference_state": self.reference_state,
               "reference_self_loop": self.reference_self_loop}
        if self.ties is not None:
            out["ties"] = self.ties
        return out


def _entries(T) -> np.ndarray:
    return T.entries if isinstance(T, TransitionMatrix) else np.asarray(T, dtype=float)


def support_graph(T, threshold: float = SUPPORT_THRESHOLD) -> SupportGraph:
    E = _entries(T)
    rows, cols = np.nonzero(E > threshold)
    N = E.shape[0]
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=N), out=indptr[1:])
    return SupportGraph(N, indptr, cols.astype(np.int64), threshold)


@jit
def _tarjan(indptr, indices, N):
    # iterative Tarjan; components come out sinks first
    index = np.full(N, -1, dtype=np.int64)
    low = np.zeros(N, dtype=np.int64)
    onstack = np.zeros(N, dtype=np.bool_)
    stack = np.empty(N, dtype=np.int64)
    call_v = np.empty(N, dtype=np.int64)
    call_e = np.empty(N, dtype=np.int64)
    comp = np.full(N, -1, dtype=np.int64)
    sp = 0
    counter = 0
    ncomp = 0
    for root in range(N):
        if index[root] != -1:
            continue
        index[root] = counter
        low[root] = counter
        counter += 1
        stack[sp] = root
        sp += 1
        onstack[root] = True
        call_v[0] = root
        call_e[0] = indptr[root]
        csp = 1
        while csp > 0:
            v = call_v[csp - 1]
            e = call_e[csp - 1]
            if e < indptr[v + 1]:
                call_e[csp - 1] = e + 1
                w = indices[e]
                if index[w] == -1:
                    index[w] = counter
                    low[w] = counter
                    counter += 1
                    stack[sp] = w
                    sp += 1
                    onstack[w] = True
                    call_v[csp] = w
                    call_e[csp] = indptr[w]
                    csp += 1
                elif onstack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                if low[v] == index[v]:
                    while True:
                        sp -= 1
                        w = stack[sp]
                        onstack[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
                csp -= 1
                if csp > 0:
                    u = call_v[csp - 1]
                    if low[v] < low[u]:
                        low[u] = low[v]
    return comp, ncomp


@jit
def _period(indptr, indices, comp, ref):
    # gcd of level[u] + 1 - level[v] over edges inside ref's component
    N = comp.shape[0]
    c = comp[ref]
    level = np.full(N, -1, dtype=np.int64)
    queue = np.empty(N, dtype=np.int64)
    level[ref] = 0
    queue[0] = ref
    head = 0
    tail = 1
    g = 0
    while head < tail:
        u = queue[head]
        head += 1
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if comp[v] != c:
                continue
            if level[v] == -1:
                level[v] = level[u] + 1
                queue[tail] = v
                tail += 1
            else:
                a = level[u] + 1 - level[v]
                if a < 0:
                    a = -a
                b = g
                while b:
                    a, b = b, a % b
                g = a
    return g


def strongly_connected_components(G: SupportGraph) -> tuple[np.ndarray, int]:
    """Component label per state (sink components get the low labels)."""
    comp, ncomp = _tarjan(G.indptr, G.indices, G.size)
    return np.asarray(comp), int(ncomp)


def _sink_components(G: SupportGraph, comp: np.ndarray, ncomp: int) -> np.ndarray:
    src = np.repeat(np.arange(G.size), G.out_degree())
    leaves = comp[src] != comp[G.indices]
    has_exit = np.zeros(ncomp, dtype=bool)
    has_exit[comp[src[leaves]]] = True
    return np.flatnonzero(~has_exit)


def _validate_closed(E: np.ndarray, members: np.ndarray) -> None:
    mass = E[np.ix_(members, members)].sum(axis=1)
    worst = float(np.max(np.abs(mass - 1.0)))
    if worst > CLOSED_MASS_TOL:
        raise NumericalError(f"candidate closed set leaks mass {worst:.3e}; "
                             "lower the support threshold")


def find_closed_set(T, threshold: float = SUPPORT_THRESHOLD) -> list | None:
    """Smallest proper closed set (a sink component), or None if irreducible.

    Ties between equally small sink components go to the one holding the
    lowest state index.
    """
    E = _entries(T)
    G = support_graph(E, threshold)
    comp, ncomp = strongly_connected_components(G)
    return _closed_from_components(E, G, comp, ncomp)


def _closed_from_components(E, G, comp, ncomp):
    if ncomp == 1:
        return None
    sinks = _sink_components(G, comp, ncomp)
    best = None
    for c in sinks:
        members = np.flatnonzero(comp == c)
        key = (members.size, int(members[0]))
        if best is None or key < best[0]:
            best = (key, members)
    members = best[1]
    _validate_closed(E, members)
    return [int(m) for m in members]


def is_aperiodic(T, reference: int | None = None,
                 threshold: float = SUPPORT_THRESHOLD) -> tuple[bool, int]:
    """Period of the component containing ``reference``.

    Without a reference the lowest state of the first sink component is
    used.  A component without any internal cycle reports period 0.
    """
    E = _entries(T)
    G = support_graph(E, threshold)
    comp, _ = strongly_connected_components(G)
    if reference is None:
        reference = int(np.flatnonzero(comp == 0)[0])
    period = int(_period(G.indptr, G.indices, comp, int(reference)))
    return period == 1, period


def analyze(T, reference: int = 0, threshold: float = SUPPORT_THRESHOLD) -> ErgodicityReport:
    """SCC, closed-set and period analysis of a transition matrix."""
    E = _entries(T)
    G = support_graph(E, threshold)
    comp, ncomp = strongly_connected_components(G)
    witness = _closed_from_components(E, G, comp, ncomp)
    period = int(_period(G.indptr, G.indices, comp, int(reference)))
    return ErgodicityReport(
        irreducible=ncomp == 1,
        aperiodic=period == 1,
        period=period,
        scc_count=ncomp,
        closed_set_witness=witness,
        reference_state=int(reference),
        reference_self_loop=bool(E[reference, reference] > threshold),
    )


def check_ergodic(kernel: SweepKernel, threshold: float = SUPPORT_THRESHOLD) -> ErgodicityReport:
    """Build the sweep matrix and analyze it.

    The reference state for the period is the most probable state (lowest
    index on ties); for the modified rule it always carries a self-loop.
    """
    T = sweep_matrix(kernel)
    ref = int(np.argmax(kernel.model.log_weights()))
    return analyze(T, ref, threshold)
