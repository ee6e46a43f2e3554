"""Flip-inequality graphs G(S) on the state space and their bookkeeping.

For a subset ``S`` every pair ``(x, i)`` with ``x in S`` and ``f_i(x)``
outside ``S`` generates two directed edges, the prefix edge
``(f_{<=i-1}(x), f_{<=i}(x))`` and the suffix edge
``(f_{>=i}(x), f_{>=i+1}(x))``.  Different generators can produce the same
ordered pair.  :class:`ProofGraph` keeps the generator multiplicities next
to the plain edge set because degree balance only holds when edges are
counted with multiplicity.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._accel import USE_NUMBA, jit
from .errors import InvalidInputError, ResourceCapError
from .model import check_n, complement, flip, flip_prefix, flip_suffix

BATCH_CAP = 6
EXHAUSTIVE_CAP = 4


@dataclass(frozen=True)
class ProofGraph:
    n: int
    subset: frozenset
    multiplicity: Counter

    @property
    def edges(self) -> frozenset:
        return frozenset(self.multiplicity)

    @property
    def duplicate_count(self) -> int:
        """Generated edges that coincide with an earlier generator's edge."""
        return sum(self.multiplicity.values()) - len(self.multiplicity)

    def degrees(self, multiset: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """``(deg_out, deg_in)`` per state."""
        N = 1 << self.n
        out = np.zeros(N, dtype=np.int64)
        inn = np.zeros(N, dtype=np.int64)
        for (u, v), c in self.multiplicity.items():
            w = c if multiset else 1
            out[u] += w
            inn[v] += w
        return out, inn

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {}
        for u, v in sorted(self.multiplicity):
            adj.setdefault(u, []).append(v)
        return adj


def _check_subset(S, n: int) -> frozenset:
    n = check_n(n)
    S = frozenset(int(x) for x in S)
    N = 1 << n
    bad = [x for x in S if not 0 <= x < N]
    if bad:
        raise InvalidInputError(f"states {sorted(bad)[:5]} are outside the state space of n={n}")
    return S


def generated_edges(S, n: int):
    """Yield ``(x, i, prefix_edge, suffix_edge)`` for every generator."""
    for x in sorted(S):
        for i in range(1, n + 1):
            if flip(x, i, n) not in S:
                yield (x, i,
                       (flip_prefix(x, i - 1, n), flip_prefix(x, i, n)),
                       (flip_suffix(x, i, n), flip_suffix(x, i + 1, n)))


def edge_set(S, n: int) -> ProofGraph:
    """Build G(S) for a subset of ``{0, ..., 2**n - 1}``."""
    S = _check_subset(S, n)
    mult: Counter = Counter()
    for _, _, pre, suf in generated_edges(S, n):
        mult[pre] += 1
        mult[suf] += 1
    return ProofGraph(n, S, mult)


def degree_balance(G: ProofGraph, multiset: bool = True) -> bool:
    """True iff in-degree equals out-degree at every state.

    ``multiset=False`` counts each distinct ordered pair once.
    """
    out, inn = G.degrees(multiset)
    return bool(np.array_equal(out, inn))


def find_cycle(G: ProofGraph) -> list[int] | None:
    """First directed cycle found by colour-marking DFS in ascending order.

    Returned as the vertex sequence ``[v0, v1, ..., vk]`` with an edge
    ``vk -> v0`` closing it.
    """
    adj = G.adjacency()
    WHITE, GREY, BLACK = 0, 1, 2
    colour: dict[int, int] = {}
    for root in sorted(adj):
        if colour.get(root, WHITE) != WHITE:
            continue
        path = [root]
        iters = [iter(adj.get(root, ()))]
        colour[root] = GREY
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                colour[path.pop()] = BLACK
                iters.pop()
                continue
            c = colour.get(nxt, WHITE)
            if c == GREY:
                return path[path.index(nxt):]
            if c == WHITE:
                colour[nxt] = GREY
                path.append(nxt)
                iters.append(iter(adj.get(nxt, ())))
    return None


def singleton_cycle(x: int, n: int) -> list[int]:
    """The 2n-cycle of G({x}): prefix images of x, then suffix images."""
    pre = [flip_prefix(x, i, n) for i in range(n)]
    suf = [flip_suffix(x, i, n) for i in range(1, n + 1)]
    return pre + suf


@dataclass(frozen=True)
class InductionReport:
    case: int
    sites: tuple
    complement_in_subset: bool
    agrees: bool
    agrees_as_sets: bool
    reverse_pairing: bool
    removals_contained: bool
    complement_subsumed: bool | None
    duplicates: int

    def to_json(self) -> dict:
        return dict(self.__dict__, sites=list(self.sites))


def _edges_of(x: int, i: int, n: int):
    return ((flip_prefix(x, i - 1, n), flip_prefix(x, i, n)),
            (flip_suffix(x, i, n), flip_suffix(x, i + 1, n)))


def verify_induction_step(S, x_new: int, n: int) -> InductionReport:
    """Compare E(S + {x'}) built directly and built from E(S) and E({x'}).

    ``I`` is the set of sites with ``f_i(x') in S``.  With ``I`` empty the
    new graph is ``E(S) + E({x'})``.  Otherwise the edges in ``R_i^S``
    (generated by ``f_i(x')`` at site ``i``) and ``R_i^{x'}`` are removed
    from that sum; every removed edge of ``E({x'})`` should have its exact
    reverse among the removed edges of ``E(S)``.

    All comparisons use generator multiplicities.  ``agrees_as_sets``
    repeats the check on plain edge sets, and ``complement_subsumed``
    records whether the edges of ``E({x'})`` already occur in ``E(S)``
    when the complement of ``x'`` lies in ``S``.
    """
    S = _check_subset(S, n)
    x_new = int(x_new)
    if x_new in S or not 0 <= x_new < (1 << n):
        raise InvalidInputError("x' must be a state outside S")
    direct = edge_set(S | {x_new}, n)
    base = edge_set(S, n)
    single = edge_set({x_new}, n)
    sites = tuple(i for i in range(1, n + 1) if flip(x_new, i, n) in S)
    comp_in = complement(x_new, n) in S

    built = base.multiplicity + single.multiplicity
    removed_s: Counter = Counter()
    removed_x: Counter = Counter()
    for i in sites:
        removed_s.update(_edges_of(flip(x_new, i, n), i, n))
        removed_x.update(_edges_of(x_new, i, n))
    contained = (not removed_s - base.multiplicity) and (not removed_x - single.multiplicity)
    built = built - removed_s - removed_x
    reversed_x = Counter({(v, u): c for (u, v), c in removed_x.items()})

    if sites:
        case = 2
        set_built = (base.edges | single.edges) - set(removed_s) - set(removed_x)
        subsumed = None
    else:
        case = 1
        set_built = base.edges | single.edges
        subsumed = single.edges <= base.edges if comp_in else None
    return InductionReport(
        case=case,
        sites=sites,
        complement_in_subset=comp_in,
        agrees=built == direct.multiplicity,
        agrees_as_sets=set_built == direct.edges,
        reverse_pairing=reversed_x == removed_s,
        removals_contained=bool(contained),
        complement_subsumed=subsumed,
        duplicates=direct.duplicate_count,
    )


# -- batched subset checks --------------------------------------------------

def _generator_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    # edge id of (u, u ^ bit_k) is u * n + k
    N = 1 << n
    x = np.arange(N)[:, None]
    k = np.arange(n)[None, :]
    pre_src = x ^ ((1 << k) - 1)
    suf_src = x ^ ((N - 1) & ~((1 << k) - 1))
    return (pre_src * n + k).astype(np.int64), (suf_src * n + k).astype(np.int64)


def masks_to_members(masks, n: int) -> np.ndarray:
    """``(len(masks), 2**n)`` boolean membership matrix."""
    N = 1 << n
    masks = np.asarray(masks, dtype=np.uint64)
    return ((masks[:, None] >> np.arange(N, dtype=np.uint64)) & np.uint64(1)).astype(bool)


@jit
def _check_members_loop(members, n, gen_pre, gen_suf, bal, bal_set, cyc):
    N = members.shape[1]
    E = N * n
    cnt = np.zeros(E, dtype=np.int64)
    dout = np.zeros(N, dtype=np.int64)
    din = np.zeros(N, dtype=np.int64)
    sin = np.zeros(N, dtype=np.int64)
    sout = np.zeros(N, dtype=np.int64)
    queue = np.empty(N, dtype=np.int64)
    for t in range(members.shape[0]):
        cnt[:] = 0
        dout[:] = 0
        din[:] = 0
        sout[:] = 0
        sin[:] = 0
        for x in range(N):
            if members[t, x]:
                for k in range(n):
                    if not members[t, x ^ (1 << k)]:
                        cnt[gen_pre[x, k]] += 1
                        cnt[gen_suf[x, k]] += 1
        present = 0
        for e in range(E):
            c = cnt[e]
            if c > 0:
                u = e // n
                v = u ^ (1 << (e % n))
                dout[u] += c
                din[v] += c
                sout[u] += 1
                sin[v] += 1
                present += 1
        b = True
        bs = True
        for v in range(N):
            if dout[v] != din[v]:
                b = False
            if sout[v] != sin[v]:
                bs = False
        bal[t] = b
        bal_set[t] = bs
        # Kahn peeling on the distinct edges
        tail = 0
        for v in range(N):
            if sin[v] == 0:
                queue[tail] = v
                tail += 1
        head = 0
        removed = 0
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(n):
                if cnt[u * n + k] > 0:
                    removed += 1
                    v = u ^ (1 << k)
                    sin[v] -= 1
                    if sin[v] == 0:
                        queue[tail] = v
                        tail += 1
        cyc[t] = removed < present


def _check_members_numpy(members, n, gen_pre, gen_suf):
    m, N = members.shape
    bits = 1 << np.arange(n)
    nbr = np.arange(N)[:, None] ^ bits[None, :]
    active = members[:, :, None] & ~members[:, nbr]
    flat = active.reshape(m, N * n).astype(np.int64)
    cnt = np.zeros((m, N * n), dtype=np.int64)
    cnt[:, gen_pre.ravel()] = flat
    cnt[:, gen_suf.ravel()] += flat
    cnt = cnt.reshape(m, N, n)
    cols = np.arange(n)[None, :]

    def in_deg(c):
        return c[:, nbr, cols].sum(axis=2)

    bal = np.all(cnt.sum(axis=2) == in_deg(cnt), axis=1)
    present = cnt > 0
    bal_set = np.all(present.sum(axis=2) == in_deg(present), axis=1)
    while True:
        sources = in_deg(present) == 0
        peeled = present & ~sources[:, :, None]
        if np.array_equal(peeled, present):
            break
        present = peeled
    cyc = present.any(axis=(1, 2))
    return bal, bal_set, cyc


def check_subsets(masks, n: int, use_numba: bool | None = None, chunk: int = 8192):
    """Degree balance (multiset and set) and cycle presence for many subsets.

    ``masks`` are integer bitmasks over state indices.  Returns three
    boolean arrays ``(balanced, balanced_as_set, cyclic)``.
    """
    n = check_n(n)
    if n > BATCH_CAP:
        raise ResourceCapError(f"batched subset checks support n <= {BATCH_CAP}")
    use_numba = USE_NUMBA if use_numba is None else use_numba
    gen_pre, gen_suf = _generator_tables(n)
    masks = np.asarray(masks, dtype=np.uint64)
    out = [np.empty(masks.size, dtype=bool) for _ in range(3)]
    for lo in range(0, masks.size, chunk):
        members = masks_to_members(masks[lo:lo + chunk], n)
        if use_numba:
            parts = [np.empty(members.shape[0], dtype=bool) for _ in range(3)]
            _check_members_loop(members, n, gen_pre, gen_suf, *parts)
        else:
            parts = _check_members_numpy(members, n, gen_pre, gen_suf)
        for dst, src in zip(out, parts):
            dst[lo:lo + chunk] = src
    return tuple(out)


def exhaustive_masks(n: int) -> np.ndarray:
    """Every proper nonempty subset of the state space as a bitmask."""
    n = check_n(n)
    if n > EXHAUSTIVE_CAP:
        raise ResourceCapError(f"exhaustive subset enumeration supports n <= {EXHAUSTIVE_CAP}")
    N = 1 << n
    return np.arange(1, (1 << N) - 1, dtype=np.uint64)


def mask_to_subset(mask: int, n: int) -> list[int]:
    return [x for x in range(1 << n) if (int(mask) >> x) & 1]


def subset_to_mask(S) -> int:
    m = 0
    for x in S:
        m |= 1 << int(x)
    return m


def _mask_cap(n: int) -> int:
    n = check_n(n)
    if n > BATCH_CAP:
        raise ResourceCapError(f"subset bitmasks support n <= {BATCH_CAP}")
    return n


def adversarial_masks(n: int) -> np.ndarray:
    """Singletons, Hamming balls and coordinate half-spaces ("stripes")."""
    n = _mask_cap(n)
    N = 1 << n
    states = np.arange(N)
    weight = np.array([bin(v).count("1") for v in range(N)])
    full = (1 << N) - 1
    masks = set()
    for x in range(N):
        masks.add(1 << x)
        dist = weight[states ^ x]
        for r in range(1, n):
            masks.add(subset_to_mask(states[dist <= r]))
    for k in range(n):
        half = states[(states >> k) & 1 == 1]
        masks.add(subset_to_mask(half))
        masks.add(full ^ subset_to_mask(half))
        for k2 in range(k + 1, n):
            quarter = states[((states >> k) & 1 == 1) & ((states >> k2) & 1 == 1)]
            masks.add(subset_to_mask(quarter))
    masks.discard(0)
    masks.discard(full)
    return np.array(sorted(masks), dtype=np.uint64)


def random_masks(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random proper nonempty subsets (rejection of the two trivial ones)."""
    n = _mask_cap(n)
    N = 1 << n
    out = []
    while len(out) < count:
        bits = rng.integers(0, 2, size=N)
        m = subset_to_mask(np.flatnonzero(bits))
        if 0 < m < (1 << N) - 1:
            out.append(m)
    return np.array(out, dtype=np.uint64)

