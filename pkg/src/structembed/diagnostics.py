"""Structure diagnostics for P-models.

``sigma(M, i1, i2, n1, n2)`` is the inner product of column ``n1`` of
``P_i1`` with column ``n2`` of ``P_i2``. From it we build coherence graphs,
their chromatic numbers, the coherence ``mu`` and unicoherence
``mu_tilde`` of a model, plus numeric checks of the s-vector identities
used by the concentration argument.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, ResourceLimit
from .structured import DEFAULT_P_CAP, p_matrix, row
from .transforms import SignDiagonal

SIGMA_TOL = 1e-10
DEFAULT_GRAPH_CAP_N = 512
DEFAULT_PAIR_CAP = 4096
EXACT_VERTEX_CAP = 64


# --- sigma -----------------------------------------------------------------

def _column_sources(M, i):
    """(budget index, sign) of the single nonzero in each column of ``P_i``.

    Only defined for families whose selectors are signed one-hot columns.
    """
    n = M.n
    c = np.arange(n)
    tag = M.family.tag
    if tag == "unstructured":
        return i * n + c, np.ones(n)
    if tag == "circulant":
        return (c - i) % n, np.ones(n)
    if tag == "skew_circulant":
        return (c - i) % n, np.where(c < i, -1.0, 1.0)
    if tag in ("toeplitz", "hankel"):
        cc = c if tag == "toeplitz" else n - 1 - c
        return np.where(cc >= i, cc - i, n + i - cc - 1), np.ones(n)
    return None


def _sigma_closed(M, i1, i2, n1, n2):
    n = M.n
    tag = M.family.tag
    if tag == "circulant":
        return 1.0 if (n1 - n2 - (i1 - i2)) % n == 0 else 0.0
    if tag == "skew_circulant":
        if (n1 - n2 - (i1 - i2)) % n:
            return 0.0
        return (-1.0 if n1 < i1 else 1.0) * (-1.0 if n2 < i2 else 1.0)
    if tag == "unstructured":
        return 1.0 if (i1 == i2 and n1 == n2) else 0.0
    src1, _ = _column_sources(M, i1)
    src2, _ = _column_sources(M, i2)
    return 1.0 if src1[n1] == src2[n2] else 0.0


def _check_indices(M, i1, i2, n1, n2):
    for name, val, hi in (("i1", i1, M.m), ("i2", i2, M.m), ("n1", n1, M.n), ("n2", n2, M.n)):
        if not 0 <= int(val) < hi:
            raise InvalidArgument(f"{name}={val} out of range [0, {hi})")


def sigma(M, i1, i2, n1, n2):
    """Cross-correlation of column ``n1`` of ``P_i1`` and column ``n2`` of ``P_i2``."""
    _check_indices(M, i1, i2, n1, n2)
    if M.family.tag == "ldr":
        return float(p_matrix(M, i1)[:, n1] @ p_matrix(M, i2)[:, n2])
    return _sigma_closed(M, int(i1), int(i2), int(n1), int(n2))


def sigma_matrix(M, i1, i2, cache=None):
    """All ``sigma(M, i1, i2, n1, n2)`` as an ``n x n`` array indexed ``[n1, n2]``."""
    if M.family.tag == "ldr":
        cache = {} if cache is None else cache
        for i in (i1, i2):
            if i not in cache:
                cache[i] = p_matrix(M, i)
        return cache[i1].T @ cache[i2]
    src1, s1 = _column_sources(M, i1)
    src2, s2 = _column_sources(M, i2)
    return (src1[:, None] == src2[None, :]) * np.outer(s1, s2)


# --- coherence graphs ------------------------------------------------------

@dataclass
class CoherenceGraph:
    """Vertices are column pairs ``(n1, n2)``, ``n1 < n2``; edges join pairs sharing a column."""

    i1: int
    i2: int
    vertices: list
    adjacency: list

    @property
    def edges(self):
        return [(u, w) for u, nbrs in enumerate(self.adjacency) for w in nbrs if u < w]

    @property
    def max_degree(self):
        return max((len(a) for a in self.adjacency), default=0)

    def edge_lines(self):
        """One ``a,b -- b,c`` line per edge, in vertex order."""
        V = self.vertices
        return [f"{V[u][0]},{V[u][1]} -- {V[w][0]},{V[w][1]}" for u, w in self.edges]


def _graph_from_sigma(S, i1, i2):
    nz = np.abs(S) > SIGMA_TOL
    # a pair counts when sigma is nonzero in either column order
    mask = np.triu(nz | nz.T, k=1)
    vertices = [(int(a), int(b)) for a, b in zip(*np.nonzero(mask))]
    by_column = {}
    for idx, (a, b) in enumerate(vertices):
        by_column.setdefault(a, []).append(idx)
        by_column.setdefault(b, []).append(idx)
    adjacency = [set() for _ in vertices]
    for members in by_column.values():
        for u, w in itertools.combinations(members, 2):
            adjacency[u].add(w)
            adjacency[w].add(u)
    return CoherenceGraph(i1, i2, vertices, [sorted(a) for a in adjacency])


def coherence_graph(M, i1, i2, cap=DEFAULT_GRAPH_CAP_N):
    """Coherence graph of rows ``i1`` and ``i2``."""
    if M.n > cap:
        raise ResourceLimit(f"coherence graph needs n <= {cap}, got {M.n}")
    _check_indices(M, i1, i2, 0, 0)
    return _graph_from_sigma(sigma_matrix(M, i1, i2), int(i1), int(i2))


def greedy_coloring(G):
    """First-fit coloring in lexicographic vertex order.

    Returns ``(coloring, colors_used)`` with ``coloring`` mapping each vertex
    pair to a color index.
    """
    order = sorted(range(len(G.vertices)), key=lambda k: G.vertices[k])
    color = {}
    for v in order:
        taken = {color[u] for u in G.adjacency[v] if u in color}
        c = 0
        while c in taken:
            c += 1
        color[v] = c
    colors_used = max(color.values(), default=-1) + 1
    return {G.vertices[v]: c for v, c in color.items()}, colors_used


def _k_colorable(adj, k):
    nv = len(adj)
    colors = [-1] * nv

    def pick():
        best, key = -1, None
        for v in range(nv):
            if colors[v] >= 0:
                continue
            sat = len({colors[u] for u in adj[v] if colors[u] >= 0})
            cand = (sat, len(adj[v]))
            if key is None or cand > key:
                best, key = v, cand
        return best

    def solve(done, highest):
        if done == nv:
            return True
        v = pick()
        used = {colors[u] for u in adj[v]}
        # colors above highest+1 are interchangeable; try only one of them
        for c in range(min(k, highest + 2)):
            if c not in used:
                colors[v] = c
                if solve(done + 1, max(highest, c)):
                    return True
        colors[v] = -1
        return False

    return solve(0, -1)


def _components(adjacency):
    seen = [False] * len(adjacency)
    comps = []
    for s in range(len(adjacency)):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in adjacency[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        comps.append(sorted(comp))
    return comps


def exact_chromatic(G, cap=EXACT_VERTEX_CAP):
    """Exact chromatic number by iterative deepening on the color count."""
    if len(G.vertices) > cap:
        raise ResourceLimit(f"exact coloring limited to {cap} vertices, got {len(G.vertices)}")
    if not G.vertices:
        return 0
    best = 1
    for comp in _components(G.adjacency):
        local = {v: k for k, v in enumerate(comp)}
        adj = [[local[u] for u in G.adjacency[v]] for v in comp]
        sub = CoherenceGraph(G.i1, G.i2, [G.vertices[v] for v in comp], adj)
        upper = greedy_coloring(sub)[1]
        k = max(best, 2 if any(adj) else 1)
        while k < upper and not _k_colorable(adj, k):
            k += 1
        best = max(best, min(k, upper))
    return best


# --- model statistics ------------------------------------------------------

@dataclass
class PModelStats:
    chi: int
    chi_is_exact: bool
    mu: float
    mu_tilde: float
    per_pair_chis: dict = field(default_factory=dict)

    def summary(self):
        return {"chi": self.chi, "chi_is_exact": self.chi_is_exact,
                "mu": self.mu, "mu_tilde": self.mu_tilde}


def model_stats(M, exact=False, pairs=None, graph_cap=DEFAULT_GRAPH_CAP_N,
                pair_cap=DEFAULT_PAIR_CAP):
    """Chromatic number, coherence and unicoherence of the model behind ``M``.

    All ordered row pairs are inspected unless ``pairs`` restricts them, in
    which case ``chi`` only bounds the sampled pairs and is flagged inexact.
    """
    m, n = M.m, M.n
    if n > graph_cap:
        raise ResourceLimit(f"model_stats needs n <= {graph_cap}, got {n}")
    if pairs is None:
        if m * m > pair_cap:
            raise ResourceLimit(f"{m * m} row pairs exceed cap {pair_cap}; pass a sample")
        pairs = [(i, j) for i in range(m) for j in range(m)]
        sampled = False
    else:
        pairs = [(int(i), int(j)) for i, j in pairs]
        sampled = True

    cache = {}
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    chi, all_exact = 0, not sampled
    mu, mu_tilde = 0.0, 0.0
    per_pair = {}
    for i, j in pairs:
        S = sigma_matrix(M, i, j, cache)
        mu = max(mu, float(np.sqrt(np.sum(S[upper] ** 2) / n)))
        if i < j:
            mu_tilde = max(mu_tilde, float(np.sum(np.abs(np.diag(S)))))
        key = (min(i, j), max(i, j))
        if key in per_pair:
            continue
        G = _graph_from_sigma(S, i, j)
        if exact and len(G.vertices) <= EXACT_VERTEX_CAP:
            c = exact_chromatic(G)
        else:
            c = greedy_coloring(G)[1]
            all_exact = all_exact and not G.vertices
        per_pair[key] = c
        chi = max(chi, c)
    return PModelStats(chi, all_exact and exact, mu, mu_tilde, per_pair)


def check_normalized(M, tol=1e-12, cap=DEFAULT_P_CAP):
    """True when every column of every ``P_i`` has unit norm within ``tol``."""
    for i in range(M.m):
        norms = np.linalg.norm(p_matrix(M, i, cap), axis=0)
        if np.any(np.abs(norms - 1.0) > tol):
            return False
    return True


def check_orthogonality(M, tol=1e-12, cap=DEFAULT_P_CAP):
    """True when distinct columns of each ``P_i`` are orthogonal within ``tol``."""
    for i in range(M.m):
        P = p_matrix(M, i, cap)
        gram = P.T @ P
        np.fill_diagonal(gram, 0.0)
        if np.any(np.abs(gram) > tol):
            return False
    return True


# --- s-vectors ---------------------------------------------------------------

def _signs(d1):
    return d1.d if isinstance(d1, SignDiagonal) else np.asarray(d1, dtype=float)


def s_vector(M, d1, x, i, P=None):
    """Vector ``s`` with ``<row(i) * d1, x> == <g, s>``."""
    P = p_matrix(M, i) if P is None else P
    return P @ (_signs(d1) * np.asarray(x, dtype=float))


def _pair_terms(d, x1, x2, S):
    a, b = np.triu_indices(len(d), k=1)
    return float(np.sum(d[a] * d[b] * (x1[a] * x2[b] * S[a, b] + x1[b] * x2[a] * S[b, a])))


def s_dot_expansion(M, i1, i2, d, x1, x2, S=None):
    """Expansion of ``<s^{i1,x1}, s^{i2,x2}>`` through sigma.

    Diagonal terms contribute ``sigma(u, u) x1_u x2_u``; each unordered pair
    ``u < w`` contributes ``d_u d_w (x1_u x2_w sigma(u, w) + x1_w x2_u sigma(w, u))``.
    """
    S = sigma_matrix(M, i1, i2) if S is None else S
    d = _signs(d)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return float(np.sum(np.diag(S) * x1 * x2)) + _pair_terms(d, x1, x2, S)


@dataclass
class SIdentityReport:
    row: float
    same_row: float
    cross_row: float
    norm: float
    literal_cross_row: float

    @property
    def max_deviation(self):
        return max(self.row, self.same_row, self.cross_row, self.norm)


def verify_s_identities(M, d1, basis, ortho_tol=1e-10):
    """Compare both sides of the s-vector dot-product identities.

    Same row, different basis vectors: the dot product equals the pair sum
    alone (the diagonal sum is ``<x1, x2> = 0`` for a normalized model).
    Different rows: diagonal sum plus pair sum. ``literal_cross_row``
    measures the one-sided form ``diag + 2 sum_{u<w} d_u d_w x1_u x2_w sigma(u, w)``,
    which only matches when the pair terms are symmetric; it is reported for
    reference and excluded from ``max_deviation``.
    """
    X = np.atleast_2d(np.asarray(basis, dtype=float))
    k = X.shape[0]
    if X.shape[1] != M.n:
        raise InvalidArgument(f"basis vectors must have length {M.n}")
    if np.abs(X @ X.T - np.eye(k)).max() > ortho_tol:
        raise InvalidArgument("basis is not orthonormal")
    d = _signs(d1)
    Ps = {i: p_matrix(M, i) for i in range(M.m)}
    s = {(i, j): s_vector(M, d, X[j], i, Ps[i]) for i in range(M.m) for j in range(k)}
    dev_row = max(abs(float(np.dot(row(M, i) * d, X[j]) - np.dot(M.g, s[i, j])))
                  for i, j in s)

    sig = {}

    def S_of(i1, i2):
        if (i1, i2) not in sig:
            sig[i1, i2] = sigma_matrix(M, i1, i2)
        return sig[i1, i2]

    a, b = np.triu_indices(M.n, k=1)
    dev_same = dev_cross = dev_norm = dev_literal = 0.0
    for (i1, j1), (i2, j2) in itertools.product(s, repeat=2):
        lhs = float(np.dot(s[i1, j1], s[i2, j2]))
        x1, x2 = X[j1], X[j2]
        S = S_of(i1, i2)
        if i1 == i2 and j1 == j2:
            rhs = 1.0 + 2.0 * float(np.sum(d[a] * d[b] * x1[a] * x1[b] * S[a, b]))
            dev_norm = max(dev_norm, abs(lhs - rhs))
        elif i1 == i2:
            dev_same = max(dev_same, abs(lhs - _pair_terms(d, x1, x2, S)))
        else:
            rhs = float(np.sum(np.diag(S) * x1 * x2)) + _pair_terms(d, x1, x2, S)
            dev_cross = max(dev_cross, abs(lhs - rhs))
            literal = float(np.sum(np.diag(S) * x1 * x2)) + 2.0 * float(
                np.sum(d[a] * d[b] * x1[a] * x2[b] * S[a, b]))
            dev_literal = max(dev_literal, abs(lhs - literal))
    return SIdentityReport(dev_row, dev_same, dev_cross, dev_norm, dev_literal)


# --- balancedness and Gram-Schmidt ----------------------------------------

def is_balanced(x, theta):
    """True when the unit vector ``x`` has every ``|x_i| <= theta / sqrt(n)``."""
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(x) - 1.0) > 1e-8:
        raise InvalidArgument("is_balanced expects a unit vector")
    return bool(np.all(np.abs(x) <= theta / np.sqrt(x.size)))


def gram_schmidt_perturb(vectors, rank_tol=1e-10):
    """Orthogonalize ``vectors`` (modified Gram-Schmidt) keeping each original norm.

    Returns ``(orthogonalized, max_deviation)`` where the deviation is the
    largest ``||s_hat_i - s_i||``.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if np.linalg.matrix_rank(V, tol=rank_tol) < V.shape[0]:
        raise InvalidArgument("vectors are linearly dependent")
    Q = V.copy()
    for i in range(len(Q)):
        for j in range(i):
            Q[i] -= (Q[i] @ Q[j]) * Q[j]
        Q[i] /= np.linalg.norm(Q[i])
    out = Q * np.linalg.norm(V, axis=1)[:, None]
    dev = float(np.max(np.linalg.norm(out - V, axis=1)))
    return list(out), dev
