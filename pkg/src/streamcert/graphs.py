"""Graph schemes over edge streams: exact triangle counting through derived-
stream moments, and relaxed (one-sided) certificates for perfect matching,
connectivity, and non-bipartiteness.

Witness edge sets are checked for membership in the streamed edge set with
the tagged inner-product machinery (X . Y == |X| with Y the 0/1 edge
indicator), and witness structure is checked with O(1) fingerprint state."""

from .moments import (MODE_STRICT, OnlineEngineProver, OnlineEngineVerifier,
                      Shape, fk_online_multi)
from .protocol import (Chunk, ConfigError, Outcome, Prover, RelaxedOutcome,
                       RunResult, Verifier, derive_rng, id_bits, need,
                       resolve_prover, run_protocol)
from .streams import StreamUpdate, compute_meta, fingerprint_of_range


def pair_rank(u: int, v: int) -> int:
    """Rank of an unordered vertex pair (u < v) in the C(n,2) universe."""
    if u > v:
        u, v = v, u
    if u == v:
        raise ValueError("self loop")
    return v * (v - 1) // 2 + u


def triple_rank(a: int, b: int, c: int) -> int:
    """Combinatorial-number-system rank of a vertex triple in [C(n,3)]."""
    a, b, c = sorted((a, b, c))
    return a + b * (b - 1) // 2 + c * (c - 1) * (c - 2) // 6


def edge_universe(n: int) -> int:
    return n * (n - 1) // 2


def triple_universe(n: int) -> int:
    return n * (n - 1) * (n - 2) // 6


def triangle_derived_stream(edges, n):
    """Each edge update touches the C(n-2, 1) triples containing it; a triple
    with derived frequency 3 is a triangle."""
    out = []
    for u, v, delta in edges:
        for w in range(n):
            if w != u and w != v:
                out.append(StreamUpdate(triple_rank(u, v, w), delta))
    return out


def triangles_from_moments(f1, f2, f3):
    """Triples holding all three of their edges: the indicator of f == 3 on
    {0,1,2,3} is f(f-1)(f-2)/6 = (f^3 - 3 f^2 + 2 f)/6."""
    num = f3 - 3 * f2 + 2 * f1
    if num % 6:
        return None
    return num // 6


def count_triangles_run(edges, n, c_v=64, *, seed=0, prover=None) -> RunResult:
    """Certified exact triangle count of a simple graph given as a strict
    edge stream."""
    if n < 3:
        raise ConfigError("need at least three vertices")
    derived = triangle_derived_stream(edges, n)
    result = fk_online_multi(derived, triple_universe(n), (1, 2, 3), c_v,
                             seed=seed, prover=prover)
    if result.outcome.rejected:
        return result
    moments = result.outcome.value
    count = triangles_from_moments(moments[1], moments[2], moments[3])
    result.outcome = Outcome.reject() if count is None else Outcome.ok(count)
    return result


# ------------------------------------------------------- witness subset glue


def _subset_shape(n_edge_universe, m_bound, weight, c_v):
    return Shape(2 * n_edge_universe, max(1, m_bound), c_v,
                 max(1, weight), MODE_STRICT, main_vectors=2)


class _RelaxedVerifierBase(Verifier):
    def __init__(self, n, shape, rng):
        self.n = n
        self.shape = shape
        self.engine = OnlineEngineVerifier(shape, edge_universe(n), (), True, rng)
        self.field = shape.field
        self.x_count = 0
        self.word_bits = shape.field.bits

    def begin(self, chunks):
        self.engine.begin(chunks)

    def update(self, u):
        u_, v_, delta = u
        self.engine.update((1, StreamUpdate(pair_rank(u_, v_), delta)))

    def _x_edge(self, a, b):
        need(0 <= a < self.n and 0 <= b < self.n and a != b, "bad witness edge")
        self.engine.update((0, StreamUpdate(pair_rank(a, b), 1)))
        self.x_count += 1

    def _subset_holds(self, chunks):
        out = self.engine.end(chunks, None)
        need(out.value["ip"] == self.x_count, "witness edges not all in the graph")

    @property
    def words(self):
        return self.engine.words + 6


# ------------------------------------------------------------ perfect matching


class MatchingProver(Prover):
    def __init__(self, n, shape, witness, rng):
        self.n = n
        self.witness = witness
        self.engine = OnlineEngineProver(shape, edge_universe(n), (), True, rng)

    def start(self):
        return self.engine.start()

    def on_update(self, u):
        u_, v_, delta = u
        self.engine.on_update((1, StreamUpdate(pair_rank(u_, v_), delta)))
        return []

    def finish(self, query):
        bits = len(self.witness) * 2 * id_bits(self.n)
        for a, b in self.witness:
            self.engine.on_update((0, StreamUpdate(pair_rank(a, b), 1)))
        return [Chunk("matching-witness", list(self.witness), bits)] + \
            self.engine.finish(query)


class MatchingVerifier(_RelaxedVerifierBase):
    def __init__(self, n, shape, rng):
        super().__init__(n, shape, rng)
        self.rho = self.field.rand(rng)
        self.fp_endpoints = 0

    def end(self, chunks, query):
        chunks = list(chunks)
        need(chunks and chunks[0].kind == "matching-witness", "missing witness")
        witness = chunks[0].data
        need(self.n % 2 == 0 and len(witness) == self.n // 2, "wrong matching size")
        q = self.field.q
        for a, b in witness:
            self._x_edge(a, b)
            self.fp_endpoints = (self.fp_endpoints + pow(self.rho, a, q)
                                 + pow(self.rho, b, q)) % q
        need(self.fp_endpoints == fingerprint_of_range(self.field, self.rho, self.n),
             "matched endpoints do not cover every vertex once")
        self._subset_holds(chunks[1:])
        return RelaxedOutcome(True)


def verify_perfect_matching(edges, n, witness, c_v=16, *, seed=0,
                            prover=None) -> RunResult:
    """Relaxed check that `witness` is a perfect matching inside the streamed
    edge set: convinced, or not convinced (never 'no matching exists')."""
    meta = compute_meta([StreamUpdate(pair_rank(u, v), d) for u, v, d in edges],
                        edge_universe(n))
    shape = _subset_shape(edge_universe(n), meta.sparsity + len(witness),
                          meta.weight + len(witness), c_v)
    verifier = MatchingVerifier(n, shape, derive_rng(seed, "match-v"))
    prover = resolve_prover(prover, lambda: MatchingProver(
        n, shape, witness, derive_rng(seed, "match-p")))
    result, _ = run_protocol(verifier, prover, edges)
    return result


# --------------------------------------------------------------- connectivity


def witness_tree_records(n, root, tree_edges):
    """(edge records, vertex records) for a spanning-tree witness: each edge
    carries its child's depth, each vertex its depth and child count."""
    children = {}
    adj = {}
    for a, b in tree_edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    depth = {root: 0}
    parent = {}
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj.get(v, ()):
                if w not in depth:
                    depth[w] = depth[v] + 1
                    parent[w] = v
                    children[v] = children.get(v, 0) + 1
                    nxt.append(w)
        frontier = nxt
    if len(depth) != n:
        raise ConfigError("witness edges do not span the graph")
    edge_recs = sorted((child, parent[child], depth[child]) for child in parent)
    vert_recs = [(v, depth[v], children.get(v, 0)) for v in range(n)]
    return edge_recs, vert_recs


class ConnectivityProver(Prover):
    def __init__(self, n, shape, root, tree_edges, rng):
        self.n = n
        self.root = root
        self.records = witness_tree_records(n, root, tree_edges)
        self.engine = OnlineEngineProver(shape, edge_universe(n), (), True, rng)

    def start(self):
        return self.engine.start()

    def on_update(self, u):
        u_, v_, delta = u
        self.engine.on_update((1, StreamUpdate(pair_rank(u_, v_), delta)))
        return []

    def finish(self, query):
        edge_recs, vert_recs = self.records
        for child, par, _ in edge_recs:
            self.engine.on_update((0, StreamUpdate(pair_rank(child, par), 1)))
        bits = (len(edge_recs) * 3 + len(vert_recs) * 3 + 1) * id_bits(self.n ** 2)
        return [Chunk("tree-witness", (self.root, edge_recs, vert_recs), bits)] \
            + self.engine.finish(query)


class ConnectivityVerifier(_RelaxedVerifierBase):
    def __init__(self, n, shape, rng):
        super().__init__(n, shape, rng)
        self.rho = self.field.rand(rng)
        self.sigma = self.field.rand(rng)

    def end(self, chunks, query):
        chunks = list(chunks)
        need(chunks and chunks[0].kind == "tree-witness", "missing witness")
        root, edge_recs, vert_recs = chunks[0].data
        n, q = self.n, self.field.q
        need(0 <= root < n, "bad root")
        need(len(edge_recs) == n - 1 and len(vert_recs) == n, "wrong witness size")
        fp_child = 0
        fp_pairs_actual = 0
        for child, par, d in edge_recs:
            need(1 <= d < n, "bad edge depth")
            self._x_edge(child, par)
            fp_child = (fp_child + pow(self.rho, child, q)) % q
            fp_pairs_actual = (fp_pairs_actual
                               + pow(self.sigma, par * n + (d - 1), q)) % q
        fp_vert = 0
        fp_pairs_expected = 0
        total_children = 0
        prev = -1
        for v, d, cc in vert_recs:
            need(prev < v < n, "vertex records not sorted")
            prev = v
            need(0 <= d < n and cc >= 0, "bad vertex record")
            need((d == 0) == (v == root), "depth zero iff root")
            fp_vert = (fp_vert + pow(self.rho, v, q)) % q
            if cc:
                fp_pairs_expected = (fp_pairs_expected
                                     + cc * pow(self.sigma, v * n + d, q)) % q
            total_children += cc
        need(total_children == n - 1, "child counts do not sum to n-1")
        all_fp = fingerprint_of_range(self.field, self.rho, n)
        need(fp_vert == all_fp, "vertex records do not cover every vertex once")
        need(fp_child == (all_fp - pow(self.rho, root, q)) % q,
             "children do not cover the non-root vertices once")
        need(fp_pairs_actual == fp_pairs_expected,
             "parent depths inconsistent with vertex depths")
        self._subset_holds(chunks[1:])
        return RelaxedOutcome(True)


def verify_connectivity(edges, n, witness, c_v=16, *, seed=0,
                        prover=None) -> RunResult:
    """Relaxed connectivity: witness is (root, list of n-1 tree edges).

    Depth-tagged parent records certify the edges form a tree spanning all n
    vertices; membership of every tree edge in the stream goes through the
    subset machinery."""
    root, tree_edges = witness
    meta = compute_meta([StreamUpdate(pair_rank(u, v), d) for u, v, d in edges],
                        edge_universe(n))
    shape = _subset_shape(edge_universe(n), meta.sparsity + max(1, n - 1),
                          meta.weight + max(1, n - 1), c_v)
    verifier = ConnectivityVerifier(n, shape, derive_rng(seed, "conn-v"))
    try:
        prover = resolve_prover(prover, lambda: ConnectivityProver(
            n, shape, root, tree_edges, derive_rng(seed, "conn-p")))
    except ConfigError:
        # witness unusable: the prover cannot even form its annotation
        from .protocol import CostReport
        return RunResult(Outcome.reject(), CostReport(0, 0, 0, 0.0))
    result, _ = run_protocol(verifier, prover, edges)
    return result


# ------------------------------------------------------------ non-bipartiteness


class OddCycleProver(Prover):
    def __init__(self, n, shape, cycle, rng):
        self.n = n
        self.cycle = cycle  # closed vertex list, first == last
        self.engine = OnlineEngineProver(shape, edge_universe(n), (), True, rng)

    def start(self):
        return self.engine.start()

    def on_update(self, u):
        u_, v_, delta = u
        self.engine.on_update((1, StreamUpdate(pair_rank(u_, v_), delta)))
        return []

    def finish(self, query):
        for a, b in zip(self.cycle, self.cycle[1:]):
            self.engine.on_update((0, StreamUpdate(pair_rank(a, b), 1)))
        bits = len(self.cycle) * id_bits(self.n)
        return [Chunk("cycle-witness", list(self.cycle), bits)] + \
            self.engine.finish(query)


class OddCycleVerifier(_RelaxedVerifierBase):
    def end(self, chunks, query):
        chunks = list(chunks)
        need(chunks and chunks[0].kind == "cycle-witness", "missing witness")
        cycle = chunks[0].data
        length = len(cycle) - 1
        need(length >= 3 and length % 2 == 1, "cycle length not odd")
        need(cycle[0] == cycle[-1], "cycle not closed")
        for a, b in zip(cycle, cycle[1:]):
            self._x_edge(a, b)
        self._subset_holds(chunks[1:])
        return RelaxedOutcome(True)


def verify_non_bipartite(edges, n, witness, c_v=16, *, seed=0,
                         prover=None) -> RunResult:
    """Relaxed non-bipartiteness: the witness is an odd closed walk played in
    order; every step must be a streamed edge."""
    cycle = list(witness)
    meta = compute_meta([StreamUpdate(pair_rank(u, v), d) for u, v, d in edges],
                        edge_universe(n))
    shape = _subset_shape(edge_universe(n), meta.sparsity + len(cycle),
                          meta.weight + len(cycle), c_v)
    verifier = OddCycleVerifier(n, shape, derive_rng(seed, "cyc-v"))
    prover = resolve_prover(prover, lambda: OddCycleProver(
        n, shape, cycle, derive_rng(seed, "cyc-p")))
    result, _ = run_protocol(verifier, prover, edges)
    return result
