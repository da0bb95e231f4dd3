"""Point queries over sparse streams, and their selection / heavy-hitters
reductions.

The verifier never learns the query universe: it keeps one fingerprint per
hash bucket of a prover-chosen pairwise hash. At the end of the stream the
prover opens the relevant buckets by listing their exact sparse contents;
the verifier recomputes each opened bucket's fingerprint and compares."""

from fractions import Fraction

from .field import DEFAULT_FIELD
from .protocol import (Chunk, ConfigError, Outcome, Prover, RunResult,
                       Verifier, COUNT_BITS, derive_rng, id_bits, need,
                       resolve_prover, run_protocol)
from .streams import (PairwiseHash, StreamUpdate, compute_meta,
                      dyadic_decompose, dyadic_levels, dyadic_prefix_nodes,
                      dyadic_universe, random_pairwise_hash)

OVERFLOW_FACTOR = 10  # Markov constant from the completeness argument


class BucketFingerprintState:
    """c_v fingerprints, one per derived stream x^j = {u : h(u.item) = j}."""

    def __init__(self, field, c_v, rng):
        self.field = field
        self.c_v = c_v
        self.basis = field.rand(rng)
        self.accs = [0] * c_v
        self.h = None
        self.weight = 0

    def set_hash(self, h: PairwiseHash):
        need(isinstance(h, PairwiseHash) and h.r == self.c_v, "bad hash description")
        self.h = h

    def update(self, u: StreamUpdate):
        q = self.field.q
        b = self.h(u.item)
        self.accs[b] = (self.accs[b] + u.delta * pow(self.basis, u.item, q)) % q
        self.weight += abs(u.delta)

    def check_opening(self, bucket, entries, n, max_len, collect=None):
        """Verify a claimed full content list for one bucket.

        Entries are (item, freq) pairs, strictly ascending by item, each
        hashing to the bucket, with nonzero bounded frequencies. Rejects on
        fingerprint mismatch. Optionally collects the counts of items the
        caller cares about into `collect` (a dict pre-keyed by item)."""
        q = self.field.q
        need(len(entries) <= max_len, "opening too large")
        acc = 0
        prev = -1
        for item, freq in entries:
            need(prev < item < n, "opening items not sorted inside universe")
            prev = item
            need(self.h(item) == bucket, "opening item in wrong bucket")
            need(freq != 0 and abs(freq) <= self.weight, "implausible opened frequency")
            acc = (acc + freq * pow(self.basis, item, q)) % q
            if collect is not None and item in collect:
                collect[item] = freq
        need(acc == self.accs[bucket], "bucket fingerprint mismatch")

    @property
    def words(self):
        return self.c_v + 2 + (self.h.words if self.h else 0) + 1


def opening_bits(entries, n):
    return len(entries) * (id_bits(n) + COUNT_BITS)


# ----------------------------------------------------------------- PointQuery


class PointQueryProver(Prover):
    def __init__(self, n, c_v, rng):
        self.n = n
        self.h = random_pairwise_hash(n, c_v, rng)
        self.freq = {}

    def start(self):
        return [Chunk("hash", self.h, self.h.bits)]

    def on_update(self, u):
        self.freq[u.item] = self.freq.get(u.item, 0) + u.delta
        return []

    def finish(self, query):
        b = self.h(query)
        entries = sorted((i, f) for i, f in self.freq.items()
                         if f != 0 and self.h(i) == b)
        return [Chunk("opening", entries, opening_bits(entries, self.n))]


class PointQueryVerifier(Verifier):
    def __init__(self, n, c_a, c_v, rng, field=DEFAULT_FIELD, overflow=OVERFLOW_FACTOR):
        self.n = n
        self.c_a = c_a
        self.max_open = overflow * c_a
        self.state = BucketFingerprintState(field, c_v, rng)
        self.word_bits = field.bits

    def begin(self, chunks):
        need(len(chunks) == 1 and chunks[0].kind == "hash", "missing hash")
        self.state.set_hash(chunks[0].data)

    def update(self, u):
        self.state.update(u)

    def end(self, chunks, query):
        need(len(chunks) == 1 and chunks[0].kind == "opening", "missing opening")
        wanted = {query: 0}
        self.state.check_opening(self.state.h(query), chunks[0].data, self.n,
                                 self.max_open, collect=wanted)
        return Outcome.ok(wanted[query])

    @property
    def words(self):
        return self.state.words + 1


def pq_run(updates, n, query, *, c_a, c_v, seed=0, prover=None,
           field=DEFAULT_FIELD, declared_sparsity=None) -> RunResult:
    """Frequency of `query`, certified against one opened hash bucket."""
    m = compute_meta(updates, n).sparsity if declared_sparsity is None else declared_sparsity
    if c_a * c_v < m:
        raise ConfigError("c_a * c_v must cover the declared sparsity")
    verifier = PointQueryVerifier(n, c_a, c_v, derive_rng(seed, "pq-v"), field)
    prover = resolve_prover(prover, lambda: PointQueryProver(n, c_v, derive_rng(seed, "pq-p")))
    result, _ = run_protocol(verifier, prover, updates, query)
    return result


# ------------------------------------------------------------------ Selection


def _derived_dyadic(u, n):
    return [StreamUpdate(node, u.delta) for node in dyadic_decompose(u.item, n)]


class SelectionProver(Prover):
    def __init__(self, n, c_v, rng):
        self.n = n
        self.u_derived = dyadic_universe(n)
        self.h = random_pairwise_hash(self.u_derived, c_v, rng)
        self.freq = {}

    def start(self):
        return [Chunk("hash", self.h, self.h.bits)]

    def on_update(self, u):
        self.freq[u.item] = self.freq.get(u.item, 0) + u.delta
        return []

    def node_counts(self):
        counts = {}
        for i, f in self.freq.items():
            if f:
                for node in dyadic_decompose(i, self.n):
                    counts[node] = counts.get(node, 0) + f
        return counts

    def answer(self, rank):
        total = 0
        for i in sorted(self.freq):
            total += self.freq[i]
            if total >= rank:
                return i
        return None

    def finish(self, query):
        rank = query
        j = self.answer(rank)
        if j is None:
            return [Chunk("no-answer", None, 1)]
        counts = self.node_counts()
        nodes = set(dyadic_prefix_nodes(j, self.n)) | set(dyadic_prefix_nodes(j + 1, self.n))
        buckets = sorted({self.h(v) for v in nodes})
        openings = []
        for b in buckets:
            entries = sorted((v, c) for v, c in counts.items() if c and self.h(v) == b)
            openings.append((b, entries))
        bits = COUNT_BITS + sum(COUNT_BITS + opening_bits(e, self.u_derived)
                                for _, e in openings)
        return [Chunk("selection-answer", (j, openings), bits)]


class SelectionVerifier(Verifier):
    def __init__(self, n, c_a, c_v, rng, field=DEFAULT_FIELD, overflow=OVERFLOW_FACTOR):
        self.n = n
        self.u_derived = dyadic_universe(n)
        self.c_a = c_a
        self.max_open = overflow * c_a
        self.state = BucketFingerprintState(field, c_v, rng)
        self.total = 0
        self.word_bits = field.bits

    def begin(self, chunks):
        need(len(chunks) == 1 and chunks[0].kind == "hash", "missing hash")
        self.state.set_hash(chunks[0].data)

    def update(self, u):
        self.total += u.delta
        for d in _derived_dyadic(u, self.n):
            self.state.update(d)

    def end(self, chunks, query):
        rank = query
        need(1 <= rank <= self.total, "rank outside [1, N]")
        need(len(chunks) == 1 and chunks[0].kind == "selection-answer", "missing answer")
        j, openings = chunks[0].data
        need(0 <= j < self.n, "answer outside universe")
        below = dyadic_prefix_nodes(j, self.n)
        upto = dyadic_prefix_nodes(j + 1, self.n)
        wanted = {v: 0 for v in below}
        wanted.update({v: 0 for v in upto})
        prev = -1
        for bucket, entries in openings:
            need(prev < bucket < self.state.c_v, "buckets not sorted")
            prev = bucket
            self.state.check_opening(bucket, entries, self.u_derived,
                                     self.max_open, collect=wanted)
        opened = {b for b, _ in openings}
        need(all(self.state.h(v) in opened for v in wanted), "required bucket not opened")
        t_below = sum(wanted[v] for v in below)
        t_upto = sum(wanted[v] for v in upto)
        need(t_below < rank <= t_upto, "rank predicate violated")
        return Outcome.ok(j)

    @property
    def words(self):
        return self.state.words + 4


def selection_run(updates, n, rank, *, c_a, c_v, seed=0, prover=None,
                  field=DEFAULT_FIELD, declared_sparsity=None) -> RunResult:
    """Item of the given rank in the strict-turnstile frequency distribution.

    One bucket-fingerprint state over the derived dyadic stream serves all
    the parallel prefix-count openings."""
    if declared_sparsity is None:
        declared_sparsity = compute_meta(updates, n).sparsity
    m_derived = declared_sparsity * (dyadic_levels(n) + 1)
    if c_a * c_v < m_derived:
        raise ConfigError("c_a * c_v must cover the derived dyadic sparsity")
    verifier = SelectionVerifier(n, c_a, c_v, derive_rng(seed, "sel-v"), field)
    prover = resolve_prover(prover, lambda: SelectionProver(n, c_v, derive_rng(seed, "sel-p")))
    result, _ = run_protocol(verifier, prover, updates, rank)
    return result


# --------------------------------------------------------------- HeavyHitters
#
# The prover presents the dyadic nodes claimed heavy as an ancestor-closed
# tree plus, for every non-claimed child of a claimed node, its exact count.
# Record multisets are tied together with fingerprints so the verifier keeps
# O(1) state beyond the bucket fingerprints:
#   children-of-claimed-nonleaf == claimed-nonroot + nonclaimed-records
# forces closure and coverage, and every record count is certified either by
# bucket openings or by a MultiIndex run on the derived stream.


class HeavyHittersProver(Prover):
    def __init__(self, n, c_v, rng, mode="openings", mi_factory=None):
        self.n = n
        self.u_derived = dyadic_universe(n)
        self.mode = mode
        self.h = random_pairwise_hash(self.u_derived, c_v, rng) if mode == "openings" else None
        self.mi_factory = mi_factory  # multiindex prover core, built at start
        self.mi = None
        self.freq = {}
        self.total = 0

    def start(self):
        if self.mode == "openings":
            return [Chunk("hash", self.h, self.h.bits)]
        self.mi = self.mi_factory()
        return self.mi.start_chunks()

    def on_update(self, u):
        self.freq[u.item] = self.freq.get(u.item, 0) + u.delta
        self.total += u.delta
        if self.mi is not None:
            for d in _derived_dyadic(u, self.n):
                self.mi.update(d.item, d.delta)
        return []

    def _records(self, phi):
        counts = {}
        for i, f in self.freq.items():
            if f:
                for node in dyadic_decompose(i, self.n):
                    counts[node] = counts.get(node, 0) + f
        bar = phi * self.total
        claimed = {v for v, c in counts.items() if c >= bar}
        recs = {}
        for v in claimed:
            recs[v] = (counts.get(v, 0), 1)
            if v < (1 << dyadic_levels(self.n)):  # non-leaf: cover children
                for ch in (2 * v, 2 * v + 1):
                    if ch not in claimed:
                        recs[ch] = (counts.get(ch, 0), 0)
        return [(v,) + recs[v] for v in sorted(recs)]

    def finish(self, query):
        phi = query
        records = self._records(phi)
        bits = len(records) * (id_bits(self.u_derived) + COUNT_BITS + 1)
        chunks = [Chunk("hh-records", records, bits)]
        if self.mode == "openings":
            counts = {}
            for i, f in self.freq.items():
                if f:
                    for node in dyadic_decompose(i, self.n):
                        counts[node] = counts.get(node, 0) + f
            buckets = sorted({self.h(v) for v, _, _ in records})
            openings = []
            queried = {v for v, _, _ in records}
            for b in buckets:
                entries = sorted((v, c, 1 if v in queried else 0)
                                 for v, c in counts.items() if c and self.h(v) == b)
                openings.append((b, entries))
            obits = sum(COUNT_BITS + len(e) * (id_bits(self.u_derived) + COUNT_BITS + 1)
                        for _, e in openings)
            chunks.append(Chunk("hh-openings", openings, obits))
        else:
            self.mi.claims([(v, c) for v, c, _ in records])
            chunks.extend(self.mi.finish_chunks())
        return chunks


class HeavyHittersVerifier(Verifier):
    def __init__(self, n, c_a, c_v, rng, field=DEFAULT_FIELD, mode="openings",
                 mi_factory=None, overflow=OVERFLOW_FACTOR):
        self.n = n
        self.levels = dyadic_levels(n)
        self.u_derived = dyadic_universe(n)
        self.c_a = c_a
        self.max_open = overflow * c_a
        self.mode = mode
        self.field = field
        self.state = BucketFingerprintState(field, c_v, rng) if mode == "openings" else None
        self.mi_factory = mi_factory
        self.mi = None
        self.total = 0
        self.weight_seen = 0
        # multiset-equation fingerprint bases
        self.sigma = field.rand(rng)
        self.tau = field.rand(rng)
        self.word_bits = field.bits

    def begin(self, chunks):
        if self.mode == "openings":
            need(len(chunks) == 1 and chunks[0].kind == "hash", "missing hash")
            self.state.set_hash(chunks[0].data)
        else:
            self.mi = self.mi_factory()
            self.mi.begin(chunks)

    def update(self, u):
        self.total += u.delta
        self.weight_seen += abs(u.delta)
        for d in _derived_dyadic(u, self.n):
            if self.state is not None:
                self.state.update(d)
            else:
                self.mi.update(d.item, d.delta)

    def end(self, chunks, query):
        phi = Fraction(query)
        chunks = list(chunks)
        need(chunks and chunks[0].kind == "hh-records", "missing records")
        records = chunks[0].data
        if self.total <= 0:
            need(not records, "claims on an empty stream")
            return Outcome.ok(frozenset())
        q = self.field.q
        leaf_base = 1 << self.levels
        heavy_items = []
        fp_children = 0    # children of claimed non-leaf nodes
        fp_connect = 0     # claimed non-root nodes + non-claimed records
        fp_counts_a = 0    # (node, count) multiset over records
        prev = -1
        root_claimed = False
        for node, count, flag in records:
            need(prev < node < self.u_derived and node >= 1, "records not sorted")
            prev = node
            need(0 <= count <= self.weight_seen, "implausible record count")
            heavy = count * phi.denominator >= phi.numerator * self.total
            if flag:
                need(heavy, "claimed node below threshold")
                if node == 1:
                    root_claimed = True
                else:
                    fp_connect = (fp_connect + pow(self.sigma, node, q)) % q
                if node < leaf_base:
                    fp_children = (fp_children + pow(self.sigma, 2 * node, q)
                                   + pow(self.sigma, 2 * node + 1, q)) % q
                else:
                    heavy_items.append(node - leaf_base)
            else:
                need(not heavy, "unclaimed node meets threshold")
                fp_connect = (fp_connect + pow(self.sigma, node, q)) % q
            fp_counts_a = (fp_counts_a + count * pow(self.tau, node, q)) % q
        need(root_claimed, "root must be claimed for a nonempty stream")
        need(fp_children == fp_connect, "tree closure fingerprints differ")

        if self.mode == "openings":
            need(len(chunks) == 2 and chunks[1].kind == "hh-openings", "missing openings")
            fp_counts_b = 0
            prev = -1
            for bucket, entries in chunks[1].data:
                need(prev < bucket < self.state.c_v, "buckets not sorted")
                prev = bucket
                plain = [(v, c) for v, c, _ in entries]
                self.state.check_opening(bucket, plain, self.u_derived, self.max_open)
                for v, c, qflag in entries:
                    if qflag:
                        fp_counts_b = (fp_counts_b + c * pow(self.tau, v, q)) % q
            need(fp_counts_a == fp_counts_b, "record counts not matched by openings")
        else:
            self.mi.claims([(v, c) for v, c, _ in records])
            ok = self.mi.end(chunks[1:])
            need(ok == 1, "record counts not certified")
        return Outcome.ok(frozenset(heavy_items))

    @property
    def words(self):
        base = self.state.words if self.state else self.mi.words
        return base + 8


def heavyhitters_run(updates, n, phi, *, c_a, c_v, seed=0, prover=None,
                     field=DEFAULT_FIELD, mode="openings",
                     declared_sparsity=None) -> RunResult:
    """All items with frequency >= phi * N, certified exactly.

    mode='openings' batches the frequency proofs through parallel bucket
    openings; mode='multiindex' routes them through the staged MultiIndex
    scheme over the same derived stream."""
    if not 0 < phi < 1:
        raise ConfigError("phi must be in (0, 1)")
    meta = compute_meta(updates, n)
    if declared_sparsity is None:
        declared_sparsity = meta.sparsity
    levels = dyadic_levels(n)
    m_derived = max(1, declared_sparsity) * (levels + 1)
    if c_a * c_v < m_derived:
        raise ConfigError("c_a * c_v must cover the derived dyadic sparsity")
    phi = Fraction(phi)
    u_derived = dyadic_universe(n)
    if mode == "multiindex":
        from .moments import multiindex_cores
        w_derived = meta.weight * (levels + 1)
        mi_v_factory, mi_p_factory = multiindex_cores(
            u_derived, m_derived, c_v, w_derived, seed)
    else:
        mi_v_factory = mi_p_factory = None
    verifier = HeavyHittersVerifier(n, c_a, c_v, derive_rng(seed, "hh-v"),
                                    field, mode, mi_v_factory)
    prover = resolve_prover(prover, lambda: HeavyHittersProver(
        n, c_v, derive_rng(seed, "hh-p"), mode, mi_p_factory))
    result, _ = run_protocol(verifier, prover, updates, phi)
    return result
