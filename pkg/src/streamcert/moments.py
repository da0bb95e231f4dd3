"""Frequency moments and their relatives over sparse streams.

The online schemes all share one construction: a pairwise hash h maps the
universe down to [r]; the dense sum-check scheme runs on the mapped stream;
a collision list L0 names the items h failed to isolate, whose claimed
frequencies are removed from the mapped instance, certified in a batch by
the staged MultiIndex sub-scheme, and re-added to the output directly. A
bucket-purity check over the mapped pairs confirms h is injective on
everything outside L0.

Stage j of MultiIndex marks the buckets (under a fresh hash h_j) of the
items claimed to be isolated there; a SubInjection run certifies the marked
buckets are pure and a SubF2 run over f - f* certifies the isolated items'
claimed frequencies are exact. Claimed frequencies of resolving items are
also fed into the stage purity check as insertions, so list entries for
items absent from the stream collide with whatever shares their bucket and
cannot launder frequency mass.

Mode variants: 'strict' certifies sparsity-scaled costs, 'footprint' admits
the non-strict model by occupying buckets with absolute update weight (each
entry then also carries its certified absolute weight), and 'ama' uses
public-coin fingerprint purity checks to keep sparsity-scaled costs in the
non-strict model.
"""

import math

from .field import field_at_least
from .protocol import (Chunk, ConfigError, Outcome, Prover, RunResult,
                       Verifier, CHUNK_OVERHEAD_BITS, COUNT_BITS, STAGE_BITS,
                       derive_rng, id_bits, need, resolve_prover,
                       run_protocol)
from .pointqueries import BucketFingerprintState, opening_bits
from .streams import (PairwiseHash, StreamUpdate, compute_meta,
                      find_perfect_hash, frequency_map, random_pairwise_hash)
from .sumcheck import (DenseParams, DenseProver, DenseVerifier, g_power,
                       g_product, prop1_min_field)
from .purity import (ama_coords, ama_params, draw_public_coins,
                     injection_params, purity_deltas, purity_min_field,
                     subf2_params, subinjection_params)

MODE_STRICT = "strict"
MODE_FOOTPRINT = "footprint"
MODE_AMA = "ama"


def _pow2ceil(x: int) -> int:
    return 1 << max(0, (x - 1).bit_length())


def _ceil_sqrt(x: int) -> int:
    s = math.isqrt(x)
    return s if s * s == x else s + 1


class Shape:
    """Shared geometry of one online run: reduced universe, grid shape,
    field, collision budget and stage budget."""

    def __init__(self, n_ids, base, c_v, weight, mode, ell=None, ks=(),
                 main_vectors=1, coins_seed=None):
        if c_v <= 1:
            raise ConfigError("c_v must exceed 1")
        self.n_ids = n_ids
        self.mode = mode
        self.c_v = c_v
        base = max(1, base)
        self.base = base
        self.c_a = _pow2ceil(max(1, -(-base * _ceil_sqrt(c_v) // c_v)))
        self.r = self.c_a * c_v
        self.threshold = max(1, -(-10 * base * base // self.r))
        ell_decl = max(2, ell if ell is not None else self.threshold)
        self.t_max = math.ceil(2 * math.log(ell_decl) / math.log(c_v)) + 3
        self.weight = max(1, weight)
        self.lgn = id_bits(n_ids)
        w2 = 2 * self.weight
        # purity instances weight items by their ids, so they alone may need
        # a field beyond the default; the other instances size independently
        if mode == MODE_AMA:
            self.field_purity = field_at_least((n_ids * n_ids) * self.r * self.lgn << 20)
        else:
            self.field_purity = field_at_least(
                purity_min_field(w2, n_ids, max(self.r, ell_decl)))
        self.field_subf2 = field_at_least(2 * max(1, ell_decl) * w2 * w2 + 1)
        self.field_mains = {}
        for k in ks:
            self.field_mains[k] = field_at_least(
                prop1_min_field(k, self.r, self.weight ** k))
        if main_vectors == 2:
            self.field_mains["ip"] = field_at_least(
                prop1_min_field(2, self.r, self.weight ** 2))
        self.field = max([self.field_purity, self.field_subf2,
                          *self.field_mains.values()], key=lambda f: f.q)
        self.coins = (draw_public_coins(self.field_purity, coins_seed)
                      if mode == MODE_AMA else None)

    # dense parameter bundles ------------------------------------------------

    def main_power_params(self, k):
        f = self.field_mains[k]
        return DenseParams(f, self.r, self.c_a, self.c_v, 1, k,
                           g_power(f, k), self.weight ** k)

    def main_product_params(self):
        f = self.field_mains["ip"]
        return DenseParams(f, self.r, self.c_a, self.c_v, 2, 2,
                           g_product(f), self.weight ** 2)

    def main_injection_params(self):
        if self.mode == MODE_AMA:
            universe = self.r * self.lgn
            c_a = _pow2ceil(-(-universe // self.c_v))
            return ama_params(self.field_purity, self.r, self.lgn, c_a, self.c_v, True)
        bound = max(self.r, 1) * (2 * self.weight * max(1, self.n_ids)) ** 2
        return injection_params(self.field_purity, self.r, self.c_a, self.c_v, bound)

    def stage_check_params(self):
        if self.mode == MODE_AMA:
            universe = self.r * self.lgn
            c_a = _pow2ceil(-(-universe // self.c_v))
            return ama_params(self.field_purity, self.r, self.lgn, c_a, self.c_v, False)
        bound = max(self.r, self.threshold) * (2 * self.weight * max(1, self.n_ids)) ** 2
        return subinjection_params(self.field_purity, self.r, self.c_a, self.c_v, bound)

    def stage_subf2_params(self):
        bound = max(1, self.threshold) * (2 * self.weight) ** 2
        return subf2_params(self.field_subf2, self.r, self.c_a, self.c_v, bound)


# ------------------------------------------------------------------ MultiIndex


class MultiIndexProverCore:
    """Prover side of the staged frequency-batch certification."""

    def __init__(self, shape: Shape, rng):
        self.shape = shape
        self.hs = [random_pairwise_hash(shape.n_ids, shape.r, rng)
                   for _ in range(shape.t_max)]
        self.checks = [DenseProver(shape.stage_check_params())
                       for _ in range(shape.t_max)]
        self.sf_net = [DenseProver(shape.stage_subf2_params())
                       for _ in range(shape.t_max)]
        self.sf_abs = ([DenseProver(shape.stage_subf2_params())
                        for _ in range(shape.t_max)]
                       if shape.mode == MODE_FOOTPRINT else None)
        self.freq = {}
        self.absw = {}
        self.marks = [0] * shape.t_max
        self._stages = None

    def start_chunks(self):
        bits = sum(h.bits for h in self.hs)
        return [Chunk("mi-hashes", list(self.hs), bits)]

    def _feed_check(self, j, ident, delta):
        sh = self.shape
        b = self.hs[j](ident)
        if sh.mode == MODE_AMA:
            alpha, beta = sh.coins
            for vec, coord, d in ama_coords(sh.field_purity, alpha, beta, sh.n_ids,
                                            sh.lgn, ident, b, delta):
                self.checks[j].update(vec, coord, d)
        else:
            d = abs(delta) if sh.mode == MODE_FOOTPRINT else delta
            du, dv, dw = purity_deltas(sh.field_purity, ident, d)
            self.checks[j].update(0, b, du)
            self.checks[j].update(1, b, dv)
            self.checks[j].update(2, b, dw)

    def update(self, ident, delta):
        self.freq[ident] = self.freq.get(ident, 0) + delta
        self.absw[ident] = self.absw.get(ident, 0) + abs(delta)
        for j in range(self.shape.t_max):
            b = self.hs[j](ident)
            self.sf_net[j].update(0, b, delta)
            if self.sf_abs is not None:
                self.sf_abs[j].update(0, b, abs(delta))
            self._feed_check(j, ident, delta)

    def support(self):
        if self.shape.mode == MODE_FOOTPRINT:
            return set(self.absw)
        return {i for i, f in self.freq.items() if f != 0}

    def stages_for(self, idents):
        """First stage isolating each ident from the support set, or None."""
        sh = self.shape
        support = self.support()
        occupancy = []
        for j in range(sh.t_max):
            occ = {}
            h = self.hs[j]
            for i in support:
                b = h(i)
                occ[b] = occ.get(b, 0) + 1
            occupancy.append(occ)
        out = []
        for ident in idents:
            own = 1 if ident in support else 0
            stage = None
            for j in range(sh.t_max):
                if occupancy[j].get(self.hs[j](ident), 0) == own:
                    stage = j + 1
                    break
            out.append(stage)
        return out

    def entry(self, ident, fstar, stage, wstar=None):
        sh = self.shape
        j = stage - 1
        for jj in range(sh.t_max):
            b = self.hs[jj](ident)
            self.sf_net[jj].update(0, b, -fstar)
            if self.sf_abs is not None:
                self.sf_abs[jj].update(0, b, -wstar)
        b = self.hs[j](ident)
        insert = wstar if sh.mode == MODE_FOOTPRINT else fstar
        if insert:
            self._feed_check(j, ident, insert)
        if sh.mode == MODE_AMA:
            for jj in range(sh.lgn):
                self.checks[j].update(2, b * sh.lgn + jj, 1)
        else:
            self.checks[j].update(3, b, 1)
        self.sf_net[j].update(1, b, 1)
        if self.sf_abs is not None:
            self.sf_abs[j].update(1, b, 1)
        self.marks[j] += 1

    def claims(self, entries):
        """entries: (ident, fstar) or (ident, fstar, wstar) tuples."""
        stages = self.stages_for([e[0] for e in entries])
        self._stages = stages
        if any(s is None for s in stages):
            return
        for e, s in zip(entries, stages):
            self.entry(e[0], e[1], s, e[2] if len(e) > 2 else None)

    def finish_chunks(self):
        if self._stages is None:
            self._stages = []
        if any(s is None for s in self._stages):
            return [Chunk("mi-abort", None, 1)]
        chunks = [Chunk("mi-stages", list(self._stages),
                        len(self._stages) * STAGE_BITS)]
        for j in range(self.shape.t_max):
            if not self.marks[j]:
                continue
            proofs = [self.checks[j].proof(), self.sf_net[j].proof()]
            if self.sf_abs is not None:
                proofs.append(self.sf_abs[j].proof())
            chunks.append(Chunk("mi-stage-proof", proofs,
                                sum(p.bits for p in proofs)))
        return chunks


class MultiIndexVerifierCore:
    """Verifier side; one SubInjection-style state and one or two SubF2
    states per stage, all over the same reduced universe."""

    def __init__(self, shape: Shape, rng):
        self.shape = shape
        self.hs = None
        self.checks = [DenseVerifier(shape.stage_check_params(), rng)
                       for _ in range(shape.t_max)]
        self.sf_net = [DenseVerifier(shape.stage_subf2_params(), rng)
                       for _ in range(shape.t_max)]
        self.sf_abs = ([DenseVerifier(shape.stage_subf2_params(), rng)
                        for _ in range(shape.t_max)]
                       if shape.mode == MODE_FOOTPRINT else None)
        self.marks = [0] * shape.t_max
        self.weight_seen = 0
        self.stages_used = 0

    def set_hashes(self, chunks):
        sh = self.shape
        need(chunks and chunks[0].kind == "mi-hashes", "missing stage hashes")
        hs = chunks[0].data
        need(len(hs) == sh.t_max, "wrong stage hash count")
        for h in hs:
            need(isinstance(h, PairwiseHash) and h.r == sh.r and h.p >= sh.n_ids,
                 "bad stage hash")
        self.hs = hs
        return chunks[1:]

    def _feed_check(self, j, ident, delta):
        sh = self.shape
        b = self.hs[j](ident)
        if sh.mode == MODE_AMA:
            alpha, beta = sh.coins
            for vec, coord, d in ama_coords(sh.field_purity, alpha, beta, sh.n_ids,
                                            sh.lgn, ident, b, delta):
                self.checks[j].update(vec, coord, d)
        else:
            d = abs(delta) if sh.mode == MODE_FOOTPRINT else delta
            du, dv, dw = purity_deltas(sh.field_purity, ident, d)
            self.checks[j].update(0, b, du)
            self.checks[j].update(1, b, dv)
            self.checks[j].update(2, b, dw)

    def update(self, ident, delta):
        self.weight_seen += abs(delta)
        for j in range(self.shape.t_max):
            b = self.hs[j](ident)
            self.sf_net[j].update(0, b, delta)
            if self.sf_abs is not None:
                self.sf_abs[j].update(0, b, abs(delta))
            self._feed_check(j, ident, delta)

    def entry(self, ident, fstar, stage, wstar=None):
        sh = self.shape
        need(1 <= stage <= sh.t_max, "stage outside budget")
        need(abs(fstar) <= self.weight_seen, "implausible claimed frequency")
        if sh.mode == MODE_FOOTPRINT:
            need(wstar is not None and 1 <= wstar <= self.weight_seen,
                 "implausible claimed weight")
        j = stage - 1
        for jj in range(sh.t_max):
            b = self.hs[jj](ident)
            self.sf_net[jj].update(0, b, -fstar)
            if self.sf_abs is not None:
                self.sf_abs[jj].update(0, b, -wstar)
        b = self.hs[j](ident)
        insert = wstar if sh.mode == MODE_FOOTPRINT else fstar
        if insert:
            self._feed_check(j, ident, insert)
        if sh.mode == MODE_AMA:
            for jj in range(sh.lgn):
                self.checks[j].update(2, b * sh.lgn + jj, 1)
        else:
            self.checks[j].update(3, b, 1)
        self.sf_net[j].update(1, b, 1)
        if self.sf_abs is not None:
            self.sf_abs[j].update(1, b, 1)
        self.marks[j] += 1
        self.stages_used = max(self.stages_used, stage)

    def consume_proofs(self, chunks):
        """Verify the marked stages' proofs; 1 if every check passed, 0 if a
        verified value contradicts the claims; rejects on proof failure."""
        it = iter(chunks)
        ok = 1
        for j in range(self.shape.t_max):
            if not self.marks[j]:
                continue
            c = next(it, None)
            need(c is not None and c.kind == "mi-stage-proof", "missing stage proof")
            proofs = c.data
            want = 3 if self.sf_abs is not None else 2
            need(len(proofs) == want, "malformed stage proof")
            v = self.checks[j].verify(proofs[0])
            need(v is not None, "stage purity proof failed")
            if v != 0:
                ok = 0
            v = self.sf_net[j].verify(proofs[1])
            need(v is not None, "stage frequency proof failed")
            if v != 0:
                ok = 0
            if self.sf_abs is not None:
                v = self.sf_abs[j].verify(proofs[2])
                need(v is not None, "stage weight proof failed")
                if v != 0:
                    ok = 0
        need(next(it, None) is None, "trailing stage proofs")
        return ok

    @property
    def words(self):
        total = sum(c.words for c in self.checks) + sum(s.words for s in self.sf_net)
        if self.sf_abs is not None:
            total += sum(s.words for s in self.sf_abs)
        hashes = (self.hs[0].words * len(self.hs)) if self.hs else 0
        return total + hashes + self.shape.t_max + 4


def multiindex_cores(n_ids, declared_m, c_v, weight, seed):
    """(verifier factory, prover factory) for embedding MultiIndex in another
    scheme (the improved heavy hitters reduction uses this)."""
    def make_shape(ell=None):
        return Shape(n_ids, declared_m, c_v, weight, MODE_STRICT, ell=ell)

    shape = make_shape()

    def v_factory():
        return _MultiIndexSub(MultiIndexVerifierCore(shape, derive_rng(seed, "mi-v")))

    def p_factory():
        return _MultiIndexSubProver(MultiIndexProverCore(shape, derive_rng(seed, "mi-p")))

    return v_factory, p_factory


class _MultiIndexSub:
    """Chunk-level wrapper so another verifier can embed a MultiIndex run."""

    def __init__(self, core: MultiIndexVerifierCore):
        self.core = core
        self._claims = None

    def begin(self, chunks):
        rest = self.core.set_hashes(chunks)
        need(not rest, "unexpected start annotation")

    def update(self, ident, delta):
        self.core.update(ident, delta)

    def claims(self, claims):
        self._claims = claims

    def end(self, chunks):
        chunks = list(chunks)
        need(chunks and chunks[0].kind != "mi-abort", "prover aborted")
        need(chunks[0].kind == "mi-stages", "missing stage assignments")
        stages = chunks[0].data
        need(len(stages) == len(self._claims), "stage list length mismatch")
        ok = 1
        for (ident, fstar), stage in zip(self._claims, stages):
            need(0 <= ident < self.core.shape.n_ids, "claim outside universe")
            need(fstar >= 0, "negative claimed frequency")
            self.core.entry(ident, fstar, stage)
        if self.core.consume_proofs(chunks[1:]) != 1:
            ok = 0
        return ok

    @property
    def words(self):
        return self.core.words

    @property
    def stages_used(self):
        return self.core.stages_used


class _MultiIndexSubProver:
    def __init__(self, core: MultiIndexProverCore):
        self.core = core

    def start_chunks(self):
        return self.core.start_chunks()

    def update(self, ident, delta):
        self.core.update(ident, delta)

    def claims(self, claims):
        self.core.claims(claims)

    def finish_chunks(self):
        return self.core.finish_chunks()


class _MultiIndexRunVerifier(Verifier):
    def __init__(self, shape, claims, rng):
        self.sub = _MultiIndexSub(MultiIndexVerifierCore(shape, rng))
        self.claims = claims
        self.sub.claims(claims)
        self.word_bits = shape.field.bits
        self.info = {}

    def begin(self, chunks):
        self.sub.begin(chunks)

    def update(self, u):
        self.sub.update(u.item, u.delta)

    def end(self, chunks, query):
        ok = self.sub.end(chunks)
        self.info["stages_used"] = self.sub.stages_used
        return Outcome.ok(ok)

    @property
    def words(self):
        return self.sub.words


class _MultiIndexRunProver(Prover):
    def __init__(self, shape, claims, rng):
        self.sub = _MultiIndexSubProver(MultiIndexProverCore(shape, rng))
        self._claims = claims

    def start(self):
        return self.sub.start_chunks()

    def on_update(self, u):
        self.sub.update(u.item, u.delta)
        return []

    def finish(self, query):
        self.sub.claims(self._claims)
        return self.sub.finish_chunks()


def multiindex_run(updates, n, claims, c_v, *, seed=0, prover=None,
                   declared_sparsity=None, weight=None) -> RunResult:
    """1 iff f_i equals the claimed f_i* for every (i, f_i*) in `claims`.

    Strict turnstile; the stage hash functions are fixed before the stream
    and the claim list arrives after it."""
    items = [c[0] for c in claims]
    if len(set(items)) != len(items):
        raise ConfigError("claims must name distinct items")
    meta = compute_meta(updates, n)
    m = declared_sparsity if declared_sparsity is not None else meta.sparsity
    w = weight if weight is not None else meta.weight
    shape = Shape(n, m, c_v, w, MODE_STRICT, ell=max(2, len(claims)))
    claims = sorted((int(i), int(f)) for i, f in claims)
    verifier = _MultiIndexRunVerifier(shape, claims, derive_rng(seed, "mi-v"))
    prover = resolve_prover(prover, lambda: _MultiIndexRunProver(
        shape, claims, derive_rng(seed, "mi-p")))
    result, _ = run_protocol(verifier, prover, updates)
    if result.outcome.accepted:
        result.info = dict(getattr(verifier, "info", {}))
    return result


# --------------------------------------------------------------- online engine


class OnlineEngineProver(Prover):
    """Honest prover for the universe-reduction schemes: plain Fk for a set
    of moment orders, or the two-vector product form for tagged streams."""

    def __init__(self, shape: Shape, n, ks, tagged, rng):
        self.shape = shape
        self.n = n
        self.ks = tuple(ks)
        self.tagged = tagged
        self.h = random_pairwise_hash(n, shape.r, rng)
        self.mi = MultiIndexProverCore(shape, rng)
        if tagged:
            self.mains = {"ip": DenseProver(shape.main_product_params())}
        else:
            self.mains = {k: DenseProver(shape.main_power_params(k)) for k in self.ks}
        self.main_inj = DenseProver(shape.main_injection_params())
        self.freq = {}
        self.absw = {}

    def start(self):
        return [Chunk("hash", self.h, self.h.bits)] + self.mi.start_chunks()

    def _feed_main_inj(self, ident, delta, raw=False):
        sh = self.shape
        b = self.h(ident)
        if sh.mode == MODE_AMA:
            alpha, beta = sh.coins
            for vec, coord, d in ama_coords(sh.field_purity, alpha, beta, self.n,
                                            id_bits(self.n), ident, b, delta):
                self.main_inj.update(vec, coord, d)
        else:
            d = delta if raw or sh.mode != MODE_FOOTPRINT else abs(delta)
            du, dv, dw = purity_deltas(sh.field_purity, ident, d)
            self.main_inj.update(0, b, du)
            self.main_inj.update(1, b, dv)
            self.main_inj.update(2, b, dw)

    def on_update(self, u):
        tag, su = u if self.tagged else (0, u)
        ident = 2 * su.item + tag if self.tagged else su.item
        b = self.h(su.item)
        if self.tagged:
            self.mains["ip"].update(tag, b, su.delta)
        else:
            for k in self.ks:
                self.mains[k].update(0, b, su.delta)
        self._feed_main_inj(su.item, su.delta)
        self.mi.update(ident, su.delta)
        self.freq[ident] = self.freq.get(ident, 0) + su.delta
        self.absw[su.item] = self.absw.get(su.item, 0) + abs(su.delta)
        return []

    def _main_support(self):
        if self.shape.mode == MODE_FOOTPRINT:
            return set(self.absw)
        if self.tagged:
            return {i >> 1 for i, f in self.freq.items() if f != 0}
        return {i for i, f in self.freq.items() if f != 0}

    def collision_items(self):
        support = self._main_support()
        occ = {}
        for i in support:
            b = self.h(i)
            occ[b] = occ.get(b, 0) + 1
        return sorted(i for i in support if occ[self.h(i)] > 1)

    def finish(self, query):
        sh = self.shape
        items = self.collision_items()
        entries = []
        claims = []
        for i in items:
            if self.tagged:
                fs = self.freq.get(2 * i, 0)
                ft = self.freq.get(2 * i + 1, 0)
                entries.append((i, fs, ft))
                claims.append((2 * i, fs))
                claims.append((2 * i + 1, ft))
            elif sh.mode == MODE_FOOTPRINT:
                f = self.freq.get(i, 0)
                entries.append((i, f, self.absw[i]))
                claims.append((i, f, self.absw[i]))
            else:
                entries.append((i, self.freq[i]))
                claims.append((i, self.freq[i]))
        self.mi.claims(claims)

        # remove the listed items from the mapped instances
        for i in items:
            b = self.h(i)
            if self.tagged:
                fs = self.freq.get(2 * i, 0)
                ft = self.freq.get(2 * i + 1, 0)
                self.mains["ip"].update(0, b, -fs)
                self.mains["ip"].update(1, b, -ft)
                removal = fs + ft
            else:
                f = self.freq.get(i, 0)
                for k in self.ks:
                    self.mains[k].update(0, b, -f)
                removal = f
            if sh.mode == MODE_FOOTPRINT:
                self._feed_main_inj(i, -self.absw[i], raw=True)
            else:
                self._feed_main_inj(i, -removal)

        counts = 2 if (self.tagged or sh.mode == MODE_FOOTPRINT) else 1
        ebits = len(entries) * (id_bits(self.n) + counts * COUNT_BITS)
        chunks = [Chunk("collision-list", entries, ebits)]
        chunks.extend(self.mi.finish_chunks())
        if chunks[-1].kind == "mi-abort":
            return chunks
        inj_proof = self.main_inj.proof()
        chunks.append(Chunk("main-injection-proof", inj_proof, inj_proof.bits))
        for key in (("ip",) if self.tagged else self.ks):
            proof = self.mains[key].proof()
            chunks.append(Chunk("main-proof", (key, proof), proof.bits))
        return chunks


class OnlineEngineVerifier(Verifier):
    def __init__(self, shape: Shape, n, ks, tagged, rng):
        self.shape = shape
        self.n = n
        self.ks = tuple(ks)
        self.tagged = tagged
        self.h = None
        self.mi = MultiIndexVerifierCore(shape, rng)
        if tagged:
            self.mains = {"ip": DenseVerifier(shape.main_product_params(), rng)}
        else:
            self.mains = {k: DenseVerifier(shape.main_power_params(k), rng) for k in self.ks}
        self.main_inj = DenseVerifier(shape.main_injection_params(), rng)
        self.weight_seen = 0
        self.word_bits = shape.field.bits
        self.info = {}
        if shape.mode == MODE_AMA:
            self.public_coin_bits = 2 * shape.field_purity.bits

    def begin(self, chunks):
        need(chunks and chunks[0].kind == "hash", "missing universe hash")
        h = chunks[0].data
        need(isinstance(h, PairwiseHash) and h.r == self.shape.r and h.p >= self.n,
             "bad universe hash")
        self.h = h
        self.mi.set_hashes(chunks[1:])

    def _feed_main_inj(self, ident, delta, raw=False):
        sh = self.shape
        b = self.h(ident)
        if sh.mode == MODE_AMA:
            alpha, beta = sh.coins
            for vec, coord, d in ama_coords(sh.field_purity, alpha, beta, self.n,
                                            id_bits(self.n), ident, b, delta):
                self.main_inj.update(vec, coord, d)
        else:
            d = delta if raw or sh.mode != MODE_FOOTPRINT else abs(delta)
            du, dv, dw = purity_deltas(sh.field_purity, ident, d)
            self.main_inj.update(0, b, du)
            self.main_inj.update(1, b, dv)
            self.main_inj.update(2, b, dw)

    def update(self, u):
        tag, su = u if self.tagged else (0, u)
        ident = 2 * su.item + tag if self.tagged else su.item
        b = self.h(su.item)
        if self.tagged:
            self.mains["ip"].update(tag, b, su.delta)
        else:
            for k in self.ks:
                self.mains[k].update(0, b, su.delta)
        self._feed_main_inj(su.item, su.delta)
        self.mi.update(ident, su.delta)
        self.weight_seen += abs(su.delta)

    def end(self, chunks, query):
        sh = self.shape
        chunks = list(chunks)
        need(chunks and chunks[0].kind == "collision-list", "missing collision list")
        entries = chunks[0].data
        need(len(entries) <= sh.threshold, "collision list over budget")
        need(len(chunks) >= 2 and chunks[1].kind != "mi-abort", "prover aborted")
        need(chunks[1].kind == "mi-stages", "missing stage assignments")
        stages = iter(chunks[1].data)
        w = self.weight_seen
        c0 = {k: 0 for k in self.ks} if not self.tagged else {"ip": 0}
        prev = -1
        for e in entries:
            i = e[0]
            need(prev < i < self.n, "collision list not sorted")
            prev = i
            b = self.h(i)
            if self.tagged:
                _, fs, ft = e
                need(0 <= fs <= w and 0 <= ft <= w and fs + ft >= 1,
                     "implausible listed frequencies")
                c0["ip"] += fs * ft
                self.mains["ip"].update(0, b, -fs)
                self.mains["ip"].update(1, b, -ft)
                removal = fs + ft
                s1 = next(stages, None)
                s2 = next(stages, None)
                need(s1 is not None and s2 is not None, "missing stages")
                self.mi.entry(2 * i, fs, s1)
                self.mi.entry(2 * i + 1, ft, s2)
            elif sh.mode == MODE_FOOTPRINT:
                _, f, wst = e
                need(abs(f) <= w, "implausible listed frequency")
                for k in self.ks:
                    c0[k] += f ** k
                    self.mains[k].update(0, b, -f)
                s = next(stages, None)
                need(s is not None, "missing stage")
                self.mi.entry(i, f, s, wst)
                removal = None
                self._feed_main_inj(i, -wst, raw=True)
            else:
                _, f = e
                if sh.mode == MODE_STRICT:
                    need(1 <= f <= w, "implausible listed frequency")
                else:
                    need(f != 0 and abs(f) <= w, "implausible listed frequency")
                for k in self.ks:
                    c0[k] += f ** k
                    self.mains[k].update(0, b, -f)
                s = next(stages, None)
                need(s is not None, "missing stage")
                self.mi.entry(i, f, s)
                removal = f
            if removal is not None:
                self._feed_main_inj(i, -removal)
        need(next(stages, None) is None, "trailing stages")

        rest = chunks[2:]
        n_stage = sum(1 for m in self.mi.marks if m)
        stage_chunks, rest = rest[:n_stage], rest[n_stage:]
        need(self.mi.consume_proofs(stage_chunks) == 1, "listed frequencies not certified")
        self.info["stages_used"] = self.mi.stages_used

        need(rest and rest[0].kind == "main-injection-proof", "missing injection proof")
        v = self.main_inj.verify(rest[0].data)
        need(v == 0, "mapping not injective on the remainder")
        rest = rest[1:]
        results = {}
        keys = ("ip",) if self.tagged else self.ks
        need(len(rest) == len(keys), "missing main proofs")
        for c, key in zip(rest, keys):
            need(c.kind == "main-proof" and c.data[0] == key, "main proofs out of order")
            v = self.mains[key].verify(c.data[1])
            need(v is not None, "main sum check failed")
            results[key] = c0[key] + v
        return Outcome.ok(results)

    @property
    def words(self):
        total = self.mi.words + self.main_inj.words
        total += sum(mv.words for mv in self.mains.values())
        total += (self.h.words if self.h else 0) + 4
        if self.shape.mode == MODE_AMA:
            total += 2
        return total


def _run_engine(updates, n, ks, c_v, mode, seed, prover,
                declared=None, coins_seed=None):
    meta = compute_meta(updates, n)
    base = declared if declared is not None else (
        meta.footprint if mode == MODE_FOOTPRINT else meta.sparsity)
    shape = Shape(n, base, c_v, meta.weight, mode, ks=ks, coins_seed=coins_seed)
    verifier = OnlineEngineVerifier(shape, n, ks, False,
                                    derive_rng(seed, "fk-v"))
    prover = resolve_prover(prover, lambda: OnlineEngineProver(
        shape, n, ks, False, derive_rng(seed, "fk-p")))
    result, _ = run_protocol(verifier, prover, updates)
    if result.outcome.accepted:
        result.info = dict(verifier.info)
    return result, shape


# ----------------------------------------------------------------- Fk schemes


def fk_online_multi(updates, n, ks, c_v, *, seed=0, prover=None, mode=MODE_STRICT,
                    declared=None, coins_seed=None) -> RunResult:
    """Certified exact frequency moments for every order in ks, sharing one
    universe reduction and one MultiIndex run."""
    result, _ = _run_engine(updates, n, tuple(ks), c_v, mode, seed,
                            prover, declared, coins_seed)
    return result


def fk_online_run(updates, n, k, c_v, *, seed=0, prover=None,
                  declared=None) -> RunResult:
    """Online exact Fk in the strict turnstile model."""
    result = fk_online_multi(updates, n, (k,), c_v, seed=seed, prover=prover,
                             declared=declared)
    if result.outcome.accepted:
        result.outcome = Outcome.ok(result.outcome.value[k])
    return result


def fk_footprint_mode(updates, n, k, c_v, *, seed=0, prover=None) -> RunResult:
    """Non-strict-model Fk; purity occupancy and costs scale with the stream
    footprint instead of its sparsity."""
    result = fk_online_multi(updates, n, (k,), c_v, seed=seed, prover=prover,
                             mode=MODE_FOOTPRINT)
    if result.outcome.accepted:
        result.outcome = Outcome.ok(result.outcome.value[k])
    return result


def fk_ama_mode(updates, n, k, c_v, *, seed=0, coins_seed=0, prover=None) -> RunResult:
    """Non-strict-model Fk with public-coin purity checks; costs scale with
    sparsity at an extra log(n) factor."""
    result = fk_online_multi(updates, n, (k,), c_v, seed=seed, prover=prover,
                             mode=MODE_AMA, coins_seed=coins_seed)
    if result.outcome.accepted:
        result.outcome = Outcome.ok(result.outcome.value[k])
    return result


class _PrescientFkProver(Prover):
    prescient = True

    def __init__(self, shape_r, n, updates, params_main, params_inj, rng):
        self.r = shape_r
        self.n = n
        freq = frequency_map(updates)
        self.h = find_perfect_hash(sorted(freq), shape_r, 64, rng, universe=n)
        self.main = DenseProver(params_main)
        self.inj = DenseProver(params_inj)
        for i, f in freq.items():
            b = self.h(i)
            self.main.update(0, b, f)
            du, dv, dw = purity_deltas(params_inj.field, i, f)
            self.inj.update(0, b, du)
            self.inj.update(1, b, dv)
            self.inj.update(2, b, dw)

    def start(self):
        return [Chunk("hash", self.h, self.h.bits)]

    def finish(self, query):
        p1 = self.inj.proof()
        p2 = self.main.proof()
        return [Chunk("main-injection-proof", p1, p1.bits),
                Chunk("main-proof", p2, p2.bits)]


class _PrescientFkVerifier(Verifier):
    def __init__(self, n, r, params_main, params_inj, rng):
        self.n = n
        self.r = r
        self.h = None
        self.main = DenseVerifier(params_main, rng)
        self.inj = DenseVerifier(params_inj, rng)
        self.word_bits = params_main.field.bits

    def begin(self, chunks):
        need(len(chunks) == 1 and chunks[0].kind == "hash", "missing hash")
        h = chunks[0].data
        need(isinstance(h, PairwiseHash) and h.r == self.r and h.p >= self.n, "bad hash")
        self.h = h

    def update(self, u):
        b = self.h(u.item)
        self.main.update(0, b, u.delta)
        du, dv, dw = purity_deltas(self.inj.field, u.item, u.delta)
        self.inj.update(0, b, du)
        self.inj.update(1, b, dv)
        self.inj.update(2, b, dw)

    def end(self, chunks, query):
        need(len(chunks) == 2 and chunks[0].kind == "main-injection-proof"
             and chunks[1].kind == "main-proof", "malformed annotation")
        need(self.inj.verify(chunks[0].data) == 0, "hash not injective")
        v = self.main.verify(chunks[1].data)
        need(v is not None, "main sum check failed")
        return Outcome.ok(v)

    @property
    def words(self):
        return self.main.words + self.inj.words + (self.h.words if self.h else 0) + 1


def prescient_reduced_universe(m: int) -> int:
    """Reduced-universe size for the prescient schemes.

    An explicit perfect-hash family could live with r = m^(4/3); a seeded
    random search needs about m^2/2 slots to succeed in a few dozen trials,
    so the range is widened to whichever is larger."""
    m = max(1, m)
    return max(16, math.ceil(m ** (4 / 3)), (m * m) // 2)


def fk_prescient_run(updates, n, k, *, seed=0, prover=None) -> RunResult:
    """Prescient exact Fk: the prover announces a perfect hash up front, the
    verifier certifies it with an Injection run over the mapped pairs."""
    meta = compute_meta(updates, n)
    r = prescient_reduced_universe(meta.sparsity)
    c_a = _pow2ceil(_ceil_sqrt(r))
    c_v = -(-r // c_a)
    weight = max(1, meta.weight)
    min_q = max(prop1_min_field(k, r, weight ** k),
                purity_min_field(weight, n, r))
    field = field_at_least(min_q)
    params_main = DenseParams(field, r, c_a, c_v, 1, k,
                              g_power(field, k), weight ** k)
    bound = r * (weight * max(1, n)) ** 2
    params_inj = injection_params(field, r, c_a, c_v, bound)
    verifier = _PrescientFkVerifier(n, r, params_main, params_inj,
                                    derive_rng(seed, "pfk-v"))
    prover = resolve_prover(prover, lambda: _PrescientFkProver(
        r, n, updates, params_main, params_inj, derive_rng(seed, "pfk-p")))
    result, _ = run_protocol(verifier, prover, updates)
    return result


# -------------------------------------------------------------- Disjointness


def tagged_meta(updates, n):
    return compute_meta([StreamUpdate(2 * su.item + tag, su.delta)
                         for tag, su in updates], 2 * n)


class _PrescientDisjProver(Prover):
    prescient = True

    def __init__(self, n, updates, r, params, rng):
        self.freq = {}
        for tag, su in updates:
            key = (tag, su.item)
            self.freq[key] = self.freq.get(key, 0) + su.delta
        s_items = {i for (t, i), f in self.freq.items() if t == 0 and f != 0}
        t_items = {i for (t, i), f in self.freq.items() if t == 1 and f != 0}
        inter = sorted(s_items & t_items)
        self.witness = inter[0] if inter else None
        self.h = None
        self.main = None
        if self.witness is None:
            self.h = find_perfect_hash(sorted(s_items | t_items), r, 64, rng, universe=n)
            self.main = DenseProver(params)
            for (tag, i), f in self.freq.items():
                if f:
                    self.main.update(tag, self.h(i), f)

    def start(self):
        if self.witness is not None:
            return [Chunk("witness", self.witness, 64)]
        return [Chunk("hash", self.h, self.h.bits)]

    def finish(self, query):
        if self.witness is not None:
            return []
        proof = self.main.proof()
        return [Chunk("main-proof", proof, proof.bits)]


class _PrescientDisjVerifier(Verifier):
    def __init__(self, n, r, params, rng):
        self.n = n
        self.r = r
        self.params = params
        self.rng = rng
        self.h = None
        self.main = None
        self.witness = None
        self.wit_counts = [0, 0]
        self.word_bits = params.field.bits

    def begin(self, chunks):
        need(len(chunks) == 1, "malformed start annotation")
        c = chunks[0]
        if c.kind == "witness":
            need(0 <= c.data < self.n, "witness outside universe")
            self.witness = c.data
        else:
            need(c.kind == "hash", "missing hash")
            h = c.data
            need(isinstance(h, PairwiseHash) and h.r == self.r and h.p >= self.n,
                 "bad hash")
            self.h = h
            self.main = DenseVerifier(self.params, self.rng)

    def update(self, u):
        tag, su = u
        if self.witness is not None:
            if su.item == self.witness:
                self.wit_counts[tag] += su.delta
        else:
            self.main.update(tag, self.h(su.item), su.delta)

    def end(self, chunks, query):
        if self.witness is not None:
            need(not chunks, "unexpected annotation")
            need(self.wit_counts[0] > 0 and self.wit_counts[1] > 0, "false witness")
            return Outcome.ok(0)
        need(len(chunks) == 1 and chunks[0].kind == "main-proof", "missing proof")
        v = self.main.verify(chunks[0].data)
        need(v is not None, "sum check failed")
        # a nonzero verified product under a prover-chosen hash proves
        # nothing about the original sets, so only zero is conclusive
        need(v == 0, "mapped product nonzero without witness")
        return Outcome.ok(1)

    @property
    def words(self):
        base = self.main.words if self.main else 4
        return base + (self.h.words if self.h else 0) + 3


def disj_prescient_run(updates, n, *, seed=0, prover=None) -> RunResult:
    """Prescient sparse set-disjointness: witness for intersection, perfect
    hash plus a dense product check for disjointness."""
    meta = tagged_meta(updates, n)
    r = prescient_reduced_universe(meta.sparsity)
    c_a = _pow2ceil(_ceil_sqrt(r))
    c_v = -(-r // c_a)
    weight = max(1, meta.weight)
    field = field_at_least(prop1_min_field(2, r, weight ** 2))
    params = DenseParams(field, r, c_a, c_v, 2, 2, g_product(field), weight ** 2)
    verifier = _PrescientDisjVerifier(n, r, params, derive_rng(seed, "pdisj-v"))
    prover = resolve_prover(prover, lambda: _PrescientDisjProver(
        n, updates, r, params, derive_rng(seed, "pdisj-p")))
    result, _ = run_protocol(verifier, prover, updates)
    return result


class _TaggedWitnessProver(Prover):
    """Online prover for DISJ/Subset: carries a point-query sub-protocol for
    the witness branch alongside the full certification engine."""

    def __init__(self, n, shape, rng, subset=False):
        self.n = n
        self.subset = subset
        self.pq_h = random_pairwise_hash(2 * n, shape.c_v, rng)
        self.engine = OnlineEngineProver(shape, n, (), True, rng)
        self.freq = {}

    def start(self):
        return ([Chunk("pq-hash", self.pq_h, self.pq_h.bits)]
                + self.engine.start())

    def on_update(self, u):
        tag, su = u
        ident = 2 * su.item + tag
        self.freq[ident] = self.freq.get(ident, 0) + su.delta
        self.engine.on_update(u)
        return []

    def _witness_item(self):
        s_items = {i >> 1 for i, f in self.freq.items() if f != 0 and i % 2 == 0}
        t_items = {i >> 1 for i, f in self.freq.items() if f != 0 and i % 2 == 1}
        if self.subset:
            outside = sorted(s_items - t_items)
            return outside[0] if outside else None
        inter = sorted(s_items & t_items)
        return inter[0] if inter else None

    def _openings_for(self, idents):
        buckets = sorted({self.pq_h(t) for t in idents})
        out = []
        for b in buckets:
            entries = sorted((t, f) for t, f in self.freq.items()
                             if f != 0 and self.pq_h(t) == b)
            out.append((b, entries))
        bits = sum(COUNT_BITS + opening_bits(e, 2 * self.n) for _, e in out)
        return out, bits

    def finish(self, query):
        w = self._witness_item()
        if w is not None:
            openings, bits = self._openings_for([2 * w, 2 * w + 1])
            return [Chunk("witness", w, 64),
                    Chunk("witness-openings", openings, bits)]
        return self.engine.finish(query)


class _TaggedWitnessVerifier(Verifier):
    def __init__(self, n, shape, rng, subset=False):
        self.n = n
        self.subset = subset
        self.pq = BucketFingerprintState(shape.field, shape.c_v, rng)
        self.engine = OnlineEngineVerifier(shape, n, (), True, rng)
        self.max_open = 10 * shape.c_a
        self.f1_x = 0
        self.word_bits = shape.field.bits
        self.info = {}

    def begin(self, chunks):
        need(chunks and chunks[0].kind == "pq-hash", "missing point-query hash")
        self.pq.set_hash(chunks[0].data)
        self.engine.begin(chunks[1:])

    def update(self, u):
        tag, su = u
        self.pq.update(StreamUpdate(2 * su.item + tag, su.delta))
        if tag == 0:
            self.f1_x += su.delta
        self.engine.update(u)

    def _witness_counts(self, item, openings):
        wanted = {2 * item: 0, 2 * item + 1: 0}
        prev = -1
        for bucket, entries in openings:
            need(prev < bucket < self.pq.c_v, "buckets not sorted")
            prev = bucket
            self.pq.check_opening(bucket, entries, 2 * self.n, self.max_open,
                                  collect=wanted)
        opened = {b for b, _ in openings}
        need(all(self.pq.h(t) in opened for t in wanted), "witness buckets not opened")
        return wanted[2 * item], wanted[2 * item + 1]

    def end(self, chunks, query):
        chunks = list(chunks)
        if chunks and chunks[0].kind == "witness":
            item = chunks[0].data
            need(0 <= item < self.n, "witness outside universe")
            need(len(chunks) == 2 and chunks[1].kind == "witness-openings",
                 "missing witness openings")
            fs, ft = self._witness_counts(item, chunks[1].data)
            if self.subset:
                need(fs >= 1 and ft == 0, "witness not in X minus Y")
            else:
                need(fs >= 1 and ft >= 1, "witness not in both sets")
            return Outcome.ok(0)
        out = self.engine.end(chunks, query)
        self.info.update(self.engine.info)
        ip = out.value["ip"]
        if self.subset:
            return Outcome.ok(1 if ip == self.f1_x else 0)
        return Outcome.ok(1 if ip == 0 else 0)

    @property
    def words(self):
        return self.pq.words + self.engine.words + 2


def _tagged_run(updates, n, c_v, seed, prover, subset) -> RunResult:
    meta = tagged_meta(updates, n)
    shape = Shape(2 * n, meta.sparsity, c_v, meta.weight, MODE_STRICT,
                  main_vectors=2)
    verifier = _TaggedWitnessVerifier(n, shape, derive_rng(seed, "tag-v"),
                                      subset)
    prover = resolve_prover(prover, lambda: _TaggedWitnessProver(
        n, shape, derive_rng(seed, "tag-p"), subset=subset))
    result, _ = run_protocol(verifier, prover, updates)
    return result


def disj_online_run(updates, n, c_v, *, seed=0, prover=None) -> RunResult:
    """Online sparse set-disjointness: 1 iff the certified inner product of
    the two indicator-weight vectors is zero; intersection may instead be
    shown by a witness with two point-query openings."""
    return _tagged_run(updates, n, c_v, seed, prover, subset=False)


def subset_run(updates, n, c_v, *, seed=0, prover=None) -> RunResult:
    """X subseteq Y for sets streamed interleaved: certified inner product
    f_X . f_Y compared against |X|; a witness in X minus Y shows the
    negative case."""
    return _tagged_run(updates, n, c_v, seed, prover, subset=True)


# --------------------------------------------- inner product / Hamming distance


class _PairProver(Prover):
    """Three concurrent Fk engines certify F2(f+g), F2(f), F2(g)."""

    def __init__(self, n, shapes, rng):
        self.engines = [OnlineEngineProver(shapes[i], n, (2,), False, rng)
                        for i in range(3)]

    def start(self):
        out = []
        for i, e in enumerate(self.engines):
            out.append(_wrap_chunks(f"sub{i}-start", e.start()))
        return out

    def on_update(self, u):
        tag, su = u
        self.engines[0].on_update(su)
        self.engines[1 + tag].on_update(su)
        return []

    def finish(self, query):
        out = []
        for i, e in enumerate(self.engines):
            out.append(_wrap_chunks(f"sub{i}-end", e.finish(query)))
        return out


def _wrap_chunks(kind, chunks):
    bits = sum(c.bits + CHUNK_OVERHEAD_BITS for c in chunks)
    return Chunk(kind, chunks, bits)


class _PairVerifier(Verifier):
    def __init__(self, n, shapes, rng, hamming=False):
        self.engines = [OnlineEngineVerifier(shapes[i], n, (2,), False, rng)
                        for i in range(3)]
        self.hamming = hamming
        self.f1 = [0, 0]
        self.word_bits = shapes[0].field.bits

    def begin(self, chunks):
        need(len(chunks) == 3, "expected three sub-scheme starts")
        for i, c in enumerate(chunks):
            need(c.kind == f"sub{i}-start", "sub-scheme starts out of order")
            self.engines[i].begin(c.data)

    def update(self, u):
        tag, su = u
        self.f1[tag] += su.delta
        self.engines[0].update(su)
        self.engines[1 + tag].update(su)

    def end(self, chunks, query):
        need(len(chunks) == 3, "expected three sub-scheme finishes")
        f2 = []
        for i, c in enumerate(chunks):
            need(c.kind == f"sub{i}-end", "sub-scheme finishes out of order")
            out = self.engines[i].end(c.data, query)
            f2.append(out.value[2])
        twice = f2[0] - f2[1] - f2[2]
        need(twice % 2 == 0, "inconsistent certified moments")
        ip = twice // 2
        if self.hamming:
            return Outcome.ok(self.f1[0] + self.f1[1] - 2 * ip)
        return Outcome.ok(ip)

    @property
    def words(self):
        return sum(e.words for e in self.engines) + 4


def _pair_run(updates, n, c_v, seed, prover, hamming) -> RunResult:
    metas = [compute_meta([su for _, su in updates], n),
             compute_meta([su for t, su in updates if t == 0], n),
             compute_meta([su for t, su in updates if t == 1], n)]
    shapes = [Shape(n, m.sparsity, c_v, max(1, m.weight), MODE_STRICT, ks=(2,))
              for m in metas]
    verifier = _PairVerifier(n, shapes, derive_rng(seed, "pair-v"), hamming)
    prover = resolve_prover(prover, lambda: _PairProver(
        n, shapes, derive_rng(seed, "pair-p")))
    result, _ = run_protocol(verifier, prover, updates)
    return result


def inner_product_run(updates, n, c_v, *, seed=0, prover=None) -> RunResult:
    """Exact f . g via the polarization identity 2(f.g) = F2(f+g) - F2(f) - F2(g),
    with all three moments certified."""
    return _pair_run(updates, n, c_v, seed, prover, hamming=False)


def hamming_run(updates, n, c_v, *, seed=0, prover=None) -> RunResult:
    """Hamming distance of two binary vectors: F1(f) + F1(g) - 2 f.g."""
    return _pair_run(updates, n, c_v, seed, prover, hamming=True)
