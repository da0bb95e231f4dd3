"""Bucket-purity machinery.

A bucketed stream places weighted items into buckets; a bucket is pure when
only one distinct item has positive count in it. With nonnegative pair
counts, the moment vectors u_b = sum_j f_(j,b), v_b = sum_j f_(j,b)*j,
w_b = sum_j f_(j,b)*j^2 satisfy v_b^2 <= u_b*w_b with equality exactly on
pure buckets (Cauchy-Schwarz), so sum_b z_b*(u_b*w_b - v_b^2) == 0 certifies
purity of every z-marked bucket. All four checks here are one dense
sum-check instance each.

The public-coin variant replaces the integer identity, which cancellation
can fool once counts may go negative, with per-(bucket, bit) fingerprints of
the two bit-sides of each bucket; purity makes one side of every split zero,
so the fingerprint inner product of the two sides is identically zero.
"""

from .field import Field, field_at_least
from .protocol import (Chunk, ConfigError, Outcome, Prover, RunResult,
                       Verifier, derive_rng, id_bits, need, resolve_prover,
                       run_protocol)
from .sumcheck import (DenseParams, DenseProver, DenseVerifier, g_purity,
                       g_sub_purity, g_sub_square, g_triple_product)


def purity_field_bound(meta, r: int) -> int:
    """Smallest field size keeping the purity identity exact over the integers:
    q_min > 2*r*(N*n)^2 so |sum_b z_b(v_b^2 - u_b*w_b)| < q/2."""
    return 2 * r * (meta.weight * meta.n) ** 2 + 1


def purity_min_field(weight: int, n: int, r: int) -> int:
    return 2 * max(1, r) * (max(1, weight) * max(1, n)) ** 2 + 1


def balanced_shape(universe: int):
    """Power-of-two c_a with c_a ~ c_v and c_a * c_v >= universe."""
    c_a = 1
    while c_a * c_a < universe:
        c_a <<= 1
    c_v = (universe + c_a - 1) // c_a
    return c_a, max(1, c_v)


def purity_deltas(field: Field, item: int, delta: int):
    """Per-update contributions to (u, v, w) from one bucketed update."""
    q = field.q
    d = delta % q
    return d, d * item % q, d * item % q * item % q


def injection_params(field, r, c_a, c_v, value_bound):
    return DenseParams(field=field, universe=r, c_a=c_a, c_v=c_v, vectors=3,
                       degree=2, g=g_purity(field), bound=value_bound)


def subinjection_params(field, r, c_a, c_v, value_bound):
    return DenseParams(field=field, universe=r, c_a=c_a, c_v=c_v, vectors=4,
                       degree=3, g=g_sub_purity(field), bound=value_bound)


def subf2_params(field, n, c_a, c_v, value_bound):
    return DenseParams(field=field, universe=n, c_a=c_a, c_v=c_v, vectors=2,
                       degree=3, g=g_sub_square(field), bound=value_bound)


class _DenseChunkProver(Prover):
    """Shared shape for the honest provers here: replay the stream into a
    DenseProver and emit one end-of-stream proof chunk."""

    def __init__(self, params):
        self.dense = DenseProver(params)

    def feed(self, u):
        raise NotImplementedError

    def on_update(self, u):
        self.feed(u)
        return []

    def finish(self, query):
        proof = self.dense.proof()
        return [Chunk("dense-proof", proof, proof.bits)]


class _PurityVerifierBase(Verifier):
    def __init__(self, params, rng):
        self.dense = DenseVerifier(params, rng)
        self.word_bits = params.field.bits

    def _finish_value(self, chunks):
        need(len(chunks) == 1 and chunks[0].kind == "dense-proof", "missing proof")
        value = self.dense.verify(chunks[0].data)
        need(value is not None, "sum check failed")
        return value

    @property
    def words(self):
        return self.dense.words


# ------------------------------------------------------------------ Injection


class InjectionProver(_DenseChunkProver):
    def feed(self, u):
        du, dv, dw = purity_deltas(self.dense.field, u.item, u.delta)
        self.dense.update(0, u.bucket, du)
        self.dense.update(1, u.bucket, dv)
        self.dense.update(2, u.bucket, dw)


class InjectionVerifier(_PurityVerifierBase):
    def update(self, u):
        du, dv, dw = purity_deltas(self.dense.field, u.item, u.delta)
        self.dense.update(0, u.bucket, du)
        self.dense.update(1, u.bucket, dv)
        self.dense.update(2, u.bucket, dw)

    def end(self, chunks, query):
        value = self._finish_value(chunks)
        return Outcome.ok(1 if value == 0 else 0)


def injection_run(updates, n, r, *, c_a=None, c_v=None, field=None, seed=0,
                  prover=None) -> RunResult:
    """Decide whether a strict bucketed stream is an injection (1/0), or reject.

    Callers are expected to have validated the strict model on pairs; the
    purity identity is only meaningful with nonnegative pair counts.
    """
    weight = sum(abs(u.delta) for u in updates)
    bound = max(1, r) * (max(1, weight) * max(1, n)) ** 2
    field = field or field_at_least(purity_min_field(weight, n, r))
    if c_a is None or c_v is None:
        c_a, c_v = balanced_shape(r)
    params = injection_params(field, r, c_a, c_v, bound)
    verifier = InjectionVerifier(params, derive_rng(seed, "injection-v"))
    prover = resolve_prover(prover, lambda: InjectionProver(params))
    result, _ = run_protocol(verifier, prover, updates)
    return result


# --------------------------------------------------------------- SubInjection


class SubInjectionProver(_DenseChunkProver):
    def __init__(self, params, z):
        super().__init__(params)
        self.z = z

    def feed(self, u):
        du, dv, dw = purity_deltas(self.dense.field, u.item, u.delta)
        self.dense.update(0, u.bucket, du)
        self.dense.update(1, u.bucket, dv)
        self.dense.update(2, u.bucket, dw)

    def finish(self, query):
        for bucket, zb in self.z:
            if zb:
                self.dense.update(3, bucket, zb)
        return super().finish(query)


class SubInjectionVerifier(_PurityVerifierBase):
    def __init__(self, params, z, rng):
        super().__init__(params, rng)
        self.z = z

    def update(self, u):
        du, dv, dw = purity_deltas(self.dense.field, u.item, u.delta)
        self.dense.update(0, u.bucket, du)
        self.dense.update(1, u.bucket, dv)
        self.dense.update(2, u.bucket, dw)

    def end(self, chunks, query):
        for bucket, zb in self.z:
            if zb:
                self.dense.update(3, bucket, zb)
        value = self._finish_value(chunks)
        return Outcome.ok(1 if value == 0 else 0)


def subinjection_run(updates, z, n, r, *, c_a=None, c_v=None, field=None,
                     seed=0, prover=None) -> RunResult:
    """SubInjection: 1 iff every bucket with z_b >= 1 is pure.

    z is part of the input (streamed after the main stream), given as
    (bucket, count) pairs with nonnegative counts.
    """
    z = [(b, int(c)) for b, c in z]
    if any(c < 0 for _, c in z):
        raise ConfigError("bucket indicator entries must be nonnegative")
    weight = sum(abs(u.delta) for u in updates)
    zmax = max((c for _, c in z), default=0)
    bound = max(1, zmax) * max(1, r) * (max(1, weight) * max(1, n)) ** 2
    field = field or field_at_least(2 * bound + 1)
    if c_a is None or c_v is None:
        c_a, c_v = balanced_shape(r)
    params = subinjection_params(field, r, c_a, c_v, bound)
    verifier = SubInjectionVerifier(params, z, derive_rng(seed, "subinj-v"))
    prover = resolve_prover(prover, lambda: SubInjectionProver(params, z))
    result, _ = run_protocol(verifier, prover, updates)
    return result


# --------------------------------------------------------------------- SubF2


class SubF2Prover(_DenseChunkProver):
    def __init__(self, params, z):
        super().__init__(params)
        self.z = z

    def feed(self, u):
        self.dense.update(0, u.item, u.delta)

    def finish(self, query):
        for item, zb in self.z:
            if zb:
                self.dense.update(1, item, zb)
        return super().finish(query)


class SubF2Verifier(_PurityVerifierBase):
    def __init__(self, params, z, rng):
        super().__init__(params, rng)
        self.z = z

    def update(self, u):
        self.dense.update(0, u.item, u.delta)

    def end(self, chunks, query):
        for item, zb in self.z:
            if zb:
                self.dense.update(1, item, zb)
        return Outcome.ok(self._finish_value(chunks))


def subf2_run(updates, z, n, *, c_a=None, c_v=None, field=None, seed=0,
              prover=None) -> RunResult:
    """Exact sum_i z_i * f_i^2 over any turnstile stream."""
    z = [(i, int(c)) for i, c in z]
    if any(c < 0 for _, c in z):
        raise ConfigError("indicator entries must be nonnegative")
    weight = sum(abs(u.delta) for u in updates)
    ztot = sum(c for _, c in z)
    bound = max(1, ztot) * max(1, weight) ** 2
    field = field or field_at_least(2 * bound + 1)
    if c_a is None or c_v is None:
        c_a, c_v = balanced_shape(n)
    params = subf2_params(field, n, c_a, c_v, bound)
    verifier = SubF2Verifier(params, z, derive_rng(seed, "subf2-v"))
    prover = resolve_prover(prover, lambda: SubF2Prover(params, z))
    result, _ = run_protocol(verifier, prover, updates)
    return result


# ------------------------------------------------------------- AMA Injection


def ama_coords(field: Field, alpha: int, beta: int, n: int, lgn: int,
               item: int, bucket: int, delta: int):
    """The log(n) dense-instance updates induced by one bucketed update.

    Yields (vector, coordinate, field delta): vector 0 holds fingerprints of
    the bit=0 side of each (bucket, bit) split under alpha, vector 1 the
    bit=1 side under beta.
    """
    q = field.q
    d = delta % q
    for j in range(lgn):
        coord = bucket * lgn + j
        if (item >> j) & 1 == 0:
            yield 0, coord, d * pow(alpha, n * coord + item, q) % q
        else:
            yield 1, coord, d * pow(beta, n * coord + item, q) % q


def ama_params(field, r, lgn, c_a, c_v, marks_const: bool):
    universe = r * lgn
    const = (2,) if marks_const else ()
    return DenseParams(field=field, universe=universe, c_a=c_a, c_v=c_v,
                       vectors=3, degree=3, g=g_triple_product(field),
                       bound=0, raw=True, const_ones=const)


class AmaInjectionProver(_DenseChunkProver):
    def __init__(self, params, coins, n, lgn):
        super().__init__(params)
        self.alpha, self.beta = coins
        self.n = n
        self.lgn = lgn

    def feed(self, u):
        for vec, coord, d in ama_coords(self.dense.field, self.alpha, self.beta,
                                        self.n, self.lgn, u.item, u.bucket, u.delta):
            self.dense.update(vec, coord, d)


class AmaInjectionVerifier(_PurityVerifierBase):
    def __init__(self, params, coins, n, lgn, rng):
        super().__init__(params, rng)
        self.alpha, self.beta = coins
        self.n = n
        self.lgn = lgn
        # public coins are counted against both costs
        self.public_coin_bits = 2 * params.field.bits

    def update(self, u):
        for vec, coord, d in ama_coords(self.dense.field, self.alpha, self.beta,
                                        self.n, self.lgn, u.item, u.bucket, u.delta):
            self.dense.update(vec, coord, d)

    def end(self, chunks, query):
        value = self._finish_value(chunks)
        return Outcome.ok(1 if value == 0 else 0)

    @property
    def words(self):
        return self.dense.words + 2


def draw_public_coins(field: Field, coins_seed) -> tuple:
    rng = derive_rng(coins_seed, "public-coins")
    return field.rand(rng), field.rand(rng)


def ama_injection_run(updates, n, r, *, coins_seed=0, c_a=None, c_v=None,
                      field=None, seed=0, prover=None) -> RunResult:
    """Public-coin injection check, valid in the non-strict turnstile model.

    Output 1 iff every bucket is pure; a cancellation-crafted impure bucket
    is caught except with probability about n^2 * r * log(n) / q over the
    public coins, drawn before any prover message.
    """
    lgn = id_bits(n)
    field = field or field_at_least((n ** 2) * r * lgn << 20)
    if field.q <= (n ** 2) * r * lgn:
        raise ConfigError("field too small for the AMA soundness bound")
    coins = draw_public_coins(field, coins_seed)
    if c_a is None or c_v is None:
        c_a, c_v = balanced_shape(r * lgn)
    params = ama_params(field, r, lgn, c_a, c_v, marks_const=True)
    verifier = AmaInjectionVerifier(params, coins, n, lgn,
                                    derive_rng(seed, "ama-v"))
    prover = resolve_prover(prover, lambda: AmaInjectionProver(params, coins, n, lgn))
    result, _ = run_protocol(verifier, prover, updates)
    return result
