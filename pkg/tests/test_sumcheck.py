import random

import pytest

from streamcert.field import Field, M61, lagrange_basis_at
from streamcert.protocol import ConfigError
from streamcert.sumcheck import (DenseParams, DenseProof, DenseProver,
                                 DenseVerifier, default_value_bound,
                                 dense_prover_proof, dense_verifier_init,
                                 dense_verifier_update, dense_verify,
                                 deserialize_proof, g_power, g_product,
                                 g_purity, prop1_min_field, serialize_proof)

FM = Field(M61)


def params_for(universe, c_a, c_v, vectors, degree, g, bound, field=FM, **kw):
    return DenseParams(field, universe, c_a, c_v, vectors, degree, g, bound, **kw)


def brute_value(vectors, g):
    n = max(len(v) for v in vectors)
    total = 0
    for i in range(n):
        total += g([v[i] if i < len(v) else 0 for v in vectors])
    return total


def test_zero_vectors_give_zero_polynomial():
    p = params_for(8, 4, 2, 1, 2, g_power(FM, 2), 100)
    proof = dense_prover_proof([[0] * 8], p)
    assert all(v == 0 for v in proof.values)
    st = dense_verifier_init(p, 1)
    assert dense_verify(st, proof) == 0


def test_single_column_constant_polynomial():
    # c_a = 1: b(X) is the constant F
    p = params_for(4, 1, 4, 1, 2, g_power(FM, 2), 1000)
    f = [1, 2, 3, 4]
    proof = dense_prover_proof([f], p)
    assert len(proof.values) == 1
    st = dense_verifier_init(p, 7)
    for i, v in enumerate(f):
        dense_verifier_update(st, 0, i, v)
    assert dense_verify(st, proof) == 30


def test_spec_square_example():
    p = params_for(4, 2, 2, 1, 2, g_power(FM, 2), 1000)
    f = [1, 2, 3, 4]
    st = dense_verifier_init(p, 3)
    for i, v in enumerate(f):
        dense_verifier_update(st, 0, i, v)
    proof = dense_prover_proof([f], p)
    assert sum(proof.values[:2]) % FM.q == 30
    assert dense_verify(st, proof) == 30


def test_inner_product_of_disjoint_indicators_is_zero():
    p = params_for(8, 4, 2, 2, 2, g_product(FM), 100)
    a = [1, 0, 1, 0, 0, 0, 0, 0]
    b = [0, 1, 0, 0, 1, 0, 0, 1]
    st = dense_verifier_init(p, 5)
    for i in range(8):
        if a[i]:
            dense_verifier_update(st, 0, i, a[i])
        if b[i]:
            dense_verifier_update(st, 1, i, b[i])
    assert dense_verify(st, dense_prover_proof([a, b], p)) == 0


def test_update_cancellation_and_own_node():
    p = params_for(16, 4, 4, 1, 2, g_power(FM, 2), 10_000)
    st = dense_verifier_init(p, 11)
    before = [row[:] for row in st.rows]
    dense_verifier_update(st, 0, 9, 5)
    dense_verifier_update(st, 0, 9, -5)
    assert st.rows == before
    # r landing on a grid row makes the Lagrange factor one
    st.r = 2  # x-coordinate 2 corresponds to items 8..11
    st._lrow = None
    dense_verifier_update(st, 0, 9, 7)
    assert st.rows[0][1] == 7


def test_rows_match_direct_extension(rng):
    # independent oracle: evaluate the low-degree extension directly
    p = params_for(16, 4, 4, 2, 2, g_product(FM), 10 ** 9)
    st = dense_verifier_init(p, 23)
    grid = [[[0] * 4 for _ in range(4)] for _ in range(2)]
    for _ in range(20):
        j = rng.randrange(2)
        item = rng.randrange(16)
        delta = rng.choice([-3, -1, 1, 2, 5])
        dense_verifier_update(st, j, item, delta)
        grid[j][item // 4][item % 4] += delta
    for j in range(2):
        for y in range(4):
            direct = sum(FM.enc(grid[j][x][y]) * lagrange_basis_at(FM, 4, x, st.r)
                         for x in range(4)) % FM.q
            assert st.rows[j][y] == direct


@pytest.mark.parametrize("g_name", ["square", "cube", "product"])
def test_completeness_randomized(g_name, rng):
    for _ in range(40):
        n = rng.randrange(2, 64)
        c_a = rng.choice([1, 2, 4, 8])
        c_v = (n + c_a - 1) // c_a
        if g_name == "square":
            vectors, degree, g = 1, 2, g_power(FM, 2)
        elif g_name == "cube":
            vectors, degree, g = 1, 3, g_power(FM, 3)
        else:
            vectors, degree, g = 2, 2, g_product(FM)
        p = params_for(n, c_a, c_v, vectors, degree, g, 10 ** 12)
        vecs = [[rng.randrange(-4, 5) for _ in range(n)] for _ in range(vectors)]
        st = dense_verifier_init(p, rng.random())
        for j, vec in enumerate(vecs):
            for i, v in enumerate(vec):
                if v:
                    dense_verifier_update(st, j, i, v)
        got = dense_verify(st, dense_prover_proof(vecs, p))

        def g_int(vals):
            if g_name == "square":
                return vals[0] ** 2
            if g_name == "cube":
                return vals[0] ** 3
            return vals[0] * vals[1]

        assert got == brute_value(vecs, g_int)


def test_soundness_tampered_proofs(rng):
    p = params_for(32, 8, 4, 1, 2, g_power(FM, 2), 10 ** 9)
    f = [rng.randrange(0, 5) for _ in range(32)]
    proof = dense_prover_proof([f], p)
    accepts = 0
    for t in range(100):
        st = dense_verifier_init(p, 4100 + t)
        for i, v in enumerate(f):
            if v:
                dense_verifier_update(st, 0, i, v)
        values = list(proof.values)
        values[rng.randrange(len(values))] += 1
        if dense_verify(st, DenseProof(values, proof.field_bits)) is not None:
            accepts += 1
    assert accepts == 0


def test_degree_violation_rejected():
    p = params_for(4, 2, 2, 1, 2, g_power(FM, 2), 1000)
    f = [1, 2, 3, 4]
    st = dense_verifier_init(p, 3)
    for i, v in enumerate(f):
        dense_verifier_update(st, 0, i, v)
    proof = dense_prover_proof([f], p)
    long_proof = DenseProof(proof.values + [0], proof.field_bits)
    assert dense_verify(st, long_proof) is None


def test_output_bound_enforced():
    p = params_for(4, 2, 2, 1, 2, g_power(FM, 2), bound=10)
    f = [1, 2, 3, 4]  # F = 30 > bound
    st = dense_verifier_init(p, 3)
    for i, v in enumerate(f):
        dense_verifier_update(st, 0, i, v)
    assert dense_verify(st, dense_prover_proof([f], p)) is None


def test_verifier_seed_determinism_and_uniformity():
    p = params_for(4, 2, 2, 1, 2, g_power(FM, 2), 1000)
    assert dense_verifier_init(p, 9).r == dense_verifier_init(p, 9).r
    f101 = Field(101)
    p101 = DenseParams(f101, 4, 2, 2, 1, 1, g_power(f101, 1), 8)
    counts = [0] * 101
    for s in range(10_000):
        counts[dense_verifier_init(p101, s).r] += 1
    expect = 10_000 / 101
    chi2 = sum((c - expect) ** 2 / expect for c in counts)
    assert chi2 < 162  # df=100 critical value at alpha=0.0001


def test_const_ones_vector_matches_explicit_updates(rng):
    universe = 13
    g = g_purity(FM)
    base = DenseParams(FM, universe, 4, 4, 3, 2, g, 10 ** 9)

    def fill(params, const):
        prover = DenseProver(params)
        verifier = DenseVerifier(params, random.Random(77))
        for _ in range(15):
            item = rng.randrange(universe)
            d = rng.randrange(1, 4)
            du, dv, dw = d, d * item, d * item * item
            for j, val in ((0, du), (1, dv), (2, dw)):
                prover.update(j, item, val)
                verifier.update(j, item, val)
        if not const:
            # emulate an extra all-ones vector explicitly
            pass
        return prover, verifier

    rng_state = rng.getstate()
    p_const = DenseParams(FM, universe, 4, 4, 4, 3,
                          lambda v: v[3] * (v[1] * v[1] - v[0] * v[2]) % FM.q,
                          10 ** 12, const_ones=(3,))
    prover_c, verifier_c = fill(p_const, True)
    rng.setstate(rng_state)
    p_plain = DenseParams(FM, universe, 4, 4, 4, 3,
                          lambda v: v[3] * (v[1] * v[1] - v[0] * v[2]) % FM.q,
                          10 ** 12)
    prover_p, verifier_p = fill(p_plain, False)
    for i in range(universe):
        prover_p.update(3, i, 1)
        verifier_p.update(3, i, 1)
    got_c = verifier_c.verify(prover_c.proof())
    got_p = verifier_p.verify(prover_p.proof())
    assert got_c is not None and got_c == got_p


def test_prover_values_match_direct_extension_oracle(rng):
    # independent oracle for the packed multi-point evaluation
    universe, c_a, c_v = 11, 4, 3
    g = g_product(FM)
    p = params_for(universe, c_a, c_v, 2, 2, g, 10 ** 9)
    vecs = [{rng.randrange(universe): rng.randrange(1, 9) for _ in range(5)}
            for _ in range(2)]
    proof = dense_prover_proof(vecs, p)

    def ext(vec, point, y):
        total = 0
        for x in range(c_a):
            item = x * c_v + y
            val = vec.get(item, 0) if item < universe else 0
            total += val * lagrange_basis_at(FM, c_a, x, point)
        return total % FM.q

    for point in range(p.proof_len):
        want = sum(g([ext(vecs[0], point, y), ext(vecs[1], point, y)])
                   for y in range(c_v)) % FM.q
        assert proof.values[point] == want


def test_vcost_words_exact():
    p = params_for(16, 4, 4, 3, 2, g_purity(FM), 10 ** 9)
    st = DenseVerifier(p, random.Random(0))
    assert st.words == 3 * 4 + 2


def test_proof_serialization_roundtrip():
    p = params_for(4, 2, 2, 1, 2, g_power(FM, 2), 1000)
    f = [1, 2, 3, 4]
    proof = dense_prover_proof([f], p)
    blob = serialize_proof(proof, FM)
    field2, proof2 = deserialize_proof(blob)
    assert field2.q == FM.q
    assert proof2.values == proof.values
    assert proof.bits == len(proof.values) * FM.bits
    # a coefficient-level perturbation changes the values and gets rejected
    tampered = bytearray(blob)
    tampered[-1] ^= 1
    _, proof3 = deserialize_proof(bytes(tampered))
    st = dense_verifier_init(p, 3)
    for i, v in enumerate(f):
        dense_verifier_update(st, 0, i, v)
    assert dense_verify(st, proof3) is None


def test_params_validation():
    with pytest.raises(ConfigError):
        params_for(16, 2, 2, 1, 2, g_power(FM, 2), 100)  # grid too small
    with pytest.raises(ConfigError):
        DenseParams(Field(11), 4, 2, 2, 1, 2, g_power(Field(11), 2), 100)
    small = DenseParams(Field(101), 4, 2, 2, 1, 2, g_power(Field(101), 2), 10)
    with pytest.raises(ConfigError):
        small.check_prop1_field()
    assert default_value_bound(10, 3, 2) == 90
    assert prop1_min_field(2, 4, 10) == 2 * 2 * 14 ** 2 + 1
