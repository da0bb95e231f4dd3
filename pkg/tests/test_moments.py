import random

import pytest

from streamcert.harness import adversary, synthetic_stream
from streamcert.moments import (disj_online_run, disj_prescient_run,
                                fk_ama_mode, fk_footprint_mode,
                                fk_online_multi, fk_online_run,
                                fk_prescient_run, hamming_run,
                                inner_product_run, multiindex_run, subset_run)
from streamcert.protocol import ConfigError
from streamcert.streams import StreamUpdate as U, compute_meta

from conftest import freq_oracle, moment_oracle, strict_stream

N20 = 1 << 20
S, T = 0, 1


def tagged_sets(sa, sb):
    return [(S, U(i, 1)) for i in sa] + [(T, U(i, 1)) for i in sb]


# ------------------------------------------------------------------ online Fk


def test_fk_trivial():
    assert fk_online_run([U(0, 1), U(1, 1)], 16, 2, 4).value == 2
    assert fk_online_run([U(7, 3)], 16, 3, 4).value == 27
    assert fk_online_run([], N20, 2, 4).value == 0


def test_fk_online_collision_free_reduces_to_dense(rng):
    # large c_v makes collisions unlikely; the run has an empty list
    ups = strict_stream(rng, N20, 8, churn=0.0)
    r = fk_online_run(ups, N20, 2, 64, seed=2)
    assert r.accepted and r.value == moment_oracle(ups, 2)


def test_fk_online_with_forced_collisions(rng):
    # tiny c_v forces collisions, exercising the full MultiIndex path
    for trial in range(8):
        ups = strict_stream(rng, N20, 120, churn=0.4)
        for k in (2, 3):
            r = fk_online_run(ups, N20, k, 4, seed=trial)
            if r.accepted:
                assert r.value == moment_oracle(ups, k)
        assert fk_online_run(ups, N20, 2, 4, seed=trial).info is not None


def test_fk_rejects_cv_one(rng):
    with pytest.raises(ConfigError):
        fk_online_run([U(0, 1)], 16, 2, 1)


def test_fk_false_collision_list_rejected(rng):
    ups = strict_stream(rng, N20, 100, churn=0.0)
    rejected = 0
    for t in range(40):
        r = fk_online_run(ups, N20, 2, 4, seed=t,
                          prover=adversary("false-collision-list", t))
        rejected += r.rejected
    assert rejected == 40


def test_fk_multi_shares_one_reduction(rng):
    ups = strict_stream(rng, N20, 60)
    r = fk_online_multi(ups, N20, (1, 2, 3), 16, seed=4)
    assert r.accepted
    for k in (1, 2, 3):
        assert r.value[k] == moment_oracle(ups, k)


def test_fk_prescient(rng):
    assert fk_prescient_run([U(0, 1), U(1, 1)], 16, 2).value == 2
    assert fk_prescient_run([U(5, 3)], 16, 3).value == 27
    ups = strict_stream(rng, N20, 500, churn=0.0)
    r = fk_prescient_run(ups, N20, 2, seed=9)
    assert r.accepted and r.value == moment_oracle(ups, 2)


def test_fk_prescient_tampered_rejected(rng):
    ups = strict_stream(rng, N20, 50, churn=0.0)
    for t in range(30):
        r = fk_prescient_run(ups, N20, 2, seed=t,
                             prover=adversary("tamper-proof-polynomial", t))
        assert r.rejected


# ------------------------------------------------------- footprint / AMA modes


def nonstrict_stream(rng, n, touched):
    ups = []
    for i in rng.sample(range(n), touched):
        f = rng.randrange(-3, 4)
        ups.append(U(i, f if f else 1))
        if rng.random() < 0.4:
            ups.append(U(i, 5))
            ups.append(U(i, -5))
    rng.shuffle(ups)
    return ups


def test_footprint_counts_deleted_items(rng):
    # net-zero item still occupies its bucket in footprint accounting
    ups = [U(3, 2), U(3, -2), U(9, 1)]
    meta = compute_meta(ups, 64)
    assert meta.sparsity == 1 and meta.footprint == 2
    r = fk_footprint_mode(ups, 64, 2, 4, seed=1)
    assert r.accepted and r.value == 1


def test_footprint_matches_oracle_nonstrict(rng):
    for trial in range(6):
        ups = nonstrict_stream(rng, N20, 60)
        r = fk_footprint_mode(ups, N20, 2, 4, seed=trial)
        if r.accepted:
            assert r.value == moment_oracle(ups, 2)
    accepted = sum(fk_footprint_mode(nonstrict_stream(rng, N20, 40), N20, 2, 16,
                                     seed=t).accepted for t in range(9))
    assert accepted >= 6


def test_footprint_equals_online_on_strict_streams(rng):
    ups = strict_stream(rng, N20, 50, churn=0.0)
    a = fk_online_run(ups, N20, 2, 16, seed=3)
    b = fk_footprint_mode(ups, N20, 2, 16, seed=3)
    assert a.value == b.value == moment_oracle(ups, 2)


def test_ama_mode_matches_oracle_nonstrict(rng):
    for trial in range(6):
        ups = nonstrict_stream(rng, 1 << 10, 50)
        r = fk_ama_mode(ups, 1 << 10, 2, 4, seed=trial, coins_seed=trial)
        if r.accepted:
            assert r.value == moment_oracle(ups, 2)
    assert fk_ama_mode([], 1 << 10, 2, 4).value == 0


def test_ama_mode_never_wrong_on_fooling_pattern(rng):
    # items (1,2,3) with counts (2,8,-1) satisfy the strict purity identity
    # in one bucket, yet the stream is impure for the integer check
    base = [U(1, 2), U(2, 8), U(3, -1), U(77, 4)]
    want = moment_oracle(base, 2)
    for t in range(30):
        r = fk_ama_mode(base, 1 << 10, 2, 4, seed=t, coins_seed=t)
        if r.accepted:
            assert r.value == want


# ------------------------------------------------------------------ MultiIndex


def test_multiindex_basics(rng):
    ups = [U(i, i + 1) for i in range(10)]
    assert multiindex_run(ups, 64, [], 4).value == 1
    assert multiindex_run(ups, 64, [(2, 3), (5, 6)], 4).value == 1
    assert multiindex_run(ups, 64, [(2, 4)], 4).value == 0
    assert multiindex_run(ups, 64, [(60, 0)], 4).value == 1
    assert multiindex_run(ups, 64, [(3, 0)], 4).value == 0
    with pytest.raises(ConfigError):
        multiindex_run(ups, 64, [(2, 3), (2, 3)], 4)


def test_multiindex_hundred_claims_resolve_quickly(rng):
    resolved_fast = 0
    for seed in range(12):
        ups = strict_stream(random.Random(seed), N20, 400, churn=0.0)
        freq = freq_oracle(ups)
        claims = [(i, freq[i]) for i in sorted(freq)[:100]]
        r = multiindex_run(ups, N20, claims, 16, seed=seed)
        assert not r.rejected
        assert r.value == 1
        if r.info.get("stages_used", 99) <= 5:  # ceil(log16 100) + 3
            resolved_fast += 1
    assert resolved_fast >= 8


def test_multiindex_single_wrong_claim(rng):
    for seed in range(10):
        ups = strict_stream(random.Random(seed + 50), N20, 150, churn=0.0)
        freq = freq_oracle(ups)
        items = sorted(freq)[:40]
        claims = [(i, freq[i]) for i in items]
        bad = list(claims)
        bad[seed % len(bad)] = (bad[seed % len(bad)][0], bad[seed % len(bad)][1] + 1)
        r = multiindex_run(ups, N20, bad, 16, seed=seed)
        assert r.rejected or r.value == 0


# ---------------------------------------------------------------- disjointness


def disj_oracle(sa, sb):
    return 1 if not (set(sa) & set(sb)) else 0


def test_disj_trivial():
    assert disj_prescient_run(tagged_sets([1], [1]), 8).value == 0
    assert disj_prescient_run(tagged_sets([1], [2]), 8).value == 1
    assert disj_online_run(tagged_sets([1], [1]), 8, 4).value == 0
    assert disj_online_run(tagged_sets([1], [2]), 8, 4).value == 1
    assert disj_online_run([], 8, 4).value == 1


@pytest.mark.parametrize("mode", ["prescient", "online"])
def test_disj_random_instances(mode, rng):
    for trial in range(10):
        size = rng.randrange(5, 120)
        sa = rng.sample(range(N20), size)
        if trial % 2 == 0:
            sb = rng.sample(range(N20), size)
        else:
            sb = rng.sample(sa, size // 2 + 1) + rng.sample(range(N20), size // 2)
        ups = tagged_sets(sa, sb)
        want = disj_oracle(sa, sb)
        if mode == "prescient":
            r = disj_prescient_run(ups, N20, seed=trial)
        else:
            r = disj_online_run(ups, N20, 16, seed=trial)
        if r.accepted:
            assert r.value == want


def test_disj_adversary_never_proves_disjoint(rng):
    sa = rng.sample(range(N20), 40)
    sb = rng.sample(sa, 10) + rng.sample(range(N20), 30)
    ups = tagged_sets(sa, sb)
    for t in range(25):
        rp = disj_prescient_run(ups, N20, seed=t,
                                prover=adversary("tamper-proof-polynomial", t))
        assert rp.rejected or rp.value == 0
        ro = disj_online_run(ups, N20, 8, seed=t,
                             prover=adversary("false-collision-list", t))
        assert ro.rejected or ro.value == 0


# -------------------------------------------------------------------- subset


def test_subset_trivial():
    assert subset_run([(T, U(3, 1)), (T, U(5, 1))], 8, 4).value == 1  # empty X
    ups = [(S, U(3, 1)), (T, U(3, 1)), (T, U(5, 1))]
    assert subset_run(ups, 8, 4).value == 1
    ups = [(S, U(2, 1)), (T, U(3, 1)), (T, U(5, 1))]
    assert subset_run(ups, 8, 4).value == 0


def test_subset_random(rng):
    for trial in range(8):
        y = rng.sample(range(N20), 60)
        if trial % 2 == 0:
            x = rng.sample(y, 20)
            want = 1
        else:
            x = rng.sample(y, 10) + rng.sample(sorted(set(range(100)) - set(y)), 3)
            want = 0
        ups = [(S, U(i, 1)) for i in x] + [(T, U(i, 1)) for i in y]
        rng.shuffle(ups)
        r = subset_run(ups, N20, 8, seed=trial)
        if r.accepted:
            assert r.value == want


# ------------------------------------------- inner product / Hamming distance


def test_inner_product_and_hamming_trivial():
    e1 = [(S, U(1, 1)), (T, U(1, 1))]
    assert inner_product_run(e1, 8, 4).value == 1
    assert hamming_run(e1, 8, 4).value == 0
    disjoint = [(S, U(1, 1)), (T, U(2, 1))]
    assert inner_product_run(disjoint, 8, 4).value == 0
    assert hamming_run(disjoint, 8, 4).value == 2


def test_inner_product_random_sparse(rng):
    for trial in range(5):
        f = {i: rng.randrange(1, 5) for i in rng.sample(range(N20), 25)}
        g = {i: rng.randrange(1, 5) for i in rng.sample(range(N20), 25)}
        for i in rng.sample(sorted(f), 6):
            g[i] = rng.randrange(1, 5)
        ups = [(S, U(i, v)) for i, v in f.items()] + [(T, U(i, v)) for i, v in g.items()]
        rng.shuffle(ups)
        want = sum(f[i] * g.get(i, 0) for i in f)
        r = inner_product_run(ups, N20, 8, seed=trial)
        if r.accepted:
            assert r.value == want


def test_hamming_random_binary(rng):
    for trial in range(5):
        f = set(rng.sample(range(N20), 30))
        g = set(rng.sample(range(N20), 30)) | set(rng.sample(sorted(f), 8))
        ups = [(S, U(i, 1)) for i in f] + [(T, U(i, 1)) for i in g]
        rng.shuffle(ups)
        want = len(f ^ g)
        r = hamming_run(ups, N20, 8, seed=trial)
        if r.accepted:
            assert r.value == want
