import random

import pytest

from streamcert.harness import adversary
from streamcert.pointqueries import heavyhitters_run, pq_run, selection_run
from streamcert.protocol import Chunk, ConfigError
from streamcert.streams import StreamUpdate

from conftest import freq_oracle, strict_stream


def test_pq_trivial():
    assert pq_run([StreamUpdate(5, 7)], 64, 5, c_a=4, c_v=4).value == 7
    assert pq_run([StreamUpdate(5, 7)], 64, 9, c_a=4, c_v=4).value == 0


def test_pq_matches_frequency_map(rng):
    n = 1 << 16
    ups = strict_stream(rng, n, 1000)
    freq = freq_oracle(ups)
    items = list(freq)
    for t in range(50):
        query = rng.choice(items) if t % 2 == 0 else rng.randrange(n)
        r = pq_run(ups, n, query, c_a=32, c_v=32, seed=t)
        if r.accepted:
            assert r.value == freq.get(query, 0)
    # completeness at these parameters is essentially certain
    accepted = sum(pq_run(ups, n, rng.choice(items), c_a=32, c_v=32, seed=t).accepted
                   for t in range(20))
    assert accepted >= 16


def test_pq_config_validation():
    with pytest.raises(ConfigError):
        pq_run([StreamUpdate(i, 1) for i in range(20)], 64, 3, c_a=4, c_v=4)


def test_pq_wrong_answer_rejected():
    ups = [StreamUpdate(5, 7), StreamUpdate(9, 2)]
    for t in range(100):
        r = pq_run(ups, 64, 5, c_a=4, c_v=4, seed=t,
                   prover=adversary("wrong-answer", t))
        assert r.rejected


def test_pq_oversize_and_misrouted_openings_rejected():
    ups = [StreamUpdate(i, 1) for i in range(16)]

    def oversize(honest):
        def finish(query):
            entries = [(i, 1) for i in range(50)]  # > 10 * c_a
            return [Chunk("opening", entries, 1)]
        honest.finish = finish
        return honest

    r = pq_run(ups, 64, 3, c_a=4, c_v=16, seed=1, prover=oversize)
    assert r.rejected


def test_selection_trivial():
    for rho in range(1, 6):
        assert selection_run([StreamUpdate(0, 5)], 8, rho, c_a=8, c_v=8).value == 0
    ups = [StreamUpdate(0, 1), StreamUpdate(1, 1), StreamUpdate(2, 1)]
    assert selection_run(ups, 8, 2, c_a=8, c_v=8).value == 1


def test_selection_matches_sort_oracle(rng):
    n = 256
    ups = strict_stream(rng, n, 25, churn=0.0)
    freq = freq_oracle(ups)
    total = sum(freq.values())
    expanded = []
    for i in sorted(freq):
        expanded.extend([i] * freq[i])
    for rho in range(1, total + 1, max(1, total // 17)):
        r = selection_run(ups, n, rho, c_a=64, c_v=8, seed=rho)
        if r.accepted:
            assert r.value == expanded[rho - 1]
    accepted = sum(selection_run(ups, n, rho, c_a=64, c_v=8, seed=rho).accepted
                   for rho in range(1, min(total, 20)))
    assert accepted >= 15


def test_selection_rank_out_of_range():
    assert selection_run([StreamUpdate(0, 5)], 8, 6, c_a=8, c_v=8).rejected


def test_selection_wrong_answer_rejected(rng):
    ups = strict_stream(rng, 64, 10, churn=0.0)
    for t in range(30):
        r = selection_run(ups, 64, 3, c_a=32, c_v=8, seed=t,
                          prover=adversary("wrong-answer", t))
        assert r.rejected


def hh_oracle(ups, phi):
    freq = freq_oracle(ups)
    total = sum(freq.values())
    return frozenset(i for i, f in freq.items() if f >= phi * total)


def test_hh_trivial():
    assert heavyhitters_run([StreamUpdate(0, 10)], 8, 0.5, c_a=8, c_v=8).value == {0}
    uniform = [StreamUpdate(i, 1) for i in range(100)]
    assert heavyhitters_run(uniform, 128, 0.5, c_a=64, c_v=16).value == frozenset()


@pytest.mark.parametrize("mode", ["openings", "multiindex"])
def test_hh_zipf_matches_exact_counts(mode, rng):
    n = 1 << 12
    ups = []
    for rank in range(1, 40):
        item = rng.randrange(n)
        ups.append(StreamUpdate(item, max(1, 400 // rank)))
    rng.shuffle(ups)
    phi = 0.05
    want = hh_oracle(ups, phi)
    r = heavyhitters_run(ups, n, phi, c_a=128, c_v=8, seed=3, mode=mode)
    assert r.accepted and r.value == want


def test_hh_omitted_heavy_hitter_rejected(rng):
    ups = [StreamUpdate(0, 50), StreamUpdate(1, 40)] + \
        [StreamUpdate(i, 1) for i in range(2, 12)]
    for t in range(50):
        r = heavyhitters_run(ups, 16, 0.3, c_a=16, c_v=8, seed=t,
                             prover=adversary("omitted-heavy-hitter", t))
        assert r.rejected


def test_derived_dyadic_sparsity_bound(rng):
    from streamcert.streams import compute_meta, dyadic_decompose, dyadic_levels, dyadic_universe
    n = 256
    ups = strict_stream(rng, n, 30)
    levels = dyadic_levels(n)
    derived = [StreamUpdate(node, u.delta) for u in ups
               for node in dyadic_decompose(u.item, n)]
    meta = compute_meta(derived, dyadic_universe(n))
    m = len(freq_oracle(ups))
    assert meta.sparsity <= m * (levels + 1)


def test_selection_vcost_single_bucket_state(rng):
    # space does not grow with the number of parallel openings
    ups = strict_stream(rng, 256, 20, churn=0.0)
    costs = set()
    for rho in (1, 5, 9):
        r = selection_run(ups, 256, rho, c_a=64, c_v=8, seed=7)
        if r.accepted:
            costs.add(r.cost.vcost_words)
    assert len(costs) == 1
    assert costs.pop() < 8 + 4 + 16  # c_v + hash + counters
