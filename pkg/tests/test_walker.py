import numpy as np
import pytest

from ane.graph import parse_edge_lines, preprocess
from ane.walker import (
    AliasTable,
    PairBatch,
    WalkConfig,
    iter_batches,
    load_corpus,
    negative_sampler,
    positive_pairs,
    random_walks,
    save_corpus,
)


def brute_force_pairs(walk, s):
    out = []
    for i in range(len(walk)):
        for j in range(len(walk)):
            if i != j and abs(i - j) < s:
                out.append((walk[i], walk[j]))
    return sorted(out)


def ring_graph(n):
    return preprocess(parse_edge_lines([f"{i} {(i + 1) % n}" for i in range(n)]))


# alias table


def test_uniform_weights_quarter_probabilities():
    table = AliasTable([1, 1, 1, 1])
    np.testing.assert_allclose(table.outcome_probabilities(), 0.25)


def test_three_to_one_probabilities():
    table = AliasTable([3, 1])
    np.testing.assert_allclose(table.outcome_probabilities(), [0.75, 0.25], atol=1e-12)


def test_zero_weight_outcome_never_drawn():
    table = AliasTable([0, 5])
    np.testing.assert_array_equal(table.outcome_probabilities(), [0.0, 1.0])
    draws = table.sample_many(np.random.default_rng(0), 1000)
    assert (draws == 1).all()


def test_all_zero_weights_rejected():
    with pytest.raises(ValueError, match="positive"):
        AliasTable([0.0, 0.0])
    with pytest.raises(ValueError):
        AliasTable([])
    with pytest.raises(ValueError):
        AliasTable([1.0, -1.0])


def test_reconstruction_exact_random_weights():
    rng = np.random.default_rng(7)
    for _ in range(25):
        w = rng.random(int(rng.integers(1, 40))) * rng.integers(1, 100)
        w[rng.random(w.size) < 0.2] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
        table = AliasTable(w)
        np.testing.assert_allclose(
            table.outcome_probabilities(), w / w.sum(), atol=1e-12
        )


def test_three_to_one_empirical_within_three_sigma():
    rng = np.random.default_rng(11)
    draws = AliasTable([3, 1]).sample_many(rng, 10**6)
    ones = (draws == 1).sum()
    sigma = np.sqrt(10**6 * 0.25 * 0.75)
    assert abs(ones - 250_000) < 3 * sigma


def test_scalar_sample_matches_support():
    rng = np.random.default_rng(3)
    table = AliasTable([2.0, 0.0, 1.0])
    draws = {table.sample(rng) for _ in range(500)}
    assert draws == {0, 2}


# walk corpus


def test_two_cycle_walks_alternate():
    g = preprocess(parse_edge_lines(["a b"]))
    corpus = random_walks(g, WalkConfig(walks_per_node=3, walk_length=4, context_size=2))
    assert corpus.shape == (6, 4)
    for walk in corpus:
        assert walk[0] != walk[1]
        np.testing.assert_array_equal(walk[:2], walk[2:])


def test_star_graph_leaf_walks_visit_hub_on_odd_positions():
    g = preprocess(parse_edge_lines(["hub a", "hub b", "hub c"]))
    hub = g.index_of["hub"]
    corpus = random_walks(g, WalkConfig(walks_per_node=2, walk_length=6, context_size=2))
    for walk in corpus:
        if walk[0] != hub:
            assert (walk[1::2] == hub).all()


def test_every_node_starts_once_per_round():
    g = ring_graph(7)
    cfg = WalkConfig(walks_per_node=4, walk_length=5, context_size=2, seed=5)
    corpus = random_walks(g, cfg)
    assert corpus.shape == (28, 5)
    for r in range(4):
        starts = np.sort(corpus[r * 7 : (r + 1) * 7, 0])
        np.testing.assert_array_equal(starts, np.arange(7))


def test_walk_steps_follow_edges():
    g = preprocess(parse_edge_lines(["a b", "b c", "c d", "d a", "a c"]))
    corpus = random_walks(g, WalkConfig(walks_per_node=3, walk_length=10, context_size=2))
    for walk in corpus:
        for u, v in zip(walk[:-1], walk[1:]):
            assert g.has_edge(int(u), int(v))


def test_weighted_next_hop_frequency():
    # triangle with A-B weight 9 and A-C weight 1: from A, ~90% go to B;
    # about 1e5 walk steps in total, roughly half of which leave A
    g = preprocess(parse_edge_lines(["A B 9", "A C 1", "B C 1"]))
    a, b = g.index_of["A"], g.index_of["B"]
    cfg = WalkConfig(walks_per_node=334, walk_length=100, context_size=2, seed=2)
    corpus = random_walks(g, cfg)
    assert corpus.size > 100_000
    from_a = corpus[:, :-1].ravel() == a
    nxt = corpus[:, 1:].ravel()[from_a]
    n = nxt.size
    assert n > 30_000
    freq_b = (nxt == b).sum()
    sigma = np.sqrt(n * 0.9 * 0.1)
    assert abs(freq_b - 0.9 * n) < 3 * sigma


def test_walks_deterministic_by_seed():
    g = ring_graph(9)
    cfg = WalkConfig(walks_per_node=2, walk_length=12, context_size=3, seed=42)
    np.testing.assert_array_equal(random_walks(g, cfg), random_walks(g, cfg))


def test_walk_config_validation():
    with pytest.raises(ValueError):
        WalkConfig(walks_per_node=0)
    with pytest.raises(ValueError):
        WalkConfig(walk_length=1)
    with pytest.raises(ValueError):
        WalkConfig(context_size=10, walk_length=10)
    with pytest.raises(ValueError):
        WalkConfig(context_size=0)


# positive pairs


def test_window_pairs_three_walk():
    corpus = np.array([[0, 1, 2]])
    t, c = positive_pairs(corpus, context_size=2)
    assert sorted(zip(t.tolist(), c.tolist())) == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_window_one_gives_no_pairs():
    t, c = positive_pairs(np.array([[0, 1, 2, 3]]), context_size=1)
    assert t.size == 0 and c.size == 0


def test_window_pairs_match_enumeration_oracle():
    corpus = np.array([[4, 7, 1, 3]])
    t, c = positive_pairs(corpus, context_size=3)
    got = sorted(zip(t.tolist(), c.tolist()))
    assert len(got) == 10
    assert got == brute_force_pairs([4, 7, 1, 3], 3)


def test_window_pairs_oracle_random_corpus():
    rng = np.random.default_rng(8)
    corpus = rng.integers(0, 6, size=(5, 9))
    for s in (2, 4, 8):
        t, c = positive_pairs(corpus, context_size=s)
        got = sorted(zip(t.tolist(), c.tolist()))
        want = sorted(p for walk in corpus for p in brute_force_pairs(walk.tolist(), s))
        assert got == want


def test_pair_symmetry():
    rng = np.random.default_rng(9)
    corpus = rng.integers(0, 5, size=(3, 7))
    t, c = positive_pairs(corpus, context_size=4)
    forward = sorted(zip(t.tolist(), c.tolist()))
    backward = sorted(zip(c.tolist(), t.tolist()))
    assert forward == backward


def test_empty_corpus_rejected():
    with pytest.raises(ValueError, match="empty"):
        positive_pairs(np.empty((0, 5), dtype=np.int64), 3)


# negative sampler


def test_negative_sampler_exact_powers():
    # degrees [1, 16]: 16^(3/4) = 8, so probabilities [1/9, 8/9]
    g = parse_edge_lines([f"b x{i}" for i in range(16)] + ["a x0"])
    degs = g.degrees()
    table = negative_sampler(g)
    probs = table.outcome_probabilities()
    a, b = g.index_of["a"], g.index_of["b"]
    assert degs[a] == 1.0 and degs[b] == 16.0
    assert probs[b] / probs[a] == pytest.approx(8.0, abs=1e-12)


def test_negative_sampler_uniform_on_regular_graph():
    table = negative_sampler(ring_graph(8))
    np.testing.assert_allclose(table.outcome_probabilities(), 1 / 8, atol=1e-12)


def test_negative_sampler_empirical_frequency():
    g = preprocess(parse_edge_lines(["a b", "a c", "b c", "c d", "c e", "c f"]))
    table = negative_sampler(g)
    want = table.outcome_probabilities()
    draws = table.sample_many(np.random.default_rng(1), 10**6)
    counts = np.bincount(draws, minlength=g.num_nodes)
    sigma = np.sqrt(10**6 * want * (1 - want))
    assert (np.abs(counts - 10**6 * want) < 3 * sigma + 1).all()


# batches


def test_batch_sizes_partial_tail():
    targets = np.arange(7, dtype=np.int32)
    contexts = np.arange(7, dtype=np.int32)
    table = AliasTable([1, 1, 1])
    rng = np.random.default_rng(0)
    sizes = [len(b) for b in iter_batches(targets, contexts, table, 5, 3, rng)]
    assert sizes == [3, 3, 1]


def test_batches_have_k_negatives_and_cover_all_pairs():
    targets = np.arange(10, dtype=np.int32)
    contexts = (np.arange(10, dtype=np.int32) + 1) % 10
    table = AliasTable([1, 2, 3])
    rng = np.random.default_rng(4)
    seen = []
    for batch in iter_batches(targets, contexts, table, 5, 4, rng):
        assert isinstance(batch, PairBatch)
        assert batch.negatives.shape == (len(batch), 5)
        assert (batch.negatives < 3).all()
        seen.extend(batch.targets.tolist())
    assert sorted(seen) == list(range(10))


def test_batches_deterministic_by_seed():
    targets = np.arange(20, dtype=np.int32)
    contexts = targets[::-1].copy()
    table = AliasTable([1, 1, 1, 1])

    def collect(seed):
        rng = np.random.default_rng(seed)
        return [
            (b.targets.tolist(), b.contexts.tolist(), b.negatives.tolist())
            for b in iter_batches(targets, contexts, table, 3, 6, rng)
        ]

    assert collect(5) == collect(5)
    assert collect(5) != collect(6)


def test_batch_validation():
    table = AliasTable([1.0])
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        next(iter_batches(np.zeros(3, np.int32), np.zeros(3, np.int32), table, 0, 2, rng))
    with pytest.raises(ValueError):
        next(iter_batches(np.zeros(3, np.int32), np.zeros(3, np.int32), table, 2, 0, rng))


def test_corpus_cache_roundtrip(tmp_path):
    g = ring_graph(5)
    corpus = random_walks(g, WalkConfig(walks_per_node=2, walk_length=6, context_size=2))
    path = tmp_path / "walks.txt"
    save_corpus(corpus, path)
    np.testing.assert_array_equal(load_corpus(path), corpus)
