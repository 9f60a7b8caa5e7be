import numpy as np
import pytest

from cipherclust.clustering import Cluster, ClusterSet, distribute
from cipherclust.index import ingest
from cipherclust.search import (
    Abstract,
    all_cluster_ids,
    build_abstracts,
    format_results,
    prune,
    read_abstracts,
    search,
    write_abstracts,
)

from conftest import random_index


def small_cluster_set():
    idx = ingest(
        [
            ("d1", [(b"net", 3), (b"router", 2)]),
            ("d2", [(b"net", 5), (b"cake", 1)]),
            ("d3", [(b"cake", 7), (b"flour", 4)]),
        ]
    )
    clusters = (
        Cluster(center=b"net", tokens=(b"net", b"router")),
        Cluster(center=b"cake", tokens=(b"cake", b"flour")),
    )
    return ClusterSet(clusters=clusters, index=idx, k_requested=2)


class TestBuildAbstracts:
    def test_small_cluster_kept_whole(self):
        cs = small_cluster_set()
        abstracts = build_abstracts(cs, a=10)
        assert len(abstracts[0].entries) == 2
        assert abstracts[0].frequency_of(b"net") == 8

    def test_cardinality_cut(self):
        cs = small_cluster_set()
        abstracts = build_abstracts(cs, a=1)
        assert [len(a.entries) for a in abstracts] == [1, 1]
        # net total 8 beats router 2; cake 8 beats flour 4
        assert abstracts[0].entries[0][0] == b"net"
        assert abstracts[1].entries[0][0] == b"cake"

    def test_boundary_tie_keeps_smaller_ciphertext(self):
        idx = ingest([("d1", [(b"aa", 5), (b"zz", 5), (b"mm", 9)])])
        cs = ClusterSet(
            clusters=(Cluster(center=b"mm", tokens=(b"aa", b"mm", b"zz")),),
            index=idx,
            k_requested=1,
        )
        abstracts = build_abstracts(cs, a=2)
        assert [t for t, _ in abstracts[0].entries] == [b"mm", b"aa"]

    def test_a_must_be_positive(self):
        with pytest.raises(ValueError):
            build_abstracts(small_cluster_set(), a=0)


class TestPrune:
    def test_only_matching_cluster(self):
        abstracts = build_abstracts(small_cluster_set(), a=10)
        assert prune([b"router"], abstracts, c=3) == [0]

    def test_fallback_to_all_clusters(self):
        abstracts = build_abstracts(small_cluster_set(), a=10)
        assert prune([b"unknown"], abstracts, c=3) == [0, 1]

    def test_top_c_by_score(self):
        abstracts = [
            Abstract(cluster_id=0, entries=((b"q", 5),)),
            Abstract(cluster_id=1, entries=((b"q", 3),)),
            Abstract(cluster_id=2, entries=((b"q", 1),)),
        ]
        assert prune([b"q"], abstracts, c=2) == [0, 1]

    def test_c_must_be_positive(self):
        with pytest.raises(ValueError):
            prune([b"q"], [], c=0)


class TestSearch:
    def test_frequency_order(self):
        idx = ingest([("d1", [(b"T", 3)]), ("d2", [(b"T", 5)])])
        cs = ClusterSet(
            clusters=(Cluster(center=b"T", tokens=(b"T",)),), index=idx, k_requested=1
        )
        result = search([b"T"], cs, [0], cutoff=10)
        assert result.ranked == (("d2", 5), ("d1", 3))

    def test_no_hits_gives_empty_ranking(self):
        cs = small_cluster_set()
        result = search([b"missing"], cs, [0, 1], cutoff=10)
        assert result.ranked == ()

    def test_additive_scores(self):
        idx = ingest([("d1", [(b"a", 3), (b"b", 4)]), ("d2", [(b"c", 5)])])
        cs = ClusterSet(
            clusters=(Cluster(center=b"a", tokens=(b"a", b"b", b"c")),),
            index=idx,
            k_requested=1,
        )
        result = search([b"a", b"b", b"c"], cs, [0], cutoff=10)
        assert result.ranked == (("d1", 7), ("d2", 5))

    def test_cutoff(self):
        idx = ingest([(f"d{i}", [(b"T", i + 1)]) for i in range(20)])
        cs = ClusterSet(
            clusters=(Cluster(center=b"T", tokens=(b"T",)),), index=idx, k_requested=1
        )
        assert len(search([b"T"], cs, [0], cutoff=10).ranked) == 10

    def test_selected_must_be_nonempty(self):
        with pytest.raises(ValueError):
            search([b"T"], small_cluster_set(), [], cutoff=10)


class TestPrunedVersusFull:
    def test_full_width_prune_equals_whole_index_search(self):
        rng = np.random.default_rng(42)
        for _ in range(15):
            index, _ = random_index(rng, int(rng.integers(4, 30)), int(rng.integers(2, 12)))
            tokens = index.tokens()
            centers = tokens[: int(rng.integers(1, min(5, len(tokens)) + 1))]
            cs = distribute(index, centers)
            abstracts = build_abstracts(cs, a=10_000)  # abstracts hold every token
            query = [tokens[i] for i in rng.choice(len(tokens), size=3, replace=False)]
            selected = prune(query, abstracts, c=cs.k_used)
            pruned = search(query, cs, selected, cutoff=10)
            full = search(query, cs, all_cluster_ids(cs), cutoff=10)
            assert pruned.ranked == full.ranked

    def test_results_invariant_under_cluster_relabeling(self):
        rng = np.random.default_rng(43)
        index, _ = random_index(rng, 20, 8)
        tokens = index.tokens()
        cs = distribute(index, tokens[:4])
        relabeled = ClusterSet(
            clusters=tuple(reversed(cs.clusters)), index=index, k_requested=cs.k_requested
        )
        query = tokens[5:8]
        for clusters in (cs, relabeled):
            abstracts = build_abstracts(clusters, a=10_000)
            selected = prune(query, abstracts, c=2)
            result = search(query, clusters, selected, cutoff=10)
            if clusters is cs:
                base = result.ranked
            else:
                assert result.ranked == base


class TestAbstractsFile:
    def test_round_trip(self, tmp_path):
        abstracts = build_abstracts(small_cluster_set(), a=10)
        path = tmp_path / "abstracts.jsonl"
        write_abstracts(abstracts, path)
        assert read_abstracts(path) == abstracts

    def test_format_results(self):
        idx = ingest([("d1", [(b"T", 3)]), ("d2", [(b"T", 5)])])
        cs = ClusterSet(
            clusters=(Cluster(center=b"T", tokens=(b"T",)),), index=idx, k_requested=1
        )
        text = format_results(search([b"T"], cs, [0], cutoff=10))
        assert text == "1\td2\t5\n2\td1\t3\n"
