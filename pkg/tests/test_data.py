import warnings

import numpy as np
import pytest

from graphdr.data import (ingest_citation_files, load_container, make_split, normalize_adjacency,
                          planted_partition_dataset, save_container, write_citation_files)
from graphdr.linalg import SparseAdjacency

CONTENT = """\
31336\t0\t1\t0\t1\tNeural_Networks
1061127\t1\t0\t0\t0\tRule_Learning
1106406\t0\t0\t1\t0\tReinforcement_Learning
13195\t0\t0\t1\t1\tNeural_Networks
"""
CITES = """\
31336\t1061127
1061127\t31336
13195\t1106406
13195\t13195
99999\t31336
"""


@pytest.fixture
def toy_files(tmp_path):
    c, e = tmp_path / "toy.content", tmp_path / "toy.cites"
    c.write_text(CONTENT)
    e.write_text(CITES)
    return c, e


def test_ingest_parses_features_labels_edges(toy_files):
    with pytest.warns(UserWarning, match="1 citation"):
        ds = ingest_citation_files(*toy_files)
    assert ds.name == "toy"
    assert ds.node_ids == ("31336", "1061127", "1106406", "13195")
    assert ds.class_names == ("Neural_Networks", "Reinforcement_Learning", "Rule_Learning")
    np.testing.assert_array_equal(ds.labels, [0, 2, 1, 0])
    np.testing.assert_array_equal(ds.dense_features(), [[0, 1, 0, 1], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 1, 1]])
    # reciprocal citation collapses, self-citation dropped, dangling counted
    assert ds.num_edges == 2 and ds.dangling_edges == 1
    assert ds.edges.is_pattern_symmetric()
    dense = ds.edges.to_dense()
    assert dense[0, 1] == dense[1, 0] == 1 and dense[3, 2] == 1 and np.trace(dense) == 0


@pytest.mark.parametrize("content,match", [
    ("a\t0\t1\tX\na\t1\t0\tY\n", "duplicate"),
    ("a\t0\t2\tX\n", "0 or 1"),
    ("a\t0\t1\tX\nb\t1\tY\n", "word flags"),
    ("a\tX\n", "expected id"),
])
def test_ingest_rejects_malformed_content(tmp_path, content, match):
    (tmp_path / "c").write_text(content)
    (tmp_path / "e").write_text("")
    with pytest.raises(ValueError, match=match):
        ingest_citation_files(tmp_path / "c", tmp_path / "e")


def test_ingest_unknown_class_with_fixed_names(toy_files):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ValueError, match="unknown class"):
            ingest_citation_files(*toy_files, class_names=("Neural_Networks",))


def test_normalize_adjacency_matches_dense_formula():
    adj = planted_partition_dataset(seed=2).edges
    a_hat = adj.to_dense() + np.eye(adj.n)
    d = a_hat.sum(axis=1)
    expected = a_hat / np.sqrt(np.outer(d, d))
    np.testing.assert_allclose(normalize_adjacency(adj).to_dense(), expected, rtol=0, atol=1e-15)


def test_normalize_requires_symmetric_pattern():
    with pytest.raises(ValueError, match="symmetric"):
        normalize_adjacency(SparseAdjacency.from_edges(3, [0], [1]))


def test_split_rule_in_node_order():
    ds = planted_partition_dataset(n_per_class=40, num_classes=3, seed=5)
    split = make_split(ds, per_class=5, n_val=20, n_test=30)
    assert split.sizes() == (15, 20, 30)
    for k in range(3):
        members = np.flatnonzero(ds.labels == k)
        np.testing.assert_array_equal(np.flatnonzero(split.train & (ds.labels == k)), members[:5])
    rest = np.flatnonzero(~split.train)
    np.testing.assert_array_equal(np.flatnonzero(split.val), rest[:20])
    free = np.flatnonzero(~(split.train | split.val))
    np.testing.assert_array_equal(np.flatnonzero(split.test), free[-30:])
    assert not np.any(split.train & split.val) and not np.any(split.val & split.test)


def test_split_too_large():
    ds = planted_partition_dataset(n_per_class=10, num_classes=2)
    with pytest.raises(ValueError, match="needs"):
        make_split(ds, per_class=5, n_val=5, n_test=20)


def test_container_roundtrip(tmp_path):
    ds = planted_partition_dataset(n_per_class=20, num_classes=3, seed=1)
    split = make_split(ds, 3, 10, 20)
    save_container(ds, split, tmp_path / "cache")
    back, split2 = load_container(tmp_path / "cache")
    assert back.name == ds.name and back.node_ids == ds.node_ids and back.class_names == ds.class_names
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.dense_features(), ds.dense_features())
    np.testing.assert_array_equal(back.edges.to_dense(), ds.edges.to_dense())
    for a, b in zip((split.train, split.val, split.test), (split2.train, split2.val, split2.test)):
        np.testing.assert_array_equal(a, b)
    head = (tmp_path / "cache" / "nodes.tsv").read_text().splitlines()[:2]
    assert head[0].startswith("# graphdr-nodes") and head[1] == "index\tnode_id\tlabel\tfeatures"


def test_citation_file_roundtrip(tmp_path):
    ds = planted_partition_dataset(n_per_class=15, num_classes=4, seed=9)
    write_citation_files(ds, tmp_path / "s.content", tmp_path / "s.cites")
    back = ingest_citation_files(tmp_path / "s.content", tmp_path / "s.cites")
    np.testing.assert_array_equal(back.edges.to_dense(), ds.edges.to_dense())
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_planted_partition_is_homophilous():
    ds = planted_partition_dataset(n_per_class=60, num_classes=3, seed=0)
    same = ds.labels[ds.edges.rows] == ds.labels[ds.edges.indices]
    assert same.mean() > 0.7
    assert np.all(np.asarray(ds.features.sum(axis=1)).ravel() == 8)
