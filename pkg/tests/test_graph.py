#!/usr/bin/env python

import os
import shutil
import tempfile
import unittest

import numpy as np

from multiplex.errors import DomainError, LabelConflictError, ParseError, RangeError
from multiplex.graph import (
    LabelMatrix, MultilayerGraph, SparseSym, add_noise_layers, degrees, load_labels,
    load_multilayer, sample_known_labels, split_labels, write_labels, write_multilayer
)

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')

class TempDirTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def write(self, name, text):
        path = os.path.join(self.tmp, name)

        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)

        return path

class SparseSymTestCase(unittest.TestCase):
    """
    Symmetric storage.
    """
    def test_weight_is_symmetric(self):
        g = SparseSym.from_edges(4, [0, 2], [3, 1], [1.5, 0.5])

        assert g.weight(0, 3) == g.weight(3, 0) == 1.5
        assert g.weight(1, 2) == g.weight(2, 1) == 0.5
        assert g.weight(0, 1) == 0.0

    def test_iteration_yields_both_orientations(self):
        g = SparseSym.from_edges(3, [0], [1], [2.0])

        self.assertEqual(sorted(g), [(0, 1, 2.0), (1, 0, 2.0)])

    def test_zero_weights_are_absent(self):
        g = SparseSym.from_edges(3, [0, 1], [1, 2], [0.0, 1.0])

        assert g.nnz == 1

    def test_self_loops_need_the_flag(self):
        with self.assertRaises(DomainError):
            SparseSym(3, np.array([1]), np.array([1]), np.array([1.0]))

        g = SparseSym(3, np.array([1]), np.array([1]), np.array([1.0]), allow_self_loops=True)

        assert g.weight(1, 1) == 1.0

    def test_csr_is_symmetric(self):
        g = SparseSym.from_edges(5, [0, 1, 3], [4, 2, 1], [1.0, 2.0, 3.0])
        dense = g.to_csr().toarray()

        np.testing.assert_array_equal(dense, dense.T)

class LoadMultilayerTestCase(TempDirTestCase):
    """
    Edge-list parsing.
    """
    def test_fixture(self):
        g = load_multilayer(os.path.join(FIXTURES, 'two_layers.tsv'))

        assert g.n == 5
        assert g.K == 2
        self.assertEqual(g.layer_names, ('social', 'work'))

        social, work = g.layers

        # (0, 1) and (1, 0) unify by max; repeated (1, 2) records sum
        self.assertEqual(social.edge_set(), {(0, 1, 1.0), (1, 2, 3.0)})
        self.assertEqual(work.edge_set(), {(0, 2, 1.5), (2, 3, 0.25)})

    def test_sum_unification(self):
        g = load_multilayer(os.path.join(FIXTURES, 'two_layers.tsv'), unification='sum')

        assert g.layers[0].weight(0, 1) == 1.5

    def test_symmetric_duplicates_collapse(self):
        path = self.write('dup.tsv', '0 0 1 1.0\n0 1 0 1.0\n')
        g = load_multilayer(path)

        assert g.K == 1
        self.assertEqual(g.layers[0].edge_set(), {(0, 1, 1.0)})

    def test_counts_layers_and_nodes(self):
        path = self.write('two.tsv', '0\t0\t1\t1.0\n1\t1\t2\t1.0\n')
        g = load_multilayer(path)

        assert (g.K, g.n) == (2, 3)

    def test_negative_weight(self):
        path = self.write('neg.tsv', '0 0 1 -2.0\n')

        with self.assertRaises(DomainError):
            load_multilayer(path)

    def test_malformed_line_reports_line_number(self):
        with self.assertRaises(ParseError) as cm:
            load_multilayer(os.path.join(FIXTURES, 'malformed.tsv'))

        assert cm.exception.line_number == 2

    def test_node_outside_declared_range(self):
        path = self.write('range.tsv', '#nodes 3\n0 0 3 1.0\n')

        with self.assertRaises(RangeError):
            load_multilayer(path)

    def test_n_hint(self):
        path = self.write('hint.tsv', '0 0 1 1.0\n')

        assert load_multilayer(path, n_hint=10).n == 10

    def test_header_declares_empty_layers(self):
        path = self.write('empty_layer.tsv', '#nodes 3 #layers 2\na 0 1 1.0\n')
        g = load_multilayer(path)

        assert g.K == 2
        assert g.layers[1].nnz == 0

    def test_declared_layers_around_a_gap_in_the_ids(self):
        g = load_multilayer(os.path.join(FIXTURES, 'gapped_layers.tsv'))

        self.assertEqual(g.layer_names, ('0', '2', '1'))
        self.assertEqual([layer.nnz for layer in g.layers], [1, 1, 0])
        self.assertEqual(g.layers[1].edge_set(), {(1, 2, 5.0)})

    def test_write_and_reload(self):
        g = load_multilayer(os.path.join(FIXTURES, 'two_layers.tsv'))
        path = os.path.join(self.tmp, 'out.tsv')
        write_multilayer(g, path)
        again = load_multilayer(path)

        assert again.n == g.n
        self.assertEqual(again.layer_names, g.layer_names)

        for a, b in zip(g.layers, again.layers):
            self.assertEqual(a.edge_set(), b.edge_set())

    def test_comment_line_is_skipped_on_reload(self):
        g = load_multilayer(os.path.join(FIXTURES, 'two_layers.tsv'))
        path = os.path.join(self.tmp, 'out.tsv')
        write_multilayer(g, path, comment='{"seed": 4}')

        with open(path, encoding='utf-8') as f:
            self.assertEqual(f.readline(), '# {"seed": 4}\n')

        again = load_multilayer(path)

        assert again.n == 5
        self.assertEqual(again.layers[0].edge_set(), g.layers[0].edge_set())

class LabelsTestCase(TempDirTestCase):
    """
    Label files and LabelMatrix.
    """
    def test_one_hot(self):
        path = self.write('l.tsv', '0 A\n1 B\n2 A\n')
        labels = load_labels(path, 3)

        assert labels.m == 2
        self.assertEqual(labels.classes, ('A', 'B'))
        np.testing.assert_array_equal(labels.one_hot, [[1, 0], [0, 1], [1, 0]])

    def test_fixture_keeps_unlabeled_rows_empty(self):
        labels = load_labels(os.path.join(FIXTURES, 'labels.tsv'), 5)

        np.testing.assert_array_equal(labels.one_hot.sum(axis=1), [1, 1, 1, 0, 1])
        np.testing.assert_array_equal(labels.vector(), [0, 1, 0, -1, 1])

    def test_empty_file(self):
        path = self.write('empty.tsv', '')

        with self.assertRaises(DomainError) as cm:
            load_labels(path, 3)

        assert 'no labels' in str(cm.exception)

    def test_conflict(self):
        path = self.write('conflict.tsv', '0 A\n0 B\n')

        with self.assertRaises(LabelConflictError):
            load_labels(path, 3)

    def test_out_of_range(self):
        path = self.write('range.tsv', '7 A\n')

        with self.assertRaises(RangeError):
            load_labels(path, 3)

    def test_fixed_class_order(self):
        path = self.write('truth.tsv', '0 B\n1 A\n2 C\n')
        labels = load_labels(path, 3, classes=('A', 'B'))

        self.assertEqual(labels.classes, ('A', 'B', 'C'))
        np.testing.assert_array_equal(labels.vector(), [1, 0, 2])

    def test_write_labels(self):
        labels = LabelMatrix.from_vector([0, -1, 1, 0], classes=('x', 'y'))
        path = os.path.join(self.tmp, 'out.tsv')
        write_labels(labels, path)

        with open(path, encoding='utf-8') as f:
            self.assertEqual(f.read(), '0\tx\n2\ty\n3\tx\n')

    def test_write_labels_with_comment(self):
        labels = LabelMatrix.from_vector([0, -1, 1], classes=('x', 'y'))
        path = os.path.join(self.tmp, 'out.tsv')
        write_labels(labels, path, comment='{"seed": 1}')

        with open(path, encoding='utf-8') as f:
            self.assertEqual(f.read(), '# {"seed": 1}\n0\tx\n2\ty\n')

        np.testing.assert_array_equal(load_labels(path, 3, classes=('x', 'y')).vector(), [0, -1, 1])

class SplitLabelsTestCase(unittest.TestCase):
    """
    Cyclic 5-fold split.
    """
    def setUp(self):
        self.labels = LabelMatrix.from_vector([0, 1] * 5 + [-1] * 4)

    def test_ten_labels(self):
        split = split_labels(self.labels, 0, rng_seed=3)

        assert len(split.test) == 2
        assert len(split.train) == 8
        assert len(split.held_out) == 4

    def test_deterministic(self):
        a = split_labels(self.labels, 2, rng_seed=11)
        b = split_labels(self.labels, 2, rng_seed=11)

        np.testing.assert_array_equal(a.test, b.test)
        np.testing.assert_array_equal(a.train, b.train)

    def test_folds_partition_the_labeled_set(self):
        for stratified in (True, False):
            tests = [split_labels(self.labels, k, rng_seed=5, stratified=stratified).test for k in range(5)]
            union = np.concatenate(tests)

            assert len(union) == len(set(union.tolist()))
            np.testing.assert_array_equal(np.sort(union), self.labels.nodes)

    def test_sets_are_disjoint_and_cover_all_nodes(self):
        split = split_labels(self.labels, 1, rng_seed=0)
        everything = np.concatenate([split.train, split.test, split.held_out])

        np.testing.assert_array_equal(np.sort(everything), np.arange(self.labels.n))

    def test_stratified_folds_see_every_class(self):
        for k in range(5):
            split = split_labels(self.labels, k, rng_seed=9)
            train_classes = set(self.labels.vector()[split.train].tolist())

            self.assertEqual(train_classes, {0, 1})

    def test_singleton_class_always_trains(self):
        labels = LabelMatrix.from_vector([0, 0, 0, 0, 0, 1])

        for k in range(5):
            assert 5 in split_labels(labels, k, rng_seed=1).train.tolist()

    def test_bad_fold_index(self):
        with self.assertRaises(RangeError):
            split_labels(self.labels, 5, rng_seed=0)

class DegreesTestCase(unittest.TestCase):
    def test_single_edge(self):
        g = SparseSym.from_edges(3, [0], [1], [2.0])

        np.testing.assert_array_equal(degrees(g), [2, 2, 0])

    def test_triangle(self):
        g = SparseSym.from_edges(3, [0, 1, 0], [1, 2, 2], [1.0, 1.0, 1.0])

        np.testing.assert_array_equal(degrees(g), [2, 2, 2])

    def test_empty(self):
        np.testing.assert_array_equal(degrees(SparseSym.empty(4)), np.zeros(4))

class SamplingTestCase(unittest.TestCase):
    def test_sample_known_labels(self):
        truth = LabelMatrix.from_vector(np.repeat([0, 1, 2], 400))
        known = sample_known_labels(truth, 0.2, rng_seed=4)

        np.testing.assert_array_equal(np.bincount(known.classes_of), [80, 80, 80])
        assert np.all(truth.vector()[known.nodes] == known.classes_of)

    def test_noise_layers_keep_degree_multiset(self):
        rng = np.random.default_rng(0)
        i = rng.integers(0, 30, 60)
        j = rng.integers(0, 30, 60)
        layer = SparseSym.from_edges(30, i, j, rng.uniform(0.5, 2.0, 60))
        g = add_noise_layers(MultilayerGraph(30, (layer,)), 2, rng_seed=1)

        assert g.K == 3
        self.assertEqual(g.layer_names[1:], ('noise-1', 'noise-2'))

        for noise in g.layers[1:]:
            np.testing.assert_allclose(np.sort(degrees(noise)), np.sort(degrees(layer)))

if __name__ == '__main__':
    unittest.main()
