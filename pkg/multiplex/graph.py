#!/usr/bin/env python

"""
Multiplex graph storage, label bookkeeping and the text file formats.

Edge-list files look like:

    #nodes 1200 #layers 3
    0	0	17	0.82
    0	0	23	0.61

one `layer<TAB>u<TAB>v<TAB>weight` record per line. Label files hold one
`node<TAB>class_name` record per line.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import logging
import math
import re

import numpy as np
from scipy import sparse

import app_config
from multiplex.errors import DomainError, LabelConflictError, ParseError, RangeError

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)

HEADER_RE = re.compile(r'^#\s*nodes\s+(\d+)(?:\s+#\s*layers\s+(\d+))?\s*$')


@dataclass(frozen=True, eq=False)
class SparseSym:
    """
    Symmetric nonnegative sparse matrix stored once per unordered pair.

    `rows[e] <= cols[e]` for every stored entry e and every stored weight is
    strictly positive. Iterating yields (i, j, w) in both orientations.
    """
    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    allow_self_loops: bool = False

    def __post_init__(self):
        if len(self.rows) != len(self.cols) or len(self.rows) != len(self.weights):
            raise DomainError('rows, cols and weights must have the same length')

        if len(self.weights):
            if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
                raise DomainError('stored weights must be finite and positive')

            if np.any(self.rows > self.cols):
                raise DomainError('entries must be stored with i <= j')

            if np.any(self.rows < 0) or np.any(self.cols >= self.n):
                raise RangeError('node index outside 0..%i' % (self.n - 1))

            if not self.allow_self_loops and np.any(self.rows == self.cols):
                raise DomainError('self-loops are not permitted')

    @classmethod
    def from_edges(cls, n, i, j, w, how='sum', allow_self_loops=False):
        """
        Build from arbitrary (i, j, w) triples. Records that land on the same
        unordered pair are merged with `how` ('sum' or 'max'); zero weights
        are dropped.
        """
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        w = np.asarray(w, dtype=float)

        if np.any(w < 0):
            raise DomainError('negative edge weight')

        lo = np.minimum(i, j)
        hi = np.maximum(i, j)

        if not allow_self_loops:
            keep = lo != hi
            lo, hi, w = lo[keep], hi[keep], w[keep]

        if len(w) == 0:
            return cls.empty(n, allow_self_loops=allow_self_loops)

        if np.any(lo < 0) or np.any(hi >= n):
            raise RangeError('node index outside 0..%i' % (n - 1))

        keys = lo * n + hi
        unique_keys, inverse = np.unique(keys, return_inverse=True)
        merged = np.zeros(len(unique_keys))

        if how == 'sum':
            np.add.at(merged, inverse, w)
        elif how == 'max':
            np.maximum.at(merged, inverse, w)
        else:
            raise DomainError('unknown merge rule "%s"' % how)

        keep = merged > 0

        return cls(
            n,
            (unique_keys[keep] // n).astype(np.int64),
            (unique_keys[keep] % n).astype(np.int64),
            merged[keep],
            allow_self_loops=allow_self_loops,
        )

    @classmethod
    def empty(cls, n, allow_self_loops=False):
        return cls(n, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0), allow_self_loops)

    @property
    def nnz(self):
        return len(self.weights)

    @cached_property
    def _lookup(self):
        return dict(zip(zip(self.rows.tolist(), self.cols.tolist()), self.weights.tolist()))

    def weight(self, i, j):
        """
        Weight of the pair (i, j); 0.0 if absent.
        """
        if i > j:
            i, j = j, i

        return self._lookup.get((i, j), 0.0)

    def __iter__(self):
        for i, j, w in zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()):
            yield i, j, w

            if i != j:
                yield j, i, w

    def to_csr(self):
        """
        Full symmetric scipy CSR matrix.
        """
        off = self.rows != self.cols
        data = np.concatenate([self.weights, self.weights[off]])
        rows = np.concatenate([self.rows, self.cols[off]])
        cols = np.concatenate([self.cols, self.rows[off]])

        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def permute(self, perm):
        """
        Conjugate by a permutation: node i becomes node perm[i].
        """
        perm = np.asarray(perm, dtype=np.int64)

        return SparseSym.from_edges(
            self.n, perm[self.rows], perm[self.cols], self.weights,
            how='sum', allow_self_loops=self.allow_self_loops
        )

    def edge_set(self):
        return set(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))


@dataclass(frozen=True, eq=False)
class MultilayerGraph:
    """
    K symmetric layers over the shared node set 0..N-1.
    """
    n: int
    layers: tuple
    layer_names: tuple = ()

    def __post_init__(self):
        if len(self.layers) < 1:
            raise DomainError('a multilayer graph needs at least one layer')

        for layer in self.layers:
            if layer.n != self.n:
                raise DomainError('every layer must have %i nodes, got %i' % (self.n, layer.n))

        if not self.layer_names:
            object.__setattr__(self, 'layer_names', tuple('layer-%i' % (k + 1) for k in range(len(self.layers))))
        elif len(self.layer_names) != len(self.layers):
            raise DomainError('expected %i layer names' % len(self.layers))

    @property
    def K(self):
        return len(self.layers)

    @cached_property
    def support(self):
        """
        Union support of all layers, computed once per graph.

        Returns (rows, cols, values) where values is a P x K dense array of
        the layer weights at every pair (0 where a layer has no edge).
        """
        n = self.n
        keys = np.concatenate([layer.rows * n + layer.cols for layer in self.layers])
        union = np.unique(keys)
        values = np.zeros((len(union), self.K))

        for k, layer in enumerate(self.layers):
            slots = np.searchsorted(union, layer.rows * n + layer.cols)
            values[slots, k] = layer.weights

        return (union // n).astype(np.int64), (union % n).astype(np.int64), values


@dataclass(frozen=True, eq=False)
class LabelMatrix:
    """
    Known labels: `nodes[t]` carries class index `classes_of[t]`.

    `classes` holds the class names in index order.
    """
    n: int
    nodes: np.ndarray
    classes_of: np.ndarray
    classes: tuple

    @classmethod
    def from_assignments(cls, n, assignments, classes):
        """
        Build from a {node: class index} mapping.
        """
        nodes = np.array(sorted(assignments), dtype=np.int64)
        classes_of = np.array([assignments[i] for i in nodes.tolist()], dtype=np.int64)

        if len(nodes) and (nodes[0] < 0 or nodes[-1] >= n):
            raise RangeError('labeled node outside 0..%i' % (n - 1))

        if len(classes_of) and classes_of.max() >= len(classes):
            raise DomainError('class index without a class name')

        return cls(n, nodes, classes_of, tuple(classes))

    @classmethod
    def from_vector(cls, truth, classes=None):
        """
        Build from a length-N vector of class indices, -1 meaning unlabeled.
        """
        truth = np.asarray(truth, dtype=np.int64)
        nodes = np.flatnonzero(truth >= 0)

        if classes is None:
            m = int(truth.max()) + 1 if len(nodes) else 0
            classes = tuple(str(c) for c in range(m))

        return cls(len(truth), nodes, truth[nodes], tuple(classes))

    @property
    def m(self):
        return len(self.classes)

    @property
    def assignments(self):
        return dict(zip(self.nodes.tolist(), self.classes_of.tolist()))

    @cached_property
    def one_hot(self):
        Y = np.zeros((self.n, self.m))
        Y[self.nodes, self.classes_of] = 1.0

        return Y

    def vector(self):
        """
        Length-N class index vector, -1 on unlabeled nodes.
        """
        out = np.full(self.n, -1, dtype=np.int64)
        out[self.nodes] = self.classes_of

        return out

    def restrict(self, nodes):
        """
        Labels of the given nodes only, keeping the class order.
        """
        keep = np.isin(self.nodes, np.asarray(nodes, dtype=np.int64))

        return LabelMatrix(self.n, self.nodes[keep], self.classes_of[keep], self.classes)


@dataclass(frozen=True, eq=False)
class LabelSplit:
    train: np.ndarray
    test: np.ndarray
    held_out: np.ndarray
    fold_index: int = 0


"""
Edge lists
"""

def _strip_comment(line):
    if '#' in line:
        line = line[:line.index('#')]

    return line.strip()

def load_multilayer(path, n_hint=None, unification=None, allow_self_loops=False):
    """
    Read a multiplex edge list.

    Layers are numbered in first-appearance order of their ids. Repeated
    records of the same oriented pair are summed; an (i, j) record and a
    (j, i) record are unified with `unification` ('max' by default).
    """
    unification = unification or app_config.EDGE_UNIFICATION

    if unification not in ('max', 'sum'):
        raise DomainError('unknown unification rule "%s"' % unification)

    declared_n = n_hint
    declared_k = None
    layer_ids = []
    records = {}

    with open(path, encoding='utf-8') as f:
        for line_number, raw in enumerate(f, 1):
            header = HEADER_RE.match(raw.strip())

            if header:
                declared_n = int(header.group(1))

                if header.group(2) is not None:
                    declared_k = int(header.group(2))

                continue

            line = _strip_comment(raw)

            if not line:
                continue

            bits = line.split()

            if len(bits) != 4:
                raise ParseError(path, line_number, 'expected "layer u v weight", got %i fields' % len(bits))

            layer_id, u, v, w = bits

            try:
                u = int(u)
                v = int(v)
                w = float(w)
            except ValueError:
                raise ParseError(path, line_number, 'could not parse "%s"' % line)

            if not math.isfinite(w):
                raise ParseError(path, line_number, 'weight must be finite')

            if w < 0:
                raise DomainError('%s:%i: negative weight %r' % (path, line_number, w))

            if u < 0 or v < 0 or (declared_n is not None and max(u, v) >= declared_n):
                raise RangeError('%s:%i: node index out of range in "%s"' % (path, line_number, line))

            if u == v and not allow_self_loops:
                logger.warning('%s:%i: dropping self-loop on node %i' % (path, line_number, u))
                continue

            if layer_id not in records:
                layer_ids.append(layer_id)
                records[layer_id] = {}

            oriented = records[layer_id]
            oriented[(u, v)] = oriented.get((u, v), 0.0) + w

    if declared_k is not None:
        if len(layer_ids) > declared_k:
            raise DomainError('%s: header declares %i layers, found %i' % (path, declared_k, len(layer_ids)))

        # declared but unused layers take the lowest free integer ids
        candidate = 0

        while len(layer_ids) < declared_k:
            name = str(candidate)
            candidate += 1

            if name not in records:
                layer_ids.append(name)
                records[name] = {}

    if not layer_ids:
        raise DomainError('%s: no layers found' % path)

    if declared_n is None:
        seen = [max(u, v) for oriented in records.values() for u, v in oriented]
        declared_n = max(seen) + 1 if seen else 0

    layers = []

    for layer_id in layer_ids:
        layers.append(_unify(declared_n, records[layer_id], unification, allow_self_loops))

    logger.info('Loaded %s: %i nodes, %i layers' % (path, declared_n, len(layers)))

    return MultilayerGraph(declared_n, tuple(layers), tuple(layer_ids))

def _unify(n, oriented, unification, allow_self_loops):
    """
    Merge the two orientations of every pair.
    """
    merged = {}

    for (u, v), w in oriented.items():
        key = (min(u, v), max(u, v))

        if key not in merged:
            merged[key] = w
        elif unification == 'max':
            merged[key] = max(merged[key], w)
        else:
            merged[key] += w

    if not merged:
        return SparseSym.empty(n, allow_self_loops=allow_self_loops)

    pairs = np.array(list(merged.keys()), dtype=np.int64)
    weights = np.array(list(merged.values()))

    return SparseSym.from_edges(n, pairs[:, 0], pairs[:, 1], weights, how='sum', allow_self_loops=allow_self_loops)

def write_multilayer(graph, path, comment=None):
    """
    Write a graph in the format load_multilayer reads. `comment` becomes a
    leading `# ` line.
    """
    with open(path, 'w', encoding='utf-8') as f:
        if comment:
            f.write('# %s\n' % comment)

        f.write('#nodes %i #layers %i\n' % (graph.n, graph.K))

        for name, layer in zip(graph.layer_names, graph.layers):
            for i, j, w in zip(layer.rows.tolist(), layer.cols.tolist(), layer.weights.tolist()):
                f.write('%s\t%i\t%i\t%r\n' % (name, i, j, w))

"""
Labels
"""

def load_labels(path, n, classes=None):
    """
    Read `node<TAB>class_name` lines.

    Class indices follow first appearance, after any names passed in
    `classes` (used to align a truth file with the known labels).
    """
    class_names = list(classes or [])
    index_of = dict((name, c) for c, name in enumerate(class_names))
    assignments = {}

    with open(path, encoding='utf-8') as f:
        for line_number, raw in enumerate(f, 1):
            line = _strip_comment(raw)

            if not line:
                continue

            bits = line.split(None, 1)

            if len(bits) != 2:
                raise ParseError(path, line_number, 'expected "node class", got "%s"' % line)

            try:
                node = int(bits[0])
            except ValueError:
                raise ParseError(path, line_number, 'node must be an integer, got "%s"' % bits[0])

            name = bits[1].strip()

            if node < 0 or node >= n:
                raise RangeError('%s:%i: node %i outside 0..%i' % (path, line_number, node, n - 1))

            if name not in index_of:
                index_of[name] = len(class_names)
                class_names.append(name)

            c = index_of[name]

            if assignments.get(node, c) != c:
                raise LabelConflictError(
                    '%s:%i: node %i labeled both "%s" and "%s"' % (path, line_number, node, class_names[assignments[node]], name)
                )

            assignments[node] = c

    if not assignments:
        raise DomainError('%s: no labels' % path)

    return LabelMatrix.from_assignments(n, assignments, class_names)

def write_labels(labels, path, nodes=None, comment=None):
    """
    Write `node<TAB>class_name` lines for the labeled nodes (or `nodes`).
    """
    vector = labels.vector()

    if nodes is None:
        nodes = labels.nodes

    with open(path, 'w', encoding='utf-8') as f:
        if comment:
            f.write('# %s\n' % comment)

        for i in np.asarray(nodes).tolist():
            if vector[i] >= 0:
                f.write('%i\t%s\n' % (i, labels.classes[vector[i]]))

def split_labels(labels, fold_index, rng_seed, n_folds=None, stratified=True):
    """
    Cyclic train/test split of the known labels.

    The labeled nodes are shuffled with `rng_seed` and dealt into `n_folds`
    near-equal folds; fold `fold_index` is the test set, the others train.
    Stratified dealing walks the classes in turn so every fold sees every
    class when it can. A class with a single label always trains.
    """
    n_folds = n_folds or app_config.N_FOLDS

    if not 0 <= fold_index < n_folds:
        raise RangeError('fold_index must lie in 0..%i' % (n_folds - 1))

    rng = np.random.default_rng(rng_seed)
    folds = {}

    if stratified:
        position = 0

        for c in range(labels.m):
            members = labels.nodes[labels.classes_of == c]

            if len(members) == 0:
                continue

            if len(members) == 1:
                logger.warning('Class "%s" has a single label; it will always train' % labels.classes[c])
                folds[int(members[0])] = -1
                continue

            if len(members) < n_folds:
                logger.warning('Class "%s" has only %i labels for %i folds' % (labels.classes[c], len(members), n_folds))

            for node in rng.permutation(members).tolist():
                folds[node] = position % n_folds
                position += 1
    else:
        for position, node in enumerate(rng.permutation(labels.nodes).tolist()):
            folds[node] = position % n_folds

    test = np.array(sorted(i for i, fold in folds.items() if fold == fold_index), dtype=np.int64)
    train = np.setdiff1d(labels.nodes, test)
    held_out = np.setdiff1d(np.arange(labels.n), labels.nodes)

    return LabelSplit(train, test, held_out, fold_index)

def degrees(g):
    """
    Weighted degree of every node of a SparseSym.
    """
    off = g.rows != g.cols

    return (
        np.bincount(g.rows, weights=g.weights, minlength=g.n)
        + np.bincount(g.cols[off], weights=g.weights[off], minlength=g.n)
    )

"""
Sampling helpers
"""

def sample_known_labels(truth, fraction, rng_seed, min_per_class=1):
    """
    Reveal round(fraction * |class|) labels of every class, chosen uniformly.
    """
    if not 0 < fraction <= 1:
        raise DomainError('fraction must lie in (0, 1]')

    rng = np.random.default_rng(rng_seed)
    keep = []

    for c in range(truth.m):
        members = truth.nodes[truth.classes_of == c]
        count = min(len(members), max(min_per_class, int(round(fraction * len(members)))))
        keep.extend(rng.choice(members, size=count, replace=False).tolist())

    return truth.restrict(keep)

def add_noise_layers(graph, n_noise, rng_seed):
    """
    Append `n_noise` layers, each a node-reshuffled copy of a random layer.
    """
    rng = np.random.default_rng(rng_seed)
    layers = list(graph.layers)
    names = list(graph.layer_names)

    for t in range(n_noise):
        source = int(rng.integers(graph.K))
        layers.append(graph.layers[source].permute(rng.permutation(graph.n)))
        names.append('noise-%i' % (t + 1))

    return MultilayerGraph(graph.n, tuple(layers), tuple(names))
