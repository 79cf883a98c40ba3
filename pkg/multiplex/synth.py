#!/usr/bin/env python

"""
Synthetic multiplex benchmarks built from Gaussian blobs.

Community c is centered at center_scale * e_(c mod dim). Every layer is a
symmetrized k-NN graph of its own point cloud, weighted with
exp(-d_ij + d_min).
"""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
from scipy import spatial

import app_config
from multiplex.config import SynthSpec
from multiplex.errors import DomainError
from multiplex.graph import LabelMatrix, MultilayerGraph, SparseSym, sample_known_labels

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)


@dataclass(frozen=True, eq=False)
class SynthInstance:
    graph: MultilayerGraph
    truth: LabelMatrix
    known: LabelMatrix
    spec: SynthSpec


def gen_blob_layer(points, knn_k):
    """
    Symmetrized k-NN graph of `points`. Neighbor ties go to the smaller
    node index.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)

    if n < knn_k + 1:
        raise DomainError('need more than %i points for a %i-NN graph, got %i' % (knn_k, knn_k, n))

    # extra candidates so ties at the cutoff can be re-ordered by index
    query_k = min(n, 2 * knn_k + 1)
    dist, idx = spatial.cKDTree(points).query(points, k=query_k)
    dist = dist.reshape(n, query_k)
    idx = idx.reshape(n, query_k)

    rows = []
    cols = []
    dists = []

    for i in range(n):
        others = idx[i] != i
        d_i = dist[i][others]
        j_i = idx[i][others]
        order = np.lexsort((j_i, d_i))[:knn_k]
        rows.append(np.full(len(order), i))
        cols.append(j_i[order])
        dists.append(d_i[order])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    dists = np.concatenate(dists)

    # the closest pair is always somebody's first neighbor
    d_min = dists.min()

    return SparseSym.from_edges(n, rows, cols, np.exp(-dists + d_min), how='max')

def _centers(spec):
    eye = np.eye(spec.dim)

    return np.array([spec.center_scale * eye[c % spec.dim] for c in range(spec.n_communities)])

def _draw_points(spec, rng):
    centers = _centers(spec)

    return np.concatenate([
        rng.normal(centers[c], spec.std, size=(spec.n_per_community, spec.dim))
        for c in range(spec.n_communities)
    ])

def _truth(spec):
    n = spec.n_per_community * spec.n_communities
    vector = np.repeat(np.arange(spec.n_communities), spec.n_per_community)

    return LabelMatrix(n, np.arange(n), vector, tuple(str(c) for c in range(spec.n_communities)))

def _known(spec, truth, rng):
    return sample_known_labels(truth, spec.label_fraction, int(rng.integers(2 ** 32)))

def _informative_layer(spec, rng):
    return gen_blob_layer(_draw_points(spec, rng), spec.knn_k)

def _embed(layer, nodes, n):
    """
    Relabel a layer on len(nodes) points onto the global node ids `nodes`.
    """
    return SparseSym.from_edges(n, nodes[layer.rows], nodes[layer.cols], layer.weights, how='sum')

def _instance(spec, layers, names, rng):
    truth = _truth(spec)
    graph = MultilayerGraph(truth.n, tuple(layers), tuple(names))
    known = _known(spec, truth, rng)

    logger.info('Generated %s std=%g: %i nodes, %i layers, %i known labels' % (
        spec.setting, spec.std, graph.n, graph.K, len(known.nodes)
    ))

    return SynthInstance(graph, truth, known, spec)

def gen_informative(spec):
    """
    Every layer shows the same communities, each with its own points.
    """
    rng = np.random.default_rng(spec.rng_seed)
    layers = [_informative_layer(spec, rng) for k in range(spec.n_layers)]

    return _instance(spec, layers, ['informative-%i' % (k + 1) for k in range(spec.n_layers)], rng)

def gen_noisy(spec):
    """
    Layer 1 is informative; every other layer is an informative layer with
    its node ids reshuffled.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n = spec.n_per_community * spec.n_communities
    layers = [_informative_layer(spec, rng)]

    for k in range(1, spec.n_layers):
        layers.append(_informative_layer(spec, rng).permute(rng.permutation(n)))

    names = ['informative'] + ['noise-%i' % k for k in range(1, spec.n_layers)]

    return _instance(spec, layers, names, rng)

def gen_complementary(spec):
    """
    Layer l is a k-NN graph on community l's points plus a reshuffled
    sparse k-NN graph over everyone else.
    """
    if spec.n_layers != spec.n_communities:
        raise DomainError('the complementary setting needs one layer per community')

    rng = np.random.default_rng(spec.rng_seed)
    per = spec.n_per_community
    n = per * spec.n_communities
    layers = []

    for ell in range(spec.n_layers):
        points = _draw_points(spec, rng)
        own = np.arange(ell * per, (ell + 1) * per)
        rest = np.setdiff1d(np.arange(n), own)

        signal = _embed(gen_blob_layer(points[own], spec.knn_k), own, n)
        noise = gen_blob_layer(points[rest], spec.noise_knn_k)
        noise = _embed(noise, rest[rng.permutation(len(rest))], n)

        layers.append(SparseSym.from_edges(
            n,
            np.concatenate([signal.rows, noise.rows]),
            np.concatenate([signal.cols, noise.cols]),
            np.concatenate([signal.weights, noise.weights]),
            how='sum',
        ))

    return _instance(spec, layers, ['community-%i' % (ell + 1) for ell in range(spec.n_layers)], rng)

GENERATORS = {
    'informative': gen_informative,
    'noisy': gen_noisy,
    'complementary': gen_complementary,
}

def generate(spec=None, **kwargs):
    """
    Build the instance a SynthSpec (or its fields as keywords) describes.
    """
    spec = spec or SynthSpec(**kwargs)

    return GENERATORS[spec.setting](spec)
