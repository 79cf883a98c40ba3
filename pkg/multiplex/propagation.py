#!/usr/bin/env python

"""
Inner problem: label propagation on an aggregated graph, the two
cross-entropy losses, and argmax classification.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np

import app_config
from multiplex.aggregation import laplacian
from multiplex.errors import DomainError, NumericError
from multiplex.graph import LabelMatrix

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)


@dataclass(frozen=True, eq=False)
class Embedding:
    """
    Propagated scores: N x m panel (or an N vector for one class).
    """
    X: np.ndarray
    iterations: int
    converged: bool
    delta: float


def _panel(Y):
    if isinstance(Y, LabelMatrix):
        return Y.one_hot

    return np.asarray(Y, dtype=float)

def propagate(op, Y, tol=None, max_iter=None):
    """
    Iterate X <- P X + b Y from X = b Y until successive iterates differ by
    at most `tol` in max norm. All columns advance together.
    """
    tol = app_config.PROPAGATION_TOL if tol is None else tol
    max_iter = app_config.PROPAGATION_MAX_ITER if max_iter is None else max_iter

    if not tol > 0:
        raise DomainError('tol must be positive')

    BY = op.b_map(_panel(Y))
    X = BY
    delta = 0.0

    if X.size == 0 or op.P.nnz == 0:
        return Embedding(X, 0, True, 0.0)

    for r in range(1, max_iter + 1):
        X_next = op.P @ X + BY
        delta = float(np.max(np.abs(X_next - X)))

        if not np.isfinite(delta):
            raise NumericError('label propagation produced a non-finite value at iteration %i' % r)

        X = X_next

        if delta <= tol:
            return Embedding(X, r, True, delta)

    logger.warning('Label propagation stopped at max_iter=%i with delta=%.3g' % (max_iter, delta))

    return Embedding(X, max_iter, False, delta)

def dense_solve(agg, lam, Y):
    """
    Solve (I + lam L(theta)) X = Y directly. Small graphs only.
    """
    n = agg.adj.n

    if n > app_config.DENSE_SOLVE_MAX_NODES:
        raise DomainError('dense solve is limited to %i nodes, got %i' % (app_config.DENSE_SOLVE_MAX_NODES, n))

    system = np.eye(n) + lam * laplacian(agg).toarray()

    return np.linalg.solve(system, _panel(Y))

def _test_rows(y_test):
    """
    (nodes, class index) pairs of a test-label LabelMatrix or one-hot panel.
    """
    if isinstance(y_test, LabelMatrix):
        return y_test.nodes, y_test.classes_of

    y_test = np.asarray(y_test)
    nodes = np.flatnonzero(y_test.sum(axis=1) > 0)

    return nodes, np.argmax(y_test[nodes], axis=1)

def multiclass_loss(y_test, X, clamp=None):
    """
    Mean over test rows of -log(X_ic / sum_j X_ij) at the true class c.
    """
    clamp = app_config.LOG_CLAMP if clamp is None else clamp
    nodes, classes = _test_rows(y_test)
    X = X.X if isinstance(X, Embedding) else X

    if len(nodes) == 0:
        raise DomainError('no test rows')

    rows = X[nodes]
    totals = rows.sum(axis=1)
    degenerate = totals <= 0

    if np.any(degenerate):
        logger.warning('%i test rows have an all-zero embedding' % int(degenerate.sum()))

    share = np.zeros(len(nodes))
    ok = ~degenerate
    share[ok] = rows[ok, classes[ok]] / totals[ok]

    return float(-np.mean(np.log(np.maximum(share, clamp))))

def binomial_loss(y_test, x, test_nodes=None, clamp=None):
    """
    Mean binomial cross-entropy of scores x against 0/1 targets y.

    With `test_nodes`, y and x are full-length and only those rows count.
    """
    clamp = app_config.LOG_CLAMP if clamp is None else clamp
    y = np.asarray(y_test, dtype=float)
    x = np.asarray(x.X if isinstance(x, Embedding) else x, dtype=float)

    if test_nodes is not None:
        y = y[test_nodes]
        x = x[test_nodes]

    if len(y) == 0:
        raise DomainError('no test rows')

    x = np.clip(x, clamp, 1.0 - clamp)

    return float(-np.mean(y * np.log(x) + (1.0 - y) * np.log(1.0 - x)))

def classify(X):
    """
    Row-wise argmax; ties go to the smallest class index.
    """
    X = X.X if isinstance(X, Embedding) else X

    if X.ndim != 2 or X.shape[1] < 1:
        raise DomainError('classify needs an N x m panel with m >= 1')

    empty = ~np.any(X > 0, axis=1)

    if np.any(empty):
        logger.warning('%i nodes have no score in any class; assigning class 0' % int(empty.sum()))

    return np.argmax(X, axis=1)

def accuracy(pred, truth, eval_set):
    """
    Share of `eval_set` nodes where pred equals truth.
    """
    eval_set = np.asarray(eval_set, dtype=np.int64)

    if len(eval_set) == 0:
        raise DomainError('accuracy needs a non-empty evaluation set')

    return float(np.mean(np.asarray(pred)[eval_set] == np.asarray(truth)[eval_set]))
