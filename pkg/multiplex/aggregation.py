#!/usr/bin/env python

"""
Entrywise generalized power-mean aggregation of the layers.

    A(alpha, beta)_ij = (sum_k beta_k * (A^(k)_ij) ** alpha) ** (1 / alpha)

Every entry is evaluated in scaled form against the largest (alpha > 0) or
smallest (alpha < 0) contributing layer value so that |alpha| up to the box
bound never overflows. Near alpha = 0 the weighted geometric mean is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import logging

import numpy as np
from scipy import sparse

import app_config
from multiplex.errors import DomainError, NumericError
from multiplex.graph import SparseSym, degrees

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)

LIMITS = ('min', 'geometric', 'max')
ZERO_RULES = ('limit', 'present')


@dataclass(frozen=True, eq=False)
class Theta:
    """
    Aggregation parameters: power alpha, layer weights beta, regularization lam.
    """
    alpha: float
    beta: np.ndarray
    lam: float

    @classmethod
    def uniform(cls, K, alpha=1.0, lam=1.0):
        return cls(float(alpha), np.full(K, 1.0 / K), float(lam))

    @classmethod
    def from_vector(cls, vector):
        """
        Inverse of vector(): (alpha, beta_1..beta_K, lam).
        """
        vector = np.asarray(vector, dtype=float)

        return cls(float(vector[0]), vector[1:-1].copy(), float(vector[-1]))

    @property
    def K(self):
        return len(self.beta)

    def vector(self):
        return np.concatenate([[self.alpha], self.beta, [self.lam]])

    def as_dict(self):
        """
        JSON-ready form; the min and max limits report alpha as '-inf' and 'inf'.
        """
        return {
            'alpha': self.alpha if np.isfinite(self.alpha) else repr(float(self.alpha)),
            'beta': [float(b) for b in self.beta],
            'lambda': self.lam,
        }


@dataclass(frozen=True, eq=False)
class AggregatedOperator:
    """
    A(theta) restricted to its support, with its degree vector.
    """
    adj: SparseSym
    deg: np.ndarray
    theta: Theta

    @cached_property
    def csr(self):
        return self.adj.to_csr()


@dataclass(frozen=True, eq=False)
class PropagationOperator:
    """
    P = lam * (I + lam D)^-1 A as a sparse matrix and b = diag((I + lam D)^-1).
    """
    P: sparse.csr_matrix
    b: np.ndarray

    def b_map(self, Y):
        """
        Apply the diagonal map (I + lam D)^-1 to a vector or a panel.
        """
        if Y.ndim == 1:
            return self.b * Y

        return self.b[:, None] * Y


def _check_beta(beta, K):
    beta = np.asarray(beta, dtype=float)

    if beta.shape != (K,):
        raise DomainError('beta must have %i components, got %s' % (K, beta.shape))

    if np.any(beta < 0) or not np.all(np.isfinite(beta)):
        raise DomainError('beta components must be finite and nonnegative: %s' % beta)

    if beta.sum() <= 0:
        raise DomainError('beta must have positive mass')

    return beta

def _abstaining(values, beta):
    """
    Per-entry weights over the layers that have the pair, renormalized to 1,
    and the mask of entries with at least one such layer.
    """
    w = (values > 0) * beta
    total = w.sum(axis=1)
    present = total > 0

    return w[present] / total[present, None], present

def _geometric(values, beta, abstain=False):
    """
    prod_k a_k ** beta_k in log domain; absent wherever an active layer is 0,
    unless layers without the pair abstain.
    """
    out = np.zeros(len(values))

    if abstain:
        w, present = _abstaining(values, beta)
        logs = np.log(np.where(values[present] > 0, values[present], 1.0))
        out[present] = np.exp((logs * w).sum(axis=1))

        return out

    present = np.all(values > 0, axis=1)

    out[present] = np.exp(np.log(values[present]) @ beta)

    return out

def _abstaining_power_mean(values, beta, alpha):
    out = np.zeros(len(values))
    w, present = _abstaining(values, beta)

    if not np.any(present):
        return out

    values = values[present]
    stored = values > 0
    scale = np.where(stored, values, np.inf).min(axis=1)
    logs = np.log(np.where(stored, values, 1.0) / scale[:, None]) * stored

    # weights sum to 1 here, so no mass correction
    t = (np.expm1(alpha * logs) * w).sum(axis=1)

    with np.errstate(over='ignore'):
        out[present] = scale * np.exp(np.log1p(t) / alpha)

    return out

def _power_mean(values, beta, alpha, abstain=False):
    if alpha == 1.0:
        return values @ beta

    if abstain and alpha < 0:
        return _abstaining_power_mean(values, beta, alpha)

    out = np.zeros(len(values))

    if alpha > 0:
        present = np.any(values > 0, axis=1)
        scale = values[present].max(axis=1)
    else:
        present = np.all(values > 0, axis=1)
        scale = values[present].min(axis=1)

    if not np.any(present):
        return out

    with np.errstate(divide='ignore'):
        logs = np.log(values[present] / scale[:, None])

    # sum_k beta_k (a_k/m)^alpha - 1, accurate for small |alpha|
    t = np.expm1(alpha * logs) @ beta + (beta.sum() - 1.0)

    with np.errstate(over='ignore'):
        out[present] = scale * np.exp(np.log1p(t) / alpha)

    return out

def _operator(n, rows, cols, weights, theta):
    if not np.all(np.isfinite(weights)):
        raise NumericError('aggregated weights overflowed at alpha=%r' % theta.alpha)

    keep = weights > 0
    adj = SparseSym(n, rows[keep], cols[keep], weights[keep])

    return AggregatedOperator(adj, degrees(adj), theta)

def aggregate(g, theta, switch=None, zero_rule=None):
    """
    Generalized mean adjacency A(theta) of a MultilayerGraph.

    beta is used literally, so finite-difference steps off the simplex are
    fine. Layers with beta_k = 0 take no part in the mean.

    With zero_rule 'limit' an entry with alpha <= 0 exists only where every
    active layer has the pair. With 'present' and alpha < 0, layers without
    the pair abstain and the mean runs over the others with their beta
    renormalized. alpha >= 0 is the same under both rules.
    """
    switch = app_config.ALPHA_SWITCH if switch is None else switch
    zero_rule = app_config.ZERO_RULE if zero_rule is None else zero_rule

    if zero_rule not in ZERO_RULES:
        raise DomainError('zero_rule must be one of %s' % ', '.join(ZERO_RULES))

    beta = _check_beta(theta.beta, g.K)
    alpha = float(theta.alpha)

    if not np.isfinite(alpha):
        raise DomainError('alpha must be finite')

    rows, cols, values = g.support
    active = beta > 0
    values = values[:, active]
    beta = beta[active]

    abstain = zero_rule == 'present' and alpha < 0

    if abs(alpha) < switch:
        weights = _geometric(values, beta, abstain)
    else:
        weights = _power_mean(values, beta, alpha, abstain)

    return _operator(g.n, rows, cols, weights, theta)

def aggregate_limit(g, which, beta=None, lam=None):
    """
    Exact entrywise min, weighted geometric mean or max over active layers.

    min and max only use beta to decide which layers are active.
    """
    if which not in LIMITS:
        raise DomainError('which must be one of %s' % ', '.join(LIMITS))

    beta = np.full(g.K, 1.0 / g.K) if beta is None else _check_beta(beta, g.K)
    lam = app_config.FIXED_LAMBDA if lam is None else lam

    rows, cols, values = g.support
    active = beta > 0
    values = values[:, active]

    if which == 'geometric':
        weights = _geometric(values, beta[active])
        alpha = 0.0
    elif which == 'max':
        weights = values.max(axis=1)
        alpha = np.inf
    else:
        weights = np.where(np.all(values > 0, axis=1), values.min(axis=1), 0.0)
        alpha = -np.inf

    theta = Theta(alpha, beta, float(lam))

    return _operator(g.n, rows, cols, weights, theta)

def single_layer(g, k, lam=None):
    """
    Operator of layer k alone, as the plain per-layer baseline.
    """
    lam = app_config.FIXED_LAMBDA if lam is None else lam
    beta = np.zeros(g.K)
    beta[k] = 1.0
    layer = g.layers[k]

    return AggregatedOperator(layer, degrees(layer), Theta(1.0, beta, float(lam)))

def propagation_operator(agg, lam):
    """
    Row-scaled label-propagation operator for (I + lam L(theta)) X = Y.

    The iteration X <- P X + b Y with P = lam (I + lam D)^-1 A has the
    solution of that system as its fixed point; P has row sums
    lam d / (1 + lam d) < 1, so its spectral radius is below one.
    """
    if not lam > 0:
        raise DomainError('lambda must be positive, got %r' % lam)

    b = 1.0 / (1.0 + lam * agg.deg)
    P = sparse.diags(lam * b) @ agg.csr

    return PropagationOperator(sparse.csr_matrix(P), b)

def laplacian(agg):
    """
    L(theta) = D(theta) - A(theta) as a sparse matrix.
    """
    return sparse.diags(agg.deg) - agg.csr
