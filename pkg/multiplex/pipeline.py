#!/usr/bin/env python

"""
End-to-end protocols: learned aggregation (MULTI, BINOM), fixed-mean and
single-layer baselines, and the APR / average-rank summary metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import time

import numpy as np
from scipy.stats import rankdata

import app_config
from multiplex.aggregation import Theta, aggregate, aggregate_limit, propagation_operator, single_layer
from multiplex.config import FIXED_MEANS, ExperimentSpec, OptimizerConfig
from multiplex.errors import DomainError, OptimizerError
from multiplex.graph import LabelMatrix, add_noise_layers, sample_known_labels, split_labels
from multiplex.optimizer import ProblemContext, run_starts
from multiplex.propagation import accuracy, classify, propagate

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)

LIMIT_OF = {
    'MIN': 'min',
    'GEOM': 'geometric',
    'MAX': 'max',
}

ALPHA_OF = {
    'ARIT': 1.0,
    'HARM': -1.0,
}


@dataclass(frozen=True)
class FoldRun:
    fold: int
    class_index: int
    run: object


@dataclass(eq=False)
class MethodResult:
    """
    Outcome of one method on one instance.

    `thetas` has one entry, or one per class for BINOM. `predictions` covers
    every node; only `held_out` entries are predictions proper.
    """
    method: str
    thetas: list
    classes: tuple
    predictions: np.ndarray
    held_out: np.ndarray
    seed: int
    fold_losses: list = field(default_factory=list)
    runs: list = field(default_factory=list)
    accuracy: float = None
    timings: dict = field(default_factory=dict)

    def prediction_labels(self):
        """
        Held-out predictions as a LabelMatrix, ready for write_labels.
        """
        return LabelMatrix(len(self.predictions), self.held_out, self.predictions[self.held_out], self.classes)

    def as_dict(self):
        out = {
            'method': self.method,
            'fold_losses': self.fold_losses,
            'seed': self.seed,
            'timings': self.timings,
        }

        if self.method == 'BINOM':
            out['thetas'] = dict((name, theta.as_dict()) for name, theta in zip(self.classes, self.thetas))
        else:
            out['theta'] = self.thetas[0].as_dict()

        if self.accuracy is not None:
            out['accuracy'] = self.accuracy

        return out


def _check_labels(labels):
    if len(labels.nodes) == 0:
        raise DomainError('no known labels')

    present = len(np.unique(labels.classes_of))

    if present < 2:
        logger.warning('Known labels cover only %i class' % present)

def _score(result, truth):
    """
    Fill in accuracy over the held-out nodes that have a true label.
    """
    if truth is None:
        return result

    if truth.classes[:len(result.classes)] != result.classes:
        raise DomainError('truth classes must extend the known-label classes in the same order')

    eval_set = np.intersect1d(result.held_out, truth.nodes)
    result.accuracy = accuracy(result.predictions, truth.vector(), eval_set)

    logger.info('%s accuracy %.4f on %i held-out nodes' % (result.method, result.accuracy, len(eval_set)))

    return result

def _start_seed(rng_seed, fold, class_index):
    return np.random.SeedSequence([rng_seed, fold, class_index + 1])

def _learn(graph, labels, experiment, optimizer, mode, class_index=-1):
    """
    Fold loop for one learning problem. Returns (best FoldRun, all FoldRuns,
    fold loss records).
    """
    candidates = []
    records = []

    for fold in range(experiment.n_folds):
        split = split_labels(labels, fold, experiment.rng_seed, experiment.n_folds, experiment.stratified)
        y_train = labels.restrict(split.train)
        y_test = labels.restrict(split.test)

        if len(split.train) == 0 or len(split.test) == 0:
            logger.warning('Skipping fold %i: empty train or test set' % fold)
            continue

        if mode == 'BINOM' and not np.any(y_train.classes_of == class_index):
            logger.warning('Skipping fold %i for class "%s": no training labels' % (fold, labels.classes[class_index]))
            continue

        ctx = ProblemContext(
            graph, y_train, y_test, mode,
            class_index=class_index if mode == 'BINOM' else None,
            tol=optimizer.propagation_tol,
            max_iter=optimizer.propagation_max_iter,
            zero_rule=experiment.zero_rule,
        )

        logger.info('%s fold %i%s: %i train, %i test labels' % (
            mode, fold, '' if mode == 'MULTI' else ' class %i' % class_index, len(split.train), len(split.test)
        ))

        runs = run_starts(ctx, optimizer, n_starts=experiment.n_starts, rng_seed=_start_seed(experiment.rng_seed, fold, class_index))

        for run in runs:
            fold_run = FoldRun(fold, class_index, run)
            candidates.append(fold_run)
            records.append({
                'fold': fold,
                'class': None if mode == 'MULTI' else labels.classes[class_index],
                'start': run.start_id,
                'f_star': run.f_star,
                'reason': run.trace.reason,
            })

    finished = [c for c in candidates if not c.run.aborted]

    if not finished:
        raise OptimizerError('no fold produced a finished optimizer run', [r['reason'] for r in records])

    best = min(finished, key=lambda c: (c.run.f_star, c.fold, c.run.start_id))

    return best, candidates, records

def _propagate_all(graph, theta, Y, optimizer, zero_rule):
    op = propagation_operator(aggregate(graph, theta, zero_rule=zero_rule), theta.lam)

    return propagate(op, Y, optimizer.propagation_tol, optimizer.propagation_max_iter).X

def run_multi(graph, labels, experiment=None, optimizer=None, truth=None):
    """
    One theta for all classes, chosen by the lowest test-fold multiclass loss.
    """
    experiment = experiment or ExperimentSpec(method='MULTI')
    optimizer = optimizer or OptimizerConfig()
    _check_labels(labels)
    started = time.perf_counter()

    best, runs, records = _learn(graph, labels, experiment, optimizer, 'MULTI')
    theta = best.run.theta_star

    learned = time.perf_counter()
    X = _propagate_all(graph, theta, labels, optimizer, experiment.zero_rule)

    logger.info('MULTI selected fold %i start %i: f=%.6g theta=%s' % (best.fold, best.run.start_id, best.run.f_star, theta.as_dict()))

    result = MethodResult(
        'MULTI', [theta], labels.classes, classify(X), _held_out(labels), experiment.rng_seed,
        fold_losses=records, runs=runs,
        timings={'learn': learned - started, 'classify': time.perf_counter() - learned},
    )

    return _score(result, truth)

def run_binom(graph, labels, experiment=None, optimizer=None, truth=None):
    """
    One-vs-all: a theta per class from the binomial loss, then argmax of the
    per-class propagated scores.
    """
    experiment = experiment or ExperimentSpec(method='BINOM')
    optimizer = optimizer or OptimizerConfig()
    _check_labels(labels)
    started = time.perf_counter()

    thetas = []
    all_runs = []
    all_records = []

    for k in range(labels.m):
        best, runs, records = _learn(graph, labels, experiment, optimizer, 'BINOM', k)
        thetas.append(best.run.theta_star)
        all_runs.extend(runs)
        all_records.extend(records)

        logger.info('BINOM class "%s" selected fold %i start %i: f=%.6g' % (labels.classes[k], best.fold, best.run.start_id, best.run.f_star))

    learned = time.perf_counter()
    Y = labels.one_hot
    X = np.zeros_like(Y)

    for k, theta in enumerate(thetas):
        X[:, k] = _propagate_all(graph, theta, Y[:, k], optimizer, experiment.zero_rule)

    result = MethodResult(
        'BINOM', thetas, labels.classes, classify(X), _held_out(labels), experiment.rng_seed,
        fold_losses=all_records, runs=all_runs,
        timings={'learn': learned - started, 'classify': time.perf_counter() - learned},
    )

    return _score(result, truth)

def run_fixed_mean(graph, labels, method, lam=None, truth=None, optimizer=None, zero_rule=None):
    """
    Propagate every known label on a fixed aggregation. No test split is used.

    MIN, GEOM and MAX are the exact limits; zero_rule only affects HARM.
    """
    if method not in FIXED_MEANS:
        raise DomainError('%s is not a fixed mean' % method)

    lam = app_config.FIXED_LAMBDA if lam is None else lam
    optimizer = optimizer or OptimizerConfig()
    _check_labels(labels)
    started = time.perf_counter()

    if method in LIMIT_OF:
        agg = aggregate_limit(graph, LIMIT_OF[method], lam=lam)
    else:
        agg = aggregate(graph, Theta.uniform(graph.K, ALPHA_OF[method], lam), zero_rule=zero_rule)

    op = propagation_operator(agg, lam)
    X = propagate(op, labels, optimizer.propagation_tol, optimizer.propagation_max_iter).X

    result = MethodResult(
        method, [agg.theta], labels.classes, classify(X), _held_out(labels), None,
        timings={'classify': time.perf_counter() - started},
    )

    return _score(result, truth)

def run_single(graph, labels, layer, lam=None, truth=None, optimizer=None):
    """
    Plain label propagation on one layer.
    """
    if not 0 <= layer < graph.K:
        raise DomainError('layer must lie in 0..%i' % (graph.K - 1))

    lam = app_config.FIXED_LAMBDA if lam is None else lam
    optimizer = optimizer or OptimizerConfig()
    _check_labels(labels)
    started = time.perf_counter()

    agg = single_layer(graph, layer, lam)
    X = propagate(propagation_operator(agg, lam), labels, optimizer.propagation_tol, optimizer.propagation_max_iter).X

    result = MethodResult(
        'SINGLE', [agg.theta], labels.classes, classify(X), _held_out(labels), None,
        timings={'classify': time.perf_counter() - started},
    )

    return _score(result, truth)

def run_method(graph, labels, experiment=None, optimizer=None, truth=None):
    """
    Dispatch on experiment.method.
    """
    experiment = experiment or ExperimentSpec()

    if experiment.method == 'MULTI':
        return run_multi(graph, labels, experiment, optimizer, truth)

    if experiment.method == 'BINOM':
        return run_binom(graph, labels, experiment, optimizer, truth)

    if experiment.method == 'SINGLE':
        return run_single(graph, labels, experiment.layer, experiment.fixed_lambda, truth, optimizer)

    return run_fixed_mean(graph, labels, experiment.method, experiment.fixed_lambda, truth, optimizer, experiment.zero_rule)

def prepare_inputs(graph, labels, experiment, truth=None):
    """
    Apply the input variants an experiment asks for: `noise_layers`
    reshuffled copies of random layers appended to the graph, and a
    `label_fraction` subsample of every class's known labels. When labels
    are subsampled without a separate truth, the full labels become the truth.

    Returns (graph, labels, truth).
    """
    if experiment.noise_layers:
        graph = add_noise_layers(graph, experiment.noise_layers, [experiment.rng_seed, 1])
        logger.info('Appended %i noise layers' % experiment.noise_layers)

    if experiment.label_fraction is not None:
        truth = labels if truth is None else truth
        labels = sample_known_labels(labels, experiment.label_fraction, [experiment.rng_seed, 2])
        logger.info('Kept %i of %i known labels' % (len(labels.nodes), len(truth.nodes)))

    return graph, labels, truth

def _held_out(labels):
    return np.setdiff1d(np.arange(labels.n), labels.nodes)

def selected_run(result, class_index=-1):
    """
    The FoldRun whose theta a learned method reported, if any. BINOM
    results need the class index.
    """
    finished = [c for c in result.runs if c.class_index == class_index and not c.run.aborted]

    if not finished:
        return None

    return min(finished, key=lambda c: (c.run.f_star, c.fold, c.run.start_id))

"""
Summary metrics over an algorithms x datasets accuracy matrix
"""

def _accuracy_matrix(accuracies):
    A = np.asarray(accuracies, dtype=float)

    if A.ndim != 2 or A.size == 0:
        raise DomainError('accuracies must be a non-empty algorithms x datasets matrix')

    return A

def apr(accuracies):
    """
    Average performance ratio: mean over datasets of accuracy / best accuracy.
    """
    A = _accuracy_matrix(accuracies)
    best = A.max(axis=0)

    if np.any(best <= 0):
        raise DomainError('every dataset needs a positive best accuracy')

    return (A / best).mean(axis=1)

def avg_rank(accuracies):
    """
    Mean rank per algorithm, 1 being best; ties share the mean of their positions.
    """
    A = _accuracy_matrix(accuracies)

    return rankdata(-A, method='average', axis=0).mean(axis=1)
