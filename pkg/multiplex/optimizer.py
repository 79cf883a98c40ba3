#!/usr/bin/env python

"""
Outer problem: Frank-Wolfe with an inexact (finite-difference) gradient
over S = [-a, a] x simplex_K x [l0, l1].

Points of S are handled as flat vectors (alpha, beta_1..beta_K, lambda);
Theta.from_vector / Theta.vector convert at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import logging
import math

from joblib import Parallel, delayed
import numpy as np

import app_config
from multiplex.aggregation import Theta, aggregate, propagation_operator
from multiplex.config import OptimizerConfig
from multiplex.errors import DomainError, NumericError, OptimizerError
from multiplex.propagation import binomial_loss, multiclass_loss, propagate

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)

MODES = ('MULTI', 'BINOM')

GAP_BELOW_TOLERANCE = 'gap below tolerance'
NONPOSITIVE_GAP = 'nonpositive estimated gap'
ITERATION_CAP = 'iteration cap'
LINE_SEARCH_STALL = 'line-search stall'


@dataclass(frozen=True)
class FeasibleSet:
    """
    alpha in [-a, a], beta on the K-simplex, lambda in [l0, l1].
    """
    K: int
    a: float = app_config.ALPHA_BOUND
    l0: float = app_config.LAMBDA_MIN
    l1: float = app_config.LAMBDA_MAX

    def __post_init__(self):
        if self.K < 1:
            raise DomainError('K must be at least 1')

        if not self.a > 0:
            raise DomainError('a must be positive')

        if not 0 < self.l0 < self.l1:
            raise DomainError('lambda bounds need 0 < l0 < l1')

    @classmethod
    def from_config(cls, cfg, K):
        return cls(K, cfg.a, cfg.l0, cfg.l1)

    @property
    def dimension(self):
        return self.K + 2

    def contains(self, point, tol=1e-10):
        point = np.asarray(point, dtype=float)
        beta = point[1:-1]

        return bool(
            len(point) == self.dimension
            and -self.a - tol <= point[0] <= self.a + tol
            and self.l0 - tol <= point[-1] <= self.l1 + tol
            and np.all(beta >= -tol)
            and abs(beta.sum() - 1.0) <= tol
        )

    def normalize(self, point):
        """
        Absorb round-off: clip negative beta to 0, rescale beta to sum 1,
        clip alpha and lambda into their boxes.
        """
        point = np.array(point, dtype=float)
        beta = np.maximum(point[1:-1], 0.0)
        point[1:-1] = beta / beta.sum()
        point[0] = min(max(point[0], -self.a), self.a)
        point[-1] = min(max(point[-1], self.l0), self.l1)

        return point

    def vertices(self):
        """
        All 2 * K * 2 vertices of S.
        """
        eye = np.eye(self.K)

        for alpha, j, lam in itertools.product((-self.a, self.a), range(self.K), (self.l0, self.l1)):
            yield np.concatenate([[alpha], eye[j], [lam]])

    def diameter(self):
        """
        Euclidean diameter of S; at most 2a + sqrt(2) for the defaults.
        """
        simplex = 2.0 if self.K > 1 else 0.0

        return math.sqrt(4 * self.a ** 2 + simplex + (self.l1 - self.l0) ** 2)

    def random_point(self, rng):
        return np.concatenate([
            [rng.uniform(-self.a, self.a)],
            rng.dirichlet(np.ones(self.K)),
            [rng.uniform(self.l0, self.l1)],
        ])


"""
Objective
"""

@dataclass(frozen=True, eq=False)
class ProblemContext:
    """
    Everything f(theta) needs: the graph, the train/test label split and
    the loss. In BINOM mode only column `class_index` is learned.
    """
    graph: object
    y_train: object
    y_test: object
    mode: str = 'MULTI'
    class_index: int = None
    tol: float = app_config.PROPAGATION_TOL
    max_iter: int = app_config.PROPAGATION_MAX_ITER
    zero_rule: str = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError('mode must be one of %s' % ', '.join(MODES))

        if self.mode == 'BINOM' and self.class_index is None:
            raise DomainError('BINOM mode needs a class index')

    @property
    def K(self):
        return self.graph.K


def objective(theta, ctx):
    """
    Test-fold loss of propagating the train labels on A(theta).
    """
    agg = aggregate(ctx.graph, theta, zero_rule=ctx.zero_rule)
    op = propagation_operator(agg, theta.lam)

    if ctx.mode == 'MULTI':
        embedding = propagate(op, ctx.y_train, ctx.tol, ctx.max_iter)

        return multiclass_loss(ctx.y_test, embedding)

    column = ctx.y_train.one_hot[:, ctx.class_index]
    embedding = propagate(op, column, ctx.tol, ctx.max_iter)
    target = (ctx.y_test.classes_of == ctx.class_index).astype(float)

    return binomial_loss(target, embedding.X[ctx.y_test.nodes])


class BilevelObjective:
    """
    f(theta) as a function of the flat parameter vector.
    """
    def __init__(self, ctx):
        self.ctx = ctx

    def __call__(self, point):
        return objective(Theta.from_vector(point), self.ctx)


"""
Frank-Wolfe pieces
"""

def fd_gradient(f, point, h, f0=None, n_jobs=None):
    """
    Forward differences (f(x + h e_i) - f(x)) / h for every coordinate.
    Shifted points may leave S; f is evaluated there literally.
    """
    if not h > 0:
        raise DomainError('finite-difference step must be positive')

    n_jobs = app_config.N_JOBS if n_jobs is None else n_jobs
    point = np.asarray(point, dtype=float)
    f0 = f(point) if f0 is None else f0
    shifted = [point + h * e for e in np.eye(len(point))]

    if n_jobs == 1:
        values = [f(p) for p in shifted]
    else:
        values = Parallel(n_jobs=n_jobs)(delayed(f)(p) for p in shifted)

    return (np.asarray(values, dtype=float) - f0) / h

def lmo(grad, S, point):
    """
    Minimize the linear form grad . v over the vertices of S.

    Returns (vertex, direction). Zero alpha or lambda gradients pick +a and
    l1; beta ties pick the smallest index.
    """
    grad = np.asarray(grad, dtype=float)
    beta = np.zeros(S.K)
    beta[int(np.argmin(grad[1:-1]))] = 1.0

    vertex = np.concatenate([
        [-S.a if grad[0] > 0 else S.a],
        beta,
        [S.l0 if grad[-1] > 0 else S.l1],
    ])

    return vertex, vertex - np.asarray(point, dtype=float)


@dataclass(frozen=True)
class LineSearchResult:
    eta: float
    point: np.ndarray
    f_value: float
    backtracks: int
    ok: bool


def armijo_search(f, point, d, g_tilde, f_point, gamma=None, delta=None, max_backtracks=None, S=None):
    """
    eta = delta ** j for the smallest j with
    f(x) - f(x + eta d) >= gamma * eta * g_tilde.
    """
    gamma = app_config.ARMIJO_GAMMA if gamma is None else gamma
    delta = app_config.ARMIJO_DELTA if delta is None else delta
    max_backtracks = app_config.MAX_BACKTRACKS if max_backtracks is None else max_backtracks
    point = np.asarray(point, dtype=float)

    for j in range(max_backtracks + 1):
        eta = delta ** j
        candidate = point + eta * d

        if S is not None:
            candidate = S.normalize(candidate)

        value = f(candidate)

        if f_point - value >= gamma * eta * g_tilde:
            return LineSearchResult(eta, candidate, value, j, True)

    return LineSearchResult(0.0, point, f_point, max_backtracks, False)


@dataclass(frozen=True)
class IterationRecord:
    n: int
    f: float
    g_tilde: float
    eta: float
    h: float
    backtracks: int
    point: np.ndarray
    d_norm_sq: float


@dataclass
class OptTrace:
    records: list = field(default_factory=list)
    reason: str = None

    @property
    def accepted(self):
        """
        Records of iterations that took a step.
        """
        return [r for r in self.records if r.eta > 0]


@dataclass(frozen=True)
class RunResult:
    theta_star: Theta
    f_star: float
    trace: OptTrace
    start_id: int = 0
    aborted: bool = False


def step_cap(cfg, S):
    """
    xi * tau with xi = 2 sigma / ((1 + sigma) M diam(S) (2 + K)), or None
    when no smoothness estimate is configured.
    """
    if cfg.lipschitz is None or cfg.sigma <= 0:
        return None

    xi = 2 * cfg.sigma / ((1 + cfg.sigma) * cfg.lipschitz * S.diameter() * (2 + S.K))

    return xi * cfg.tau

def fw_solve(start, f, cfg=None, S=None, start_id=0, gradient=None, n_jobs=None):
    """
    Frank-Wolfe with Armijo steps from `start` (a Theta or a vector in S).

    `gradient`, when given, replaces the finite-difference estimate.
    """
    cfg = cfg or OptimizerConfig()
    point = start.vector() if isinstance(start, Theta) else np.asarray(start, dtype=float)

    if isinstance(f, ProblemContext):
        f, S = _resolve(f, cfg, S)

    S = S or FeasibleSet(len(point) - 2, cfg.a, cfg.l0, cfg.l1)

    if not S.contains(point):
        raise DomainError('start point %s is not in S' % point)

    point = S.normalize(point)
    trace = OptTrace()
    cap = step_cap(cfg, S)
    h = cfg.h0 if cap is None else max(min(cfg.h0, cap), cfg.h_min)

    f_point = math.inf

    try:
        f_point = f(point)

        for n in range(cfg.max_iter):
            if gradient is None:
                grad = fd_gradient(f, point, h, f0=f_point, n_jobs=n_jobs)
            else:
                grad = np.asarray(gradient(point), dtype=float)

            vertex, d = lmo(grad, S, point)
            g_tilde = float(-grad @ d)
            d_norm_sq = float(d @ d)

            if not np.isfinite(g_tilde) or g_tilde < 0:
                trace.reason = NONPOSITIVE_GAP
            elif g_tilde <= cfg.tau:
                trace.reason = GAP_BELOW_TOLERANCE

            if trace.reason:
                trace.records.append(IterationRecord(n, f_point, g_tilde, 0.0, h, 0, point, d_norm_sq))
                break

            step = armijo_search(f, point, d, g_tilde, f_point, cfg.gamma, cfg.delta, cfg.max_backtracks, S)
            trace.records.append(IterationRecord(n, f_point, g_tilde, step.eta, h, step.backtracks, point, d_norm_sq))

            logger.debug('start %i iter %i: f=%.6g g=%.3g eta=%.3g h=%.3g' % (start_id, n, f_point, g_tilde, step.eta, h))

            if not step.ok:
                trace.reason = LINE_SEARCH_STALL
                logger.warning('start %i: line search stalled at iteration %i' % (start_id, n))
                break

            point = step.point
            f_point = step.f_value
            h = max(h / 2, cfg.h_min)

            if cap is not None:
                h = max(min(h, cap), cfg.h_min)
        else:
            trace.reason = ITERATION_CAP
    except NumericError as e:
        trace.reason = 'aborted: %s' % e
        logger.warning('start %i %s' % (start_id, trace.reason))

        return RunResult(Theta.from_vector(point), f_point, trace, start_id, aborted=True)

    logger.info('start %i finished (%s) with f*=%.6g' % (start_id, trace.reason, f_point))

    return RunResult(Theta.from_vector(point), f_point, trace, start_id)

def starting_points(S, n_starts, rng_seed):
    """
    Arithmetic start, harmonic start, then n_starts - 2 seeded random points.
    """
    if n_starts < 2:
        raise DomainError('multistart needs at least 2 starts')

    uniform = np.full(S.K, 1.0 / S.K)
    lam = min(max(1.0, S.l0), S.l1)
    points = [
        np.concatenate([[min(1.0, S.a)], uniform, [lam]]),
        np.concatenate([[max(-1.0, -S.a)], uniform, [lam]]),
    ]
    rng = np.random.default_rng(rng_seed)

    for s in range(n_starts - 2):
        points.append(S.random_point(rng))

    return points

def _resolve(problem, cfg, S):
    """
    (f, S) for a ProblemContext or a plain function of the flat vector.
    """
    if isinstance(problem, ProblemContext):
        return BilevelObjective(problem), S or FeasibleSet.from_config(cfg, problem.K)

    if S is None:
        raise DomainError('a feasible set is needed for a plain objective function')

    return problem, S

def run_starts(problem, cfg=None, S=None, n_starts=None, rng_seed=None, n_jobs=None):
    """
    fw_solve from every starting point; runs come back in start order.
    """
    cfg = cfg or OptimizerConfig()
    f, S = _resolve(problem, cfg, S)
    n_starts = app_config.N_STARTS if n_starts is None else n_starts
    rng_seed = app_config.RNG_SEED if rng_seed is None else rng_seed
    n_jobs = app_config.N_JOBS if n_jobs is None else n_jobs
    points = starting_points(S, n_starts, rng_seed)

    if n_jobs == 1:
        return [fw_solve(p, f, cfg, S, start_id=i, n_jobs=1) for i, p in enumerate(points)]

    return Parallel(n_jobs=n_jobs)(
        delayed(fw_solve)(p, f, cfg, S, start_id=i, n_jobs=1) for i, p in enumerate(points)
    )

def best_run(runs):
    """
    Lowest f_star among runs that finished; ties go to the lower start_id.
    """
    finished = [r for r in runs if not r.aborted]

    if not finished:
        reasons = ['start %i: %s' % (r.start_id, r.trace.reason) for r in runs]

        raise OptimizerError('every optimizer run aborted', reasons)

    return min(finished, key=lambda r: (r.f_star, r.start_id))

def multistart(problem, cfg=None, S=None, n_starts=None, rng_seed=None, n_jobs=None):
    return best_run(run_starts(problem, cfg, S, n_starts, rng_seed, n_jobs))

"""
Diagnostics
"""

@dataclass(frozen=True)
class LemmaReport:
    checked: int
    violations: int
    threshold: float
    factor: float


def check_lemma_bound(trace, M_est, sigma=0.0, gamma=None, delta=None):
    """
    Count accepted steps whose eta falls below
    min(1, 2 delta (1 - gamma - sigma)) * min(1, g / (M ||d||^2)).

    Soft check: M_est is only an estimate of the gradient's Lipschitz constant.
    """
    gamma = app_config.ARMIJO_GAMMA if gamma is None else gamma
    delta = app_config.ARMIJO_DELTA if delta is None else delta

    if not M_est > 0:
        raise DomainError('M_est must be positive')

    threshold = 2 * delta * (1 - gamma - sigma)
    factor = min(1.0, threshold)
    accepted = trace.accepted
    violations = 0

    for r in accepted:
        eta_bar = 1.0 if r.d_norm_sq == 0 else min(1.0, r.g_tilde / (M_est * r.d_norm_sq))

        if r.eta < factor * eta_bar - 1e-12:
            violations += 1

    return LemmaReport(len(accepted), violations, threshold, factor)

def best_gap_bound(n, f_gap, M, diameter, gamma=None, delta=None, sigma=0.0):
    """
    Upper bound on min_{i <= n} g_i after n iterations, given f(theta_0) - f*.
    """
    gamma = app_config.ARMIJO_GAMMA if gamma is None else gamma
    delta = app_config.ARMIJO_DELTA if delta is None else delta
    rho = gamma * min(1.0, 2 * delta * (1 - gamma - sigma))

    return max(
        math.sqrt(diameter ** 2 * M * f_gap / (n * rho * (1 - sigma) ** 2)),
        2 * f_gap / (n * (1 - 3 * sigma)),
    )

def trace_rows(run):
    """
    CSV rows (n, f, g_tilde, eta, h, backtracks, alpha, beta..., lambda).
    """
    for r in run.trace.records:
        yield [r.n, r.f, r.g_tilde, r.eta, r.h, r.backtracks] + [float(v) for v in r.point]

def trace_header(K):
    return ['n', 'f', 'g_tilde', 'eta', 'h', 'backtracks', 'alpha'] + ['beta_%i' % (k + 1) for k in range(K)] + ['lambda']
