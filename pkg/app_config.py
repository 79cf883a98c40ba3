#!/usr/bin/env python

"""
Project-wide application configuration.

Every numeric default used by the library and the fab tasks lives here.
JSON config files (see multiplex/config.py) override these per run; they
never modify this module.
"""

import logging
import os

"""
NAMES
"""
# Project name to be used in output paths
# Use dashes, not underscores!
PROJECT_SLUG = 'multiplex-ssl'

# Project name to be used in file paths
PROJECT_FILENAME = 'multiplex_ssl'

REPOSITORY_NAME = 'multiplex-ssl'

"""
GRAPH FILES
"""
# How to merge an (i, j) record with a (j, i) record: 'max' or 'sum'
EDGE_UNIFICATION = 'max'

"""
AGGREGATION
"""
# Half-width of the alpha box [-a, a]
ALPHA_BOUND = 20.0

# Bounds of the lambda box [l0, l1]
LAMBDA_MIN = 0.1
LAMBDA_MAX = 10.0

# Below this |alpha| the power mean is evaluated as a geometric mean
ALPHA_SWITCH = 1e-6

# Entries some layers lack, for alpha < 0: 'limit' drops the entry,
# 'present' averages over the layers that have it
ZERO_RULE = 'limit'

"""
PROPAGATION
"""
PROPAGATION_TOL = 1e-10
PROPAGATION_MAX_ITER = 10000

# Floor applied inside every log of the cross-entropy losses
LOG_CLAMP = 1e-12

# Only the test oracle solves densely, and only up to this many nodes
DENSE_SOLVE_MAX_NODES = 256

"""
OPTIMIZER
"""
GAP_TOLERANCE = 1e-4
FD_STEP = 1e-4
FD_STEP_MIN = 1e-9
ARMIJO_GAMMA = 0.25
ARMIJO_DELTA = 0.5
MAX_BACKTRACKS = 30
MAX_ITERATIONS = 100

"""
PROTOCOL
"""
N_FOLDS = 5
N_STARTS = 10
FIXED_LAMBDA = 1.0
RNG_SEED = 0

"""
SYNTHETIC BENCHMARK
"""
SYNTH_N_PER_COMMUNITY = 400
SYNTH_N_COMMUNITIES = 3
SYNTH_N_LAYERS = 3
SYNTH_DIM = 5
SYNTH_KNN_K = 5
SYNTH_NOISE_KNN_K = 1
SYNTH_LABEL_FRACTION = 0.20
SYNTH_CENTER_SCALE = 10.0

BENCH_STDS = {
    'informative': [5.0, 6.0, 7.0, 8.0],
    'noisy': [2.0, 3.0, 4.0, 5.0],
    'complementary': [2.0, 3.0, 4.0, 5.0],
}

SCALING_RUNS = 3

# These variables will be set at runtime. See configure_targets() below
N_JOBS = 1
LOG_LEVEL = logging.INFO

"""
Logging
"""
LOG_FORMAT = '%(levelname)s:%(name)s:%(asctime)s: %(message)s'

"""
Utilities
"""
def configure_targets(deployment_target):
    """
    Configure run targets. Benchmarks run quiet and parallel,
    everything else runs verbose and sequential.
    """
    global N_JOBS
    global LOG_LEVEL
    global DEPLOYMENT_TARGET

    if deployment_target == 'bench':
        N_JOBS = -1
        LOG_LEVEL = logging.WARNING
    elif deployment_target == 'debug':
        N_JOBS = 1
        LOG_LEVEL = logging.DEBUG
    else:
        N_JOBS = 1
        LOG_LEVEL = logging.INFO

    DEPLOYMENT_TARGET = deployment_target

"""
Run automated configuration
"""
DEPLOYMENT_TARGET = os.environ.get('MULTIPLEX_TARGET', None)

configure_targets(DEPLOYMENT_TARGET)
