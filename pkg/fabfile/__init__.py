#!/usr/bin/env python

"""
Command line for the multiplex label-propagation experiments.

    fab synth:setting=noisy,std=2,seed=7,out=out/noisy
    fab run:method=BINOM,graph=out/noisy/edges.tsv,labels=out/noisy/labels_known.tsv,truth=out/noisy/labels_truth.tsv,out=out/run
    fab bench_target bench:samples=5,out=out/bench
    fab scaling:sizes=1200;2400;4800,method=BINOM,out=out/scaling

Pass every argument by keyword.
"""

import json
import logging
import os
import time
import warnings

from fabric.api import local, task
from fabric.state import env
import numpy as np

import app_config
import render_utils
from multiplex.config import load_config
from multiplex.errors import ConfigError, MultiplexError
from multiplex.graph import load_labels, load_multilayer, write_labels, write_multilayer
from multiplex.optimizer import trace_header, trace_rows
from multiplex.pipeline import apr, avg_rank, prepare_inputs, run_method
from multiplex.synth import generate

# Other fabfiles
from . import render
from . import utils

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)

BENCH_METHODS = ['MIN', 'GEOM', 'ARIT', 'HARM', 'MAX', 'BINOM', 'MULTI']

"""
Environments

Changing environment changes log verbosity and parallelism.
"""
@task
def bench_target():
    """
    Run quiet and use every core.
    """
    env.settings = 'bench'
    app_config.configure_targets(env.settings)
    utils.apply_log_level()

@task
def debug():
    """
    Log every Frank-Wolfe iteration.
    """
    env.settings = 'debug'
    app_config.configure_targets(env.settings)
    utils.apply_log_level()

"""
Experiments
"""
def _echo(cfg):
    return json.loads(cfg.model_dump_json())

@task
@utils.exits_cleanly
def synth(setting=None, std=None, seed=None, out='out/synth', config=None):
    """
    Generate a synthetic instance: edges.tsv, labels_known.tsv,
    labels_truth.tsv and spec.json.
    """
    cfg = load_config(config)
    cfg = cfg.updated('synth', setting=setting, std=utils.to_float('std', std), rng_seed=utils.to_int('seed', seed))
    instance = generate(cfg.synth)

    comment = render_utils.echo_comment(_echo(cfg), cfg.synth.rng_seed)

    render_utils.ensure_dir(out)
    write_multilayer(instance.graph, os.path.join(out, 'edges.tsv'), comment=comment)
    write_labels(instance.known, os.path.join(out, 'labels_known.tsv'), comment=comment)
    write_labels(instance.truth, os.path.join(out, 'labels_truth.tsv'), comment=comment)
    render_utils.write_json(
        os.path.join(out, 'spec.json'),
        render_utils.result_payload(_echo(cfg), cfg.synth.rng_seed, layers=list(instance.graph.layer_names))
    )

@task
@utils.exits_cleanly
def run(method=None, graph=None, labels=None, truth=None, seed=None, layer=None, zero_rule=None,
        noise_layers=None, label_fraction=None, out='out/run', config=None):
    """
    Run one method on a graph and its known labels: result.json,
    predictions.tsv and, for learned methods, trace.csv.

    noise_layers= appends reshuffled layers; label_fraction= keeps that share
    of every class's labels and scores against the rest when truth= is absent.
    """
    if not graph or not labels:
        raise ConfigError('run needs graph= and labels=')

    cfg = load_config(config)
    cfg = cfg.updated(
        'experiment',
        method=method,
        rng_seed=utils.to_int('seed', seed),
        layer=utils.to_int('layer', layer),
        zero_rule=zero_rule,
        noise_layers=utils.to_int('noise_layers', noise_layers),
        label_fraction=utils.to_float('label_fraction', label_fraction),
    )

    g = load_multilayer(graph)
    known = load_labels(labels, g.n)
    truth_labels = load_labels(truth, g.n, classes=known.classes) if truth else None
    g, known, truth_labels = prepare_inputs(g, known, cfg.experiment, truth_labels)

    result = run_method(g, known, cfg.experiment, cfg.optimizer, truth_labels)
    comment = render_utils.echo_comment(_echo(cfg), cfg.experiment.rng_seed)

    render_utils.ensure_dir(out)
    render_utils.write_json(
        os.path.join(out, 'result.json'),
        render_utils.result_payload(_echo(cfg), cfg.experiment.rng_seed, result=result.as_dict())
    )
    write_labels(result.prediction_labels(), os.path.join(out, 'predictions.tsv'), comment=comment)

    if result.runs:
        render_utils.write_csv(
            os.path.join(out, 'trace.csv'),
            ['fold', 'class', 'start'] + trace_header(g.K),
            _trace_rows(result, known),
            comment=comment,
        )

def _trace_rows(result, known):
    for fold_run in result.runs:
        name = 'all' if fold_run.class_index < 0 else known.classes[fold_run.class_index]

        for row in trace_rows(fold_run.run):
            yield [fold_run.fold, name, fold_run.run.start_id] + row

def _bench_cell(instance, method, experiment, optimizer):
    exp = experiment.model_copy(update={'method': method, 'layer': None})

    if method.startswith('SINGLE-'):
        exp = experiment.model_copy(update={'method': 'SINGLE', 'layer': int(method.split('-')[1]) - 1})

    return run_method(instance.graph, instance.known, exp, optimizer, instance.truth).accuracy

@task
@utils.exits_cleanly
def bench(samples='1', seed=None, suite='table2', zero_rule=None, out='out/bench', config=None):
    """
    Every synthetic setting x std x method over `samples` seeds:
    bench.csv (mean and sd per cell, then APR and AR rows), bench.md and
    bench.json with per-cell failures.

    zero_rule=present lets layers without an edge abstain for alpha < 0.
    """
    if suite != 'table2':
        raise ConfigError('unknown suite "%s"' % suite)

    samples = utils.to_int('samples', samples)

    if samples < 1:
        raise ConfigError('samples must be at least 1')

    cfg = load_config(config).updated('experiment', zero_rule=zero_rule)
    seed = cfg.synth.rng_seed if seed is None else utils.to_int('seed', seed)
    methods = ['SINGLE-%i' % (k + 1) for k in range(cfg.synth.n_layers)] + BENCH_METHODS
    datasets = []
    means = []
    sds = []
    failures = []

    for setting, stds in app_config.BENCH_STDS.items():
        for std in stds:
            scores = np.full((len(methods), samples), np.nan)

            for s in range(samples):
                synth_cfg = cfg.updated('synth', setting=setting, std=std, rng_seed=seed + s)
                instance = generate(synth_cfg.synth)
                experiment = cfg.experiment.model_copy(update={'rng_seed': seed + s})

                for i, method in enumerate(methods):
                    try:
                        scores[i, s] = _bench_cell(instance, method, experiment, cfg.optimizer)
                    except MultiplexError as e:
                        logger.warning('%s %s std=%g sample %i failed: %s' % (method, setting, std, s, e))
                        failures.append({'setting': setting, 'std': std, 'sample': s, 'method': method, 'error': type(e).__name__, 'message': str(e)})

            datasets.append('%s-%g' % (setting, std))

            with warnings.catch_warnings():
                # all-failed cells stay nan
                warnings.simplefilter('ignore', RuntimeWarning)
                means.append(np.nanmean(scores, axis=1))
                sds.append(np.nanstd(scores, axis=1))

            logger.info('Finished %s std=%g' % (setting, std))

    # algorithms x datasets; failed cells count as zero accuracy
    grid = np.nan_to_num(np.array(means).T, nan=0.0)
    header = ['dataset']

    for method in methods:
        header.extend([method, '%s_sd' % method])

    rows = []

    for d, dataset in enumerate(datasets):
        row = [dataset]

        for i in range(len(methods)):
            row.extend(['%.4f' % means[d][i], '%.4f' % sds[d][i]])

        rows.append(row)

    for name, values in (('APR', apr(grid)), ('AR', avg_rank(grid))):
        row = [name]

        for v in values:
            row.extend(['%.4f' % v, ''])

        rows.append(row)

    render_utils.ensure_dir(out)
    csv_path = os.path.join(out, 'bench.csv')
    comment = render_utils.echo_comment(_echo(cfg), seed, samples=samples)
    render_utils.write_csv(csv_path, header, rows, comment=comment)
    render.render_table(render_utils.read_csv(csv_path), samples, os.path.join(out, 'bench.md'), echo=comment)
    render_utils.write_json(
        os.path.join(out, 'bench.json'),
        render_utils.result_payload(_echo(cfg), seed, samples=samples, datasets=datasets, methods=methods, failures=failures)
    )

@task
@utils.exits_cleanly
def scaling(sizes='1200;2400;4800', method='BINOM', seed=None, runs=None, out='out/scaling', config=None):
    """
    Mean wall-clock seconds of one method at growing node counts.
    """
    sizes = utils.to_list('sizes', sizes)
    runs = app_config.SCALING_RUNS if runs is None else utils.to_int('runs', runs)

    if not sizes or sizes != sorted(sizes):
        raise ConfigError('sizes must be a non-empty ascending list')

    cfg = load_config(config)
    cfg = cfg.updated('experiment', method=method, rng_seed=utils.to_int('seed', seed))
    rows = []

    for n in sizes:
        per = n // cfg.synth.n_communities

        if per * cfg.synth.n_communities != n:
            raise ConfigError('%i nodes do not split into %i communities' % (n, cfg.synth.n_communities))

        instance = generate(cfg.updated('synth', n_per_community=per, rng_seed=cfg.experiment.rng_seed).synth)
        seconds = []

        for r in range(runs):
            started = time.perf_counter()
            run_method(instance.graph, instance.known, cfg.experiment, cfg.optimizer)
            seconds.append(time.perf_counter() - started)

        logger.info('%s on %i nodes: %.3f s mean over %i runs' % (method, n, np.mean(seconds), runs))
        rows.append([n, method, '%.6f' % np.mean(seconds), runs])

    render_utils.ensure_dir(out)
    render_utils.write_csv(
        os.path.join(out, 'scaling.csv'),
        ['n_nodes', 'method', 'mean_seconds', 'runs'],
        rows,
        comment=render_utils.echo_comment(_echo(cfg), cfg.experiment.rng_seed),
    )

"""
Testing
"""
@task
def tests(slow=False):
    """
    Run Python unit tests. slow=true adds the full-size benchmark checks.
    """
    if str(slow).lower() in ('true', '1', 'yes'):
        local('MULTIPLEX_SLOW_TESTS=1 nose2 -v')
    else:
        local('nose2 -v')
