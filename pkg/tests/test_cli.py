#!/usr/bin/env python

import json
import os
import shutil
import tempfile
import unittest

import fabfile
from fabfile import render, utils
import render_utils

SLOW = bool(os.environ.get('MULTIPLEX_SLOW_TESTS'))

SMALL = {
    'synth': {'n_per_community': 10, 'knn_k': 2, 'label_fraction': 0.3, 'std': 1.0},
    'experiment': {'n_folds': 2, 'n_starts': 2},
    'optimizer': {'max_iter': 1, 'max_backtracks': 2},
}

def read(path):
    with open(path, 'rb') as f:
        return f.read()

def echo_of(path):
    """
    The JSON echo on the first line of an output file.
    """
    with open(path, encoding='utf-8') as f:
        first = f.readline().strip()

    if first.startswith('<!--'):
        first = first[len('<!--'):-len('-->')]
    else:
        assert first.startswith('# '), first
        first = first[2:]

    return json.loads(first)

def reject_constant(name):
    raise ValueError('not strict JSON: %s' % name)

def load_strict(path):
    with open(path, encoding='utf-8') as f:
        return json.load(f, parse_constant=reject_constant)

def data_lines(path):
    with open(path, encoding='utf-8') as f:
        return [line for line in f if not line.startswith('#')]

class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.config = os.path.join(self.tmp, 'small.json')

        with open(self.config, 'w', encoding='utf-8') as f:
            json.dump(SMALL, f)

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def path(self, *parts):
        return os.path.join(self.tmp, *parts)

    def make_instance(self, name='synth', **kwargs):
        fabfile.synth(out=self.path(name), config=self.config, **kwargs)

        return self.path(name)

    def run_method(self, method, out='run'):
        data = self.make_instance()
        fabfile.run(
            method=method,
            graph=os.path.join(data, 'edges.tsv'),
            labels=os.path.join(data, 'labels_known.tsv'),
            truth=os.path.join(data, 'labels_truth.tsv'),
            out=self.path(out),
            config=self.config,
        )

        with open(self.path(out, 'result.json'), encoding='utf-8') as f:
            return json.load(f)

class SynthTaskTestCase(CliTestCase):
    def test_outputs_are_reproducible(self):
        a = self.make_instance('a', setting='noisy', seed='3')
        b = self.make_instance('b', setting='noisy', seed='3')

        for name in ('edges.tsv', 'labels_known.tsv', 'labels_truth.tsv', 'spec.json'):
            assert read(os.path.join(a, name)) == read(os.path.join(b, name))

    def test_spec_echo(self):
        data = self.make_instance(std='2.5')

        with open(os.path.join(data, 'spec.json'), encoding='utf-8') as f:
            spec = json.load(f)

        assert spec['config']['synth']['std'] == 2.5
        assert spec['seed'] == 0
        assert len(spec['layers']) == 3

        for name in ('edges.tsv', 'labels_known.tsv', 'labels_truth.tsv'):
            echo = echo_of(os.path.join(data, name))

            assert echo['config']['synth']['std'] == 2.5
            assert echo['seed'] == 0

    def test_invalid_std_exits(self):
        with self.assertRaises(SystemExit) as cm:
            self.make_instance('bad', std='0')

        assert cm.exception.code == 1

        with open(self.path('bad', 'error.json'), encoding='utf-8') as f:
            error = json.load(f)

        assert error['error'] == 'ConfigError'

class RunTaskTestCase(CliTestCase):
    def test_fixed_mean(self):
        result = self.run_method('ARIT')

        assert 'theta' in result['result']
        assert 0.0 <= result['result']['accuracy'] <= 1.0
        assert not os.path.exists(self.path('run', 'trace.csv'))

        echo = echo_of(self.path('run', 'predictions.tsv'))

        assert echo['config']['experiment']['method'] == 'ARIT'
        assert echo['seed'] == 0

    def test_limit_result_is_strict_json(self):
        self.run_method('MIN')
        result = load_strict(self.path('run', 'result.json'))

        self.assertEqual(result['result']['theta']['alpha'], '-inf')

    def test_noise_layers_and_label_fraction(self):
        data = self.make_instance()
        fabfile.run(
            method='ARIT',
            graph=os.path.join(data, 'edges.tsv'),
            labels=os.path.join(data, 'labels_truth.tsv'),
            noise_layers='2',
            label_fraction='0.2',
            out=self.path('variant'),
            config=self.config,
        )
        result = load_strict(self.path('variant', 'result.json'))

        self.assertEqual(len(result['result']['theta']['beta']), 5)
        assert 0.0 <= result['result']['accuracy'] <= 1.0
        self.assertEqual(len(data_lines(self.path('variant', 'predictions.tsv'))), 30 - 6)
        assert result['config']['experiment']['noise_layers'] == 2

    def test_multi(self):
        result = self.run_method('MULTI')
        rows = render_utils.read_csv(self.path('run', 'trace.csv'))

        assert len(result['result']['theta']['beta']) == 3
        assert rows
        self.assertEqual(list(rows[0])[:3], ['fold', 'class', 'start'])
        assert all(row['class'] == 'all' for row in rows)

    def test_binom(self):
        result = self.run_method('BINOM')

        self.assertEqual(sorted(result['result']['thetas']), ['0', '1', '2'])

    def test_predictions_cover_unlabeled_nodes(self):
        self.run_method('HARM')

        predicted = [line.split('\t')[0] for line in data_lines(self.path('run', 'predictions.tsv'))]
        known = [line.split('\t')[0] for line in data_lines(self.path('synth', 'labels_known.tsv'))]

        assert len(predicted) + len(known) == 30
        assert not set(predicted) & set(known)

    def test_missing_inputs(self):
        with self.assertRaises(SystemExit) as cm:
            fabfile.run(method='ARIT', out=self.path('run'))

        assert cm.exception.code == 1

    def test_missing_graph_file(self):
        with self.assertRaises(SystemExit):
            fabfile.run(method='ARIT', graph=self.path('nope.tsv'), labels=self.path('nope.tsv'), out=self.path('run'))

        assert os.path.exists(self.path('run', 'error.json'))

class BenchTaskTestCase(CliTestCase):
    def test_bench(self):
        fabfile.bench(samples='1', out=self.path('bench'), config=self.config)
        rows = render_utils.read_csv(self.path('bench', 'bench.csv'))

        assert len(rows) == 12 + 2
        self.assertEqual([row['dataset'] for row in rows[-2:]], ['APR', 'AR'])
        self.assertEqual(rows[0]['dataset'], 'informative-5')
        assert 'SINGLE-1' in rows[0] and 'MULTI_sd' in rows[0]

        with open(self.path('bench', 'bench.md'), encoding='utf-8') as f:
            table = f.read()

        assert table.startswith('<!-- {')
        assert '| Dataset |' in table
        assert '| APR |' in table
        assert echo_of(self.path('bench', 'bench.md'))['samples'] == 1

        with open(self.path('bench', 'bench.json'), encoding='utf-8') as f:
            summary = json.load(f)

        assert len(summary['methods']) == 10
        assert summary['samples'] == 1

    def test_zero_rule_reaches_the_bench(self):
        fabfile.bench(samples='1', zero_rule='present', out=self.path('bench'), config=self.config)
        echo = echo_of(self.path('bench', 'bench.csv'))

        assert echo['config']['experiment']['zero_rule'] == 'present'

    def test_unknown_zero_rule(self):
        with self.assertRaises(SystemExit) as cm:
            fabfile.bench(zero_rule='union', out=self.path('bench'))

        assert cm.exception.code == 1

    def test_unknown_suite(self):
        with self.assertRaises(SystemExit):
            fabfile.bench(suite='table3', out=self.path('bench'))

    def test_scaling(self):
        fabfile.scaling(sizes='30;60', method='ARIT', runs='1', out=self.path('scaling'), config=self.config)
        rows = render_utils.read_csv(self.path('scaling', 'scaling.csv'))

        self.assertEqual([row['n_nodes'] for row in rows], ['30', '60'])
        assert all(float(row['mean_seconds']) > 0 for row in rows)

    def test_scaling_sizes_must_ascend(self):
        with self.assertRaises(SystemExit):
            fabfile.scaling(sizes='60;30', out=self.path('scaling'))

class ExitsCleanlyTestCase(CliTestCase):
    def test_unexpected_error_exits_with_2(self):
        @utils.exits_cleanly
        def broken(out=None):
            raise ValueError('boom')

        with self.assertRaises(SystemExit) as cm:
            broken(out=self.path('boom'))

        assert cm.exception.code == 2

        error = load_strict(self.path('boom', 'error.json'))

        assert error['error'] == 'ValueError'
        assert error['message'] == 'boom'

@unittest.skipUnless(SLOW, 'set MULTIPLEX_SLOW_TESTS=1 to time the full-size runs')
class ScalingTrendTestCase(CliTestCase):
    def seconds(self, name, **kwargs):
        fabfile.scaling(runs='1', out=self.path(name), **kwargs)

        return {int(row['n_nodes']): float(row['mean_seconds']) for row in render_utils.read_csv(self.path(name, 'scaling.csv'))}

    def test_binom_grows_gently(self):
        seconds = self.seconds('binom', sizes='1200;2400;4800', method='BINOM')

        self.assertLess(seconds[4800] / seconds[1200], 4.0)

    def test_fixed_means_are_much_faster(self):
        binom = self.seconds('binom', sizes='1200', method='BINOM')[1200]

        for method in ('ARIT', 'HARM', 'GEOM', 'MIN', 'MAX'):
            fixed = self.seconds(method, sizes='1200', method=method)[1200]

            self.assertLess(fixed * 50, binom)

class RenderTestCase(CliTestCase):
    def test_table(self):
        csv_path = self.path('bench.csv')
        render_utils.write_csv(
            csv_path,
            ['dataset', 'ARIT', 'ARIT_sd', 'BINOM', 'BINOM_sd'],
            [['noisy-2', '0.6700', '0.0200', '0.9900', '0.0100'], ['APR', '0.6800', '', '1.0000', '']],
            comment=json.dumps({'samples': 3}),
        )
        render.table(csv_path)

        with open(self.path('bench.md'), encoding='utf-8') as f:
            table = f.read()

        assert '3 sample(s)' in table
        assert '| noisy-2 | 0.67±0.02 | 0.99±0.01 |' in table
        assert '| APR | 0.68 | 1.00 |' in table

if __name__ == '__main__':
    unittest.main()
