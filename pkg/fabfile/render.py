#!/usr/bin/env python

"""
Commands for rendering benchmark results.
"""

import codecs
import json
import logging
import os

from fabric.api import task
from jinja2 import Template

import app_config
import render_utils

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)

TABLE_TEMPLATE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'confs', 'bench_table.md')

def _cell(mean, sd):
    if mean in ('', 'nan', None):
        return 'n/a'

    if sd in ('', None):
        return '%.2f' % float(mean)

    return '%.2f±%.2f' % (float(mean), float(sd))

def table_context(rows, samples, echo=None):
    """
    Template context from bench CSV rows (dicts keyed by column name).
    """
    methods = [k for k in rows[0] if k != 'dataset' and not k.endswith('_sd')] if rows else []
    context = render_utils.flatten_app_config()
    context['samples'] = samples
    context['echo'] = echo
    context['methods'] = methods
    context['rows'] = [
        {
            'dataset': row['dataset'],
            'cells': [_cell(row[m], row.get('%s_sd' % m)) for m in methods],
        }
        for row in rows
    ]

    return context

def render_table(rows, samples, out_path, echo=None):
    """
    Write the Markdown table; `echo` goes into a leading HTML comment.
    """
    with codecs.open(TABLE_TEMPLATE, encoding='utf-8') as f:
        payload = Template(f.read())

    with codecs.open(out_path, 'w', encoding='utf-8') as f:
        f.write(payload.render(**table_context(rows, samples, echo)))

    logger.info('Rendered %s' % out_path)

def _leading_comment(path):
    """
    The `# ` line write_csv leaves at the top of a CSV, or None.
    """
    with codecs.open(path, encoding='utf-8') as f:
        first = f.readline()

    if not first.startswith('# '):
        return None

    return first[2:].strip()

@task
def table(csv_path, out=None):
    """
    Render a bench CSV to a Markdown table.
    """
    out = out or '%s.md' % os.path.splitext(csv_path)[0]

    comment = _leading_comment(csv_path)
    samples = json.loads(comment).get('samples', '?') if comment else '?'

    render_table(render_utils.read_csv(csv_path), samples, out, echo=comment)
