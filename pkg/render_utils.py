#!/usr/bin/env python

"""
Helpers for writing result files: JSON encoding of numpy values and
the config echo every output carries.
"""

import codecs
import csv
from dataclasses import asdict, is_dataclass
from datetime import datetime
import json
import logging
import math
import os

import numpy as np
from pydantic import BaseModel

import app_config

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)

class BetterJSONEncoder(json.JSONEncoder):
    """
    A JSON encoder that intelligently handles datetimes, numpy values,
    pydantic models and dataclasses.
    """
    def default(self, obj):
        if isinstance(obj, datetime):
            encoded_object = obj.isoformat()
        elif isinstance(obj, np.integer):
            encoded_object = int(obj)
        elif isinstance(obj, np.floating):
            encoded_object = float(obj)
        elif isinstance(obj, np.ndarray):
            encoded_object = obj.tolist()
        elif isinstance(obj, BaseModel):
            encoded_object = obj.model_dump()
        elif is_dataclass(obj):
            encoded_object = asdict(obj)
        else:
            encoded_object = json.JSONEncoder.default(self, obj)

        return json_safe(encoded_object)

def json_safe(obj):
    """
    Replace non-finite floats with 'inf', '-inf' or 'nan' so the output
    stays strict JSON.
    """
    if isinstance(obj, (float, np.floating)):
        value = float(obj)

        return value if math.isfinite(value) else repr(value)

    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())

    if isinstance(obj, dict):
        return dict((k, json_safe(v)) for k, v in obj.items())

    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]

    return obj

def flatten_app_config():
    """
    Returns a copy of app_config containing only
    configuration variables.
    """
    config = {}

    # Only all-caps [constant] vars get included
    for k, v in app_config.__dict__.items():
        if k.upper() == k:
            config[k] = v

    return config

def echo_comment(config, seed, **extra):
    """
    One-line JSON echo of the resolved config and seed for `# ` headers.
    """
    echo = dict(extra)
    echo['config'] = config
    echo['seed'] = seed

    return json.dumps(json_safe(echo), sort_keys=True)

def result_payload(config, seed, **body):
    """
    Wrap a result body with the resolved config, app_config and seed.
    """
    payload = dict(body)
    payload['config'] = config
    payload['app_config'] = flatten_app_config()
    payload['seed'] = seed

    return payload

def write_json(path, payload):
    """
    Deterministic, sorted JSON so reruns give byte-identical files.
    """
    with codecs.open(path, 'w', encoding='utf-8') as f:
        json.dump(json_safe(payload), f, cls=BetterJSONEncoder, indent=2, sort_keys=True, allow_nan=False)
        f.write('\n')

    logger.info('Wrote %s' % path)

def write_csv(path, header, rows, comment=None):
    """
    Write a CSV; `comment` becomes a leading `# ` line.
    """
    with codecs.open(path, 'w', encoding='utf-8') as f:
        if comment:
            f.write('# %s\n' % comment)

        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)

        for row in rows:
            writer.writerow(row)

    logger.info('Wrote %s' % path)

def read_csv(path):
    """
    Rows of a CSV written by write_csv, skipping comment lines.
    """
    with codecs.open(path, encoding='utf-8') as f:
        lines = [line for line in f if not line.startswith('#')]

    return list(csv.DictReader(lines))

def ensure_dir(path):
    if not os.path.isdir(path):
        os.makedirs(path)

    return path
