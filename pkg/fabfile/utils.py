#!/usr/bin/env python

import functools
import logging
import os
import sys

from pydantic import ValidationError
from termcolor import colored

import app_config
import render_utils
from multiplex.errors import ConfigError, MultiplexError, NumericError

logging.basicConfig(format=app_config.LOG_FORMAT)
logger = logging.getLogger(__name__)
logger.setLevel(app_config.LOG_LEVEL)

"""
Utilities used by multiple commands.
"""

LOGGER_PREFIXES = ('multiplex', 'render_utils', 'fabfile')

def apply_log_level():
    """
    Push app_config.LOG_LEVEL onto every project logger created so far.
    """
    for name in list(logging.root.manager.loggerDict):
        if name.startswith(LOGGER_PREFIXES):
            logging.getLogger(name).setLevel(app_config.LOG_LEVEL)

def exit_code(error):
    """
    2 for numeric failures, 1 for everything else.
    """
    if isinstance(error, NumericError):
        return 2

    return 1

def fail(error, out=None, config=None, code=None):
    """
    Report an error in red, leave error.json in `out` and exit.
    """
    print(colored('%s: %s' % (type(error).__name__, error), 'red'))

    if out:
        render_utils.ensure_dir(out)
        render_utils.write_json(os.path.join(out, 'error.json'), {
            'error': type(error).__name__,
            'message': str(error),
            'reasons': getattr(error, 'reasons', []),
            'config': config,
        })

    sys.exit(exit_code(error) if code is None else code)

def exits_cleanly(fn):
    """
    Turn errors raised by a task into an exit code and error.json. Anything
    outside the library's own errors exits with 2.
    The task must receive its output directory as the `out` keyword.
    """
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (MultiplexError, ValidationError, OSError) as e:
            fail(e, kwargs.get('out'), kwargs.get('config'))
        except Exception as e:
            logger.exception('Unexpected failure in %s' % fn.__name__)
            fail(e, kwargs.get('out'), kwargs.get('config'), code=2)

    return wrapper

def to_int(name, value):
    try:
        return None if value is None else int(value)
    except ValueError:
        raise ConfigError('%s must be an integer, got "%s"' % (name, value))

def to_float(name, value):
    try:
        return None if value is None else float(value)
    except ValueError:
        raise ConfigError('%s must be a number, got "%s"' % (name, value))

def to_list(name, value, cast=int):
    """
    Split a `;`-separated task argument (fab splits on commas).
    """
    try:
        return [cast(v) for v in str(value).split(';') if v.strip()]
    except ValueError:
        raise ConfigError('%s must be a ;-separated list, got "%s"' % (name, value))
