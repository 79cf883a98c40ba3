#!/usr/bin/env python

"""
Exceptions raised by the multiplex library.

The fab tasks map NumericError to exit code 2 and every other
MultiplexError to exit code 1.
"""


class MultiplexError(Exception):
    """
    Base class for every error the library raises on purpose.
    """


class DomainError(MultiplexError, ValueError):
    """
    A value lies outside the domain an operation accepts.
    """


class RangeError(DomainError, IndexError):
    """
    A node index is outside 0..N-1.
    """


class ParseError(MultiplexError):
    """
    A line of an input file could not be parsed.
    """
    def __init__(self, path, line_number, message):
        self.path = path
        self.line_number = line_number

        super().__init__('%s:%i: %s' % (path, line_number, message))


class LabelConflictError(MultiplexError):
    """
    A node was assigned two different classes.
    """


class ConfigError(MultiplexError):
    """
    A config document or task argument is invalid.
    """


class NumericError(MultiplexError, ArithmeticError):
    """
    A non-finite value showed up where the math guarantees a finite one.
    """


class OptimizerError(MultiplexError):
    """
    Every optimizer run failed.
    """
    def __init__(self, message, reasons=None):
        self.reasons = reasons or []

        super().__init__(message)
