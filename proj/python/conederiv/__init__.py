"""Sampling-based directional and tangential derivative tests for black-box functions."""

import json

import numpy as np

from . import _core
from ._core import ConfigError, InsufficientSamples, Path, UnknownFixture, build_path

__version__ = _core.__version__

__all__ = [
    "ConfigError",
    "InsufficientSamples",
    "Path",
    "UnknownFixture",
    "build_path",
    "chain_case_names",
    "compose_case",
    "cone_growth",
    "estimate",
    "estimate_fixture",
    "fixture_eval",
    "fixture_info",
    "fixture_names",
    "pullback",
    "run_suite",
]


def _text(obj):
    return "" if obj is None else json.dumps(obj)


def fixture_names():
    return list(_core.fixture_names())


def chain_case_names():
    return list(_core.chain_case_names())


def fixture_info(name):
    return json.loads(_core.fixture_info(name))


def fixture_eval(name, x):
    return np.asarray(_core.fixture_eval(name, np.asarray(x, dtype=float)))


def estimate_fixture(name, estimator="tangential", schedule=None, options=None):
    return json.loads(_core.estimate_fixture(name, estimator, _text(schedule), _text(options)))


def estimate(f, a, basis, n=None, estimator="tangential", schedule=None, options=None):
    """Estimate the derivative of the callable f at a w.r.t. the span of the orthonormal columns of basis."""
    a = np.asarray(a, dtype=float)
    basis = np.asarray(basis, dtype=float).reshape(a.size, -1)
    if n is None:
        n = np.atleast_1d(np.asarray(f(a), dtype=float)).size

    def wrapped(x):
        return np.atleast_1d(np.asarray(f(x), dtype=float))

    return json.loads(_core.estimate_callable(wrapped, a.size, n, a, basis, estimator, _text(schedule), _text(options)))


def cone_growth(name, schedule=None, options=None):
    return json.loads(_core.cone_growth_fixture(name, _text(schedule), _text(options)))


def compose_case(name, schedule=None, options=None):
    return json.loads(_core.compose_case(name, _text(schedule), _text(options)))


def pullback(name, path, L, schedule=None, options=None):
    L = np.atleast_2d(np.asarray(L, dtype=float))
    return json.loads(_core.pullback_fixture(name, path, L, _text(schedule), _text(options)))


def run_suite(config=None, workers=1, wall_clock=True):
    """Run a suite config (a dict); None runs the default suite."""
    config = {"kind": "suite"} if config is None else config
    return json.loads(_core.run_suite(json.dumps(config), workers, wall_clock))
