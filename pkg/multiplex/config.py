#!/usr/bin/env python

"""
Per-run configuration documents.

A config file is JSON with up to three sections, `experiment`, `synth`
and `optimizer`. Every field is optional and defaults to the matching
constant in app_config. Unknown keys are rejected.
"""

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import app_config
from multiplex.errors import ConfigError

FIXED_MEANS = ('MIN', 'GEOM', 'ARIT', 'HARM', 'MAX')


class StrictModel(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class OptimizerConfig(StrictModel):
    """
    Frank-Wolfe settings plus the feasible box.
    """
    tau: float = Field(default=app_config.GAP_TOLERANCE, ge=0)
    h0: float = Field(default=app_config.FD_STEP, gt=0)
    h_min: float = Field(default=app_config.FD_STEP_MIN, gt=0)
    gamma: float = app_config.ARMIJO_GAMMA
    delta: float = app_config.ARMIJO_DELTA
    max_iter: int = Field(default=app_config.MAX_ITERATIONS, ge=1)
    max_backtracks: int = Field(default=app_config.MAX_BACKTRACKS, ge=0)
    a: float = Field(default=app_config.ALPHA_BOUND, gt=0)
    l0: float = Field(default=app_config.LAMBDA_MIN, gt=0)
    l1: float = app_config.LAMBDA_MAX

    # Optional smoothness estimate; when given, h_n is also capped at xi * tau
    lipschitz: Optional[float] = Field(default=None, gt=0)
    sigma: float = Field(default=0.0, ge=0, lt=1.0 / 3.0)

    propagation_tol: float = Field(default=app_config.PROPAGATION_TOL, gt=0)
    propagation_max_iter: int = Field(default=app_config.PROPAGATION_MAX_ITER, ge=1)

    @field_validator('gamma')
    @classmethod
    def gamma_in_range(cls, v):
        if not 0 < v < 0.5:
            raise ValueError('gamma must lie in (0, 1/2)')

        return v

    @field_validator('delta')
    @classmethod
    def delta_in_range(cls, v):
        if not 0 < v < 1:
            raise ValueError('delta must lie in (0, 1)')

        return v

    @model_validator(mode='after')
    def check_bounds(self):
        if not self.l0 < self.l1:
            raise ValueError('lambda bounds need 0 < l0 < l1')

        if self.h_min > self.h0:
            raise ValueError('h_min must not exceed h0')

        return self


class SynthSpec(StrictModel):
    """
    One synthetic benchmark instance.
    """
    setting: Literal['informative', 'noisy', 'complementary'] = 'informative'
    std: float = 5.0
    n_per_community: int = Field(default=app_config.SYNTH_N_PER_COMMUNITY, ge=1)
    n_communities: int = Field(default=app_config.SYNTH_N_COMMUNITIES, ge=1)
    n_layers: int = Field(default=app_config.SYNTH_N_LAYERS, ge=1)
    dim: int = Field(default=app_config.SYNTH_DIM, ge=1)
    knn_k: int = app_config.SYNTH_KNN_K
    noise_knn_k: int = app_config.SYNTH_NOISE_KNN_K
    label_fraction: float = app_config.SYNTH_LABEL_FRACTION
    center_scale: float = Field(default=app_config.SYNTH_CENTER_SCALE, gt=0)
    rng_seed: int = app_config.RNG_SEED

    @field_validator('std')
    @classmethod
    def std_positive(cls, v):
        if not v > 0:
            raise ValueError('std must be positive')

        return v

    @field_validator('knn_k', 'noise_knn_k')
    @classmethod
    def k_positive(cls, v):
        if v < 1:
            raise ValueError('k-NN degree must be at least 1')

        return v

    @field_validator('label_fraction')
    @classmethod
    def fraction_in_range(cls, v):
        if not 0 < v <= 1:
            raise ValueError('label_fraction must lie in (0, 1]')

        return v

    @model_validator(mode='after')
    def check_shape(self):
        if self.setting == 'complementary' and self.n_layers != self.n_communities:
            raise ValueError('the complementary setting needs one layer per community')

        if self.n_per_community < self.knn_k + 1:
            raise ValueError('each community needs more than knn_k points')

        return self


class ExperimentSpec(StrictModel):
    """
    Which method to run and how to split the known labels.
    """
    method: Literal['MULTI', 'BINOM', 'MIN', 'GEOM', 'ARIT', 'HARM', 'MAX', 'SINGLE'] = 'BINOM'
    layer: Optional[int] = Field(default=None, ge=0)
    n_folds: int = Field(default=app_config.N_FOLDS, ge=2)
    n_starts: int = Field(default=app_config.N_STARTS, ge=2)
    rng_seed: int = app_config.RNG_SEED
    fixed_lambda: float = Field(default=app_config.FIXED_LAMBDA, gt=0)
    stratified: bool = True
    zero_rule: Literal['limit', 'present'] = app_config.ZERO_RULE

    # Applied to loaded inputs: appended reshuffled layers and a per-class
    # subsample of the known labels
    noise_layers: int = Field(default=0, ge=0)
    label_fraction: Optional[float] = Field(default=None, gt=0, le=1)

    @model_validator(mode='after')
    def check_layer(self):
        if self.method == 'SINGLE' and self.layer is None:
            raise ValueError('method SINGLE needs a layer index')

        return self


class Config(StrictModel):
    experiment: ExperimentSpec = ExperimentSpec()
    synth: SynthSpec = SynthSpec()
    optimizer: OptimizerConfig = OptimizerConfig()

    def updated(self, section, **changes):
        """
        Copy with some fields of one section replaced, re-validated.
        """
        current = getattr(self, section).model_dump()
        current.update(dict((k, v) for k, v in changes.items() if v is not None))

        try:
            replacement = type(getattr(self, section))(**current)
        except ValidationError as e:
            raise ConfigError(str(e))

        return self.model_copy(update={section: replacement})


def load_config(path=None):
    """
    Parse and validate a JSON config file; no path means all defaults.
    """
    if path is None:
        return Config()

    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError('%s: %s' % (path, e.strerror))
    except json.JSONDecodeError as e:
        raise ConfigError('%s: invalid JSON (%s)' % (path, e))

    if not isinstance(data, dict):
        raise ConfigError('%s: top level must be an object' % path)

    try:
        return Config.model_validate(data)
    except ValidationError as e:
        raise ConfigError('%s: %s' % (path, e))
