"""
Utility functions for run configuration management.

A run is described by a flat YAML mapping, one key per line. Keys are
validated by RunConfig; every error names the offending key and, when the
key appears in the file, its 1-based line.
"""
import logging
import math
import os
from typing import Any, Dict, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from robustdicke.core.exceptions import ConfigError
from robustdicke.core.types import (
    NORM_TOLERANCE, AmplitudeState, ControlPulse, GridKind, ParameterBox, RateMode,
    SignalRestrictions, SolverSettings, SpinNetwork, TargetKind, TargetProfile
)
from robustdicke.optimization.designer import default_moment_orders
from robustdicke.optimization.targets import build_target


logger = logging.getLogger(__name__)

STEP_TOLERANCE = 1e-9


class RunConfig(BaseModel):
    """Validated configuration of a design, simulation or verification run."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_particles: int = Field(ge=2)
    target_kind: TargetKind
    chi: float = Field(default=1.0, gt=0)
    delta_xi: float = Field(default=0.2, ge=0, lt=1)
    delta_zeta: float = Field(default=0.0, ge=0, lt=1)
    horizon: float = Field(default=9.0, gt=0)
    dt: float = Field(default=0.01, gt=0)
    moment_order_xi: Optional[int] = Field(default=None, ge=0)
    moment_order_zeta: Optional[int] = Field(default=None, ge=0)
    u_init_x: float = 3.0
    u_init_z: float = 3.0
    u_min: float = 0.0
    u_max: float = 40.0
    rate_mode: RateMode = RateMode.LITERAL_OVER_T
    rate_value: float = Field(default=1e4, gt=0)
    rate_min: Optional[float] = None
    rate_max: Optional[float] = None
    eval_grid_nx: int = Field(default=21, ge=1)
    eval_grid_nz: int = Field(default=21, ge=1)
    eval_grid_kind: GridKind = GridKind.UNIFORM
    max_outer_iters: int = Field(default=200, ge=0)
    objective_tol: float = Field(default=1e-8, gt=0)
    lambda_init: float = Field(default=1.0, gt=0)
    lambda_increase: float = Field(default=10.0, gt=1)
    lambda_decrease: float = Field(default=2.0, gt=1)
    lambda_max: float = Field(default=1e12, gt=0)
    qp_max_iters: int = Field(default=4000, ge=1)
    qp_tol: float = Field(default=1e-8, gt=0)
    output_dir: str = "results"
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    seed: int = Field(default=0, ge=0)
    target_amplitudes: Optional[Dict[float, float]] = None
    initial_state: Union[Literal["ground", "excited"], Dict[float, float]] = "ground"
    export_moments: bool = False

    @model_validator(mode="before")
    @classmethod
    def _resolve_orders(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        try:
            box = ParameterBox(float(data.get("delta_xi", 0.2)), float(data.get("delta_zeta", 0.0)))
        except (TypeError, ValueError):
            # field validation reports the bad delta
            return data
        default_xi, default_zeta = default_moment_orders(box)
        for key, collapsed, default in (("moment_order_xi", box.xi_collapsed, default_xi),
                                        ("moment_order_zeta", box.zeta_collapsed, default_zeta)):
            if collapsed:
                data[key] = 0
            elif data.get(key) is None:
                data[key] = default
        return data

    @model_validator(mode="after")
    def _check_consistency(self) -> 'RunConfig':
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > STEP_TOLERANCE * max(steps, 1.0):
            raise ConfigError(f"dt={self.dt} does not divide horizon={self.horizon}", key="dt")
        if self.u_min > self.u_max:
            raise ConfigError(f"u_min={self.u_min} exceeds u_max={self.u_max}", key="u_min")
        for key in ("u_init_x", "u_init_z"):
            value = getattr(self, key)
            if not self.u_min <= value <= self.u_max:
                raise ConfigError(f"{key}={value} lies outside [u_min, u_max]=[{self.u_min}, {self.u_max}]",
                                  key=key)
        rate_key = "rate_min" if self.rate_min is not None else "rate_max"
        try:
            restrictions = self.restrictions()
        except ValueError as e:
            raise ConfigError(str(e), key=rate_key)
        # the constant initial pulse has zero slew
        if restrictions.rate_min > 0.0:
            raise ConfigError(f"rate_min={restrictions.rate_min} excludes the constant initial pulse", key="rate_min")
        if restrictions.rate_max < 0.0:
            raise ConfigError(f"rate_max={restrictions.rate_max} excludes the constant initial pulse", key="rate_max")

        net = self.network()
        if self.target_kind is TargetKind.CUSTOM:
            if not self.target_amplitudes:
                raise ConfigError("CUSTOM targets need target_amplitudes", key="target_kind")
            try:
                build_target(TargetKind.CUSTOM, net, self.target_amplitudes)
            except ValueError as e:
                raise ConfigError(str(e), key="target_amplitudes")
        elif self.target_amplitudes is not None:
            raise ConfigError(f"target_amplitudes only apply to CUSTOM targets, not {self.target_kind.value}",
                              key="target_amplitudes")
        if isinstance(self.initial_state, dict):
            try:
                self.initial_amplitudes()
            except ValueError as e:
                raise ConfigError(str(e), key="initial_state")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def network(self) -> SpinNetwork:
        return SpinNetwork(self.n_particles, self.chi)

    def parameter_box(self) -> ParameterBox:
        return ParameterBox(self.delta_xi, self.delta_zeta)

    def target(self) -> TargetProfile:
        return build_target(self.target_kind, self.network(), self.target_amplitudes)

    def restrictions(self) -> SignalRestrictions:
        """Amplitude box shared by both channels; rate bounds default to +-rate_value."""
        rate_min = -self.rate_value if self.rate_min is None else self.rate_min
        rate_max = self.rate_value if self.rate_max is None else self.rate_max
        return SignalRestrictions(self.u_min, self.u_max, self.u_min, self.u_max, self.rate_mode, rate_min, rate_max)

    def solver_settings(self) -> SolverSettings:
        return SolverSettings(
            max_outer_iters=self.max_outer_iters,
            objective_tol=self.objective_tol,
            lambda_init=self.lambda_init,
            lambda_increase=self.lambda_increase,
            lambda_decrease=self.lambda_decrease,
            lambda_max=self.lambda_max,
            qp_max_iters=self.qp_max_iters,
            qp_tol=self.qp_tol,
        )

    def initial_pulse(self) -> ControlPulse:
        """Constant initial pulse on the run's time grid."""
        return ControlPulse(np.full(self.n_steps, self.u_init_x), np.full(self.n_steps, self.u_init_z), self.dt)

    def initial_amplitudes(self) -> AmplitudeState:
        """Initial state: ground |S,-S>, excited |S,S> or an explicit mapping m -> amplitude."""
        net = self.network()
        if self.initial_state == "ground":
            return AmplitudeState.ground(net)
        if self.initial_state == "excited":
            return AmplitudeState.basis(net, net.spin)
        c = np.zeros(net.dim, dtype=complex)
        for m, value in self.initial_state.items():
            c[net.index_of(m)] = value
        norm = math.sqrt(float(np.sum(np.abs(c) ** 2)))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"initial_state must have unit norm, got {norm:.12g}")
        return AmplitudeState(c)


def _key_lines(text: str) -> Dict[str, int]:
    """1-based source line of every top-level key."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"Malformed YAML: {getattr(e, 'problem', e)}",
                          line=mark.line + 1 if mark is not None else None)
    if node is None:
        return {}
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("Configuration must be a mapping of keys to values", line=node.start_mark.line + 1)
    lines = {}
    for key_node, _ in node.value:
        key = key_node.value
        if key in lines:
            raise ConfigError(f"Duplicate key: {key}", key=key, line=key_node.start_mark.line + 1)
        lines[key] = key_node.start_mark.line + 1
    return lines


def _config_error(error: ValidationError, lines: Dict[str, int]) -> ConfigError:
    first = error.errors()[0]
    cause = first.get("ctx", {}).get("error")
    if isinstance(cause, ConfigError):
        return ConfigError(str(cause), key=cause.key, line=lines.get(cause.key))
    key = str(first["loc"][0]) if first["loc"] else None
    if first["type"] == "missing":
        message = f"Missing required key: {key}"
    elif first["type"] == "extra_forbidden":
        message = f"Unknown key: {key}"
    else:
        message = f"Invalid value for {key}: {first['msg']}"
    return ConfigError(message, key=key, line=lines.get(key))


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a run configuration.

    Args:
        text: Flat YAML mapping

    Returns:
        RunConfig with defaults filled in

    Raises:
        ConfigError: On malformed text, unknown or missing keys, or invalid values
    """
    lines = _key_lines(text)
    data = yaml.safe_load(text) or {}
    try:
        return RunConfig(**{str(k): v for k, v in data.items()})
    except ValidationError as e:
        raise _config_error(e, lines)


def config_to_dict(cfg: RunConfig) -> Dict[str, Any]:
    """Plain dictionary of every key with enums written as their values."""
    data = cfg.model_dump()
    for key, value in data.items():
        if hasattr(value, "value"):
            data[key] = value.value
    return data


def serialize_config(cfg: RunConfig) -> str:
    """
    Serialize a configuration as YAML with every key present.

    parse_config(serialize_config(cfg)) == cfg.
    """
    return yaml.safe_dump(config_to_dict(cfg), default_flow_style=False, sort_keys=False)


def load_config(file_path: str) -> RunConfig:
    """
    Load a run configuration from a YAML file.

    Args:
        file_path: Path to the configuration file

    Returns:
        RunConfig

    Raises:
        ConfigError: If the file cannot be read or is invalid
    """
    try:
        with open(file_path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {file_path}: {e}")
    return parse_config(text)


def save_config(cfg: RunConfig, file_path: str):
    """
    Save a run configuration to a YAML file.

    Args:
        cfg: Configuration
        file_path: Path to save the configuration file
    """
    directory = os.path.dirname(file_path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    with open(file_path, 'w') as f:
        f.write(serialize_config(cfg))
