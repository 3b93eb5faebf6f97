"""JSON scenario files.

Every key is optional; a missing key takes the default of the overloaded
five-satellite, three-LNB scenario. Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from satrx.antenna import DEFAULT_LNB_OFFSETS_DEG, DEFAULT_THETA_DEG, Scenario
from satrx.constellation import Kind
from satrx.detectors import LgsdConfig
from satrx.montecarlo import DetectorKind, DetectorSpec, SimConfig

DEFAULT_SNR_DB = (5.0, 10.0, 15.0, 20.0, 25.0)


class ConfigError(ValueError):
    """Raised for any schema or consistency problem in a scenario file."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ScenarioModel(_Strict):
    theta_deg: list[float] = Field(default_factory=lambda: list(DEFAULT_THETA_DEG))
    m: int = Field(3, ge=1)
    dish_diameter_m: float = Field(0.35, gt=0)
    wavelength_m: float = Field(0.025, gt=0)
    lnb_offsets_deg: list[float] = Field(default_factory=lambda: list(DEFAULT_LNB_OFFSETS_DEG))
    pattern_file: Optional[str] = None

    @field_validator("theta_deg")
    @classmethod
    def _distinct(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("orbital angles must be pairwise distinct")
        if not v or v[0] != 0.0:
            raise ValueError("the first angle (desired satellite) must be 0")
        return v

    @model_validator(mode="after")
    def _shape(self):
        if len(self.lnb_offsets_deg) != self.m:
            raise ValueError(f"lnb_offsets_deg has {len(self.lnb_offsets_deg)} entries, m = {self.m}")
        if len(self.theta_deg) <= self.m:
            raise ValueError(
                f"receiver must be overloaded: {len(self.theta_deg)} satellites, {self.m} LNBs"
            )
        return self


class DetectorModel(_Strict):
    name: str
    type: Literal["jml", "rc_lgsd", "lgsd"] = "rc_lgsd"
    iglb: int = Field(2, ge=1)
    ible: int = Field(1, ge=1)
    iglo: int = Field(2, ge=1)
    list_size: int = Field(8, ge=1)
    groups: list[int] = Field(default_factory=lambda: [3, 2])
    beamformer: Literal["mrc", "sinr"] = "sinr"

    @field_validator("groups")
    @classmethod
    def _positive(cls, v):
        if not v or min(v) < 1:
            raise ValueError("group sizes must be positive")
        return v


def _default_detectors() -> list[DetectorModel]:
    return [
        DetectorModel(name="JML", type="jml"),
        DetectorModel(name="RC-LGSD(2/1/2)", type="rc_lgsd"),
        DetectorModel(name="LGSD-MRC(2/1/2)", type="lgsd", beamformer="mrc"),
    ]


class ConfigModel(_Strict):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    modulation: Literal["bpsk", "qpsk", "8psk", "16apsk"] = "8psk"
    snr_db: list[float] = Field(default_factory=lambda: list(DEFAULT_SNR_DB), min_length=1)
    detectors: list[DetectorModel] = Field(default_factory=_default_detectors, min_length=1)
    frames_per_point: int = Field(100, ge=1)
    min_bit_errors: int = Field(200, ge=0)
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    pointing_error_deg: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _consistent(self):
        n = len(self.scenario.theta_deg)
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise ValueError("detector names must be unique")
        for d in self.detectors:
            if d.type != "jml" and sum(d.groups) != n:
                raise ValueError(f"detector {d.name!r}: groups sum to {sum(d.groups)}, expected {n}")
        return self


def _format_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def parse_config_data(data: dict) -> ConfigModel:
    if not isinstance(data, dict):
        raise ConfigError("<root>: configuration must be a JSON object")
    try:
        return ConfigModel.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_error(err)) from None


def parse_config(path) -> ConfigModel:
    """Read and validate a JSON scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err.msg} at line {err.lineno})") from None
    return parse_config_data(data)


def config_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def dump_config(model: ConfigModel) -> str:
    return json.dumps(model.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def to_scenario(model: ScenarioModel) -> Scenario:
    return Scenario(
        theta_deg=tuple(model.theta_deg),
        m=model.m,
        dish_diameter=model.dish_diameter_m,
        wavelength=model.wavelength_m,
        lnb_offsets_deg=tuple(model.lnb_offsets_deg),
        pattern_file=model.pattern_file,
    )


def to_detector(model: DetectorModel) -> DetectorSpec:
    lgsd = LgsdConfig(
        list_size=model.list_size,
        iglb=model.iglb,
        ible=model.ible,
        iglo=model.iglo,
        group_sizes=tuple(model.groups),
    )
    return DetectorSpec(model.name, DetectorKind(model.type), model.beamformer, lgsd)


def to_sim_config(model: ConfigModel, seed: int | None = None) -> SimConfig:
    """Resolve a validated file into a :class:`SimConfig`.

    ``seed`` overrides the file; one of the two must supply it.
    """
    seed = model.seed if seed is None else seed
    if seed is None:
        raise ConfigError("seed: required (give --seed or a 'seed' key)")
    try:
        return SimConfig(
            scenario=to_scenario(model.scenario),
            modulation=Kind(model.modulation),
            snr_db=tuple(model.snr_db),
            detectors=tuple(to_detector(d) for d in model.detectors),
            frames_per_point=model.frames_per_point,
            min_bit_errors=model.min_bit_errors,
            seed=seed,
            pointing_error_deg=model.pointing_error_deg,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
