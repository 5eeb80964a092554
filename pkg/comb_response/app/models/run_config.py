import math
from enum import Enum
from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, ValidationInfo, field_validator

from comb_response.core.atomfield import (
    EllipticityAngle,
    PhaseRegion,
    RelaxationRates,
    TrichromaticField,
    normalize_phase,
    parse_phase_region,
    phase_preset,
)
from comb_response.core.observables import CHANNELS, LarmorGrid


class RunMode(str, Enum):
    scan = "scan"
    comb = "comb"
    oracle_check = "oracle-check"
    truncation_check = "truncation-check"
    figure_preset = "figure-preset"


class FigurePreset(str, Enum):
    fig3 = "fig3"
    fig4 = "fig4"


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


def parse_phase_text(value: str) -> float:
    text = value.strip().lower()
    if text in {"pi", "+pi", "-pi", "π"}:
        return math.pi
    return float(text)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    mode: RunMode = RunMode.scan
    gamma_excited: float = 5600.0
    gamma_ground: float = 1.0
    rabi_0: float = 5.0
    rabi_minus: float = 5.0
    rabi_plus: float = 5.0
    omega_m: float = 12.0
    delta: float = 0.0
    epsilon: float = 0.0
    phases: Optional[List[float]] = None
    phase_preset: PhaseRegion = PhaseRegion.wing
    order: int = 2
    scan_start: float = -20.0
    scan_stop: float = 20.0
    points: int = 801
    derivative: bool = True
    output: str = "comb_response.csv"
    workers: Optional[int] = None
    channels: List[str] = list(CHANNELS)
    figure: FigurePreset = FigurePreset.fig3
    mod_amplitude: float = 0.0
    teeth: Optional[int] = None
    laser_detuning: Optional[float] = None
    doppler_width: Optional[float] = None
    check_larmor: List[float] = [0.0, 3.0, 6.0, 12.0]
    tolerance: float = 1e-6
    oracle_horizon: float = 20.0
    trajectory_output: Optional[str] = None

    @field_validator("gamma_excited", "gamma_ground", "omega_m")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 0.0:
            raise ValueError("must be > 0")
        return value

    @field_validator("rabi_0", "rabi_minus", "rabi_plus", "mod_amplitude")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if not math.isfinite(value) or value < 0.0:
            raise ValueError("must be >= 0")
        return value

    @field_validator("delta", "scan_start", "scan_stop")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @field_validator("epsilon")
    @classmethod
    def _ellipticity(cls, value: float) -> float:
        return EllipticityAngle(value).epsilon

    @field_validator("phases", mode="before")
    @classmethod
    def _parse_phases(cls, value: Any) -> Any:
        value = _split_list(value)
        if value is None:
            return None
        if len(value) != 3:
            raise ValueError("expected three phases phi_1,phi_2,phi_3")
        parsed = [parse_phase_text(v) if isinstance(v, str) else float(v) for v in value]
        return [normalize_phase(v) for v in parsed]

    @field_validator("phase_preset", mode="before")
    @classmethod
    def _parse_preset(cls, value: Any) -> PhaseRegion:
        return parse_phase_region(value)

    @field_validator("channels", mode="before")
    @classmethod
    def _parse_channels(cls, value: Any) -> Any:
        value = _split_list(value)
        for name in value:
            if name not in CHANNELS:
                raise ValueError(f"unknown channel {name!r}; choose from {', '.join(CHANNELS)}")
        if not value:
            raise ValueError("select at least one channel")
        return value

    @field_validator("check_larmor", mode="before")
    @classmethod
    def _parse_check_larmor(cls, value: Any) -> Any:
        value = _split_list(value)
        if not value:
            raise ValueError("give at least one Larmor frequency")
        return value

    @field_validator("order")
    @classmethod
    def _order(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @field_validator("points")
    @classmethod
    def _points(cls, value: int) -> int:
        if value < 2:
            raise ValueError("must be >= 2")
        return value

    @field_validator("workers", "teeth")
    @classmethod
    def _optional_non_negative(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 0:
            raise ValueError("must be >= 0")
        return value

    @field_validator("doppler_width")
    @classmethod
    def _doppler_width(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and (not math.isfinite(value) or value <= 0.0):
            raise ValueError("must be > 0")
        return value

    @field_validator("tolerance")
    @classmethod
    def _tolerance(cls, value: float) -> float:
        if not value > 0.0:
            raise ValueError("must be > 0")
        return value

    @field_validator("oracle_horizon")
    @classmethod
    def _horizon(cls, value: float) -> float:
        if value < 5.0:
            raise ValueError("must be >= 5 (units of 1/gamma)")
        return value

    @field_validator("scan_stop")
    @classmethod
    def _check_grid(cls, value: float, info: ValidationInfo) -> float:
        start = info.data.get("scan_start")
        if start is not None and not start < value:
            raise ValueError(f"scan stop must be above scan start {start!r}")
        return value

    def resolved_phases(self) -> tuple[float, float, float]:
        if self.phases is not None:
            return tuple(self.phases)
        return phase_preset(self.phase_preset)

    def trichromatic_field(self) -> TrichromaticField:
        phi_1, phi_2, phi_3 = self.resolved_phases()
        return TrichromaticField(
            rabi_0=self.rabi_0,
            rabi_minus=self.rabi_minus,
            rabi_plus=self.rabi_plus,
            phi_1=phi_1,
            phi_2=phi_2,
            phi_3=phi_3,
            omega_m=self.omega_m,
            delta=self.delta,
        )

    def rates(self) -> RelaxationRates:
        return RelaxationRates(Gamma=self.gamma_excited, gamma=self.gamma_ground)

    def ellipticity(self) -> EllipticityAngle:
        return EllipticityAngle(self.epsilon)

    def grid(self) -> LarmorGrid:
        return LarmorGrid(self.scan_start, self.scan_stop, self.points)

    def effective_config(self) -> dict:
        return self.model_dump(mode="json")
