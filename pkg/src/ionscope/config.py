from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .errors import ConfigError
from .hamiltonians import TrapParams, WaveConfig
from .measurement import DEFAULT_PADDING, ModeKind, ProtocolMode
from .observables import BasisKind, StateRecipe
from .propagator import IntegratorConfig
from .utils import env_get, load_json_object

DEFAULT_RECIPE = StateRecipe.phase_state(8, 2.0)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Experiment configuration with defaults"""
    recipe: StateRecipe = DEFAULT_RECIPE
    basis: BasisKind = BasisKind.PHASE
    mode: ModeKind = ModeKind.IDEAL
    eta: float = 0.5
    nu: float = 1.0
    q: float = 0.1
    wave: WaveConfig = WaveConfig.TRAVELLING
    trials: int = 1000
    seed: Optional[int] = None
    jobs: int = 1
    out: str = "results"
    efficiency: float = 1.0
    padding: int = DEFAULT_PADDING
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        try:
            object.__setattr__(self, "basis", BasisKind(self.basis))
            object.__setattr__(self, "mode", ModeKind(self.mode))
            object.__setattr__(self, "wave", WaveConfig(self.wave))
        except ValueError as e:
            raise ConfigError(str(e)) from e

    @property
    def N(self) -> int:
        return self.recipe.N

    @property
    def trap(self) -> TrapParams:
        return TrapParams(eta=self.eta, nu=self.nu)

    def protocol_mode(self) -> ProtocolMode:
        if self.mode is ModeKind.IDEAL:
            return ProtocolMode.ideal(self.efficiency)
        return ProtocolMode.full(
            self.trap, self.q, self.wave, self.integrator, self.padding, self.efficiency
        )

    def validate(self) -> "ExperimentConfig":
        """Raise ConfigError naming the first field outside its range."""
        self.trap  # checks eta and nu
        if not self.q > 0:
            raise ConfigError(f"q must be > 0, got {self.q}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.seed is not None and self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.basis is BasisKind.POSITION and self.N < 1:
            raise ConfigError("the position basis needs N >= 1")
        self.protocol_mode()
        return self

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Replace fields whose override is not None."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if "N" in changes:
            changes["recipe"] = self.recipe.with_N(int(changes.pop("N")))
        return dataclasses.replace(self, **changes)

    # --- serialization -----------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "recipe": self.recipe.to_dict(),
            "basis": self.basis.value,
            "mode": self.mode.value,
            "eta": self.eta,
            "nu": self.nu,
            "q": self.q,
            "wave": self.wave.value,
            "trials": self.trials,
            "seed": self.seed,
            "jobs": self.jobs,
            "out": self.out,
            "efficiency": self.efficiency,
            "padding": self.padding,
            "integrator": self.integrator.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        kwargs: Dict[str, Any] = dict(d)
        try:
            if "recipe" in kwargs:
                kwargs["recipe"] = StateRecipe.from_dict(kwargs["recipe"])
            if "integrator" in kwargs:
                kwargs["integrator"] = IntegratorConfig(**kwargs["integrator"])
            for name in ("eta", "nu", "q", "efficiency"):
                if name in kwargs:
                    kwargs[name] = float(kwargs[name])
            for name in ("trials", "jobs", "padding"):
                if name in kwargs:
                    kwargs[name] = int(kwargs[name])
            if kwargs.get("seed") is not None:
                kwargs["seed"] = int(kwargs["seed"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid config value: {e}") from e
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            return cls.from_dict(load_json_object(path))
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from e

    @classmethod
    def from_env(cls, env: Any = None, base: "ExperimentConfig | None" = None, env_path: str | None = None) -> "ExperimentConfig":
        """Fill the seed (only when unset) and job count from IONSCOPE_* variables."""
        if env is None:
            if env_path:
                load_dotenv(env_path)
            load_dotenv(override=False)
            env = os.environ
        base = base or cls()
        seed = base.seed
        if seed is None:
            raw = env_get(env, "IONSCOPE_SEED")
            if raw not in (None, ""):
                seed = _int_env("IONSCOPE_SEED", raw)
        jobs = env_get(env, "IONSCOPE_JOBS")
        return dataclasses.replace(
            base,
            seed=seed,
            jobs=_int_env("IONSCOPE_JOBS", jobs) if jobs not in (None, "") else base.jobs,
        )


def _int_env(key: str, raw: Any) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from e
