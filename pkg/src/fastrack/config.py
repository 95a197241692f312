"""Run configuration: one JSON document describes a full precompute + simulate run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .controller import SwitchConfig
from .dynamics import ModelParams, SubsystemId
from .geometry import AABB
from .grid import GridSpec
from .rrt import PlannerConfig
from .simulator import SimConfig
from .solver import SolverConfig, SubsystemSpec, double_integrator_spec, subsystem_spec, toy_spec
from .world import SensorConfig, World, environment_from_dict

PROBLEMS = ("quadrotor", "toy1d", "double_integrator")


class ConfigError(ValueError):
    pass


def default_grids() -> dict[str, GridSpec]:
    axis = lambda p: GridSpec.from_bounds(  # noqa: E731
        (f"{p}r", f"v{p}", f"theta_{p}", f"omega_{p}"), (-2, -2, -0.35, -2), (2, 2, 0.35, 2), 31)
    return {
        "X4": axis("x"),
        "Y4": axis("y"),
        "Z2": GridSpec.from_bounds(("zr", "vz"), (-2, -2), (2, 2), 81),
    }


@dataclass
class RunConfig:
    problem: str = "quadrotor"
    model: ModelParams = field(default_factory=ModelParams)
    grids: dict = field(default_factory=default_grids)
    solver: SolverConfig = field(default_factory=SolverConfig)
    switch: SwitchConfig = field(default_factory=SwitchConfig)
    planner: dict = field(default_factory=dict)
    sim: SimConfig = field(default_factory=SimConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    environment: dict | None = None
    source: Path | None = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {PROBLEMS}")
        if self.problem == "quadrotor" and set(self.grids) != {"X4", "Y4", "Z2"}:
            raise ConfigError("quadrotor runs need grids for X4, Y4 and Z2")
        if self.problem != "quadrotor" and set(self.grids) != {"main"}:
            raise ConfigError(f"{self.problem} runs need exactly one grid named 'main'")
        if self.environment is not None:
            world = self.world()
            for name, point in (("start", world.start), ("goal", world.goal)):
                if not world.bounds.contains(point):
                    raise ConfigError(f"{name} {list(point)} lies outside the workspace bounds")

    def specs(self) -> list[SubsystemSpec]:
        if self.problem == "toy1d":
            return [toy_spec(self.grids["main"])]
        if self.problem == "double_integrator":
            return [double_integrator_spec(self.grids["main"])]
        return [subsystem_spec(SubsystemId(k), self.grids[k], self.model) for k in ("X4", "Y4", "Z2")]

    def world(self) -> World:
        if self.environment is None:
            raise ConfigError("this configuration has no environment")
        return environment_from_dict(self.environment, self.sensor.cell_edge)

    def planner_config(self) -> PlannerConfig:
        return PlannerConfig(bounds=self.world().bounds, **self.planner)

    @classmethod
    def from_dict(cls, data: dict, base: Path | None = None) -> "RunConfig":
        data = dict(data)
        known = {"problem", "model", "grids", "solver", "switch", "planner", "sim", "sensor", "environment"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            kw = {}
            if "problem" in data:
                kw["problem"] = data["problem"]
            if "model" in data:
                kw["model"] = ModelParams.from_dict(data["model"])
            if "grids" in data:
                kw["grids"] = {k: GridSpec.from_dict(v) for k, v in data["grids"].items()}
            if "solver" in data:
                kw["solver"] = SolverConfig.from_dict(data["solver"])
            if "switch" in data:
                kw["switch"] = SwitchConfig.from_dict(data["switch"])
            if "planner" in data:
                planner = dict(data["planner"])
                PlannerConfig(bounds=AABB((0, 0, 0), (1, 1, 1)), **planner)
                kw["planner"] = planner
            if "sim" in data:
                kw["sim"] = SimConfig.from_dict(data["sim"])
            if "sensor" in data:
                kw["sensor"] = SensorConfig.from_dict(data["sensor"])
            env = data.get("environment")
            if isinstance(env, str):
                env_path = Path(env) if base is None else base / env
                env = json.loads(env_path.read_text())
            kw["environment"] = env
            return cls(**kw, source=base)
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError, OSError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data, base=path.parent)

    def to_dict(self) -> dict:
        out = {
            "problem": self.problem,
            "model": self.model.to_dict(),
            "grids": {k: g.to_dict() for k, g in self.grids.items()},
            "solver": self.solver.to_dict(),
            "switch": self.switch.to_dict(),
            "planner": dict(self.planner),
            "sim": self.sim.to_dict(),
            "sensor": self.sensor.to_dict(),
        }
        if self.environment is not None:
            out["environment"] = self.environment
        return out
