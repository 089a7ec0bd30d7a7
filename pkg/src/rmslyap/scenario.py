"""Scenario files: JSON bundles of (A, driver, per-state fitness table, defaults)."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cocycle import RandomMatrixSystem
from .ergodic import Driver, IIDDriver, MarkovDriver, RotationDriver
from .errors import ValidationError

SEED_ENV = "RMS_LYAP_DEFAULT_SEED"

DEFAULTS = {
    "n": 100_000,
    "num_paths": 100,
    "budget": 100_000,
    "epsilons": [1e-1, 1e-2, 1e-3, 1e-4],
    "depth": 1,
    "tolerances": {"principal": 1e-8, "trace": 1e-10},
}

_KINDS = {"iid": "iid", "iid-finite": "iid", "markov": "markov", "markov-finite": "markov", "rotation": "rotation"}


@dataclass(eq=False)
class Scenario:
    name: str
    system: RandomMatrixSystem
    defaults: dict
    seed: int | None = None
    source: dict = field(default_factory=dict, repr=False)

    @property
    def A(self) -> np.ndarray:
        return self.system.A

    @property
    def driver(self) -> Driver:
        return self.system.driver

    def resolve_seed(self, override: int | None = None) -> int:
        """--seed, then the scenario's own seed, then $RMS_LYAP_DEFAULT_SEED, then 0."""
        if override is not None:
            return int(override)
        if self.seed is not None:
            return int(self.seed)
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                return int(env)
            except ValueError:
                raise ValidationError(f"{SEED_ENV} must be an integer, got {env!r}") from None
        return 0

    def echo(self) -> dict:
        drv = self.driver
        if isinstance(drv, IIDDriver):
            d = {"kind": "iid", "p": list(drv.p)}
        elif isinstance(drv, MarkovDriver):
            d = {"kind": "markov", "P": [list(r) for r in drv.P], "pi": list(drv.pi)}
        else:
            d = {"kind": "rotation", "alpha": drv.alpha, "x0": drv.x0, "cuts": list(drv.cuts)}
        return {
            "name": self.name,
            "A": self.A.tolist(),
            "driver": d,
            "d_table": self.system.d_table.tolist(),
            "defaults": self.defaults,
        }


def parse_driver(data: dict) -> Driver:
    if not isinstance(data, dict) or "kind" not in data:
        raise ValidationError("driver: expected an object with a 'kind' field")
    kind = _KINDS.get(data["kind"])
    if kind == "iid":
        return IIDDriver(data.get("p", [1.0]))
    if kind == "markov":
        if "P" not in data:
            raise ValidationError("driver: markov kind requires the transition matrix 'P'")
        return MarkovDriver(data["P"], data.get("pi"))
    if kind == "rotation":
        if "alpha" not in data:
            raise ValidationError("driver: rotation kind requires 'alpha'")
        return RotationDriver(data["alpha"], data.get("x0", 0.0), tuple(data.get("cuts", (0.5,))))
    raise ValidationError(f"driver: unknown kind {data['kind']!r} (expected one of {sorted(_KINDS)})")


def scenario_from_dict(data: dict, name: str | None = None) -> Scenario:
    for key in ("A", "driver", "d_table"):
        if key not in data:
            raise ValidationError(f"scenario: missing required field {key!r}")
    driver = parse_driver(data["driver"])
    system = RandomMatrixSystem(data["A"], data["d_table"], driver)
    defaults = {**DEFAULTS, **data.get("defaults", {})}
    defaults["tolerances"] = {**DEFAULTS["tolerances"], **data.get("defaults", {}).get("tolerances", {})}
    seed = data.get("defaults", {}).get("seed", data["driver"].get("seed"))
    defaults.pop("seed", None)
    return Scenario(data.get("name") or name or "unnamed", system, defaults, seed, data)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot read scenario ({exc})") from None
    try:
        return scenario_from_dict(data, name=path.stem)
    except ValidationError as exc:
        raise ValidationError(f"{path.name}: {exc}") from None
