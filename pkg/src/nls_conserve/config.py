"""Experiment configuration: parsing, validation and initial data.

Two on-disk forms share one schema.  JSON files are read as-is; anything
else is flat ``key = value`` text with dotted section names::

    grid.d = 1
    grid.n = 256
    grid.L = 40.0
    nonlinearity.lambda = -1
    nonlinearity.p = 3
    initial.kind = soliton
    solver.dt = 1e-3
    solver.t_final = 5.0
    checks = ["charge", "energy"]
    output.json_path = out/
    output.csv_path = out/series.csv

Values are parsed as JSON when possible and kept as strings otherwise.
"""
from dataclasses import dataclass, field
import json
from pathlib import Path

import numpy as np

from .dynamics import SolverConfig
from .grid import ComplexField, Grid, read_field
from .nonlinearity import PowerNonlinearity
from .oracle import ExactSolution
from .verify import REGISTRY

INITIAL_KINDS = ("gaussian", "plane_wave", "soliton", "field_file")


class ConfigError(ValueError):
    pass


def _parse_value(raw):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_flat(text):
    """Parse ``key = value`` lines into a nested dict."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"line {lineno}: {key.strip()!r} clashes with a scalar key")
        node[parts[-1]] = _parse_value(value)
    return out


def load_raw(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_flat(text)


@dataclass
class ExperimentConfig:
    grid: Grid
    nl: PowerNonlinearity
    initial: dict
    solver: SolverConfig
    checks: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    refinement_levels: int = 1
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def initial_field(self):
        return make_initial(self.initial, self.grid, self.nl, self.base_dir)

    def exact_solution(self):
        """Closed-form reference for soliton/plane-wave data, else None."""
        kind = self.initial["kind"]
        if kind == "soliton":
            return ExactSolution("soliton_1d", self.nl.lam, self.nl.p,
                                 velocity=float(self.initial.get("velocity", 0.0)))
        if kind == "plane_wave":
            return ExactSolution("plane_wave", self.nl.lam, self.nl.p,
                                 amplitude=complex(self.initial.get("A", 1.0)),
                                 k=tuple(_vec(self.initial.get("k", 0.0), self.grid.d)))
        return None


def _vec(value, d):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(d, arr[0])
    if arr.size != d:
        raise ConfigError(f"expected {d} components, got {arr.size}")
    return arr


def make_initial(spec, grid, nl, base_dir=Path(".")):
    kind = spec.get("kind")
    x = grid.x
    if kind == "gaussian":
        width = float(spec.get("width", 1.0))
        amp = complex(spec.get("amplitude", 1.0))
        center = _vec(spec.get("center", 0.0), grid.d)
        k = _vec(spec.get("phase_k", 0.0), grid.d)
        r2 = sum((x[j] - center[j]) ** 2 for j in range(grid.d))
        phase = sum(k[j] * x[j] for j in range(grid.d))
        return ComplexField(grid, amp * np.exp(-r2 / width ** 2) * np.exp(1j * phase))
    if kind == "plane_wave":
        k = _vec(spec.get("k", 0.0), grid.d)
        if any(grid.lattice_index(kj) is None for kj in k):
            raise ConfigError("plane-wave k must be a multiple of 2*pi/L")
        sol = ExactSolution("plane_wave", nl.lam, nl.p,
                            amplitude=complex(spec.get("A", 1.0)), k=tuple(k))
        return ComplexField(grid, sol.values(0.0, grid))
    if kind == "soliton":
        try:
            sol = ExactSolution("soliton_1d", nl.lam, nl.p,
                                velocity=float(spec.get("velocity", 0.0)))
            return ComplexField(grid, sol.values(0.0, grid))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if kind == "field_file":
        path = Path(spec["path"])
        if not path.is_absolute():
            path = base_dir / path
        u = read_field(path)
        if u.grid != grid:
            raise ConfigError("field file grid does not match the configured grid")
        return u
    raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}")


def build_config(raw, mode="verify", base_dir=Path(".")):
    """Validate a raw nested dict and build an ExperimentConfig."""
    try:
        g = raw["grid"]
        grid = Grid(int(g["d"]), int(g["n"]), float(g["L"]))
        nlr = raw["nonlinearity"]
        nl = PowerNonlinearity(float(nlr["lambda"]), float(nlr["p"]))
        nl.check_dimension(grid.d)
        s = dict(raw.get("solver", {}))
        solver = SolverConfig(**{k: s[k] for k in s})
        initial = dict(raw["initial"])
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    checks = raw.get("checks", [])
    if isinstance(checks, str):
        checks = list(REGISTRY) if checks == "all" else [c.strip() for c in checks.split(",") if c.strip()]
    unknown = [c for c in checks if c not in REGISTRY]
    if unknown:
        raise ConfigError(f"unknown identity names: {unknown}")
    if mode in ("verify", "convergence") and not checks:
        raise ConfigError("verify mode needs a nonempty 'checks' list")
    try:
        nsteps = solver.steps()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if nsteps < 1:
        raise ConfigError("solver.t_final must be positive")
    if nsteps % solver.store_every:
        raise ConfigError("t_final / dt must be a multiple of solver.store_every")
    levels = int(raw.get("refinement_levels", 1))
    if levels < 1:
        raise ConfigError("refinement_levels must be >= 1")
    cfg = ExperimentConfig(grid, nl, initial, solver, list(checks), dict(raw.get("output", {})),
                           levels, dict(raw.get("tolerances", {})), dict(raw.get("options", {})),
                           Path(base_dir))
    try:
        cfg.initial_field()
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path, mode="verify"):
    return build_config(load_raw(path), mode, Path(path).parent)
