"""Run configuration: flat ``key = value`` files with five fixed sections.

Example::

    [params]
    lambda = 0.1
    g = 0, 0, 0

    [grid]
    dim = 1
    nx = 64
    lx = 6.4

    [step]
    dt = 1e-3
    t_end = 0.2

    [init]
    phi = cosine mean=0.5 amplitude=0.2
    theta = 1.5

    [output]
    dir = out

Unknown sections or keys are rejected.  Field initialisers in ``[init]``
are a number, three comma-separated numbers for vectors, or a profile name
followed by ``key=value`` arguments.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import DEFAULTS, PROFILES, Grid, ModelParams
from .dynamics import StepConfig


class ConfigError(ValueError):
    """Invalid configuration; ``messages`` lists every problem found."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


PARAM_KEYS = {"tau", "kappa", "nu", "lambda", "theta_lambda", "c0", "k0_const", "k0_slope",
              "eps_reg", "g", "r", "omega_bc"}
GRID_KEYS = {"dim", "nx", "ny", "lx", "ly",
             "theta_min", "theta_max", "n_theta", "p_min", "p_max", "n_p"}
STEP_KEYS = {"dt", "t_end", "steps", "projection_tol", "material_derivative", "record_every",
             "pinned", "eps_mass", "tol_phase"}
INIT_KEYS = set(DEFAULTS) | {"snapshot", "seed", "chi_amplitude", "chi_mode", "vs2", "vn2"}
OUTPUT_KEYS = {"dir", "prefix"}
SECTIONS = {"params": PARAM_KEYS, "grid": GRID_KEYS, "step": STEP_KEYS, "init": INIT_KEYS,
            "output": OUTPUT_KEYS}


@dataclass
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    grid: Grid = field(default_factory=lambda: Grid.line(64, 6.4))
    step: StepConfig = field(default_factory=lambda: StepConfig(dt=1e-3, t_end=0.1))
    init: dict = field(default_factory=dict)
    snapshot: str | None = None
    seed: int = 0
    chi_amplitude: float = 0.3
    chi_mode: int = 1
    vs2: float = 0.0
    vn2: float = 0.0
    theta_axis: np.ndarray = field(default_factory=lambda: np.linspace(0.5, 3.0, 200))
    p_axis: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 3.0, 50))
    out_dir: Path = Path(".")
    prefix: str = "run"
    source: str | None = None


def _floats(text):
    return tuple(float(x) for x in text.split(","))


def parse_field(text: str):
    """Parse one ``[init]`` value into something :func:`new_state` accepts."""
    text = text.strip()
    head, *rest = text.split()
    if head in PROFILES:
        kw = {"profile": head}
        for item in rest:
            k, _, v = item.partition("=")
            if not _:
                raise ValueError(f"profile argument {item!r} is not key=value")
            kw[k] = float(v)
        return kw
    vals = _floats(text)
    if len(vals) == 1:
        return vals[0]
    if len(vals) == 3:
        return np.array(vals)
    raise ValueError(f"cannot parse {text!r}")


def load(path) -> RunConfig:
    text = Path(path).read_text()
    cfg = loads(text)
    cfg.source = str(path)
    return cfg


def loads(text: str) -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` listing every problem."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc
    errors = []
    for sec in cp.sections():
        if sec not in SECTIONS:
            errors.append(f"unknown section [{sec}]")
            continue
        for key in cp[sec]:
            if key not in SECTIONS[sec]:
                errors.append(f"unknown key {key!r} in [{sec}]")
    if errors:
        raise ConfigError(errors)

    def sec(name):
        return dict(cp[name]) if cp.has_section(name) else {}

    out = RunConfig()
    try:
        out.params = _params(sec("params"))
    except (ValueError, TypeError) as exc:
        errors.append(f"[params] {exc}")
    g = sec("grid")
    try:
        out.grid = _grid(g)
        out.theta_axis = np.linspace(float(g.get("theta_min", 0.5)),
                                     float(g.get("theta_max", 3.0)),
                                     int(g.get("n_theta", 200)))
        out.p_axis = np.linspace(float(g.get("p_min", 0.0)), float(g.get("p_max", 3.0)),
                                 int(g.get("n_p", 50)))
    except (ValueError, TypeError) as exc:
        errors.append(f"[grid] {exc}")
    try:
        out.step = _step(sec("step"))
    except (ValueError, TypeError) as exc:
        errors.append(f"[step] {exc}")
    for key, val in sec("init").items():
        try:
            if key == "snapshot":
                out.snapshot = val.strip()
            elif key in ("seed", "chi_mode"):
                setattr(out, key, int(val))
            elif key in ("chi_amplitude", "vs2", "vn2"):
                setattr(out, key, float(val))
            else:
                out.init[key] = parse_field(val)
        except ValueError as exc:
            errors.append(f"[init] {key}: {exc}")
    # a random profile without its own seed takes the run seed
    for spec in out.init.values():
        if isinstance(spec, dict) and spec["profile"] == "random-smooth":
            spec.setdefault("seed", out.seed)
    o = sec("output")
    out.out_dir = Path(o.get("dir", "."))
    out.prefix = o.get("prefix", "run").strip()
    if errors:
        raise ConfigError(errors)
    return out


def _params(d) -> ModelParams:
    kw = {}
    names = {f.name for f in fields(ModelParams)}
    for key, val in d.items():
        name = "lam" if key == "lambda" else key
        if name not in names:
            raise ValueError(f"unsupported parameter {key!r}")
        kw[name] = _floats(val) if key in ("g", "omega_bc") else float(val)
        if key in ("g", "omega_bc") and len(kw[name]) != 3:
            raise ValueError(f"{key} needs three components")
    return ModelParams(**kw)


def _grid(d) -> Grid:
    dim = int(d.get("dim", 1))
    nx = int(d.get("nx", 64))
    lx = float(d.get("lx", 0.1 * nx))
    if dim == 1:
        return Grid.line(nx, lx)
    if dim == 2:
        ny = int(d.get("ny", nx))
        return Grid.slab(nx, ny, lx, float(d.get("ly", lx * ny / nx)))
    raise ValueError(f"dim must be 1 or 2, got {dim}")


def _step(d) -> StepConfig:
    dt = float(d.get("dt", 1e-3))
    if "t_end" in d and "steps" in d:
        raise ValueError("give t_end or steps, not both")
    t_end = float(d["t_end"]) if "t_end" in d else dt * int(d.get("steps", 100))
    pinned = frozenset(x.strip() for x in d.get("pinned", "").split(",") if x.strip())
    bad = pinned - (set(DEFAULTS) - {"phi_s"})
    if bad:
        raise ValueError(f"cannot pin {sorted(bad)}")
    cfg = StepConfig(dt=dt, t_end=t_end,
                     projection_tol=float(d.get("projection_tol", 1e-8)),
                     material_derivative=d.get("material_derivative", "advective").strip(),
                     record_every=int(d.get("record_every", 0)), pinned=pinned,
                     eps_mass=float(d.get("eps_mass", 1e-8)),
                     tol_phase=float(d.get("tol_phase", 1e-6)))
    return cfg
