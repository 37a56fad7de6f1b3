"""Run configuration: ``key = value`` lines with dotted section keys.

Blank lines and ``#`` comments are ignored. Lists are comma separated.
Every recognised key, its type and default are listed in ``SCHEMA``;
anything else is rejected so that typos cannot silently fall back to a
default.
"""

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Unreadable file, unknown key or malformed value."""


def _floats(text):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return [float(p) for p in parts]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _components(text):
    # "A, sigma, x0; A, sigma, x0"
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats(chunk)
        if len(vals) != 3:
            raise ValueError("each component needs A, sigma, x0")
        out.append(tuple(vals))
    if not out:
        raise ValueError("no components")
    return out


def _opt_float(text):
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


def _choice(*opts):
    def parse(text):
        t = text.strip()
        if t not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return t
    return parse


# key -> (parser, default)
SCHEMA = {
    "profile.kind": (_choice("zero", "gaussian", "gaussians", "file"), "gaussian"),
    "profile.A": (float, 0.1),
    "profile.sigma": (float, 1.0),
    "profile.x0": (float, 0.0),
    "profile.components": (_components, None),
    "profile.path": (str, None),
    "profile.epsilon0": (float, 1e-3),
    "profile.tail_tol": (float, 1e-10),
    "profile.omega": (float, 1.0),
    "grid.L": (float, 12.0),
    "grid.N": (int, 2048),
    "kgrid.n": (int, 1024),
    "kgrid.kmax": (float, 8.0),
    "kgrid.x_eval": (float, 0.0),
    "asympt.xi": (_floats, [-0.25, -0.5, -1.0]),
    "asympt.t": (_floats, [25.0, 50.0, 100.0, 200.0]),
    "asympt.p": (float, 3.0),
    "asympt.xi_min": (float, 0.02),
    "asympt.convention": (_choice("corrected", "printed"), "corrected"),
    "asympt.y_range": (_floats, None),
    "evolve.N": (int, 4096),
    "evolve.L": (_opt_float, None),
    "evolve.dt": (_opt_float, None),
    "evolve.times": (_floats, [1.0]),
    "evolve.check_every": (int, 50),
    "compare.xi": (_floats, [-0.5, 0.5]),
    "compare.t": (_floats, [25.0, 50.0, 100.0, 200.0]),
    "compare.settle_t": (float, 50.0),
    "tol.unitarity": (float, 1e-8),
    "tol.symmetry": (float, 1e-9),
    "tol.cubic_slope": (float, 2.7),
    "tol.gap": (float, 0.0),
    "tol.conservation": (float, 1e-6),
    "tol.ratio": (float, 0.15),
    "tol.slope_low": (float, -0.55),
    "tol.slope_high": (float, -0.45),
    "tol.fast_spread": (float, 3.0),
    "output.gnuplot": (_bool, False),
    "run.threads": (int, 1),
}


@dataclass
class RunConfig:
    """Parsed configuration.

    Attributes
    ----------
    values : dict
        Every schema key with its parsed (or default) value.
    given : dict
        The raw ``key -> text`` pairs that appeared in the file.
    source : str
        Path of the file, or ``"<string>"``.
    """

    values: dict
    given: dict = field(default_factory=dict)
    source: str = "<string>"

    def __getitem__(self, key):
        return self.values[key]

    @property
    def digest(self):
        """sha256 over the sorted effective key/value pairs."""
        text = "\n".join(f"{k}={self.values[k]!r}" for k in sorted(self.values))
        return hashlib.sha256(text.encode()).hexdigest()

    def tolerances(self):
        return {k: v for k, v in self.values.items() if k.startswith("tol.")}

    def profile_descriptor(self):
        kind = self["profile.kind"]
        if kind == "zero":
            return {"kind": "zero"}
        if kind == "gaussian":
            return {"kind": "gaussian", "A": self["profile.A"], "sigma": self["profile.sigma"],
                    "x0": self["profile.x0"]}
        if kind == "gaussians":
            return {"kind": "gaussians", "components": self["profile.components"]}
        return {"kind": "file", "path": self["profile.path"]}


def parse_text(text, source="<string>"):
    """Parse configuration text; raises :class:`ConfigError`."""
    values = {k: d for k, (_, d) in SCHEMA.items()}
    given = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{no}: unknown key {key!r}")
        if key in given:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r}")
        try:
            values[key] = SCHEMA[key][0](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{no}: bad value for {key}: {exc}") from None
        given[key] = val
    cfg = RunConfig(values=values, given=given, source=source)
    _validate(cfg)
    return cfg


def load(path):
    """Read and parse a configuration file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    cfg = parse_text(text, str(p))
    # file profiles are resolved relative to the config
    if cfg["profile.kind"] == "file" and cfg["profile.path"] and not Path(cfg["profile.path"]).is_absolute():
        cfg.values["profile.path"] = str((p.parent / cfg["profile.path"]).resolve())
    return cfg


def _validate(cfg):
    v = cfg.values
    for k, val in v.items():
        if k.startswith("tol.") and k not in ("tol.gap", "tol.slope_low", "tol.slope_high"):
            if not val > 0:
                raise ConfigError(f"{k} must be positive")
    if v["tol.gap"] < 0:
        raise ConfigError("tol.gap must be nonnegative")
    if not v["tol.slope_low"] < v["tol.slope_high"]:
        raise ConfigError("tol.slope_low must be below tol.slope_high")
    if v["profile.kind"] == "gaussians" and not v["profile.components"]:
        raise ConfigError("profile.kind = gaussians needs profile.components")
    if v["profile.kind"] == "file" and not v["profile.path"]:
        raise ConfigError("profile.kind = file needs profile.path")
    if v["profile.kind"] == "gaussian" and not v["profile.sigma"] > 0:
        raise ConfigError("profile.sigma must be positive")
    if not v["profile.omega"] > 0:
        raise ConfigError("profile.omega must be positive")
    for key in ("asympt.t", "evolve.times", "compare.t"):
        if any(not (t > 0 and math.isfinite(t)) for t in v[key]):
            raise ConfigError(f"{key}: times must be positive")
    if not v["asympt.p"] > 2:
        raise ConfigError("asympt.p must exceed 2")
    if not v["asympt.xi_min"] > 0:
        raise ConfigError("asympt.xi_min must be positive")
    for key in ("grid.N", "evolve.N"):
        if v[key] < 256:
            raise ConfigError(f"{key} must be at least 256")
    if v["kgrid.n"] < 16 or v["kgrid.n"] % 2:
        raise ConfigError("kgrid.n must be an even number >= 16")
    if v["evolve.dt"] is not None and not v["evolve.dt"] > 0:
        raise ConfigError("evolve.dt must be positive")
    if v["run.threads"] < 1:
        raise ConfigError("run.threads must be >= 1")
    yr = v["asympt.y_range"]
    if yr is not None and (len(yr) != 3 or not yr[0] < yr[1] or yr[2] < 2):
        raise ConfigError("asympt.y_range is 'y_min, y_max, count'")
