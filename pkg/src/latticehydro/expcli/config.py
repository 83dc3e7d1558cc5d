"""Experiment configuration: sectioned key-value files with strict validation.

Example::

    [model]
    family = nearest_neighbor
    d = 1
    gamma = 1.0
    m = 1.0

    [profile]
    family = gaussian-bump
    a = 0.5
    w = 1.0

    [experiment]
    id = euler-ref
    kind = euler
    tau = 1.0
    r = 0.5
    kappa = 1
    eps = 0.1, 0.05, 0.025
    offsets = -2..2

    [output]
    directory = out

Vector values such as ``r`` use ``;`` between coordinates.  ``offsets``
is either ``a..b`` (every pair with both offsets in that range, per
coordinate) or an explicit list ``z:z', ...`` with ``;`` inside points.
"""

from __future__ import annotations

import configparser
import hashlib
import itertools
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import LatticeHydroError

KINDS = (
    "euler",
    "ns",
    "higher",
    "halfspace-euler",
    "halfspace-ns",
    "wigner",
    "conservation",
    "conditions",
)

SCHEMA = {
    "model": {"family", "d", "n", "gamma", "m"},
    "profile": {"family", "a", "w", "base", "c", "q0", "t0"},
    "experiment": {
        "id",
        "kind",
        "tau",
        "r",
        "r_sweep",
        "kappa",
        "eps",
        "offsets",
        "theta",
        "nsamples",
        "seed",
        "box",
        "tol",
        "anchor",
        "resolution",
        "k",
        "ymax",
        "convention",
        "jobs",
        "override_conditions",
    },
    "output": {"directory", "formats"},
}


class ConfigError(LatticeHydroError, ValueError):
    """Validation failure; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ModelConfig:
    family: str = "nearest_neighbor"
    d: int = 1
    gamma: tuple = (1.0,)
    m: tuple = (1.0,)

    @property
    def n(self):
        return len(self.gamma)


@dataclass
class ProfileConfig:
    family: str = "gaussian-bump"
    params: dict = field(default_factory=lambda: {"a": 0.5, "w": 1.0})
    q0: str = "gibbs"
    T0: float = 1.0


@dataclass
class ExperimentSection:
    id: str
    kind: str
    tau: float = 1.0
    r: tuple = (0.5,)
    r_sweep: tuple = ()
    kappa: float = 1.0
    eps: tuple = (0.1, 0.05, 0.025)
    offsets: list = field(default_factory=list)
    theta: int = 16
    nsamples: int = 0
    seed: int = 0
    box: int | None = None
    tol: float | None = None
    anchor: str = "origin"
    resolution: int = 8192
    k: int = 3
    ymax: int = 32
    convention: str = "floor"
    jobs: int = 1
    override_conditions: bool = False


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv", "svg")


@dataclass
class ExperimentConfig:
    model: ModelConfig
    profile: ProfileConfig
    experiment: ExperimentSection
    output: OutputConfig
    source_text: str = ""

    @property
    def config_hash(self):
        return hashlib.sha256(self.source_text.encode()).hexdigest()[:16]


# ------------------------------------------------------------------ parsing


def _float(path, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(path, f"expected a number, got {text!r}") from None


def _int(path, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(path, f"expected an integer, got {text!r}") from None


def _bool(path, text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(path, f"expected a boolean, got {text!r}")


def _vector(path, text, d=None):
    vals = tuple(_float(path, p) for p in text.split(";") if p.strip())
    if d is not None and len(vals) != d:
        raise ConfigError(path, f"expected {d} coordinates, got {len(vals)}")
    return vals


def _list(path, text, conv):
    return tuple(conv(path, p.strip()) for p in text.split(",") if p.strip())


def parse_offsets(path, text, d):
    text = text.strip()
    if ".." in text and ":" not in text:
        lo, hi = (_int(path, t) for t in text.split(".."))
        if hi < lo:
            raise ConfigError(path, f"empty offset range {text!r}")
        pts = [tuple(p) for p in itertools.product(range(lo, hi + 1), repeat=d)]
        return [(a, b) for a in pts for b in pts]
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ConfigError(path, f"offset pair {item!r} must look like z:z'")
        a, b = item.split(":")
        za = tuple(int(v) for v in _vector(path, a, d))
        zb = tuple(int(v) for v in _vector(path, b, d))
        pairs.append((za, zb))
    if not pairs:
        raise ConfigError(path, "no offsets given")
    return pairs


def _check_keys(cp):
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    for section in ("model", "profile", "experiment"):
        if section not in cp:
            raise ConfigError(section, "missing section")


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    _check_keys(cp)

    m = cp["model"]
    family = m.get("family", "nearest_neighbor").strip()
    if family != "nearest_neighbor":
        raise ConfigError("model.family", f"unsupported family {family!r}")
    d = _int("model.d", m.get("d", "1"))
    if d < 1:
        raise ConfigError("model.d", "must be >= 1")
    gamma = _list("model.gamma", m.get("gamma", "1.0"), _float)
    mass = _list("model.m", m.get("m", "1.0"), _float)
    if len(gamma) != len(mass):
        raise ConfigError("model.m", "needs one mass per coupling constant")
    if "n" in m and _int("model.n", m["n"]) != len(gamma):
        raise ConfigError("model.n", f"n={m['n']} but {len(gamma)} coupling constants given")
    model = ModelConfig(family, d, gamma, mass)

    p = cp["profile"]
    pfam = p.get("family", "gaussian-bump").strip()
    if pfam == "gaussian-bump":
        params = {k: _float(f"profile.{k}", p[k]) for k in ("a", "w", "base") if k in p}
        if "c" in p:
            raise ConfigError("profile.c", "only used by the constant family")
    elif pfam == "constant":
        params = {"c": _float("profile.c", p.get("c", "1.0"))}
        for k in ("a", "w", "base"):
            if k in p:
                raise ConfigError(f"profile.{k}", "not used by the constant family")
    else:
        raise ConfigError("profile.family", f"unknown profile family {pfam!r}")
    q0 = p.get("q0", "gibbs").strip()
    if q0 != "gibbs":
        raise ConfigError("profile.q0", f"unsupported q0 source {q0!r}")
    profile = ProfileConfig(pfam, params, q0, _float("profile.t0", p.get("t0", "1.0")))

    e = cp["experiment"]
    if "id" not in e:
        raise ConfigError("experiment.id", "required")
    if "kind" not in e:
        raise ConfigError("experiment.kind", "required")
    kind = e["kind"].strip()
    if kind not in KINDS:
        raise ConfigError("experiment.kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    exp = ExperimentSection(e["id"].strip(), kind)
    if "tau" in e:
        exp.tau = _float("experiment.tau", e["tau"])
    if "r" in e:
        exp.r = _vector("experiment.r", e["r"], d)
    else:
        exp.r = (0.5,) + (0.0,) * (d - 1)
    if "r_sweep" in e:
        exp.r_sweep = tuple(_vector("experiment.r_sweep", s, d) for s in e["r_sweep"].split(","))
    if "kappa" in e:
        exp.kappa = _float("experiment.kappa", e["kappa"])
    if "eps" in e:
        exp.eps = _list("experiment.eps", e["eps"], _float)
    if kind != "conditions":
        if not exp.eps:
            raise ConfigError("experiment.eps", "needs at least one value")
        if any(x <= 0 for x in exp.eps):
            raise ConfigError("experiment.eps", "values must be positive")
        if any(b >= a for a, b in zip(exp.eps, exp.eps[1:])):
            raise ConfigError("experiment.eps", "must be strictly decreasing")
    if kind in ("euler", "ns", "higher", "halfspace-euler", "halfspace-ns"):
        if "offsets" not in e:
            raise ConfigError("experiment.offsets", f"required for kind {kind!r}")
        exp.offsets = parse_offsets("experiment.offsets", e["offsets"], d)
    for key, conv in (
        ("theta", _int),
        ("nsamples", _int),
        ("seed", _int),
        ("resolution", _int),
        ("k", _int),
        ("ymax", _int),
        ("jobs", _int),
    ):
        if key in e:
            setattr(exp, key, conv(f"experiment.{key}", e[key]))
    if "box" in e and e["box"].strip().lower() != "auto":
        exp.box = _int("experiment.box", e["box"])
    if "tol" in e:
        exp.tol = _float("experiment.tol", e["tol"])
    if "anchor" in e:
        exp.anchor = e["anchor"].strip()
        if exp.anchor not in ("origin", "first", "midpoint"):
            raise ConfigError("experiment.anchor", f"unknown anchor {exp.anchor!r}")
    if "convention" in e:
        exp.convention = e["convention"].strip()
        if exp.convention not in ("floor", "even"):
            raise ConfigError("experiment.convention", f"unknown convention {exp.convention!r}")
    if "override_conditions" in e:
        exp.override_conditions = _bool("experiment.override_conditions", e["override_conditions"])
    if kind in ("ns", "halfspace-ns") and "kappa" not in e:
        exp.kappa = 2.0
    if kind == "higher" and "kappa" not in e:
        exp.kappa = float(exp.k)
    if exp.nsamples < 0 or exp.nsamples == 1:
        raise ConfigError("experiment.nsamples", "must be 0 (deterministic) or >= 2")
    if kind.startswith("halfspace") and exp.r[0] < 0:
        raise ConfigError("experiment.r", "half-space experiments need r1 >= 0")

    output = OutputConfig()
    if "output" in cp:
        o = cp["output"]
        output.directory = o.get("directory", output.directory).strip()
        if "formats" in o:
            output.formats = tuple(s.strip() for s in o["formats"].split(",") if s.strip())
            bad = [f for f in output.formats if f not in ("csv", "svg")]
            if bad:
                raise ConfigError("output.formats", f"unknown formats {bad}")
    return ExperimentConfig(model, profile, exp, output, text)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "file not found")
    return parse_config(path.read_text())
