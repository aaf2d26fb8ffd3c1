"""Experiment configuration: TOML loading, defaults per kind, validation, hashing.

A config file looks like::

    schema = "fracnls/1"
    kind = "mc-tail"
    seed = 20261019

    [grid]
    d = 3
    n = 16
    length = 50.26548245743669

    [model]
    alpha = 1.25
    distribution = "complex_gaussian"

    [params]
    n_samples = 2000

Every table is optional; missing keys take the kind's defaults.  Unknown
keys are errors.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

import tomli

from ..errors import ConfigError, ParameterError
from ..fields import Grid
from ..hartree import HartreeParams, check_hls
from ..propagator import check_alpha
from ..randomize import RandomDistribution
from ..solver import linear_params

SCHEMA = "fracnls/1"
PI = math.pi

_GRID = {"d": 3, "n": 16, "length": 16 * PI}
_MODEL = {"alpha": 1.25, "mu": 1.0, "distribution": "complex_gaussian"}
# fields shared by every kind; None means "not used unless set"
_COMMON = {
    "s": 0.5,
    "sigma": None,
    "b": 0.55,
    "q": 4.0,
    "r": 4.0,
    "T": 1.0,
    "lambda_grid": [],
    "n_samples": 100,
    "slope_tolerance": 0.2,
    "convergence_tolerance": 0.15,
}

_DATUM = {"datum": "gaussian", "width": 2.0, "amplitude": 1.0, "chirp": 0.3}

# per-kind overrides of the three tables; keys under "params" that are not in
# _COMMON are kind-specific options
KINDS: dict[str, dict] = {
    "simulate": {
        "grid": {"length": 4 * PI},
        "params": {
            **_DATUM,
            "width": 1.0,
            "datum": "modulated",
            "T": 0.1,
            "n_time": 21,
            "method": "strang",
            "substeps": 1,
            "randomized": False,
            "sample_index": 0,
        },
    },
    "randomize": {
        "params": {**_DATUM, "sample_index": 0},
    },
    "mc-tail": {
        "params": {
            **_DATUM,
            "n_samples": 2000,
            "T": 1.0,
            "n_time": 9,
            "norms": ["sobolev:s=0.5", "mixed:q=4,r=4"],
            "laws": ["complex_gaussian", "rademacher", "uniform_symmetric"],
        },
    },
    "khintchine": {
        "params": {
            "n_samples": 200_000,
            "p_grid": [2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0],
            "n_coefficients": 64,
            "laws": ["complex_gaussian", "rademacher", "uniform_symmetric"],
        },
    },
    "bilinear-annulus": {
        "grid": {"d": 2, "n": 64, "length": 2 * PI},
        "model": {"alpha": 1.5},
        "params": {
            "alphas": [1.5, 2.0],
            "N1_list": [2, 4, 8, 16],
            "N2_list": [2, 4, 8, 16],
            "n_draws": 50,
            "kappa": 5.0,
            "envelope": 1.0,
        },
    },
    "bilinear-ball": {
        "grid": {"d": 2, "n": 256, "length": 128 * PI},
        "model": {"alpha": 1.5},
        "params": {
            "rho_list": [0.0625, 0.125, 0.25, 0.5],
            "center": [0.0, 0.0],
            "n_draws": 50,
            "kappa": 3.0,
            "envelope": 1.0,
        },
    },
    "strichartz": {
        "grid": {"d": 3, "n": 16, "length": 4 * PI},
        "model": {"alpha": 1.5},
        "params": {
            **_DATUM,
            "width": 1.0,
            "n_samples": 20,
            "T": 1.0,
            "n_time": 33,
            "pairs": [[4.0, 3.0], [2.0, 6.0]],
            "refinement_levels": 3,
        },
    },
    "xsb-transfer": {
        "grid": {"d": 3, "n": 16, "length": 2 * PI},
        "model": {"alpha": 1.5},
        "params": {
            "n_samples": 100,
            "T": 0.5,
            "n_time": 64,
            "b": 0.55,
            "q": 4.0,
            "r": 3.0,
            "perturbation": 0.3,
            "width": 1.0,
        },
    },
    "smoothing": {
        "grid": {"d": 3, "n": 16, "length": 2 * PI},
        "model": {"alpha": 1.25, "mu": 1.0},
        "params": {
            "s": 0.55,
            "sigma": 0.675,
            "T": 0.05,
            "n_samples": 20,
            "n_time": 6,
            "substeps": 2,
            "decay_extra": 0.05,
            "refine_factor": 2,
        },
    },
    "conservation": {
        "grid": {"d": 3, "n": 16, "length": 4 * PI},
        "model": {"alpha": 1.25, "mu": 1.0},
        "params": {
            **_DATUM,
            "width": 1.0,
            "datum": "modulated",
            "T": 0.1,
            "mu_list": [1.0, -1.0],
            "n_time_list": [21, 41, 81],
            "cross_validate": True,
            "cross_T": 0.05,
            "cross_n_time": 101,
            "cross_substeps": 2,
        },
    },
}

TAIL_KINDS = ("mc-tail",)
DATUM_KINDS = ("gaussian", "modulated")


def default_document(kind: str) -> dict:
    """Full default config document for ``kind`` (schema, tables, no seed)."""
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; known: {', '.join(KINDS)}", "kind")
    spec = KINDS[kind]
    return {
        "schema": SCHEMA,
        "kind": kind,
        "seed": 0,
        "grid": {**_GRID, **spec.get("grid", {})},
        "model": {**_MODEL, **spec.get("model", {})},
        "params": {**_COMMON, **spec.get("params", {})},
    }


def _check_type(value, default, where: str):
    if default is None:
        if value is None:
            return None
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"expected a number, got {value!r}", where)
        return float(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", where)
        return value
    if isinstance(default, int):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"expected an integer, got {value!r}", where)
        return value
    if isinstance(default, float):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"expected a number, got {value!r}", where)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", where)
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", where)
        if default and isinstance(default[0], list):
            return [[_check_type(x, default[0][0], f"{where}[{i}]") for x in item] for i, item in enumerate(value)]
        proto = default[0] if default else 1.0
        return [_check_type(x, proto, f"{where}[{i}]") for i, x in enumerate(value)]
    return value


def _merge(doc: dict, kind: str) -> dict:
    base = default_document(kind)
    unknown_top = set(doc) - set(base)
    if unknown_top:
        raise ConfigError(f"unknown key(s) {sorted(unknown_top)}", sorted(unknown_top)[0])
    out = copy.deepcopy(base)
    for key in ("schema", "kind"):
        if key in doc:
            out[key] = doc[key]
    if "seed" in doc:
        seed = doc["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}", "seed")
        out["seed"] = seed
    for table in ("grid", "model", "params"):
        given = doc.get(table, {})
        if not isinstance(given, dict):
            raise ConfigError("expected a table", table)
        for key, value in given.items():
            where = f"{table}.{key}"
            if key not in base[table]:
                raise ConfigError(f"unknown key for kind {kind!r}", where)
            out[table][key] = _check_type(value, base[table][key], where)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration; ``document`` is the normalized source."""

    kind: str
    seed: int
    grid: Grid
    alpha: float
    mu: float
    distribution: RandomDistribution
    s: float
    sigma: float | None
    b: float
    q: float
    r: float
    T: float
    lambda_grid: tuple
    n_samples: int
    options: dict = field(default_factory=dict, compare=False)
    document: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def hash(self) -> str:
        return config_hash(self.document)

    def opt(self, key):
        return self.options[key]

    def hartree(self) -> HartreeParams:
        return HartreeParams(self.alpha, self.mu, self.grid.d)

    def flow_params(self):
        """Hartree parameters, or the free flow when ``mu = 0``."""
        if self.mu == 0:
            return linear_params(self.alpha, self.grid.d)
        return self.hartree()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        doc = copy.deepcopy(self.document)
        doc["seed"] = int(seed)
        return from_document(doc)

    def replace(self, **tables) -> "ExperimentConfig":
        """New config with some keys replaced, e.g. ``replace(params={"n_draws": 10})``."""
        doc = copy.deepcopy(self.document)
        for table, values in tables.items():
            if isinstance(values, dict):
                doc[table].update(values)
            else:
                doc[table] = values
        return from_document(doc)

    def tolerance_overrides(self) -> dict:
        from .report import CONVERGENCE_TOLERANCE, SLOPE_TOLERANCE

        out = {}
        if self.options["slope_tolerance"] != SLOPE_TOLERANCE:
            out["slope_tolerance"] = self.options["slope_tolerance"]
        if self.options["convergence_tolerance"] != CONVERGENCE_TOLERANCE:
            out["convergence_tolerance"] = self.options["convergence_tolerance"]
        return out


def config_hash(document: dict) -> str:
    text = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def pair_problem(d: int, q: float, r: float) -> str | None:
    """Why ``(q, r)`` is not a usable Strichartz pair in dimension ``d``, or ``None``."""
    if not (q >= 2 and r >= 2 and math.isclose(2 / q + d / r, d / 2, rel_tol=1e-12)):
        return f"({q:g}, {r:g}) is not admissible: need 2/q + d/r = d/2"
    if d == 2 and q == 2 and math.isinf(r):
        return "the endpoint (d, q, r) = (2, 2, inf) is excluded"
    return None


def admissible_s_range(alpha: float) -> tuple[float, float]:
    """Open interval ``(max((2a - 1)/(4a - 3) * a/2, 1/2), a/2)`` of admissible ``s``."""
    alpha = check_alpha(alpha)
    lo = max((2 * alpha - 1) / (4 * alpha - 3) * alpha / 2, 0.5)
    hi = alpha / 2
    if not lo < hi:
        raise ParameterError(f"admissible s-range is empty for alpha={alpha}")
    return lo, hi


def _validate(doc: dict) -> None:
    kind = doc["kind"]
    g, m, p = doc["grid"], doc["model"], doc["params"]
    try:
        alpha = check_alpha(m["alpha"])
        RandomDistribution(m["distribution"])
    except ParameterError as e:
        raise ConfigError(str(e), "model") from None
    if not math.isfinite(m["mu"]):
        raise ConfigError("mu must be finite", "model.mu")
    for key in ("T",):
        if not p[key] > 0:
            raise ConfigError(f"must be positive, got {p[key]}", f"params.{key}")
    if p["n_samples"] < 1:
        raise ConfigError(f"must be >= 1, got {p['n_samples']}", "params.n_samples")
    if kind in TAIL_KINDS and p["n_samples"] < 100:
        raise ConfigError(f"tail experiments need n_samples >= 100, got {p['n_samples']}", "params.n_samples")
    for key in ("slope_tolerance", "convergence_tolerance"):
        if not p[key] > 0:
            raise ConfigError("must be positive", f"params.{key}")
    if "datum" in p and p["datum"] not in DATUM_KINDS:
        raise ConfigError(f"unknown datum {p['datum']!r}; choose from {DATUM_KINDS}", "params.datum")
    if "laws" in p:
        for i, law in enumerate(p["laws"]):
            try:
                RandomDistribution(law)
            except ParameterError as e:
                raise ConfigError(str(e), f"params.laws[{i}]") from None
    if kind == "mc-tail":
        from ..norms import NormSpec

        for i, text in enumerate(p["norms"]):
            try:
                NormSpec.parse(text)
            except ParameterError as e:
                raise ConfigError(str(e), f"params.norms[{i}]") from None
    if kind == "khintchine":
        if not p["p_grid"] or min(p["p_grid"]) < 2 or max(p["p_grid"]) > 12:
            raise ConfigError("p_grid must be a nonempty subset of [2, 12]", "params.p_grid")
        if p["n_coefficients"] < 1:
            raise ConfigError("must be >= 1", "params.n_coefficients")
    if kind in ("bilinear-annulus", "bilinear-ball"):
        if g["d"] < 2:
            raise ConfigError("bilinear estimates need d >= 2", "grid.d")
        if p["n_draws"] < 1:
            raise ConfigError("must be >= 1", "params.n_draws")
        for i, a in enumerate(p.get("alphas", [])):
            try:
                check_alpha(a)
            except ParameterError as e:
                raise ConfigError(str(e), f"params.alphas[{i}]") from None
    if kind == "bilinear-annulus":
        for key in ("N1_list", "N2_list"):
            for N in p[key]:
                if N < 1 or N & (N - 1):
                    raise ConfigError(f"{N} is not dyadic", f"params.{key}")
        nyq = g["n"] // 2 * 2 * PI / g["length"]
        if max(p["N2_list"]) > nyq / 2:
            raise ConfigError(f"N2={max(p['N2_list'])} is not below Nyquist/2 = {nyq / 2:g}", "params.N2_list")
    if kind == "bilinear-ball":
        if len(p["center"]) != g["d"]:
            raise ConfigError("center must have d components", "params.center")
        if any(not rho > 0 for rho in p["rho_list"]):
            raise ConfigError("radii must be positive", "params.rho_list")
    if kind == "strichartz":
        d = g["d"]
        for i, (q, r) in enumerate(p["pairs"]):
            problem = pair_problem(d, q, r)
            if problem:
                raise ConfigError(problem, f"params.pairs[{i}]")
        if p["refinement_levels"] < 2:
            raise ConfigError("need at least two refinement levels", "params.refinement_levels")
    if kind == "smoothing":
        lo, hi = admissible_s_range(alpha)
        if not lo < p["s"] < hi:
            raise ConfigError(f"s={p['s']} outside the admissible range ({lo:.4g}, {hi:.4g})", "params.s")
        if p["sigma"] is None or not p["sigma"] > alpha / 2:
            raise ConfigError(f"sigma must exceed alpha/2 = {alpha / 2:g}", "params.sigma")
    mus = p.get("mu_list", [m["mu"]])
    if kind == "conservation" and any(mu == 0 for mu in mus):
        raise ConfigError("couplings must be nonzero", "params.mu_list")
    if kind in ("smoothing", "conservation", "simulate") and any(mu != 0 for mu in mus):
        try:
            check_hls(g["d"], alpha)
        except ParameterError as e:
            raise ConfigError(str(e), "grid.d") from None
    if kind == "simulate" and p["method"] not in ("strang", "picard"):
        raise ConfigError(f"unknown method {p['method']!r}", "params.method")
    if kind == "xsb-transfer" and not 0.5 < p["b"] < 1:
        raise ConfigError("b must lie in (1/2, 1)", "params.b")
    if kind == "xsb-transfer":
        problem = pair_problem(g["d"], p["q"], p["r"])
        if problem:
            raise ConfigError(problem, "params.q")


def from_document(doc: dict, kind: str | None = None) -> ExperimentConfig:
    """Validate a parsed config document (e.g. from TOML) and build the config."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a table")
    if "schema" not in doc:
        raise ConfigError(f"missing schema key (expected {SCHEMA!r})", "schema")
    if doc["schema"] != SCHEMA:
        raise ConfigError(f"unsupported schema {doc['schema']!r} (expected {SCHEMA!r})", "schema")
    doc_kind = doc.get("kind", kind)
    if doc_kind is None:
        raise ConfigError("missing experiment kind", "kind")
    if kind is not None and doc_kind != kind:
        raise ConfigError(f"config is for {doc_kind!r} but {kind!r} was requested", "kind")
    if doc_kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {doc_kind!r}; known: {', '.join(KINDS)}", "kind")
    merged = _merge(doc, doc_kind)
    _validate(merged)
    g, m, p = merged["grid"], merged["model"], merged["params"]
    grid_kw = {k: v for k, v in g.items() if k in ("d", "n", "length")}
    try:
        grid = Grid(**grid_kw)
    except ParameterError as e:
        raise ConfigError(str(e), "grid") from None
    common = {k: p[k] for k in ("s", "sigma", "b", "q", "r", "T", "n_samples")}
    options = {k: v for k, v in p.items() if k not in common and k != "lambda_grid"}
    return ExperimentConfig(
        kind=doc_kind,
        seed=merged["seed"],
        grid=grid,
        alpha=float(m["alpha"]),
        mu=float(m["mu"]),
        distribution=RandomDistribution(m["distribution"]),
        lambda_grid=tuple(p["lambda_grid"]),
        options=options,
        document=merged,
        **common,
    )


def load_config(path, kind: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Read and validate a TOML config; ``seed`` overrides the file's seed."""
    from pathlib import Path

    text = Path(path).read_text()
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"TOML syntax error: {e}") from None
    if seed is not None:
        doc["seed"] = seed
    return from_document(doc, kind)


def default_config(kind: str, seed: int = 0, **tables) -> ExperimentConfig:
    doc = default_document(kind)
    doc["seed"] = seed
    for table, values in tables.items():
        doc[table].update(values)
    return from_document(doc)


def to_toml(document: dict) -> str:
    """Serialize a config document (the subset of TOML the schema uses)."""

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, float):
            return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
        if isinstance(v, list):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return str(v)

    lines = [f"schema = {fmt(document['schema'])}", f"kind = {fmt(document['kind'])}", f"seed = {document['seed']}"]
    for table in ("grid", "model", "params"):
        lines.append(f"\n[{table}]")
        for key, value in document[table].items():
            if value is not None:
                lines.append(f"{key} = {fmt(value)}")
    return "\n".join(lines) + "\n"
