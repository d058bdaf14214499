"""Scenario configuration files.

The format is sectioned ``key = value`` text (a TOML subset)::

    [model]
    W = "0.35355339059327379*x^2"   # required
    mass = 1.0
    hbar = 1.0

    [grid]
    n = 2048          # power of two >= 64
    L = "auto"        # box half-width

    [evolution]
    dt = "auto"       # one oscillation period / 20000
    steps = 20000
    sample_every = 100
    clamp_harmonic = false   # true: evolve in the quadratic models about x0+-

    [initial]
    center = 0.0
    width = "auto"    # vacuum width of the geometric-mean frequency
    momentum = 0.0
    c_plus = 0.7071067811865476
    c_minus = 0.7071067811865476

    [output]
    path = "out/decoherence.csv"
    format = "csv"
    methods = ["equal_freq_eq34", "gaussian_oracle", "grid"]
    tolerance = 1e-6

Only ``[model]`` is required. Unknown sections or keys are rejected.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dsl import ExpressionSource, ParseError, parse_superpotential
from .harmonic import Method
from .potential import Polynomial

AUTO = "auto"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, origin: str = "config"):
        self.line = line
        self.origin = origin
        where = f"{origin}:{line}: " if line is not None else f"{origin}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class ModelConfig:
    W: str
    mass: float = 1.0
    hbar: float = 1.0
    polynomial: Polynomial = field(default_factory=Polynomial, compare=False)


@dataclass(frozen=True)
class GridConfig:
    n: int = 2048
    L: float | None = None  # None means auto


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float | None = None
    steps: int = 20000
    sample_every: int = 100
    clamp_harmonic: bool = False


@dataclass(frozen=True)
class InitialConfig:
    center: float = 0.0
    width: float | None = None
    momentum: float = 0.0
    c_plus: float = math.sqrt(0.5)
    c_minus: float = math.sqrt(0.5)


DEFAULT_METHODS = (Method.EQUAL_FREQ_EQ34, Method.GAUSSIAN_ORACLE)


@dataclass(frozen=True)
class OutputConfig:
    path: str | None = None
    format: str = "csv"
    methods: tuple[Method, ...] = DEFAULT_METHODS
    tolerance: float = 1e-6


@dataclass(frozen=True)
class ScenarioConfig:
    model: ModelConfig
    grid: GridConfig = GridConfig()
    evolution: EvolutionConfig = EvolutionConfig()
    initial: InitialConfig = InitialConfig()
    output: OutputConfig = OutputConfig()
    source: str = "config"


_SECTIONS = ("model", "grid", "evolution", "initial", "output")
_KEYS = {
    "model": ("W", "mass", "hbar"),
    "grid": ("n", "L"),
    "evolution": ("dt", "steps", "sample_every", "clamp_harmonic"),
    "initial": ("center", "width", "momentum", "c_plus", "c_minus"),
    "output": ("path", "format", "methods", "tolerance"),
}


class _Locator:
    """Maps (section, key) to 1-based line numbers for diagnostics."""

    _header = re.compile(r"^\s*\[\s*([A-Za-z_][\w-]*)\s*\]")
    _assign = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*=")

    def __init__(self, text: str):
        self.lines: dict[tuple[str | None, str | None], int] = {}
        section = None
        for i, line in enumerate(text.splitlines(), start=1):
            m = self._header.match(line)
            if m:
                section = m.group(1)
                self.lines.setdefault((section, None), i)
                continue
            m = self._assign.match(line)
            if m:
                self.lines.setdefault((section, m.group(1)), i)

    def __call__(self, section: str | None, key: str | None = None) -> int | None:
        return self.lines.get((section, key))


def _number(v, name: str, line, origin, *, positive=False, integer=False, allow_auto=False):
    if allow_auto and v == AUTO:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        kind = "an integer" if integer else "a number"
        extra = ' or "auto"' if allow_auto else ""
        raise ConfigError(f"{name} must be {kind}{extra}, got {v!r}", line, origin)
    if integer and not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer, got {v!r}", line, origin)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite", line, origin)
    if positive and not v > 0:
        raise ConfigError(f"{name} must be positive, got {v!r}", line, origin)
    return v


def parse_config(text: str, origin: str = "config") -> ScenarioConfig:
    text = text.replace("\r\n", "\n")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", int(m.group(1)) if m else None, origin) from None
    where = _Locator(text)

    for sec, body in raw.items():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", where(sec), origin)
        if not isinstance(body, dict):
            raise ConfigError(f"{sec} must be a [section], not a value", where(None, sec), origin)
        for key in body:
            if key not in _KEYS[sec]:
                raise ConfigError(f"unknown key [{sec}].{key}", where(sec, key), origin)
    if "model" not in raw:
        raise ConfigError("section [model] required", None, origin)

    def get(sec, key, default=None):
        return raw.get(sec, {}).get(key, default)

    def loc(sec, key):
        return where(sec, key)

    # [model]
    W = get("model", "W")
    if W is None:
        raise ConfigError("[model].W required", where("model"), origin)
    if not isinstance(W, str):
        raise ConfigError("[model].W must be a quoted expression", loc("model", "W"), origin)
    try:
        poly = parse_superpotential(ExpressionSource(W, f"{origin}:[model].W"))
    except ParseError as exc:
        raise ConfigError(f"[model].W: {exc.diagnostic.message} (offset {exc.position})",
                          loc("model", "W"), origin) from None
    mass = _number(get("model", "mass", 1.0), "[model].mass", loc("model", "mass"), origin,
                   positive=True)
    hbar = _number(get("model", "hbar", 1.0), "[model].hbar", loc("model", "hbar"), origin,
                   positive=True)
    model = ModelConfig(W=W, mass=float(mass), hbar=float(hbar), polynomial=poly)

    # [grid]
    n = _number(get("grid", "n", 2048), "[grid].n", loc("grid", "n"), origin,
                positive=True, integer=True)
    if n < 64 or n & (n - 1):
        raise ConfigError(f"[grid].n must be a power of two >= 64, got {n}", loc("grid", "n"), origin)
    L = _number(get("grid", "L", AUTO), "[grid].L", loc("grid", "L"), origin,
                positive=True, allow_auto=True)
    grid = GridConfig(n=n, L=None if L is None else float(L))

    # [evolution]
    dt = _number(get("evolution", "dt", AUTO), "[evolution].dt", loc("evolution", "dt"), origin,
                 positive=True, allow_auto=True)
    steps = _number(get("evolution", "steps", 20000), "[evolution].steps",
                    loc("evolution", "steps"), origin, positive=True, integer=True)
    every = _number(get("evolution", "sample_every", 100), "[evolution].sample_every",
                    loc("evolution", "sample_every"), origin, positive=True, integer=True)
    clamp = get("evolution", "clamp_harmonic", False)
    if not isinstance(clamp, bool):
        raise ConfigError("[evolution].clamp_harmonic must be true or false",
                          loc("evolution", "clamp_harmonic"), origin)
    evolution = EvolutionConfig(dt=None if dt is None else float(dt), steps=steps,
                                sample_every=every, clamp_harmonic=clamp)

    # [initial]
    center = _number(get("initial", "center", 0.0), "[initial].center",
                     loc("initial", "center"), origin)
    width = _number(get("initial", "width", AUTO), "[initial].width", loc("initial", "width"),
                    origin, positive=True, allow_auto=True)
    momentum = _number(get("initial", "momentum", 0.0), "[initial].momentum",
                       loc("initial", "momentum"), origin)
    cp = _number(get("initial", "c_plus", math.sqrt(0.5)), "[initial].c_plus",
                 loc("initial", "c_plus"), origin)
    cm = _number(get("initial", "c_minus", math.sqrt(0.5)), "[initial].c_minus",
                 loc("initial", "c_minus"), origin)
    total = cp * cp + cm * cm
    if abs(total - 1.0) > 1e-6:
        raise ConfigError(f"[initial].c_plus^2 + c_minus^2 = {total:.9g}, expected 1",
                          loc("initial", "c_plus") or loc("initial", "c_minus"), origin)
    # user-entered decimals are renormalized to the 1e-12 spinor tolerance
    s = math.sqrt(total)
    initial = InitialConfig(center=float(center), width=None if width is None else float(width),
                            momentum=float(momentum), c_plus=cp / s, c_minus=cm / s)

    # [output]
    path = get("output", "path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("[output].path must be a quoted string", loc("output", "path"), origin)
    fmt = get("output", "format", "csv")
    if fmt != "csv":
        raise ConfigError(f'[output].format must be "csv", got {fmt!r}', loc("output", "format"),
                          origin)
    methods_raw = get("output", "methods", [m.value for m in DEFAULT_METHODS])
    if isinstance(methods_raw, str):
        methods_raw = [methods_raw]
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigError("[output].methods must be a non-empty list", loc("output", "methods"),
                          origin)
    methods = []
    for item in methods_raw:
        try:
            mth = Method(item)
        except ValueError:
            valid = ", ".join(m.value for m in Method)
            raise ConfigError(f"[output].methods: unknown method {item!r} (valid: {valid})",
                              loc("output", "methods"), origin) from None
        if mth not in methods:
            methods.append(mth)
    # canonical column order regardless of listing order
    methods.sort(key=list(Method).index)
    tol = _number(get("output", "tolerance", 1e-6), "[output].tolerance",
                  loc("output", "tolerance"), origin, positive=True)
    output = OutputConfig(path=path, format=fmt, methods=tuple(methods), tolerance=float(tol))

    return ScenarioConfig(model, grid, evolution, initial, output, origin)


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read: {exc.strerror}", None, str(p)) from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"not UTF-8 (byte {exc.start})", None, str(p)) from None
    return parse_config(text, origin=str(p))
