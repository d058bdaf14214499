"""Scenario orchestration behind the command-line verbs.

Each ``cmd_*`` function takes a resolved :class:`Scenario` and returns
plain data (a :class:`Table` and/or a JSON-ready dict); writing files is
left to :mod:`susydeco.cli`.
"""
from __future__ import annotations

import json
import math
import time
from importlib.resources import files
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import grid as gridmod
from .config import ConfigError, ScenarioConfig
from .dsl import format_polynomial
from .grid import (Channel, SpatialGrid, SpinorState, decoherence_numeric, default_half_width,
                   initial_packet, propagate, purity, reduced_density, spectrum,
                   build_block_hamiltonian)
from .harmonic import (DecoherenceSeries, GaussianPacket, Method, coherent_wavepacket,
                       gaussian_oracle, series_equal_freq, series_paper)
from .potential import (HarmonicChannel, PotentialError, SuperpotentialModel,
                        effective_potential, evaluate, harmonic_params, select_equilibrium)

SUSY_ORDER_WINDOW = (1.5, 2.5)
SUSY_MAX_N = 1024
SCHEMA_IDS = {
    "decoherence": "susydeco/decoherence-summary/1",
    "susy-check": "susydeco/susy-check/1",
    "compare": "susydeco/compare/1",
}


SCHEMA_FILES = {
    "decoherence": "decoherence-summary.json",
    "susy-check": "susy-check.json",
    "compare": "compare.json",
}


def load_schema(kind: str) -> dict:
    """JSON schema for the report emitted by verb ``kind``."""
    return json.loads(files("susydeco").joinpath("schemas", SCHEMA_FILES[kind]).read_text("utf-8"))


class DeviationExceeded(RuntimeError):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


def fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class Table:
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)


@dataclass(frozen=True)
class Scenario:
    """A config with every "auto" resolved against the model."""

    config: ScenarioConfig
    model: SuperpotentialModel
    plus: HarmonicChannel | None
    minus: HarmonicChannel | None
    grid: SpatialGrid
    dt_value: float | None
    steps: int
    sample_every: int
    clamp: bool
    center: float
    width_value: float | None
    momentum: float
    c_plus: float
    c_minus: float

    @property
    def width(self) -> float:
        if self.width_value is None:
            raise ConfigError('[initial].width = "auto" needs a stable equilibrium in both '
                              "channels; give a number", None, self.config.source)
        return self.width_value

    @property
    def dt(self) -> float:
        if self.dt_value is None:
            raise ConfigError('[evolution].dt = "auto" needs a stable equilibrium in both '
                              "channels; give a number", None, self.config.source)
        return self.dt_value

    @property
    def channels(self) -> tuple[HarmonicChannel, HarmonicChannel]:
        if self.plus is None or self.minus is None:
            raise ConfigError("this operation needs a stable equilibrium in both channels",
                              None, self.config.source)
        return self.plus, self.minus

    @property
    def omega_ref(self) -> float | None:
        if self.plus is None or self.minus is None:
            return None
        return math.sqrt(self.plus.omega0 * self.minus.omega0)

    @property
    def times(self) -> np.ndarray:
        """Snapshot times produced by ``grid.propagate`` for this evolution."""
        idx = list(range(0, self.steps + 1, self.sample_every))
        if idx[-1] != self.steps:
            idx.append(self.steps)
        return np.array(idx, dtype=float) * self.dt

    @property
    def initial_packet(self) -> GaussianPacket:
        return GaussianPacket(self.center, self.momentum, complex(1.0 / (2.0 * self.width**2)))

    def is_shared_vacuum(self) -> bool:
        """True when the initial packet is the common oscillator vacuum at x = 0."""
        if self.plus is None or self.minus is None:
            return False
        if not math.isclose(self.plus.omega0, self.minus.omega0, rel_tol=1e-12):
            return False
        return (self.center == 0.0 and self.momentum == 0.0
                and math.isclose(self.width, self.plus.vacuum_width, rel_tol=1e-12))

    def clamps(self) -> tuple[HarmonicChannel | None, HarmonicChannel | None]:
        return self.channels if self.clamp else (None, None)


def _channel_or_none(model: SuperpotentialModel, ch: Channel) -> HarmonicChannel | None:
    try:
        return harmonic_params(model, ch, select_equilibrium(model, ch))
    except PotentialError:
        return None


def resolve(config: ScenarioConfig) -> Scenario:
    src = config.source
    model = SuperpotentialModel(config.model.polynomial, config.model.mass, config.model.hbar)
    plus = _channel_or_none(model, Channel.PLUS)
    minus = _channel_or_none(model, Channel.MINUS)
    have = plus is not None and minus is not None
    w_ref = math.sqrt(plus.omega0 * minus.omega0) if have else None

    # "auto" values stay None without an equilibrium and fail only where used
    width = config.initial.width
    if width is None and have:
        width = gridmod.vacuum_width(w_ref, model.mass, model.hbar)
    dt = config.evolution.dt
    if dt is None and have:
        dt = (2.0 * math.pi / w_ref) / 20000.0
    L = config.grid.L
    if L is None:
        if not have:
            raise ConfigError('[grid].L = "auto" needs a stable equilibrium in both channels; '
                              "give a number", None, src)
        L = default_half_width([plus.x0, minus.x0, config.initial.center],
                               [width, plus.vacuum_width, minus.vacuum_width])
    if config.evolution.clamp_harmonic and not have:
        raise ConfigError("[evolution].clamp_harmonic = true needs a stable equilibrium in "
                          "both channels", None, src)

    sc = Scenario(config=config, model=model, plus=plus, minus=minus,
                  grid=SpatialGrid(config.grid.n, L), dt_value=dt, steps=config.evolution.steps,
                  sample_every=config.evolution.sample_every,
                  clamp=config.evolution.clamp_harmonic, center=config.initial.center,
                  width_value=width, momentum=config.initial.momentum,
                  c_plus=config.initial.c_plus, c_minus=config.initial.c_minus)
    return sc


def check_methods(sc: Scenario, methods: Sequence[Method]) -> None:
    have = sc.plus is not None and sc.minus is not None
    for m in methods:
        if m is Method.GRID:
            continue
        if not have:
            raise ConfigError(f"method {m.value} needs a stable equilibrium in both channels",
                              None, sc.config.source)
        if m is Method.EQUAL_FREQ_EQ34 and not sc.is_shared_vacuum():
            raise ConfigError(
                "method equal_freq_eq34 needs equal channel frequencies and the vacuum "
                "initial packet (center 0, momentum 0, width auto)", None, sc.config.source)


# --- potentials -------------------------------------------------------------------

def cmd_potentials(sc: Scenario) -> Table:
    xs = sc.grid.points
    cols = ["x", "V_plus", "V_minus", "V_plus_harmonic", "V_minus_harmonic"]
    data = [xs]
    harm = []
    for ch, hc in ((Channel.PLUS, sc.plus), (Channel.MINUS, sc.minus)):
        V = effective_potential(sc.model, ch)
        data.append(evaluate(V, xs))
        if hc is not None:
            harm.append(hc.potential(xs))
        elif V.is_constant():
            harm.append(evaluate(V, xs))  # a constant is its own quadratic model
        else:
            # re-raise the reduction failure with its own message
            harmonic_params(sc.model, ch, select_equilibrium(sc.model, ch))
    data.extend(harm)
    return Table(cols, [list(r) for r in zip(*data)])


# --- wavepackets -------------------------------------------------------------------

def cmd_wavepackets(sc: Scenario, times: Sequence[float], source: str = "analytic") -> Table:
    times = sorted(float(t) for t in times)
    if any(t < 0 for t in times):
        raise ConfigError("wavepacket times must be non-negative", None, sc.config.source)
    xs = sc.grid.points
    cols = ["x"]
    data = [xs]
    if source == "analytic":
        hp, hm = sc.channels
        if not sc.is_shared_vacuum():
            raise ConfigError("analytic wavepackets need equal channel frequencies and the "
                              "vacuum initial packet; use --source grid", None, sc.config.source)
        for t in times:
            cols += [f"rho_plus_t={fmt(t)}", f"rho_minus_t={fmt(t)}"]
            data.append(np.abs(coherent_wavepacket(hp, t, xs)) ** 2)
            data.append(np.abs(coherent_wavepacket(hm, t, xs)) ** 2)
    elif source == "grid":
        cp, cm = sc.clamps()
        psi = initial_packet(sc.grid, sc.center, sc.width, sc.momentum, sc.model.hbar)
        cur = {Channel.PLUS: psi, Channel.MINUS: psi.with_channel(Channel.MINUS)}
        done = 0
        for t in times:
            target = int(round(t / sc.dt))
            for ch, clamp in ((Channel.PLUS, cp), (Channel.MINUS, cm)):
                if target > done:
                    span = target - done
                    cur[ch] = propagate(sc.model, sc.grid, cur[ch], ch, sc.dt, span, clamp,
                                        sample_every=span)[-1]
            done = max(done, target)
            cols += [f"rho_plus_t={fmt(t)}", f"rho_minus_t={fmt(t)}"]
            data.append(cur[Channel.PLUS].density())
            data.append(cur[Channel.MINUS].density())
    else:
        raise ValueError(f"unknown source {source!r}")
    return Table(cols, [list(r) for r in zip(*data)])


# --- decoherence ------------------------------------------------------------------

@dataclass
class RunReport:
    scenario: Scenario
    series: dict[Method, DecoherenceSeries]
    norms: dict[Channel, np.ndarray] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    susy: dict | None = None


def run_methods(sc: Scenario, methods: Sequence[Method] | None = None) -> RunReport:
    methods = list(sc.config.output.methods if methods is None else methods)
    check_methods(sc, methods)
    ts = sc.times
    out: dict[Method, DecoherenceSeries] = {}
    norms: dict[Channel, np.ndarray] = {}
    timings: dict[str, float] = {}
    for m in methods:
        start = time.perf_counter()
        if m is Method.EQUAL_FREQ_EQ34:
            out[m] = series_equal_freq(*sc.channels, ts)
        elif m is Method.PAPER_EQ30:
            out[m] = series_paper(*sc.channels, ts)
        elif m is Method.GAUSSIAN_ORACLE:
            out[m] = gaussian_oracle(*sc.channels, sc.initial_packet, ts)
        elif m is Method.GRID:
            psi = initial_packet(sc.grid, sc.center, sc.width, sc.momentum, sc.model.hbar)
            cp, cm = sc.clamps()
            tp = propagate(sc.model, sc.grid, psi, Channel.PLUS, sc.dt, sc.steps, cp,
                           sc.sample_every)
            tm = propagate(sc.model, sc.grid, psi.with_channel(Channel.MINUS), Channel.MINUS,
                           sc.dt, sc.steps, cm, sc.sample_every)
            out[m] = decoherence_numeric(tp, tm)
            norms[Channel.PLUS] = np.array([w.norm() for w in tp])
            norms[Channel.MINUS] = np.array([w.norm() for w in tm])
        timings[m.value] = time.perf_counter() - start
    return RunReport(sc, out, norms, timings)


def decoherence_table(report: RunReport) -> Table:
    sc = report.scenario
    ts = sc.times
    cols = ["t"]
    data: list[np.ndarray] = [ts]
    w = sc.omega_ref
    if w is not None:
        cols.append("t_omega")
        data.append(ts * w)
    for m, s in report.series.items():
        sfx = m.suffix
        cols += [f"re_D_{sfx}", f"im_D_{sfx}", f"abs_D_{sfx}", f"purity_{sfx}"]
        pur = np.array([purity(reduced_density(sc.c_plus, sc.c_minus, d)) for d in s.values])
        data += [s.values.real, s.values.imag, np.abs(s.values), pur]
    if report.norms:
        cols += ["norm_plus_grid", "norm_minus_grid"]
        data += [report.norms[Channel.PLUS], report.norms[Channel.MINUS]]
    return Table(cols, [list(r) for r in zip(*data)])


def revival_times(ts: np.ndarray, mags: np.ndarray) -> list[float]:
    """Times of interior local maxima of |D|, plus the last sample if still rising."""
    out = []
    for i in range(1, len(mags) - 1):
        if mags[i] >= mags[i - 1] and mags[i] > mags[i + 1]:
            out.append(float(ts[i]))
    if len(mags) > 1 and mags[-1] > mags[-2]:
        out.append(float(ts[-1]))
    return out


def _channel_json(hc: HarmonicChannel | None) -> dict | None:
    if hc is None:
        return None
    return {"x0": hc.x0, "omega0": hc.omega0, "V0": hc.V0, "f": hc.f, "E0": hc.E0, "g": hc.g,
            "period": hc.period}


def deviations(report: RunReport) -> dict[str, dict[str, float]]:
    """Pairwise max |D_a - D_b| and max ||D_a| - |D_b|| over the shared time grid."""
    out = {}
    items = list(report.series.items())
    for i, (ma, sa) in enumerate(items):
        for mb, sb in items[i + 1:]:
            out[f"{ma.suffix}_vs_{mb.suffix}"] = {
                "max_abs_diff": float(np.max(np.abs(sa.values - sb.values))),
                "max_magnitude_diff": float(np.max(np.abs(np.abs(sa.values) - np.abs(sb.values)))),
            }
    return out


def gated_deviation(report: RunReport) -> float:
    """Largest magnitude deviation among methods that are expected to agree.

    The literal general-frequency formula is excluded: its disagreement is
    a reported finding, not a failure.
    """
    worst = 0.0
    for key, d in deviations(report).items():
        if "eq30" in key:
            continue
        worst = max(worst, d["max_magnitude_diff"])
    return worst


def summary(report: RunReport, kind: str = "decoherence") -> dict:
    sc = report.scenario
    methods = {}
    for m, s in report.series.items():
        mags = np.abs(s.values)
        i = int(np.argmin(mags))
        entry = {
            "method": m.value,
            "min_abs_D": float(mags[i]),
            "t_at_min": float(s.times[i]),
            "final_abs_D": float(mags[-1]),
            "revival_times": revival_times(s.times, mags),
        }
        if m is Method.GRID:
            entry["max_norm_drift"] = float(max(
                np.max(np.abs(report.norms[ch] - report.norms[ch][0])) for ch in report.norms))
        methods[m.suffix] = entry
    out = {
        "schema": SCHEMA_IDS[kind],
        "model": {"W": format_polynomial(sc.model.W), "mass": sc.model.mass, "hbar": sc.model.hbar},
        "channels": {"plus": _channel_json(sc.plus), "minus": _channel_json(sc.minus)},
        "decoherence_depth": (4.0 * sc.plus.omega0 * sc.plus.x0**2 * sc.model.mass / sc.model.hbar
                              if sc.plus is not None else None),
        "initial": {"center": sc.center, "width": sc.width, "momentum": sc.momentum,
                    "c_plus": sc.c_plus, "c_minus": sc.c_minus},
        "grid": {"n": sc.grid.n, "L": sc.grid.half_width, "dt": sc.dt, "steps": sc.steps,
                 "sample_every": sc.sample_every, "clamp_harmonic": sc.clamp},
        "omega_ref": sc.omega_ref,
        "methods": methods,
        "deviations": deviations(report),
        "max_deviation": gated_deviation(report),
        "tolerance": sc.config.output.tolerance,
        "timings_s": report.timings,
    }
    return out


def cmd_decoherence(sc: Scenario) -> tuple[Table, dict]:
    report = run_methods(sc)
    return decoherence_table(report), summary(report, "decoherence")


def cmd_compare(sc: Scenario) -> dict:
    """Every applicable method on the shared time grid; raises if they disagree."""
    methods = [Method.GAUSSIAN_ORACLE, Method.GRID]
    if sc.plus is not None and sc.minus is not None:
        methods = [Method.PAPER_EQ30] + methods
        if sc.is_shared_vacuum():
            methods = [Method.EQUAL_FREQ_EQ34] + methods
    else:
        methods = [Method.GRID]
    report = run_methods(sc, methods)
    out = summary(report, "compare")
    out["within_tolerance"] = out["max_deviation"] <= sc.config.output.tolerance
    if not out["within_tolerance"]:
        raise DeviationExceeded(
            f"methods disagree by {out['max_deviation']:.3e} > tolerance "
            f"{sc.config.output.tolerance:.3e}", out)
    return out


# --- supercharge algebra -------------------------------------------------------------

def fit_order(dxs: Sequence[float], residuals: Sequence[float]) -> float | None:
    """Least-squares slope of log(residual) against log(dx); None when all at floor."""
    pts = [(math.log(d), math.log(r)) for d, r in zip(dxs, residuals) if r > gridmod.RESIDUAL_FLOOR]
    if len(pts) < 2:
        return None
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def cmd_susy_check(sc: Scenario, halvings: int = 1, n_base: int = 256,
                   half_width: float | None = None) -> dict:
    if halvings < 1:
        raise ConfigError("halvings must be >= 1", None, sc.config.source)
    n_top = n_base * 2**halvings
    if n_top > SUSY_MAX_N:
        raise ConfigError(f"finest grid n = {n_top} exceeds the dense-matrix budget "
                          f"({SUSY_MAX_N})", None, sc.config.source)
    L = half_width if half_width is not None else sc.grid.half_width
    levels = []
    for h in range(halvings + 1):
        g = SpatialGrid(n_base * 2**h, L)
        levels.append((g, gridmod.algebra_residuals(sc.model, g)))
    dxs = [g.dx for g, _ in levels]
    rows = []
    ok = True
    for name in gridmod.RESIDUAL_NAMES:
        vals = [r[name] for _, r in levels]
        order = fit_order(dxs, vals)
        ratios = [None if (a <= gridmod.RESIDUAL_FLOOR and b <= gridmod.RESIDUAL_FLOOR)
                  else (a / b if b > 0 else None) for a, b in zip(vals, vals[1:])]
        in_window = order is None or SUSY_ORDER_WINDOW[0] <= order <= SUSY_ORDER_WINDOW[1]
        ok = ok and in_window
        rows.append({"name": name, "residuals": vals, "ratios": ratios,
                     "order": "exact" if order is None else order, "in_window": in_window})
    return {
        "schema": SCHEMA_IDS["susy-check"],
        "model": {"W": format_polynomial(sc.model.W), "mass": sc.model.mass,
                  "hbar": sc.model.hbar},
        "half_width": L,
        "n": [g.n for g, _ in levels],
        "dx": dxs,
        "residuals": rows,
        "order_window": list(SUSY_ORDER_WINDOW),
        "ok": ok,
    }


# --- spectrum ------------------------------------------------------------------------

def cmd_spectrum(sc: Scenario, k: int) -> Table:
    if k < 1:
        raise ConfigError("k must be >= 1", None, sc.config.source)
    cp, cm = sc.clamps()
    ep = spectrum(build_block_hamiltonian(sc.model, sc.grid, Channel.PLUS, cp), k)
    em = spectrum(build_block_hamiltonian(sc.model, sc.grid, Channel.MINUS, cm), k)
    rows = [[i, a, b, abs(a - b)] for i, (a, b) in enumerate(zip(ep, em))]
    return Table(["index", "E_plus", "E_minus", "gap"], rows)


def spinor_state(sc: Scenario) -> SpinorState:
    psi = initial_packet(sc.grid, sc.center, sc.width, sc.momentum, sc.model.hbar)
    return SpinorState.factorized(sc.c_plus, sc.c_minus, psi)
