"""Acceptance criteria 1-9, one test per criterion.

Each test records a PASS/FAIL line, printed again in the terminal summary.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import CONFIGS, GOLDEN, MINUS, PLUS, record_criterion
from susydeco import commands
from susydeco.cli import table_to_csv
from susydeco.config import load_config, parse_config
from susydeco.grid import (SpatialGrid, SpinorState, algebra_residuals, build_block_hamiltonian,
                           decoherence_numeric, default_half_width, evolve_spinor, initial_packet,
                           propagate, purity, reduced_density, reduced_density_from_state,
                           spectrum, vacuum_width, RESIDUAL_FLOOR, RESIDUAL_NAMES)
from susydeco.harmonic import (decoherence_equal_freq_pair, decoherence_paper, gaussian_oracle,
                               series_equal_freq)
from susydeco.potential import (Polynomial, SuperpotentialModel, channel_pair, derivative,
                                effective_potential, evaluate, find_equilibria, linear_model,
                                quartic_model)

C_VALUES = (0.1, 0.5, 1.0)


@contextmanager
def criterion(number: int, title: str):
    notes: list[str] = []
    try:
        yield notes
    except BaseException:
        record_criterion(number, title, False, "; ".join(notes))
        raise
    record_criterion(number, title, True, "; ".join(notes))


def vacuum_run(model, pair, steps_per_period=20000, periods=1.0, sample_every=500, n=2048,
               clamp=True):
    """Both channels from the shared vacuum at x = 0; returns (times, traj_plus, traj_minus)."""
    hp, hm = pair
    w = math.sqrt(hp.omega0 * hm.omega0)
    width = vacuum_width(w, model.mass, model.hbar)
    g = SpatialGrid(n, default_half_width([hp.x0, hm.x0], [width, hp.vacuum_width, hm.vacuum_width]))
    psi = initial_packet(g, 0.0, width, 0.0, model.hbar)
    dt = (2 * math.pi / w) / steps_per_period
    steps = int(round(periods * steps_per_period))
    cp, cm = (hp, hm) if clamp else (None, None)
    tp = propagate(model, g, psi, PLUS, dt, steps, cp, sample_every)
    tm = propagate(model, g, psi.with_channel(MINUS), MINUS, dt, steps, cm, sample_every)
    return g, psi, tp, tm


def test_criterion_1_equilibria():
    with criterion(1, "equilibria |x0+-| = (1/2C)^(1/3) within 1e-10") as notes:
        for C in C_VALUES:
            model = quartic_model(C)
            expected = (1.0 / (2.0 * C)) ** (1.0 / 3.0)
            for ch in (PLUS, MINUS):
                (x0,) = find_equilibria(model, ch)
                err = abs(abs(x0) - expected)
                notes.append(f"C={C} {ch.value}: err {err:.1e}")
                assert err <= 1e-10
        assert find_equilibria(quartic_model(0.5), PLUS) == [-1.0]
        assert find_equilibria(quartic_model(0.5), MINUS) == [1.0]


def test_criterion_2_closed_form():
    with criterion(2, "closed-form |D| = exp(-4 w0 x0^2 sin^2(w0 t/2)), period, revivals") as notes:
        for C in C_VALUES:
            model = quartic_model(C)
            hp, hm = channel_pair(model)
            V = effective_potential(model, PLUS)
            w0 = math.sqrt(evaluate(derivative(derivative(V)), hp.x0) / model.mass)
            assert hp.omega0 == pytest.approx(w0, rel=1e-15)
            T = 2 * math.pi / w0
            ts = np.linspace(0, 3 * T, 3001)
            mag = np.abs(decoherence_equal_freq_pair(hp, hm, ts))
            ref = np.exp(-4 * w0 * hp.x0**2 * np.sin(w0 * ts / 2) ** 2)
            pointwise = float(np.max(np.abs(mag - ref)))
            shifted = np.abs(decoherence_equal_freq_pair(hp, hm, ts + T))
            period_err = float(np.max(np.abs(shifted - mag)))
            revivals = np.abs(decoherence_equal_freq_pair(hp, hm, T * np.arange(1, 6)))
            revival_err = float(np.max(np.abs(revivals - 1.0)))
            notes.append(f"C={C}: {pointwise:.1e}/{period_err:.1e}/{revival_err:.1e}")
            assert pointwise <= 1e-12
            assert period_err <= 1e-12
            assert revival_err <= 1e-12


def test_criterion_3_oracle_triangle():
    with criterion(3, "eq34 = oracle to 1e-10; grid (n=2048, dt=T/20000) within 1e-6") as notes:
        cfg = parse_config('''[model]
W = "0.35355339059327373*x^2"
[grid]
n = 2048
[evolution]
steps = 20000
sample_every = 100
clamp_harmonic = true
[output]
methods = ["equal_freq_eq34", "gaussian_oracle", "grid"]
''')
        sc = commands.resolve(cfg)
        assert sc.dt == pytest.approx(sc.plus.period / 20000, rel=1e-15)
        assert sc.times[-1] == pytest.approx(sc.plus.period, rel=1e-12)
        report = commands.run_methods(sc)
        eq34, oracle, grid = (report.series[m].values for m in cfg.output.methods)
        d_eo = float(np.max(np.abs(eq34 - oracle)))
        d_ge = float(np.max(np.abs(np.abs(grid) - np.abs(eq34))))
        d_go = float(np.max(np.abs(np.abs(grid) - np.abs(oracle))))
        notes.append(f"eq34-oracle {d_eo:.1e}, grid-eq34 {d_ge:.1e}, grid-oracle {d_go:.1e}")
        assert d_eo <= 1e-10
        assert d_ge <= 1e-6 and d_go <= 1e-6


def test_criterion_4_susy_algebra():
    with criterion(4, "SUSY residuals shrink 4x +-20% (or sit at the floor) for n=256->512") as notes:
        models = {"W=0": SuperpotentialModel(Polynomial([])), "linear": linear_model(1.0),
                  "quartic": quartic_model(0.5)}
        coarse_grid, fine_grid = SpatialGrid(256, 8.0), SpatialGrid(512, 8.0)
        failures = []
        for label, model in models.items():
            coarse = algebra_residuals(model, coarse_grid)
            fine = algebra_residuals(model, fine_grid)
            parts = []
            for name in RESIDUAL_NAMES:
                a, b = coarse[name], fine[name]
                if a <= RESIDUAL_FLOOR and b <= RESIDUAL_FLOOR:
                    parts.append(f"{name} exact")
                    continue
                ratio = a / b
                parts.append(f"{name} {ratio:.2f}")
                if not 3.2 <= ratio <= 4.8:
                    failures.append(f"{label} {name} ratio {ratio:.3f}")
            notes.append(f"{label}: " + ", ".join(parts))
        assert not failures, failures


def test_criterion_5_spectral_pairing():
    with criterion(5, "quartic C=0.5: 6 lowest E+ and E- pair within 1e-6, all >= -1e-9") as notes:
        model = quartic_model(0.5)
        g = SpatialGrid(512, 8.0)
        ep = spectrum(build_block_hamiltonian(model, g, PLUS), 6)
        em = spectrum(build_block_hamiltonian(model, g, MINUS), 6)
        full_p = np.linalg.eigvalsh(build_block_hamiltonian(model, g, PLUS).matrix)
        full_m = np.linalg.eigvalsh(build_block_hamiltonian(model, g, MINUS).matrix)
        gap = float(np.max(np.abs(ep - em)))
        lowest = float(min(full_p[0], full_m[0]))
        notes.append(f"max gap {gap:.1e}, lowest eigenvalue {lowest:.6f}")
        assert gap <= 1e-6
        assert lowest >= -1e-9


def test_criterion_6_reduced_state():
    with criterion(6, "diag(rho) fixed to 1e-10, Tr rho^2 identity to 1e-12, D=0 diagonal") as notes:
        cp, cm = 0.6, 0.8j
        model = quartic_model(0.5)
        pair = channel_pair(model)
        worst_diag = worst_purity = worst_trace = 0.0
        for clamp in (True, False):
            hp, hm = pair
            w = hp.omega0
            width = vacuum_width(w)
            g = SpatialGrid(2048, default_half_width([hp.x0, hm.x0], [width]))
            state = SpinorState.factorized(cp, cm, initial_packet(g, 0.0, width))
            traj = evolve_spinor(model, g, state, hp.period / 20000, 20000,
                                 pair if clamp else (None, None), sample_every=500)
            for s in traj:
                D = decoherence_numeric([s.phi_plus], [s.phi_minus]).values[0]
                rho = reduced_density(cp, cm, D)
                traced = reduced_density_from_state(s)
                worst_diag = max(worst_diag, float(np.max(np.abs(traced.diagonal - [0.36, 0.64]))))
                ident = 1 - 2 * abs(cp * cm) ** 2 * (1 - abs(D) ** 2)
                worst_purity = max(worst_purity, abs(purity(rho) - ident))
                # the grid partial trace also carries the channel norm drift (<= 1e-10)
                worst_trace = max(worst_trace, float(np.max(np.abs(traced.matrix - rho.matrix))))
        zero = reduced_density(cp, cm, 0.0).matrix
        notes.append(f"diag drift {worst_diag:.1e}, purity identity {worst_purity:.1e}, "
                     f"partial trace vs formula {worst_trace:.1e}")
        assert worst_diag <= 1e-10
        assert worst_purity <= 1e-12
        assert worst_trace <= 1e-10
        assert zero[0, 1] == 0 and zero[1, 0] == 0
        assert zero[0, 0] == abs(cp) ** 2 and zero[1, 1] == abs(cm) ** 2


def test_criterion_7_unitarity_and_limits():
    with criterion(7, "norm to 1e-10 over 20000 steps; W=0, identical, linear limits") as notes:
        model = quartic_model(0.5)
        _, psi, tp, tm = vacuum_run(model, channel_pair(model), sample_every=1000, clamp=False)
        drift = max(abs(s.norm() - 1.0) for s in tp + tm)
        notes.append(f"norm drift {drift:.1e}")
        assert drift <= 1e-10

        free = SuperpotentialModel(Polynomial([]))
        g = SpatialGrid(1024, 20.0)
        psi0 = initial_packet(g, 0.0, 0.8)
        fp = propagate(free, g, psi0, PLUS, 1e-4, 20000, sample_every=1000)
        fm = propagate(free, g, psi0.with_channel(MINUS), MINUS, 1e-4, 20000, sample_every=1000)
        free_err = float(np.max(np.abs(decoherence_numeric(fp, fm).magnitude - 1.0)))
        notes.append(f"W=0 {free_err:.1e}")
        assert free_err <= 1e-10

        hp, _ = channel_pair(model)
        ts = np.linspace(0, 3 * hp.period, 301)
        same = np.abs(gaussian_oracle(hp, hp, None, ts).values)
        same_grid = np.abs(decoherence_numeric(tp, [s.with_channel(MINUS) for s in tp]).values)
        ident_err = max(float(np.max(np.abs(same - 1))), float(np.max(np.abs(same_grid - 1))))
        notes.append(f"identical {ident_err:.1e}")
        assert ident_err <= 1e-10

        lin = linear_model(1.3)
        lp, lm = channel_pair(lin)
        _, _, ltp, ltm = vacuum_run(lin, (lp, lm), sample_every=1000, clamp=False)
        D = decoherence_numeric(ltp, ltm)
        expected = np.exp(1j * 1.3 * D.times)
        lin_err = float(np.max(np.abs(D.values - expected)))
        closed = float(np.max(np.abs(series_equal_freq(lp, lm, D.times).values - expected)))
        notes.append(f"linear phase {lin_err:.1e} (closed form {closed:.1e})")
        assert lin_err <= 1e-8
        assert closed <= 1e-12


def _parse_csv(text: str) -> tuple[list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


def test_criterion_8_quartic_reproduction():
    title = "three C values: periodic dips, depth monotone in 4 w0 x0^2, goldens"
    with criterion(8, title) as notes:
        manifest = {}
        for line in (GOLDEN / "SHA256SUMS").read_text().splitlines():
            digest, name = line.split()
            manifest[name] = digest
        results = []
        for C, tag in zip(C_VALUES, ("0p1", "0p5", "1p0")):
            sc = commands.resolve(load_config(CONFIGS / f"quartic_C{tag}.toml"))
            table, summary = commands.cmd_decoherence(sc)
            text = table_to_csv(table)
            golden_path = GOLDEN / f"quartic_C{tag}.csv"
            golden_text = golden_path.read_text()
            assert hashlib.sha256(golden_text.encode()).hexdigest() == manifest[golden_path.name]
            head, data = _parse_csv(text)
            ghead, gdata = _parse_csv(golden_text)
            assert head == ghead
            drift = float(np.max(np.abs(data - gdata)))
            assert drift <= 1e-9, f"C={C}: regenerated values drift {drift:.2e} from golden"
            identical = text == golden_text

            col = {h: data[:, i] for i, h in enumerate(head)}
            t, T = col["t"], sc.plus.period
            half = len(t) // 2
            assert t[half] == pytest.approx(T, rel=1e-12)
            for sfx, tol in (("eq34", 1e-12), ("oracle", 1e-12), ("grid", 1e-6)):
                mag = col[f"abs_D_{sfx}"]
                assert np.max(np.abs(mag[half:] - mag[: len(t) - half])) <= tol  # period T
                assert abs(mag[half] - 1) <= tol and abs(mag[-1] - 1) <= tol       # revivals
            depth = 4 * sc.plus.omega0 * sc.plus.x0**2
            min_mag = summary["methods"]["eq34"]["min_abs_D"]
            results.append((depth, min_mag, summary["methods"]["grid"]["min_abs_D"]))
            notes.append(f"C={C}: 4w0x0^2={depth:.6f} min|D|={min_mag:.4e} "
                         f"{'byte-identical' if identical else 'within tolerance'}")
        results.sort()
        for (d1, m1, g1), (d2, m2, g2) in zip(results, results[1:]):
            if math.isclose(d1, d2, rel_tol=1e-9):
                assert m1 == pytest.approx(m2, abs=1e-6) and g1 == pytest.approx(g2, abs=1e-6)
            else:
                assert m2 < m1


def test_criterion_9_literal_general_formula():
    with criterion(9, "general-frequency formula on the symmetric quartic (C=0.5): D(0)=1, "
                      "|D|<=1+1e-9; deviation reported") as notes:
        for C in C_VALUES:
            hp, hm = channel_pair(quartic_model(C))
            ts = np.linspace(0, 2 * hp.period, 2001)
            Dp = decoherence_paper(hp, hm, ts)
            ref = gaussian_oracle(hp, hm, None, ts).values
            start = abs(Dp[0] - 1.0)
            peak = float(np.max(np.abs(Dp)))
            dev = float(np.max(np.abs(np.abs(Dp) - np.abs(ref))))
            half = math.pi / hp.omega0
            notes.append(f"C={C}: max|D30|={peak:.3f}, max||D30|-|Dexact||={dev:.3f}, "
                         f"|D30(pi/w0)|={abs(decoherence_paper(hp, hm, half)):.3f} vs "
                         f"{abs(decoherence_equal_freq_pair(hp, hm, half)):.4f}")
            assert start <= 1e-12
            assert math.isfinite(dev)
            if C == 0.5:
                assert peak <= 1 + 1e-9
