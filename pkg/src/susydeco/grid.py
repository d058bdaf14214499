"""Grid treatment of the SUSY Hamiltonian.

Two discretizations live side by side and are never mixed in one check:

* dense finite-difference matrices (3-point Laplacian, central-difference
  momentum) for the supercharge algebra and spectra;
* a periodic Fourier grid with Strang splitting for time propagation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite as nherm

from .harmonic import DecoherenceSeries, Method
from .potential import (Channel, HarmonicChannel, SuperpotentialModel, effective_potential,
                        evaluate)

SIGMA = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}

NORM_TOL = 1e-10
BOUNDARY_AMPLITUDE = 1e-8
BOUNDARY_FRACTION = 0.05
# residuals at or below this are reported as exact
RESIDUAL_FLOOR = 1e-12


class NumericalContractError(RuntimeError):
    pass


class BoxTooSmall(NumericalContractError):
    pass


class NormLoss(NumericalContractError):
    pass


class GridMismatch(NumericalContractError):
    pass


@dataclass(frozen=True)
class SpatialGrid:
    n: int
    half_width: float

    def __post_init__(self):
        if self.n < 64 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 64, got {self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def points(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def refined(self) -> SpatialGrid:
        return SpatialGrid(2 * self.n, self.half_width)

    def edge_mask(self) -> np.ndarray:
        m = max(1, int(BOUNDARY_FRACTION * self.n))
        mask = np.zeros(self.n, dtype=bool)
        mask[:m] = True
        mask[-m:] = True
        return mask


@dataclass(frozen=True)
class ChannelWavefunction:
    grid: SpatialGrid
    amplitudes: np.ndarray
    channel: Channel
    t: float = 0.0

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def edge_amplitude(self) -> float:
        return float(np.max(np.abs(self.amplitudes[self.grid.edge_mask()])))

    def box_truncated(self) -> bool:
        return self.edge_amplitude() >= BOUNDARY_AMPLITUDE

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_position(self) -> float:
        return float(np.sum(self.grid.points * self.density()) * self.grid.dx / self.norm())

    def mean_momentum(self, hbar: float = 1.0) -> float:
        phik = np.fft.fft(self.amplitudes)
        w = np.abs(phik) ** 2
        return float(hbar * np.sum(self.grid.wavenumbers * w) / np.sum(w))

    def with_channel(self, ch: Channel) -> ChannelWavefunction:
        return ChannelWavefunction(self.grid, self.amplitudes, ch, self.t)


@dataclass(frozen=True)
class SpinorState:
    c_plus: complex
    c_minus: complex
    phi_plus: ChannelWavefunction
    phi_minus: ChannelWavefunction

    def __post_init__(self):
        total = abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"|C+|^2 + |C-|^2 = {total!r}, expected 1")
        if self.phi_plus.grid != self.phi_minus.grid:
            raise GridMismatch("spinor components live on different grids")

    @classmethod
    def factorized(cls, c_plus: complex, c_minus: complex,
                   phi: ChannelWavefunction) -> SpinorState:
        return cls(c_plus, c_minus, phi.with_channel(Channel.PLUS), phi.with_channel(Channel.MINUS))


@dataclass(frozen=True)
class OperatorMatrix:
    matrix: np.ndarray
    label: str

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_error(self) -> float:
        m = self.matrix
        scale = max(float(np.max(np.abs(m))), 1e-300)
        return float(np.max(np.abs(m - m.conj().T))) / scale


@dataclass(frozen=True)
class ReducedDensity:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("reduced density must be 2x2")
        object.__setattr__(self, "matrix", m)

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


# --- finite-difference operators -------------------------------------------------

def _shift(n: int, k: int) -> np.ndarray:
    return np.roll(np.eye(n), k, axis=1)


def derivative_matrix(grid: SpatialGrid) -> np.ndarray:
    """Periodic central difference (f[j+1] - f[j-1]) / (2 dx); antisymmetric."""
    n = grid.n
    return (_shift(n, 1) - _shift(n, -1)) / (2.0 * grid.dx)


def laplacian_matrix(grid: SpatialGrid) -> np.ndarray:
    n = grid.n
    return (_shift(n, 1) - 2.0 * np.eye(n) + _shift(n, -1)) / grid.dx**2


def momentum_matrix(grid: SpatialGrid, hbar: float = 1.0) -> np.ndarray:
    return -1j * hbar * derivative_matrix(grid)


def channel_potential(model: SuperpotentialModel, grid: SpatialGrid | np.ndarray, ch: Channel,
                      clamp: HarmonicChannel | None = None) -> np.ndarray:
    xs = grid.points if isinstance(grid, SpatialGrid) else np.asarray(grid, dtype=float)
    if clamp is not None:
        return clamp.potential(xs)
    return evaluate(effective_potential(model, ch), xs)


def build_block_hamiltonian(model: SuperpotentialModel, grid: SpatialGrid, ch: Channel,
                            clamp: HarmonicChannel | None = None) -> OperatorMatrix:
    kin = -(model.hbar**2 / (2.0 * model.mass)) * laplacian_matrix(grid)
    H = kin.astype(complex) + np.diag(channel_potential(model, grid, ch, clamp))
    return OperatorMatrix(H, "Hplus" if ch is Channel.PLUS else "Hminus")


def build_hamiltonian(model: SuperpotentialModel, grid: SpatialGrid) -> OperatorMatrix:
    """Full 2n x 2n Hamiltonian, spin-major: the first n rows are the + block."""
    n = grid.n
    H = np.zeros((2 * n, 2 * n), dtype=complex)
    H[:n, :n] = build_block_hamiltonian(model, grid, Channel.PLUS).matrix
    H[n:, n:] = build_block_hamiltonian(model, grid, Channel.MINUS).matrix
    return OperatorMatrix(H, "H")


def build_supercharge(model: SuperpotentialModel, grid: SpatialGrid, which: int) -> OperatorMatrix:
    """Q1 = (P' s1 + W s2)/sqrt2 and Q2 = (P' s2 - W s1)/sqrt2 with P' = P/sqrt(2m).

    The minus sign in Q2 is what makes 2 Q2^2 = 2 Q1^2 and {Q1, Q2} = 0.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    P = momentum_matrix(grid, model.hbar) / math.sqrt(2.0 * model.mass)
    Wd = np.diag(evaluate(model.W, grid.points)).astype(complex)
    if which == 1:
        Q = np.kron(SIGMA[1], P) + np.kron(SIGMA[2], Wd)
    else:
        Q = np.kron(SIGMA[2], P) - np.kron(SIGMA[1], Wd)
    return OperatorMatrix(Q / math.sqrt(2.0), f"Q{which}")


def spectrum(matrix: OperatorMatrix | np.ndarray, k: int) -> np.ndarray:
    m = matrix.matrix if isinstance(matrix, OperatorMatrix) else matrix
    if not 1 <= k <= m.shape[0]:
        raise ValueError(f"k must lie in [1, {m.shape[0]}]")
    return np.linalg.eigvalsh(m)[:k]


# --- supercharge algebra --------------------------------------------------------

RESIDUAL_NAMES = ("2Q1^2-H", "2Q2^2-H", "[H,Q1]", "{Q1,Q2}")


def probe_functions(grid: SpatialGrid, count: int = 6) -> np.ndarray:
    """Orthonormal Hermite functions of scale L/10 in both spin slots, shape (2n, 2*count).

    They vanish at the box edge to ~e^-50, so residuals measure the stencil
    error on smooth states rather than grid-scale or wrap-around artefacts.
    """
    s = grid.half_width / 10.0
    y = grid.points / s
    cols = []
    for k in range(count):
        c = np.zeros(k + 1)
        c[k] = 1.0
        h = nherm.hermval(y, c) * np.exp(-0.5 * y * y)
        cols.append(h / math.sqrt(np.sum(h * h) * grid.dx))
    phi = np.array(cols).T
    n = grid.n
    out = np.zeros((2 * n, 2 * count), dtype=complex)
    out[:n, :count] = phi
    out[n:, count:] = phi
    return out


def algebra_residuals(model: SuperpotentialModel, grid: SpatialGrid) -> dict[str, float]:
    """Relative Frobenius residuals of the SUSY algebra on smooth probe states."""
    H = build_hamiltonian(model, grid).matrix
    Q1 = build_supercharge(model, grid, 1).matrix
    Q2 = build_supercharge(model, grid, 2).matrix
    X = probe_functions(grid)
    HX, Q1X, Q2X = H @ X, Q1 @ X, Q2 @ X

    def rel(num: np.ndarray, den: np.ndarray) -> float:
        d = np.linalg.norm(den)
        return float(np.linalg.norm(num) / d) if d > 0 else float(np.linalg.norm(num))

    HQ1X = H @ Q1X
    Q1Q2X = Q1 @ Q2X
    return {
        "2Q1^2-H": rel(2 * (Q1 @ Q1X) - HX, HX),
        "2Q2^2-H": rel(2 * (Q2 @ Q2X) - HX, HX),
        "[H,Q1]": rel(HQ1X - Q1 @ HX, HQ1X),
        "{Q1,Q2}": rel(Q1Q2X + Q2 @ Q1X, Q1Q2X),
    }


def convergence_order(coarse: float, fine: float) -> float | None:
    """log2 of the residual ratio under dx -> dx/2; None when both are at the floor."""
    if coarse <= RESIDUAL_FLOOR and fine <= RESIDUAL_FLOOR:
        return None
    if fine <= 0.0:
        return math.inf
    return math.log2(coarse / fine)


@dataclass(frozen=True)
class ResidualEntry:
    name: str
    coarse: float
    fine: float
    order: float | None

    @property
    def exact(self) -> bool:
        return self.order is None

    @property
    def ratio(self) -> float | None:
        if self.exact:
            return None
        return self.coarse / self.fine if self.fine > 0 else math.inf


@dataclass(frozen=True)
class SusyReport:
    n_coarse: int
    n_fine: int
    half_width: float
    entries: tuple[ResidualEntry, ...] = field(default_factory=tuple)

    def entry(self, name: str) -> ResidualEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def susy_algebra_report(model: SuperpotentialModel, grid: SpatialGrid) -> SusyReport:
    fine = grid.refined()
    r1 = algebra_residuals(model, grid)
    r2 = algebra_residuals(model, fine)
    entries = tuple(ResidualEntry(k, r1[k], r2[k], convergence_order(r1[k], r2[k]))
                    for k in RESIDUAL_NAMES)
    return SusyReport(grid.n, fine.n, grid.half_width, entries)


# --- wavepackets and propagation -------------------------------------------------

def initial_packet(grid: SpatialGrid, center: float, width: float, momentum: float = 0.0,
                   hbar: float = 1.0, channel: Channel = Channel.PLUS) -> ChannelWavefunction:
    """Normalized Gaussian with position standard deviation ``width``."""
    if not width > 2.0 * grid.dx:
        raise ValueError(f"width {width} must exceed 2*dx = {2 * grid.dx}")
    x = grid.points
    psi = np.exp(-((x - center) ** 2) / (4.0 * width**2) + 1j * momentum * x / hbar)
    psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    wf = ChannelWavefunction(grid, psi, channel, 0.0)
    if wf.box_truncated():
        raise BoxTooSmall(
            f"packet amplitude {wf.edge_amplitude():.2e} near the box edge "
            f"(centre {center}, width {width}, L {grid.half_width})"
        )
    return wf


def propagate(model: SuperpotentialModel, grid: SpatialGrid, psi0: ChannelWavefunction,
              ch: Channel, dt: float, steps: int, clamp: HarmonicChannel | None = None,
              sample_every: int = 1) -> list[ChannelWavefunction]:
    """Strang-split evolution under H_ch; snapshots at t=0, every ``sample_every``
    steps, and at the final step."""
    if steps < 1 or sample_every < 1:
        raise ValueError("steps and sample_every must be >= 1")
    if psi0.grid != grid:
        raise GridMismatch("initial wavefunction lives on a different grid")
    hbar, m = model.hbar, model.mass
    V = channel_potential(model, grid, ch, clamp)
    occupied = np.abs(psi0.amplitudes) ** 2 > 1e-10 * np.max(np.abs(psi0.amplitudes) ** 2)
    vmax = float(np.max(np.abs(V[occupied]))) if occupied.any() else 0.0
    if dt * vmax > 0.1 * hbar:
        warnings.warn(f"dt*max|V| = {dt * vmax:.3g} exceeds 0.1*hbar; phase errors likely",
                      RuntimeWarning, stacklevel=2)
    half_v = np.exp(-0.5j * dt * V / hbar)
    kin = np.exp(-0.5j * dt * hbar * grid.wavenumbers**2 / m)

    psi = np.array(psi0.amplitudes, dtype=complex)
    t0 = psi0.t
    n0 = psi0.norm()
    snaps = [ChannelWavefunction(grid, psi.copy(), ch, t0)]
    for step in range(1, steps + 1):
        psi = half_v * np.fft.ifft(kin * np.fft.fft(half_v * psi))
        if step % sample_every == 0 or step == steps:
            snap = ChannelWavefunction(grid, psi.copy(), ch, t0 + step * dt)
            if snap.box_truncated():
                raise BoxTooSmall(
                    f"channel {ch.value}: amplitude {snap.edge_amplitude():.2e} at the box "
                    f"edge by t = {snap.t:.6g}"
                )
            snaps.append(snap)
    drift = abs(snaps[-1].norm() - n0)
    if not drift <= NORM_TOL:  # also catches NaN from overflowing potentials
        raise NormLoss(f"channel {ch.value}: norm drifted by {drift:.2e}")
    return snaps


def decoherence_numeric(traj_plus: Sequence[ChannelWavefunction],
                        traj_minus: Sequence[ChannelWavefunction]) -> DecoherenceSeries:
    if len(traj_plus) != len(traj_minus):
        raise GridMismatch("trajectories have different lengths")
    times, values = [], []
    for a, b in zip(traj_plus, traj_minus):
        if a.grid != b.grid:
            raise GridMismatch("snapshots live on different grids")
        if abs(a.t - b.t) > 1e-12 * max(1.0, abs(a.t)):
            raise GridMismatch(f"snapshot times differ: {a.t} vs {b.t}")
        times.append(a.t)
        values.append(np.vdot(a.amplitudes, b.amplitudes) * a.grid.dx)
    return DecoherenceSeries(np.array(times), np.array(values), Method.GRID)


# --- reduced spin state -------------------------------------------------------------

def reduced_density(c_plus: complex, c_minus: complex, D: complex) -> ReducedDensity:
    """Spin state after tracing out x, with D = <phi+|phi->.

    The +- coherence is C+ C-^* <phi-|phi+> = C+ C-^* conj(D).
    """
    if abs(abs(c_plus) ** 2 + abs(c_minus) ** 2 - 1.0) > 1e-12:
        raise ValueError("spin amplitudes must be normalized")
    off = c_plus * np.conj(c_minus) * np.conj(D)
    return ReducedDensity(np.array([[abs(c_plus) ** 2, off],
                                    [np.conj(off), abs(c_minus) ** 2]], dtype=complex))


def reduced_density_from_state(state: SpinorState) -> ReducedDensity:
    """Partial trace over x of the full spinor wavefunction on the grid."""
    dx = state.phi_plus.grid.dx
    comps = (state.c_plus * state.phi_plus.amplitudes, state.c_minus * state.phi_minus.amplitudes)
    rho = np.array([[np.vdot(comps[b], comps[a]) * dx for b in range(2)] for a in range(2)])
    return ReducedDensity(rho)


def purity(rho: ReducedDensity) -> float:
    m = rho.matrix
    return float(np.real(np.trace(m @ m)))


def evolve_spinor(model: SuperpotentialModel, grid: SpatialGrid, state: SpinorState, dt: float,
                  steps: int, clamps: tuple[HarmonicChannel | None, HarmonicChannel | None] = (None, None),
                  sample_every: int = 1) -> list[SpinorState]:
    """Propagate both spin components; the channels never mix."""
    tp = propagate(model, grid, state.phi_plus, Channel.PLUS, dt, steps, clamps[0], sample_every)
    tm = propagate(model, grid, state.phi_minus, Channel.MINUS, dt, steps, clamps[1], sample_every)
    return [SpinorState(state.c_plus, state.c_minus, a, b) for a, b in zip(tp, tm)]


def default_half_width(x0s: Sequence[float], widths: Sequence[float]) -> float:
    """Box half-width 4 (max|x0| + 3 max width)."""
    return 4.0 * (max(abs(x) for x in x0s) + 3.0 * max(widths))


def vacuum_width(omega: float, mass: float = 1.0, hbar: float = 1.0) -> float:
    return math.sqrt(hbar / (2.0 * mass * omega))
