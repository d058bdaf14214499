"""Closed-form dynamics of the two harmonically reduced channels.

Each channel is a forced oscillator ``hbar w b^dag b + f (b^dag + b) + E0``.
Its interaction-picture propagator factorizes as
``exp(i p) exp(alpha b^dag) exp(beta b) = exp(iQ) D[A]`` with the
displacement convention ``D[A] = exp(A^* b - A b^dag)``, so the coherent
label of the evolved vacuum is ``alpha = -A``.

Three independent routes to the decoherence factor live here: the
equal-frequency closed form, the general-frequency formula with overlap
coefficients V, W, X, Y (evaluated literally, see ``decoherence_paper``), and an
exact Gaussian-wavepacket solution used as an oracle.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .potential import HarmonicChannel

# bound on |D| tolerated by DecoherenceSeries (Cauchy-Schwarz up to rounding)
ABS_BOUND_TOL = 1e-9


class Method(str, Enum):
    EQUAL_FREQ_EQ34 = "equal_freq_eq34"
    PAPER_EQ30 = "paper_eq30"
    GAUSSIAN_ORACLE = "gaussian_oracle"
    GRID = "grid"

    @property
    def suffix(self) -> str:
        return {
            Method.EQUAL_FREQ_EQ34: "eq34",
            Method.PAPER_EQ30: "eq30",
            Method.GAUSSIAN_ORACLE: "oracle",
            Method.GRID: "grid",
        }[self]


@dataclass(frozen=True)
class DecoherenceSeries:
    times: np.ndarray
    values: np.ndarray
    method: Method

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        worst = float(np.max(np.abs(v))) if v.size else 0.0
        # the literal general-frequency formula may break the bound; that is reported, not fatal
        if worst > 1.0 + ABS_BOUND_TOL and Method(self.method) is not Method.PAPER_EQ30:
            raise ValueError(f"{Method(self.method).value}: |D| reaches {worst!r} > 1")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "method", Method(self.method))

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(frozen=True)
class WeiNormanState:
    """Wei-Norman coefficients at time ``t``.

    ``p`` is the complex phase coefficient (``i*p`` is the closed form),
    ``Q`` the real phase left once the displacement is normalized.
    """

    t: float
    p: complex
    alpha: complex
    beta: complex
    A: complex
    Q: float


def _phase_factor(hc: HarmonicChannel, t):
    return np.exp(1j * hc.omega0 * np.asarray(t, dtype=float))


def amplitude(hc: HarmonicChannel, t):
    """Displacement amplitude A(t) = (g/w)(e^{iwt} - 1); vectorized over t."""
    return (hc.g / hc.omega0) * (_phase_factor(hc, t) - 1.0)


def _ip(hc: HarmonicChannel, t):
    t = np.asarray(t, dtype=float)
    w, g = hc.omega0, hc.g
    return (1j * (g * g / w - hc.E0 / hc.hbar) * t
            + (g * g / w**2) * (np.exp(-1j * w * t) - 1.0))


def phase_Q(hc: HarmonicChannel, t):
    """Real phase Q with iQ = ip + |A|^2/2; vectorized over t."""
    A = amplitude(hc, t)
    iQ = _ip(hc, t) + 0.5 * np.abs(A) ** 2
    return np.imag(iQ)


def wei_norman(hc: HarmonicChannel, t: float) -> WeiNormanState:
    ip = complex(_ip(hc, t))
    A = complex(amplitude(hc, t))
    beta = (hc.g / hc.omega0) * (cmath.exp(-1j * hc.omega0 * t) - 1.0)
    return WeiNormanState(t=t, p=-1j * ip, alpha=-A, beta=beta, A=A, Q=float(phase_Q(hc, t)))


def coherent_label(hc: HarmonicChannel, t):
    """Schroedinger-picture coherent amplitude: alpha(t) rotated back by e^{-iwt}."""
    return -amplitude(hc, t) * np.exp(-1j * hc.omega0 * np.asarray(t, dtype=float))


def classical_trajectory(hc: HarmonicChannel, t: float) -> tuple[float, float]:
    """Mean position and momentum of the vacuum (centred at x = 0) after time t.

    Follows x0 (1 - cos wt): the packet swings out to 2 x0 and back.
    """
    a = complex(coherent_label(hc, t))
    m, w, hbar = hc.mass, hc.omega0, hc.hbar
    return math.sqrt(2 * hbar / (m * w)) * a.real, math.sqrt(2 * hbar * m * w) * a.imag


def coherent_wavepacket(hc: HarmonicChannel, t: float, xs) -> np.ndarray:
    """Position representation of exp(iQ) |alpha(t)> (no zero-point phase)."""
    xs = np.asarray(xs, dtype=float)
    m, w, hbar = hc.mass, hc.omega0, hc.hbar
    xbar, pbar = classical_trajectory(hc, t)
    norm = (m * w / (math.pi * hbar)) ** 0.25
    phase = float(phase_Q(hc, t)) - pbar * xbar / (2 * hbar)
    return norm * np.exp(-(m * w / (2 * hbar)) * (xs - xbar) ** 2
                         + 1j * pbar * xs / hbar + 1j * phase)


@dataclass(frozen=True)
class OverlapCoefficients:
    V: complex
    W: complex
    X: complex
    Y: complex


def overlap_coefficients(m: float, omega_plus: float, omega_minus: float) -> OverlapCoefficients:
    """Overlap coefficients V, W, X, Y, taken literally; dimensionally consistent only for m = hbar = 1."""
    if not (omega_plus > 0 and omega_minus > 0):
        raise ValueError("frequencies must be positive")
    r = math.sqrt(omega_plus / omega_minus)
    prod = math.sqrt(omega_plus * omega_minus)
    return OverlapCoefficients(
        V=0.5 * r + 0.5j * m * prod,
        W=0.5 * r - 0.5j * m * prod,
        X=-1j / (2 * m) / prod - 0.5 / r,
        Y=-1j / (2 * m) / prod + 0.5 / r,
    )


def decoherence_paper(hc_plus: HarmonicChannel, hc_minus: HarmonicChannel, t):
    """General-frequency formula evaluated literally, A^dag read as conj(A).

    This is not guaranteed to agree with the exact overlap; compare against
    ``gaussian_oracle`` before trusting it.
    """
    c = overlap_coefficients(hc_plus.mass, hc_plus.omega0, hc_minus.omega0)
    Ap = amplitude(hc_plus, t)
    Am = amplitude(hc_minus, t)
    left = Ap * c.W - np.conj(Ap) * c.Y
    expo = (-0.5 * left * (np.conj(Ap) * c.X - Ap * c.V)
            - left * Am
            - 0.5 * np.abs(Am) ** 2)
    phase = phase_Q(hc_minus, t) - phase_Q(hc_plus, t)
    out = np.exp(1j * phase + expo)
    return complex(out) if np.ndim(out) == 0 else out


def decoherence_equal_freq(omega0: float, g_plus: float, g_minus: float, delta_E0: float, t,
                           hbar: float = 1.0):
    """D(t) for two channels of common frequency, from the shared vacuum.

    Magnitude ``exp(-2 (g+ - g-)^2 sin^2(w t / 2) / w^2)``; the phase is
    ``Q- - Q+`` with ``delta_E0 = E0(minus) - E0(plus)``.
    """
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    t = np.asarray(t, dtype=float)
    w = omega0
    s2 = np.sin(0.5 * w * t) ** 2
    mag = np.exp(-2.0 * (g_plus - g_minus) ** 2 * s2 / w**2)
    phase = ((g_minus**2 - g_plus**2) / w) * (t - np.sin(w * t) / w) - delta_E0 * t / hbar
    out = mag * np.exp(1j * phase)
    return complex(out) if out.ndim == 0 else out


def decoherence_equal_freq_pair(hc_plus: HarmonicChannel, hc_minus: HarmonicChannel, t):
    if not math.isclose(hc_plus.omega0, hc_minus.omega0, rel_tol=1e-12):
        raise ValueError(
            f"channel frequencies differ ({hc_plus.omega0} vs {hc_minus.omega0})"
        )
    return decoherence_equal_freq(hc_plus.omega0, hc_plus.g, hc_minus.g,
                                  hc_minus.E0 - hc_plus.E0, t, hbar=hc_plus.hbar)


@dataclass(frozen=True)
class GaussianPacket:
    """psi(x) = N exp(-a (x - c)^2 / 2 + i k (x - c) / hbar + i phase), Re a > 0.

    ``width_param`` is ``a``; ``N = (Re a / pi)^(1/4)`` normalizes it.
    """

    center: float
    momentum: float
    width_param: complex
    phase: float = 0.0

    def __post_init__(self):
        if not complex(self.width_param).real > 0:
            raise ValueError(f"width_param must have positive real part, got {self.width_param}")

    @classmethod
    def vacuum(cls, omega: float, mass: float = 1.0, hbar: float = 1.0,
               center: float = 0.0) -> GaussianPacket:
        return cls(center=center, momentum=0.0, width_param=complex(mass * omega / hbar))

    @property
    def norm_const(self) -> float:
        return (complex(self.width_param).real / math.pi) ** 0.25

    def __call__(self, xs, hbar: float = 1.0) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        d = xs - self.center
        return self.norm_const * np.exp(-0.5 * self.width_param * d * d
                                        + 1j * self.momentum * d / hbar + 1j * self.phase)


def default_initial(hc_plus: HarmonicChannel, hc_minus: HarmonicChannel) -> GaussianPacket:
    """Vacuum of the geometric-mean frequency, centred at the origin."""
    w = math.sqrt(hc_plus.omega0 * hc_minus.omega0)
    return GaussianPacket.vacuum(w, hc_plus.mass, hc_plus.hbar)


@dataclass(frozen=True)
class _EvolvedGaussian:
    center: np.ndarray
    momentum: np.ndarray
    a: np.ndarray          # complex inverse variance
    log_prefactor: np.ndarray  # log of everything outside the exponent's x-dependence


def _evolve_gaussian(hc: HarmonicChannel, psi0: GaussianPacket, ts: np.ndarray) -> _EvolvedGaussian:
    m, w, hbar = hc.mass, hc.omega0, hc.hbar
    c, s = np.cos(w * ts), np.sin(w * ts)
    u0 = psi0.center - hc.x0
    p0 = psi0.momentum
    u = u0 * c + p0 / (m * w) * s
    p = p0 * c - m * w * u0 * s
    # psi ~ exp(i m Gamma (x - xbar)^2 / (2 hbar)); Gamma = Ydot / Y, Y'' = -w^2 Y
    gamma0 = 1j * hbar * complex(psi0.width_param) / m
    Y = c + gamma0 * s / w
    Ydot = -w * s + gamma0 * c
    a = -1j * m * (Ydot / Y) / hbar
    # Y winds like e^{iwt}; its deviation from wt stays inside (-pi, pi)
    arg_Y = w * ts + np.angle(Y * np.exp(-1j * w * ts))
    log_sqrt_Y = 0.5 * (np.log(np.abs(Y)) + 1j * arg_Y)
    action = 0.5 * (u * p - u0 * p0) - hc.V0 * ts
    log_pref = (math.log(psi0.norm_const) - log_sqrt_Y
                + 1j * (action / hbar + psi0.phase))
    return _EvolvedGaussian(center=hc.x0 + u, momentum=p, a=a, log_prefactor=log_pref)


def gaussian_overlap(left: _EvolvedGaussian, right: _EvolvedGaussian, hbar: float) -> np.ndarray:
    """<left|right> for Gaussians written as exp(logpref - a(x-c)^2/2 + i k (x-c)/hbar)."""
    a1 = np.conj(left.a)
    a2 = right.a
    x1, x2 = left.center, right.center
    k1, k2 = left.momentum, right.momentum
    A = 0.5 * (a1 + a2)
    B = a1 * x1 + a2 * x2 + 1j * (k2 - k1) / hbar
    C = -0.5 * a1 * x1**2 - 0.5 * a2 * x2**2 + 1j * (k1 * x1 - k2 * x2) / hbar
    return np.exp(np.conj(left.log_prefactor) + right.log_prefactor
                  + B * B / (4 * A) + C) * np.sqrt(np.pi / A)


def gaussian_oracle(hc_plus: HarmonicChannel, hc_minus: HarmonicChannel,
                    initial: GaussianPacket | None, ts: Sequence[float]) -> DecoherenceSeries:
    """Exact D(t) for quadratic channels: both packets stay Gaussian."""
    ts = np.asarray(ts, dtype=float)
    if initial is None:
        initial = default_initial(hc_plus, hc_minus)
    left = _evolve_gaussian(hc_plus, initial, ts)
    right = _evolve_gaussian(hc_minus, initial, ts)
    return DecoherenceSeries(ts, gaussian_overlap(left, right, hc_plus.hbar),
                             Method.GAUSSIAN_ORACLE)


def gaussian_state(hc: HarmonicChannel, initial: GaussianPacket, t: float, xs) -> np.ndarray:
    """Exact wavefunction of ``initial`` after time ``t`` in the quadratic channel."""
    ev = _evolve_gaussian(hc, initial, np.array([t], dtype=float))
    xs = np.asarray(xs, dtype=float)
    d = xs - ev.center[0]
    return np.exp(ev.log_prefactor[0] - 0.5 * ev.a[0] * d * d
                  + 1j * ev.momentum[0] * d / hc.hbar)


def series_equal_freq(hc_plus: HarmonicChannel, hc_minus: HarmonicChannel, ts) -> DecoherenceSeries:
    ts = np.asarray(ts, dtype=float)
    return DecoherenceSeries(ts, np.atleast_1d(decoherence_equal_freq_pair(hc_plus, hc_minus, ts)),
                             Method.EQUAL_FREQ_EQ34)


def series_paper(hc_plus: HarmonicChannel, hc_minus: HarmonicChannel, ts) -> DecoherenceSeries:
    ts = np.asarray(ts, dtype=float)
    return DecoherenceSeries(ts, np.atleast_1d(decoherence_paper(hc_plus, hc_minus, ts)),
                             Method.PAPER_EQ30)
