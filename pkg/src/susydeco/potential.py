"""Polynomial superpotentials, partner potentials and harmonic reduction.

All quantities are exact polynomial manipulations of W(x); the only
numerical step is the root finding for equilibria.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np
from numpy.polynomial import polynomial as npoly


class PotentialError(ValueError):
    """Base class for errors raised while reducing a superpotential."""


class NoStableEquilibrium(PotentialError):
    pass


class UnstableEquilibrium(PotentialError):
    pass


class NotAnEquilibrium(PotentialError):
    pass


# imaginary parts of companion-matrix roots below this (relative) are dropped
ROOT_IMAG_TOL = 1e-9
# residual bound enforced on polished roots, scaled by (1 + |x|^deg)
EQUILIBRIUM_TOL = 1e-10


def _trim(coeffs: Iterable[float]) -> tuple[float, ...]:
    c = [float(v) + 0.0 for v in coeffs]  # folds -0.0
    while c and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial; ``coefficients[k]`` multiplies ``x**k``.

    Trailing zeros are stripped so the zero polynomial is ``()``.
    """

    coefficients: tuple[float, ...] = ()

    def __init__(self, coefficients: Iterable[float] = ()):
        c = _trim(coefficients)
        if not all(math.isfinite(v) for v in c):
            raise ValueError(f"polynomial coefficients must be finite, got {c}")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return not self.coefficients

    def is_constant(self) -> bool:
        return self.degree <= 0

    def __call__(self, x):
        return evaluate(self, x)

    def __add__(self, other: Polynomial) -> Polynomial:
        return Polynomial(npoly.polyadd(self._arr(), other._arr()))

    def __sub__(self, other: Polynomial) -> Polynomial:
        return Polynomial(npoly.polysub(self._arr(), other._arr()))

    def __neg__(self) -> Polynomial:
        return Polynomial(-v for v in self.coefficients)

    def __mul__(self, other: Polynomial | float) -> Polynomial:
        if isinstance(other, Polynomial):
            if self.is_zero() or other.is_zero():
                return Polynomial()
            return Polynomial(npoly.polymul(self._arr(), other._arr()))
        return Polynomial(float(other) * v for v in self.coefficients)

    __rmul__ = __mul__

    def _arr(self) -> np.ndarray:
        return np.array(self.coefficients or (0.0,), dtype=float)


def derivative(p: Polynomial) -> Polynomial:
    return Polynomial(k * c for k, c in enumerate(p.coefficients) if k > 0)


def evaluate(p: Polynomial, x):
    """Horner evaluation; accepts scalars or numpy arrays."""
    if isinstance(x, np.ndarray):
        acc = np.zeros_like(x, dtype=float)
    else:
        acc = 0.0
    for c in reversed(p.coefficients):
        acc = acc * x + c
    return acc


class Channel(str, Enum):
    """Spin channel: ``plus`` is the upper block H+, ``minus`` is H-."""

    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> float:
        return 1.0 if self is Channel.PLUS else -1.0


@dataclass(frozen=True)
class SuperpotentialModel:
    W: Polynomial
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    @property
    def coupling(self) -> float:
        """The factor hbar/sqrt(2m) multiplying W' in the partner potentials."""
        return self.hbar / math.sqrt(2.0 * self.mass)


def effective_potential(model: SuperpotentialModel, ch: Channel) -> Polynomial:
    """V(x) = W^2 +/- hbar/sqrt(2m) W' for the given channel."""
    W = model.W
    return W * W + (ch.sign * model.coupling) * derivative(W)


def force(model: SuperpotentialModel, ch: Channel) -> Polynomial:
    """F(x) = -V'(x) = -2 W W' -/+ hbar/sqrt(2m) W''."""
    return -derivative(effective_potential(model, ch))


def _polish(dp: Polynomial, ddp: Polynomial, x: float, max_iter: int = 50) -> float:
    for _ in range(max_iter):
        slope = evaluate(ddp, x)
        if slope == 0.0:
            break
        step = evaluate(dp, x) / slope
        x_new = x - step
        if not math.isfinite(x_new):
            break
        if abs(x_new - x) <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            x = x_new
            break
        x = x_new
    return x


def real_roots(p: Polynomial) -> list[float]:
    """Real roots via companion-matrix eigenvalues, Newton-polished, ascending."""
    if p.degree < 1:
        return []
    dp = derivative(p)
    roots = []
    for r in npoly.polyroots(np.array(p.coefficients)):
        if abs(r.imag) > ROOT_IMAG_TOL * (1.0 + abs(r)):
            continue
        roots.append(_polish(p, dp, float(r.real)))
    return sorted(roots)


def _gradient_tolerance(dV: Polynomial, x: float) -> float:
    return EQUILIBRIUM_TOL * (1.0 + abs(x) ** max(dV.degree, 0))


def find_equilibria(model: SuperpotentialModel, ch: Channel) -> list[float]:
    """Stable minima of the channel potential, sorted ascending."""
    V = effective_potential(model, ch)
    dV = derivative(V)
    ddV = derivative(dV)
    minima: list[float] = []
    for x in real_roots(dV):
        if evaluate(ddV, x) <= 0.0:
            continue
        if minima and abs(x - minima[-1]) <= 1e-9 * (1.0 + abs(x)):
            continue
        minima.append(x)
    if not minima:
        raise NoStableEquilibrium(
            f"channel {ch.value}: potential {V.coefficients} has no stable minimum"
        )
    return minima


def select_equilibrium(model: SuperpotentialModel, ch: Channel) -> float:
    """Global minimum of V; ties go to smaller |x0|, then to negative x0."""
    V = effective_potential(model, ch)
    cands = find_equilibria(model, ch)
    return min(cands, key=lambda x: (round_rel(evaluate(V, x)), abs(x), x))


def round_rel(v: float, digits: int = 12) -> float:
    # lets numerically tied potential minima compare equal
    if v == 0.0:
        return 0.0
    return float(f"{v:.{digits}e}")


@dataclass(frozen=True)
class HarmonicChannel:
    """Quadratic model V0 + m w0^2 (x - x0)^2 / 2 of one channel.

    ``f`` is the linear forcing coefficient in the ladder-operator form
    and ``E0`` the constant offset, both fixed by (x0, omega0, V0, m, hbar).
    Use :meth:`from_equilibrium` to build one; the constructor only checks.
    """

    channel: Channel
    x0: float
    omega0: float
    V0: float
    f: float
    E0: float
    g: float
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise UnstableEquilibrium(
                f"omega0 must be positive, got {self.omega0} (channel {self.channel})"
            )
        f_exp = _forcing(self.x0, self.omega0, self.mass, self.hbar)
        E0_exp = self.V0 + 0.5 * self.mass * self.omega0**2 * self.x0**2
        scale = 1.0 + abs(f_exp)
        if abs(self.f - f_exp) > 1e-12 * scale:
            raise ValueError(f"f={self.f} inconsistent with x0, omega0 (expected {f_exp})")
        if abs(self.E0 - E0_exp) > 1e-12 * (1.0 + abs(E0_exp)):
            raise ValueError(f"E0={self.E0} inconsistent (expected {E0_exp})")
        if abs(self.g - self.f / self.hbar) > 1e-12 * (1.0 + abs(self.g)):
            raise ValueError("g must equal f/hbar")

    @classmethod
    def from_equilibrium(cls, channel: Channel, x0: float, omega0: float, V0: float,
                         mass: float = 1.0, hbar: float = 1.0) -> HarmonicChannel:
        if not omega0 > 0:
            raise UnstableEquilibrium(f"omega0 must be positive, got {omega0}")
        f = _forcing(x0, omega0, mass, hbar)
        return cls(channel=channel, x0=x0, omega0=omega0, V0=V0, f=f,
                   E0=V0 + 0.5 * mass * omega0**2 * x0**2, g=f / hbar,
                   mass=mass, hbar=hbar)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega0

    @property
    def vacuum_width(self) -> float:
        """Position standard deviation of the oscillator ground state."""
        return math.sqrt(self.hbar / (2.0 * self.mass * self.omega0))

    def potential(self, x):
        return self.V0 + 0.5 * self.mass * self.omega0**2 * (x - self.x0) ** 2


def _forcing(x0: float, omega0: float, mass: float, hbar: float) -> float:
    return -mass * omega0**2 * x0 * math.sqrt(hbar / (2.0 * mass * omega0))


def _check_equilibrium(V: Polynomial, x0: float) -> None:
    dV = derivative(V)
    resid = evaluate(dV, x0)
    if abs(resid) > _gradient_tolerance(dV, x0):
        raise NotAnEquilibrium(f"V'({x0}) = {resid:.3e} is not zero")


def harmonic_params(model: SuperpotentialModel, ch: Channel, x0: float) -> HarmonicChannel:
    V = effective_potential(model, ch)
    _check_equilibrium(V, x0)
    curvature = evaluate(derivative(derivative(V)), x0)
    if curvature <= 0.0:
        raise UnstableEquilibrium(
            f"V''({x0}) = {curvature} <= 0 in channel {ch.value}"
        )
    return HarmonicChannel.from_equilibrium(
        ch, x0, math.sqrt(curvature / model.mass), evaluate(V, x0),
        mass=model.mass, hbar=model.hbar,
    )


def eq21_frequency(model: SuperpotentialModel, ch: Channel, x0: float) -> float:
    """m*omega0^2 from the closed expression in W', W^2 W' and W'''.

    Agrees with V''(x0) only where V'(x0) = 0 (used to eliminate W'').
    """
    V = effective_potential(model, ch)
    _check_equilibrium(V, x0)
    W = model.W
    d1 = derivative(W)
    d3 = derivative(derivative(d1))
    w, w1, w3 = evaluate(W, x0), evaluate(d1, x0), evaluate(d3, x0)
    s = ch.sign
    root2m = math.sqrt(2.0 * model.mass)
    return (2.0 * w1**2
            - s * 4.0 * (root2m / model.hbar) * w**2 * w1
            + s * (model.hbar / root2m) * w3)


def channel_pair(model: SuperpotentialModel) -> tuple[HarmonicChannel, HarmonicChannel]:
    """Harmonic reduction of both channels about their selected minima."""
    out = []
    for ch in (Channel.PLUS, Channel.MINUS):
        out.append(harmonic_params(model, ch, select_equilibrium(model, ch)))
    return out[0], out[1]


def quartic_model(C: float, mass: float = 1.0, hbar: float = 1.0) -> SuperpotentialModel:
    """W = C x^2 / sqrt(2), the standard symmetric double-channel example."""
    return SuperpotentialModel(Polynomial([0.0, 0.0, C / math.sqrt(2.0)]), mass, hbar)


def linear_model(omega: float, mass: float = 1.0, hbar: float = 1.0) -> SuperpotentialModel:
    """W = sqrt(m/2) omega x: partner potentials are oscillators split by hbar*omega."""
    return SuperpotentialModel(Polynomial([0.0, math.sqrt(mass / 2.0) * omega]), mass, hbar)

