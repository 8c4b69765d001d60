"""Mirrored FitzHugh-Nagumo vector field, nullclines and organizing-center constants.

The model is::

    V' = V - V**3/3 - n**2 + I_app
    n' = eps * (n_inf(V - V0) + n0 - n)

with ``n_inf(x) = 2 / (1 + exp(-5 x))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

I_STAR = 2.0 / 3.0
TC_POINT = (-1.0, 0.0)

# phase-plane working window used by every scan
V_WINDOW = (-4.0, 3.0)

Interaction = Literal["competitive", "cooperative", "degenerate"]


@dataclass(frozen=True)
class ModelParams:
    epsilon: float
    i_app: float
    v0: float
    n0: float

    def __post_init__(self):
        for name in ("epsilon", "i_app", "v0", "n0"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")

    def with_current(self, i_app: float) -> "ModelParams":
        return replace(self, i_app=float(i_app))

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return replace(self, epsilon=float(epsilon))

    @property
    def delta0(self) -> float:
        return delta0(self)

    @property
    def k(self) -> float:
        return k_slope(self.v0)

    @property
    def strip(self) -> tuple[float, float]:
        """The attractive invariant strip n0 < n < n0 + 2."""
        return (self.n0, self.n0 + 2.0)

    def as_dict(self) -> dict:
        return {"epsilon": self.epsilon, "i_app": self.i_app, "v0": self.v0, "n0": self.n0}


@dataclass(frozen=True)
class PhaseState:
    v: float
    n: float

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.n)):
            raise ValueError(f"non-finite phase state ({self.v!r}, {self.n!r})")

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.n])

    @classmethod
    def from_array(cls, y) -> "PhaseState":
        return cls(float(y[0]), float(y[1]))


@dataclass(frozen=True)
class OrganizingCenter:
    i_star: float
    tc_point: PhaseState
    v0_star: float
    pitchfork_n0: float


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def n_inf(v):
    """Boltzmann activation 2 / (1 + exp(-5 v)); works on scalars and arrays."""
    return _out(2.0 * expit(5.0 * np.asarray(v, dtype=float)))


def dn_inf(v):
    """Analytic derivative of :func:`n_inf`, i.e. 10 e^{-5v} / (1 + e^{-5v})^2."""
    x = 5.0 * np.asarray(v, dtype=float)
    return _out(10.0 * expit(x) * expit(-x))


def d2n_inf(v):
    x = 5.0 * np.asarray(v, dtype=float)
    s = expit(x)
    return _out(50.0 * s * (1.0 - s) * (1.0 - 2.0 * s))


def vector_field(p: ModelParams, s: PhaseState) -> tuple[float, float]:
    v, n = s.v, s.n
    dv = v - v**3 / 3.0 - n * n + p.i_app
    dn = p.epsilon * (float(n_inf(v - p.v0)) + p.n0 - n)
    return dv, dn


def rhs(p: ModelParams, y: np.ndarray) -> np.ndarray:
    """Vectorised right-hand side; ``y`` has shape (2, ...)."""
    v, n = y[0], y[1]
    return np.array([v - v**3 / 3.0 - n * n + p.i_app, p.epsilon * (n_inf(v - p.v0) + p.n0 - n)])


def jacobian(p: ModelParams, s: PhaseState) -> np.ndarray:
    v, n = s.v, s.n
    return np.array(
        [
            [1.0 - v * v, -2.0 * n],
            [p.epsilon * float(dn_inf(v - p.v0)), -p.epsilon],
        ]
    )


def v_nullcline(v: float, i_app: float) -> tuple[float, ...]:
    """n-values of the V-nullcline n**2 = V - V**3/3 + I_app above the abscissa ``v``."""
    a = v - v**3 / 3.0 + i_app
    # -1 + 1/3 + 2/3 is -1e-16 in floating point; treat rounding-level values as the pinch
    if abs(a) <= 8 * np.finfo(float).eps * (1.0 + abs(v) ** 3 + abs(i_app)):
        return (0.0,)
    if a > 0:
        r = math.sqrt(a)
        return (-r, r)
    return ()


def n_nullcline(v, p: ModelParams):
    return n_inf(np.asarray(v, dtype=float) - p.v0) + p.n0


def interaction_sign(p: ModelParams, s: PhaseState) -> Interaction:
    # (dV'/dn) (dn'/dV) = (-2n) (eps n_inf') and eps n_inf' > 0, so sign(n) decides
    if s.n > 0:
        return "competitive"
    if s.n < 0:
        return "cooperative"
    return "degenerate"


def n0_star(v0: float) -> float:
    """Offset placing the n-nullcline through the transcritical point (-1, 0)."""
    return -float(n_inf(-1.0 - v0))


def k_slope(v0: float) -> float:
    """Slope of n_inf(V - V0) at V = -1."""
    return float(dn_inf(-1.0 - v0))


def v0_star() -> float:
    """Half-activation voltage with k_slope(v0) = 1 on the branch v0 > -1."""
    # k is decreasing on v0 > -1 from its maximum 2.5
    return brentq(lambda v0: k_slope(v0) - 1.0, -1.0, 2.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def v0_star_mirror() -> float:
    """The second root of k_slope = 1, below -1 (no dynamical meaning)."""
    return brentq(lambda v0: k_slope(v0) - 1.0, -4.0, -1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def delta0(p: ModelParams) -> float:
    return p.n0 + float(n_inf(-1.0 - p.v0))


def organizing_center() -> OrganizingCenter:
    vs = v0_star()
    return OrganizingCenter(
        i_star=I_STAR,
        tc_point=PhaseState(*TC_POINT),
        v0_star=vs,
        pitchfork_n0=n0_star(vs),
    )
