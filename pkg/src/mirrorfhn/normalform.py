"""Local coordinates centred on the transcritical point (-1, delta0).

With ``v = V + 1``, ``w = n - delta0`` and ``u = v - w / k`` the fast equation
becomes ``v' = v**2 (3 - v) / 3 - (k (v - u) + delta0)**2 + I_app - I*`` with no
remainder. Restricting to ``u = 0`` gives the truncated center dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import I_STAR, ModelParams, PhaseState, delta0, k_slope

VANISH_TOL = 1e-9


@dataclass(frozen=True)
class NormalCoords:
    v: float
    u: float
    w_tilde: float


@dataclass(frozen=True)
class DegeneracyReport:
    residuals: tuple[float, float, float]
    coeff_quadratic: float
    coeff_cross: float
    pitchfork_extra: float

    @property
    def transcritical(self) -> bool:
        return all(abs(r) < VANISH_TOL for r in self.residuals)

    @property
    def pitchfork(self) -> bool:
        return self.transcritical and abs(self.coeff_quadratic) < VANISH_TOL

    def as_dict(self) -> dict:
        return {
            "residuals": list(self.residuals),
            "coeff_quadratic": self.coeff_quadratic,
            "coeff_cross": self.coeff_cross,
            "pitchfork_extra": self.pitchfork_extra,
            "transcritical": self.transcritical,
            "pitchfork": self.pitchfork,
        }


def to_normal(p: ModelParams, s: PhaseState) -> NormalCoords:
    k = k_slope(p.v0)
    v = s.v + 1.0
    w = s.n - delta0(p)
    return NormalCoords(v=v, u=v - w / k, w_tilde=w)


def from_normal(p: ModelParams, c: NormalCoords) -> PhaseState:
    # w_tilde is redundant given (v, u); it is kept only for reporting
    k = k_slope(p.v0)
    return PhaseState(c.v - 1.0, k * (c.v - c.u) + delta0(p))


def v_dot_normal(p: ModelParams, c: NormalCoords) -> float:
    k = k_slope(p.v0)
    d0 = delta0(p)
    return c.v * c.v * (3.0 - c.v) / 3.0 - (k * (c.v - c.u) + d0) ** 2 + p.i_app - I_STAR


def center_dynamics(p: ModelParams, v):
    """Fast dynamics restricted to the center space u = 0 (scalar or array)."""
    k = k_slope(p.v0)
    d0 = delta0(p)
    v = np.asarray(v, dtype=float)
    out = (1.0 - k * k) * v * v - v**3 / 3.0 - 2.0 * k * v * d0 - d0 * d0 + p.i_app - I_STAR
    return float(out) if out.ndim == 0 else out


def center_roots(p: ModelParams) -> np.ndarray:
    """Real roots of the center dynamics, sorted."""
    k = k_slope(p.v0)
    d0 = delta0(p)
    coeffs = [-1.0 / 3.0, 1.0 - k * k, -2.0 * k * d0, -d0 * d0 + p.i_app - I_STAR]
    r = np.roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(r))))
    return np.sort(r[np.abs(r.imag) < 1e-9 * scale].real)


def degeneracy_report(p: ModelParams) -> DegeneracyReport:
    """Transcritical defining conditions at v = 0 and the second-order coefficients."""
    k = k_slope(p.v0)
    d0 = delta0(p)
    r1 = -d0 * d0 + p.i_app - I_STAR
    r2 = -2.0 * k * d0
    r3 = -2.0 * d0
    return DegeneracyReport(
        residuals=(r1, r2, r3),
        coeff_quadratic=2.0 * (1.0 - k * k),
        # magnitude of the mixed v-delta0 derivative, which is -2k
        coeff_cross=2.0 * k,
        pitchfork_extra=1.0 - k * k,
    )
