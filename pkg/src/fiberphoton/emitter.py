"""Closed-form three-level emitter model.

Population dynamics of a pumped emitter (ground state pumped at rate w_p into
a radiative state that decays at rate gamma) and the second-order
autocorrelation curves derived from it: the cw dip, the pulsed-envelope
variant, the background-mixed experimental curve, and the pulse-integrated
zero-delay value.  All rates are in 1/ns and all times in ns; a
millisecond-scale radiative lifetime is simply gamma = 1e-6 /ns.

These functions accept scalar or ndarray time arguments and are pure, so they
double as fit models and as ground truth for the stochastic simulator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInput, InvalidParameter

#: Documented default radiative decay rate (1/ns): lifetime ~1 ms.
DEFAULT_GAMMA = 1e-6


@dataclass(frozen=True)
class EmitterParams:
    """Rate-equation parameters of the emitter.

    w_p     -- effective pump rate, ground -> radiative state (1/ns)
    gamma   -- spontaneous decay rate of the radiative state (1/ns)
    g2_0    -- residual autocorrelation at zero delay, in [0, 1]
    rho_e0  -- initial excited-state population, in [0, 1]
    """

    w_p: float
    gamma: float = DEFAULT_GAMMA
    g2_0: float = 0.0
    rho_e0: float = 0.0

    def __post_init__(self):
        if not (self.w_p > 0):
            raise InvalidParameter(f"pump rate w_p must be > 0, got {self.w_p}")
        if self.gamma < 0:
            raise InvalidParameter(f"decay rate gamma must be >= 0, got {self.gamma}")
        if not (0.0 <= self.g2_0 <= 1.0):
            raise InvalidParameter(f"g2_0 must lie in [0, 1], got {self.g2_0}")
        if not (0.0 <= self.rho_e0 <= 1.0):
            raise InvalidParameter(f"rho_e0 must lie in [0, 1], got {self.rho_e0}")

    @property
    def total_rate(self) -> float:
        return self.w_p + self.gamma

    @property
    def steady_state(self) -> float:
        """Steady-state excited population w_p / (w_p + gamma)."""
        return self.w_p / (self.w_p + self.gamma)


@dataclass(frozen=True)
class PulseParams:
    """Exponential pulse envelope: time constant tau_o and repetition period (ns)."""

    tau_o: float
    period: float

    def __post_init__(self):
        if not (self.tau_o > 0):
            raise InvalidParameter(f"tau_o must be > 0, got {self.tau_o}")
        if not (self.period > self.tau_o):
            raise InvalidParameter(
                f"period must exceed tau_o, got period={self.period}, tau_o={self.tau_o}"
            )


@dataclass(frozen=True)
class BackgroundMix:
    """Emitter-to-total intensity ratio rho = I_em / (I_em + I_bg)."""

    rho: float

    def __post_init__(self):
        if not (0.0 <= self.rho <= 1.0):
            raise InvalidParameter(f"rho must lie in [0, 1], got {self.rho}")

    @classmethod
    def from_intensities(cls, i_em: float, i_bg: float) -> "BackgroundMix":
        if i_em < 0 or i_bg < 0:
            raise InvalidParameter("intensities must be >= 0")
        total = i_em + i_bg
        if total == 0:
            raise DegenerateInput("both intensities are zero; rho undefined")
        return cls(i_em / total)


def excited_population(p: EmitterParams, tau):
    """Excited-state population rho_e(tau) for tau >= 0.

    rho_e(tau) = ss * (1 - exp(-(w_p+gamma) tau)) + rho_e0 * exp(-(w_p+gamma) tau)
    with ss = w_p / (w_p + gamma).
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise InvalidParameter("tau must be >= 0")
    decay = np.exp(-p.total_rate * tau)
    out = p.steady_state * (1.0 - decay) + p.rho_e0 * decay
    return out if out.ndim else float(out)


def g2_cw(p: EmitterParams, tau):
    """Continuous-wave autocorrelation, evaluated symmetrically at |tau|:

    g2(tau) = 1 - (1 - g2_0) * exp(-(w_p + gamma) |tau|)
    """
    tau = np.abs(np.asarray(tau, dtype=float))
    out = 1.0 - (1.0 - p.g2_0) * np.exp(-p.total_rate * tau)
    return out if out.ndim else float(out)


def g2_cw_reduced(g2_0: float, w_p: float, tau):
    """Reduced cw fit model 1 - (1 - g2_0) exp(-w_p |tau|).

    Valid when gamma << w_p, so 2/w_p sets the antibunching dip width; this is
    the form used to fit measured cw histograms.
    """
    tau = np.abs(np.asarray(tau, dtype=float))
    out = 1.0 - (1.0 - g2_0) * np.exp(-w_p * tau)
    return out if out.ndim else float(out)


def g2_pulsed(p: EmitterParams, pulse: PulseParams, tau):
    """Pulsed autocorrelation: exponential pulse envelope times the reduced dip.

    g2(tau) = exp(-2 tau / tau_o) * [1 - (1 - g2_0) exp(-w_p tau)],  tau >= 0.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise InvalidParameter("tau must be >= 0 for the pulsed model")
    out = np.exp(-2.0 * tau / pulse.tau_o) * (
        1.0 - (1.0 - p.g2_0) * np.exp(-p.w_p * tau)
    )
    return out if out.ndim else float(out)


def g2_background_mixed(g2, mix: BackgroundMix):
    """Mix an emitter autocorrelation with Poissonian background:

    g2_exp = 1 - rho^2 + rho^2 * g2
    """
    g2 = np.asarray(g2, dtype=float)
    if np.any(g2 < 0):
        raise InvalidParameter("g2 must be >= 0")
    out = 1.0 - mix.rho**2 + mix.rho**2 * g2
    return out if out.ndim else float(out)


class InvertedG2(NamedTuple):
    """Result of removing background from a measured g2 value.

    `negative` is set when noise pushed the corrected value below zero; the
    value is returned unclamped.
    """

    value: float
    negative: bool


def invert_background(g2_exp: float, mix: BackgroundMix) -> InvertedG2:
    """Invert the background mixing: g2 = (g2_exp - 1 + rho^2) / rho^2.

    Exact algebraic inverse of g2_background_mixed.  Raises DegenerateInput at
    rho = 0 where the emitter contributes nothing and the inverse is undefined.
    """
    if mix.rho == 0:
        raise DegenerateInput("rho = 0: background inversion undefined")
    value = (g2_exp - 1.0 + mix.rho**2) / mix.rho**2
    return InvertedG2(value=value, negative=value < 0)


def g2_integrated_zero(p: EmitterParams, pulse: PulseParams) -> float:
    """Pulse-integrated zero-delay autocorrelation:

    g2_int(0) = 1 - (1 + w_p tau_o / 2)^-1 * (1 - g2_0)
    """
    return 1.0 - (1.0 - p.g2_0) / (1.0 + p.w_p * pulse.tau_o / 2.0)


def pump_rate_from_integrated(g2_int: float, g2_0: float, tau_o: float) -> float:
    """Recover the dip width 2/w_p from the integrated zero-delay value:

    2/w_p = tau_o * (1 - g2_int) / (g2_int - g2_0)

    Exact algebraic inverse of g2_integrated_zero.
    """
    if tau_o <= 0:
        raise InvalidParameter(f"tau_o must be > 0, got {tau_o}")
    if g2_int <= g2_0:
        raise DegenerateInput(
            f"g2_int ({g2_int}) must exceed g2_0 ({g2_0}) to invert"
        )
    return tau_o * (1.0 - g2_int) / (g2_int - g2_0)
