"""Ideal noiseless amplifiers built from photon addition and subtraction.

Two families are covered:

* ``add-subtract``: ``G_m = a^m a^dag^m = prod_{j=1..m} (n + j)``, any order m >= 1;
* ``multiplexed``: ``G_2' = n^2 + n + 1``, the operation realized by splitting
  the signal on a balanced beam splitter, applying ``2n + 1`` to both arms and
  projecting the auxiliary output onto vacuum.

Every figure of merit has a numeric path through the truncated Fock space and,
for m in {1, 2} and the multiplexed variant, a closed-form polynomial path in
``x = |alpha|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from .fock import (
    CutoffError,
    FockVector,
    ModeOperator,
    beam_splitter,
    coherent_state,
    default_cutoff,
    diagonal_operator,
    displacement_operator,
    ladder_operators,
    quadrature_covariance,
    tensor,
)

ADD_SUBTRACT = "add-subtract"
MULTIPLEXED = "multiplexed"
VARIANTS = (ADD_SUBTRACT, MULTIPLEXED)


@dataclass(frozen=True)
class AmplifierSpec:
    order: int = 1
    alpha: complex = 0.0
    variant: str = ADD_SUBTRACT

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == MULTIPLEXED:
            object.__setattr__(self, "order", 2)
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be an integer >= 1, got {self.order}")
        alpha = complex(self.alpha)
        if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
            raise ValueError("alpha must be finite")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "alpha", alpha)

    @property
    def key(self) -> str:
        return MULTIPLEXED if self.variant == MULTIPLEXED else f"G{self.order}"

    @property
    def has_closed_form(self) -> bool:
        return self.key in _CLOSED

    def with_alpha(self, alpha: complex) -> "AmplifierSpec":
        return AmplifierSpec(self.order, alpha, self.variant)


@dataclass(frozen=True)
class AmplifierReport:
    gain: float
    gain_is_limit: bool
    V_x: float
    V_p: float
    V_det: float
    coherent_fidelity: float
    normalization: float
    displaced_probabilities: np.ndarray


# --------------------------------------------------------------------------
# Closed forms (coefficients in ascending powers of x = |alpha|^2)
# --------------------------------------------------------------------------

_CLOSED: Dict[str, Dict[str, Tuple[float, ...]]] = {
    "G1": {
        "norm": (1, 3, 1),
        "gain_num": (1, 1),
        "vx_num": (0, 1, 1, 1),
        "vp_num": (0, 1),
        "disp": ((1, 2, 1), (0, 1)),
    },
    "G2": {
        "norm": (4, 32, 38, 12, 1),
        # 2 (2 + 6x + x^2)(x + 2)
        "gain_num": (8, 28, 16, 2),
        "vx_num": (0, 48, 144, 400, 360, 152, 28, 2),
        "vp_num": (0, 12, 12, 2),
        # (2 + 4x + x^2)^2, 4x (2 + x)^2, 2x^2
        "disp": ((4, 16, 20, 8, 1), (0, 16, 16, 4), (0, 0, 2)),
    },
    MULTIPLEXED: {
        "norm": (1, 8, 16, 8, 1),
        "gain_num": (2, 10, 10, 2),
        "vx_num": (0, 2, 16, 50, 64, 50, 16, 2),
        "vp_num": (0, 2, 8, 2),
        # (1 + x)^4, 4x (1 + x)^2, 2x^2
        "disp": ((1, 4, 6, 4, 1), (0, 4, 8, 4), (0, 0, 2)),
    },
}

_MUTUAL_NUM = (2, 16, 25, 10, 1)
_ZERO_ALPHA_GAIN = {"G1": 2.0, "G2": 3.0, MULTIPLEXED: 3.0}


def _poly(coeffs: Sequence[float], x: float) -> float:
    # polyval evaluates by Horner's scheme
    return float(P.polyval(x, np.asarray(coeffs, dtype=float)))


def _closed(spec: AmplifierSpec) -> Dict[str, Tuple[float, ...]]:
    try:
        return _CLOSED[spec.key]
    except KeyError:
        raise ValueError(f"no closed form for {spec.key}; use the numeric path") from None


def normalization_closed_form(spec: AmplifierSpec) -> float:
    return _poly(_closed(spec)["norm"], abs(spec.alpha) ** 2)


def gain_closed_form(spec: AmplifierSpec) -> float:
    c = _closed(spec)
    x = abs(spec.alpha) ** 2
    return 1.0 + _poly(c["gain_num"], x) / _poly(c["norm"], x)


def variances_closed_form(spec: AmplifierSpec) -> Tuple[float, float]:
    c = _closed(spec)
    x = abs(spec.alpha) ** 2
    den = _poly(c["norm"], x)
    return 0.5 - _poly(c["vx_num"], x) / den**2, 0.5 + _poly(c["vp_num"], x) / den


def displaced_probabilities_closed_form(spec: AmplifierSpec) -> np.ndarray:
    c = _closed(spec)
    x = abs(spec.alpha) ** 2
    den = _poly(c["norm"], x)
    return np.array([_poly(w, x) / den for w in c["disp"]])


def mutual_fidelity_closed_form(alpha: complex) -> float:
    x = abs(alpha) ** 2
    num = _poly(_MUTUAL_NUM, x) ** 2
    return num / (_poly(_CLOSED[MULTIPLEXED]["norm"], x) * _poly(_CLOSED["G2"]["norm"], x))


# --------------------------------------------------------------------------
# Numeric Fock-space path
# --------------------------------------------------------------------------


def amplifier_diagonal(spec: AmplifierSpec, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1, dtype=float)
    if spec.variant == MULTIPLEXED:
        return n * n + n + 1
    out = np.ones_like(n)
    for j in range(1, spec.order + 1):
        out = out * (n + j)
    return out


def amplifier_operator(spec: AmplifierSpec, cutoff: int) -> ModeOperator:
    return diagonal_operator(amplifier_diagonal(spec, cutoff))


def _resolve_cutoff(spec: AmplifierSpec, cutoff: Optional[int]) -> int:
    return default_cutoff(spec.alpha, spec.order) if cutoff is None else int(cutoff)


def _unnormalized(spec: AmplifierSpec, cutoff: Optional[int]) -> FockVector:
    cutoff = _resolve_cutoff(spec, cutoff)
    coh = coherent_state(spec.alpha, cutoff)
    return FockVector(amplifier_diagonal(spec, cutoff) * coh.amplitudes, coh.leakage)


def normalization(spec: AmplifierSpec, cutoff: Optional[int] = None) -> float:
    """``M = <alpha| G^2 |alpha>``, the squared norm before normalization."""
    return _unnormalized(spec, cutoff).norm ** 2


def amplified_state(spec: AmplifierSpec, cutoff: Optional[int] = None) -> FockVector:
    """Normalized ``G |alpha>`` on the truncated basis."""
    return _unnormalized(spec, cutoff).normalize()


def zero_alpha_gain(spec: AmplifierSpec) -> float:
    """Limit of the gain as alpha -> 0, i.e. ``G(1) / G(0)``."""
    g = amplifier_diagonal(spec, 1)
    return float(g[1] / g[0])


def gain(spec: AmplifierSpec, method: str = "numeric", cutoff: Optional[int] = None) -> float:
    """Amplitude gain ``<psi|a|psi> / alpha``; the analytic limit at alpha = 0."""
    if spec.alpha == 0:
        return _ZERO_ALPHA_GAIN.get(spec.key) or zero_alpha_gain(spec)
    if method == "closed_form":
        return gain_closed_form(spec)
    if method != "numeric":
        raise ValueError(f"unknown method {method!r}")
    psi = amplified_state(spec, cutoff)
    a, _ = ladder_operators(psi.cutoff)
    ratio = psi.expectation(a) / spec.alpha
    return float(ratio.real)


def quadrature_variances(
    spec: AmplifierSpec, method: str = "numeric", cutoff: Optional[int] = None
) -> Tuple[float, float]:
    """``(V_x, V_p)`` at the phase of alpha (0 for alpha = 0); vacuum gives 1/2."""
    if method == "closed_form":
        return variances_closed_form(spec)
    if method != "numeric":
        raise ValueError(f"unknown method {method!r}")
    theta = float(np.angle(spec.alpha)) if spec.alpha != 0 else 0.0
    _, cov = quadrature_covariance(amplified_state(spec, cutoff), theta)
    return float(cov[0, 0]), float(cov[1, 1])


def deterministic_bound(g: float) -> float:
    """Quadrature variance of the best deterministic amplifier with gain g."""
    if g < 1:
        raise ValueError(f"gain must be >= 1, got {g}")
    return g * g - 0.5


def displaced_photon_distribution(spec: AmplifierSpec, cutoff: Optional[int] = None) -> np.ndarray:
    """Photon-number distribution of ``D(-alpha) |psi>``."""
    psi = amplified_state(spec, cutoff)
    shifted = displacement_operator(-spec.alpha, psi.cutoff) @ psi
    return shifted.probabilities()


def coherent_fidelity(spec: AmplifierSpec, cutoff: Optional[int] = None) -> float:
    """Overlap with the coherent state of the same complex amplitude ``g alpha``."""
    psi = amplified_state(spec, cutoff)
    target = coherent_state(gain(spec, cutoff=cutoff) * spec.alpha, psi.cutoff)
    return abs(target.overlap(psi)) ** 2


def mutual_fidelity(alpha: complex, method: str = "numeric", cutoff: Optional[int] = None) -> float:
    """``|<psi_2'|psi_2>|^2`` between the add-subtract and multiplexed outputs."""
    if method == "closed_form":
        return mutual_fidelity_closed_form(alpha)
    if method != "numeric":
        raise ValueError(f"unknown method {method!r}")
    cutoff = default_cutoff(alpha, 2) if cutoff is None else cutoff
    psi2 = amplified_state(AmplifierSpec(2, alpha), cutoff)
    psi_mux = amplified_state(AmplifierSpec(2, alpha, MULTIPLEXED), cutoff)
    return abs(psi_mux.overlap(psi2)) ** 2


def g1_prime_operator(cutoff: int) -> ModeOperator:
    """``a a^dag + a^dag a``, checked against ``2n + 1`` below the cutoff."""
    a, ad = ladder_operators(cutoff)
    op = a @ ad + ad @ a
    n = np.arange(cutoff + 1)
    expected = np.diag(2.0 * n + 1)
    # the truncated a a^dag is wrong on the top level only
    if np.max(np.abs(op.matrix[:cutoff, :cutoff] - expected[:cutoff, :cutoff])) > 1e-12:
        raise AssertionError("a a^dag + a^dag a differs from 2n + 1")
    return op


def multiplexed_operator(cutoff: int, two_mode_cutoff: Optional[int] = None) -> ModeOperator:
    """Effective single-mode map of the two-arm multiplexed amplifier.

    Builds ``<0|_B U^dag (2 n_A + 1)(2 n_B + 1) U |0>_B`` on a two-mode space
    with a balanced beam splitter ``U`` and checks it equals ``n^2 + n + 1``.
    """
    big = cutoff + 2 if two_mode_cutoff is None else int(two_mode_cutoff)
    if big < cutoff + 2:
        raise CutoffError("two-mode cutoff must be at least cutoff + 2")
    u = beam_splitter(0.5, (big, big))
    n = np.arange(big + 1, dtype=float)
    arm = diagonal_operator(2 * n + 1)
    middle = tensor(arm, arm)
    full = u.dag() @ middle @ u
    effective = full.element("B", 0, 0).matrix[: cutoff + 1, : cutoff + 1]
    m = np.arange(cutoff + 1, dtype=float)
    err = np.max(np.abs(effective - np.diag(m * m + m + 1)))
    if err > 1e-9:
        raise AssertionError(f"multiplexed contraction deviates from n^2+n+1 by {err:.3g}")
    return ModeOperator(effective)


def report(spec: AmplifierSpec, cutoff: Optional[int] = None) -> AmplifierReport:
    g = gain(spec, cutoff=cutoff)
    vx, vp = quadrature_variances(spec, cutoff=cutoff)
    return AmplifierReport(
        gain=g,
        gain_is_limit=spec.alpha == 0,
        V_x=vx,
        V_p=vp,
        V_det=deterministic_bound(g),
        coherent_fidelity=coherent_fidelity(spec, cutoff),
        normalization=normalization(spec, cutoff),
        displaced_probabilities=displaced_photon_distribution(spec, cutoff),
    )


# --------------------------------------------------------------------------
# Extremal scans
# --------------------------------------------------------------------------


def _golden_extremum(func, lo: float, hi: float, maximize: bool, grid: int = 81, tol: float = 1e-6):
    sign = -1.0 if maximize else 1.0
    xs = np.linspace(lo, hi, grid)
    vals = np.array([sign * func(x) for x in xs])
    i = int(np.argmin(vals))
    if i == 0 or i == grid - 1:
        # extremum on the boundary of the search interval
        return float(xs[i]), float(sign * vals[i])
    res = minimize_scalar(
        lambda x: sign * func(x), bracket=(xs[i - 1], xs[i], xs[i + 1]), method="golden", tol=tol
    )
    if res.fun > vals[i]:
        return float(xs[i]), float(sign * vals[i])
    return float(res.x), float(sign * res.fun)


def max_displaced_probability(order: int = 2, n: int = 2, lo: float = 0.0, hi: float = 4.0):
    """``(|alpha|, p_n)`` maximizing the displaced-frame probability ``p_n``."""
    def p_n(a):
        return displaced_photon_distribution(AmplifierSpec(order, a))[n]

    return _golden_extremum(p_n, lo, hi, maximize=True)


def min_coherent_fidelity(order: int, lo: float = 0.0, hi: float = 4.0, variant: str = ADD_SUBTRACT):
    """``(|alpha|, F_coh)`` minimizing the coherent-state fidelity."""
    def f(a):
        return coherent_fidelity(AmplifierSpec(order, a, variant))

    return _golden_extremum(f, lo, hi, maximize=False)


def min_mutual_fidelity(lo: float = 0.0, hi: float = 3.0):
    return _golden_extremum(lambda a: mutual_fidelity(a), lo, hi, maximize=False)
