"""Wigner functions by displaced parity.

``W(x, p) = (1/pi) sum_n (-1)^n <n| D(beta)^dag rho D(beta) |n>`` with
``beta = (x + i p) / sqrt 2``; vacuum gives ``W(0, 0) = 1/pi``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from .fock import (
    CutoffError,
    DensityOperator,
    FockVector,
    _displacement_spectrum,
    displacement_pad,
    quadrature_covariance,
)

LEAKAGE_LIMIT = 1e-6

State = Union[FockVector, DensityOperator]


@dataclass(frozen=True)
class WignerGrid:
    """``values[i, j] = W(x_axis[i], p_axis[j])``."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    max_leakage: float = 0.0
    max_imaginary: float = 0.0

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.p_axis, axis=1), self.x_axis))

    def riemann_sum(self) -> float:
        dx = np.diff(self.x_axis).mean() if self.x_axis.size > 1 else 1.0
        dp = np.diff(self.p_axis).mean() if self.p_axis.size > 1 else 1.0
        return float(self.values.sum() * dx * dp)

    def to_matrix_csv(self) -> str:
        """First row ``p`` axis, then one row per ``x`` value: ``x, W(x, p_0), ...``."""
        lines = ["x\\p," + ",".join(repr(float(p)) for p in self.p_axis)]
        for x, row in zip(self.x_axis, self.values):
            lines.append(",".join([repr(float(x))] + [repr(float(v)) for v in row]))
        return "\n".join(lines) + "\n"

    def to_long_csv(self) -> str:
        lines = ["x,p,W"]
        for x, row in zip(self.x_axis, self.values):
            for p, v in zip(self.p_axis, row):
                lines.append(f"{float(x)!r},{float(p)!r},{float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_matrix_csv(cls, text: str) -> "WignerGrid":
        rows = [line.split(",") for line in text.strip().splitlines()]
        p_axis = np.array([float(v) for v in rows[0][1:]])
        x_axis = np.array([float(r[0]) for r in rows[1:]])
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        return cls(x_axis, p_axis, values)


def default_axis(extent: float = 5.0, points: int = 101) -> np.ndarray:
    return np.linspace(-extent, extent, points)


def _support(rho: np.ndarray, threshold: float = 1e-14) -> int:
    diag = np.abs(np.diag(rho))
    idx = np.nonzero(diag > threshold * diag.max())[0]
    return int(idx[-1]) if idx.size else 0


def _displaced_diagonals(rho: np.ndarray, betas: np.ndarray, cutoff: int) -> np.ndarray:
    """``<n| D(beta)^dag rho D(beta) |n>`` for n = 0..cutoff, one row per beta.

    Returned complex; the imaginary part is rounding residue for Hermitian rho.
    """
    rows = rho.shape[0]
    radius = float(np.abs(betas).max()) if betas.size else 0.0
    dim = max(rows, cutoff + 1) + displacement_pad(radius, max(rows - 1, cutoff))
    w, v = _displacement_spectrum(dim)
    v_rows = v[:rows]
    v_cols = v[: cutoff + 1].conj()
    phi = np.angle(betas)
    # D(beta)[l, n] = e^{i (l - n) phi} C(s)[l, n],  C(s) = V_r e^{i s w} V_c^dag,
    # and C only depends on the radius, which repeats across a symmetric grid
    radii, inverse = np.unique(np.round(np.abs(betas), 13), return_inverse=True)
    core = (v_rows[None, :, :] * np.exp(1j * radii[:, None, None] * w[None, None, :])) @ v_cols.T
    core = core[inverse.ravel()]
    lphase = np.exp(1j * np.arange(rows)[None, :] * phi[:, None])
    nphase = np.exp(-1j * np.arange(cutoff + 1)[None, :] * phi[:, None])
    disp = core * lphase[:, :, None] * nphase[:, None, :]
    return np.sum(disp.conj() * (rho[None, :, :] @ disp), axis=1)


def _working_cutoff(rho: np.ndarray, beta_max: complex) -> int:
    norm = np.trace(rho).real
    mean_n = float(np.real(np.arange(rho.shape[0]) @ np.diag(rho)) / norm)
    reach = math.sqrt(mean_n) + abs(beta_max)
    k = max(int(math.ceil(reach**2 + 2 * reach + 4)), rho.shape[0] - 1)
    probe = np.array([beta_max])
    # grow until the farthest point sits well inside the truncated space
    for _ in range(60):
        leak = 1 - _displaced_diagonals(rho, probe, k).real.sum() / norm
        if leak < 1e-3 * LEAKAGE_LIMIT:
            return k
        k = int(k * 1.1) + 2
    return k


def wigner(
    rho: State,
    x_axis: Optional[np.ndarray] = None,
    p_axis: Optional[np.ndarray] = None,
    cutoff: Optional[int] = None,
    workers: int = 1,
    chunk: int = 1024,
) -> WignerGrid:
    """Wigner function on the ``x_axis`` x ``p_axis`` grid.

    ``cutoff`` is the photon number at which the parity sum is truncated;
    by default it is chosen so the displaced state at the farthest grid point
    fits. A :class:`CutoffError` is raised if any grid point leaks more than
    1e-6 of its norm.
    """
    x_axis = default_axis() if x_axis is None else np.asarray(x_axis, dtype=float)
    p_axis = default_axis() if p_axis is None else np.asarray(p_axis, dtype=float)
    for axis in (x_axis, p_axis):
        if not np.all(np.isfinite(axis)) or (axis.size > 1 and not np.all(np.diff(axis) > 0)):
            raise ValueError("axes must be finite and strictly increasing")
    mat = DensityOperator.from_state(rho).matrix
    norm = np.trace(mat).real
    xx, pp = np.meshgrid(x_axis, p_axis, indexing="ij")
    betas = ((xx + 1j * pp) / math.sqrt(2)).ravel()
    far = betas[int(np.argmax(np.abs(betas)))]
    k = _working_cutoff(mat, far) if cutoff is None else int(cutoff)
    parity = (-1.0) ** np.arange(k + 1)
    pieces = [betas[i : i + chunk] for i in range(0, betas.size, chunk)]

    def evaluate(part):
        diag = _displaced_diagonals(mat, part, k)
        w = diag @ parity / math.pi
        return w.real, 1 - diag.real.sum(axis=1) / norm, np.abs(w.imag)

    if workers == 1:
        results = [evaluate(p) for p in pieces]
    else:
        with ThreadPoolExecutor(max_workers=workers or None) as pool:
            results = list(pool.map(evaluate, pieces))
    values = np.concatenate([r[0] for r in results]).reshape(xx.shape)
    leak = float(np.concatenate([r[1] for r in results]).max())
    imag = float(np.concatenate([r[2] for r in results]).max())
    if leak > LEAKAGE_LIMIT:
        raise CutoffError(
            f"displaced state leaks {leak:.2e} beyond photon number {k}; raise the cutoff"
        )
    return WignerGrid(x_axis, p_axis, values, leak, imag)


def wigner_point(rho: State, x: float, p: float, cutoff: Optional[int] = None) -> float:
    grid = wigner(rho, np.array([x]), np.array([p]), cutoff)
    return float(grid.values[0, 0])


class Ellipse(NamedTuple):
    major: float
    minor: float
    minor_angle: float
    defined: bool


def squeezing_ellipse(rho: State, theta: float = 0.0) -> Ellipse:
    """Principal variances of the ``(x_theta, p_theta)`` covariance matrix.

    ``minor_angle`` is the phase-space angle of the minor axis, in ``[0, pi)``;
    ``defined`` is False when the covariance is isotropic.
    """
    _, cov = quadrature_covariance(rho, theta)
    vals, vecs = np.linalg.eigh(cov)
    minor, major = float(vals[0]), float(vals[1])
    defined = major - minor > 1e-12
    angle = math.atan2(vecs[1, 0], vecs[0, 0]) + theta if defined else 0.0
    return Ellipse(major, minor, float(np.mod(angle, math.pi)), defined)


def write_grid(grid: WignerGrid, path: Union[str, Path], layout: str = "matrix") -> Path:
    path = Path(path)
    text = grid.to_matrix_csv() if layout == "matrix" else grid.to_long_csv()
    path.write_text(text)
    return path
