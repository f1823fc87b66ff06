"""Homodyne sampling and maximum-likelihood state reconstruction.

Quadratures follow ``x_theta = (a e^{-i theta} + a^dag e^{i theta}) / sqrt 2``
(vacuum variance 1/2), so ``<n|x_theta> = e^{i n theta} psi_n(x)`` with
``psi_n`` the Hermite-Gauss functions.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from .fock import (
    DensityOperator,
    FockVector,
    beam_splitter,
    displacement_rows,
    fidelity,
    number_operator,
    partial_trace,
    purity,
    quadrature_covariance,
    tensor,
    vacuum,
)

State = Union[FockVector, DensityOperator]

DEFAULT_PHASES = tuple(np.pi * k / 12 for k in range(12))
BIN_WIDTH = 0.05


def hermite_functions(cutoff: int, x) -> np.ndarray:
    """``psi_n(x)`` for n = 0..cutoff, shape ``(cutoff + 1, len(x))``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((cutoff + 1, x.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if cutoff >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, cutoff):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_kets(cutoff: int, theta: float, x) -> np.ndarray:
    """Columns are ``<n|x_theta>`` for each value in ``x``."""
    phase = np.exp(1j * theta * np.arange(cutoff + 1))
    return phase[:, None] * hermite_functions(cutoff, x)


def quadrature_pdf(rho: State, theta: float, x) -> np.ndarray:
    """Homodyne marginal ``p(x | theta)``; ``x`` may be a scalar or an array."""
    mat = DensityOperator.from_state(rho).matrix
    kets = quadrature_kets(mat.shape[0] - 1, theta, x)
    vals = np.einsum("nx,nm,mx->x", kets.conj(), mat, kets).real
    return vals if np.ndim(x) else float(vals[0])


# --------------------------------------------------------------------------
# Loss channel
# --------------------------------------------------------------------------


def loss_kraus(eta: float, cutoff: int) -> np.ndarray:
    """Kraus operators ``E_k`` of the pure-loss channel, shape ``(cutoff+1, d, d)``."""
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    d = cutoff + 1
    ops = np.zeros((d, d, d))
    n = np.arange(d)
    for k in range(d):
        src = n[k:]
        if eta == 1:
            if k == 0:
                ops[0] = np.eye(d)
            continue
        logc = (
            0.5 * (gammaln(src + 1) - gammaln(k + 1) - gammaln(src - k + 1))
            + 0.5 * (src - k) * math.log(eta)
            + 0.5 * k * math.log1p(-eta)
        )
        ops[k, src - k, src] = np.exp(logc)
    return ops


def apply_loss(rho: State, eta: float, method: str = "kraus") -> DensityOperator:
    """Pure-loss channel of transmission ``eta``.

    ``method='beam_splitter'`` couples to a vacuum ancilla at transmittance
    ``eta`` and traces it out; ``'kraus'`` uses the binomial Kraus operators.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    rho = DensityOperator.from_state(rho)
    if eta == 1:
        return rho
    n = rho.cutoff
    if method == "kraus":
        ek = loss_kraus(eta, n)
        return DensityOperator(np.einsum("kab,bc,kdc->ad", ek, rho.matrix, ek))
    if method == "beam_splitter":
        u = beam_splitter(eta, (n, n)).matrix
        d = n + 1
        joint = tensor(rho, vacuum(n)).reshape(d * d, d * d)
        out = (u @ joint @ u.conj().T).reshape(d, d, d, d)
        return partial_trace(out, "B")
    raise ValueError(f"unknown method {method!r}")


def loss_adjoint(op: np.ndarray, eta: float) -> np.ndarray:
    """Heisenberg-picture loss: ``sum_k E_k^dag op E_k``."""
    ek = loss_kraus(eta, op.shape[0] - 1)
    return sum(e.T @ op @ e for e in ek)


# --------------------------------------------------------------------------
# Datasets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureDataset:
    """Homodyne samples; phases are folded into ``[0, pi)`` on construction."""

    theta: np.ndarray
    x: np.ndarray
    eta: float = 1.0
    seed: Optional[int] = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float).ravel()
        if theta.shape != x.shape:
            raise ValueError("theta and x must have the same length")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(x))):
            raise ValueError("samples must be finite")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        # x_{theta + pi} = -x_theta
        wrapped = np.mod(theta, 2 * np.pi)
        flip = wrapped >= np.pi
        theta = np.where(flip, wrapped - np.pi, wrapped)
        x = np.where(flip, -x, x)
        theta.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "eta", float(self.eta))

    def __len__(self) -> int:
        return self.x.size

    def phases(self) -> np.ndarray:
        return np.unique(self.theta)

    def counts(self) -> dict:
        values, counts = np.unique(self.theta, return_counts=True)
        return {repr(float(v)): int(c) for v, c in zip(values, counts)}

    def to_csv(self, path: Union[str, Path]) -> Path:
        """Write ``theta,x`` rows plus a ``.meta.json`` sidecar; floats round-trip exactly."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["theta", "x"])
            for t, v in zip(self.theta.tolist(), self.x.tolist()):
                writer.writerow([repr(t), repr(v)])
        meta = {"eta": self.eta, "seed": self.seed, "n_samples": len(self), "counts": self.counts()}
        sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "QuadratureDataset":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["theta", "x"]:
                raise ValueError(f"{path}: expected header 'theta,x', got {header}")
            rows = [(float(t), float(v)) for t, v in reader]
        meta_path = sidecar(path)
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], meta.get("eta", 1.0), meta.get("seed"))


def sidecar(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def sample_quadratures(
    rho: State,
    eta: float = 1.0,
    phases: Sequence[float] = DEFAULT_PHASES,
    n_per_phase: int = 10_000,
    seed: int = 0,
    resolution: float = 0.005,
) -> QuadratureDataset:
    """Draw homodyne samples after loss ``eta`` by inverse-CDF sampling.

    Phase ``k`` uses the ``k``-th child stream of ``SeedSequence(seed)``.
    """
    phases = list(phases)
    if not phases:
        raise ValueError("phases must be non-empty")
    lossy = apply_loss(rho, eta)
    nbar = max(lossy.expectation(number_operator(lossy.cutoff)).real, 0.0)
    span = math.sqrt(2 * nbar) + 6
    grid = np.linspace(-span, span, int(math.ceil(2 * span / resolution)) + 1)
    streams = np.random.SeedSequence(seed).spawn(len(phases))
    thetas, xs = [], []
    for theta, stream in zip(phases, streams):
        pdf = np.clip(quadrature_pdf(lossy, theta, grid), 0.0, None)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        u = np.random.default_rng(stream).random(n_per_phase)
        xs.append(np.interp(u, cdf, grid))
        thetas.append(np.full(n_per_phase, float(theta)))
    return QuadratureDataset(np.concatenate(thetas), np.concatenate(xs), eta, seed)


# --------------------------------------------------------------------------
# Maximum likelihood
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ReconstructionResult:
    rho: DensityOperator
    log_likelihood: Tuple[float, ...]
    iterations: int
    converged: bool


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)


def binned_povm(
    dataset: QuadratureDataset, cutoff: int, bin_width: float = BIN_WIDTH, eta: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Bin samples per phase and return ``(counts, Pi)`` for the occupied bins.

    ``Pi[j]`` integrates ``|x_theta><x_theta|`` over bin ``j`` (3-point Gauss-
    Legendre); when ``eta`` is given the loss adjoint is applied to it.
    """
    counts, povms = [], []
    for theta in dataset.phases():
        xs = dataset.x[dataset.theta == theta]
        idx = np.floor(xs / bin_width).astype(np.int64)
        occupied, n_in = np.unique(idx, return_counts=True)
        lo = occupied * bin_width
        nodes = (lo[:, None] + 0.5 * bin_width * (1 + _GL_NODES[None, :])).ravel()
        kets = quadrature_kets(cutoff, theta, nodes).reshape(cutoff + 1, occupied.size, 3)
        w = 0.5 * bin_width * _GL_WEIGHTS
        pis = np.einsum("ajg,bjg,g->jab", kets, kets.conj(), w)
        counts.append(n_in)
        povms.append(pis)
    pis = np.concatenate(povms)
    if eta is not None and eta < 1:
        ek = loss_kraus(eta, cutoff)
        adj = np.zeros_like(pis)
        for e in ek:
            adj += e.T @ pis @ e
        pis = adj
    return np.concatenate(counts).astype(float), pis


def maxlik_reconstruct(
    dataset: QuadratureDataset,
    cutoff: int,
    compensate_eta: bool = True,
    max_iter: int = 2000,
    tol: float = 1e-6,
    bin_width: float = BIN_WIDTH,
    max_relaxation: float = 4.0,
) -> ReconstructionResult:
    """Iterative ``R rho R`` maximum-likelihood estimate.

    ``R = sum_j f_j Pi_j / p_j(rho)`` with relative frequencies ``f_j``. At the
    likelihood maximum ``R <= 1``, so iteration stops once the largest
    eigenvalue of ``R`` exceeds 1 by less than ``tol``.

    Each step first tries the over-relaxed update ``R^g rho R^g`` (``g`` grows
    by 1.3x after each success, up to ``max_relaxation``), then plain ``R rho R``,
    then diluted ``(1 + eps R) rho (1 + eps R)`` with ``eps`` halved, taking
    the first candidate that does not lower the likelihood.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    eta = dataset.eta if compensate_eta else None
    freq, pis = binned_povm(dataset, cutoff, bin_width, eta)
    freq = freq / freq.sum()
    d = cutoff + 1
    eye = np.eye(d)
    flat = pis.reshape(pis.shape[0], d * d)

    def probs(rho):
        return np.maximum((flat @ rho.T.reshape(-1)).real, 1e-300)

    def loglik(p):
        return float(freq @ np.log(p)) * len(dataset)

    def candidates(w, v, g):
        if g > 1:
            r_g = (v * np.maximum(w, 0.0) ** g) @ v.conj().T
            yield r_g, True
        yield (v * w) @ v.conj().T, False
        eps = 1.0
        while eps > 1e-12:
            yield eye + eps * ((v * w) @ v.conj().T), False
            eps /= 2

    rho = eye / d
    p = probs(rho)
    trace = [loglik(p)]
    converged = False
    relax = 1.0
    steps = 0
    for _ in range(max_iter + 1):
        r_op = ((freq / p) @ flat).reshape(d, d)
        w, v = np.linalg.eigh(0.5 * (r_op + r_op.conj().T))
        if w[-1] - 1 < tol:
            converged = True
            break
        if steps == max_iter:
            break
        for step, relaxed in candidates(w, v, relax):
            cand = step @ rho @ step.conj().T
            cand /= np.trace(cand).real
            p_new = probs(cand)
            ll = loglik(p_new)
            if ll >= trace[-1]:
                break
        else:
            # no ascent direction left at double precision
            converged = True
            break
        relax = min(relax * 1.3, max_relaxation) if relaxed or relax == 1.0 else 1.0
        rho = 0.5 * (cand + cand.conj().T)
        p = p_new
        trace.append(ll)
        steps += 1
    return ReconstructionResult(DensityOperator(rho), tuple(trace), steps, converged)


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StateMetrics:
    fidelity: float
    purity: float
    gain: float
    gain_defined: bool
    V_x: float
    V_p: float
    displaced_probabilities: np.ndarray

    def as_dict(self, n_probabilities: int = 3) -> dict:
        out = {
            "F": self.fidelity,
            "P": self.purity,
            "gain": self.gain,
            "gain_defined": self.gain_defined,
            "Vx": self.V_x,
            "Vp": self.V_p,
        }
        for n in range(n_probabilities):
            out[f"p{n}"] = float(self.displaced_probabilities[n])
        return out


def report_metrics(rho: State, reference: FockVector, alpha: complex) -> StateMetrics:
    """Fidelity, purity, gain, quadrature variances and displaced-frame photon numbers."""
    rho = DensityOperator.from_state(rho)
    alpha = complex(alpha)
    ref = reference.with_cutoff(rho.cutoff) if reference.cutoff != rho.cutoff else reference
    n = rho.cutoff
    if n >= 1:
        a = np.diag(np.sqrt(np.arange(1, n + 1)), 1)
        mean_a = complex(np.trace(a @ rho.matrix))
    else:
        mean_a = 0j
    gain_defined = alpha != 0
    g = (mean_a / alpha).real if gain_defined else float("nan")
    theta = float(np.angle(alpha)) if gain_defined else 0.0
    _, cov = quadrature_covariance(rho, theta)
    d = displacement_rows(-alpha, n + 1, n)
    shifted = np.einsum("nk,kl,nl->n", d, rho.matrix, d.conj()).real
    return StateMetrics(
        fidelity=fidelity(rho, ref),
        purity=purity(rho),
        gain=float(g),
        gain_defined=gain_defined,
        V_x=float(cov[0, 0]),
        V_p=float(cov[1, 1]),
        displaced_probabilities=shifted,
    )
