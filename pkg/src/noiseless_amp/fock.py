"""Truncated Fock-basis states, operators and elementary optical transformations.

Single-mode objects live on photon numbers ``0..cutoff``. Two-mode objects are
indexed ``(n_A, n_B)``; flattened two-mode matrices use C order, i.e. the flat
index of ``|n_A, n_B>`` is ``n_A * (cutoff_B + 1) + n_B``.

Beam-splitter phase convention: ``a^dag -> t a^dag + r b^dag`` and
``b^dag -> -r a^dag + t b^dag`` with real ``t = sqrt(T)``, ``r = sqrt(1 - T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc, gammaln

DISPLACEMENT_PAD = 8


class CutoffError(ValueError):
    """Raised when a truncation is too small for the requested operation."""


class ZeroProbabilityError(RuntimeError):
    """Raised when a heralding event has vanishing probability."""


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def default_cutoff(alpha: complex, m: int = 0) -> int:
    """Cutoff used for amplifier work on input amplitude ``alpha`` and order ``m``."""
    a = abs(alpha)
    return int(math.ceil(a * a + 6 * a + 10)) + 2 * m


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FockVector:
    """Pure single-mode state. ``leakage`` is the norm lost to truncation."""

    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes must be a non-empty 1-d sequence")
        if self.leakage < 0:
            raise ValueError("leakage must be non-negative")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "leakage", float(self.leakage))

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "FockVector":
        nrm = self.norm
        if nrm == 0:
            raise ZeroProbabilityError("cannot normalize the zero vector")
        return FockVector(self.amplitudes / nrm, self.leakage)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def expectation(self, op: Union["ModeOperator", np.ndarray]) -> complex:
        mat = op.matrix if isinstance(op, ModeOperator) else np.asarray(op)
        return complex(np.vdot(self.amplitudes, mat @ self.amplitudes))

    def with_cutoff(self, cutoff: int) -> "FockVector":
        """Zero-pad or truncate; truncated weight is added to ``leakage``."""
        if cutoff < 0:
            raise ValueError("cutoff must be non-negative")
        n = cutoff + 1
        if n >= self.amplitudes.size:
            amps = np.zeros(n, dtype=complex)
            amps[: self.amplitudes.size] = self.amplitudes
            return FockVector(amps, self.leakage)
        lost = float(np.sum(np.abs(self.amplitudes[n:]) ** 2))
        return FockVector(self.amplitudes[:n], self.leakage + lost)

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "FockVector") -> complex:
        """``<self|other>``."""
        if other.cutoff != self.cutoff:
            raise ValueError(f"cutoff mismatch: {self.cutoff} vs {other.cutoff}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityOperator:
    """Mixed single-mode state on the truncated basis."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density matrix must be square")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_state(cls, state: Union[FockVector, "DensityOperator"]) -> "DensityOperator":
        if isinstance(state, DensityOperator):
            return state
        return state.density()

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalize(self) -> "DensityOperator":
        tr = self.trace
        if tr <= 0:
            raise ZeroProbabilityError("density operator has non-positive trace")
        return DensityOperator(self.matrix / tr)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def expectation(self, op: Union["ModeOperator", np.ndarray]) -> complex:
        mat = op.matrix if isinstance(op, ModeOperator) else np.asarray(op)
        return complex(np.trace(mat @ self.matrix))

    def with_cutoff(self, cutoff: int) -> "DensityOperator":
        n = cutoff + 1
        d = self.matrix.shape[0]
        if n >= d:
            mat = np.zeros((n, n), dtype=complex)
            mat[:d, :d] = self.matrix
            return DensityOperator(mat)
        return DensityOperator(self.matrix[:n, :n])

    def transform(self, op: Union["ModeOperator", np.ndarray]) -> "DensityOperator":
        """``K rho K^dag`` (unnormalized)."""
        mat = op.matrix if isinstance(op, ModeOperator) else np.asarray(op)
        return DensityOperator(mat @ self.matrix @ mat.conj().T)

    def is_physical(self, tol: float = 1e-10) -> bool:
        herm = np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= 1e-12
        return bool(herm and abs(self.trace - 1) <= tol and self.eigenvalues().min() >= -tol)


@dataclass(frozen=True)
class ModeOperator:
    """Square matrix acting on one truncated mode."""

    matrix: np.ndarray
    mode_label: Optional[str] = None

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        object.__setattr__(self, "matrix", mat)

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0] - 1

    def dag(self) -> "ModeOperator":
        return ModeOperator(self.matrix.conj().T, self.mode_label)

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            return ModeOperator(self.matrix @ other.matrix, self.mode_label)
        if isinstance(other, FockVector):
            if other.cutoff != self.cutoff:
                raise ValueError(f"cutoff mismatch: {self.cutoff} vs {other.cutoff}")
            return FockVector(self.matrix @ other.amplitudes, other.leakage)
        return NotImplemented

    def __add__(self, other: "ModeOperator") -> "ModeOperator":
        return ModeOperator(self.matrix + other.matrix, self.mode_label)

    def __sub__(self, other: "ModeOperator") -> "ModeOperator":
        return ModeOperator(self.matrix - other.matrix, self.mode_label)


@dataclass(frozen=True)
class TwoModeState:
    """Pure two-mode state with amplitudes indexed ``(n_A, n_B)``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 2:
            raise ValueError("two-mode amplitudes must be a matrix")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoffs(self) -> Tuple[int, int]:
        return self.amplitudes.shape[0] - 1, self.amplitudes.shape[1] - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "TwoModeState":
        nrm = self.norm
        if nrm == 0:
            raise ZeroProbabilityError("cannot normalize the zero vector")
        return TwoModeState(self.amplitudes / nrm)

    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)


@dataclass(frozen=True)
class TwoModeOperator:
    """Operator on the flattened two-mode space (C-order ``(n_A, n_B)``)."""

    matrix: np.ndarray
    cutoffs: Tuple[int, int]

    def __post_init__(self):
        mat = _frozen(self.matrix)
        dim = (self.cutoffs[0] + 1) * (self.cutoffs[1] + 1)
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match cutoffs {self.cutoffs}")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "cutoffs", (int(self.cutoffs[0]), int(self.cutoffs[1])))

    def dag(self) -> "TwoModeOperator":
        return TwoModeOperator(self.matrix.conj().T, self.cutoffs)

    def tensor4(self) -> np.ndarray:
        """Matrix as ``op[a_out, b_out, a_in, b_in]``."""
        da, db = self.cutoffs[0] + 1, self.cutoffs[1] + 1
        return self.matrix.reshape(da, db, da, db)

    def __matmul__(self, other):
        if isinstance(other, TwoModeOperator):
            if other.cutoffs != self.cutoffs:
                raise ValueError("cutoff mismatch")
            return TwoModeOperator(self.matrix @ other.matrix, self.cutoffs)
        if isinstance(other, TwoModeState):
            if other.cutoffs != self.cutoffs:
                raise ValueError("cutoff mismatch")
            out = self.matrix @ other.flat()
            return TwoModeState(out.reshape(other.amplitudes.shape))
        return NotImplemented

    def element(self, mode: str, out_n: int, in_n: int) -> ModeOperator:
        """Single-mode operator ``<out_n| U |in_n>`` taken on ``mode`` ('A' or 'B')."""
        t4 = self.tensor4()
        if mode == "B":
            return ModeOperator(t4[:, out_n, :, in_n], "A")
        if mode == "A":
            return ModeOperator(t4[out_n, :, in_n, :], "B")
        raise ValueError("mode must be 'A' or 'B'")


State = Union[FockVector, DensityOperator]


# --------------------------------------------------------------------------
# States
# --------------------------------------------------------------------------


def fock_state(n: int, cutoff: int) -> FockVector:
    if not 0 <= n <= cutoff:
        raise CutoffError(f"photon number {n} outside 0..{cutoff}")
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps)


def vacuum(cutoff: int) -> FockVector:
    return fock_state(0, cutoff)


def coherent_state(alpha: complex, cutoff: int) -> FockVector:
    """Truncated coherent state; ``leakage`` is the Poisson tail above ``cutoff``."""
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise ValueError(f"alpha must be finite, got {alpha}")
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    mean = abs(alpha) ** 2
    if mean == 0:
        return vacuum(cutoff)
    n = np.arange(cutoff + 1)
    log_mag = n * math.log(abs(alpha)) - 0.5 * mean - 0.5 * gammaln(n + 1)
    amps = np.exp(log_mag + 1j * n * np.angle(alpha))
    # regularized lower gamma P(cutoff+1, |alpha|^2) = Prob[N > cutoff]
    leakage = float(gammainc(cutoff + 1, mean))
    return FockVector(amps, leakage)


# --------------------------------------------------------------------------
# Single-mode operators
# --------------------------------------------------------------------------


def ladder_operators(cutoff: int) -> Tuple[ModeOperator, ModeOperator]:
    """Annihilation and creation operators, ``a[n-1, n] = sqrt(n)``."""
    if cutoff < 1:
        raise CutoffError("ladder operators need cutoff >= 1")
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)
    return ModeOperator(a), ModeOperator(a.conj().T)


def number_operator(cutoff: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(cutoff + 1, dtype=complex)))


def diagonal_operator(values: Sequence[complex]) -> ModeOperator:
    return ModeOperator(np.diag(np.asarray(values, dtype=complex)))


def quadrature_operators(theta: float, cutoff: int) -> Tuple[ModeOperator, ModeOperator]:
    """``x = (a e^{-i theta} + a^dag e^{i theta})/sqrt 2`` and its conjugate ``p``.

    Vacuum variance is 1/2. Matrices are truncated, so ``x @ x`` is wrong in
    the last diagonal entry; pad states by one level before taking second moments.
    """
    a, ad = ladder_operators(cutoff)
    ph = np.exp(1j * theta)
    x = (a.matrix / ph + ad.matrix * ph) / math.sqrt(2)
    p = 1j * (ad.matrix * ph - a.matrix / ph) / math.sqrt(2)
    return ModeOperator(x), ModeOperator(p)


@lru_cache(maxsize=64)
def _displacement_spectrum(dim: int) -> Tuple[np.ndarray, np.ndarray]:
    # a^dag - a = i H with H Hermitian; exp(s (a^dag - a)) = V exp(i s w) V^dag
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)
    h = -1j * (a.T - a)
    w, v = np.linalg.eigh(h)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def displacement_pad(radius: float, cutoff: int) -> int:
    """Extra levels needed so the cropped exponential is exact to ~1e-14."""
    r = float(radius)
    return DISPLACEMENT_PAD + int(math.ceil(2 * r * math.sqrt(cutoff + 1) + r * r + 6 * r))


def displacement_rows(alpha: complex, rows: int, cutoff: int) -> np.ndarray:
    """Rows ``0..rows-1`` and columns ``0..cutoff`` of ``D(alpha)``, no precondition."""
    alpha = complex(alpha)
    r = abs(alpha)
    dim = max(rows, cutoff + 1) + displacement_pad(r, max(rows - 1, cutoff))
    w, v = _displacement_spectrum(dim)
    rot = np.exp(1j * np.angle(alpha) * np.arange(dim))
    left = rot[:rows, None] * v[:rows] * np.exp(1j * r * w)[None, :]
    right = v[: cutoff + 1].conj().T * rot[: cutoff + 1].conj()[None, :]
    return left @ right


def displacement_operator(alpha: complex, cutoff: int, pad: Optional[int] = None) -> ModeOperator:
    """``D(alpha) = exp(alpha a^dag - alpha* a)`` truncated to ``cutoff``.

    The exponential is taken on a space enlarged by ``pad`` levels (default:
    at least 8, growing with ``|alpha|``), using the spectral decomposition of
    the tridiagonal generator, and then cropped.
    """
    alpha = complex(alpha)
    r = abs(alpha)
    if r * r + 6 * r + 6 > cutoff:
        raise CutoffError(
            f"cutoff {cutoff} too small for displacement |alpha|={r:.3g} "
            f"(need |alpha|^2 + 6|alpha| + 6 <= cutoff)"
        )
    if r == 0:
        return ModeOperator(np.eye(cutoff + 1, dtype=complex))
    if pad is None:
        pad = displacement_pad(r, cutoff)
    dim = cutoff + 1 + pad
    w, v = _displacement_spectrum(dim)
    rot = np.exp(1j * np.angle(alpha) * np.arange(dim))
    core = (v[: cutoff + 1] * np.exp(1j * r * w)) @ v[: cutoff + 1].conj().T
    full = rot[: cutoff + 1, None] * core * rot[: cutoff + 1].conj()[None, :]
    return ModeOperator(full)


# --------------------------------------------------------------------------
# Two-mode constructions
# --------------------------------------------------------------------------


def _chains(cutoffs: Tuple[int, int], conserve: str):
    """Invariant subspaces of the beam-splitter / squeezer generators.

    Yields a list of ``(n_A, n_B)`` index pairs per chain, ordered along the
    chain; ``conserve`` is 'total' (n_A + n_B fixed) or 'difference'.
    """
    na, nb = cutoffs
    if conserve == "total":
        for k in range(na + nb + 1):
            yield [(p, k - p) for p in range(max(0, k - nb), min(na, k) + 1)]
    else:
        for d in range(-nb, na + 1):
            a0, b0 = (d, 0) if d >= 0 else (0, -d)
            length = min(na - a0, nb - b0) + 1
            yield [(a0 + j, b0 + j) for j in range(length)]


def _check_two_mode_cutoffs(cutoffs) -> Tuple[int, int]:
    if isinstance(cutoffs, (int, np.integer)):
        cutoffs = (int(cutoffs), int(cutoffs))
    na, nb = int(cutoffs[0]), int(cutoffs[1])
    if na < 0 or nb < 0:
        raise ValueError("cutoffs must be non-negative")
    return na, nb


def beam_splitter(transmittance: float, cutoffs) -> TwoModeOperator:
    """Beam-splitter unitary with intensity transmittance ``T`` in (0, 1].

    Built exactly in each fixed-total-photon block ``n_A + n_B = k``; the
    blocks with ``k <= min(cutoffs)`` are complete, so the operator is exactly
    unitary there.
    """
    T = float(transmittance)
    if not (0 < T <= 1):
        raise ValueError(f"transmittance must lie in (0, 1], got {T}")
    na, nb = _check_two_mode_cutoffs(cutoffs)
    db = nb + 1
    dim = (na + 1) * db
    u = np.zeros((dim, dim), dtype=complex)
    theta = math.acos(math.sqrt(T))
    for k in range(na + nb + 1):
        # full block: |p, k-p>, p = 0..k ; generator theta (a b^dag - a^dag b)
        p = np.arange(k + 1)
        gen = np.zeros((k + 1, k + 1))
        # a b^dag |p, k-p> = sqrt(p (k-p+1)) |p-1, k-p+1>
        off = np.sqrt(p[1:] * (k - p[1:] + 1.0))
        gen[p[:-1], p[1:]] = off
        gen[p[1:], p[:-1]] = -off
        block = expm(theta * gen)
        keep = [q for q in range(k + 1) if q <= na and k - q <= nb]
        idx = np.array([q * db + (k - q) for q in keep])
        u[np.ix_(idx, idx)] = block[np.ix_(keep, keep)]
    return TwoModeOperator(u, (na, nb))


def _squeezer_pad(r: float) -> int:
    lam = math.tanh(r)
    if lam == 0:
        return 0
    return int(min(400, math.ceil(math.log(1e-18) / math.log(lam)) + 8))


def two_mode_squeezer(r: float, cutoffs) -> TwoModeOperator:
    """``S(r) = exp(r (a^dag b^dag - a b))``, exact on each fixed-difference chain.

    Each chain ``|n_A0 + j, n_B0 + j>`` is exponentiated on a padded length
    and then cropped to the cutoffs.
    """
    r = float(r)
    if r < 0 or not math.isfinite(r):
        raise ValueError(f"squeezing parameter must be finite and >= 0, got {r}")
    na, nb = _check_two_mode_cutoffs(cutoffs)
    lam = math.tanh(r)
    if r > 0 and lam ** min(na, nb) >= 1e-8:
        raise CutoffError(
            f"cutoffs {(na, nb)} too small for r={r}: tanh(r)^cutoff must be < 1e-8"
        )
    db = nb + 1
    dim = (na + 1) * db
    s = np.zeros((dim, dim), dtype=complex)
    pad = _squeezer_pad(r)
    for chain in _chains((na, nb), "difference"):
        a0, b0 = chain[0]
        length = len(chain) + pad
        j = np.arange(length - 1)
        off = np.sqrt((a0 + j + 1.0) * (b0 + j + 1.0))
        gen = np.diag(off, k=-1) - np.diag(off, k=1)
        block = expm(r * gen)[: len(chain), : len(chain)]
        idx = np.array([p * db + q for p, q in chain])
        s[np.ix_(idx, idx)] = block
    return TwoModeOperator(s, (na, nb))


# --------------------------------------------------------------------------
# Composition and reduction
# --------------------------------------------------------------------------


def tensor(first, second):
    """Tensor product of two single-mode objects.

    Vectors give a :class:`TwoModeState`, operators a :class:`TwoModeOperator`,
    density operators a rank-4 array ``rho[a, b, a', b']``.
    """
    if isinstance(first, FockVector) and isinstance(second, FockVector):
        return TwoModeState(np.outer(first.amplitudes, second.amplitudes))
    if isinstance(first, ModeOperator) and isinstance(second, ModeOperator):
        return TwoModeOperator(np.kron(first.matrix, second.matrix), (first.cutoff, second.cutoff))
    if isinstance(first, (FockVector, DensityOperator)) and isinstance(second, (FockVector, DensityOperator)):
        ra = DensityOperator.from_state(first).matrix
        rb = DensityOperator.from_state(second).matrix
        return np.einsum("ij,kl->ikjl", ra, rb)
    raise TypeError(f"cannot tensor {type(first).__name__} with {type(second).__name__}")


def partial_trace(state, mode: str = "B") -> DensityOperator:
    """Trace out ``mode`` from a two-mode pure state or rank-4 density array."""
    if mode not in ("A", "B"):
        raise ValueError("mode must be 'A' or 'B'")
    if isinstance(state, TwoModeState):
        c = state.amplitudes
        mat = c @ c.conj().T if mode == "B" else c.T @ c.conj()
        return DensityOperator(mat)
    rho = np.asarray(state)
    if rho.ndim != 4 or rho.shape[:2] != rho.shape[2:]:
        raise ValueError("two-mode density must have shape (dA, dB, dA, dB)")
    sub = "ijkj->ik" if mode == "B" else "ijil->jl"
    return DensityOperator(np.einsum(sub, rho))


def project_mode(state: TwoModeState, mode: str, projector) -> Tuple[FockVector, float]:
    """Project ``mode`` onto ``projector`` (photon number or FockVector).

    Returns the unnormalized conditional state of the other mode and its
    squared norm as the branch probability.
    """
    c = state.amplitudes
    axis_dim = c.shape[1] if mode == "B" else c.shape[0]
    if isinstance(projector, (int, np.integer)):
        vec = np.zeros(axis_dim, dtype=complex)
        if not 0 <= projector < axis_dim:
            raise ValueError(f"photon number {projector} outside projected mode")
        vec[projector] = 1.0
    else:
        vec = np.asarray(projector.amplitudes if isinstance(projector, FockVector) else projector, dtype=complex)
        if vec.size != axis_dim:
            raise ValueError(f"projector dimension {vec.size} != mode dimension {axis_dim}")
    if mode == "B":
        branch = c @ vec.conj()
    elif mode == "A":
        branch = vec.conj() @ c
    else:
        raise ValueError("mode must be 'A' or 'B'")
    prob = float(np.sum(np.abs(branch) ** 2))
    return FockVector(branch), prob


# --------------------------------------------------------------------------
# Figures of merit
# --------------------------------------------------------------------------


def fidelity(rho: State, psi: FockVector) -> float:
    """``<psi| rho |psi>``."""
    mat = DensityOperator.from_state(rho).matrix
    if mat.shape[0] != psi.amplitudes.size:
        raise ValueError(f"dimension mismatch: {mat.shape[0]} vs {psi.amplitudes.size}")
    return float(np.vdot(psi.amplitudes, mat @ psi.amplitudes).real)


def purity(rho: State) -> float:
    mat = DensityOperator.from_state(rho).matrix
    return float(np.real(np.sum(mat * mat.T)))


def quadrature_covariance(state: State, theta: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Means and symmetrized covariance matrix of ``(x_theta, p_theta)``.

    The state is zero-padded by one level so the truncated ``a a^dag`` is exact
    on its support.
    """
    rho = DensityOperator.from_state(state)
    rho = rho.with_cutoff(max(rho.cutoff + 1, 1)).matrix
    x, p = quadrature_operators(theta, rho.shape[0] - 1)
    ops = (x.matrix, p.matrix)
    means = np.array([np.trace(o @ rho).real for o in ops])
    cov = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            sym = 0.5 * (ops[i] @ ops[j] + ops[j] @ ops[i])
            cov[i, j] = np.trace(sym @ rho).real - means[i] * means[j]
    return means, cov
