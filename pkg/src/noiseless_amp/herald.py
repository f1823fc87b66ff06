"""Heralded photon addition and subtraction with realistic detectors.

Addition couples the signal to a vacuum idler through a two-mode squeezer
(single-Schmidt-mode SPDC); subtraction taps the signal on a beam splitter.
Both are heralded by a POVM on the ancilla, which is diagonal in the Fock
basis, so the conditional map is ``rho -> sum_j pi_j K_j rho K_j^dag`` with
``K_j = <j|_anc U |0>_anc``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .amplifier import AmplifierSpec, amplified_state
from .fock import (
    CutoffError,
    DensityOperator,
    FockVector,
    ModeOperator,
    ZeroProbabilityError,
    beam_splitter,
    coherent_state,
    default_cutoff,
    diagonal_operator,
    fidelity,
    two_mode_squeezer,
)

IDEAL = "ideal"
MULTIPLEXED_BINARY = "multiplexed"
DETECTOR_KINDS = (IDEAL, MULTIPLEXED_BINARY)

MULTI_PAIR_WARNING = 1e-3
EXPERIMENT_T_RANGE = (0.9, 0.95)


def click_povm(
    n_detectors: int,
    k_clicks: int,
    dark_rate: float = 0.0,
    cutoff: int = 10,
    split: Optional[Sequence[float]] = None,
) -> ModeOperator:
    """Probability that exactly ``k_clicks`` of ``n_detectors`` binary detectors fire.

    Photons are routed independently to detector ``i`` with probability
    ``split[i]`` (uniform by default). Each detector also fires spontaneously
    with probability ``dark_rate``. The diagonal entry at photon number n is
    computed by inclusion-exclusion over the set of silent detectors.
    """
    if n_detectors < 1:
        raise ValueError("need at least one detector")
    if not 0 <= k_clicks <= n_detectors:
        raise ValueError(f"k_clicks must lie in 0..{n_detectors}, got {k_clicks}")
    if not 0 <= dark_rate <= 1:
        raise ValueError("dark_rate must lie in [0, 1]")
    weights = np.full(n_detectors, 1.0 / n_detectors) if split is None else np.asarray(split, float)
    if weights.size != n_detectors or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError("split must be a probability vector with one entry per detector")
    n = np.arange(cutoff + 1)
    detectors = range(n_detectors)

    def all_silent(group) -> np.ndarray:
        # numpy gives 0.0 ** 0 == 1, i.e. no photons means certainly silent
        remaining = 1.0 - sum(weights[i] for i in group)
        return (1 - dark_rate) ** len(group) * max(remaining, 0.0) ** n

    diag = np.zeros(cutoff + 1)
    for firing in itertools.combinations(detectors, k_clicks):
        silent = [i for i in detectors if i not in firing]
        for size in range(k_clicks + 1):
            for extra in itertools.combinations(firing, size):
                diag += (-1) ** size * all_silent(silent + list(extra))
    return diagonal_operator(diag)


@dataclass(frozen=True)
class Detector:
    """Heralding detector on one arm.

    ``ideal`` resolves photon number exactly; ``multiplexed`` splits the arm
    onto ``n_detectors`` binary detectors and heralds ``m`` photons on ``m``
    clicks (for m = 1, ``m1_rule`` selects exactly one or at least one click).
    """

    kind: str = IDEAL
    n_detectors: int = 2
    dark_rate: float = 0.0
    split: Optional[Tuple[float, ...]] = None
    m1_rule: str = "exactly"

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}; expected one of {DETECTOR_KINDS}")
        if self.m1_rule not in ("exactly", "at-least"):
            raise ValueError("m1_rule must be 'exactly' or 'at-least'")
        if self.split is not None:
            object.__setattr__(self, "split", tuple(float(s) for s in self.split))

    def herald_povm(self, m: int, cutoff: int) -> np.ndarray:
        """Diagonal of the POVM element heralding ``m`` photons."""
        if self.kind == IDEAL:
            diag = np.zeros(cutoff + 1)
            if m <= cutoff:
                diag[m] = 1.0
            return diag
        if m > self.n_detectors:
            raise ValueError(f"{self.n_detectors} binary detectors cannot herald {m} photons")
        povm = lambda k: click_povm(self.n_detectors, k, self.dark_rate, cutoff, self.split)
        if m == 1 and self.m1_rule == "at-least":
            return sum(povm(k).matrix.diagonal().real for k in range(1, self.n_detectors + 1))
        return povm(m).matrix.diagonal().real.copy()


@dataclass(frozen=True)
class HeraldOutcome:
    state: DensityOperator
    probability: float
    stage_log: Tuple[dict, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    r: float = 0.05
    T: float = 0.9
    m_add: int = 1
    m_sub: int = 1
    alpha: complex = 0.0
    detector: str = IDEAL
    add_detector: Optional[str] = None
    sub_detector: Optional[str] = None
    n_detectors: int = 2
    dark_rate: float = 0.0
    split_ratio: float = 0.5
    m1_rule: str = "exactly"
    cutoff: Optional[int] = None

    def __post_init__(self):
        if self.r < 0 or not math.isfinite(self.r):
            raise ValueError("r must be finite and >= 0")
        if not 0 < self.T <= 1:
            raise ValueError("T must lie in (0, 1]")
        if self.m_add < 0 or self.m_sub < 0:
            raise ValueError("photon numbers must be non-negative")
        if not 0 < self.split_ratio < 1:
            raise ValueError("split_ratio must lie in (0, 1)")
        object.__setattr__(self, "alpha", complex(self.alpha))
        for kind in (self.detector, self.add_detector, self.sub_detector):
            if kind is not None and kind not in DETECTOR_KINDS:
                raise ValueError(f"unknown detector kind {kind!r}")

    @property
    def t(self) -> float:
        return math.sqrt(self.T)

    @property
    def in_experimental_range(self) -> bool:
        return EXPERIMENT_T_RANGE[0] <= self.T <= EXPERIMENT_T_RANGE[1]

    def _detector(self, kind: Optional[str]) -> Detector:
        kind = kind or self.detector
        split = None
        if self.n_detectors == 2:
            split = (self.split_ratio, 1 - self.split_ratio)
        return Detector(kind, self.n_detectors, self.dark_rate, split, self.m1_rule)

    @property
    def addition_detector(self) -> Detector:
        return self._detector(self.add_detector)

    @property
    def subtraction_detector(self) -> Detector:
        return self._detector(self.sub_detector)

    def input_cutoff(self) -> int:
        if self.cutoff is not None:
            return int(self.cutoff)
        return default_cutoff(self.alpha, max(self.m_add, self.m_sub))


def _herald(
    rho: DensityOperator, kraus: Sequence[np.ndarray], povm: np.ndarray
) -> Tuple[DensityOperator, np.ndarray]:
    """Unnormalized conditional state and per-ancilla-number probabilities."""
    out = np.zeros_like(kraus[0], dtype=complex)
    parts = np.zeros(len(kraus))
    for j, k in enumerate(kraus):
        if povm[j] == 0:
            continue
        term = k @ rho.matrix @ k.conj().T
        parts[j] = povm[j] * np.trace(term).real
        out += povm[j] * term
    return DensityOperator(out), parts


def _finish(stage: dict, unnormalized: DensityOperator, parts: np.ndarray) -> HeraldOutcome:
    prob = float(parts.sum())
    if not prob > 0:
        raise ZeroProbabilityError(f"{stage['stage']} heralding event has zero probability")
    stage = dict(stage, probability=prob, ancilla_probabilities=parts.tolist())
    return HeraldOutcome(unnormalized.normalize(), prob, (stage,))


def idler_cutoff_for(r: float, m: int) -> int:
    lam = math.tanh(r)
    if lam == 0:
        return m + 2
    needed = math.ceil(math.log(1e-9) / math.log(lam)) if lam < 1 else 400
    return int(max(m + 4, needed))


def add_photons(
    state: Union[FockVector, DensityOperator],
    m: int,
    r: float,
    detector: Detector = Detector(),
    output_cutoff: Optional[int] = None,
    idler_cutoff: Optional[int] = None,
) -> HeraldOutcome:
    """Heralded addition of ``m`` photons through SPDC with squeezing ``r``."""
    rho = DensityOperator.from_state(state)
    if m == 0:
        return HeraldOutcome(rho.normalize(), 1.0, ({"stage": "add", "m": 0, "probability": 1.0},))
    n_out = rho.cutoff + m + 2 if output_cutoff is None else int(output_cutoff)
    if n_out < rho.cutoff:
        raise CutoffError("output cutoff smaller than input cutoff")
    n_idler = idler_cutoff_for(r, m) if idler_cutoff is None else int(idler_cutoff)
    if n_idler < m:
        raise CutoffError(f"idler cutoff {n_idler} cannot hold {m} photons")
    rho = rho.with_cutoff(n_out)
    if r == 0:
        raise ZeroProbabilityError("photon addition with r = 0 never heralds")
    squeezer = two_mode_squeezer(r, (n_out, n_idler))
    t4 = squeezer.tensor4()
    kraus = [t4[:, j, :, 0] for j in range(n_idler + 1)]
    povm = detector.herald_povm(m, n_idler)
    unnorm, parts = _herald(rho, kraus, povm)
    stage = {"stage": "add", "m": m, "r": r, "detector": detector.kind}
    outcome = _finish(stage, unnorm, parts)
    contamination = float(1 - parts[m] / parts.sum()) if parts.sum() > 0 else 0.0
    if contamination > MULTI_PAIR_WARNING:
        warnings.warn(
            f"multi-pair contamination {contamination:.2e} exceeds {MULTI_PAIR_WARNING:g} at r={r}",
            RuntimeWarning,
            stacklevel=2,
        )
    log = dict(outcome.stage_log[0], contamination=contamination)
    return replace(outcome, stage_log=(log,))


def subtract_photons(
    state: Union[FockVector, DensityOperator],
    m: int,
    T: float,
    detector: Detector = Detector(),
) -> HeraldOutcome:
    """Heralded subtraction of ``m`` photons on a beam splitter of transmittance ``T``.

    With an ideal photon-number-resolving herald the conditional map is
    proportional to ``t^n a^m`` (noiseless attenuation times subtraction).
    """
    rho = DensityOperator.from_state(state)
    if m == 0:
        return HeraldOutcome(rho.normalize(), 1.0, ({"stage": "subtract", "m": 0, "probability": 1.0},))
    if not 0 < T <= 1:
        raise ValueError(f"T must lie in (0, 1], got {T}")
    if T == 1:
        raise ZeroProbabilityError("subtraction with T = 1 never heralds")
    n = rho.cutoff
    bs = beam_splitter(T, (n, n))
    t4 = bs.tensor4()
    kraus = [t4[:, j, :, 0] for j in range(n + 1)]
    povm = detector.herald_povm(m, n)
    unnorm, parts = _herald(rho, kraus, povm)
    stage = {"stage": "subtract", "m": m, "T": T, "detector": detector.kind}
    return _finish(stage, unnorm, parts)


def run_pipeline(config: ExperimentConfig) -> HeraldOutcome:
    """Coherent input, heralded addition, then heralded subtraction."""
    cutoff = config.input_cutoff()
    psi = coherent_state(config.alpha, cutoff)
    added = add_photons(psi, config.m_add, config.r, config.addition_detector)
    subtracted = subtract_photons(added.state, config.m_sub, config.T, config.subtraction_detector)
    log = added.stage_log + subtracted.stage_log
    return HeraldOutcome(subtracted.state, added.probability * subtracted.probability, log)


def ideal_target(config: ExperimentConfig, cutoff: Optional[int] = None) -> FockVector:
    """Ideal ``G_m |t alpha>`` the pipeline approximates (requires m_add == m_sub)."""
    if config.m_add != config.m_sub:
        raise ValueError("ideal target defined only for equal addition and subtraction orders")
    spec = AmplifierSpec(max(config.m_add, 1), config.t * config.alpha)
    if config.m_add == 0:
        return coherent_state(config.t * config.alpha, cutoff or config.input_cutoff())
    return amplified_state(spec, cutoff)


def pipeline_fidelity(config: ExperimentConfig) -> float:
    outcome = run_pipeline(config)
    target = ideal_target(config, outcome.state.cutoff)
    return fidelity(outcome.state, target)


def success_probability_scan(
    base: ExperimentConfig = ExperimentConfig(),
    r: Iterable[float] = (0.05,),
    T: Iterable[float] = (0.9,),
    m: Iterable[int] = (1, 2),
    alpha: Iterable[complex] = (1.0,),
) -> List[dict]:
    """Success probability for every point of the ``r x T x m x alpha`` grid."""
    rows = []
    for rv, tv, mv, av in itertools.product(list(r), list(T), list(m), list(alpha)):
        cfg = replace(base, r=rv, T=tv, m_add=mv, m_sub=mv, alpha=av)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            outcome = run_pipeline(cfg)
        rows.append({"r": rv, "T": tv, "m": mv, "alpha": av, "probability": outcome.probability})
    return rows
