"""Command-line entry point: figure tables and end-to-end simulated experiments.

Every table command writes CSV (``#`` comment header, then one header row)
or JSON. When output goes to a file, a ``<file>.manifest.json`` sidecar
records the command, parameters, seed, version and SHA-256 of the outputs.
Nothing time-dependent is recorded, so identical runs give identical bytes.

Exit codes: 0 success, 2 bad arguments, 3 numeric failure (non-convergence,
zero heralding probability, cutoff too small), 4 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .amplifier import (
    ADD_SUBTRACT,
    MULTIPLEXED,
    AmplifierSpec,
    amplified_state,
    coherent_fidelity,
    deterministic_bound,
    displaced_photon_distribution,
    displaced_probabilities_closed_form,
    gain,
    mutual_fidelity,
    quadrature_variances,
)
from .fock import (
    CutoffError,
    DensityOperator,
    FockVector,
    ZeroProbabilityError,
    coherent_state,
    fock_state,
    vacuum,
)
from .herald import DETECTOR_KINDS, ExperimentConfig, ideal_target, run_pipeline
from .tomography import maxlik_reconstruct, report_metrics, sample_quadratures, sidecar
from .wigner import squeezing_ellipse, wigner

OUTPUT_DIR_ENV = "NOISELESS_AMP_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_CONFIG = 4


class UsageError(Exception):
    """Bad command-line values (exit code 2)."""


class NumericError(Exception):
    """A computation did not meet its own accuracy or convergence check (exit 3)."""


class ConfigError(Exception):
    """Unreadable or invalid configuration file (exit 4)."""


# --------------------------------------------------------------------------
# Argument parsing helpers
# --------------------------------------------------------------------------


def parse_range(text: str) -> np.ndarray:
    """``min:max:step`` (endpoints inclusive within step/2) or a single value."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad range {text!r}: expected min:max:step") from None
    if len(values) == 1:
        values = [values[0], values[0], 1.0]
    if len(values) != 3 or not all(math.isfinite(v) for v in values):
        raise UsageError(f"bad range {text!r}: expected min:max:step")
    lo, hi, step = values
    if step <= 0:
        raise UsageError(f"bad range {text!r}: step must be positive")
    if hi < lo:
        raise UsageError(f"bad range {text!r}: max is below min")
    count = int(math.floor((hi - lo) / step + 0.5)) + 1
    if count > 1_000_000:
        raise UsageError(f"bad range {text!r}: too many points")
    return np.round(lo + step * np.arange(count), 12)


def _amplitudes(text: str) -> np.ndarray:
    alphas = parse_range(text)
    if np.any(alphas < 0):
        raise UsageError("amplitudes are magnitudes and must be >= 0")
    return alphas


def _spec_for(args, alpha: float) -> AmplifierSpec:
    if args.variant == MULTIPLEXED:
        return AmplifierSpec(2, alpha, MULTIPLEXED)
    return AmplifierSpec(args.m, alpha)


def _label(args) -> str:
    return "multiplexed" if args.variant == MULTIPLEXED else f"m={args.m}"


# --------------------------------------------------------------------------
# Table output
# --------------------------------------------------------------------------


@dataclass
class Table:
    figure: str
    columns: List[str]
    rows: List[List[object]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# figure: {self.figure}\n")
        out.write(f"# tool: noiseless-amp {__version__}\n")
        for note in self.notes:
            out.write(f"# {note}\n")
        out.write(",".join(self.columns) + "\n")
        for row in self.rows:
            out.write(",".join(_fmt(v) for v in row) + "\n")
        for key, value in self.summary.items():
            out.write(f"# summary: {key}={_fmt(value)}\n")
        return out.getvalue()

    def to_json(self) -> str:
        doc = {
            "figure": self.figure,
            "tool": f"noiseless-amp {__version__}",
            "notes": self.notes,
            "columns": self.columns,
            "rows": [[_jsonable(v) for v in row] for row in self.rows],
            "summary": {k: _jsonable(v) for k, v in self.summary.items()},
        }
        return json.dumps(doc, indent=2) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_manifest(path: Path, command: str, params: dict, seed, outputs: Dict[str, bytes]) -> Path:
    manifest = {
        "command": command,
        "parameters": {k: _jsonable(v) for k, v in sorted(params.items())},
        "seed": seed,
        "version": __version__,
        "outputs": {name: _sha256(data) for name, data in sorted(outputs.items())},
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _params(args) -> dict:
    skip = {"handler", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _output_path(args, default_name: str) -> Optional[Path]:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / default_name
    return None


def emit(args, text: str, stdout) -> None:
    """Write a table to ``--out`` (plus manifest) or to standard output."""
    ext = "json" if args.format == "json" else "csv"
    path = _output_path(args, f"{args.command}.{ext}")
    if path is None:
        stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode()
    path.write_bytes(data)
    manifest = path.with_name(path.name + ".manifest.json")
    write_manifest(manifest, args.command, _params(args), getattr(args, "seed", None), {path.name: data})


# --------------------------------------------------------------------------
# Figure commands
# --------------------------------------------------------------------------


def cmd_gain_curve(args) -> Table:
    table = Table(
        f"amplification gain versus |alpha| ({_label(args)})",
        ["alpha", "gain_closed_form", "gain_numeric", "abs_diff"],
    )
    for a in _amplitudes(args.alpha):
        spec = _spec_for(args, a)
        closed = gain(spec, method="closed_form")
        numeric = gain(spec, method="numeric")
        diff = abs(closed - numeric)
        if diff >= 1e-9:
            raise NumericError(f"closed form and Fock path disagree by {diff:.2e} at alpha={a}")
        table.rows.append([a, closed, numeric, diff])
    return table


def cmd_variance_curve(args) -> Table:
    table = Table(
        f"quadrature variances versus |alpha| ({_label(args)})",
        ["alpha", "Vx", "Vp", "Vdet"],
        notes=["Vx and Vp at the phase of alpha; Vdet = g^2 - 1/2 for a deterministic amplifier of equal gain"],
    )
    for a in _amplitudes(args.alpha):
        spec = _spec_for(args, a)
        vx, vp = quadrature_variances(spec, method="closed_form")
        nx, np_ = quadrature_variances(spec, method="numeric")
        if max(abs(vx - nx), abs(vp - np_)) >= 1e-9:
            raise NumericError(f"variance closed form and Fock path disagree at alpha={a}")
        vdet = deterministic_bound(gain(spec, method="closed_form"))
        if not vp < vdet:
            raise NumericError(f"Vp={vp} is not below Vdet={vdet} at alpha={a}")
        table.rows.append([a, vx, vp, vdet])
    return table


def cmd_photon_dist(args) -> Table:
    table = Table(
        f"photon-number distribution of the inversely displaced amplified state ({_label(args)})",
        ["alpha", "p0", "p1", "p2", "residual"],
        notes=["residual = 1 - (p0 + p1 + p2)"],
    )
    best = (0.0, -1.0)
    for a in _amplitudes(args.alpha):
        spec = _spec_for(args, a)
        probs = displaced_photon_distribution(spec)
        closed = np.zeros(3)
        cf = displaced_probabilities_closed_form(spec)
        closed[: cf.size] = cf
        if np.max(np.abs(closed - probs[:3])) >= 1e-9:
            raise NumericError(f"displaced distribution closed form disagrees at alpha={a}")
        residual = 1.0 - float(probs[:3].sum())
        table.rows.append([a, probs[0], probs[1], probs[2], residual])
        if probs[2] > best[1]:
            best = (a, float(probs[2]))
    table.summary = {"max_p2": best[1], "alpha_at_max_p2": best[0]}
    return table


def cmd_fidelity_comparison(args) -> Table:
    table = Table(
        "mutual fidelity of the add-subtract and multiplexed amplifiers, with coherent-state fidelities",
        ["alpha", "F_mutual", "F_coh_m1", "F_coh_m2"],
    )
    columns: Tuple[List[float], ...] = ([], [], [])
    for a in _amplitudes(args.alpha):
        fm = mutual_fidelity(a)
        closed = mutual_fidelity(a, method="closed_form")
        if abs(fm - closed) >= 1e-9:
            raise NumericError(f"mutual fidelity closed form disagrees at alpha={a}")
        f1 = coherent_fidelity(AmplifierSpec(1, a))
        f2 = coherent_fidelity(AmplifierSpec(2, a))
        table.rows.append([a, fm, f1, f2])
        for col, value in zip(columns, (fm, f1, f2)):
            col.append(value)
    table.summary = {
        "min_F_mutual": min(columns[0]),
        "min_F_coh_m1": min(columns[1]),
        "min_F_coh_m2": min(columns[2]),
    }
    return table


def _wigner_state(args):
    cutoff = args.cutoff
    if args.state == "vacuum":
        return vacuum(cutoff or 10)
    if args.state == "fock":
        return fock_state(args.n, cutoff or args.n + 10)
    if args.state == "coherent":
        return coherent_state(args.alpha, cutoff)
    return amplified_state(_spec_for(args, args.alpha), cutoff)


def cmd_wigner(args) -> Table:
    x = parse_range(args.x)
    p = parse_range(args.p)
    state = _wigner_state(args)
    grid = wigner(state, x, p, workers=args.threads)
    ellipse = squeezing_ellipse(state, float(np.angle(args.alpha)))
    label = {
        "vacuum": "vacuum",
        "fock": f"Fock |{args.n}>",
        "coherent": f"coherent alpha={args.alpha!r}",
        "amplified": f"amplified {_label(args)}, alpha={args.alpha!r}",
    }[args.state]
    notes = [
        f"state: {label}",
        f"ellipse: major={ellipse.major!r} minor={ellipse.minor!r} "
        f"minor_angle={ellipse.minor_angle!r} defined={str(ellipse.defined).lower()}",
        f"integral: {grid.riemann_sum()!r}",
    ]
    if args.layout == "long":
        columns = ["x", "p", "W"]
        rows = [[xv, pv, w] for xv, row in zip(x, grid.values) for pv, w in zip(p, row)]
    else:
        notes.append("layout: matrix; first column x, remaining columns W at the p values in the header")
        columns = ["x\\p"] + [_fmt(float(v)) for v in p]
        rows = [[xv] + list(row) for xv, row in zip(x, grid.values)]
    return Table("Wigner function (amplified coherent states and reference states)", columns, rows, notes)


# --------------------------------------------------------------------------
# Simulation config
# --------------------------------------------------------------------------


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_kind(text: str) -> Optional[str]:
    text = text.strip()
    if not text:
        return None
    if text not in DETECTOR_KINDS:
        raise ValueError(f"expected one of {', '.join(DETECTOR_KINDS)}")
    return text


def _kind(text: str) -> str:
    kind = _optional_kind(text)
    if kind is None:
        raise ValueError("missing detector kind")
    return kind


def _m1_rule(text: str) -> str:
    text = text.strip()
    if text not in ("exactly", "at-least"):
        raise ValueError("expected 'exactly' or 'at-least'")
    return text


EXPERIMENT_KEYS: Dict[str, Callable[[str], object]] = {
    "alpha": complex,
    "r": float,
    "T": float,
    "m": int,
    "m_add": int,
    "m_sub": int,
    "detector": _kind,
    "add_detector": _optional_kind,
    "sub_detector": _optional_kind,
    "n_detectors": int,
    "dark_rate": float,
    "split_ratio": float,
    "m1_rule": _m1_rule,
    "cutoff": int,
}

TOMOGRAPHY_KEYS: Dict[str, Callable[[str], object]] = {
    "enabled": _bool,
    "eta": float,
    "phases": int,
    "samples_per_phase": int,
    "seed": int,
    "cutoff": int,
    "compensate": _bool,
    "max_iter": int,
    "tol": float,
    "bin_width": float,
}


@dataclass(frozen=True)
class TomographySettings:
    enabled: bool = False
    eta: float = 1.0
    phases: int = 12
    samples_per_phase: int = 10_000
    seed: int = 0
    cutoff: int = 20
    compensate: bool = True
    max_iter: int = 2000
    tol: float = 1e-6
    bin_width: float = 0.05


@dataclass(frozen=True)
class SimulationConfig:
    experiment: ExperimentConfig
    tomography: TomographySettings
    source: dict


def _key_line(lines: Sequence[str], section: str, key: Optional[str]) -> int:
    current = None
    for number, line in enumerate(lines, 1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return number
            continue
        if current == section and key is not None:
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return number
    return 0


def load_config(path: Path) -> SimulationConfig:
    """Read an INI-style simulation config with ``[experiment]`` and ``[tomography]``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    lines = text.splitlines()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: expected a [section] header first") from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.message}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{path}:{lineno}: cannot parse line {line.strip()!r}") from None

    schema = {"experiment": EXPERIMENT_KEYS, "tomography": TOMOGRAPHY_KEYS}
    for section in parser.sections():
        if section not in schema:
            line = _key_line(lines, section, None)
            raise ConfigError(f"{path}:{line}: unknown section [{section}]")
    if not parser.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")

    values: Dict[str, dict] = {"experiment": {}, "tomography": {}}
    for section, keys in schema.items():
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            line = _key_line(lines, section, key)
            if key not in keys:
                raise ConfigError(f"{path}:{line}: [{section}] unknown key {key!r}")
            try:
                values[section][key] = keys[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{line}: [{section}] {key}: {exc}") from None

    exp = dict(values["experiment"])
    if "m" in exp:
        m = exp.pop("m")
        exp.setdefault("m_add", m)
        exp.setdefault("m_sub", m)
    try:
        experiment = ExperimentConfig(**exp)
        tomography = TomographySettings(**values["tomography"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid configuration: {exc}") from None
    if not 0 < tomography.eta <= 1:
        raise ConfigError(f"{path}:{_key_line(lines, 'tomography', 'eta')}: [tomography] eta must lie in (0, 1]")
    if tomography.phases < 1 or tomography.samples_per_phase < 1:
        raise ConfigError(f"{path}: [tomography] phases and samples_per_phase must be positive")
    source = {f"{s}.{k}": parser.get(s, k) for s in parser.sections() for k in parser.options(s)}
    return SimulationConfig(experiment, tomography, source)


def _dominant_vector(rho: DensityOperator) -> FockVector:
    vals, vecs = np.linalg.eigh(rho.matrix)
    return FockVector(vecs[:, -1])


def _metric_row(record: Optional[dict], key: str):
    if record is None:
        return ""
    return record.get(key, "")


def cmd_simulate(args, stdout) -> int:
    config = load_config(Path(args.config))
    exp, tomo = config.experiment, config.tomography
    out_dir = Path(args.out or os.environ.get(OUTPUT_DIR_ENV) or "simulation")
    out_dir.mkdir(parents=True, exist_ok=True)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        outcome = run_pipeline(exp)
    reference_alpha = exp.t * exp.alpha
    target = ideal_target(exp, outcome.state.cutoff) if exp.m_add == exp.m_sub else None

    records: Dict[str, Optional[dict]] = {"pipeline": None, "reconstructed": None, "ideal": None}
    if target is not None:
        records["pipeline"] = report_metrics(outcome.state, target, reference_alpha).as_dict()
        records["ideal"] = report_metrics(target, target, reference_alpha).as_dict()

    outputs: Dict[str, bytes] = {}
    converged = True
    iterations = None
    if tomo.enabled:
        phases = tuple(math.pi * k / tomo.phases for k in range(tomo.phases))
        dataset = sample_quadratures(outcome.state, tomo.eta, phases, tomo.samples_per_phase, tomo.seed)
        result = maxlik_reconstruct(
            dataset,
            tomo.cutoff,
            compensate_eta=tomo.compensate,
            max_iter=tomo.max_iter,
            tol=tomo.tol,
            bin_width=tomo.bin_width,
        )
        converged, iterations = result.converged, result.iterations
        reference = target if target is not None else _dominant_vector(outcome.state)
        records["reconstructed"] = report_metrics(result.rho, reference, reference_alpha).as_dict()
        dataset_path = out_dir / "quadratures.csv"
        dataset.to_csv(dataset_path)
        outputs[dataset_path.name] = dataset_path.read_bytes()
        meta = sidecar(dataset_path)
        outputs[meta.name] = meta.read_bytes()
        ll_path = out_dir / "log_likelihood.csv"
        ll_text = "iteration,log_likelihood\n" + "".join(
            f"{i},{v!r}\n" for i, v in enumerate(result.log_likelihood)
        )
        ll_path.write_text(ll_text)
        outputs[ll_path.name] = ll_text.encode()

    metrics = Table(
        "heralded amplifier simulation with homodyne tomography round trip",
        ["metric", "pipeline", "reconstructed", "ideal"],
        notes=[
            f"success_probability={outcome.probability!r}",
            f"reference: ideal amplified state at t*alpha={reference_alpha!r}; gain relative to t*alpha",
        ],
    )
    keys = ["F", "P", "gain", "Vx", "Vp", "p0", "p1", "p2"]
    for key in keys:
        metrics.rows.append([key] + [_metric_row(records[name], key) for name in records])
    if iterations is not None:
        metrics.summary = {"iterations": iterations, "converged": converged}
    metrics_text = metrics.render(args.format).encode()
    metrics_name = "metrics." + ("json" if args.format == "json" else "csv")
    (out_dir / metrics_name).write_bytes(metrics_text)
    outputs[metrics_name] = metrics_text

    outcome_doc = {
        "probability": outcome.probability,
        "stages": [{k: _jsonable(v) for k, v in stage.items()} for stage in outcome.stage_log],
        "warnings": sorted({str(w.message) for w in caught}),
    }
    outcome_text = (json.dumps(outcome_doc, indent=2, sort_keys=True, default=str) + "\n").encode()
    (out_dir / "outcome.json").write_bytes(outcome_text)
    outputs["outcome.json"] = outcome_text

    params = {"config": str(args.config), "format": args.format}
    params.update(config.source)
    write_manifest(out_dir / "manifest.json", "simulate", params, tomo.seed if tomo.enabled else None, outputs)
    stdout.write(metrics_text.decode())
    if not converged:
        raise NumericError(f"MaxLik did not converge within {tomo.max_iter} iterations")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help=f"output file (default: ${OUTPUT_DIR_ENV}/<command>.<ext> or stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")


def _add_amplifier(p: argparse.ArgumentParser, alpha_default: str) -> None:
    p.add_argument("--m", type=int, choices=(1, 2), default=2, help="amplifier order")
    p.add_argument("--variant", choices=(ADD_SUBTRACT, MULTIPLEXED), default=ADD_SUBTRACT)
    p.add_argument("--alpha", default=alpha_default, help="amplitude range min:max:step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noiseless-amp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"noiseless-amp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gain-curve", help="closed-form and numeric amplification gain")
    _add_amplifier(p, "0:2:0.1")
    _add_common(p)
    p.set_defaults(handler=cmd_gain_curve)

    p = sub.add_parser("variance-curve", help="quadrature variances against the deterministic bound")
    _add_amplifier(p, "0:2:0.1")
    _add_common(p)
    p.set_defaults(handler=cmd_variance_curve)

    p = sub.add_parser("photon-dist", help="displaced-frame photon-number distribution")
    _add_amplifier(p, "0:2:0.05")
    _add_common(p)
    p.set_defaults(handler=cmd_photon_dist)

    p = sub.add_parser("fidelity-comparison", help="mutual and coherent-state fidelities")
    p.add_argument("--alpha", default="0:3:0.05", help="amplitude range min:max:step")
    _add_common(p)
    p.set_defaults(handler=cmd_fidelity_comparison)

    p = sub.add_parser("wigner", help="Wigner function on a grid")
    p.add_argument("--state", choices=("amplified", "coherent", "fock", "vacuum"), default="amplified")
    p.add_argument("--m", type=int, choices=(1, 2), default=2)
    p.add_argument("--variant", choices=(ADD_SUBTRACT, MULTIPLEXED), default=ADD_SUBTRACT)
    p.add_argument("--alpha", type=float, default=0.77, help="input amplitude (real)")
    p.add_argument("--n", type=int, default=1, help="photon number for --state fock")
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--x", default="-5:5:0.1", help="x axis min:max:step")
    p.add_argument("--p", default="-5:5:0.1", help="p axis min:max:step")
    p.add_argument("--layout", choices=("matrix", "long"), default="matrix")
    _add_common(p)
    p.set_defaults(handler=cmd_wigner)

    p = sub.add_parser("simulate", help="heralded pipeline with optional tomography round trip")
    p.add_argument("--config", required=True, help="INI file with [experiment] and [tomography]")
    p.add_argument("--out", help=f"output directory (default: ${OUTPUT_DIR_ENV} or ./simulation)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    p.set_defaults(handler=None)
    return parser


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "threads", 1) < 0:
            raise UsageError("--threads must be >= 0")
        if args.command == "simulate":
            return cmd_simulate(args, stdout)
        if getattr(args, "cutoff", None) is not None and args.cutoff < 1:
            raise UsageError("--cutoff must be positive")
        table = args.handler(args)
        emit(args, table.render(args.format), stdout)
        return EXIT_OK
    except (UsageError, ValueError) as exc:
        stderr.write(f"noiseless-amp: error: {exc}\n")
        return EXIT_USAGE
    except ConfigError as exc:
        stderr.write(f"noiseless-amp: config error: {exc}\n")
        return EXIT_CONFIG
    except (NumericError, ZeroProbabilityError, CutoffError) as exc:
        stderr.write(f"noiseless-amp: numeric error: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
