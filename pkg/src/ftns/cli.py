"""Command-line front end.

Verbs: simulate, reconstruct, compare, sweep, oracle. Every verb reads one
JSON run configuration, writes delimited output plus a JSON report into the
output directory, and renders a PNG figure next to them. Outputs are
deterministic for a fixed config and seed: repeated runs produce identical
bytes.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ddns as ddns_mod
from .echo import reconstruct_se, reconstruct_with_one_over_f
from .fid import ReconstructedSpectrum, load_spectrum, reconstruct_fid, save_spectrum, trace_provenance
from .forward import (
    CoherenceTrace,
    MeasurementPlan,
    PulseSequence,
    load_trace,
    save_trace,
    sequence_from_obj,
    sequence_to_obj,
    simulate_trace,
)
from .spectra import OneOverF, SpectrumModel, closed_form_chi, model_from_dict
from .traceprep import MitigationConfig

_METHODS = ("fid_ftns", "se_ftns", "se_ftns_1f", "ddns_as", "ddns_delta")
_RUN_KEYS = {
    "schema_version",
    "name",
    "spectrum",
    "sequence",
    "plan",
    "method",
    "pad_factor",
    "epsilon",
    "mitigation",
    "ddns",
    "trace_file",
    "trace_sha256",
    "band",
}


@dataclass
class RunSpec:
    model: SpectrumModel
    sequence: PulseSequence | None
    plan: MeasurementPlan | None
    method: str | None
    pad_factor: int
    epsilon: float | None
    mitigation: MitigationConfig | None
    ddns: ddns_mod.DDNSPlan | None
    trace_file: str | None
    trace_sha256: str | None
    band: tuple[float, float] | None
    name: str
    raw: dict


def _build(cls, doc: dict, label: str):
    if not isinstance(doc, dict):
        raise ValueError(f"'{label}' must be a JSON object")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ValueError(f"bad '{label}' section: {exc}") from exc


def _config_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _parse_run(doc: dict, *, name: str = "run", seed_override: int | None = None) -> RunSpec:
    if not isinstance(doc, dict):
        raise ValueError("run configuration must be a JSON object")
    unknown = set(doc) - _RUN_KEYS
    if unknown:
        raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    version = doc.get("schema_version", 1)
    if version != 1:
        raise ValueError(f"unsupported schema_version {version!r}")
    if "spectrum" not in doc:
        raise ValueError("configuration needs a 'spectrum' section")
    model = model_from_dict(doc["spectrum"])

    sequence = sequence_from_obj(doc["sequence"]) if "sequence" in doc else None
    plan = _build(MeasurementPlan, doc["plan"], "plan") if "plan" in doc else None
    if seed_override is not None and plan is not None:
        plan = dataclasses.replace(plan, seed=seed_override)

    method = doc.get("method")
    if method is not None and method not in _METHODS:
        raise ValueError(f"unknown method {method!r}; choose one of {', '.join(_METHODS)}")

    pad_factor = doc.get("pad_factor", 8)
    if not isinstance(pad_factor, int) or pad_factor < 1:
        raise ValueError(f"pad_factor must be a positive integer, got {pad_factor!r}")

    epsilon = doc.get("epsilon")
    if epsilon is not None and (not isinstance(epsilon, (int, float)) or epsilon <= 0):
        raise ValueError(f"epsilon must be a positive number, got {epsilon!r}")

    mitigation = None
    if doc.get("mitigation") is not None:
        mdoc = dict(doc["mitigation"])
        if isinstance(mdoc.get("tail_window"), list):
            mdoc["tail_window"] = tuple(mdoc["tail_window"])
        mitigation = _build(MitigationConfig, mdoc, "mitigation")

    ddns_plan = None
    if doc.get("ddns") is not None:
        ddns_plan = _build(ddns_mod.DDNSPlan, doc["ddns"], "ddns")

    band = None
    if doc.get("band") is not None:
        raw_band = doc["band"]
        if not (isinstance(raw_band, list) and len(raw_band) == 2):
            raise ValueError("'band' must be a [low, high] pair")
        band = (float(raw_band[0]), float(raw_band[1]))
        if not band[0] < band[1]:
            raise ValueError("'band' must satisfy low < high")

    run = RunSpec(
        model=model,
        sequence=sequence,
        plan=plan,
        method=method,
        pad_factor=pad_factor,
        epsilon=epsilon,
        mitigation=mitigation,
        ddns=ddns_plan,
        trace_file=doc.get("trace_file"),
        trace_sha256=doc.get("trace_sha256"),
        band=band,
        name=str(doc.get("name", name)),
        raw=doc,
    )
    _check_method_sequence(run)
    return run


def _check_method_sequence(run: RunSpec) -> None:
    from .forward import FID, CPMG, SpinEcho

    if run.method is None:
        return
    if run.method == "fid_ftns":
        if run.sequence is None:
            run.sequence = FID()
        elif not isinstance(run.sequence, FID):
            raise ValueError("method 'fid_ftns' needs sequence 'fid'")
    elif run.method in ("se_ftns", "se_ftns_1f"):
        if run.sequence is None:
            run.sequence = SpinEcho()
        elif not isinstance(run.sequence, SpinEcho):
            raise ValueError(f"method {run.method!r} needs sequence 'spin_echo'")
    else:
        if run.ddns is None:
            raise ValueError(f"method {run.method!r} needs a 'ddns' section")
        if run.sequence is not None:
            if not isinstance(run.sequence, CPMG) or run.sequence.n_pulses != run.ddns.n_pulses:
                raise ValueError(
                    "the pulse-train methods need sequence {'cpmg': n} matching ddns.n_pulses"
                )
    if run.method in ("fid_ftns", "se_ftns", "se_ftns_1f") and run.plan is None and run.trace_file is None:
        raise ValueError(f"method {run.method!r} needs a 'plan' section or a 'trace_file'")


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: top level must be a JSON object")
    return doc


def _prepare_out_dir(path: str, force: bool) -> Path:
    out = Path(path)
    if out.exists():
        if not out.is_dir():
            raise ValueError(f"output path {out} exists and is not a directory")
        if any(out.iterdir()) and not force:
            raise ValueError(f"output directory {out} is not empty; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Figures.
# ---------------------------------------------------------------------------


def _figure():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def _save_fig(fig, path: Path) -> None:
    fig.savefig(path, dpi=110, metadata={"Software": None})
    import matplotlib.pyplot as plt

    plt.close(fig)


def _display_limit(model: SpectrumModel | None, omega_max: float) -> float:
    if model is None:
        return omega_max
    hi = 0.0
    for comp in model.components:
        if hasattr(comp, "hwhm"):
            hi = max(hi, abs(comp.d) + 6.0 * comp.hwhm)
        elif hasattr(comp, "sigma"):
            hi = max(hi, abs(comp.mu) + 6.0 * comp.sigma)
        else:
            hi = max(hi, omega_max / 8.0)
    return min(omega_max, max(hi, omega_max / 100.0))


def _render_trace_png(path: Path, trace: CoherenceTrace) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    from .forward import Mask

    for mask_val, label, marker in (
        (Mask.MEASURED, "measured", "."),
        (Mask.WITHHELD, "withheld", "x"),
        (Mask.TRUNCATED, "truncated", "+"),
    ):
        sel = trace.mask == mask_val
        if np.any(sel):
            ax.plot(trace.t[sel], trace.C[sel], marker, ms=3, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("C(t)")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="best")
    fig.tight_layout()
    _save_fig(fig, path)


def _render_spectrum_png(
    path: Path, spec: ReconstructedSpectrum, model: SpectrumModel | None
) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    limit = _display_limit(model, float(spec.omega[-1]) if len(spec.omega) else 1.0)
    sel = spec.omega <= limit
    finite = np.isfinite(spec.S)
    ax.plot(spec.omega[sel & finite], spec.S[sel & finite], label=spec.method)
    if model is not None:
        grid = spec.omega[sel & finite & _evaluable(model, spec.omega)]
        if len(grid):
            ax.plot(grid, model.evaluate(grid), "--", label="model")
    ax.set_xlabel("omega")
    ax.set_ylabel("S(omega)")
    ax.legend(loc="best")
    fig.tight_layout()
    _save_fig(fig, path)


# ---------------------------------------------------------------------------
# Shared run machinery.
# ---------------------------------------------------------------------------


def _peaks(omega: np.ndarray, s: np.ndarray) -> list[dict]:
    """Local maxima at or above 5% of the global maximum."""
    finite = np.isfinite(s)
    if not np.any(finite):
        return []
    threshold = 0.05 * float(np.max(s[finite]))
    out = []
    for i in range(len(s)):
        # grid edges count: a centered peak tops out at the first sample
        left = s[i - 1] if i > 0 else -np.inf
        right = s[i + 1] if i + 1 < len(s) else -np.inf
        if i > 0 and not finite[i - 1]:
            continue
        if not finite[i] or (i + 1 < len(s) and not finite[i + 1]):
            continue
        if s[i] >= left and s[i] > right and s[i] >= threshold:
            out.append({"omega": float(omega[i]), "S": float(s[i])})
    return out


def _evaluable(model: SpectrumModel, omega: np.ndarray) -> np.ndarray:
    """Mask of frequencies where the model is finite (drops 0 for power laws)."""
    if any(isinstance(c, OneOverF) for c in model.components):
        return omega != 0.0
    return np.ones(omega.shape, dtype=bool)


def _error_summary(spec: ReconstructedSpectrum, model: SpectrumModel, band) -> dict:
    omega = spec.omega
    sel = np.isfinite(spec.S) & _evaluable(model, omega)
    if band is not None:
        sel = sel & (omega >= band[0]) & (omega <= band[1])
    if not np.any(sel):
        return {"max_abs_delta": math.nan, "band": list(band) if band else None}
    truth = np.asarray(model.evaluate(omega[sel]))
    delta = np.abs(spec.S[sel] - truth)
    return {
        "max_abs_delta": float(np.max(delta)),
        "rms_delta": float(np.sqrt(np.mean(delta**2))),
        "band": list(band) if band else None,
    }


def _obtain_trace(run: RunSpec) -> CoherenceTrace:
    if run.trace_file is not None:
        trace = load_trace(run.trace_file, run.sequence)
        if run.trace_sha256 is not None:
            actual = trace_provenance(trace)
            if actual != run.trace_sha256:
                raise ValueError(
                    f"trace file {run.trace_file} hashes to {actual}, "
                    f"config expects {run.trace_sha256}"
                )
        return trace
    return simulate_trace(run.model, run.sequence, run.plan)


def _reconstruct(run: RunSpec) -> tuple[ReconstructedSpectrum, CoherenceTrace | None]:
    if run.method == "fid_ftns":
        trace = _obtain_trace(run)
        spec = reconstruct_fid(
            trace, pad_factor=run.pad_factor, mitigation=run.mitigation, epsilon=run.epsilon
        )
        return spec, trace
    if run.method == "se_ftns":
        trace = _obtain_trace(run)
        spec = reconstruct_se(
            trace, pad_factor=run.pad_factor, mitigation=run.mitigation, epsilon=run.epsilon
        )
        return spec, trace
    if run.method == "se_ftns_1f":
        trace = _obtain_trace(run)
        spec = reconstruct_with_one_over_f(
            trace, pad_factor=run.pad_factor, mitigation=run.mitigation, epsilon=run.epsilon
        )
        return spec, trace
    if run.method == "ddns_as":
        return ddns_mod.run_alvarez_suter(run.model, run.ddns), None
    if run.method == "ddns_delta":
        omegas = run.ddns.probe_frequencies()
        values = np.array(
            [ddns_mod.single_delta_probe(run.model, run.ddns, w) for w in omegas]
        )
        spec = ReconstructedSpectrum(
            omega=omegas,
            S=values,
            d_omega=math.nan,
            omega_max=float(math.pi / run.ddns.tau_min),
            t_tilde_max=math.nan,
            method="ddns_delta",
            metadata={"n_pulses": run.ddns.n_pulses},
        )
        return spec, None
    raise ValueError("configuration has no 'method' to reconstruct with")


def _run_one(run: RunSpec, out: Path, config_hash: str) -> dict:
    spec, trace = _reconstruct(run)
    if trace is not None:
        save_trace(trace, out / "trace.csv", run.model)
        _render_trace_png(out / "trace.png", trace)
    save_spectrum(spec, out / "spectrum.csv")
    _render_spectrum_png(out / "spectrum.png", spec, run.model)

    # Peaks respect the band: past it the differentiated measurement noise
    # grows without bound and would both flood the list and set the 5%
    # prominence threshold.
    peak_sel = slice(None)
    if run.band is not None:
        peak_sel = (spec.omega >= run.band[0]) & (spec.omega <= run.band[1])
    report = {
        "config_hash": config_hash,
        "method": spec.method,
        "name": run.name,
        "d_omega": spec.d_omega,
        "omega_max": spec.omega_max,
        "t_tilde_max": spec.t_tilde_max,
        "n_points": int(len(spec.omega)),
        "peaks": _peaks(spec.omega[peak_sel], spec.S[peak_sel]),
        "errors": _error_summary(spec, run.model, run.band),
        "metadata": spec.metadata,
    }
    _write_json(out / "report.json", report)
    return report


# ---------------------------------------------------------------------------
# Verbs.
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    doc = _load_config_file(args.config)
    run = _parse_run(doc, seed_override=args.seed)
    if run.sequence is None:
        raise ValueError("simulate needs a 'sequence'")
    if run.plan is None:
        raise ValueError("simulate needs a 'plan' section")
    out = _prepare_out_dir(args.out, args.force)
    trace = simulate_trace(run.model, run.sequence, run.plan)
    save_trace(trace, out / "trace.csv", run.model)
    _render_trace_png(out / "trace.png", trace)
    _write_json(
        out / "report.json",
        {
            "config_hash": _config_hash(doc),
            "n_samples": int(len(trace.t)),
            "n_measured": int(np.sum(trace.measured())),
            "sequence": sequence_to_obj(run.sequence),
            "trace_sha256": trace_provenance(trace),
        },
    )
    print(f"wrote {out / 'trace.csv'}")
    return 0


def _cmd_reconstruct(args) -> int:
    doc = _load_config_file(args.config)
    run = _parse_run(doc, seed_override=args.seed)
    if run.method is None:
        raise ValueError("reconstruct needs a 'method'")
    out = _prepare_out_dir(args.out, args.force)
    report = _run_one(run, out, _config_hash(doc))
    print(f"wrote {out / 'spectrum.csv'} ({report['method']}, {report['n_points']} points)")
    return 0


def _cmd_compare(args) -> int:
    doc = _load_config_file(args.config)
    if "runs" not in doc or not isinstance(doc["runs"], list) or not doc["runs"]:
        raise ValueError("compare needs a non-empty 'runs' list")
    band = None
    if doc.get("band") is not None:
        band = (float(doc["band"][0]), float(doc["band"][1]))
    runs = [
        _parse_run(rdoc, name=f"run{i}", seed_override=args.seed)
        for i, rdoc in enumerate(doc["runs"])
    ]
    names = [r.name for r in runs]
    if len(set(names)) != len(names):
        raise ValueError("compare runs need distinct names")
    for r in runs:
        if r.method is None:
            raise ValueError(f"compare run {r.name!r} has no 'method'")
    first_spectrum = doc["runs"][0].get("spectrum")
    for i, rdoc in enumerate(doc["runs"][1:], start=1):
        if rdoc.get("spectrum") != first_spectrum and not args.force:
            raise ValueError(
                f"compare run {runs[i].name!r} declares a different spectrum; "
                "pass --force to compare across models"
            )

    out = _prepare_out_dir(args.out, args.force)
    config_hash = _config_hash(doc)
    specs = []
    for run in runs:
        sub = out / "runs" / run.name
        sub.mkdir(parents=True, exist_ok=True)
        _run_one(run, sub, config_hash)
        specs.append(load_spectrum(sub / "spectrum.csv"))

    # Delta table on the first run's grid.
    base = specs[0]
    grid_sel = np.isfinite(base.S) & _evaluable(runs[0].model, base.omega)
    if band is not None:
        grid_sel &= (base.omega >= band[0]) & (base.omega <= band[1])
    grid = base.omega[grid_sel]
    truth = np.asarray(runs[0].model.evaluate(grid))
    header = ["omega", "S_true"]
    columns = [grid, truth]
    summary_runs = []
    for run, spec in zip(runs, specs):
        finite = np.isfinite(spec.S)
        interp = np.interp(grid, spec.omega[finite], spec.S[finite])
        columns.append(interp)
        columns.append(np.abs(interp - truth))
        header.append(f"S_{run.name}")
        header.append(f"delta_{run.name}")
        summary_runs.append(
            {
                "name": run.name,
                "method": run.method,
                "max_abs_delta": float(np.max(np.abs(interp - truth))) if len(grid) else math.nan,
            }
        )

    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(f"{v:.17g}" for v in row))
    (out / "compare.csv").write_text("\n".join(lines) + "\n")
    _write_json(
        out / "compare.json",
        {
            "config_hash": config_hash,
            "band": list(band) if band else None,
            "runs": summary_runs,
            "true_peaks": _peaks(grid, truth),
        },
    )

    plt = _figure()
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(grid, truth, "k--", label="model")
    for run, spec in zip(runs, specs):
        finite = np.isfinite(spec.S)
        sel = finite
        if band is not None:
            sel = sel & (spec.omega >= band[0]) & (spec.omega <= band[1])
        ax.plot(spec.omega[sel], spec.S[sel], label=run.name)
    ax.set_xlabel("omega")
    ax.set_ylabel("S(omega)")
    ax.legend(loc="best")
    fig.tight_layout()
    _save_fig(fig, out / "compare.png")
    print(f"wrote {out / 'compare.csv'} ({len(runs)} runs)")
    return 0


def _cmd_sweep(args) -> int:
    doc = _load_config_file(args.config)
    sweep = doc.get("sweep")
    if not isinstance(sweep, dict) or "axis" not in sweep or "values" not in sweep:
        raise ValueError("sweep needs a 'sweep' section with 'axis' and 'values'")
    axis = sweep["axis"]
    values = sweep["values"]
    if axis not in ("dt", "noise_sigma", "n_pulses"):
        raise ValueError(f"sweep axis must be 'dt', 'noise_sigma' or 'n_pulses', got {axis!r}")
    if not isinstance(values, list) or not values:
        raise ValueError("sweep 'values' must be a non-empty list")

    base_doc = {k: v for k, v in doc.items() if k != "sweep"}
    out = _prepare_out_dir(args.out, args.force)
    config_hash = _config_hash(doc)
    rows = []
    for r, value in enumerate(values):
        rdoc = json.loads(json.dumps(base_doc))  # deep copy
        if axis in ("dt", "noise_sigma"):
            if "plan" not in rdoc:
                raise ValueError(f"sweep axis {axis!r} needs a 'plan' section")
            rdoc["plan"][axis] = value
        else:
            if "ddns" not in rdoc:
                raise ValueError("sweep axis 'n_pulses' needs a 'ddns' section")
            rdoc["ddns"]["n_pulses"] = value
            if "sequence" in rdoc and isinstance(rdoc["sequence"], dict):
                rdoc["sequence"] = {"cpmg": value}
        base_seed = args.seed if args.seed is not None else rdoc.get("plan", {}).get("seed", 0)
        seed_r = int(base_seed) + 10 * r
        run = _parse_run(
            rdoc,
            name=f"{axis}={value:g}",
            seed_override=seed_r if "plan" in rdoc else None,
        )
        if run.method is None:
            raise ValueError("sweep needs a 'method'")
        sub = out / f"run_{r:03d}"
        sub.mkdir(parents=True, exist_ok=True)
        report = _run_one(run, sub, config_hash)
        rows.append(
            {
                "index": r,
                "value": value,
                "seed": seed_r,
                "max_abs_delta": report["errors"].get("max_abs_delta", math.nan),
                "n_peaks": len(report["peaks"]),
            }
        )

    lines = [f"{axis},seed,max_abs_delta,n_peaks"]
    for row in rows:
        lines.append(
            f"{row['value']:.17g},{row['seed']},{row['max_abs_delta']:.17g},{row['n_peaks']}"
        )
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "sweep.json", {"config_hash": config_hash, "axis": axis, "rows": rows})

    plt = _figure()
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    deltas = [row["max_abs_delta"] for row in rows]
    ax.plot([row["value"] for row in rows], deltas, "o-")
    ax.set_xlabel(axis)
    ax.set_ylabel("max |S - S_model|")
    if all(isinstance(v, (int, float)) and v > 0 for v in values):
        ax.set_xscale("log")
    if all(isinstance(d, float) and d > 0 and math.isfinite(d) for d in deltas):
        ax.set_yscale("log")
    fig.tight_layout()
    _save_fig(fig, out / "sweep.png")
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} runs)")
    return 0


def _cmd_oracle(args) -> int:
    doc = _load_config_file(args.config)
    run = _parse_run(doc, seed_override=args.seed)
    out = _prepare_out_dir(args.out, args.force)

    report: dict = {"config_hash": _config_hash(doc)}
    if run.plan is not None and run.sequence is not None:
        t = run.plan.time_grid()
        chi = closed_form_chi(run.model, run.sequence, t)
        source = "closed_form"
        if chi is None:
            from .forward import attenuation

            chi = attenuation(run.model, run.sequence, t)
            source = "quadrature"
        lines = ["t,chi"]
        for ti, xi in zip(t, chi):
            lines.append(f"{ti:.17g},{xi:.17g}")
        (out / "oracle_chi.csv").write_text("\n".join(lines) + "\n")
        report["chi_source"] = source
        report["n_chi_samples"] = int(len(t))

    if run.plan is not None:
        omega_hi = math.pi / run.plan.dt
    elif run.ddns is not None:
        omega_hi = math.pi / run.ddns.tau_min
    else:
        raise ValueError("oracle needs a 'plan' or 'ddns' section to set the frequency band")
    omega = np.linspace(0.0, omega_hi, 2001)
    if any(isinstance(c, OneOverF) for c in run.model.components):
        omega = omega[1:]
    s_true = np.asarray(run.model.evaluate(omega))
    lines = ["omega,S"]
    for w, s in zip(omega, s_true):
        lines.append(f"{w:.17g},{s:.17g}")
    (out / "oracle_spectrum.csv").write_text("\n".join(lines) + "\n")
    report["n_spectrum_samples"] = int(len(omega))
    _write_json(out / "report.json", report)

    plt = _figure()
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    limit = _display_limit(run.model, omega_hi)
    sel = omega <= limit
    ax.plot(omega[sel], s_true[sel])
    ax.set_xlabel("omega")
    ax.set_ylabel("S(omega)")
    fig.tight_layout()
    _save_fig(fig, out / "oracle.png")
    print(f"wrote {out / 'oracle_spectrum.csv'}")
    return 0


# ---------------------------------------------------------------------------
# Entry point.
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftns",
        description="Noise spectroscopy of pure-dephasing qubits: simulate coherence "
        "traces and reconstruct noise spectra.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, func, helptext in (
        ("simulate", _cmd_simulate, "simulate a coherence trace"),
        ("reconstruct", _cmd_reconstruct, "reconstruct a spectrum from a trace"),
        ("compare", _cmd_compare, "run several reconstructions against one model"),
        ("sweep", _cmd_sweep, "repeat a reconstruction along one parameter axis"),
        ("oracle", _cmd_oracle, "write closed-form references for a configuration"),
    ):
        p = sub.add_parser(verb, help=helptext)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the plan's noise seed")
        p.add_argument(
            "--force",
            action="store_true",
            help="overwrite non-empty output directories and ignore cross-model guards",
        )
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
