"""Command-line driver: JSON config in, deterministic CSV/JSON artifacts out.

Exit codes: 0 success, 2 configuration problems, 3 numerical failures.
Every CSV starts with a `# config sha256:<digest>` comment so downstream
consumers can tie artifacts back to the exact configuration that made them.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from . import excitation
from . import exact as exact_mod
from . import lifetime as lifetime_mod
from . import quadrature as quad
from .rcmap import decompose, residual_bound, residual_gamma
from .spectral import SpectralFunction, SystemParams

_TASKS = ("map", "eigs", "sweep", "exact", "critical", "lifetime")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcbound",
        description="Detect and characterize dissipation-resilient bound "
                    "states of a damped bosonic mode.")
    parser.add_argument("--config", required=True,
                        help="path to the JSON run configuration")
    parser.add_argument("--task", choices=_TASKS, default=None,
                        help="override the task named in the configuration")
    parser.add_argument("--out", default=None,
                        help="output path prefix (overrides the configuration)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress the list of written files")
    return parser


@dataclass(frozen=True)
class RunConfig:
    sf: SpectralFunction
    system: SystemParams
    task: str
    out: str
    params: Dict[str, Any]
    digest: str


def _reject_unknown(d: Dict[str, Any], allowed: Iterable[str], where: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ValueError(f"unknown {where} keys: {', '.join(unknown)}")


def _parse_spectral(d: Any) -> SpectralFunction:
    if not isinstance(d, dict):
        raise ValueError("'spectral' must be an object")
    kind = d.get("kind")
    if kind == "rubin":
        _reject_unknown(d, ("kind", "gamma", "omega_c"), "spectral")
        return SpectralFunction.rubin(float(d["gamma"]),
                                      float(d.get("omega_c", 1.0)))
    if kind == "drude_gapless":
        _reject_unknown(d, ("kind", "gamma", "omega_c"), "spectral")
        return SpectralFunction.drude_gapless(float(d["gamma"]),
                                              float(d.get("omega_c", 1.0)))
    if kind == "shifted_sum":
        _reject_unknown(d, ("kind", "gamma", "omega_c", "offsets"), "spectral")
        offsets = tuple(float(o) for o in d.get("offsets", (1.5,)))
        return SpectralFunction.shifted_sum(float(d["gamma"]),
                                            float(d.get("omega_c", 1.0)),
                                            offsets)
    if kind == "tabulated":
        _reject_unknown(d, ("kind", "path", "amplitude"), "spectral")
        sf = SpectralFunction.tabulated_from_csv(d["path"])
        if "amplitude" in d:
            sf = sf.with_amplitude(float(d["amplitude"]))
        return sf
    raise ValueError(f"unknown spectral kind {kind!r}")


def _parse_system(d: Any) -> SystemParams:
    if not isinstance(d, dict):
        raise ValueError("'system' must be an object")
    _reject_unknown(d, ("omega", "temperature"), "system")
    return SystemParams(omega=float(d["omega"]),
                        temperature=float(d.get("temperature", 0.0)))


def load_config(path: str, task_override: str | None = None,
                out_override: str | None = None) -> RunConfig:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("configuration must be a JSON object")
    _reject_unknown(raw, ("spectral", "system", "task", "out", "params"),
                    "configuration")
    task = task_override or raw.get("task")
    if task not in _TASKS:
        raise ValueError(f"task must be one of {', '.join(_TASKS)}; got {task!r}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ValueError("'params' must be an object")
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canonical.encode()).hexdigest()
    return RunConfig(sf=_parse_spectral(raw["spectral"]),
                     system=_parse_system(raw["system"]),
                     task=task,
                     out=out_override or raw.get("out") or "rcbound",
                     params=params, digest=digest)


# -- serialization helpers -------------------------------------------------------

def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write_csv(path: Path, header: Sequence[str],
               rows: Iterable[Sequence[Any]], digest: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config sha256:{digest}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload: Dict[str, Any], digest: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"config_sha256": digest, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _decomposition(cfg: RunConfig):
    n = int(cfg.params.get("n", 1))
    counts = cfg.params.get("counts")
    if counts is not None:
        counts = [int(c) for c in counts]
    return decompose(cfg.sf, n, counts)


# -- tasks -----------------------------------------------------------------------

def _task_map(cfg: RunConfig) -> List[Path]:
    dec = _decomposition(cfg)
    out = Path(cfg.out + "_map.csv")
    _write_csv(out, ("i", "lo", "hi", "omega_i", "lambda_i"),
               [(m.index, m.interval.lo, m.interval.hi, m.omega_i, m.lambda_i)
                for m in dec.modes], cfg.digest)
    written = [out]
    samples = int(cfg.params.get("residual_samples", 0))
    if samples > 0:
        rows = []
        for m in dec.modes:
            width = m.interval.width
            bound = residual_bound(width)
            for k in range(samples):
                w = m.interval.lo + (k + 0.5) / samples * width
                rows.append((m.index, w, residual_gamma(cfg.sf, dec, m.index, w),
                             bound))
        res_out = Path(cfg.out + "_residual.csv")
        _write_csv(res_out, ("i", "omega", "gamma_i", "bound"), rows, cfg.digest)
        written.append(res_out)
    return written


def _task_eigs(cfg: RunConfig) -> List[Path]:
    dec = _decomposition(cfg)
    matrix = excitation.build(cfg.system, dec)
    spectrum = excitation.eigenvalues(matrix)
    u, v = excitation.mode_mixing(spectrum, cfg.system)
    edge_sq = cfg.sf.support_upper**2 if cfg.sf.gapped else None
    bounds = excitation.bounds_largest(matrix, top=edge_sq)
    out = Path(cfg.out + "_eigs.csv")
    _write_csv(out, ("q", "eps_sq", "system_weight", "u", "v"),
               [(q + 1, spectrum.eps_sq[q], spectrum.system_weights[q],
                 u[q], v[q]) for q in range(spectrum.size)], cfg.digest)
    payload = {
        "head": matrix.head,
        "trace": matrix.trace(),
        "loose_lower": bounds.loose_lower,
        "tight_lower": bounds.tight_lower,
        "upper": bounds.upper,
    }
    if cfg.sf.gapped:
        cont = excitation.bounds_largest_continuum(cfg.sf, cfg.system)
        payload.update(continuum_loose_lower=cont.loose_lower,
                       continuum_tight_lower=cont.tight_lower,
                       continuum_upper=cont.upper)
    json_out = Path(cfg.out + "_eigs.json")
    _write_json(json_out, payload, cfg.digest)
    return [out, json_out]


def _sweep_grid(params: Dict[str, Any]) -> List[float]:
    grid = params.get("grid")
    if isinstance(grid, dict):
        _reject_unknown(grid, ("start", "stop", "points"), "grid")
        pts = int(grid["points"])
        if pts < 2:
            raise ValueError("grid needs at least two points")
        return [float(g) for g in
                np.linspace(float(grid["start"]), float(grid["stop"]), pts)]
    if isinstance(grid, (list, tuple)):
        return [float(g) for g in grid]
    raise ValueError("'grid' must be a list or a {start, stop, points} object")


def _task_sweep(cfg: RunConfig) -> List[Path]:
    gammas = _sweep_grid(cfg.params)
    n = int(cfg.params.get("n", 1))
    counts = cfg.params.get("counts")
    if counts is not None:
        counts = [int(c) for c in counts]
    workers = int(os.environ.get("RC_THREADS", "1"))
    points = excitation.sweep(cfg.system, cfg.sf, gammas, n, counts,
                              workers=workers)
    modes = len(points[0].eps_sq)
    header = ["gamma"] + [f"eps_sq_{q}" for q in range(1, modes + 1)] + \
        ["loose_lower", "tight_lower", "upper", "omega_b_sq_exact",
         "bs_exists", "gap_counts"]
    rows = []
    for pt in points:
        rows.append([pt.gamma, *pt.eps_sq, pt.bounds.loose_lower,
                     pt.bounds.tight_lower, pt.bounds.upper, pt.omega_b_sq,
                     pt.bs_exists, ";".join(str(c) for c in pt.gap_counts)])
    out = Path(cfg.out + "_sweep.csv")
    _write_csv(out, header, rows, cfg.digest)
    return [out]


def _task_exact(cfg: RunConfig) -> List[Path]:
    report = exact_mod.bound_state_report(cfg.sf, cfg.system)
    moments = exact_mod.long_term_moments(
        cfg.sf, cfg.system,
        t=float(cfg.params.get("time", 0.0)),
        x0=float(cfg.params.get("x0", 1.0)),
        p0=float(cfg.params.get("p0", 0.0)))
    payload: Dict[str, Any] = {
        "bs_exists": report.exists,
        "omega_b": report.omega_b,
        "fbar": report.fbar,
        "residue": report.residue,
        "critical_gamma": report.critical_gamma,
        "all_roots": list(report.all_roots),
        "multiple_roots": report.multiple_roots,
        "time": moments.time,
        "x_mean": moments.x_mean,
        "p_mean": moments.p_mean,
        "x2": moments.x2,
        "p2": moments.p2,
        "x2_stationary": moments.x2_stationary,
        "p2_stationary": moments.p2_stationary,
        "x2_bs_mean": moments.x2_bs_mean,
        "p2_bs_mean": moments.p2_bs_mean,
        "x2_oscillatory_amplitude": moments.x2_oscillatory_amplitude,
        "p2_oscillatory_amplitude": moments.p2_oscillatory_amplitude,
        "occupation": moments.occupation,
    }
    if cfg.params.get("with_commutator", False):
        payload["commutator"] = exact_mod.commutator_value(cfg.sf, cfg.system)
    out = Path(cfg.out + "_exact.json")
    _write_json(out, payload, cfg.digest)
    return [out]


def _task_critical(cfg: RunConfig) -> List[Path]:
    out = Path(cfg.out + "_critical.json")
    _write_json(out, {
        "critical_gamma": exact_mod.critical_coupling(cfg.sf, cfg.system),
        "omega": cfg.system.omega,
        "gamma": cfg.sf.gamma,
    }, cfg.digest)
    return [out]


def _task_lifetime(cfg: RunConfig) -> List[Path]:
    dec = _decomposition(cfg)
    model = lifetime_mod.build_supersystem(
        cfg.system, dec,
        anharmonicity=float(cfg.params.get("u", 0.0)),
        scheme=cfg.params.get("scheme", "strong_coupling"),
        lamb_shift=float(cfg.params.get("lamb_shift", 0.0)))
    basis = lifetime_mod.FockBasis(modes=model.modes,
                                   n_max=int(cfg.params.get("n_max", 6)))
    generator = cfg.params.get("generator", "secular")
    if generator == "secular":
        lv = lifetime_mod.build_generator_secular(model, basis)
    elif generator == "partial_secular":
        lv = lifetime_mod.build_generator_partial_secular(model, basis)
    else:
        raise ValueError(f"unknown generator {generator!r}")
    initial = cfg.params.get("initial")
    if initial is None:
        initial = [0] * (model.modes - 1) + [1]
    rho0 = basis.fock_density([int(o) for o in initial])
    dt = cfg.params.get("dt")
    traj = lifetime_mod.evolve(lv, rho0, float(cfg.params["t_final"]), basis,
                               dt=None if dt is None else float(dt),
                               record_every=cfg.params.get("record_every"))
    est = lifetime_mod.estimate_lifetime(traj)
    out = Path(cfg.out + "_lifetime.csv")
    rows = zip(traj.times, traj.bs_population, traj.band_population,
               traj.trace_defect)
    _write_csv(out, ("t", "bs_population", "band_population", "trace_defect"),
               rows, cfg.digest)
    json_out = Path(cfg.out + "_lifetime.json")
    _write_json(json_out, {
        "gamma": cfg.sf.gamma,
        "U": model.anharmonicity,
        "T": cfg.system.temperature,
        "tau_b": est.tau,
        "fit_residual": est.fit_residual,
    }, cfg.digest)
    return [out, json_out]


_RUNNERS = {
    "map": _task_map,
    "eigs": _task_eigs,
    "sweep": _task_sweep,
    "exact": _task_exact,
    "critical": _task_critical,
    "lifetime": _task_lifetime,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, task_override=args.task,
                          out_override=args.out)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        written = _RUNNERS[cfg.task](cfg)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (quad.AccuracyError, RuntimeError, ArithmeticError) as exc:
        print(f"numerical error in task {cfg.task!r}: {exc}", file=sys.stderr)
        return 3
    if not args.quiet:
        for path in written:
            print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
