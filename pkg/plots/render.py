#!/usr/bin/env python3
"""Render figures from rcbound CSV artifacts.

    python3 render.py --spec specs/sweep.json [--out fig.png]

The spec is a JSON object: {"kind": "residual" | "sweep" | "two_band" |
"lifetime", "csv": <path>, "out": <path>, ...}.  Relative CSV/out paths
resolve against the spec file's directory.  Optional keys: "gaps_sq"
(list of [lo, hi] shaded regions on the energy-squared axis), "critical"
(vertical line), "config_sha256" (must match the CSV's digest comment),
"logy" (lifetime only), "title".

Everything drawn comes straight from CSV columns; this script computes
nothing.  Exit codes: 0 ok, 2 bad spec or CSV.
"""
import argparse
import json
import sys
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("residual", "sweep", "two_band", "lifetime")
STYLE = Path(__file__).resolve().parent / "style.mplstyle"


class SpecError(Exception):
    pass


def read_csv(path):
    """CSV -> (digest, {column: array}); gap_counts stays as strings."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise SpecError(f"cannot read CSV {path}: {exc}")
    if not lines or not lines[0].startswith("# config sha256:"):
        raise SpecError(f"{path} is missing the config digest comment")
    digest = lines[0].split(":", 1)[1].strip()
    header = lines[1].split(",")
    rows = [ln.split(",") for ln in lines[2:] if ln]
    if any(len(r) != len(header) for r in rows):
        raise SpecError(f"{path} has rows that do not match its header")
    cols = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        if name == "gap_counts":
            cols[name] = raw
        else:
            try:
                cols[name] = np.array([float(v) for v in raw])
            except ValueError:
                raise SpecError(f"column {name!r} in {path} is not numeric")
    return digest, cols


def need(cols, names, path):
    missing = [n for n in names if n not in cols]
    if missing:
        raise SpecError(f"{path} lacks required columns: {', '.join(missing)}")


def eps_columns(cols):
    names = [n for n in cols if n.startswith("eps_sq_")]
    if not names:
        raise SpecError("no eps_sq_* columns found")
    return sorted(names, key=lambda n: int(n.rsplit("_", 1)[1]))


def shade_gaps(ax, gaps_sq):
    for lo, hi in gaps_sq or []:
        ax.axhspan(lo, hi, color="0.88", zorder=0)


def render_residual(spec, cols, path):
    need(cols, ("i", "omega", "gamma_i", "bound"), path)
    fig, ax = plt.subplots()
    for idx in np.unique(cols["i"]):
        mask = cols["i"] == idx
        w = cols["omega"][mask]
        line, = ax.plot(w, cols["gamma_i"][mask], label=f"cell {int(idx)}")
        ax.hlines(cols["bound"][mask][0], w[0], w[-1],
                  colors=line.get_color(), linestyles="dotted")
    ax.set_xlabel(r"$\omega / \omega_c$")
    ax.set_ylabel(r"$\Gamma_i(\omega)$")
    ax.legend(loc="upper right", fontsize="small")
    return fig


def render_fan(spec, cols, path):
    need(cols, ("gamma",), path)
    eps = eps_columns(cols)
    gamma = cols["gamma"]
    fig, ax = plt.subplots()
    shade_gaps(ax, spec.get("gaps_sq"))
    for name in eps:
        ax.plot(gamma, cols[name], color="C0", lw=0.7, alpha=0.6)
    for name, style, label in (("loose_lower", ":", "loose lower"),
                               ("tight_lower", "--", "tight lower"),
                               ("upper", "-.", "upper")):
        if name in cols:
            ax.plot(gamma, cols[name], style, color="C3", lw=1.2, label=label)
    if "omega_b_sq_exact" in cols:
        ax.plot(gamma, cols["omega_b_sq_exact"], "k--", lw=1.5,
                label=r"exact $\omega_b^2$")
    if spec.get("critical") is not None:
        ax.axvline(spec["critical"], color="0.4", lw=1.0)
    ax.set_xlabel(r"$\Gamma / \omega_c$")
    ax.set_ylabel(r"$\varepsilon_q^2 / \omega_c^2$")
    ax.legend(loc="upper left", fontsize="small")
    return fig


def render_lifetime(spec, cols, path):
    need(cols, ("t", "bs_population", "band_population"), path)
    fig, ax = plt.subplots()
    ax.plot(cols["t"], cols["bs_population"], label="bound state")
    ax.plot(cols["t"], cols["band_population"], label="band modes")
    if spec.get("logy"):
        ax.set_yscale("log")
    ax.set_xlabel(r"$t\,\omega_c$")
    ax.set_ylabel("mode population")
    ax.legend(loc="best", fontsize="small")
    return fig


RENDERERS = {
    "residual": render_residual,
    "sweep": render_fan,
    "two_band": render_fan,
    "lifetime": render_lifetime,
}


def render(spec_path, out_override=None):
    spec_path = Path(spec_path)
    try:
        spec = json.loads(spec_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot load spec {spec_path}: {exc}")
    if not isinstance(spec, dict):
        raise SpecError("figure spec must be a JSON object")
    kind = spec.get("kind")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {', '.join(KINDS)}; got {kind!r}")
    if "csv" not in spec:
        raise SpecError("spec is missing the 'csv' path")
    base = spec_path.resolve().parent
    csv_path = Path(spec["csv"])
    if not csv_path.is_absolute():
        csv_path = base / csv_path
    out = out_override or spec.get("out")
    if out is None:
        raise SpecError("no output path: set 'out' in the spec or pass --out")
    out = Path(out)
    if out_override is None and not out.is_absolute():
        out = base / out

    digest, cols = read_csv(csv_path)
    if spec.get("config_sha256") not in (None, digest):
        raise SpecError(
            f"{csv_path} was made by config {digest[:12]}..., spec expects "
            f"{spec['config_sha256'][:12]}...")

    plt.style.use(STYLE)
    fig = RENDERERS[kind](spec, cols, csv_path)
    if spec.get("title"):
        fig.axes[0].set_title(spec["title"])
    fig.savefig(out)
    plt.close(fig)
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--spec", required=True, help="figure spec JSON")
    parser.add_argument("--out", default=None, help="override the output path")
    args = parser.parse_args(argv)
    try:
        out = render(args.spec, args.out)
    except SpecError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
