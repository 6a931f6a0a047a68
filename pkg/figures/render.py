#!/usr/bin/env python3
"""Render covloss sweep CSVs into PNG figures.

Reads only the documented CSV outputs of the covloss CLI (``ccp-sweep``,
``cdo-sweep``); nothing is recomputed. Figures are a pure function of the
CSV contents, so re-rendering the same file is byte-identical under a
fixed matplotlib version.

    render.py --in ccp_sweep.csv --kind ccp --out figs/
    render.py --in cdo_sweep.csv --kind cdo --out figs/
"""

import argparse
import os
import sys

import matplotlib

matplotlib.use("Agg")  # headless backend; must be set before pyplot loads

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

CCP_COLUMNS = (
    "rho_cr", "rho_wwr", "member",
    "cecl", "cecl_se", "ec", "ec_se", "var", "valid",
)
CDO_COLUMNS = (
    "tranche", "kind", "attachment", "detachment", "rho",
    "default_leg", "default_se", "payment_leg", "payment_se",
)
CCP_METRIC_TITLES = {"cecl": "CECL", "ec": "EC", "ec_minus_cecl": "EC - CECL"}
# pinned so byte-identity does not depend on the matplotlib version string
PNG_METADATA = {"Software": "covloss figures"}
DPI = 150


class SchemaError(Exception):
    """Input CSV does not match the documented sweep schema."""


def load_frame(csv_path: str, required: tuple) -> pd.DataFrame:
    """Read a sweep CSV, skipping `#` provenance lines, and check columns."""
    try:
        frame = pd.read_csv(csv_path, comment="#")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{csv_path} has no header row") from None
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError(
            f"{csv_path} is missing columns {missing}; "
            f"found {list(frame.columns)}"
        )
    if frame.empty:
        raise SchemaError(f"{csv_path} has no data rows after the header")
    return frame


def _save(fig, out_dir: str, name: str, written: list) -> None:
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)
    written.append(path)


def _cell_matrix(sub: pd.DataFrame, rc, rw, metric: str) -> np.ma.MaskedArray:
    """Grid the metric onto (rho_wwr, rho_cr); absent or invalid cells stay masked."""
    z = np.full((len(rw), len(rc)), np.nan)
    ci = {v: k for k, v in enumerate(rc)}
    wi = {v: k for k, v in enumerate(rw)}
    ok = sub["valid"].astype(str).str.lower() == "true"
    for row in sub[ok].itertuples():
        z[wi[row.rho_wwr], ci[row.rho_cr]] = getattr(row, metric)
    return np.ma.masked_invalid(z)


def _draw_surface(ax, sub, rc, rw, metric):
    z = _cell_matrix(sub, rc, rw, metric)
    # shading="nearest" plots one flat tile per grid cell: masked cells
    # appear as gaps and nothing is interpolated across them
    mesh = ax.pcolormesh(rc, rw, z, shading="nearest", cmap="viridis")
    ax.set_xlabel("rho_cr")
    ax.set_ylabel("rho_wwr")
    return mesh


def plot_ccp_surfaces(csv_path: str, member_ids, out_dir: str) -> list:
    """One heatmap per (member, CECL|EC), plus a combined EC - CECL figure."""
    frame = load_frame(csv_path, CCP_COLUMNS)
    frame["ec_minus_cecl"] = frame["ec"] - frame["cecl"]
    available = list(pd.unique(frame["member"]))
    members = available if member_ids is None else member_ids
    absent = [m for m in members if m not in available]
    if absent:
        raise SchemaError(
            f"members {absent} not present in {csv_path}; found {available}"
        )
    rc = np.sort(frame["rho_cr"].unique())
    rw = np.sort(frame["rho_wwr"].unique())

    written = []
    for m in members:
        sub = frame[frame["member"] == m]
        for metric in ("cecl", "ec"):
            fig, ax = plt.subplots(figsize=(6.0, 4.5), layout="constrained")
            mesh = _draw_surface(ax, sub, rc, rw, metric)
            fig.colorbar(mesh, ax=ax)
            ax.set_title(f"member {m} {CCP_METRIC_TITLES[metric]}")
            _save(fig, out_dir, f"ccp_{metric}_member{m}.png", written)

    fig, axes = plt.subplots(
        1, len(members), figsize=(4.0 * len(members), 3.6),
        layout="constrained", squeeze=False,
    )
    for ax, m in zip(axes[0], members):
        sub = frame[frame["member"] == m]
        mesh = _draw_surface(ax, sub, rc, rw, "ec_minus_cecl")
        fig.colorbar(mesh, ax=ax)
        ax.set_title(f"member {m} {CCP_METRIC_TITLES['ec_minus_cecl']}")
    _save(fig, out_dir, "ccp_ec_minus_cecl.png", written)
    return written


def plot_cdo_curves(csv_path: str, out_dir: str) -> list:
    """Per tranche kind and leg: price vs rho, one curve per attachment point."""
    frame = load_frame(csv_path, CDO_COLUMNS)
    written = []
    for kind in pd.unique(frame["kind"]):
        sub = frame[frame["kind"] == kind]
        # equity tranches vary by detachment, senior by attachment;
        # mezzanine needs both ends to identify the curve
        if kind == "equity":
            param, label = "detachment", "B"
        else:
            param, label = "attachment", "A"
        values = np.sort(sub[param].unique())
        span = values.max() - values.min()
        cmap = plt.get_cmap("viridis")
        for leg in ("default", "payment"):
            fig, ax = plt.subplots(figsize=(6.0, 4.5), layout="constrained")
            for name in pd.unique(sub["tranche"]):
                tr = sub[sub["tranche"] == name].sort_values("rho")
                v = tr[param].iloc[0]
                frac = 0.5 if span == 0 else (v - values.min()) / span
                if kind == "mezzanine":
                    curve_label = f"[{tr['attachment'].iloc[0]:g}, {tr['detachment'].iloc[0]:g}]"
                else:
                    curve_label = f"{label}={v:g}"
                ax.plot(tr["rho"], tr[f"{leg}_leg"], color=cmap(frac), label=curve_label)
            ax.set_xlabel("rho")
            ax.set_ylabel(f"{leg} leg price")
            ax.set_title(f"{kind} tranches, {leg} leg")
            if sub["tranche"].nunique() <= 6:
                ax.legend(fontsize=8)
            else:
                sm = plt.cm.ScalarMappable(
                    cmap=cmap,
                    norm=plt.Normalize(values.min(), values.max()),
                )
                fig.colorbar(sm, ax=ax, label=f"{param} ({label})")
            _save(fig, out_dir, f"cdo_{kind}_{leg}.png", written)
    return written


def _parse_members(text):
    if text is None:
        return None
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise SchemaError(f"--members {text!r} is not a comma-separated integer list") from None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render.py", description="render covloss sweep CSVs into figures"
    )
    parser.add_argument("--in", dest="csv_path", required=True, help="sweep CSV to read")
    parser.add_argument("--kind", choices=("ccp", "cdo"), required=True)
    parser.add_argument("--out", required=True, help="output directory for PNGs")
    parser.add_argument(
        "--members", default=None,
        help="comma-separated member ids (ccp only, default: all in the CSV)",
    )
    args = parser.parse_args(argv)
    try:
        os.makedirs(args.out, exist_ok=True)
        if args.kind == "ccp":
            written = plot_ccp_surfaces(args.csv_path, _parse_members(args.members), args.out)
        else:
            if args.members is not None:
                raise SchemaError("--members applies to --kind ccp only")
            written = plot_cdo_curves(args.csv_path, args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
