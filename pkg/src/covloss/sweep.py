"""Sweep orchestration: configs, common-random-number grids, reports, output files.

A sweep runs the full pipeline (margin stack once, then per correlation
cell: assemble scenarios, evaluate the reference-member loss, estimate
provisions and capital under the survival measure) for each requested
reference member over a two-axis correlation grid. All cells of a sweep
share the same (seed, batch)-addressed raw draws, so adjacent-cell metric
increments are common-random-number coupled and their standard errors can
be taken on per-batch increment differences.

Inadmissible cells (wrong-way coupling too large for the chosen systematic
correlations) are skipped and marked invalid in the outputs, never
interpolated over.

Everything written to disk is a pure function of the config and seed:
floats are serialized with shortest round-trip repr, provenance is the
config's sha256, and no timestamps appear anywhere.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import risk
from .ccp import ClearingSetup, MarginSpec, compute_cover2_and_df
from .cdo import CdoSweepResult, ObligorSpec, TrancheSpec, correlation_sweep
from .factors import (
    FactorModel,
    RawDraws,
    RngStream,
    assemble_batch,
    draw_raw,
    validate_model,
)
from .loss import member_loss
from .members import MemberSpec, MemberUniverse
from .risk import RiskReport

SWEEP_METRICS = ("cecl", "ec", "ec_minus_cecl")


class ConfigError(ValueError):
    """A run configuration violates its contract."""


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


def _grid_values(spec, where: str) -> tuple[float, ...]:
    """Parse a grid axis: either explicit values or start/stop/step.

    Generated values are rounded to 12 decimals so that decimal steps like
    0.05 produce the exact grid the config means.
    """
    if isinstance(spec, (list, tuple)):
        values = [float(v) for v in spec]
    elif isinstance(spec, dict) and "values" in spec:
        values = [float(v) for v in spec["values"]]
    elif isinstance(spec, dict):
        start = float(_require(spec, "start", where))
        stop = float(_require(spec, "stop", where))
        step = float(_require(spec, "step", where))
        if step <= 0:
            raise ConfigError(f"{where}: step must be positive, got {step}")
        if stop < start:
            raise ConfigError(f"{where}: stop {stop} below start {start}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 12) for i in range(count)]
    else:
        raise ConfigError(f"{where}: expected a list of values or start/stop/step")
    if not values:
        raise ConfigError(f"{where}: empty grid")
    if any(not 0.0 <= v < 1.0 for v in values):
        raise ConfigError(f"{where}: correlation values must lie in [0, 1)")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{where}: values must be strictly increasing")
    return tuple(values)


def _parse_member(row: dict, where: str) -> MemberSpec:
    mid = int(_require(row, "id", where))
    if "lambda_bps" in row:
        lam = float(row["lambda_bps"]) * 1e-4
    elif "lambda" in row:
        lam = float(row["lambda"])
    else:
        raise ConfigError(f"{where}: missing key 'lambda_bps' (or 'lambda')")
    if "size" in row:
        nom = float(row["size"])
    elif "nom" in row:
        nom = float(row["nom"])
    else:
        raise ConfigError(f"{where}: missing key 'size' (or 'nom')")
    if "vol_pct" in row:
        sigma = float(row["vol_pct"]) / 100.0
    elif "sigma" in row:
        sigma = float(row["sigma"])
    else:
        raise ConfigError(f"{where}: missing key 'vol_pct' (or 'sigma')")
    try:
        return MemberSpec(id=mid, lam=lam, nom=nom, sigma=sigma)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of a clearing-house sweep."""

    rho_mkt: float
    nu: float
    delta_s: float
    delta_l: float
    horizon_T: float
    rho_cr_values: tuple[float, ...]
    rho_wwr_values: tuple[float, ...]
    members: MemberUniverse
    margins: MarginSpec
    df_allocation: str
    ec_alpha: float
    n_paths: int
    n_batches: int
    seed: int
    reference_members: tuple[int, ...]
    survival_normalization: str = "self"
    estimator_mode: str = "pooled"

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho_mkt < 1.0:
            raise ConfigError(f"rho_mkt={self.rho_mkt} outside [0, 1)")
        if not self.nu > 2.0:
            raise ConfigError(f"nu={self.nu} must exceed 2")
        if not 0.0 < self.delta_s < self.delta_l < self.horizon_T:
            raise ConfigError("period lengths must satisfy 0 < delta_s < delta_l < horizon_T")
        if not 0.5 < self.ec_alpha < 1.0:
            raise ConfigError(f"ec_alpha={self.ec_alpha} must lie in (1/2, 1)")
        if self.df_allocation not in ("sloim", "im"):
            raise ConfigError(f"df_allocation must be 'sloim' or 'im', got {self.df_allocation!r}")
        if self.survival_normalization not in ("self", "theoretical"):
            raise ConfigError(
                f"survival_normalization must be 'self' or 'theoretical', "
                f"got {self.survival_normalization!r}"
            )
        if self.estimator_mode not in ("pooled", "per_batch"):
            raise ConfigError(
                f"estimator_mode must be 'pooled' or 'per_batch', got {self.estimator_mode!r}"
            )
        if not (self.n_paths >= self.n_batches >= 2):
            raise ConfigError(
                f"need n_paths >= n_batches >= 2, got n_paths={self.n_paths}, "
                f"n_batches={self.n_batches}"
            )
        if len(self.members) < 2:
            raise ConfigError("need at least two members")
        if not self.reference_members:
            raise ConfigError("need at least one reference member")
        known = set(self.members.ids)
        for rid in self.reference_members:
            if rid not in known:
                raise ConfigError(f"reference member {rid} not in the universe")
        if len(set(self.reference_members)) != len(self.reference_members):
            raise ConfigError("duplicate reference members")

    def model_for(self, rho_cr: float, rho_wwr: float) -> FactorModel:
        return FactorModel(
            rho_cr=rho_cr,
            rho_mkt=self.rho_mkt,
            rho_wwr=rho_wwr,
            nu=self.nu,
            delta_s=self.delta_s,
            delta_l=self.delta_l,
            horizon_T=self.horizon_T,
        )

    def to_dict(self) -> dict:
        return {
            "model": {
                "rho_mkt": self.rho_mkt,
                "nu": self.nu,
                "delta_s": self.delta_s,
                "delta_l": self.delta_l,
                "horizon_T": self.horizon_T,
            },
            "grid": {
                "rho_cr": list(self.rho_cr_values),
                "rho_wwr": list(self.rho_wwr_values),
            },
            "margins": {
                "alpha_im": self.margins.alpha_im,
                "alpha_stress": self.margins.alpha_stress,
                "df_allocation": self.df_allocation,
            },
            "ec_alpha": self.ec_alpha,
            "n_paths": self.n_paths,
            "n_batches": self.n_batches,
            "seed": self.seed,
            "reference_members": list(self.reference_members),
            "survival_normalization": self.survival_normalization,
            "estimator_mode": self.estimator_mode,
            "members": [[m.id, m.lam, m.nom, m.sigma] for m in self.members],
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def override(self, **kw) -> "RunConfig":
        """Replace fields (CLI overrides) and revalidate."""
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
        model = _require(doc, "model", "config")
        days = float(model.get("days_per_year", 252))
        if days <= 0:
            raise ConfigError("model.days_per_year must be positive")
        grid = _require(doc, "grid", "config")
        margins_doc = _require(doc, "margins", "config")
        members_doc = _require(doc, "members", "config")
        if not isinstance(members_doc, list) or not members_doc:
            raise ConfigError("config.members must be a nonempty list")
        members = MemberUniverse(
            members=tuple(
                _parse_member(row, f"members[{k}]") for k, row in enumerate(members_doc)
            )
        )
        try:
            margins = MarginSpec(
                alpha_im=float(_require(margins_doc, "alpha_im", "margins")),
                alpha_stress=float(_require(margins_doc, "alpha_stress", "margins")),
            )
        except ValueError as exc:
            raise ConfigError(f"margins: {exc}") from None
        refs = doc.get("reference_members", [members.ids[0]])
        return cls(
            rho_mkt=float(_require(model, "rho_mkt", "model")),
            nu=float(model.get("nu", 5.0)),
            delta_s=float(_require(model, "delta_s_days", "model")) / days,
            delta_l=float(_require(model, "delta_l_days", "model")) / days,
            horizon_T=float(_require(model, "horizon_years", "model")),
            rho_cr_values=_grid_values(_require(grid, "rho_cr", "grid"), "grid.rho_cr"),
            rho_wwr_values=_grid_values(_require(grid, "rho_wwr", "grid"), "grid.rho_wwr"),
            members=members,
            margins=margins,
            df_allocation=str(margins_doc.get("df_allocation", "sloim")),
            ec_alpha=float(_require(doc, "ec_alpha", "config")),
            n_paths=int(_require(doc, "n_paths", "config")),
            n_batches=int(_require(doc, "n_batches", "config")),
            seed=int(_require(doc, "seed", "config")),
            reference_members=tuple(int(r) for r in refs),
            survival_normalization=str(doc.get("survival_normalization", "self")),
            estimator_mode=str(doc.get("estimator_mode", "pooled")),
        )

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


# ---------------------------------------------------------------------------
# Sweep execution
# ---------------------------------------------------------------------------


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("COVLOSS_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"COVLOSS_THREADS={env!r} is not an integer") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    return threads


def _batch_bounds(n_paths: int, n_batches: int) -> np.ndarray:
    """Path offsets of each batch; sizes differ by at most one."""
    base, extra = divmod(n_paths, n_batches)
    sizes = np.full(n_batches, base, dtype=int)
    sizes[:extra] += 1
    return np.concatenate([[0], np.cumsum(sizes)])


def _stacked_raws(
    n_members: int, n_paths: int, n_batches: int, seed: int, nu: float
) -> RawDraws:
    """All batches' raw draws, concatenated path-major in batch order.

    Each batch comes from its own (seed, batch) substream, so the stacked
    arrays are bit-identical to drawing batch by batch.
    """
    bounds = _batch_bounds(n_paths, n_batches)
    parts = [
        draw_raw(n_members, int(bounds[b + 1] - bounds[b]), RngStream(seed, b), nu)
        for b in range(n_batches)
    ]
    return RawDraws(
        mixing_k=np.concatenate([p.mixing_k for p in parts]),
        t=np.concatenate([p.t for p in parts]),
        e=np.concatenate([p.e for p in parts]),
        t_i=np.concatenate([p.t_i for p in parts]),
        e_i=np.concatenate([p.e_i for p in parts]),
        w_i=np.concatenate([p.w_i for p in parts]),
    )


@dataclass(frozen=True, eq=False)
class BatchEstimates:
    """Per-batch metric estimates of one (member, cell) pair."""

    cecl: np.ndarray
    ec: np.ndarray
    var: np.ndarray

    def __post_init__(self) -> None:
        for a in (self.cecl, self.ec, self.var):
            a.setflags(write=False)


def _cell_stats(
    raw: RawDraws,
    model: FactorModel,
    universe: MemberUniverse,
    setup: ClearingSetup,
    bounds: np.ndarray,
    ec_alpha: float,
    survival_normalization: str,
    estimator_mode: str,
) -> tuple[RiskReport, BatchEstimates]:
    """Full risk report of one grid cell from shared raw draws."""
    batch = assemble_batch(model, universe, raw)
    losses = member_loss(batch, setup).total
    x0 = batch.x[:, 0]
    b0 = float(setup.thresholds[0])
    normalize = survival_normalization == "self"
    n_batches = bounds.shape[0] - 1

    b_cecl = np.empty(n_batches)
    b_ec = np.empty(n_batches)
    b_var = np.empty(n_batches)
    for b in range(n_batches):
        s = slice(int(bounds[b]), int(bounds[b + 1]))
        w = risk.survival_weights(x0[s], b0, setup.gamma, normalize=normalize)
        b_cecl[b] = risk.cecl(losses[s], w)
        b_ec[b] = risk.economic_capital(losses[s], w, ec_alpha)
        b_var[b] = risk.value_at_risk(losses[s], w, ec_alpha)

    w_all = risk.survival_weights(x0, b0, setup.gamma, normalize=normalize)
    pooled_cecl = risk.cecl(losses, w_all)
    pooled_ec = risk.economic_capital(losses, w_all, ec_alpha)
    pooled_var = risk.value_at_risk(losses, w_all, ec_alpha)

    cecl_bm, cecl_se = risk.batch_statistics(b_cecl)
    ec_bm, ec_se = risk.batch_statistics(b_ec)
    var_bm, var_se = risk.batch_statistics(b_var)
    if estimator_mode == "per_batch":
        point = (cecl_bm, ec_bm, var_bm)
    else:
        point = (pooled_cecl, pooled_ec, pooled_var)
    report = RiskReport(
        cecl=point[0],
        ec=point[1],
        var_alpha=point[2],
        cecl_batch_mean=cecl_bm,
        cecl_stderr=cecl_se,
        ec_batch_mean=ec_bm,
        ec_stderr=ec_se,
        var_batch_mean=var_bm,
        var_stderr=var_se,
        alpha=ec_alpha,
        n_paths=int(bounds[-1]),
        n_batches=n_batches,
    )
    return report, BatchEstimates(cecl=b_cecl, ec=b_ec, var=b_var)


def _cell_task(payload) -> tuple[tuple, RiskReport, BatchEstimates]:
    """Process-pool task: regenerate this cell's raw draws and evaluate it.

    Raw draws are a pure function of (seed, batch), so regenerating them in
    the worker gives bit-identical results to the serial path that reuses
    one stacked copy.
    """
    (key, model, universe, setup, n_paths, n_batches, seed,
     ec_alpha, survival_normalization, estimator_mode) = payload
    bounds = _batch_bounds(n_paths, n_batches)
    raw = _stacked_raws(len(universe), n_paths, n_batches, seed, model.nu)
    report, be = _cell_stats(
        raw, model, universe, setup, bounds, ec_alpha, survival_normalization, estimator_mode
    )
    return key, report, be


@dataclass(frozen=True, eq=False)
class SweepResult:
    """All reports of one sweep, plus what monotonicity checks need."""

    rho_cr_values: tuple[float, ...]
    rho_wwr_values: tuple[float, ...]
    reference_members: tuple[int, ...]
    validity: dict
    reports: dict
    batches: dict
    config_hash: str
    seed: int
    n_paths: int
    n_batches: int
    ec_alpha: float

    def valid_cells(self) -> list[tuple[float, float]]:
        return [cell for cell, verdict in self.validity.items() if verdict]


def run_sweep(config: RunConfig, threads: int | None = None) -> SweepResult:
    """Run the full correlation sweep of a config.

    The margin stack is evaluated once per reference member (it does not
    depend on the correlations); every valid cell is then estimated from the
    same raw draws. ``threads`` > 1 distributes cells over a process pool
    whose workers regenerate their own draws; results are identical to the
    serial path either way.
    """
    threads = _resolve_threads(threads)
    cells = [(rc, rw) for rc in config.rho_cr_values for rw in config.rho_wwr_values]
    validity = {cell: validate_model(config.model_for(*cell)) for cell in cells}
    valid_cells = [cell for cell in cells if validity[cell]]
    if not valid_cells:
        raise ConfigError("no valid grid cell: every (rho_cr, rho_wwr) pair is inadmissible")
    bounds = _batch_bounds(config.n_paths, config.n_batches)

    reports: dict = {}
    batches: dict = {}
    margin_model = config.model_for(*valid_cells[0])
    for ref in config.reference_members:
        universe = config.members.with_reference(ref)
        setup = compute_cover2_and_df(
            universe, config.margins, margin_model, config.df_allocation
        )
        if threads == 1 or len(valid_cells) == 1:
            raw = _stacked_raws(
                len(universe), config.n_paths, config.n_batches, config.seed, config.nu
            )
            for cell in valid_cells:
                report, be = _cell_stats(
                    raw, config.model_for(*cell), universe, setup, bounds,
                    config.ec_alpha, config.survival_normalization, config.estimator_mode,
                )
                reports[(ref,) + cell] = report
                batches[(ref,) + cell] = be
            del raw
        else:
            payloads = [
                ((ref,) + cell, config.model_for(*cell), universe, setup,
                 config.n_paths, config.n_batches, config.seed,
                 config.ec_alpha, config.survival_normalization, config.estimator_mode)
                for cell in valid_cells
            ]
            with ProcessPoolExecutor(max_workers=min(threads, len(payloads))) as pool:
                for key, report, be in pool.map(_cell_task, payloads):
                    reports[key] = report
                    batches[key] = be

    return SweepResult(
        rho_cr_values=config.rho_cr_values,
        rho_wwr_values=config.rho_wwr_values,
        reference_members=config.reference_members,
        validity=validity,
        reports=reports,
        batches=batches,
        config_hash=config.config_hash(),
        seed=config.seed,
        n_paths=config.n_paths,
        n_batches=config.n_batches,
        ec_alpha=config.ec_alpha,
    )


# ---------------------------------------------------------------------------
# Monotonicity gate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricVerdict:
    """Monotonicity verdict for one (member, axis, metric) family."""

    member: int
    axis: str
    metric: str
    passed: bool
    n_pairs: int
    worst_increment: float
    worst_stderr: float
    worst_pair: tuple


@dataclass(frozen=True, eq=False)
class MonotonicityReport:
    """Nondecreasing-in-dependence verdicts over a whole sweep."""

    k_sigma: float
    passed: bool
    entries: dict
    config_hash: str
    seed: int

    def to_jsonable(self) -> dict:
        members: dict = {}
        for (member, axis, metric), verdict in sorted(self.entries.items()):
            members.setdefault(str(member), {}).setdefault(axis, {})[metric] = {
                "passed": verdict.passed,
                "n_pairs": verdict.n_pairs,
                "worst_increment": verdict.worst_increment,
                "worst_stderr": verdict.worst_stderr,
                "worst_pair": [list(verdict.worst_pair[0]), list(verdict.worst_pair[1])],
            }
        return {
            "schema": "covloss-monotonicity-v1",
            "config_hash": self.config_hash,
            "seed": self.seed,
            "k_sigma": self.k_sigma,
            "passed": self.passed,
            "members": members,
        }


def _metric_values(report: RiskReport, be: BatchEstimates, metric: str):
    if metric == "cecl":
        return report.cecl, be.cecl
    if metric == "ec":
        return report.ec, be.ec
    if metric == "ec_minus_cecl":
        return report.ec - report.cecl, be.ec - be.cecl
    raise ValueError(f"unknown metric {metric!r}")


def check_monotonicity(sweep: SweepResult, k_sigma: float = 3.0) -> MonotonicityReport:
    """Gate every axis-adjacent valid increment at -k_sigma * stderr.

    Increments compare pooled estimates of grid-adjacent valid cells; their
    stderr comes from the per-batch increment differences, which is tight
    because the cells share raw draws. The verdict keeps, per (member, axis,
    metric), the pair with the worst margin increment + k_sigma * stderr.
    """
    if k_sigma < 0:
        raise ValueError("k_sigma must be nonnegative")
    k = sweep.n_batches
    entries: dict = {}
    total_pairs = 0
    for member in sweep.reference_members:
        axis_pairs = {
            "rho_cr": [
                ((a, w), (b, w))
                for a, b in zip(sweep.rho_cr_values, sweep.rho_cr_values[1:])
                for w in sweep.rho_wwr_values
            ],
            "rho_wwr": [
                ((rc, a), (rc, b))
                for a, b in zip(sweep.rho_wwr_values, sweep.rho_wwr_values[1:])
                for rc in sweep.rho_cr_values
            ],
        }
        for axis, pairs in axis_pairs.items():
            comparable = [
                (lo, hi) for lo, hi in pairs if sweep.validity[lo] and sweep.validity[hi]
            ]
            total_pairs += len(comparable)
            if not comparable:
                continue
            for metric in SWEEP_METRICS:
                worst = None
                all_pass = True
                for lo, hi in comparable:
                    p_lo, b_lo = _metric_values(
                        sweep.reports[(member,) + lo], sweep.batches[(member,) + lo], metric
                    )
                    p_hi, b_hi = _metric_values(
                        sweep.reports[(member,) + hi], sweep.batches[(member,) + hi], metric
                    )
                    inc = p_hi - p_lo
                    d = b_hi - b_lo
                    se = float(d.std(ddof=1) / math.sqrt(k))
                    if inc < -k_sigma * se:
                        all_pass = False
                    margin = inc + k_sigma * se
                    if worst is None or margin < worst[0]:
                        worst = (margin, inc, se, (lo, hi))
                entries[(member, axis, metric)] = MetricVerdict(
                    member=member,
                    axis=axis,
                    metric=metric,
                    passed=all_pass,
                    n_pairs=len(comparable),
                    worst_increment=worst[1],
                    worst_stderr=worst[2],
                    worst_pair=worst[3],
                )
    if total_pairs == 0:
        raise ValueError("no axis-adjacent valid cell pairs to compare")
    return MonotonicityReport(
        k_sigma=k_sigma,
        passed=all(v.passed for v in entries.values()),
        entries=entries,
        config_hash=sweep.config_hash,
        seed=sweep.seed,
    )


# ---------------------------------------------------------------------------
# Deterministic writers
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_sweep_csv(sweep: SweepResult, path) -> None:
    """One row per (cell, member); invalid cells keep empty metric columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# covloss ccp-sweep v1\n")
        fh.write(
            f"# config_hash={sweep.config_hash} seed={sweep.seed} "
            f"n_paths={sweep.n_paths} n_batches={sweep.n_batches} "
            f"ec_alpha={_fmt(sweep.ec_alpha)}\n"
        )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["rho_cr", "rho_wwr", "member", "cecl", "cecl_se", "ec", "ec_se", "var", "valid"]
        )
        for rc in sweep.rho_cr_values:
            for rw in sweep.rho_wwr_values:
                for member in sweep.reference_members:
                    if sweep.validity[(rc, rw)]:
                        rep = sweep.reports[(member, rc, rw)]
                        writer.writerow(
                            [
                                _fmt(rc), _fmt(rw), member,
                                _fmt(rep.cecl), _fmt(rep.cecl_stderr),
                                _fmt(rep.ec), _fmt(rep.ec_stderr),
                                _fmt(rep.var_alpha), "true",
                            ]
                        )
                    else:
                        writer.writerow(
                            [_fmt(rc), _fmt(rw), member, "", "", "", "", "", "false"]
                        )


def write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# CDO sweep config and writers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CdoConfig:
    """Resolved configuration of a tranche correlation sweep.

    Attachment points are stored as fractions of the pool's total loss
    given default and converted to currency when tranches are built.
    """

    maturity: float
    spread: float
    n_coupons: int
    nu: float
    rho_values: tuple[float, ...]
    equity_detachments: tuple[float, ...]
    senior_attachments: tuple[float, ...]
    mezzanine_bounds: tuple[tuple[float, float], ...]
    n_paths: int
    seed: int
    obligors: tuple[ObligorSpec, ...]

    def __post_init__(self) -> None:
        if self.maturity <= 0:
            raise ConfigError("maturity must be positive")
        if self.spread < 0:
            raise ConfigError("spread must be nonnegative")
        if self.n_coupons < 1:
            raise ConfigError("need at least one coupon")
        if not self.nu > 2.0:
            raise ConfigError(f"nu={self.nu} must exceed 2")
        if self.n_paths < 2:
            raise ConfigError("need at least two paths")
        if not self.obligors:
            raise ConfigError("need at least one obligor")
        for frac in self.equity_detachments + self.senior_attachments:
            if not 0.0 < frac < 1.0:
                raise ConfigError(f"tranche bound fraction {frac} outside (0, 1)")
        for a, b in self.mezzanine_bounds:
            if not 0.0 < a < b < 1.0:
                raise ConfigError(f"mezzanine bounds ({a}, {b}) must satisfy 0 < a < b < 1")
        if not self.equity_detachments and not self.senior_attachments and not self.mezzanine_bounds:
            raise ConfigError("no tranches configured")

    @property
    def loss_cap(self) -> float:
        return float(sum(o.loss_given_default for o in self.obligors))

    def build_tranches(self) -> tuple[TrancheSpec, ...]:
        cap = self.loss_cap
        tranches = [
            TrancheSpec.equity(
                frac * cap, self.spread, self.n_coupons, self.maturity,
                name=f"equity_b{frac:g}",
            )
            for frac in self.equity_detachments
        ]
        tranches += [
            TrancheSpec.senior(
                frac * cap, self.spread, self.n_coupons, self.maturity,
                name=f"senior_a{frac:g}",
            )
            for frac in self.senior_attachments
        ]
        tranches += [
            TrancheSpec.mezzanine(
                a * cap, b * cap, self.spread, self.n_coupons, self.maturity,
                name=f"mezz_a{a:g}_b{b:g}",
            )
            for a, b in self.mezzanine_bounds
        ]
        return tuple(tranches)

    def to_dict(self) -> dict:
        return {
            "maturity": self.maturity,
            "spread": self.spread,
            "n_coupons": self.n_coupons,
            "nu": self.nu,
            "rho_values": list(self.rho_values),
            "equity_detachments": list(self.equity_detachments),
            "senior_attachments": list(self.senior_attachments),
            "mezzanine_bounds": [list(b) for b in self.mezzanine_bounds],
            "n_paths": self.n_paths,
            "seed": self.seed,
            "obligors": [[o.id, o.notional, o.recovery, o.lam] for o in self.obligors],
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def override(self, **kw) -> "CdoConfig":
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "CdoConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
        obligors_doc = _require(doc, "obligors", "config")
        if not isinstance(obligors_doc, list) or not obligors_doc:
            raise ConfigError("config.obligors must be a nonempty list")
        obligors = []
        for k, row in enumerate(obligors_doc):
            where = f"obligors[{k}]"
            oid = int(_require(row, "id", where))
            notional = float(_require(row, "notional", where))
            if "recovery_pct" in row:
                recovery = float(row["recovery_pct"]) / 100.0
            elif "recovery" in row:
                recovery = float(row["recovery"])
            else:
                raise ConfigError(f"{where}: missing key 'recovery_pct' (or 'recovery')")
            if "lambda_pct" in row:
                lam = float(row["lambda_pct"]) / 100.0
            elif "lambda" in row:
                lam = float(row["lambda"])
            else:
                raise ConfigError(f"{where}: missing key 'lambda_pct' (or 'lambda')")
            try:
                obligors.append(ObligorSpec(id=oid, notional=notional, recovery=recovery, lam=lam))
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from None
        mezz = doc.get("mezzanine_tranches", [])
        return cls(
            maturity=float(_require(doc, "maturity_years", "config")),
            spread=float(_require(doc, "spread", "config")),
            n_coupons=int(doc.get("n_coupons", 1)),
            nu=float(doc.get("nu", 5.0)),
            rho_values=_grid_values(_require(doc, "rho_grid", "config"), "rho_grid"),
            equity_detachments=tuple(float(v) for v in doc.get("equity_detachments", [])),
            senior_attachments=tuple(float(v) for v in doc.get("senior_attachments", [])),
            mezzanine_bounds=tuple((float(a), float(b)) for a, b in mezz),
            n_paths=int(_require(doc, "n_paths", "config")),
            seed=int(_require(doc, "seed", "config")),
            obligors=tuple(obligors),
        )

    @classmethod
    def from_file(cls, path) -> "CdoConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


def run_cdo_sweep(config: CdoConfig) -> CdoSweepResult:
    return correlation_sweep(
        config.obligors,
        config.build_tranches(),
        config.rho_values,
        config.n_paths,
        config.seed,
        nu=config.nu,
    )


def write_cdo_csv(result: CdoSweepResult, config: CdoConfig, path) -> None:
    """One row per (tranche, rho), tranches in config order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# covloss cdo-sweep v1\n")
        fh.write(
            f"# config_hash={config.config_hash()} seed={result.seed} n_paths={result.n_paths}\n"
        )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["tranche", "kind", "attachment", "detachment", "rho",
             "default_leg", "default_se", "payment_leg", "payment_se"]
        )
        for tranche in result.tranches:
            for rho in result.rho_values:
                p = result.prices[(tranche.name, rho)]
                writer.writerow(
                    [
                        tranche.name, tranche.kind,
                        _fmt(tranche.attachment), _fmt(tranche.detachment), _fmt(rho),
                        _fmt(p.default_leg), _fmt(p.default_se),
                        _fmt(p.payment_leg), _fmt(p.payment_se),
                    ]
                )


def cdo_monotonicity_jsonable(
    result: CdoSweepResult, config: CdoConfig, k_sigma: float
) -> dict:
    verdicts = result.sign_verdicts(k_sigma)
    return {
        "schema": "covloss-cdo-monotonicity-v1",
        "config_hash": config.config_hash(),
        "seed": result.seed,
        "k_sigma": k_sigma,
        "passed": all(v.passed for v in verdicts),
        "verdicts": [
            {
                "axis": v.axis,
                "kind": v.kind,
                "leg": v.leg,
                "direction": v.direction,
                "passed": v.passed,
                "worst_oriented_increment": v.worst_oriented,
                "worst_stderr": v.worst_stderr,
                "worst_label": v.worst_label,
                "n_increments": v.n_increments,
            }
            for v in sorted(verdicts, key=lambda v: (v.axis, v.kind, v.leg))
        ],
    }
