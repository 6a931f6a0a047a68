"""Synthetic CDO tranche legs under a one-factor Student-t copula.

Obligor i defaults by time t when its latent variable X_i, a standard
Student t built from one common factor,

    X_i = sqrt(K) ( sqrt(rho) T + sqrt(1 - rho) T_i ),  K = nu / chi2_nu,

reaches the barrier B_i(t) = t_nu^{-1}(exp(-lambda_i t)). The portfolio loss
at t adds each defaulted obligor's loss given default, and tranche legs are
plain expectations of piecewise-linear payoffs of the loss path (discounting
at zero):

    equity(B):  default = E[L(T) - (L(T) - B)^+]
                payment = s (T/K) sum_k E[(B - L(t_k))^+]
    senior(A):  default = E[(L(T) - A)^+]
                payment = s T (L_max - A) - s (T/K) sum_k E[(L(t_k) - A)^+]
    mezz(A,B):  default and payment legs are the corresponding differences

with coupon dates t_k = k T / K. A correlation sweep reuses one set of raw
draws across all rho cells (common random numbers), so adjacent-cell price
increments carry tight pathwise standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ccp import student_t_quantile
from .factors import RngStream


@dataclass(frozen=True)
class ObligorSpec:
    """One reference entity in the pool."""

    id: int
    notional: float
    recovery: float
    lam: float

    def __post_init__(self) -> None:
        if self.notional < 0:
            raise ValueError(f"obligor {self.id}: notional must be >= 0")
        if not 0.0 <= self.recovery <= 1.0:
            raise ValueError(f"obligor {self.id}: recovery must lie in [0, 1]")
        if self.lam < 0:
            raise ValueError(f"obligor {self.id}: default intensity must be >= 0")

    @property
    def loss_given_default(self) -> float:
        return (1.0 - self.recovery) * self.notional


@dataclass(frozen=True)
class TrancheSpec:
    """One tranche: attachment/detachment in currency units of pool loss.

    kind is "equity" (attachment 0), "senior" (detachment open-ended,
    stored as +inf) or "mezzanine". ``spread`` is the running spread paid on
    the outstanding tranche notional at the ``n_coupons`` dates k*maturity/K.
    """

    name: str
    kind: str
    attachment: float
    detachment: float
    spread: float
    n_coupons: int
    maturity: float

    def __post_init__(self) -> None:
        if self.kind not in ("equity", "senior", "mezzanine"):
            raise ValueError(f"unknown tranche kind {self.kind!r}")
        if self.spread < 0:
            raise ValueError("spread must be nonnegative")
        if self.n_coupons < 1:
            raise ValueError("need at least one coupon date")
        if self.maturity <= 0:
            raise ValueError("maturity must be positive")
        if self.kind == "equity":
            if self.attachment != 0.0:
                raise ValueError("equity tranche attaches at zero")
            if not 0.0 < self.detachment < math.inf:
                raise ValueError("equity detachment must be positive and finite")
        elif self.kind == "senior":
            if self.attachment < 0:
                raise ValueError("senior attachment must be nonnegative")
            if self.detachment != math.inf:
                raise ValueError("senior tranche has an open detachment (use inf)")
        else:
            if not 0.0 < self.attachment < self.detachment < math.inf:
                raise ValueError(
                    f"mezzanine bounds must satisfy 0 < A < B < inf, "
                    f"got A={self.attachment}, B={self.detachment}"
                )

    @classmethod
    def equity(cls, detachment, spread, n_coupons, maturity, name=None) -> "TrancheSpec":
        return cls(name or f"equity_b{detachment:g}", "equity", 0.0, float(detachment),
                   spread, n_coupons, maturity)

    @classmethod
    def senior(cls, attachment, spread, n_coupons, maturity, name=None) -> "TrancheSpec":
        return cls(name or f"senior_a{attachment:g}", "senior", float(attachment), math.inf,
                   spread, n_coupons, maturity)

    @classmethod
    def mezzanine(cls, attachment, detachment, spread, n_coupons, maturity, name=None) -> "TrancheSpec":
        return cls(name or f"mezz_a{attachment:g}_b{detachment:g}", "mezzanine",
                   float(attachment), float(detachment), spread, n_coupons, maturity)

    @property
    def coupon_times(self) -> np.ndarray:
        return self.maturity / self.n_coupons * np.arange(1, self.n_coupons + 1)


def default_thresholds(obligors, nu: float, times) -> np.ndarray:
    """Latent default barriers B_i(t_k), one row per date.

    B_i(t) = t_nu^{-1}(exp(-lambda_i t)), nonincreasing in t; a zero
    intensity yields +inf (the obligor never defaults).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty vector")
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and strictly increasing")
    lam = np.array([o.lam for o in obligors], dtype=float)
    survival = np.exp(-np.outer(times, lam))
    return student_t_quantile(survival, nu)


@dataclass(frozen=True, eq=False)
class LossPathBatch:
    """Cumulative pool losses along the coupon schedule, path-major.

    times     (n_dates,) coupon dates
    losses    (n_paths, n_dates) cumulative loss, nondecreasing along dates
    loss_cap  total loss given default of the pool (every loss <= loss_cap)
    """

    times: np.ndarray
    losses: np.ndarray
    loss_cap: float

    def __post_init__(self) -> None:
        if self.losses.ndim != 2 or self.times.ndim != 1:
            raise ValueError("losses must be (paths, dates), times a vector")
        if self.losses.shape[1] != self.times.shape[0]:
            raise ValueError("losses misaligned with times")
        if np.any(self.losses < 0) or np.any(self.losses > self.loss_cap * (1 + 1e-12)):
            raise ValueError("losses must lie in [0, loss_cap]")
        if np.any(np.diff(self.losses, axis=1) < 0):
            raise ValueError("losses must be nondecreasing along the schedule")
        self.times.setflags(write=False)
        self.losses.setflags(write=False)

    @property
    def n_paths(self) -> int:
        return self.losses.shape[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.losses[:, -1]


def _draw_raw(n_obligors: int, n_paths: int, stream: RngStream, nu: float):
    """Loading-free draws for the one-factor model; fixed draw order."""
    rng = stream.generator()
    chi2 = rng.chisquare(nu, n_paths)
    t = rng.standard_normal(n_paths)
    t_i = rng.standard_normal((n_paths, n_obligors))
    return nu / chi2, t, t_i


def _assemble_x(rho: float, mixing_k, t, t_i) -> np.ndarray:
    x = math.sqrt(rho) * t[:, None] + math.sqrt(1.0 - rho) * t_i
    x *= np.sqrt(mixing_k)[:, None]
    return x


def _losses_from_x(x: np.ndarray, thresholds: np.ndarray, lgd: np.ndarray) -> np.ndarray:
    out = np.empty((x.shape[0], thresholds.shape[0]))
    for k in range(thresholds.shape[0]):
        out[:, k] = (x >= thresholds[k]).astype(float) @ lgd
    return out


def simulate_loss_paths(
    obligors, rho: float, nu: float, times, n_paths: int, stream: RngStream
) -> LossPathBatch:
    """Simulate cumulative pool losses on a coupon schedule.

    Same (seed, batch) stream, same output, bit for bit. Defaults are read
    off one terminal latent variable against date-dependent barriers, so a
    path's loss is automatically nondecreasing in time.
    """
    obligors = list(obligors)
    if len(obligors) == 0:
        raise ValueError("need at least one obligor")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho={rho} outside [0, 1)")
    if not nu > 2.0:
        raise ValueError(f"nu={nu} must exceed 2")
    if n_paths < 1:
        raise ValueError("need at least one path")
    thresholds = default_thresholds(obligors, nu, times)
    lgd = np.array([o.loss_given_default for o in obligors], dtype=float)
    mixing_k, t, t_i = _draw_raw(len(obligors), n_paths, stream, nu)
    x = _assemble_x(rho, mixing_k, t, t_i)
    losses = _losses_from_x(x, thresholds, lgd)
    return LossPathBatch(
        times=np.asarray(times, dtype=float).copy(), losses=losses, loss_cap=float(lgd.sum())
    )


def _leg_payoffs(paths: LossPathBatch, tranche: TrancheSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-path default-leg and payment-leg payoffs of one tranche."""
    if abs(paths.times[-1] - tranche.maturity) > 1e-12:
        raise ValueError("loss paths were simulated on a different maturity")
    if paths.times.shape[0] != tranche.n_coupons:
        raise ValueError("loss paths were simulated on a different coupon schedule")
    if tranche.kind != "senior" and tranche.detachment > paths.loss_cap * (1 + 1e-12):
        raise ValueError(
            f"tranche {tranche.name}: detachment {tranche.detachment} exceeds "
            f"the pool loss cap {paths.loss_cap}"
        )
    if tranche.attachment >= paths.loss_cap:
        raise ValueError(
            f"tranche {tranche.name}: attachment {tranche.attachment} at or above "
            f"the pool loss cap {paths.loss_cap}"
        )
    terminal = paths.terminal
    accrual = tranche.spread * tranche.maturity / tranche.n_coupons
    if tranche.kind == "equity":
        b = tranche.detachment
        default = terminal - np.maximum(terminal - b, 0.0)
        payment = accrual * np.maximum(b - paths.losses, 0.0).sum(axis=1)
    elif tranche.kind == "senior":
        a = tranche.attachment
        default = np.maximum(terminal - a, 0.0)
        payment = (
            tranche.spread * tranche.maturity * (paths.loss_cap - a)
            - accrual * np.maximum(paths.losses - a, 0.0).sum(axis=1)
        )
    else:
        a, b = tranche.attachment, tranche.detachment
        default = np.maximum(terminal - a, 0.0) - np.maximum(terminal - b, 0.0)
        payment = (
            tranche.spread * tranche.maturity * (b - a)
            - accrual
            * (np.maximum(paths.losses - a, 0.0) - np.maximum(paths.losses - b, 0.0)).sum(axis=1)
        )
    return default, payment


@dataclass(frozen=True)
class LegPrices:
    """Monte Carlo prices of one tranche's two legs with their stderrs."""

    default_leg: float
    payment_leg: float
    default_se: float
    payment_se: float


def price_legs(paths: LossPathBatch, tranche: TrancheSpec) -> LegPrices:
    """Price both legs of a tranche on simulated loss paths.

    Standard errors are pathwise: std(payoff, ddof=1)/sqrt(n_paths).
    """
    default, payment = _leg_payoffs(paths, tranche)
    n = paths.n_paths
    root_n = math.sqrt(n)
    return LegPrices(
        default_leg=float(default.mean()),
        payment_leg=float(payment.mean()),
        default_se=float(default.std(ddof=1) / root_n) if n > 1 else math.inf,
        payment_se=float(payment.std(ddof=1) / root_n) if n > 1 else math.inf,
    )


@dataclass(frozen=True)
class IncrementRecord:
    """CRN-coupled price increment between two adjacent sweep cells."""

    axis: str            # "rho" or "attachment"
    kind: str
    leg: str             # "default" or "payment"
    tranche_from: str
    tranche_to: str
    rho: float | None    # the rho at which an attachment increment is taken
    rho_from: float | None
    rho_to: float | None
    mean: float
    stderr: float


# Expected monotonicity directions, +1 nondecreasing / -1 nonincreasing.
# Mezzanine legs are reported but carry no expected sign.
RHO_DIRECTIONS = {
    ("equity", "default"): -1,
    ("equity", "payment"): +1,
    ("senior", "default"): +1,
    ("senior", "payment"): -1,
}
ATTACHMENT_DIRECTIONS = {
    ("equity", "default"): +1,
    ("equity", "payment"): +1,
    ("senior", "default"): -1,
    ("senior", "payment"): -1,
}


@dataclass(frozen=True)
class SignVerdict:
    """Monotonicity verdict for one (kind, leg, axis) family of increments."""

    axis: str
    kind: str
    leg: str
    direction: int
    passed: bool
    worst_oriented: float
    worst_stderr: float
    worst_label: str
    n_increments: int


@dataclass(frozen=True, eq=False)
class CdoSweepResult:
    """Prices and CRN-coupled increments over a correlation grid."""

    rho_values: tuple[float, ...]
    tranches: tuple[TrancheSpec, ...]
    prices: dict            # (tranche name, rho) -> LegPrices
    increments: tuple[IncrementRecord, ...]
    n_paths: int
    seed: int

    def sign_verdicts(self, k_sigma: float = 3.0) -> tuple[SignVerdict, ...]:
        """One verdict per (kind, leg, axis) with an expected direction.

        An increment passes when direction * increment >= -k_sigma * stderr;
        the verdict keeps the worst margin and its label.
        """
        directions = {"rho": RHO_DIRECTIONS, "attachment": ATTACHMENT_DIRECTIONS}
        verdicts = []
        for axis, table in directions.items():
            for (kind, leg), direction in table.items():
                recs = [r for r in self.increments if r.axis == axis and r.kind == kind and r.leg == leg]
                if not recs:
                    continue
                worst = min(recs, key=lambda r: direction * r.mean + k_sigma * r.stderr)
                oriented = direction * worst.mean
                label = (
                    f"{worst.tranche_from}@rho[{worst.rho_from}->{worst.rho_to}]"
                    if axis == "rho"
                    else f"{worst.tranche_from}->{worst.tranche_to}@rho={worst.rho}"
                )
                passed = all(direction * r.mean >= -k_sigma * r.stderr for r in recs)
                verdicts.append(
                    SignVerdict(
                        axis=axis, kind=kind, leg=leg, direction=direction, passed=passed,
                        worst_oriented=oriented, worst_stderr=worst.stderr,
                        worst_label=label, n_increments=len(recs),
                    )
                )
        return tuple(verdicts)

    def all_signs_pass(self, k_sigma: float = 3.0) -> bool:
        return all(v.passed for v in self.sign_verdicts(k_sigma))


def _sorted_same_kind(tranches) -> dict:
    """Tranches grouped by kind, ordered along their moving bound."""
    groups: dict[str, list[TrancheSpec]] = {}
    for tr in tranches:
        groups.setdefault(tr.kind, []).append(tr)
    for kind, group in groups.items():
        key = (lambda t: t.detachment) if kind == "equity" else (lambda t: t.attachment)
        group.sort(key=key)
    return groups


def _mean_se(payoff_diff: np.ndarray) -> tuple[float, float]:
    n = payoff_diff.shape[0]
    return float(payoff_diff.mean()), float(payoff_diff.std(ddof=1) / math.sqrt(n))


def correlation_sweep(
    obligors, tranches, rho_values, n_paths: int, seed: int, nu: float = 5.0
) -> CdoSweepResult:
    """Price every tranche on a correlation grid with common random numbers.

    One set of raw draws serves all cells; along the grid each price
    increment is estimated pathwise (mean and stderr of the per-path payoff
    difference), and within each cell adjacent same-kind tranches give the
    attachment-direction increments. All tranches must share one maturity
    and coupon schedule.
    """
    obligors = list(obligors)
    tranches = tuple(tranches)
    if not obligors:
        raise ValueError("need at least one obligor")
    if not tranches:
        raise ValueError("need at least one tranche")
    names = [t.name for t in tranches]
    if len(set(names)) != len(names):
        raise ValueError("tranche names must be unique")
    mats = {(t.maturity, t.n_coupons) for t in tranches}
    if len(mats) != 1:
        raise ValueError("all tranches in one sweep must share maturity and coupon count")
    maturity, n_coupons = next(iter(mats))
    times = maturity / n_coupons * np.arange(1, n_coupons + 1)
    rho_values = tuple(float(r) for r in rho_values)
    if any(not 0.0 <= r < 1.0 for r in rho_values):
        raise ValueError("rho grid must lie in [0, 1)")
    if any(b <= a for a, b in zip(rho_values, rho_values[1:])):
        raise ValueError("rho grid must be strictly increasing")
    if not nu > 2.0:
        raise ValueError(f"nu={nu} must exceed 2")
    if n_paths < 2:
        raise ValueError("need at least two paths")

    thresholds = default_thresholds(obligors, nu, times)
    lgd = np.array([o.loss_given_default for o in obligors], dtype=float)
    loss_cap = float(lgd.sum())
    mixing_k, t, t_i = _draw_raw(len(obligors), n_paths, RngStream(seed, 0), nu)

    groups = _sorted_same_kind(tranches)
    prices: dict = {}
    increments: list[IncrementRecord] = []
    prev_rho: float | None = None
    prev_payoffs: dict | None = None
    for rho in rho_values:
        x = _assemble_x(rho, mixing_k, t, t_i)
        batch = LossPathBatch(
            times=times.copy(), losses=_losses_from_x(x, thresholds, lgd), loss_cap=loss_cap
        )
        payoffs = {tr.name: _leg_payoffs(batch, tr) for tr in tranches}
        for tr in tranches:
            d, p = payoffs[tr.name]
            prices[(tr.name, rho)] = LegPrices(
                default_leg=float(d.mean()),
                payment_leg=float(p.mean()),
                default_se=float(d.std(ddof=1) / math.sqrt(n_paths)),
                payment_se=float(p.std(ddof=1) / math.sqrt(n_paths)),
            )
        for kind, group in groups.items():
            for t_lo, t_hi in zip(group, group[1:]):
                for leg, pick in (("default", 0), ("payment", 1)):
                    mean, se = _mean_se(payoffs[t_hi.name][pick] - payoffs[t_lo.name][pick])
                    increments.append(
                        IncrementRecord(
                            axis="attachment", kind=kind, leg=leg,
                            tranche_from=t_lo.name, tranche_to=t_hi.name,
                            rho=rho, rho_from=None, rho_to=None, mean=mean, stderr=se,
                        )
                    )
        if prev_payoffs is not None:
            for tr in tranches:
                for leg, pick in (("default", 0), ("payment", 1)):
                    mean, se = _mean_se(payoffs[tr.name][pick] - prev_payoffs[tr.name][pick])
                    increments.append(
                        IncrementRecord(
                            axis="rho", kind=tr.kind, leg=leg,
                            tranche_from=tr.name, tranche_to=tr.name,
                            rho=None, rho_from=prev_rho, rho_to=rho, mean=mean, stderr=se,
                        )
                    )
        prev_rho, prev_payoffs = rho, payoffs

    return CdoSweepResult(
        rho_values=rho_values,
        tranches=tranches,
        prices=prices,
        increments=tuple(increments),
        n_paths=n_paths,
        seed=seed,
    )
