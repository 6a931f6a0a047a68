"""Reference-member loss functional and its pluggable generalization.

On each scenario the reference member absorbs, through its guarantee-fund
unit, a share of every defaulted member's collateral shortfall. A defaulted
member i contributes

    f_i(x) (y_i - m_i)^+   with   f_i(x) = 1{x_i >= B_i} / (1 + sum_j beta_j 1{x_j < B_j})

where m_i = IM_i + DF_i is member i's prefunded collateral and beta_j the
surviving members' default fund in units of the reference's. The reference
member never appears in the sum: x, y and the coefficient arrays live on the
external members only.

``member_loss`` is the direct vectorized evaluation; ``generic_loss``
composes arbitrary allocation/severity families and must agree with it
bit-for-bit on the clearing-house specialisation (tested).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ccp import ClearingSetup
from .factors import ScenarioBatch


def allocation_coefficient(i: int, x, betas, thresholds):
    """Share of member i's shortfall borne by the reference member.

    Zero when member i survives (x_i < B_i); otherwise one unit divided by
    the surviving members' fund units plus the reference's own. Values lie
    in [0, 1] and the function is nondecreasing and supermodular in x, which
    is what makes the loss respond monotonically to dependence (certified
    numerically in the supermod module).

    ``x`` may be a single point of length n or a batch (paths, n).
    """
    x = np.asarray(x, dtype=float)
    betas = np.asarray(betas, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if betas.ndim != 1 or thresholds.shape != betas.shape:
        raise ValueError("betas and thresholds must be vectors of equal length")
    if np.any(betas < 0):
        raise ValueError("betas must be nonnegative")
    n = betas.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"member index {i} out of range for {n} members")
    if x.shape[-1] != n:
        raise ValueError(f"x has {x.shape[-1]} coordinates, expected {n}")
    defaulted = x >= thresholds
    denom = 1.0 + np.where(defaulted, 0.0, betas).sum(axis=-1)
    return np.where(defaulted[..., i], 1.0, 0.0) / denom


@dataclass(frozen=True, eq=False)
class LossVector:
    """Per-path losses of the reference member.

    total          (n_paths,) nonnegative loss per scenario
    contributions  optional (n_paths, n) per-member terms summing to total
    """

    total: np.ndarray
    contributions: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.total.ndim != 1:
            raise ValueError("total must be a vector")
        if np.any(self.total < 0):
            raise ValueError("losses must be nonnegative")
        self.total.setflags(write=False)
        if self.contributions is not None:
            if self.contributions.shape[0] != self.total.shape[0]:
                raise ValueError("contributions misaligned with total")
            self.contributions.setflags(write=False)

    @property
    def n_paths(self) -> int:
        return self.total.shape[0]


def member_loss(
    batch: ScenarioBatch, setup: ClearingSetup, keep_contributions: bool = False
) -> LossVector:
    """Reference-member loss on every path of a batch.

    Direct evaluation: indicator of default against the latent thresholds,
    shortfall of the exposure move over prefunded collateral, allocation by
    surviving fund units. Requires the setup to be position-aligned with the
    batch (reference at position 0) and the reference to hold a positive
    default fund share.
    """
    n = batch.n_external
    if setup.thresholds.shape[0] != n + 1:
        raise ValueError(
            f"setup covers {setup.thresholds.shape[0]} members, batch carries {n + 1}"
        )
    betas = setup.betas
    collateral = setup.collateral[1:]
    thresholds = setup.thresholds[1:]

    defaulted = batch.x[:, 1:] >= thresholds
    denom = 1.0 + np.where(defaulted, 0.0, betas).sum(axis=-1)
    coeff = np.where(defaulted, 1.0, 0.0) / denom[:, None]
    shortfall = np.maximum(batch.y - collateral, 0.0)
    contributions = coeff * shortfall
    total = contributions.sum(axis=1)
    return LossVector(
        total=total, contributions=contributions if keep_contributions else None
    )


@dataclass(frozen=True)
class LossSpec:
    """Pluggable allocation/severity pair defining a portfolio loss.

    allocation  maps latent credit values (paths, n) to coefficients (paths, n)
    severity    maps exposure moves (paths, n) to per-member severities (paths, n)
    """

    n: int
    allocation: Callable[[np.ndarray], np.ndarray]
    severity: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def ccp(cls, betas, thresholds, collateral) -> "LossSpec":
        """Clearing-house specialisation: default-share allocation and
        collateral-shortfall severity."""
        betas = np.array(betas, dtype=float)
        thresholds = np.array(thresholds, dtype=float)
        collateral = np.array(collateral, dtype=float)
        if np.any(betas < 0):
            raise ValueError("betas must be nonnegative")
        if not betas.shape == thresholds.shape == collateral.shape:
            raise ValueError("betas, thresholds and collateral must be equal-length vectors")
        n = betas.shape[0]

        def allocation(x: np.ndarray) -> np.ndarray:
            return np.stack(
                [allocation_coefficient(i, x, betas, thresholds) for i in range(n)],
                axis=-1,
            )

        def severity(y: np.ndarray) -> np.ndarray:
            return np.maximum(np.asarray(y, dtype=float) - collateral, 0.0)

        return cls(n=n, allocation=allocation, severity=severity)


def generic_loss(batch: ScenarioBatch, spec: LossSpec, keep_contributions: bool = False) -> LossVector:
    """Loss under an arbitrary allocation/severity pair.

    Evaluates sum_i f_i(x) g_i(y_i) pathwise on the external members. With
    the clearing-house spec this reproduces ``member_loss`` exactly.
    """
    if spec.n != batch.n_external:
        raise ValueError(f"spec covers {spec.n} members, batch carries {batch.n_external}")
    x = batch.x[:, 1:]
    coeff = np.asarray(spec.allocation(x), dtype=float)
    if coeff.shape != x.shape:
        raise ValueError(f"allocation returned shape {coeff.shape}, expected {x.shape}")
    sev = np.asarray(spec.severity(batch.y), dtype=float)
    if sev.shape != batch.y.shape:
        raise ValueError(f"severity returned shape {sev.shape}, expected {batch.y.shape}")
    contributions = coeff * sev
    total = contributions.sum(axis=1)
    return LossVector(
        total=total, contributions=contributions if keep_contributions else None
    )
