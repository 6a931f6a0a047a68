"""Student-t factor sampling of joint default and exposure scenarios.

One heavy-tail mixing variable K = nu / chi2_nu multiplies two overlapping
Gaussian factor structures:

    X_i = sqrt(K) ( sqrt(rho_cr) T + sgn(nom_i) sqrt(rho_wwr) W_i
                    + sqrt(1 - rho_cr - rho_wwr) T_i )
    Y_i = nom_i sigma_i sqrt(delta_l) sqrt(K) ( sqrt(rho_mkt) E
                    + sqrt(rho_wwr) W_i + sqrt(1 - rho_mkt - rho_wwr) E_i )

with T, E, T_i, E_i, W_i i.i.d. standard normal. X_i is the latent credit
value driving member i's default, Y_i the exposure move over the liquidation
period. Every X_i is standard Student t with nu degrees of freedom and every
Y_i a scaled one, for any admissible correlation choice, so default
probabilities and margin quantiles stay put while the dependence moves. The
shared W_i couples a member's own default with its exposure (wrong-way risk),
oriented by the sign of the position.

Raw draws are addressed by a (seed, batch) substream and carry no correlation
loadings, so a sweep over correlation grids can reuse the same draws in every
cell (common random numbers) by re-assembling with different loadings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .members import MemberUniverse

# Relative tolerance for scale-matrix symmetry/PSD checks; eigenvalues in
# (-tol, 0) are treated as exact zeros from floating-point cancellation.
PSD_REL_TOL = 1e-10


class InvalidModelError(ValueError):
    """Sampling was attempted with an inadmissible parameter set."""


class DegenerateConditioningError(ValueError):
    """Conditioning on a coordinate whose variance is zero."""


@dataclass(frozen=True)
class FactorModel:
    """Correlation and horizon parameters of the scenario generator.

    rho_cr     systematic credit correlation, in [0, 1)
    rho_mkt    systematic market correlation, in [0, 1)
    rho_wwr    wrong-way coupling between a member's default and its own
               exposure move; admissible iff 0 < rho_wwr < min(1-rho_cr, 1-rho_mkt)
    nu         tail index (degrees of freedom) of the Student t mixing, > 2
    delta_s    margin period of risk used for initial margin, in years
    delta_l    liquidation period of the exposure move, in years
    horizon_T  default observation horizon, in years
    """

    rho_cr: float
    rho_mkt: float
    rho_wwr: float
    nu: float = 5.0
    delta_s: float = 2.0 / 252.0
    delta_l: float = 5.0 / 252.0
    horizon_T: float = 5.0


@dataclass(frozen=True)
class ValidityVerdict:
    valid: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.valid


def validate_model(model: FactorModel) -> ValidityVerdict:
    """Check admissibility of a parameter set.

    Valid iff both systematic correlations lie in [0, 1), the degrees of
    freedom exceed 2 (so variances exist), the period lengths are ordered
    0 < delta_s < delta_l < horizon_T, and the wrong-way coupling satisfies
    0 < rho_wwr < min(1 - rho_cr, 1 - rho_mkt) so that all three loading
    squares are positive and sum to one.
    """
    m = model
    if not 0.0 <= m.rho_cr < 1.0:
        return ValidityVerdict(False, f"rho_cr={m.rho_cr} outside [0, 1)")
    if not 0.0 <= m.rho_mkt < 1.0:
        return ValidityVerdict(False, f"rho_mkt={m.rho_mkt} outside [0, 1)")
    if not m.nu > 2.0:
        return ValidityVerdict(False, f"nu={m.nu} must exceed 2 for finite variances")
    if not 0.0 < m.delta_s < m.delta_l < m.horizon_T:
        return ValidityVerdict(
            False,
            f"period lengths must satisfy 0 < delta_s < delta_l < horizon_T, "
            f"got ({m.delta_s}, {m.delta_l}, {m.horizon_T})",
        )
    if not m.rho_wwr > 0.0:
        return ValidityVerdict(False, f"rho_wwr={m.rho_wwr} must be strictly positive")
    cap = min(1.0 - m.rho_cr, 1.0 - m.rho_mkt)
    if not m.rho_wwr < cap:
        return ValidityVerdict(
            False, f"rho_wwr={m.rho_wwr} must stay below min(1-rho_cr, 1-rho_mkt)={cap}"
        )
    return ValidityVerdict(True)


@dataclass(frozen=True)
class RngStream:
    """Reproducible substream addressed by (seed, batch).

    Distinct batch indices spawn statistically independent generators from
    the same root seed; the same (seed, batch) pair always replays the same
    draws, which is what makes common-random-number sweeps possible.
    """

    seed: int
    batch: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.batch,)))


@dataclass(frozen=True, eq=False)
class RawDraws:
    """Loading-free draws, reusable by every cell of a correlation sweep.

    mixing_k  heavy-tail mixing K = nu / chi2_nu, one per path
    t         common credit factor
    e         common market factor
    t_i       idiosyncratic credit normals, one column per member
    e_i       idiosyncratic market normals, one column per member
    w_i       wrong-way normals shared by the credit and market sides
    """

    mixing_k: np.ndarray
    t: np.ndarray
    e: np.ndarray
    t_i: np.ndarray
    e_i: np.ndarray
    w_i: np.ndarray

    def __post_init__(self) -> None:
        for a in (self.mixing_k, self.t, self.e, self.t_i, self.e_i, self.w_i):
            a.setflags(write=False)

    @property
    def n_paths(self) -> int:
        return self.t.shape[0]

    @property
    def n_members(self) -> int:
        return self.t_i.shape[1]


def draw_raw(n_members: int, n_paths: int, stream: RngStream, nu: float) -> RawDraws:
    """Draw the loading-free variables for ``n_paths`` scenarios.

    The draw order (chi-square, common factors, then the per-member blocks)
    is part of the reproducibility contract: the same (seed, batch, shapes,
    nu) always yields bit-identical output.
    """
    if n_members < 1:
        raise ValueError("need at least one member")
    if n_paths < 1:
        raise ValueError("need at least one path")
    if not nu > 2.0:
        raise ValueError(f"nu={nu} must exceed 2")
    rng = stream.generator()
    chi2 = rng.chisquare(nu, n_paths)
    t = rng.standard_normal(n_paths)
    e = rng.standard_normal(n_paths)
    t_i = rng.standard_normal((n_paths, n_members))
    e_i = rng.standard_normal((n_paths, n_members))
    w_i = rng.standard_normal((n_paths, n_members))
    return RawDraws(mixing_k=nu / chi2, t=t, e=e, t_i=t_i, e_i=e_i, w_i=w_i)


@dataclass(frozen=True)
class FactorSample:
    """Single-path view: latent credit values, exposure moves, mixing value."""

    x: np.ndarray
    y: np.ndarray
    mixing_k: float


@dataclass(frozen=True, eq=False)
class ScenarioBatch:
    """A batch of joint scenarios, path-major.

    x         (n_paths, n+1) latent credit values, one column per member,
              column 0 being the reference member
    y         (n_paths, n) exposure moves of the external members, in
              currency units
    mixing_k  (n_paths,) heavy-tail mixing values
    """

    x: np.ndarray
    y: np.ndarray
    mixing_k: np.ndarray

    def __post_init__(self) -> None:
        if self.x.ndim != 2 or self.y.ndim != 2 or self.mixing_k.ndim != 1:
            raise ValueError("x and y must be 2-D, mixing_k 1-D")
        if not (self.x.shape[0] == self.y.shape[0] == self.mixing_k.shape[0]):
            raise ValueError(
                f"path counts disagree: x {self.x.shape[0]}, y {self.y.shape[0]}, "
                f"mixing_k {self.mixing_k.shape[0]}"
            )
        if self.x.shape[1] != self.y.shape[1] + 1:
            raise ValueError(
                f"x must carry one more column than y (the reference member), "
                f"got x {self.x.shape[1]} vs y {self.y.shape[1]}"
            )
        for a in (self.x, self.y, self.mixing_k):
            a.setflags(write=False)

    @property
    def n_paths(self) -> int:
        return self.x.shape[0]

    @property
    def n_external(self) -> int:
        return self.y.shape[1]

    def path(self, p: int) -> FactorSample:
        return FactorSample(x=self.x[p], y=self.y[p], mixing_k=float(self.mixing_k[p]))


def assemble_batch(model: FactorModel, members: MemberUniverse, raw: RawDraws) -> ScenarioBatch:
    """Apply a model's loadings to loading-free draws.

    Reusing one ``raw`` object across several models (differing only in
    correlations) yields common-random-number coupled batches.
    """
    verdict = validate_model(model)
    if not verdict:
        raise InvalidModelError(verdict.reason)
    if len(members) < 2:
        raise ValueError("member universe needs the reference plus at least one external member")
    if raw.n_members != len(members):
        raise ValueError(f"raw draws carry {raw.n_members} members, universe has {len(members)}")

    noms = members.noms
    sigmas = members.sigmas
    sqrt_k = np.sqrt(raw.mixing_k)[:, None]

    a_cr = math.sqrt(model.rho_cr)
    b_wwr = math.sqrt(model.rho_wwr)
    c_idio = math.sqrt(1.0 - model.rho_cr - model.rho_wwr)
    x = b_wwr * (np.sign(noms)[None, :] * raw.w_i)
    x += c_idio * raw.t_i
    x += a_cr * raw.t[:, None]
    x *= sqrt_k

    d_mkt = math.sqrt(model.rho_mkt)
    f_idio = math.sqrt(1.0 - model.rho_mkt - model.rho_wwr)
    y = b_wwr * raw.w_i[:, 1:] + f_idio * raw.e_i[:, 1:]
    y += d_mkt * raw.e[:, None]
    y *= sqrt_k
    y *= (noms[1:] * sigmas[1:] * math.sqrt(model.delta_l))[None, :]

    return ScenarioBatch(x=x, y=y, mixing_k=raw.mixing_k)


def sample_batch(
    model: FactorModel, members: MemberUniverse, n_paths: int, stream: RngStream
) -> ScenarioBatch:
    """Draw and assemble one batch of scenarios.

    Two calls with the same model, universe and stream are bit-identical.
    Raises InvalidModelError on an inadmissible model, ValueError on an
    empty universe or nonpositive path count.
    """
    verdict = validate_model(model)
    if not verdict:
        raise InvalidModelError(verdict.reason)
    raw = draw_raw(len(members), n_paths, stream, model.nu)
    return assemble_batch(model, members, raw)


# ---------------------------------------------------------------------------
# Elliptical parameter algebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EllipticalParams:
    """Location vector and scale matrix of an elliptical distribution.

    The scale matrix must be symmetric positive semidefinite up to a
    relative tolerance of 1e-10 on the smallest eigenvalue.
    """

    mu: np.ndarray
    gamma: np.ndarray

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)
        if mu.ndim != 1 or gamma.ndim != 2:
            raise ValueError("mu must be a vector and gamma a matrix")
        m = mu.shape[0]
        if gamma.shape != (m, m):
            raise ValueError(f"gamma shape {gamma.shape} does not match mu length {m}")
        if m:
            scale = max(1.0, float(np.abs(gamma).max()))
            if not np.all(np.abs(gamma - gamma.T) <= PSD_REL_TOL * scale):
                raise ValueError("gamma is not symmetric")
            min_eig = float(np.linalg.eigvalsh(gamma).min())
            if min_eig < -PSD_REL_TOL * scale:
                raise ValueError(f"gamma is not positive semidefinite (min eigenvalue {min_eig})")
        mu.setflags(write=False)
        gamma.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def conditional_params(joint: EllipticalParams, index0: int, x0: float) -> EllipticalParams:
    """Location and scale of an elliptical vector given one coordinate.

    Conditioning the remaining coordinates on {coordinate index0 = x0} keeps
    the vector in the elliptical class; the resulting location is

        mu_rest + gamma_rest,0 (x0 - mu_0) / gamma_00

    and the scale matrix is gamma_rest - outer(gamma_rest,0) / gamma_00, the
    Schur complement of the conditioned entry. Tiny negative eigenvalues
    produced by cancellation (within the relative PSD tolerance) are clamped
    to zero so the output is always a valid scale matrix.
    """
    if not 0 <= index0 < joint.dim:
        raise IndexError(f"index0={index0} out of range for dimension {joint.dim}")
    g = joint.gamma
    g00 = float(g[index0, index0])
    if g00 <= 0.0:
        raise DegenerateConditioningError(
            f"coordinate {index0} has nonpositive scale {g00}; cannot condition on it"
        )
    keep = [i for i in range(joint.dim) if i != index0]
    g0 = g[index0, keep]
    mu_c = joint.mu[keep] + g0 * ((x0 - float(joint.mu[index0])) / g00)
    gamma_c = g[np.ix_(keep, keep)] - np.outer(g0, g0) / g00
    gamma_c = 0.5 * (gamma_c + gamma_c.T)
    if keep:
        scale = max(1.0, float(np.abs(gamma_c).max()))
        w, v = np.linalg.eigh(gamma_c)
        if w.min() < 0.0:
            if w.min() < -PSD_REL_TOL * scale:
                raise DegenerateConditioningError(
                    f"conditioning produced an indefinite scale matrix (min eigenvalue {w.min()})"
                )
            w = np.maximum(w, 0.0)
            gamma_c = (v * w) @ v.T
            gamma_c = 0.5 * (gamma_c + gamma_c.T)
    return EllipticalParams(mu=mu_c, gamma=gamma_c)
