"""Clearing member descriptions shared by the factor sampler and the margin stack."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class MemberSpec:
    """Static description of one clearing member's cleared book.

    Parameters
    ----------
    id : int
        Member identifier, stable across reorderings of the universe.
    lam : float
        Default intensity per year, as a decimal (0.005 means 50 bps).
    nom : float
        Signed size of the cleared position, in currency units. The sign
        encodes the direction of the book; a short book has nom < 0.
    sigma : float
        Annualized volatility of the position's returns, as a fraction.
    """

    id: int
    lam: float
    nom: float
    sigma: float

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"member {self.id}: default intensity must be >= 0, got {self.lam}")
        if self.sigma < 0:
            raise ValueError(f"member {self.id}: volatility must be >= 0, got {self.sigma}")

    @classmethod
    def from_bps(cls, id: int, lambda_bps: float, nom: float, sigma: float) -> "MemberSpec":
        """Build a member from a default intensity quoted in basis points per year."""
        return cls(id=id, lam=lambda_bps * 1e-4, nom=nom, sigma=sigma)

    def default_prob(self, horizon: float) -> float:
        """Probability of default by ``horizon`` years under a constant intensity."""
        return 1.0 - math.exp(-self.lam * horizon)


@dataclass(frozen=True)
class MemberUniverse:
    """Ordered collection of members; position 0 plays the reference role.

    The ordering matters: the sampler emits latent credit values for every
    position and exposure moves for positions 1..n only, and the loss
    functional treats position 0 as the surviving reference whose losses
    are being measured.
    """

    members: tuple[MemberSpec, ...]

    def __post_init__(self) -> None:
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate member ids: {sorted(ids)}")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i: int) -> MemberSpec:
        return self.members[i]

    @cached_property
    def ids(self) -> tuple[int, ...]:
        return tuple(m.id for m in self.members)

    @cached_property
    def noms(self) -> np.ndarray:
        a = np.array([m.nom for m in self.members], dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def sigmas(self) -> np.ndarray:
        a = np.array([m.sigma for m in self.members], dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def lams(self) -> np.ndarray:
        a = np.array([m.lam for m in self.members], dtype=float)
        a.setflags(write=False)
        return a

    def with_reference(self, member_id: int) -> "MemberUniverse":
        """Reorder so that ``member_id`` sits at position 0.

        The relative order of the other members is preserved. Used when each
        member in turn plays the reference role of a sweep.
        """
        try:
            pos = self.ids.index(member_id)
        except ValueError:
            raise ValueError(f"no member with id {member_id}") from None
        reordered = (self.members[pos],) + self.members[:pos] + self.members[pos + 1:]
        return MemberUniverse(members=reordered)
