"""Domain types for risk-aware package-delivery planning.

A mission runs over epochs.  At the start of every epoch a catalog of
packages is available at the depot; the agent executes an ordered sequence
of delivery cycles (depot -> location -> depot).  Each leg of a cycle
succeeds independently with the package's per-leg probability ``rho``, so a
full cycle survives with probability ``rho**2``.  Losing the agent costs
``theta`` and ends the mission.

This module owns:

* the immutable problem/plan types and their validation,
* the reward-to-risk ratio ``gamma = r*rho / (1 - rho**2)``,
* the probability <-> distance conversion (``rho = phi**d``),
* the canonical execution order used by every planner,
* the JSON dict schema for instances and plans.

All types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DomainError,
    HorizonMismatchError,
    InvalidInstanceError,
    UnknownPackageIdError,
)

__all__ = [
    "PackageSpec",
    "Horizon",
    "Instance",
    "EpochPlan",
    "MissionPlan",
    "UNBOUNDED",
    "ViolationCode",
    "Violation",
    "validate_instance",
    "ensure_valid",
    "reward_to_risk",
    "gamma_values",
    "canonical_delivery_order",
    "canonical_sort_key",
    "probability_to_distance",
    "distance_to_probability",
    "instance_to_dict",
    "instance_from_dict",
    "plan_to_dict",
    "plan_from_dict",
]

#: An epoch plan is an ordered sequence of package ids.  Hand-built plans
#: are plain tuples; the finite solver may hand back numpy views into one
#: shared sorted-id array (cheap prefixes), which iterate identically.
EpochPlan = Sequence[int]


class _UnboundedType:
    """Singleton marker for a diverging (riskless, positive-reward) value."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"


UNBOUNDED = _UnboundedType()


@dataclass(frozen=True, slots=True)
class PackageSpec:
    """One deliverable package.

    ``leg_success`` is the per-leg traversal probability; the round trip
    succeeds with ``leg_success**2``.  Slotted: catalogs can run to
    millions of packages.
    """

    id: int
    reward: float
    leg_success: float


@dataclass(frozen=True)
class Horizon:
    """Mission length: a positive epoch count, or unbounded."""

    epochs: Optional[int] = None

    @classmethod
    def finite(cls, k: int) -> "Horizon":
        return cls(epochs=int(k))

    @classmethod
    def infinite(cls) -> "Horizon":
        return cls(epochs=None)

    @property
    def is_finite(self) -> bool:
        return self.epochs is not None


@dataclass(frozen=True)
class Instance:
    """A full planning problem.

    ``per_epoch_packages`` (optional) restricts each epoch to a subset of
    the catalog; when present its length must equal the finite horizon.
    """

    theta: float
    horizon: Horizon
    packages: tuple[PackageSpec, ...]
    per_epoch_packages: Optional[tuple[frozenset[int], ...]] = None

    def package_by_id(self, pkg_id: int) -> PackageSpec:
        try:
            return self._id_map()[int(pkg_id)]
        except KeyError:
            raise UnknownPackageIdError(f"unknown package id {pkg_id}") from None

    def has_package(self, pkg_id: int) -> bool:
        return int(pkg_id) in self._id_map()

    def allowed_ids(self, epoch: int) -> frozenset[int]:
        """Ids deliverable in 1-based ``epoch``."""
        if self.per_epoch_packages is not None:
            return self.per_epoch_packages[epoch - 1]
        cached = getattr(self, "_all_ids_cache", None)
        if cached is None:
            cached = frozenset(self._id_map())
            object.__setattr__(self, "_all_ids_cache", cached)
        return cached

    # Caches live on the frozen instance via object.__setattr__; they are
    # derived data only, never part of equality.
    def _id_map(self) -> dict[int, PackageSpec]:
        cached = getattr(self, "_id_map_cache", None)
        if cached is None:
            cached = {p.id: p for p in self.packages}
            object.__setattr__(self, "_id_map_cache", cached)
        return cached

    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(ids, rewards, leg_success) as numpy arrays, cached."""
        cached = getattr(self, "_array_cache", None)
        if cached is None:
            ids = np.fromiter((p.id for p in self.packages), dtype=np.int64, count=len(self.packages))
            rewards = np.fromiter((p.reward for p in self.packages), dtype=np.float64, count=len(self.packages))
            rhos = np.fromiter((p.leg_success for p in self.packages), dtype=np.float64, count=len(self.packages))
            cached = (ids, rewards, rhos)
            object.__setattr__(self, "_array_cache", cached)
        return cached


@dataclass(frozen=True, eq=False)
class MissionPlan:
    """Delivery plan for a whole mission.

    Exactly one of ``plans`` (one epoch plan per finite epoch) or
    ``stationary`` (one epoch plan repeated forever) is set.  Equality is
    intentionally disabled; compare via :meth:`as_tuples`.
    """

    plans: Optional[tuple[EpochPlan, ...]] = None
    stationary: Optional[EpochPlan] = None

    def __post_init__(self):
        if (self.plans is None) == (self.stationary is None):
            raise ValueError("MissionPlan needs exactly one of plans/stationary")

    @classmethod
    def finite(cls, plans: Iterable[EpochPlan]) -> "MissionPlan":
        return cls(plans=tuple(plans), stationary=None)

    @classmethod
    def from_stationary(cls, plan: EpochPlan) -> "MissionPlan":
        return cls(plans=None, stationary=plan)

    @property
    def is_stationary(self) -> bool:
        return self.stationary is not None

    def as_tuples(self):
        """Canonical pure-tuple form, suitable for comparison."""
        if self.stationary is not None:
            return ("stationary", tuple(int(i) for i in self.stationary))
        return ("plans", tuple(tuple(int(i) for i in p) for p in self.plans))


class ViolationCode(str, enum.Enum):
    NEGATIVE_REWARD = "negative_reward"
    PROBABILITY_OUT_OF_RANGE = "probability_out_of_range"
    DUPLICATE_ID = "duplicate_id"
    HORIZON_MISMATCH = "horizon_mismatch"
    UNKNOWN_PACKAGE_ID = "unknown_package_id"
    NEGATIVE_THETA = "negative_theta"
    INVALID_ID = "invalid_id"


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    message: str

    def __str__(self):
        return f"{self.code.value}: {self.message}"


def _packages_pass_vector_checks(instance: Instance) -> bool:
    """Coarse all-or-nothing package checks via the cached arrays."""
    try:
        ids, rewards, rhos = instance._arrays()
    except (TypeError, ValueError, OverflowError):
        return False
    if ids.size != len(instance.packages):
        return False
    return bool(
        (ids >= 0).all()
        and np.unique(ids).size == ids.size
        and np.isfinite(rewards).all()
        and (rewards >= 0).all()
        and np.isfinite(rhos).all()
        and (rhos >= 0).all()
        and (rhos <= 1).all()
    )


def validate_instance(instance: Instance) -> list[Violation]:
    """Check every type invariant; return the complete violation list.

    An empty list means the instance is valid.  Use :func:`ensure_valid`
    to raise instead.  The result is cached on the (immutable) instance so
    solvers can re-validate for free.
    """
    cached = getattr(instance, "_violations_cache", None)
    if cached is not None:
        return list(cached)

    out: list[Violation] = []

    theta = instance.theta
    if not (isinstance(theta, (int, float)) and math.isfinite(theta) and theta >= 0):
        out.append(Violation(ViolationCode.NEGATIVE_THETA, f"theta must be a finite non-negative real, got {theta!r}"))

    horizon = instance.horizon
    if horizon.is_finite and (not isinstance(horizon.epochs, int) or horizon.epochs < 1):
        out.append(Violation(ViolationCode.HORIZON_MISMATCH, f"finite horizon must be a positive integer, got {horizon.epochs!r}"))

    # Large catalogs take the vectorized path; the per-package walk (which
    # produces precise messages) runs only when it may find something.
    walk_packages = len(instance.packages) <= 50_000 or not _packages_pass_vector_checks(instance)

    seen: set[int] = set()
    if walk_packages:
        for pkg in instance.packages:
            if not isinstance(pkg.id, int) or isinstance(pkg.id, bool) or pkg.id < 0:
                out.append(Violation(ViolationCode.INVALID_ID, f"package id must be a non-negative integer, got {pkg.id!r}"))
                continue
            if pkg.id in seen:
                out.append(Violation(ViolationCode.DUPLICATE_ID, f"package id {pkg.id} appears more than once"))
            seen.add(pkg.id)
            r = pkg.reward
            if not (isinstance(r, (int, float)) and math.isfinite(r) and r >= 0):
                out.append(Violation(ViolationCode.NEGATIVE_REWARD, f"package {pkg.id}: reward must be a finite non-negative real, got {r!r}"))
            rho = pkg.leg_success
            if not (isinstance(rho, (int, float)) and math.isfinite(rho) and 0.0 <= rho <= 1.0):
                out.append(Violation(ViolationCode.PROBABILITY_OUT_OF_RANGE, f"package {pkg.id}: leg_success must lie in [0, 1], got {rho!r}"))

    pep = instance.per_epoch_packages
    if pep is not None:
        if not horizon.is_finite:
            out.append(Violation(ViolationCode.HORIZON_MISMATCH, "per_epoch_packages requires a finite horizon"))
        elif len(pep) != horizon.epochs:
            out.append(Violation(
                ViolationCode.HORIZON_MISMATCH,
                f"per_epoch_packages has {len(pep)} entries but horizon is {horizon.epochs}"))
        if not walk_packages:
            seen = set(instance._id_map())
        for h, id_set in enumerate(pep, start=1):
            for pkg_id in sorted(id_set):
                if pkg_id not in seen:
                    out.append(Violation(ViolationCode.UNKNOWN_PACKAGE_ID, f"epoch {h} references unknown package id {pkg_id}"))

    object.__setattr__(instance, "_violations_cache", tuple(out))
    return out


def ensure_valid(instance: Instance) -> Instance:
    """Return ``instance`` unchanged, or raise with all violations."""
    violations = validate_instance(instance)
    if violations:
        raise InvalidInstanceError(violations)
    return instance


def reward_to_risk(package: PackageSpec) -> float:
    """Reward-to-risk ratio ``gamma = r*rho / (1 - rho**2)``.

    The numerator is the expected delivery reward of the cycle, the
    denominator the probability of losing the agent during it.  Riskless
    positive-reward packages (rho = 1, r > 0) return ``math.inf``; zero
    reward or a certain-failure leg (rho = 0) returns 0.
    """
    r, rho = package.reward, package.leg_success
    if rho == 1.0:
        return math.inf if r > 0 else 0.0
    if r == 0.0 or rho == 0.0:
        return 0.0
    return r * rho / (1.0 - rho * rho)


def gamma_values(rewards: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """Vectorized :func:`reward_to_risk` over parallel arrays."""
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = rewards * rhos / (1.0 - rhos * rhos)
    return np.where(rhos == 1.0, np.where(rewards > 0, np.inf, 0.0), raw)


def canonical_sort_key(package: PackageSpec) -> tuple:
    """Sort key yielding the canonical execution order.

    Riskless positive-reward packages go first (descending reward, then
    ascending id, since they contribute pure reward and no risk); all
    others follow in non-increasing reward-to-risk order with ties broken
    by ascending id.
    """
    gamma = reward_to_risk(package)
    if math.isinf(gamma):
        return (0, -package.reward, package.id)
    return (1, -gamma, package.id)


def canonical_delivery_order(packages: Iterable[PackageSpec]) -> list[PackageSpec]:
    return sorted(packages, key=canonical_sort_key)


def probability_to_distance(rho: float, phi: float) -> float:
    """Distance whose traversal succeeds with probability ``rho``.

    ``phi`` is the per-unit-distance success probability, so ``rho =
    phi**d`` defines ``d = log(rho)/log(phi)`` (non-negative: both logs
    share a sign).  :func:`distance_to_probability` is the exact inverse.
    """
    if not (0.0 < phi < 1.0):
        raise DomainError(f"phi must lie strictly inside (0, 1), got {phi!r}")
    if rho == 0.0:
        raise DomainError("rho = 0 corresponds to an infinite distance")
    if not (0.0 < rho <= 1.0):
        raise DomainError(f"rho must lie in (0, 1], got {rho!r}")
    return math.log(rho) / math.log(phi) + 0.0  # +0.0 normalizes -0.0


def distance_to_probability(distance: float, phi: float) -> float:
    """Traversal success probability of ``distance`` units, ``phi**d``."""
    if not (0.0 < phi < 1.0):
        raise DomainError(f"phi must lie strictly inside (0, 1), got {phi!r}")
    if distance < 0:
        raise DomainError(f"distance must be non-negative, got {distance!r}")
    return phi ** distance


# --- JSON dict schema -------------------------------------------------------
#
# Instance: {"theta": number,
#            "horizon": {"finite": K} | "infinite",
#            "packages": [{"id": int, "reward": number, "rho": number}, ...],
#            "per_epoch_packages": [[int, ...], ...]}   (optional)
# Plan:     {"plans": [[id, ...], ...]} | {"stationary": [id, ...]}


def instance_to_dict(instance: Instance) -> dict:
    doc: dict = {
        "theta": instance.theta,
        "horizon": {"finite": instance.horizon.epochs} if instance.horizon.is_finite else "infinite",
        "packages": [
            {"id": p.id, "reward": p.reward, "rho": p.leg_success}
            for p in instance.packages
        ],
    }
    if instance.per_epoch_packages is not None:
        doc["per_epoch_packages"] = [sorted(ids) for ids in instance.per_epoch_packages]
    return doc


def instance_from_dict(doc: dict) -> Instance:
    try:
        raw_horizon = doc["horizon"]
        if raw_horizon == "infinite":
            horizon = Horizon.infinite()
        else:
            horizon = Horizon.finite(raw_horizon["finite"])
        packages = tuple(
            PackageSpec(id=int(p["id"]), reward=float(p["reward"]), leg_success=float(p["rho"]))
            for p in doc["packages"]
        )
        pep = doc.get("per_epoch_packages")
        per_epoch = tuple(frozenset(int(i) for i in ids) for ids in pep) if pep is not None else None
        theta = float(doc["theta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInstanceError([Violation(ViolationCode.HORIZON_MISMATCH, f"malformed instance document: {exc}")]) from exc
    return Instance(theta=theta, horizon=horizon, packages=packages, per_epoch_packages=per_epoch)


def plan_to_dict(plan: MissionPlan) -> dict:
    if plan.is_stationary:
        return {"stationary": [int(i) for i in plan.stationary]}
    return {"plans": [[int(i) for i in epoch] for epoch in plan.plans]}


def plan_from_dict(doc: dict) -> MissionPlan:
    if "stationary" in doc:
        return MissionPlan.from_stationary(tuple(int(i) for i in doc["stationary"]))
    if "plans" in doc:
        return MissionPlan.finite(tuple(int(i) for i in epoch) for epoch in doc["plans"])
    raise HorizonMismatchError("plan document needs a 'plans' or 'stationary' key")
