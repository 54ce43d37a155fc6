"""Exact expected-reward evaluation of delivery plans.

For an epoch plan executing packages ``1..q`` in order, the probability of
completing the first ``j`` cycles is the running product of round-trip
survivals, ``rho_bar_j = prod_{i<=j} rho_i**2`` (``rho_bar_0 = 1``); the
probability of delivering the j-th package is ``psi_j = rho_bar_{j-1} *
rho_j`` (the agent must finish every prior cycle and the outbound leg).
The conditional expected reward of the epoch is then

    E = sum_j r_j * psi_j - theta * (1 - rho_bar_q)

and mission totals chain epochs through the survival products.  Survival
products are computed by plain sequential multiplication in plan order (the
psi values are needed individually anyway); underflow to exact 0 is
acceptable semantics - an astronomically risky tail is worthless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import (
    EmptyPlanError,
    HorizonMismatchError,
    InvalidPlanError,
    UnknownPackageIdError,
)
from .model import (
    UNBOUNDED,
    EpochPlan,
    Instance,
    MissionPlan,
    _UnboundedType,
)

__all__ = [
    "EpochEvaluation",
    "MissionEvaluation",
    "evaluate_epoch",
    "evaluate_mission",
    "epoch_risk_ratio",
    "mission_evaluation_to_dict",
]

#: Relative tolerance for the direct-sum vs backward-recursion cross-check.
_TELESCOPE_RTOL = 1e-12


@dataclass(frozen=True)
class EpochEvaluation:
    """Per-cycle delivery probabilities and the epoch's expected reward."""

    delivery_probs: tuple[float, ...]
    epoch_survival: float
    expected_reward: float


@dataclass(frozen=True)
class MissionEvaluation:
    """Epoch evaluations chained with epoch-start survival probabilities.

    ``total`` is the mission expectation; it is :data:`UNBOUNDED` only for
    a nonempty stationary plan whose epoch survival is exactly 1 (an
    all-riskless loop collects reward forever).
    """

    epoch_evals: tuple[EpochEvaluation, ...]
    survival_to_epoch: tuple[float, ...]
    total: Union[float, _UnboundedType]


def _check_epoch_plan(plan: EpochPlan, instance: Instance, epoch: int | None) -> list[int]:
    ids = [int(i) for i in plan]
    if len(set(ids)) != len(ids):
        raise InvalidPlanError(f"epoch plan repeats a package id: {ids}")
    allowed = instance.allowed_ids(epoch) if epoch is not None else None
    for pkg_id in ids:
        if not instance.has_package(pkg_id):
            raise UnknownPackageIdError(f"unknown package id {pkg_id}")
        if allowed is not None and pkg_id not in allowed:
            raise UnknownPackageIdError(f"package id {pkg_id} is not available in epoch {epoch}")
    return ids


def evaluate_epoch(plan: EpochPlan, instance: Instance, *, epoch: int | None = None) -> EpochEvaluation:
    """Evaluate one epoch plan conditioned on the agent being alive.

    ``epoch`` (1-based) restricts ids to that epoch's catalog when the
    instance is heterogeneous; leave it ``None`` to allow the full catalog.
    """
    ids = _check_epoch_plan(plan, instance, epoch)
    psis: list[float] = []
    rho_bar = 1.0
    reward_sum = 0.0
    for pkg_id in ids:
        pkg = instance.package_by_id(pkg_id)
        rho = pkg.leg_success
        psi = rho_bar * rho
        psis.append(psi)
        reward_sum += pkg.reward * psi
        rho_bar *= rho * rho
    expected = reward_sum - instance.theta * (1.0 - rho_bar)
    return EpochEvaluation(
        delivery_probs=tuple(psis),
        epoch_survival=rho_bar,
        expected_reward=expected,
    )


def _finite_total(evals: list[EpochEvaluation]) -> tuple[float, tuple[float, ...]]:
    """Mission total by direct sum, cross-checked against the backward
    recursion ``v_h = E_h + rho_bar_h * v_{h+1}`` (telescoping identity)."""
    survival = 1.0
    survivals = []
    direct = 0.0
    for ev in evals:
        survivals.append(survival)
        direct += ev.expected_reward * survival
        survival *= ev.epoch_survival

    backward = 0.0
    for ev in reversed(evals):
        backward = ev.expected_reward + ev.epoch_survival * backward

    if not math.isclose(direct, backward, rel_tol=_TELESCOPE_RTOL, abs_tol=_TELESCOPE_RTOL):
        raise ArithmeticError(
            f"telescoping identity violated: direct={direct!r} backward={backward!r}")
    return direct, tuple(survivals)


def evaluate_mission(plan: MissionPlan, instance: Instance) -> MissionEvaluation:
    """Evaluate a mission plan against an instance.

    Finite plans must match a finite horizon epoch-for-epoch.  Stationary
    plans on an infinite horizon use the geometric closed form
    ``E / (1 - rho_bar)``; on a finite horizon they are expanded to one
    identical plan per epoch.
    """
    horizon = instance.horizon
    if plan.is_stationary:
        if horizon.is_finite:
            expanded = MissionPlan.finite([plan.stationary] * horizon.epochs)
            return evaluate_mission(expanded, instance)
        ev = evaluate_epoch(plan.stationary, instance)
        if ev.epoch_survival == 1.0:
            # Riskless loop: diverges when it earns anything, else worth 0.
            total = UNBOUNDED if ev.expected_reward != 0.0 else 0.0
            return MissionEvaluation(epoch_evals=(ev,), survival_to_epoch=(1.0,), total=total)
        total = ev.expected_reward / (1.0 - ev.epoch_survival)
        return MissionEvaluation(epoch_evals=(ev,), survival_to_epoch=(1.0,), total=total)

    if not horizon.is_finite:
        raise HorizonMismatchError("finite plan cannot be evaluated on an infinite horizon")
    if len(plan.plans) != horizon.epochs:
        raise HorizonMismatchError(
            f"plan has {len(plan.plans)} epochs but horizon is {horizon.epochs}")

    evals = [
        evaluate_epoch(epoch_plan, instance, epoch=h)
        for h, epoch_plan in enumerate(plan.plans, start=1)
    ]
    total, survivals = _finite_total(evals)
    return MissionEvaluation(epoch_evals=tuple(evals), survival_to_epoch=survivals, total=total)


def epoch_risk_ratio(plan: EpochPlan, instance: Instance) -> float:
    """Epoch risk ratio ``eps = E / (1 - rho_bar)`` of a nonempty plan.

    For a singleton plan this equals ``gamma - theta`` exactly.  When the
    plan is riskless (``rho_bar = 1``) the ratio diverges: returns
    ``+-math.inf`` matching the sign of ``E``, and 0.0 when ``E`` is also 0.
    """
    if len(plan) == 0:
        raise EmptyPlanError("epoch risk ratio requires a nonempty plan")
    ev = evaluate_epoch(plan, instance)
    denom = 1.0 - ev.epoch_survival
    if denom == 0.0:
        if ev.expected_reward == 0.0:
            return 0.0
        return math.inf if ev.expected_reward > 0 else -math.inf
    return ev.expected_reward / denom


def mission_evaluation_to_dict(evaluation: MissionEvaluation) -> dict:
    return {
        "epochs": [
            {
                "E": ev.expected_reward,
                "survival": ev.epoch_survival,
                "cumulative_survival": surv,
            }
            for ev, surv in zip(evaluation.epoch_evals, evaluation.survival_to_epoch)
        ],
        "total": "unbounded" if evaluation.total is UNBOUNDED else evaluation.total,
    }
