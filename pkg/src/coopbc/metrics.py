"""System-level performance criteria: worst-receiver rate, per-user and joint
error criteria, the noiseless-cooperation combining ceiling, the optimal
exchange count, and who-starts-first decision regions."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .af import campaign, run_recursion
from .channel import (
    Asymmetric,
    BandwidthPlan,
    ChannelParams,
    CoopConfig,
    Receiver,
    plan_bandwidth,
)

__all__ = [
    "CriteriaReport",
    "RegionMap",
    "rate_af",
    "criteria",
    "simo_bound",
    "optimal_k",
    "decision_regions",
]

_TIE_TOL = 1e-12


@dataclass(frozen=True)
class CriteriaReport:
    """The four system criteria for one operating point. Fields are None when
    the corresponding inputs (SNRs for the rate, BERs for the error criteria)
    were not supplied."""

    rate_af: Optional[float]
    pe_max: Optional[float]
    pe_sum: Optional[float]
    pe_sys_bounds: Optional[tuple[float, float]]
    pe_sys_mc: Optional[float]


def rate_af(plan: BandwidthPlan, rho_pair: tuple[float, float]) -> float:
    """Worst-receiver common-message rate B_DL * min_j log2(1 + rho_j) in bits/s."""
    rho_I, rho_II = rho_pair
    return plan.B_DL * min(math.log2(1.0 + rho_I), math.log2(1.0 + rho_II))


def criteria(
    plan: BandwidthPlan,
    *,
    rho_pair: Optional[tuple[float, float]] = None,
    ber_pair: Optional[tuple[float, float]] = None,
    pe_sys_mc: Optional[float] = None,
) -> CriteriaReport:
    """Assemble the per-point criteria report.

    pe_max = max of the two raw BERs (every user's minimum quality), pe_sum =
    their sum (system average bound); any direct estimate of the joint error
    probability must land in [pe_max, pe_sum].
    """
    if rho_pair is None and ber_pair is None:
        raise ValueError("need rho_pair and/or ber_pair")
    rate = rate_af(plan, rho_pair) if rho_pair is not None else None
    pe_max = pe_sum = bounds = None
    if ber_pair is not None:
        p_I, p_II = ber_pair
        if not (0.0 <= p_I <= 1.0 and 0.0 <= p_II <= 1.0):
            raise ValueError("bit error rates must lie in [0, 1]")
        pe_max = max(p_I, p_II)
        pe_sum = p_I + p_II
        bounds = (pe_max, pe_sum)
        if pe_sys_mc is not None and not pe_max - 1e-15 <= pe_sys_mc <= pe_sum + 1e-15:
            raise ValueError("joint error estimate violates the max/union sandwich")
    elif pe_sys_mc is not None:
        raise ValueError("a joint error estimate needs the per-receiver pair")
    return CriteriaReport(rate, pe_max, pe_sum, bounds, pe_sys_mc)


def simo_bound(params: ChannelParams, B_DL: Optional[float] = None) -> float:
    """Cooperation ceiling: the rate of a single receiver owning both downlink
    branches, B_DL * log2(1 + P/N1 + P/N2), over the full band by default."""
    bdl = params.B if B_DL is None else B_DL
    return bdl * math.log2(1.0 + params.P / (params.n1 * bdl) + params.P / (params.n2 * bdl))


def optimal_k(
    params: ChannelParams, config: CoopConfig, k_max: int
) -> tuple[int, tuple[float, ...]]:
    """Exchange count maximizing the worst-receiver rate over 0..k_max, with
    ties broken toward fewer exchanges; returns (K*, rate per count)."""
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    trajectory = run_recursion(params, config, k_max)
    rates = tuple(
        rate_af(
            plan_bandwidth(params, config.with_count(state.i)),
            (state.rho_I, state.rho_II),
        )
        for state in trajectory.states
    )
    best = 0
    for k, rate in enumerate(rates):
        if rate > rates[best] * (1.0 + _TIE_TOL) + _TIE_TOL:
            best = k
    return best, rates


@dataclass(frozen=True, eq=False)
class RegionMap:
    """Who-starts-first map: winners[r, i, j] is +1 when starting at receiver 1
    yields the higher rate at (n1_grid[i], n2_grid[j]) under cooperation power
    ratio ratios_db[r], -1 for receiver 2 and 0 for a tie; boundaries[r] is the
    polyline of refined crossing points (n1, n2) along each grid column."""

    n1_grid: np.ndarray
    n2_grid: np.ndarray
    ratios_db: tuple[float, ...]
    winners: np.ndarray
    boundaries: tuple[tuple[tuple[float, float], ...], ...]


def _starter_rate_gap(
    params: ChannelParams, config: CoopConfig, K: int
) -> tuple[float, float]:
    """Rate(start at receiver 1) - rate(start at receiver 2) and the rate scale."""
    rates = {}
    plan = plan_bandwidth(params, config.with_count(K))
    for starter in (Receiver.R1, Receiver.R2):
        cfg = replace(config, scheme=replace(config.scheme, starter=starter))
        state = campaign(params, cfg, K).trajectory.states[-1]
        rates[starter] = rate_af(plan, (state.rho_I, state.rho_II))
    scale = max(rates[Receiver.R1], rates[Receiver.R2], 1.0)
    return rates[Receiver.R1] - rates[Receiver.R2], scale


def decision_regions(
    params: ChannelParams,
    config: CoopConfig,
    K: int,
    *,
    n1_grid: Optional[Sequence[float]] = None,
    n2_grid: Optional[Sequence[float]] = None,
    ratios_db: Sequence[float] = (-30.0, -10.0, 0.0, 10.0, 30.0),
) -> RegionMap:
    """Which receiver should start cooperating, over a noise-density grid.

    The total cooperation budget params.P12 + params.P21 is reallocated per
    power ratio P12/P21; at every grid point the final worst-receiver rates of
    the two starter choices are compared. Boundary crossings along each n1
    column are refined with one geometric bisection step.
    """
    if not isinstance(config.scheme, Asymmetric):
        raise ValueError("the starter comparison requires the asymmetric scheme")
    if K < 1:
        raise ValueError("the starter choice only exists for K >= 1")
    total = params.P12 + params.P21
    if not total > 0.0:
        raise ValueError("decision regions need a positive total cooperation budget")
    n1g = np.logspace(-2, 2, 21) if n1_grid is None else np.asarray(n1_grid, dtype=float)
    n2g = np.logspace(-2, 2, 21) if n2_grid is None else np.asarray(n2_grid, dtype=float)

    winners = np.zeros((len(ratios_db), len(n1g), len(n2g)), dtype=np.int8)
    boundaries: list[tuple[tuple[float, float], ...]] = []
    for r_idx, ratio_db in enumerate(ratios_db):
        ratio = 10.0 ** (ratio_db / 10.0)
        p12 = total * ratio / (1.0 + ratio)
        p21 = total / (1.0 + ratio)

        def gap(n1: float, n2: float) -> int:
            d, scale = _starter_rate_gap(
                replace(params, n1=n1, n2=n2, P12=p12, P21=p21), config, K
            )
            return d, scale

        diffs = np.empty((len(n1g), len(n2g)))
        for i, n1 in enumerate(n1g):
            for j, n2 in enumerate(n2g):
                d, scale = gap(n1, n2)
                diffs[i, j] = d
                if d > _TIE_TOL * scale:
                    winners[r_idx, i, j] = 1
                elif d < -_TIE_TOL * scale:
                    winners[r_idx, i, j] = -1

        points: list[tuple[float, float]] = []
        for i, n1 in enumerate(n1g):
            for j in range(len(n2g) - 1):
                w_lo, w_hi = winners[r_idx, i, j], winners[r_idx, i, j + 1]
                if w_lo == 0:
                    points.append((float(n1), float(n2g[j])))
                elif w_lo * w_hi < 0:
                    lo, hi = float(n2g[j]), float(n2g[j + 1])
                    mid = math.sqrt(lo * hi)
                    d_mid, _ = gap(n1, mid)
                    if (d_mid > 0) == (diffs[i, j] > 0):
                        lo = mid
                    else:
                        hi = mid
                    points.append((float(n1), math.sqrt(lo * hi)))
            if winners[r_idx, i, -1] == 0:
                points.append((float(n1), float(n2g[-1])))
        boundaries.append(tuple(points))

    return RegionMap(n1g, n2g, tuple(float(r) for r in ratios_db), winners, tuple(boundaries))
