"""One-shot guarantee report: delta, J, iteration bounds, competitor counts."""
from __future__ import annotations

import math
from typing import Optional, Union

from .errors import PremiseError
from .guarantees import (GROWTH_RATES, GuaranteeSpec, TargetParams, check_rho_gamma,
                         confidence_lower_bound, iterations_flat_top,
                         iterations_uniform_general, j_bound, j_bound_value, optimal_delta,
                         schedule_cost, vidyasagar_bounds, vidyasagar_value_bounds)


def _confidence_split(sigma, rho, gamma):
    """Fill in (sigma, rho, gamma) with sigma = (1 + gamma) rho where possible."""
    if rho is None and gamma is not None:
        raise PremiseError("gamma needs rho")
    if rho is not None:
        if gamma is None:
            gamma = sigma / rho - 1.0 if sigma is not None else 0.5 * (1.0 - rho) / rho
        check_rho_gamma(rho, gamma)
        implied = (1.0 + gamma) * rho
        if sigma is not None and not math.isclose(sigma, implied, rel_tol=1e-12):
            raise PremiseError(f"sigma={sigma} does not equal (1 + gamma) rho = {implied}")
        return implied if sigma is None else sigma, rho, gamma
    if sigma is None:
        raise PremiseError("need sigma or rho")
    if sigma > 0.5:
        rho = 2.0 * sigma - 1.0
        return sigma, rho, 0.5 * (1.0 - rho) / rho
    return sigma, None, None


def report_bounds(epsilon: float, alpha: float, sigma: Optional[float] = None,
                  delta: Union[float, str] = "auto", rho: Optional[float] = None,
                  gamma: Optional[float] = None, L: Optional[float] = None,
                  R: Optional[float] = None, n: Optional[int] = None,
                  beta: Optional[float] = None, schedule: str = "algebraic",
                  a: float = 1.0) -> dict:
    """Compute every guarantee for one (epsilon, alpha, sigma) request.

    Without ``rho`` the confidence is split with the near-optimal
    ``gamma = (1 - rho) / (2 rho)``, i.e. ``rho = 2 sigma - 1``.
    """
    sigma, rho, gamma = _confidence_split(sigma, rho, gamma)
    spec = GuaranteeSpec(epsilon, alpha, sigma)
    delta_auto = delta is None or delta == "auto"
    if delta_auto:
        delta, _ = optimal_delta(spec)
    delta = float(delta)
    if delta <= 0:
        raise PremiseError("delta must be > 0")
    J_real = j_bound(spec, delta)
    J = max(1, math.ceil(J_real))
    target = TargetParams(J, delta)
    confidence = confidence_lower_bound(epsilon, alpha, target)
    if confidence < sigma:
        raise AssertionError(f"internal check failed: bound {confidence} < sigma {sigma}")

    value_mode = None not in (L, R, n)
    J_value = math.ceil(j_bound_value(epsilon, sigma, delta, L, R, n)) if value_mode else None

    k_flat = k_uniform = None
    k_uniform_saturated = False
    if rho is not None:
        if beta is not None:
            k_flat = iterations_flat_top(beta, rho, gamma)
        bound = iterations_uniform_general(target, rho, gamma)
        k_uniform, k_uniform_saturated = bound.k, bound.saturated
        if k_uniform_saturated:
            k_uniform = float(k_uniform)

    vid = None
    if rho is not None and alpha < 1.0:
        N, M = vidyasagar_bounds(epsilon, alpha, rho)
        vid = {"N": N, "M": M}
    vid_value = None
    if rho is not None and value_mode:
        N, M = vidyasagar_value_bounds(epsilon, rho, L, R, n)
        vid_value = {"N": N, "M": M}

    cost = schedule_cost(schedule, J, a)
    sched = {"kind": schedule, "iterations": cost.iterations, "samples": cost.samples}
    if schedule == "algebraic":
        sched["a"] = a
    if cost.saturated:
        sched["saturated"] = True

    return {
        "epsilon": epsilon,
        "alpha": alpha,
        "sigma": sigma,
        "rho": rho,
        "gamma": gamma,
        "delta": delta,
        "delta_auto": delta_auto,
        "J": J,
        "J_real": J_real,
        "confidence": confidence,
        "J_value": J_value,
        "k_flat_top": k_flat,
        "k_uniform": k_uniform,
        "k_uniform_saturated": k_uniform_saturated,
        "vidyasagar": vid,
        "vidyasagar_value": vid_value,
        "schedule": sched,
    }


def format_table(report: dict) -> str:
    """Plain-text table in the layout of the growth-rate comparison."""
    lines = [
        f"epsilon={report['epsilon']}  alpha={report['alpha']}  sigma={report['sigma']}  "
        f"rho={report['rho']}  delta={report['delta']:.6g}"
        + ("  (optimal)" if report["delta_auto"] else ""),
        f"J={report['J']}  (real bound {report['J_real']:.6g}, certified mass "
        f"{report['confidence']:.6g})",
    ]
    if report["J_value"] is not None:
        lines.append(f"J for value imprecision 2*epsilon: {report['J_value']}")
    if report["k_flat_top"] is not None:
        lines.append(f"iterations, flat top: {report['k_flat_top']}")
    if report["k_uniform"] is not None:
        flag = " (saturated)" if report["k_uniform_saturated"] else ""
        lines.append(f"iterations, uniform proposal: {report['k_uniform']:.6g}{flag}")
    s = report["schedule"]
    lines.append(f"schedule {s['kind']}: iterations {s['iterations']}, samples {s['samples']}")
    lines.append("")

    samples = {
        "Vidyasagar": report["vidyasagar_value"] or report["vidyasagar"],
        "MCMC [per iteration]": report["J_value"] if report["J_value"] is not None else report["J"],
    }
    header = ("method", "samples", "epsilon", "rho or sigma", "LR", "n", "problem")
    rows = []
    for name, *rates in GROWTH_RATES:
        count = samples.get(name)
        if isinstance(count, dict):
            count = f"N={count['N']} M={count['M']}"
        rows.append((name, "-" if count is None else str(count), *rates))
    widths = [max(len(str(r[i])) for r in (header, *rows)) for i in range(len(header))]
    for r in (header, *rows):
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)
