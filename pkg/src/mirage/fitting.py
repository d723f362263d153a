"""Nonlinear least-squares re-fitting of the artifact models.

A damped Gauss-Newton loop (Marquardt diagonal scaling, damping x10 on a
rejected step and /10 on an accepted one, 200-iteration cap, 1e-10 relative
cost tolerance) minimizes squared residuals of the selected model over
(state, feature) samples.  Appearance-window fits take per-state empirical
trigger frequencies as targets; the window steepness k stays fixed.

Initial guesses come from cheap heuristics: ordinary least squares on
linearized forms for the location models, the argmax distance and a
quarter-span width for the envelope, and 0.5-crossing interpolation for the
window boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mirage.models import (
    THETA_LIMIT_DEG,
    ArtifactFeatures,
    ArtifactModelParams,
    appearance_probability,
    lateral_offset,
    point_count_value,
    radial_distance,
)

MODEL_NAMES = ("offset", "radial", "count", "window")

_FIT_FIELDS = {
    "offset": ("cX", "deltaX"),
    "radial": ("cR", "n_d", "a1", "a2"),
    "count": ("c0", "beta", "gamma", "mu", "sigma"),
    "window": ("b0_min", "b1", "b2", "b0_max", "c1", "c2"),
}


@dataclass
class FitResult:
    model: str
    params: dict
    r_squared: float | None  # None when target variance is zero (undefined)
    rmse: float
    iterations: int
    converged: bool
    message: str = ""

    def merged_params(self, base=None):
        """Full coefficient set with the fitted subset substituted in."""
        base = base or ArtifactModelParams()
        return base.replace(**self.params)


# ---------------------------------------------------------------------------
# Core optimizer


def _numeric_jacobian(fn, x, r0):
    n = x.size
    jac = np.empty((r0.size, n))
    for i in range(n):
        h = 1e-6 * max(abs(x[i]), 1e-3)
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        jac[:, i] = (fn(xp) - fn(xm)) / (2.0 * h)
    return jac


def levenberg_marquardt(residual_fn, x0, max_iterations=200, tolerance=1e-10,
                        damping0=1e-3):
    """Minimize 0.5 ||residual_fn(x)||^2; returns (x, iterations, converged,
    message)."""
    x = np.asarray(x0, dtype=float).copy()
    r = residual_fn(x)
    cost = 0.5 * float(r @ r)
    lam = damping0
    converged = False
    message = ""
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        jac = _numeric_jacobian(residual_fn, x, r)
        if not np.all(np.isfinite(jac)):
            message = "non-finite Jacobian"
            break
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        if np.any(diag <= 1e-300):
            message = "rank-deficient Jacobian (a parameter has no influence)"
            break
        accepted = False
        best_rel_change = math.inf
        while lam <= 1e12:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                message = "rank-deficient Jacobian (singular normal equations)"
                return x, iterations, False, message
            x_new = x + step
            r_new = residual_fn(x_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new):
                best_rel_change = min(best_rel_change,
                                      abs(cost - cost_new) / max(cost, 1e-300))
                if cost_new < cost:
                    accepted = True
                    break
            lam *= 10.0
        if not accepted:
            # No step lowers the cost; if none even changes it beyond the
            # tolerance we are at a (numerical) minimum.
            if best_rel_change <= tolerance or cost <= 1e-300:
                converged = True
                message = "cost stationary"
            else:
                message = "damping limit reached without an acceptable step"
            break
        rel_drop = (cost - cost_new) / max(cost, 1e-300)
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-15)
        if rel_drop < tolerance:
            converged = True
            break
    else:
        message = "iteration cap reached"
    return x, iterations, converged, message


# ---------------------------------------------------------------------------
# Model evaluation over sample arrays


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _predict(model, coeffs, d, theta_deg, area, k_fixed):
    theta = np.radians(theta_deg)
    if model == "offset":
        c_x, delta_x = coeffs
        return c_x * d * np.tan(2.0 * theta) + delta_x
    if model == "radial":
        c_r, n_d, a1, a2 = coeffs
        return c_r * np.power(d, n_d) * (1.0 + a1 * theta + a2 * theta**2)
    if model == "count":
        c0, beta, gamma, mu, sigma = coeffs
        return (c0 * np.power(area, beta) * np.power(np.cos(theta), gamma)
                * np.exp(-((d - mu) ** 2) / (2.0 * sigma**2)))
    if model == "window":
        b0_min, b1, b2, b0_max, c1, c2 = coeffs
        d_min = b0_min + b1 * theta_deg + b2 * area
        d_max = b0_max + c1 * theta_deg + c2 * area
        return (_sigmoid(k_fixed * (d - d_min))
                * _sigmoid(-k_fixed * (d - d_max)))
    raise ValueError(f"unknown model '{model}' (expected one of {MODEL_NAMES})")


def _targets(model, features):
    attr = {"offset": "x_artifact", "radial": "r_artifact",
            "count": "n_artifact", "window": "p_app"}[model]
    return np.array([getattr(f, attr) for f in features])


# ---------------------------------------------------------------------------
# Initial-guess heuristics


def _ols(design, y):
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef


def _init_offset(d, theta_deg, area, y):
    theta = np.radians(theta_deg)
    return _ols(np.column_stack([d * np.tan(2.0 * theta), np.ones_like(d)]), y)


def _init_radial(d, theta_deg, area, y):
    ok = y > 0
    if ok.sum() >= 2:
        coef = _ols(np.column_stack([np.ones(ok.sum()), np.log(d[ok])]), np.log(y[ok]))
        c_r = math.exp(coef[0])
        n_d = min(max(coef[1], 0.05), 1.0)
    else:
        c_r, n_d = 1.0, 0.9
    return np.array([c_r, n_d, 0.0, 0.0])


def _init_count(d, theta_deg, area, y):
    mu = float(d[int(np.argmax(y))])
    sigma = max((d.max() - d.min()) / 4.0, 1e-2)
    ok = y > 1e-9
    if ok.sum() >= 3:
        theta = np.radians(theta_deg[ok])
        rhs = np.log(y[ok]) + (d[ok] - mu) ** 2 / (2.0 * sigma**2)
        design = np.column_stack([np.ones(ok.sum()), np.log(area[ok]),
                                  np.log(np.maximum(np.cos(theta), 1e-9))])
        coef = _ols(design, rhs)
        c0 = math.exp(min(coef[0], 50.0))
        beta, gamma = coef[1], coef[2]
    else:
        c0, beta, gamma = max(y.max(), 1.0), 1.0, 1.0
    return np.array([c0, beta, gamma, mu, sigma])


def _init_window(d, theta_deg, area, y):
    rising, falling = [], []
    for key in sorted({(t, a) for t, a in zip(theta_deg, area)}):
        mask = (theta_deg == key[0]) & (area == key[1])
        if mask.sum() < 2:
            continue
        order = np.argsort(d[mask])
        dd = d[mask][order]
        pp = y[mask][order]
        for i in range(len(dd) - 1):
            lo, hi = pp[i], pp[i + 1]
            if lo < 0.5 <= hi:
                frac = (0.5 - lo) / (hi - lo)
                rising.append((key[0], key[1], dd[i] + frac * (dd[i + 1] - dd[i])))
            if lo >= 0.5 > hi:
                frac = (lo - 0.5) / (lo - hi)
                falling.append((key[0], key[1], dd[i] + frac * (dd[i + 1] - dd[i])))
    def fit_boundary(rows, fallback):
        if len(rows) >= 3:
            arr = np.asarray(rows)
            coef = _ols(np.column_stack([np.ones(len(rows)), arr[:, 0], arr[:, 1]]),
                        arr[:, 2])
            return coef
        return np.asarray(fallback)
    lo = fit_boundary(rising, [float(d.min()), 0.0, 0.0])
    hi = fit_boundary(falling, [float(d.max()), 0.0, 0.0])
    return np.concatenate([lo, hi])


_INITIALIZERS = {"offset": _init_offset, "radial": _init_radial,
                 "count": _init_count, "window": _init_window}


# ---------------------------------------------------------------------------
# Public fitting interface


def fit_models(samples, which, initial_guess=None, base_params=None,
               max_iterations=200, tolerance=1e-10):
    """Fit one of the four artifact models to (MirrorState, ArtifactFeatures)
    samples and report goodness of fit on the training set.

    `initial_guess` may override the heuristic start (dict or coefficient
    sequence in the model's field order).  The window model keeps the
    steepness k from `base_params` fixed.
    """
    if which not in MODEL_NAMES:
        raise ValueError(f"unknown model '{which}' (expected one of {MODEL_NAMES})")
    names = _FIT_FIELDS[which]
    if len(samples) < 2 * len(names):
        raise ValueError(
            f"need at least {2 * len(names)} samples to fit '{which}', "
            f"got {len(samples)}")
    base = base_params or ArtifactModelParams()

    states = [s for s, _ in samples]
    feats = [f for _, f in samples]
    if which == "offset" and any(s.theta_deg >= THETA_LIMIT_DEG for s in states):
        raise ValueError(
            f"lateral-offset fits require tilt angles below {THETA_LIMIT_DEG} deg")
    d = np.array([s.d for s in states])
    theta_deg = np.array([s.theta_deg for s in states])
    area = np.array([s.area for s in states])
    y = _targets(which, feats)

    if initial_guess is None:
        x0 = _INITIALIZERS[which](d, theta_deg, area, y)
    elif isinstance(initial_guess, dict):
        x0 = np.array([initial_guess[n] for n in names], dtype=float)
    else:
        x0 = np.asarray(initial_guess, dtype=float)
        if x0.size != len(names):
            raise ValueError(f"initial guess needs {len(names)} values")

    def residual(x):
        return _predict(which, x, d, theta_deg, area, base.k) - y

    x, iterations, converged, message = levenberg_marquardt(
        residual, x0, max_iterations=max_iterations, tolerance=tolerance)

    res = residual(x)
    ss_res = float(res @ res)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = None if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    rmse = math.sqrt(ss_res / y.size)
    return FitResult(model=which, params=dict(zip(names, x.tolist())),
                     r_squared=r_squared, rmse=rmse, iterations=iterations,
                     converged=converged, message=message)


def r_squared_subset(result, samples, base_params=None):
    """R^2 of an existing fit restricted to a sample subset (per-configuration
    reporting)."""
    base = base_params or ArtifactModelParams()
    names = _FIT_FIELDS[result.model]
    coeffs = np.array([result.params[n] for n in names])
    d = np.array([s.d for s, _ in samples])
    theta_deg = np.array([s.theta_deg for s, _ in samples])
    area = np.array([s.area for s, _ in samples])
    y = _targets(result.model, [f for _, f in samples])
    res = _predict(result.model, coeffs, d, theta_deg, area, base.k) - y
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    return 1.0 - float(res @ res) / ss_tot


def model_samples(states, params=None, rng=None, noise=0.0):
    """Synthesize (state, features) samples straight from the models.

    Uses the real-valued point count so noiseless fits can recover the
    generating coefficients exactly; `noise` applies multiplicative Gaussian
    perturbation of that relative magnitude to every target.
    """
    params = params or ArtifactModelParams()
    out = []
    for state in states:
        x = lateral_offset(state, params) if state.theta_deg < THETA_LIMIT_DEG \
            else float("nan")
        vals = np.array([radial_distance(state, params), x,
                         point_count_value(state, params),
                         appearance_probability(state, params)])
        if noise > 0.0:
            if rng is None:
                rng = np.random.default_rng(0)
            vals = vals * (1.0 + noise * rng.standard_normal(4))
        out.append((state, ArtifactFeatures(r_artifact=float(vals[0]),
                                            x_artifact=float(vals[1]),
                                            n_artifact=float(vals[2]),
                                            p_app=float(vals[3]))))
    return out
