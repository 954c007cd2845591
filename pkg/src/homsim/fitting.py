"""Nonlinear least-squares solver and the fit models used by the toolkit.

The solver is a damped (Levenberg-Marquardt) least-squares iteration with a
numerically differentiated Jacobian. Decay and dip models convolve
exponentials with a Gaussian timing response; the convolution is available
both as a discrete grid operation and in exact closed form inside the
models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .model import ConfigurationError, ValidationError

_SQRT2 = np.sqrt(2.0)


class ModelDomainError(ValueError):
    """The model produced non-finite output at a requested parameter point."""


@dataclass(frozen=True)
class FitResult:
    """Solution of a weighted least-squares fit.

    status is one of "converged", "max_iter", "singular". Uncertainties are
    1-sigma values from the covariance of the solution; when no measurement
    sigma was supplied the covariance is scaled by the reduced chi-square.
    """

    param_names: tuple[str, ...]
    params: np.ndarray
    uncertainties: np.ndarray
    covariance: np.ndarray
    reduced_chisq: float
    status: str
    n_iter: int
    cost: float

    def __getitem__(self, name: str) -> float:
        return float(self.params[self.param_names.index(name)])

    def uncertainty(self, name: str) -> float:
        return float(self.uncertainties[self.param_names.index(name)])

    def as_dict(self) -> dict:
        return {
            "params": {n: float(v) for n, v in zip(self.param_names, self.params)},
            "uncertainties": {
                n: float(v) for n, v in zip(self.param_names, self.uncertainties)
            },
            "reduced_chisq": float(self.reduced_chisq),
            "status": self.status,
            "n_iter": int(self.n_iter),
            "cost": float(self.cost),
        }


def _fd_step(p: np.ndarray) -> np.ndarray:
    return np.maximum(1e-6 * np.abs(p), 1e-9)


def residual_jacobian(resid_fn, p: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of a residual vector w.r.t. parameters."""
    p = np.asarray(p, dtype=float)
    h = _fd_step(p)
    cols = []
    for j in range(p.size):
        up = p.copy()
        dn = p.copy()
        up[j] += h[j]
        dn[j] -= h[j]
        cols.append((resid_fn(up) - resid_fn(dn)) / (2.0 * h[j]))
    return np.column_stack(cols)


def nlls_solve(
    model_fn,
    x: np.ndarray,
    y: np.ndarray,
    p0,
    sigma=None,
    bounds=None,
    param_names: tuple[str, ...] | None = None,
    max_iter: int = 200,
    rel_cost_tol: float = 1e-10,
) -> FitResult:
    """Damped least-squares fit of model_fn(x, p) to y.

    Parameters
    ----------
    model_fn : callable(x, p) -> ndarray
        Vectorized model evaluated on the full abscissa.
    sigma : ndarray or None
        Per-point 1-sigma weights. None means unweighted; in that case the
        covariance is rescaled by the reduced chi-square.
    bounds : sequence of (lo, hi) or None
        Box constraints; trial steps are projected onto the box.
    Notes
    -----
    The Jacobian is computed by central differences with per-parameter step
    max(1e-6*|p|, 1e-9). Iteration stops when the relative cost decrease of
    an accepted step falls below 1e-10, or after max_iter iterations.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.array(p0, dtype=float)
    n_par = p.size
    if y.size <= n_par:
        raise ValidationError("need more data points than parameters")
    if sigma is None:
        w = np.ones_like(y)
        absolute_sigma = False
    else:
        w = np.asarray(sigma, dtype=float)
        if np.any(w <= 0):
            raise ValidationError("sigma values must be strictly positive")
        absolute_sigma = True
    if bounds is not None:
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        if np.any(p < lo) or np.any(p > hi):
            raise ValidationError("initial parameters violate the bounds")
    if param_names is None:
        param_names = tuple("p%d" % i for i in range(n_par))

    def resid(pv: np.ndarray) -> np.ndarray:
        m = model_fn(x, pv)
        m = np.asarray(m, dtype=float)
        if not np.all(np.isfinite(m)):
            raise ModelDomainError(
                "model returned non-finite values at p=%s" % np.array_str(pv, precision=6)
            )
        return (m - y) / w

    def project(pv: np.ndarray) -> np.ndarray:
        if bounds is None:
            return pv
        return np.clip(pv, lo, hi)

    r = resid(p)
    cost = float(r @ r)
    lam = 1e-3
    status = "max_iter"
    n_iter = 0
    jac = residual_jacobian(resid, p)

    for n_iter in range(1, max_iter + 1):
        jtj = jac.T @ jac
        grad = jac.T @ r
        if not np.all(np.isfinite(jtj)):
            status = "singular"
            break
        if cost == 0.0:
            status = "converged"
            break
        accepted = False
        diag = np.diag(jtj).copy()
        diag[diag == 0.0] = np.finfo(float).tiny
        while lam <= 1e12:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                status = "singular"
                break
            if not np.all(np.isfinite(step)):
                status = "singular"
                break
            p_try = project(p + step)
            r_try = resid(p_try)
            cost_try = float(r_try @ r_try)
            if cost_try < cost:
                accepted = True
                rel_drop = (cost - cost_try) / max(cost, np.finfo(float).tiny)
                p, r, cost = p_try, r_try, cost_try
                lam = max(lam / 3.0, 1e-12)
                if rel_drop < rel_cost_tol:
                    status = "converged"
                break
            lam *= 10.0
        if status == "singular":
            break
        if not accepted:
            # Damping exhausted without improvement: stationary point.
            status = "converged"
            break
        if status == "converged":
            break
        jac = residual_jacobian(resid, p)

    jac = residual_jacobian(resid, p)
    dof = max(y.size - n_par, 1)
    red_chisq = cost / dof
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj)
        if not absolute_sigma:
            cov = cov * red_chisq
        unc = np.sqrt(np.clip(np.diag(cov), 0.0, np.inf))
        if not np.all(np.isfinite(cov)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cov = np.full((n_par, n_par), np.inf)
        unc = np.full(n_par, np.inf)
        if status == "converged":
            status = "singular"
    return FitResult(
        param_names=tuple(param_names),
        params=p,
        uncertainties=unc,
        covariance=cov,
        reduced_chisq=red_chisq,
        status=status,
        n_iter=n_iter,
        cost=cost,
    )


def convolve_gaussian(y: np.ndarray, step_ps: float, sigma_ps: float) -> np.ndarray:
    """Convolve uniformly sampled data with a unit-area Gaussian.

    The kernel is truncated at +-5 sigma and renormalized so the total sum
    (hence the integral) is preserved. Requires step <= sigma/4 for a
    faithful kernel; a sigma whose whole +-5 sigma support falls inside one
    grid cell (sigma <= step/10, including 0) acts as a discrete delta and
    returns the input unchanged.
    """
    y = np.asarray(y, dtype=float)
    if step_ps <= 0:
        raise ConfigurationError("grid step must be strictly positive")
    if sigma_ps < 0:
        raise ConfigurationError("sigma must be >= 0")
    if sigma_ps <= step_ps / 10.0:
        return y.copy()
    if step_ps > sigma_ps / 4.0:
        raise ConfigurationError(
            "grid step %.4g ps too coarse for sigma %.4g ps (need <= sigma/4)"
            % (step_ps, sigma_ps)
        )
    half = int(np.ceil(5.0 * sigma_ps / step_ps))
    k = np.exp(-0.5 * ((np.arange(-half, half + 1) * step_ps) / sigma_ps) ** 2)
    k /= k.sum()
    return np.convolve(y, k, mode="same")


def exp_conv_gauss(u, tau: float, sigma: float):
    """Exact one-sided exponential decay convolved with a unit-area Gaussian.

    Returns exp(-u/tau) * theta(u) convolved with N(0, sigma^2), evaluated
    stably via the scaled complementary error function.
    """
    u = np.asarray(u, dtype=float)
    if tau <= 0:
        raise ValidationError("decay constant must be strictly positive")
    if sigma < 0:
        raise ValidationError("sigma must be >= 0")
    if sigma == 0.0:
        out = np.where(u >= 0.0, np.exp(-np.clip(u, 0.0, None) / tau), 0.0)
        return out if out.ndim else float(out)
    z = (sigma / tau - u / sigma) / _SQRT2
    out = np.empty_like(u, dtype=float)
    safe = z < 25.0
    # Large positive z underflows anyway; at large negative z erfcx blows up
    # as e^{z^2} and the plain exponential form is exact, so clip the erfcx
    # argument to the band where its branch is actually selected.
    zs = np.clip(z, -25.0, 25.0)
    out_safe = 0.5 * erfcx(zs) * np.exp(-0.5 * (u / sigma) ** 2)
    plain = np.exp(np.clip(0.5 * (sigma / tau) ** 2 - u / tau, None, 700.0))
    out = np.where(z <= -25.0, plain, np.where(safe, out_safe, 0.0))
    return out if out.ndim else float(out)


def _biexp_model(t, p, sigma_irf):
    amp, t0, tau_f, tau_s, f_slow, base = p
    if tau_f <= 0 or tau_s <= 0:
        return np.full_like(np.asarray(t, dtype=float), np.nan)
    u = np.asarray(t, dtype=float) - t0
    return base + amp * (
        (1.0 - f_slow) * exp_conv_gauss(u, tau_f, sigma_irf)
        + f_slow * exp_conv_gauss(u, tau_s, sigma_irf)
    )


def fit_biexp_irf(
    t_ps: np.ndarray,
    counts: np.ndarray,
    irf_fwhm_ps: float,
    init=None,
    sigma=None,
) -> FitResult:
    """Fit a bi-exponential decay convolved with the Gaussian timing response.

    Model: baseline + amp * [(1-f_slow) exp(-(t-t0)/tau_fast)
                             + f_slow exp(-(t-t0)/tau_slow)] (x) IRF.
    Counts are weighted by sqrt(max(y, 1)) unless sigma is given. The
    returned parameters satisfy tau_fast < tau_slow (swapped into canonical
    order if the solver exits mirrored).
    """
    t = np.asarray(t_ps, dtype=float)
    y = np.asarray(counts, dtype=float)
    sigma_irf = irf_fwhm_ps / 2.3548200450309493
    if sigma is None:
        sigma = np.sqrt(np.maximum(y, 1.0))
    if init is None:
        base0 = float(max(np.min(y), 0.0))
        i_max = int(np.argmax(y))
        amp0 = float(max(np.max(y) - base0, 1.0))
        t00 = float(t[i_max])
        tail = y[i_max:] - base0
        # first 1/e crossing after the peak; the last-above-threshold bin is
        # unreliable when a folded trace wraps counts to the end of the span
        below = np.flatnonzero(tail < amp0 / np.e)
        tau0 = float(t[i_max + below[0]] - t00) if below.size else (t[-1] - t00) / 3.0
        tau0 = max(tau0, 2.0 * (t[1] - t[0]))
        init = (amp0, t00, tau0, 10.0 * tau0, 0.05, base0)
    names = ("amp", "t0", "tau_fast", "tau_slow", "frac_slow", "baseline")
    bounds = [
        (0.0, np.inf),
        (t[0] - (t[-1] - t[0]), t[-1]),
        (1e-6, np.inf),
        (1e-6, np.inf),
        (0.0, 1.0),
        (0.0, np.inf),
    ]
    res = nlls_solve(
        lambda tt, p: _biexp_model(tt, p, sigma_irf),
        t,
        y,
        init,
        sigma=sigma,
        bounds=bounds,
        param_names=names,
    )
    if res.params[2] > res.params[3]:
        order = [0, 1, 3, 2, 4, 5]
        params = res.params[order].copy()
        params[4] = 1.0 - params[4]
        unc = res.uncertainties[order]
        cov = res.covariance[np.ix_(order, order)]
        res = FitResult(
            param_names=names,
            params=params,
            uncertainties=unc,
            covariance=cov,
            reduced_chisq=res.reduced_chisq,
            status=res.status,
            n_iter=res.n_iter,
            cost=res.cost,
        )
    return res


def _g2cw_model(tau, p, sigma_irf):
    g0, tau_d = p
    if tau_d <= 0:
        return np.full_like(np.asarray(tau, dtype=float), np.nan)
    tau = np.asarray(tau, dtype=float)
    dip = exp_conv_gauss(tau, tau_d, sigma_irf) + exp_conv_gauss(-tau, tau_d, sigma_irf)
    return 1.0 - (1.0 - g0) * dip


def fit_g2cw(
    tau_ps: np.ndarray,
    g2: np.ndarray,
    irf_fwhm_ps: float,
    init=None,
    sigma=None,
) -> FitResult:
    """Fit the continuous-wave antibunching dip.

    Model: g(tau) = 1 - (1 - g0) * exp(-|tau|/tau_d), convolved with the
    Gaussian timing response. Data are assumed normalized to 1 far from
    zero delay.
    """
    tau = np.asarray(tau_ps, dtype=float)
    y = np.asarray(g2, dtype=float)
    sigma_irf = irf_fwhm_ps / 2.3548200450309493
    if init is None:
        g0_0 = float(np.clip(np.min(y), 0.0, 1.0))
        span = float(tau[-1] - tau[0])
        init = (g0_0, max(span / 20.0, 1.0))
    res = nlls_solve(
        lambda tt, p: _g2cw_model(tt, p, sigma_irf),
        tau,
        y,
        init,
        sigma=sigma,
        bounds=[(0.0, 2.0), (1e-6, np.inf)],
        param_names=("g0", "tau_d"),
    )
    return res


def _lorentzian_model(e, p):
    area, e0, fwhm, base = p
    if fwhm <= 0:
        return np.full_like(np.asarray(e, dtype=float), np.nan)
    e = np.asarray(e, dtype=float)
    return base + (2.0 * area / np.pi) * fwhm / (4.0 * (e - e0) ** 2 + fwhm**2)


def fit_lorentzian(
    energy_uev: np.ndarray,
    y: np.ndarray,
    init=None,
    sigma=None,
) -> FitResult:
    """Fit a Lorentzian line: baseline + (2A/pi) * w / (4(E-E0)^2 + w^2)."""
    e = np.asarray(energy_uev, dtype=float)
    yv = np.asarray(y, dtype=float)
    if init is None:
        base0 = float(np.min(yv))
        i_max = int(np.argmax(yv))
        height = float(yv[i_max] - base0)
        half = base0 + height / 2.0
        above = np.flatnonzero(yv >= half)
        fwhm0 = float(e[above[-1]] - e[above[0]]) if above.size > 1 else float(e[1] - e[0])
        fwhm0 = max(fwhm0, float(np.min(np.diff(e))))
        init = (height * np.pi * fwhm0 / 2.0, float(e[i_max]), fwhm0, base0)
    return nlls_solve(
        lambda ee, p: _lorentzian_model(ee, p),
        e,
        yv,
        init,
        sigma=sigma,
        bounds=[(0.0, np.inf), (e[0], e[-1]), (1e-9, np.inf), (-np.inf, np.inf)],
        param_names=("area", "center", "fwhm", "baseline"),
    )


def deconvolve_lorentzian(measured_fwhm_uev: float, instrument_fwhm_uev: float) -> float:
    """Intrinsic Lorentzian width: widths of Lorentzians add under convolution."""
    if instrument_fwhm_uev < 0:
        raise ValidationError("instrument width must be >= 0")
    if measured_fwhm_uev <= instrument_fwhm_uev:
        raise ValidationError(
            "measured width %.4g must exceed the instrument width %.4g"
            % (measured_fwhm_uev, instrument_fwhm_uev)
        )
    return measured_fwhm_uev - instrument_fwhm_uev
