"""Sobolev seminorms and the generalized-energy comparison machinery.

phi(u, rho, L) is the imaginary part of what remains of log a at
lambda^2 = i*rho after subtracting the first 2L+2 terms of its inverse-power
expansion; phi0 is its quadratic-in-u part, an explicit frequency integral.
Weighted rho-integrals of |phi0| reproduce homogeneous Sobolev seminorms
exactly, with constant 4^-(s+1) * || |z|^(2v-1)/(1+z^2) ||_L1, v = s - [s];
that identity and the two-sided comparison derived from it are implemented
here as computable quantities.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.integrate

from .errors import BranchError, DivergenceError, QuadratureError
from .grid import GridFunction

# densities of the conserved functionals, generated once per index
_ENERGY_CACHE: dict[int, object] = {}


def _energy_density(j: int):
    density = _ENERGY_CACHE.get(j)
    if density is None:
        from .hierarchy import energy

        density = energy(j).density
        _ENERGY_CACHE[j] = density
    return density


# -- norms -------------------------------------------------------------------------


def hs_seminorm(u: GridFunction, s: float) -> float:
    """Homogeneous seminorm (sum |zeta|^2s |uhat|^2 dzeta)^(1/2)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    zeta, uhat, dzeta = u.fourier_amplitudes()
    weight = np.abs(zeta) ** (2.0 * s) if s > 0 else np.ones_like(zeta)
    return float(math.sqrt(np.sum(weight * np.abs(uhat) ** 2) * dzeta))


def hs_norm(u: GridFunction, s: float) -> float:
    """Full Sobolev norm with weight (1 + zeta^2)^s."""
    zeta, uhat, dzeta = u.fourier_amplitudes()
    return float(
        math.sqrt(np.sum((1.0 + zeta**2) ** s * np.abs(uhat) ** 2) * dzeta)
    )


# -- phi and its quadratic part ------------------------------------------------------


def phi0(u: GridFunction, rho: float, level: int) -> float:
    """Quadratic part:
    (-1)^L / (2^(2L+1) rho^(2L)) * sum zeta^(2L+2) |uhat|^2 / (zeta^2 + 4 rho^2)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    zeta, uhat, dzeta = u.fourier_amplitudes()
    integrand = zeta ** (2 * level + 2) * np.abs(uhat) ** 2 / (zeta**2 + 4.0 * rho**2)
    val = float(np.sum(integrand) * dzeta)
    return (-1.0) ** level / (2.0 ** (2 * level + 1) * rho ** (2 * level)) * val


def tau1(u: GridFunction, rho: float, level: int) -> complex:
    """Quadratic trace remainder at lambda^2 = i*rho:
    -i / (4^(L+1) (i rho)^(2L+1)) * sum zeta^(2L+2)|uhat|^2/(zeta + 2 i rho)."""
    zeta, uhat, dzeta = u.fourier_amplitudes()
    lam_sq = 1j * rho
    acc = np.sum(zeta ** (2 * level + 2) * np.abs(uhat) ** 2 / (zeta + 2.0 * lam_sq)) * dzeta
    return complex(-1j / (4.0 ** (level + 1) * lam_sq ** (2 * level + 1)) * acc)


def _subtract_expansion(u: GridFunction, rho: float, level: int, log_val: complex) -> float:
    total = complex(log_val)
    for j in range(2 * level + 2):
        ej = _energy_density(j).evaluate(u)
        total -= ej / (1j * rho) ** j
    return float(total.imag)


def phi(u: GridFunction, rho: float, level: int, modes: int | None = None,
        j_cap: int | None = None, method: str = "series") -> float:
    """Im[ log a(sqrt(i rho)) - sum_{j<=2L+1} E_j(u)/(i rho)^j ].

    method="series": log a from the trace series; valid above the empirical
    threshold, and sharpest when 2*rho sits well inside the resolved band
    (the matrix tail traces degrade once the resolvent kernel spreads past
    it).  Below the threshold the series diverges and a BranchError
    propagates.  method="jost": branch-tracked ODE route, band-free.
    """
    from .scattering import log_a, log_a_jost_path

    j_max = 2 * level + 1
    if j_cap is not None and j_max > j_cap:
        raise IndexError(f"needs E_j through j={j_max}, beyond the cap {j_cap}")
    if method == "series":
        try:
            log_val = log_a(u, rho, modes=modes)
        except DivergenceError as exc:
            raise BranchError(
                f"log branch not defined through the series at rho={rho:g}: {exc}"
            ) from exc
    elif method == "jost":
        log_val = log_a_jost_path(u, rho)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _subtract_expansion(u, rho, level, log_val)


def phi_grid(u: GridFunction, rhos, level: int) -> dict[float, float]:
    """phi at many rho values via one branch-tracked Jost sweep."""
    from .scattering import log_a_jost_grid

    logs = log_a_jost_grid(u, rhos)
    return {r: _subtract_expansion(u, r, level, lv) for r, lv in logs.items()}


# -- the comparison integral -----------------------------------------------------------


def f_nu_l1(nu: float) -> float:
    """L1 norm of |z|^(2 nu - 1)/(1+z^2), 0 < nu < 1, by direct quadrature.

    (Equals pi/sin(pi nu); kept as an independent quadrature so identity
    checks do not assume the closed form.)
    """
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    # z in (0,1): substitute z = tau^(1/(2 nu)), flattening the endpoint
    inner, err1 = scipy.integrate.quad(
        lambda tau: 1.0 / (1.0 + tau ** (1.0 / nu)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13
    )
    inner /= 2.0 * nu
    outer, err2 = scipy.integrate.quad(
        lambda z: z ** (2.0 * nu - 1.0) / (1.0 + z * z), 1.0, np.inf,
        epsabs=1e-13, epsrel=1e-13,
    )
    return 2.0 * (inner + outer)


def _tail_factor(z0: np.ndarray, nu: float) -> np.ndarray:
    """integral_{z0}^inf z^(2nu-1)/(1+z^2) dz for z0 >= 2, by the alternating
    series in z0^-2 (term m: (-1)^m z0^(2nu-2-2m)/(2m+2-2nu))."""
    acc = np.zeros_like(z0)
    m = 0
    term = z0 ** (2.0 * nu - 2.0) / (2.0 - 2.0 * nu)
    while np.max(np.abs(term)) > 1e-17 and m < 60:
        acc += term if m % 2 == 0 else -term
        m += 1
        term = z0 ** (2.0 * nu - 2.0 - 2.0 * m) / (2.0 * m + 2.0 - 2.0 * nu)
    return acc


def comparison_integral(u: GridFunction, s: float, r_cut: float = 0.0,
                        rel_tol: float = 1e-9) -> float:
    """integral_R^inf rho^(2s-1) |phi0(u, rho, [s])| d rho.

    Adaptive quadrature up to a cutoff past the resolved band, then the exact
    tail of the discrete frequency sum (the integrand decays like
    rho^(2(s-[s])-3) there).  The integrand is single-signed, so |phi0| is
    (-1)^[s] phi0.
    """
    if s <= 0 or float(s).is_integer():
        raise ValueError("s must be positive and non-integer")
    if r_cut < 0:
        raise ValueError("R must be nonnegative")
    level = int(math.floor(s))
    nu = s - level
    zeta, uhat, dzeta = u.fourier_amplitudes()
    keep = zeta != 0.0
    zeta = zeta[keep]
    w = (np.abs(zeta) ** (2 * level + 2) * np.abs(uhat[keep]) ** 2 * dzeta
         / 2.0 ** (2 * level + 1))
    if not np.any(w > 0.0):
        return 0.0

    def h(rho: float) -> float:
        # rho^(2s-1)|phi0| = rho^(2 nu - 1) h(rho)
        return float(np.sum(w / (zeta**2 + 4.0 * rho**2)))

    zeta_max = float(np.abs(zeta).max())
    cutoff = max(2.0 * zeta_max, 4.0 * r_cut, 8.0)
    pieces: list[tuple[float, float]] = []
    if r_cut < 1.0:
        # flatten the rho^(2 nu - 1) factor via tau = rho^(2 nu)
        val, err = scipy.integrate.quad(
            lambda tau: h(tau ** (1.0 / (2.0 * nu))),
            r_cut ** (2.0 * nu), 1.0, epsabs=0.0, epsrel=1e-11, limit=200,
        )
        pieces.append((val / (2.0 * nu), err / (2.0 * nu)))
        lo = 1.0
    else:
        lo = r_cut
    val, err = scipy.integrate.quad(
        lambda rho: rho ** (2.0 * nu - 1.0) * h(rho), lo, cutoff,
        epsabs=0.0, epsrel=1e-11, limit=400,
    )
    pieces.append((val, err))
    # exact tail of the discrete sum: per-frequency incomplete integral
    z0 = 2.0 * cutoff / np.abs(zeta)
    tail = float(
        np.sum(w * (np.abs(zeta) / 2.0) ** (2.0 * nu) / zeta**2 * _tail_factor(z0, nu))
    )
    total = sum(v for v, _ in pieces) + tail
    err_total = sum(e for _, e in pieces)
    if not math.isfinite(total) or err_total > rel_tol * max(abs(total), 1e-300):
        raise QuadratureError(
            f"comparison integral did not converge (err {err_total:.2e} on {total:.6e})"
        )
    return total


def comparison_report(u: GridFunction, s: float, r_cut: float = 0.0) -> dict:
    """Comparison of the weighted rho-integral against the Sobolev seminorm.

    At R = 0 the ratio integral / ||u||^2 equals 4^-(s+1) ||f_nu||_L1 exactly;
    for R > 0 the report checks the two-sided bounds with their explicit
    constants: the integral is monotone nonincreasing in R, and

        ||u||^2 <= (4^(s+1)/||f_nu||_L1) * [ integral(R)
                   + R^(2 nu) ||u||_{[s]}^2 / (nu 4^([s]+1)) ].
    """
    level = int(math.floor(s))
    nu = s - level
    hs_sq = hs_seminorm(u, s) ** 2
    integral = comparison_integral(u, s, r_cut)
    norm_f = f_nu_l1(nu)
    expected_ratio = 4.0 ** (-(s + 1.0)) * norm_f
    ratio = integral / hs_sq if hs_sq > 0 else math.nan
    if r_cut == 0.0:
        passed = hs_sq == 0.0 or abs(ratio - expected_ratio) <= 1e-4 * expected_ratio
    else:
        lower_ok = integral <= expected_ratio * hs_sq * (1.0 + 1e-9)
        floor_sq = hs_seminorm(u, float(level)) ** 2
        bound = (4.0 ** (s + 1.0) / norm_f) * (
            integral + r_cut ** (2.0 * nu) * floor_sq / (nu * 4.0 ** (level + 1))
        )
        passed = lower_ok and hs_sq <= bound * (1.0 + 1e-9)
    return {
        "s": s,
        "R": r_cut,
        "integral": integral,
        "hs_sq": hs_sq,
        "ratio": ratio,
        "expected_ratio": expected_ratio,
        "f_nu_l1": norm_f,
        "pass": bool(passed),
    }
