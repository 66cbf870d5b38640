"""Conservative time integration of the derivative NLS equation.

    i u_t + u_xx = -i (|u|^2 u)_x

on the periodic grid, written in Fourier variables as

    c_k' = -i zeta_k^2 c_k - i zeta_k F[|u|^2 u]_k .

The linear phase is applied exactly (integrating factor) and the remaining
derivative nonlinearity is advanced with classical RK4 under 2/3-rule
dealiasing.  A naive split-step scheme is first order and unstable at high
modes for a nonlinearity that carries a derivative; the integrating-factor
form keeps the full fourth order.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import StabilityError
from .grid import GridFunction


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    t_final: float
    dealias: float = 2.0 / 3.0
    monitor_stride: int = 100
    snapshot_stride: int | None = None

    def __post_init__(self):
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if not 0.0 < self.dealias <= 1.0:
            raise ValueError("dealias fraction must lie in (0, 1]")


def stability_limit(u0: GridFunction, dealias: float = 2.0 / 3.0) -> float:
    """CFL-type bound for the derivative nonlinearity: the advective rate is
    max |u|^2 * zeta_max over the retained band."""
    zeta_eff = dealias * math.pi * u0.n / u0.domain_length
    amp_sq = float(np.abs(u0.values).max()) ** 2
    if amp_sq == 0.0 or zeta_eff == 0.0:
        return math.inf
    return 1.0 / (amp_sq * zeta_eff)


class Stepper:
    """Integrating-factor RK4 stepper with precomputed phases for one dt."""

    def __init__(self, n: int, domain_length: float, dt: float, dealias: float):
        self.dt = dt
        self.zeta = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / domain_length
        lin = -1j * self.zeta**2
        self.e_half = np.exp(0.5 * dt * lin)
        self.e_full = np.exp(dt * lin)
        cut = dealias * (n // 2) * (2.0 * np.pi / domain_length)
        self.mask = (np.abs(self.zeta) <= cut + 1e-12).astype(np.float64)

    def nonlinear(self, c: np.ndarray) -> np.ndarray:
        u = np.fft.ifft(c)
        return -1j * self.zeta * np.fft.fft(np.abs(u) ** 2 * u) * self.mask

    def step(self, c: np.ndarray) -> np.ndarray:
        dt = self.dt
        a = self.nonlinear(c)
        b = self.nonlinear(self.e_half * (c + 0.5 * dt * a))
        d = self.nonlinear(self.e_half * c + 0.5 * dt * b)
        e = self.nonlinear(self.e_full * c + dt * self.e_half * d)
        return (
            self.e_full * c
            + (dt / 6.0) * (self.e_full * a + 2.0 * self.e_half * (b + d) + e)
        )


def step(u: GridFunction, dt: float, dealias: float = 2.0 / 3.0) -> GridFunction:
    """Advance one time step (convenience wrapper; loops should reuse evolve)."""
    stepper = Stepper(u.n, u.domain_length, dt, dealias)
    c = stepper.step(u.fft() * stepper.mask)
    if not np.all(np.isfinite(c)):
        raise StabilityError("time step produced non-finite values")
    return u.with_values(np.fft.ifft(c))


# -- monitors -----------------------------------------------------------------------


def mass(u: GridFunction) -> float:
    return u.l2_norm_sq()


def momentum(u: GridFunction) -> float:
    ux = u.deriv(1)
    quad = float(np.imag(u.h * np.sum(np.conj(u.values) * ux)))
    quart = 0.5 * float(u.h * np.sum(np.abs(u.values) ** 4))
    return quad + quart


def energy_functional(u: GridFunction) -> float:
    ux = u.deriv(1)
    kinetic = float(u.h * np.sum(np.abs(ux) ** 2))
    cubic = -1.5 * float(
        np.imag(u.h * np.sum(np.abs(u.values) ** 2 * u.values * np.conj(ux)))
    )
    sextic = 0.5 * float(u.h * np.sum(np.abs(u.values) ** 6))
    return kinetic + cubic + sextic


def make_monitor(spec: str, cache: dict | None = None):
    """Resolve a monitor spec to (name, callable).

    Supported: mass | momentum | energy | energy:J | a:RE,IM (Wronskian at
    lambda^2 = RE + i IM) | phi:L,RHO | hs:S (homogeneous seminorm) |
    hsnorm:S (full Sobolev norm).
    """
    from . import hierarchy, scattering, sobolev

    cache = cache if cache is not None else {}
    head, _, arg = spec.partition(":")
    if head == "mass":
        return spec, mass
    if head == "momentum":
        return spec, momentum
    if head == "energy" and not arg:
        return spec, energy_functional
    if head == "energy":
        j = int(arg)
        density = cache.setdefault(("energy", j), hierarchy.energy(j).density)
        return spec, density.evaluate
    if head == "a":
        re, im = (float(v) for v in arg.split(","))
        sp = scattering.SpectralParameter.from_lambda_sq(complex(re, im))
        return spec, lambda u: scattering.jost_transmission(u, sp)
    if head == "phi":
        l_str, rho_str = arg.split(",")
        level, rho = int(l_str), float(rho_str)
        return spec, lambda u: sobolev.phi(u, rho, level)
    if head == "hs":
        s = float(arg)
        return spec, lambda u: sobolev.hs_seminorm(u, s)
    if head == "hsnorm":
        s = float(arg)
        return spec, lambda u: sobolev.hs_norm(u, s)
    raise ValueError(f"unknown monitor spec {spec!r}")


@dataclass
class MonitorSeries:
    times: list[float] = field(default_factory=list)
    values: dict[str, list[complex]] = field(default_factory=dict)

    def record(self, t: float, row: dict[str, complex]) -> None:
        self.times.append(t)
        for name, val in row.items():
            self.values.setdefault(name, []).append(val)

    def column(self, name: str) -> np.ndarray:
        return np.array(self.values[name])

    def relative_drift(self, name: str) -> float:
        col = self.column(name)
        ref = abs(col[0])
        if ref == 0.0:
            return float(np.abs(col - col[0]).max())
        return float(np.abs(col - col[0]).max() / ref)

    def to_csv(self, path) -> None:
        names = sorted(self.values)
        cols: list[tuple[str, np.ndarray]] = [("t", np.asarray(self.times))]
        for name in names:
            col = self.column(name)
            if np.iscomplexobj(col):
                cols.append((f"{name}_re", col.real))
                cols.append((f"{name}_im", col.imag))
            else:
                cols.append((name, col))
        with open(path, "w") as fh:
            fh.write(",".join(c[0] for c in cols) + "\n")
            for i in range(len(self.times)):
                fh.write(",".join(f"{c[1][i]:.17g}" for c in cols) + "\n")

    def to_json(self, path=None):
        payload = {"times": list(self.times), "values": {}}
        for name in sorted(self.values):
            col = self.column(name)
            payload["values"][name] = {
                "re": list(col.real.astype(float)),
                "im": list(col.imag.astype(float)) if np.iscomplexobj(col) else None,
            }
        if path is None:
            return payload
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)


def evolve(u0: GridFunction, cfg: EvolutionConfig, monitors=(),
           snapshot_dir=None) -> MonitorSeries:
    """March to t_final, recording the requested monitors every
    monitor_stride steps (plus the initial and final states)."""
    limit = stability_limit(u0, cfg.dealias)
    if cfg.dt > limit:
        raise StabilityError(
            f"dt = {cfg.dt:g} exceeds the pre-flight stability bound {limit:g}"
        )
    cache: dict = {}
    resolved = [make_monitor(m, cache) if isinstance(m, str) else m for m in monitors]
    stepper = Stepper(u0.n, u0.domain_length, cfg.dt, cfg.dealias)
    n_steps = max(1, round(cfg.t_final / cfg.dt))
    series = MonitorSeries()

    def observe(t: float, state: np.ndarray) -> None:
        u = u0.with_values(np.fft.ifft(state))
        series.record(t, {name: fn(u) for name, fn in resolved})

    c = u0.fft() * stepper.mask
    observe(0.0, c)
    for n in range(1, n_steps + 1):
        c = stepper.step(c)
        if not np.all(np.isfinite(c)):
            raise StabilityError(f"non-finite state at step {n} (t={n * cfg.dt:g})")
        if n % cfg.monitor_stride == 0 or n == n_steps:
            observe(n * cfg.dt, c)
        if (
            snapshot_dir is not None
            and cfg.snapshot_stride
            and (n % cfg.snapshot_stride == 0 or n == n_steps)
        ):
            snap = u0.with_values(np.fft.ifft(c))
            snap.write_binary(
                os.path.join(snapshot_dir, f"snapshot_{n:08d}.dnls")
            )
    return series
