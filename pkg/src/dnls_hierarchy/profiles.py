"""Benchmark profiles used by the demo CLI and the verification suites."""

from __future__ import annotations

import numpy as np

from .grid import GridFunction


def gaussian(n: int = 1024, domain_length: float = 32.0, amplitude: float = 1.0,
             width: float = 1.0, chirp: float = 0.0, boost: float = 0.0) -> GridFunction:
    """amplitude * exp(-x^2/(2 width^2)), optionally chirped (quadratic phase)
    and boosted (linear phase; shifts the spectrum off center, killing the
    parity cancellations an even profile would show)."""

    def f(x):
        return amplitude * np.exp(
            -(x**2) / (2.0 * width**2) + 1j * chirp * x**2 + 1j * boost * x
        )

    return GridFunction.from_callable(f, n, domain_length)


def unit_mass_gaussian(n: int = 1024, domain_length: float = 32.0) -> GridFunction:
    """Gaussian with L2 norm exactly 1 in the continuum: pi^(-1/4) exp(-x^2/2)."""
    return gaussian(n, domain_length, amplitude=np.pi**-0.25, width=1.0)


def two_bump(n: int = 1024, domain_length: float = 48.0, separation: float = 7.0,
             amplitude: float = 0.8) -> GridFunction:
    """Two Gaussian bumps with opposite phase velocities."""

    def f(x):
        left = amplitude * np.exp(-((x + separation / 2) ** 2) / 2.0 + 1.3j * x)
        right = 0.85 * amplitude * np.exp(-((x - separation / 2) ** 2) / 1.6 - 0.9j * x)
        return left + right

    return GridFunction.from_callable(f, n, domain_length)


def rough_tail(n: int = 4096, domain_length: float = 64.0, regularity: float = 1.5,
               amplitude: float = 1.0, seed: int = 7) -> GridFunction:
    """Profile with an algebraic Fourier tail |uhat| ~ |zeta|^-(regularity+1/2).

    Marginally in H^regularity over the resolved band; used to probe decay
    rates that smooth data would overshoot.  A Gaussian window restores
    spatial decay; it is smoothing in frequency so the tail law survives.
    """
    rng = np.random.default_rng(seed)
    zeta = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / domain_length
    envelope = (1.0 + zeta**2) ** (-(regularity + 0.5) / 2.0)
    phases = np.exp(2j * np.pi * rng.random(n))
    spectrum = envelope * phases
    spectrum[0] = envelope[0]
    vals = np.fft.ifft(spectrum) * n
    x = -0.5 * domain_length + (domain_length / n) * np.arange(n)
    # window width L/16 puts the edges at exp(-32), comfortably Schwartz-like
    vals = vals * np.exp(-(x**2) / (2.0 * (domain_length / 16.0) ** 2))
    vals = amplitude * vals / np.sqrt((domain_length / n) * np.sum(np.abs(vals) ** 2))
    return GridFunction(vals, domain_length, check_decay=False)


NAMED = {
    "gaussian": gaussian,
    "unit-mass-gaussian": unit_mass_gaussian,
    "two-bump": two_bump,
}


def demo_profile(name: str, n: int = 1024, domain_length: float = 32.0) -> GridFunction:
    try:
        factory = NAMED[name]
    except KeyError:
        raise KeyError(f"unknown demo profile {name!r}; choices: {sorted(NAMED)}")
    return factory(n=n, domain_length=domain_length)
