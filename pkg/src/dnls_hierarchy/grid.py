"""Periodic grid functions standing in for Schwartz-class profiles.

A profile lives on the symmetric interval [-L/2, L/2) with N equispaced
samples, N a power of two.  Rapid decay at the interval edges is the
user's responsibility; constructing a profile whose boundary samples are
not negligible raises a warning (the whole-line theory is recovered only
in the large-domain limit).

Fourier convention throughout the package: frequencies are angular,
zeta_k = 2*pi*k/L, and the continuum transform is normalized so that
D = -i d/dx acts as multiplication by zeta.  Concretely

    uhat(zeta) = (2*pi)**-0.5 * integral exp(-i x zeta) u(x) dx,

discretized with the trapezoid rule on the grid.
"""

from __future__ import annotations

import struct
import warnings

import numpy as np

MAGIC = b"DNLS"
FORMAT_VERSION = 1

BOUNDARY_DECAY_THRESHOLD = 1e-10


class BoundaryDecayWarning(UserWarning):
    """Profile is not negligible at the domain edges."""


def _check_power_of_two(n: int) -> None:
    if n < 8 or (n & (n - 1)) != 0:
        raise ValueError(f"N must be a power of two >= 8, got {n}")


class GridFunction:
    """Immutable complex profile on a periodic interval of length L."""

    __slots__ = ("values", "domain_length")

    def __init__(self, values, domain_length: float, check_decay: bool = True):
        values = np.asarray(values, dtype=np.complex128).copy()
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        _check_power_of_two(values.size)
        if not domain_length > 0:
            raise ValueError("domain_length must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domain_length", float(domain_length))
        if check_decay:
            peak = float(np.abs(values).max())
            edge = float(max(abs(values[0]), abs(values[-1])))
            if peak > 0 and edge > BOUNDARY_DECAY_THRESHOLD * peak:
                warnings.warn(
                    f"boundary magnitude {edge:.2e} exceeds "
                    f"{BOUNDARY_DECAY_THRESHOLD:g} * max {peak:.2e}; "
                    "profile is treated as periodic, not Schwartz",
                    BoundaryDecayWarning,
                    stacklevel=2,
                )

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return (
            self.domain_length == other.domain_length
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"GridFunction(N={self.n}, L={self.domain_length:g})"

    # -- geometry -----------------------------------------------------------

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return self.domain_length / self.n

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.domain_length + self.h * np.arange(self.n)

    @property
    def freqs(self) -> np.ndarray:
        """Angular frequencies zeta_k in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=1.0 / self.n) / self.domain_length

    # -- spectral operations ------------------------------------------------

    def fft(self) -> np.ndarray:
        return np.fft.fft(self.values)

    def deriv(self, order: int = 1) -> np.ndarray:
        """Samples of the order-th spectral derivative."""
        if order == 0:
            return self.values.copy()
        return np.fft.ifft((1j * self.freqs) ** order * self.fft())

    def fourier_amplitudes(self) -> tuple[np.ndarray, np.ndarray, float]:
        """(zeta_k, uhat(zeta_k), dzeta) under the package transform convention.

        sum |uhat|^2 dzeta approximates the squared L2 norm (Plancherel).
        """
        zeta = self.freqs
        # exp(-i x0 zeta) phase: the grid starts at x0 = -L/2, the FFT at index 0
        uhat = (self.h / np.sqrt(2.0 * np.pi)) * np.exp(-1j * self.x[0] * zeta) * self.fft()
        dzeta = 2.0 * np.pi / self.domain_length
        return zeta, uhat, dzeta

    def integral(self, samples=None) -> complex:
        """Trapezoid (= spectral, by periodicity) integral over the domain."""
        if samples is None:
            samples = self.values
        return complex(self.h * np.sum(samples))

    def l2_norm_sq(self) -> float:
        return float(self.h * np.sum(np.abs(self.values) ** 2))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(values, self.domain_length, check_decay=False)

    def rescaled(self, mu: float) -> "GridFunction":
        """Spatial scaling u -> sqrt(mu) u(mu x); the domain shrinks to L/mu."""
        return GridFunction(
            np.sqrt(mu) * self.values, self.domain_length / mu, check_decay=False
        )

    def refine(self, factor: int) -> "GridFunction":
        """Band-limited upsampling by zero padding in Fourier space."""
        if factor == 1:
            return self
        n, m = self.n, self.n * factor
        c = self.fft()
        padded = np.zeros(m, dtype=np.complex128)
        padded[: n // 2] = c[: n // 2]
        padded[m - n // 2 + 1 :] = c[n // 2 + 1 :]
        padded[n // 2] = 0.5 * c[n // 2]
        padded[m - n // 2] = 0.5 * c[n // 2]
        vals = np.fft.ifft(padded) * factor
        return GridFunction(vals, self.domain_length, check_decay=False)

    # -- IO ------------------------------------------------------------------

    def write_binary(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IQd", FORMAT_VERSION, self.n, self.domain_length))
            inter = np.empty(2 * self.n, dtype="<f8")
            inter[0::2] = self.values.real
            inter[1::2] = self.values.imag
            fh.write(inter.tobytes())

    @classmethod
    def read_binary(cls, path) -> "GridFunction":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != MAGIC:
                raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
            version, n, length = struct.unpack("<IQd", fh.read(4 + 8 + 8))
            if version != FORMAT_VERSION:
                raise ValueError(f"unsupported format version {version}")
            raw = np.frombuffer(fh.read(16 * n), dtype="<f8")
            if raw.size != 2 * n:
                raise ValueError("truncated sample payload")
        values = raw[0::2] + 1j * raw[1::2]
        return cls(values, length, check_decay=False)

    @classmethod
    def read_csv(cls, path, domain_length: float) -> "GridFunction":
        """CSV with columns re, im (header line optional)."""
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                parts = [p.strip() for p in line.split(",")]
                try:
                    rows.append(complex(float(parts[0]), float(parts[1])))
                except ValueError:
                    continue  # header
        return cls(np.array(rows), domain_length, check_decay=False)

    @classmethod
    def from_callable(cls, f, n: int, domain_length: float, check_decay: bool = True):
        x = -0.5 * domain_length + (domain_length / n) * np.arange(n)
        return cls(f(x), domain_length, check_decay=check_decay)
