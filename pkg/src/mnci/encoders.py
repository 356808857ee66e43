"""Sinusoidal node-position encoding and learnable Fourier time features."""

from __future__ import annotations

import numpy as np

from mnci.errors import ConfigError, ContractError
from mnci.numeric import as_real


def check_dim(dim: int) -> int:
    if dim <= 0 or dim % 2:
        raise ConfigError(f"dim must be even and positive, got {dim}")
    return dim


def wavelength_divisors(dim: int) -> np.ndarray:
    """10000^(2i/d) for i = 0..d/2-1."""
    check_dim(dim)
    return np.power(10000.0, np.arange(0, dim, 2, dtype=np.float64) / dim)


def frequencies(dim: int) -> np.ndarray:
    return 1.0 / wavelength_divisors(dim)


def positional_encode(position, dim: int) -> np.ndarray:
    """Initial embedding(s) for first-seen rank(s).

    A scalar position gives a length-``dim`` vector; an array of positions
    gives one row per position. Even slots hold sines, odd slots cosines.
    """
    divisors = wavelength_divisors(dim)
    pos = np.asarray(position, dtype=np.float64)
    if np.any(pos < 0):
        raise ContractError("positions must be >= 0")
    angle = pos[..., None] / divisors
    out = np.empty(pos.shape + (dim,), dtype=np.float64)
    out[..., 0::2] = np.sin(angle)
    out[..., 1::2] = np.cos(angle)
    return out


class TimeEncoder:
    """F(dt) = [cos(w_1 dt), sin(w_1 dt), ..., cos(w_{d/2} dt), sin(w_{d/2} dt)]."""

    def __init__(self, omega):
        omega = as_real(np.array(omega))
        if omega.ndim != 1 or omega.size == 0:
            raise ConfigError("omega must be a non-empty vector")
        if not np.all(np.isfinite(omega)):
            raise ContractError("omega must be finite")
        self.omega = omega

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator, scale: float = 1.0) -> "TimeEncoder":
        """Frequencies ~ N(0, scale^2)."""
        check_dim(dim)
        return cls(rng.normal(0.0, scale, size=dim // 2))

    @property
    def dim(self) -> int:
        return 2 * self.omega.size

    def encode(self, delta_t) -> np.ndarray:
        """Encode a scalar or a vector of elapsed times (one row each)."""
        dt = as_real(delta_t)
        if np.any(dt < 0):
            raise ContractError("delta_t must be >= 0")
        angle = dt[..., None] * self.omega
        out = np.empty(angle.shape[:-1] + (self.dim,), dtype=angle.dtype)
        out[..., 0::2] = np.cos(angle)
        out[..., 1::2] = np.sin(angle)
        return out

    def backward(self, delta_t, upstream) -> np.ndarray:
        """Gradient w.r.t. omega given dL/dF, summed over any leading axis."""
        dt = as_real(delta_t)
        g = as_real(upstream)
        if g.shape != dt.shape + (self.dim,):
            raise ContractError(f"upstream shape {g.shape} does not match {dt.shape + (self.dim,)}")
        if np.any(dt < 0):
            raise ContractError("delta_t must be >= 0")
        dt = dt[..., None]
        angle = dt * self.omega
        grad = g[..., 0::2] * (-dt * np.sin(angle)) + g[..., 1::2] * (dt * np.cos(angle))
        return grad.reshape(-1, self.omega.size).sum(axis=0)


def time_encode(delta_t, enc: TimeEncoder) -> np.ndarray:
    return enc.encode(delta_t)


def time_encode_backward(delta_t, enc: TimeEncoder, upstream) -> np.ndarray:
    return enc.backward(delta_t, upstream)
