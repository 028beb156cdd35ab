"""Array responses, phase-shifter quantization, and the quantized DFT codebook.

The transmit array is a rectangular grid of half-wavelength spaced elements,
(n_rows x n_t); the square planar case n_rows == n_t is the default and a
single-row config models a uniform linear array. Index convention, used
consistently everywhere: row index k carries the elevation phase (grid index
j), column index l carries the azimuth phase (grid index i).

A direction is "on-grid" when i = (n_t/2) sin(theta) and j = (n_rows/2)
sin(phi) are integers; those directions form the DFT beam grid, and the
codebook is the entrywise q-bit quantization of the matched responses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

#: Sentinel for unquantized (infinite-resolution) phase shifters.
UNQUANTIZED = None


@dataclass(frozen=True)
class ArrayConfig:
    """Array size and phase-shifter resolution.

    Attributes:
        n_t: elements per azimuth row; must be even and >= 2 so the on-grid
            index set is symmetric in angle.
        q: phase-shifter resolution in bits (>= 1), or UNQUANTIZED.
        n_rows: elements per elevation column; None means square (n_t),
            1 models a uniform linear array, otherwise must be even.
    """

    n_t: int
    q: int | None = UNQUANTIZED
    n_rows: int | None = None

    def __post_init__(self):
        if self.n_t < 2 or self.n_t % 2 != 0:
            raise ValueError(f"n_t must be even and >= 2, got {self.n_t}")
        if self.q is not UNQUANTIZED and (not isinstance(self.q, int) or self.q < 1):
            raise ValueError(f"q must be a positive integer or UNQUANTIZED, got {self.q}")
        rows = self.n_rows
        if rows is not None and rows != 1 and (rows < 2 or rows % 2 != 0):
            raise ValueError(f"n_rows must be None, 1, or even >= 2, got {rows}")

    @property
    def shape(self) -> tuple[int, int]:
        rows = self.n_t if self.n_rows is None else self.n_rows
        return rows, self.n_t


class GridIndex(NamedTuple):
    """Beam-grid direction index (azimuth i, elevation j), stored mod the
    per-axis element count. The physical angle of index i on an n-element
    axis is arcsin(2i/n) for i <= n/2 and arcsin(2(i-n)/n) otherwise."""

    i: int
    j: int = 0


def steering_vector(theta: float, n: int) -> np.ndarray:
    """Vandermonde steering vector: entry k is exp(-j pi k sin(theta))."""
    k = np.arange(n)
    return np.exp(-1j * np.pi * math.sin(theta) * k)


def array_response(theta: float, phi: float, n_t: int, n_rows: int | None = None) -> np.ndarray:
    """Far-field response matrix V(theta, phi) = a(phi) a(theta)^T.

    Entry (k, l) equals exp(-j pi (k sin(phi) + l sin(theta))).

    Args:
        theta: azimuth, radians.
        phi: elevation, radians.
        n_t: columns (azimuth elements).
        n_rows: rows (elevation elements); defaults to n_t.

    Returns:
        (n_rows, n_t) complex matrix with unit-modulus entries.
    """
    rows = n_t if n_rows is None else n_rows
    return np.outer(steering_vector(phi, rows), steering_vector(theta, n_t))


def grid_angle(i: int, n: int) -> float:
    """Physical angle (radians) of grid index i on an n-element axis."""
    if n == 1:
        return 0.0
    i = i % n
    if i <= n // 2:
        return math.asin(2 * i / n)
    return math.asin(2 * (i - n) / n)


def grid_angles(g: GridIndex, n_t: int, n_rows: int | None = None) -> tuple[float, float]:
    """(theta, phi) of a beam-grid index."""
    rows = n_t if n_rows is None else n_rows
    return grid_angle(g.i, n_t), grid_angle(g.j, rows)


def nearest_grid_index(theta: float, phi: float, n_t: int, n_rows: int | None = None) -> GridIndex:
    """Snap a direction to the nearest beam-grid index (round in sin-space)."""
    rows = n_t if n_rows is None else n_rows
    i = round((n_t / 2) * math.sin(theta)) % n_t
    j = 0 if rows == 1 else round((rows / 2) * math.sin(phi)) % rows
    return GridIndex(i, j)


def quantize_phase(x, q: int | None):
    """Round a phase to the nearest member of B_q = {2 pi i / 2^q}.

    Distance is circular (wraparound), so e.g. 1.6*pi quantizes to 0 for
    q=1. Exact midpoints resolve to the smaller phase value in [0, 2 pi),
    which at the seam means the tie between 2 pi (1 - 2^-q) and 2 pi goes
    to 0. Accepts scalars or arrays; UNQUANTIZED returns the phase mod 2 pi.
    """
    y = np.mod(x, 2 * np.pi)
    if q is UNQUANTIZED:
        return y
    levels = 1 << q
    step = 2 * np.pi / levels
    k0 = np.floor(y / step)
    d0 = y - k0 * step
    d1 = step - d0
    # Nearest level; on an exact tie keep k0 unless the upper candidate wraps
    # to 0, which is the smaller phase value.
    k = np.where(d0 <= d1, k0, k0 + 1)
    tie_at_seam = (d0 == d1) & (k0 + 1 == levels)
    k = np.where(tie_at_seam, levels, k)  # maps to 0 after the mod below
    out = (np.mod(k, levels)) * step
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def quantized_beamformer(f: np.ndarray, q: int | None) -> np.ndarray:
    """Project a matrix onto the q-bit analog beamformer set.

    Every entry keeps only its (quantized) phase and is scaled so the
    Frobenius norm is 1: entry (k, l) becomes
    exp(j Q_q(angle(f[k, l]))) / sqrt(size).

    Raises:
        ValueError: if any entry is zero (its phase is undefined).
    """
    f = np.asarray(f)
    if np.any(f == 0):
        raise ValueError("cannot quantize a beamformer with zero entries")
    scale = 1.0 / math.sqrt(f.size)
    return np.exp(1j * quantize_phase(np.angle(f), q)) * scale


@lru_cache(maxsize=4096)
def _codeword_cached(i: int, j: int, n_t: int, rows: int, q: int | None) -> np.ndarray:
    k = np.arange(rows)[:, None]
    l = np.arange(n_t)[None, :]
    # Matched to the response at grid (i, j): same (negative) phase slopes.
    phase = -2 * np.pi * ((j % rows) * k / rows + (i % n_t) * l / n_t)
    cw = np.exp(1j * quantize_phase(phase, q)) / math.sqrt(rows * n_t)
    cw.setflags(write=False)
    return cw


def dft_codeword(g: GridIndex, cfg: ArrayConfig) -> np.ndarray:
    """Codebook beamformer that steers the beam toward grid direction g.

    The unquantized variant is V(grid g) / sqrt(size), so its gain at grid g
    is the full coherent sum and exactly zero at every other grid point by
    DFT orthogonality; quantization keeps the entries on the q-bit phase
    lattice. Cached; the returned array is read-only.
    """
    rows, cols = cfg.shape
    return _codeword_cached(int(g[0]), int(g[1]), cols, rows, cfg.q)


def beam_gain(v: np.ndarray, f: np.ndarray) -> complex:
    """Inner product <V, F> = sum V * conj(F); the received-signal gain."""
    v = np.asarray(v)
    f = np.asarray(f)
    if v.shape != f.shape:
        raise ValueError(f"shape mismatch: response {v.shape} vs beamformer {f.shape}")
    return complex(np.vdot(f, v))


def beam_pattern(f: np.ndarray, directions) -> np.ndarray:
    """Normalized gain magnitude of a beamformer over a list of directions.

    Args:
        f: (rows, cols) beamformer.
        directions: iterable of (theta, phi) pairs, radians.

    Returns:
        1D array of |<V(theta, phi), F>| / max over the list.

    Raises:
        ValueError: if the direction list is empty.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if dirs.size == 0:
        raise ValueError("direction list is empty")
    rows, cols = f.shape
    sin_th = np.sin(dirs[:, 0])[:, None]
    sin_ph = np.sin(dirs[:, 1])[:, None]
    a_el = np.exp(-1j * np.pi * sin_ph * np.arange(rows)[None, :])   # (D, rows)
    a_az = np.exp(-1j * np.pi * sin_th * np.arange(cols)[None, :])   # (D, cols)
    amp = np.abs(np.einsum("dk,kl,dl->d", a_el, np.conj(f), a_az))
    return amp / amp.max()
