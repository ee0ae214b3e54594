"""Frozen random atom configurations, in units of the mean spacing a."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

R_MIN = 0.1
MAX_ATTEMPTS = 10_000

_MASK64 = (1 << 64) - 1


class SamplingError(RuntimeError):
    pass


def mix_seed(master_seed: int, k: int) -> int:
    """Derive the seed of realization ``k`` (splitmix64 finalizer)."""
    z = (master_seed + (k + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Geometry:
    """``kind`` is one of periodic_box, open_gaussian, open_line."""

    kind: str
    length: float | None = None
    sigmas: tuple[float, ...] | None = None

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic_box"

    def describe(self) -> str:
        if self.kind == "open_gaussian":
            return "open_gaussian(" + ",".join(repr(s) for s in self.sigmas) + ")"
        return f"{self.kind}({self.length!r})"


@dataclass(frozen=True)
class AtomConfiguration:
    positions: np.ndarray = field(repr=False)  # shape (N, d)
    geometry: Geometry
    seed: int
    r_min: float = R_MIN

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2:
            raise ValueError("positions must have shape (N, d)")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def atom_count(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def displacement(self, i, j) -> np.ndarray:
        diff = self.positions[i] - self.positions[j]
        if self.geometry.periodic:
            L = self.geometry.length
            diff = diff - L * np.round(diff / L)
        return diff

    def distance_matrix(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        if self.geometry.periodic:
            L = self.geometry.length
            diff -= L * np.round(diff / L)
        return np.sqrt(np.sum(diff**2, axis=-1))

    def scaled(self, factor: float) -> AtomConfiguration:
        """Same configuration with every length multiplied by ``factor``."""
        g = self.geometry
        geom = Geometry(
            g.kind,
            None if g.length is None else g.length * factor,
            None if g.sigmas is None else tuple(s * factor for s in g.sigmas),
        )
        return AtomConfiguration(self.positions * factor, geom, self.seed, self.r_min * factor)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# geometry: {self.geometry.describe()}\n")
        buf.write(f"# seed: {self.seed}\n")
        buf.write("# units: a (mean interparticle spacing)\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index"] + ["x", "y", "z"][: self.dimension])
        for i, row in enumerate(self.positions):
            w.writerow([i] + [repr(float(c)) for c in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def pair_distance(config: AtomConfiguration, i: int, j: int) -> float:
    n = config.atom_count
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"atom index out of range for N={n}: ({i}, {j})")
    if i == j:
        raise ValueError("pair_distance needs two distinct atoms")
    return float(np.linalg.norm(config.displacement(i, j)))


def _rejection_fill(draw, N: int, d: int, r_min: float, length: float | None) -> np.ndarray:
    pts = np.empty((N, d))
    attempts = 0
    for k in range(N):
        while True:
            attempts += 1
            if attempts > MAX_ATTEMPTS + N:
                raise SamplingError(
                    f"could not place {N} atoms with r_min={r_min} after {MAX_ATTEMPTS} rejections"
                )
            x = draw()
            if k == 0:
                break
            diff = pts[:k] - x
            if length is not None:
                diff -= length * np.round(diff / length)
            if np.min(np.sum(diff**2, axis=1)) >= r_min**2:
                break
        pts[k] = x
    return pts


def sample_uniform(N: int, d: int, seed: int, r_min: float = R_MIN) -> AtomConfiguration:
    """Uniform points at unit density in a periodic box of side N^(1/d)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    L = N ** (1.0 / d)
    rng = np.random.default_rng(seed)
    pts = _rejection_fill(lambda: rng.uniform(0.0, L, size=d), N, d, r_min, L)
    geom = Geometry("periodic_box", length=L)
    return AtomConfiguration(pts, geom, seed, r_min)


def sample_gaussian_cloud(N: int, sigmas, seed: int, r_min: float = R_MIN) -> AtomConfiguration:
    sig = np.asarray(sigmas, dtype=float).ravel()
    if sig.size == 0 or np.any(sig <= 0):
        raise ValueError("all sigmas must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    pts = _rejection_fill(lambda: rng.normal(0.0, sig), N, sig.size, r_min, None)
    return AtomConfiguration(pts, Geometry("open_gaussian", sigmas=tuple(sig.tolist())), seed, r_min)


def sample_line(N: int, seed: int, length: float | None = None, r_min: float = R_MIN) -> AtomConfiguration:
    """Uniform points on an open segment (default length N, unit density)."""
    L = float(N) if length is None else float(length)
    rng = np.random.default_rng(seed)
    pts = _rejection_fill(lambda: rng.uniform(0.0, L, size=1), N, 1, r_min, None)
    return AtomConfiguration(pts, Geometry("open_line", length=L), seed, r_min)


def sample(geometry: str, N: int, d: int, seed: int, r_min: float = R_MIN, sigmas=None) -> AtomConfiguration:
    """Dispatch on a geometry name; used by the disorder loop and the CLI."""
    if geometry == "periodic_box":
        return sample_uniform(N, d, seed, r_min)
    if geometry == "open_gaussian":
        return sample_gaussian_cloud(N, sigmas if sigmas is not None else [1.0] * d, seed, r_min)
    if geometry == "open_line":
        return sample_line(N, seed, r_min=r_min)
    raise ValueError(f"unknown geometry {geometry!r}")
