"""Exact many-body dynamics of the driven frozen Rydberg gas.

The dimensionless Hamiltonian (energies in E_c, lengths in a, hbar = 1) is

    H = -(Delta/2) sum_i sz_i + (alpha/2) sum_i sx_i + sum_{i<j} P_i P_j / r_ij^p

with sz = +1 on the Rydberg state and P = (1 + sz)/2. Basis states are bit
masks (bit i set = atom i excited), optionally truncated to at most ``n_max``
excitations.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .ensemble import AtomConfiguration, mix_seed, sample
from .params import ModelParams

log = logging.getLogger(__name__)

FULL_CAP = 14
STATE_CAP = 5_000_000
DENSE_CAP = 4500
DEFAULT_TOL = 1e-6
_ROUNDOFF = 1e-14


class BasisError(ValueError):
    pass


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class BasisSpec:
    """``mode`` is "full" or "truncated"; ``n_max`` only applies to truncation."""

    atom_count: int
    mode: str = "full"
    n_max: int | None = None
    full_cap: int = FULL_CAP
    state_cap: int = STATE_CAP

    def __post_init__(self):
        if self.atom_count < 1:
            raise BasisError("atom_count must be >= 1")
        if self.mode == "full":
            if self.atom_count > self.full_cap:
                raise BasisError(f"full basis limited to N <= {self.full_cap}, got N={self.atom_count}")
        elif self.mode == "truncated":
            if self.n_max is None or not 1 <= self.n_max <= self.atom_count:
                raise BasisError(f"n_max must lie in [1, {self.atom_count}], got {self.n_max}")
        else:
            raise BasisError(f"unknown basis mode {self.mode!r}")
        if self.dimension > self.state_cap:
            raise BasisError(f"basis dimension {self.dimension} exceeds state cap {self.state_cap}")

    @classmethod
    def truncated(cls, atom_count: int, n_max: int, **kw) -> BasisSpec:
        return cls(atom_count, "truncated", n_max, **kw)

    @property
    def max_excitations(self) -> int:
        return self.atom_count if self.mode == "full" else self.n_max

    @property
    def dimension(self) -> int:
        return sum(math.comb(self.atom_count, k) for k in range(self.max_excitations + 1))

    def as_dict(self) -> dict:
        return {"mode": self.mode, "atom_count": self.atom_count, "n_max": self.max_excitations}


@dataclass(frozen=True, eq=False)
class Basis:
    spec: BasisSpec
    states: np.ndarray  # bit masks, ordered by excitation number then lexicographically
    excitations: np.ndarray
    _sorted: np.ndarray = field(repr=False)
    _order: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.states.size

    def index_of(self, masks: np.ndarray) -> np.ndarray:
        """Basis indices of ``masks``; -1 where a mask lies outside the basis."""
        masks = np.asarray(masks, dtype=np.int64)
        pos = np.searchsorted(self._sorted, masks)
        pos = np.clip(pos, 0, self._sorted.size - 1)
        found = self._sorted[pos] == masks
        return np.where(found, self._order[pos], -1)

    def occupations(self) -> np.ndarray:
        """(dim, N) 0/1 array of Rydberg occupations."""
        N = self.spec.atom_count
        return ((self.states[:, None] >> np.arange(N, dtype=np.int64)) & 1).astype(float)


def build_basis(spec: BasisSpec) -> Basis:
    N = spec.atom_count
    masks = []
    for k in range(spec.max_excitations + 1):
        for sites in combinations(range(N), k):
            m = 0
            for s in sites:
                m |= 1 << s
            masks.append(m)
    states = np.array(masks, dtype=np.int64)
    exc = np.array([bin(int(m)).count("1") for m in states], dtype=np.int64)
    order = np.argsort(states, kind="stable")
    return Basis(spec, states, exc, states[order], order)


@dataclass(eq=False)
class HamiltonianOperator:
    basis: Basis
    diagonal: np.ndarray
    offdiagonal: sp.csr_matrix  # spin-flip part, entries alpha/2
    config: AtomConfiguration
    params: ModelParams
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def matrix(self) -> sp.csr_matrix:
        return (sp.diags(self.diagonal) + self.offdiagonal).tocsr()

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def eigh(self):
        if self._eig is None:
            self._eig = scipy.linalg.eigh(self.dense())
        return self._eig

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.diagonal * v + self.offdiagonal @ v


def interaction_matrix(config: AtomConfiguration, p: int) -> np.ndarray:
    r = config.distance_matrix()
    with np.errstate(divide="ignore"):
        V = r ** (-float(p))
    np.fill_diagonal(V, 0.0)
    return V


def build_hamiltonian(config: AtomConfiguration, params: ModelParams, spec: BasisSpec) -> HamiltonianOperator:
    N = spec.atom_count
    if config.atom_count != N:
        raise BasisError(f"configuration has {config.atom_count} atoms, basis expects {N}")
    if config.dimension != params.dimension:
        raise BasisError(f"configuration is {config.dimension}d, parameters are {params.dimension}d")
    basis = build_basis(spec)
    occ = basis.occupations()
    V = interaction_matrix(config, params.p)
    # sum_{i<j} n_i n_j V_ij = 0.5 * n^T V n
    inter = 0.5 * np.einsum("si,ij,sj->s", occ, V, occ)
    diag = -0.5 * params.delta * (2.0 * basis.excitations - N) + inter

    rows, cols = [], []
    for i in range(N):
        idx = basis.index_of(basis.states ^ (1 << i))
        ok = idx >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(idx[ok])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    dim = len(basis)
    off = sp.csr_matrix((np.full(rows.size, 0.5 * params.alpha), (rows, cols)), shape=(dim, dim))
    return HamiltonianOperator(basis, diag, off, config, params)


@dataclass
class ManyBodyState:
    amplitudes: np.ndarray
    basis: Basis
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (len(self.basis),):
            raise ValueError("amplitude vector does not match basis dimension")
        if abs(np.vdot(self.amplitudes, self.amplitudes).real - 1.0) > 1e-8:
            raise ValueError("state is not normalized")

    @classmethod
    def ground(cls, basis: Basis) -> ManyBodyState:
        psi = np.zeros(len(basis), dtype=complex)
        psi[0] = 1.0  # the all-ground mask 0 is always first
        return cls(psi, basis)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def site_occupations(self) -> np.ndarray:
        return self.probabilities() @ self.basis.occupations()

    def rydberg_fraction(self) -> float:
        return float(self.probabilities() @ self.basis.excitations) / self.basis.spec.atom_count


@dataclass
class ExcitationTrajectory:
    times: np.ndarray
    f_R_mean: np.ndarray
    f_R_stderr: np.ndarray
    realization_count: int = 1
    norm_drift: float = 0.0
    energy_drift: float = 0.0
    seeds: list[int] = field(default_factory=list)
    n_max: list[int] = field(default_factory=list)
    samples: np.ndarray | None = field(default=None, repr=False)  # (realizations, times)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.f_R_mean = np.asarray(self.f_R_mean, dtype=float)
        self.f_R_stderr = np.asarray(self.f_R_stderr, dtype=float)
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def plateau(self, fraction: float = 0.5) -> float:
        """Mean of f_R over the last ``fraction`` of the time window."""
        t0 = self.times[0] + (1.0 - fraction) * (self.times[-1] - self.times[0])
        return float(np.mean(self.f_R_mean[self.times >= t0]))


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1d grid")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return t


def _evolve_dense(H: HamiltonianOperator, psi0: np.ndarray, t0: float, times: np.ndarray):
    E, U = H.eigh()
    c = U.conj().T @ psi0
    phases = np.exp(-1j * np.outer(E, times - t0))  # (dim, T)
    return U @ (c[:, None] * phases)  # columns are states


def _lanczos(H: HamiltonianOperator, v: np.ndarray, m: int):
    """Lanczos with full reorthogonalization; returns (Q, a, b, beta_last)."""
    dim = v.size
    m = min(m, dim)
    Q = np.zeros((dim, m), dtype=complex)
    a = np.zeros(m)
    b = np.zeros(m)
    beta0 = np.linalg.norm(v)
    Q[:, 0] = v / beta0
    k = m
    for j in range(m):
        w = H.matvec(Q[:, j])
        a[j] = np.vdot(Q[:, j], w).real
        w -= Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        w -= Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        b[j] = np.linalg.norm(w)
        if j + 1 < m:
            if b[j] < 1e-13 * max(1.0, abs(a[j])):
                k = j + 1  # invariant subspace
                break
            Q[:, j + 1] = w / b[j]
    return Q[:, :k], a[:k], b[:k], beta0


def _evolve_krylov(H, psi0, t0, times, tol, m=30, max_steps=1_000_000):
    """Adaptive-step Lanczos propagation hitting every grid time exactly.

    Local error per step is held below tol * h / span (floored at roundoff),
    so the accumulated error over the run stays below ~tol.
    """
    span = max(times[-1] - t0, 1e-300)
    out = np.empty((psi0.size, times.size), dtype=complex)
    psi = psi0.copy()
    t = t0
    dt = None
    steps = 0
    for n, target in enumerate(times):
        while target - t > 1e-15 * max(1.0, abs(target)):
            Q, a, b, beta0 = _lanczos(H, psi, m)
            k = a.size
            if k == 1:
                ev, evec = a.copy(), np.ones((1, 1))
            else:
                ev, evec = scipy.linalg.eigh_tridiagonal(a, b[: k - 1])
            exact = k < min(m, psi.size) or k == psi.size
            if dt is None:
                dt = 1.0 / max(np.ptp(ev), 1e-12)
            h = min(dt, target - t)
            clipped = h < dt
            while True:
                y = evec @ (np.exp(-1j * ev * h) * evec[0].conj())
                # error estimate from the first neglected Krylov coefficient
                err = 0.0 if exact else abs(b[k - 1] * y[k - 1]) * beta0
                allowed = max(tol * h / span, _ROUNDOFF)
                if exact or err <= allowed:
                    break
                clipped = False
                h *= max(0.1, 0.9 * (allowed / err) ** (1.0 / k))
                if h < 1e-14 * span:
                    raise PropagationError(
                        f"step size underflow at t={t:.6g} (stiff Hamiltonian; check r_min)"
                    )
            psi = beta0 * (Q @ y)
            t += h
            steps += 1
            if steps > max_steps:
                raise PropagationError(f"iteration cap of {max_steps} steps reached at t={t:.6g}")
            if not clipped:
                grow = 2.0 if exact or err == 0 else min(2.0, 0.9 * (allowed / err) ** (1.0 / k))
                dt = h * grow
        out[:, n] = psi
    return out


def evolve(H: HamiltonianOperator, state: ManyBodyState, times, tol: float = DEFAULT_TOL, method: str = "auto"):
    """Amplitudes at each grid time, as a (dim, T) array."""
    times = _check_times(times)
    if method == "auto":
        method = "dense" if H.dimension <= DENSE_CAP else "krylov"
    if method == "dense":
        return _evolve_dense(H, state.amplitudes, state.time, times)
    if method == "krylov":
        return _evolve_krylov(H, state.amplitudes, state.time, times, tol)
    raise ValueError(f"unknown method {method!r}")


def state_at(H: HamiltonianOperator, state: ManyBodyState, t: float, **kw) -> ManyBodyState:
    psi = evolve(H, state, [t], **kw)[:, 0]
    return ManyBodyState(psi / np.linalg.norm(psi), state.basis, t)


def propagate(
    H: HamiltonianOperator,
    state: ManyBodyState,
    times,
    tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> ExcitationTrajectory:
    """Single-realization f_R(t) with norm and energy drift diagnostics."""
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    times = _check_times(times)
    psi_t = evolve(H, state, times, tol, method)
    prob = np.abs(psi_t) ** 2
    norms = prob.sum(axis=0)
    N = H.basis.spec.atom_count
    f_R = (H.basis.excitations @ prob) / N / norms
    Hpsi = H.matrix() @ psi_t
    energies = np.einsum("st,st->t", psi_t.conj(), Hpsi).real / norms
    e0 = np.vdot(state.amplitudes, H.matvec(state.amplitudes)).real
    return ExcitationTrajectory(
        times,
        f_R,
        np.zeros_like(f_R),
        1,
        norm_drift=float(np.max(np.abs(norms - 1.0))),
        energy_drift=float(np.max(np.abs(energies - e0))),
    )


def _plateau_of(traj: ExcitationTrajectory) -> float:
    return traj.plateau()


def propagate_adaptive(
    config: AtomConfiguration,
    params: ModelParams,
    times,
    tol: float = DEFAULT_TOL,
    start: int = 1,
    rel_change: float = 0.01,
    method: str = "auto",
):
    """Raise n_max until the plateau moves by less than ``rel_change`` and no
    grid point of f_R moves by more than ``tol``.

    Returns (trajectory, n_max, plateau history).
    """
    N = config.atom_count
    history = []
    prev = None
    n_max = max(1, min(start, N))
    while True:
        spec = BasisSpec(N, "full") if n_max == N and N <= FULL_CAP else BasisSpec.truncated(N, n_max)
        H = build_hamiltonian(config, params, spec)
        traj = propagate(H, ManyBodyState.ground(H.basis), times, tol, method)
        plat = _plateau_of(traj)
        history.append(plat)
        if n_max == N:
            return traj, n_max, history
        if prev is not None:
            plateau_ok = abs(plat - history[-2]) <= rel_change * max(abs(plat), 1e-300)
            if plateau_ok and np.max(np.abs(traj.f_R_mean - prev)) <= tol:
                return traj, n_max, history
        prev = traj.f_R_mean
        n_max += 1


@dataclass(frozen=True)
class AdaptiveBasis:
    """Marker for per-realization adaptive excitation truncation."""

    start: int = 1
    rel_change: float = 0.01


def _run_realization(args):
    k, seed, params, N, geometry, spec, times, tol, method, r_min, sigmas, length_scale = args
    try:
        config = sample(geometry, N, params.dimension, seed, r_min=r_min, sigmas=sigmas)
        if length_scale != 1.0:
            config = config.scaled(length_scale)
        if isinstance(spec, AdaptiveBasis):
            traj, n_max, _ = propagate_adaptive(config, params, times, tol, spec.start, spec.rel_change, method)
        else:
            H = build_hamiltonian(config, params, spec)
            traj = propagate(H, ManyBodyState.ground(H.basis), times, tol, method)
            n_max = spec.max_excitations
    except Exception as exc:
        raise PropagationError(f"realization {k} (seed {seed}) failed: {exc}") from exc
    return traj.f_R_mean, traj.norm_drift, traj.energy_drift, n_max


def disorder_average(
    params: ModelParams,
    N: int,
    geometry: str = "periodic_box",
    realizations: int = 20,
    spec: BasisSpec | AdaptiveBasis | None = None,
    times=None,
    tol: float = DEFAULT_TOL,
    master_seed: int = 0,
    *,
    method: str = "auto",
    r_min: float = 0.1,
    sigmas=None,
    length_scale: float = 1.0,
    workers: int = 1,
) -> ExcitationTrajectory:
    """Mean and standard error of f_R(t) over random configurations.

    Realization k uses seed ``mix_seed(master_seed, k)``. ``length_scale``
    multiplies all positions; it lets a run be expressed in the units of a
    reference density rather than its own.
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    if spec is None:
        spec = AdaptiveBasis()
    times = _check_times(times)
    seeds = [mix_seed(master_seed, k) for k in range(realizations)]
    jobs = [
        (k, s, params, N, geometry, spec, times, tol, method, r_min, sigmas, length_scale)
        for k, s in enumerate(seeds)
    ]
    if workers > 1 and realizations > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_realization, jobs))
    else:
        results = [_run_realization(j) for j in jobs]
    samples = np.array([r[0] for r in results])
    mean = samples.sum(axis=0) / realizations
    if realizations > 1:
        stderr = samples.std(axis=0, ddof=1) / math.sqrt(realizations)
    else:
        stderr = np.zeros_like(mean)
    return ExcitationTrajectory(
        times,
        mean,
        stderr,
        realizations,
        norm_drift=max(r[1] for r in results),
        energy_drift=max(r[2] for r in results),
        seeds=seeds,
        n_max=[int(r[3]) for r in results],
        samples=samples,
    )


def default_time_grid(t_max: float, n_log: int = 40, n_lin: int = 160, t_min: float | None = None) -> np.ndarray:
    """Logarithmic early part followed by a linear tail up to ``t_max``."""
    if t_min is None:
        t_min = t_max * 1e-3
    split = 0.1 * t_max
    early = np.geomspace(t_min, split, n_log, endpoint=False)
    late = np.linspace(split, t_max, n_lin)
    return np.concatenate([early, late])


def pair_correlation(state: ManyBodyState, config: AtomConfiguration, bins) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Binned <P_i P_j> - f_R^2 over pairs.

    Returns (bin centers, mean correlation, pair counts); bins without any
    pair carry NaN.
    """
    bins = np.asarray(bins, dtype=float)
    occ = state.basis.occupations()
    prob = state.probabilities()
    pp = occ.T @ (prob[:, None] * occ)  # <P_i P_j>
    f_R = state.rydberg_fraction()
    r = config.distance_matrix()
    iu = np.triu_indices(config.atom_count, k=1)
    corr = pp[iu] - f_R**2
    dist = r[iu]
    which = np.digitize(dist, bins) - 1
    nb = bins.size - 1
    sums = np.zeros(nb)
    counts = np.zeros(nb, dtype=int)
    inside = (which >= 0) & (which < nb)
    np.add.at(sums, which[inside], corr[inside])
    np.add.at(counts, which[inside], 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    centers = 0.5 * (bins[1:] + bins[:-1])
    return centers, mean, counts


def estimate_blockade_radius(centers, corr, flat_tol: float = 1e-12) -> float | None:
    """Radius where C(r) climbs halfway from its short-range value to the plateau.

    The plateau is the mean of the outermost quarter of occupied bins. Returns
    None when C(r) is flat.
    """
    centers = np.asarray(centers, dtype=float)
    corr = np.asarray(corr, dtype=float)
    ok = np.isfinite(corr)
    c, x = corr[ok], centers[ok]
    if c.size < 3:
        raise ValueError("need at least 3 occupied bins")
    q = max(1, c.size // 4)
    plateau = float(np.mean(c[-q:]))
    depth = plateau - float(np.min(c[:-q])) if c.size > q else 0.0
    if abs(depth) <= flat_tol * max(1.0, abs(plateau)) or np.ptp(c) <= flat_tol:
        return None
    half = plateau - 0.5 * depth
    start = int(np.argmin(c[:-q]))
    for xi, ci in zip(x[start:], c[start:]):
        if ci >= half:
            return float(xi)
    return None
