"""Three-dimensional leapfrog solvers.

Two problems share one grid and one probe machinery:

* exterior problem with ``∂_ν u - gamma u_t - beta u = 0`` on a voxelized
  obstacle (``solve_robin``),
* transmission problem ``alpha u_tt - Δu = 0`` with ``alpha != 1`` inside the
  obstacle (``solve_refractive``).

The outer box is sized so that nothing reflected from it can reach a probe
before the final time; its faces are simply held at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .geometry import ConfigurationError, Shape
from .solver1d import TimeTrace
from .sources import SourceBall

__all__ = [
    "Grid3D",
    "auto_grid",
    "RobinMask",
    "robin_mask",
    "MediumField",
    "medium_field",
    "ProbeSet",
    "point_probes",
    "node_probes",
    "source_field",
    "solve_robin",
    "solve_refractive",
    "solve_free",
    "write_snapshot",
    "read_snapshot",
]


@dataclass(frozen=True)
class Grid3D:
    """Uniform node grid ``lo + h * (i, j, k)``."""

    lo: tuple[float, float, float]
    shape: tuple[int, int, int]
    h: float
    courant: float = 0.9

    def __post_init__(self):
        if not 0 < self.courant <= 1:
            raise ConfigurationError(f"Courant ratio {self.courant} outside (0, 1]")
        if min(self.shape) < 5:
            raise ConfigurationError("grid needs at least 5 nodes per axis")

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.lo) + self.h * (np.asarray(self.shape) - 1)

    def dt(self, alpha_min: float = 1.0) -> float:
        return self.courant * self.h * np.sqrt(min(alpha_min, 1.0)) / np.sqrt(3.0)

    def axes(self) -> list[np.ndarray]:
        return [self.lo[d] + self.h * np.arange(self.shape[d]) for d in range(3)]

    def nodes(self) -> np.ndarray:
        x, y, z = self.axes()
        X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
        return np.stack([X, Y, Z], axis=-1)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def auto_grid(src: SourceBall, probes: np.ndarray, T: float, h: float,
              courant: float = 0.9, speed_max: float = 1.0,
              obstacle: Shape | None = None, pad: int = 4) -> Grid3D:
    """Smallest box that keeps the zero outer boundary causally invisible.

    A reflection from a boundary point ``z`` reaches probe ``p`` no earlier
    than ``(|z - B| + |z - p|) / c`` along straight rays; fast regions
    (``speed_max > 1`` inside the obstacle) are covered by lengthening the
    admissible path by the time saved crossing the obstacle. For every probe
    the admissible set is an ellipsoid with foci at the source center and
    the probe; the box encloses all of them plus ``pad`` cells.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    c = np.asarray(src.geometry.center)
    rho = src.geometry.radius
    budget = T
    if obstacle is not None and speed_max > 1.0:
        lo, hi = obstacle.bounds()
        diam = float(np.linalg.norm(hi - lo))
        budget += 2.0 * diam * (1.0 - 1.0 / speed_max)
    # foci sit at the source center: add the source radius to both legs
    budget_len = budget + 2 * rho
    lo_box = np.minimum(probes.min(axis=0), c - rho)
    hi_box = np.maximum(probes.max(axis=0), c + rho)
    foci = probes - c
    dist = np.linalg.norm(foci, axis=1)
    ok = dist < budget_len
    if np.any(ok):
        semi_major = budget_len / 2
        centers = 0.5 * (probes[ok] + c)
        u = np.zeros_like(foci[ok])
        nz = dist[ok] > 0
        u[nz] = foci[ok][nz] / dist[ok][nz, None]
        b2 = semi_major**2 - (dist[ok] / 2) ** 2
        ext = np.sqrt(semi_major**2 * u**2 + b2[:, None] * (1 - u**2))
        lo_box = np.minimum(lo_box, (centers - ext).min(axis=0))
        hi_box = np.maximum(hi_box, (centers + ext).max(axis=0))
    lo_box = lo_box - pad * h
    hi_box = hi_box + pad * h
    # snap to a lattice through the source center so B is resolved the same way
    lo_idx = np.floor((lo_box - c) / h)
    hi_idx = np.ceil((hi_box - c) / h)
    lo = c + lo_idx * h
    shape = tuple(int(v) for v in (hi_idx - lo_idx + 1))
    return Grid3D(tuple(float(v) for v in lo), shape, h, courant)


def _fraction_inside(shape: Shape, grid: Grid3D, sub: int = 4) -> np.ndarray:
    """Volume fraction of each node's cell inside ``shape`` (sub-sampled)."""
    nodes = grid.nodes()
    sd = shape.signed_distance(nodes)
    frac = (sd < 0).astype(float)
    near = np.abs(sd) < grid.h * np.sqrt(3) / 2 + 1e-12
    if np.any(near):
        offs = (np.arange(sub) + 0.5) / sub - 0.5
        O = np.stack(np.meshgrid(offs, offs, offs, indexing="ij"), -1).reshape(-1, 3) * grid.h
        pts = nodes[near][:, None, :] + O[None, :, :]
        frac[near] = np.mean(shape.signed_distance(pts) < 0, axis=1)
    return frac


def source_field(src: SourceBall, grid: Grid3D) -> np.ndarray:
    """``f`` on the nodes, with partial cells weighted by their volume fraction."""
    return src.amplitude * _fraction_inside(src.geometry, grid)


@dataclass
class RobinMask:
    """Voxelized obstacle with per-node Robin data.

    ``exterior`` marks nodes updated by the scheme. ``faces`` counts, for each
    exterior node, how many of its six neighbours lie in the obstacle; each
    such face carries the ghost relation ``(u_P - u_G)/h = gamma u_t + beta u``
    (outward normal of the obstacle pointing to ``P``).
    """

    exterior: np.ndarray
    faces: np.ndarray
    gamma: np.ndarray | float
    beta: np.ndarray | float

    def __post_init__(self):
        if np.any(np.asarray(self.gamma) < 0):
            raise ConfigurationError("gamma must be nonnegative on every boundary face")

    @property
    def boundary(self) -> np.ndarray:
        return self.exterior & (self.faces > 0)


def robin_mask(obstacle: Shape | None, grid: Grid3D, gamma: float = 0.0,
               beta: float = 0.0) -> RobinMask:
    if obstacle is None:
        ext = np.ones(grid.shape, dtype=bool)
    else:
        ext = obstacle.signed_distance(grid.nodes()) >= 0
    inside = (~ext).astype(np.int8)
    faces = np.zeros(grid.shape, dtype=np.int8)
    _neighbour_sum(inside, faces)
    faces = np.where(ext, faces, 0).astype(np.int8)
    return RobinMask(ext, faces, gamma, beta)


@dataclass
class MediumField:
    """``alpha`` on the nodes (cell-averaged near the obstacle boundary)."""

    alpha: np.ndarray

    def __post_init__(self):
        if not np.all(self.alpha > 0):
            raise ConfigurationError("alpha must be bounded below by a positive constant")

    @property
    def speed_max(self) -> float:
        return float(1.0 / np.sqrt(self.alpha.min()))


def medium_field(obstacle: Shape | None, grid: Grid3D, alpha_inside: float) -> MediumField:
    if obstacle is None:
        return MediumField(np.ones(grid.shape))
    frac = _fraction_inside(obstacle, grid)
    return MediumField(1.0 + (alpha_inside - 1.0) * frac)


@dataclass
class ProbeSet:
    """Probe values are ``matrix @ u.ravel()``.

    ``labels`` names consecutive blocks of rows, e.g. ``{"surface": slice}``.
    """

    points: np.ndarray
    matrix: sp.csr_matrix
    labels: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @staticmethod
    def concat(named: dict) -> "ProbeSet":
        pts, mats, labels = [], [], {}
        start = 0
        for name, ps in named.items():
            pts.append(ps.points)
            mats.append(ps.matrix)
            labels[name] = slice(start, start + len(ps))
            start += len(ps)
        return ProbeSet(np.vstack(pts), sp.vstack(mats).tocsr(), labels)


def _lagrange_weights(t: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Stencil start index and weights for 1D Lagrange interpolation."""
    if order == 1:
        i0 = np.floor(t).astype(int)
        s = t - i0
        return i0, np.stack([1 - s, s], axis=-1)
    i0 = np.floor(t).astype(int) - 1
    s = t - i0  # in [1, 2)
    nodes = np.arange(4)
    w = np.ones(t.shape + (4,))
    for k in range(4):
        for m in range(4):
            if m != k:
                w[..., k] *= (s - nodes[m]) / (nodes[k] - nodes[m])
    return i0, w


def point_probes(grid: Grid3D, points, order: int = 3) -> ProbeSet:
    """Interpolating probes (``order`` 1: trilinear, 3: tricubic Lagrange)."""
    if order not in (1, 3):
        raise ValueError("interpolation order must be 1 or 3")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rel = (points - np.asarray(grid.lo)) / grid.h
    n = order + 1
    shape = np.asarray(grid.shape)
    idx, wts = [], []
    for d in range(3):
        i0, w = _lagrange_weights(rel[:, d], order)
        if np.any(i0 < 0) or np.any(i0 + n - 1 > shape[d] - 1):
            raise ConfigurationError("probe outside the grid (or too close to its edge)")
        idx.append(i0)
        wts.append(w)
    offs = np.arange(n)
    I = idx[0][:, None, None, None] + offs[None, :, None, None]
    J = idx[1][:, None, None, None] + offs[None, None, :, None]
    K = idx[2][:, None, None, None] + offs[None, None, None, :]
    W = wts[0][:, :, None, None] * wts[1][:, None, :, None] * wts[2][:, None, None, :]
    flat = np.ravel_multi_index(
        (np.broadcast_to(I, W.shape), np.broadcast_to(J, W.shape), np.broadcast_to(K, W.shape)),
        grid.shape,
    )
    rows = np.repeat(np.arange(points.shape[0]), n**3)
    m = sp.csr_matrix((W.ravel(), (rows, flat.ravel())), shape=(points.shape[0], grid.size))
    return ProbeSet(points, m)


def node_probes(grid: Grid3D, mask: np.ndarray) -> ProbeSet:
    """One probe per selected grid node (no interpolation)."""
    flat = np.flatnonzero(mask.ravel())
    m = sp.csr_matrix((np.ones(flat.size), (np.arange(flat.size), flat)),
                      shape=(flat.size, grid.size))
    return ProbeSet(grid.nodes().reshape(-1, 3)[flat], m)


def write_snapshot(path, u: np.ndarray, grid: Grid3D, t: float) -> None:
    """Raw little-endian float32 dump ``<path>.bin`` plus text header ``<path>.hdr``."""
    path = Path(path)
    np.asarray(u, dtype="<f4").tofile(path.with_suffix(".bin"))
    header = (
        f"dims {grid.shape[0]} {grid.shape[1]} {grid.shape[2]}\n"
        f"h {grid.h!r}\n"
        f"t {t!r}\n"
        f"origin {grid.lo[0]!r} {grid.lo[1]!r} {grid.lo[2]!r}\n"
        "dtype float32-le\norder C\n"
    )
    path.with_suffix(".hdr").write_text(header)


def read_snapshot(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = {}
    for line in path.with_suffix(".hdr").read_text().splitlines():
        key, *vals = line.split()
        meta[key] = vals
    dims = tuple(int(v) for v in meta["dims"])
    u = np.fromfile(path.with_suffix(".bin"), dtype="<f4").reshape(dims)
    return u, {"dims": dims, "h": float(meta["h"][0]), "t": float(meta["t"][0]),
               "origin": tuple(float(v) for v in meta["origin"])}


def _neighbour_sum(u: np.ndarray, out: np.ndarray) -> np.ndarray:
    out[...] = 0.0
    out[1:, :, :] += u[:-1, :, :]
    out[:-1, :, :] += u[1:, :, :]
    out[:, 1:, :] += u[:, :-1, :]
    out[:, :-1, :] += u[:, 1:, :]
    out[:, :, 1:] += u[:, :, :-1]
    out[:, :, :-1] += u[:, :, 1:]
    return out


def _edge_zero(u: np.ndarray) -> None:
    u[0] = u[-1] = 0.0
    u[:, 0] = u[:, -1] = 0.0
    u[:, :, 0] = u[:, :, -1] = 0.0


def _run(grid: Grid3D, f: np.ndarray, probes: ProbeSet, T: float, dt: float, step,
         energy=None, snapshot_every: int = 0, snapshot_dir=None) -> TimeTrace:
    n_steps = int(round(T / dt))
    if n_steps < 2:
        raise ConfigurationError("final time shorter than two steps")
    u_prev = np.zeros(grid.shape)
    u = dt * f
    values = np.empty((len(probes), n_steps + 1))
    values[:, 0] = 0.0
    values[:, 1] = probes.matrix @ u.ravel()
    energies = []
    for n in range(1, n_steps):
        u_next = step(u, u_prev)
        if energy is not None:
            energies.append(energy(u, u_next))
        u_prev, u = u, u_next
        values[:, n + 1] = probes.matrix @ u.ravel()
        if snapshot_every and (n + 1) % snapshot_every == 0 and snapshot_dir is not None:
            write_snapshot(Path(snapshot_dir) / f"u_{n + 1:06d}", u, grid, (n + 1) * dt)
    meta = {"n_steps": n_steps, "labels": probes.labels}
    if energy is not None:
        meta["energy"] = np.asarray(energies)
    return TimeTrace(probes.points, dt, values, meta)


def solve_robin(grid: Grid3D, mask: RobinMask, src: SourceBall, probes: ProbeSet, T: float,
                energy: bool = False, **snap) -> TimeTrace:
    """Exterior problem with the dissipative boundary condition on the voxel obstacle."""
    f = source_field(src, grid)
    if np.any((f != 0) & ~mask.exterior) or np.any((f != 0) & (mask.faces > 0)):
        raise ConfigurationError("source ball intersects the voxelized obstacle")
    dt = grid.dt()
    h = grid.h
    ext = mask.exterior.astype(float)
    k = mask.faces.astype(float)
    gam = np.asarray(mask.gamma, dtype=float) * k
    bet = np.asarray(mask.beta, dtype=float) * k
    n_ext = (6.0 - k) * ext
    damp = dt * gam / (2 * h)
    inv = 1.0 / (1.0 + damp)
    c2 = dt * dt / (h * h)
    nb = np.empty(grid.shape)

    def step(u, u_prev):
        _neighbour_sum(u, nb)  # obstacle nodes hold zero, so they drop out
        lap = nb - n_ext * u
        out = 2 * u - u_prev + c2 * lap - (dt * dt / h) * bet * u + damp * u_prev
        out *= inv
        out *= ext
        _edge_zero(out)
        return out

    def energy_fn(u, u_next):
        kin = 0.5 * np.sum(ext * ((u_next - u) / dt) ** 2) * h**3
        pot = 0.0
        for axis in range(3):
            sl = [slice(None)] * 3
            sl0 = list(sl)
            sl1 = list(sl)
            sl0[axis] = slice(None, -1)
            sl1[axis] = slice(1, None)
            both = ext[tuple(sl0)] * ext[tuple(sl1)]
            du1 = np.diff(u_next, axis=axis)
            du0 = np.diff(u, axis=axis)
            pot += 0.5 * np.sum(both * du1 * du0) * h
        bnd = 0.5 * np.sum(bet * u_next * u) * h**2
        return float(kin + pot + bnd)

    return _run(grid, f, probes, T, dt, step, energy_fn if energy else None, **snap)


def solve_refractive(grid: Grid3D, medium: MediumField, src: SourceBall, probes: ProbeSet,
                     T: float, energy: bool = False, dt: float | None = None,
                     **snap) -> TimeTrace:
    """Transmission problem ``alpha u_tt - Δu = 0``; no condition at the obstacle boundary.

    ``dt`` defaults to the largest stable step for ``min(alpha)``; a control
    run should be given the step of the run it is compared with.
    """
    stable = grid.dt(float(medium.alpha.min()))
    if dt is None:
        dt = stable
    elif dt > stable * (1 + 1e-12):
        raise ConfigurationError(f"time step {dt} violates the CFL bound {stable}")
    f = source_field(src, grid)
    h = grid.h
    coef = dt * dt / (h * h) / medium.alpha
    nb = np.empty(grid.shape)

    def step(u, u_prev):
        _neighbour_sum(u, nb)
        out = 2 * u - u_prev + coef * (nb - 6 * u)
        _edge_zero(out)
        return out

    def energy_fn(u, u_next):
        kin = 0.5 * np.sum(medium.alpha * ((u_next - u) / dt) ** 2) * h**3
        pot = 0.0
        for axis in range(3):
            pot += 0.5 * np.sum(np.diff(u_next, axis=axis) * np.diff(u, axis=axis)) * h
        return float(kin + pot)

    return _run(grid, f, probes, T, dt, step, energy_fn if energy else None, **snap)


def solve_free(grid: Grid3D, src: SourceBall, probes: ProbeSet, T: float,
               dt: float | None = None, energy: bool = False) -> TimeTrace:
    """Free-space control run on ``grid``."""
    medium = MediumField(np.ones(grid.shape))
    return solve_refractive(grid, medium, src, probes, T, energy=energy, dt=dt)
