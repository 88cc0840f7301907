"""Voronoi polycrystals, crystal orientations and orientation-dependent properties.

Orientations use the Bunge Z-X-Z convention. ``rotation_matrix`` returns the
active crystal-to-sample rotation ``R = Rz(phi1) Rx(Phi) Rz(phi2)``, so a
vector with crystal components ``v_c`` has sample components ``R @ v_c``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from .params import ElasticConstants

_VOIGT = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))


def rotation_matrix(euler) -> np.ndarray:
    """Proper rotation for Bunge angles (phi1, Phi, phi2) in radians."""
    p1, P, p2 = (float(a) for a in euler)
    c1, s1 = np.cos(p1), np.sin(p1)
    c, s = np.cos(P), np.sin(P)
    c2, s2 = np.cos(p2), np.sin(p2)
    rz1 = np.array([[c1, -s1, 0.0], [s1, c1, 0.0], [0.0, 0.0, 1.0]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    rz2 = np.array([[c2, -s2, 0.0], [s2, c2, 0.0], [0.0, 0.0, 1.0]])
    return rz1 @ rx @ rz2


def cubic_stiffness(C11: float, C12: float, C44: float) -> np.ndarray:
    """Voigt 6x6 stiffness of a cubic crystal in its own axes."""
    if not (C11 > abs(C12) and C11 + 2.0 * C12 > 0 and C44 > 0):
        raise ValueError("cubic constants are not positive definite")
    C = np.zeros((6, 6))
    C[:3, :3] = C12
    C[np.arange(3), np.arange(3)] = C11
    C[np.arange(3, 6), np.arange(3, 6)] = C44
    return C


def zener_ratio(C11: float, C12: float, C44: float) -> float:
    return 2.0 * C44 / (C11 - C12)


def voigt_to_tensor(C: np.ndarray) -> np.ndarray:
    T = np.zeros((3, 3, 3, 3))
    for I, (i, j) in enumerate(_VOIGT):
        for J, (k, l) in enumerate(_VOIGT):
            v = C[I, J]
            T[i, j, k, l] = T[j, i, k, l] = T[i, j, l, k] = T[j, i, l, k] = v
    return T


def tensor_to_voigt(T: np.ndarray) -> np.ndarray:
    C = np.empty((6, 6))
    for I, (i, j) in enumerate(_VOIGT):
        for J, (k, l) in enumerate(_VOIGT):
            C[I, J] = T[i, j, k, l]
    return C


def bond_matrix(R: np.ndarray) -> np.ndarray:
    """Stress transformation matrix M with sigma'_voigt = M sigma_voigt."""
    M = np.empty((6, 6))
    for I, (i, j) in enumerate(_VOIGT):
        for J, (k, l) in enumerate(_VOIGT):
            if k == l:
                M[I, J] = R[i, k] * R[j, l]
            else:
                M[I, J] = R[i, k] * R[j, l] + R[i, l] * R[j, k]
    return M


def rotate_stiffness(C: np.ndarray, R: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Rotated Voigt stiffness C'_ijkl = R_ia R_jb R_kc R_ld C_abcd."""
    R = np.asarray(R, dtype=float)
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("rotation matrix is not proper orthonormal")
    M = bond_matrix(R)
    Cr = M @ C @ M.T
    return 0.5 * (Cr + Cr.T)


def isotropic_stiffness(E: float, nu: float) -> np.ndarray:
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return cubic_stiffness(lam + 2.0 * mu, lam, mu)


def voigt_shear_modulus(C: np.ndarray) -> float:
    """Voigt-average shear modulus of a 6x6 stiffness (rotation invariant)."""
    a = C[0, 0] + C[1, 1] + C[2, 2]
    b = C[0, 1] + C[0, 2] + C[1, 2]
    c = C[3, 3] + C[4, 4] + C[5, 5]
    return (a - b + 3.0 * c) / 15.0


def delta_corrosion_potential(euler, delta_E_max: float, normal=(0.0, 1.0, 0.0)) -> float:
    """Corrosion-potential deviation of a grain from its surface-normal direction.

    The crystal direction parallel to ``normal`` is folded into the standard
    triangle and interpolated between corner values +dE/2 at (111), 0 at
    (101) and -dE/2 at (001).
    """
    if delta_E_max < 0:
        raise ValueError("delta_E_max must be non-negative")
    d = rotation_matrix(euler).T @ np.asarray(normal, dtype=float)
    u, v, w = np.sort(np.abs(d))
    w111 = u / w
    w001 = (w - v) / w
    return float(delta_E_max * 0.5 * (w111 - w001))


def random_orientations(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform SO(3) sample via Shoemake's quaternion construction, as Bunge angles."""
    u1, u2, u3 = rng.random((3, n))
    a, b = np.sqrt(1.0 - u1), np.sqrt(u1)
    q = np.stack([a * np.sin(2 * np.pi * u2), a * np.cos(2 * np.pi * u2),
                  b * np.sin(2 * np.pi * u3), b * np.cos(2 * np.pi * u3)], axis=1)
    eul = Rotation.from_quat(q).as_euler("ZXZ")
    return np.mod(eul, 2.0 * np.pi)


@dataclass(frozen=True)
class GrainOrientation:
    euler: np.ndarray
    rotation: np.ndarray
    delta_E: float
    stiffness: np.ndarray


@dataclass(frozen=True)
class Microstructure:
    """Grain raster plus per-grain orientation data.

    ``grain_id`` has shape (ny, nx); cells outside the metal hold -1.
    """

    grain_id: np.ndarray
    euler: np.ndarray
    delta_E: np.ndarray
    stiffness: np.ndarray
    mean_grain_size: float
    seed: int

    @property
    def n_grains(self) -> int:
        return int(self.euler.shape[0])

    def orientation(self, g: int) -> GrainOrientation:
        return GrainOrientation(self.euler[g], rotation_matrix(self.euler[g]),
                                float(self.delta_E[g]), self.stiffness[g])

    def cell_delta_E(self) -> np.ndarray:
        out = np.zeros(self.grain_id.shape)
        m = self.grain_id >= 0
        out[m] = self.delta_E[self.grain_id[m]]
        return out


def poisson_disk_seeds(width: float, height: float, n_target: int, radius: float,
                       rng: np.random.Generator, max_tries: int = 30000) -> np.ndarray:
    """Dart throwing: accept uniform points farther than ``radius`` from all accepted ones."""
    pts: list[np.ndarray] = []
    tries = 0
    while len(pts) < n_target and tries < max_tries:
        tries += 1
        p = rng.random(2) * (width, height)
        if pts and np.min(np.hypot(*(np.asarray(pts) - p).T)) < radius:
            continue
        pts.append(p)
    return np.asarray(pts)


def target_grain_count(width: float, height: float, d: float) -> int:
    return max(1, int(round(width * height / (np.pi * (d / 2.0) ** 2))))


def generate_microstructure(domain_rect, mean_grain_size: float, seed: int,
                            xc=None, yc=None, mask=None, delta_E_max: float = 0.0,
                            elastic: ElasticConstants = ElasticConstants(),
                            normal=(0.0, 1.0, 0.0), shape=(64, 64)) -> Microstructure:
    """Seeded Voronoi polycrystal on a rectangular region.

    Parameters
    ----------
    domain_rect : (x0, y0, width, height)
        Region holding the polycrystal, in metres.
    xc, yc : array_like, optional
        Cell-centre coordinates of the raster; a uniform ``shape`` grid over the
        rectangle is used when omitted.
    mask : ndarray of bool, optional
        Metal cells; the rest get id -1.
    """
    x0, y0, W, H = (float(v) for v in domain_rect)
    if W <= 0 or H <= 0:
        raise ValueError("domain has zero area")
    if not 0 < mean_grain_size <= min(W, H):
        raise ValueError("mean grain size must be positive and no larger than the domain")
    rng = np.random.default_rng(seed)
    n = target_grain_count(W, H, mean_grain_size)
    seeds = poisson_disk_seeds(W, H, n, 0.7 * mean_grain_size, rng) + (x0, y0)
    if xc is None or yc is None:
        ny, nx = shape
        xc = x0 + (np.arange(nx) + 0.5) * W / nx
        yc = y0 + (np.arange(ny) + 0.5) * H / ny
    X, Y = np.meshgrid(np.asarray(xc), np.asarray(yc))
    if mask is None:
        mask = np.ones(X.shape, dtype=bool)
    _, nearest = cKDTree(seeds).query(np.column_stack([X[mask], Y[mask]]))
    used, relabel = np.unique(nearest, return_inverse=True)
    gid = -np.ones(X.shape, dtype=np.int64)
    gid[mask] = relabel
    eul = random_orientations(len(seeds), rng)[used]
    C = cubic_stiffness(elastic.C11, elastic.C12, elastic.C44)
    dE = np.array([delta_corrosion_potential(e, delta_E_max, normal) for e in eul])
    Cr = np.array([rotate_stiffness(C, rotation_matrix(e)) for e in eul])
    return Microstructure(gid, eul, dE, Cr, float(mean_grain_size), int(seed))


def equivalent_diameters(grain_id: np.ndarray, cell_area: float) -> np.ndarray:
    """Equivalent-circle diameters of all grains of a uniform raster."""
    counts = np.bincount(grain_id[grain_id >= 0].ravel())
    counts = counts[counts > 0]
    return 2.0 * np.sqrt(counts * cell_area / np.pi)


def save_microstructure(ms: Microstructure, stem) -> None:
    """Write ``<stem>_grains.txt`` (id raster) and ``<stem>_orientations.txt``."""
    np.savetxt(f"{stem}_grains.txt", ms.grain_id, fmt="%d",
               header=f"grain id raster, rows bottom-to-top; mean_grain_size={ms.mean_grain_size!r} seed={ms.seed}")
    table = np.column_stack([np.arange(ms.n_grains), ms.euler, ms.delta_E])
    np.savetxt(f"{stem}_orientations.txt", table, fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g"],
               header="id phi1 Phi phi2 delta_E")


def load_microstructure(stem, elastic: ElasticConstants = ElasticConstants()) -> Microstructure:
    with open(f"{stem}_grains.txt") as fh:
        head = fh.readline()
    meta = dict(tok.split("=") for tok in head.split(";")[1].split())
    gid = np.loadtxt(f"{stem}_grains.txt", dtype=np.int64, ndmin=2)
    tab = np.loadtxt(f"{stem}_orientations.txt", ndmin=2)
    eul = tab[:, 1:4]
    C = cubic_stiffness(elastic.C11, elastic.C12, elastic.C44)
    Cr = np.array([rotate_stiffness(C, rotation_matrix(e)) for e in eul])
    return Microstructure(gid, eul, tab[:, 4], Cr, float(meta["mean_grain_size"]), int(meta["seed"]))
