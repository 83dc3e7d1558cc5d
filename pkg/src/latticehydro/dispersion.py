"""Interaction matrices, Fourier symbols and band decompositions.

The Fourier convention is ``Vhat(theta) = sum_z V(z) exp(i z.theta)``.
Angle arrays carry the lattice dimension on the last axis; for ``d == 1``
a bare scalar or a 1-D array of angles is accepted as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionE3Error, CriticalSetError, InvalidParameterError

NEAREST_NEIGHBOR = "nearest_neighbor"


@dataclass
class InteractionMatrix:
    """Finite-support force matrix ``V(z)`` of real ``n x n`` blocks."""

    d: int
    n: int
    support: dict
    family: str = "custom"
    params: dict = field(default_factory=dict)
    symmetry_flag: bool = field(init=False)

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise InvalidParameterError("d and n must be positive")
        clean = {}
        for z, block in self.support.items():
            z = tuple(int(c) for c in np.atleast_1d(z))
            if len(z) != self.d:
                raise InvalidParameterError(f"offset {z} has wrong dimension (d={self.d})")
            block = np.asarray(block, dtype=float).reshape(self.n, self.n)
            clean[z] = clean.get(z, 0.0) + block
        self.support = clean
        self.symmetry_flag = all(
            np.array_equal(block, self.block(_reflect(z))) for z, block in clean.items()
        )

    def block(self, z) -> np.ndarray:
        z = tuple(int(c) for c in np.atleast_1d(z))
        return self.support.get(z, np.zeros((self.n, self.n)))

    @property
    def offsets(self) -> np.ndarray:
        return np.array(sorted(self.support), dtype=int).reshape(-1, self.d)

    @property
    def blocks(self) -> np.ndarray:
        return np.stack([self.support[z] for z in sorted(self.support)])

    @property
    def diameter(self) -> int:
        """Largest coordinate extent of the support (max |z_k|)."""
        if not self.support:
            return 0
        return int(np.abs(self.offsets).max())

    def transpose_violations(self, tol=0.0):
        """Offsets where ``V(-z) != V(z)^T``."""
        bad = []
        for z, block in self.support.items():
            minus = tuple(-c for c in z)
            if np.max(np.abs(self.block(minus) - block.T)) > tol:
                bad.append(z)
        return sorted(bad)


def _reflect(z):
    return (-z[0],) + tuple(z[1:])


def build_nearest_neighbor(d, gammas, masses) -> InteractionMatrix:
    gammas = [float(g) for g in np.atleast_1d(gammas)]
    masses = [float(m) for m in np.atleast_1d(masses)]
    if d < 1:
        raise InvalidParameterError("d must be >= 1")
    if len(gammas) != len(masses) or not gammas:
        raise InvalidParameterError("gammas and masses must have the same positive length")
    if any(g <= 0 for g in gammas):
        raise InvalidParameterError(f"coupling constants must be positive, got {gammas}")
    if any(m < 0 for m in masses):
        raise InvalidParameterError(f"masses must be non-negative, got {masses}")
    n = len(gammas)
    g = np.diag(gammas)
    support = {(0,) * d: np.diag([2 * d * gk + mk**2 for gk, mk in zip(gammas, masses)])}
    for j in range(d):
        for sign in (1, -1):
            e = [0] * d
            e[j] = sign
            support[tuple(e)] = -g
    return InteractionMatrix(
        d, n, support, family=NEAREST_NEIGHBOR, params={"gammas": gammas, "masses": masses}
    )


def as_theta(theta, d) -> np.ndarray:
    """Coerce angles to shape ``(..., d)``."""
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != d:
        if d != 1:
            raise InvalidParameterError(f"angle array of shape {arr.shape} does not match d={d}")
        arr = arr[..., None]
    return arr


def fourier_symbol(V: InteractionMatrix, theta) -> np.ndarray:
    """``Vhat(theta)`` with shape ``theta.shape[:-1] + (n, n)``."""
    th = as_theta(theta, V.d)
    phase = np.exp(1j * (th @ V.offsets.T))
    out = np.einsum("...z,zkl->...kl", phase, V.blocks)
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))


def symbol_gradient(V: InteractionMatrix, theta) -> np.ndarray:
    """``d Vhat / d theta_k`` with shape ``theta.shape[:-1] + (d, n, n)``."""
    th = as_theta(theta, V.d)
    z = V.offsets
    phase = 1j * np.exp(1j * (th @ z.T))
    return np.einsum("...z,zj,zkl->...jkl", phase, z, V.blocks)


@dataclass
class Band:
    omega: float
    multiplicity: int
    proj: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


@dataclass
class SpectralPoint:
    theta: np.ndarray
    Vhat: np.ndarray
    Omega: np.ndarray
    bands: list

    def band_function(self, f) -> np.ndarray:
        """``sum_sigma f(omega_sigma) Pi_sigma``."""
        return sum(f(b.omega) * b.proj for b in self.bands)


@dataclass
class BandGrid:
    """Band data for a batch of angles, padded to a common number of groups.

    Absent groups have a zero projector, ``omega == 1`` and ``mask False``.
    Arrays: ``omega (N, G)``, ``proj (N, G, n, n)``, ``grad (N, G, d)``,
    ``hess (N, G, d, d)``.
    """

    theta: np.ndarray
    omega: np.ndarray
    proj: np.ndarray
    mask: np.ndarray
    grad: np.ndarray | None
    hess: np.ndarray | None
    multiplicity: np.ndarray

    @property
    def size(self):
        return self.omega.shape[0]

    def point(self, k) -> SpectralPoint:
        bands = []
        for g in range(self.omega.shape[1]):
            if not self.mask[k, g]:
                continue
            bands.append(
                Band(
                    omega=float(self.omega[k, g]),
                    multiplicity=int(self.multiplicity[k, g]),
                    proj=self.proj[k, g],
                    grad=None if self.grad is None else self.grad[k, g],
                    hess=None if self.hess is None else self.hess[k, g],
                )
            )
        Omega = sum(b.omega * b.proj for b in bands)
        return SpectralPoint(self.theta[k], Omega @ Omega, Omega, bands)


def _eig(V, th, psd_tol):
    Vh = fourier_symbol(V, th)
    lam, U = np.linalg.eigh(Vh)
    scale = np.maximum(1.0, np.abs(lam).max(axis=-1, keepdims=True))
    if np.any(lam < -psd_tol * scale):
        k = np.argwhere(lam < -psd_tol * scale)[0][:-1]
        raise ConditionE3Error(
            f"negative eigenvalue {lam[tuple(k)].min():.3e} of the symbol at theta={th[tuple(k)]}"
        )
    return Vh, np.sqrt(np.clip(lam, 0.0, None)), U


def _group_labels(omega, gap_tol, degeneracy_tol, th):
    """Group sorted eigenvalues; error on near-but-not-exact coincidences."""
    gaps = np.diff(omega, axis=-1)
    near = (gaps > degeneracy_tol) & (gaps < gap_tol)
    if np.any(near):
        k = tuple(np.argwhere(near)[0][:-1])
        raise CriticalSetError(
            f"band gap {gaps[k].min():.3e} below tolerance {gap_tol:g} at theta={th[k]}", th[k]
        )
    new_group = np.concatenate(
        [np.zeros(omega.shape[:-1] + (1,), dtype=int), (gaps > degeneracy_tol).astype(int)], axis=-1
    )
    return np.cumsum(new_group, axis=-1)


def _group_means(omega, labels, G):
    N = omega.shape[0]
    sums = np.zeros((N, G))
    counts = np.zeros((N, G), dtype=int)
    for k in range(omega.shape[1]):
        np.add.at(sums, (np.arange(N), labels[:, k]), omega[:, k])
        np.add.at(counts, (np.arange(N), labels[:, k]), 1)
    return sums, counts


def band_grid(
    V: InteractionMatrix,
    theta,
    fd_step=1e-4,
    gap_tol=1e-8,
    degeneracy_tol=1e-12,
    psd_tol=1e-10,
    derivatives=True,
) -> BandGrid:
    th = as_theta(theta, V.d).reshape(-1, V.d)
    Vh, omega, U = _eig(V, th, psd_tol)
    labels = _group_labels(omega, gap_tol, degeneracy_tol, th)
    G = int(labels.max()) + 1
    N, n = omega.shape
    sums, counts = _group_means(omega, labels, G)
    mask = counts > 0
    om = np.where(mask, sums / np.maximum(counts, 1), 1.0)
    proj = np.zeros((N, G, n, n), dtype=complex)
    for k in range(n):
        outer = U[:, :, k, None] * np.conj(U[:, None, :, k])
        proj[np.arange(N), labels[:, k]] += outer
    grad = hess = None
    if derivatives:
        if V.family == NEAREST_NEIGHBOR:
            grad, hess = _nn_derivatives(V, th, proj, mask, gap_tol)
        else:
            grad, hess = _fd_derivatives(V, th, labels, G, fd_step, psd_tol, gap_tol)
    return BandGrid(th, om, proj, mask, grad, hess, counts)


def _nn_component_derivatives(V, th):
    """Analytic gradient and Hessian of each nearest-neighbor branch."""
    gam = np.asarray(V.params["gammas"])
    mas = np.asarray(V.params["masses"])
    s, c = np.sin(th), np.cos(th)
    w2 = 2 * gam[None, :] * (1 - c).sum(-1)[:, None] + mas[None, :] ** 2
    w = np.sqrt(w2)
    with np.errstate(divide="ignore", invalid="ignore"):
        grad = gam[None, :, None] * s[:, None, :] / w[:, :, None]
        hess = gam[None, :, None, None] * np.einsum("nj,jk->njk", c, np.eye(V.d))[:, None] / w[:, :, None, None]
        hess = hess - (gam**2)[None, :, None, None] * s[:, None, :, None] * s[:, None, None, :] / (w**3)[:, :, None, None]
    return w, grad, hess


def _nn_derivatives(V, th, proj, mask, tol):
    w, cgrad, chess = _nn_component_derivatives(V, th)
    N, G = mask.shape
    grad = np.zeros((N, G, V.d))
    hess = np.zeros((N, G, V.d, V.d))
    diag = np.real(np.einsum("ngkk->ngk", proj))
    for g in range(G):
        members = (diag[:, g, :] > 0.5) & mask[:, g : g + 1]
        for i in range(N):
            ks = np.flatnonzero(members[i])
            if ks.size == 0:
                continue
            gk, hk = cgrad[i, ks], chess[i, ks]
            if np.ptp(gk, axis=0).max() > np.sqrt(tol) or not np.all(np.isfinite(gk)):
                raise CriticalSetError(f"band crossing or zero frequency at theta={th[i]}", th[i])
            grad[i, g], hess[i, g] = gk[0], hk[0]
    return grad, hess


def _band_values(V, th, labels, G, psd_tol, gap_tol):
    """Mean eigenvalue of each reference group at shifted angles."""
    _, omega, _ = _eig(V, th, psd_tol)
    N = omega.shape[0]
    out = np.zeros((N, G))
    for g in range(G):
        sel = labels == g
        cnt = sel.sum(-1)
        vals = np.where(sel, omega, 0.0)
        spread = np.where(sel, omega, -np.inf).max(-1) - np.where(sel, omega, np.inf).min(-1)
        if np.any((cnt > 1) & (spread > gap_tol)):
            i = np.flatnonzero((cnt > 1) & (spread > gap_tol))[0]
            raise CriticalSetError(f"degenerate band splits near theta={th[i]}", th[i])
        out[:, g] = np.where(cnt > 0, vals.sum(-1) / np.maximum(cnt, 1), 0.0)
    return out


def _fd_derivatives(V, th, labels, G, h, psd_tol, gap_tol):
    d = V.d
    N = th.shape[0]
    f = lambda shift: _band_values(V, th + shift, labels, G, psd_tol, np.inf)
    f0 = f(np.zeros(d))
    grad = np.zeros((N, G, d))
    hess = np.zeros((N, G, d, d))
    eye = np.eye(d) * h
    fp = [f(eye[j]) for j in range(d)]
    fm = [f(-eye[j]) for j in range(d)]
    for j in range(d):
        grad[:, :, j] = (fp[j] - fm[j]) / (2 * h)
        hess[:, :, j, j] = (fp[j] - 2 * f0 + fm[j]) / h**2
        for k in range(j + 1, d):
            val = (f(eye[j] + eye[k]) - f(eye[j] - eye[k]) - f(-eye[j] + eye[k]) + f(-eye[j] - eye[k])) / (4 * h**2)
            hess[:, :, j, k] = hess[:, :, k, j] = val
    return grad, hess


def spectral_data(V: InteractionMatrix, theta, fd_step=1e-4, gap_tol=1e-8) -> SpectralPoint:
    th = as_theta(theta, V.d)
    if th.ndim != 1:
        raise InvalidParameterError("spectral_data takes a single angle vector; use band_grid for batches")
    return band_grid(V, th, fd_step=fd_step, gap_tol=gap_tol).point(0)


def band_derivative_tensor(V: InteractionMatrix, theta, band: int, order: int, step=1e-3):
    """Symmetric tensor of ``order``-th derivatives of one band dispersion.

    Orders 1 and 2 come from :func:`band_grid`; order 3 is a central
    difference of the Hessian with the given step.
    """
    th = as_theta(theta, V.d).reshape(V.d)
    if order == 1:
        return band_grid(V, th).grad[0, band]
    if order == 2:
        return band_grid(V, th).hess[0, band]
    if order != 3:
        raise InvalidParameterError(f"derivative order {order} not supported (1..3)")
    out = np.zeros((V.d,) * 3)
    for j in range(V.d):
        e = np.zeros(V.d)
        e[j] = step
        hp = band_grid(V, th + e, fd_step=step).hess[0, band]
        hm = band_grid(V, th - e, fd_step=step).hess[0, band]
        out[j] = (hp - hm) / (2 * step)
    # symmetrize over all index permutations
    perms = list(itertools.permutations(range(3)))
    return sum(np.transpose(out, p) for p in perms) / len(perms)


def theta_grid(d, resolution, shift=0.0) -> np.ndarray:
    """Uniform DFT grid ``2 pi k / L`` (optionally shifted), shape ``(L**d, d)``."""
    axis = 2 * np.pi * (np.arange(resolution) + shift) / resolution
    axis = np.where(axis >= np.pi, axis - 2 * np.pi, axis)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, d)


def max_group_speed(V: InteractionMatrix, resolution=256) -> float:
    """Largest ``|grad omega_sigma|`` over a shifted grid."""
    res = resolution if V.d == 1 else max(16, int(round(resolution ** (1 / V.d) * 4)))
    bg = band_grid(V, theta_grid(V.d, res, shift=0.5), gap_tol=0.0, degeneracy_tol=1e-9)
    speed = np.linalg.norm(bg.grad, axis=-1)
    speed = np.where(bg.mask & np.isfinite(speed), speed, 0.0)
    return float(speed.max())


# ---------------------------------------------------------------- conditions


@dataclass
class ConditionEntry:
    status: str
    witnesses: list = field(default_factory=list)
    margin: float = float("nan")
    note: str = ""

    @property
    def passed(self):
        return self.status in ("pass", "sampled-pass")


@dataclass
class ConditionReport:
    entries: dict
    critical_sample: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.entries[key]

    @property
    def all_passed(self):
        return all(e.passed for e in self.entries.values())

    def summary(self):
        return {k: e.status for k, e in self.entries.items()}


def check_conditions(V: InteractionMatrix, grid_resolution=64, tol=1e-10) -> ConditionReport:
    if grid_resolution < 8:
        raise InvalidParameterError("grid_resolution must be >= 8")
    entries = {}
    finite = all(np.all(np.isfinite(b)) for b in V.support.values())
    entries["E1"] = ConditionEntry(
        "pass" if finite else "fail",
        margin=float(V.diameter),
        note="finite support",
    )
    bad = V.transpose_violations(tol)
    entries["E2"] = ConditionEntry("fail" if bad else "pass", witnesses=bad)

    th = theta_grid(V.d, grid_resolution)
    lam = np.linalg.eigvalsh(fourier_symbol(V, th))
    lam_min = lam.min(-1)
    neg = np.flatnonzero(lam_min < -tol)
    entries["E3"] = ConditionEntry(
        "fail" if neg.size else "sampled-pass",
        witnesses=[th[i] for i in neg[:5]],
        margin=float(lam_min.min()),
    )
    scale = max(1.0, float(np.abs(lam).max()))
    singular = np.flatnonzero(np.abs(lam).min(-1) <= 1e-12 * scale)
    critical = [th[i] for i in singular]

    if neg.size:
        for key in ("E4", "E5", "E6"):
            entries[key] = ConditionEntry("fail", note="E3 violated")
        return ConditionReport(entries, critical)

    # bands on a half-cell shifted grid avoid the lattice-symmetric points
    ths = theta_grid(V.d, grid_resolution, shift=0.5)
    bg = band_grid(V, ths, gap_tol=0.0, degeneracy_tol=1e-9)
    ok = bg.mask & np.all(np.isfinite(bg.hess.reshape(bg.hess.shape[:2] + (-1,))), axis=-1)
    e4_fail = []
    dets = np.where(ok, np.linalg.det(np.where(ok[..., None, None], bg.hess, 0.0)), 0.0)
    for g in range(bg.omega.shape[1]):
        if not np.any(bg.mask[:, g]):
            continue
        if np.max(np.abs(dets[:, g])) <= tol:
            e4_fail.append(g)
    entries["E4"] = ConditionEntry(
        "fail" if e4_fail else "sampled-pass",
        witnesses=e4_fail,
        margin=float(np.abs(dets).max()),
    )

    e5_fail = []
    G = bg.omega.shape[1]
    for a in range(G):
        for b in range(a + 1, G):
            both = bg.mask[:, a] & bg.mask[:, b]
            if not np.any(both):
                continue
            for sgn in (1, -1):
                comb = bg.omega[both, a] + sgn * bg.omega[both, b]
                if np.ptp(comb) <= 1e-9 and abs(comb.mean()) > 1e-9:
                    e5_fail.append((a, b, sgn))
    entries["E5"] = ConditionEntry("fail" if e5_fail else "sampled-pass", witnesses=e5_fail)

    if singular.size == 0 and lam_min.min() > tol:
        entries["E6"] = ConditionEntry("pass", margin=float(1.0 / lam_min.min()), note="C0 empty")
    else:
        entries["E6"] = _e6_refinement(V, grid_resolution)
    return ConditionReport(entries, critical)


def _inverse_norm_mean(V, res):
    th = theta_grid(V.d, res, shift=0.5)
    lam = np.linalg.eigvalsh(fourier_symbol(V, th))
    lmin = lam.min(-1)
    keep = lmin > 1e-14
    return float(np.sum(1.0 / lmin[keep]) / lmin.size)


def _e6_refinement(V, res):
    """Riemann sums of ``||Vhat^{-1}||`` on two grids; growth signals divergence."""
    coarse = _inverse_norm_mean(V, res)
    fine = _inverse_norm_mean(V, 2 * res)
    ratio = fine / coarse
    status = "sampled-fail" if ratio > 1.05 else "sampled-pass"
    return ConditionEntry(status, margin=ratio, note=f"mean ||Vhat^-1||: {coarse:.4g} -> {fine:.4g}")
