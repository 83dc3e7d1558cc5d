"""Microscopic covariance of the scaled dynamics, exact and Monte Carlo.

For a linear observable ``Y(x) = sum_a W_x(a) X0(a)`` and the product
initial covariance ``s(a) q0(a-b) s(b)`` with ``s = sqrt(T(eps a))``,

    E[Y1(x) Y2(y)^T] = sum_a W1_x(a) s(a) [q0 * (s W2_y^T)](a),

where the inner sum is a periodic convolution done by FFT.  Observation
kernels ``W`` are Green rows for the covariance itself, or Green rows
composed with a Fourier multiplier for the complex field.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dispersion import InteractionMatrix, max_group_speed
from .errors import BoxTooSmallError, InvalidParameterError, InvalidQueryError, ModelViolationError
from .lattice_dynamics import _evolve_stacked, dft_theta, propagator_grid, site_coordinates
from .random_fields import BlockCov, CovarianceProfile, sample_fields

log = logging.getLogger(__name__)

ANCHORS = ("origin", "first", "midpoint")


@dataclass
class ScaledQuery:
    """Observation sites ``[r/eps] + z`` at time ``t = tau / eps**kappa``.

    ``anchor`` only records which macroscopic position a limit formula
    should be evaluated at for the pair ``(z, z')``: ``r`` itself
    (``origin``), ``eps([r/eps] + z)`` (``first``) or the midpoint.
    """

    tau: float
    kappa: float
    r: tuple
    offsets: list
    eps: float
    anchor: str = "origin"
    base: tuple = field(init=False)

    def __post_init__(self):
        if self.eps <= 0:
            raise InvalidQueryError(f"eps must be positive, got {self.eps}")
        if self.kappa < 1:
            raise InvalidQueryError(f"kappa must be >= 1, got {self.kappa}")
        if self.anchor not in ANCHORS:
            raise InvalidQueryError(f"anchor must be one of {ANCHORS}, got {self.anchor!r}")
        self.r = tuple(float(c) for c in np.atleast_1d(self.r))
        d = len(self.r)
        pairs = []
        for z, zp in self.offsets:
            z = tuple(int(c) for c in np.atleast_1d(z))
            zp = tuple(int(c) for c in np.atleast_1d(zp))
            if len(z) != d or len(zp) != d:
                raise InvalidQueryError(f"offset pair {(z, zp)} does not match d={d}")
            pairs.append((z, zp))
        self.offsets = pairs
        self.base = tuple(int(math.floor(c / self.eps)) for c in self.r)

    @property
    def d(self):
        return len(self.r)

    @property
    def t(self):
        return self.tau / self.eps**self.kappa

    @property
    def max_offset(self):
        return max((max(map(abs, z + zp)) for z, zp in self.offsets), default=0)

    def site(self, z):
        return np.array(self.base) + np.array(z)

    def anchor_position(self, z, zp):
        if self.anchor == "origin":
            return np.array(self.r)
        if self.anchor == "first":
            return self.eps * self.site(z)
        return self.eps * (self.site(z) + self.site(zp)) / 2


def required_extent(V, profile, query, speed=None):
    """Box extent from the propagation-speed rule, before rounding."""
    speed = max_group_speed(V) if speed is None else speed
    c = 1.1 * speed
    reach = c * abs(query.t) + max(map(abs, query.base), default=0) + query.max_offset
    reach += profile.correlation_length() + V.diameter
    return int(math.ceil(2 * reach))


def box_extent(V, profile, query, min_extent=64, max_extent=1 << 16):
    need = required_extent(V, profile, query)
    L = max(min_extent, 1 << max(need - 1, 1).bit_length())
    if L > max_extent:
        raise BoxTooSmallError(f"query needs a box of extent {L} > {max_extent}", required=L)
    return L


def _check_box(V, profile, query, L):
    need = required_extent(V, profile, query)
    if L < need:
        raise BoxTooSmallError(f"box extent {L} below required {need}", required=need)


class CovarianceEngine:
    """Bilinear sums against the product initial covariance on a fixed box."""

    def __init__(self, profile: CovarianceProfile, eps: float, box, support_mask=None):
        self.profile = profile
        self.box = tuple(box)
        self.d = len(self.box)
        self.axes = tuple(range(self.d))
        self.coords = site_coordinates(self.box)
        s = np.sqrt(profile.T(eps * self.coords))
        if support_mask is not None:
            s = s * support_mask
        self.s = s
        self.q0_fft = np.fft.fftn(profile.q0_table(self.box), axes=self.axes)

    def gather(self, table, x, reflect=False):
        """``table[x - a]`` (or ``table[x - a~]``) for every box site ``a``."""
        a = self.coords.copy()
        if reflect:
            a[..., 0] = -a[..., 0]
        idx = (np.asarray(x)[None] - a.reshape(-1, self.d)) % np.array(self.box)
        return table[tuple(idx.T)].reshape(self.box + table.shape[self.d :])

    def smoothed(self, W):
        """``u(a) = sum_b q0(a-b) s(b) W(b)^T`` for a kernel ``W`` over the box."""
        f = np.swapaxes(W, -1, -2) * self.s[..., None, None]
        F = np.fft.fftn(f, axes=self.axes)
        return np.fft.ifftn(np.einsum("...ij,...jk->...ik", self.q0_fft, F), axes=self.axes)

    def pair(self, W1, u2):
        W = (W1 * self.s[..., None, None]).reshape((-1,) + W1.shape[-2:])
        return np.einsum("aij,ajk->ik", W, u2.reshape((-1,) + u2.shape[-2:]))


def _kernel_table(V, box, t, symbol=None):
    """Position-space kernel ``F^-1[M(theta) Ghat_t(theta)]`` on the box."""
    th = dft_theta(box)
    Gh = propagator_grid(V, th, t)
    if symbol is not None:
        Gh = np.einsum("...ij,...jk->...ik", symbol(th), Gh)
    K = np.fft.fftn(Gh, axes=tuple(range(len(box)))) / np.prod(box)
    return K


def _real_if_small(M, tol=1e-10):
    if np.abs(M.imag).max() <= tol * max(1.0, np.abs(M).max()):
        return M.real
    return M


def propagate_covariance(V: InteractionMatrix, profile: CovarianceProfile, query: ScaledQuery, box=None):
    """Exact ``Q_{eps,t}([r/eps]+z, [r/eps]+z')`` for every offset pair."""
    L = box_extent(V, profile, query) if box is None else int(box)
    _check_box(V, profile, query, L)
    boxs = (L,) * V.d
    G = _kernel_table(V, boxs, query.t).real
    eng = CovarianceEngine(profile, query.eps, boxs)
    rows, cols = {}, {}
    out = {}
    for z, zp in query.offsets:
        if z not in rows:
            rows[z] = eng.gather(G, query.site(z))
        if zp not in cols:
            cols[zp] = eng.smoothed(eng.gather(G, query.site(zp)))
        out[(z, zp)] = BlockCov(_real_if_small(eng.pair(rows[z], cols[zp])))
    return out


def observable_covariance(V, profile, eps, t, box, sym1, sym2, pairs, conj1=False):
    """``E[conj?(Y1(x)) Y2(y)^T]`` for ``Y_k = F^-1[sym_k Ghat_t] * X0`` at site pairs."""
    boxs = (int(box),) * V.d
    K1 = _kernel_table(V, boxs, t, sym1)
    K2 = K1 if sym2 is sym1 else _kernel_table(V, boxs, t, sym2)
    if conj1:
        K1 = np.conj(K1)
    eng = CovarianceEngine(profile, eps, boxs)
    rows, cols, out = {}, {}, {}
    for x, y in pairs:
        x, y = tuple(x), tuple(y)
        if x not in rows:
            rows[x] = eng.gather(K1, x)
        if y not in cols:
            cols[y] = eng.smoothed(eng.gather(K2, y))
        out[(x, y)] = eng.pair(rows[x], cols[y])
    return out


def halfspace_covariance(V: InteractionMatrix, profile: CovarianceProfile, query: ScaledQuery, box=None):
    """Covariance of the zero-boundary half-space solution through image kernels.

    The initial covariance is the product one restricted to ``x1, y1 > 0``.
    """
    if not V.symmetry_flag:
        raise ModelViolationError("half-space dynamics needs V(-z1, z') = V(z1, z')")
    if query.r[0] < 0:
        raise InvalidQueryError(f"half-space query needs r1 >= 0, got {query.r[0]}")
    for z, zp in query.offsets:
        if query.site(z)[0] < 0 or query.site(zp)[0] < 0:
            raise InvalidQueryError(f"offset pair {(z, zp)} leaves the half-space")
    L = box_extent(V, profile, query) if box is None else int(box)
    _check_box(V, profile, query, L)
    boxs = (L,) * V.d
    G = _kernel_table(V, boxs, query.t).real
    eng = CovarianceEngine(profile, query.eps, boxs)
    inside = (eng.coords[..., 0] > 0).astype(float)
    eng.s = eng.s * inside

    def image_row(x):
        if x[0] == 0:
            # boundary sites carry no field; avoids roundoff between mirrored rows
            return np.zeros(boxs + G.shape[V.d :])
        return eng.gather(G, x) - eng.gather(G, x, reflect=True)

    rows, cols, out = {}, {}, {}
    for z, zp in query.offsets:
        if z not in rows:
            rows[z] = image_row(query.site(z))
        if zp not in cols:
            cols[zp] = eng.smoothed(image_row(query.site(zp)))
        out[(z, zp)] = BlockCov(_real_if_small(eng.pair(rows[z], cols[zp])))
    return out


# ------------------------------------------------------------- Monte Carlo


def _batches(nsamples, batch):
    return [list(range(i, min(i + batch, nsamples))) for i in range(0, nsamples, batch)]


def _batch_moments(V, profile, query, box, seed, idx, sites):
    X0 = sample_fields(profile, query.eps, (box,) * V.d, seed, idx)
    Xt = _evolve_stacked(V, X0, query.t, V.d)
    vals = {z: Xt[(slice(None),) + tuple(np.asarray(z) % box)] for z in sites}
    s1, s2 = {}, {}
    for z, zp in query.offsets:
        prod = vals[tuple(query.site(z))][:, :, None] * vals[tuple(query.site(zp))][:, None, :]
        s1[(z, zp)] = prod.sum(0)
        s2[(z, zp)] = (prod**2).sum(0)
    return s1, s2


def empirical_covariance(
    V: InteractionMatrix,
    profile: CovarianceProfile,
    query: ScaledQuery,
    nsamples: int,
    seed: int,
    box=None,
    batch=250,
    jobs=1,
):
    """Sample-mean estimate and standard error for every offset pair.

    Batches are reduced in index order, so the result does not depend on
    ``jobs``.
    """
    if nsamples < 2:
        raise InvalidParameterError("nsamples must be at least 2")
    L = box_extent(V, profile, query) if box is None else int(box)
    _check_box(V, profile, query, L)
    sites = {tuple(query.site(z)) for p in query.offsets for z in p}
    work = _batches(nsamples, batch)
    run = lambda idx: _batch_moments(V, profile, query, L, seed, idx, sites)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, work))
    else:
        parts = [run(idx) for idx in work]
    out = {}
    for key in query.offsets:
        s1 = sum(p[0][key] for p in parts)
        s2 = sum(p[1][key] for p in parts)
        mean = s1 / nsamples
        var = np.clip(s2 / nsamples - mean**2, 0, None) * nsamples / (nsamples - 1)
        out[key] = (BlockCov(mean), BlockCov(np.sqrt(var / nsamples)))
    return out


__all__ = [
    "ScaledQuery",
    "BlockCov",
    "CovarianceEngine",
    "box_extent",
    "required_extent",
    "propagate_covariance",
    "observable_covariance",
    "empirical_covariance",
    "halfspace_covariance",
]
