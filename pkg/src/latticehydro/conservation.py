"""Energy density, energy current and the locally conserved pair (E, A).

Limit quantities are theta-integrals of the Euler limit symbol with the
midpoint rule on a shifted periodic grid.  Microscopic counterparts are
built from the exactly propagated covariance at the sites they need.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .covariance_flow import ScaledQuery, propagate_covariance
from .dispersion import InteractionMatrix, as_theta, band_grid, fourier_symbol
from .errors import GridTooSmallError, InvalidParameterError, UnsupportedProfileError
from .hydro_limits import limit_theta_grid, sandwich
from .random_fields import CovarianceProfile

log = logging.getLogger(__name__)


# ------------------------------------------------------------ test functions


@dataclass
class TestFunction:
    """Named test function ``phi`` on ``R^d`` with gradient and support radius."""

    __test__ = False

    family: str
    params: dict
    d: int

    def __post_init__(self):
        if self.family not in TEST_FAMILIES:
            raise UnsupportedProfileError(f"unknown test function family {self.family!r}")

    @property
    def radius(self):
        if self.family == "gaussian-bump":
            return 7.0 * np.sqrt(self.params.get("w", 1.0))
        return float(self.params.get("R", 1.0))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return TEST_FAMILIES[self.family][0](r, **self.params)

    def grad(self, r):
        r = np.asarray(r, dtype=float)
        return TEST_FAMILIES[self.family][1](r, **self.params)


def _gauss(r, w=1.0):
    return np.exp(-np.sum(r**2, -1) / w)


def _gauss_grad(r, w=1.0):
    return (-2 * r / w) * _gauss(r, w)[..., None]


def _compact(r, R=1.0):
    s = np.sum(r**2, -1) / R**2
    inside = s < 1
    safe = np.where(inside, s, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe)), 0.0)


def _compact_grad(r, R=1.0):
    s = np.sum(r**2, -1) / R**2
    inside = s < 1
    safe = np.where(inside, s, 0.0)
    g = np.where(inside, -_compact(r, R) / (1.0 - safe) ** 2 * 2 / R**2, 0.0)
    return g[..., None] * r


TEST_FAMILIES = {"gaussian-bump": (_gauss, _gauss_grad), "compact-bump": (_compact, _compact_grad)}


class _Component:
    """Scalar test function ``d_k phi``."""

    def __init__(self, phi, k):
        self.phi, self.k = phi, k
        self.radius = phi.radius

    def __call__(self, r):
        return self.phi.grad(r)[..., self.k]


# ------------------------------------------------------------- limit fields


def _bands_on(V, theta):
    th = as_theta(theta, V.d).reshape(-1, V.d)
    return band_grid(V, th)


def _euler_symbols(V, profile, bg, tau, rs):
    """Euler limit symbols for many positions on one band grid, ``(R, N, 2n, 2n)``."""
    q0h = profile.q0_hat(bg.theta)
    rs = np.asarray(rs, dtype=float).reshape(-1, V.d)
    out = np.empty((len(rs), len(bg.theta), 2 * V.n, 2 * V.n), dtype=complex)
    for i, r in enumerate(rs):
        Tp = profile.T(r + tau * bg.grad)
        Tm = profile.T(r - tau * bg.grad)
        out[i], _ = sandwich(bg, Tp, Tm, q0h)
    return out


def _theta_panel(V, resolution):
    return limit_theta_grid(V.d, resolution)


def _excluded(bg):
    return float(np.mean(~bg.mask.any(axis=1)))


def energy_density_limit(V: InteractionMatrix, profile: CovarianceProfile, tau, r, resolution=256, both=False):
    """``e(tau, r) = (2 pi)^-d tr int qhat11 dtheta``.

    With ``both`` also returns the two-term form
    ``(2 pi)^-d / 2 tr int (qhat11 + qhat00 Vhat*) dtheta``.
    """
    th = _theta_panel(V, resolution)
    bg = _bands_on(V, th)
    q = _euler_symbols(V, profile, bg, tau, [np.atleast_1d(r)])[0]
    n = V.n
    e = float(np.real(np.trace(q[:, n:, n:], axis1=-2, axis2=-1).mean()))
    if not both:
        return e
    Vh = fourier_symbol(V, th)
    two = 0.5 * (q[:, n:, n:] + q[:, :n, :n] @ np.conj(np.swapaxes(Vh, -1, -2)))
    return e, float(np.real(np.trace(two, axis1=-2, axis2=-1).mean()))


def symbol_derivative(V: InteractionMatrix, theta):
    """``d_k Vhat(theta) = sum_z i z_k V(z) exp(i z.theta)``, shape ``(..., d, n, n)``."""
    th = as_theta(theta, V.d)
    out = np.zeros(th.shape[:-1] + (V.d, V.n, V.n), dtype=complex)
    for z, block in V.support.items():
        z = np.asarray(z, dtype=float)
        ph = np.exp(1j * th @ z)
        out += (1j * z)[:, None, None] * ph[..., None, None, None] * np.asarray(block)
    return out


def energy_current_limit(V: InteractionMatrix, profile: CovarianceProfile, tau, r, resolution=256):
    """``j_k(tau, r) = -(i/2)(2 pi)^-d tr int qhat10 d_k Vhat dtheta``."""
    th = _theta_panel(V, resolution)
    bg = _bands_on(V, th)
    q = _euler_symbols(V, profile, bg, tau, [np.atleast_1d(r)])[0]
    n = V.n
    dV = symbol_derivative(V, th)
    integrand = np.einsum("tij,tkji->tk", q[:, n:, :n], dV)
    return np.real(-0.5j * integrand.mean(axis=0))


def closed_form_energy(V, profile, tau, r, resolution=256):
    """Local-equilibrium closed forms ``(e, j)`` through ``T_+`` and ``T_-``."""
    th = _theta_panel(V, resolution)
    bg = _bands_on(V, th)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    Tp = 0.5 * (profile.T(r + tau * bg.grad) + profile.T(r - tau * bg.grad))
    Tm = 0.5 * (profile.T(r + tau * bg.grad) - profile.T(r - tau * bg.grad))
    tr = np.where(bg.mask, np.real(np.trace(bg.proj, axis1=-2, axis2=-1)), 0.0)
    e = float((Tp * tr).sum(1).mean())
    j = -((Tm * tr)[..., None] * bg.grad).sum(1).mean(0)
    return e, j


@dataclass
class ConservedField:
    """``e`` and ``j`` on a ``(tau, r)`` grid."""

    tau: np.ndarray
    r_axes: list
    e: np.ndarray
    j: np.ndarray
    excluded_measure: float = 0.0


def conserved_field(V, profile, taus, r_axes, resolution=256):
    th = _theta_panel(V, resolution)
    bg = _bands_on(V, th)
    dV = symbol_derivative(V, th)
    n = V.n
    taus = np.asarray(taus, dtype=float)
    mesh = np.stack(np.meshgrid(*[np.asarray(a, float) for a in r_axes], indexing="ij"), axis=-1)
    rshape = mesh.shape[:-1]
    e = np.empty((len(taus),) + rshape)
    j = np.empty((len(taus),) + rshape + (V.d,))
    flat = mesh.reshape(-1, V.d)
    for it, tau in enumerate(taus):
        q = _euler_symbols(V, profile, bg, tau, flat)
        e[it] = np.real(np.trace(q[..., n:, n:], axis1=-2, axis2=-1).mean(-1)).reshape(rshape)
        cur = np.einsum("atij,tkji->atk", q[..., n:, :n], dV).mean(1)
        j[it] = np.real(-0.5j * cur).reshape(rshape + (V.d,))
    return ConservedField(taus, list(r_axes), e, j, _excluded(bg))


def continuity_residual(V: InteractionMatrix, profile: CovarianceProfile, taus, r_axes, resolution=256):
    """Largest interior value of ``d_tau e + div_r j`` by central differences."""
    taus = np.asarray(taus, dtype=float)
    if len(taus) < 3 or any(len(a) < 3 for a in r_axes):
        raise GridTooSmallError("continuity residual needs at least 3 points on every axis")
    f = conserved_field(V, profile, taus, r_axes, resolution)
    ht = taus[1] - taus[0]
    res = (f.e[2:] - f.e[:-2])[(slice(None),) + (slice(1, -1),) * V.d] / (2 * ht)
    for k in range(V.d):
        h = r_axes[k][1] - r_axes[k][0]
        jk = f.j[1:-1, ..., k]
        sl_p = [slice(None)] + [slice(1, -1)] * V.d
        sl_m = list(sl_p)
        sl_p[1 + k] = slice(2, None)
        sl_m[1 + k] = slice(None, -2)
        res = res + (jk[tuple(sl_p)] - jk[tuple(sl_m)]) / (2 * h)
    return float(np.abs(res).max())


# ----------------------------------------------------- conserved quantities


def _r_quadrature(phi, d, npts):
    R = phi.radius
    axis = np.linspace(-R, R, npts)
    h = axis[1] - axis[0]
    w1 = np.full(npts, h)
    w1[[0, -1]] = h / 2
    mesh = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    weights = np.prod(np.stack(np.meshgrid(*([w1] * d), indexing="ij"), axis=-1).reshape(-1, d), axis=-1)
    return mesh, weights


def integrated_symbols(V, profile, phi, tau, theta, npts=401):
    """``(int phi qhat11 dr, int phi qhat01 dr)`` on the angle batch."""
    th = as_theta(theta, V.d).reshape(-1, V.d)
    bg = _bands_on(V, th)
    rs, w = _r_quadrature(phi, V.d, npts)
    wphi = w * phi(rs)
    keep = np.abs(wphi) > 0
    q = _euler_symbols(V, profile, bg, tau, rs[keep])
    n = V.n
    S = np.tensordot(wphi[keep], q, axes=(0, 0))
    return S[:, n:, n:], S[:, :n, n:]


@dataclass
class ConservedQuantities:
    theta: np.ndarray
    E_hat: np.ndarray
    A_hat: np.ndarray
    h: np.ndarray | None = None
    E_limit: np.ndarray | None = None
    A_limit: np.ndarray | None = None
    X_micro: np.ndarray | None = None
    Y_micro: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def difference(self):
        if self.X_micro is None:
            return None
        return float(max(np.abs(self.X_micro - self.E_limit).max(), np.abs(self.Y_micro - self.A_limit).max()))


def conserved_quantities(
    V: InteractionMatrix,
    profile: CovarianceProfile,
    phi: TestFunction,
    tau,
    theta,
    eps=None,
    hs=((0,), (1,)),
    npts=401,
    resolution=512,
):
    """``Ehat(phi; tau, theta)``, ``Ahat(phi; tau, theta)`` and, given ``eps``,
    the expectations of ``X_h`` and ``Y_h`` against their limits at offsets ``h``.
    """
    if phi.d != V.d:
        raise InvalidParameterError(f"test function dimension {phi.d} != {V.d}")
    E_hat, A_hat = integrated_symbols(V, profile, phi, tau, theta, npts)
    out = ConservedQuantities(as_theta(theta, V.d).reshape(-1, V.d), E_hat, A_hat)
    if eps is None:
        return out
    hs = np.asarray(hs, dtype=int).reshape(-1, V.d)
    th = limit_theta_grid(V.d, resolution)
    Eg, Ag = integrated_symbols(V, profile, phi, tau, th, npts)
    phase = np.exp(-1j * hs @ th.T) / len(th)
    out.h = hs
    out.E_limit = np.tensordot(phase, Eg, axes=(1, 0))
    out.A_limit = np.tensordot(phase, Ag, axes=(1, 0))
    out.X_micro, out.Y_micro = microscopic_conserved(V, profile, phi, tau, eps, hs)
    return out


def microscopic_conserved(V, profile, phi, tau, eps, hs):
    """``E[X_h]`` and ``E[Y_h]`` at time ``tau/eps`` for each offset ``h``."""
    n = V.n
    R = phi.radius
    span = int(np.ceil(R / eps))
    axis = np.arange(-span, span + 1)
    sites = np.stack(np.meshgrid(*([axis] * V.d), indexing="ij"), axis=-1).reshape(-1, V.d)
    weight = phi(eps * sites)
    sites = sites[np.abs(weight) > 0]
    weight = weight[np.abs(weight) > 0]
    supp = [tuple(z) for z in V.support]
    pairs = set()
    for z in sites:
        for h in hs:
            pairs.add((tuple(z + h), tuple(z)))
            for s in supp:
                pairs.add((tuple(z + h), tuple(z - np.asarray(s))))
    query = ScaledQuery(tau, 1, np.zeros(V.d), sorted(pairs), eps)
    Q = propagate_covariance(V, profile, query)
    X = np.zeros((len(hs), n, n), dtype=complex)
    Y = np.zeros((len(hs), n, n), dtype=complex)
    for ih, h in enumerate(hs):
        for z, wz in zip(sites, weight):
            zh = tuple(z + h)
            q = Q[(zh, tuple(z))].data
            pot = sum(Q[(zh, tuple(z - np.asarray(s)))].data[:n, :n] @ np.asarray(V.support[s]).T for s in supp)
            X[ih] += wz * 0.5 * (q[n:, n:] + pot)
            Y[ih] += wz * 0.5 * (q[:n, n:] - q[n:, :n])
    scale = eps**V.d
    return X * scale, Y * scale


def conserved_identities(V, profile, phi, tau, theta, dtau=1e-3, npts=401):
    """Residuals of the two coupled time-derivative identities, per band.

    ``d_tau Ehat(phi) = i omega grad(omega).Ahat(grad phi)`` and
    ``d_tau Ahat(phi) = -i omega^-1 grad(omega).Ehat(grad phi)``, with the
    ``tau`` derivative taken by central differences of step ``dtau``.
    """
    th = as_theta(theta, V.d).reshape(-1, V.d)
    bg = _bands_on(V, th)
    Ep, Ap = integrated_symbols(V, profile, phi, tau + dtau, th, npts)
    Em, Am = integrated_symbols(V, profile, phi, tau - dtau, th, npts)
    dE = (Ep - Em) / (2 * dtau)
    dA = (Ap - Am) / (2 * dtau)
    gE = [integrated_symbols(V, profile, _Component(phi, k), tau, th, npts) for k in range(V.d)]
    res_E, res_A = 0.0, 0.0
    for g in range(bg.proj.shape[1]):
        P = bg.proj[:, g]
        m = bg.mask[:, g]
        w = np.where(m, bg.omega[:, g], 1.0)
        rhsE = sum(1j * w[:, None, None] * bg.grad[:, g, k, None, None] * (P @ gE[k][1] @ P) for k in range(V.d))
        rhsA = sum(-1j / w[:, None, None] * bg.grad[:, g, k, None, None] * (P @ gE[k][0] @ P) for k in range(V.d))
        lhsE, lhsA = P @ dE @ P, P @ dA @ P
        res_E = max(res_E, float(np.abs((lhsE - rhsE)[m]).max(initial=0.0)))
        res_A = max(res_A, float(np.abs((lhsA - rhsA)[m]).max(initial=0.0)))
    return res_E, res_A


# --------------------------------------------------------- microscopic energy


def microscopic_energy(V: InteractionMatrix, profile: CovarianceProfile, tau, r, eps, x=None, box=None):
    """``E[energy(x + [r/eps], tau/eps)]`` from the propagated covariance."""
    n = V.n
    x = tuple(np.zeros(V.d, dtype=int)) if x is None else tuple(int(c) for c in np.atleast_1d(x))
    supp = list(V.support)
    pairs = [(x, x)] + [(x, tuple(np.asarray(x) - np.asarray(s))) for s in supp]
    query = ScaledQuery(tau, 1, np.atleast_1d(r), pairs, eps)
    Q = propagate_covariance(V, profile, query, box=box)
    val = Q[(x, x)].data[n:, n:]
    for s, p in zip(supp, pairs[1:]):
        val = val + Q[p].data[:n, :n] @ np.asarray(V.support[s]).T
    return float(0.5 * np.real(np.trace(val)))


def microscopic_current(V: InteractionMatrix, profile: CovarianceProfile, tau, r, eps, k=0, box=None):
    """Expected energy current through the plane between ``[r/eps]`` and ``[r/eps] + e_k``.

    Finite-support interactions only; the double series then terminates.
    """
    n = V.n
    base = np.zeros(V.d, dtype=int)
    terms = []
    for s, block in V.support.items():
        s = np.asarray(s)
        # a = base + m e_k, b = a - s
        for m in range(-abs(s[k]) - 1, abs(s[k]) + 2):
            a = base.copy()
            a[k] += m
            b = a - s
            if a[k] <= 0 and b[k] >= 1:
                terms.append((tuple(a), tuple(b), block, 1.0))
            elif a[k] >= 1 and b[k] <= 0:
                terms.append((tuple(a), tuple(b), block, -1.0))
    if not terms:
        return 0.0
    query = ScaledQuery(tau, 1, np.atleast_1d(r), [(a, b) for a, b, _, _ in terms], eps)
    Q = propagate_covariance(V, profile, query, box=box)
    total = 0.0
    for a, b, block, sign in terms:
        total += sign * np.real(np.trace(Q[(a, b)].data[n:, :n] @ np.asarray(block).T))
    return float(0.5 * total)


__all__ = [
    "TestFunction",
    "TEST_FAMILIES",
    "ConservedField",
    "ConservedQuantities",
    "energy_density_limit",
    "energy_current_limit",
    "closed_form_energy",
    "symbol_derivative",
    "conserved_field",
    "continuity_residual",
    "integrated_symbols",
    "conserved_quantities",
    "microscopic_conserved",
    "conserved_identities",
    "microscopic_energy",
    "microscopic_current",
]
