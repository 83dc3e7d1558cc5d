"""Closed-form limit covariances and their transport equations.

All symbols are evaluated on batches of angles.  For band ``sigma`` the
block rotation is ``C = [[0, 1/omega], [-omega, 0]]`` (tensored with the
identity on ``C^n``) and a limit symbol has the sandwich form

    qhat = 1/4 sum_sigma Pi [ sum_pm (I +- iC) R_pm (I -+ iC*) ] Pi

where ``R_pm`` is the profile evaluated at the transported position (Euler),
convolved with an oscillatory kernel (Navier-Stokes and higher orders), or
cut by the reflection indicators (half-space).  For the product profile
``R0(r, theta) = T(r) q0_hat(theta)`` every ``R_pm`` is a complex scalar
amplitude times ``q0_hat``.

The kernel convolutions are done in Fourier variables ``s`` dual to ``r``:

    A_pm(rho) = F^-1[ T~(s) exp(-+ i Phi(s)) ](rho),  rho = r +- grad(omega) tau / eps**(k-1)

with ``F^-1 g (rho) = (2 pi)^-d int exp(-i s.rho) g(s) ds``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .dispersion import BandGrid, InteractionMatrix, SpectralPoint, as_theta, band_grid
from .errors import DegenerateHessianError, GridTooSmallError, InvalidParameterError, InvalidQueryError, ModelViolationError
from .random_fields import BlockCov, CovarianceProfile

log = logging.getLogger(__name__)

DEFAULT_ETAS = (1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4)


@dataclass
class LimitField:
    """Limit symbols on a ``(tau, r)`` grid at one angle.

    ``values`` has shape ``(len(tau),) + r_shape + (2n, 2n)``; ``bands`` holds
    the per-band parts ``Pi q Pi`` with a band axis inserted before the blocks.
    """

    values: np.ndarray
    bands: np.ndarray
    tau: np.ndarray
    r_axes: list
    theta: np.ndarray
    kind: str
    omega: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    meta: dict = field(default_factory=dict)


# ------------------------------------------------------------ band algebra


def c_matrix(omega, n):
    """``C`` for each band value, shape ``omega.shape + (2n, 2n)``."""
    omega = np.asarray(omega, dtype=float)
    eye = np.eye(n)
    out = np.zeros(omega.shape + (2 * n, 2 * n))
    out[..., :n, n:] = eye / omega[..., None, None]
    out[..., n:, :n] = -eye * omega[..., None, None]
    return out


def block_projector(proj):
    """``diag(Pi, Pi)`` acting on ``2n`` vectors."""
    n = proj.shape[-1]
    out = np.zeros(proj.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    out[..., :n, :n] = proj
    out[..., n:, n:] = proj
    return out


def _dag(M):
    return np.conj(np.swapaxes(M, -1, -2))


def sandwich(bg: BandGrid, amp_plus, amp_minus, q0h):
    """Limit symbol and band parts from scalar amplitudes ``(N, G)``.

    ``q0h`` has shape ``(N, 2n, 2n)``.  Returns ``(q, f)`` with ``q`` of shape
    ``(N, 2n, 2n)`` and ``f`` of shape ``(N, G, 2n, 2n)``.
    """
    n = bg.proj.shape[-1]
    C = c_matrix(bg.omega, n)
    eye = np.eye(2 * n)
    Pp = eye + 1j * C
    Pm = eye - 1j * C
    R = q0h[:, None]
    term = amp_plus[..., None, None] * (Pp @ R @ _dag(Pp)) + amp_minus[..., None, None] * (Pm @ R @ _dag(Pm))
    P = block_projector(bg.proj)
    f = 0.25 * P @ term @ P
    f = np.where(bg.mask[..., None, None], f, 0.0)
    return f.sum(axis=1), f


def m_split(bg: BandGrid, Rp, Rm):
    """``M_+ = (R_+ + C R_+ C*)/2`` and ``M_- = (C R_- - R_- C*)/2`` per band."""
    n = bg.proj.shape[-1]
    C = c_matrix(bg.omega, n)
    Mp = 0.5 * (Rp + C @ Rp @ _dag(C))
    Mm = 0.5 * (C @ Rm - Rm @ _dag(C))
    return Mp, Mm


def _bands(V, theta, gap_tol=1e-8):
    th = as_theta(theta, V.d)
    flat = th.reshape(-1, V.d)
    return band_grid(V, flat, gap_tol=gap_tol), th.shape[:-1]


def _wrap(q, shape):
    return BlockCov(q.reshape(shape + q.shape[-2:]))


def _shifted(bg, r, tau, sign):
    return np.asarray(r, dtype=float) + sign * bg.grad * tau


# ------------------------------------------------------------------ Euler


def euler_amplitudes(profile, bg, tau, r):
    Tp = profile.T(_shifted(bg, r, tau, +1))
    Tm = profile.T(_shifted(bg, r, tau, -1))
    return Tp, Tm


def euler_limit(V: InteractionMatrix, profile: CovarianceProfile, tau, r, theta, parts=False):
    """Euler limit symbol ``qhat_{tau,r}(theta)`` for a batch of angles."""
    bg, shape = _bands(V, theta)
    q0h = profile.q0_hat(bg.theta)
    Tp, Tm = euler_amplitudes(profile, bg, tau, np.atleast_1d(r))
    q, f = sandwich(bg, Tp, Tm, q0h)
    if not parts:
        return _wrap(q, shape)
    Rp = 0.5 * (Tp + Tm)[..., None, None] * q0h[:, None]
    Rm = 0.5 * (Tp - Tm)[..., None, None] * q0h[:, None]
    Mp, Mm = m_split(bg, Rp, Rm)
    return _wrap(q, shape), {"f": f, "M_plus": Mp, "M_minus": Mm, "bands": bg}


# ------------------------------------------------------------ N-S kernel


def _signature(M):
    lam = np.linalg.eigvalsh(M)
    return int(np.sum(lam > 0) - np.sum(lam < 0))


def ns_kernel(tau, hess, x, sign_branch):
    """Closed form of ``K^{+-}(tau, x) = F^-1[exp(-+ i (tau/2) y.Hy)](x)``.

    ``sign_branch`` is ``+1`` or ``-1`` (or ``'+'``/``'-'``).
    """
    sgn = _branch(sign_branch)
    H = np.atleast_2d(np.asarray(hess, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = H.shape[0]
    if tau == 0:
        raise InvalidParameterError("tau must be nonzero")
    det = np.linalg.det(H)
    if abs(det) <= 1e-14 * max(1.0, np.abs(H).max()) ** d:
        raise DegenerateHessianError(f"Hessian is singular (det={det:.3e})")
    tH = tau * H
    s = _signature(tH)
    quad = x @ np.linalg.solve(tH, x)
    amp = (2 * np.pi * abs(tau)) ** (-d / 2) / np.sqrt(abs(det))
    return complex(amp * np.exp(-1j * sgn * np.pi * s / 4) * np.exp(1j * sgn * quad / 2))


def _branch(sign_branch):
    if sign_branch in ("+", 1, +1):
        return 1
    if sign_branch in ("-", -1):
        return -1
    raise InvalidParameterError(f"sign branch must be + or -, got {sign_branch!r}")


def _damped_1d(x, c, eta, pts_per_wave=30):
    """``(2 pi)^-1 int exp(-i y x - i c y^2 - eta y^2) dy`` by the trapezoid rule."""
    Y = np.sqrt(40.0 / eta)
    rate = abs(x) + 2 * abs(c) * Y
    h = min(2 * np.pi / max(rate, 1.0) / pts_per_wave, 0.05)
    y = np.arange(0.0, Y + h, h)
    f = np.exp(-(1j * c + eta) * y**2) * np.cos(x * y)
    return 2 * np.trapezoid(f, y) / (2 * np.pi)


def _neville_zero(etas, vals):
    P = list(vals)
    E = list(etas)
    for m in range(1, len(E)):
        P = [(E[i + m] * P[i] - E[i] * P[i + 1]) / (E[i + m] - E[i]) for i in range(len(P) - 1)]
    return P[0]


def ns_kernel_quadrature(tau, hess, x, sign_branch, etas=DEFAULT_ETAS):
    """Independent evaluation of the kernel: Gaussian-damped quadrature, ``eta -> 0``.

    The quadratic form is diagonalised and each principal direction is
    integrated numerically; the damped values are extrapolated to zero
    damping by polynomial (Neville) extrapolation in ``eta``.
    """
    sgn = _branch(sign_branch)
    H = np.atleast_2d(np.asarray(hess, dtype=float))
    lam, Q = np.linalg.eigh(H)
    if np.any(np.abs(lam) <= 1e-14):
        raise DegenerateHessianError("Hessian is singular")
    xp = Q.T @ np.atleast_1d(np.asarray(x, dtype=float))
    vals = []
    for eta in etas:
        v = 1.0 + 0j
        for lj, xj in zip(lam, xp):
            v *= _damped_1d(xj, sgn * tau * lj / 2, eta)
        vals.append(v)
    return complex(_neville_zero(etas, vals))


# ------------------------------------------------------- kernel amplitudes


def _gaussian_phase_amplitude(profile, rho, B):
    """``F^-1[T~ exp(-s.Bs)](rho)`` for complex symmetric ``B`` (Re B >= 0)."""
    T = profile.T
    fn = getattr(T, "gaussian_phase_transform", None)
    if fn is not None:
        return fn(rho, B)
    name = getattr(T, "name", None)
    d = rho.shape[-1]
    if name == "constant":
        return np.full(rho.shape[:-1], T.const, dtype=complex)
    if name == "gaussian-bump":
        Bt = B + (T.w / 4) * np.eye(d)
        lam = np.linalg.eigvals(Bt)
        sqrt_det = np.prod(np.sqrt(lam), axis=-1)
        quad = np.einsum("...i,...i->...", rho, np.linalg.solve(Bt, rho[..., None])[..., 0])
        smooth = T.a * (np.pi * T.w) ** (d / 2) * (2 * np.pi) ** (-d) * np.pi ** (d / 2)
        return T.const + smooth / sqrt_det * np.exp(-quad / 4)
    from .errors import UnsupportedProfileError

    raise UnsupportedProfileError(f"no closed-form kernel convolution for profile {T!r}")


def ns_amplitudes(profile, bg, tau, r, eps):
    """``A_+`` and ``A_-`` per angle and band, shape ``(N, G)``."""
    H = bg.hess
    if np.any(np.abs(np.linalg.det(H))[bg.mask] <= 1e-14):
        raise DegenerateHessianError("Hessian of a band vanishes on the requested angles")
    out = []
    for sgn in (+1, -1):
        rho = _shifted(bg, r, tau / eps, sgn)
        B = sgn * 1j * (tau / 2) * H
        out.append(_gaussian_phase_amplitude(profile, rho, B))
    return out


def ns_correction(V, profile, tau, r, theta, eps):
    """Second-order symbol ``qhat^eps_{tau,r}(theta)``."""
    if eps <= 0:
        raise InvalidParameterError("eps must be positive")
    bg, shape = _bands(V, theta)
    Ap, Am = ns_amplitudes(profile, bg, tau, np.atleast_1d(r), eps)
    q, _ = sandwich(bg, Ap, Am, profile.q0_hat(bg.theta))
    return _wrap(q, shape)


def kernel_free(V, profile, tau, r, theta, eps, k=2):
    """Variant with the kernels dropped: ``R0(r +- grad(omega) tau / eps**(k-1))``."""
    return euler_limit(V, profile, tau / eps ** (k - 1), r, theta)


# ---------------------------------------------------------- higher orders


def derivative_tensors(V, theta, k, step=1e-3):
    """Band derivative tensors of orders ``2..k`` on a batch of angles.

    Returns a list ``[D2, D3, ...]`` with ``Dp`` of shape ``(N, G) + (d,)*p``;
    order 3 is a central difference of the Hessian.
    """
    bg = band_grid(V, theta)
    tensors = [bg.hess]
    if k >= 3:
        d = V.d
        D3 = np.zeros(bg.hess.shape[:2] + (d, d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = step
            hp = band_grid(V, theta + e, fd_step=step).hess
            hm = band_grid(V, theta - e, fd_step=step).hess
            D3[:, :, j] = (hp - hm) / (2 * step)
        D3 = (
            D3
            + D3.transpose(0, 1, 2, 4, 3)
            + D3.transpose(0, 1, 3, 2, 4)
            + D3.transpose(0, 1, 3, 4, 2)
            + D3.transpose(0, 1, 4, 2, 3)
            + D3.transpose(0, 1, 4, 3, 2)
        ) / 6
        tensors.append(D3)
    if k > 3:
        raise InvalidParameterError(f"correction order k={k} not supported (2 or 3)")
    return bg, tensors


def _contract(D, s):
    """``D . s^p`` for ``D`` of shape ``(..., d^p)`` and ``s`` of shape ``(M, d)``."""
    p = D.ndim - 2
    out = np.tensordot(D, s.T, axes=([D.ndim - 1], [0]))
    for _ in range(p - 1):
        out = np.einsum("...im,mi->...m", out, s)
    return out


def _s_grid(profile, d, nodes=None):
    """Quadrature nodes and weights covering the support of ``T~``."""
    w = getattr(profile.T, "w", 1.0)
    S = np.sqrt(4 * 40.0 / w)
    nodes = nodes or (1601 if d == 1 else 161)
    axis = np.linspace(-S, S, nodes)
    h = axis[1] - axis[0]
    mesh = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return mesh, h**d


def higher_amplitudes(profile, bg, tensors, tau, r, eps, k, scaled=True, nodes=None, chunk=256):
    """``A_{+-}^k`` by quadrature over ``s`` against the closed-form ``T~``.

    ``Phi(s) = tau/eps**(k-2) * sum_p c_p D_p.s^p / p!`` with ``c_p = eps**(p-2)``
    when ``scaled`` (the Taylor expansion of ``omega(theta + eps s)``), else 1.
    """
    d = bg.grad.shape[-1]
    s, wgt = _s_grid(profile, d, nodes)
    Ts = profile.T.smooth_fourier(s) * wgt / (2 * np.pi) ** d
    N, G = bg.omega.shape
    out = [np.empty((N, G), dtype=complex), np.empty((N, G), dtype=complex)]
    for lo in range(0, N, chunk):
        sl = slice(lo, lo + chunk)
        phi = np.zeros((min(chunk, N - lo), G, s.shape[0]))
        for p, D in enumerate(tensors, start=2):
            coef = (eps ** (p - 2) if scaled else 1.0) / factorial(p)
            phi += coef * _contract(D[sl], s)
        phi *= tau / eps ** (k - 2)
        for idx, sgn in enumerate((+1, -1)):
            rho = _shifted(bg, r, tau / eps ** (k - 1), sgn)[sl]
            phase = np.exp(-1j * (np.einsum("ngi,mi->ngm", rho, s) + sgn * phi))
            out[idx][sl] = profile.T.const + phase @ Ts
    return out


def higher_correction(V, profile, tau, r, theta, eps, k, scaled=True, nodes=None):
    """Order-``k`` symbol ``qhat^{eps,k}_{tau,r}(theta)`` (``k`` in 2, 3)."""
    if k not in (2, 3):
        raise InvalidParameterError(f"correction order k={k} not supported (2 or 3)")
    th = as_theta(theta, V.d)
    shape = th.shape[:-1]
    bg, tensors = derivative_tensors(V, th.reshape(-1, V.d), k)
    Ap, Am = higher_amplitudes(profile, bg, tensors, tau, np.atleast_1d(r), eps, k, scaled, nodes)
    q, _ = sandwich(bg, Ap, Am, profile.q0_hat(bg.theta))
    return _wrap(q, shape)


# -------------------------------------------------------------- half-space


def chi(r1, d1_omega, tau):
    """Reflection indicators ``chi_+`` and ``chi_-``; both equal 1/2 on the coincidence set."""
    return (1 + np.sign(r1 + d1_omega * tau)) / 2, (1 + np.sign(r1 - d1_omega * tau)) / 2


def _require_halfspace(V, r):
    if not V.symmetry_flag:
        raise ModelViolationError("half-space limits need V(-z1, z') = V(z1, z')")
    if np.atleast_1d(r)[0] < 0:
        raise InvalidQueryError(f"half-space limits need r1 >= 0, got {r}")


def halfspace_euler_symbol(V, profile, tau, r, theta):
    """``ghat_{tau,r}(theta)``; ``r1`` may be negative here (reflected argument)."""
    bg, shape = _bands(V, theta)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    Tp, Tm = euler_amplitudes(profile, bg, tau, r)
    cp, cm = chi(r[0], bg.grad[..., 0], tau)
    q, _ = sandwich(bg, Tp * cp, Tm * cm, profile.q0_hat(bg.theta))
    return _wrap(q, shape)


def halfspace_ns_symbol(V, profile, tau, r, theta, eps):
    bg, shape = _bands(V, theta)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    Ap, Am = ns_amplitudes(profile, bg, tau, r, eps)
    cp, cm = chi(r[0], bg.grad[..., 0], tau / eps)
    q, _ = sandwich(bg, Ap * cp, Am * cm, profile.q0_hat(bg.theta))
    return _wrap(q, shape)


def reflect(v):
    v = np.array(v, dtype=float)
    v[..., 0] = -v[..., 0]
    return v


def limit_theta_grid(d, resolution):
    """Half-cell shifted grid used for position-space inversion of limit symbols."""
    axis = -np.pi + 2 * np.pi * (np.arange(resolution) + 0.5) / resolution
    return np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)


def to_position(qhat, theta, z):
    """``(2 pi)^-d int exp(-i z.theta) qhat(theta) dtheta`` by the midpoint rule."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    phase = np.exp(-1j * (theta @ z))
    return np.tensordot(phase, qhat, axes=(0, 0)) / theta.shape[0]


def _halfspace_position(symbol, r, pairs, theta):
    """Position-space combination of image terms for each ``(z, z')``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = {}
    if r[0] > 0:
        g = symbol(r).data
        gt = symbol(reflect(r)).data
        for z, zp in pairs:
            z, zp = np.asarray(z, float), np.asarray(zp, float)
            out[(tuple(z.astype(int)), tuple(zp.astype(int)))] = to_position(g, theta, z - zp) + to_position(
                gt, theta, reflect(z) - reflect(zp)
            )
    else:
        g = symbol(r).data
        for z, zp in pairs:
            z, zp = np.asarray(z, float), np.asarray(zp, float)
            if z[0] < 0 or zp[0] < 0:
                raise InvalidQueryError("offsets must lie in the half-space when r1 = 0")
            val = (
                to_position(g, theta, z - zp)
                - to_position(g, theta, z - reflect(zp))
                - to_position(g, theta, reflect(z) - zp)
                + to_position(g, theta, reflect(z) - reflect(zp))
            )
            out[(tuple(z.astype(int)), tuple(zp.astype(int)))] = val
    return out


def halfspace_euler(V, profile, tau, r, offsets, resolution=8192):
    """Position-space half-space Euler limit ``Q_{tau,r}(z, z')``."""
    _require_halfspace(V, r)
    theta = limit_theta_grid(V.d, resolution)
    return _halfspace_position(lambda rr: halfspace_euler_symbol(V, profile, tau, rr, theta), r, offsets, theta)


def halfspace_ns(V, profile, tau, r, offsets, eps, resolution=8192):
    """Position-space half-space second-order limit ``Q^eps_{tau,r}(z, z')``."""
    _require_halfspace(V, r)
    theta = limit_theta_grid(V.d, resolution)
    return _halfspace_position(lambda rr: halfspace_ns_symbol(V, profile, tau, rr, theta, eps), r, offsets, theta)


# --------------------------------------------------- position-space limits

LIMIT_KINDS = ("euler", "ns", "free", "higher", "halfspace-euler", "halfspace-ns", "halfspace-free")


def position_limit(V, profile, query, kind, resolution=8192, k=3, scaled=True):
    """Limit covariance at every offset pair of a :class:`ScaledQuery`.

    The macroscopic position comes from ``query.anchor_position``; for the
    half-space kinds with ``r1 = 0`` only the transverse coordinates are
    anchored.
    """
    if kind not in LIMIT_KINDS:
        raise InvalidParameterError(f"unknown limit kind {kind!r}")
    theta = limit_theta_grid(V.d, resolution)
    tau, eps = query.tau, query.eps
    kk = int(round(query.kappa))

    def symbol(rr):
        if kind == "euler":
            return euler_limit(V, profile, tau, rr, theta)
        if kind == "ns":
            return ns_correction(V, profile, tau, rr, theta, eps)
        if kind == "free":
            return kernel_free(V, profile, tau, rr, theta, eps, max(kk, 2))
        if kind == "higher":
            return higher_correction(V, profile, tau, rr, theta, eps, k, scaled=scaled)
        if kind == "halfspace-euler":
            return halfspace_euler_symbol(V, profile, tau, rr, theta)
        if kind == "halfspace-ns":
            return halfspace_ns_symbol(V, profile, tau, rr, theta, eps)
        return halfspace_euler_symbol(V, profile, tau / eps, rr, theta)

    cache = {}

    def cached(rr):
        key = tuple(np.round(rr, 14))
        if key not in cache:
            cache[key] = symbol(rr)
        return cache[key]

    out = {}
    for z, zp in query.offsets:
        rr = np.asarray(query.anchor_position(z, zp), dtype=float)
        if kind.startswith("halfspace"):
            if query.r[0] == 0:
                rr[0] = 0.0
            res = _halfspace_position(cached, rr, [(z, zp)], theta)
            out[(z, zp)] = BlockCov(res[(tuple(z), tuple(zp))])
        else:
            out[(z, zp)] = BlockCov(to_position(cached(rr).data, theta, np.subtract(z, zp)))
    return out


# ---------------------------------------------------------------- residuals


def equilibrium_residual(q, sp, hermitian=True):
    """Largest violation of the equilibrium identities.

    ``sp`` is a :class:`SpectralPoint` or an array of ``Vhat`` values
    broadcasting against ``q``.  With ``hermitian`` the self-adjointness of
    the diagonal blocks and their negative parts are included.
    """
    data = q.data if isinstance(q, BlockCov) else np.asarray(q)
    n = data.shape[-1] // 2
    Vh = sp.Vhat if isinstance(sp, SpectralPoint) else np.asarray(sp)
    q00, q01 = data[..., :n, :n], data[..., :n, n:]
    q10, q11 = data[..., n:, :n], data[..., n:, n:]
    res = [np.abs(q11 - Vh @ q00).max(), np.abs(q01 + q10).max()]
    if hermitian:
        for blk in (q00, q11):
            res.append(np.abs(blk - _dag(blk)).max())
            lam = np.linalg.eigvalsh(0.5 * (blk + _dag(blk)))
            res.append(max(0.0, -lam.min()))
    return float(max(res))


def _r_mesh(r_axes):
    return np.stack(np.meshgrid(*r_axes, indexing="ij"), axis=-1)


def _single_bands(V, theta):
    th = as_theta(theta, V.d).reshape(1, V.d)
    bg = band_grid(V, th)
    return bg


def _field_from_amplitudes(bg, q0h, ampfun, taus, r_axes, kind, meta=None):
    """Evaluate band parts on a ``(tau, r)`` grid from an amplitude callback."""
    rmesh = _r_mesh(r_axes)
    rshape = rmesh.shape[:-1]
    n2 = q0h.shape[-1]
    G = bg.omega.shape[1]
    bands = np.zeros((len(taus),) + rshape + (G, n2, n2), dtype=complex)
    flat_r = rmesh.reshape(-1, rmesh.shape[-1])
    for it, tau in enumerate(taus):
        vals = np.zeros((flat_r.shape[0], G, n2, n2), dtype=complex)
        for ir, rr in enumerate(flat_r):
            Ap, Am = ampfun(tau, rr)
            _, f = sandwich(bg, Ap, Am, q0h)
            vals[ir] = f[0]
        bands[it] = vals.reshape(rshape + (G, n2, n2))
    return LimitField(
        values=bands.sum(axis=-3),
        bands=bands,
        tau=np.asarray(taus, dtype=float),
        r_axes=[np.asarray(a, dtype=float) for a in r_axes],
        theta=bg.theta[0],
        kind=kind,
        omega=bg.omega[0],
        grad=bg.grad[0],
        hess=bg.hess[0],
        meta=meta or {},
    )


def euler_field(V, profile, theta, taus, r_axes):
    bg = _single_bands(V, theta)
    q0h = profile.q0_hat(bg.theta)
    amp = lambda tau, rr: euler_amplitudes(profile, bg, tau, rr)
    return _field_from_amplitudes(bg, q0h, amp, taus, r_axes, "euler")


def ns_field(V, profile, theta, ts, r_axes, eps):
    """Second-order symbol at rescaled time ``tau = eps t`` on a ``(t, r)`` grid."""
    bg = _single_bands(V, theta)
    q0h = profile.q0_hat(bg.theta)
    if eps == 0:
        amp = lambda t, rr: euler_amplitudes(profile, bg, t, rr)
    else:
        amp = lambda t, rr: ns_amplitudes(profile, bg, eps * t, rr, eps)
    return _field_from_amplitudes(bg, q0h, amp, ts, r_axes, "ns", {"eps": eps})


def _check_grid(field):
    if len(field.tau) < 3 or any(len(a) < 3 for a in field.r_axes):
        raise GridTooSmallError("residuals need at least 3 points per grid axis")


def _derivatives(field):
    """Central differences of the band parts: ``d_tau``, gradient and Hessian in ``r``."""
    f = field.bands
    ht = field.tau[1] - field.tau[0]
    hr = [a[1] - a[0] for a in field.r_axes]
    d = len(field.r_axes)
    core = (slice(1, -1),) * (d + 1)
    dt = (f[2:] - f[:-2])[(slice(None),) + (slice(1, -1),) * d] / (2 * ht)
    grads, hess = [], {}
    for j in range(d):
        ax = 1 + j
        fp = np.roll(f, -1, axis=ax)
        fm = np.roll(f, 1, axis=ax)
        grads.append(((fp - fm) / (2 * hr[j]))[core])
        hess[(j, j)] = ((fp - 2 * f + fm) / hr[j] ** 2)[core]
        for k in range(j + 1, d):
            axk = 1 + k
            fpp = np.roll(np.roll(f, -1, ax), -1, axk)
            fpm = np.roll(np.roll(f, -1, ax), 1, axk)
            fmp = np.roll(np.roll(f, 1, ax), -1, axk)
            fmm = np.roll(np.roll(f, 1, ax), 1, axk)
            hess[(j, k)] = hess[(k, j)] = ((fpp - fpm - fmp + fmm) / (4 * hr[j] * hr[k]))[core]
    return dt, grads, hess


def _transport_operator(field, grads, hess, eps):
    n2 = field.bands.shape[-1]
    C = c_matrix(field.omega, n2 // 2)
    d = len(grads)
    drift = sum(field.grad[:, j][:, None, None] * grads[j] for j in range(d))
    if eps:
        diff = sum(field.hess[:, j, k][:, None, None] * hess[(j, k)] for j in range(d) for k in range(d))
        drift = drift + 0.5j * eps * diff
    return 1j * C @ drift


def euler_pde_residual(field: LimitField):
    """Max interior residual of ``d_tau f = iC grad(omega) . grad_r f``."""
    _check_grid(field)
    dt, grads, hess = _derivatives(field)
    return float(np.abs(dt - _transport_operator(field, grads, hess, 0.0)).max())


def ns_pde_residual(field: LimitField, eps):
    """Max interior residual of the second-order transport equation in ``(t, r)``."""
    _check_grid(field)
    dt, grads, hess = _derivatives(field)
    return float(np.abs(dt - _transport_operator(field, grads, hess, eps)).max())


def initial_band_parts(V, profile, r, theta):
    """``(1/2) Pi (R0 + C R0 C*) Pi`` per band at ``tau = 0``."""
    bg = _single_bands(V, theta)
    R = profile.R0_hat(np.atleast_1d(r)[None], bg.theta)[:, None]
    n = bg.proj.shape[-1]
    C = c_matrix(bg.omega, n)
    P = block_projector(bg.proj)
    return 0.5 * P @ (R + C @ R @ _dag(C)) @ P

