"""Complex field, Wigner matrices and energy transport.

The complex field is ``a = (V^{1/4} v0 + i V^{-1/4} v1) / sqrt(2)`` with
fractional powers taken as Fourier multipliers.  The scaled Wigner matrix
at ``(tau, r)`` correlates ``a*`` and ``a`` at the sites
``[r/eps + y/2]`` and ``[r/eps - y/2]`` after time ``tau/eps`` and sums
over ``y`` against ``exp(i theta.y)``.

Two site conventions are available.  ``floor`` takes every ``y`` and
rounds both sites down; ``even`` keeps ``y`` in ``(2Z)^d`` with sites
``[r/eps] +- y/2`` and returns the ``y``-indexed correlation table, which
converges to the inverse Fourier transform of the limit matrix.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .covariance_flow import observable_covariance
from .dispersion import InteractionMatrix, as_theta, band_grid, fourier_symbol, max_group_speed
from .errors import FractionalPowerError, GridTooSmallError, InvalidParameterError, ModelViolationError, WindowError
from .lattice_dynamics import FieldState, dft_theta, odd_extension, propagator_grid
from .random_fields import CovarianceProfile, sample_fields

log = logging.getLogger(__name__)

CONVENTIONS = ("floor", "even")


@dataclass
class WignerGrid:
    """Wigner matrices on a ``(tau, r, theta)`` grid.

    ``values`` has shape ``(len(tau),) + r_shape + (len(theta), n, n)``.
    ``variant`` is one of ``empirical``, ``exact``, ``initial``,
    ``limit-full`` or ``limit-half``.
    """

    values: np.ndarray
    tau: np.ndarray
    r_axes: list
    theta: np.ndarray
    variant: str
    eps: float | None = None
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.values.shape[-1]


# -------------------------------------------------------- fractional powers


def _powers(V, theta, k):
    """``Vhat(theta)^k`` through eigh; raises on a singular symbol."""
    lam, U = np.linalg.eigh(fourier_symbol(V, theta))
    if k < 0 and lam.min() <= 1e-12 * max(1.0, lam.max()):
        raise FractionalPowerError(f"Vhat is singular (min eigenvalue {lam.min():.3e}); negative powers undefined")
    lam = np.clip(lam, 0.0, None)
    return np.einsum("...ik,...k,...jk->...ij", U, lam**k, np.conj(U))


def a_symbol(V: InteractionMatrix, theta):
    """``n x 2n`` multiplier ``[V^{1/4}, i V^{-1/4}] / sqrt(2)`` at each angle."""
    th = as_theta(theta, V.d)
    out = np.empty(th.shape[:-1] + (V.n, 2 * V.n), dtype=complex)
    out[..., :, : V.n] = _powers(V, th, 0.25)
    out[..., :, V.n :] = 1j * _powers(V, th, -0.25)
    return out / np.sqrt(2)


def a_field(V: InteractionMatrix, X: FieldState) -> np.ndarray:
    """Complex field of a state, shape ``box + (n,)``.

    Half-space states use the image multiplier, which is the full-space
    multiplier applied to the odd extension and restricted back.
    """
    stacked = X.stacked()
    if X.half_space_flag:
        if not V.symmetry_flag:
            raise ModelViolationError("half-space field needs V(-z1, z') = V(z1, z')")
        L = X.box[0]
        return _apply_multiplier(V, odd_extension(stacked, X.d), X.d)[:L]
    return _apply_multiplier(V, stacked, X.d)


def _apply_multiplier(V, stacked, d, Ghat=None):
    box = stacked.shape[-d - 1 : -1]
    axes = tuple(range(stacked.ndim - d - 1, stacked.ndim - 1))
    M = a_symbol(V, dft_theta(box))
    if Ghat is not None:
        M = M @ Ghat
    Xh = np.fft.ifftn(stacked, axes=axes)
    return np.fft.fftn(np.einsum("...ij,...j->...i", M, Xh), axes=axes)


# --------------------------------------------------------- limit matrices


def wigner_initial_symbol(V: InteractionMatrix, profile: CovarianceProfile, theta):
    """``W(0, r; theta) / T(r)`` for the product profile, shape ``(..., n, n)``."""
    th = as_theta(theta, V.d)
    n = V.n
    q = profile.q0_hat(th)
    P, Pm = _powers(V, th, 0.25), _powers(V, th, -0.25)
    q00, q01, q10, q11 = q[..., :n, :n], q[..., :n, n:], q[..., n:, :n], q[..., n:, n:]
    return 0.5 * (P @ q00 @ P + Pm @ q11 @ Pm + 1j * P @ q01 @ Pm - 1j * Pm @ q10 @ P)


def wigner_initial(V, profile, r, theta):
    """Initial Wigner matrix ``W(0, r; theta)``; ``r`` broadcasts against ``theta``."""
    Tr = profile.T(as_theta(r, V.d))
    return Tr[..., None, None] * wigner_initial_symbol(V, profile, theta)


def _flat_bands(V, theta):
    th = as_theta(theta, V.d).reshape(-1, V.d)
    return band_grid(V, th)


def _band_parts(V, profile, bg):
    """``Pi_sigma W0 Pi_sigma`` per band, shape ``(N, G, n, n)``."""
    W0 = wigner_initial_symbol(V, profile, bg.theta)
    parts = bg.proj @ W0[:, None] @ bg.proj
    return np.where(bg.mask[..., None, None], parts, 0.0)


def _source_positions(bg, tau, r, halfspace):
    """Characteristic foot points and the angle at which ``W0`` is read.

    Returns ``(rho, reflected, coincident)`` with ``rho`` of shape
    ``(N, G, d)`` and boolean masks of shape ``(N, G)``.
    """
    r = np.asarray(r, dtype=float)
    rho = r - tau * bg.grad
    if not halfspace:
        false = np.zeros(bg.mask.shape, dtype=bool)
        return rho, false, false
    d1 = tau * bg.grad[..., 0]
    reflected = r[0] < d1
    coincident = np.isclose(r[0], d1, rtol=0.0, atol=1e-14)
    rho = rho.copy()
    rho[..., 0] = np.where(reflected, -r[0] + d1, rho[..., 0])
    return rho, reflected, coincident


def _limit_values(V, profile, bg, parts, parts_reflected, tau, r, halfspace):
    rho, reflected, coincident = _source_positions(bg, tau, r, halfspace)
    amp = profile.T(rho)
    use = np.where(reflected[..., None, None], parts_reflected, parts)
    if np.any(coincident):
        # on the coincidence set both branches meet; average them
        avg = 0.5 * (parts + parts_reflected)
        use = np.where(coincident[..., None, None], avg, use)
    return (amp[..., None, None] * use).sum(axis=1), int(np.count_nonzero(coincident & bg.mask))


def _reflected_parts(V, profile, bg):
    """Band parts with ``W0`` read at the reflected angle."""
    th_r = bg.theta.copy()
    th_r[:, 0] = -th_r[:, 0]
    W0r = wigner_initial_symbol(V, profile, th_r)
    parts = bg.proj @ W0r[:, None] @ bg.proj
    return np.where(bg.mask[..., None, None], parts, 0.0)


def _require_halfspace(V, r):
    if not V.symmetry_flag:
        raise ModelViolationError("half-space limits need V(-z1, z') = V(z1, z')")
    if np.atleast_1d(r)[0] < 0:
        raise InvalidParameterError(f"half-space limits need r1 >= 0, got {r}")


def wigner_limit(V: InteractionMatrix, profile: CovarianceProfile, tau, r, theta, halfspace=False):
    """Limit Wigner matrix for a batch of angles, shape ``theta.shape[:-1] + (n, n)``.

    Points where ``r1`` equals ``tau d1 omega`` are averaged over both
    branches and counted in the returned grid's metadata when using
    :func:`wigner_limit_grid`.
    """
    th = as_theta(theta, V.d)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if halfspace:
        _require_halfspace(V, r)
    bg = _flat_bands(V, th)
    parts = _band_parts(V, profile, bg)
    parts_r = _reflected_parts(V, profile, bg) if halfspace else parts
    vals, ncoinc = _limit_values(V, profile, bg, parts, parts_r, tau, r, halfspace)
    if ncoinc:
        log.warning("%d angles on the coincidence set r1 = tau d1 omega", ncoinc)
    return vals.reshape(th.shape[:-1] + (V.n, V.n))


def _r_mesh(r_axes):
    return np.stack(np.meshgrid(*r_axes, indexing="ij"), axis=-1)


def wigner_limit_grid(V, profile, taus, r_axes, theta, halfspace=False):
    """:class:`WignerGrid` of limit (or, at ``tau = 0``, initial) matrices."""
    th = as_theta(theta, V.d).reshape(-1, V.d)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    r_axes = [np.asarray(a, dtype=float) for a in r_axes]
    if len(r_axes) != V.d:
        raise InvalidParameterError(f"need {V.d} r axes, got {len(r_axes)}")
    if halfspace:
        _require_halfspace(V, [a.min() for a in r_axes])
    bg = _flat_bands(V, th)
    parts = _band_parts(V, profile, bg)
    parts_r = _reflected_parts(V, profile, bg) if halfspace else parts
    mesh = _r_mesh(r_axes)
    rshape = mesh.shape[:-1]
    out = np.empty((len(taus),) + rshape + (len(th), V.n, V.n), dtype=complex)
    band_out = np.empty((len(taus),) + rshape + bg.proj.shape, dtype=complex)
    ncoinc = 0
    for it, tau in enumerate(taus):
        for idx in np.ndindex(*rshape):
            rho, reflected, coincident = _source_positions(bg, tau, mesh[idx], halfspace)
            use = np.where(reflected[..., None, None], parts_r, parts)
            use = np.where(coincident[..., None, None], 0.5 * (parts + parts_r), use)
            ncoinc += int(np.count_nonzero(coincident & bg.mask))
            b = profile.T(rho)[..., None, None] * use
            band_out[(it,) + idx] = b
            out[(it,) + idx] = b.sum(axis=1)
    variant = "limit-half" if halfspace else "limit-full"
    meta = {"bands": band_out, "grad": bg.grad, "mask": bg.mask, "coincident": ncoinc, "parts": parts, "parts_reflected": parts_r}
    meta["T"] = profile.T
    return WignerGrid(out, taus, r_axes, th, variant, meta=meta)


def relations_residual(V: InteractionMatrix, profile: CovarianceProfile, tau, r, theta, q=None):
    """Largest violation of the covariance/Wigner relations at the given angles.

    Checks ``Omega q00 = Omega^-1 q11 = (W(theta) + W(-theta)*) / 2`` and
    ``q01 = -q10 = -(i/2)(W(theta) - W(-theta)*)`` against the Euler limit
    (or a supplied symbol batch ``q`` matching ``theta``).
    """
    from .hydro_limits import euler_limit

    th = as_theta(theta, V.d).reshape(-1, V.d)
    n = V.n
    if q is None:
        q = euler_limit(V, profile, tau, r, th).data
    Wp = wigner_limit(V, profile, tau, r, th)
    Wm = np.conj(np.swapaxes(wigner_limit(V, profile, tau, r, -th), -1, -2))
    Om, Omi = _powers(V, th, 0.5), _powers(V, th, -0.5)
    sym = 0.5 * (Wp + Wm)
    anti = -0.5j * (Wp - Wm)
    res = [
        np.abs(Om @ q[:, :n, :n] - sym).max(),
        np.abs(Omi @ q[:, n:, n:] - sym).max(),
        np.abs(q[:, :n, n:] - anti).max(),
        np.abs(q[:, n:, :n] + anti).max(),
    ]
    return float(max(res))


def halfspace_relation_residual(V, profile, tau, r, theta):
    """``W_+^p`` against the Wigner transform of the half-space Euler symbol.

    The half-space symbol in the relative offset is ``ghat_r(theta) +
    ghat_{r~}(theta~)``, the sum of the direct and image terms.
    """
    from .hydro_limits import halfspace_euler_symbol, reflect

    th = as_theta(theta, V.d).reshape(-1, V.d)
    _require_halfspace(V, r)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    q = halfspace_euler_symbol(V, profile, tau, r, th).data
    q = q + halfspace_euler_symbol(V, profile, tau, reflect(r), reflect(th)).data
    Wq = wigner_transform(V, q, th)
    Wp = wigner_limit(V, profile, tau, r, th, halfspace=True)
    return float(np.abs(Wq - Wp).max())


def wigner_transform(V, q, theta):
    """``(Om^1/2 q00 Om^1/2 + Om^-1/2 q11 Om^-1/2 + i Om^1/2 q01 Om^-1/2 - i Om^-1/2 q10 Om^1/2) / 2``."""
    n = V.n
    P, Pm = _powers(V, theta, 0.25), _powers(V, theta, -0.25)
    q00, q01, q10, q11 = q[..., :n, :n], q[..., :n, n:], q[..., n:, :n], q[..., n:, n:]
    return 0.5 * (P @ q00 @ P + Pm @ q11 @ Pm + 1j * P @ q01 @ Pm - 1j * Pm @ q10 @ P)


# ------------------------------------------------------ microscopic Wigner


def taper(y, ymax, frac=0.1):
    """Cosine taper: 1 up to ``(1-frac) ymax``, falling to 0 at ``ymax``."""
    a = np.abs(np.asarray(y, dtype=float))
    start = (1 - frac) * ymax
    w = np.where(a <= start, 1.0, 0.5 * (1 + np.cos(np.pi * (a - start) / max(frac * ymax, 1e-300))))
    return np.where(a > ymax, 0.0, w)


def _y_offsets(d, ymax, convention):
    step = 2 if convention == "even" else 1
    axis = np.arange(-ymax, ymax + 1)
    if step == 2:
        axis = axis[axis % 2 == 0]
    return np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)


def _site_pairs(r, eps, ys, convention):
    r = np.asarray(r, dtype=float)
    if convention == "floor":
        x1 = np.floor(r / eps + ys / 2).astype(int)
        x2 = np.floor(r / eps - ys / 2).astype(int)
    else:
        base = np.floor(r / eps).astype(int)
        x1 = base + ys // 2
        x2 = base - ys // 2
    return x1, x2


def _window_weights(ys, ymax):
    return np.prod(taper(ys, ymax), axis=-1)


def _wigner_box(V, profile, eps, tau, r, ymax, min_extent=64):
    reach = 1.1 * max_group_speed(V) * abs(tau / eps) + np.abs(np.asarray(r) / eps).max() + ymax
    reach += profile.correlation_length() + V.diameter
    need = int(math.ceil(2 * reach))
    return max(min_extent, 1 << max(need - 1, 1).bit_length())


def _check_window(table, ys, ymax, tol):
    """Tail mass proxy: largest correlation in the tapered band relative to the peak."""
    mag = np.abs(table).reshape(len(ys), -1).max(-1)
    outer = np.abs(ys).max(-1) > 0.9 * ymax
    peak = mag.max()
    tail = mag[outer].max() / peak if peak > 0 and np.any(outer) else 0.0
    if tail > tol:
        raise WindowError(f"y-window {ymax} too small: tail/peak {tail:.3e} > {tol:.1e}")
    return float(tail)


def _theta_sum(table, ys, weights, theta):
    phase = np.exp(1j * theta @ ys.T) * weights
    return np.tensordot(phase, table, axes=(1, 0))


def wigner_exact(
    V: InteractionMatrix,
    profile: CovarianceProfile,
    eps,
    tau,
    r,
    theta,
    ymax=64,
    convention="floor",
    window_tol=1e-6,
    box=None,
):
    """Deterministic scaled Wigner matrix from the propagated covariance.

    With ``convention="floor"`` returns a :class:`WignerGrid` over
    ``theta``; with ``"even"`` the ``y`` table sits in ``meta["table"]``
    (and ``meta["y"]``) and ``values`` holds its windowed ``theta`` sum.
    """
    if convention not in CONVENTIONS:
        raise InvalidParameterError(f"convention must be one of {CONVENTIONS}")
    th = as_theta(theta, V.d).reshape(-1, V.d)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    ys = _y_offsets(V.d, ymax, convention)
    x1, x2 = _site_pairs(r, eps, ys, convention)
    L = _wigner_box(V, profile, eps, tau, r, ymax) if box is None else int(box)
    sym = lambda t: a_symbol(V, t)
    pairs = [(tuple(a), tuple(b)) for a, b in zip(x1, x2)]
    cov = observable_covariance(V, profile, eps, tau / eps, L, sym, sym, pairs, conj1=True)
    table = np.stack([cov[p] for p in pairs])
    tail = _check_window(table, ys, ymax, window_tol)
    w = _window_weights(ys, ymax)
    vals = _theta_sum(table, ys, w, th)
    meta = {"table": table, "y": ys, "tail": tail, "convention": convention, "box": L}
    return WignerGrid(vals[None], np.array([tau]), [r], th, "exact", eps=eps, meta=meta)


def _mc_batch(V, profile, eps, tau, box, seed, idx, x1, x2, w, ys, th):
    X0 = sample_fields(profile, eps, (box,) * V.d, seed, idx)
    Gh = propagator_grid(V, dft_theta((box,) * V.d), tau / eps)
    a = _apply_multiplier(V, X0, V.d, Gh)
    s1 = a[(slice(None),) + tuple((x1 % box).T)]
    s2 = a[(slice(None),) + tuple((x2 % box).T)]
    prod = np.conj(s1)[..., :, None] * s2[..., None, :]
    per = np.einsum("ty,syij->stij", np.exp(1j * th @ ys.T) * w, prod)
    tab = prod.sum(0)
    return per.sum(0), (per.real**2).sum(0) + 1j * (per.imag**2).sum(0), tab, (prod.real**2).sum(0) + 1j * (prod.imag**2).sum(0)


def wigner_empirical(
    V: InteractionMatrix,
    profile: CovarianceProfile,
    eps,
    tau,
    r,
    theta,
    nsamples,
    seed,
    ymax=64,
    convention="floor",
    box=None,
    batch=100,
    jobs=1,
):
    """Monte Carlo scaled Wigner matrix with per-entry standard errors.

    Real and imaginary parts carry separate standard errors, packed as
    ``stderr.real`` and ``stderr.imag``.  Batches follow the sampling
    contract of :func:`empirical_covariance`.
    """
    if convention not in CONVENTIONS:
        raise InvalidParameterError(f"convention must be one of {CONVENTIONS}")
    if nsamples < 2:
        raise InvalidParameterError("nsamples must be at least 2")
    th = as_theta(theta, V.d).reshape(-1, V.d)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    ys = _y_offsets(V.d, ymax, convention)
    x1, x2 = _site_pairs(r, eps, ys, convention)
    L = _wigner_box(V, profile, eps, tau, r, ymax) if box is None else int(box)
    w = _window_weights(ys, ymax)
    work = [list(range(i, min(i + batch, nsamples))) for i in range(0, nsamples, batch)]
    run = lambda idx: _mc_batch(V, profile, eps, tau, L, seed, idx, x1, x2, w, ys, th)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, work))
    else:
        parts = [run(idx) for idx in work]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    t1 = sum(p[2] for p in parts)
    t2 = sum(p[3] for p in parts)
    mean, err = _mean_stderr(s1, s2, nsamples)
    tmean, terr = _mean_stderr(t1, t2, nsamples)
    meta = {"table": tmean, "table_stderr": terr, "y": ys, "convention": convention, "box": L, "nsamples": nsamples}
    return WignerGrid(mean[None], np.array([tau]), [r], th, "empirical", eps=eps, stderr=err[None], meta=meta)


def _mean_stderr(s1, s2, n):
    mean = s1 / n
    vr = np.clip(s2.real / n - mean.real**2, 0, None) * n / (n - 1)
    vi = np.clip(s2.imag / n - mean.imag**2, 0, None) * n / (n - 1)
    return mean, np.sqrt(vr / n) + 1j * np.sqrt(vi / n)


def inverse_limit_table(V, profile, tau, r, ys, resolution=4096, halfspace=False):
    """``(2 pi)^-d int exp(-i theta.y) W^p(theta) dtheta`` at offsets ``ys``."""
    from .hydro_limits import limit_theta_grid

    th = limit_theta_grid(V.d, resolution)
    Wp = wigner_limit(V, profile, tau, r, th, halfspace=halfspace)
    phase = np.exp(-1j * np.asarray(ys, dtype=float) @ th.T)
    return np.tensordot(phase, Wp, axes=(1, 0)) / th.shape[0]


# -------------------------------------------------------------- transport


@dataclass
class TransportReport:
    residual: float
    boundary_mismatch: float | None = None
    symmetric_mismatch: float | None = None
    coincident: int = 0


def _central(f, axis, h):
    return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)


def transport_residual(W: WignerGrid) -> TransportReport:
    """Central-difference residual of ``d_tau f + grad(omega).grad_r f`` per band.

    Needs a limit grid with uniform ``tau`` and ``r`` steps.  For the
    half-space grid the band values on ``r1 = 0`` are also compared with
    the boundary data, in the general and the symmetric-profile forms.
    """
    if W.variant not in ("limit-full", "limit-half"):
        raise InvalidParameterError(f"transport residual needs a limit grid, got {W.variant!r}")
    bands = W.meta["bands"]
    grad = W.meta["grad"]
    d = len(W.r_axes)
    if len(W.tau) < 3 or any(len(a) < 3 for a in W.r_axes):
        raise GridTooSmallError("transport residual needs at least 3 points on every axis")
    ht = W.tau[1] - W.tau[0]
    hs = [a[1] - a[0] for a in W.r_axes]
    res = _central(bands, 0, ht)
    for k in range(d):
        res = res + grad[..., k][..., None, None] * _central(bands, 1 + k, hs[k])
    interior = (slice(1, -1),) * (1 + d)
    if W.variant == "limit-half":
        # the boundary plane itself is not an interior point of the half-space
        interior = (slice(1, -1), slice(1, -1)) + (slice(1, -1),) * (d - 1)
    residual = float(np.abs(res[interior]).max())
    report = TransportReport(residual, coincident=int(W.meta.get("coincident", 0)))
    if W.variant == "limit-half":
        report.boundary_mismatch, report.symmetric_mismatch = _boundary_mismatch(W)
    return report


def _boundary_mismatch(W):
    """Compare band values at ``r1 = 0`` against the boundary data."""
    r1 = W.r_axes[0]
    if not np.isclose(r1[0], 0.0):
        raise GridTooSmallError("half-space grid must start at r1 = 0 for the boundary check")
    bands = W.meta["bands"]
    grad = W.meta["grad"]
    parts, parts_r = W.meta["parts"], W.meta["parts_reflected"]
    T = W.meta["T"]
    rest = np.stack(np.meshgrid(*W.r_axes[1:], indexing="ij"), axis=-1) if len(W.r_axes) > 1 else np.zeros((0,))
    worst, worst_sym = 0.0, 0.0
    d1 = grad[..., 0]
    for it, tau in enumerate(W.tau):
        if tau <= 0:
            continue
        for idx in np.ndindex(*bands.shape[2 : 1 + len(W.r_axes)]):
            rbar = rest[idx] if rest.size else np.zeros(0)
            foot = np.concatenate([(tau * np.abs(d1))[..., None], rbar - tau * grad[..., 1:]], axis=-1)
            amp = T(foot)[..., None, None]
            b = np.where((d1 < 0)[..., None, None], amp * parts, amp * parts_r)
            b = np.where((d1 == 0)[..., None, None], amp * 0.5 * (parts + parts_r), b)
            sym = amp * parts
            got = bands[(it, 0) + idx]
            worst = max(worst, float(np.abs(got - b).max()))
            worst_sym = max(worst_sym, float(np.abs(got - sym).max()))
    return worst, worst_sym


__all__ = [
    "WignerGrid",
    "TransportReport",
    "a_symbol",
    "a_field",
    "wigner_initial",
    "wigner_initial_symbol",
    "wigner_limit",
    "wigner_limit_grid",
    "wigner_transform",
    "relations_residual",
    "halfspace_relation_residual",
    "wigner_exact",
    "wigner_empirical",
    "inverse_limit_table",
    "taper",
    "transport_residual",
]
