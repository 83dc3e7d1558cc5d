"""Initial Gaussian measures: Gibbs spectra, product profiles and sampling.

Spectral densities are ``2n x 2n`` block matrices ``[[q00, q01], [q10, q11]]``.
Position-space correlations use ``q(z) = (2 pi)^-d int exp(-i z.theta) qhat``,
evaluated on a DFT grid.  Profile Fourier transforms use
``T~(s) = int exp(i s.r) T(r) dr``; a constant ``c`` contributes
``c (2 pi)^d delta(s)``, which is kept apart as :attr:`Profile.const`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dispersion import InteractionMatrix, as_theta, fourier_symbol, theta_grid
from .errors import (
    GibbsUndefinedError,
    InvalidParameterError,
    SamplingError,
    UnsupportedProfileError,
)
from .lattice_dynamics import FieldState, dft_theta, site_coordinates

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstantProfile:
    c: float = 1.0
    name = "constant"

    def __post_init__(self):
        if self.c < 0:
            raise InvalidParameterError(f"constant profile must be non-negative, got {self.c}")

    @property
    def const(self):
        return self.c

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.full(r.shape[:-1], self.c)

    def grad(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def smooth_fourier(self, s):
        s = np.asarray(s, dtype=float)
        return np.zeros(s.shape[:-1])

    def params(self):
        return {"c": self.c}


@dataclass(frozen=True)
class GaussianBump:
    """``T(r) = base + a exp(-|r|^2 / w)``."""

    a: float = 0.5
    w: float = 1.0
    base: float = 1.0
    name = "gaussian-bump"

    def __post_init__(self):
        if self.w <= 0:
            raise InvalidParameterError(f"bump width must be positive, got {self.w}")
        if self.base < 0 or self.base + min(self.a, 0.0) < 0:
            raise InvalidParameterError("gaussian bump profile must stay non-negative")

    @property
    def const(self):
        return self.base

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.base + self.a * np.exp(-np.sum(r**2, axis=-1) / self.w)

    def grad(self, r):
        r = np.asarray(r, dtype=float)
        e = np.exp(-np.sum(r**2, axis=-1) / self.w)
        return (-2 * self.a / self.w) * e[..., None] * r

    def smooth_fourier(self, s):
        s = np.asarray(s, dtype=float)
        d = s.shape[-1]
        return self.a * (np.pi * self.w) ** (d / 2) * np.exp(-self.w * np.sum(s**2, axis=-1) / 4)

    def params(self):
        return {"a": self.a, "w": self.w, "base": self.base}


PROFILE_FAMILIES = {"constant": ConstantProfile, "gaussian-bump": GaussianBump}


def make_profile_family(name, **params):
    try:
        cls = PROFILE_FAMILIES[name]
    except KeyError:
        raise UnsupportedProfileError(f"unknown profile family {name!r}") from None
    return cls(**params)


@dataclass
class CovarianceProfile:
    """Product profile ``R0(r, z) = T(r) q0(z)``.

    ``q0_hat`` maps angles ``(..., d)`` to blocks ``(..., 2n, 2n)``.
    """

    d: int
    n: int
    T: object
    q0_hat: object
    provenance: str = "custom"
    V: InteractionMatrix | None = None
    table_resolution: int = 1024
    _tables: dict = field(default_factory=dict, repr=False)

    def R0_hat(self, r, theta):
        """``T(r) q0_hat(theta)``; ``r`` and ``theta`` broadcast over leading axes."""
        Tr = self.T(as_theta(r, self.d))
        return Tr[..., None, None] * self.q0_hat(as_theta(theta, self.d))

    def q0_table(self, box=None):
        """Position-space ``q0`` on a periodic box, shape ``box + (2n, 2n)``."""
        box = tuple(box) if box is not None else (self._default_extent(),) * self.d
        if box not in self._tables:
            axes = tuple(range(self.d))
            with np.errstate(divide="ignore", invalid="ignore"):
                qh = self.q0_hat(dft_theta(box))
            if np.all(np.isfinite(qh)):
                q = np.fft.fftn(qh, axes=axes) / np.prod(box)
            else:
                # singular density on the DFT grid: midpoint rule on the shifted grid
                half = np.pi / np.array(box)
                qh = self.q0_hat(dft_theta(box) + half)
                phase = np.exp(-1j * site_coordinates(box) @ half)
                q = phase[..., None, None] * np.fft.fftn(qh, axes=axes) / np.prod(box)
            self._tables[box] = np.real_if_close(q, tol=1e6)
        return self._tables[box]

    def _default_extent(self):
        return self.table_resolution if self.d == 1 else max(32, self.table_resolution // 16)

    def q0(self, z):
        """``q0(z)`` for integer offsets ``(..., d)`` (periodised on the default box)."""
        table = self.q0_table()
        L = table.shape[0]
        z = np.asarray(z, dtype=int).reshape(-1, self.d) if self.d > 1 else np.atleast_1d(z).reshape(-1, 1)
        idx = tuple((z % L).T)
        return table[idx]

    def periodization_error(self, box=None):
        """Largest ``|q0|`` in the outer half of the box (tail mass proxy)."""
        table = self.q0_table(box)
        coords = site_coordinates(table.shape[: self.d])
        extent = np.array(table.shape[: self.d])
        outer = np.any(np.abs(coords) >= extent // 4, axis=-1)
        return float(np.abs(table[outer]).max())

    def correlation_length(self, tol=1e-10):
        """Smallest radius beyond which ``|q0| <= tol * |q0(0)|``."""
        table = self.q0_table()
        coords = site_coordinates(table.shape[: self.d])
        radius = np.abs(coords).max(axis=-1)
        mag = np.abs(table).reshape(radius.shape + (-1,)).max(-1)
        big = radius[mag > tol * mag.max()]
        return int(big.max()) if big.size else 0


def gibbs_spectral(V: InteractionMatrix, T0: float = 1.0, grid_resolution=256, singular_tol=1e-12):
    """Gibbs spectral densities ``q00 = T0 Vhat^-1``, ``q11 = T0 I``."""
    if T0 <= 0:
        raise InvalidParameterError(f"temperature must be positive, got {T0}")
    res = grid_resolution if V.d == 1 else max(16, int(grid_resolution ** (1 / V.d)) * 4)
    lam = np.linalg.eigvalsh(fourier_symbol(V, theta_grid(V.d, res)))
    if lam.min() <= singular_tol * max(1.0, lam.max()):
        raise GibbsUndefinedError(
            f"Vhat is singular on the grid (min eigenvalue {lam.min():.3e}); Gibbs densities undefined"
        )
    n = V.n

    def q0_hat(theta):
        Vh = fourier_symbol(V, theta)
        out = np.zeros(Vh.shape[:-2] + (2 * n, 2 * n), dtype=complex)
        out[..., :n, :n] = T0 * np.linalg.inv(Vh)
        out[..., n:, n:] = T0 * np.eye(n)
        return out

    return CovarianceProfile(V.d, n, ConstantProfile(1.0), q0_hat, provenance=f"gibbs({T0:g})", V=V)


def product_profile(T_family, base: CovarianceProfile) -> CovarianceProfile:
    """Attach a macroscopic profile ``T`` to stationary densities ``base.q0_hat``."""
    if isinstance(T_family, (tuple, list)):
        T_family = make_profile_family(T_family[0], **T_family[1])
    if not hasattr(T_family, "smooth_fourier"):
        raise UnsupportedProfileError(f"profile {T_family!r} has no closed-form Fourier transform")
    return CovarianceProfile(
        base.d,
        base.n,
        T_family,
        base.q0_hat,
        provenance=base.provenance,
        V=base.V,
        table_resolution=base.table_resolution,
    )


@dataclass
class BlockCov:
    """A ``2n x 2n`` complex matrix viewed as a 2x2 grid of ``n x n`` blocks."""

    data: np.ndarray

    @property
    def n(self):
        return self.data.shape[-1] // 2

    def block(self, i, j):
        n = self.n
        return self.data[..., i * n : (i + 1) * n, j * n : (j + 1) * n]

    def transpose_pair(self):
        """Matrix with ``block(i,j)`` replaced by ``block(j,i)^T`` (the ``(z', z)`` entry)."""
        return BlockCov(np.swapaxes(self.data, -1, -2))


def covariance_Q(profile: CovarianceProfile, eps: float, z, zp) -> BlockCov:
    if eps <= 0:
        raise InvalidParameterError("eps must be positive")
    z = np.atleast_1d(np.asarray(z, dtype=int))
    zp = np.atleast_1d(np.asarray(zp, dtype=int))
    amp = np.sqrt(profile.T(eps * z[None, :]) * profile.T(eps * zp[None, :]))[0]
    return BlockCov(amp * profile.q0(z - zp)[0])


def _generator(seed, index):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def spectral_sqrt(profile: CovarianceProfile, box):
    """Hermitian square root of ``q0_hat`` on the DFT grid of ``box``."""
    qh = profile.q0_hat(dft_theta(box))
    qh = 0.5 * (qh + np.conj(np.swapaxes(qh, -1, -2)))
    lam, U = np.linalg.eigh(qh)
    scale = max(1.0, float(np.abs(lam).max()))
    if lam.min() < -1e-10 * scale:
        raise SamplingError(f"spectral density not positive semi-definite (eigenvalue {lam.min():.3e})")
    return np.einsum("...ik,...k,...jk->...ij", U, np.sqrt(np.clip(lam, 0, None)), np.conj(U))


def sample_fields(profile: CovarianceProfile, eps: float, box, seed: int, indices) -> np.ndarray:
    """Stacked samples ``(len(indices),) + box + (2n,)``.

    Real white noise on the box is filtered by ``sqrt(q0_hat)``, which gives
    stationary fields with covariance exactly ``q0`` periodised on the box,
    and then scaled by ``sqrt(T(eps z))``.
    """
    box = tuple(int(L) for L in box)
    d, m = profile.d, 2 * profile.n
    S = spectral_sqrt(profile, box)
    axes = tuple(range(1, d + 1))
    noise = np.stack([_generator(seed, k).standard_normal(box + (m,)) for k in indices])
    nh = np.fft.ifftn(noise, axes=axes)
    xi = np.fft.fftn(np.einsum("...ij,...j->...i", S, nh), axes=axes)
    imag = float(np.abs(xi.imag).max())
    if imag > 1e-10:
        log.warning("spectral synthesis imaginary residue %.3e", imag)
    amp = np.sqrt(profile.T(eps * site_coordinates(box)))
    return xi.real * amp[None, ..., None]


def sample_field(profile: CovarianceProfile, eps: float, box, seed: int, sample_index: int = 0) -> FieldState:
    X = sample_fields(profile, eps, box, seed, [sample_index])[0]
    return FieldState.from_stacked(X)


# ------------------------------------------------------------- diagnostics


@dataclass
class ProfileEntry:
    status: str
    margin: float
    note: str = ""


@dataclass
class ProfileReport:
    entries: dict

    def __getitem__(self, key):
        return self.entries[key]

    def summary(self):
        return {k: e.status for k, e in self.entries.items()}


def _decay_fit(radius, mag):
    """Fit ``log|q| ~ -gamma log(1+r)`` and ``log|q| ~ -kappa r``; return both slopes."""
    keep = (mag > 1e-300) & (radius > 0)
    if keep.sum() < 3:
        return np.inf, np.inf
    x, y = radius[keep], np.log(mag[keep])
    power = -np.polyfit(np.log1p(x), y, 1)[0]
    expo = -np.polyfit(x, y, 1)[0]
    return float(power), float(expo)


def verify_profile(profile: CovarianceProfile, eps_list=(0.1, 0.05), window=24, floor=1e-13) -> ProfileReport:
    d = profile.d
    entries = {}
    table = profile.q0_table()
    coords = site_coordinates(table.shape[:d])
    radius = np.linalg.norm(coords, axis=-1)
    mag = np.abs(table).reshape(radius.shape + (-1,)).max(-1)
    sel = (radius <= window) & (mag > floor * max(mag.max(), 1e-300))
    rs = np.unique(np.round(radius[sel], 6))
    env = np.array([mag[np.isclose(radius, rr)].max() for rr in rs])
    power, expo = _decay_fit(rs, env)
    tail = float(np.abs(table[radius >= min(table.shape[:d]) // 4]).max())
    if expo > 0.1 and tail < 1e-8:
        entries["I1"] = ProfileEntry("pass", expo, "exponential decay")
    elif power > d:
        entries["I1"] = ProfileEntry("pass", power, "power-law decay")
    else:
        entries["I1"] = ProfileEntry("fail", power, "decay exponent not above d")

    th = theta_grid(d, 64 if d == 1 else 16, shift=0.5)
    qh = profile.q0_hat(th)
    n = profile.n
    lam0 = np.linalg.eigvalsh(qh[..., :n, :n]).min()
    lam1 = np.linalg.eigvalsh(qh[..., n:, n:]).min()
    cross = np.abs(qh[..., :n, n:] - np.conj(np.swapaxes(qh[..., n:, :n], -1, -2))).max()
    entries["I2"] = ProfileEntry("pass" if min(lam0, lam1) >= -1e-12 and cross < 1e-12 else "fail", float(min(lam0, lam1)))
    lam = np.linalg.eigvalsh(0.5 * (qh + np.conj(np.swapaxes(qh, -1, -2)))).min()
    entries["I3"] = ProfileEntry("pass" if lam >= -1e-12 else "fail", float(lam))
    rgrid = np.linspace(-5, 5, 101)[:, None] * np.ones(d)
    gmax = float(np.abs(profile.T.grad(rgrid)).max())
    entries["I4"] = ProfileEntry("pass" if np.isfinite(gmax) else "fail", gmax)

    s = np.linspace(1, 40, 80)[:, None] * np.eye(d)[0]
    ft = np.abs(profile.T.smooth_fourier(s))
    if np.all(ft < 1e-300):
        entries["I4'"] = ProfileEntry("pass", np.inf, "no smooth part")
    else:
        keep = ft > 1e-300
        slope = -np.polyfit(np.log1p(s[keep, 0]), np.log(ft[keep]), 1)[0]
        entries["I4'"] = ProfileEntry("pass" if slope > d + 3 else "fail", float(slope))

    gamma = max(power, d + 1e-3) if entries["I1"].status == "pass" else power
    v1 = v2 = 0.0
    zs = np.arange(-8, 9)
    for eps in eps_list:
        for z in zs:
            for zp in zs:
                Q = covariance_Q(profile, eps, [z] * d, [zp] * d).data
                R = profile.T(eps * np.full((1, d), z))[0] * profile.q0(np.full(d, z - zp))[0]
                sep = abs(z - zp) * np.sqrt(d)
                bound = min((1 + sep) ** -gamma, eps * sep) if sep else 0.0
                dev = np.abs(Q - R).max()
                v1 = max(v1, dev / bound if bound else (0.0 if dev < 1e-14 else np.inf))
                v2 = max(v2, np.abs(Q).max() * (1 + sep) ** gamma)
    entries["V1"] = ProfileEntry("pass" if np.isfinite(v1) else "fail", v1, "sup ratio to bound")
    entries["V2"] = ProfileEntry("pass" if np.isfinite(v2) and entries["I1"].status == "pass" else "fail", v2)
    return ProfileReport(entries)
