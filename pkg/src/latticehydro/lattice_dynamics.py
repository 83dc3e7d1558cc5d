"""Exact evolution of the harmonic crystal on a periodic box.

Array index ``j`` along an axis of extent ``L`` stands for the site
``j`` (mod ``L``); :func:`site_coordinates` returns the centred
representatives in ``[-L/2, L/2)``.  Fourier multipliers act on the DFT
grid ``theta_k = 2 pi k / L``.  Plane waves ``exp(-i theta.z)`` diagonalise
the convolution with ``V``, with eigenvalue ``Vhat(theta)``.

The half-space model lives on ``{0..L-1} x box'`` and is evolved through
its odd extension on a box of extent ``2L`` along the first axis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dispersion import InteractionMatrix, SpectralPoint, as_theta, fourier_symbol
from .errors import InvalidBoxError, ModelViolationError

log = logging.getLogger(__name__)

SMALL_OMEGA = 1e-6


@dataclass
class FieldState:
    """Displacements ``v0`` and velocities ``v1``, arrays of shape ``box + (n,)``."""

    v0: np.ndarray
    v1: np.ndarray
    half_space_flag: bool = False

    def __post_init__(self):
        self.v0 = np.asarray(self.v0, dtype=float)
        self.v1 = np.asarray(self.v1, dtype=float)
        if self.v0.shape != self.v1.shape or self.v0.ndim < 2:
            raise InvalidBoxError(f"v0 {self.v0.shape} and v1 {self.v1.shape} must share shape box+(n,)")
        if self.half_space_flag:
            if np.any(self.v0[0] != 0) or np.any(self.v1[0] != 0):
                raise ModelViolationError("half-space state must vanish on the plane z1=0")

    @property
    def box(self):
        return self.v0.shape[:-1]

    @property
    def n(self):
        return self.v0.shape[-1]

    @property
    def d(self):
        return len(self.box)

    def stacked(self):
        """Array of shape ``box + (2n,)``."""
        return np.concatenate([self.v0, self.v1], axis=-1)

    @classmethod
    def from_stacked(cls, X, half_space_flag=False):
        n = X.shape[-1] // 2
        return cls(X[..., :n], X[..., n:], half_space_flag)

    @classmethod
    def zeros(cls, box, n, half_space_flag=False):
        shape = tuple(box) + (n,)
        return cls(np.zeros(shape), np.zeros(shape), half_space_flag)


@dataclass
class PropagatorSymbol:
    theta: np.ndarray
    Ghat: np.ndarray


@dataclass
class GreenTable:
    """``G_t(z)`` on a box; ``G[j]`` is the ``2n x 2n`` block at site ``j``."""

    t: float
    G: np.ndarray
    max_imag: float

    @property
    def box(self):
        return self.G.shape[:-2]


def site_coordinates(box) -> np.ndarray:
    """Centred integer coordinates, shape ``box + (d,)``."""
    axes = [np.where(np.arange(L) >= L // 2, np.arange(L) - L, np.arange(L)) for L in box]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def dft_theta(box) -> np.ndarray:
    """DFT angles ``2 pi k / L`` on the box, shape ``box + (d,)``."""
    axes = [2 * np.pi * np.arange(L) / L for L in box]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _sinc_t(w, t):
    """``sin(w t) / w`` with the series limit near ``w = 0``."""
    small = w < SMALL_OMEGA
    safe = np.where(small, 1.0, w)
    return np.where(small, t - w**2 * t**3 / 6, np.sin(w * t) / safe)


def _assemble(cos_, sinc, wsin):
    n = cos_.shape[-1]
    out = np.empty(cos_.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    out[..., :n, :n] = cos_
    out[..., :n, n:] = sinc
    out[..., n:, :n] = -wsin
    out[..., n:, n:] = cos_
    return out


def _apply(U, vals):
    return np.einsum("...ik,...k,...jk->...ij", U, vals, np.conj(U))


def propagator_symbol(sp: SpectralPoint, t: float) -> PropagatorSymbol:
    """Band-wise ``[[cos Wt, W^-1 sin Wt], [-W sin Wt, cos Wt]]`` at one angle."""
    cos_ = sum(np.cos(b.omega * t) * b.proj for b in sp.bands)
    sinc = sum(_sinc_t(np.asarray(b.omega), t) * b.proj for b in sp.bands)
    wsin = sum(b.omega * np.sin(b.omega * t) * b.proj for b in sp.bands)
    return PropagatorSymbol(np.asarray(sp.theta), _assemble(cos_, sinc, wsin))


def symbol_functions(V: InteractionMatrix, theta):
    """Eigen-data of ``Vhat`` on a batch of angles: ``(omega, U)``.

    Matrix functions of ``Omega`` are built directly from the eigenvectors,
    so band crossings need no special treatment here.
    """
    Vh = fourier_symbol(V, theta)
    lam, U = np.linalg.eigh(Vh)
    return np.sqrt(np.clip(lam, 0.0, None)), U


def propagator_grid(V: InteractionMatrix, theta, t: float) -> np.ndarray:
    """``Ghat_t(theta)`` for a batch of angles, shape ``(..., 2n, 2n)``."""
    w, U = symbol_functions(V, as_theta(theta, V.d))
    return _assemble(_apply(U, np.cos(w * t)), _apply(U, _sinc_t(w, t)), _apply(U, w * np.sin(w * t)))


def _check_box(V, box):
    if any(L <= 2 * V.diameter for L in box):
        raise InvalidBoxError(f"box {tuple(box)} too small for interaction support of diameter {V.diameter}")


def green_function(V: InteractionMatrix, t: float, box) -> GreenTable:
    box = tuple(int(L) for L in box)
    if len(box) != V.d:
        raise InvalidBoxError(f"box {box} does not match d={V.d}")
    if any(L & (L - 1) for L in box):
        raise InvalidBoxError(f"box extents must be powers of two, got {box}")
    _check_box(V, box)
    Gh = propagator_grid(V, dft_theta(box), t)
    axes = tuple(range(V.d))
    G = np.fft.fftn(Gh, axes=axes) / np.prod(box)
    max_imag = float(np.abs(G.imag).max())
    if max_imag > 1e-10:
        log.warning("green function imaginary residue %.3e", max_imag)
    return GreenTable(float(t), G.real.copy(), max_imag)


def evolve(V: InteractionMatrix, X0: FieldState, t: float) -> FieldState:
    if X0.half_space_flag:
        raise ModelViolationError("use evolve_halfspace for half-space states")
    return FieldState.from_stacked(_evolve_stacked(V, X0.stacked(), t, X0.d))


def _evolve_stacked(V, X, t, d):
    """Evolve arrays of shape ``batch + box + (2n,)`` (box on the last d+1 axes)."""
    box = X.shape[-d - 1 : -1]
    if len(box) != V.d or X.shape[-1] != 2 * V.n:
        raise InvalidBoxError(f"state shape {X.shape} does not match d={V.d}, n={V.n}")
    _check_box(V, box)
    axes = tuple(range(X.ndim - d - 1, X.ndim - 1))
    Xh = np.fft.ifftn(X, axes=axes)
    Gh = propagator_grid(V, dft_theta(box), t)
    Yh = np.einsum("...ij,...j->...i", Gh, Xh)
    return np.fft.fftn(Yh, axes=axes).real


def odd_extension(X: np.ndarray, d: int) -> np.ndarray:
    """Odd extension along the first box axis onto a doubled box.

    ``X`` has shape ``batch + (L,) + rest + (m,)``; the result has extent
    ``2L`` on that axis with ``Y(-z1) = -Y(z1)`` and ``Y(L) = 0``.
    """
    ax = X.ndim - d - 1
    L = X.shape[ax]
    mirror = -np.flip(np.take(X, np.arange(1, L), axis=ax), axis=ax)
    pad_shape = list(X.shape)
    pad_shape[ax] = 1
    return np.concatenate([X, np.zeros(pad_shape), mirror], axis=ax)


def evolve_halfspace(V: InteractionMatrix, Y0: FieldState, t: float) -> FieldState:
    if not V.symmetry_flag:
        raise ModelViolationError("half-space dynamics needs V(-z1, z') = V(z1, z')")
    if not Y0.half_space_flag:
        raise ModelViolationError("state is not flagged as half-space")
    L = Y0.box[0]
    ext = odd_extension(Y0.stacked(), Y0.d)
    Y = _evolve_stacked(V, ext, t, Y0.d)[:L]
    Y[0] = 0.0
    return FieldState.from_stacked(Y, half_space_flag=True)


def apply_interaction(V: InteractionMatrix, v: np.ndarray) -> np.ndarray:
    """Periodic convolution ``(V * v)(x) = sum_z V(z) v(x - z)``."""
    d = V.d
    axes = tuple(range(v.ndim - d - 1, v.ndim - 1))
    out = np.zeros_like(v)
    for z, block in V.support.items():
        out += np.einsum("kl,...l->...k", block, np.roll(v, shift=z, axis=axes))
    return out


def hamiltonian(V: InteractionMatrix, X: FieldState) -> float:
    if X.half_space_flag:
        raise ModelViolationError("hamiltonian is defined for full-space states")
    kinetic = 0.5 * np.sum(X.v1**2)
    potential = 0.5 * np.sum(X.v0 * apply_interaction(V, X.v0))
    return float(kinetic + potential)


def weighted_norm(X: FieldState, alpha: float) -> float:
    """Diagnostic ``sum (1+|z|^2)^alpha (|v0|^2 + |v1|^2)`` square-rooted."""
    z = site_coordinates(X.box)
    weight = (1.0 + np.sum(z**2, axis=-1)) ** alpha
    return float(np.sqrt(np.sum(weight * (np.sum(X.v0**2, -1) + np.sum(X.v1**2, -1)))))
