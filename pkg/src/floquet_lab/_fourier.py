"""Trigonometric helpers on the unit torus grid.

All fields are sampled at nodes j/N along each axis. Even-order derivatives
keep the Nyquist mode, odd-order derivatives zero it, which keeps real data
real.
"""

import numpy as np


def wavenumbers(n):
    """Integer frequencies in FFT order; index n//2 holds the Nyquist mode."""
    return np.fft.fftfreq(n, d=1.0 / n)


def nyquist_index(n):
    return n // 2


def derivative(field, axis, order=1):
    """Spectral derivative of a periodic field along ``axis``."""
    field = np.asarray(field)
    n = field.shape[axis]
    m = 2.0 * np.pi * wavenumbers(n)
    symbol = (1j * m) ** order
    if order % 2 == 1:
        symbol[nyquist_index(n)] = 0.0
    shape = [1] * field.ndim
    shape[axis] = n
    out = np.fft.ifft(np.fft.fft(field, axis=axis) * symbol.reshape(shape), axis=axis)
    if np.isrealobj(field):
        return out.real
    return out


def tail_fraction(field):
    """Fraction of spectral energy carried by the upper quarter of modes."""
    F = np.fft.fftn(np.asarray(field, dtype=complex))
    total = np.sum(np.abs(F) ** 2)
    if total == 0.0:
        return 0.0
    mask = np.zeros(F.shape, dtype=bool)
    for axis, n in enumerate(F.shape):
        high = np.abs(wavenumbers(n)) > n / 4.0
        shape = [1] * F.ndim
        shape[axis] = n
        mask |= high.reshape(shape)
    return float(np.sum(np.abs(F[mask]) ** 2) / total)


def _basis(n, x):
    """Interpolation basis exp(2*pi*i*m*x), Nyquist column replaced by cos."""
    m = wavenumbers(n)
    E = np.exp(2j * np.pi * np.outer(x, m))
    if n % 2 == 0:
        E[:, nyquist_index(n)] = np.cos(np.pi * n * x)
    return E


def interpolate(samples, points):
    """Evaluate the trigonometric interpolant of grid ``samples`` at ``points``.

    ``points`` has shape (P, ndim); coordinates may lie anywhere in R^ndim
    since the interpolant is 1-periodic.
    """
    samples = np.asarray(samples)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    ndim = samples.ndim
    if points.shape[1] != ndim:
        raise ValueError(f"points must have {ndim} columns, got {points.shape[1]}")
    F = np.fft.fftn(samples) / samples.size
    if ndim == 1:
        out = _basis(samples.shape[0], points[:, 0]) @ F
    elif ndim == 2:
        E1 = _basis(samples.shape[0], points[:, 0])
        E2 = _basis(samples.shape[1], points[:, 1])
        out = np.einsum("pi,ij,pj->p", E1, F, E2)
    else:
        raise ValueError("interpolation supports 1 or 2 dimensions")
    if np.isrealobj(samples):
        return out.real
    return out


def interpolate_many(stack, points):
    """Interpolate C grid fields (leading axis of ``stack``) at P points -> (P, C)."""
    stack = np.asarray(stack)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    ndim = stack.ndim - 1
    axes = tuple(range(1, stack.ndim))
    F = np.fft.fftn(stack, axes=axes) / np.prod(stack.shape[1:])
    if ndim == 1:
        out = _basis(stack.shape[1], points[:, 0]) @ F.T
    elif ndim == 2:
        E1 = _basis(stack.shape[1], points[:, 0])
        E2 = _basis(stack.shape[2], points[:, 1])
        out = np.einsum("pi,cij,pj->pc", E1, F, E2, optimize=True)
    else:
        raise ValueError("interpolation supports 1 or 2 dimensions")
    return out
