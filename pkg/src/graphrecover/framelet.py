"""Undecimated tight framelet transforms on graphs.

A framelet system decomposes an n x d signal into one low-pass band and
K*J high-pass bands, indexed (k, l) with scale k and level l. Band
operators are spectral multipliers of the graph Laplacian built as
level-wise products of a low-pass/high-pass filter pair evaluated at
dyadically scaled eigenvalues. Because the Haar pair satisfies
cos^2 + sin^2 = 1 pointwise, the per-eigenvalue band multipliers square-sum
to one, which makes the transform a tight frame: the adjoint reconstructs
exactly, W^T W = Id.

Two evaluation modes are provided: ``exact`` holds a full eigendecomposition
(small graphs), ``chebyshev`` applies each filter as a Chebyshev matrix
polynomial in the sparse Laplacian so only matvecs are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sparse

from .graphs import EXACT_EIG_CAP, SpectralDecomposition, eigendecompose_small, estimate_lambda_max

# All Chebyshev fits live on [0, pi]: the per-level scaled Laplacians are
# chosen so their spectra never leave this interval.
FILTER_DOMAIN = (0.0, math.pi)
DEFAULT_CHEB_ORDER = 50
DEFAULT_LEVELS = 2


@dataclass(frozen=True)
class FilterBank:
    """A low-pass spectral filter plus K high-pass filters."""

    name: str
    lowpass: Callable[[np.ndarray], np.ndarray]
    highpasses: tuple

    @property
    def num_highpass(self) -> int:
        return len(self.highpasses)


def haar_filter_bank() -> FilterBank:
    """Haar-type bank with a single high pass: cos(x/2) and sin(x/2)."""
    return FilterBank(
        name="haar",
        lowpass=lambda x: np.cos(np.asarray(x, dtype=float) / 2.0),
        highpasses=(lambda x: np.sin(np.asarray(x, dtype=float) / 2.0),),
    )


def band_keys(num_highpass: int, levels: int) -> tuple:
    """Band order: low pass (0, J) first, then (k, l) for k=1..K, l=1..J."""
    keys = [(0, levels)]
    for k in range(1, num_highpass + 1):
        keys.extend((k, l) for l in range(1, levels + 1))
    return tuple(keys)


def framelet_weights(nu0: float, num_highpass: int, levels: int) -> dict:
    """Per-band regularization weights: 0 on the low pass, 4^{-l-1} nu0 else."""
    if nu0 < 0:
        raise ValueError(f"nu0 must be nonnegative, got {nu0}")
    weights = {}
    for k, l in band_keys(num_highpass, levels):
        weights[(k, l)] = 0.0 if k == 0 else nu0 * 4.0 ** (-l - 1)
    return weights


class CoefficientStack:
    """Ordered framelet coefficient bands, one n x d array per band key.

    Supports elementwise linear arithmetic so solver updates can be written
    directly on stacks.
    """

    __slots__ = ("keys", "bands")

    def __init__(self, keys: Sequence, bands: Sequence[np.ndarray]):
        if len(keys) != len(bands):
            raise ValueError("band count does not match key count")
        self.keys = tuple(keys)
        self.bands = [np.asarray(b, dtype=float) for b in bands]
        shapes = {b.shape for b in self.bands}
        if len(shapes) > 1:
            raise ValueError(f"inconsistent band shapes: {sorted(shapes)}")

    @property
    def shape(self):
        return self.bands[0].shape

    def copy(self) -> "CoefficientStack":
        return CoefficientStack(self.keys, [b.copy() for b in self.bands])

    def zeros_like(self) -> "CoefficientStack":
        return CoefficientStack(self.keys, [np.zeros_like(b) for b in self.bands])

    def norm(self) -> float:
        """Frobenius norm over all bands."""
        return math.sqrt(sum(float(np.sum(b * b)) for b in self.bands))

    def _check_compatible(self, other: "CoefficientStack"):
        if self.keys != other.keys or self.shape != other.shape:
            raise ValueError("coefficient stacks have different band structure")

    def __add__(self, other):
        self._check_compatible(other)
        return CoefficientStack(self.keys, [a + b for a, b in zip(self.bands, other.bands)])

    def __sub__(self, other):
        self._check_compatible(other)
        return CoefficientStack(self.keys, [a - b for a, b in zip(self.bands, other.bands)])

    def __mul__(self, scalar):
        return CoefficientStack(self.keys, [b * float(scalar) for b in self.bands])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def __len__(self):
        return len(self.bands)

    def __iter__(self):
        return iter(zip(self.keys, self.bands))


@dataclass(frozen=True)
class ChebyshevFit:
    """Chebyshev interpolant of a scalar function on an interval.

    ``max_grid_error`` is the maximum absolute deviation from the target on
    a 1000-point grid over the interval.
    """

    coefficients: np.ndarray
    interval: tuple
    max_grid_error: float

    def __call__(self, x):
        a, b = self.interval
        return np.polynomial.chebyshev.chebval(
            (2.0 * np.asarray(x, dtype=float) - (a + b)) / (b - a), self.coefficients
        )


def chebyshev_fit(f, order: int, interval=FILTER_DOMAIN) -> ChebyshevFit:
    """Fit ``f`` on ``interval`` with a degree-``order`` Chebyshev interpolant."""
    if order < 1:
        raise ValueError(f"Chebyshev order must be >= 1, got {order}")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError(f"degenerate interval [{a}, {b}]")
    poly = np.polynomial.chebyshev.Chebyshev.interpolate(f, deg=order, domain=[a, b])
    grid = np.linspace(a, b, 1000)
    err = float(np.max(np.abs(poly(grid) - f(grid))))
    return ChebyshevFit(coefficients=poly.coef.copy(), interval=(a, b), max_grid_error=err)


def _cheb_apply(fit: ChebyshevFit, operator, signal: np.ndarray) -> np.ndarray:
    """Evaluate the fitted polynomial at a matrix, applied to a signal.

    Uses the three-term recurrence on the operator mapped onto [-1, 1];
    ``operator`` may be any object supporting ``@`` with dense arrays.
    """
    a, b = fit.interval
    scale = 2.0 / (b - a)
    shift = (a + b) / (b - a)

    def mapped(v):
        return scale * (operator @ v) - shift * v

    c = fit.coefficients
    t_prev = signal
    out = c[0] * t_prev
    if len(c) == 1:
        return out
    t_cur = mapped(signal)
    out = out + c[1] * t_cur
    for j in range(2, len(c)):
        t_next = 2.0 * mapped(t_cur) - t_prev
        t_prev, t_cur = t_cur, t_next
        out = out + c[j] * t_cur
    return out


@dataclass(frozen=True)
class FrameletSystem:
    """A ready-to-apply framelet transform for one graph Laplacian.

    ``mode`` is ``"exact"`` (holds eigenpairs and per-band spectral
    multipliers) or ``"chebyshev"`` (holds the sparse Laplacian plus one
    polynomial fit per filter, shared by all levels through per-level
    dyadic scaling of the operator).
    """

    bank: FilterBank
    levels: int
    dilation: float
    lambda_max: float
    mode: str
    n: int
    keys: tuple
    # exact mode
    decomposition: SpectralDecomposition | None = field(default=None, repr=False)
    multipliers: tuple | None = field(default=None, repr=False)
    # chebyshev mode
    laplacian: sparse.csr_matrix | None = field(default=None, repr=False)
    cheb_order: int | None = None
    fits: tuple | None = field(default=None, repr=False)

    @property
    def num_bands(self) -> int:
        return 1 + self.bank.num_highpass * self.levels

    def level_scale(self, level: int) -> float:
        """Dyadic argument scale for one decomposition level.

        The deepest level maps the spectrum onto [0, pi] exactly; shallower
        levels halve the argument each step, so every filter evaluation
        stays inside the fit domain.
        """
        return 2.0 ** (level - self.levels - self.dilation)


def _band_multipliers(system_eigs, bank, levels, dilation):
    """Per-band diagonal multipliers g/h products on the eigenvalue vector."""
    lam = system_eigs
    low = []
    high = []  # high[k-1][l-1]
    for l in range(1, levels + 1):
        t = 2.0 ** (l - levels - dilation)
        low.append(bank.lowpass(t * lam))
        high.append([hp(t * lam) for hp in bank.highpasses])
    mults = {}
    running = np.ones_like(lam, dtype=float)
    for l in range(1, levels + 1):
        for k in range(1, bank.num_highpass + 1):
            mults[(k, l)] = high[l - 1][k - 1] * running
        running = running * low[l - 1]
    mults[(0, levels)] = running
    return mults


def framelet_system(
    laplacian,
    levels: int = DEFAULT_LEVELS,
    bank: FilterBank | None = None,
    mode: str = "exact",
    cheb_order: int = DEFAULT_CHEB_ORDER,
    lambda_max: float | None = None,
    exact_cap: int = EXACT_EIG_CAP,
) -> FrameletSystem:
    """Build a FrameletSystem for a symmetric PSD graph Laplacian."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if mode not in ("exact", "chebyshev"):
        raise ValueError(f"unknown mode {mode!r}")
    bank = bank or haar_filter_bank()
    lap = sparse.csr_matrix(laplacian)
    n = lap.shape[0]
    keys = band_keys(bank.num_highpass, levels)

    if mode == "exact":
        decomposition = eigendecompose_small(lap, cap=exact_cap)
        lam_max = float(decomposition.eigenvalues[-1]) if lambda_max is None else float(lambda_max)
        if lam_max <= 0:
            raise ValueError("spectrum has no positive eigenvalue; framelet dilation undefined")
        dilation = math.log2(lam_max / math.pi)
        mults = _band_multipliers(decomposition.eigenvalues, bank, levels, dilation)
        return FrameletSystem(
            bank=bank,
            levels=levels,
            dilation=dilation,
            lambda_max=lam_max,
            mode=mode,
            n=n,
            keys=keys,
            decomposition=decomposition,
            multipliers=tuple(mults[key] for key in keys),
        )

    if lambda_max is None:
        # Slight inflation keeps the scaled spectrum inside the fit domain
        # even if the power-iteration estimate is a touch low.
        lam_max = 1.01 * estimate_lambda_max(lap)
    else:
        lam_max = float(lambda_max)
    if lam_max <= 0:
        raise ValueError("spectrum has no positive eigenvalue; framelet dilation undefined")
    dilation = math.log2(lam_max / math.pi)
    fits = [chebyshev_fit(bank.lowpass, cheb_order)]
    fits.extend(chebyshev_fit(hp, cheb_order) for hp in bank.highpasses)
    return FrameletSystem(
        bank=bank,
        levels=levels,
        dilation=dilation,
        lambda_max=lam_max,
        mode=mode,
        n=n,
        keys=keys,
        laplacian=lap,
        cheb_order=cheb_order,
        fits=tuple(fits),
    )


def decompose(system: FrameletSystem, signal) -> CoefficientStack:
    """Apply the decomposition operator W to an n x d signal."""
    x = np.asarray(signal, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != system.n:
        raise ValueError(f"signal has {x.shape[0]} rows, system expects {system.n}")

    bands = {}
    if system.mode == "exact":
        basis = system.decomposition.eigenvectors
        spectral = basis.T @ x
        for key, mult in zip(system.keys, system.multipliers):
            bands[key] = basis @ (mult[:, None] * spectral)
    else:
        running = x
        for l in range(1, system.levels + 1):
            op = system.level_scale(l) * system.laplacian
            for k in range(1, system.bank.num_highpass + 1):
                bands[(k, l)] = _cheb_apply(system.fits[k], op, running)
            running = _cheb_apply(system.fits[0], op, running)
        bands[(0, system.levels)] = running
    return CoefficientStack(system.keys, [bands[key] for key in system.keys])


def reconstruct(system: FrameletSystem, stack: CoefficientStack) -> np.ndarray:
    """Apply the adjoint W^T to a coefficient stack.

    For a tight system this inverts :func:`decompose` exactly.
    """
    if stack.keys != system.keys:
        raise ValueError("coefficient stack does not match system band structure")
    if stack.shape[0] != system.n:
        raise ValueError(f"stack has {stack.shape[0]} rows, system expects {system.n}")
    bands = dict(zip(stack.keys, stack.bands))

    if system.mode == "exact":
        basis = system.decomposition.eigenvectors
        acc = np.zeros_like(stack.bands[0])
        for key, mult in zip(system.keys, system.multipliers):
            acc = acc + mult[:, None] * (basis.T @ bands[key])
        return basis @ acc

    # Horner-style nesting from the deepest level outwards: each level
    # contributes its high-pass bands and filters the accumulated remainder
    # once more with the low pass.
    op = system.level_scale(system.levels) * system.laplacian
    acc = _cheb_apply(system.fits[0], op, bands[(0, system.levels)])
    for k in range(1, system.bank.num_highpass + 1):
        acc = acc + _cheb_apply(system.fits[k], op, bands[(k, system.levels)])
    for l in range(system.levels - 1, 0, -1):
        op = system.level_scale(l) * system.laplacian
        acc = _cheb_apply(system.fits[0], op, acc)
        for k in range(1, system.bank.num_highpass + 1):
            acc = acc + _cheb_apply(system.fits[k], op, bands[(k, l)])
    return acc


def tightness_gap(system: FrameletSystem) -> float:
    """Max deviation of the per-eigenvalue band energy sum from one.

    Only meaningful in exact mode; for a tight frame this is float noise.
    """
    if system.mode != "exact":
        raise ValueError("tightness gap is defined for exact-mode systems")
    total = np.zeros_like(system.decomposition.eigenvalues)
    for mult in system.multipliers:
        total = total + mult * mult
    return float(np.max(np.abs(total - 1.0)))
