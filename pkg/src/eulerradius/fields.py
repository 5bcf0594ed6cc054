"""Band-limited fields stored as complex Fourier coefficients.

Two geometries are supported:

``torus``
    ``T^d`` (``d`` = 2 or 3) with period ``2*pi`` on every axis.
``slab``
    ``T^2 x (0, L)``. Each component is extended evenly (cosine series) or
    oddly (sine series) to ``(-L, L)``, so the field is stored as a periodic
    field with period ``2L`` in ``x3`` plus a parity flag per component.
    Wavenumbers in ``x3`` are ``n*pi/L``; homogeneous Neumann data (cosine) or
    Dirichlet data (sine) at ``x3 in {0, L}`` is automatic.

Coefficients are normalised so that ``f(x) = sum_k c_k exp(i k.x)``; the
physical ``L^2`` norm is ``sqrt(volume * sum |c_k|^2)``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * np.pi
_MAGIC = b"GVRYFLD1"


def _index_grid(n: int) -> np.ndarray:
    """Signed integer mode index along one FFT axis."""
    return np.rint(np.fft.fftfreq(n) * n).astype(int)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable scalar or vector field in modal space.

    ``coeffs`` has shape ``(ncomp, n1, n2[, n3])`` in FFT ordering.
    """

    coeffs: np.ndarray
    geometry: str = "torus"
    depth: float | None = None
    parity: tuple[int, ...] | None = None
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim not in (3, 4):
            raise ValueError("coeffs must have shape (ncomp, n1, n2[, n3])")
        if self.geometry not in ("torus", "slab"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.geometry == "slab":
            if c.ndim != 4:
                raise ValueError("slab fields are three dimensional")
            if self.depth is None or self.depth <= 0:
                raise ValueError("slab fields need a positive depth")
            par = (1,) * c.shape[0] if self.parity is None else tuple(int(p) for p in self.parity)
            if len(par) != c.shape[0] or any(p not in (1, -1) for p in par):
                raise ValueError("parity must hold +1/-1 per component")
            object.__setattr__(self, "parity", par)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- geometry -------------------------------------------------------------

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def lengths(self) -> tuple[float, ...]:
        if self.geometry == "slab":
            return (TWO_PI, TWO_PI, 2.0 * self.depth)
        return (TWO_PI,) * self.dim

    @property
    def volume(self) -> float:
        v = float(np.prod(self.lengths))
        return v / 2.0 if self.geometry == "slab" else v

    def wavenumbers(self, axis: int) -> np.ndarray:
        return _index_grid(self.shape[axis]) * (TWO_PI / self.lengths[axis])

    def kgrid(self) -> list[np.ndarray]:
        """Broadcastable wavenumber arrays, one per axis."""
        out = []
        for ax in range(self.dim):
            s = [1] * self.dim
            s[ax] = self.shape[ax]
            out.append(self.wavenumbers(ax).reshape(s))
        return out

    def k_magnitude(self) -> np.ndarray:
        return np.sqrt(sum(k**2 for k in self.kgrid()))

    def mode_indices(self) -> list[np.ndarray]:
        return [_index_grid(n) for n in self.shape]

    def band(self) -> tuple[int, ...]:
        """Largest |mode index| per axis carrying a nonzero coefficient."""
        nz = np.any(self.coeffs != 0, axis=0)
        out = []
        for ax, idx in enumerate(self.mode_indices()):
            other = tuple(a for a in range(self.dim) if a != ax)
            used = np.any(nz, axis=other) if other else nz
            out.append(int(np.abs(idx[used]).max()) if used.any() else 0)
        return tuple(out)

    @property
    def k_max(self) -> int:
        return max(self.band())

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_grid(cls, values, geometry="torus", depth=None, parity=None, time=0.0, dim=None):
        """From real samples on the (extended, for slabs) uniform grid.

        ``dim`` is the spatial dimension; without it a 2D or 3D array is read
        as a scalar field and a 4D array as a vector field.
        """
        v = np.asarray(values, dtype=float)
        if dim is None:
            dim = 3 if geometry == "slab" else min(v.ndim, 3)
        if v.ndim == dim:
            v = v[None]
        axes = tuple(range(1, v.ndim))
        c = np.fft.fftn(v, axes=axes) / np.prod(v.shape[1:])
        return cls(c, geometry, depth, parity, time)

    def with_coeffs(self, coeffs, parity=None) -> "SpectralField":
        return replace(self, coeffs=coeffs, parity=self.parity if parity is None else parity)

    def component(self, i: int) -> "SpectralField":
        par = None if self.parity is None else (self.parity[i],)
        return replace(self, coeffs=self.coeffs[i : i + 1], parity=par)

    def scaled(self, c: float) -> "SpectralField":
        return self.with_coeffs(self.coeffs * c)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if self.parity != other.parity or self.shape != other.shape:
            raise ValueError("incompatible fields")
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + other.scaled(-1.0)

    # -- calculus -------------------------------------------------------------

    def derivative_multiplier(self, alpha: Sequence[int]) -> np.ndarray:
        """``prod_j (i k_j)^alpha_j`` broadcast over the mode grid."""
        mult = np.ones((1,) * self.dim, dtype=complex)
        for ax, a in enumerate(alpha):
            if a == 0:
                continue
            if ax >= self.dim:
                return np.zeros((1,) * self.dim, dtype=complex)
            mult = mult * (1j * self.kgrid()[ax]) ** a
        return mult

    def derivative(self, alpha: Sequence[int]) -> "SpectralField":
        alpha = tuple(alpha) + (0,) * (3 - len(alpha))
        c = self.coeffs * self.derivative_multiplier(alpha)[None]
        par = None
        if self.geometry == "slab":
            flip = -1 if alpha[2] % 2 else 1
            par = tuple(p * flip for p in self.parity)
        return self.with_coeffs(c, par)

    def mean(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.dim].copy()

    def l2_norm(self) -> float:
        """Componentwise-summed physical L2 norm."""
        return float(np.sum(self.component_l2_norms()))

    def component_l2_norms(self) -> np.ndarray:
        axes = tuple(range(1, self.coeffs.ndim))
        return np.sqrt(self.volume * np.sum(np.abs(self.coeffs) ** 2, axis=axes))

    def euclidean_l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.component_l2_norms() ** 2)))

    # -- grids ----------------------------------------------------------------

    def padded(self, shape: Sequence[int]) -> "SpectralField":
        """Same trigonometric polynomial on a finer (or coarser) mode grid.

        Modes outside the target grid are dropped, so coarsening is only exact
        when :meth:`band` fits.
        """
        shape = tuple(int(n) for n in shape)
        out = np.zeros((self.ncomp,) + shape, dtype=complex)
        src_idx = self.mode_indices()
        sel_src, sel_dst = [], []
        for n_src, n_dst, idx in zip(self.shape, shape, src_idx):
            half = (n_dst - 1) // 2
            keep = np.abs(idx) <= half
            if n_dst % 2 == 0:
                # the target Nyquist index -n/2 can hold the source -n/2 mode
                keep |= idx == -(n_dst // 2)
            src = np.nonzero(keep)[0]
            sel_src.append(src)
            sel_dst.append(np.mod(idx[src], n_dst))
        out[np.ix_(range(self.ncomp), *sel_dst)] = self.coeffs[np.ix_(range(self.ncomp), *sel_src)]
        return self.with_coeffs(out)

    def to_grid(self, oversample: int = 1, real: bool = True) -> np.ndarray:
        f = self if oversample == 1 else self.padded([n * oversample for n in self.shape])
        axes = tuple(range(1, f.coeffs.ndim))
        v = np.fft.ifftn(f.coeffs, axes=axes) * np.prod(f.shape)
        return v.real if real else v

    def grid_axes(self, oversample: int = 1) -> list[np.ndarray]:
        return [np.arange(n * oversample) * (L / (n * oversample)) for n, L in zip(self.shape, self.lengths)]

    def compact(self, factor: int = 2) -> "SpectralField":
        """Exact copy on the odd grid ``n_i = factor*band_i + 1`` (at least 5).

        ``factor=2`` holds the field itself; ``factor=4`` also holds any product
        of two derivatives of it without aliasing.
        """
        shape = []
        for b in self.band():
            shape.append(max(5, factor * b + 1))
        return self.padded(shape)

    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep ``|n_i| <= N_i // 3`` on every axis."""
        mask = np.ones(self.shape, dtype=bool)
        for ax, (n, idx) in enumerate(zip(self.shape, self.mode_indices())):
            s = [1] * self.dim
            s[ax] = n
            mask = mask & (np.abs(idx) <= n // 3).reshape(s)
        return mask

    def dealiased(self) -> "SpectralField":
        return self.with_coeffs(self.coeffs * self.dealias_mask()[None])

    def is_real(self, tol: float = 1e-12) -> bool:
        g = self.to_grid(real=False)
        return bool(np.max(np.abs(g.imag)) <= tol * max(1.0, np.max(np.abs(g.real))))

    # -- vector calculus ------------------------------------------------------

    def divergence(self) -> "SpectralField":
        if self.ncomp != self.dim:
            raise ValueError("divergence needs a vector field with dim components")
        k = self.kgrid()
        c = sum(1j * k[i] * self.coeffs[i] for i in range(self.dim))[None]
        par = None if self.parity is None else (self.parity[0],)
        return replace(self, coeffs=c, parity=par)

    def gradient_coeffs(self) -> np.ndarray:
        """``(ncomp, dim, ...)`` array of ``d_j v_i`` coefficients."""
        k = self.kgrid()
        return np.stack([self.coeffs * (1j * k[j])[None] for j in range(self.dim)], axis=1)


# -- constructors -------------------------------------------------------------


def zeros(shape, ncomp=1, geometry="torus", depth=None, parity=None) -> SpectralField:
    return SpectralField(np.zeros((ncomp,) + tuple(shape), dtype=complex), geometry, depth, parity)


def slab_shape(n: int) -> tuple[int, int, int]:
    """Extended mode grid for an ``n^3`` slab (``n`` physical points in x3)."""
    return (n, n, 2 * n)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _symmetrize(c: np.ndarray, geometry: str, parity) -> np.ndarray:
    """Project raw complex coefficients onto real fields of the given parity."""
    # c_k <- (c_k + conj(c_{-k})) / 2, done by index reversal so exact zeros stay zero
    rev = np.ix_(range(c.shape[0]), *[np.mod(-_index_grid(n), n) for n in c.shape[1:]])
    c = 0.5 * (c + np.conj(c[rev]))
    if geometry == "slab":
        idx = np.mod(-_index_grid(c.shape[-1]), c.shape[-1])
        for i, p in enumerate(parity):
            c[i] = 0.5 * (c[i] + p * c[i][..., idx])
    return c


def random_field(
    shape,
    ncomp=1,
    geometry="torus",
    depth=None,
    parity=None,
    band=None,
    tau=None,
    seed=None,
    mean_zero=True,
) -> SpectralField:
    """Real random field with Gaussian modal amplitudes.

    ``band`` truncates to ``|n_i| <= band`` on every axis (defaults to the
    2/3-rule band); ``tau`` multiplies by the analytic envelope
    ``exp(-tau |k|)``.
    """
    rng = _rng(seed)
    shape = tuple(shape)
    proto = zeros(shape, ncomp, geometry, depth, parity)
    raw = rng.standard_normal((ncomp,) + shape) + 1j * rng.standard_normal((ncomp,) + shape)
    mask = proto.dealias_mask() if band is None else np.ones(shape, dtype=bool)
    if band is not None:
        for ax, idx in enumerate(proto.mode_indices()):
            s = [1] * len(shape)
            s[ax] = shape[ax]
            mask = mask & (np.abs(idx) <= band).reshape(s)
    # remove Nyquist modes so every retained mode has its conjugate partner
    for ax, n in enumerate(shape):
        if n % 2 == 0:
            s = [slice(None)] * len(shape)
            s[ax] = n // 2
            mask[tuple(s)] = False
    raw = raw * mask[None]
    if tau is not None:
        raw = raw * np.exp(-tau * proto.k_magnitude())[None]
    c = _symmetrize(raw, geometry, proto.parity)
    if mean_zero:
        c[(slice(None),) + (0,) * len(shape)] = 0.0
    return SpectralField(c, geometry, depth, proto.parity)


def curl(a: SpectralField) -> SpectralField:
    """Curl of a 3-component field (slab parities follow automatically)."""
    if a.ncomp != 3 or a.dim != 3:
        raise ValueError("curl needs a 3D vector field")
    k1, k2, k3 = a.kgrid()
    c = a.coeffs
    out = np.stack(
        [
            1j * k2 * c[2] - 1j * k3 * c[1],
            1j * k3 * c[0] - 1j * k1 * c[2],
            1j * k1 * c[1] - 1j * k2 * c[0],
        ]
    )
    par = None
    if a.geometry == "slab":
        p = a.parity
        if not p[0] == p[1] == -p[2]:
            raise ValueError("slab curl needs potential parities (p, p, -p)")
        par = (p[2], p[2], p[0])
    return a.with_coeffs(out, par)


def random_slip_field(n: int, depth: float = 2.0 * np.pi, band: int = 3, tau: float = 0.5, seed=None) -> SpectralField:
    """Divergence-free slab velocity with ``u3 = 0`` on both faces.

    Built as the curl of a potential with sine-type ``A1, A2`` and cosine-type
    ``A3``, which gives cosine-type ``u1, u2`` and sine-type ``u3``.
    """
    pot = random_field(slab_shape(n), 3, "slab", depth, (-1, -1, 1), band=band, tau=tau, seed=seed)
    return curl(pot)


def random_solenoidal_torus(n: int, band: int = 3, tau: float = 0.5, seed=None) -> SpectralField:
    pot = random_field((n, n, n), 3, band=band, tau=tau, seed=seed)
    return curl(pot)


def trig_field(terms, shape, geometry="torus", depth=None, parity=None) -> SpectralField:
    """Scalar field from ``[(amplitude, (k1, k2[, k3]), kind), ...]``.

    ``kind`` is ``"cos"`` or ``"sin"`` of ``k.x``; mode indices are integers
    on the mode grid (for slabs the x3 index counts ``pi/L`` units).
    """
    f = zeros(shape, 1, geometry, depth, parity)
    c = np.zeros(f.coeffs.shape, dtype=complex)
    for amp, idx, kind in terms:
        pos = tuple(int(i) % n for i, n in zip(idx, shape))
        neg = tuple(int(-i) % n for i, n in zip(idx, shape))
        if kind == "cos":
            a, b = amp / 2, amp / 2
        elif kind == "sin":
            a, b = amp / 2j, -amp / 2j
        else:
            raise ValueError(kind)
        c[(0,) + pos] += a
        c[(0,) + neg] += b
    return f.with_coeffs(c)


def stack(fields: Sequence[SpectralField]) -> SpectralField:
    first = fields[0]
    c = np.concatenate([f.coeffs for f in fields])
    par = None
    if first.geometry == "slab":
        par = tuple(p for f in fields for p in f.parity)
    return replace(first, coeffs=c, parity=par)


# -- snapshot file format -----------------------------------------------------
#
# magic "GVRYFLD1" | uint32 little-endian header length | UTF-8 JSON header |
# coefficients as little-endian float64 (re, im) pairs, array shape
# (ncomp, n1, n2[, n3]) in C order over FFT-ordered wavevectors.


def save_field(path, f: SpectralField) -> None:
    header = {
        "geometry": f.geometry,
        "shape": list(f.shape),
        "components": f.ncomp,
        "K_max": f.k_max,
        "time": f.time,
        "depth": f.depth,
        "parity": list(f.parity) if f.parity is not None else None,
        "meta": f.meta,
    }
    h = json.dumps(header, sort_keys=True).encode()
    data = np.ascontiguousarray(f.coeffs).view("<f8") if f.coeffs.dtype == np.complex128 else None
    if data is None:
        data = np.ascontiguousarray(f.coeffs.astype(np.complex128)).view("<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(h)))
        fh.write(h)
        fh.write(data.astype("<f8").tobytes())


def load_field(path) -> SpectralField:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"{path}: not a field snapshot")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    shape = (header["components"],) + tuple(header["shape"])
    # reinterpret the (re, im) pairs directly so signed zeros survive
    coeffs = raw.view("<c16").reshape(shape).astype(complex)
    par = tuple(header["parity"]) if header["parity"] is not None else None
    return SpectralField(coeffs, header["geometry"], header["depth"], par, header["time"], header.get("meta") or {})
