"""Reproducible random-matrix sampling.

Complex Gaussian matrices, isotropically distributed truncated unitary
matrices (exact Haar law via QR with phase fixing), and descending Hermitian
eigenvalues with an explicit degenerate-spectrum rejection.

All sampling is driven by counter-based Philox streams keyed on
``(master_seed, stream_index)``, so results are bit-identical for a given key
regardless of how work is split across processes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateSpectrum",
    "RngStream",
    "derive_stream_index",
    "sample_complex_gaussian",
    "sample_complex_wishart",
    "sample_isotropic_columns",
    "sample_scaled_gram",
    "eigvals_descending",
    "eigvals_descending_batch",
]

# relative gap below which two eigenvalues are treated as coincident
DEGENERACY_RTOL = 1e-10


class DegenerateSpectrum(ValueError):
    """Two eigenvalues coincide within tolerance; the draw must be rejected."""


def derive_stream_index(*fields) -> int:
    """Deterministic 64-bit stream index from a tuple of labels.

    Distinct field tuples map to distinct indices with overwhelming
    probability, which keeps substreams (grid point x antenna count x block x
    chunk) disjoint without any central bookkeeping.
    """
    h = hashlib.blake2b(repr(fields).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True)
class RngStream:
    """A value-semantics handle for one independent random stream."""

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.master_seed & (2**64 - 1), self.stream_index & (2**64 - 1))
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *fields) -> "RngStream":
        return RngStream(self.master_seed, derive_stream_index(self.stream_index, *fields))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


def sample_complex_gaussian(rows: int, cols: int, rng, size=None) -> np.ndarray:
    """i.i.d. CN(0,1) matrix draws (unit variance split evenly over re/im).

    With ``size=None`` returns a single (rows, cols) matrix, else
    (size, rows, cols).
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    g = _as_generator(rng)
    shape = (rows, cols) if size is None else (size, rows, cols)
    z = g.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def sample_complex_wishart(dim: int, dof: int, rng, size=None) -> np.ndarray:
    """Complex Wishart draws W = Z^H Z with Z i.i.d. CN(0,1) of shape (dof, dim).

    Sampled through the Bartlett decomposition W = L L^H with L lower
    triangular, |L_ii|^2 ~ Gamma(dof - i, 1) and L_ij ~ CN(0,1) for i > j,
    which costs O(dim^2) random values per draw instead of O(dof * dim).
    """
    if dim < 1 or dof < dim:
        raise ValueError("need dof >= dim >= 1")
    g = _as_generator(rng)
    n = 1 if size is None else size
    ell = np.zeros((n, dim, dim), dtype=complex)
    for i in range(dim):
        ell[:, i, i] = np.sqrt(g.standard_gamma(dof - i, size=n))
    if dim > 1:
        ii, jj = np.tril_indices(dim, k=-1)
        ell[:, ii, jj] = sample_complex_gaussian(n, len(ii), g)
    w = ell @ np.swapaxes(ell, -1, -2).conj()
    return w[0] if size is None else w


def sample_scaled_gram(extra, n_c: int, m_r: int, rng, size=None):
    """Draws of (eigs of Z^H D Z descending, tr Z^H Z) for Z i.i.d. CN(0,1).

    D = diag(1 + extra_1, ..., 1 + extra_k, 1, ..., 1) over the n_c rows.
    Only the k scaled rows are sampled explicitly; the Gram of the remaining
    n_c - k rows is a complex Wishart drawn via ``sample_complex_wishart``,
    so the cost per draw is O(k m_r + m_r^2) instead of O(n_c m_r).
    Draws with a (nearly) degenerate spectrum are resampled.
    """
    extra = np.atleast_1d(np.asarray(extra, dtype=float))
    k = extra.size
    if np.any(extra < 0):
        raise ValueError("row power offsets must be nonnegative")
    if n_c - k < m_r:
        raise ValueError("need n_c - k >= m_r for the residual Wishart factor")
    g = _as_generator(rng)
    n = 1 if size is None else size

    def stats(m):
        za = sample_complex_gaussian(k, m_r, g, size=m)
        gram = sample_complex_wishart(m_r, n_c - k, g, size=m)
        tr = np.einsum("bii->b", gram).real + np.sum(np.abs(za) ** 2, axis=(1, 2))
        gram += np.einsum("bti,t,btj->bij", za.conj(), 1.0 + extra, za)
        lam, bad = eigvals_descending_batch(gram)
        return lam, tr, bad

    lam, tr, bad = stats(n)
    for _ in range(100):
        if not np.any(bad):
            break
        idx = np.flatnonzero(bad)
        lam[idx], tr[idx], bad[idx] = stats(len(idx))
    else:
        raise RuntimeError("persistent degenerate spectra")
    if size is None:
        return lam[0], float(tr[0])
    return lam, tr


def sample_isotropic_columns(n: int, m: int, rng, size=None) -> np.ndarray:
    """Haar-distributed n x m matrix with orthonormal columns.

    QR of a complex Gaussian matrix, with the diagonal of R normalized to be
    real positive so the law is exactly invariant under fixed unitaries.
    """
    if not (n >= m >= 1):
        raise ValueError("need n >= m >= 1")
    z = sample_complex_gaussian(n, m, rng, size=size)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    return q * phase.conj()[..., None, :]


def _check_distinct(vals: np.ndarray) -> np.ndarray:
    """Boolean mask (over leading axes) of spectra with a degenerate pair."""
    if vals.shape[-1] < 2:
        return np.zeros(vals.shape[:-1], dtype=bool)
    gap = vals[..., :-1] - vals[..., 1:]
    scale = np.maximum(np.abs(vals[..., :-1]), np.abs(vals[..., 1:]))
    return np.any(gap <= DEGENERACY_RTOL * scale, axis=-1)


def eigvals_descending(a: np.ndarray) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix, strictly descending.

    The input is symmetrized as (A + A^H)/2 before the solve.  Raises
    ``DegenerateSpectrum`` if two eigenvalues coincide within relative
    tolerance 1e-10 (callers resample).
    """
    a = np.asarray(a)
    vals = np.linalg.eigvalsh((a + np.conj(np.swapaxes(a, -1, -2))) / 2.0)
    vals = vals[..., ::-1]
    if np.any(_check_distinct(vals)):
        raise DegenerateSpectrum("eigenvalues coincide within 1e-10 relative")
    return vals


def eigvals_descending_batch(a: np.ndarray):
    """Batched variant: returns (values, degenerate_mask) without raising."""
    a = np.asarray(a)
    if a.shape[-2:] == (2, 2):
        # closed form; the LAPACK batched path dominates sampling cost here
        p = a[..., 0, 0].real
        r = a[..., 1, 1].real
        q = (a[..., 0, 1] + np.conj(a[..., 1, 0])) / 2.0
        mean = (p + r) / 2.0
        disc = np.sqrt(((p - r) / 2.0) ** 2 + np.abs(q) ** 2)
        vals = np.stack([mean + disc, mean - disc], axis=-1)
    else:
        vals = np.linalg.eigvalsh((a + np.conj(np.swapaxes(a, -1, -2))) / 2.0)
        vals = vals[..., ::-1]
    return vals, _check_distinct(vals)
