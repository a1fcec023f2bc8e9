"""Independent numerical oracles for the test suite.

Every oracle recomputes its quantity by a different route than the library
(explicit index loops, eigvalsh instead of SVD, direct summation, einsum
instead of axis-paired traces), so agreement between the two is evidence of
correctness rather than a tautology.
"""

from __future__ import annotations

import string

import numpy as np


def random_hermitian(rng, dim: int, norm: float | None = None) -> np.ndarray:
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = m + m.conj().T
    if norm is not None:
        m = m * (norm / np.linalg.norm(m, 2))
    return m


def random_complex(rng, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def kron_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product by quadruple index loop (no np.kron)."""
    da, db = a.shape[0], b.shape[0]
    out = np.zeros((da * db, da * db), dtype=complex)
    for i in range(da):
        for j in range(da):
            for k in range(db):
                for l in range(db):
                    out[i * db + k, j * db + l] = a[i, j] * b[k, l]
    return out


def embed_oracle(m: np.ndarray, n_left: int, n_right: int, d: int) -> np.ndarray:
    """Identity padding by explicit index arithmetic (no np.kron)."""
    dl, dm, dr = d**n_left, m.shape[0], d**n_right
    out = np.zeros((dl * dm * dr, dl * dm * dr), dtype=complex)
    for il in range(dl):
        for im in range(dm):
            for jm in range(dm):
                for ir in range(dr):
                    out[(il * dm + im) * dr + ir, (il * dm + jm) * dr + ir] = m[im, jm]
    return out


def norm_oracle(m: np.ndarray) -> float:
    """Largest singular value via the top eigenvalue of M^dag M (no SVD)."""
    if m.size == 0:
        return 0.0
    evals = np.linalg.eigvalsh(m.conj().T @ m)
    return float(np.sqrt(max(float(evals[-1]), 0.0)))


def conditional_expectation_oracle(m: np.ndarray, n_sites: int, d: int, keep: set) -> np.ndarray:
    """Normalized partial trace over sites not in `keep`, re-embedded, via einsum.

    Sites are indexed 0..n_sites-1 left to right; `m` is d^n x d^n in that
    product basis.  Traced sites reuse one einsum letter on row and column
    (diagonal sum); kept sites keep distinct letters and are re-embedded as
    identity on the traced slots.
    """
    letters = string.ascii_lowercase
    t = m.reshape((d,) * (2 * n_sites))
    row = list(letters[:n_sites])
    col = list(letters[n_sites : 2 * n_sites])
    out_row, out_col = [], []
    for site in range(n_sites):
        if site in keep:
            out_row.append(row[site])
            out_col.append(col[site])
        else:
            col[site] = row[site]  # repeated letter: einsum sums the diagonal
    spec = "".join(row) + "".join(col) + "->" + "".join(out_row) + "".join(out_col)
    kept_dim = d ** len(out_row)
    traced = n_sites - len(out_row)
    block = np.einsum(spec, t).reshape(kept_dim, kept_dim) / d**traced
    kept_sorted = sorted(keep)
    n_left = kept_sorted[0] if kept_sorted else 0
    n_right = n_sites - 1 - kept_sorted[-1] if kept_sorted else n_sites
    return embed_oracle(block, n_left, n_right, d)


def c_mu_bruteforce(mu: float, radius: int) -> float:
    total = 0.0
    for x in range(-radius, radius + 1):
        total += np.exp(-mu * abs(x)) / (1 + abs(x)) ** 2
    return float(total)


def k_mu_bruteforce(mu: float, scan: int, z_radius: int) -> float:
    best = 0.0
    for n in range(scan + 1):
        total = 0.0
        for z in range(-z_radius, z_radius + 1):
            expo = abs(z) + abs(n - z) - n
            total += np.exp(-mu * expo) * (1 + n) ** 2 / ((1 + abs(z)) ** 2 * (1 + abs(n - z)) ** 2)
        best = max(best, total)
    return float(best)


def chain_hamiltonian_oracle(bonds: dict, fields: dict, half_length: int, d: int) -> np.ndarray:
    """Full-chain Hamiltonian by direct identity padding of each term.

    `bonds` maps the left site x of bond (x, x+1) to a d^2 x d^2 matrix;
    `fields` maps a site to a d x d matrix (already scaled by its coupling).
    """
    n = 2 * half_length + 1
    dim = d**n
    h = np.zeros((dim, dim), dtype=complex)
    for x, m in bonds.items():
        h += embed_oracle(m, x + half_length, half_length - 1 - x, d)
    for x, m in fields.items():
        h += embed_oracle(m, x + half_length, half_length - x, d)
    return h


def heavy_tail_cdf(a: float, r) -> np.ndarray:
    """Distribution function 1 - r^(-a) on [1, inf)."""
    r = np.asarray(r, dtype=float)
    return np.where(r < 1.0, 0.0, 1.0 - r ** (-a))
