"""Nearest-neighbour chain Hamiltonians with on-site impurity perturbations.

A model is a pair: a nearest-neighbour interaction (one Hermitian bond matrix
per bond, translation-invariant by default) and a set of on-site impurities.
Each impurity carries a nondegenerate Hermitian on-site operator, stored as
its spectral data (eigenvalues plus rank-one projectors), and a real coupling.

Besides the perturbed Hamiltonian itself, this module builds the comparison
Hamiltonian that is block-diagonal with respect to one impurity's eigenbasis:
the two bonds touching the impurity site are compressed by the projector
sandwich sum_j P_j (bond terms) P_j, which severs all transitions between
impurity eigenspaces and makes the two half-chains evolve independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import ChainGeometry, SiteSupport, SupportError
from .operators import (
    HERMITICITY_TOL,
    DenseOperator,
    HermiticityError,
    PAULI,
    embed_local,
    hermitian_spectral,
    identity_matrix,
    operator_norm,
)

DEGENERACY_TOL = 1e-8
PROJECTOR_TOL = 1e-10
UNIFORMITY_TOL = 1e-12


class ModelFormatError(ValueError):
    """A model description file is malformed; the message carries the JSON path."""


def _check_hermitian(m: np.ndarray, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {m.shape}")
    defect = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if defect > HERMITICITY_TOL:
        raise HermiticityError(f"{what} is not Hermitian: max |M - M^dag| = {defect:.3e}")
    return m


class NNInteraction:
    """Nearest-neighbour bond terms, one Hermitian matrix per bond (x, x+1)."""

    def __init__(self, geom: ChainGeometry, uniform_bond=None, bonds=None):
        self.geom = geom
        d2 = geom.local_dim ** 2
        terms: dict[int, np.ndarray] = {}
        if uniform_bond is not None:
            u = _check_hermitian(uniform_bond, "uniform bond term")
            if u.shape[0] != d2:
                raise ValueError(f"bond term must be {d2} x {d2} for local_dim {geom.local_dim}")
            for x in range(-geom.half_length, geom.half_length):
                terms[x] = u
        if bonds is not None:
            for x, m in bonds.items():
                if not (-geom.half_length <= x <= geom.half_length - 1):
                    raise SupportError(f"bond ({x}, {x + 1}) outside chain")
                b = _check_hermitian(m, f"bond term at ({x}, {x + 1})")
                if b.shape[0] != d2:
                    raise ValueError(f"bond term at ({x}, {x + 1}) must be {d2} x {d2}")
                terms[x] = b
        self._terms = terms
        self._zero = np.zeros((d2, d2), dtype=complex)

    @classmethod
    def zero(cls, geom: ChainGeometry) -> NNInteraction:
        return cls(geom)

    def bond(self, x: int) -> np.ndarray:
        """Bond term on (x, x+1); zero matrix if the bond is absent."""
        if not (-self.geom.half_length <= x <= self.geom.half_length - 1):
            raise SupportError(f"bond ({x}, {x + 1}) outside chain")
        return self._terms.get(x, self._zero)

    def bond_operator(self, x: int) -> DenseOperator:
        return DenseOperator(SiteSupport(x, x + 1), self.bond(x))

    @property
    def strength(self) -> float:
        """Largest bond norm, the interaction strength entering every bound."""
        if not self._terms:
            return 0.0
        return max(operator_norm(m) for m in self._terms.values())


@dataclass(frozen=True)
class SiteImpurity:
    """Spectral data of one nondegenerate on-site Hermitian perturbation."""

    site: int
    eigenvalues: np.ndarray   # (D,) real, pairwise distinct
    projectors: np.ndarray    # (D, D, D) rank-one, orthogonal, complete

    def __post_init__(self):
        evals = np.asarray(self.eigenvalues, dtype=float)
        projs = np.asarray(self.projectors, dtype=complex)
        d = evals.shape[0]
        if evals.ndim != 1 or d < 2:
            raise ValueError("impurity needs at least two eigenvalues")
        if projs.shape != (d, d, d):
            raise ValueError(f"expected {d} projectors of shape {d} x {d}, got {projs.shape}")
        gaps = np.abs(evals[:, None] - evals[None, :])
        min_gap = float(np.min(gaps[~np.eye(d, dtype=bool)]))
        if min_gap < DEGENERACY_TOL:
            raise ValueError(
                f"impurity eigenvalues at site {self.site} are degenerate within {DEGENERACY_TOL:.0e} "
                f"(smallest gap {min_gap:.3e}); only nondegenerate on-site terms are supported"
            )
        for j in range(d):
            p = projs[j]
            if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL:
                raise ValueError(f"projector {j} at site {self.site} is not Hermitian")
            if abs(np.trace(p) - 1.0) > PROJECTOR_TOL:
                raise ValueError(f"projector {j} at site {self.site} is not rank one")
            for k in range(d):
                prod = projs[j] @ projs[k]
                want = projs[j] if j == k else 0.0
                if np.max(np.abs(prod - want)) > PROJECTOR_TOL:
                    raise ValueError(f"projectors {j}, {k} at site {self.site} are not orthogonal idempotents")
        if np.max(np.abs(projs.sum(axis=0) - identity_matrix(d))) > PROJECTOR_TOL:
            raise ValueError(f"projectors at site {self.site} do not sum to the identity")
        evals.setflags(write=False)
        projs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", evals)
        object.__setattr__(self, "projectors", projs)

    @classmethod
    def from_hermitian(cls, site: int, matrix, degeneracy_tol: float = DEGENERACY_TOL) -> SiteImpurity:
        """Spectrally decompose a Hermitian D x D matrix into impurity data."""
        m = _check_hermitian(matrix, f"impurity matrix at site {site}")
        evals, u = hermitian_spectral(m)
        if np.min(np.diff(evals)) < degeneracy_tol:
            raise ValueError(
                f"impurity matrix at site {site} has eigenvalues closer than {degeneracy_tol:.0e}; "
                "degenerate on-site terms are not supported"
            )
        projs = np.stack([np.outer(u[:, j], u[:, j].conj()) for j in range(m.shape[0])])
        return cls(site, evals, projs)

    @property
    def local_dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def gap(self) -> float:
        """Smallest distance between two eigenvalues."""
        evals = np.sort(self.eigenvalues)
        return float(np.min(np.diff(evals)))

    def matrix(self) -> np.ndarray:
        return np.tensordot(self.eigenvalues, self.projectors, axes=(0, 0))


class ImpuritySpec:
    """A finite set of site impurities with nonzero real couplings."""

    def __init__(self, impurities=(), couplings=None):
        imps = sorted(impurities, key=lambda i: i.site)
        sites = [i.site for i in imps]
        if len(set(sites)) != len(sites):
            raise ValueError(f"duplicate impurity sites: {sites}")
        couplings = dict(couplings or {})
        if set(couplings) != set(sites):
            raise ValueError(
                f"couplings must be given for exactly the impurity sites {sites}, "
                f"got {sorted(couplings)}"
            )
        for x, lam in couplings.items():
            lam = float(lam)
            if lam == 0.0 or not np.isfinite(lam):
                raise ValueError(f"impurity coupling at site {x} must be nonzero and finite, got {lam}")
            couplings[x] = lam
        dims = {i.local_dim for i in imps}
        if len(dims) > 1:
            raise ValueError(f"impurities have inconsistent local dimensions {sorted(dims)}")
        self.impurities = tuple(imps)
        self.couplings = couplings

    @classmethod
    def empty(cls) -> ImpuritySpec:
        return cls()

    @classmethod
    def uniform(cls, sites, hermitian_matrix, coupling) -> ImpuritySpec:
        """Same on-site matrix at every listed site; scalar or per-site couplings."""
        sites = list(sites)
        if np.isscalar(coupling):
            couplings = {x: float(coupling) for x in sites}
        else:
            couplings = {x: float(coupling[x]) for x in sites}
        imps = [SiteImpurity.from_hermitian(x, hermitian_matrix) for x in sites]
        return cls(imps, couplings)

    @property
    def sites(self) -> tuple:
        return tuple(i.site for i in self.impurities)

    def is_empty(self) -> bool:
        return not self.impurities

    def has(self, site: int) -> bool:
        return site in self.couplings

    def at(self, site: int) -> SiteImpurity:
        for i in self.impurities:
            if i.site == site:
                return i
        raise KeyError(f"no impurity at site {site}")

    def coupling(self, site: int) -> float:
        return self.couplings[site]

    def coupling_gap_product(self, sites) -> float:
        """prod over the listed sites of |coupling| * eigenvalue gap."""
        out = 1.0
        for x in sites:
            out *= abs(self.coupling(x)) * self.at(x).gap
        return out

    def is_uniform(self, tol: float = UNIFORMITY_TOL) -> bool:
        """Same on-site matrix and same coupling at every impurity site."""
        if len(self.impurities) <= 1:
            return True
        first = self.impurities[0].matrix()
        lam0 = self.couplings[self.impurities[0].site]
        scale = max(float(np.max(np.abs(first))), 1.0)
        for i in self.impurities[1:]:
            if np.max(np.abs(i.matrix() - first)) > tol * scale:
                return False
            if abs(self.couplings[i.site] - lam0) > tol * max(abs(lam0), 1.0):
                return False
        return True


def min_spacing(imp: ImpuritySpec) -> float:
    """Smallest distance between two impurity sites; inf for a single site."""
    if imp.is_empty():
        raise ValueError("min_spacing needs at least one impurity site")
    sites = sorted(imp.sites)
    if len(sites) == 1:
        return float("inf")
    return float(min(b - a for a, b in zip(sites, sites[1:])))


def impurity_window(support_a: SiteSupport, support_b: SiteSupport, imp: ImpuritySpec) -> tuple:
    """Impurity sites in [max S_A + 3, min S_B - 3], the ones the bound can exploit."""
    lo = support_a.hi + 3
    hi = support_b.lo - 3
    return tuple(x for x in imp.sites if lo <= x <= hi)


def build_nn_hamiltonian(phi: NNInteraction, geom: ChainGeometry) -> DenseOperator:
    """Sum of all bond terms, embedded on the full chain."""
    full = geom.full_support
    h = np.zeros((geom.total_dim, geom.total_dim), dtype=complex)
    for x in range(-geom.half_length, geom.half_length):
        b = phi.bond(x)
        if not np.any(b):
            continue
        h += embed_local(DenseOperator(SiteSupport(x, x + 1), b), full, geom).matrix
    return DenseOperator(full, h)


def perturbation_operator(imp: ImpuritySpec, geom: ChainGeometry, exclude: int | None = None) -> DenseOperator:
    """Sum over impurity sites of coupling * on-site matrix, embedded on the chain.

    `exclude` drops one site from the sum, which is the perturbation seen by
    the chain decoupled at that site.
    """
    full = geom.full_support
    h = np.zeros((geom.total_dim, geom.total_dim), dtype=complex)
    for i in imp.impurities:
        if i.site == exclude:
            continue
        geom.check_site(i.site)
        if i.local_dim != geom.local_dim:
            raise ValueError(f"impurity at site {i.site} has local dimension {i.local_dim}, chain has {geom.local_dim}")
        term = DenseOperator.single_site(i.site, imp.coupling(i.site) * i.matrix())
        h += embed_local(term, full, geom).matrix
    return DenseOperator(full, h)


def build_perturbed_hamiltonian(phi: NNInteraction, imp: ImpuritySpec, geom: ChainGeometry) -> DenseOperator:
    """Full Hamiltonian: bond terms plus coupled impurities."""
    return build_nn_hamiltonian(phi, geom) + perturbation_operator(imp, geom)


def _check_decoupling_site(imp: ImpuritySpec, site: int, geom: ChainGeometry) -> SiteImpurity:
    if not imp.has(site):
        raise ValueError(f"site {site} carries no impurity; decoupling is defined at impurity sites only")
    lo, hi = -geom.half_length + 2, geom.half_length - 2
    if not (lo <= site <= hi):
        raise SupportError(
            f"decoupling at site {site} needs both touching bonds plus a neighbour on each side; "
            f"site must lie in [{lo}, {hi}]"
        )
    return imp.at(site)


def _window_terms(phi: NNInteraction, site: int, geom: ChainGeometry):
    """The two bonds touching `site`, as matrices on the window [site-1, site+1]."""
    d = geom.local_dim
    left = np.kron(phi.bond(site - 1), identity_matrix(d))
    right = np.kron(identity_matrix(d), phi.bond(site))
    return left + right


def _window_projector(impurity: SiteImpurity, j: int, geom: ChainGeometry) -> np.ndarray:
    d = geom.local_dim
    return np.kron(np.kron(identity_matrix(d), impurity.projectors[j]), identity_matrix(d))


def build_decoupled_hamiltonian(phi: NNInteraction, imp: ImpuritySpec, site: int, geom: ChainGeometry) -> DenseOperator:
    """Bond Hamiltonian with the two bonds at `site` compressed to block-diagonal form.

    The returned operator contains no impurity couplings; add
    `perturbation_operator(imp, geom)` to perturb it.  It commutes with the
    on-site impurity matrix at `site` by construction.
    """
    impurity = _check_decoupling_site(imp, site, geom)
    full = geom.full_support
    window = SiteSupport(site - 1, site + 1)
    raw = _window_terms(phi, site, geom)
    compressed = np.zeros_like(raw)
    for j in range(geom.local_dim):
        p = _window_projector(impurity, j, geom)
        compressed += p @ raw @ p
    h = build_nn_hamiltonian(phi, geom).matrix
    h = h - embed_local(DenseOperator(window, raw), full, geom).matrix
    h = h + embed_local(DenseOperator(window, compressed), full, geom).matrix
    return DenseOperator(full, h)


def decoupled_split(phi: NNInteraction, imp: ImpuritySpec, site: int, geom: ChainGeometry):
    """The decoupled Hamiltonian as a commuting (left, right) pair.

    Left piece: every bond strictly left of `site` plus the compressed bond
    (site-1, site), supported on [-L, site].  Right piece: the compressed
    bond (site, site+1) plus every bond strictly right, supported on
    [site, L].  Both are returned embedded on the full chain; they commute
    and sum to `build_decoupled_hamiltonian`.
    """
    impurity = _check_decoupling_site(imp, site, geom)
    d = geom.local_dim
    full = geom.full_support
    L = geom.half_length

    left_support = SiteSupport(-L, site)
    dim_left = geom.dim_of(left_support)
    left = np.zeros((dim_left, dim_left), dtype=complex)
    for y in range(-L, site - 1):
        left += embed_local(phi.bond_operator(y), left_support, geom).matrix
    sandwich = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        p = np.kron(identity_matrix(d), impurity.projectors[j])
        sandwich += p @ phi.bond(site - 1) @ p
    left += embed_local(DenseOperator(SiteSupport(site - 1, site), sandwich), left_support, geom).matrix

    right_support = SiteSupport(site, L)
    dim_right = geom.dim_of(right_support)
    right = np.zeros((dim_right, dim_right), dtype=complex)
    sandwich = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        p = np.kron(impurity.projectors[j], identity_matrix(d))
        sandwich += p @ phi.bond(site) @ p
    right += embed_local(DenseOperator(SiteSupport(site, site + 1), sandwich), right_support, geom).matrix
    for y in range(site + 1, L):
        right += embed_local(phi.bond_operator(y), right_support, geom).matrix

    return (
        embed_local(DenseOperator(left_support, left), full, geom),
        embed_local(DenseOperator(right_support, right), full, geom),
    )


def offdiagonal_block(phi: NNInteraction, imp: ImpuritySpec, site: int, j: int, k: int, geom: ChainGeometry) -> DenseOperator:
    """P_j (bonds at site) P_k for j != k: one off-diagonal transition block.

    These blocks are exactly what the full Hamiltonian has and the decoupled
    one lacks; summed over j != k they reproduce the difference.  Supported
    on [site-1, site+1].
    """
    impurity = _check_decoupling_site(imp, site, geom)
    d = geom.local_dim
    if not (0 <= j < d and 0 <= k < d):
        raise ValueError(f"block indices must lie in [0, {d}), got ({j}, {k})")
    if j == k:
        raise ValueError("off-diagonal block needs j != k; the diagonal blocks stay in the decoupled part")
    raw = _window_terms(phi, site, geom)
    pj = _window_projector(impurity, j, geom)
    pk = _window_projector(impurity, k, geom)
    return DenseOperator(SiteSupport(site - 1, site + 1), pj @ raw @ pk)


# ---------------------------------------------------------------------------
# model description files

def _fmt_path(*parts) -> str:
    out = ""
    for p in parts:
        if isinstance(p, int):
            out += f"[{p}]"
        else:
            out += ("." if out else "") + str(p)
    return out


def _parse_entry(node, where: str) -> complex:
    if isinstance(node, (int, float)):
        return complex(node)
    if isinstance(node, list) and len(node) == 2 and all(isinstance(v, (int, float)) for v in node):
        return complex(node[0], node[1])
    raise ModelFormatError(f"{where}: matrix entry must be a number or a [re, im] pair, got {node!r}")


def _parse_matrix(node, dim: int, where: str) -> np.ndarray:
    if isinstance(node, str):
        if node in PAULI:
            m = PAULI[node]
            if dim != 2:
                raise ModelFormatError(f"{where}: named matrix {node!r} needs local dimension 2, model has {dim}")
            return np.array(m)
        raise ModelFormatError(f"{where}: unknown named matrix {node!r}; known names: {sorted(PAULI)}")
    if not isinstance(node, list) or len(node) != dim:
        raise ModelFormatError(f"{where}: expected {dim} matrix rows")
    rows = []
    for i, row in enumerate(node):
        if not isinstance(row, list) or len(row) != dim:
            raise ModelFormatError(f"{where}[{i}]: expected {dim} entries per row")
        rows.append([_parse_entry(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=complex)


def _require(mapping, key, kind, where: str):
    if key not in mapping:
        raise ModelFormatError(f"{where}: missing required key {key!r}")
    val = mapping[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ModelFormatError(f"{_fmt_path(where, key)}: expected a number, got {val!r}")
        return float(val)
    if kind is int:
        if not isinstance(val, int) or isinstance(val, bool):
            raise ModelFormatError(f"{_fmt_path(where, key)}: expected an integer, got {val!r}")
        return val
    return val


def load_model(path) -> tuple[ChainGeometry, NNInteraction, ImpuritySpec]:
    """Read a chain model from a JSON description file.

    Keys: L (half-length), D (local dimension), then bond terms as either
    `bond_matrix` (one D^2 x D^2 matrix replicated on every bond) or `bonds`
    (map from left bond site to a matrix; may override `bond_matrix`), and an
    optional `impurities` list with entries
    {"site": int, "coupling": float, "hermitian": matrix-or-name} or
    {"site": int, "coupling": float, "eigenvalues": [...], "projectors": [...]}.
    Matrix entries are numbers or [re, im] pairs, rows in row-major site order.
    Errors carry the JSON path of the offending node (or line/column for
    syntax errors).
    """
    path = str(path)
    try:
        with open(path) as fh:
            raw = fh.read()
        doc = json.loads(raw)
    except OSError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top-level value must be an object")

    half_length = _require(doc, "L", int, path)
    local_dim = _require(doc, "D", int, path)
    try:
        geom = ChainGeometry(half_length, local_dim)
    except ValueError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc

    d2 = local_dim ** 2
    uniform = None
    if "bond_matrix" in doc:
        uniform = _parse_matrix(doc["bond_matrix"], d2, _fmt_path(path, "bond_matrix"))
    bonds = None
    if "bonds" in doc:
        node = doc["bonds"]
        if not isinstance(node, dict):
            raise ModelFormatError(f"{_fmt_path(path, 'bonds')}: expected an object keyed by bond site")
        bonds = {}
        for key, val in node.items():
            try:
                x = int(key)
            except ValueError:
                raise ModelFormatError(f"{_fmt_path(path, 'bonds')}: key {key!r} is not an integer site") from None
            bonds[x] = _parse_matrix(val, d2, _fmt_path(path, "bonds", key))
    try:
        phi = NNInteraction(geom, uniform_bond=uniform, bonds=bonds)
    except (ValueError, SupportError) as exc:
        raise ModelFormatError(f"{_fmt_path(path, 'bonds')}: {exc}") from exc

    impurities = []
    couplings = {}
    node = doc.get("impurities", [])
    if not isinstance(node, list):
        raise ModelFormatError(f"{_fmt_path(path, 'impurities')}: expected a list")
    for i, entry in enumerate(node):
        where = _fmt_path(path, "impurities", i)
        if not isinstance(entry, dict):
            raise ModelFormatError(f"{where}: expected an object")
        site = _require(entry, "site", int, where)
        try:
            geom.check_site(site)
        except SupportError as exc:
            raise ModelFormatError(f"{_fmt_path(where, 'site')}: {exc}") from exc
        coupling = _require(entry, "coupling", float, where)
        try:
            if "hermitian" in entry:
                matrix = _parse_matrix(entry["hermitian"], local_dim, _fmt_path(where, "hermitian"))
                impurity = SiteImpurity.from_hermitian(site, matrix)
            elif "eigenvalues" in entry or "projectors" in entry:
                evals = entry.get("eigenvalues")
                projs = entry.get("projectors")
                if not isinstance(evals, list) or len(evals) != local_dim:
                    raise ModelFormatError(f"{_fmt_path(where, 'eigenvalues')}: expected {local_dim} numbers")
                if not all(isinstance(v, (int, float)) for v in evals):
                    raise ModelFormatError(f"{_fmt_path(where, 'eigenvalues')}: entries must be real numbers")
                if not isinstance(projs, list) or len(projs) != local_dim:
                    raise ModelFormatError(f"{_fmt_path(where, 'projectors')}: expected {local_dim} matrices")
                pmats = np.stack([
                    _parse_matrix(p, local_dim, _fmt_path(where, "projectors", j)) for j, p in enumerate(projs)
                ])
                impurity = SiteImpurity(site, np.array(evals, dtype=float), pmats)
            else:
                raise ModelFormatError(f"{where}: need either 'hermitian' or 'eigenvalues' + 'projectors'")
        except ModelFormatError:
            raise
        except (ValueError, HermiticityError) as exc:
            raise ModelFormatError(f"{where}: {exc}") from exc
        impurities.append(impurity)
        if site in couplings:
            raise ModelFormatError(f"{_fmt_path(where, 'site')}: duplicate impurity site {site}")
        couplings[site] = coupling
    try:
        imp = ImpuritySpec(impurities, couplings)
    except ValueError as exc:
        raise ModelFormatError(f"{_fmt_path(path, 'impurities')}: {exc}") from exc
    return geom, phi, imp
