"""Exact Heisenberg-picture dynamics via cached spectral decompositions.

Everything here is exact diagonalization: a Hamiltonian is decomposed once,
then any observable is conjugated through the eigenbasis for any time.  No
time stepping, no truncation; the only error is floating point.

The second half of the module drives the decoupling comparison used by the
impurity-improved commutator bounds: it packages the dynamics generated by
the perturbed chain, by the chain decoupled at one impurity site, and by the
decoupled chain with that one coupling removed, and evaluates the
interpolating double commutator (and its time derivative) that connects the
full and decoupled evolutions of an observable.
"""

from __future__ import annotations

import numpy as np

from .geometry import ChainGeometry, SiteSupport, SupportError
from .model import (
    ImpuritySpec,
    NNInteraction,
    build_decoupled_hamiltonian,
    build_perturbed_hamiltonian,
    min_spacing,
    offdiagonal_block,
    perturbation_operator,
)
from .operators import DenseOperator, commutator, embed_local, hermitian_spectral, operator_norm

RECONSTRUCTION_TOL = 1e-10


class EvolutionContext:
    """One Hamiltonian, eigendecomposed once, evolving any observable exactly."""

    def __init__(self, hamiltonian: DenseOperator, geom: ChainGeometry):
        if hamiltonian.support != geom.full_support:
            raise SupportError(
                f"evolution needs a full-chain Hamiltonian, got support {hamiltonian.support}"
            )
        hamiltonian.validate_dim(geom)
        self.geom = geom
        self.hamiltonian = hamiltonian
        self.eigenvalues, self.eigenvectors = hermitian_spectral(hamiltonian.matrix)
        rebuilt = (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T
        scale = max(float(np.linalg.norm(hamiltonian.matrix)), 1e-300)
        residual = float(np.linalg.norm(rebuilt - hamiltonian.matrix)) / scale
        if residual > RECONSTRUCTION_TOL:
            raise ValueError(f"spectral reconstruction residual {residual:.3e} exceeds {RECONSTRUCTION_TOL:.0e}")

    def evolve(self, a: DenseOperator, t: float) -> DenseOperator:
        """Heisenberg evolution exp(itH) A exp(-itH), embedded on the full chain."""
        full = embed_local(a, self.geom.full_support, self.geom)
        if t == 0.0:
            return full
        u = self.eigenvectors
        phases = np.exp(1j * t * self.eigenvalues)
        core = u.conj().T @ full.matrix @ u
        core *= phases[:, None] * phases.conj()[None, :]
        return DenseOperator(full.support, u @ core @ u.conj().T)


def heisenberg_evolve(ctx: EvolutionContext, a: DenseOperator, t: float) -> DenseOperator:
    return ctx.evolve(a, t)


def commutator_norm_evolved(ctx: EvolutionContext, a: DenseOperator, b: DenseOperator, t: float) -> float:
    """|| [ exp(itH) A exp(-itH), B ] || on the full chain."""
    evolved = ctx.evolve(a, t)
    b_full = embed_local(b, ctx.geom.full_support, ctx.geom)
    return operator_norm(commutator(evolved, b_full))


class DecoupledDynamics:
    """Dynamics of the perturbed chain against the chain decoupled at one impurity.

    Holds three evolution contexts over the same chain:

    * ``full``      - bond terms plus every coupled impurity;
    * ``decoupled`` - bonds compressed at ``site`` plus every coupled impurity;
    * ``reduced``   - bonds compressed at ``site``, every coupling except the
                      one at ``site``.

    The decoupled generator differs from the reduced one only by the on-site
    term at ``site``, which acts on the transition blocks as a pure phase;
    that is what makes the interpolant analysis below tractable.
    """

    def __init__(self, phi: NNInteraction, imp: ImpuritySpec, site: int, geom: ChainGeometry):
        self.geom = geom
        self.site = site
        self.impurity = imp.at(site)
        self.coupling = imp.coupling(site)
        self.spacing = min_spacing(imp)
        bare = build_decoupled_hamiltonian(phi, imp, site, geom)
        self.bare_decoupled = bare
        self.full = EvolutionContext(build_perturbed_hamiltonian(phi, imp, geom), geom)
        self.decoupled = EvolutionContext(bare + perturbation_operator(imp, geom), geom)
        self.reduced = EvolutionContext(bare + perturbation_operator(imp, geom, exclude=site), geom)
        d = geom.local_dim
        self._blocks = {}
        self._bare_block_commutators = {}
        for j in range(d):
            for k in range(d):
                if j == k:
                    continue
                block = offdiagonal_block(phi, imp, site, j, k, geom)
                full_block = embed_local(block, geom.full_support, geom)
                self._blocks[(j, k)] = full_block
                self._bare_block_commutators[(j, k)] = commutator(bare, full_block)

    def block(self, j: int, k: int) -> DenseOperator:
        """Transition block P_j (bonds at site) P_k, embedded on the full chain."""
        return self._blocks[(j, k)]

    def block_pairs(self):
        return sorted(self._blocks)

    def phase(self, j: int, k: int, s: float) -> complex:
        """exp(i s * coupling * (gamma_j - gamma_k)), the on-site rotation of block (j, k)."""
        gammas = self.impurity.eigenvalues
        return complex(np.exp(1j * s * self.coupling * (gammas[j] - gammas[k])))

    def blocking_residual(self, a: DenseOperator, b: DenseOperator, t: float) -> float:
        """|| [ decoupled evolution of A, B ] || for A, B on opposite sides of `site`.

        Exactly zero in exact arithmetic whenever A is supported strictly left
        and B strictly right of the decoupling site (or vice versa).
        """
        return commutator_norm_evolved(self.decoupled, a, b, t)

    def _check_interpolant_supports(self, a: DenseOperator, b: DenseOperator) -> None:
        if not (a.support.hi + 1 < self.site):
            raise SupportError(
                f"interpolant needs the first observable strictly left of site {self.site} "
                f"with a one-site buffer, got support {a.support}"
            )
        if not (self.site < b.support.lo):
            raise SupportError(
                f"interpolant needs the second observable strictly right of site {self.site}, "
                f"got support {b.support}"
            )

    def interpolant(self, a: DenseOperator, b: DenseOperator, j: int, k: int, s: float, t: float) -> DenseOperator:
        """Double commutator [[ block evolved to s, hybrid-evolved A ], B ].

        The hybrid evolution runs A for time t - s under the full chain, then
        for time s under the decoupled chain.  At s = t it vanishes
        identically; at s = 0 its norm controls how much the transition block
        (j, k) contributes to [full evolution of A, B].
        """
        self._check_interpolant_supports(a, b)
        x = self.reduced.evolve(self._blocks[(j, k)], s)
        y = self.decoupled.evolve(self.full.evolve(a, t - s), s)
        b_full = embed_local(b, self.geom.full_support, self.geom)
        return commutator(commutator(x, y), b_full)

    def interpolant_norm(self, a, b, j, k, s, t) -> float:
        return operator_norm(self.interpolant(a, b, j, k, s, t))

    def interpolant_derivative(self, a: DenseOperator, b: DenseOperator, j: int, k: int, s: float, t: float) -> DenseOperator:
        """Analytic d/ds of `interpolant`, valid when impurities are >= 2 apart.

        Two contributions: the block's own motion under the reduced generator
        (the removed coupling acts on the block as a pure phase, which the
        derivative of the phase-free block picks up as the commutator with
        the bare decoupled Hamiltonian), and the mismatch between full and
        decoupled generators acting on the hybrid-evolved observable, which
        is again a sum of transition blocks.
        """
        if self.spacing < 2:
            raise ValueError(
                f"analytic interpolant derivative needs impurity spacing >= 2, got {self.spacing}"
            )
        self._check_interpolant_supports(a, b)
        geom = self.geom
        b_full = embed_local(b, geom.full_support, geom)
        x = self.reduced.evolve(self._blocks[(j, k)], s)
        y = self.decoupled.evolve(self.full.evolve(a, t - s), s)

        moved = self.reduced.evolve(self._bare_block_commutators[(j, k)], s)
        out = 1j * commutator(commutator(moved, y), b_full).matrix

        for pair in self.block_pairs():
            rotated = self.decoupled.evolve(self._blocks[pair], s)
            inner = commutator(rotated, y)
            out -= 1j * commutator(commutator(x, inner), b_full).matrix
        return DenseOperator(geom.full_support, out)

    def interpolant_derivative_fd(self, a, b, j, k, s, t, step: float = 1e-4) -> DenseOperator:
        """Central finite difference of `interpolant` in s, for cross-checking."""
        hi = self.interpolant(a, b, j, k, s + step, t)
        lo = self.interpolant(a, b, j, k, s - step, t)
        return DenseOperator(hi.support, (hi.matrix - lo.matrix) / (2.0 * step))
