"""Per-sector Liouvillian blocks and the dense full-superoperator oracle.

The U(1) symmetry ``a -> a exp(i phi)`` makes every diagonal offset ``k`` of
the density matrix an invariant subspace. Sector ``k`` is spanned by the dyads
``|p><p-k|`` with ``p`` in :func:`sector_support`; its block has dimension
``n_max + 1 - |k|``.

The full superoperator uses row-major vectorization: dyad ``|m><n|`` has
composite index ``m * (n_max + 1) + n``.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.linalg import block_diag

from .errors import OracleGuardError, SectorError
from .models import ModelSpec

ORACLE_MAX_NMAX = 12


def sector_support(k, n_max) -> range:
    """Row indices ``p`` of the dyads ``|p><p-k|`` inside ``0..n_max``."""
    if abs(k) > n_max:
        raise SectorError(f"sector k={k} is empty for n_max={n_max}")
    return range(max(0, k), min(n_max, n_max + k) + 1)


@dataclass(frozen=True, eq=False)
class SectorMatrix:
    """Reduced Liouvillian acting on the coefficients of ``sum_p c_p |p><p-k|``."""

    k: int
    n_max: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def support(self) -> range:
        return sector_support(self.k, self.n_max)

    @property
    def norm(self) -> float:
        """Spectral norm, the scale for all relative tolerances."""
        return float(np.linalg.norm(self.entries, 2))


def build_sector_matrix(model: ModelSpec, k: int) -> SectorMatrix:
    """Assemble the block of ``-i[H, .] + sum_j D[L_j]`` on sector ``k``.

    For a jump ``L|n> = A(n)|n+s>`` acting on ``|p><q|`` with ``q = p - k``::

        L |p><q| L^dag   = A(p) conj(A(q)) |p+s><q+s|
        -{L^dag L, .}/2  = -(|A(p)|^2 + |A(q)|^2)/2 |p><q|

    and the Hamiltonian contributes ``-i (h(p) - h(q))`` on the diagonal.
    """
    n_max = model.n_max
    sup = sector_support(k, n_max)
    p = np.arange(sup.start, sup.stop)
    q = p - k
    dim = p.size
    M = np.zeros((dim, dim), dtype=complex)
    diag = -1j * (model.h.h[p] - model.h.h[q])
    for jump in model.jumps:
        ap = jump.amp[p]
        aq = jump.amp[q]
        diag = diag - 0.5 * (np.abs(ap) ** 2 + np.abs(aq) ** 2)
        target = p + jump.shift
        ok = (target >= sup.start) & (target < sup.stop)
        cols = np.nonzero(ok)[0]
        M[cols + jump.shift, cols] += ap[cols] * np.conj(aq[cols])
    M[np.arange(dim), np.arange(dim)] += diag
    if not np.any(M.imag):
        M = M.real.copy()
    return SectorMatrix(k=int(k), n_max=n_max, entries=M)


def build_all_sectors(model: ModelSpec, k_cap: Optional[int] = None):
    """Blocks for ``|k| <= k_cap`` keyed by ``k`` (all sectors by default)."""
    k_cap = model.n_max if k_cap is None else k_cap
    return {k: build_sector_matrix(model, k) for k in range(-k_cap, k_cap + 1)}


@dataclass(frozen=True, eq=False)
class FullSuperoperator:
    """Dense Liouvillian on the row-major vectorized density matrix."""

    n_max: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def dyad_index(m, n, n_max):
    """Composite row-major index of ``|m><n|``."""
    return m * (n_max + 1) + n


def build_full_superoperator(model: ModelSpec, max_n_max=ORACLE_MAX_NMAX) -> FullSuperoperator:
    """Brute-force ``(n_max+1)**2`` superoperator from explicit operator matrices.

    Row-major vectorization gives ``vec(A rho B) = kron(A, B.T) vec(rho)``.
    """
    n_max = model.n_max
    if max_n_max is not None and n_max > max_n_max:
        raise OracleGuardError(
            f"full superoperator oracle limited to n_max <= {max_n_max} (got {n_max})"
        )
    d = n_max + 1
    eye = np.eye(d)
    H = model.h.matrix()
    S = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for jump in model.jumps:
        L = jump.matrix()
        LdL = L.conj().T @ L
        S += np.kron(L, L.conj()) - 0.5 * np.kron(LdL, eye) - 0.5 * np.kron(eye, LdL.T)
    return FullSuperoperator(n_max=n_max, entries=S)


class BlockCheck(NamedTuple):
    deviation: float
    off_block: float


def sector_order(n_max):
    """Permutation putting dyads in order of increasing ``k``, then ``p``."""
    order = []
    for k in range(-n_max, n_max + 1):
        order.extend(dyad_index(p, p - k, n_max) for p in sector_support(k, n_max))
    return np.array(order)


def verify_block_equivalence(
    model: ModelSpec,
    max_n_max=ORACLE_MAX_NMAX,
    block_hook: Optional[Callable[[int, np.ndarray], np.ndarray]] = None,
) -> BlockCheck:
    """Compare the full oracle with the direct sum of all sector blocks.

    Returns the max absolute entrywise difference after permuting the oracle
    into sector order, and the max magnitude of oracle entries that couple
    different sectors. ``block_hook(k, entries)`` may alter blocks before the
    comparison (fault injection).
    """
    full = build_full_superoperator(model, max_n_max=max_n_max).entries
    n_max = model.n_max
    perm = sector_order(n_max)
    F = full[np.ix_(perm, perm)]
    blocks = []
    for k in range(-n_max, n_max + 1):
        entries = build_sector_matrix(model, k).entries
        if block_hook is not None:
            entries = block_hook(k, np.array(entries, dtype=complex))
        blocks.append(entries)
    D = block_diag(*blocks)
    mask = block_diag(*[np.ones(b.shape) for b in blocks]).astype(bool)
    off = F[~mask]
    return BlockCheck(
        deviation=float(np.max(np.abs(F - D))),
        off_block=float(np.max(np.abs(off))) if off.size else 0.0,
    )


def apply_symmetry_phase(k, phi) -> complex:
    """Eigenvalue ``exp(-i phi k)`` of the U(1) superoperator on sector ``k``."""
    return complex(np.exp(-1j * phi * k))
