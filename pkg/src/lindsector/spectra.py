"""Eigenanalysis of sector blocks: spectra, gap, steady state, frame shift."""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import EigensolverError, LindsectorError, ParameterError, TruncationError
from .models import ModelSpec
from .sectors import SectorMatrix, build_sector_matrix

log = logging.getLogger(__name__)

RESIDUAL_RTOL = 1e-8
TAIL_LIMIT = 1e-6
CLAMP_LIMIT = 1e-10
# left/right pairs are re-derived from inv(V) when the adjoint solve leaves
# cross terms above this level (degenerate eigenvalues)
BIORTH_TOL = 1e-8
# largest ratio of balancing scales that keeps back-transformed vectors finite
BALANCE_SPAN = 1e150


class DegeneracyWarning(UserWarning):
    """More than one near-zero eigenvalue in the population sector."""


@dataclass(frozen=True)
class SpectrumEntry:
    value: complex
    k: int
    index_in_sector: int
    residual: float

    @property
    def re(self) -> float:
        return self.value.real

    @property
    def im(self) -> float:
        return self.value.imag


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigendecomposition of one sector block.

    ``right[:, i]`` are unit-norm right eigenvectors; ``left`` is scaled so that
    ``left.conj().T @ right`` is the identity. ``cond`` is the condition number
    of the eigenvector matrix in the diagonally balanced basis, which is what
    limits the accuracy of spectral propagation.
    """

    k: int
    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    residuals: np.ndarray
    norm: float
    cond: float


def _balance(A):
    """Diagonal balancing of ``A``; skipped when the scales would overflow vectors."""
    with warnings.catch_warnings():
        # scipy casts the unused permutation vector, which can be NaN
        warnings.simplefilter("ignore", RuntimeWarning)
        B, (scale, _) = sla.matrix_balance(A, permute=False, separate=True)
    # subnormal couplings can drive the scales to the edge of the float range
    if scale.max() / scale.min() > BALANCE_SPAN:
        return A, np.ones(A.shape[0])
    return B, scale


def eigendecompose(M: SectorMatrix, params=None) -> EigenSystem:
    """Dense non-Hermitian eigendecomposition with biorthonormal left vectors.

    The block is first balanced by a diagonal similarity (birth-death type
    blocks have eigenvectors spanning many orders of magnitude), decomposed,
    and mapped back.
    """
    A = M.entries
    if not np.all(np.isfinite(A)):
        raise EigensolverError(f"non-finite entries in sector {M.k}", k=M.k, params=params)
    try:
        B, scale = _balance(A)
        values, WL, VR = sla.eig(B, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(
            f"eigensolver failed on sector {M.k} (dim {M.dim}): {exc}", k=M.k, params=params
        ) from exc

    VR = VR / np.linalg.norm(VR, axis=0)
    cond = float(np.linalg.cond(VR))
    G = WL.conj().T @ VR
    d = np.diag(G).copy()
    off = G - np.diag(d)
    if np.all(np.abs(d) > 0) and np.max(np.abs(off)) <= BIORTH_TOL * np.min(np.abs(d)):
        WLh = WL.conj().T / d[:, None]
    else:
        WLh = np.linalg.inv(VR)

    right = VR * scale[:, None]
    norms = np.linalg.norm(right, axis=0)
    right = right / norms
    left_h = (WLh / scale[None, :]) * norms[:, None]

    norm = M.norm
    residuals = np.linalg.norm(A @ right - right * values[None, :], axis=0)
    bad = residuals > RESIDUAL_RTOL * max(norm, np.finfo(float).tiny)
    if np.any(bad):
        log.warning(
            "sector %d: %d eigenpairs exceed residual tolerance (max %.3g, |M|=%.3g)",
            M.k, int(bad.sum()), residuals.max(), norm,
        )
    return EigenSystem(
        k=M.k,
        values=values,
        right=right,
        left=left_h.conj().T,
        residuals=residuals,
        norm=norm,
        cond=cond,
    )


def _cluster_sort(items, key, tol, inner):
    """Sort by ``key`` treating runs closer than ``tol`` as ties resolved by ``inner``."""
    items = sorted(items, key=key)
    out, group = [], []
    for it in items:
        if group and key(it) - key(group[-1]) > tol:
            out.extend(inner(group))
            group = []
        group.append(it)
    out.extend(inner(group))
    return out


def order_entries(entries, tol) -> List[SpectrumEntry]:
    """Ascending ``|Re|``, then ``|Im|``, then ``|k|``, then positive ``k`` first.

    Values within ``tol`` of each other count as ties.
    """
    def by_k(group):
        return sorted(group, key=lambda e: (abs(e.k), -e.k, e.index_in_sector))

    def by_im(group):
        return _cluster_sort(group, lambda e: abs(e.im), tol, by_k)

    return _cluster_sort(entries, lambda e: abs(e.re), tol, by_im)


class Spectrum:
    """Sector-resolved eigensystems for ``|k| <= k_cap`` and their merged ordering."""

    def __init__(self, model: ModelSpec, systems: Dict[int, EigenSystem]):
        self.model = model
        self.systems = systems
        self.tol = 1e-9 * model.gamma
        entries = [
            SpectrumEntry(complex(lam), k, i, float(es.residuals[i]))
            for k, es in sorted(systems.items())
            for i, lam in enumerate(es.values)
        ]
        self.entries = order_entries(entries, self.tol)

    @property
    def k_cap(self) -> int:
        return max(self.systems)

    def steady_entry(self) -> SpectrumEntry:
        es = self.systems[0]
        i = int(np.argmin(np.abs(es.values)))
        return SpectrumEntry(complex(es.values[i]), 0, i, float(es.residuals[i]))

    def gap(self) -> SpectrumEntry:
        ss = self.steady_entry()
        for e in self.entries:
            if not (e.k == 0 and e.index_in_sector == ss.index_in_sector):
                return e
        raise LindsectorError("spectrum has no entry besides the steady state")


def _check_kcap(model, k_cap):
    if k_cap is None:
        return model.n_max
    if k_cap < 0 or k_cap > model.n_max:
        raise ParameterError(f"k_cap must lie in 0..n_max={model.n_max}, got {k_cap}")
    return int(k_cap)


def compute_spectrum(model: ModelSpec, k_cap=None, workers=1) -> Spectrum:
    """Eigendecompose every sector with ``|k| <= k_cap``.

    Sectors are independent; with ``workers > 1`` they run on a thread pool
    (LAPACK releases the GIL). Results are keyed by ``k``, so the merge order
    does not depend on completion order.
    """
    k_cap = _check_kcap(model, k_cap)
    ks = list(range(-k_cap, k_cap + 1))
    params = dict(model.base, N=model.N, n_max=model.n_max, frame=model.frame)

    def one(k):
        return eigendecompose(build_sector_matrix(model, k), params=params)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            systems = dict(zip(ks, pool.map(one, ks)))
    else:
        systems = {k: one(k) for k in ks}
    return Spectrum(model, systems)


def sorted_spectrum(model: ModelSpec, k_cap=None, workers=1) -> List[SpectrumEntry]:
    return compute_spectrum(model, k_cap, workers).entries


def liouvillian_gap(model: ModelSpec, k_cap=None, workers=1) -> SpectrumEntry:
    """Slowest decaying entry other than the steady state."""
    return compute_spectrum(model, k_cap, workers).gap()


@dataclass(frozen=True, eq=False)
class SteadyState:
    occupations: np.ndarray
    eigenvalue: complex
    residual: float
    tail_weight: float
    min_before_clamp: float
    N: int = 1

    @property
    def n_max(self) -> int:
        return self.occupations.size - 1

    @property
    def trace(self) -> float:
        return float(self.occupations.sum())


def steady_state(model: ModelSpec, system: Optional[EigenSystem] = None, check_tail=True) -> SteadyState:
    """Population distribution from the near-zero eigenvector of sector 0.

    Raises :class:`TruncationError` (carrying the state as ``.state``) when
    the weight at the cutoff exceeds ``TAIL_LIMIT`` and ``check_tail`` is set.
    """
    M = build_sector_matrix(model, 0)
    if system is None:
        system = eigendecompose(M)
    gamma = model.gamma
    mags = np.abs(system.values)
    order = np.argsort(mags)
    i0 = int(order[0])
    lam0 = complex(system.values[i0])
    if abs(lam0) >= 1e-8 * gamma:
        raise LindsectorError(f"no zero eigenvalue in sector 0 (smallest |lambda| = {abs(lam0):.3g})")
    if mags.size > 1 and mags[order[1]] < 1e-8 * gamma:
        warnings.warn(
            f"second sector-0 eigenvalue |lambda|={mags[order[1]]:.3g} is also near zero; "
            "steady state may not be unique",
            DegeneracyWarning,
            stacklevel=2,
        )
    v = system.right[:, i0]
    x = v / v.sum()
    imag = float(np.max(np.abs(x.imag)))
    if imag > CLAMP_LIMIT:
        raise LindsectorError(f"steady state has imaginary part {imag:.3g} after phase fixing")
    x = x.real
    xmin = float(x.min())
    if xmin < -CLAMP_LIMIT:
        raise LindsectorError(f"steady state has negative population {xmin:.3g}")
    x = np.clip(x, 0.0, None)
    x = x / x.sum()
    x.setflags(write=False)
    residual = float(np.linalg.norm(M.entries @ x))
    ss = SteadyState(
        occupations=x,
        eigenvalue=lam0,
        residual=residual,
        tail_weight=float(x[-1]),
        min_before_clamp=xmin,
        N=model.N,
    )
    if check_tail and ss.tail_weight > TAIL_LIMIT:
        err = TruncationError(
            f"steady-state weight {ss.tail_weight:.3g} at cutoff n_max={model.n_max} exceeds {TAIL_LIMIT}",
            tail_weight=ss.tail_weight,
            n_max=model.n_max,
        )
        err.state = ss
        raise err
    return ss


def expectation_number(ss: SteadyState) -> float:
    """``<a^dagger a>`` in the steady state."""
    return float(np.arange(ss.n_max + 1) @ ss.occupations)


def _assess(B_ext, V, W, values=None):
    """Rayleigh quotients (unless given) and first-order error bounds.

    The bound for a simple eigenvalue is ``kappa_i * |r_i| / |v_i|`` with
    ``kappa_i = |w_i| |v_i| / |w_i^H v_i|`` and the residual
    ``r_i = B v_i - lambda_i v_i`` evaluated in extended precision.
    """
    V_ext = V.astype(np.clongdouble)
    W_ext = W.astype(np.clongdouble)
    BV = B_ext @ V_ext
    den = np.einsum("ij,ij->j", W_ext.conj(), V_ext)
    with np.errstate(divide="ignore", invalid="ignore"):
        if values is None:
            values = np.einsum("ij,ij->j", W_ext.conj(), BV) / den
        R = BV - V_ext * values[None, :]
        rnorm = np.sqrt(np.sum(np.abs(R) ** 2, axis=0)).astype(float)
        vnorm = np.linalg.norm(V, axis=0)
        kappa = vnorm * np.linalg.norm(W, axis=0) / np.abs(den.astype(complex))
        bounds = kappa * rnorm / vnorm
    bounds[~np.isfinite(bounds)] = np.inf
    return values, bounds


def refine_eigenvalues(M: SectorMatrix, steps=1):
    """Eigenvalues with a posteriori error bounds, refined where that helps.

    Works on the balanced block, which is exactly similar to ``M``. Starting
    from LAPACK's eigenpairs, each step applies one shifted solve to the right
    and the left vector and re-evaluates the two-sided Rayleigh quotient in
    extended precision. A new value is kept only if its error bound shrinks,
    so badly conditioned eigenvalues keep their (large) bound instead of
    drifting. Returns ``(values, bounds)``; the cost is one LU factorization
    per eigenvalue and step.
    """
    A = np.asarray(M.entries, dtype=complex)
    B, _ = _balance(A)
    raw, W, V = sla.eig(B, left=True, right=True)
    B_ext = B.astype(np.clongdouble)
    values, bounds = _assess(B_ext, V, W, raw.astype(np.clongdouble))
    quotient, qbounds = _assess(B_ext, V, W)
    better = qbounds < bounds
    values[better] = quotient[better]
    bounds[better] = qbounds[better]
    eye = np.eye(M.dim)
    with warnings.catch_warnings():
        # exactly singular shifts are expected once an eigenvalue is converged
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        for _ in range(steps):
            V1, W1 = V.copy(), W.copy()
            for j in range(M.dim):
                lu = sla.lu_factor(B - complex(values[j]) * eye, check_finite=False)
                v = sla.lu_solve(lu, V[:, j], check_finite=False)
                w = sla.lu_solve(lu, W[:, j], trans=2, check_finite=False)
                nv, nw = np.linalg.norm(v), np.linalg.norm(w)
                if np.isfinite(nv) and np.isfinite(nw) and nv > 0 and nw > 0:
                    V1[:, j] = v / nv
                    W1[:, j] = w / nw
            quotient, qbounds = _assess(B_ext, V1, W1)
            better = qbounds < bounds
            values[better] = quotient[better]
            bounds[better] = qbounds[better]
            V[:, better] = V1[:, better]
            W[:, better] = W1[:, better]
    return values.astype(complex), bounds


@dataclass
class FrameShiftReport:
    """Lab versus shifted rotating-frame eigenvalues over ``|k| <= k_cap``.

    ``deviation`` is the max over all paired eigenvalues. ``certified`` is
    the max over pairs whose error bounds are both within ``tol`` in their
    own frame; the other ``excluded`` pairs are too ill-conditioned to be
    resolved at that level in double precision.
    """

    deviation: float
    certified: float
    excluded: int
    total: int
    tol: float
    per_sector: Dict[int, float]


def frame_shift_report(model: ModelSpec, k_cap=None, tol=1e-10) -> FrameShiftReport:
    """Compare independently refined lab and rotating-frame spectra.

    Eigenvalues are paired by minimal-distance assignment after shifting the
    rotating-frame values by ``-i omega_c k``. For a nonlinear Hamiltonian
    ``omega_c`` is taken as ``h(1) - h(0)`` and the (nonzero) deviations are
    reported as they are.
    """
    k_cap = _check_kcap(model, k_cap)
    omega = model.h.frequency
    rotating = model.replace(frame="rotating")
    per_sector = {}
    certified, excluded, total = 0.0, 0, 0
    for k in range(-k_cap, k_cap + 1):
        lab, lab_err = refine_eigenvalues(build_sector_matrix(model, k))
        rot, rot_err = refine_eigenvalues(build_sector_matrix(rotating, k))
        rot = rot - 1j * omega * k
        cost = np.abs(lab[:, None] - rot[None, :])
        r, c = linear_sum_assignment(cost)
        dev = cost[r, c]
        ok = (lab_err[r] <= tol) & (rot_err[c] <= tol)
        per_sector[k] = float(dev.max())
        if ok.any():
            certified = max(certified, float(dev[ok].max()))
        excluded += int((~ok).sum())
        total += dev.size
    return FrameShiftReport(
        deviation=max(per_sector.values()),
        certified=certified,
        excluded=excluded,
        total=total,
        tol=tol,
        per_sector=per_sector,
    )


def frame_shift_check(model: ModelSpec, k_cap=None, per_sector=False, refine=True):
    """Max ``|lambda - (lambda_R - i omega_c k)|`` over sectors ``|k| <= k_cap``.

    All eigenvalues count. With ``refine`` both spectra pass through
    :func:`refine_eigenvalues` first; otherwise plain LAPACK values are
    compared, and high-lying eigenvalues with large condition numbers can
    drift by far more than the check tolerance. See
    :func:`frame_shift_report` for the split into resolvable and
    condition-limited eigenvalues.
    """
    if refine:
        rep = frame_shift_report(model, k_cap)
        return rep.per_sector if per_sector else rep.deviation
    k_cap = _check_kcap(model, k_cap)
    omega = model.h.frequency
    rotating = model.replace(frame="rotating")
    devs = {}
    for k in range(-k_cap, k_cap + 1):
        lab = sla.eigvals(build_sector_matrix(model, k).entries)
        rot = sla.eigvals(build_sector_matrix(rotating, k).entries) - 1j * omega * k
        cost = np.abs(lab[:, None] - rot[None, :])
        r, c = linear_sum_assignment(cost)
        devs[k] = float(cost[r, c].max())
    return devs if per_sector else max(devs.values())
