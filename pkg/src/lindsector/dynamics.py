"""Sector-resolved time evolution and steady-state two-time correlations.

Correlations follow the quantum regression theorem. For
``C1(tau) = <a^dag(0) a(tau)>`` the initial operator is ``rho_ss a^dag``; with a
diagonal steady state ``sum_n x_n |n><n|`` this is ``sum_p x_p sqrt(p) |p><p-1|``,
a sector ``k=1`` vector. Evolving it and tracing against ``a`` gives
``C1(tau) = sum_p sqrt(p) c_p(tau)``. ``C2`` uses ``rho_ss a^dag**2`` in sector 2.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from .errors import FrequencyError, ParameterError, PropagationError, TruncationError
from .models import ModelSpec
from .sectors import SectorMatrix, build_sector_matrix, sector_support
from .spectra import TAIL_LIMIT, EigenSystem, SteadyState, eigendecompose

COND_LIMIT = 1e8
ODE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SectorVector:
    """Coefficients ``c_p`` of ``sum_p c_p |p><p-k|``."""

    k: int
    n_max: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (len(sector_support(self.k, self.n_max)),):
            raise ParameterError(
                f"sector {self.k} vector needs {len(sector_support(self.k, self.n_max))} coefficients"
            )
        object.__setattr__(self, "coeffs", coeffs)


def _check_grid(taus):
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if taus.ndim != 1 or taus.size == 0 or not np.all(np.isfinite(taus)):
        raise ParameterError("tau grid must be a nonempty 1-D array of finite times")
    if taus[0] < 0 or np.any(np.diff(taus) <= 0):
        raise ParameterError("tau grid must be nonnegative and strictly increasing")
    return taus


def propagate_spectral(system: EigenSystem, x0, taus):
    """``x(tau) = sum_i exp(lambda_i tau) v_i <w_i, x0>``; rows are grid points."""
    c = system.left.conj().T @ x0
    phases = np.exp(np.outer(taus, system.values))
    return (phases * c[None, :]) @ system.right.T


def propagate_ode(M: SectorMatrix, x0, taus):
    """Adaptive DOP853 integration of ``dx/dt = M x``."""
    A = np.asarray(M.entries, dtype=complex)
    scale = max(float(np.max(np.abs(x0))), np.finfo(float).tiny)
    sol = solve_ivp(
        lambda t, x: A @ x,
        (0.0, float(taus[-1])),
        np.asarray(x0, dtype=complex),
        method="DOP853",
        t_eval=taus,
        rtol=ODE_RTOL,
        atol=1e-14 * scale,
    )
    if not sol.success:
        raise PropagationError(f"ODE integration failed in sector {M.k}: {sol.message}")
    return sol.y.T


def propagate(M: SectorMatrix, x0, taus, method="auto", system: Optional[EigenSystem] = None):
    """Evolve ``x0`` under ``M`` on a time grid.

    ``method`` is ``"spectral"``, ``"ode"`` or ``"auto"``; ``auto`` uses the
    spectral path unless the balanced eigenvector matrix has condition number
    above ``COND_LIMIT``. Returns ``(states, path)`` with ``states[j]`` the
    coefficients at ``taus[j]``.
    """
    taus = _check_grid(taus)
    x0 = np.asarray(x0, dtype=complex)
    if x0.shape != (M.dim,):
        raise ParameterError(f"initial vector has shape {x0.shape}, block has dim {M.dim}")
    if method not in ("auto", "spectral", "ode"):
        raise ParameterError(f"unknown propagation method {method!r}")
    if method != "ode" and system is None:
        system = eigendecompose(M)
    path = method
    if method == "auto":
        path = "spectral" if system.cond <= COND_LIMIT else "ode"
    if path == "spectral":
        X = propagate_spectral(system, x0, taus)
    else:
        X = propagate_ode(M, x0, taus)
    X[taus == 0] = x0
    if not np.all(np.isfinite(X)):
        raise PropagationError(f"non-finite state in sector {M.k} on the {path} path")
    return X, path


def evolve_sector(M: SectorMatrix, x0: SectorVector, tau, method="auto") -> SectorVector:
    """``exp(M tau) x0`` for a single delay ``tau``."""
    if x0.k != M.k or x0.n_max != M.n_max:
        raise ParameterError(f"vector in sector {x0.k} does not match block sector {M.k}")
    X, _ = propagate(M, x0.coeffs, [float(tau)], method=method)
    return SectorVector(M.k, M.n_max, X[0])


def relative_disagreement(a, b) -> float:
    """Max state difference over the grid relative to the largest state norm."""
    ref = max(float(np.max(np.linalg.norm(b, axis=1))), np.finfo(float).tiny)
    return float(np.max(np.linalg.norm(a - b, axis=1)) / ref)


@dataclass(eq=False)
class CorrelationTrace:
    tau: np.ndarray
    values: np.ndarray
    kind: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = _check_grid(self.tau)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.tau.shape or not np.all(np.isfinite(self.values)):
            raise ParameterError("trace values must be finite and match the tau grid")

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        buf.write(f"# kind: {self.kind}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "re", "im"])
        for t, v in zip(self.tau, self.values):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "metadata": self.metadata,
            "tau": self.tau.tolist(),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_csv(cls, text):
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif line and not line.startswith("tau"):
                rows.append([float(x) for x in line.split(",")])
        arr = np.array(rows)
        kind = meta.pop("kind", "")
        return cls(arr[:, 0], arr[:, 1] + 1j * arr[:, 2], kind, meta)


def _trace_metadata(model, path=None):
    meta = {"model": model.name, "frame": model.frame, "N": model.N, "n_max": model.n_max}
    meta.update({k: repr(v) for k, v in model.base.items()})
    if path:
        meta["path"] = path
    return meta


def _regression(model, ss, taus, k, method):
    if ss.n_max != model.n_max:
        raise ParameterError("steady state and model use different cutoffs")
    sup = sector_support(k, model.n_max)
    p = np.arange(sup.start, sup.stop)
    weight = np.sqrt(np.prod([p - j for j in range(k)], axis=0).astype(float))
    x0 = ss.occupations[p] * weight
    X, path = propagate(build_sector_matrix(model, k), x0, taus, method=method)
    return X @ weight, path


def correlation_c1(model: ModelSpec, ss: SteadyState, taus, method="auto") -> CorrelationTrace:
    """``<a^dag(0) a(tau)>`` in the steady state."""
    taus = _check_grid(taus)
    values, path = _regression(model, ss, taus, 1, method)
    return CorrelationTrace(taus, values, "C1", _trace_metadata(model, path))


def correlation_c2(model: ModelSpec, ss: SteadyState, taus, method="auto") -> CorrelationTrace:
    """``<a^dag^2(0) a^2(tau)>`` in the steady state (not normalized, not g2)."""
    taus = _check_grid(taus)
    values, path = _regression(model, ss, taus, 2, method)
    return CorrelationTrace(taus, values, "C2", _trace_metadata(model, path))


def coherent_amplitudes(alpha, n_max):
    """Fock amplitudes of ``|alpha>`` truncated to ``0..n_max`` and renormalized."""
    n = np.arange(n_max + 1)
    if alpha == 0:
        c = np.zeros(n_max + 1, dtype=complex)
        c[0] = 1.0
        return c
    logmag = n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    c = np.exp(logmag - logmag.max()) * np.exp(1j * n * np.angle(alpha))
    return c / np.linalg.norm(c)


def field_trace(model: ModelSpec, alpha0, taus, safety=4.0, method="auto") -> CorrelationTrace:
    """``<a>(tau)`` starting from the coherent state ``|alpha0>``.

    Only the first sub-diagonal ``|p><p-1|`` of ``|alpha0><alpha0|`` contributes
    to ``<a>``, so a single sector-1 propagation suffices.
    """
    taus = _check_grid(taus)
    n_max = model.n_max
    if abs(alpha0) ** 2 * safety > n_max:
        raise TruncationError(
            f"|alpha0|^2 * safety = {abs(alpha0) ** 2 * safety:.3g} exceeds n_max={n_max}",
            n_max=n_max,
        )
    c = coherent_amplitudes(alpha0, n_max)
    if abs(c[-1]) ** 2 > TAIL_LIMIT:
        raise TruncationError(
            f"coherent state weight {abs(c[-1]) ** 2:.3g} at the cutoff", tail_weight=abs(c[-1]) ** 2, n_max=n_max
        )
    p = np.arange(1, n_max + 1)
    x0 = c[p] * np.conj(c[p - 1])
    X, path = propagate(build_sector_matrix(model, 1), x0, taus, method=method)
    meta = _trace_metadata(model, path=path)
    meta["alpha0"] = repr(complex(alpha0))
    return CorrelationTrace(taus, X @ np.sqrt(p), "field", meta)


def dominant_frequency(trace: CorrelationTrace):
    """Angular frequency from the mean zero-crossing spacing of ``Re`` values.

    The mean of the real part is subtracted first. Crossing times are located
    by linear interpolation; for ``cos(w t)`` they are spaced by ``pi / w``.
    Returns ``(omega, stderr)``, the error propagated from the spacing spread.
    """
    y = trace.values.real - trace.values.real.mean()
    t = trace.tau
    s = np.sign(y)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    exact = np.nonzero(s == 0)[0]
    crossings = list(t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx]))
    crossings = np.sort(np.concatenate([crossings, t[exact]]))
    if crossings.size < 4:
        raise FrequencyError(f"only {crossings.size} zero crossings; frequency undefined")
    spacing = np.diff(crossings)
    mean = spacing.mean()
    omega = math.pi / mean
    err = math.pi * spacing.std(ddof=1) / mean**2 / math.sqrt(spacing.size)
    return omega, err


def dumps_json(traces) -> str:
    return json.dumps([tr.to_json() for tr in traces], indent=1)
