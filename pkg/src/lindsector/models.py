"""Model catalog: driven two-photon-loss cavity and the Scully-Lamb laser.

Both models carry a scaling parameter ``N`` for the thermodynamic limit
(photon number ``n -> N n``), which is applied to the rates as

* two-photon-loss cavity: ``{gamma, xi, eta} -> {gamma, xi, eta/N}``
* Scully-Lamb laser: ``{xi, gamma, eta, beta} -> {xi, gamma, eta/N, beta/N**2}``

``frame="rotating"`` drops the ``omega_c a^dagger a`` Hamiltonian; the jump
tables are identical in the two frames.
"""

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from . import fock
from .errors import ParameterError

FRAMES = ("lab", "rotating")
FAMILIES = ("btc", "scully_lamb")

#: Operational meaning of "sqrt(beta/xi) << 1" for the Scully-Lamb model.
SATURATION_WARNING_LEVEL = 0.1


class ModelWarning(UserWarning):
    """Parameters are valid but outside the regime where results are reliable."""


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A U(1)-symmetric single-mode Lindblad model at a fixed cutoff.

    ``base`` keeps the unscaled physical rates so the model can be rebuilt at
    another cutoff or in another frame with :meth:`replace`.
    """

    name: str
    n_max: int
    h: fock.DiagonalHamiltonian
    jumps: Tuple[fock.LadderJump, ...]
    base: Dict[str, float] = field(default_factory=dict)
    N: int = 1
    frame: str = "lab"

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple(self.jumps))
        if self.frame not in FRAMES:
            raise ParameterError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        if self.N < 1:
            raise ParameterError(f"N must be >= 1, got {self.N}")
        if self.h.n_max != self.n_max or any(j.n_max != self.n_max for j in self.jumps):
            raise ParameterError("all operator tables must have n_max + 1 entries")
        if self.frame == "rotating" and np.any(self.h.h != 0):
            raise ParameterError("rotating-frame model must have a zero Hamiltonian")

    @property
    def gamma(self) -> float:
        """Rate unit used for tolerances (the single-photon loss rate)."""
        g = self.base.get("gamma")
        if g:
            return float(g)
        return float(max(max(np.max(np.abs(j.amp)) ** 2 for j in self.jumps), 1.0))

    @property
    def omega_c(self) -> float:
        return self.h.frequency if self.h.is_linear else float("nan")

    def replace(self, **changes) -> "ModelSpec":
        """Rebuild with changed parameters (``n_max``, ``frame``, ``N``, rates).

        Catalog models are reconstructed from ``base``; custom models only
        support a frame change.
        """
        if self.name in _BUILDERS:
            params = dict(self.base)
            params.update(N=self.N, n_max=self.n_max, frame=self.frame)
            params.update(changes)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ModelWarning)
                return _BUILDERS[self.name](**params)
        if set(changes) - {"frame"}:
            raise ParameterError(f"custom model {self.name!r} only supports a frame change")
        frame = changes.get("frame", self.frame)
        if frame == "lab" and self.frame == "rotating":
            raise ParameterError("cannot restore the Hamiltonian of a custom rotating-frame model")
        h = self.h if frame == self.frame else fock.DiagonalHamiltonian(np.zeros(self.n_max + 1))
        return dataclasses.replace(self, h=h, frame=frame)


def _hamiltonian(omega_c, n_max, frame):
    if frame not in FRAMES:
        raise ParameterError(f"frame must be one of {FRAMES}, got {frame!r}")
    return fock.make_number_hamiltonian(omega_c if frame == "lab" else 0.0, n_max)


def _check_N(N):
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N!r}")
    return int(N)


def build_btc_model(gamma, xi, eta, omega_c=0.0, N=1, n_max=40, frame="lab") -> ModelSpec:
    """Incoherently driven cavity with single- and two-photon loss.

    Jumps are ``sqrt(gamma) a``, ``sqrt(eta/N) a**2`` and ``sqrt(xi) a^dagger``.
    """
    N = _check_N(N)
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma!r}")
    jumps = (
        fock.make_annihilation(gamma, n_max),
        fock.make_two_photon_loss(eta / N, n_max),
        fock.make_incoherent_drive(xi, n_max),
    )
    if eta == 0 and xi >= gamma:
        warnings.warn(
            "eta=0 with xi >= gamma has no normalizable steady state; "
            "results are dominated by the Fock cutoff",
            ModelWarning,
            stacklevel=2,
        )
    return ModelSpec(
        name="btc",
        n_max=int(n_max),
        h=_hamiltonian(omega_c, n_max, frame),
        jumps=jumps,
        base=dict(gamma=float(gamma), xi=float(xi), eta=float(eta), omega_c=float(omega_c)),
        N=N,
        frame=frame,
    )


def build_scully_lamb(gamma, xi, eta, beta, omega_c=0.0, N=1, n_max=40, frame="lab") -> ModelSpec:
    """Scully-Lamb laser in the fourth-order field approximation.

    Jumps are the saturable gain with ``beta/N**2``, the decoherence
    ``sqrt(eta/N) a a^dagger`` and the loss ``sqrt(gamma) a``.
    """
    N = _check_N(N)
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma!r}")
    if not beta > 0:
        raise ParameterError(f"beta must be > 0, got {beta!r}")
    beta_scaled = beta / N**2
    jumps = (
        fock.make_scully_lamb_gain(xi, beta_scaled, n_max),
        fock.make_scully_lamb_decoherence(eta / N, n_max),
        fock.make_annihilation(gamma, n_max),
    )
    if xi > 0 and math.sqrt(beta_scaled / xi) > SATURATION_WARNING_LEVEL:
        warnings.warn(
            f"sqrt(beta/xi) = {math.sqrt(beta_scaled / xi):.3g} is not small; "
            "the gain-saturation expansion may be unstable",
            ModelWarning,
            stacklevel=2,
        )
    return ModelSpec(
        name="scully_lamb",
        n_max=int(n_max),
        h=_hamiltonian(omega_c, n_max, frame),
        jumps=jumps,
        base=dict(
            gamma=float(gamma), xi=float(xi), eta=float(eta), beta=float(beta), omega_c=float(omega_c)
        ),
        N=N,
        frame=frame,
    )


_BUILDERS = {"btc": build_btc_model, "scully_lamb": build_scully_lamb}


def build_model(family, **params) -> ModelSpec:
    """Dispatch to the catalog builder for ``family``."""
    try:
        builder = _BUILDERS[family]
    except KeyError:
        raise ParameterError(f"unknown model family {family!r}; expected one of {FAMILIES}") from None
    return builder(**params)


def sl_params_from_AB(A, B):
    """Map laser gain ``A`` and saturation ``B`` to ``(xi, beta, eta)``."""
    if A == 0:
        raise ZeroDivisionError("laser gain A must be nonzero")
    if A < 0 or B < 0:
        raise ParameterError(f"need A > 0 and B >= 0, got A={A!r}, B={B!r}")
    return A, B**2 / (4 * A), 3 * B / 4


def semiclassical_fixed_point(model: ModelSpec) -> float:
    r"""Mean-field photon density ``<n>/N`` in the thermodynamic limit.

    Each jump ``(s, A)`` moves population from ``n`` to ``n + s`` at rate
    ``|A(n)|**2``, so the adjoint master equation gives exactly

    .. math:: \frac{d\langle n\rangle}{dt} = \sum_j s_j \langle |A_j(\hat n)|^2\rangle .

    Two-photon-loss cavity:
    ``d<n>/dt = xi <n+1> - gamma <n> - 2 (eta/N) <n(n-1)>``.
    Factorizing ``<a^dag^2 a^2> = <n(n-1)> -> <n>**2``, substituting
    ``<n> = N x`` and keeping the leading order in ``N`` gives
    ``0 = x (xi - gamma - 2 eta x)``, so the stable root is
    ``x = max(0, (xi - gamma) / (2 eta))``.

    Scully-Lamb: the decoherence jump has weight 0 and drops out, leaving
    ``d<n>/dt = <(n+1) (sqrt(xi) - sqrt(beta/N**2) (n+1))**2> - gamma <n>``.
    With the same factorization and ``<n> = N x``, at leading order
    ``0 = x ((sqrt(xi) - sqrt(beta) x)**2 - gamma)``: the saturated gain
    balances the loss. The stable nonzero root is
    ``x = (sqrt(xi) - sqrt(gamma)) / sqrt(beta)`` for ``xi > gamma``; the other
    root ``(sqrt(xi) + sqrt(gamma)) / sqrt(beta)`` is the unstable runaway
    point past gain saturation.
    """
    b = model.base
    if model.name == "btc":
        if b["eta"] == 0:
            return math.inf if b["xi"] > b["gamma"] else 0.0
        return max(0.0, (b["xi"] - b["gamma"]) / (2 * b["eta"]))
    if model.name == "scully_lamb":
        if b["xi"] <= b["gamma"]:
            return 0.0
        return (math.sqrt(b["xi"]) - math.sqrt(b["gamma"])) / math.sqrt(b["beta"])
    raise ParameterError(f"no mean-field oracle for model {model.name!r}")


def suggest_cutoff(model: ModelSpec, safety=4.0, floor=20) -> int:
    """Fock cutoff ``ceil(safety * N * x_mf) + floor`` from the mean-field density.

    For the Scully-Lamb model the result is capped below the runaway point,
    where the truncated chain would pile up population at the cutoff.
    """
    x = semiclassical_fixed_point(model)
    if not math.isfinite(x):
        raise ParameterError("no finite mean-field density; choose n_max explicitly")
    n_max = math.ceil(safety * model.N * x) + int(floor)
    if model.name == "scully_lamb":
        b = model.base
        runaway = model.N * (math.sqrt(b["xi"]) + math.sqrt(b["gamma"])) / math.sqrt(b["beta"])
        n_max = min(n_max, max(int(floor), math.floor(runaway) - 2))
    return n_max
