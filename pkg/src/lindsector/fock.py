"""Ladder-type jump operators and diagonal Hamiltonians on a truncated Fock space.

Every operator here has a definite U(1) weight: a jump ``L`` maps ``|n>`` to
``A(n) |n + shift>``. Rates are folded into the amplitude table, so
``|A(n)|**2`` is the transition rate out of level ``n``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


def _check_rate(name, value):
    if not np.isfinite(value) or value < 0:
        raise ParameterError(f"{name} must be a finite nonnegative rate, got {value!r}")


def _check_cutoff(n_max):
    if int(n_max) != n_max or n_max < 1:
        raise ParameterError(f"n_max must be an integer >= 1, got {n_max!r}")


@dataclass(frozen=True, eq=False)
class LadderJump:
    """Jump operator ``L|n> = amp[n] |n + shift>`` on levels ``0..n_max``.

    Amplitudes leading outside the truncated space are zeroed on
    construction, so the action never leaves ``0..n_max``.
    """

    shift: int
    amp: np.ndarray
    label: str = ""

    def __post_init__(self):
        amp = np.array(self.amp, dtype=complex)
        if amp.ndim != 1 or amp.size < 2:
            raise ParameterError("amplitude table must be 1-D with at least two levels")
        if not np.all(np.isfinite(amp)):
            raise ParameterError(f"non-finite amplitude in jump {self.label!r}")
        n_max = amp.size - 1
        n = np.arange(n_max + 1)
        amp[(n + self.shift < 0) | (n + self.shift > n_max)] = 0.0
        if np.all(amp.imag == 0):
            amp = amp.real.copy()
        amp.setflags(write=False)
        object.__setattr__(self, "shift", int(self.shift))
        object.__setattr__(self, "amp", amp)

    @property
    def n_max(self) -> int:
        return self.amp.size - 1

    def matrix(self) -> np.ndarray:
        """Dense ``(n_max+1, n_max+1)`` operator matrix."""
        d = self.n_max + 1
        out = np.zeros((d, d), dtype=complex)
        for n in range(d):
            m = n + self.shift
            if 0 <= m < d:
                out[m, n] = self.amp[n]
        return out


@dataclass(frozen=True, eq=False)
class DiagonalHamiltonian:
    """Hamiltonian ``H|n> = h[n] |n>`` (hbar = 1)."""

    h: np.ndarray
    is_linear: bool = field(init=False)

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.ndim != 1 or h.size < 2:
            raise ParameterError("Hamiltonian table must be 1-D with at least two levels")
        if not np.all(np.isfinite(h)):
            raise ParameterError("non-finite Hamiltonian entry")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        slope = h[1] - h[0]
        n = np.arange(h.size)
        scale = max(np.max(np.abs(h)), 1.0)
        linear = h[0] == 0 and np.max(np.abs(h - slope * n)) <= 8 * np.finfo(float).eps * scale
        object.__setattr__(self, "is_linear", bool(linear))

    @property
    def n_max(self) -> int:
        return self.h.size - 1

    @property
    def frequency(self) -> float:
        """Level spacing ``h[1] - h[0]``; meaningful when ``is_linear``."""
        return float(self.h[1] - self.h[0])

    def matrix(self) -> np.ndarray:
        return np.diag(self.h).astype(complex)


def make_annihilation(gamma, n_max) -> LadderJump:
    """Single-photon loss ``sqrt(gamma) a``."""
    _check_rate("gamma", gamma)
    _check_cutoff(n_max)
    n = np.arange(n_max + 1)
    return LadderJump(-1, np.sqrt(gamma * n), "loss")


def make_two_photon_loss(eta, n_max) -> LadderJump:
    """Two-photon loss ``sqrt(eta) a**2``."""
    _check_rate("eta", eta)
    _check_cutoff(n_max)
    n = np.arange(n_max + 1)
    return LadderJump(-2, np.sqrt(eta * n * (n - 1)), "two_photon_loss")


def make_incoherent_drive(xi, n_max) -> LadderJump:
    """Incoherent gain ``sqrt(xi) a^dagger``; zero at the cutoff level."""
    _check_rate("xi", xi)
    _check_cutoff(n_max)
    n = np.arange(n_max + 1)
    return LadderJump(+1, np.sqrt(xi * (n + 1)), "gain")


def make_scully_lamb_gain(xi, beta, n_max) -> LadderJump:
    """Saturable gain ``a^dagger (sqrt(xi) - sqrt(beta) a a^dagger)``.

    ``a a^dagger`` acts as ``n + 1`` on ``|n>``, giving
    ``A(n) = sqrt(n+1) * (sqrt(xi) - sqrt(beta) * (n+1))``. The amplitude turns
    negative past saturation.
    """
    _check_rate("xi", xi)
    _check_rate("beta", beta)
    _check_cutoff(n_max)
    n1 = np.arange(n_max + 1) + 1.0
    return LadderJump(+1, np.sqrt(n1) * (np.sqrt(xi) - np.sqrt(beta) * n1), "saturable_gain")


def make_scully_lamb_decoherence(eta, n_max) -> LadderJump:
    """Field decoherence ``sqrt(eta) a a^dagger`` (weight zero)."""
    _check_rate("eta", eta)
    _check_cutoff(n_max)
    n1 = np.arange(n_max + 1) + 1.0
    return LadderJump(0, np.sqrt(eta) * n1, "decoherence")


def make_number_hamiltonian(omega_c, n_max) -> DiagonalHamiltonian:
    """``omega_c a^dagger a``."""
    if not np.isfinite(omega_c):
        raise ParameterError(f"omega_c must be finite, got {omega_c!r}")
    _check_cutoff(n_max)
    return DiagonalHamiltonian(omega_c * np.arange(n_max + 1, dtype=float))
