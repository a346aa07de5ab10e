"""Parameter sweeps over drive strength and scaling parameter N.

Each sweep point is computed in the rotating frame at its own cutoff: the
mean-field suggestion from :func:`~lindsector.models.suggest_cutoff`, grown
geometrically until the steady state passes the tail check. Points that still
fail are returned as flagged rows, never dropped.
"""

import csv
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Sequence

import numpy as np

from .errors import LindsectorError, ParameterError, TruncationError
from .models import ModelSpec, ModelWarning, build_model, suggest_cutoff
from .spectra import Spectrum, compute_spectrum, expectation_number, steady_state

CUTOFF_GROWTH = 1.5
MAX_CUTOFF = 3000


def resolve_cutoff(model: ModelSpec, n_max: Optional[int] = None, max_n_max=MAX_CUTOFF):
    """Return ``(model, steady_state)`` at a cutoff whose tail check passes.

    A fixed ``n_max`` is used as given: a failing tail raises
    :class:`TruncationError`. Otherwise the search starts at
    :func:`suggest_cutoff` and grows by ``CUTOFF_GROWTH``.
    """
    if n_max is not None:
        model = model.replace(n_max=int(n_max))
        return model, steady_state(model)
    start = suggest_cutoff(model)
    limit = max_n_max
    if model.name == "scully_lamb":
        b = model.base
        runaway = model.N * (math.sqrt(b["xi"]) + math.sqrt(b["gamma"])) / math.sqrt(b["beta"])
        limit = min(limit, max(start, math.floor(runaway) - 2))
    cut = start
    while True:
        model = model.replace(n_max=cut)
        try:
            return model, steady_state(model)
        except TruncationError:
            if cut >= limit:
                raise
            cut = min(limit, math.ceil(cut * CUTOFF_GROWTH))


@dataclass
class SweepRow:
    model: str
    xi: float
    N: int
    n_max: int
    n_per_N: float
    gap_re: float
    gap_im: float
    gap_k: int
    tail_weight: float
    ok: bool
    error: str = ""
    wall_time: float = 0.0

    @classmethod
    def header(cls):
        return [f.name for f in fields(cls)]


def sweep_point(family, xi, N, base, n_max=None, k_cap=3) -> SweepRow:
    """Steady state and rotating-frame gap at one ``(xi, N)``; rates in units of gamma."""
    t0 = time.perf_counter()
    gamma = base["gamma"]
    params = dict(base, xi=xi, N=N, frame="rotating", n_max=n_max or 20)
    nan = float("nan")
    row = dict(model=family, xi=xi / gamma, N=int(N), n_max=params["n_max"], n_per_N=nan,
               gap_re=nan, gap_im=nan, gap_k=0, tail_weight=nan, ok=False)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModelWarning)
            model = build_model(family, **params)
        try:
            model, ss = resolve_cutoff(model, n_max)
        except TruncationError as exc:
            ss = exc.state
            model = model.replace(n_max=exc.n_max)
            row["error"] = f"TruncationError: {exc}"
        spec = compute_spectrum(model, min(k_cap, model.n_max))
        gap = spec.gap()
        row.update(
            n_max=model.n_max,
            n_per_N=expectation_number(ss) / N,
            gap_re=gap.re / gamma,
            gap_im=gap.im / gamma,
            gap_k=gap.k,
            tail_weight=ss.tail_weight,
            ok=not row.get("error"),
        )
    except LindsectorError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time"] = time.perf_counter() - t0
    return SweepRow(**row)


def _point(args):
    return sweep_point(*args)


def _check_grids(xis, Ns):
    if len(xis) == 0 or len(Ns) == 0:
        raise ParameterError("xi grid and N list must be nonempty")
    if any(int(N) != N or N < 1 for N in Ns):
        raise ParameterError(f"N values must be positive integers, got {list(Ns)}")


def sweep_order_parameter(family, xis: Sequence[float], Ns: Sequence[int], base, n_max=None,
                          k_cap=3, workers=1) -> List[SweepRow]:
    """One row per ``(xi, N)``, ordered by ``xi`` then ``N``.

    ``base`` holds the remaining rates (``gamma``, ``eta``, ``beta``, ``omega_c``).
    At most ``workers`` points run concurrently in separate processes.
    """
    _check_grids(xis, Ns)
    base = {k: v for k, v in base.items() if k not in ("xi", "N", "n_max", "frame")}
    tasks = [(family, float(xi), int(N), base, n_max, k_cap) for xi in xis for N in Ns]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point, tasks))
    return [_point(t) for t in tasks]


def gap_flow(family, xis, Ns, base, n_max=None, k_cap=3, workers=1) -> List[SweepRow]:
    """Rotating-frame gap versus ``N`` for each drive strength (same rows as the order-parameter sweep)."""
    return sweep_order_parameter(family, xis, Ns, base, n_max=n_max, k_cap=k_cap, workers=workers)


def rows_to_csv(rows: List[SweepRow], include_time=True) -> str:
    header = SweepRow.header()
    if not include_time:
        header.remove("wall_time")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        d = asdict(r)
        w.writerow([repr(d[h]) if isinstance(d[h], float) else d[h] for h in header])
    return buf.getvalue()


def rows_to_json(rows: List[SweepRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=1)


def max_slope(rows: List[SweepRow], N) -> float:
    """Largest finite-difference slope of ``<n>/N`` versus ``xi`` for one ``N``."""
    pts = sorted((r.xi, r.n_per_N) for r in rows if r.N == N)
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    return float(np.max(np.diff(y) / np.diff(x)))


@dataclass
class SpectrumSnapshot:
    """Low-lying eigenvalues in units of gamma with their sector labels.

    ``line_distance`` is the distance of ``Im lambda`` from the nearest
    ``k omega_c`` line (from ``Im = 0`` when ``omega_c = 0``).
    """

    entries: List[tuple]
    params: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.params.items():
            buf.write(f"# {key}: {value}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "k", "line_distance"])
        for re_, im_, k, dist in self.entries:
            w.writerow([repr(re_), repr(im_), k, repr(dist)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"params": self.params, "entries": [dict(zip(("re", "im", "k", "line_distance"), e)) for e in self.entries]},
            indent=1,
        )


def spectrum_snapshot(model: ModelSpec, m: int, k_cap=5, spectrum: Optional[Spectrum] = None,
                      workers=1) -> SpectrumSnapshot:
    """The ``m`` smallest-``|Re|`` eigenvalues over sectors ``|k| <= k_cap``."""
    k_cap = min(k_cap, model.n_max)
    if spectrum is None:
        spectrum = compute_spectrum(model, k_cap, workers=workers)
    if m < 1 or m > len(spectrum.entries):
        raise ParameterError(f"m must lie in 1..{len(spectrum.entries)}, got {m}")
    gamma = model.gamma
    omega = model.h.frequency
    out = []
    for e in spectrum.entries[:m]:
        if omega:
            dist = abs(e.im - omega * round(e.im / omega))
        else:
            dist = abs(e.im)
        out.append((e.re / gamma, e.im / gamma, e.k, dist / gamma))
    params = dict(model.base, model=model.name, N=model.N, n_max=model.n_max, frame=model.frame, k_cap=k_cap)
    return SpectrumSnapshot(out, {k: repr(v) if isinstance(v, float) else v for k, v in params.items()})
