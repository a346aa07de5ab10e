"""Command-line front end.

Exit codes: 0 success, 1 parameter/config error (no output written),
2 truncation failure, 3 failed verification.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .dynamics import correlation_c1, correlation_c2, dominant_frequency, dumps_json, field_trace
from .errors import FrequencyError, LindsectorError, ParameterError, TruncationError
from .models import ModelWarning, build_model
from .spectra import compute_spectrum, expectation_number
from .sweeps import resolve_cutoff, rows_to_csv, rows_to_json, spectrum_snapshot, sweep_order_parameter
from .verify import format_table, run_checks

EXIT_OK, EXIT_PARAM, EXIT_TRUNC, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("lindsector")


def _write(text, path):
    """Write atomically to ``path``; stdout when ``path`` is None."""
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _model(cfg):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ModelWarning)
        model = build_model(cfg.model.family, **cfg.model.params())
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return model


def _resolved(cfg):
    return resolve_cutoff(_model(cfg), cfg.model.n_max)


def cmd_spectrum(cfg):
    model, ss = _resolved(cfg)
    spec = compute_spectrum(model, min(cfg.k_cap, model.n_max), workers=cfg.workers)
    snap = spectrum_snapshot(model, min(cfg.m, len(spec.entries)), cfg.k_cap, spectrum=spec)
    snap.params["n_over_N"] = repr(expectation_number(ss) / model.N)
    snap.params["tail_weight"] = repr(ss.tail_weight)
    _write(snap.to_csv() if cfg.output.format == "csv" else snap.to_json(), cfg.output.path)
    return EXIT_OK


def cmd_sweep(cfg):
    m = cfg.model
    base = dict(gamma=m.gamma, eta=m.eta, omega_c=m.omega_c)
    if m.family == "scully_lamb":
        base["beta"] = m.beta
    rows = sweep_order_parameter(m.family, cfg.sweep.xi, cfg.sweep.N, base, n_max=m.n_max,
                                 k_cap=cfg.k_cap, workers=cfg.workers)
    _write(rows_to_csv(rows) if cfg.output.format == "csv" else rows_to_json(rows), cfg.output.path)
    failed = [r for r in rows if not r.ok]
    for r in failed:
        print(f"flagged: xi={r.xi} N={r.N}: {r.error}", file=sys.stderr)
    if any(r.error.startswith("TruncationError") for r in failed):
        return EXIT_TRUNC
    return EXIT_PARAM if failed else EXIT_OK


def _kind_path(path, kind, several):
    if path is None or not several:
        return path
    p = Path(path)
    return p.with_name(f"{p.stem}_{kind.lower()}{p.suffix}")


def _emit_traces(cfg, traces):
    if cfg.output.format == "json":
        _write(dumps_json(traces), cfg.output.path)
        return
    for tr in traces:
        _write(tr.to_csv(), _kind_path(cfg.output.path, tr.kind, len(traces) > 1))


def _report_frequency(traces, factor):
    status = EXIT_OK
    for tr in traces:
        try:
            omega, err = dominant_frequency(tr)
        except FrequencyError as exc:
            print(f"{tr.kind}: {exc}", file=sys.stderr)
            status = EXIT_PARAM
            continue
        msg = f"{tr.kind}: dominant frequency {omega:.6g} +/- {err:.2g}"
        if factor(tr):
            msg += f" (expected {factor(tr):.6g})"
        print(msg, file=sys.stderr)
    return status


def cmd_correlate(cfg):
    model, ss = _resolved(cfg)
    taus = cfg.correlate.taus()
    funcs = {"C1": correlation_c1, "C2": correlation_c2}
    traces = [funcs[k](model, ss, taus) for k in cfg.correlate.kinds]
    _emit_traces(cfg, traces)
    omega = model.h.frequency
    return _report_frequency(traces, lambda tr: omega * (2 if tr.kind == "C2" else 1))


def cmd_fieldtrace(cfg):
    model = _model(cfg)
    alpha = complex(*cfg.correlate.alpha0)
    if cfg.model.n_max is None:
        model = model.replace(n_max=max(model.n_max, int(np.ceil(8 * abs(alpha) ** 2)) + 20))
    tr = field_trace(model, alpha, cfg.correlate.taus())
    _emit_traces(cfg, [tr])
    return EXIT_OK


def cmd_steady(cfg):
    model, ss = _resolved(cfg)
    n = expectation_number(ss)
    if cfg.output.format == "json":
        text = json.dumps({
            "model": model.name, "N": model.N, "n_max": model.n_max, "mean_n": n,
            "n_over_N": n / model.N, "tail_weight": ss.tail_weight, "residual": ss.residual,
            "occupations": ss.occupations.tolist(),
        }, indent=1)
    else:
        lines = [f"# model: {model.name}", f"# N: {model.N}", f"# n_max: {model.n_max}",
                 f"# mean_n: {n!r}", f"# n_over_N: {n / model.N!r}",
                 f"# tail_weight: {ss.tail_weight!r}", f"# residual: {ss.residual!r}", "n,p"]
        lines += [f"{i},{p!r}" for i, p in enumerate(ss.occupations.tolist())]
        text = "\n".join(lines) + "\n"
    _write(text, cfg.output.path)
    return EXIT_OK


def cmd_gap(cfg):
    model, ss = _resolved(cfg)
    gap = compute_spectrum(model, min(cfg.k_cap, model.n_max), workers=cfg.workers).gap()
    g = model.gamma
    row = {"model": model.name, "frame": model.frame, "xi": model.base["xi"] / g, "N": model.N,
           "n_max": model.n_max, "gap_re": gap.re / g, "gap_im": gap.im / g, "gap_k": gap.k,
           "n_over_N": expectation_number(ss) / model.N, "tail_weight": ss.tail_weight}
    if cfg.output.format == "json":
        text = json.dumps(row, indent=1)
    else:
        text = ",".join(row) + "\n" + ",".join(repr(v) if isinstance(v, float) else str(v)
                                                 for v in row.values()) + "\n"
    _write(text, cfg.output.path)
    return EXIT_OK


def cmd_verify(cfg, fault=0.0):
    model, _ = _resolved(cfg)
    results = run_checks(model, cfg.k_cap, cfg.tolerances, fault=fault)
    print(format_table(results))
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAILED {r.name}: deviation {r.value:.3g} (limit {r.limit:.3g})", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "correlate": cmd_correlate,
    "verify": cmd_verify,
    "steady": cmd_steady,
    "gap": cmd_gap,
    "fieldtrace": cmd_fieldtrace,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration")
    common.add_argument("--preset", metavar="NAME", help="named figure recipe (fig1 ... fig5)")
    common.add_argument("--out", metavar="PATH", help="output file (stdout if omitted)")
    common.add_argument("--format", choices=cfgmod.FORMATS)
    common.add_argument("--workers", type=int)
    common.add_argument("--kcap", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--nmax", type=int, help="fixed Fock cutoff (disables automatic choice)")
    common.add_argument("--frame", choices=("lab", "rotating"))
    common.add_argument("--inject-fault", type=float, default=0.0, help=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="lindsector",
        description="Sector-resolved Liouvillian spectra of U(1)-symmetric cavity models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _overrides(args):
    out = {}
    if args.out is not None or args.format is not None:
        out["output"] = {k: v for k, v in (("path", args.out), ("format", args.format)) if v is not None}
    model = {k: v for k, v in (("n_max", args.nmax), ("frame", args.frame)) if v is not None}
    if model:
        out["model"] = model
    for key, value in (("workers", args.workers), ("k_cap", args.kcap), ("m", args.m)):
        if value is not None:
            out[key] = value
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load(args.config, args.preset, _overrides(args))
        if args.command == "verify":
            return cmd_verify(cfg, fault=args.inject_fault)
        return COMMANDS[args.command](cfg)
    except TruncationError as exc:
        print(f"truncation failure: {exc} (tail_weight={exc.tail_weight!r}, n_max={exc.n_max})",
              file=sys.stderr)
        return EXIT_TRUNC
    except (ParameterError, ZeroDivisionError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except LindsectorError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
