"""Command-line front end.

Every command takes an explicit ``--seed`` (no entropy defaults), writes
deterministic delimited output (JSON lines by default, CSV for tables), and
can render a matplotlib figure next to the data with ``--figure``.  A flat
``key=value`` config file can seed any option; explicit flags override it.

Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 a ``validate-*``
command found a criterion violated.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__, figures, validate
from .closedform import expected_kernel_00_beta2, moment_A, moment_table_value
from .continuum import sample_reflected_bridge
from .fk import (FkMode, FkParams, NoiseField, chapman_kolmogorov_residual,
                 expected_kernel_00, fk_apply, kernel_estimate, trace_estimate)
from .lattice import (EXAMPLE_LAZY_VALUES, EXAMPLE_SSRW_VALUES, LatticePath,
                      path_from_values, skorokhod_map)
from .rng import make_stream
from .semigroup import edge_fluctuations, named_function
from .tridiag import ModelForm, ModelSpec, build_model, noise_partial_sums
from .validate import (bessel_functional_samples, bilinear_sweep,
                       bridge_functional_samples, folded_normal_cdf,
                       half_local_time_samples, ks_one_sample, ks_two_sample,
                       lazy_walk_samples, moment_check, skorokhod_exhaustive)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

# dedicated stream id for the shared noise field, far above any chunk stream
NOISE_STREAM_ID = 2**32


def _provenance(args) -> dict:
    return {"version": __version__, "seed": args.seed}


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _write_records(records: list[dict], args) -> None:
    fp, closeable = _open_out(args.out)
    try:
        if args.format == "csv":
            keys = list(records[0].keys())
            fp.write(",".join(keys) + "\n")
            for rec in records:
                fp.write(",".join(_csv_cell(rec.get(k)) for k in keys) + "\n")
        else:
            for rec in records:
                fp.write(json.dumps(rec, sort_keys=True) + "\n")
    finally:
        if closeable:
            fp.close()


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_text(text: str, args) -> None:
    fp, closeable = _open_out(args.out)
    try:
        fp.write(text)
    finally:
        if closeable:
            fp.close()


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


# -- command handlers ---------------------------------------------------------

def cmd_build_matrix(args) -> int:
    spec = ModelSpec(beta=args.beta, w=args.w, n=args.N, form=ModelForm(args.form))
    mat = build_model(spec, make_stream(args.seed, 0))
    _write_text(mat.dumps_csv(), args)
    if args.figure:
        figures.matrix_entries_figure(mat, args.figure)
    return EXIT_OK


def cmd_noise_path(args) -> int:
    spec = ModelSpec(beta=args.beta, w=args.w, n=args.N, form=ModelForm.MODIFIED)
    _, raw = build_model(spec, make_stream(args.seed, 0), return_raw=True)
    path = noise_partial_sums(raw, spec, args.x_max)
    fp, closeable = _open_out(args.out)
    try:
        path.dump_csv(fp)
    finally:
        if closeable:
            fp.close()
    if args.figure:
        figures.grid_path_figure(path, args.figure, title="noise partial sums",
                                 ylabel="W")
    return EXIT_OK


def cmd_edge_spectrum(args) -> int:
    spec = ModelSpec(beta=args.beta, w=args.w, n=args.N, form=ModelForm(args.form))
    mat = build_model(spec, make_stream(args.seed, 0))
    fluct = edge_fluctuations(mat, args.q, args.N)
    lam = 2.0 * math.sqrt(args.N) - fluct * float(args.N) ** (-1.0 / 6.0)
    rec = {"command": "edge-spectrum", "beta": args.beta, "w": args.w,
           "N": args.N, "q": args.q,
           "eigenvalues": [float(v) for v in lam],
           "fluctuations": [float(v) for v in fluct],
           "provenance": _provenance(args)}
    _write_records([rec], args)
    if args.figure:
        figures.spectrum_figure(fluct, args.figure)
    return EXIT_OK


def cmd_bilinear(args) -> int:
    spec = ModelSpec(beta=args.beta, w=args.w, n=args.N, form=ModelForm.MODIFIED)
    f = named_function(args.f)
    g = named_function(args.g)
    mean, stderr, vals = bilinear_sweep(spec, args.T, f, g, args.seeds,
                                        make_stream(args.seed, 0))
    records = [{"command": "bilinear", "seed_index": i, "value": float(v)}
               for i, v in enumerate(vals)]
    records.append({"command": "bilinear", "beta": args.beta, "w": args.w,
                    "T": args.T, "N": args.N, "f": args.f, "g": args.g,
                    "mean": mean, "stderr": stderr, "n": args.seeds,
                    "provenance": _provenance(args)})
    _write_records(records, args)
    return EXIT_OK


def _make_params(args, mode: FkMode) -> FkParams:
    return FkParams(beta=args.beta, w=args.w, big_t=args.T,
                    n_steps=args.steps, n_paths=args.paths,
                    delta_a=args.delta_a, mode=mode)


def _noise_for(args, p: FkParams) -> NoiseField:
    return NoiseField(p.bandwidth, args.seed, NOISE_STREAM_ID)


def cmd_fk_apply(args) -> int:
    mode = FkMode(args.mode)
    p = _make_params(args, mode)
    noise = _noise_for(args, p) if mode == FkMode.QUENCHED else None
    est = fk_apply(named_function(args.f), args.x, p, noise,
                   make_stream(args.seed, 0), workers=args.workers)
    rec = {"command": "fk-apply", "x": args.x, "f": args.f,
           "beta": args.beta, "w": args.w, "T": args.T, "mode": args.mode,
           "n_steps": p.n_steps, "delta_a": p.bandwidth,
           "provenance": _provenance(args)}
    rec.update(est.to_record())
    _write_records([rec], args)
    return EXIT_OK


def cmd_kernel(args) -> int:
    mode = FkMode(args.mode)
    p = _make_params(args, mode)
    noise = _noise_for(args, p) if mode == FkMode.QUENCHED else None
    est = kernel_estimate(args.x, args.y, p, make_stream(args.seed, 0),
                          noise=noise, workers=args.workers)
    rec = {"command": "kernel", "x": args.x, "y": args.y, "beta": args.beta,
           "w": args.w, "T": args.T, "mode": args.mode,
           "provenance": _provenance(args)}
    rec.update(est.to_record())
    _write_records([rec], args)
    return EXIT_OK


def cmd_kernel00(args) -> int:
    records = []
    slot = 0
    for w in _floats(str(args.w)):
        for big_t in _floats(str(args.T)):
            p = FkParams(beta=args.beta, w=w, big_t=big_t, n_steps=args.steps,
                         n_paths=args.paths, delta_a=args.delta_a)
            est = expected_kernel_00(p, make_stream(args.seed, slot * 10_000_019),
                                     workers=args.workers)
            rec = {"command": "kernel00", "beta": args.beta, "w": w, "T": big_t,
                   "n_steps": args.steps, "provenance": _provenance(args)}
            rec.update(est.to_record())
            if args.beta == 2.0:
                closed = expected_kernel_00_beta2(w, big_t)
                rec["closed_form"] = closed
                rec["abs_diff"] = abs(est.mean - closed)
                rec["z"] = (est.mean - closed) / est.stderr if est.stderr else 0.0
            records.append(rec)
            slot += 1
    _write_records(records, args)
    if args.figure:
        figures.kernel00_figure(records, args.figure)
    return EXIT_OK


def cmd_trace(args) -> int:
    p = _make_params(args, FkMode.ANNEALED)
    x_max = args.x_max if args.x_max is not None else 8.0 * math.sqrt(p.big_t)
    est = trace_estimate(p, x_max, args.nx, make_stream(args.seed, 0),
                         workers=args.workers)
    rec = {"command": "trace", "beta": args.beta, "w": args.w, "T": args.T,
           "provenance": _provenance(args)}
    rec.update(est.to_record())
    _write_records([rec], args)
    return EXIT_OK


def cmd_semigroup_check(args) -> int:
    p = FkParams(beta=args.beta, w=args.w, big_t=args.T1 + args.T2,
                 n_steps=args.steps, n_paths=args.paths, delta_a=args.delta_a,
                 mode=FkMode.QUENCHED)
    noise = _noise_for(args, p)
    est = chapman_kolmogorov_residual(args.x, args.y, args.T1, args.T2, p,
                                      noise, make_stream(args.seed, 0),
                                      n_z=args.nz, workers=args.workers)
    z = est.mean / est.stderr if est.stderr else 0.0
    rec = {"command": "semigroup-check", "x": args.x, "y": args.y,
           "T1": args.T1, "T2": args.T2, "beta": args.beta, "w": args.w,
           "z": z, "provenance": _provenance(args)}
    rec.update(est.to_record())
    _write_records([rec], args)
    return EXIT_OK


def cmd_validate_skorokhod(args) -> int:
    records = []
    failed = False
    for start in _ints(str(args.starts)):
        rep = skorokhod_exhaustive(args.k, start)
        records.append({"command": "validate-skorokhod", "k": rep.k,
                        "start": rep.start, "paths": rep.n_paths,
                        "roundtrip_exact": rep.n_roundtrip_exact,
                        "distinct_images": rep.n_distinct_images,
                        "h_identity": rep.n_h_identity,
                        "passed": rep.passed})
        failed = failed or not rep.passed
    ssrw = path_from_values(EXAMPLE_SSRW_VALUES)
    lazy = skorokhod_map(ssrw)
    fixture_ok = tuple(lazy.values()) == EXAMPLE_LAZY_VALUES
    records.append({"command": "validate-skorokhod", "fixture": "28-step example",
                    "passed": fixture_ok, "provenance": _provenance(args)})
    failed = failed or not fixture_ok
    _write_records(records, args)
    if args.figure:
        figures.lattice_pair_figure(ssrw, lazy, args.figure,
                                    labels=("simple walk", "reflected"))
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_validate_thm18(args) -> int:
    records = []
    failed = False
    first_samples = None
    first_alpha = None
    for i, alpha in enumerate(_floats(str(args.alpha))):
        law_mean, law_var = -alpha / 4.0, 1.0 / 12.0
        if args.route in ("bessel", "both"):
            samples = bessel_functional_samples(
                alpha, args.samples, args.steps,
                make_stream(args.seed, (2 * i) * 10_000_019))
            chk = moment_check(samples, law_mean, law_var)
            records.append({"command": "validate-thm18", "route": "bessel",
                            "alpha": alpha, "mean": chk.mean,
                            "variance": chk.variance, "skewness": chk.skewness,
                            "z_mean": chk.z_mean, "z_variance": chk.z_variance,
                            "z_skewness": chk.z_skewness, "n": chk.n})
            failed = failed or chk.max_z() > 3.0
            if first_samples is None:
                first_samples, first_alpha = samples, alpha
        if args.route in ("path", "both"):
            fvals, l0 = bridge_functional_samples(
                args.samples, args.steps,
                make_stream(args.seed, (2 * i + 1) * 10_000_019))
            sel = np.abs(l0 - alpha) <= args.window
            if sel.sum() < 100:
                records.append({"command": "validate-thm18", "route": "path",
                                "alpha": alpha, "n": int(sel.sum()),
                                "error": "too few paths in the window"})
                failed = True
            else:
                chk = moment_check(fvals[sel], law_mean, law_var)
                records.append({"command": "validate-thm18", "route": "path",
                                "alpha": alpha, "mean": chk.mean,
                                "variance": chk.variance,
                                "skewness": chk.skewness, "z_mean": chk.z_mean,
                                "z_variance": chk.z_variance,
                                "z_skewness": chk.z_skewness, "n": chk.n})
                failed = failed or chk.max_z() > 3.0
                if first_samples is None:
                    first_samples, first_alpha = fvals[sel], alpha
    records.append({"command": "validate-thm18", "passed": not failed,
                    "provenance": _provenance(args)})
    _write_records(records, args)
    if args.figure and first_samples is not None:
        figures.conditional_law_figure(first_samples, first_alpha, args.figure)
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_validate_weak_convergence(args) -> int:
    k = args.walk_steps
    scale_n = float(k) ** 1.5  # k = N^(2/3)
    ends, hs = lazy_walk_samples(k, args.samples, make_stream(args.seed, 0),
                                 scale_n)
    ks_end = ks_one_sample(ends, folded_normal_cdf)
    half_l0 = half_local_time_samples(args.samples, args.grid, 1.0,
                                      make_stream(args.seed, 10_000_019))
    ks_h = ks_two_sample(hs, half_l0)
    passed = ks_end < args.bound_endpoint and ks_h < args.bound_h
    rec = {"command": "validate-weak-convergence", "walk_steps": k,
           "samples": args.samples, "ks_endpoint": ks_end, "ks_h": ks_h,
           "bound_endpoint": args.bound_endpoint, "bound_h": args.bound_h,
           "passed": passed, "provenance": _provenance(args)}
    _write_records([rec], args)
    if args.figure:
        figures.cdf_overlay_figure([hs, half_l0],
                                   ["walk horizontal count", "continuum L0/2"],
                                   args.figure, title="boundary time laws")
    return EXIT_OK if passed else EXIT_VALIDATION


def cmd_moments_a(args) -> int:
    rows = []
    for n in range(1, args.max_n + 1):
        closed = moment_A(n)
        table = moment_table_value(n) if n <= 14 else None
        rows.append({"n": n, "closed_form": closed, "table1_value": table,
                     "abs_diff": abs(closed - table) if table is not None else None})
    args.format = "csv"
    _write_records(rows, args)
    if args.figure:
        figures.moments_figure(rows, args.figure)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def _add_common(sp, figure: bool = False) -> None:
    sp.add_argument("--seed", type=int, required=True,
                    help="master seed (mandatory; there is no entropy default)")
    sp.add_argument("--out", default="-", help="output file, '-' for stdout")
    sp.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--config", default=None,
                    help="flat key=value file; explicit flags override it")
    if figure:
        sp.add_argument("--figure", default=None,
                        help="render a figure of the result to this file")


def _add_model(sp) -> None:
    sp.add_argument("--beta", type=float, default=2.0)
    sp.add_argument("--w", default=0.0)
    sp.add_argument("--N", type=int, default=100)


def _add_fk(sp) -> None:
    sp.add_argument("--beta", type=float, default=2.0)
    sp.add_argument("--w", default=0.0)
    sp.add_argument("--T", default=1.0)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--steps", type=int, default=4096)
    sp.add_argument("--delta-a", dest="delta_a", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betaedge",
        description="spiked beta-ensemble edge: matrix powers, Feynman-Kac "
                    "Monte Carlo, and exact cross-checks")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build-matrix", help="draw one tridiagonal model, dump CSV")
    _add_model(sp)
    sp.add_argument("--form", choices=[f.value for f in ModelForm],
                    default=ModelForm.MODIFIED.value)
    _add_common(sp, figure=True)
    sp.set_defaults(handler=cmd_build_matrix, _w_float=True)

    sp = sub.add_parser("noise-path", help="prelimit noise partial sums, CSV t,value")
    _add_model(sp)
    sp.add_argument("--x-max", dest="x_max", type=float, default=1.0)
    _add_common(sp, figure=True)
    sp.set_defaults(handler=cmd_noise_path, _w_float=True)

    sp = sub.add_parser("edge-spectrum", help="top edge eigenvalue fluctuations")
    _add_model(sp)
    sp.add_argument("--form", choices=[f.value for f in ModelForm],
                    default=ModelForm.MODIFIED.value)
    sp.add_argument("--q", type=int, default=3)
    _add_common(sp, figure=True)
    sp.set_defaults(handler=cmd_edge_spectrum, _w_float=True)

    sp = sub.add_parser("bilinear", help="matrix-side bilinear form samples")
    _add_model(sp)
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--f", default="expneg")
    sp.add_argument("--g", default="expneg")
    sp.add_argument("--seeds", type=int, default=1)
    _add_common(sp)
    sp.set_defaults(handler=cmd_bilinear, _w_float=True)

    sp = sub.add_parser("fk-apply", help="semigroup applied to f at x")
    _add_fk(sp)
    sp.add_argument("--x", type=float, default=0.0)
    sp.add_argument("--f", default="expneg")
    sp.add_argument("--mode", choices=[m.value for m in FkMode],
                    default=FkMode.ANNEALED.value)
    _add_common(sp)
    sp.set_defaults(handler=cmd_fk_apply, _w_float=True, _t_float=True)

    sp = sub.add_parser("kernel", help="kernel estimate at (x, y)")
    _add_fk(sp)
    sp.add_argument("--x", type=float, default=0.0)
    sp.add_argument("--y", type=float, default=0.0)
    sp.add_argument("--mode", choices=[m.value for m in FkMode],
                    default=FkMode.ANNEALED.value)
    _add_common(sp)
    sp.set_defaults(handler=cmd_kernel, _w_float=True, _t_float=True)

    sp = sub.add_parser("kernel00", help="expected kernel at the origin "
                                         "(comma lists of w and T sweep cells)")
    _add_fk(sp)
    _add_common(sp, figure=True)
    sp.set_defaults(handler=cmd_kernel00)

    sp = sub.add_parser("trace", help="trace of the semigroup by x-quadrature")
    _add_fk(sp)
    sp.add_argument("--x-max", dest="x_max", type=float, default=None)
    sp.add_argument("--nx", type=int, default=33)
    _add_common(sp)
    sp.set_defaults(handler=cmd_trace, _w_float=True, _t_float=True)

    sp = sub.add_parser("semigroup-check", help="quenched Chapman-Kolmogorov residual")
    sp.add_argument("--beta", type=float, default=2.0)
    sp.add_argument("--w", default=0.0)
    sp.add_argument("--T1", type=float, default=0.5)
    sp.add_argument("--T2", type=float, default=0.5)
    sp.add_argument("--x", type=float, default=0.5)
    sp.add_argument("--y", type=float, default=0.5)
    sp.add_argument("--paths", type=int, default=20_000)
    sp.add_argument("--steps", type=int, default=2048)
    sp.add_argument("--delta-a", dest="delta_a", type=float, default=None)
    sp.add_argument("--nz", type=int, default=49)
    _add_common(sp)
    sp.set_defaults(handler=cmd_semigroup_check, _w_float=True)

    sp = sub.add_parser("validate-skorokhod", help="exhaustive discrete bijection check")
    sp.add_argument("--k", type=int, default=12)
    sp.add_argument("--starts", default="0")
    _add_common(sp, figure=True)
    sp.set_defaults(handler=cmd_validate_skorokhod)

    sp = sub.add_parser("validate-thm18", help="conditioned bridge functional law")
    sp.add_argument("--alpha", default="1,2,4")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--steps", type=int, default=8192)
    sp.add_argument("--window", type=float, default=0.1)
    sp.add_argument("--route", choices=("bessel", "path", "both"), default="bessel")
    _add_common(sp, figure=True)
    sp.set_defaults(handler=cmd_validate_thm18)

    sp = sub.add_parser("validate-weak-convergence",
                        help="lazy walk laws against the continuum")
    sp.add_argument("--walk-steps", dest="walk_steps", type=int, default=10_000)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--grid", type=int, default=16_384)
    sp.add_argument("--bound-endpoint", dest="bound_endpoint", type=float, default=0.01)
    sp.add_argument("--bound-h", dest="bound_h", type=float, default=0.015)
    _add_common(sp, figure=True)
    sp.set_defaults(handler=cmd_validate_weak_convergence)

    sp = sub.add_parser("moments-a", help="moment table of A, CSV")
    sp.add_argument("--max-n", dest="max_n", type=int, default=14)
    _add_common(sp, figure=True)
    sp.set_defaults(handler=cmd_moments_a)

    return parser


def _apply_config(argv: list[str]) -> list[str]:
    """Splice config key=value pairs in ahead of the explicit flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise SystemExit(EXIT_USAGE)
    path = argv[i + 1]
    injected: list[str] = []
    with open(path) as fp:
        for line in fp:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            injected.extend([f"--{key.strip().replace('_', '-')}", value.strip()])
    rest = argv[:i] + argv[i + 2:]
    return rest[:1] + injected + rest[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    args = parser.parse_args(argv)
    # scalar numeric options that double as sweep lists stay strings in the
    # parser; coerce them where the handler expects one float
    for attr, flag in (("w", "_w_float"), ("T", "_t_float")):
        if getattr(args, flag, False) and hasattr(args, attr):
            setattr(args, attr, float(getattr(args, attr)))
    start = time.monotonic()
    try:
        code = args.handler(args)
    except (ValueError, OverflowError, FloatingPointError) as exc:
        diag = {"command": args.command, "error": str(exc),
                "provenance": {"version": __version__, "seed": args.seed}}
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return EXIT_NUMERIC
    print(f"# {args.command}: {time.monotonic() - start:.2f}s wall",
          file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
