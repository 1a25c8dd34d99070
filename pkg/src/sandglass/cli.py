"""Command line interface: `sandglass <subcommand> [options]`.

Every subcommand accepts `--config FILE` with `key = value` lines using the
long option names (dashes or underscores); command-line flags take
precedence. Exit status is 0 on success, 1 on a domain error and 2 on a
usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .errors import SandglassError

FLOAT = "%.17g"


def fmt(x) -> str:
    return FLOAT % x


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for k, ln in enumerate(fh, 1):
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            key, sep, val = ln.partition("=")
            if not sep:
                raise UsageError(f"{path}:{k}: expected 'key = value'")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def q2_value(text):
    if text is None or str(text).lower() == "auto":
        return "auto"
    return float(text)


def _common(p, q1=True):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--n", type=int, help="twist order n >= 3")
    if q1:
        p.add_argument("--q1", type=float, help="squared length Q1 (= Q4)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sandglass", description="Sandglass quasi-mechanisms on antiprismatic skeletons.")
    ap.add_argument("--version", action="version", version=f"sandglass {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("realize", help="list the symmetric realizations of a design")
    _common(p)
    p.add_argument("--q2", type=q2_value, help="Q2 value or 'auto' (default auto)")
    p.add_argument("--q3", help="Q3 value or 'origami' (default origami)")
    p.add_argument("--family", choices=["snap", "shaky"], help="branch used for --q2 auto (default snap)")

    p = sub.add_parser("origami", help="Q3 from the developability condition")
    _common(p)
    p.add_argument("--q2", type=float)

    p = sub.add_parser("shaky", help="shaky design at Q1 and its shakeability")
    _common(p)

    p = sub.add_parser("snap", help="extremal snapping pair, saddle and snappability")
    _common(p)
    p.add_argument("--q2", type=q2_value, help="Q2 value or 'auto' (lowest extremal branch)")
    p.add_argument("--out", help="directory for open/saddle/closed OBJ files")

    for name, lo, hi, step, hlp in (
        ("sweep-snap", 0.25, 5.0, 0.01, "snap sweep over Q1 (CSV)"),
        ("sweep-shake", 0.25, 0.31, 0.001, "shake sweep over Q1 (CSV)"),
    ):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--config")
        p.add_argument("--n", type=int, nargs="+", help="one or more twist orders (default 3 4 5 6)")
        p.add_argument("--q1-min", type=float, help=f"exclusive lower end (default {lo})")
        p.add_argument("--q1-max", type=float, help=f"inclusive upper end (default {hi})")
        p.add_argument("--step", type=float, help=f"grid step (default {step})")
        p.add_argument("--out", help="CSV path (default stdout)")
        p.add_argument("--plots", help="directory for SVG charts")
        if name == "sweep-snap":
            p.add_argument("--workers", type=int, help="process count (capped by SANDGLASS_THREADS)")
        p.set_defaults(_range=(lo, hi, step))

    p = sub.add_parser("export-obj", help="write one state of a design as OBJ")
    _common(p)
    p.add_argument("--q2", type=q2_value)
    p.add_argument("--family", choices=["snap", "shaky"])
    p.add_argument("--state", choices=["open", "closed", "saddle", "shaky"], help="default: open (snap), shaky (shaky)")
    p.add_argument("--out", help="OBJ path")

    p = sub.add_parser("export-crease", help="write the crease pattern as SVG")
    _common(p)
    p.add_argument("--q2", type=q2_value)
    p.add_argument("--family", choices=["snap", "shaky"])
    p.add_argument("--reference", choices=["open", "closed", "shaky"], help="folded state giving mountain/valley")
    p.add_argument("--mirror", action="store_true", default=None, help="use the mirror image of the reference state")
    p.add_argument("--caps", choices=["auto", "yes", "no"], help="draw the n-gon caps (auto: n > 3)")
    p.add_argument("--out", help="SVG path")

    p = sub.add_parser("animate", help="OBJ frame sequence along the snap path")
    _common(p)
    p.add_argument("--q2", type=q2_value)
    p.add_argument("--frames", type=int, help="number of frames >= 2 (default 24)")
    p.add_argument("--out", help="output directory")
    return ap


DEFAULTS = {
    "q2": "auto",
    "q3": "origami",
    "family": None,
    "state": None,
    "reference": None,
    "mirror": False,
    "caps": "auto",
    "frames": 24,
    "workers": None,
    "out": None,
    "plots": None,
}

CONVERTERS = {"n": int, "q1": float, "q2": q2_value, "q1_min": float, "q1_max": float, "step": float, "frames": int,
              "workers": int, "mirror": lambda v: str(v).lower() in ("1", "true", "yes", "on")}  # fmt: skip


def resolve(args) -> argparse.Namespace:
    """Merge config file values under the flags and fill defaults; unknown keys are usage errors."""
    known = {k for k in vars(args) if not k.startswith("_") and k not in ("command", "config")}
    if args.config:
        cfg = read_config(args.config)
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        for k, v in cfg.items():
            if getattr(args, k) is None:
                if k == "n" and args.command.startswith("sweep"):
                    setattr(args, k, [int(t) for t in v.replace(",", " ").split()])
                else:
                    setattr(args, k, CONVERTERS.get(k, str)(v))
    for k in known:
        if getattr(args, k) is None and k in DEFAULTS:
            setattr(args, k, DEFAULTS[k])
    if hasattr(args, "_range"):
        lo, hi, step = args._range
        args.n = args.n or [3, 4, 5, 6]
        args.q1_min = lo if args.q1_min is None else args.q1_min
        args.q1_max = hi if args.q1_max is None else args.q1_max
        args.step = step if args.step is None else args.step
    else:
        for k in ("n", "q1"):
            if k in known and getattr(args, k) is None:
                raise UsageError(f"--{k} is required")
    return args


# ---------------------------------------------------------------------------
# commands


def _design(args, family=None):
    """(spec, context) for --n/--q1/--q2 with 'auto' resolution per family."""
    from .geometry import DesignSpec
    from .origami import origami_Q3, origami_spec
    from .singular import shaky_design
    from .snap import extremal_Q2

    family = family or getattr(args, "family", None) or "snap"
    q3 = getattr(args, "q3", "origami")
    if args.q2 == "auto":
        if family == "shaky":
            d = shaky_design(args.n, args.q1)
            return d.spec, d
        Q2 = extremal_Q2(args.n, args.q1, verify=False)
    else:
        Q2 = args.q2
    if q3 in (None, "origami"):
        return origami_spec(args.n, args.q1, Q2), None
    try:
        Q3 = float(q3)
    except ValueError:
        raise UsageError(f"--q3 must be a number or 'origami', got {q3!r}") from None
    origami = False
    try:
        origami = abs(origami_Q3(args.q1, Q2) - Q3) <= 1e-12 * max(1.0, Q3)
    except SandglassError:
        pass
    return DesignSpec.sandglass(args.n, args.q1, Q2, Q3, origami=origami), None


def _print_spec(spec, out):
    for k in ("n", "Q1", "Q2", "Q3", "Q4"):
        v = getattr(spec, k)
        print(f"{k} = {v if k == 'n' else fmt(v)}", file=out)


def cmd_realize(args, out):
    from .realize import realize

    spec, _ = _design(args)
    rs = realize(spec)
    _print_spec(spec, out)
    print(f"discriminant = {fmt(rs.discriminant)}", file=out)
    print("index,H,h,r,multiplicity,residual,degenerate", file=out)
    for k, (x, m, res, deg) in enumerate(zip(rs.realizations, rs.multiplicity, rs.residuals, rs.degenerate)):
        print(f"{k},{fmt(x.H)},{fmt(x.h)},{fmt(x.r)},{m},{fmt(res)},{int(deg)}", file=out)


def cmd_origami(args, out):
    from .origami import develop, origami_Q3
    from .geometry import DesignSpec

    if args.q2 is None:
        raise UsageError("--q2 is required")
    Q3 = origami_Q3(args.q1, args.q2)
    print(f"Q3 = {fmt(Q3)}", file=out)
    dev = develop(DesignSpec.sandglass(args.n, args.q1, args.q2, Q3, origami=True))
    print(f"a = {fmt(dev.a)}", file=out)
    print(f"b = {fmt(dev.b)}", file=out)
    print(f"f = {fmt(dev.f)}", file=out)


def cmd_shaky(args, out):
    from .shake import shake_realization
    from .singular import full_rigidity_matrix, kernel_dimension, shaky_design

    d = shaky_design(args.n, args.q1)
    res = shake_realization(d.realization)
    _print_spec(d.spec, out)
    x = d.realization
    for k, v in (("H", x.H), ("h", x.h), ("r", x.r), ("u", res.flex.u), ("v", res.flex.v), ("z", res.flex.z)):
        print(f"{k} = {fmt(v)}", file=out)
    for k, v in zip(("d1", "d2", "d3"), res.rates):
        print(f"{k} = {fmt(v)}", file=out)
    print(f"kappa = {fmt(res.kappa)}", file=out)
    print(f"normalization = {res.normalization}", file=out)
    print(f"kernel_dimension = {kernel_dimension(full_rigidity_matrix(x))}", file=out)
    if d.alternates:
        print("alternate_Q2 = " + " ".join(fmt(q) for q in d.alternates), file=out)


def _snap(args):
    from .snap import snap_pair

    return snap_pair(args.n, args.q1, None if args.q2 == "auto" else args.q2)


def cmd_snap(args, out):
    from .export import realization_params, write_obj
    from .geometry import Realization, build_vertices

    res = _snap(args)
    _print_spec(res.spec, out)
    for label, x in (("open", res.open.coords), ("saddle", res.saddle), ("closed", res.closed.coords)):
        print(f"{label} = {fmt(x[0])} {fmt(x[1])} {fmt(x[2])}", file=out)
    print(f"sigma = {fmt(res.sigma)}", file=out)
    print("saddle_lengths = " + " ".join(fmt(v) for v in res.saddle_lengths), file=out)
    for k, v in res.appendix_measures().items():
        print(f"{k} = {fmt(v)}", file=out)
    for k, v in res.flags.items():
        print(f"{k} = {fmt(v) if isinstance(v, float) else v}", file=out)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for label, x in (("open", res.open.coords), ("saddle", res.saddle), ("closed", res.closed.coords)):
            real = Realization.from_coords(x, res.spec)
            p = write_obj(os.path.join(args.out, f"{label}.obj"), build_vertices(res.spec, real), realization_params(real, state=label))
            print(f"wrote {p}", file=out)


def _header(args):
    skip = {"command", "config", "out", "plots"}
    items = [f"{k}={v}" for k, v in sorted(vars(args).items()) if not k.startswith("_") and k not in skip]
    return f"sandglass {__version__} {args.command}\n" + " ".join(items)


def _write_table(args, rows, columns, out, key):
    from .plotting import render_report
    from .sweeps import write_csv

    if args.out in (None, "-"):
        write_csv(out, rows, columns, header_comment=_header(args))
    else:
        write_csv(args.out, rows, columns, header_comment=_header(args))
        print(f"wrote {args.out} ({len(rows)} rows)", file=sys.stderr)
    if args.plots:
        for p in render_report(args.plots, **{key: rows}):
            print(f"wrote {p}", file=sys.stderr)


def cmd_sweep_snap(args, out):
    from .sweeps import SNAP_COLUMNS, sweep_snap

    rows = sweep_snap(args.n, args.q1_min, args.q1_max, args.step, workers=args.workers)
    _write_table(args, rows, SNAP_COLUMNS, out, "snap_rows")


def cmd_sweep_shake(args, out):
    from .sweeps import SHAKE_COLUMNS, sweep_shake_table

    rows = sweep_shake_table(args.n, args.q1_min, args.q1_max, args.step)
    _write_table(args, rows, SHAKE_COLUMNS, out, "shake_rows")


def _state(args):
    """Spec and the requested state (H, h, r) of a snap or shaky design."""
    from .geometry import Realization
    from .singular import shaky_design

    family = args.family or "snap"
    state = getattr(args, "state", None) or getattr(args, "reference", None)
    if family == "shaky":
        if args.q2 != "auto":
            raise UsageError("shaky designs take --q2 auto")
        d = shaky_design(args.n, args.q1)
        state = state or "shaky"
        if state != "shaky":
            raise UsageError(f"state {state!r} does not exist for a shaky design")
        return d.spec, d.realization, state
    res = _snap(args)
    state = state or "open"
    coords = {"open": res.open.coords, "closed": res.closed.coords, "saddle": res.saddle}.get(state)
    if coords is None:
        raise UsageError(f"state {state!r} does not exist for a snapping design")
    return res.spec, Realization.from_coords(coords, res.spec), state


def cmd_export_obj(args, out):
    from .export import obj_text, realization_params, write_obj
    from .geometry import build_vertices

    spec, real, state = _state(args)
    params = realization_params(real, state=state)
    if args.out:
        write_obj(args.out, build_vertices(spec, real), params)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        out.write(obj_text(build_vertices(spec, real), params))


def cmd_export_crease(args, out):
    from .origami import crease_pattern

    if args.family in (None, "snap") and args.reference is None:
        args.reference = "closed"
    spec, real, _ = _state(args)
    if args.mirror:
        real = real.mirror()
    caps = {"auto": None, "yes": True, "no": False}[args.caps]
    svg = crease_pattern(spec, real, caps=caps)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(svg)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        out.write(svg)


def cmd_animate(args, out):
    from .export import animate

    if not args.out:
        raise UsageError("--out directory is required")
    res = _snap(args)
    paths = animate(res, args.frames, args.out)
    print(f"wrote {len(paths)} frames to {args.out}", file=out)


COMMANDS = {
    "realize": cmd_realize,
    "origami": cmd_origami,
    "shaky": cmd_shaky,
    "snap": cmd_snap,
    "sweep-snap": cmd_sweep_snap,
    "sweep-shake": cmd_sweep_shake,
    "export-obj": cmd_export_obj,
    "export-crease": cmd_export_crease,
    "animate": cmd_animate,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = resolve(args)
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sandglass: error: {exc}", file=sys.stderr)
        return 2
    except (SandglassError, OSError) as exc:
        print(f"sandglass: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
