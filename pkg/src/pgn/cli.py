"""Command line front end: pgn <command> [options].

Exit status is 0 on success, 1 on a domain error (or a failed check) and
2 on a usage error.  With --json every command prints one JSON document.
"""
import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import approximator as ap
from . import constructions as co
from . import lattice as la
from . import templates as tp
from . import weights as wt
from .errors import PgnError
from .randomized import random_weights

GRAMMAR = """commands:
  validate TEMPLATE
  delta FILTRATION [--weights W]
  delta0 TEMPLATE
  approximate TEMPLATE [--C C] [--C1-cap X] [--out F] [--dump-system F]
  flips --from F --to G [--weights W]
  hn-track LATTICE --weights W [--t0 --t1 --step --bound --threads]
  blade-track LATTICE --weights W [--t0 --t1 --step]
  signatures LATTICE --weights W [--t0 --t1 --step]
  extract LATTICE --weights W [--t0 --t1 --step --bound --eps --out]
  match LATTICE TEMPLATE [--eps --C --step --bound]
  construct {connecting|bump|divergent} --weights W [--t0 --t1 --eps --horizon]
  compare-dims --weights W
  verify {appendix|pre-h|poset} [--max M --weights W --seed S]
common: --json --csv --out F --svg F --threads N"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"pgn: {message}\n\n{GRAMMAR}\n")


# ---------------------------------------------------------------- argument types

def _positive(text):
    x = wt.frac(text)
    if x <= 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return x


def _positive_int(text):
    k = int(text)
    if k <= 0:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return k


def _rational(text):
    try:
        return wt.frac(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e))


def _input(path):
    p = Path(path)
    if not p.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return p


# ---------------------------------------------------------------- output helpers

def _emit(args, text):
    """Primary output goes to --out when given, else to stdout."""
    if getattr(args, "out", None):
        Path(args.out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text.rstrip("\n"))


def _json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_default)


def _default(x):
    if isinstance(x, Fraction):
        return wt.fstr(x)
    if isinstance(x, float):
        return x
    if isinstance(x, tuple):
        return list(x)
    return str(x)


def _fl(x):
    """Float for JSON, with infinities as strings."""
    x = float(x)
    return x if abs(x) != float("inf") else ("inf" if x > 0 else "-inf")


def _mset(E):
    return "{" + ",".join(wt.fstr(x) for x in E) + "}"


def _filtration_str(F):
    return "(" + ", ".join("{}" if not E else _mset(E) for E in F.sets) + ")"


def _weights(args, required=True):
    if args.weights is None:
        if required:
            raise UsageError("--weights is required")
        return None
    return wt.parse_weights(args.weights)


def _template(path):
    return tp.template_from_json(Path(path).read_text())


def _lattice(path):
    return la.lattice_from_json(Path(path).read_text())


def _window(args, default=(-3, 3)):
    t0 = args.t0 if args.t0 is not None else Fraction(default[0])
    t1 = args.t1 if args.t1 is not None else Fraction(default[1])
    if t1 <= t0:
        raise UsageError("--t1 must exceed --t0")
    return t0, t1


def _float_grid(t0, t1, step):
    k = max(1, int(round((t1 - t0) / step)))
    return [t0 + (t1 - t0) * Fraction(i, k) for i in range(k + 1)]


def svg_tracks(f, width=640, height=360):
    """SVG drawing of the height tracks f_{H,l}, one polyline per level."""
    ts = sorted(set(tp.breakpoints(f)) | set(f.window))
    rows = [tp.heights_at(f, t) for t in ts]
    ys = [float(a[l]) for a in rows for l in range(f.n + 1)]
    t0, t1 = (float(x) for x in f.window)
    lo, hi = min(ys), max(ys)
    sx = (width - 40) / ((t1 - t0) or 1)
    sy = (height - 40) / ((hi - lo) or 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for l in range(1, f.n):
        pts = " ".join(f"{20 + (float(t) - t0) * sx:.2f},{height - 20 - (float(a[l]) - lo) * sy:.2f}"
                       for t, a in zip(ts, rows))
        out.append(f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _template_out(args, f, extra=None):
    """Template (or its CSV sample) to --out or stdout; with --json a summary on stdout."""
    if args.svg:
        Path(args.svg).write_text(svg_tracks(f))
    if args.csv:
        t0, t1 = f.window
        step = args.step if args.step is not None else (t1 - t0) / 50
        body = tp.sample_csv(f, _float_grid(t0, t1, step), exact=True)
    else:
        body = tp.template_to_json(f)
    if args.json:
        summary = dict(extra or {})
        if args.out:
            Path(args.out).write_text(body + ("" if body.endswith("\n") else "\n"))
        elif args.csv:
            summary["csv"] = body
        else:
            summary["template"] = tp.template_to_dict(f)
        print(_json(summary))
    else:
        _emit(args, body)


# ---------------------------------------------------------------- commands

def cmd_validate(args):
    f = _template(args.template)
    errs = tp.validate(f)
    if args.json:
        print(_json({"valid": not errs, "errors": errs}))
    else:
        print("valid" if not errs else "\n".join(errs))
    return 0 if not errs else 1


def cmd_delta(args):
    d = json.loads(Path(args.filtration).read_text())
    w = _weights(args, required=False) or wt.new_weights(d["multisets"][-1])
    F = wt.filtration_from_dict(w, d)
    x = wt.delta(F)
    print(_json({"delta": x, "levels": list(F.levels)}) if args.json else wt.fstr(x))
    return 0


def cmd_delta0(args):
    f = _template(args.template)
    x = tp.Delta0(f)
    if args.json:
        print(_json({"Delta0": x, "integral": tp.delta_integral(f), "window": list(f.window)}))
    else:
        print(f"{wt.fstr(x)} ({float(x):.6g}) on [{wt.fstr(f.window[0])}, {wt.fstr(f.window[1])}]")
    return 0


def cmd_approximate(args):
    f = _template(args.template)
    C = args.C if args.C is not None else Fraction(1)
    r = ap.make_significant_separated(f, C, args.C1_cap)
    if args.dump_system and r.system is not None:
        Path(args.dump_system).write_text(r.system.to_json() + "\n")
    summary = {"C": C, "C1": r.C1, "achieved_C1": r.amplitude, "closeness": r.closeness,
               "nu": {f"{l},{j}": v for (l, j), v in (r.shift.nu.items() if r.shift else [])}}
    if not args.json:
        print(f"C1 = {wt.fstr(r.C1)}, achieved C1 = {wt.fstr(r.amplitude)}, "
              f"closeness C' = {wt.fstr(r.closeness)}", file=sys.stderr)
    _template_out(args, r.template, summary)
    return 0


def cmd_flips(args):
    d0 = json.loads(Path(getattr(args, "from")).read_text())
    d1 = json.loads(Path(args.to).read_text())
    w = _weights(args, required=False) or wt.new_weights(d0["multisets"][-1])
    F, G = wt.filtration_from_dict(w, d0), wt.filtration_from_dict(w, d1)
    flips = wt.flip_decompose(F, G, w)
    chain = wt.flip_chain(F, flips)
    if args.json:
        print(_json({"flips": [{"from": fl.eta_from, "to": fl.eta_to, "a": fl.a, "b": fl.b}
                               for fl in flips],
                     "chain": [wt.filtration_to_dict(H) for H in chain]}))
        return 0
    print(f"{len(flips)} flips")
    print(f"E(0) = {_filtration_str(chain[0])}")
    for i, (fl, H) in enumerate(zip(flips, chain[1:]), 1):
        print(f"flip {i}: {fl}")
        print(f"E({i}) = {_filtration_str(H)}")
    return 0


def cmd_hn_track(args):
    L, w = _lattice(args.lattice), _weights(args)
    t0, t1 = _window(args)
    step = args.step if args.step is not None else Fraction(1, 8)
    tr = la.hn_track(L, w, _float_grid(t0, t1, step), args.bound, threads=args.threads)
    if args.json:
        _emit(args, _json({"times": list(tr.times),
                           "levels": [list(F.levels) for F in tr.filtrations],
                           "heights": [[float(x) for x in F.heights] for F in tr.filtrations],
                           "stable": [F.stable for F in tr.filtrations]}))
    else:
        _emit(args, la.hn_track_csv(tr))
    return 0


def cmd_blade_track(args):
    G, w = _lattice(args.lattice), _weights(args)
    t0, t1 = _window(args)
    step = args.step if args.step is not None else Fraction(1, 20)
    bt = la.blade_track(G, w, [float(t) for t in _float_grid(t0, t1, step)])
    segs = [{"lo": s.lo, "hi": s.hi, "slope": s.slope, "eta": s.eta,
             "label": [wt.fstr(x) for x in s.label]} for s in bt.segments]
    if args.json:
        _emit(args, _json({"times": list(bt.times), "values": list(bt.values), "segments": segs}))
    elif args.csv:
        _emit(args, "t,logcov\n" + "".join(f"{t!r},{v!r}\n" for t, v in zip(bt.times, bt.values)))
    else:
        _emit(args, "\n".join(f"[{s['lo']:.6g}, {s['hi']:.6g}] slope {s['slope']:.6g} "
                              f"label {{{','.join(s['label'])}}} eta {s['eta']:.6g}"
                              for s in segs))
    return 0


def cmd_signatures(args):
    V, w = _lattice(args.lattice), _weights(args)
    t0, t1 = _window(args, (-10, 10))
    step = args.step if args.step is not None else Fraction(1, 20)
    p = la.signature_intervals(V.basis, w, (float(t0), float(t1)), float(step))
    if args.json:
        _emit(args, _json({"intervals": [[_fl(a), _fl(b), [wt.fstr(x) for x in E]]
                                         for a, b, E in p.intervals],
                           "gaps": [[a, b] for a, b in p.gaps], "jumps": list(p.jumps)}))
    else:
        _emit(args, "\n".join(f"({a:.9g}, {b:.9g}) {_mset(E)}" for a, b, E in p.intervals))
    return 0


def cmd_extract(args):
    L, w = _lattice(args.lattice), _weights(args)
    t0, t1 = _window(args)
    ex = la.extract_template(L, w, (t0, t1), B=args.bound, step=args.step,
                             eps=None if args.eps is None else float(args.eps),
                             threads=args.threads)
    if not args.json:
        print(f"reported C = {ex.C:g}; runs kept {len(ex.runs)}, dropped {len(ex.dropped)}",
              file=sys.stderr)
    _template_out(args, ex.template, {"C": ex.C, "runs": len(ex.runs), "dropped": len(ex.dropped)})
    return 0


def cmd_match(args):
    L, f = _lattice(args.lattice), _template(args.template)
    C = float(args.C) if args.C is not None else 1.0
    grid = None
    if args.step is not None:
        grid = _float_grid(*f.window, args.step)
    ok, rep = la.matches(L, f, None if args.eps is None else float(args.eps), C, grid,
                         args.bound, threads=args.threads)
    if args.json:
        print(_json({"match": ok, **rep}))
    else:
        print("match" if ok else "no match")
        for msg in rep["failures"]:
            print(msg)
    return 0 if ok else 1


def cmd_construct(args):
    w = _weights(args)
    info = {}
    if args.kind == "connecting":
        f = co.connecting_template(w)
    elif args.kind == "bump":
        if args.t0 is None or args.t1 is None:
            raise UsageError("construct bump needs --t0 and --t1")
        f = co.make_bump(w, args.t0, args.t1, args.eps).template()
    else:
        if args.horizon is None:
            raise UsageError("construct divergent needs --horizon")
        f, meta = co.divergent_template(w, args.horizon)
        info = {"m0": meta["m0"], "eps_c": meta["eps_c"], "origin": meta["origin"],
                "bumps": len(meta["bumps"]), "Delta0": tp.Delta0(f)}
    _template_out(args, f, info)
    return 0


def cmd_compare_dims(args):
    p = co.dimension_profile(_weights(args))
    d = {"D": p.D, "Xi": p.Xi, "D_minus_Xi": p.D - p.Xi, "N": p.N, "zeta": list(p.zeta),
         "F_upper": [[x, y] for x, y in zip(p.F_upper.xs, p.F_upper.ys)],
         "F_lower": [[x, y] for x, y in zip(p.F_lower.xs, p.F_lower.ys)]}
    if args.json:
        print(_json(d))
        return 0
    print(f"D = {wt.fstr(p.D)}, Xi = {wt.fstr(p.Xi)}, D - Xi = {wt.fstr(p.D - p.Xi)}")
    print("zeta = " + ", ".join(wt.fstr(z) for z in p.zeta))
    print("F_upper: " + " ".join(f"({wt.fstr(x)},{wt.fstr(y)})" for x, y in d["F_upper"]))
    print("F_lower: " + " ".join(f"({wt.fstr(x)},{wt.fstr(y)})" for x, y in d["F_lower"]))
    return 0


def cmd_verify(args):
    if args.what == "appendix":
        m = args.max if args.max is not None else 6
        r = co.check_appendix(m)
        summary = {"ok": r["ok"], "max": m, "checked": r["checked"], "zeros": len(r["zeros"]),
                   "negatives": len(r["negatives"])}
        if args.json:
            print(_json(dict(summary, zero_set=r["zeros"], negative_set=r["negatives"])))
        else:
            print(f"{'ok' if r['ok'] else 'FAILED'}: {r['checked']} tuples with a, b, c <= {m}, "
                  f"{len(r['negatives'])} negative, zero set size {len(r['zeros'])}")
        return 0 if r["ok"] else 1
    if args.what == "pre-h":
        if args.weights is not None:
            ws = [_weights(args)]
        else:
            rng = random.Random(args.seed if args.seed is not None else 0)
            count = args.max if args.max is not None else 100
            ws = []
            for _ in range(count):
                n = rng.randint(2, 6)
                ws.append(random_weights(rng, n, zero=n > 2 and rng.random() < 0.3))
        reports = [(w, co.check_preH_all(w)) for w in ws]
        ok = all(r["ok"] for _, r in reports)
        checked = sum(r["checked"] for _, r in reports)
        bad = [(w, r["violations"]) for w, r in reports if not r["ok"]]
        if args.json:
            print(_json({"ok": ok, "weights": len(ws), "checked": checked,
                         "violations": [[list(w.values), v] for w, v in bad]}))
        else:
            print(f"{'ok' if ok else 'FAILED'}: {len(ws)} weight vectors, {checked} cases")
            for w, v in bad:
                print(f"{list(map(wt.fstr, w.values))}: {v}")
        return 0 if ok else 1
    w = _weights(args, required=False) or wt.parse_weights("-2,-1,1,2")
    r = wt.check_poset(w)
    if args.json:
        print(_json({k: v for k, v in r.items() if k != "failures"}
                    | {"failures": [[_filtration_str(F), _filtration_str(G), why]
                                    for F, G, why in r["failures"]]}))
    else:
        print(f"{'ok' if r['ok'] else 'FAILED'}: {r['filtrations']} filtrations, "
              f"{r['pairs']} pairs, {r['comparable']} comparable")
    return 0 if r["ok"] else 1


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--weights")
    common.add_argument("--C", type=_positive)
    common.add_argument("--C1-cap", dest="C1_cap", type=_positive)
    common.add_argument("--eps", type=_positive)
    common.add_argument("--bound", type=_positive_int, default=3)
    common.add_argument("--t0", type=_rational)
    common.add_argument("--t1", type=_rational)
    common.add_argument("--step", type=_positive)
    common.add_argument("--horizon", type=_positive)
    common.add_argument("--max", type=_positive_int)
    common.add_argument("--json", action="store_true")
    common.add_argument("--csv", action="store_true")
    common.add_argument("--out")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=_positive_int, default=1)
    common.add_argument("--dump-system", dest="dump_system")
    common.add_argument("--svg")

    p = _Parser(prog="pgn", description="Parametric geometry of numbers toolkit.",
                epilog=GRAMMAR, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, *pos):
        s = sub.add_parser(name, parents=[common])
        for arg in pos:
            s.add_argument(arg, type=_input)
        s.set_defaults(func=func)
        return s

    add("validate", cmd_validate, "template")
    add("delta", cmd_delta, "filtration")
    add("delta0", cmd_delta0, "template")
    add("approximate", cmd_approximate, "template")
    s = add("flips", cmd_flips)
    s.add_argument("--from", required=True, type=_input)
    s.add_argument("--to", required=True, type=_input)
    add("hn-track", cmd_hn_track, "lattice")
    add("blade-track", cmd_blade_track, "lattice")
    add("signatures", cmd_signatures, "lattice")
    add("extract", cmd_extract, "lattice")
    add("match", cmd_match, "lattice", "template")
    s = add("construct", cmd_construct)
    s.add_argument("kind", choices=["connecting", "bump", "divergent"])
    add("compare-dims", cmd_compare_dims)
    s = add("verify", cmd_verify)
    s.add_argument("what", choices=["appendix", "pre-h", "poset"])
    return p


_SIGNED = ("--weights", "--t0", "--t1")


def _join_signed(argv):
    """Glue values such as "-1,0,1" to their option so argparse keeps them."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _SIGNED and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(_join_signed(sys.argv[1:] if argv is None else list(argv)))
    try:
        return args.func(args)
    except UsageError as e:
        print(f"pgn: {e}\n\n{GRAMMAR}", file=sys.stderr)
        return 2
    except PgnError as e:
        print(f"pgn: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        print(f"pgn: bad input: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
