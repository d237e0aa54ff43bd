"""Command-line entry point ``thompson-fock``.

Every output document has the shape ``{"schema_version", "command",
"config", "result"}``; floats are printed with 17 significant digits so that
identical configurations give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from typing import Any

import numpy as np

from . import __version__
from .dyadic import ExactScalar, Dyadic, TAU_ENV, get_tau, set_tau

SCHEMA_VERSION = 1


# ----------------------------------------------------------------------
# deterministic JSON
# ----------------------------------------------------------------------
def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _plain(obj: Any) -> Any:
    if isinstance(obj, (ExactScalar, Dyadic)):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with 17-significant-digit floats and sorted-free key order."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(x), (int, float, str, bool, type(None))) for x in obj):
            return "[" + ", ".join(dumps(x, indent, _level + 1) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(x, indent, _level + 1) for x in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _document(command: str, config: dict, result: Any) -> str:
    return dumps({"schema_version": SCHEMA_VERSION, "command": command, "config": config,
                  "result": result}) + "\n"


# ----------------------------------------------------------------------
# argument helpers
# ----------------------------------------------------------------------
def _parse_m(args):
    from .haar import RotationM

    text = getattr(args, "M", None) or "hadamard"
    angle = getattr(args, "angle_deg", None)
    if angle is not None:
        return RotationM.rotation(angle)
    if text == "hadamard":
        return RotationM.hadamard()
    if text.startswith("angle:"):
        return RotationM.rotation(float(text.split(":", 1)[1]))
    parts = [complex(p.replace("i", "j")) for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError("--M takes 'hadamard', 'angle:<deg>' or four comma-separated entries")
    return RotationM.from_entries(np.array(parts).reshape(2, 2))


def _parse_word(text: str, notices: list[str]):
    from .thompson import NAMED_WORDS, GroupWord, evaluate_word

    key = text.strip()
    if key.upper() in NAMED_WORDS:
        w = GroupWord.parse(NAMED_WORDS[key.upper()])
    else:
        w = GroupWord.parse(key)
    if w.was_reduced:
        msg = f"word {text!r} auto-reduced to {str(w)!r}"
        notices.append(msg)
        print(f"notice: {msg}", file=sys.stderr)
    return w, evaluate_word(w)


def _config(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in ("func",)}
    d["tau"] = get_tau()
    return d


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_verify(args) -> tuple[Any, int]:
    if args.what == "relations":
        from .thompson import verify_relations

        res = verify_relations()
        return {"relations": res}, 0 if all(r["identity"] for r in res) else 1
    if args.what == "appendix":
        from .appendix import check_case_formulas, compare_reference

        rep = compare_reference(args.which, args.level)
        gen = "A" if args.which == "uA" else "B"
        rep["case_formulas"] = check_case_formulas(gen)
        ok = rep["orthonormal"] and not rep["case_formulas"]["failures"]
        return rep, 0 if ok else 1
    from .fock import check_car_relations

    rep = check_car_relations(args.modes)
    return rep, 0 if rep["car_exact"] and rep["kernel_is_vacuum"] else 1


def cmd_matrix(args):
    from .haar import ModeIndex, koopman_window

    notices: list[str] = []
    w, g = _parse_word(args.g, notices)
    M = _parse_m(args)
    win = koopman_window(g, M, args.level)
    if args.format == "csv":
        dense = win.to_dense(complex)
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        labels = [ModeIndex.from_index(i).label for i in win.rows]
        wr.writerow(["row\\col"] + labels)
        for lab, row in zip(labels, dense):
            cells = []
            for z in row:
                cells.append(_fmt_float(z.real) if z.imag == 0 else f"{_fmt_float(z.real)}{'+' if z.imag >= 0 else '-'}{_fmt_float(abs(z.imag))}j")
            wr.writerow([lab] + cells)
        return buf.getvalue(), 0
    out = win.to_json()
    out["word"] = str(w)
    out["notices"] = notices
    out["orthonormality"] = win.check_orthonormal()
    return out, 0


def cmd_hs_norm(args):
    from .restricted import hs_norm_commutator, segal_distance

    notices: list[str] = []
    w, g = _parse_word(args.g, notices)
    M = _parse_m(args)
    hs = hs_norm_commutator(g, M, args.level)
    sg = segal_distance(g, M, args.level)
    return {
        "word": str(w),
        "value": hs.value,
        "exact_sq": str(hs.exact_sq) if hs.exact_sq is not None else None,
        "contributions": hs.contributions,
        "segal_distance": sg.value,
        "segal_exact_sq": str(sg.exact_sq) if sg.exact_sq is not None else None,
        "notices": notices,
    }, 0


def cmd_index(args):
    from .restricted import fredholm_index

    notices: list[str] = []
    w, g = _parse_word(args.g, notices)
    M = _parse_m(args)
    r = fredholm_index(g, M, args.level)
    return {"word": str(w), "index": r.index, "levels": r.levels, "kernel": r.kernel,
            "cokernel": r.cokernel, "exact": r.exact, "diagnostics": r.diagnostics,
            "notices": notices}, 0


def cmd_logm(args):
    from .haar import ModeIndex
    from .restricted import unitary_log
    from .thompson import named_element

    M = _parse_m(args)
    X = unitary_log(named_element(args.g), M, args.level, args.g)
    res = X.summary()
    res["hermitian_defect"] = X.hermitian_defect()
    mat = X.pq_matrix() if args.basis == "pq" else X.cell_matrix()
    idx = np.argwhere(np.abs(mat) > args.threshold)
    res["basis"] = args.basis
    res["order"] = ([ModeIndex.from_index(i).label for i in range(X.dim)] if args.basis == "pq"
                    else [f"cell{j}" for j in range(X.dim)])
    res["threshold"] = args.threshold
    res["entries"] = [[int(i), int(j), float(mat[i, j].real), float(mat[i, j].imag)] for i, j in idx]
    return res, 0


def cmd_phase(args):
    from .restricted import phase_b, unitary_log
    from .thompson import named_element

    M = _parse_m(args)
    a, b = args.pair[0], args.pair[1]
    X = unitary_log(named_element(a), M, args.level, a)
    Y = unitary_log(named_element(b), M, args.level, b)
    pb = phase_b(X, Y)
    return {
        "pair": args.pair,
        "value": pb.value,
        "im_trace": pb.im_trace,
        "trace": pb.trace,
        "commutator_norm": pb.commutator_norm,
        "warning": pb.warning,
        "logs": [X.summary(), Y.summary()],
    }, 0


def cmd_fock(args):
    from .fock import commutator_phase, solve_vacuum

    M = _parse_m(args)
    notices: list[str] = []
    if args.what == "vacuum":
        w, g = _parse_word(args.g, notices)
        r = solve_vacuum(g, M, args.modes)
        res = r.summary()
        res["word"] = str(w)
        res["vector"] = r.vector.to_json()
        res["notices"] = notices
        return res, 0
    w1, g1 = _parse_word(args.w1, notices)
    w2, g2 = _parse_word(args.w2, notices)
    cp = commutator_phase(g1, g2, M, args.modes, args.tau_scalar)
    return {"w1": str(w1), "w2": str(w2), "value": cp.value, "dispersion": cp.dispersion,
            "labels": cp.labels, "notices": notices}, 0


def cmd_psi(args):
    from .lifting import lifting_report, psi

    M = _parse_m(args)
    pair = psi(M, args.modes, args.cross_check, args.log_level)
    res = pair.to_dict()
    if args.verdict:
        res["verdict"] = lifting_report(M, args.modes).to_dict()
    return res, 0


def cmd_psi_scan(args):
    from .lifting import psi_scan, scan_csv

    angles = [360.0 * k / args.steps for k in range(args.steps)]
    rows = psi_scan(angles, args.modes, args.cross_check, args.log_level)
    code = 0 if all(err is None for _, _, err in rows) else 1
    if args.format == "csv":
        return scan_csv(rows), code
    return [{"theta_deg": th, "pair": p.to_dict() if p else None, "error": err} for th, p, err in rows], code


def cmd_dgr(args):
    from .dgr import check_d_squared, check_leibniz

    rep = check_d_squared(args.check_len)
    n, bad = check_leibniz(max_len=args.check_len)
    res = {"max_len": rep.max_len, "checked": rep.checked, "d_squared_zero": rep.passed,
           "witness": rep.witness, "degree_drop": rep.degree_drop_ok, "examples": rep.examples,
           "leibniz_random_words": n, "leibniz_witness": bad}
    return res, 0 if rep.passed and bad is None else 1


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
def _add_m(p):
    p.add_argument("--M", default="hadamard",
                   help="'hadamard' (default), 'angle:<deg>' or four entries 'a,b,c,d' (row major)")


def _add_out(p, formats=("json",)):
    p.add_argument("--out", default=None, help="output path (default stdout)")
    if len(formats) > 1:
        p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thompson-fock", description="Thompson group F Koopman/Fock toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--tau", type=float, default=None, help=f"default tolerance (env {TAU_ENV})")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="relations, reference matrices or CAR relations")
    vs = p.add_subparsers(dest="what", required=True)
    q = vs.add_parser("relations")
    _add_out(q)
    q = vs.add_parser("appendix")
    q.add_argument("--which", choices=("uA", "uB"), default="uA")
    q.add_argument("--level", type=int, default=None)
    _add_out(q)
    q = vs.add_parser("car")
    q.add_argument("--modes", type=int, default=10)
    _add_out(q)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("matrix", help="Koopman window in the P/Q basis")
    p.add_argument("--g", required=True, help="word such as 'A B^-1' or a name A..E")
    p.add_argument("--level", type=int, required=True)
    _add_m(p)
    _add_out(p, ("json", "csv"))
    p.set_defaults(func=cmd_matrix)

    for name, fn in (("hs-norm", cmd_hs_norm), ("index", cmd_index)):
        p = sub.add_parser(name)
        p.add_argument("--g", required=True)
        p.add_argument("--level", type=int, required=True)
        _add_m(p)
        _add_out(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("logm", help="principal logarithm of a relation element")
    p.add_argument("--g", choices=("C", "D", "E"), required=True)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--basis", choices=("pq", "cell"), default="pq")
    p.add_argument("--threshold", type=float, default=1e-12, help="drop entries below this magnitude")
    _add_m(p)
    _add_out(p)
    p.set_defaults(func=cmd_logm)

    p = sub.add_parser("phase", help="commuting-case phase from logarithms")
    p.add_argument("--pair", choices=("CD", "CE"), required=True)
    p.add_argument("--level", type=int, default=10)
    _add_m(p)
    _add_out(p)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("fock", help="vacuum vectors and direct commutator phases")
    fs = p.add_subparsers(dest="what", required=True)
    q = fs.add_parser("vacuum")
    q.add_argument("--g", required=True)
    q.add_argument("--modes", type=int, default=14)
    _add_m(q)
    _add_out(q)
    q = fs.add_parser("phase")
    q.add_argument("--w1", required=True)
    q.add_argument("--w2", required=True)
    q.add_argument("--modes", type=int, default=14)
    q.add_argument("--tau-scalar", type=float, default=1e-6)
    _add_m(q)
    _add_out(q)
    p.set_defaults(func=cmd_fock)

    p = sub.add_parser("psi", help="obstruction pair for one M")
    p.add_argument("--angle-deg", type=float, default=None, help="rotation angle (overrides --M)")
    p.add_argument("--modes", type=int, default=14)
    p.add_argument("--cross-check", action="store_true", help="also run the logarithm pipeline")
    p.add_argument("--log-level", type=int, default=10)
    p.add_argument("--verdict", action="store_true", help="attach a two-window verdict")
    _add_m(p)
    _add_out(p)
    p.set_defaults(func=cmd_psi)

    p = sub.add_parser("psi-scan", help="obstruction pair over equally spaced rotations")
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--modes", type=int, default=14)
    p.add_argument("--cross-check", action="store_true")
    p.add_argument("--log-level", type=int, default=10)
    _add_out(p, ("csv", "json"))
    p.set_defaults(func=cmd_psi_scan)

    p = sub.add_parser("dgr", help="differential graded ring checks")
    p.add_argument("--check-len", type=int, default=10)
    _add_out(p)
    p.set_defaults(func=cmd_dgr)
    return ap


def _command_name(args) -> str:
    name = args.command
    if getattr(args, "what", None):
        name += " " + args.what
    return name


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.tau is not None:
        set_tau(args.tau)
    t0 = time.perf_counter()
    try:
        result, code = args.func(args)
    except Exception as exc:
        err = {"schema_version": SCHEMA_VERSION, "command": _command_name(args),
               "error": type(exc).__name__, "message": str(exc)}
        print(dumps(err), file=sys.stderr)
        return 1
    if isinstance(result, str):
        cfg = json.dumps(_plain(_config(args)), sort_keys=True, default=str)
        text = f"# schema_version: {SCHEMA_VERSION}\n# command: {_command_name(args)}\n# config: {cfg}\n" + result
    else:
        text = _document(_command_name(args), _config(args), result)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({time.perf_counter() - t0:.2f} s)", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
