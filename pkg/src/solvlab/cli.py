"""Command-line front end: ``solvlab <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import boundary, furman, groups, horoprod, modelcount, qimaps, spaces, spectral
from .errors import SolvlabError
from .madic import MAdic
from .suites import SUITES, ExperimentConfig, SuiteResult, run_suite


def _json_default(x):
    if isinstance(x, (Fraction, MAdic)):
        return str(x) if isinstance(x, Fraction) else x.to_literal()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x)


def _csv_cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (str, int, float)):
        return x
    return json.dumps(x, sort_keys=True, default=_json_default)


def _to_csv(payload):
    rows = payload if isinstance(payload, list) else [payload]
    columns = sorted({k for row in rows for k in row})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _emit(args, payload):
    if isinstance(payload, str):
        text = payload
    elif _fmt(args) == "csv":
        text = _to_csv(payload)
    else:
        text = json.dumps(payload, sort_keys=True, indent=1, default=_json_default) + "\n"
    if args.out and args.out not in ("-", "csv", "json"):
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(args):
    # "--out csv" doubles as a format switch when no file is meant
    if args.out in ("csv", "json"):
        return args.out
    if args.format is None:
        return "csv" if args.command == "run" else "json"
    return args.format


def _failure(module, operation, witness, code=1):
    sys.stderr.write(json.dumps({"module": module, "operation": operation, "witness": str(witness)},
                                sort_keys=True) + "\n")
    return code


# -- handlers ---------------------------------------------------------------------


def cmd_spectral(args):
    split = spectral.analyze(spectral.parse_matrix(args.matrix))
    _emit(args, spectral.split_to_json(split))
    return 0


def cmd_space(args):
    if args.action == "dist":
        args.action = "tree-dist" if args.kind == "tree" else "g-dist"
    if args.action == "tree-dist":
        x, y = spaces.TreeVertex.parse(args.m, args.x), spaces.TreeVertex.parse(args.m, args.y)
        _emit(args, {"distance": spaces.tree_distance(x, y)})
    elif args.action == "horofunction":
        x = spaces.TreeVertex.parse(args.m, args.x)
        T = args.T if args.T is not None else spaces.stabilization_margin(x)
        _emit(args, {"horofunction": spaces.horofunction(x, T), "T": T})
    elif args.action == "g-dist":
        split = spectral.analyze(spectral.parse_matrix(args.matrix))
        lam = split.block_diag(1)
        p = spaces.GPoint(args.t, json.loads(args.x))
        q = spaces.GPoint(args.s if args.s is not None else args.t, json.loads(args.y))
        out = {"coarse": spaces.coarse_distance_G(p, q, lam)}
        if p.t == q.t:
            out["horospherical"] = spaces.horospherical_distance(p, q, lam)
        _emit(args, out)
    return 0


def _model_point(space, text):
    if space.kind == horoprod.DL:
        n, m = space.branching
        a, b = text.split(",")
        return horoprod.make_point(space, (spaces.TreeVertex.parse(n, a), spaces.TreeVertex.parse(m, b)))
    data = json.loads(text)
    if space.kind == horoprod.SOL:
        return horoprod.make_point(space, data)
    y = MAdic.parse(space.split.det, data["y"]) if data.get("y") is not None else None
    return horoprod.make_point(space, horoprod.XPoint(tuple(data["v"]), data.get("t", 0), y))


def cmd_model(args):
    space = horoprod.ModelSpace.parse(args.space)
    if args.action == "mk" or args.x is None:
        _emit(args, {"kind": space.kind, "factors": list(space.factor_kinds()),
                     "split": spectral.split_to_json(space.split) if space.split else None})
        return 0
    if args.y is None:
        raise SystemExit("model dist needs --u and --v")
    p, q = _model_point(space, args.x), _model_point(space, args.y)
    if space.kind == horoprod.DL:
        # BFS is exact but capped; the closed form is reported alongside
        out = {"distance": horoprod.dl_distance(p, q), "method": "bfs",
               "formula": horoprod.dl_distance_formula(p, q)}
    else:
        out = {"distance": horoprod.coarse_distance(p, q, space), "method": "coarse"}
    _emit(args, out)
    return 0


def cmd_boundary(args):
    if args.kind == "madic":
        d = boundary.madic_dist(MAdic.parse(args.m, args.x), MAdic.parse(args.m, args.y))
        _emit(args, {"distance": str(d), "float": float(d)})
    elif args.kind == "dm":
        split = spectral.analyze(spectral.parse_matrix(args.matrix))
        d = boundary.dM_metric(json.loads(args.x), json.loads(args.y), split, side=args.side)
        _emit(args, {"distance": d})
    else:
        lam = json.loads(args.lam) if args.lam else None
        if lam is None:
            xi, eta = MAdic.parse(args.m, args.x), MAdic.parse(args.m, args.y)
        else:
            xi, eta = json.loads(args.x), json.loads(args.y)
        _emit(args, {"distance": boundary.visual_metric(xi, eta, args.a, args.eps, lam=lam)})
    return 0


def cmd_group(args):
    if args.action == "wordlen":
        G = groups.parse_group(args.group)
        g = G.word(args.word)
        kind = args.gens
        _emit(args, {"element": groups.element_to_json(g), "word_length": groups.word_length(g, args.R, kind)})
    elif args.action == "verify":
        G = groups.AbcGroup(spectral.parse_matrix(args.matrix))
        pts = groups.sample_points(G, args.samples, seed=args.seed, exact=args.exact)
        rep = groups.verify_relations(G, pts, raise_on_violation=False)
        _emit(args, rep)
        bad = [r for r in rep if r["max_dev_v"] > (0 if r["exact_v"] else 1e-9) or r["max_dev_tree"] > 0]
        if bad:
            return _failure("groups", "verify_relations", bad[0]["relation"])
    elif args.action == "dense":
        G = groups.parse_group(args.group)
        g = groups.dense_translation_sampler(G, args.side, json.loads(args.target), args.eps, T_max=args.T)
        _emit(args, {"element": groups.element_to_json(g),
                     "translation": groups.induced_translation(g, args.side).tolist()})
    return 0


def cmd_qi(args):
    if args.action == "iterate":
        res = qimaps.uniform_iterate_check((_num(args.c1), _num(args.c2)), _num(args.R), args.max_iter)
        _emit(args, {"result": str(res)})
        return 0
    with open(args.map, encoding="utf-8") as fh:
        table = json.load(fh)
    dom = [np.atleast_1d(np.asarray(x, dtype=float)) for x in table["domain"]]
    img = [np.atleast_1d(np.asarray(x, dtype=float)) for x in table["image"]]

    def d(x, y):
        return float(np.linalg.norm(x - y))

    n = len(dom)
    dm = np.array([[d(dom[i], dom[j]) for j in range(n)] for i in range(n)])
    im = np.array([[d(img[i], img[j]) for j in range(n)] for i in range(n)])
    f = qimaps.SampledMap(list(range(n)), list(range(n)), d, d, domain_matrix=dm, image_matrix=im)
    K, C = qimaps.estimate_qi_constants(f)
    out = {"K": K, "C": C}
    if args.similarity:
        Ks, s = qimaps.quasi_similarity_constants(f)
        out.update({"quasi_similarity_K": Ks, "scale": s})
    _emit(args, out)
    return 0


def _num(text):
    return Fraction(text) if isinstance(text, str) else text


def cmd_furman(args):
    env = furman.make_envelope(args.group, args.ext)
    rep = furman.verify_lemma_5_1(env, args.radius)
    res = SuiteResult("furman", furman.CSV_COLUMNS, rep.rows,
                      rep.uniform and rep.restriction_exact and rep.cocycle_ok,
                      summary={"K": rep.K, "C": rep.C, "B": rep.B, "restriction_exact": rep.restriction_exact,
                               "stable": rep.stability.get("stable")})
    _emit(args, res.render(_fmt(args)))
    if not res.passed:
        return _failure("furman", "verify_lemma_5_1", {"K": rep.K, "C": rep.C, "B": rep.B})
    return 0


def cmd_models(args):
    if args.action == "common-base":
        res = modelcount.common_base(args.m, args.p)
        _emit(args, {"common_base": list(res) if res else None})
    elif args.action == "exponents":
        _emit(args, {"exponents": modelcount.admissible_exponents(args.d, args.kmax)})
    else:
        datum = modelcount.GraphOfGroupsDatum(args.d, args.e, args.f, args.g)
        _emit(args, {"result": str(modelcount.index_identity_check(datum))})
    return 0


def cmd_run(args):
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    code = 0
    for name in names:
        cfg = ExperimentConfig(
            suite=name,
            seed=args.seed,
            matrix=json.loads(args.matrix) if args.matrix else None,
            m=args.m,
            group=args.group,
            ext=args.ext,
            radius=args.radius,
            samples=args.samples,
            fmt=_fmt(args),
        )
        res = run_suite(cfg)
        if len(names) > 1:
            sys.stdout.write(f"{name}: {'pass' if res.passed else 'FAIL'}\n")
        else:
            _emit(args, res.render(cfg.fmt))
        if not res.passed:
            code = _failure(**res.failure)
    return code


# -- parser -------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="default: csv for run, json otherwise")

    p = argparse.ArgumentParser(prog="solvlab", description="Horocyclic products, their boundaries and lattices.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectral", parents=[common], help="absolute Jordan split of an integer matrix")
    s.add_argument("action", nargs="?", choices=("analyze",), default="analyze")
    s.add_argument("--matrix", required=True)
    s.set_defaults(func=cmd_spectral)

    s = sub.add_parser("space", parents=[common], help="tree and G_Mbar distances")
    s.add_argument("action", choices=("dist", "tree-dist", "horofunction", "g-dist"))
    s.add_argument("--kind", choices=("tree", "g"), default="tree", help="factor for 'dist'")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--x", "--u", dest="x", required=True)
    s.add_argument("--y", "--v", dest="y")
    s.add_argument("--T", type=int)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--s", type=float)
    s.add_argument("--matrix", default="[[2]]")
    s.set_defaults(func=cmd_space)

    s = sub.add_parser("model", parents=[common], help="model spaces; DL distances")
    s.add_argument("action", nargs="?", choices=("dist", "mk"), default="dist")
    s.add_argument("--space", required=True, help="sol | dl:n,m | xn:n | xmbar:[[..]]")
    s.add_argument("--x", "--u", dest="x",
                   help="DL: 'addr@h,addr@h'; Sol: [[x,t],[x',-t]]; X_Mbar: {\"v\": [..], \"t\": t, \"y\": \"digits@val\"}")
    s.add_argument("--y", "--v", dest="y")
    s.set_defaults(func=cmd_model)

    s = sub.add_parser("boundary", parents=[common], help="boundary metrics")
    s.add_argument("action", choices=("dist",))
    s.add_argument("--kind", choices=("madic", "dm", "visual"), default="madic")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--matrix", default="[[2]]")
    s.add_argument("--side", type=int, default=1)
    s.add_argument("--a", type=float, default=2.0)
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--lam", help="moduli for G_Mbar ends (JSON)")
    s.set_defaults(func=cmd_boundary)

    s = sub.add_parser("group", parents=[common], help="word lengths, relations, dense translations")
    s.add_argument("action", choices=("wordlen", "verify", "dense"))
    s.add_argument("--group", default="bs:1,2")
    s.add_argument("--word", default="")
    s.add_argument("--gens", choices=("standard", "dl"), default="standard")
    s.add_argument("--R", type=int)
    s.add_argument("--matrix", default="[[2]]")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--exact", action="store_true")
    s.add_argument("--side", type=int, default=1)
    s.add_argument("--target", default="0.5")
    s.add_argument("--eps", type=float, default=2.0 ** -10)
    s.add_argument("--T", type=int, default=10)
    s.set_defaults(func=cmd_group)

    s = sub.add_parser("qi", parents=[common], help="QI constant fits and the iterate detector")
    s.add_argument("action", choices=("fit", "iterate"))
    s.add_argument("--map", help="JSON file {domain: [...], image: [...]}")
    s.add_argument("--similarity", action="store_true")
    s.add_argument("--c1", default="1")
    s.add_argument("--c2", default="-1")
    s.add_argument("--R", default="5")
    s.add_argument("--max-iter", type=int, default=10 ** 6)
    s.set_defaults(func=cmd_qi)

    s = sub.add_parser("furman", parents=[common], help="envelope quasi-isometries q_h")
    s.add_argument("action", choices=("verify",))
    s.add_argument("--group", default="ll:2")
    s.add_argument("--ext", default="flip", choices=("flip", "trivial", "none"))
    s.add_argument("--radius", type=int, default=6)
    s.set_defaults(func=cmd_furman)

    s = sub.add_parser("models", parents=[common], help="common bases and admissible exponents")
    msub = s.add_subparsers(dest="action", required=True)
    c = msub.add_parser("common-base", parents=[common])
    c.add_argument("m", type=int)
    c.add_argument("p", type=int)
    c = msub.add_parser("exponents", parents=[common])
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--kmax", type=int, required=True)
    c = msub.add_parser("index", parents=[common])
    for name in ("d", "e", "f", "g"):
        c.add_argument(f"--{name}", type=int, required=True)
    s.set_defaults(func=cmd_models)

    s = sub.add_parser("run", parents=[common], help="run a seeded experiment suite")
    s.add_argument("--suite", required=True, choices=sorted(SUITES) + ["all"])
    s.add_argument("--matrix")
    s.add_argument("--m", type=int)
    s.add_argument("--group")
    s.add_argument("--ext")
    s.add_argument("--radius", type=int)
    s.add_argument("--samples", type=int)
    s.set_defaults(func=cmd_run)
    return p


COMMAND_MODULES = {
    "spectral": "spectral",
    "space": "spaces",
    "model": "horoprod",
    "boundary": "boundary",
    "group": "groups",
    "qi": "qimaps",
    "furman": "furman",
    "models": "modelcount",
    "run": "cli",
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolvlabError as exc:
        module = COMMAND_MODULES.get(args.command, "cli")
        operation = getattr(args, "action", None) or args.command
        return _failure(module, operation, f"{type(exc).__name__}: {exc}", 2)


if __name__ == "__main__":
    sys.exit(main())
