"""Seeded experiment suites behind ``solvlab run``.

Every suite returns a table (fixed column order) plus a pass flag and, on
failure, a record ``{module, operation, witness}``.  All randomness flows
from ``random.Random(seed)``, so equal configurations give equal bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import boundary, furman, groups, horoprod, modelcount, qimaps
from .madic import MAdic
from .spectral import analyze, orthogonal_power


@dataclass
class ExperimentConfig:
    suite: str
    seed: int = 0
    matrix: Optional[list] = None
    m: Optional[int] = None
    group: Optional[str] = None
    ext: Optional[str] = None
    radius: Optional[int] = None
    samples: Optional[int] = None
    fmt: str = "csv"

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.fmt not in ("csv", "json"):
            raise ValueError("format must be csv or json")


@dataclass
class SuiteResult:
    suite: str
    columns: tuple
    rows: list
    passed: bool
    failure: Optional[dict] = None
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(r[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        body = {
            "suite": self.suite,
            "passed": self.passed,
            "failure": self.failure,
            "summary": {k: _cell(v) for k, v in self.summary.items()},
            "columns": list(self.columns),
            "rows": [[_cell(r[c]) for c in self.columns] for r in self.rows],
        }
        return json.dumps(body, sort_keys=True, indent=1) + "\n"

    def render(self, fmt):
        return self.to_csv() if fmt == "csv" else self.to_json()


def _cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (np.floating, np.integer)):
        return _cell(x.item())
    if x is None:
        return ""
    return str(x)


def _fail(module, operation, witness):
    return {"module": module, "operation": operation, "witness": str(witness)}


def _finish(name, columns, rows, ok_col, module, operation, summary=None):
    bad = [r for r in rows if not r[ok_col]]
    failure = _fail(module, operation, {c: _cell(bad[0][c]) for c in columns}) if bad else None
    return SuiteResult(name, columns, rows, not bad, failure, summary or {})


# -- 1: m-adic ultrametric ------------------------------------------------------


def random_madic(rng, m, exact=True):
    digits = [rng.randrange(m) for _ in range(rng.randint(1, 16))]
    return MAdic.from_digits(m, digits, val=rng.randint(-6, 6), exact=exact)


def suite_metric_axioms(cfg):
    rng = random.Random(cfg.seed)
    ms = [cfg.m] if cfg.m else [2, 3, 4, 5]
    count = cfg.samples or 10_000
    cols = ("m", "i", "d_xz", "d_xy", "d_yz", "ok")
    rows = []
    for m in ms:
        for i in range(count):
            x, y, z = (random_madic(rng, m) for _ in range(3))
            dxz, dxy, dyz = boundary.madic_dist(x, z), boundary.madic_dist(x, y), boundary.madic_dist(y, z)
            rows.append({"m": m, "i": i, "d_xz": dxz, "d_xy": dxy, "d_yz": dyz, "ok": dxz <= max(dxy, dyz)})
    return _finish("metric-axioms", cols, rows, "ok", "boundary", "madic_dist")


# -- 2: D_Mbar ------------------------------------------------------------------------

DM_MATRICES = ([[2, 0], [0, 3]], [[2, 1], [1, 1]], [[3]])


def _rand_vec(rng, n, scale=10.0):
    return np.array([rng.uniform(-scale, scale) for _ in range(n)])


def _square(M):
    M = np.array(M, dtype=np.int64)
    return (M @ M).tolist()


def suite_dm_metric(cfg):
    rng = random.Random(cfg.seed)
    mats = [cfg.matrix] if cfg.matrix else list(DM_MATRICES)
    count = cfg.samples or 10_000
    pairs = max(1, count // 10)
    cols = ("matrix", "check", "i", "lhs", "rhs", "ok")
    rows = []
    for M in mats:
        split = analyze(M)
        split2 = analyze(_square(M))
        n = split.n1
        tag = json.dumps(M, separators=(",", ":"))
        for i in range(count):
            x, y, z = (_rand_vec(rng, n) for _ in range(3))
            lhs = boundary.dM_metric(x, z, split)
            rhs = boundary.dM_metric(x, y, split) + boundary.dM_metric(y, z, split)
            rows.append({"matrix": tag, "check": "triangle", "i": i, "lhs": lhs, "rhs": rhs, "ok": lhs <= rhs + 1e-9})
        for i in range(pairs):
            x, y = _rand_vec(rng, n), _rand_vec(rng, n)
            # base-e visual form: D_{Mbar^2} = D_{Mbar}^{1/2}
            lhs = boundary.dM_metric(x, y, split2, base=math.e)
            rhs = boundary.dM_metric(x, y, split, base=math.e) ** 0.5
            rows.append({"matrix": tag, "check": "snowflake", "i": i, "lhs": lhs, "rhs": rhs,
                         "ok": abs(lhs - rhs) <= 1e-9 * max(1.0, rhs)})
            # normalized form (base exp(alpha_1)) is unchanged by powers
            lhs = boundary.dM_metric(x, y, split2)
            rhs = boundary.dM_metric(x, y, split)
            rows.append({"matrix": tag, "check": "normalized", "i": i, "lhs": lhs, "rhs": rhs,
                         "ok": abs(lhs - rhs) <= 1e-9 * max(1.0, rhs)})
    return _finish("dm-metric", cols, rows, "ok", "boundary", "dM_metric")


# -- 3: relations ----------------------------------------------------------------------

RELATION_GROUPS = ("bs:1,2", "bs:1,3", "abc:[[2,1],[1,1]]", "abc:[[2,0],[0,3]]")


def suite_relations(cfg):
    names = [f"abc:{json.dumps(cfg.matrix, separators=(',', ':'))}"] if cfg.matrix else list(RELATION_GROUPS)
    count = cfg.samples or 100
    cols = ("group", "relation", "coords", "exact_v", "max_dev_v", "max_dev_lattice", "max_dev_tree", "ok")
    rows = []
    for k, name in enumerate(names):
        G = groups.parse_group(name)
        for coords, exact in (("rational", True), ("float", False)):
            pts = groups.sample_points(G, count, seed=cfg.seed * 31 + k, exact=exact)
            for rep in groups.verify_relations(G, pts, raise_on_violation=False):
                limit = 0.0 if rep["exact_v"] else 1e-9
                ok = rep["max_dev_v"] <= limit and rep["max_dev_lattice"] == 0 and rep["max_dev_tree"] == 0
                rows.append({"group": name, "relation": rep["relation"], "coords": coords,
                             "exact_v": rep["exact_v"], "max_dev_v": rep["max_dev_v"], "max_dev_lattice": rep["max_dev_lattice"],
                             "max_dev_tree": rep["max_dev_tree"], "ok": ok})
    return _finish("relations", cols, rows, "ok", "groups", "verify_relations")


# -- 4: Cayley graph vs DL -----------------------------------------------------------------


def suite_cayley_dl(cfg):
    q = cfg.m or 2
    R = cfg.radius or 6
    L = groups.LampGroup(q)
    origin = horoprod.dl_origin(q, q)
    ball = L.ball(R, "dl")
    cols = ("element", "word_length", "dl_distance", "ok")
    rows = []
    for g, wl in ball.items():
        dd = horoprod.dl_distance(origin, groups.lamp_to_dl(g), R=R + 1)
        rows.append({"element": str(g), "word_length": wl, "dl_distance": dd, "ok": wl == dd})
    rows.sort(key=lambda r: (r["word_length"], r["element"]))
    return _finish("cayley-dl", cols, rows, "ok", "groups", "word_length", {"ball_size": len(rows)})


# -- 5: induced similarities ------------------------------------------------------------------

SIMILARITY_GROUPS = ("bs:1,2", "abc:[[2,1],[1,1]]")


def suite_induced_similarity(cfg):
    names = [cfg.group] if cfg.group else list(SIMILARITY_GROUPS)
    count = cfg.samples or 40
    cols = ("group", "generator", "side", "c", "K", "scale", "expected", "exponent_sum", "ok")
    rows = []
    for name in names:
        G = groups.parse_group(name)
        for gname, g in G.generators().items():
            sims = {side: groups.boundary_action(g, side) for side in (1, 2)}
            csum = sims[1].c + sims[2].c
            for side, sim in sims.items():
                if sim.real_dim == 0 and sim.madic is None:
                    continue
                K, s = qimaps.quasi_similarity_constants(sim.sampled(count=count, seed=cfg.seed))
                base = math.exp(sim.alphas[0]) if sim.real_dim else float(sim.base_m)
                expected = base ** sim.c
                ok = abs(K - 1) <= 1e-6 and abs(s - expected) <= 1e-6 * max(1.0, expected) and csum == 0
                rows.append({"group": name, "generator": gname, "side": side, "c": sim.c, "K": K, "scale": s,
                             "expected": expected, "exponent_sum": csum, "ok": ok})
    return _finish("induced-similarity", cols, rows, "ok", "qimaps", "quasi_similarity_constants")


# -- 6: iterate detector -----------------------------------------------------------------------


def suite_iterate(cfg):
    rng = random.Random(cfg.seed)
    cols = ("c1", "c2", "R", "result", "expected", "ok")
    rows = []
    fixed = [((1, -0.9), 5, "ViolatedAt(101)"), ((1, -1), 5, "Compatible"), ((0, 0), 5, "Compatible")]
    for (c1, c2), R, exp in fixed:
        res = str(qimaps.uniform_iterate_check((c1, c2), R))
        rows.append({"c1": c1, "c2": c2, "R": R, "result": res, "expected": exp, "ok": res == exp})
    for _ in range(cfg.samples or 200):
        c1 = Fraction(rng.randint(-40, 40), rng.randint(1, 8))
        c2 = Fraction(rng.randint(-40, 40), rng.randint(1, 8))
        R = Fraction(rng.randint(1, 40), rng.randint(1, 4))
        res = qimaps.uniform_iterate_check((c1, c2), R)
        c = abs(c1 + c2)
        if c == 0:
            ok = res.kind == "Compatible"
        else:
            s = res.s
            ok = res.kind == "ViolatedAt" and (s - 1) * c <= 2 * R < s * c
        rows.append({"c1": c1, "c2": c2, "R": R, "result": str(res), "expected": "bracket", "ok": ok})
    return _finish("iterate", cols, rows, "ok", "qimaps", "uniform_iterate_check")


# -- 7: Furman envelopes -----------------------------------------------------------------------

FURMAN_ENVELOPES = (("bs:1,2", "trivial"), ("ll:2", "flip"), ("bs:1,2", "none"))


def suite_furman(cfg):
    envs = [(cfg.group, cfg.ext or "trivial")] if cfg.group else list(FURMAN_ENVELOPES)
    R = cfg.radius or 6
    cols = ("envelope", "h", "K", "C", "B", "composition_defect", "ok")
    rows = []
    summary = {}
    for gname, ext in envs:
        env = furman.make_envelope(gname, ext)
        rep = furman.verify_lemma_5_1(env, R)
        ok = rep.uniform and rep.restriction_exact and rep.cocycle_ok
        if ext in ("none", "identity"):
            ok = ok and (rep.K, rep.C, rep.B) == (1.0, 0.0, 0)
        tag = f"{gname}/{ext}"
        for r in rep.rows:
            rows.append({"envelope": tag, **r, "ok": ok})
        summary[f"{tag}:K"] = rep.K
        summary[f"{tag}:C"] = rep.C
        summary[f"{tag}:B"] = rep.B
        summary[f"{tag}:restriction_exact"] = rep.restriction_exact
        summary[f"{tag}:stable"] = rep.stability.get("stable")
    return _finish("furman", cols, rows, "ok", "furman", "verify_lemma_5_1", summary)


# -- 8: psi -----------------------------------------------------------------------------------

PSI_MATRICES = ([[2, 1], [1, 1]], [[1, -1], [1, 1]], [[2, 0], [0, 3]], [[2]])


def _random_word(G, rng, length):
    gens = list(G.generators().values())
    g = G.identity()
    for _ in range(length):
        g = g * rng.choice(gens)
    return g


def _random_structured(split, rng):
    """A pair with A_i commuting with P and heights t, -t."""
    t = rng.randint(-3, 3)
    j = rng.randint(-3, 3)
    P = split.P
    A = orthogonal_power(P, j)
    sl1, sl2 = split.block_slice(1), split.block_slice(2)
    return qimaps.StructuredPair(A[sl1, sl1], A[sl2, sl2], t, -t)


def suite_psi(cfg):
    rng = random.Random(cfg.seed)
    mats = [cfg.matrix] if cfg.matrix else list(PSI_MATRICES)
    count = cfg.samples or 50
    cols = ("matrix", "check", "i", "matrix_dev", "phase_dev", "ok")
    rows = []
    for M in mats:
        G = groups.AbcGroup(M)
        P = G.split.P
        tag = json.dumps(M, separators=(",", ":"))
        A, z = qimaps.psi(qimaps.StructuredPair.from_element(G.a()), P)
        dm, dz = float(np.max(np.abs(A - np.eye(len(A))))), abs(z - 1)
        rows.append({"matrix": tag, "check": "psi(a)", "i": 0, "matrix_dev": dm, "phase_dev": dz,
                     "ok": dm <= 1e-9 and dz <= 1e-9})
        for i in range(count):
            if i % 2 == 0:
                g1 = qimaps.StructuredPair.from_element(_random_word(G, rng, rng.randint(0, 4)))
                g2 = qimaps.StructuredPair.from_element(_random_word(G, rng, rng.randint(0, 4)))
            else:
                g1, g2 = _random_structured(G.split, rng), _random_structured(G.split, rng)
            A12, z12 = qimaps.psi(g1.compose(g2), P)
            A1, z1 = qimaps.psi(g1, P)
            A2, z2 = qimaps.psi(g2, P)
            dm, dz = float(np.max(np.abs(A12 - A1 @ A2))), abs(z12 - z1 * z2)
            rows.append({"matrix": tag, "check": "homomorphism", "i": i, "matrix_dev": dm, "phase_dev": dz,
                         "ok": dm <= 1e-9 and dz <= 1e-9})
    return _finish("psi", cols, rows, "ok", "qimaps", "psi")


# -- 9: straightening -----------------------------------------------------------------------------


def suite_straightening(cfg):
    K, alpha = 1.0, 0.5
    cols = ("case", "bound", "empirical", "certified", "expected", "ok")
    rows = []
    cases = [
        ("constant-0", lambda x: 0.0, 1.0, 0.1, 10 ** 6, True),
        ("constant-0.5", lambda x: 0.5, 3.0, 0.01, 10, True),
        ("holder-witness", lambda x: K * min(abs(x) ** alpha, 1.0), 1.0, 0.1, 10 ** 6, False),
    ]
    for name, B, xr, eps, n, expected in cases:
        res = qimaps.straightening_bound(B, K, alpha, xr, eps, n)
        rows.append({"case": name, "bound": res.bound, "empirical": res.empirical, "certified": res.ok,
                     "expected": expected, "ok": res.ok == expected})
    return _finish("straightening", cols, rows, "ok", "qimaps", "straightening_bound")


# -- 10: model-count arithmetic ---------------------------------------------------------------------


def suite_modelcount(cfg):
    cols = ("operation", "input", "result", "expected", "ok")
    rows = []

    def add(op, inp, res, exp):
        rows.append({"operation": op, "input": inp, "result": str(res), "expected": str(exp), "ok": res == exp})

    add("common_base", "4,8", modelcount.common_base(4, 8), (2, 2, 3))
    add("common_base", "2,2", modelcount.common_base(2, 2), (2, 1, 1))
    add("common_base", "2,3", modelcount.common_base(2, 3), None)
    add("admissible_exponents", "2,5", modelcount.admissible_exponents(2, 5), [1, 2, 3, 4, 5])
    add("admissible_exponents", "6,2", modelcount.admissible_exponents(6, 2), [1, 2])
    try:
        modelcount.admissible_exponents(4, 3)
        res = "accepted"
    except modelcount.ProperPowerBase:
        res = "ProperPowerBase"
    add("admissible_exponents", "4,3", res, "ProperPowerBase")
    fixtures = [((4, 4, 2, 2), True), ((1, 1, 1, 1), True), ((4, 8, 2, 2), False)]
    for (d, e, f, g), exp in fixtures:
        res = modelcount.index_identity_check(modelcount.GraphOfGroupsDatum(d, e, f, g))
        add("index_identity_check", f"d={d},e={e},f={f},g={g}", res.consistent, exp)
    return _finish("modelcount", cols, rows, "ok", "modelcount", "index_identity_check")


# -- 11: dense translations -------------------------------------------------------------------------


def suite_dense(cfg):
    rng = random.Random(cfg.seed)
    G = groups.parse_group(cfg.group or "bs:1,2")
    eps = 2.0 ** -10
    T = 10
    cols = ("target", "element", "translation", "error", "depth", "ok")
    rows = []
    targets = [Fraction(0), Fraction(1, 2), Fraction(3, 8)]
    targets += [Fraction(rng.randint(-2 ** 12, 2 ** 12), 2 ** rng.randint(0, 10)) for _ in range(cfg.samples or 30)]
    for tgt in targets:
        g = groups.dense_translation_sampler(G, 1, float(tgt), eps, T_max=T)
        tr = float(groups.induced_translation(g, 1)[0])
        err = abs(tr - float(tgt))
        depth = groups.conjugate_depth(g)
        rows.append({"target": tgt, "element": str(g), "translation": tr, "error": err, "depth": depth,
                     "ok": err <= eps and depth <= T})
    return _finish("dense", cols, rows, "ok", "groups", "dense_translation_sampler")


SUITES = {
    "metric-axioms": suite_metric_axioms,
    "dm-metric": suite_dm_metric,
    "relations": suite_relations,
    "cayley-dl": suite_cayley_dl,
    "induced-similarity": suite_induced_similarity,
    "iterate": suite_iterate,
    "furman": suite_furman,
    "psi": suite_psi,
    "straightening": suite_straightening,
    "modelcount": suite_modelcount,
    "dense": suite_dense,
}


def run_suite(cfg: ExperimentConfig) -> SuiteResult:
    if cfg.suite not in SUITES:
        raise ValueError(f"unknown suite {cfg.suite!r}; choose from {sorted(SUITES)}")
    return SUITES[cfg.suite](cfg)
