"""Command-line front end: configuration parsing, pipeline orchestration,
report emission.  Exit codes: 0 decided/success, 1 error, 2 inconclusive."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import besov as bv
from . import cover as cv
from . import equiv as eq
from . import growth as gr
from . import matgroup as mg
from .config import RunConfig, artifact_version


class SchemaError(ValueError):
    """Invalid input document; the message carries a JSON pointer path."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


# ---------------------------------------------------------------------------
# input schemas

_KINDS = set(mg.ALL_KINDS)


def _matrix_from(obj, dim, pointer):
    if not isinstance(obj, list) or len(obj) != dim \
            or any(not isinstance(r, list) or len(r) != dim for r in obj):
        raise SchemaError(pointer, f"expected a {dim}x{dim} array of arrays")
    for i, row in enumerate(obj):
        for j, x in enumerate(row):
            if not isinstance(x, (int, float)) or isinstance(x, bool) \
                    or not math.isfinite(float(x)):
                raise SchemaError(f"{pointer}[{i}][{j}]", "not a finite number")
    return np.asarray(obj, dtype=float)


def load_group(obj, pointer: str = "") -> mg.GroupSpec:
    """Parse one group document, raising SchemaError with a pointer path."""
    if not isinstance(obj, dict):
        raise SchemaError(pointer or "/", "expected an object")
    kind = obj.get("kind")
    if kind not in _KINDS:
        raise SchemaError(f"{pointer}/kind", f"unknown kind {kind!r}")
    dim = obj.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) \
            or not 1 <= dim <= mg.MAX_DIM:
        raise SchemaError(f"{pointer}/dim", "expected an integer in 1..4")
    try:
        if kind == mg.ONE_PARAMETER:
            if "generator" not in obj:
                raise SchemaError(f"{pointer}/generator", "missing")
            return mg.one_parameter(_matrix_from(obj["generator"], dim,
                                                 f"{pointer}/generator"))
        if kind == mg.CYCLIC:
            if "matrix" not in obj:
                raise SchemaError(f"{pointer}/matrix", "missing")
            return mg.cyclic(_matrix_from(obj["matrix"], dim,
                                          f"{pointer}/matrix"))
        if kind in (mg.ABELIAN_FLOW, mg.DISCRETE_FG):
            gens = obj.get("generators")
            if not isinstance(gens, list) or not gens:
                raise SchemaError(f"{pointer}/generators",
                                  "expected a nonempty array")
            mats = [_matrix_from(g, dim, f"{pointer}/generators[{i}]")
                    for i, g in enumerate(gens)]
            return (mg.abelian_flow(mats) if kind == mg.ABELIAN_FLOW
                    else mg.discrete_fg(mats))
        if kind == mg.SCALAR_SIMILITUDE:
            return mg.scalar_similitude(dim)
        return mg.similitude(dim)
    except mg.GroupError as exc:
        raise SchemaError(pointer or "/", str(exc)) from exc


def load_pair(obj):
    if not isinstance(obj, dict):
        raise SchemaError("/", "expected an object")
    for key in ("first", "second"):
        if key not in obj:
            raise SchemaError(f"/{key}", "missing")
    return (load_group(obj["first"], "/first"),
            load_group(obj["second"], "/second"))


def load_battery(obj):
    if not isinstance(obj, dict) or not isinstance(obj.get("packets"), list) \
            or not obj["packets"]:
        raise SchemaError("/packets", "expected a nonempty array")
    packs = []
    for i, p in enumerate(obj["packets"]):
        ptr = f"/packets[{i}]"
        if not isinstance(p, dict):
            raise SchemaError(ptr, "expected an object")
        center = p.get("center")
        if not isinstance(center, list) or not center:
            raise SchemaError(f"{ptr}/center", "expected an array")
        widths = p.get("widths")
        if not isinstance(widths, (int, float)) or widths <= 0:
            raise SchemaError(f"{ptr}/widths", "expected a positive number")
        modulation = p.get("modulation")
        packs.append(bv.PacketSpec(
            label=float(p.get("label", i)),
            center=tuple(float(x) for x in center), sigma=float(widths),
            modulation=None if modulation is None
            else tuple(float(x) for x in modulation)))
    return packs


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"malformed JSON: {exc}") from exc
    except OSError as exc:
        raise SchemaError("/", f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _config_from(args) -> RunConfig:
    return RunConfig(window=args.window, sample_budget=args.budget,
                     seed=args.seed, grid_size=args.grid,
                     with_qi=getattr(args, "with_qi", False),
                     with_norms=getattr(args, "with_norms", False))


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    spec = load_group(_read_json(args.group))
    cfg = _config_from(args)
    out = Path(args.out)
    stem = Path(args.group).stem
    report = {"config": cfg.snapshot(), "version": artifact_version(),
              "group": _read_json(args.group)}
    pre = mg.admissibility_precheck(spec)
    report["admissible"] = pre.admissible
    if pre.witness is not None:
        report["witness"] = {"eigenvalue": {"re": pre.witness.real,
                                            "im": pre.witness.imag}}
    if pre.note:
        report["note"] = pre.note
    if not pre.admissible:
        write_json(out / f"{stem}.analyze.json", report)
        print(f"{stem}: NotAdmissible")
        return 0
    prop = cv.properness_check(spec)
    report["properness"] = {"bounded": prop.bounded, "maxNorm": prop.max_norm,
                            "memberCounts": list(prop.growth)}
    cover_k = cv.build_induced_cover(spec, cfg.window)
    cover_2k = cv.build_induced_cover(spec, 2 * cfg.window)
    tab_k = cv.neighbor_counts(cover_k, cover_k, cfg.sample_budget)
    tab_2k = cv.neighbor_counts(cover_2k, cover_2k, cfg.sample_budget)
    report["cover"] = {"elements": len(cover_k), "rMin": cover_k.r_min,
                       "rMax": cover_k.r_max,
                       "maxTransferNorm": cover_k.max_transfer_norm}
    report["selfCounts"] = {"window": cfg.window,
                            "max": tab_k.max_interior_ab,
                            "maxAtDouble": tab_2k.max_interior_ab,
                            "stable": tab_k.max_interior_ab
                            == tab_2k.max_interior_ab}
    if spec.kind != mg.DISCRETE_FG:
        lin = gr.linear_growth_test(spec)
        report["growth"] = {"status": lin.status, "exponent": lin.exponent}
    write_json(out / f"{stem}.analyze.json", report)
    print(f"{stem}: admissible, properness "
          f"{'Bounded' if prop.bounded else 'UnboundedTrend'}, "
          f"self-count {tab_k.max_interior_ab} "
          f"({'stable' if report['selfCounts']['stable'] else 'unstable'})")
    return 0


def cmd_compare(args) -> int:
    spec_a, spec_b = load_pair(_read_json(args.pair))
    cfg = _config_from(args)
    verdict = eq.coorbit_equivalence(spec_a, spec_b, cfg)
    out = Path(args.out)
    stem = Path(args.pair).stem
    write_json(out / f"{stem}.verdict.json", verdict.to_json())
    write_csv(out / f"{stem}.counts.csv", ("window", "maxAB", "maxBA"),
              [(int(w), int(a), int(b))
               for w, a, b in verdict.evidence.count_trends])
    print(f"{stem}: {verdict.outcome.value}")
    return 2 if verdict.outcome is eq.Outcome.INCONCLUSIVE else 0


def cmd_besov_compare(args) -> int:
    spec_a, spec_b = load_pair(_read_json(args.pair))
    packs = load_battery(_read_json(args.battery))
    cfg = _config_from(args)
    stats = bv.compare_norms(spec_a, spec_b, packs, p=args.p, q=args.q, cfg=cfg)
    out = Path(args.out)
    stem = Path(args.pair).stem
    trend = stats.spread_trend
    increasing = all(y > x * 1.0001 for x, y in zip(trend, trend[1:]))
    summary = {"config": cfg.snapshot(), "p": args.p, "q": args.q,
               "battery": [p.to_json() for p in packs],
               "stats": stats.to_json(),
               "spreadVerdict": "increasing" if increasing else "stable"}
    write_json(out / f"{stem}.norms.json", summary)
    write_csv(out / f"{stem}.ratios.csv", ("j", "normA", "normB", "ratio"),
              [(lab, a, b, r) for lab, a, b, r in
               zip(stats.labels, stats.norms_a, stats.norms_b, stats.ratios)])
    print(f"{stem}: spread {stats.spread:.4g} ({summary['spreadVerdict']})")
    return 0


def cmd_export_cover(args) -> int:
    spec = load_group(_read_json(args.group))
    cfg = _config_from(args)
    cover = cv.build_induced_cover(spec, cfg.window)
    elements = []
    for el in cover.elements:
        geom = el.geometry
        elements.append({
            "index": list(map(int, el.index)),
            "matrix": np.asarray(el.element.matrix),
            "outer": {"center": geom.outer.center, "shape": geom.outer.shape},
            "inner": {"center": geom.inner.center, "shape": geom.inner.shape},
        })
    out = Path(args.out)
    stem = Path(args.group).stem
    write_json(out / f"{stem}.cover.json",
               {"config": cfg.snapshot(), "elements": elements,
                "rMin": cover.r_min, "rMax": cover.r_max})
    graph = cv._intersection_matrix(cover.elements)
    rows = []
    for i in range(len(cover)):
        rows.append((i, i, "Intersecting"))
    for i in range(len(cover)):
        for j in range(i + 1, len(cover)):
            if graph[i, j]:
                rows.append((i, j, "Intersecting"))
    write_csv(out / f"{stem}.adjacency.csv", ("i", "j", "status"), rows)
    print(f"{stem}: {len(cover)} elements, {len(rows)} adjacency rows")
    return 0


def cmd_growth(args) -> int:
    spec = load_group(_read_json(args.group))
    cfg = _config_from(args)
    W = (mg.box_generating_set([1.0] * spec.n_params)
         if spec.kind != mg.DISCRETE_FG
         else mg.list_generating_set(spec, spec.generators))
    report = gr.growth_function(spec, W, gr.default_radii())
    lin = gr.linear_growth_test(spec, W)
    out = Path(args.out)
    stem = Path(args.group).stem
    write_json(out / f"{stem}.growth.json",
               {"config": cfg.snapshot(), "report": report.to_json(),
                "linear": {"status": lin.status, "note": lin.note}})
    write_csv(out / f"{stem}.growth.csv", ("r", "volume"),
              list(zip(report.radii, report.volumes)))
    print(f"{stem}: exponent {report.exponent:.3f} ({report.verdict})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coorbit",
        description="Decide whether two matrix dilation groups generate the "
                    "same scale of wavelet coorbit spaces, with numerical "
                    "evidence at finite scale.")
    parser.add_argument("--version", action="version", version=artifact_version())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--window", type=int, default=8, metavar="K")
        p.add_argument("--budget", type=int, default=512, metavar="N")
        p.add_argument("--seed", type=int, default=0, metavar="S")
        p.add_argument("--grid", type=int, default=128, metavar="N")
        p.add_argument("--out", default=".", metavar="DIR")

    p = sub.add_parser("analyze", help="admissibility, properness, cover, growth")
    p.add_argument("group")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="full coorbit-equivalence pipeline")
    p.add_argument("pair")
    p.add_argument("--with-qi", dest="with_qi", action="store_true")
    p.add_argument("--with-norms", dest="with_norms", action="store_true")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("besov-compare", help="decomposition-norm ratio battery")
    p.add_argument("pair")
    p.add_argument("battery")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_besov_compare)

    p = sub.add_parser("export-cover", help="cover JSON plus adjacency CSV")
    p.add_argument("group")
    common(p)
    p.set_defaults(func=cmd_export_cover)

    p = sub.add_parser("growth", help="growth function and linear-growth test")
    p.add_argument("group")
    common(p)
    p.set_defaults(func=cmd_growth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (mg.GroupError, cv.CoverConstructionError, eq.DomainError,
            eq.NotSupported, bv.GridError, bv.TruncationError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
