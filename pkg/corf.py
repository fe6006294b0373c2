# corf.py
import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from utils.errors import EXIT_OK, EXIT_VERIFICATION, CorfError, ValidationError, exit_code_for
from utils.growth import (
    bruteforce_table,
    certificate_curve,
    cover_transfer_experiment,
    example_6_2_table,
    svarc_milnor_probe,
)
from utils.hyperbolic import model_convert
from utils.progress import human_count, human_time
from utils.separator import (
    build_certificate,
    certificate_to_dict,
    load_certificate,
    verify_certificate,
)
from utils.spherical import SUPPORTED_DIMS, angle_at_incenter_right_tetrahedron, codim_threshold
from utils.tiling import BallRegion, resolve_polyhedron, tiles_meeting_region
from utils.tubes import BoundInputs, TubeSpec, index_bound, volume_report
from utils.word_parser import format_reflection_word, parse_reflection_word

logger = logging.getLogger("corf")

DEVIATION_LIMIT = 1e-10
EXPERIMENTS = ("example62", "bruteforce", "cover-transfer", "svarc-milnor", "certificate-curve")


# ----------------- output helpers -----------------

def _config_snapshot() -> Dict[str, Any]:
    return {k: getattr(Config, k) for k in sorted(vars(Config)) if k.isupper()}


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit_json(data: Dict[str, Any], path: str, seed: Optional[int] = None) -> None:
    payload = dict(data)
    payload["config"] = _config_snapshot()
    if seed is not None:
        payload["seed"] = seed
    fh, close = _open_out(path)
    try:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")
    finally:
        if close:
            fh.close()


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _emit_csv(rows: List[Dict[str, Any]], path: str, seed: Optional[int] = None) -> None:
    fieldnames: List[str] = []
    for row in rows:
        fieldnames.extend(k for k in row if k not in fieldnames)
    if seed is not None:
        fieldnames.append("seed")
    fh, close = _open_out(path)
    try:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, "seed": seed} if seed is not None else row)
    finally:
        if close:
            fh.close()


# ----------------- commands -----------------

def _threshold_closed_form(k: int) -> Dict[str, float]:
    return {
        "inscribed_radius": math.acos(math.sqrt((k - 1) / k)),
        "threshold": math.log(math.sqrt(k - 1) + math.sqrt(k)),
    }


def cmd_thresholds(args) -> int:
    cases = []
    worst = 0.0
    for dim in SUPPORTED_DIMS:
        for k in range(1, dim + 1):
            case = codim_threshold(dim, k).as_dict()
            if k > 1:
                closed = _threshold_closed_form(k)
                case["closed_form"] = closed
                case["deviation"] = {key: abs(case[key] - closed[key]) for key in closed}
                worst = max(worst, *case["deviation"].values())
            cases.append(case)
    angle = angle_at_incenter_right_tetrahedron()
    intermediate = {"value": angle, "closed_form": math.acos(1.0 / math.sqrt(3.0))}
    intermediate["deviation"] = abs(angle - intermediate["closed_form"])
    worst = max(worst, intermediate["deviation"])
    _emit_json({"cases": cases, "incenter_angle": intermediate, "max_deviation": worst}, args.out, args.seed)
    if worst > DEVIATION_LIMIT:
        logger.error("threshold deviation %.3e exceeds %.0e", worst, DEVIATION_LIMIT)
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_volumes(args) -> int:
    report = volume_report(TubeSpec(args.dim, args.b, args.length), args.samples, args.seed)
    report["agrees_3sigma"] = abs(report["z_score"]) < 3.0
    if not report["agrees_3sigma"]:
        logger.warning("tube volume estimate is %.2f standard errors from the closed form", report["z_score"])
    _emit_json(report, args.out, args.seed)
    return EXIT_OK


def cmd_separate(args) -> int:
    P = resolve_polyhedron(args.polyhedron)
    word = parse_reflection_word(args.word, P.n_faces)
    cert = build_certificate(P, word, periods=args.periods)
    _emit_json(certificate_to_dict(cert), args.out, args.seed)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_certificate(load_certificate(args.cert))
    _emit_json(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_VERIFICATION


def _growth_rows(args) -> Tuple[List[Dict[str, Any]], bool]:
    exp = args.experiment
    if exp == "example62":
        rows = []
        for r in example_6_2_table(args.n_max):
            rows.append({
                "n": r["n"],
                "word_length": r["word_length"],
                "cyc_length": r["word_length"],
                "geodesic_length": r["geodesic_length"],
                "D_or_bound": "",
                "source": "formula",
                "trace": r["trace"],
                "ratio": r["ratio"],
            })
        return rows, True
    if exp == "bruteforce":
        table = bruteforce_table(args.max_len, args.max_index)
        return [s.as_row(i) for i, s in enumerate(table, start=1)], True
    if exp == "cover-transfer":
        report = cover_transfer_experiment(args.max_len, args.max_index)
        logger.info(report["message"])
        return report["rows"], report["holds"]
    if exp == "svarc-milnor":
        P = resolve_polyhedron(args.polyhedron)
        report = svarc_milnor_probe(P, args.n_words, args.max_len, args.seed)
        rows = [{**s, "a": report["a"], "b": report["b"]} for s in report["samples"]]
        return rows, report["ok"]
    if exp == "certificate-curve":
        P = resolve_polyhedron(args.polyhedron)
        word = parse_reflection_word(args.word, P.n_faces)
        rows, ok = [], True
        for i, s in enumerate(certificate_curve(P, word, args.n_max), start=1):
            bound = index_bound(BoundInputs(P.dim, P.d_P, P.volume_lower, s.geodesic_length))
            ok = ok and s.D_value <= math.ceil(bound)
            rows.append({**s.as_row(i), "index_bound": bound})
        return rows, ok
    raise ValidationError(f"unknown experiment {exp!r}, expected one of {EXPERIMENTS}")


def cmd_growth(args) -> int:
    rows, ok = _growth_rows(args)
    _emit_csv(rows, args.out, args.seed)
    return EXIT_OK if ok else EXIT_VERIFICATION


def cmd_tiling_export(args) -> int:
    P = resolve_polyhedron(args.polyhedron)
    tiles = tiles_meeting_region(P, BallRegion(P, P.center, args.radius))
    out = []
    for t in tiles:
        verts = model_convert(P.vertices @ t.matrix.T, "hyperboloid", "poincare")
        out.append({
            "word": format_reflection_word(t.word),
            "center": model_convert(t.base_point, "hyperboloid", "poincare").tolist(),
            "vertices": verts.tolist(),
        })
    logger.info("exported %s tiles within %g of the reference point", human_count(len(out)), args.radius)
    _emit_json({"polyhedron": P.summary(), "radius": args.radius, "model": "poincare", "tiles": out}, args.out, args.seed)
    return EXIT_OK


# ----------------- argument parsing -----------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=Config.APP_NAME,
        description="Separation certificates and growth experiments for right-angled reflection groups.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)
        p.set_defaults(func=fn)
        return p

    add("thresholds", cmd_thresholds, "inscribed radii and separation thresholds")

    p = add("volumes", cmd_volumes, "tube volume against its Monte Carlo estimate")
    p.add_argument("--dim", type=int, default=3, choices=SUPPORTED_DIMS)
    p.add_argument("--b", type=float, default=1.0, help="tube radius")
    p.add_argument("--length", type=float, default=1.0, help="core segment length")
    p.add_argument("--samples", type=int, default=1_000_000)

    p = add("separate", cmd_separate, "build a separation certificate")
    p.add_argument("--polyhedron", default="pentagon", help="builtin name or polyhedron .json")
    p.add_argument("--word", required=True, help='faces numbered from 1, e.g. "1 3"')
    p.add_argument("--periods", type=int, default=2)

    p = add("verify", cmd_verify, "re-check a certificate file")
    p.add_argument("--cert", required=True)

    p = add("growth", cmd_growth, "growth experiments, CSV output")
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--max-len", type=int, default=5)
    p.add_argument("--max-index", type=int, default=6)
    p.add_argument("--n-words", type=int, default=200)
    p.add_argument("--polyhedron", default="pentagon")
    p.add_argument("--word", default="1 3")

    p = add("tiling-export", cmd_tiling_export, "tiles near the reference point, ball-model coordinates")
    p.add_argument("--polyhedron", default="pentagon")
    p.add_argument("--radius", type=float, default=1.5)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else Config.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if os.getenv("CORF_TOL"):
        logger.warning("CORF_TOL=%s overrides the default tolerance", os.getenv("CORF_TOL"))

    started = time.time()
    try:
        code = args.func(args)
    except CorfError as e:
        logger.error("%s failed: %s", args.command, e)
        return exit_code_for(e)
    logger.info("%s finished in %s", args.command, human_time(time.time() - started))
    return code


if __name__ == "__main__":
    sys.exit(main())
