"""Command line front end.

Every command except ``enumerate`` and ``sample`` prints one JSON report on
stdout.  Exit codes: 0 success, 2 bad input or usage, 3 degenerate metric,
4 generalizer-independence check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .errors import DegenerateMetricError, PartnflError
from .metrics import AMI_NORMALIZATIONS, METRICS, MetricSpec, loss, score
from .models import EXACT, ExpectationEstimate, Method, RandomModel, expected_stat
from .nfl import TruthSelection, free_morsel_report, verify_generalizer_independence
from .partitions import (
    DEFAULT_ENUM_LIMIT,
    Partition,
    PartitionShape,
    canonicalize,
    enumerate_partitions,
    universe_size,
)

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_NFL_FAIL = 4


class InputError(PartnflError):
    """A clustering file could not be parsed."""


# --------------------------------------------------------------------------
# input


def read_clustering(path: str | Path, fmt: str = "labels") -> Partition:
    """Read a clustering file as a canonical partition.

    ``labels``: one whitespace-free token per line, line order is node order;
    blank lines and ``#`` comments are skipped.  ``json``: an object with
    ``n`` and an ``assignment`` list of ``n`` non-negative integers.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if fmt == "labels":
        labels = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if len(line.split()) != 1:
                raise InputError(f"{path}:{lineno}: expected one label per line")
            labels.append(line)
        if not labels:
            raise InputError(f"{path}: no labels found")
        return canonicalize(labels)
    if fmt == "json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or "n" not in obj or "assignment" not in obj:
            raise InputError(f'{path}: expected an object with "n" and "assignment"')
        n, assignment = obj["n"], obj["assignment"]
        if not isinstance(n, int) or not isinstance(assignment, list):
            raise InputError(f"{path}: malformed n or assignment")
        if len(assignment) != n:
            raise InputError(f"{path}: assignment has {len(assignment)} entries, n is {n}")
        if not all(isinstance(x, int) and not isinstance(x, bool) and x >= 0
                   for x in assignment):
            raise InputError(f"{path}: assignment entries must be non-negative integers")
        if n < 1:
            raise InputError(f"{path}: n must be positive")
        return canonicalize(assignment)
    raise InputError(f"unknown format {fmt!r}")


# --------------------------------------------------------------------------
# output


def _encode(obj: Any) -> str:
    """JSON with floats at 17 significant digits and insertion-ordered keys."""
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite float in report")
        text = format(obj, ".17g")
        if "e" not in text and "." not in text and "inf" not in text:
            text += ".0"
        return text
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}"
                               for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _expectation_dict(e: ExpectationEstimate | None) -> dict | None:
    if e is None:
        return None
    return {"mean": e.mean, "std": e.std, "method": e.method,
            "samples": e.samples, "stderr": e.stderr}


def _report(command: str, inputs: dict, metric: dict | None, result: Any,
            seed: int | None, started: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "metric": metric,
        "result": result,
        "seed": seed,
        "timing": {"seconds": time.perf_counter() - started},
    }


def _emit(report: dict) -> None:
    sys.stdout.write(_encode(report) + "\n")


# --------------------------------------------------------------------------
# argument helpers


def _shape(text: str) -> PartitionShape:
    try:
        return PartitionShape.of([int(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}: {exc}") from exc


def _model(args: argparse.Namespace) -> RandomModel:
    family = args.model
    if args.shape is not None and family in (None, "perm"):
        return RandomModel.perm(args.shape)
    if args.blocks is not None and family in (None, "num"):
        return RandomModel.num(args.blocks)
    family = family or "all"
    if family == "num":
        raise InputError("--model num requires --blocks")
    return RandomModel(family)


def _method(args: argparse.Namespace) -> Method:
    if args.method == "exact":
        return EXACT
    return Method.monte_carlo(args.samples, args.seed)


def _model_dict(model: RandomModel) -> dict:
    return {"family": model.family,
            "shape": list(model.shape.sizes) if model.shape else None,
            "blocks": model.blocks}


def _add_model_flags(p: argparse.ArgumentParser, default: str | None = "all") -> None:
    p.add_argument("--model", choices=("all", "perm", "num", "interior"), default=default)
    p.add_argument("--shape", type=_shape, help="block sizes for --model perm, e.g. 2,1")
    p.add_argument("--blocks", type=int, help="block count for --model num")


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--enum-limit", type=int, default=DEFAULT_ENUM_LIMIT)


# --------------------------------------------------------------------------
# commands


def cmd_score(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    pred = read_clustering(args.pred, args.format)
    truth = read_clustering(args.truth, args.format)
    if pred.n != truth.n:
        raise InputError(f"prediction has {pred.n} nodes, truth has {truth.n}")
    model = _model(args)
    spec = MetricSpec(args.metric, model, args.norm, _method(args))
    s = score(spec, pred, truth, limit=args.enum_limit)
    result = {
        "value": s.value,
        "loss": loss(s) if spec.name in ("ami", "ari", "rrnmi", "cnmi", "kappa") else None,
        "expectation": _expectation_dict(s.expectation_used),
        "normalizer": s.normalizer_used,
    }
    metric = {"name": spec.name, "model": _model_dict(model),
              "normalization": spec.normalization, "method": args.method,
              "samples": args.samples if args.method == "mc" else None}
    _emit(_report("score", {"pred": str(args.pred), "truth": str(args.truth), "n": pred.n},
                  metric, result, args.seed if args.method == "mc" else None, started))
    return EXIT_OK


def cmd_expectation(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    truth = read_clustering(args.truth, args.format)
    model = _model(args)
    stat = args.stat.upper()
    e = expected_stat(stat, truth, model, _method(args), limit=args.enum_limit)
    metric = {"stat": stat, "model": _model_dict(model.resolve(truth)),
              "method": args.method,
              "samples": args.samples if args.method == "mc" else None}
    _emit(_report("expectation", {"truth": str(args.truth), "n": truth.n}, metric,
                  _expectation_dict(e), args.seed if args.method == "mc" else None,
                  started))
    return EXIT_OK


def cmd_verify_nfl(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    model = _model(args)
    spec = MetricSpec(args.metric, model, args.norm, _method(args))
    truths = TruthSelection.parse(args.truths, seed=args.seed)
    rep = verify_generalizer_independence(spec, args.n, truths, args.tolerance,
                                          limit=args.enum_limit)
    metric = {"name": spec.name, "model": _model_dict(model),
              "normalization": spec.normalization, "method": args.method}
    _emit(_report("verify-nfl", {"n": args.n, "truths": str(truths)}, metric,
                  rep.to_dict(), args.seed, started))
    return EXIT_OK if rep.passed else EXIT_NFL_FAIL


def cmd_free_morsel(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    model = _model(args)
    rep = free_morsel_report(args.n_max, args.norm, model, limit=args.enum_limit,
                             seed=args.seed)
    metric = {"name": "ami", "model": _model_dict(model), "normalization": args.norm}
    _emit(_report("free-morsel", {"n_max": args.n_max}, metric, rep.to_dict(),
                  args.seed, started))
    return EXIT_OK


def _universe_args(args: argparse.Namespace) -> dict:
    model = _model(args)
    return {"family": model.family, "shape": model.shape, "blocks": model.blocks}


def cmd_enumerate(args: argparse.Namespace) -> int:
    out = sys.stdout
    for p in enumerate_partitions(n=args.n, limit=args.enum_limit, **_universe_args(args)):
        out.write(str(p) + "\n")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    import random

    model = _model(args)
    model.check(args.n)
    rng = random.Random(args.seed)
    out = sys.stdout
    for _ in range(args.count):
        out.write(str(model.draw(args.n, rng)) + "\n")
    return EXIT_OK


def cmd_count(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    model = _model(args)
    model.check(args.n)
    count = universe_size(model.family, args.n, shape=model.shape, blocks=model.blocks)
    _emit(_report("count", {"n": args.n}, {"model": _model_dict(model)},
                  {"count": str(count)}, None, started))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partnfl",
        description="Chance-adjusted partition comparison and No Free Lunch checks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a predicted clustering against a truth")
    p.add_argument("pred")
    p.add_argument("truth")
    p.add_argument("--metric", choices=METRICS, default="ami")
    p.add_argument("--norm", choices=AMI_NORMALIZATIONS, default="constant-logn")
    p.add_argument("--format", choices=("labels", "json"), default="labels")
    _add_model_flags(p)
    _add_method_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("expectation", help="E[stat(C', truth)] under a random model")
    p.add_argument("truth")
    p.add_argument("--stat", choices=("mi", "ri", "nmi"), default="mi")
    p.add_argument("--format", choices=("labels", "json"), default="labels")
    _add_model_flags(p)
    _add_method_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_expectation)

    p = sub.add_parser("verify-nfl", help="check generalizer-independence by brute force")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--metric", choices=METRICS, default="ami")
    p.add_argument("--norm", choices=AMI_NORMALIZATIONS, default="constant-logn")
    p.add_argument("--truths", default="all",
                   help="all | interior | sample:K | boundary+sample:K")
    p.add_argument("--tolerance", type=float, default=1e-9)
    _add_model_flags(p)
    _add_method_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_verify_nfl)

    p = sub.add_parser("free-morsel", help="boundary gap of shape-conditioned AMI")
    p.add_argument("--n-max", type=int, default=7)
    p.add_argument("--norm", choices=AMI_NORMALIZATIONS, default="constant-logn")
    p.add_argument("--seed", type=int, default=0)
    _add_model_flags(p, default="perm")
    _add_common(p)
    p.set_defaults(func=cmd_free_morsel)

    for name, func, help_ in (("enumerate", cmd_enumerate, "list a universe"),
                              ("sample", cmd_sample, "draw uniform partitions"),
                              ("count", cmd_count, "exact universe size")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--n", type=int, required=True)
        _add_model_flags(p, default=None)
        _add_common(p)
        if name == "sample":
            p.add_argument("--count", type=int, default=1)
            p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateMetricError as exc:
        print(f"partnfl: degenerate metric: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (PartnflError, ValueError) as exc:
        print(f"partnfl: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
