"""Command-line entry point.

Every command prints a JSON run report: the echoed command, sha256 digests of
the input files, the result payload, wall-clock timing and the tool version.
Payloads are deterministic for fixed inputs; timing is informational.

Exit codes: 0 success, 1 I/O failure, 2 domain error, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from decimal import Decimal, getcontext
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from . import balancedness, geometry, mbc, model, polyhedra, properties, stability
from .combinatorics import count_uniform_hypergraphs, hypergraph, regular_to_weighted, dual, uniform_to_mbc_check
from .model import Coalition, Game, format_coalition

USAGE_EXIT = 64
IO_EXIT = 1
DOMAIN_EXIT = 2

DEFAULT_SEED = 2023


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fraction_json(value: Fraction):
    return int(value) if value.denominator == 1 else str(value)


def _decimal_sqrt(value: Fraction, digits: int = 20) -> str:
    getcontext().prec = digits + 10
    d = Decimal(value.numerator) / Decimal(value.denominator)
    root = d.copy_abs().sqrt()
    if value < 0:
        root = -root
    return str(+Decimal(root).normalize()) if root == 0 else f"{root:.{digits}g}"


def _coalition_json(mask: Coalition, game: Optional[Game] = None) -> str:
    names = game.players if game is not None and game.players else None
    if names and all(len(n) == 1 for n in names):
        return format_coalition(mask, names)
    if names:
        return "+".join(names[i] for i in model.members(mask))
    return format_coalition(mask)


def _collection_json(masks, game: Optional[Game] = None) -> list:
    return [_coalition_json(m, game) for m in masks]


def _weighted_json(wc: mbc.WeightedCollection, game: Optional[Game] = None) -> dict:
    return {
        "coalitions": _collection_json(wc.coalitions, game),
        "weights": [_fraction_json(w) for w in wc.weights],
    }


def _vector_json(x) -> list:
    return [_fraction_json(Fraction(a)) for a in x]


def parse_coalition(text: str, game: Game) -> Coalition:
    """A coalition given as a bitmask (0b...), an index list, or player names."""
    text = text.strip()
    if text.startswith("0b"):
        mask = int(text, 2)
    else:
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if parts and all(p.isdigit() for p in parts):
            mask = model.coalition(int(p) for p in parts)
        else:
            if not game.players:
                # single-word letter shorthand like "ace" over default names
                letters = list(text)
                defaults = [chr(ord("a") + i) for i in range(game.n)]
                if all(ch in defaults for ch in letters):
                    mask = model.coalition(defaults.index(ch) for ch in letters)
                else:
                    raise ValueError(f"cannot parse coalition {text!r}: no player names declared")
            else:
                names = list(game.players)
                if len(parts) == 1 and parts[0] not in names and all(ch in names for ch in text):
                    parts = list(text)
                mask = model.coalition(names.index(p) for p in parts)
    if mask <= 0 or mask > game.grand:
        raise ValueError(f"coalition {text!r} out of range")
    return mask


def parse_vector(text: str, n: int) -> tuple[Fraction, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ValueError(f"expected {n} coordinates, got {len(parts)}")
    return tuple(Fraction(p) for p in parts)


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


def _load_store(path: Optional[str], needed_n: int) -> mbc.MbcStore:
    if path is None:
        if needed_n > 5:
            raise ValueError("--mbc <store> is required for more than five players")
        return mbc.generate(needed_n)
    store = mbc.MbcStore.load(path)
    if store.n != needed_n:
        raise ValueError(f"store is for n={store.n}, game has n={needed_n}")
    return store


def _library_for(store: mbc.MbcStore) -> mbc.MbcLibrary:
    return store.cache("library", lambda: mbc.MbcLibrary([store]))


# ---------------------------------------------------------------------------
# command implementations: each returns (payload, input paths)


def _cmd_mbc_generate(args) -> tuple[dict, list[str]]:
    inputs = []
    if args.from_store:
        store = mbc.MbcStore.load(args.from_store)
        inputs.append(args.from_store)
        if store.n + 1 != args.n:
            raise ValueError("--from must hold the store for n-1 players")
        store = mbc.add_new_player(store, threads=args.threads)
    else:
        if args.n > mbc.DESK_SCALE_LIMIT and not args.allow_large:
            raise ValueError("n = 7 takes CPU-days; pass --allow-large to proceed")
        store = mbc.generate(args.n, allow_large=args.allow_large, threads=args.threads)
    payload: dict = {"n": store.n, "count": len(store)}
    if args.out:
        store.save(args.out)
        payload["store"] = args.out
        args.out = None  # --out named the store file; the report goes to stdout
    return payload, inputs


def _cmd_analyze(args) -> tuple[dict, list[str]]:
    game = model.load_game(args.game)
    inputs = [args.game]
    store = _load_store(args.mbc, game.n)
    if args.mbc:
        inputs.append(args.mbc)

    what = args.what
    if what == "balanced":
        ok, witness = balancedness.is_balanced(game, store)
        payload = {"result": ok}
        if witness is not None:
            payload["witness"] = _weighted_json(witness, game)
        return payload, inputs
    if what == "effective":
        eff = balancedness.effective_coalitions(game, store)
        return {"result": _collection_json(sorted(eff), game)}, inputs
    if what == "cover":
        cover = balancedness.totally_balanced_cover(game, _library_for(store))
        worths = [
            {"coalition": _coalition_json(m, game), "value": _fraction_json(cover.worth(m))}
            for m in range(1, game.grand + 1)
        ]
        return {"result": worths}, inputs
    if what in ("exact", "vital", "sve", "extendable"):
        if args.coalition:
            masks = [parse_coalition(args.coalition, game)]
        else:
            masks = list(range(1, game.grand)) if what != "exact" else list(range(1, game.grand + 1))
        check = {
            "exact": lambda m: properties.is_exact(game, m, store),
            "vital": lambda m: properties.is_vital(game, m, _library_for(store)),
            "sve": lambda m: properties.is_strictly_vital_exact(game, m, store),
            "extendable": lambda m: properties.is_extendable(game, m, store),
        }[what]
        results = {_coalition_json(m, game): check(m) for m in masks}
        if args.coalition:
            return {"result": results[_coalition_json(masks[0], game)]}, inputs
        return {"result": results}, inputs
    if what == "feasible":
        if not args.collection:
            raise ValueError("analyze feasible needs --collection")
        masks = [parse_coalition(tok, game) for tok in args.collection]
        family = None
        if args.family == "sve":
            family = properties.vital_exact_set(game, store)
        report = properties.is_feasible(game, masks, family, store)
        payload = {
            "result": report.feasible,
            "blocking": report.blocking,
            "collection": _collection_json(report.collection, game),
        }
        if report.witness is not None:
            payload["witness"] = _vector_json(report.witness)
        return payload, inputs
    if what == "stable":
        verdict = stability.is_core_stable(
            game,
            store,
            max_region_size=args.max_region_size,
            exhaustive=args.report is not None,
            threads=args.threads,
        )
        payload = {
            "stable": verdict.stable,
            "reason": verdict.reason,
        }
        if verdict.collection is not None:
            payload["collection"] = _collection_json(verdict.collection, game)
        if verdict.coalition is not None:
            payload["coalition"] = _coalition_json(verdict.coalition, game)
        if verdict.details.get("blind_spot"):
            payload["blind_spot"] = True
        if args.report is not None:
            report = {
                "regions": [
                    {
                        "collection": _collection_json(d.collection, game),
                        "outcome": d.outcome,
                    }
                    for d in verdict.regions
                ]
            }
            with open(args.report, "w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=2)
                fh.write("\n")
            payload["report"] = args.report
        return payload, inputs
    raise ValueError(f"unknown analysis {what!r}")


def _cmd_project(args) -> tuple[dict, list[str]]:
    game = model.load_game(args.game)
    inputs = [args.game]
    x = parse_vector(args.x, game.n)
    if not model.is_preimputation(game, x):
        raise ValueError("the vector is not a preimputation (x(N) must equal v(N))")
    if args.collection:
        masks = [parse_coalition(tok, game) for tok in args.collection]
        target = geometry.project_multi(game, masks, x)
        payload = {
            "collection": _collection_json(masks, game),
            "projection": _vector_json(target),
        }
    else:
        store = _load_store(args.mbc, game.n)
        if args.mbc:
            inputs.append(args.mbc)
        family = properties.vital_exact_set(game, store)
        reaching = geometry.reaching_collections(game, x, family)
        best = None
        for masks in reaching:
            target = geometry.project_multi(game, masks, x)
            sq = sum(((b - a) ** 2 for a, b in zip(x, target)), Fraction(0))
            if best is None or sq < best[0]:
                best = (sq, masks, target)
        target = best[2]
        payload = {
            "reaching_collections": [_collection_json(m, game) for m in reaching],
            "collection": _collection_json(best[1], game),
            "projection": _vector_json(target),
        }
    side = tuple(b - Fraction(a) for a, b in zip(x, target))
    sq = sum((s * s for s in side), Fraction(0))
    payload["side_payment"] = _vector_json(side)
    payload["squared_distance"] = _fraction_json(sq)
    payload["distance"] = _decimal_sqrt(sq)
    return payload, inputs


def _cmd_failure(args) -> tuple[dict, list[str]]:
    game = model.load_game(args.game)
    inputs = [args.game]
    x = parse_vector(args.x, game.n)
    if not model.is_preimputation(game, x):
        raise ValueError("the vector is not a preimputation (x(N) must equal v(N))")
    family = None
    if args.mbc:
        store = _load_store(args.mbc, game.n)
        inputs.append(args.mbc)
        family = properties.vital_exact_set(game, store)
    failure = geometry.market_failure(game, x, family)
    payload = {
        "squared_distance": _fraction_json(failure.squared_distance),
        "distance": _decimal_sqrt(abs(failure.squared_distance))
        if failure.squared_distance >= 0
        else "-" + _decimal_sqrt(abs(failure.squared_distance)),
        "side_payment": _vector_json(failure.side_payment),
    }
    if failure.collection is not None:
        payload["collection"] = _collection_json(failure.collection, game)
    return payload, inputs


def _cmd_enumerate(args) -> tuple[dict, list[str]]:
    if args.kind != "unbalanced":
        raise ValueError("only 'unbalanced' enumeration is available")
    out = properties.maximal_unbalanced(args.n, threads=args.threads)
    return {
        "n": args.n,
        "count": len(out),
        "collections": [[format_coalition(m) for m in q] for q in out],
    }, []


def _cmd_count(args) -> tuple[dict, list[str]]:
    if args.kind != "hyp":
        raise ValueError("only 'hyp' counting is available")
    counts = count_uniform_hypergraphs(args.k, args.p, args.max_n)
    return {
        "k": args.k,
        "p": args.p,
        "counts": {str(n): c for n, c in zip(range(2, args.max_n + 1), counts)},
        "total": sum(counts),
    }, []


def _cmd_convert(args) -> tuple[dict, list[str]]:
    if args.kind != "hypergraph":
        raise ValueError("only 'hypergraph' conversion is available")
    with open(args.path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    labels: dict[str, int] = {}
    edges = []
    for line in lines:
        edge = []
        for token in line.split(","):
            token = token.strip()
            if token not in labels:
                labels[token] = len(labels)
            edge.append(labels[token])
        edges.append(edge)
    h = hypergraph(len(labels), edges)
    payload: dict = {"order": h.order, "size": h.size}
    k = h.uniform_size()
    if k is None:
        raise ValueError("the hypergraph is not uniform; cannot convert")
    payload["uniform"] = k
    collection = regular_to_weighted(dual(h))
    minimal = uniform_to_mbc_check(h) is not None
    payload["collection"] = _weighted_json(collection)
    payload["depth"] = collection.depth()
    payload["minimal"] = minimal
    return payload, [args.path]


def _cmd_bench(args) -> tuple[dict, list[str]]:
    if args.kind != "bs-vs-lp":
        raise ValueError("only the 'bs-vs-lp' benchmark is available")
    rng = random.Random(args.seed)
    store = mbc.generate(args.n)
    games = [model.random_game(rng, args.n) for _ in range(args.games)]
    t0 = time.perf_counter()
    mbc_results = [balancedness.quick_is_balanced(g, store) for g in games]
    t_mbc = time.perf_counter() - t0
    t0 = time.perf_counter()
    lp_results = [polyhedra.lp_is_balanced(g) for g in games]
    t_lp = time.perf_counter() - t0
    if mbc_results != lp_results:
        raise AssertionError("balancedness oracle disagreement")
    return {
        "n": args.n,
        "games": args.games,
        "agree": True,
        "balanced": sum(mbc_results),
        "mbc_seconds": round(t_mbc, 6),
        "lp_seconds": round(t_lp, 6),
        "speedup": round(t_lp / t_mbc, 2) if t_mbc > 0 else None,
    }, []


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="coopcore", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--json", action="store_true", help="compact single-line JSON")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--threads", type=int, default=None, help="cap for data-parallel sections")

    p = sub.add_parser("mbc", help="minimal balanced collection stores")
    msub = p.add_subparsers(dest="mbc_command", required=True)
    g = msub.add_parser("generate")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--from", dest="from_store", help="store for n-1 players to extend")
    g.add_argument("--allow-large", action="store_true", help="permit the CPU-days n=7 run")
    common(g)
    g.set_defaults(run=_cmd_mbc_generate)

    p = sub.add_parser("analyze", help="game analyses")
    p.add_argument("what", choices=["balanced", "effective", "cover", "exact", "vital", "sve", "extendable", "feasible", "stable"])
    p.add_argument("game")
    p.add_argument("--mbc", help="path to the MBC store for the game's player count")
    p.add_argument("--coalition", help="bitmask 0b.., index list, or player names")
    p.add_argument("--collection", nargs="+", help="coalitions forming a collection")
    p.add_argument("--family", choices=["all", "sve"], default="all", help="describing family for feasibility")
    p.add_argument("--max-region-size", type=int, default=None)
    p.add_argument("--report", help="write per-region stability dispositions here")
    common(p)
    p.set_defaults(run=_cmd_analyze)

    p = sub.add_parser("project", help="project a preimputation onto payment hyperplanes")
    p.add_argument("game")
    p.add_argument("--x", required=True, help="comma-separated rational coordinates")
    p.add_argument("--collection", nargs="+")
    p.add_argument("--mbc")
    common(p)
    p.set_defaults(run=_cmd_project)

    p = sub.add_parser("failure", help="distance from a preimputation to the core")
    p.add_argument("game")
    p.add_argument("--x", required=True)
    p.add_argument("--mbc")
    common(p)
    p.set_defaults(run=_cmd_failure)

    p = sub.add_parser("enumerate", help="enumerate collections")
    p.add_argument("kind", choices=["unbalanced"])
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(run=_cmd_enumerate)

    p = sub.add_parser("count", help="count combinatorial structures")
    p.add_argument("kind", choices=["hyp"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--max-n", type=int, required=True)
    common(p)
    p.set_defaults(run=_cmd_count)

    p = sub.add_parser("convert", help="convert hypergraph files")
    p.add_argument("kind", choices=["hypergraph"])
    p.add_argument("path")
    common(p)
    p.set_defaults(run=_cmd_convert)

    p = sub.add_parser("bench", help="benchmark harnesses")
    p.add_argument("kind", choices=["bs-vs-lp"])
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--games", type=int, default=100)
    common(p)
    p.set_defaults(run=_cmd_bench)

    return parser


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    started = time.perf_counter()
    try:
        payload, inputs = args.run(args)
    except (ValueError, KeyError, AssertionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return DOMAIN_EXIT
    except (OSError, json.JSONDecodeError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return IO_EXIT
    elapsed_ms = int((time.perf_counter() - started) * 1000)
    report = {
        "command": list(argv),
        "inputs": {path: _digest(path) for path in inputs},
        "result": payload,
        "timing_ms": elapsed_ms,
        "version": __version__,
    }
    text = json.dumps(report, separators=(",", ":")) if args.json else json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
