"""Command-line front end.

Exit status: 0 on success, 1 on invalid input, 2 when a size cap stops a run.
Every file written carries the tool version and the fully resolved
configuration in its header; payloads contain no timestamps unless
``--timing`` is given, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .chains import CHAIN_CAP
from .cleaning import clean_pipeline, default_Delta, paper_constants
from .embedding import dump_embeddings, embedding_census
from .experiments import (
    enumerate_p_free,
    la_star_exact,
    random_turan_trials,
    records_json,
    sample_plattice,
    trials_csv,
)
from .lattice import CapExceeded, Family, middle_levels, read_family
from .posets import PosetError, height, load_poset
from .supersat import (
    ORACLE_CAP,
    build_balanced,
    count_induced_copies,
    mstar,
    rank_upper_bound,
    replay_audit,
    verify_supersaturation,
)

WINDOW_RULE = "q middle levels: lowest level ceil((n-q+1)/2), ties rounded upward"


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def rational(text: str) -> Fraction:
    """Exact rational from 'a/b', an integer or a decimal string."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _default_threads() -> int:
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="treesat", description="Exact desk-scale tree-poset embedding engine")
    parser.add_argument("--version", action="version", version=f"treesat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, poset=True, family=True):
        p.add_argument("--n", type=int, help="ground set size")
        if poset:
            p.add_argument("--poset", help="poset file or builtin name (chain2, V, Lambda, zigzag3, spider4, ...)")
        if family:
            p.add_argument("--family", help="family file (header n=<int>, one set per line)")
            p.add_argument("--sample", type=rational, help="use a random family keeping each set with this probability")
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--chain-cap", type=int, default=CHAIN_CAP, help="largest n for full-chain enumeration")
        p.add_argument("--oracle-cap", type=int, default=ORACLE_CAP, help="largest family for copy oracles")
        p.add_argument("--out", help="write the JSON or CSV artifact here")
        p.add_argument("--timing", action="store_true", help="record wall-clock timings in the outputs")

    p = sub.add_parser("supersat", help="copies versus M*(n,q,P)")
    common(p)
    p.add_argument("--q", type=int)
    p.add_argument("--eps", type=rational, default=Fraction(1, 4))
    p.add_argument("--gamma", type=rational)
    p.add_argument("--ell", type=int)
    p.add_argument("--N", type=int)

    p = sub.add_parser("clean", help="run the cleaning pipeline and dump its trace")
    common(p)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--mode", choices=["practical", "paper"], default="practical")
    p.add_argument("--delta", type=rational, help="badness threshold (practical mode)")
    p.add_argument("--eps", type=rational, default=Fraction(1, 4), help="epsilon for paper-mode constants")
    p.add_argument("--steps", type=int, help="cleaning rounds (default |P|, or 1 without a poset)")
    p.add_argument("--Delta", type=rational, help="heavy-chain ratio (default 12|P|+q+2)")

    p = sub.add_parser("embed", help="census of greedy embeddings over roots and rank functions")
    common(p)
    p.add_argument("--q", type=int)
    p.add_argument("--delta", type=rational, default=Fraction(0), help="cleaning threshold")
    p.add_argument("--Delta", type=rational)
    p.add_argument("--dump", help="write every embedding as a JSON line to this file")

    p = sub.add_parser("balanced", help="build a degree-capped copy collection")
    common(p)
    p.add_argument("--delta", type=rational, required=True)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--clean-delta", type=rational, default=Fraction(0))

    p = sub.add_parser("random-turan", help="La* of random subfamilies of B_n")
    common(p, family=False)
    p.add_argument("--p", type=rational, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--summary", help="write the summary JSON here")

    p = sub.add_parser("count-free", help="number of induced-P-free families of B_n")
    common(p, family=False)
    p.add_argument("--mode", choices=["auto", "exhaustive", "backtrack"], default="auto")

    p = sub.add_parser("oracle", help="brute-force oracles")
    common(p)
    p.add_argument("--what", choices=["copies", "mstar", "rank-bound", "la-star"], required=True)
    p.add_argument("--q", type=int)
    return parser


# --- helpers -----------------------------------------------------------------------

def _require(args, name: str):
    value = getattr(args, name, None)
    if value is None:
        raise InputError(f"--{name.replace('_', '-')} is required for {args.command}")
    return value


def _poset(args):
    source = _require(args, "poset")
    try:
        return load_poset(source)
    except (PosetError, OSError) as exc:
        raise InputError(f"--poset: {exc}")


def _check_n(args, limit: int | None = None) -> int:
    n = _require(args, "n")
    if n < 1:
        raise InputError(f"--n: must be positive, got {n}")
    if limit is not None and n > limit:
        raise CapExceeded(f"--n: {n} exceeds the cap {limit}")
    return n


def _family(args, default: str, q: int | None = None) -> tuple[Family, dict]:
    """Family from --family, --sample, or the named default; plus how it was chosen."""
    if getattr(args, "family", None):
        try:
            fam = read_family(args.family)
        except (OSError, ValueError) as exc:
            raise InputError(f"--family: {exc}")
        if args.n is not None and args.n != fam.n:
            raise InputError(f"--n: {args.n} disagrees with the family file (n={fam.n})")
        return fam, {"source": "file", "path": args.family}
    n = _check_n(args)
    if getattr(args, "sample", None) is not None:
        if not 0 <= args.sample <= 1:
            raise InputError(f"--sample: {args.sample} outside [0, 1]")
        return sample_plattice(n, args.sample, args.seed), {
            "source": "sample", "p": str(args.sample), "seed": args.seed}
    if default == "middle":
        w = middle_levels(n, q)
        return w.family(n), {"source": "middle-levels", "window": [w.lo, w.hi], "rule": WINDOW_RULE}
    return Family.full(n), {"source": "full"}


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def resolved_config(args, **extra) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "dump", "summary")}
    cfg.update(extra)
    return _jsonable(cfg)


def header(config: dict, timing: bool) -> dict:
    h = {"tool": "treesat", "version": __version__, "config": config}
    if timing:
        import datetime
        h["started"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return h


def write_json(path: str, hdr: dict, payload) -> None:
    with open(path, "w") as fh:
        json.dump({"header": hdr, "payload": _jsonable(payload)}, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _print_json(payload) -> None:
    print(json.dumps(_jsonable(payload), sort_keys=True))


# --- subcommands ---------------------------------------------------------------------

def cmd_supersat(args) -> int:
    P = _poset(args)
    q = args.q if args.q is not None else height(P)
    fam, source = _family(args, "middle", q)
    report = verify_supersaturation(fam, P, q, args.eps, args.gamma, args.ell, args.N, args.oracle_cap)
    payload = report.to_json()
    if args.out:
        write_json(args.out, header(resolved_config(args, q=q, family_source=source), args.timing), payload)
    _print_json(payload)
    return 0


def cmd_clean(args) -> int:
    P = load_poset(args.poset) if args.poset else None
    fam, source = _family(args, "full")
    if fam.n > args.chain_cap:
        raise CapExceeded(f"--n: {fam.n} exceeds the chain cap {args.chain_cap}")
    steps = args.steps if args.steps is not None else (P.size if P else 1)
    if steps < 1:
        raise InputError("--steps: must be at least 1")
    size = P.size if P else steps
    Delta = args.Delta if args.Delta is not None else default_Delta(args.q, size)
    extra = {"family_source": source, "steps": steps, "Delta": Delta}
    if args.mode == "paper":
        consts = paper_constants(args.eps, args.q, size)
        delta = consts.delta_max
        extra["paper_constants"] = consts.to_json()
    else:
        delta = _require(args, "delta")
    if not 0 <= delta <= 1:
        raise InputError(f"--delta: {delta} outside [0, 1]")
    extra["delta"] = delta
    res = clean_pipeline(fam, args.q, delta, steps, Delta, args.chain_cap)
    payload = {"report": res.report, "trace": res.trace.to_json()}
    if args.out:
        write_json(args.out, header(resolved_config(args, **extra), args.timing), payload)
    _print_json(res.report)
    return 0


def cmd_embed(args) -> int:
    P = _poset(args)
    q = args.q if args.q is not None else height(P)
    fam, source = _family(args, "middle", q)
    if fam.n > args.chain_cap:
        raise CapExceeded(f"--n: {fam.n} exceeds the chain cap {args.chain_cap}")
    Delta = args.Delta if args.Delta is not None else default_Delta(q, P.size)
    res = clean_pipeline(fam, q, args.delta, P.size, Delta, args.chain_cap)
    sink_fh = open(args.dump, "w") if args.dump else None
    try:
        sink = (lambda emb: dump_embeddings([emb], sink_fh)) if sink_fh else None
        census = embedding_census(fam, P, res.views, sink=sink)
    finally:
        if sink_fh:
            sink_fh.close()
    payload = {"cleaning": res.report, "census": census.to_json()}
    if args.out:
        write_json(args.out, header(resolved_config(args, q=q, Delta=Delta, family_source=source), args.timing),
                   payload)
    _print_json(census.to_json())
    return 0


def cmd_balanced(args) -> int:
    P = _poset(args)
    q = height(P)
    fam, source = _family(args, "middle", q)
    if fam.n > args.chain_cap:
        raise CapExceeded(f"--n: {fam.n} exceeds the chain cap {args.chain_cap}")
    if args.ell < 1:
        raise InputError("--ell: must be at least 1")
    try:
        result = build_balanced(fam, P, args.delta, args.ell, clean_delta=args.clean_delta)
    except ValueError as exc:
        raise InputError(f"--family: {exc}")
    problems = replay_audit(result.collection)
    payload = result.to_json()
    payload["replay_audit"] = problems
    if args.out:
        write_json(args.out, header(resolved_config(args, q=q, family_source=source), args.timing), payload)
    H = result.collection
    _print_json({
        "status": result.status,
        "size": len(H),
        "target": str(result.target),
        "max_degrees": [H.max_degree(j) for j in range(1, P.size + 1)],
        "caps": [H.cap(j) for j in range(1, P.size + 1)],
        "frontier_violations": len(result.frontier_violations),
        "replay_audit": "pass" if not problems else problems,
    })
    return 0


def cmd_random_turan(args) -> int:
    P = _poset(args)
    n = _check_n(args, 7)
    if not 0 <= args.p <= 1:
        raise InputError(f"--p: {args.p} outside [0, 1]")
    if args.trials < 0:
        raise InputError("--trials: must be nonnegative")
    if args.threads < 1:
        raise InputError("--threads: must be at least 1")
    stats = random_turan_trials(n, args.p, P, args.trials, args.seed, workers=args.threads)
    cfg = resolved_config(args)
    cfg.pop("threads", None)  # results do not depend on the worker count
    hdr = header(cfg, args.timing)
    text = "# " + json.dumps(hdr, sort_keys=True) + "\n" + trials_csv(stats.records, args.timing)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.summary:
        summary = stats.summary()
        if args.timing:
            summary["records"] = json.loads(records_json(stats.records))
        write_json(args.summary, hdr, summary)
    return 0


def cmd_count_free(args) -> int:
    P = _poset(args)
    n = _check_n(args)
    value = enumerate_p_free(n, P, args.mode)
    if args.out:
        write_json(args.out, header(resolved_config(args), args.timing), {"count": value})
    print(value)
    return 0


def cmd_oracle(args) -> int:
    P = _poset(args)
    q = args.q if args.q is not None else height(P)
    if args.what == "rank-bound":
        n = _check_n(args)
        value = rank_upper_bound(n, q, P)
        payload = {"rank_upper_bound": value}
    elif args.what == "mstar":
        n = _check_n(args)
        value = mstar(n, q, P, args.oracle_cap)
        payload = {"mstar": value, "rule": WINDOW_RULE}
    else:
        fam, _ = _family(args, "full")
        if args.what == "copies":
            copies, emb = count_induced_copies(fam, P, args.oracle_cap)
            value = copies
            payload = {"copies": copies, "embeddings": emb}
        else:
            res = la_star_exact(fam, P)
            value = res.value
            if not res.exact:
                print(f"treesat: la-star: host of {len(fam)} sets is beyond the exact solver; "
                      "printing a greedy lower bound", file=sys.stderr)
            payload = {"la_star": res.value, "exact": res.exact, "witness": list(res.witness.members)}
    if args.out:
        write_json(args.out, header(resolved_config(args, q=q), args.timing), payload)
    print(value)
    return 0


COMMANDS = {
    "supersat": cmd_supersat,
    "clean": cmd_clean,
    "embed": cmd_embed,
    "balanced": cmd_balanced,
    "random-turan": cmd_random_turan,
    "count-free": cmd_count_free,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CapExceeded as exc:
        print(f"treesat: cap exceeded: {exc}", file=sys.stderr)
        return 2
    except (InputError, PosetError, ValueError) as exc:
        print(f"treesat: invalid input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
