"""Command-line entry point.

Exit codes:
  0  success, or the verifier accepted
  1  the verifier rejected, or an audit bound failed
  2  invalid parameters or inputs
  3  the board is incomplete (missing commitments or proof)
  4  board integrity or transport failure
  5  any other error
"""

import argparse
import json
import os
import random
import sys
import time
from pathlib import Path

from . import audit, report
from .backend import ProvingKey, VerifyingKey, available_backends, get_backend
from .constraints import synthesize_main
from .errors import (
    AuditScopeError,
    BoardError,
    DomainError,
    IncompleteBoardError,
    InputShapeError,
    ParameterError,
    PipelineError,
    VerExpError,
)
from .exactmath import Epsilon, fraction_str
from .hash_commit import commit, hash_instance
from .params import (
    DEFAULT_BIT_WIDTH,
    DEFAULT_L,
    DEFAULT_P,
    ProtocolParams,
    build_table,
    parse_range,
    require_valid,
    validate_params,
)
from .protocol import (
    TAMPER_CLASSES,
    BoardServer,
    FileBoard,
    MemoryBoard,
    Opening,
    open_board,
    order_openings,
    post_result,
    provider_commit,
    run_pipeline,
    verexp_prove,
    verexp_verify,
)

EXIT_OK, EXIT_FAIL, EXIT_PARAMS, EXIT_INCOMPLETE, EXIT_BOARD, EXIT_OTHER = range(6)
BOARD_ENV = "VEREXP_BOARD"


def exit_code(exc):
    if isinstance(exc, PipelineError):
        if exc.phase == "params" and not isinstance(exc.cause, Exception):
            return EXIT_PARAMS
        if isinstance(exc.cause, Exception):
            return exit_code(exc.cause)
    if isinstance(exc, IncompleteBoardError):
        return EXIT_INCOMPLETE
    if isinstance(exc, BoardError):
        return EXIT_BOARD
    if isinstance(exc, (ParameterError, InputShapeError, DomainError, AuditScopeError)):
        return EXIT_PARAMS
    return EXIT_OTHER


# -- shared flags --------------------------------------------------------------


def _add_param_flags(p, m_required=False):
    p.add_argument("--params", help="params JSON file (overrides the flags below)")
    p.add_argument("--m", type=int, help="number of data providers")
    p.add_argument("--range", default="0:99", help="A:B for consecutive integers, or a comma list")
    p.add_argument("--range-file", help="file with one range element per line")
    p.add_argument("--epsilon", default="0.5", help="decimal or c*ln(q), e.g. 2*ln(2)")
    p.add_argument("--method", choices=("set0", "setk"), default="set0")
    p.add_argument("--l", type=int, default=DEFAULT_L, help="physical table length")
    p.add_argument("--bit-width", type=int, default=DEFAULT_BIT_WIDTH)
    p.add_argument("--p", type=int, default=DEFAULT_P, help="field prime")


def _params(args):
    if args.params:
        return ProtocolParams.from_json(Path(args.params).read_text())
    if args.m is None:
        raise ParameterError("--m is required without --params")
    if args.range_file:
        rng = [int(line) for line in Path(args.range_file).read_text().split() if line.strip()]
    else:
        rng = parse_range(args.range)
    return ProtocolParams(
        range=rng,
        m=args.m,
        epsilon=args.epsilon,
        method=args.method,
        l=args.l,
        p=args.p,
        bit_width=args.bit_width,
    )


def _add_board_flag(p):
    p.add_argument(
        "--board",
        default=None,
        help=f"memory, file:PATH or tcp:HOST:PORT (default ${BOARD_ENV}, else memory)",
    )


def _board(args):
    return open_board(args.board or os.environ.get(BOARD_ENV) or "memory")


def _ints(text):
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _print_summary(doc, keys):
    width = max(len(k) for k in keys)
    for k in keys:
        print(f"{k:<{width}}  {doc[k]}")


# -- params / table ----------------------------------------------------------


def cmd_params(args):
    params = _params(args)
    problems = validate_params(params)
    text = params.to_json(indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    for prob in problems:
        print(f"invalid: {prob}", file=sys.stderr)
    if problems:
        return EXIT_PARAMS
    print(f"digest {params.digest}", file=sys.stderr)
    return EXIT_OK


def cmd_table(args):
    table = build_table(args.epsilon, args.l, args.method)
    doc = table.to_dict()
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print(f"k={table.k} tail={table.tail} T[0]={table.entries[0]} l={table.l}", file=sys.stderr)
    return EXIT_OK


# -- party roles ---------------------------------------------------------------


def cmd_setup(args):
    params = require_valid(_params(args))
    backend = get_backend(args.backend)
    cs = synthesize_main(params)
    keys = backend.setup(cs, args.security, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "params.json").write_text(params.to_json(indent=2) + "\n")
    (out / "pk.bin").write_bytes(keys.pk.to_bytes())
    (out / "vk.bin").write_bytes(keys.vk.to_bytes())
    (out / "pp.json").write_bytes(keys.pp + b"\n")
    if args.write_cs:
        (out / "cs.bin").write_bytes(cs.to_bytes())
    print(f"constraints {len(cs.constraints)}")
    print(f"params_digest {params.digest}")
    print(f"vk_digest {keys.vk.digest()}")
    return EXIT_OK


def cmd_commit(args):
    params = require_valid(_params(args))
    rng = random.Random(args.seed) if args.seed is not None else None
    # fail before posting if the opening cannot be written
    Path(args.opening).parent.mkdir(parents=True, exist_ok=True)
    Path(args.opening).touch()
    rec = provider_commit(args.owner, args.x, params, _board(args), rng)
    doc = {"owner": rec.owner, "r": str(rec.r), "x": str(rec.x)}
    # the opening is the provider's private message to the analyst
    Path(args.opening).write_text(json.dumps(doc, sort_keys=True) + "\n")
    print(f"commitment {rec.c} index {rec.board_index}")
    return EXIT_OK


def _load_openings(paths):
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    out = []
    for f in files:
        d = json.loads(f.read_text())
        out.append(Opening(d["owner"], int(d["x"]), int(d["r"])))
    return out


def cmd_prove(args):
    params = require_valid(_params(args))
    pk = ProvingKey.from_bytes(Path(args.pk).read_bytes())
    backend = get_backend(pk.backend_id)
    pk.attach(synthesize_main(params))
    board = _board(args)
    openings = order_openings(board, _load_openings(args.openings), params.m)
    result = verexp_prove(pk, params, openings, backend)
    ridx, pidx = post_result(board, args.owner, result)
    print(f"med {result.med}")
    print(f"result index {ridx} proof index {pidx}")
    print(f"t_w {result.timings['witness']:.3f}s t_p {result.timings['prove']:.3f}s")
    return EXIT_OK


def cmd_verify(args):
    params = require_valid(_params(args))
    vk = VerifyingKey.from_bytes(Path(args.vk).read_bytes())
    t = time.perf_counter()
    verdict = verexp_verify(vk, params, _board(args), get_backend(vk.backend_id))
    print(f"{'ACCEPT' if verdict.accept else 'REJECT'}: {verdict.reason}")
    if verdict.med is not None:
        print(f"med {verdict.med}")
    print(f"t_v {time.perf_counter() - t:.3f}s")
    return EXIT_OK if verdict.accept else EXIT_FAIL


def cmd_board_serve(args):
    board = FileBoard(args.file) if args.file else MemoryBoard()
    server = BoardServer((args.host, args.port), board)
    print(f"tcp:{server.address}", flush=True)
    if args.address_file:
        tmp = args.address_file + ".tmp"
        Path(tmp).write_text(f"tcp:{server.address}\n")
        os.replace(tmp, args.address_file)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# -- pipeline / bench ----------------------------------------------------------


def cmd_pipeline(args):
    params = _params(args)
    inputs = _ints(args.inputs) if args.inputs else None
    res = run_pipeline(
        params,
        inputs=inputs,
        seed=args.seed,
        backend=args.backend,
        board=_board(args),
        tamper=args.tamper,
        security=args.security,
    )
    if args.transcript:
        Path(args.transcript).write_text(res.transcript_json() + "\n")
    print(f"{'ACCEPT' if res.accept else 'REJECT'}: {res.reason}")
    print(f"med {res.med}")
    t = res.timings
    print(f"t_w {t.get('witness', 0):.3f}s t_p {t.get('prove', 0):.3f}s t_v {t.get('verify', 0):.3f}s")
    return EXIT_OK if res.accept else EXIT_FAIL


def cmd_bench(args):
    rows = []
    for m in _ints(args.m_values):
        params = ProtocolParams(
            range=parse_range(args.range), m=m, epsilon=args.epsilon, method=args.method, l=args.l
        )
        for rep in range(args.repeats):
            seed = args.seed + rep
            cs = synthesize_main(params)
            res = run_pipeline(params, seed=seed, backend=args.backend)
            t = res.timings
            rows.append(
                {
                    "accept": res.accept,
                    "constraints": len(cs.constraints),
                    "m": m,
                    "n": params.n,
                    "seed": seed,
                    "t_p": round(t["prove"], 6),
                    "t_v": round(t["verify"], 6),
                    "t_w": round(t["witness"], 6),
                }
            )
            r = rows[-1]
            print(f"m={m:<4} n={params.n:<4} constraints={r['constraints']:<8} "
                  f"t_w={r['t_w']:.3f}s t_p={r['t_p']:.3f}s t_v={r['t_v']:.3f}s")
    if args.out:
        paths = report.out_paths(args.out, "bench")
        report.write_json(paths["json"], rows)
        report.write_csv(paths["csv"], rows)
        report.plot_bench(rows, paths["png"])
        print(f"wrote {paths['json']}, {paths['csv']}, {paths['png']}")
    return EXIT_OK if all(r["accept"] for r in rows) else EXIT_FAIL


# -- audits --------------------------------------------------------------------


def _emit(args, stem, doc, rows=None, plot=None):
    if args.json:
        print(json.dumps(doc, sort_keys=True, indent=2))
    if args.out:
        paths = report.out_paths(args.out, stem)
        report.write_json(paths["json"], doc)
        if rows:
            report.write_csv(paths["csv"], rows)
        if plot is not None:
            plot(paths["png"])


def cmd_audit(args):
    kind = args.kind
    if kind == "dp":
        params = require_valid(_params(args))
        rep = audit.dp_ratio_audit(params, budget=args.budget)
        doc = rep.to_dict()
        _print_summary(
            doc, ["method", "epsilon", "pairs_checked", "max_ratio", "additive_gap", "divergence_ok", "pass"]
        )
        print(f"{'max_ratio ~':<14} {float(rep.max_ratio):.6g}")
        print(f"{'ratio_bound':<14} ~{float(rep.ratio_bound[1]):.6g}")
        print(f"{'delta_bound':<14} ~{float(rep.delta_bound[1]):.6g}")
        pair = rep.worst_pair or rep.gap_pair
        plot = (lambda path: report.plot_distribution_pair(params, pair[0], pair[1], path)) if pair else None
        _emit(args, "audit_dp", doc, plot=plot)
        return EXIT_OK if rep.passed else EXIT_FAIL
    if kind == "utility":
        params = require_valid(_params(args))
        db = _ints(args.db)
        thresholds = _ints(args.thresholds) if args.thresholds else None
        rep = audit.utility_bound_audit(params, db, thresholds)
        doc = rep.to_dict()
        print(f"OPT {rep.opt}  |R| {rep.n_range}  |R_OPT| {rep.n_opt}")
        for r in rep.rows:
            bound = "zero" if r["bound"] is None else f"~{float(r['bound'][1]):.6g}"
            print(f"c={r['c']:<5} Pr~{float(r['probability']):<12.6g} bound={bound}  {'ok' if r['pass'] else 'FAIL'}")
        print(f"pass {rep.passed}")
        _emit(args, "audit_utility", doc, doc["rows"], lambda path: report.plot_utility(rep, path))
        return EXIT_OK if rep.passed else EXIT_FAIL
    if kind == "table":
        table = build_table(args.epsilon, args.l, args.method)
        rep = audit.table_error_audit(table, args.epsilon)
        doc = rep.to_dict()
        _print_summary(doc, ["epsilon", "l", "max_error_approx", "max_error_index", "ratio_ok", "recurrence_ok", "pass"])
        print(f"{'bound':<16} ~{float(rep.bound[0]):.6g}")
        eps = Epsilon.parse(args.epsilon)
        _emit(args, "audit_table", doc, plot=lambda path: report.plot_table_error(table, eps, path))
        return EXIT_OK if rep.passed else EXIT_FAIL
    if kind == "rho":
        if args.p > 10**8:
            raise ParameterError("rho audit enumerates all residues; pass a small prime with --p")
        if args.s is not None:
            s_values = [args.s]
        else:
            s_values = list(range(1, min(args.p, args.s_max) + 1))
        reps = [audit.rho_distance(args.p, s) for s in s_values]
        rows = [r.to_dict() for r in reps]
        for r in rows:
            print(f"p={r['p']} s={r['s']} delta={r['closed_form']} brute={r['brute_force']} "
                  f"bound={r['bound']} {'ok' if r['pass'] else 'FAIL'}")
        ok = all(r.passed for r in reps)
        plot = (lambda path: report.plot_rho(rows, path)) if len(rows) > 1 else None
        _emit(args, "audit_rho", rows if len(rows) > 1 else rows[0], rows, plot)
        return EXIT_OK if ok else EXIT_FAIL
    if kind == "sampling":
        params = require_valid(_params(args))
        db = _ints(args.db)
        rep = audit.sampling_chisquare(db, params, args.trials, args.significance, args.seed)
        doc = rep.to_dict()
        _print_summary(doc, ["trials", "statistic", "dof", "p_value", "significance", "pass"])
        rows = [
            {"element": v, "observed": c, "expected": fraction_str(e)}
            for v, c, e in zip(params.range, rep.counts, rep.expected)
        ]
        _emit(args, "audit_sampling", doc, rows, lambda path: report.plot_sampling(rep, params, path))
        return EXIT_OK if rep.passed else EXIT_FAIL
    raise ParameterError(f"unknown audit kind {kind!r}")


def cmd_hash_vectors(args):
    inst = hash_instance(args.hash_id, args.p)
    vectors = []
    for x, r in ((0, 0), (1, 0), (0, 1), (42, 7), (args.p - 1, args.p - 1)):
        vectors.append({"c": str(commit(x, r, inst).value), "r": str(r), "x": str(x)})
    print(json.dumps({"hash": inst.descriptor(), "vectors": vectors}, sort_keys=True, indent=2))
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="verexp", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("params", help="write and validate a params file")
    _add_param_flags(p)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("table", help="build the integer lookup table")
    p.add_argument("--epsilon", required=True)
    p.add_argument("--l", type=int, default=DEFAULT_L)
    p.add_argument("--method", choices=("set0", "setk"), default="set0")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_table)

    p = sub.add_parser("setup", help="synthesize the circuit and write proving/verifying keys")
    _add_param_flags(p)
    p.add_argument("--out", required=True, help="directory for params.json, pk.bin, vk.bin, pp.json")
    p.add_argument("--backend", default="mock")
    p.add_argument("--security", type=int, default=128)
    p.add_argument("--seed", help="derive the mock key secret deterministically")
    p.add_argument("--write-cs", action="store_true", help="also write cs.bin")
    p.set_defaults(fn=cmd_setup)

    p = sub.add_parser("commit", help="data provider: post a commitment and write the opening")
    _add_param_flags(p)
    _add_board_flag(p)
    p.add_argument("--owner", required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--opening", required=True, help="where to write the private opening")
    p.add_argument("--seed", help="seed for the commitment randomness")
    p.set_defaults(fn=cmd_commit)

    p = sub.add_parser("prove", help="analyst: compute med, prove and post the result")
    _add_param_flags(p)
    _add_board_flag(p)
    p.add_argument("--pk", required=True)
    p.add_argument("--openings", nargs="+", required=True, help="opening files or directories")
    p.add_argument("--owner", default="analyst")
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("verify", help="verifier: check the posted proof against the board")
    _add_param_flags(p)
    _add_board_flag(p)
    p.add_argument("--vk", required=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("board-serve", help="serve an append-only board over TCP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--file", help="persist entries to this JSON-lines file")
    p.add_argument("--address-file", help="write the bound tcp:HOST:PORT here once listening")
    p.set_defaults(fn=cmd_board_serve)

    p = sub.add_parser("pipeline", help="run all roles end to end")
    _add_param_flags(p)
    _add_board_flag(p)
    p.add_argument("--inputs", help="comma list of provider inputs (default: seeded random)")
    p.add_argument("--seed", type=int)
    p.add_argument("--tamper", choices=TAMPER_CLASSES)
    p.add_argument("--backend", default="mock", help=f"one of {available_backends()} or an installed plugin")
    p.add_argument("--security", type=int, default=128)
    p.add_argument("--transcript", help="write the deterministic transcript JSON here")
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("bench", help="time witness, prove and verify across m")
    p.add_argument("--m-values", default="10,50,100")
    p.add_argument("--range", default="0:99")
    p.add_argument("--epsilon", default="0.5")
    p.add_argument("--method", choices=("set0", "setk"), default="set0")
    p.add_argument("--l", type=int, default=DEFAULT_L)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", default="mock")
    p.add_argument("--out", help="directory for bench.json, bench.csv, bench.png")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("audit", help="exact privacy, utility, table, rho and sampling checks")
    p.add_argument("kind", choices=("dp", "utility", "table", "rho", "sampling"))
    _add_param_flags(p)
    p.add_argument("--db", help="comma list database (utility, sampling)")
    p.add_argument("--thresholds", help="comma list of c values (utility; default all)")
    p.add_argument("--budget", type=int, default=audit.DEFAULT_BUDGET, help="max adjacent pairs (dp)")
    p.add_argument("--s", type=int, help="total weight (rho)")
    p.add_argument("--s-max", type=int, default=64, help="sweep s = 1..min(p, s-max) without --s (rho)")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--significance", type=float, default=1e-3)
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true", help="print the full JSON report")
    p.add_argument("--out", help="directory for JSON, CSV and PNG outputs")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("hash-vectors", help="print commitment test vectors")
    p.add_argument("--hash-id", default="poseidon-x5-t3-f8-p57-v1")
    p.add_argument("--p", type=int, default=DEFAULT_P)
    p.set_defaults(fn=cmd_hash_vectors)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except VerExpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS if isinstance(exc, (ValueError, KeyError)) else EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
