"""Command-line harness: generate instances, solve pencils, run experiments.

Exit codes for ``solve``: 0 converged, 2 iteration limit, 3 breakdown,
1 usage or input errors.  All randomness flows through ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .driver import (
    QdaConfig,
    QdaResult,
    RunStatus,
    anti_basis,
    run_qda,
    run_sdasf1_on,
    run_sdasf2_on,
    sfq_basis,
)
from .eig import CayleyParams, cayley, nres1, nres2
from .experiments import bse_like, critical_rate, eta_sweep, pivot_table
from .fileio import (
    history_to_json,
    read_matrix,
    write_history_csv,
    write_manifest,
    write_matrix,
    write_permutation,
)
from .guard import GuardConfig, default_tau
from .problems import CriticalSpec, gen_bse_like, gen_critical, gen_random_split
from .reduction import Idea, Variant
from .sfq import GeneralPencil
from .doubling import StopMode

_EXIT_FOR_STATUS = {
    RunStatus.CONVERGED: 0,
    RunStatus.MAX_ITER: 2,
    RunStatus.BREAKDOWN: 3,
}

_IDEAS = {"1": Idea.IDEA1, "2": Idea.IDEA2, "3": Idea.IDEA3}
_VARIANTS = {"afirst": Variant.A_FIRST, "bfirst": Variant.B_FIRST}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdoubling",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a test instance")
    gen.add_argument("--family", required=True, choices=["split", "bse", "critical"])
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--m", type=int, default=20)
    gen.add_argument("--n", type=int, default=25)
    gen.add_argument("--alpha", type=float, default=8.0)
    gen.add_argument("--eta", type=float, default=1.0)
    gen.add_argument("--gap-scale", type=float, default=2.0)
    gen.add_argument("--coupling-scale", type=float, default=1.0)
    gen.add_argument("--m-prime", type=int, default=3)
    gen.add_argument("--n-prime", type=int, default=3)
    gen.add_argument("--blocks", default="2:1+0j",
                     help="semicolon-separated size:omega pairs, e.g. '2:1+0j;1:1j'")
    gen.add_argument("--rho-stable", type=float, default=0.3)
    gen.add_argument("--rho-anti", type=float, default=0.3)

    solve = sub.add_parser("solve", help="compute the split eigenspace bases")
    solve.add_argument("--matrix-a", required=True)
    solve.add_argument("--matrix-b", required=True)
    solve.add_argument("--m", type=int, required=True)
    solve.add_argument("--n", type=int, required=True)
    solve.add_argument("--out", required=True)
    solve.add_argument("--algorithm", default="qda", choices=["qda", "sdasf1", "sdasf2"])
    solve.add_argument("--gamma", type=float, default=None,
                       help="negative Cayley parameter; omit if already disk-split")
    solve.add_argument("--rtol", type=float, default=1e-14)
    solve.add_argument("--stop", default="kahan", choices=["plain", "kahan"])
    solve.add_argument("--tau", type=float, default=None)
    solve.add_argument("--idea", default="3", choices=sorted(_IDEAS))
    solve.add_argument("--variant", default="afirst", choices=sorted(_VARIANTS))
    solve.add_argument("--max-iter", type=int, default=50)

    exp = sub.add_parser("experiment", help="run a canned comparison")
    exp.add_argument("--name", required=True,
                     choices=["eta_sweep", "bse_like", "critical_rate"])
    exp.add_argument("--out", required=True)
    exp.add_argument("--seeds", default="1,2,3", help="comma-separated seeds")
    exp.add_argument("--m", type=int, default=50)
    exp.add_argument("--n", type=int, default=60)
    exp.add_argument("--bse-n", type=int, default=64)
    exp.add_argument("--gamma", type=float, default=-1.0)

    res = sub.add_parser("residual", help="normalized residuals of a basis")
    res.add_argument("--matrix-a", required=True)
    res.add_argument("--matrix-b", default=None)
    res.add_argument("--basis", required=True)
    res.add_argument("--x-norm", type=float, default=None)
    return parser


def _config_from_args(args, m: int, n: int) -> QdaConfig:
    guard = None
    if args.tau is not None:
        guard = GuardConfig(tau=args.tau, max_actions_per_iteration=m + n)
    return QdaConfig(
        rtol=args.rtol, max_iter=args.max_iter,
        stop_mode=StopMode.PLAIN if args.stop == "plain" else StopMode.KAHAN,
        guard=guard, init_idea=_IDEAS[args.idea], init_variant=_VARIANTS[args.variant],
    )


def _cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params: dict
    if args.family == "split":
        inst = gen_random_split(args.m, args.n, args.alpha, args.eta, args.seed)
        params = {"m": args.m, "n": args.n, "alpha": args.alpha, "eta": args.eta}
    elif args.family == "bse":
        inst = gen_bse_like(args.n, args.gap_scale, args.seed,
                            coupling_scale=args.coupling_scale)
        params = {"n": args.n, "gapScale": args.gap_scale,
                  "couplingScale": args.coupling_scale}
    else:
        blocks = []
        for item in args.blocks.split(";"):
            size, omega = item.split(":")
            blocks.append((int(size), complex(omega)))
        spec = CriticalSpec(m_prime=args.m_prime, n_prime=args.n_prime,
                            blocks=tuple(blocks), rho_stable=args.rho_stable,
                            rho_anti=args.rho_anti)
        inst = gen_critical(spec, args.seed)
        params = {"mPrime": args.m_prime, "nPrime": args.n_prime,
                  "blocks": args.blocks, "rhoStable": args.rho_stable,
                  "rhoAnti": args.rho_anti}
    write_matrix(out / "A.json", inst.pencil.A)
    write_matrix(out / "B.json", inst.pencil.B)
    truth_files = {}
    if inst.true_basis_stable is not None:
        write_matrix(out / "Z.json", inst.true_basis_stable)
        write_matrix(out / "M.json", inst.true_m)
        truth_files = {"stableBasis": "Z.json", "stableBlock": "M.json"}
    manifest = {
        "command": "gen", "family": args.family, "seed": args.seed,
        "parameters": params, "m": inst.pencil.m, "n": inst.pencil.n,
        "toolVersion": __version__,
        "files": {"A": "A.json", "B": "B.json", **truth_files},
        "spectra": {
            "stable": _complex_list(inst.stable_eigs),
            "antiStable": _complex_list(inst.anti_stable_eigs),
            "circle": _complex_list(inst.circle_eigs),
        },
    }
    write_manifest(out / "manifest.json", manifest)
    print(f"wrote instance to {out}")
    return 0


def _complex_list(values) -> list[list[float]] | None:
    if values is None:
        return None
    return [[float(v.real), float(v.imag)] for v in np.asarray(values)]


def _cmd_solve(args) -> int:
    try:
        a = read_matrix(args.matrix_a)
        b = read_matrix(args.matrix_b)
        g = GeneralPencil(A=a, B=b, m=args.m, n=args.n)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.algorithm == "sdasf2" and args.m != args.n:
        print("error: sdasf2 requires m == n", file=sys.stderr)
        return 1
    if args.gamma is not None:
        if args.gamma >= 0:
            print("error: gamma must be negative", file=sys.stderr)
            return 1
        g = cayley(g, CayleyParams(args.gamma))
    cfg = _config_from_args(args, args.m, args.n)
    runner = {"qda": run_qda, "sdasf1": run_sdasf1_on, "sdasf2": run_sdasf2_on}[args.algorithm]
    t0 = time.perf_counter()
    result: QdaResult = runner(g, cfg)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "command": "solve", "algorithm": args.algorithm,
        "status": result.status.value, "iterations": result.iterations,
        "message": result.message, "cpuSeconds": elapsed,
        "toolVersion": __version__,
        "parameters": {
            "m": args.m, "n": args.n, "gamma": args.gamma, "rtol": args.rtol,
            "stop": args.stop, "tau": args.tau, "idea": args.idea,
            "variant": args.variant, "maxIter": args.max_iter,
        },
    }
    if result.final is not None:
        write_permutation(out / "Q1.json", result.q1)
        write_permutation(out / "Q2.json", result.q2)
        write_matrix(out / "X.json", result.phi)
        write_matrix(out / "Y.json", result.psi)
        write_history_csv(out / "iterations.csv", result.history)
        summary["normXFro"] = float(np.linalg.norm(result.phi))
        summary["maxAbsX"] = float(np.abs(result.phi).max())
        summary["tau"] = args.tau if args.tau is not None else default_tau(args.m, args.n)
        eye = np.eye(a.shape[0], dtype=complex)
        if np.array_equal(b, eye):
            basis = sfq_basis(result.final)
            try:
                summary["nres1"] = nres1(a, basis, x_norm=float(np.linalg.norm(result.phi)))
                summary["nres2"] = nres2(a, basis)
            except Exception as exc:  # metrics are advisory in the summary
                summary["residualError"] = str(exc)
        write_matrix(out / "stable_basis.json", sfq_basis(result.final))
        write_matrix(out / "anti_stable_basis.json", anti_basis(result.final))
    write_manifest(out / "summary.json", summary)
    return _EXIT_FOR_STATUS[result.status]


def _cmd_experiment(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = tuple(int(s) for s in args.seeds.split(",") if s)
    if args.name == "critical_rate":
        tables = critical_rate(seeds=seeds, out_dir=out)
        write_manifest(out / "critical_rate.json", {"runs": tables, "seeds": list(seeds)})
        with open(out / "critical_rate.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "i", "errX", "errRatio", "wMinPivot"])
            for table in tables:
                for row in table["perIteration"]:
                    writer.writerow([table["seed"], row["i"], repr(row["errX"]),
                                     repr(row["errRatio"]), repr(row["wMinPivot"])])
        print(f"wrote critical-rate tables to {out}")
        return 0
    if args.name == "eta_sweep":
        rows = eta_sweep(m=args.m, n=args.n, seeds=seeds, gamma=args.gamma, out_dir=out)
    else:
        rows = bse_like(n=args.bse_n, seeds=seeds, gamma=args.gamma, out_dir=out)
    with open(out / "runs.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].as_dict()))
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_dict())
    table = pivot_table(rows)
    with open(out / "table.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(table)
    write_manifest(out / "runs.json", {"rows": [r.as_dict() for r in rows],
                                       "seeds": list(seeds)})
    print(f"wrote {len(rows)} runs to {out}")
    return 0


def _cmd_residual(args) -> int:
    try:
        a = read_matrix(args.matrix_a)
        z = read_matrix(args.basis)
        if args.matrix_b is not None:
            b = read_matrix(args.matrix_b)
            if not np.array_equal(b, np.eye(b.shape[0], dtype=complex)):
                print("error: residual metrics need B = I", file=sys.stderr)
                return 1
        out = {"nres1": nres1(a, z, x_norm=args.x_norm), "nres2": nres2(a, z)}
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(out))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "gen": _cmd_gen, "solve": _cmd_solve,
        "experiment": _cmd_experiment, "residual": _cmd_residual,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
