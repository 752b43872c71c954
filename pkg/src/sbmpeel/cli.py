"""Command-line interface.

Subcommands: generate (sample an instance to files), recover (peel clusters
from a graph file), noisy (oracle-budget clustering run), experiment (run a
JSON suite), verify (reference cross-checks). Exit codes: 0 success, 1 clean
no-cluster-found, 2 invalid input.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from ._kernels import active_backend
from .graph import (
    GroundTruth,
    SbmSpec,
    load_graph,
    sample_sbm,
    save_graph,
    save_labels,
)
from .harness import load_specs, ml_bruteforce_partition, parse_sizes, run_suite
from .oracle import FaultyOracle, NoisyConfig, noisy_clustering
from .recovery import make_config, recursive_cluster
from .spectral import singular_values_of_expectation, top_left_singular_basis


def _cap_threads(threads):
    if threads is None:
        threads = os.environ.get("SBMPEEL_THREADS")
        if threads is None:
            return
        threads = int(threads)
    threads = max(1, threads)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(threads))
    try:
        import numba

        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def _cmd_generate(args):
    spec = SbmSpec(tuple(parse_sizes(args.sizes)), args.p, args.q, seed=args.seed)
    graph, truth = sample_sbm(spec)
    save_graph(graph, args.out_graph)
    save_labels(truth, args.out_labels)
    print(f"wrote {args.out_graph} (n={graph.n}, m={graph.edge_count()})")
    print(f"wrote {args.out_labels} (k={truth.k})")
    return 0


def _cmd_recover(args):
    graph = load_graph(args.graph)
    overrides = {}
    if args.k_prime_override is not None:
        overrides["k_prime_override"] = args.k_prime_override
    if args.max_peel_rounds is not None:
        overrides["max_peel_rounds"] = args.max_peel_rounds
    cfg = make_config(args.profile, seed=args.seed, **overrides)
    trace = []
    found = recursive_cluster(graph, args.p, args.q, cfg, trace=trace)
    payload = {
        "seed": args.seed,
        "profile": args.profile,
        "backend": active_backend(),
        "n": graph.n,
        "recovered_sizes": [int(len(c)) for c in found],
        "peels": [
            {k: v for k, v in rec.items() if k != "candidate"} for rec in trace
        ],
    }
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            json.dump(payload, fh, indent=2, default=str)
    if args.clusters_out:
        with open(args.clusters_out, "w") as fh:
            for c in found:
                fh.write(" ".join(str(v) for v in c.tolist()) + "\n")
    for i, c in enumerate(found):
        print(f"cluster {i}: size {len(c)}")
    if not found:
        print("size gate rejected: no cluster found", file=sys.stderr)
        return 1
    return 0


def _cmd_noisy(args):
    sizes = parse_sizes(args.sizes)
    if sum(sizes) != args.n:
        raise ValueError(f"sizes sum to {sum(sizes)}, --n says {args.n}")
    sizes_arr = np.asarray(sizes, dtype=np.int64)
    labels = np.repeat(np.arange(len(sizes_arr)), sizes_arr)
    truth = GroundTruth(labels=labels, sizes=sizes_arr)
    oracle = FaultyOracle(truth, args.delta, seed=args.seed)
    cfg = NoisyConfig(
        s=args.s,
        c_oracle=args.c_oracle,
        recovery_cfg=make_config(args.profile, seed=args.seed),
    )
    clusters, stats = noisy_clustering(oracle, args.n, args.delta, cfg)
    for i, c in enumerate(clusters):
        print(f"cluster {i}: size {len(c)}")
    half_pairs = args.n * args.n // 2
    sub = "yes" if stats["distinct_queries"] < half_pairs else "no"
    print(json.dumps(stats))
    print(f"distinct_queries {stats['distinct_queries']} < {half_pairs}: {sub}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(
                {"stats": stats, "clusters": [c.tolist() for c in clusters]},
                fh,
                indent=2,
            )
    return 0 if clusters else 1


def _cmd_experiment(args):
    specs = load_specs(args.spec)
    progress = None
    if args.progress:

        def progress(name, seed, record):
            status = "ok" if record.get("passed") else "fail"
            print(f"[{name}] seed {seed}: {status}", file=sys.stderr)

    reports, summary = run_suite(specs, out_dir=args.out_dir, progress=progress)
    print(summary)
    return 0


def _verify_svd(n_matrices, rng):
    worst = 0.0
    checked = 0
    for _ in range(n_matrices):
        nr = int(rng.integers(8, 61))
        nc = int(rng.integers(8, 41))
        k = int(rng.integers(1, min(nr, nc)))
        mat = (rng.random((nr, nc)) < rng.uniform(0.2, 0.8)).astype(float)
        ref_u, ref_s, _ = np.linalg.svd(mat, full_matrices=False)
        if k < len(ref_s) and ref_s[k - 1] - ref_s[k] <= 1e-3:
            continue
        checked += 1
        basis = top_left_singular_basis(
            mat, k, tol=1e-12, seed=int(rng.integers(2**63)), max_iters=3000
        )
        resid = ref_u[:, :k] - basis.basis @ (basis.basis.T @ ref_u[:, :k])
        worst = max(worst, float(np.linalg.svd(resid, compute_uv=False)[0]))
    return worst, checked


def _verify_expectation_bound(n_configs, rng):
    violations = 0
    for _ in range(n_configs):
        k = int(rng.integers(1, 7))
        a = rng.integers(0, 42, size=k)
        b = rng.integers(0, 42, size=k)
        if a.sum() == 0 or b.sum() == 0:
            continue
        q = float(rng.uniform(0.0, 0.6))
        p = float(rng.uniform(q + 0.05, 1.0))
        sizes = tuple(sorted((a + b).tolist(), reverse=True))
        if sum(sizes) == 0:
            continue
        spec = SbmSpec(tuple(max(s, 1) for s in sizes), p, q)
        svals = singular_values_of_expectation(spec, a, b)
        n_total = int(a.sum() + b.sum())
        for t in range(2, len(svals) + 1):
            bound = (p - q) * n_total / t
            if svals[t - 1] > bound + 1e-9 * max(1.0, bound):
                violations += 1
    return violations


def _verify_bruteforce(n_seeds, rng):
    hits = 0
    for seed in range(n_seeds):
        spec = SbmSpec((5, 5), 0.95, 0.05, seed=int(rng.integers(2**63)))
        graph, truth = sample_sbm(spec)
        labels, _ = ml_bruteforce_partition(graph, 0.95, 0.05)
        canon_truth = np.unique(truth.labels, return_inverse=True)[1]
        canon_got = np.unique(labels, return_inverse=True)[1]
        first = {}
        norm = []
        for lab in canon_got.tolist():
            if lab not in first:
                first[lab] = len(first)
            norm.append(first[lab])
        first_t = {}
        norm_t = []
        for lab in canon_truth.tolist():
            if lab not in first_t:
                first_t[lab] = len(first_t)
            norm_t.append(first_t[lab])
        if norm == norm_t:
            hits += 1
    return hits


def _cmd_verify(args):
    rng = np.random.default_rng(args.seed)
    n_mat = 20 if args.quick else 60
    n_cfg = 200 if args.quick else 1000
    n_bf = 5 if args.quick else 20
    ok = True

    worst, checked = _verify_svd(n_mat, rng)
    svd_ok = worst < 1e-6
    ok &= svd_ok
    print(
        f"svd-fidelity: max principal-angle sine {worst:.2e} over "
        f"{checked} gapped matrices: {'PASS' if svd_ok else 'FAIL'}"
    )

    violations = _verify_expectation_bound(n_cfg, rng)
    bound_ok = violations == 0
    ok &= bound_ok
    print(
        f"expectation-bound: {violations} violations in {n_cfg} configs: "
        f"{'PASS' if bound_ok else 'FAIL'}"
    )

    hits = _verify_bruteforce(n_bf, rng)
    need = max(1, int(0.9 * n_bf))
    bf_ok = hits >= need
    ok &= bf_ok
    print(
        f"bruteforce-agreement: {hits}/{n_bf} planted partitions matched "
        f"(need {need}): {'PASS' if bf_ok else 'FAIL'}"
    )
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sbmpeel",
        description="Exact large-cluster recovery in planted-partition graphs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample an instance to files")
    g.add_argument("--sizes", required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--q", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-graph", required=True)
    g.add_argument("--out-labels", required=True)

    r = sub.add_parser("recover", help="peel clusters from a graph file")
    r.add_argument("--graph", required=True)
    r.add_argument("--p", type=float, required=True)
    r.add_argument("--q", type=float, required=True)
    r.add_argument("--profile", choices=("theory", "empirical"), default="empirical")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--clusters-out")
    r.add_argument("--trace-out")
    r.add_argument("--k-prime-override", type=int)
    r.add_argument("--max-peel-rounds", type=int)
    r.add_argument("--threads", type=int)

    o = sub.add_parser("noisy", help="cluster through a faulty pairwise oracle")
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--delta", type=float, required=True)
    o.add_argument("--s", type=int, required=True)
    o.add_argument("--sizes", required=True)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--profile", choices=("theory", "empirical"), default="empirical")
    o.add_argument("--c-oracle", type=float, default=1.0)
    o.add_argument("--out")
    o.add_argument("--threads", type=int)

    e = sub.add_parser("experiment", help="run a JSON experiment suite")
    e.add_argument("--spec", required=True)
    e.add_argument("--out-dir")
    e.add_argument("--progress", action="store_true")
    e.add_argument("--threads", type=int)

    v = sub.add_parser("verify", help="run reference cross-checks")
    v.add_argument("--quick", action="store_true")
    v.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    _cap_threads(getattr(args, "threads", None))
    handlers = {
        "generate": _cmd_generate,
        "recover": _cmd_recover,
        "noisy": _cmd_noisy,
        "experiment": _cmd_experiment,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError, IndexError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main():
    sys.exit(main())
