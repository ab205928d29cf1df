"""Time the compiled and pure-Python set-search kernels on the same problems.

    python benchmarks/bench_kernel.py --n 20 --k-range 2..20 --repeat 3
"""

import argparse
import json
import random
import statistics
import time

from rocc.cli import parse_k_range
from rocc.retrieval import form_query, make_sentences
from rocc.selector import available_backends, count_sets, prepare, search_problem
from rocc.text import build_stats


def make_problem(n, seed, vocab_size=300, q_len=14, a_len=4):
    rng = random.Random(seed)
    vocab = [f"v{i}" for i in range(vocab_size)]
    texts = [" ".join(rng.choice(vocab) for _ in range(rng.randint(6, 18))) for _ in range(n)]
    sents = make_sentences(texts)
    query = form_query(" ".join(rng.sample(vocab, q_len)), " ".join(rng.sample(vocab, a_len)))
    return prepare(query, sents, build_stats(sents))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--k-range", default="2..20")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--problems", type=int, default=3, help="distinct random problems")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--top-m", type=int, default=1)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)

    ks = [k for k in parse_k_range(args.k_range) if k <= args.n]
    problems = [make_problem(args.n, args.seed + i) for i in range(args.problems)]
    n_sets = count_sets(args.n, ks)
    rows, outputs = [], {}
    for backend in available_backends():
        times = []
        for p_i, prob in enumerate(problems):
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                out = search_problem(prob, ks, top_m=args.top_m, backend=backend)
                times.append(time.perf_counter() - t0)
            outputs.setdefault(p_i, {})[backend] = out
        med = statistics.median(times)
        rows.append({"backend": backend, "median_s": med, "min_s": min(times), "sets": n_sets,
                     "sets_per_s": n_sets / med})
    agree = all(len({repr(v) for v in per.values()}) == 1 for per in outputs.values())
    if len(rows) == 2:
        fast, slow = sorted(rows, key=lambda r: r["median_s"])
        speedup = slow["median_s"] / fast["median_s"]
    else:
        speedup = None

    if args.json:
        print(json.dumps({"n": args.n, "k_values": ks, "rows": rows, "identical_results": agree,
                          "speedup": speedup}, indent=2))
        return
    print(f"n={args.n} k={ks[0]}..{ks[-1]} sets/problem={n_sets:,} problems={args.problems} repeat={args.repeat}")
    print(f"{'backend':<10}{'median s':>12}{'min s':>12}{'sets/s':>16}")
    for r in rows:
        print(f"{r['backend']:<10}{r['median_s']:>12.4f}{r['min_s']:>12.4f}{r['sets_per_s']:>16,.0f}")
    if speedup:
        print(f"speedup: {speedup:.1f}x")
    print(f"identical results across backends: {agree}")


if __name__ == "__main__":
    main()
