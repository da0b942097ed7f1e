"""Compare the compiled hashing kernel against the pure-Python reference.

Verifies the two produce bit-identical matrices on the benchmark corpus,
then times each over several (sentence count, dim) settings and prints the
speedup. Run directly:

    python benchmarks/bench_hashing.py [--repeats 5]
"""

import argparse
import random
import statistics
import sys
import time

import numpy as np

from picospan import hashing

try:
    from picospan import _hashkernel
except ImportError:
    _hashkernel = None

WORDS = (
    "patients adults children randomized placebo controlled trial outcome "
    "baseline week treatment dose mg daily intervention therapy primary "
    "secondary mean change significant reduction group arm double blind"
).split()


def make_sentences(n, rng):
    return [
        [rng.choice(WORDS) for _ in range(rng.randint(5, 30))] for _ in range(n)
    ]


def run(kernel, sentences, dim, seed):
    out = []
    for tokens in sentences:
        out.append(kernel(tokens, dim, seed, True))
    return out


def time_kernel(kernel, sentences, dim, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        run(kernel, sentences, dim, seed=0)
        samples.append(time.perf_counter() - t0)
    return min(samples), statistics.mean(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _hashkernel is None:
        print("compiled kernel not available; build the extension first")
        return 1

    rng = random.Random(0)
    sentences = make_sentences(400, rng)

    # correctness gate before timing anything
    for tokens in sentences[:50]:
        ref = hashing.hash_tokens(tokens, 256, 0, True)
        ext = _hashkernel.hash_tokens(tokens, 256, 0, True)
        assert np.array_equal(ref, ext), "kernel outputs diverged"
    print("bit-identical outputs over 50 benchmark sentences: ok\n")

    header = f"{'sentences':>9} {'dim':>5} {'python':>10} {'cython':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n_sent, dim in ((100, 64), (100, 256), (400, 256), (400, 1024)):
        subset = sentences[:n_sent]
        py_best, _ = time_kernel(hashing.hash_tokens, subset, dim, args.repeats)
        cy_best, _ = time_kernel(_hashkernel.hash_tokens, subset, dim, args.repeats)
        print(
            f"{n_sent:>9} {dim:>5} {py_best * 1e3:>8.1f}ms {cy_best * 1e3:>8.1f}ms "
            f"{py_best / cy_best:>7.1f}x"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
