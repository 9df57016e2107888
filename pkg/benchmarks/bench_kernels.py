"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times STEP tokenization of the synthetic building and batch point-in-polygon
tests, checks that both backends return identical results, and prints the
speedup per kernel.
"""
import argparse
import math
import random
import sys
import timeit
from array import array

from bim2brick import _pykernels
from bim2brick.synthetic import make_fixture

try:
    from bim2brick import _ckernels
except ImportError:
    _ckernels = None


def polygon(n: int, seed: int = 1) -> array:
    rnd = random.Random(seed)
    out = array("d")
    for i in range(n):
        a = 2 * math.pi * i / n
        r = rnd.uniform(5.0, 10.0)
        out.extend((r * math.cos(a), r * math.sin(a)))
    return out


def probes(n: int, seed: int = 2) -> array:
    rnd = random.Random(seed)
    return array("d", (rnd.uniform(-11.0, 11.0) for _ in range(2 * n)))


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation`")
        return 1

    text = make_fixture().ifc_text
    ring, pts = polygon(64), probes(20_000)
    cases = [
        (f"tokenize ({len(text) // 1024} KiB STEP)", "tokenize", (text,)),
        ("points_in_polygon (20k probes, 64-gon)", "points_in_polygon", (pts, ring)),
    ]
    print(f"{'kernel':42s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, name, call_args in cases:
        py_fn, c_fn = getattr(_pykernels, name), getattr(_ckernels, name)
        if list(py_fn(*call_args)) != list(c_fn(*call_args)):
            print(f"{label}: backends disagree")
            return 1
        t_py = best_of(lambda: py_fn(*call_args), args.repeat)
        t_c = best_of(lambda: c_fn(*call_args), args.repeat)
        print(f"{label:42s} {t_py * 1e3:10.2f} {t_c * 1e3:10.2f} {t_py / t_c:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
