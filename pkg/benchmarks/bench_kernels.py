"""Compare the compiled kernels with the NumPy fallback on evaluation-sized inputs.

    python benchmarks/bench_kernels.py --repeat 5
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from predsafe import _kernels_py

try:
    from predsafe import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _inputs(seed: int = 0):
    """Shapes of one default frame: 165 beelines x 10 steps, about 50 cells per footprint."""
    from predsafe.beelines import DistributionConfig, generate_beelines
    from predsafe.occupancy import GridSpec

    spec = GridSpec()
    fps = generate_beelines(DistributionConfig(), 15, 11, 8.0, (4.5, 2.0), spec).footprints
    rng = np.random.default_rng(seed)
    values = rng.uniform(size=int(np.prod(spec.shape)))

    n = 20_000
    ang = rng.uniform(0, 2 * np.pi, n)
    local = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float) * [2.25, 1.0]
    c, s = np.cos(ang)[:, None], np.sin(ang)[:, None]
    subjects = np.stack([c * local[:, 0] - s * local[:, 1], s * local[:, 0] + c * local[:, 1]], -1)
    subjects += rng.uniform(0, 1, (n, 1, 2))
    cell = np.array([[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5]], float)
    clips = cell[None] + rng.uniform(-1, 1.5, (400, 1, 2))
    idx = rng.integers(0, 400, n)
    return fps, values, (subjects, clips, idx)


def _bench(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def _frame_time(pure: bool, repeat: int) -> float:
    code = (
        "import timeit, numpy as np\n"
        "from predsafe.harness.synthetic import generate_synthetic_corpus\n"
        "from predsafe.harness.evaluate import evaluate_frame\n"
        "from predsafe.harness.config import EvalConfig\n"
        "sc = generate_synthetic_corpus(1, 1)[0]; cfg = EvalConfig()\n"
        "evaluate_frame(sc, 0.0, cfg)\n"
        f"print(min(timeit.repeat(lambda: evaluate_frame(sc, 0.0, cfg), number=1, repeat={repeat})))\n"
    )
    env = dict(os.environ, PREDSAFE_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    return float(out.stdout.strip())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    fps, values, clip_args = _inputs()
    rows = []
    py = _bench(lambda: _kernels_py.segment_products(fps.ptr, fps.cells, fps.frac, values), args.repeat)
    cc = _bench(lambda: _compiled.segment_products(fps.ptr, fps.cells, fps.frac, values), args.repeat) if _compiled else None
    rows.append((f"segment_products ({fps.ptr.size - 1} footprints, {fps.cells.size} cells)", py, cc))
    py = _bench(lambda: _kernels_py.clip_area(*clip_args), args.repeat)
    cc = _bench(lambda: _compiled.clip_area(*clip_args), args.repeat) if _compiled else None
    rows.append((f"clip_area ({clip_args[0].shape[0]} box/cell pairs)", py, cc))
    rows.append(("evaluate_frame (default grid, synthetic scene)", _frame_time(True, args.repeat),
                 _frame_time(False, args.repeat) if _compiled else None))

    print(f"{'kernel':58s} {'numpy [ms]':>11s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for name, py, cc in rows:
        if cc is None:
            print(f"{name:58s} {py * 1e3:11.2f} {'n/a':>14s} {'':>8s}")
        else:
            print(f"{name:58s} {py * 1e3:11.2f} {cc * 1e3:14.2f} {py / cc:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
