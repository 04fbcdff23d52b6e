"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--size 256] [--repeat 5]

Each kernel is called once untimed (numba compiles on first call) and then
timed ``--repeat`` times; the best time is reported. Outputs of the two
backends are compared so a speedup never hides a wrong answer.
"""
import argparse
import time

import numpy as np

from polsarinfo.kernels import get_backend
from polsarinfo.synth import default_scene_spec, generate_scene


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size, rng):
    spec = default_scene_spec(seed=1)
    img, _ = generate_scene(spec)
    planes = np.concatenate([img.diag, img.off.real, img.off.imag], axis=-1)
    planes = np.tile(planes, (size // planes.shape[0] + 1, size // planes.shape[1] + 1, 1))[:size, :size]
    span = planes[..., :3].sum(axis=-1)
    chol = np.linalg.cholesky(np.stack([np.eye(3, dtype=complex)] * 5))
    index = rng.integers(0, 5, (size, size))
    X = rng.standard_normal((600, 9))
    r = np.where(X[:, 0] + 0.5 * rng.standard_normal(600) > 0, 1.0, -1.0)
    sv = rng.standard_normal((300, 9))
    coef = rng.standard_normal(300)
    Q = rng.standard_normal((size * 40, 9))
    return {
        "box_sum w=7": lambda k: k.box_sum(planes, 7),
        "directional_lee w=7": lambda k: k.directional_lee(span, planes, 7, 1),
        "scene_draws 4 looks": lambda k: k.scene_draws(3, chol, index, 4),
        "rbf_matrix 600x600": lambda k: k.rbf_matrix(X, X, 1 / 9),
        "smo_solve n=600": lambda k: k.smo_solve(k.rbf_matrix(X, X, 1 / 9), r, 1.0, 1e-3, 10_000_000),
        "decision_values": lambda k: k.decision_values(Q, sv, coef, 1 / 9, 0.1),
    }


def same(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.allclose(x, y, rtol=1e-9, atol=1e-9) for x, y in zip(a, b))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=256, help="raster side in pixels")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    numba_k, numpy_k = get_backend("numba"), get_backend("numpy")
    print(f"{'kernel':<22} {'numpy s':>10} {'numba s':>10} {'speedup':>8}  agree")
    for name, fn in cases(args.size, np.random.default_rng(0)).items():
        t_np = best_time(lambda: fn(numpy_k), args.repeat)
        t_nb = best_time(lambda: fn(numba_k), args.repeat)
        agree = same(fn(numpy_k), fn(numba_k))
        print(f"{name:<22} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x  {agree}")


if __name__ == "__main__":
    main()
