"""Timing comparison of the compiled and pure-numpy denoiser kernels.

Runs the fused denoise pass on synthetic matched-filter batches and one
full AMP recursion per backend, printing per-call times and the speedup.
Usage: python3 benchmarks/bench_backends.py [--n 2000] [--m 4] [--reps 50]
"""

import argparse
import time

import numpy as np

from ampsi import _kernels_py, backend
from ampsi.amp import run_amp
from ampsi.denoiser import DenoiserParams, si_log_prior
from ampsi.system import MarkovActivityModel, SystemConfig, generate_scenario

try:
    from ampsi import _kernels_c
except ImportError:
    _kernels_c = None


def time_call(fn, reps):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench_kernel(kernel, R, logc, params, reps):
    out = np.empty_like(R)
    m_lr = R.shape[1] * params.log_ratio
    return time_call(lambda: kernel.denoise_pass(R, logc, params.gain, params.xi, m_lr, out),
                     reps)


def bench_run_amp(kernel, scenario, model, reps):
    saved = backend.denoise_pass
    backend.denoise_pass = kernel.denoise_pass
    try:
        return time_call(
            lambda: run_amp(scenario.received[0], scenario.pilot, model,
                            scenario.noise_var, max_iters=25, conv_tol=0.0),
            reps)
    finally:
        backend.denoise_pass = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="devices per frame")
    ap.add_argument("--m", type=int, default=4, help="antennas")
    ap.add_argument("--reps", type=int, default=50)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    model = MarkovActivityModel(p01=1 / 16, p11=3 / 4)
    params = DenoiserParams(beta=1.0, state_var=0.5, activity=model)
    R = np.ascontiguousarray(rng.standard_normal((args.n, args.m))
                             + 1j * rng.standard_normal((args.n, args.m)))
    logc = si_log_prior(model, rng.lognormal(0, 1, args.n), rng.lognormal(0, 1, args.n))

    cfg = SystemConfig(N=args.n, L=max(args.n // 5, 2), M=args.m, T=1, activity=model,
                       noise_var=0.1, seed=0)
    scenario = generate_scenario(cfg)

    print(f"active backend: {backend.BACKEND}")
    print(f"denoise pass, N={args.n}, M={args.m}, {args.reps} reps:")
    t_py = bench_kernel(_kernels_py, R, logc, params, args.reps)
    print(f"  python {1e6 * t_py:9.1f} us/call")
    if _kernels_c is None:
        print("  cython    (not built)")
    else:
        t_c = bench_kernel(_kernels_c, R, logc, params, args.reps)
        print(f"  cython {1e6 * t_c:9.1f} us/call   speedup x{t_py / t_c:.1f}")

    amp_reps = max(args.reps // 10, 3)
    print(f"full AMP run, 25 iterations, L={cfg.L}, {amp_reps} reps:")
    t_py = bench_run_amp(_kernels_py, scenario, model, amp_reps)
    print(f"  python {1e3 * t_py:9.2f} ms/run")
    if _kernels_c is not None:
        t_c = bench_run_amp(_kernels_c, scenario, model, amp_reps)
        print(f"  cython {1e3 * t_c:9.2f} ms/run    speedup x{t_py / t_c:.2f}")


if __name__ == "__main__":
    main()
