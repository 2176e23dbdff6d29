#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times the hot per-step ops at typical latent sizes and a full masked
diffusion loop, verifying that both backends agree bit-for-bit on the way.

Usage: python benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from scenefuse import kernels
from scenefuse.adapters.toy import ToyDenoiser
from scenefuse.compositor import UpdateMode, run_masked_diffusion
from scenefuse.rng import RandomSource
from scenefuse.schedule import ScheduleKind, TimestepPlan, build_schedule
from scenefuse.tensors import BinaryMask, LatentTensor, MaskResolution

SIZES = [(4, 64, 64), (4, 96, 96), (4, 128, 128)]


def timeit(fn, repeats):
    fn()  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_op(name, make_call, repeats):
    rows = []
    for shape in SIZES:
        results = {}
        outputs = {}
        for backend in kernels.available_backends():
            kernels.use_backend(backend)
            call = make_call(shape)
            outputs[backend] = call()
            results[backend] = timeit(call, repeats)
        if len(outputs) == 2:
            same = outputs["compiled"].tobytes() == outputs["pure"].tobytes()
            assert same, f"{name} {shape}: backends disagree"
        rows.append((shape, results))
    print(f"\n{name}")
    for shape, results in rows:
        pure = results["pure"]
        line = f"  {shape!s:>14}  pure {pure * 1e6:9.1f} us"
        if "compiled" in results:
            comp = results["compiled"]
            line += f"   compiled {comp * 1e6:9.1f} us   speedup {pure / comp:5.2f}x"
        print(line)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    print(f"available backends: {kernels.available_backends()}")
    if "compiled" not in kernels.available_backends():
        print("note: compiled extension missing; timing the pure backend only")

    rng = RandomSource(0)

    def data(shape):
        a = rng.child(hash(shape) % 1000, 0).draw_gaussian(shape)
        b = rng.child(hash(shape) % 1000, 1).draw_gaussian(shape)
        eps = rng.child(hash(shape) % 1000, 2).draw_gaussian(shape)
        mask = (rng.child(hash(shape) % 1000, 3).draw_gaussian(shape[1:]) > 0
                ).astype(np.uint8)
        return mask, a, b, eps

    bench_op("blend (mask select)",
             lambda s: (lambda m=data(s): lambda: kernels.blend(m[0], m[1], m[2]))(),
             args.repeats)
    bench_op("noise_mix (forward noising)",
             lambda s: (lambda m=data(s): lambda: kernels.noise_mix(m[1], m[3], 0.9, 0.43))(),
             args.repeats)
    bench_op("masked_noise_blend (fused step combine)",
             lambda s: (lambda m=data(s):
                        lambda: kernels.masked_noise_blend(m[0], m[1], m[3], 0.9, 0.43, m[2]))(),
             args.repeats)
    bench_op("ddim_update (sampler step)",
             lambda s: (lambda m=data(s):
                        lambda: kernels.ddim_update(m[1], m[3], 0.7, 0.71, 0.9, 0.43))(),
             args.repeats)

    # end-to-end masked diffusion loop
    schedule = build_schedule(ScheduleKind.SCALED_LINEAR, 0.00085, 0.012, 1000)
    plan = TimestepPlan(train_steps=1000, inference_steps=75, start_index=75)
    shape = (4, 64, 64)
    obj0 = LatentTensor(rng.child(900).draw_gaussian(shape))
    bg = LatentTensor(rng.child(901).draw_gaussian(shape))
    mask = BinaryMask((rng.child(902).draw_gaussian(shape[1:]) > 0).astype(np.uint8),
                      MaskResolution.LATENT)
    den = ToyDenoiser("linear", 0.05)

    print(f"\nrun_masked_diffusion, 75 steps, latent {shape}")
    outs = {}
    for backend in kernels.available_backends():
        kernels.use_backend(backend)

        def loop():
            return run_masked_diffusion(obj0, bg, mask, den, None, schedule, plan,
                                        RandomSource(42), mode=UpdateMode.SCHEDULER)

        outs[backend] = loop().data
        best = timeit(loop, max(3, args.repeats // 20))
        print(f"  {backend:>9}: {best * 1e3:8.2f} ms/run")
    if len(outs) == 2:
        assert outs["compiled"].tobytes() == outs["pure"].tobytes()
        print("  cross-backend outputs: bit-identical")


if __name__ == "__main__":
    main()
