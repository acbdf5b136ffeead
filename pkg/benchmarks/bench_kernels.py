"""Compare the numba and pure-numpy kernel paths.

    python benchmarks/bench_kernels.py --dims 4,8,16,32 --repeat 50

Also runs ``qfim bench`` end to end under both settings of
``QFIM_DISABLE_NUMBA`` when ``--e2e`` is given.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from qfim import _kernels
from qfim.ensembles import random_density, random_derivatives


def kernel_inputs(dim, n_params, rng):
    rho = random_density(dim, rng)
    d = random_derivatives(dim, n_params, rng).stack()
    u = rho.eigenvectors
    dk = np.ascontiguousarray(np.einsum("ak,iab,bl->ikl", u.conj(), d, u))
    return {
        "kron_sum": (np.ascontiguousarray(rho.matrix),),
        "spectral_qfim": (dk, rho.eigenvalues, dim * np.finfo(float).eps),
        "spectral_sld": (dk, rho.eigenvalues, dim * np.finfo(float).eps),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="4,8,16,32")
    ap.add_argument("--params", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--e2e", action="store_true", help="also time `qfim bench` with numba on and off")
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':15s} {'dim':>4s} {'numpy [us]':>12s} {'numba [us]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for dim in (int(x) for x in args.dims.split(",")):
        inputs = kernel_inputs(dim, args.params, rng)
        for name, impls in _kernels.IMPLEMENTATIONS.items():
            a = inputs[name]
            ref = impls["numpy"](*a)
            got = impls["numba"](*a)  # first call compiles
            t_np = min(timeit.repeat(lambda: impls["numpy"](*a), number=1, repeat=args.repeat))
            t_nb = min(timeit.repeat(lambda: impls["numba"](*a), number=1, repeat=args.repeat))
            diff = float(np.max(np.abs(ref - got)))
            print(f"{name:15s} {dim:4d} {t_np * 1e6:12.1f} {t_nb * 1e6:12.1f} {t_np / t_nb:8.2f} {diff:10.2e}")

    if args.e2e:
        for flag in ("0", "1"):
            env = dict(os.environ, QFIM_DISABLE_NUMBA=flag)
            print(f"\n# qfim bench with QFIM_DISABLE_NUMBA={flag}", flush=True)
            subprocess.run(
                [sys.executable, "-m", "qfim", "bench", "--dims", args.dims, "--trials", "3",
                 "--methods", "vectorized,eigen,eigen-matrix", "--seed", str(args.seed)],
                env=env, check=True,
            )


if __name__ == "__main__":
    main()
