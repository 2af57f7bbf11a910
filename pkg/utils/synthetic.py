import math

import numpy as np

from sov6v.elliptic import lattice_distance


def generic_inhomogeneities(N, eta, omega=1j, seed=7, margin=0.05, max_tries=10_000):
    """
    Draw N inhomogeneities with a seeded generator, rejecting draws where
    xi_a - xi_b + eps*eta (eps in -1, 0, 1) comes within `margin` of the
    lattice pi Z + pi omega Z.
    Same (N, eta, omega, seed) always gives the same tuple.
    """
    rng = np.random.default_rng(seed)
    periods = (complex(math.pi), math.pi * complex(omega))
    eta = complex(eta)
    out = []
    tries = 0
    while len(out) < N:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"could not place {N} generic inhomogeneities in {max_tries} draws")
        cand = complex(rng.uniform(-0.6, 0.6), rng.uniform(-0.15, 0.15) * complex(omega).imag)
        ok = all(
            lattice_distance(cand - prev + eps * eta, periods) > margin
            and lattice_distance(prev - cand + eps * eta, periods) > margin
            for prev in out
            for eps in (-1, 0, 1)
        )
        if ok:
            out.append(cand)
    return tuple(out)
