"""Resonance-free regions and the cutoff-resolvent growth probe.

The finite-order regions |Im lambda| < ((N-1) log|lambda| + log C)/T'_N
deepen with N and approach the asymptotic region
Im lambda > -log|lambda| / (2 d_max) for the two-flux configuration.
For a single centered flux the cutoff resolvent norm is computable per
angular mode; its growth along rays below the real axis is fitted.  Run:

    python3 demos/region_and_growth.py
"""

import math

import numpy as np

from abscatter.audit import (
    RegionSpec,
    cutoff_resolvent_norm,
    region_bound,
    resolvent_growth_probe,
)
from abscatter.geometry import SolenoidConfig
from abscatter.specfn import LogLambda

pair = SolenoidConfig([[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5], 1.05, 2.0)

print("region depth at |lambda| = 30 as the order N grows (d_max = 2):")
for n in (2, 5, 10, 50, 200):
    spec = RegionSpec.from_config(N=n, C_delta=1.0, config=pair)
    depth = region_bound(spec, 30.0)
    print(f"  N = {n:4d}: depth {depth:.4f}  "
          f"(slope {(spec.N - 1) / spec.T_prime:.4f}, limit 0.25)")
print(f"  asymptotic depth log(30)/4 = {math.log(30.0) / 4.0:.4f}")

single = SolenoidConfig([[0.0, 0.0]], [0.3], 1.05, 2.0)
print("\ncutoff resolvent norm ||chi R(lambda) chi|| for one flux 0.3:")
for z in (10 + 1j, 10 + 0.2j, 20 + 0.2j, 20 - 0.2j):
    lam = LogLambda.from_complex(complex(z))
    nrm = cutoff_resolvent_norm(single, lam)
    print(f"  lambda = {z}: {nrm:.4e}")

print("\ngrowth fit along Im lambda = -a log(Re lambda):")
fit = resolvent_growth_probe(single, a=0.1, j=0,
                             re_range=(20.0, 120.0), samples=8)
print(f"  a = 0.1: fitted power {fit.power:+.3f}, T_fit = {fit.t_fit:.3f}, "
      f"R^2 = {fit.r_squared:.4f}")
