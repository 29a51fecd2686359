#!/usr/bin/env python3
"""Calibration ensemble for the lam = 1 window experiments (criteria 6 and 7)."""
import math
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from bssk.model import ModelParams
from bssk.sampler import stream_for, sample_loe, eigenvalues
from bssk.free_energy import f_finite_high
from bssk.edge_stats import clt_statistic, compute_T_statistics

n, m, b, seed, N = 4000, 4000, -1.0, 67001, 2000
params = ModelParams.critical_window(n, m, b, seed)
sig = math.log(math.log(n)) ** 3
rows = np.empty((N, 5))
t0 = time.time()
for k in range(N):
    spec = eigenvalues(sample_loe(params, stream_for(seed, k)), driver="sterf")
    st = compute_T_statistics(spec, params)
    rep = f_finite_high(spec, params)
    rows[k] = [st.T1n, st.T2n, clt_statistic(spec, params, sig), rep.statistic, rep.diagnostics["T0n"]]
    if k % 200 == 0:
        print(k, "%.0fs" % (time.time() - t0), flush=True)
np.savez("/tmp/calib67.npz", rows=rows)
print("done", time.time() - t0)
