#!/usr/bin/env python3
"""Calibration ensemble for the low-temperature discrimination (criterion 8)."""
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from bssk.model import ModelParams
from bssk.sampler import stream_for, sample_loe, eigenvalues
from bssk.free_energy import f_ghat_route, f_limit, fluctuation_statistic
from bssk.edge_stats import compute_T_statistics

n, m, b, seed, N = 4000, 8000, 1.0, 68001, 2000
params = ModelParams.critical_window(n, m, b, seed)
flim = f_limit(params.beta, 0.5, "2B")
rows = np.empty((N, 4))
t0 = time.time()
for k in range(N):
    spec = eigenvalues(sample_loe(params, stream_for(seed, k)), driver="sterf")
    st = compute_T_statistics(spec, params)
    f_asym, _ = f_ghat_route(spec, params, sn_mode="asymptotic")
    f_kn, _ = f_ghat_route(spec, params, sn_mode="kn")
    rows[k] = [
        st.T1n,
        st.T2n,
        fluctuation_statistic(f_asym, flim, n, m),
        fluctuation_statistic(f_kn, flim, n, m),
    ]
    if k % 100 == 0:
        print(k, "%.0fs" % (time.time() - t0), flush=True)
np.savez("/tmp/calib8.npz", rows=rows)
print("done", time.time() - t0)
