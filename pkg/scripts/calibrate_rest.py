#!/usr/bin/env python3
"""Scale checks for criteria 1, 2, 9, 11, 12 ahead of freezing the acceptance suite."""
import math
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from bssk.model import ModelParams, constants_for
from bssk.sampler import (
    FAST_DRIVER, count_at_least, eigenvalues, eigenvector_top, sample_loe, stream_for,
    top_eigenvalues,
)
from bssk.mp import MPLaw
from bssk.edge_stats import EmpiricalDistribution, edge_rescale, load_tw1_reference
from bssk.events import counting_moments
from bssk.recurrence import build_recurrence, minor_top_eigenvalue, pearson, truncated_z
from bssk.saddle import SaddleFunctions
from bssk.quadrature import kn_quadrature

t0 = time.time()

# criterion 1: MP law TV at (2000, 4000), 50 samples, 100 bins
params = ModelParams.critical_window(2000, 4000, 0.0, 10)
law = MPLaw(0.5)
hist = np.zeros(100)
for k in range(50):
    spec = eigenvalues(sample_loe(params, stream_for(10, k)), driver=FAST_DRIVER)
    inside = (spec.mu >= law.d_minus) & (spec.mu <= law.d_plus)
    h, _ = np.histogram(spec.mu[inside], bins=100, range=(law.d_minus, law.d_plus))
    hist += h
edges = np.linspace(law.d_minus, law.d_plus, 101)
cell = law.top_mass(edges[:-1]) - law.top_mass(edges[1:])
tv = 0.5 * np.sum(np.abs(hist / (2000 * 50) - cell))
print("crit1 tv =", tv, " (%.0fs)" % (time.time() - t0), flush=True)

# criterion 2: TW edge at (1000, 1000), 5000 samples
params = ModelParams.critical_window(1000, 1000, 0.0, 20)
vals = np.empty(5000)
for k in range(5000):
    s = sample_loe(params, stream_for(20, k))
    vals[k] = edge_rescale(float(top_eigenvalues(s)[0]), 1000, 1.0)
ref = load_tw1_reference()
ks = EmpiricalDistribution.from_values(vals).ks(ref.cdf_at)
print("crit2 ks =", ks, " (%.0fs)" % (time.time() - t0), flush=True)

# criterion 9: counting at (2000, 4000), s = 20, 2000 samples
params = ModelParams.critical_window(2000, 4000, 0.0, 30)
s_val = 20.0
threshold = law.d_plus - s_val * 2000 ** (-2.0 / 3.0)
counts = np.array([
    count_at_least(sample_loe(params, stream_for(30, k)), threshold) for k in range(2000)
], dtype=float)
mean_ref, var_ref = counting_moments(0.5, s_val)
print("crit9 mean=%.3f ref=%.3f  var=%.3f ref=%.3f (%.0fs)" % (
    counts.mean(), mean_ref, counts.var(ddof=1), var_ref, time.time() - t0), flush=True)

# criterion 11: minor + eigvec mass + independence at n=2000, lam=1
params = ModelParams.critical_window(2000, 2000, 1.0, 40)
diffs, masses = [], []
for k in range(200):
    s = sample_loe(params, stream_for(40, k))
    spec_mu1 = float(top_eigenvalues(s)[0])
    mt, _ = minor_top_eigenvalue(s, 1000)
    diffs.append(abs(spec_mu1 - mt))
    if k < 50:
        _, v = eigenvector_top(s)
        masses.append(np.max(np.abs(v[:1000])) / np.linalg.norm(v))
print("crit11 median|mu1-mu~1| = %.2e  frac mass<1e-8 = %.2f (%.0fs)" % (
    np.median(diffs), np.mean([m < 1e-8 for m in masses]), time.time() - t0), flush=True)

z_stat, y_stat = np.empty(500), np.empty(500)
norm = math.sqrt(2.0 / 3.0 * math.log(2000))
sig = math.log(math.log(2000)) ** 3
for k in range(500):
    s = sample_loe(params, stream_for(40, k))
    st = build_recurrence(s, sig)
    z_val, _, _ = truncated_z(st, 500)
    z_stat[k] = z_val / norm
    _, y_stat[k] = minor_top_eigenvalue(s, 500)
print("crit11 pearson =", pearson(z_stat, y_stat), " (%.0fs)" % (time.time() - t0), flush=True)

# criterion 12: K_n scaling band
for n in (200, 400, 800):
    params = ModelParams.critical_window(n, n, 1.0, 50)
    c = constants_for(params)
    vals = []
    for k in range(60):
        spec = eigenvalues(sample_loe(params, stream_for(50, k)), driver=FAST_DRIVER)
        fns = SaddleFunctions.for_spectrum(spec, c.alpha_n, c.B_n)
        kn = kn_quadrature(fns, params).real
        vals.append(n ** (1.0 / 3.0) * math.sqrt(1.0 * math.sqrt(math.log(n))) * kn)
    print("crit12 n=%d: median=%.3f min=%.3f max=%.3f (%.0fs)" % (
        n, np.median(vals), np.min(vals), np.max(vals), time.time() - t0), flush=True)

# b = 0 trend
for n in (200, 400, 800):
    params = ModelParams.critical_window(n, n, 0.0, 51)
    c = constants_for(params)
    vals = []
    for k in range(60):
        spec = eigenvalues(sample_loe(params, stream_for(51, k)), driver=FAST_DRIVER)
        fns = SaddleFunctions.for_spectrum(spec, c.alpha_n, c.B_n)
        vals.append(n ** (1.0 / 3.0) * kn_quadrature(fns, params).real)
    print("crit12(b=0) n=%d: median=%.3f (%.0fs)" % (n, np.median(vals), time.time() - t0), flush=True)
print("done", time.time() - t0)
