"""Dev-only calibration probes; not part of the deliverable."""
import math
import time

import numpy as np

from qspacelab import bohm, entropy_stats, nelson, qmap, qwalk
from qspacelab.grid_wave import (Grid1D, circular_difference, continuity_residual, density,
                                 energy, evolve, flux, make_potential, make_state, wrap)

t0 = time.time()
grid = Grid1D(1.0, 512)
zero = make_potential("zero", grid)

print("== dispersion / norm ==")
psi = make_state("momentum", grid, mode=3)
T, dt = 0.05, 1e-4
out = evolve(psi, zero, dt, int(T / dt))
k = 2 * math.pi * 3
expected = psi.amplitudes * np.exp(-1j * k * k * T / 2)
print("dispersion err", np.max(np.abs(out.amplitudes - expected)))

two = make_state("two-mode", grid, modes=[0, 1], amplitudes=[1 / math.sqrt(2), -1 / math.sqrt(2)])
st = two
for _ in range(10):
    st = evolve(st, zero, 1e-4, 1000)
print("norm drift over 1e4 steps:", abs(st.norm() - 1.0), f"({time.time()-t0:.1f}s)")

print("== packet width ==")
sig0, Tp = 0.05, 5e-3
pk = make_state("gaussian", grid, center=0.5, width=sig0, mode=0)
pk_t = evolve(pk, zero, 1e-4, int(Tp / 1e-4))
rho = density(pk_t)
mean = np.sum(grid.x * rho) * grid.dx
sig_meas = math.sqrt(np.sum((grid.x - mean) ** 2 * rho) * grid.dx)
sig_true = sig0 * math.sqrt(1 + (Tp / (2 * sig0**2)) ** 2)
print("sigma meas/true", sig_meas, sig_true, "rel err", abs(sig_meas / sig_true - 1))

print("== continuity ==")
for dtc in (2e-4, 1e-4, 5e-5):
    a = two
    b = evolve(a, zero, dtc, 1)
    print(" dt", dtc, "resid", continuity_residual(a, b, zero, dtc))
vc = make_potential("cosine", grid, amplitude=5.0, mode=1)
g2 = make_state("gaussian", grid, center=0.5, width=0.12)
for dtc in (2e-4, 1e-4, 5e-5):
    b = evolve(g2, vc, dtc, 1)
    print(" V-cos packet dt", dtc, "resid", continuity_residual(g2, b, vc, dtc))

print("== energy drift (cosine potential) ==")
e0 = energy(g2, vc)
gt = evolve(g2, vc, 1e-4, 5000)
print("rel energy drift", abs(energy(gt, vc) - e0) / abs(e0))

print("== qmap closed form ==")
m2 = qmap.build_qmap(two)
x = 0.25
exact = x - math.sin(2 * math.pi * x) / (2 * math.pi)
print("forward(0.25)", m2.forward(0.25), "exact", exact, "err", abs(m2.forward(0.25) - exact))
print("forward(0.5)", m2.forward(0.5), "err", abs(m2.forward(0.5) - 0.5))
print("inverse round trip err:", end=" ")
xs = np.linspace(0.013, 0.987, 401)
print(np.max(np.abs(m2.inverse(m2.forward(xs)) - xs)))

print("== jacobian residuals (P=512, 1024) ==")
for name, kind, kw in [
    ("uniform", "uniform", {}),
    ("momentum", "momentum", {"mode": 1}),
    ("sin2 two-mode", "two-mode", {"modes": [0, 1], "amplitudes": [1 / math.sqrt(2), -1 / math.sqrt(2)]}),
    ("standing +-1", "two-mode", {"modes": [1, -1], "amplitudes": [1 / math.sqrt(2), 1 / math.sqrt(2)]}),
    ("gauss 0.25", "gaussian", {"center": 0.5, "width": 0.25}),
    ("gauss 0.05", "gaussian", {"center": 0.5, "width": 0.05}),
]:
    res = {}
    for P in (512, 1024):
        g = Grid1D(1.0, P)
        s = make_state(kind, g, **kw)
        res[P] = qmap.jacobian_residual(qmap.build_qmap(s), s)
    ratio = res[512] / res[1024] if res[1024] > 0 else float("inf")
    print(f" {name:16s} P512 {res[512]:.3e}  P1024 {res[1024]:.3e}  ratio {ratio:.3f}")

print(f"== transport_check ({time.time()-t0:.1f}s) ==")
pw = make_state("momentum", grid, mode=1)
print(" plane wave:", qmap.transport_check(pw, zero, 0.3, 0.1, 1e-3, sample_stride=10))
sw = make_state("two-mode", grid, modes=[1, -1], amplitudes=[1 / math.sqrt(2), 1 / math.sqrt(2)])
print(" standing:", qmap.transport_check(sw, zero, 0.1, 0.1, 1e-3, sample_stride=10))
wide = make_state("gaussian", grid, center=0.5, width=0.35, mode=2)
tA = time.time()
print(" wide packet T=0.5 dt=1e-3:", qmap.transport_check(wide, zero, 0.5, 0.5, 1e-3, sample_stride=10), f"{time.time()-tA:.1f}s")
tA = time.time()
print(" wide packet T=0.5 dt=1e-4:", qmap.transport_check(wide, zero, 0.5, 0.5, 1e-4, sample_stride=100), f"{time.time()-tA:.1f}s")
tA = time.time()
g1024 = Grid1D(1.0, 1024)
wide1024 = make_state("gaussian", g1024, center=0.5, width=0.35, mode=2)
print(" wide packet refined P1024 dt=5e-4:", qmap.transport_check(wide1024, make_potential("zero", g1024), 0.5, 0.5, 5e-4, sample_stride=20), f"{time.time()-tA:.1f}s")
tm = make_state("two-mode", grid, modes=[0, 1], amplitudes=[1 / math.sqrt(2), -1 / math.sqrt(2)])
print(" sin2 two-mode T=0.2 dt=1e-3:", qmap.transport_check(tm, zero, 0.5, 0.2, 1e-3, sample_stride=10))
print(" sin2 two-mode T=0.2 dt=5e-4:", qmap.transport_check(tm, zero, 0.5, 0.2, 5e-4, sample_stride=20))

print(f"== bohm examples ({time.time()-t0:.1f}s) ==")
traj = bohm.integrate(pw, zero, 0.3, 0.1, 1e-3)
print(" plane traj end", traj.positions[-1], "expected", wrap(0.3 + 2 * math.pi * 0.1, 1.0),
      "err", abs(circular_difference(traj.positions[-1], 0.3 + 2 * math.pi * 0.1, 1.0)))

print("== zero-noise equivalence ==")
x0s = (np.arange(16) + 0.5) / 16
for name, st2, Tz, dtz in [("plane", pw, 0.1, 1e-3), ("sin2", tm, 0.2, 1e-3), ("wide packet", wide, 0.5, 1e-3)]:
    kern = qwalk.TransitionKernel(kind="zero", d_q=0.0)
    samp = [0.0, Tz / 2, Tz]
    tr = qwalk.evolve_ensemble(x0s, kern, st2, zero, Tz, dtz, samp, seed=7)
    devs = []
    wanted = {int(round(t / dtz)): i for i, t in enumerate(tr.times)}
    for t, xw, xu, _p in bohm.drive(st2, zero, x0s, Tz, dtz):
        k2 = int(round(t / dtz))
        if k2 in wanted:
            devs.append(np.max(np.abs(circular_difference(tr.positions[wanted[k2]], xw, 1.0))))
    print(f" {name}: sup dev {max(devs):.2e}")

print(f"== stationarity KL quick ({time.time()-t0:.1f}s) ==")
kern = qwalk.TransitionKernel(kind="wrapped-gaussian", d_q=0.5)
M = 4000
rng = np.random.default_rng(5)
m0 = qmap.build_qmap(tm)
x0 = np.asarray(m0.position_of(rng.uniform(0, 1, M)))
tr = qwalk.evolve_ensemble(x0, kern, tm, zero, 1.0, 0.01, [0.0, 0.5, 1.0], seed=11)
edges = np.linspace(0, 1, 65)
for i, t in enumerate(tr.times):
    psi_t = evolve(tm, zero, 0.01, int(round(t / 0.01)))
    mt = qmap.build_qmap(psi_t)
    expectedm = np.diff(np.asarray(mt.cumulative(edges)))
    kl = entropy_stats.kl_from_counts(np.histogram(tr.positions[i], bins=edges)[0], expectedm)
    print(f" t={t} KL={kl:.4f} floor3x={3*63/(2*M):.4f}")

print(f"== relaxation quick ({time.time()-t0:.1f}s) ==")
four = make_state("superposition", grid, modes=[0, 1, 2, 3], amplitudes=[0.5, 0.5, 0.5, 0.5])
x0u = rng.uniform(0, 1, M)
tr = qwalk.evolve_ensemble(x0u, kern, four, zero, 1.0, 0.01, [0.0, 0.5, 1.0], seed=13)
cells, cell = 16, 1 / 16
for i, t in enumerate(tr.times):
    psi_t = evolve(four, zero, 0.01, int(round(t / 0.01)))
    counts = np.histogram(tr.positions[i], bins=np.linspace(0, 1, 17))[0]
    rho_g = np.repeat(counts / (M * cell), grid.points // 16)
    H = entropy_stats.coarse_H(rho_g, density(psi_t), cell, grid.dx)
    print(f" t={t} coarse_H={H:.4f}")

print(f"== crossing calibration ({time.time()-t0:.1f}s) ==")
Mx = 1200
Tx = 1.0
x0c = np.asarray(qmap.build_qmap(sw).position_of(rng.uniform(0, 1, Mx)))
band = 2 * grid.dx
for dtx in (1e-4, 5e-5, 2.5e-5):
    tA = time.time()
    params = nelson.NelsonParams(nu=0.5, dt=dtx)
    stride = int(round(1e-4 / dtx))
    _t, ns = nelson.evolve_ensemble(x0c, sw, zero, params, Tx, seed=21, sample_stride=stride, assume_static=True)
    cnt = nelson.count_crossings(ns, 0.25, band, 1.0) + nelson.count_crossings(ns, 0.75, band, 1.0)
    r, se = nelson.crossing_rate(cnt, Tx)
    print(f" nelson dt={dtx:.1e}: total={cnt.sum()} rate={r:.4f}+-{se:.4f}  ({time.time()-tA:.1f}s)")
samp = [kk * 1e-4 for kk in range(int(Tx / 1e-4) + 1)]
for dtx in (1e-4, 5e-5):
    tA = time.time()
    tr = qwalk.evolve_ensemble(x0c, kern, sw, zero, Tx, dtx, samp, seed=31)
    cnt = nelson.count_crossings(tr.positions, 0.25, band, 1.0) + nelson.count_crossings(tr.positions, 0.75, band, 1.0)
    r, se = nelson.crossing_rate(cnt, Tx)
    print(f" qwalk dt={dtx:.1e}: total={cnt.sum()} rate={r:.4f}+-{se:.4f}  ({time.time()-tA:.1f}s)")

print(f"== conditional chi2 ({time.time()-t0:.1f}s) ==")
from dataclasses import replace as drep
for name, st3, x1 in [("identity", make_state("uniform", grid), 0.3), ("sin2", tm, 0.5)]:
    map1 = qmap.build_qmap(st3)
    psi2 = st3
    phi = 0.0
    prev = 1.0 * float(flux(psi2)[0])
    for _ in range(100):
        psi2 = evolve(psi2, zero, 1e-4, 1)
        cur = float(flux(psi2)[0])
        phi += 0.5 * (prev + cur) * 1e-4
        prev = cur
    map2 = drep(qmap.build_qmap(psi2), offset=phi)
    q1 = float(map1.label_of(x1))
    dq = kern.sample(rng, 100000, 0.01, 1.0)
    x2 = np.asarray(map2.position_of(wrap(q1 + dq, 1.0)))
    counts = np.histogram(x2, bins=edges)[0]
    probs = qwalk.conditional_interval_probabilities(map1, map2, x1, kern, 0.01, edges)
    stat, dof, p = entropy_stats.chi_square_gof(counts, probs)
    pred = qwalk.conditional_density_predicted(map1, map2, psi2, x1, kern, 0.01)
    print(f" {name}: chi2={stat:.1f} dof={dof} p={p:.3f} norm defect={abs(np.sum(pred)*grid.dx-1):.2e}")

print("== volume law exact ==")
for Mv in (4, 100, 10000):
    h = entropy_stats.Histogram.regular([Mv // 2, Mv - Mv // 2], 1.0)
    print(f" M={Mv}: ratio={entropy_stats.volume_law_ratio(h):.6f}")

print(f"total {time.time()-t0:.1f}s")
