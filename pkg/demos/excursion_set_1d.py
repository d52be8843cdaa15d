"""Estimate an excursion set on a 1-d grid by uncertainty reduction.

A draw from a Matern-5/2 process plays the role of an expensive
black-box function.  Starting from three evaluations, each step selects
the grid point whose observation is expected to shrink the integrated
Bernoulli variance of the excursion indicators the most, evaluates
there, and updates the posterior.  The script prints the shrinking
uncertainty and classification error, and saves a figure with the
posterior, the selected points, and the excursion probability.

Run:  python demos/excursion_set_1d.py
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from gridsur import (
    FunctionalSpec,
    KernelSpec,
    StrategyConfig,
    convergence_report,
    excursion_prob,
    regular_grid,
    run_sur,
)

THRESHOLD = 0.8

domain = regular_grid((0.0, 1.0), 201)
kernel = KernelSpec("matern52", variance=1.0, lengthscale=0.12)
config = StrategyConfig(
    spec=FunctionalSpec("ibv", threshold=THRESHOLD),
    n_init=3,
    n_steps=25,
    seed=7,
)

trace = run_sur(domain, kernel, config)

print(f"{'step':>4} {'H (IBV)':>12} {'class. error':>14} {'selected':>9}")
for r in trace.records:
    sel = "-" if r.selected_index is None else f"x={domain.points[r.selected_index, 0]:.3f}"
    print(f"{r.step:>4} {r.h:>12.3e} {r.metrics['l2_plugin']:>14.4f} {sel:>9}")

audit = convergence_report(trace.measures)
print(f"\nvariance monotonicity violations: {audit.variance_violations}")

# -- figure: truth, posterior, excursion probability ----------------------

x = domain.points[:, 0]
final = trace.measures[-1]
sd = final.sd()
p_exc = excursion_prob(final.mean, sd, THRESHOLD)

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
ax1.plot(x, trace.truth, "k", lw=0.8, label="truth")
ax1.plot(x, final.mean, "C0", label="posterior mean")
ax1.fill_between(x, final.mean - 2 * sd, final.mean + 2 * sd, alpha=0.25, color="C0")
ax1.axhline(THRESHOLD, color="C3", lw=0.8, ls="--", label="threshold")
selected = [r.selected_index for r in trace.records if r.selected_index is not None]
ax1.plot(x[selected], trace.truth[selected], "C1o", ms=4, label="design points")
ax1.legend(loc="best", fontsize=8)
ax1.set_ylabel("f(x)")

ax2.plot(x, p_exc, "C0")
ax2.plot(x, (trace.truth >= THRESHOLD).astype(float), "k", lw=0.8)
ax2.set_ylabel("P(f >= threshold)")
ax2.set_xlabel("x")

fig.tight_layout()
fig.savefig("excursion_set_1d.png", dpi=120)
print("saved excursion_set_1d.png")
