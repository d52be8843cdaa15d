"""Expected-gain profiles of the four criteria on one shared posterior.

After a handful of observations, every grid point is scored by how much
it is expected to reduce each residual-uncertainty measure.  The
excursion criteria concentrate near the threshold crossings, the
optimization criteria near the plausible maximizers; known points score
exactly zero everywhere.

Run:  python demos/lookahead_profiles.py
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gridsur import (
    FunctionalSpec,
    KernelSpec,
    build_prior,
    condition,
    evaluate_candidates,
    gauss_hermite_rule,
    regular_grid,
    sample_path,
    simulate_observation,
)

THRESHOLD = 0.6

domain = regular_grid((0.0, 1.0), 121)
kernel = KernelSpec("matern52", variance=1.0, lengthscale=0.15)
prior = build_prior(domain, 0.0, kernel)
truth = sample_path(prior, seed=3)

design = [8, 45, 80, 112]
observations = [simulate_observation(truth, domain, i, seed=i) for i in design]
posterior = condition(prior, observations)

rule = gauss_hermite_rule(25)
specs = {
    "ibv": FunctionalSpec("ibv", threshold=THRESHOLD),
    "vev": FunctionalSpec("vev", threshold=THRESHOLD),
    "kg": FunctionalSpec("kg", mc_samples=4096),
    "ei": FunctionalSpec("ei", mc_samples=4096),
}

x = domain.points[:, 0]
fig, axes = plt.subplots(5, 1, figsize=(8, 10), sharex=True)

sd = posterior.sd()
axes[0].plot(x, truth, "k", lw=0.8, label="truth")
axes[0].plot(x, posterior.mean, "C0", label="posterior")
axes[0].fill_between(x, posterior.mean - 2 * sd, posterior.mean + 2 * sd, alpha=0.25)
axes[0].axhline(THRESHOLD, color="C3", ls="--", lw=0.8)
axes[0].plot(x[design], truth[design], "C1o", ms=4)
axes[0].legend(fontsize=8)
axes[0].set_ylabel("f(x)")

for ax, (name, spec) in zip(axes[1:], specs.items()):
    values = evaluate_candidates(posterior, domain, spec, range(domain.size), rule, seed=1)
    gains = np.array([v.gain for v in values])
    ax.plot(x, gains, "C0")
    ax.plot(x[design], gains[design], "C1o", ms=4)
    ax.set_ylabel(f"{name} gain")
    print(f"{name}: best candidate x = {x[np.argmax(gains)]:.3f}, gain = {gains.max():.3e}")

axes[-1].set_xlabel("x")
fig.tight_layout()
fig.savefig("lookahead_profiles.png", dpi=120)
print("saved lookahead_profiles.png")
