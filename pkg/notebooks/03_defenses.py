# %% [markdown]
# # Defenses
#
# Duplicate-vote detection, the per-user likelihood test and the win-rate
# filter, each against the strategy it targets.

# %%
import numpy as np

from arena_rigging import SimulationConfig, run_simulation
from arena_rigging.defense import filter_mask
from arena_rigging.harness import load_votes, simulate
from arena_rigging.ratings import fit_counts
from arena_rigging.votes import split_historical

base = SimulationConfig(target="m14", n_votes=5000, checkpoint_interval=1000)

# %% [markdown]
# ## Duplicate detection
#
# T-Abstain repeats the same answer on most battles, but at 20 models the
# target interrupts a run every ten battles or so. Only short thresholds fire.

# %%
for eta in (None, 100, 20):
    r = run_simulation(base.replace(strategy="t_abstain", duplicate_eta=eta))
    print(f"eta={eta}: gain {r.rank_increase:+d}, discarded {r.defense['discarded_duplicate']}")

# %% [markdown]
# ## Likelihood test
#
# Uniformly random voting looks nothing like a normal user; Omni-On mostly
# votes for the stronger model and blends in.

# %%
for s in ("t_random", "omni_on"):
    r = run_simulation(base.replace(strategy=s, likelihood_alpha=0.05, accounts=10))
    print(f"{s}: flagged {len(r.defense['flagged_users'])}/10 accounts, "
          f"gain {r.rank_increase:+d}")

# %% [markdown]
# ## Win-rate filter
#
# Votes where a model the history rates below 1 - tau beats its opponent are
# dropped. Higher tau drops a subset of what lower tau drops.

# %%
report, collected = simulate(base.replace(strategy="omni_on"))
hist, _ = split_historical(load_votes(base), base.split_fraction, base.split_seed)
ratings = fit_counts(hist.counts)
for tau in (0.55, 0.6, 0.7, 0.8, 0.9):
    print(f"tau={tau}: drops {filter_mask(collected, ratings, tau).sum()} of {len(collected)}")

# %%
for tau in (None, 0.7):
    r = run_simulation(base.replace(strategy="omni_on", filter_tau=tau))
    print(f"tau={tau}: gain {r.rank_increase:+d}")
