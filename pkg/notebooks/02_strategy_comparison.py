# %% [markdown]
# # Strategy comparison
#
# Median rank gain of every strategy over a few seeded worlds. Each seed
# draws its own leaderboard, split and rigging run. Omni-BT refits the full
# leaderboard for each candidate vote, so it dominates the runtime.

# %%
import numpy as np

from arena_rigging import SimulationConfig, run_simulation

STRATEGIES = ["t_tie", "t_abstain", "t_random", "t_normal", "omni_on", "omni_bt"]
SEEDS = range(3)


def world(seed, **kw):
    return SimulationConfig(target="m14", n_votes=2000, checkpoint_interval=1000,
                            synthetic_seed=seed, split_seed=seed, seed=seed, **kw)


# %%
gains = {}
for s in STRATEGIES:
    gains[s] = [run_simulation(world(seed, strategy=s)).rank_increase for seed in SEEDS]
    print(f"{s:<10} {gains[s]}  median {np.median(gains[s]):+.1f}")

# %% [markdown]
# With the target never sampled (beta = 0) only the omniscient strategies
# can move it, through votes between other models.

# %%
for s in ["t_tie", "omni_on"]:
    g = [run_simulation(world(seed, strategy=s, sampling="target_scaled",
                              sampling_beta=0.0)).rank_increase for seed in SEEDS]
    print(f"{s:<10} beta=0  {g}")

# %% [markdown]
# An imperfect de-anonymizer: the adversary names each model correctly
# with probability 0.8.

# %%
for p in (1.0, 0.8, 0.5):
    mode = "perfect" if p == 1.0 else "noisy_multiclass"
    g = [run_simulation(world(seed, strategy="omni_on", identity="anonymous" if p < 1 else
                              "real_name", oracle_mode=mode, oracle_param=p)).rank_increase
         for seed in SEEDS]
    print(f"oracle acc {p:.1f}  {g}")
