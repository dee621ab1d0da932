# %% [markdown]
# # Monte Carlo accuracy tables
#
# Product values are drawn uniformly on [-1, 1]; each trial has its own seed
# derived from (master seed, block, M, N, trial).  The reduced trial count
# keeps this script quick; the CLI `table` command runs the full protocol.

# %%
from aqfp_sc.experiments import ExperimentConfig, cells_csv, run_accuracy_table, table_csv

for kind, sizes in (("feature_extraction", [9, 25]), ("avg_pool", [4, 16])):
    cfg = ExperimentConfig(kind=kind, sizes=sizes, lengths=[128, 512, 2048], trials=200, seed=1)
    print(kind)
    print(table_csv(run_accuracy_table(cfg)))

# %% [markdown]
# Categorization reports the largest float-domain margin among trials where
# the stream ranking picks a different winner, plus the top-1 agreement rate.

# %%
cfg = ExperimentConfig(kind="categorization", sizes=[100], lengths=[1024], trials=100, seed=1)
print(cells_csv(run_accuracy_table(cfg)))
