"""Slice a synthetic daily-activity series into supervised windows.

Walks through the data-prep path end to end: generate, normalize into
[0, 1], cut sliding windows for the train and test regions, and undo the
normalization.  Every number printed here can be checked by hand.
"""

import numpy as np

from rnncast.dataprep import (PartitionSpec, denormalize, gen_activities,
                              make_windows, normalize)
from rnncast.numkit import Rng

rng = Rng(2024)
series = gen_activities(rng, n_series=3, length=400, samples_per_day=4)
first = series[0]
print(f"generated {len(series)} series; '{first.name}' has {len(first)} samples")
print(f"  head: {np.round(first.values[:8], 2)}")

# Min-max normalization records the bounds on the Series so forecasts can be
# mapped back to raw units later.
norm = normalize(first)
print(f"normalized to [0, 1]; recorded bounds ({norm.raw_min:.3f}, {norm.raw_max:.3f})")
print(f"  min {norm.values.min():.3f}, max {norm.values.max():.3f}")

# A window of 28 samples (one week at 4/day) predicting the next 2 samples,
# with the final 80 samples held out for testing.
spec = PartitionSpec(window=28, horizon=2, test_len=80)
train = make_windows(norm, spec, "train")
test = make_windows(norm, spec, "test")

# Counts follow directly from the series length:
#   train rows: (400 - 80) - 28 - 2 + 1 = 291
#   test rows:   80 - 2 + 1             = 79
print(f"train windows: {len(train)}, test windows: {len(test)}")
print(f"  inputs {train.inputs.shape}, targets {train.targets.shape}")

# Row i starts at source index train.origins[i]: the window is the 28 samples
# from there, and the target is the 2 samples that follow.
i = 5
start = train.origins[i]
assert np.array_equal(train.inputs[i], norm.values[start:start + 28])
assert np.array_equal(train.targets[i], norm.values[start + 28:start + 30])
print(f"row {i} spans source indices [{start}, {start + 28}) exactly")

# No test target ever appears as a train target: the last train target index
# stays below the test region.
last_train_target = train.origins[-1] + 28 + 2 - 1
print(f"last train target index {last_train_target} < test region start {400 - 80}")

# Round trip back to raw units.
bounds = (norm.raw_min, norm.raw_max)
restored = denormalize(norm.values, bounds)
print(f"denormalize round trip max error: {np.abs(restored - first.values).max():.2e}")
