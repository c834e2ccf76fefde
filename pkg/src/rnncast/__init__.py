"""Recurrent time-series forecasting toolkit.

Subpackage map:

- ``numkit``   : float64 matrix kernel + SplitMix64 RNG
- ``cells``    : LSTM/GRU forward passes, hand-derived BPTT, dense head
- ``training`` : MSE loss, Adam, the training loop, checkpoint files
- ``dataprep`` : normalization, windowing, synthetic generators, CSV I/O
- ``evalkit``  : persistence baseline, RMSE, directional accuracy, reports
- ``cli``      : experiment orchestration (generate/train/evaluate/plot/run)
"""

__version__ = "0.1.0"

from . import cells, cli, dataprep, evalkit, numkit, training

__all__ = ["cells", "cli", "dataprep", "evalkit", "numkit", "training", "__version__"]
