"""Open the box on the recurrent cells: run one tiny LSTM step by hand and
check a backpropagated gradient against finite differences.

The point of this demo is that nothing is hidden behind a framework -- the
whole forward pass is a handful of sigmoid/tanh lines you can re-do on paper.
"""

import numpy as np

from rnncast.cells import backward, gru_forward, init_model, lstm_forward
from rnncast.numkit import Rng

rng = Rng(7)
state = init_model("lstm", units=3, window=4, horizon=1, rng=rng)
cell = state.cell

window = np.array([0.5, -0.2, 0.8, 0.1])
trace = lstm_forward(cell, window)
print("library hidden state after 4 steps:", np.round(trace.final_hidden, 6))

# Same thing by hand, straight from the gate equations.  h and c start at 0.
def sig(a):
    return 1.0 / (1.0 + np.exp(-a))

h = np.zeros(3)
c = np.zeros(3)
for x in window:
    i = sig(x * cell.w_i + cell.u_i @ h + cell.b_i)
    f = sig(x * cell.w_f + cell.u_f @ h + cell.b_f)
    o = sig(x * cell.w_o + cell.u_o @ h + cell.b_o)
    g = np.tanh(x * cell.w_g + cell.u_g @ h + cell.b_g)
    c = f * c + i * g
    h = o * np.tanh(c)
print("hand-rolled hidden state:          ", np.round(h, 6))
print("max difference:", np.abs(h - trace.final_hidden).max())

# The GRU keeps a single state vector; its update gate z blends old and new.
gru = init_model("gru", units=3, window=4, horizon=1, rng=Rng(7))
print("\nGRU final hidden:", np.round(gru_forward(gru.cell, window).final_hidden, 6))

# Gradient check: nudge one recurrent weight of the forget gate up and down,
# and compare the slope of the loss with what backpropagation reported.
target = np.array([0.3])
state.zero_grads()
loss = backward(state, window, target)
analytic = state.cell_grads.u_f[1, 2]

eps = 1e-6
keep = state.cell.u_f[1, 2]
state.cell.u_f[1, 2] = keep + eps
hi = float(state.forecast(window[None, :])[0, 0] - target[0]) ** 2
state.cell.u_f[1, 2] = keep - eps
lo = float(state.forecast(window[None, :])[0, 0] - target[0]) ** 2
state.cell.u_f[1, 2] = keep

numeric = (hi - lo) / (2 * eps)
print(f"\nloss {loss:.6f}")
print(f"dL/d u_f[1,2]: backprop {analytic:+.8f}, finite difference {numeric:+.8f}")
print(f"relative error {abs(analytic - numeric) / max(abs(numeric), 1e-12):.2e}")
