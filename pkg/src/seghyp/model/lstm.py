"""A single-direction LSTM over one sequence, with an explicit backward pass.

Weights are stored as one matrix ``W`` of shape ``(D + H, 4H)`` applied to
``[x_t, h_{t-1}]`` plus a bias ``b`` of shape ``(4H,)``; the gate blocks are
input, forget, output and candidate, in that order.  Sequences are processed
one step at a time on 1-D vectors, so a recurrence over a given input prefix
always produces bit-identical states.
"""

import numpy as np


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_lstm(rng, input_dim, hidden, forget_bias=1.0):
    bound = 1.0 / np.sqrt(hidden)
    W = rng.uniform(-bound, bound, (input_dim + hidden, 4 * hidden))
    b = rng.uniform(-bound, bound, 4 * hidden)
    b[hidden:2 * hidden] += forget_bias
    return W, b


class StepCounter:
    def __init__(self):
        self.steps = 0


def lstm_forward(W, b, xs, counter=None):
    """Run over ``xs`` of shape (T, D) from a zero state; returns (T, H) states and a cache."""
    T = len(xs)
    H = W.shape[1] // 4
    h = np.zeros(H)
    c = np.zeros(H)
    hs = np.empty((T, H))
    steps = []
    for t in range(T):
        z = np.concatenate((xs[t], h))
        a = z @ W + b
        i = sigmoid(a[:H])
        f = sigmoid(a[H:2 * H])
        o = sigmoid(a[2 * H:3 * H])
        g = np.tanh(a[3 * H:])
        c_prev = c
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[t] = h
        steps.append((z, i, f, o, g, c_prev, tc))
    if counter is not None:
        counter.steps += T
    return hs, steps


def lstm_backward(W, steps, dhs):
    """Backpropagate ``dhs`` (T, H), the loss gradient on every output state.

    Returns ``(dxs, dW, db)``.
    """
    T = len(steps)
    H = W.shape[1] // 4
    D = W.shape[0] - H
    dW = np.zeros_like(W)
    db = np.zeros(4 * H)
    dxs = np.empty((T, D))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    da = np.empty(4 * H)
    for t in range(T - 1, -1, -1):
        z, i, f, o, g, c_prev, tc = steps[t]
        dh = dhs[t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        da[:H] = dc * g * i * (1.0 - i)
        da[H:2 * H] = dc * c_prev * f * (1.0 - f)
        da[2 * H:3 * H] = do * o * (1.0 - o)
        da[3 * H:] = dc * i * (1.0 - g * g)
        dW += np.outer(z, da)
        db += da
        dz = W @ da
        dxs[t] = dz[:D]
        dh_next = dz[D:]
        dc_next = dc * f
    return dxs, dW, db
