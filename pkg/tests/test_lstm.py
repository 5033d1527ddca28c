import numpy as np

from seghyp.model.lstm import StepCounter, init_lstm, lstm_backward, lstm_forward, sigmoid


def test_sigmoid():
    x = np.linspace(-30, 30, 101)
    np.testing.assert_allclose(sigmoid(x), 1 / (1 + np.exp(-x)), rtol=0, atol=1e-15)


def test_forget_bias(rng):
    W, b = init_lstm(rng, 3, 4)
    assert W.shape == (7, 16) and b.shape == (16,)
    assert np.all(b[4:8] > 0.5)


def test_prefix_states_are_bitwise_stable(rng):
    W, b = init_lstm(rng, 3, 5)
    xs = rng.normal(size=(6, 3))
    full, _ = lstm_forward(W, b, xs)
    for t in range(1, 7):
        part, _ = lstm_forward(W, b, xs[:t])
        assert np.array_equal(part, full[:t])


def test_step_counter(rng):
    W, b = init_lstm(rng, 2, 2)
    counter = StepCounter()
    lstm_forward(W, b, rng.normal(size=(4, 2)), counter)
    lstm_forward(W, b, rng.normal(size=(3, 2)), counter)
    assert counter.steps == 7


def test_gradients_match_finite_differences(rng):
    W, b = init_lstm(rng, 3, 4)
    xs = rng.normal(size=(5, 3))
    proj = rng.normal(size=(5, 4))

    def loss():
        hs, _ = lstm_forward(W, b, xs)
        return float(np.sum(hs * proj))

    hs, steps = lstm_forward(W, b, xs)
    dxs, dW, db = lstm_backward(W, steps, proj)
    h = 1e-6
    for arr, grad in ((W, dW), (b, db), (xs, dxs)):
        num = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = loss()
            arr[idx] = old - h
            down = loss()
            arr[idx] = old
            num[idx] = (up - down) / (2 * h)
        assert np.max(np.abs(num - grad)) < 1e-7
