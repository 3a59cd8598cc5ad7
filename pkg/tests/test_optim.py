"""Adam update tests against a hand-rolled scalar reference."""

import numpy as np
import pytest

from bitexpand.optim import AdamState, adam_step


def scalar_adam_reference(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook bias-corrected Adam on one scalar, step by step."""
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return theta


def test_first_step_moves_by_lr():
    p = [np.zeros((3, 3))]
    g = [np.ones((3, 3))]
    state = AdamState.init(p)
    adam_step(p, g, state, lr=0.01)
    # bias-corrected m_hat/sqrt(v_hat) is exactly 1 on the first step
    np.testing.assert_allclose(p[0], -0.01, rtol=1e-6)
    assert state.t == 1


def test_zero_gradient_is_fixed_point():
    p = [np.full((4,), 1.5)]
    state = AdamState.init(p)
    adam_step(p, [np.zeros(4)], state, lr=0.1)
    np.testing.assert_array_equal(p[0], np.full((4,), 1.5))


def test_two_steps_match_scalar_reference():
    theta0, g = 0.7, 0.3
    p = [np.array([theta0])]
    state = AdamState.init(p)
    adam_step(p, [np.array([g])], state, lr=1e-2)
    adam_step(p, [np.array([g])], state, lr=1e-2)
    want = scalar_adam_reference(theta0, [g, g], lr=1e-2)
    assert abs(p[0][0] - want) < 1e-7


def test_state_counts_steps_once_per_call():
    p = [np.zeros(2)]
    state = AdamState.init(p)
    for k in range(5):
        adam_step(p, [np.ones(2)], state, lr=1e-3)
        assert state.t == k + 1


def test_shape_mismatch_raises():
    p = [np.zeros((2, 2))]
    state = AdamState.init(p)
    with pytest.raises(ValueError):
        adam_step(p, [np.zeros((2, 3))], state, lr=1e-3)


def test_nonpositive_lr_raises():
    p = [np.zeros(2)]
    state = AdamState.init(p)
    with pytest.raises(ValueError):
        adam_step(p, [np.zeros(2)], state, lr=0.0)


def test_moment_shapes_mirror_params():
    p = [np.zeros((2, 3)), np.zeros(5)]
    state = AdamState.init(p)
    assert [m.shape for m in state.m] == [(2, 3), (5,)]
    assert [v.shape for v in state.v] == [(2, 3), (5,)]
