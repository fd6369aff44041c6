import numpy as np
import pytest

import pdmp_verify as pv

# Pinned benchmark parameters used across the suite (recorded in scenarios/).
COOK = dict(ka=1.0, kd=1.0, jp=2.0, kp=1.0)
PHAGE = dict(k1=1.0, km1=1.0, k2=0.1, km2=0.1, k3=0.1, km3=0.1,
             k4=0.1, km4=0.1, kt=0.5, kd=1.0, n=5, err=0.1)


@pytest.fixture(scope="session")
def cook_params():
    return pv.CookParams(**COOK)


@pytest.fixture(scope="session")
def cook_chars(cook_params):
    return pv.build_cook(cook_params)


@pytest.fixture(scope="session")
def onoff_pinned():
    # r0 vanishes on [0, 0.5], r1 vanishes on [1.5, alpha_max]; both PWL.
    return pv.OnOffParams(
        r0=pv.piecewise_linear([0.0, 0.5, 2.0], [0.0, 0.0, 1.5]),
        r1=pv.piecewise_linear([0.0, 1.5, 2.0], [1.5, 0.0, 0.0]),
        lambda0=1.0, lambda1=1.0, alpha_max=2.0,
    )


@pytest.fixture(scope="session")
def phage_params():
    return pv.PhageParams(**PHAGE)


@pytest.fixture(scope="session")
def phage_chars(phage_params):
    return pv.build_phage(phage_params)


@pytest.fixture(scope="session")
def policy():
    return pv.ControlPolicy.constant(0.0)


def make_frozen_chars(dim=1, mode_count=2):
    """No flow, no jumps: the state never moves."""
    return pv.PdmpCharacteristics(
        mode_count, dim,
        flow=lambda s, u: np.zeros(dim),
        rate=lambda s, u: 0.0,
        kernel=lambda s, u: [],
        rate_bound=0.0,
        flow_batch=lambda m, x, u: np.zeros_like(x),
        rate_batch=lambda m, x, u: np.zeros(len(m)),
        jump_radius=0.0,
    )


def make_const_rate_chars(lam=1.3, w=(0.25, 0.75)):
    """Zero flow, constant rate, two-target kernel (mode flip, x +/- 1)."""
    w = np.asarray(w, dtype=float)

    def kernel_batch(m, x, u):
        ws = np.repeat(w[None, :], len(m), axis=0)
        tm = np.stack([1 - m, 1 - m], axis=1)
        tx = np.stack([x + 1.0, x - 1.0], axis=1)
        return ws, tm, tx

    return pv.PdmpCharacteristics(
        2, 1,
        flow=lambda s, u: np.zeros(1),
        rate=lambda s, u: lam,
        kernel=lambda s, u: [
            (float(w[0]), pv.HybridState(1 - s.mode, s.x + 1.0)),
            (float(w[1]), pv.HybridState(1 - s.mode, s.x - 1.0)),
        ],
        rate_bound=lam,
        flow_batch=lambda m, x, u: np.zeros_like(x),
        rate_batch=lambda m, x, u: np.full(len(m), lam),
        kernel_batch=kernel_batch,
        jump_radius=np.sqrt(2.0),
    )


def hand_cook_flow(params, mode, x):
    """Independent closed-form evaluation of the two-state model's field."""
    if mode == 1:
        return params.jp - params.kp * x
    return -params.kp * x


@pytest.fixture(scope="session")
def cook_band():
    return pv.ModeBoxSet((0, 1), np.array([0.0]), np.array([2.0]))
