import pytest

from models import ClockParams, SchedulePlan

# Reference setup of the MSE-vs-gap experiments: H = G = 10, sigma = 0.1
REFERENCE_BETA1 = 1.01
REFERENCE_SIGMA = 0.1
REFERENCE_STEP = 10.0


@pytest.fixture
def reference_params():
    return ClockParams(beta0=0.5, beta1=REFERENCE_BETA1, d=1.0, sigma=REFERENCE_SIGMA)


def make_plan(n_rounds, h_step=REFERENCE_STEP, g_step=REFERENCE_STEP, t1_origin=0.0, t4_offset=5.0):
    return SchedulePlan(n_rounds=n_rounds, h_step=h_step, g_step=g_step,
                        t1_origin=t1_origin, t4_offset=t4_offset)


@pytest.fixture
def plan_factory():
    return make_plan
