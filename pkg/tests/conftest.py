"""Shared environments for the test suite.

Two fully-built pipelines, constructed once per session:

  cfg1    the reference run (k=100 reaction, theta2=176, n=2048).  Its
          outer supersolution lives at ~4e17, which is what makes the
          descending iteration a stress case.
  gentle  a k=25 reaction with theta2=890.67 and an explicit khat shift,
          n=256.  Every stage is green here, including both monotone
          iteration legs, so it is the end-to-end fixture of choice.

Both follow the same construction order the CLI uses: thresholds ->
window at lam=0 -> lam=midpoint -> derived reactions -> radial profile ->
discrete operator -> certified pairs.
"""
import dataclasses

import pytest

from pqsing import (
    DiscreteOperator,
    NonlinearitySpec,
    Params,
    build_h,
    compute_window,
    construct_pairs,
    solve_radial,
)


@dataclasses.dataclass(frozen=True)
class PipelineEnv:
    spec: NonlinearitySpec
    params0: Params          # lam = 0, for window computations
    window: object
    params: Params           # lam = window midpoint
    reactions: object
    profile: object
    op: DiscreteOperator
    pairs: object
    n: int


def _build_env(spec: NonlinearitySpec, n: int) -> PipelineEnv:
    params0 = Params(p=2.0, q=3.0, gamma=0.5, dim=2, radius=1.0, lam=0.0)
    reactions0 = build_h(spec, params0)
    window = compute_window(params0, spec, reactions0)
    params = dataclasses.replace(params0, lam=window.midpoint)
    reactions = build_h(spec, params)
    profile = solve_radial(params, reactions, window, n=n)
    op = DiscreteOperator.from_params(params, n=n)
    pairs = construct_pairs(params, spec, reactions, window, profile, op=op)
    return PipelineEnv(spec=spec, params0=params0, window=window, params=params,
                       reactions=reactions, profile=profile, op=op, pairs=pairs, n=n)


@pytest.fixture(scope="session")
def cfg1() -> PipelineEnv:
    spec = NonlinearitySpec(kind="exp_saturating", theta1=1.0, theta2=176.0, k=100.0)
    return _build_env(spec, n=2048)


@pytest.fixture(scope="session")
def gentle() -> PipelineEnv:
    spec = NonlinearitySpec(kind="exp_saturating", theta1=1.0, theta2=890.67,
                            k=25.0, khat=60000.0)
    return _build_env(spec, n=256)
