import numpy as np

from bctar import ARHyper, BCTConfig, Quantiser

# criterion id -> (passed, detail); filled by test_acceptance, printed by conftest
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def make_config(m=2, depth=2, p=1, beta=None, intercept=False, **prior):
    thresholds = {2: [0.0], 3: [-0.4, 0.4]}.get(m) or list(np.linspace(-1, 1, m - 1))
    return BCTConfig(Quantiser(thresholds), depth, ARHyper(p=p, intercept=intercept, **prior), beta)
