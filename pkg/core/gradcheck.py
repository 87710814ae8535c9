"""
Finite-difference checks of the analytic gradients.

Error measure everywhere: max over coordinates of
|analytic - central difference| / max(1, |analytic|).

A coordinate over the tolerance is measured again with steps 100x and
10^4x smaller and keeps the smallest error: a ReLU kink inside the step
breaks the central difference, a wrong gradient fails at every step.
"""

import logging
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from config.settings import GRADCHECK_EPSILON, GRADCHECK_SEEDS, GRADCHECK_TOLERANCE
from core.errors import ContractError
from core.tensor import Parameter, Tensor, backward, no_grad

logger = logging.getLogger(__name__)

RETRY_FACTORS = (1e-2, 1e-4)


def _scalar(out: Tensor) -> float:
    if out.size != 1:
        raise ContractError(f"gradcheck needs a scalar-valued function, got shape {out.shape}")
    return out.item()


def _coordinate_error(evaluate: Callable[[], float], flat: np.ndarray, i: int,
                      analytic: float, epsilon: float) -> float:
    """Relative error of one coordinate, perturbing flat[i] in place."""
    original = flat[i]
    best = np.inf
    for step in (epsilon,) + tuple(epsilon * f for f in RETRY_FACTORS):
        flat[i] = original + step
        up = evaluate()
        flat[i] = original - step
        down = evaluate()
        flat[i] = original
        numeric = (up - down) / (2 * step)
        best = min(best, abs(analytic - numeric) / max(1.0, abs(analytic)))
        if best <= GRADCHECK_TOLERANCE:
            break
    return best


def gradcheck(f: Callable[[Tensor], Tensor], point, epsilon: float = GRADCHECK_EPSILON) -> float:
    """Compare backward() on f at point against central differences."""
    base = np.array(point.data if isinstance(point, Tensor) else point, dtype=np.float64)

    x = Tensor(base.copy(), requires_grad=True)
    out = f(x)
    _scalar(out)
    backward(out)
    analytic = (x.grad if x.grad is not None else np.zeros_like(base)).reshape(-1)

    flat = base.reshape(-1)
    worst = 0.0
    with no_grad():
        for i in range(flat.size):
            error = _coordinate_error(lambda: _scalar(f(Tensor(base.copy()))), flat, i, analytic[i], epsilon)
            worst = max(worst, error)
    return float(worst)


def gradcheck_parameters(loss_fn: Callable[[], Tensor], params: Iterable[Parameter],
                         epsilon: float = GRADCHECK_EPSILON) -> float:
    """
    Same measure, but perturbing Parameters in place.

    loss_fn takes no arguments and rebuilds the graph on every call. Values
    are restored afterwards and gradients left zeroed.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    root = loss_fn()
    _scalar(root)
    backward(root)
    analytic = [p.grad.copy().reshape(-1) for p in params]

    worst = 0.0
    with no_grad():
        for p, grad in zip(params, analytic):
            flat = p.data.reshape(-1)
            param_worst = 0.0
            for i in range(flat.size):
                param_worst = max(param_worst, _coordinate_error(lambda: _scalar(loss_fn()), flat, i,
                                                                 grad[i], epsilon))
            if param_worst > GRADCHECK_TOLERANCE:
                logger.debug(f"parameter {p.id}: relative error {param_worst:.3e}")
            worst = max(worst, param_worst)
    for p in params:
        p.zero_grad()
    return float(worst)


def run_gradcheck_suite(seeds: int = GRADCHECK_SEEDS, epsilon: float = GRADCHECK_EPSILON,
                        checks: Optional[List[str]] = None) -> Dict[str, float]:
    """Run the registered checks over `seeds` seeds; returns the max error per check."""
    from core.gradcheck_cases import CASES

    names = checks if checks is not None else list(CASES)
    results: Dict[str, float] = {}
    for name in names:
        if name not in CASES:
            raise ContractError(f"unknown gradcheck case {name!r}; known: {', '.join(CASES)}")
        worst = 0.0
        for seed in range(seeds):
            worst = max(worst, CASES[name](np.random.default_rng(seed), epsilon))
        logger.info(f"gradcheck {name}: max relative error {worst:.3e} over {seeds} seeds")
        results[name] = worst
    return results
