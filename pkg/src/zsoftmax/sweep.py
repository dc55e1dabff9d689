"""Retrain-and-evaluate sweeps over the unseen mass q or the temperature tau."""
import csv
import logging
from dataclasses import dataclass

import numpy as np

from .data import l2_normalize
from .evaluation import GzslMetrics, evaluate_gzsl
from .exceptions import InvalidParameterError
from .train import train

logger = logging.getLogger(__name__)

SWEEP_HEADER = ("param", "a_seen", "a_unseen", "a_harmonic")


@dataclass(frozen=True)
class SweepRow:
    value: float
    metrics: GzslMetrics
    best: bool = False


def _sweep(param, base_config, attrs, data, values, repeats=1):
    values = sorted(float(v) for v in values)
    if not values:
        raise InvalidParameterError(f"no {param} values to sweep")
    if repeats < 1:
        raise InvalidParameterError("repeats must be >= 1")
    train_set, test_seen, test_unseen = data
    if base_config.l2_normalize:
        test_seen, test_unseen = l2_normalize(test_seen), l2_normalize(test_unseen)
    results = []
    for v in values:
        # trial r uses seed + r; A_S and A_U are averaged over trials
        trials = []
        for r in range(repeats):
            config = base_config.replace(**{param: v, "seed": base_config.seed + r})
            params, _ = train(config, attrs, train_set)
            trials.append(evaluate_gzsl(params, test_seen, test_unseen))
        m = trials[0] if repeats == 1 else GzslMetrics(
            float(np.mean([t.a_seen for t in trials])),
            float(np.mean([t.a_unseen for t in trials])))
        logger.info("%s=%g  A_S=%.4f A_U=%.4f A_H=%.4f", param, v, m.a_seen, m.a_unseen,
                    m.a_harmonic)
        results.append(m)
    # first maximum wins ties
    best = max(range(len(results)), key=lambda i: (results[i].a_harmonic, -i))
    return [SweepRow(v, m, i == best) for i, (v, m) in enumerate(zip(values, results))]


def sweep_q(base_config, attrs, data, q_values, repeats=1):
    """Train one model per q (shared seed); ``data`` is ``(train, test_seen, test_unseen)``.

    With ``repeats > 1`` every point is averaged over that many seeds.
    """
    for q in q_values:
        if not 0.0 <= q <= 1.0:
            raise InvalidParameterError(f"q values must lie in [0, 1], got {q}")
    return _sweep("q", base_config, attrs, data, q_values, repeats)


def sweep_tau(base_config, attrs, data, tau_values, repeats=1):
    for t in tau_values:
        if not t > 0:
            raise InvalidParameterError(f"tau values must be positive, got {t}")
    return _sweep("tau", base_config, attrs, data, tau_values, repeats)


def best_row(rows):
    return next(r for r in rows if r.best)


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            m = r.metrics
            w.writerow([f"{r.value:.6f}", f"{m.a_seen:.6f}", f"{m.a_unseen:.6f}",
                        f"{m.a_harmonic:.6f}"])
