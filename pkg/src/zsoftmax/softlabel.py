"""Similarity-based soft labels for seen-class training samples.

A seen class keeps probability ``1 - q``; the remaining mass ``q`` goes to
unseen classes, either all of it to the most similar one (NU) or spread by a
temperature softmax over seen-to-unseen attribute similarities (DU).
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError
from .numeric import softmax

MODES = ("NU", "DU")


@dataclass(frozen=True)
class SoftLabelConfig:
    mode: str = "DU"
    q: float = 0.3
    tau: float = 1.0

    def __post_init__(self):
        mode = str(self.mode).upper()
        if mode not in MODES:
            raise InvalidParameterError(f"mode must be NU or DU, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        _check_q(self.q)
        _check_tau(self.tau)


def _check_q(q):
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"q must lie in [0, 1], got {q}")


def _check_tau(tau):
    if not tau > 0:
        raise InvalidParameterError(f"tau must be positive, got {tau}")


def _check_seen(seen_class, attrs):
    if not 0 <= seen_class < attrs.num_seen:
        raise InvalidParameterError(
            f"seen_class {seen_class} out of range [0, {attrs.num_seen})")


def seen_unseen_similarity(attrs):
    """Raw dot products between seen (rows) and unseen (columns) attribute vectors."""
    return attrs.seen.T @ attrs.unseen


def _with_seen_mass(seen_class, attrs, q, unseen_part):
    label = np.zeros(attrs.num_classes)
    label[seen_class] = 1.0 - q
    label[attrs.num_seen:] = unseen_part
    return label


def soft_label_du(seen_class, attrs, q, tau):
    _check_seen(seen_class, attrs)
    _check_q(q)
    _check_tau(tau)
    sims = attrs.seen[:, seen_class] @ attrs.unseen
    return _with_seen_mass(seen_class, attrs, q, q * softmax(sims, tau))


def soft_label_nu(seen_class, attrs, q):
    _check_seen(seen_class, attrs)
    _check_q(q)
    sims = attrs.seen[:, seen_class] @ attrs.unseen
    part = np.zeros(attrs.num_unseen)
    part[int(np.argmax(sims))] = q  # argmax returns the first (lowest-index) maximum
    return _with_seen_mass(seen_class, attrs, q, part)


def build_table(attrs, config):
    """One soft label row per seen class, shape ``(num_seen, num_classes)``."""
    if config.mode == "NU":
        rows = [soft_label_nu(s, attrs, config.q) for s in range(attrs.num_seen)]
    else:
        rows = [soft_label_du(s, attrs, config.q, config.tau) for s in range(attrs.num_seen)]
    table = np.array(rows)
    table.setflags(write=False)
    return table


def unseen_entropy(label, num_seen):
    """Shannon entropy (nats) of the unseen part of ``label`` after renormalizing."""
    part = np.asarray(label, dtype=np.float64)[num_seen:]
    mass = part.sum()
    if not mass > 0:
        raise InvalidParameterError("label has no unseen mass")
    p = part / mass
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())
