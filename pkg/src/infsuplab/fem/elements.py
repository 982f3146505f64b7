"""Reference elements: P1, P2, and P1 enriched with the cubic bubble."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# local edge k connects local vertices (k, k+1 mod 3)
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))

GRAD_LAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class Element:
    """A scalar reference element.

    dof_kinds lists one descriptor per local basis function:
    ("vertex", i), ("edge", k) for the midpoint of local edge k, or
    ("cell", 0) for an interior bubble.
    """

    kind: str
    dof_kinds: tuple

    @property
    def n_basis(self):
        return len(self.dof_kinds)

    def eval_basis(self, points):
        """Basis values at reference points; shape (n_basis, nq)."""
        return _BASIS[self.kind](np.asarray(points, dtype=float))

    def eval_grad(self, points):
        """Reference gradients at reference points; shape (n_basis, nq, 2)."""
        return _GRAD[self.kind](np.asarray(points, dtype=float))


def _lambdas(points):
    x, y = points[:, 0], points[:, 1]
    return np.stack([1.0 - x - y, x, y])


def _p1_basis(points):
    return _lambdas(points)


def _p1_grad(points):
    nq = points.shape[0]
    return np.broadcast_to(GRAD_LAMBDA[:, None, :], (3, nq, 2)).copy()


def _p2_basis(points):
    lam = _lambdas(points)
    vals = [lam[i] * (2.0 * lam[i] - 1.0) for i in range(3)]
    vals += [4.0 * lam[i] * lam[j] for i, j in LOCAL_EDGES]
    return np.stack(vals)


def _p2_grad(points):
    lam = _lambdas(points)
    nq = points.shape[0]
    out = np.empty((6, nq, 2))
    for i in range(3):
        out[i] = (4.0 * lam[i] - 1.0)[:, None] * GRAD_LAMBDA[i]
    for k, (i, j) in enumerate(LOCAL_EDGES):
        out[3 + k] = 4.0 * (lam[j][:, None] * GRAD_LAMBDA[i] + lam[i][:, None] * GRAD_LAMBDA[j])
    return out


def _bubble_basis(points):
    lam = _lambdas(points)
    return np.vstack([lam, 27.0 * lam[0] * lam[1] * lam[2]])


def _bubble_grad(points):
    lam = _lambdas(points)
    nq = points.shape[0]
    out = np.empty((4, nq, 2))
    out[:3] = _p1_grad(points)
    out[3] = 27.0 * (
        (lam[1] * lam[2])[:, None] * GRAD_LAMBDA[0]
        + (lam[0] * lam[2])[:, None] * GRAD_LAMBDA[1]
        + (lam[0] * lam[1])[:, None] * GRAD_LAMBDA[2]
    )
    return out


_BASIS = {"p1": _p1_basis, "p2": _p2_basis, "p1bubble": _bubble_basis}
_GRAD = {"p1": _p1_grad, "p2": _p2_grad, "p1bubble": _bubble_grad}

_ELEMENTS = {
    "p1": Element("p1", (("vertex", 0), ("vertex", 1), ("vertex", 2))),
    "p2": Element(
        "p2",
        (
            ("vertex", 0),
            ("vertex", 1),
            ("vertex", 2),
            ("edge", 0),
            ("edge", 1),
            ("edge", 2),
        ),
    ),
    "p1bubble": Element(
        "p1bubble", (("vertex", 0), ("vertex", 1), ("vertex", 2), ("cell", 0))
    ),
}


def get_element(kind: str) -> Element:
    try:
        return _ELEMENTS[kind]
    except KeyError:
        raise ValueError(f"unsupported element kind {kind!r}; choose from {sorted(_ELEMENTS)}")
