"""Evaluation of W-carrier transforms and alpha/gamma control operators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from .model import Field, OpKind, OperatorSpec, Space


@dataclass(frozen=True)
class OperatorInstance:
    """An :class:`OperatorSpec` bound to concrete input and output spaces."""

    spec: OperatorSpec
    input_space: Space
    output_space: Space
    _matrix: Optional[sparse.csr_matrix] = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        spec = self.spec
        if spec.kind is OpKind.GAIN:
            return spec.gain * x
        if spec.kind is OpKind.CONST_DEPOSIT:
            c = spec.deposit.values
            if spec.mode == "any":
                return c.copy() if np.any(x > 0.0) else np.zeros_like(c)
            # exactly rounded so the result does not depend on summation order
            return c * (math.fsum(x) / x.size)
        return self._matrix @ x


def bind(spec: OperatorSpec, input_space: Space, output_space: Space) -> OperatorInstance:
    if spec.kind is OpKind.GAIN and input_space != output_space:
        raise ValueError(
            f"gain needs identical spaces, got {input_space.id} -> {output_space.id}"
        )
    if spec.kind is OpKind.CONST_DEPOSIT and spec.deposit.space != output_space:
        raise ValueError(f"const-deposit field is not on {output_space.id}")
    matrix = None
    if spec.kind is OpKind.LINEAR_KERNEL:
        if spec.shape != (output_space.size, input_space.size):
            raise ValueError(f"kernel shape {spec.shape} does not match spaces")
        rows, cols, vals = (np.array(a) for a in zip(*spec.triplets)) if spec.triplets else ([], [], [])
        matrix = sparse.csr_matrix(
            (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=spec.shape
        )
        matrix.sort_indices()
    return OperatorInstance(spec, input_space, output_space, matrix)


def apply(op: OperatorInstance, field: Field) -> Field:
    """Apply ``op`` to a field (mark or firing) and return a field on its output space."""
    if field.space != op.input_space:
        raise ValueError(
            f"operator expects input on {op.input_space.id}, got {field.space.id}"
        )
    return Field(op.output_space, op(field.values))


def sum_contributions(
    ops: Iterable[Tuple[OperatorInstance, Union[Field, np.ndarray]]],
    start: Optional[Field] = None,
    space: Optional[Space] = None,
) -> Field:
    """Sum operator outputs pointwise, in the given order.

    Accumulation is strictly left to right onto ``start`` (or onto zero), so
    ``start + a + b`` here is ``(start + a) + b``.
    """
    acc = None if start is None else start.values.copy()
    out_space = None if start is None else start.space
    for op, src in ops:
        if out_space is None:
            out_space = op.output_space
        elif op.output_space != out_space:
            raise ValueError(
                f"contribution on {op.output_space.id} cannot be summed into {out_space.id}"
            )
        vals = src.values if isinstance(src, Field) else src
        term = op(vals)
        acc = term + 0.0 if acc is None else acc + term
    if acc is None:
        if space is None:
            raise ValueError("empty contribution list needs an explicit space")
        return space.zeros()
    return Field(out_space, acc)
