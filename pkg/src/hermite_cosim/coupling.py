"""Coupling algebra between systems.

Global input/output vectors are the concatenation of the per-system
vectors, system 0 first.  The connection matrix (outputs x inputs, one 1
per column) is never formed; it is kept as a list of ``(output, input)``
index pairs, which is all that dispatching needs.
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (BadIndex, IndexOutOfRange, LengthMismatch,
                     MultiplyConnectedInput, UnconnectedInput)

__all__ = ["SystemLayout", "CouplingGraph", "GlobalPair", "validate_graph",
           "extract_inputs", "rearrange_outputs", "dispatch",
           "coupling_residual"]


class GlobalPair(NamedTuple):
    """Values and time-derivatives of a global (or local) vector."""
    values: np.ndarray
    derivatives: np.ndarray

    @classmethod
    def of(cls, values, derivatives=None):
        values = np.asarray(values, dtype=float)
        if derivatives is None:
            derivatives = np.zeros_like(values)
        derivatives = np.asarray(derivatives, dtype=float)
        if values.shape != derivatives.shape:
            raise LengthMismatch(
                f"values have {values.size} entries, derivatives {derivatives.size}")
        return cls(values, derivatives)

    def stacked(self):
        return np.concatenate([self.values, self.derivatives])

    @classmethod
    def unstack(cls, x):
        x = np.asarray(x, dtype=float)
        if x.size % 2:
            raise LengthMismatch("stacked vector must have an even length")
        n = x.size // 2
        return cls(x[:n], x[n:])


def _offsets(sizes):
    return np.concatenate([[0], np.cumsum(sizes)]).astype(int)


@dataclass(frozen=True)
class SystemLayout:
    in_sizes: tuple
    out_sizes: tuple
    in_offsets: np.ndarray = field(init=False, repr=False, compare=False)
    out_offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        in_sizes = tuple(int(s) for s in self.in_sizes)
        out_sizes = tuple(int(s) for s in self.out_sizes)
        if len(in_sizes) != len(out_sizes):
            raise LengthMismatch("in_sizes and out_sizes differ in length")
        if not in_sizes:
            raise ValueError("a layout needs at least one system")
        if min(in_sizes + out_sizes) < 0:
            raise ValueError("sizes must be non-negative")
        object.__setattr__(self, "in_sizes", in_sizes)
        object.__setattr__(self, "out_sizes", out_sizes)
        object.__setattr__(self, "in_offsets", _offsets(in_sizes))
        object.__setattr__(self, "out_offsets", _offsets(out_sizes))

    @property
    def n_sys(self):
        return len(self.in_sizes)

    @property
    def n_in(self):
        return int(self.in_offsets[-1])

    @property
    def n_out(self):
        return int(self.out_offsets[-1])

    def in_slice(self, k):
        self._check_system(k)
        return slice(self.in_offsets[k], self.in_offsets[k + 1])

    def out_slice(self, k):
        self._check_system(k)
        return slice(self.out_offsets[k], self.out_offsets[k + 1])

    def input_owner(self, j):
        """System index owning global input ``j``."""
        return int(np.searchsorted(self.in_offsets, j, side="right") - 1)

    def output_owner(self, i):
        return int(np.searchsorted(self.out_offsets, i, side="right") - 1)

    def _check_system(self, k):
        if not 0 <= k < self.n_sys:
            raise BadIndex(f"system index {k} outside [0, {self.n_sys})")


@dataclass(frozen=True)
class CouplingGraph:
    layout: SystemLayout
    connections: tuple  # of (output index, input index)

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.connections)
        object.__setattr__(self, "connections", pairs)

    def source_of_inputs(self):
        """Array ``src`` with ``src[j]`` the output feeding input ``j``.

        Assumes a validated graph.
        """
        src = np.empty(self.layout.n_in, dtype=int)
        for i, j in self.connections:
            src[j] = i
        return src


def validate_graph(graph):
    """Check that every input is fed by exactly one in-range output.

    Raises
    ------
    IndexOutOfRange
        A pair references an output or input that does not exist.
    MultiplyConnectedInput, UnconnectedInput
        A column of the connection matrix does not hold exactly one 1.
    """
    n_in, n_out = graph.layout.n_in, graph.layout.n_out
    fed = np.zeros(n_in, dtype=int)
    for i, j in graph.connections:
        if not 0 <= i < n_out:
            raise IndexOutOfRange(f"output index {i} outside [0, {n_out})")
        if not 0 <= j < n_in:
            raise IndexOutOfRange(f"input index {j} outside [0, {n_in})")
        fed[j] += 1
        if fed[j] > 1:
            raise MultiplyConnectedInput(j)
    missing = np.flatnonzero(fed == 0)
    if missing.size:
        raise UnconnectedInput(int(missing[0]))


def _check_length(vec, n, what):
    if len(vec) != n:
        raise LengthMismatch(f"{what} has length {len(vec)}, expected {n}")


def extract_inputs(layout, k, glob):
    """Local inputs (values, derivatives) of system ``k`` (0-based)."""
    _check_length(glob.values, layout.n_in, "global input values")
    _check_length(glob.derivatives, layout.n_in, "global input derivatives")
    sl = layout.in_slice(k)
    return GlobalPair(glob.values[sl].copy(), glob.derivatives[sl].copy())


def rearrange_outputs(layout, per_system: Sequence):
    """Concatenate per-system ``(y_k, dy_k)`` into global values and derivatives."""
    if len(per_system) != layout.n_sys:
        raise LengthMismatch(
            f"{len(per_system)} output blocks for {layout.n_sys} systems")
    values = np.empty(layout.n_out)
    derivs = np.empty(layout.n_out)
    for k, (y, dy) in enumerate(per_system):
        n = layout.out_sizes[k]
        _check_length(y, n, f"outputs of system {k}")
        _check_length(dy, n, f"output derivatives of system {k}")
        sl = layout.out_slice(k)
        values[sl] = y
        derivs[sl] = dy
    return GlobalPair(values, derivs)


def dispatch(graph, outputs):
    """Copy each output (value and derivative) to every input it feeds."""
    _check_length(outputs.values, graph.layout.n_out, "output values")
    _check_length(outputs.derivatives, graph.layout.n_out, "output derivatives")
    values = np.zeros(graph.layout.n_in)
    derivs = np.zeros(graph.layout.n_in)
    for i, j in graph.connections:
        values[j] = outputs.values[i]
        derivs[j] = outputs.derivatives[i]
    return GlobalPair(values, derivs)


def coupling_residual(graph, inputs, outputs):
    """Signed mismatch ``(u - dispatched y ; du - dispatched dy)``.

    The absolute value of the classical coupling function is left to the
    caller so that Newton-type solvers see a smooth map.
    """
    _check_length(inputs.values, graph.layout.n_in, "input values")
    _check_length(inputs.derivatives, graph.layout.n_in, "input derivatives")
    d = dispatch(graph, outputs)
    return np.concatenate([inputs.values - d.values,
                           inputs.derivatives - d.derivatives])
