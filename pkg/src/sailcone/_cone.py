from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Literal, Self

import attrs
import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

ConeKind = Literal["nonnegative", "second-order", "rotated-second-order"]


def _broadcast(value: ArrayLike, rows: int) -> NDArray[np.float64]:
    return np.broadcast_to(np.asarray(value, dtype=float), (rows,)).copy()


@attrs.define(frozen=True, eq=False)
class LinExpr:
    """A column of ``rows`` affine expressions ``Σ coef · x[index] + const``.

    Every term holds one variable index and one coefficient per row, so an expression built
    from node-wise slices stays vectorized over the nodes.

    .. code-block:: python

        from sailcone import ProgramBuilder

        builder = ProgramBuilder()
        b = builder.add_variable("b", 5)
        expr = 2.0 * b[1:] - b[:-1] + 1.0  # four rows
    """

    # numpy operands defer to the reflected LinExpr operators
    __array_ufunc__ = None

    rows: int
    terms: tuple[tuple[NDArray[np.int_], NDArray[np.float64]], ...] = ()
    const: NDArray[np.float64] = attrs.field(
        default=attrs.Factory(lambda self: np.zeros(self.rows), takes_self=True)
    )

    @classmethod
    def constant(cls, value: ArrayLike, rows: int) -> LinExpr:
        return cls(rows, (), _broadcast(value, rows))

    def coerce(self, other: LinExpr | ArrayLike) -> LinExpr:
        if isinstance(other, LinExpr):
            if other.rows != self.rows:
                raise ValueError(f"row mismatch: {self.rows} vs {other.rows}")
            return other
        return LinExpr.constant(other, self.rows)

    def __add__(self, other: LinExpr | ArrayLike) -> LinExpr:
        other = self.coerce(other)
        return LinExpr(self.rows, self.terms + other.terms, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> LinExpr:
        return self * -1.0

    def __sub__(self, other: LinExpr | ArrayLike) -> LinExpr:
        return self + (-self.coerce(other))

    def __rsub__(self, other: ArrayLike) -> LinExpr:
        return (-self) + other

    def __mul__(self, scale: ArrayLike) -> LinExpr:
        if isinstance(scale, LinExpr):
            return NotImplemented
        factor = _broadcast(scale, self.rows)
        return LinExpr(
            self.rows, tuple((idx, coef * factor) for idx, coef in self.terms), self.const * factor
        )

    __rmul__ = __mul__

    def __truediv__(self, scale: ArrayLike) -> LinExpr:
        return self * (1.0 / np.asarray(scale, dtype=float))

    def sum(self) -> LinExpr:
        """Single-row expression adding up all rows."""
        terms = tuple((idx, coef) for idx, coef in self.terms)
        flat_idx = np.concatenate([t[0] for t in terms]) if terms else np.zeros(0, dtype=int)
        flat_coef = np.concatenate([t[1] for t in terms]) if terms else np.zeros(0)
        return LinExpr(1, ((flat_idx, flat_coef),), np.array([self.const.sum()]))

    def matrix(self, n_vars: int) -> sp.csr_matrix:
        """Coefficient matrix of shape ``(rows, n_vars)``; duplicate entries are summed."""
        if not self.terms:
            return sp.csr_matrix((self.rows, n_vars))
        if self.rows == 1:
            cols = np.concatenate([idx for idx, _ in self.terms])
            rows = np.zeros_like(cols)
        else:
            cols = np.concatenate([idx for idx, _ in self.terms])
            rows = np.tile(np.arange(self.rows), len(self.terms))
        data = np.concatenate([coef for _, coef in self.terms])
        keep = data != 0.0
        return sp.csr_matrix((data[keep], (rows[keep], cols[keep])), shape=(self.rows, n_vars))

    def value(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        out = self.const.copy()
        if self.rows == 1:
            for idx, coef in self.terms:
                out += coef @ x[idx]
            return out
        for idx, coef in self.terms:
            out += coef * x[idx]
        return out


@attrs.define(frozen=True)
class VariableBlock:
    """Bookkeeping of one named planner quantity.

    The stored value is ``physical / scale``.
    """

    name: str
    start: int
    size: int
    scale: float = 1.0

    @property
    def stop(self) -> int:
        return self.start + self.size

    def __getitem__(self, key: slice | int | NDArray[np.int_]) -> LinExpr:
        idx = np.atleast_1d(np.arange(self.start, self.stop)[key])
        return LinExpr(int(idx.size), ((idx, np.ones(idx.size)),))

    @property
    def all(self) -> LinExpr:
        return self[:]

    def physical(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return x[self.start : self.stop] * self.scale


@attrs.define(frozen=True)
class ConeBlock:
    """``count`` cones of dimension ``dim`` occupying rows ``start:start + dim·count`` of ``G``.

    Rows of one cone are contiguous: cone ``k`` owns ``start + k·dim`` up to the next cone.
    Nonnegative blocks have ``dim == 1``. Rotated cones are stored in their
    second-order form.
    """

    kind: ConeKind
    tag: str
    dim: int
    count: int
    start: int

    @property
    def stop(self) -> int:
        return self.start + self.dim * self.count


@attrs.define(frozen=True)
class RowBlock:
    tag: str
    start: int
    count: int

    @property
    def stop(self) -> int:
        return self.start + self.count


@attrs.define(frozen=True, eq=False)
class ConeProgram:
    """Conic program ``min c'x + c0`` subject to ``Ax = b`` and ``h − Gx ∈ K``.

    ``K`` is a nonnegative orthant followed by second-order cones, described by ``blocks``.
    The program is immutable after ``ProgramBuilder.build``.
    """

    c: NDArray[np.float64]
    c0: float
    A: sp.csc_matrix
    b: NDArray[np.float64]
    G: sp.csc_matrix
    h: NDArray[np.float64]
    blocks: tuple[ConeBlock, ...]
    equalities: tuple[RowBlock, ...]
    variables: tuple[VariableBlock, ...]
    meta: dict = attrs.field(factory=dict)

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def nonneg_dim(self) -> int:
        return sum(blk.dim * blk.count for blk in self.blocks if blk.kind == "nonnegative")

    @property
    def soc_blocks(self) -> tuple[ConeBlock, ...]:
        return tuple(blk for blk in self.blocks if blk.kind != "nonnegative")

    @property
    def degree(self) -> int:
        """Barrier degree: one per orthant row plus one per second-order cone."""
        return self.nonneg_dim + sum(blk.count for blk in self.soc_blocks)

    def variable(self, name: str) -> VariableBlock:
        for block in self.variables:
            if block.name == name:
                return block
        raise KeyError(name)

    def block(self, tag: str) -> ConeBlock:
        for blk in self.blocks:
            if blk.tag == tag:
                return blk
        raise KeyError(tag)

    def objective(self, x: NDArray[np.float64]) -> float:
        return float(self.c @ x + self.c0)

    def slack(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.h - self.G @ x

    def cone_violation(self, x: NDArray[np.float64]) -> float:
        """Largest distance of ``h − Gx`` outside ``K``, zero when inside."""
        s = self.slack(x)
        worst = 0.0
        for blk in self.blocks:
            part = s[blk.start : blk.stop].reshape(blk.count, blk.dim)
            gap = -part[:, 0] if blk.dim == 1 else np.linalg.norm(part[:, 1:], axis=1) - part[:, 0]
            worst = max(worst, float(np.max(gap, initial=0.0)))
        return worst

    def summary(self) -> str:
        return (
            f"{self.n} variables, {self.A.shape[0]} equalities, {self.nonneg_dim} orthant rows, "
            f"{sum(b.count for b in self.soc_blocks)} second-order cones"
        )


def _interleave(components: Sequence[sp.csr_matrix]) -> sp.csr_matrix:
    """Stack ``q`` row-aligned matrices so the rows of each cone end up adjacent."""
    q = len(components)
    rows = components[0].shape[0]
    stacked = sp.vstack(components, format="csr")
    order = (np.arange(rows)[:, None] + rows * np.arange(q)[None, :]).ravel()
    return stacked[order]


def _interleave_vec(components: Sequence[NDArray[np.float64]]) -> NDArray[np.float64]:
    return np.column_stack(components).ravel()


@attrs.define
class ProgramBuilder:
    """Mutable assembler for a ``ConeProgram``.

    .. code-block:: python

        from sailcone import ProgramBuilder

        builder = ProgramBuilder()
        x = builder.add_variable("x", 1)
        t = builder.add_variable("t", 1)
        builder.add_rotated("square", t.all, 1.0, x.all - 2.0)  # (x − 2)² <= t
        builder.minimize(t.all)
        program = builder.build()
    """

    _variables: list[VariableBlock] = attrs.field(factory=list)
    _eq: list[tuple[str, LinExpr]] = attrs.field(factory=list)
    _cones: list[tuple[ConeKind, str, int, list[LinExpr]]] = attrs.field(factory=list)
    _objective: LinExpr | None = attrs.field(default=None)
    meta: dict = attrs.field(factory=dict)

    @property
    def n_vars(self) -> int:
        return self._variables[-1].stop if self._variables else 0

    def add_variable(self, name: str, size: int, scale: float = 1.0) -> VariableBlock:
        if any(v.name == name for v in self._variables):
            raise ValueError(f"variable {name!r} declared twice")
        if size < 1:
            raise ValueError(f"variable {name!r} needs a positive size, got {size}")
        block = VariableBlock(name, self.n_vars, size, float(scale))
        self._variables.append(block)
        return block

    def add_equality(self, tag: str, expr: LinExpr) -> Self:
        """``expr == 0``."""
        self._eq.append((tag, expr))
        return self

    def add_nonneg(self, tag: str, expr: LinExpr) -> Self:
        """``expr >= 0`` row-wise."""
        self._cones.append(("nonnegative", tag, 1, [expr]))
        return self

    def add_soc(self, tag: str, t: LinExpr, xs: Sequence[LinExpr]) -> Self:
        """``‖(xs[0], xs[1], …)‖ <= t`` row-wise."""
        exprs = [t, *(t.coerce(x) for x in xs)]
        self._cones.append(("second-order", tag, len(exprs), exprs))
        return self

    def add_rotated(
        self, tag: str, v: LinExpr | ArrayLike, w: LinExpr | ArrayLike, u: LinExpr
    ) -> Self:
        """``u² <= v·w`` with ``v, w >= 0`` row-wise.

        Stored as the second-order cone ``‖(2u, v − w)‖ <= v + w``.
        """
        v_expr, w_expr = u.coerce(v), u.coerce(w)
        exprs = [v_expr + w_expr, 2.0 * u, v_expr - w_expr]
        self._cones.append(("rotated-second-order", tag, 3, exprs))
        return self

    def minimize(self, expr: LinExpr) -> Self:
        self._objective = expr if expr.rows == 1 else expr.sum()
        return self

    def build(self) -> ConeProgram:
        n = self.n_vars
        if n == 0:
            raise ValueError("program has no variables")
        objective = self._objective or LinExpr(1)

        equalities, a_parts, b_parts, row = [], [], [], 0
        for tag, expr in self._eq:
            a_parts.append(expr.matrix(n))
            b_parts.append(-expr.const)
            equalities.append(RowBlock(tag, row, expr.rows))
            row += expr.rows

        # orthant rows come first in K
        ordered = [c for c in self._cones if c[0] == "nonnegative"]
        ordered += [c for c in self._cones if c[0] != "nonnegative"]
        blocks, g_parts, h_parts, row = [], [], [], 0
        for kind, tag, dim, exprs in ordered:
            count = exprs[0].rows
            if dim == 1:
                g_parts.append(-exprs[0].matrix(n))
                h_parts.append(exprs[0].const)
            else:
                g_parts.append(-_interleave([e.matrix(n) for e in exprs]))
                h_parts.append(_interleave_vec([e.const for e in exprs]))
            blocks.append(ConeBlock(kind, tag, dim, count, row))
            row += dim * count

        A = sp.vstack(a_parts, format="csc") if a_parts else sp.csc_matrix((0, n))  # noqa: N806
        G = sp.vstack(g_parts, format="csc") if g_parts else sp.csc_matrix((0, n))  # noqa: N806
        program = ConeProgram(
            c=np.asarray(objective.matrix(n).todense()).ravel(),
            c0=float(objective.const[0]),
            A=A,
            b=np.concatenate(b_parts) if b_parts else np.zeros(0),
            G=G,
            h=np.concatenate(h_parts) if h_parts else np.zeros(0),
            blocks=tuple(blocks),
            equalities=tuple(equalities),
            variables=tuple(self._variables),
            meta=dict(self.meta),
        )
        logger.debug(f"built cone program: {program.summary()}")
        return program
