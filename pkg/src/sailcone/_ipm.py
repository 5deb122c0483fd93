"""Sparse homogeneous self-dual interior-point method for ``ConeProgram``.

Primal ``min c'x  s.t.  Ax = b, Gx + s = h, s ∈ K`` and dual
``max −b'y − h'z  s.t.  A'y + G'z + c = 0, z ∈ K`` are embedded with ``τ, κ`` so that
infeasibility and unboundedness come out as certificates instead of divergence.
Nesterov-Todd scaling, Mehrotra predictor-corrector steps and Ruiz equilibration.
"""

from __future__ import annotations

import logging
import time
from typing import Literal

import attrs
import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.sparse.linalg import splu

from sailcone._cone import ConeProgram

logger = logging.getLogger(__name__)

Status = Literal["optimal", "infeasible", "unbounded", "numerical-limit"]

STEP_FRACTION = 0.99
STATIC_REG = 1e-8
REFINE_STEPS = 3
REFINE_TOL = 1e-14
FALLBACK_TOL = 1e-9
EQUILIBRATION_PASSES = 15


@attrs.define(frozen=True)
class IpmResult:
    status: Status
    x: NDArray[np.float64]
    y: NDArray[np.float64]
    z: NDArray[np.float64]
    s: NDArray[np.float64]
    iterations: int
    solve_time: float
    pres: float
    dres: float
    gap: float


@attrs.define(frozen=True)
class _SocLayout:
    start: int
    dim: int
    count: int

    @property
    def stop(self) -> int:
        return self.start + self.dim * self.count

    def view(self, v: NDArray[np.float64]) -> NDArray[np.float64]:
        return v[self.start : self.stop].reshape(self.count, self.dim)


@attrs.define(frozen=True)
class _Cones:
    """Jordan algebra of ``R+^l × Q × … × Q`` on flat vectors."""

    l: int  # noqa: E741
    socs: tuple[_SocLayout, ...]
    m: int

    @classmethod
    def of(cls, program: ConeProgram) -> _Cones:
        l = program.nonneg_dim  # noqa: E741
        socs = tuple(_SocLayout(b.start, b.dim, b.count) for b in program.soc_blocks)
        return cls(l, socs, len(program.h))

    @property
    def degree(self) -> int:
        return self.l + sum(s.count for s in self.socs)

    def identity(self) -> NDArray[np.float64]:
        e = np.zeros(self.m)
        e[: self.l] = 1.0
        for soc in self.socs:
            soc.view(e)[:, 0] = 1.0
        return e

    def product(self, u: NDArray, v: NDArray) -> NDArray[np.float64]:
        out = np.empty(self.m)
        out[: self.l] = u[: self.l] * v[: self.l]
        for soc in self.socs:
            a, b, o = soc.view(u), soc.view(v), soc.view(out)
            o[:, 0] = np.einsum("ij,ij->i", a, b)
            o[:, 1:] = a[:, :1] * b[:, 1:] + b[:, :1] * a[:, 1:]
        return out

    def divide(self, lam: NDArray, d: NDArray) -> NDArray[np.float64]:
        """Solve ``lam ∘ x = d`` for ``x``."""
        out = np.empty(self.m)
        out[: self.l] = d[: self.l] / lam[: self.l]
        for soc in self.socs:
            a, b, o = soc.view(lam), soc.view(d), soc.view(out)
            a0, a1 = a[:, 0], a[:, 1:]
            det = a0**2 - np.einsum("ij,ij->i", a1, a1)
            o[:, 0] = (a0 * b[:, 0] - np.einsum("ij,ij->i", a1, b[:, 1:])) / det
            o[:, 1:] = (b[:, 1:] - o[:, :1] * a1) / a0[:, None]
        return out

    def min_eig(self, u: NDArray) -> float:
        values = [u[: self.l]] if self.l else []
        values += [soc.view(u)[:, 0] - np.linalg.norm(soc.view(u)[:, 1:], axis=1) for soc in self.socs]
        return float(np.min(np.concatenate(values))) if values else 0.0

    def max_step(self, u: NDArray, du: NDArray) -> float:
        """Largest ``α`` keeping ``u + α du`` in ``K`` (``u`` interior)."""
        alpha = np.inf
        if self.l:
            neg = du[: self.l] < 0.0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-u[: self.l][neg] / du[: self.l][neg])))
        for soc in self.socs:
            x, d = soc.view(u), soc.view(du)
            c = x[:, 0] ** 2 - np.einsum("ij,ij->i", x[:, 1:], x[:, 1:])
            b = 2.0 * (x[:, 0] * d[:, 0] - np.einsum("ij,ij->i", x[:, 1:], d[:, 1:]))
            a = d[:, 0] ** 2 - np.einsum("ij,ij->i", d[:, 1:], d[:, 1:])
            alpha = min(alpha, _first_root(a, b, c))
        return alpha

    def scaling(self, s: NDArray, z: NDArray) -> _NTScaling:
        return _NTScaling.of(self, s, z)


def _first_root(a: NDArray, b: NDArray, c: NDArray) -> float:
    """Smallest positive root of ``a α² + b α + c`` over rows with ``c > 0``; ``inf`` if none."""
    roots = np.full(a.shape, np.inf)
    linear = np.abs(a) <= 1e-14 * np.maximum(np.abs(b), 1e-300)
    lin_hit = linear & (b < 0.0)
    roots[lin_hit] = -c[lin_hit] / b[lin_hit]

    quad = ~linear
    disc = b**2 - 4.0 * a * c
    real = quad & (disc >= 0.0)
    if np.any(real):
        sq = np.sqrt(disc[real])
        q = -0.5 * (b[real] + np.copysign(sq, b[real]))
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(a[real] != 0.0, q / a[real], np.inf)
            r2 = np.where(q != 0.0, c[real] / q, np.inf)
        r1 = np.where(r1 > 0.0, r1, np.inf)
        r2 = np.where(r2 > 0.0, r2, np.inf)
        roots[real] = np.minimum(r1, r2)
    return float(np.min(roots, initial=np.inf))


@attrs.define(frozen=True)
class _NTScaling:
    """Symmetric Nesterov-Todd scaling ``W`` with ``W z = W⁻¹ s = λ``."""

    cones: _Cones
    d: NDArray[np.float64]
    eta: list[NDArray[np.float64]]
    w: list[NDArray[np.float64]]
    lam: NDArray[np.float64]

    @classmethod
    def of(cls, cones: _Cones, s: NDArray, z: NDArray) -> _NTScaling:
        l = cones.l  # noqa: E741
        d = np.sqrt(s[:l] / z[:l])
        lam = np.empty(cones.m)
        lam[:l] = np.sqrt(s[:l] * z[:l])
        etas, ws = [], []
        for soc in cones.socs:
            sv, zv = soc.view(s), soc.view(z)
            s_norm = np.sqrt(sv[:, 0] ** 2 - np.einsum("ij,ij->i", sv[:, 1:], sv[:, 1:]))
            z_norm = np.sqrt(zv[:, 0] ** 2 - np.einsum("ij,ij->i", zv[:, 1:], zv[:, 1:]))
            s_bar = sv / s_norm[:, None]
            z_bar = zv / z_norm[:, None]
            gamma = np.sqrt(0.5 * (1.0 + np.einsum("ij,ij->i", s_bar, z_bar)))
            w_bar = s_bar.copy()
            w_bar[:, 0] += z_bar[:, 0]
            w_bar[:, 1:] -= z_bar[:, 1:]
            w_bar /= 2.0 * gamma[:, None]
            etas.append(np.sqrt(s_norm / z_norm))
            ws.append(w_bar)
        scaling = cls(cones, d, etas, ws, lam)
        lam[l:] = scaling.apply(z)[l:]
        return scaling

    def _hyperbolic(self, w: NDArray, v: NDArray) -> NDArray[np.float64]:
        w0, w1 = w[:, 0], w[:, 1:]
        dot = np.einsum("ij,ij->i", w1, v[:, 1:])
        out = np.empty_like(v)
        out[:, 0] = w0 * v[:, 0] + dot
        out[:, 1:] = v[:, :1] * w1 + v[:, 1:] + (dot / (1.0 + w0))[:, None] * w1
        return out

    def apply(self, v: NDArray) -> NDArray[np.float64]:
        """``W v``."""
        out = np.empty(self.cones.m)
        l = self.cones.l  # noqa: E741
        out[:l] = self.d * v[:l]
        for soc, eta, w in zip(self.cones.socs, self.eta, self.w, strict=True):
            soc.view(out)[:] = eta[:, None] * self._hyperbolic(w, soc.view(v))
        return out

    def apply_inv(self, v: NDArray) -> NDArray[np.float64]:
        """``W⁻¹ v`` using ``W̄⁻¹ = J W̄ J``."""
        out = np.empty(self.cones.m)
        l = self.cones.l  # noqa: E741
        out[:l] = v[:l] / self.d
        for soc, eta, w in zip(self.cones.socs, self.eta, self.w, strict=True):
            jv = soc.view(v).copy()
            jv[:, 1:] *= -1.0
            res = self._hyperbolic(w, jv)
            res[:, 1:] *= -1.0
            soc.view(out)[:] = res / eta[:, None]
        return out

    def gram(self) -> sp.csc_matrix:
        """Block-diagonal ``W'W = W²``; each cone block is ``η² (2 w̄ w̄' − J)``."""
        l = self.cones.l  # noqa: E741
        rows, cols, data = [np.arange(l)], [np.arange(l)], [self.d**2]
        for soc, eta, w in zip(self.cones.socs, self.eta, self.w, strict=True):
            q = soc.dim
            blocks = 2.0 * w[:, :, None] * w[:, None, :]
            blocks[:, 0, 0] -= 1.0
            blocks[:, np.arange(1, q), np.arange(1, q)] += 1.0
            blocks *= (eta**2)[:, None, None]
            base = soc.start + q * np.arange(soc.count)
            r = base[:, None, None] + np.arange(q)[None, :, None]
            c = base[:, None, None] + np.arange(q)[None, None, :]
            rows.append(np.broadcast_to(r, blocks.shape).ravel())
            cols.append(np.broadcast_to(c, blocks.shape).ravel())
            data.append(blocks.ravel())
        m = self.cones.m
        return sp.csc_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
        )


@attrs.define(frozen=True)
class _Equilibrated:
    """``Ã = E_A A D``, ``G̃ = E_G G D`` with one scalar per cone on the ``G`` side."""

    A: sp.csc_matrix
    G: sp.csc_matrix
    b: NDArray[np.float64]
    h: NDArray[np.float64]
    c: NDArray[np.float64]
    D: NDArray[np.float64]
    E_A: NDArray[np.float64]
    E_G: NDArray[np.float64]


def _row_inf_norms(mat: sp.csr_matrix) -> NDArray[np.float64]:
    if mat.shape[0] == 0:
        return np.zeros(0)
    return np.asarray(abs(mat).max(axis=1).todense()).ravel()


def _cone_uniform(norms: NDArray[np.float64], cones: _Cones) -> NDArray[np.float64]:
    out = norms.copy()
    for soc in cones.socs:
        view = soc.view(out)
        view[:] = view.max(axis=1, keepdims=True)
    return out


def _equilibrate(program: ConeProgram, cones: _Cones) -> _Equilibrated:
    A, G = program.A.tocsr(), program.G.tocsr()  # noqa: N806
    n, p, m = program.n, A.shape[0], G.shape[0]
    D, E_A, E_G = np.ones(n), np.ones(p), np.ones(m)  # noqa: N806
    for _ in range(EQUILIBRATION_PASSES):
        stacked = sp.vstack([A, G], format="csc")
        col = np.asarray(abs(stacked).max(axis=0).todense()).ravel() if p + m else np.ones(n)
        col = np.where(col > 0.0, 1.0 / np.sqrt(col), 1.0)
        row_a = _row_inf_norms(A)
        row_a = np.where(row_a > 0.0, 1.0 / np.sqrt(row_a), 1.0)
        row_g = _cone_uniform(_row_inf_norms(G), cones)
        row_g = np.where(row_g > 0.0, 1.0 / np.sqrt(row_g), 1.0)
        A = sp.diags(row_a) @ A @ sp.diags(col)  # noqa: N806
        G = sp.diags(row_g) @ G @ sp.diags(col)  # noqa: N806
        D, E_A, E_G = D * col, E_A * row_a, E_G * row_g  # noqa: N806
    return _Equilibrated(
        A=A.tocsc(),
        G=G.tocsc(),
        b=E_A * program.b,
        h=E_G * program.h,
        c=D * program.c,
        D=D,
        E_A=E_A,
        E_G=E_G,
    )


@attrs.define
class _Kkt:
    """Factored quasi-definite system ``[[0, A', G'], [A, 0, 0], [G, 0, −W'W]]``.

    The ``A``/``G`` part is assembled once and each factorization swaps in the ``W'W`` block.
    Factors use a symmetric ordering with diagonal pivots and fall back to partial pivoting
    when refinement cannot recover the accuracy.
    """

    A: sp.csc_matrix
    G: sp.csc_matrix
    n: int
    p: int
    m: int
    _static: sp.csc_matrix = attrs.field(init=False)
    _reg: sp.dia_matrix = attrs.field(init=False)
    _exact: sp.csc_matrix | None = None
    _regularized: sp.csc_matrix | None = None
    _lu: object = None
    _partial_pivoting: bool = False

    def __attrs_post_init__(self) -> None:
        n, p, m = self.n, self.p, self.m
        self._static = sp.bmat(
            [[None, self.A.T, self.G.T], [self.A, None, None], [self.G, None, None]], format="csc"
        )
        self._reg = sp.diags(
            np.concatenate([np.full(n, STATIC_REG), np.full(p, -STATIC_REG), np.full(m, -STATIC_REG)])
        )

    def factor(self, gram: sp.csc_matrix) -> None:
        top = self.n + self.p
        self._exact = (self._static - sp.block_diag([sp.csc_matrix((top, top)), gram], format="csc")).tocsc()
        self._regularized = (self._exact + self._reg).tocsc()
        try:
            self._lu = splu(
                self._regularized,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
            self._partial_pivoting = False
        except RuntimeError:
            self._refactor_with_partial_pivoting()

    def _refactor_with_partial_pivoting(self) -> None:
        logger.debug("kkt: diagonal pivots failed, refactoring with partial pivoting")
        self._lu = splu(self._regularized, permc_spec="COLAMD")
        self._partial_pivoting = True

    def _refined(self, rhs: NDArray[np.float64]) -> tuple[NDArray[np.float64], float]:
        sol = self._lu.solve(rhs)
        residual = rhs - self._exact @ sol
        for _ in range(REFINE_STEPS):
            if _norm(residual) <= REFINE_TOL * max(_norm(rhs), 1.0):
                break
            sol = sol + self._lu.solve(residual)
            residual = rhs - self._exact @ sol
        return sol, _norm(residual) / max(_norm(rhs), 1.0)

    def solve(self, rhs: NDArray[np.float64]) -> NDArray[np.float64]:
        sol, error = self._refined(rhs)
        if not self._partial_pivoting and not (np.isfinite(error) and error <= FALLBACK_TOL):
            self._refactor_with_partial_pivoting()
            sol, _ = self._refined(rhs)
        return sol

    def split(self, v: NDArray) -> tuple[NDArray, NDArray, NDArray]:
        n, p = self.n, self.p
        return v[:n], v[n : n + p], v[n + p :]


@attrs.define(frozen=True)
class IpmSettings:
    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    max_iter: int = 200


def _norm(v: NDArray) -> float:
    return float(np.linalg.norm(v)) if v.size else 0.0


def solve_ipm(program: ConeProgram, settings: IpmSettings | None = None) -> IpmResult:  # noqa: C901, PLR0915
    """Solve ``program`` with the bundled interior-point method.

    .. code-block:: python

        from sailcone import solve_ipm

        result = solve_ipm(program)
        result.status  # "optimal"
    """
    settings = settings or IpmSettings()
    start_time = time.perf_counter()
    cones = _Cones.of(program)
    eq = _equilibrate(program, cones)
    A, G, b, h, c = eq.A, eq.G, eq.b, eq.h, eq.c  # noqa: N806
    n, p, m = program.n, A.shape[0], G.shape[0]
    kkt = _Kkt(A, G, n, p, m)
    e = cones.identity()

    def original(
        x: NDArray, y: NDArray, z: NDArray, s: NDArray, tau: float
    ) -> tuple[NDArray, NDArray, NDArray, NDArray]:
        return eq.D * x / tau, eq.E_A * y / tau, eq.E_G * z / tau, s / eq.E_G / tau

    def finish(status: Status, x: NDArray, y: NDArray, z: NDArray, s: NDArray, it: int, info: tuple) -> IpmResult:
        elapsed = time.perf_counter() - start_time
        logger.debug(f"ipm finished: {status} after {it} iterations in {elapsed:.3f} s")
        return IpmResult(status, x, y, z, s, it, elapsed, *info)

    # initial point from two least-squares solves with W = I
    kkt.factor(sp.identity(m, format="csc"))
    x, y, z0 = kkt.split(kkt.solve(np.concatenate([np.zeros(n), b, h])))
    s = -z0
    _, _, z = kkt.split(kkt.solve(np.concatenate([-c, np.zeros(p), np.zeros(m)])))
    for vec in (s, z):
        shift = cones.min_eig(vec)
        if shift <= 0.0:
            vec += (1.0 - shift) * e
    tau, kappa = 1.0, 1.0

    b_norm, h_norm, c_norm = max(1.0, _norm(program.b)), max(1.0, _norm(program.h)), max(1.0, _norm(program.c))
    info = (np.inf, np.inf, np.inf)
    for it in range(settings.max_iter + 1):
        # residuals of the embedding
        r_x = A.T @ y + G.T @ z + c * tau
        r_y = -(A @ x) + b * tau
        r_z = -(G @ x) + h * tau - s
        r_tau = -(c @ x) - (b @ y) - (h @ z) - kappa
        mu = (s @ z + kappa * tau) / (cones.degree + 1)

        xo, yo, zo, so = original(x, y, z, s, tau)
        pres = max(
            _norm(program.A @ xo - program.b) / b_norm,
            _norm(program.G @ xo + so - program.h) / h_norm,
        )
        dres = _norm(program.A.T @ yo + program.G.T @ zo + program.c) / c_norm
        pcost, dcost = float(program.c @ xo), float(-(program.b @ yo) - program.h @ zo)
        gap = float(so @ zo)
        rel_gap = gap / max(1.0, min(abs(pcost), abs(dcost)))
        info = (pres, dres, gap)
        logger.debug(
            f"ipm {it:3d}: pcost {pcost:+.6e} dcost {dcost:+.6e} gap {gap:.2e} "
            f"pres {pres:.2e} dres {dres:.2e} k/t {kappa / tau:.2e}"
        )
        if pres < settings.feastol and dres < settings.feastol and (gap < settings.abstol or rel_gap < settings.reltol):
            return finish("optimal", xo, yo, zo, so, it, info)

        hz_by = float(h @ z + b @ y)
        if hz_by < 0.0:
            cert = _norm(A.T @ y + G.T @ z) / -hz_by
            if cert < settings.feastol:
                scale = 1.0 / -hz_by
                return finish(
                    "infeasible", np.full(n, np.nan), eq.E_A * y * scale, eq.E_G * z * scale,
                    np.full(m, np.nan), it, info,
                )
        cx = float(c @ x)
        if cx < 0.0:
            cert = max(_norm(A @ x), _norm(G @ x + s)) / -cx
            if cert < settings.feastol:
                scale = 1.0 / -cx
                return finish(
                    "unbounded", eq.D * x * scale, np.full(p, np.nan), np.full(m, np.nan),
                    s / eq.E_G * scale, it, info,
                )
        if it == settings.max_iter:
            break

        try:
            w = cones.scaling(s, z)
            kkt.factor(w.gram())
            p1x, p1y, p1z = kkt.split(kkt.solve(np.concatenate([-c, b, h])))
            lam = w.lam

            def direction(
                sigma_c: float, d_s: NDArray, d_kappa: float, w: _NTScaling = w
            ) -> tuple[NDArray, NDArray, NDArray, NDArray, float, float]:
                rhs = np.concatenate(
                    [
                        -(1.0 - sigma_c) * r_x,
                        (1.0 - sigma_c) * r_y,
                        (1.0 - sigma_c) * r_z + w.apply(cones.divide(lam, d_s)),
                    ]
                )
                p2x, p2y, p2z = kkt.split(kkt.solve(rhs))
                dtau = (
                    -(1.0 - sigma_c) * r_tau - d_kappa / tau + c @ p2x + b @ p2y + h @ p2z
                ) / (kappa / tau - c @ p1x - b @ p1y - h @ p1z)
                dx, dy, dz = p2x + dtau * p1x, p2y + dtau * p1y, p2z + dtau * p1z
                ds = -w.apply(cones.divide(lam, d_s) + w.apply(dz))
                dkappa = -(d_kappa + kappa * dtau) / tau
                return dx, dy, dz, ds, float(dtau), float(dkappa)

            def step_length(dz: NDArray, ds: NDArray, dtau: float, dkappa: float) -> float:
                alpha = min(cones.max_step(s, ds), cones.max_step(z, dz))
                if dtau < 0.0:
                    alpha = min(alpha, -tau / dtau)
                if dkappa < 0.0:
                    alpha = min(alpha, -kappa / dkappa)
                return alpha

            # predictor
            d_s = cones.product(lam, lam)
            dx, dy, dz, ds, dtau, dkappa = direction(0.0, d_s, kappa * tau)
            alpha_aff = min(1.0, step_length(dz, ds, dtau, dkappa))
            sigma = float(np.clip((1.0 - alpha_aff) ** 3, 0.0, 1.0))

            # corrector
            d_s = d_s + cones.product(w.apply_inv(ds), w.apply(dz)) - sigma * mu * e
            d_kappa = kappa * tau + dkappa * dtau - sigma * mu
            dx, dy, dz, ds, dtau, dkappa = direction(sigma, d_s, d_kappa)
            alpha = min(1.0, STEP_FRACTION * step_length(dz, ds, dtau, dkappa))
        except (RuntimeError, FloatingPointError, ValueError) as exc:
            logger.warning(f"ipm stopped at iteration {it}: {exc}")
            break
        if not np.isfinite(alpha) or alpha <= 1e-12:
            logger.warning(f"ipm stalled at iteration {it} (step {alpha:.1e})")
            break

        x, y, z, s = x + alpha * dx, y + alpha * dy, z + alpha * dz, s + alpha * ds
        tau, kappa = tau + alpha * dtau, kappa + alpha * dkappa

    xo, yo, zo, so = original(x, y, z, s, tau)
    return finish("numerical-limit", xo, yo, zo, so, it, info)
