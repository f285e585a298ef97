"""Per-frame objective for the separation solver.

For unknowns theta = (x1, x2, u, v) over a normalized mixture frame y the
objective is

    fit1(x1) + fit2(x2) + lam * ||u*x1c + v*x2c - y||^2 + beta * neg(theta)

where fit_i measures how confidently the classifier assigns a spectrum to
source i, x?c is the center frame of a (possibly neighbor-stacked)
estimate, and neg() penalizes negative entries so magnitudes stay physical
without bound constraints. Each frame is minimized independently with a
limited-memory quasi-Newton solver; negatives are clamped to zero once,
after the solve.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from unmix.dnn import DnnModel, forward, input_gradient


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 200
    grad_tol: float = 1e-6
    history: int = 10

    def __post_init__(self) -> None:
        if self.max_iter < 1 or self.history < 1:
            raise ValueError("max_iter and history must be >= 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass(frozen=True)
class FrameProblem:
    """One frame's unknowns: normalized source spectra x1, x2 and gains u, v.

    y is the L2-normalized mixture frame. x1 and x2 may stack several
    neighbor frames (their length is an odd multiple of len(y)); the
    reconstruction term then applies to the center block only.
    """

    y: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    u: float
    v: float
    lam: float = 5.0
    beta: float = 3.0

    def __post_init__(self) -> None:
        for name in ("y", "x1", "x2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.y.ndim != 1 or self.x1.shape != self.x2.shape or self.x1.ndim != 1:
            raise ValueError("y, x1, x2 must be 1-D with x1 and x2 equal length")
        if self.x1.size % self.y.size != 0 or (self.x1.size // self.y.size) % 2 == 0:
            raise ValueError(
                f"estimate length {self.x1.size} must be an odd multiple of "
                f"the frame length {self.y.size}"
            )

    @property
    def stack_factor(self) -> int:
        return self.x1.size // self.y.size


@dataclass(frozen=True)
class EnergyBreakdown:
    """The four objective terms and their weighted total."""

    fit1: float
    fit2: float
    recon_err: float
    neg_penalty: float
    lam: float
    beta: float
    total: float


@dataclass(frozen=True)
class FrameSolution:
    problem: FrameProblem
    initial: EnergyBreakdown | None
    final: EnergyBreakdown | None
    n_iter: int
    skipped: bool = False
    converged: bool = True


def center_frame(x: np.ndarray, frame_len: int) -> np.ndarray:
    """Center block of a stacked column; identity when nothing is stacked."""
    if x.size == frame_len:
        return x
    half = (x.size // frame_len) // 2
    return x[half * frame_len : (half + 1) * frame_len]


def fitness_energy(model: DnnModel, x: np.ndarray, source: int) -> float:
    """Squared distance of the classifier outputs from source i's indicator:
    (1-f_i)^2 + f_j^2. Zero iff the network is certain the spectrum is
    source i; always below 2."""
    f, _ = forward(model, x)
    if source == 1:
        return float((1.0 - f[0]) ** 2 + f[1] ** 2)
    if source == 2:
        return float(f[0] ** 2 + (1.0 - f[1]) ** 2)
    raise ValueError(f"source must be 1 or 2, got {source}")


def error_energy(x1: np.ndarray, x2: np.ndarray, y: np.ndarray, u: float, v: float) -> float:
    """Squared reconstruction residual ||u*x1 + v*x2 - y||^2."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not x1.shape == x2.shape == y.shape:
        raise ValueError("x1, x2, y must share one shape")
    r = u * x1 + v * x2 - y
    return float(r @ r)


def negativity_penalty(theta: np.ndarray) -> float:
    """sum(min(theta_i, 0)^2): zero iff theta is elementwise nonnegative."""
    neg = np.minimum(np.asarray(theta, dtype=np.float64), 0.0)
    return float(neg @ neg)


def _pack(prob: FrameProblem) -> np.ndarray:
    return np.concatenate([prob.x1, prob.x2, [prob.u, prob.v]])


def _unpack(theta: np.ndarray, prob: FrameProblem) -> FrameProblem:
    d_in = prob.x1.size
    return replace(
        prob,
        x1=theta[:d_in],
        x2=theta[d_in : 2 * d_in],
        u=float(theta[-2]),
        v=float(theta[-1]),
    )


def _evaluate(
    model: DnnModel, theta: np.ndarray, y: np.ndarray, lam: float, beta: float
) -> tuple[EnergyBreakdown, np.ndarray]:
    """Energy breakdown plus its analytic gradient, sharing one pair of
    classifier passes."""
    d_in = (theta.size - 2) // 2
    x1 = theta[:d_in]
    x2 = theta[d_in : 2 * d_in]
    u, v = theta[-2], theta[-1]
    f1, acts1 = forward(model, x1)
    f2, acts2 = forward(model, x2)
    J1 = input_gradient(model, x1, acts1)
    J2 = input_gradient(model, x2, acts2)
    d = y.size
    x1c = center_frame(x1, d)
    x2c = center_frame(x2, d)
    resid = u * x1c + v * x2c - y
    neg = np.minimum(theta, 0.0)

    fit1 = float((1.0 - f1[0]) ** 2 + f1[1] ** 2)
    fit2 = float(f2[0] ** 2 + (1.0 - f2[1]) ** 2)
    recon = float(resid @ resid)
    neg_pen = float(neg @ neg)
    total = fit1 + fit2 + lam * recon + beta * neg_pen

    g_x1 = 2.0 * (f1[0] - 1.0) * J1[0] + 2.0 * f1[1] * J1[1] + 2.0 * beta * neg[:d_in]
    g_x2 = 2.0 * f2[0] * J2[0] + 2.0 * (f2[1] - 1.0) * J2[1] + 2.0 * beta * neg[d_in : 2 * d_in]
    half = (d_in // d) // 2
    center = slice(half * d, (half + 1) * d)
    g_x1[center] += 2.0 * lam * u * resid
    g_x2[center] += 2.0 * lam * v * resid
    g_u = 2.0 * lam * float(x1c @ resid) + 2.0 * beta * neg[-2]
    g_v = 2.0 * lam * float(x2c @ resid) + 2.0 * beta * neg[-1]
    grad = np.concatenate([g_x1, g_x2, [g_u, g_v]])
    breakdown = EnergyBreakdown(fit1, fit2, recon, neg_pen, lam, beta, total)
    return breakdown, grad


def total_energy(model: DnnModel, prob: FrameProblem) -> EnergyBreakdown:
    """Assemble the four terms (two classifier passes per call)."""
    return _evaluate(model, _pack(prob), prob.y, prob.lam, prob.beta)[0]


def total_gradient(model: DnnModel, prob: FrameProblem) -> np.ndarray:
    """Analytic gradient with respect to (x1, x2, u, v), length 2*len(x1)+2."""
    return _evaluate(model, _pack(prob), prob.y, prob.lam, prob.beta)[1]


def _clamped(prob: FrameProblem) -> FrameProblem:
    return replace(
        prob,
        x1=np.maximum(prob.x1, 0.0),
        x2=np.maximum(prob.x2, 0.0),
        u=max(prob.u, 0.0),
        v=max(prob.v, 0.0),
    )


def solve_frame(
    model: DnnModel, prob: FrameProblem, cfg: SolverConfig | None = None
) -> FrameSolution:
    """Minimize the frame objective with L-BFGS from the given initialization.

    Silent frames (||y|| = 0) are skipped and come back as all zeros. The
    best finite iterate seen is returned, so the final energy never exceeds
    the initial one; negative entries are clamped to zero afterwards.
    """
    cfg = cfg or SolverConfig()
    if model.input_dim != prob.x1.size:
        raise ValueError(
            f"classifier input size {model.input_dim} does not match "
            f"estimate length {prob.x1.size}"
        )
    if np.linalg.norm(prob.y) == 0.0:
        zeros = replace(
            prob,
            x1=np.zeros_like(prob.x1),
            x2=np.zeros_like(prob.x2),
            u=0.0,
            v=0.0,
        )
        return FrameSolution(zeros, None, None, 0, skipped=True)

    theta0 = _pack(prob)
    initial, grad0 = _evaluate(model, theta0, prob.y, prob.lam, prob.beta)
    if np.max(np.abs(grad0)) < cfg.grad_tol:
        return FrameSolution(_clamped(prob), initial, initial, 0)

    best = {"total": initial.total, "theta": theta0, "breakdown": initial}

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        breakdown, grad = _evaluate(model, theta, prob.y, prob.lam, prob.beta)
        if np.isfinite(breakdown.total):
            if breakdown.total < best["total"]:
                best["total"] = breakdown.total
                best["theta"] = theta.copy()
                best["breakdown"] = breakdown
            return breakdown.total, grad
        # Push the line search back toward finite iterates.
        return 1e30, np.zeros_like(theta)

    result = minimize(
        objective,
        theta0,
        jac=True,
        method="L-BFGS-B",
        options={
            "maxcor": cfg.history,
            "maxiter": cfg.max_iter,
            "gtol": cfg.grad_tol,
            "ftol": 1e-12,
        },
    )
    solved = _clamped(_unpack(best["theta"], prob))
    return FrameSolution(
        solved,
        initial,
        best["breakdown"],
        int(result.nit),
        converged=bool(result.success),
    )
