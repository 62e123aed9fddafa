"""Weighted Levenberg-Marquardt search for splitting schemes.

Parameters are the independent entries of a symmetric scheme (see
:func:`trotterkit.scheme_core.symmetric_to_stage`) with the outermost A and
B entries eliminated so that the exponents of A and of B each sum to one.
The residual vector stacks the Lie-basis coefficients of degrees 3, 5, 7 and
is weighted per order: w_2 on degree 3, w_4 on degree 5, w_6 on degree 7.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DomainError, NonLieComponentError, OptimizationError
from .lie_series import build_commutator_basis, offset
from .scheme_core import (
    TrotterScheme,
    compute_error_coefficients,
    constraint_count,
    stage_to_symmetric,
    symmetric_to_stage,
    validate_order_cycles,
)

log = logging.getLogger(__name__)

ORDER_DEGREE = {0: 1, 2: 3, 4: 5, 6: 7}
ROUNDOFF = 1e-10  # relative chi^2 change below which gain ratios are noise


def default_weights(q: int, n: int) -> dict[int, float]:
    """Per-order weights {k: w_k} used in the full chi^2 phase."""
    if n == 2:
        return {2: 1.0}
    if 3 <= q <= 6:
        w = {2: 1.0, 4: 0.1}
    elif 7 <= q <= 8:
        w = {2: 1.0, 4: 100.0}
    else:
        w = {2: 1.0, 4: 500.0, 6: 1.0}
    # the leading order must be present for the first phase
    w.setdefault(n, 1.0)
    return {k: v for k, v in w.items() if k <= n}


class Parameterization:
    """Affine map from free parameters to the exponents of a symmetric scheme.

    With ``eliminate`` the outermost A and B entries are solved from the
    sum rules; otherwise all q+1 symmetric entries are free and the degree-1
    coefficients join the residual vector.
    """

    def __init__(self, q: int, eliminate: bool = True):
        if q < 1:
            raise DomainError("q must be positive")
        self.q = q
        self.eliminate = eliminate
        n_sym = q + 1
        if q % 2 == 0:
            n_a = q // 2 + 1
        else:
            n_a = (q + 1) // 2
        self.n_a = n_a
        self.a_out = n_a - 1     # outermost A entry in the symmetric vector
        self.b_out = n_sym - 1   # outermost B entry
        if eliminate:
            self.free_idx = np.array([i for i in range(n_sym) if i not in (self.a_out, self.b_out)],
                                     dtype=int)
        else:
            self.free_idx = np.arange(n_sym)
        self.n_free = self.free_idx.size
        # affine map p_free -> exponents
        x0 = self._exponents_from_symmetric(self._full(np.zeros(self.n_free)))
        cols = [self._exponents_from_symmetric(self._full(e)) - x0 for e in np.eye(self.n_free)]
        self.x0 = x0
        self.T = np.array(cols).T.reshape(2 * q + 1, self.n_free)
        self.letters = np.zeros(2 * q + 1, dtype=np.int64)
        self.letters[1::2] = 1

    def _full(self, p_free):
        p_free = np.asarray(p_free)
        p = np.zeros(self.q + 1, dtype=p_free.dtype)
        p[self.free_idx] = p_free
        if self.eliminate:
            a = p[:self.n_a]
            b = p[self.n_a:]
            p[self.a_out] = 0.5 - (a.sum() - a[-1])
            p[self.b_out] = 0.5 - (b.sum() - b[-1])
        return p

    def _exponents_from_symmetric(self, p):
        a, b = symmetric_to_stage(p, self.q)
        x = np.empty(2 * self.q + 1, dtype=np.result_type(a, b))
        x[0::2] = a
        x[1::2] = b
        return x

    def symmetric(self, p_free) -> np.ndarray:
        return self._full(p_free)

    def exponents(self, p_free) -> np.ndarray:
        return self.x0 + self.T @ np.asarray(p_free)

    def scheme(self, p_free, **meta) -> TrotterScheme:
        x = self.exponents(p_free)
        return TrotterScheme(x[0::2], x[1::2], **meta)

    def from_scheme(self, scheme: TrotterScheme) -> np.ndarray:
        if scheme.q != self.q:
            raise DomainError(f"scheme has q={scheme.q}, parameterization q={self.q}")
        p = stage_to_symmetric(scheme.stage_a, scheme.stage_b)
        return p[self.free_idx]

    def origin(self) -> np.ndarray:
        """Free parameters of the uniform scheme c_i = d_i = 1/(2q)."""
        c = np.full(self.q, 1.0 / (2 * self.q))
        return self.from_scheme(TrotterScheme.from_ramp(c))


class CoefficientModel:
    """Residual vector y(p) and its exact Jacobian for one (q, degrees).

    ``degrees`` lists the odd degrees stacked in y.  Jacobians are obtained
    by forward tangent propagation through the compiled series kernel.
    """

    def __init__(self, q: int, degrees=(3, 5), eliminate: bool = True):
        self.param = Parameterization(q, eliminate)
        self.q = q
        self.degrees = tuple(degrees) if eliminate else tuple(sorted({1, *degrees}))
        self.max_degree = max(self.degrees)
        self.bases = [build_commutator_basis(d) for d in self.degrees]
        self.sizes = [b.size for b in self.bases]
        self.slices = {}
        start = 0
        for d, s in zip(self.degrees, self.sizes):
            self.slices[d] = slice(start, start + s)
            start += s
        self.n_res = start

    def _project(self, L):
        parts = []
        for d, b in zip(self.degrees, self.bases):
            v = b.solver @ L[offset(d):offset(d + 1)]
            if d == 1:
                v = v - 1.0
            parts.append(v)
        return np.concatenate(parts, axis=0)

    def residuals(self, p_free) -> np.ndarray:
        x = self.param.exponents(p_free)
        L, _ = _kernels.log_of_product(x, self.param.letters, self.max_degree)
        return self._project(L)

    def residuals_and_jacobian(self, p_free):
        p_free = np.asarray(p_free)
        x = self.param.exponents(p_free)
        xt = self.param.T.astype(x.dtype)
        L, Lt = _kernels.log_of_product(x, self.param.letters, self.max_degree, xt)
        y = self._project(L)
        J = np.concatenate([b.solver @ Lt[offset(d):offset(d + 1)]
                            for d, b in zip(self.degrees, self.bases)], axis=0)
        return y, J

    def weight_vector(self, weights: dict[int, float], w0: float = 1.0) -> np.ndarray:
        w = np.zeros(self.n_res)
        for d in self.degrees:
            k = d - 1
            w[self.slices[d]] = w0 if d == 1 else weights.get(k, 0.0)
        return w

    def err(self, y, order: int) -> float:
        d = order + 1
        return float(np.linalg.norm(y[self.slices[d]]))


def jacobian(p_free, q: int, degrees=(3, 5, 7)) -> np.ndarray:
    """Exact Jacobian of the stacked coefficients with respect to free
    parameters (outermost entries eliminated)."""
    return CoefficientModel(q, degrees).residuals_and_jacobian(p_free)[1]


def eliminate_sum_constraints(p_free, q: int, **meta) -> TrotterScheme:
    """Scheme from free parameters with the outermost entries solved from
    the sum rules."""
    return Parameterization(q).scheme(p_free, **meta)


# Levenberg-Marquardt

@dataclass(frozen=True)
class LMConfig:
    """Hyperparameters of the two-phase search.

    ``weights`` maps an even order k to w_k; ``None`` selects the defaults of
    :func:`default_weights`.  Damping follows the usual multiplicative
    schedule: divide by ``damping_down`` after an accepted step, multiply by
    ``damping_up`` after a rejected one, clipped to ``damping_bounds``.
    """

    weights: dict | None = None
    initial_damping: float = 1e-3
    constraint_damping: float = 0.25
    damping_up: float = 11.0
    damping_down: float = 9.0
    damping_bounds: tuple = (1e-7, 1e7)
    acceptance: float = 0.1
    max_iterations: int = 5000
    constraint_iterations: int = 1000
    step_tolerance: float = 1e-15
    gradient_tolerance: float = 1e-12
    constraint_tolerance: float = 1e-13
    divergence_bound: float = 1e3
    init_sigma: float = 1.0
    init_mean: float | None = None
    n_starts: int = 100
    rng_seed: int = 0
    real_only: bool = True
    dedup_distance: float = 1e-8
    eliminate: bool = True
    w0: float = 1.0
    workers: int = 1
    refine_iterations: int = 20
    manifold_polish: bool = False
    polish_iterations: int = 100

    def __post_init__(self):
        if self.weights is not None and any(w < 0 for w in self.weights.values()):
            raise DomainError("weights must be nonnegative")
        if not 0.5 <= self.init_sigma <= 2.0 and not self._sigma_override:
            raise DomainError("init_sigma outside [0.5, 2.0]; pass it via LMConfig.with_sigma to override")

    _sigma_override: bool = field(default=False, repr=False)

    def with_sigma(self, sigma: float) -> "LMConfig":
        """Copy with an arbitrary init_sigma (bypasses the range check)."""
        return replace(self, init_sigma=sigma, _sigma_override=True)

    def resolved_weights(self, q: int, n: int) -> dict[int, float]:
        return dict(self.weights) if self.weights is not None else default_weights(q, n)

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if not k.startswith("_")}
        d["damping_bounds"] = list(self.damping_bounds)
        return d


@dataclass
class PhaseResult:
    p: np.ndarray
    y: np.ndarray
    chi2: float
    damping: float
    iterations: int
    reason: str
    hessian: np.ndarray
    history: list = field(default_factory=list)


@dataclass
class OptimizationRun:
    """Record of one two-phase optimization."""

    q: int
    n: int
    phase: str = "FullChi2"
    frozen_hessian: np.ndarray | None = None
    p: np.ndarray | None = None
    phases: list = field(default_factory=list)
    termination: str = ""

    def freeze(self, H: np.ndarray) -> None:
        if self.frozen_hessian is not None:
            raise OptimizationError("Hessian already frozen for this run")
        H = np.array(H)
        H.setflags(write=False)
        self.frozen_hessian = H


def lm_step(J, y, weights, damping: float, frozen_hessian=None,
            damping_up: float = 11.0, max_damping: float = 1e7):
    """Solve [H + damping diag(H)] h = -J^T W y with H = J^T W J, or the
    frozen matrix when given.  Returns ``(h, damping_used)``."""
    J = np.asarray(J)
    y = np.asarray(y)
    w = np.asarray(weights, dtype=float)
    g = J.T @ (w * y)
    H = J.T @ (w[:, None] * J) if frozen_hessian is None else np.asarray(frozen_hessian)
    if not np.any(g):
        return np.zeros(J.shape[1]), damping
    D = np.diag(np.diag(H))
    lam = damping
    while True:
        A = H + lam * D
        try:
            h = np.linalg.solve(A, -g)
            if np.all(np.isfinite(h)):
                return h, lam
        except np.linalg.LinAlgError:
            pass
        lam = max(lam, 1e-12) * damping_up
        if lam > max_damping:
            raise OptimizationError("LM system stays singular under damping")


class _RealView:
    """Real least-squares view of a model with complex parameters.

    Complex p = u + i v is handled as the real vector (u, v); residuals are
    stacked as (Re y, Im y).  The map is holomorphic, so the real Jacobian
    follows from the complex one.
    """

    def __init__(self, model: CoefficientModel, complex_mode: bool):
        self.model = model
        self.complex_mode = complex_mode

    def to_complex(self, p):
        if not self.complex_mode:
            return p
        k = p.size // 2
        return p[:k] + 1j * p[k:]

    def residuals_and_jacobian(self, p):
        y, J = self.model.residuals_and_jacobian(self.to_complex(p))
        if not self.complex_mode:
            return y.real if np.iscomplexobj(y) else y, J.real if np.iscomplexobj(J) else J
        yr = np.concatenate([y.real, y.imag])
        Jr = np.block([[J.real, -J.imag], [J.imag, J.real]])
        return yr, Jr

    def weights(self, w):
        return np.concatenate([w, w]) if self.complex_mode else w


def levenberg_marquardt(fun, p0, w, config: LMConfig, frozen_hessian=None,
                        damping: float | None = None, max_iterations: int | None = None,
                        target: float = 0.0, gradient_tolerance: float | None = None) -> PhaseResult:
    """Minimize y(p)^T W y(p) with damped Gauss-Newton steps.

    ``fun(p)`` returns ``(y, J)``.  With ``frozen_hessian`` the curvature
    matrix is held fixed while the gradient follows the current point.
    Iteration stops on a small step, on a gradient below
    ``gradient_tolerance`` when one is given, when chi^2 <= ``target``, on
    stagnation at maximal damping, or at the iteration limit.
    """
    lo, hi = config.damping_bounds
    lam = config.initial_damping if damping is None else damping
    iters = config.max_iterations if max_iterations is None else max_iterations
    p = np.array(p0, dtype=float)
    y, J = fun(p)
    chi = float(y @ (w * y))
    history = [chi]
    reason = "max_iterations"
    it = 0
    for it in range(1, iters + 1):
        if chi <= target:
            reason = "target"
            break
        H = J.T @ (w[:, None] * J) if frozen_hessian is None else frozen_hessian
        g = J.T @ (w * y)
        if gradient_tolerance is not None and np.max(np.abs(g), initial=0.0) <= gradient_tolerance:
            reason = "stationary"
            break
        try:
            h, lam = lm_step(J, y, w, lam, frozen_hessian, config.damping_up, hi)
        except OptimizationError:
            reason = "singular"
            break
        if not np.any(h):
            reason = "stationary"
            break
        p_try = p + h
        y_try, J_try = fun(p_try)
        chi_try = float(y_try @ (w * y_try))
        predicted = float(h @ (lam * np.diag(H) * h) - h @ g)
        if predicted > ROUNDOFF * chi:
            ok = (chi - chi_try) / predicted > config.acceptance
        else:
            # chi^2 differences are round-off here; the gradient is not
            g_try = J_try.T @ (w * y_try)
            ok = np.linalg.norm(g_try) < np.linalg.norm(g)
        if np.isfinite(chi_try) and ok:
            p, y, J, chi = p_try, y_try, J_try, chi_try
            history.append(chi)
            lam = max(lam / config.damping_down, lo)
            if np.max(np.abs(p)) > config.divergence_bound:
                reason = "diverged"
                break
            if np.max(np.abs(h)) <= config.step_tolerance * (1.0 + np.max(np.abs(p))):
                reason = "step"
                break
        else:
            if lam >= hi:
                reason = "stagnated"
                break
            lam = min(lam * config.damping_up, hi)
    H_end = J.T @ (w[:, None] * J)
    return PhaseResult(p, y, chi, lam, it, reason, H_end, history)


def _gradient(fun, w, p):
    y, J = fun(p)
    return J.T @ (w * y), float(y @ (w * y))


def refine_stationary(fun, p, w, max_iterations: int = 20, fd_step: float = 1e-5):
    """Newton iterations on grad chi^2 = 0 with the full Hessian.

    Near a minimum with nonzero residual the Gauss-Newton curvature J^T W J
    misses the second-derivative term and LM stalls along flat directions.
    The Hessian here comes from central differences of the exact gradient.
    A step is kept only if it reduces |grad| without raising chi^2 beyond
    round-off; halving is tried before giving up.
    """
    p = np.array(p, dtype=float)
    g, chi = _gradient(fun, w, p)
    n = p.size
    for _ in range(max_iterations):
        gnorm = np.linalg.norm(g)
        if gnorm == 0:
            break
        H = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = fd_step * (1.0 + abs(p[i]))
            H[:, i] = (_gradient(fun, w, p + e)[0] - _gradient(fun, w, p - e)[0]) / (2 * e[i])
        H = 0.5 * (H + H.T)
        try:
            h = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            break
        for _half in range(8):
            g_new, chi_new = _gradient(fun, w, p + h)
            if np.linalg.norm(g_new) < gnorm and chi_new <= chi * (1 + ROUNDOFF):
                break
            h = h / 2
        else:
            break
        p, g, chi = p + h, g_new, chi_new
    return p, g, chi


def polish_on_manifold(fun, p, constrained, leading, max_iterations: int = 100,
                       fd_step: float = 1e-6, step_tolerance: float = 1e-10,
                       stationarity_tolerance: float = 1e-10, restore_tolerance: float = 1e-14):
    """Minimize |y_lead|^2 subject to y_con = 0 from a point near the
    constraint manifold.

    ``constrained`` and ``leading`` are boolean row masks.  Each iteration
    takes a Newton step on the KKT conditions (Jacobian by central
    differences of the exact gradient), pulls the trial point back onto the
    manifold with Gauss-Newton, and halves the step until the objective
    does not increase.  The result is a stationary point of Err_n restricted
    to the manifold, which the two-phase landing only approximates.

    Raises OptimizationError when the iteration stalls away from a
    stationary point or cannot return to the manifold.
    """
    n = np.size(p)

    def parts(x):
        y, J = fun(x)
        yl = y[leading]
        return 0.5 * float(yl @ yl), J[leading].T @ yl, J[constrained], y[constrained]

    def restore(x):
        for _ in range(30):
            _, _, Jc, c = parts(x)
            if not np.all(np.isfinite(c)):
                return None
            if np.max(np.abs(c), initial=0.0) <= restore_tolerance:
                return x
            x = x - np.linalg.lstsq(Jc, c, rcond=None)[0]
        return None

    def reduced_gradient(g, Jc):
        mu = np.linalg.lstsq(Jc.T, g, rcond=None)[0]
        return g - Jc.T @ mu, mu

    def kkt(x, mu):
        _, g, Jc, c = parts(x)
        return np.concatenate([g - Jc.T @ mu, c])

    p = restore(np.array(p, dtype=float))
    if p is None:
        raise OptimizationError("manifold polish could not reach the constraint manifold")
    f, g, Jc, _ = parts(p)
    rg, mu = reduced_gradient(g, Jc)
    m = mu.size
    for _ in range(max_iterations):
        scale = max(float(np.linalg.norm(g)), np.finfo(float).tiny)
        if np.linalg.norm(rg) <= stationarity_tolerance * scale:
            return p
        K = np.zeros((n + m, n + m))
        for i in range(n):
            e = np.zeros(n)
            e[i] = fd_step * (1.0 + abs(p[i]))
            K[:, i] = (kkt(p + e, mu) - kkt(p - e, mu)) / (2 * e[i])
        K[:n, n:] = -Jc.T
        try:
            dx = np.linalg.solve(K, -kkt(p, mu))[:n]
        except np.linalg.LinAlgError:
            break
        for _half in range(12):
            trial = restore(p + dx)
            if trial is not None:
                f_new = parts(trial)[0]
                if f_new <= f:
                    break
            dx = dx / 2
        else:
            break
        step = float(np.linalg.norm(trial - p))
        p = trial
        f, g, Jc, _ = parts(p)
        rg, mu = reduced_gradient(g, Jc)
        if step <= step_tolerance * (1.0 + np.linalg.norm(p)):
            return p
    raise OptimizationError(
        f"manifold polish stalled (reduced gradient {np.linalg.norm(rg):.3e})")


@dataclass(frozen=True)
class Candidate:
    """A converged scheme with its figures of merit."""

    scheme: TrotterScheme
    order: int
    err: float
    eff: float
    xbar: float
    constraint_residual: float
    start: int = -1
    label: str = ""
    multiplicity: int = 1

    @property
    def q(self) -> int:
        return self.scheme.q

    def distance(self, other: "Candidate") -> float:
        return float(np.linalg.norm(self.scheme.ramp_c - other.scheme.ramp_c))


def _annotate(scheme: TrotterScheme, n: int, residual: float, start: int = -1) -> Candidate:
    from .error_functions import eff_n, origin_distance

    coeffs = compute_error_coefficients(scheme)
    err = float(np.linalg.norm(coeffs.leading(n)))
    return Candidate(scheme, n, err, eff_n(err, scheme.q, n), origin_distance(scheme),
                     residual, start)


def _constraint_degrees(n: int) -> tuple[int, ...]:
    return tuple(d for d in (3, 5, 7) if d < n + 1)


def two_phase(q: int, n: int, p0, config: LMConfig = LMConfig(),
              model: CoefficientModel | None = None) -> tuple[np.ndarray, OptimizationRun]:
    """Run the full-chi^2 phase followed by the constraint-only phase.

    Returns the final free parameters and the run record.  Raises
    OptimizationError when the constraints cannot be imposed.
    """
    validate_order_cycles(n, q)
    if model is None:
        model = CoefficientModel(q, tuple(d for d in (3, 5, 7) if d <= n + 1), config.eliminate)
    complex_mode = not config.real_only
    view = _RealView(model, complex_mode)
    weights = config.resolved_weights(q, n)
    run = OptimizationRun(q, n)
    p = np.asarray(p0)
    if complex_mode:
        p = np.concatenate([p.real, p.imag]) if np.iscomplexobj(p) else np.concatenate([p, np.zeros_like(p)])
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        run.p = p
        run.termination = "no free parameters"
        return p, run

    w_full = view.weights(model.weight_vector(weights, config.w0))
    constrained = _constraint_degrees(n)
    free = q + 1 - constraint_count(n)
    H = None
    if free > 0:
        res = levenberg_marquardt(view.residuals_and_jacobian, p, w_full, config,
                                  gradient_tolerance=config.gradient_tolerance)
        run.phases.append(res)
        if res.reason in ("diverged", "singular"):
            run.termination = f"phase 1 {res.reason}"
            raise OptimizationError(run.termination)
        if res.reason == "max_iterations":
            run.termination = f"phase 1 not converged within {res.iterations} iterations"
            raise OptimizationError(run.termination)
        p = res.p
        if config.refine_iterations:
            p, _, _ = refine_stationary(view.residuals_and_jacobian, p, w_full,
                                        config.refine_iterations)
        y1, J1 = view.residuals_and_jacobian(p)
        H = J1.T @ (w_full[:, None] * J1)
        run.freeze(H)
    run.phase = "ConstraintOnly"
    if constrained:
        w_con = dict(weights)
        w_con[n] = 0.0
        w2 = view.weights(model.weight_vector(w_con, config.w0))
        res2 = levenberg_marquardt(
            view.residuals_and_jacobian, p, w2, config, frozen_hessian=run.frozen_hessian,
            damping=config.constraint_damping if H is not None else config.initial_damping,
            max_iterations=config.constraint_iterations,
        )
        run.phases.append(res2)
        mask = w2 > 0
        residual = float(np.max(np.abs(res2.y[mask]), initial=0.0))
        p = res2.p
        if not np.isfinite(residual) or residual > config.constraint_tolerance:
            run.termination = f"constraints not imposed (max residual {residual:.3e}, {res2.reason})"
            raise OptimizationError(run.termination)
        if config.manifold_polish and free > 0:
            lead = view.weights(model.weight_vector({n: 1.0}, 0.0)) > 0
            p = polish_on_manifold(view.residuals_and_jacobian, p, mask, lead,
                                   config.polish_iterations)
            y = view.residuals_and_jacobian(p)[0]
            residual = float(np.max(np.abs(y[mask]), initial=0.0))
            if not np.isfinite(residual) or residual > config.constraint_tolerance:
                run.termination = f"manifold polish lost the constraints (max residual {residual:.3e})"
                raise OptimizationError(run.termination)
    run.p = view.to_complex(p)
    run.termination = "converged"
    return run.p, run


def optimize_scheme(q: int, n: int, config: LMConfig = LMConfig(), p0=None,
                    start: int = -1) -> Candidate:
    """Optimize one scheme from ``p0`` (default: the uniform point)."""
    model = CoefficientModel(q, tuple(d for d in (3, 5, 7) if d <= n + 1), config.eliminate)
    if p0 is None:
        p0 = model.param.origin()
    p, run = two_phase(q, n, p0, config, model)
    scheme = model.param.scheme(p, order=n, name=f"opt-n{n}-q{q}", source="derived")
    coeffs = compute_error_coefficients(scheme)
    residual = 0.0
    for d in _constraint_degrees(n):
        residual = max(residual, float(np.max(np.abs(coeffs.degree(d)))))
    residual = max(residual, abs(coeffs.nu - 1), abs(coeffs.sigma - 1))
    return _annotate(scheme, n, residual, start)


def initial_point(q: int, config: LMConfig, start: int, param: Parameterization) -> np.ndarray:
    """Random start: symmetric parameters of the uniform ramp c = d = mean,
    plus independent normal noise of width ``init_sigma``."""
    mean_c = config.init_mean if config.init_mean is not None else 1.0 / q
    centre = stage_to_symmetric(*_uniform_stage(q, mean_c))[param.free_idx]
    rng = np.random.default_rng([config.rng_seed, start])
    p = centre + config.init_sigma * rng.standard_normal(centre.size)
    if not config.real_only:
        p = p + 1j * config.init_sigma * rng.standard_normal(centre.size)
    return p


def _uniform_stage(q: int, c: float):
    s = TrotterScheme.from_ramp(np.full(q, c))
    return s.stage_a, s.stage_b


def _run_start(args):
    q, n, config, start = args
    param = Parameterization(q, config.eliminate)
    p0 = initial_point(q, config, start, param)
    try:
        cand = optimize_scheme(q, n, config, p0, start)
    except (OptimizationError, NonLieComponentError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        return start, None, str(exc)
    return start, cand, ""


@dataclass
class Catalog:
    """Deduplicated minima from a multistart campaign, best first."""

    q: int
    n: int
    candidates: list
    n_starts: int
    failures: dict

    @property
    def best(self) -> Candidate:
        if not self.candidates:
            raise OptimizationError("empty catalog")
        return self.candidates[0]

    def nearest(self, ramp_c) -> tuple[Candidate, float]:
        c = np.asarray(ramp_c)
        best = min(self.candidates, key=lambda k: np.max(np.abs(k.scheme.ramp_c - c)))
        return best, float(np.max(np.abs(best.scheme.ramp_c - c)))

    def __len__(self):
        return len(self.candidates)


def deduplicate(cands, distance: float) -> list:
    """Merge candidates closer than ``distance`` in ramp space; keep the one
    with the smallest constraint residual and count the merges."""
    groups: list[list[Candidate]] = []
    for c in sorted(cands, key=lambda k: (k.start, k.err)):
        for g in groups:
            if g[0].distance(c) < distance:
                g.append(c)
                break
        else:
            groups.append([c])
    out = []
    for g in groups:
        rep = min(g, key=lambda k: (k.constraint_residual, k.start))
        out.append(replace(rep, multiplicity=len(g)))
    out.sort(key=lambda k: (-k.eff, k.start))
    return [replace(c, label="global" if i == 0 else "local") for i, c in enumerate(out)]


def multistart(q: int, n: int, config: LMConfig = LMConfig()) -> Catalog:
    """Run ``config.n_starts`` two-phase optimizations from random points
    around the uniform scheme and collect the distinct minima."""
    validate_order_cycles(n, q)
    jobs = [(q, n, config, s) for s in range(config.n_starts)]
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(config.workers) as ex:
            results = list(ex.map(_run_start, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        results = [_run_start(j) for j in jobs]
    cands = []
    failures = {}
    for start, cand, msg in results:
        if cand is None:
            failures[start] = msg
        else:
            cands.append(cand)
    log.info("multistart q=%d n=%d: %d converged, %d failed", q, n, len(cands), len(failures))
    return Catalog(q, n, deduplicate(cands, config.dedup_distance), config.n_starts, failures)


class PenalizedModel:
    """Coefficient model whose leading-order block is traded against the
    distance from the uniform scheme.

    chi^2 gains w_n ((1 - r)^2 Err_n^2 + r^2 xbar^2) in place of w_n Err_n^2,
    with xbar^2 = 2 sum_i (c_i - 1/(2q))^2.  The extra rows count as order n,
    so the constraint-only phase drops them together with Err_n.
    """

    def __init__(self, base: CoefficientModel, n: int, r: float):
        if not 0.0 <= r <= 1.0:
            raise DomainError(f"ratio r must lie in [0, 1], got {r}")
        self.base = base
        self.param = base.param
        self.n = n
        self.r = r
        q = base.q
        zero = self.param.scheme(np.zeros(self.param.n_free)).ramp_c
        cols = [self.param.scheme(e).ramp_c - zero for e in np.eye(self.param.n_free)]
        self.c0 = zero - 1.0 / (2 * q)
        self.C = np.array(cols).T.reshape(q, self.param.n_free)
        self.lead = base.slices[n + 1]
        self.n_res = base.n_res + q

    def residuals_and_jacobian(self, p):
        y, J = self.base.residuals_and_jacobian(p)
        y = y.copy()
        J = J.copy()
        y[self.lead] *= 1.0 - self.r
        J[self.lead] *= 1.0 - self.r
        s = np.sqrt(2.0) * self.r
        yp = s * (self.c0 + self.C @ p)
        return np.concatenate([y, yp]), np.vstack([J, s * self.C])

    def weight_vector(self, weights, w0: float = 1.0):
        w = self.base.weight_vector(weights, w0)
        return np.concatenate([w, np.full(self.base.q, weights.get(self.n, 0.0))])


def _penalized_on_manifold(base: CoefficientModel, n: int, r: float, p0, config: LMConfig,
                           steps: int = 4):
    """Move a valid seed along the constraint manifold towards the penalized
    minimum, raising r geometrically and solving the KKT system each time.

    Used when the constraint-only phase cannot return to the manifold from
    the penalized phase-1 minimum (large r pulls it far away)."""
    weights = config.resolved_weights(base.q, n)
    con_rows = np.zeros(base.n_res + base.q, dtype=bool)
    for d in _constraint_degrees(n):
        con_rows[base.slices[d]] = True
    p = np.array(p0, dtype=float)
    for rk in r * np.logspace(-(steps - 1), 0, steps):
        model = PenalizedModel(base, n, float(rk))
        sw = np.sqrt(model.weight_vector(weights, config.w0))

        def fun(x, model=model, sw=sw):
            y, J = model.residuals_and_jacobian(x)
            return y * sw, J * sw[:, None]

        p = polish_on_manifold(fun, p, con_rows, ~con_rows & (sw > 0), config.polish_iterations)
    y = base.residuals(p)
    residual = float(np.max(np.abs(y[con_rows[:base.n_res]]), initial=0.0))
    if not np.isfinite(residual) or residual > config.constraint_tolerance:
        raise OptimizationError(f"penalized run lost the constraints (max residual {residual:.3e})")
    return p


def optimize_penalized(q: int, n: int, r: float, seed: TrotterScheme,
                       config: LMConfig = LMConfig()) -> Candidate:
    """Re-run the two-phase search from ``seed`` with the leading error
    traded against the origin distance at ratio ``r``.

    The order constraints are re-imposed in the second phase, so the result
    has the same order as the seed.
    """
    if not config.real_only:
        raise ConfigurationError("penalized optimization supports real schemes only")
    if seed.q != q:
        raise DomainError(f"seed has q={seed.q}, expected {q}")
    validate_order_cycles(n, q)
    degrees = tuple(d for d in (3, 5, 7) if d <= n + 1)
    base = CoefficientModel(q, degrees, config.eliminate)
    model = PenalizedModel(base, n, r)
    p0 = base.param.from_scheme(seed)
    if np.iscomplexobj(p0):
        raise DomainError("seed must be real")
    try:
        p, _ = two_phase(q, n, p0, config, model)
    except OptimizationError as exc:
        log.info("two-phase penalized run failed (%s); continuing along the manifold", exc)
        p = _penalized_on_manifold(base, n, r, p0, config)
    scheme = base.param.scheme(p, order=n, name=f"{seed.name or 'scheme'}-r{r:g}", source="derived")
    coeffs = compute_error_coefficients(scheme)
    residual = max([float(np.max(np.abs(coeffs.degree(d)))) for d in _constraint_degrees(n)],
                   default=0.0)
    return _annotate(scheme, n, residual)


def impose_constraints(scheme: TrotterScheme, n: int, config: LMConfig = LMConfig()) -> TrotterScheme:
    """Drive the order-n constraints of a symmetric real scheme to zero with
    plain LM, starting from the scheme itself.

    Used to polish coefficients known only to a limited number of digits.
    """
    validate_order_cycles(n, scheme.q)
    if not scheme.symmetric:
        raise DomainError("impose_constraints needs a symmetric scheme")
    q = scheme.q
    model = CoefficientModel(q, _constraint_degrees(n), config.eliminate)
    p0 = model.param.from_scheme(scheme)
    if np.iscomplexobj(p0):
        raise DomainError("impose_constraints supports real schemes only")
    w = model.weight_vector({k: 1.0 for k in range(2, n, 2)}, config.w0)
    res = levenberg_marquardt(model.residuals_and_jacobian, p0, w, config,
                              max_iterations=config.constraint_iterations)
    worst = float(np.max(np.abs(res.y[w > 0]), initial=0.0))
    if worst > config.constraint_tolerance:
        raise OptimizationError(f"constraints not imposed (max residual {worst:.3e}, {res.reason})")
    return model.param.scheme(res.p, order=n, name=scheme.name, source="derived")
