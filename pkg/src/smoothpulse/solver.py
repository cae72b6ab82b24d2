"""Damped Newton synthesis of noise-filtering phase polynomials.

The order-k error-cancellation conditions are moments of the pulse phase
factor,

    eta_ell = integral_{-1}^{1} x^ell exp(i phi(x)) dx = 0,  0 <= ell < k,

combined with two boundary conditions fixing the rotation angle and a
smooth pulse turn-off.  With N = k + 2 odd coefficients this is a square
nonlinear system; its Jacobian comes for free from the recursion
d eta_ell / d p_{2j-1} = i eta_{ell+2j-1}, so a single quadrature sweep
of eta_0 ... eta_{3k+3} fills every entry.

Two numeric backends are provided: native double precision (default) and
an mpmath extended-precision mode for the nearly singular Jacobians that
appear at large k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp, mpf, mpc, matrix as mp_matrix, lu_solve as mp_lu_solve
from mpmath.calculus.quadrature import GaussLegendre

from .phase import PhasePolynomial, boundary_residuals

__all__ = [
    "SolverConfig",
    "ConstraintVector",
    "SolveReport",
    "QuadratureError",
    "ParityError",
    "eta",
    "constraint_vector",
    "jacobian",
    "initial_guess",
    "solve",
    "solve_continuation",
    "solve_order_family",
    "solve_theta_family",
    "verify_solution",
    "save_solution",
    "load_solution",
]

MAX_QUAD_DOUBLINGS = 6


class QuadratureError(RuntimeError):
    """Oscillatory quadrature failed to converge within the refinement cap."""


class ParityError(RuntimeError):
    """Constraint entries acquired an imaginary part beyond tolerance."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one Newton run; N = k + 2 unknowns is implied by k."""

    k: int
    theta: float
    alpha: float = 1.0
    epsilon: float = 1e-12
    max_iter: int = 500
    precision_digits: int = 0  # 0 = native double
    quad_nodes: int = 64
    backtracking: bool = False

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if not (0 < self.alpha <= 1):
            raise ValueError("alpha must lie in (0, 1]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.quad_nodes < 2:
            raise ValueError("quad_nodes must be >= 2")

    @property
    def n_coeffs(self) -> int:
        return self.k + 2


@dataclass(frozen=True)
class ConstraintVector:
    """G_1 ... G_{k+2} with the discarded imaginary residue kept as a diagnostic."""

    values: np.ndarray
    imag_residue: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass
class SolveReport:
    coeffs: PhasePolynomial
    residual_history: list[float]
    condition_history: list[float]
    iterations: int
    status: str  # converged | max_iter_exceeded | diverged | singular_jacobian
    config: SolverConfig
    coeffs_full: tuple[str, ...] = field(default_factory=tuple)

    @property
    def residual_final(self) -> float:
        return self.residual_history[-1] if self.residual_history else np.inf

    @property
    def converged(self) -> bool:
        return self.status == "converged"


# ---------------------------------------------------------------------------
# quadrature backends

def _leggauss_cached(n, _cache={}):
    if n not in _cache:
        # scipy's Golub-Welsch/asymptotic path stays fast at large n,
        # unlike np.polynomial.legendre.leggauss.
        from scipy.special import roots_legendre
        _cache[n] = roots_legendre(n)
    return _cache[n]


def _mp_nodes_cached(n, prec, _cache={}):
    # mpmath's GaussLegendre rule at degree d carries 3 * 2^(d-1) nodes;
    # pick the smallest degree covering the requested count.
    degree = 1
    while 3 * 2 ** (degree - 1) < n:
        degree += 1
    key = (degree, prec)
    if key not in _cache:
        _cache[key] = GaussLegendre(mp).calc_nodes(degree, prec)
    return _cache[key]


def _eta_sweep_double(coeffs, max_ell, quad_nodes, tol):
    """eta_0 ... eta_{max_ell} by Gauss-Legendre with node doubling."""
    poly = PhasePolynomial(tuple(float(c) for c in coeffs))
    prev = None
    n = max(2, quad_nodes)
    for _ in range(MAX_QUAD_DOUBLINGS + 1):
        x, w = _leggauss_cached(n)
        u = x * x
        acc = np.zeros_like(u)
        for c in reversed(poly.coeffs):
            acc = acc * u + c
        phase = x * acc
        e = w * np.exp(1j * phase)
        etas = np.empty(max_ell + 1, dtype=complex)
        xp = np.ones_like(x)
        for ell in range(max_ell + 1):
            etas[ell] = np.sum(xp * e)
            xp = xp * x
        if prev is not None:
            # Roundoff floor: the GL sum carries total weight 2, so two
            # independently rounded evaluations can differ by O(sqrt(n) eps)
            # even after spectral convergence; Horner evaluation of phases
            # with strongly cancelling coefficients adds O(eps sum |p|).
            csum = sum(abs(c) for c in poly.coeffs)
            floor = 8 * np.finfo(float).eps * (np.sqrt(n) + csum)
            if np.all(np.abs(etas - prev) < tol * (1 + np.abs(etas)) + floor):
                return etas
        prev = etas
        n *= 2
    raise QuadratureError(
        f"eta quadrature did not settle after {MAX_QUAD_DOUBLINGS} doublings "
        f"(final n={n // 2}, max|p|={max(abs(c) for c in poly.coeffs):.3g})"
    )


def _eta_sweep_mp(coeffs, max_ell, quad_nodes, tol):
    """Extended-precision eta sweep; coeffs may be mpf."""
    coeffs = [mpf(c) if not isinstance(c, (mpf, mpc)) else c for c in coeffs]
    prev = None
    n = max(2, quad_nodes)
    for _ in range(MAX_QUAD_DOUBLINGS + 1):
        nodes = _mp_nodes_cached(n, mp.prec)
        etas = [mpc(0)] * (max_ell + 1)
        for x, w in nodes:
            u = x * x
            acc = mpf(0)
            for c in reversed(coeffs):
                acc = acc * u + c
            e = w * mp.expjpi(x * acc / mp.pi)
            xp = mpf(1)
            for ell in range(max_ell + 1):
                etas[ell] += xp * e
                xp *= x
        if prev is not None:
            ok = all(
                abs(etas[ell] - prev[ell]) < tol * (1 + abs(etas[ell]))
                for ell in range(max_ell + 1)
            )
            if ok:
                return etas
        prev = etas
        n = 2 * len(nodes)
    raise QuadratureError(
        f"extended-precision eta quadrature did not settle after "
        f"{MAX_QUAD_DOUBLINGS} doublings (final n={n // 2})"
    )


def _eta_sweep(coeffs, max_ell, quad_nodes=64, precision_digits=0):
    if precision_digits:
        tol = mpf(10) ** (-(precision_digits - 4))
        with mp.workdps(precision_digits):
            return _eta_sweep_mp(coeffs, max_ell, quad_nodes, tol)
    return _eta_sweep_double(coeffs, max_ell, quad_nodes, 1e-14)


def eta(poly: PhasePolynomial, ell: int, quad_nodes: int = 64,
        precision_digits: int = 0) -> complex:
    """Moment integral of the pulse phase factor, eta_ell = int x^ell e^{i phi} dx."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    etas = _eta_sweep(poly.coeffs, ell, quad_nodes, precision_digits)
    return complex(etas[ell])


# ---------------------------------------------------------------------------
# constraints and Jacobian

def _i_pow(ell):
    return (1, 1j, -1, -1j)[ell % 4]


def constraint_vector(poly: PhasePolynomial, k: int, theta: float,
                      quad_nodes: int = 64, precision_digits: int = 0) -> ConstraintVector:
    """G_ell = Re(i^{ell-1} eta_{ell-1}) for ell <= k, plus the two boundary rows."""
    if poly.n_coeffs != k + 2:
        raise ValueError(f"need N = k + 2 = {k + 2} coefficients, got {poly.n_coeffs}")
    values = np.empty(k + 2)
    residue = 0.0
    if k > 0:
        etas = _eta_sweep(poly.coeffs, k - 1, quad_nodes, precision_digits)
        # parity cancellation is exact in the integrand but only ~eps sum|p|
        # accurate once the phase is evaluated in floating point
        imag_tol = 1e-12 + 16 * np.finfo(float).eps * sum(abs(c) for c in poly.coeffs)
        for ell in range(1, k + 1):
            g = _i_pow(ell - 1) * complex(etas[ell - 1])
            values[ell - 1] = g.real
            scale = 1.0 + abs(complex(etas[ell - 1]))
            residue = max(residue, abs(g.imag) / scale)
            if abs(g.imag) > imag_tol * scale:
                raise ParityError(
                    f"constraint G_{ell} has imaginary residue {g.imag:.3e} "
                    f"(scale {scale:.3e}); phase polynomial parity is broken"
                )
    values[k], values[k + 1] = boundary_residuals(poly, theta)
    return ConstraintVector(values=values, imag_residue=residue)


def jacobian(poly: PhasePolynomial, k: int, quad_nodes: int = 64,
             precision_digits: int = 0) -> np.ndarray:
    """Jacobian dG/dp via the eta recursion; a single sweep fills all rows."""
    if poly.n_coeffs != k + 2:
        raise ValueError(f"need N = k + 2 = {k + 2} coefficients, got {poly.n_coeffs}")
    n = k + 2
    J = np.zeros((n, n))
    if k > 0:
        etas = _eta_sweep(poly.coeffs, 3 * k + 3, quad_nodes, precision_digits)
        for ell in range(1, k + 1):
            ip = _i_pow(ell)
            for j in range(1, n + 1):
                J[ell - 1, j - 1] = (ip * complex(etas[ell + 2 * j - 2])).real
    J[k, :] = 1.0
    J[k + 1, :] = 2 * np.arange(1, n + 1) - 1
    return J


def initial_guess(k: int, theta: float) -> PhasePolynomial:
    """Square-pulse starting point: p_1 = [(k+1) pi + theta] / 2, rest zero."""
    coeffs = [0.0] * (k + 2)
    coeffs[0] = ((k + 1) * np.pi + theta) / 2.0
    return PhasePolynomial(tuple(coeffs))


# ---------------------------------------------------------------------------
# Newton iteration

def _solve_double(config: SolverConfig, p0: np.ndarray) -> SolveReport:
    k, theta = config.k, config.theta
    cond_cap = 1.0 / (100.0 * np.finfo(float).eps)
    p = p0.copy()
    res_hist: list[float] = []
    cond_hist: list[float] = []
    status = "max_iter_exceeded"
    iterations = 0

    def residual(pvec):
        cv = constraint_vector(PhasePolynomial(tuple(pvec)), k, theta,
                               config.quad_nodes, 0)
        return cv.values, float(np.max(np.abs(cv.values)))

    G, res = residual(p)
    res_hist.append(res)
    for it in range(config.max_iter):
        iterations = it
        if res < config.epsilon:
            status = "converged"
            break
        if res > 10.0 * res_hist[0] and it > 0:
            status = "diverged"
            break
        J = jacobian(PhasePolynomial(tuple(p)), k, config.quad_nodes, 0)
        cond = float(np.linalg.cond(J, 1))
        cond_hist.append(cond)
        if not np.isfinite(cond) or cond > cond_cap:
            status = "singular_jacobian"
            break
        step = np.linalg.solve(J, G)  # LAPACK partial-pivoted LU

        def try_step(a):
            # A wild trial point can defeat the oscillatory quadrature
            # outright; treat that as an infinite residual so the line
            # search rejects it instead of aborting the whole solve.
            cand = p - a * step
            try:
                g, r = residual(cand)
            except QuadratureError:
                if not config.backtracking:
                    raise
                g, r = None, np.inf
            return cand, g, r

        alpha = config.alpha
        p_new, G_new, res_new = try_step(alpha)
        if config.backtracking:
            halvings = 0
            while res_new > res and halvings < 20:
                alpha *= 0.5
                p_new, G_new, res_new = try_step(alpha)
                halvings += 1
            if not np.isfinite(res_new):
                status = "diverged"
                break
        p, G, res = p_new, G_new, res_new
        res_hist.append(res)
    else:
        iterations = config.max_iter
    if status == "max_iter_exceeded" and res < config.epsilon:
        status = "converged"

    poly = PhasePolynomial(tuple(p))
    return SolveReport(coeffs=poly, residual_history=res_hist,
                       condition_history=cond_hist, iterations=iterations,
                       status=status, config=config,
                       coeffs_full=tuple(repr(c) for c in p))


def _mp_norm_inf(vec):
    return max(abs(v) for v in vec)


def _solve_extended(config: SolverConfig, p0) -> SolveReport:
    k, theta = config.k, config.theta
    dps = config.precision_digits
    with mp.workdps(dps):
        tol = mpf(10) ** (-(dps - 4))
        cond_cap = mpf(10) ** dps / 100
        p = [mpf(v) for v in p0]
        res_hist: list[float] = []
        cond_hist: list[float] = []
        status = "max_iter_exceeded"
        iterations = 0
        odd = [2 * j - 1 for j in range(1, k + 3)]

        def residual(pvec):
            g = [mpf(0)] * (k + 2)
            if k > 0:
                etas = _eta_sweep_mp(pvec, k - 1, config.quad_nodes, tol)
                for ell in range(1, k + 1):
                    val = mpc(1j) ** (ell - 1) * etas[ell - 1]
                    scale = 1 + abs(etas[ell - 1])
                    if abs(val.imag) > mpf("1e-12") * scale:
                        raise ParityError(
                            f"constraint G_{ell} imaginary residue {val.imag} "
                            "in extended mode"
                        )
                    g[ell - 1] = val.real
            g[k] = mp.fsum(pvec) - mpf(theta) / 2
            g[k + 1] = mp.fsum(o * v for o, v in zip(odd, pvec))
            return g, _mp_norm_inf(g)

        def jac(pvec):
            n = k + 2
            J = mp_matrix(n, n)
            if k > 0:
                etas = _eta_sweep_mp(pvec, 3 * k + 3, config.quad_nodes, tol)
                for ell in range(1, k + 1):
                    ip = mpc(1j) ** ell
                    for j in range(1, n + 1):
                        J[ell - 1, j - 1] = (ip * etas[ell + 2 * j - 2]).real
            for j in range(n):
                J[k, j] = mpf(1)
                J[k + 1, j] = mpf(2 * j + 1)
            return J

        G, res = residual(p)
        res_hist.append(float(res))
        for it in range(config.max_iter):
            iterations = it
            if res < config.epsilon:
                status = "converged"
                break
            if it > 0 and res > 10 * res_hist[0]:
                status = "diverged"
                break
            J = jac(p)
            cond = mp.mnorm(J, 1) * mp.mnorm(J ** -1, 1)
            cond_hist.append(float(cond))
            if cond > cond_cap:
                status = "singular_jacobian"
                break
            step = mp_lu_solve(J, mp_matrix(G))

            def try_step(a):
                cand = [pi - a * step[i] for i, pi in enumerate(p)]
                try:
                    g, r = residual(cand)
                except QuadratureError:
                    if not config.backtracking:
                        raise
                    g, r = None, mp.inf
                return cand, g, r

            alpha = mpf(config.alpha)
            p_new, G_new, res_new = try_step(alpha)
            if config.backtracking:
                halvings = 0
                while res_new > res and halvings < 20:
                    alpha /= 2
                    p_new, G_new, res_new = try_step(alpha)
                    halvings += 1
                if res_new == mp.inf:
                    status = "diverged"
                    break
            p, G, res = p_new, G_new, res_new
            res_hist.append(float(res))
        else:
            iterations = config.max_iter
        if status == "max_iter_exceeded" and res < config.epsilon:
            status = "converged"

        poly = PhasePolynomial(tuple(float(v) for v in p))
        full = tuple(mp.nstr(v, dps) for v in p)
    return SolveReport(coeffs=poly, residual_history=res_hist,
                       condition_history=cond_hist, iterations=iterations,
                       status=status, config=config, coeffs_full=full)


def solve(config: SolverConfig, warm_start: PhasePolynomial | None = None) -> SolveReport:
    """Run the damped Newton iteration from the square-pulse (or supplied) start.

    Non-converged runs are reported through ``SolveReport.status``; the
    coefficients in such reports are the last iterate, not a solution.
    """
    if warm_start is not None:
        if warm_start.n_coeffs != config.n_coeffs:
            raise ValueError("warm start has wrong number of coefficients")
        p0 = np.asarray(warm_start.coeffs, dtype=float)
    else:
        p0 = np.asarray(initial_guess(config.k, config.theta).coeffs)
    if config.precision_digits:
        return _solve_extended(config, p0)
    return _solve_double(config, p0)


def solve_continuation(k: int, thetas, config_template: SolverConfig | None = None,
                       warm_start: PhasePolynomial | None = None,
                       **config_kwargs) -> list[SolveReport]:
    """Solve a theta sweep at fixed k, warm-starting each run from its neighbor.

    Continuation keeps the iteration on the same solution branch across
    the sweep instead of re-finding it from the square pulse each time.
    ``warm_start`` seeds the first theta (e.g. a solution from the
    order-continuation family at a nearby angle).
    """
    reports = []
    warm = warm_start
    for theta in thetas:
        if config_template is not None:
            kw = dict(config_template.__dict__, k=k, theta=float(theta))
        else:
            kw = dict(config_kwargs, k=k, theta=float(theta))
        cfg = SolverConfig(**kw)
        rep = solve(cfg, warm_start=warm)
        reports.append(rep)
        if rep.converged:
            warm = rep.coeffs
    return reports


def solve_order_family(k_max: int, k_min: int = 2,
                       theta_of_k=None) -> dict[int, SolveReport]:
    """Smooth non-negative pulses for k = k_min ... k_max by order continuation.

    The Newton basin of the smooth branch shrinks rapidly with k: full
    steps from the square-pulse guess wander off to spurious oscillatory
    roots.  Heavier damping at the lowest order followed by warm starts
    (the order-k solution zero-padded by one coefficient) keeps the
    iteration on the smooth family; beyond k = 6 the Jacobian is so
    ill-conditioned that extended precision is required.

    ``theta_of_k`` maps k to the rotation angle (default (k+1) pi, the
    maximal-angle family).  Raises RuntimeError on any non-converged
    stage, since later stages would inherit a bad warm start.
    """
    if theta_of_k is None:
        theta_of_k = lambda k: (k + 1) * np.pi
    if not 2 <= k_min <= k_max:
        raise ValueError("need 2 <= k_min <= k_max")
    out: dict[int, SolveReport] = {}
    warm = None
    for k in range(2, k_max + 1):
        if k == 2:
            cfg = SolverConfig(k=2, theta=theta_of_k(2), alpha=0.1)
        elif k <= 6:
            cfg = SolverConfig(k=k, theta=theta_of_k(k), alpha=0.5)
        else:
            # tight epsilon: double-rounded coefficients alone leave
            # ~1e-11 moment residuals at these magnitudes, so the
            # full-precision coefficients must be much better than that
            # for the reported solution (coeffs_full) to support
            # small-omega filter evaluation
            cfg = SolverConfig(k=k, theta=theta_of_k(k), alpha=0.3,
                               epsilon=1e-22, precision_digits=30,
                               quad_nodes=96)
        try:
            rep = solve(cfg, warm_start=warm)
        except QuadratureError:
            rep = None
        if (rep is None or rep.status != "converged") and cfg.precision_digits == 0:
            # double-precision moment noise (~max|p| * eps) can defeat the
            # quadrature settle test near large-coefficient stages; retry
            # the stage in extended precision with heavier damping
            retry = SolverConfig(k=k, theta=cfg.theta, alpha=0.1,
                                 max_iter=2000, precision_digits=30,
                                 quad_nodes=96)
            rep = solve(retry, warm_start=warm)
        if rep.status != "converged":
            raise RuntimeError(f"order-{k} continuation stage ended with "
                               f"status {rep.status!r}")
        warm = PhasePolynomial(rep.coeffs.coeffs + (0.0,))
        if k >= k_min:
            out[k] = rep
    return out


def solve_theta_family(k: int, thetas, base: tuple[float, PhasePolynomial] | None = None,
                       base_theta: float = np.pi / 2, max_step: float = 0.2,
                       min_step: float = 1e-6, max_iter: int = 25,
                       epsilon: float = 1e-12) -> dict[float, SolveReport]:
    """Pulses for several rotation angles at fixed order k, tracking one branch.

    The solution branch is steep in theta (coefficients move by ~1e3 per
    radian at k = 5, with a fold blocking continuation down from the
    maximal angle), so plain warm starts between neighboring target
    angles overshoot the Newton basin.  This routine anchors the branch
    at one angle and then follows it with a secant predictor and
    adaptive angle steps: the step grows after quick solves and halves
    whenever Newton diverges or the quadrature fails.

    ``base``: optional (theta0, coefficients) anchor already on the
    branch.  By default an anchor at ``base_theta`` is built by order
    continuation at that fixed angle; pi/2 is a robust anchor, whereas
    order continuation at a generic angle often wanders off the branch.
    """
    thetas = sorted(float(t) for t in thetas)
    if not thetas:
        raise ValueError("need at least one target angle")
    if base is None:
        fam = solve_order_family(max(k, 2), k_min=max(k, 2),
                                 theta_of_k=lambda _k: base_theta)
        base = (base_theta, fam[max(k, 2)].coeffs)
    theta_b, poly_b = base
    if poly_b.n_coeffs != k + 2:
        raise ValueError("base coefficients have wrong length for this k")

    out: dict[float, SolveReport] = {}

    def track(targets, direction):
        p = np.asarray(poly_b.coeffs, dtype=float)
        th = float(theta_b)
        p_prev = th_prev = None
        dth = min(max_step, 0.02)
        pending = list(targets)
        while pending:
            nxt = pending[0]
            step = min(dth, abs(nxt - th))
            th_new = th + direction * step
            if p_prev is not None and th != th_prev:
                guess = p + (p - p_prev) * (th_new - th) / (th - th_prev)
            else:
                guess = p
            cfg = SolverConfig(k=k, theta=th_new, alpha=1.0, max_iter=max_iter,
                               epsilon=epsilon)
            try:
                rep = solve(cfg, warm_start=PhasePolynomial(tuple(guess)))
            except QuadratureError:
                rep = None
            if rep is not None and rep.converged:
                p_prev, th_prev = p, th
                p, th = np.asarray(rep.coeffs.coeffs), th_new
                if rep.iterations <= 3:
                    dth = min(dth * 1.4, max_step)
                if abs(th - nxt) < 1e-12:
                    out[nxt] = rep
                    pending.pop(0)
            else:
                dth = step * 0.5
                if dth < min_step:
                    raise RuntimeError(
                        f"angle continuation stalled at theta = {th:.6g} "
                        f"(step underflow below {min_step:g})")

    below = [t for t in reversed(thetas) if t < theta_b]
    above = [t for t in thetas if t >= theta_b]
    if below:
        track(below, -1.0)
    if above:
        track(above, +1.0)
    return out


def verify_solution(report: SolveReport, factor: float = 10.0) -> bool:
    """Re-check a converged report with doubled quadrature nodes.

    True when the constraint vector re-evaluated at 2x nodes still has
    infinity norm below ``factor * epsilon``.
    """
    cfg = report.config
    cv = constraint_vector(report.coeffs, cfg.k, cfg.theta,
                           quad_nodes=2 * cfg.quad_nodes, precision_digits=0)
    return bool(np.max(np.abs(cv.values)) < factor * cfg.epsilon)


# ---------------------------------------------------------------------------
# serialization

def solution_to_dict(report: SolveReport) -> dict:
    cfg = report.config
    return {
        "k": cfg.k,
        "theta": cfg.theta,
        "alpha": cfg.alpha,
        "epsilon": cfg.epsilon,
        "precision_digits": cfg.precision_digits,
        "coeffs": list(report.coeffs.coeffs),
        "coeffs_full": list(report.coeffs_full),
        "residual_final": report.residual_final,
        "iterations": report.iterations,
        "status": report.status,
    }


def save_solution(report: SolveReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(solution_to_dict(report), fh, indent=2)
        fh.write("\n")


def load_solution(path) -> tuple[PhasePolynomial, dict]:
    with open(path) as fh:
        data = json.load(fh)
    for key in ("k", "theta", "coeffs"):
        if key not in data:
            raise ValueError(f"solution file missing required key {key!r}")
    return PhasePolynomial(tuple(data["coeffs"])), data
