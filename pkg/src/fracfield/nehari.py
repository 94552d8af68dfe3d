"""Nehari-manifold projection, ground states, and level computations.

The manifold M is the set of nontrivial fields with J(u) = Q(u) - <h(u), u> = 0,
where Q(u) = sum_k (mu_k^alpha + 1) b_k^2. For the power family h(s) = (s_+)^p
every ray through a field with nontrivial positive part meets M exactly once,
at t = (Q/P)^(1/(p-1)) with P = h^2 sum (u_+)^(p+1), and that point maximizes
the energy along the ray. Ground states are found by projected gradient
descent: a Riesz-preconditioned gradient step on coefficients followed by the
closed-form rescaling back onto M. On M the radial derivative of I vanishes
(I'(u)[u] = J(u) = 0), so the full gradient is tangent to first order and the
retracted step decreases energy for small step sizes.

Residual convention: records store ||grad I||_* / (1 + |I|), where ||.||_* is
the dual norm sqrt(sum g_k^2 / (mu_k^alpha + 1)); a record is converged iff
this quantity is <= tol.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .domain import GridDomain, build_domain
from .errors import AllStartsFailed, NonmonotoneLevels, NonpositiveField
from .model import H_eval, Nonlinearity, h_eval
from .spectral import Field, SpectralBasis, assemble_and_decompose

_ARMIJO = 1e-4
_MAX_BACKTRACKS = 60
_POSITIVITY_EPS = 1e-8


@dataclass(frozen=True)
class SolutionRecord:
    """One computed critical-point candidate with its diagnostics.

    residual is the normalized dual gradient norm described in the module
    docstring; positive means min u >= -1e-8 * max u on the grid; morse_index
    stays None until a second-variation pass fills it in.
    """

    u: Field
    energy: float
    residual: float
    barycenter: tuple[float, float]
    positive: bool
    seed_tag: str
    iterations: int
    converged: bool
    morse_index: int | None = None


@dataclass(frozen=True)
class LevelReport:
    """Minimum converged energy over a multistart batch plus its spread."""

    value: float
    spread: float
    n_converged: int
    n_requested: int
    records: tuple[SolutionRecord, ...]

    @property
    def best(self) -> SolutionRecord:
        return self.records[0]


@dataclass(frozen=True)
class LimitLevelReport:
    """Geometric extrapolation of ball levels toward the whole-plane level.

    error_bar is the last computed gap, a deliberately conservative bound;
    the fit model is an artifact choice and the value is an estimate.
    """

    value: float
    error_bar: float
    radii: tuple[float, ...]
    levels: tuple[float, ...]


def _barycenter(dom: GridDomain, values: np.ndarray) -> tuple[float, float]:
    up = np.maximum(values, 0.0)
    w = up * up
    mass = float(w.sum())
    if mass <= 0.0:
        raise NonpositiveField("barycenter undefined: u+ vanishes on the grid")
    pt = (dom.node_coords * w[:, None]).sum(axis=0) / mass
    return (float(pt[0]), float(pt[1]))


class _Objective:
    """Raw-array energy machinery shared by the solver and the level ops."""

    def __init__(self, basis: SpectralBasis, nl: Nonlinearity):
        self.basis = basis
        self.nl = nl
        self.phi = basis.phi
        self.w = basis.weights
        self.h2 = basis.dom.h**2

    def values(self, c: np.ndarray) -> np.ndarray:
        return self.phi @ c

    def energy(self, c: np.ndarray, values: np.ndarray) -> float:
        quad = 0.5 * float(np.sum(self.w * c * c))
        return quad - self.h2 * float(np.sum(H_eval(self.nl, values)))

    def grad(self, c: np.ndarray, values: np.ndarray) -> np.ndarray:
        return self.w * c - self.h2 * (self.phi.T @ h_eval(self.nl, values))

    def nehari_t(self, c: np.ndarray, values: np.ndarray) -> float:
        Q = float(np.sum(self.w * c * c))
        P = self.h2 * float(np.sum(np.maximum(values, 0.0) ** (self.nl.p + 1.0)))
        if P <= 0.0 or Q <= 0.0:
            raise NonpositiveField("Nehari projection undefined: u+ vanishes on the grid")
        return (Q / P) ** (1.0 / (self.nl.p - 1.0))

    def retract(self, c: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = self.nehari_t(c, values)
        return t * c, t * values


def j_value(basis: SpectralBasis, nl: Nonlinearity, u: Field) -> float:
    """J(u) = Q(u) - <h(u), u>_h; zero exactly on the manifold.

    Like every variational operation here, evaluates u through its span
    representation (values synthesized from coeffs); content the analysis
    step truncated away does not participate.
    """
    basis.check_same_domain(u.dom)
    values = basis.phi @ u.coeffs
    Q = float(np.sum(basis.weights * u.coeffs**2))
    inner = basis.dom.h**2 * float(np.sum(h_eval(nl, values) * values))
    return Q - inner


def _require_positive_part(values: np.ndarray) -> None:
    if not np.any(values > 0.0):
        raise NonpositiveField("field has no positive part on the grid")


def nehari_scale(basis: SpectralBasis, nl: Nonlinearity, u: Field) -> float:
    """Closed-form t > 0 with J(t u) = 0 for the power family."""
    basis.check_same_domain(u.dom)
    _require_positive_part(u.values)
    obj = _Objective(basis, nl)
    return obj.nehari_t(u.coeffs, obj.values(u.coeffs))


def nehari_scale_root(basis: SpectralBasis, nl: Nonlinearity, u: Field) -> float:
    """Root-finder route to the projection scale, independent of the closed form.

    Works through generic h evaluations only, so it cross-checks the power
    shortcut. Brackets the sign change of J(t u) by doubling/halving from 1.
    """
    basis.check_same_domain(u.dom)
    _require_positive_part(u.values)
    values = basis.phi @ u.coeffs
    Q = float(np.sum(basis.weights * u.coeffs**2))
    if Q <= 0.0 or not np.any(values > 0.0):
        raise NonpositiveField("Nehari projection undefined: u+ vanishes on the grid")
    h2 = basis.dom.h**2

    def j_of_t(t: float) -> float:
        tv = t * values
        return t * t * Q - h2 * float(np.sum(h_eval(nl, tv) * tv))

    lo = hi = 1.0
    for _ in range(200):
        if j_of_t(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NonpositiveField("no sign change found: positive part too weak to bracket")
    for _ in range(200):
        if j_of_t(lo) > 0.0:
            break
        lo *= 0.5
    else:
        raise NonpositiveField("no sign change found below t=1")
    return float(brentq(j_of_t, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=200))


def ray_max(basis: SpectralBasis, nl: Nonlinearity, u: Field) -> tuple[float, float]:
    """(t*, I(t* u)): the maximum of the energy along the ray through u."""
    obj = _Objective(basis, nl)
    basis.check_same_domain(u.dom)
    values = obj.values(u.coeffs)
    t = obj.nehari_t(u.coeffs, values)
    return t, obj.energy(t * u.coeffs, t * values)


def ray_profile(basis: SpectralBasis, nl: Nonlinearity, u: Field, ts: np.ndarray) -> np.ndarray:
    """I(t u) sampled over ts; one basis synthesis total."""
    obj = _Objective(basis, nl)
    basis.check_same_domain(u.dom)
    values = obj.values(u.coeffs)
    return np.array([obj.energy(t * u.coeffs, t * values) for t in np.asarray(ts, float)])


def gaussian_bump_seed(basis: SpectralBasis, center: tuple[float, float], width: float) -> Field:
    """Gaussian bump analyzed into the basis; the structured localized seed."""
    if width <= 0.0:
        raise ValueError(f"width must be positive, got {width}")
    x = basis.dom.node_coords
    d2 = (x[:, 0] - center[0]) ** 2 + (x[:, 1] - center[1]) ** 2
    return basis.analyze(np.exp(-d2 / (2.0 * width * width)))


def ground_state(
    basis: SpectralBasis,
    nl: Nonlinearity,
    seed: Field,
    tol: float = 1e-8,
    max_iter: int = 20000,
    seed_tag: str = "custom",
    energy_trace: list[float] | None = None,
) -> SolutionRecord:
    """Minimize I over the Nehari manifold by retracted gradient descent.

    Barzilai-Borwein step guess, halving backtracks against an Armijo bound,
    exact retraction after every trial step. Energies of accepted iterates are
    strictly decreasing; pass energy_trace to collect them. On iteration
    exhaustion the best iterate is returned marked unconverged rather than
    raised.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    basis.check_same_domain(seed.dom)
    _require_positive_part(seed.values)
    obj = _Objective(basis, nl)

    c = np.asarray(seed.coeffs, dtype=float)
    values = obj.values(c)
    c, values = obj.retract(c, values)
    I_cur = obj.energy(c, values)
    g = obj.grad(c, values)
    d = g / obj.w
    dv = obj.values(d)
    gd = float(g @ d)

    step = 1.0 / max(1.0, math.sqrt(gd))
    iterations = 0
    converged = False
    prev_c: np.ndarray | None = None
    prev_d: np.ndarray | None = None

    for _ in range(max_iter):
        residual = math.sqrt(max(gd, 0.0)) / (1.0 + abs(I_cur))
        if residual <= tol:
            converged = True
            break

        if prev_c is not None:
            s = c - prev_c
            y = d - prev_d
            sy = float(s @ y)
            if sy > 0.0:
                step = min(max(float(s @ s) / sy, 1e-14), 1e14)

        t = step
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            cand_c = c - t * d
            cand_v = values - t * dv
            try:
                new_c, new_v = obj.retract(cand_c, cand_v)
            except NonpositiveField:
                t *= 0.5
                continue
            I_new = obj.energy(new_c, new_v)
            if I_new <= I_cur - _ARMIJO * t * gd:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break

        prev_c, prev_d = c, d
        c, values, I_cur = new_c, new_v, I_new
        g = obj.grad(c, values)
        d = g / obj.w
        dv = obj.values(d)
        gd = float(g @ d)
        iterations += 1
        if energy_trace is not None:
            energy_trace.append(I_cur)

    residual = math.sqrt(max(gd, 0.0)) / (1.0 + abs(I_cur))
    if residual <= tol:
        converged = True
    vmax = float(values.max())
    positive = bool(float(values.min()) >= -_POSITIVITY_EPS * max(vmax, 1e-300))
    return SolutionRecord(
        u=basis.synthesize(c),
        energy=I_cur,
        residual=residual,
        barycenter=_barycenter(basis.dom, values),
        positive=positive,
        seed_tag=seed_tag,
        iterations=iterations,
        converged=converged,
    )


def _multistart_seeds(
    basis: SpectralBasis, n: int, rng_seed: int
) -> list[tuple[str, tuple[float, float], float]]:
    """Structured centered seed plus randomized centers/widths on interior nodes."""
    dom = basis.dom
    inradius = float(dom.boundary_distance.max())
    base_width = min(0.5 * inradius, 2.0)
    centroid = dom.node_coords.mean(axis=0)
    seeds = [("center", (float(centroid[0]), float(centroid[1])), base_width)]
    rng = np.random.default_rng(rng_seed)
    for i in range(1, n):
        node = dom.node_coords[int(rng.integers(dom.n_interior))]
        width = base_width * (0.5 + rng.random())
        seeds.append((f"random-{i}", (float(node[0]), float(node[1])), width))
    return seeds


def level_c(
    basis: SpectralBasis,
    nl: Nonlinearity,
    n_multistarts: int = 4,
    tol: float = 1e-8,
    max_iter: int = 20000,
    rng_seed: int = 0,
    workers: int = 1,
) -> LevelReport:
    """Ground-state level: minimum converged energy across a multistart batch.

    Starts are independent; with workers > 1 they run on a thread pool (the
    dense basis is shared read-only and the matrix products release the GIL).
    Results are merged by sorting on (energy, seed_tag), so the report does
    not depend on scheduling order.
    """
    if n_multistarts < 1:
        raise ValueError(f"n_multistarts must be >= 1, got {n_multistarts}")
    specs = _multistart_seeds(basis, n_multistarts, rng_seed)

    def run(spec: tuple[str, tuple[float, float], float]) -> SolutionRecord:
        tag, center, width = spec
        seed = gaussian_bump_seed(basis, center, width)
        return ground_state(basis, nl, seed, tol=tol, max_iter=max_iter, seed_tag=tag)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, specs))
    else:
        results = [run(s) for s in specs]

    good = sorted((r for r in results if r.converged), key=lambda r: (r.energy, r.seed_tag))
    if not good:
        raise AllStartsFailed(f"none of {n_multistarts} starts converged at tol={tol}")
    energies = [r.energy for r in good]
    return LevelReport(
        value=energies[0],
        spread=float(max(energies) - min(energies)),
        n_converged=len(good),
        n_requested=n_multistarts,
        records=tuple(good),
    )


def limit_level_estimate(
    nl: Nonlinearity,
    radii: list[float],
    h: float,
    alpha: float = 0.5,
    K: int | None = None,
    tol: float = 1e-8,
    n_multistarts: int = 2,
    rng_seed: int = 0,
    workers: int = 1,
) -> LimitLevelReport:
    """Extrapolate ball levels c(B_xi) over expanding radii at fixed grid step.

    Fits a geometric sequence to the last three levels: with gaps g1, g2 and
    ratio rho = g2/g1 the tail sums to g2 rho/(1 - rho) below the last level.
    Raises NonmonotoneLevels when the levels fail to decrease or the gaps fail
    to shrink, both signs the grid is too coarse for the expansion.

    K defaults to the full span of each grid. Truncating narrow ground states
    inflates their level and can even break the monotone decrease that nested
    grids otherwise guarantee, so a cap is opt-in here, unlike elsewhere.
    """
    if len(radii) < 3:
        raise ValueError(f"need at least 3 radii, got {len(radii)}")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be strictly increasing, got {radii}")

    levels = []
    for xi in radii:
        dom = build_domain("disk", {"R": float(xi)}, lam=1.0, h=h)
        basis = assemble_and_decompose(dom, K=K if K is not None else dom.n_interior, alpha=alpha)
        rep = level_c(
            basis, nl, n_multistarts=n_multistarts, tol=tol,
            rng_seed=rng_seed, workers=workers,
        )
        levels.append(rep.value)

    diffs = np.diff(levels)
    if np.any(diffs >= 0):
        raise NonmonotoneLevels(
            f"levels {levels} not strictly decreasing over radii {radii}; grid too coarse"
        )
    c1, c2, c3 = levels[-3], levels[-2], levels[-1]
    g1, g2 = c1 - c2, c2 - c3
    rho = g2 / g1
    if not 0.0 < rho < 1.0:
        raise NonmonotoneLevels(
            f"level gaps do not shrink (ratio {rho:.3f}); geometric tail undefined"
        )
    value = c3 - g2 * rho / (1.0 - rho)
    return LimitLevelReport(
        value=float(value),
        error_bar=float(g2),
        radii=tuple(float(r) for r in radii),
        levels=tuple(float(v) for v in levels),
    )
