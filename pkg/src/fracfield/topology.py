"""Barycenter localization, translated-bump seeding, and multiplicity search.

The domain's shape enters the solution count through two maps: the barycenter
beta(u), which sends low-energy fields to points near the domain, and the
seed map that plants a translated ball ground state at a chosen center and
projects it onto the Nehari manifold. Running the descent solver from seeds
spread over the domain and grouping the results by the grid symmetry group
realizes the category counting numerically: a disk collapses to one orbit
class, an annulus at large scale sustains at least two, and an elastic band
strung between two classes hunts the connecting saddle.

Grid symmetries are the exact mask-preserving subgroup (at most D4); the
continuum rotation orbit on an annulus collapses to finitely many pinned
representatives, so counts here are orbit-class counts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .domain import GridDomain, build_domain, neighborhood_membership
from .errors import BallDoesNotFit, ConstraintViolated, NonpositiveField
from .model import Nonlinearity
from .nehari import (
    SolutionRecord,
    _barycenter,
    _Objective,
    gaussian_bump_seed,
    ground_state,
)
from .spectral import Field, SpectralBasis, assemble_and_decompose

log = logging.getLogger(__name__)

_ARMIJO = 1e-4
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class BarycenterReport:
    """Mass center of the positive part, with optional band membership.

    mass is the quadrature integral h^2 sum (u+)^2; in_omega_plus is set when
    a band was supplied and says whether the point lies within that distance
    of the domain.
    """

    point: tuple[float, float]
    mass: float
    in_omega_plus: bool | None


def barycenter(u: Field, band: float | None = None) -> BarycenterReport:
    """beta(u) = sum x_i (u_i+)^2 / sum (u_i+)^2 over the grid values as given."""
    up = np.maximum(u.values, 0.0)
    w = up * up
    mass = float(w.sum())
    if mass <= 0.0:
        raise NonpositiveField("barycenter undefined: u+ vanishes on the grid")
    pt = _barycenter(u.dom, u.values)
    in_plus = None
    if band is not None:
        in_plus = neighborhood_membership(u.dom, pt, band, side="outer_plus")
    return BarycenterReport(point=pt, mass=u.dom.h**2 * mass, in_omega_plus=in_plus)


_D4 = (
    (1, 0, 0, 1),
    (-1, 0, 0, 1),
    (1, 0, 0, -1),
    (-1, 0, 0, -1),
    (0, 1, 1, 0),
    (0, -1, 1, 0),
    (0, 1, -1, 0),
    (0, -1, -1, 0),
)


def symmetry_group(dom: GridDomain) -> list[np.ndarray]:
    """Mask-preserving D4 elements as interior-index permutations.

    Candidate reflections/rotations act about the grid's own center; any
    candidate that fails to map the interior node set onto itself exactly is
    dropped, so slightly asymmetric grids degrade to smaller groups rather
    than producing wrong permutations. The identity is always first.
    """
    h = dom.h
    cx = 0.5 * (dom.xs[0] + dom.xs[-1])
    cy = 0.5 * (dom.ys[0] + dom.ys[-1])
    key_of = {}
    for i, (x, y) in enumerate(dom.node_coords):
        key_of[(round((x - dom.xs[0]) / h), round((y - dom.ys[0]) / h))] = i

    perms: list[np.ndarray] = []
    for a, b, c, d in _D4:
        perm = np.empty(dom.n_interior, dtype=np.int64)
        ok = True
        for i, (x, y) in enumerate(dom.node_coords):
            tx = cx + a * (x - cx) + b * (y - cy)
            ty = cy + c * (x - cx) + d * (y - cy)
            j = key_of.get((round((tx - dom.xs[0]) / h), round((ty - dom.ys[0]) / h)))
            if j is None:
                ok = False
                break
            perm[i] = j
        if ok:
            perms.append(perm)
    return perms


class PsiSeeder:
    """Cache of a ball ground state, stamped onto a host domain on demand.

    Solves the ground state of B_rho (same grid step as the host, full span)
    once; seed(x) translates it by a grid-aligned shift to the snapped center,
    extends by zero, and projects the result onto the host Nehari manifold.
    """

    def __init__(
        self,
        basis_dom: SpectralBasis,
        nl: Nonlinearity,
        ball_radius: float,
        tol: float = 1e-8,
    ):
        if ball_radius <= 0.0:
            raise ValueError(f"ball_radius must be positive, got {ball_radius}")
        self.basis_dom = basis_dom
        self.nl = nl
        self.ball_radius = float(ball_radius)
        ball_dom = build_domain("disk", {"R": self.ball_radius}, lam=1.0, h=basis_dom.dom.h)
        self.basis_ball = assemble_and_decompose(
            ball_dom, K=ball_dom.n_interior, alpha=basis_dom.alpha
        )
        seed = gaussian_bump_seed(self.basis_ball, (0.0, 0.0), 0.5 * self.ball_radius)
        self.ball_state = ground_state(self.basis_ball, nl, seed, tol=tol, seed_tag="ball-cache")
        self.ball_level = self.ball_state.energy

    def snap(self, x_tilde: tuple[float, float]) -> tuple[float, float]:
        """Nearest host grid node to x_tilde."""
        dom = self.basis_dom.dom
        ix = int(np.clip(round((x_tilde[0] - dom.xs[0]) / dom.h), 0, dom.nx - 1))
        iy = int(np.clip(round((x_tilde[1] - dom.ys[0]) / dom.h), 0, dom.ny - 1))
        return float(dom.xs[ix]), float(dom.ys[iy])

    def seed(self, x_tilde: tuple[float, float]) -> Field:
        return psi_seed(self.basis_ball, self.basis_dom, self.nl, x_tilde,
                        ball_values=self.ball_state.u.values)


def psi_seed(
    basis_ball: SpectralBasis,
    basis_dom: SpectralBasis,
    nl: Nonlinearity,
    x_tilde: tuple[float, float],
    ball_values: np.ndarray | None = None,
) -> Field:
    """Translate the ball ground state to x_tilde, zero-extend, project to M.

    Both grids must share the spacing h; the center snaps to the nearest host
    node so the stamp is an exact node-to-node copy, no interpolation. Raises
    BallDoesNotFit when x_tilde is not inside the domain by at least the ball
    radius.
    """
    dom = basis_dom.dom
    ball_dom = basis_ball.dom
    if abs(ball_dom.h - dom.h) > 1e-12 * dom.h:
        raise ValueError(f"grid steps differ: ball h={ball_dom.h}, domain h={dom.h}")
    radius = ball_dom.params["R"] * ball_dom.lam
    if not neighborhood_membership(dom, x_tilde, radius, side="inner_minus"):
        raise BallDoesNotFit(
            f"center {x_tilde} is closer than {radius} to the boundary of the host domain"
        )
    if ball_values is None:
        rec = ground_state(
            basis_ball, nl,
            gaussian_bump_seed(basis_ball, (0.0, 0.0), 0.5 * radius),
            seed_tag="ball",
        )
        ball_values = rec.u.values

    h = dom.h
    ix0 = round((x_tilde[0] - dom.xs[0]) / h)
    iy0 = round((x_tilde[1] - dom.ys[0]) / h)
    ix0 = int(np.clip(ix0, 0, dom.nx - 1))
    iy0 = int(np.clip(iy0, 0, dom.ny - 1))

    ext = np.zeros(dom.n_interior)
    dropped = 0
    for v, (bx, by) in zip(ball_values, ball_dom.node_coords):
        jx = ix0 + round(bx / h)
        jy = iy0 + round(by / h)
        if 0 <= jx < dom.nx and 0 <= jy < dom.ny:
            idx = dom.index_of[jy, jx]
        else:
            idx = -1
        if idx >= 0:
            ext[idx] = v
        else:
            dropped += 1
    if dropped:
        log.debug("psi_seed: %d ball nodes fell outside the host mask after snapping", dropped)

    f = basis_dom.analyze(ext)
    obj = _Objective(basis_dom, nl)
    values = obj.values(f.coeffs)
    t = obj.nehari_t(f.coeffs, values)
    return basis_dom.synthesize(t * f.coeffs)


def mass_clusters(u: Field, level_frac: float = 0.25) -> tuple[float, ...]:
    """Mass fractions of connected superlevel components of u+, descending.

    Components of {u+ >= level_frac * max u+} under 4-connectivity on the
    grid; each component's share of sum (u+)^2. A single centered bump gives
    (1.0,); a split state gives several comparable fractions.
    """
    if not 0.0 < level_frac < 1.0:
        raise ValueError(f"level_frac must be in (0, 1), got {level_frac}")
    up = np.maximum(u.values, 0.0)
    total = float((up * up).sum())
    if total <= 0.0:
        raise NonpositiveField("mass clustering undefined: u+ vanishes on the grid")
    grid = np.zeros(u.dom.mask.shape)
    grid[u.dom.mask] = up
    labels, n_comp = ndimage.label(grid >= level_frac * up.max())
    fractions = []
    for comp in range(1, n_comp + 1):
        vals = grid[labels == comp]
        fractions.append(float((vals * vals).sum()) / total)
    return tuple(sorted(fractions, reverse=True))


def radial_asymmetry(u: Field, center: tuple[float, float] = (0.0, 0.0)) -> float:
    """||u - equal-radius average of u|| / ||u|| about center.

    Nodes are grouped by exact squared radius (integer r^2/h^2 keys), so a
    field that genuinely depends only on r scores ~1e-15 and the result
    measures angular variation alone. Shells of finite width would instead
    charge a radial field O(h |u'|) for the radius spread inside each bin and
    drown the signal this diagnostic exists to detect.
    """
    x = u.dom.node_coords
    r2 = (x[:, 0] - center[0]) ** 2 + (x[:, 1] - center[1]) ** 2
    keys = np.round(r2 / u.dom.h**2).astype(np.int64)
    norm2 = float(u.values @ u.values)
    if norm2 <= 0.0:
        raise NonpositiveField("radial asymmetry undefined for a zero field")
    _, inverse = np.unique(keys, return_inverse=True)
    counts = np.bincount(inverse)
    sums = np.bincount(inverse, weights=u.values)
    means = sums / counts
    dev = u.values - means[inverse]
    return float(np.sqrt((dev @ dev) / norm2))


@dataclass(frozen=True)
class AnnulusLevelReport:
    """Outcome of the barycenter-pinned minimization on an annulus."""

    value: float
    record: SolutionRecord
    target: tuple[float, float]
    distance_to_target: float
    rho_schedule: tuple[float, ...]


def _penalized_descent(
    obj: _Objective,
    c: np.ndarray,
    rho: float,
    x_tilde: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, float, bool, int]:
    """Retracted BB descent on I + rho |beta(u) - x_tilde|^2.

    The penalty is scale-invariant along rays (beta ignores positive scaling),
    so the Nehari retraction leaves it unchanged and the descent argument for
    the plain solver carries over verbatim.
    """
    coords = obj.basis.dom.node_coords

    def penalty_and_pvals(values: np.ndarray) -> tuple[float, np.ndarray]:
        up = np.maximum(values, 0.0)
        w = up * up
        M = float(w.sum())
        beta = (coords * w[:, None]).sum(axis=0) / M
        gap = beta - x_tilde
        pvals = 4.0 * rho * up * ((coords - beta) @ gap) / M
        return rho * float(gap @ gap), pvals

    values = obj.values(c)
    c, values = obj.retract(c, values)
    pen, pvals = penalty_and_pvals(values)
    F = obj.energy(c, values) + pen
    g = obj.grad(c, values) + obj.phi.T @ pvals
    d = g / obj.w
    dv = obj.values(d)
    gd = float(g @ d)

    step = 1.0 / max(1.0, np.sqrt(gd))
    prev_c: np.ndarray | None = None
    prev_d: np.ndarray | None = None
    iterations = 0
    converged = False

    for _ in range(max_iter):
        residual = np.sqrt(max(gd, 0.0)) / (1.0 + abs(F))
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
            try:
                new_c, new_v = obj.retract(c - t * d, values - t * dv)
            except NonpositiveField:
                t *= 0.5
                continue
            new_pen, new_pvals = penalty_and_pvals(new_v)
            F_new = obj.energy(new_c, new_v) + new_pen
            if F_new <= F - _ARMIJO * t * gd:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        prev_c, prev_d = c, d
        c, values, F = new_c, new_v, F_new
        g = obj.grad(c, values) + obj.phi.T @ new_pvals
        d = g / obj.w
        dv = obj.values(d)
        gd = float(g @ d)
        iterations += 1

    residual = float(np.sqrt(max(gd, 0.0))) / (1.0 + abs(F))
    return c, residual, bool(converged or residual <= tol), iterations


def annulus_level(
    basis: SpectralBasis,
    nl: Nonlinearity,
    x_tilde: tuple[float, float] = (0.0, 0.0),
    rho_multipliers: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0),
    seed: Field | None = None,
    tol: float = 1e-8,
    max_iter: int = 20000,
) -> AnnulusLevelReport:
    """Barycenter-pinned level a(R,r,lam) by quadratic-penalty continuation.

    Minimizes I over the manifold subject to beta(u) near x_tilde, sweeping
    rho upward with warm starts; rho is scaled by (seed energy)/(lam r)^2 so
    the penalty competes with the energy from the first stage on. The default
    seed is a radially symmetric ring at the mid radius, whose barycenter is
    already the center. Fails with ConstraintViolated if the final barycenter
    sits farther than 2h from the target.
    """
    dom = basis.dom
    if dom.shape_id != "annulus":
        raise ValueError(f"annulus_level needs an annulus domain, got {dom.shape_id!r}")
    obj = _Objective(basis, nl)
    target = np.array([float(x_tilde[0]), float(x_tilde[1])])

    if seed is None:
        rr = np.sqrt((dom.node_coords**2).sum(axis=1))
        mid = 0.5 * (dom.params["R"] + dom.params["r"]) * dom.lam
        width = (dom.params["R"] - dom.params["r"]) * dom.lam / 3.0
        seed = basis.analyze(np.exp(-((rr - mid) ** 2) / (2.0 * width * width)))

    c = np.asarray(seed.coeffs, dtype=float)
    values = obj.values(c)
    c, values = obj.retract(c, values)
    e_typ = obj.energy(c, values)
    length = dom.lam * dom.params["r"]
    rhos = tuple(float(m) * abs(e_typ) / length**2 for m in rho_multipliers)

    converged = False
    iterations = 0
    for rho in rhos:
        c, residual, converged, its = _penalized_descent(obj, c, rho, target, tol, max_iter)
        iterations += its

    values = obj.values(c)
    beta = np.array(_barycenter(dom, values))
    dist = float(np.sqrt(((beta - target) ** 2).sum()))
    if dist > 2.0 * dom.h:
        raise ConstraintViolated(
            f"final barycenter {tuple(beta)} sits {dist:.3g} from target {x_tilde}"
            f" (allowed 2h = {2 * dom.h:.3g})"
        )
    energy = obj.energy(c, values)
    vmax = float(values.max())
    record = SolutionRecord(
        u=basis.synthesize(c),
        energy=energy,
        residual=residual,
        barycenter=(float(beta[0]), float(beta[1])),
        positive=bool(float(values.min()) >= -1e-8 * max(vmax, 1e-300)),
        seed_tag="ring-penalty",
        iterations=iterations,
        converged=converged,
    )
    return AnnulusLevelReport(
        value=energy,
        record=record,
        target=(float(target[0]), float(target[1])),
        distance_to_target=dist,
        rho_schedule=rhos,
    )


@dataclass(frozen=True)
class OrbitClass:
    """One symmetry-orbit class of converged solutions."""

    representative: SolutionRecord
    orbit_size: int
    below_ball_level: bool
    beta_in_plus: bool


@dataclass(frozen=True)
class MultiplicityReport:
    """Deduplicated multistart outcome with the localization predicate.

    classes are sorted by energy. ball_level is c(B_rho) for the seeding ball;
    below_ball_level marks classes in the low sublevel where the barycenter is
    predicted to stay within distance rho of the domain (beta_in_plus).
    """

    classes: tuple[OrbitClass, ...]
    ball_level: float
    ball_radius: float
    n_seeds: int
    n_converged: int

    @property
    def n_classes(self) -> int:
        return len(self.classes)


def _l2_orbit_distance(
    a: np.ndarray, b: np.ndarray, perms: list[np.ndarray]
) -> float:
    na = float(np.sqrt(a @ a))
    nb = float(np.sqrt(b @ b))
    scale = max(na, nb, 1e-300)
    best = np.inf
    for perm in perms:
        diff = a - b[perm]
        best = min(best, float(np.sqrt(diff @ diff)) / scale)
    return best


def orbit_classes(
    basis: SpectralBasis,
    records: list[SolutionRecord],
    energy_gap_tol: float = 1e-4,
    l2_dist_tol: float = 1e-2,
) -> list[list[SolutionRecord]]:
    """Group records into symmetry-orbit classes by union-find.

    Two records land in the same class iff their relative energy gap is below
    energy_gap_tol AND some grid-symmetry image brings their relative L2
    distance below l2_dist_tol.
    """
    perms = symmetry_group(basis.dom)
    n = len(records)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            ei, ej = records[i].energy, records[j].energy
            gap = abs(ei - ej) / max(abs(ei), abs(ej), 1e-300)
            if gap >= energy_gap_tol:
                continue
            dist = _l2_orbit_distance(records[i].u.values, records[j].u.values, perms)
            if dist < l2_dist_tol:
                parent[find(i)] = find(j)

    groups: dict[int, list[SolutionRecord]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(records[i])
    return list(groups.values())


def multiplicity_search(
    basis: SpectralBasis,
    nl: Nonlinearity,
    seed_centers: list[tuple[float, float]],
    ball_radius: float,
    tol: float = 1e-8,
    max_iter: int = 20000,
    energy_gap_tol: float = 1e-4,
    l2_dist_tol: float = 1e-2,
) -> MultiplicityReport:
    """Descend from translated-bump seeds and count symmetry-orbit classes.

    Class membership is decided by orbit_classes. Unconverged starts are
    logged and dropped, never raised.
    """
    if not seed_centers:
        raise ValueError("need at least one seed center")
    seeder = PsiSeeder(basis, nl, ball_radius, tol=tol)
    records: list[SolutionRecord] = []
    for k, center in enumerate(seed_centers):
        seed = seeder.seed(center)
        rec = ground_state(
            basis, nl, seed, tol=tol, max_iter=max_iter,
            seed_tag=f"psi-{k}@({center[0]:.3g},{center[1]:.3g})",
        )
        if rec.converged:
            records.append(rec)
        else:
            log.warning("multiplicity start %d at %s did not converge; dropped", k, center)

    n = len(records)
    classes = []
    for members in orbit_classes(basis, records, energy_gap_tol, l2_dist_tol):
        rep = min(members, key=lambda r: r.energy)
        below = rep.energy <= seeder.ball_level * (1.0 + 1e-12)
        in_plus = neighborhood_membership(
            basis.dom, rep.barycenter, ball_radius, side="outer_plus"
        )
        classes.append(OrbitClass(
            representative=rep,
            orbit_size=len(members),
            below_ball_level=below,
            beta_in_plus=in_plus,
        ))
    classes.sort(key=lambda cl: (cl.representative.energy, cl.representative.seed_tag))
    return MultiplicityReport(
        classes=tuple(classes),
        ball_level=seeder.ball_level,
        ball_radius=float(ball_radius),
        n_seeds=len(seed_centers),
        n_converged=n,
    )


@dataclass(frozen=True)
class BandSaddleReport:
    """Climbing-image elastic band outcome between two minimizer classes.

    saddle is the climbing image as a record (converged means its own full
    gradient met the tolerance, i.e. it is a genuine critical point, not just
    the band's highest image); energies is the final path profile.
    """

    saddle: SolutionRecord
    energies: tuple[float, ...]
    converged: bool
    sweeps: int


def band_saddle(
    basis: SpectralBasis,
    nl: Nonlinearity,
    end_a: Field,
    end_b: Field,
    n_images: int = 13,
    tol: float = 1e-6,
    max_sweeps: int = 400,
) -> BandSaddleReport:
    """String method with a climbing image, run inside the Nehari manifold.

    Images interpolate the endpoint coefficients, are retracted onto the
    manifold after every move, and are redistributed by arclength on each
    side of the climbing image so the band cannot slide off the barrier. The
    climbing image follows the gradient with its path-tangent component
    reversed, converging to the saddle instead of the minima.
    """
    if n_images < 5:
        raise ValueError(f"need at least 5 images, got {n_images}")
    obj = _Objective(basis, nl)
    basis.check_same_domain(end_a.dom)
    basis.check_same_domain(end_b.dom)

    ts = np.linspace(0.0, 1.0, n_images)
    path = []
    for t in ts:
        c = (1.0 - t) * end_a.coeffs + t * end_b.coeffs
        path.append(np.asarray(obj.retract(c, obj.values(c))[0]))

    def energy_of(c: np.ndarray) -> float:
        return obj.energy(c, obj.values(c))

    def redistribute(path: list[np.ndarray], lo: int, hi: int) -> None:
        # equal-arclength reparametrization of images strictly between lo, hi
        if hi - lo < 2:
            return
        seg = path[lo : hi + 1]
        lengths = [0.0]
        for a, b in zip(seg, seg[1:]):
            lengths.append(lengths[-1] + float(np.linalg.norm(b - a)))
        total = lengths[-1]
        if total <= 0.0:
            return
        targets = np.linspace(0.0, total, len(seg))
        out = [seg[0]]
        j = 0
        for tgt in targets[1:-1]:
            while lengths[j + 1] < tgt:
                j += 1
            frac = (tgt - lengths[j]) / max(lengths[j + 1] - lengths[j], 1e-300)
            c = (1.0 - frac) * seg[j] + frac * seg[j + 1]
            out.append(np.asarray(obj.retract(c, obj.values(c))[0]))
        out.append(seg[-1])
        path[lo : hi + 1] = out

    step = 0.1
    saddle_residual = np.inf
    sweeps_done = 0
    for sweep in range(max_sweeps):
        energies = [energy_of(c) for c in path]
        k_star = 1 + int(np.argmax(energies[1:-1]))

        moved = []
        for k in range(1, n_images - 1):
            c = path[k]
            values = obj.values(c)
            g = obj.grad(c, values)
            d = g / obj.w
            if k == k_star:
                tau = path[k + 1] - path[k - 1]
                tau /= max(float(np.linalg.norm(tau)), 1e-300)
                d = d - 2.0 * float(d @ tau) * tau
                gd_k = float(g @ (g / obj.w))
                saddle_residual = np.sqrt(max(gd_k, 0.0)) / (1.0 + abs(energies[k]))
                new_c, _ = obj.retract(c - step * d, obj.values(c - step * d))
                moved.append((k, new_c))
            else:
                gd = float(g @ d)
                t = step
                for _ in range(30):
                    try:
                        cand_c, cand_v = obj.retract(c - t * d, values - t * obj.values(d))
                    except NonpositiveField:
                        t *= 0.5
                        continue
                    if obj.energy(cand_c, cand_v) <= energies[k] - _ARMIJO * t * gd:
                        moved.append((k, cand_c))
                        break
                    t *= 0.5
        for k, new_c in moved:
            path[k] = new_c
        sweeps_done = sweep + 1
        if saddle_residual <= tol:
            break
        redistribute(path, 0, k_star)
        redistribute(path, k_star, n_images - 1)

    energies = [energy_of(c) for c in path]
    k_star = 1 + int(np.argmax(energies[1:-1]))
    c = path[k_star]
    values = obj.values(c)
    g = obj.grad(c, values)
    gd = float(g @ (g / obj.w))
    residual = float(np.sqrt(max(gd, 0.0))) / (1.0 + abs(energies[k_star]))
    vmax = float(values.max())
    rec = SolutionRecord(
        u=basis.synthesize(c),
        energy=energies[k_star],
        residual=residual,
        barycenter=_barycenter(basis.dom, values),
        positive=bool(float(values.min()) >= -1e-8 * max(vmax, 1e-300)),
        seed_tag="band-climbing-image",
        iterations=sweeps_done,
        converged=bool(residual <= tol),
    )
    return BandSaddleReport(
        saddle=rec,
        energies=tuple(float(e) for e in energies),
        converged=rec.converged,
        sweeps=sweeps_done,
    )
