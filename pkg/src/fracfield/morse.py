"""Second-variation spectra, Morse indices, and the solution-count comparison.

In the retained-mode coordinates the second variation of the energy at u is
the symmetric K x K matrix

    H[j, k] = (mu_k^alpha + 1) delta_jk - h^2 sum_i h'(u(x_i)) phi_j(x_i) phi_k(x_i),

a diagonal quadratic-form part minus the Gram matrix of the modes under the
node weights h^2 h'(u). The Morse index is the number of eigenvalues below
-eps_null; eigenvalues within eps_null of zero are counted as null and make
the point degenerate. The count check compares the index-1/index-2 census of
a solution list against the prediction 2 P1 - 1 built from hard-coded
Poincare polynomials (rectangle, disk: 1; annulus: 1 + t), split as P1 points
of index 1 and P1 - 1 points of index 2.

Indices are reported for the full space, not the manifold tangent: every
solution carries one negative ray direction, so manifold minima score 1 and
manifold saddles score 2.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EigSolveFailure, OffManifold, UnknownDomainTopology
from .model import Nonlinearity, h_eval, h_prime
from .nehari import SolutionRecord
from .spectral import Field, SpectralBasis

_POINCARE_AT_ONE = {"rectangle": 1, "disk": 1, "annulus": 2}


def default_eps_null(basis: SpectralBasis) -> float:
    """1e-6 (mu_1^alpha + 1): wide enough to catch rotational-orbit modes."""
    return 1e-6 * float(basis.weights[0])


@dataclass(frozen=True)
class HessianSpectrumReport:
    """Eigenvalue census of the second variation at one field.

    morse_index counts eigenvalues below -eps_null, null_count those within
    [-eps_null, eps_null]; nondegenerate means null_count is zero, and only
    then is the critical-group polynomial of the point the single power
    t^morse_index.
    """

    eigenvalues: np.ndarray
    morse_index: int
    null_count: int
    nondegenerate: bool
    eps_null: float


def hessian_matrix(basis: SpectralBasis, nl: Nonlinearity, u: Field) -> np.ndarray:
    """Dense symmetric second-variation matrix at the span representation of u."""
    basis.check_same_domain(u.dom)
    values = basis.phi @ u.coeffs
    w = basis.dom.h**2 * h_prime(nl, values)
    G = basis.phi.T @ (w[:, None] * basis.phi)
    G = 0.5 * (G + G.T)
    H = -G
    H[np.diag_indices_from(H)] += basis.weights
    return H


def hessian_spectrum(
    basis: SpectralBasis,
    nl: Nonlinearity,
    u: Field,
    eps_null: float | None = None,
) -> HessianSpectrumReport:
    """Eigendecompose the second variation and count negative and null modes."""
    eps = default_eps_null(basis) if eps_null is None else float(eps_null)
    if eps <= 0.0:
        raise ValueError(f"eps_null must be positive, got {eps_null}")
    H = hessian_matrix(basis, nl, u)
    try:
        ev = scipy.linalg.eigvalsh(H)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare LAPACK failure
        raise EigSolveFailure(f"Hessian eigendecomposition failed: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise EigSolveFailure("Hessian spectrum contains non-finite eigenvalues")
    morse = int(np.sum(ev < -eps))
    null = int(np.sum(np.abs(ev) <= eps))
    return HessianSpectrumReport(
        eigenvalues=ev,
        morse_index=morse,
        null_count=null,
        nondegenerate=null == 0,
        eps_null=eps,
    )


def perturbation_spectrum(basis: SpectralBasis, nl: Nonlinearity, u: Field) -> np.ndarray:
    """Ascending eigenvalues of the compact part of the second variation.

    Conjugating the Hessian by the quadratic-form weights turns it into
    I - W^(-1/2) G W^(-1/2) with G the h'(u)-weighted Gram matrix of the
    modes: identity minus a compact perturbation, measured in the inner
    product where the quadratic form is the identity. Returned here is the
    spectrum of that perturbation; it decays because the weight divides out
    growing mode energies, so only a thin head of the spectrum is
    non-negligible. At a manifold point with p = 2 the top eigenvalue is
    exactly 2, attained along the ray.
    """
    basis.check_same_domain(u.dom)
    values = basis.phi @ u.coeffs
    w = basis.dom.h**2 * h_prime(nl, values)
    G = basis.phi.T @ (w[:, None] * basis.phi)
    G = 0.5 * (G + G.T)
    sw = 1.0 / np.sqrt(basis.weights)
    return scipy.linalg.eigvalsh(sw[:, None] * G * sw[None, :])


def ray_second_derivative(
    basis: SpectralBasis,
    nl: Nonlinearity,
    u: Field,
    tol: float = 1e-8,
) -> float:
    """d^2/dt^2 I(t u) at t = 1 for u on the manifold: Q - h^2 sum h'(u) u^2.

    Strictly negative there ((1 - p) Q for the power family), which is what
    makes every solution at least index 1. Raises OffManifold when u does not
    satisfy |J(u)| <= tol Q.
    """
    basis.check_same_domain(u.dom)
    values = basis.phi @ u.coeffs
    h2 = basis.dom.h**2
    Q = float(np.sum(basis.weights * u.coeffs**2))
    J = Q - h2 * float(np.sum(h_eval(nl, values) * values))
    if abs(J) > tol * Q:
        raise OffManifold(f"|J(u)| = {abs(J):.3g} exceeds {tol:.1g} Q = {tol * Q:.3g}")
    return Q - h2 * float(np.sum(h_prime(nl, values) * values**2))


def classify_record(
    basis: SpectralBasis,
    nl: Nonlinearity,
    record: SolutionRecord,
    eps_null: float | None = None,
) -> tuple[SolutionRecord, HessianSpectrumReport]:
    """Attach the Morse index of the record's field to the record itself."""
    report = hessian_spectrum(basis, nl, record.u, eps_null=eps_null)
    return dataclasses.replace(record, morse_index=report.morse_index), report


def classify_records(
    basis: SpectralBasis,
    nl: Nonlinearity,
    records: Sequence[SolutionRecord],
    eps_null: float | None = None,
    workers: int = 1,
) -> list[tuple[SolutionRecord, HessianSpectrumReport]]:
    """classify_record over a batch; spectra are independent, so threads help."""
    if workers > 1 and len(records) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda r: classify_record(basis, nl, r, eps_null), records))
    return [classify_record(basis, nl, r, eps_null) for r in records]


@dataclass(frozen=True)
class MorseCountReport:
    """Census of Morse indices against the topological prediction.

    The target counts come from 2 P1 - 1 split as P1 index-1 points and
    P1 - 1 index-2 points. degenerate_tags lists records excluded from the
    census because their spectrum has null modes (the prediction assumes
    nondegenerate points); matches compares only the counted ones.
    """

    shape_id: str
    p1: int
    target_total: int
    target_index1: int
    target_index2: int
    found_index1: int
    found_index2: int
    counted: int
    degenerate_tags: tuple[str, ...]
    matches: bool


def morse_count_check(
    records: Sequence[SolutionRecord],
    shape_id: str,
    spectra: Sequence[HessianSpectrumReport] | None = None,
) -> MorseCountReport:
    """Compare the index-1/index-2 counts of records against 2 P1 - 1.

    Every record must already carry a Morse index (see classify_record).
    When the matching spectra are supplied, records with null modes are
    reported as degenerate and left out of the comparison instead of being
    asserted against a count that assumes nondegeneracy.
    """
    if shape_id not in _POINCARE_AT_ONE:
        raise UnknownDomainTopology(
            f"no Poincare polynomial stored for shape {shape_id!r}; "
            f"known: {sorted(_POINCARE_AT_ONE)}"
        )
    if spectra is not None and len(spectra) != len(records):
        raise ValueError(
            f"got {len(spectra)} spectra for {len(records)} records; must align"
        )
    p1 = _POINCARE_AT_ONE[shape_id]
    degenerate: list[str] = []
    idx1 = idx2 = counted = 0
    for k, rec in enumerate(records):
        if rec.morse_index is None:
            raise ValueError(f"record {rec.seed_tag!r} carries no Morse index")
        if spectra is not None and not spectra[k].nondegenerate:
            degenerate.append(rec.seed_tag)
            continue
        counted += 1
        if rec.morse_index == 1:
            idx1 += 1
        elif rec.morse_index == 2:
            idx2 += 1
    return MorseCountReport(
        shape_id=shape_id,
        p1=p1,
        target_total=2 * p1 - 1,
        target_index1=p1,
        target_index2=p1 - 1,
        found_index1=idx1,
        found_index2=idx2,
        counted=counted,
        degenerate_tags=tuple(degenerate),
        matches=idx1 == p1 and idx2 == p1 - 1,
    )
