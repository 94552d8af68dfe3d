"""Shared expensive fixtures: bases and solution sets reused across files.

The annulus at lam=4 with h=0.25 is the workhorse configuration for orbit
counting and saddle hunting; building its full-span basis and running the
eight-seed multistart once per session keeps the suite fast.
"""

from __future__ import annotations

import numpy as np
import pytest

from fracfield.domain import build_domain
from fracfield.model import power_model
from fracfield.spectral import assemble_and_decompose
from fracfield.topology import band_saddle, barycenter, multiplicity_search, symmetry_group

ANNULUS_MID_RADIUS = 2.8  # 0.5 (R + r) lam with R=1, r=0.4, lam=4


@pytest.fixture(scope="session")
def annulus4():
    # full span: truncation would inflate energies of stamped translates and
    # break the zero-extension comparison against the ball level
    dom = build_domain("annulus", {"R": 1.0, "r": 0.4}, lam=4.0, h=0.25)
    return assemble_and_decompose(dom, K=dom.n_interior, alpha=0.5)


@pytest.fixture(scope="session")
def disk_host():
    dom = build_domain("disk", {"R": 1.0}, lam=1.0, h=0.1)
    return assemble_and_decompose(dom, alpha=0.5)


@pytest.fixture(scope="session")
def annulus_classes(annulus4):
    nl = power_model()
    centers = [
        (ANNULUS_MID_RADIUS * np.cos(k * np.pi / 4), ANNULUS_MID_RADIUS * np.sin(k * np.pi / 4))
        for k in range(8)
    ]
    return multiplicity_search(annulus4, nl, centers, ball_radius=1.0)


@pytest.fixture(scope="session")
def annulus_band(annulus4, annulus_classes):
    """Climbing-image band between two adjacent images of the lowest class."""
    nl = power_model()
    lo = annulus_classes.classes[0].representative.u
    ref = barycenter(lo).point
    rotated = None
    for perm in symmetry_group(annulus4.dom)[1:]:
        cand = lo.values[perm]
        b = barycenter(annulus4.analyze(cand)).point
        if b[0] * ref[0] < 0 and b[1] * ref[1] > 0:
            rotated = annulus4.analyze(cand)
            break
    assert rotated is not None
    return band_saddle(annulus4, nl, lo, rotated, n_images=13, tol=1e-6)
