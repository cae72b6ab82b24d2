"""Shared fixtures: the order-continuation pulse family is expensive
(roughly forty seconds for k = 2 ... 8), so it is built once per session
and cached on disk between sessions."""

import json
import os

import numpy as np
import pytest

import smoothpulse as sp

_CACHE = os.path.join(os.path.dirname(__file__), "_family_cache.json")


def _load_cache():
    if not os.path.exists(_CACHE):
        return None
    with open(_CACHE) as fh:
        data = json.load(fh)
    if not all(isinstance(v, dict) and "coeffs" in v for v in data.values()):
        return None  # stale pre-full-precision format
    polys = {int(k): sp.PhasePolynomial(tuple(v["coeffs"]))
             for k, v in data.items()}
    full = {int(k): tuple(v["full"]) if v.get("full") else None
            for k, v in data.items()}
    if set(polys) != set(range(2, 9)) or not _residuals_ok(polys):
        return None
    return polys, full


@pytest.fixture(scope="session")
def _family_data():
    cached = _load_cache()
    if cached is not None:
        return cached
    reports = sp.solve_order_family(8)
    polys = {k: rep.coeffs for k, rep in reports.items()}
    full = {k: rep.coeffs_full if rep.coeffs_full else None
            for k, rep in reports.items()}
    with open(_CACHE, "w") as fh:
        json.dump({k: {"coeffs": list(p.coeffs),
                       "full": list(full[k]) if full[k] else None}
                   for k, p in polys.items()}, fh)
    return polys, full


@pytest.fixture(scope="session")
def family(_family_data):
    """Smooth maximal-angle pulses {k: PhasePolynomial} for k = 2 ... 8."""
    return _family_data[0]


@pytest.fixture(scope="session")
def family_full(_family_data):
    """Full-precision coefficient strings {k: tuple[str] | None}.

    Double-rounded coefficients (~1e6 at k = 8) carry ~1e-11 moment
    residuals; small-omega filter evaluation at k >= 7 needs these.
    """
    return _family_data[1]


def _residuals_ok(polys):
    # verify in extended precision: the alternating coefficients reach
    # ~1e6 at k = 8, so double-precision moment sums carry ~1e-10 noise
    for k, poly in polys.items():
        cv = sp.constraint_vector(poly, k, (k + 1) * np.pi,
                                  quad_nodes=96, precision_digits=30)
        if np.max(np.abs(cv.values)) > 1e-9:
            return False
    return True
