import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filmlattice.core import A, B, GridSpec, from_columns, make_flat
from filmlattice.diagnostics import (
    diagnose,
    dyadic_radii,
    infiltration_check,
    interior_ball_radius,
    profile_report,
)

from conftest import configurations, random_configuration

SPEC16 = GridSpec(16, 16, 1.0)


def crevasse():
    return from_columns(SPEC16, ["A" * 14] * 7 + ["A" * 6] + ["A" * 14] * 8)


def naive_infiltration(cfg, eps, radii):
    """Cell-by-cell counting with exact half-square overlaps; S below row 0, V above the ceiling."""
    nx, ny = cfg.spec.nx, cfg.spec.ny
    grid = cfg.grid

    def phase(i, j):
        if j < 0:
            return "S"
        if j >= ny:
            return "V"
        return "V" if grid[i % nx, j] == 0 else "F"

    found = set()
    for r in radii:
        q = r / 4
        for x0 in range(nx):
            for y0 in range(-r, ny + 1):
                for name, want in (("V", "V"), ("AB", "F")):
                    if name == "AB" and y0 < 0:
                        continue
                    big = sum(phase(i, j) == want for i in range(x0, x0 + r) for j in range(y0, y0 + r))
                    if big >= eps * r * r:
                        continue
                    lo_x, hi_x, lo_y, hi_y = x0 + q, x0 + r - q, y0 + q, y0 + r - q
                    small = any(
                        phase(i, j) == want
                        for i in range(int(np.floor(lo_x)), int(np.ceil(hi_x)))
                        for j in range(int(np.floor(lo_y)), int(np.ceil(hi_y)))
                    )
                    if small:
                        c = cfg.spec.cell
                        found.add((((x0 + r / 2) % nx) * c, (y0 + r / 2) * c, r, name, big / (r * r)))
    return found


def as_set(violations):
    return {(v.center[0], v.center[1], v.r, v.phases, v.fraction) for v in violations}


def test_flat_film_has_no_violations():
    for h in (0, 3, 8, 16):
        cfg = make_flat(SPEC16, h, A)
        for eps in (0.001, 0.01):
            assert infiltration_check(cfg, eps) == []


def test_crevasse_is_flagged():
    cfg = crevasse()
    v = infiltration_check(cfg, 0.2, [2, 4, 8])
    assert v and {x.phases for x in v} == {"V"}
    assert all(x.r in (4, 8) and x.fraction < 0.2 for x in v)
    # every flagged square sits on the crevasse column
    assert all(abs(x.center[0] - 7.5 / 16) <= 2 / 16 for x in v)
    assert as_set(v) == naive_infiltration(cfg, 0.2, [2, 4, 8])


def test_eps_zero_is_vacuous():
    assert infiltration_check(crevasse(), 0.0, [2, 4, 8]) == []


def test_radius_validation():
    with pytest.raises(ValueError):
        infiltration_check(crevasse(), 0.1, [3])
    with pytest.raises(ValueError):
        infiltration_check(crevasse(), 0.1, [0])
    assert dyadic_radii(crevasse()) == [2, 4, 8, 16]
    assert dyadic_radii(make_flat(GridSpec(6, 12, 1.0), 1)) == [2, 4]


def test_infiltration_matches_naive_count(rng):
    for k in range(12):
        cfg = random_configuration(rng, 6 + k % 3, 5 + k % 4, p_a=0.7)
        for eps in (0.1, 0.3, 0.6):
            radii = dyadic_radii(cfg)
            assert as_set(infiltration_check(cfg, eps, radii)) == naive_infiltration(cfg, eps, radii)


def test_interior_ball_examples():
    cap = SPEC16.width_L
    assert interior_ball_radius(make_flat(SPEC16, 4, A)) == cap
    assert interior_ball_radius(make_flat(SPEC16, 4, A)) == interior_ball_radius(make_flat(SPEC16, 9, B))
    d = SPEC16.cell
    spike = from_columns(SPEC16, ["AA"] * 7 + ["A" * 10] + ["AA"] * 8)
    r = interior_ball_radius(spike)
    assert 0 < r <= d / 2 + d / 4
    with pytest.raises(ValueError):
        interior_ball_radius(make_flat(SPEC16, 0))


@settings(max_examples=30)
@given(configurations(min_nx=3, max_nx=8, max_ny=8), st.integers(0, 7))
def test_interior_ball_invariances(cfg, shift):
    if not np.any(cfg.heights):
        return
    r = interior_ball_radius(cfg)
    assert r >= 0
    assert interior_ball_radius(cfg.roll(shift)) == pytest.approx(r, abs=1e-9)
    assert interior_ball_radius(cfg.mirror()) == pytest.approx(r, abs=1e-9)


def test_interior_ball_vertical_shift():
    low = from_columns(SPEC16, ["A" * h for h in [2, 3, 5, 5, 4, 2, 2, 2, 3, 3, 3, 2, 2, 2, 2, 2]])
    high = from_columns(SPEC16, ["A" * (h + 6) for h in low.heights])
    assert interior_ball_radius(low) == interior_ball_radius(high)


def test_profile_report_examples():
    flat = profile_report(make_flat(SPEC16, 3))
    assert flat.jump_columns == [] and flat.lipschitz_estimate == 0 and not flat.touches_ceiling
    stairs = profile_report(from_columns(GridSpec(8, 8, 1.0), ["A" * h for h in range(8)]))
    assert stairs.lipschitz_estimate == 1
    assert stairs.jump_columns == [7]  # the wrap from 7 back to 0
    terrace = from_columns(SPEC16, ["AA"] * 8 + ["A" * 8] * 8)
    rep = profile_report(terrace, jump_threshold=4)
    assert rep.jump_columns == [7, 15]
    assert profile_report(make_flat(SPEC16, 16)).touches_ceiling
    steep = from_columns(SPEC16, ["AA"] * 8 + ["A" * 12] * 8)
    rep = profile_report(steep, jump_threshold=12, slope_cap=8)
    assert rep.jump_columns == [] and rep.singular_columns == [7, 15] and rep.lipschitz_estimate == 10
    with pytest.raises(ValueError):
        profile_report(terrace, jump_threshold=1)


@given(configurations(), st.integers(2, 6))
def test_jumps_are_definitional(cfg, threshold):
    rep = profile_report(cfg, threshold)
    h = cfg.heights.astype(int)
    diffs = np.abs(np.roll(h, -1) - h)
    assert (rep.jump_columns == []) == (diffs.max() < threshold)
    assert set(rep.jump_columns) <= set(rep.singular_columns)
    assert rep.lipschitz_estimate >= 0


def test_diagnose_report_formats():
    rep = diagnose(crevasse(), eps=0.2, radii=[2, 4, 8])
    assert not rep.ok
    text = rep.to_text()
    assert text.splitlines()[0] == "[infiltration]" and "[profile]" in text and "[interior_ball]" in text
    assert f"violations = {len(rep.infiltration_violations)}" in text
    rows = rep.violations_csv().splitlines()
    assert rows[0] == "center_x,center_y,r_cells,phases,fraction"
    assert len(rows) == len(rep.infiltration_violations) + 1
    empty = diagnose(make_flat(SPEC16, 0))
    assert empty.ok and empty.interior_ball_radius is None and "radius = n/a" in empty.to_text()
