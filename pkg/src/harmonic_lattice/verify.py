"""Self-contained verification battery behind `harmlat verify`.

Each check is independent and reports module, invariant name, pass/fail,
and a short witness string.  The quick level runs a trimmed battery in
about a minute; the full level enlarges the sample sizes and adds the
expensive complex-extension scans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from gmpy2 import mpq

from .dirichlet import (
    BoundaryData,
    boundary_cells,
    build_kernel_table,
    compute_ak,
    extension_constant,
    solve_direct,
    solve_kernel,
)
from .extension import (
    DiagonalSeed,
    LShapeData,
    extend_lshape,
    halfplane_construct,
    line_polynomial,
    lshape_growth_bound,
    remez_line_bound,
    seed_cells,
)
from .gallery import (
    ExampleSpec,
    bounded_region_cells,
    build_example,
    check_eigen,
    residual3,
)
from .goodrect import (
    GoodnessConfig,
    SquareFamily,
    find_good_square,
    is_good,
    vitali_select,
)
from .lattice import (
    Cell,
    GridFunction,
    SlopedCell,
    SlopedRect,
    Square,
    growth_profile,
    is_harmonic,
    portion_below,
    sloped_residual,
)
from .numeric import RATIONAL, Scalar
from .propagation import RemainderParams, compose_remainders, propagate_smallness
from .remez import Polynomial, RemezInstance, poly_max, remez_bound


@dataclass
class Check:
    module: str
    name: str
    passed: bool
    witness: str


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _random_boundary(N: int, rng) -> BoundaryData:
    vals = rng.uniform(-1.0, 1.0, len(boundary_cells(N)))
    return BoundaryData.from_vector(N, [Scalar.float_value(float(v), 53) for v in vals])


def _max_diff(u: GridFunction, v: GridFunction) -> float:
    worst = 0.0
    for (c, a), (_, b) in zip(u.items(), v.items()):
        if a is None or b is None:
            continue
        worst = max(worst, abs(float(a) - float(b)))
    return worst


# -- individual checks ----------------------------------------------


def check_kernel_smallest() -> Check:
    t = build_kernel_table(1)
    ok = all(abs(t.P[0, j] - 0.25) == 0.0 for j in range(4))
    return Check("dirichlet", "kernel_table_N1_quarter", ok, f"entries={t.P[0].tolist()}")


def check_kernel_rows(N: int) -> Check:
    t = build_kernel_table(N)
    sums = t.P.sum(axis=1)
    err = float(np.max(np.abs(sums - 1.0)))
    pos = bool(np.all(t.P > 0.0))
    return Check(
        "dirichlet",
        f"kernel_rowsum_positivity_N{N}",
        err <= 1e-10 and pos,
        f"max_rowsum_err={err:.3e} positive={pos}",
    )


def check_solver_agreement(N: int, seed: int) -> Check:
    rng = _rng(seed)
    data = _random_boundary(N, rng)
    u_k = solve_kernel(data)
    u_s = solve_direct(data, "float")
    scale = data.max_abs_float()
    exact_data = BoundaryData(
        N, {c: Scalar.rational(mpq(v.payload)) for c, v in data.values.items()}
    )
    u_e = solve_direct(exact_data, "exact")
    d1 = _max_diff(u_k, u_s)
    d2 = _max_diff(u_k, u_e)
    ok = max(d1, d2) <= 1e-9 * scale
    return Check(
        "dirichlet",
        f"three_solver_agreement_N{N}",
        ok,
        f"kernel_vs_sor={d1:.3e} kernel_vs_exact={d2:.3e}",
    )


def check_ak_lower(N: int) -> Check:
    worst = None
    ok = True
    for k in range(1, 2 * N):
        a = float(compute_ak(N, k, 113))
        lower = k / (2 * N)
        if a < lower:
            ok = False
        margin = a - lower
        if worst is None or margin < worst:
            worst = margin
    return Check("dirichlet", f"ak_linear_lower_bound_N{N}", ok, f"min_margin={worst:.3e}")


def check_extension_constant(N: int) -> Check:
    c = extension_constant(N)
    ok = 0.0 < c <= 4.0
    return Check("dirichlet", f"complex_extension_constant_N{N}", ok, f"N*max|g|={c:.4f}")


def _random_lshape(rng, a2: int, b2: int) -> LShapeData:
    rect = SlopedRect(0, a2, 0, b2)
    return LShapeData(
        rect,
        {p: Scalar.rational(int(rng.integers(-9, 10))) for p in seed_cells(rect)},
    )


def check_lshape_batch(count: int, seed: int) -> Check:
    rng = _rng(seed)
    bad = 0
    for _ in range(count):
        a2 = 2 * int(rng.integers(2, 7))
        b2 = 2 * int(rng.integers(2, 7))
        data = _random_lshape(rng, a2, b2)
        U = extend_lshape(data)
        rep = is_harmonic(U)
        bound = lshape_growth_bound(data)
        peak = max(abs(v) for _, v in U.items())
        if not rep.harmonic or peak > bound:
            bad += 1
    return Check(
        "extension", f"lshape_harmonic_and_bounded_x{count}", bad == 0, f"failures={bad}"
    )


def check_zero_bottom_lines(count: int, seed: int) -> Check:
    rng = _rng(seed)
    bad = 0
    for _ in range(count):
        b2 = 2 * int(rng.integers(2, 4))
        a2 = 2 * int(rng.integers(5 * b2 // 2 + 1, 5 * b2 // 2 + 5))
        rect = SlopedRect(0, a2, 0, b2)
        zero = Scalar.rational(0)
        vals = {}
        for p in seed_cells(rect):
            if p.k2 - rect.b1_2 <= 1:
                vals[p] = zero
            else:
                vals[p] = Scalar.rational(int(rng.integers(-9, 10)))
        data = LShapeData(rect, vals)
        U = extend_lshape(data)
        try:
            lp = line_polynomial(U, rect, rect.b2_2)
        except Exception:
            bad += 1
            continue
        for s2 in rect.line_s2_range(rect.b2_2):
            sign = -1 if ((s2 + rect.b2_2) // 2) % 2 else 1
            got = Scalar.rational(sign * lp.poly(mpq(s2, 2)))
            if got != U.get(SlopedCell(s2, rect.b2_2)):
                bad += 1
                break
    return Check(
        "extension", f"zero_bottom_line_poly_x{count}", bad == 0, f"failures={bad}"
    )


def check_halfplane(count: int, seed: int, N: int) -> Check:
    rng = _rng(seed)
    bad = 0
    for _ in range(count):
        vals = [Scalar.rational(int(rng.integers(-9, 10))) for _ in range(N // 2)]
        u = halfplane_construct(DiagonalSeed(N, vals))
        rep = is_harmonic(u)
        vanish = all(
            u.get(c).is_zero() for c in u.window.cells() if c.n - c.m >= 0
        )
        if not rep.harmonic or not vanish:
            bad += 1
    return Check(
        "extension", f"halfplane_harmonic_vanishing_x{count}", bad == 0, f"failures={bad}"
    )


def check_remez_worked() -> Check:
    # p(x) = x^2 on [0, 100] with E = [0, 1]: bound 4^2 * 100^2 * 1 vs true 10^4
    p = Polynomial([0, 0, 1])
    inst = RemezInstance.with_subintervals(mpq(0), mpq(100), [(mpq(0), mpq(1))])
    b = remez_bound(p, inst, mpq(1))
    true = poly_max(p, mpq(0), mpq(100)).attained
    ok = b >= true and true == 10**4
    return Check("remez", "worked_example_domination", ok, f"bound={b} true={true}")


def check_remez_fuzz(count: int, seed: int) -> Check:
    rng = _rng(seed)
    bad = 0
    for _ in range(count):
        deg = int(rng.integers(1, 8))
        p = Polynomial([int(rng.integers(-9, 10)) for _ in range(deg + 1)])
        lo, hi = mpq(-2), mpq(3)
        cut = mpq(int(rng.integers(1, 10)), 10)
        inst = RemezInstance.with_subintervals(lo, hi, [(lo, lo + 5 * cut)])
        sup_e = poly_max(p, lo, lo + 5 * cut, mode="fast").bound
        b = remez_bound(p, inst, sup_e)
        true = poly_max(p, lo, hi, mode="fast").attained
        if b < true:
            bad += 1
    return Check("remez", f"bound_domination_fuzz_x{count}", bad == 0, f"failures={bad}")


def check_gallery() -> Check:
    msgs = []
    u = build_example(ExampleSpec("chelkak34", 12))
    rep = is_harmonic(u)
    one = Scalar.of(1, u.kind)
    bounded = all(abs(u.get(c)) <= one for c in bounded_region_cells(12))
    msgs.append(f"chelkak(harm={rep.harmonic},bounded={bounded})")
    ok = rep.harmonic and bounded

    e = build_example(ExampleSpec("eigen2d", 8))
    eig = check_eigen(e, Scalar.rational(-4))
    msgs.append(f"eigen2d={eig}")
    ok = ok and eig

    w = build_example(ExampleSpec("lift3d", 4))
    res = all(
        residual3(w, x, y, z).is_zero()
        for x in range(-3, 4)
        for y in range(-3, 4)
        for z in range(-3, 4)
    )
    msgs.append(f"lift3d_harmonic={res}")
    ok = ok and res
    return Check("gallery", "examples_exact", ok, " ".join(msgs))


def check_portion(N: int) -> Check:
    u = build_example(ExampleSpec("chelkak34", N))
    frac = portion_below(u, Scalar.of(1, u.kind), Square(Cell(0, 0), N))
    err = abs(float(frac) - 0.75)
    return Check("gallery", f"portion_three_quarters_Q{N}", err <= 0.01, f"|frac-3/4|={err:.4f}")


def check_growth_slope(N: int) -> Check:
    u = build_example(ExampleSpec("chelkak34", N))
    prof = growth_profile(u, list(range(1, N + 1)))
    slope = prof.fitted_slope(k_min=N // 2)
    target = float(np.log(2 + np.sqrt(3.0)))
    rel = abs(slope - target) / target
    return Check("lattice", f"growth_slope_Q{N}", rel <= 0.01, f"rel_err={rel:.4f}")


def check_propagation(count: int, seed: int, N: int) -> Check:
    rng = _rng(seed)
    bad = 0
    cases = {"i": 0, "ii": 0}
    for _ in range(count):
        data = _random_boundary(N, rng)
        rep = propagate_smallness(data, 0, 1.0, gamma=mpq(1, 33))
        cases[rep.case] = cases.get(rep.case, 0) + 1
        if not rep.dominates:
            bad += 1
    return Check(
        "propagation",
        f"smallness_domination_x{count}_N{N}",
        bad == 0,
        f"failures={bad} cases={cases}",
    )


def check_compose(count: int, seed: int) -> Check:
    rng = _rng(seed)
    bad = 0
    for _ in range(count):
        inner = RemainderParams(
            float(rng.uniform(1.0, 5.0)),
            float(rng.uniform(0.05, 0.95)),
            float(rng.uniform(0.1, 2.0)),
        )
        outer = RemainderParams(
            float(rng.uniform(1.0, 5.0)),
            float(rng.uniform(0.05, 0.95)),
            float(rng.uniform(0.1, 2.0)),
        )
        comp = compose_remainders(inner, outer)
        if not (0.0 < comp.beta < 1.0 and comp.C >= 1.0 and comp.c > 0.0):
            bad += 1
    return Check("propagation", f"compose_remainders_x{count}", bad == 0, f"failures={bad}")


def check_goodrect_zero() -> Check:
    amb = Square(Cell(0, 0), 40)
    zero = GridFunction.from_callable(amb, RATIONAL, lambda c: Scalar.rational(0))
    from .lattice import to_sloped

    U = to_sloped(zero)
    res = find_good_square(U, 20)
    ok = res.succeeded and is_good(U, res.base)
    return Check(
        "goodrect",
        "zero_grid_good_square",
        ok,
        f"found={res.found} bad_fraction={res.bad_fraction}",
    )


def check_vitali(count: int, seed: int) -> Check:
    rng = _rng(seed)
    bad = 0
    for _ in range(count):
        amb = SlopedRect(-20, 20, -20, 20)
        squares = []
        for _ in range(int(rng.integers(4, 14))):
            e = int(rng.integers(0, 8))
            a1 = int(rng.integers(-20, 21 - e))
            b1 = int(rng.integers(-20, 21 - e))
            squares.append(SlopedRect(a1, a1 + e, b1, b1 + e))
        try:
            vitali_select(SquareFamily(amb, squares))
        except Exception:
            bad += 1
    return Check("goodrect", f"vitali_cover_x{count}", bad == 0, f"failures={bad}")


def check_cli_determinism() -> Check:
    import tempfile
    from pathlib import Path

    from click.testing import CliRunner

    from .cli import main as cli_main

    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for i in range(2):
            path = str(Path(tmp) / f"u{i}.json")
            r = runner.invoke(
                cli_main, ["solve", "--n", "6", "--seed", "7", "--out", path]
            )
            if r.exit_code != 0:
                return Check("cli", "byte_identical_rerun", False, f"exit={r.exit_code}")
            outs.append(Path(path).read_bytes())
        ok = outs[0] == outs[1]
    return Check("cli", "byte_identical_rerun", ok, f"bytes={len(outs[0])}")


# -- batteries -------------------------------------------------------


def verify_suite(level: str = "quick") -> list[Check]:
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    full = level == "full"
    checks = [
        check_kernel_smallest(),
        check_kernel_rows(8),
        check_solver_agreement(6, seed=11),
        check_ak_lower(16),
        check_lshape_batch(100 if full else 25, seed=21),
        check_zero_bottom_lines(40 if full else 10, seed=22),
        check_halfplane(10 if full else 4, seed=23, N=16),
        check_remez_worked(),
        check_remez_fuzz(2000 if full else 300, seed=31),
        check_gallery(),
        check_portion(200 if full else 60),
        check_growth_slope(80 if full else 60),
        check_compose(1000 if full else 200, seed=41),
        check_goodrect_zero(),
        check_vitali(100 if full else 20, seed=51),
        check_cli_determinism(),
    ]
    if full:
        checks.append(check_kernel_rows(32))
        checks.append(check_solver_agreement(12, seed=12))
        checks.append(check_ak_lower(64))
        for N in (16, 32, 64):
            checks.append(check_extension_constant(N))
        checks.append(check_propagation(10, seed=61, N=64))
    else:
        checks.append(check_extension_constant(16))
        checks.append(check_propagation(3, seed=61, N=64))
    return checks
