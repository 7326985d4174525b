"""Command-line surface: one command per mechanism, deterministic outputs.

Every output file starts with a header block (tool version, command,
config echo, seed, scalar kind) and is byte-identical on rerun with the
same config.  Randomized experiments require an explicit seed and use
the Philox counter-based generator, so streams are reproducible
bit-for-bit from the seed alone.

Exit codes: 0 success, 1 precondition failure (machine-readable reason
on stderr), 2 I/O error.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np
from gmpy2 import mpq

from . import __version__
from .dirichlet import (
    BoundaryData,
    DirichletError,
    boundary_cells,
    build_kernel_table,
    solve_direct,
    solve_kernel,
)
from .extension import (
    DiagonalSeed,
    ExtensionError,
    LShapeData,
    extend_lshape,
    halfplane_construct,
    seed_cells,
)
from .gallery import ExampleSpec, GalleryError, build_example
from .goodrect import (
    GoodnessConfig,
    GoodRectError,
    SquareFamily,
    find_good_square,
    maximal_good_squares,
    vitali_select,
)
from .lattice import (
    Cell,
    LatticeError,
    SlopedRect,
    Square,
    doubling_report,
    grid_to_csv,
    grid_to_json,
    growth_profile,
    portion_below,
    to_sloped,
)
from .numeric import RATIONAL, Scalar, ScalarError, parse_kind
from .propagation import (
    GAMMA_MAX,
    PropagationError,
    propagate_smallness,
    three_circle_report,
)
from .remez import Polynomial, RemezError, RemezInstance, poly_max, remez_bound_discrete

_PRECONDITION_ERRORS = (
    DirichletError,
    ExtensionError,
    GalleryError,
    GoodRectError,
    LatticeError,
    PropagationError,
    RemezError,
    ScalarError,
    ValueError,
)

RNG_NAME = "philox"


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _header_lines(command: str, config: dict, seed=None, kind=None) -> list[str]:
    lines = [
        f"# tool=harmlat version={__version__}",
        f"# command={command}",
        f"# config={json.dumps(config, sort_keys=True, default=str)}",
    ]
    if seed is not None:
        lines.append(f"# rng={RNG_NAME} seed={seed}")
    if kind is not None:
        lines.append(f"# kind={kind}")
    return lines


def _json_payload(command: str, config: dict, result, seed=None, kind=None) -> str:
    doc = {
        "tool": "harmlat",
        "version": __version__,
        "command": command,
        "config": config,
        "result": result,
    }
    if seed is not None:
        doc["rng"] = {"algorithm": RNG_NAME, "seed": seed}
    if kind is not None:
        doc["scalar_kind"] = str(kind)
    return json.dumps(doc, sort_keys=True, indent=2, default=str) + "\n"


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as ex:
        click.echo(json.dumps({"error": "io", "reason": str(ex)}), err=True)
        sys.exit(2)


def _fail(reason: str) -> None:
    click.echo(json.dumps({"error": "precondition", "reason": reason}), err=True)
    sys.exit(1)


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as ex:
        click.echo(json.dumps({"error": "io", "reason": str(ex)}), err=True)
        sys.exit(2)


def _merge_config(ctx_params: dict, config_path: str | None) -> dict:
    """Config file values fill in parameters the flags left at defaults."""
    if not config_path:
        return ctx_params
    file_cfg = _read_json(config_path)
    merged = dict(ctx_params)
    for key, value in file_cfg.items():
        key = key.replace("-", "_")
        if merged.get(key) is None:
            merged[key] = value
    return merged


def _random_boundary(N: int, seed: int) -> BoundaryData:
    rng = _rng(seed)
    vals = rng.uniform(-1.0, 1.0, len(boundary_cells(N)))
    return BoundaryData.from_vector(N, [Scalar.float_value(float(v), 53) for v in vals])


def _rect_json(R):
    return None if R is None else [R.a1_2, R.a2_2, R.b1_2, R.b2_2]


def _parse_radii(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


@click.group()
def main():
    """Discrete harmonic function laboratory."""


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--boundary", type=str, default=None, help="Boundary data JSON path.")
@click.option("--seed", type=int, default=None, help="Random boundary data seed.")
@click.option("--method", type=click.Choice(["kernel", "sor", "exact"]), default="kernel")
@click.option("--out", type=str, required=True)
@click.option("--config", "config_path", type=str, default=None)
def solve(n, boundary, seed, method, out, config_path):
    """Solve the Dirichlet problem on Q_N."""
    cfg = _merge_config(
        {"n": n, "boundary": boundary, "seed": seed, "method": method}, config_path
    )
    try:
        if cfg["boundary"]:
            data = BoundaryData.from_json(_read_json(cfg["boundary"]))
        elif cfg["seed"] is not None:
            data = _random_boundary(cfg["n"], cfg["seed"])
        else:
            raise DirichletError("need --boundary or --seed")
        if cfg["method"] == "kernel":
            u = solve_kernel(data)
        elif cfg["method"] == "sor":
            u = solve_direct(data, "float")
        else:
            if data.kind != RATIONAL:
                data = BoundaryData(
                    data.N, {c: Scalar.rational(mpq(v.payload)) for c, v in data.values.items()}
                )
            u = solve_direct(data, "exact")
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    _write(out, _json_payload("solve", cfg, grid_to_json(u), seed=cfg["seed"], kind=u.kind))


@main.command("kernel-dump")
@click.option("--n", type=int, required=True)
@click.option("--out", type=str, required=True)
def kernel_dump(n, out):
    """Dump the Poisson kernel table as CSV."""
    cfg = {"n": n}
    try:
        table = build_kernel_table(n)
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    head = "\n".join(_header_lines("kernel-dump", cfg)) + "\n"
    _write(out, head + table.to_csv())


@main.command("extend-lshape")
@click.option("--data", "data_path", type=str, default=None, help="LShapeData JSON path.")
@click.option("--a2", type=int, default=None, help="Doubled right bound of a random rect.")
@click.option("--b2", type=int, default=None, help="Doubled top bound of a random rect.")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=str, required=True)
def extend_lshape_cmd(data_path, a2, b2, seed, out):
    """Harmonically extend L-shape data across its rectangle."""
    cfg = {"data": data_path, "a2": a2, "b2": b2, "seed": seed}
    try:
        if data_path:
            data = LShapeData.from_json(_read_json(data_path))
        else:
            if seed is None or a2 is None or b2 is None:
                raise ExtensionError("need --data or all of --a2/--b2/--seed")
            rng = _rng(seed)
            rect = SlopedRect(0, a2, 0, b2)
            data = LShapeData(
                rect,
                {
                    p: Scalar.rational(int(rng.integers(-9, 10)))
                    for p in seed_cells(rect)
                },
            )
        u = extend_lshape(data)
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    _write(out, _json_payload("extend-lshape", cfg, grid_to_json(u), seed=seed, kind=u.kind))


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--diagonals", type=int, default=None)
@click.option("--values", type=str, default=None, help="Comma-separated rational seeds.")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=str, required=True)
def halfplane(n, diagonals, values, seed, out):
    """Build a harmonic function vanishing on the half-plane n - m >= 0."""
    cfg = {"n": n, "diagonals": diagonals, "values": values, "seed": seed}
    try:
        if values:
            vals = [Scalar.rational(mpq(v)) for v in values.split(",")]
        elif seed is not None:
            rng = _rng(seed)
            count = diagonals or n
            vals = [Scalar.rational(int(rng.integers(-9, 10))) for _ in range(count)]
        else:
            raise ExtensionError("need --values or --seed")
        u = halfplane_construct(DiagonalSeed(n, vals))
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    _write(out, _json_payload("halfplane", cfg, grid_to_json(u), seed=seed, kind=u.kind))


@main.command()
@click.option("--name", type=str, required=True)
@click.option("--window", type=int, required=True)
@click.option("--values", type=str, default=None, help="Halfplane seed values.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=str, required=True)
def example(name, window, values, fmt, out):
    """Build a gallery example."""
    cfg = {"name": name, "window": window, "values": values, "format": fmt}
    try:
        seed = tuple(mpq(v) for v in values.split(",")) if values else ()
        built = build_example(ExampleSpec(name, window, seed))
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    if hasattr(built, "radius"):  # 3D grid
        head = "\n".join(_header_lines("example", cfg, kind=built.kind)) + "\n"
        _write(out, head + built.to_csv())
        return
    if fmt == "csv":
        head = "\n".join(_header_lines("example", cfg, kind=built.kind)) + "\n"
        _write(out, head + grid_to_csv(built))
    else:
        _write(out, _json_payload("example", cfg, grid_to_json(built), kind=built.kind))


@main.command()
@click.option("--name", type=str, required=True)
@click.option("--window", type=int, required=True)
@click.option("--threshold", type=str, default="1")
@click.option("--values", type=str, default=None)
@click.option("--out", type=str, required=True)
def portion(name, window, threshold, values, out):
    """Exact fraction of window cells with |u| <= threshold."""
    cfg = {"name": name, "window": window, "threshold": threshold, "values": values}
    try:
        seed = tuple(mpq(v) for v in values.split(",")) if values else ()
        u = build_example(ExampleSpec(name, window, seed))
        if hasattr(u, "radius"):
            raise GalleryError("portion is defined for 2D examples")
        frac = portion_below(u, Scalar.rational(mpq(threshold)), Square(Cell(0, 0), window))
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    result = {"fraction": str(frac), "fraction_float": float(frac)}
    _write(out, _json_payload("portion", cfg, result, kind=u.kind))


def _example_grid(name: str, window: int, values: str | None):
    seed = tuple(mpq(v) for v in values.split(",")) if values else ()
    u = build_example(ExampleSpec(name, window, seed))
    if hasattr(u, "radius"):
        raise GalleryError("need a 2D example")
    return u


@main.command()
@click.option("--example", "name", type=str, required=True)
@click.option("--radii", type=str, required=True, help="e.g. 1..100 or 1,2,5")
@click.option("--values", type=str, default=None)
@click.option("--out", type=str, required=True)
def growth(name, radii, values, out):
    """CSV of (K, M(K)) with the fitted log-slope."""
    cfg = {"example": name, "radii": radii, "values": values}
    try:
        rs = _parse_radii(radii)
        u = _example_grid(name, max(rs), values)
        profile = growth_profile(u, rs)
        slope = profile.fitted_slope()
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    lines = _header_lines("growth", cfg, kind=u.kind)
    lines.append("K,max_abs,log_max,fitted_slope")
    for K, m, lg in zip(profile.radii, profile.maxima, profile.log_maxima()):
        lines.append(f"{K},{float(m)!r},{lg!r},{slope!r}")
    _write(out, "\n".join(lines) + "\n")


@main.command()
@click.option("--example", "name", type=str, required=True)
@click.option("--radii", type=str, required=True)
@click.option("--c1", type=float, default=1.3)
@click.option("--values", type=str, default=None)
@click.option("--out", type=str, required=True)
def doubling(name, radii, c1, values, out):
    """Doubling dichotomy labels along a radius list."""
    cfg = {"example": name, "radii": radii, "c1": c1, "values": values}
    try:
        rs = _parse_radii(radii)
        u = _example_grid(name, max(rs), values)
        entries = doubling_report(growth_profile(u, rs), c1)
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    lines = _header_lines("doubling", cfg, kind=u.kind)
    lines.append("K,power32,exponential,label")
    for e in entries:
        lines.append(f"{e.radius},{e.power32},{e.exponential},{e.label}")
    _write(out, "\n".join(lines) + "\n")


@main.command("remez-check")
@click.option("--poly", type=str, required=True, help="Coefficients, constant first.")
@click.option("--lo", type=str, required=True)
@click.option("--hi", type=str, required=True)
@click.option("--points", type=str, default=None, help="Integer points for the discrete bound.")
@click.option("--bound-m", "bound_m", type=str, default=None)
@click.option("--mode", type=click.Choice(["certified", "fast"]), default="certified")
@click.option("--out", type=str, required=True)
def remez_check(poly, lo, hi, points, bound_m, mode, out):
    """Certified polynomial maximum and Remez bounds."""
    cfg = {"poly": poly, "lo": lo, "hi": hi, "points": points, "bound_m": bound_m, "mode": mode}
    try:
        p = Polynomial.from_string(poly)
        r = poly_max(p, mpq(lo), mpq(hi), mode=mode)
        result = {
            "degree": p.degree,
            "max_bound": str(r.bound),
            "max_attained": str(r.attained),
            "argmax": str(r.argmax),
            "certified": r.certified,
        }
        if points:
            pts = [mpq(x) for x in points.split(",")]
            M = mpq(bound_m) if bound_m else max(abs(p(x)) for x in pts)
            inst = RemezInstance.with_points(mpq(lo), mpq(hi), pts)
            b = remez_bound_discrete(p, inst, M)
            result["discrete_bound"] = str(b)
            result["discrete_dominates"] = bool(b >= r.attained)
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    _write(out, _json_payload("remez-check", cfg, result))


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--line", type=int, default=0)
@click.option("--sigma", type=float, required=True)
@click.option("--gamma", type=str, default=None)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=str, required=True)
def propagate(n, line, sigma, gamma, seed, out):
    """Propagate smallness along one line of a random Dirichlet solution.

    The effective gamma is raised to at least 2/N (recorded in the
    report) so the small window contains enough integers at desk scale.
    """
    cfg = {"n": n, "line": line, "sigma": sigma, "gamma": gamma, "seed": seed}
    try:
        data = _random_boundary(n, seed)
        g = mpq(gamma) if gamma is not None else mpq(1, 2**14)
        g_eff = min(max(g, mpq(2, n)), GAMMA_MAX)
        report = propagate_smallness(data, line, sigma, gamma=g_eff)
        result = report.to_json()
        result["gamma_requested"] = str(g)
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    _write(out, _json_payload("propagate", cfg, result, seed=seed, kind="float(53)"))


@main.command("three-circle")
@click.option("--example", "name", type=str, default=None)
@click.option("--n", type=int, required=True)
@click.option("--sigma", type=float, default=None)
@click.option("--c", type=float, default=1.0)
@click.option("--seed", type=int, default=None)
@click.option("--values", type=str, default=None)
@click.option("--out", type=str, required=True)
def three_circle(name, n, sigma, c, seed, values, out):
    """Descriptive three-circle exponent fit on Q_{N/4}, Q_{N/2}, Q_N."""
    cfg = {"example": name, "n": n, "sigma": sigma, "c": c, "seed": seed, "values": values}
    try:
        if name:
            u = _example_grid(name, n, values)
        elif seed is not None:
            u = solve_kernel(_random_boundary(n, seed))
        else:
            raise PropagationError("need --example or --seed")
        if sigma is None:
            quarter = Square(u.window.center, max(n // 4, 1))
            sigma = max(
                abs(float(v))
                for cell, v in u.items()
                if v is not None and cell in quarter
            )
        report = three_circle_report(u, n, sigma, "fit", c=c)
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    _write(out, _json_payload("three-circle", cfg, report.to_json(), seed=seed, kind=u.kind))


@main.command("goodrect-scan")
@click.option("--example", "name", type=str, required=True)
@click.option("--k", type=int, required=True)
@click.option("--window", type=int, required=True)
@click.option("--a", "base_a", type=str, default="7")
@click.option("--values", type=str, default=None)
@click.option("--out", type=str, required=True)
def goodrect_scan(name, k, window, base_a, values, out):
    """Good-square search on a sloped view of an example."""
    cfg = {"example": name, "k": k, "window": window, "a": base_a, "values": values}
    try:
        u = _example_grid(name, window, values)
        U = to_sloped(u)
        gcfg = GoodnessConfig(Scalar.rational(mpq(base_a)))
        res = find_good_square(U, k, gcfg)
        result = {
            "succeeded": res.succeeded,
            "found": _rect_json(res.found),
            "base": _rect_json(res.base),
            "bad_fraction": str(res.bad_fraction),
            "candidates": res.candidates,
            "rejected_by_dilate": res.rejected_by_dilate,
        }
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    _write(out, _json_payload("goodrect-scan", cfg, result, kind=u.kind))


@main.command()
@click.option("--seed", type=int, required=True)
@click.option("--count", type=int, default=12)
@click.option("--ambient", type=int, default=20, help="Doubled half-extent of the ambient square.")
@click.option("--out", type=str, required=True)
def vitali(seed, count, ambient, out):
    """Greedy Vitali selection on a random square family."""
    cfg = {"seed": seed, "count": count, "ambient": ambient}
    try:
        rng = _rng(seed)
        amb = SlopedRect(-ambient, ambient, -ambient, ambient)
        squares = []
        while len(squares) < count:
            e = int(rng.integers(0, min(8, ambient)))
            a1 = int(rng.integers(-ambient, ambient - e + 1))
            b1 = int(rng.integers(-ambient, ambient - e + 1))
            q = SlopedRect(a1, a1 + e, b1, b1 + e)
            if q.cell_count() > 0:
                squares.append(q)
        fam = SquareFamily(amb, squares)
        sel = vitali_select(fam)
        result = {
            "family": fam.to_json(),
            "selected": sel.to_json(),
            "disjoint": True,
            "tripled_covers": True,
        }
    except _PRECONDITION_ERRORS as ex:
        _fail(str(ex))
    _write(out, _json_payload("vitali", cfg, result, seed=seed))


@main.command()
@click.option("--level", type=click.Choice(["quick", "full"]), default="quick")
def verify(level):
    """Run the verification battery; nonzero exit on any failure."""
    from .verify import verify_suite

    checks = verify_suite(level)
    failed = [c for c in checks if not c.passed]
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        click.echo(f"{status} {c.module:<12} {c.name} {c.witness}")
    click.echo(f"{len(checks) - len(failed)}/{len(checks)} checks passed ({level})")
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
