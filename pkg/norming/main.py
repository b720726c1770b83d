"""
Main CLI entrypoint
"""
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Type, TypeVar

import click
import numpy as np
import typer
from pydantic import BaseModel, ValidationError
from rich import print as rich_print
from typing_extensions import Annotated

from norming import WELCOME, init_app
from norming.libs import config, constants, emit, svg
from norming.libs.emit import Document, EmitFormat
from norming.libs.errors import ConsistencyError, PreconditionError
from norming.libs.poly import (
    MultiPoly,
    SupNormEnclosure,
    default_grid_step,
    markov_derivative_bound,
    sup_norm_ball,
)
from norming.theory import extrema, gallery, levelset, remez, rigidity
from norming.theory.domains import DomainFamily

ModelT = TypeVar("ModelT", bound=BaseModel)

EMIT_HELP = (
    "Output format. csv writes 'key,value' rows, or for gallery cases "
    "'case,quantity,measured,expected,provenance,status'."
)
GLOBAL_VALUE_OPTIONS = ("--emit", "--svg", "--seed")
GLOBAL_FLAGS = ("--verbose", "--no-verbose")


@dataclass
class RunContext:
    emit: EmitFormat = "table"
    svg: Optional[str] = None
    seed: int = 7

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


class SupNormReport(Document):
    polynomial: MultiPoly
    enclosure: SupNormEnclosure


class MarkovReport(Document):
    n: int
    d: int
    k: int
    bound: float


class ConfigReport(Document):
    path: str
    values: dict


def _init_and_run(
    ctx: typer.Context,
    emit_format: Annotated[str, typer.Option("--emit", help=EMIT_HELP)] = "table",
    svg_path: Annotated[Optional[str], typer.Option("--svg", help="Write plot data (zero sets, heat grid) as SVG")] = None,
    seed: Annotated[Optional[int], typer.Option(help="Seed for every randomized sweep")] = None,
    verbose: Annotated[bool, typer.Option(help="Debug logging")] = False,
):
    if emit_format not in ("table", "json", "csv"):
        raise typer.BadParameter(f"unknown format {emit_format!r}; use table, json or csv", param_hint="--emit")
    init_app(verbose=verbose)
    if emit_format == "table":
        rich_print(WELCOME)
    cfg = config.AppConfig.instance()
    ctx.obj = RunContext(emit=emit_format, svg=svg_path, seed=cfg.seed if seed is None else seed)


app = typer.Typer(callback=_init_and_run, no_args_is_help=True)
poly_app = typer.Typer(help="Polynomial sup-norms and Markov constants")
remez_app = typer.Typer(help="Remez constants")
rigidity_app = typer.Typer(help="Rigidity lower bounds")
extrema_app = typer.Typer(help="Critical points")
isotopy_app = typer.Typer(help="Zero-set isotopy checks")
gallery_app = typer.Typer(help="Worked examples")
config_app = typer.Typer(help="Configuration")
app.add_typer(poly_app, name="poly")
app.add_typer(remez_app, name="remez")
app.add_typer(rigidity_app, name="rigidity")
app.add_typer(extrema_app, name="extrema")
app.add_typer(isotopy_app, name="isotopy")
app.add_typer(gallery_app, name="gallery")
app.add_typer(config_app, name="config")


def _load(model: Type[ModelT], path: str) -> ModelT:
    file = Path(path)
    if not file.is_file():
        raise typer.BadParameter(f"no such file: {path}")
    return model.model_validate_json(file.read_text(encoding="utf-8"))


def _output(ctx: typer.Context, document: Document, **plot) -> None:
    state: RunContext = ctx.obj
    rendered = emit.render(document, state.emit)
    if state.emit == "table":
        rich_print(rendered)
    else:
        typer.echo(rendered, nl=state.emit == "json")
    if state.svg:
        if not plot:
            logging.warning("Command %s has no plot data; --svg ignored", ctx.command_path)
            return
        logging.info("Saved plot to %s", svg.save(state.svg, title=ctx.command_path, **plot))


# ---------------------------------------------------------------- poly


@poly_app.command("sup-norm")
def cmd_sup_norm(
    ctx: typer.Context,
    poly: Annotated[str, typer.Option(help="MultiPoly JSON file")],
    step: Annotated[Optional[float], typer.Option(help="Grid step (default: a certifiable step)")] = None,
):
    """
    Certified enclosure of sup |P| over the unit ball.
    """
    p = _load(MultiPoly, poly)
    enclosure = sup_norm_ball(p, step or default_grid_step(p.n, p.d, config.get().grid_step_fraction))
    _output(ctx, SupNormReport(polynomial=p, enclosure=enclosure), heat=p)


@poly_app.command("markov")
def cmd_markov(
    ctx: typer.Context,
    n: Annotated[int, typer.Option()],
    d: Annotated[int, typer.Option()],
    k: Annotated[int, typer.Option()],
):
    """
    Constant C_k(n, d) with M_k(P) <= C_k(n, d) M_0(P).
    """
    _output(ctx, MarkovReport(n=n, d=d, k=k, bound=markov_derivative_bound(n, d, k)))


# ---------------------------------------------------------------- remez


@remez_app.command("finite")
def cmd_remez_finite(
    ctx: typer.Context,
    points: Annotated[str, typer.Option(help="PointSet JSON file")],
    d: Annotated[int, typer.Option()],
    step: Annotated[Optional[float], typer.Option(help="Initial cell side")] = None,
    tolerance: Annotated[Optional[float], typer.Option(help="Refine until upper <= (1 + tolerance) lower")] = None,
    max_lps: Annotated[Optional[int], typer.Option(help="LP budget for cell refinement")] = None,
):
    """
    Enclosure of R_d(Z) for a finite point set.
    """
    Z = _load(remez.PointSet, points)
    report = remez.remez_finite(Z, d, step, tolerance, max_lps)
    _output(ctx, report, heat=report.witness, points=Z.points)


@remez_app.command("measure-bound")
def cmd_measure_bound(
    ctx: typer.Context,
    lam: Annotated[float, typer.Option("--lambda", help="m(Z)/m(B^n)")],
    n: Annotated[int, typer.Option()],
    d: Annotated[int, typer.Option()],
):
    """
    Chebyshev and simple bounds of R_d from the relative measure.
    """
    _output(ctx, remez.measure_remez_bound(lam, n, d))


@remez_app.command("topology-bound")
def cmd_topology_bound(
    ctx: typer.Context,
    family: Annotated[str, typer.Option(help="DomainFamily JSON file")],
    d: Annotated[int, typer.Option()],
):
    """
    Topological bound of R_d for unions of disjoint domains.
    """
    _output(ctx, remez.topological_remez_bound(_load(DomainFamily, family), d))


@remez_app.command("witness-test")
def cmd_witness_test(
    ctx: typer.Context,
    family: Annotated[str, typer.Option(help="DomainFamily JSON file")],
    d: Annotated[int, typer.Option()],
    trials: Annotated[Optional[int], typer.Option()] = None,
    probe: Annotated[Optional[List[str]], typer.Option(help="MultiPoly JSON files to test as well")] = None,
):
    """
    Random polynomials against the topological bound.
    """
    F = _load(DomainFamily, family)
    probes = [_load(MultiPoly, path) for path in probe or []]
    report = remez.topological_bound_witness_test(
        F, d, trials if trials is not None else config.get().witness_trials, ctx.obj.rng, probes=probes
    )
    _output(ctx, report)


# ---------------------------------------------------------------- rigidity


@rigidity_app.command("from-remez")
def cmd_from_remez(ctx: typer.Context, report: Annotated[str, typer.Option(help="RemezReport JSON file")]):
    """
    Rigidity lower bound from a Remez enclosure.
    """
    _output(ctx, rigidity.rigidity_from_remez(_load(remez.RemezReport, report)))


@rigidity_app.command("points-1d")
def cmd_points_1d(
    ctx: typer.Context, count: Annotated[int, typer.Option()], d: Annotated[int, typer.Option()]
):
    """
    Rigidity of a finite set on the line.
    """
    _output(ctx, rigidity.rigidity_1d_points(count, d))


@rigidity_app.command("interior")
def cmd_interior(ctx: typer.Context, d: Annotated[int, typer.Option()]):
    """
    Rigidity of a set with non-empty interior.
    """
    _output(ctx, rigidity.rigidity_interior(d))


@rigidity_app.command("density")
def cmd_density(
    ctx: typer.Context,
    points: Annotated[str, typer.Option(help="PointSet JSON file")],
    d: Annotated[int, typer.Option()],
):
    """
    Rigidity from the number of points and their separation.
    """
    _output(ctx, rigidity.rigidity_density(_load(remez.PointSet, points), d))


@rigidity_app.command("whitney-1d")
def cmd_whitney(
    ctx: typer.Context,
    points: Annotated[str, typer.Option(help="PointSet JSON file (n = 1)")],
    d: Annotated[int, typer.Option()],
    probe_grid: Annotated[Optional[int], typer.Option()] = None,
):
    """
    Divided-difference estimate on the line.
    """
    Z = _load(remez.PointSet, points)
    _output(ctx, rigidity.rigidity_1d_whitney(Z, d, probe_grid or config.get().probe_grid))


@rigidity_app.command("topological")
def cmd_rigidity_topological(
    ctx: typer.Context,
    family: Annotated[str, typer.Option(help="DomainFamily JSON file")],
    d: Annotated[int, typer.Option()],
):
    """
    Topological rigidity bound.
    """
    _output(ctx, rigidity.rigidity_topological(_load(DomainFamily, family), d))


# ---------------------------------------------------------------- extrema


@extrema_app.command("find")
def cmd_find(
    ctx: typer.Context,
    poly: Annotated[str, typer.Option(help="MultiPoly JSON file")],
    seed_step: Annotated[Optional[float], typer.Option(help="Seed grid step")] = None,
):
    """
    Critical points of P inside the unit ball.
    """
    p = _load(MultiPoly, poly)
    report = extrema.critical_point_report(p, seed_step)
    _output(ctx, report, heat=p, points=[cp.location for cp in report.points])


@extrema_app.command("bezout")
def cmd_bezout(
    ctx: typer.Context,
    poly: Annotated[str, typer.Option(help="MultiPoly JSON file")],
    seed_step: Annotated[Optional[float], typer.Option(help="Seed grid step")] = None,
):
    """
    Critical point count against (d-1)^n.
    """
    p = _load(MultiPoly, poly)
    report = extrema.bezout_extrema_check(p, extrema.find_critical_points(p, seed_step))
    if report.status == "violation":
        raise ConsistencyError(f"{report.critical_points} critical points exceed the bound {report.bound}")
    _output(ctx, report)


@extrema_app.command("witness")
def cmd_extremum_witness(
    ctx: typer.Context,
    poly: Annotated[str, typer.Option(help="MultiPoly JSON file, normalized to sup 1")],
    family: Annotated[str, typer.Option(help="DomainFamily JSON file")],
    d: Annotated[int, typer.Option()],
):
    """
    Interior extrema forced by small boundary values.
    """
    p = _load(MultiPoly, poly)
    _output(ctx, extrema.interior_extremum_witness(p, _load(DomainFamily, family), d), heat=p)


# ---------------------------------------------------------------- isotopy


@isotopy_app.command("check")
def cmd_isotopy(
    ctx: typer.Context,
    jet: Annotated[str, typer.Option(help="JetModel JSON file")],
    cell: Annotated[Optional[float], typer.Option(help="Marching squares cell size")] = None,
):
    """
    Isotopy between the zero sets of f and of its Taylor polynomial.
    """
    model = _load(levelset.JetModel, jet)
    verdict = levelset.isotopy_check(model, cell, ctx.obj.rng)
    curves = [c for c in (verdict.curve_f, verdict.curve_p) if c is not None]
    _output(ctx, verdict, curves=curves, heat=model.taylor)


# ---------------------------------------------------------------- gallery


def _output_case(ctx: typer.Context, case: gallery.GalleryCase) -> None:
    _output(ctx, case, curves=[case.curve] if case.curve else [], points=case.points, heat=case.witness)


@gallery_app.command("triangle")
def cmd_triangle(ctx: typer.Context, h: Annotated[float, typer.Option()] = 0.5):
    """
    Three-point set Z_h at degree 1.
    """
    _output_case(ctx, gallery.gallery_triangle(h))


@gallery_app.command("ellipse_rectangle")
def cmd_ellipse_rectangle(ctx: typer.Context, h: Annotated[float, typer.Option()] = 0.2):
    """
    Ellipse and rectangle against the topological bound.
    """
    _output_case(ctx, gallery.gallery_ellipse_rectangle(h))


@gallery_app.command("product_poly")
def cmd_product_poly(
    ctx: typer.Context,
    d: Annotated[int, typer.Option()] = 3,
    roots: Annotated[str, typer.Option(help="Comma separated roots of Q")] = "-0.4,0,0.4",
    zeta: Annotated[Optional[float], typer.Option()] = None,
    scale: Annotated[float, typer.Option(help="Shrink factor for the roots in x")] = 1.0,
    cell: Annotated[Optional[float], typer.Option()] = None,
):
    """
    Product polynomial whose level ovals are not norming.
    """
    try:
        values = [float(r) for r in roots.split(",")]
    except ValueError as exc:
        raise typer.BadParameter(f"cannot parse roots {roots!r}") from exc
    _output_case(ctx, gallery.gallery_product_poly(d, values, zeta, scale=scale, cell_size=cell, rng=ctx.obj.rng))


@gallery_app.command("sublevel")
def cmd_sublevel(
    ctx: typer.Context,
    eta: Annotated[float, typer.Option()] = 0.01,
    d: Annotated[int, typer.Option()] = 2,
):
    """
    Sublevel set with interior and a large Remez constant.
    """
    _output_case(ctx, gallery.gallery_sublevel(eta, d))


# ---------------------------------------------------------------- config


@config_app.command("show")
def cmd_config_show(
    ctx: typer.Context,
    save: Annotated[bool, typer.Option(help="Write the effective configuration to the config file")] = False,
):
    """
    Effective configuration.
    """
    cfg = config.get()
    if ctx.obj.seed != cfg.seed:
        cfg.seed = ctx.obj.seed
    if save:
        cfg.save()
        logging.info("Saved configuration to %s", config.config_path())
    _output(ctx, ConfigReport(path=str(config.config_path()), values=vars(cfg)))


def hoist_global_options(argv: List[str]) -> List[str]:
    """Global options may follow the subcommand; click expects them before it"""
    front, rest = [], []
    args = iter(argv)
    for arg in args:
        name = arg.split("=", 1)[0]
        if name in GLOBAL_VALUE_OPTIONS:
            front.append(arg)
            if "=" not in arg:
                value = next(args, None)
                if value is not None:
                    front.append(value)
        elif arg in GLOBAL_FLAGS:
            front.append(arg)
        else:
            rest.append(arg)
    return front + rest


def run(argv: Optional[List[str]] = None) -> None:
    """
    Console entrypoint: maps library errors to exit codes.
    """
    args = hoist_global_options(sys.argv[1:] if argv is None else list(argv))
    try:
        result = app(args=args, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(constants.EXIT_CODES.usage)
    except (PreconditionError, ValidationError) as exc:
        rich_print(f"[red]Precondition failed:[/red] {exc}", file=sys.stderr)
        sys.exit(constants.EXIT_CODES.precondition)
    except ConsistencyError as exc:
        rich_print(f"[red]Internal consistency error:[/red] {exc}", file=sys.stderr)
        sys.exit(constants.EXIT_CODES.consistency)
    except click.Abort:
        sys.exit(1)
    sys.exit(result if isinstance(result, int) else constants.EXIT_CODES.ok)


if __name__ == "__main__":
    run()
