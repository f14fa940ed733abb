import argparse
import contextlib
import logging
import sys
from collections.abc import Callable, Iterator, Sequence
from typing import TextIO

import pydantic

from hop_sim.cli.base import CliOptions, attach_list_values, global_flags, resolve_options
from hop_sim.exceptions import (
    ArgumentRangeError,
    ConfigurationError,
    HopSimError,
    ParameterError,
    UnsupportedModelError,
)
from hop_sim.generator import JACOBI_SEED, jacobi_coeffs
from hop_sim.observables import (
    CenterPhase,
    CharPoly,
    CircleElementary,
    CoshElementary,
    ExpElementary,
    JacobiPolynomial,
    Observable,
)
from hop_sim.ode import integrate_freezing
from hop_sim.repositories import ResultRepository, format_report_table
from hop_sim.schemas import CheckReport, CheckRequest, ModelSpec
from hop_sim.sde import simulate_path
from hop_sim.services.ensemble_service import EnsembleService
from hop_sim.services.verify_service import CHECKS, VerificationService, resolve_check
from hop_sim.settings import Settings
from hop_sim.types import INFINITY, ModelKind, OutputFormat

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

# invalid input rather than a failed computation
_USAGE_ERRORS = (
    pydantic.ValidationError,
    ParameterError,
    ArgumentRangeError,
    UnsupportedModelError,
    ConfigurationError,
)

Handler = Callable[[CliOptions, Settings], int]


@contextlib.contextmanager
def _output(options: CliOptions) -> Iterator[TextIO]:
    if options.out is None:
        yield sys.stdout
        return
    with open(options.out, "w", encoding="utf-8", newline="") as stream:
        yield stream


def parse_observable(spec: str, model: ModelSpec) -> Observable:
    """Observable from its command-line name.

    ``e<l>`` is the model's elementary family (e_l∘e^{i·}, ẽ_l or e_l∘cosh),
    ``H<n>`` the BC Jacobi polynomial, ``charpoly:<y>`` the characteristic
    polynomial in the model's transform and ``cg<l>`` the center phase.
    """
    name = spec.strip()
    try:
        if name.startswith("charpoly:"):
            transform = {
                ModelKind.COMPACT_A: "circle",
                ModelKind.NONCOMPACT_A: "exp",
                ModelKind.NONCOMPACT_BC: "cosh",
            }[model.kind]
            return CharPoly(float(name.split(":", 1)[1]), transform)
        if name.startswith("cg"):
            return CenterPhase(int(name[2:]))
        if name.startswith("H"):
            if model.p is None or model.q is None:
                raise ParameterError("H<n> observables need noncompactBC")
            n = int(name[1:])
            table = jacobi_coeffs(model.N, model.p, model.q, model.kappa, n)
            return JacobiPolynomial(n, table.c[n])
        if name.startswith("e"):
            l = int(name[1:])
            if model.kind is ModelKind.COMPACT_A:
                return CircleElementary(l)
            if model.kind is ModelKind.NONCOMPACT_A:
                return ExpElementary(l)
            return CoshElementary(l)
    except ValueError as e:
        raise ParameterError(f"cannot parse observable {spec!r}") from e
    raise ParameterError(f"unknown observable {spec!r}, expected e<l>, H<n>, charpoly:<y> or cg<l>")


def simulate(options: CliOptions, settings: Settings) -> int:
    """One SDE path (stream --stream) or, with --observable, ensemble estimates."""
    model = options.model_spec()
    start = options.start(model)
    mc = options.mc_params(settings)
    times = options.time_grid or (1.0,)
    with _output(options) as stream:
        repository = ResultRepository(stream)
        if options.observable:
            observables = [parse_observable(spec, model) for spec in options.observable.split(",")]
            cfg = mc.sde_config(max(times))
            estimates = EnsembleService(options.worker_count(settings)).simulate_ensemble(
                model, start, cfg, mc.n_paths, observables, times
            )
            labels = [observable.label for observable in observables]
            if options.format is OutputFormat.JSON:
                repository.write_ensemble_json(times, labels, estimates)
            else:
                repository.write_ensemble(times, labels, estimates)
        else:
            path = simulate_path(model, start, mc.sde_config(max(times)), options.stream)
            if options.format is OutputFormat.JSON:
                repository.write_path_json(path)
            else:
                repository.write_path(path)
    return EXIT_OK


def freeze(options: CliOptions, settings: Settings) -> int:
    """κ=inf ODE trajectory; --times sets the recording grid, else 101 points up to --t."""
    model = options.model_spec(default_kappa=INFINITY)
    start = options.start(model)
    grid = options.time_grid
    t_end = options.t if options.t is not None else (max(grid) if grid else 1.0)
    times = [t for t in grid if t <= t_end] if options.times else None
    path = integrate_freezing(model, start, t_end, tol=settings.ode_tol, times=times)
    with _output(options) as stream:
        repository = ResultRepository(stream)
        if options.format is OutputFormat.JSON:
            repository.write_path_json(path)
        else:
            repository.write_path(path)
    return EXIT_OK


def _emit_report(options: CliOptions, report: CheckReport) -> int:
    table = format_report_table(report)
    if options.out is None:
        # stdout carries the machine-readable report
        print(table, file=sys.stderr)
    else:
        print(table)
    with _output(options) as stream:
        repository = ResultRepository(stream)
        if options.format is OutputFormat.CSV and options.out is not None:
            repository.write_report_csv(report)
        else:
            repository.write_report(report)
    logger.info(f"Check {report.name}: {'pass' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _service(options: CliOptions, settings: Settings) -> VerificationService:
    return VerificationService(EnsembleService(options.worker_count(settings)), settings)


def verify(options: CliOptions, settings: Settings) -> int:
    """Run one check by name or anchor; ``--list`` prints every check with its anchor."""
    if options.list:
        for name, definition in CHECKS.items():
            print(f"{name:<32} {definition.anchor or '-':<16} {definition.description}")
        return EXIT_OK
    if options.check is None:
        raise ParameterError("--check is required (see verify --list)")
    name = resolve_check(options.check)
    model = options.model_spec()
    request = CheckRequest(
        model=model,
        x0=None if options.x0 is None else tuple(options.start(model).tolist()),
        times=options.time_grid,
        ls=options.ls,
        y_values=options.y_values,
        t_long=options.t_long if options.t_long is not None else 10.0,
        kappa_alt=options.alternative_kappa,
        n_max=options.nmax,
        mc=options.mc_params(settings),
    )
    report = CHECKS[name].run(_service(options, settings), request)
    return _emit_report(options, report)


def stationary(options: CliOptions, settings: Settings) -> int:
    """Long-run stationary determinant check of compactA."""
    model = options.model_spec(default_kind=ModelKind.COMPACT_A)
    x0 = None if options.x0 is None else options.start(model)
    report = _service(options, settings).check_stationary_compact_a(
        model,
        options.y_values or (2.0,),
        options.t_long if options.t_long is not None else 10.0,
        options.mc_params(settings),
        x0=x0,
        special_unitary=options.special_unitary,
    )
    return _emit_report(options, report)


def coeffs(options: CliOptions, settings: Settings) -> int:
    """Jacobi coefficient table as JSON."""
    model = options.model_spec(default_kind=ModelKind.NONCOMPACT_BC)
    if model.kind is not ModelKind.NONCOMPACT_BC:
        raise UnsupportedModelError("coeffs applies to noncompactBC")
    assert model.p is not None and model.q is not None
    n_max = options.nmax if options.nmax is not None else model.N
    table = jacobi_coeffs(model.N, model.p, model.q, model.kappa, n_max, JACOBI_SEED, options.method, settings.fd_step)
    with _output(options) as stream:
        ResultRepository(stream).write_coeff_table(table)
    return EXIT_OK


def detpoly(options: CliOptions, settings: Settings) -> int:
    """Evaluate P_{t,N,k,x} (type A) or D_{t,x} (noncompactBC) at the --y values."""
    model = options.model_spec()
    start = options.start(model)
    t = options.t if options.t is not None else 1.0
    y_values = options.y_values or (0.5, 1.0, 2.0)
    polynomial = _service(options, settings).determinant_polynomial(model, start, t)
    values = [complex(polynomial.evaluate(y)) for y in y_values]
    with _output(options) as stream:
        repository = ResultRepository(stream)
        if options.format is OutputFormat.JSON:
            repository.write_polynomial_json(t, y_values, values)
        else:
            repository.write_polynomial(t, y_values, values)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parent = global_flags()
    parser = argparse.ArgumentParser(prog="hop-sim", description="Heckman-Opdam diffusion simulation and checks")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("simulate", parents=[parent], help="SDE path or ensemble estimates")
    sub.add_argument("--observable", help="comma list: e<l>, H<n>, charpoly:<y>, cg<l>")
    sub.add_argument("--stream", type=int)
    sub.set_defaults(handler=simulate)

    sub = subparsers.add_parser("freeze", parents=[parent], help="κ=inf ODE trajectory")
    sub.set_defaults(handler=freeze)

    sub = subparsers.add_parser("verify", parents=[parent], help="run a named check")
    sub.add_argument("--check")
    sub.add_argument("--list", action="store_true", default=None)
    sub.add_argument("--l", dest="l", help="comma list of degrees")
    sub.add_argument("--y", help="comma list of polynomial arguments")
    sub.add_argument("--t-long", type=float)
    sub.add_argument("--kappa-alt")
    sub.add_argument("--nmax", type=int)
    sub.set_defaults(handler=verify)

    sub = subparsers.add_parser("coeffs", parents=[parent], help="BC Jacobi coefficient table")
    sub.add_argument("--nmax", type=int)
    sub.add_argument("--method", choices=["exact", "fd"])
    sub.set_defaults(handler=coeffs)

    sub = subparsers.add_parser("detpoly", parents=[parent], help="determinantal polynomial values")
    sub.add_argument("--y", help="comma list of polynomial arguments")
    sub.set_defaults(handler=detpoly)

    sub = subparsers.add_parser("stationary", parents=[parent], help="long-run compactA check")
    sub.add_argument("--y", help="comma list of polynomial arguments")
    sub.add_argument("--t-long", type=float)
    sub.add_argument("--special-unitary", action="store_true", default=None)
    sub.set_defaults(handler=stationary)
    return parser


def _configure_logging(options: CliOptions, settings: Settings) -> None:
    level = (options.log_level or settings.log_level).upper()
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def run(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code.

    0 on success, 1 when a check fails, 2 on usage errors, 3 on any other error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(attach_list_values(sys.argv[1:] if argv is None else argv))
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    handler: Handler = args.handler
    try:
        settings = Settings()
        options = resolve_options(args)
        _configure_logging(options, settings)
        return handler(options, settings)
    except _USAGE_ERRORS as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except HopSimError as e:
        logger.error(f"{args.command} failed: {e!r}")
        return EXIT_INTERNAL
    except Exception as e:
        logger.exception(f"{args.command} crashed: {e}")
        return EXIT_INTERNAL
