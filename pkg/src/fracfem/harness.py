"""Experiment registry and command-line interface.

Each experiment fixes a problem (domain, data, exact solution), a mesh
ladder, a truncation calibration and the error columns it reports:

* ``getoor-1d``            -- interval, f = 1, g = 0, closed-form solution;
* ``bounded-support``      -- disc r = 1/2, f = 1, datum supported on B(0,1),
                              split into a smooth lifted part and a
                              homogeneous part, solved separately and summed;
* ``poisson-gauss``        -- unit disc, f = 0, g = exp(-|x|^2);
* ``poisson-pow4``         -- unit disc, f = 0, g = |x|^-4;
* ``domain-growth``        -- poisson-pow4 at s = 0.6 under two truncation
                              calibrations, comparing interior and
                              whole-space errors;
* ``constant-datum-sanity`` -- interval, f = 0, g = 1 (exact solution 1),
                              measuring the truncation deficit at the nodes.

The CLI exposes ``solve``, ``convergence``, ``oracle`` and ``mesh``
subcommands; a config file of ``key = value`` lines can seed any flag.
Exit codes: 0 success, 1 invalid usage or configuration, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass

import numpy as np

from . import metrics
from .assembly import assemble_system
from .geometry import (Mesh, NodeClass, TruncationRule, mesh_disc,
                       mesh_interval, truncation_width, write_mesh)
from .reference import (DATUM_GAUSS, DATUM_ONE, DATUM_POW4, QuadratureError,
                        RadialDatum, ReferenceSolution,
                        getoor_integral_over_ball, poisson_solution_value)
from .solve import SolverError, solve_direct, solve_mixed, write_solution_csv

__all__ = [
    "ExperimentSpec",
    "ExperimentConfig",
    "EXPERIMENTS",
    "experiment_config",
    "run_experiment",
    "run_domain_growth",
    "cli_main",
]


@dataclass(frozen=True)
class ExperimentSpec:
    """Registry entry: problem family plus its default protocol."""

    name: str
    dim: int
    r: float
    default_s: tuple
    desk_ladder: tuple
    paper_ladder: tuple
    calibration: TruncationRule
    method: str
    norms: tuple
    datum: RadialDatum | None = None
    #: lower bound on the truncation width H as ``(a, b)`` meaning
    #: H >= a + b*h; used when the datum support must stay inside the domain.
    min_width: tuple | None = None


EXPERIMENTS = {
    spec.name: spec
    for spec in (
        ExperimentSpec(
            name="getoor-1d", dim=1, r=1.0,
            default_s=(0.25, 0.5, 0.75),
            desk_ladder=(1 / 16, 1 / 32, 1 / 64, 1 / 128),
            paper_ladder=(1 / 16, 1 / 32, 1 / 64, 1 / 128),
            calibration=TruncationRule(1.0, 1 / 16),
            method="mixed",
            norms=("energy_hs", "l2_omega"),
        ),
        ExperimentSpec(
            name="bounded-support", dim=2, r=0.5,
            default_s=(0.5,),
            desk_ladder=(0.2, 0.15, 0.1, 0.08),
            paper_ladder=(0.045, 0.037, 0.03, 0.025),
            calibration=TruncationRule(1.0, 0.15),
            method="mixed",
            norms=("u1_hs_bound", "u2_energy_hs", "combined_hs"),
            # the datum is supported on B(0, 2r); keep it inside the domain:
            # R = r + H >= 2r + h
            min_width=(0.5, 1.0),
        ),
        ExperimentSpec(
            name="poisson-gauss", dim=2, r=1.0,
            default_s=(0.3, 0.5, 0.7),
            desk_ladder=(0.14, 0.11, 0.09, 0.07),
            paper_ladder=(0.1, 0.082, 0.067, 0.055, 0.045),
            calibration=TruncationRule(1.0, 0.1),
            method="mixed",
            norms=("l2_omega", "l2_omega_h", "l2_rn"),
            datum=DATUM_GAUSS,
        ),
        ExperimentSpec(
            name="poisson-pow4", dim=2, r=1.0,
            default_s=(0.3, 0.5, 0.7),
            desk_ladder=(0.14, 0.11, 0.09, 0.07),
            paper_ladder=(0.1, 0.082, 0.067, 0.055, 0.045),
            calibration=TruncationRule(1.0, 0.1),
            method="mixed",
            norms=("l2_omega", "l2_omega_h", "l2_rn"),
            datum=DATUM_POW4,
        ),
        ExperimentSpec(
            name="domain-growth", dim=2, r=1.0,
            default_s=(0.6,),
            desk_ladder=(0.14, 0.11, 0.09, 0.07),
            paper_ladder=(0.1, 0.082, 0.067, 0.055, 0.045),
            calibration=TruncationRule(1.0, 0.1),
            method="mixed",
            norms=("l2_omega", "l2_omega_h", "l2_rn"),
            datum=DATUM_POW4,
        ),
        ExperimentSpec(
            name="constant-datum-sanity", dim=1, r=1.0,
            default_s=(0.5,),
            desk_ladder=(1 / 32,),
            paper_ladder=(1 / 32,),
            calibration=TruncationRule(15.0, 1 / 32),
            method="direct",
            norms=("max_node_deviation",),
        ),
    )
}

#: Second calibration of the domain-growth study (H = 1.5 at h = 0.1).
GROWTH_CALIBRATIONS = (TruncationRule(1.0, 0.1), TruncationRule(1.5, 0.1))


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved run: spec defaults with user overrides applied."""

    experiment: str
    s_values: tuple
    ladder: tuple
    calibration: TruncationRule
    method: str
    quad_level: int = 1

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"known: {', '.join(sorted(EXPERIMENTS))}")
        if self.method not in ("mixed", "direct"):
            raise ValueError(f"method must be 'mixed' or 'direct', got {self.method!r}")
        if any(not 0.0 < s < 1.0 for s in self.s_values):
            raise ValueError("every s must lie in (0, 1)")
        if any(h <= 0 for h in self.ladder):
            raise ValueError("mesh sizes must be positive")
        if list(self.ladder) != sorted(self.ladder, reverse=True):
            raise ValueError("mesh ladder must be strictly decreasing")
        if len(set(self.ladder)) != len(self.ladder):
            raise ValueError("mesh ladder must be strictly decreasing")

    @property
    def spec(self) -> ExperimentSpec:
        return EXPERIMENTS[self.experiment]


def experiment_config(name: str, *, s=None, ladder=None, calibration=None,
                      method=None, paper_scale=False, quad_level=1) -> ExperimentConfig:
    """Resolve an experiment name plus overrides into a config."""
    spec = EXPERIMENTS.get(name)
    if spec is None:
        raise ValueError(f"unknown experiment {name!r}; "
                         f"known: {', '.join(sorted(EXPERIMENTS))}")
    if ladder is None:
        ladder = spec.paper_ladder if paper_scale else spec.desk_ladder
    return ExperimentConfig(
        experiment=name,
        s_values=tuple(spec.default_s if s is None else s),
        ladder=tuple(ladder),
        calibration=calibration or spec.calibration,
        method=method or spec.method,
        quad_level=quad_level,
    )


# -- per-cell pipelines ----------------------------------------------------------


def _build_mesh(cfg: ExperimentConfig, s: float, h: float,
                calibration: TruncationRule | None = None) -> Mesh:
    spec = cfg.spec
    cal = calibration or cfg.calibration
    H = truncation_width(h, cal, dim=spec.dim, s=s)
    if spec.min_width is not None:
        a, b = spec.min_width
        H = max(H, a + b * h)
    if spec.dim == 1:
        return mesh_interval(h, r=spec.r, H_target=H)
    return mesh_disc(h, r=spec.r, H_target=H)


def _ones(x: np.ndarray) -> np.ndarray:
    return np.ones(x.shape[0])


def _solve(cfg: ExperimentConfig, system, g=None):
    if cfg.method == "mixed":
        return solve_mixed(system)
    return solve_direct(system, g)


def _radial_g(datum: RadialDatum):
    return lambda x: np.asarray(datum.g(np.linalg.norm(np.atleast_2d(x), axis=1)))


def _cell_getoor_1d(cfg, s, h, ref, exact_integral):
    mesh = _build_mesh(cfg, s, h)
    system = assemble_system(mesh, s, f=_ones, level=cfg.quad_level)
    sol = _solve(cfg, system)
    energy = metrics.hs_energy_error_homogeneous(
        sol, f_value=1.0, exact_integral=exact_integral)
    return mesh, {
        "energy_hs": energy.value,
        "l2_omega": metrics.l2_error(sol, ref, metrics.REGION_OMEGA),
    }


def _cell_bounded_support(cfg, s, h, ref_u1, ref_u2, exact_integral_u2):
    mesh = _build_mesh(cfg, s, h)
    # the datum is the trace of the lifted component, evaluable anywhere
    g1 = lambda x: np.asarray(ref_u1.evaluate(np.atleast_2d(x)))
    system1 = assemble_system(mesh, s, f=_ones, g=g1, level=cfg.quad_level)
    sol1 = _solve(cfg, system1, g=g1)
    system2 = dataclasses.replace(system1, G=np.zeros_like(system1.G))
    sol2 = _solve(cfg, system2, g=None)
    u1_bound = metrics.hs_error_smooth_bound(sol1, ref_u1)
    u2_energy = metrics.hs_energy_error_homogeneous(
        sol2, f_value=1.0, exact_integral=exact_integral_u2).value
    return mesh, {
        "u1_hs_bound": u1_bound,
        "u2_energy_hs": u2_energy,
        "combined_hs": u1_bound + u2_energy,
    }


def _cell_poisson(cfg, s, h, ref, datum, calibration=None):
    mesh = _build_mesh(cfg, s, h, calibration)
    g = _radial_g(datum)
    system = assemble_system(mesh, s, g=g, level=cfg.quad_level)
    sol = _solve(cfg, system, g=g)
    return mesh, {
        "l2_omega": metrics.l2_error(sol, ref, metrics.REGION_OMEGA),
        "l2_omega_h": metrics.l2_error(sol, ref, metrics.REGION_OMEGA_H),
        "l2_rn": metrics.l2_error(sol, ref, metrics.REGION_RN, datum=datum),
    }


def _cell_constant_datum(cfg, s, h):
    mesh = _build_mesh(cfg, s, h)
    g = _ones
    system = assemble_system(mesh, s, g=g, level=cfg.quad_level)
    sol = _solve(cfg, system, g=g)
    nodal = sol.nodal_values()
    interior = mesh.node_class == NodeClass.INTERIOR
    deviation = float(np.abs(nodal[interior] - 1.0).max())
    return mesh, {"max_node_deviation": deviation}


def run_experiment(cfg: ExperimentConfig, *, progress=None) -> list:
    """Run every (s, h) cell of the config; one report per s value.

    Failed cells are recorded on the report and the grid continues.  The
    ``domain-growth`` experiment is a paired study; use
    :func:`run_domain_growth` for it.
    """
    if cfg.experiment == "domain-growth":
        raise ValueError("domain-growth is a paired study; "
                         "use run_domain_growth")
    spec = cfg.spec
    reports = []
    for s in cfg.s_values:
        report = metrics.ConvergenceReport(
            experiment=spec.name, dim=spec.dim, s=s, norms=spec.norms,
            calibration=(cfg.calibration.H0, cfg.calibration.h0))
        shared = _shared_state(cfg, s)
        for h in cfg.ladder:
            if progress is not None:
                progress(f"{spec.name}: s={s:g} h={h:g}")
            try:
                mesh, vals = _run_cell(cfg, s, h, shared)
                report.add_row(h=mesh.h, H=mesh.R - mesh.r, ndof=mesh.n_dof,
                               **vals)
            except (SolverError, QuadratureError, metrics.MetricsError,
                    ValueError, np.linalg.LinAlgError) as exc:
                report.record_failure(h=h, message=f"{type(exc).__name__}: {exc}")
        reports.append(report)
    return reports


def _shared_state(cfg: ExperimentConfig, s: float) -> dict:
    """Per-s objects reused across the ladder (references, exact integrals)."""
    spec = cfg.spec
    if spec.name == "getoor-1d":
        return {
            "ref": ReferenceSolution.getoor_constant_rhs(dim=1, s=s, r=spec.r),
            "exact_integral": getoor_integral_over_ball(1, s, spec.r),
        }
    if spec.name == "bounded-support":
        return {
            "ref_u1": ReferenceSolution.getoor_trace_datum(
                dim=2, s=s, ball_radius=2 * spec.r),
            "ref_u2": ReferenceSolution.getoor_constant_rhs(dim=2, s=s, r=spec.r),
            "exact_integral_u2": getoor_integral_over_ball(2, s, spec.r),
        }
    if spec.name in ("poisson-gauss", "poisson-pow4", "domain-growth"):
        return {
            "ref": ReferenceSolution.poisson(dim=2, s=s, r=spec.r,
                                             datum=spec.datum),
            "datum": spec.datum,
        }
    return {}


def _run_cell(cfg: ExperimentConfig, s: float, h: float, shared: dict,
              calibration: TruncationRule | None = None):
    name = cfg.spec.name
    if name == "getoor-1d":
        return _cell_getoor_1d(cfg, s, h, shared["ref"], shared["exact_integral"])
    if name == "bounded-support":
        return _cell_bounded_support(cfg, s, h, shared["ref_u1"],
                                     shared["ref_u2"], shared["exact_integral_u2"])
    if name in ("poisson-gauss", "poisson-pow4", "domain-growth"):
        return _cell_poisson(cfg, s, h, shared["ref"], shared["datum"],
                             calibration)
    if name == "constant-datum-sanity":
        return _cell_constant_datum(cfg, s, h)
    raise ValueError(f"unknown experiment {name!r}")


def run_domain_growth(cfg: ExperimentConfig, *, progress=None):
    """Run the truncation study: same ladder under two calibrations.

    Returns the pair of reports (small calibration, large calibration); each
    carries interior, meshed-domain and whole-space error columns.
    """
    if cfg.experiment != "domain-growth":
        raise ValueError("run_domain_growth only accepts the domain-growth "
                         "experiment")
    if len(cfg.s_values) != 1:
        raise ValueError("domain-growth compares calibrations at a single s")
    spec = cfg.spec
    s = cfg.s_values[0]
    shared = _shared_state(cfg, s)
    out = []
    for cal in GROWTH_CALIBRATIONS:
        report = metrics.ConvergenceReport(
            experiment=spec.name, dim=spec.dim, s=s, norms=spec.norms,
            calibration=(cal.H0, cal.h0))
        for h in cfg.ladder:
            if progress is not None:
                progress(f"{spec.name}: cal H0={cal.H0:g} s={s:g} h={h:g}")
            try:
                mesh, vals = _run_cell(cfg, s, h, shared, calibration=cal)
                report.add_row(h=mesh.h, H=mesh.R - mesh.r,
                               ndof=mesh.n_dof, **vals)
            except (SolverError, QuadratureError, metrics.MetricsError,
                    ValueError, np.linalg.LinAlgError) as exc:
                report.record_failure(h=h,
                                      message=f"{type(exc).__name__}: {exc}")
        out.append(report)
    return tuple(out)


# -- oracle suites ---------------------------------------------------------------


def oracle_stiffness(dim: int = 1, *, s_values=(0.25, 0.5, 0.75), h: float = 0.25,
                     out=sys.stdout) -> float:
    """Assembled 1D stiffness vs. a dense adaptive-quadrature oracle.

    Prints the per-s maximum relative entry deviation and returns the
    overall maximum.
    """
    if dim != 1:
        raise ValueError("the dense stiffness oracle is only implemented "
                         "in one dimension (cost)")
    from .oracles import dense_stiffness_oracle_1d, stiffness_max_rel_deviation

    worst = 0.0
    for s in s_values:
        mesh = mesh_interval(h, r=1.0, H_target=1.0)
        system = assemble_system(mesh, s)
        oracle = dense_stiffness_oracle_1d(mesh, s)
        dev = stiffness_max_rel_deviation(system.dense_A(), oracle)
        worst = max(worst, dev)
        print(f"stiffness dim=1 s={s:g}: max relative deviation {dev:.3e}",
              file=out)
    print(f"stiffness overall: {worst:.3e} (gate 1e-05)", file=out)
    return worst


def oracle_getoor(*, s_values=(0.25, 0.5, 0.75), points=(0.0, 0.3, 0.6),
                  out=sys.stdout) -> float:
    """Validate the closed-form 1D solution against the defining equation.

    Applies the principal-value form of the operator to the candidate
    solution at interior points; (-Delta)^s u should equal 1.
    """
    from .oracles import pv_fractional_laplacian_1d
    from .reference import getoor_prefactor

    worst = 0.0
    for s in s_values:
        kap = getoor_prefactor(1, s)
        u = lambda x: kap * max(0.0, 1.0 - x * x) ** s
        for x in points:
            val = pv_fractional_laplacian_1d(u, x, s=s)
            dev = abs(val - 1.0)
            worst = max(worst, dev)
            print(f"getoor-1d s={s:g} x={x:g}: (-Delta)^s u = {val:.8f} "
                  f"(rel dev {dev:.3e})", file=out)
    print(f"getoor overall: {worst:.3e} (gate 1e-04)", file=out)
    return worst


def oracle_normalization(*, s_values=(0.3, 0.5, 0.7), r: float = 1.0,
                         n_points: int = 10, out=sys.stdout) -> float:
    """Constant-datum consistency: the exterior kernel integrates to one."""
    worst = 0.0
    for s in s_values:
        for rho in np.linspace(0.0, 0.9 * r, n_points):
            val = poisson_solution_value(float(rho), datum=DATUM_ONE, r=r, s=s)
            dev = abs(val - 1.0)
            worst = max(worst, dev)
        print(f"normalization s={s:g}: worst |integral - 1| so far {worst:.3e}",
              file=out)
    print(f"normalization overall: {worst:.3e} (gate 1e-04)", file=out)
    return worst


# -- CLI -------------------------------------------------------------------------


def _parse_cal(text: str) -> TruncationRule:
    try:
        H0, h0 = text.split("@")
        return TruncationRule(float(H0), float(h0))
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(
            f"calibration must look like H0@h0 (e.g. 1.0@0.1), got {text!r}"
        ) from exc


def _parse_float_list(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected a comma-separated list of numbers, got {text!r}") from exc


def _read_config_file(path: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', "
                                 f"got {raw.strip()!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


_CONFIG_PARSERS = {
    "experiment": str,
    "s": _parse_float_list,
    "h": _parse_float_list,
    "dim": int,
    "method": str,
    "cal": _parse_cal,
    "out": str,
    "paper_scale": lambda v: v.lower() in ("1", "true", "yes", "on"),
    "quad_level": int,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracfem",
        description="P1 finite elements for the integral fractional "
                    "Laplacian with exterior Dirichlet data")
    parser.add_argument("--config", help="key = value file seeding any flag")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--experiment", help="experiment id "
                       f"({', '.join(sorted(EXPERIMENTS))})")
        p.add_argument("--s", type=_parse_float_list,
                       help="comma-separated s values in (0, 1)")
        p.add_argument("--method", choices=("mixed", "direct"))
        p.add_argument("--cal", type=_parse_cal, metavar="H0@h0",
                       help="truncation calibration: width H0 at mesh size h0")
        p.add_argument("--quad-level", type=int, default=1, choices=(1, 2))
        p.add_argument("--out", help="output path")

    p_solve = sub.add_parser("solve", help="run one (s, h) cell and dump "
                             "the solution as CSV")
    add_common(p_solve)
    p_solve.add_argument("--h", type=_parse_float_list,
                         help="single mesh size")

    p_conv = sub.add_parser("convergence", help="run an experiment ladder "
                            "and write convergence CSVs")
    add_common(p_conv)
    p_conv.add_argument("--h", type=_parse_float_list,
                        help="comma-separated mesh ladder (decreasing)")
    p_conv.add_argument("--paper-scale", action="store_true",
                        help="use the full-resolution ladder")

    p_oracle = sub.add_parser("oracle", help="run a pre-build oracle suite")
    p_oracle.add_argument("suite",
                          choices=("stiffness", "getoor", "normalization", "all"))
    p_oracle.add_argument("--dim", type=int, default=1)

    p_mesh = sub.add_parser("mesh", help="build a mesh and write it out")
    p_mesh.add_argument("--dim", type=int, choices=(1, 2), required=True)
    p_mesh.add_argument("--h", type=float, required=True)
    p_mesh.add_argument("--r", type=float, default=1.0)
    p_mesh.add_argument("--s", type=float, default=0.5)
    p_mesh.add_argument("--cal", type=_parse_cal, metavar="H0@h0")
    p_mesh.add_argument("--out", required=True)
    return parser, (p_solve, p_conv, p_oracle, p_mesh)


def _apply_config_file(parser, subparsers, argv: list) -> list:
    """Let a --config file provide defaults that flags still override."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv
    raw = _read_config_file(known.config)
    defaults = {}
    for key, text in raw.items():
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"unknown config key {key!r}")
        defaults[key] = _CONFIG_PARSERS[key](text)
    # subparsers re-apply their own defaults, so seed them as well
    for p in (parser, *subparsers):
        p.set_defaults(**defaults)
    return argv


def _cmd_solve(args) -> int:
    if not args.experiment:
        print("solve requires --experiment", file=sys.stderr)
        return 1
    cfg = experiment_config(
        args.experiment,
        s=args.s and args.s[:1],
        ladder=args.h and args.h[:1],
        calibration=args.cal, method=args.method, quad_level=args.quad_level)
    cfg = dataclasses.replace(cfg, s_values=cfg.s_values[:1],
                              ladder=(max(cfg.ladder),))
    s, h = cfg.s_values[0], cfg.ladder[0]
    spec = cfg.spec
    shared = _shared_state(cfg, s)
    if spec.name == "bounded-support":
        # one combined solve: f = 2, datum = lifted trace
        mesh = _build_mesh(cfg, s, h)
        ref_u1 = shared["ref_u1"]
        g1 = lambda x: np.asarray(ref_u1.evaluate(np.atleast_2d(x)))
        system = assemble_system(mesh, s, f=lambda x: 2.0 * _ones(x), g=g1,
                                 level=cfg.quad_level)
        sol = _solve(cfg, system, g=g1)
    elif spec.name == "constant-datum-sanity":
        mesh = _build_mesh(cfg, s, h)
        system = assemble_system(mesh, s, g=_ones, level=cfg.quad_level)
        sol = _solve(cfg, system, g=_ones)
    elif spec.name == "getoor-1d":
        mesh = _build_mesh(cfg, s, h)
        system = assemble_system(mesh, s, f=_ones, level=cfg.quad_level)
        sol = _solve(cfg, system)
    else:
        mesh = _build_mesh(cfg, s, h)
        g = _radial_g(spec.datum)
        system = assemble_system(mesh, s, g=g, level=cfg.quad_level)
        sol = _solve(cfg, system, g=g)
    out = args.out or f"{spec.name}-s{s:g}-h{h:g}.csv"
    write_solution_csv(sol, out)
    print(f"wrote {out} (Ndof={mesh.n_dof}, h={mesh.h:.6g}, R={mesh.R:.6g})")
    return 0


def _write_reports(reports, out: str | None, experiment: str,
                   suffixes=None) -> None:
    flat = []
    for i, rep in enumerate(reports):
        tag = suffixes[i] if suffixes else None
        flat.append((rep, tag))
    multi = len(flat) > 1
    for rep, tag in flat:
        if out:
            path = out
            if multi:
                stem, dot, ext = out.rpartition(".")
                if not dot:
                    stem, ext = out, "csv"
                token = tag or f"s{rep.s:g}"
                path = f"{stem}_{token}.{ext}"
        else:
            token = tag or f"s{rep.s:g}"
            path = f"{experiment}_{token}.csv"
        rep.write_csv(path)
        slopes = {k: v for k, v in rep.eoc().items() if v is not None}
        eoc_txt = ", ".join(f"{k}={v:.3f}" for k, v in slopes.items()) or "n/a"
        print(f"wrote {path}  rows={len(rep.rows)} failures={len(rep.failures)}"
              f"  EOC: {eoc_txt}")


def _cmd_convergence(args) -> int:
    if not args.experiment:
        print("convergence requires --experiment", file=sys.stderr)
        return 1
    cfg = experiment_config(
        args.experiment, s=args.s, ladder=args.h, calibration=args.cal,
        method=args.method, paper_scale=args.paper_scale,
        quad_level=args.quad_level)
    progress = lambda msg: print(f"running {msg}", flush=True)
    if cfg.experiment == "domain-growth":
        small, large = run_domain_growth(cfg, progress=progress)
        reports = [small, large]
        suffixes = [f"H{cal.H0:g}" for cal in GROWTH_CALIBRATIONS]
    else:
        reports = run_experiment(cfg, progress=progress)
        suffixes = None
    _write_reports(reports, args.out, cfg.experiment, suffixes)
    if all(not rep.rows for rep in reports):
        print("every cell failed", file=sys.stderr)
        return 2
    return 0


def _cmd_oracle(args) -> int:
    failed = False
    if args.suite in ("stiffness", "all"):
        failed |= oracle_stiffness(args.dim) >= 1e-5
    if args.suite in ("getoor", "all"):
        failed |= oracle_getoor() >= 1e-4
    if args.suite in ("normalization", "all"):
        failed |= oracle_normalization() >= 1e-4
    return 2 if failed else 0


def _cmd_mesh(args) -> int:
    if args.cal is not None:
        H = truncation_width(args.h, args.cal, dim=args.dim, s=args.s)
    else:
        H = args.r
    builder = mesh_interval if args.dim == 1 else mesh_disc
    mesh = builder(args.h, r=args.r, H_target=H)
    write_mesh(mesh, args.out)
    for key, val in mesh.quality_report().items():
        print(f"{key}: {val}")
    return 0


def cli_main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    try:
        argv = _apply_config_file(parser, subparsers, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return 0 if exc.code == 0 else 1
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "mesh":
            return _cmd_mesh(args)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, QuadratureError, metrics.MetricsError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(cli_main())
