"""
Ligne de commande du laboratoire

    python cli.py <expérience> [--config PATH] [--output DIR] [--seed N] [--quiet]

Chaque exécution écrit ses artefacts CSV/JSON et un manifeste (écho de la configuration, versions,
durée, résumé réussite/échec) dans le répertoire de sortie; en cas d'erreur, error.json décrit la
précondition violée. Codes de sortie: 0 réussite, 1 propriété en échec, 2 validation, 3 non-convergence.
"""
import argparse
import logging
import math
import platform
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import pydantic
import scipy

from analytics import aggregate_runs, export_plot_data
from config import (DIAGNOSTICS_FILE, ERROR_REPORT_FILE, EXPERIMENTS, LATTICE_DIRECTIONS_2D, MANIFEST_FILE,
                    RECIPES, SUMMARY_FILE)
from config_manager import load_run_config
from criterion_lab import admissible_upper, estimate_constants, margin_grid, scenario_audit
from errors import EXIT_PASS, EXIT_PROPERTY_FAILURE, AppException, ErrorHandler, GridError
from models import CheckReport, KernelCase, KernelSpec, MocFamily, MocParams, RadialProfile
from moc_engine import (CoefficientChoice, Moc, eventual_time_t1, export_moc_profile, holder_cap, initial_fit,
                        obeys_moc, select_coefficients, validate_shape, xi0_solve)
from monitoring import MetricsCollector, PropertyChecker
from radial_multipliers import (LevyOperator, check_mdec, check_positivity_condition, check_power_envelope,
                                check_profile_invariants, kernel_from_multiplier, levy_operator_from_kernel,
                                symbol_from_multiplier, symbol_lower_bound_fit)
from solver import max_principle_monitor, simulate
from spectral_core import Field, PeriodicGrid, linf_norm, read_binary
from utils import band_limited_values, make_rng, write_csv, write_json
from validators import RunConfig
from velocity_models import VelocityModel

logger = logging.getLogger(__name__)

# Modèles dont la vitesse est à divergence nulle (décroissance L²)
DIVERGENCE_FREE = ('sqg', 'ipm2d', 'ipm3d_slice')


@dataclass
class ExperimentOutcome:
    """Vérifications, artefacts et résultats d'une expérience"""
    recipe: str
    checker: PropertyChecker = field(default_factory=PropertyChecker)
    artifacts: List[str] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)

    def add_report(self, report: CheckReport, informational: bool = False) -> None:
        message = f"pire marge {report.worst_margin:.3e} en {report.worst_at}"
        self.checker.add_result(report.name, report.passed, message, informational)

    def write_csv(self, frame: pd.DataFrame, path: Path) -> None:
        write_csv(frame, path)
        self.artifacts.append(path.name)


# ============================================================================
# CONSTRUCTION DES OBJETS DU DOMAINE
# ============================================================================

def initial_field(cfg: RunConfig, grid: PeriodicGrid) -> Field:
    """Donnée initiale: sin x (1D), sin x cos y (2D), champ aléatoire à spectre borné, ou instantané"""
    settings = cfg.grid
    if settings.initial == 'snapshot':
        theta = read_binary(settings.snapshot)
        if theta.grid != grid:
            raise GridError(f"Instantané sur une grille d={theta.grid.d}, N={theta.grid.N} "
                            f"incompatible avec d={grid.d}, N={grid.N}")
        return theta
    if settings.initial == 'random':
        rng = make_rng(cfg.seed)
        values = band_limited_values(grid, rng, settings.kmax, settings.amplitude, settings.decay)
        return Field(grid, values)
    if grid.d == 1:
        return Field.from_function(grid, lambda x: settings.amplitude * np.sin(x))
    return Field.from_function(grid, lambda x, y: settings.amplitude * np.sin(x) * np.cos(y))


def build_operator(cfg: RunConfig, spec: KernelSpec, grid: PeriodicGrid) -> LevyOperator:
    if cfg.kernel.symbol == 'kernel_quadrature':
        return levy_operator_from_kernel(spec, grid, cfg.kernel.quadrature())
    return symbol_from_multiplier(spec.profile, grid)


@dataclass
class Setup:
    profile: RadialProfile
    model: VelocityModel
    grid: PeriodicGrid
    spec: KernelSpec


def build_setup(cfg: RunConfig) -> Setup:
    profile = cfg.profile.build()
    model = cfg.model.build()
    grid = cfg.grid.build()
    spec = cfg.kernel.build(profile, grid.d)
    return Setup(profile, model, grid, spec)


def choose_coefficients(cfg: RunConfig, setup: Setup, outcome: ExperimentOutcome) -> CoefficientChoice:
    """Coefficients explicites de la configuration, ou sélection à partir des constantes estimées"""
    family = cfg.moc.moc_family
    profile = setup.profile
    if cfg.moc.explicit:
        return CoefficientChoice(cfg.moc.kappa, cfg.moc.gamma, cfg.moc.rho or 0.0, family, cfg.moc.safety)
    constants = estimate_constants(setup.spec, setup.model, cfg.kernel.quadrature(), cfg.criterion.eta_points)
    outcome.results['constants'] = constants.to_dict()
    choice = select_coefficients(profile.alpha, profile.sigma, cfg.moc.beta, constants, family, cfg.moc.safety)
    outcome.checker.add_result('coefficients', choice.satisfied,
                               f"{sum(not c.holds for c in choice.ledger)} inégalité(s) violée(s)")
    outcome.results['coefficients'] = choice.to_dict()
    return choice


def moc_params(cfg: RunConfig, profile: RadialProfile, choice: CoefficientChoice) -> MocParams:
    """δ par défaut 1; pour la famille éventuelle, A₀ par défaut 4δ"""
    delta = cfg.moc.delta or 1.0
    A0 = cfg.moc.A0
    if cfg.moc.moc_family == MocFamily.EVENTUAL and A0 is None:
        A0 = 4.0 * delta
    return MocParams(choice.kappa, choice.gamma, delta, cfg.moc.beta, profile, choice.rho, A0, cfg.moc.c_cut)


def make_moc(family: MocFamily, params: MocParams) -> Moc:
    return Moc.stationary(params) if family == MocFamily.STATIONARY else Moc.eventual(params)


# ============================================================================
# EXPÉRIENCES
# ============================================================================

def run_simulate(cfg: RunConfig, out: Path) -> ExperimentOutcome:
    """Intégration et moniteurs des principes du maximum"""
    outcome = ExperimentOutcome(RECIPES['simulate'])
    setup = build_setup(cfg)
    theta0 = initial_field(cfg, setup.grid)
    op = build_operator(cfg, setup.spec, setup.grid)
    snapshot_dir = str(out / 'snapshots') if cfg.solver.snapshot_every else None
    result = simulate(theta0, setup.model, op, cfg.solver.build(), snapshot_dir=snapshot_dir)

    outcome.write_csv(result.to_frame(), out / DIAGNOSTICS_FILE)
    outcome.artifacts.extend(str(Path(p).relative_to(out)) for p in result.snapshots)
    outcome.results['simulation'] = result.summary()

    series = result.records
    if result.blown_up and result.blowup_bracket:
        series = [r for r in series if r.t <= result.blowup_bracket[0]]
    outcome.checker.add_result('finite', all(r.is_finite() for r in series),
                               f"{len(series)} enregistrement(s) avant explosion" if result.blown_up
                               else f"{len(series)} enregistrement(s)")
    tol = cfg.solver.tol_mp
    outcome.add_report(max_principle_monitor(series, 'linf', tol),
                       informational=setup.spec.case == KernelCase.II)
    if setup.model.kind in DIVERGENCE_FREE:
        outcome.add_report(max_principle_monitor(series, 'l2', tol))
    if setup.model.kind != 'ccf' and series:
        drift = max(abs(r.mean - series[0].mean) for r in series)
        scale = max(series[0].linf, 1e-300)
        outcome.checker.add_result('mean_conserved', drift <= 1e-10 * scale, f"dérive de la moyenne {drift:.3e}")
    return outcome


def run_moc_check(cfg: RunConfig, out: Path) -> ExperimentOutcome:
    """Forme du MOC: monotonie, concavité, saut de dérivée, inégalités des coefficients"""
    outcome = ExperimentOutcome(RECIPES['moc_check'])
    setup = build_setup(cfg)
    choice = choose_coefficients(cfg, setup, outcome)
    family = cfg.moc.moc_family
    moc = make_moc(family, moc_params(cfg, setup.profile, choice))
    report = validate_shape(moc)
    for name, result in report.details.items():
        if name != '_overall':
            outcome.checker.add_result(name, result['pass'], result['message'], result['informational'])
    export_moc_profile(moc, out / 'moc_profile.csv')
    outcome.artifacts.append('moc_profile.csv')
    outcome.results['moc'] = moc.to_dict()
    outcome.results['holder_cap'] = holder_cap(moc)
    if family == MocFamily.EVENTUAL and moc.params.rho > 0:
        outcome.results['t1'] = eventual_time_t1(moc.params, with_hit_time=True).to_dict()
    return outcome


def run_kernel_lab(cfg: RunConfig, out: Path) -> ExperimentOutcome:
    """Invariants du profil, bornes inférieures du symbole, inversion du noyau (d = 1)"""
    outcome = ExperimentOutcome(RECIPES['kernel_lab'])
    setup = build_setup(cfg)
    profile, grid = setup.profile, setup.grid
    r_grid = np.logspace(-3.0, 3.0, 121)
    outcome.add_report(check_profile_invariants(profile, r_grid))
    start = max(profile.validity_start, 1e-3)
    outcome.add_report(check_mdec(profile, np.logspace(math.log10(start), 3.0, 121)))
    outcome.add_report(check_power_envelope(profile, np.logspace(-3.0, 0.0, 61) * (profile.c0 or 1.0)),
                       informational=True)
    outcome.add_report(check_positivity_condition(profile, r_grid, grid.d), informational=True)

    op = build_operator(cfg, setup.spec, grid)
    op.export_csv(out / 'symbol.csv')
    outcome.artifacts.append('symbol.csv')
    fit = symbol_lower_bound_fit(op, profile.alpha, profile.sigma)
    outcome.results['symbol_fit'] = fit.to_dict()
    outcome.checker.add_result('symbol_lower_bound', fit.c_low > 0, f"C_low={fit.c_low:.6g}, C_off={fit.c_off:.6g}")
    outcome.add_report(op.check_invariants())

    if grid.d == 1:
        inversion = kernel_from_multiplier(profile, cfg.kernel.radii, cfg.kernel.resolution, cfg.kernel.quadrature())
        outcome.write_csv(inversion.to_frame(), out / 'kernel.csv')
        outcome.results['kernel'] = inversion.to_dict()
        outcome.checker.add_result('kernel_nonnegative', inversion.nonnegative,
                                   f"min K/max|K| = {inversion.to_dict()['min_relative']:.3e}")
    return outcome


def _xi_grid(cfg: RunConfig, moc: Moc, upper: float) -> np.ndarray:
    p = moc.params
    reach = max(p.delta, p.A0 or 0.0)
    lo = cfg.criterion.xi_min or p.delta * 1e-3
    hi = min(cfg.criterion.xi_max or reach * 1e3, upper)
    return np.logspace(math.log10(lo), math.log10(hi), cfg.criterion.xi_points)


def run_criterion_grid(cfg: RunConfig, out: Path) -> ExperimentOutcome:
    """Signe de la marge du critère sur une grille de ξ (et de ξ₀ pour la famille éventuelle)"""
    family = cfg.moc.moc_family
    outcome = ExperimentOutcome(RECIPES['criterion_grid'][family.value])
    setup = build_setup(cfg)
    quad = cfg.kernel.quadrature()
    constants = estimate_constants(setup.spec, setup.model, quad, cfg.criterion.eta_points)
    outcome.results['constants'] = constants.to_dict()
    if cfg.moc.explicit:
        choice = CoefficientChoice(cfg.moc.kappa, cfg.moc.gamma, cfg.moc.rho or 0.0, family, cfg.moc.safety)
    else:
        choice = select_coefficients(setup.profile.alpha, setup.profile.sigma, cfg.moc.beta, constants, family,
                                     cfg.moc.safety)
        outcome.checker.add_result('coefficients', choice.satisfied, "inégalités revérifiées")
        outcome.results['coefficients'] = choice.to_dict()
    params = moc_params(cfg, setup.profile, choice)
    gap = setup.profile.exponent_gap
    if family == MocFamily.EVENTUAL and cfg.moc.delta is None and gap < 1.0:
        params = params.with_(delta=params.A0 * 4.0 ** (-1.0 / (1.0 - gap)))
    moc = make_moc(family, params)
    upper = admissible_upper(constants, setup.profile)
    xi = _xi_grid(cfg, moc, upper)

    xi0_grid = None
    if family == MocFamily.EVENTUAL:
        xi0_grid = np.geomspace(params.delta * 1e-2, params.A0, cfg.criterion.xi0_points)
    frame = margin_grid(moc, xi, constants, cfg.criterion.epsilon, xi0_grid, B0=cfg.criterion.B0, quad=quad)
    outcome.write_csv(frame, out / 'margin.csv')
    required = frame[frame['required']] if not frame.empty else frame
    worst = float(required['margin'].min()) if not required.empty else math.inf
    outcome.results['worst_margin'] = worst
    outcome.results['moc'] = moc.to_dict()
    outcome.checker.add_result('margin_positive', worst > 0, f"pire marge {worst:.4e} sur {len(required)} point(s)")

    if cfg.criterion.audit:
        grid = setup.grid
        theta = initial_field(cfg, grid)
        op = levy_operator_from_kernel(setup.spec, grid, quad)
        if cfg.solver.t_end > 0:
            theta = simulate(theta, setup.model, op, cfg.solver.build()).final
        audit_moc = moc if family == MocFamily.STATIONARY else moc.at(0.0)
        audit = scenario_audit(theta, audit_moc, setup.model, op, constants,
                               threshold=cfg.criterion.audit_threshold, max_scenarios=cfg.criterion.audit_max,
                               slack=cfg.criterion.audit_slack, kernel=setup.spec, quad=quad)
        outcome.write_csv(pd.DataFrame([a.to_dict() for a in audit.scenarios]), out / 'scenarios.csv')
        outcome.results['audit'] = {k: v for k, v in audit.to_dict().items() if k != 'scenarios'}
        outcome.checker.add_result('scenario_audit', audit.passed, f"{len(audit.scenarios)} scénario(s) audité(s)")
    return outcome


def run_eventual_regularity(cfg: RunConfig, out: Path) -> ExperimentOutcome:
    """Suivi de l'obéissance au MOC ω(·, ξ₀(t)) et de la semi-norme de Hölder après t₁"""
    outcome = ExperimentOutcome(RECIPES['eventual_regularity'])
    setup = build_setup(cfg)
    profile, grid = setup.profile, setup.grid
    family = cfg.moc.moc_family
    theta0 = initial_field(cfg, grid)
    choice = choose_coefficients(cfg, setup, outcome)
    directions = LATTICE_DIRECTIONS_2D if grid.d == 2 else None
    fit = initial_fit(theta0, family, profile.alpha, profile.sigma, cfg.moc.beta, choice, profile,
                      c_cut=cfg.moc.c_cut, delta_max=cfg.moc.delta, stride=cfg.moc.stride, directions=directions)
    params = fit.params
    base = fit.moc()
    outcome.results['fit'] = fit.to_dict()
    cap = holder_cap(Moc.stationary(params))
    t1 = None
    if family == MocFamily.EVENTUAL:
        bound = eventual_time_t1(params, linf_norm(theta0), with_hit_time=True)
        t1 = bound.hit_time
        outcome.results['t1'] = bound.to_dict()

    rows: List[Dict[str, Any]] = []

    def track(record, theta):
        xi0 = float(xi0_solve(params, record.t)) if family == MocFamily.EVENTUAL else 0.0
        moc = base.at(xi0) if family == MocFamily.EVENTUAL else base
        obey = obeys_moc(theta, moc, stride=cfg.moc.stride, directions=directions)
        rows.append({'t': record.t, 'xi0': xi0, 'obeys': obey.passed, 'worst_ratio': obey.worst_ratio,
                     'holder': record.holder, 'holder_cap': cap})

    solver_config = replace(cfg.solver.build(), holder_beta=cfg.moc.beta)
    op = build_operator(cfg, setup.spec, grid)
    result = simulate(theta0, setup.model, op, solver_config, on_record=track)
    frame = pd.DataFrame(rows)
    outcome.write_csv(frame, out / 'regularity.csv')
    outcome.results['simulation'] = result.summary()

    outcome.checker.add_result('obeys_moc', bool(frame['obeys'].all()),
                               f"{int((~frame['obeys']).sum())} enregistrement(s) hors du MOC")
    after = frame if t1 is None else frame[frame['t'] >= t1]
    if after.empty:
        outcome.checker.add_result('holder_after_t1', True, f"t₁={t1:.4g} non atteint", informational=True)
    else:
        worst = float((after['holder'] - after['holder_cap']).max())
        outcome.checker.add_result('holder_after_t1', worst <= 0.0,
                                   f"{len(after)} enregistrement(s) après t₁, pire excès {worst:.3e}")
    return outcome


def run_report(cfg: RunConfig, out: Path) -> ExperimentOutcome:
    """Agrégation des manifestes"""
    outcome = ExperimentOutcome(RECIPES['report'])
    summary = aggregate_runs(cfg.report.run_dirs)
    write_json(summary, out / SUMMARY_FILE)
    outcome.artifacts.append(SUMMARY_FILE)
    if cfg.report.plot_data and cfg.report.run_dirs:
        plot = export_plot_data(cfg.report.run_dirs, str(out / 'plot'))
        outcome.artifacts.extend(str(Path(p).relative_to(out)) for p in plot)
    outcome.results['report'] = {'count': summary['count'], 'skipped': summary['skipped']}
    outcome.checker.add_result('runs_pass', summary['pass'], f"{summary['count']} exécution(s) agrégée(s)")
    return outcome


EXPERIMENT_RUNNERS: Dict[str, Callable[[RunConfig, Path], ExperimentOutcome]] = {
    'simulate': run_simulate,
    'moc_check': run_moc_check,
    'kernel_lab': run_kernel_lab,
    'criterion_grid': run_criterion_grid,
    'eventual_regularity': run_eventual_regularity,
    'report': run_report,
}


# ============================================================================
# EXÉCUTION
# ============================================================================

def versions() -> Dict[str, str]:
    return {'python': platform.python_version(), 'numpy': np.__version__, 'scipy': scipy.__version__,
            'pandas': pd.__version__, 'pydantic': pydantic.VERSION}


def recipe_for(cfg: RunConfig) -> str:
    recipe = RECIPES[cfg.experiment]
    return recipe[cfg.moc.family] if isinstance(recipe, dict) else recipe


def run(cfg: RunConfig) -> int:
    """
    Exécute l'expérience nommée et écrit le manifeste

    Returns:
        Code de sortie (0 réussite, 1 propriété en échec, 2 validation, 3 non-convergence)
    """
    out = cfg.output_path
    out.mkdir(parents=True, exist_ok=True)
    metrics = MetricsCollector()
    manifest: Dict[str, Any] = {'experiment': cfg.experiment, 'recipe': recipe_for(cfg), 'config': cfg.echo(),
                                'versions': versions(), 'seed': cfg.seed}
    try:
        with metrics.timer(cfg.experiment) as timer:
            outcome = EXPERIMENT_RUNNERS[cfg.experiment](cfg, out)
        checks = outcome.checker.check_all()
        passed = checks['_overall']['pass']
        exit_code = EXIT_PASS if passed else EXIT_PROPERTY_FAILURE
        manifest.update({'recipe': outcome.recipe, 'artifacts': outcome.artifacts, 'results': outcome.results,
                         'summary': {'pass': passed, 'checks': checks}})
        logger.info(f"{outcome.recipe}: {'réussite' if passed else 'échec'} en {timer.elapsed:.2f}s")
    except Exception as e:
        error = ErrorHandler.handle_error(e, context=cfg.experiment)
        write_json(error, out / ERROR_REPORT_FILE)
        exit_code = error['exit_code']
        manifest.update({'artifacts': [ERROR_REPORT_FILE], 'summary': {'pass': False, 'checks': {}},
                         'error': {'error_code': error['error_code'], 'message': error['message']}})
        print(ErrorHandler.format_user_message(e), file=sys.stderr)
    manifest['wall_time'] = metrics.total(f"{cfg.experiment}_duration")
    manifest['exit_code'] = exit_code
    write_json(manifest, out / MANIFEST_FILE)
    return exit_code


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Simulateur pseudo-spectral et laboratoire de modules de continuité")
    parser.add_argument('experiment', choices=EXPERIMENTS, help="Expérience à exécuter")
    parser.add_argument('--config', help="Fichier de configuration (.toml ou .json)")
    parser.add_argument('--output', help="Répertoire de sortie")
    parser.add_argument('--seed', type=int, help="Graine de l'aléa")
    parser.add_argument('--quiet', action='store_true', help="Journalisation limitée aux avertissements")
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    overrides = {'experiment': args.experiment, 'output_dir': args.output, 'seed': args.seed}
    try:
        cfg = load_run_config(args.config, overrides)
    except AppException as e:
        logging.basicConfig(level=logging.WARNING)
        error = ErrorHandler.handle_error(e, context='configuration')
        output = Path(args.output or 'runs/latest')
        try:
            write_json(error, output / ERROR_REPORT_FILE)
        except AppException:
            pass
        print(ErrorHandler.format_user_message(e), file=sys.stderr)
        return error['exit_code']
    level = logging.WARNING if args.quiet else getattr(logging, cfg.log_level)
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    return run(cfg)


if __name__ == '__main__':
    sys.exit(main())
