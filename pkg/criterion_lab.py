"""
Laboratoire du critère de percée

Bornes des termes de dissipation D et de dérive Ω au scénario θ(x) − θ(x+ξe) = ω(ξ), marge signée
du critère ∂tω > Ω ω′ + D + 2εω″ sur des grilles de ξ (et de ξ₀), et audit des scénarios presque
saturés d'un champ: valeurs exactes (spectrales) contre bornes.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import LATTICE_DIRECTIONS_2D
from errors import ArgumentError, ConvergenceError, ValidationError, ValidationRangeError
from models import (CriterionConstants, KernelCase, KernelSpec, MocFamily, Provenance, QuadratureParams,
                    RadialProfile, Scenario)
from moc_engine import Moc, eval_omega
from radial_multipliers import (LevyOperator, checked_quad, eval_m, kernel_value, sphere_measure,
                                symbol_from_kernel)
from spectral_core import Field, displacements, shifted
from velocity_models import VelocityModel, apply_velocity, drift_constant

logger = logging.getLogger(__name__)

CRITERION_QUAD = QuadratureParams(epsabs=1e-14, epsrel=1e-9, limit=400)

# Sous cette fraction de min(ξ, écart au raccord voisin), la différence seconde est développée
TAYLOR_FRACTION = 1e-3


# ============================================================================
# CONSTANTES
# ============================================================================

def _eta_grid(spec: KernelSpec, points: int) -> np.ndarray:
    c0 = spec.profile.c0
    if c0 is None:
        return np.logspace(-3.0, 2.0, points)
    return np.logspace(math.log10(c0) - 4.0, math.log10(c0 / 2.0), points)


def _reduced_kernel(spec: KernelSpec, eta: float, quad: QuadratureParams) -> float:
    """K̃(η) = ∫_ℝ K(η, ν) dν = 2η ∫_0^∞ K(η√(1+s²)) ds en dimension 2"""
    value, _ = checked_quad(lambda s: kernel_value(spec, eta * math.sqrt(1.0 + s * s)), 0.0, np.inf, quad,
                            'noyau réduit')
    return 2.0 * eta * value


def estimate_constants(spec: KernelSpec, model: VelocityModel, quad: QuadratureParams = CRITERION_QUAD,
                       points: int = 48) -> CriterionConstants:
    """
    C₁ = min K̃(η)η/m(η⁻¹) sur une grille de η, C₂ = 2c₁ max|Ψ| + |a|, C₁′ et C₂′ pour le cas II

    En dimension 1, K̃ = K.
    """
    if model.d != spec.d:
        raise ValidationError(f"Dimensions incohérentes: noyau d={spec.d}, modèle d={model.d}", field='d')
    profile = spec.profile
    eta = _eta_grid(spec, points)
    if spec.d == 1:
        reduced = kernel_value(spec, eta)
    else:
        reduced = np.array([_reduced_kernel(spec, float(e), quad) for e in eta])
    ratios = reduced * eta / eval_m(profile, 1.0 / eta)
    C1 = float(ratios.min())
    if not C1 > 0:
        raise ConvergenceError(f"Constante de dissipation non positive: C1={C1}", partial_value=C1)

    drift = drift_constant(model)
    C2 = 2.0 * spec.c1 * drift.psi_max + drift.a_norm
    C1p = C2p = 0.0
    if spec.case == KernelCase.II:
        tail = sphere_measure(spec.d) * (profile.c0 / 2.0) ** (-spec.tilde_alpha) / spec.tilde_alpha
        C1p = 2.0 * spec.c1 * tail
        C2p = 2.0 * drift.psi_max * tail
    constants = CriterionConstants(C1, C2, C1p, C2p, case=spec.case)
    logger.info(f"Constantes estimées: C1={C1:.6g} (η={float(eta[int(np.argmin(ratios))]):.3g}), C2={C2:.6g}, "
                f"C1'={C1p:.4g}, C2'={C2p:.4g}")
    return constants


def admissible_upper(constants: CriterionConstants, profile: RadialProfile,
                     case: Optional[KernelCase] = None) -> float:
    """Plus grand ξ traité: ∞ (cas III), c₀/2 (cas I), min{c₀/2, (C₁c̃²(α−σ)/(16C₁′))^{1/(α−σ)}} (cas II)"""
    case = KernelCase(case or constants.case)
    if case == KernelCase.III:
        return math.inf
    if profile.c0 is None:
        raise ArgumentError("Les cas I et II exigent une coupure c₀", field='c0')
    upper = profile.c0 / 2.0
    if case == KernelCase.II and constants.C1p > 0:
        g = profile.exponent_gap
        upper = min(upper, (constants.C1 * constants.c_tilde ** 2 * g / (16.0 * constants.C1p)) ** (1.0 / g))
    return upper


# ============================================================================
# BORNES DE DISSIPATION ET DE DÉRIVE
# ============================================================================

def _omega_ext(moc: Moc, x: float) -> float:
    """ω prolongée par ω(0+) en 0"""
    return moc.omega_at_zero() if x <= 0.0 else moc.omega(x)


def _interior(points: Sequence[float], a: float, b: float) -> List[float]:
    return sorted({p for p in points if a < p < b})


def _weight(profile: RadialProfile, eta: float) -> float:
    return eval_m(profile, 1.0 / eta) / eta


def dissipation_bound(moc: Moc, xi: float, constants: CriterionConstants, case: Optional[KernelCase] = None,
                      quad: QuadratureParams = CRITERION_QUAD) -> float:
    """
    C₁∫_0^{ξ/2}[ω(ξ+2η)+ω(ξ−2η)−2ω(ξ)]m(η⁻¹)/η dη + C₁∫_{ξ/2}^{U}[ω(2η+ξ)−ω(2η−ξ)−2ω(ξ)]m(η⁻¹)/η dη
    (+ C₁′ω(ξ) au cas II), avec U = ∞ au cas III et c₀/2 sinon
    """
    case = KernelCase(case or constants.case)
    profile = moc.params.profile
    upper = admissible_upper(constants, profile, case)
    if not 0.0 < xi <= upper:
        raise ValidationRangeError('xi', min_value='0 (exclu)', max_value=upper, actual_value=xi)
    w = eval_omega(moc, xi)
    omega = w.value
    breaks = moc.breakpoints

    gaps = [abs(b - xi) for b in breaks if abs(b - xi) > 1e-12 * xi]
    eta_t = TAYLOR_FRACTION * min([xi] + gaps)
    kink = w.d_plus - w.d_minus

    def head(eta):
        return (2.0 * eta * kink + 2.0 * eta ** 2 * (w.d2_minus + w.d2_plus)) * _weight(profile, eta)

    def near(eta):
        return (_omega_ext(moc, xi + 2 * eta) + _omega_ext(moc, xi - 2 * eta) - 2 * omega) * _weight(profile, eta)

    def far(eta):
        return (_omega_ext(moc, 2 * eta + xi) - _omega_ext(moc, 2 * eta - xi) - 2 * omega) * _weight(profile, eta)

    try:
        total, _ = checked_quad(head, 0.0, eta_t, quad, 'différence seconde (développement)')
    except ConvergenceError:
        if kink < 0:
            logger.warning(f"Dissipation non intégrable au coin ξ={xi:.6g}: borne −∞")
            return -math.inf
        raise
    near_points = _interior([abs(b - xi) / 2.0 for b in breaks], eta_t, xi / 2.0)
    value, _ = checked_quad(near, eta_t, xi / 2.0, quad, 'différence seconde', points=near_points or None)
    total += value

    far_points = [(b - xi) / 2.0 for b in breaks] + [(b + xi) / 2.0 for b in breaks]
    if math.isfinite(upper):
        value, _ = checked_quad(far, xi / 2.0, upper, quad, 'différence lointaine',
                                points=_interior(far_points, xi / 2.0, upper) or None)
        total += value
    else:
        split = 4.0 * max([xi] + list(breaks))
        value, _ = checked_quad(far, xi / 2.0, split, quad, 'différence lointaine',
                                points=_interior(far_points, xi / 2.0, split) or None)
        tail, _ = checked_quad(far, split, np.inf, quad, 'queue de la différence lointaine')
        total += value + tail

    bound = constants.C1 * total
    if case == KernelCase.II:
        bound += constants.C1p * omega
    return float(bound)


def tail_integral(moc: Moc, xi: float, quad: QuadratureParams = CRITERION_QUAD) -> float:
    """∫_ξ^∞ ω(η)/η² dη, exacte sur le plateau (ω(c)/c au-delà de c)"""
    if xi <= 0:
        raise ArgumentError("ξ doit être > 0", field='xi')
    cut = moc.params.c_cut
    integrand = lambda eta: moc.omega(eta) / eta ** 2
    if cut is not None:
        if xi >= cut:
            return moc.omega(cut) / xi
        value, _ = checked_quad(integrand, xi, cut, quad, 'intégrale de queue',
                                points=_interior(moc.breakpoints, xi, cut) or None)
        return float(value + moc.omega(cut) / cut)
    split = 4.0 * max([xi] + list(moc.breakpoints))
    value, _ = checked_quad(integrand, xi, split, quad, 'intégrale de queue',
                            points=_interior(moc.breakpoints, xi, split) or None)
    rest, _ = checked_quad(integrand, split, np.inf, quad, 'intégrale de queue (infini)')
    return float(value + rest)


def drift_bound(moc: Moc, xi: float, constants: CriterionConstants, D_bound: float,
                case: Optional[KernelCase] = None, quad: QuadratureParams = CRITERION_QUAD) -> float:
    """−C₂D/m(ξ⁻¹) + (C₂+C₂′)ω(ξ) + C₂ξ∫_ξ^∞ω(η)/η² dη"""
    case = KernelCase(case or constants.case)
    upper = admissible_upper(constants, moc.params.profile, case)
    if not 0.0 < xi <= upper:
        raise ValidationRangeError('xi', min_value='0 (exclu)', max_value=upper, actual_value=xi)
    C2 = constants.C2
    C2p = constants.C2p if case == KernelCase.II else 0.0
    omega = moc.omega(xi)
    return float(-C2 * D_bound / eval_m(moc.params.profile, 1.0 / xi) + (C2 + C2p) * omega
                 + C2 * xi * tail_integral(moc, xi, quad))


def drift_bound_alt(moc: Moc, xi: float, C3: float, quad: QuadratureParams = CRITERION_QUAD) -> float:
    """C₃ω(ξ) + C₃∫_0^ξ ω(η)/η dη + C₃ξ∫_ξ^∞ ω(η)/η² dη (infinie si ω(0+) > 0)"""
    if xi <= 0:
        raise ArgumentError("ξ doit être > 0", field='xi')
    if moc.omega_at_zero() > 0:
        return math.inf
    inner, _ = checked_quad(lambda eta: moc.omega(eta) / eta, 0.0, xi, quad, 'intégrale intérieure',
                            points=_interior(moc.breakpoints, 0.0, xi) or None)
    return float(C3 * (moc.omega(xi) + inner + xi * tail_integral(moc, xi, quad)))


def dissipation_closed_form(moc: Moc, xi: float, constants: CriterionConstants) -> float:
    """
    C₁′ω(ξ) − (C₁/8)β(1−β)κ m(δ⁻¹)²δ^{1−β+α−σ}ξ^{β−α+σ} pour ξ ≤ δ (famille stationnaire)

    Majorant de dissipation_bound obtenu par concavité et par la décroissance de η^{α−σ}m(η⁻¹).
    """
    p = moc.params
    if moc.xi0 > 0 or xi > p.delta or xi <= 0:
        raise ArgumentError("Forme close valable pour la famille stationnaire et 0 < ξ ≤ δ", field='xi')
    g = p.profile.exponent_gap
    md = moc.m_delta
    value = -constants.C1 / 8.0 * p.beta * (1.0 - p.beta) * p.kappa * md ** 2 * p.delta ** (1.0 - p.beta + g) \
        * xi ** (p.beta - g)
    return float(value + constants.C1p * moc.omega(xi))


def tail_integral_closed_form(moc: Moc, xi: float) -> float:
    """κ/(1−β)·m(δ⁻¹)δ^{1−β}ξ^{β−1}: majorant de ∫_ξ^∞ ω/η² pour ξ ≤ δ"""
    p = moc.params
    if moc.xi0 > 0 or xi > p.delta or xi <= 0:
        raise ArgumentError("Forme close valable pour la famille stationnaire et 0 < ξ ≤ δ", field='xi')
    return p.kappa / (1.0 - p.beta) * moc.m_delta * p.delta ** (1.0 - p.beta) * xi ** (p.beta - 1.0)


# ============================================================================
# MARGE DU CRITÈRE
# ============================================================================

@dataclass
class MarginRecord:
    """Marge ∂tω − (Ω_b ω′ + D_b + 2εω″) en un point (ξ, ξ₀)"""
    xi: float
    xi0: float
    omega: float
    D_bound: float
    Omega_bound: float
    dt_omega: float
    margin: float
    required: bool = True

    def to_row(self, with_xi0: bool = False) -> Dict[str, Any]:
        row = {'xi': self.xi}
        if with_xi0:
            row['xi0'] = self.xi0
        row.update({'D_bound': self.D_bound, 'Omega_bound': self.Omega_bound, 'margin': self.margin,
                    'required': self.required})
        return row


def criterion_margin(moc: Moc, xi: float, constants: CriterionConstants, epsilon: float = 0.0,
                     xi0: Optional[float] = None, case: Optional[KernelCase] = None, B0: Optional[float] = None,
                     quad: QuadratureParams = CRITERION_QUAD) -> MarginRecord:
    """
    Marge signée du critère; positive quand il est satisfait en ξ

    ω′ unilatérale choisie défavorablement (la plus grande si Ω_b ≥ 0), ω″ la plus grande des deux.
    Seuls les ξ tels que ω(ξ) ≤ 2B₀ sont requis (drapeau required).
    """
    if epsilon < 0:
        raise ArgumentError("ε doit être ≥ 0", field='epsilon')
    if xi0 is not None:
        if moc.family != MocFamily.EVENTUAL:
            raise ArgumentError("ξ₀ n'a de sens que pour la famille éventuelle", field='xi0')
        moc = moc.at(xi0)
    case = KernelCase(case or constants.case)
    w = eval_omega(moc, xi)
    D = dissipation_bound(moc, xi, constants, case, quad)
    Omega = drift_bound(moc, xi, constants, D, case, quad)
    slope = max(w.d_minus, w.d_plus) if Omega >= 0 else min(w.d_minus, w.d_plus)
    curvature = max(w.d2_minus, w.d2_plus)
    dt = float(moc.d_t(xi))
    margin = dt - (Omega * slope + D + 2.0 * epsilon * curvature)
    required = True if B0 is None else bool(w.value <= 2.0 * B0)
    return MarginRecord(float(xi), moc.xi0, w.value, D, Omega, dt, float(margin), required)


def margin_grid(moc: Moc, xi_grid: Sequence[float], constants: CriterionConstants, epsilon: float = 0.0,
                xi0_grid: Optional[Sequence[float]] = None, case: Optional[KernelCase] = None,
                B0: Optional[float] = None, quad: QuadratureParams = CRITERION_QUAD) -> pd.DataFrame:
    """Table (ξ[, ξ₀], D_bound, Omega_bound, margin, required); les ξ hors du domaine admissible sont omis"""
    case = KernelCase(case or constants.case)
    upper = admissible_upper(constants, moc.params.profile, case)
    xis = [float(x) for x in xi_grid if 0.0 < x <= upper]
    if len(xis) < len(xi_grid):
        logger.info(f"{len(xi_grid) - len(xis)} valeur(s) de ξ hors du domaine admissible (ξ ≤ {upper:.4g})")
    eventual = xi0_grid is not None
    if eventual and moc.family != MocFamily.EVENTUAL:
        raise ArgumentError("Une grille de ξ₀ exige la famille éventuelle", field='xi0_grid')
    rows = []
    for xi0 in (xi0_grid if eventual else [None]):
        for xi in xis:
            record = criterion_margin(moc, xi, constants, epsilon, xi0, case, B0, quad)
            rows.append(record.to_row(with_xi0=eventual))
    frame = pd.DataFrame(rows)
    if not frame.empty:
        required = frame[frame['required']]
        worst = float(required['margin'].min()) if not required.empty else math.inf
        logger.info(f"Grille du critère: {len(frame)} point(s), pire marge requise {worst:.4e}")
    return frame


# ============================================================================
# AUDIT DE SCÉNARIOS
# ============================================================================

@dataclass
class ScenarioAudit:
    """Valeurs exactes et bornes en un scénario"""
    scenario: Scenario
    exact_D: float
    D_bound: float
    exact_Omega: float
    Omega_bound: float
    D_ok: bool
    Omega_ok: bool

    def to_dict(self) -> Dict[str, Any]:
        s = self.scenario
        return {'x': list(s.x), 'e': list(s.e), 'xi': s.xi, 't': s.t, 'ratio': s.ratio,
                'exact_D': self.exact_D, 'D_bound': self.D_bound, 'exact_Omega': self.exact_Omega,
                'Omega_bound': self.Omega_bound, 'D_ok': self.D_ok, 'Omega_ok': self.Omega_ok}


@dataclass
class AuditReport:
    """Scénarios audités; la réussite exige D ≤ D_b et Ω ≤ Ω_b partout (à la tolérance près)"""
    scale: float
    threshold: float
    scenarios: List[ScenarioAudit] = field(default_factory=list)
    normalization: float = 1.0

    @property
    def passed(self) -> bool:
        return all(a.D_ok and a.Omega_ok for a in self.scenarios)

    def to_dict(self) -> Dict[str, Any]:
        return {'pass': self.passed, 'scale': self.scale, 'threshold': self.threshold,
                'normalization': self.normalization,
                'count': len(self.scenarios), 'scenarios': [a.to_dict() for a in self.scenarios]}


def _signed(shift: Sequence[int], N: int) -> Tuple[int, ...]:
    return tuple(s - N if s > N // 2 else s for s in shift)


def operator_normalization(op: LevyOperator, profile: RadialProfile, kernel: Optional[KernelSpec] = None,
                           quad: QuadratureParams = CRITERION_QUAD) -> float:
    """
    Rapport A_op(e₁)/A_K(e₁) entre le symbole de l'opérateur et celui du noyau des constantes

    Vaut 1 pour une table obtenue par quadrature du noyau. Pour un multiplicateur, les bornes de
    dissipation sont multipliées par ce rapport (π⁻¹ pour m(r) = r en dimension 1).
    """
    if op.provenance == Provenance.KERNEL_QUADRATURE:
        return 1.0
    if kernel is None:
        if profile.c0 is not None:
            raise ArgumentError("Un profil tronqué exige la spécification du noyau", field='kernel')
        kernel = KernelSpec(profile, d=op.d)
    if kernel.d != op.d:
        raise ValidationError(f"Dimensions incohérentes: noyau d={kernel.d}, opérateur d={op.d}", field='d')
    reference = (1,) + (0,) * (op.d - 1)
    kernel_value_at_one = symbol_from_kernel(kernel, 1.0, quad).value
    ratio = float(op.symbol[reference]) / kernel_value_at_one
    if not ratio > 0:
        raise ConvergenceError(f"Rapport de normalisation non positif: {ratio}", partial_value=ratio)
    logger.info(f"Normalisation opérateur/noyau: {ratio:.6g} ({op.provenance.value})")
    return ratio


def scenario_audit(theta: Field, moc: Moc, model: VelocityModel, op: LevyOperator,
                   constants: CriterionConstants, stride: int = 1, threshold: float = 0.9,
                   directions: Optional[Sequence[Tuple[int, ...]]] = None, max_scenarios: int = 32,
                   slack: float = 1e-3, t: float = 0.0, kernel: Optional[KernelSpec] = None,
                   quad: QuadratureParams = CRITERION_QUAD) -> AuditReport:
    """
    Scénarios presque saturés de θ et comparaison des valeurs exactes aux bornes

    ω est d'abord multiplié par le facteur qui le rend tangent au champ (plus grand rapport
    |θ(x)−θ(y)|/ω), puis les paires de rapport ≥ threshold sont auditées: D exact = −(ℒθ(x) − ℒθ(x+ξe)),
    Ω exact = |(u(x+ξe) − u(x))·e|, la borne de Ω utilisant le D exact. Les constantes étant calibrées
    sur le noyau, les bornes de D sont ramenées à la normalisation de op (operator_normalization) et
    la borne de Ω reçoit le D exact exprimé dans celle du noyau.
    """
    if not 0.0 < threshold <= 1.0:
        raise ArgumentError(f"Seuil hors de (0, 1]: {threshold}", field='threshold')
    grid = theta.grid
    values = theta.values
    if grid.d == 2 and directions is None:
        directions = LATTICE_DIRECTIONS_2D
    upper = admissible_upper(constants, moc.params.profile)

    scans = []
    scale = 0.0
    for shift, dist in displacements(grid, stride, directions):
        if dist > upper:
            continue
        bound = moc.omega(dist)
        diff = values - shifted(values, shift)
        top = float(np.abs(diff).max()) / bound
        scans.append((shift, dist, bound, diff, top))
        scale = max(scale, top)
    report = AuditReport(scale, threshold)
    if scale == 0.0:
        logger.info("Champ constant: aucun scénario")
        return report
    norm = operator_normalization(op, moc.params.profile, kernel, quad)
    report.normalization = norm
    scaled = replace(constants, C1=constants.C1 * norm, C1p=constants.C1p * norm)

    touching = replace(moc, params=moc.params.scaled(scale))
    candidates = []
    for shift, dist, bound, diff, top in scans:
        if top < threshold * scale:
            continue
        ratios = np.abs(diff) / (bound * scale)
        for flat in np.flatnonzero(ratios.ravel() >= threshold):
            candidates.append((float(ratios.flat[flat]), int(flat), shift, dist, float(diff.flat[flat])))
    candidates.sort(key=lambda c: -c[0])
    candidates = candidates[:max_scenarios]

    L_theta = op.apply(theta).values
    u = apply_velocity(model, theta).values
    d_cache: Dict[float, float] = {}
    for ratio, flat, shift, dist, signed_diff in candidates:
        idx = np.array(np.unravel_index(flat, values.shape))
        step = np.array(_signed(shift, grid.N))
        if signed_diff < 0:
            idx, step = (idx + step) % grid.N, -step
        x = tuple(int(v) for v in idx)
        y = tuple(int(v) for v in (idx + step) % grid.N)
        e = tuple(float(v) for v in step * grid.h / dist)
        exact_D = float(-(L_theta[x] - L_theta[y]))
        exact_Omega = abs(float(sum((u[j][y] - u[j][x]) * e[j] for j in range(grid.d))))
        if dist not in d_cache:
            d_cache[dist] = dissipation_bound(touching, dist, scaled, quad=quad)
        D_b = d_cache[dist]
        Omega_b = drift_bound(touching, dist, constants, exact_D / norm, quad=quad)
        audit = ScenarioAudit(Scenario(x, e, float(dist), t, ratio), exact_D, D_b, exact_Omega, Omega_b,
                              bool(exact_D <= D_b + slack * abs(D_b)),
                              bool(exact_Omega <= Omega_b + slack * abs(Omega_b)))
        report.scenarios.append(audit)
    failed = sum(1 for a in report.scenarios if not (a.D_ok and a.Omega_ok))
    logger.info(f"Audit de scénarios: {len(report.scenarios)} scénario(s), {failed} échec(s), facteur {scale:.4g}")
    return report
