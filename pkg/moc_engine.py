"""
Modules de continuité (MOC): construction, validation, évolution et test d'obéissance

- Famille stationnaire: ω(ξ) = κ m(δ⁻¹)δ^{1−β}ξ^β pour ξ ≤ δ, κ m(δ⁻¹)δ + γ∫_δ^ξ m(η⁻¹)dη au-delà,
  plateau optionnel après la coupure c
- Famille éventuelle ω(ξ, ξ₀), avec ξ₀(t) solution de ξ₀′ = −ρ m(ξ₀⁻¹)ξ₀; ξ₀ = 0 redonne la famille
  stationnaire
- Choix des coefficients (κ, γ, ρ): chaque inégalité est une donnée, revérifiée après sélection
- Ajustement initial de δ (stationnaire) ou de (A₀, δ) (éventuelle) à une donnée θ₀
"""
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate

from advanced_cache import TableCache, get_table_cache
from config import (FIT_MARGIN, FIT_MAX_ITERATIONS, LATTICE_DIRECTIONS_2D, MOC_OBEY_SLACK, MOC_TABLE_NODES,
                    MOC_TABLE_TOLERANCE, MONOTONE_TOLERANCE)
from errors import ArgumentError, ConvergenceError, FitImpossibleError, InsufficientDataError
from models import (CheckReport, CriterionConstants, KernelCase, MocFamily, MocParams, ProfileFamily,
                    RadialProfile)
from monitoring import PropertyChecker
from radial_multipliers import eval_dm, eval_m
from spectral_core import Field, displacements, linf_norm, shifted
from utils import write_csv

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


# ============================================================================
# TABLE DE L'INTÉGRALE ∫_δ^ξ m(η⁻¹) dη
# ============================================================================

def _log_integrand(profile: RadialProfile, s: np.ndarray) -> np.ndarray:
    """e^s m(e^{−s}): l'intégrande en variable s = log η"""
    return np.exp(s) * eval_m(profile, np.exp(-s))


def _gauss_segments(profile: RadialProfile, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    half = 0.5 * (b - a)
    s = (0.5 * (a + b))[:, None] + half[:, None] * _GL_NODES[None, :]
    return half * (_log_integrand(profile, s) @ _GL_WEIGHTS)


@dataclass(frozen=True, eq=False)
class IntegralTable:
    """
    Cumuls de ∫_δ^ξ m(η⁻¹)dη sur une grille logarithmique [δ, upper]

    Chaque segment est intégré par Gauss–Legendre à 8 points en variable log; une requête complète
    le cumul du nœud précédent par une quadrature exacte du segment partiel. Au-delà de upper,
    on prolonge par quadrature adaptative.
    """
    profile: RadialProfile
    delta: float
    upper: float
    log_nodes: np.ndarray = field(repr=False)
    cumulative: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, profile: RadialProfile, delta: float, upper: float,
              nodes: int = MOC_TABLE_NODES) -> 'IntegralTable':
        if not 0.0 < delta < upper:
            raise ArgumentError(f"Table d'intégrale invalide: δ={delta}, borne={upper}", field='delta')
        s = np.linspace(math.log(delta), math.log(upper), nodes)
        segments = _gauss_segments(profile, s[:-1], s[1:])
        cumulative = np.concatenate([[0.0], np.cumsum(segments)])
        logger.debug(f"Table d'intégrale construite: δ={delta:.4g}, borne={upper:.4g}, {nodes} nœuds")
        return cls(profile, float(delta), float(upper), s, cumulative)

    def _beyond(self, xi: float) -> float:
        value, error = integrate.quad(lambda s: float(_log_integrand(self.profile, np.array([s]))[0]),
                                      math.log(self.upper), math.log(xi), epsabs=0.0,
                                      epsrel=MOC_TABLE_TOLERANCE, limit=400)
        if error > 1e3 * MOC_TABLE_TOLERANCE * max(abs(value), 1.0):
            raise ConvergenceError(f"Prolongement de la table non convergé en ξ={xi}", partial_value=value,
                                   error_estimate=error)
        return float(self.cumulative[-1] + value)

    def __call__(self, xi: ArrayLike) -> Union[float, np.ndarray]:
        arr = np.asarray(xi, dtype=float)
        flat = np.atleast_1d(arr)
        if np.any(flat < self.delta * (1.0 - 1e-12)):
            raise ArgumentError(f"La table commence en δ={self.delta}", field='xi')
        s = np.log(np.maximum(flat, self.delta))
        out = np.empty_like(flat)
        inside = s <= self.log_nodes[-1]
        if np.any(inside):
            idx = np.clip(np.searchsorted(self.log_nodes, s[inside], side='right') - 1,
                          0, self.log_nodes.size - 2)
            out[inside] = self.cumulative[idx] + _gauss_segments(self.profile, self.log_nodes[idx], s[inside])
        for i in np.flatnonzero(~inside):
            out[i] = self._beyond(float(flat[i]))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def get_integral_table(profile: RadialProfile, delta: float, upper: float,
                       cache: Optional[TableCache] = None) -> IntegralTable:
    """Table mise en cache par (profil, δ, borne)"""
    cache = cache or get_table_cache()
    key = TableCache.make_key('moc_integral', repr(profile), float(delta), float(upper))
    return cache.get_or_compute(key, lambda: IntegralTable.build(profile, delta, upper), tags={'moc_integral'})


def _table_upper(params: MocParams) -> float:
    if params.c_cut is not None:
        return params.c_cut
    upper = 1e8 * max(params.delta, params.A0 or 0.0, 1.0)
    profile = params.profile
    if profile.family == ProfileFamily.TABLE and profile.table_r[0] > 0:
        upper = min(upper, 1.0 / profile.table_r[0])
    return upper


# ============================================================================
# MODULE DE CONTINUITÉ
# ============================================================================

PieceFunction = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class OmegaValue:
    """ω(ξ), dérivées première et seconde à gauche et à droite"""
    value: Union[float, np.ndarray]
    d_minus: Union[float, np.ndarray]
    d_plus: Union[float, np.ndarray]
    d2_minus: Union[float, np.ndarray]
    d2_plus: Union[float, np.ndarray]

    @property
    def d2(self) -> Union[float, np.ndarray]:
        """Dérivée seconde; aux points de raccord, la plus petite des deux"""
        return np.minimum(self.d2_minus, self.d2_plus)


@dataclass(frozen=True, eq=False)
class Moc:
    """Module de continuité par morceaux, famille stationnaire ou éventuelle"""
    family: MocFamily
    params: MocParams
    xi0: float = 0.0
    table: Optional[IntegralTable] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'family', MocFamily(self.family))
        p = self.params
        if self.family == MocFamily.EVENTUAL:
            if p.A0 is None or p.A0 <= p.delta:
                raise ArgumentError(f"La famille éventuelle exige A₀ > δ (A₀={p.A0}, δ={p.delta})", field='A0')
            if p.c_cut is not None and p.A0 > p.c_cut / 2.0:
                raise ArgumentError(f"A₀ doit rester ≤ c/2 (A₀={p.A0}, c={p.c_cut})", field='A0')
            if self.xi0 < 0 or self.xi0 > p.A0:
                raise ArgumentError(f"ξ₀ doit être dans [0, A₀] (reçu {self.xi0})", field='xi0')
        else:
            object.__setattr__(self, 'xi0', 0.0)
        if self.table is None:
            object.__setattr__(self, 'table', get_integral_table(p.profile, p.delta, _table_upper(p)))

    @classmethod
    def stationary(cls, params: MocParams) -> 'Moc':
        return cls(MocFamily.STATIONARY, params)

    @classmethod
    def eventual(cls, params: MocParams, xi0: Optional[float] = None) -> 'Moc':
        return cls(MocFamily.EVENTUAL, params, params.A0 if xi0 is None else xi0)

    def at(self, xi0: float) -> 'Moc':
        """Même famille et même table, ξ₀ déplacé"""
        return replace(self, xi0=float(xi0))

    @property
    def m_delta(self) -> float:
        return eval_m(self.params.profile, 1.0 / self.params.delta)

    @property
    def breakpoints(self) -> List[float]:
        return [lo for lo, _, _ in self._pieces[1:]]

    @cached_property
    def _pieces(self) -> List[Tuple[float, float, PieceFunction]]:
        p = self.params
        kappa, gamma, delta, beta = p.kappa, p.gamma, p.delta, p.beta
        md = self.m_delta
        profile = p.profile
        cut = p.c_cut if p.c_cut is not None else math.inf
        head = kappa * md * delta ** (1.0 - beta)
        table = self.table

        def holder_piece(x):
            return (head * x ** beta, head * beta * x ** (beta - 1.0),
                    head * beta * (beta - 1.0) * x ** (beta - 2.0))

        def integral_piece(x):
            return (kappa * md * delta + gamma * table(x), gamma * eval_m(profile, 1.0 / x),
                    -gamma * eval_dm(profile, 1.0 / x) / x ** 2)

        def linear(value0, slope):
            return lambda x: (value0 + slope * x, np.full_like(x, slope), np.zeros_like(x))

        pieces: List[Tuple[float, float, PieceFunction]] = []
        xi0 = self.xi0
        if xi0 > delta:
            m0 = eval_m(profile, 1.0 / xi0)
            i0 = float(table(xi0))
            pieces.append((0.0, delta, linear((1.0 - beta) * kappa * md * delta + gamma * i0
                                              - gamma * m0 * (xi0 - delta), beta * kappa * md)))
            pieces.append((delta, xi0, linear(kappa * md * delta + gamma * i0 - gamma * m0 * xi0, gamma * m0)))
            pieces.append((xi0, cut, integral_piece))
        else:
            if xi0 > 0.0:
                pieces.append((0.0, xi0, linear((1.0 - beta) * head * xi0 ** beta,
                                                beta * head * xi0 ** (beta - 1.0))))
            if xi0 < delta:
                pieces.append((xi0, delta, holder_piece))
            pieces.append((delta, cut, integral_piece))
        if math.isfinite(cut):
            plateau = float(integral_piece(np.array([cut]))[0][0])
            pieces.append((cut, math.inf, lambda x: (np.full_like(x, plateau), np.zeros_like(x),
                                                     np.zeros_like(x))))
        return [piece for piece in pieces if piece[1] > piece[0]]

    def _evaluate(self, xi: np.ndarray, derivatives: bool = True):
        value = np.empty_like(xi)
        d_minus = np.empty_like(xi)
        d_plus = np.empty_like(xi)
        d2_left = np.empty_like(xi)
        d2_right = np.empty_like(xi)
        for lo, hi, fn in self._pieces:
            left = (xi > lo) & (xi <= hi)
            if np.any(left):
                v, d1, d2 = fn(xi[left])
                value[left], d_minus[left], d2_left[left] = v, d1, d2
            if derivatives:
                right = (xi >= lo) & (xi < hi)
                if np.any(right):
                    _, d1, d2 = fn(xi[right])
                    d_plus[right], d2_right[right] = d1, d2
        if not derivatives:
            return value, None, None, None, None
        return value, d_minus, d_plus, d2_left, d2_right

    @staticmethod
    def _check(xi: ArrayLike) -> Tuple[np.ndarray, bool]:
        arr = np.asarray(xi, dtype=float)
        if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
            raise ArgumentError("ω n'est évaluée qu'en ξ > 0 fini", field='xi')
        return arr, arr.ndim == 0

    def omega(self, xi: ArrayLike) -> Union[float, np.ndarray]:
        """ω(ξ) seule, vectorisée"""
        arr, scalar = self._check(xi)
        value = self._evaluate(np.atleast_1d(arr), derivatives=False)[0]
        return float(value[0]) if scalar else value.reshape(arr.shape)

    __call__ = omega

    def omega_at_zero(self) -> float:
        """ω(0+)"""
        fn = self._pieces[0][2]
        return float(fn(np.array([0.0]))[0][0]) if self.xi0 > 0 else 0.0

    def d_xi0(self, xi: ArrayLike) -> Union[float, np.ndarray]:
        """∂_{ξ₀}ω(ξ, ξ₀) (nulle pour la famille stationnaire)"""
        arr, scalar = self._check(xi)
        x = np.atleast_1d(arr)
        out = np.zeros_like(x)
        p = self.params
        xi0 = self.xi0
        if self.family == MocFamily.EVENTUAL and xi0 > 0:
            profile = p.profile
            if xi0 > p.delta:
                slope = p.gamma * eval_dm(profile, 1.0 / xi0) / xi0 ** 2
                out = np.where(x <= p.delta, slope * (xi0 - p.delta), np.where(x <= xi0, slope * (xi0 - x), 0.0))
            else:
                coeff = (p.kappa * p.beta * (1.0 - p.beta) * self.m_delta * p.delta ** (1.0 - p.beta)
                         * xi0 ** (p.beta - 2.0))
                out = np.where(x <= xi0, coeff * (xi0 - x), 0.0)
        return float(out[0]) if scalar else out.reshape(arr.shape)

    def d_t(self, xi: ArrayLike) -> Union[float, np.ndarray]:
        """∂_tω = −ρ m(ξ₀⁻¹) ξ₀ ∂_{ξ₀}ω (chaîne à travers l'équation de ξ₀)"""
        if self.family == MocFamily.STATIONARY or self.xi0 <= 0:
            arr, scalar = self._check(xi)
            return 0.0 if scalar else np.zeros_like(arr)
        rate = self.params.rho * eval_m(self.params.profile, 1.0 / self.xi0) * self.xi0
        return -rate * self.d_xi0(xi)

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family.value, 'xi0': self.xi0, 'params': self.params.to_dict()}


def eval_omega(moc: Moc, xi: ArrayLike) -> OmegaValue:
    """ω(ξ) avec dérivées unilatérales d± et dérivée seconde; erreur d'argument si ξ ≤ 0"""
    arr, scalar = Moc._check(xi)
    parts = moc._evaluate(np.atleast_1d(arr))
    if scalar:
        return OmegaValue(*(float(part[0]) for part in parts))
    return OmegaValue(*(part.reshape(arr.shape) for part in parts))


def default_xi_grid(moc: Moc, points: int = 1000) -> np.ndarray:
    """Grille logarithmique couvrant δ, ξ₀ et la coupure"""
    p = moc.params
    scales = [p.delta, p.c_cut or 0.0, p.A0 or 0.0, 1.0]
    return np.logspace(math.log10(p.delta * 1e-3), math.log10(max(scales) * 1e3), points)


def validate_shape(moc: Moc, xi_grid: Optional[ArrayLike] = None,
                   tolerance: float = MONOTONE_TOLERANCE) -> CheckReport:
    """
    Monotonie, concavité (test des sécantes), ω/ξ^β décroissante, signe du saut de dérivée en δ

    Pour la famille éventuelle, le rapport ω/ξ^β est informatif et ω(0+) > 0 est exigée.
    """
    xi = np.asarray(default_xi_grid(moc) if xi_grid is None else xi_grid, dtype=float).ravel()
    if xi.size < 3:
        raise InsufficientDataError(required=3, actual=int(xi.size), what="grille de ξ")
    if np.any(np.diff(xi) <= 0) or xi[0] <= 0:
        raise ArgumentError("La grille de ξ doit être positive et strictement croissante", field='xi_grid')
    p = moc.params
    omega = moc.omega(xi)
    scale = max(float(np.abs(omega).max()), 1e-300)
    slopes = np.diff(omega) / np.diff(xi)
    margins: Dict[str, float] = {}

    def monotone():
        worst = float(np.diff(omega).min() / scale)
        margins['monotone'] = worst
        return worst >= -tolerance, f"pire incrément relatif {worst:.3e}"

    def concave():
        slack = tolerance * np.maximum(np.abs(slopes[:-1]), np.abs(slopes[1:])) + 1e-12 * scale / np.diff(xi)[1:]
        excess = slopes[1:] - slopes[:-1] - slack
        worst = float(excess.max()) if excess.size else 0.0
        margins['concave'] = -worst
        return worst <= 0.0, f"pire excès de pente {worst:.3e}"

    def holder_ratio():
        ratio = omega / xi ** p.beta
        worst = float((np.diff(ratio) / np.abs(ratio[1:])).max())
        margins['holder_ratio'] = -worst
        return worst <= tolerance, f"pire croissance relative de ω/ξ^β {worst:.3e}"

    def jump_sign():
        at_delta = eval_omega(moc, p.delta)
        ok = at_delta.d_minus >= at_delta.d_plus * (1.0 - tolerance)
        margins['jump_sign'] = at_delta.d_minus - at_delta.d_plus
        return ok, f"ω′(δ−)={at_delta.d_minus:.6g}, ω′(δ+)={at_delta.d_plus:.6g}"

    def coefficients():
        issues = p.invariant_violations(moc.family)
        return not issues, "; ".join(issues) or "γ < κβ respecté"

    checker = PropertyChecker()
    checker.register_check('monotone', monotone)
    checker.register_check('concave', concave)
    checker.register_check('holder_ratio', holder_ratio, informational=moc.family == MocFamily.EVENTUAL)
    checker.register_check('jump_sign', jump_sign)
    checker.register_check('coefficients', coefficients)
    if moc.family == MocFamily.EVENTUAL:
        checker.register_check('positive_at_zero',
                               lambda: (moc.xi0 == 0.0 or moc.omega_at_zero() > 0.0,
                                        f"ω(0+)={moc.omega_at_zero():.6g}"))
    results = checker.check_all()
    passed = results['_overall']['pass']
    worst_name = min(margins, key=margins.get) if margins else None
    if not passed:
        failed = [name for name, r in results.items() if name != '_overall' and not r['pass']]
        logger.info(f"Forme du MOC rejetée: {', '.join(failed)}")
    return CheckReport(name='validate_shape', passed=passed,
                       worst_margin=float(margins[worst_name]) if worst_name else 0.0,
                       worst_at=worst_name, details=results)


# ============================================================================
# CHOIX DES COEFFICIENTS
# ============================================================================

@dataclass(frozen=True)
class CoefficientBound:
    """Une inégalité variable < borne (ou ≤ si non stricte)"""
    variable: str
    text: str
    bound: Callable[[Dict[str, float]], float]
    strict: bool = True


@dataclass
class InequalityCheck:
    variable: str
    text: str
    value: float
    bound: float
    holds: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class CoefficientChoice:
    """(κ, γ, ρ) retenus et registre des inégalités revérifiées"""
    kappa: float
    gamma: float
    rho: float
    family: MocFamily
    safety: float
    ledger: List[InequalityCheck] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return all(check.holds for check in self.ledger)

    def to_dict(self) -> Dict[str, Any]:
        return {'kappa': self.kappa, 'gamma': self.gamma, 'rho': self.rho, 'family': self.family.value,
                'safety': self.safety, 'satisfied': self.satisfied,
                'ledger': [check.to_dict() for check in self.ledger]}


def _stationary_bounds(case: KernelCase) -> List[CoefficientBound]:
    if case == KernelCase.III:
        k_den, g_den = (lambda c: 32.0 * c['C2']), (lambda c: 8.0 * c['C2'])
    else:
        k_den, g_den = (lambda c: 64.0 * (c['C2'] + c['C2p'])), (lambda c: 16.0 * (c['C2'] + c['C2p']))
    return [
        CoefficientBound('kappa', "κ < 1/(2C₂β)", lambda c: 1.0 / (2.0 * c['C2'] * c['beta'])),
        CoefficientBound('kappa', "κ < C₁(1−β)²/(K·C₂)", lambda c: c['C1'] * (1 - c['beta']) ** 2 / k_den(c)),
        CoefficientBound('gamma', "γ < βκ", lambda c: c['beta'] * c['kappa']),
        CoefficientBound('gamma', "γ < κ/2", lambda c: c['kappa'] / 2.0),
        CoefficientBound('gamma', "γ < 1/(2C₂)", lambda c: 1.0 / (2.0 * c['C2'])),
        CoefficientBound('gamma', "γ < C₁c̃²(1−β)(α−σ)/(K·C₂)",
                         lambda c: c['C1'] * c['ct'] ** 2 * (1 - c['beta']) * c['g'] / g_den(c)),
        CoefficientBound('rho', "ρ ≤ C₁(1−β)(α−σ)/(24α²)",
                         lambda c: c['C1'] * (1 - c['beta']) * c['g'] / (24.0 * c['alpha'] ** 2), strict=False),
    ]


def _eventual_bounds() -> List[CoefficientBound]:
    def b(variable, text, fn, strict=True):
        return CoefficientBound(variable, text, fn, strict)

    return [
        b('rho', "ρ < C₁(α−σ)/(2α²)", lambda c: c['C1'] * c['g'] / (2 * c['alpha'] ** 2)),
        b('rho', "ρ < C₁(1−β)(α−σ)/(24α²)", lambda c: c['C1'] * (1 - c['beta']) * c['g'] / (24 * c['alpha'] ** 2)),
        b('rho', "ρ < C₁/(2αβ)", lambda c: c['C1'] / (2 * c['alpha'] * c['beta'])),
        b('kappa', "κ < 1/(4C₂β)", lambda c: 1 / (4 * c['C2'] * c['beta'])),
        b('kappa', "κ < C₁/(4C₂βα)", lambda c: c['C1'] / (4 * c['C2'] * c['beta'] * c['alpha'])),
        b('kappa', "κ < C₁(α−σ)²/(2C₂(C₀+1)βα)",
          lambda c: c['C1'] * c['g'] ** 2 / (2 * c['C2'] * (c['C0'] + 1) * c['beta'] * c['alpha'])),
        b('kappa', "κ < C₁(1−β)/(C₂(C₀+2)β²α)",
          lambda c: c['C1'] * (1 - c['beta']) / (c['C2'] * (c['C0'] + 2) * c['beta'] ** 2 * c['alpha'])),
        b('kappa', "κ < C₁(1−β)/(6C₂(C₀+2)β²α)",
          lambda c: c['C1'] * (1 - c['beta']) / (6 * c['C2'] * (c['C0'] + 2) * c['beta'] ** 2 * c['alpha'])),
        b('kappa', "κ < 1/(2C₂β)", lambda c: 1 / (2 * c['C2'] * c['beta'])),
        b('kappa', "κ < C₁(1−β)²/(2C₂(2+C₀β)βα)",
          lambda c: c['C1'] * (1 - c['beta']) ** 2
          / (2 * c['C2'] * (2 + c['C0'] * c['beta']) * c['beta'] * c['alpha'])),
        b('kappa', "κ < 1/(2C₂)", lambda c: 1 / (2 * c['C2'])),
        b('kappa', "κ < C₁(1−β)²/(192C₂)", lambda c: c['C1'] * (1 - c['beta']) ** 2 / (192 * c['C2'])),
        b('gamma', "γ ≤ (1−β)(α−σ)κ/8", lambda c: (1 - c['beta']) * c['g'] * c['kappa'] / 8, strict=False),
        b('gamma', "γ ≤ C₁(1−β)(α−σ)²/(24C₂(C₀+1)βα)",
          lambda c: c['C1'] * (1 - c['beta']) * c['g'] ** 2
          / (24 * c['C2'] * (c['C0'] + 1) * c['beta'] * c['alpha']), strict=False),
        b('gamma', "γ < 1/(4C₂)", lambda c: 1 / (4 * c['C2'])),
        b('gamma', "γ < C₁/(4C₂α)", lambda c: c['C1'] / (4 * c['C2'] * c['alpha'])),
        b('gamma', "γ < C₁(1−β)/(2C₂βα)", lambda c: c['C1'] * (1 - c['beta']) / (2 * c['C2'] * c['beta'] * c['alpha'])),
        b('gamma', "γ < C₁(α−σ)²/(2C₂(C₀+3)α)",
          lambda c: c['C1'] * c['g'] ** 2 / (2 * c['C2'] * (c['C0'] + 3) * c['alpha'])),
        b('gamma', "γ ≤ C₁(α−σ)/(2C₂(C₀+3)α)",
          lambda c: c['C1'] * c['g'] / (2 * c['C2'] * (c['C0'] + 3) * c['alpha']), strict=False),
        b('gamma', "γ < 1/(2C₂)", lambda c: 1 / (2 * c['C2'])),
        b('gamma', "γ < C₁c̃²(α−σ)²/(6C₂α)", lambda c: c['C1'] * c['ct'] ** 2 * c['g'] ** 2 / (6 * c['C2'] * c['alpha'])),
        b('gamma', "γ < c̃(1−β)(α−σ)²/(8α)", lambda c: c['ct'] * (1 - c['beta']) * c['g'] ** 2 / (8 * c['alpha'])),
        b('gamma', "γ < κ", lambda c: c['kappa']),
        b('gamma', "γ < (1−β)κ", lambda c: (1 - c['beta']) * c['kappa']),
        b('gamma', "γ < βκ", lambda c: c['beta'] * c['kappa']),
    ]


def coefficient_bounds(family: MocFamily, case: KernelCase = KernelCase.III) -> List[CoefficientBound]:
    """Les inégalités encodées pour une famille"""
    return _stationary_bounds(KernelCase(case)) if MocFamily(family) == MocFamily.STATIONARY \
        else _eventual_bounds()


def select_coefficients(alpha: float, sigma: float, beta: float, constants: CriterionConstants,
                        family: MocFamily = MocFamily.STATIONARY, safety: float = 0.5) -> CoefficientChoice:
    """
    Plus grands (κ, γ, ρ) compatibles avec toutes les inégalités, multipliés par le facteur de sécurité

    κ est choisi d'abord, puis γ (dont certaines bornes dépendent de κ), puis ρ; chaque inégalité
    est ensuite revérifiée par substitution directe.
    """
    if not 0.0 <= sigma < alpha <= 1.0:
        raise ArgumentError(f"Exposants invalides: α={alpha}, σ={sigma}", field='alpha')
    if not 1.0 - alpha + sigma < beta < 1.0:
        raise ArgumentError(f"β doit être dans (1−α+σ, 1) (reçu {beta})", field='beta')
    if not 0.0 < safety < 1.0:
        raise ArgumentError(f"Facteur de sécurité hors de (0, 1): {safety}", field='safety')
    family = MocFamily(family)
    ctx: Dict[str, float] = {
        'alpha': alpha, 'sigma': sigma, 'beta': beta, 'g': alpha - sigma,
        'C1': constants.C1, 'C2': constants.C2 + (constants.C2p if family == MocFamily.EVENTUAL else 0.0),
        'C1p': constants.C1p, 'C2p': constants.C2p, 'C0': constants.C0, 'ct': constants.c_tilde,
    }
    bounds = coefficient_bounds(family, constants.case)
    chosen: Dict[str, float] = {}
    for variable in ('kappa', 'gamma', 'rho'):
        limits = [bnd.bound(ctx) for bnd in bounds if bnd.variable == variable]
        chosen[variable] = safety * min(limits)
        ctx[variable] = chosen[variable]

    ledger = []
    for bnd in bounds:
        value, limit = ctx[bnd.variable], bnd.bound(ctx)
        holds = value < limit if bnd.strict else value <= limit
        ledger.append(InequalityCheck(bnd.variable, bnd.text, value, limit, bool(holds)))
    choice = CoefficientChoice(chosen['kappa'], chosen['gamma'], chosen['rho'], family, safety, ledger)
    if not choice.satisfied:
        logger.warning("Coefficients retenus ne satisfaisant pas toutes les inégalités")
    logger.info(f"Coefficients {family.value}: κ={choice.kappa:.4e}, γ={choice.gamma:.4e}, ρ={choice.rho:.4e}")
    return choice


# ============================================================================
# ÉVOLUTION DE ξ₀ ET TEMPS t₁
# ============================================================================

def _require_eventual(params: MocParams) -> None:
    if params.A0 is None or params.A0 <= 0:
        raise ArgumentError("A₀ > 0 est requis", field='A0')
    if params.rho <= 0:
        raise ArgumentError("ρ > 0 est requis", field='rho')


def xi0_solve(params: MocParams, t: ArrayLike, method: str = 'auto') -> Union[float, np.ndarray]:
    """
    ξ₀(t) solution de ξ₀′ = −ρ m(ξ₀⁻¹)ξ₀, ξ₀(0) = A₀, tronquée à 0

    method: 'closed_form' (profil puissance), 'ode' (Runge–Kutta adaptatif) ou 'auto'.
    """
    _require_eventual(params)
    arr = np.asarray(t, dtype=float)
    times = np.atleast_1d(arr)
    if np.any(times < 0):
        raise ArgumentError("t doit être positif ou nul", field='t')
    profile = params.profile
    A0, rho = params.A0, params.rho
    power = profile.family == ProfileFamily.POWER
    if method not in ('auto', 'closed_form', 'ode'):
        raise ArgumentError(f"Méthode inconnue: {method}", field='method')
    if method == 'closed_form' and not power:
        raise ArgumentError("La forme close n'existe que pour un profil puissance", field='method')

    if power and method != 'ode':
        a = profile.alpha
        out = np.maximum(A0 ** a - a * rho * times, 0.0) ** (1.0 / a)
    else:
        out = np.zeros_like(times)
        t_max = float(times.max())
        if t_max == 0.0:
            out[:] = A0
        else:
            def rhs(_, y):
                return [-rho * eval_m(profile, 1.0 / max(y[0], 1e-300)) * y[0]]

            def hit(_, y):
                return y[0] - 1e-12 * A0
            hit.terminal = True
            hit.direction = -1

            order = np.argsort(times)
            sol = integrate.solve_ivp(rhs, (0.0, t_max), [A0], method='RK45', t_eval=times[order],
                                      events=hit, rtol=1e-11, atol=1e-14 * A0)
            if sol.status < 0:
                raise ConvergenceError(f"Intégration de ξ₀ échouée: {sol.message}")
            solved = np.zeros_like(times)
            solved[:sol.y.shape[1]] = sol.y[0]
            out[order] = np.maximum(solved, 0.0)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def xi0_hit_time(params: MocParams) -> float:
    """Instant où ξ₀ atteint 0: ∫_0^{A₀} dη/(ρ m(η⁻¹)η)"""
    _require_eventual(params)
    profile = params.profile
    if profile.family == ProfileFamily.POWER:
        return params.A0 ** profile.alpha / (profile.alpha * params.rho)
    value, error = integrate.quad(lambda eta: 1.0 / (params.rho * eval_m(profile, 1.0 / eta) * eta),
                                  0.0, params.A0, limit=400, epsrel=1e-10)
    if not math.isfinite(value):
        raise ConvergenceError("Temps d'atteinte de ξ₀ = 0 non convergé", partial_value=value,
                               error_estimate=error)
    return float(value)


@dataclass
class T1Bound:
    """Bornes supérieures du temps t₁ où ξ₀ s'annule"""
    t1_estimate: float
    t1_shape: Optional[float] = None
    hit_time: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def eventual_time_t1(params: MocParams, linf0: Optional[float] = None, C: float = 1.0,
                     with_hit_time: bool = False) -> T1Bound:
    """
    t₁ ≤ 1/((α−σ)ρ m(A₀⁻¹)); pour un profil puissance avec σ = 0 et α < 1, évalue aussi la forme
    explicite C/(1−β)·(4(1−α)/(αγ))^{α/(1−α)}‖θ₀‖∞^{α/(1−α)}
    """
    _require_eventual(params)
    profile = params.profile
    estimate = 1.0 / (profile.exponent_gap * params.rho * eval_m(profile, 1.0 / params.A0))
    shape = None
    a = profile.alpha
    if linf0 is not None and profile.family == ProfileFamily.POWER and profile.sigma == 0 and a < 1:
        shape = C / (1.0 - params.beta) * (4.0 * (1.0 - a) / (a * params.gamma)) ** (a / (1.0 - a)) \
            * linf0 ** (a / (1.0 - a))
    hit = xi0_hit_time(params) if with_hit_time else None
    return T1Bound(float(estimate), shape, hit)


def holder_cap(moc: Moc) -> float:
    """sup ω(ξ)/ξ^β = κ m(δ⁻¹)δ^{1−β}: borne de Hölder d'un champ obéissant au MOC stationnaire"""
    p = moc.params
    return moc.m_delta * p.kappa * p.delta ** (1.0 - p.beta)


def holder_cap_shape(alpha: float, beta: float, gamma: float, linf0: float, C: float = 1.0) -> float:
    """(1−β)²/C·((1−α)/(αγ))^{−e}·‖θ₀‖∞^{−e}, e = (β−1+α)/(1−α) (profil puissance, σ = 0)"""
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"La forme explicite exige α ∈ (0, 1) (reçu {alpha})", field='alpha')
    if linf0 <= 0:
        raise ArgumentError("‖θ₀‖∞ doit être > 0", field='linf0')
    e = (beta - 1.0 + alpha) / (1.0 - alpha)
    return (1.0 - beta) ** 2 / C * ((1.0 - alpha) / (alpha * gamma)) ** (-e) * linf0 ** (-e)


def tangent_count_N(alpha: float, sigma: float = 0.0) -> int:
    """N = ⌊((2−g)/g)^{1/(1−g)}⌋ + 1 avec g = α − σ ∈ (0, 1)"""
    g = alpha - sigma
    if not 0.0 < g < 1.0:
        raise ArgumentError(f"α−σ doit être dans (0, 1) (reçu {g})", field='alpha')
    return int(math.floor(((2.0 - g) / g) ** (1.0 / (1.0 - g)))) + 1


def starting_scale_margin(params: MocParams, linf0: float) -> float:
    """(α−σ)γ/(1−α+σ)·m(A₀⁻¹)A₀^{α−σ}(A₀^{1−α+σ} − δ^{1−α+σ}) − 2‖θ₀‖∞"""
    _require_eventual(params)
    g = params.profile.exponent_gap
    q = 1.0 - g
    if q <= 0:
        raise ArgumentError("La condition d'échelle de départ exige α−σ < 1", field='alpha')
    A0 = params.A0
    lhs = g * params.gamma / q * eval_m(params.profile, 1.0 / A0) * A0 ** g * (A0 ** q - params.delta ** q)
    return float(lhs - 2.0 * linf0)


# ============================================================================
# OBÉISSANCE D'UN CHAMP
# ============================================================================

@dataclass
class ObeyReport:
    """Résultat du balayage des paires"""
    passed: bool
    worst_ratio: float
    worst_margin: float
    worst_pair: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]] = None
    worst_distance: Optional[float] = None
    pairs_checked: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {'pass': self.passed, 'worst_ratio': self.worst_ratio, 'worst_margin': self.worst_margin,
                'worst_pair': self.worst_pair, 'worst_distance': self.worst_distance,
                'pairs_checked': self.pairs_checked}


def obeys_moc(field_: Field, moc: Moc, stride: int = 1,
              directions: Optional[Sequence[Tuple[int, ...]]] = None, exhaustive: bool = False,
              slack: float = MOC_OBEY_SLACK) -> ObeyReport:
    """
    |θ(x)−θ(y)| < ω(dist(x, y)) sur les paires échantillonnées (distance torique)

    En dimension 2, sans directions explicites ni balayage exhaustif, on parcourt les 16 directions
    du réseau. La paire retenue maximise |θ(x)−θ(y)|/ω.
    """
    values = field_.values
    if not np.all(np.isfinite(values)):
        raise ArgumentError("Le champ contient des valeurs non finies", field='field')
    grid = field_.grid
    if grid.d == 2 and directions is None and not exhaustive:
        directions = LATTICE_DIRECTIONS_2D
    report = ObeyReport(True, 0.0, math.inf)
    for shift, dist in displacements(grid, stride, directions):
        bound = moc.omega(dist)
        diff = np.abs(values - shifted(values, shift))
        flat = int(np.argmax(diff))
        worst = float(diff.flat[flat])
        report.pairs_checked += diff.size
        report.worst_margin = min(report.worst_margin, bound - worst)
        ratio = worst / bound
        if ratio > report.worst_ratio or report.worst_pair is None:
            x = tuple(int(v) for v in np.unravel_index(flat, values.shape))
            y = tuple((xi + s) % grid.N for xi, s in zip(x, shift))
            report.worst_ratio, report.worst_pair, report.worst_distance = ratio, (x, y), dist
    report.passed = report.worst_margin > -slack
    return report


# ============================================================================
# AJUSTEMENT INITIAL
# ============================================================================

@dataclass
class FitResult:
    """δ (stationnaire) ou (A₀, δ) (éventuelle) ajustés à θ₀"""
    family: MocFamily
    params: MocParams
    iterations: int
    target: float
    achieved: float
    obey: Optional[ObeyReport] = None
    closed_form: bool = False

    @property
    def delta(self) -> float:
        return self.params.delta

    @property
    def A0(self) -> Optional[float]:
        return self.params.A0

    def moc(self) -> Moc:
        return Moc.stationary(self.params) if self.family == MocFamily.STATIONARY else Moc.eventual(self.params)

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family.value, 'delta': self.delta, 'A0': self.A0, 'iterations': self.iterations,
                'target': self.target, 'achieved': self.achieved, 'closed_form': self.closed_form,
                'obey': self.obey.to_dict() if self.obey else None, 'params': self.params.to_dict()}


def _fit_stationary(theta0: Field, profile: RadialProfile, beta: float, coefficients: CoefficientChoice,
                    c_cut: Optional[float], delta_max: Optional[float], margin: float,
                    obey_kwargs: Dict[str, Any]) -> FitResult:
    linf = linf_norm(theta0)
    a0 = c_cut if c_cut is not None else theta0.grid.diameter
    delta = delta_max if delta_max is not None else min(1.0, a0 / 2.0)
    target = (1.0 + margin) * 2.0 * linf

    def build(d: float) -> MocParams:
        return MocParams(coefficients.kappa, coefficients.gamma, d, beta, profile, coefficients.rho, None, c_cut)

    if linf == 0.0:
        return FitResult(MocFamily.STATIONARY, build(delta), 0, 0.0, 0.0)
    if profile.family == ProfileFamily.POWER and profile.alpha < 1.0:
        supremum = coefficients.gamma * a0 ** (1.0 - profile.alpha) / (1.0 - profile.alpha)
        if supremum < target:
            raise FitImpossibleError('m-int', details={'supremum': supremum, 'target': target})

    achieved = 0.0
    for iteration in range(1, FIT_MAX_ITERATIONS + 1):
        moc = Moc.stationary(build(delta))
        achieved = moc.omega(a0)
        if achieved >= target:
            obey = obeys_moc(theta0, moc, **obey_kwargs)
            if obey.passed:
                logger.info(f"Ajustement stationnaire: δ={delta:.4e} après {iteration} itération(s)")
                return FitResult(MocFamily.STATIONARY, moc.params, iteration, target, achieved, obey)
        delta /= 2.0
    condition = 'm-int' if achieved < target else 'obeys_moc'
    raise FitImpossibleError(condition, details={'target': target, 'achieved': achieved, 'delta': delta})


def _fit_eventual(theta0: Field, profile: RadialProfile, beta: float, coefficients: CoefficientChoice,
                  c_cut: Optional[float], margin: float, obey_kwargs: Dict[str, Any]) -> FitResult:
    g = profile.exponent_gap
    if g >= 1.0:
        raise ArgumentError("La famille éventuelle exige α−σ < 1", field='alpha')
    linf = linf_norm(theta0)
    q = 1.0 - g
    kappa, gamma, rho = coefficients.kappa, coefficients.gamma, coefficients.rho
    target = (1.0 + margin) * 2.0 * linf

    def build(A0: float) -> MocParams:
        return MocParams(kappa, gamma, A0 * 4.0 ** (-1.0 / q), beta, profile, rho, A0, c_cut)

    def check(params: MocParams) -> FitResult:
        moc = Moc.eventual(params)
        obey = obeys_moc(theta0, moc, **obey_kwargs)
        if not obey.passed:
            raise FitImpossibleError('obeys_moc', details={'A0': params.A0, 'delta': params.delta})
        return FitResult(MocFamily.EVENTUAL, params, iterations, target,
                         starting_scale_margin(params, linf) + 2.0 * linf, obey, closed)

    closed = profile.family == ProfileFamily.POWER and profile.sigma == 0.0 and linf > 0
    iterations = 0
    if closed:
        a = profile.alpha
        base = (1.0 - a) * linf / (a * gamma)
        params = MocParams(kappa, gamma, base ** (1.0 / q), beta, profile, rho, (4.0 * base) ** (1.0 / q), c_cut)
        if c_cut is not None and params.A0 > c_cut / 2.0:
            raise FitImpossibleError('A0 <= c/2', details={'A0': params.A0, 'c_cut': c_cut})
        return check(params)

    def value(A0: float) -> float:
        return starting_scale_margin(build(A0), linf) + 2.0 * linf

    upper = c_cut / 2.0 if c_cut is not None else math.inf
    hi = min(1.0, upper)
    while value(hi) < target:
        iterations += 1
        if hi >= upper or iterations > FIT_MAX_ITERATIONS:
            raise FitImpossibleError('A0 <= c/2' if hi >= upper else 'starting_scale',
                                     details={'A0': hi, 'target': target})
        hi = min(2.0 * hi, upper)
    lo = hi / 2.0
    if value(lo) < target:
        for _ in range(60):
            iterations += 1
            mid = math.sqrt(lo * hi)
            if value(mid) >= target:
                hi = mid
            else:
                lo = mid
    logger.info(f"Ajustement éventuel: A₀={hi:.4e} après {iterations} itération(s)")
    return check(build(hi))


def initial_fit(theta0: Field, family: MocFamily, alpha: float, sigma: float, beta: float,
                coefficients: CoefficientChoice, profile: Optional[RadialProfile] = None,
                c_cut: Optional[float] = None, delta_max: Optional[float] = None, stride: int = 1,
                directions: Optional[Sequence[Tuple[int, ...]]] = None,
                margin: float = FIT_MARGIN) -> FitResult:
    """
    Ajuste le MOC à θ₀: δ divisé par deux (stationnaire) jusqu'à ω(a₀) ≥ (1+marge)·2‖θ₀‖∞ et obéissance;
    A₀ doublé puis dichotomie (éventuelle), formes closes pour un profil puissance avec σ = 0

    Un profil dont l'intégrale ∫_0 m(ξ⁻¹)dξ converge peut rendre l'ajustement stationnaire impossible:
    l'erreur nomme alors la condition 'm-int'.
    """
    if profile is None:
        profile = RadialProfile(ProfileFamily.POWER, alpha, sigma)
    elif not (math.isclose(profile.alpha, alpha) and math.isclose(profile.sigma, sigma)):
        raise ArgumentError(f"Profil incohérent avec (α, σ) = ({alpha}, {sigma})", field='profile')
    obey_kwargs = {'stride': stride, 'directions': directions}
    if MocFamily(family) == MocFamily.STATIONARY:
        return _fit_stationary(theta0, profile, beta, coefficients, c_cut, delta_max, margin, obey_kwargs)
    return _fit_eventual(theta0, profile, beta, coefficients, c_cut, margin, obey_kwargs)


# ============================================================================
# EXPORTS
# ============================================================================

def moc_profile_table(moc: Moc, xi_grid: Optional[ArrayLike] = None) -> pd.DataFrame:
    """Colonnes ξ, ω, ω′₋, ω′₊"""
    xi = np.asarray(default_xi_grid(moc) if xi_grid is None else xi_grid, dtype=float).ravel()
    values = eval_omega(moc, xi)
    return pd.DataFrame({'xi': xi, 'omega': values.value, 'd_minus': values.d_minus, 'd_plus': values.d_plus})


def export_moc_profile(moc: Moc, path, xi_grid: Optional[ArrayLike] = None) -> None:
    write_csv(moc_profile_table(moc, xi_grid), path)
