"""
Profils radiaux m, symboles et noyaux de Lévy

- Évaluation de m (formes closes et tables), dérivées m′ et m″
- Vérifications structurelles: inégalité différentielle, applications monotones, enveloppes, positivité
- Symboles A(k) par multiplicateur ou par quadrature du noyau (formule de Lévy–Khintchine)
- Inversion numérique du noyau en dimension 1

Convention: f̂(ζ) = ∫ e^{ix·ζ} f(x) dx; le symbole de ℒ est A(ζ) = ∫ (1 − cos(ζ·y)) K(y) dy.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import mpmath
import numpy as np
import pandas as pd
from scipy import integrate, special

from advanced_cache import TableCache, get_table_cache
from config import MDEC_RELATIVE_STEP, MDEC_TOLERANCE, MONOTONE_TOLERANCE
from errors import (ArgumentError, ConvergenceError, InsufficientDataError, OutOfRangeError,
                    ResolutionError, ValidationError)
from models import CheckReport, KernelCase, KernelSpec, ProfileFamily, Provenance, QuadratureParams, RadialProfile
from spectral_core import Field, PeriodicGrid, inverse_transform
from utils import write_csv

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Sommes partielles retenues pour la transformation de Shanks
TAIL_WINDOW = 12


# ============================================================================
# ÉVALUATION DE m
# ============================================================================

def _log_factor(values: np.ndarray, what: str) -> np.ndarray:
    if np.any(values <= 0):
        raise OutOfRangeError(f"Facteur logarithmique non positif ({what})", value=float(values.min()),
                              admissible='> 0')
    return values


def _table_eval(profile: RadialProfile, r: np.ndarray) -> np.ndarray:
    rs = np.asarray(profile.table_r, dtype=float)
    ms = np.asarray(profile.table_m, dtype=float)
    if np.any(r < rs[0]) or np.any(r > rs[-1]):
        bad = r[(r < rs[0]) | (r > rs[-1])]
        raise OutOfRangeError(f"Rayon hors de la table: {float(bad[0])}", value=float(bad[0]),
                              admissible=(float(rs[0]), float(rs[-1])))
    if profile.interpolation == 'linear':
        return np.interp(r, rs, ms)
    if np.any(ms <= 0) or rs[0] <= 0:
        raise ValidationError("L'interpolation log-log exige des échantillons strictement positifs",
                              field='table')
    return np.exp(np.interp(np.log(r), np.log(rs), np.log(ms)))


def _m_positive(profile: RadialProfile, r: np.ndarray) -> np.ndarray:
    family = profile.family
    if family == ProfileFamily.POWER:
        return np.power(r, profile.alpha)
    if family == ProfileFamily.POWER_LOG:
        if profile.mu == 0:
            return np.power(r, profile.alpha)
        L = _log_factor(np.log(profile.lam + r), 'log(λ+r)')
        return np.power(r, profile.alpha) / L ** profile.mu
    if family == ProfileFamily.POWER_LOGLOG:
        L = _log_factor(np.log(profile.lam + r), 'log(λ+r)')
        G = _log_factor(np.log(np.log(profile.lam2 + r)), 'log log(λ₂+r)')
        return np.power(r, profile.alpha) / (L * G ** profile.mu)
    return _table_eval(profile, r)


def _as_radii(r: ArrayLike):
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ArgumentError("Les rayons doivent être finis et positifs", field='r')
    return arr, arr.ndim == 0


def eval_m(profile: RadialProfile, r: ArrayLike) -> Union[float, np.ndarray]:
    """m(r), avec m(0) = 0 par convention; accepte un scalaire ou un tableau"""
    arr, scalar = _as_radii(r)
    flat = np.atleast_1d(arr)
    out = np.zeros_like(flat)
    pos = flat > 0
    if np.any(pos):
        out[pos] = _m_positive(profile, flat[pos])
    return float(out[0]) if scalar else out.reshape(arr.shape)


def _log_derivative(profile: RadialProfile, r: np.ndarray):
    """(m′/m, (m′/m)′) pour les familles en forme close"""
    a = profile.alpha
    b = a / r
    db = -a / r ** 2
    if profile.family in (ProfileFamily.POWER_LOG, ProfileFamily.POWER_LOGLOG):
        mu_log = profile.mu if profile.family == ProfileFamily.POWER_LOG else 1.0
        if mu_log:
            s = profile.lam + r
            L = np.log(s)
            b = b - mu_log / (s * L)
            db = db + mu_log * (L + 1.0) / (s ** 2 * L ** 2)
    if profile.family == ProfileFamily.POWER_LOGLOG and profile.mu:
        s2 = profile.lam2 + r
        L2 = np.log(s2)
        G = np.log(L2)
        dG = 1.0 / (s2 * L2)
        d2G = -(L2 + 1.0) / (s2 ** 2 * L2 ** 2)
        b = b - profile.mu * dG / G
        db = db - profile.mu * (d2G * G - dG ** 2) / G ** 2
    return b, db


def _table_fd(profile: RadialProfile, r: np.ndarray, order: int) -> np.ndarray:
    rs = profile.table_r
    h = MDEC_RELATIVE_STEP * r
    lo = np.maximum(r - h, rs[0])
    hi = np.minimum(r + h, rs[-1])
    mid = 0.5 * (lo + hi)
    if order == 1:
        return (eval_m(profile, hi) - eval_m(profile, lo)) / (hi - lo)
    step = 0.5 * (hi - lo)
    return (eval_m(profile, hi) - 2.0 * eval_m(profile, mid) + eval_m(profile, lo)) / step ** 2


def eval_dm(profile: RadialProfile, r: ArrayLike) -> Union[float, np.ndarray]:
    """m′(r): forme analytique (différences finies pour les tables)"""
    arr, scalar = _as_radii(r)
    flat = np.atleast_1d(arr)
    if np.any(flat <= 0):
        raise ArgumentError("m′ n'est évaluée qu'en r > 0", field='r')
    if profile.family == ProfileFamily.TABLE:
        out = _table_fd(profile, flat, 1)
    else:
        b, _ = _log_derivative(profile, flat)
        out = _m_positive(profile, flat) * b
    return float(out[0]) if scalar else out.reshape(arr.shape)


def eval_d2m(profile: RadialProfile, r: ArrayLike) -> Union[float, np.ndarray]:
    """m″(r) = m((m′/m)² + (m′/m)′)"""
    arr, scalar = _as_radii(r)
    flat = np.atleast_1d(arr)
    if np.any(flat <= 0):
        raise ArgumentError("m″ n'est évaluée qu'en r > 0", field='r')
    if profile.family == ProfileFamily.TABLE:
        out = _table_fd(profile, flat, 2)
    else:
        b, db = _log_derivative(profile, flat)
        out = _m_positive(profile, flat) * (b * b + db)
    return float(out[0]) if scalar else out.reshape(arr.shape)


# ============================================================================
# VÉRIFICATIONS STRUCTURELLES
# ============================================================================

def _grid(r_grid: ArrayLike, minimum: int = 3) -> np.ndarray:
    r = np.asarray(r_grid, dtype=float).ravel()
    if r.size < minimum:
        raise InsufficientDataError(required=minimum, actual=int(r.size), what="grille de rayons")
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ArgumentError("La grille doit être strictement croissante et positive", field='r_grid')
    return r


def _report(name: str, margins: np.ndarray, where: np.ndarray, tolerance: float, **details) -> CheckReport:
    i = int(np.argmin(margins))
    worst = float(margins[i])
    return CheckReport(name=name, passed=bool(worst >= -tolerance), worst_margin=worst,
                       worst_at=float(where[i]), details={'tolerance': tolerance, **details})


def _m_or_nan(profile: RadialProfile, r: np.ndarray) -> np.ndarray:
    """m(r), NaN là où le profil n'est pas défini (facteur logarithmique ≤ 0, hors table)"""
    try:
        return eval_m(profile, r)
    except OutOfRangeError:
        out = np.full_like(r, np.nan)
        for i, radius in enumerate(r):
            try:
                out[i] = eval_m(profile, float(radius))
            except OutOfRangeError:
                pass
        return out


def check_mdec(profile: RadialProfile, r_grid: ArrayLike, tolerance: float = MDEC_TOLERANCE,
               step: float = MDEC_RELATIVE_STEP) -> CheckReport:
    """
    Vérifie (α−σ)m(r)/r ≤ m′(r) ≤ α m(r)/r par différences centrées

    Les marges sont relatives à m(r)/r; worst_at est le rayon de la pire marge. Un rayon où le profil
    n'est pas défini reçoit une marge −∞.
    """
    r = _grid(r_grid)
    m = _m_or_nan(profile, r)
    dm = (_m_or_nan(profile, r * (1 + step)) - _m_or_nan(profile, r * (1 - step))) / (2 * step * r)
    scale = m / r
    lower = (dm - profile.exponent_gap * scale) / scale
    upper = (profile.alpha * scale - dm) / scale
    undefined = np.isnan(lower) | np.isnan(upper)
    lower[undefined] = upper[undefined] = -np.inf
    margins = np.minimum(lower, upper)
    report = _report('mdec', margins, r, tolerance, alpha=profile.alpha, sigma=profile.sigma,
                     undefined=int(undefined.sum()))
    report.details['worst_side'] = 'lower' if lower[int(np.argmin(margins))] <= upper[int(np.argmin(margins))] \
        else 'upper'
    if not report.passed:
        logger.info(f"Inégalité différentielle violée en r={report.worst_at:.6g} "
                    f"(marge {report.worst_margin:.3e})")
    return report


def check_profile_invariants(profile: RadialProfile, r_grid: ArrayLike,
                             tolerance: float = MONOTONE_TOLERANCE) -> CheckReport:
    """m(0)=0, m croissante sur la grille, croissance de type puissance au plus grand rayon"""
    r = _grid(r_grid)
    m = eval_m(profile, r)
    increments = np.diff(m) / np.maximum(np.abs(m[1:]), 1e-300)
    tail_exponent = float(r[-1] * eval_dm(profile, r[-1]) / m[-1]) if m[-1] > 0 else 0.0
    passed = (eval_m(profile, 0.0) == 0.0 and bool(np.all(increments >= -tolerance))
              and tail_exponent > 0.0)
    worst = float(increments.min()) if increments.size else 0.0
    return CheckReport(name='profile_invariants', passed=passed, worst_margin=worst,
                       worst_at=float(r[int(np.argmin(increments)) + 1]),
                       details={'tail_exponent': tail_exponent})


def monotone_maps_check(profile: RadialProfile, beta1: float, beta2: float, r_grid: ArrayLike,
                        tolerance: float = MONOTONE_TOLERANCE) -> CheckReport:
    """r ↦ r^{β₁}m(1/r) croissante et r ↦ r^{β₂}m(1/r) décroissante sur la grille"""
    if beta1 < profile.alpha:
        raise ArgumentError(f"β₁ doit être ≥ α (β₁={beta1}, α={profile.alpha})", field='beta1')
    if beta2 > profile.exponent_gap:
        raise ArgumentError(f"β₂ doit être ≤ α−σ (β₂={beta2}, α−σ={profile.exponent_gap})", field='beta2')
    r = _grid(r_grid, minimum=2)
    m_inv = eval_m(profile, 1.0 / r)
    g1 = r ** beta1 * m_inv
    g2 = r ** beta2 * m_inv
    rel1 = np.diff(g1) / np.abs(g1[1:])
    rel2 = -np.diff(g2) / np.abs(g2[1:])
    margins = np.minimum(rel1, rel2)
    report = _report('monotone_maps', margins, r[1:], tolerance, beta1=beta1, beta2=beta2)
    report.details['increasing_ok'] = bool(np.all(rel1 >= -tolerance))
    report.details['decreasing_ok'] = bool(np.all(rel2 >= -tolerance))
    return report


def check_power_envelope(profile: RadialProfile, r_grid: ArrayLike, reference: Optional[float] = None,
                         tolerance: float = MDEC_TOLERANCE) -> CheckReport:
    """
    Encadrement c₀^{α−σ}m(1/c₀)r^{−(α−σ)} ≤ m(1/r) ≤ c₀^α m(1/c₀)r^{−α} pour r ≤ c₀

    Sans coupure (cas III) la référence vaut 1 par défaut.
    """
    c = reference if reference is not None else (profile.c0 if profile.c0 is not None else 1.0)
    r = _grid(r_grid, minimum=1)
    r = r[r <= c]
    if r.size == 0:
        raise InsufficientDataError(required=1, actual=0, what=f"rayons ≤ {c}")
    m_ref = eval_m(profile, 1.0 / c)
    m_inv = eval_m(profile, 1.0 / r)
    low = c ** profile.exponent_gap * m_ref * r ** (-profile.exponent_gap)
    high = c ** profile.alpha * m_ref * r ** (-profile.alpha)
    margins = np.minimum((m_inv - low) / m_inv, (high - m_inv) / m_inv)
    return _report('power_envelope', margins, r, tolerance, reference=c)


def check_positivity_condition(profile: RadialProfile, r_grid: ArrayLike, d: int = 1,
                               tolerance: float = MDEC_TOLERANCE) -> CheckReport:
    """Contrôle ponctuel de (−1)^{k−1}m^{(k)} ≥ 0 pour k = 1..d"""
    if d not in (1, 2):
        raise ArgumentError(f"Dimension non supportée: {d}", field='d')
    r = _grid(r_grid, minimum=1)
    m = eval_m(profile, r)
    scale = np.maximum(m / r, 1e-300)
    margins = eval_dm(profile, r) / scale
    if d == 2:
        margins = np.minimum(margins, -eval_d2m(profile, r) * r / scale)
    return _report('positivity_condition', margins, r, tolerance, d=d)


# ============================================================================
# NOYAUX
# ============================================================================

def sphere_measure(d: int) -> float:
    """|S^{d−1}|: 2 en dimension 1, 2π en dimension 2"""
    return 2.0 * math.pi ** (d / 2.0) / special.gamma(d / 2.0)


def kernel_value(spec: KernelSpec, r: ArrayLike) -> Union[float, np.ndarray]:
    """
    Représentant radial K(r) du noyau

    Cas III: K = m(1/r)/r^d partout. Cas I et II: même forme pour r ≤ c₀, puis une queue
    min(K(c₀)(c₀/r)^{d+α̃}, c₁ r^{−d−α̃}), positive (cas I) ou modulée par cos(π(r−c₀)/c₀) (cas II).
    """
    arr, scalar = _as_radii(r)
    flat = np.atleast_1d(arr)
    if np.any(flat <= 0):
        raise ArgumentError("K n'est évalué qu'en r > 0", field='r')
    d = spec.d
    profile = spec.profile
    out = np.empty_like(flat)
    c0 = profile.c0
    inner = flat <= c0 if c0 is not None else np.ones_like(flat, dtype=bool)
    out[inner] = eval_m(profile, 1.0 / flat[inner]) / flat[inner] ** d
    if c0 is not None and np.any(~inner):
        rt = flat[~inner]
        k_c0 = eval_m(profile, 1.0 / c0) / c0 ** d
        tail = np.minimum(k_c0 * (c0 / rt) ** (d + spec.tilde_alpha), spec.c1 * rt ** (-d - spec.tilde_alpha))
        if spec.case == KernelCase.II:
            tail = tail * np.cos(math.pi * (rt - c0) / c0)
        out[~inner] = tail
    return float(out[0]) if scalar else out.reshape(arr.shape)


def one_minus_cos(x: ArrayLike) -> Union[float, np.ndarray]:
    """1 − cos(x) sans annulation: développement x²/2 − x⁴/24 pour |x| < 10⁻³"""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) < 1e-3, x * x / 2.0 - x ** 4 / 24.0, 2.0 * np.sin(x / 2.0) ** 2)
    return float(out) if out.ndim == 0 else out


def one_minus_j0(x: ArrayLike) -> Union[float, np.ndarray]:
    """1 − J₀(x) sans annulation: série x²/4 − x⁴/64 + x⁶/2304 pour |x| < 10⁻²"""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    out = np.where(np.abs(x) < 1e-2, x2 / 4.0 - x2 ** 2 / 64.0 + x2 ** 3 / 2304.0, 1.0 - special.j0(x))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadratureResult:
    """Valeur d'une quadrature et estimation de son erreur absolue"""
    value: float
    error: float


def checked_quad(func, a: float, b: float, quad: QuadratureParams, what: str, **kwargs):
    """quad adaptative; ConvergenceError si scipy avertit et que l'erreur dépasse 10⁴ fois la tolérance"""
    out = integrate.quad(func, a, b, epsabs=quad.epsabs, epsrel=quad.epsrel, limit=quad.limit,
                         full_output=1, **kwargs)
    value, error = float(out[0]), float(out[1])
    if len(out) > 3 and error > 1e4 * max(quad.epsabs, quad.epsrel * abs(value)):
        raise ConvergenceError(f"Quadrature non convergée ({what}): {out[3]}", partial_value=value,
                               error_estimate=error, details={'interval': [a, b]})
    return value, error


def _radial_weight(spec: KernelSpec):
    """w(r) = |S^{d−1}| K(r) r^{d−1}, la densité radiale du noyau"""
    surface = sphere_measure(spec.d)
    d = spec.d
    return lambda r: surface * kernel_value(spec, r) * r ** (d - 1)


def _oscillatory_tail_d2(w, s: float, start: float, quad: QuadratureParams) -> QuadratureResult:
    """
    ∫_{start}^∞ J₀(s r) w(r) dr, intégré entre zéros consécutifs de J₀ puis accéléré par Shanks

    Les sommes partielles alternent; la transformation (epsilon de Wynn) est réévaluée tous les
    tail_batch termes sur la même fenêtre, et la queue est acceptée quand deux estimations successives
    diffèrent de moins de max(epsabs, tail_tol·|estimation|).
    """
    skip = int(s * start / math.pi) + 1
    zeros = special.jn_zeros(0, skip + quad.max_tail_terms) / s
    edges = np.concatenate(([start], zeros[zeros > start][:quad.max_tail_terms]))
    integrand = lambda r: special.j0(s * r) * w(r)
    partial: List[float] = []
    total, error = 0.0, 0.0
    previous = None
    for a, b in zip(edges[:-1], edges[1:]):
        piece, err = checked_quad(integrand, float(a), float(b), quad, 'queue J0')
        total += piece
        error += err
        partial.append(total)
        if len(partial) < 2 * quad.tail_batch or len(partial) % quad.tail_batch:
            continue
        window = [mpmath.mpf(p) for p in partial[-TAIL_WINDOW:]]
        estimate = float(mpmath.shanks(window)[-1][-1])
        if previous is not None and abs(estimate - previous) <= max(quad.epsabs, quad.tail_tol * abs(estimate)):
            return QuadratureResult(estimate, error + abs(estimate - previous))
        previous = estimate
    raise ConvergenceError("Queue oscillante non convergée (d=2)", partial_value=total, error_estimate=error,
                           details={'terms': len(partial), 'last_radius': float(edges[-1])})


def symbol_from_kernel(spec: KernelSpec, zeta: Union[float, Sequence[float]],
                       quad: QuadratureParams = QuadratureParams()) -> QuadratureResult:
    """
    A(ζ) = ∫ (1 − cos(ζ·y)) K(y) dy par quadrature adaptative

    Le domaine radial est coupé en |y| = min(1, 1/|ζ|) (et en c₀ s'il existe); la partie proche
    de la singularité utilise un 1 − cos stable, la partie lointaine s'écrit ∫w − ∫cos(|ζ|r)w
    (poids de Fourier de QUADPACK en d=1, tranches de Bessel J₀ en d=2).
    """
    s = float(np.linalg.norm(np.atleast_1d(np.asarray(zeta, dtype=float))))
    if s == 0.0:
        return QuadratureResult(0.0, 0.0)
    w = _radial_weight(spec)
    r0 = min(1.0, 1.0 / s)
    c0 = spec.profile.c0
    breaks = sorted({r0} | ({c0} if c0 is not None and c0 > r0 else set()))

    if spec.d == 1:
        near_kernel = lambda r: one_minus_cos(s * r) * w(r)
    else:
        near_kernel = lambda r: one_minus_j0(s * r) * w(r)
    value, error = checked_quad(near_kernel, 0.0, r0, quad, 'partie singulière')

    tail_start = breaks[-1]
    if len(breaks) > 1:
        v, e = checked_quad(near_kernel, r0, tail_start, quad, 'partie intermédiaire')
        value, error = value + v, error + e

    mass, e_mass = checked_quad(w, tail_start, np.inf, quad, 'masse de la queue')
    if spec.d == 1:
        osc, e_osc = checked_quad(w, tail_start, np.inf, quad, 'queue oscillante', weight='cos', wvar=s)
    else:
        res = _oscillatory_tail_d2(w, s, tail_start, quad)
        osc, e_osc = res.value, res.error
    value += mass - osc
    error += e_mass + e_osc
    logger.debug(f"A(|ζ|={s:.6g}) = {value:.12g} ± {error:.2e}")
    return QuadratureResult(value, error)


# ============================================================================
# OPÉRATEURS DE LÉVY
# ============================================================================

def _reflect(table: np.ndarray) -> np.ndarray:
    """Tableau des valeurs en −k (indices FFT)"""
    axes = tuple(range(table.ndim))
    return np.roll(np.flip(table, axis=axes), 1, axis=axes)


@dataclass(frozen=True, eq=False)
class LevyOperator:
    """Opérateur de diffusion donné par sa table de symbole A(k) sur la grille spectrale"""
    grid: PeriodicGrid
    symbol: np.ndarray
    provenance: Provenance = Provenance.MULTIPLIER
    label: str = ''

    def __post_init__(self):
        table = np.array(self.symbol, dtype=float)
        if table.shape != self.grid.shape:
            raise ValidationError(f"Table de symbole {table.shape} incompatible avec la grille", field='symbol')
        table.setflags(write=False)
        object.__setattr__(self, 'symbol', table)
        object.__setattr__(self, 'provenance', Provenance(self.provenance))

    @property
    def d(self) -> int:
        return self.grid.d

    @classmethod
    def zero(cls, grid: PeriodicGrid) -> 'LevyOperator':
        return cls(grid, np.zeros(grid.shape), Provenance.MULTIPLIER, 'zero')

    def apply(self, theta: Field) -> Field:
        """ℒθ par multiplication diagonale"""
        return Field(self.grid, inverse_transform(self.grid, self.symbol * theta.spectral))

    def quadratic_form(self, theta: Field) -> float:
        """⟨ℒθ, θ⟩ = Σ_k A(k)|θ̂(k)|²"""
        return float(np.sum(self.symbol * np.abs(theta.spectral) ** 2))

    def check_invariants(self) -> CheckReport:
        """A(0) = 0, A(k) = A(−k), A(k) ≥ 0 sur toute la table"""
        zero_index = (0,) * self.d
        a0 = float(self.symbol[zero_index])
        asym = float(np.abs(self.symbol - _reflect(self.symbol)).max())
        minimum = float(self.symbol.min())
        passed = a0 == 0.0 and asym <= 1e-12 * max(1.0, float(self.symbol.max())) and minimum >= 0.0
        return CheckReport(name='levy_invariants', passed=passed, worst_margin=min(minimum, -asym),
                           details={'A0': a0, 'asymmetry': asym, 'min': minimum})

    def to_frame(self) -> pd.DataFrame:
        data = {f"k_{i + 1}": k.ravel().astype(int) for i, k in enumerate(self.grid.kvec)}
        data['A'] = self.symbol.ravel()
        return pd.DataFrame(data)

    def export_csv(self, path) -> None:
        write_csv(self.to_frame(), path)


def symbol_from_multiplier(profile: RadialProfile, grid: PeriodicGrid) -> LevyOperator:
    """A(k) = m(|k|) sur chaque mode entier"""
    return LevyOperator(grid, eval_m(profile, grid.kmag), Provenance.MULTIPLIER, profile.family.value)


def levy_operator_from_kernel(spec: KernelSpec, grid: PeriodicGrid,
                              quad: QuadratureParams = QuadratureParams(),
                              cache: Optional[TableCache] = None) -> LevyOperator:
    """
    Table A(k) par quadrature du noyau, une quadrature par |k| distinct (mise en cache)

    Pour un profil puissance du cas III, l'homogénéité réduit le calcul à |ζ| = 1.
    """
    if spec.d != grid.d:
        raise ValidationError(f"Dimension du noyau ({spec.d}) ≠ dimension de la grille ({grid.d})", field='d')
    cache = cache or get_table_cache()
    profile = spec.profile
    tag = f"kernel:{TableCache.make_key(repr(spec))}"

    def value(s: float) -> float:
        key = TableCache.make_key('symbol_from_kernel', repr(spec), repr(quad), s)
        return cache.get_or_compute(key, lambda: symbol_from_kernel(spec, s, quad).value, tags={tag})

    if profile.family == ProfileFamily.POWER and spec.case == KernelCase.III:
        table = value(1.0) * np.power(grid.kmag, profile.alpha)
    else:
        radii, inverse = np.unique(grid.kmag, return_inverse=True)
        values = np.array([value(float(s)) if s > 0 else 0.0 for s in radii])
        table = values[inverse].reshape(grid.shape)
    logger.info(f"Symbole par quadrature construit (d={grid.d}, N={grid.N}, famille={profile.family.value})")
    return LevyOperator(grid, table, Provenance.KERNEL_QUADRATURE, f"kernel:{profile.family.value}")


# ============================================================================
# INVERSION DU NOYAU (d = 1)
# ============================================================================

def raised_cosine_window(u: ArrayLike) -> Union[float, np.ndarray]:
    """Fenêtre égale à 1 sur [0, 1/2], cosinus surélevé sur [1/2, 1], nulle au-delà"""
    u = np.asarray(u, dtype=float)
    out = np.where(u <= 0.5, 1.0, np.where(u >= 1.0, 0.0, 0.5 * (1.0 + np.cos(math.pi * (2.0 * u - 1.0)))))
    return float(out) if out.ndim == 0 else out


@dataclass
class KernelInversion:
    """K(r) échantillonné, signes et ajustements de décroissance"""
    radii: np.ndarray
    values: np.ndarray
    signs: List[int]
    nonnegative: bool
    local_exponents: np.ndarray
    c5: float
    c_upper: float
    resolution: int
    details: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        exponents = np.append(self.local_exponents, np.nan)
        return pd.DataFrame({'r': self.radii, 'K': self.values, 'sign': self.signs, 'local_exponent': exponents})

    def to_dict(self) -> Dict[str, Any]:
        return {
            'nonnegative': self.nonnegative,
            'c5': self.c5,
            'c_upper': self.c_upper,
            'resolution': self.resolution,
            'min_relative': float(self.values.min() / np.abs(self.values).max()) if self.values.size else 0.0,
            **self.details
        }


def kernel_from_multiplier(profile: RadialProfile, radii: ArrayLike, resolution: int,
                           quad: QuadratureParams = QuadratureParams(),
                           sign_tolerance: float = 1e-8) -> KernelInversion:
    """
    K(r) = (1/(πr)) ∫₀^Z W(ζ/Z) m′(ζ) sin(ζr) dζ, inversion fenêtrée du symbole m(|ζ|) en dimension 1

    Z = resolution est la fréquence de coupure; un rayon r doit vérifier r·Z ≥ 8π.
    """
    r = _grid(radii, minimum=1)
    Z = float(resolution)
    too_small = r[r * Z < 8.0 * math.pi]
    if too_small.size:
        raise ResolutionError(f"Rayon {float(too_small[0]):.3g} sous la résolution (r·Z < 8π, Z={resolution})",
                              details={'radius': float(too_small[0]), 'resolution': resolution})

    def windowed(zeta: float) -> float:
        if zeta <= 0.0:
            return 0.0
        return float(raised_cosine_window(zeta / Z)) * eval_dm(profile, zeta)

    values = np.empty_like(r)
    for i, radius in enumerate(r):
        split = min(0.5 * Z, math.pi / radius)
        head, _ = checked_quad(lambda z: windowed(z) * math.sin(z * radius), 0.0, split, quad, 'inversion (tête)')
        body, _ = checked_quad(windowed, split, Z, QuadratureParams(quad.epsabs, quad.epsrel, max(quad.limit, 2000)),
                        'inversion (oscillante)', weight='sin', wvar=radius)
        values[i] = (head + body) / (math.pi * radius)

    peak = float(np.abs(values).max()) if values.size else 0.0
    signs = [int(np.sign(v)) if abs(v) > sign_tolerance * peak else 0 for v in values]
    nonnegative = bool(np.all(values >= -sign_tolerance * peak))
    local = np.diff(np.log(np.abs(values))) / np.diff(np.log(r)) if r.size > 1 else np.array([])

    scale = eval_m(profile, 1.0 / r) / r
    ratio = values / scale
    window = r <= profile.c0 if profile.c0 is not None else np.ones_like(r, dtype=bool)
    c5 = float(ratio[window].min()) if np.any(window) else float('nan')
    c_upper = float(ratio[window].max()) if np.any(window) else float('nan')
    if not nonnegative:
        logger.warning(f"Noyau négatif détecté: min K = {values.min():.3e} (max |K| = {peak:.3e})")
    return KernelInversion(r, values, signs, nonnegative, local, c5, c_upper, resolution)


# ============================================================================
# BORNES INFÉRIEURES DU SYMBOLE
# ============================================================================

@dataclass(frozen=True)
class SymbolBoundFit:
    """A(k) ≥ c_low |k|^{α−σ} − c_off sur tous les modes de la grille"""
    c_low: float
    c_off: float
    homogeneous: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'C_low': self.c_low, 'C_off': self.c_off, 'homogeneous': self.homogeneous}


def symbol_lower_bound_fit(op: LevyOperator, alpha: float, sigma: float = 0.0) -> SymbolBoundFit:
    """
    Ajuste c_low le plus grand possible puis c_off le plus petit

    Si A(k)/|k|^{α−σ} reste strictement positif, la forme homogène (c_off = 0) est retenue; sinon
    c_low est lu sur l'octave supérieure et c_off compense les basses fréquences.
    """
    gap = alpha - sigma
    if gap <= 0:
        raise ArgumentError(f"α−σ doit être > 0 (α={alpha}, σ={sigma})", field='sigma')
    kmag = op.grid.kmag
    nonzero = kmag > 0
    ratios = op.symbol[nonzero] / kmag[nonzero] ** gap
    c_low = float(ratios.min())
    if c_low > 0:
        return SymbolBoundFit(c_low, 0.0, True)
    top = nonzero & (kmag > 0.5 * kmag.max())
    c_low = float((op.symbol[top] / kmag[top] ** gap).min())
    c_off = float(max(0.0, np.max(c_low * kmag[nonzero] ** gap - op.symbol[nonzero])))
    return SymbolBoundFit(c_low, c_off, False)
