"""
Modèles de données partagés par les modules du laboratoire
"""
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple
import math

from errors import ValidationError, ValidationRangeError


class ProfileFamily(str, Enum):
    """Familles de profils radiaux m"""
    POWER = 'power'
    POWER_LOG = 'power_log'
    POWER_LOGLOG = 'power_loglog'
    TABLE = 'table'


class KernelCase(str, Enum):
    """Cas de noyau: I (positif), II (queue signée), III (sans coupure)"""
    I = 'I'
    II = 'II'
    III = 'III'


class Provenance(str, Enum):
    """Origine d'une table de symbole"""
    MULTIPLIER = 'multiplier'
    KERNEL_QUADRATURE = 'kernel_quadrature'


class MocFamily(str, Enum):
    """Familles de modules de continuité"""
    STATIONARY = 'stationary'
    EVENTUAL = 'eventual'


@dataclass(frozen=True)
class RadialProfile:
    """Profil radial m(r) avec ses exposants (α, σ) et sa coupure c₀"""
    family: ProfileFamily
    alpha: float
    sigma: float = 0.0
    c0: Optional[float] = None  # None: cas III, aucune coupure
    mu: float = 0.0
    lam: float = math.e
    lam2: float = math.e
    table_r: Optional[Tuple[float, ...]] = None
    table_m: Optional[Tuple[float, ...]] = None
    interpolation: str = 'loglog'

    def __post_init__(self):
        object.__setattr__(self, 'family', ProfileFamily(self.family))
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationRangeError('alpha', min_value='0 (exclu)', max_value=1, actual_value=self.alpha)
        if not 0.0 <= self.sigma < self.alpha:
            raise ValidationRangeError('sigma', min_value=0, max_value='alpha (exclu)', actual_value=self.sigma)
        if self.c0 is not None and self.c0 <= 0:
            raise ValidationRangeError('c0', min_value='0 (exclu)', actual_value=self.c0)
        if self.mu < 0 or self.lam < 0 or self.lam2 < 0:
            raise ValidationError("mu, lambda et lambda2 doivent être positifs ou nuls", field='mu')
        if self.family == ProfileFamily.TABLE:
            if not self.table_r or not self.table_m or len(self.table_r) != len(self.table_m):
                raise ValidationError("La famille 'table' exige des échantillons (r, m) de même longueur",
                                      field='table')
            if len(self.table_r) < 2 or any(b <= a for a, b in zip(self.table_r, self.table_r[1:])):
                raise ValidationError("Les rayons de la table doivent être strictement croissants", field='table')
            if self.interpolation not in ('linear', 'loglog'):
                raise ValidationError(f"Règle d'interpolation inconnue: {self.interpolation}",
                                      field='interpolation')

    @property
    def exponent_gap(self) -> float:
        """α − σ, l'exposant effectif de la borne inférieure"""
        return self.alpha - self.sigma

    @property
    def validity_start(self) -> float:
        """Plus petit r où l'inégalité différentielle est exigée (1/c₀)"""
        return 0.0 if self.c0 is None else 1.0 / self.c0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['family'] = self.family.value
        return data


@dataclass(frozen=True)
class KernelSpec:
    """Spécification du noyau K comparable à m(1/|y|)/|y|^d"""
    profile: RadialProfile
    c1: float = 1.0
    tilde_alpha: float = 1.0
    case: KernelCase = KernelCase.III
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'case', KernelCase(self.case))
        if self.c1 < 1.0:
            raise ValidationRangeError('c1', min_value=1, actual_value=self.c1)
        if self.tilde_alpha <= 0:
            raise ValidationRangeError('tilde_alpha', min_value='0 (exclu)', actual_value=self.tilde_alpha)
        if self.d not in (1, 2):
            raise ValidationRangeError('d', min_value=1, max_value=2, actual_value=self.d)
        if self.case == KernelCase.III and self.profile.c0 is not None:
            raise ValidationError("Le cas III n'admet pas de coupure c₀", field='case')
        if self.case != KernelCase.III and self.profile.c0 is None:
            raise ValidationError("Les cas I et II exigent une coupure c₀", field='case')


@dataclass(frozen=True)
class QuadratureParams:
    """Paramètres des quadratures adaptatives et de la queue oscillante accélérée (d = 2)"""
    epsabs: float = 1e-13
    epsrel: float = 1e-10
    limit: int = 400
    tail_tol: float = 1e-9
    max_tail_terms: int = 400
    tail_batch: int = 8

    def refined(self) -> 'QuadratureParams':
        """Budget doublé, utilisé pour les tests de convergence"""
        return QuadratureParams(self.epsabs / 10, self.epsrel / 10, self.limit * 2,
                                self.tail_tol / 10, self.max_tail_terms * 2, self.tail_batch)


@dataclass
class CheckReport:
    """Rapport d'une vérification ponctuelle sur une grille"""
    name: str
    passed: bool
    worst_margin: float = 0.0
    worst_at: Any = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'pass': bool(self.passed),
            'worst_margin': float(self.worst_margin),
            'worst_at': self.worst_at,
            'details': self.details
        }


@dataclass
class DiagnosticsRecord:
    """Diagnostics enregistrés le long d'une trajectoire"""
    t: float
    linf: float
    l2: float
    grad_max: float
    holder: float
    hs: float
    energy_dissipated: float
    viscous_dissipated: float = 0.0
    top_octave_fraction: float = 0.0
    mean: float = 0.0

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.linf, self.l2, self.grad_max, self.holder, self.hs))

    def to_row(self) -> Dict[str, float]:
        """Colonnes du CSV de diagnostics"""
        return {
            't': self.t,
            'linf': self.linf,
            'l2': self.l2,
            'grad_max': self.grad_max,
            'holder_beta': self.holder,
            'hs': self.hs,
            'energy_dissipated': self.energy_dissipated
        }


@dataclass(frozen=True)
class Scenario:
    """Scénario de saturation: θ(x) − θ(x+ξe) ≈ ω(ξ)"""
    x: Tuple[int, ...]
    e: Tuple[float, ...]
    xi: float
    t: float = 0.0
    ratio: float = 0.0


@dataclass(frozen=True)
class CriterionConstants:
    """Constantes des bornes de dissipation et de dérive"""
    C1: float
    C2: float
    C1p: float = 0.0
    C2p: float = 0.0
    C0: float = 1.0 / math.e
    c_tilde: float = math.log(2.0)
    case: KernelCase = KernelCase.III

    def __post_init__(self):
        if self.C1 <= 0 or self.C2 <= 0:
            raise ValidationError("C1 et C2 doivent être strictement positifs", field='constants')
        if self.C1p < 0 or self.C2p < 0:
            raise ValidationError("C1' et C2' doivent être positifs ou nuls", field='constants')

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['case'] = KernelCase(self.case).value
        return data


@dataclass(frozen=True)
class MocParams:
    """Paramètres (κ, γ, δ, β, ρ, A₀, c) d'un module de continuité"""
    kappa: float
    gamma: float
    delta: float
    beta: float
    profile: RadialProfile
    rho: float = 0.0
    A0: Optional[float] = None
    c_cut: Optional[float] = None  # None: pas de plateau

    def __post_init__(self):
        for name in ('kappa', 'gamma', 'delta'):
            if getattr(self, name) <= 0:
                raise ValidationRangeError(name, min_value='0 (exclu)', actual_value=getattr(self, name))
        low = 1.0 - self.profile.exponent_gap
        if not low < self.beta < 1.0:
            raise ValidationRangeError('beta', min_value=f"{low} (exclu)", max_value='1 (exclu)',
                                       actual_value=self.beta)
        if self.rho < 0:
            raise ValidationRangeError('rho', min_value=0, actual_value=self.rho)
        if self.c_cut is not None and self.c_cut <= self.delta:
            raise ValidationError("La coupure du plateau doit dépasser δ", field='c_cut')

    def invariant_violations(self, family: MocFamily = MocFamily.STATIONARY) -> List[str]:
        """Liste des invariants de signe non respectés"""
        issues = []
        if not self.gamma < self.kappa * self.beta:
            issues.append("gamma < kappa*beta")
        if MocFamily(family) == MocFamily.EVENTUAL and not self.gamma < (1.0 - self.beta) * self.kappa:
            issues.append("gamma < (1-beta)*kappa")
        return issues

    def scaled(self, factor: float) -> 'MocParams':
        """Copie avec κ et γ multipliés par le même facteur (ω est alors multiplié)"""
        return MocParams(self.kappa * factor, self.gamma * factor, self.delta, self.beta, self.profile,
                         self.rho, self.A0, self.c_cut)

    def with_(self, **changes) -> 'MocParams':
        data = {k: getattr(self, k) for k in ('kappa', 'gamma', 'delta', 'beta', 'profile', 'rho', 'A0', 'c_cut')}
        data.update(changes)
        return MocParams(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kappa': self.kappa, 'gamma': self.gamma, 'delta': self.delta, 'beta': self.beta,
            'rho': self.rho, 'A0': self.A0, 'c_cut': self.c_cut, 'profile': self.profile.to_dict()
        }
