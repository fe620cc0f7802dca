"""
Validation des configurations d'exécution
Utilise Pydantic pour une validation stricte et des messages d'erreur clairs; chaque section
sait construire l'objet du domaine correspondant (build)
"""
import math
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import EXPERIMENTS, PROFILE_FAMILIES, VELOCITY_KINDS
from models import KernelCase, KernelSpec, MocFamily, MocParams, QuadratureParams, RadialProfile
from solver import SolverConfig
from spectral_core import PeriodicGrid
from velocity_models import VelocityModel


class Section(BaseModel):
    """Base commune: clés inconnues refusées"""
    model_config = ConfigDict(extra='forbid', validate_assignment=True)


# ============================================================================
# PROFIL ET NOYAU
# ============================================================================

class ProfileSettings(Section):
    """Profil radial m"""
    family: str = Field(default='power', description="Famille de profil")
    alpha: float = Field(default=1.0, gt=0, le=1)
    sigma: float = Field(default=0.0, ge=0)
    c0: Optional[float] = Field(default=None, gt=0, description="Coupure (cas I/II)")
    mu: float = Field(default=0.0, ge=0)
    lam: float = Field(default=math.e, ge=0)
    lam2: float = Field(default=math.e, ge=0)
    table_r: Optional[List[float]] = None
    table_m: Optional[List[float]] = None
    interpolation: Literal['linear', 'loglog'] = 'loglog'

    @field_validator('family')
    @classmethod
    def validate_family(cls, v):
        if v not in PROFILE_FAMILIES:
            raise ValueError(f"Famille de profil inconnue: '{v}'. Familles autorisées: {', '.join(PROFILE_FAMILIES)}")
        return v

    @model_validator(mode='after')
    def check_exponents(self):
        if self.sigma >= self.alpha:
            raise ValueError(f"sigma doit être < alpha (alpha={self.alpha}, sigma={self.sigma})")
        if self.family == 'table':
            if not self.table_r or not self.table_m:
                raise ValueError("La famille 'table' exige table_r et table_m")
            if len(self.table_r) != len(self.table_m):
                raise ValueError("table_r et table_m doivent avoir la même longueur")
        return self

    def build(self) -> RadialProfile:
        return RadialProfile(
            family=self.family, alpha=self.alpha, sigma=self.sigma, c0=self.c0, mu=self.mu, lam=self.lam,
            lam2=self.lam2,
            table_r=tuple(self.table_r) if self.table_r else None,
            table_m=tuple(self.table_m) if self.table_m else None,
            interpolation=self.interpolation
        )


class KernelSettings(Section):
    """Noyau du terme de dissipation et laboratoire du noyau"""
    case: Literal['I', 'II', 'III'] = 'III'
    c1: float = Field(default=1.0, ge=1)
    tilde_alpha: float = Field(default=1.0, gt=0)
    symbol: Literal['multiplier', 'kernel_quadrature'] = 'multiplier'
    radii: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    resolution: int = Field(default=512, ge=8)
    epsrel: float = Field(default=1e-10, gt=0, lt=1)
    epsabs: float = Field(default=1e-13, gt=0)

    @field_validator('radii')
    @classmethod
    def validate_radii(cls, v):
        if not v or any(r <= 0 for r in v):
            raise ValueError("Les rayons doivent être strictement positifs")
        return sorted(v)

    def build(self, profile: RadialProfile, d: int) -> KernelSpec:
        return KernelSpec(profile, c1=self.c1, tilde_alpha=self.tilde_alpha, case=KernelCase(self.case), d=d)

    def quadrature(self) -> QuadratureParams:
        return QuadratureParams(epsabs=self.epsabs, epsrel=self.epsrel)


# ============================================================================
# MODÈLE, GRILLE ET SOLVEUR
# ============================================================================

class ModelSettings(Section):
    """Modèle de vitesse"""
    kind: str = 'burgers'
    a: List[float] = Field(default_factory=list)
    psi: Optional[List[List[float]]] = None

    @field_validator('kind')
    @classmethod
    def validate_kind(cls, v):
        if v not in VELOCITY_KINDS:
            raise ValueError(f"Modèle inconnu: '{v}'. Modèles autorisés: {', '.join(VELOCITY_KINDS)}")
        return v

    def build(self) -> VelocityModel:
        psi = tuple(tuple(row) for row in self.psi) if self.psi else None
        return VelocityModel(self.kind, tuple(self.a), psi)


class GridSettings(Section):
    """Grille et donnée initiale"""
    d: int = Field(default=1, ge=1, le=2)
    N: int = Field(default=256, ge=8)
    initial: Literal['sin', 'random', 'snapshot'] = 'sin'
    amplitude: float = Field(default=1.0, gt=0)
    kmax: int = Field(default=8, ge=1)
    decay: float = Field(default=1.0, ge=0)
    snapshot: Optional[str] = None

    @field_validator('N')
    @classmethod
    def validate_power_of_two(cls, v):
        if v & (v - 1):
            raise ValueError(f"N doit être une puissance de deux (reçu {v})")
        return v

    @model_validator(mode='after')
    def check_initial(self):
        if self.initial == 'snapshot' and not self.snapshot:
            raise ValueError("initial='snapshot' exige le chemin snapshot")
        if self.initial == 'random' and self.kmax > self.N // 3:
            raise ValueError(f"kmax doit rester ≤ N/3 (kmax={self.kmax}, N={self.N})")
        return self

    def build(self) -> PeriodicGrid:
        return PeriodicGrid(self.d, self.N)


class SolverSettings(Section):
    """Intégration en temps"""
    dt: float = Field(default=1e-3, gt=0)
    t_end: float = Field(default=1.0, ge=0)
    epsilon: float = Field(default=0.0, ge=0)
    cfl_safety: float = Field(default=0.5, gt=0, le=1)
    record_every: int = Field(default=10, ge=1)
    blowup_grad: float = Field(default=1e6, gt=0)
    resolution_loss: float = Field(default=1e-2, gt=0)
    holder_beta: float = Field(default=0.5, gt=0, lt=1)
    snapshot_every: Optional[int] = Field(default=None, ge=1)
    max_steps: Optional[int] = Field(default=None, ge=1)
    tol_mp: float = Field(default=1e-8, gt=0)

    def build(self) -> SolverConfig:
        return SolverConfig(dt=self.dt, t_end=self.t_end, epsilon=self.epsilon, cfl_safety=self.cfl_safety,
                            record_every=self.record_every, blowup_grad=self.blowup_grad,
                            resolution_loss=self.resolution_loss, holder_beta=self.holder_beta,
                            snapshot_every=self.snapshot_every, max_steps=self.max_steps)


# ============================================================================
# MODULES DE CONTINUITÉ ET CRITÈRE
# ============================================================================

class MocSettings(Section):
    """Module de continuité; sans κ/γ explicites, les coefficients sont sélectionnés"""
    family: Literal['stationary', 'eventual'] = 'stationary'
    beta: float = Field(default=0.5, gt=0, lt=1)
    kappa: Optional[float] = Field(default=None, gt=0)
    gamma: Optional[float] = Field(default=None, gt=0)
    rho: Optional[float] = Field(default=None, ge=0)
    delta: Optional[float] = Field(default=None, gt=0)
    A0: Optional[float] = Field(default=None, gt=0)
    c_cut: Optional[float] = Field(default=None, gt=0)
    safety: float = Field(default=0.5, gt=0, lt=1)
    fit: bool = True
    stride: int = Field(default=1, ge=1)
    xi_points: int = Field(default=1000, ge=3)

    @model_validator(mode='after')
    def check_coefficients(self):
        if (self.kappa is None) != (self.gamma is None):
            raise ValueError("kappa et gamma se donnent ensemble (ou aucun des deux)")
        if not self.fit and self.delta is None:
            raise ValueError("Sans ajustement (fit=false), delta est obligatoire")
        if self.family == 'eventual' and not self.fit and self.A0 is None:
            raise ValueError("La famille éventuelle sans ajustement exige A0")
        if self.A0 is not None and self.delta is not None and self.A0 <= self.delta:
            raise ValueError(f"A0 doit dépasser delta (A0={self.A0}, delta={self.delta})")
        return self

    @property
    def explicit(self) -> bool:
        return self.kappa is not None

    def build(self, profile: RadialProfile, kappa: Optional[float] = None, gamma: Optional[float] = None,
              rho: Optional[float] = None) -> MocParams:
        """Paramètres explicites (delta requis), coefficients fournis ou issus de la sélection"""
        return MocParams(
            kappa=self.kappa if kappa is None else kappa,
            gamma=self.gamma if gamma is None else gamma,
            delta=self.delta, beta=self.beta, profile=profile,
            rho=(self.rho or 0.0) if rho is None else rho,
            A0=self.A0, c_cut=self.c_cut
        )

    @property
    def moc_family(self) -> MocFamily:
        return MocFamily(self.family)


class CriterionSettings(Section):
    """Grilles du critère et audit de scénarios"""
    xi_min: Optional[float] = Field(default=None, gt=0)
    xi_max: Optional[float] = Field(default=None, gt=0)
    xi_points: int = Field(default=64, ge=2)
    xi0_points: int = Field(default=32, ge=2)
    epsilon: float = Field(default=0.0, ge=0)
    B0: Optional[float] = Field(default=None, gt=0)
    eta_points: int = Field(default=48, ge=4)
    audit: bool = False
    audit_threshold: float = Field(default=0.9, gt=0, le=1)
    audit_max: int = Field(default=32, ge=1)
    audit_slack: float = Field(default=1e-3, ge=0)

    @model_validator(mode='after')
    def check_range(self):
        if self.xi_min is not None and self.xi_max is not None and self.xi_min >= self.xi_max:
            raise ValueError(f"xi_min doit être < xi_max ({self.xi_min} ≥ {self.xi_max})")
        return self


class ReportSettings(Section):
    """Répertoires d'exécutions à agréger"""
    run_dirs: List[str] = Field(default_factory=list)
    plot_data: bool = True


# ============================================================================
# CONFIGURATION COMPLÈTE
# ============================================================================

class RunConfig(Section):
    """Configuration complète d'une exécution"""
    experiment: str
    seed: int = Field(default=0, ge=0)
    output_dir: str = 'runs/latest'
    log_level: Literal['DEBUG', 'INFO', 'WARNING', 'ERROR'] = 'INFO'
    profile: ProfileSettings = Field(default_factory=ProfileSettings)
    kernel: KernelSettings = Field(default_factory=KernelSettings)
    model: ModelSettings = Field(default_factory=ModelSettings)
    grid: GridSettings = Field(default_factory=GridSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    moc: MocSettings = Field(default_factory=MocSettings)
    criterion: CriterionSettings = Field(default_factory=CriterionSettings)
    report: ReportSettings = Field(default_factory=ReportSettings)

    @field_validator('experiment')
    @classmethod
    def validate_experiment(cls, v):
        if v not in EXPERIMENTS:
            raise ValueError(f"Expérience inconnue: '{v}'. Expériences: {', '.join(EXPERIMENTS)}")
        return v

    @field_validator('log_level', mode='before')
    @classmethod
    def normalize_level(cls, v):
        return v.upper() if isinstance(v, str) else v

    @model_validator(mode='after')
    def check_consistency(self):
        if self.experiment in ('simulate', 'eventual_regularity'):
            model_d = self.model.build().d if self.model.kind != 'custom' else len(self.model.a)
            if model_d != self.grid.d:
                raise ValueError(f"Le modèle '{self.model.kind}' est en dimension {model_d}, "
                                 f"la grille en dimension {self.grid.d}")
        if self.kernel.case == 'III' and self.profile.c0 is not None:
            raise ValueError("Le cas III n'admet pas de coupure c0")
        if self.kernel.case != 'III' and self.profile.c0 is None:
            raise ValueError(f"Le cas {self.kernel.case} exige une coupure c0")
        return self

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def echo(self) -> dict:
        """Configuration sérialisable (écho du manifeste)"""
        return self.model_dump(mode='json')

