"""
Solveur pseudo-spectral de ∂tθ + u·∇θ + ℒθ − εΔθ = 0 sur le tore

Schéma: Runge–Kutta 4 à facteur intégrant. La partie linéaire A(k) + ε|k|² est intégrée exactement
mode par mode; le transport est évalué en espace physique puis filtré par la règle des deux tiers.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config import (DEFAULT_BLOWUP_GRAD, DEFAULT_CFL_SAFETY, DEFAULT_RESOLUTION_LOSS, DEFAULT_RESOLVED_FRACTION,
                    DEFAULT_TOL_MP)
from errors import ArgumentError, ValidationError, ValidationRangeError
from models import CheckReport, DiagnosticsRecord
from radial_multipliers import LevyOperator
from spectral_core import (Field, PeriodicGrid, dealias, export_binary, holder_seminorm, inverse_transform,
                           linf_norm, norm_hs, spectral_derivatives, top_octave_fraction)
from velocity_models import VelocityModel, velocity_symbol_table, velocity_values

logger = logging.getLogger(__name__)

RecordCallback = Callable[[DiagnosticsRecord, Field], None]


@dataclass
class SolverConfig:
    """Paramètres d'intégration"""
    dt: float
    t_end: float
    epsilon: float = 0.0
    cfl_safety: float = DEFAULT_CFL_SAFETY
    record_every: int = 1
    scheme: str = 'if_rk4'
    dealias: bool = True
    nonlinear: bool = True
    blowup_grad: float = DEFAULT_BLOWUP_GRAD
    resolution_loss: float = DEFAULT_RESOLUTION_LOSS
    resolved_fraction: float = DEFAULT_RESOLVED_FRACTION
    bracket_factor: float = 2.0
    holder_beta: float = 0.5
    holder_stride: Optional[int] = None
    hs_order: float = 1.0
    refine_linf: bool = True
    snapshot_every: Optional[int] = None
    max_steps: Optional[int] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationRangeError('dt', min_value='0 (exclu)', actual_value=self.dt)
        if self.t_end < 0:
            raise ValidationRangeError('t_end', min_value=0, actual_value=self.t_end)
        if self.epsilon < 0:
            raise ValidationRangeError('epsilon', min_value=0, actual_value=self.epsilon)
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValidationRangeError('cfl_safety', min_value='0 (exclu)', max_value=1, actual_value=self.cfl_safety)
        if self.record_every < 1:
            raise ValidationRangeError('record_every', min_value=1, actual_value=self.record_every)
        if self.scheme != 'if_rk4':
            raise ValidationError(f"Schéma inconnu: {self.scheme}", field='scheme')
        if not 0.0 < self.holder_beta < 1.0:
            raise ValidationRangeError('holder_beta', min_value='0 (exclu)', max_value='1 (exclu)',
                                       actual_value=self.holder_beta)

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class SolverState:
    """État spectral courant"""
    coeffs: np.ndarray
    t: float = 0.0
    steps: int = 0
    blown_up: bool = False
    reason: Optional[str] = None


class IntegratingFactorRK4:
    """Pas IF-RK4 avec tables précalculées (symbole de vitesse, symbole linéaire, dérivées)"""

    def __init__(self, grid: PeriodicGrid, model: VelocityModel, op: LevyOperator, config: SolverConfig):
        if op.grid != grid:
            raise ValidationError("La grille de l'opérateur diffère de celle du champ", field='grid')
        self.grid = grid
        self.model = model
        self.config = config
        self.velocity_table = velocity_symbol_table(model, grid)
        self.linear = op.symbol + config.epsilon * grid.kmag ** 2
        self.symbol = op.symbol
        keep = ~grid.nyquist_mask
        self.derivative = [np.where(keep, 1j * k, 0.0) for k in grid.kvec]

    def velocity(self, coeffs: np.ndarray) -> np.ndarray:
        return velocity_values(self.velocity_table, coeffs, self.grid)

    def nonlinear(self, coeffs: np.ndarray) -> np.ndarray:
        """−(u·∇θ)^ filtré"""
        if not self.config.nonlinear:
            return np.zeros_like(coeffs)
        u = self.velocity(coeffs)
        transport = sum(u[j] * inverse_transform(self.grid, self.derivative[j] * coeffs)
                        for j in range(self.grid.d))
        out = -np.fft.fftn(transport) / self.grid.N ** self.grid.d
        return dealias(out, self.grid) if self.config.dealias else out

    def max_speed(self, coeffs: np.ndarray) -> float:
        if not self.config.nonlinear:
            return 0.0
        return float(np.sqrt(np.sum(self.velocity(coeffs) ** 2, axis=0)).max())

    def advance(self, coeffs: np.ndarray, dt: float) -> np.ndarray:
        half = np.exp(-0.5 * dt * self.linear)
        full = half * half
        k1 = dt * self.nonlinear(coeffs)
        k2 = dt * self.nonlinear(half * (coeffs + 0.5 * k1))
        k3 = dt * self.nonlinear(half * coeffs + 0.5 * k2)
        k4 = dt * self.nonlinear(full * coeffs + half * k3)
        out = full * coeffs + (full * k1 + 2.0 * half * (k2 + k3) + k4) / 6.0
        return dealias(out, self.grid) if self.config.dealias else out

    def dissipation_rates(self, coeffs: np.ndarray) -> Tuple[float, float]:
        """(⟨ℒθ,θ⟩, ε‖∇θ‖²)"""
        power = np.abs(coeffs) ** 2
        return (float(np.sum(self.symbol * power)),
                float(self.config.epsilon * np.sum(self.grid.kmag ** 2 * power)))


def _stable_dt(stepper: IntegratingFactorRK4, coeffs: np.ndarray, remaining: float) -> float:
    config = stepper.config
    dt = min(config.dt, remaining)
    speed = stepper.max_speed(coeffs)
    if speed > 0:
        dt = min(dt, config.cfl_safety * stepper.grid.h / speed)
    return dt


def step(state: SolverState, model: VelocityModel, op: LevyOperator, config: SolverConfig,
         stepper: Optional[IntegratingFactorRK4] = None) -> SolverState:
    """
    Un pas IF-RK4 (pas de temps borné par la condition CFL)

    Un état non fini est marqué en explosion et n'avance plus.
    """
    if state.blown_up:
        return state
    stepper = stepper or IntegratingFactorRK4(op.grid, model, op, config)
    dt = _stable_dt(stepper, state.coeffs, max(config.t_end - state.t, 0.0) or config.dt)
    coeffs = stepper.advance(state.coeffs, dt)
    if not np.all(np.isfinite(coeffs)):
        logger.warning(f"Valeurs non finies à t={state.t + dt:.6g}")
        return SolverState(state.coeffs, state.t, state.steps, True, 'non_finite')
    return SolverState(coeffs, state.t + dt, state.steps + 1)


@dataclass
class SimulationResult:
    """Série de diagnostics, état final et éventuel encadrement du temps d'explosion"""
    records: List[DiagnosticsRecord]
    final: Field
    steps: int
    wall_time: float
    blown_up: bool = False
    blowup_reason: Optional[str] = None
    blowup_bracket: Optional[Tuple[float, float]] = None
    snapshots: List[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_row() for r in self.records])

    def summary(self) -> Dict[str, Any]:
        last = self.records[-1] if self.records else None
        return {
            'steps': self.steps,
            'wall_time': self.wall_time,
            'blown_up': self.blown_up,
            'blowup_reason': self.blowup_reason,
            'blowup_bracket': list(self.blowup_bracket) if self.blowup_bracket else None,
            'final_time': last.t if last else 0.0,
            'final_linf': last.linf if last else None,
            'final_l2': last.l2 if last else None,
            'final_grad_max': last.grad_max if last else None,
            'snapshots': self.snapshots
        }


def _record(stepper: IntegratingFactorRK4, coeffs: np.ndarray, t: float, energy: float, viscous: float,
            config: SolverConfig) -> Tuple[DiagnosticsRecord, Field]:
    grid = stepper.grid
    theta = Field.from_spectral(grid, coeffs)
    stride = config.holder_stride or (1 if grid.d == 1 else max(1, grid.N // 32))
    grads = spectral_derivatives(coeffs, grid)
    record = DiagnosticsRecord(
        t=t,
        linf=linf_norm(theta, refine=config.refine_linf),
        l2=norm_hs(theta, 0.0),
        grad_max=float(np.sqrt(sum(g * g for g in grads)).max()),
        holder=holder_seminorm(theta, config.holder_beta, stride).value,
        hs=norm_hs(theta, config.hs_order),
        energy_dissipated=energy,
        viscous_dissipated=viscous,
        top_octave_fraction=top_octave_fraction(coeffs, grid),
        mean=float(np.real(coeffs[(0,) * grid.d]))
    )
    return record, theta


def _is_resolved(record: DiagnosticsRecord, theta: Field, config: SolverConfig) -> bool:
    oscillation = float(theta.values.max() - theta.values.min())
    return record.grad_max * theta.grid.h <= config.resolved_fraction * max(oscillation, 1e-300)


def simulate(theta0: Field, model: VelocityModel, op: LevyOperator, config: SolverConfig,
             on_record: Optional[RecordCallback] = None, snapshot_dir: Optional[str] = None) -> SimulationResult:
    """
    Intègre jusqu'à t_end ou jusqu'à la détection d'une explosion

    Détection: valeurs non finies, grad_max > blowup_grad, ou part d'énergie de l'octave supérieure
    > resolution_loss. L'encadrement [t_lo, t_hi] part du dernier enregistrement résolu t_lo et
    vaut t_hi = max(t_détection, t_lo + bracket_factor/grad_max(t_lo)).
    """
    if not np.all(np.isfinite(theta0.values)):
        raise ValidationError("La donnée initiale doit être finie", field='theta0')
    grid = theta0.grid
    stepper = IntegratingFactorRK4(grid, model, op, config)
    coeffs = dealias(theta0.spectral, grid) if config.dealias else np.array(theta0.spectral)
    state = SolverState(coeffs)
    started = time.perf_counter()

    energy, viscous = 0.0, 0.0
    rates = stepper.dissipation_rates(coeffs)
    records: List[DiagnosticsRecord] = []
    snapshots: List[str] = []
    last_resolved: Optional[DiagnosticsRecord] = None
    reason: Optional[str] = None

    def emit(current: SolverState) -> DiagnosticsRecord:
        nonlocal last_resolved
        record, theta = _record(stepper, current.coeffs, current.t, energy, viscous, config)
        records.append(record)
        if _is_resolved(record, theta, config):
            last_resolved = record
        if on_record is not None:
            on_record(record, theta)
        if snapshot_dir and config.snapshot_every and (len(records) - 1) % config.snapshot_every == 0:
            path = Path(snapshot_dir) / f"snapshot_{len(records) - 1:05d}.bin"
            path.parent.mkdir(parents=True, exist_ok=True)
            export_binary(theta, path)
            snapshots.append(str(path))
        return record

    emit(state)
    logger.info(f"Simulation: modèle={model.kind}, N={grid.N}, d={grid.d}, t_end={config.t_end}")

    while state.t < config.t_end - 1e-14 * max(1.0, config.t_end):
        if config.max_steps is not None and state.steps >= config.max_steps:
            logger.warning(f"Nombre maximal de pas atteint ({config.max_steps}) à t={state.t:.6g}")
            break
        previous = state
        state = step(state, model, op, config, stepper)
        if state.blown_up:
            reason = state.reason
            break
        new_rates = stepper.dissipation_rates(state.coeffs)
        dt = state.t - previous.t
        energy += 0.5 * dt * (rates[0] + new_rates[0])
        viscous += 0.5 * dt * (rates[1] + new_rates[1])
        rates = new_rates

        grads = spectral_derivatives(state.coeffs, grid)
        grad = float(np.sqrt(sum(g * g for g in grads)).max())
        loss = top_octave_fraction(state.coeffs, grid)
        if grad > config.blowup_grad:
            reason = 'gradient'
        elif loss > config.resolution_loss:
            reason = 'resolution_loss'
        finished = state.t >= config.t_end - 1e-14 * max(1.0, config.t_end)
        if reason or finished or state.steps % config.record_every == 0:
            emit(state)
        if reason:
            break

    blown_up = reason is not None
    bracket = None
    if blown_up:
        t_detect = state.t
        if last_resolved is not None:
            t_lo = last_resolved.t
            reach = config.bracket_factor / last_resolved.grad_max if last_resolved.grad_max > 0 else 0.0
            bracket = (t_lo, max(t_detect, t_lo + reach))
        else:
            bracket = (0.0, t_detect)
        logger.warning(f"Explosion détectée ({reason}) à t={t_detect:.6g}, encadrement {bracket}")

    wall = time.perf_counter() - started
    logger.info(f"Simulation terminée: {state.steps} pas en {wall:.2f}s")
    return SimulationResult(records, Field.from_spectral(grid, state.coeffs), state.steps, wall,
                            blown_up, reason, bracket, snapshots)


# ============================================================================
# MONITEURS ET ESTIMATIONS
# ============================================================================

def max_principle_monitor(series: List[DiagnosticsRecord], norm: str = 'linf',
                          tol_mp: float = DEFAULT_TOL_MP) -> CheckReport:
    """
    Décroissance de ‖θ(t)‖ d'un enregistrement à l'autre

    norm='linf' pour le cas I (principe du maximum), norm='l2' pour une vitesse à divergence nulle.
    La tolérance est relative à la norme initiale.
    """
    if norm not in ('linf', 'l2'):
        raise ArgumentError(f"Norme inconnue: {norm}", field='norm')
    values = np.array([getattr(r, norm) for r in series], dtype=float)
    if values.size < 2:
        return CheckReport(name=f"max_principle_{norm}", passed=True, details={'records': int(values.size)})
    scale = max(float(values[0]), 1e-300)
    increases = np.diff(values) / scale
    i = int(np.argmax(increases))
    worst = float(increases[i])
    passed = bool(worst <= tol_mp)
    if not passed:
        logger.warning(f"Croissance de ‖θ‖_{norm} de {worst:.3e} à t={series[i + 1].t:.6g}")
    return CheckReport(name=f"max_principle_{norm}", passed=passed, worst_margin=tol_mp - worst,
                       worst_at=float(series[i + 1].t), details={'tol_mp': tol_mp, 'max_increase': worst})


def linf_level_estimate(l2_0: float, t0: float, alpha: float, sigma: float, d: int, T: float, C: float) -> float:
    """M = (1+2CT)^{1/2}‖θ₀‖_{L²}(2^{2+d/(α−σ)}(2/t₀ + 4C))^{d/(2(α−σ))}"""
    gap = alpha - sigma
    if t0 <= 0 or gap <= 0 or C < 0 or T < 0:
        raise ArgumentError("Exige t₀ > 0, α−σ > 0, C ≥ 0 et T ≥ 0", field='t0')
    return math.sqrt(1.0 + 2.0 * C * T) * l2_0 * (2.0 ** (2.0 + d / gap) * (2.0 / t0 + 4.0 * C)) ** (d / (2.0 * gap))


def linf_level_sharp(l2_0: float, t0: float, alpha: float, d: int, C: float) -> float:
    """Forme affinée (C 2^{d/α}/t₀)^{d/(2α)} ‖θ₀‖_{L²}"""
    if t0 <= 0 or alpha <= 0 or C < 0:
        raise ArgumentError("Exige t₀ > 0, α > 0 et C ≥ 0", field='t0')
    return (C * 2.0 ** (d / alpha) / t0) ** (d / (2.0 * alpha)) * l2_0


def local_time_estimate(hs_norm_0: float, C_tilde: float) -> float:
    """T₁ = 1/(C̃‖θ₀‖_{H^s})"""
    if hs_norm_0 <= 0 or C_tilde <= 0:
        raise ArgumentError("‖θ₀‖_{H^s} et C̃ doivent être strictement positifs", field='hs_norm_0')
    return 1.0 / (C_tilde * hs_norm_0)


def riccati_bound(z0: float, C_tilde: float, t: float) -> float:
    """z₀/(1 − C̃z₀t) avant le temps d'explosion 1/(C̃z₀), l'infini au-delà"""
    if z0 < 0 or C_tilde < 0 or t < 0:
        raise ArgumentError("Arguments positifs attendus", field='z0')
    denominator = 1.0 - C_tilde * z0 * t
    return z0 / denominator if denominator > 0 else math.inf


def energy_bound(l2_0: float, C: float, T: float) -> float:
    """(1+2CT)‖θ₀‖²_{L²}"""
    if C < 0 or T < 0:
        raise ArgumentError("C et T doivent être positifs", field='C')
    return (1.0 + 2.0 * C * T) * l2_0 ** 2
