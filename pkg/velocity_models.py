"""
Lois de vitesse u = 𝒫(θ) comme multiplicateurs de Fourier

Conventions (indices FFT numpy, θ(x) = Σ c_k e^{ik·x}):
- burgers: P̂ = 1 (u = θ)
- ccf: P̂(k) = i·sgn(k), transformée de Hilbert de symbole −i·sgn(ζ) en variable ζ = −k; sin x ↦ cos x
- sqg: P̂(k) = (−i k₂/|k|, i k₁/|k|), u = (−R₂θ, R₁θ) avec R_j = ∂_j|D|^{−1}
- ipm2d: P̂(k) = (−k₁k₂/|k|², k₁²/|k|²), u = ∇p + θe₂ et div u = 0
- ipm3d_slice: même symbole dans le plan (x₁, x₃) d'un écoulement 3D indépendant de x₂
- custom: P̂(k) = a + ∫ Ψ(ŷ)|y|^{−d} e^{ik·y} dy (valeur principale)

Tous les symboles homogènes de degré 0 valent 0 en k = 0 et sur les modes de Nyquist.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from errors import ConvergenceError, NotApplicableError, ValidationError
from spectral_core import Field, PeriodicGrid, inverse_transform, spectral_derivatives

logger = logging.getLogger(__name__)

ONE_DIMENSIONAL = ('burgers', 'ccf')
TWO_DIMENSIONAL = ('sqg', 'ipm2d', 'ipm3d_slice')


@dataclass(frozen=True)
class VelocityModel:
    """
    Modèle de vitesse

    Pour kind='custom', psi contient Ψ échantillonnée sur la sphère: en dimension 1 les deux points
    {+1, −1}, en dimension 2 des angles uniformes φ_j = 2πj/n; chaque échantillon est un vecteur de ℝ^d.
    """
    kind: str
    a: Tuple[float, ...] = ()
    psi: Optional[Tuple[Tuple[float, ...], ...]] = None

    def __post_init__(self):
        if self.kind not in ONE_DIMENSIONAL + TWO_DIMENSIONAL + ('custom',):
            raise ValidationError(f"Modèle de vitesse inconnu: {self.kind}", field='kind')
        if self.kind != 'custom':
            return
        if not self.a:
            raise ValidationError("Le modèle 'custom' exige le vecteur a", field='a')
        d = len(self.a)
        if d not in (1, 2):
            raise ValidationError(f"Dimension non supportée: {d}", field='a')
        if self.psi is None:
            return
        samples = np.asarray(self.psi, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != d:
            raise ValidationError(f"Ψ doit être un tableau (échantillons, {d})", field='psi')
        if d == 1 and samples.shape[0] != 2:
            raise ValidationError("En dimension 1, Ψ est donnée en ŷ = +1 puis ŷ = −1", field='psi')
        if d == 2 and samples.shape[0] < 4:
            raise ValidationError("Au moins 4 angles sont nécessaires pour Ψ", field='psi')
        scale = max(float(np.abs(samples).max()), 1.0)
        if float(np.abs(samples.mean(axis=0)).max()) > 1e-12 * scale:
            raise ValidationError("Ψ doit être de moyenne nulle sur la sphère", field='psi')

    @property
    def d(self) -> int:
        if self.kind in ONE_DIMENSIONAL:
            return 1
        if self.kind in TWO_DIMENSIONAL:
            return 2
        return len(self.a)

    @property
    def homogeneous_zero(self) -> bool:
        """Symbole homogène de degré 0 (tous les modèles sauf burgers)"""
        return self.kind != 'burgers'

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'a': list(self.a), 'psi': [list(p) for p in self.psi] if self.psi else None}


# ============================================================================
# SYMBOLES
# ============================================================================

def _custom_symbol(model: VelocityModel, kvec: Sequence[np.ndarray]) -> np.ndarray:
    d = model.d
    shape = kvec[0].shape
    out = np.zeros((d,) + shape, dtype=complex)
    for j in range(d):
        out[j] += model.a[j]
    if model.psi is None:
        return out
    samples = np.asarray(model.psi, dtype=float)
    if d == 1:
        c = 0.5 * (samples[0, 0] - samples[1, 0])
        out[0] += 1j * math.pi * c * np.sign(kvec[0])
        return out
    n = samples.shape[0]
    coeffs = np.fft.fft(samples, axis=0) / n
    harmonics = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    phi = np.arctan2(kvec[1], kvec[0])
    for idx, h in enumerate(harmonics):
        if h == 0 or 2 * abs(h) == n:
            continue
        gamma = 2.0 * math.pi * (1j ** abs(h)) / abs(h)
        phase = np.exp(1j * h * phi)
        for j in range(d):
            out[j] += coeffs[idx, j] * gamma * phase
    return out


def _symbol(model: VelocityModel, kvec: Sequence[np.ndarray]) -> np.ndarray:
    """Table (d, ...) des multiplicateurs, P̂(0) = 0 pour les symboles homogènes de degré 0"""
    kind = model.kind
    shape = kvec[0].shape
    if kind == 'burgers':
        return np.ones((1,) + shape, dtype=complex)
    if kind == 'ccf':
        return (1j * np.sign(kvec[0]))[np.newaxis].astype(complex)
    kk = sum(k * k for k in kvec)
    zero = kk == 0
    safe = np.where(zero, 1.0, kk)
    if kind == 'sqg':
        norm = np.sqrt(safe)
        table = np.stack([-1j * kvec[1] / norm, 1j * kvec[0] / norm])
    elif kind in ('ipm2d', 'ipm3d_slice'):
        table = np.stack([-kvec[0] * kvec[1] / safe, kvec[0] ** 2 / safe]).astype(complex)
    else:
        table = _custom_symbol(model, kvec)
    return np.where(zero, 0.0, table)


def velocity_symbol(model: VelocityModel, k: Sequence[int]) -> np.ndarray:
    """P̂(k) pour un vecteur de fréquences entier"""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.size != model.d:
        raise ValidationError(f"Fréquence de dimension {k.size} pour un modèle de dimension {model.d}", field='k')
    return _symbol(model, [np.array(c) for c in k])


def velocity_symbol_table(model: VelocityModel, grid: PeriodicGrid) -> np.ndarray:
    """Table (d, N, ...) sur la grille; modes de Nyquist annulés pour les symboles homogènes"""
    if model.d != grid.d:
        raise ValidationError(f"Modèle de dimension {model.d} sur une grille de dimension {grid.d}", field='d')
    table = _symbol(model, grid.kvec)
    if model.homogeneous_zero:
        table = np.where(grid.nyquist_mask, 0.0, table)
    return table


# ============================================================================
# APPLICATION
# ============================================================================

@dataclass
class VectorField:
    """Champ de vitesse: une composante réelle par dimension"""
    grid: PeriodicGrid
    components: Tuple[Field, ...]

    @property
    def values(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])

    def max_speed(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2, axis=0)).max())

    def l2_norm(self) -> float:
        return float(np.sqrt(sum(np.sum(np.abs(c.spectral) ** 2) for c in self.components)))


def velocity_values(table: np.ndarray, coeffs: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Valeurs (d, N, ...) de u à partir des coefficients de θ"""
    return np.stack([inverse_transform(grid, table[j] * coeffs) for j in range(table.shape[0])])


def apply_velocity(model: VelocityModel, theta: Field, table: Optional[np.ndarray] = None) -> VectorField:
    """u = 𝒫(θ); la table peut être fournie pour éviter de la reconstruire"""
    table = velocity_symbol_table(model, theta.grid) if table is None else table
    values = velocity_values(table, theta.spectral, theta.grid)
    return VectorField(theta.grid, tuple(Field(theta.grid, v) for v in values))


def divergence_residual(model: VelocityModel, theta: Field) -> float:
    """max_k |k·û(k)| (exact mode par mode)"""
    if model.d != 2:
        raise NotApplicableError('divergence_residual', f"modèle '{model.kind}' de dimension {model.d}")
    table = velocity_symbol_table(model, theta.grid)
    div = sum(1j * k * table[j] for j, k in enumerate(theta.grid.kvec)) * theta.spectral
    return float(np.abs(div).max())


# ============================================================================
# PAIRES (a, S) ET CONSTANTES DE DÉRIVE
# ============================================================================

@dataclass(frozen=True)
class KernelPair:
    """Représentation u = aθ + p.v.∫ S(y) θ(x+y) dy"""
    a: Tuple[float, ...]
    S: Callable[..., Tuple[np.ndarray, ...]]
    d: int
    note: str = ''


def _ipm2d_kernel(y1, y2):
    r4 = (y1 * y1 + y2 * y2) ** 2
    return (2.0 * y1 * y2 / r4 / (2.0 * math.pi), (y2 * y2 - y1 * y1) / r4 / (2.0 * math.pi))


def _ipm3d_kernel(y1, y2, y3):
    r5 = (y1 * y1 + y2 * y2 + y3 * y3) ** 2.5
    c = 1.0 / (4.0 * math.pi)
    return (c * 3 * y1 * y3 / r5, c * 3 * y2 * y3 / r5, c * (2 * y3 * y3 - y1 * y1 - y2 * y2) / r5)


def kernel_pair(kind: str) -> KernelPair:
    """
    Paires (a, S) des modèles IPM

    Le signe de a est celui qui reproduit le symbole déclaré de u = ∇p + θe_d; avec le signe
    opposé (a = −1/2 en 2D, −2/3 en 3D) la même représentation donne ∇p.
    """
    if kind in ('ipm2d', 'ipm3d_slice'):
        return KernelPair((0.0, 0.5), _ipm2d_kernel, 2, 'S(x) = (2x₁x₂, x₂²−x₁²)/(2π|x|⁴)')
    if kind == 'ipm3d':
        return KernelPair((0.0, 0.0, 2.0 / 3.0), _ipm3d_kernel, 3,
                          'S(x) = (3x₁x₃, 3x₂x₃, 2x₃²−x₁²−x₂²)/(4π|x|⁵); documentation seulement')
    raise NotApplicableError('kernel_pair', f"aucune paire (a, S) explicite pour '{kind}'")


@dataclass(frozen=True)
class DriftConstants:
    """|a| et max|Ψ| d'un modèle"""
    a_norm: float
    psi_max: float


def drift_constant(model: VelocityModel) -> DriftConstants:
    kind = model.kind
    if kind == 'burgers':
        return DriftConstants(1.0, 0.0)
    if kind == 'ccf':
        return DriftConstants(0.0, 1.0 / math.pi)
    if kind == 'sqg':
        return DriftConstants(0.0, 1.0 / (2.0 * math.pi))
    if kind in ('ipm2d', 'ipm3d_slice'):
        return DriftConstants(0.5, 1.0 / (2.0 * math.pi))
    a_norm = float(np.linalg.norm(model.a))
    if model.psi is None:
        return DriftConstants(a_norm, 0.0)
    samples = np.asarray(model.psi, dtype=float)
    return DriftConstants(a_norm, float(np.linalg.norm(samples, axis=1).max()))


# ============================================================================
# VÉRIFICATION CROISÉE IPM (NOYAU RÉEL)
# ============================================================================

@dataclass
class CrosscheckReport:
    """Écart entre la voie multiplicateur et la voie noyau réel"""
    max_abs: float
    max_relative: float
    truncation_delta: float
    radius: float
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {'max_abs': self.max_abs, 'max_relative': self.max_relative,
                'truncation_delta': self.truncation_delta, 'radius': self.radius, **self.details}


def _taper(r: np.ndarray, radius: float) -> np.ndarray:
    u = r / radius
    return np.where(u <= 0.5, 1.0, np.where(u >= 1.0, 0.0, 0.5 * (1.0 + np.cos(math.pi * (2.0 * u - 1.0)))))


def _angular_moments(S, samples: int = 256) -> np.ndarray:
    """M[c, i, j] = ∫_{S¹} Ψ_c(ŷ) ŷ_i ŷ_j dφ avec Ψ = S sur le cercle unité"""
    phi = 2.0 * math.pi * np.arange(samples) / samples
    y = np.stack([np.cos(phi), np.sin(phi)])
    psi = np.stack(S(y[0], y[1]))
    return np.einsum('cp,ip,jp->cij', psi, y, y) * (2.0 * math.pi / samples)


def _real_space_velocity(theta: Field, pair: KernelPair, radius: float, rho0: float) -> np.ndarray:
    """
    aθ + p.v.∫ S(y)θ(x+y) dy par somme sur le réseau replié (images périodiques)

    Le développement de Taylor d'ordre 2 pondéré par e^{−|y|²/ρ₀²} est retranché sur le réseau puis
    réintégré analytiquement; le disque |y| < 2h est exclu.
    """
    grid = theta.grid
    N, h = grid.N, grid.h
    reach = int(math.ceil(radius / h))
    j = np.arange(-reach, reach + 1)
    j1, j2 = np.meshgrid(j, j, indexing='ij')
    y1, y2 = h * j1, h * j2
    r = np.sqrt(y1 * y1 + y2 * y2)
    keep = (r >= 2.0 * h) & (r < radius)
    y1, y2, r = y1[keep], y2[keep], r[keep]
    idx1, idx2 = j1[keep] % N, j2[keep] % N
    weight = h * h * _taper(r, radius)
    gauss = np.exp(-(r / rho0) ** 2)
    S = pair.S(y1, y2)

    coeffs = theta.spectral
    grads = spectral_derivatives(coeffs, grid)
    hessian = [[inverse_transform(grid, np.where(grid.nyquist_mask, 0.0, -ki * kj * coeffs))
                for kj in grid.kvec] for ki in grid.kvec]
    moments = _angular_moments(pair.S)
    ys = (y1, y2)

    out = []
    for c in range(2):
        w = weight * S[c]
        folded = np.bincount(idx1 * N + idx2, weights=w, minlength=N * N).reshape(grid.shape)
        multiplier = N ** 2 * np.fft.ifftn(folded)
        lattice = inverse_transform(grid, coeffs * multiplier)
        wg = w * gauss
        s0 = wg.sum()
        value = lattice - s0 * theta.values
        for i in range(2):
            value -= (wg * ys[i]).sum() * grads[i]
            for k in range(2):
                q = (wg * ys[i] * ys[k]).sum()
                value -= 0.5 * q * hessian[i][k]
                value += 0.5 * moments[c, i, k] * rho0 ** 2 / 2.0 * hessian[i][k]
        out.append(pair.a[c] * theta.values + value)
    return np.stack(out)


def ipm_kernel_crosscheck(theta: Field, radius: float = 16.0 * math.pi, rho0: float = 0.5,
                          tolerance: float = 1e-3) -> CrosscheckReport:
    """
    Compare u = 𝒫(θ) (multiplicateur ipm2d) et aθ + p.v.∫S(y)θ(x+y)dy (quadrature périodisée)

    La voie multiplicateur reçoit le terme a·moyenne(θ) que la convention P̂(0) = 0 ignore.
    Une troncature instable (écart R vs 1,5R au-delà de tolerance) lève une ConvergenceError.
    """
    grid = theta.grid
    if grid.d != 2:
        raise NotApplicableError('ipm_kernel_crosscheck', "la vérification croisée IPM est bidimensionnelle")
    if grid.N > 64:
        raise ValidationError(f"Grille trop fine pour la vérification croisée (N={grid.N} > 64)", field='N')
    pair = kernel_pair('ipm2d')
    model = VelocityModel('ipm2d')
    mean = float(np.real(theta.spectral[0, 0]))
    spectral_u = apply_velocity(model, theta).values
    spectral_u = spectral_u + np.array(pair.a)[:, None, None] * mean

    real_u = _real_space_velocity(theta, pair, radius, rho0)
    wide_u = _real_space_velocity(theta, pair, 1.5 * radius, rho0)

    scale = max(float(np.abs(spectral_u).max()), 1e-300)
    truncation = float(np.abs(real_u - wide_u).max())
    if truncation > tolerance * max(scale, 1.0):
        raise ConvergenceError("Somme sur le réseau non convergée en rayon", partial_value=truncation,
                               details={'radius': radius})
    max_abs = float(np.abs(real_u - spectral_u).max())
    relative = max_abs / scale if scale > 1e-300 else 0.0
    logger.info(f"Vérification croisée IPM: écart relatif {relative:.3e} (troncature {truncation:.2e})")
    return CrosscheckReport(max_abs, relative, truncation, radius, {'N': grid.N, 'rho0': rho0})
