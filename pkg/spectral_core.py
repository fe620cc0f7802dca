"""
Grilles périodiques, transformées et boîte à outils de normes

Convention de Fourier: les coefficients d'un champ sont c_k = fftn(θ)/N^d, si bien que
θ(x) = Σ_k c_k e^{i k·x} et que cos(kx) a des coefficients 1/2 en ±k. Le produit scalaire L²
est celui de la mesure normalisée dx/(2π)^d: ‖θ‖²_{L²} = moyenne(θ²) = Σ_k |c_k|².
"""
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import GridError, ValidationError
from utils import read_snapshot, write_csv, write_snapshot

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PeriodicGrid:
    """Grille uniforme de [0, 2π)^d avec N points par dimension"""
    d: int
    N: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise GridError(f"Dimension non supportée: d={self.d} (1 ou 2)", details={'d': self.d})
        if self.N < 8 or self.N & (self.N - 1):
            raise GridError(f"N doit être une puissance de deux ≥ 8 (reçu {self.N})", details={'N': self.N})

    @property
    def h(self) -> float:
        return 2.0 * math.pi / self.N

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N,) * self.d

    @cached_property
    def coords(self) -> Tuple[np.ndarray, ...]:
        x = self.h * np.arange(self.N)
        return (x,) * self.d

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.coords, indexing='ij'))

    @cached_property
    def k1d(self) -> np.ndarray:
        """Fréquences entières dans l'ordre FFT (la fréquence de Nyquist vaut −N/2)"""
        return np.fft.fftfreq(self.N, d=1.0 / self.N)

    @cached_property
    def kvec(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.k1d] * self.d), indexing='ij'))

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(sum(k * k for k in self.kvec))

    @cached_property
    def kmax_norm(self) -> np.ndarray:
        return np.max(np.abs(np.stack(self.kvec)), axis=0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return self.kmax_norm <= self.N / 3.0

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        return self.kmax_norm >= self.N / 2.0

    def periodic_distance(self, shift: Sequence[int]) -> float:
        """Distance torique d'un déplacement entier (min(|Δ|, 2π−|Δ|) par coordonnée)"""
        parts = [min(s % self.N, self.N - s % self.N) * self.h for s in shift]
        return math.sqrt(sum(p * p for p in parts))

    @property
    def diameter(self) -> float:
        """Plus grande distance torique entre deux points"""
        return math.pi * math.sqrt(self.d)


class Field:
    """
    Champ scalaire réel sur une grille périodique, avec cache spectral synchronisé
    """

    def __init__(self, grid: PeriodicGrid, values: np.ndarray):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            raise ValidationError(
                f"Forme des valeurs {values.shape} incompatible avec la grille {grid.shape}", field='values'
            )
        values.setflags(write=False)
        self.grid = grid
        self._values = values
        self._spectral: Optional[np.ndarray] = None

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func: Callable[..., np.ndarray]) -> 'Field':
        return cls(grid, np.broadcast_to(func(*grid.mesh), grid.shape))

    @classmethod
    def from_spectral(cls, grid: PeriodicGrid, coeffs: np.ndarray) -> 'Field':
        return cls(grid, inverse_transform(grid, coeffs))

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> 'Field':
        return cls(grid, np.zeros(grid.shape))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            coeffs = np.fft.fftn(self._values) / self.grid.N ** self.grid.d
            coeffs.setflags(write=False)
            self._spectral = coeffs
        return self._spectral

    @property
    def is_stale(self) -> bool:
        return self._spectral is None

    @contextmanager
    def edit(self) -> Iterator[np.ndarray]:
        """Modification en place des valeurs; le cache spectral est marqué périmé"""
        work = self._values.copy()
        yield work
        work.setflags(write=False)
        self._values = work
        self._spectral = None

    def scaled(self, factor: float) -> 'Field':
        return Field(self.grid, factor * self._values)

    def __add__(self, other: 'Field') -> 'Field':
        return Field(self.grid, self._values + other.values)

    def __repr__(self):
        return f"Field(d={self.grid.d}, N={self.grid.N})"


# ============================================================================
# TRANSFORMÉES
# ============================================================================

def transform(field: Field) -> np.ndarray:
    """Coefficients de Fourier normalisés (copie modifiable)"""
    return np.array(field.spectral)


def inverse_transform(grid: PeriodicGrid, coeffs: np.ndarray) -> np.ndarray:
    """Valeurs réelles à partir des coefficients normalisés"""
    return np.real(np.fft.ifftn(np.asarray(coeffs) * grid.N ** grid.d))


def dealias(coeffs: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Règle des deux tiers: annule tout mode avec un |k_i| > N/3"""
    return np.where(grid.dealias_mask, coeffs, 0.0)


def spectral_derivatives(coeffs: np.ndarray, grid: PeriodicGrid) -> List[np.ndarray]:
    """Dérivées partielles (valeurs) par multiplication par i k_j; modes de Nyquist annulés"""
    keep = ~grid.nyquist_mask
    return [inverse_transform(grid, np.where(keep, 1j * k * coeffs, 0.0)) for k in grid.kvec]


def top_octave_fraction(coeffs: np.ndarray, grid: PeriodicGrid) -> float:
    """Part de l'énergie dans l'octave supérieure des modes retenus (N/6, N/3]"""
    power = np.abs(coeffs) ** 2
    nonzero = grid.kmag > 0
    total = float(power[nonzero].sum())
    if total == 0.0:
        return 0.0
    top = (grid.kmax_norm > grid.N / 6.0) & grid.dealias_mask
    return float(power[top].sum()) / total


# ============================================================================
# NORMES
# ============================================================================

def norm_hs(field: Field, s: float = 0.0) -> float:
    """Norme H^s: (Σ_k (1+|k|²)^s |c_k|²)^{1/2}"""
    if s < 0:
        raise ValidationError(f"L'ordre s doit être positif (reçu {s})", field='s')
    weight = (1.0 + field.grid.kmag ** 2) ** s
    return float(np.sqrt(np.sum(weight * np.abs(field.spectral) ** 2)))


def l2_norm(field: Field) -> float:
    return norm_hs(field, 0.0)


def grad_max(field: Field) -> float:
    """max |∇θ| sur la grille (dérivées spectrales)"""
    grads = spectral_derivatives(field.spectral, field.grid)
    return float(np.sqrt(sum(g * g for g in grads)).max())


def _interpolant_derivatives(coeffs: np.ndarray, grid: PeriodicGrid, point: np.ndarray):
    """Valeur, gradient et hessienne de l'interpolant trigonométrique en un point"""
    c = np.where(grid.nyquist_mask, 0.0, coeffs)
    phase = np.exp(1j * sum(k * x for k, x in zip(grid.kvec, point)))
    terms = c * phase
    value = float(np.real(terms.sum()))
    grad = np.array([float(np.real((1j * k * terms).sum())) for k in grid.kvec])
    hess = np.array([[float(np.real((-ki * kj * terms).sum())) for kj in grid.kvec] for ki in grid.kvec])
    return value, grad, hess


def linf_norm(field: Field, refine: bool = True, iterations: int = 8) -> float:
    """
    Norme L∞; avec refine=True, l'extremum de la grille est raffiné par Newton sur l'interpolant
    trigonométrique (le maximum entre les nœuds n'échappe pas à la mesure)
    """
    values = field.values
    idx = np.unravel_index(int(np.argmax(np.abs(values))), values.shape)
    grid_max = float(abs(values[idx]))
    if not refine or grid_max == 0.0:
        return grid_max

    grid = field.grid
    point = np.array([grid.h * i for i in idx], dtype=float)
    best = grid_max
    for _ in range(iterations):
        _, grad, hess = _interpolant_derivatives(field.spectral, grid, point)
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        norm = float(np.linalg.norm(step))
        if norm > grid.h:
            step *= grid.h / norm
        point = point + step
        if norm < 1e-14:
            break
    value, _, _ = _interpolant_derivatives(field.spectral, grid, point)
    return max(best, abs(value))


# ============================================================================
# PAIRES DE POINTS
# ============================================================================

def displacements(grid: PeriodicGrid, stride: int = 1,
                  directions: Optional[Sequence[Tuple[int, ...]]] = None) -> Iterator[Tuple[Tuple[int, ...], float]]:
    """
    Énumération déterministe des déplacements entiers et de leur distance torique

    Sans directions, tous les déplacements (sous-échantillonnés par stride) à symétrie près;
    avec directions (vecteurs primitifs), les multiples ±m·(p, q) dans la demi-période.
    """
    if stride < 1:
        raise ValidationError(f"stride doit être ≥ 1 (reçu {stride})", field='stride')
    N = grid.N
    if directions is None:
        if grid.d == 1:
            for j in range(stride, N // 2 + 1, stride):
                yield (j,), grid.periodic_distance((j,))
        else:
            for j1 in range(0, N // 2 + 1, stride):
                for j2 in range(0, N, stride):
                    if j1 == 0 and j2 == 0:
                        continue
                    yield (j1, j2), grid.periodic_distance((j1, j2))
        return

    for direction in directions:
        reach = max(abs(c) for c in direction)
        length = math.sqrt(sum(c * c for c in direction))
        for sign in (1, -1):
            for m in range(stride, N // (2 * reach) + 1, stride):
                shift = tuple((sign * m * c) % N for c in direction)
                yield shift, m * grid.h * length


def shifted(values: np.ndarray, shift: Sequence[int]) -> np.ndarray:
    """Tableau s tel que s[x] = values[x + shift] (indices périodiques)"""
    return np.roll(values, shift=tuple(-s for s in shift), axis=tuple(range(values.ndim)))


@dataclass
class HolderEstimate:
    """Borne inférieure de la semi-norme de Hölder et paire réalisant le maximum"""
    value: float
    x: Optional[Tuple[int, ...]] = None
    y: Optional[Tuple[int, ...]] = None


def holder_seminorm(field: Field, beta: float, stride: int = 1) -> HolderEstimate:
    """max |θ(x)−θ(y)|/dist(x,y)^β sur les paires échantillonnées"""
    if not 0.0 < beta < 1.0:
        raise ValidationError(f"beta doit être dans (0,1) (reçu {beta})", field='beta')
    values = field.values
    best = HolderEstimate(0.0)
    for shift, dist in displacements(field.grid, stride):
        diff = np.abs(values - shifted(values, shift))
        flat = int(np.argmax(diff))
        ratio = float(diff.flat[flat]) / dist ** beta
        if ratio > best.value:
            x = np.unravel_index(flat, values.shape)
            y = tuple((xi + s) % field.grid.N for xi, s in zip(x, shift))
            best = HolderEstimate(ratio, tuple(int(v) for v in x), tuple(int(v) for v in y))
    return best


# ============================================================================
# LITTLEWOOD–PALEY ET BESOV
# ============================================================================

def lp_block_mask(grid: PeriodicGrid, q: int) -> np.ndarray:
    """Masque du bloc dyadique: q=−1 garde |k| ≤ 1, q ≥ 0 garde max(2^{q−1}, 1) < |k| ≤ 2^q"""
    if q < -1:
        raise ValidationError(f"Indice de bloc invalide: {q}", field='q')
    if q == -1:
        return grid.kmag <= 1.0
    return (grid.kmag > max(2.0 ** (q - 1), 1.0)) & (grid.kmag <= 2.0 ** q)


def lp_block_count(grid: PeriodicGrid) -> int:
    """Indice du dernier bloc non vide"""
    return max(0, int(math.ceil(math.log2(float(grid.kmag.max())))))


def lp_block(field: Field, q: int) -> Field:
    """Projection dyadique nette Δ_q θ"""
    return Field.from_spectral(field.grid, np.where(lp_block_mask(field.grid, q), field.spectral, 0.0))


def besov_norm(field: Field, s: float, p: float = 2, r: float = 2) -> float:
    """‖{2^{qs}‖Δ_q θ‖_{L^p}}_{q≥−1}‖_{ℓ^r} avec p, r ∈ {2, ∞}"""
    if p not in (2, math.inf) or r not in (2, math.inf):
        raise ValidationError("p et r doivent valoir 2 ou l'infini", field='p')
    terms = []
    for q in range(-1, lp_block_count(field.grid) + 1):
        mask = lp_block_mask(field.grid, q)
        block = np.where(mask, field.spectral, 0.0)
        if p == 2:
            norm = float(np.sqrt(np.sum(np.abs(block) ** 2)))
        else:
            norm = float(np.abs(inverse_transform(field.grid, block)).max())
        terms.append(2.0 ** (q * s) * norm)
    terms = np.array(terms)
    if r == 2:
        return float(np.sqrt(np.sum(terms ** 2)))
    return float(terms.max()) if terms.size else 0.0


# ============================================================================
# EXPORTS
# ============================================================================

def export_csv(field: Field, path) -> None:
    """Instantané CSV: colonnes x[, y], value"""
    names = ['x', 'y'][:field.grid.d]
    data = {name: axis.ravel() for name, axis in zip(names, field.grid.mesh)}
    data['value'] = field.values.ravel()
    write_csv(pd.DataFrame(data), path)


def export_binary(field: Field, path) -> None:
    """Instantané binaire petit-boutiste: en-tête int64 {d, N} puis float64 ligne par ligne"""
    write_snapshot(path, field.grid.d, field.grid.N, field.values)


def read_binary(path) -> Field:
    """Relit un instantané écrit par export_binary"""
    d, N, values = read_snapshot(path)
    return Field(PeriodicGrid(d, N), values)
