"""
Configuration et constantes du laboratoire
"""
import math

# Familles de profils radiaux m
PROFILE_FAMILIES = ['power', 'power_log', 'power_loglog', 'table']

# Modèles de vitesse disponibles
VELOCITY_KINDS = ['burgers', 'ccf', 'sqg', 'ipm2d', 'ipm3d_slice', 'custom']

# Expériences exposées par la ligne de commande
EXPERIMENTS = [
    'simulate',
    'moc_check',
    'kernel_lab',
    'criterion_grid',
    'eventual_regularity',
    'report'
]

# Recettes nommées (tracées dans chaque manifeste)
RECIPES = {
    'simulate': 'drift-diffusion-simulation',
    'moc_check': 'stationary-moc-shape',
    'kernel_lab': 'symbol-kernel-lab',
    'criterion_grid': {
        'stationary': 'stationary-moc-criterion',
        'eventual': 'eventual-moc-criterion'
    },
    'eventual_regularity': 'eventual-regularity',
    'report': 'report'
}

# Tolérances des vérifications structurelles
MDEC_RELATIVE_STEP = 1e-4
MDEC_TOLERANCE = 1e-6
MONOTONE_TOLERANCE = 1e-9
ROUND_TRIP_TOLERANCE = 1e-12

# Quadrature
QUAD_EPSREL = 1e-10
QUAD_EPSABS = 1e-13
QUAD_LIMIT = 400
QUAD_TAIL_TOLERANCE = 1e-14
QUAD_MAX_CHUNKS = 400
QUAD_CHUNK_PERIODS = 16

# Table d'intégrales des modules de continuité
MOC_TABLE_NODES = 2048
MOC_TABLE_TOLERANCE = 1e-9
MOC_OBEY_SLACK = 1e-12

# Solveur
DEFAULT_CFL_SAFETY = 0.5
DEFAULT_BLOWUP_GRAD = 1e6
DEFAULT_RESOLUTION_LOSS = 1e-2
DEFAULT_RESOLVED_FRACTION = 0.1
DEFAULT_TOL_MP = 1e-8
HOLDER_BETA_OFFSET = 0.05

# Ajustement initial
FIT_MARGIN = 0.05
FIT_MAX_ITERATIONS = 200

# Constantes analytiques
C0_PAIR_LOG = 1.0 / math.e          # sup_{s∈(0,1]} s·log(1/s)
C_TILDE = math.log(2.0)             # inf_{x∈(0,1]} (2^x − 1)/x

# Directions discrètes des audits de scénarios en dimension 2 (16 vecteurs unitaires)
LATTICE_DIRECTIONS_2D = [(1, 0), (2, 1), (1, 1), (1, 2), (0, 1), (-1, 2), (-1, 1), (-2, 1)]

# Fichiers produits
MANIFEST_FILE = 'manifest.json'
ERROR_REPORT_FILE = 'error.json'
DIAGNOSTICS_FILE = 'diagnostics.csv'
SUMMARY_FILE = 'summary.json'
CSV_FLOAT_FORMAT = '%.17g'

# Variables d'environnement reconnues
ENV_PREFIX = 'SIMLAB_'
