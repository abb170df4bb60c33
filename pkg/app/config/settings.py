import os

ARTIFACT_VERSION = "0.4.0"

# Semilla por defecto (todas las corridas la escriben en el reporte)
DEFAULT_SEED = 20240611

# Paralelismo (PACKSPECTRA_THREADS limita los hilos)
THREADS = max(1, int(os.environ.get("PACKSPECTRA_THREADS", os.cpu_count() or 1)))

LOG_LEVEL = os.environ.get("PACKSPECTRA_LOG_LEVEL", "WARNING").upper()

# =========================
# ESPECTROS / PERSISTENCIA
# =========================
EPS_FACTOR = 3.0          # escala VR = factor x radio de cobertura de landmarks
SPECTRUM_SAMPLES = 40000
SPECTRUM_LANDMARKS = 150
SPECTRUM_RHO_FLOOR = 0.5  # fraccion de max rho bajo la cual se descartan muestras
SPECTRUM_MCMC_STEPS = 150
SPECTRUM_MAX_DIM = 2

# =========================
# EMPAQUES EXTREMALES
# =========================
PACKING_RESTARTS = 6
PACKING_ITERATIONS = 400
SOFTMIN_DECAY = 0.95

# =========================
# CICLOS / LAPLACIANO
# =========================
GRID_M = 256
MULTISTART = 32
BISECT_TOL = 1e-3
LOCALIZATION_SLACK = 0.02
EIGEN_TOL = 1e-10

# =========================
# DESIGUALDADES GEOMETRICAS
# =========================
TUBE_SAMPLES = 200_000
WAIST_RESTARTS = 64
WAIST_COEF_BOUND = 0.2
GAUSS_REDRAWS = 16

# Salida CSV: 17 cifras significativas, sin locale
CSV_FLOAT_FORMAT = "%.17g"
