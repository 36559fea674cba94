import os
import logging

from dotenv import load_dotenv


load_dotenv()

# Logging
LOG_LEVEL = os.getenv("FRACTENNA_LOG_LEVEL", "INFO").upper()
logging.basicConfig(level=LOG_LEVEL, format='%(asctime)s - %(levelname)s - %(message)s')

# Evaluator concurrency and the evaluation cache database (may fall back to sqlite in the run dir)
WORKERS = int(os.getenv("FRACTENNA_WORKERS", "1"))
DATABASE_URL = os.environ.get("FRACTENNA_DATABASE_URL")
PRESET = os.getenv("FRACTENNA_PRESET", "coarse")

MM = 1e-3
GHZ = 1e9

# Physical constants (c pinned to the SI definition)
SPEED_OF_LIGHT = 299_792_458.0
MU_0 = 1.25663706212e-6
EPS_0 = 1.0 / (MU_0 * SPEED_OF_LIGHT ** 2)
ETA_0 = MU_0 * SPEED_OF_LIGHT

# FR4 (not stated in the source design; industry-standard values)
FR4_EPS_R = 4.4
FR4_LOSS_TANGENT = 0.02

# Antenna specification table (lengths in meters)
SUBSTRATE_LENGTH = 38.7 * MM
SUBSTRATE_WIDTH = 39.0 * MM
SUBSTRATE_HEIGHT = 1.57 * MM
GROUND_LENGTH = 15.5 * MM
GROUND_SLOT_WIDTH = 3.5 * MM
GROUND_SLOT_DEPTH = 2.0 * MM
PATCH_LENGTH = 19.0 * MM
PATCH_WIDTH = 19.0 * MM
FEED_LENGTH = 17.5 * MM
FEED_WIDTH = 3.5 * MM
TABLE_I_STAIRS = ((1.5 * MM, 14.1 * MM), (1.0 * MM, 12.1 * MM))

# Fractal cuts: four W1 x L1 corner cuts and one W2 x L2 centre cut
CUT_W1 = 4.0 * MM
CUT_L1 = 2.0 * MM
CUT_W2 = 2.0 * MM
CUT_L2 = 2.0 * MM

DESIGN_FREQUENCY = 7.0 * GHZ
DEFAULT_TARGETS = (3.5 * GHZ, 6.0 * GHZ)
REFERENCE_IMPEDANCE = 50.0

# Sweep used for S11 extraction
SWEEP_START = 1.0 * GHZ
SWEEP_STOP = 10.0 * GHZ
SWEEP_STEP = 10e6

# Solver presets: lateral cell size; dz is chosen so the substrate holds an integer number of cells
GRID_PRESETS = {
    "coarse": {"cell": 0.5 * MM, "n_steps": 12000},
    "fine": {"cell": 0.25 * MM, "n_steps": 24000},
}
CFL_FACTOR = 0.99
PML_LAYERS = 10
PML_GRADING_ORDER = 3
PML_SIGMA_RATIO = 0.8
PML_KAPPA_MAX = 5.0
PML_ALPHA_MAX = 0.05
AIR_CELLS_LATERAL = 8
AIR_CELLS_BELOW = 6
AIR_CELLS_ABOVE = 12
PULSE_CENTER = 5.5 * GHZ
PULSE_BANDWIDTH = 9.0 * GHZ
BLOWUP_THRESHOLD = 1e9
DECAY_THRESHOLD = 1e-3
PROGRESS_EVERY = 2000

# Genetic algorithm defaults (the source design states none)
GA_POPULATION = 24
GA_GENERATIONS = 30
GA_CROSSOVER = 0.9
GA_TOURNAMENT = 3
GA_ELITISM = 2
GA_GRID_ORDER = 19
GA_INIT_ONE_BIAS = 0.8
GA_SEED = 1

# Fitness
FITNESS_PENALTY = 10.0
FITNESS_BIG_PENALTY = 1000.0
VSWR_CAP = 2.0
RL_FLOOR_DB = -40.0
GAIN_FLOOR_DBI = -40.0
