from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import config


class Rect(NamedTuple):
    """Axis-aligned rectangle in meters, half-open [x0, x1) x [y0, y1)."""
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return max(self.x1 - self.x0, 0.0) * max(self.y1 - self.y0, 0.0)


# --- geometry -------------------------------------------------------------

class SubstrateSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    eps_r: float = config.FR4_EPS_R
    loss_tangent: float = config.FR4_LOSS_TANGENT
    height_h: float = config.SUBSTRATE_HEIGHT
    length_sub: float = config.SUBSTRATE_LENGTH
    width_sub: float = config.SUBSTRATE_WIDTH

    @field_validator("eps_r")
    @classmethod
    def _eps_r(cls, v: float) -> float:
        if not v > 1.0:
            raise ValueError("eps_r must exceed 1")
        return v

    @field_validator("loss_tangent")
    @classmethod
    def _loss(cls, v: float) -> float:
        if v < 0.0:
            raise ValueError("loss_tangent must be non-negative")
        return v

    @field_validator("height_h", "length_sub", "width_sub")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0.0:
            raise ValueError("substrate dimensions must be positive")
        return v


class PatchDimensions(BaseModel):
    model_config = ConfigDict(frozen=True)

    width_W: float
    length_L: float
    eps_eff: float
    delta_L: float
    design_freq_fr: float

    @model_validator(mode="after")
    def _check(self) -> "PatchDimensions":
        if not (self.width_W > 0 and self.length_L > 0 and self.delta_L > 0):
            raise ValueError("patch width, length and delta_L must be positive")
        # eps_eff = 1 is the air limit
        if self.eps_eff < 1.0:
            raise ValueError("eps_eff must be at least 1")
        if not self.design_freq_fr > 0:
            raise ValueError("design frequency must be positive")
        return self


class StairSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    length: float
    width: float

    @model_validator(mode="after")
    def _check(self) -> "StairSpec":
        if not (self.length > 0 and self.width > 0):
            raise ValueError("stair length and width must be positive")
        return self


class FeedSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    feed_length_FL: float = config.FEED_LENGTH
    feed_width_FW: float = config.FEED_WIDTH
    inset_depth: float = 0.0
    inset_gap: float = 0.0
    # stair 1 first: it adjoins the patch
    stairs: Tuple[StairSpec, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "FeedSpec":
        if not (self.feed_length_FL > 0 and self.feed_width_FW > 0):
            raise ValueError("feed length and width must be positive")
        if self.inset_depth < 0 or self.inset_gap < 0:
            raise ValueError("inset depth and gap must be non-negative")
        if sum(s.length for s in self.stairs) > self.feed_length_FL:
            raise ValueError("stairs are longer than the feed line")
        return self


class GroundSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    ground_length_Lg: float = config.GROUND_LENGTH
    slot_width_Gw: float = config.GROUND_SLOT_WIDTH
    slot_depth: float = config.GROUND_SLOT_DEPTH

    @model_validator(mode="after")
    def _check(self) -> "GroundSpec":
        if not self.ground_length_Lg > 0:
            raise ValueError("ground length must be positive")
        if self.slot_width_Gw < 0 or self.slot_depth < 0:
            raise ValueError("ground slot dimensions must be non-negative")
        if self.slot_width_Gw > 0 and self.slot_depth >= self.ground_length_Lg:
            raise ValueError("ground slot must be shallower than the ground plane")
        return self


class FractalCutSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    edge_cut_w1: float = config.CUT_W1
    edge_cut_l1: float = config.CUT_L1
    center_cut_w2: float = config.CUT_W2
    center_cut_l2: float = config.CUT_L2

    @model_validator(mode="after")
    def _check(self) -> "FractalCutSpec":
        if min(self.edge_cut_w1, self.edge_cut_l1, self.center_cut_w2, self.center_cut_l2) < 0:
            raise ValueError("cut dimensions must be non-negative")
        return self


class AntennaLayout(BaseModel):
    """Top layer = feed_regions + copper_regions (the patch), bottom layer = ground_regions."""
    model_config = ConfigDict(frozen=True)

    substrate: SubstrateSpec
    patch: PatchDimensions
    feed: FeedSpec
    ground: GroundSpec
    copper_regions: Tuple[Rect, ...] = ()
    feed_regions: Tuple[Rect, ...] = ()
    ground_regions: Tuple[Rect, ...] = ()

    @property
    def patch_origin(self) -> Tuple[float, float]:
        """Lower-left corner of the patch footprint."""
        x0 = 0.5 * (self.substrate.width_sub - self.patch.width_W)
        return x0, self.feed.feed_length_FL

    @property
    def patch_outline(self) -> Rect:
        x0, y0 = self.patch_origin
        return Rect(x0, y0, x0 + self.patch.width_W, y0 + self.patch.length_L)


# --- analytics ------------------------------------------------------------

class DesignInputs(BaseModel):
    model_config = ConfigDict(frozen=True)

    f_r: float = config.DESIGN_FREQUENCY
    eps_r: float = config.FR4_EPS_R
    height_h: float = config.SUBSTRATE_HEIGHT

    @field_validator("f_r")
    @classmethod
    def _freq(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("f_r must be positive")
        return v

    @field_validator("eps_r")
    @classmethod
    def _eps_r(cls, v: float) -> float:
        # eps_r = 1 is the air limit
        if v < 1.0:
            raise ValueError("eps_r must exceed 1")
        return v

    @field_validator("height_h")
    @classmethod
    def _height(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("h must be positive")
        return v


# --- solver ---------------------------------------------------------------

class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    dx: float
    dy: float
    dz: float
    nx: int
    ny: int
    nz: int
    cfl_factor: float = config.CFL_FACTOR
    pml_layers: int = config.PML_LAYERS
    n_steps: int = 12000
    # node (0, 0, 0) position in layout coordinates
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    @field_validator("cfl_factor")
    @classmethod
    def _cfl(cls, v: float) -> float:
        if not 0.0 < v <= 0.99:
            raise ValueError("cfl_factor must lie in (0, 0.99] for Courant stability")
        return v

    @field_validator("pml_layers")
    @classmethod
    def _pml(cls, v: int) -> int:
        if v < 6:
            raise ValueError("pml_layers must be at least 6")
        return v

    @model_validator(mode="after")
    def _check(self) -> "GridSpec":
        if min(self.dx, self.dy, self.dz) <= 0:
            raise ValueError("cell sizes must be positive")
        if min(self.nx, self.ny, self.nz) < 2 * self.pml_layers + 2:
            raise ValueError("grid too small for its PML layers")
        if self.n_steps < 1:
            raise ValueError("n_steps must be positive")
        return self

    @property
    def dt(self) -> float:
        inv = (1.0 / self.dx ** 2 + 1.0 / self.dy ** 2 + 1.0 / self.dz ** 2) ** 0.5
        return self.cfl_factor / (config.SPEED_OF_LIGHT * inv)


# --- rf metrics -----------------------------------------------------------

class Resonance(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    f_res: float
    rl_min_db: float
    f_low: float
    f_high: float


class TargetMetrics(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    frequency_hz: float
    return_loss_db: float
    vswr: float
    gain_dbi: float
    rl_change_pct: Optional[float] = None
    vswr_change_pct: Optional[float] = None
    gain_change_pct: Optional[float] = None
    regressions: List[str] = []

    @model_validator(mode="after")
    def _check(self) -> "TargetMetrics":
        if not self.vswr >= 1.0:
            raise ValueError("vswr must be >= 1")
        return self


class BandSummary(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    targets: List[TargetMetrics]
    resonances: List[Resonance] = []

    def at(self, frequency_hz: float) -> TargetMetrics:
        for row in self.targets:
            if abs(row.frequency_hz - frequency_hz) <= 1e-6 * max(frequency_hz, 1.0):
                return row
        raise KeyError(frequency_hz)


# --- genetic algorithm ----------------------------------------------------

class Symmetry(str, Enum):
    NONE = "none"
    MIRROR_X = "mirror_x"
    QUAD = "quad"


class RepairPolicy(str, Enum):
    REJECT = "reject"
    RECONNECT = "reconnect"


class GaConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    population_size: int = config.GA_POPULATION
    generations: int = config.GA_GENERATIONS
    crossover_rate: float = config.GA_CROSSOVER
    # None means 1/n^2
    mutation_rate: Optional[float] = None
    tournament_size: int = config.GA_TOURNAMENT
    elitism_count: int = config.GA_ELITISM
    rng_seed: int = config.GA_SEED
    symmetry: Symmetry = Symmetry.MIRROR_X
    repair_policy: RepairPolicy = RepairPolicy.RECONNECT
    grid_order: int = config.GA_GRID_ORDER
    init_one_bias: float = config.GA_INIT_ONE_BIAS

    @field_validator("population_size")
    @classmethod
    def _pop(cls, v: int) -> int:
        if v < 4 or v % 2:
            raise ValueError("population must be even and >= 4")
        return v

    @field_validator("crossover_rate", "init_one_bias")
    @classmethod
    def _unit(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("rates must lie in [0, 1]")
        return v

    @field_validator("mutation_rate")
    @classmethod
    def _mut(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        return v

    @field_validator("rng_seed")
    @classmethod
    def _seed(cls, v: int) -> int:
        if not 0 <= v < 2 ** 64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")
        return v

    @model_validator(mode="after")
    def _check(self) -> "GaConfig":
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.tournament_size < 2:
            raise ValueError("tournament_size must be at least 2")
        if not 1 <= self.elitism_count <= self.population_size:
            raise ValueError("elitism_count must lie in [1, population_size]")
        if self.grid_order < 1:
            raise ValueError("grid_order must be positive")
        return self

    @property
    def effective_mutation_rate(self) -> float:
        if self.mutation_rate is None:
            return 1.0 / (self.grid_order ** 2)
        return self.mutation_rate


class FitnessSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    targets: List[float] = list(config.DEFAULT_TARGETS)
    rl_weights: Optional[List[float]] = None
    gain_weight: float = 1.0
    vswr_cap: float = config.VSWR_CAP
    penalty: float = config.FITNESS_PENALTY
    big_penalty: float = config.FITNESS_BIG_PENALTY
    rl_floor_db: float = config.RL_FLOOR_DB

    @field_validator("targets", "rl_weights", mode="before")
    @classmethod
    def _single(cls, v):
        # a one-element list arrives from config files as a bare value
        if isinstance(v, (str, int, float)):
            return [v]
        return v

    @model_validator(mode="after")
    def _check(self) -> "FitnessSpec":
        if not self.targets:
            raise ValueError("at least one target frequency is required")
        if any(f <= 0 for f in self.targets):
            raise ValueError("target frequencies must be positive")
        weights = self.weights
        if len(weights) != len(self.targets):
            raise ValueError("rl_weights must have one entry per target")
        if any(w < 0 for w in weights) or self.gain_weight < 0:
            raise ValueError("weights must be non-negative")
        if not (any(w > 0 for w in weights) or self.gain_weight > 0):
            raise ValueError("at least one weight must be nonzero")
        return self

    @property
    def weights(self) -> List[float]:
        if self.rl_weights is None:
            return [1.0] * len(self.targets)
        return list(self.rl_weights)


class EvaluationRecord(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    genome_hash: str
    genome_hex: str
    grid_order: int
    fitness: float
    valid: bool = True
    summary: Optional[BandSummary] = None
    wall_time_s: float = 0.0
    error: Optional[str] = None


class GenerationStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    gen: int
    best_fitness: float
    mean_fitness: float
    best_genome_hex: str


# --- run configuration ----------------------------------------------------

class LayoutParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    patch_width: float = config.PATCH_WIDTH
    patch_length: float = config.PATCH_LENGTH
    feed_length: float = config.FEED_LENGTH
    feed_width: float = config.FEED_WIDTH
    inset_depth: float = 0.0
    inset_gap: float = 0.0
    stairs: bool = False
    ground_length: float = config.GROUND_LENGTH
    slot_width: float = config.GROUND_SLOT_WIDTH
    slot_depth: float = config.GROUND_SLOT_DEPTH
    cuts: FractalCutSpec = FractalCutSpec()


class SolverParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    preset: str = config.PRESET
    cell_size: Optional[float] = None
    n_steps: Optional[int] = None
    cfl_factor: float = config.CFL_FACTOR
    pml_layers: int = config.PML_LAYERS
    pulse_center: float = config.PULSE_CENTER
    pulse_bandwidth: float = config.PULSE_BANDWIDTH
    sweep_start: float = config.SWEEP_START
    sweep_stop: float = config.SWEEP_STOP
    sweep_step: float = config.SWEEP_STEP
    dump_fields: bool = False

    @field_validator("preset")
    @classmethod
    def _preset(cls, v: str) -> str:
        if v not in config.GRID_PRESETS:
            raise ValueError(f"preset must be one of {sorted(config.GRID_PRESETS)}")
        return v

    @model_validator(mode="after")
    def _check(self) -> "SolverParams":
        if not 0 < self.sweep_start < self.sweep_stop:
            raise ValueError("sweep must satisfy 0 < start < stop")
        if self.sweep_step <= 0:
            raise ValueError("sweep_step must be positive")
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    substrate: SubstrateSpec = SubstrateSpec()
    layout: LayoutParams = LayoutParams()
    solver: SolverParams = SolverParams()
    ga: GaConfig = GaConfig()
    fitness: FitnessSpec = FitnessSpec()
    output_dir: str = "run"
    threads: int = Field(default=config.WORKERS, ge=1)
    verbosity: int = 0
