from .core.geometry.boundary_curve import BoundaryCurve
from .core.geometry.raster import BinaryImage, rasterize, threshold

from .core.shape_generator import ShapeConfig, ShapeGenerator
from .core.materials import FluidMaterial, ElasticMaterial, WATER, STEEL, STEEL_ELASTIC, ALUMINUM_ELASTIC

from .core.scatter import SolverConfig, ScatteringSimulation, FarFieldSet, simulate_sample
from .core.nn import MlpModel, TrainConfig
from .core.models import AaeModel, FnnModel, InnModel, train_aae, train_fnn, train_inn, invert, predict

from .errors import ScatterShapeError, ConfigError
