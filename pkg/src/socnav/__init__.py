"""Learning-from-demonstration path planning for robot social navigation."""

from .scenario import (
    Path,
    Person,
    Pose2D,
    Rect,
    Scenario,
    Segment,
    load_path_csv,
    load_scenario,
    resample_path,
    save_path_csv,
    save_scenario,
)
from .grid import FloatGrid, GridSpec, load_fgrid, save_fgrid, save_pgm
from .raster import encode_input_raster, rasterize_path
from .features import (
    FEATURE_NAMES,
    FeatureParams,
    WeightVector,
    feature_count,
    feature_vector,
    linear_cost,
    load_weights_csv,
    save_weights_csv,
)
from .planner import (
    CorridorDiscountedFeatures,
    LinearFeatures,
    PlannerParams,
    PlanResult,
    PlanStats,
    PredictionGrid,
    RrtStar,
    Sampler,
    edge_cost,
    plan,
    state_cost,
)
from .metrics import (
    EvalReport,
    cdf_export,
    directed_distance,
    evaluate_paths,
    feature_count_difference,
    mu,
)
from .irl import (
    Demonstration,
    IrlConfig,
    load_demonstrations,
    rlt_train,
    rtirl_train,
    save_demonstrations,
    validate_demonstration,
)
from .dataset import (
    DemonstrationBundle,
    GenerationError,
    GeneratorConfig,
    ManifestEntry,
    build_dataset,
    generate_demonstration,
    generate_scenario,
    load_manifest,
)

__version__ = "0.1.0"
