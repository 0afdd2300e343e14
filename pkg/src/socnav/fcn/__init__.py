from .network import (
    LayerSpec,
    NetworkModel,
    PARAM_COUNT_RANGE,
    build_network,
    build_reference_network,
    forward,
    load_model,
    loss_and_gradient,
    mse_only,
    reference_specs,
    save_model,
)
from .training import TrainingDiverged, TrainingReport, dataset_mse, predict, train
