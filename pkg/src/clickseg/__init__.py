"""Click-driven interactive segmentation: session state, click encoders,
predictors, the click-count benchmark, and an annotation HTTP service."""

from .core import (
    Click,
    InteractionState,
    NEGATIVE,
    OutOfBoundsError,
    POSITIVE,
    ShapeError,
    binarize,
    clone_state,
    new_session,
    push_click,
    undo,
)
from .encoding import ClickEncoder, encode_disks, encode_distance, parse_encoding_spec
from .evaluation import EvalConfig, EvalReport, evaluate_instance, mean_iou_curve, run_noc
from .imageproc import (
    connected_components,
    distance_transform,
    erode,
    erode_to_quarter,
    interior_distance,
    iou,
    rasterize_polygon,
)
from .losses import LossConfig, LossResult, bce, compute_loss, focal, nfl, soft_iou
from .predictors import (
    FeatherweightModel,
    GeodesicConfig,
    GeodesicPredictor,
    OraclePredictor,
    PredictorInput,
    RemotePredictor,
    TrainConfig,
    load_featherweight,
    save_featherweight,
    train_featherweight,
)
from .rle import decode_mask_rle, encode_mask_rle
from .sampling import (
    SamplingConfig,
    error_regions,
    generate_training_interaction,
    sample_iterative_click,
    sample_random_clicks,
    simulate_eval_click,
)
from .datasets import (
    InstanceRecord,
    MergeConfig,
    load_dataset,
    make_synthetic_suite,
    merge_sources,
    save_dataset,
)

__version__ = "0.1.0"
