"""probfuse: misalignment-tolerant context channels for object detection.

Binary context masks (rasterized from DOTA-style annotations) become
probability maps that stay informative when the mask is shifted against the
image; maps are fused with RGB into a compact checksummed tensor file, and
detection output is scored with IoU-matched average precision.
"""

__version__ = "0.1.0"

from .distance_transform import DistanceField, edt, edt_bruteforce
from .errors import (
    AnnotationParseError,
    EmptyMaskError,
    FusedFormatError,
    ManifestError,
    MaskFormatError,
    ParameterError,
    ProbfuseError,
    ShapeError,
)
from .evaluation import (
    Box,
    ClassResult,
    Detection,
    EvalReport,
    GroundTruth,
    MatchResult,
    average_precision,
    envelope_box,
    evaluate,
    iou,
    load_ground_truth,
    match_detections,
    parse_detections,
    pr_curve,
)
from .fusion import (
    ContextMapping,
    FusedTensor,
    build_fused,
    read_fused,
    read_rgb,
    write_fused,
)
from .mask_io import (
    DOTA_CLASSES,
    AnnotationRecord,
    BinaryMask,
    parse_annotations,
    rasterize,
    read_annotation_file,
    read_mask,
    write_mask,
)
from .misalignment import ShiftPolicy, ShiftSpec, apply_shift, sample_shift
from .pipeline import (
    DatasetItem,
    PipelineConfig,
    mapping_from_json,
    read_manifest,
    regenerate,
    run_pipeline,
    scan_dataset,
    write_manifest,
)
from .probability_maps import (
    Eq2Params,
    ProbabilityMap,
    eq1_field,
    eq2_field,
    eq2_field_bruteforce,
    prob_map_eq1,
    prob_map_eq2,
    prob_map_eq2_bruteforce,
    read_map_png,
    write_map_png,
)

__all__ = [
    "__version__",
    # errors
    "ProbfuseError",
    "AnnotationParseError",
    "MaskFormatError",
    "EmptyMaskError",
    "ParameterError",
    "ShapeError",
    "FusedFormatError",
    "ManifestError",
    # masks and annotations
    "DOTA_CLASSES",
    "AnnotationRecord",
    "BinaryMask",
    "parse_annotations",
    "read_annotation_file",
    "rasterize",
    "read_mask",
    "write_mask",
    # distance transform
    "DistanceField",
    "edt",
    "edt_bruteforce",
    # probability maps
    "Eq2Params",
    "ProbabilityMap",
    "eq1_field",
    "eq2_field",
    "eq2_field_bruteforce",
    "prob_map_eq1",
    "prob_map_eq2",
    "prob_map_eq2_bruteforce",
    "read_map_png",
    "write_map_png",
    # misalignment
    "ShiftSpec",
    "ShiftPolicy",
    "apply_shift",
    "sample_shift",
    # fusion
    "ContextMapping",
    "FusedTensor",
    "build_fused",
    "read_rgb",
    "read_fused",
    "write_fused",
    # pipeline
    "DatasetItem",
    "PipelineConfig",
    "mapping_from_json",
    "scan_dataset",
    "run_pipeline",
    "regenerate",
    "read_manifest",
    "write_manifest",
    # evaluation
    "Box",
    "Detection",
    "GroundTruth",
    "MatchResult",
    "ClassResult",
    "EvalReport",
    "iou",
    "match_detections",
    "average_precision",
    "pr_curve",
    "evaluate",
    "parse_detections",
    "envelope_box",
    "load_ground_truth",
]
