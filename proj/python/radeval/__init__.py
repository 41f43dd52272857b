"""Chest-radiograph detection evaluation toolkit.

Thin python surface over the C++ core: IoU/mAP metrics, YOLO-style decode and
NMS, DICOM ingestion, and the reference network blocks.
"""

from ._radeval import (  # noqa: F401
    AnchorLevel,
    BBox,
    BoxFormat,
    ContractError,
    Detection,
    DicomImage,
    EvalReport,
    GrayImage,
    GroundTruthBox,
    LetterboxTransform,
    MalformedAnnotationError,
    MalformedFileError,
    MatchFlag,
    MatchOutcome,
    Photometric,
    PRPoint,
    StudyClass,
    StudyLabel,
    UndefinedMetricError,
    UnsupportedSyntaxError,
    average_precision,
    backbone_forward,
    box_area,
    confusion_matrix,
    convert_box,
    decode_head,
    evaluate,
    iou,
    letterbox_apply,
    letterbox_invert,
    load_study_labels,
    match_detections,
    mean_average_precision,
    nms,
    normalize_pixels,
    parse_dicom,
    pr_curve,
    precision_recall_from_confusion,
    run_block_invariants,
    to_model_input,
)

__version__ = "0.1.0"
