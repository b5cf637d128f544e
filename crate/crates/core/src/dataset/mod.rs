//! Ground-truth ingestion, stratified splitting, box-aware augmentation,
//! anchor statistics and AP evaluation.

mod anchors;
mod annotations;
mod augment;
mod eval;
mod split;

pub use anchors::{anchor_stats, AnchorReport, HISTOGRAM_BIN_WIDTH, MAX_LLOYD_ITERATIONS};
pub use annotations::{
    format_annotations, parse_annotation_file, parse_annotations, write_annotations, ImageAnnotations,
    IngestReport,
};
pub use augment::{crop_with_boxes, resize_with_boxes, Crop, MultiScaleRange};
pub use eval::{evaluate_map, ApReport, PROTOCOL};
pub use split::{bucket_index, stratified_split, GroupReport, SplitResult, BUCKET_NAMES};
