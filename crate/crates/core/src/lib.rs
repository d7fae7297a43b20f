//! Paired down-sampling for semantic-segmentation data: one resampling
//! kernel applied to color channels and to one-hot label planes, producing
//! per-pixel sparse soft labels, plus the soft-label losses, conservation
//! metrics, augmentation pipeline, and container format built on top.

pub mod augment;
pub mod error;
pub mod format;
pub mod label;
pub mod loss;
pub mod metrics;
pub mod resample;

pub use error::{Error, Result};
pub use label::{
    encode_one_hot, harden, is_single_class, remap_ids, ClassIdMap, LabelImage, Mask, OneHotMap,
    SoftLabelMap, SoftLabelMapBuilder, SoftPixel, DEFAULT_IGNORE_ID, WEIGHT_EPSILON,
};
pub use resample::{
    downsample_color, downsample_labels, downsample_labels_nn, label_mass_exact, resample_soft,
    taps_for, upsample_color, upsample_soft, Alignment, ColorImage, ExactClassMass, KernelKind,
    KernelSpec, Scale, Tap, TapSet,
};
