//! Soft-label training losses between a prediction probability map and a
//! soft-label map, with single/multi-class masking and per-pixel loss-map
//! export.
//!
//! Per pixel, the valid-class weights are normalized by the valid mass
//! `m` into a proper distribution `p`, the divergence is taken against the
//! prediction, and the pixel contribution is scaled back by `m`. Pixels
//! with no valid mass are excluded, as are multi-class pixels when masking
//! is on. The scalar is the mean over included pixels, summed with a fixed
//! row-major pairwise tree.

use crate::error::{Error, Result};
use crate::label::{LabelImage, SoftLabelMap, SoftPixel};

/// Probabilities below this are clamped before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Tolerance for the per-pixel probability sum at construction.
pub const PROB_SUM_EPSILON: f64 = 1e-5;

/// C×H'×W' per-pixel probability vectors, stored pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMap {
    num_classes: u16,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl PredictionMap {
    /// Builds from pixel-major data (`data[(y*W + x)*C + c]`), validating
    /// that every pixel is a probability vector.
    pub fn from_probabilities(
        height: usize,
        width: usize,
        num_classes: u16,
        data: Vec<f32>,
    ) -> Result<Self> {
        let c = num_classes as usize;
        if height == 0 || width == 0 || c == 0 {
            return Err(Error::InvalidProbabilities(format!(
                "need positive dims and classes, got {height}x{width}, C={c}"
            )));
        }
        if data.len() != height * width * c {
            return Err(Error::InvalidProbabilities(format!(
                "expected {} values, got {}",
                height * width * c,
                data.len()
            )));
        }
        for i in 0..height * width {
            let px = &data[i * c..(i + 1) * c];
            let mut sum = 0.0f64;
            for &v in px {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation {
                        row: i / width,
                        col: i % width,
                        message: format!("probability {v} is negative or non-finite"),
                    });
                }
                sum += v as f64;
            }
            if (sum - 1.0).abs() > PROB_SUM_EPSILON {
                return Err(Error::Validation {
                    row: i / width,
                    col: i % width,
                    message: format!("probabilities sum to {sum}, not 1"),
                });
            }
        }
        Ok(Self {
            num_classes,
            height,
            width,
            data,
        })
    }

    /// Builds from plane-major data (`data[(c*H + y)*W + x]`).
    pub fn from_planes(
        height: usize,
        width: usize,
        num_classes: u16,
        planes: &[f32],
    ) -> Result<Self> {
        let c = num_classes as usize;
        if planes.len() != height * width * c {
            return Err(Error::InvalidProbabilities(format!(
                "expected {} values, got {}",
                height * width * c,
                planes.len()
            )));
        }
        let mut data = vec![0.0f32; planes.len()];
        for cls in 0..c {
            for i in 0..height * width {
                data[i * c + cls] = planes[cls * height * width + i];
            }
        }
        Self::from_probabilities(height, width, num_classes, data)
    }

    /// One-hot prediction from a hard label image. Ignore pixels carry no
    /// prediction and become uniform; they only matter if the reference
    /// soft labels still include them.
    pub fn from_hard_labels(label: &LabelImage) -> Result<Self> {
        let c = label.num_classes() as usize;
        let uniform = 1.0f32 / c as f32;
        let mut data = vec![0.0f32; label.height() * label.width() * c];
        for (i, &id) in label.data().iter().enumerate() {
            if label.is_ignore(id) {
                data[i * c..(i + 1) * c].fill(uniform);
            } else {
                data[i * c + id as usize] = 1.0;
            }
        }
        Self::from_probabilities(label.height(), label.width(), label.num_classes(), data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    /// Probability vector of one pixel.
    pub fn probs(&self, row: usize, col: usize) -> &[f32] {
        let c = self.num_classes as usize;
        let i = row * self.width + col;
        &self.data[i * c..(i + 1) * c]
    }
}

/// Whether multi-class pixels take part in the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McMode {
    IncludeMc,
    ExcludeMc,
}

/// Per-pixel loss values with the inclusion mask applied; excluded pixels
/// carry value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
    included: Vec<bool>,
}

impl LossMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn included(&self, row: usize, col: usize) -> bool {
        self.included[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn included_mask(&self) -> &[bool] {
        &self.included
    }

    pub fn included_count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }
}

fn check_shapes(pred: &PredictionMap, soft: &SoftLabelMap) -> Result<()> {
    if pred.height() != soft.height()
        || pred.width() != soft.width()
        || pred.num_classes() != soft.num_classes()
    {
        return Err(Error::DimensionMismatch(format!(
            "prediction {}x{} C={} vs soft labels {}x{} C={}",
            pred.height(),
            pred.width(),
            pred.num_classes(),
            soft.height(),
            soft.width(),
            soft.num_classes()
        )));
    }
    Ok(())
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// Entropy the per-pixel loss identities are stated against: for weights
/// `w` with valid mass `m`, `-Σ w ln(w/m)`, with `0 ln 0 = 0`. Plain
/// Shannon entropy when the pixel has no ignore mass.
pub fn pixel_entropy(px: &SoftPixel<'_>) -> f64 {
    let m = px.valid_mass();
    if m <= 0.0 {
        return 0.0;
    }
    -px.weights
        .iter()
        .map(|&w| {
            let w = w as f64;
            w * (w / m).ln()
        })
        .sum::<f64>()
}

fn eval_loss(
    pred: &PredictionMap,
    soft: &SoftLabelMap,
    mode: McMode,
    kl: bool,
) -> Result<(f64, LossMap)> {
    check_shapes(pred, soft)?;
    let (h, w) = (soft.height(), soft.width());
    let mut values = vec![0.0f64; h * w];
    let mut included = vec![false; h * w];
    let mut contributions = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let px = soft.pixel(row, col);
            let m = px.valid_mass();
            if px.is_empty() || m <= 0.0 {
                continue;
            }
            if mode == McMode::ExcludeMc && !px.is_single_class() {
                continue;
            }
            let probs = pred.probs(row, col);
            let mut v = 0.0f64;
            for (&cls, &wt) in px.classes.iter().zip(px.weights) {
                let wt = wt as f64;
                let g = (probs[cls as usize] as f64).max(PROB_FLOOR);
                if kl {
                    v += wt * ((wt / m) / g).ln();
                } else {
                    v -= wt * g.ln();
                }
            }
            let i = row * w + col;
            values[i] = v;
            included[i] = true;
            contributions.push(v);
        }
    }
    let scalar = if contributions.is_empty() {
        0.0
    } else {
        pairwise_sum(&contributions) / contributions.len() as f64
    };
    Ok((
        scalar,
        LossMap {
            height: h,
            width: w,
            values,
            included,
        },
    ))
}

/// Kullback-Leibler divergence of the soft labels from the prediction,
/// per pixel and averaged over included pixels.
pub fn kl_loss(pred: &PredictionMap, soft: &SoftLabelMap, mode: McMode) -> Result<(f64, LossMap)> {
    eval_loss(pred, soft, mode, true)
}

/// Cross-entropy between the soft labels and the prediction; satisfies
/// `ce = kl + pixel_entropy` per pixel.
pub fn ce_loss(pred: &PredictionMap, soft: &SoftLabelMap, mode: McMode) -> Result<(f64, LossMap)> {
    eval_loss(pred, soft, mode, false)
}

/// Image-shaped export of a loss map; excluded pixels emit 0. With
/// `normalize`, values are divided by the largest included value (an
/// all-zero map stays zero).
pub fn export_loss_map(map: &LossMap, normalize: bool) -> Vec<f32> {
    let max = if normalize {
        map.values
            .iter()
            .zip(&map.included)
            .filter(|&(_, &inc)| inc)
            .map(|(&v, _)| v)
            .fold(0.0f64, f64::max)
    } else {
        0.0
    };
    map.values
        .iter()
        .zip(&map.included)
        .map(|(&v, &inc)| {
            if !inc {
                0.0
            } else if normalize && max > 0.0 {
                (v / max) as f32
            } else {
                v as f32
            }
        })
        .collect()
}

/// 8-bit grayscale export after `[0, 1]` normalization.
pub fn loss_map_to_gray8(map: &LossMap) -> Vec<u8> {
    export_loss_map(map, true)
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}
