//! Categorical label images and their one-hot / sparse soft-label encodings.
//!
//! A [`LabelImage`] stores one class ID per pixel plus a reserved ignore
//! sentinel for non-trainable pixels. [`SoftLabelMap`] is the sparse
//! per-pixel class-distribution form produced by kernel down-sampling:
//! each pixel holds (class, weight) entries plus an explicit ignore-mass
//! channel, and the weights together with the ignore mass sum to one.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Default reserved sentinel for non-trainable pixels.
pub const DEFAULT_IGNORE_ID: u16 = 255;

/// Tolerance for per-pixel weight sums and single-class tests.
pub const WEIGHT_EPSILON: f64 = 1e-6;

/// H×W categorical class IDs with a reserved ignore sentinel.
///
/// Immutable after construction. Every pixel is `< num_classes` or equals
/// `ignore_id`, and `ignore_id >= num_classes` so the sentinel never
/// collides with a valid class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    height: usize,
    width: usize,
    num_classes: u16,
    ignore_id: u16,
    data: Vec<u16>,
}

impl LabelImage {
    /// Builds a label image from row-major per-pixel class IDs.
    pub fn from_raw(
        height: usize,
        width: usize,
        num_classes: u16,
        ignore_id: u16,
        data: Vec<u16>,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidLabel(format!(
                "dimensions must be at least 1x1, got {height}x{width}"
            )));
        }
        if num_classes == 0 {
            return Err(Error::InvalidLabel("num_classes must be at least 1".into()));
        }
        if ignore_id < num_classes {
            return Err(Error::InvalidLabel(format!(
                "ignore id {ignore_id} collides with the class range 0..{num_classes}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidLabel(format!(
                "expected {} pixels, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|&v| v >= num_classes && v != ignore_id)
        {
            return Err(Error::Validation {
                row: pos / width,
                col: pos % width,
                message: format!(
                    "class id {} outside 0..{num_classes} and not the ignore id {ignore_id}",
                    data[pos]
                ),
            });
        }
        Ok(Self {
            height,
            width,
            num_classes,
            ignore_id,
            data,
        })
    }

    /// Constant-valued image; `value` may be a class ID or the ignore ID.
    pub fn filled(
        height: usize,
        width: usize,
        num_classes: u16,
        ignore_id: u16,
        value: u16,
    ) -> Result<Self> {
        Self::from_raw(height, width, num_classes, ignore_id, vec![value; height * width])
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

    pub fn ignore_id(&self) -> u16 {
        self.ignore_id
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    pub fn is_ignore(&self, id: u16) -> bool {
        id == self.ignore_id
    }

    /// Per-class pixel counts plus the ignore count (last slot has index `num_classes`).
    pub fn class_counts(&self) -> Vec<u64> {
        let c = self.num_classes as usize;
        let mut counts = vec![0u64; c + 1];
        for &v in &self.data {
            if v == self.ignore_id {
                counts[c] += 1;
            } else {
                counts[v as usize] += 1;
            }
        }
        counts
    }
}

/// One-hot view of a [`LabelImage`]: `num_classes` class planes plus one
/// internal ignore plane (the last plane). Kept virtual over the label
/// image rather than materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotMap {
    label: LabelImage,
}

impl OneHotMap {
    pub fn height(&self) -> usize {
        self.label.height
    }

    pub fn width(&self) -> usize {
        self.label.width
    }

    /// Class planes plus the trailing ignore plane.
    pub fn num_planes(&self) -> usize {
        self.label.num_classes as usize + 1
    }

    /// Index of the internal ignore plane.
    pub fn ignore_plane(&self) -> usize {
        self.label.num_classes as usize
    }

    /// Index of the plane holding the 1 for this pixel.
    pub fn hot_plane(&self, row: usize, col: usize) -> usize {
        let id = self.label.get(row, col);
        if self.label.is_ignore(id) {
            self.ignore_plane()
        } else {
            id as usize
        }
    }

    /// Indicator value of one plane at one pixel.
    pub fn value(&self, plane: usize, row: usize, col: usize) -> f32 {
        debug_assert!(plane < self.num_planes());
        if self.hot_plane(row, col) == plane {
            1.0
        } else {
            0.0
        }
    }

    /// Materializes all planes, plane-major row-major, ignore plane last.
    pub fn to_dense(&self) -> Vec<f32> {
        let (h, w) = (self.height(), self.width());
        let planes = self.num_planes();
        let mut out = vec![0.0f32; planes * h * w];
        for row in 0..h {
            for col in 0..w {
                let p = self.hot_plane(row, col);
                out[(p * h + row) * w + col] = 1.0;
            }
        }
        out
    }

    pub fn label(&self) -> &LabelImage {
        &self.label
    }
}

/// Lifts a label image to its one-hot indicator form; ignore pixels set
/// the internal ignore plane.
pub fn encode_one_hot(label: &LabelImage) -> OneHotMap {
    OneHotMap {
        label: label.clone(),
    }
}

/// Borrowed view of one soft-label pixel.
#[derive(Debug, Clone, Copy)]
pub struct SoftPixel<'a> {
    pub classes: &'a [u16],
    pub weights: &'a [f32],
    pub ignore_mass: f32,
}

impl SoftPixel<'_> {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Weight carried by valid classes, `1 - ignore_mass` up to rounding.
    pub fn valid_mass(&self) -> f64 {
        self.weights.iter().map(|&w| w as f64).sum()
    }

    pub fn weight_of(&self, class: u16) -> f32 {
        match self.classes.binary_search(&class) {
            Ok(i) => self.weights[i],
            Err(_) => 0.0,
        }
    }

    /// True when a single valid class carries weight 1 (within epsilon)
    /// and the pixel has no ignore mass.
    pub fn is_single_class(&self) -> bool {
        (self.ignore_mass as f64) < WEIGHT_EPSILON
            && self
                .weights
                .iter()
                .any(|&w| (w as f64 - 1.0).abs() < WEIGHT_EPSILON)
    }
}

/// H'×W' per-pixel sparse class distributions with an explicit ignore-mass
/// channel.
///
/// Canonical form: per pixel, entries are sorted by ascending class ID,
/// weights are strictly positive, and `ignore_mass + Σ weights = 1` within
/// [`WEIGHT_EPSILON`]. Entries are stored flat (CSR-style), so two maps
/// with equal content compare equal field-by-field.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelMap {
    height: usize,
    width: usize,
    num_classes: u16,
    offsets: Vec<u32>,
    classes: Vec<u16>,
    weights: Vec<f32>,
    ignore_mass: Vec<f32>,
    max_entries_hint: usize,
}

impl SoftLabelMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    /// Largest per-pixel entry count in this map.
    pub fn max_entries_hint(&self) -> usize {
        self.max_entries_hint
    }

    pub fn pixel(&self, row: usize, col: usize) -> SoftPixel<'_> {
        debug_assert!(row < self.height && col < self.width);
        let i = row * self.width + col;
        let lo = self.offsets[i] as usize;
        let hi = self.offsets[i + 1] as usize;
        SoftPixel {
            classes: &self.classes[lo..hi],
            weights: &self.weights[lo..hi],
            ignore_mass: self.ignore_mass[i],
        }
    }

    /// Row-major iteration over all pixels.
    pub fn pixels(&self) -> impl Iterator<Item = SoftPixel<'_>> {
        (0..self.height * self.width).map(move |i| {
            let lo = self.offsets[i] as usize;
            let hi = self.offsets[i + 1] as usize;
            SoftPixel {
                classes: &self.classes[lo..hi],
                weights: &self.weights[lo..hi],
                ignore_mass: self.ignore_mass[i],
            }
        })
    }

    /// Builds a map from flat CSR storage, enforcing the full canonical
    /// form: per pixel, class IDs strictly ascending and in range, weights
    /// positive and finite, and weights plus ignore mass summing to 1
    /// within [`WEIGHT_EPSILON`]. Errors name the offending pixel.
    pub(crate) fn from_csr(
        height: usize,
        width: usize,
        num_classes: u16,
        offsets: Vec<u32>,
        classes: Vec<u16>,
        weights: Vec<f32>,
        ignore_mass: Vec<f32>,
    ) -> Result<SoftLabelMap> {
        let n = height * width;
        if height == 0 || width == 0 || num_classes == 0 {
            return Err(Error::InvalidLabel(format!(
                "soft label map needs positive dims and classes, got {height}x{width}, C={num_classes}"
            )));
        }
        if offsets.len() != n + 1
            || ignore_mass.len() != n
            || classes.len() != weights.len()
            || offsets[0] != 0
            || *offsets.last().unwrap() as usize != classes.len()
        {
            return Err(Error::InvalidLabel("inconsistent soft label storage".into()));
        }
        let mut max_entries = 0usize;
        for i in 0..n {
            let (row, col) = (i / width, i % width);
            let lo = offsets[i] as usize;
            let hi = offsets[i + 1] as usize;
            if hi < lo || hi > classes.len() {
                return Err(Error::InvalidLabel("inconsistent soft label offsets".into()));
            }
            let mut sum = 0.0f64;
            for j in lo..hi {
                if classes[j] >= num_classes {
                    return Err(Error::Validation {
                        row,
                        col,
                        message: format!("class id {} outside 0..{num_classes}", classes[j]),
                    });
                }
                if j > lo && classes[j] <= classes[j - 1] {
                    return Err(Error::Validation {
                        row,
                        col,
                        message: "class ids not strictly ascending".into(),
                    });
                }
                let w = weights[j];
                if !w.is_finite() || w <= 0.0 {
                    return Err(Error::Validation {
                        row,
                        col,
                        message: format!("weight {w} for class {} not positive", classes[j]),
                    });
                }
                sum += w as f64;
            }
            let ig = ignore_mass[i];
            if !ig.is_finite() || !(0.0..=1.0).contains(&ig) {
                return Err(Error::Validation {
                    row,
                    col,
                    message: format!("ignore mass {ig} outside [0, 1]"),
                });
            }
            if (sum + ig as f64 - 1.0).abs() > WEIGHT_EPSILON {
                return Err(Error::Validation {
                    row,
                    col,
                    message: format!("weights ({sum}) plus ignore mass ({ig}) do not sum to 1"),
                });
            }
            max_entries = max_entries.max(hi - lo);
        }
        Ok(SoftLabelMap {
            height,
            width,
            num_classes,
            offsets,
            classes,
            weights,
            ignore_mass,
            max_entries_hint: max_entries,
        })
    }

    /// Crops a window, padding outside the source with pure ignore mass.
    pub fn crop_padded(&self, row0: usize, col0: usize, height: usize, width: usize) -> SoftLabelMap {
        let mut b = SoftLabelMapBuilder::new(height, width, self.num_classes)
            .expect("crop dims are validated by callers");
        for r in 0..height {
            for c in 0..width {
                let (sr, sc) = (row0 + r, col0 + c);
                if sr < self.height && sc < self.width {
                    let px = self.pixel(sr, sc);
                    for (&cls, &w) in px.classes.iter().zip(px.weights) {
                        b.add_weight(r, c, cls, w as f64);
                    }
                    b.add_ignore(r, c, px.ignore_mass as f64);
                } else {
                    b.add_ignore(r, c, 1.0);
                }
            }
        }
        b.finish().expect("cropping preserves pixel invariants")
    }
}

/// Accumulating constructor for [`SoftLabelMap`].
///
/// Weights are accumulated in f64 and stored as f32 at [`finish`]; entries
/// are sorted, merged, and zero weights dropped so the result is canonical.
///
/// [`finish`]: SoftLabelMapBuilder::finish
#[derive(Debug)]
pub struct SoftLabelMapBuilder {
    height: usize,
    width: usize,
    num_classes: u16,
    entries: Vec<Vec<(u16, f64)>>,
    ignore: Vec<f64>,
}

impl SoftLabelMapBuilder {
    pub fn new(height: usize, width: usize, num_classes: u16) -> Result<Self> {
        if height == 0 || width == 0 || num_classes == 0 {
            return Err(Error::InvalidLabel(format!(
                "soft label map needs positive dims and classes, got {height}x{width}, C={num_classes}"
            )));
        }
        Ok(Self {
            height,
            width,
            num_classes,
            entries: vec![Vec::new(); height * width],
            ignore: vec![0.0; height * width],
        })
    }

    pub fn add_weight(&mut self, row: usize, col: usize, class: u16, weight: f64) {
        debug_assert!(row < self.height && col < self.width);
        debug_assert!(class < self.num_classes);
        if weight != 0.0 {
            self.entries[row * self.width + col].push((class, weight));
        }
    }

    pub fn add_ignore(&mut self, row: usize, col: usize, weight: f64) {
        debug_assert!(row < self.height && col < self.width);
        self.ignore[row * self.width + col] += weight;
    }

    pub fn finish(self) -> Result<SoftLabelMap> {
        let n = self.height * self.width;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut classes = Vec::new();
        let mut weights = Vec::new();
        let mut ignore_mass = Vec::with_capacity(n);
        let mut max_entries = 0usize;
        offsets.push(0u32);

        for (i, mut pixel) in self.entries.into_iter().enumerate() {
            let (row, col) = (i / self.width, i % self.width);
            pixel.sort_by_key(|&(c, _)| c);
            let mut sum = 0.0f64;
            let mut count = 0usize;
            let mut j = 0;
            while j < pixel.len() {
                let class = pixel[j].0;
                let mut w = 0.0f64;
                while j < pixel.len() && pixel[j].0 == class {
                    w += pixel[j].1;
                    j += 1;
                }
                if class >= self.num_classes {
                    return Err(Error::Validation {
                        row,
                        col,
                        message: format!("class id {class} outside 0..{}", self.num_classes),
                    });
                }
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Validation {
                        row,
                        col,
                        message: format!("non-finite or negative weight {w} for class {class}"),
                    });
                }
                if w > 0.0 {
                    classes.push(class);
                    weights.push(w as f32);
                    sum += w;
                    count += 1;
                }
            }
            let ig = self.ignore[i];
            if !ig.is_finite() || !(0.0..=1.0 + WEIGHT_EPSILON).contains(&ig) {
                return Err(Error::Validation {
                    row,
                    col,
                    message: format!("ignore mass {ig} outside [0, 1]"),
                });
            }
            if (sum + ig - 1.0).abs() > WEIGHT_EPSILON {
                return Err(Error::Validation {
                    row,
                    col,
                    message: format!("weights ({sum}) plus ignore mass ({ig}) do not sum to 1"),
                });
            }
            ignore_mass.push(ig as f32);
            max_entries = max_entries.max(count);
            offsets.push(classes.len() as u32);
        }

        Ok(SoftLabelMap {
            height: self.height,
            width: self.width,
            num_classes: self.num_classes,
            offsets,
            classes,
            weights,
            ignore_mass,
            max_entries_hint: max_entries,
        })
    }
}

/// Raw-ID to train-ID conversion table; undeclared raw IDs map to ignore.
#[derive(Debug, Clone)]
pub struct ClassIdMap {
    table: HashMap<u16, u16>,
    num_train_classes: u16,
    ignore_id: u16,
}

impl ClassIdMap {
    /// `entries` pairs each raw ID with `Some(train_id)` or `None` for ignore.
    pub fn new(
        entries: impl IntoIterator<Item = (u16, Option<u16>)>,
        num_train_classes: u16,
        ignore_id: u16,
    ) -> Result<Self> {
        if num_train_classes == 0 {
            return Err(Error::ClassIdMap("need at least one train class".into()));
        }
        if ignore_id < num_train_classes {
            return Err(Error::ClassIdMap(format!(
                "ignore id {ignore_id} collides with train range 0..{num_train_classes}"
            )));
        }
        let mut table = HashMap::new();
        for (raw, train) in entries {
            let target = match train {
                Some(t) if t >= num_train_classes => {
                    return Err(Error::ClassIdMap(format!(
                        "train id {t} outside 0..{num_train_classes} for raw id {raw}"
                    )));
                }
                Some(t) => t,
                None => ignore_id,
            };
            if table.insert(raw, target).is_some() {
                return Err(Error::ClassIdMap(format!("raw id {raw} declared twice")));
            }
        }
        Ok(Self {
            table,
            num_train_classes,
            ignore_id,
        })
    }

    /// Parses the plain-text table: one `raw_id train_id` pair per line,
    /// with the `ignore` keyword in place of a train ID; `#` starts a
    /// comment. The train class count is the largest declared train ID
    /// plus one.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut max_train = None::<u16>;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (raw, train) = match (parts.next(), parts.next(), parts.next()) {
                (Some(raw), Some(train), None) => (raw, train),
                _ => {
                    return Err(Error::ClassIdMap(format!(
                        "line {}: expected `raw_id train_id`",
                        lineno + 1
                    )));
                }
            };
            let raw: u16 = raw.parse().map_err(|_| {
                Error::ClassIdMap(format!("line {}: bad raw id `{raw}`", lineno + 1))
            })?;
            let train = if train.eq_ignore_ascii_case("ignore") {
                None
            } else {
                let t: u16 = train.parse().map_err(|_| {
                    Error::ClassIdMap(format!("line {}: bad train id `{train}`", lineno + 1))
                })?;
                max_train = Some(max_train.map_or(t, |m: u16| m.max(t)));
                Some(t)
            };
            entries.push((raw, train));
        }
        let num_train = max_train
            .ok_or_else(|| Error::ClassIdMap("no train ids declared".into()))?
            .checked_add(1)
            .ok_or_else(|| Error::ClassIdMap("train id overflow".into()))?;
        let ignore_id = if num_train <= DEFAULT_IGNORE_ID {
            DEFAULT_IGNORE_ID
        } else {
            u16::MAX
        };
        Self::new(entries, num_train, ignore_id)
    }

    pub fn num_train_classes(&self) -> u16 {
        self.num_train_classes
    }

    pub fn ignore_id(&self) -> u16 {
        self.ignore_id
    }

    /// Train ID for a raw ID; undeclared raw IDs yield the ignore ID.
    pub fn map_id(&self, raw: u16) -> u16 {
        self.table.get(&raw).copied().unwrap_or(self.ignore_id)
    }
}

/// Rewrites raw class IDs to train IDs; dimensions are unchanged and
/// input ignore pixels stay ignore.
pub fn remap_ids(label: &LabelImage, map: &ClassIdMap) -> LabelImage {
    let data = label
        .data()
        .iter()
        .map(|&v| {
            if label.is_ignore(v) {
                map.ignore_id()
            } else {
                map.map_id(v)
            }
        })
        .collect();
    LabelImage::from_raw(
        label.height(),
        label.width(),
        map.num_train_classes(),
        map.ignore_id(),
        data,
    )
    .expect("remapped ids are valid by construction")
}

/// Per-pixel argmax export of a soft-label map.
///
/// Ties between valid classes break toward the lowest class ID; a pixel
/// becomes ignore only when its ignore mass strictly exceeds the best
/// valid weight. The output ignore ID is [`DEFAULT_IGNORE_ID`], or
/// `u16::MAX` when the class range covers it.
pub fn harden(soft: &SoftLabelMap) -> LabelImage {
    let ignore_id = if soft.num_classes() <= DEFAULT_IGNORE_ID {
        DEFAULT_IGNORE_ID
    } else {
        u16::MAX
    };
    let mut data = Vec::with_capacity(soft.height() * soft.width());
    for px in soft.pixels() {
        let mut best: Option<(u16, f32)> = None;
        for (&c, &w) in px.classes.iter().zip(px.weights) {
            // strictly-greater keeps the lowest class id on ties
            if best.map_or(true, |(_, bw)| w > bw) {
                best = Some((c, w));
            }
        }
        data.push(match best {
            Some((c, w)) if px.ignore_mass <= w => c,
            _ => ignore_id,
        });
    }
    LabelImage::from_raw(soft.height(), soft.width(), soft.num_classes(), ignore_id, data)
        .expect("hardened ids are valid by construction")
}

/// Per-pixel boolean map, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Marks pixels whose distribution is a pure one-hot: a single valid class
/// carries weight 1 within epsilon and there is no ignore mass.
pub fn is_single_class(soft: &SoftLabelMap) -> Mask {
    Mask {
        height: soft.height(),
        width: soft.width(),
        data: soft.pixels().map(|px| px.is_single_class()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft_from_pixels(
        height: usize,
        width: usize,
        num_classes: u16,
        pixels: &[(&[(u16, f64)], f64)],
    ) -> SoftLabelMap {
        assert_eq!(pixels.len(), height * width);
        let mut b = SoftLabelMapBuilder::new(height, width, num_classes).unwrap();
        for (i, (entries, ignore)) in pixels.iter().enumerate() {
            for &(c, w) in *entries {
                b.add_weight(i / width, i % width, c, w);
            }
            b.add_ignore(i / width, i % width, *ignore);
        }
        b.finish().unwrap()
    }

    #[test]
    fn one_hot_single_pixel() {
        let img = LabelImage::from_raw(1, 1, 4, 255, vec![2]).unwrap();
        let oh = encode_one_hot(&img);
        assert_eq!(oh.num_planes(), 5);
        for p in 0..5 {
            assert_eq!(oh.value(p, 0, 0), if p == 2 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn one_hot_ignore_pixel_sets_ignore_plane() {
        let img = LabelImage::from_raw(1, 1, 4, 255, vec![255]).unwrap();
        let oh = encode_one_hot(&img);
        assert_eq!(oh.hot_plane(0, 0), oh.ignore_plane());
        assert_eq!(oh.value(4, 0, 0), 1.0);
    }

    #[test]
    fn one_hot_plane_counts_match_brute_force() {
        let img = LabelImage::from_raw(2, 2, 3, 255, vec![0, 1, 1, 2]).unwrap();
        let oh = encode_one_hot(&img);
        let mut counts = [0u32; 4];
        for p in 0..oh.num_planes() {
            for r in 0..2 {
                for c in 0..2 {
                    if oh.value(p, r, c) == 1.0 {
                        counts[p] += 1;
                    }
                }
            }
        }
        assert_eq!(counts, [1, 2, 1, 0]);
    }

    #[test]
    fn one_hot_exactly_one_plane_per_pixel_and_total_mass() {
        let img = LabelImage::from_raw(3, 4, 5, 255, vec![0, 1, 2, 3, 4, 255, 0, 1, 2, 3, 4, 255])
            .unwrap();
        let oh = encode_one_hot(&img);
        let mut total = 0.0;
        for r in 0..3 {
            for c in 0..4 {
                let s: f32 = (0..oh.num_planes()).map(|p| oh.value(p, r, c)).sum();
                assert_eq!(s, 1.0);
                total += s;
            }
        }
        assert_eq!(total, 12.0);
    }

    #[test]
    fn one_hot_argmax_roundtrip() {
        let data: Vec<u16> = (0..24).map(|i| if i % 7 == 0 { 255 } else { i % 5 }).collect();
        let img = LabelImage::from_raw(4, 6, 5, 255, data).unwrap();
        let oh = encode_one_hot(&img);
        for r in 0..4 {
            for c in 0..6 {
                let plane = oh.hot_plane(r, c);
                let id = if plane == oh.ignore_plane() {
                    255
                } else {
                    plane as u16
                };
                assert_eq!(id, img.get(r, c));
            }
        }
    }

    #[test]
    fn remap_identity() {
        let map = ClassIdMap::new((0..3).map(|i| (i, Some(i))), 3, 255).unwrap();
        let img = LabelImage::from_raw(2, 2, 3, 255, vec![0, 1, 2, 1]).unwrap();
        assert_eq!(remap_ids(&img, &map), img);
    }

    #[test]
    fn remap_constant_and_undeclared() {
        let map = ClassIdMap::new([(7u16, Some(0u16))], 1, 255).unwrap();
        let img = LabelImage::from_raw(2, 2, 8, 255, vec![7, 7, 7, 7]).unwrap();
        let out = remap_ids(&img, &map);
        assert!(out.data().iter().all(|&v| v == 0));

        let img = LabelImage::from_raw(1, 2, 8, 255, vec![7, 3]).unwrap();
        let out = remap_ids(&img, &map);
        assert_eq!(out.data(), &[0, 255]);
    }

    #[test]
    fn remap_cityscapes_style_counts_match_recount() {
        // 34 raw ids onto 19 train ids, checked against a brute-force recount
        let pairs: [(u16, u16); 19] = [
            (7, 0),
            (8, 1),
            (11, 2),
            (12, 3),
            (13, 4),
            (17, 5),
            (19, 6),
            (20, 7),
            (21, 8),
            (22, 9),
            (23, 10),
            (24, 11),
            (25, 12),
            (26, 13),
            (27, 14),
            (28, 15),
            (31, 16),
            (32, 17),
            (33, 18),
        ];
        let map = ClassIdMap::new(pairs.iter().map(|&(r, t)| (r, Some(t))), 19, 255).unwrap();
        let data: Vec<u16> = (0..64 * 64).map(|i| ((i * 31 + 7) % 34) as u16).collect();
        let img = LabelImage::from_raw(64, 64, 34, 255, data.clone()).unwrap();
        let out = remap_ids(&img, &map);

        let mut expected = vec![0u64; 20];
        for &raw in &data {
            match pairs.iter().find(|&&(r, _)| r == raw) {
                Some(&(_, t)) => expected[t as usize] += 1,
                None => expected[19] += 1,
            }
        }
        assert_eq!(out.class_counts(), expected);
    }

    #[test]
    fn class_id_map_parse() {
        let text = "# comment\n7 0\n8 1\n3 ignore\n";
        let map = ClassIdMap::parse(text).unwrap();
        assert_eq!(map.num_train_classes(), 2);
        assert_eq!(map.map_id(7), 0);
        assert_eq!(map.map_id(8), 1);
        assert_eq!(map.map_id(3), 255);
        assert_eq!(map.map_id(99), 255);
        assert!(ClassIdMap::parse("7 bogus\n").is_err());
        assert!(ClassIdMap::parse("").is_err());
    }

    #[test]
    fn harden_pure_and_tie() {
        let soft = soft_from_pixels(1, 2, 3, &[(&[(2, 1.0)], 0.0), (&[(0, 0.5), (1, 0.5)], 0.0)]);
        let hard = harden(&soft);
        assert_eq!(hard.data(), &[2, 0]);
    }

    #[test]
    fn harden_ignore_dominates_only_strictly() {
        let soft = soft_from_pixels(
            1,
            3,
            2,
            &[
                (&[(1, 0.25)], 0.75),       // ignore wins strictly
                (&[(1, 0.5)], 0.5),         // tie goes to the valid class
                (&[], 1.0),                 // fully ignored
            ],
        );
        assert_eq!(harden(&soft).data(), &[255, 1, 255]);
    }

    #[test]
    fn harden_matches_brute_force_argmax() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let c = 5u16;
        let mut b = SoftLabelMapBuilder::new(8, 8, c).unwrap();
        let mut dense = vec![[0.0f64; 6]; 64];
        for (i, px) in dense.iter_mut().enumerate() {
            let k = rng.gen_range(1..=4usize);
            let mut raw: Vec<f64> = (0..k + 1).map(|_| rng.gen_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter_mut().for_each(|w| *w /= sum);
            let mut ids: Vec<u16> = (0..c).collect();
            for j in (1..ids.len()).rev() {
                ids.swap(j, rng.gen_range(0..=j));
            }
            for (j, &w) in raw[..k].iter().enumerate() {
                b.add_weight(i / 8, i % 8, ids[j], w);
                px[ids[j] as usize] += w;
            }
            b.add_ignore(i / 8, i % 8, raw[k]);
            px[5] += raw[k];
        }
        let soft = b.finish().unwrap();
        let hard = harden(&soft);
        for (i, px) in dense.iter().enumerate() {
            let mut best = 0usize;
            for j in 1..5 {
                if px[j] > px[best] {
                    best = j;
                }
            }
            let expected = if px[5] > px[best] { 255 } else { best as u16 };
            let got = hard.data()[i];
            assert_eq!(got, expected, "pixel {i}: dense {px:?}");
        }
    }

    #[test]
    fn single_class_examples() {
        let soft = soft_from_pixels(
            1,
            3,
            4,
            &[
                (&[(3, 1.0)], 0.0),
                (&[(0, 0.75), (1, 0.25)], 0.0),
                (&[(2, 0.5)], 0.5),
            ],
        );
        let mask = is_single_class(&soft);
        assert_eq!(mask.data(), &[true, false, false]);
        assert_eq!(mask.count_true(), 1);
    }

    #[test]
    fn builder_rejects_bad_pixels() {
        let mut b = SoftLabelMapBuilder::new(1, 1, 2).unwrap();
        b.add_weight(0, 0, 0, 0.5);
        assert!(matches!(
            b.finish(),
            Err(Error::Validation { row: 0, col: 0, .. })
        ));

        let mut b = SoftLabelMapBuilder::new(1, 2, 2).unwrap();
        b.add_weight(0, 0, 0, 1.0);
        b.add_weight(0, 1, 1, 0.4);
        b.add_ignore(0, 1, 0.7);
        assert!(matches!(
            b.finish(),
            Err(Error::Validation { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn builder_merges_and_sorts_entries() {
        let mut b = SoftLabelMapBuilder::new(1, 1, 5).unwrap();
        b.add_weight(0, 0, 3, 0.25);
        b.add_weight(0, 0, 1, 0.5);
        b.add_weight(0, 0, 3, 0.25);
        let soft = b.finish().unwrap();
        let px = soft.pixel(0, 0);
        assert_eq!(px.classes, &[1, 3]);
        assert_eq!(px.weights, &[0.5, 0.5]);
        assert_eq!(soft.max_entries_hint(), 2);
    }

    #[test]
    fn label_image_validation() {
        assert!(LabelImage::from_raw(0, 1, 2, 255, vec![]).is_err());
        assert!(LabelImage::from_raw(1, 1, 0, 255, vec![0]).is_err());
        assert!(LabelImage::from_raw(1, 1, 300, 255, vec![0]).is_err()); // ignore collides
        assert!(LabelImage::from_raw(1, 1, 300, 65535, vec![0]).is_ok());
        assert!(matches!(
            LabelImage::from_raw(2, 2, 3, 255, vec![0, 1, 9, 2]),
            Err(Error::Validation { row: 1, col: 0, .. })
        ));
    }
}
