//! Resampling kernels applied identically to color channels and one-hot
//! label planes.
//!
//! One [`KernelSpec`] instance drives both [`downsample_color`] and
//! [`downsample_labels`]: for a given output pixel the two paths read the
//! same source taps with the same weights, which is the pairing guarantee
//! the rest of the crate builds on. Tap positions are derived in exact
//! integer arithmetic from the rational scale, so grid decisions never
//! depend on floating-point rounding.
//!
//! Conventions:
//! - `half_pixel_center` maps output index `t` to source coordinate
//!   `s = (t + 0.5)/gamma - 0.5`; `top_left` maps to `s = t/gamma`.
//! - bilinear splits weight between `floor(s)` and `floor(s)+1` by the
//!   fractional part; nearest rounds half down; area weights each source
//!   pixel by its overlap with the output pixel footprint of side
//!   `1/gamma` (the footprint is geometric, so both alignments coincide).
//! - source coordinates are clamped to the image border; coincident
//!   clamped taps merge, keeping weights normalized without extra terms.
//! - output size is `floor(gamma * size)` per axis with a minimum of 1.

use crate::error::{Error, Result};
use crate::label::{LabelImage, SoftLabelMap, SoftLabelMapBuilder};

/// Resampling kernel family; all members have nonnegative weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Nearest,
    Bilinear,
    Area,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Nearest => "nearest",
            KernelKind::Bilinear => "bilinear",
            KernelKind::Area => "area",
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(KernelKind::Nearest),
            "bilinear" => Ok(KernelKind::Bilinear),
            "area" => Ok(KernelKind::Area),
            other => Err(Error::Config(format!(
                "unknown kernel kind `{other}` (expected nearest|bilinear|area)"
            ))),
        }
    }
}

/// Output-grid alignment convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alignment {
    HalfPixelCenter,
    TopLeft,
}

impl Alignment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Alignment::HalfPixelCenter => "half_pixel_center",
            Alignment::TopLeft => "top_left",
        }
    }
}

impl std::fmt::Display for Alignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Alignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half_pixel_center" => Ok(Alignment::HalfPixelCenter),
            "top_left" => Ok(Alignment::TopLeft),
            other => Err(Error::Config(format!(
                "unknown alignment `{other}` (expected half_pixel_center|top_left)"
            ))),
        }
    }
}

/// Exact rational scale factor, reduced, with `0 < gamma <= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale {
    num: u32,
    den: u32,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Scale {
    pub const IDENTITY: Scale = Scale { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidScale(format!(
                "scale {num}/{den} must be positive"
            )));
        }
        let g = gcd(num as u64, den as u64) as u32;
        let (num, den) = (num / g, den / g);
        if num > 2 * den {
            return Err(Error::InvalidScale(format!(
                "scale {num}/{den} exceeds the supported maximum of 2"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn numerator(&self) -> u32 {
        self.num
    }

    pub fn denominator(&self) -> u32 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_upscale(&self) -> bool {
        self.num > self.den
    }

    /// True when `1/gamma` is an integer.
    pub fn inverse_is_integer(&self) -> bool {
        self.num == 1
    }

    /// `max(1, floor(gamma * len))`.
    pub fn apply_floor(&self, len: usize) -> usize {
        ((len as u64 * self.num as u64) / self.den as u64).max(1) as usize
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_part = |p: &str| -> Result<u32> {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidScale(format!("cannot parse `{s}` as a rational")))
        };
        match s.split_once('/') {
            Some((n, d)) => Scale::new(parse_part(n)?, parse_part(d)?),
            None => Scale::new(parse_part(s)?, 1),
        }
    }
}

/// One resampling configuration: kernel kind, exact scale, and alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub scale: Scale,
    pub alignment: Alignment,
}

impl KernelSpec {
    /// Kernel with the default half-pixel-center alignment.
    pub fn new(kind: KernelKind, scale: Scale) -> Self {
        Self {
            kind,
            scale,
            alignment: Alignment::HalfPixelCenter,
        }
    }

    pub fn with_alignment(mut self, alignment: Alignment) -> Self {
        self.alignment = alignment;
        self
    }

    /// Output extent for a source extent, per axis `max(1, floor(gamma * len))`.
    pub fn output_size(&self, in_size: (usize, usize)) -> (usize, usize) {
        (
            self.scale.apply_floor(in_size.0),
            self.scale.apply_floor(in_size.1),
        )
    }
}

/// One source tap of a 2-D tap set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

/// Explicit realization of the kernel for one output pixel: the weighted
/// source taps, in row-major order, with weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TapSet {
    pub target: (usize, usize),
    pub taps: Vec<Tap>,
}

/// Per-axis taps: contiguous source indices from `start` with positive
/// weights. `exact_num[i] / exact_den` is the weight as an exact rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct AxisTaps {
    pub start: usize,
    pub exact_num: Vec<u64>,
    pub exact_den: u64,
}

impl AxisTaps {
    pub fn len(&self) -> usize {
        self.exact_num.len()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.exact_num[i] as f64 / self.exact_den as f64
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}

/// Source coordinate of output index `t` as the exact rational `sn/sd`.
fn source_coord(scale: Scale, alignment: Alignment, t: usize) -> (i64, i64) {
    let (num, den) = (scale.num as i64, scale.den as i64);
    let t = t as i64;
    match alignment {
        // s = (t + 1/2) * den/num - 1/2
        Alignment::HalfPixelCenter => ((2 * t + 1) * den - num, 2 * num),
        // s = t * den/num
        Alignment::TopLeft => (t * den, num),
    }
}

fn axis_taps(kernel: &KernelSpec, in_len: usize, t: usize) -> AxisTaps {
    let clamp = |p: i64| -> usize { p.clamp(0, in_len as i64 - 1) as usize };
    match kernel.kind {
        KernelKind::Nearest => {
            let (sn, sd) = source_coord(kernel.scale, kernel.alignment, t);
            // round half down: ceil(s - 1/2)
            let p = ceil_div(2 * sn - sd, 2 * sd);
            AxisTaps {
                start: clamp(p),
                exact_num: vec![1],
                exact_den: 1,
            }
        }
        KernelKind::Bilinear => {
            let (sn, sd) = source_coord(kernel.scale, kernel.alignment, t);
            let floor = sn.div_euclid(sd);
            let rem = sn.rem_euclid(sd);
            let sd_u = sd as u64;
            if rem == 0 {
                return AxisTaps {
                    start: clamp(floor),
                    exact_num: vec![sd_u],
                    exact_den: sd_u,
                };
            }
            let (lo, hi) = (clamp(floor), clamp(floor + 1));
            if lo == hi {
                AxisTaps {
                    start: lo,
                    exact_num: vec![sd_u],
                    exact_den: sd_u,
                }
            } else {
                AxisTaps {
                    start: lo,
                    exact_num: vec![(sd - rem) as u64, rem as u64],
                    exact_den: sd_u,
                }
            }
        }
        KernelKind::Area => {
            // footprint [t*den, (t+1)*den) over source pixels of width num,
            // in units of 1/num of a source pixel
            let (num, den) = (kernel.scale.num as u64, kernel.scale.den as u64);
            let lo = t as u64 * den;
            let hi = ((t as u64 + 1) * den).min(in_len as u64 * num);
            debug_assert!(hi > lo);
            let i_lo = lo / num;
            let i_hi = (hi - 1) / num;
            let mut exact_num = Vec::with_capacity((i_hi - i_lo + 1) as usize);
            for i in i_lo..=i_hi {
                let a = (i * num).max(lo);
                let b = ((i + 1) * num).min(hi);
                exact_num.push(b - a);
            }
            AxisTaps {
                start: i_lo as usize,
                exact_num,
                exact_den: hi - lo,
            }
        }
    }
}

fn plan(kernel: &KernelSpec, out_len: usize, in_len: usize) -> Vec<AxisTaps> {
    (0..out_len).map(|t| axis_taps(kernel, in_len, t)).collect()
}

/// Taps of `kernel` for one output pixel, given the source and output
/// extents. The same taps drive the color and the label path.
pub fn taps_for(
    kernel: &KernelSpec,
    out_size: (usize, usize),
    in_size: (usize, usize),
    target: (usize, usize),
) -> Result<TapSet> {
    if out_size != kernel.output_size(in_size) {
        return Err(Error::Inconsistent(format!(
            "output size {}x{} does not match kernel output {}x{} for input {}x{}",
            out_size.0,
            out_size.1,
            kernel.output_size(in_size).0,
            kernel.output_size(in_size).1,
            in_size.0,
            in_size.1
        )));
    }
    let (u, v) = target;
    if u >= out_size.0 || v >= out_size.1 {
        return Err(Error::TargetOutOfRange {
            row: u,
            col: v,
            height: out_size.0,
            width: out_size.1,
        });
    }
    let rows = axis_taps(kernel, in_size.0, u);
    let cols = axis_taps(kernel, in_size.1, v);
    let mut taps = Vec::with_capacity(rows.len() * cols.len());
    for i in 0..rows.len() {
        for j in 0..cols.len() {
            taps.push(Tap {
                row: rows.start + i,
                col: cols.start + j,
                weight: rows.weight(i) * cols.weight(j),
            });
        }
    }
    Ok(TapSet { target, taps })
}

/// H×W image with three real-valued channels in `[0, 1]` after 8-bit
/// ingestion, interleaved row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ColorImage {
    pub const CHANNELS: usize = 3;

    pub fn from_raw(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::DimensionMismatch(format!(
                "color image needs positive dims, got {height}x{width}"
            )));
        }
        if data.len() != height * width * Self::CHANNELS {
            return Err(Error::DimensionMismatch(format!(
                "expected {} samples, got {}",
                height * width * Self::CHANNELS,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::DimensionMismatch(
                "color image contains non-finite samples".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: [f32; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * Self::CHANNELS);
        for _ in 0..height * width {
            data.extend_from_slice(&value);
        }
        Self::from_raw(height, width, data)
    }

    /// Converts interleaved 8-bit RGB to `[0, 1]` reals.
    pub fn from_u8_rgb(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != height * width * Self::CHANNELS {
            return Err(Error::DimensionMismatch(format!(
                "expected {} bytes, got {}",
                height * width * Self::CHANNELS,
                bytes.len()
            )));
        }
        let data = bytes.iter().map(|&b| b as f32 / 255.0).collect();
        Self::from_raw(height, width, data)
    }

    /// Quantizes back to interleaved 8-bit RGB (round, clamp).
    pub fn to_u8_rgb(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f32; 3] {
        let p = (row * self.width + col) * Self::CHANNELS;
        [self.data[p], self.data[p + 1], self.data[p + 2]]
    }

    /// Crops a window, zero-filling outside the source.
    pub fn crop_padded(&self, row0: usize, col0: usize, height: usize, width: usize) -> ColorImage {
        let mut data = vec![0.0f32; height * width * Self::CHANNELS];
        for r in 0..height {
            let sr = row0 + r;
            if sr >= self.height {
                break;
            }
            for c in 0..width {
                let sc = col0 + c;
                if sc >= self.width {
                    break;
                }
                let dst = (r * width + c) * Self::CHANNELS;
                let src = (sr * self.width + sc) * Self::CHANNELS;
                data[dst..dst + 3].copy_from_slice(&self.data[src..src + 3]);
            }
        }
        ColorImage {
            height,
            width,
            data,
        }
    }
}

/// Resamples color channels with the kernel's tap-weighted sums.
///
/// Accepts any supported scale; [`upsample_color`] adds the upscale guard.
pub fn downsample_color(img: &ColorImage, kernel: &KernelSpec) -> Result<ColorImage> {
    let (oh, ow) = kernel.output_size((img.height, img.width));
    let rows = plan(kernel, oh, img.height);
    let cols = plan(kernel, ow, img.width);
    let mut out = vec![0.0f32; oh * ow * ColorImage::CHANNELS];
    let src = &img.data;
    for (u, rt) in rows.iter().enumerate() {
        for (v, ct) in cols.iter().enumerate() {
            let mut acc = [0.0f64; 3];
            for i in 0..rt.len() {
                let wy = rt.weight(i);
                let row_base = (rt.start + i) * img.width;
                for j in 0..ct.len() {
                    let w = wy * ct.weight(j);
                    let p = (row_base + ct.start + j) * 3;
                    acc[0] += w * src[p] as f64;
                    acc[1] += w * src[p + 1] as f64;
                    acc[2] += w * src[p + 2] as f64;
                }
            }
            let q = (u * ow + v) * 3;
            out[q] = acc[0] as f32;
            out[q + 1] = acc[1] as f32;
            out[q + 2] = acc[2] as f32;
        }
    }
    ColorImage::from_raw(oh, ow, out)
}

/// Resamples a label image into per-pixel class proportions using exactly
/// the taps of [`downsample_color`] for the same kernel; tap weights
/// accumulate per class ID, with ignore pixels feeding the ignore-mass
/// channel.
pub fn downsample_labels(label: &LabelImage, kernel: &KernelSpec) -> Result<SoftLabelMap> {
    let (oh, ow) = kernel.output_size((label.height(), label.width()));
    let rows = plan(kernel, oh, label.height());
    let cols = plan(kernel, ow, label.width());
    let c = label.num_classes() as usize;
    let width = label.width();
    let data = label.data();
    let ignore_id = label.ignore_id();

    // scratch slot c is the ignore channel
    let mut scratch = vec![0.0f64; c + 1];
    let mut touched: Vec<u32> = Vec::new();

    let mut offsets = Vec::with_capacity(oh * ow + 1);
    offsets.push(0u32);
    let mut classes = Vec::new();
    let mut weights = Vec::new();
    let mut ignore_mass = Vec::with_capacity(oh * ow);
    let mut max_entries = 0usize;

    for rt in &rows {
        for ct in &cols {
            touched.clear();
            for i in 0..rt.len() {
                let wy = rt.weight(i);
                let row_base = (rt.start + i) * width;
                for j in 0..ct.len() {
                    let id = data[row_base + ct.start + j];
                    let slot = if id == ignore_id { c } else { id as usize };
                    if scratch[slot] == 0.0 {
                        touched.push(slot as u32);
                    }
                    scratch[slot] += wy * ct.weight(j);
                }
            }
            touched.sort_unstable();
            let mut ig = 0.0f64;
            let mut count = 0usize;
            for &slot in &touched {
                let w = scratch[slot as usize];
                scratch[slot as usize] = 0.0;
                if slot as usize == c {
                    ig = w;
                } else {
                    classes.push(slot as u16);
                    weights.push(w as f32);
                    count += 1;
                }
            }
            ignore_mass.push(ig as f32);
            max_entries = max_entries.max(count);
            offsets.push(classes.len() as u32);
        }
    }

    SoftLabelMap::from_csr(oh, ow, label.num_classes(), offsets, classes, weights, ignore_mass)
}

/// Nearest-neighbour baseline: picks the single tapped source label per
/// output pixel, keeping labels categorical.
pub fn downsample_labels_nn(label: &LabelImage, kernel: &KernelSpec) -> Result<LabelImage> {
    if kernel.kind != KernelKind::Nearest {
        return Err(Error::KernelKindMismatch {
            expected: KernelKind::Nearest.as_str(),
            found: kernel.kind.as_str(),
        });
    }
    let (oh, ow) = kernel.output_size((label.height(), label.width()));
    let rows = plan(kernel, oh, label.height());
    let cols = plan(kernel, ow, label.width());
    let mut data = Vec::with_capacity(oh * ow);
    for rt in &rows {
        for ct in &cols {
            data.push(label.get(rt.start, ct.start));
        }
    }
    LabelImage::from_raw(oh, ow, label.num_classes(), label.ignore_id(), data)
}

/// Resamples an existing soft-label map; class weights and ignore mass all
/// flow through the same taps, so outputs stay normalized.
pub fn resample_soft(soft: &SoftLabelMap, kernel: &KernelSpec) -> Result<SoftLabelMap> {
    let (oh, ow) = kernel.output_size((soft.height(), soft.width()));
    let rows = plan(kernel, oh, soft.height());
    let cols = plan(kernel, ow, soft.width());
    let mut b = SoftLabelMapBuilder::new(oh, ow, soft.num_classes())?;
    for (u, rt) in rows.iter().enumerate() {
        for (v, ct) in cols.iter().enumerate() {
            for i in 0..rt.len() {
                let wy = rt.weight(i);
                for j in 0..ct.len() {
                    let w = wy * ct.weight(j);
                    let px = soft.pixel(rt.start + i, ct.start + j);
                    for (&cls, &cw) in px.classes.iter().zip(px.weights) {
                        b.add_weight(u, v, cls, w * cw as f64);
                    }
                    if px.ignore_mass > 0.0 {
                        b.add_ignore(u, v, w * px.ignore_mass as f64);
                    }
                }
            }
        }
    }
    b.finish()
}

/// Color resampling restricted to upscaling kernels.
pub fn upsample_color(img: &ColorImage, kernel: &KernelSpec) -> Result<ColorImage> {
    require_upscale(kernel)?;
    downsample_color(img, kernel)
}

/// Soft-label resampling restricted to upscaling kernels.
pub fn upsample_soft(soft: &SoftLabelMap, kernel: &KernelSpec) -> Result<SoftLabelMap> {
    require_upscale(kernel)?;
    resample_soft(soft, kernel)
}

fn require_upscale(kernel: &KernelSpec) -> Result<()> {
    if !kernel.scale.is_upscale() {
        return Err(Error::InvalidScale(format!(
            "upsampling requires gamma > 1, got {}",
            kernel.scale
        )));
    }
    Ok(())
}

/// Per-class mass of a down-sampled label image in exact rational form:
/// every class slot (and the ignore slot) is a numerator over the shared
/// `denom`. Used for conservation checks that must hold exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactClassMass {
    pub per_class: Vec<u128>,
    pub ignore: u128,
    pub denom: u128,
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Exact-rational accumulation of `downsample_labels` class mass.
pub fn label_mass_exact(label: &LabelImage, kernel: &KernelSpec) -> Result<ExactClassMass> {
    let (oh, ow) = kernel.output_size((label.height(), label.width()));
    let rows = plan(kernel, oh, label.height());
    let cols = plan(kernel, ow, label.width());
    let row_den = rows.iter().fold(1u64, |l, t| lcm(l, t.exact_den));
    let col_den = cols.iter().fold(1u64, |l, t| lcm(l, t.exact_den));

    let c = label.num_classes() as usize;
    let mut per_class = vec![0u128; c];
    let mut ignore = 0u128;
    let width = label.width();
    let data = label.data();
    for rt in &rows {
        let ry = row_den / rt.exact_den;
        for ct in &cols {
            let rx = col_den / ct.exact_den;
            for i in 0..rt.len() {
                let wy = (rt.exact_num[i] * ry) as u128;
                let row_base = (rt.start + i) * width;
                for j in 0..ct.len() {
                    let w = wy * (ct.exact_num[j] * rx) as u128;
                    let id = data[row_base + ct.start + j];
                    if label.is_ignore(id) {
                        ignore += w;
                    } else {
                        per_class[id as usize] += w;
                    }
                }
            }
        }
    }
    Ok(ExactClassMass {
        per_class,
        ignore,
        denom: row_den as u128 * col_den as u128,
    })
}
