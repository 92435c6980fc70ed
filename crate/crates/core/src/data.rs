//! Datasets: CSV ingestion, synthetic generators, pool/test splitting with
//! pool-based normalization, and per-class seed selection.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{ApmError, Result};
use crate::numkit::RngStream;

/// Binary label, `Y ∈ {−1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// `+1` for `s ≥ 0`, matching the prediction tie rule.
    pub fn from_sign(s: f64) -> Label {
        if s >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Negative => f.write_str("-1"),
            Label::Positive => f.write_str("1"),
        }
    }
}

/// Feature matrix (examples as rows) with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    x: Array2<f64>,
    y: Vec<Label>,
}

impl Dataset {
    /// Builds a source dataset: finite features, both labels present, at least 4 rows.
    pub fn new(name: impl Into<String>, x: Array2<f64>, y: Vec<Label>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(ApmError::DimensionMismatch { expected: x.nrows(), found: y.len() });
        }
        if x.nrows() < 4 {
            return Err(ApmError::invalid_data(format!("need at least 4 examples, got {}", x.nrows())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ApmError::invalid_data("features contain NaN or infinite values"));
        }
        let ds = Dataset { name: name.into(), x, y };
        let (neg, pos) = ds.class_counts();
        if neg == 0 || pos == 0 {
            return Err(ApmError::invalid_data("both labels must be present"));
        }
        Ok(ds)
    }

    /// Rows `indices` of `self`; partitions may be small or single-class.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Dataset {
        Dataset {
            name: name.into(),
            x: self.x.select(Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[Label] {
        &self.y
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn label(&self, i: usize) -> Label {
        self.y[i]
    }

    /// `(negatives, positives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|l| **l == Label::Positive).count();
        (self.y.len() - pos, pos)
    }

    pub fn indices_of(&self, label: Label) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.y[i] == label).collect()
    }
}

/// Reads a headered, comma-separated file. Every column except `label_col`
/// is a numeric feature.
///
/// The two label values are mapped by lexicographic order of their string
/// forms: the smaller becomes `−1`. Passing `negative_label` overrides this
/// and names the value that maps to `−1`.
pub fn load_csv(path: impl AsRef<Path>, label_col: &str, negative_label: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_col)
        .ok_or_else(|| ApmError::invalid_data(format!("label column '{label_col}' not found")))?;
    let d = headers.len() - 1;

    let mut feats: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (row_no, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = row_no + 2;
        if rec.len() != headers.len() {
            return Err(ApmError::invalid_data(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            if field.is_empty() {
                return Err(ApmError::invalid_data(format!("line {line}: missing value in column '{}'", &headers[j])));
            }
            if j == label_idx {
                raw_labels.push(field.to_string());
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    ApmError::invalid_data(format!("line {line}: non-numeric value '{field}' in column '{}'", &headers[j]))
                })?;
                feats.push(v);
            }
        }
    }

    let classes: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    if classes.len() != 2 {
        return Err(ApmError::TooManyClasses(classes.into_iter().map(str::to_string).collect()));
    }
    let mut it = classes.iter();
    let (first, second) = (*it.next().unwrap(), *it.next().unwrap());
    let negative = match negative_label {
        None => first,
        Some(v) if v == first || v == second => v,
        Some(v) => {
            return Err(ApmError::invalid_data(format!(
                "negative label '{v}' is not one of the label values '{first}', '{second}'"
            )))
        }
    };
    let y: Vec<Label> = raw_labels
        .iter()
        .map(|l| if l == negative { Label::Negative } else { Label::Positive })
        .collect();

    let n = y.len();
    let x = Array2::from_shape_vec((n, d), feats).map_err(|e| ApmError::invalid_data(e.to_string()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Dataset::new(name, x, y)
}

/// Writes `x1..xd,label` with labels as `-1`/`1`.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=ds.dim()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(ds.label(i).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    Clouds,
    Cross,
    Horseshoe,
}

impl FromStr for SyntheticKind {
    type Err = ApmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clouds" => Ok(SyntheticKind::Clouds),
            "cross" => Ok(SyntheticKind::Cross),
            "horseshoe" => Ok(SyntheticKind::Horseshoe),
            _ => Err(ApmError::UnknownDataset(s.to_string())),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::Clouds => "clouds",
            SyntheticKind::Cross => "cross",
            SyntheticKind::Horseshoe => "horseshoe",
        })
    }
}

/// Geometry of the `cross` dataset, in coordinates along the separator normal
/// `n = (1,1)/√2` and the separator direction `t = (1,−1)/√2`.
///
/// Each class has a dense central cluster and one outlying arm cluster; the
/// negative class mirrors the positive one through the origin. The positive
/// centre sits at `(center_normal_offset, center_tangent_offset)` and the
/// positive arm at `(arm_normal_offset, −arm_tangent_offset)`, so the two
/// classes form an `X` whose optimal homogeneous separator is `x₁ + x₂ = 0`.
/// A separator fitted to the centres alone is tilted towards `t`, leaves both
/// arms on the wrong side, and keeps them far from its own boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossParams {
    pub center_fraction: f64,
    pub center_sd: f64,
    pub center_normal_offset: f64,
    pub center_tangent_offset: f64,
    pub arm_sd: f64,
    pub arm_normal_offset: f64,
    pub arm_tangent_offset: f64,
}

impl Default for CrossParams {
    fn default() -> Self {
        CrossParams {
            center_fraction: 0.6,
            center_sd: 0.3,
            center_normal_offset: 0.9,
            center_tangent_offset: 1.5,
            arm_sd: 0.5,
            arm_normal_offset: 1.5,
            arm_tangent_offset: 5.0,
        }
    }
}

/// Two isotropic Gaussian blobs centred at `(±offset, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudsParams {
    pub offset: f64,
    pub sd: f64,
}

impl Default for CloudsParams {
    fn default() -> Self {
        CloudsParams { offset: 1.5, sd: 1.0 }
    }
}

/// Two interleaved half-annuli. The positive class is the upper half of an
/// annulus centred at `(−radius/2, gap/2)`, the negative class the lower half
/// of one centred at `(radius/2, −gap/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeParams {
    pub radius: f64,
    pub thickness: f64,
    pub gap: f64,
}

impl Default for HorseshoeParams {
    fn default() -> Self {
        HorseshoeParams { radius: 2.0, thickness: 0.4, gap: 0.5 }
    }
}

fn check_synthetic_n(n: usize) -> Result<()> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(ApmError::invalid_arg(format!("synthetic datasets need an even n >= 8, got {n}")));
    }
    Ok(())
}

/// Shuffles rows so that class membership is not encoded in the row order.
fn assemble(name: &str, rows: Vec<[f64; 2]>, y: Vec<Label>, rng: &mut RngStream) -> Result<Dataset> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    rng.shuffle(&mut order);
    let mut x = Array2::zeros((rows.len(), 2));
    let mut labels = Vec::with_capacity(rows.len());
    for (dst, &src) in order.iter().enumerate() {
        x[[dst, 0]] = rows[src][0];
        x[[dst, 1]] = rows[src][1];
        labels.push(y[src]);
    }
    Dataset::new(name, x, labels)
}

/// Generates one of the named 2-D datasets with balanced classes.
pub fn generate_synthetic(kind: SyntheticKind, n: usize, rng: &mut RngStream) -> Result<Dataset> {
    match kind {
        SyntheticKind::Clouds => generate_clouds(CloudsParams::default(), n, rng),
        SyntheticKind::Cross => generate_cross(CrossParams::default(), n, rng),
        SyntheticKind::Horseshoe => generate_horseshoe(HorseshoeParams::default(), n, rng),
    }
}

pub fn generate_cross(p: CrossParams, n: usize, rng: &mut RngStream) -> Result<Dataset> {
    check_synthetic_n(n)?;
    let per_class = n / 2;
    let n_center = (p.center_fraction * per_class as f64).round() as usize;
    let n_center = n_center.min(per_class);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // (n, t) -> (x1, x2)
    let to_xy = |a: f64, b: f64| [r * (a + b), r * (a - b)];

    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for label in [Label::Negative, Label::Positive] {
        let s = label.sign();
        let center = to_xy(s * p.center_normal_offset, s * p.center_tangent_offset);
        let arm = to_xy(s * p.arm_normal_offset, -s * p.arm_tangent_offset);
        for k in 0..per_class {
            let (c, sd) = if k < n_center { (center, p.center_sd) } else { (arm, p.arm_sd) };
            rows.push([rng.normal(c[0], sd), rng.normal(c[1], sd)]);
            y.push(label);
        }
    }
    assemble("cross", rows, y, rng)
}

pub fn generate_clouds(p: CloudsParams, n: usize, rng: &mut RngStream) -> Result<Dataset> {
    check_synthetic_n(n)?;
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for label in [Label::Negative, Label::Positive] {
        let cx = label.sign() * p.offset;
        for _ in 0..n / 2 {
            rows.push([rng.normal(cx, p.sd), rng.normal(0.0, p.sd)]);
            y.push(label);
        }
    }
    assemble("clouds", rows, y, rng)
}

pub fn generate_horseshoe(p: HorseshoeParams, n: usize, rng: &mut RngStream) -> Result<Dataset> {
    check_synthetic_n(n)?;
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for label in [Label::Positive, Label::Negative] {
        let (cx, cy, phase) = match label {
            Label::Positive => (-p.radius / 2.0, p.gap / 2.0, 0.0),
            Label::Negative => (p.radius / 2.0, -p.gap / 2.0, std::f64::consts::PI),
        };
        for _ in 0..n / 2 {
            let angle = phase + rng.uniform() * std::f64::consts::PI;
            let rad = p.radius + (rng.uniform() - 0.5) * p.thickness;
            rows.push([cx + rad * angle.cos(), cy + rad * angle.sin()]);
            y.push(label);
        }
    }
    assemble("horseshoe", rows, y, rng)
}

/// `d`-dimensional two-class Gaussian data: class means `±(separation/2)·w`
/// for a random unit vector `w`, identity covariance, balanced classes.
pub fn generate_gaussian_classes(d: usize, n: usize, separation: f64, rng: &mut RngStream) -> Result<Dataset> {
    check_synthetic_n(n)?;
    if d == 0 {
        return Err(ApmError::invalid_arg("dimension must be positive"));
    }
    let mut w: Array1<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let norm = w.dot(&w).sqrt();
    w /= norm;
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut x = Array2::zeros((n, d));
    let mut y = vec![Label::Negative; n];
    for (k, &row) in order.iter().enumerate() {
        let label = if k < n / 2 { Label::Negative } else { Label::Positive };
        y[row] = label;
        let shift = 0.5 * separation * label.sign();
        for j in 0..d {
            x[[row, j]] = shift * w[j] + rng.standard_normal();
        }
    }
    Dataset::new(format!("gauss{d}"), x, y)
}

/// Per-feature affine map fitted on the pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    /// Population standard deviation, or 1 for constant features.
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(m);
            scale.push(if sd <= 1e-12 * (1.0 + m.abs()) { 1.0 } else { sd });
        }
        Normalization { mean, scale }
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.mean[j], self.scale[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        out
    }
}

/// Normalized pool and test partitions of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub pool: Dataset,
    pub test: Dataset,
    pub normalization: Normalization,
    /// Strict upper bound on pool row norms.
    pub bound: f64,
    /// Source-row indices of the pool and test partitions.
    pub pool_source: Vec<usize>,
    pub test_source: Vec<usize>,
}

const MAX_SPLIT_ATTEMPTS: usize = 100;

/// Randomly halves `ds` into pool and test (pool gets `⌊n/2⌋` rows), fits
/// the normalization on the pool and applies it to both. Retries while a
/// class is missing from the pool.
pub fn split_and_normalize(ds: &Dataset, rng: &mut RngStream) -> Result<SplitDataset> {
    let n = ds.len();
    if n < 4 {
        return Err(ApmError::invalid_data(format!("need at least 4 examples to split, got {n}")));
    }
    let n_pool = n / 2;
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let (pool_idx, test_idx) = order.split_at(n_pool);
        let has = |l: Label| pool_idx.iter().any(|&i| ds.label(i) == l);
        if !(has(Label::Negative) && has(Label::Positive)) {
            continue;
        }
        let raw_pool = ds.subset(pool_idx, format!("{}-pool", ds.name()));
        let raw_test = ds.subset(test_idx, format!("{}-test", ds.name()));
        let normalization = Normalization::fit(raw_pool.features());
        let pool = Dataset { x: normalization.apply(raw_pool.features()), ..raw_pool };
        let test = Dataset { x: normalization.apply(raw_test.features()), ..raw_test };
        let max_norm = pool.x.rows().into_iter().map(|r| r.dot(&r).sqrt()).fold(0.0, f64::max);
        if !(max_norm > 0.0) {
            return Err(ApmError::invalid_data("all pool examples are zero after normalization"));
        }
        return Ok(SplitDataset {
            pool,
            test,
            normalization,
            bound: max_norm * (1.0 + 1e-9),
            pool_source: pool_idx.to_vec(),
            test_source: test_idx.to_vec(),
        });
    }
    Err(ApmError::invalid_data(format!(
        "could not place both classes in the pool after {MAX_SPLIT_ATTEMPTS} attempts"
    )))
}

/// One labeled pool example per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub negative: usize,
    pub positive: usize,
}

impl SeedSet {
    pub fn indices(&self) -> [usize; 2] {
        [self.negative, self.positive]
    }
}

/// Draws one pool index uniformly from each class.
pub fn pick_seeds(split: &SplitDataset, rng: &mut RngStream) -> Result<SeedSet> {
    let neg = split.pool.indices_of(Label::Negative);
    let pos = split.pool.indices_of(Label::Positive);
    if neg.is_empty() || pos.is_empty() {
        return Err(ApmError::invalid_data("both classes must be present in the pool"));
    }
    let negative = neg[rng.index(neg.len())];
    let positive = pos[rng.index(pos.len())];
    Ok(SeedSet { negative, positive })
}
