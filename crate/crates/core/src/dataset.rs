//! Feature datasets: validation, the `SFV1` binary and CSV formats, and
//! synthetic Gaussian blobs.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codec::{self, ByteReader};
use crate::distance::{sq_norm, MIN_NORM};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_DATA};

pub const SFV1_MAGIC: &[u8; 4] = b"SFV1";

/// Row-major view over `len` vectors of `dim` components.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    dim: usize,
    data: &'a [f32],
}

impl<'a> Samples<'a> {
    pub fn new(dim: usize, data: &'a [f32]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("sample dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::invalid("no samples"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not divide into rows of {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'a, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &'a [f32] {
        self.data
    }
}

/// A validated, class-indexed set of feature vectors.
///
/// Every vector has `dim` finite components and a norm of at least
/// [`MIN_NORM`]; class ids are dense in `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    dim: usize,
    num_classes: usize,
    labels: Vec<u32>,
    features: Vec<f32>,
}

impl FeatureDataset {
    pub fn new(dim: usize, num_classes: usize, labels: Vec<u32>, features: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if num_classes == 0 {
            return Err(Error::invalid("dataset must have at least one class"));
        }
        if labels.is_empty() {
            return Err(Error::invalid("dataset has no records"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::invalid(format!(
                "{} labels but {} feature values for dimension {dim}",
                labels.len(),
                features.len()
            )));
        }
        let mut seen = vec![false; num_classes];
        for (record, (&class, v)) in labels.iter().zip(features.chunks_exact(dim)).enumerate() {
            validate_record(record, i64::from(class), num_classes, v)?;
            seen[class as usize] = true;
        }
        if let Some(class) = seen.iter().position(|&s| !s) {
            return Err(Error::MissingClass { class });
        }
        Ok(Self {
            dim,
            num_classes,
            labels,
            features,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn samples(&self) -> Samples<'_> {
        Samples {
            dim: self.dim,
            data: &self.features,
        }
    }

    /// `(vector, class)` pairs in record order.
    pub fn iter(&self) -> impl Iterator<Item = (&[f32], u32)> + '_ {
        self.features
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }

    /// Record indices grouped by class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c as usize].push(i);
        }
        out
    }

    /// Multiplies every record by its own log-uniform factor in
    /// `[low, high)`. Directions are preserved, magnitudes are not.
    pub fn with_random_scaling(&self, low: f64, high: f64, seed: u64) -> Result<Self> {
        if !(low > 0.0 && high >= low && high.is_finite()) {
            return Err(Error::invalid(format!("bad scale range [{low}, {high})")));
        }
        let mut rng = stream_rng(seed, STREAM_DATA);
        let (ln_lo, ln_hi) = (low.ln(), high.ln());
        let mut features = self.features.clone();
        for row in features.chunks_exact_mut(self.dim) {
            let factor = if ln_hi > ln_lo {
                rng.random_range(ln_lo..ln_hi).exp()
            } else {
                low
            };
            for x in row {
                *x = (f64::from(*x) * factor) as f32;
            }
        }
        Self::new(self.dim, self.num_classes, self.labels.clone(), features)
    }
}

fn validate_record(record: usize, class: i64, num_classes: usize, v: &[f32]) -> Result<()> {
    if class < 0 || class >= num_classes as i64 {
        return Err(Error::ClassOutOfRange {
            record,
            class,
            num_classes,
        });
    }
    if let Some(component) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { record, component });
    }
    if sq_norm(v).sqrt() < MIN_NORM {
        return Err(Error::ZeroVector { record });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureFormat {
    #[default]
    Binary,
    Csv,
}

impl FeatureFormat {
    /// `.csv` files are CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureFormat::Csv,
            _ => FeatureFormat::Binary,
        }
    }
}

impl fmt::Display for FeatureFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureFormat::Binary => "binary",
            FeatureFormat::Csv => "csv",
        })
    }
}

impl FromStr for FeatureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "sfv1" => Ok(FeatureFormat::Binary),
            "csv" => Ok(FeatureFormat::Csv),
            other => Err(Error::invalid(format!("unknown feature format {other:?}"))),
        }
    }
}

pub fn load_features(path: &Path, format: FeatureFormat) -> Result<FeatureDataset> {
    let bytes = codec::read_file(path)?;
    match format {
        FeatureFormat::Binary => decode_sfv1(&bytes),
        FeatureFormat::Csv => read_csv(bytes.as_slice()),
    }
}

pub fn save_features(ds: &FeatureDataset, path: &Path, format: FeatureFormat) -> Result<()> {
    let bytes = match format {
        FeatureFormat::Binary => encode_sfv1(ds)?,
        FeatureFormat::Csv => {
            let mut out = Vec::new();
            write_csv(ds, &mut out)?;
            out
        }
    };
    codec::write_atomic(path, &bytes)
}

/// `SFV1 | u32 N | u32 m | u32 C | N x (u32 class, m x f32)`, little-endian.
pub fn encode_sfv1(ds: &FeatureDataset) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + ds.len() * (4 + 4 * ds.dim));
    out.extend_from_slice(SFV1_MAGIC);
    codec::put_u32(&mut out, codec::to_u32(ds.len(), "record count")?);
    codec::put_u32(&mut out, codec::to_u32(ds.dim, "dimension")?);
    codec::put_u32(&mut out, codec::to_u32(ds.num_classes, "class count")?);
    for (v, class) in ds.iter() {
        codec::put_u32(&mut out, class);
        codec::put_f32s(&mut out, v);
    }
    Ok(out)
}

pub fn decode_sfv1(bytes: &[u8]) -> Result<FeatureDataset> {
    let mut r = ByteReader::new(bytes);
    r.magic(SFV1_MAGIC)?;
    let n = r.u32("record count")? as usize;
    let dim = r.u32("dimension")? as usize;
    let num_classes = r.u32("class count")? as usize;
    if n == 0 {
        return Err(Error::InvalidHeader("record count is zero".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidHeader("dimension is zero".into()));
    }
    if num_classes == 0 {
        return Err(Error::InvalidHeader("class count is zero".into()));
    }
    let record_bytes = dim
        .checked_mul(4)
        .and_then(|b| b.checked_add(4))
        .ok_or_else(|| Error::InvalidHeader(format!("dimension {dim} too large")))?;
    let payload = n.checked_mul(record_bytes);
    if payload.is_none_or(|p| p > r.remaining()) {
        return Err(Error::Truncated {
            what: "records",
            offset: 16,
            needed: payload.unwrap_or(usize::MAX),
            available: r.remaining(),
        });
    }
    let mut labels = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * dim);
    for record in 0..n {
        let class = r.u32("class id")?;
        let v = r.f32s(dim, "feature vector")?;
        validate_record(record, i64::from(class), num_classes, &v)?;
        labels.push(class);
        features.extend_from_slice(&v);
    }
    r.finish()?;
    FeatureDataset::new(dim, num_classes, labels, features)
}

/// Reads `label,f0,...,f{m-1}` CSV. The class count is one past the largest
/// label seen.
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<FeatureDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::InvalidHeader("empty CSV".into()))??;
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(Error::InvalidHeader(
            "CSV header must be label,f0,...,f{m-1}".into(),
        ));
    }
    for (i, name) in header.iter().skip(1).enumerate() {
        if name != format!("f{i}") {
            return Err(Error::InvalidHeader(format!(
                "column {} is {name:?}, expected \"f{i}\"",
                i + 1
            )));
        }
    }
    let dim = header.len() - 1;

    let mut labels = Vec::new();
    let mut features = Vec::new();
    let mut max_class = 0i64;
    for row in records {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() == 1 && row.get(0) == Some("") {
            continue;
        }
        if row.len() != dim + 1 {
            return Err(Error::RaggedRow {
                line,
                expected: dim + 1,
                found: row.len(),
            });
        }
        let bad = |column: usize, text: &str| Error::BadNumber {
            line,
            column,
            text: text.to_string(),
        };
        let class: i64 = row[0].parse().map_err(|_| bad(0, &row[0]))?;
        if class < 0 || class > i64::from(u32::MAX - 1) {
            return Err(Error::ClassOutOfRange {
                record: labels.len(),
                class,
                num_classes: 0,
            });
        }
        max_class = max_class.max(class);
        labels.push(class as u32);
        for (column, text) in row.iter().enumerate().skip(1) {
            let x: f32 = text.parse().map_err(|_| bad(column, text))?;
            features.push(x);
        }
    }
    if labels.is_empty() {
        return Err(Error::invalid("CSV has no records"));
    }
    FeatureDataset::new(dim, max_class as usize + 1, labels, features)
}

/// Writes the shortest decimal form of each value, which parses back to
/// the same `f32`.
pub fn write_csv<W: std::io::Write>(ds: &FeatureDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = Vec::with_capacity(ds.dim + 1);
    header.push("label".to_string());
    header.extend((0..ds.dim).map(|i| format!("f{i}")));
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(ds.dim + 1);
    for (v, class) in ds.iter() {
        row.clear();
        row.push(class.to_string());
        row.extend(v.iter().map(|x| x.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Gaussian blobs: `ways` class centers on a sphere of radius `separation`,
/// `per_class` samples around each with standard deviation `spread`.
/// Records are grouped by class.
pub fn make_blobs(
    ways: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    separation: f64,
    seed: u64,
) -> Result<FeatureDataset> {
    if ways < 2 {
        return Err(Error::invalid("blobs need at least 2 classes"));
    }
    if per_class == 0 || dim == 0 {
        return Err(Error::invalid("blobs need per_class >= 1 and dim >= 1"));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::invalid(format!("spread must be >= 0, got {spread}")));
    }
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(Error::invalid(format!(
            "separation must be positive, got {separation}"
        )));
    }
    let mut rng = stream_rng(seed, STREAM_DATA);
    let mut labels = Vec::with_capacity(ways * per_class);
    let mut features = Vec::with_capacity(ways * per_class * dim);
    for class in 0..ways {
        let center = loop {
            let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                break dir.into_iter().map(|x| x / norm * separation).collect::<Vec<_>>();
            }
        };
        for _ in 0..per_class {
            labels.push(class as u32);
            for &c in &center {
                let noise: f64 = StandardNormal.sample(&mut rng);
                features.push((c + spread * noise) as f32);
            }
        }
    }
    FeatureDataset::new(dim, ways, labels, features)
}
