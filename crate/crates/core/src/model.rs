//! `SOM1` model files.
//!
//! Layout, little-endian: magic `SOM1`, u32 rows, u32 cols, u32 dim,
//! u8 metric tag, u8 labeled flag, then `k x dim` f32 weights row-major.
//! Labeled models continue with `k` i32 labels, u32 class count `C` and
//! `k x C` f32 accumulators.
//!
//! The kernel width and per-class sample counts used for labeling are not
//! stored; a loaded labeled model reports `alpha = 1` and zero counts.

use std::path::Path;

use crate::codec::{self, ByteReader};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::labeling::{ClassAccumulators, LabeledSom};
use crate::som::{GridShape, SomMap, DEFAULT_ALPHA};

pub const SOM1_MAGIC: &[u8; 4] = b"SOM1";

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Unlabeled(SomMap),
    Labeled(LabeledSom),
}

impl Model {
    pub fn som(&self) -> &SomMap {
        match self {
            Model::Unlabeled(m) => m,
            Model::Labeled(l) => l.som(),
        }
    }

    pub fn into_som(self) -> SomMap {
        match self {
            Model::Unlabeled(m) => m,
            Model::Labeled(l) => l.som().clone(),
        }
    }

    pub fn is_labeled(&self) -> bool {
        matches!(self, Model::Labeled(_))
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        match self {
            Model::Unlabeled(m) => encode_som(m),
            Model::Labeled(l) => encode_labeled(l),
        }
    }
}

fn put_header(out: &mut Vec<u8>, som: &SomMap, labeled: bool) -> Result<()> {
    out.extend_from_slice(SOM1_MAGIC);
    codec::put_u32(out, codec::to_u32(som.shape().rows(), "rows")?);
    codec::put_u32(out, codec::to_u32(som.shape().cols(), "cols")?);
    codec::put_u32(out, codec::to_u32(som.dim(), "dim")?);
    out.push(som.metric().tag());
    out.push(u8::from(labeled));
    codec::put_f32s(out, som.weights());
    Ok(())
}

pub fn encode_som(som: &SomMap) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(18 + som.weights().len() * 4);
    put_header(&mut out, som, false)?;
    Ok(out)
}

pub fn encode_labeled(l: &LabeledSom) -> Result<Vec<u8>> {
    let som = l.som();
    let acc = l.accumulators();
    let mut out = Vec::with_capacity(22 + (som.weights().len() + som.len() * (1 + acc.num_classes())) * 4);
    put_header(&mut out, som, true)?;
    for &label in l.labels() {
        out.extend_from_slice(&label.to_le_bytes());
    }
    codec::put_u32(&mut out, codec::to_u32(acc.num_classes(), "class count")?);
    let table: Vec<f32> = acc.table().iter().map(|&x| x as f32).collect();
    codec::put_f32s(&mut out, &table);
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    let mut r = ByteReader::new(bytes);
    r.magic(SOM1_MAGIC)?;
    let rows = r.u32("rows")? as usize;
    let cols = r.u32("cols")? as usize;
    let dim = r.u32("dim")? as usize;
    let tag = r.u8("metric tag")?;
    let flag = r.u8("labeled flag")?;
    let shape = GridShape::new(rows, cols).map_err(|e| Error::InvalidHeader(e.to_string()))?;
    if dim == 0 {
        return Err(Error::InvalidHeader("dimension is zero".into()));
    }
    let metric = Metric::from_tag(tag).ok_or_else(|| Error::InvalidHeader(format!("unknown metric tag {tag}")))?;
    let labeled = match flag {
        0 => false,
        1 => true,
        other => return Err(Error::InvalidHeader(format!("labeled flag {other}"))),
    };
    let k = shape.len();
    let count = k
        .checked_mul(dim)
        .ok_or_else(|| Error::InvalidHeader("weight matrix too large".into()))?;
    let weights = r.f32s(count, "weights")?;
    let som = SomMap::from_weights(shape, dim, metric, weights)?;
    if !labeled {
        r.finish()?;
        return Ok(Model::Unlabeled(som));
    }

    let label_bytes = r.take(k.saturating_mul(4), "labels")?;
    let labels: Vec<i32> = label_bytes
        .chunks_exact(4)
        .map(|b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let num_classes = r.u32("class count")? as usize;
    if num_classes == 0 {
        return Err(Error::InvalidHeader("class count is zero".into()));
    }
    let cells = k
        .checked_mul(num_classes)
        .ok_or_else(|| Error::InvalidHeader("accumulator table too large".into()))?;
    let table = r.f32s(cells, "accumulators")?;
    r.finish()?;
    let acc = ClassAccumulators::from_parts(
        num_classes,
        table.into_iter().map(f64::from).collect(),
        vec![0; num_classes],
    )?;
    Ok(Model::Labeled(LabeledSom::from_parts(som, labels, acc, DEFAULT_ALPHA)?))
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    codec::write_atomic(path, &model.encode()?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    decode_model(&codec::read_file(path)?)
}
