//! FFSB v1 feature files.
//!
//! ```text
//! offset  size      field
//! 0       5         magic 46 46 53 42 01 ("FFSB", version 1)
//! 5       4         n_samples, u32 LE
//! 9       4         dim, u32 LE
//! 13      4         n_classes, u32 LE
//! 17      1         has_groups, 0 or 1
//! 18      4n        labels, u32 LE
//! ..      4n        group ids, u32 LE (only if has_groups = 1)
//! ..      4n*dim    features, f32 LE, row-major
//! ```

use std::path::Path;

use crate::data::LabeledFeatureSet;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 5] = [0x46, 0x46, 0x53, 0x42, 0x01];
pub const HEADER_LEN: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureFileHeader {
    pub n_samples: u32,
    pub dim: u32,
    pub n_classes: u32,
    pub has_groups: bool,
}

impl FeatureFileHeader {
    /// Total file size implied by the header.
    pub fn file_len(&self) -> Result<u64> {
        let n = u64::from(self.n_samples);
        let per_row = 4 * (1 + u64::from(self.has_groups)) + 4 * u64::from(self.dim);
        n.checked_mul(per_row)
            .and_then(|p| p.checked_add(HEADER_LEN as u64))
            .ok_or_else(|| Error::Validation("header sizes overflow".into()))
    }
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

/// Parses and checks the fixed header.
pub fn decode_header(bytes: &[u8]) -> Result<FeatureFileHeader> {
    let head = &bytes[..bytes.len().min(MAGIC.len())];
    if head != &MAGIC[..head.len()] {
        return Err(Error::NotFfsb);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Size {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let header = FeatureFileHeader {
        n_samples: u32_at(bytes, 5),
        dim: u32_at(bytes, 9),
        n_classes: u32_at(bytes, 13),
        has_groups: match bytes[17] {
            0 => false,
            1 => true,
            b => return Err(Error::Validation(format!("has_groups byte must be 0 or 1, got {b}"))),
        },
    };
    for (name, v) in [("n_samples", header.n_samples), ("dim", header.dim), ("n_classes", header.n_classes)] {
        if v == 0 {
            return Err(Error::Validation(format!("{name} must be at least 1")));
        }
    }
    Ok(header)
}

/// Decodes a complete file image. Trailing bytes are a size error.
pub fn decode(bytes: &[u8]) -> Result<LabeledFeatureSet> {
    let h = decode_header(bytes)?;
    let expected = h.file_len()?;
    if bytes.len() as u64 != expected {
        return Err(Error::Size {
            expected,
            found: bytes.len() as u64,
        });
    }
    let n = h.n_samples as usize;
    let dim = h.dim as usize;
    let mut at = HEADER_LEN;
    let mut take_u32s = |count: usize| -> Vec<u32> {
        let out = (0..count).map(|i| u32_at(bytes, at + 4 * i)).collect();
        at += 4 * count;
        out
    };
    let labels: Vec<usize> = take_u32s(n).into_iter().map(|l| l as usize).collect();
    let groups = h.has_groups.then(|| take_u32s(n));
    let features: Vec<f64> = bytes[at..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    LabeledFeatureSet::new(features, dim, labels, h.n_classes as usize, groups)
}

/// Encodes a set; features are stored as f32.
pub fn encode(data: &LabeledFeatureSet) -> Result<Vec<u8>> {
    let to_u32 = |v: usize, what: &str| -> Result<u32> {
        u32::try_from(v).map_err(|_| Error::Validation(format!("{what} {v} does not fit in 32 bits")))
    };
    let n = to_u32(data.n_samples(), "n_samples")?;
    let dim = to_u32(data.dim(), "dim")?;
    let classes = to_u32(data.n_classes(), "n_classes")?;
    let header = FeatureFileHeader {
        n_samples: n,
        dim,
        n_classes: classes,
        has_groups: data.has_groups(),
    };
    let len = usize::try_from(header.file_len()?).map_err(|_| Error::Validation("file too large".into()))?;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&classes.to_le_bytes());
    out.push(u8::from(data.has_groups()));
    for &l in data.labels() {
        out.extend_from_slice(&to_u32(l, "label")?.to_le_bytes());
    }
    if let Some(g) = data.groups() {
        for &id in g {
            out.extend_from_slice(&id.to_le_bytes());
        }
    }
    for (i, &v) in data.features().iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::Validation(format!(
                "row {}: feature {} overflows f32",
                i / data.dim(),
                i % data.dim()
            )));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    debug_assert_eq!(out.len(), len);
    Ok(out)
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<LabeledFeatureSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Reads only as much of the file as the header needs, plus its length.
pub fn read_header(path: impl AsRef<Path>) -> Result<(FeatureFileHeader, u64)> {
    use std::io::Read;
    let path = path.as_ref();
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let len = f.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut buf = Vec::with_capacity(HEADER_LEN);
    f.by_ref()
        .take(HEADER_LEN as u64)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    Ok((decode_header(&buf)?, len))
}

pub fn write_feature_file(data: &LabeledFeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(data)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
