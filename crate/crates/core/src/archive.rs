//! Feature archives: many statistic vectors with class labels and ids.
//!
//! Layout (little-endian): magic `PSSA`, version `u32`, `N`, `K`, `M`, `D`
//! and record count as `u64`, then fixed-size records of a zero-padded
//! 64-byte class name, a zero-padded 128-byte id and `D` `f64` values.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{Reader, Writer};
use crate::pss::{read_params, PssLayout, PssParams, PssVector};

const MAGIC: &[u8; 4] = b"PSSA";
/// Archive format version written by this build.
pub const FORMAT_VERSION: u32 = 1;
pub const CLASS_BYTES: usize = 64;
pub const ID_BYTES: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub class: String,
    pub id: String,
    pub vector: PssVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureArchive {
    layout: PssLayout,
    records: Vec<FeatureRecord>,
}

impl FeatureArchive {
    pub fn new(params: PssParams) -> Result<Self> {
        Ok(FeatureArchive {
            layout: PssLayout::new(params)?,
            records: Vec::new(),
        })
    }

    pub fn params(&self) -> PssParams {
        self.layout.params()
    }

    pub fn layout(&self) -> &PssLayout {
        &self.layout
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn vectors(&self) -> Vec<PssVector> {
        self.records.iter().map(|r| r.vector.clone()).collect()
    }

    pub fn push(&mut self, class: &str, id: &str, vector: PssVector) -> Result<()> {
        if vector.layout() != &self.layout {
            return Err(Error::LayoutMismatch(format!(
                "archive holds {:?}, vector has {:?}",
                self.params(),
                vector.params()
            )));
        }
        check_name("class", class, CLASS_BYTES)?;
        check_name("id", id, ID_BYTES)?;
        self.records.push(FeatureRecord {
            class: class.to_string(),
            id: id.to_string(),
            vector,
        });
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = self.params();
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(FORMAT_VERSION);
        for v in [p.n_scales, p.n_orientations, p.neighborhood, self.layout.dim(), self.records.len()] {
            w.u64(v as u64);
        }
        for r in &self.records {
            w.bytes(&padded(&r.class, CLASS_BYTES));
            w.bytes(&padded(&r.id, ID_BYTES));
            w.f64s(r.vector.values());
        }
        w.into_inner()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, "feature archive");
        r.magic(MAGIC)?;
        r.version(FORMAT_VERSION)?;
        let params = read_params(&mut r)?;
        let layout = PssLayout::new(params).map_err(|e| Error::CorruptContainer(e.to_string()))?;
        let d = r.u64()?;
        if d != layout.dim() as u64 {
            return Err(Error::CorruptContainer(format!(
                "header says D={d}, parameters give {}",
                layout.dim()
            )));
        }
        let count = r.count(CLASS_BYTES + ID_BYTES + 8 * layout.dim())?;
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let class = unpad(r.bytes(CLASS_BYTES)?)?;
            let id = unpad(r.bytes(ID_BYTES)?)?;
            let values = r.f64s(layout.dim())?;
            let vector = PssVector::new(values, layout.clone())
                .map_err(|e| Error::CorruptContainer(format!("record {id}: {e}")))?;
            records.push(FeatureRecord { class, id, vector });
        }
        r.finish()?;
        Ok(FeatureArchive { layout, records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buf)
    }
}

fn check_name(what: &str, s: &str, max: usize) -> Result<()> {
    if s.len() > max || s.as_bytes().contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "{what} {s:?} must be at most {max} bytes without NUL"
        )));
    }
    Ok(())
}

fn padded(s: &str, n: usize) -> Vec<u8> {
    let mut b = s.as_bytes().to_vec();
    b.resize(n, 0);
    b
}

fn unpad(b: &[u8]) -> Result<String> {
    let end = b.iter().position(|&c| c == 0).unwrap_or(b.len());
    String::from_utf8(b[..end].to_vec()).map_err(|_| Error::CorruptContainer("name is not UTF-8".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(seed: f64) -> PssVector {
        let layout = PssLayout::new(PssParams::new(1, 1, 3)).unwrap();
        PssVector::new((0..47).map(|i| i as f64 * seed).collect(), layout).unwrap()
    }

    #[test]
    fn round_trip() {
        let mut a = FeatureArchive::new(PssParams::new(1, 1, 3)).unwrap();
        a.push("bark", "bark/001.pgm", vector(0.5)).unwrap();
        a.push("sand", "sand/007.pgm", vector(-1.0)).unwrap();
        let back = FeatureArchive::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.to_bytes().len(), 4 + 4 + 5 * 8 + 2 * (64 + 128 + 47 * 8));
    }

    #[test]
    fn rejects_bad_input() {
        let mut a = FeatureArchive::new(PssParams::new(1, 1, 3)).unwrap();
        assert!(a.push(&"x".repeat(65), "id", vector(1.0)).is_err());
        let other = PssVector::new(vec![0.0; 1784], PssLayout::new(PssParams::default()).unwrap()).unwrap();
        assert!(matches!(a.push("c", "i", other), Err(Error::LayoutMismatch(_))));
        a.push("c", "i", vector(1.0)).unwrap();
        let bytes = a.to_bytes();
        assert!(FeatureArchive::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert!(matches!(FeatureArchive::from_bytes(&bad), Err(Error::CorruptContainer(_))));
    }
}
