//! IDX (MNIST, Fashion-MNIST) and CIFAR-10 binary readers.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const CIFAR_RECORD: usize = 1 + 3072;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: bad magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { path: String, found: u32, expected: u32 },
    #[error("{path}: truncated, need {need} bytes, have {have}")]
    TruncatedFile { path: String, need: usize, have: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: size {size} is not a multiple of {CIFAR_RECORD}")]
    SizeNotMultiple { path: String, size: usize },
    #[error("{path}: label {label} out of range at record {index}")]
    LabelOutOfRange { path: String, label: u8, index: usize },
    #[error("no data files for {0:?}; run scripts/fetch_data.sh or set PHASELAB_DATA")]
    Missing(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataset {
    pub name: String,
    pub split: Split,
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    /// Row-major `n × d`, values in `[0, 1]`.
    pub images: Vec<f32>,
    pub labels: Vec<u8>,
}

impl RealDataset {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.images[i * self.d..(i + 1) * self.d]
    }

    /// The first `n` samples (all of them if `n` exceeds the size).
    pub fn subset(&self, n: usize) -> RealDataset {
        let n = n.min(self.n);
        RealDataset {
            name: self.name.clone(),
            split: self.split,
            n,
            d: self.d,
            classes: self.classes,
            images: self.images[..n * self.d].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

fn be_u32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn need(path: &str, bytes: &[u8], n: usize) -> Result<(), DataError> {
    if bytes.len() < n {
        return Err(DataError::TruncatedFile { path: path.into(), need: n, have: bytes.len() });
    }
    Ok(())
}

/// Returns `(n, rows·cols, pixels)`.
pub fn parse_idx_images(path: &str, bytes: &[u8]) -> Result<(usize, usize, Vec<f32>), DataError> {
    need(path, bytes, 16)?;
    let magic = be_u32(bytes, 0);
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::BadMagic { path: path.into(), found: magic, expected: IDX_IMAGES_MAGIC });
    }
    let n = be_u32(bytes, 4) as usize;
    let d = be_u32(bytes, 8) as usize * be_u32(bytes, 12) as usize;
    need(path, bytes, 16 + n * d)?;
    let px = bytes[16..16 + n * d].iter().map(|&b| b as f32 / 255.0).collect();
    Ok((n, d, px))
}

pub fn parse_idx_labels(path: &str, bytes: &[u8]) -> Result<Vec<u8>, DataError> {
    need(path, bytes, 8)?;
    let magic = be_u32(bytes, 0);
    if magic != IDX_LABELS_MAGIC {
        return Err(DataError::BadMagic { path: path.into(), found: magic, expected: IDX_LABELS_MAGIC });
    }
    let n = be_u32(bytes, 4) as usize;
    need(path, bytes, 8 + n)?;
    Ok(bytes[8..8 + n].to_vec())
}

fn split_of(path: &Path) -> Split {
    let name = path.file_name().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    if name.contains("t10k") || name.contains("test") {
        Split::Test
    } else {
        Split::Train
    }
}

fn name_of(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "idx".into())
}

pub fn load_idx(image_path: &Path, label_path: &Path) -> Result<RealDataset, DataError> {
    let ip = image_path.display().to_string();
    let (n, d, images) = parse_idx_images(&ip, &read(image_path)?)?;
    let labels = parse_idx_labels(&label_path.display().to_string(), &read(label_path)?)?;
    if labels.len() != n {
        return Err(DataError::CountMismatch { images: n, labels: labels.len() });
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    Ok(RealDataset { name: name_of(image_path), split: split_of(image_path), n, d, classes, images, labels })
}

pub fn parse_cifar10(path: &str, bytes: &[u8], out: &mut RealDataset) -> Result<(), DataError> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(DataError::SizeNotMultiple { path: path.into(), size: bytes.len() });
    }
    for (i, rec) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
        if rec[0] >= 10 {
            return Err(DataError::LabelOutOfRange { path: path.into(), label: rec[0], index: i });
        }
        out.labels.push(rec[0]);
        out.images.extend(rec[1..].iter().map(|&b| b as f32 / 255.0));
        out.n += 1;
    }
    Ok(())
}

/// Concatenates CIFAR-10 binary batches (label byte + 3072 channel-major pixels).
pub fn load_cifar10(paths: &[PathBuf]) -> Result<RealDataset, DataError> {
    let split = paths.first().map_or(Split::Train, |p| split_of(p));
    let mut ds = RealDataset {
        name: "cifar10".into(),
        split,
        n: 0,
        d: 3072,
        classes: 10,
        images: Vec::new(),
        labels: Vec::new(),
    };
    for p in paths {
        parse_cifar10(&p.display().to_string(), &read(p)?, &mut ds)?;
    }
    Ok(ds)
}

/// `$PHASELAB_DATA`, else `./data`, else the `data/` directory of this checkout.
pub fn data_root() -> PathBuf {
    if let Ok(p) = std::env::var("PHASELAB_DATA") {
        return PathBuf::from(p);
    }
    let local = PathBuf::from("data");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Loads `<root>/<name>/{train,t10k}-{images-idx3,labels-idx1}-ubyte`.
pub fn load_named(root: &Path, name: &str, split: Split) -> Result<RealDataset, DataError> {
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    let dir = root.join(name);
    let images = dir.join(format!("{prefix}-images-idx3-ubyte"));
    let labels = dir.join(format!("{prefix}-labels-idx1-ubyte"));
    if !images.is_file() || !labels.is_file() {
        return Err(DataError::Missing(dir.display().to_string()));
    }
    let mut ds = load_idx(&images, &labels)?;
    ds.name = name.to_string();
    ds.split = split;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn idx_images(n: u32, rows: u32, cols: u32, px: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IDX_IMAGES_MAGIC, n, rows, cols] {
            b.extend(v.to_be_bytes());
        }
        b.extend(px);
        b
    }

    #[test]
    fn idx_scaling() {
        let b = idx_images(2, 1, 2, &[0, 255, 51, 102]);
        let (n, d, px) = parse_idx_images("x", &b).unwrap();
        assert_eq!((n, d), (2, 2));
        assert_eq!(px, vec![0.0, 1.0, 0.2, 0.4]);
    }

    #[test]
    fn idx_errors() {
        let mut b = idx_images(2, 1, 2, &[0, 255, 51]);
        assert!(matches!(parse_idx_images("x", &b), Err(DataError::TruncatedFile { .. })));
        b[2] = 0;
        b[3] = 0;
        assert!(matches!(parse_idx_images("x", &b), Err(DataError::BadMagic { found: 0, .. })));
        let mut l = IDX_LABELS_MAGIC.to_be_bytes().to_vec();
        l.extend(3u32.to_be_bytes());
        l.extend([1, 2]);
        assert!(matches!(parse_idx_labels("y", &l), Err(DataError::TruncatedFile { .. })));
    }

    #[test]
    fn cifar_records() {
        let mut rec = vec![3u8];
        rec.extend(std::iter::repeat_n(255, 3072));
        let mut ds = RealDataset { name: "c".into(), split: Split::Train, n: 0, d: 3072, classes: 10, images: vec![], labels: vec![] };
        parse_cifar10("c", &rec, &mut ds).unwrap();
        assert_eq!(ds.n, 1);
        assert_eq!(ds.labels, vec![3]);
        assert_eq!(ds.images[3071], 1.0);
        rec[0] = 10;
        assert!(matches!(parse_cifar10("c", &rec, &mut ds), Err(DataError::LabelOutOfRange { label: 10, .. })));
        assert!(matches!(parse_cifar10("c", &rec[..100], &mut ds), Err(DataError::SizeNotMultiple { .. })));
    }

    #[test]
    fn subset_prefix() {
        let ds = RealDataset { name: "s".into(), split: Split::Train, n: 3, d: 1, classes: 2, images: vec![0.1, 0.2, 0.3], labels: vec![0, 1, 0] };
        let s = ds.subset(2);
        assert_eq!(s.images, vec![0.1, 0.2]);
        assert_eq!(s.subset(10).n, 2);
    }
}
