use std::path::Path;

use super::Dataset;
use crate::augment::Split;
use crate::error::{Error, Result};
use crate::nncore::Matrix;
use crate::rng::{seeded, shuffle};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Unsigned-byte IDX tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let chunk = bytes.get(offset..offset + 4).ok_or_else(|| Error::Parse {
        offset: bytes.len() as u64,
        message: format!("file ends inside the {what}"),
    })?;
    Ok(u32::from_be_bytes(chunk.try_into().expect("4-byte slice")))
}

/// Parses an unsigned-byte IDX file and checks its magic number.
pub fn parse_idx(bytes: &[u8], expected_magic: u32) -> Result<IdxArray> {
    let magic = read_u32(bytes, 0, "magic number")?;
    if magic != expected_magic {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad magic number {magic:#010x}, expected {expected_magic:#010x}"),
        });
    }
    let ndim = (magic & 0xff) as usize;
    let dims = (0..ndim)
        .map(|d| read_u32(bytes, 4 + 4 * d, "dimension header").map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let header = 4 + 4 * ndim;
    let expected = dims.iter().product::<usize>();
    let available = bytes.len() - header;
    if available < expected {
        return Err(Error::Parse {
            offset: bytes.len() as u64,
            message: format!("truncated data: {expected} bytes declared, {available} present"),
        });
    }
    if available > expected {
        return Err(Error::Parse {
            offset: (header + expected) as u64,
            message: format!("{} trailing bytes after data", available - expected),
        });
    }
    Ok(IdxArray {
        dims,
        data: bytes[header..].to_vec(),
    })
}

fn encode_idx(magic: u32, dims: &[usize], data: &[u8]) -> Result<Vec<u8>> {
    if dims.iter().product::<usize>() != data.len() {
        return Err(Error::shape("IDX payload", dims.iter().product::<usize>(), data.len()));
    }
    let mut out = magic.to_be_bytes().to_vec();
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::InvalidInput(format!("IDX dimension {d} too large")))?;
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(data);
    Ok(out)
}

/// `count` images of `rows × cols` pixels, row-major.
pub fn write_idx_images(path: &Path, count: usize, rows: usize, cols: usize, pixels: &[u8]) -> Result<()> {
    std::fs::write(path, encode_idx(IDX_IMAGES_MAGIC, &[count, rows, cols], pixels)?)?;
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    std::fs::write(path, encode_idx(IDX_LABELS_MAGIC, &[labels.len()], labels)?)?;
    Ok(())
}

pub fn read_idx_images(path: &Path) -> Result<IdxArray> {
    parse_idx(&std::fs::read(path)?, IDX_IMAGES_MAGIC)
}

pub fn read_idx_labels(path: &Path) -> Result<IdxArray> {
    parse_idx(&std::fs::read(path)?, IDX_LABELS_MAGIC)
}

/// Loads an image/label IDX pair: pixels flattened and scaled by 1/255,
/// classes named `"0"`..`"9"`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    let n = images.dims[0];
    if labels.dims[0] != n {
        return Err(Error::Consistency(format!(
            "{} images but {} labels",
            n, labels.dims[0]
        )));
    }
    let width = images.dims[1] * images.dims[2];
    let x = Matrix::from_vec(n, width, images.data.iter().map(|&p| f64::from(p) / 255.0).collect())?;
    let y: Vec<usize> = labels.data.iter().map(|&l| l as usize).collect();
    let classes = y.iter().max().map_or(0, |&m| m + 1).max(10);
    Dataset::new(
        x,
        y,
        (0..classes).map(|c| c.to_string()).collect(),
        (0..width).map(|p| format!("px{p}")).collect(),
    )
}

/// Stratified subset: `per_class` rows of every class from `train`, each
/// class split into eval (`round(per_class·eval_fraction)`) and train; the
/// whole `test` set is attached unchanged.
pub fn subset_mnist(train: &Dataset, test: &Dataset, per_class: usize, eval_fraction: f64, seed: u64) -> Result<Split> {
    if !(0.0..1.0).contains(&eval_fraction) {
        return Err(Error::Config(format!("eval_fraction {eval_fraction} outside [0, 1)")));
    }
    if per_class == 0 {
        return Err(Error::Config("per_class must be positive".into()));
    }
    let eval_per_class = (per_class as f64 * eval_fraction).round() as usize;
    if eval_per_class == 0 || eval_per_class >= per_class {
        return Err(Error::Config(format!(
            "eval_fraction {eval_fraction} leaves an empty train or eval part for {per_class} per class"
        )));
    }
    let mut rng = seeded(seed);
    let (mut train_rows, mut eval_rows) = (Vec::new(), Vec::new());
    for class in 0..train.num_classes() {
        let mut rows: Vec<usize> = (0..train.len()).filter(|&r| train.y[r] == class).collect();
        if rows.len() < per_class {
            return Err(Error::Config(format!(
                "class {} has {} samples, {per_class} requested",
                train.class_names[class],
                rows.len()
            )));
        }
        shuffle(&mut rows, &mut rng);
        eval_rows.extend_from_slice(&rows[..eval_per_class]);
        train_rows.extend_from_slice(&rows[eval_per_class..per_class]);
    }
    shuffle(&mut train_rows, &mut rng);
    shuffle(&mut eval_rows, &mut rng);
    Split::from_datasets(
        &train.select_rows(&train_rows),
        &train.select_rows(&eval_rows),
        test,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_errors_carry_offsets() {
        let good = encode_idx(IDX_LABELS_MAGIC, &[3], &[1, 2, 3]).unwrap();
        assert_eq!(parse_idx(&good, IDX_LABELS_MAGIC).unwrap().data, vec![1, 2, 3]);
        assert!(matches!(parse_idx(&good, IDX_IMAGES_MAGIC), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse_idx(&good[..9], IDX_LABELS_MAGIC), Err(Error::Parse { offset: 9, .. })));
        assert!(matches!(parse_idx(&good[..6], IDX_LABELS_MAGIC), Err(Error::Parse { offset: 6, .. })));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(parse_idx(&long, IDX_LABELS_MAGIC), Err(Error::Parse { offset: 11, .. })));
    }
}
