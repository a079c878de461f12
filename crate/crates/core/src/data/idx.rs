//! IDX files as distributed with MNIST and Fashion-MNIST.
//!
//! Images: big-endian `u32` magic `0x00000803`, count, rows, cols, then one
//! unsigned byte per pixel. Labels: magic `0x00000801`, count, then one byte
//! per label.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn header(path: &Path, bytes: &[u8], magic: u32, words: usize) -> Result<Vec<u32>> {
    if bytes.len() < 4 * words {
        return Err(bad(path, format!("header needs {} bytes, file has {}", 4 * words, bytes.len())));
    }
    let fields: Vec<u32> = bytes[..4 * words]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if fields[0] != magic {
        return Err(bad(
            path,
            format!("magic number {:#010x}, expected {magic:#010x}", fields[0]),
        ));
    }
    Ok(fields)
}

/// Pixel rows scaled to `[0, 1]`, plus the number of images.
pub fn read_images(path: &Path) -> Result<(Tensor, usize)> {
    let bytes = fs::read(path)?;
    let h = header(path, &bytes, IMAGE_MAGIC, 4)?;
    let (count, rows, cols) = (h[1] as usize, h[2] as usize, h[3] as usize);
    let dim = rows * cols;
    let payload = &bytes[16..];
    if payload.len() < count * dim {
        return Err(bad(
            path,
            format!("truncated: {count} images of {dim} bytes need {}, found {}", count * dim, payload.len()),
        ));
    }
    let values = payload[..count * dim].iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok((Tensor::from_vec(count, dim, values)?, count))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = fs::read(path)?;
    let h = header(path, &bytes, LABEL_MAGIC, 2)?;
    let count = h[1] as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(bad(path, format!("truncated: {count} labels, found {}", payload.len())));
    }
    Ok(payload[..count].iter().map(|&b| usize::from(b)).collect())
}

/// Loads an image/label pair. The class count is one more than the largest
/// label seen.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (images, count) = read_images(images_path.as_ref())?;
    let labels = read_labels(labels_path.as_ref())?;
    if labels.len() != count {
        return Err(bad(
            labels_path.as_ref(),
            format!("{} labels for {count} images", labels.len()),
        ));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new(images, labels, num_classes)
}

pub fn write_images(path: impl AsRef<Path>, rows: u32, cols: u32, pixels: &[u8]) -> Result<()> {
    let dim = (rows * cols) as usize;
    if dim == 0 || pixels.len() % dim != 0 {
        return Err(Error::Precondition(format!(
            "{} pixels do not divide into {rows}x{cols} images",
            pixels.len()
        )));
    }
    let mut f = fs::File::create(path)?;
    for word in [IMAGE_MAGIC, (pixels.len() / dim) as u32, rows, cols] {
        f.write_all(&word.to_be_bytes())?;
    }
    f.write_all(pixels)?;
    Ok(())
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&LABEL_MAGIC.to_be_bytes())?;
    f.write_all(&(labels.len() as u32).to_be_bytes())?;
    f.write_all(labels)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_image_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
        write_images(&img, 2, 2, &[0, 255, 51, 102, 255, 0, 0, 1]).unwrap();
        write_labels(&lab, &[3, 7]).unwrap();
        let ds = load_idx(&img, &lab).unwrap();
        assert_eq!((ds.len(), ds.dim(), ds.num_classes()), (2, 4, 8));
        assert_eq!(ds.features().row(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(ds.features().row(1), &[1.0, 0.0, 0.0, 1.0 / 255.0]);
        assert_eq!(ds.labels(), &[3, 7]);
    }

    #[test]
    fn empty_payload() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
        let mut bytes = Vec::new();
        for w in [IMAGE_MAGIC, 0, 28, 28] {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        fs::write(&img, bytes).unwrap();
        write_labels(&lab, &[]).unwrap();
        let ds = load_idx(&img, &lab).unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.dim(), 784);
    }

    #[test]
    fn wrong_magic_truncation_and_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
        write_images(&img, 1, 2, &[1, 2, 3, 4]).unwrap();

        // labels file given where images are expected
        write_labels(&lab, &[0, 1]).unwrap();
        assert!(matches!(load_idx(&lab, &lab), Err(Error::Idx { .. })));

        write_labels(&lab, &[0, 1, 1]).unwrap();
        let err = load_idx(&img, &lab).unwrap_err();
        assert!(err.to_string().contains("3 labels for 2 images"), "{err}");

        let mut bytes = fs::read(&img).unwrap();
        bytes.pop();
        fs::write(&img, bytes).unwrap();
        write_labels(&lab, &[0, 1]).unwrap();
        assert!(load_idx(&img, &lab).unwrap_err().to_string().contains("truncated"));

        fs::write(&img, [0u8, 0, 8]).unwrap();
        assert!(matches!(load_idx(&img, &lab), Err(Error::Idx { .. })));
    }
}
