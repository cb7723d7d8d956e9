//! MNIST IDX ingestion.
//!
//! Parses the classic big-endian IDX pair (images magic 0x00000803, labels
//! magic 0x00000801), flattens 28x28 images to 784 coordinates, and scales
//! pixel p in [0, 255] to p/127.5 - 1 so samples live in [-1, 1].
//! Labels are returned for integrity checks but play no role in training
//! (generation is unconditional).

use std::path::Path;

use super::{BatchTag, SampleBatch};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], offset: usize, path: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::format(
            path,
            format!(
                "need 4 bytes at offset {offset}, file ends at byte {}",
                bytes.len()
            ),
        ));
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Loads an MNIST image/label file pair. Returns the scaled image batch
/// (n x 784) and the raw labels.
pub fn mnist_load(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(SampleBatch, Vec<u8>)> {
    let ipath = images_path.as_ref().display().to_string();
    let lpath = labels_path.as_ref().display().to_string();
    let ibytes =
        std::fs::read(images_path.as_ref()).map_err(|e| Error::io(ipath.clone(), e))?;
    let lbytes =
        std::fs::read(labels_path.as_ref()).map_err(|e| Error::io(lpath.clone(), e))?;

    let magic = read_be_u32(&ibytes, 0, &ipath)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(
            &ipath,
            format!("bad image magic {magic:#010x} at offset 0, expected {IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = read_be_u32(&ibytes, 4, &ipath)? as usize;
    let rows = read_be_u32(&ibytes, 8, &ipath)? as usize;
    let cols = read_be_u32(&ibytes, 12, &ipath)? as usize;
    if rows != 28 || cols != 28 {
        return Err(Error::format(
            &ipath,
            format!("expected 28x28 images, header at offset 8 declares {rows}x{cols}"),
        ));
    }
    let need = 16 + count * rows * cols;
    if ibytes.len() < need {
        return Err(Error::format(
            &ipath,
            format!(
                "pixel data truncated: file ends at byte {}, need byte {need}",
                ibytes.len()
            ),
        ));
    }

    let lmagic = read_be_u32(&lbytes, 0, &lpath)?;
    if lmagic != LABELS_MAGIC {
        return Err(Error::format(
            &lpath,
            format!("bad label magic {lmagic:#010x} at offset 0, expected {LABELS_MAGIC:#010x}"),
        ));
    }
    let lcount = read_be_u32(&lbytes, 4, &lpath)? as usize;
    if lcount != count {
        return Err(Error::format(
            &lpath,
            format!(
                "label count {lcount} at offset 4 does not match image count {count}"
            ),
        ));
    }
    if lbytes.len() < 8 + lcount {
        return Err(Error::format(
            &lpath,
            format!(
                "label data truncated: file ends at byte {}, need byte {}",
                lbytes.len(),
                8 + lcount
            ),
        ));
    }

    let dim = rows * cols;
    let mut data = Vec::with_capacity(count * dim);
    for &p in &ibytes[16..16 + count * dim] {
        data.push(p as f64 / 127.5 - 1.0);
    }
    let labels = lbytes[8..8 + lcount].to_vec();
    let batch = SampleBatch::new(Tensor::new(count, dim, data)?, BatchTag::Real)?;
    Ok((batch, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_idx(dir: &Path, n: usize, pixel: impl Fn(usize) -> u8) -> (String, String) {
        let ipath = dir.join("images.idx");
        let lpath = dir.join("labels.idx");
        let mut f = std::fs::File::create(&ipath).unwrap();
        f.write_all(&IMAGES_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(n as u32).to_be_bytes()).unwrap();
        f.write_all(&28u32.to_be_bytes()).unwrap();
        f.write_all(&28u32.to_be_bytes()).unwrap();
        let pixels: Vec<u8> = (0..n * 784).map(pixel).collect();
        f.write_all(&pixels).unwrap();
        let mut f = std::fs::File::create(&lpath).unwrap();
        f.write_all(&LABELS_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(n as u32).to_be_bytes()).unwrap();
        f.write_all(&vec![7u8; n]).unwrap();
        (
            ipath.display().to_string(),
            lpath.display().to_string(),
        )
    }

    #[test]
    fn scales_endpoints_and_midpoint() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_idx(dir.path(), 2, |i| match i % 3 {
            0 => 0,
            1 => 255,
            _ => 127,
        });
        let (batch, labels) = mnist_load(&ip, &lp).unwrap();
        assert_eq!(batch.m(), 2);
        assert_eq!(batch.dim(), 784);
        assert_eq!(labels, vec![7, 7]);
        let v = batch.values().data();
        assert_eq!(v[0], -1.0);
        assert_eq!(v[1], 1.0);
        assert!((v[2] - (127.0 / 127.5 - 1.0)).abs() < 1e-15);
        assert!((v[2] + 1.0 / 255.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_magic_with_offset() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_idx(dir.path(), 1, |_| 0);
        let mut bytes = std::fs::read(&ip).unwrap();
        bytes[3] = 0x99;
        std::fs::write(&ip, &bytes).unwrap();
        let err = mnist_load(&ip, &lp).unwrap_err().to_string();
        assert!(err.contains("offset 0"), "{err}");
    }

    #[test]
    fn rejects_truncated_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_idx(dir.path(), 3, |_| 1);
        let bytes = std::fs::read(&ip).unwrap();
        std::fs::write(&ip, &bytes[..bytes.len() - 5]).unwrap();
        let err = mnist_load(&ip, &lp).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn rejects_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_idx(dir.path(), 2, |_| 1);
        let mut bytes = std::fs::read(&lp).unwrap();
        bytes[7] = 9;
        std::fs::write(&lp, &bytes).unwrap();
        let err = mnist_load(&ip, &lp).unwrap_err().to_string();
        assert!(err.contains("does not match image count"), "{err}");
    }
}
