//! IDX files as used by MNIST: unsigned-byte images and labels.

use std::io::{Read, Write};
use std::path::Path;

use super::{create, expect_eof, open, read_u8s};
use crate::error::{Error, PathContext, Result};

fn read_be_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_be_bytes(read_u8s(r)?))
}

fn read_header<R: Read>(r: &mut R, dims: u8) -> Result<Vec<usize>> {
    let magic: [u8; 4] = read_u8s(r)?;
    if magic[..2] != [0, 0] || magic[2] != 0x08 || magic[3] != dims {
        return Err(Error::format("idx file", format!("expected ubyte with {dims} dims, magic {magic:?}")));
    }
    (0..dims).map(|_| Ok(read_be_u32(r)? as usize)).collect()
}

/// Images of an `idx3-ubyte` file: `(rows, cols, pixels per image)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<u8>>,
}

pub fn read_images<R: Read>(r: &mut R) -> Result<IdxImages> {
    let dims = read_header(r, 3)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    let mut images = Vec::with_capacity(n);
    for _ in 0..n {
        let mut img = vec![0u8; rows * cols];
        r.read_exact(&mut img)?;
        images.push(img);
    }
    expect_eof(r, "idx file")?;
    Ok(IdxImages { rows, cols, images })
}

pub fn read_labels<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let n = read_header(r, 1)?[0];
    let mut labels = vec![0u8; n];
    r.read_exact(&mut labels)?;
    expect_eof(r, "idx file")?;
    Ok(labels)
}

pub fn load_images(path: &Path) -> Result<IdxImages> {
    read_images(&mut open(path)?)
}

pub fn load_labels(path: &Path) -> Result<Vec<u8>> {
    read_labels(&mut open(path)?)
}

pub fn write_images<W: Write>(w: &mut W, data: &IdxImages) -> Result<()> {
    w.write_all(&[0, 0, 0x08, 3])?;
    for d in [data.images.len(), data.rows, data.cols] {
        w.write_all(&(d as u32).to_be_bytes())?;
    }
    for img in &data.images {
        if img.len() != data.rows * data.cols {
            return Err(Error::format("idx file", "image size differs from rows x cols"));
        }
        w.write_all(img)?;
    }
    Ok(())
}

pub fn write_labels<W: Write>(w: &mut W, labels: &[u8]) -> Result<()> {
    w.write_all(&[0, 0, 0x08, 1])?;
    w.write_all(&(labels.len() as u32).to_be_bytes())?;
    w.write_all(labels)?;
    Ok(())
}

pub fn save_images(path: &Path, data: &IdxImages) -> Result<()> {
    let mut w = create(path)?;
    write_images(&mut w, data)?;
    w.flush().at(path)
}

pub fn save_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    write_labels(&mut w, labels)?;
    w.flush().at(path)
}
