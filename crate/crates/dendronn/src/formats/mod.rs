//! On-disk formats. All binary integers are little-endian.

pub mod checkpoint;
pub mod dnev;
pub mod idx;
pub mod manifest;
pub mod network;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, PathContext, Result};

pub(crate) fn read_u8s<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_u8s(r)?))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_u8s(r)?))
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4], what: &'static str) -> Result<()> {
    let got: [u8; 4] = read_u8s(r)?;
    if &got != magic {
        return Err(Error::format(what, format!("bad magic {:?}", String::from_utf8_lossy(&got))));
    }
    Ok(())
}

/// Writes `magic`, a version word and a length-prefixed JSON header.
pub(crate) fn write_json_header<W: Write, H: Serialize>(w: &mut W, magic: &[u8; 4], version: u32, header: &H) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(magic)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

pub(crate) fn read_json_header<R: Read, H: DeserializeOwned>(
    r: &mut R,
    magic: &[u8; 4],
    version: u32,
    what: &'static str,
) -> Result<H> {
    expect_magic(r, magic, what)?;
    let v = read_u32(r)?;
    if v != version {
        return Err(Error::format(what, format!("unsupported version {v}")));
    }
    let n = read_u32(r)? as usize;
    let mut json = vec![0u8; n];
    r.read_exact(&mut json)?;
    Ok(serde_json::from_slice(&json)?)
}

pub(crate) fn expect_eof<R: Read>(r: &mut R, what: &'static str) -> Result<()> {
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::format(what, "trailing bytes"));
    }
    Ok(())
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    Ok(BufWriter::new(File::create(path).at(path)?))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).at(path)?))
}

/// Pretty JSON with a trailing newline.
pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush().at(path)
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}
