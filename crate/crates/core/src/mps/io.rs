//! Binary MPS container.
//!
//! Layout (little-endian): magic `QPMPS001`, `u32` site count, `u32` bond cap,
//! `u8` canonical-form tag, `u32` center, `N + 1` `u32` bond dimensions, then
//! every site tensor in `(left, physical, right)` row-major order as
//! `(re, im)` pairs of `f64`, and finally the magic again as a trailer.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::C64;

use super::{CanonicalForm, Mps, SiteTensor};

const MAGIC: &[u8; 8] = b"QPMPS001";
const MAX_SITES: usize = 4096;
const MAX_BOND: usize = 1 << 16;

fn form_tag(form: CanonicalForm) -> (u8, u32) {
    match form {
        CanonicalForm::Left => (0, 0),
        CanonicalForm::Right => (1, 0),
        CanonicalForm::Mixed(c) => (2, c as u32),
        CanonicalForm::None => (3, 0),
    }
}

pub fn write_mps<W: Write>(out: &mut W, mps: &Mps) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(mps.n_sites() as u32).to_le_bytes())?;
    out.write_all(&(mps.max_bond as u32).to_le_bytes())?;
    let (tag, center) = form_tag(mps.form);
    out.write_all(&[tag])?;
    out.write_all(&center.to_le_bytes())?;
    out.write_all(&1u32.to_le_bytes())?;
    for t in &mps.tensors {
        out.write_all(&(t.right as u32).to_le_bytes())?;
    }
    for t in &mps.tensors {
        for z in &t.data {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.write_all(MAGIC)
}

pub fn to_bytes(mps: &Mps) -> Vec<u8> {
    let mut buf = Vec::new();
    write_mps(&mut buf, mps).expect("writing to a Vec cannot fail");
    buf
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<()> {
    input
        .read_exact(buf)
        .map_err(|e| Error::format("MPS file", format!("truncated: {e}")))
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(input, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_mps<R: Read>(input: &mut R) -> Result<Mps> {
    let mut magic = [0u8; 8];
    read_exact(input, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format("MPS file", "bad magic"));
    }
    let n = read_u32(input)? as usize;
    if n == 0 || n > MAX_SITES {
        return Err(Error::format("MPS file", format!("implausible site count {n}")));
    }
    let max_bond = read_u32(input)? as usize;
    let mut tag = [0u8; 1];
    read_exact(input, &mut tag)?;
    let center = read_u32(input)? as usize;
    let form = match tag[0] {
        0 => CanonicalForm::Left,
        1 => CanonicalForm::Right,
        2 if center < n => CanonicalForm::Mixed(center),
        3 => CanonicalForm::None,
        t => return Err(Error::format("MPS file", format!("bad canonical-form tag {t} (center {center})"))),
    };
    let dims = (0..=n).map(|_| read_u32(input).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    if dims[0] != 1 || dims[n] != 1 || dims.iter().any(|&d| d == 0 || d > MAX_BOND) {
        return Err(Error::format("MPS file", format!("invalid bond dimensions {dims:?}")));
    }
    let mut tensors = Vec::with_capacity(n);
    for j in 0..n {
        let (left, right) = (dims[j], dims[j + 1]);
        let len = left * 2 * right;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let re = read_f64(input)?;
            let im = read_f64(input)?;
            data.push(C64::new(re, im));
        }
        tensors.push(SiteTensor { left, right, data });
    }
    read_exact(input, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format("MPS file", "missing trailer"));
    }
    Ok(Mps {
        tensors,
        form,
        max_bond,
    })
}

/// Decode a buffer that must contain exactly one MPS.
pub fn from_bytes(bytes: &[u8]) -> Result<Mps> {
    let mut cursor = bytes;
    let m = read_mps(&mut cursor)?;
    if !cursor.is_empty() {
        return Err(Error::format("MPS file", format!("{} trailing bytes", cursor.len())));
    }
    Ok(m)
}
