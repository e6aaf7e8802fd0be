//! Binary snapshot container: grid header, parity tags, time, coefficient
//! payload. Round-trips are bit-exact.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic   8 bytes  b"SMHDSNP1"
//! nx, ny, nz       u32 each
//! time             f64
//! n_fields         u32
//! per field: name_len u8, name bytes, parity tag u8 per component (0 even, 1 odd)
//! per field, component 0..3, kx-major, then ky, then m: re f64, im f64
//! ```

use super::{Grid, Parity, ScalarField, VectorField};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"SMHDSNP1";

/// A time stamp plus named vector fields on one grid.
pub struct Snapshot {
    pub time: f64,
    pub fields: Vec<(String, VectorField)>,
}

pub fn write_snapshot(path: &Path, time: f64, fields: &[(&str, &VectorField)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let grid = fields
        .first()
        .map(|(_, f)| f.grid())
        .ok_or_else(|| Error::Snapshot("no fields to write".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(grid.nx() as u32).to_le_bytes())?;
    w.write_all(&(grid.ny() as u32).to_le_bytes())?;
    w.write_all(&(grid.nz() as u32).to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    w.write_all(&(fields.len() as u32).to_le_bytes())?;
    for (name, field) in fields {
        if field.grid() != grid {
            return Err(Error::Snapshot("fields share one grid per snapshot".into()));
        }
        let bytes = name.as_bytes();
        if bytes.len() > u8::MAX as usize {
            return Err(Error::Snapshot(format!("field name too long: {name}")));
        }
        w.write_all(&[bytes.len() as u8])?;
        w.write_all(bytes)?;
        for c in 0..3 {
            let tag = match field.comp(c).parity() {
                Parity::EvenZ => 0u8,
                Parity::OddZ => 1u8,
            };
            w.write_all(&[tag])?;
        }
    }
    for (_, field) in fields {
        for c in 0..3 {
            for coeff in field.comp(c).coeffs() {
                w.write_all(&coeff.re.to_le_bytes())?;
                w.write_all(&coeff.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    let nz = read_u32(&mut r)? as usize;
    r.read_exact(&mut f64buf)?;
    let time = f64::from_le_bytes(f64buf);
    let n_fields = read_u32(&mut r)? as usize;
    let grid = Grid::new(nx, ny, nz)?;
    let mut headers = Vec::with_capacity(n_fields);
    for _ in 0..n_fields {
        let mut len = [0u8; 1];
        r.read_exact(&mut len)?;
        let mut name = vec![0u8; len[0] as usize];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Snapshot("bad field name".into()))?;
        let mut parities = [Parity::EvenZ; 3];
        for p in &mut parities {
            let mut tag = [0u8; 1];
            r.read_exact(&mut tag)?;
            *p = match tag[0] {
                0 => Parity::EvenZ,
                1 => Parity::OddZ,
                t => return Err(Error::Snapshot(format!("bad parity tag {t}"))),
            };
        }
        headers.push((name, parities));
    }
    let mut fields = Vec::with_capacity(n_fields);
    for (name, parities) in headers {
        let mut comps = Vec::with_capacity(3);
        for &parity in &parities {
            let mut f = ScalarField::zeros(grid, parity);
            for idx in 0..grid.spec_len() {
                r.read_exact(&mut f64buf)?;
                let re = f64::from_le_bytes(f64buf);
                r.read_exact(&mut f64buf)?;
                let im = f64::from_le_bytes(f64buf);
                f.coeffs_mut()[idx] = Complex64::new(re, im);
            }
            comps.push(f);
        }
        let field = VectorField::from_components([
            comps[0].clone(),
            comps[1].clone(),
            comps[2].clone(),
        ]);
        fields.push((name, field));
    }
    Ok(Snapshot { time, fields })
}
