//! CSV and binary serialization of transfer matrices.
//!
//! Binary layout (little endian): magic `MSPC`, `u32` version, `u32` rows,
//! `u32` cols, `u64` bin count, `f64` fs, `u64` n_fft, the bin indices as
//! `u64`, then for each bin the entries column-major as `(re, im)` `f64` pairs.

use std::io::{Read, Write};
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ImpulseResponses, SpectrumMatrix};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MSPC";
const VERSION: u32 = 1;

/// Long-format CSV: `bin,freq_hz,row,col,re,im`.
pub fn write_spectrum_csv<W: Write>(spec: &SpectrumMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "freq_hz", "row", "col", "re", "im"])
        .map_err(csv_err)?;
    for (i, m) in spec.mats.iter().enumerate() {
        let f = spec.freq(i);
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                w.write_record(&[
                    spec.bins[i].to_string(),
                    f.to_string(),
                    r.to_string(),
                    c.to_string(),
                    v.re.to_string(),
                    v.im.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Long-format CSV `sample,time_s,row,col,value` over a sample range.
pub fn write_impulse_csv<W: Write>(ir: &ImpulseResponses, samples: Range<usize>, out: W) -> Result<()> {
    if samples.end > ir.len() {
        return Err(Error::Dimension(format!(
            "sample range {samples:?} beyond length {}",
            ir.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample", "time_s", "row", "col", "value"])
        .map_err(csv_err)?;
    for t in samples {
        for c in 0..ir.cols {
            for r in 0..ir.rows {
                w.write_record(&[
                    t.to_string(),
                    (t as f64 / ir.fs).to_string(),
                    r.to_string(),
                    c.to_string(),
                    ir.entry(r, c)[t].to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_spectrum_binary<W: Write>(spec: &SpectrumMatrix, mut out: W) -> Result<()> {
    let (rows, cols) = spec.shape();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(rows as u32).to_le_bytes())?;
    out.write_all(&(cols as u32).to_le_bytes())?;
    out.write_all(&(spec.len() as u64).to_le_bytes())?;
    out.write_all(&spec.fs.to_le_bytes())?;
    out.write_all(&(spec.n_fft as u64).to_le_bytes())?;
    for b in &spec.bins {
        out.write_all(&(*b as u64).to_le_bytes())?;
    }
    for m in &spec.mats {
        for v in m.iter() {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_spectrum_binary<R: Read>(mut input: R) -> Result<SpectrumMatrix> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not a spectrum file".into()));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Config(format!("unsupported spectrum file version {version}")));
    }
    let rows = read_u32(&mut input)? as usize;
    let cols = read_u32(&mut input)? as usize;
    let count = read_u64(&mut input)? as usize;
    let fs = read_f64(&mut input)?;
    let n_fft = read_u64(&mut input)? as usize;
    let bins = (0..count)
        .map(|_| read_u64(&mut input).map(|b| b as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut mats = Vec::with_capacity(count);
    for _ in 0..count {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let re = read_f64(&mut input)?;
            let im = read_f64(&mut input)?;
            data.push(Complex64::new(re, im));
        }
        mats.push(DMatrix::from_vec(rows, cols, data));
    }
    Ok(SpectrumMatrix { fs, n_fft, bins, mats })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
