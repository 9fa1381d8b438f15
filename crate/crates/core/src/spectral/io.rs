//! Field snapshot files and the trigonometric-polynomial text format.
//!
//! Snapshot layout (all integers little-endian):
//!
//! ```text
//! b"CGLF" | version: u32 | d: u32 | n_per_dim: u32 | real: u8 | coeffs
//! ```
//!
//! `coeffs` holds `n^d` pairs `(re, im)` of little-endian `f64`, in row-major
//! lattice order with every axis running `k = −n/2, …, n/2 − 1`.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{GridSpec, SpectralField, TrigPolynomial, Wavevector};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CGLF";
pub const VERSION: u32 = 1;

fn lattice_order(grid: &GridSpec) -> impl Iterator<Item = usize> + '_ {
    let n = grid.n_per_dim;
    (0..grid.size()).map(move |pos| {
        // pos enumerates k in ascending order per axis; map to FFT storage.
        let mut rem = pos;
        let mut digits = vec![0usize; grid.d];
        for axis in (0..grid.d).rev() {
            digits[axis] = rem % n;
            rem /= n;
        }
        digits.iter().fold(0usize, |acc, &j| acc * n + (j + n / 2) % n)
    })
}

pub fn write_field<W: Write>(mut w: W, field: &SpectralField) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.d as u32).to_le_bytes())?;
    w.write_all(&(grid.n_per_dim as u32).to_le_bytes())?;
    w.write_all(&[field.is_real() as u8])?;
    for idx in lattice_order(grid) {
        let c = field.coeffs()[idx];
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Read a snapshot. The dealiasing fraction is not stored; the grid gets the
/// default 2/3 rule.
pub fn read_field<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not a CGLF snapshot".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let grid = GridSpec::new(d, n).map_err(|e| Error::Format(e.to_string()))?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.size()];
    for idx in lattice_order(&grid) {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        coeffs[idx] = Complex64::new(re, im);
    }
    SpectralField::from_coeffs(grid, coeffs, flag[0] != 0)
}

/// One line per canonical term: `k_1 … k_d cos_coeff sin_coeff`.
pub fn write_trig<W: Write>(mut w: W, p: &TrigPolynomial) -> Result<()> {
    for (k, c, s) in p.terms() {
        for comp in k.components() {
            write!(w, "{comp} ")?;
        }
        writeln!(w, "{c:e} {s:e}")?;
    }
    Ok(())
}

/// Parse the text format. Blank lines and lines starting with `#` are
/// skipped. `d` is taken from the first term line.
pub fn read_trig<R: BufRead>(r: R) -> Result<TrigPolynomial> {
    let mut d = None;
    let mut terms = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(Error::Format(format!("line {}: expected `k… cos sin`", lineno + 1)));
        }
        let dim = tokens.len() - 2;
        match d {
            None => d = Some(dim),
            Some(prev) if prev != dim => {
                return Err(Error::Format(format!(
                    "line {}: {dim} frequency components, expected {prev}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        let bad = |t: &str| Error::Format(format!("line {}: cannot parse `{t}`", lineno + 1));
        let k = tokens[..dim]
            .iter()
            .map(|t| t.parse::<i32>().map_err(|_| bad(t)))
            .collect::<Result<Vec<_>>>()?;
        let c: f64 = tokens[dim].parse().map_err(|_| bad(tokens[dim]))?;
        let s: f64 = tokens[dim + 1].parse().map_err(|_| bad(tokens[dim + 1]))?;
        terms.push((Wavevector(k), c, s));
    }
    let d = d.ok_or_else(|| Error::Format("no terms".into()))?;
    Ok(TrigPolynomial::from_terms(d, terms))
}
