//! Flat binary and CSV encodings of [`Field2D`].
//!
//! Binary layout (all little-endian): `half_extent: f64`, `n: u64`, then
//! `n²` pairs `(re: f64, im: f64)` in row-major order.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{Field2D, Grid2D};
use crate::error::{Error, Result};

pub fn write_binary<W: Write>(field: &Field2D, mut out: W) -> Result<()> {
    let grid = field.grid();
    out.write_all(&grid.half_extent().to_le_bytes())?;
    out.write_all(&(grid.points_per_side() as u64).to_le_bytes())?;
    for z in field.values() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Field2D> {
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let half_extent = f64::from_le_bytes(word);
    input.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    let grid = Grid2D::new(half_extent, n)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        input.read_exact(&mut word)?;
        let re = f64::from_le_bytes(word);
        input.read_exact(&mut word)?;
        let im = f64::from_le_bytes(word);
        values.push(Complex64::new(re, im));
    }
    Field2D::new(grid, values)
}

pub fn to_bytes(field: &Field2D) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + 16 * field.values().len());
    write_binary(field, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// CSV for inspection: a `# half_extent,n` line, the header `x,y,re,im`,
/// then one row per grid point.
pub fn write_csv<W: Write>(field: &Field2D, mut out: W) -> Result<()> {
    let grid = field.grid();
    writeln!(out, "# {:.16e},{}", grid.half_extent(), grid.points_per_side())?;
    writeln!(out, "x,y,re,im")?;
    for (idx, z) in field.values().iter().enumerate() {
        let (x, y) = grid.position(idx);
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", x, y, z.re, z.im)?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Field2D> {
    let bad = |msg: &str| Error::InvalidArgument(format!("field csv: {msg}"));
    let mut lines = input.lines();
    let meta = lines.next().ok_or_else(|| bad("empty input"))??;
    let meta = meta.strip_prefix("# ").ok_or_else(|| bad("missing grid line"))?;
    let (extent, n) = meta.split_once(',').ok_or_else(|| bad("malformed grid line"))?;
    let extent: f64 = extent.trim().parse().map_err(|_| bad("bad half extent"))?;
    let n: usize = n.trim().parse().map_err(|_| bad("bad point count"))?;
    let grid = Grid2D::new(extent, n)?;
    let header = lines.next().ok_or_else(|| bad("missing header"))??;
    if header.trim() != "x,y,re,im" {
        return Err(bad("unexpected header"));
    }
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad("expected four columns"));
        }
        let re: f64 = cols[2].trim().parse().map_err(|_| bad("bad real part"))?;
        let im: f64 = cols[3].trim().parse().map_err(|_| bad("bad imaginary part"))?;
        values.push(Complex64::new(re, im));
    }
    Field2D::new(grid, values)
}
