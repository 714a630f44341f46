//! Uniformly sampled functions of one variable and of (x, t), with their
//! CSV and binary file layouts.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Spatial,
    Temporal,
    /// Samples over a spectral parameter such as `m` or `k`.
    Spectral,
}

/// Complex samples on a uniform grid over `[start, end]`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub start: f64,
    pub end: f64,
    pub values: Vec<Complex64>,
    pub kind: GridKind,
}

impl GridFunction {
    pub fn new(start: f64, end: f64, values: Vec<Complex64>, kind: GridKind) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples, got {}", values.len())));
        }
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::InvalidGrid(format!("bad interval [{start}, {end}]")));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidGrid("non-finite sample".into()));
        }
        Ok(Self { start, end, values, kind })
    }

    /// Sample `f` at `n` equispaced points of `[start, end]`.
    pub fn from_fn(
        start: f64,
        end: f64,
        n: usize,
        kind: GridKind,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples, got {n}")));
        }
        let h = (end - start) / (n - 1) as f64;
        let values = (0..n).map(|j| f(start + j as f64 * h)).collect();
        Self::new(start, end, values, kind)
    }

    pub fn zeros(start: f64, end: f64, n: usize, kind: GridKind) -> Result<Self> {
        Self::new(start, end, vec![Complex64::new(0.0, 0.0); n], kind)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / (self.values.len() - 1) as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.start + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.coord(j))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let h = self.spacing();
        let s = (x - self.start) / h;
        let n = self.len();
        if s < -1e-12 || s > (n - 1) as f64 + 1e-12 {
            return Complex64::new(0.0, 0.0);
        }
        let s = s.clamp(0.0, (n - 1) as f64);
        let j = (s.floor() as usize).min(n - 2);
        let th = s - j as f64;
        self.values[j] * (1.0 - th) + self.values[j + 1] * th
    }

    /// `‖f‖_{L²}` by the trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        crate::quad::trapezoid(&sq, self.spacing()).sqrt()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.len() == other.len()
            && (self.start - other.start).abs() <= 1e-12 * (1.0 + self.start.abs())
            && (self.end - other.end).abs() <= 1e-12 * (1.0 + self.end.abs())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        GridFunction { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn linear_combination(&self, a: Complex64, other: &GridFunction, b: Complex64) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("linear combination of different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        Ok(GridFunction { values, ..self.clone() })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        writeln!(w, "coordinate,re,im")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", self.coord(j), v.re, v.im)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, kind: GridKind) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut coords = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 {
                if line != "coordinate,re,im" {
                    return Err(Error::Format(format!("expected header 'coordinate,re,im', got '{line}'")));
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Format(format!("line {}: expected 3 columns", lineno + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))
            };
            coords.push(parse(fields[0])?);
            values.push(Complex64::new(parse(fields[1])?, parse(fields[2])?));
        }
        if coords.len() < 2 {
            return Err(Error::Format("need at least two rows".into()));
        }
        let start = coords[0];
        let end = *coords.last().unwrap();
        let h = (end - start) / (coords.len() - 1) as f64;
        for (j, &x) in coords.iter().enumerate() {
            let expect = start + j as f64 * h;
            if (x - expect).abs() > 1e-9 * h.abs().max((end - start).abs()) {
                return Err(Error::Format(format!("non-uniform spacing at row {}", j + 1)));
            }
        }
        Self::new(start, end, values, kind)
    }

    pub fn load_csv(path: &Path, kind: GridKind) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, kind)
    }
}

/// Samples `u(x_i, t_n)` on a uniform space-time grid, stored slice by
/// slice (`values[n * nx + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub x_start: f64,
    pub x_end: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub nx: usize,
    pub nt: usize,
    pub values: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn zeros(x_start: f64, x_end: f64, nx: usize, t_start: f64, t_end: f64, nt: usize) -> Result<Self> {
        if nx < 2 || nt < 2 {
            return Err(Error::InvalidGrid(format!("field needs nx, nt >= 2 (got {nx}, {nt})")));
        }
        if !(x_end > x_start && t_end > t_start) {
            return Err(Error::InvalidGrid("empty space-time box".into()));
        }
        Ok(Self {
            x_start,
            x_end,
            t_start,
            t_end,
            nx,
            nt,
            values: vec![Complex64::new(0.0, 0.0); nx * nt],
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_end - self.x_start) / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.nt - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_start + i as f64 * self.dx()
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t_start + n as f64 * self.dt()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt).map(|n| self.t(n)).collect()
    }

    #[inline]
    pub fn at(&self, i: usize, n: usize) -> Complex64 {
        self.values[n * self.nx + i]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, n: usize) -> &mut Complex64 {
        &mut self.values[n * self.nx + i]
    }

    pub fn slice(&self, n: usize) -> &[Complex64] {
        &self.values[n * self.nx..(n + 1) * self.nx]
    }

    pub fn slice_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.values[n * self.nx..(n + 1) * self.nx]
    }

    pub fn slice_function(&self, n: usize) -> GridFunction {
        GridFunction {
            start: self.x_start,
            end: self.x_end,
            values: self.slice(n).to_vec(),
            kind: GridKind::Spatial,
        }
    }

    pub fn column(&self, i: usize) -> GridFunction {
        GridFunction {
            start: self.t_start,
            end: self.t_end,
            values: (0..self.nt).map(|n| self.at(i, n)).collect(),
            kind: GridKind::Temporal,
        }
    }

    pub fn same_grid(&self, other: &SpaceTimeField) -> bool {
        self.nx == other.nx
            && self.nt == other.nt
            && (self.x_start - other.x_start).abs() < 1e-12
            && (self.x_end - other.x_end).abs() < 1e-12 * (1.0 + self.x_end.abs())
            && (self.t_start - other.t_start).abs() < 1e-12
            && (self.t_end - other.t_end).abs() < 1e-12 * (1.0 + self.t_end.abs())
    }

    /// Restrict to the columns whose x lies in `[x_lo, x_hi]` (grid-aligned).
    pub fn restrict_x(&self, i_lo: usize, i_hi: usize) -> SpaceTimeField {
        let nx = i_hi - i_lo + 1;
        let mut values = Vec::with_capacity(nx * self.nt);
        for n in 0..self.nt {
            values.extend_from_slice(&self.slice(n)[i_lo..=i_hi]);
        }
        SpaceTimeField {
            x_start: self.x(i_lo),
            x_end: self.x(i_hi),
            t_start: self.t_start,
            t_end: self.t_end,
            nx,
            nt: self.nt,
            values,
        }
    }

    /// Trapezoid `L²_x` norm of slice `n`.
    pub fn slice_l2(&self, n: usize) -> f64 {
        let sq: Vec<f64> = self.slice(n).iter().map(|v| v.norm_sqr()).collect();
        crate::quad::trapezoid(&sq, self.dx()).sqrt()
    }

    /// `max_n ‖u(·, t_n) − v(·, t_n)‖_{L²}`.
    pub fn max_slice_l2_distance(&self, other: &SpaceTimeField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        let h = self.dx();
        let mut worst = 0.0f64;
        for n in 0..self.nt {
            let sq: Vec<f64> = self
                .slice(n)
                .iter()
                .zip(other.slice(n))
                .map(|(a, b)| (a - b).norm_sqr())
                .collect();
            worst = worst.max(crate::quad::trapezoid(&sq, h).sqrt());
        }
        Ok(worst)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SpaceTimeField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, a: Complex64, other: &SpaceTimeField) -> Result<()> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("axpy on different grids".into()));
        }
        for (u, v) in self.values.iter_mut().zip(&other.values) {
            *u += a * v;
        }
        Ok(())
    }

    /// CSV rows `x,t,re,im`, time-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        writeln!(w, "x,t,re,im")?;
        for n in 0..self.nt {
            let t = self.t(n);
            for i in 0..self.nx {
                let v = self.at(i, n);
                writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", self.x(i), t, v.re, v.im)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Binary layout, little-endian throughout:
    ///
    /// | bytes | content |
    /// |-------|---------|
    /// | 8     | magic `HNLSFLD1` |
    /// | 8+8   | `nx`, `nt` as u64 |
    /// | 4×8   | `x_start, x_end, t_start, t_end` as f64 |
    /// | 16·nx·nt | `(re, im)` pairs, time-major |
    pub fn write_binary<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&(self.nx as u64).to_le_bytes())?;
        w.write_all(&(self.nt as u64).to_le_bytes())?;
        for v in [self.x_start, self.x_end, self.t_start, self.t_end] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(Error::Format("bad field magic".into()));
        }
        let mut b8 = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let nx = read_u64(&mut input)? as usize;
        let nt = read_u64(&mut input)? as usize;
        let read_f64 = |r: &mut R| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let x_start = read_f64(&mut input)?;
        let x_end = read_f64(&mut input)?;
        let t_start = read_f64(&mut input)?;
        let t_end = read_f64(&mut input)?;
        let mut field = SpaceTimeField::zeros(x_start, x_end, nx, t_start, t_end, nt)?;
        for v in field.values.iter_mut() {
            let re = read_f64(&mut input)?;
            let im = read_f64(&mut input)?;
            *v = Complex64::new(re, im);
        }
        Ok(field)
    }
}

const FIELD_MAGIC: &[u8; 8] = b"HNLSFLD1";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_spacing_check() {
        let f = GridFunction::from_fn(0.0, 2.0, 9, GridKind::Spatial, |x| Complex64::new(x, -x * x)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = GridFunction::read_csv(buf.as_slice(), GridKind::Spatial).unwrap();
        assert!(f.same_grid(&g));
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!((a - b).norm() < 1e-15);
        }

        let bad = "coordinate,re,im\n0,1,0\n0.5,1,0\n1.2,1,0\n";
        assert!(matches!(GridFunction::read_csv(bad.as_bytes(), GridKind::Spatial), Err(Error::Format(_))));
        let header = "x,re,im\n0,1,0\n1,1,0\n";
        assert!(GridFunction::read_csv(header.as_bytes(), GridKind::Spatial).is_err());
    }

    #[test]
    fn binary_layout() {
        let mut u = SpaceTimeField::zeros(0.0, 1.0, 3, 0.0, 2.0, 2).unwrap();
        *u.at_mut(1, 1) = Complex64::new(1.5, -2.0);
        let mut buf = Vec::new();
        u.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 + 32 + 16 * 6);
        assert_eq!(&buf[..8], b"HNLSFLD1");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 3);
        let v = SpaceTimeField::read_binary(buf.as_slice()).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn interpolation_and_norms() {
        let f = GridFunction::from_fn(0.0, 1.0, 11, GridKind::Temporal, |t| Complex64::new(2.0 * t, 0.0)).unwrap();
        assert!((f.interpolate(0.55) - Complex64::new(1.1, 0.0)).norm() < 1e-14);
        assert_eq!(f.interpolate(1.5), Complex64::new(0.0, 0.0));
        let one = GridFunction::from_fn(0.0, 4.0, 17, GridKind::Spatial, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!((one.l2_norm() - 2.0).abs() < 1e-14);
    }
}
