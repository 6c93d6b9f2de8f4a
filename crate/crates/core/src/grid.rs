//! Uniform lattices in `R^n` with multilinear interpolation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"FWGRID01";

/// Anything that can be evaluated at a point of `R^n`.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
}

/// Axis-aligned lattice geometry: node `i` on axis `k` sits at
/// `center[k] - extent[k] + i·h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: Vec<f64>,
    /// Half-width per axis.
    pub extent: Vec<f64>,
    pub h: f64,
}

impl GridSpec {
    pub fn new(center: Vec<f64>, extent: Vec<f64>, h: f64) -> Result<Self> {
        if center.len() != extent.len() || center.is_empty() {
            return Err(Error::Argument("center and extent must have the same positive length".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Argument(format!("grid spacing must be positive, got {h}")));
        }
        if extent.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("extent and center must be finite, extent >= 0".into()));
        }
        Ok(GridSpec { center, extent, h })
    }

    /// Cube `[-e, e]^n` around the origin.
    pub fn cube(n: usize, e: f64, h: f64) -> Result<Self> {
        GridSpec::new(vec![0.0; n], vec![e; n], h)
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.extent
            .iter()
            .map(|e| (2.0 * e / self.h + 1e-9).floor() as usize + 1)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn origin(&self) -> Vec<f64> {
        self.center.iter().zip(&self.extent).map(|(c, e)| c - e).collect()
    }

    /// Coordinates of the node with flat row-major index `idx`.
    pub fn node(&self, idx: usize, out: &mut [f64]) {
        let dims = self.dims();
        let mut rem = idx;
        for k in (0..dims.len()).rev() {
            let i = rem % dims[k];
            rem /= dims[k];
            out[k] = self.center[k] - self.extent[k] + i as f64 * self.h;
        }
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..self.len())
            .map(|i| {
                let mut x = vec![0.0; n];
                self.node(i, &mut x);
                x
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    dims: Vec<usize>,
    pub samples: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec) -> Self {
        let dims = spec.dims();
        let len = dims.iter().product();
        GridFunction {
            spec,
            dims,
            samples: vec![0.0; len],
        }
    }

    pub fn from_samples(spec: GridSpec, samples: Vec<f64>) -> Result<Self> {
        let dims = spec.dims();
        let len: usize = dims.iter().product();
        if samples.len() != len {
            return Err(Error::Input(format!("expected {len} samples, got {}", samples.len())));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("grid samples must be finite".into()));
        }
        Ok(GridFunction { spec, dims, samples })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut g = GridFunction::zeros(spec);
        let mut x = vec![0.0; g.spec.n()];
        for i in 0..g.samples.len() {
            g.spec.node(i, &mut x);
            g.samples[i] = f(&x);
        }
        g
    }

    /// Samples a field on the grid.
    pub fn sample(spec: GridSpec, field: &dyn Field) -> Self {
        GridFunction::from_fn(spec, |x| field.eval(x))
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn cell_volume(&self) -> f64 {
        self.spec.h.powi(self.n() as i32)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `L^p` norm `(h^n Σ|f|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let terms: Vec<f64> = self.samples.iter().map(|v| (v.abs() / m).powf(p)).collect();
        m * (self.cell_volume() * crate::numeric::pairwise_sum(&terms)).powf(1.0 / p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            spec: self.spec.clone(),
            dims: self.dims.clone(),
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Multilinear interpolation; zero outside the lattice.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        let mut base = [0usize; 8];
        let mut frac = [0f64; 8];
        assert!(n <= 8, "interpolation supports n <= 8");
        for k in 0..n {
            let u = (x[k] - (self.spec.center[k] - self.spec.extent[k])) / self.spec.h;
            let last = self.dims[k] - 1;
            if !(u >= 0.0) || u > last as f64 {
                return 0.0;
            }
            let i = (u.floor() as usize).min(last.saturating_sub(1));
            base[k] = i;
            frac[k] = if last == 0 { 0.0 } else { u - i as f64 };
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0usize;
            let mut skip = false;
            for k in 0..n {
                let bit = (corner >> k) & 1;
                let i = base[k] + bit;
                if i >= self.dims[k] {
                    skip = true;
                    break;
                }
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                idx = idx * self.dims[k] + i;
            }
            if !skip && w != 0.0 {
                acc += w * self.samples[idx];
            }
        }
        acc
    }

    /// Flat binary snapshot: magic, `n`, dims, `h`, extent, center, then
    /// row-major little-endian `f64` samples.
    pub fn write_binary(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        for d in &self.dims {
            w.write_all(&(*d as u64).to_le_bytes())?;
        }
        w.write_all(&self.spec.h.to_le_bytes())?;
        for e in &self.spec.extent {
            w.write_all(&e.to_le_bytes())?;
        }
        for c in &self.spec.center {
            w.write_all(&c.to_le_bytes())?;
        }
        for v in &self.samples {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::Input(format!("grid snapshot: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::Input("not a grid snapshot".into()));
        }
        let mut b = [0u8; 8];
        let mut next_u64 = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut b).map_err(io)?;
            Ok(u64::from_le_bytes(b))
        };
        let n = next_u64(r)? as usize;
        if n == 0 || n > 8 {
            return Err(Error::Input(format!("unsupported dimension {n}")));
        }
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            dims.push(next_u64(r)? as usize);
        }
        let next_f64 = |r: &mut dyn Read| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(io)?;
            Ok(f64::from_le_bytes(b))
        };
        let h = next_f64(r)?;
        let extent = (0..n).map(|_| next_f64(r)).collect::<Result<Vec<_>>>()?;
        let center = (0..n).map(|_| next_f64(r)).collect::<Result<Vec<_>>>()?;
        let spec = GridSpec::new(center, extent, h)?;
        if spec.dims() != dims {
            return Err(Error::Input("header dims disagree with extent and spacing".into()));
        }
        let len: usize = dims.iter().product();
        let samples = (0..len).map(|_| next_f64(r)).collect::<Result<Vec<_>>>()?;
        GridFunction::from_samples(spec, samples)
    }
}

impl Field for GridFunction {
    fn dim(&self) -> usize {
        self.n()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.interpolate(x)
    }
}

/// `amplitude · exp(-|x - center|² / (2 width²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl Field for Gaussian {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.amplitude * (-0.5 * r2 / (self.width * self.width)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_multilinear_functions() {
        let spec = GridSpec::new(vec![0.5, -1.0, 0.0], vec![1.0, 2.0, 1.5], 0.25).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[2] + x[0] * x[1] * x[2];
        let g = GridFunction::from_fn(spec, f);
        for x in [[0.1, -0.3, 0.77], [1.5, 1.0, 1.5], [-0.5, -3.0, -1.5], [0.33, 0.91, -1.2]] {
            assert!((g.interpolate(&x) - f(&x)).abs() < 1e-12, "{x:?}");
        }
        assert_eq!(g.interpolate(&[1.6, 0.0, 0.0]), 0.0);
        assert_eq!(g.interpolate(&[0.0, 0.0, -1.51]), 0.0);
    }

    #[test]
    fn node_layout_is_row_major() {
        let spec = GridSpec::cube(2, 1.0, 0.5).unwrap();
        assert_eq!(spec.dims(), vec![5, 5]);
        let mut x = [0.0; 2];
        spec.node(7, &mut x);
        assert_eq!(x, [-0.5, 0.0]);
    }

    #[test]
    fn binary_round_trip() {
        let spec = GridSpec::new(vec![0.0, 1.0], vec![1.0, 0.5], 0.25).unwrap();
        let g = GridFunction::from_fn(spec, |x| x[0] * 3.0 - x[1]);
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 16 + 8 + 16 + 16 + 8 * g.samples.len());
        let back = GridFunction::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, g);
        assert!(GridFunction::read_binary(&mut &buf[..20]).is_err());
    }

    #[test]
    fn lp_norm_of_indicator() {
        let spec = GridSpec::cube(3, 1.0, 0.1).unwrap();
        let g = GridFunction::from_fn(spec, |x| if x.iter().all(|v| v.abs() < 0.5) { 2.0 } else { 0.0 });
        let count = g.samples.iter().filter(|&&v| v > 0.0).count() as f64;
        let vol = count * g.cell_volume();
        assert!((g.lp_norm(2.0) - 2.0 * vol.sqrt()).abs() < 1e-12);
    }
}
