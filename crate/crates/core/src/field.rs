//! Sampled functions on `[-X, X]^d × [-S, S]`, their partial Fourier
//! transforms in `x`, multipliers, the fractional `s`-derivative and mixed norms.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex;
use num_traits::Float;
use rayon::prelude::*;
use rustfft::{FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalars usable in spectral computations.
pub trait SpectralReal: Real + FftNum {}
impl<T: Real + FftNum> SpectralReal for T {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub d: usize,
    /// Half-width `X` of the spatial box.
    pub x_half: T,
    pub nx: usize,
    pub nt: usize,
    pub periodic: bool,
}

impl<T: Real> GridSpec<T> {
    pub fn new(d: usize, x_half: T, nx: usize, nt: usize) -> Result<Self> {
        let grid = Self {
            d,
            x_half,
            nx,
            nt,
            periodic: true,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.nx.is_power_of_two() || !self.nt.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "nx={} and nt={} must be powers of two",
                self.nx, self.nt
            )));
        }
        if self.d == 0 || self.d > 4 {
            return Err(Error::InvalidGrid(format!(
                "full fields support 1 <= d <= 4, got {}",
                self.d
            )));
        }
        if !(self.x_half > T::zero()) {
            return Err(Error::InvalidGrid(
                "spatial half-width must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Spatial spacing `h = 2X / nx`.
    pub fn h(&self) -> T {
        T::lit(2.0) * self.x_half / T::from_usize_lossy(self.nx)
    }

    pub fn points_per_slice(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    /// `x_j = −X + j h`.
    pub fn x_coord(&self, j: usize) -> T {
        -self.x_half + self.h() * T::from_usize_lossy(j)
    }

    /// Frequency `(π/X)·m` for FFT-ordered index `k`.
    pub fn freq(&self, k: usize) -> T {
        T::PI() / self.x_half * T::lit(signed_index(k, self.nx) as f64)
    }

    /// Multi-index of a flat spatial index (axis 0 slowest).
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.d).rev() {
            out[a] = flat % self.nx;
            flat /= self.nx;
        }
    }

    pub fn point(&self, flat: usize) -> Vec<T> {
        let mut idx = vec![0; self.d];
        self.unflatten(flat, &mut idx);
        idx.iter().map(|&j| self.x_coord(j)).collect()
    }

    pub fn frequency(&self, flat: usize) -> Vec<T> {
        let mut idx = vec![0; self.d];
        self.unflatten(flat, &mut idx);
        idx.iter().map(|&k| self.freq(k)).collect()
    }
}

fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisLabel {
    T,
    S,
}

/// Values on the lattice, `t`-index outermost: `values[it * nx^d + flat_x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: GridSpec<T>,
    pub axis: AxisLabel,
    /// Half-length `S` of the last axis: 1 for `I`, 2 after padding to `[-2, 2]`.
    pub axis_half: T,
    pub values: Vec<Complex<T>>,
}

/// `ĝ(ξ, t)` on the frequency lattice `(π/X) Z^d`, same layout as [`Field`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    pub grid: GridSpec<T>,
    pub axis: AxisLabel,
    pub axis_half: T,
    pub coefficients: Vec<Complex<T>>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: GridSpec<T>, axis: AxisLabel, axis_half: T) -> Self {
        let n = grid.points_per_slice() * grid.nt;
        Self {
            grid,
            axis,
            axis_half,
            values: vec![Complex::new(T::zero(), T::zero()); n],
        }
    }

    /// Samples `f(x, t)` on the lattice (midpoint rule on the last axis).
    pub fn from_fn<F>(grid: GridSpec<T>, axis: AxisLabel, axis_half: T, f: F) -> Self
    where
        F: Fn(&[T], T) -> Complex<T> + Sync,
    {
        let per = grid.points_per_slice();
        let values = (0..per * grid.nt)
            .into_par_iter()
            .map(|i| {
                let x = grid.point(i % per);
                let t = axis_coord(axis_half, grid.nt, i / per);
                f(&x, t)
            })
            .collect();
        Self {
            grid,
            axis,
            axis_half,
            values,
        }
    }

    pub fn from_real_fn<F>(grid: GridSpec<T>, axis: AxisLabel, axis_half: T, f: F) -> Self
    where
        F: Fn(&[T], T) -> T + Sync,
    {
        Self::from_fn(grid, axis, axis_half, |x, t| {
            Complex::new(f(x, t), T::zero())
        })
    }

    pub fn axis_coord(&self, k: usize) -> T {
        axis_coord(self.axis_half, self.grid.nt, k)
    }

    /// Spacing on the last axis.
    pub fn axis_step(&self) -> T {
        T::lit(2.0) * self.axis_half / T::from_usize_lossy(self.grid.nt)
    }

    pub fn cell_weight(&self) -> T {
        self.grid.h().powi(self.grid.d as i32) * self.axis_step()
    }

    pub fn slice(&self, k: usize) -> &[Complex<T>] {
        let per = self.grid.points_per_slice();
        &self.values[k * per..(k + 1) * per]
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == T::zero())
    }

    pub fn scaled(&self, k: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = *v * k);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, &b)| *a = *a + b);
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    /// `L²` norm by the midpoint rule.
    pub fn l2_norm(&self) -> T {
        let s: T = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.cell_weight()).sqrt()
    }

    /// `‖ ‖g(x,·)‖_{L^q} ‖_{L^p_x}`; pass `f64::INFINITY` for a sup norm.
    /// Sup norms are grid maxima and hence lower bounds for the continuum sup.
    pub fn mixed_norm(&self, p_x: f64, q_s: f64) -> T {
        let per = self.grid.points_per_slice();
        let hs = self.axis_step().as_f64();
        let hx = self.grid.h().as_f64().powi(self.grid.d as i32);
        let inner: Vec<f64> = (0..per)
            .map(|i| {
                let col = (0..self.grid.nt).map(|k| self.values[k * per + i].norm().as_f64());
                if q_s.is_infinite() {
                    col.fold(0.0, f64::max)
                } else {
                    (col.map(|v| v.powf(q_s)).sum::<f64>() * hs).powf(1.0 / q_s)
                }
            })
            .collect();
        let outer = if p_x.is_infinite() {
            inner.into_iter().fold(0.0, f64::max)
        } else {
            (inner.into_iter().map(|v| v.powf(p_x)).sum::<f64>() * hx).powf(1.0 / p_x)
        };
        T::lit(outer)
    }
}

fn axis_coord<T: Real>(half: T, n: usize, k: usize) -> T {
    let step = T::lit(2.0) * half / T::from_usize_lossy(n);
    -half + step * (T::from_usize_lossy(k) + T::lit(0.5))
}

/// In-place `d`-dimensional FFT of one slice (axis 0 slowest).
fn fft_nd<T: SpectralReal>(data: &mut [Complex<T>], n: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = data.len();
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                for k in 0..n {
                    line[k] = data[base + off + k * stride];
                }
                fft.process(&mut line);
                for k in 0..n {
                    data[base + off + k * stride] = line[k];
                }
            }
        }
    }
}

fn parity_sign<T: Real>(grid: &GridSpec<T>, flat: usize) -> T {
    let mut idx = [0usize; 4];
    grid.unflatten(flat, &mut idx[..grid.d]);
    let m: i64 = idx[..grid.d]
        .iter()
        .map(|&k| signed_index(k, grid.nx))
        .sum();
    if m.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

impl<T: SpectralReal> Field<T> {
    /// `ĝ(ξ_m, t) = h^d (−1)^{|m|} DFT(g)`, the lattice analogue of `∫ e^{−i⟨x,ξ⟩} g(x,t) dx`.
    pub fn partial_ft_x(&self) -> Result<SpectralField<T>> {
        self.grid.validate()?;
        let per = self.grid.points_per_slice();
        let hd = self.grid.h().powi(self.grid.d as i32);
        let signs: Vec<T> = (0..per).map(|i| parity_sign(&self.grid, i)).collect();
        let mut coefficients = self.values.clone();
        coefficients.par_chunks_mut(per).for_each(|slice| {
            fft_nd(slice, self.grid.nx, self.grid.d, false);
            slice
                .iter_mut()
                .zip(&signs)
                .for_each(|(v, &s)| *v = *v * (s * hd));
        });
        Ok(SpectralField {
            grid: self.grid,
            axis: self.axis,
            axis_half: self.axis_half,
            coefficients,
        })
    }

    /// `F⁻¹(m · F g)` slice by slice.
    pub fn apply_multiplier<M>(&self, m: M) -> Result<Self>
    where
        M: Fn(&[T], T) -> T + Sync,
    {
        let mut spec = self.partial_ft_x()?;
        let per = self.grid.points_per_slice();
        let freqs: Vec<Vec<T>> = (0..per).map(|i| self.grid.frequency(i)).collect();
        spec.coefficients
            .par_chunks_mut(per)
            .enumerate()
            .for_each(|(k, slice)| {
                let t = axis_coord(self.axis_half, self.grid.nt, k);
                slice
                    .iter_mut()
                    .zip(&freqs)
                    .for_each(|(v, xi)| *v = *v * m(xi, t));
            });
        spec.inverse()
    }

    /// Zero-pads the last axis from `[-1, 1]` to `[-2, 2]` (no-op if already padded).
    pub fn padded(&self) -> Self {
        if self.axis_half > T::lit(1.5) {
            return self.clone();
        }
        let per = self.grid.points_per_slice();
        let nt = self.grid.nt;
        let mut grid = self.grid;
        grid.nt = 2 * nt;
        let mut out = Field::zeros(grid, self.axis, self.axis_half * T::lit(2.0));
        out.values[(nt / 2) * per..(nt / 2 + nt) * per].copy_from_slice(&self.values);
        out
    }

    /// Restriction of a padded field back to `I`.
    pub fn restricted(&self) -> Self {
        if self.axis_half < T::lit(1.5) {
            return self.clone();
        }
        let per = self.grid.points_per_slice();
        let nt = self.grid.nt / 2;
        let mut grid = self.grid;
        grid.nt = nt;
        let values = self.values[(nt / 2) * per..(nt / 2 + nt) * per].to_vec();
        Field {
            grid,
            axis: self.axis,
            axis_half: self.axis_half / T::lit(2.0),
            values,
        }
    }

    /// Applies the `s`-multiplier `(1+|σ|)^{order}` after zero-padding to `[-2, 2]`;
    /// the result lives on `[-2, 2]`. Order `1/2` is the operator `(1 + √(−∂_s²))^{1/2}`.
    pub fn fractional_s_derivative(&self, order: T) -> Result<Self> {
        if self.axis != AxisLabel::S {
            return Err(Error::InvalidInput(
                "fractional derivative acts on s-fields".into(),
            ));
        }
        let mut out = self.padded();
        out.grid.validate()?;
        let per = out.grid.points_per_slice();
        let nt = out.grid.nt;
        // σ = (2π / period) m with period 2·axis_half
        let dsigma = T::PI() / out.axis_half;
        let mult: Vec<T> = (0..nt)
            .map(|k| {
                (T::one() + dsigma * T::lit(signed_index(k, nt).unsigned_abs() as f64)).powf(order)
            })
            .collect();
        let mut planner = FftPlanner::<T>::new();
        let fwd = planner.plan_fft_forward(nt);
        let inv = planner.plan_fft_inverse(nt);
        let scale = T::one() / T::from_usize_lossy(nt);
        let columns: Vec<Vec<Complex<T>>> = (0..per)
            .into_par_iter()
            .map(|i| {
                let mut col: Vec<Complex<T>> = (0..nt).map(|k| out.values[k * per + i]).collect();
                fwd.process(&mut col);
                col.iter_mut()
                    .zip(&mult)
                    .for_each(|(v, &m)| *v = *v * (m * scale));
                inv.process(&mut col);
                col
            })
            .collect();
        for (i, col) in columns.into_iter().enumerate() {
            for (k, v) in col.into_iter().enumerate() {
                out.values[k * per + i] = v;
            }
        }
        Ok(out)
    }
}

impl<T: SpectralReal> SpectralField<T> {
    /// Exact inverse of [`Field::partial_ft_x`]: `g = (2π)^{-d} Σ_ξ ĝ e^{i⟨x,ξ⟩} (π/X)^d`.
    pub fn inverse(&self) -> Result<Field<T>> {
        self.grid.validate()?;
        let per = self.grid.points_per_slice();
        let norm =
            T::one() / (self.grid.h() * T::from_usize_lossy(self.grid.nx)).powi(self.grid.d as i32);
        let signs: Vec<T> = (0..per).map(|i| parity_sign(&self.grid, i)).collect();
        let mut values = self.coefficients.clone();
        values.par_chunks_mut(per).for_each(|slice| {
            slice.iter_mut().zip(&signs).for_each(|(v, &s)| *v = *v * s);
            fft_nd(slice, self.grid.nx, self.grid.d, true);
            slice.iter_mut().for_each(|v| *v = *v * norm);
        });
        Ok(Field {
            grid: self.grid,
            axis: self.axis,
            axis_half: self.axis_half,
            values,
        })
    }

    /// `((2π)^{-d} Σ |ĝ|² (π/X)^d Δt)^{1/2}`, equal to the `L²` norm of the field.
    pub fn l2_norm(&self) -> T {
        let d = self.grid.d as i32;
        let dxi = T::PI() / self.grid.x_half;
        let step = T::lit(2.0) * self.axis_half / T::from_usize_lossy(self.grid.nt);
        let s: T = self.coefficients.iter().map(|v| v.norm_sqr()).sum();
        (s * (dxi / (T::lit(2.0) * T::PI())).powi(d) * step).sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    schema: u32,
    d: usize,
    x_half: f64,
    nx: usize,
    nt: usize,
    dtype: String,
    axis: AxisLabel,
    axis_half: f64,
    periodic: bool,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

impl<T: Real> Field<T> {
    /// Flat little-endian layout: `u32 d, f64 X, u32 nx, u32 nt, u8 dtype` then the
    /// values (dtype 0: one `f64` each, dtype 1: `re, im`), plus `<path>.json`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let complex = !self.is_real();
        let mut w = BufWriter::new(File::create(path)?);
        w.write_u32::<LittleEndian>(self.grid.d as u32)?;
        w.write_f64::<LittleEndian>(self.grid.x_half.as_f64())?;
        w.write_u32::<LittleEndian>(self.grid.nx as u32)?;
        w.write_u32::<LittleEndian>(self.grid.nt as u32)?;
        w.write_u8(complex as u8)?;
        for v in &self.values {
            w.write_f64::<LittleEndian>(v.re.as_f64())?;
            if complex {
                w.write_f64::<LittleEndian>(v.im.as_f64())?;
            }
        }
        w.flush()?;
        let sidecar = Sidecar {
            schema: 1,
            d: self.grid.d,
            x_half: self.grid.x_half.as_f64(),
            nx: self.grid.nx,
            nt: self.grid.nt,
            dtype: if complex {
                "complex64x2".into()
            } else {
                "real64".into()
            },
            axis: self.axis,
            axis_half: self.axis_half.as_f64(),
            periodic: self.grid.periodic,
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let mut r = BufReader::new(File::open(path)?);
        let d = r.read_u32::<LittleEndian>()? as usize;
        let x_half = r.read_f64::<LittleEndian>()?;
        let nx = r.read_u32::<LittleEndian>()? as usize;
        let nt = r.read_u32::<LittleEndian>()? as usize;
        let complex = r.read_u8()? == 1;
        if d != sidecar.d || nx != sidecar.nx || nt != sidecar.nt {
            return Err(Error::InvalidGrid(
                "binary header disagrees with sidecar".into(),
            ));
        }
        let grid = GridSpec {
            d,
            x_half: T::lit(x_half),
            nx,
            nt,
            periodic: sidecar.periodic,
        };
        grid.validate()?;
        let n = grid.points_per_slice() * nt;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let re = r.read_f64::<LittleEndian>()?;
            let im = if complex {
                r.read_f64::<LittleEndian>()?
            } else {
                0.0
            };
            values.push(Complex::new(T::lit(re), T::lit(im)));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::InvalidGrid(format!("{} trailing bytes", rest.len())));
        }
        Ok(Field {
            grid,
            axis: sidecar.axis,
            axis_half: T::lit(sidecar.axis_half),
            values,
        })
    }
}

/// `max_x |v|` of the imaginary parts, used to check that real inputs stay real.
pub fn max_imag<T: Real>(field: &Field<T>) -> T {
    field
        .values
        .iter()
        .fold(T::zero(), |m, v| m.max(Float::abs(v.im)))
}
