//! Grid discretization of `𝒜[a,γ]`: partial Fourier transform in `x`, exact
//! quadrature sum in `t` on the input slices, inverse transform per output `s`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::field::{AxisLabel, Field, GridSpec, SpectralField, SpectralReal};
use crate::symbols::{Section, Symbol};

/// Input `t`-grid on `[-1, 1]` and output `s`-grid on `[-2, 2]` with the same spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FioGrid<T> {
    pub input: GridSpec<T>,
}

impl<T: SpectralReal> FioGrid<T> {
    pub fn new(input: GridSpec<T>) -> Result<Self> {
        input.validate()?;
        Ok(Self { input })
    }

    pub fn output(&self) -> GridSpec<T> {
        GridSpec {
            nt: 2 * self.input.nt,
            ..self.input
        }
    }

    pub fn step(&self) -> T {
        T::lit(2.0) / T::from_usize_lossy(self.input.nt)
    }

    pub fn t_coord(&self, k: usize) -> T {
        -T::one() + (T::from_usize_lossy(k) + T::lit(0.5)) * self.step()
    }

    pub fn s_coord(&self, j: usize) -> T {
        T::lit(-2.0) + (T::from_usize_lossy(j) + T::lit(0.5)) * self.step()
    }

    fn check_input(&self, f: &Field<T>, axis: AxisLabel, half: f64, nt: usize) -> Result<()> {
        let g = &f.grid;
        if g.d != self.input.d
            || g.nx != self.input.nx
            || g.nt != nt
            || g.x_half != self.input.x_half
        {
            return Err(Error::InvalidGrid(
                "field grid does not match the operator grid".into(),
            ));
        }
        if f.axis != axis || (f.axis_half - T::lit(half)).abs() > T::lit(1e-12) {
            return Err(Error::InvalidGrid(format!(
                "expected a {axis:?}-field on [-{half}, {half}]"
            )));
        }
        Ok(())
    }
}

/// Frequencies where the symbol does not vanish, with their sections.
struct Active<T: SpectralReal> {
    index: usize,
    xi: Vec<T>,
    section: Section<T>,
}

fn active_frequencies<T: SpectralReal>(a: &Symbol<T>, grid: &GridSpec<T>) -> Vec<Active<T>> {
    (0..grid.points_per_slice())
        .into_par_iter()
        .filter_map(|index| {
            let xi = grid.frequency(index);
            let section = a.section(&xi);
            (!section.is_empty()).then_some(Active { index, xi, section })
        })
        .collect()
}

fn in_window<T: SpectralReal>(sec: &Section<T>, s: T) -> bool {
    s >= sec.s_window.0 && s <= sec.s_window.1
}

/// `𝒜[a,γ] g_m` for each input, sampled on `[-X, X]^d × [-2, 2]`.
pub fn averaging_fio_batch<T: SpectralReal>(
    a: &Symbol<T>,
    curve: &Curve<T>,
    inputs: &[Field<T>],
) -> Result<Vec<Field<T>>> {
    let Some(first) = inputs.first() else {
        return Ok(Vec::new());
    };
    let fg = FioGrid::new(first.grid)?;
    if curve.dim() != fg.input.d || a.dim() != fg.input.d {
        return Err(Error::InvalidInput(format!(
            "grid dimension {} does not match curve dimension {}",
            fg.input.d,
            curve.dim()
        )));
    }
    for f in inputs {
        fg.check_input(f, AxisLabel::T, 1.0, fg.input.nt)?;
    }
    let spectra = inputs
        .iter()
        .map(Field::partial_ft_x)
        .collect::<Result<Vec<_>>>()?;
    let active = active_frequencies(a, &fg.input);
    let (per, nt, ns) = (fg.input.points_per_slice(), fg.input.nt, 2 * fg.input.nt);
    let dt = fg.step();
    let t0 = fg.t_coord(0);

    // separable symbols: a = m(ξ)·p(s)·q(t) from tables
    let tables = a.separable_parts().map(|parts| {
        let sv: Vec<T> = (0..ns).map(|j| (parts.s)(fg.s_coord(j))).collect();
        let tv: Vec<T> = (0..nt).map(|k| (parts.t)(fg.t_coord(k))).collect();
        let mv: Vec<T> = active.iter().map(|act| (parts.xi)(&act.xi)).collect();
        (sv, tv, mv)
    });
    let weight = |ai: usize, act: &Active<T>, j: usize, s: T, k: usize| match &tables {
        Some((sv, tv, mv)) => mv[ai] * sv[j] * tv[k],
        None => act.section.eval(s, fg.t_coord(k)),
    };

    let slices: Vec<Vec<Vec<Complex<T>>>> = (0..ns)
        .into_par_iter()
        .map(|j| {
            let s = fg.s_coord(j);
            let gamma = curve.eval(0, s);
            let mut out = vec![vec![Complex::new(T::zero(), T::zero()); per]; spectra.len()];
            for (ai, act) in active
                .iter()
                .enumerate()
                .filter(|(_, act)| in_window(&act.section, s))
            {
                let phi: T = gamma.iter().zip(&act.xi).map(|(&g, &x)| g * x).sum();
                let mut ph = Complex::from_polar(T::one(), -t0 * phi);
                let step = Complex::from_polar(T::one(), -dt * phi);
                let mut acc = vec![Complex::new(T::zero(), T::zero()); spectra.len()];
                for k in 0..nt {
                    let w = weight(ai, act, j, s, k);
                    if w != T::zero() {
                        let c = ph * (w * dt);
                        for (m, sp) in spectra.iter().enumerate() {
                            acc[m] = acc[m] + c * sp.coefficients[k * per + act.index];
                        }
                    }
                    ph = ph * step;
                }
                for (m, v) in acc.into_iter().enumerate() {
                    out[m][act.index] = v;
                }
            }
            out
        })
        .collect();

    let scale = (T::lit(2.0) * T::PI()).powi(fg.input.d as i32);
    (0..spectra.len())
        .map(|m| {
            let mut coefficients = Vec::with_capacity(ns * per);
            for slice in &slices {
                coefficients.extend_from_slice(&slice[m]);
            }
            let spec = SpectralField {
                grid: fg.output(),
                axis: AxisLabel::S,
                axis_half: T::lit(2.0),
                coefficients,
            };
            Ok(spec.inverse()?.scaled(scale))
        })
        .collect()
}

pub fn averaging_fio<T: SpectralReal>(
    a: &Symbol<T>,
    curve: &Curve<T>,
    g: &Field<T>,
) -> Result<Field<T>> {
    Ok(averaging_fio_batch(a, curve, std::slice::from_ref(g))?.remove(0))
}

/// Exact adjoint of [`averaging_fio`] for the grid inner products.
pub fn averaging_fio_adjoint<T: SpectralReal>(
    a: &Symbol<T>,
    curve: &Curve<T>,
    h: &Field<T>,
) -> Result<Field<T>> {
    let mut input = h.grid;
    if !input.nt.is_multiple_of(2) {
        return Err(Error::InvalidGrid(
            "s-grid must have an even number of points".into(),
        ));
    }
    input.nt /= 2;
    let fg = FioGrid::new(input)?;
    fg.check_input(h, AxisLabel::S, 2.0, 2 * fg.input.nt)?;
    let spec = h.partial_ft_x()?;
    let active = active_frequencies(a, &fg.input);
    let (per, nt, ns) = (fg.input.points_per_slice(), fg.input.nt, 2 * fg.input.nt);
    let ds = fg.step();
    let gammas: Vec<Vec<T>> = (0..ns).map(|j| curve.eval(0, fg.s_coord(j))).collect();

    let slices: Vec<Vec<Complex<T>>> = (0..nt)
        .into_par_iter()
        .map(|k| {
            let t = fg.t_coord(k);
            let mut out = vec![Complex::new(T::zero(), T::zero()); per];
            for act in &active {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (j, gamma) in gammas.iter().enumerate() {
                    let s = fg.s_coord(j);
                    if !in_window(&act.section, s) {
                        continue;
                    }
                    let w = act.section.eval(s, t);
                    if w != T::zero() {
                        let phi: T = gamma.iter().zip(&act.xi).map(|(&g, &x)| g * x).sum();
                        acc = acc
                            + Complex::from_polar(w * ds, t * phi)
                                * spec.coefficients[j * per + act.index];
                    }
                }
                out[act.index] = acc;
            }
            out
        })
        .collect();

    let coefficients = slices.concat();
    let spec = SpectralField {
        grid: fg.input,
        axis: AxisLabel::T,
        axis_half: T::one(),
        coefficients,
    };
    Ok(spec
        .inverse()?
        .scaled((T::lit(2.0) * T::PI()).powi(fg.input.d as i32)))
}

/// `𝔇_s^{1/2} 𝒜[a,γ] g` with the multiplier `(1 + |σ|)^{1/2}` in `s`.
pub fn fractional_fio<T: SpectralReal>(
    a: &Symbol<T>,
    curve: &Curve<T>,
    g: &Field<T>,
) -> Result<Field<T>> {
    averaging_fio(a, curve, g)?.fractional_s_derivative(T::lit(0.5))
}
