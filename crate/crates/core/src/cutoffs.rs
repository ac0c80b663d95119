//! Smooth cutoffs: the bump `ψ` with non-negative inverse transform, the
//! Littlewood–Paley pairs `(η, β)` and `(η₁, β₁)`, the partitions `ζ`, `ζ̃`
//! and the interval cutoff `χ̃_I`.

use serde::Serialize;

use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

/// `e^{-1/x}` for `x > 0`, else 0.
fn flat(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, and `S(x) + S(1 − x) = 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = flat(x);
    a / (a + flat(1.0 - x))
}

/// The bump `φ₀(x) = exp(−1/(1 − 4x²))` on `|x| < 1/2` and its first two derivatives.
fn bump(x: f64) -> [f64; 3] {
    let q = 1.0 - 4.0 * x * x;
    if q <= 0.0 {
        return [0.0; 3];
    }
    let v = (-1.0 / q).exp();
    let g1 = -8.0 * x / (q * q);
    let g2 = -8.0 / (q * q) - 128.0 * x * x / (q * q * q);
    [v, v * g1, v * (g1 * g1 + g2)]
}

const PSI_CELLS: usize = 2048;

/// The cutoff library. `ψ = (φ₀ ∗ φ₀)/‖φ₀‖²` is tabulated together with its
/// first two derivatives and evaluated by quintic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct CutoffLibrary {
    psi_table: Vec<[f64; 3]>,
    bump_norm_sq: f64,
    gl: GaussLegendre<f64>,
}

impl CutoffLibrary {
    pub fn new() -> Self {
        let gl = GaussLegendre::<f64>::new(24);
        let bump_norm_sq = gl.composite(-0.5, 0.5, 16, |y| bump(y)[0].powi(2));
        let psi_table = (0..=PSI_CELLS)
            .map(|k| {
                let x = k as f64 / PSI_CELLS as f64;
                let (lo, hi) = ((x - 0.5).max(-0.5), (x + 0.5).min(0.5));
                let mut acc = [0.0; 3];
                if hi > lo {
                    for (y, w) in gl.composite_nodes(lo, hi, 12) {
                        let b = bump(y)[0];
                        let c = bump(x - y);
                        for m in 0..3 {
                            acc[m] += w * b * c[m];
                        }
                    }
                }
                acc.map(|v| v / bump_norm_sq)
            })
            .collect();
        Self {
            psi_table,
            bump_norm_sq,
            gl,
        }
    }

    fn psi_f64(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= 1.0 {
            return 0.0;
        }
        let pos = x * PSI_CELLS as f64;
        let k = (pos.floor() as usize).min(PSI_CELLS - 1);
        let h = 1.0 / PSI_CELLS as f64;
        let u = pos - k as f64;
        let [p0, d0, s0] = self.psi_table[k];
        let [p1, d1, s1] = self.psi_table[k + 1];
        // quintic Hermite basis on [0,1]
        let (u2, u3) = (u * u, u * u * u);
        let (u4, u5) = (u3 * u, u3 * u2);
        let h00 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        let h10 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        let h20 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
        let h01 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        let h11 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        let h21 = 0.5 * (u3 - 2.0 * u4 + u5);
        h00 * p0 + h10 * h * d0 + h20 * h * h * s0 + h01 * p1 + h11 * h * d1 + h21 * h * h * s1
    }

    /// `ψ`, supported in `[-1, 1]` with `ψ(0) = 1`.
    pub fn psi<T: Real>(&self, x: T) -> T {
        T::lit(self.psi_f64(x.as_f64()))
    }

    /// `ψ̌(y) = ∫ e^{iyx} ψ(x) dx = φ̌₀(y)² / ‖φ₀‖²`.
    pub fn psi_check(&self, y: f64) -> f64 {
        let ft = self
            .gl
            .composite(-0.5, 0.5, 16, |x| (y * x).cos() * bump(x)[0]);
        ft * ft / self.bump_norm_sq
    }

    pub fn eta<T: Real>(&self, r: T) -> T {
        T::lit(1.0 - smooth_step(r.as_f64().abs() - 1.0))
    }

    pub fn beta<T: Real>(&self, r: T) -> T {
        self.eta(r) - self.eta(r + r)
    }

    pub fn eta1<T: Real>(&self, r: T) -> T {
        self.eta(r / T::lit(2.0))
    }

    pub fn beta1<T: Real>(&self, r: T) -> T {
        self.eta1(r) - self.eta1(r * T::lit(4.0))
    }

    pub fn zeta<T: Real>(&self, x: T) -> T {
        T::lit(smooth_step(1.0 - x.as_f64().abs()))
    }

    pub fn zeta_tilde<T: Real>(&self, x: T) -> T {
        T::lit(1.0 - smooth_step(x.as_f64().abs() - 3.0))
    }

    pub fn chi_tilde_i<T: Real>(&self, x: T) -> T {
        self.eta(x)
    }

    /// Numerical verification of the library invariants on dense grids.
    pub fn verify(&self, points: usize) -> CutoffReport {
        let points = points.max(2);
        let grid = |lo: f64, hi: f64| {
            (0..points).map(move |k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        };

        let lp_residual = grid(-512.0, 512.0)
            .map(|r| {
                let sum: f64 = (1..=10).map(|k| self.beta(r / f64::powi(2.0, k))).sum();
                (self.eta(r) + sum - 1.0).abs()
            })
            .fold(0.0, f64::max);
        let lp1_residual = grid(-4096.0, 4096.0)
            .map(|r| {
                let sum: f64 = (1..=8)
                    .map(|n| self.beta1(r * f64::powi(2.0, -2 * n)))
                    .sum();
                (self.eta1(r) + sum - 1.0).abs()
            })
            .fold(0.0, f64::max);
        let zeta_residual = grid(-5.0, 5.0)
            .map(|x| ((-7..=7).map(|nu| self.zeta(x - nu as f64)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let support_violation = grid(-6.0, 6.0)
            .map(|x| {
                let mut v = 0.0f64;
                if x.abs() > 1.0 {
                    v = v.max(self.psi(x).abs()).max(self.zeta(x).abs());
                }
                if x.abs() > 2.0 || x.abs() < 0.5 {
                    v = v.max(self.beta(x).abs());
                }
                if x.abs() > 4.0 || x.abs() < 0.25 {
                    v = v.max(self.beta1(x).abs());
                }
                if x.abs() > 4.0 {
                    v = v.max(self.zeta_tilde(x).abs());
                }
                if x.abs() <= 3.0 {
                    v = v.max((self.zeta_tilde(x) - 1.0).abs());
                }
                if x.abs() > 2.0 {
                    v = v.max(self.chi_tilde_i(x).abs());
                }
                v
            })
            .fold(0.0, f64::max);
        let psi_check_min = grid(-200.0, 200.0)
            .map(|y| self.psi_check(y))
            .fold(f64::INFINITY, f64::min);
        let c0 = grid(-1.0, 1.0)
            .map(|y| self.psi_check(y))
            .fold(f64::INFINITY, f64::min);
        let tol = 1e-8;
        CutoffReport {
            points,
            lp_residual,
            lp1_residual,
            zeta_residual,
            support_violation,
            psi_check_min,
            c0,
            passes: lp_residual <= tol
                && lp1_residual <= tol
                && zeta_residual <= tol
                && support_violation == 0.0
                && psi_check_min >= 0.0
                && c0 > 0.0,
        }
    }
}

impl Default for CutoffLibrary {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffReport {
    pub points: usize,
    pub lp_residual: f64,
    pub lp1_residual: f64,
    pub zeta_residual: f64,
    pub support_violation: f64,
    pub psi_check_min: f64,
    /// `min_{|y| ≤ 1} ψ̌(y)`.
    pub c0: f64,
    pub passes: bool,
}
