//! Gauss–Legendre rules and low-discrepancy point sets.

use std::num::NonZeroUsize;

use crate::scalar::Real;

/// Gauss–Legendre rule on `[-1, 1]`, converted to the working scalar.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("nonzero");
        let rule = gauss_quad::GaussLegendre::new(order);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (T::lit(x), T::lit(w)))
            .unzip();
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.mapped(a, b)
            .fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }

    /// Composite rule over `panels` equal subintervals.
    pub fn composite<F: FnMut(T) -> T>(&self, a: T, b: T, panels: usize, mut f: F) -> T {
        let panels = panels.max(1);
        let h = (b - a) / T::from_usize_lossy(panels);
        (0..panels)
            .map(|k| {
                let lo = a + h * T::from_usize_lossy(k);
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// All composite nodes and weights, in increasing order.
    pub fn composite_nodes(&self, a: T, b: T, panels: usize) -> Vec<(T, T)> {
        let panels = panels.max(1);
        let h = (b - a) / T::from_usize_lossy(panels);
        let mut out = Vec::with_capacity(panels * self.order());
        for k in 0..panels {
            let lo = a + h * T::from_usize_lossy(k);
            let mut panel: Vec<(T, T)> = self.mapped(lo, lo + h).collect();
            panel.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite nodes"));
            out.extend(panel);
        }
        out
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in the given base.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

/// Halton sequence in `[0,1)^dim`, skipping the first `skip` points.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize, skip: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension {dim} unsupported");
        Self {
            dim,
            next: skip + 1,
        }
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let i = self.next;
        self.next += 1;
        Some(
            PRIMES[..self.dim]
                .iter()
                .map(|&p| radical_inverse(i, p))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let gl = GaussLegendre::<f64>::new(6);
        // exact through degree 11
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(11) - 3.0 * x * x);
        let exact = (2f64.powi(12) - 1.0) / 12.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn composite_integrates_oscillation() {
        let gl = GaussLegendre::<f64>::new(8);
        let v = gl.composite(0.0, 1.0, 40, |x| (50.0 * x).cos());
        assert!((v - 50f64.sin() / 50.0).abs() < 1e-12);
        let nodes = gl.composite_nodes(0.0, 1.0, 3);
        assert_eq!(nodes.len(), 24);
        assert!(nodes.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn f32_rule() {
        let gl = GaussLegendre::<f32>::new(4);
        assert!((gl.integrate(0.0, 1.0, |x| x * x) - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn halton_first_points() {
        let pts: Vec<_> = Halton::new(2, 0).take(3).collect();
        assert_eq!(pts[0], vec![0.5, 1.0 / 3.0]);
        assert_eq!(pts[1], vec![0.25, 2.0 / 3.0]);
        assert!((pts[2][0] - 0.75).abs() < 1e-15 && (pts[2][1] - 1.0 / 9.0).abs() < 1e-15);
    }
}
