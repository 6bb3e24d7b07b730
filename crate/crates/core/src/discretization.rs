//! Uniform grids, composite trapezoid quadrature and sampled functions.

use alloc::{format, vec::Vec};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Result};
use crate::linalg::{real, CVector, C64};

/// Default half-width of the truncated real line.
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;

/// Uniform sampling of `[a, b]`.
///
/// Periodic grids omit the right endpoint, which is identified with `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
    periodic: bool,
    points: Vec<f64>,
}

impl Grid {
    pub fn uniform(a: f64, b: f64, n: usize, periodic: bool) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(domain(format!("grid interval [{a}, {b}] is empty or not finite")));
        }
        if n < 2 {
            return Err(domain(format!("grid needs at least 2 nodes, got {n}")));
        }
        let h = spacing(a, b, n, periodic);
        let mut points: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
        if !periodic {
            points[n - 1] = b;
        }
        Ok(Self { a, b, n, periodic, points })
    }

    /// Symmetric grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize, periodic: bool) -> Result<Self> {
        Self::uniform(-half_width, half_width, n, periodic)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        spacing(self.a, self.b, self.n, self.periodic)
    }

    pub fn period(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// Index of the node nearest to `x`; ties go to the lower index. On a
    /// periodic grid `b` wraps onto node 0.
    pub fn nearest_node(&self, x: f64) -> Result<usize> {
        if !self.contains(x) {
            return Err(domain(format!("{x} lies outside [{}, {}]", self.a, self.b)));
        }
        let t = (x - self.a) / self.spacing();
        let j = (t - 0.5).ceil().max(0.0) as usize;
        Ok(if self.periodic { j % self.n } else { j.min(self.n - 1) })
    }
}

fn spacing(a: f64, b: f64, n: usize, periodic: bool) -> f64 {
    if periodic {
        (b - a) / n as f64
    } else {
        (b - a) / (n - 1) as f64
    }
}

pub fn make_uniform_grid(a: f64, b: f64, n: usize, periodic: bool) -> Result<Grid> {
    Grid::uniform(a, b, n, periodic)
}

/// Positive quadrature weights on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    grid: Grid,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Composite trapezoid rule (non-periodic) or uniform rule (periodic).
    pub fn trapezoid(grid: &Grid) -> Self {
        let h = grid.spacing();
        let mut weights = alloc::vec![h; grid.len()];
        if !grid.is_periodic() {
            weights[0] = 0.5 * h;
            weights[grid.len() - 1] = 0.5 * h;
        }
        Self {
            grid: grid.clone(),
            weights,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: &SampledFunction) -> Result<C64> {
        if f.grid != self.grid {
            return Err(domain("sampled function and quadrature rule live on different grids"));
        }
        Ok(self.weights.iter().zip(f.values.iter()).map(|(&w, &v)| v * w).sum())
    }

    pub fn integrate_fn<F: Fn(f64) -> C64>(&self, f: F) -> C64 {
        self.weights
            .iter()
            .zip(self.grid.points())
            .map(|(&w, &x)| f(x) * w)
            .sum()
    }

    /// Discrete delta: `1/w_j` at the node nearest `x0`, zero elsewhere.
    pub fn delta(&self, x0: f64) -> Result<SampledFunction> {
        let j = self.grid.nearest_node(x0)?;
        let mut values = CVector::zeros(self.grid.len());
        values[j] = real(1.0 / self.weights[j]);
        Ok(SampledFunction {
            grid: self.grid.clone(),
            values,
        })
    }
}

pub fn quadrature_weights(grid: &Grid) -> QuadratureRule {
    QuadratureRule::trapezoid(grid)
}

pub fn quad_integral(rule: &QuadratureRule, f: &SampledFunction) -> Result<C64> {
    rule.integrate(f)
}

pub fn delta_vector(rule: &QuadratureRule, x0: f64) -> Result<SampledFunction> {
    rule.delta(x0)
}

/// Function samples on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: CVector,
}

impl SampledFunction {
    pub fn new(grid: &Grid, values: CVector) -> Result<Self> {
        crate::error::ensure_len(grid.len(), values.len())?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn sample<F: Fn(f64) -> C64>(grid: &Grid, f: F) -> Self {
        let values = CVector::from_iterator(grid.len(), grid.points().iter().map(|&x| f(x)));
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn sample_real<F: Fn(f64) -> f64>(grid: &Grid, f: F) -> Self {
        Self::sample(grid, |x| real(f(x)))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &CVector {
        &self.values
    }

    pub fn into_values(self) -> CVector {
        self.values
    }

    /// Pointwise product on a shared grid.
    pub fn product(&self, other: &SampledFunction) -> Result<SampledFunction> {
        if self.grid != other.grid {
            return Err(domain("pointwise product of functions on different grids"));
        }
        Ok(SampledFunction {
            grid: self.grid.clone(),
            values: self.values.component_mul(&other.values),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn grid_examples() {
        let g = make_uniform_grid(0.0, 1.0, 2, false).unwrap();
        assert_eq!(g.points(), &[0.0, 1.0]);
        assert_eq!(g.spacing(), 1.0);

        let g = make_uniform_grid(-6.0, 6.0, 5, false).unwrap();
        assert_eq!(g.points(), &[-6.0, -3.0, 0.0, 3.0, 6.0]);

        let g = make_uniform_grid(0.0, 2.0 * PI, 4, true).unwrap();
        let expected = [0.0, PI / 2.0, PI, 1.5 * PI];
        for (p, e) in g.points().iter().zip(expected) {
            assert!(close(*p, e, 1e-15));
        }
        assert!(close(g.spacing(), PI / 2.0, 1e-15));
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_uniform_grid(1.0, 1.0, 4, false).is_err());
        assert!(make_uniform_grid(2.0, 1.0, 4, false).is_err());
        assert!(make_uniform_grid(0.0, 1.0, 1, false).is_err());
        assert!(make_uniform_grid(0.0, f64::NAN, 4, false).is_err());
    }

    #[test]
    fn grid_spacing_invariant() {
        for &(a, b, n, p) in &[(-8.0, 8.0, 2001, false), (-3.0, 5.0, 128, true), (0.0, 1e-3, 17, false)] {
            let g = make_uniform_grid(a, b, n, p).unwrap();
            let h = g.spacing();
            assert_eq!(g.points()[0], a);
            let last = if p { b - (b - a) / n as f64 } else { b };
            assert!(close(g.points()[n - 1], last, 1e-12 * (b - a)));
            for w in g.points().windows(2) {
                assert!(w[1] > w[0]);
                assert!(close(w[1] - w[0], h, 1e-12 * (b - a)));
            }
        }
    }

    #[test]
    fn weight_examples() {
        let r = quadrature_weights(&make_uniform_grid(0.0, 1.0, 3, false).unwrap());
        assert_eq!(r.weights(), &[0.25, 0.5, 0.25]);
        let r = quadrature_weights(&make_uniform_grid(0.0, 2.0 * PI, 4, true).unwrap());
        for w in r.weights() {
            assert!(close(*w, PI / 2.0, 1e-15));
        }
        let r = quadrature_weights(&make_uniform_grid(0.0, 1.0, 2, false).unwrap());
        assert_eq!(r.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn weights_sum_to_length() {
        for &(n, p) in &[(2, false), (3, false), (1000, false), (7, true), (1024, true)] {
            let g = make_uniform_grid(-2.5, 4.0, n, p).unwrap();
            let r = quadrature_weights(&g);
            assert!(r.weights().iter().all(|&w| w > 0.0));
            let s: f64 = r.weights().iter().sum();
            assert!(close(s, 6.5, 1e-12 * 6.5));
        }
    }

    #[test]
    fn integral_of_constants() {
        for n in [2, 3, 10, 101] {
            let g = make_uniform_grid(0.0, 1.0, n, false).unwrap();
            let r = quadrature_weights(&g);
            let one = SampledFunction::sample_real(&g, |_| 1.0);
            assert!(close(quad_integral(&r, &one).unwrap().re, 1.0, 1e-14));
            let zero = SampledFunction::sample_real(&g, |_| 0.0);
            assert_eq!(quad_integral(&r, &zero).unwrap(), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn integral_grid_mismatch() {
        let r = quadrature_weights(&make_uniform_grid(0.0, 1.0, 5, false).unwrap());
        let f = SampledFunction::sample_real(&make_uniform_grid(0.0, 1.0, 6, false).unwrap(), |x| x);
        assert!(quad_integral(&r, &f).is_err());
    }

    #[test]
    fn delta_examples() {
        let g = make_uniform_grid(0.0, 1.0, 11, false).unwrap();
        let r = quadrature_weights(&g);
        let d = delta_vector(&r, 0.5).unwrap();
        let one = SampledFunction::sample_real(&g, |_| 1.0);
        assert_eq!(quad_integral(&r, &d.product(&one).unwrap()).unwrap().re, 1.0);
        let x = SampledFunction::sample_real(&g, |x| x);
        assert!(close(quad_integral(&r, &d.product(&x).unwrap()).unwrap().re, 0.5, 1e-15));
        assert!(delta_vector(&r, 1.5).is_err());
        assert!(delta_vector(&r, -0.1).is_err());
    }

    #[test]
    fn delta_norm_grows_with_refinement() {
        let norm_sq = |n: usize| {
            let g = make_uniform_grid(-1.0, 1.0, n, false).unwrap();
            let r = quadrature_weights(&g);
            let d = delta_vector(&r, 0.0).unwrap();
            quad_integral(&r, &d.product(&d).unwrap()).unwrap().re
        };
        let (a, b) = (norm_sq(101), norm_sq(201));
        assert!(close(a, 50.0, 1e-9));
        assert!(close(b / a, 2.0, 1e-9));
    }

    #[test]
    fn nearest_node_ties_go_low() {
        let g = make_uniform_grid(0.0, 4.0, 5, false).unwrap();
        assert_eq!(g.nearest_node(1.5).unwrap(), 1);
        assert_eq!(g.nearest_node(1.5000001).unwrap(), 2);
        assert_eq!(g.nearest_node(4.0).unwrap(), 4);
        let p = make_uniform_grid(0.0, 4.0, 4, true).unwrap();
        assert_eq!(p.nearest_node(4.0).unwrap(), 0);
        assert_eq!(p.nearest_node(3.4).unwrap(), 3);
    }

    #[test]
    fn delta_reproduces_smooth_values_off_node() {
        // Error is O(h) when x0 is not a node.
        let err = |n: usize| {
            let g = make_uniform_grid(0.0, 1.0, n, false).unwrap();
            let r = quadrature_weights(&g);
            let d = delta_vector(&r, 0.3).unwrap();
            let f = SampledFunction::sample_real(&g, |x| (3.0 * x).sin());
            (quad_integral(&r, &d.product(&f).unwrap()).unwrap().re - (0.9f64).sin()).abs()
        };
        for n in [8, 32, 128] {
            let h = 1.0 / (n - 1) as f64;
            assert!(err(n) <= 3.0 * h, "n={n} err={}", err(n));
        }
    }
}
