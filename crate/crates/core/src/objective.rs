//! Objectives as gradient oracles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A first-order oracle over `R^dim`.
///
/// Implementations must be deterministic: the same point yields bitwise the
/// same gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Gradient, or for non-smooth objectives a deterministically selected
    /// subgradient.
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `gradient(u) - gradient(v)`. Objectives with structure may compute
    /// this without the cancellation of two large gradients.
    fn gradient_difference(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let gu = self.gradient(u);
        let gv = self.gradient(v);
        gu.iter().zip(&gv).map(|(a, b)| a - b).collect()
    }

    /// Declared smoothness constant, if the objective is smooth.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String {
        "objective".to_string()
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn gradient_difference(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        (**self).gradient_difference(u, v)
    }
    fn smoothness(&self) -> Option<f64> {
        (**self).smoothness()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// `f = 0`.
#[derive(Debug, Clone, Copy)]
pub struct Zero {
    pub dim: usize,
}

impl Zero {
    pub fn new(dim: usize) -> Self {
        Zero { dim }
    }
}

impl Objective for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim]
    }
    fn smoothness(&self) -> Option<f64> {
        Some(0.0)
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

/// `f(x) = <slope, x>`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub slope: Vec<f64>,
}

impl Linear {
    pub fn new(slope: Vec<f64>) -> Self {
        Linear { slope }
    }

    /// One-dimensional `f(x) = s * x`.
    pub fn scalar(s: f64) -> Self {
        Linear { slope: vec![s] }
    }
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.slope.len()
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.slope.clone()
    }
    fn gradient_difference(&self, _u: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![0.0; self.slope.len()]
    }
    fn smoothness(&self) -> Option<f64> {
        Some(0.0)
    }
    fn name(&self) -> String {
        "linear".into()
    }
}

/// `f(x) = 1/2 x'Hx + b'x` with symmetric `H`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    beta: f64,
}

impl Quadratic {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        let d = hessian.nrows();
        if hessian.ncols() != d || linear.len() != d || d == 0 {
            return Err(Error::domain(format!(
                "quadratic: Hessian {}x{} and linear term of length {} are inconsistent",
                hessian.nrows(),
                hessian.ncols(),
                linear.len()
            )));
        }
        let asym = (&hessian - hessian.transpose()).amax();
        if asym > 1e-12 * hessian.amax().max(1.0) {
            return Err(Error::domain(format!("quadratic: Hessian is not symmetric (|H - H'| = {asym:e})")));
        }
        let beta = hessian
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0_f64, |m, l| m.max(l.abs()));
        Ok(Quadratic {
            hessian,
            linear,
            beta,
        })
    }

    /// `f(x) = h x^2 / 2`.
    pub fn scalar(h: f64) -> Self {
        Quadratic {
            hessian: DMatrix::from_element(1, 1, h),
            linear: DVector::zeros(1),
            beta: h.abs(),
        }
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.hessian.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.hessian * &x)) + self.linear.dot(&x)
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        (&self.hessian * x + &self.linear).as_slice().to_vec()
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.beta)
    }
    fn name(&self) -> String {
        format!("quadratic(d={})", self.dim())
    }
}

/// `f(x) = G * max{0, x_1 - c, ..., x_d - c}`, convex and `G`-Lipschitz but
/// not smooth.
///
/// Subgradient rule: among the coordinate terms attaining the maximum, the
/// smallest index wins and contributes `G e_i`; the zero branch is selected
/// only when it is the unique maximizer.
#[derive(Debug, Clone)]
pub struct MaxKink {
    pub g: f64,
    pub c: f64,
    pub dim: usize,
}

impl MaxKink {
    pub fn new(g: f64, c: f64, dim: usize) -> Self {
        MaxKink { g, c, dim }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.g * x.iter().fold(0.0_f64, |m, xi| m.max(xi - self.c))
    }

    /// Index of the selected coordinate term, `None` for the zero branch.
    pub fn active_coordinate(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, xi) in x.iter().enumerate() {
            let v = xi - self.c;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, v)) if v >= 0.0 => Some(i),
            _ => None,
        }
    }
}

impl Objective for MaxKink {
    fn dim(&self) -> usize {
        self.dim
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        if let Some(i) = self.active_coordinate(x) {
            g[i] = self.g;
        }
        g
    }
    fn name(&self) -> String {
        format!("max-kink(d={})", self.dim)
    }
}

/// Closure-backed objective, mostly for tests and ad-hoc experiments.
pub struct FnObjective<F> {
    dim: usize,
    grad: F,
    beta: Option<f64>,
}

impl<F: Fn(&[f64]) -> Vec<f64>> FnObjective<F> {
    pub fn new(dim: usize, grad: F) -> Self {
        FnObjective { dim, grad, beta: None }
    }

    pub fn with_smoothness(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
    fn smoothness(&self) -> Option<f64> {
        self.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_kink_tie_breaking() {
        let f = MaxKink::new(1.0, 0.1, 3);
        // all tied above the kink: first coordinate
        assert_eq!(f.gradient(&[0.5, 0.5, 0.5]), vec![1.0, 0.0, 0.0]);
        assert_eq!(f.gradient(&[0.2, 0.5, 0.5]), vec![0.0, 1.0, 0.0]);
        // coordinate ties with the zero branch: coordinate wins
        assert_eq!(f.gradient(&[0.1, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        // zero branch unique maximizer
        assert_eq!(f.gradient(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn quadratic_rejects_asymmetric() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Quadratic::new(h, DVector::zeros(2)).is_err());
    }

    #[test]
    fn quadratic_gradient_and_smoothness() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let q = Quadratic::new(h, DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert_eq!(q.gradient(&[1.0, 2.0]), vec![3.0, 0.0]);
        assert_eq!(q.smoothness(), Some(2.0));
        assert_eq!(q.value(&[1.0, 0.0]), 2.0);
    }
}
