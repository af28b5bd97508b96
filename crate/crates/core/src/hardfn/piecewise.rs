use crate::error::{Error, Result};
use crate::objective::Objective;

/// Closed interval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        Interval { a, b }
    }

    /// The sorted pair `[min(u, v), max(u, v)]`.
    pub fn spanning(u: f64, v: f64) -> Self {
        Interval {
            a: u.min(v),
            b: u.max(v),
        }
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }
}

/// Quadratic continuation right of `p`, flattening out at `p - g_p / beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub p: f64,
    pub g_p: f64,
}

/// `f(x) = -G x + beta * int int 1[z in union of intervals]`, optionally
/// continued quadratically to a flat minimum right of a plateau point.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadratic {
    g: f64,
    beta: f64,
    intervals: Vec<Interval>,
    /// `prefix[j]` is the covered length of intervals `0..j`.
    prefix: Vec<f64>,
    /// Antiderivative of the covered length, at each `a_j` and `b_j`.
    phi_a: Vec<f64>,
    phi_b: Vec<f64>,
    plateau: Option<Plateau>,
}

impl PiecewiseQuadratic {
    pub fn new(g: f64, beta: f64, intervals: Vec<Interval>) -> Result<Self> {
        if !(g > 0.0 && g.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("need G > 0 and beta > 0, got G = {g}, beta = {beta}")));
        }
        for (j, iv) in intervals.iter().enumerate() {
            if !(iv.a.is_finite() && iv.b.is_finite() && iv.a <= iv.b) {
                return Err(Error::domain(format!("interval {j} = [{}, {}] is malformed", iv.a, iv.b)));
            }
            if j > 0 && !(intervals[j - 1].b < iv.a) {
                return Err(Error::domain(format!(
                    "intervals {} and {j} are not strictly ordered: [{}, {}] then [{}, {}]",
                    j - 1,
                    intervals[j - 1].a,
                    intervals[j - 1].b,
                    iv.a,
                    iv.b
                )));
            }
        }
        let k = intervals.len();
        let mut prefix = Vec::with_capacity(k + 1);
        let mut phi_a = Vec::with_capacity(k);
        let mut phi_b = Vec::with_capacity(k);
        prefix.push(0.0);
        for (j, iv) in intervals.iter().enumerate() {
            let w = iv.width();
            let pa = if j == 0 {
                0.0
            } else {
                phi_b[j - 1] + prefix[j] * (iv.a - intervals[j - 1].b)
            };
            phi_a.push(pa);
            phi_b.push(pa + prefix[j] * w + 0.5 * w * w);
            prefix.push(prefix[j] + w);
        }
        Ok(PiecewiseQuadratic {
            g,
            beta,
            intervals,
            prefix,
            phi_a,
            phi_b,
            plateau: None,
        })
    }

    /// The same function continued right of `p` with the derivative
    /// `g_p + beta (x - p)`, clamped at zero.
    pub fn with_plateau(&self, p: f64) -> Self {
        let g_p = self.base_grad(p);
        PiecewiseQuadratic {
            plateau: Some(Plateau { p, g_p }),
            ..self.clone()
        }
    }

    pub fn without_plateau(&self) -> Self {
        PiecewiseQuadratic {
            plateau: None,
            ..self.clone()
        }
    }

    /// The function built from the first `k` intervals only.
    pub fn truncated(&self, k: usize) -> Self {
        PiecewiseQuadratic::new(self.g, self.beta, self.intervals[..k.min(self.intervals.len())].to_vec())
            .expect("a prefix of valid intervals is valid")
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn plateau(&self) -> Option<Plateau> {
        self.plateau
    }

    pub fn covered_length(&self) -> f64 {
        self.prefix[self.intervals.len()]
    }

    /// Flat-region onset `p - g_p / beta`, if a plateau is present.
    pub fn minimizer(&self) -> Option<f64> {
        self.plateau.map(|pl| pl.p - pl.g_p / self.beta)
    }

    /// Covered length of `(-inf, x]`.
    fn covered(&self, x: f64) -> f64 {
        let idx = self.intervals.partition_point(|iv| iv.a <= x);
        if idx == 0 {
            return 0.0;
        }
        let j = idx - 1;
        let iv = self.intervals[j];
        if x >= iv.b {
            self.prefix[j + 1]
        } else {
            self.prefix[j] + (x - iv.a)
        }
    }

    fn base_grad(&self, x: f64) -> f64 {
        -self.g + self.beta * self.covered(x)
    }

    pub fn grad(&self, x: f64) -> f64 {
        match self.plateau {
            Some(pl) if x > pl.p => {
                if x >= pl.p - pl.g_p / self.beta {
                    0.0
                } else {
                    (pl.g_p + self.beta * (x - pl.p)).min(0.0)
                }
            }
            _ => self.base_grad(x),
        }
    }

    /// `int_{a_0}^{x}` of the covered length.
    fn phi(&self, x: f64) -> f64 {
        let idx = self.intervals.partition_point(|iv| iv.a <= x);
        if idx == 0 {
            return 0.0;
        }
        let j = idx - 1;
        let iv = self.intervals[j];
        if x <= iv.b {
            let s = x - iv.a;
            self.phi_a[j] + self.prefix[j] * s + 0.5 * s * s
        } else {
            self.phi_b[j] + self.prefix[j + 1] * (x - iv.b)
        }
    }

    fn base_value(&self, x: f64) -> f64 {
        -self.g * x + self.beta * (self.phi(x) - self.phi(0.0))
    }

    /// Function value, normalized so that the un-extended function vanishes at 0.
    pub fn value(&self, x: f64) -> f64 {
        match self.plateau {
            Some(pl) if x > pl.p => {
                let xs = x.min(pl.p - pl.g_p / self.beta);
                let s = xs - pl.p;
                self.base_value(pl.p) + pl.g_p * s + 0.5 * self.beta * s * s
            }
            _ => self.base_value(x),
        }
    }

    /// `beta` inside any interval (closed) or the plateau band `(p, x*)`, else 0.
    pub fn hessian(&self, x: f64) -> f64 {
        if let Some(pl) = self.plateau {
            if x > pl.p {
                let onset = pl.p - pl.g_p / self.beta;
                return if x < onset { self.beta } else { 0.0 };
            }
        }
        let idx = self.intervals.partition_point(|iv| iv.a <= x);
        if idx > 0 && x <= self.intervals[idx - 1].b {
            self.beta
        } else {
            0.0
        }
    }

    /// Signed covered length of `(v, u]`, including the plateau band.
    fn covered_between(&self, u: f64, v: f64) -> f64 {
        if u == v {
            return 0.0;
        }
        let (lo, hi, sign) = if v < u { (v, u, 1.0) } else { (u, v, -1.0) };
        let mut total = 0.0;
        let mut j = self.intervals.partition_point(|iv| iv.b < lo);
        while j < self.intervals.len() && self.intervals[j].a < hi {
            let iv = self.intervals[j];
            let w = iv.b.min(hi) - iv.a.max(lo);
            if w > 0.0 {
                total += w;
            }
            j += 1;
        }
        if let Some(pl) = self.plateau {
            let band = Interval::new(pl.p, pl.p - pl.g_p / self.beta);
            let w = band.b.min(hi) - band.a.max(lo);
            if w > 0.0 {
                total += w;
            }
        }
        sign * total
    }

    /// `grad(u) - grad(v)` from the covered length between the two points,
    /// free of the cancellation in subtracting two large gradients.
    pub fn grad_difference(&self, u: f64, v: f64) -> f64 {
        self.beta * self.covered_between(u, v)
    }
}

impl Objective for PiecewiseQuadratic {
    fn dim(&self) -> usize {
        1
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![self.grad(x[0])]
    }
    fn gradient_difference(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        vec![self.grad_difference(u[0], v[0])]
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.beta)
    }
    fn name(&self) -> String {
        let plateau = if self.plateau.is_some() { "+plateau" } else { "" };
        format!("piecewise-quadratic(k={}{plateau})", self.intervals.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example() -> PiecewiseQuadratic {
        PiecewiseQuadratic::new(3.0, 2.0, vec![Interval::new(1.0, 2.0)]).unwrap()
    }

    #[test]
    fn grad_examples() {
        let f = example();
        assert_eq!(f.grad(0.0), -3.0);
        assert_eq!(f.grad(1.5), -2.0);
        assert_eq!(f.grad(5.0), -1.0);
        let fp = PiecewiseQuadratic {
            plateau: Some(Plateau { p: 5.0, g_p: -1.0 }),
            ..f.clone()
        };
        assert_eq!(fp.grad(5.5), 0.0);
        assert_eq!(fp.grad(9.0), 0.0);
        assert_eq!(fp.grad(5.25), -0.5);
    }

    #[test]
    fn value_examples() {
        let f = PiecewiseQuadratic::new(3.0, 2.0, vec![]).unwrap();
        assert_eq!(f.value(2.0), -6.0);
        let f = PiecewiseQuadratic::new(3.0, 2.0, vec![Interval::new(0.0, 1.0)]).unwrap();
        assert_eq!(f.value(1.0) - f.value(0.0), -2.0);
    }

    #[test]
    fn value_matches_central_difference() {
        let f = PiecewiseQuadratic::new(
            1.5,
            0.8,
            vec![Interval::new(-2.0, -1.0), Interval::new(0.5, 0.9), Interval::new(3.0, 3.3)],
        )
        .unwrap()
        .with_plateau(3.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-4;
        for _ in 0..100 {
            let x: f64 = rng.random_range(-4.0..8.0);
            let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            assert!((fd - f.grad(x)).abs() < 1e-6, "x = {x}: fd {fd} vs grad {}", f.grad(x));
        }
    }

    #[test]
    fn hessian_examples() {
        let f = example();
        assert_eq!(f.hessian(1.5), 2.0);
        assert_eq!(f.hessian(0.5), 0.0);
        assert_eq!(f.hessian(1.0), 2.0);
        assert_eq!(f.hessian(2.0), 2.0);
        let fp = f.with_plateau(2.0);
        assert_eq!(fp.minimizer(), Some(2.5));
        assert_eq!(fp.hessian(2.25), 2.0);
        assert_eq!(fp.hessian(3.0), 0.0);
    }

    #[test]
    fn rejects_overlap() {
        assert!(PiecewiseQuadratic::new(1.0, 1.0, vec![Interval::new(0.0, 1.0), Interval::new(1.0, 2.0)]).is_err());
        assert!(PiecewiseQuadratic::new(1.0, 1.0, vec![Interval::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn grad_difference_agrees_with_subtraction() {
        let f = PiecewiseQuadratic::new(1.0, 1.0, vec![Interval::new(0.1, 0.2), Interval::new(0.5, 0.7)])
            .unwrap()
            .with_plateau(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let u: f64 = rng.random_range(-1.0..2.0);
            let v: f64 = rng.random_range(-1.0..2.0);
            let d = f.grad_difference(u, v);
            assert!((d - (f.grad(u) - f.grad(v))).abs() < 1e-14, "{u} {v}");
        }
    }
}
