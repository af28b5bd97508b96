//! Two literature forms of NAG, implemented from their own recurrences.
//!
//! Variant I (three sequences x~, y~, z~) coincides with canonical NAG at
//! `eta = 1/beta`; variant II (x~, x~md, x~ag) coincides at `eta = 1/(2 beta)`.

use crate::error::{Error, Result};
use crate::nag::run_nag;
use crate::objective::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Canonical,
    Variant1,
    Variant2,
}

impl VariantKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "canonical" => Some(VariantKind::Canonical),
            "variant1" => Some(VariantKind::Variant1),
            "variant2" => Some(VariantKind::Variant2),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            VariantKind::Canonical => "canonical",
            VariantKind::Variant1 => "variant1",
            VariantKind::Variant2 => "variant2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantConfig {
    pub kind: VariantKind,
    pub beta: f64,
}

impl VariantConfig {
    pub fn new(kind: VariantKind, beta: f64) -> Self {
        VariantConfig { kind, beta }
    }

    /// The canonical step size the variant is equivalent to.
    pub fn equivalent_eta(&self) -> Result<f64> {
        self.validate()?;
        match self.kind {
            VariantKind::Variant1 => Ok(1.0 / self.beta),
            VariantKind::Variant2 => Ok(1.0 / (2.0 * self.beta)),
            VariantKind::Canonical => Err(unsupported()),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.beta > 0.0 && self.beta.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!("variant smoothness must be positive, got {}", self.beta)))
        }
    }
}

fn unsupported() -> Error {
    Error::domain("run_variant handles variant1 and variant2; use run_nag for the canonical method")
}

/// Sequences of variant I. Every vector is indexed by time, `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant1Run {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

/// Sequences of variant II. Time starts at 1; use the accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant2Run {
    x: Vec<Vec<f64>>,
    md: Vec<Vec<f64>>,
    ag: Vec<Vec<f64>>,
}

impl Variant2Run {
    /// `x~_t` for `1 <= t <= T + 1`.
    pub fn x(&self, t: usize) -> &[f64] {
        &self.x[t - 1]
    }
    /// `x~md_t` for `1 <= t <= T`.
    pub fn md(&self, t: usize) -> &[f64] {
        &self.md[t - 1]
    }
    /// `x~ag_t` for `1 <= t <= T + 1`.
    pub fn ag(&self, t: usize) -> &[f64] {
        &self.ag[t - 1]
    }
    pub fn steps(&self) -> usize {
        self.md.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VariantRun {
    Variant1(Variant1Run),
    Variant2(Variant2Run),
}

fn combine(a: f64, u: &[f64], b: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(p, q)| a * p + b * q).collect()
}

fn axpy(u: &[f64], a: f64, g: &[f64]) -> Vec<f64> {
    u.iter().zip(g).map(|(p, q)| p + a * q).collect()
}

fn grad<F: Objective + ?Sized>(f: &F, p: &[f64], step: usize) -> Result<Vec<f64>> {
    let g = f.gradient(p);
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NonFinite {
            step,
            point: p.to_vec(),
        })
    }
}

pub fn run_variant<F: Objective + ?Sized>(
    cfg: &VariantConfig,
    f: &F,
    x0: &[f64],
    steps: usize,
) -> Result<VariantRun> {
    cfg.validate()?;
    let beta = cfg.beta;
    match cfg.kind {
        VariantKind::Canonical => Err(unsupported()),
        VariantKind::Variant1 => {
            let mut x = vec![x0.to_vec()];
            let mut y = vec![x0.to_vec()];
            let mut z = vec![x0.to_vec()];
            for t in 0..steps {
                let tau = 2.0 / (t as f64 + 2.0);
                let alpha = (t as f64 + 2.0) / (2.0 * beta);
                let xn = combine(tau, &z[t], 1.0 - tau, &y[t]);
                let g = grad(f, &xn, t + 1)?;
                let yn = axpy(&xn, -1.0 / beta, &g);
                let zn = axpy(&z[t], -alpha, &g);
                x.push(xn);
                y.push(yn);
                z.push(zn);
            }
            Ok(VariantRun::Variant1(Variant1Run { x, y, z }))
        }
        VariantKind::Variant2 => {
            let mut x = vec![x0.to_vec()];
            let mut ag = vec![x0.to_vec()];
            let mut md = Vec::with_capacity(steps);
            for t in 1..=steps {
                let binv = 2.0 / (t as f64 + 1.0);
                let step = (t as f64 + 1.0) / (4.0 * beta);
                let m = combine(binv, &x[t - 1], 1.0 - binv, &ag[t - 1]);
                let g = grad(f, &m, t)?;
                let xn = axpy(&x[t - 1], -step, &g);
                let an = combine(binv, &xn, 1.0 - binv, &ag[t - 1]);
                md.push(m);
                x.push(xn);
                ag.push(an);
            }
            Ok(VariantRun::Variant2(Variant2Run { x, md, ag }))
        }
    }
}

fn max_abs_diff(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}

/// Largest absolute deviation over all claimed identities, for `1 <= t <= T`.
///
/// Variant I: `x~_t = y_{t-1}` and `y~_t = x_t`.
/// Variant II: `x~ag_t = x_{t-1}` and `x~md_t = y_{t-1}`.
pub fn check_variant_equivalence<F: Objective + ?Sized>(
    cfg: &VariantConfig,
    f: &F,
    x0: &[f64],
    steps: usize,
) -> Result<f64> {
    let eta = cfg.equivalent_eta()?;
    let canon = run_nag(f, x0, steps, eta)?;
    let run = run_variant(cfg, f, x0, steps)?;
    let mut dev = 0.0_f64;
    for t in 1..=steps {
        match &run {
            VariantRun::Variant1(r) => {
                dev = dev.max(max_abs_diff(&r.x[t], canon.y(t - 1)));
                dev = dev.max(max_abs_diff(&r.y[t], canon.x(t)));
            }
            VariantRun::Variant2(r) => {
                dev = dev.max(max_abs_diff(r.ag(t), canon.x(t - 1)));
                dev = dev.max(max_abs_diff(r.md(t), canon.y(t - 1)));
            }
        }
    }
    Ok(dev)
}
