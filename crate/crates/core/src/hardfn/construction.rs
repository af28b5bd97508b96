use super::piecewise::{Interval, PiecewiseQuadratic};
use crate::check::{CheckOutcome, Report};
use crate::error::{Error, Result};
use crate::nag::run_nag;

/// Perturbation floor relative to trajectory magnitude, about `2.2e-12`.
pub const PRECISION_GUARD: f64 = 1e4 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardFnParams {
    pub g: f64,
    pub beta: f64,
    pub eta: f64,
    pub eps: f64,
}

impl HardFnParams {
    pub fn new(g: f64, beta: f64, eta: f64, eps: f64) -> Result<Self> {
        let p = HardFnParams { g, beta, eta, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let HardFnParams { g, beta, eta, eps } = *self;
        for (name, v) in [("G", g), ("beta", beta), ("eta", eta), ("eps", eps)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if eta * beta > 1.0 + 1e-12 {
            return Err(Error::domain(format!("need eta <= 1/beta, got eta * beta = {}", eta * beta)));
        }
        if eps >= g / (2.0 * beta) {
            return Err(Error::domain(format!(
                "need eps < G/(2 beta) = {}, got eps = {eps}",
                g / (2.0 * beta)
            )));
        }
        Ok(())
    }

    /// `ceil(10 / (eta beta))`.
    pub fn phase_unit(&self) -> usize {
        phase_unit(self.eta, self.beta).expect("validated parameters")
    }

    /// `n_i`.
    pub fn checkpoint(&self, i: usize) -> usize {
        self.phase_unit() * (i + 2)
    }

    /// `G / (3 beta)`.
    pub fn floor(&self) -> f64 {
        self.g / (3.0 * self.beta)
    }

    /// Upper bound on `M`: `ln(3G / (2 beta eps))`.
    pub fn m_bound(&self) -> f64 {
        (3.0 * self.g / (2.0 * self.beta * self.eps)).ln()
    }

    /// Steps after which the divergence stays above the floor:
    /// `ceil(10/(eta beta)) (ln(3G/(2 beta eps)) + 3)`.
    pub fn floor_horizon(&self) -> f64 {
        self.phase_unit() as f64 * (self.m_bound() + 3.0)
    }
}

/// `ceil(10 / (eta beta))`, snapping to the nearest integer when the quotient
/// is within `1e-9` relative of it, so that e.g. `eta = 0.1` gives 100.
pub fn phase_unit(eta: f64, beta: f64) -> Result<usize> {
    let eb = eta * beta;
    if !(eb > 0.0 && eb.is_finite()) {
        return Err(Error::domain(format!("need eta * beta > 0, got {eb}")));
    }
    let q = 10.0 / eb;
    let r = q.round();
    let unit = if (q - r).abs() <= 1e-9 * r { r } else { q.ceil() };
    Ok(unit as usize)
}

/// `n_i = ceil(10 / (eta beta)) (i + 2)`.
pub fn phase_index(i: usize, eta: f64, beta: f64) -> Result<usize> {
    Ok(phase_unit(eta, beta)? * (i + 2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionResult {
    pub params: HardFnParams,
    /// `n_1, ..., n_{M+1}`.
    pub checkpoints: Vec<usize>,
    /// `[y^min_{n_j}, y^max_{n_j}]` for `j = 1, ..., M+1`.
    pub phase_intervals: Vec<Interval>,
    pub m: usize,
    pub f_m: PiecewiseQuadratic,
    pub f_m_plus: PiecewiseQuadratic,
    pub minimizer: f64,
}

impl ConstructionResult {
    /// Reassembles a construction from stored pieces without re-running the
    /// builder. Use [`check_consistency`] to validate it.
    pub fn from_parts(params: HardFnParams, phase_intervals: Vec<Interval>) -> Result<Self> {
        params.validate()?;
        if phase_intervals.len() < 2 {
            return Err(Error::domain("a construction needs at least M + 1 = 2 phase intervals"));
        }
        let m = phase_intervals.len() - 1;
        let f_m = PiecewiseQuadratic::new(params.g, params.beta, phase_intervals[..m].to_vec())?;
        let checkpoints = (1..=m + 1).map(|i| params.checkpoint(i)).collect();
        let f_m_plus = f_m.with_plateau(phase_intervals[m - 1].b);
        let minimizer = f_m_plus.minimizer().expect("plateau present");
        Ok(ConstructionResult {
            params,
            checkpoints,
            phase_intervals,
            m,
            f_m,
            f_m_plus,
            minimizer,
        })
    }

    /// `n_j` for `1 <= j <= M + 1`.
    pub fn n(&self, j: usize) -> usize {
        self.checkpoints[j - 1]
    }

    pub fn widths(&self) -> Vec<f64> {
        self.phase_intervals.iter().map(|iv| iv.width()).collect()
    }

    /// `f_{j}`: the objective built from the first `j` intervals.
    pub fn f_j(&self, j: usize) -> PiecewiseQuadratic {
        self.f_m.truncated(j)
    }
}

/// Runs the inductive construction `f_0, f_1, ...` until the covered length
/// reaches `G / (2 beta)`.
pub fn build_hard_function(params: HardFnParams) -> Result<ConstructionResult> {
    params.validate()?;
    let HardFnParams { g, beta, eta, eps } = params;
    let unit = params.phase_unit();
    let cap = params.m_bound().ceil() as usize + 2;
    let target = g / (2.0 * beta);

    let mut f = PiecewiseQuadratic::new(g, beta, vec![])?;
    let mut checkpoints = Vec::new();
    let mut phase_intervals: Vec<Interval> = Vec::new();
    let mut magnitude = 1.0_f64;
    let m = loop {
        let i = phase_intervals.len() + 1;
        if i > cap {
            return Err(Error::Runaway { phases: i, cap });
        }
        let n_i = unit * (i + 2);
        let a = run_nag(&f, &[0.0], n_i, eta)?;
        let b = run_nag(&f, &[eps], n_i, eta)?;
        let iv = Interval::spanning(a.y(n_i)[0], b.y(n_i)[0]);
        if !(iv.width() > 0.0) {
            return Err(Error::Construction {
                phase: i,
                detail: format!("degenerate interval [{:e}, {:e}]", iv.a, iv.b),
            });
        }
        if let Some(prev) = phase_intervals.last() {
            if !(prev.b < iv.a) {
                return Err(Error::Construction {
                    phase: i,
                    detail: format!(
                        "interval [{:e}, {:e}] does not lie strictly right of [{:e}, {:e}]",
                        iv.a, iv.b, prev.a, prev.b
                    ),
                });
            }
        }
        magnitude = magnitude.max(iv.a.abs()).max(iv.b.abs());
        checkpoints.push(n_i);
        phase_intervals.push(iv);
        if f.covered_length() + iv.width() >= target {
            break i - 1;
        }
        let mut ivs = f.intervals().to_vec();
        ivs.push(iv);
        f = PiecewiseQuadratic::new(g, beta, ivs)?;
    };
    let floor = PRECISION_GUARD * magnitude;
    if eps < floor {
        return Err(Error::Precision { eps, floor });
    }
    if m == 0 {
        return Err(Error::Construction {
            phase: 1,
            detail: "the first interval already covers G/(2 beta)".into(),
        });
    }
    let f_m_plus = f.with_plateau(phase_intervals[m - 1].b);
    let minimizer = f_m_plus.minimizer().expect("plateau present");
    Ok(ConstructionResult {
        params,
        checkpoints,
        phase_intervals,
        m,
        f_m: f,
        f_m_plus,
        minimizer,
    })
}

/// `f_M^+`: `f_M` continued quadratically right of `p = y^max_{n_M}`.
pub fn extend_plateau(cr: &ConstructionResult) -> PiecewiseQuadratic {
    cr.f_m.with_plateau(cr.phase_intervals[cr.m - 1].b)
}

/// Re-derives every phase from the stored intervals.
///
/// For each `1 <= j <= M + 1`, NAG on `f_{j-1}` from 0 and from eps must
/// reproduce the stored interval at `n_j` bitwise, and for `j <= M` the runs
/// on `f_M` must coincide bitwise with those on `f_{j-1}` up to `n_j`.
pub fn check_consistency(cr: &ConstructionResult) -> Result<Report> {
    let p = cr.params;
    let mut report = Report::new();
    let full_a = run_nag(&cr.f_m, &[0.0], cr.n(cr.m + 1), p.eta)?;
    let full_b = run_nag(&cr.f_m, &[p.eps], cr.n(cr.m + 1), p.eta)?;
    for j in 1..=cr.m + 1 {
        let nj = cr.n(j);
        let fj = cr.f_j(j - 1);
        let a = run_nag(&fj, &[0.0], nj, p.eta)?;
        let b = run_nag(&fj, &[p.eps], nj, p.eta)?;
        let expect = Interval::spanning(a.y(nj)[0], b.y(nj)[0]);
        let stored = cr.phase_intervals[j - 1];
        let dev = (expect.a - stored.a).abs().max((expect.b - stored.b).abs());
        report.within(format!("consistency/phase{j}/interval"), dev, 0.0);
        if j <= cr.m {
            let mut mismatch = 0.0_f64;
            for t in 0..=nj {
                for (u, v) in [(&a, &full_a), (&b, &full_b)] {
                    mismatch = mismatch
                        .max((u.x(t)[0] - v.x(t)[0]).abs())
                        .max((u.y(t)[0] - v.y(t)[0]).abs());
                }
            }
            report.within(format!("consistency/phase{j}/trajectory"), mismatch, 0.0);
        }
    }
    let total = cr.f_m.covered_length();
    let target = p.g / (2.0 * p.beta);
    report.push(CheckOutcome::new(
        "consistency/covered_length_below_half_slope",
        total < target,
        total,
        target,
    ));
    report.at_least(
        "consistency/next_interval_reaches_half_slope",
        total + cr.phase_intervals[cr.m].width(),
        target,
        0.0,
    );
    Ok(report)
}
