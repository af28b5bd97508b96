//! Uniform stability of full-batch NAG through a five-symbol loss family
//! that reduces a replaced example to a perturbed initialization.

use std::fmt::Write as _;

use crate::check::{rel_diff, CheckOutcome, Report, Verdict, EQUALITY_TOL, INEQUALITY_SLACK};
use crate::error::{Error, Result};
use crate::hardfn::{build_hard_function, format, ConstructionResult, HardFnParams, Interval, PiecewiseQuadratic};
use crate::nag::run_nag;
use crate::objective::{Linear, Objective, Quadratic, Zero};
use crate::sampling;
use crate::stability::{c1, c2};

/// Largest `n` accepted by [`build_reduction_scenario`]; beyond it the derived
/// eps approaches the precision guard of the construction.
pub const MAX_SAMPLES: usize = 1_000_000;

/// `c1 / 4`.
pub fn c3() -> f64 {
    c1() / 4.0
}

/// `c2 / 4`.
pub fn c4() -> f64 {
    c2() / 4.0
}

/// The losses `l(.; z)` for `z in {1, ..., 5}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossFamily {
    pub hat_g: f64,
    pub hat_beta: f64,
    pub hat_eta: f64,
    pub n: usize,
    /// `(G, beta, eta, eps)` handed to the construction.
    pub derived: HardFnParams,
    /// `l(.; 2)`: slope `-beta eta G`, curvature `beta` on `[0, eta G]`.
    pub g2: PiecewiseQuadratic,
    /// `l(.; 5) = f_M^+`.
    pub f_plus: PiecewiseQuadratic,
}

impl LossFamily {
    pub fn gradient(&self, w: f64, z: u8) -> f64 {
        let g = self.derived.g;
        match z {
            1 => 0.0,
            2 => self.g2.grad(w),
            3 => -g,
            4 => g,
            5 => self.f_plus.grad(w),
            _ => panic!("symbol {z} outside 1..=5"),
        }
    }

    pub fn value(&self, w: f64, z: u8) -> f64 {
        let g = self.derived.g;
        match z {
            1 => 0.0,
            2 => self.g2.value(w),
            3 => -g * w,
            4 => g * w,
            5 => self.f_plus.value(w),
            _ => panic!("symbol {z} outside 1..=5"),
        }
    }
}

/// `R(w) = sum_z (count_z / n) l(w; z)`, summed in symbol order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRisk {
    family: LossFamily,
    weights: Vec<(u8, f64)>,
    label: String,
}

impl EmpiricalRisk {
    pub fn new(family: &LossFamily, sample: &[u8], label: &str) -> Self {
        let n = sample.len() as f64;
        let weights = (1..=5u8)
            .filter_map(|z| {
                let c = sample.iter().filter(|&&s| s == z).count();
                (c > 0).then(|| (z, c as f64 / n))
            })
            .collect();
        EmpiricalRisk {
            family: family.clone(),
            weights,
            label: label.to_string(),
        }
    }

    pub fn value(&self, w: f64) -> f64 {
        self.weights
            .iter()
            .fold(0.0, |acc, &(z, c)| acc + c * self.family.value(w, z))
    }

    pub fn grad(&self, w: f64) -> f64 {
        self.weights
            .iter()
            .fold(0.0, |acc, &(z, c)| acc + c * self.family.gradient(w, z))
    }
}

impl Objective for EmpiricalRisk {
    fn dim(&self) -> usize {
        1
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![self.grad(x[0])]
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.family.derived.beta)
    }
    fn name(&self) -> String {
        self.label.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionScenario {
    pub family: LossFamily,
    pub construction: ConstructionResult,
    pub s: Vec<u8>,
    pub s_prime: Vec<u8>,
    pub r_s: EmpiricalRisk,
    pub r_s_prime: EmpiricalRisk,
}

/// `eta = (n-3)/n hat_eta`, `eps = beta eta^2 G / (n-3)`.
pub fn derived_params(hat_g: f64, hat_beta: f64, hat_eta: f64, n: usize) -> Result<HardFnParams> {
    if n < 4 {
        return Err(Error::domain(format!("need n >= 4 samples, got {n}")));
    }
    if n > MAX_SAMPLES {
        return Err(Error::domain(format!("n = {n} exceeds the supported maximum {MAX_SAMPLES}")));
    }
    for (name, v) in [("G", hat_g), ("beta", hat_beta), ("eta", hat_eta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if hat_eta * hat_beta > 1.0 + 1e-12 {
        return Err(Error::domain(format!(
            "need eta <= 1/beta, got eta * beta = {}",
            hat_eta * hat_beta
        )));
    }
    let nf = n as f64;
    let eta = (nf - 3.0) / nf * hat_eta;
    let eps = hat_beta * eta * eta * hat_g / (nf - 3.0);
    HardFnParams::new(hat_g, hat_beta, eta, eps).map_err(|e| {
        Error::domain(format!(
            "derived parameters G = {hat_g}, beta = {hat_beta}, eta = {eta}, eps = {eps} are invalid: {e}"
        ))
    })
}

pub fn build_reduction_scenario(hat_g: f64, hat_beta: f64, hat_eta: f64, n: usize) -> Result<ReductionScenario> {
    let derived = derived_params(hat_g, hat_beta, hat_eta, n)?;
    let construction = build_hard_function(derived)?;
    let HardFnParams { g, beta, eta, .. } = derived;
    let eg = eta * g;
    let g2 = PiecewiseQuadratic::new(beta * eg, beta, vec![Interval::new(0.0, eg)])?;
    let family = LossFamily {
        hat_g,
        hat_beta,
        hat_eta,
        n,
        derived,
        g2,
        f_plus: construction.f_m_plus.clone(),
    };
    let mut s = vec![1u8, 3, 4];
    s.resize(n, 5);
    let mut s_prime = s.clone();
    s_prime[0] = 2;
    let r_s = EmpiricalRisk::new(&family, &s, "R_S");
    let r_s_prime = EmpiricalRisk::new(&family, &s_prime, "R_S'");
    Ok(ReductionScenario {
        family,
        construction,
        s,
        s_prime,
        r_s,
        r_s_prime,
    })
}

impl ReductionScenario {
    pub fn n(&self) -> usize {
        self.family.n
    }

    /// Construction checkpoints `n_i <= horizon`, `i >= 1`.
    pub fn checkpoints(&self, horizon: usize) -> Vec<usize> {
        let p = self.family.derived;
        (1..).map(|i| p.checkpoint(i)).take_while(|&t| t <= horizon).collect()
    }

    /// `ceil(40/(hat_eta hat_beta)) (ln(6n / (hat_eta hat_beta)^2) + 3)`.
    pub fn floor_horizon(&self) -> f64 {
        let eb = self.family.hat_eta * self.family.hat_beta;
        // phase_unit(a, b) = ceil(10 / (a b)), so b = 1/4 gives ceil(40 / eb)
        let unit = crate::hardfn::phase_unit(eb, 0.25).expect("positive");
        unit as f64 * ((6.0 * self.n() as f64 / (eb * eb)).ln() + 3.0)
    }

    /// First step at which the constant floor applies.
    pub fn floor_start(&self) -> usize {
        self.floor_horizon().ceil() as usize
    }

    /// `min{G^2/(3 beta), c4 e^{c3 eta beta T} beta eta^2 G^2 / n}` in the
    /// given parameters.
    pub fn lower_bound(&self, t: usize) -> f64 {
        let f = &self.family;
        let (g, b, e) = (f.hat_g, f.hat_beta, f.hat_eta);
        let floor = g * g / (3.0 * b);
        floor.min(c4() * (c3() * e * b * t as f64).exp() * b * e * e * g * g / self.n() as f64)
    }

    /// `(2 eta G^2 / n)(3^{T-1} + 1)`.
    pub fn upper_bound(&self, t: usize) -> f64 {
        let f = &self.family;
        2.0 * f.hat_eta * f.hat_g * f.hat_g / self.n() as f64 * (3f64.powi(t as i32 - 1) + 1.0)
    }

    /// Derived parameters, `n` and the serialized construction.
    pub fn to_text(&self) -> String {
        let p = self.family.derived;
        let mut out = String::new();
        let _ = writeln!(out, "# uniform-stability scenario");
        let _ = writeln!(
            out,
            "hat_G = {:.16e}\nhat_beta = {:.16e}\nhat_eta = {:.16e}\nn = {}",
            self.family.hat_g,
            self.family.hat_beta,
            self.family.hat_eta,
            self.n()
        );
        let _ = writeln!(
            out,
            "G = {:.16e}\nbeta = {:.16e}\neta = {:.16e}\neps = {:.16e}",
            p.g, p.beta, p.eta, p.eps
        );
        let _ = writeln!(out, "S = {}", join(&self.s));
        let _ = writeln!(out, "S' = {}", join(&self.s_prime));
        let _ = writeln!(out, "# construction");
        out.push_str(&format::to_text(&self.construction));
        out
    }
}

fn join(s: &[u8]) -> String {
    s.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(" ")
}

/// NAG on `R_S` and `R_S'` from 0 with step `hat_eta` reproduces NAG on
/// `f_M^+` from 0 and eps with step `eta`, for `1 <= t <= T`. Returns the
/// largest relative deviation.
pub fn verify_reduction(sc: &ReductionScenario, steps: usize) -> Result<Verdict<f64>> {
    if steps == 0 {
        return Err(Error::domain("the reduction check needs T >= 1"));
    }
    let p = sc.family.derived;
    let hat_eta = sc.family.hat_eta;
    let f = &sc.construction.f_m_plus;
    let pairs = [
        ("reduction/r_s", run_nag(f, &[0.0], steps, p.eta)?, run_nag(&sc.r_s, &[0.0], steps, hat_eta)?),
        (
            "reduction/r_s_prime",
            run_nag(f, &[p.eps], steps, p.eta)?,
            run_nag(&sc.r_s_prime, &[0.0], steps, hat_eta)?,
        ),
    ];
    let mut report = Report::new();
    let mut overall = 0.0_f64;
    for (name, a, b) in &pairs {
        let mut worst = 0.0_f64;
        let mut worst_t = 0;
        for t in 1..=steps {
            for (u, v) in [(a.x(t)[0], b.x(t)[0]), (a.y(t)[0], b.y(t)[0]), (a.m(t)[0], b.m(t)[0])] {
                let d = rel_diff(u, v);
                if d > worst {
                    worst = d;
                    worst_t = t;
                }
            }
        }
        overall = overall.max(worst);
        report.push(
            CheckOutcome::new(*name, worst <= EQUALITY_TOL, worst, EQUALITY_TOL)
                .with_detail(format!("worst step {worst_t}")),
        );
    }
    Ok(Verdict::new(overall, report))
}

/// Gaps `G |x_T - x~_T|` of full-batch NAG on `R_S` and `R_S'`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    /// `gaps[t]` for `t = 0..=T`.
    pub gaps: Vec<f64>,
    pub report: Report,
}

/// `G |x_T - x~_T|` for one `T`, with the lower bound asserted when `T` is a
/// checkpoint or lies past the floor horizon.
pub fn uniform_gap(sc: &ReductionScenario, steps: usize) -> Result<Verdict<f64>> {
    let hat_eta = sc.family.hat_eta;
    let a = run_nag(&sc.r_s, &[0.0], steps, hat_eta)?;
    let b = run_nag(&sc.r_s_prime, &[0.0], steps, hat_eta)?;
    let gap = sc.family.hat_g * (a.x(steps)[0] - b.x(steps)[0]).abs();
    let mut report = Report::new();
    if sc.checkpoints(steps).last() == Some(&steps) {
        report.at_least(format!("uniform/checkpoint/T{steps}"), gap, sc.lower_bound(steps), INEQUALITY_SLACK);
    }
    if steps >= sc.floor_start() {
        let f = &sc.family;
        report.at_least(
            format!("uniform/floor/T{steps}"),
            gap,
            f.hat_g * f.hat_g / (3.0 * f.hat_beta),
            INEQUALITY_SLACK,
        );
    }
    Ok(Verdict::new(gap, report))
}

/// Every checkpoint up to `horizon`, the floor past the floor horizon, and
/// the identity `gap = G |dx|` against the divergence on `f_M^+`.
pub fn verify_uniform_gap(sc: &ReductionScenario, horizon: usize) -> Result<GapSeries> {
    let f = &sc.family;
    let p = f.derived;
    let a = run_nag(&sc.r_s, &[0.0], horizon, f.hat_eta)?;
    let b = run_nag(&sc.r_s_prime, &[0.0], horizon, f.hat_eta)?;
    let fa = run_nag(&sc.construction.f_m_plus, &[0.0], horizon, p.eta)?;
    let fb = run_nag(&sc.construction.f_m_plus, &[p.eps], horizon, p.eta)?;
    let gaps: Vec<f64> = (0..=horizon).map(|t| f.hat_g * (a.x(t)[0] - b.x(t)[0]).abs()).collect();
    let mut report = Report::new();
    let mut identity = 0.0_f64;
    for t in sc.checkpoints(horizon) {
        report.at_least(format!("uniform/checkpoint/T{t}"), gaps[t], sc.lower_bound(t), INEQUALITY_SLACK);
        let via_init = f.hat_g * (fa.x(t)[0] - fb.x(t)[0]).abs();
        identity = identity.max(rel_diff(gaps[t], via_init));
    }
    let start = sc.floor_start();
    if start <= horizon {
        let min = gaps[start..].iter().copied().fold(f64::INFINITY, f64::min);
        report.at_least("uniform/floor", min, f.hat_g * f.hat_g / (3.0 * f.hat_beta), INEQUALITY_SLACK);
    }
    report.within("uniform/gap_equals_scaled_divergence", identity, EQUALITY_TOL);
    Ok(GapSeries { gaps, report })
}

/// Outcome of the two-symbol linear scenario `R_S = G w`, `R_S' = ((n-2)/n) G w`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLowerOutcome {
    /// `3 G eta T (T+2) / (4n)`, the displayed closed form.
    pub closed_form: f64,
    /// `|dx_T|` from the two runs.
    pub simulated: f64,
    /// `G eta (T^2 + 5T + 2) / (4n)`, the value the recurrence actually yields.
    pub exact: f64,
    pub report: Report,
}

pub fn quadratic_lower_closed_form(g: f64, eta: f64, n: usize, steps: usize) -> f64 {
    let t = steps as f64;
    3.0 * g * eta * t * (t + 2.0) / (4.0 * n as f64)
}

/// Solution of `dx_t = dx_{t-1} + dm_{t-1} - 2 G eta / n`,
/// `dm_t = gamma_t (dm_{t-1} - 2 G eta / n)` from zero, in magnitude.
pub fn quadratic_lower_exact(g: f64, eta: f64, n: usize, steps: usize) -> f64 {
    let t = steps as f64;
    g * eta * (t * t + 5.0 * t + 2.0) / (4.0 * n as f64)
}

pub fn quadratic_linear_lower(g: f64, eta: f64, n: usize, steps: usize) -> Result<QuadraticLowerOutcome> {
    if n < 2 || steps == 0 {
        return Err(Error::domain(format!("need n >= 2 and T >= 1, got n = {n}, T = {steps}")));
    }
    let nf = n as f64;
    let r_s = Linear::scalar(g);
    let r_sp = Linear::scalar((nf - 2.0) / nf * g);
    let a = run_nag(&r_s, &[0.0], steps, eta)?;
    let b = run_nag(&r_sp, &[0.0], steps, eta)?;
    let simulated = (a.x(steps)[0] - b.x(steps)[0]).abs();
    let closed_form = quadratic_lower_closed_form(g, eta, n, steps);
    let exact = quadratic_lower_exact(g, eta, n, steps);
    let mut report = Report::new();
    report.within(
        format!("quad_lower/closed_form/n{n}/T{steps}"),
        rel_diff(simulated, closed_form),
        1e-10,
    );
    report.within(format!("quad_lower/exact_form/n{n}/T{steps}"), rel_diff(simulated, exact), 1e-10);
    let unit = 2.0 * g * eta / nf;
    let mut worst = 0.0_f64;
    let mut sign_ok = true;
    for t in 1..=steps {
        let dm = a.m(t)[0] - b.m(t)[0];
        let want = (t as f64 - 1.0) / 4.0 * unit;
        worst = worst.max(rel_diff(dm.abs(), want));
        sign_ok &= dm <= 0.0;
    }
    report.within(format!("quad_lower/momentum_magnitude/n{n}/T{steps}"), worst, 1e-12);
    report.push(
        CheckOutcome::new(format!("quad_lower/momentum_sign/n{n}/T{steps}"), sign_ok, 0.0, 0.0)
            .with_detail("dm_t is non-positive: the law holds as |dm_t|"),
    );
    Ok(QuadraticLowerOutcome {
        closed_form,
        simulated,
        exact,
        report,
    })
}

/// `G |dx_t| <= (2 eta G^2 / n)(3^{t-1} + 1)` for `1 <= t <= T`, with NAG
/// from a common start on two risks that differ in one of `n` terms.
/// Returns the largest ratio of gap to bound.
#[allow(clippy::too_many_arguments)]
pub fn check_nag_uniform_upper_pair<A: Objective + ?Sized, B: Objective + ?Sized>(
    r_s: &A,
    r_s_prime: &B,
    x0: &[f64],
    g: f64,
    n: usize,
    steps: usize,
    eta: f64,
    label: &str,
) -> Result<Verdict<f64>> {
    let a = run_nag(r_s, x0, steps, eta)?;
    let b = run_nag(r_s_prime, x0, steps, eta)?;
    let mut worst = 0.0_f64;
    let mut worst_t = 0;
    for t in 1..=steps {
        let dx: f64 = a.x(t).iter().zip(b.x(t)).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        let bound = 2.0 * eta * g * g / n as f64 * (3f64.powi(t as i32 - 1) + 1.0);
        let ratio = g * dx / bound;
        if ratio > worst {
            worst = ratio;
            worst_t = t;
        }
    }
    let mut report = Report::new();
    report.push(
        CheckOutcome::new(format!("uniform_upper{label}"), worst <= 1.0 + 1e-9, worst, 1.0)
            .with_detail(format!("worst ratio at t = {worst_t}")),
    );
    Ok(Verdict::new(worst, report))
}

/// The upper bound on the reduction scenario, plus the sandwich
/// `lower <= gap <= upper` at every checkpoint up to `T`.
pub fn check_nag_uniform_upper(sc: &ReductionScenario, steps: usize) -> Result<Verdict<f64>> {
    let f = &sc.family;
    let mut v = check_nag_uniform_upper_pair(&sc.r_s, &sc.r_s_prime, &[0.0], f.hat_g, f.n, steps, f.hat_eta, "")?;
    let series = verify_uniform_gap(sc, steps)?;
    for t in sc.checkpoints(steps) {
        let gap = series.gaps[t];
        let (lo, hi) = (sc.lower_bound(t), sc.upper_bound(t));
        v.report.push(
            CheckOutcome::new(
                format!("uniform_sandwich/T{t}"),
                gap >= lo * (1.0 - INEQUALITY_SLACK) && gap <= hi * (1.0 + 1e-9),
                gap,
                hi,
            )
            .with_detail(format!("lower {lo:e}")),
        );
    }
    Ok(v)
}

/// Per-example convex quadratics `a_i w^2 / 2 + b_i w` in one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSample {
    pub curvature: Vec<f64>,
    pub linear: Vec<f64>,
}

impl QuadraticSample {
    fn risk(&self) -> Quadratic {
        let n = self.curvature.len() as f64;
        let a = self.curvature.iter().sum::<f64>() / n;
        let b = self.linear.iter().sum::<f64>() / n;
        Quadratic::new(nalgebra::DMatrix::from_element(1, 1, a), nalgebra::DVector::from_element(1, b))
            .expect("scalar quadratic")
    }

    fn max_gradient(&self, points: &[f64]) -> f64 {
        let mut g = 0.0_f64;
        for &w in points {
            for (a, b) in self.curvature.iter().zip(&self.linear) {
                g = g.max((a * w + b).abs());
            }
        }
        g
    }
}

/// Random scenario: `n` quadratic examples with curvature in `[0, beta]`,
/// one of them replaced. `G` is the largest per-example gradient magnitude
/// met along both runs, which is the Lipschitz constant on their hull.
pub fn random_quadratic_uniform_upper(seed: u64, n: usize, steps: usize, beta: f64) -> Result<Verdict<f64>> {
    use rand::Rng;
    if n < 2 {
        return Err(Error::domain("need n >= 2"));
    }
    let mut rng = sampling::rng(seed);
    let draw = |rng: &mut sampling::SeededRng| (rng.random_range(0.0..=beta), rng.random_range(-1.0..1.0));
    let (mut curv, mut lin) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let (a, b) = draw(&mut rng);
        curv.push(a);
        lin.push(b);
    }
    let s = QuadraticSample {
        curvature: curv.clone(),
        linear: lin.clone(),
    };
    let (a0, b0) = draw(&mut rng);
    curv[0] = a0;
    lin[0] = b0;
    let sp = QuadraticSample {
        curvature: curv,
        linear: lin,
    };
    let eta = 1.0 / beta;
    let x0: f64 = rng.random_range(-1.0..1.0);
    let (rs, rsp) = (s.risk(), sp.risk());
    let ta = run_nag(&rs, &[x0], steps, eta)?;
    let tb = run_nag(&rsp, &[x0], steps, eta)?;
    let mut pts: Vec<f64> = ta.states.iter().chain(&tb.states).flat_map(|st| [st.x[0], st.y[0]]).collect();
    pts.push(x0);
    let g = s.max_gradient(&pts).max(sp.max_gradient(&pts));
    check_nag_uniform_upper_pair(&rs, &rsp, &[x0], g, n, steps, eta, &format!("/random/seed{seed}"))
}

/// Identical samples give identical runs.
pub fn identical_samples_gap(steps: usize) -> Result<f64> {
    let z = Zero::new(1);
    let a = run_nag(&z, &[0.0], steps, 1.0)?;
    let b = run_nag(&z, &[0.0], steps, 1.0)?;
    Ok((a.x(steps)[0] - b.x(steps)[0]).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn derived_examples() {
        let p = derived_params(1.0, 1.0, 1.0, 10).unwrap();
        assert!((p.eta - 0.7).abs() < 1e-15);
        assert!((p.eps - 0.07).abs() < 1e-15);
        let p = derived_params(1.0, 1.0, 1.0, 4).unwrap();
        assert_eq!(p.eta, 0.25);
        assert_eq!(p.eps, 0.0625);
        assert!(derived_params(1.0, 1.0, 1.0, 3).is_err());
        assert!(derived_params(1.0, 1.0, 2.0, 10).is_err());
    }

    #[test]
    fn empirical_risk_is_scaled_objective() {
        let sc = build_reduction_scenario(1.0, 1.0, 1.0, 10).unwrap();
        let c = 7.0 / 10.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let w: f64 = rng.random_range(-5.0..50.0);
            assert_eq!(sc.r_s.value(w), c * sc.construction.f_m_plus.value(w));
            assert_eq!(sc.r_s.grad(w), c * sc.construction.f_m_plus.grad(w));
        }
        assert_eq!(sc.s.len(), 10);
        assert_eq!(sc.s.iter().zip(&sc.s_prime).filter(|(a, b)| a != b).count(), 1);
    }

    #[test]
    fn loss_family_shapes() {
        let sc = build_reduction_scenario(1.0, 1.0, 1.0, 10).unwrap();
        let f = &sc.family;
        let p = f.derived;
        assert_eq!(f.gradient(0.0, 2), -p.beta * p.eta * p.g);
        assert_eq!(f.gradient(p.eta * p.g, 2), 0.0);
        assert_eq!(f.gradient(p.eps + p.eta * p.g, 2), 0.0);
        assert_eq!(f.gradient(1.0, 3), -1.0);
        assert_eq!(f.gradient(1.0, 4), 1.0);
        assert_eq!(f.gradient(1.0, 1), 0.0);
    }

    #[test]
    fn reduction_holds() {
        let sc = build_reduction_scenario(1.0, 1.0, 1.0, 10).unwrap();
        let v = verify_reduction(&sc, 300).unwrap();
        assert!(v.passed(), "{:#?}", v.report);
        // first step of the second pair
        let p = sc.family.derived;
        let b = run_nag(&sc.r_s_prime, &[0.0], 1, 1.0).unwrap();
        assert!((b.x(1)[0] - (p.eps + p.eta * p.g)).abs() < 1e-12);
    }

    #[test]
    fn gap_checks() {
        let sc = build_reduction_scenario(1.0, 1.0, 1.0, 10).unwrap();
        assert!(uniform_gap(&sc, 3).unwrap().report.is_empty());
        let s = verify_uniform_gap(&sc, sc.floor_start() + 20).unwrap();
        assert!(s.report.all_passed(), "{:#?}", s.report);
        assert!(check_nag_uniform_upper(&sc, 1).unwrap().value <= 1.0);
        assert_eq!(identical_samples_gap(10).unwrap(), 0.0);
    }

    // Independent oracle: iterate the difference recurrences directly.
    #[test]
    fn linear_scenario_matches_recurrence() {
        for (n, t_max) in [(2usize, 30usize), (8, 30), (64, 30)] {
            let c = 2.0 / n as f64;
            let (mut dx, mut dm) = (0.0_f64, 0.0_f64);
            for t in 1..=t_max {
                let dy_prev = dx + dm;
                dx = dy_prev - c;
                dm = (t as f64 - 1.0) / (t as f64 + 2.0) * (dm - c);
                let out = quadratic_linear_lower(1.0, 1.0, n, t).unwrap();
                assert!((out.simulated - dx.abs()).abs() <= 1e-12 * dx.abs());
                assert!((out.exact - dx.abs()).abs() <= 1e-12 * dx.abs());
            }
        }
    }

    #[test]
    fn linear_scenario_small_cases() {
        let out = quadratic_linear_lower(1.0, 1.0, 8, 2).unwrap();
        assert_eq!(out.closed_form, 0.75);
        assert!((out.simulated - 0.5).abs() < 1e-15);
        let out = quadratic_linear_lower(1.0, 1.0, 10, 4).unwrap();
        assert!((out.closed_form - 1.8).abs() < 1e-15);
        let out = quadratic_linear_lower(1.0, 1.0, 8, 1).unwrap();
        assert!((out.simulated - 0.25).abs() < 1e-15);
    }

    #[test]
    fn random_quadratic_upper() {
        for seed in 0..5 {
            let v = random_quadratic_uniform_upper(seed, 10, 30, 1.0).unwrap();
            assert!(v.passed(), "{:#?}", v.report);
        }
    }
}
