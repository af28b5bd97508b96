//! Divergence between two runs started apart, and the bounds it obeys.
//!
//! Differences are always "run from `x0` minus run from `x0_tilde`", so two
//! runs from 0 and from eps start with `dy_0 = -eps`.

use nalgebra::{DMatrix, DVector};

use crate::check::{CheckOutcome, Report, Verdict, EQUALITY_TOL, INEQUALITY_SLACK};
use crate::error::{Error, Result};
use crate::hardfn::{ConstructionResult, HardFnParams};
use crate::nag::{gamma, run_gd, run_nag, run_projected_subgd, Trajectory};
use crate::objective::{MaxKink, Objective, Quadratic};
use crate::sampling;

/// Exponent constant of the lower curve, `ln 3 / 11`.
pub fn c1() -> f64 {
    3f64.ln() / 11.0
}

/// Prefactor of the lower curve, `(4/5) 3^-3 = 4/135`.
pub fn c2() -> f64 {
    4.0 / 135.0
}

/// Residual allowance for the difference recurrences, in units of the
/// magnitudes that enter each one.
pub const RECURRENCE_ROUNDING: f64 = 16.0 * f64::EPSILON;

/// The lower-bound curve `c2 e^{c1 eta beta t} eps` and the floor `G/(3 beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCurve {
    pub params: HardFnParams,
}

impl BoundCurve {
    pub fn lower(&self, t: usize) -> f64 {
        let p = self.params;
        c2() * (c1() * p.eta * p.beta * t as f64).exp() * p.eps
    }

    pub fn floor(&self) -> f64 {
        self.params.floor()
    }

    /// `min{G/(3 beta), c2 e^{c1 eta beta t} eps}`.
    pub fn bound(&self, t: usize) -> f64 {
        self.floor().min(self.lower(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dm: Vec<f64>,
    /// `grad f(y_t) - grad f(y~_t)`.
    pub dgrad: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Signed value in one dimension, Euclidean norm otherwise.
fn display_value(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        norm(v)
    }
}

impl StepRecord {
    pub fn abs_dx(&self) -> f64 {
        norm(&self.dx)
    }
    pub fn abs_dy(&self) -> f64 {
        norm(&self.dy)
    }
    pub fn abs_dm(&self) -> f64 {
        norm(&self.dm)
    }
    pub fn abs_dgrad(&self) -> f64 {
        norm(&self.dgrad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub eta: f64,
    pub steps: Vec<StepRecord>,
    /// Steps `n_j` at which the construction placed an interval.
    pub checkpoints: Vec<usize>,
    pub curve: Option<BoundCurve>,
    pub report: Report,
}

impl DivergenceReport {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn at(&self, t: usize) -> &StepRecord {
        &self.steps[t]
    }

    /// CSV with header `t,dx,dy,dm,dgrad,lower_bound,floor`. Differences are
    /// signed in one dimension and norms otherwise; the bound columns are
    /// empty when no construction is attached.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,dx,dy,dm,dgrad,lower_bound,floor\n");
        for s in &self.steps {
            let (lb, fl) = match self.curve {
                Some(c) => (format!("{:.16e}", c.lower(s.t)), format!("{:.16e}", c.floor())),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                s.t,
                display_value(&s.dx),
                display_value(&s.dy),
                display_value(&s.dm),
                display_value(&s.dgrad),
                lb,
                fl
            ));
        }
        out
    }

    /// Counts sign changes of `dx` between consecutive checkpoints, in one
    /// dimension. Returns `(changes, transitions)`.
    pub fn sign_alternation(&self) -> (usize, usize) {
        let signs: Vec<f64> = self
            .checkpoints
            .iter()
            .filter(|&&t| t < self.steps.len())
            .map(|&t| self.steps[t].dx[0].signum())
            .collect();
        let transitions = signs.len().saturating_sub(1);
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        (changes, transitions)
    }
}

fn sub(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

fn abs_sum(vs: &[&[f64]], i: usize) -> f64 {
    vs.iter().map(|v| v[i].abs()).sum()
}

/// Difference sequences of two recorded runs of the same objective, with the
/// recurrence checks `dx_t = dy_{t-1} - eta dgrad_{t-1}`, `dy_t = dx_t + dm_t`,
/// `dm_t = gamma_t (dm_{t-1} - eta dgrad_{t-1})`.
pub fn divergence_from_runs<F: Objective + ?Sized>(f: &F, a: &Trajectory, b: &Trajectory) -> DivergenceReport {
    let eta = a.eta;
    let steps_n = a.states.len().min(b.states.len());
    let mut steps = Vec::with_capacity(steps_n);
    let mut grads = Vec::with_capacity(steps_n);
    for t in 0..steps_n {
        let (sa, sb) = (&a.states[t], &b.states[t]);
        let ga = f.gradient(&sa.y);
        let gb = f.gradient(&sb.y);
        steps.push(StepRecord {
            t,
            dx: sub(&sa.x, &sb.x),
            dy: sub(&sa.y, &sb.y),
            dm: sub(&sa.m, &sb.m),
            dgrad: f.gradient_difference(&sa.y, &sb.y),
        });
        grads.push((ga, gb));
    }

    let mut worst = [0.0_f64; 3];
    for t in 1..steps_n {
        let (p, c) = (&steps[t - 1], &steps[t]);
        let (sa0, sb0, sa, sb) = (&a.states[t - 1], &b.states[t - 1], &a.states[t], &b.states[t]);
        let (ga, gb) = &grads[t - 1];
        let gm = gamma(t);
        for i in 0..c.dx.len() {
            let g_scale = eta * (ga[i].abs() + gb[i].abs());
            let rx = (c.dx[i] - (p.dy[i] - eta * p.dgrad[i])).abs();
            let sx = abs_sum(&[&sa.x, &sb.x, &sa0.y, &sb0.y], i) + g_scale;
            let ry = (c.dy[i] - (c.dx[i] + c.dm[i])).abs();
            let sy = abs_sum(&[&sa.y, &sb.y, &sa.x, &sb.x, &sa.m, &sb.m], i);
            let rm = (c.dm[i] - gm * (p.dm[i] - eta * p.dgrad[i])).abs();
            let sm = abs_sum(&[&sa.m, &sb.m, &sa0.m, &sb0.m], i) + g_scale;
            for (k, (r, s)) in [(rx, sx), (ry, sy), (rm, sm)].into_iter().enumerate() {
                let rel = if r == 0.0 { 0.0 } else if s == 0.0 { f64::INFINITY } else { r / s };
                worst[k] = worst[k].max(rel);
            }
        }
    }
    let mut report = Report::new();
    for (k, name) in ["recurrence/dx", "recurrence/dy", "recurrence/dm"].iter().enumerate() {
        report.within(*name, worst[k], RECURRENCE_ROUNDING);
    }
    DivergenceReport {
        eta,
        steps,
        checkpoints: Vec::new(),
        curve: None,
        report,
    }
}

/// Runs NAG from both starts for `steps` steps and records the differences.
pub fn divergence_series<F: Objective + ?Sized>(
    f: &F,
    x0: &[f64],
    x0_tilde: &[f64],
    steps: usize,
    eta: f64,
) -> Result<DivergenceReport> {
    let a = run_nag(f, x0, steps, eta)?;
    let b = run_nag(f, x0_tilde, steps, eta)?;
    Ok(divergence_from_runs(f, &a, &b))
}

fn construction_runs<F: Objective + ?Sized>(
    f: &F,
    cr: &ConstructionResult,
    horizon: usize,
) -> Result<(Trajectory, Trajectory)> {
    let p = cr.params;
    Ok((run_nag(f, &[0.0], horizon, p.eta)?, run_nag(f, &[p.eps], horizon, p.eta)?))
}

/// The horizon used by the evolution checks: at least `n_{M+1} + 5 n_1`.
pub fn evolution_horizon(cr: &ConstructionResult, horizon: usize) -> usize {
    horizon.max(cr.n(cr.m + 1) + 5 * cr.n(1))
}

/// Checks the momentum balance, the per-phase growth, persistence past
/// `n_{M+1}` and the gradient-difference dichotomy on `f_M`.
pub fn verify_evolution(cr: &ConstructionResult, horizon: usize) -> Result<DivergenceReport> {
    let p = cr.params;
    let h = evolution_horizon(cr, horizon);
    let (a, b) = construction_runs(&cr.f_m, cr, h)?;
    let mut dr = divergence_from_runs(&cr.f_m, &a, &b);
    dr.checkpoints = cr.checkpoints.clone();
    dr.curve = Some(BoundCurve { params: p });
    let eb = p.eta * p.beta;
    let dy = |t: usize| dr.steps[t].abs_dy();
    let mut r = Report::new();

    for j in 1..=cr.m {
        let (nj, nj1) = (cr.n(j), cr.n(j + 1));
        let dm = dr.steps[nj + 1].abs_dm();
        r.at_least(format!("evolution/momentum_lower/phase{j}"), dm, 2.0 / 3.0 * eb * dy(nj), INEQUALITY_SLACK);
        r.at_most(format!("evolution/momentum_upper/phase{j}"), dm, eb / 5.0 * dy(nj1), INEQUALITY_SLACK);
        r.at_least(
            format!("evolution/growth_3j/phase{j}"),
            dy(nj1),
            3f64.powi(j as i32) * p.eps,
            INEQUALITY_SLACK,
        );
        r.at_least(format!("evolution/growth_ratio/phase{j}"), dy(nj1), 10.0 / 3.0 * dy(nj), INEQUALITY_SLACK);
        r.within(
            format!("evolution/interval_width/phase{j}"),
            (dy(nj) - cr.phase_intervals[j - 1].width()).abs(),
            EQUALITY_TOL * dy(nj),
        );
    }

    let last = cr.n(cr.m + 1);
    let after = (last + 1..=h).map(dy).fold(f64::INFINITY, f64::min);
    r.at_least("evolution/persistence", after, dy(last), INEQUALITY_SLACK);
    let window = (last + 1..=last + 5 * cr.n(1)).map(dy).fold(f64::INFINITY, f64::min);
    r.at_least("evolution/floor_persistence", window, p.floor() * (1.0 - 1e-9), 0.0);
    r.at_least("evolution/final_width_floor", dy(last), p.floor(), INEQUALITY_SLACK);
    r.push(CheckOutcome::new("evolution/m_at_least_one", cr.m >= 1, cr.m as f64, 1.0));
    r.at_most("evolution/m_bound", cr.m as f64, p.m_bound(), 0.0);

    // dgrad = beta dy at n_1..n_M, zero elsewhere
    let mut worst_on = 0.0_f64;
    let mut worst_off = 0.0_f64;
    let mut worst_t = 0;
    for s in &dr.steps {
        let scale = 1e-12 * p.beta * s.abs_dy();
        let on = cr.checkpoints[..cr.m].contains(&s.t);
        let dev = if on {
            (s.dgrad[0] - p.beta * s.dy[0]).abs()
        } else {
            s.dgrad[0].abs()
        };
        let excess = if dev <= scale { 0.0 } else { dev };
        if excess > 0.0 && excess > worst_on.max(worst_off) {
            worst_t = s.t;
        }
        if on {
            worst_on = worst_on.max(excess);
        } else {
            worst_off = worst_off.max(excess);
        }
    }
    r.push(
        CheckOutcome::new("evolution/grad_dichotomy_at_checkpoints", worst_on == 0.0, worst_on, 0.0)
            .with_detail(format!("worst step {worst_t}")),
    );
    r.push(
        CheckOutcome::new("evolution/grad_dichotomy_elsewhere", worst_off == 0.0, worst_off, 0.0)
            .with_detail(format!("worst step {worst_t}")),
    );
    dr.report.extend(r);
    Ok(dr)
}

/// `ceil(10/(eta beta)) (ln(3G/(2 beta eps)) + 3)` as a step index: the
/// floor clause applies to every `t` strictly above it.
pub fn floor_start(p: &HardFnParams) -> usize {
    p.floor_horizon().floor() as usize + 1
}

/// Default horizon for the lower-bound check: past the floor clause start
/// and past `n_{M+1} + 5 n_1`.
pub fn default_horizon(cr: &ConstructionResult) -> usize {
    (floor_start(&cr.params) + cr.n(1)).max(cr.n(cr.m + 1) + 5 * cr.n(1))
}

/// On `f_M^+`: `|dx_t| >= min{G/(3 beta), c2 e^{c1 eta beta t} eps}` at every
/// checkpoint `n_i <= horizon`, `|dx_t| >= G/(3 beta)` past the floor
/// horizon, and the differences coincide with those on `f_M`.
pub fn verify_lower_bound(cr: &ConstructionResult, horizon: usize) -> Result<DivergenceReport> {
    let p = cr.params;
    let h = horizon.max(cr.n(cr.m + 1));
    let (a, b) = construction_runs(&cr.f_m_plus, cr, h)?;
    let mut dr = divergence_from_runs(&cr.f_m_plus, &a, &b);
    let curve = BoundCurve { params: p };
    dr.curve = Some(curve);
    let mut checkpoints = Vec::new();
    let mut r = Report::new();
    let mut i = 1;
    while p.checkpoint(i) <= h {
        let t = p.checkpoint(i);
        checkpoints.push(t);
        r.at_least(format!("lower_bound/checkpoint/n{i}"), dr.steps[t].abs_dx(), curve.bound(t), 0.0);
        i += 1;
    }
    dr.checkpoints = checkpoints;

    let start = floor_start(&p);
    if start <= h {
        let (t_min, v_min) = (start..=h)
            .map(|t| (t, dr.steps[t].abs_dx()))
            .fold((start, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        r.push(
            CheckOutcome::new("lower_bound/floor", v_min >= curve.floor(), v_min, curve.floor())
                .with_detail(format!("minimum at t = {t_min}, clause starts at t = {start}")),
        );
    }

    let (ah, bh) = construction_runs(&cr.f_m, cr, h)?;
    let mut worst = 0.0_f64;
    let mut worst_t = 0;
    for t in 0..=h {
        for (u, v) in [
            (a.x(t)[0] - b.x(t)[0], ah.x(t)[0] - bh.x(t)[0]),
            (a.y(t)[0] - b.y(t)[0], ah.y(t)[0] - bh.y(t)[0]),
        ] {
            let rel = (u - v).abs() / v.abs().max(f64::MIN_POSITIVE);
            if rel > worst {
                worst = rel;
                worst_t = t;
            }
        }
    }
    r.push(
        CheckOutcome::new("lower_bound/plateau_difference_equality", worst <= EQUALITY_TOL, worst, EQUALITY_TOL)
            .with_detail(format!("worst step {worst_t}")),
    );

    let mut flat_worst = 0.0_f64;
    for t in cr.n(cr.m) + 1..=h {
        flat_worst = flat_worst
            .max(cr.f_m_plus.grad(a.y(t)[0]).abs())
            .max(cr.f_m_plus.grad(b.y(t)[0]).abs());
    }
    r.within("lower_bound/post_plateau_flat", flat_worst, 0.0);
    let g0 = cr.f_m_plus.grad(0.0);
    let ge = cr.f_m_plus.grad(p.eps);
    r.within("lower_bound/start_gradients", (g0 + p.g).abs().max((ge + p.g).abs()), 0.0);
    dr.report.extend(r);
    Ok(dr)
}

/// `|dx_t| <= eps + eta beta eps 3^{t-1}` for `1 <= t <= T`, for NAG started
/// at `x0` and `x0_tilde` with `|x0 - x0_tilde| <= eps`.
pub fn check_nag_convex_upper_on<F: Objective + ?Sized>(
    f: &F,
    x0: &[f64],
    x0_tilde: &[f64],
    steps: usize,
    eta: f64,
) -> Result<Verdict<f64>> {
    let beta = f
        .smoothness()
        .ok_or_else(|| Error::domain("the convex upper bound needs a smooth objective"))?;
    let eps = norm(&sub(x0, x0_tilde));
    let dr = divergence_series(f, x0, x0_tilde, steps, eta)?;
    let mut worst = 0.0_f64;
    let mut worst_t = 0;
    for t in 1..=steps {
        let bound = eps + eta * beta * eps * 3f64.powi(t as i32 - 1);
        let ratio = dr.steps[t].abs_dx() / bound;
        if ratio > worst {
            worst = ratio;
            worst_t = t;
        }
    }
    let mut report = Report::new();
    report.push(
        CheckOutcome::new("nag_convex_upper", worst <= 1.0 + 1e-9, worst, 1.0)
            .with_detail(format!("worst ratio at t = {worst_t}")),
    );
    Ok(Verdict::new(worst, report))
}

/// The convex upper bound on the construction's `f_M^+`, started at 0 and eps.
pub fn check_nag_convex_upper(cr: &ConstructionResult, steps: usize) -> Result<Verdict<f64>> {
    if steps == 0 {
        return Err(Error::domain("the convex upper bound needs T >= 1"));
    }
    check_nag_convex_upper_on(&cr.f_m_plus, &[0.0], &[cr.params.eps], steps, cr.params.eta)
}

/// GD on a convex smooth objective is non-expansive: the divergence never
/// exceeds its initial value. One witness direction is `e_1`, the rest are
/// sampled on the eps-sphere. Returns the largest `max_t |dx_t|` seen.
pub fn check_gd_smooth_upper<F: Objective + ?Sized>(
    f: &F,
    x0: &[f64],
    eps: f64,
    steps: usize,
    eta: f64,
    directions: usize,
    seed: u64,
) -> Result<Verdict<f64>> {
    if let Some(beta) = f.smoothness() {
        if eta * beta > 2.0 * (1.0 + 1e-12) {
            return Err(Error::domain(format!("need eta <= 2/beta, got eta * beta = {}", eta * beta)));
        }
    }
    let d = x0.len();
    let mut rng = sampling::rng(seed);
    let base = run_gd(f, x0, steps, eta)?;
    let mut worst = 0.0_f64;
    let mut worst_dir = Vec::new();
    for k in 0..directions.max(1) {
        let u = if k == 0 {
            let mut e = vec![0.0; d];
            e[0] = eps;
            e
        } else {
            sampling::sphere_point(&mut rng, d, eps)
        };
        let start: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| a + b).collect();
        let other = run_gd(f, &start, steps, eta)?;
        for t in 0..=steps {
            let dx = norm(&sub(base.x(t), other.x(t)));
            if dx > worst {
                worst = dx;
                worst_dir = u.clone();
            }
        }
    }
    let mut report = Report::new();
    report.push(
        CheckOutcome::new("gd_smooth_upper", worst <= eps * (1.0 + 1e-12), worst, eps)
            .with_detail(format!("direction {worst_dir:?}")),
    );
    Ok(Verdict::new(worst, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonsmoothConfig {
    pub eps: f64,
    pub g: f64,
    pub eta: f64,
    pub steps: usize,
    pub d: usize,
    pub radius: f64,
}

impl Default for NonsmoothConfig {
    fn default() -> Self {
        NonsmoothConfig {
            eps: 1e-3,
            g: 1.0,
            eta: 0.1,
            steps: 16,
            d: 16,
            radius: 1.0,
        }
    }
}

impl NonsmoothConfig {
    /// Kink offset `c = eps / (2 sqrt d)`.
    pub fn kink(&self) -> f64 {
        self.eps / (2.0 * (self.d as f64).sqrt())
    }

    pub fn objective(&self) -> MaxKink {
        MaxKink::new(self.g, self.kink(), self.d)
    }

    /// `eps + 2 G eta sqrt(t)`.
    pub fn upper(&self, t: usize) -> f64 {
        self.eps + 2.0 * self.g * self.eta * (t as f64).sqrt()
    }

    /// `0.5 G eta sqrt(t)`.
    pub fn lower(&self, t: usize) -> f64 {
        0.5 * self.g * self.eta * (t as f64).sqrt()
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("G", self.g), ("eta", self.eta), ("radius", self.radius)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.d == 0 {
            return Err(Error::domain("dimension must be positive"));
        }
        if self.eps > self.radius {
            return Err(Error::domain("the perturbed start must lie inside the ball"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonsmoothOutcome {
    pub upper_ok: bool,
    /// `|x_t - x~_t|` for `t = 0..=T`.
    pub lower_witness: Vec<f64>,
    pub report: Report,
}

fn nonsmooth_upper(
    cfg: &NonsmoothConfig,
    f: &MaxKink,
    x0: &[f64],
    x0_tilde: &[f64],
    label: &str,
    report: &mut Report,
) -> Result<Vec<f64>> {
    let a = run_projected_subgd(f, x0, cfg.steps, cfg.eta, cfg.radius)?;
    let b = run_projected_subgd(f, x0_tilde, cfg.steps, cfg.eta, cfg.radius)?;
    let delta0 = norm(&sub(x0, x0_tilde));
    let mut div = Vec::with_capacity(cfg.steps + 1);
    let mut worst = 0.0_f64;
    for t in 0..=cfg.steps {
        let dx = norm(&sub(a.trajectory.x(t), b.trajectory.x(t)));
        let davg = norm(&sub(&a.averages[t], &b.averages[t]));
        let bound = delta0.max(cfg.eps) + 2.0 * cfg.g * cfg.eta * (t as f64).sqrt();
        worst = worst.max(dx / bound).max(davg / bound);
        div.push(dx);
    }
    report.push(CheckOutcome::new(
        format!("gd_nonsmooth_upper{label}"),
        worst <= 1.0 + INEQUALITY_SLACK,
        worst,
        1.0,
    ));
    Ok(div)
}

/// The max-of-coordinates construction from 0 and `(eps/sqrt d) 1`: the
/// divergence stays below `eps + 2 G eta sqrt(t)` (final and averaged
/// iterates) and, for `t <= d`, above `0.5 G eta sqrt(t)`.
pub fn check_gd_nonsmooth(cfg: &NonsmoothConfig) -> Result<NonsmoothOutcome> {
    cfg.validate()?;
    let f = cfg.objective();
    let d = cfg.d;
    let x0 = vec![0.0; d];
    let xt = vec![cfg.eps / (d as f64).sqrt(); d];
    let mut report = Report::new();
    let witness = nonsmooth_upper(cfg, &f, &x0, &xt, "", &mut report)?;
    let upper_ok = report.all_passed();

    let b = run_projected_subgd(&f, &xt, cfg.steps, cfg.eta, cfg.radius)?;
    let mut schedule_ok = true;
    let mut broken_at = 0;
    for t in 1..=cfg.steps.min(d) {
        let step = sub(b.trajectory.x(t - 1), b.trajectory.x(t));
        let want = cfg.g * cfg.eta;
        let ok = step
            .iter()
            .enumerate()
            .all(|(i, s)| if i == t - 1 { (s - want).abs() <= 1e-12 * want } else { s.abs() <= 1e-15 });
        if !ok && schedule_ok {
            schedule_ok = false;
            broken_at = t;
        }
    }
    report.push(
        CheckOutcome::new("gd_nonsmooth_schedule", schedule_ok, broken_at as f64, 0.0)
            .with_detail("step t must subtract G eta e_t"),
    );
    let mut worst = f64::INFINITY;
    for t in 1..=cfg.steps.min(d) {
        worst = worst.min(witness[t] / cfg.lower(t));
    }
    if cfg.steps >= 1 {
        report.at_least("gd_nonsmooth_lower", worst, 1.0, INEQUALITY_SLACK);
    }
    Ok(NonsmoothOutcome {
        upper_ok,
        lower_witness: witness,
        report,
    })
}

/// Upper bound on the same objective from random starts in the ball and
/// random eps-perturbations, one pair per seed.
pub fn check_gd_nonsmooth_sweep(cfg: &NonsmoothConfig, seeds: &[u64]) -> Result<Report> {
    cfg.validate()?;
    let f = cfg.objective();
    let mut report = Report::new();
    for &seed in seeds {
        let mut rng = sampling::rng(seed);
        let r0: f64 = rand::Rng::random_range(&mut rng, 0.0..0.5 * cfg.radius);
        let x0 = sampling::sphere_point(&mut rng, cfg.d, r0);
        let u = sampling::sphere_point(&mut rng, cfg.d, cfg.eps);
        let xt: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| a + b).collect();
        nonsmooth_upper(cfg, &f, &x0, &xt, &format!("/seed{seed}"), &mut report)?;
    }
    Ok(report)
}

/// `|dx_t| <= 4 t eps` for NAG on `x'Hx/2 + b'x`, `1 <= t <= T`, over sampled
/// perturbations of norm eps. Returns the largest `|dx_t| / (4 t eps)`.
#[allow(clippy::too_many_arguments)]
pub fn check_nag_quadratic_upper(
    h: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: &[f64],
    eps: f64,
    steps: usize,
    eta: f64,
    directions: usize,
    seed: u64,
) -> Result<Verdict<f64>> {
    let q = Quadratic::new(h.clone(), b.clone())?;
    let ev = q.eigenvalues();
    let scale = ev.iter().fold(0.0_f64, |m, l| m.max(l.abs())).max(1.0);
    if ev.first().copied().unwrap_or(0.0) < -1e-12 * scale {
        return Err(Error::domain(format!("Hessian is not PSD: eigenvalues {ev:?}")));
    }
    if eta * q.smoothness().unwrap() > 1.0 + 1e-12 {
        return Err(Error::domain(format!("need eta <= 1/|H|, eigenvalues {ev:?}, eta = {eta}")));
    }
    let d = x0.len();
    let mut rng = sampling::rng(seed);
    let base = run_nag(&q, x0, steps, eta)?;
    let mut worst = 0.0_f64;
    for _ in 0..directions.max(1) {
        let u = sampling::sphere_point(&mut rng, d, eps);
        let start: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| a + b).collect();
        let other = run_nag(&q, &start, steps, eta)?;
        for t in 1..=steps {
            let ratio = norm(&sub(base.x(t), other.x(t))) / (4.0 * t as f64 * eps);
            worst = worst.max(ratio);
        }
    }
    let mut report = Report::new();
    report.push(
        CheckOutcome::new("nag_quadratic_upper", worst <= 1.0 + INEQUALITY_SLACK, worst, 1.0)
            .with_detail(format!("eigenvalues {ev:?}")),
    );
    Ok(Verdict::new(worst, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardfn::build_hard_function;
    use crate::objective::{Linear, Zero};

    #[test]
    fn constants() {
        assert!((c2() - 0.8 / 27.0).abs() < 1e-17);
        assert!((c1() - 0.099_873_8).abs() < 1e-6);
    }

    #[test]
    fn zero_objective_keeps_offset() {
        let dr = divergence_series(&Zero::new(1), &[0.5], &[0.25], 20, 0.7).unwrap();
        assert!(dr.steps.iter().all(|s| s.dx == [0.25] && s.dy == [0.25] && s.dm == [0.0]));
        assert!(dr.report.all_passed());
    }

    #[test]
    fn linear_objective_offset_is_minus_eps() {
        let eps = 1.0 / 64.0;
        let dr = divergence_series(&Linear::scalar(-1.0), &[0.0], &[eps], 50, 0.5).unwrap();
        for s in &dr.steps {
            assert!((s.dx[0] + eps).abs() < 1e-13 && (s.dy[0] + eps).abs() < 1e-13);
            assert!(s.dm[0].abs() < 1e-13);
        }
        assert!(dr.report.all_passed(), "{:?}", dr.report);
    }

    #[test]
    fn quadratic_cancels_in_one_step() {
        let beta = 2.0;
        let dr = divergence_series(&Quadratic::scalar(beta), &[0.0], &[0.1], 3, 1.0 / beta).unwrap();
        assert_eq!(dr.steps[1].dx[0], 0.0);
    }

    #[test]
    fn csv_layout() {
        let dr = divergence_series(&Zero::new(1), &[0.0], &[1.0], 2, 1.0).unwrap();
        let csv = dr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,dx,dy,dm,dgrad,lower_bound,floor");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,-1.0000000000000000e0,-1.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,,");
    }

    #[test]
    fn evolution_on_small_construction() {
        let cr = build_hard_function(HardFnParams::new(1.0, 1.0, 1.0, 1e-4).unwrap()).unwrap();
        let dr = verify_evolution(&cr, 0).unwrap();
        let failures: Vec<_> = dr.report.failures().collect();
        assert!(failures.is_empty(), "{failures:#?}");
        if cr.m >= 3 {
            // |dy_{n_4}| >= 27 eps
            assert!(dr.steps[cr.n(4)].abs_dy() >= 2.7e-3 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn lower_bound_on_small_construction() {
        let cr = build_hard_function(HardFnParams::new(1.0, 1.0, 0.5, 1e-5).unwrap()).unwrap();
        let dr = verify_lower_bound(&cr, default_horizon(&cr)).unwrap();
        let failures: Vec<_> = dr.report.failures().collect();
        assert!(failures.is_empty(), "{failures:#?}");
        // no checkpoint below n_1
        let short = verify_lower_bound(&cr, cr.n(1) - 1).unwrap();
        assert!(!short.checkpoints.is_empty());
        assert!(short.report.checks.iter().all(|c| !c.name.ends_with("/n0")));
    }

    #[test]
    fn convex_upper_examples() {
        let v = check_nag_convex_upper_on(&Zero::new(1), &[0.0], &[0.3], 10, 1.0).unwrap();
        assert!(v.passed());
        let cr = build_hard_function(HardFnParams::new(1.0, 1.0, 1.0, 1e-2).unwrap()).unwrap();
        assert!(check_nag_convex_upper(&cr, 1).unwrap().passed());
        assert!(check_nag_convex_upper(&cr, cr.n(cr.m)).unwrap().passed());
        assert!(check_nag_convex_upper(&cr, 0).is_err());
    }

    #[test]
    fn gd_smooth_examples() {
        let v = check_gd_smooth_upper(&Zero::new(3), &[0.0; 3], 0.5, 10, 1.0, 4, 1).unwrap();
        assert_eq!(v.value, 0.5);
        let beta = 3.0;
        let q = Quadratic::scalar(beta);
        let v = check_gd_smooth_upper(&q, &[1.0], 0.5, 5, 1.0 / beta, 1, 1).unwrap();
        assert!(v.passed());
        let a = run_gd(&q, &[1.0], 1, 1.0 / beta).unwrap();
        let b = run_gd(&q, &[1.5], 1, 1.0 / beta).unwrap();
        assert_eq!(a.x(1)[0] - b.x(1)[0], 0.0);
        assert!(check_gd_smooth_upper(&q, &[1.0], 0.5, 5, 1.0, 1, 1).is_err());
    }

    #[test]
    fn gd_nonsmooth_hand_schedule() {
        let cfg = NonsmoothConfig {
            d: 4,
            steps: 4,
            ..NonsmoothConfig::default()
        };
        let out = check_gd_nonsmooth(&cfg).unwrap();
        assert!(out.report.all_passed(), "{:#?}", out.report);
        assert!((out.lower_witness[4] - 0.199).abs() < 1e-12);
        assert!(out.lower_witness[4] >= 0.5 * 0.1 * 2.0);
        let zero = check_gd_nonsmooth(&NonsmoothConfig { steps: 0, ..cfg }).unwrap();
        assert!((zero.lower_witness[0] - cfg.eps).abs() <= 1e-18);
    }

    #[test]
    fn nag_quadratic_examples() {
        let h = DMatrix::zeros(2, 2);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let v = check_nag_quadratic_upper(&h, &b, &[0.0, 0.0], 1e-2, 20, 1.0, 3, 2).unwrap();
        assert!(v.passed());
        assert!((v.value - 0.25).abs() < 1e-12);
        let h = DMatrix::identity(3, 3) * 2.0;
        let v = check_nag_quadratic_upper(&h, &DVector::zeros(3), &[1.0, 0.0, -1.0], 1e-3, 100, 0.5, 5, 3).unwrap();
        assert!(v.passed());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(check_nag_quadratic_upper(&bad, &DVector::zeros(2), &[0.0, 0.0], 1e-3, 5, 0.5, 1, 1).is_err());
    }
}
