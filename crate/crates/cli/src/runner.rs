use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use nagstab_core::check::Report;
use nagstab_core::hardfn::{build_hard_function, check_consistency, format, ConstructionResult, HardFnParams};
use nagstab_core::objective::{Linear, Objective, Quadratic, Zero};
use nagstab_core::stability::{self, BoundCurve, NonsmoothConfig};
use nagstab_core::variants::{check_variant_equivalence, VariantConfig, VariantKind};
use nagstab_core::{quadmat, sampling, uniform, Error};
use rand::Rng;

use crate::config::{
    Command, ConstructArgs, DivergeArgs, Figure2Args, QuadnormArgs, Schema, UniformArgs, VariantsArgs, VerifyArgs,
};

pub const PRESETS: [f64; 2] = [0.5, 0.1];

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub command: &'static str,
    pub config: Vec<(String, String)>,
    pub summary: Vec<String>,
    pub csv_path: Option<PathBuf>,
    pub report: Report,
    pub duration: Duration,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.report.all_passed()
    }

    /// Summary lines start with `# `; the rest is `check_name,status,observed,required`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# nagstab {}", self.command);
        let cfg: Vec<String> = self.config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "# config: {}", cfg.join(" "));
        for s in &self.summary {
            let _ = writeln!(out, "# {s}");
        }
        if let Some(p) = &self.csv_path {
            let _ = writeln!(out, "# csv: {}", p.display());
        }
        let failed = self.report.failures().count();
        let _ = writeln!(
            out,
            "# result: {} ({} checks, {failed} failed)",
            if failed == 0 { "PASS" } else { "FAIL" },
            self.report.len()
        );
        for c in self.report.failures().filter(|c| !c.detail.is_empty()) {
            let _ = writeln!(out, "# failed {}: {}", c.name, c.detail);
        }
        let _ = writeln!(out, "# duration: {:.3}s", self.duration.as_secs_f64());
        let _ = writeln!(out, "check_name,status,observed,required");
        for c in &self.report.checks {
            let _ = writeln!(out, "{}", c.csv_line());
        }
        out
    }
}

pub type RunResult = Result<RunRecord, Error>;

struct Builder {
    record: RunRecord,
    start: Instant,
}

impl Builder {
    fn new<S: Schema>(command: &'static str, args: &S, defaults: &[(&str, String)]) -> Self {
        let mut config = args.echo();
        for (k, v) in defaults {
            if !config.iter().any(|(ck, _)| ck == k) {
                config.push((k.to_string(), v.clone()));
            }
        }
        let order = |k: &str| S::KEYS.iter().position(|x| *x == k).unwrap_or(usize::MAX);
        config.sort_by_key(|(k, _)| order(k));
        Builder {
            record: RunRecord {
                command,
                config,
                summary: Vec::new(),
                csv_path: None,
                report: Report::new(),
                duration: Duration::ZERO,
            },
            start: Instant::now(),
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.record.summary.push(s.into());
    }

    fn finish(mut self) -> RunRecord {
        self.record.duration = self.start.elapsed();
        self.record
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn params(g: Option<f64>, beta: Option<f64>, eta: Option<f64>, eps: Option<f64>) -> Result<HardFnParams, Error> {
    HardFnParams::new(g.unwrap_or(1.0), beta.unwrap_or(1.0), eta.unwrap_or(0.5), eps.unwrap_or(1e-6))
}

fn param_defaults(p: &HardFnParams) -> Vec<(&'static str, String)> {
    vec![
        ("G", format!("{:?}", p.g)),
        ("beta", format!("{:?}", p.beta)),
        ("eta", format!("{:?}", p.eta)),
        ("eps", format!("{:?}", p.eps)),
    ]
}

pub fn run(cmd: &Command) -> RunResult {
    match cmd {
        Command::Construct(a) => run_construct(a),
        Command::Diverge(a) => run_diverge(a),
        Command::Verify(a) => run_verify_all(a),
        Command::Uniform(a) => run_uniform(a),
        Command::Quadnorm(a) => run_quadnorm(a),
        Command::Variants(a) => run_variants(a),
        Command::Figure2(a) => run_figure2(a),
    }
}

fn describe(b: &mut Builder, cr: &ConstructionResult) {
    b.note(format!("M = {}, checkpoints n_1..n_(M+1) = {:?}", cr.m, cr.checkpoints));
    b.note(format!("minimizer of f_M^+ = {:e}", cr.minimizer));
}

pub fn run_construct(a: &ConstructArgs) -> RunResult {
    let p = params(a.g, a.beta, a.eta, a.eps)?;
    let mut b = Builder::new("construct", a, &param_defaults(&p));
    let cr = build_hard_function(p)?;
    describe(&mut b, &cr);
    b.record.report.extend(check_consistency(&cr)?);
    if let Some(out) = &a.out {
        write_file(out, &format::to_text(&cr))?;
        b.note(format!("construction written to {}", out.display()));
    }
    Ok(b.finish())
}

pub fn run_diverge(a: &DivergeArgs) -> RunResult {
    let p = params(a.g, a.beta, a.eta, a.eps)?;
    let cr = build_hard_function(p)?;
    let horizon = a.t.unwrap_or_else(|| stability::default_horizon(&cr));
    let mut defaults = param_defaults(&p);
    defaults.push(("T", horizon.to_string()));
    let mut b = Builder::new("diverge", a, &defaults);
    describe(&mut b, &cr);
    let evo = stability::verify_evolution(&cr, horizon)?;
    let (changes, transitions) = evo.sign_alternation();
    b.note(format!("sign changes between phase checkpoints: {changes} of {transitions}"));
    b.record.report.extend(evo.report);
    let lb = stability::verify_lower_bound(&cr, horizon)?;
    if let Some(out) = &a.out {
        write_file(out, &lb.to_csv())?;
        b.record.csv_path = Some(out.clone());
    }
    b.record.report.extend(lb.report);
    Ok(b.finish())
}

/// `t,dx,log10_abs_dx,lower_bound,floor,checkpoint` for `t = 0..=T`.
pub fn figure2_csv(cr: &ConstructionResult, horizon: usize) -> Result<(String, Report), Error> {
    let mut out = String::from("t,dx,log10_abs_dx,lower_bound,floor,checkpoint\n");
    if horizon == 0 {
        return Ok((out, Report::new()));
    }
    let dr = stability::verify_lower_bound(cr, horizon)?;
    let curve = BoundCurve { params: cr.params };
    for s in dr.steps.iter().take(horizon + 1) {
        let dx = s.dx[0];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.t,
            num(dx),
            num(dx.abs().log10()),
            num(curve.lower(s.t)),
            num(curve.floor()),
            u8::from(dr.checkpoints.contains(&s.t))
        );
    }
    Ok((out, dr.report))
}

pub fn run_figure2(a: &Figure2Args) -> RunResult {
    let preset_eta = a.preset.as_deref().map(|s| s.parse::<f64>().expect("validated preset"));
    let beta = a.beta.unwrap_or(1.0);
    let eta = a.eta.or(preset_eta.map(|eb| eb / beta));
    let p = params(a.g, Some(beta), eta, a.eps)?;
    let cr = build_hard_function(p)?;
    let horizon = a.t.unwrap_or_else(|| stability::default_horizon(&cr));
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("figure2_etabeta{}.csv", p.eta * p.beta)));
    let mut defaults = param_defaults(&p);
    defaults.push(("T", horizon.to_string()));
    defaults.push(("out", out.display().to_string()));
    let mut b = Builder::new("figure2", a, &defaults);
    describe(&mut b, &cr);
    b.note("lower_bound column is c2 exp(c1 eta beta t) eps; floor is G/(3 beta)");
    let (csv, report) = figure2_csv(&cr, horizon)?;
    write_file(&out, &csv)?;
    b.record.csv_path = Some(out);
    b.record.report.extend(report);
    Ok(b.finish())
}

pub fn run_uniform(a: &UniformArgs) -> RunResult {
    let (g, beta, eta, n) = (a.g.unwrap_or(1.0), a.beta.unwrap_or(1.0), a.eta.unwrap_or(1.0), a.n.unwrap_or(10));
    let sc = uniform::build_reduction_scenario(g, beta, eta, n)?;
    let horizon = a.t.unwrap_or_else(|| sc.floor_start());
    let defaults = vec![
        ("G", format!("{g:?}")),
        ("beta", format!("{beta:?}")),
        ("eta", format!("{eta:?}")),
        ("n", n.to_string()),
        ("T", horizon.to_string()),
    ];
    let mut b = Builder::new("uniform", a, &defaults);
    let d = sc.family.derived;
    b.note(format!(
        "derived G = {:e}, beta = {:e}, eta = {:e}, eps = {:e}, M = {}",
        d.g, d.beta, d.eta, d.eps, sc.construction.m
    ));
    b.note(format!("constant floor applies from T = {}", sc.floor_start()));
    if horizon == 0 {
        b.note("empty horizon: nothing to check");
        return Ok(b.finish());
    }
    b.record.report.extend(uniform::verify_reduction(&sc, horizon)?.report);
    let series = uniform::verify_uniform_gap(&sc, horizon)?;
    b.record.report.extend(series.report);
    b.record.report.extend(uniform::check_nag_uniform_upper(&sc, horizon)?.report);
    if let Some(out) = &a.out {
        let cps = sc.checkpoints(horizon);
        let mut csv = String::from("t,gap,lower_bound,upper_bound,checkpoint\n");
        for (t, gap) in series.gaps.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{t},{},{},{},{}",
                num(*gap),
                num(sc.lower_bound(t)),
                num(sc.upper_bound(t)),
                u8::from(cps.contains(&t))
            );
        }
        write_file(out, &csv)?;
        b.record.csv_path = Some(out.clone());
    }
    if let Some(path) = &a.export {
        write_file(path, &sc.to_text())?;
        b.note(format!("scenario written to {}", path.display()));
    }
    Ok(b.finish())
}

pub fn run_quadnorm(a: &QuadnormArgs) -> RunResult {
    let (trials, t_max, seed) = (a.trials.unwrap_or(1000), a.t.unwrap_or(1000), a.seed.unwrap_or(0));
    let defaults = vec![
        ("trials", trials.to_string()),
        ("T", t_max.to_string()),
        ("seed", seed.to_string()),
    ];
    let mut b = Builder::new("quadnorm", a, &defaults);
    let sweep = quadmat::check_bound_2t1(trials, t_max, seed)?;
    b.note(format!("largest norm / (2(t+1)) = {:.6}", sweep.max_ratio));
    b.record.report.extend(sweep.report);
    for t in (3..=60).step_by(3) {
        b.record.report.extend(quadmat::counterexample_norm(t)?.report);
    }
    let growth = quadmat::canonical_norm_growth(t_max.max(1))?;
    b.note(format!(
        "canonical schedule with A = 1: norm {:.4} at t = 1, {:.4} at t = {}",
        growth[0],
        growth[growth.len() - 1],
        growth.len()
    ));
    if let Some(out) = &a.out {
        let csv = sweep.failing_schedule.unwrap_or_else(|| "k,gamma_k,a_k\n".to_string());
        write_file(out, &csv)?;
        b.record.csv_path = Some(out.clone());
    }
    Ok(b.finish())
}

fn random_quadratic(rng: &mut sampling::SeededRng, d: usize, beta: f64) -> Result<Quadratic, Error> {
    let (h, _) = sampling::random_psd(rng, d, beta);
    Quadratic::new(h, DVector::from_vec(sampling::gaussian_vector(rng, d)))
}

fn variant_report(kinds: &[VariantKind], beta: f64, steps: usize, trials: usize, seed: u64) -> Result<Report, Error> {
    let mut report = Report::new();
    let mut rng = sampling::rng(seed);
    for k in 0..trials {
        let d = rng.random_range(1..=3);
        let q = random_quadratic(&mut rng, d, beta)?;
        let x0 = sampling::gaussian_vector(&mut rng, d);
        for &kind in kinds {
            let dev = check_variant_equivalence(&VariantConfig::new(kind, beta), &q, &x0, steps)?;
            report.within(format!("variants/{}/quadratic{k}", kind.as_str()), dev, 1e-9);
        }
    }
    let f0 = Linear::scalar(-1.0);
    for &kind in kinds {
        let dev = check_variant_equivalence(&VariantConfig::new(kind, beta), &f0, &[0.0], steps)?;
        report.within(format!("variants/{}/f0", kind.as_str()), dev, 1e-9);
    }
    Ok(report)
}

pub fn run_variants(a: &VariantsArgs) -> RunResult {
    let variant = a.variant.clone().unwrap_or_else(|| "all".into());
    let (beta, steps, trials, seed) = (a.beta.unwrap_or(1.0), a.t.unwrap_or(100), a.trials.unwrap_or(50), a.seed.unwrap_or(0));
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let kinds: Vec<VariantKind> = match variant.as_str() {
        "all" => vec![VariantKind::Variant1, VariantKind::Variant2],
        s => vec![VariantKind::parse(s).expect("validated variant")],
    };
    let defaults = vec![
        ("variant", variant.clone()),
        ("beta", format!("{beta:?}")),
        ("T", steps.to_string()),
        ("trials", trials.to_string()),
        ("seed", seed.to_string()),
    ];
    let mut b = Builder::new("variants", a, &defaults);
    b.note("variant1 is compared at eta = 1/beta, variant2 at eta = 1/(2 beta)");
    b.record.report.extend(variant_report(&kinds, beta, steps, trials, seed)?);
    Ok(b.finish())
}

fn construction_checks(cr: &ConstructionResult, report: &mut Report, summary: &mut Vec<String>) -> Result<(), Error> {
    let consistency = check_consistency(cr)?;
    let consistent = consistency.all_passed();
    report.extend(consistency);
    if !consistent {
        summary.push("construction is inconsistent; dynamic checks skipped".into());
        return Ok(());
    }
    let h = stability::default_horizon(cr);
    let evo = stability::verify_evolution(cr, h)?;
    let (changes, transitions) = evo.sign_alternation();
    report.at_least(
        format!("sign_alternation/eta{}", cr.params.eta),
        changes as f64,
        transitions.saturating_sub(1) as f64,
        0.0,
    );
    report.extend(evo.report);
    report.extend(stability::verify_lower_bound(cr, h)?.report);
    report.extend(stability::check_nag_convex_upper(cr, h)?.report);
    summary.push(format!("construction eta = {}: M = {}, horizon {h}", cr.params.eta, cr.m));
    Ok(())
}

/// Every checker, on a stored construction when `input` is given and on the
/// default grid otherwise.
pub fn run_verify_all(a: &VerifyArgs) -> RunResult {
    let (trials, t_max, seed) = (a.trials.unwrap_or(100), a.t.unwrap_or(200), a.seed.unwrap_or(0));
    let mut defaults = vec![
        ("trials", trials.to_string()),
        ("T", t_max.to_string()),
        ("seed", seed.to_string()),
    ];
    if let Some(path) = &a.input {
        defaults.retain(|(k, _)| *k != "trials" && *k != "T" && *k != "seed");
        let mut b = Builder::new("verify", a, &defaults);
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
        let cr = format::from_text(&text)?;
        let mut summary = Vec::new();
        construction_checks(&cr, &mut b.record.report, &mut summary)?;
        b.record.summary.extend(summary);
        return Ok(b.finish());
    }
    let mut b = Builder::new("verify", a, &defaults);
    let mut report = Report::new();
    let mut summary = Vec::new();

    let custom = a.g.is_some() || a.beta.is_some() || a.eta.is_some() || a.eps.is_some();
    let grid: Vec<HardFnParams> = if custom {
        vec![params(a.g, a.beta, a.eta, a.eps)?]
    } else {
        PRESETS.iter().map(|&eta| params(None, None, Some(eta), None)).collect::<Result<_, _>>()?
    };
    for p in &grid {
        construction_checks(&build_hard_function(*p)?, &mut report, &mut summary)?;
    }

    let ns: Vec<usize> = a.n.map_or(vec![4, 10, 100], |n| vec![n]);
    for &n in &ns {
        let sc = uniform::build_reduction_scenario(1.0, 1.0, 1.0, n)?;
        let h = sc.floor_start();
        report.extend(uniform::verify_reduction(&sc, h)?.report);
        report.extend(uniform::check_nag_uniform_upper(&sc, h)?.report);
    }
    for k in 0..10 {
        report.extend(uniform::random_quadratic_uniform_upper(seed.wrapping_add(k), 10, t_max, 1.0)?.report);
    }
    for n in [2, 8, 64] {
        for t in [1, 10, 100] {
            report.extend(uniform::quadratic_linear_lower(1.0, 1.0, n, t)?.report);
        }
    }

    let sweep = quadmat::check_bound_2t1(trials, t_max, seed)?;
    report.extend(sweep.report);
    for t in (3..=60).step_by(3) {
        report.extend(quadmat::counterexample_norm(t)?.report);
    }
    report.extend(quadmat::check_schur_powers(20, 50, seed)?.report);
    report.extend(quadmat::check_transfer_cross_validation(trials, 4, t_max, seed)?.report);
    report.extend(quadmat::check_block_reduction(trials.min(50), 50, seed)?.report);

    let mut rng = sampling::rng(seed);
    for k in 0..trials.min(100) as u64 {
        let d = rng.random_range(1..=5);
        let spread = rng.random_range(0.5..=2.0);
        let q = random_quadratic(&mut rng, d, spread)?;
        let x0 = sampling::gaussian_vector(&mut rng, d);
        let beta = q.smoothness().unwrap_or(1.0).max(1e-3);
        report.extend(stability::check_gd_smooth_upper(&q, &x0, 1.0, 1000, 1.0 / beta, 3, seed ^ k)?.report);
        let (h, lin) = (q.hessian().clone(), q.linear().clone());
        report.extend(stability::check_nag_quadratic_upper(&h, &lin, &x0, 1e-3, 500, 1.0 / beta, 2, seed ^ k)?.report);
    }
    let zero = stability::check_gd_smooth_upper(&Zero::new(3), &[0.0; 3], 1e-3, 1000, 1.0, 1, seed)?;
    report.within("gd_smooth_upper/zero_is_exact", (zero.value - 1e-3).abs(), 0.0);
    let ns_cfg = NonsmoothConfig::default();
    report.extend(stability::check_gd_nonsmooth(&ns_cfg)?.report);
    report.extend(stability::check_gd_nonsmooth_sweep(&ns_cfg, &[seed, seed ^ 1, seed ^ 2])?);

    report.extend(variant_report(
        &[VariantKind::Variant1, VariantKind::Variant2],
        1.0,
        100,
        trials.min(50),
        seed,
    )?);

    b.record.summary.extend(summary);
    b.record.report = report;
    Ok(b.finish())
}
