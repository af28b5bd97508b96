//! Transfer matrices of NAG on quadratics.
//!
//! With `A = I - eta H`, the divergence obeys
//! `(dx_{t+1}, dx_t) = M_t (dx_t, dx_{t-1})`, `M_t = [[(1+g)A, -gA], [I, 0]]`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::check::{CheckOutcome, Report, Verdict};
use crate::error::{Error, Result};
use crate::nag::{gamma, run_nag};
use crate::objective::Quadratic;
use crate::sampling;

const SPECTRUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    a: DMatrix<f64>,
    /// Eigenvalues of `A`, ascending.
    spectrum: Vec<f64>,
    gamma: f64,
}

impl TransferMatrix {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }
    /// Size of `A`; the transfer matrix is twice that.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&(&self.a * (1.0 + self.gamma)));
        m.view_mut((0, d), (d, d)).copy_from(&(&self.a * -self.gamma));
        m.view_mut((d, 0), (d, d)).fill_with_identity();
        m
    }

    fn scalar_matrix(&self) -> [[f64; 2]; 2] {
        let a = self.a[(0, 0)];
        [[(1.0 + self.gamma) * a, -self.gamma * a], [1.0, 0.0]]
    }
}

pub fn build_transfer(a: DMatrix<f64>, gamma: f64) -> Result<TransferMatrix> {
    if !(-1.0..=1.0).contains(&gamma) {
        return Err(Error::domain(format!("momentum coefficient {gamma} outside [-1, 1]")));
    }
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::domain("A must be a nonempty square matrix"));
    }
    let q = Quadratic::new(a.clone(), DVector::zeros(a.nrows()))?;
    let spectrum = q.eigenvalues();
    if spectrum.iter().any(|&l| !(-SPECTRUM_TOL..=1.0 + SPECTRUM_TOL).contains(&l)) {
        return Err(Error::domain(format!("eigenvalues of A must lie in [0, 1], got {spectrum:?}")));
    }
    Ok(TransferMatrix { a, spectrum, gamma })
}

pub fn build_scalar_transfer(a: f64, gamma: f64) -> Result<TransferMatrix> {
    build_transfer(DMatrix::from_element(1, 1, a), gamma)
}

/// `M_t ... M_1` for the sequence `[M_1, ..., M_t]`: the first element acts
/// first.
pub fn product(ms: &[TransferMatrix]) -> Result<DMatrix<f64>> {
    let first = ms.first().ok_or_else(|| Error::domain("empty transfer sequence"))?;
    let d = first.dim();
    if ms.iter().any(|m| m.dim() != d) {
        return Err(Error::domain("transfer matrices of mixed dimension"));
    }
    let mut p = DMatrix::identity(2 * d, 2 * d);
    for m in ms {
        p = m.matrix() * p;
    }
    Ok(p)
}

fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Largest singular value of a 2x2 matrix: square root of the top
/// eigenvalue of `M^T M`.
pub fn norm2(m: &[[f64; 2]; 2]) -> f64 {
    let fro = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (fro * fro - 4.0 * det * det).max(0.0);
    ((fro + disc.sqrt()) / 2.0).sqrt()
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.shape() == (2, 2) {
        return norm2(&[[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]);
    }
    m.singular_values().max()
}

pub fn product_norm(ms: &[TransferMatrix]) -> Result<f64> {
    if ms.first().is_some_and(|m| m.dim() == 1) && ms.iter().all(|m| m.dim() == 1) {
        let p = ms.iter().fold([[1.0, 0.0], [0.0, 1.0]], |p, m| mul2(&m.scalar_matrix(), &p));
        return Ok(norm2(&p));
    }
    Ok(spectral_norm(&product(ms)?))
}

/// Norms of every prefix product, `out[t-1] = ||M_t ... M_1||`.
pub fn prefix_norms(ms: &[TransferMatrix]) -> Result<Vec<f64>> {
    let Some(first) = ms.first() else {
        return Ok(Vec::new());
    };
    let d = first.dim();
    if ms.iter().any(|m| m.dim() != d) {
        return Err(Error::domain("transfer matrices of mixed dimension"));
    }
    let mut out = Vec::with_capacity(ms.len());
    if d == 1 {
        let mut p = [[1.0, 0.0], [0.0, 1.0]];
        for m in ms {
            p = mul2(&m.scalar_matrix(), &p);
            out.push(norm2(&p));
        }
    } else {
        let mut p = DMatrix::identity(2 * d, 2 * d);
        for m in ms {
            p = m.matrix() * p;
            out.push(spectral_norm(&p));
        }
    }
    Ok(out)
}

/// Schedule as CSV rows `k,gamma_k,a_k`; a matrix `A` is written as its
/// eigenvalues separated by spaces.
pub fn schedule_csv(ms: &[TransferMatrix]) -> String {
    let mut out = String::from("k,gamma_k,a_k\n");
    for (k, m) in ms.iter().enumerate() {
        let a = m.spectrum.iter().map(|l| format!("{l:.17e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{},{:.17e},{}", k + 1, m.gamma, a);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSweep {
    /// Largest `||prod|| / (2(t+1))` seen.
    pub max_ratio: f64,
    /// First violating schedule, truncated at the violation.
    pub failing_schedule: Option<String>,
    pub report: Report,
}

fn random_a(rng: &mut sampling::SeededRng, block: bool) -> DMatrix<f64> {
    if block {
        let d = rng.random_range(2..=4);
        let q = sampling::random_orthogonal(rng, d);
        let lambda: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..=1.0)).collect();
        sampling::with_spectrum(&q, &lambda)
    } else {
        DMatrix::from_element(1, 1, rng.random_range(0.0..=1.0))
    }
}

/// `||M_t ... M_1|| <= 2(t+1)` for every prefix `t <= t_max`, with `A` fixed
/// per trial and `gamma_k` uniform in `[-1, 1]`. Even trials use a scalar
/// `A`, odd trials a PSD block of size 2 to 4. Each trial's `A` is also run
/// with the canonical schedule `(k-1)/(k+2)`.
pub fn check_bound_2t1(trials: usize, t_max: usize, seed: u64) -> Result<BoundSweep> {
    if t_max == 0 {
        return Err(Error::domain("need t_max >= 1"));
    }
    let mut rng = sampling::rng(seed);
    let mut max_ratio = 0.0_f64;
    let mut failing = None;
    let mut worst = (0usize, 0usize, "random");
    let mut violations = 0usize;
    for trial in 0..trials {
        let a = random_a(&mut rng, trial % 2 == 1);
        let random: Vec<TransferMatrix> = (0..t_max)
            .map(|_| build_transfer(a.clone(), rng.random_range(-1.0..=1.0)))
            .collect::<Result<_>>()?;
        let canonical: Vec<TransferMatrix> =
            (1..=t_max).map(|k| build_transfer(a.clone(), gamma(k))).collect::<Result<_>>()?;
        for (label, seq) in [("random", &random), ("canonical", &canonical)] {
            for (i, norm) in prefix_norms(seq)?.into_iter().enumerate() {
                let t = i + 1;
                let ratio = norm / (2.0 * (t as f64 + 1.0));
                if ratio > max_ratio {
                    max_ratio = ratio;
                    worst = (trial, t, label);
                }
                if ratio > 1.0 + 1e-9 {
                    violations += 1;
                    if failing.is_none() {
                        failing = Some(schedule_csv(&seq[..t]));
                    }
                }
            }
        }
    }
    let mut report = Report::new();
    report.push(
        CheckOutcome::new("transfer/norm_at_most_2t_plus_2", violations == 0, max_ratio, 1.0).with_detail(format!(
            "{trials} trials, t <= {t_max}, worst at trial {} t = {} ({} schedule), {violations} violations",
            worst.0, worst.1, worst.2
        )),
    );
    Ok(BoundSweep {
        max_ratio,
        failing_schedule: failing,
        report,
    })
}

/// Period-3 schedule: `gamma = 0.9`, `A_k = 0` when `k mod 3 = 0`, else 1.
pub fn counterexample_schedule(t: usize) -> Result<Vec<TransferMatrix>> {
    (1..=t)
        .map(|k| build_scalar_transfer(if k % 3 == 0 { 0.0 } else { 1.0 }, 0.9))
        .collect()
}

/// Norm of the period-3 product of length `t`, asserted `>= 1.15^t`.
pub fn counterexample_norm(t: usize) -> Result<Verdict<f64>> {
    if t == 0 || !t.is_multiple_of(3) {
        return Err(Error::domain(format!("length must be a positive multiple of 3, got {t}")));
    }
    let norm = product_norm(&counterexample_schedule(t)?)?;
    let mut report = Report::new();
    report.at_least(format!("counterexample/exponential/t{t}"), norm, 1.15f64.powi(t as i32), 0.0);
    Ok(Verdict::new(norm, report))
}

/// Closed-form `t`-th power of `[[l1, c], [0, l2]]`.
pub fn schur_power(l1: Complex64, l2: Complex64, c: Complex64, t: usize) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let mut sum = zero;
    for i in 0..t {
        sum += l1.powu(i as u32) * l2.powu((t - 1 - i) as u32);
    }
    [[l1.powu(t as u32), c * sum], [zero, l2.powu(t as u32)]]
}

/// Repeated multiplication.
pub fn naive_power(l1: Complex64, l2: Complex64, c: Complex64, t: usize) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let m = [[l1, c], [zero, l2]];
    let mut p = [[one, zero], [zero, one]];
    for _ in 0..t {
        p = [
            [m[0][0] * p[0][0] + m[0][1] * p[1][0], m[0][0] * p[0][1] + m[0][1] * p[1][1]],
            [m[1][0] * p[0][0] + m[1][1] * p[1][0], m[1][0] * p[0][1] + m[1][1] * p[1][1]],
        ];
    }
    p
}

fn crel(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Largest entrywise relative gap between the closed form and repeated
/// multiplication.
pub fn schur_power_deviation(l1: Complex64, l2: Complex64, c: Complex64, t: usize) -> f64 {
    let (a, b) = (schur_power(l1, l2, c, t), naive_power(l1, l2, c, t));
    let mut dev = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            dev = dev.max(crel(a[i][j], b[i][j]));
        }
    }
    dev
}

/// Roots `h -+ sqrt(h (h - 1))` of the scalar NAG characteristic polynomial
/// at `A = h`; complex for `0 < h < 1`.
pub fn characteristic_roots(h: f64) -> (Complex64, Complex64) {
    let r = Complex64::new(h * (h - 1.0), 0.0).sqrt();
    let h = Complex64::new(h, 0.0);
    (h + r, h - r)
}

/// Closed form against repeated multiplication for random triangular
/// factors and for the characteristic roots, every `t <= t_max`.
pub fn check_schur_powers(samples: usize, t_max: usize, seed: u64) -> Result<Verdict<f64>> {
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0_f64;
    let mut cases: Vec<(Complex64, Complex64, Complex64)> = Vec::new();
    for _ in 0..samples {
        let mut z = || Complex64::from_polar(rng.random_range(0.0..=1.0), rng.random_range(0.0..std::f64::consts::TAU));
        cases.push((z(), z(), z()));
        let (l1, l2) = characteristic_roots(rng.random_range(0.0..=1.0));
        cases.push((l1, l2, Complex64::new(rng.random_range(-1.0..=1.0), 0.0)));
    }
    let one = Complex64::new(1.0, 0.0);
    cases.push((one, one, one));
    for (l1, l2, c) in cases {
        for t in 1..=t_max {
            worst = worst.max(schur_power_deviation(l1, l2, c, t));
        }
    }
    let mut report = Report::new();
    report.within("schur_power/closed_form_matches_product", worst, 1e-10);
    Ok(Verdict::new(worst, report))
}

/// `dx_t` for `t = 0..=T` from the transfer recursion started at
/// `(dx_1, dx_0)`.
pub fn nag_quadratic_divergence_via_transfer(
    h: &DMatrix<f64>,
    eta: f64,
    dx0: &[f64],
    dx1: &[f64],
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let d = h.nrows();
    if dx0.len() != d || dx1.len() != d {
        return Err(Error::domain("initial differences do not match the Hessian"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::domain(format!("step size must be positive, got {eta}")));
    }
    let a = DMatrix::identity(d, d) - h * eta;
    // validates symmetry and 0 <= A <= I, i.e. 0 <= H <= I / eta
    build_transfer(a.clone(), 0.0)?;
    let mut out = vec![dx0.to_vec()];
    if steps == 0 {
        return Ok(out);
    }
    out.push(dx1.to_vec());
    let (mut cur, mut prev) = (DVector::from_column_slice(dx1), DVector::from_column_slice(dx0));
    for t in 1..steps {
        let g = gamma(t);
        let next = &a * (&cur * (1.0 + g) - &prev * g);
        out.push(next.as_slice().to_vec());
        prev = cur;
        cur = next;
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Transfer recursion against two NAG runs from `x0` and `x0 + dx0`, with
/// `dx_1 = A dx_0`. The error at each step is measured relative to the
/// largest divergence in the run, since components pass through zero.
pub fn cross_validate_transfer(q: &Quadratic, x0: &[f64], dx0: &[f64], eta: f64, steps: usize) -> Result<f64> {
    let d = q.hessian().nrows();
    let a = DMatrix::identity(d, d) - q.hessian() * eta;
    let dx1 = (&a * DVector::from_column_slice(dx0)).as_slice().to_vec();
    let via = nag_quadratic_divergence_via_transfer(q.hessian(), eta, dx0, &dx1, steps)?;
    let xt: Vec<f64> = x0.iter().zip(dx0).map(|(u, v)| u + v).collect();
    let ra = run_nag(q, &xt, steps, eta)?;
    let rb = run_nag(q, x0, steps, eta)?;
    let direct: Vec<Vec<f64>> = (0..=steps)
        .map(|t| ra.x(t).iter().zip(rb.x(t)).map(|(u, v)| u - v).collect())
        .collect();
    let scale = direct.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let err = via
        .iter()
        .zip(&direct)
        .map(|(u, v)| norm(&u.iter().zip(v).map(|(p, q)| p - q).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    Ok(if scale == 0.0 { err } else { err / scale })
}

/// Random instances: PSD Hessian of size 1 to `d_max` with spectrum in
/// `[0, beta]`, a minimizer drawn from a standard normal, `eta = 1/beta`,
/// and a unit perturbation. The divergence is linear in the perturbation,
/// so its scale only affects rounding relative to `|x_t|`.
pub fn check_transfer_cross_validation(instances: usize, d_max: usize, steps: usize, seed: u64) -> Result<Verdict<f64>> {
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let d = rng.random_range(1..=d_max.max(1));
        let beta = rng.random_range(0.5..=2.0);
        let (h, _) = sampling::random_psd(&mut rng, d, beta);
        let x_star = DVector::from_vec(sampling::gaussian_vector(&mut rng, d));
        let b = -(&h * x_star);
        let q = Quadratic::new(h, b)?;
        let x0 = sampling::gaussian_vector(&mut rng, d);
        let dx0 = sampling::sphere_point(&mut rng, d, 1.0);
        worst = worst.max(cross_validate_transfer(&q, &x0, &dx0, 1.0 / beta, steps)?);
    }
    let mut report = Report::new();
    report.within("transfer/matches_direct_simulation", worst, 1e-10);
    Ok(Verdict::new(worst, report))
}

/// Block product norm against the largest scalar product norm over the
/// eigenvalues of `A`.
pub fn block_reduction_deviation(a: &DMatrix<f64>, gammas: &[f64]) -> Result<f64> {
    let block: Vec<TransferMatrix> = gammas.iter().map(|&g| build_transfer(a.clone(), g)).collect::<Result<_>>()?;
    let full = product_norm(&block)?;
    let mut best = 0.0_f64;
    for &l in block[0].spectrum() {
        let l = l.clamp(0.0, 1.0);
        let seq: Vec<TransferMatrix> = gammas.iter().map(|&g| build_scalar_transfer(l, g)).collect::<Result<_>>()?;
        best = best.max(product_norm(&seq)?);
    }
    Ok((full - best).abs() / full.max(best))
}

pub fn check_block_reduction(trials: usize, length: usize, seed: u64) -> Result<Verdict<f64>> {
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let a = random_a(&mut rng, true);
        let gammas: Vec<f64> = (0..length).map(|_| rng.random_range(-1.0..=1.0)).collect();
        worst = worst.max(block_reduction_deviation(&a, &gammas)?);
    }
    let mut report = Report::new();
    report.within("transfer/block_norm_is_max_scalar_norm", worst, 1e-9);
    Ok(Verdict::new(worst, report))
}

/// `||M_t ... M_1||` for `A = 1` and the canonical schedule, `t = 1..=t_max`.
pub fn canonical_norm_growth(t_max: usize) -> Result<Vec<f64>> {
    let seq: Vec<TransferMatrix> = (1..=t_max).map(|k| build_scalar_transfer(1.0, gamma(k))).collect::<Result<_>>()?;
    prefix_norms(&seq)
}
