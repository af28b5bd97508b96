//! Canonical NAG, gradient descent and projected subgradient descent.

use crate::error::{Error, Result};
use crate::objective::Objective;

/// `gamma_t = (t - 1) / (t + 2)`.
pub fn momentum_coeff(t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::domain("momentum coefficient is defined for t >= 1"));
    }
    Ok(gamma(t))
}

#[inline]
pub(crate) fn gamma(t: usize) -> f64 {
    (t as f64 - 1.0) / (t as f64 + 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NagState {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub m: Vec<f64>,
}

impl NagState {
    pub fn initial(x0: &[f64]) -> Self {
        NagState {
            t: 0,
            x: x0.to_vec(),
            y: x0.to_vec(),
            m: vec![0.0; x0.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<NagState>,
    pub eta: f64,
    pub objective_id: String,
}

impl Trajectory {
    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn x(&self, t: usize) -> &[f64] {
        &self.states[t].x
    }

    pub fn y(&self, t: usize) -> &[f64] {
        &self.states[t].y
    }

    pub fn m(&self, t: usize) -> &[f64] {
        &self.states[t].m
    }

    /// First coordinate of every `x_t`; handy for one-dimensional runs.
    pub fn xs(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.x[0]).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.y[0]).collect()
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("step size must be positive and finite, got {eta}")))
    }
}

fn finite_gradient<F: Objective + ?Sized>(f: &F, point: &[f64], step: usize) -> Result<Vec<f64>> {
    let g = f.gradient(point);
    if g.len() != point.len() {
        return Err(Error::domain(format!(
            "gradient has dimension {} at a point of dimension {}",
            g.len(),
            point.len()
        )));
    }
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NonFinite {
            step,
            point: point.to_vec(),
        })
    }
}

/// One NAG step from `state` (at time `t`) to time `t + 1`.
pub fn nag_step<F: Objective + ?Sized>(state: &NagState, f: &F, eta: f64) -> Result<NagState> {
    check_eta(eta)?;
    let t = state.t + 1;
    let g = finite_gradient(f, &state.y, t)?;
    let gm = gamma(t);
    let d = state.y.len();
    let mut x = Vec::with_capacity(d);
    let mut m = Vec::with_capacity(d);
    let mut y = Vec::with_capacity(d);
    for i in 0..d {
        let step = eta * g[i];
        let xi = state.y[i] - step;
        let mi = gm * (state.m[i] - step);
        x.push(xi);
        m.push(mi);
        y.push(xi + mi);
    }
    Ok(NagState { t, x, y, m })
}

/// `NAG(f, x0, T, eta)`: the states at times `0..=T`.
pub fn run_nag<F: Objective + ?Sized>(f: &F, x0: &[f64], steps: usize, eta: f64) -> Result<Trajectory> {
    check_eta(eta)?;
    check_dim(f, x0)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(NagState::initial(x0));
    for _ in 0..steps {
        let next = nag_step(states.last().unwrap(), f, eta)?;
        states.push(next);
    }
    Ok(Trajectory {
        states,
        eta,
        objective_id: f.name(),
    })
}

fn check_dim<F: Objective + ?Sized>(f: &F, x0: &[f64]) -> Result<()> {
    if x0.len() == f.dim() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "start point has dimension {}, objective has dimension {}",
            x0.len(),
            f.dim()
        )))
    }
}

fn gd_trajectory(xs: Vec<Vec<f64>>, eta: f64, objective_id: String) -> Trajectory {
    let states = xs
        .into_iter()
        .enumerate()
        .map(|(t, x)| NagState {
            t,
            m: vec![0.0; x.len()],
            y: x.clone(),
            x,
        })
        .collect();
    Trajectory {
        states,
        eta,
        objective_id,
    }
}

/// Plain gradient descent. The result has `y = x` and `m = 0` throughout.
pub fn run_gd<F: Objective + ?Sized>(f: &F, x0: &[f64], steps: usize, eta: f64) -> Result<Trajectory> {
    check_eta(eta)?;
    check_dim(f, x0)?;
    let mut xs = Vec::with_capacity(steps + 1);
    xs.push(x0.to_vec());
    for t in 1..=steps {
        let prev = &xs[t - 1];
        let g = finite_gradient(f, prev, t)?;
        let next = prev.iter().zip(&g).map(|(x, g)| x - eta * g).collect();
        xs.push(next);
    }
    Ok(gd_trajectory(xs, eta, f.name()))
}

/// Output of projected subgradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgdRun {
    pub trajectory: Trajectory,
    /// `averages[t]` is the mean of `x_0, ..., x_t`.
    pub averages: Vec<Vec<f64>>,
    pub radius: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn project_ball(mut v: Vec<f64>, radius: f64) -> Vec<f64> {
    let n = norm(&v);
    if n > radius {
        let s = radius / n;
        v.iter_mut().for_each(|a| *a *= s);
    }
    v
}

/// `x_{t+1} = P[x_t - eta g_t]` with `P` the projection onto the centered ball.
pub fn run_projected_subgd<F: Objective + ?Sized>(
    f: &F,
    x0: &[f64],
    steps: usize,
    eta: f64,
    radius: f64,
) -> Result<SubgdRun> {
    check_eta(eta)?;
    check_dim(f, x0)?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::domain(format!("projection radius must be positive, got {radius}")));
    }
    if norm(x0) > radius {
        return Err(Error::domain(format!(
            "start point has norm {} outside the ball of radius {radius}",
            norm(x0)
        )));
    }
    let d = x0.len();
    let mut xs = Vec::with_capacity(steps + 1);
    xs.push(x0.to_vec());
    for t in 1..=steps {
        let prev = &xs[t - 1];
        let g = finite_gradient(f, prev, t)?;
        let raw = prev.iter().zip(&g).map(|(x, g)| x - eta * g).collect();
        xs.push(project_ball(raw, radius));
    }
    let mut averages = Vec::with_capacity(xs.len());
    let mut sum = vec![0.0; d];
    for (t, x) in xs.iter().enumerate() {
        sum.iter_mut().zip(x).for_each(|(s, a)| *s += a);
        let k = (t + 1) as f64;
        averages.push(sum.iter().map(|s| s / k).collect());
    }
    Ok(SubgdRun {
        trajectory: gd_trajectory(xs, eta, f.name()),
        averages,
        radius,
    })
}
