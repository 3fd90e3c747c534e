//! Closed-loop rollouts of the plant and the observer-based controller, used
//! as an independent oracle for the analytic cost.

use nalgebra::{Cholesky, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::closedloop::{build_augmented, closed_loop_radius};
use crate::error::{dims, Error, Result};
use crate::mateq::{symmetrize, Matrix};
use crate::problem::{GainPair, Plant, ProblemInstance};

pub type Vector = DVector<f64>;

/// Truncation target for the default horizon: `ρ(Â)^{2T} ≤ 1e-12`.
pub const TAIL_TARGET: f64 = 1e-12;
pub const MAX_HORIZON: usize = 1_000_000;

/// States, internal states, inputs, outputs and stage costs of one rollout.
/// `x` and `xi` hold `horizon + 1` entries; the rest hold `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<Vector>,
    pub xi: Vec<Vector>,
    pub u: Vec<Vector>,
    pub y: Vec<Vector>,
    pub stage_costs: Vec<f64>,
}

impl Trajectory {
    pub fn total_cost(&self) -> f64 {
        pairwise_sum(&self.stage_costs)
    }

    /// `z̄_t = (x_t, x_t - ξ_t)`.
    pub fn error_coordinates(&self, t: usize) -> Vector {
        let n = self.x[t].len();
        let mut z = Vector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&self.x[t]);
        z.rows_mut(n, n).copy_from(&(&self.x[t] - &self.xi[t]));
        z
    }
}

/// Sum with a fixed balanced association order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len => {
            let (lo, hi) = values.split_at(len / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

fn check_state(plant: &Plant, z0: &Vector) -> Result<()> {
    if z0.len() != 2 * plant.n() {
        return Err(Error::DimensionMismatch {
            context: "initial state (x0, xi0)".into(),
            expected: dims(2 * plant.n(), 1),
            found: dims(z0.len(), 1),
        });
    }
    Ok(())
}

/// Simulates `horizon` steps from `z0 = (x₀, ξ₀)`. Unstable pairs are
/// simulated as well; their entries simply grow.
pub fn rollout(
    p: &ProblemInstance,
    g: &GainPair,
    z0: &Vector,
    horizon: usize,
) -> Result<Trajectory> {
    let plant = &p.plant;
    plant.check_gains(g)?;
    check_state(plant, z0)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let n = plant.n();
    let dynamics = plant.controller_dynamics(g);
    let mut traj = Trajectory {
        x: Vec::with_capacity(horizon + 1),
        xi: Vec::with_capacity(horizon + 1),
        u: Vec::with_capacity(horizon),
        y: Vec::with_capacity(horizon),
        stage_costs: Vec::with_capacity(horizon),
    };
    let mut x: Vector = z0.rows(0, n).into_owned();
    let mut xi: Vector = z0.rows(n, n).into_owned();
    for _ in 0..horizon {
        let u = -(&g.k * &xi);
        let y = plant.c() * &x;
        let cost = x.dot(&(&p.weights.q * &x)) + u.dot(&(&p.weights.r * &u));
        let x_next = plant.a() * &x + plant.b() * &u;
        let xi_next = &dynamics * &xi + &g.l * &y;
        traj.x.push(x);
        traj.xi.push(xi);
        traj.u.push(u);
        traj.y.push(y);
        traj.stage_costs.push(cost);
        x = x_next;
        xi = xi_next;
    }
    traj.x.push(x);
    traj.xi.push(xi);
    Ok(traj)
}

/// Stage cost summed over the horizon, without storing the trajectory.
fn rollout_cost(
    p: &ProblemInstance,
    g: &GainPair,
    dynamics: &Matrix,
    z0: &Vector,
    horizon: usize,
) -> f64 {
    let plant = &p.plant;
    let n = plant.n();
    let mut x: Vector = z0.rows(0, n).into_owned();
    let mut xi: Vector = z0.rows(n, n).into_owned();
    let mut costs = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let u = -(&g.k * &xi);
        costs.push(x.dot(&(&p.weights.q * &x)) + u.dot(&(&p.weights.r * &u)));
        let y = plant.c() * &x;
        let x_next = plant.a() * &x + plant.b() * &u;
        xi = dynamics * &xi + &g.l * y;
        x = x_next;
    }
    pairwise_sum(&costs)
}

/// `ceil(log(1e-12) / log(ρ²))`, capped at [`MAX_HORIZON`].
pub fn default_horizon(radius: f64) -> usize {
    if radius <= 0.0 {
        return 1;
    }
    let t = (TAIL_TARGET.ln() / (radius * radius).ln()).ceil();
    if t.is_finite() && t >= 1.0 {
        (t as usize).min(MAX_HORIZON)
    } else if t.is_finite() {
        1
    } else {
        MAX_HORIZON
    }
}

/// Lower Cholesky factor of `Y`; fails when `Y` is not positive definite.
fn correlation_factor(p: &ProblemInstance) -> Result<Matrix> {
    Cholesky::new(symmetrize(p.correlation.y()))
        .map(|c| c.l())
        .ok_or(Error::Singular { what: "Y" })
}

fn sample_stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn draw_error_coordinates(factor: &Matrix, rng: &mut ChaCha8Rng) -> Vector {
    let w = Vector::from_fn(factor.nrows(), |_, _| StandardNormal.sample(rng));
    factor * w
}

/// Maps `z̄ = (x, x - ξ)` to `(x, ξ)`.
fn to_state_coordinates(z_bar: &Vector) -> Vector {
    let n = z_bar.len() / 2;
    let mut z = z_bar.clone();
    let x = z_bar.rows(0, n);
    let e = z_bar.rows(n, n);
    z.rows_mut(n, n).copy_from(&(x - e));
    z
}

/// `count` draws of `z̄₀ ~ N(0, Y)`; draw `i` uses stream `i` of the seeded generator.
pub fn sample_initial_states(p: &ProblemInstance, count: usize, seed: u64) -> Result<Vec<Vector>> {
    let factor = correlation_factor(p)?;
    Ok((0..count)
        .into_par_iter()
        .map(|i| draw_error_coordinates(&factor, &mut sample_stream(seed, i)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub horizon: usize,
    /// Distribution of `z̄₀`; only its second moment `Y` is prescribed.
    pub distribution: &'static str,
    pub seed: u64,
}

/// Mean truncated rollout cost over `samples` Gaussian initial states with
/// second moment `Y`. The horizon defaults to [`default_horizon`] of `ρ(Â)`.
/// Per-sample generator streams and pairwise reduction make the result
/// independent of thread scheduling.
pub fn monte_carlo_cost(
    p: &ProblemInstance,
    g: &GainPair,
    horizon: Option<usize>,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let sys = build_augmented(p, g)?;
    let radius = closed_loop_radius(&sys)?;
    let horizon = horizon.unwrap_or_else(|| default_horizon(radius));
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let factor = correlation_factor(p)?;
    let dynamics = p.plant.controller_dynamics(g);
    let costs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let z_bar = draw_error_coordinates(&factor, &mut sample_stream(seed, i));
            rollout_cost(p, g, &dynamics, &to_state_coordinates(&z_bar), horizon)
        })
        .collect();
    let mean = pairwise_sum(&costs) / samples as f64;
    let squares: Vec<f64> = costs.iter().map(|c| (c - mean).powi(2)).collect();
    let variance = pairwise_sum(&squares) / (samples - 1) as f64;
    Ok(MonteCarloEstimate {
        mean,
        standard_error: (variance / samples as f64).sqrt(),
        samples,
        horizon,
        distribution: "gaussian",
        seed,
    })
}

/// `E_t = (A - LC)^t E₀ ((A - LC)ᵀ)^t` for `t = 0..=horizon`.
pub fn estimation_variance_sequence(
    plant: &Plant,
    l: &Matrix,
    e0: &Matrix,
    horizon: usize,
) -> Result<Vec<Matrix>> {
    if l.nrows() != plant.n() || l.ncols() != plant.d() {
        return Err(Error::DimensionMismatch {
            context: "L".into(),
            expected: dims(plant.n(), plant.d()),
            found: dims(l.nrows(), l.ncols()),
        });
    }
    if e0.nrows() != plant.n() || e0.ncols() != plant.n() {
        return Err(Error::DimensionMismatch {
            context: "E0".into(),
            expected: dims(plant.n(), plant.n()),
            found: dims(e0.nrows(), e0.ncols()),
        });
    }
    let acl = plant.a() - l * plant.c();
    let mut out = Vec::with_capacity(horizon + 1);
    let mut e = e0.clone();
    for _ in 0..horizon {
        let next = &acl * &e * acl.transpose();
        out.push(e);
        e = next;
    }
    out.push(e);
    Ok(out)
}
