//! Stationary points of the joint gain problem.
//!
//! With `S` and `Ω` frozen at the current gains, the two vanishing-gradient
//! conditions are linear in `(K, L)` and decouple into the symmetric
//! Sylvester equations
//!
//! ```text
//! K = G_K + (R_K⁻¹ M) K (N Σ22⁻¹)
//! L = G_L + (S22⁻¹ U) L (V (CΩ22Cᵀ)⁻¹)
//! ```
//!
//! The solver alternates between assembling these coefficients and solving
//! the two equations, taking damped steps that keep the pair stabilizing and
//! the cost non-increasing.

use serde::Serialize;

use crate::closedloop::{evaluate, is_stabilizing_pair, Blocks, ClosedLoopEvaluation};
use crate::design::standard_pair;
use crate::error::{Error, Result};
use crate::gradient::compact_from_evaluation;
use crate::mateq::{pd_inverse, solve_sylvester_affine, sylvester_margin, Matrix};
use crate::problem::{numerical_rank, GainPair, ProblemInstance};

/// Sylvester margins below this are flagged as near-singular.
pub const UNIQUENESS_FLAG: f64 = 1e-8;
/// Relative distance to the standard pair below which a stationary point is
/// classified as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;
/// Gain step below which the iteration is considered settled.
pub const STEP_TOLERANCE: f64 = 1e-11;
/// Once the gradients are within tolerance, the iteration stops after this many
/// further steps even if rounding keeps the gain step above [`STEP_TOLERANCE`].
pub const SETTLE_WINDOW: usize = 50;
/// Smallest damping factor tried before giving up.
pub const MIN_DAMPING: f64 = 1.0 / (1u64 << 30) as f64;
/// Relative slack on the cost non-increase test, absorbing rounding in `J`.
pub const COST_SLACK: f64 = 1e-12;

/// Coefficients of the two Sylvester equations at a given pair, with the
/// coupling factors they are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SylvesterCoefficients {
    /// `R + Bᵀ S11 B`.
    pub r_k: Matrix,
    /// `Bᵀ S12 S22⁻¹ S12ᵀ B`.
    pub m: Matrix,
    /// `(Ω12 - Ω22) Cᵀ (CΩ22Cᵀ)⁻¹ C (Ω12ᵀ - Ω22)`.
    pub n: Matrix,
    pub g_k: Matrix,
    /// `S12ᵀ B R_K⁻¹ Bᵀ S12`.
    pub u: Matrix,
    /// `C (Ω12ᵀ - Ω22) Σ22⁻¹ (Ω12 - Ω22) Cᵀ`.
    pub v: Matrix,
    pub g_l: Matrix,
    /// `R_K⁻¹BᵀS11A + R_K⁻¹Bᵀ(S11 + S12)A(Ω12ᵀ - Ω22)Σ22⁻¹`.
    pub k_circ: Matrix,
    /// `AΩ22Cᵀ(CΩ22Cᵀ)⁻¹ + S22⁻¹S12ᵀAΩ12Cᵀ(CΩ22Cᵀ)⁻¹`.
    pub l_circ: Matrix,
    /// `R_K⁻¹ M`, left operator of the K-equation.
    pub k_left: Matrix,
    /// `N Σ22⁻¹`, right operator of the K-equation.
    pub k_right: Matrix,
    /// `S22⁻¹ U`.
    pub l_left: Matrix,
    /// `V (CΩ22Cᵀ)⁻¹`.
    pub l_right: Matrix,
    /// `R_K⁻¹ Bᵀ S12`; the K-equation at fixed L is
    /// `K = K° - k_coupling · L · k_coupling_right`.
    pub k_coupling: Matrix,
    /// `C (Ω12ᵀ - Ω22) Σ22⁻¹`.
    pub k_coupling_right: Matrix,
    /// `S22⁻¹ S12ᵀ B`; the L-equation at fixed K is
    /// `L = L° - l_coupling · K · l_coupling_right`.
    pub l_coupling: Matrix,
    /// `(Ω12 - Ω22) Cᵀ (CΩ22Cᵀ)⁻¹`.
    pub l_coupling_right: Matrix,
    /// Condition numbers of `R_K`, `S22`, `Σ22` and `CΩ22Cᵀ`.
    pub conditions: Conditions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conditions {
    pub r_k: f64,
    pub s22: f64,
    pub sigma22: f64,
    pub c_omega22_ct: f64,
}

impl SylvesterCoefficients {
    /// Relative residual of the K-equation at `k`.
    pub fn residual_k(&self, k: &Matrix) -> f64 {
        (k - &self.g_k - &self.k_left * k * &self.k_right).norm() / k.norm().max(1.0)
    }

    /// Relative residual of the L-equation at `l`.
    pub fn residual_l(&self, l: &Matrix) -> f64 {
        (l - &self.g_l - &self.l_left * l * &self.l_right).norm() / l.norm().max(1.0)
    }

    /// Solution of the K-equation with L held at `l`.
    pub fn k_given_l(&self, l: &Matrix) -> Matrix {
        &self.k_circ - &self.k_coupling * l * &self.k_coupling_right
    }

    /// Solution of the L-equation with K held at `k`.
    pub fn l_given_k(&self, k: &Matrix) -> Matrix {
        &self.l_circ - &self.l_coupling * k * &self.l_coupling_right
    }
}

pub fn assemble_coefficients(p: &ProblemInstance, g: &GainPair) -> Result<SylvesterCoefficients> {
    let ev = evaluate(p, g)?;
    coefficients_from_evaluation(p, &ev)
}

fn coefficients_from_evaluation(
    p: &ProblemInstance,
    ev: &ClosedLoopEvaluation,
) -> Result<SylvesterCoefficients> {
    let (a, b, c) = (p.plant.a(), p.plant.b(), p.plant.c());
    let s = Blocks::split(&ev.s);
    let o = Blocks::split(&ev.omega);
    let bt = b.transpose();

    let r_k = &p.weights.r + &bt * &s.b11 * b;
    let r_k_inv = pd_inverse(&r_k, "R + B^T S11 B")?;
    let s22_inv = pd_inverse(&s.b22, "S22")?;
    let sigma22_inv = pd_inverse(&ev.sigma22, "Sigma22")?;
    let w = c * &o.b22 * c.transpose();
    let w_inv = pd_inverse(&w, "C Omega22 C^T")?;
    let (rki, s22i, sgi, wi) = (
        &r_k_inv.inverse,
        &s22_inv.inverse,
        &sigma22_inv.inverse,
        &w_inv.inverse,
    );

    let cross = o.b12.transpose() - &o.b22; // Ω12ᵀ - Ω22
    let cross_t = cross.transpose(); // Ω12 - Ω22
    let s12t = s.b12.transpose();

    let k_circ = rki * &bt * &s.b11 * a + rki * &bt * (&s.b11 + &s.b12) * a * &cross * sgi;
    let l_circ = a * &o.b22 * c.transpose() * wi + s22i * &s12t * a * &o.b12 * c.transpose() * wi;

    let k_coupling = rki * &bt * &s.b12;
    let k_coupling_right = c * &cross * sgi;
    let l_coupling = s22i * &s12t * b;
    let l_coupling_right = &cross_t * c.transpose() * wi;

    let m = &bt * &s.b12 * s22i * &s12t * b;
    let n = &cross_t * c.transpose() * wi * c * &cross;
    let u = &s12t * b * rki * &bt * &s.b12;
    let v = c * &cross * sgi * &cross_t * c.transpose();

    let g_k = &k_circ - &k_coupling * &l_circ * &k_coupling_right;
    let g_l = &l_circ - &l_coupling * &k_circ * &l_coupling_right;

    Ok(SylvesterCoefficients {
        k_left: rki * &m,
        k_right: &n * sgi,
        l_left: s22i * &u,
        l_right: &v * wi,
        r_k,
        m,
        n,
        g_k,
        u,
        v,
        g_l,
        k_circ,
        l_circ,
        k_coupling,
        k_coupling_right,
        l_coupling,
        l_coupling_right,
        conditions: Conditions {
            r_k: r_k_inv.condition,
            s22: s22_inv.condition,
            sigma22: sigma22_inv.condition,
            c_omega22_ct: w_inv.condition,
        },
    })
}

/// Unique solvability of the two Sylvester equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessReport {
    /// `min |λ_i(R_K⁻¹M) μ_j(NΣ22⁻¹) - 1|`.
    pub margin_k: f64,
    /// `min |λ_i(S22⁻¹U) μ_j(V(CΩ22Cᵀ)⁻¹) - 1|`.
    pub margin_l: f64,
    /// Either margin is below [`UNIQUENESS_FLAG`].
    pub near_singular: bool,
}

pub fn check_uniqueness(c: &SylvesterCoefficients) -> Result<UniquenessReport> {
    let margin_k = sylvester_margin(&c.k_left, &c.k_right)?;
    let margin_l = sylvester_margin(&c.l_left, &c.l_right)?;
    Ok(UniquenessReport {
        margin_k,
        margin_l,
        near_singular: margin_k < UNIQUENESS_FLAG || margin_l < UNIQUENESS_FLAG,
    })
}

/// Which gain, if any, is held fixed during the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Freeze {
    #[default]
    None,
    /// Hold K at its initial value and solve for L only.
    K,
    /// Hold L at its initial value and solve for K only.
    L,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions {
    /// Scale-relative stationarity tolerance: both gradient norms must be at
    /// most `tolerance · (1 + |J|)` and both Sylvester residuals at most `tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub freeze: Freeze,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 10_000,
            freeze: Freeze::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryReport {
    #[serde(serialize_with = "crate::serde_matrix::serialize")]
    pub k: Matrix,
    #[serde(serialize_with = "crate::serde_matrix::serialize")]
    pub l: Matrix,
    pub iterations: usize,
    pub grad_norm_k: f64,
    pub grad_norm_l: f64,
    pub sylvester_residual_k: f64,
    pub sylvester_residual_l: f64,
    /// Within [`DEGENERACY_TOLERANCE`] (relative) of the standard pair.
    pub degenerate_to_standard: bool,
    pub cost: f64,
    /// Cost of the standard pair for comparison.
    pub standard_cost: Option<f64>,
    pub uniqueness: UniquenessReport,
    pub freeze: Freeze,
}

impl StationaryReport {
    pub fn gains(&self) -> GainPair {
        GainPair::new(self.k.clone(), self.l.clone())
    }
}

struct Iterate {
    gains: GainPair,
    eval: ClosedLoopEvaluation,
}

impl Iterate {
    fn new(p: &ProblemInstance, gains: GainPair) -> Result<Self> {
        let eval = evaluate(p, &gains)?;
        Ok(Self { gains, eval })
    }
}

fn candidate(c: &SylvesterCoefficients, g: &GainPair, freeze: Freeze) -> Result<GainPair> {
    Ok(match freeze {
        Freeze::None => GainPair::new(
            solve_sylvester_affine(&c.g_k, &c.k_left, &c.k_right)?,
            solve_sylvester_affine(&c.g_l, &c.l_left, &c.l_right)?,
        ),
        Freeze::K => GainPair::new(g.k.clone(), c.l_given_k(&g.k)),
        Freeze::L => GainPair::new(c.k_given_l(&g.l), g.l.clone()),
    })
}

fn blend(from: &GainPair, to: &GainPair, alpha: f64) -> GainPair {
    GainPair::new(
        &from.k * (1.0 - alpha) + &to.k * alpha,
        &from.l * (1.0 - alpha) + &to.l * alpha,
    )
}

fn gain_step(a: &GainPair, b: &GainPair) -> f64 {
    ((&a.k - &b.k).norm_squared() + (&a.l - &b.l).norm_squared()).sqrt()
}

fn gain_norm(g: &GainPair) -> f64 {
    (g.k.norm_squared() + g.l.norm_squared()).sqrt()
}

/// Residuals and gradients that certify stationarity at an iterate, restricted
/// to the gains that are free.
struct Certificate {
    grad_k: f64,
    grad_l: f64,
    residual_k: f64,
    residual_l: f64,
}

impl Certificate {
    fn new(p: &ProblemInstance, it: &Iterate, c: &SylvesterCoefficients, freeze: Freeze) -> Self {
        let grad = compact_from_evaluation(p, &it.gains, &it.eval);
        let residual_k = match freeze {
            Freeze::None => c.residual_k(&it.gains.k),
            Freeze::L => {
                (&it.gains.k - c.k_given_l(&it.gains.l)).norm() / it.gains.k.norm().max(1.0)
            }
            Freeze::K => 0.0,
        };
        let residual_l = match freeze {
            Freeze::None => c.residual_l(&it.gains.l),
            Freeze::K => {
                (&it.gains.l - c.l_given_k(&it.gains.k)).norm() / it.gains.l.norm().max(1.0)
            }
            Freeze::L => 0.0,
        };
        Self {
            grad_k: if freeze == Freeze::K {
                0.0
            } else {
                grad.norm_k()
            },
            grad_l: if freeze == Freeze::L {
                0.0
            } else {
                grad.norm_l()
            },
            residual_k,
            residual_l,
        }
    }

    fn within(&self, tol: f64, cost: f64) -> bool {
        let scale = 1.0 + cost.abs();
        self.grad_k <= tol * scale
            && self.grad_l <= tol * scale
            && self.residual_k <= tol
            && self.residual_l <= tol
    }
}

/// Iterates the coupled Sylvester equations from `init` (the standard pair
/// when `None`) until both gains are stationary.
pub fn solve_stationary(
    p: &ProblemInstance,
    init: Option<&GainPair>,
    opts: &StationaryOptions,
) -> Result<StationaryReport> {
    if !(opts.tolerance > 0.0 && opts.tolerance.is_finite()) || opts.max_iterations == 0 {
        return Err(Error::InvalidArgument(format!(
            "stationary solver needs tolerance > 0 and max_iterations >= 1, got {} and {}",
            opts.tolerance, opts.max_iterations
        )));
    }
    if numerical_rank(p.plant.b()) != p.plant.m() {
        return Err(Error::InvalidArgument(
            "B must have full column rank for the stationary-point equations".into(),
        ));
    }
    let standard = standard_pair(p).ok();
    let start = match (init, &standard) {
        (Some(g), _) => g.clone(),
        (None, Some(s)) => s.gains(),
        (None, None) => standard_pair(p)?.gains(),
    };
    p.plant.check_gains(&start)?;
    let mut it = Iterate::new(p, start)?;

    let mut settled_for = 0usize;
    let mut last_step = f64::INFINITY;
    for iteration in 0..=opts.max_iterations {
        let coeffs = coefficients_from_evaluation(p, &it.eval)?;
        let cert = Certificate::new(p, &it, &coeffs, opts.freeze);
        if cert.within(opts.tolerance, it.eval.cost) {
            if last_step <= STEP_TOLERANCE * (1.0 + gain_norm(&it.gains))
                || settled_for >= SETTLE_WINDOW
            {
                return finish(
                    p,
                    it,
                    coeffs,
                    cert,
                    iteration,
                    standard.as_ref(),
                    opts.freeze,
                );
            }
            settled_for += 1;
        } else {
            settled_for = 0;
        }
        if iteration == opts.max_iterations {
            break;
        }

        let target = candidate(&coeffs, &it.gains, opts.freeze)?;
        let cost_limit = it.eval.cost + COST_SLACK * it.eval.cost.abs().max(1.0);
        let mut alpha = 1.0;
        let next = loop {
            let trial = blend(&it.gains, &target, alpha);
            if is_stabilizing_pair(p, &trial) {
                if let Ok(next) = Iterate::new(p, trial) {
                    if next.eval.cost <= cost_limit {
                        break next;
                    }
                }
            }
            alpha *= 0.5;
            if alpha < MIN_DAMPING {
                return Err(Error::DampingExhausted {
                    iteration,
                    damping: alpha * 2.0,
                });
            }
        };
        last_step = gain_step(&it.gains, &next.gains);
        it = next;
    }
    Err(Error::NoConvergence {
        equation: "coupled Sylvester iteration",
        iterations: opts.max_iterations,
        change: last_step,
    })
}

fn finish(
    p: &ProblemInstance,
    it: Iterate,
    coeffs: SylvesterCoefficients,
    cert: Certificate,
    iterations: usize,
    standard: Option<&crate::design::StandardPair>,
    freeze: Freeze,
) -> Result<StationaryReport> {
    let (degenerate_to_standard, standard_cost) = match standard {
        Some(s) => {
            let distance = gain_step(&it.gains, &s.gains());
            let degenerate = distance <= DEGENERACY_TOLERANCE * (1.0 + gain_norm(&s.gains()));
            (degenerate, evaluate(p, &s.gains()).ok().map(|e| e.cost))
        }
        None => (false, None),
    };
    Ok(StationaryReport {
        uniqueness: check_uniqueness(&coeffs)?,
        k: it.gains.k,
        l: it.gains.l,
        iterations,
        grad_norm_k: cert.grad_k,
        grad_norm_l: cert.grad_l,
        sylvester_residual_k: cert.residual_k,
        sylvester_residual_l: cert.residual_l,
        degenerate_to_standard,
        cost: it.eval.cost,
        standard_cost,
        freeze,
    })
}
