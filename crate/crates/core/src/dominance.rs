//! Local gradient dominance around a stationary pair.
//!
//! Inside the radii `r_K`, `r_L` and under the premise `‖Â_{K,L}‖₂ ≤ γ < 1`,
//!
//! ```text
//! J(K, L) - J(K‡, L‡) ≤ ‖∇_K J‖²_F / (2(α_K2 - β_K2)) + ‖∇_L J‖²_F / (2(α_L2 - β_L2)).
//! ```
//!
//! The constants are assembled from spectral norms and extreme eigenvalues of
//! matrices evaluated at the stationary pair. Six free weights `ε₁..ε₆` trade
//! the cross terms between the two gains; [`search_epsilons`] picks them on a
//! coarse logarithmic grid.
//!
//! Collection of the perturbation-loss terms, with `c = 2γ‖Y‖₂/(1-γ²)²`,
//! `bb = ‖B̂‖‖F̄‖`, `ff = ‖F̂‖‖Ĉ‖`:
//!
//! ```text
//! β_K2 = c (C_K1 bb + C_K1 ff ε₃/2 + C_L1 bb ε₄/2)
//! β_L2 = c (C_L1 ff + C_K1 ff/(2ε₃) + C_L1 bb/(2ε₄))
//! β_K3 = c (C_K2 bb + (2/3) C_K2 ff ε₅ + (2/3) C_L2 bb ε₆)
//! β_L3 = c (C_L2 ff + C_K2 ff/(3√ε₅) + C_L2 bb/(3√ε₆))
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::closedloop::{build_augmented, evaluate, ClosedLoopEvaluation};
use crate::error::{Error, Result};
use crate::gradient::{compact_from_evaluation, kernels};
use crate::mateq::{spectral_norm, symmetric_eigenvalues, Matrix};
use crate::problem::{GainPair, ProblemInstance};
use crate::sampling::gaussian_matrix;

/// Gradients at the evaluation pair must be at most this times `1 + |J|`.
pub const STATIONARITY_TOLERANCE: f64 = 1e-7;
/// Grid of the ε search: `EPS_GRID_POINTS` log-spaced values in `[1e-2, 1e2]`.
pub const EPS_GRID_POINTS: usize = 5;
/// Attempts per requested admissible sample before verification gives up.
pub const ATTEMPTS_PER_SAMPLE: usize = 100;

/// Quantities at the stationary pair that do not depend on `ε` or `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceInputs {
    /// `‖Â‡‖₂`.
    pub a_hat_norm: f64,
    /// `J(K‡, L‡)`.
    pub cost: f64,
    /// `‖Y‖₂`.
    pub y_norm: f64,
    /// `‖B̂ᵀ S‡ F̂ᵀ‖₂`.
    pub coupling: f64,
    /// `‖Ĉ Ω F̄ᵀ‖₂`.
    pub cross_correlation: f64,
    /// `‖F̄‖₂`, `‖Ĉ‖₂`, `‖B̂‖₂`, `‖F̂‖₂`.
    pub f_bar_norm: f64,
    pub c_hat_norm: f64,
    pub b_hat_norm: f64,
    pub f_hat_norm: f64,
    /// `‖E_K‡‖₂`, `‖E_L‡‖₂`.
    pub e_k_norm: f64,
    pub e_l_norm: f64,
    /// `‖R + B̂ᵀS‡B̂‖₂` and its smallest eigenvalue.
    pub r_hat_norm: f64,
    pub r_hat_min: f64,
    /// `‖F̂S‡F̂ᵀ‖₂` and its smallest eigenvalue.
    pub s_hat_norm: f64,
    pub s_hat_min: f64,
    /// `λ_min(F̄ Ω F̄ᵀ)`, `λ_min(Ĉ Ω Ĉᵀ)`.
    pub f_omega_min: f64,
    pub c_omega_min: f64,
}

impl DominanceInputs {
    pub fn new(p: &ProblemInstance, stationary: &GainPair) -> Result<Self> {
        let ev = evaluate(p, stationary)?;
        let grad = compact_from_evaluation(p, stationary, &ev);
        let scale = STATIONARITY_TOLERANCE * (1.0 + ev.cost.abs());
        if grad.norm_k() > scale || grad.norm_l() > scale {
            return Err(Error::InvalidArgument(format!(
                "dominance constants need a stationary pair; gradient norms are {:e} and {:e}",
                grad.norm_k(),
                grad.norm_l()
            )));
        }
        Ok(Self::from_evaluation(p, stationary, &ev))
    }

    fn from_evaluation(p: &ProblemInstance, g: &GainPair, ev: &ClosedLoopEvaluation) -> Self {
        let sys = &ev.system;
        let ker = kernels(p, g, ev);
        let r_hat = &p.weights.r + sys.b_hat.transpose() * &ev.s * &sys.b_hat;
        let s_hat = &sys.f_hat * &ev.s * sys.f_hat.transpose();
        let lambda_min = |m: &Matrix| symmetric_eigenvalues(m).first().copied().unwrap_or(0.0);
        Self {
            a_hat_norm: spectral_norm(&sys.a_hat),
            cost: ev.cost,
            y_norm: spectral_norm(p.correlation.y()),
            coupling: spectral_norm(&(sys.b_hat.transpose() * &ev.s * sys.f_hat.transpose())),
            cross_correlation: spectral_norm(&(&sys.c_hat * &ev.omega * sys.f_bar.transpose())),
            f_bar_norm: spectral_norm(&sys.f_bar),
            c_hat_norm: spectral_norm(&sys.c_hat),
            b_hat_norm: spectral_norm(&sys.b_hat),
            f_hat_norm: spectral_norm(&sys.f_hat),
            e_k_norm: spectral_norm(&ker.e_k),
            e_l_norm: spectral_norm(&ker.e_l),
            r_hat_norm: spectral_norm(&r_hat),
            r_hat_min: lambda_min(&r_hat),
            s_hat_norm: spectral_norm(&s_hat),
            s_hat_min: lambda_min(&s_hat),
            f_omega_min: lambda_min(&(&sys.f_bar * &ev.omega * sys.f_bar.transpose())),
            c_omega_min: lambda_min(&(&sys.c_hat * &ev.omega * sys.c_hat.transpose())),
        }
    }

    /// Default premise bound: one percent of the way from `‖Â‡‖₂` to 1.
    pub fn default_gamma(&self) -> f64 {
        self.a_hat_norm + 0.01 * (1.0 - self.a_hat_norm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceCoefficients {
    pub gamma: f64,
    pub eps: [f64; 6],
    /// `2γ‖Y‖₂ / (1-γ²)²`.
    pub c_gamma: f64,
    /// `‖B̂‖₂‖F̄‖₂`.
    pub bb: f64,
    /// `‖F̂‖₂‖Ĉ‖₂`.
    pub ff: f64,
    pub c_k1: f64,
    pub c_l1: f64,
    pub c_k2: f64,
    pub c_l2: f64,
    pub alpha_k2: f64,
    pub alpha_l2: f64,
    pub beta_k2: f64,
    pub beta_k3: f64,
    pub beta_l2: f64,
    pub beta_l3: f64,
    pub r_k: f64,
    pub r_l: f64,
    /// `α_K2 > β_K2` and `α_L2 > β_L2`.
    pub feasible: bool,
}

impl DominanceCoefficients {
    pub fn margin_k(&self) -> f64 {
        self.alpha_k2 - self.beta_k2
    }
    pub fn margin_l(&self) -> f64 {
        self.alpha_l2 - self.beta_l2
    }
    /// `min(α_K2 - β_K2, α_L2 - β_L2)`.
    pub fn margin(&self) -> f64 {
        self.margin_k().min(self.margin_l())
    }
}

/// Coefficients, or the reason they do not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DominanceOutcome {
    NotApplicable {
        reason: String,
        a_hat_norm: f64,
        gamma: f64,
    },
    Computed(DominanceCoefficients),
}

impl DominanceOutcome {
    pub fn coefficients(&self) -> Option<&DominanceCoefficients> {
        match self {
            DominanceOutcome::Computed(c) => Some(c),
            DominanceOutcome::NotApplicable { .. } => None,
        }
    }
}

fn premise(inputs: &DominanceInputs, gamma: f64) -> Option<DominanceOutcome> {
    let reason = if !(gamma < 1.0) {
        format!("gamma = {gamma} is not below 1")
    } else if inputs.a_hat_norm > gamma {
        format!(
            "spectral norm of the closed loop at the stationary pair ({}) exceeds gamma = {gamma}",
            inputs.a_hat_norm
        )
    } else {
        return None;
    };
    Some(DominanceOutcome::NotApplicable {
        reason,
        a_hat_norm: inputs.a_hat_norm,
        gamma,
    })
}

fn assemble(inputs: &DominanceInputs, eps: [f64; 6], gamma: f64) -> DominanceCoefficients {
    let [e1, e2, e3, e4, e5, e6] = eps;
    let d = inputs;
    let x = d.coupling;
    let fc = d.f_bar_norm * d.c_hat_norm;

    let c_k1 = 2.0 * d.f_bar_norm * d.e_k_norm;
    let c_l1 = 2.0 * d.c_hat_norm * d.e_l_norm;
    let c_k2 = d.f_bar_norm.powi(2) * d.r_hat_norm + 2.0 * e1 * fc * x;
    let c_l2 = d.c_hat_norm.powi(2) * d.s_hat_norm + 2.0 / e1 * fc * x;

    let alpha_k2 = d.r_hat_min * d.f_omega_min - e2 * x * d.cross_correlation;
    let alpha_l2 = d.s_hat_min * d.c_omega_min - x * d.cross_correlation / e2;

    let c_gamma = 2.0 * gamma * d.y_norm / (1.0 - gamma * gamma).powi(2);
    let bb = d.b_hat_norm * d.f_bar_norm;
    let ff = d.f_hat_norm * d.c_hat_norm;
    let beta_k2 = c_gamma * (c_k1 * bb + c_k1 * ff * e3 / 2.0 + c_l1 * bb * e4 / 2.0);
    let beta_l2 = c_gamma * (c_l1 * ff + c_k1 * ff / (2.0 * e3) + c_l1 * bb / (2.0 * e4));
    let beta_k3 =
        c_gamma * (c_k2 * bb + c_k2 * ff * (2.0 / 3.0) * e5 + c_l2 * bb * (2.0 / 3.0) * e6);
    let beta_l3 =
        c_gamma * (c_l2 * ff + c_k2 * ff / (3.0 * e5.sqrt()) + c_l2 * bb / (3.0 * e6.sqrt()));

    DominanceCoefficients {
        gamma,
        eps,
        c_gamma,
        bb,
        ff,
        c_k1,
        c_l1,
        c_k2,
        c_l2,
        alpha_k2,
        alpha_l2,
        beta_k2,
        beta_k3,
        beta_l2,
        beta_l3,
        r_k: (alpha_k2 - beta_k2) / (2.0 * beta_k3),
        r_l: (alpha_l2 - beta_l2) / (2.0 * beta_l3),
        feasible: alpha_k2 > beta_k2 && alpha_l2 > beta_l2,
    }
}

fn check_eps(eps: &[f64; 6]) -> Result<()> {
    if eps.iter().all(|e| *e > 0.0 && e.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "all six epsilon weights must be positive, got {eps:?}"
        )))
    }
}

/// Coefficients for fixed `ε` and `γ`. `stationary` must have gradients
/// below [`STATIONARITY_TOLERANCE`] (scale-relative).
pub fn compute_coefficients(
    p: &ProblemInstance,
    stationary: &GainPair,
    eps: [f64; 6],
    gamma: f64,
) -> Result<DominanceOutcome> {
    check_eps(&eps)?;
    let inputs = DominanceInputs::new(p, stationary)?;
    Ok(coefficients_from_inputs(&inputs, eps, gamma))
}

pub fn coefficients_from_inputs(
    inputs: &DominanceInputs,
    eps: [f64; 6],
    gamma: f64,
) -> DominanceOutcome {
    premise(inputs, gamma)
        .unwrap_or_else(|| DominanceOutcome::Computed(assemble(inputs, eps, gamma)))
}

/// `EPS_GRID_POINTS` log-spaced values from `1e-2` to `1e2`.
pub fn eps_grid() -> Vec<f64> {
    let k = EPS_GRID_POINTS - 1;
    (0..EPS_GRID_POINTS)
        .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / k as f64))
        .collect()
}

/// Exhaustive search over the ε grid, maximizing `min(α_K2 - β_K2, α_L2 - β_L2)`
/// and breaking ties by `min(r_K, r_L)`. `gamma` defaults to
/// [`DominanceInputs::default_gamma`].
pub fn search_epsilons(inputs: &DominanceInputs, gamma: Option<f64>) -> DominanceOutcome {
    let gamma = gamma.unwrap_or_else(|| inputs.default_gamma());
    if let Some(na) = premise(inputs, gamma) {
        return na;
    }
    let grid = eps_grid();
    let g = grid.len();
    let mut best: Option<DominanceCoefficients> = None;
    for idx in 0..g.pow(6) {
        let mut eps = [0.0; 6];
        let mut rest = idx;
        for e in eps.iter_mut() {
            *e = grid[rest % g];
            rest /= g;
        }
        let c = assemble(inputs, eps, gamma);
        let better = match &best {
            None => true,
            Some(b) => {
                let (m, bm) = (c.margin(), b.margin());
                m > bm || (m == bm && c.r_k.min(c.r_l) > b.r_k.min(b.r_l))
            }
        };
        if better {
            best = Some(c);
        }
    }
    DominanceOutcome::Computed(best.expect("grid is non-empty"))
}

/// Left and right side of the dominance inequality at one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceGap {
    /// `J(K, L) - J(K‡, L‡)`.
    pub cost_gap: f64,
    /// Gradient bound on the right-hand side.
    pub bound: f64,
}

impl DominanceGap {
    pub fn slack(&self) -> f64 {
        self.bound - self.cost_gap
    }
}

pub fn dominance_gap(
    p: &ProblemInstance,
    stationary_cost: f64,
    coeffs: &DominanceCoefficients,
    g: &GainPair,
) -> Result<DominanceGap> {
    let ev = evaluate(p, g)?;
    let grad = compact_from_evaluation(p, g, &ev);
    Ok(DominanceGap {
        cost_gap: ev.cost - stationary_cost,
        bound: grad.norm_k().powi(2) / (2.0 * coeffs.margin_k())
            + grad.norm_l().powi(2) / (2.0 * coeffs.margin_l()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub requested: usize,
    pub attempts: usize,
    /// Stabilizing in-radius samples satisfying `‖Â‖₂ ≤ γ`.
    pub admissible: usize,
    /// Samples excluded because `‖Â‖₂ > γ` (including destabilizing ones).
    pub premise_excluded: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub mean_slack: f64,
    pub max_slack: f64,
    /// Largest `cost_gap / bound` over admissible samples with positive bound.
    pub max_ratio: f64,
}

enum Sample {
    Excluded,
    Admissible(DominanceGap),
}

fn ball_sample<R: Rng>(rng: &mut R, rows: usize, cols: usize, radius: f64) -> Matrix {
    let dir = gaussian_matrix(rng, rows, cols);
    let norm = dir.norm().max(f64::MIN_POSITIVE);
    let u: f64 = rng.random();
    dir * (radius * u.powf(1.0 / (rows * cols) as f64) / norm)
}

/// Samples `(ΔK, ΔL)` uniformly from the Frobenius balls of radii `r_K`, `r_L`,
/// keeps stabilizing pairs with `‖Â‖₂ ≤ γ`, and checks the inequality on
/// `samples` of them. Sample `i` draws from stream `i` of a ChaCha generator
/// seeded with `seed`, so results do not depend on scheduling.
pub fn verify_dominance(
    p: &ProblemInstance,
    stationary: &GainPair,
    coeffs: &DominanceCoefficients,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if !coeffs.feasible || !(coeffs.r_k > 0.0 && coeffs.r_l > 0.0) {
        return Err(Error::InvalidArgument(
            "dominance verification needs feasible coefficients with positive radii".into(),
        ));
    }
    let j_star = evaluate(p, stationary)?.cost;
    let max_attempts = samples.max(1) * ATTEMPTS_PER_SAMPLE;

    let draw = |i: usize| -> Result<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let g = GainPair::new(
            &stationary.k
                + ball_sample(
                    &mut rng,
                    stationary.k.nrows(),
                    stationary.k.ncols(),
                    coeffs.r_k,
                ),
            &stationary.l
                + ball_sample(
                    &mut rng,
                    stationary.l.nrows(),
                    stationary.l.ncols(),
                    coeffs.r_l,
                ),
        );
        let sys = build_augmented(p, &g)?;
        if spectral_norm(&sys.a_hat) > coeffs.gamma {
            return Ok(Sample::Excluded);
        }
        Ok(Sample::Admissible(dominance_gap(p, j_star, coeffs, &g)?))
    };

    let mut gaps = Vec::with_capacity(samples);
    let mut excluded = 0;
    let mut attempts = 0;
    while gaps.len() < samples && attempts < max_attempts {
        let batch = (samples - gaps.len()).max(64).min(max_attempts - attempts);
        let results: Vec<Sample> = (attempts..attempts + batch)
            .into_par_iter()
            .map(draw)
            .collect::<Result<_>>()?;
        attempts += batch;
        for r in results {
            match r {
                Sample::Excluded => excluded += 1,
                Sample::Admissible(gap) if gaps.len() < samples => gaps.push(gap),
                Sample::Admissible(_) => {}
            }
        }
    }
    if gaps.is_empty() {
        return Err(Error::NoAdmissibleSamples { attempts });
    }

    let slacks: Vec<f64> = gaps.iter().map(DominanceGap::slack).collect();
    // A violation must exceed rounding in the cost difference.
    let rounding = 1e-12 * (1.0 + j_star.abs());
    Ok(VerificationReport {
        requested: samples,
        attempts,
        admissible: gaps.len(),
        premise_excluded: excluded,
        violations: slacks.iter().filter(|&&s| s < -rounding).count(),
        min_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
        mean_slack: slacks.iter().sum::<f64>() / slacks.len() as f64,
        max_slack: slacks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_ratio: gaps
            .iter()
            .filter(|g| g.bound > 0.0)
            .map(|g| g.cost_gap / g.bound)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{self, Correlation};
    use crate::problem::{CostWeights, InitialCorrelation, Plant};
    use crate::stationary::{solve_stationary, StationaryOptions};
    use nalgebra::dmatrix;

    fn scalar_instance(a: f64, q: f64, r: f64, y: Matrix) -> ProblemInstance {
        ProblemInstance::new(
            Plant::new(dmatrix![a], dmatrix![1.0], dmatrix![1.0]).unwrap(),
            CostWeights::new(dmatrix![q], dmatrix![r]).unwrap(),
            InitialCorrelation::new(y).unwrap(),
        )
        .unwrap()
    }

    fn feasible_instance() -> ProblemInstance {
        scalar_instance(0.2, 1.0, 5.0, dmatrix![1.0, 0.1; 0.1, 1.0])
    }

    fn stationary(p: &ProblemInstance) -> GainPair {
        solve_stationary(p, None, &StationaryOptions::default())
            .unwrap()
            .gains()
    }

    #[test]
    fn doyle_premise_is_not_met() {
        let p = builtin::doyle_1d(Correlation::General);
        let g = stationary(&p);
        let inputs = DominanceInputs::new(&p, &g).unwrap();
        assert!(inputs.a_hat_norm > 1.0);
        let outcome = search_epsilons(&inputs, None);
        assert!(matches!(outcome, DominanceOutcome::NotApplicable { .. }));
    }

    #[test]
    fn gamma_outside_range_is_not_applicable() {
        let p = feasible_instance();
        let g = stationary(&p);
        let inputs = DominanceInputs::new(&p, &g).unwrap();
        assert!(matches!(
            compute_coefficients(&p, &g, [1.0; 6], 1.0).unwrap(),
            DominanceOutcome::NotApplicable { .. }
        ));
        assert!(matches!(
            compute_coefficients(&p, &g, [1.0; 6], inputs.a_hat_norm * 0.5).unwrap(),
            DominanceOutcome::NotApplicable { .. }
        ));
        assert!(compute_coefficients(&p, &g, [1.0, 1.0, 0.0, 1.0, 1.0, 1.0], 0.9).is_err());
    }

    #[test]
    fn non_stationary_pair_is_rejected() {
        let p = feasible_instance();
        let g = stationary(&p);
        let off = GainPair::new(&g.k * 1.1, g.l.clone());
        assert!(matches!(
            compute_coefficients(&p, &off, [1.0; 6], 0.9),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn feasible_instance_verifies() {
        let p = feasible_instance();
        let g = stationary(&p);
        let inputs = DominanceInputs::new(&p, &g).unwrap();
        let outcome = search_epsilons(&inputs, None);
        let c = outcome.coefficients().expect("premise holds").clone();
        assert!(c.feasible, "{c:?}");
        assert!(c.r_k > 0.0 && c.r_l > 0.0);
        let report = verify_dominance(&p, &g, &c, 1000, 7).unwrap();
        assert_eq!(report.admissible, 1000);
        assert_eq!(report.violations, 0, "{report:?}");
        assert!(report.min_slack >= -1e-12 * (1.0 + inputs.cost));
        assert_eq!(report, verify_dominance(&p, &g, &c, 1000, 7).unwrap());
    }

    #[test]
    fn infeasible_instance_is_reported() {
        let p = scalar_instance(0.5, 1.0, 1.0, dmatrix![1.0, 0.2; 0.2, 0.5]);
        let g = stationary(&p);
        let inputs = DominanceInputs::new(&p, &g).unwrap();
        match search_epsilons(&inputs, None) {
            DominanceOutcome::Computed(c) => {
                assert!(!c.feasible);
                assert!(verify_dominance(&p, &g, &c, 10, 1).is_err());
            }
            DominanceOutcome::NotApplicable { .. } => {}
        }
    }

    #[test]
    fn zero_perturbation_is_tight() {
        let p = feasible_instance();
        let g = stationary(&p);
        let inputs = DominanceInputs::new(&p, &g).unwrap();
        let c = search_epsilons(&inputs, None)
            .coefficients()
            .unwrap()
            .clone();
        let gap = dominance_gap(&p, inputs.cost, &c, &g).unwrap();
        assert_eq!(gap.cost_gap, 0.0);
        assert!(gap.bound.abs() <= 1e-20);
    }

    #[test]
    fn radii_follow_from_alpha_and_beta() {
        let p = feasible_instance();
        let g = stationary(&p);
        let inputs = DominanceInputs::new(&p, &g).unwrap();
        for eps in [[1.0; 6], [0.01, 0.1, 1.0, 10.0, 100.0, 0.5]] {
            let c = coefficients_from_inputs(&inputs, eps, inputs.default_gamma());
            let c = c.coefficients().unwrap();
            assert_eq!(c.r_k, (c.alpha_k2 - c.beta_k2) / (2.0 * c.beta_k3));
            assert_eq!(c.r_l, (c.alpha_l2 - c.beta_l2) / (2.0 * c.beta_l3));
        }
    }

    #[test]
    fn alpha_monotone_in_second_weight() {
        let p = feasible_instance();
        let g = stationary(&p);
        let inputs = DominanceInputs::new(&p, &g).unwrap();
        let gamma = inputs.default_gamma();
        let lo = assemble(&inputs, [1.0, 0.5, 1.0, 1.0, 1.0, 1.0], gamma);
        let hi = assemble(&inputs, [1.0, 2.0, 1.0, 1.0, 1.0, 1.0], gamma);
        assert!(hi.alpha_k2 < lo.alpha_k2);
        assert!(hi.alpha_l2 > lo.alpha_l2);
    }

    #[test]
    fn grid_is_logarithmic() {
        let grid = eps_grid();
        assert_eq!(grid.len(), 5);
        for (got, want) in grid.iter().zip([0.01, 0.1, 1.0, 10.0, 100.0]) {
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }
}
