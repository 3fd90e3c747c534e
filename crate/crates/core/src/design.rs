//! The standard pair: the state-feedback LQR gain and the observer gain that
//! minimizes the trace of the accumulated estimation variance.

use crate::error::Result;
use crate::mateq::{control_gain, filter_gain, solve_dare_control, solve_dare_filter, Matrix};
use crate::problem::{CostWeights, GainPair, Plant, ProblemInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct StandardPair {
    pub k_star: Matrix,
    pub l_star: Matrix,
    /// Stabilizing solution of the control Riccati equation.
    pub s_hat_star: Matrix,
    /// Accumulated estimation variance under `L★`.
    pub omega_hat_star: Matrix,
}

impl StandardPair {
    pub fn gains(&self) -> GainPair {
        GainPair::new(self.k_star.clone(), self.l_star.clone())
    }
}

/// `K★ = (R + BᵀŜ★B)⁻¹BᵀŜ★A` together with `Ŝ★`.
pub fn standard_controller(plant: &Plant, weights: &CostWeights) -> Result<(Matrix, Matrix)> {
    let s = solve_dare_control(plant.a(), plant.b(), &weights.q, &weights.r)?;
    let k = control_gain(plant.a(), plant.b(), &weights.r, &s)?;
    Ok((k, s))
}

/// `L★ = AΩ̂Cᵀ(CΩ̂Cᵀ)⁻¹` together with `Ω̂_{L★}`.
pub fn standard_observer(plant: &Plant, e0: &Matrix) -> Result<(Matrix, Matrix)> {
    let omega = solve_dare_filter(plant.a(), plant.c(), e0)?;
    let l = filter_gain(plant.a(), plant.c(), &omega)?;
    Ok((l, omega))
}

/// Both gains, with the observer designed for the instance's `E₀`.
pub fn standard_pair(p: &ProblemInstance) -> Result<StandardPair> {
    let (k_star, s_hat_star) = standard_controller(&p.plant, &p.weights)?;
    let (l_star, omega_hat_star) = standard_observer(&p.plant, &p.e0())?;
    Ok(StandardPair {
        k_star,
        l_star,
        s_hat_star,
        omega_hat_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{self, Correlation};
    use crate::closedloop::accumulated_estimation_variance;
    use crate::problem::{is_stabilizing_k, is_stabilizing_l};
    use crate::sampling::random_instance;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn doyle_standard_pair() {
        let pair = standard_pair(&builtin::doyle_1d(Correlation::General)).unwrap();
        for (got, want) in pair.k_star.iter().zip([4.8768, 4.3773]) {
            assert!((got - want).abs() < 5e-4, "K* entry {got}");
        }
        for (got, want) in pair.l_star.iter().zip([-0.5667, 1.8333]) {
            assert!((got - want).abs() < 5e-4, "L* entry {got}");
        }
    }

    #[test]
    fn zero_dynamics() {
        let plant =
            Plant::new(Matrix::zeros(2, 2), dmatrix![1.0; 0.0], dmatrix![1.0, 0.5]).unwrap();
        let w = CostWeights::new(dmatrix![1.0, 0.2; 0.2, 3.0], dmatrix![0.5]).unwrap();
        let (k, s) = standard_controller(&plant, &w).unwrap();
        assert_relative_eq!(k, Matrix::zeros(1, 2), epsilon = 1e-14);
        assert_relative_eq!(s, w.q, epsilon = 1e-14);
        let e0 = dmatrix![1.0, 0.1; 0.1, 2.0];
        let (l, omega) = standard_observer(&plant, &e0).unwrap();
        assert_relative_eq!(l, Matrix::zeros(2, 1), epsilon = 1e-14);
        assert_relative_eq!(omega, e0, epsilon = 1e-14);
    }

    #[test]
    fn scalar_riccati_oracle() {
        let plant = Plant::new(dmatrix![2.0], dmatrix![1.0], dmatrix![1.0]).unwrap();
        let w = CostWeights::new(dmatrix![1.0], dmatrix![1.0]).unwrap();
        let (k, s) = standard_controller(&plant, &w).unwrap();
        // Positive root of s = 1 + 4s - 4s²/(1+s), by bisection.
        let f = |s: f64| 1.0 + 3.0 * s - 4.0 * s * s / (1.0 + s);
        let (mut lo, mut hi) = (1.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let s_exact = 0.5 * (lo + hi);
        assert_relative_eq!(s[(0, 0)], s_exact, max_relative = 1e-10);
        assert_relative_eq!(
            k[(0, 0)],
            2.0 * s_exact / (1.0 + s_exact),
            max_relative = 1e-10
        );
    }

    #[test]
    fn full_observation_is_deadbeat() {
        let a = dmatrix![1.1, 0.1; 0.0, 1.1];
        let plant = Plant::new(a.clone(), dmatrix![0.0; 0.1], Matrix::identity(2, 2)).unwrap();
        let (l, omega) = standard_observer(&plant, &dmatrix![1.0, 0.3; 0.3, 2.0]).unwrap();
        assert_relative_eq!(l, a, epsilon = 1e-10);
        assert_relative_eq!(omega, dmatrix![1.0, 0.3; 0.3, 2.0], epsilon = 1e-10);
    }

    #[test]
    fn optimality_conditions_on_random_plants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = random_instance(&mut rng, 3, 2, 2);
            let pair = standard_pair(&p).unwrap();
            let (a, b, c) = (p.plant.a(), p.plant.b(), p.plant.c());
            assert!(is_stabilizing_k(&p.plant, &pair.k_star));
            assert!(is_stabilizing_l(&p.plant, &pair.l_star));
            let acl = a - b * &pair.k_star;
            // R K★ = Bᵀ Ŝ★ (A - B K★)
            let stationarity =
                &p.weights.r * &pair.k_star - b.transpose() * &pair.s_hat_star * &acl;
            assert!(stationarity.norm() <= 1e-9 * (1.0 + pair.s_hat_star.norm()));
            // Ŝ★ = Q + K★ᵀRK★ + (A-BK★)ᵀŜ★(A-BK★)
            let completed = &p.weights.q
                + pair.k_star.transpose() * &p.weights.r * &pair.k_star
                + acl.transpose() * &pair.s_hat_star * &acl;
            assert!((completed - &pair.s_hat_star).norm() <= 1e-9 * pair.s_hat_star.norm());
            // (A - L★C) Ω̂ Cᵀ = 0
            let orth = (a - &pair.l_star * c) * &pair.omega_hat_star * c.transpose();
            assert!(orth.norm() <= 1e-9 * (1.0 + pair.omega_hat_star.norm()));
            let omega_l = accumulated_estimation_variance(&p.plant, &pair.l_star, &p.e0()).unwrap();
            assert!((omega_l - &pair.omega_hat_star).norm() <= 1e-9 * pair.omega_hat_star.norm());
        }
    }

    fn assert_observer_minimizes_trace(plant: &Plant, e0: &Matrix, seed: u64) {
        let (l_star, omega_star) = standard_observer(plant, e0).unwrap();
        let best = omega_star.trace();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tested = 0;
        while tested < 1000 {
            let scale: f64 = rng.random_range(0.01..2.0);
            let delta = Matrix::from_fn(plant.n(), plant.d(), |_, _| {
                rng.sample::<f64, _>(StandardNormal) * scale
            });
            let l = &l_star + delta;
            let Ok(omega) = accumulated_estimation_variance(plant, &l, e0) else {
                continue;
            };
            tested += 1;
            assert!(omega.trace() >= best * (1.0 - 1e-12), "L = {l}");
        }
    }

    #[test]
    fn doyle_observer_minimizes_trace() {
        assert_observer_minimizes_trace(&builtin::doyle_1d_plant(), &Matrix::identity(2, 2), 1);
    }

    #[test]
    fn two_output_observer_minimizes_trace() {
        let plant = builtin::doyle_2d_plant();
        let (l_star, _) = standard_observer(&plant, &Matrix::identity(2, 2)).unwrap();
        assert!(is_stabilizing_l(&plant, &l_star));
        assert_observer_minimizes_trace(&plant, &Matrix::identity(2, 2), 2);
    }

    #[test]
    fn e0_override_changes_observer_only() {
        let p = builtin::doyle_1d(Correlation::General);
        let base = standard_pair(&p).unwrap();
        let q = p.clone().with_e0(dmatrix![3.0, 0.5; 0.5, 0.2]).unwrap();
        let other = standard_pair(&q).unwrap();
        assert_eq!(base.k_star, other.k_star);
        assert!((base.l_star - other.l_star).norm() > 1e-3);
    }
}
