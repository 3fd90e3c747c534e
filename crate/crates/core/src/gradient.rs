//! Exact policy gradients of the cost with respect to both gains, in compact
//! and block-expanded form, and a central-difference oracle.

use rayon::prelude::*;

use crate::closedloop::{cost, evaluate, evaluate_blocks, ClosedLoopEvaluation};
use crate::error::{Error, Result};
use crate::mateq::Matrix;
use crate::problem::{GainPair, ProblemInstance};

/// Default relative finite-difference step: `h = 1e-5 · (1 + |entry|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Absolute floor in the denominator of [`max_relative_error`].
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub grad_k: Matrix,
    pub grad_l: Matrix,
}

impl GradientPair {
    pub fn norm_k(&self) -> f64 {
        self.grad_k.norm()
    }
    pub fn norm_l(&self) -> f64 {
        self.grad_l.norm()
    }
}

/// `E_K = R K F̄ - B̂ᵀ S Â` and `E_L = F̂ S Â`; the gradients are
/// `2 E_K Ω F̄ᵀ` and `2 E_L Ω Ĉᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientKernels {
    pub e_k: Matrix,
    pub e_l: Matrix,
}

pub fn kernels(p: &ProblemInstance, g: &GainPair, ev: &ClosedLoopEvaluation) -> GradientKernels {
    let sys = &ev.system;
    let s_a = &ev.s * &sys.a_hat;
    GradientKernels {
        e_k: &p.weights.r * &g.k * &sys.f_bar - sys.b_hat.transpose() * &s_a,
        e_l: &sys.f_hat * s_a,
    }
}

pub(crate) fn compact_from_evaluation(
    p: &ProblemInstance,
    g: &GainPair,
    ev: &ClosedLoopEvaluation,
) -> GradientPair {
    let ker = kernels(p, g, ev);
    let sys = &ev.system;
    GradientPair {
        grad_k: (ker.e_k * &ev.omega * sys.f_bar.transpose()) * 2.0,
        grad_l: (ker.e_l * &ev.omega * sys.c_hat.transpose()) * 2.0,
    }
}

pub fn gradients_compact(p: &ProblemInstance, g: &GainPair) -> Result<GradientPair> {
    let ev = evaluate(p, g)?;
    Ok(compact_from_evaluation(p, g, &ev))
}

/// Gradients assembled from the n×n blocks of `S` and `Ω`:
///
/// ```text
/// ∇_K = 2 (R + BᵀS11B) K Σ22 - 2 BᵀS11A (Ω11 - Ω12) - 2 BᵀS12 (A-LC)(Ω12ᵀ - Ω22)
/// ∇_L = -2 S12ᵀ(A-BK) Ω12 Cᵀ - 2 S12ᵀBK Ω22 Cᵀ - 2 S22 (A-LC) Ω22 Cᵀ
/// ```
pub fn gradients_block(p: &ProblemInstance, g: &GainPair) -> Result<GradientPair> {
    let blocks = evaluate_blocks(p, g)?;
    let (s, o) = (&blocks.s, &blocks.omega);
    let plant = &p.plant;
    let (a, b, c) = (plant.a(), plant.b(), plant.c());
    let bt = b.transpose();
    let acl_k = a - b * &g.k;
    let acl_l = a - &g.l * c;
    let sigma22 = crate::closedloop::sigma22(o);
    let r_k = &p.weights.r + &bt * &s.b11 * b;

    let grad_k = (&r_k * &g.k * &sigma22
        - &bt * &s.b11 * a * (&o.b11 - &o.b12)
        - &bt * &s.b12 * &acl_l * (o.b12.transpose() - &o.b22))
        * 2.0;
    let s12t = s.b12.transpose();
    let grad_l = (-(&s12t * &acl_k * &o.b12 * c.transpose())
        - &s12t * b * &g.k * &o.b22 * c.transpose()
        - &s.b22 * &acl_l * &o.b22 * c.transpose())
        * 2.0;
    Ok(GradientPair { grad_k, grad_l })
}

#[derive(Clone, Copy)]
enum Which {
    K,
    L,
}

/// Central finite differences of the cost, entry by entry, with step
/// `h = step · (1 + |entry|)`, Richardson-extrapolated from `h` and `h/2` to
/// cancel the `O(h²)` truncation term.
pub fn gradients_fd(p: &ProblemInstance, g: &GainPair, step: f64) -> Result<GradientPair> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    cost(p, g)?;
    let entries: Vec<(Which, usize, usize)> = (0..g.k.ncols())
        .flat_map(|j| (0..g.k.nrows()).map(move |i| (Which::K, i, j)))
        .chain((0..g.l.ncols()).flat_map(|j| (0..g.l.nrows()).map(move |i| (Which::L, i, j))))
        .collect();

    let partials: Vec<f64> = entries
        .par_iter()
        .map(|&(which, i, j)| {
            let value = match which {
                Which::K => g.k[(i, j)],
                Which::L => g.l[(i, j)],
            };
            let h = step * (1.0 + value.abs());
            let shifted = |delta: f64| {
                let mut q = g.clone();
                match which {
                    Which::K => q.k[(i, j)] += delta,
                    Which::L => q.l[(i, j)] += delta,
                }
                cost(p, &q).map_err(|e| match e {
                    Error::UndefinedCost { .. } => Error::PerturbationUnstable {
                        gain: match which {
                            Which::K => "K",
                            Which::L => "L",
                        },
                        row: i,
                        col: j,
                    },
                    other => other,
                })
            };
            let central = |h: f64| Ok::<_, Error>((shifted(h)? - shifted(-h)?) / (2.0 * h));
            let coarse = central(h)?;
            let fine = central(0.5 * h)?;
            Ok((4.0 * fine - coarse) / 3.0)
        })
        .collect::<Result<_>>()?;

    let nk = g.k.len();
    Ok(GradientPair {
        grad_k: Matrix::from_column_slice(g.k.nrows(), g.k.ncols(), &partials[..nk]),
        grad_l: Matrix::from_column_slice(g.l.nrows(), g.l.ncols(), &partials[nk..]),
    })
}

/// `max_ij |x_ij - y_ij| / max(|y_ij|, RELATIVE_ERROR_FLOOR)`, with `y` the reference.
pub fn max_relative_error(x: &Matrix, reference: &Matrix) -> f64 {
    x.iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).abs() / b.abs().max(RELATIVE_ERROR_FLOOR))
        .fold(0.0, f64::max)
}

/// Larger of the two per-gain [`max_relative_error`] values.
pub fn max_relative_error_pair(x: &GradientPair, reference: &GradientPair) -> f64 {
    max_relative_error(&x.grad_k, &reference.grad_k)
        .max(max_relative_error(&x.grad_l, &reference.grad_l))
}
