//! The augmented closed loop in error coordinates `z̄ = (x, x - ξ)` and the
//! evaluation of its cost.
//!
//! Under gains `(K, L)` the transformed state evolves as `z̄⁺ = Â z̄` with
//!
//! ```text
//! Â = Ā - B̂ K F̄ + F̂ᵀ L Ĉ = [[A - BK, BK], [0, A - LC]]
//! ```
//!
//! and the cost is `J = Tr(S Y) = Tr(Ω Q̂)`, where `S` and `Ω` solve the two
//! Lyapunov equations of the closed loop.

use crate::error::{Error, Result};
use crate::mateq::{
    solve_dlyap, solve_dlyap_dual_transpose, solve_sylvester_affine, spectral_radius, symmetrize,
    Matrix,
};
use crate::problem::{GainPair, Plant, ProblemInstance};

/// Pairs with `ρ(Â) ≥ 1 - STABILITY_MARGIN` have undefined cost.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// 2×2 block partition of a symmetric 2n×2n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub b11: Matrix,
    pub b12: Matrix,
    pub b22: Matrix,
}

impl Blocks {
    pub fn split(m: &Matrix) -> Self {
        let n = m.nrows() / 2;
        Self {
            b11: m.view((0, 0), (n, n)).into_owned(),
            b12: m.view((0, n), (n, n)).into_owned(),
            b22: m.view((n, n), (n, n)).into_owned(),
        }
    }

    pub fn assemble(&self) -> Matrix {
        stack(&self.b11, &self.b12, &self.b12.transpose(), &self.b22)
    }
}

pub(crate) fn stack(m11: &Matrix, m12: &Matrix, m21: &Matrix, m22: &Matrix) -> Matrix {
    let (r1, c1) = m11.shape();
    let (r2, c2) = m22.shape();
    let mut out = Matrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(m11);
    out.view_mut((0, c1), (r1, c2)).copy_from(m12);
    out.view_mut((r1, 0), (r2, c1)).copy_from(m21);
    out.view_mut((r1, c1), (r2, c2)).copy_from(m22);
    out
}

/// Constant selectors of the augmented system plus the gain-dependent
/// closed-loop and stage-cost matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    /// `Â_{K,L}`.
    pub a_hat: Matrix,
    /// `Q̂ = [[Q + KᵀRK, -KᵀRK], [-KᵀRK, KᵀRK]]`.
    pub q_hat: Matrix,
    /// `Ā = diag(A, A)`.
    pub a_bar: Matrix,
    /// `B̂ = [B; 0]`.
    pub b_hat: Matrix,
    /// `Ĉ = [0, -C]`.
    pub c_hat: Matrix,
    /// `F̄ = [I, -I]`.
    pub f_bar: Matrix,
    /// `F̂ = [0, I]`.
    pub f_hat: Matrix,
    /// `T = [[I, 0], [I, -I]]`, mapping `(x, ξ)` to `z̄`.
    pub t: Matrix,
    /// `A - BK - LC`.
    pub controller_dynamics: Matrix,
}

pub fn build_augmented(p: &ProblemInstance, g: &GainPair) -> Result<AugmentedSystem> {
    let plant = &p.plant;
    plant.check_gains(g)?;
    let n = plant.n();
    let (a, b, c) = (plant.a(), plant.b(), plant.c());
    let zn = Matrix::zeros(n, n);
    let eye = Matrix::identity(n, n);

    let a_bar = stack(a, &zn, &zn, a);
    let mut b_hat = Matrix::zeros(2 * n, plant.m());
    b_hat.view_mut((0, 0), (n, plant.m())).copy_from(b);
    let mut c_hat = Matrix::zeros(plant.d(), 2 * n);
    c_hat.view_mut((0, n), (plant.d(), n)).copy_from(&(-c));
    let mut f_bar = Matrix::zeros(n, 2 * n);
    f_bar.view_mut((0, 0), (n, n)).copy_from(&eye);
    f_bar.view_mut((0, n), (n, n)).copy_from(&(-&eye));
    let mut f_hat = Matrix::zeros(n, 2 * n);
    f_hat.view_mut((0, n), (n, n)).copy_from(&eye);
    let t = stack(&eye, &zn, &eye, &(-&eye));

    let a_hat = &a_bar - &b_hat * &g.k * &f_bar + f_hat.transpose() * &g.l * &c_hat;

    let mut q_hat = f_bar.transpose() * g.k.transpose() * &p.weights.r * &g.k * &f_bar;
    let mut q11 = q_hat.view_mut((0, 0), (n, n));
    q11 += &p.weights.q;

    Ok(AugmentedSystem {
        a_hat,
        q_hat: symmetrize(&q_hat),
        a_bar,
        b_hat,
        c_hat,
        f_bar,
        f_hat,
        t,
        controller_dynamics: plant.controller_dynamics(g),
    })
}

/// Value matrix, correlation matrix and cost of a stabilizing gain pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopEvaluation {
    pub system: AugmentedSystem,
    /// `S = Q̂ + ÂᵀSÂ`.
    pub s: Matrix,
    /// `Ω = Y + ÂΩÂᵀ`.
    pub omega: Matrix,
    /// `Σ22 = Ω11 - Ω12 - Ω12ᵀ + Ω22`, accumulated second moment of ξ.
    pub sigma22: Matrix,
    /// `Tr(S Y)`.
    pub cost: f64,
    /// `Tr(Ω Q̂)`; agrees with `cost` up to rounding.
    pub cost_dual: f64,
    /// `ρ(Â)`.
    pub spectral_radius: f64,
}

impl ClosedLoopEvaluation {
    pub fn s_blocks(&self) -> Blocks {
        Blocks::split(&self.s)
    }
    pub fn omega_blocks(&self) -> Blocks {
        Blocks::split(&self.omega)
    }
}

pub(crate) fn sigma22(omega: &Blocks) -> Matrix {
    symmetrize(&(&omega.b11 - &omega.b12 - omega.b12.transpose() + &omega.b22))
}

/// Spectral radius of the closed loop, rejecting pairs outside the
/// stabilizing set (with margin [`STABILITY_MARGIN`]).
pub fn closed_loop_radius(system: &AugmentedSystem) -> Result<f64> {
    let radius = spectral_radius(&system.a_hat)?;
    if !(radius < 1.0 - STABILITY_MARGIN) {
        return Err(Error::UndefinedCost { radius });
    }
    Ok(radius)
}

/// Whether the pair has a well-defined cost.
pub fn is_stabilizing_pair(p: &ProblemInstance, g: &GainPair) -> bool {
    build_augmented(p, g)
        .and_then(|sys| closed_loop_radius(&sys))
        .is_ok()
}

pub fn evaluate(p: &ProblemInstance, g: &GainPair) -> Result<ClosedLoopEvaluation> {
    let system = build_augmented(p, g)?;
    let radius = closed_loop_radius(&system)?;
    let y = p.correlation.y();
    let s = solve_dlyap_dual_transpose(&system.a_hat, &system.q_hat)?;
    let omega = solve_dlyap(&system.a_hat, y)?;
    let cost = (&s * y).trace();
    let cost_dual = (&omega * &system.q_hat).trace();
    let sigma22 = sigma22(&Blocks::split(&omega));
    Ok(ClosedLoopEvaluation {
        system,
        s,
        omega,
        sigma22,
        cost,
        cost_dual,
        spectral_radius: radius,
    })
}

/// Cost only.
pub fn cost(p: &ProblemInstance, g: &GainPair) -> Result<f64> {
    Ok(evaluate(p, g)?.cost)
}

/// `S` and `Ω` obtained block by block from the n×n Lyapunov and Sylvester
/// equations of the partitioned closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEvaluation {
    pub s: Blocks,
    pub omega: Blocks,
}

pub fn evaluate_blocks(p: &ProblemInstance, g: &GainPair) -> Result<BlockEvaluation> {
    let system = build_augmented(p, g)?;
    closed_loop_radius(&system)?;
    let plant = &p.plant;
    let (a, b, c) = (plant.a(), plant.b(), plant.c());
    let r = &p.weights.r;
    let bk = b * &g.k;
    let acl_k = a - &bk;
    let acl_l = a - &g.l * c;
    let krk = g.k.transpose() * r * &g.k;

    // S11 = Q + KᵀRK + (A-BK)ᵀ S11 (A-BK)
    let s11 = solve_dlyap_dual_transpose(&acl_k, &(&p.weights.q + &krk))?;
    // S12 = -KᵀRK + (A-BK)ᵀ S11 BK + (A-BK)ᵀ S12 (A-LC)
    let g12 = -&krk + acl_k.transpose() * &s11 * &bk;
    let s12 = solve_sylvester_affine(&g12, &acl_k.transpose(), &acl_l)?;
    // S22 = KᵀRK + (BK)ᵀS11BK + (BK)ᵀS12(A-LC) + (A-LC)ᵀS12ᵀBK + (A-LC)ᵀ S22 (A-LC)
    let cross = bk.transpose() * &s12 * &acl_l;
    let q22 = &krk + bk.transpose() * &s11 * &bk + &cross + cross.transpose();
    let s22 = solve_dlyap_dual_transpose(&acl_l, &symmetrize(&q22))?;

    let (y11, y12, y22) = (
        p.correlation.y11(),
        p.correlation.y12(),
        p.correlation.y22(),
    );
    // Ω22 = Y22 + (A-LC) Ω22 (A-LC)ᵀ
    let o22 = solve_dlyap(&acl_l, &y22)?;
    // Ω12 = Y12 + (A-BK) Ω12 (A-LC)ᵀ + BK Ω22 (A-LC)ᵀ
    let g_o12 = &y12 + &bk * &o22 * acl_l.transpose();
    let o12 = solve_sylvester_affine(&g_o12, &acl_k, &acl_l.transpose())?;
    // Ω11 = Y11 + (A-BK)Ω11(A-BK)ᵀ + (A-BK)Ω12(BK)ᵀ + BKΩ12ᵀ(A-BK)ᵀ + BKΩ22(BK)ᵀ
    let cross = &acl_k * &o12 * bk.transpose();
    let q11 = &y11 + &cross + cross.transpose() + &bk * &o22 * bk.transpose();
    let o11 = solve_dlyap(&acl_k, &symmetrize(&q11))?;

    Ok(BlockEvaluation {
        s: Blocks {
            b11: s11,
            b12: s12,
            b22: s22,
        },
        omega: Blocks {
            b11: o11,
            b12: o12,
            b22: o22,
        },
    })
}

/// `Ω̂_L = E₀ + (A-LC) Ω̂_L (A-LC)ᵀ`, the accumulated estimation variance.
pub fn accumulated_estimation_variance(plant: &Plant, l: &Matrix, e0: &Matrix) -> Result<Matrix> {
    if l.nrows() != plant.n() || l.ncols() != plant.d() {
        return Err(Error::DimensionMismatch {
            context: "L".into(),
            expected: format!("{}x{}", plant.n(), plant.d()),
            found: format!("{}x{}", l.nrows(), l.ncols()),
        });
    }
    let acl = plant.a() - l * plant.c();
    solve_dlyap(&acl, e0).map_err(|e| match e {
        Error::Unstable { radius, .. } => Error::Unstable {
            context: "observer gain L",
            radius,
        },
        other => other,
    })
}
