//! Dense matrix-equation solvers.
//!
//! Lyapunov and Sylvester equations are solved by Kronecker vectorization
//! followed by an LU solve, which is exact up to rounding for the small
//! systems (state dimension up to about ten) this crate targets. The two
//! discrete algebraic Riccati equations are solved by iterating the Riccati
//! recursion to its fixed point.
//!
//! All vectorizations are column-major, matching nalgebra's storage:
//! `vec(M X N) = (Nᵀ ⊗ M) vec(X)`.

use nalgebra::{Cholesky, Complex, DMatrix, Schur, SymmetricEigen};

use crate::error::{dims, Error, Result};

/// Dense real matrix. Every matrix symbol of the problem lives in one of these.
pub type Matrix = DMatrix<f64>;

/// Iteration controls shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual threshold accepted for a solved equation.
    pub tolerance: f64,
    /// Iteration cap for the Riccati recursions.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

impl SolverOptions {
    pub fn new(tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(tolerance > 0.0) || !tolerance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance must be positive and finite, got {tolerance}"
            )));
        }
        if max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(Self {
            tolerance,
            max_iterations,
        })
    }
}

/// Relative change below which the Riccati recursion is considered converged.
const RICCATI_STEP_TOL: f64 = 1e-13;
/// Number of iterations without improvement after which a Riccati recursion
/// sitting on its rounding floor is accepted (when its residual is small).
const RICCATI_PLATEAU: usize = 1_000;
/// Sylvester uniqueness: `min |λ_i μ_j - 1|` below this is an error.
pub const SYLVESTER_SINGULARITY: f64 = 1e-10;
/// Condition number above which a positive definite inverse is rejected.
pub const MAX_CONDITION: f64 = 1e12;

fn ensure_square(m: &Matrix, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            context,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn ensure_shape(m: &Matrix, rows: usize, cols: usize, context: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::DimensionMismatch {
            context: context.to_string(),
            expected: dims(rows, cols),
            found: dims(m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Eigenvalues of a real square matrix (real Schur form).
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    ensure_square(m, "eigenvalues")?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000).ok_or(Error::Eigen {
        context: "eigenvalues",
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    ensure_square(m, "spectral_radius")?;
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let sym = symmetrize(m);
    let mut ev: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Inverse of a symmetric positive definite matrix together with its
/// spectral condition number.
#[derive(Debug, Clone)]
pub struct PdInverse {
    pub inverse: Matrix,
    pub condition: f64,
}

/// Inverts a symmetric positive definite matrix through its Cholesky factor.
/// Fails when the matrix is not PD or its condition number exceeds
/// [`MAX_CONDITION`].
pub fn pd_inverse(m: &Matrix, what: &'static str) -> Result<PdInverse> {
    ensure_square(m, what)?;
    let sym = symmetrize(m);
    let ev = symmetric_eigenvalues(&sym);
    let (lo, hi) = match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => {
            return Ok(PdInverse {
                inverse: Matrix::zeros(0, 0),
                condition: 1.0,
            })
        }
    };
    if !(lo > 0.0) {
        return Err(Error::Singular { what });
    }
    let condition = hi / lo;
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { what, condition });
    }
    let chol = Cholesky::new(sym).ok_or(Error::Singular { what })?;
    Ok(PdInverse {
        inverse: symmetrize(&chol.inverse()),
        condition,
    })
}

fn relative_residual(residual: &Matrix, solution: &Matrix) -> f64 {
    residual.norm() / solution.norm().max(1.0)
}

fn check_residual(equation: &'static str, residual: f64, opts: &SolverOptions) -> Result<()> {
    if residual.is_finite() && residual <= opts.tolerance {
        Ok(())
    } else {
        Err(Error::Residual {
            equation,
            residual,
            tolerance: opts.tolerance,
        })
    }
}

/// Solves `(I - op) vec(X) = vec(G)` with `op` already assembled.
fn solve_vectorized(op: Matrix, g: &Matrix, what: &'static str) -> Result<Matrix> {
    let size = op.nrows();
    let lhs = Matrix::identity(size, size) - op;
    let rhs = nalgebra::DVector::from_column_slice(g.as_slice());
    let sol = lhs.lu().solve(&rhs).ok_or(Error::Singular { what })?;
    Ok(Matrix::from_column_slice(
        g.nrows(),
        g.ncols(),
        sol.as_slice(),
    ))
}

/// Solves `P = Q + Aᵀ P A` for stable `A`.
pub fn solve_dlyap_dual_transpose(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    solve_dlyap_dual_transpose_with(a, q, &SolverOptions::default())
}

pub fn solve_dlyap_dual_transpose_with(
    a: &Matrix,
    q: &Matrix,
    opts: &SolverOptions,
) -> Result<Matrix> {
    ensure_square(a, "solve_dlyap_dual_transpose")?;
    ensure_shape(q, a.nrows(), a.nrows(), "solve_dlyap_dual_transpose: q")?;
    let radius = spectral_radius(a)?;
    if radius >= 1.0 {
        return Err(Error::Unstable {
            context: "solve_dlyap_dual_transpose",
            radius,
        });
    }
    let at = a.transpose();
    let p = symmetrize(&solve_vectorized(
        at.kronecker(&at),
        q,
        "discrete Lyapunov operator",
    )?);
    let residual = relative_residual(&(&p - q - &at * &p * a), &p);
    check_residual("discrete Lyapunov equation", residual, opts)?;
    Ok(p)
}

/// Solves `X = Q + A X Aᵀ` for stable `A`.
pub fn solve_dlyap(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    solve_dlyap_with(a, q, &SolverOptions::default())
}

pub fn solve_dlyap_with(a: &Matrix, q: &Matrix, opts: &SolverOptions) -> Result<Matrix> {
    ensure_square(a, "solve_dlyap")?;
    ensure_shape(q, a.nrows(), a.nrows(), "solve_dlyap: q")?;
    let radius = spectral_radius(a)?;
    if radius >= 1.0 {
        return Err(Error::Unstable {
            context: "solve_dlyap",
            radius,
        });
    }
    let x = symmetrize(&solve_vectorized(
        a.kronecker(a),
        q,
        "discrete Lyapunov operator",
    )?);
    let residual = relative_residual(&(&x - q - a * &x * a.transpose()), &x);
    check_residual("discrete Lyapunov equation", residual, opts)?;
    Ok(x)
}

/// `min_{i,j} |λ_i(M) μ_j(N) - 1|`; equals 1 when either side is empty.
pub fn sylvester_margin(m: &Matrix, n: &Matrix) -> Result<f64> {
    let lm = eigenvalues(m)?;
    let ln = eigenvalues(n)?;
    let one = Complex::new(1.0, 0.0);
    let mut margin = f64::INFINITY;
    for l in &lm {
        for mu in &ln {
            margin = margin.min((l * mu - one).norm());
        }
    }
    Ok(if margin.is_finite() { margin } else { 1.0 })
}

/// Solves the affine Sylvester equation `X = G + M X N`.
pub fn solve_sylvester_affine(g: &Matrix, m: &Matrix, n: &Matrix) -> Result<Matrix> {
    solve_sylvester_affine_with(g, m, n, &SolverOptions::default())
}

pub fn solve_sylvester_affine_with(
    g: &Matrix,
    m: &Matrix,
    n: &Matrix,
    opts: &SolverOptions,
) -> Result<Matrix> {
    ensure_square(m, "solve_sylvester_affine: m")?;
    ensure_square(n, "solve_sylvester_affine: n")?;
    ensure_shape(g, m.nrows(), n.nrows(), "solve_sylvester_affine: g")?;
    let margin = sylvester_margin(m, n)?;
    if margin < SYLVESTER_SINGULARITY {
        return Err(Error::NotUniquelySolvable { margin });
    }
    let x = solve_vectorized(n.transpose().kronecker(m), g, "Sylvester operator")?;
    let residual = relative_residual(&(&x - g - m * &x * n), &x);
    check_residual("Sylvester equation", residual, opts)?;
    Ok(x)
}

/// Tracks convergence of a matrix fixed-point recursion.
struct FixedPoint {
    best_change: f64,
    since_best: usize,
}

enum Progress {
    Converged,
    Plateau,
    Continue,
}

impl FixedPoint {
    fn new() -> Self {
        Self {
            best_change: f64::INFINITY,
            since_best: 0,
        }
    }

    fn step(&mut self, change: f64) -> Progress {
        if change <= RICCATI_STEP_TOL {
            return Progress::Converged;
        }
        if change < self.best_change {
            self.best_change = change;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        if self.since_best >= RICCATI_PLATEAU {
            Progress::Plateau
        } else {
            Progress::Continue
        }
    }
}

/// Gain `(R + Bᵀ P B)⁻¹ Bᵀ P A` induced by a control Riccati iterate.
pub(crate) fn control_gain(a: &Matrix, b: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let bt_p = b.transpose() * p;
    let rk = r + &bt_p * b;
    let chol = Cholesky::new(symmetrize(&rk)).ok_or(Error::Singular {
        what: "R + B^T S B",
    })?;
    Ok(chol.solve(&(bt_p * a)))
}

/// Gain `A Ω Cᵀ (C Ω Cᵀ)⁻¹` induced by a filter Riccati iterate.
pub(crate) fn filter_gain(a: &Matrix, c: &Matrix, omega: &Matrix) -> Result<Matrix> {
    let c_omega = c * omega;
    let s = &c_omega * c.transpose();
    let chol = Cholesky::new(symmetrize(&s)).ok_or(Error::Singular {
        what: "C Omega C^T",
    })?;
    // A Ω Cᵀ S⁻¹ = (S⁻¹ C Ω Aᵀ)ᵀ
    Ok(chol.solve(&(c_omega * a.transpose())).transpose())
}

fn control_riccati_map(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    p: &Matrix,
) -> Result<Matrix> {
    let k = control_gain(a, b, r, p)?;
    let at_p = a.transpose() * p;
    Ok(symmetrize(&(q + &at_p * a - &at_p * b * k)))
}

fn filter_riccati_map(a: &Matrix, c: &Matrix, e0: &Matrix, omega: &Matrix) -> Result<Matrix> {
    let l = filter_gain(a, c, omega)?;
    let a_omega = a * omega;
    Ok(symmetrize(
        &(e0 + &a_omega * a.transpose() - l * c * a_omega.transpose()),
    ))
}

fn iterate_riccati<F>(
    start: &Matrix,
    equation: &'static str,
    opts: &SolverOptions,
    map: F,
) -> Result<Matrix>
where
    F: Fn(&Matrix) -> Result<Matrix>,
{
    let mut current = start.clone();
    let mut tracker = FixedPoint::new();
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let next = map(&current)?;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NoConvergence {
                equation,
                iterations: opts.max_iterations,
                change: f64::INFINITY,
            });
        }
        change = (&next - &current).norm() / next.norm().max(f64::MIN_POSITIVE);
        current = next;
        match tracker.step(change) {
            Progress::Converged => return Ok(current),
            Progress::Plateau => {
                let residual = relative_residual(&(map(&current)? - &current), &current);
                if residual <= opts.tolerance {
                    return Ok(current);
                }
                return Err(Error::NoConvergence {
                    equation,
                    iterations: opts.max_iterations,
                    change,
                });
            }
            Progress::Continue => {}
        }
    }
    Err(Error::NoConvergence {
        equation,
        iterations: opts.max_iterations,
        change,
    })
}

/// Stabilizing solution of the control Riccati equation
/// `S = Q + AᵀSA - AᵀSB (R + BᵀSB)⁻¹ BᵀSA`, iterated from `S₀ = Q`.
pub fn solve_dare_control(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    solve_dare_control_with(a, b, q, r, &SolverOptions::default())
}

pub fn solve_dare_control_with(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    opts: &SolverOptions,
) -> Result<Matrix> {
    ensure_square(a, "solve_dare_control: a")?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_dare_control: b".into(),
            expected: format!("{n} rows"),
            found: dims(b.nrows(), b.ncols()),
        });
    }
    ensure_shape(q, n, n, "solve_dare_control: q")?;
    ensure_shape(r, b.ncols(), b.ncols(), "solve_dare_control: r")?;
    pd_inverse(r, "R")?;

    let s = iterate_riccati(q, "control Riccati recursion", opts, |p| {
        control_riccati_map(a, b, q, r, p)
    })?;
    let residual = relative_residual(&(control_riccati_map(a, b, q, r, &s)? - &s), &s);
    check_residual("control Riccati equation", residual, opts)?;
    let k = control_gain(a, b, r, &s)?;
    let radius = spectral_radius(&(a - b * k))?;
    if radius >= 1.0 {
        return Err(Error::Unstable {
            context: "control Riccati gain",
            radius,
        });
    }
    Ok(s)
}

/// Positive definite solution of the filter Riccati equation
/// `Ω = E₀ + AΩAᵀ - AΩCᵀ (CΩCᵀ)⁻¹ CΩAᵀ`, iterated from `Ω₀ = E₀`.
pub fn solve_dare_filter(a: &Matrix, c: &Matrix, e0: &Matrix) -> Result<Matrix> {
    solve_dare_filter_with(a, c, e0, &SolverOptions::default())
}

pub fn solve_dare_filter_with(
    a: &Matrix,
    c: &Matrix,
    e0: &Matrix,
    opts: &SolverOptions,
) -> Result<Matrix> {
    ensure_square(a, "solve_dare_filter: a")?;
    let n = a.nrows();
    if c.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_dare_filter: c".into(),
            expected: format!("{n} columns"),
            found: dims(c.nrows(), c.ncols()),
        });
    }
    ensure_shape(e0, n, n, "solve_dare_filter: e0")?;
    pd_inverse(e0, "E0")?;

    let omega = iterate_riccati(e0, "filter Riccati recursion", opts, |w| {
        filter_riccati_map(a, c, e0, w)
    })?;
    let residual = relative_residual(&(filter_riccati_map(a, c, e0, &omega)? - &omega), &omega);
    check_residual("filter Riccati equation", residual, opts)?;
    let l = filter_gain(a, c, &omega)?;
    let radius = spectral_radius(&(a - l * c))?;
    if radius >= 1.0 {
        return Err(Error::Unstable {
            context: "filter Riccati gain",
            radius,
        });
    }
    Ok(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    fn lyap_series(a: &Matrix, q: &Matrix, transpose: bool) -> Matrix {
        let rho = spectral_radius(a).unwrap();
        let horizon = ((1e-14f64).ln() / (rho * rho).ln()).ceil() as usize + 50;
        let mut acc = Matrix::zeros(a.nrows(), a.ncols());
        let mut term = q.clone();
        for _ in 0..horizon {
            acc += &term;
            term = if transpose {
                a.transpose() * term * a
            } else {
                a * term * a.transpose()
            };
        }
        acc
    }

    fn sylvester_series(g: &Matrix, m: &Matrix, n: &Matrix) -> Matrix {
        let mut acc = Matrix::zeros(g.nrows(), g.ncols());
        let mut term = g.clone();
        for _ in 0..2000 {
            acc += &term;
            term = m * term * n;
        }
        acc
    }

    /// Scales a matrix so that its spectral radius equals `target`.
    fn with_radius(m: Matrix, target: f64) -> Matrix {
        let rho = spectral_radius(&m).unwrap();
        if rho == 0.0 {
            m
        } else {
            m * (target / rho)
        }
    }

    #[test]
    fn spectral_radius_examples() {
        assert_relative_eq!(spectral_radius(&Matrix::identity(2, 2)).unwrap(), 1.0);
        let tri = dmatrix![1.1, 0.1; 0.0, 1.1];
        assert_relative_eq!(spectral_radius(&tri).unwrap(), 1.1, epsilon = 1e-12);
        let rot = dmatrix![0.0, 1.0; -1.0, 0.0];
        assert_relative_eq!(spectral_radius(&rot).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(
            spectral_radius(&Matrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn dlyap_transpose_examples() {
        let q = dmatrix![2.0, 0.5; 0.5, 1.0];
        let p = solve_dlyap_dual_transpose(&Matrix::zeros(2, 2), &q).unwrap();
        assert_relative_eq!(p, q, epsilon = 1e-15);

        let p = solve_dlyap_dual_transpose(&dmatrix![0.5], &dmatrix![1.0]).unwrap();
        assert_relative_eq!(p[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);

        assert!(matches!(
            solve_dlyap_dual_transpose(&dmatrix![1.1], &dmatrix![1.0]),
            Err(Error::Unstable { .. })
        ));
        assert!(matches!(
            solve_dlyap_dual_transpose(&dmatrix![0.5], &Matrix::identity(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dlyap_examples() {
        let q = dmatrix![3.0];
        assert_relative_eq!(solve_dlyap(&Matrix::zeros(1, 1), &q).unwrap()[(0, 0)], 3.0);
        assert_relative_eq!(
            solve_dlyap(&dmatrix![0.5], &q).unwrap()[(0, 0)],
            4.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn dlyap_doyle_closed_loop_matches_series() {
        // A - B K★ for the 1-D Doyle plant; K★ frozen from the Riccati solution.
        let a = dmatrix![1.1, 0.1; 0.0, 1.1];
        let b = dmatrix![0.0; 0.1];
        let k = dmatrix![4.876767562, 4.377343543];
        let acl = &a - &b * &k;
        let q = Matrix::identity(2, 2) * 0.25 + k.transpose() * dmatrix![0.2] * &k;
        let p = solve_dlyap_dual_transpose(&acl, &q).unwrap();
        let series = lyap_series(&acl, &q, true);
        assert!((&p - &series).norm() <= 1e-9 * series.norm().max(1.0));
    }

    #[test]
    fn sylvester_examples() {
        let g = dmatrix![1.0, 2.0; 3.0, 4.0];
        let m = dmatrix![0.3, 0.1; 0.0, 0.2];
        let x = solve_sylvester_affine(&g, &Matrix::zeros(2, 2), &m).unwrap();
        assert_relative_eq!(x, g);
        let x = solve_sylvester_affine(&g, &m, &Matrix::zeros(2, 2)).unwrap();
        assert_relative_eq!(x, g);
        let x = solve_sylvester_affine(&dmatrix![1.0], &dmatrix![0.5], &dmatrix![0.5]).unwrap();
        assert_relative_eq!(x[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn sylvester_rejects_resonant_pair() {
        let err =
            solve_sylvester_affine(&dmatrix![1.0], &dmatrix![2.0], &dmatrix![0.5]).unwrap_err();
        assert!(matches!(err, Error::NotUniquelySolvable { .. }));
        // Rectangular unknown with mismatched coefficient.
        assert!(matches!(
            solve_sylvester_affine(
                &Matrix::zeros(2, 3),
                &Matrix::zeros(2, 2),
                &Matrix::zeros(2, 2)
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dare_control_examples() {
        let q = dmatrix![1.0, 0.0; 0.0, 2.0];
        let s = solve_dare_control(
            &Matrix::zeros(2, 2),
            &dmatrix![1.0; 0.0],
            &q,
            &dmatrix![1.0],
        )
        .unwrap();
        assert_relative_eq!(s, q, epsilon = 1e-14);

        // s = 1 + 4s - 4s²/(1+s) reduces to s² - 4s - 1 = 0, positive root 2 + √5.
        let f = |s: f64| 1.0 + 4.0 * s - 4.0 * s * s / (1.0 + s) - s;
        let (mut lo, mut hi) = (1.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let s = solve_dare_control(
            &dmatrix![2.0],
            &dmatrix![1.0],
            &dmatrix![1.0],
            &dmatrix![1.0],
        )
        .unwrap();
        assert_relative_eq!(s[(0, 0)], 0.5 * (lo + hi), epsilon = 1e-10);
        assert_relative_eq!(s[(0, 0)], 2.0 + 5f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn dare_control_completed_square_form() {
        let a = dmatrix![1.1, 0.1; 0.0, 1.1];
        let b = dmatrix![0.0; 0.1];
        let q = Matrix::identity(2, 2) * 0.25;
        let r = dmatrix![0.2];
        let s = solve_dare_control(&a, &b, &q, &r).unwrap();
        let k = control_gain(&a, &b, &r, &s).unwrap();
        let acl = &a - &b * &k;
        let rhs = &q + k.transpose() * &r * &k + acl.transpose() * &s * &acl;
        assert!((&s - rhs).norm() <= 1e-9 * s.norm());
    }

    #[test]
    fn dare_control_rejects_indefinite_r() {
        let err = solve_dare_control(
            &dmatrix![0.5],
            &dmatrix![1.0],
            &dmatrix![1.0],
            &dmatrix![-1.0],
        );
        assert!(matches!(err, Err(Error::Singular { .. })));
    }

    #[test]
    fn dare_filter_examples() {
        let a = dmatrix![1.1, 0.1; 0.0, 1.1];
        let e0 = dmatrix![2.0, 0.3; 0.3, 1.0];
        let omega = solve_dare_filter(&a, &Matrix::identity(2, 2), &e0).unwrap();
        assert_relative_eq!(omega, e0, epsilon = 1e-13);
        let l = filter_gain(&a, &Matrix::identity(2, 2), &omega).unwrap();
        assert_relative_eq!(l, a, epsilon = 1e-12);

        let omega = solve_dare_filter(&Matrix::zeros(2, 2), &dmatrix![1.0, 1.0], &e0).unwrap();
        assert_relative_eq!(omega, e0, epsilon = 1e-14);
        let l = filter_gain(&Matrix::zeros(2, 2), &dmatrix![1.0, 1.0], &omega).unwrap();
        assert_relative_eq!(l, Matrix::zeros(2, 1));
    }

    #[test]
    fn dare_filter_doyle_gain() {
        let a = dmatrix![1.1, 0.1; 0.0, 1.1];
        let c = dmatrix![1.0, 1.0];
        let omega = solve_dare_filter(&a, &c, &Matrix::identity(2, 2)).unwrap();
        let l = filter_gain(&a, &c, &omega).unwrap();
        assert!((l[(0, 0)] - (-0.5667)).abs() < 5e-4);
        assert!((l[(1, 0)] - 1.8333).abs() < 5e-4);
    }

    #[test]
    fn pd_inverse_reports_condition() {
        let inv = pd_inverse(&dmatrix![4.0, 0.0; 0.0, 1.0], "m").unwrap();
        assert_relative_eq!(inv.condition, 4.0, epsilon = 1e-12);
        assert_relative_eq!(inv.inverse, dmatrix![0.25, 0.0; 0.0, 1.0], epsilon = 1e-14);
        assert!(matches!(
            pd_inverse(&dmatrix![1.0, 0.0; 0.0, 1e-14], "m"),
            Err(Error::IllConditioned { .. })
        ));
        assert!(matches!(
            pd_inverse(&dmatrix![1.0, 0.0; 0.0, -1.0], "m"),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::new(0.0, 10).is_err());
        assert!(SolverOptions::new(1e-9, 0).is_err());
        assert!(SolverOptions::new(1e-9, 1).is_ok());
    }

    fn square(size: usize) -> impl Strategy<Value = Matrix> {
        prop::collection::vec(-1.0f64..1.0, size * size)
            .prop_map(move |v| Matrix::from_row_slice(size, size, &v))
    }

    fn sized_pair() -> impl Strategy<Value = (Matrix, Matrix, f64)> {
        (1usize..=4).prop_flat_map(|n| (square(n), square(n), 0.05f64..0.9))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lyapunov_matches_series((a, g, rho) in sized_pair()) {
            let a = with_radius(a, rho);
            let q = &g * g.transpose();
            let x = solve_dlyap(&a, &q).unwrap();
            let p = solve_dlyap_dual_transpose(&a, &q).unwrap();
            let xs = lyap_series(&a, &q, false);
            let ps = lyap_series(&a, &q, true);
            prop_assert!((&x - &xs).norm() <= 1e-8 * xs.norm().max(1.0));
            prop_assert!((&p - &ps).norm() <= 1e-8 * ps.norm().max(1.0));
            // Symmetric and PSD.
            prop_assert!((&p - p.transpose()).norm() <= 1e-12 * p.norm().max(1.0));
            prop_assert!(symmetric_eigenvalues(&p)[0] >= -1e-10);
            // Duality between the two orientations.
            let dual = solve_dlyap_dual_transpose(&a.transpose(), &q).unwrap();
            prop_assert!((&x - dual).norm() <= 1e-10 * x.norm().max(1.0));
        }

        #[test]
        fn sylvester_matches_series(
            (m, n, g, rm, rn) in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| {
                (square(r), square(c),
                 prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| Matrix::from_row_slice(r, c, &v)),
                 0.05f64..0.95, 0.05f64..0.95)
            })
        ) {
            let m = with_radius(m, rm);
            let n = with_radius(n, rn);
            prop_assume!(rm * rn <= 0.9);
            let x = solve_sylvester_affine(&g, &m, &n).unwrap();
            let xs = sylvester_series(&g, &m, &n);
            prop_assert!((&x - &xs).norm() <= 1e-8 * xs.norm().max(1.0));
        }
    }
}
