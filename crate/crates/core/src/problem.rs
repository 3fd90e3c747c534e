//! Problem instances and assumption checks.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{dims, Error, Result};
use crate::mateq::{spectral_radius, symmetric_eigenvalues, symmetrize, Matrix};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;
/// Relative tolerance for detecting `Y22 = Y12ᵀ`.
pub const SPECIAL_STRUCTURE_TOLERANCE: f64 = 1e-10;
/// Definiteness checks compare the smallest eigenvalue to this fraction of the trace.
pub const DEFINITENESS_TOLERANCE: f64 = 1e-12;

fn ensure_finite(m: &Matrix, name: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} has non-finite entries"
        )))
    }
}

fn ensure_shape(m: &Matrix, rows: usize, cols: usize, name: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::DimensionMismatch {
            context: name.to_string(),
            expected: dims(rows, cols),
            found: dims(m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// The plant `x⁺ = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: Matrix,
    b: Matrix,
    c: Matrix,
}

impl Plant {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let n = a.nrows();
        ensure_shape(&a, n, n, "A")?;
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                context: "B".into(),
                expected: format!("{n}xm with m >= 1"),
                found: dims(b.nrows(), b.ncols()),
            });
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "C".into(),
                expected: format!("dx{n} with d >= 1"),
                found: dims(c.nrows(), c.ncols()),
            });
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "state dimension must be at least 1".into(),
            ));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C")] {
            ensure_finite(m, name)?;
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    /// Output dimension.
    pub fn d(&self) -> usize {
        self.c.nrows()
    }

    /// `A - B K - L C`, the dynamics of the controller's internal state.
    pub fn controller_dynamics(&self, gains: &GainPair) -> Matrix {
        &self.a - &self.b * &gains.k - &gains.l * &self.c
    }

    pub(crate) fn check_gains(&self, gains: &GainPair) -> Result<()> {
        ensure_shape(&gains.k, self.m(), self.n(), "K")?;
        ensure_shape(&gains.l, self.n(), self.d(), "L")?;
        ensure_finite(&gains.k, "K")?;
        ensure_finite(&gains.l, "L")
    }
}

/// Quadratic stage-cost weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q: Matrix,
    pub r: Matrix,
}

impl CostWeights {
    pub fn new(q: Matrix, r: Matrix) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::NotSquare {
                context: "Q",
                rows: q.nrows(),
                cols: q.ncols(),
            });
        }
        if r.nrows() != r.ncols() {
            return Err(Error::NotSquare {
                context: "R",
                rows: r.nrows(),
                cols: r.ncols(),
            });
        }
        ensure_finite(&q, "Q")?;
        ensure_finite(&r, "R")?;
        Ok(Self { q, r })
    }
}

/// Second moment `Y = E[z̄₀ z̄₀ᵀ]` of the transformed initial state
/// `z̄₀ = (x₀, x₀ - ξ₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCorrelation {
    y: Matrix,
}

impl InitialCorrelation {
    pub fn new(y: Matrix) -> Result<Self> {
        if y.nrows() != y.ncols() || !y.nrows().is_multiple_of(2) || y.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "Y".into(),
                expected: "2n x 2n".into(),
                found: dims(y.nrows(), y.ncols()),
            });
        }
        ensure_finite(&y, "Y")?;
        Ok(Self { y })
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }
    pub fn n(&self) -> usize {
        self.y.nrows() / 2
    }
    /// State correlation block.
    pub fn y11(&self) -> Matrix {
        let n = self.n();
        self.y.view((0, 0), (n, n)).into_owned()
    }
    /// State / estimation-error cross-correlation block.
    pub fn y12(&self) -> Matrix {
        let n = self.n();
        self.y.view((0, n), (n, n)).into_owned()
    }
    /// Estimation-error correlation block, i.e. the initial estimation variance `E₀`.
    pub fn y22(&self) -> Matrix {
        let n = self.n();
        self.y.view((n, n), (n, n)).into_owned()
    }

    /// Whether `Y22 = Y12ᵀ` holds to [`SPECIAL_STRUCTURE_TOLERANCE`].
    pub fn has_special_structure(&self) -> bool {
        (self.y22() - self.y12().transpose()).norm() <= SPECIAL_STRUCTURE_TOLERANCE * self.y.norm()
    }
}

/// Controller gain `K` (m×n) and observer gain `L` (n×d).
#[derive(Debug, Clone, PartialEq)]
pub struct GainPair {
    pub k: Matrix,
    pub l: Matrix,
}

impl GainPair {
    pub fn new(k: Matrix, l: Matrix) -> Self {
        Self { k, l }
    }

    pub fn zeros(plant: &Plant) -> Self {
        Self {
            k: Matrix::zeros(plant.m(), plant.n()),
            l: Matrix::zeros(plant.n(), plant.d()),
        }
    }
}

/// Plant, weights and initial correlation. `E₀` defaults to `Y22` but may be
/// overridden for standalone observer design.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub plant: Plant,
    pub weights: CostWeights,
    pub correlation: InitialCorrelation,
    e0_override: Option<Matrix>,
}

impl ProblemInstance {
    pub fn new(
        plant: Plant,
        weights: CostWeights,
        correlation: InitialCorrelation,
    ) -> Result<Self> {
        let n = plant.n();
        ensure_shape(&weights.q, n, n, "Q")?;
        ensure_shape(&weights.r, plant.m(), plant.m(), "R")?;
        ensure_shape(correlation.y(), 2 * n, 2 * n, "Y")?;
        Ok(Self {
            plant,
            weights,
            correlation,
            e0_override: None,
        })
    }

    pub fn with_e0(mut self, e0: Matrix) -> Result<Self> {
        let n = self.plant.n();
        ensure_shape(&e0, n, n, "E0")?;
        ensure_finite(&e0, "E0")?;
        self.e0_override = Some(e0);
        Ok(self)
    }

    /// Initial estimation variance used for observer design.
    pub fn e0(&self) -> Matrix {
        self.e0_override
            .clone()
            .unwrap_or_else(|| self.correlation.y22())
    }

    pub fn e0_override(&self) -> Option<&Matrix> {
        self.e0_override.as_ref()
    }

    /// Copy of this instance with a different initial correlation.
    pub fn with_correlation(&self, correlation: InitialCorrelation) -> Result<Self> {
        let mut next = Self::new(self.plant.clone(), self.weights.clone(), correlation)?;
        next.e0_override = self.e0_override.clone();
        Ok(next)
    }
}

/// Numerical rank with singular values below `RANK_TOLERANCE · σ_max` treated as zero.
pub fn numerical_rank(m: &Matrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

/// `[B, AB, …, Aⁿ⁻¹B]`.
pub fn controllability_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut out = Matrix::zeros(n, n * b.ncols());
    let mut block = b.clone();
    for i in 0..n {
        out.view_mut((0, i * b.ncols()), (n, b.ncols()))
            .copy_from(&block);
        block = a * block;
    }
    out
}

/// `[C; CA; …; CAⁿ⁻¹]`.
pub fn observability_matrix(c: &Matrix, a: &Matrix) -> Matrix {
    controllability_matrix(&a.transpose(), &c.transpose()).transpose()
}

/// Principal square root of a symmetric PSD matrix (negative eigenvalues clipped).
pub fn psd_sqrt(m: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new(symmetrize(m));
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

fn definiteness_floor(m: &Matrix) -> f64 {
    DEFINITENESS_TOLERANCE * m.trace().abs().max(f64::MIN_POSITIVE)
}

fn is_symmetric(m: &Matrix) -> bool {
    (m - m.transpose()).norm() <= 1e-12 * m.norm().max(1.0)
}

pub fn is_positive_definite(m: &Matrix) -> bool {
    m.nrows() == m.ncols()
        && is_symmetric(m)
        && symmetric_eigenvalues(m)
            .first()
            .is_some_and(|&lo| lo > definiteness_floor(m))
}

pub fn is_positive_semidefinite(m: &Matrix) -> bool {
    m.nrows() == m.ncols()
        && is_symmetric(m)
        && symmetric_eigenvalues(m)
            .first()
            .is_some_and(|&lo| lo >= -definiteness_floor(m))
}

/// One pass/fail line of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `Y22 = Y12ᵀ`: vanishing initial cross-correlation between estimation
    /// error and internal state.
    pub special_structure: bool,
    /// B has full column rank (needed by the stationary-point equations).
    pub b_full_column_rank: bool,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the standing assumptions on a problem instance. Failed checks are
/// report entries; only malformed dimensions are errors.
pub fn validate(p: &ProblemInstance) -> Result<ValidationReport> {
    let plant = &p.plant;
    let n = plant.n();
    let mut checks = Vec::new();

    let rank_check = |name: &'static str, m: &Matrix, target: usize| {
        let rank = numerical_rank(m);
        Check {
            name,
            passed: rank == target,
            detail: format!("rank {rank} of {target}"),
        }
    };

    checks.push(rank_check(
        "controllable(A,B)",
        &controllability_matrix(plant.a(), plant.b()),
        n,
    ));
    checks.push(rank_check(
        "observable(C,A)",
        &observability_matrix(plant.c(), plant.a()),
        n,
    ));
    let q_sqrt = psd_sqrt(&p.weights.q);
    checks.push(rank_check(
        "observable(Q^1/2,A)",
        &observability_matrix(&q_sqrt, plant.a()),
        n,
    ));

    let eig_detail = |m: &Matrix| {
        let ev = symmetric_eigenvalues(m);
        format!(
            "min eigenvalue {:e}, symmetric {}",
            ev.first().copied().unwrap_or(0.0),
            is_symmetric(m)
        )
    };
    checks.push(Check {
        name: "Q PSD",
        passed: is_positive_semidefinite(&p.weights.q),
        detail: eig_detail(&p.weights.q),
    });
    checks.push(Check {
        name: "R PD",
        passed: is_positive_definite(&p.weights.r),
        detail: eig_detail(&p.weights.r),
    });
    checks.push(Check {
        name: "Y PD",
        passed: is_positive_definite(p.correlation.y()),
        detail: eig_detail(p.correlation.y()),
    });
    if let Some(e0) = p.e0_override() {
        checks.push(Check {
            name: "E0 PD",
            passed: is_positive_definite(e0),
            detail: eig_detail(e0),
        });
    }
    checks.push(rank_check("C full row rank", plant.c(), plant.d()));

    Ok(ValidationReport {
        checks,
        special_structure: p.correlation.has_special_structure(),
        b_full_column_rank: numerical_rank(plant.b()) == plant.m(),
    })
}

/// `ρ(A - B K) < 1`.
pub fn is_stabilizing_k(plant: &Plant, k: &Matrix) -> bool {
    if k.nrows() != plant.m() || k.ncols() != plant.n() {
        return false;
    }
    spectral_radius(&(plant.a() - plant.b() * k)).is_ok_and(|r| r < 1.0)
}

/// `ρ(A - L C) < 1`.
pub fn is_stabilizing_l(plant: &Plant, l: &Matrix) -> bool {
    if l.nrows() != plant.n() || l.ncols() != plant.d() {
        return false;
    }
    spectral_radius(&(plant.a() - l * plant.c())).is_ok_and(|r| r < 1.0)
}

/// Whether `(K, A - BK - LC)` is observable.
pub fn is_observable_dynamic_controller(plant: &Plant, gains: &GainPair) -> bool {
    if plant.check_gains(gains).is_err() {
        return false;
    }
    let dynamics = plant.controller_dynamics(gains);
    numerical_rank(&observability_matrix(&gains.k, &dynamics)) == plant.n()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::design::standard_pair;
    use crate::mateq::eigenvalues;
    use nalgebra::dmatrix;

    #[test]
    fn doyle_validates() {
        let report = validate(&builtin::doyle_1d(builtin::Correlation::General)).unwrap();
        assert!(report.all_passed(), "{report:?}");
        assert!(!report.special_structure);
        let report = validate(&builtin::doyle_1d(builtin::Correlation::Special)).unwrap();
        assert!(report.all_passed(), "{report:?}");
        assert!(report.special_structure);
        assert!(report.b_full_column_rank);
    }

    #[test]
    fn zero_input_map_is_uncontrollable() {
        let plant = Plant::new(
            Matrix::identity(2, 2),
            Matrix::zeros(2, 1),
            dmatrix![1.0, 0.0],
        )
        .unwrap();
        let p = ProblemInstance::new(
            plant,
            CostWeights::new(Matrix::identity(2, 2), dmatrix![1.0]).unwrap(),
            InitialCorrelation::new(Matrix::identity(4, 4)).unwrap(),
        )
        .unwrap();
        let report = validate(&p).unwrap();
        assert!(!report.check("controllable(A,B)").unwrap().passed);
        assert!(!report.b_full_column_rank);
        assert!(!report.all_passed());
    }

    #[test]
    fn indefinite_weights_are_reported() {
        let base = builtin::doyle_1d(builtin::Correlation::General);
        let p = ProblemInstance::new(
            base.plant.clone(),
            CostWeights::new(dmatrix![1.0, 0.0; 0.0, -1.0], dmatrix![0.0]).unwrap(),
            base.correlation.clone(),
        )
        .unwrap();
        let report = validate(&p).unwrap();
        assert!(!report.check("Q PSD").unwrap().passed);
        assert!(!report.check("R PD").unwrap().passed);
    }

    #[test]
    fn dimension_errors() {
        assert!(Plant::new(
            Matrix::identity(2, 2),
            Matrix::zeros(3, 1),
            dmatrix![1.0, 0.0]
        )
        .is_err());
        assert!(Plant::new(Matrix::identity(2, 2), Matrix::zeros(2, 1), dmatrix![1.0]).is_err());
        assert!(InitialCorrelation::new(Matrix::identity(3, 3)).is_err());
        let base = builtin::doyle_1d(builtin::Correlation::General);
        assert!(ProblemInstance::new(
            base.plant.clone(),
            base.weights.clone(),
            InitialCorrelation::new(Matrix::identity(2, 2)).unwrap()
        )
        .is_err());
    }

    #[test]
    fn rank_is_scale_invariant() {
        let m = dmatrix![1.0, 2.0; 2.0, 4.0000001];
        for scale in [1e-6, 1.0, 1e6] {
            assert_eq!(numerical_rank(&(&m * scale)), 2);
        }
        let singular = dmatrix![1.0, 2.0; 2.0, 4.0];
        for scale in [1e-6, 1.0, 1e6] {
            assert_eq!(numerical_rank(&(&singular * scale)), 1);
        }
        assert_eq!(numerical_rank(&Matrix::zeros(2, 2)), 0);
    }

    #[test]
    fn stabilizing_sets() {
        let p = builtin::doyle_1d(builtin::Correlation::General);
        let pair = standard_pair(&p).unwrap();
        assert!(is_stabilizing_k(&p.plant, &pair.k_star));
        assert!(is_stabilizing_l(&p.plant, &pair.l_star));
        assert!(!is_stabilizing_k(&p.plant, &Matrix::zeros(1, 2)));
        assert!(!is_stabilizing_l(&p.plant, &Matrix::zeros(2, 1)));
        // Wrong shapes are simply not stabilizing.
        assert!(!is_stabilizing_k(&p.plant, &Matrix::zeros(2, 2)));
    }

    /// PBH test: (K, F) is observable iff [λI - F; K] has full column rank
    /// for every eigenvalue λ of F.
    fn pbh_observable(k: &Matrix, f: &Matrix) -> bool {
        let n = f.nrows();
        eigenvalues(f).unwrap().iter().all(|lambda| {
            // Realify the complex pencil: [[Re, -Im], [Im, Re]] blocks.
            let mut pencil = Matrix::zeros(2 * (n + k.nrows()), 2 * n);
            let re = Matrix::identity(n, n) * lambda.re - f;
            let im = Matrix::identity(n, n) * lambda.im;
            pencil.view_mut((0, 0), (n, n)).copy_from(&re);
            pencil.view_mut((0, n), (n, n)).copy_from(&(-&im));
            pencil.view_mut((n, 0), (n, n)).copy_from(&im);
            pencil.view_mut((n, n), (n, n)).copy_from(&re);
            pencil.view_mut((2 * n, 0), (k.nrows(), n)).copy_from(k);
            pencil
                .view_mut((2 * n + k.nrows(), n), (k.nrows(), n))
                .copy_from(k);
            numerical_rank(&pencil) == 2 * n
        })
    }

    #[test]
    fn observable_dynamic_controller() {
        let p = builtin::doyle_1d(builtin::Correlation::General);
        let pair = standard_pair(&p).unwrap();
        let gains = GainPair::new(pair.k_star.clone(), pair.l_star.clone());
        let dynamics = p.plant.controller_dynamics(&gains);
        assert_eq!(
            is_observable_dynamic_controller(&p.plant, &gains),
            pbh_observable(&gains.k, &dynamics)
        );
        assert!(is_observable_dynamic_controller(&p.plant, &gains));

        let zero_k = GainPair::new(Matrix::zeros(1, 2), pair.l_star);
        assert!(!is_observable_dynamic_controller(&p.plant, &zero_k));

        let scalar = Plant::new(dmatrix![0.5], dmatrix![1.0], dmatrix![1.0]).unwrap();
        assert!(is_observable_dynamic_controller(
            &scalar,
            &GainPair::new(dmatrix![0.3], dmatrix![0.1])
        ));
    }

    #[test]
    fn correlation_blocks() {
        let y = builtin::y_general();
        let corr = InitialCorrelation::new(y).unwrap();
        assert_eq!(corr.y11(), Matrix::identity(2, 2) * 2.0);
        assert_eq!(corr.y12(), Matrix::identity(2, 2) * 0.1);
        assert_eq!(corr.y22(), Matrix::identity(2, 2));
    }
}
