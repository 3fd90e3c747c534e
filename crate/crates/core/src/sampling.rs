//! Seeded random problem instances and stabilizing gain pairs, used by the
//! property tests and the acceptance corpus.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::closedloop::is_stabilizing_pair;
use crate::design::standard_pair;
use crate::error::{Error, Result};
use crate::mateq::{spectral_radius, Matrix};
use crate::problem::{validate, CostWeights, GainPair, InitialCorrelation, Plant, ProblemInstance};

/// Attempts before a sampler gives up.
const MAX_ATTEMPTS: usize = 10_000;

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random symmetric matrix with eigenvalues at least `floor`.
pub fn random_pd<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Matrix {
    let w = gaussian_matrix(rng, n, n);
    (&w * w.transpose()) / n as f64 + Matrix::identity(n, n) * floor
}

/// Random instance that passes every check of [`validate`]. The dynamics are
/// rescaled to a spectral radius drawn from `[0.6, 1.2]`, so roughly half of
/// the plants are open-loop unstable.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    d: usize,
) -> ProblemInstance {
    assert!(m <= n && d <= n && n >= 1 && m >= 1 && d >= 1);
    for _ in 0..MAX_ATTEMPTS {
        let a0 = gaussian_matrix(rng, n, n);
        let Ok(rho) = spectral_radius(&a0) else {
            continue;
        };
        if rho < 1e-3 {
            continue;
        }
        let target: f64 = rng.random_range(0.6..1.2);
        let a = a0 * (target / rho);
        let b = gaussian_matrix(rng, n, m);
        let c = gaussian_matrix(rng, d, n);
        let q = random_pd(rng, n, 0.1);
        let r = random_pd(rng, m, 0.2);
        let y = random_pd(rng, 2 * n, 0.2);
        let Ok(plant) = Plant::new(a, b, c) else {
            continue;
        };
        let Ok(weights) = CostWeights::new(q, r) else {
            continue;
        };
        let Ok(corr) = InitialCorrelation::new(y) else {
            continue;
        };
        let Ok(p) = ProblemInstance::new(plant, weights, corr) else {
            continue;
        };
        if validate(&p).is_ok_and(|report| report.all_passed() && report.b_full_column_rank)
            && standard_pair(&p).is_ok()
        {
            return p;
        }
    }
    panic!("no valid random instance of size ({n}, {m}, {d}) found");
}

/// Random stabilizing pair near the standard pair: each gain is perturbed by
/// a Gaussian direction of Frobenius norm up to `spread · (1 + ‖gain‖)`,
/// shrinking the spread until the pair stabilizes.
pub fn random_stabilizing_pair<R: Rng + ?Sized>(
    rng: &mut R,
    p: &ProblemInstance,
    spread: f64,
) -> Result<GainPair> {
    let base = standard_pair(p)?.gains();
    let mut spread = spread;
    for attempt in 1..=MAX_ATTEMPTS {
        let g = GainPair::new(perturb(rng, &base.k, spread), perturb(rng, &base.l, spread));
        if is_stabilizing_pair(p, &g) {
            return Ok(g);
        }
        if attempt % 20 == 0 {
            spread *= 0.5;
        }
    }
    Err(Error::NoAdmissibleSamples {
        attempts: MAX_ATTEMPTS,
    })
}

fn perturb<R: Rng + ?Sized>(rng: &mut R, gain: &Matrix, spread: f64) -> Matrix {
    let dir = gaussian_matrix(rng, gain.nrows(), gain.ncols());
    let norm = dir.norm().max(f64::MIN_POSITIVE);
    let radius: f64 = rng.random_range(0.0..1.0) * spread * (1.0 + gain.norm());
    gain + dir * (radius / norm)
}
