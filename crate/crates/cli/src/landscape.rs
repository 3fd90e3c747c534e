//! Cost and gradient-norm scans over a two-dimensional slice of one gain.

use odlqr::closedloop::evaluate;
use odlqr::gradient::gradients_compact;
use odlqr::problem::GainPair;
use odlqr::Error;
use rayon::prelude::*;

use crate::commands::{resolve_gains, Artifact, GainSource, Outcome};
use crate::error::{CliError, CliResult, ExitStatus};
use crate::format::sig12;
use crate::grid::{Gain, GridSpec};
use crate::input::LoadedProblem;

/// Gradient-norm target of the refinement, relative to `1 + |J|`.
pub const REFINE_TOLERANCE: f64 = 1e-10;
pub const REFINE_MAX_ITERATIONS: usize = 500;

pub const HEADER: [&str; 6] = ["g1", "g2", "cost", "grad_norm_K", "grad_norm_L", "stable"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub cost: f64,
    pub grad_norm_k: f64,
    pub grad_norm_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeRow {
    /// Grid indices along the two axes.
    pub index: (usize, usize),
    pub g1: f64,
    pub g2: f64,
    /// `None` where the closed loop is not stable.
    pub value: Option<PointValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub grid: GridSpec,
    /// Counterpart gain and base of the varied one.
    pub base: GainPair,
    pub rows: Vec<LandscapeRow>,
}

impl Landscape {
    /// Row with the smallest cost among stable points.
    pub fn argmin(&self) -> Option<&LandscapeRow> {
        self.rows
            .iter()
            .filter(|r| r.value.is_some())
            .min_by(|a, b| a.value.unwrap().cost.total_cmp(&b.value.unwrap().cost))
    }

    pub fn stable_count(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_some()).count()
    }

    /// Lower-left grid indices of the cell containing `(v1, v2)`, or `None`
    /// outside the grid.
    pub fn cell_of(&self, v1: f64, v2: f64) -> Option<(usize, usize)> {
        let cell = |a: &crate::grid::Axis, v: f64| {
            let t = (v - a.min) / (a.max - a.min) * (a.steps - 1) as f64;
            (0.0..=(a.steps - 1) as f64)
                .contains(&t)
                .then(|| (t.floor() as usize).min(a.steps - 2))
        };
        Some((cell(&self.grid.axes[0], v1)?, cell(&self.grid.axes[1], v2)?))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for r in &self.rows {
            let (cost, gk, gl, stable) = match r.value {
                Some(v) => (
                    sig12(v.cost),
                    sig12(v.grad_norm_k),
                    sig12(v.grad_norm_l),
                    "1",
                ),
                None => (String::new(), String::new(), String::new(), "0"),
            };
            w.write_record([sig12(r.g1), sig12(r.g2), cost, gk, gl, stable.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }
}

/// Local minimum of the scanned slice reached from the best grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedMinimum {
    pub g1: f64,
    pub g2: f64,
    pub cost: f64,
    /// Norm of the cost gradient along the two scanned entries.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Cost restricted to the two scanned entries.
struct SliceObjective<'a> {
    instance: &'a odlqr::problem::ProblemInstance,
    grid: &'a GridSpec,
    base: &'a GainPair,
    entries: [usize; 2],
}

impl SliceObjective<'_> {
    fn pair(&self, x: [f64; 2]) -> GainPair {
        let mut g = self.base.clone();
        let m = match self.grid.gain {
            Gain::K => &mut g.k,
            Gain::L => &mut g.l,
        };
        let cols = m.ncols();
        for (idx, v) in self.entries.iter().zip(x) {
            m[(idx / cols, idx % cols)] = v;
        }
        g
    }

    /// Cost and gradient along the two entries; `None` when unstable.
    fn value(&self, x: [f64; 2]) -> CliResult<Option<(f64, [f64; 2])>> {
        let g = self.pair(x);
        let ev = match evaluate(self.instance, &g) {
            Ok(ev) => ev,
            Err(Error::UndefinedCost { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let grad = gradients_compact(self.instance, &g)?;
        let m = match self.grid.gain {
            Gain::K => &grad.grad_k,
            Gain::L => &grad.grad_l,
        };
        let cols = m.ncols();
        let at = |idx: usize| m[(idx / cols, idx % cols)];
        Ok(Some((ev.cost, [at(self.entries[0]), at(self.entries[1])])))
    }

    /// Symmetrized central-difference Hessian of the exact gradient, if the
    /// stencil stays stabilizing.
    fn hessian(&self, x: [f64; 2]) -> CliResult<Option<[[f64; 2]; 2]>> {
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            let step = 1e-6 * (1.0 + x[i].abs());
            let (mut xp, mut xm) = (x, x);
            xp[i] += step;
            xm[i] -= step;
            let (Some((_, gp)), Some((_, gm))) = (self.value(xp)?, self.value(xm)?) else {
                return Ok(None);
            };
            for j in 0..2 {
                h[j][i] = (gp[j] - gm[j]) / (2.0 * step);
            }
        }
        let off = 0.5 * (h[0][1] + h[1][0]);
        h[0][1] = off;
        h[1][0] = off;
        Ok(Some(h))
    }

    /// Damped Newton with a gradient fallback and Armijo backtracking.
    fn minimize(&self, start: [f64; 2]) -> CliResult<RefinedMinimum> {
        let norm = |v: [f64; 2]| v[0].hypot(v[1]);
        let mut x = start;
        let (mut cost, mut grad) = self.value(x)?.expect("start point is stable");
        for iteration in 0..REFINE_MAX_ITERATIONS {
            if norm(grad) <= REFINE_TOLERANCE * (1.0 + cost.abs()) {
                return Ok(RefinedMinimum {
                    g1: x[0],
                    g2: x[1],
                    cost,
                    grad_norm: norm(grad),
                    iterations: iteration,
                    converged: true,
                });
            }
            let newton = self.hessian(x)?.and_then(|h| {
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                (h[0][0] > 0.0 && det > 0.0).then(|| {
                    [
                        -(h[1][1] * grad[0] - h[0][1] * grad[1]) / det,
                        -(h[0][0] * grad[1] - h[1][0] * grad[0]) / det,
                    ]
                })
            });
            let dir = newton.unwrap_or([-grad[0], -grad[1]]);
            let slope = dir[0] * grad[0] + dir[1] * grad[1];
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-16 {
                let trial = [x[0] + t * dir[0], x[1] + t * dir[1]];
                if let Some((c, g)) = self.value(trial)? {
                    if c <= cost + 1e-4 * t * slope {
                        accepted = Some((trial, c, g));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((trial, c, g)) = accepted else {
                return Ok(RefinedMinimum {
                    g1: x[0],
                    g2: x[1],
                    cost,
                    grad_norm: norm(grad),
                    iterations: iteration,
                    converged: false,
                });
            };
            x = trial;
            cost = c;
            grad = g;
        }
        Ok(RefinedMinimum {
            g1: x[0],
            g2: x[1],
            cost,
            grad_norm: norm(grad),
            iterations: REFINE_MAX_ITERATIONS,
            converged: false,
        })
    }
}

impl Landscape {
    /// Local minimization over the scanned entries from the best grid point.
    pub fn refine(&self, problem: &LoadedProblem) -> CliResult<Option<RefinedMinimum>> {
        let Some(best) = self.argmin() else {
            return Ok(None);
        };
        let varied = match self.grid.gain {
            Gain::K => &self.base.k,
            Gain::L => &self.base.l,
        };
        let objective = SliceObjective {
            instance: &problem.instance,
            grid: &self.grid,
            base: &self.base,
            entries: self.grid.resolve_entries(varied.shape())?,
        };
        objective.minimize([best.g1, best.g2]).map(Some)
    }

    /// Values of the scanned entries in the base pair.
    pub fn base_point(&self) -> CliResult<[f64; 2]> {
        let varied = match self.grid.gain {
            Gain::K => &self.base.k,
            Gain::L => &self.base.l,
        };
        let [i, j] = self.grid.resolve_entries(varied.shape())?;
        let cols = varied.ncols();
        Ok([varied[(i / cols, i % cols)], varied[(j / cols, j % cols)]])
    }
}

fn point(problem: &LoadedProblem, g: &GainPair) -> CliResult<Option<PointValue>> {
    let p = &problem.instance;
    let ev = match evaluate(p, g) {
        Ok(ev) => ev,
        Err(Error::UndefinedCost { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let grad = gradients_compact(p, g)?;
    Ok(Some(PointValue {
        cost: ev.cost,
        grad_norm_k: grad.norm_k(),
        grad_norm_l: grad.norm_l(),
    }))
}

/// Evaluates every grid point. The varied gain starts from `fixed`'s value
/// of that gain; the counterpart stays at `fixed`'s value. Rows come out in
/// grid order (first axis outer) regardless of scheduling.
pub fn scan(
    problem: &LoadedProblem,
    grid: &GridSpec,
    fixed: &GainSource,
    tol: f64,
) -> CliResult<Landscape> {
    problem.require_valid()?;
    let base = resolve_gains(problem, fixed, tol)?;
    let varied = match grid.gain {
        Gain::K => &base.k,
        Gain::L => &base.l,
    };
    let entries = grid.resolve_entries(varied.shape())?;
    let steps2 = grid.axes[1].steps;
    let rows = (0..grid.points())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / steps2, idx % steps2);
            let g = match grid.gain {
                Gain::K => GainPair::new(grid.gain_at(&base.k, entries, i, j), base.l.clone()),
                Gain::L => GainPair::new(base.k.clone(), grid.gain_at(&base.l, entries, i, j)),
            };
            Ok(LandscapeRow {
                index: (i, j),
                g1: grid.axes[0].value(i),
                g2: grid.axes[1].value(j),
                value: point(problem, &g)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Landscape {
        grid: grid.clone(),
        base,
        rows,
    })
}

pub fn landscape(
    problem: &LoadedProblem,
    grid: &GridSpec,
    fixed: &GainSource,
    tol: f64,
) -> CliResult<Outcome> {
    let scan = scan(problem, grid, fixed, tol)?;
    let mut notes: Vec<String> = problem
        .assumptions
        .iter()
        .map(|a| format!("ASSUMPTION: {a}"))
        .collect();
    notes.push(format!(
        "{} points, {} stable",
        scan.rows.len(),
        scan.stable_count()
    ));
    let Some(best) = scan.argmin() else {
        return Err(CliError::input(
            "no grid point is stabilizing; widen the grid or change the fixed gain",
        ));
    };
    notes.push(format!(
        "lowest grid point: cost {:.6} at (g1, g2) = ({}, {})",
        best.value.expect("stable").cost,
        sig12(best.g1),
        sig12(best.g2)
    ));
    if let Some(m) = scan.refine(problem)? {
        notes.push(format!(
            "refined minimum{}: cost {:.6} at (g1, g2) = ({}, {}), cell {}",
            if m.converged { "" } else { " (not converged)" },
            m.cost,
            sig12(m.g1),
            sig12(m.g2),
            match scan.cell_of(m.g1, m.g2) {
                Some((i, j)) => format!("({i}, {j})"),
                None => "outside the grid".into(),
            }
        ));
    }
    let [b1, b2] = scan.base_point()?;
    notes.push(format!(
        "base point ({}, {}) lies in cell {}",
        sig12(b1),
        sig12(b2),
        match scan.cell_of(b1, b2) {
            Some((i, j)) => format!("({i}, {j})"),
            None => "outside the grid".into(),
        }
    ));
    Ok(Outcome {
        artifact: Artifact {
            file_name: "landscape.csv".into(),
            contents: scan.to_csv(),
        },
        notes,
        status: ExitStatus::Success,
    })
}
