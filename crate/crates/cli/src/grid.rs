//! Two-dimensional scan specifications: `GAIN[@I,J]=MIN:MAX:STEPS,MIN:MAX:STEPS`.
//!
//! `GAIN` is `K` or `L`. Without `@I,J` the gain must have exactly two
//! entries; otherwise `I` and `J` are row-major indices of the two entries to
//! vary and the rest stay at their base values.

use odlqr::Matrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gain {
    K,
    L,
}

impl Gain {
    pub fn name(self) -> &'static str {
        match self {
            Gain::K => "K",
            Gain::L => "L",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }

    fn parse(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts.as_slice() else {
            return Err(CliError::input(format!(
                "grid axis '{s}' is not MIN:MAX:STEPS"
            )));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::input(format!("grid bound '{v}' is not a finite number")))
        };
        let axis = Axis {
            min: num(min)?,
            max: num(max)?,
            steps: steps
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("grid steps '{steps}' is not an integer")))?,
        };
        if axis.steps < 2 {
            return Err(CliError::input(format!(
                "grid axis '{s}' needs at least 2 steps"
            )));
        }
        if !(axis.min < axis.max) {
            return Err(CliError::input(format!("grid axis '{s}' needs MIN < MAX")));
        }
        Ok(axis)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub gain: Gain,
    /// Row-major indices of the varied entries; `None` means the gain's only two.
    pub entries: Option<[usize; 2]>,
    pub axes: [Axis; 2],
}

impl GridSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        let (lhs, rhs) = s.split_once('=').ok_or_else(|| {
            CliError::input(format!(
                "grid '{s}' is not GAIN=MIN:MAX:STEPS,MIN:MAX:STEPS"
            ))
        })?;
        let (gain, entries) = match lhs.trim().split_once('@') {
            Some((g, idx)) => (g, Some(parse_entries(idx)?)),
            None => (lhs.trim(), None),
        };
        let gain = match gain {
            "K" => Gain::K,
            "L" => Gain::L,
            other => {
                return Err(CliError::input(format!(
                    "grid gain '{other}' must be K or L"
                )))
            }
        };
        let axes: Vec<&str> = rhs.split(',').collect();
        let [a1, a2] = axes.as_slice() else {
            return Err(CliError::input(format!(
                "grid '{s}' needs exactly two axes"
            )));
        };
        Ok(Self {
            gain,
            entries,
            axes: [Axis::parse(a1)?, Axis::parse(a2)?],
        })
    }

    /// Row-major indices varied in a gain of the given shape.
    pub fn resolve_entries(&self, shape: (usize, usize)) -> CliResult<[usize; 2]> {
        let len = shape.0 * shape.1;
        match self.entries {
            None if len == 2 => Ok([0, 1]),
            None => Err(CliError::input(format!(
                "{} is {}x{} with {len} entries; a 2-D scan needs exactly two. \
                 Select a slice with {}@I,J=... where I and J are row-major entry indices below {len}",
                self.gain.name(),
                shape.0,
                shape.1,
                self.gain.name()
            ))),
            Some([i, j]) if i < len && j < len && i != j => Ok([i, j]),
            Some([i, j]) => Err(CliError::input(format!(
                "slice {}@{i},{j} needs two distinct indices below {len}",
                self.gain.name()
            ))),
        }
    }

    pub fn points(&self) -> usize {
        self.axes[0].steps * self.axes[1].steps
    }

    /// Gain at grid point `(i, j)` starting from `base`.
    pub fn gain_at(&self, base: &Matrix, entries: [usize; 2], i: usize, j: usize) -> Matrix {
        let mut g = base.clone();
        let cols = g.ncols();
        for (idx, value) in entries
            .iter()
            .zip([self.axes[0].value(i), self.axes[1].value(j)])
        {
            g[(idx / cols, idx % cols)] = value;
        }
        g
    }
}

fn parse_entries(s: &str) -> CliResult<[usize; 2]> {
    let idx: Vec<&str> = s.split(',').collect();
    let parse = |v: &str| {
        v.trim().parse::<usize>().map_err(|_| {
            CliError::input(format!("slice index '{v}' is not a non-negative integer"))
        })
    };
    match idx.as_slice() {
        [i, j] => Ok([parse(i)?, parse(j)?]),
        _ => Err(CliError::input(format!(
            "slice '@{s}' needs two indices I,J"
        ))),
    }
}
