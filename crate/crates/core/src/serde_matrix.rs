//! Matrices serialize as row-major nested arrays.

use serde::ser::{SerializeSeq, Serializer};

use crate::mateq::Matrix;

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for row in rows(m) {
        seq.serialize_element(&row)?;
    }
    seq.end()
}
