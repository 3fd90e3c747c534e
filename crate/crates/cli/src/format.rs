//! Number formatting for CSV cells and console summaries.

use odlqr::Matrix;

/// `x` rounded to 12 significant digits, printed in its shortest form.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let magnitude = rounded.abs();
    if rounded == 0.0 || (1e-4..1e15).contains(&magnitude) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Row-major display with four decimals, e.g. `[[4.8768, 4.3773]]`.
pub fn matrix4(m: &Matrix) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.4}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn json_pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(102.28754321987654), "102.28754322");
        assert_eq!(sig12(0.1), "0.1");
        assert_eq!(sig12(-5.0), "-5");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.234567890123456e-7), "1.23456789012e-7");
        assert_eq!(sig12(6.02214076e23), "6.02214076e23");
    }

    #[test]
    fn matrix_display() {
        assert_eq!(matrix4(&dmatrix![4.87676, 4.37731]), "[[4.8768, 4.3773]]");
        assert_eq!(
            matrix4(&dmatrix![-0.56667; 1.83333]),
            "[[-0.5667], [1.8333]]"
        );
    }
}
