//! Number formatting shared by every text output.

/// Nine significant digits in scientific notation, e.g. `5.85000000e7`.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:.8e}", if x == 0.0 { 0.0 } else { x })
    }
}
