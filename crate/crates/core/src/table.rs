//! Fixed text formats shared by every CSV writer in the crate.

/// Scientific notation with 12 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.11e}")
}
