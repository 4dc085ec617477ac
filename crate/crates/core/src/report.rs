//! Small formatting helpers shared by the CSV writers.

use crate::scalar::Real;

/// Format with 17 significant digits, enough to round-trip an f64 exactly;
/// all CSV output goes through this so reruns are byte-identical.
pub fn fmt_g17<T: Real>(x: T) -> String {
    let v = x.as_f64();
    if v == 0.0 {
        return "0".into();
    }
    format!("{:.16e}", v)
}
