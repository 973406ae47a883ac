//! Error-function wrappers used by the closed-form populations.

/// Beyond this argument magnitude `erf` is replaced by exactly +-1.
pub const ERF_SATURATION: f64 = 9.0;

/// `erf(x)`, saturated to +-1 for `|x| > 9`.
pub fn erf(x: f64) -> f64 {
    if x > ERF_SATURATION {
        1.0
    } else if x < -ERF_SATURATION {
        -1.0
    } else {
        libm::erf(x)
    }
}

/// `erf(x) + 1` without cancellation on the negative axis (evaluated as `erfc(-x)`).
pub fn erf_plus_one(x: f64) -> f64 {
    if x > ERF_SATURATION {
        2.0
    } else if x < -ERF_SATURATION {
        0.0
    } else {
        libm::erfc(-x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-16);
        assert!((erf(-1.0) + 0.842_700_792_949_714_9).abs() < 1e-16);
        assert_eq!(erf(9.5), 1.0);
        assert_eq!(erf(-12.0), -1.0);
    }

    #[test]
    fn plus_one_keeps_tail() {
        // erfc(5) = 1.5374597944280348e-12
        let v = erf_plus_one(-5.0);
        assert!((v / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-12);
        assert_eq!(erf_plus_one(-10.0), 0.0);
        assert_eq!(erf_plus_one(10.0), 2.0);
    }
}
