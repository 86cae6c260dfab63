//! Trigonometry at rational multiples of pi with integer argument reduction.
//!
//! All spectral formulas evaluate sines and cosines at angles `pi p / q` with
//! integer p, q. Reducing the angle by its symmetries in integer arithmetic
//! keeps equivalent angles bit-identical (conjugate eigenvalue pairs match
//! exactly), and the Niven angles — the only rational multiples of pi whose
//! cosine is itself rational: 0, pi/3, pi/2 and their reflections — come out
//! exact, so crossing values like F_H(1,4) = F_H(1,6) = 1 are exact in f64.

use std::f64::consts::PI;

/// `cos(pi p / q)` for integer p and positive q.
pub fn cos_pi_ratio(p: i64, q: i64) -> f64 {
    debug_assert!(q > 0);
    let mut p = p.rem_euclid(2 * q);
    if p > q {
        // cos(2 pi - t) = cos(t)
        p = 2 * q - p;
    }
    let mut sign = 1.0;
    if 2 * p > q {
        // cos(pi - t) = -cos(t)
        p = q - p;
        sign = -1.0;
    }
    // p/q now lies in [0, 1/2].
    let value = if p == 0 {
        1.0
    } else if 3 * p == q {
        0.5
    } else if 2 * p == q {
        0.0
    } else {
        (PI * p as f64 / q as f64).cos()
    };
    sign * value
}

/// `sin(pi p / q)` for integer p and positive q.
pub fn sin_pi_ratio(p: i64, q: i64) -> f64 {
    // sin(t) = cos(t - pi/2)
    cos_pi_ratio(2 * p - q, 2 * q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_values_at_niven_angles() {
        assert_eq!(cos_pi_ratio(0, 1), 1.0);
        assert_eq!(cos_pi_ratio(1, 3), 0.5);
        assert_eq!(cos_pi_ratio(1, 2), 0.0);
        assert_eq!(cos_pi_ratio(2, 3), -0.5);
        assert_eq!(cos_pi_ratio(1, 1), -1.0);
        assert_eq!(cos_pi_ratio(4, 3), -0.5);
        assert_eq!(cos_pi_ratio(3, 2), 0.0);
        assert_eq!(cos_pi_ratio(5, 3), 0.5);
        assert_eq!(cos_pi_ratio(2, 1), 1.0);

        assert_eq!(sin_pi_ratio(0, 1), 0.0);
        assert_eq!(sin_pi_ratio(1, 6), 0.5);
        assert_eq!(sin_pi_ratio(1, 2), 1.0);
        assert_eq!(sin_pi_ratio(5, 6), 0.5);
        assert_eq!(sin_pi_ratio(1, 1), 0.0);
        assert_eq!(sin_pi_ratio(7, 6), -0.5);
        assert_eq!(sin_pi_ratio(3, 2), -1.0);
    }

    #[test]
    fn matches_direct_evaluation() {
        for q in 1..=40i64 {
            for p in -(2 * q)..=(4 * q) {
                let angle = PI * p as f64 / q as f64;
                assert!(
                    (cos_pi_ratio(p, q) - angle.cos()).abs() < 1e-13,
                    "cos mismatch at {p}/{q}"
                );
                assert!(
                    (sin_pi_ratio(p, q) - angle.sin()).abs() < 1e-13,
                    "sin mismatch at {p}/{q}"
                );
            }
        }
    }

    #[test]
    fn symmetries_are_bit_exact() {
        for q in 1..=30i64 {
            for p in 0..=(2 * q) {
                assert_eq!(cos_pi_ratio(p, q), cos_pi_ratio(2 * q - p, q));
                assert_eq!(cos_pi_ratio(p, q), cos_pi_ratio(p + 2 * q, q));
                assert_eq!(sin_pi_ratio(p, q), -sin_pi_ratio(2 * q - p, q));
            }
        }
    }
}
