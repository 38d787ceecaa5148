use std::f64::consts::{PI, TAU};

/// Wrap an angle to (−π, π].
///
/// Values already in range are returned bit-for-bit unchanged.
pub fn wrap(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle - TAU * (angle / TAU).round();
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_range_is_identity() {
        for a in [0.0, 0.1, -0.1, PI, -PI + 1e-12, 3.0] {
            assert_eq!(wrap(a), a);
        }
    }

    #[test]
    fn full_turn_wraps_to_zero() {
        assert_eq!(wrap(TAU), 0.0);
        assert_eq!(wrap(-TAU), 0.0);
        assert_eq!(wrap(2.0 * TAU), 0.0);
    }

    #[test]
    fn boundary_maps_to_plus_pi() {
        assert_eq!(wrap(-PI), PI);
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn odd_symmetry_off_boundary() {
        for a in [4.0, 7.5, 10.0, -20.0] {
            assert_eq!(wrap(-a), -wrap(a));
        }
    }
}
