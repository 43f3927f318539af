//! Bessel functions of the first kind by power series. Accurate on the
//! small arguments the disk benchmark needs (|x| ≲ 10).

fn series(x: f64, order: u32) -> f64 {
    let q = -(x * x) / 4.0;
    let mut term = (x / 2.0).powi(order as i32);
    for k in 1..=order {
        term /= k as f64;
    }
    let mut sum = term;
    for k in 1..200u32 {
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

pub fn bessel_j0(x: f64) -> f64 {
    series(x, 0)
}

pub fn bessel_j1(x: f64) -> f64 {
    series(x, 1)
}

/// First positive zero of J₀, by bisection on [2, 3].
pub fn first_zero_j0() -> f64 {
    let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-16);
        assert_eq!(bessel_j1(0.0), 0.0);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((bessel_j0(5.0) + 0.177_596_771_314_338_3).abs() < 1e-12);
    }

    #[test]
    fn first_zero() {
        let j0 = first_zero_j0();
        assert!((j0 - 2.404_825_557_695_773).abs() < 1e-12);
        assert!(bessel_j0(j0).abs() < 1e-14);
    }

    #[test]
    fn derivative_identity() {
        // J0' = -J1
        for x in [0.3, 1.1, 2.4, 4.0] {
            let h = 1e-5;
            let d = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
            assert!((d + bessel_j1(x)).abs() < 1e-9);
        }
    }
}
