//! Spherical Bessel functions and angular functions for vector spherical harmonics.

use crate::c64;

/// `j_0(x), ..., j_nmax(x)` by downward recurrence, normalized against `j_0` or `j_1`.
pub fn spherical_jn(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "spherical Bessel functions need x > 0");
    let start = nmax + 20 + (x as usize) + ((40.0 * (nmax as f64 + x)).sqrt() as usize);
    let mut j = vec![0.0; start + 2];
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    for n in (1..=start).rev() {
        j[n - 1] = (2 * n + 1) as f64 / x * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let scale = if j0.abs() >= j1.abs() { j0 / j[0] } else { j1 / j[1] };
    j.truncate(nmax + 1);
    j.iter_mut().for_each(|v| *v *= scale);
    j
}

/// `y_0(x), ..., y_nmax(x)` by upward recurrence.
pub fn spherical_yn(nmax: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let mut y = Vec::with_capacity(nmax + 1);
    y.push(-c / x);
    if nmax >= 1 {
        y.push(-c / (x * x) - s / x);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y
}

/// Spherical Hankel functions of the first kind `h_n = j_n + i y_n`.
pub fn spherical_h1n(nmax: usize, x: f64) -> Vec<c64> {
    spherical_jn(nmax, x).into_iter().zip(spherical_yn(nmax, x)).map(|(j, y)| c64::new(j, y)).collect()
}

/// Angular functions `π_n(cos θ) = P_n¹/sin θ` and `τ_n = dP_n¹/dθ` for `n = 0..=nmax`.
pub fn pi_tau(nmax: usize, mu: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pi = vec![0.0; nmax + 1];
    let mut tau = vec![0.0; nmax + 1];
    if nmax >= 1 {
        pi[1] = 1.0;
        tau[1] = mu;
    }
    for n in 2..=nmax {
        let nf = n as f64;
        pi[n] = (2.0 * nf - 1.0) / (nf - 1.0) * mu * pi[n - 1] - nf / (nf - 1.0) * pi[n - 2];
        tau[n] = nf * mu * pi[n] - (nf + 1.0) * pi[n - 1];
    }
    (pi, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Closed forms for n <= 3.
    fn j_closed(n: usize, x: f64) -> f64 {
        let (s, c) = x.sin_cos();
        match n {
            0 => s / x,
            1 => s / x.powi(2) - c / x,
            2 => (3.0 / x.powi(2) - 1.0) * s / x - 3.0 * c / x.powi(2),
            3 => (15.0 / x.powi(3) - 6.0 / x) * s / x - (15.0 / x.powi(2) - 1.0) * c / x,
            _ => unreachable!(),
        }
    }

    fn y_closed(n: usize, x: f64) -> f64 {
        let (s, c) = x.sin_cos();
        match n {
            0 => -c / x,
            1 => -c / x.powi(2) - s / x,
            2 => (-3.0 / x.powi(2) + 1.0) * c / x - 3.0 * s / x.powi(2),
            3 => (-15.0 / x.powi(3) + 6.0 / x) * c / x - (15.0 / x.powi(2) - 1.0) * s / x,
            _ => unreachable!(),
        }
    }

    #[test]
    fn bessel_closed_forms() {
        for &x in &[0.3, 1.0, 2.0, 5.5, 20.0] {
            let j = spherical_jn(5, x);
            let y = spherical_yn(5, x);
            for n in 0..=3 {
                assert!((j[n] - j_closed(n, x)).abs() < 1e-13 * (1.0 + j_closed(n, x).abs()), "j{n}({x})");
                assert!((y[n] - y_closed(n, x)).abs() < 1e-12 * (1.0 + y_closed(n, x).abs()), "y{n}({x})");
            }
        }
    }

    #[test]
    fn wronskian() {
        for &x in &[0.5, 2.0, 4.0, 128.0] {
            let j = spherical_jn(30, x);
            let y = spherical_yn(30, x);
            for n in 0..30 {
                let w = j[n + 1] * y[n] - j[n] * y[n + 1];
                assert!((w * x * x - 1.0).abs() < 1e-9, "n={n} x={x} w={w}");
            }
        }
    }

    #[test]
    fn angular_functions_low_order() {
        let mu: f64 = 0.37;
        let (pi, tau) = pi_tau(3, mu);
        assert_eq!(pi[1], 1.0);
        assert!((pi[2] - 3.0 * mu).abs() < 1e-15);
        assert!((tau[2] - 3.0 * (2.0 * mu * mu - 1.0)).abs() < 1e-14);
        assert!((pi[3] - 1.5 * (5.0 * mu * mu - 1.0)).abs() < 1e-14);
    }
}
