//! Mie series for plane-wave scattering by a perfectly conducting sphere centered at the origin.

pub mod special;

use rayon::prelude::*;

use crate::c64;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::quadrature::GaussRule;
use crate::space::CVec3;
use crate::uq::IncidentWave;

use special::{pi_tau, spherical_h1n, spherical_jn};

/// Relative slack for points on the sphere itself.
const SURFACE_SLACK: f64 = 1e-12;
/// Coefficient magnitude below which the series is truncated.
const COEFF_TOL: f64 = 1e-12;

/// Expansion of the scattered field for one sphere and incident wave.
#[derive(Clone, Debug)]
pub struct MieSolution {
    pub radius: f64,
    pub wave: IncidentWave,
    /// Truncation order `N_t`.
    pub order: usize,
    /// `a_n` multiplies `N_e1n`, `b_n` multiplies `M_o1n`; index 0 unused.
    pub a: Vec<c64>,
    pub b: Vec<c64>,
}

/// Cartesian value of the scattered field and its curl at one point.
#[derive(Clone, Copy, Debug)]
pub struct MieValue {
    pub field: CVec3,
    pub curl: CVec3,
}

fn coefficients(nmax: usize, x: f64) -> (Vec<c64>, Vec<c64>) {
    let j = spherical_jn(nmax, x);
    let h = spherical_h1n(nmax, x);
    let mut a = vec![c64::new(0.0, 0.0); nmax + 1];
    let mut b = a.clone();
    for n in 1..=nmax {
        let nf = n as f64;
        let dpsi = x * j[n - 1] - nf * j[n];
        let dxi = h[n - 1] * x - h[n] * nf;
        a[n] = dpsi / dxi;
        b[n] = j[n] / h[n];
    }
    (a, b)
}

impl MieSolution {
    pub fn new(radius: f64, wave: IncidentWave) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
        }
        let x = wave.kappa * radius;
        let mut order = (x + 10.0 + 4.0 * x.cbrt()).ceil() as usize;
        loop {
            let (a, b) = coefficients(order + 2, x);
            let tail = (a[order].norm() + b[order].norm()).max(a[order + 1].norm() + b[order + 1].norm());
            if tail < COEFF_TOL || order > 10_000 {
                let (a, b) = coefficients(order, x);
                return Ok(Self { radius, wave, order, a, b });
            }
            order += 4;
        }
    }

    /// Scattered field and its curl at `x`.
    pub fn value(&self, x: &Vec3) -> Result<MieValue> {
        let d = self.wave.direction;
        let p = self.wave.polarization;
        let q = d.cross(&p);
        let local = Vec3::new(x.dot(&p), x.dot(&q), x.dot(&d));
        let r = local.norm();
        if r < self.radius * (1.0 - SURFACE_SLACK) {
            return Err(Error::PointInside { index: 0, norm: r, radius: self.radius });
        }
        let k = self.wave.kappa;
        let rho = k * r;
        let cos_t = (local.z / r).clamp(-1.0, 1.0);
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let phi = local.y.atan2(local.x);
        let (sin_p, cos_p) = phi.sin_cos();
        let nmax = self.order;
        let h = spherical_h1n(nmax, rho);
        let (pi, tau) = pi_tau(nmax, cos_t);

        let zero = c64::new(0.0, 0.0);
        // Spherical components (r, θ, φ) of E and curl E.
        let mut e = [zero; 3];
        let mut c = [zero; 3];
        let mut i_n = c64::new(0.0, 1.0);
        for n in 1..=nmax {
            let nf = n as f64;
            let en = i_n * ((2.0 * nf + 1.0) / (nf * (nf + 1.0)));
            i_n *= c64::new(0.0, 1.0);
            let z = h[n];
            let dz = h[n - 1] - z * (nf / rho);
            let radial = z * (nf * (nf + 1.0) * sin_t * pi[n] / rho);
            let ia = c64::new(0.0, 1.0) * self.a[n] * en;
            let bb = self.b[n] * en;
            // N_e1n, M_o1n, M_e1n, N_o1n
            let ne = [radial * cos_p, dz * (cos_p * tau[n]), -dz * (sin_p * pi[n])];
            let mo = [zero, z * (cos_p * pi[n]), -z * (sin_p * tau[n])];
            let me = [zero, -z * (sin_p * pi[n]), -z * (cos_p * tau[n])];
            let no = [radial * sin_p, dz * (sin_p * tau[n]), dz * (cos_p * pi[n])];
            for m in 0..3 {
                e[m] += ia * ne[m] - bb * mo[m];
                c[m] += (ia * me[m] - bb * no[m]) * k;
            }
        }
        let er = Vec3::new(sin_t * cos_p, sin_t * sin_p, cos_t);
        let et = Vec3::new(cos_t * cos_p, cos_t * sin_p, -sin_t);
        let ep = Vec3::new(-sin_p, cos_p, 0.0);
        // Local Cartesian unit vectors back to global coordinates.
        let to_global = |v: [c64; 3]| -> CVec3 {
            let l: Vec<c64> = (0..3).map(|i| v[0] * er[i] + v[1] * et[i] + v[2] * ep[i]).collect();
            CVec3::new(l[0] * p.x + l[1] * q.x + l[2] * d.x, l[0] * p.y + l[1] * q.y + l[2] * d.y, l[0] * p.z + l[1] * q.z + l[2] * d.z)
        };
        Ok(MieValue { field: to_global(e), curl: to_global(c) })
    }

    /// Scattered field at each point.
    pub fn scattered_field(&self, points: &[Vec3]) -> Result<Vec<CVec3>> {
        points
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                self.value(x).map(|v| v.field).map_err(|e| match e {
                    Error::PointInside { norm, radius, .. } => Error::PointInside { index: i, norm, radius },
                    e => e,
                })
            })
            .collect()
    }
}

/// Scattered field of the sphere of radius `radius` at `points`.
pub fn mie_scattered_field(radius: f64, wave: IncidentWave, points: &[Vec3]) -> Result<Vec<CVec3>> {
    MieSolution::new(radius, wave)?.scattered_field(points)
}

/// Mean scattered field when the radius is `1 + εX` with `X ~ U[-1, 1]`, by `n_quad`-point
/// Gauss–Legendre quadrature in `X`.
pub fn mie_random_radius_mean(eps: f64, wave: IncidentWave, points: &[Vec3], n_quad: usize) -> Result<Vec<CVec3>> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Config(format!("radius perturbation must lie in [0, 1), got {eps}")));
    }
    if eps == 0.0 {
        return mie_scattered_field(1.0, wave, points);
    }
    let (t, w) = GaussRule::symmetric(n_quad);
    let mut mean = vec![CVec3::zeros(); points.len()];
    for (tq, wq) in t.iter().zip(&w) {
        let f = mie_scattered_field(1.0 + eps * tq, wave, points)?;
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v * c64::new(0.5 * wq, 0.0);
        }
    }
    Ok(mean)
}

/// Central finite differences of the scattered field in the radius at `radius`:
/// returns `(E, dE/da, d²E/da²)` per point with the given steps for first and second derivative.
#[allow(clippy::type_complexity)]
pub fn mie_radius_derivatives(
    radius: f64,
    wave: IncidentWave,
    points: &[Vec3],
    step1: f64,
    step2: f64,
) -> Result<(Vec<CVec3>, Vec<CVec3>, Vec<CVec3>)> {
    let e0 = mie_scattered_field(radius, wave, points)?;
    let p1 = mie_scattered_field(radius + step1, wave, points)?;
    let m1 = mie_scattered_field(radius - step1, wave, points)?;
    let p2 = mie_scattered_field(radius + step2, wave, points)?;
    let m2 = mie_scattered_field(radius - step2, wave, points)?;
    let d1 = p1.iter().zip(&m1).map(|(a, b)| (a - b) / c64::new(2.0 * step1, 0.0)).collect();
    let d2 = p2.iter().zip(&m2).zip(&e0).map(|((a, b), c)| (a + b - c * c64::new(2.0, 0.0)) / c64::new(step2 * step2, 0.0)).collect();
    Ok((e0, d1, d2))
}

/// `max_i |a_i - b_i|` over Euclidean norms of complex 3-vectors.
pub fn linf_distance(a: &[CVec3], b: &[CVec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::evaluation_sphere;
    use crate::space::cross_real;

    #[test]
    fn tangential_total_field_vanishes() {
        for wave in [IncidentWave::along_z(2.0), IncidentWave::new(Vec3::new(1.0, 1.0, 0.5), Vec3::new(1.0, -1.0, 0.0), 3.0).unwrap()] {
            let mie = MieSolution::new(1.0, wave).unwrap();
            for x in evaluation_sphere(50, 1.0) {
                let total = mie.value(&x).unwrap().field + wave.field(&x);
                assert!(cross_real(&total, &x).norm() < 1e-10, "{}", cross_real(&total, &x).norm());
            }
        }
    }

    #[test]
    fn curl_matches_finite_differences() {
        let wave = IncidentWave::along_z(2.0);
        let mie = MieSolution::new(1.0, wave).unwrap();
        let x = Vec3::new(0.9, -1.1, 0.7);
        let h = 1e-5;
        let d = |i: usize| {
            let mut e = Vec3::zeros();
            e[i] = h;
            (mie.value(&(x + e)).unwrap().field - mie.value(&(x - e)).unwrap().field) / c64::new(2.0 * h, 0.0)
        };
        let (dx, dy, dz) = (d(0), d(1), d(2));
        let curl = CVec3::new(dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]);
        assert!((curl - mie.value(&x).unwrap().curl).norm() < 1e-7);
    }

    #[test]
    fn points_inside_are_rejected() {
        let r = mie_scattered_field(1.0, IncidentWave::along_z(2.0), &[Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0)]);
        assert!(matches!(r, Err(Error::PointInside { index: 1, .. })));
    }
}
