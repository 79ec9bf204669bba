//! Incident plane waves.

use crate::c64;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::space::{cross_real, scale, CVec3};

/// `E^i(x) = p e^{iκ⟨d,x⟩}` with unit `d ⟂ p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentWave {
    pub direction: Vec3,
    pub polarization: Vec3,
    pub kappa: f64,
}

impl IncidentWave {
    pub fn new(direction: Vec3, polarization: Vec3, kappa: f64) -> Result<Self> {
        let (dn, pn) = (direction.norm(), polarization.norm());
        if dn == 0.0 || pn == 0.0 {
            return Err(Error::Config("incident direction and polarization must be nonzero".into()));
        }
        let (d, p) = (direction / dn, polarization / pn);
        if d.dot(&p).abs() > 1e-12 {
            return Err(Error::Config(format!("polarization is not orthogonal to direction (⟨p,d⟩ = {:e})", d.dot(&p))));
        }
        if !(kappa > 0.0) {
            return Err(Error::Config(format!("wavenumber must be positive, got {kappa}")));
        }
        Ok(Self { direction: d, polarization: p, kappa })
    }

    /// The experiment default: `d = e_z`, `p = e_x`.
    pub fn along_z(kappa: f64) -> Self {
        Self { direction: Vec3::z(), polarization: Vec3::x(), kappa }
    }

    fn phase(&self, x: &Vec3) -> c64 {
        c64::from_polar(1.0, self.kappa * self.direction.dot(x))
    }

    pub fn field(&self, x: &Vec3) -> CVec3 {
        scale(&self.polarization, self.phase(x))
    }

    /// `curl E^i = iκ (d × p) e^{iκ⟨d,x⟩}`.
    pub fn curl(&self, x: &Vec3) -> CVec3 {
        scale(&self.direction.cross(&self.polarization), c64::new(0.0, self.kappa) * self.phase(x))
    }

    /// `γ_t E^i = n × E^i`.
    pub fn tangential_trace(&self, x: &Vec3, n: &Vec3) -> CVec3 {
        -cross_real(&self.field(x), n)
    }

    /// `γ_N E^i = n × curl E^i`.
    pub fn neumann_trace(&self, x: &Vec3, n: &Vec3) -> CVec3 {
        -cross_real(&self.curl(x), n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_orthogonal_polarization() {
        assert!(IncidentWave::new(Vec3::z(), Vec3::new(1.0, 0.0, 0.1), 2.0).is_err());
        assert!(IncidentWave::new(Vec3::z(), Vec3::x(), 0.0).is_err());
    }

    #[test]
    fn curl_curl_identity() {
        let w = IncidentWave::new(Vec3::new(1.0, 2.0, -1.0), Vec3::new(1.0, 0.0, 1.0), 2.5).unwrap();
        let x = Vec3::new(0.3, -0.7, 1.1);
        let h = 1e-4;
        // curl curl E = κ² E for a divergence-free plane wave; check curl by central differences.
        let mut curl = CVec3::zeros();
        let d = |i: usize| {
            let mut e = Vec3::zeros();
            e[i] = h;
            (w.field(&(x + e)) - w.field(&(x - e))) / c64::new(2.0 * h, 0.0)
        };
        let (dx, dy, dz) = (d(0), d(1), d(2));
        curl[0] = dy[2] - dz[1];
        curl[1] = dz[0] - dx[2];
        curl[2] = dx[1] - dy[0];
        assert!((curl - w.curl(&x)).norm() < 1e-6);
        let mut cc = CVec3::zeros();
        let dc = |i: usize| {
            let mut e = Vec3::zeros();
            e[i] = h;
            (w.curl(&(x + e)) - w.curl(&(x - e))) / c64::new(2.0 * h, 0.0)
        };
        let (cx, cy, cz) = (dc(0), dc(1), dc(2));
        cc[0] = cy[2] - cz[1];
        cc[1] = cz[0] - cx[2];
        cc[2] = cx[1] - cy[0];
        assert!((cc - w.field(&x) * c64::new(w.kappa * w.kappa, 0.0)).norm() < 1e-5);
    }
}
