//! Radiating Helmholtz fundamental solution.

use std::f64::consts::PI;

use crate::c64;
use crate::geometry::Vec3;
use crate::space::CVec3;

/// `G(x, y) = exp(iκ|x-y|) / (4π|x-y|)` and its gradient in `x`.
#[derive(Clone, Copy, Debug)]
pub struct HelmholtzKernel {
    pub kappa: f64,
}

impl HelmholtzKernel {
    pub fn new(kappa: f64) -> Self {
        Self { kappa }
    }

    pub fn value(&self, x: &Vec3, y: &Vec3) -> c64 {
        let r = (x - y).norm();
        let (s, c) = (self.kappa * r).sin_cos();
        c64::new(c, s) / (4.0 * PI * r)
    }

    /// `G` and the scalar `f` with `∇ₓG = (x - y) f`.
    #[inline]
    pub fn value_and_gradient_factor(&self, d: &Vec3) -> (c64, c64) {
        let r = d.norm();
        let (s, c) = (self.kappa * r).sin_cos();
        let g = c64::new(c, s) / (4.0 * PI * r);
        (g, g * c64::new(-1.0 / r, self.kappa) / r)
    }

    pub fn gradient_x(&self, x: &Vec3, y: &Vec3) -> CVec3 {
        let d = x - y;
        let (_, f) = self.value_and_gradient_factor(&d);
        d.map(|v| f * v)
    }
}
