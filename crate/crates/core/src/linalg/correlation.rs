//! Two-point correlation kernels of random boundary perturbations.

use std::fmt;
use std::sync::Arc;

use crate::geometry::Vec3;

type KernelFn = dyn Fn(&Vec3, &Vec3) -> f64 + Send + Sync;

/// `Cor[r](x, y)` on Γ×Γ.
#[derive(Clone)]
pub enum CorrelationKernel {
    Zero,
    /// `Cor[r] ≡ value`; `1/3` for a radius law `U[-1, 1]`.
    Constant(f64),
    /// `σ² exp(-|x - y|² / (2ℓ²))`.
    SquaredExponential {
        variance: f64,
        length: f64,
    },
    /// User kernel; must be symmetric and positive semidefinite.
    Custom {
        tag: String,
        kernel: Arc<KernelFn>,
    },
}

impl CorrelationKernel {
    pub fn custom(tag: impl Into<String>, kernel: impl Fn(&Vec3, &Vec3) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { tag: tag.into(), kernel: Arc::new(kernel) }
    }

    pub fn eval(&self, x: &Vec3, y: &Vec3) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::SquaredExponential { variance, length } => variance * (-(x - y).norm_squared() / (2.0 * length * length)).exp(),
            Self::Custom { kernel, .. } => kernel(x, y),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Constant(c) => format!("constant({c})"),
            Self::SquaredExponential { variance, length } => format!("squared-exponential(σ²={variance}, ℓ={length})"),
            Self::Custom { tag, .. } => tag.clone(),
        }
    }

    /// Returns the kernel multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Zero => Self::Zero,
            Self::Constant(c) => Self::Constant(c * factor),
            Self::SquaredExponential { variance, length } => Self::SquaredExponential { variance: variance * factor, length: *length },
            Self::Custom { tag, kernel } => {
                let k = kernel.clone();
                Self::Custom { tag: format!("{factor}·{tag}"), kernel: Arc::new(move |x, y| factor * k(x, y)) }
            }
        }
    }
}

impl fmt::Debug for CorrelationKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_kernels() {
        let x = Vec3::new(0.1, 0.2, 0.3);
        let y = Vec3::new(-0.4, 0.0, 0.9);
        for k in [
            CorrelationKernel::Zero,
            CorrelationKernel::Constant(1.0 / 3.0),
            CorrelationKernel::SquaredExponential { variance: 2.0, length: 0.5 },
            CorrelationKernel::custom("dot", |a, b| a.dot(b)),
        ] {
            assert_eq!(k.eval(&x, &y), k.eval(&y, &x), "{k:?}");
            assert_eq!(k.scaled(4.0).eval(&x, &y), 4.0 * k.eval(&x, &y));
        }
    }
}
