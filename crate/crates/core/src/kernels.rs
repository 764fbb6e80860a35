//! Coagulation kernels `K_ε(x, y) = 2 + ε W(x, y)`.
//!
//! `W` is symmetric and homogeneous of degree zero. The canonical choice is
//! `W = c*((x/y)^α + (y/x)^α)`; any other `W` below that bound can be supplied
//! through [`Perturbation::custom`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::space::WeightParams;

type WFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// The perturbation `W` of the constant kernel.
#[derive(Clone)]
pub enum Perturbation {
    /// `c*((x/y)^α + (y/x)^α)`.
    PowerSymmetric,
    /// A user-supplied `W`; `None` selects the built-in `c*·4√(xy)/(x + y)`.
    BoundedCustom(Option<Arc<WFn>>),
}

impl Perturbation {
    pub fn custom(w: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Perturbation::BoundedCustom(Some(Arc::new(w)))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::PowerSymmetric => "power_symmetric",
            Perturbation::BoundedCustom(_) => "bounded_custom",
        }
    }
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::PowerSymmetric => f.write_str("PowerSymmetric"),
            Perturbation::BoundedCustom(None) => f.write_str("BoundedCustom(default)"),
            Perturbation::BoundedCustom(Some(_)) => f.write_str("BoundedCustom(<closure>)"),
        }
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "power_symmetric" | "power" => Ok(Perturbation::PowerSymmetric),
            "bounded_custom" | "custom" => Ok(Perturbation::BoundedCustom(None)),
            other => Err(Error::InvalidKernel(format!("unknown perturbation form {other:?}"))),
        }
    }
}

/// Parameters of `K_ε = 2 + εW`.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    pub epsilon: f64,
    pub alpha: f64,
    pub form: Perturbation,
    pub c_star: f64,
}

impl KernelSpec {
    pub fn new(epsilon: f64, alpha: f64, form: Perturbation, c_star: f64) -> Result<Self> {
        let spec = Self { epsilon, alpha, form, c_star };
        spec.validate()?;
        Ok(spec)
    }

    pub fn power(epsilon: f64, alpha: f64, c_star: f64) -> Result<Self> {
        Self::new(epsilon, alpha, Perturbation::PowerSymmetric, c_star)
    }

    /// The constant kernel `K ≡ 2` (any admissible `α` may be attached for norms).
    pub fn constant(alpha: f64) -> Result<Self> {
        Self::power(0.0, alpha, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "epsilon must be a finite non-negative number, got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidKernel(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.c_star > 0.0 && self.c_star <= 1.0) {
            return Err(Error::InvalidKernel(format!("c_star must lie in (0, 1], got {}", self.c_star)));
        }
        Ok(())
    }

    pub fn is_power(&self) -> bool {
        matches!(self.form, Perturbation::PowerSymmetric)
    }

    /// `W(x, y)`.
    pub fn perturbation(&self, x: f64, y: f64) -> Result<f64> {
        check_args(x, y)?;
        Ok(self.w(x, y))
    }

    /// `K_ε(x, y) = 2 + εW(x, y)`.
    pub fn kernel(&self, x: f64, y: f64) -> Result<f64> {
        check_args(x, y)?;
        Ok(self.k(x, y))
    }

    /// `W` without argument checks.
    #[inline]
    pub fn w(&self, x: f64, y: f64) -> f64 {
        match &self.form {
            Perturbation::PowerSymmetric => {
                let r = (x / y).powf(self.alpha);
                self.c_star * (r + 1.0 / r)
            }
            Perturbation::BoundedCustom(None) => self.c_star * 4.0 * (x * y).sqrt() / (x + y),
            Perturbation::BoundedCustom(Some(f)) => f(x, y),
        }
    }

    #[inline]
    pub fn k(&self, x: f64, y: f64) -> f64 {
        2.0 + self.epsilon * self.w(x, y)
    }

    /// The upper bound `(x/y)^α + (y/x)^α`.
    pub fn upper_bound(&self, x: f64, y: f64) -> f64 {
        let r = (x / y).powf(self.alpha);
        r + 1.0 / r
    }
}

fn check_args(x: f64, y: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveArgument(x));
    }
    if !(y > 0.0) {
        return Err(Error::NonPositiveArgument(y));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct KernelCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation (or, for the weight bound, the empirical constant).
    pub measured: f64,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<KernelCheck>,
    /// Smallest `C` with `W(x,y) ≤ C ς_{-α,α}(x) ς_{-α,α}(y)` over the samples.
    pub weight_constant: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&KernelCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks symmetry, homogeneity and the upper, weight and lower bounds of `W`
/// at `sample_count` random points with sizes spread over twelve decades.
pub fn validate_kernel(spec: &KernelSpec, sample_count: usize, seed: u64) -> Result<ValidationReport> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be at least 1".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let weight = WeightParams::new(-spec.alpha, spec.alpha);
    let mut sym = 0.0f64;
    let mut hom = 0.0f64;
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut wconst = 0.0f64;
    for _ in 0..sample_count {
        let x = 10f64.powf(rng.gen_range(-6.0..6.0));
        let y = 10f64.powf(rng.gen_range(-6.0..6.0));
        let lambda = 10f64.powf(rng.gen_range(-3.0..3.0));
        let kxy = spec.k(x, y);
        let scale = kxy.abs().max(f64::MIN_POSITIVE);
        sym = sym.max((kxy - spec.k(y, x)).abs() / scale);
        hom = hom.max((spec.k(lambda * x, lambda * y) - kxy).abs() / scale);
        let w = spec.w(x, y);
        let bound = spec.upper_bound(x, y);
        upper = upper.max((w - bound) / bound);
        lower = lower.max((spec.c_star * bound - w) / bound);
        let denom = weight.eval_unchecked(x) * weight.eval_unchecked(y);
        wconst = wconst.max(w / denom);
    }
    let mut checks = vec![
        KernelCheck { name: "symmetry", passed: sym <= 1e-12, measured: sym },
        KernelCheck { name: "homogeneity", passed: hom <= 1e-12, measured: hom },
        KernelCheck { name: "upper_bound", passed: upper <= 1e-12, measured: upper.max(0.0) },
        KernelCheck { name: "weight_bound", passed: wconst.is_finite(), measured: wconst },
    ];
    if spec.is_power() {
        checks.push(KernelCheck { name: "lower_bound", passed: lower <= 1e-12, measured: lower.max(0.0) });
    }
    Ok(ValidationReport { checks, weight_constant: wconst })
}
