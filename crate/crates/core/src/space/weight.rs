use crate::error::{Error, Result};

/// Exponents of the two-sided power weight `ς_{a,b}`: `x^a` on `(0,1]`, `x^b` on `[1,∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub a: f64,
    pub b: f64,
}

impl WeightParams {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// The weight used for the profile topology: `a = -α`, `b = β`.
    pub fn profile(alpha: f64, beta: f64) -> Self {
        Self::new(-alpha, beta)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::NonPositiveArgument(x));
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        if x <= 1.0 {
            x.powf(self.a)
        } else {
            x.powf(self.b)
        }
    }

    /// `ς_{a1,b1} · ς_{a2,b2} = ς_{a1+a2, b1+b2}`.
    pub fn product(&self, other: &WeightParams) -> WeightParams {
        WeightParams::new(self.a + other.a, self.b + other.b)
    }

    /// `x^γ · ς_{a,b} = ς_{a+γ, b+γ}`.
    pub fn shifted(&self, gamma: f64) -> WeightParams {
        WeightParams::new(self.a + gamma, self.b + gamma)
    }

    /// Node-wise domination `ς_self ≤ ς_other`, i.e. `other.a ≤ self.a` and `self.b ≤ other.b`.
    pub fn dominated_by(&self, other: &WeightParams) -> bool {
        other.a <= self.a && self.b <= other.b
    }
}

/// Default `β = (3 + α)/2`, the midpoint of `(1 + α, 2)`.
pub fn default_beta(alpha: f64) -> f64 {
    0.5 * (3.0 + alpha)
}
