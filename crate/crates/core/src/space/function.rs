use crate::error::{Error, Result};

use super::grid::{cubic_weights, Grid};

/// Fallback right-tail rate when the last two nodes do not show decay.
const FALLBACK_RATE: f64 = 1.0;

/// The model of a grid function below `x_min`:
/// `(v₀ + λ ln(x/x_min)) (x/x_min)^p`, or its absolute value.
///
/// Power laws have `λ = 0`; functions with a logarithmic singularity at zero,
/// such as those in the range of the inverse of the linearised operator, have
/// `p = 0` and `λ ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeftTail {
    pub v0: f64,
    pub exponent: f64,
    pub log_slope: f64,
    pub absolute: bool,
}

impl LeftTail {
    /// `e^{ks}((v₀ + λs)/k − λ/k²)`, a primitive of `(v₀ + λs)e^{ks}` vanishing at `-∞`.
    fn primitive(&self, k: f64, s: f64) -> f64 {
        (k * s).exp() * ((self.v0 + self.log_slope * s) / k - self.log_slope / (k * k))
    }

    fn is_zero(&self) -> bool {
        self.v0 == 0.0 && self.log_slope == 0.0
    }

    /// Value at `x ≤ x_min`.
    pub fn value(&self, x0: f64, x: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let s = (x / x0).ln();
        let lin = self.v0 + self.log_slope * s;
        let lin = if self.absolute { lin.abs() } else { lin };
        lin * (self.exponent * s).exp()
    }

    /// `∫₀^x` of the model for `x ≤ x_min`.
    pub fn partial(&self, x0: f64, x: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let k = self.exponent + 1.0;
        if k <= 0.0 {
            return Err(Error::NonIntegrable(format!("left tail exponent {} is not above -1", self.exponent)));
        }
        let s = (x / x0).ln().min(0.0);
        let full = self.primitive(k, s);
        if !self.absolute {
            return Ok(x0 * full);
        }
        let root = if self.log_slope != 0.0 { -self.v0 / self.log_slope } else { f64::INFINITY };
        if root < s {
            let at_root = self.primitive(k, root);
            Ok(x0 * (at_root.abs() + (full - at_root).abs()))
        } else {
            Ok(x0 * full.abs())
        }
    }

    /// `∫₀^{x_min}` of the model.
    pub fn integral(&self, x0: f64) -> Result<f64> {
        self.partial(x0, x0)
    }
}

/// Values of a real function on the nodes of a [`Grid`], extended beyond the grid
/// by a [`LeftTail`] model on the left and `v_{n-1} e^{-r(x - x_max)}` on the right.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    /// `ln |v|` per node; all NaN when the values change sign, so such
    /// functions are interpolated on values throughout.
    logs: Vec<f64>,
    /// Common sign of the values behind `logs`.
    log_sign: f64,
    left_tail_exponent: f64,
    left_log_slope: f64,
    left_absolute: bool,
    right_tail_rate: f64,
}

impl GridFunction {
    /// Wraps node values and fits both tail models from the outermost two nodes.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        let (p, lambda) = fit_left(grid, &values);
        let r = fit_right_rate(grid, &values);
        Ok(Self::assemble(grid.clone(), values, p, r).with_left_log_slope(lambda))
    }

    /// Samples `f` on the nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::assemble(grid.clone(), vec![0.0; grid.len()], 0.0, FALLBACK_RATE)
    }

    fn assemble(grid: Grid, values: Vec<f64>, p: f64, r: f64) -> Self {
        let negative = values.iter().any(|&v| v < 0.0);
        let log_sign = if negative { -1.0 } else { 1.0 };
        let logs = if negative && values.iter().any(|&v| v > 0.0) {
            vec![f64::NAN; values.len()]
        } else {
            values.iter().map(|&v| if v != 0.0 { v.abs().ln() } else { f64::NAN }).collect()
        };
        Self {
            grid,
            values,
            logs,
            log_sign,
            left_tail_exponent: p,
            left_log_slope: 0.0,
            left_absolute: false,
            right_tail_rate: r,
        }
    }

    /// Node values with every tail parameter given explicitly.
    pub(crate) fn from_parts(
        grid: &Grid,
        values: Vec<f64>,
        left_exponent: f64,
        left_log_slope: f64,
        left_absolute: bool,
        right_rate: f64,
    ) -> Self {
        let mut f = Self::assemble(grid.clone(), values, left_exponent, right_rate);
        f.left_log_slope = left_log_slope;
        f.left_absolute = left_absolute;
        f
    }

    /// Replaces the left exponent and the right rate; the left log slope is kept.
    pub fn with_tails(mut self, left_exponent: f64, right_rate: f64) -> Self {
        self.left_tail_exponent = left_exponent;
        self.right_tail_rate = right_rate;
        self
    }

    /// Replaces `λ` in the left model.
    pub fn with_left_log_slope(mut self, lambda: f64) -> Self {
        self.left_log_slope = lambda;
        self
    }

    pub fn left_tail(&self) -> LeftTail {
        LeftTail {
            v0: if self.left_absolute { self.values[0].abs() } else { self.values[0] },
            exponent: self.left_tail_exponent,
            log_slope: self.left_log_slope,
            absolute: self.left_absolute,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn left_tail_exponent(&self) -> f64 {
        self.left_tail_exponent
    }

    pub fn left_log_slope(&self) -> f64 {
        self.left_log_slope
    }

    pub fn right_tail_rate(&self) -> f64 {
        self.right_tail_rate
    }

    /// Value at an arbitrary `x > 0`: tail models outside the grid, cubic
    /// interpolation in `ln x` inside. Non-negative functions are interpolated on
    /// `ln f` wherever the four-point stencil is strictly positive.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_pos(self.grid.log_position(x), x)
    }

    /// As [`eval`](Self::eval) with the log position `t` of `x` supplied by the caller.
    #[inline]
    pub fn eval_pos(&self, t: f64, x: f64) -> f64 {
        let n = self.values.len();
        if t <= 0.0 {
            if t == 0.0 {
                return self.values[0];
            }
            return self.left_tail().value(self.grid.x_min(), x);
        }
        let last = (n - 1) as f64;
        if t >= last {
            if t == last {
                return self.values[n - 1];
            }
            let v = self.values[n - 1];
            if v == 0.0 {
                return 0.0;
            }
            return v * (-self.right_tail_rate * (x - self.grid.x_max())).exp();
        }
        let k = t.floor();
        if k == t {
            return self.values[k as usize];
        }
        let start = ((k as isize) - 1).clamp(0, n as isize - 4) as usize;
        let w = cubic_weights(t - start as f64);
        let l = &self.logs[start..start + 4];
        if l.iter().all(|v| !v.is_nan()) {
            self.log_sign * (w[0] * l[0] + w[1] * l[1] + w[2] * l[2] + w[3] * l[3]).exp()
        } else {
            let v = &self.values[start..start + 4];
            w[0] * v[0] + w[1] * v[1] + w[2] * v[2] + w[3] * v[3]
        }
    }

    /// Node-wise map `v ↦ f(x, v)`, refitting the tails.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let vals = self.grid.nodes().iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self::from_values(&self.grid, vals)
    }

    /// Node-wise combination with another function on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let vals = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_values(&self.grid, vals)
    }

    /// `c · self`; tails are kept.
    pub fn scaled(&self, c: f64) -> Self {
        let vals = self.values.iter().map(|v| c * v).collect();
        let mut out = Self::assemble(self.grid.clone(), vals, self.left_tail_exponent, self.right_tail_rate)
            .with_left_log_slope(c * self.left_log_slope);
        out.left_absolute = self.left_absolute;
        out
    }

    /// `a·self + b·other`. The tails are those of the more singular operand
    /// (smaller left exponent, smaller right rate), not refitted: a fit through
    /// two nodes of a near-cancelling difference is dominated by round-off.
    pub fn lincomb(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let vals: Vec<f64> = self.values.iter().zip(&other.values).map(|(&u, &v)| a * u + b * v).collect();
        if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        let pick = |x: f64, y: f64, xa: bool, ya: bool| match (xa, ya) {
            (true, true) => x.min(y),
            (true, false) => x,
            (false, true) => y,
            (false, false) => x.min(y),
        };
        let n = self.len();
        let (l0, l1) = (a != 0.0 && self.values[0] != 0.0, b != 0.0 && other.values[0] != 0.0);
        let (r0, r1) = (a != 0.0 && self.values[n - 1] != 0.0, b != 0.0 && other.values[n - 1] != 0.0);
        let p = pick(self.left_tail_exponent, other.left_tail_exponent, l0, l1);
        let r = pick(self.right_tail_rate, other.right_tail_rate, r0, r1);
        // log slopes only combine between operands sharing the chosen exponent
        let slope = |f: &GridFunction, c: f64| {
            if f.left_tail_exponent == p {
                c * f.left_log_slope
            } else {
                0.0
            }
        };
        let lambda = slope(self, a) + slope(other, b);
        Ok(Self::assemble(self.grid.clone(), vals, p, r).with_left_log_slope(lambda))
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.lincomb(1.0, other, -1.0)
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &GridFunction) -> Result<Self> {
        self.lincomb(1.0, other, c)
    }

    /// `|f|`; the left model becomes the absolute value of the signed one, so a
    /// zero crossing below `x_min` is integrated correctly.
    pub fn abs(&self) -> Self {
        let vals = self.values.iter().map(|v| v.abs()).collect();
        let v0 = self.values[0];
        // rewrite v₀ + λs as ±(|v₀| + λ's)
        let lambda = if v0 != 0.0 { v0.signum() * self.left_log_slope } else { -self.left_log_slope.abs() };
        let mut out = Self::assemble(self.grid.clone(), vals, self.left_tail_exponent, self.right_tail_rate)
            .with_left_log_slope(lambda);
        out.left_absolute = self.left_absolute || lambda != 0.0;
        out
    }

    /// Largest `|f|` over nodes in `[lo, hi]`.
    pub fn sup_abs_on(&self, lo: f64, hi: f64) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .filter(|(&x, _)| x >= lo && x <= hi)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

/// `(p, λ)` of the left model: linear in `ln x` when that predicts the third node
/// from the first two better than a power law does, a power law otherwise.
fn fit_left(grid: &Grid, values: &[f64]) -> (f64, f64) {
    let p = fit_left_exponent(grid, values);
    if values.len() < 3 {
        return (p, 0.0);
    }
    let (v0, v1, v2) = (values[0], values[1], values[2]);
    let linear_miss = (v2 - 2.0 * v1 + v0).abs();
    let power_miss = if v0 != 0.0 && v1 / v0 > 0.0 { (v2 - v1 * v1 / v0).abs() } else { f64::INFINITY };
    if linear_miss < power_miss {
        let lambda = (v1 - v0) / grid.log_step();
        if lambda != 0.0 {
            return (0.0, lambda);
        }
    }
    (p, 0.0)
}

/// Log-log slope through the first two nodes; `0` when it cannot be formed.
pub(crate) fn fit_left_exponent(grid: &Grid, values: &[f64]) -> f64 {
    let (v0, v1) = (values[0], values[1]);
    if v0 == 0.0 || v1 == 0.0 || v0.signum() != v1.signum() {
        return 0.0;
    }
    let p = (v1 / v0).ln() / grid.log_step();
    if p.is_finite() {
        p
    } else {
        0.0
    }
}

/// Exponential decay rate through the last two nodes.
pub(crate) fn fit_right_rate(grid: &Grid, values: &[f64]) -> f64 {
    let n = values.len();
    let (va, vb) = (values[n - 2], values[n - 1]);
    if va == 0.0 || vb == 0.0 || va.signum() != vb.signum() {
        return FALLBACK_RATE;
    }
    let dx = grid.node(n - 1) - grid.node(n - 2);
    let r = (va / vb).ln() / dx;
    if r.is_finite() && r > 0.0 {
        r
    } else {
        FALLBACK_RATE
    }
}
