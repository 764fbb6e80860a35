//! Quadrature on the log grid.
//!
//! Integrals `∫ f dx` are computed as `∫ F du` with `u = ln x` and `F = f·x`,
//! using a sixth-order cell rule (quintic through six neighbouring nodes), a
//! power-law closure below `x_min` and an exponential closure above `x_max`.

use crate::error::{Error, Result};

use super::function::{GridFunction, LeftTail};
use super::grid::Grid;
use super::weight::WeightParams;

/// Integrals of `F` over each cell `[u_j, u_{j+1}]` of a uniform grid with step `h`.
///
/// With six or more samples each cell integrates the quintic through the six
/// nearest nodes (one-sided near the ends); shorter arrays use lower-order rules.
pub fn cell_integrals(f: &[f64], h: f64) -> Vec<f64> {
    let m = f.len();
    match m {
        0 | 1 => Vec::new(),
        2 => vec![0.5 * h * (f[0] + f[1])],
        3 => vec![h * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0, h * (-f[0] + 8.0 * f[1] + 5.0 * f[2]) / 12.0],
        4 | 5 => {
            let c = h / 24.0;
            let mut out = Vec::with_capacity(m - 1);
            out.push(c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]));
            for j in 1..m - 2 {
                out.push(c * (13.0 * (f[j] + f[j + 1]) - f[j - 1] - f[j + 2]));
            }
            out.push(c * (f[m - 4] - 5.0 * f[m - 3] + 19.0 * f[m - 2] + 9.0 * f[m - 1]));
            out
        }
        _ => {
            const FIRST: [f64; 6] = [475.0, 1427.0, -798.0, 482.0, -173.0, 27.0];
            const SECOND: [f64; 6] = [-27.0, 637.0, 1022.0, -258.0, 77.0, -11.0];
            const INNER: [f64; 6] = [11.0, -93.0, 802.0, 802.0, -93.0, 11.0];
            let c = h / 1440.0;
            let dot = |w: &[f64; 6], s: &[f64]| w.iter().zip(s).map(|(a, b)| a * b).sum::<f64>();
            let rdot = |w: &[f64; 6], s: &[f64]| w.iter().zip(s.iter().rev()).map(|(a, b)| a * b).sum::<f64>();
            let mut out = Vec::with_capacity(m - 1);
            out.push(c * dot(&FIRST, &f[..6]));
            out.push(c * dot(&SECOND, &f[..6]));
            for j in 2..m - 3 {
                out.push(c * dot(&INNER, &f[j - 2..j + 4]));
            }
            out.push(c * rdot(&SECOND, &f[m - 6..]));
            out.push(c * rdot(&FIRST, &f[m - 6..]));
            out
        }
    }
}

/// Sum of [`cell_integrals`].
pub fn cell_sum(f: &[f64], h: f64) -> f64 {
    cell_integrals(f, h).iter().sum()
}

/// `∫_{-∞}^{u_0} F du` for `F(u) = F_0 e^{s(u - u_0)}` with `s` taken from the first two samples.
pub fn power_tail(f0: f64, f1: f64, h: f64) -> Result<f64> {
    if f0 == 0.0 {
        return Ok(0.0);
    }
    let ratio = f1 / f0;
    if !(ratio > 0.0) || !ratio.is_finite() {
        // no usable slope: treat the integrand as locally constant in x
        return Ok(f0);
    }
    let s = ratio.ln() / h;
    if s <= 0.0 {
        return Err(Error::NonIntegrable(format!("left tail grows like x^{:.4} towards 0", s - 1.0)));
    }
    Ok(f0 / s)
}

fn right_tail_integral(v: f64, r: f64) -> Result<f64> {
    if v == 0.0 {
        return Ok(0.0);
    }
    if r <= 0.0 {
        return Err(Error::NonIntegrable(format!("right tail rate {r} is not positive")));
    }
    Ok(v / r)
}

/// `∫₀^∞ f dx` under the tail models of `f`.
pub fn integrate(f: &GridFunction) -> Result<f64> {
    let g = f.grid();
    let n = g.len();
    let fu: Vec<f64> = f.values().iter().zip(g.nodes()).map(|(v, x)| v * x).collect();
    let body = cell_sum(&fu, g.log_step());
    let left = f.left_tail().integral(g.x_min())?;
    let right = right_tail_integral(f.value(n - 1), f.right_tail_rate())?;
    Ok(left + body + right)
}

/// `f · x^γ` with tails shifted consistently (`p + γ`, `r - γ/x_max`).
pub fn power_product(f: &GridFunction, gamma: f64) -> GridFunction {
    if gamma == 0.0 {
        return f.clone();
    }
    let g = f.grid();
    let vals: Vec<f64> = f.values().iter().zip(g.nodes()).map(|(v, x)| v * x.powf(gamma)).collect();
    let p = f.left_tail_exponent() + gamma;
    let r = f.right_tail_rate() - gamma / g.x_max();
    let lambda = f.left_log_slope() * g.x_min().powf(gamma);
    GridFunction::from_parts(g, vals, p, lambda, f.left_tail().absolute, r)
}

/// Signed `∫₀^∞ f ς_{a,b} dx`; the kink of the weight at `x = 1` is integrated exactly.
pub fn integrate_weighted(f: &GridFunction, w: WeightParams) -> Result<f64> {
    if w.a == w.b {
        return integrate(&power_product(f, w.a));
    }
    let below = Cumulative::new(&power_product(f, w.a))?;
    let above = Cumulative::new(&power_product(f, w.b))?;
    Ok(below.lower_at(1.0) + above.upper_at(1.0))
}

/// `‖f‖_{X_{a,b}} = ∫ |f| ς_{a,b}`, with `|f|` taken node-wise.
pub fn weighted_norm(f: &GridFunction, w: WeightParams) -> Result<f64> {
    integrate_weighted(&f.abs(), w)
}

/// `M_s[f] = ∫ x^s f dx`.
pub fn moment(f: &GridFunction, s: f64) -> Result<f64> {
    integrate(&power_product(f, s))
}

pub fn first_moment(f: &GridFunction) -> Result<f64> {
    moment(f, 1.0)
}

/// `f + c·m₁` with `m₁ = (1 - x)e^{-x}` and `c = M₁[f]`, so the result has vanishing
/// first moment (`∫ x m₁ = -1`).
///
/// `c` is divided by minus the discrete first moment of the sampled `m₁` so that
/// the projected moment vanishes to round-off rather than to quadrature accuracy.
pub fn project_zero_moment(f: &GridFunction) -> Result<GridFunction> {
    let c = first_moment(f)?;
    if c == 0.0 {
        return Ok(f.clone());
    }
    let m = GridFunction::from_fn(f.grid(), |x| (1.0 - x) * (-x).exp())?;
    f.axpy(c / -first_moment(&m)?, &m)
}

/// Lower and upper cumulative integrals of a grid function.
///
/// `lower(x) = ∫₀^x f`, `upper(x) = ∫_x^∞ f`. Both are accumulated separately so
/// neither is obtained by subtracting from the total. Off-node values use cubic
/// Hermite interpolation in `u` with the exact derivative `f·x`.
#[derive(Clone, Debug)]
pub struct Cumulative {
    grid: Grid,
    deriv: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    left: LeftTail,
    right_rate: f64,
}

impl Cumulative {
    pub fn new(f: &GridFunction) -> Result<Self> {
        let g = f.grid();
        let n = g.len();
        let h = g.log_step();
        let deriv: Vec<f64> = f.values().iter().zip(g.nodes()).map(|(v, x)| v * x).collect();
        let cells = cell_integrals(&deriv, h);
        let left_tail = f.left_tail();
        let left = left_tail.integral(g.x_min())?;
        let right = right_tail_integral(f.value(n - 1), f.right_tail_rate())?;
        let mut lower = Vec::with_capacity(n);
        lower.push(left);
        for c in &cells {
            let last = *lower.last().unwrap();
            lower.push(last + c);
        }
        let mut upper = vec![0.0; n];
        upper[n - 1] = right;
        for j in (0..n - 1).rev() {
            upper[j] = upper[j + 1] + cells[j];
        }
        Ok(Self { grid: g.clone(), deriv, lower, upper, left: left_tail, right_rate: f.right_tail_rate() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn total(&self) -> f64 {
        let n = self.lower.len();
        self.lower[n - 1] + self.upper[n - 1]
    }

    #[inline]
    pub fn lower_node(&self, j: usize) -> f64 {
        self.lower[j]
    }

    #[inline]
    pub fn upper_node(&self, j: usize) -> f64 {
        self.upper[j]
    }

    pub fn lower_nodes(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_nodes(&self) -> &[f64] {
        &self.upper
    }

    pub fn lower_at(&self, x: f64) -> f64 {
        self.lower_pos(self.grid.log_position(x), x)
    }

    pub fn upper_at(&self, x: f64) -> f64 {
        self.upper_pos(self.grid.log_position(x), x)
    }

    /// `∫₀^x f` with the log position `t` of `x` supplied.
    #[inline]
    pub fn lower_pos(&self, t: f64, x: f64) -> f64 {
        let n = self.lower.len();
        if t <= 0.0 {
            return self.left_part(x);
        }
        if t >= (n - 1) as f64 {
            let tail = self.upper[n - 1];
            if tail == 0.0 {
                return self.lower[n - 1];
            }
            let frac = -(-self.right_rate * (x - self.grid.x_max())).exp_m1();
            return self.lower[n - 1] + tail * frac;
        }
        self.hermite(&self.lower, 1.0, t)
    }

    /// `∫_x^∞ f` with the log position `t` of `x` supplied.
    #[inline]
    pub fn upper_pos(&self, t: f64, x: f64) -> f64 {
        let n = self.upper.len();
        if t <= 0.0 {
            return self.upper[0] + (self.lower[0] - self.left_part(x));
        }
        if t >= (n - 1) as f64 {
            let tail = self.upper[n - 1];
            if tail == 0.0 {
                return 0.0;
            }
            return tail * (-self.right_rate * (x - self.grid.x_max())).exp();
        }
        self.hermite(&self.upper, -1.0, t)
    }

    fn left_part(&self, x: f64) -> f64 {
        // the total below x_min is already known to be finite
        self.left.partial(self.grid.x_min(), x).unwrap_or(0.0)
    }

    #[inline]
    fn hermite(&self, table: &[f64], sign: f64, t: f64) -> f64 {
        let k = t.floor();
        let s = t - k;
        let k = k as usize;
        if s == 0.0 {
            return table[k];
        }
        let h = self.grid.log_step();
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * table[k] + h01 * table[k + 1] + sign * h * (h10 * self.deriv[k] + h11 * self.deriv[k + 1])
    }
}

/// `S_i = ∫_{u_i}^∞ e^{B_i - B(u)} G(u) du` at every node, for a non-decreasing
/// exponent `B` sampled on the nodes.
///
/// Evaluated by the backward recursion `S_i = e^{B_i - B_{i+1}} S_{i+1} + cell_i`,
/// so no factor `e^{B}` is ever formed on its own. Cells where `B` changes by more
/// than `STIFF_STEP` use an exponentially fitted rule: the chord of `B` is
/// integrated exactly against a quadratic through three nodes of
/// `G e^{-(B - chord)}`. The remaining cells use the fourth-order cell rule.
/// `tail` is `S_{n-1}`.
pub fn damped_upper_integrals(b: &[f64], g: &[f64], h: f64, tail: f64) -> Vec<f64> {
    const STIFF_STEP: f64 = 0.5;
    let n = b.len();
    debug_assert_eq!(g.len(), n);
    let mut s = vec![0.0; n];
    s[n - 1] = tail;
    for i in (0..n - 1).rev() {
        let db = b[i + 1] - b[i];
        let cell = if n < 4 {
            0.5 * h * (g[i] + (-db).exp() * g[i + 1])
        } else if db.abs() > STIFF_STEP {
            fitted_cell(b, g, h, i)
        } else {
            let lo = if i == 0 {
                0
            } else if i + 2 >= n {
                n - 4
            } else {
                i - 1
            };
            let f: [f64; 4] = std::array::from_fn(|m| (b[i] - b[lo + m]).exp() * g[lo + m]);
            let c = h / 24.0;
            match i - lo {
                0 => c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]),
                1 => c * (13.0 * (f[1] + f[2]) - f[0] - f[3]),
                _ => c * (f[0] - 5.0 * f[1] + 19.0 * f[2] + 9.0 * f[3]),
            }
        };
        s[i] = (-db).exp() * s[i + 1] + cell;
    }
    s
}

/// `∫₀^1 s^k e^{-μ s} ds` for `k = 0, 1, 2`.
fn exp_moments(mu: f64) -> [f64; 3] {
    if mu.abs() < 1.0 {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 0.0;
            for m in 0..40 {
                if m > 0 {
                    term *= -mu / m as f64;
                }
                sum += term / (k + m + 1) as f64;
                if term.abs() < 1e-18 {
                    break;
                }
            }
            *o = sum;
        }
        out
    } else {
        let e = (-mu).exp();
        let j0 = -(-mu).exp_m1() / mu;
        let j1 = (j0 - e) / mu;
        let j2 = (2.0 * j1 - e) / mu;
        [j0, j1, j2]
    }
}

fn fitted_cell(b: &[f64], g: &[f64], h: f64, i: usize) -> f64 {
    let n = b.len();
    let db = b[i + 1] - b[i];
    // third node: ahead where possible, otherwise behind; local coordinate s = (u - u_i)/h
    let (k3, s3) = if i + 2 < n { (i + 2, 2.0) } else { (i - 1, -1.0) };
    let chord = |s: f64| db * s;
    let gt = |k: usize, s: f64| g[k] * (-(b[k] - b[i] - chord(s))).exp();
    let (y0, y1, y2) = (g[i], g[i + 1], gt(k3, s3));
    // quadratic q(s) = y0 + c1 s + c2 s² through s = 0, 1, s3
    let c2 = ((y2 - y0) / s3 - (y1 - y0)) / (s3 - 1.0);
    let c1 = (y1 - y0) - c2;
    let m = exp_moments(db);
    h * (y0 * m[0] + c1 * m[1] + c2 * m[2])
}

/// A sample point of the split convolution rule: `y` is the integration variable on
/// `(0, x/2]` and `z = x - y` its partner in `[x/2, x)`, each with its log position.
#[derive(Clone, Copy, Debug)]
pub struct SplitPoint {
    pub y: f64,
    pub ty: f64,
    pub z: f64,
    pub tz: f64,
    /// Node index of `y` when `y` is a grid node.
    pub node: Option<usize>,
}

const NEAR_ZERO_ORDER: usize = 24;

/// Gauss–Legendre nodes and weights on `[0, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = 0.5 * (1.0 - x);
        nodes[n - 1 - k] = 0.5 * (1.0 + x);
        weights[k] = 0.5 * w;
        weights[n - 1 - k] = 0.5 * w;
    }
    (nodes, weights)
}

const GL3_NODES: [f64; 3] = [0.5 - 0.387_298_334_620_741_7, 0.5, 0.5 + 0.387_298_334_620_741_7];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Quadrature for `∫₀^{x_i/2} φ(y) dy` at every node `x_i`.
///
/// Nodes `y_j ≤ x_i/2` are used directly; the fraction of a cell up to `x_i/2` is
/// covered by three-point Gauss–Legendre in `u` and `(0, x_min)` by a
/// Gauss–Legendre rule in `√y`. Because the grid is log-uniform,
/// the log position of `x_i - y_j` depends only on `i - j`, so the partner
/// positions are tabulated once.
#[derive(Clone, Debug)]
pub struct HalfSplit {
    grid: Grid,
    d0: usize,
    partner_shift: Vec<f64>,
    partial: [(f64, f64, f64, f64); 3],
    near_zero: (Vec<f64>, Vec<f64>),
}

impl HalfSplit {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let h = grid.log_step();
        let half = std::f64::consts::LN_2 / h;
        let d0 = half.ceil() as usize;
        let frac = d0 as f64 - half;
        let partner_shift =
            (0..n).map(|d| if d == 0 { f64::NEG_INFINITY } else { (-(-(d as f64) * h).exp_m1()).ln() / h }).collect();
        let mut partial = [(0.0, 0.0, 0.0, 0.0); 3];
        for (m, slot) in partial.iter_mut().enumerate() {
            // position relative to x_i, ratio y/x_i, partner shift, weight
            let rel = -(d0 as f64) + frac * GL3_NODES[m];
            let ratio = (rel * h).exp();
            let shift = (-(rel * h).exp_m1()).ln() / h;
            *slot = (rel, ratio, shift, frac * h * GL3_WEIGHTS[m]);
        }
        Self { grid: grid.clone(), d0, partner_shift, partial, near_zero: gauss_legendre(NEAR_ZERO_ORDER) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `∫₀^b φ` by Gauss–Legendre in `y = b t²`, which keeps integrable powers
    /// `y^q` (`q > -1/2`) smooth in `t`.
    fn below(&self, xi: f64, b: f64, phi: &mut impl FnMut(&SplitPoint) -> f64) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for (&t, &w) in self.near_zero.0.iter().zip(&self.near_zero.1) {
            let y = b * t * t;
            let z = xi - y;
            let p = SplitPoint { y, ty: g.log_position(y), z, tz: g.log_position(z), node: None };
            total += w * phi(&p) * 2.0 * b * t;
        }
        total
    }

    /// `∫₀^{x_i/2} φ(y) dy` where `phi` is evaluated at [`SplitPoint`]s.
    pub fn integrate(&self, i: usize, mut phi: impl FnMut(&SplitPoint) -> f64) -> Result<f64> {
        let g = &self.grid;
        let h = g.log_step();
        let xi = g.node(i);
        let fi = i as f64;
        if i < self.d0 + 1 {
            // x_i/2 lies below the second node
            return Ok(self.below(xi, 0.5 * xi, &mut phi));
        }
        let k = i - self.d0;
        let mut fu = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let y = g.node(j);
            let p = SplitPoint { y, ty: j as f64, z: xi - y, tz: fi + self.partner_shift[i - j], node: Some(j) };
            fu.push(phi(&p) * y);
        }
        let mut total = cell_sum(&fu, h) + self.below(xi, g.x_min(), &mut phi);
        for &(rel, ratio, shift, w) in &self.partial {
            if w == 0.0 {
                continue;
            }
            let y = xi * ratio;
            let p = SplitPoint { y, ty: fi + rel, z: xi - y, tz: fi + shift, node: None };
            total += w * phi(&p) * y;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_fn(g: &Grid) -> GridFunction {
        GridFunction::from_fn(g, |x| (-x).exp()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 3, 8, 16, 24] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let deg = 2 * n - 1;
            let exact = 1.0 / (deg as f64 + 1.0);
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((got - exact).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn exponential_moments_agree_across_branches() {
        for &mu in &[0.999_999, 1.000_001, -0.999_999, -1.000_001] {
            let a = exp_moments(mu);
            let b = exp_moments(if mu > 0.0 { 1.0 } else { -1.0 });
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-5);
            }
        }
        let m = exp_moments(3.0);
        let e = (-3.0f64).exp();
        assert!((m[0] - (1.0 - e) / 3.0).abs() < 1e-15);
        assert!((m[2] - (2.0 - e * (9.0 + 6.0 + 2.0)) / 27.0).abs() < 1e-15);
    }

    #[test]
    fn damped_recursion_matches_closed_form() {
        // B(u) = k u, G = e^{-e^u} e^u: S(x) = ∫_x^∞ (x/z)^k e^{-z} dz
        let g = Grid::new(1e-4, 40.0, 600).unwrap();
        let h = g.log_step();
        for &k in &[0.0, 2.0, 50.0] {
            let b: Vec<f64> = g.log_nodes().iter().map(|u| k * u).collect();
            let gu: Vec<f64> = g.nodes().iter().map(|x| (-x).exp() * x).collect();
            let xm = g.x_max();
            let tail = (-xm).exp() / (1.0 + k / xm);
            let s = damped_upper_integrals(&b, &gu, h, tail);
            for &j in &[0usize, 100, 300, 500] {
                let x = g.node(j);
                // reference by fine midpoint sum in u
                let mut r = 0.0;
                let m = 200_000;
                let du = (xm.ln() + 3.0 - x.ln()) / m as f64;
                for q in 0..m {
                    let z = (x.ln() + (q as f64 + 0.5) * du).exp();
                    r += (k * (x.ln() - z.ln())).exp() * (-z).exp() * z * du;
                }
                let rel = (s[j] - r).abs() / r;
                let tol = if k > 10.0 { 1e-4 } else { 1e-5 };
                assert!(rel < tol, "k={k} x={x}: {} vs {r}", s[j]);
            }
        }
    }

    #[test]
    fn cell_sum_matches_cells() {
        let h = 0.1;
        for m in 1..12 {
            let f: Vec<f64> = (0..m).map(|k| ((k as f64) * 0.37).sin() + 2.0).collect();
            let a: f64 = cell_integrals(&f, h).iter().sum();
            let b = cell_sum(&f, h);
            assert!((a - b).abs() < 1e-14, "m={m}: {a} vs {b}");
        }
    }

    #[test]
    fn cell_rule_is_exact_for_cubics() {
        let h = 0.25;
        let p = |u: f64| 1.0 + u - 0.5 * u * u + 0.3 * u * u * u;
        let prim = |u: f64| u + 0.5 * u * u - u * u * u / 6.0 + 0.075 * u.powi(4);
        let f: Vec<f64> = (0..9).map(|k| p(k as f64 * h)).collect();
        let cells = cell_integrals(&f, h);
        for (j, c) in cells.iter().enumerate() {
            let exact = prim((j + 1) as f64 * h) - prim(j as f64 * h);
            assert!((c - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn integrates_exponential_and_gamma_half() {
        let g = Grid::default_grid();
        assert!((integrate(&exp_fn(&g)).unwrap() - 1.0).abs() < 1e-8);
        let xe = GridFunction::from_fn(&g, |x| x * (-x).exp()).unwrap();
        assert!((integrate(&xe).unwrap() - 1.0).abs() < 1e-8);
        let f = GridFunction::from_fn(&g, |x| x.powf(-0.5) * (-x).exp()).unwrap();
        let gamma_half = std::f64::consts::PI.sqrt();
        assert!((integrate(&f).unwrap() - gamma_half).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_integrable_left_tail() {
        let g = Grid::new(1e-3, 10.0, 64).unwrap();
        let f = GridFunction::from_fn(&g, |x| 1.0 / (x * x)).unwrap();
        assert!(matches!(integrate(&f), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn cumulatives_are_consistent() {
        let g = Grid::new(1e-4, 30.0, 400).unwrap();
        let f = GridFunction::from_fn(&g, |x| x.powf(-0.25) * (-x).exp()).unwrap();
        let c = Cumulative::new(&f).unwrap();
        for j in 0..g.len() {
            assert!((c.lower_node(j) + c.upper_node(j) - c.total()).abs() < 1e-12);
        }
        // off-node values against the incomplete integral of e^{-x}
        let e = Cumulative::new(&exp_fn(&g)).unwrap();
        for &x in &[2e-5f64, 0.0123, 0.5, 1.0, 2.345, 29.0, 35.0] {
            let lo = -(-x).exp_m1();
            assert!((e.lower_at(x) - lo).abs() < 3e-8, "lower at {x}: {} vs {lo}", e.lower_at(x));
            assert!((e.upper_at(x) - (-x).exp()).abs() < 3e-8, "upper at {x}");
        }
    }

    #[test]
    fn zero_moment_projection() {
        let g = Grid::default_grid();
        let p = project_zero_moment(&exp_fn(&g)).unwrap();
        assert!(first_moment(&p).unwrap().abs() < 1e-10);
        for &x in &[0.1, 1.0, 3.0] {
            let k = g.nearest_index(x);
            let xk = g.node(k);
            assert!((p.value(k) - (2.0 - xk) * (-xk).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn half_split_matches_closed_form() {
        // ∫₀^{x/2} y e^{-y} (x - y) dy in closed form
        let g = Grid::default_grid();
        let s = HalfSplit::new(&g);
        let e = exp_fn(&g);
        for i in [0usize, 10, 60, 200, 400, 700, 1000] {
            let x = g.node(i);
            let got = s.integrate(i, |p| p.y * e.eval_pos(p.ty, p.y) * p.z).unwrap();
            let b = 0.5 * x;
            // ∫₀^b (x y - y²) e^{-y} dy by its power series (no cancellation for small b)
            let mut exact = 0.0;
            let mut fact = 1.0;
            for k in 0..120 {
                if k > 0 {
                    fact *= k as f64;
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let kf = k as f64;
                exact += sign / fact * (x * b.powf(kf + 2.0) / (kf + 2.0) - b.powf(kf + 3.0) / (kf + 3.0));
            }
            // below x_min the integrand is carried by the power-law tail model of e^{-y}
            let tol = if x < 10.0 * g.x_min() {
                1e-4
            } else if x < 1e3 * g.x_min() {
                1e-6
            } else {
                1e-8
            };
            assert!((got - exact).abs() <= tol * exact.abs(), "i={i}: {got} vs {exact}");
        }
    }
}
