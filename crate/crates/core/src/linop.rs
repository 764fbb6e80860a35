//! The linearisation of the profile equation around `e^{-x}` at `ε = 0`, its
//! explicit inverse on the zero-mass subspace, and the special functions
//! entering both.
//!
//! With `m₁(x) = (1 - x)e^{-x}`, `I_k(x) = ∫₁^x e^z/z^k dz`,
//! `m₂(x) = 1 + m₁(x) I₁(x)` and `E(x) = e^x/x - I₁(x) = e - I₂(x)`:
//!
//! ```text
//! 𝓛[h](x) = h(x) + 2(x+1)e^{-x}/x² ∫₀^x (1 - e^z)h(z) dz + 2(xe^{-x} + e^{-x} - 1)/x² ∫_x^∞ h(z) dz
//! A[g](x) = g(x) + 2m₁(x) ∫₁^x E(y)g(y) dy - 2m₂(x) ∫_x^∞ g(y) dy
//! A₀[g]   = A[g] + (∫ y A[g](y) dy) m₁
//! ```
//!
//! `𝓛[m₁] = 0`, `𝓛 ∘ A₀ = id`, and `A₀[g]` has vanishing first moment.

use std::f64::consts::E as EULER_E;

use crate::coag::b2_apply;
use crate::error::{Error, Result};
use crate::space::quadrature::{cell_integrals, gauss_legendre};
use crate::space::{first_moment, integrate, lagrange4, Cumulative, GridFunction};

/// Switch point between the direct and the twice-integrated-by-parts form of `m₂`.
pub const X_SWITCH: f64 = 1.5;

/// Below this `x` the prefactor `(xe^{-x} + e^{-x} - 1)/x²` is summed as a series.
const SERIES_CUTOFF: f64 = 1e-2;

/// Largest argument for which `I_k` is representable.
const EXP_INTEGRAL_MAX: f64 = 700.0;

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveArgument(x))
    }
}

/// A primitive `F_k` of `e^x/x^k` (`k ≥ 1`), from the term-wise integrated
/// Taylor series of `e^x`:
/// `F_k(x) = ln x/(k-1)! + Σ_{n ≠ k-1} x^{n-k+1} / ((n-k+1) n!)`.
///
/// For `x > 0` the terms with `n ≥ k` are all positive, so the sum carries
/// full relative precision where it dominates.
fn exp_power_primitive(k: u32, x: f64) -> f64 {
    let k = k as usize;
    let scale = x.powi(1 - k as i32);
    let mut fact = 1.0;
    let mut log_coef = 0.0;
    let mut sum = 0.0;
    // p = x^n / n!
    let mut p = 1.0;
    let mut n = 0usize;
    loop {
        if n > 0 {
            p *= x / n as f64;
            if n < k {
                fact *= n as f64;
            }
        }
        if n + 1 == k {
            log_coef = 1.0 / fact;
        } else {
            let d = n as f64 - k as f64 + 1.0;
            sum += p * scale / d;
        }
        if n as f64 > x + k as f64 && (p * scale).abs() < 1e-17 * sum.abs() {
            break;
        }
        n += 1;
    }
    sum + log_coef * x.ln()
}

/// `I_k(x) = ∫₁^x e^z/z^k dz` for `k ∈ {1, 2, 3}`; negative for `x < 1`.
pub fn exp_integral(k: u32, x: f64) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidParameter(format!("exp_integral order must be 1, 2 or 3, got {k}")));
    }
    check_positive(x)?;
    if x > EXP_INTEGRAL_MAX {
        return Err(Error::InvalidParameter(format!("exp_integral argument {x} overflows (limit {EXP_INTEGRAL_MAX})")));
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    Ok(exp_power_primitive(k, x) - exp_power_primitive(k, 1.0))
}

/// `m₁(x) = (1 - x)e^{-x}`.
pub fn m1(x: f64) -> f64 {
    (1.0 - x) * (-x).exp()
}

/// `m₂(x) = 1 + (1 - x)e^{-x} I₁(x)`, in the direct form.
pub fn m2_direct(x: f64) -> Result<f64> {
    Ok(1.0 + m1(x) * exp_integral(1, x)?)
}

/// `m₂(x) = 1/x² + 2(1 - x)e^{-x}(I₃(x) - e)`, free of the `e^x e^{-x}`
/// cancellation of the direct form for large `x`.
pub fn m2_stable(x: f64) -> Result<f64> {
    Ok(1.0 / (x * x) + 2.0 * m1(x) * (exp_integral(3, x)? - EULER_E))
}

/// `m₂(x)`, switching from the direct to the stable form at [`X_SWITCH`].
pub fn m2_eval(x: f64) -> Result<f64> {
    check_positive(x)?;
    if x <= X_SWITCH {
        m2_direct(x)
    } else {
        m2_stable(x)
    }
}

/// `E(x) = e - I₂(x)`.
pub fn aux_e_eval(x: f64) -> Result<f64> {
    Ok(EULER_E - exp_integral(2, x)?)
}

/// `E(x) = e^x/x - I₁(x)`, the defining form.
pub fn aux_e_direct(x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(x.exp() / x - exp_integral(1, x)?)
}

/// `(xe^{-x} + e^{-x} - 1)/x²`, by its Taylor series `Σ_{n≥2} (-1)^n (1-n)/n! x^{n-2}` for small `x`.
pub fn cancellation_prefactor(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        // -1/2 + x/3 - x²/8 + x³/30 - x⁴/144 + x⁵/840
        const C: [f64; 6] = [-0.5, 1.0 / 3.0, -0.125, 1.0 / 30.0, -1.0 / 144.0, 1.0 / 840.0];
        C.iter().rev().fold(0.0, |acc, c| acc * x + c)
    } else {
        ((x + 1.0) * (-x).exp() - 1.0) / (x * x)
    }
}

/// `m₁` sampled on a grid.
pub fn m1_function(grid: &crate::space::Grid) -> Result<GridFunction> {
    GridFunction::from_fn(grid, m1)
}

/// `m₂` sampled on a grid.
pub fn m2_function(grid: &crate::space::Grid) -> Result<GridFunction> {
    let vals = grid.nodes().iter().map(|&x| m2_eval(x)).collect::<Result<Vec<_>>>()?;
    GridFunction::from_values(grid, vals)
}

fn check_integrable(f: &GridFunction) -> Result<()> {
    if f.value(0) != 0.0 && f.left_tail_exponent() <= -1.0 {
        return Err(Error::NonIntegrable(format!("left tail exponent {} is not above -1", f.left_tail_exponent())));
    }
    let n = f.len();
    if f.value(n - 1) != 0.0 && !(f.right_tail_rate() > 0.0) {
        return Err(Error::NonIntegrable(format!("right tail rate {} is not positive", f.right_tail_rate())));
    }
    Ok(())
}

/// `Σ_{k≥1} x₀^k / (k!(p + 1 + k))`, so that `∫₀^{x₀} (e^z - 1)(z/x₀)^p dz = x₀·S`.
fn exp_tail_series(x0: f64, p: f64) -> f64 {
    let mut term = 1.0;
    let mut s = 0.0;
    for k in 1..40 {
        term *= x0 / k as f64;
        let t = term / (p + 1.0 + k as f64);
        s += t;
        if t.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    s
}

/// `Σ_{k≥1} x₀^k / (k!(p + 1 + k)²)`, so that
/// `∫₀^{x₀} (e^z - 1)(z/x₀)^p ln(z/x₀) dz = -x₀·S`.
fn exp_log_tail_series(x0: f64, p: f64) -> f64 {
    let mut term = 1.0;
    let mut s = 0.0;
    for k in 1..40 {
        term *= x0 / k as f64;
        let d = p + 1.0 + k as f64;
        let t = term / (d * d);
        s += t;
        if t.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    s
}

/// `∫₀^{x_min} (e^z - 1)h(z) dz` against the left model of `h`.
fn exp_minus_one_left_tail(h: &GridFunction) -> f64 {
    let x0 = h.grid().x_min();
    let t = h.left_tail();
    t.v0 * x0 * exp_tail_series(x0, t.exponent) - t.log_slope * x0 * exp_log_tail_series(x0, t.exponent)
}

/// `∫₀^{x_i} (e^z - 1)h(z) dz` at every node, with the part below `x_min`
/// integrated exactly against a left tail model of `h`.
fn exp_minus_one_lower(h: &GridFunction) -> Vec<f64> {
    let g = h.grid();
    let f: Vec<f64> = g.nodes().iter().zip(h.values()).map(|(&z, &v)| z.exp_m1() * v * z).collect();
    let cells = cell_integrals(&f, g.log_step());
    let mut out = Vec::with_capacity(g.len());
    out.push(exp_minus_one_left_tail(h));
    for c in cells {
        let last = *out.last().unwrap();
        out.push(last + c);
    }
    out
}

/// `𝓛[h]` is bounded (or logarithmic) at zero unless `h` is more singular, and
/// decays no slower than `e^{-x}` unless `h` does. A fitted left exponent below
/// that bound comes from the `O(x_min)` tail-model error on the first nodes and
/// is clamped.
fn linearized_tails(input: &GridFunction, out: GridFunction) -> GridFunction {
    let p = out.left_tail_exponent().max(input.left_tail_exponent().min(0.0));
    let r = input.right_tail_rate().min(1.0);
    out.with_tails(p, r)
}

/// `𝓛[h]` at the nodes, in the form that isolates the cancellation at zero.
pub fn linearized_apply(h: &GridFunction) -> Result<GridFunction> {
    check_integrable(h)?;
    let lower = exp_minus_one_lower(h);
    let upper = Cumulative::new(h)?;
    let vals = h
        .grid()
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            h.value(i) - 2.0 * (x + 1.0) * (-x).exp() / (x * x) * lower[i]
                + 2.0 * cancellation_prefactor(x) * upper.upper_node(i)
        })
        .collect();
    Ok(linearized_tails(h, GridFunction::from_values(h.grid(), vals)?))
}

/// `𝓛[h] = h + 2(x+1)e^{-x}/x² (∫₀^∞ h - ∫₀^x e^z h) - 2/x² ∫_x^∞ h`.
///
/// Algebraically equal to [`linearized_apply`] but subject to `O(ε_mach/x²)`
/// round-off near zero; kept as an independent cross-check.
pub fn linearized_apply_expanded(h: &GridFunction) -> Result<GridFunction> {
    check_integrable(h)?;
    let c = Cumulative::new(h)?;
    let total = c.total();
    let extra = exp_minus_one_lower(h);
    let vals = h
        .grid()
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let exp_weighted = c.lower_node(i) + extra[i];
            h.value(i) + 2.0 * (x + 1.0) * (-x).exp() / (x * x) * (total - exp_weighted)
                - 2.0 / (x * x) * c.upper_node(i)
        })
        .collect();
    Ok(linearized_tails(h, GridFunction::from_values(h.grid(), vals)?))
}

/// `𝓛[h] = h - B₂[h, e^{-x}] - B₂[e^{-x}, h]` through the bilinear operator.
pub fn linearized_apply_bilinear(h: &GridFunction) -> Result<GridFunction> {
    let e = GridFunction::from_fn(h.grid(), |x| (-x).exp())?;
    let a = b2_apply(h, &e)?;
    let b = b2_apply(&e, h)?;
    h.sub(&a)?.sub(&b)
}

/// `∫₁^{x_i} F(u) du` over the nodes for samples `F` in `u = ln x`, accumulated
/// outward from the node nearest to `x = 1`.
fn anchored_cumulative(grid: &crate::space::Grid, integrand: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let h = grid.log_step();
    let cells = cell_integrals(integrand, h);
    let k1 = grid.nearest_index(1.0);
    // ∫ from u = 0 to u_{k1} of the local cubic, exact with three Gauss points
    let start = k1.saturating_sub(1).min(n - 4);
    let t1 = grid.log_position(1.0) - start as f64;
    let tk = (k1 - start) as f64;
    let (gx, gw) = gauss_legendre(3);
    let mut offset = 0.0;
    for (s, w) in gx.iter().zip(&gw) {
        let t = t1 + (tk - t1) * s;
        let lw = lagrange4(t);
        let f: f64 = (0..4).map(|j| lw[j] * integrand[start + j]).sum();
        offset += w * f;
    }
    offset *= (tk - t1) * h;
    let mut out = vec![0.0; n];
    out[k1] = offset;
    for j in k1 + 1..n {
        out[j] = out[j - 1] + cells[j - 1];
    }
    for j in (0..k1).rev() {
        out[j] = out[j + 1] - cells[j];
    }
    out
}

/// `A[g] = g + 2m₁ ∫₁^x E g - 2m₂ ∫_x^∞ g` at the nodes.
pub fn inverse_pre_apply(g: &GridFunction) -> Result<GridFunction> {
    check_integrable(g)?;
    let grid = g.grid();
    let e_vals = grid.nodes().iter().map(|&x| aux_e_eval(x)).collect::<Result<Vec<_>>>()?;
    let integrand: Vec<f64> =
        grid.nodes().iter().zip(g.values()).zip(&e_vals).map(|((&x, &v), &e)| e * v * x).collect();
    let signed = anchored_cumulative(grid, &integrand);
    let upper = Cumulative::new(g)?;
    let vals = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &x)| Ok(g.value(i) + 2.0 * m1(x) * signed[i] - 2.0 * m2_eval(x)? * upper.upper_node(i)))
        .collect::<Result<Vec<_>>>()?;
    GridFunction::from_values(grid, vals)
}

/// `A₀[g] = A[g] + M₁[A[g]]·m₁`.
///
/// The correction divides by the discrete first moment of the sampled `m₁`
/// (analytically `-1`), so the first moment of the result vanishes to round-off.
pub fn inverse_apply(g: &GridFunction) -> Result<GridFunction> {
    let a = inverse_pre_apply(g)?;
    let m = m1_function(a.grid())?;
    let c = first_moment(&a)? / -first_moment(&m)?;
    a.axpy(c, &m)
}

/// `T[f](q) = ∫₀^∞ (1 - e^{-qx}) f(x) dx`.
pub fn desing_laplace(f: &GridFunction, q: f64) -> Result<f64> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q must be finite and non-negative, got {q}")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    // the factor only rescales the left tail by x and leaves the right rate intact
    let g = f
        .map(|x, v| -(-q * x).exp_m1() * v)?
        .with_tails(f.left_tail_exponent() + 1.0, f.right_tail_rate())
        .with_left_log_slope(f.left_log_slope() * -(-q * f.grid().x_min()).exp_m1());
    integrate(&g)
}

/// `T'(q) + (q - 1)/(q(q + 1)) T(q)` at each sample, with `T'` by a centred
/// difference of step `10⁻⁴ q`.
pub fn laplace_ode_residual(f: &GridFunction, q_samples: &[f64]) -> Result<Vec<f64>> {
    q_samples
        .iter()
        .map(|&q| {
            if !(q > 0.0) {
                return Err(Error::InvalidParameter(format!("q samples must be positive, got {q}")));
            }
            let d = 1e-4 * q;
            let dt = (desing_laplace(f, q + d)? - desing_laplace(f, q - d)?) / (2.0 * d);
            Ok(dt + (q - 1.0) / (q * (q + 1.0)) * desing_laplace(f, q)?)
        })
        .collect()
}

/// First and second `x`-derivatives at the nodes by five-point stencils in
/// `u = ln x`; the two outermost nodes on each side are left at zero.
fn log_grid_derivatives(f: &GridFunction) -> (Vec<f64>, Vec<f64>) {
    let g = f.grid();
    let n = g.len();
    let h = g.log_step();
    let v = f.values();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 2..n - 2 {
        let fu = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
        let fuu = (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2]) / (12.0 * h * h);
        let x = g.node(i);
        d1[i] = fu / x;
        d2[i] = (fuu - fu) / (x * x);
    }
    (d1, d2)
}

/// `u'' + (1+x)/x u' + 2u/x - (g'' + (3+x)/x g' + 2g/x)` at the nodes.
///
/// Derivatives use five-point stencils in `ln x`; the two outermost nodes on each
/// side carry zero.
pub fn ode_residual(u: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if !u.grid().same_as(g.grid()) {
        return Err(Error::GridMismatch);
    }
    let n = u.len();
    if n < 5 {
        return Err(Error::InvalidGrid(format!("ode_residual needs at least 5 nodes, got {n}")));
    }
    let (u1, u2) = log_grid_derivatives(u);
    let (g1, g2) = log_grid_derivatives(g);
    let vals = (0..n)
        .map(|i| {
            if i < 2 || i >= n - 2 {
                return 0.0;
            }
            let x = u.grid().node(i);
            let lhs = u2[i] + (1.0 + x) / x * u1[i] + 2.0 / x * u.value(i);
            let rhs = g2[i] + (3.0 + x) / x * g1[i] + 2.0 / x * g.value(i);
            lhs - rhs
        })
        .collect();
    GridFunction::from_values(u.grid(), vals)
}

/// `m₁m₂' - m₁'m₂ - e^{-x}/x` with both derivatives by centred differences of
/// relative step `10⁻⁶`.
pub fn wronskian_defect(x: f64) -> Result<f64> {
    check_positive(x)?;
    let d = 1e-6 * x;
    let dm1 = (m1(x + d) - m1(x - d)) / (2.0 * d);
    let dm2 = (m2_eval(x + d)? - m2_eval(x - d)?) / (2.0 * d);
    Ok(m1(x) * dm2 - dm1 * m2_eval(x)? - (-x).exp() / x)
}

/// `∫_lo^hi f(x) dx` by 16-point Gauss–Legendre on `panels` equal panels in
/// `ln x`; suited to integrands with logarithmic or power behaviour at `lo`.
pub fn log_quadrature(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let (gx, gw) = gauss_legendre(16);
    let (a, b) = (lo.ln(), hi.ln());
    let w = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let u0 = a + p as f64 * w;
        for (t, wt) in gx.iter().zip(&gw) {
            let x = (u0 + t * w).exp();
            s += wt * f(x) * x;
        }
    }
    s * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{weighted_norm, Grid, WeightParams};

    /// Composite Simpson in `ln z`, an oracle independent of the series.
    fn simpson_ik(k: i32, x: f64) -> f64 {
        let (a, b) = (0.0, x.ln());
        let m = 200000;
        let h = (b - a) / m as f64;
        let f = |u: f64| {
            let z = f64::exp(u);
            z.exp() / z.powi(k) * z
        };
        let mut s = f(a) + f(b);
        for j in 1..m {
            s += if j % 2 == 1 { 4.0 } else { 2.0 } * f(a + j as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn exp_integrals_match_quadrature() {
        for k in 1..=3 {
            assert_eq!(exp_integral(k, 1.0).unwrap(), 0.0);
            for &x in &[1e-3, 0.2, 0.9, 1.1, 2.0, 5.0, 17.0, 40.0] {
                let a = exp_integral(k, x).unwrap();
                let b = simpson_ik(k as i32, x);
                assert!((a - b).abs() <= 1e-11 * b.abs(), "k={k} x={x}: {a} vs {b}");
            }
        }
        // Ei(2) - Ei(1)
        assert!((exp_integral(1, 2.0).unwrap() - 3.059116539645953).abs() < 1e-12);
        // ∫₁² e^z/z² = e - e²/2 + I₁(2)
        let i2 = EULER_E - 2f64.exp() / 2.0 + 3.059116539645953;
        assert!((exp_integral(2, 2.0).unwrap() - i2).abs() < 1e-12);
        assert!(exp_integral(4, 2.0).is_err());
        assert!(exp_integral(1, 0.0).is_err());
    }

    #[test]
    fn special_function_values() {
        assert_eq!(m2_eval(1.0).unwrap(), 1.0);
        assert!((aux_e_eval(1.0).unwrap() - EULER_E).abs() < 1e-15);
        let i5 = simpson_ik(1, 5.0);
        let oracle = 1.0 - 4.0 * (-5f64).exp() * i5;
        assert!((m2_eval(5.0).unwrap() - oracle).abs() < 1e-10);
        assert!((m2_eval(5.0).unwrap() + 0.0320).abs() < 1e-4);
        let e2 = 2f64.exp() / 2.0 - 3.059116539645953;
        assert!((aux_e_eval(2.0).unwrap() - e2).abs() < 1e-12);
        assert!((aux_e_eval(2.0).unwrap() - 0.63542).abs() < 1e-5);
        assert!((1e-3 * aux_e_eval(1e-3).unwrap() - 1.0).abs() < 1e-2);
        // x²m₂(x) = -(1 + 4/x + 18/x² + 96/x³ + O(x⁻⁴))
        for &x in &[25.0, 35.0, 100.0, 400.0] {
            let v = x * x * m2_eval(x).unwrap();
            let series = -(1.0 + 4.0 / x + 18.0 / (x * x) + 96.0 / x.powi(3));
            assert!((v - series).abs() < 2000.0 / x.powi(4), "x={x}: {v}");
        }
        assert!(((35.0f64).powi(2) * m2_eval(35.0).unwrap()).abs() - 1.0 < 0.15);
        assert!(m2_eval(0.0).is_err());
    }

    #[test]
    fn m2_branches_agree_at_switch() {
        let a = m2_direct(X_SWITCH).unwrap();
        let b = m2_stable(X_SWITCH).unwrap();
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn aux_e_forms_agree() {
        for &x in &[0.01, 0.5, 1.0, 2.0, 3.0] {
            let a = aux_e_eval(x).unwrap();
            let b = aux_e_direct(x).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn prefactor_series_matches_direct_form() {
        let x = 9.99e-3;
        let direct = ((x + 1.0) * f64::exp(-x) - 1.0) / (x * x);
        assert!((cancellation_prefactor(x) - direct).abs() < 1e-11);
        assert!((cancellation_prefactor(1e-9) + 0.5).abs() < 1e-8);
    }

    #[test]
    fn kernel_element_is_annihilated() {
        let g = Grid::default_grid();
        let m = m1_function(&g).unwrap();
        let l = linearized_apply(&m).unwrap();
        let sup = l.sup_abs_on(1e-3, 20.0);
        assert!(sup <= 1e-8, "sup = {sup:e}");
    }

    #[test]
    fn linearized_exponential() {
        let g = Grid::default_grid();
        let e = GridFunction::from_fn(&g, |x| (-x).exp()).unwrap();
        let l = linearized_apply(&e).unwrap();
        // the power-law model below x_min costs O(x_min) on the first few nodes
        for (k, &x) in g.nodes().iter().enumerate() {
            let tol = if x < 10.0 * g.x_min() { 5e-6 } else { 1e-6 };
            assert!((l.value(k) + (-x).exp()).abs() < tol, "x={x}");
        }
        let z = linearized_apply(&GridFunction::zeros(&g)).unwrap();
        assert_eq!(z.sup_abs(), 0.0);
    }

    #[test]
    fn three_forms_agree() {
        let g = Grid::default_grid();
        let w = WeightParams::profile(0.5, 1.75);
        for h in [
            GridFunction::from_fn(&g, |x| (-x).exp()).unwrap(),
            GridFunction::from_fn(&g, |x| x * (-2.0 * x).exp()).unwrap(),
            GridFunction::from_fn(&g, |x| x.powf(-0.3) * (-x).exp()).unwrap(),
        ] {
            let a = linearized_apply(&h).unwrap();
            let b = linearized_apply_expanded(&h).unwrap();
            let c = linearized_apply_bilinear(&h).unwrap();
            let n = weighted_norm(&h, w).unwrap();
            assert!(weighted_norm(&a.sub(&b).unwrap(), w).unwrap() <= 1e-6 * n);
            assert!(weighted_norm(&a.sub(&c).unwrap(), w).unwrap() <= 1e-6 * n);
        }
    }

    #[test]
    fn inverse_of_exponential_is_closed_form() {
        let g = Grid::default_grid();
        let e = GridFunction::from_fn(&g, |x| (-x).exp()).unwrap();
        let a0 = inverse_apply(&e).unwrap();
        for (k, &x) in g.nodes().iter().enumerate() {
            if (0.01..=20.0).contains(&x) {
                let exact = (x - 2.0) * (-x).exp();
                assert!((a0.value(k) - exact).abs() < 1e-6, "x={x}");
            }
        }
        assert!(first_moment(&a0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn pre_inverse_at_one_for_compact_support() {
        let g = Grid::new(1e-5, 40.0, 2048).unwrap();
        let bump = |x: f64| {
            if x > 2.0 && x < 3.0 {
                let s = (x - 2.0) * (3.0 - x);
                (-1.0 / s).exp()
            } else {
                0.0
            }
        };
        let b = GridFunction::from_fn(&g, bump).unwrap();
        let a = inverse_pre_apply(&b).unwrap();
        let k = g.nearest_index(1.0);
        let mass = log_quadrature(bump, 2.0, 3.0, 200);
        // the node is close to, not at, x = 1
        let x = g.node(k);
        let expected = -2.0 * m2_eval(x).unwrap() * mass;
        assert!((a.value(k) - expected).abs() < 1e-6 * mass.max(1e-3) + 1e-9);
        assert!((expected + 2.0 * mass).abs() < 1e-2 * mass);
    }

    #[test]
    fn laplace_transform_values() {
        let g = Grid::default_grid();
        let e = GridFunction::from_fn(&g, |x| (-x).exp()).unwrap();
        assert_eq!(desing_laplace(&e, 0.0).unwrap(), 0.0);
        assert!((desing_laplace(&e, 1.0).unwrap() - 0.5).abs() < 1e-9);
        let m = m1_function(&g).unwrap();
        for &q in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            let t = desing_laplace(&m, q).unwrap();
            assert!((t + q / ((1.0 + q) * (1.0 + q))).abs() < 1e-8, "q={q}: {t}");
        }
        assert!(desing_laplace(&e, -1.0).is_err());
    }

    #[test]
    fn laplace_ode_residuals() {
        let g = Grid::default_grid();
        let m = m1_function(&g).unwrap();
        for r in laplace_ode_residual(&m, &[0.5, 1.0, 2.0]).unwrap() {
            assert!(r.abs() < 1e-6, "{r}");
        }
        let e = GridFunction::from_fn(&g, |x| (-x).exp()).unwrap();
        let r = laplace_ode_residual(&e, &[1.0]).unwrap()[0];
        assert!((r - 0.25).abs() < 1e-6);
        let z = GridFunction::zeros(&g);
        assert!(laplace_ode_residual(&z, &[0.5, 2.0]).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn homogeneous_solutions_satisfy_the_ode() {
        let g = Grid::default_grid();
        let zero = GridFunction::zeros(&g);
        for u in [m1_function(&g).unwrap(), m2_function(&g).unwrap()] {
            let r = ode_residual(&u, &zero).unwrap();
            assert!(r.sup_abs_on(0.1, 10.0) < 1e-4);
        }
        let c = GridFunction::from_fn(&g, |_| 3.0).unwrap();
        assert!(ode_residual(&c, &c).unwrap().sup_abs() < 1e-9);
    }

    #[test]
    fn wronskian_is_exponential_over_x() {
        for &x in &[0.05, 0.3, 1.0, 1.5, 2.0, 5.0, 12.0] {
            assert!(wronskian_defect(x).unwrap().abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn explicit_primitives() {
        for &x in &[0.3, 1.0, 2.0, 5.0] {
            // the integrand is (1 - e^η)m₁(η) = m₁(η) - (1 - η)
            let lhs = log_quadrature(|t| -t.exp_m1() * m1(t), 1e-30, x, 400);
            assert!((lhs - x * ((-x).exp() - 1.0 + x / 2.0)).abs() < 1e-8);
            let i1 = exp_integral(1, x).unwrap();
            let lhs = log_quadrature(|t| m2_eval(t).unwrap(), 1e-30, x, 400);
            assert!((lhs - x * (-x).exp() * i1).abs() < 1e-8, "x={x}");
            let lhs = log_quadrature(|t| t.exp() * m2_eval(t).unwrap(), 1e-30, x, 400);
            let rhs = x * (2.0 - x) / 2.0 * i1 + ((x - 1.0) * x.exp() + 1.0) / 2.0;
            assert!((lhs - rhs).abs() < 1e-8, "x={x}");
        }
    }
}
