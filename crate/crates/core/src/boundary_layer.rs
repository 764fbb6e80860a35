//! Boundary-layer functionals of a profile and the residual of the
//! boundary-layer form of the profile equation.
//!
//! ```text
//! β₂[Π] = 2∫Π,   κ = β₂ - 2,   β_W[Π](x) = ∫ W(x, z)Π(z) dz,   Φ(x) = ε ∫_x^∞ β_W(y) e^{-y}/y dy
//! Π(x) = ∫_x^∞ (x/z)^κ e^{Φ(z) - Φ(x)} [ z⁻² ∫₀^z K(y, z-y) yΠ(y)Π(z-y) dy - εβ_W(z)(1 - e^{-z})Π(z)/z ] dz
//! ```
//!
//! The outer integral is evaluated with the weight `exp(Ψ(x) - Ψ(z))`,
//! `Ψ = κ ln x - Φ`, folded into the cell rule so that the rapid variation of `Φ`
//! near zero does not have to be resolved by the grid.

use crate::coag::convolution;
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Perturbation};
use crate::space::quadrature::{cell_integrals, damped_upper_integrals};
use crate::space::{default_beta, integrate, moment, weighted_norm, GridFunction, WeightParams};

#[derive(Clone, Debug)]
pub struct BoundaryLayerData {
    pub beta2: f64,
    /// `β₂ - 2`.
    pub kappa: f64,
    pub beta_w: GridFunction,
    /// `Φ` at the nodes; non-increasing and non-negative when `Π, W ≥ 0`.
    pub phi: GridFunction,
}

/// `β_W[p](x_i) = ∫ W(x_i, z)p(z) dz` at every node.
///
/// The power form uses `c*(x^α M_{-α} + x^{-α} M_α)`; other forms integrate
/// node by node.
pub fn beta_w_nodes(p: &GridFunction, spec: &KernelSpec) -> Result<Vec<f64>> {
    let g = p.grid();
    match spec.form {
        Perturbation::PowerSymmetric => {
            let a = spec.alpha;
            let mm = moment(p, -a)?;
            let mp = moment(p, a)?;
            Ok(g.nodes().iter().map(|&x| spec.c_star * (x.powf(a) * mm + x.powf(-a) * mp)).collect())
        }
        Perturbation::BoundedCustom(_) => {
            g.nodes().iter().map(|&x| integrate(&p.map(|z, v| spec.w(x, z) * v)?)).collect()
        }
    }
}

/// `∫_{x_i}^∞ f` for node samples `f`, closing the tail with the fitted exponential rate.
fn upper_cumulative(f: &GridFunction) -> Vec<f64> {
    let g = f.grid();
    let n = g.len();
    let fu: Vec<f64> = f.values().iter().zip(g.nodes()).map(|(v, x)| v * x).collect();
    let cells = cell_integrals(&fu, g.log_step());
    let mut out = vec![0.0; n];
    out[n - 1] = f.value(n - 1) / f.right_tail_rate();
    for j in (0..n - 1).rev() {
        out[j] = out[j + 1] + cells[j];
    }
    out
}

pub fn compute_bl_data(p: &GridFunction, spec: &KernelSpec) -> Result<BoundaryLayerData> {
    spec.validate()?;
    let g = p.grid();
    let beta2 = 2.0 * integrate(p)?;
    let bw = beta_w_nodes(p, spec)?;
    let beta_w = GridFunction::from_values(g, bw)?;
    let integrand = beta_w.map(|y, b| b * (-y).exp() / y)?;
    let phi_vals: Vec<f64> = upper_cumulative(&integrand).iter().map(|v| spec.epsilon * v).collect();
    let phi = GridFunction::from_values(g, phi_vals)?;
    Ok(BoundaryLayerData { beta2, kappa: beta2 - 2.0, beta_w, phi })
}

/// The right-hand side of the boundary-layer equation at every node.
pub fn bl_rhs(p: &GridFunction, spec: &KernelSpec) -> Result<GridFunction> {
    let data = compute_bl_data(p, spec)?;
    let g = p.grid();
    let n = g.len();
    let conv = convolution(p, spec)?;
    let eps = spec.epsilon;
    let integrand: Vec<f64> = g
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let gain = conv[i] / (z * z);
            let loss = eps * data.beta_w.value(i) * -(-z).exp_m1() / z * p.value(i);
            (gain - loss) * z
        })
        .collect();
    let psi: Vec<f64> = g.log_nodes().iter().zip(data.phi.values()).map(|(&u, &f)| data.kappa * u - f).collect();
    // beyond x_max, Φ ≈ 0 and (x_max/z)^κ ≈ 1 - κ(z - x_max)/x_max
    let xm = g.x_max();
    let last = integrand[n - 1] / xm;
    let rate = {
        let prev = integrand[n - 2] / g.node(n - 2);
        let r = if last > 0.0 && prev > 0.0 { (prev / last).ln() / (xm - g.node(n - 2)) } else { 1.0 };
        if r.is_finite() && r > 0.0 {
            r
        } else {
            1.0
        }
    };
    let tail = last / (rate + data.kappa / xm);
    if !tail.is_finite() {
        return Err(Error::NonIntegrable("boundary-layer tail closure is not finite".into()));
    }
    let vals = damped_upper_integrals(&psi, &integrand, g.log_step(), tail);
    GridFunction::from_values(g, vals)
}

/// `‖p - RHS‖ / ‖p‖` in `X_{-α,β}` with `β = (3 + α)/2`.
pub fn bl_residual(p: &GridFunction, spec: &KernelSpec) -> Result<f64> {
    let w = WeightParams::profile(spec.alpha, default_beta(spec.alpha));
    bl_residual_weighted(p, spec, w)
}

/// As [`bl_residual`] in an arbitrary weighted norm.
pub fn bl_residual_weighted(p: &GridFunction, spec: &KernelSpec, w: WeightParams) -> Result<f64> {
    let norm = weighted_norm(p, w)?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    let rhs = bl_rhs(p, spec)?;
    Ok(weighted_norm(&p.sub(&rhs)?, w)? / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Grid;

    #[test]
    fn exponential_data() {
        let g = Grid::default_grid();
        let e = GridFunction::from_fn(&g, |x| (-x).exp()).unwrap();
        let k = KernelSpec::power(0.1, 0.5, 1.0).unwrap();
        let d = compute_bl_data(&e, &k).unwrap();
        assert!((d.beta2 - 2.0).abs() < 1e-8);
        assert!(d.kappa.abs() < 1e-8);
        assert_eq!(d.kappa, d.beta2 - 2.0);
        // Γ(1/2) + Γ(3/2)
        assert!((d.beta_w.eval(1.0) - 2.658680776358274).abs() < 1e-7);
        let phi = d.phi.values();
        assert!(phi.windows(2).all(|w| w[0] >= w[1]));
        assert!(phi[phi.len() - 1] >= 0.0 && phi[phi.len() - 1] < 1e-15);
    }

    #[test]
    fn custom_beta_w_matches_power_form() {
        let g = Grid::new(1e-5, 40.0, 512).unwrap();
        let e = GridFunction::from_fn(&g, |x| (-x).exp()).unwrap();
        let a = 0.4;
        let power = KernelSpec::power(0.1, a, 1.0).unwrap();
        let custom =
            KernelSpec::new(0.1, a, Perturbation::custom(move |x, y| (x / y).powf(a) + (y / x).powf(a)), 1.0).unwrap();
        let u = beta_w_nodes(&e, &power).unwrap();
        let v = beta_w_nodes(&e, &custom).unwrap();
        for (k, (a, b)) in u.iter().zip(&v).enumerate() {
            assert!((a - b).abs() < 1e-6 * a, "node {k}: {a} vs {b}");
        }
    }

    #[test]
    fn exponential_solves_the_constant_kernel_equation() {
        let g = Grid::default_grid();
        let e = GridFunction::from_fn(&g, |x| (-x).exp()).unwrap();
        let k = KernelSpec::constant(0.5).unwrap();
        let r = bl_residual(&e, &k).unwrap();
        assert!(r < 1e-5, "{r:e}");
        // every dilation bΠ(bx) solves the equation as well
        let dilated = GridFunction::from_fn(&g, |x| 2.0 * (-2.0 * x).exp()).unwrap();
        assert!(bl_residual(&dilated, &k).unwrap() < 1e-5);
        let other = GridFunction::from_fn(&g, |x| x * (-x).exp()).unwrap();
        assert!(bl_residual(&other, &k).unwrap() > 1e-2);
        assert_eq!(bl_residual(&GridFunction::zeros(&g), &k).unwrap(), 0.0);
    }
}
