//! Fixed-point computation of self-similar profiles and their diagnostics.
//!
//! Differentiating the profile equation `x²Π(x) = ∫₀^x∫_{x-y}^∞ yK Π(y)Π(z) dz dy`
//! in `x` gives
//!
//! ```text
//! (x²Π)' = β(x)/x · x²Π − C(x),   β(x) = ∫ K(x, z)Π(z) dz,   C(x) = ∫₀^x yK(y, x-y)Π(y)Π(x-y) dy,
//! ```
//!
//! whose solution vanishing at infinity is
//! `Π(x) = x⁻² ∫_x^∞ exp(B(x) − B(z)) C(z) dz` with `B' = β/x`. The solver iterates
//! this map. Since `B` is increasing every exponential factor is at most one, which
//! keeps the iteration stable where `β(x)/x` is large near the origin.

use crate::boundary_layer::{beta_w_nodes, compute_bl_data};
use crate::coag::{coag_rhs, convolution};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Perturbation};
use crate::linop::desing_laplace;
use crate::space::quadrature::{cell_integrals, damped_upper_integrals};
use crate::space::{default_beta, first_moment, integrate, moment, weighted_norm, GridFunction, WeightParams};

/// How each iterate is brought back to unit mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Renormalization {
    /// `Π ↦ mΠ(m·)`, which maps profiles to profiles.
    Dilation,
    /// `Π ↦ Π/m`.
    Scaling,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relaxation `θ ∈ (0, 1]` in `Π ← (1 − θ)Π + θ T[Π]`.
    pub damping: f64,
    /// Stop when the relative `X_{-α,β}` change of an iterate falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub renormalize: bool,
    pub renormalization: Renormalization,
    /// Exponent `b = β` of the norm; `None` means `(3 + α)/2`.
    pub beta: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 1.0,
            tol: 1e-10,
            max_iter: 500,
            renormalize: true,
            renormalization: Renormalization::Dilation,
            beta: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if let Some(b) = self.beta {
            if !b.is_finite() {
                return Err(Error::InvalidParameter(format!("beta must be finite, got {b}")));
            }
        }
        Ok(())
    }

    /// The norm `X_{-α,β}` used for convergence and residuals.
    pub fn norm_weight(&self, spec: &KernelSpec) -> WeightParams {
        WeightParams::profile(spec.alpha, self.beta.unwrap_or_else(|| default_beta(spec.alpha)))
    }
}

#[derive(Clone, Debug)]
pub struct ProfileSolution {
    pub profile: GridFunction,
    pub spec: KernelSpec,
    pub iterations: usize,
    pub converged: bool,
    /// Relative change of the last iterate.
    pub last_change: f64,
    /// `‖Π − B₂[Π,Π] − εB_W[Π,Π]‖ / ‖Π‖` in `X_{-α,β}`.
    pub final_residual: f64,
    pub mass: f64,
}

fn rescale_to_unit_mass(p: &GridFunction, mode: Renormalization) -> Result<GridFunction> {
    let m = first_moment(p)?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("profile must have positive finite mass, got {m}")));
    }
    match mode {
        Renormalization::Scaling => Ok(p.scaled(1.0 / m)),
        Renormalization::Dilation => {
            let g = p.grid();
            let shift = m.ln() / g.log_step();
            let vals = g.nodes().iter().enumerate().map(|(k, &x)| m * p.eval_pos(k as f64 + shift, m * x)).collect();
            GridFunction::from_values(g, vals)
        }
    }
}

/// `β(x_i) = ∫ K(x_i, z)Π(z) dz` at every node and `B = ∫ β du` from the first node.
fn frequency_and_exponent(p: &GridFunction, spec: &KernelSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = p.grid();
    let m0 = integrate(p)?;
    if spec.epsilon == 0.0 {
        let b = g.log_nodes().iter().map(|u| 2.0 * m0 * (u - g.log_nodes()[0])).collect();
        return Ok((vec![2.0 * m0; g.len()], b));
    }
    match spec.form {
        Perturbation::PowerSymmetric => {
            let a = spec.alpha;
            let mp = moment(p, a)?;
            let mm = moment(p, -a)?;
            let ec = spec.epsilon * spec.c_star;
            let beta = g.nodes().iter().map(|&x| 2.0 * m0 + ec * (x.powf(a) * mm + x.powf(-a) * mp)).collect();
            // closed-form primitive of β(e^u)
            let b = g
                .nodes()
                .iter()
                .zip(g.log_nodes())
                .map(|(&x, &u)| 2.0 * m0 * u + ec / a * (mm * x.powf(a) - mp * x.powf(-a)))
                .collect();
            Ok((beta, b))
        }
        Perturbation::BoundedCustom(_) => {
            let beta: Vec<f64> = beta_w_nodes(p, spec)?.iter().map(|bw| 2.0 * m0 + spec.epsilon * bw).collect();
            let mut b = Vec::with_capacity(beta.len());
            b.push(0.0);
            for c in cell_integrals(&beta, g.log_step()) {
                let last = *b.last().unwrap();
                b.push(last + c);
            }
            Ok((beta, b))
        }
    }
}

/// One application of the integrating-factor map `T[Π]`.
pub fn fixed_point_map(p: &GridFunction, spec: &KernelSpec) -> Result<GridFunction> {
    let g = p.grid();
    let n = g.len();
    let h = g.log_step();
    let (beta, b) = frequency_and_exponent(p, spec)?;
    let conv = convolution(p, spec)?;
    let gu: Vec<f64> = conv.iter().zip(g.nodes()).map(|(c, x)| c * x).collect();
    let xm = g.x_max();
    let rate = {
        let (ca, cb) = (conv[n - 2], conv[n - 1]);
        let r = if ca > 0.0 && cb > 0.0 { (ca / cb).ln() / (xm - g.node(n - 2)) } else { 1.0 };
        if r.is_finite() && r > 0.0 {
            r
        } else {
            1.0
        }
    };
    let tail = conv[n - 1] / (rate + beta[n - 1] / xm);
    let s = damped_upper_integrals(&b, &gu, h, tail);
    let vals = s.iter().zip(g.nodes()).map(|(s, x)| s / (x * x)).collect();
    GridFunction::from_values(g, vals)
}

/// Iterates the integrating-factor map from `init` until the relative change in
/// `X_{-α,β}` drops below `opts.tol`.
pub fn solve_profile(spec: &KernelSpec, opts: &SolverOptions, init: &GridFunction) -> Result<ProfileSolution> {
    opts.validate()?;
    if !init.is_nonnegative() {
        return Err(Error::InvalidParameter("initial profile must be non-negative".into()));
    }
    let w = opts.norm_weight(spec);
    let mode = opts.renormalization;
    let mut p = if opts.renormalize { rescale_to_unit_mass(init, mode)? } else { init.clone() };
    let mut theta = opts.damping;
    let mut last_change = f64::INFINITY;
    let mut increases = 0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let mut t = fixed_point_map(&p, spec)?;
        if opts.renormalize {
            t = rescale_to_unit_mass(&t, mode)?;
        }
        let next = if theta < 1.0 { p.lincomb(1.0 - theta, &t, theta)? } else { t };
        let norm = weighted_norm(&next, w)?;
        if !norm.is_finite() || norm > 1e6 {
            return Err(Error::Divergence { iterations: it, norm });
        }
        let change = weighted_norm(&next.sub(&p)?, w)? / norm;
        p = next;
        if change < opts.tol {
            last_change = change;
            converged = true;
            break;
        }
        if change > last_change {
            increases += 1;
            if increases >= 2 {
                theta *= 0.5;
                increases = 0;
            }
        } else {
            increases = 0;
        }
        last_change = change;
    }
    let final_residual = selfsim_residual(&p, spec, opts)?;
    let mass = first_moment(&p)?;
    Ok(ProfileSolution { profile: p, spec: spec.clone(), iterations, converged, last_change, final_residual, mass })
}

/// `‖p − B₂[p,p] − εB_W[p,p]‖ / ‖p‖` in `X_{-α,β}`; zero for the zero function.
pub fn selfsim_residual(p: &GridFunction, spec: &KernelSpec, opts: &SolverOptions) -> Result<f64> {
    let w = opts.norm_weight(spec);
    let norm = weighted_norm(p, w)?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    let r = coag_rhs(p, spec)?;
    Ok(weighted_norm(&p.sub(&r)?, w)? / norm)
}

/// `M_s[p] = ∫ x^s p` for each exponent.
pub fn moment_table(p: &GridFunction, exponents: &[f64]) -> Result<Vec<f64>> {
    exponents.iter().map(|&s| moment(p, s)).collect()
}

/// Least-squares slope of `-ln p` against `x` over the last quarter of the nodes.
pub fn tail_decay_rate(p: &GridFunction) -> Result<f64> {
    let g = p.grid();
    let n = g.len();
    let start = n - n / 4;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let m = (n - start) as f64;
    for k in start..n {
        let v = p.value(k);
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "non-positive value {v} in the tail window at x = {}",
                g.node(k)
            )));
        }
        let x = g.node(k);
        let y = -v.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    Ok((m * sxy - sx * sy) / (m * sxx - sx * sx))
}

/// Default sample points of the Laplace gap: `0` and 60 log-spaced points in `[1e-3, 1e3]`.
pub fn default_laplace_samples() -> Vec<f64> {
    let mut q = vec![0.0];
    q.extend((0..60).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 59.0)));
    q
}

/// `max_q |T[p − e^{-x}](q)|` over the samples.
pub fn laplace_gap(p: &GridFunction, q_samples: &[f64]) -> Result<f64> {
    let diff = p.map(|x, v| v - (-x).exp())?;
    let mut gap: f64 = 0.0;
    for &q in q_samples {
        gap = gap.max(desing_laplace(&diff, q)?.abs());
    }
    Ok(gap)
}

/// Named scalar diagnostics of a solved profile, in a fixed order.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticsReport {
    pub entries: Vec<(String, f64)>,
}

impl DiagnosticsReport {
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Mass, residuals, `κ`, tail rate, Laplace gap, moments, distances to `e^{-x}`
/// in `X_{-α,β}` and `X_{0,1}`, and pointwise gaps at `x ∈ {0.1, 1, 5}`.
///
/// The tail rate is NaN when discretisation error leaves a non-positive value
/// in the fitting window.
pub fn diagnostics(sol: &ProfileSolution, opts: &SolverOptions) -> Result<DiagnosticsReport> {
    let p = &sol.profile;
    let spec = &sol.spec;
    let a = spec.alpha;
    let e = GridFunction::from_fn(p.grid(), |x| (-x).exp())?;
    let diff = p.sub(&e)?;
    let bl = compute_bl_data(p, spec)?;
    let mut r = DiagnosticsReport::default();
    r.push("converged", if sol.converged { 1.0 } else { 0.0 });
    r.push("iterations", sol.iterations as f64);
    r.push("last_change", sol.last_change);
    r.push("mass", sol.mass);
    r.push("residual", sol.final_residual);
    r.push("kappa", bl.kappa);
    r.push("beta2", bl.beta2);
    r.push("phi_at_xmin", bl.phi.value(0));
    r.push("tail_rate", tail_decay_rate(p).unwrap_or(f64::NAN));
    r.push("laplace_gap", laplace_gap(p, &default_laplace_samples())?);
    let exps = [-a, 0.0, a, 1.0, 2.0];
    let names = ["moment_minus_alpha", "moment_0", "moment_alpha", "moment_1", "moment_2"];
    for (name, m) in names.iter().zip(moment_table(p, &exps)?) {
        r.push(*name, m);
    }
    r.push("norm_ab", weighted_norm(&diff, opts.norm_weight(spec))?);
    r.push("norm_01", weighted_norm(&diff, WeightParams::new(0.0, 1.0))?);
    for x in [0.1, 1.0, 5.0] {
        r.push(format!("pointwise_gap_{x}"), (p.eval(x) - (-x).exp()).abs());
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Grid;

    fn exp_fn(g: &Grid, a: f64) -> GridFunction {
        GridFunction::from_fn(g, |x| a * (-a * x).exp()).unwrap()
    }

    #[test]
    fn constant_kernel_profile_is_exponential() {
        let g = Grid::default_grid();
        let k = KernelSpec::constant(0.5).unwrap();
        let opts = SolverOptions::default();
        let w = opts.norm_weight(&k);
        let e = exp_fn(&g, 1.0);
        for init in [exp_fn(&g, 1.0), exp_fn(&g, 2.0)] {
            let s = solve_profile(&k, &opts, &init).unwrap();
            assert!(s.converged);
            assert!(weighted_norm(&s.profile.sub(&e).unwrap(), w).unwrap() < 1e-6);
            assert!(s.final_residual < 1e-6);
            assert!((s.mass - 1.0).abs() < 1e-8);
            assert!(s.profile.is_nonnegative());
        }
    }

    #[test]
    fn exponential_start_is_accepted_at_once() {
        let g = Grid::default_grid();
        let k = KernelSpec::constant(0.5).unwrap();
        let opts = SolverOptions { tol: 1e-6, ..Default::default() };
        let s = solve_profile(&k, &opts, &exp_fn(&g, 1.0)).unwrap();
        assert!(s.converged && s.iterations <= 3, "{} iterations", s.iterations);
    }

    #[test]
    fn scaling_renormalization_reaches_the_same_profile() {
        let g = Grid::new(1e-5, 40.0, 512).unwrap();
        let k = KernelSpec::power(0.1, 0.5, 1.0).unwrap();
        let a = solve_profile(&k, &SolverOptions::default(), &exp_fn(&g, 1.0)).unwrap();
        let opts = SolverOptions { renormalization: Renormalization::Scaling, ..Default::default() };
        let b = solve_profile(&k, &opts, &exp_fn(&g, 1.0)).unwrap();
        assert!(a.converged && b.converged);
        let w = opts.norm_weight(&k);
        // distinct discrete fixed points, equal up to the interpolation error of the dilation
        let d = weighted_norm(&a.profile.sub(&b.profile).unwrap(), w).unwrap();
        assert!(d < 1e-5, "{d:e}");
    }

    #[test]
    fn perturbed_kernel_converges() {
        let g = Grid::default_grid();
        let k = KernelSpec::power(0.05, 0.5, 1.0).unwrap();
        let s = solve_profile(&k, &SolverOptions::default(), &exp_fn(&g, 1.0)).unwrap();
        assert!(s.converged);
        assert!(s.final_residual < 1e-6);
        assert!((s.mass - 1.0).abs() < 1e-8);
        assert!(s.profile.is_nonnegative());
    }

    #[test]
    fn rejects_bad_options_and_inputs() {
        let g = Grid::new(1e-3, 20.0, 64).unwrap();
        let k = KernelSpec::constant(0.5).unwrap();
        let e = exp_fn(&g, 1.0);
        for opts in [
            SolverOptions { damping: 0.0, ..Default::default() },
            SolverOptions { damping: 1.5, ..Default::default() },
            SolverOptions { tol: 0.0, ..Default::default() },
            SolverOptions { max_iter: 0, ..Default::default() },
        ] {
            assert!(solve_profile(&k, &opts, &e).is_err());
        }
        let neg = e.scaled(-1.0);
        assert!(solve_profile(&k, &SolverOptions::default(), &neg).is_err());
    }

    #[test]
    fn residuals() {
        let g = Grid::default_grid();
        let e = exp_fn(&g, 1.0);
        let opts = SolverOptions::default();
        let k0 = KernelSpec::constant(0.5).unwrap();
        assert!(selfsim_residual(&e, &k0, &opts).unwrap() < 1e-6);
        // B_W[e, e] ~ x^{-α} at zero, so the residual is finite in X_{-α,β} only for α < 1/2
        let k1 = KernelSpec::power(0.1, 0.25, 1.0).unwrap();
        let r = selfsim_residual(&e, &k1, &opts).unwrap();
        assert!(r > 1e-3 && r < 1.0, "{r}");
        assert_eq!(selfsim_residual(&GridFunction::zeros(&g), &k1, &opts).unwrap(), 0.0);
    }

    #[test]
    fn moments_decay_and_laplace_gap() {
        let g = Grid::default_grid();
        let e = exp_fn(&g, 1.0);
        let m = moment_table(&e, &[1.0, 0.5, -0.5]).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-8);
        assert!((m[1] - 0.886226925452758).abs() < 1e-7);
        assert!((m[2] - 1.772453850905516).abs() < 1e-6);
        assert!((tail_decay_rate(&e).unwrap() - 1.0).abs() < 1e-3);
        assert!(
            (tail_decay_rate(&GridFunction::from_fn(&g, |x| (-2.0 * x).exp()).unwrap()).unwrap() - 2.0).abs() < 1e-3
        );
        assert!(tail_decay_rate(&GridFunction::zeros(&g)).is_err());

        let q = default_laplace_samples();
        assert_eq!(q.len(), 61);
        assert!(laplace_gap(&e, &q).unwrap() < 1e-10);
        // T[2e^{-2x}](q) - T[e^{-x}](q) = q/(2+q) - q/(1+q)
        let oracle = q.iter().map(|&q| q / ((1.0 + q) * (2.0 + q))).fold(0.0, f64::max);
        let gap = laplace_gap(&exp_fn(&g, 2.0), &q).unwrap();
        assert!((gap - oracle).abs() < 1e-8, "{gap} vs {oracle}");
    }
}
