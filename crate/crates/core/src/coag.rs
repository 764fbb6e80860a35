//! The coagulation bilinear forms
//!
//! ```text
//! B₂[g,h](x) = (2/x²) ∫₀^x ∫_{x-y}^∞ y g(y) h(z) dz dy
//! B_W[g,h](x) = (1/x²) ∫₀^x ∫_{x-y}^∞ y W(y,z) g(y) h(z) dz dy
//! ```
//!
//! and the right-hand side `B₂[Π,Π] + εB_W[Π,Π]` of the profile equation.
//!
//! The inner integral is read from an upper cumulative of `h`. The outer
//! integral is split at `x/2` and the upper half is rewritten in `w = x - y`,
//! so both halves are integrals over `(0, x/2]` that the log grid resolves near
//! their singular end.

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Perturbation};
use crate::space::{power_product, Cumulative, Grid, GridFunction, HalfSplit, SplitPoint};

/// Upper cumulatives `∫_w^∞ z^s h(z) dz` for `s ∈ {0, α, -α}`.
#[derive(Clone, Debug)]
pub struct CumulativeTable {
    pub alpha: f64,
    pub zero: Cumulative,
    pub plus: Cumulative,
    pub minus: Cumulative,
}

impl CumulativeTable {
    pub fn new(h: &GridFunction, alpha: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            zero: Cumulative::new(h)?,
            plus: Cumulative::new(&power_product(h, alpha))?,
            minus: Cumulative::new(&power_product(h, -alpha))?,
        })
    }

    /// `H_s(∞) = ∫ z^s h`.
    pub fn totals(&self) -> [f64; 3] {
        [self.zero.total(), self.plus.total(), self.minus.total()]
    }
}

/// One separable term `coef · y^{1+γ} g(y) ∫_{x-y}^∞ R-integrand`.
struct Term<'a> {
    gamma: f64,
    coef: f64,
    upper: &'a Cumulative,
}

#[inline]
fn value_at(f: &GridFunction, p_node: Option<usize>, t: f64, x: f64) -> f64 {
    match p_node {
        Some(j) => f.value(j),
        None => f.eval_pos(t, x),
    }
}

#[inline]
fn upper_at(c: &Cumulative, p_node: Option<usize>, t: f64, x: f64) -> f64 {
    match p_node {
        Some(j) => c.upper_node(j),
        None => c.upper_pos(t, x),
    }
}

fn check_same_grid(g: &GridFunction, h: &GridFunction) -> Result<()> {
    if g.grid().same_as(h.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `Σ_terms coef/x² ∫₀^x y^{1+γ} g(y) R(x - y) dy` at every node.
fn separable(g: &GridFunction, terms: &[Term<'_>]) -> Result<Vec<f64>> {
    let grid = g.grid();
    let split = HalfSplit::new(grid);
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        // lower half: y small, partner z = x - y
        let lower = split.integrate(i, |p: &SplitPoint| {
            let gy = value_at(g, p.node, p.ty, p.y);
            if gy == 0.0 {
                return 0.0;
            }
            terms.iter().map(|t| t.coef * p.y.powf(1.0 + t.gamma) * t.upper.upper_pos(p.tz, p.z)).sum::<f64>() * gy
        })?;
        // upper half in w = x - y: y = z is the partner, w = p.y the small variable
        let upper = split.integrate(i, |p: &SplitPoint| {
            let gz = g.eval_pos(p.tz, p.z);
            if gz == 0.0 {
                return 0.0;
            }
            terms.iter().map(|t| t.coef * p.z.powf(1.0 + t.gamma) * upper_at(t.upper, p.node, p.ty, p.y)).sum::<f64>()
                * gz
        })?;
        let x = grid.node(i);
        out.push((lower + upper) / (x * x));
    }
    Ok(out)
}

/// `B₂[g, h]`.
pub fn b2_apply(g: &GridFunction, h: &GridFunction) -> Result<GridFunction> {
    check_same_grid(g, h)?;
    let upper = Cumulative::new(h)?;
    let vals = separable(g, &[Term { gamma: 0.0, coef: 2.0, upper: &upper }])?;
    GridFunction::from_values(g.grid(), vals)
}

/// `B_W[g, h]` for the kernel's perturbation `W`.
///
/// The power form is separable and costs `O(N²)`. A custom `W` tabulates
/// `∫_s^∞ W(y_j, z) h(z) dz` for every node `y_j`, which is `O(N²)` in time and
/// memory, and interpolates across rows for off-node `y`.
pub fn bw_apply(g: &GridFunction, h: &GridFunction, spec: &KernelSpec) -> Result<GridFunction> {
    check_same_grid(g, h)?;
    let vals = match spec.form {
        Perturbation::PowerSymmetric => {
            let alpha = spec.alpha;
            let minus = Cumulative::new(&power_product(h, -alpha))?;
            let plus = Cumulative::new(&power_product(h, alpha))?;
            separable(
                g,
                &[
                    Term { gamma: alpha, coef: spec.c_star, upper: &minus },
                    Term { gamma: -alpha, coef: spec.c_star, upper: &plus },
                ],
            )?
        }
        Perturbation::BoundedCustom(_) => custom_bw(g, h, spec)?,
    };
    GridFunction::from_values(g.grid(), vals)
}

/// Rows `s ↦ ∫_s^∞ W(y, z) h(z) dz` for fixed `y`.
struct RowTable<'a> {
    grid: &'a Grid,
    h: &'a GridFunction,
    spec: &'a KernelSpec,
    rows: Vec<Cumulative>,
}

impl<'a> RowTable<'a> {
    fn new(grid: &'a Grid, h: &'a GridFunction, spec: &'a KernelSpec) -> Result<Self> {
        let rows = grid.nodes().iter().map(|&y| Self::row(grid, h, spec, y)).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, h, spec, rows })
    }

    fn row(grid: &Grid, h: &GridFunction, spec: &KernelSpec, y: f64) -> Result<Cumulative> {
        let vals = grid.nodes().iter().zip(h.values()).map(|(&z, &hz)| spec.w(y, z) * hz).collect();
        Cumulative::new(&GridFunction::from_values(grid, vals)?)
    }

    /// `∫_s^∞ W(y, z) h(z) dz` with log positions `ty`, `ts`.
    fn eval(&self, ty: f64, y: f64, ts: f64, s: f64) -> Result<f64> {
        let n = self.rows.len();
        if ty >= 0.0 && ty <= (n - 1) as f64 {
            let k = ty.floor();
            if k == ty {
                return Ok(self.rows[k as usize].upper_pos(ts, s));
            }
            let start = ((k as isize) - 1).clamp(0, n as isize - 4) as usize;
            let w = crate::space::lagrange4(ty - start as f64);
            return Ok((0..4).map(|m| w[m] * self.rows[start + m].upper_pos(ts, s)).sum());
        }
        Ok(Self::row(self.grid, self.h, self.spec, y)?.upper_pos(ts, s))
    }
}

fn custom_bw(g: &GridFunction, h: &GridFunction, spec: &KernelSpec) -> Result<Vec<f64>> {
    let grid = g.grid();
    let table = RowTable::new(grid, h, spec)?;
    let split = HalfSplit::new(grid);
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let mut err = None;
        let lower = split.integrate(i, |p| {
            let gy = value_at(g, p.node, p.ty, p.y);
            if gy == 0.0 {
                return 0.0;
            }
            match table.eval(p.ty, p.y, p.tz, p.z) {
                Ok(c) => p.y * gy * c,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        })?;
        let upper = split.integrate(i, |p| {
            let gz = g.eval_pos(p.tz, p.z);
            if gz == 0.0 {
                return 0.0;
            }
            match table.eval(p.tz, p.z, p.ty, p.y) {
                Ok(c) => p.z * gz * c,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        let x = grid.node(i);
        out.push((lower + upper) / (x * x));
    }
    Ok(out)
}

/// `B₂[p, p] + ε B_W[p, p]`.
pub fn coag_rhs(p: &GridFunction, spec: &KernelSpec) -> Result<GridFunction> {
    let b2 = b2_apply(p, p)?;
    if spec.epsilon == 0.0 {
        return Ok(b2);
    }
    let bw = bw_apply(p, p, spec)?;
    b2.axpy(spec.epsilon, &bw)
}

/// The gain term `∫₀^z y K(y, z - y) Π(y) Π(z - y) dy` at every node `z`,
/// computed as `z ∫₀^{z/2} K Π(y) Π(z - y) dy` using the symmetry of `K`.
pub fn convolution(p: &GridFunction, spec: &KernelSpec) -> Result<Vec<f64>> {
    let grid = p.grid();
    let split = HalfSplit::new(grid);
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let v = split.integrate(i, |q| {
            let py = value_at(p, q.node, q.ty, q.y);
            if py == 0.0 {
                return 0.0;
            }
            spec.k(q.y, q.z) * py * p.eval_pos(q.tz, q.z)
        })?;
        out.push(grid.node(i) * v);
    }
    Ok(out)
}
