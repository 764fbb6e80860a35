//! Checks shared by the property suite and the acceptance run.
//!
//! Each check returns `Err` with a short description of the violation, so the
//! proptest driver and the seeded acceptance driver report the same thing.
#![allow(dead_code)]

use std::sync::OnceLock;

use rand::Rng;
use selfsim::coag::{b2_apply, bw_apply};
use selfsim::kernels::KernelSpec;
use selfsim::linop::{
    desing_laplace, inverse_apply, linearized_apply, linearized_apply_bilinear, linearized_apply_expanded,
};
use selfsim::space::{integrate, moment, weighted_norm, Grid, GridFunction, WeightParams};

pub type Check = Result<(), String>;

/// `(c, a, b)` for a term `c x^a e^{-bx}`.
pub type Term = (f64, f64, f64);

pub fn grid() -> &'static Grid {
    static G: OnceLock<Grid> = OnceLock::new();
    G.get_or_init(|| Grid::new(1e-5, 40.0, 512).unwrap())
}

pub fn sample(g: &Grid, terms: &[Term]) -> GridFunction {
    GridFunction::from_fn(g, |x| terms.iter().map(|&(c, a, b)| c * x.powf(a) * (-b * x).exp()).sum()).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: selfsim::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// One to three terms sharing a sign, `|c| ≤ 1`, `a ∈ [0, 2]`, `b ∈ [0.5, 3]`.
///
/// Mixed signs can put a root a few cells above `x_min`, where the two-node
/// power fit of the left tail reads the approach to the root as a
/// non-integrable singularity.
pub fn draw_terms(rng: &mut impl Rng, negative: bool) -> Vec<Term> {
    let k = rng.gen_range(1..=3);
    (0..k)
        .map(|_| {
            let c: f64 = rng.gen_range(0.0..=1.0);
            (if negative { -c } else { c }, rng.gen_range(0.0..=2.0), rng.gen_range(0.5..=3.0))
        })
        .collect()
}

/// Integer powers `a ∈ {0, 1, 2}`, decay `b ∈ [2, 4]` beyond the `β = 1.75` weight.
pub fn draw_integer_terms(rng: &mut impl Rng) -> Vec<Term> {
    let k = rng.gen_range(1..=3);
    (0..k).map(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(0..=2) as f64, rng.gen_range(2.0..=4.0))).collect()
}

pub fn weight_product(x: f64, (a1, b1): (f64, f64), (a2, b2): (f64, f64)) -> Check {
    let (w1, w2) = (WeightParams::new(a1, b1), WeightParams::new(a2, b2));
    let lhs = ok(w1.eval(x))? * ok(w2.eval(x))?;
    let rhs = ok(w1.product(&w2).eval(x))?;
    ensure(rel_close(lhs, rhs, 1e-12), || format!("product at x={x}: {lhs} vs {rhs}"))?;
    ensure(w1.product(&w2) == WeightParams::new(a1 + a2, b1 + b2), || "product exponents".into())
}

pub fn weight_shift(x: f64, a: f64, b: f64, gamma: f64) -> Check {
    let w = WeightParams::new(a, b);
    let lhs = x.powf(gamma) * ok(w.eval(x))?;
    let rhs = ok(w.shifted(gamma).eval(x))?;
    ensure(rel_close(lhs, rhs, 1e-12), || format!("shift at x={x}: {lhs} vs {rhs}"))
}

pub fn weight_monotone(x: f64, a: f64, b: f64, da: f64, db: f64) -> Check {
    let small = WeightParams::new(a, b);
    let big = WeightParams::new(a - da, b + db);
    ensure(small.dominated_by(&big), || "dominated_by".into())?;
    let (s, l) = (ok(small.eval(x))?, ok(big.eval(x))?);
    ensure(s <= l * (1.0 + 1e-14), || format!("monotonicity at x={x}: {s} > {l}"))
}

pub fn weight_regularising(x: f64, a: f64, b: f64) -> Check {
    let w = WeightParams::new(a, b);
    let lhs = -(-x).exp_m1() * ok(w.eval(x))?;
    let rhs = ok(WeightParams::new(a + 1.0, b).eval(x))?;
    ensure(lhs <= rhs * (1.0 + 1e-14), || format!("regularising at x={x}: {lhs} > {rhs}"))
}

pub fn norm_embedding(f: &GridFunction, a: f64, b: f64, da: f64, db: f64) -> Check {
    let lo = ok(weighted_norm(f, WeightParams::new(a, b)))?;
    let hi = ok(weighted_norm(f, WeightParams::new(a - da, b + db)))?;
    ensure(lo <= hi * (1.0 + 1e-12), || format!("embedding: {lo} > {hi}"))
}

pub fn norm_regularising(f: &GridFunction, a: f64, b: f64) -> Check {
    let g = ok(f.map(|x, v| -(-x).exp_m1() * v))?;
    let lhs = ok(weighted_norm(&g, WeightParams::new(a, b)))?;
    let rhs = ok(weighted_norm(f, WeightParams::new(a + 1.0, b)))?;
    ensure(lhs <= rhs * (1.0 + 1e-9), || format!("norm regularising: {lhs} > {rhs}"))
}

fn bilinear_spec() -> KernelSpec {
    KernelSpec::power(0.1, 0.4, 1.0).unwrap()
}

fn bilinear_weight() -> WeightParams {
    WeightParams::profile(0.4, 1.7)
}

/// `B(cg, h) = cB(g, h)` and `B(h, cg) = cB(h, g)` to round-off for `B₂` and `B_W`.
pub fn homogeneity(g: &GridFunction, h: &GridFunction, c: f64) -> Check {
    let spec = bilinear_spec();
    let w = bilinear_weight();
    let cg = g.scaled(c);
    let pairs = [
        (ok(b2_apply(&cg, h))?, ok(b2_apply(g, h))?),
        (ok(b2_apply(h, &cg))?, ok(b2_apply(h, g))?),
        (ok(bw_apply(&cg, h, &spec))?, ok(bw_apply(g, h, &spec))?),
        (ok(bw_apply(h, &cg, &spec))?, ok(bw_apply(h, g, &spec))?),
    ];
    for (k, (lhs, base)) in pairs.iter().enumerate() {
        let rhs = base.scaled(c);
        let d = ok(weighted_norm(&ok(lhs.sub(&rhs))?, w))?;
        let scale = ok(weighted_norm(&rhs, w))?;
        ensure(d <= 1e-12 * scale.max(1e-300), || format!("homogeneity pair {k}: {d:e} vs {scale:e}"))?;
    }
    Ok(())
}

/// `B(c₁g₁ + c₂g₂, h) = c₁B(g₁, h) + c₂B(g₂, h)` in either slot, compared on
/// the nodes `x ≥ 100 x_min` relative to the largest value there.
///
/// A sum of terms with different powers at zero carries only the more
/// singular power in its left tail. Outputs within a few cells of `x_min`
/// integrate mostly over that tail and inherit its error, which decays like
/// `(x_min/x)^{2-α}` and is below `1e-4` from `100 x_min` on. Callers pass
/// positive summands.
pub fn additivity(g1: &GridFunction, g2: &GridFunction, h: &GridFunction, c1: f64, c2: f64) -> Check {
    let spec = bilinear_spec();
    let mix = ok(g1.lincomb(c1, g2, c2))?;
    let lo = 100.0 * g1.grid().x_min();
    for swap in [false, true] {
        for kind in 0..2 {
            let apply = |u: &GridFunction| -> Result<GridFunction, String> {
                let (a, b) = if swap { (h, u) } else { (u, h) };
                ok(if kind == 0 { b2_apply(a, b) } else { bw_apply(a, b, &spec) })
            };
            let lhs = apply(&mix)?;
            let rhs = ok(apply(g1)?.lincomb(c1, &apply(g2)?, c2))?;
            let d = ok(lhs.sub(&rhs))?.sup_abs_on(lo, f64::INFINITY);
            let scale = rhs.sup_abs_on(lo, f64::INFINITY);
            ensure(d <= 1e-4 * scale.max(1e-300), || {
                format!("additivity kind {kind} swap {swap}: {d:e} vs {scale:e}")
            })?;
        }
    }
    Ok(())
}

/// `∫ x²B₂[g,h](x)φ(x) dx = 2∫∫ y g(y)h(z) ∫_y^{y+z} φ dx dz dy`.
///
/// For `φ = 1` the right side is `2M₁[g]M₁[h]`, for `φ = e^{-x}` it is
/// `2∫ye^{-y}g(y) dy · ∫(1 - e^{-z})h(z) dz`.
pub fn fubini(g: &GridFunction, h: &GridFunction) -> Check {
    let b = ok(b2_apply(g, h))?;
    let outer_one = ok(integrate(&ok(b.map(|x, v| x * x * v))?))?;
    let inner_one = 2.0 * ok(moment(g, 1.0))? * ok(moment(h, 1.0))?;
    ensure(rel_close(outer_one, inner_one, 1e-6), || format!("phi = 1: {outer_one} vs {inner_one}"))?;
    let outer_exp = ok(integrate(&ok(b.map(|x, v| x * x * (-x).exp() * v))?))?;
    let gy = ok(g.map(|y, v| y * (-y).exp() * v))?;
    let inner_exp = 2.0 * ok(integrate(&gy))? * ok(desing_laplace(h, 1.0))?;
    ensure(rel_close(outer_exp, inner_exp, 1e-6), || format!("phi = e^-x: {outer_exp} vs {inner_exp}"))
}

/// The three evaluations of `𝓛[h]` agree to `1e-6` in `X_{-1/2, 7/4}`.
pub fn three_forms(h: &GridFunction) -> Check {
    let w = WeightParams::profile(0.5, 1.75);
    let a = ok(linearized_apply(h))?;
    for other in [ok(linearized_apply_expanded(h))?, ok(linearized_apply_bilinear(h))?] {
        let d = ok(weighted_norm(&ok(a.sub(&other))?, w))?;
        ensure(d <= 1e-6, || format!("three forms: {d:e}"))?;
    }
    Ok(())
}

/// Operator-norm ratios of `B₂`, `B_W`, `𝓛` and `A₀` over 20 seeded random
/// inputs on one grid.
pub fn continuity_ratios(gr: &Grid, seed: u64) -> Result<[Vec<f64>; 4], String> {
    use rand::SeedableRng;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let alpha = 0.5;
    let w = WeightParams::profile(alpha, 1.75);
    let w_bw = WeightParams::new(1.0 - alpha, 1.75);
    let spec = ok(KernelSpec::power(0.1, alpha, 1.0))?;
    let mut out: [Vec<f64>; 4] = Default::default();
    for _ in 0..20 {
        let neg = rng.gen();
        let g = sample(gr, &draw_terms(&mut rng, neg));
        let neg = rng.gen();
        let h = sample(gr, &draw_terms(&mut rng, neg));
        let (ng, nh) = (ok(weighted_norm(&g, w))?, ok(weighted_norm(&h, w))?);
        out[0].push(ok(weighted_norm(&ok(b2_apply(&g, &h))?, w))? / (ng * nh));
        out[1].push(ok(weighted_norm(&ok(bw_apply(&g, &h, &spec))?, w_bw))? / (ng * nh));
        out[2].push(ok(weighted_norm(&ok(linearized_apply(&g))?, w))? / ng);
        out[3].push(ok(weighted_norm(&ok(inverse_apply(&g))?, w))? / ng);
    }
    Ok(out)
}

/// Ratios finite and bounded at `n = 512`, and their supremum stable to 1% at `n = 1024`.
pub fn continuity_stable(seed: u64) -> Check {
    let coarse = continuity_ratios(grid(), seed)?;
    let fine_grid = ok(Grid::new(1e-5, 40.0, 1024))?;
    let fine = continuity_ratios(&fine_grid, seed)?;
    for (k, name) in ["B2", "BW", "L", "A0"].iter().enumerate() {
        ensure(coarse[k].iter().chain(&fine[k]).all(|r| r.is_finite() && *r >= 0.0), || {
            format!("{name}: non-finite ratio")
        })?;
        let c = coarse[k].iter().cloned().fold(0.0, f64::max);
        let f = fine[k].iter().cloned().fold(0.0, f64::max);
        ensure(c > 0.0 && c < 1e3, || format!("{name}: sup ratio {c}"))?;
        ensure(rel_close(c, f, 1e-2), || format!("{name}: {c} at n=512 vs {f} at n=1024"))?;
    }
    Ok(())
}
