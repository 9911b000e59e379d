//! Condensation of a posynomial into a monomial by the weighted AM-GM
//! inequality.

use crate::error::{domain, Result};
use crate::gp::{Monomial, Posynomial};

/// Weights below this are treated as zero when a term vanishes at `x0`.
const NEGLIGIBLE_WEIGHT: f64 = 1e-15;

/// Share of each term in `g(x0)`: `α_k = f_k(x0) / g(x0)`.
pub fn alpha_weights(g: &Posynomial, x0: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = x0.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(domain("x0", bad, "(0, ∞)"));
    }
    let values: Vec<f64> = g.terms().iter().map(|m| m.eval(x0)).collect();
    let total: f64 = values.iter().sum();
    Ok(values.iter().map(|v| v / total).collect())
}

/// `ĝ(x) = Π_k (f_k(x)/α_k)^{α_k}`: equal to `g` at `x0` and below it
/// everywhere else.
pub fn monomial_approx(g: &Posynomial, x0: &[f64]) -> Result<Monomial> {
    let alpha = alpha_weights(g, x0)?;
    let mut coeff_log = 0.0;
    let mut exps = Vec::new();
    for (term, &a) in g.terms().iter().zip(&alpha) {
        if a < NEGLIGIBLE_WEIGHT {
            continue;
        }
        coeff_log += a * (term.coeff().ln() - a.ln());
        exps.extend(term.exponents().iter().map(|&(v, e)| (v, e * a)));
    }
    let approx = Monomial::new(coeff_log.exp(), exps)?;
    // pin the value at x0 exactly; dropped weights and rounding shift it slightly
    let fix = g.eval(x0) / approx.eval(x0);
    approx.scale(fix)
}
