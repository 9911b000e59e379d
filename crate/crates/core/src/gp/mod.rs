//! Geometric programming over positive variables.
//!
//! A [`GpProblem`] minimizes a posynomial subject to `posynomial ≤ 1` and
//! `monomial = 1` constraints plus box bounds. [`solve_gp`] works on the
//! log-transformed problem, where monomials are affine and posynomials are
//! log-sum-exp, with a barrier interior-point method.

mod approx;
pub mod library;
mod solver;

use std::fmt;
use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

pub use approx::{alpha_weights, monomial_approx};
pub use solver::{solve_gp, GpOptions, GpSolution, GpStatus};

pub const DEFAULT_LOWER: f64 = 1e-9;
pub const DEFAULT_UPPER: f64 = 1e9;

/// Index of a variable inside its [`GpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub usize);

/// `c · Π x_v^{a_v}` with `c > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    coeff: f64,
    /// Sorted by variable, no duplicates, no zero exponents.
    exponents: Vec<(Var, f64)>,
}

impl Monomial {
    pub fn new(coeff: f64, exponents: impl IntoIterator<Item = (Var, f64)>) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(domain("monomial coefficient", coeff, "(0, ∞)"));
        }
        let mut exps: Vec<(Var, f64)> = exponents.into_iter().collect();
        if let Some(&(_, bad)) = exps.iter().find(|(_, e)| !e.is_finite()) {
            return Err(domain("monomial exponent", bad, "finite reals"));
        }
        exps.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(Var, f64)> = Vec::with_capacity(exps.len());
        for (v, e) in exps {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => merged.push((v, e)),
            }
        }
        merged.retain(|&(_, e)| e != 0.0);
        Ok(Self {
            coeff,
            exponents: merged,
        })
    }

    pub fn constant(coeff: f64) -> Result<Self> {
        Self::new(coeff, [])
    }

    pub fn var(v: Var) -> Self {
        Self {
            coeff: 1.0,
            exponents: vec![(v, 1.0)],
        }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponents(&self) -> &[(Var, f64)] {
        &self.exponents
    }

    pub fn exponent(&self, v: Var) -> f64 {
        self.exponents
            .binary_search_by_key(&v, |&(w, _)| w)
            .map_or(0.0, |i| self.exponents[i].1)
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        Self::new(self.coeff * factor, self.exponents.iter().copied())
    }

    pub fn powf(&self, e: f64) -> Result<Self> {
        Self::new(self.coeff.powf(e), self.exponents.iter().map(|&(v, a)| (v, a * e)))
    }

    pub fn recip(&self) -> Self {
        Self {
            coeff: 1.0 / self.coeff,
            exponents: self.exponents.iter().map(|&(v, a)| (v, -a)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .fold(self.coeff, |acc, &(v, a)| acc * x[v.0].powf(a))
    }

    /// `log m(e^y) = log c + a·y`.
    pub fn log_eval(&self, y: &[f64]) -> f64 {
        self.exponents
            .iter()
            .fold(self.coeff.ln(), |acc, &(v, a)| acc + a * y[v.0])
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.exponents.iter().map(|&(v, _)| v)
    }
}

impl Mul for &Monomial {
    type Output = Monomial;
    fn mul(self, rhs: &Monomial) -> Monomial {
        Monomial::new(
            self.coeff * rhs.coeff,
            self.exponents.iter().chain(&rhs.exponents).copied(),
        )
        .expect("product of valid monomials")
    }
}

impl Div for &Monomial {
    type Output = Monomial;
    fn div(self, rhs: &Monomial) -> Monomial {
        self * &rhs.recip()
    }
}

/// Sum of monomials, at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("posynomial", "needs at least one term"));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|m| m.eval(x)).sum()
    }

    /// `log f(e^y)`, evaluated stably.
    pub fn log_sum_exp(&self, y: &[f64]) -> f64 {
        let z: Vec<f64> = self.terms.iter().map(|m| m.log_eval(y)).collect();
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + z.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t * m).collect(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.terms.iter().flat_map(|m| m.vars())
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Self { terms: vec![m] }
    }
}

impl Add for Posynomial {
    type Output = Posynomial;
    fn add(mut self, rhs: Posynomial) -> Posynomial {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Mul for &Posynomial {
    type Output = Posynomial;
    fn mul(self, rhs: &Posynomial) -> Posynomial {
        let terms = self
            .terms
            .iter()
            .flat_map(|a| rhs.terms.iter().map(move |b| a * b))
            .collect();
        Posynomial { terms }
    }
}

/// Standard-form GP: minimize `objective` subject to `inequalities ≤ 1`,
/// `equalities = 1` and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpProblem {
    names: Vec<String>,
    bounds: Vec<(f64, f64)>,
    pub objective: Posynomial,
    pub inequalities: Vec<Posynomial>,
    pub equalities: Vec<Monomial>,
}

impl Default for GpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl GpProblem {
    /// An empty problem; the objective defaults to the constant 1.
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            bounds: Vec::new(),
            objective: Monomial::constant(1.0).expect("1 is positive").into(),
            inequalities: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Var {
        self.add_bounded_var(name, DEFAULT_LOWER, DEFAULT_UPPER)
            .expect("default bounds are valid")
    }

    pub fn add_bounded_var(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> Result<Var> {
        check_bounds(lo, hi)?;
        self.names.push(name.into());
        self.bounds.push((lo, hi));
        Ok(Var(self.names.len() - 1))
    }

    pub fn set_bounds(&mut self, v: Var, lo: f64, hi: f64) -> Result<()> {
        check_bounds(lo, hi)?;
        self.bounds[v.0] = (lo, hi);
        Ok(())
    }

    pub fn var_by_name(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name).map(Var)
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.0]
    }

    pub fn bounds(&self, v: Var) -> (f64, f64) {
        self.bounds[v.0]
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn minimize(&mut self, objective: impl Into<Posynomial>) {
        self.objective = objective.into();
    }

    /// Adds `p ≤ 1`.
    pub fn add_le(&mut self, p: impl Into<Posynomial>) {
        self.inequalities.push(p.into());
    }

    /// Adds `m = 1`.
    pub fn add_eq(&mut self, m: Monomial) {
        self.equalities.push(m);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let all = std::iter::once(&self.objective)
            .chain(&self.inequalities)
            .flat_map(|p| p.vars())
            .chain(self.equalities.iter().flat_map(|m| m.vars()));
        for v in all {
            if v.0 >= n {
                return Err(invalid("gp", format!("variable index {} has no bounds", v.0)));
            }
        }
        Ok(())
    }

    /// Largest constraint violation at `x`: `max(p(x) − 1)` over inequalities,
    /// `|m(x) − 1|` over equalities, and relative bound excess.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let ineq = self.inequalities.iter().map(|p| p.eval(x) - 1.0);
        let eq = self.equalities.iter().map(|m| (m.eval(x) - 1.0).abs());
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| ((lo - v) / lo).max((v - hi) / hi));
        ineq.chain(eq).chain(bounds).fold(0.0, f64::max)
    }

    fn fmt_monomial(&self, m: &Monomial, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", m.coeff)?;
        for &(v, a) in m.exponents() {
            write!(f, " {}^{}", self.names[v.0], a)?;
        }
        writeln!(f)
    }
}

fn check_bounds(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(invalid("bounds", format!("need 0 < lo <= hi < inf, got [{lo}, {hi}]")));
    }
    Ok(())
}

/// Debug dump: one monomial per line, coefficient then `var^exp` pairs.
impl fmt::Display for GpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "minimize")?;
        for m in self.objective.terms() {
            self.fmt_monomial(m, f)?;
        }
        for (i, p) in self.inequalities.iter().enumerate() {
            writeln!(f, "le {i}")?;
            for m in p.terms() {
                self.fmt_monomial(m, f)?;
            }
        }
        for (i, m) in self.equalities.iter().enumerate() {
            writeln!(f, "eq {i}")?;
            self.fmt_monomial(m, f)?;
        }
        for (name, (lo, hi)) in self.names.iter().zip(&self.bounds) {
            writeln!(f, "bound {name} {lo:e} {hi:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_normalizes_exponents() {
        let m = Monomial::new(2.0, [(Var(1), 1.0), (Var(0), 2.0), (Var(1), -1.0)]).unwrap();
        assert_eq!(m.exponents(), &[(Var(0), 2.0)]);
        assert_eq!(m.exponent(Var(1)), 0.0);
        assert_eq!(m.eval(&[3.0, 5.0]), 18.0);
    }

    #[test]
    fn rejects_nonpositive_coefficients() {
        assert!(Monomial::constant(0.0).is_err());
        assert!(Monomial::constant(-1.0).is_err());
        assert!(Monomial::new(1.0, [(Var(0), f64::NAN)]).is_err());
        assert!(Posynomial::new(vec![]).is_err());
    }

    #[test]
    fn algebra() {
        let x = Monomial::var(Var(0));
        let y = Monomial::var(Var(1));
        let p = Posynomial::from(x.clone()) + Posynomial::from(y.clone());
        let sq = &p * &p;
        assert_eq!(sq.len(), 4);
        let pt = [2.0, 3.0];
        assert!((sq.eval(&pt) - 25.0).abs() < 1e-12);
        assert!(((&x / &y).eval(&pt) - 2.0 / 3.0).abs() < 1e-15);
        let y_log = [2f64.ln(), 3f64.ln()];
        assert!((p.log_sum_exp(&y_log) - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dump_lists_every_monomial() {
        let mut gp = GpProblem::new();
        let x = gp.add_var("x");
        gp.minimize(Monomial::var(x));
        gp.add_le(Monomial::var(x).recip());
        let text = gp.to_string();
        assert!(text.contains("1e0 x^1"));
        assert!(text.contains("1e0 x^-1"));
        assert!(text.contains("bound x"));
    }
}
