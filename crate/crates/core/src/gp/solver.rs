//! Log-barrier interior-point method for geometric programs.
//!
//! With `y = log x` the objective and the inequalities become log-sum-exp
//! functions and the equalities become affine. Equalities are eliminated by
//! parameterizing their solution set as `y = y_p + Z v`, with `Z` a basis of
//! the null space of the exponent matrix. Bounds enter as affine inequalities.
//! A Phase I problem `min s s.t. F_i(y) ≤ s` supplies a strictly feasible
//! start when the given one is not.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gp::{GpProblem, Monomial, Posynomial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpOptions {
    /// Target for the duality gap (in log-objective units) and KKT residual.
    pub tol: f64,
    /// Newton steps allowed per centering step.
    pub max_newton: usize,
    /// Barrier parameter growth per outer step.
    pub mu: f64,
    pub t0: f64,
    pub max_outer: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_newton: 200,
            mu: 10.0,
            t0: 1.0,
            max_outer: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GpStatus {
    Optimal,
    MaxIter,
    /// No strictly feasible point; `x` is the most nearly feasible point found.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSolution {
    pub status: GpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
    /// Norm of the Lagrangian gradient in log space.
    pub kkt_residual: f64,
    /// `m / t` at exit: bound on the log-objective suboptimality.
    pub duality_gap: f64,
    pub max_violation: f64,
}

/// Solves `problem` starting from `x0`, or from the geometric midpoint of the
/// bounds when `x0` is `None`.
pub fn solve_gp(problem: &GpProblem, x0: Option<&[f64]>, opts: &GpOptions) -> Result<GpSolution> {
    problem.validate()?;
    let n = problem.num_vars();
    let y0: Vec<f64> = match x0 {
        Some(x) => {
            if x.len() != n {
                return Err(invalid("x0", format!("expected {n} entries, got {}", x.len())));
            }
            (0..n)
                .map(|j| {
                    let (lo, hi) = problem.bounds[j];
                    interior_log(x[j], lo, hi)
                })
                .collect()
        }
        None => problem
            .bounds
            .iter()
            .map(|&(lo, hi)| 0.5 * (lo.ln() + hi.ln()))
            .collect(),
    };

    let compiled = Compiled::new(problem);
    let finish = |y: &[f64], status, steps, kkt, gap| {
        let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        GpSolution {
            status,
            objective: problem.objective.eval(&x),
            max_violation: problem.max_violation(&x),
            x,
            newton_steps: steps,
            kkt_residual: kkt,
            duality_gap: gap,
        }
    };

    let Some(space) = Space::new(problem, &y0) else {
        // inconsistent equalities: report the least-squares point
        let y = least_squares_point(problem, &y0);
        return Ok(finish(&y, GpStatus::Infeasible, 0, f64::INFINITY, f64::INFINITY));
    };
    let mut steps = 0;

    let mut v = DVector::zeros(space.dim());
    let worst = compiled.worst_constraint(&space.y(&v));
    if worst >= 0.0 {
        match phase_one(&compiled, &space, worst, opts, &mut steps) {
            PhaseOne::Feasible(found) => v = found,
            PhaseOne::Infeasible(best) | PhaseOne::Stalled(best) => {
                let y = space.y(&best);
                return Ok(finish(y.as_slice(), GpStatus::Infeasible, steps, f64::INFINITY, f64::INFINITY));
            }
        }
    }

    let m = compiled.cons.len() as f64;
    let mut t = opts.t0;
    let barrier = Barrier::Two {
        compiled: &compiled,
        space: &space,
    };
    for _ in 0..opts.max_outer {
        let centered = center(&barrier, &mut v, t, opts, &mut steps, |_| false);
        let gap = m / t;
        if !centered {
            let kkt = kkt_residual(&compiled, &space, &v, t);
            return Ok(finish(space.y(&v).as_slice(), GpStatus::MaxIter, steps, kkt, gap));
        }
        if gap < opts.tol {
            let kkt = kkt_residual(&compiled, &space, &v, t);
            if kkt < opts.tol {
                return Ok(finish(space.y(&v).as_slice(), GpStatus::Optimal, steps, kkt, gap));
            }
            // nearly active constraints keep a barrier dual of order 1/t, so
            // the residual still shrinks as t grows
            if gap < opts.tol * 1e-4 {
                return Ok(finish(space.y(&v).as_slice(), GpStatus::MaxIter, steps, kkt, gap));
            }
        }
        t *= opts.mu;
    }
    let kkt = kkt_residual(&compiled, &space, &v, t);
    Ok(finish(space.y(&v).as_slice(), GpStatus::MaxIter, steps, kkt, m / t))
}

/// Moves `x` strictly inside `[lo, hi]` and takes its log.
fn interior_log(x: f64, lo: f64, hi: f64) -> f64 {
    let (llo, lhi) = (lo.ln(), hi.ln());
    if lhi - llo < 1e-12 {
        return 0.5 * (llo + lhi);
    }
    let margin = (1e-6 * (lhi - llo)).min(1e-3);
    let y = if x.is_finite() && x > 0.0 { x.ln() } else { 0.5 * (llo + lhi) };
    y.clamp(llo + margin, lhi - margin)
}

/// `log Σ_k exp(logc_k + a_k·y)` over the variables in `support`.
#[derive(Debug, Clone)]
struct Lse {
    logc: Vec<f64>,
    /// Per term: (local index into `support`, exponent).
    rows: Vec<Vec<(usize, f64)>>,
    support: Vec<usize>,
}

struct LseEval {
    value: f64,
    weights: Vec<f64>,
    grad: Vec<f64>,
}

impl Lse {
    fn from_posynomial(p: &Posynomial) -> Self {
        Self::from_terms(p.terms().iter().map(|m| {
            (
                m.coeff().ln(),
                m.exponents().iter().map(|&(v, a)| (v.0, a)).collect::<Vec<_>>(),
            )
        }))
    }

    fn from_terms(terms: impl Iterator<Item = (f64, Vec<(usize, f64)>)>) -> Self {
        let mut support = Vec::new();
        let mut logc = Vec::new();
        let mut rows = Vec::new();
        for (c, row) in terms {
            logc.push(c);
            rows.push(
                row.into_iter()
                    .map(|(j, a)| {
                        let local = support.iter().position(|&s| s == j).unwrap_or_else(|| {
                            support.push(j);
                            support.len() - 1
                        });
                        (local, a)
                    })
                    .collect(),
            );
        }
        Self { logc, rows, support }
    }

    fn exponents(&self, y: &[f64]) -> Vec<f64> {
        self.logc
            .iter()
            .zip(&self.rows)
            .map(|(c, row)| c + row.iter().map(|&(l, a)| a * y[self.support[l]]).sum::<f64>())
            .collect()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let z = self.exponents(y);
        if z.len() == 1 {
            return z[0];
        }
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + z.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
    }

    fn eval(&self, y: &[f64]) -> LseEval {
        let z = self.exponents(y);
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let mut grad = vec![0.0; self.support.len()];
        for (w, row) in weights.iter().zip(&self.rows) {
            for &(l, a) in row {
                grad[l] += w * a;
            }
        }
        LseEval {
            value: top + total.ln(),
            weights,
            grad,
        }
    }

    /// Adds `scale·∇²F + outer·∇F∇Fᵀ` into `h`.
    fn add_hessian(&self, e: &LseEval, scale: f64, outer: f64, h: &mut DMatrix<f64>) {
        let s = &self.support;
        if self.rows.len() > 1 && scale != 0.0 {
            for (w, row) in e.weights.iter().zip(&self.rows) {
                for &(l1, a1) in row {
                    for &(l2, a2) in row {
                        h[(s[l1], s[l2])] += scale * w * a1 * a2;
                    }
                }
            }
        }
        let single = self.rows.len() == 1;
        let c = if single { outer } else { outer - scale };
        if c != 0.0 {
            for (l1, g1) in e.grad.iter().enumerate() {
                for (l2, g2) in e.grad.iter().enumerate() {
                    h[(s[l1], s[l2])] += c * g1 * g2;
                }
            }
        }
    }
}

struct Compiled {
    n: usize,
    objective: Lse,
    /// Inequalities `F_i(y) ≤ 0`, bounds included.
    cons: Vec<Lse>,
}

impl Compiled {
    fn new(problem: &GpProblem) -> Self {
        let mut cons: Vec<Lse> = problem.inequalities.iter().map(Lse::from_posynomial).collect();
        for (j, &(lo, hi)) in problem.bounds.iter().enumerate() {
            if hi / lo < 1.0 + 1e-12 {
                continue; // pinned variables are fixed by the null-space step
            }
            cons.push(Lse::from_terms(std::iter::once((-hi.ln(), vec![(j, 1.0)]))));
            cons.push(Lse::from_terms(std::iter::once((lo.ln(), vec![(j, -1.0)]))));
        }
        Self {
            n: problem.num_vars(),
            objective: Lse::from_posynomial(&problem.objective),
            cons,
        }
    }

    fn worst_constraint(&self, y: &DVector<f64>) -> f64 {
        self.cons
            .iter()
            .map(|c| c.value(y.as_slice()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Affine parameterization `y = y_p + Z v` of the equality set.
struct Space {
    base: DVector<f64>,
    basis: Option<DMatrix<f64>>,
}

impl Space {
    fn new(problem: &GpProblem, y0: &[f64]) -> Option<Self> {
        let eqs = equality_system(problem);
        let y0 = DVector::from_column_slice(y0);
        let Some((a, b)) = eqs else {
            return Some(Self {
                base: y0,
                basis: None,
            });
        };
        let pinv = a.clone().pseudo_inverse(1e-12).ok()?;
        let base = &y0 - &pinv * (&a * &y0 - &b);
        let residual = (&a * &base - &b).amax();
        if residual > 1e-9 * (1.0 + b.amax()) {
            return None;
        }
        let n = y0.len();
        let eig = (a.transpose() * &a).symmetric_eigen();
        let top = eig.eigenvalues.amax().max(1.0);
        let null: Vec<usize> = (0..n)
            .filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * top)
            .collect();
        let mut z = DMatrix::zeros(n, null.len());
        for (c, &k) in null.iter().enumerate() {
            z.set_column(c, &eig.eigenvectors.column(k));
        }
        Some(Self {
            base,
            basis: Some(z),
        })
    }

    fn dim(&self) -> usize {
        self.basis.as_ref().map_or(self.base.len(), |z| z.ncols())
    }

    fn y(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            None => &self.base + v.rows(0, self.base.len()),
            Some(z) => &self.base + z * v.rows(0, z.ncols()),
        }
    }

    fn project_grad(&self, g: DVector<f64>) -> DVector<f64> {
        match &self.basis {
            None => g,
            Some(z) => z.transpose() * g,
        }
    }

    fn project_hess(&self, h: DMatrix<f64>) -> DMatrix<f64> {
        match &self.basis {
            None => h,
            Some(z) => z.transpose() * h * z,
        }
    }
}

/// Monomial equalities as `A y = b`, plus pinned bounds.
fn equality_system(problem: &GpProblem) -> Option<(DMatrix<f64>, DVector<f64>)> {
    let n = problem.num_vars();
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = problem
        .equalities
        .iter()
        .map(|m: &Monomial| {
            (
                m.exponents().iter().map(|&(v, a)| (v.0, a)).collect(),
                -m.coeff().ln(),
            )
        })
        .collect();
    for (j, &(lo, hi)) in problem.bounds.iter().enumerate() {
        if hi / lo < 1.0 + 1e-12 {
            rows.push((vec![(j, 1.0)], 0.5 * (lo.ln() + hi.ln())));
        }
    }
    if rows.is_empty() {
        return None;
    }
    let mut a = DMatrix::zeros(rows.len(), n);
    let mut b = DVector::zeros(rows.len());
    for (r, (row, rhs)) in rows.into_iter().enumerate() {
        for (j, e) in row {
            a[(r, j)] += e;
        }
        b[r] = rhs;
    }
    Some((a, b))
}

fn least_squares_point(problem: &GpProblem, y0: &[f64]) -> Vec<f64> {
    let y0 = DVector::from_column_slice(y0);
    match equality_system(problem) {
        Some((a, b)) => match a.clone().pseudo_inverse(1e-12) {
            Ok(pinv) => (&y0 - pinv * (&a * &y0 - b)).as_slice().to_vec(),
            Err(_) => y0.as_slice().to_vec(),
        },
        None => y0.as_slice().to_vec(),
    }
}

/// Barrier functions for the two phases. In Phase I the last coordinate of
/// `v` is the slack `s`.
enum Barrier<'a> {
    One {
        compiled: &'a Compiled,
        space: &'a Space,
    },
    Two {
        compiled: &'a Compiled,
        space: &'a Space,
    },
}

struct Local {
    value: f64,
    grad: DVector<f64>,
    hess: Option<DMatrix<f64>>,
}

impl Barrier<'_> {
    fn value(&self, v: &DVector<f64>, t: f64) -> Option<f64> {
        match *self {
            Barrier::Two { compiled, space } => {
                let y = space.y(v);
                let mut phi = t * compiled.objective.value(y.as_slice());
                for c in &compiled.cons {
                    let d = -c.value(y.as_slice());
                    if !(d > 0.0) {
                        return None;
                    }
                    phi -= d.ln();
                }
                phi.is_finite().then_some(phi)
            }
            Barrier::One { compiled, space } => {
                let s = v[v.len() - 1];
                let y = space.y(v);
                let mut phi = t * s;
                for c in &compiled.cons {
                    let d = s - c.value(y.as_slice());
                    if !(d > 0.0) {
                        return None;
                    }
                    phi -= d.ln();
                }
                phi.is_finite().then_some(phi)
            }
        }
    }

    fn eval(&self, v: &DVector<f64>, t: f64, with_hess: bool) -> Option<Local> {
        let (compiled, space, phase_one) = match *self {
            Barrier::One { compiled, space } => (compiled, space, true),
            Barrier::Two { compiled, space } => (compiled, space, false),
        };
        let n = compiled.n;
        let y = space.y(v);
        let y = y.as_slice();
        let s = if phase_one { v[v.len() - 1] } else { 0.0 };
        let mut gy = DVector::zeros(n);
        let mut hy = with_hess.then(|| DMatrix::zeros(n, n));
        // cross terms with s and its diagonal entry, Phase I only
        let mut gys = DVector::zeros(n);
        let mut hss = 0.0;
        let mut gs = t;
        let mut value = if phase_one { t * s } else { 0.0 };

        if !phase_one {
            let e = compiled.objective.eval(y);
            value += t * e.value;
            for (l, g) in e.grad.iter().enumerate() {
                gy[compiled.objective.support[l]] += t * g;
            }
            if let Some(h) = hy.as_mut() {
                compiled.objective.add_hessian(&e, t, 0.0, h);
            }
        }
        for c in &compiled.cons {
            let e = c.eval(y);
            let d = if phase_one { s - e.value } else { -e.value };
            if !(d > 0.0) {
                return None;
            }
            value -= d.ln();
            for (l, g) in e.grad.iter().enumerate() {
                let j = c.support[l];
                gy[j] += g / d;
                if phase_one {
                    gys[j] -= g / (d * d);
                }
            }
            if phase_one {
                gs -= 1.0 / d;
                hss += 1.0 / (d * d);
            }
            if let Some(h) = hy.as_mut() {
                c.add_hessian(&e, 1.0 / d, 1.0 / (d * d), h);
            }
        }
        if !value.is_finite() {
            return None;
        }

        let grad_v = space.project_grad(gy);
        let hess_v = hy.map(|h| space.project_hess(h));
        if !phase_one {
            return Some(Local {
                value,
                grad: grad_v,
                hess: hess_v,
            });
        }
        let k = grad_v.len();
        let mut grad = DVector::zeros(k + 1);
        grad.rows_mut(0, k).copy_from(&grad_v);
        grad[k] = gs;
        let hess = hess_v.map(|hv| {
            let cross = space.project_grad(gys.clone());
            let mut h = DMatrix::zeros(k + 1, k + 1);
            h.view_mut((0, 0), (k, k)).copy_from(&hv);
            h.view_mut((0, k), (k, 1)).copy_from(&cross);
            h.view_mut((k, 0), (1, k)).copy_from(&cross.transpose());
            h[(k, k)] = hss;
            h
        });
        Some(Local { value, grad, hess })
    }
}

/// KKT residual at the barrier iterate. The barrier multipliers
/// `1/(t·d_i)` are only used to pick the active set: near the boundary `d_i`
/// carries rounding error of order `eps·|y|`, which `1/d_i` amplifies. The
/// reported multipliers solve a least-squares stationarity problem on that
/// set instead, dropping any that come out negative.
fn kkt_residual(compiled: &Compiled, space: &Space, v: &DVector<f64>, t: f64) -> f64 {
    let n = compiled.n;
    let y = space.y(v);
    let y = y.as_slice();
    let dense = |lse: &Lse, e: &LseEval| {
        let mut g = DVector::zeros(n);
        for (l, gl) in e.grad.iter().enumerate() {
            g[lse.support[l]] += gl;
        }
        space.project_grad(g)
    };
    let obj = compiled.objective.eval(y);
    let g0 = dense(&compiled.objective, &obj);
    let evals: Vec<(f64, f64, DVector<f64>)> = compiled
        .cons
        .iter()
        .map(|c| {
            let e = c.eval(y);
            (e.value, 1.0 / (t * -e.value), dense(c, &e))
        })
        .collect();
    let top = evals.iter().map(|e| e.1).fold(0.0, f64::max);
    let mut active: Vec<usize> = (0..evals.len())
        .filter(|&i| evals[i].1 > 1e-4 * top.max(1e-300))
        .collect();
    let mut lambda = Vec::new();
    while !active.is_empty() {
        let jac = DMatrix::from_columns(&active.iter().map(|&i| evals[i].2.clone()).collect::<Vec<_>>());
        let sol = jac.svd(true, true).solve(&(-&g0), 1e-12);
        let Ok(sol) = sol else { break };
        if let Some(neg) = (0..active.len()).find(|&k| sol[k] < 0.0) {
            active.remove(neg);
            continue;
        }
        lambda = active.iter().copied().zip(sol.iter().copied()).collect();
        break;
    }
    let mut r = g0;
    let mut slack = 0.0f64;
    for &(i, l) in &lambda {
        r += l * &evals[i].2;
        slack = slack.max(l * evals[i].0.abs());
    }
    r.norm().max(slack)
}

/// Damped Newton on the barrier at parameter `t`. Returns false when the
/// step budget runs out. `stop` can end the centering early.
fn center(
    barrier: &Barrier<'_>,
    v: &mut DVector<f64>,
    t: f64,
    opts: &GpOptions,
    steps: &mut usize,
    stop: impl Fn(&DVector<f64>) -> bool,
) -> bool {
    const ALPHA: f64 = 0.01;
    const BETA: f64 = 0.5;
    for _ in 0..opts.max_newton {
        let Some(local) = barrier.eval(v, t, true) else {
            return false;
        };
        let hess = local.hess.expect("hessian requested");
        let Some(dv) = newton_direction(hess, &local.grad) else {
            return false;
        };
        let slope = local.grad.dot(&dv);
        // the decrement estimates the centering error, far below the gap m/t
        if -slope / 2.0 <= 1e-12 || !slope.is_finite() {
            return true;
        }
        if dv.amax() <= f64::EPSILON * (1.0 + v.amax()) {
            // the step no longer changes the iterate
            return true;
        }
        // inside the quadratic region the barrier value is too flat for
        // Armijo to resolve in floating point; take the pure Newton step
        if -slope / 2.0 < 1e-8 {
            let trial = &*v + &dv;
            if barrier.value(&trial, t).is_some() {
                *v = trial;
                *steps += 1;
                if stop(v) {
                    return true;
                }
                continue;
            }
        }
        let mut step = 1.0;
        loop {
            if step * dv.amax() <= f64::EPSILON * (1.0 + v.amax()) {
                // Armijo cannot resolve a move this small
                return true;
            }
            let trial = &*v + step * &dv;
            if let Some(phi) = barrier.value(&trial, t) {
                if phi <= local.value + ALPHA * step * slope {
                    *v = trial;
                    break;
                }
            }
            step *= BETA;
        }
        *steps += 1;
        if stop(v) {
            return true;
        }
    }
    false
}

fn newton_direction(mut hess: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = hess.diagonal().amax().max(1e-300);
    let mut shift = 0.0;
    for _ in 0..12 {
        if let Some(chol) = hess.clone().cholesky() {
            let dv = chol.solve(&(-grad));
            if dv.iter().all(|x| x.is_finite()) {
                return Some(dv);
            }
        }
        let next = if shift == 0.0 { 1e-12 * scale } else { shift * 100.0 };
        for i in 0..hess.nrows() {
            hess[(i, i)] += next - shift;
        }
        shift = next;
    }
    None
}

enum PhaseOne {
    Feasible(DVector<f64>),
    Infeasible(DVector<f64>),
    Stalled(DVector<f64>),
}

fn phase_one(
    compiled: &Compiled,
    space: &Space,
    worst: f64,
    opts: &GpOptions,
    steps: &mut usize,
) -> PhaseOne {
    let k = space.dim();
    let mut w = DVector::zeros(k + 1);
    w[k] = worst + 1.0;
    let barrier = Barrier::One { compiled, space };
    let m = compiled.cons.len() as f64;
    let strip = |w: &DVector<f64>| w.rows(0, k).into_owned();
    let mut t = opts.t0;
    for _ in 0..opts.max_outer {
        let centered = center(&barrier, &mut w, t, opts, steps, |w| w[k] < 0.0);
        if w[k] < 0.0 {
            return PhaseOne::Feasible(strip(&w));
        }
        if !centered {
            return PhaseOne::Stalled(strip(&w));
        }
        // s - m/t lower-bounds the optimal slack
        if w[k] - m / t > 0.0 || m / t < opts.tol {
            return PhaseOne::Infeasible(strip(&w));
        }
        t *= opts.mu;
    }
    PhaseOne::Stalled(strip(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Var;

    fn mono(c: f64, e: &[(Var, f64)]) -> Monomial {
        Monomial::new(c, e.iter().copied()).unwrap()
    }

    #[test]
    fn x_plus_inverse_x() {
        let mut gp = GpProblem::new();
        let x = gp.add_var("x");
        gp.minimize(Posynomial::new(vec![mono(1.0, &[(x, 1.0)]), mono(1.0, &[(x, -1.0)])]).unwrap());
        let sol = solve_gp(&gp, None, &GpOptions::default()).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "{}", sol.x[0]);
        assert!((sol.objective - 2.0).abs() < 1e-8);
    }

    #[test]
    fn box_volume() {
        // max xyz s.t. 2(xy + yz + xz) <= 6  →  x = y = z = 1
        let mut gp = GpProblem::new();
        let [x, y, z] = [gp.add_var("x"), gp.add_var("y"), gp.add_var("z")];
        gp.minimize(mono(1.0, &[(x, -1.0), (y, -1.0), (z, -1.0)]));
        gp.add_le(
            Posynomial::new(vec![
                mono(1.0 / 3.0, &[(x, 1.0), (y, 1.0)]),
                mono(1.0 / 3.0, &[(y, 1.0), (z, 1.0)]),
                mono(1.0 / 3.0, &[(x, 1.0), (z, 1.0)]),
            ])
            .unwrap(),
        );
        let sol = solve_gp(&gp, Some(&[0.1, 0.2, 0.3]), &GpOptions::default()).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        for v in &sol.x {
            assert!((v - 1.0).abs() < 1e-6, "{:?}", sol.x);
        }
        assert!(sol.max_violation < 1e-8);
    }

    #[test]
    fn equality_is_eliminated() {
        // min x + y s.t. xy = 4  →  x = y = 2
        let mut gp = GpProblem::new();
        let [x, y] = [gp.add_var("x"), gp.add_var("y")];
        gp.minimize(Posynomial::new(vec![Monomial::var(x), Monomial::var(y)]).unwrap());
        gp.add_eq(mono(0.25, &[(x, 1.0), (y, 1.0)]));
        let sol = solve_gp(&gp, Some(&[1.0, 1.0]), &GpOptions::default()).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        assert!((sol.x[0] - 2.0).abs() < 1e-6 && (sol.x[1] - 2.0).abs() < 1e-6, "{:?}", sol.x);
        assert!((sol.x[0] * sol.x[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn bound_becomes_active() {
        // min 1/x with x <= 5 as a bound
        let mut gp = GpProblem::new();
        let x = gp.add_bounded_var("x", 1e-3, 5.0).unwrap();
        gp.minimize(Monomial::var(x).recip());
        let sol = solve_gp(&gp, None, &GpOptions::default()).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        assert!((sol.x[0] - 5.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_is_reported() {
        // x >= 2 and x <= 1
        let mut gp = GpProblem::new();
        let x = gp.add_var("x");
        gp.minimize(Monomial::var(x));
        gp.add_le(mono(2.0, &[(x, -1.0)]));
        gp.add_le(Monomial::var(x));
        let sol = solve_gp(&gp, None, &GpOptions::default()).unwrap();
        assert_eq!(sol.status, GpStatus::Infeasible);
        // the most nearly feasible point balances the two violations
        assert!((sol.x[0] - 2f64.sqrt()).abs() < 1e-3, "{}", sol.x[0]);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut gp = GpProblem::new();
        let x = gp.add_var("x");
        gp.add_eq(Monomial::var(x));
        gp.add_eq(mono(0.5, &[(x, 1.0)]));
        let sol = solve_gp(&gp, None, &GpOptions::default()).unwrap();
        assert_eq!(sol.status, GpStatus::Infeasible);
    }

    #[test]
    fn rejects_unbounded_variable_reference() {
        let mut gp = GpProblem::new();
        gp.add_var("x");
        gp.minimize(Monomial::var(Var(3)));
        assert!(solve_gp(&gp, None, &GpOptions::default()).is_err());
    }
}
