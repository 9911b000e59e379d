//! The complementary GP and its condensation into a standard GP.

use serde::{Deserialize, Serialize};

use crate::assoc::IspSpec;
use crate::error::{domain, invalid, Error, Result};
use crate::gp::{monomial_approx, GpProblem, Monomial, Posynomial, Var, DEFAULT_LOWER, DEFAULT_UPPER};
use crate::scenario::RateMatrix;
use crate::timing::TimingConstants;

/// A usable (STA, AP) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub sta: usize,
    pub ap: usize,
    pub rate_mbps: f64,
    /// Rate relative to the fastest link.
    pub rate: f64,
    /// Index into the per-AP blocks.
    pub block: usize,
    pub isp: usize,
}

/// Which objective a condensed GP carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Phase {
    /// Minimize `x0`, i.e. maximize total throughput.
    Throughput,
    /// Maximize a common scale `σ ≤ cap` on every airtime target.
    Scale { cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintCounts {
    pub c11: usize,
    pub c12: usize,
    pub c13: usize,
    pub c14: usize,
    pub c15: usize,
    pub c16: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cgp {
    pub links: Vec<Link>,
    /// Links of each AP that has any.
    pub blocks: Vec<Vec<usize>>,
    pub block_ap: Vec<usize>,
    /// Links of each ISP, and its target.
    pub isp_links: Vec<Vec<usize>>,
    pub eta: Vec<f64>,
    pub excluded_stas: Vec<usize>,
    pub big_m: f64,
    pub n_stas: usize,
    pub n_aps: usize,
    pub t: f64,
    pub t_prime: f64,
    pub frozen: f64,
}

/// Left side of the bound constraint, `(u x + (1+N) x) / (u + N u² x)`;
/// at most 1 exactly when `x/(1+x) ≤ τ̄(1 − u)`.
pub fn c14_lhs(u: f64, x: f64, n: f64) -> f64 {
    (u * x + (1.0 + n) * x) / (u + n * u * u * x)
}

/// Sets up variables and constraint structure for `rates` and `isps`.
pub fn build_cgp(
    rates: &RateMatrix,
    isps: &[IspSpec],
    timing: &TimingConstants,
    m_factor: f64,
) -> Result<Cgp> {
    let (n, k) = (rates.n_stas(), rates.n_aps());
    let mut owner = vec![None; n];
    for (pos, isp) in isps.iter().enumerate() {
        if isp.id != pos {
            return Err(invalid("isps", "ids must be 0..K in order"));
        }
        if !(isp.eta.is_finite() && isp.eta >= 0.0) {
            return Err(domain("eta", isp.eta, "[0, ∞)"));
        }
        for &i in &isp.members {
            if i >= n {
                return Err(invalid("isps", format!("STA {i} does not exist")));
            }
            if owner[i].replace(pos).is_some() {
                return Err(invalid("isps", format!("STA {i} belongs to two ISPs")));
            }
        }
    }
    if let Some(i) = owner.iter().position(|o| o.is_none()) {
        return Err(invalid("isps", format!("STA {i} belongs to no ISP")));
    }
    if !(m_factor.is_finite() && m_factor > 1.0) {
        return Err(domain("m_factor", m_factor, "(1, ∞)"));
    }

    let fastest = rates.rate_mbps.iter().flatten().copied().fold(0.0, f64::max);
    let mut links = Vec::new();
    let mut blocks = Vec::new();
    let mut block_ap = Vec::new();
    for a in 0..k {
        let here: Vec<usize> = (0..n).filter(|&i| rates.usable(i, a)).collect();
        if here.is_empty() {
            continue;
        }
        let b = blocks.len();
        let mut ids = Vec::new();
        for i in here {
            ids.push(links.len());
            links.push(Link {
                sta: i,
                ap: a,
                rate_mbps: rates.rate(i, a),
                rate: rates.rate(i, a) / fastest,
                block: b,
                isp: owner[i].expect("checked above"),
            });
        }
        blocks.push(ids);
        block_ap.push(a);
    }
    if links.is_empty() {
        return Err(Error::Infeasible("no STA has a usable link".into()));
    }
    let isp_links: Vec<Vec<usize>> = (0..isps.len())
        .map(|kk| (0..links.len()).filter(|&l| links[l].isp == kk).collect())
        .collect();
    for (isp, ls) in isps.iter().zip(&isp_links) {
        if ls.is_empty() && isp.eta > 0.0 {
            return Err(Error::Infeasible(format!(
                "ISP {} has airtime target {} but no usable link",
                isp.id, isp.eta
            )));
        }
    }
    let big_m = m_factor * links.iter().map(|l| l.rate * timing.t).sum::<f64>();
    Ok(Cgp {
        links,
        blocks,
        block_ap,
        isp_links,
        eta: isps.iter().map(|k| k.eta).collect(),
        excluded_stas: rates.excluded_stas(),
        big_m,
        n_stas: n,
        n_aps: k,
        t: timing.t,
        t_prime: timing.t_prime,
        frozen: timing.frozen_slots as f64,
    })
}

fn mono(c: f64, e: &[(Var, f64)]) -> Monomial {
    Monomial::new(c, e.iter().copied()).expect("coefficients are positive")
}

fn posy(terms: Vec<Monomial>) -> Posynomial {
    Posynomial::new(terms).expect("at least one term")
}

impl Cgp {
    pub fn counts(&self) -> ConstraintCounts {
        let l = self.links.len();
        ConstraintCounts {
            c11: 1,
            c12: self.blocks.len(),
            c13: self.isp_links.iter().filter(|ls| !ls.is_empty()).count(),
            c14: l,
            c15: l,
            c16: l,
        }
    }

    fn x_var(&self, l: usize) -> Var {
        Var(3 * l)
    }

    fn t_var(&self, l: usize) -> Var {
        Var(3 * l + 1)
    }

    fn u_var(&self, l: usize) -> Var {
        Var(3 * l + 2)
    }

    fn y_var(&self, b: usize) -> Var {
        Var(3 * self.links.len() + b)
    }

    fn x0_var(&self) -> Var {
        Var(3 * self.links.len() + self.blocks.len())
    }

    fn sigma_var(&self) -> Var {
        Var(3 * self.links.len() + self.blocks.len() + 1)
    }

    /// `Π_{l ∈ b} (1 + x_l)` per block.
    fn growth(&self, x: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|ls| ls.iter().map(|&l| 1.0 + x[l]).product())
            .collect()
    }

    /// Total throughput in Mbps.
    pub fn throughput_mbps(&self, x: &[f64]) -> f64 {
        let g = self.growth(x);
        self.links
            .iter()
            .enumerate()
            .map(|(l, link)| x[l] * link.rate_mbps * self.t / (g[link.block] - self.t_prime))
            .sum()
    }

    pub fn isp_airtime(&self, x: &[f64]) -> Vec<f64> {
        let g = self.growth(x);
        self.isp_links
            .iter()
            .map(|ls| {
                ls.iter()
                    .map(|&l| {
                        let b = self.links[l].block;
                        x[l] / (1.0 + x[l]) * g[b] / (g[b] - self.t_prime)
                    })
                    .sum()
            })
            .collect()
    }

    /// `min_k airtime_k / η_k` over ISPs with a positive target.
    pub fn target_fraction(&self, x: &[f64]) -> f64 {
        self.isp_airtime(x)
            .iter()
            .zip(&self.eta)
            .filter(|(_, &eta)| eta > 0.0)
            .map(|(air, eta)| air / eta)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn phase_value(&self, x: &[f64], phase: Phase) -> f64 {
        match phase {
            Phase::Throughput => self.throughput_mbps(x),
            Phase::Scale { cap } => self.target_fraction(x).min(cap),
        }
    }

    pub fn extract_x(&self, values: &[f64]) -> Vec<f64> {
        (0..self.links.len()).map(|l| values[self.x_var(l).0]).collect()
    }

    /// Link values spread into a `[sta][ap]` matrix.
    pub fn to_matrix(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n_aps]; self.n_stas];
        for (l, link) in self.links.iter().enumerate() {
            m[link.sta][link.ap] = x[l];
        }
        m
    }

    /// Every auxiliary variable at its exact value for `x`.
    fn full_point(&self, x: &[f64], phase: Phase) -> Vec<f64> {
        let g = self.growth(x);
        let mut v = vec![0.0; 3 * self.links.len() + self.blocks.len() + 2];
        for (l, link) in self.links.iter().enumerate() {
            v[self.x_var(l).0] = x[l];
            v[self.t_var(l).0] = 1.0 + x[l];
            v[self.u_var(l).0] = (1.0 + x[l]) / g[link.block];
        }
        for b in 0..self.blocks.len() {
            v[self.y_var(b).0] = g[b] - self.t_prime;
        }
        let normalized: f64 = self
            .links
            .iter()
            .enumerate()
            .map(|(l, link)| x[l] * link.rate * self.t / (g[link.block] - self.t_prime))
            .sum();
        v[self.x0_var().0] = self.big_m - normalized;
        v[self.sigma_var().0] = match phase {
            Phase::Throughput => 1.0,
            Phase::Scale { cap } => (0.5 * self.target_fraction(x)).min(0.5 * cap).max(DEFAULT_LOWER * 10.0),
        };
        v
    }

    /// Standard GP obtained by condensing every denominator at `x`, with
    /// `x` confined to `[x/trust, x·trust]`. Also returns the expansion
    /// point as a start.
    pub fn condensed(&self, x: &[f64], phase: Phase, trust: f64) -> Result<(GpProblem, Vec<f64>)> {
        let at = self.full_point(x, phase);
        let mut gp = GpProblem::new();
        for (l, link) in self.links.iter().enumerate() {
            let (s, a) = (link.sta, link.ap);
            let lo = (x[l] / trust).max(DEFAULT_LOWER);
            let hi = (x[l] * trust).min(DEFAULT_UPPER);
            gp.add_bounded_var(format!("x[{s},{a}]"), lo, hi)?;
            gp.add_bounded_var(format!("t[{s},{a}]"), 1.0, DEFAULT_UPPER)?;
            gp.add_bounded_var(format!("u[{s},{a}]"), DEFAULT_LOWER, 1.0)?;
        }
        for &a in &self.block_ap {
            gp.add_var(format!("y[{a}]"));
        }
        let x0 = gp.add_var("x0");
        // the variable of the other phase stays in the layout, unreferenced
        let sigma = match phase {
            Phase::Throughput => gp.add_var("sigma"),
            Phase::Scale { cap } => gp.add_bounded_var("sigma", DEFAULT_LOWER, cap.min(DEFAULT_UPPER))?,
        };
        let tc = self.t;
        let tp = self.t_prime;
        let n = self.frozen;

        match phase {
            Phase::Throughput => {
                gp.minimize(Monomial::var(x0));
                // C11: M / (x0 + Σ x r t / y) ≤ 1
                let mut terms = vec![Monomial::var(x0)];
                for (l, link) in self.links.iter().enumerate() {
                    terms.push(mono(link.rate * tc, &[(self.x_var(l), 1.0), (self.y_var(link.block), -1.0)]));
                }
                let den = monomial_approx(&posy(terms), &at)?;
                gp.add_le(&mono(self.big_m, &[]) / &den);
            }
            Phase::Scale { .. } => gp.minimize(Monomial::var(sigma).recip()),
        }

        // C12: Π t / (t' + y) ≤ 1
        for (b, ls) in self.blocks.iter().enumerate() {
            let num = mono(1.0, &ls.iter().map(|&l| (self.t_var(l), 1.0)).collect::<Vec<_>>());
            let den = monomial_approx(
                &posy(vec![mono(tp, &[]), Monomial::var(self.y_var(b))]),
                &at,
            )?;
            gp.add_le(&num / &den);
        }

        // C13: (η σ + 1) / (1 + Σ (x/t + t' x/(t y))) ≤ 1
        for (kk, ls) in self.isp_links.iter().enumerate() {
            if ls.is_empty() {
                continue;
            }
            let mut terms = vec![mono(1.0, &[])];
            for &l in ls {
                let (xv, tv, yv) = (self.x_var(l), self.t_var(l), self.y_var(self.links[l].block));
                terms.push(mono(1.0, &[(xv, 1.0), (tv, -1.0)]));
                terms.push(mono(tp, &[(xv, 1.0), (tv, -1.0), (yv, -1.0)]));
            }
            let den = monomial_approx(&posy(terms), &at)?.recip();
            let eta = self.eta[kk];
            let num = match phase {
                Phase::Scale { .. } if eta > 0.0 => {
                    posy(vec![mono(eta, &[(sigma, 1.0)]), mono(1.0, &[])])
                }
                _ => posy(vec![mono(eta + 1.0, &[])]),
            };
            gp.add_le(num.mul_monomial(&den));
        }

        for (l, link) in self.links.iter().enumerate() {
            let (xv, tv, uv) = (self.x_var(l), self.t_var(l), self.u_var(l));
            // C14: (u x + (1+N) x) / (u + N u² x) ≤ 1
            let num = posy(vec![mono(1.0, &[(uv, 1.0), (xv, 1.0)]), mono(1.0 + n, &[(xv, 1.0)])]);
            let den = monomial_approx(
                &posy(vec![Monomial::var(uv), mono(n, &[(uv, 2.0), (xv, 1.0)])]),
                &at,
            )?;
            gp.add_le(num.mul_monomial(&den.recip()));
            // C15: u Π_{others} t ≤ 1
            let mut exps = vec![(uv, 1.0)];
            exps.extend(
                self.blocks[link.block]
                    .iter()
                    .filter(|&&o| o != l)
                    .map(|&o| (self.t_var(o), 1.0)),
            );
            gp.add_le(mono(1.0, &exps));
            // C16: (1 + x) / t ≤ 1
            gp.add_le(posy(vec![mono(1.0, &[(xv, 1.0), (tv, -1.0)]), mono(1.0, &[(tv, -1.0)])]));
        }
        Ok((gp, at))
    }
}
