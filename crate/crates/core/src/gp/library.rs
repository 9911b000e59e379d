//! Small GPs whose optima are known in closed form. Used by the tests, the
//! acceptance suite and the benches.

use crate::gp::{GpProblem, Monomial, Posynomial, Var};

pub struct KnownGp {
    pub name: &'static str,
    pub problem: GpProblem,
    pub optimum: f64,
    pub argmin: Vec<f64>,
}

fn mono(c: f64, e: &[(Var, f64)]) -> Monomial {
    Monomial::new(c, e.iter().copied()).expect("library coefficients are positive")
}

fn posy(terms: Vec<Monomial>) -> Posynomial {
    Posynomial::new(terms).expect("library posynomials are non-empty")
}

/// `min ax + by  s.t.  xy ≥ 1` with optimum `2√(ab)` at `x = √(b/a)`.
fn weighted_sum() -> KnownGp {
    let mut gp = GpProblem::new();
    let [x, y] = [gp.add_var("x"), gp.add_var("y")];
    gp.minimize(posy(vec![mono(2.0, &[(x, 1.0)]), mono(8.0, &[(y, 1.0)])]));
    gp.add_le(mono(1.0, &[(x, -1.0), (y, -1.0)]));
    KnownGp { name: "weighted-sum", problem: gp, optimum: 8.0, argmin: vec![2.0, 0.5] }
}

/// Largest box with wall area 100 and floor area 16: `w = d = 4`, `h = 6.25`.
fn box_design() -> KnownGp {
    let mut gp = GpProblem::new();
    let [h, w, d] = [gp.add_var("h"), gp.add_var("w"), gp.add_var("d")];
    gp.minimize(mono(1.0, &[(h, -1.0), (w, -1.0), (d, -1.0)]));
    gp.add_le(posy(vec![mono(0.02, &[(h, 1.0), (w, 1.0)]), mono(0.02, &[(h, 1.0), (d, 1.0)])]));
    gp.add_le(mono(1.0 / 16.0, &[(w, 1.0), (d, 1.0)]));
    KnownGp { name: "box-design", problem: gp, optimum: 0.01, argmin: vec![6.25, 4.0, 4.0] }
}

/// `min x + 2y + 4z  s.t.  xyz = 1`: every term equals 2 at the optimum.
fn product_equality() -> KnownGp {
    let mut gp = GpProblem::new();
    let [x, y, z] = [gp.add_var("x"), gp.add_var("y"), gp.add_var("z")];
    gp.minimize(posy(vec![mono(1.0, &[(x, 1.0)]), mono(2.0, &[(y, 1.0)]), mono(4.0, &[(z, 1.0)])]));
    gp.add_eq(mono(1.0, &[(x, 1.0), (y, 1.0), (z, 1.0)]));
    KnownGp { name: "product-equality", problem: gp, optimum: 6.0, argmin: vec![2.0, 1.0, 0.5] }
}

/// `max xy  s.t.  x²/8 + y²/2 ≤ 1`: `x = 2`, `y = 1`.
fn ellipse() -> KnownGp {
    let mut gp = GpProblem::new();
    let [x, y] = [gp.add_var("x"), gp.add_var("y")];
    gp.minimize(mono(1.0, &[(x, -1.0), (y, -1.0)]));
    gp.add_le(posy(vec![mono(0.125, &[(x, 2.0)]), mono(0.5, &[(y, 2.0)])]));
    KnownGp { name: "ellipse", problem: gp, optimum: 0.5, argmin: vec![2.0, 1.0] }
}

/// Unconstrained `x + y + z + 1/(xyz)`, minimized at all ones.
fn four_term_amgm() -> KnownGp {
    let mut gp = GpProblem::new();
    let [x, y, z] = [gp.add_var("x"), gp.add_var("y"), gp.add_var("z")];
    gp.minimize(posy(vec![
        Monomial::var(x),
        Monomial::var(y),
        Monomial::var(z),
        mono(1.0, &[(x, -1.0), (y, -1.0), (z, -1.0)]),
    ]));
    KnownGp { name: "four-term-amgm", problem: gp, optimum: 4.0, argmin: vec![1.0, 1.0, 1.0] }
}

/// `min 1/x + y  s.t.  x ≤ y/4` with a slack bound `y ≤ 16`. The constraint
/// is tight, leaving `4/y + y`, minimized at `y = 2`.
fn coupled_ratio() -> KnownGp {
    let mut gp = GpProblem::new();
    let x = gp.add_var("x");
    let y = gp.add_bounded_var("y", 1e-6, 16.0).expect("valid bounds");
    gp.minimize(posy(vec![mono(1.0, &[(x, -1.0)]), Monomial::var(y)]));
    gp.add_le(mono(4.0, &[(x, 1.0), (y, -1.0)]));
    KnownGp { name: "coupled-ratio", problem: gp, optimum: 4.0, argmin: vec![0.5, 2.0] }
}

/// `min 1/x` with `x ≤ 5` as a bound.
fn active_bound() -> KnownGp {
    let mut gp = GpProblem::new();
    let x = gp.add_bounded_var("x", 1e-3, 5.0).expect("valid bounds");
    gp.minimize(Monomial::var(x).recip());
    KnownGp { name: "active-bound", problem: gp, optimum: 0.2, argmin: vec![5.0] }
}

pub fn known_optimum_gps() -> Vec<KnownGp> {
    vec![
        weighted_sum(),
        box_design(),
        product_equality(),
        ellipse(),
        four_term_amgm(),
        coupled_ratio(),
        active_bound(),
    ]
}
