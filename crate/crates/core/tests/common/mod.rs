#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use poisson_corners::corners::ModelSpace;
use poisson_corners::expr::{ratio, Expr};
use poisson_corners::poisson::BivectorField;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    names
}

/// Dense polynomial: exponent vector -> integer-over-denominator coefficient.
pub type Dense = BTreeMap<Vec<u32>, (i64, i64)>;

fn monomial(exps: &[u32]) -> Expr {
    let factors: Vec<Expr> = exps
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0)
        .map(|(i, e)| if *e == 1 { Expr::var(i + 1) } else { Expr::var(i + 1).pow(*e as i64) })
        .collect();
    match factors.len() {
        0 => Expr::one(),
        1 => factors.into_iter().next().unwrap(),
        _ => Expr::Product(factors),
    }
}

/// Random polynomial in `vars` variables of total degree at most `degree`,
/// written as an unsimplified sum of scaled monomials.
pub fn random_poly(rng: &mut ChaCha8Rng, vars: usize, degree: u32, max_terms: usize) -> Expr {
    let terms = rng.gen_range(1..=max_terms);
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut exps = vec![0u32; vars];
        let mut left = rng.gen_range(0..=degree);
        while left > 0 {
            exps[rng.gen_range(0..vars)] += 1;
            left -= 1;
        }
        let c = rng.gen_range(-4..=4i64);
        let d = if rng.gen_bool(0.2) { rng.gen_range(2..=3i64) } else { 1 };
        out.push(Expr::constant(ratio(c, d)).mul(monomial(&exps)));
    }
    Expr::Sum(out)
}

/// Random polynomial, sometimes in factored or powered form.
pub fn random_shaped_poly(rng: &mut ChaCha8Rng, vars: usize, degree: u32) -> Expr {
    match rng.gen_range(0..3) {
        0 => random_poly(rng, vars, degree, 4),
        1 => random_poly(rng, vars, degree / 2, 3).mul(random_poly(rng, vars, degree - degree / 2, 3)),
        _ => random_poly(rng, vars, degree / 2, 2).pow(2),
    }
}

/// Antisymmetric bivector with random polynomial upper entries.
pub fn random_bivector(rng: &mut ChaCha8Rng, space: ModelSpace, degree: u32) -> BivectorField {
    let mut entries = Vec::new();
    for i in 1..=space.n {
        for j in i + 1..=space.n {
            if rng.gen_bool(0.8) {
                entries.push(((i, j), random_poly(rng, space.n, degree, 3)));
            }
        }
    }
    BivectorField::from_entries(space, &entries).unwrap()
}

/// Brute-force product of dense polynomials.
pub fn dense_mul(a: &Dense, b: &Dense) -> Dense {
    let mut out = Dense::new();
    for (ea, (na, da)) in a {
        for (eb, (nb, db)) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let (n, d) = out.get(&e).copied().unwrap_or((0, 1));
            // n/d + na*nb/(da*db)
            let (pn, pd) = (na * nb, da * db);
            let (sn, sd) = (n * pd + pn * d, d * pd);
            let g = gcd(sn.abs(), sd);
            out.insert(e, (sn / g.max(1), sd / g.max(1)));
        }
    }
    out.retain(|_, (n, _)| *n != 0);
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Renders a dense polynomial the way canonical forms print: total degree
/// descending, then exponents of `x1, x2, ...` descending.
pub fn dense_render(p: &Dense) -> String {
    if p.is_empty() {
        return "0".into();
    }
    let mut terms: Vec<(&Vec<u32>, &(i64, i64))> = p.iter().collect();
    terms.sort_by(|(a, _), (b, _)| {
        let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
        db.cmp(&da).then_with(|| b.cmp(a))
    });
    let mut out = String::new();
    for (k, (exps, (n, d))) in terms.into_iter().enumerate() {
        let negative = *n < 0;
        if k == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mono: Vec<String> = exps
            .iter()
            .enumerate()
            .filter(|(_, e)| **e > 0)
            .map(|(i, e)| if *e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
            .collect();
        let coef = if *d == 1 { n.abs().to_string() } else { format!("{}/{}", n.abs(), d) };
        match (mono.is_empty(), coef == "1") {
            (true, _) => out.push_str(&coef),
            (false, true) => out.push_str(&mono.join("*")),
            (false, false) => out.push_str(&format!("{coef}*{}", mono.join("*"))),
        }
    }
    out
}

pub fn dense(terms: &[(&[u32], i64)]) -> Dense {
    terms.iter().map(|(e, c)| (e.to_vec(), (*c, 1))).collect()
}

/// Central difference of `f` in coordinate `i`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}
