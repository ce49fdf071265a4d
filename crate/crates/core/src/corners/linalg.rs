//! Exact Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use crate::expr::Rational;

/// Reduced row echelon form of an augmented system.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub rows: Vec<Vec<Rational>>,
    pub pivots: Vec<usize>,
    pub consistent: bool,
}

/// Row-reduces `[a | b]`. `a` has `cols` columns; rows may be empty.
pub fn rref(a: &[Vec<Rational>], b: &[Rational], cols: usize) -> Echelon {
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in 0..=cols {
                    let delta = &factor * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let consistent = m[r..].iter().all(|row| row[cols].is_zero());
    m.truncate(r);
    Echelon { rows: m, pivots, consistent }
}

pub fn rank(a: &[Vec<Rational>]) -> usize {
    let cols = a.first().map(Vec::len).unwrap_or(0);
    let zeros = vec![Rational::zero(); a.len()];
    rref(a, &zeros, cols).pivots.len()
}

/// Inverse of a square matrix, if it is invertible.
pub fn invert(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let mut out = Vec::with_capacity(n);
    for col in 0..n {
        let e: Vec<Rational> = (0..n).map(|i| if i == col { Rational::one() } else { Rational::zero() }).collect();
        let ech = rref(a, &e, n);
        if ech.pivots.len() != n {
            return None;
        }
        out.push(ech.rows.iter().map(|r| r[n].clone()).collect::<Vec<_>>());
    }
    // `out` holds columns; transpose.
    Some((0..n).map(|i| (0..n).map(|j| out[j][i].clone()).collect()).collect())
}
