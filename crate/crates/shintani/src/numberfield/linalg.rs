//! Exact linear algebra over the rationals on small dense matrices.

use rug::Rational;
use std::cmp::Ordering;

pub type RatMatrix = Vec<Vec<Rational>>;

pub fn identity(n: usize) -> RatMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| Rational::from(u32::from(i == j))).collect())
        .collect()
}

pub fn transpose(a: &RatMatrix) -> RatMatrix {
    if a.is_empty() {
        return vec![];
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

pub fn mat_mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let m = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| {
                    let mut acc = Rational::new();
                    for (k, x) in row.iter().enumerate() {
                        if x.cmp0() != Ordering::Equal {
                            acc += Rational::from(x * &b[k][j]);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Row vector times matrix.
pub fn vec_mat(v: &[Rational], a: &RatMatrix) -> Vec<Rational> {
    let m = a.first().map_or(0, |r| r.len());
    (0..m)
        .map(|j| {
            let mut acc = Rational::new();
            for (k, x) in v.iter().enumerate() {
                if x.cmp0() != Ordering::Equal {
                    acc += Rational::from(x * &a[k][j]);
                }
            }
            acc
        })
        .collect()
}

/// Determinant by fraction-exact Gaussian elimination.
pub fn det(a: &RatMatrix) -> Rational {
    let n = a.len();
    let mut m = a.clone();
    let mut d = Rational::from(1);
    for c in 0..n {
        let p = match (c..n).find(|&r| m[r][c].cmp0() != Ordering::Equal) {
            Some(p) => p,
            None => return Rational::new(),
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let piv = m[c][c].clone();
        d *= &piv;
        for r in c + 1..n {
            if m[r][c].cmp0() == Ordering::Equal {
                continue;
            }
            let f = Rational::from(&m[r][c] / &piv);
            for k in c..n {
                let t = Rational::from(&f * &m[c][k]);
                m[r][k] -= t;
            }
        }
    }
    d
}

pub fn rank(a: &RatMatrix) -> usize {
    if a.is_empty() {
        return 0;
    }
    let mut m = a.clone();
    let (rows, cols) = (m.len(), m[0].len());
    let mut r = 0;
    for c in 0..cols {
        let p = match (r..rows).find(|&i| m[i][c].cmp0() != Ordering::Equal) {
            Some(p) => p,
            None => continue,
        };
        m.swap(p, r);
        let piv = m[r][c].clone();
        for i in r + 1..rows {
            if m[i][c].cmp0() == Ordering::Equal {
                continue;
            }
            let f = Rational::from(&m[i][c] / &piv);
            for k in c..cols {
                let t = Rational::from(&f * &m[r][k]);
                m[i][k] -= t;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Inverse of a square matrix, or `None` when singular.
pub fn inverse(a: &RatMatrix) -> Option<RatMatrix> {
    let n = a.len();
    let mut m: RatMatrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| Rational::from(u32::from(i == j))));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| m[r][c].cmp0() != Ordering::Equal)?;
        m.swap(p, c);
        let piv = m[c][c].clone();
        for k in 0..2 * n {
            m[c][k] /= &piv;
        }
        for r in 0..n {
            if r == c || m[r][c].cmp0() == Ordering::Equal {
                continue;
            }
            let f = m[r][c].clone();
            for k in 0..2 * n {
                let t = Rational::from(&f * &m[c][k]);
                m[r][k] -= t;
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Solve `x * A = b` for a row vector `x`; `None` when `A` is singular.
pub fn solve_left(a: &RatMatrix, b: &[Rational]) -> Option<Vec<Rational>> {
    let inv = inverse(a)?;
    Some(vec_mat(b, &inv))
}
