//! Exact Gaussian elimination over the rationals.

use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::Zero;

/// Incremental row-echelon basis of a set of vectors of equal length.
#[derive(Clone, Debug, Default)]
pub struct Basis {
    /// Reduced vectors with their pivot column.
    rows: Vec<(usize, Vec<BigRational>)>,
}

impl Basis {
    pub fn new() -> Self {
        Basis::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[BigRational]) -> Vec<BigRational> {
        let mut v = v.to_vec();
        for (p, row) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let c = v[*p].clone() / row[*p].clone();
            for (a, b) in v.iter_mut().zip(row) {
                if !b.is_zero() {
                    *a -= &c * b;
                }
            }
        }
        v
    }

    /// Whether `v` lies in the span.
    pub fn contains(&self, v: &[BigRational]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds `v` if it is independent of the basis; reports whether it was.
    pub fn insert(&mut self, v: &[BigRational]) -> bool {
        let r = self.reduce(v);
        match r.iter().position(|a| !a.is_zero()) {
            Some(p) => {
                self.rows.push((p, r));
                true
            }
            None => false,
        }
    }
}

/// Solves `A x = b` for `A` given by columns. Returns a solution with free
/// variables set to zero, or `None` if the system is inconsistent.
pub fn solve(columns: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = columns.len();
    let m = b.len();
    // Augmented rows.
    let mut a: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let mut row: Vec<BigRational> = columns.iter().map(|c| c[i].clone()).collect();
            row.push(b[i].clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = BigRational::from_integer(1.into()) / a[r][c].clone();
        for v in a[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..m {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m {
            break;
        }
    }
    if a[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut x = alloc::vec![BigRational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = a[i][n].clone();
    }
    Some(x)
}
