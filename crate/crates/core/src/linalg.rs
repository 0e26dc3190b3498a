//! Small dense linear algebra over a generic scalar: elimination, null
//! spaces and equality-form linear programs solved by vertex enumeration.
//!
//! The same routines run over exact rationals (used for every certificate)
//! and over `f32`/`f64` (used only as a cross-check).

use std::fmt::Debug;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, Zero};

/// Field-like scalar the routines in this module are generic over.
pub trait Scalar: Clone + PartialOrd + Debug + Num + Signed + FromPrimitive {
    /// Whether the value should be treated as zero.
    fn is_negligible(&self) -> bool;
}

impl Scalar for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-9
    }
}

impl Scalar for f32 {
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-4
    }
}

impl<T> Scalar for Ratio<T>
where
    T: Clone + Integer + Signed + Debug + FromPrimitive,
    Ratio<T>: FromPrimitive,
{
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

pub fn scalar<T: Scalar>(v: i64) -> T {
    T::from_i64(v).expect("representable")
}

/// Reduces `m` to reduced row echelon form in place and returns the pivot
/// columns.
pub fn rref<T: Scalar>(m: &mut [Vec<T>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // Largest magnitude pivot; for exact types any nonzero entry works.
        let Some(piv) = (r..rows)
            .filter(|&i| !m[i][c].is_negligible())
            .max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap())
        else {
            continue;
        };
        m.swap(r, piv);
        let pv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() / pv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_negligible() {
                let f = m[i][c].clone();
                let pivot_row = m[r].clone();
                for (x, pv) in m[i].iter_mut().zip(pivot_row) {
                    *x = x.clone() - f.clone() * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Solves the square system `a·x = b`; `None` if `a` is singular.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = a.len();
    let mut aug: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n].clone()).collect())
}

/// A basis of `{x : rows·x = 0}`.
pub fn null_space<T: Scalar>(rows: &[Vec<T>], cols: usize) -> Vec<Vec<T>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); cols];
            v[f] = T::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Integer basis of the null space of an integer matrix: every vector is
/// primitive (gcd 1) with its first nonzero entry positive.
pub fn integer_null_space(rows: &[Vec<i64>], cols: usize) -> Vec<Vec<i64>> {
    let exact: Vec<Vec<Ratio<i128>>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| Ratio::from_integer(x as i128)).collect())
        .collect();
    null_space(&exact, cols)
        .into_iter()
        .map(|v| {
            let lcm = v.iter().fold(1i128, |acc, x| acc.lcm(x.denom()));
            let ints: Vec<i128> = v.iter().map(|x| (x * lcm).to_integer()).collect();
            let g = ints.iter().fold(0i128, |acc, &x| acc.gcd(&x));
            let sign = match ints.iter().find(|&&x| x != 0) {
                Some(&x) if x < 0 => -1,
                _ => 1,
            };
            ints.iter().map(|&x| (sign * x / g) as i64).collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// An optimal vertex of an [`EqualityLp`].
#[derive(Clone, Debug, PartialEq)]
pub struct LpOptimum<T> {
    pub value: T,
    pub point: Vec<T>,
    pub basis: Vec<usize>,
}

/// `{x ≥ 0 : A·x = b}`, assumed bounded.
#[derive(Clone, Debug)]
pub struct EqualityLp<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    vars: usize,
}

impl<T: Scalar> EqualityLp<T> {
    pub fn new(vars: usize) -> Self {
        EqualityLp {
            rows: Vec::new(),
            rhs: Vec::new(),
            vars,
        }
    }

    pub fn constraint(mut self, coeffs: Vec<T>, rhs: T) -> Self {
        assert_eq!(coeffs.len(), self.vars);
        self.rows.push(coeffs);
        self.rhs.push(rhs);
        self
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    /// Optimizes `objective·x` by enumerating basic feasible solutions.
    /// Returns `None` when the system has no nonnegative solution.
    pub fn optimize(&self, objective: &[T], sense: Sense) -> Option<LpOptimum<T>> {
        // Drop dependent equations; an inconsistent system has no vertex.
        let mut aug: Vec<Vec<T>> = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| {
                let mut v = r.clone();
                v.push(b.clone());
                v
            })
            .collect();
        let pivots = rref(&mut aug);
        if pivots.contains(&self.vars) {
            return None;
        }
        let rank = pivots.len();
        let a: Vec<Vec<T>> = aug[..rank]
            .iter()
            .map(|r| r[..self.vars].to_vec())
            .collect();
        let b: Vec<T> = aug[..rank].iter().map(|r| r[self.vars].clone()).collect();

        let mut best: Option<LpOptimum<T>> = None;
        for basis in combinations(self.vars, rank) {
            let sub: Vec<Vec<T>> = a
                .iter()
                .map(|row| basis.iter().map(|&j| row[j].clone()).collect())
                .collect();
            let Some(xb) = solve(&sub, &b) else { continue };
            if xb.iter().any(|x| x < &T::zero() && !x.is_negligible()) {
                continue;
            }
            let mut point = vec![T::zero(); self.vars];
            for (&j, x) in basis.iter().zip(xb) {
                point[j] = x;
            }
            let value = objective
                .iter()
                .zip(&point)
                .fold(T::zero(), |acc, (c, x)| acc + c.clone() * x.clone());
            let better = match &best {
                None => true,
                Some(cur) => match sense {
                    Sense::Minimize => value < cur.value,
                    Sense::Maximize => value > cur.value,
                },
            };
            if better {
                best = Some(LpOptimum {
                    value,
                    point,
                    basis,
                });
            }
        }
        best
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let next = {
            let c = cur.as_mut().unwrap();
            let mut i = k;
            loop {
                if i == 0 {
                    break None;
                }
                i -= 1;
                if c[i] < n - k + i {
                    c[i] += 1;
                    for j in i + 1..k {
                        c[j] = c[j - 1] + 1;
                    }
                    break Some(());
                }
            }
        };
        if next.is_none() {
            cur = None;
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn combinations_enumerate_all() {
        let all: Vec<_> = combinations(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(combinations(3, 0).count(), 1);
        assert_eq!(combinations(2, 3).count(), 0);
    }

    #[test]
    fn solve_exact_and_float() {
        let a = vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]];
        let x = solve(&a, &[q(3, 1), q(5, 1)]).unwrap();
        assert_eq!(x, vec![q(4, 5), q(7, 5)]);
        let af: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let xf = solve(&af, &[3.0, 5.0]).unwrap();
        assert!((xf[0] - 0.8).abs() < 1e-12 && (xf[1] - 1.4).abs() < 1e-12);
        let singular = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        assert!(solve(&singular, &[q(1, 1), q(2, 1)]).is_none());
    }

    #[test]
    fn integer_null_space_examples() {
        // Rows of multiplicities over sizes (16, 15, 14).
        let ns = integer_null_space(&[vec![5, 0, 1], vec![4, 2, 0]], 3);
        assert_eq!(ns, vec![vec![1, -2, -5]]);
        let ns = integer_null_space(&[vec![5, 1]], 2);
        assert_eq!(ns, vec![vec![1, -5]]);
        assert!(integer_null_space(&[vec![1, 0], vec![0, 1]], 2).is_empty());
        assert_eq!(integer_null_space(&[vec![1, 1, 1]], 3).len(), 2);
    }

    #[test]
    fn lp_vertex_enumeration() {
        // max x0 + x1 s.t. x0 + 2 x1 + x2 = 4, x >= 0  ->  x0 = 4.
        let lp = EqualityLp::new(3).constraint(vec![q(1, 1), q(2, 1), q(1, 1)], q(4, 1));
        let best = lp
            .optimize(&[q(1, 1), q(1, 1), q(0, 1)], Sense::Maximize)
            .unwrap();
        assert_eq!(best.value, q(4, 1));
        let worst = lp
            .optimize(&[q(1, 1), q(1, 1), q(0, 1)], Sense::Minimize)
            .unwrap();
        assert_eq!(worst.value, q(0, 1));
        let infeasible = EqualityLp::new(2).constraint(vec![q(1, 1), q(1, 1)], q(-1, 1));
        assert!(infeasible
            .optimize(&[q(1, 1), q(0, 1)], Sense::Maximize)
            .is_none());
        let inconsistent = EqualityLp::new(2)
            .constraint(vec![q(1, 1), q(1, 1)], q(1, 1))
            .constraint(vec![q(2, 1), q(2, 1)], q(3, 1));
        assert!(inconsistent
            .optimize(&[q(1, 1), q(0, 1)], Sense::Maximize)
            .is_none());
    }
}
