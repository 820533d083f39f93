//! Exact-arithmetic phase-1 simplex for equality-form feasibility.
//!
//! Decides `{ x >= 0 : A x = b }` with `b >= 0` over the rationals.
//! Minimizes the sum of artificial variables under Bland's rule (smallest
//! eligible index enters, ratio ties broken by smallest basic index), which
//! guarantees termination. On infeasibility the optimal dual `y` of the
//! phase-1 program is returned: it satisfies `y^T A <= 0` componentwise and
//! `y^T b > 0`.

#[cfg(test)]
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

#[cfg(test)]
pub fn rat(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub enum FeasibilityOutcome {
    /// A feasible point for the original variables.
    Feasible(Vec<Rat>),
    /// Farkas dual: `y^T A <= 0`, `y^T b > 0`.
    Infeasible(Vec<Rat>),
}

/// `columns[j]` lists the (row, coefficient) entries of variable `j`.
pub fn solve_feasibility(
    rows: usize,
    columns: &[Vec<(usize, Rat)>],
    b: &[Rat],
) -> FeasibilityOutcome {
    assert_eq!(b.len(), rows);
    assert!(b.iter().all(|v| !v.is_negative()), "b must be nonnegative");
    let n = columns.len();
    let total = n + rows; // original + artificial
    // dense tableau: rows x (total + 1), last column is the rhs
    let mut t: Vec<Vec<Rat>> = vec![vec![Rat::zero(); total + 1]; rows];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col {
            t[*i][j] = v.clone();
        }
    }
    for i in 0..rows {
        t[i][n + i] = Rat::one();
        t[i][total] = b[i].clone();
    }
    // objective row of reduced costs for min sum(artificials):
    // cbar_j = c_j - sum over rows of t[i][j]  (basis = artificials, c_B = 1)
    let mut obj: Vec<Rat> = vec![Rat::zero(); total + 1];
    for j in 0..=total {
        let mut s = Rat::zero();
        for row in t.iter() {
            s += &row[j];
        }
        let c_j = if (n..total).contains(&j) { Rat::one() } else { Rat::zero() };
        obj[j] = c_j - s;
    }
    let mut basis: Vec<usize> = (n..total).collect();

    loop {
        // Bland: smallest index with negative reduced cost
        let entering = (0..total).find(|&j| obj[j].is_negative());
        let Some(e) = entering else { break };
        // ratio test
        let mut leave: Option<usize> = None;
        for i in 0..rows {
            if t[i][e].is_positive() {
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let cur = &t[l][total] / &t[l][e];
                        let cand = &t[i][total] / &t[i][e];
                        cand < cur || (cand == cur && basis[i] < basis[l])
                    }
                };
                if better {
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            // unbounded cannot happen for phase 1 (objective bounded below by 0)
            unreachable!("phase-1 simplex is never unbounded");
        };
        pivot(&mut t, &mut obj, l, e);
        basis[l] = e;
    }

    // optimal value = -obj[rhs]
    let value = -obj[total].clone();
    if value.is_zero() {
        let mut x = vec![Rat::zero(); n];
        for (i, &bv) in basis.iter().enumerate() {
            if bv < n {
                x[bv] = t[i][total].clone();
            } else {
                debug_assert!(t[i][total].is_zero(), "artificial basic at nonzero value");
            }
        }
        FeasibilityOutcome::Feasible(x)
    } else {
        // y_i = 1 - cbar_{artificial i}
        let y: Vec<Rat> = (0..rows).map(|i| Rat::one() - obj[n + i].clone()).collect();
        debug_assert!(verify_farkas(columns, b, &y));
        FeasibilityOutcome::Infeasible(y)
    }
}

fn pivot(t: &mut [Vec<Rat>], obj: &mut [Rat], l: usize, e: usize) {
    let p = t[l][e].clone();
    for v in t[l].iter_mut() {
        *v /= &p;
    }
    let pivot_row = t[l].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == l || row[e].is_zero() {
            continue;
        }
        let f = row[e].clone();
        for (v, pv) in row.iter_mut().zip(&pivot_row) {
            *v -= &f * pv;
        }
    }
    if !obj[e].is_zero() {
        let f = obj[e].clone();
        for (v, pv) in obj.iter_mut().zip(&pivot_row) {
            *v -= &f * pv;
        }
    }
}

/// Checks `y^T A <= 0` for every column and `y^T b > 0`.
pub fn verify_farkas(columns: &[Vec<(usize, Rat)>], b: &[Rat], y: &[Rat]) -> bool {
    for col in columns {
        let mut s = Rat::zero();
        for (i, v) in col {
            s += &y[*i] * v;
        }
        if s.is_positive() {
            return false;
        }
    }
    let mut rhs = Rat::zero();
    for (yi, bi) in y.iter().zip(b) {
        rhs += yi * bi;
    }
    rhs.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_system() {
        // x1 + x2 = 2, x2 + x3 = 1
        let cols = vec![
            vec![(0, rat(1))],
            vec![(0, rat(1)), (1, rat(1))],
            vec![(1, rat(1))],
        ];
        match solve_feasibility(2, &cols, &[rat(2), rat(1)]) {
            FeasibilityOutcome::Feasible(x) => {
                assert_eq!(&x[0] + &x[1], rat(2));
                assert_eq!(&x[1] + &x[2], rat(1));
                assert!(x.iter().all(|v| !v.is_negative()));
            }
            _ => panic!("expected feasible"),
        }
    }

    #[test]
    fn infeasible_system_yields_farkas() {
        // x1 = 1, x1 = 2 simultaneously
        let cols = vec![vec![(0, rat(1)), (1, rat(1))]];
        match solve_feasibility(2, &cols, &[rat(1), rat(2)]) {
            FeasibilityOutcome::Infeasible(y) => {
                assert!(verify_farkas(&cols, &[rat(1), rat(2)], &y));
            }
            _ => panic!("expected infeasible"),
        }
    }

    #[test]
    fn empty_column_set_with_demand_is_infeasible() {
        let cols: Vec<Vec<(usize, Rat)>> = Vec::new();
        match solve_feasibility(1, &cols, &[rat(1)]) {
            FeasibilityOutcome::Infeasible(y) => {
                assert!(verify_farkas(&cols, &[rat(1)], &y));
            }
            _ => panic!("expected infeasible"),
        }
    }
}
