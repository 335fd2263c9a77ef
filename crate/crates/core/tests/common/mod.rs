//! Exhaustive sign/support LASSO oracle shared by the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2};

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..p {
            cur.push(j);
            rec(j + 1, p, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, p, k, &mut Vec::new(), &mut out);
    out
}

/// Enumerates supports by size and sign patterns within each, returning the
/// first candidate that satisfies every optimality condition. The LASSO is
/// convex, so that candidate is the minimizer.
pub fn brute_force_lasso(m: &Array2<f64>, y: &Array1<f64>, lambda: f64) -> Vec<f64> {
    let (n, p) = m.dim();
    let col = |j: usize| m.column(j).to_owned();
    let corr: Vec<f64> = (0..p).map(|j| col(j).dot(y)).collect();
    for size in 0..=n.min(p) {
        for support in combinations(p, size) {
            for signs in 0..(1u32 << size) {
                let s: Vec<f64> = (0..size)
                    .map(|b| if signs >> b & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                let gram: Vec<Vec<f64>> = support
                    .iter()
                    .map(|&a| support.iter().map(|&b| col(a).dot(&col(b))).collect())
                    .collect();
                let rhs: Vec<f64> = support.iter().zip(&s).map(|(&j, &sj)| corr[j] - lambda * sj).collect();
                let Some(x) = solve_dense(gram, rhs) else { continue };
                if x.iter().zip(&s).any(|(&xi, &si)| xi * si <= 1e-12) {
                    continue;
                }
                let mut beta = vec![0.0; p];
                for (&j, &v) in support.iter().zip(&x) {
                    beta[j] = v;
                }
                let resid = y - &m.dot(&Array1::from(beta.clone()));
                let feasible = (0..p)
                    .filter(|j| !support.contains(j))
                    .all(|j| col(j).dot(&resid).abs() <= lambda + 1e-10);
                if feasible {
                    return beta;
                }
            }
        }
    }
    panic!("no optimality certificate found");
}
