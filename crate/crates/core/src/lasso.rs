//! LASSO solvers: real, I/Q and multi-dictionary with max combining.
//!
//! All solves minimize `½‖y − Mβ‖² + λ‖β‖₁` by cyclic coordinate descent
//! with soft-thresholding. After each sweep the current support and sign
//! pattern are "polished": the stationarity equations restricted to the
//! support are solved exactly and the result is accepted when it keeps the
//! same signs. Acceptance never raises the objective, so the sweep-wise
//! objective sequence stays non-increasing. A solve terminates only once the
//! KKT residual, recomputed from scratch, is within tolerance.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::dictionary::{CorrelatorConfig, Dictionary, SubDictionary};
use crate::error::{Component, Error, Result};
use crate::linalg::{cholesky, cholesky_solve, null_vector};
use crate::scalar::Scalar;
use crate::simulator::CorrelatorSnapshot;

/// Default regularization weight.
pub const DEFAULT_LAMBDA: f64 = 0.3009;

/// Sweep cap used unless configured otherwise.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Bound on the KKT residual at termination.
    pub tol: T,
    pub max_sweeps: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::default_kkt_tol(),
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

/// A single real LASSO instance.
#[derive(Debug, Clone)]
pub struct LassoProblem<T> {
    pub matrix: Array2<T>,
    pub y: Array1<T>,
    pub lambda: T,
}

impl<T: Scalar> LassoProblem<T> {
    pub fn new(matrix: Array2<T>, y: Array1<T>, lambda: T) -> Result<Self> {
        if matrix.nrows() != y.len() {
            return Err(Error::invalid(format!(
                "matrix has {} rows but y has {} entries",
                matrix.nrows(),
                y.len()
            )));
        }
        check_lambda(lambda)?;
        Ok(Self { matrix, y, lambda })
    }

    pub fn objective(&self, beta: ArrayView1<T>) -> T {
        objective(self.matrix.view(), self.y.view(), beta, self.lambda)
    }
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if lambda >= T::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("lambda must be finite and non-negative"))
    }
}

/// Recovered coefficients over a delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSelector<T> {
    /// Signed coefficients for a real solve, magnitudes after I/Q combining.
    pub coeffs: Vec<T>,
    /// Delay in chips of each coefficient.
    pub delays: Vec<f64>,
    /// Fine delay behind each coefficient, when it was picked from a finer grid.
    pub fine_delays: Option<Vec<f64>>,
    /// Coordinate-descent sweeps used (largest over combined solves).
    pub sweeps: usize,
    /// Final KKT residual (largest over combined solves).
    pub kkt_residual: T,
}

impl<T: Scalar> SparseSelector<T> {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_magnitude(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }
}

/// `½‖y − Mβ‖² + λ‖β‖₁`.
pub fn objective<T: Scalar>(m: ArrayView2<T>, y: ArrayView1<T>, beta: ArrayView1<T>, lambda: T) -> T {
    let r = &y - &m.dot(&beta);
    T::of(0.5) * r.dot(&r) + lambda * beta.iter().map(|b| b.abs()).sum::<T>()
}

/// Largest violation of the LASSO optimality conditions at `beta`,
/// computed directly from `M` and `y`.
///
/// With `g = Mᵀ(y − Mβ)`: zero coefficients need `|g_j| ≤ λ`, non-zero ones
/// need `g_j = λ·sign(β_j)`.
pub fn kkt_residual<T: Scalar>(m: ArrayView2<T>, y: ArrayView1<T>, beta: ArrayView1<T>, lambda: T) -> T {
    let g = m.t().dot(&(&y - &m.dot(&beta)));
    kkt_from_gradient(g.view(), beta, lambda)
}

fn kkt_from_gradient<T: Scalar>(g: ArrayView1<T>, beta: ArrayView1<T>, lambda: T) -> T {
    g.iter().zip(beta).fold(T::zero(), |worst, (&gj, &bj)| {
        let v = if bj == T::zero() {
            (gj.abs() - lambda).max(T::zero())
        } else {
            (gj - lambda * bj.signum()).abs()
        };
        worst.max(v)
    })
}

fn soft_threshold<T: Scalar>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}

/// A dictionary prepared for repeated solves: matrix, Gram matrix and the
/// delay of every column.
#[derive(Debug, Clone)]
pub struct Design<T> {
    matrix: Array2<T>,
    gram: Array2<T>,
    delays: Vec<f64>,
}

impl<T: Scalar> Design<T> {
    pub fn new(matrix: Array2<T>, delays: Vec<f64>) -> Result<Self> {
        if delays.len() != matrix.ncols() {
            return Err(Error::invalid("one delay per dictionary column required"));
        }
        let gram = matrix.t().dot(&matrix);
        Ok(Self { matrix, gram, delays })
    }

    /// Design over the full dictionary with its fine column delays.
    pub fn from_dictionary(dict: &Dictionary<T>) -> Self {
        Self::new(dict.matrix.clone(), dict.grid.column_delays()).expect("delays match columns")
    }

    pub fn from_sub_dictionary(sub: &SubDictionary<T>) -> Self {
        Self::new(sub.matrix.clone(), sub.column_delays.clone()).expect("delays match columns")
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Solves the real LASSO for one right-hand side.
    pub fn solve(&self, y: ArrayView1<T>, lambda: T, opts: &SolverOptions<T>) -> Result<SparseSelector<T>> {
        let beta = self.solve_coefficients(y, lambda, opts, None)?;
        Ok(SparseSelector {
            coeffs: beta.coeffs,
            delays: self.delays.clone(),
            fine_delays: None,
            sweeps: beta.sweeps,
            kkt_residual: beta.residual,
        })
    }

    fn solve_coefficients(
        &self,
        y: ArrayView1<T>,
        lambda: T,
        opts: &SolverOptions<T>,
        mut trace: Option<&mut Vec<T>>,
    ) -> Result<Solution<T>> {
        opts.validate()?;
        check_lambda(lambda)?;
        if y.len() != self.matrix.nrows() {
            return Err(Error::invalid(format!(
                "right-hand side has {} entries, dictionary has {} rows",
                y.len(),
                self.matrix.nrows()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("right-hand side must be finite"));
        }
        let p = self.matrix.ncols();
        let corr = self.matrix.t().dot(&y);
        let mut beta = Array1::<T>::zeros(p);
        let obj = |b: &Array1<T>| objective(self.matrix.view(), y, b.view(), lambda);
        if let Some(t) = trace.as_deref_mut() {
            t.push(obj(&beta));
        }

        // λ ≥ ‖Mᵀy‖∞ makes the origin optimal.
        if corr.iter().all(|c| c.abs() <= lambda) {
            return Ok(Solution {
                coeffs: beta.to_vec(),
                sweeps: 0,
                residual: kkt_from_gradient(corr.view(), beta.view(), lambda),
            });
        }

        let mut grad = corr.clone();
        let mut residual = T::infinity();
        for sweep in 1..=opts.max_sweeps {
            for j in 0..p {
                let gjj = self.gram[(j, j)];
                if gjj <= T::zero() {
                    continue;
                }
                let old = beta[j];
                let new = soft_threshold(old + grad[j] / gjj, lambda / gjj);
                if new != old {
                    let step = new - old;
                    grad.scaled_add(-step, &self.gram.column(j));
                    beta[j] = new;
                }
            }

            if kkt_from_gradient(grad.view(), beta.view(), lambda) > opts.tol {
                let tol = opts.tol / T::of(4.0);
                // A support wider than the row count has a singular Gram block;
                // restart the search from the origin in that case.
                let polished = self
                    .polish(y, &corr, &beta, lambda, tol)
                    .or_else(|| self.polish(y, &corr, &Array1::zeros(p), lambda, tol));
                if let Some(polished) = polished {
                    // A certified optimum is kept even if rounding puts its
                    // objective a few ulps above the current iterate.
                    let certified = kkt_from_gradient((&corr - &self.gram.dot(&polished)).view(), polished.view(), lambda)
                        <= opts.tol;
                    if certified || obj(&polished) <= obj(&beta) {
                        beta = polished;
                    }
                }
            }

            // Refresh the incrementally updated gradient before judging convergence.
            grad = &corr - &self.gram.dot(&beta);
            residual = kkt_from_gradient(grad.view(), beta.view(), lambda);
            if let Some(t) = trace.as_deref_mut() {
                t.push(obj(&beta));
            }
            if residual <= opts.tol {
                return Ok(Solution {
                    coeffs: beta.to_vec(),
                    sweeps: sweep,
                    residual,
                });
            }
        }
        Err(Error::NonConvergence {
            sweeps: opts.max_sweeps,
            residual: residual.to_f64_lossy(),
            last_iterate: beta.iter().map(|b| b.to_f64_lossy()).collect(),
            component: None,
            sub_dictionary: None,
        })
    }

    /// Feature-sign search started from `beta`: alternately solves the
    /// sign-restricted problem on the active set, with a line search over
    /// every sign change, and activates the most violating zero coefficient.
    /// Each accepted step lowers the objective, so the returned point is never
    /// worse than `beta`. `None` if an active Gram block is singular.
    fn polish(&self, y: ArrayView1<T>, corr: &Array1<T>, beta: &Array1<T>, lambda: T, tol: T) -> Option<Array1<T>> {
        let p = beta.len();
        let obj = |b: &Array1<T>| objective(self.matrix.view(), y, b.view(), lambda);
        let mut x = beta.clone();
        let mut signs: Vec<T> = x.iter().map(|v| if *v == T::zero() { T::zero() } else { v.signum() }).collect();
        let mut budget = 20 * p + 100;

        loop {
            // Sign-restricted steps until the nonzero coefficients are optimal.
            loop {
                budget = budget.checked_sub(1)?;
                let active: Vec<usize> = (0..p).filter(|&j| signs[j] != T::zero()).collect();
                if active.is_empty() {
                    break;
                }
                let k = active.len();
                let sub_gram: Vec<T> = active
                    .iter()
                    .flat_map(|&a| active.iter().map(move |&b| (a, b)))
                    .map(|(a, b)| self.gram[(a, b)])
                    .collect();
                let rhs: Vec<T> = active.iter().map(|&j| corr[j] - lambda * signs[j]).collect();
                let Some(l) = cholesky(&sub_gram, k) else {
                    // Dependent active columns: slide along the null space
                    // until a coefficient leaves the active set.
                    self.null_space_step(&active, &mut x, &mut signs, corr, lambda)?;
                    continue;
                };
                let target = cholesky_solve(&l, k, &rhs);
                if target.iter().any(|v| !v.is_finite()) {
                    return None;
                }

                let mut full_target = x.clone();
                for (&j, &v) in active.iter().zip(&target) {
                    full_target[j] = v;
                }
                let mut best = full_target.clone();
                let mut best_obj = obj(&best);
                for (&j, &v) in active.iter().zip(&target) {
                    if x[j] != T::zero() && v.signum() != x[j].signum() {
                        let t = x[j] / (x[j] - v);
                        let mut point = &x + &((&full_target - &x) * t);
                        point[j] = T::zero();
                        let f = obj(&point);
                        if f < best_obj {
                            best = point;
                            best_obj = f;
                        }
                    }
                }
                x = best;
                for j in 0..p {
                    signs[j] = if x[j] == T::zero() { T::zero() } else { x[j].signum() };
                }
                let grad = corr - &self.gram.dot(&x);
                let settled = (0..p)
                    .filter(|&j| signs[j] != T::zero())
                    .all(|j| (grad[j] - lambda * signs[j]).abs() <= tol);
                if settled {
                    break;
                }
            }

            let grad = corr - &self.gram.dot(&x);
            let worst = (0..p)
                .filter(|&j| x[j] == T::zero())
                .max_by(|&a, &b| grad[a].abs().partial_cmp(&grad[b].abs()).unwrap_or(std::cmp::Ordering::Equal));
            match worst {
                Some(j) if grad[j].abs() > lambda + tol => signs[j] = grad[j].signum(),
                _ => return Some(x),
            }
        }
    }
}

impl<T: Scalar> Design<T> {
    /// Moves `x` along a null vector `d` of the active columns. The fit is
    /// unchanged and the penalty falls linearly, so the objective decreases
    /// until the first active coefficient reaches zero; that one is dropped.
    fn null_space_step(
        &self,
        active: &[usize],
        x: &mut Array1<T>,
        signs: &mut [T],
        corr: &Array1<T>,
        lambda: T,
    ) -> Option<()> {
        let rows = self.matrix.nrows();
        let k = active.len();
        let sub: Vec<T> = (0..rows)
            .flat_map(|i| active.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)])
            .collect();
        let mut d = null_vector(&sub, rows, k)?;
        let grad = corr - &self.gram.dot(&*x);
        let slope = active
            .iter()
            .zip(&d)
            .fold(T::zero(), |acc, (&j, &dj)| acc + (lambda * signs[j] - grad[j]) * dj);
        if slope > T::zero() {
            d.iter_mut().for_each(|v| *v = -*v);
        }
        // Coefficients sitting at zero may only move into their assigned sign.
        if active.iter().zip(&d).any(|(&j, &dj)| x[j] == T::zero() && dj * signs[j] < T::zero()) {
            return None;
        }
        let (mut step, mut blocking) = (T::infinity(), None);
        for (&j, &dj) in active.iter().zip(&d) {
            if x[j] != T::zero() && x[j] * dj < T::zero() {
                let t = -x[j] / dj;
                if t < step {
                    step = t;
                    blocking = Some(j);
                }
            }
        }
        let b = blocking?;
        for (&j, &dj) in active.iter().zip(&d) {
            x[j] += step * dj;
        }
        x[b] = T::zero();
        signs[b] = T::zero();
        Some(())
    }
}

struct Solution<T> {
    coeffs: Vec<T>,
    sweeps: usize,
    residual: T,
}

/// Solves `argmin ½‖y − Mβ‖² + λ‖β‖₁` to KKT tolerance.
pub fn solve_lasso<T: Scalar>(problem: &LassoProblem<T>, opts: &SolverOptions<T>) -> Result<SparseSelector<T>> {
    let delays = (0..problem.matrix.ncols()).map(|j| j as f64).collect();
    Design::new(problem.matrix.clone(), delays)?.solve(problem.y.view(), problem.lambda, opts)
}

/// Like [`solve_lasso`], additionally returning the objective after every sweep
/// (entry 0 is the objective at the zero start).
pub fn solve_lasso_traced<T: Scalar>(
    problem: &LassoProblem<T>,
    opts: &SolverOptions<T>,
) -> Result<(SparseSelector<T>, Vec<T>)> {
    let delays: Vec<f64> = (0..problem.matrix.ncols()).map(|j| j as f64).collect();
    let design = Design::new(problem.matrix.clone(), delays.clone())?;
    let mut trace = Vec::new();
    let sol = design.solve_coefficients(problem.y.view(), problem.lambda, opts, Some(&mut trace))?;
    Ok((
        SparseSelector {
            coeffs: sol.coeffs,
            delays,
            fine_delays: None,
            sweeps: sol.sweeps,
            kkt_residual: sol.residual,
        },
        trace,
    ))
}

/// Signed I and Q coefficient vectors of one I/Q solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IqCoefficients<T> {
    pub in_phase: SparseSelector<T>,
    pub quadrature: SparseSelector<T>,
}

impl<T: Scalar> IqCoefficients<T> {
    /// `|β^I + jβ^Q|` per coefficient.
    pub fn magnitudes(&self) -> SparseSelector<T> {
        SparseSelector {
            coeffs: self
                .in_phase
                .coeffs
                .iter()
                .zip(&self.quadrature.coeffs)
                .map(|(&a, &b)| a.hypot(b))
                .collect(),
            delays: self.in_phase.delays.clone(),
            fine_delays: None,
            sweeps: self.in_phase.sweeps.max(self.quadrature.sweeps),
            kkt_residual: self.in_phase.kkt_residual.max(self.quadrature.kkt_residual),
        }
    }
}

/// Solves the I and Q halves of a snapshot separately against `design`.
pub fn solve_iq_components<T: Scalar>(
    design: &Design<T>,
    snapshot: &CorrelatorSnapshot<T>,
    lambda: T,
    opts: &SolverOptions<T>,
) -> Result<IqCoefficients<T>> {
    let yi = Array1::from(snapshot.in_phase());
    let yq = Array1::from(snapshot.quadrature());
    let in_phase = design
        .solve(yi.view(), lambda, opts)
        .map_err(|e| e.in_component(Component::InPhase))?;
    let quadrature = design
        .solve(yq.view(), lambda, opts)
        .map_err(|e| e.in_component(Component::Quadrature))?;
    Ok(IqCoefficients { in_phase, quadrature })
}

/// I/Q LASSO: magnitudes `sqrt((β^I)² + (β^Q)²)` of the two separate solves.
pub fn solve_iq_lasso<T: Scalar>(
    design: &Design<T>,
    snapshot: &CorrelatorSnapshot<T>,
    lambda: T,
    opts: &SolverOptions<T>,
) -> Result<SparseSelector<T>> {
    Ok(solve_iq_components(design, snapshot, lambda, opts)?.magnitudes())
}

/// Multi-LASSO output: the max-combined per-tap selector plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLassoOutput<T> {
    /// Per-tap `max_K |β̂_K|`, with coarse tap delays and winning fine delays.
    pub selector: SparseSelector<T>,
    /// 1-based winning sub-dictionary per tap (lowest K on ties).
    pub winning_k: Vec<usize>,
    /// I/Q magnitudes of each sub-dictionary solve, in K order.
    pub per_k: Vec<SparseSelector<T>>,
}

/// Square sub-dictionaries `M_1..M_Fp` prepared for multi-LASSO solves.
#[derive(Debug, Clone)]
pub struct MultiDesign<T> {
    config: CorrelatorConfig,
    subs: Vec<Design<T>>,
}

impl<T: Scalar> MultiDesign<T> {
    pub fn new(config: CorrelatorConfig, subs: &[SubDictionary<T>]) -> Result<Self> {
        if subs.is_empty() {
            return Err(Error::invalid("at least one sub-dictionary required"));
        }
        let n = config.taps();
        if subs.iter().any(|s| s.matrix.dim() != (n, n)) {
            return Err(Error::invalid(format!("every sub-dictionary must be {n}×{n}")));
        }
        Ok(Self {
            config,
            subs: subs.iter().map(Design::from_sub_dictionary).collect(),
        })
    }

    pub fn from_dictionary(dict: &Dictionary<T>) -> Result<Self> {
        Self::new(dict.config, &crate::dictionary::decimate_dictionary(dict)?)
    }

    pub fn fp(&self) -> usize {
        self.subs.len()
    }

    pub fn sub_designs(&self) -> &[Design<T>] {
        &self.subs
    }

    pub fn config(&self) -> &CorrelatorConfig {
        &self.config
    }
}

/// Multi-LASSO: one I/Q LASSO per sub-dictionary, combined per tap by the
/// maximum magnitude. The joint objective separates over K, so independent
/// solves are exact.
pub fn solve_multi_lasso<T: Scalar>(
    design: &MultiDesign<T>,
    snapshot: &CorrelatorSnapshot<T>,
    lambdas: &[T],
    opts: &SolverOptions<T>,
) -> Result<MultiLassoOutput<T>> {
    if lambdas.len() != design.fp() {
        return Err(Error::invalid(format!(
            "{} lambdas for {} sub-dictionaries",
            lambdas.len(),
            design.fp()
        )));
    }
    if snapshot.taps.len() != design.config.taps() {
        return Err(Error::invalid("snapshot tap count does not match the dictionary"));
    }
    let per_k = design
        .subs
        .iter()
        .zip(lambdas)
        .enumerate()
        .map(|(idx, (sub, &lambda))| {
            solve_iq_lasso(sub, snapshot, lambda, opts).map_err(|e| e.in_sub_dictionary(idx + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_max(&design.config, per_k))
}

/// Same as [`solve_multi_lasso`] with the sub-problems solved on the rayon pool.
pub fn solve_multi_lasso_par<T: Scalar>(
    design: &MultiDesign<T>,
    snapshot: &CorrelatorSnapshot<T>,
    lambdas: &[T],
    opts: &SolverOptions<T>,
) -> Result<MultiLassoOutput<T>> {
    if lambdas.len() != design.fp() {
        return Err(Error::invalid("one lambda per sub-dictionary required"));
    }
    let per_k = design
        .subs
        .par_iter()
        .zip(lambdas.par_iter())
        .enumerate()
        .map(|(idx, (sub, &lambda))| {
            solve_iq_lasso(sub, snapshot, lambda, opts).map_err(|e| e.in_sub_dictionary(idx + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_max(&design.config, per_k))
}

fn combine_max<T: Scalar>(config: &CorrelatorConfig, per_k: Vec<SparseSelector<T>>) -> MultiLassoOutput<T> {
    let n = config.taps();
    let mut coeffs = vec![T::zero(); n];
    let mut winning_k = vec![1; n];
    let mut fine = vec![0.0; n];
    for i in 0..n {
        let mut best = per_k[0].coeffs[i];
        let mut best_k = 0;
        for (k, sel) in per_k.iter().enumerate().skip(1) {
            if sel.coeffs[i] > best {
                best = sel.coeffs[i];
                best_k = k;
            }
        }
        coeffs[i] = best;
        winning_k[i] = best_k + 1;
        fine[i] = per_k[best_k].delays[i];
    }
    let selector = SparseSelector {
        coeffs,
        delays: config.tap_delays(),
        fine_delays: Some(fine),
        sweeps: per_k.iter().map(|s| s.sweeps).max().unwrap_or(0),
        kkt_residual: per_k.iter().fold(T::zero(), |m, s| m.max(s.kkt_residual)),
    };
    MultiLassoOutput {
        selector,
        winning_k,
        per_k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{ideal_dictionary, CorrelatorConfig};
    use ndarray::array;
    use num_complex::Complex;

    #[test]
    fn orthonormal_design_soft_thresholds() {
        let p = LassoProblem::<f64>::new(Array2::eye(3), array![1.0, 0.0, 0.0], 0.3).unwrap();
        let s = solve_lasso(&p, &SolverOptions::default()).unwrap();
        assert!((s.coeffs[0] - 0.7).abs() < 1e-12);
        assert_eq!(&s.coeffs[1..], &[0.0, 0.0]);
    }

    #[test]
    fn large_lambda_gives_exact_zero() {
        let m: Array2<f64> = array![[1.0, 0.5], [0.2, 1.0], [0.3, 0.1]];
        let y: Array1<f64> = array![0.4, -0.2, 0.3];
        let max_corr = m.t().dot(&y).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let p = LassoProblem::new(m, y, max_corr).unwrap();
        let s = solve_lasso(&p, &SolverOptions::default()).unwrap();
        assert!(s.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn invalid_inputs() {
        assert!(LassoProblem::new(Array2::<f64>::eye(2), array![1.0], 0.1).is_err());
        assert!(LassoProblem::new(Array2::<f64>::eye(1), array![1.0], -0.1).is_err());
        let p = LassoProblem::new(Array2::<f64>::eye(1), array![1.0], 0.1).unwrap();
        let bad = SolverOptions { tol: 0.0, max_sweeps: 10 };
        assert!(solve_lasso(&p, &bad).is_err());
        let bad = SolverOptions { tol: 1e-8, max_sweeps: 0 };
        assert!(solve_lasso(&p, &bad).is_err());
    }

    #[test]
    fn non_convergence_carries_last_iterate() {
        let config = CorrelatorConfig::nominal();
        let dict: Dictionary<f64> = ideal_dictionary(&config, 5).unwrap();
        let y = Array1::from_shape_fn(11, |i| (i as f64 * 0.7).sin());
        let p = LassoProblem::new(dict.matrix, y, 1e-3).unwrap();
        match solve_lasso(&p, &SolverOptions { tol: 1e-14, max_sweeps: 1 }) {
            Err(Error::NonConvergence { last_iterate, sweeps, .. }) => {
                assert_eq!(sweeps, 1);
                assert_eq!(last_iterate.len(), 55);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn iq_errors_name_the_component() {
        let config = CorrelatorConfig::nominal();
        let dict: Dictionary<f64> = ideal_dictionary(&config, 5).unwrap();
        let design = Design::from_dictionary(&dict);
        let taps = (0..11).map(|i| Complex::new(0.0, (i as f64).cos())).collect();
        let snap = CorrelatorSnapshot::new(taps, config, "q").unwrap();
        let err = solve_iq_lasso(&design, &snap, 1e-4, &SolverOptions { tol: 1e-15, max_sweeps: 1 })
            .unwrap_err();
        assert!(matches!(
            err,
            Error::NonConvergence { component: Some(Component::Quadrature), .. }
        ));
    }

    #[test]
    fn f32_solver_meets_its_tolerance() {
        let config = CorrelatorConfig::nominal();
        let dict: Dictionary<f32> = ideal_dictionary(&config, 1).unwrap();
        let y = dict.matrix.column(5).to_owned() + dict.matrix.column(8).mapv(|v| 0.5 * v);
        let p = LassoProblem::new(dict.matrix.clone(), y.clone(), 0.3f32).unwrap();
        let s = solve_lasso(&p, &SolverOptions::default()).unwrap();
        let beta = Array1::from(s.coeffs.clone());
        assert!(kkt_residual(dict.matrix.view(), y.view(), beta.view(), 0.3) <= 1e-4);
    }

    #[test]
    fn lambda_count_must_match_fp() {
        let config = CorrelatorConfig::nominal();
        let dict: Dictionary<f64> = ideal_dictionary(&config, 5).unwrap();
        let md = MultiDesign::from_dictionary(&dict).unwrap();
        let snap = CorrelatorSnapshot::new(vec![Complex::new(1.0, 0.0); 11], config, "x").unwrap();
        assert!(solve_multi_lasso(&md, &snap, &[0.3; 4], &SolverOptions::default()).is_err());
    }

    #[test]
    fn max_combining_prefers_lowest_k_on_ties() {
        let config = CorrelatorConfig::nominal();
        let sel = |v: f64| SparseSelector {
            coeffs: vec![v; 11],
            delays: vec![0.0; 11],
            fine_delays: None,
            sweeps: 1,
            kkt_residual: 0.0,
        };
        let out = combine_max(&config, vec![sel(0.2), sel(0.5), sel(0.5)]);
        assert!(out.winning_k.iter().all(|&k| k == 2));
        assert!(out.selector.coeffs.iter().all(|&c| c == 0.5));
    }
}
