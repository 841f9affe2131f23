//! Nonnegative least squares over the probability simplex.
//!
//! Solves min ||A w - b|| subject to w >= 0 and sum(w) = 1 with an
//! active-set method (Lawson–Hanson style, the equality handled exactly
//! through a KKT row rather than a penalty). The minimizer of the quadratic
//! is generally a face of the feasible polytope, not a point; an optional
//! tie-break re-solves with a tiny linear term and then polishes the
//! selected support at zero perturbation, so callers can ask for the vertex
//! of the optimal face that minimizes a secondary cost without giving up
//! any primary objective beyond the stated tolerance.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("the dictionary has no columns")]
    EmptyDictionary,
    #[error("active-set iteration budget exhausted")]
    NonConvergence,
}

#[derive(Debug, Clone)]
pub struct SimplexFit {
    pub weights: Vec<f64>,
    /// ||A w - b||
    pub residual: f64,
    pub iterations: usize,
}

/// Objective tolerance of the solver contract: the returned point's objective
/// is within this (relative to the data scale) of the constrained optimum.
pub const OBJECTIVE_TOL: f64 = 1e-9;

pub fn simplex_constrained_lsq(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tiebreak: Option<&[f64]>,
) -> Result<SimplexFit, FitError> {
    let k = a.ncols();
    if k == 0 {
        return Err(FitError::EmptyDictionary);
    }
    assert_eq!(a.nrows(), b.len());
    let zero_q = vec![0.0; k];
    let base = active_set(a, b, &zero_q, 0.0, 0.0)?;
    let base_w = normalize(base.weights(k));
    let base_obj = objective(a, b, &base_w);
    let scale = b.norm_squared().max(1.0);
    let budget = base_obj + OBJECTIVE_TOL * scale;

    let Some(q) = tiebreak else {
        let residual = residual_norm(a, b, &base_w);
        return Ok(SimplexFit { weights: base_w, residual, iterations: base.iterations });
    };
    assert_eq!(q.len(), k);

    // Tie-break: re-solve with a small linear term on the normalized
    // secondary cost, threshold the support, and re-fit the kept columns at
    // zero perturbation. The polish removes the bias entirely, and the
    // objective budget guards against a perturbation large enough to drag
    // the support off the optimal face.
    let (qmin, qmax) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let range = (qmax - qmin).max(1e-300);
    let qn: Vec<f64> = q.iter().map(|&v| (v - qmin) / range).collect();

    let mut iterations = base.iterations;
    let grad_scale = (a.transpose() * b).amax().max(1.0);
    for exponent in [-5i32, -7, -9] {
        let delta = 10f64.powi(exponent) * grad_scale;
        let ridge = 1e-4 * delta;
        let Ok(tied) = active_set(a, b, &qn, delta, ridge) else { continue };
        iterations += tied.iterations;
        let tied_w = tied.weights(k);
        let peak = tied_w.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let loose: Vec<usize> = (0..k).filter(|&j| tied_w[j] > 1e-6 * peak).collect();
        // Every vertex of the optimal face has support bounded by the face
        // rank, so the q-cheapest vertex inside the detected support can be
        // found by exact enumeration of small sub-supports.
        if let Some(best) = best_vertex_in_support(a, b, q, &loose, budget) {
            let residual = residual_norm(a, b, &best);
            return Ok(SimplexFit { weights: best, residual, iterations });
        }
        let kept: Vec<usize> = (0..k).filter(|&j| tied_w[j] > 1e-3 * peak).collect();
        let candidates = [
            polish_on_support(a, b, &kept, k),
            polish_on_support(a, b, &tied.support, k),
            Some(normalize(tied_w.clone())),
        ];
        for cand in candidates.into_iter().flatten() {
            if objective(a, b, &cand) <= budget {
                let residual = residual_norm(a, b, &cand);
                return Ok(SimplexFit { weights: cand, residual, iterations });
            }
        }
    }
    let residual = residual_norm(a, b, &base_w);
    Ok(SimplexFit { weights: base_w, residual, iterations })
}

/// Exact vertex selection: among sub-supports of `support` no larger than
/// the face rank, re-fit at zero perturbation and keep the feasible one
/// within the objective budget that minimizes the secondary cost.
/// Deterministic tie order: lower cost, then smaller support, then
/// lexicographic. Returns None when the support is too large to enumerate.
fn best_vertex_in_support(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    q: &[f64],
    support: &[usize],
    budget: f64,
) -> Option<Vec<f64>> {
    let s = support.len();
    if s == 0 || s > 16 {
        return None;
    }
    let k = a.ncols();
    // Rank of the support columns plus the simplex row.
    let m = a.nrows();
    let mut aug = DMatrix::zeros(m + 1, s);
    for (col, &j) in support.iter().enumerate() {
        for i in 0..m {
            aug[(i, col)] = a[(i, j)];
        }
        aug[(m, col)] = 1.0;
    }
    let svd = aug.clone().svd(false, false);
    let top = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&v| v > 1e-11 * top.max(1e-300))
        .count()
        .max(1);
    let mut budget_subsets = 20000usize;
    let mut best: Option<(f64, usize, u32, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << s) {
        let size = mask.count_ones() as usize;
        if size > rank {
            continue;
        }
        if budget_subsets == 0 {
            break;
        }
        budget_subsets -= 1;
        let subset: Vec<usize> =
            (0..s).filter(|&i| mask & (1 << i) != 0).map(|i| support[i]).collect();
        let Some(w) = polish_on_support(a, b, &subset, k) else { continue };
        if objective(a, b, &w) > budget {
            continue;
        }
        let cost: f64 = w.iter().zip(q.iter()).map(|(wi, qi)| wi * qi).sum();
        let candidate = (cost, size, mask, w);
        best = match best {
            None => Some(candidate),
            Some(cur) => {
                if candidate.0 < cur.0 - 1e-12 * (1.0 + cur.0.abs())
                    || ((candidate.0 - cur.0).abs() <= 1e-12 * (1.0 + cur.0.abs())
                        && (candidate.1, candidate.2) < (cur.1, cur.2))
                {
                    Some(candidate)
                } else {
                    Some(cur)
                }
            }
        };
    }
    best.map(|(_, _, _, w)| w)
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        for v in &mut w {
            *v /= total;
        }
    }
    w
}

struct ActiveSetSolution {
    support: Vec<usize>,
    support_weights: Vec<f64>,
    iterations: usize,
}

impl ActiveSetSolution {
    fn weights(&self, k: usize) -> Vec<f64> {
        let mut w = vec![0.0; k];
        for (&i, &v) in self.support.iter().zip(self.support_weights.iter()) {
            w[i] = v;
        }
        w
    }

}

fn residual_norm(a: &DMatrix<f64>, b: &DVector<f64>, w: &[f64]) -> f64 {
    let wv = DVector::from_column_slice(w);
    (a * wv - b).norm()
}

fn objective(a: &DMatrix<f64>, b: &DVector<f64>, w: &[f64]) -> f64 {
    let r = residual_norm(a, b, w);
    r * r
}

/// min 1/2 ||A_P u - b||^2 + delta q_P . u + ridge ||u||^2  s.t.  sum(u) = 1,
/// via the KKT system; returns (u, multiplier).
fn solve_on_support(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    q: &[f64],
    delta: f64,
    ridge: f64,
    support: &[usize],
) -> Option<(Vec<f64>, f64)> {
    let p = support.len();
    let m = a.nrows();
    let mut ap = DMatrix::zeros(m, p);
    for (col, &j) in support.iter().enumerate() {
        ap.set_column(col, &a.column(j));
    }
    let gram = ap.transpose() * &ap;
    let rhs_top = ap.transpose() * b;
    let mut kkt = DMatrix::zeros(p + 1, p + 1);
    for i in 0..p {
        for j in 0..p {
            kkt[(i, j)] = gram[(i, j)];
        }
        kkt[(i, i)] += 2.0 * ridge;
        kkt[(i, p)] = 1.0;
        kkt[(p, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(p + 1);
    for i in 0..p {
        rhs[i] = rhs_top[i] - delta * q[support[i]];
    }
    rhs[p] = 1.0;
    // SVD pseudo-solve tolerates rank-deficient supports.
    let svd = kkt.svd(true, true);
    let sol = svd.solve(&rhs, 1e-13).ok()?;
    let u: Vec<f64> = (0..p).map(|i| sol[i]).collect();
    Some((u, sol[p]))
}

#[allow(clippy::needless_range_loop)]
fn active_set(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    q: &[f64],
    delta: f64,
    ridge: f64,
) -> Result<ActiveSetSolution, FitError> {
    let k = a.ncols();
    let m = a.nrows();

    // Feasible start: the best single column.
    let mut best = (f64::INFINITY, 0usize);
    for j in 0..k {
        let r = (a.column(j) - b).norm_squared() + 2.0 * delta * q[j] + 2.0 * ridge;
        if r < best.0 {
            best = (r, j);
        }
    }
    let mut support = vec![best.1];
    let mut weights = vec![1.0f64];

    let grad_scale =
        (a.transpose() * b).amax().max(delta * q.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))).max(1.0);
    let opt_tol = 1e-11 * grad_scale;
    let max_iter = 20 * (k + m) + 200;
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        if iterations > max_iter {
            return Err(FitError::NonConvergence);
        }

        // Inner loop: solve on the support and step back to feasibility
        // until the support solution is strictly positive.
        loop {
            let (u, _mu) =
                solve_on_support(a, b, q, delta, ridge, &support).ok_or(FitError::NonConvergence)?;
            if u.iter().all(|&x| x > 1e-13) {
                weights = u;
                break;
            }
            // Step from `weights` toward `u` up to the first zero crossing.
            let mut alpha = 1.0f64;
            for (&wi, &ui) in weights.iter().zip(u.iter()) {
                if ui <= 1e-13 {
                    let denom = wi - ui;
                    if denom > 1e-300 {
                        alpha = alpha.min(wi / denom);
                    }
                }
            }
            let stepped: Vec<f64> = weights
                .iter()
                .zip(u.iter())
                .map(|(&wi, &ui)| wi + alpha * (ui - wi))
                .collect();
            // Drop indices that hit the boundary.
            let mut new_support = Vec::with_capacity(support.len());
            let mut new_weights = Vec::with_capacity(support.len());
            for (idx, &w) in stepped.iter().enumerate() {
                if w > 1e-12 {
                    new_support.push(support[idx]);
                    new_weights.push(w);
                }
            }
            if new_support.is_empty() {
                // Keep the largest entry to stay feasible.
                let (arg, _) = stepped
                    .iter()
                    .enumerate()
                    .fold((0usize, f64::NEG_INFINITY), |acc, (i, &v)| {
                        if v > acc.1 {
                            (i, v)
                        } else {
                            acc
                        }
                    });
                new_support.push(support[arg]);
                new_weights.push(1.0);
            }
            support = new_support;
            weights = new_weights;
            // Renormalize against drift before re-solving.
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            iterations += 1;
            if iterations > max_iter {
                return Err(FitError::NonConvergence);
            }
        }

        // Optimality: reduced costs of the inactive columns.
        let mut full = vec![0.0f64; k];
        for (&j, &w) in support.iter().zip(weights.iter()) {
            full[j] = w;
        }
        let wv = DVector::from_column_slice(&full);
        let grad = a.transpose() * (a * &wv - b);
        // Multiplier from the stationary support entries.
        let mu = support
            .iter()
            .map(|&j| grad[j] + delta * q[j] + 2.0 * ridge * full[j])
            .sum::<f64>()
            / support.len() as f64;
        let mut entering = None;
        let mut most_negative = -opt_tol;
        for j in 0..k {
            if support.contains(&j) {
                continue;
            }
            let reduced = grad[j] + delta * q[j] + 2.0 * ridge * full[j] - mu;
            if reduced < most_negative {
                most_negative = reduced;
                entering = Some(j);
            }
        }
        match entering {
            None => {
                return Ok(ActiveSetSolution { support, support_weights: weights, iterations });
            }
            Some(j) => {
                support.push(j);
                weights.push(0.0);
            }
        }
    }
}

fn polish_on_support(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    support: &[usize],
    k: usize,
) -> Option<Vec<f64>> {
    let zero_q = vec![0.0; k];
    let (u, _) = solve_on_support(a, b, &zero_q, 0.0, 0.0, support)?;
    if u.iter().any(|&x| x < -1e-12) {
        return None;
    }
    let mut w = vec![0.0; k];
    let total: f64 = u.iter().sum();
    for (&j, &v) in support.iter().zip(u.iter()) {
        w[j] = v.max(0.0) / total;
    }
    Some(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn moment_column(t: f64, degree: usize) -> Vec<f64> {
        (0..=degree).map(|p| t.powi(p as i32) * (1.0 - t).powi((degree - p) as i32)).collect()
    }

    fn moment_dictionary(grid: &[f64], degree: usize) -> DMatrix<f64> {
        let rows = degree + 1;
        let mut a = DMatrix::zeros(rows, grid.len());
        for (j, &t) in grid.iter().enumerate() {
            let col = moment_column(t, degree);
            for (i, v) in col.into_iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        a
    }

    #[test]
    fn single_column_gets_weight_one() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let b = DVector::from_column_slice(&[0.5, 3.0]);
        let fit = simplex_constrained_lsq(&a, &b, None).unwrap();
        assert!((fit.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_two_atom_recovery_with_tiebreak() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let a = moment_dictionary(&grid, 3);
        let truth = [(20usize, 0.3), (90usize, 0.7)];
        let mut b = DVector::zeros(4);
        for &(idx, w) in &truth {
            let col = moment_column(grid[idx], 3);
            for (i, v) in col.into_iter().enumerate() {
                b[i] += w * v;
            }
        }
        let q: Vec<f64> = grid.iter().map(|&t| t.powi(4) + (1.0 - t).powi(4)).collect();
        let fit = simplex_constrained_lsq(&a, &b, Some(&q)).unwrap();
        assert!(fit.residual < 1e-10, "residual {}", fit.residual);
        for &(idx, w) in &truth {
            assert!(
                (fit.weights[idx] - w).abs() < 1e-8,
                "node {idx}: {} vs {w}",
                fit.weights[idx]
            );
        }
        let sum: f64 = fit.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
        let spurious: f64 = fit
            .weights
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 20 && *i != 90)
            .map(|(_, w)| w.abs())
            .sum();
        assert!(spurious < 1e-8, "spurious mass {spurious}");
    }

    #[test]
    fn degenerate_fit_prefers_low_cost_vertex() {
        // Any vertex is a perfect fit; the tie-break must pick index 1.
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0]);
        let q = vec![0.3, 0.1, 0.2];
        let fit = simplex_constrained_lsq(&a, &b, Some(&q)).unwrap();
        assert!((fit.weights[1] - 1.0).abs() < 1e-9, "{:?}", fit.weights);
    }

    #[test]
    fn coarse_grid_gives_best_approximation() {
        let grid = [0.0, 0.5, 1.0];
        let a = moment_dictionary(&grid, 3);
        let b_col = moment_column(0.37, 3);
        let b = DVector::from_column_slice(&b_col);
        let fit = simplex_constrained_lsq(&a, &b, None).unwrap();
        assert!(fit.residual > 1e-6);
        let sum: f64 = fit.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
        assert!(fit.weights.iter().all(|&w| w >= -1e-12));
        // Exhaustive support oracle: no support beats the returned objective.
        let best = brute_force_optimum(&a, &b);
        assert!(fit.residual.powi(2) <= best + OBJECTIVE_TOL);
    }

    fn brute_force_optimum(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
        let k = a.ncols();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << k) {
            let support: Vec<usize> = (0..k).filter(|&j| mask & (1 << j) != 0).collect();
            let zero_q = vec![0.0; k];
            if let Some((u, _)) = solve_on_support(a, b, &zero_q, 0.0, 0.0, &support) {
                if u.iter().all(|&x| x >= -1e-10) {
                    let mut w = vec![0.0; k];
                    for (&j, &v) in support.iter().zip(u.iter()) {
                        w[j] = v.max(0.0);
                    }
                    let total: f64 = w.iter().sum();
                    if total > 0.0 {
                        for v in &mut w {
                            *v /= total;
                        }
                        best = best.min(objective(a, b, &w));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn random_instances_match_support_enumeration() {
        let mut rng = crate::graded::seeded_rng(901);
        for _ in 0..30 {
            let m = rng.gen_range(2..5);
            let k = rng.gen_range(2..6);
            let a = DMatrix::from_fn(m, k, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let b = DVector::from_fn(m, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let fit = simplex_constrained_lsq(&a, &b, None).unwrap();
            let best = brute_force_optimum(&a, &b);
            let scale = b.norm_squared().max(1.0);
            assert!(
                fit.residual.powi(2) <= best + OBJECTIVE_TOL * scale,
                "objective {} vs brute force {}",
                fit.residual.powi(2),
                best
            );
            let sum: f64 = fit.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
