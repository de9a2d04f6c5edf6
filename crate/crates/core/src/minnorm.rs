//! Exact solver for the minimum-norm convex combination of gradients.
//!
//! Given per-objective gradients `g_1..g_r`, find simplex weights `alpha`
//! minimizing `|| sum_j alpha_j g_j ||^2`. The negated combination is then a
//! common descent direction for every objective whenever it is nonzero.
//!
//! Two paths:
//! - closed form `alpha* = G^{-1} 1 / (1^T G^{-1} 1)` (Gram matrix `G`), used
//!   when the solve is well-conditioned and all weights come out nonnegative;
//! - away-step Frank-Wolfe on the simplex with exact line search otherwise.
//!   Vanilla Frank-Wolfe zig-zags sublinearly when the optimum sits on a face
//!   and cannot reach the 1e-10 duality-gap stop; the away step restores a
//!   linear rate while keeping the same oracle and certificate.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;

/// Duality-gap stopping tolerance for the iterative path.
pub const GAP_TOL: f64 = 1e-10;
/// Iteration cap for the iterative path.
pub const MAX_ITERATIONS: usize = 100_000;
/// Gram condition-number gate for the closed form.
pub const COND_GATE: f64 = 1e8;

/// `r` per-objective gradients of common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    grads: Vec<Vec<f64>>,
    dim: usize,
}

impl GradientSet {
    /// Validates `r >= 1`, equal dimensions `>= 1`, and finiteness.
    pub fn new(grads: Vec<Vec<f64>>) -> Result<Self> {
        if grads.is_empty() {
            return Err(CoreError::InvalidConfig {
                what: "GradientSet needs at least one gradient",
            });
        }
        let dim = grads[0].len();
        if dim == 0 {
            return Err(CoreError::InvalidConfig {
                what: "GradientSet gradients must be non-empty",
            });
        }
        for g in &grads {
            if g.len() != dim {
                return Err(CoreError::DimMismatch {
                    what: "GradientSet gradient",
                    expected: dim,
                    got: g.len(),
                });
            }
            if !math::all_finite(g) {
                return Err(CoreError::NonFinite {
                    what: "GradientSet gradient",
                });
            }
        }
        Ok(GradientSet { grads, dim })
    }

    pub fn num_objectives(&self) -> usize {
        self.grads.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grad(&self, j: usize) -> &[f64] {
        &self.grads[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.grads.iter().map(|g| g.as_slice())
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Validates nonnegativity and `sum = 1` within 1e-12.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(CoreError::InvalidConfig {
                what: "SimplexWeights must be non-empty",
            });
        }
        let mut sum = 0.0;
        for &a in &alpha {
            if !(a >= 0.0) {
                return Err(CoreError::InvalidConfig {
                    what: "SimplexWeights entries must be nonnegative",
                });
            }
            sum += a;
        }
        if math::abs(sum - 1.0) > 1e-12 {
            return Err(CoreError::InvalidConfig {
                what: "SimplexWeights must sum to 1 within 1e-12",
            });
        }
        Ok(SimplexWeights(alpha))
    }

    pub fn uniform(r: usize) -> Self {
        SimplexWeights(vec![1.0 / r as f64; r])
    }

    /// Vertex `e_j` of the simplex.
    pub fn vertex(r: usize, j: usize) -> Self {
        let mut v = vec![0.0; r];
        v[j] = 1.0;
        SimplexWeights(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Gram matrix of pairwise inner products, `G[i][j] = <g_i, g_j>`.
pub fn gram(gs: &GradientSet) -> Vec<Vec<f64>> {
    let r = gs.num_objectives();
    let mut g = vec![vec![0.0; r]; r];
    for i in 0..r {
        for j in i..r {
            let v = math::dot(gs.grad(i), gs.grad(j));
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

/// `sum_j alpha_j g_j`.
pub fn combined_direction(gs: &GradientSet, w: &SimplexWeights) -> Result<Vec<f64>> {
    if w.len() != gs.num_objectives() {
        return Err(CoreError::DimMismatch {
            what: "combined_direction weights",
            expected: gs.num_objectives(),
            got: w.len(),
        });
    }
    let mut q = vec![0.0; gs.dim()];
    for (j, &a) in w.as_slice().iter().enumerate() {
        math::axpy(a, gs.grad(j), &mut q);
    }
    Ok(q)
}

/// Full solver output with the optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormSolution {
    pub weights: SimplexWeights,
    /// `q = sum_j alpha_j g_j`.
    pub direction: Vec<f64>,
    /// `||q||^2` in Gram arithmetic.
    pub norm_sq: f64,
    /// `min_j <q, g_j> - ||q||^2`; the min-norm-point optimality condition is
    /// `margin >= 0` (up to tolerance), which makes `-q` a common descent
    /// direction when `q != 0`.
    pub certificate_margin: f64,
    pub used_closed_form: bool,
    pub iterations: usize,
}

/// Minimum-norm simplex weights for the gradient set.
pub fn solve_minnorm(gs: &GradientSet) -> SimplexWeights {
    solve_minnorm_full(gs).weights
}

/// Like [`solve_minnorm`], also returning the combined direction and the
/// optimality certificate.
pub fn solve_minnorm_full(gs: &GradientSet) -> MinNormSolution {
    let r = gs.num_objectives();
    if r == 1 {
        return finish(gs, SimplexWeights::vertex(1, 0), true, 0);
    }
    // A zero gradient makes q = 0 attainable at its vertex: stationary point.
    for j in 0..r {
        if math::norm_sq(gs.grad(j)) == 0.0 {
            return finish(gs, SimplexWeights::vertex(r, j), false, 0);
        }
    }
    if let Some(w) = closed_form_weights(gs) {
        return finish(gs, w, true, 0);
    }
    solve_minnorm_frank_wolfe(gs)
}

/// Closed-form weights `G^{-1} 1` normalized, or `None` when any weight is
/// negative, the Gram matrix fails the condition gate, or the solve fails.
pub fn closed_form_weights(gs: &GradientSet) -> Option<SimplexWeights> {
    let r = gs.num_objectives();
    let g = gram(gs);
    let eigs = sym_eigenvalues(&g);
    let lmin = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lmin > 0.0) || lmax / lmin >= COND_GATE {
        return None;
    }
    let x = solve_linear(&g, &vec![1.0; r])?;
    let sum: f64 = x.iter().sum();
    if !(sum > 0.0) {
        return None;
    }
    let alpha: Vec<f64> = x.iter().map(|&v| v / sum).collect();
    if alpha.iter().any(|&a| a < 0.0) {
        return None;
    }
    SimplexWeights::new(alpha).ok()
}

/// Away-step Frank-Wolfe on the simplex with exact line search, run until the
/// duality gap drops below [`GAP_TOL`] or [`MAX_ITERATIONS`] is hit.
pub fn solve_minnorm_frank_wolfe(gs: &GradientSet) -> MinNormSolution {
    let r = gs.num_objectives();
    let g = gram(gs);
    let mut alpha = vec![1.0 / r as f64; r];
    let mut iterations = 0;

    for it in 0..MAX_ITERATIONS {
        iterations = it;
        // (G alpha)_j = <q, g_j>, obj = alpha^T G alpha = ||q||^2.
        let ga = matvec(&g, &alpha);
        let obj = math::dot(&alpha, &ga);
        let (jmin, _) = argminmax(&ga, &alpha, false);
        let gap = 2.0 * (obj - ga[jmin]);
        if gap <= GAP_TOL {
            break;
        }
        // Away vertex: the support index with the largest <q, g_j>.
        let (_, jmax) = argminmax(&ga, &alpha, true);
        let fw_decrease = obj - ga[jmin];
        let away_decrease = ga[jmax] - obj;

        let (dir_sign, pivot, t_max) = if away_decrease > fw_decrease && alpha[jmax] < 1.0 {
            // d = alpha - e_jmax, feasible up to t = a/(1-a).
            (-1.0, jmax, alpha[jmax] / (1.0 - alpha[jmax]))
        } else {
            // d = e_jmin - alpha, feasible up to t = 1.
            (1.0, jmin, 1.0)
        };
        // d = dir_sign*(e_pivot - alpha); quadratic line search along d.
        let gd: Vec<f64> = (0..r).map(|i| dir_sign * (g[i][pivot] - ga[i])).collect();
        let slope = math::dot(&alpha, &gd); // (1/2) d obj/dt at t=0
        let curv = dir_sign * (gd[pivot] - math::dot(&alpha, &gd));
        let t = if curv > 0.0 {
            (-slope / curv).clamp(0.0, t_max)
        } else if slope < 0.0 {
            t_max
        } else {
            0.0
        };
        if t == 0.0 {
            break;
        }
        for i in 0..r {
            alpha[i] += t * dir_sign * (if i == pivot { 1.0 } else { 0.0 } - alpha[i]);
        }
        // Away steps land exactly on faces in exact arithmetic; snap the
        // rounding residue and restore sum = 1.
        let mut sum = 0.0;
        for a in alpha.iter_mut() {
            if *a < 1e-15 {
                *a = 0.0;
            }
            sum += *a;
        }
        for a in alpha.iter_mut() {
            *a /= sum;
        }
    }
    let weights = SimplexWeights::new(alpha).expect("frank-wolfe keeps iterates on the simplex");
    finish(gs, weights, false, iterations)
}

fn finish(gs: &GradientSet, weights: SimplexWeights, closed: bool, iterations: usize) -> MinNormSolution {
    let g = gram(gs);
    let ga = matvec(&g, weights.as_slice());
    let norm_sq = math::dot(weights.as_slice(), &ga);
    let min_inner = ga.iter().cloned().fold(f64::INFINITY, f64::min);
    let direction = combined_direction(gs, &weights).expect("weights match gradient set");
    MinNormSolution {
        weights,
        direction,
        norm_sq,
        certificate_margin: min_inner - norm_sq,
        used_closed_form: closed,
        iterations,
    }
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| math::dot(row, v)).collect()
}

/// Index of the minimum of `vals` (support=false), or of the maximum over the
/// support of `alpha` (support=true). Ties break to the lowest index.
fn argminmax(vals: &[f64], alpha: &[f64], over_support: bool) -> (usize, usize) {
    let mut jmin = 0;
    let mut jmax = usize::MAX;
    for j in 0..vals.len() {
        if vals[j] < vals[jmin] {
            jmin = j;
        }
        if over_support && alpha[j] > 0.0 && (jmax == usize::MAX || vals[j] > vals[jmax]) {
            jmax = j;
        }
    }
    (jmin, if jmax == usize::MAX { 0 } else { jmax })
}

/// Gaussian elimination with partial pivoting; `None` on a vanishing pivot.
fn solve_linear(m: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = m.iter().cloned().collect();
    let mut b = rhs.to_vec();
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0, |acc, &v| acc.max(math::abs(v)));
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if math::abs(a[row][col]) > math::abs(a[piv][col]) {
                piv = row;
            }
        }
        if math::abs(a[piv][col]) <= scale * 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    if math::all_finite(&x) {
        Some(x)
    } else {
        None
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn sym_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let fro_sq: f64 = a.iter().flat_map(|r| r.iter()).map(|v| v * v).sum();
    let off_tol = 1e-28 * fro_sq.max(f64::MIN_POSITIVE);
    for _sweep in 0..50 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off <= off_tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if math::abs(a[p][q]) < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    1.0 / (theta - math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};

    fn gs(v: &[&[f64]]) -> GradientSet {
        GradientSet::new(v.iter().map(|g| g.to_vec()).collect()).unwrap()
    }

    #[test]
    fn gram_orthonormal_is_identity() {
        let g = gram(&gs(&[&[1.0, 0.0], &[0.0, 1.0]]));
        assert_eq!(g, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn gram_rank_one_is_all_twos() {
        let g = gram(&gs(&[&[1.0, 1.0], &[1.0, 1.0]]));
        assert_eq!(g, vec![vec![2.0, 2.0], vec![2.0, 2.0]]);
    }

    #[test]
    fn gram_is_psd_by_random_probing() {
        let mut rng = crate::Rng::seed_from_u64(4);
        for _ in 0..50 {
            let r = rng.gen_range(1..5);
            let n = rng.gen_range(1..8);
            let set = GradientSet::new(
                (0..r)
                    .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect(),
            )
            .unwrap();
            let g = gram(&set);
            for i in 0..r {
                for j in 0..r {
                    assert_eq!(g[i][j], g[j][i]);
                }
            }
            let x: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let quad = math::dot(&x, &matvec(&g, &x));
            assert!(quad >= -1e-12, "x^T G x = {quad}");
        }
    }

    #[test]
    fn singleton_returns_unit_weight() {
        let sol = solve_minnorm_full(&gs(&[&[3.0, -1.0]]));
        assert_eq!(sol.weights.as_slice(), &[1.0]);
        assert_eq!(sol.direction, vec![3.0, -1.0]);
    }

    #[test]
    fn orthogonal_equal_norms_split_evenly() {
        let sol = solve_minnorm_full(&gs(&[&[1.0, 0.0], &[0.0, 1.0]]));
        assert!((sol.weights.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!((sol.direction[0] - 0.5).abs() < 1e-12);
        assert!((sol.direction[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn opposed_collinear_gradients_contain_zero() {
        // Segment between 2 and -1 on the x axis contains the origin.
        let sol = solve_minnorm_full(&gs(&[&[2.0, 0.0], &[-1.0, 0.0]]));
        assert!((sol.weights.as_slice()[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((sol.weights.as_slice()[1] - 2.0 / 3.0).abs() < 1e-9);
        assert!(sol.norm_sq < 1e-18);
    }

    #[test]
    fn dominated_gradient_gets_zero_weight() {
        // Closed-form alpha_1 = 91/82 > 1 clips to the vertex.
        let sol = solve_minnorm_full(&gs(&[&[1.0, 0.0], &[10.0, 1.0]]));
        assert!((sol.weights.as_slice()[0] - 1.0).abs() < 1e-9);
        assert!(sol.weights.as_slice()[1].abs() < 1e-9);
        assert!((sol.direction[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_yields_its_vertex() {
        let sol = solve_minnorm_full(&gs(&[&[1.0, 2.0], &[0.0, 0.0], &[3.0, -1.0]]));
        assert_eq!(sol.weights.as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(sol.direction, vec![0.0, 0.0]);
    }

    #[test]
    fn identical_gradients_tie_break_to_uniform() {
        let sol = solve_minnorm_full(&gs(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]));
        for &a in sol.weights.as_slice() {
            assert!((a - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn combined_direction_vertex_and_midpoint() {
        let set = gs(&[&[2.0, 0.0], &[0.0, 2.0]]);
        let v = combined_direction(&set, &SimplexWeights::vertex(2, 0)).unwrap();
        assert_eq!(v, vec![2.0, 0.0]);
        let m = combined_direction(&set, &SimplexWeights::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(m, vec![1.0, 1.0]);
    }

    #[test]
    fn norm_of_combination_matches_gram_quadratic_form() {
        let mut rng = crate::Rng::seed_from_u64(8);
        for _ in 0..30 {
            let r = rng.gen_range(1..5);
            let n = rng.gen_range(1..10);
            let set = GradientSet::new(
                (0..r)
                    .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect(),
            )
            .unwrap();
            let mut w: Vec<f64> = (0..r).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            for v in w.iter_mut() {
                *v /= s;
            }
            let w = SimplexWeights::new(w).unwrap();
            let q = combined_direction(&set, &w).unwrap();
            let g = gram(&set);
            let quad = math::dot(w.as_slice(), &matvec(&g, w.as_slice()));
            assert!((math::norm_sq(&q) - quad).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_frank_wolfe_when_interior() {
        let mut rng = crate::Rng::seed_from_u64(15);
        let mut tested = 0;
        while tested < 50 {
            let r = rng.gen_range(2..5);
            let n = rng.gen_range(r..12);
            let set = GradientSet::new(
                (0..r)
                    .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect(),
            )
            .unwrap();
            let Some(cf) = closed_form_weights(&set) else {
                continue;
            };
            tested += 1;
            let fw = solve_minnorm_frank_wolfe(&set);
            for j in 0..r {
                assert!(
                    (cf.as_slice()[j] - fw.weights.as_slice()[j]).abs() < 1e-6,
                    "closed form {:?} vs fw {:?}",
                    cf.as_slice(),
                    fw.weights.as_slice()
                );
            }
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let err = GradientSet::new(vec![vec![1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, CoreError::NonFinite { .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn solver_output_is_feasible_and_certified(
            seed in 0u64..10_000,
            r in 1usize..5,
            n in 1usize..10,
        ) {
            let mut rng = crate::Rng::seed_from_u64(seed);
            let set = GradientSet::new(
                (0..r).map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect(),
            ).unwrap();
            let sol = solve_minnorm_full(&set);
            let mut sum = 0.0;
            for &a in sol.weights.as_slice() {
                prop_assert!(a >= 0.0);
                sum += a;
            }
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            // Certificate recomputed against the full-dimension direction.
            let q = combined_direction(&set, &sol.weights).unwrap();
            let qq = math::norm_sq(&q);
            for j in 0..r {
                prop_assert!(math::dot(&q, set.grad(j)) >= qq - 1e-8);
            }
        }

        #[test]
        fn common_positive_rescaling_preserves_weights(
            seed in 0u64..5_000,
            scale_exp in -3.0f64..3.0,
        ) {
            let mut rng = crate::Rng::seed_from_u64(seed);
            let r = rng.gen_range(2..5);
            let n = rng.gen_range(1..10);
            let base: Vec<Vec<f64>> =
                (0..r).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let c = math::powf(10.0, scale_exp);
            let scaled: Vec<Vec<f64>> =
                base.iter().map(|g| g.iter().map(|&v| c * v).collect()).collect();
            let a0 = solve_minnorm(&GradientSet::new(base).unwrap());
            let a1 = solve_minnorm(&GradientSet::new(scaled).unwrap());
            for j in 0..r {
                prop_assert!((a0.as_slice()[j] - a1.as_slice()[j]).abs() <= 1e-10);
            }
        }
    }
}
