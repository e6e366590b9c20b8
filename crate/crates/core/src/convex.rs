//! Log-barrier Newton solver for smooth convex objectives over polytopes
//! `{p ≥ 0, E p = e, A p ≤ b}`, with a Frank-Wolfe duality-gap certificate.

use nalgebra::{DMatrix, DVector};

use crate::error::{AvcError, Result};
use crate::lp::{LinearProgram, LpOutcome};

const ZERO_TOL: f64 = 1e-10;

/// Smooth convex function on the relative interior of a polytope. `value`
/// may return `+inf` or NaN outside its domain.
pub trait Objective {
    fn value(&self, p: &[f64]) -> f64;
    fn gradient(&self, p: &[f64]) -> Vec<f64>;
    fn hessian(&self, p: &[f64]) -> DMatrix<f64>;
}

#[derive(Clone, Debug)]
pub struct Polytope {
    pub n: usize,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub ub: Vec<(Vec<f64>, f64)>,
}

impl Polytope {
    /// The probability simplex on `n` points.
    pub fn simplex(n: usize) -> Self {
        Self {
            n,
            eq: vec![(vec![1.0; n], 1.0)],
            ub: Vec::new(),
        }
    }

    pub fn with_ub(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ub.push((row, rhs));
        self
    }

    pub fn with_eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq.push((row, rhs));
        self
    }

    pub fn lp(&self, c: Vec<f64>) -> LinearProgram {
        let mut lp = LinearProgram::new(c);
        for (r, b) in &self.eq {
            lp = lp.eq(r.clone(), *b);
        }
        for (r, b) in &self.ub {
            lp = lp.ub(r.clone(), *b);
        }
        lp
    }

    /// `min cᵀq` over the polytope.
    pub fn minimize_linear(&self, c: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.lp(c.to_vec())
            .solve()?
            .optimal()
            .ok_or_else(|| AvcError::LpFailure("linear minimization over polytope failed".into()))
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.n
            && p.iter().all(|&v| v >= -tol)
            && self.eq.iter().all(|(r, b)| (dot(r, p) - b).abs() <= tol)
            && self.ub.iter().all(|(r, b)| dot(r, p) <= b + tol)
    }

    /// Detects variables forced to zero, inequalities tight on the whole set and
    /// redundant inequalities, and finds a relative-interior starting point.
    pub fn prepare(&self) -> Result<Prepared> {
        let n = self.n;
        let mut points = Vec::new();
        let mut active = Vec::new();
        for i in 0..n {
            let mut c = vec![0.0; n];
            c[i] = -1.0;
            let (x, v) = self
                .lp(c)
                .solve()?
                .optimal()
                .ok_or_else(|| AvcError::InvalidArgument("empty feasible set".into()))?;
            if -v > ZERO_TOL {
                active.push(i);
                points.push(x);
            }
        }
        if active.is_empty() {
            return Err(AvcError::InvalidArgument("empty feasible set".into()));
        }
        let mut implicit = Vec::new();
        let mut rows = Vec::new();
        for (j, (r, b)) in self.ub.iter().enumerate() {
            let (xmin, vmin) = self.minimize_linear(r)?;
            let mut without = self.clone();
            without.ub.remove(j);
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let vmax = match without.lp(neg).solve()? {
                LpOutcome::Optimal { value, .. } => value,
                _ => f64::NEG_INFINITY,
            };
            if vmin >= b - ZERO_TOL {
                implicit.push(j);
            } else if -vmax > b + ZERO_TOL {
                rows.push(j);
                points.push(xmin);
            }
        }
        let mut start = vec![0.0; n];
        for x in &points {
            for (s, v) in start.iter_mut().zip(x) {
                *s += v / points.len() as f64;
            }
        }
        for i in 0..n {
            if !active.contains(&i) {
                start[i] = 0.0;
            }
        }
        let eq_rows: Vec<Vec<f64>> = self
            .eq
            .iter()
            .map(|(r, _)| r.clone())
            .chain(implicit.iter().map(|&j| self.ub[j].0.clone()))
            .map(|r| active.iter().map(|&i| r[i]).collect())
            .collect();
        let null = null_space(&eq_rows, active.len());
        Ok(Prepared {
            poly: self.clone(),
            active,
            rows,
            null,
            start,
        })
    }
}

/// A polytope with its degeneracies resolved, ready for repeated solves.
#[derive(Clone, Debug)]
pub struct Prepared {
    poly: Polytope,
    active: Vec<usize>,
    rows: Vec<usize>,
    null: DMatrix<f64>,
    start: Vec<f64>,
}

impl Prepared {
    pub fn polytope(&self) -> &Polytope {
        &self.poly
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    /// Affine dimension of the feasible set.
    pub fn dimension(&self) -> usize {
        self.null.ncols()
    }

    /// Indices of variables not forced to zero.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub(crate) fn null(&self) -> &DMatrix<f64> {
        &self.null
    }

    /// Gradient and Hessian of `-Σ ln p_i - Σ ln(b_j - a_jᵀp)` over all
    /// coordinates, zero on inactive ones.
    pub(crate) fn barrier_derivs(&self, p: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.poly.n;
        let mut g = vec![0.0; n];
        let mut h = DMatrix::zeros(n, n);
        for &i in &self.active {
            g[i] -= 1.0 / p[i];
            h[(i, i)] += 1.0 / (p[i] * p[i]);
        }
        for j in 0..self.rows.len() {
            let r = &self.poly.ub[self.rows[j]].0;
            let s = self.slack(j, p);
            for &i in &self.active {
                g[i] += r[i] / s;
                for &k in &self.active {
                    h[(i, k)] += r[i] * r[k] / (s * s);
                }
            }
        }
        (g, h)
    }

    /// Number of barrier terms.
    pub(crate) fn barrier_count(&self) -> usize {
        self.active.len() + self.rows.len()
    }

    fn slack(&self, j: usize, p: &[f64]) -> f64 {
        let (r, b) = &self.poly.ub[self.rows[j]];
        b - dot(r, p)
    }

    pub(crate) fn strictly_inside(&self, p: &[f64]) -> bool {
        self.active.iter().all(|&i| p[i] > 0.0)
            && (0..self.rows.len()).all(|j| self.slack(j, p) > 0.0)
    }

    fn barrier_value(&self, p: &[f64]) -> f64 {
        -self.active.iter().map(|&i| p[i].ln()).sum::<f64>()
            - (0..self.rows.len()).map(|j| self.slack(j, p).ln()).sum::<f64>()
    }

    /// Largest step along `d` keeping the iterate strictly feasible.
    pub(crate) fn max_step(&self, p: &[f64], d: &[f64]) -> f64 {
        let mut s = f64::INFINITY;
        for &i in &self.active {
            if d[i] < 0.0 {
                s = s.min(-p[i] / d[i]);
            }
        }
        for j in 0..self.rows.len() {
            let rate = dot(&self.poly.ub[self.rows[j]].0, d);
            if rate > 0.0 {
                s = s.min(self.slack(j, p) / rate);
            }
        }
        s
    }

    /// Frank-Wolfe gap `∇F(p)ᵀp - min_q ∇F(p)ᵀq`.
    pub fn fw_gap(&self, grad: &[f64], p: &[f64]) -> Result<f64> {
        let mut c = vec![0.0; self.poly.n];
        for &i in &self.active {
            c[i] = grad[i];
        }
        let (_, v) = self.poly.minimize_linear(&c)?;
        Ok((dot(&c, p) - v).max(0.0))
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Target Frank-Wolfe gap.
    pub tol: f64,
    pub max_newton: usize,
    pub t_max: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_newton: 5_000,
            t_max: 1e15,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvexSolution {
    pub p: Vec<f64>,
    pub value: f64,
    pub fw_gap: f64,
    /// Certified lower bound `value - fw_gap` on the minimum.
    pub lower_bound: f64,
    pub newton_steps: usize,
}

/// Minimizes `obj` over the prepared polytope, starting from `warm` when given
/// and strictly feasible.
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    prep: &Prepared,
    warm: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<ConvexSolution> {
    let n = prep.poly.n;
    let mut p = prep.start.clone();
    if let Some(w) = warm {
        if w.len() == n && prep.strictly_inside(w) && prep.poly.contains(w, 1e-12) {
            // warm points often sit on a face; the barrier Hessian there is
            // numerically rank deficient
            p = w.iter().zip(&prep.start).map(|(a, b)| a + 0.01 * (b - a)).collect();
        }
    }
    if prep.dimension() == 0 {
        let value = obj.value(&p);
        return Ok(ConvexSolution {
            p,
            value,
            fw_gap: 0.0,
            lower_bound: value,
            newton_steps: 0,
        });
    }
    let m = (prep.active.len() + prep.rows.len()) as f64;
    let mut t = 1.0;
    let mut steps = 0;
    let mut best_gap = f64::INFINITY;
    loop {
        steps += center(obj, prep, &mut p, t, opts.max_newton.saturating_sub(steps))?;
        if m / t < 1e-5 || t >= opts.t_max || steps >= opts.max_newton {
            let grad = obj.gradient(&p);
            let gap = prep.fw_gap(&grad, &p)?;
            best_gap = best_gap.min(gap);
            if gap <= opts.tol || t >= opts.t_max || steps >= opts.max_newton {
                let value = obj.value(&p);
                if !value.is_finite() {
                    return Err(AvcError::NonConvergence {
                        iterations: steps,
                        gap: best_gap,
                        detail: "objective not finite at the barrier iterate".into(),
                    });
                }
                return Ok(ConvexSolution {
                    p,
                    value,
                    fw_gap: gap,
                    lower_bound: value - gap,
                    newton_steps: steps,
                });
            }
        }
        t *= 10.0;
    }
}

/// Newton centering for `t·F + barrier`; returns the number of steps taken.
fn center<O: Objective + ?Sized>(
    obj: &O,
    prep: &Prepared,
    p: &mut Vec<f64>,
    t: f64,
    budget: usize,
) -> Result<usize> {
    let na = prep.active.len();
    let phi = |q: &[f64]| {
        let f = obj.value(q);
        if f.is_nan() {
            f64::INFINITY
        } else {
            t * f + prep.barrier_value(q)
        }
    };
    for step in 0..budget.max(1) {
        let gf = obj.gradient(p);
        let hf = obj.hessian(p);
        let mut g = DVector::zeros(na);
        let mut h = DMatrix::zeros(na, na);
        for (a, &i) in prep.active.iter().enumerate() {
            g[a] = t * gf[i] - 1.0 / p[i];
            h[(a, a)] += 1.0 / (p[i] * p[i]);
            for (b, &k) in prep.active.iter().enumerate() {
                h[(a, b)] += t * hf[(i, k)];
            }
        }
        for j in 0..prep.rows.len() {
            let r = &prep.poly.ub[prep.rows[j]].0;
            let s = prep.slack(j, p);
            for (a, &i) in prep.active.iter().enumerate() {
                g[a] += r[i] / s;
                for (b, &k) in prep.active.iter().enumerate() {
                    h[(a, b)] += r[i] * r[k] / (s * s);
                }
            }
        }
        let nt = prep.null.transpose();
        let gz = &nt * &g;
        let hz = &nt * &h * &prep.null;
        let dz = solve_spd(hz, -&gz).ok_or_else(|| AvcError::NonConvergence {
            iterations: step,
            gap: f64::NAN,
            detail: "singular Newton system".into(),
        })?;
        let decrement = -gz.dot(&dz);
        if !(decrement > 1e-14) {
            return Ok(step);
        }
        let dp_active = &prep.null * &dz;
        let mut dp = vec![0.0; p.len()];
        for (a, &i) in prep.active.iter().enumerate() {
            dp[i] = dp_active[a];
        }
        let mut s = (0.99 * prep.max_step(p, &dp)).min(1.0);
        let trial = |s: f64| -> Vec<f64> { p.iter().zip(&dp).map(|(a, b)| a + s * b).collect() };
        if decrement > 0.1 {
            let f0 = phi(p);
            loop {
                let q = trial(s);
                if phi(&q) <= f0 - 0.25 * s * decrement {
                    break;
                }
                s *= 0.5;
                if s < 1e-14 {
                    return Ok(step);
                }
            }
        }
        let q = trial(s);
        if !prep.strictly_inside(&q) {
            return Ok(step);
        }
        *p = q;
    }
    Ok(budget)
}

fn solve_spd(h: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    // Symmetric diagonal scaling keeps the barrier's huge diagonal entries
    // from swamping the factorization.
    let d: Vec<f64> = (0..h.nrows())
        .map(|i| 1.0 / h[(i, i)].abs().max(1e-300).sqrt())
        .collect();
    let scaled = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * d[i] * d[j]);
    let srhs = DVector::from_fn(rhs.len(), |i, _| rhs[i] * d[i]);
    let ridged = &scaled + DMatrix::identity(h.nrows(), h.nrows()) * 1e-10;
    let y = match scaled.clone().cholesky().or_else(|| ridged.cholesky()) {
        Some(c) => c.solve(&srhs),
        None => scaled.lu().solve(&srhs)?,
    };
    let x = DVector::from_fn(y.len(), |i, _| y[i] * d[i]);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Orthonormal basis of `{v : E v = 0}` as columns.
fn null_space(rows: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    if rows.is_empty() {
        return DMatrix::identity(n, n);
    }
    let e = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let gram = e.transpose() * &e;
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * scale)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `Σ p_i ln(p_i / r_i)`
    struct Kl(Vec<f64>);

    impl Objective for Kl {
        fn value(&self, p: &[f64]) -> f64 {
            p.iter()
                .zip(&self.0)
                .filter(|(&a, _)| a > 0.0)
                .map(|(a, r)| a * (a / r).ln())
                .sum()
        }
        fn gradient(&self, p: &[f64]) -> Vec<f64> {
            p.iter().zip(&self.0).map(|(a, r)| (a / r).ln() + 1.0).collect()
        }
        fn hessian(&self, p: &[f64]) -> DMatrix<f64> {
            DMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|a| 1.0 / a)))
        }
    }

    struct Linear(Vec<f64>);

    impl Objective for Linear {
        fn value(&self, p: &[f64]) -> f64 {
            dot(&self.0, p)
        }
        fn gradient(&self, _: &[f64]) -> Vec<f64> {
            self.0.clone()
        }
        fn hessian(&self, p: &[f64]) -> DMatrix<f64> {
            DMatrix::zeros(p.len(), p.len())
        }
    }

    #[test]
    fn unconstrained_kl_minimum_is_reference() {
        let r = vec![0.2, 0.3, 0.5];
        let prep = Polytope::simplex(3).prepare().unwrap();
        let sol = minimize(&Kl(r.clone()), &prep, None, &SolveOptions::default()).unwrap();
        for (a, b) in sol.p.iter().zip(&r) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(sol.value.abs() < 1e-12);
    }

    #[test]
    fn constrained_kl_is_tilted() {
        // min D(p‖r) s.t. E_p[c] ≤ 0.2 is an exponential tilt of r.
        let r = vec![0.25; 4];
        let c = vec![0.0, 1.0, 1.0, 0.0];
        let prep = Polytope::simplex(4).with_ub(c.clone(), 0.2).prepare().unwrap();
        let sol = minimize(&Kl(r), &prep, None, &SolveOptions::default()).unwrap();
        assert!((dot(&c, &sol.p) - 0.2).abs() < 1e-8);
        assert!((sol.p[0] - 0.4).abs() < 1e-8 && (sol.p[1] - 0.1).abs() < 1e-8);
        let exact = 0.8 * (0.8f64 / 0.5).ln() + 0.2 * (0.2f64 / 0.5).ln();
        assert!((sol.value - exact).abs() < 1e-10);
        assert!(sol.lower_bound <= exact + 1e-12);
    }

    #[test]
    fn linear_objective_reaches_vertex() {
        let prep = Polytope::simplex(3).prepare().unwrap();
        let sol = minimize(&Linear(vec![3.0, 1.0, 2.0]), &prep, None, &SolveOptions::default())
            .unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_budget_forces_zeros() {
        // cost budget equal to the minimum cost pins the point
        let prep = Polytope::simplex(2)
            .with_ub(vec![0.0, 1.0], 0.0)
            .prepare()
            .unwrap();
        assert_eq!(prep.active(), &[0]);
        assert_eq!(prep.dimension(), 0);
        let sol = minimize(&Kl(vec![0.5, 0.5]), &prep, None, &SolveOptions::default()).unwrap();
        assert_eq!(sol.p, vec![1.0, 0.0]);
        // redundant budget
        let prep = Polytope::simplex(2).with_ub(vec![0.0, 1.0], 2.0).prepare().unwrap();
        assert_eq!(prep.dimension(), 1);
        // tight on the whole set
        let prep = Polytope::simplex(3)
            .with_ub(vec![1.0, 1.0, 1.0], 1.0)
            .prepare()
            .unwrap();
        assert_eq!(prep.dimension(), 2);
    }

    #[test]
    fn empty_polytope_is_an_error() {
        assert!(Polytope::simplex(2)
            .with_ub(vec![1.0, 1.0], 0.5)
            .prepare()
            .is_err());
    }
}
