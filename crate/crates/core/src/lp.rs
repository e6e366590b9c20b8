//! Dense two-phase simplex for the small linear programs used throughout the
//! crate. Bland's rule guarantees termination on degenerate problems.

use crate::error::{AvcError, Result};

const PIVOT_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-9;
const MAX_ITER: usize = 50_000;

/// `min cᵀx` subject to `A_eq x = b_eq`, `A_ub x ≤ b_ub`, `x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Vec<f64>, f64)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(c: Vec<f64>) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn ub(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let n = self.c.len();
        for row in self.a_eq.iter().chain(&self.a_ub) {
            if row.len() != n {
                return Err(AvcError::LpFailure(format!(
                    "constraint row has {} entries for {} variables",
                    row.len(),
                    n
                )));
            }
        }
        let k = self.a_ub.len();
        let nv = n + k;
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(self.a_eq.len() + k);
        for (row, &b) in self.a_eq.iter().zip(&self.b_eq) {
            let mut r = row.clone();
            r.resize(nv, 0.0);
            rows.push((r, b));
        }
        for (j, (row, &b)) in self.a_ub.iter().zip(&self.b_ub).enumerate() {
            let mut r = row.clone();
            r.resize(nv, 0.0);
            r[n + j] = 1.0;
            rows.push((r, b));
        }
        let mut cost = self.c.clone();
        cost.resize(nv, 0.0);
        let mut tab = Tableau::new(rows, nv);
        match tab.solve(&cost)? {
            Some(status) => Ok(status.truncate(n)),
            None => Ok(LpOutcome::Infeasible),
        }
    }
}

impl LpOutcome {
    fn truncate(self, n: usize) -> Self {
        match self {
            LpOutcome::Optimal { mut x, value } => {
                x.truncate(n);
                LpOutcome::Optimal { x, value }
            }
            other => other,
        }
    }
}

struct Tableau {
    /// `m` rows of `nv + m` coefficients followed by the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    nv: usize,
    width: usize,
}

impl Tableau {
    fn new(rows: Vec<(Vec<f64>, f64)>, nv: usize) -> Self {
        let m = rows.len();
        let width = nv + m;
        let mut t = Vec::with_capacity(m);
        for (i, (mut r, mut b)) in rows.into_iter().enumerate() {
            if b < 0.0 {
                r.iter_mut().for_each(|v| *v = -*v);
                b = -b;
            }
            r.resize(width, 0.0);
            r[nv + i] = 1.0;
            r.push(b);
            t.push(r);
        }
        Self {
            t,
            basis: (nv..nv + m).collect(),
            nv,
            width,
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.width]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.t[r][col];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, &pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
            }
        }
        self.basis[r] = col;
    }

    /// Minimizes `cost` over the current basis using columns `< allowed`.
    /// Returns `false` when unbounded.
    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        for _ in 0..MAX_ITER {
            let m = self.t.len();
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..m {
                    d -= cost[self.basis[i]] * self.t[i][j];
                }
                if d < -PIVOT_EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[i][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, col);
        }
        Err(AvcError::LpFailure(format!(
            "simplex exceeded {MAX_ITER} iterations"
        )))
    }

    /// `None` when infeasible.
    fn solve(&mut self, cost: &[f64]) -> Result<Option<LpOutcome>> {
        let nv = self.nv;
        let mut phase1 = vec![0.0; self.width];
        phase1[nv..].iter_mut().for_each(|v| *v = 1.0);
        self.run(&phase1, self.width)?;
        let infeas: f64 = (0..self.t.len())
            .filter(|&i| self.basis[i] >= nv)
            .map(|i| self.rhs(i))
            .sum();
        let scale = 1.0 + self.t.iter().map(|r| r[self.width].abs()).fold(0.0, f64::max);
        if infeas > FEAS_EPS * scale {
            return Ok(None);
        }
        // Drive artificials out of the basis; rows where that is impossible
        // are redundant.
        let mut i = 0;
        while i < self.t.len() {
            if self.basis[i] >= nv {
                match (0..nv).find(|&j| self.t[i][j].abs() > 1e-9) {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.t.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        let mut full_cost = cost.to_vec();
        full_cost.resize(self.width, 0.0);
        if !self.run(&full_cost, nv)? {
            return Ok(Some(LpOutcome::Unbounded));
        }
        let mut x = vec![0.0; nv];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < nv {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        let value = x.iter().zip(cost).map(|(a, b)| a * b).sum();
        Ok(Some(LpOutcome::Optimal { x, value }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(lp: &LinearProgram) -> (Vec<f64>, f64) {
        lp.solve().unwrap().optimal().unwrap()
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let lp = LinearProgram::new(vec![-3.0, -5.0])
            .ub(vec![1.0, 0.0], 4.0)
            .ub(vec![0.0, 2.0], 12.0)
            .ub(vec![3.0, 2.0], 18.0);
        let (x, v) = opt(&lp);
        assert!((v + 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn equality_with_redundant_rows() {
        let lp = LinearProgram::new(vec![1.0, 2.0, 3.0])
            .eq(vec![1.0, 1.0, 1.0], 1.0)
            .eq(vec![2.0, 2.0, 2.0], 2.0)
            .eq(vec![0.0, 1.0, 0.0], 0.25);
        let (x, v) = opt(&lp);
        assert!((v - 1.25).abs() < 1e-12);
        assert!((x[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram::new(vec![1.0])
            .eq(vec![1.0], 1.0)
            .ub(vec![1.0], 0.5);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
        let lp = LinearProgram::new(vec![-1.0, 0.0]).eq(vec![1.0, -1.0], 0.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_right_hand_side() {
        // x - y = -1, min x + y → (0, 1)
        let lp = LinearProgram::new(vec![1.0, 1.0]).eq(vec![1.0, -1.0], -1.0);
        let (x, v) = opt(&lp);
        assert!((v - 1.0).abs() < 1e-12 && x[1] > 0.99);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the largest-coefficient rule.
        let lp = LinearProgram::new(vec![-0.75, 150.0, -0.02, 6.0])
            .ub(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .ub(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .ub(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let (_, v) = opt(&lp);
        assert!((v + 0.05).abs() < 1e-12);
    }
}
