//! Symmetrizability: the linear program for `Λ₀(P_X)`, the decision whether the
//! channel is symmetrizable under the cost constraints, and the divergence
//! radius `η*` below which the decoder's pair test is unambiguous.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channel::{check_size, Avc, CondDist, Dist};
use crate::convex::{minimize, Objective, Polytope, SolveOptions};
use crate::error::{AvcError, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::scalar::Scalar;
use crate::search::{pattern_search, project_to_budget, simplex_grid, within_budget};

/// Tolerance on `max Λ₀ ≤ Λ` in the symmetrizability decision.
pub const DECISION_TOL: f64 = 1e-9;

/// Value of the symmetrizing linear program.
#[derive(Clone, Debug, PartialEq)]
pub struct SymResult<T: Scalar = f64> {
    /// `Λ₀(P_X)`; `+inf` when no symmetrizing `P_{S|X}` exists.
    pub lambda0: T,
    /// Optimal `P_{S|X}`. Rows outside the support of `P_X` are point masses on
    /// the cheapest state.
    pub witness: Option<CondDist<T>>,
}

/// `Λ₀(P_X) = min Σ P_X(x) U(s|x) ℓ(s)` over `U` with
/// `Σ_s U(s|x) W(y|x',s) = Σ_s U(s|x') W(y|x,s)` for all `x, x'` in the support.
pub fn lambda0<T: Scalar>(px: &Dist<T>, avc: &Avc<T>) -> Result<SymResult<T>> {
    check_size(avc.input_size(), px.len())?;
    let (ns, ny) = (avc.state_size(), avc.output_size());
    let support: Vec<usize> = px.support().collect();
    let k = support.len();
    let idx = |xi: usize, s: usize| xi * ns + s;
    let w = |x: usize, s: usize, y: usize| avc.w(x, s, y).to_f64_lossy();
    let ell: Vec<f64> = avc.ell().iter().map(|v| v.to_f64_lossy()).collect();
    let pxv: Vec<f64> = px.probs().iter().map(|v| v.to_f64_lossy()).collect();

    let mut c = vec![0.0; k * ns];
    for (xi, &x) in support.iter().enumerate() {
        for s in 0..ns {
            c[idx(xi, s)] = pxv[x] * ell[s];
        }
    }
    let mut lp = LinearProgram::new(c);
    for xi in 0..k {
        let mut row = vec![0.0; k * ns];
        row[xi * ns..(xi + 1) * ns].iter_mut().for_each(|v| *v = 1.0);
        lp = lp.eq(row, 1.0);
    }
    for a in 0..k {
        for b in a + 1..k {
            let (x, xp) = (support[a], support[b]);
            for y in 0..ny {
                let mut row = vec![0.0; k * ns];
                for s in 0..ns {
                    row[idx(a, s)] += w(xp, s, y);
                    row[idx(b, s)] -= w(x, s, y);
                }
                lp = lp.eq(row, 0.0);
            }
        }
    }
    match lp.solve()? {
        LpOutcome::Optimal { x: u, value } => {
            let cheapest = (0..ns)
                .min_by(|&a, &b| ell[a].total_cmp(&ell[b]))
                .unwrap_or(0);
            let mut m = vec![T::zero(); avc.input_size() * ns];
            for x in 0..avc.input_size() {
                match support.iter().position(|&v| v == x) {
                    Some(xi) => {
                        let row: Vec<f64> = (0..ns).map(|s| u[idx(xi, s)].max(0.0)).collect();
                        let total: f64 = row.iter().sum();
                        for s in 0..ns {
                            m[x * ns + s] = T::c(row[s] / total);
                        }
                    }
                    None => m[x * ns + cheapest] = T::one(),
                }
            }
            Ok(SymResult {
                lambda0: T::c(value.max(0.0)),
                witness: Some(CondDist::new(avc.input_size(), ns, m)?),
            })
        }
        LpOutcome::Infeasible => Ok(SymResult {
            lambda0: T::infinity(),
            witness: None,
        }),
        LpOutcome::Unbounded => Err(AvcError::LpFailure("symmetrizing LP unbounded".into())),
    }
}

/// Largest violation of the symmetrizing identity by `witness` over pairs in
/// the support of `px`.
pub fn symmetrizing_residual<T: Scalar>(px: &Dist<T>, avc: &Avc<T>, witness: &CondDist<T>) -> T {
    let support: Vec<usize> = px.support().collect();
    let mut worst = T::zero();
    for &x in &support {
        for &xp in &support {
            for y in 0..avc.output_size() {
                let lhs: T = (0..avc.state_size())
                    .map(|s| witness.get(x, s) * avc.w(xp, s, y))
                    .sum();
                let rhs: T = (0..avc.state_size())
                    .map(|s| witness.get(xp, s) * avc.w(x, s, y))
                    .sum();
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

/// Outcome of the symmetrizability search.
#[derive(Clone, Debug, PartialEq)]
pub struct SymDecision {
    pub symmetrizable: bool,
    /// Input distribution with the largest `Λ₀` found.
    pub certificate: Dist,
    pub max_lambda0: f64,
    /// True when the universal quantifier over inputs was discharged by search
    /// rather than exhaustively.
    pub heuristic: bool,
}

fn lambda0_value(p: &[f64], avc: &Avc) -> f64 {
    Dist::from_weights(p)
        .and_then(|d| lambda0(&d, avc))
        .map(|r| r.lambda0)
        .unwrap_or(f64::NEG_INFINITY)
}

/// Decides whether `Λ₀(P_X) ≤ Λ` for every cost-feasible `P_X`, scanning a
/// simplex grid of spacing `resolution` together with its projection onto the
/// cost boundary, then refining the best candidates locally.
pub fn is_symmetrizable(avc: &Avc, resolution: f64) -> Result<SymDecision> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(AvcError::InvalidArgument(format!(
            "grid resolution {resolution} outside (0, 1]"
        )));
    }
    let nx = avc.input_size();
    let g = avc.g().to_vec();
    let gamma = avc.gamma();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for p in simplex_grid(nx, resolution) {
        if within_budget(&p, &g, gamma) {
            candidates.push(p);
        } else if let Some(q) = project_to_budget(&p, &g, gamma) {
            candidates.push(q);
        }
    }
    let mut scored: Vec<(f64, Vec<f64>)> = candidates
        .into_par_iter()
        .map(|p| (lambda0_value(&p, avc), p))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    if scored.is_empty() {
        return Err(AvcError::InvalidArgument("no cost-feasible input distribution".into()));
    }
    let (mut best_val, mut best_p) = scored[0].clone();
    if best_val.is_finite() && nx > 1 {
        let refined: Vec<(Vec<f64>, f64)> = scored
            .iter()
            .take(4)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(_, p)| pattern_search(p, &g, gamma, resolution, 1e-7, |q| lambda0_value(q, avc)))
            .collect();
        for (p, v) in refined {
            if v > best_val {
                best_val = v;
                best_p = p;
            }
        }
    }
    Ok(SymDecision {
        symmetrizable: best_val <= avc.lambda() + DECISION_TOL,
        certificate: Dist::from_weights(&best_p)?,
        max_lambda0: best_val,
        heuristic: nx > 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaMethod {
    /// `Λ₀(P_X) ≤ Λ`: a symmetrizing distribution puts a zero-divergence point
    /// in both sets, so `η* = 0`.
    Construction,
    /// Convex minimization with a duality-gap certificate.
    Optimization,
}

/// Bracket on `η*` in bits.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaResult {
    pub eta_star_lower: f64,
    pub eta_star_upper: f64,
    pub method: EtaMethod,
    /// Set when the bracket is wider than requested or the lower bound failed
    /// to separate from zero although `Λ₀(P_X) > Λ`.
    pub flagged: bool,
}

/// Cell `(x, x', s, s', y)` of the joint distribution over which `η*` optimizes.
#[derive(Clone, Copy, Debug)]
struct Cell {
    x: usize,
    xp: usize,
    s: usize,
    sp: usize,
    y: usize,
}

/// `D(Q_{XX'SY} ‖ P_X × Q_{X'S} × W)` as a function of the cell masses, with the
/// roles of `(x, s)` and `(x', s')` swapped when `swap` is set.
struct Divergence {
    /// cell → index of `(x, x', s, y)`
    a_of: Vec<usize>,
    /// cell → index of `(x', s)`
    b_of: Vec<usize>,
    /// `(x, x', s, y)` index → `P_X(x) W(y|x,s)`
    coef: Vec<f64>,
    /// `(x, x', s, y)` index → `(x', s)` index
    b_of_a: Vec<usize>,
    na: usize,
    nb: usize,
}

impl Divergence {
    fn new(cells: &[Cell], px: &[f64], avc: &Avc, swap: bool) -> Self {
        let (nx, ns, ny) = (avc.input_size(), avc.state_size(), avc.output_size());
        let na = nx * nx * ns * ny;
        let nb = nx * ns;
        let mut a_of = Vec::with_capacity(cells.len());
        let mut b_of = Vec::with_capacity(cells.len());
        let mut coef = vec![0.0; na];
        let mut b_of_a = vec![0; na];
        for c in cells {
            let (x, xp, s) = if swap { (c.xp, c.x, c.sp) } else { (c.x, c.xp, c.s) };
            let a = ((x * nx + xp) * ns + s) * ny + c.y;
            let b = xp * ns + s;
            a_of.push(a);
            b_of.push(b);
            coef[a] = px[x] * avc.w(x, s, c.y);
            b_of_a[a] = b;
        }
        Self {
            a_of,
            b_of,
            coef,
            b_of_a,
            na,
            nb,
        }
    }

    fn marginals(&self, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut qa = vec![0.0; self.na];
        let mut qb = vec![0.0; self.nb];
        for (c, &v) in q.iter().enumerate() {
            qa[self.a_of[c]] += v;
            qb[self.b_of[c]] += v;
        }
        (qa, qb)
    }

    /// In nats.
    fn value(&self, q: &[f64]) -> f64 {
        if q.iter().any(|v| *v < 0.0) {
            return f64::NAN;
        }
        let (qa, qb) = self.marginals(q);
        qa.iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(a, &v)| v * (v / (qb[self.b_of_a[a]] * self.coef[a])).ln())
            .sum()
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let (qa, qb) = self.marginals(q);
        (0..q.len())
            .map(|c| {
                let a = self.a_of[c];
                (qa[a] / (qb[self.b_of[c]] * self.coef[a])).ln()
            })
            .collect()
    }

    fn add_hessian(&self, q: &[f64], weight: f64, h: &mut DMatrix<f64>) {
        let (qa, qb) = self.marginals(q);
        for c in 0..q.len() {
            for d in 0..q.len() {
                let mut v = 0.0;
                if self.a_of[c] == self.a_of[d] {
                    v += 1.0 / qa[self.a_of[c]];
                }
                if self.b_of[c] == self.b_of[d] {
                    v -= 1.0 / qb[self.b_of[c]];
                }
                h[(c, d)] += weight * v;
            }
        }
    }
}

struct EtaObjective {
    d1: Divergence,
    d2: Divergence,
}

impl Objective for EtaObjective {
    fn value(&self, q: &[f64]) -> f64 {
        0.5 * (self.d1.value(q) + self.d2.value(q))
    }
    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        self.d1
            .gradient(q)
            .iter()
            .zip(self.d2.gradient(q))
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
    fn hessian(&self, q: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(q.len(), q.len());
        self.d1.add_hessian(q, 0.5, &mut h);
        self.d2.add_hessian(q, 0.5, &mut h);
        h
    }
}

/// Cap on the number of joint cells in the `η*` program.
pub const ETA_CELL_LIMIT: usize = 512;

/// Brackets `η* = inf max(D(Q_{XX'SY} ‖ P_X × Q_{X'S} × W), D(Q_{X'XS'Y} ‖ P_X × Q_{XS'} × W))`
/// over joint `Q_{XX'SS'Y}` whose state marginals meet the budget `Λ`.
///
/// The problem is invariant under swapping `(x, s)` with `(x', s')`, so a
/// symmetric minimizer exists and `η*` equals the minimum of the average of
/// the two divergences, which is convex.
pub fn eta_star(px: &Dist, avc: &Avc) -> Result<EtaResult> {
    if px.probs().iter().any(|&v| v <= 0.0) {
        return Err(AvcError::InvalidArgument(
            "eta_star requires an input distribution with full support".into(),
        ));
    }
    check_size(avc.input_size(), px.len())?;
    let lam0 = lambda0(px, avc)?.lambda0;
    if lam0 <= avc.lambda() + DECISION_TOL {
        return Ok(EtaResult {
            eta_star_lower: 0.0,
            eta_star_upper: 0.0,
            method: EtaMethod::Construction,
            flagged: false,
        });
    }
    let (nx, ns, ny) = (avc.input_size(), avc.state_size(), avc.output_size());
    let mut cells = Vec::new();
    for x in 0..nx {
        for xp in 0..nx {
            for s in 0..ns {
                for sp in 0..ns {
                    for y in 0..ny {
                        if avc.w(x, s, y) > 0.0 && avc.w(xp, sp, y) > 0.0 {
                            cells.push(Cell { x, xp, s, sp, y });
                        }
                    }
                }
            }
        }
    }
    if cells.len() > ETA_CELL_LIMIT {
        return Err(AvcError::GuardExceeded {
            what: "joint cells in the eta* program".into(),
            needed: cells.len() as u128,
            limit: ETA_CELL_LIMIT as u128,
        });
    }
    let pxv = px.probs().to_vec();
    let ell = avc.ell();
    let poly = Polytope::simplex(cells.len())
        .with_ub(cells.iter().map(|c| ell[c.s]).collect(), avc.lambda())
        .with_ub(cells.iter().map(|c| ell[c.sp]).collect(), avc.lambda());
    let prep = poly.prepare()?;
    let obj = EtaObjective {
        d1: Divergence::new(&cells, &pxv, avc, false),
        d2: Divergence::new(&cells, &pxv, avc, true),
    };
    let sol = minimize(&obj, &prep, None, &SolveOptions::default())?;
    // Average with the swapped point so both divergences coincide.
    let swap_index = |c: &Cell| {
        cells
            .iter()
            .position(|d| d.x == c.xp && d.xp == c.x && d.s == c.sp && d.sp == c.s && d.y == c.y)
            .expect("cell set closed under swapping")
    };
    let sym: Vec<f64> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| 0.5 * (sol.p[i] + sol.p[swap_index(c)]))
        .collect();
    let upper_nats = obj.d1.value(&sym).max(obj.d2.value(&sym)).min(
        obj.d1.value(&sol.p).max(obj.d2.value(&sol.p)),
    );
    let ln2 = std::f64::consts::LN_2;
    let lower = (sol.lower_bound / ln2).max(0.0);
    let upper = (upper_nats / ln2).max(lower);
    Ok(EtaResult {
        eta_star_lower: lower,
        eta_star_upper: upper,
        method: EtaMethod::Optimization,
        flagged: lower <= 0.0 || upper - lower > 1e-6,
    })
}
