//! Max-min mutual information problems defining the capacity `C` and the random
//! code capacity `C_r`, their optimal sets and the dispersions `V₊`, `V₋`.
//!
//! The saddle point is found by path-following Newton on the barrier
//! Lagrangian `t·I(P_X, P_S W) + log-barrier(P_X) - log-barrier(P_S)`, then
//! certified by solving the inner minimization at the returned `P_X` and the
//! inner maximization at the returned `P_S` separately.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::channel::Avc;
use crate::channel::Dist;
use crate::convex::{minimize, ConvexSolution, Objective, Polytope, Prepared, SolveOptions};
use crate::error::{AvcError, Result};
use crate::info::dispersion_v;
use crate::search::{pattern_search, project_to_budget, simplex_grid, within_budget};
use crate::symmetrize::{is_symmetrizable, lambda0, SymDecision};

const LN2: f64 = std::f64::consts::LN_2;

/// Sets whose representatives span at most this (sup-norm) diameter are
/// treated as singletons.
pub const SINGLETON_DIAMETER: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct SaddleOptions {
    /// Certified bound on `|max-min - min-max|`, in bits.
    pub tol: f64,
    /// Newton iteration budget for the path-following solver.
    pub max_iter: usize,
    /// Simplex grid spacing for the symmetrizability scan and the restricted
    /// capacity search.
    pub resolution: f64,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 10_000,
            resolution: 0.01,
        }
    }
}

impl SaddleOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// Membership threshold for the optimal sets.
    pub fn opt_tol(&self) -> f64 {
        10.0 * self.tol
    }
}

/// Solution of one of the two max-min problems.
#[derive(Clone, Debug)]
pub struct SaddleSolution {
    /// Saddle value in bits.
    pub value: f64,
    /// `min_{P_S} I(P_X*, P_S W)` at the returned input.
    pub max_min: f64,
    /// `max_{P_X} I(P_X, P_S* W)` at the returned state distribution.
    pub min_max: f64,
    /// `min_max - max_min`.
    pub gap: f64,
    /// Representatives of the optimal input set; the first is the solver's
    /// optimum.
    pub px_opt: Vec<Dist>,
    /// Representatives of the optimal state set; the first is the solver's
    /// optimum.
    pub ps_opt: Vec<Dist>,
    /// `min_{P_X} max_{P_S} V` over the representatives.
    pub v_plus: f64,
    /// `max_{P_S} min_{P_X} V` over the representatives.
    pub v_minus: f64,
    /// Index into `px_opt` of the input attaining `v_plus`.
    pub v_plus_at: usize,
    pub px_singleton: bool,
    pub ps_singleton: bool,
    /// Set when an optimal set is a continuum represented by finitely many
    /// points, or the outer search was not convex.
    pub heuristic: bool,
}

impl SaddleSolution {
    pub fn px_star(&self) -> &Dist {
        &self.px_opt[0]
    }

    pub fn ps_star(&self) -> &Dist {
        &self.ps_opt[0]
    }
}

/// Output of [`capacity`].
#[derive(Clone, Debug)]
pub enum Capacity {
    /// The channel is symmetrizable and its capacity is zero.
    Symmetrizable(SymDecision),
    Positive(SaddleSolution),
}

impl Capacity {
    pub fn value(&self) -> f64 {
        match self {
            Capacity::Symmetrizable(_) => 0.0,
            Capacity::Positive(s) => s.value,
        }
    }

    pub fn solution(&self) -> Option<&SaddleSolution> {
        match self {
            Capacity::Positive(s) => Some(s),
            Capacity::Symmetrizable(_) => None,
        }
    }
}

/// Output densities and log-ratios shared by the derivative formulas (nats).
struct Joint {
    nx: usize,
    ns: usize,
    ny: usize,
    /// `(P_S W)(y|x)`
    v: Vec<f64>,
    /// `(P_X P_S W)(y)`
    q: Vec<f64>,
    /// `ln V/q`, zero where `V = 0` or `q = 0`.
    lr: Vec<f64>,
}

impl Joint {
    fn new(avc: &Avc, px: &[f64], ps: &[f64]) -> Self {
        let (nx, ns, ny) = (avc.input_size(), avc.state_size(), avc.output_size());
        let mut v = vec![0.0; nx * ny];
        for x in 0..nx {
            for s in 0..ns {
                if ps[s] == 0.0 {
                    continue;
                }
                for y in 0..ny {
                    v[x * ny + y] += ps[s] * avc.w(x, s, y);
                }
            }
        }
        let mut q = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                q[y] += px[x] * v[x * ny + y];
            }
        }
        let lr = (0..nx * ny)
            .map(|i| {
                let (vv, qq) = (v[i], q[i % ny]);
                if vv > 0.0 && qq > 0.0 {
                    (vv / qq).ln()
                } else {
                    0.0
                }
            })
            .collect();
        Self { nx, ns, ny, v, q, lr }
    }

    fn mi(&self, px: &[f64]) -> f64 {
        (0..self.nx)
            .filter(|&x| px[x] > 0.0)
            .map(|x| {
                px[x]
                    * (0..self.ny)
                        .map(|y| self.v[x * self.ny + y] * self.lr[x * self.ny + y])
                        .sum::<f64>()
            })
            .sum()
    }

    fn grad_px(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| {
                (0..self.ny)
                    .map(|y| self.v[x * self.ny + y] * self.lr[x * self.ny + y])
                    .sum::<f64>()
                    - 1.0
            })
            .collect()
    }

    /// `a_s(y) = Σ_x P_X(x) W(y|x,s)`
    fn a(&self, avc: &Avc, px: &[f64]) -> Vec<f64> {
        let mut a = vec![0.0; self.ns * self.ny];
        for s in 0..self.ns {
            for x in 0..self.nx {
                for y in 0..self.ny {
                    a[s * self.ny + y] += px[x] * avc.w(x, s, y);
                }
            }
        }
        a
    }

    fn grad_ps(&self, avc: &Avc, px: &[f64]) -> Vec<f64> {
        (0..self.ns)
            .map(|s| {
                let mut g = 0.0;
                for x in 0..self.nx {
                    if px[x] == 0.0 {
                        continue;
                    }
                    for y in 0..self.ny {
                        g += px[x] * avc.w(x, s, y) * self.lr[x * self.ny + y];
                    }
                }
                g
            })
            .collect()
    }

    fn hess_xx(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nx, self.nx, |x, xp| {
            -(0..self.ny)
                .filter(|&y| self.q[y] > 0.0)
                .map(|y| self.v[x * self.ny + y] * self.v[xp * self.ny + y] / self.q[y])
                .sum::<f64>()
        })
    }

    fn hess_ss(&self, avc: &Avc, px: &[f64]) -> DMatrix<f64> {
        let a = self.a(avc, px);
        DMatrix::from_fn(self.ns, self.ns, |s, sp| {
            let mut h = 0.0;
            for x in 0..self.nx {
                if px[x] == 0.0 {
                    continue;
                }
                for y in 0..self.ny {
                    let v = self.v[x * self.ny + y];
                    if v > 0.0 {
                        h += px[x] * avc.w(x, s, y) * avc.w(x, sp, y) / v;
                    }
                }
            }
            for y in 0..self.ny {
                if self.q[y] > 0.0 {
                    h -= a[s * self.ny + y] * a[sp * self.ny + y] / self.q[y];
                }
            }
            h
        })
    }

    fn hess_xs(&self, avc: &Avc, px: &[f64]) -> DMatrix<f64> {
        let a = self.a(avc, px);
        DMatrix::from_fn(self.nx, self.ns, |x, s| {
            let mut h = 0.0;
            for y in 0..self.ny {
                h += avc.w(x, s, y) * self.lr[x * self.ny + y];
                if self.q[y] > 0.0 {
                    h -= self.v[x * self.ny + y] * a[s * self.ny + y] / self.q[y];
                }
            }
            h
        })
    }
}

/// `I(P_X, P_S W)` in bits from raw probability vectors.
fn mi_bits(avc: &Avc, px: &[f64], ps: &[f64]) -> f64 {
    Joint::new(avc, px, ps).mi(px) / LN2
}

/// `P_S ↦ I(P_X, P_S W)` (nats).
struct StateObjective<'a> {
    avc: &'a Avc,
    px: Vec<f64>,
}

impl Objective for StateObjective<'_> {
    fn value(&self, ps: &[f64]) -> f64 {
        if ps.iter().any(|v| *v < 0.0) {
            return f64::NAN;
        }
        Joint::new(self.avc, &self.px, ps).mi(&self.px)
    }
    fn gradient(&self, ps: &[f64]) -> Vec<f64> {
        Joint::new(self.avc, &self.px, ps).grad_ps(self.avc, &self.px)
    }
    fn hessian(&self, ps: &[f64]) -> DMatrix<f64> {
        Joint::new(self.avc, &self.px, ps).hess_ss(self.avc, &self.px)
    }
}

/// `P_X ↦ -I(P_X, P_S W)` (nats).
struct InputObjective<'a> {
    avc: &'a Avc,
    ps: Vec<f64>,
}

impl Objective for InputObjective<'_> {
    fn value(&self, px: &[f64]) -> f64 {
        if px.iter().any(|v| *v < 0.0) {
            return f64::NAN;
        }
        -Joint::new(self.avc, px, &self.ps).mi(px)
    }
    fn gradient(&self, px: &[f64]) -> Vec<f64> {
        Joint::new(self.avc, px, &self.ps)
            .grad_px()
            .into_iter()
            .map(|g| -g)
            .collect()
    }
    fn hessian(&self, px: &[f64]) -> DMatrix<f64> {
        -Joint::new(self.avc, px, &self.ps).hess_xx()
    }
}

/// Feasible sets `𝒫(𝒳, Γ)` and `𝒫(𝒮, Λ)` with their degeneracies resolved.
struct Problem<'a> {
    avc: &'a Avc,
    xs: Prepared,
    ss: Prepared,
}

impl<'a> Problem<'a> {
    fn new(avc: &'a Avc) -> Result<Self> {
        let xs = Polytope::simplex(avc.input_size())
            .with_ub(avc.g().to_vec(), avc.gamma())
            .prepare()?;
        let ss = Polytope::simplex(avc.state_size())
            .with_ub(avc.ell().to_vec(), avc.lambda())
            .prepare()?;
        Ok(Self { avc, xs, ss })
    }

    /// `min_{P_S} I(P_X, P_S W)`.
    fn inner_min(&self, px: &[f64], warm: Option<&[f64]>) -> Result<ConvexSolution> {
        let obj = StateObjective {
            avc: self.avc,
            px: px.to_vec(),
        };
        minimize(&obj, &self.ss, warm, &SolveOptions::default())
    }

    /// `max_{P_X} I(P_X, P_S W)`, returned as a minimization of `-I`.
    fn inner_max(&self, ps: &[f64], warm: Option<&[f64]>) -> Result<ConvexSolution> {
        let obj = InputObjective {
            avc: self.avc,
            ps: ps.to_vec(),
        };
        minimize(&obj, &self.xs, warm, &SolveOptions::default())
    }

    fn f_bits(&self, px: &[f64]) -> Result<f64> {
        Ok(self.inner_min(px, None)?.value / LN2)
    }

    fn g_bits(&self, ps: &[f64]) -> Result<f64> {
        Ok(-self.inner_max(ps, None)?.value / LN2)
    }

    /// Path-following Newton on the barrier Lagrangian.
    fn path_follow(&self, max_iter: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let avc = self.avc;
        let mut px = self.xs.start().to_vec();
        let mut ps = self.ss.start().to_vec();
        let (nx_act, ns_act) = (self.xs.active().to_vec(), self.ss.active().to_vec());
        let (nxm, nsm) = (self.xs.null().clone(), self.ss.null().clone());
        let (dx, ds) = (nxm.ncols(), nsm.ncols());
        if dx + ds == 0 {
            return Ok((px, ps));
        }
        let m = (self.xs.barrier_count() + self.ss.barrier_count()) as f64;
        let residual = |px: &[f64], ps: &[f64], t: f64| -> DVector<f64> {
            let j = Joint::new(avc, px, ps);
            let gx = j.grad_px();
            let gs = j.grad_ps(avc, px);
            let (bx, _) = self.xs.barrier_derivs(px);
            let (bs, _) = self.ss.barrier_derivs(ps);
            let rx = DVector::from_iterator(
                nx_act.len(),
                nx_act.iter().map(|&i| t * gx[i] - bx[i]),
            );
            let rs = DVector::from_iterator(
                ns_act.len(),
                ns_act.iter().map(|&i| t * gs[i] + bs[i]),
            );
            let mut r = DVector::zeros(dx + ds);
            r.rows_mut(0, dx).copy_from(&(nxm.transpose() * rx));
            r.rows_mut(dx, ds).copy_from(&(nsm.transpose() * rs));
            r
        };
        let mut t = 1.0;
        let mut iters = 0;
        loop {
            for _ in 0..60 {
                iters += 1;
                if iters > max_iter {
                    return Err(AvcError::NonConvergence {
                        iterations: iters,
                        gap: m / t,
                        detail: format!("saddle path stalled at px={px:?}, ps={ps:?}"),
                    });
                }
                let r = residual(&px, &ps, t);
                let j = Joint::new(avc, &px, &ps);
                let (_, hbx) = self.xs.barrier_derivs(&px);
                let (_, hbs) = self.ss.barrier_derivs(&ps);
                let ixx = j.hess_xx();
                let iss = j.hess_ss(avc, &px);
                let ixs = j.hess_xs(avc, &px);
                let sub = |m: &DMatrix<f64>, rows: &[usize], cols: &[usize]| {
                    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
                };
                let lxx = sub(&ixx, &nx_act, &nx_act) * t - sub(&hbx, &nx_act, &nx_act);
                let lss = sub(&iss, &ns_act, &ns_act) * t + sub(&hbs, &ns_act, &ns_act);
                let lxs = sub(&ixs, &nx_act, &ns_act) * t;
                let mut jac = DMatrix::zeros(dx + ds, dx + ds);
                jac.view_mut((0, 0), (dx, dx))
                    .copy_from(&(nxm.transpose() * &lxx * &nxm));
                jac.view_mut((dx, dx), (ds, ds))
                    .copy_from(&(nsm.transpose() * &lss * &nsm));
                let cross = nxm.transpose() * &lxs * &nsm;
                jac.view_mut((0, dx), (dx, ds)).copy_from(&cross);
                jac.view_mut((dx, 0), (ds, dx)).copy_from(&cross.transpose());
                let Some(d) = solve_scaled(jac, -&r) else {
                    break;
                };
                let mut dpx = vec![0.0; px.len()];
                let step_x = &nxm * d.rows(0, dx);
                for (a, &i) in nx_act.iter().enumerate() {
                    dpx[i] = step_x[a];
                }
                let mut dps = vec![0.0; ps.len()];
                let step_s = &nsm * d.rows(dx, ds);
                for (a, &i) in ns_act.iter().enumerate() {
                    dps[i] = step_s[a];
                }
                let size = dpx.iter().chain(&dps).fold(0.0f64, |a, b| a.max(b.abs()));
                if size < 1e-15 {
                    break;
                }
                let mut s = 1.0f64
                    .min(0.99 * self.xs.max_step(&px, &dpx))
                    .min(0.99 * self.ss.max_step(&ps, &dps));
                let r0 = r.norm();
                let mut accepted = false;
                while s > 1e-12 {
                    let qx: Vec<f64> = px.iter().zip(&dpx).map(|(a, b)| a + s * b).collect();
                    let qs: Vec<f64> = ps.iter().zip(&dps).map(|(a, b)| a + s * b).collect();
                    if self.xs.strictly_inside(&qx) && self.ss.strictly_inside(&qs) {
                        let r1 = residual(&qx, &qs, t).norm();
                        if r1 <= (1.0 - 1e-4 * s) * r0 {
                            px = qx;
                            ps = qs;
                            accepted = true;
                            break;
                        }
                    }
                    s *= 0.5;
                }
                if !accepted || size * s < 1e-15 {
                    break;
                }
            }
            if m / t < 1e-13 {
                return Ok((px, ps));
            }
            t *= 10.0;
        }
    }
}

fn solve_scaled(a: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    let d: Vec<f64> = (0..a.nrows())
        .map(|i| 1.0 / a[(i, i)].abs().max(1e-300).sqrt())
        .collect();
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i] * d[j]);
    let srhs = DVector::from_fn(rhs.len(), |i, _| rhs[i] * d[i]);
    let y = scaled.full_piv_lu().solve(&srhs)?;
    let x = DVector::from_fn(y.len(), |i, _| y[i] * d[i]);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn to_dist(p: &[f64]) -> Result<Dist> {
    let clipped: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    Dist::from_weights(&clipped)
}

fn diameter(reps: &[Vec<f64>]) -> f64 {
    let mut d = 0.0f64;
    for a in reps {
        for b in reps {
            for (u, v) in a.iter().zip(b) {
                d = d.max((u - v).abs());
            }
        }
    }
    d
}

/// Largest step along `e_j - e_i` from `p` staying in `{p ≥ 0, gᵀp ≤ budget}`.
fn edge_extent(p: &[f64], i: usize, j: usize, g: &[f64], budget: f64) -> f64 {
    let mut h = p[i];
    let dg = g[j] - g[i];
    if dg > 0.0 {
        let c: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        h = h.min(((budget - c) / dg).max(0.0));
    }
    h
}

/// Representatives of a convex level set `{p : keep(p)}` containing `center`:
/// the center and the far end of the set along every edge direction.
fn probe_set(
    center: &[f64],
    g: &[f64],
    budget: f64,
    keep: impl Fn(&[f64]) -> Result<bool> + Sync,
) -> Result<Vec<Vec<f64>>> {
    let k = center.len();
    let dirs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let ends: Vec<Option<Vec<f64>>> = dirs
        .par_iter()
        .map(|&(i, j)| -> Result<Option<Vec<f64>>> {
            let hmax = edge_extent(center, i, j, g, budget);
            if hmax <= 1e-12 {
                return Ok(None);
            }
            let at = |h: f64| {
                let mut q = center.to_vec();
                q[i] = (q[i] - h).max(0.0);
                q[j] += h;
                q
            };
            // extents below half the singleton diameter are not resolved
            let h0 = hmax.min(0.5 * SINGLETON_DIAMETER);
            if !keep(&at(h0))? {
                return Ok(None);
            }
            let (mut lo, mut hi) = (h0, hmax);
            if keep(&at(hmax))? {
                lo = hmax;
            } else {
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if keep(&at(mid))? {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            Ok((lo > 1e-9).then(|| at(lo)))
        })
        .collect::<Result<_>>()?;
    let mut reps = vec![center.to_vec()];
    reps.extend(ends.into_iter().flatten());
    Ok(reps)
}

struct OptimalSets {
    px: Vec<Vec<f64>>,
    ps: Vec<Vec<f64>>,
}

fn dispersions(
    avc: &Avc,
    sets: &OptimalSets,
    px_single: bool,
    ps_single: bool,
) -> Result<(f64, f64, usize)> {
    let xs: &[Vec<f64>] = if px_single { &sets.px[..1] } else { &sets.px };
    let ss: &[Vec<f64>] = if ps_single { &sets.ps[..1] } else { &sets.ps };
    let mut table = vec![vec![0.0; ss.len()]; xs.len()];
    for (a, px) in xs.iter().enumerate() {
        for (b, ps) in ss.iter().enumerate() {
            table[a][b] = dispersion_v(&to_dist(px)?, &to_dist(ps)?, avc)?;
        }
    }
    let (v_plus_at, v_plus) = table
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    let v_minus = (0..ss.len())
        .map(|b| table.iter().map(|row| row[b]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((v_plus.max(0.0), v_minus.max(0.0), v_plus_at))
}

fn assemble(
    avc: &Avc,
    max_min: f64,
    min_max: f64,
    sets: OptimalSets,
    forced_heuristic: bool,
    tol: f64,
) -> Result<SaddleSolution> {
    let gap = min_max - max_min;
    if gap > tol {
        return Err(AvcError::NonConvergence {
            iterations: 0,
            gap,
            detail: format!(
                "saddle certificate failed: max-min {max_min:.12}, min-max {min_max:.12}, px={:?}, ps={:?}",
                sets.px[0], sets.ps[0]
            ),
        });
    }
    let px_singleton = diameter(&sets.px) <= SINGLETON_DIAMETER;
    let ps_singleton = diameter(&sets.ps) <= SINGLETON_DIAMETER;
    let (v_plus, v_minus, v_plus_at) = dispersions(avc, &sets, px_singleton, ps_singleton)?;
    Ok(SaddleSolution {
        value: 0.5 * (max_min + min_max),
        max_min,
        min_max,
        gap: gap.max(0.0),
        px_opt: sets.px.iter().map(|p| to_dist(p)).collect::<Result<_>>()?,
        ps_opt: sets.ps.iter().map(|p| to_dist(p)).collect::<Result<_>>()?,
        v_plus,
        v_minus,
        v_plus_at,
        px_singleton,
        ps_singleton,
        heuristic: forced_heuristic || !(px_singleton && ps_singleton),
    })
}

/// `C_r = max_{P_X ∈ 𝒫(𝒳,Γ)} min_{P_S ∈ 𝒫(𝒮,Λ)} I(P_X, P_S W)` with its optimal sets.
pub fn random_code_capacity(avc: &Avc, opts: &SaddleOptions) -> Result<SaddleSolution> {
    let prob = Problem::new(avc)?;
    let (px, ps) = prob.path_follow(opts.max_iter)?;
    let fmin = prob.inner_min(&px, Some(&ps))?;
    let gmax = prob.inner_max(&ps, Some(&px))?;
    let max_min = fmin.value / LN2;
    let min_max = -gmax.value / LN2;
    let level = 0.5 * (max_min + min_max);
    let opt_tol = opts.opt_tol();
    let px_set = probe_set(&px, avc.g(), avc.gamma(), |q| {
        Ok(prob.f_bits(q)? >= level - opt_tol)
    })?;
    let ps_set = probe_set(&ps, avc.ell(), avc.lambda(), |q| {
        Ok(prob.g_bits(q)? <= level + opt_tol)
    })?;
    assemble(
        avc,
        max_min,
        min_max,
        OptimalSets {
            px: px_set,
            ps: ps_set,
        },
        false,
        opts.tol,
    )
}

fn lambda0_at(p: &[f64], avc: &Avc) -> f64 {
    to_dist(p)
        .and_then(|d| lambda0(&d, avc))
        .map(|r| r.lambda0)
        .unwrap_or(f64::NEG_INFINITY)
}

/// `C = max_{P_X ∈ 𝒫(𝒳,Γ), Λ₀(P_X) ≥ Λ} min_{P_S ∈ 𝒫(𝒮,Λ)} I(P_X, P_S W)`, or the
/// symmetrizable flag when no input clears the symmetrizability threshold.
pub fn capacity(avc: &Avc, opts: &SaddleOptions) -> Result<Capacity> {
    let decision = is_symmetrizable(avc, opts.resolution)?;
    if decision.symmetrizable {
        return Ok(Capacity::Symmetrizable(decision));
    }
    let random = random_code_capacity(avc, opts)?;
    capacity_given(avc, opts, &random).map(Capacity::Positive)
}

/// Both max-min problems of a channel.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub capacity: Capacity,
    pub random: SaddleSolution,
}

/// [`capacity`] and [`random_code_capacity`] sharing one saddle solve.
pub fn analyze(avc: &Avc, opts: &SaddleOptions) -> Result<Analysis> {
    let random = random_code_capacity(avc, opts)?;
    let decision = is_symmetrizable(avc, opts.resolution)?;
    let capacity = if decision.symmetrizable {
        Capacity::Symmetrizable(decision)
    } else {
        Capacity::Positive(capacity_given(avc, opts, &random)?)
    };
    Ok(Analysis { capacity, random })
}

/// [`capacity`] for a channel already known not to be symmetrizable, reusing
/// its random-code solution.
pub fn capacity_given(avc: &Avc, opts: &SaddleOptions, random: &SaddleSolution) -> Result<SaddleSolution> {
    let lambda = avc.lambda();
    let ok = |p: &[f64]| lambda0_at(p, avc) >= lambda - 1e-12;
    let admissible: Vec<Vec<f64>> = random
        .px_opt
        .iter()
        .map(|d| d.probs().to_vec())
        .filter(|p| ok(p))
        .collect();
    if !admissible.is_empty() {
        // An admissible random-code optimizer attains C = C_r.
        let mut px = admissible;
        if !ok(random.px_star().probs()) {
            px.sort_by(|a, b| lambda0_at(b, avc).total_cmp(&lambda0_at(a, avc)));
        }
        let ps = random.ps_opt.iter().map(|d| d.probs().to_vec()).collect();
        return assemble(
            avc,
            random.max_min,
            random.min_max,
            OptimalSets { px, ps },
            random.heuristic,
            opts.tol,
        );
    }
    restricted_capacity(avc, opts)
}

/// Outer maximization over the admissible region `Λ₀(P_X) ≥ Λ` by grid scan
/// and pattern search.
fn restricted_capacity(avc: &Avc, opts: &SaddleOptions) -> Result<SaddleSolution> {
    let prob = Problem::new(avc)?;
    let lambda = avc.lambda();
    let g = avc.g().to_vec();
    let gamma = avc.gamma();
    let f = |p: &[f64]| -> f64 {
        if lambda0_at(p, avc) < lambda - 1e-12 {
            return f64::NEG_INFINITY;
        }
        prob.f_bits(p).unwrap_or(f64::NEG_INFINITY)
    };
    let mut grid: Vec<Vec<f64>> = Vec::new();
    for p in simplex_grid(avc.input_size(), opts.resolution) {
        if within_budget(&p, &g, gamma) {
            grid.push(p);
        } else if let Some(q) = project_to_budget(&p, &g, gamma) {
            grid.push(q);
        }
    }
    let mut scored: Vec<(f64, Vec<f64>)> = grid.into_par_iter().map(|p| (f(&p), p)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    if !scored.first().is_some_and(|s| s.0.is_finite()) {
        return Err(AvcError::NonConvergence {
            iterations: 0,
            gap: f64::INFINITY,
            detail: "no admissible input found on the grid".into(),
        });
    }
    let (px, max_min) = scored
        .iter()
        .take(3)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(_, p)| pattern_search(p, &g, gamma, opts.resolution, 1e-10, f))
        .reduce_with(|a, b| if b.1 > a.1 { b } else { a })
        .expect("nonempty candidate list");
    let ps = prob.inner_min(&px, None)?.p;
    // min-max side: maximize I(·, P_S*) over the same admissible region
    let h = |p: &[f64]| -> f64 {
        if lambda0_at(p, avc) < lambda - 1e-12 {
            return f64::NEG_INFINITY;
        }
        mi_bits(avc, p, &ps)
    };
    let (_, min_max) = pattern_search(&px, &g, gamma, opts.resolution, 1e-10, h);
    let level = max_min;
    let opt_tol = opts.opt_tol();
    let ps_set = probe_set(&ps, avc.ell(), lambda, |q| {
        Ok(mi_bits(avc, &px, q) <= level + opt_tol)
    })?;
    assemble(
        avc,
        max_min,
        min_max.max(max_min),
        OptimalSets {
            px: vec![px],
            ps: ps_set,
        },
        true,
        opts.tol,
    )
}

/// `V₊ = min_{P_X ∈ Π_X(Γ)} max_{P_S ∈ Π_S(Λ)} V(P_X, P_S, W)`.
pub fn v_plus(avc: &Avc, opts: &SaddleOptions) -> Result<f64> {
    match capacity(avc, opts)? {
        Capacity::Positive(s) => Ok(s.v_plus),
        Capacity::Symmetrizable(_) => Err(AvcError::Symmetrizable),
    }
}

/// `V₋ = max_{P_S ∈ Π_S^(r)(Λ)} min_{P_X ∈ Π_X^(r)(Γ)} V(P_X, P_S, W)`.
pub fn v_minus(avc: &Avc, opts: &SaddleOptions) -> Result<f64> {
    if is_symmetrizable(avc, opts.resolution)?.symmetrizable {
        return Err(AvcError::Symmetrizable);
    }
    Ok(random_code_capacity(avc, opts)?.v_minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{adding_avc, bsc_avc};

    fn h2(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let avc = Avc::from_fn(
            3,
            2,
            3,
            |x, s, y| [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4], [0.1, 0.1, 0.8], [0.5, 0.25, 0.25], [0.4, 0.4, 0.2]][x * 2 + s][y],
            vec![0.0; 3],
            vec![0.0; 2],
            0.0,
            0.0,
        )
        .unwrap();
        let px = [0.2, 0.5, 0.3];
        let ps = [0.35, 0.65];
        let j = Joint::new(&avc, &px, &ps);
        let h = 1e-6;
        let gx = j.grad_px();
        let gs = j.grad_ps(&avc, &px);
        let hxx = j.hess_xx();
        let hss = j.hess_ss(&avc, &px);
        let hxs = j.hess_xs(&avc, &px);
        let mi = |px: &[f64], ps: &[f64]| Joint::new(&avc, px, ps).mi(px);
        for x in 0..3 {
            let mut a = px;
            a[x] += h;
            let mut b = px;
            b[x] -= h;
            assert!(((mi(&a, &ps) - mi(&b, &ps)) / (2.0 * h) - gx[x]).abs() < 1e-6);
            let ga = Joint::new(&avc, &a, &ps).grad_px();
            let gb = Joint::new(&avc, &b, &ps).grad_px();
            for xp in 0..3 {
                assert!(((ga[xp] - gb[xp]) / (2.0 * h) - hxx[(x, xp)]).abs() < 1e-5);
            }
            let sa = Joint::new(&avc, &a, &ps).grad_ps(&avc, &a);
            let sb = Joint::new(&avc, &b, &ps).grad_ps(&avc, &b);
            for s in 0..2 {
                assert!(((sa[s] - sb[s]) / (2.0 * h) - hxs[(x, s)]).abs() < 1e-5);
            }
        }
        for s in 0..2 {
            let mut a = ps;
            a[s] += h;
            let mut b = ps;
            b[s] -= h;
            assert!(((mi(&px, &a) - mi(&px, &b)) / (2.0 * h) - gs[s]).abs() < 1e-6);
            let ga = Joint::new(&avc, &px, &a).grad_ps(&avc, &px);
            let gb = Joint::new(&avc, &px, &b).grad_ps(&avc, &px);
            for sp in 0..2 {
                assert!(((ga[sp] - gb[sp]) / (2.0 * h) - hss[(s, sp)]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn bsc_random_code_capacity() {
        let avc = bsc_avc(0.4, 0.1).unwrap();
        let sol = random_code_capacity(&avc, &SaddleOptions::default()).unwrap();
        let expected = h2(0.42) - h2(0.1);
        assert!((sol.value - expected).abs() < 1e-9, "{sol:?}");
        assert!(sol.gap <= 1e-7);
        assert!(sol.px_singleton && sol.ps_singleton);
        assert!((sol.px_star().probs()[1] - 0.4).abs() < 1e-6);
    }

    #[test]
    fn noiseless_without_adversary() {
        let avc = Avc::from_fn(3, 1, 3, |x, _, y| (x == y) as u8 as f64, vec![0.0, 1.0, 2.0], vec![0.0], 2.0, 0.0)
            .unwrap();
        let sol = random_code_capacity(&avc, &SaddleOptions::default()).unwrap();
        assert!((sol.value - 3f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn bsc_capacity_and_symmetrizable_flag() {
        let opts = SaddleOptions::default();
        match capacity(&bsc_avc(0.3, 0.3).unwrap(), &opts).unwrap() {
            Capacity::Symmetrizable(_) => {}
            other => panic!("{other:?}"),
        }
        let c = capacity(&bsc_avc(0.3, 0.05).unwrap(), &opts).unwrap();
        let r = random_code_capacity(&bsc_avc(0.3, 0.05).unwrap(), &opts).unwrap();
        assert!((c.value() - r.value).abs() < 1e-12);
        let l = 0.05f64;
        let g = 0.3f64;
        let closed = 4.0 * g * (1.0 - g) * l * (1.0 - l)
            * ((l + g - 2.0 * l * g) / (1.0 - l - g + 2.0 * l * g)).log2().powi(2);
        assert!((r.v_minus - closed).abs() < 1e-8);
        assert!((c.solution().unwrap().v_plus - closed).abs() < 1e-8);
    }

    #[test]
    fn adding_capacity_below_random_code_capacity() {
        let avc = adding_avc(0.9, 0.6).unwrap();
        let opts = SaddleOptions::default();
        let r = random_code_capacity(&avc, &opts).unwrap();
        let c = capacity(&avc, &opts).unwrap();
        assert!(r.value - c.value() >= 1e-4);
        let sol = c.solution().unwrap();
        assert!(sol.gap <= 1e-7);
        assert!((sol.px_star().probs()[1] - 0.6).abs() < 1e-6);
    }

    /// Nested golden-section oracle for binary-input, binary-state channels.
    fn nested_oracle(avc: &Avc) -> f64 {
        let golden = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64, maximize: bool| {
            let (mut a, mut b) = (lo, hi);
            let r = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..100 {
                let c = b - r * (b - a);
                let d = a + r * (b - a);
                let (fc, fd) = (f(c), f(d));
                if (fc > fd) == maximize {
                    b = d;
                } else {
                    a = c;
                }
            }
            f(0.5 * (a + b))
        };
        let pmax = avc.gamma().min(1.0);
        let qmax = avc.lambda().min(1.0);
        golden(
            0.0,
            pmax,
            &|p| golden(0.0, qmax, &|q| mi_bits(avc, &[1.0 - p, p], &[1.0 - q, q]), false),
            true,
        )
    }

    #[test]
    fn adding_matches_nested_search() {
        let avc = adding_avc(0.5, 0.25).unwrap();
        let sol = random_code_capacity(&avc, &SaddleOptions::default()).unwrap();
        assert!((sol.value - nested_oracle(&avc)).abs() < 1e-8, "{sol:?}");
        assert!((sol.px_star().probs()[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn adding_matches_frozen_oracle() {
        // bounded scalar search over (p, q), refined to 1e-12
        let avc = adding_avc(0.5, 0.25).unwrap();
        let opts = SaddleOptions::default();
        let c = capacity(&avc, &opts).unwrap();
        let sol = c.solution().unwrap();
        assert!((sol.value - 0.5943609356938243).abs() < 1e-8);
        assert!((sol.v_plus - 0.27339403036036675).abs() < 1e-6);
        let r = random_code_capacity(&adding_avc(0.7, 0.3).unwrap(), &opts).unwrap();
        assert!((r.value - 0.5631811507237454).abs() < 1e-8);
        assert!((r.px_star().probs()[1] - 0.5472921413408373).abs() < 1e-5);
        assert!((r.v_minus - 0.2926572120119571).abs() < 1e-6);
        let r = random_code_capacity(&adding_avc(0.9, 0.6).unwrap(), &opts).unwrap();
        assert!((r.value - 0.5).abs() < 1e-8);
    }

    #[test]
    fn value_monotone_in_budgets() {
        let opts = SaddleOptions::default();
        let mut last = f64::INFINITY;
        for lam in [0.05, 0.1, 0.2, 0.3] {
            let v = random_code_capacity(&adding_avc(0.5, lam).unwrap(), &opts).unwrap().value;
            assert!(v <= last + 1e-9);
            last = v;
        }
        let mut last = 0.0;
        for gam in [0.1, 0.2, 0.3, 0.5] {
            let v = random_code_capacity(&adding_avc(gam, 0.05).unwrap(), &opts).unwrap().value;
            assert!(v >= last - 1e-9);
            last = v;
        }
    }

    #[test]
    fn degenerate_budgets() {
        // Λ = 0 pins the state to 0: noiseless binary channel, capacity H(Γ)
        let avc = bsc_avc(0.3, 0.0).unwrap();
        let sol = random_code_capacity(&avc, &SaddleOptions::default()).unwrap();
        assert!((sol.value - h2(0.3)).abs() < 1e-9);
        // Γ = 0 pins the input: zero capacity
        let avc = bsc_avc(0.0, 0.1).unwrap();
        let sol = random_code_capacity(&avc, &SaddleOptions::default()).unwrap();
        assert!(sol.value.abs() < 1e-12);
    }
}
