//! Derivative-free search over the cost-constrained simplex
//! `{p ≥ 0, Σp = 1, gᵀp ≤ Γ}`.

use crate::types::compositions;

const COST_SLACK: f64 = 1e-12;

/// Simplex grid with spacing `resolution`.
pub(crate) fn simplex_grid(k: usize, resolution: f64) -> Vec<Vec<f64>> {
    let n = (1.0 / resolution).round().max(1.0) as usize;
    compositions(n, k)
        .into_iter()
        .map(|c| c.into_iter().map(|v| v as f64 / n as f64).collect())
        .collect()
}

pub(crate) fn cost(p: &[f64], g: &[f64]) -> f64 {
    p.iter().zip(g).map(|(a, b)| a * b).sum()
}

pub(crate) fn within_budget(p: &[f64], g: &[f64], budget: f64) -> bool {
    cost(p, g) <= budget + COST_SLACK
}

/// Moves `p` along the segment toward the cheapest vertex until the cost
/// constraint holds with equality. `None` when even that vertex is too costly.
pub(crate) fn project_to_budget(p: &[f64], g: &[f64], budget: f64) -> Option<Vec<f64>> {
    let (cheap, gmin) = g
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let c = cost(p, g);
    if c <= budget {
        return Some(p.to_vec());
    }
    if gmin > budget + COST_SLACK {
        return None;
    }
    let theta = ((c - budget) / (c - gmin)).clamp(0.0, 1.0);
    let mut q: Vec<f64> = p.iter().map(|v| v * (1.0 - theta)).collect();
    q[cheap] += theta;
    Some(q)
}

/// Coordinate pattern search maximizing `f` along the edge directions
/// `e_j - e_i`, halving the step until it drops below `min_step`. Steps are
/// clipped to stay in the cost-constrained simplex; `f` may return `-inf` to
/// reject a point.
pub(crate) fn pattern_search(
    start: &[f64],
    g: &[f64],
    budget: f64,
    mut step: f64,
    min_step: f64,
    f: impl Fn(&[f64]) -> f64,
) -> (Vec<f64>, f64) {
    let k = start.len();
    let mut p = start.to_vec();
    let mut best = f(&p);
    while step >= min_step {
        let mut improved = false;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let mut t = step.min(p[i]);
                let dg = g[j] - g[i];
                if dg > 0.0 {
                    t = t.min(((budget - cost(&p, g)) / dg).max(0.0));
                }
                if t <= 1e-15 {
                    continue;
                }
                let mut q = p.clone();
                q[i] -= t;
                q[j] += t;
                q[i] = q[i].max(0.0);
                let v = f(&q);
                if v > best + 1e-15 {
                    best = v;
                    p = q;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (p, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid(2, 0.01).len(), 101);
        assert_eq!(simplex_grid(3, 0.5).len(), 6);
    }

    #[test]
    fn projection_hits_budget() {
        let q = project_to_budget(&[0.2, 0.8], &[0.0, 1.0], 0.4).unwrap();
        assert!((q[1] - 0.4).abs() < 1e-15);
        assert!(project_to_budget(&[0.2, 0.8], &[0.5, 1.0], 0.4).is_none());
    }

    #[test]
    fn pattern_search_finds_constrained_maximum() {
        // maximize -(p1 - 0.7)^2 subject to p1 ≤ 0.55
        let (p, v) = pattern_search(&[1.0, 0.0], &[0.0, 1.0], 0.55, 0.1, 1e-9, |p| {
            -(p[1] - 0.7).powi(2)
        });
        assert!((p[1] - 0.55).abs() < 1e-9);
        assert!((v + 0.0225).abs() < 1e-9);
    }
}
