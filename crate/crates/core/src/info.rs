//! Information density and its moments for an input distribution `P_X` and state
//! distribution `P_S` on an AVC. All logarithms are base 2.
//!
//! Points of zero probability never contribute to an expectation; the density
//! itself is `-inf` where `(P_S W)(y|x) = 0` and undefined where the output has
//! zero probability.

use crate::channel::{check_size, Avc, CondDist, Dist};
use crate::error::{AvcError, Result};
use crate::scalar::Scalar;

/// Mutual information, dispersion and absolute third moment of the centered
/// density at one `(P_X, P_S)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfoStats<T: Scalar = f64> {
    pub mutual_information: T,
    pub variance_v: T,
    pub third_moment_t: T,
}

/// Per-point densities and their conditional means, shared by every measure.
struct DensityTable<T: Scalar> {
    nx: usize,
    ns: usize,
    ny: usize,
    px: Vec<T>,
    ps: Vec<T>,
    /// `(P_S W)(y|x)`
    v: Vec<T>,
    /// `(P_X P_S W)(y)`
    q: Vec<T>,
    /// `ı(x;y)`
    dens: Vec<T>,
    /// `E[ı | X = x]`
    mean_x: Vec<T>,
    /// `E[ı | S = s]`, NaN off the support of `P_S`
    mean_s: Vec<T>,
    mi: T,
}

impl<T: Scalar> DensityTable<T> {
    fn new(px: &Dist<T>, ps: &Dist<T>, avc: &Avc<T>) -> Result<Self> {
        check_size(avc.input_size(), px.len())?;
        check_size(avc.state_size(), ps.len())?;
        let (nx, ns, ny) = (avc.input_size(), avc.state_size(), avc.output_size());
        let chan = avc.induced_channel(ps)?;
        let q = chan.output_dist(px)?.probs().to_vec();
        let v: Vec<T> = (0..nx)
            .flat_map(|x| chan.row(x).to_vec())
            .collect();
        let mut dens = vec![T::neg_infinity(); nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                let vxy = v[x * ny + y];
                if q[y] > T::zero() && vxy > T::zero() {
                    dens[x * ny + y] = (vxy / q[y]).log2();
                } else if q[y] == T::zero() {
                    dens[x * ny + y] = T::nan();
                }
            }
        }
        let pxv = px.probs().to_vec();
        let psv = ps.probs().to_vec();
        let mut mean_x = vec![T::zero(); nx];
        for x in 0..nx {
            mean_x[x] = (0..ny)
                .filter(|&y| v[x * ny + y] > T::zero())
                .map(|y| v[x * ny + y] * dens[x * ny + y])
                .sum();
        }
        let mut mean_s = vec![T::nan(); ns];
        for s in 0..ns {
            if psv[s] == T::zero() {
                continue;
            }
            let mut acc = T::zero();
            for x in 0..nx {
                if pxv[x] == T::zero() {
                    continue;
                }
                for y in 0..ny {
                    let w = avc.w(x, s, y);
                    if w > T::zero() {
                        acc = acc + pxv[x] * w * dens[x * ny + y];
                    }
                }
            }
            mean_s[s] = acc;
        }
        let mi = (0..nx)
            .filter(|&x| pxv[x] > T::zero())
            .map(|x| pxv[x] * mean_x[x])
            .sum();
        Ok(Self {
            nx,
            ns,
            ny,
            px: pxv,
            ps: psv,
            v,
            q,
            dens,
            mean_x,
            mean_s,
            mi,
        })
    }

    #[inline]
    fn centered(&self, x: usize, s: usize, y: usize) -> T {
        self.dens[x * self.ny + y] - self.mean_x[x] - self.mean_s[s] + self.mi
    }

    /// `E f(ı̃)` over the joint law `P_X P_S W`.
    fn expect_centered(&self, avc: &Avc<T>, f: impl Fn(T) -> T) -> T {
        let mut acc = T::zero();
        for x in 0..self.nx {
            for s in 0..self.ns {
                let pxs = self.px[x] * self.ps[s];
                if pxs == T::zero() {
                    continue;
                }
                for y in 0..self.ny {
                    let w = avc.w(x, s, y);
                    if w > T::zero() {
                        acc = acc + pxs * w * f(self.centered(x, s, y));
                    }
                }
            }
        }
        acc
    }

    /// `var ı(X;Y)`.
    fn density_variance(&self) -> T {
        let mut acc = T::zero();
        for x in 0..self.nx {
            if self.px[x] == T::zero() {
                continue;
            }
            for y in 0..self.ny {
                let vxy = self.v[x * self.ny + y];
                if vxy > T::zero() {
                    let d = self.dens[x * self.ny + y] - self.mi;
                    acc = acc + self.px[x] * vxy * d * d;
                }
            }
        }
        acc
    }

    /// `E[ı(x;Y) | X = x, S = s]`.
    fn mean_given(&self, avc: &Avc<T>, x: usize, s: usize) -> T {
        (0..self.ny)
            .filter(|&y| avc.w(x, s, y) > T::zero())
            .map(|y| avc.w(x, s, y) * self.dens[x * self.ny + y])
            .sum()
    }
}

/// `ı(x;y) = log2 (P_S W)(y|x) / (P_X P_S W)(y)`; `-inf` when the numerator is zero.
pub fn info_density<T: Scalar>(
    x: usize,
    y: usize,
    px: &Dist<T>,
    ps: &Dist<T>,
    avc: &Avc<T>,
) -> Result<T> {
    let table = DensityTable::new(px, ps, avc)?;
    if x >= table.nx || y >= table.ny {
        return Err(AvcError::InvalidArgument(format!("point ({x},{y}) outside alphabets")));
    }
    if table.q[y] == T::zero() {
        return Err(AvcError::UndefinedPoint { x, y });
    }
    Ok(table.dens[x * table.ny + y])
}

/// `I(P_X, P_{Y|X})` in bits.
pub fn mutual_information<T: Scalar>(px: &Dist<T>, channel: &CondDist<T>) -> Result<T> {
    let q = channel.output_dist(px)?;
    let mut acc = T::zero();
    for (x, &p) in px.probs().iter().enumerate() {
        if p == T::zero() {
            continue;
        }
        for (y, &v) in channel.row(x).iter().enumerate() {
            if v > T::zero() {
                acc = acc + p * v * (v / q.probs()[y]).log2();
            }
        }
    }
    Ok(acc.max(T::zero()))
}

/// `I(P_X, P_S W)` in bits.
pub fn avc_mutual_information<T: Scalar>(px: &Dist<T>, ps: &Dist<T>, avc: &Avc<T>) -> Result<T> {
    mutual_information(px, &avc.induced_channel(ps)?)
}

/// Doubly centered density
/// `ı̃(x;s;y) = ı(x;y) - E[ı|X=x] - E[ı|S=s] + I(P_X, P_S W)`.
pub fn centered_density<T: Scalar>(
    x: usize,
    s: usize,
    y: usize,
    px: &Dist<T>,
    ps: &Dist<T>,
    avc: &Avc<T>,
) -> Result<T> {
    let table = DensityTable::new(px, ps, avc)?;
    if x >= table.nx || s >= table.ns || y >= table.ny {
        return Err(AvcError::InvalidArgument(format!(
            "point ({x},{s},{y}) outside alphabets"
        )));
    }
    if table.px[x] * table.ps[s] * avc.w(x, s, y) == T::zero() {
        return Err(AvcError::UndefinedPoint { x, y });
    }
    Ok(table.centered(x, s, y))
}

/// `V(P_X, P_S, W) = E ı̃²`.
pub fn dispersion_v<T: Scalar>(px: &Dist<T>, ps: &Dist<T>, avc: &Avc<T>) -> Result<T> {
    let table = DensityTable::new(px, ps, avc)?;
    Ok(table.expect_centered(avc, |c| c * c).max(T::zero()))
}

/// `T(P_X, P_S, W) = E |ı̃|³`.
pub fn third_moment_t<T: Scalar>(px: &Dist<T>, ps: &Dist<T>, avc: &Avc<T>) -> Result<T> {
    let table = DensityTable::new(px, ps, avc)?;
    Ok(table.expect_centered(avc, |c| c.abs().powi(3)))
}

/// `var ı(X;Y)` under `P_X P_S W`.
pub fn density_variance<T: Scalar>(px: &Dist<T>, ps: &Dist<T>, avc: &Avc<T>) -> Result<T> {
    Ok(DensityTable::new(px, ps, avc)?.density_variance())
}

pub fn info_stats<T: Scalar>(px: &Dist<T>, ps: &Dist<T>, avc: &Avc<T>) -> Result<InfoStats<T>> {
    let table = DensityTable::new(px, ps, avc)?;
    let variance_v = table.expect_centered(avc, |c| c * c).max(T::zero());
    let third_moment_t = if variance_v == T::zero() {
        T::zero()
    } else {
        table.expect_centered(avc, |c| c.abs().powi(3))
    };
    Ok(InfoStats {
        mutual_information: table.mi.max(T::zero()),
        variance_v,
        third_moment_t,
    })
}

/// `Σ_n = var(Σ_i ı(X_i;Y_i)) / n` for `X^n` uniform on the type class of `px`,
/// `S^n` uniform on the type class of `ps` and `Y^n ~ W^n`, computed from
/// exchangeability: `n·var(single) + n(n-1)·cov(pair)`.
pub fn sigma_n_exact<T: Scalar>(px: &Dist<T>, ps: &Dist<T>, avc: &Avc<T>, n: usize) -> Result<T> {
    if n == 0 {
        return Err(AvcError::ZeroBlocklength);
    }
    let cx = px.as_type(n).ok_or(AvcError::NotAType { n })?;
    let cs = ps.as_type(n).ok_or(AvcError::NotAType { n })?;
    let table = DensityTable::new(px, ps, avc)?;
    let single = table.density_variance();
    if n == 1 {
        return Ok(single);
    }
    let (nx, ns) = (table.nx, table.ns);
    let mut h = vec![T::zero(); nx * ns];
    for x in 0..nx {
        for s in 0..ns {
            if cx[x] > 0 && cs[s] > 0 {
                h[x * ns + s] = table.mean_given(avc, x, s);
            }
        }
    }
    let nf = T::c(n as f64);
    let pair_norm = nf * (nf - T::one());
    let pair = |c: &[usize], a: usize, b: usize| -> T {
        let second = c[b] as f64 - if a == b { 1.0 } else { 0.0 };
        T::c(c[a] as f64 * second) / pair_norm
    };
    let mut cross = T::zero();
    for a in 0..nx {
        for b in 0..nx {
            let pab = pair(&cx, a, b);
            if pab == T::zero() {
                continue;
            }
            for c in 0..ns {
                for d in 0..ns {
                    let pcd = pair(&cs, c, d);
                    if pcd == T::zero() {
                        continue;
                    }
                    cross = cross + pab * pcd * h[a * ns + c] * h[b * ns + d];
                }
            }
        }
    }
    let cov = cross - table.mi * table.mi;
    Ok((single + (nf - T::one()) * cov).max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{adding_avc, bsc_avc};
    use crate::types::{canonical_sequence, type_class_members};
    use proptest::prelude::*;

    fn h2(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
        }
    }

    fn d(p: &[f64]) -> Dist {
        Dist::new(p.to_vec()).unwrap()
    }

    fn identity() -> Avc {
        Avc::from_fn(2, 1, 2, |x, _, y| (x == y) as u8 as f64, vec![0.0; 2], vec![0.0], 0.0, 0.0)
            .unwrap()
    }

    #[test]
    fn identity_channel_density_is_one_bit() {
        let avc = identity();
        let u = Dist::uniform(2);
        let one = Dist::point(1, 0);
        assert!((info_density(0, 0, &u, &one, &avc).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(info_density(0, 1, &u, &one, &avc).unwrap(), f64::NEG_INFINITY);
        let chan = avc.induced_channel(&one).unwrap();
        assert!((mutual_information(&u, &chan).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn independent_output_has_zero_density() {
        let avc = Avc::from_fn(2, 2, 3, |_, _, y| [0.2, 0.3, 0.5][y], vec![0.0; 2], vec![0.0; 2], 0.0, 0.0)
            .unwrap();
        let px = d(&[0.3, 0.7]);
        let ps = d(&[0.5, 0.5]);
        for x in 0..2 {
            for y in 0..3 {
                assert!(info_density(x, y, &px, &ps, &avc).unwrap().abs() < 1e-15);
            }
        }
        assert!(dispersion_v(&px, &ps, &avc).unwrap() < 1e-30);
        assert!(third_moment_t(&px, &ps, &avc).unwrap() < 1e-30);
        let mi = mutual_information(&px, &avc.induced_channel(&ps).unwrap()).unwrap();
        assert!(mi < 1e-15);
    }

    #[test]
    fn zero_output_probability_is_undefined() {
        let avc = adding_avc(0.5, 0.5).unwrap();
        let err = info_density(0, 2, &Dist::point(2, 0), &Dist::point(2, 0), &avc);
        assert_eq!(err, Err(AvcError::UndefinedPoint { x: 0, y: 2 }));
        let err = centered_density(0, 1, 1, &Dist::uniform(2), &Dist::point(2, 0), &avc);
        assert!(err.is_err());
    }

    #[test]
    fn bsc_example_values() {
        let avc = bsc_avc(0.4, 0.1).unwrap();
        let px = d(&[0.6, 0.4]);
        let ps = d(&[0.9, 0.1]);
        let i00 = info_density(0, 0, &px, &ps, &avc).unwrap();
        assert!((i00 - (0.9f64 / 0.58).log2()).abs() < 1e-14);
        let chan = avc.induced_channel(&ps).unwrap();
        let mi = mutual_information(&px, &chan).unwrap();
        assert!((mi - (h2(0.42) - h2(0.1))).abs() < 1e-14);
        let (g, l) = (0.4f64, 0.1f64);
        let closed = 4.0 * g * (1.0 - g) * l * (1.0 - l)
            * ((l + g - 2.0 * l * g) / (1.0 - l - g + 2.0 * l * g)).log2().powi(2);
        assert!((dispersion_v(&px, &ps, &avc).unwrap() - closed).abs() < 1e-14);
    }

    #[test]
    fn bsc_dispersion_vanishes_above_half() {
        let avc = bsc_avc(0.6, 0.1).unwrap();
        let v = dispersion_v(&Dist::uniform(2), &d(&[0.9, 0.1]), &avc).unwrap();
        assert!(v < 1e-15);
    }

    /// Brute-force table over all (x,s,y) triples, computed from scratch.
    fn brute_moments(px: &[f64], ps: &[f64], avc: &Avc) -> (f64, f64, f64) {
        let (nx, ns, ny) = (avc.input_size(), avc.state_size(), avc.output_size());
        let joint = |x: usize, s: usize, y: usize| px[x] * ps[s] * avc.w(x, s, y);
        let pxy = |x: usize, y: usize| (0..ns).map(|s| joint(x, s, y)).sum::<f64>();
        let py = |y: usize| (0..nx).map(|x| pxy(x, y)).sum::<f64>();
        let dens = |x: usize, y: usize| (pxy(x, y) / px[x] / py(y)).log2();
        let mut e = 0.0;
        let mut ex = vec![0.0; nx];
        let mut es = vec![0.0; ns];
        for x in 0..nx {
            for s in 0..ns {
                for y in 0..ny {
                    let p = joint(x, s, y);
                    if p > 0.0 {
                        e += p * dens(x, y);
                        ex[x] += p * dens(x, y) / px[x];
                        es[s] += p * dens(x, y) / ps[s];
                    }
                }
            }
        }
        let (mut v, mut t, mut c000) = (0.0, 0.0, f64::NAN);
        for x in 0..nx {
            for s in 0..ns {
                for y in 0..ny {
                    let p = joint(x, s, y);
                    if p > 0.0 {
                        let c = dens(x, y) - ex[x] - es[s] + e;
                        if (x, s, y) == (0, 0, 0) {
                            c000 = c;
                        }
                        v += p * c * c;
                        t += p * c.abs().powi(3);
                    }
                }
            }
        }
        (c000, v, t)
    }

    #[test]
    fn bsc_centered_density_and_moments_match_brute_force() {
        let avc = bsc_avc(0.4, 0.1).unwrap();
        let (px, ps) = ([0.6, 0.4], [0.9, 0.1]);
        let (c000, v, t) = brute_moments(&px, &ps, &avc);
        let (dx, ds) = (d(&px), d(&ps));
        assert!((centered_density(0, 0, 0, &dx, &ds, &avc).unwrap() - c000).abs() < 1e-13);
        assert!((dispersion_v(&dx, &ds, &avc).unwrap() - v).abs() < 1e-13);
        assert!((third_moment_t(&dx, &ds, &avc).unwrap() - t).abs() < 1e-13);
    }

    #[test]
    fn n1_sigma_is_density_variance() {
        let avc = bsc_avc(0.4, 0.1).unwrap();
        let s1 = sigma_n_exact(&Dist::point(2, 1), &Dist::point(2, 0), &avc, 1).unwrap();
        let v = density_variance(&Dist::point(2, 1), &Dist::point(2, 0), &avc).unwrap();
        assert_eq!(s1, v);
        assert!(sigma_n_exact(&d(&[0.3, 0.7]), &Dist::uniform(2), &avc, 4).is_err());
    }

    /// Full enumeration of `(x^n, s^n, y^n)` for the variance of the summed density.
    fn sigma_brute(pxc: &[usize], psc: &[usize], avc: &Avc) -> f64 {
        let n: usize = pxc.iter().sum();
        let px = Dist::from_counts(pxc).unwrap();
        let ps = Dist::from_counts(psc).unwrap();
        let xs = type_class_members(pxc);
        let ss = type_class_members(psc);
        let ny = avc.output_size();
        let weight = 1.0 / (xs.len() * ss.len()) as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for x in &xs {
            for s in &ss {
                let total = ny.pow(n as u32);
                for code in 0..total {
                    let mut c = code;
                    let mut p = weight;
                    let mut z = 0.0;
                    for i in 0..n {
                        let y = c % ny;
                        c /= ny;
                        p *= avc.w(x[i], s[i], y);
                        if p == 0.0 {
                            break;
                        }
                        z += info_density(x[i], y, &px, &ps, avc).unwrap();
                    }
                    if p > 0.0 {
                        m1 += p * z;
                        m2 += p * z * z;
                    }
                }
            }
        }
        (m2 - m1 * m1) / n as f64
    }

    #[test]
    fn sigma_n_matches_full_enumeration() {
        let bsc = bsc_avc(0.5, 0.5).unwrap();
        let s2 = sigma_n_exact(&Dist::uniform(2), &Dist::uniform(2), &bsc, 2).unwrap();
        assert!((s2 - sigma_brute(&[1, 1], &[1, 1], &bsc)).abs() < 1e-12);
        let add = adding_avc(0.5, 0.5).unwrap();
        for n in 2..=4 {
            for a in 1..n {
                for b in 1..n {
                    let (cx, cs) = ([n - a, a], [n - b, b]);
                    let exact = sigma_n_exact(
                        &Dist::from_counts(&cx).unwrap(),
                        &Dist::from_counts(&cs).unwrap(),
                        &add,
                        n,
                    )
                    .unwrap();
                    assert!((exact - sigma_brute(&cx, &cs, &add)).abs() < 1e-12);
                }
            }
        }
        assert_eq!(canonical_sequence(&[1, 2]), vec![0, 1, 1]);
    }

    #[test]
    fn f32_measures_track_f64() {
        let avc = bsc_avc(0.4, 0.1).unwrap();
        let avc32: Avc<f32> = avc.cast();
        let px = Dist::new(vec![0.6f32, 0.4]).unwrap();
        let ps = Dist::new(vec![0.9f32, 0.1]).unwrap();
        let v32 = dispersion_v(&px, &ps, &avc32).unwrap();
        let v64 = dispersion_v(&px.cast(), &ps.cast(), &avc).unwrap();
        assert!((v32 as f64 - v64).abs() < 1e-5);
    }

    fn random_avc(w: &[f64]) -> Avc {
        Avc::from_fn(
            2,
            2,
            3,
            |x, s, y| {
                let base = (x * 2 + s) * 3;
                let row = &w[base..base + 3];
                row[y] / row.iter().sum::<f64>()
            },
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            1.0,
            1.0,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn centered_density_is_doubly_centered(
            w in proptest::collection::vec(0.05f64..1.0, 12),
            p in 0.05f64..0.95,
            q in 0.05f64..0.95,
        ) {
            let avc = random_avc(&w);
            let px = d(&[1.0 - p, p]);
            let ps = d(&[1.0 - q, q]);
            let mut total = 0.0;
            let mut by_x = [0.0; 2];
            let mut by_s = [0.0; 2];
            for x in 0..2 {
                for s in 0..2 {
                    for y in 0..3 {
                        let pr = px.probs()[x] * ps.probs()[s] * avc.w(x, s, y);
                        let c = centered_density(x, s, y, &px, &ps, &avc).unwrap();
                        total += pr * c;
                        by_x[x] += pr * c / px.probs()[x];
                        by_s[s] += pr * c / ps.probs()[s];
                    }
                }
            }
            prop_assert!(total.abs() < 1e-10);
            prop_assert!(by_x.iter().chain(&by_s).all(|v| v.abs() < 1e-10));
        }

        #[test]
        fn mutual_information_is_mean_density(
            w in proptest::collection::vec(0.05f64..1.0, 12),
            p in 0.05f64..0.95,
            q in 0.05f64..0.95,
        ) {
            let avc = random_avc(&w);
            let px = d(&[1.0 - p, p]);
            let ps = d(&[1.0 - q, q]);
            let chan = avc.induced_channel(&ps).unwrap();
            let mi = mutual_information(&px, &chan).unwrap();
            let mut mean = 0.0;
            for x in 0..2 {
                for y in 0..3 {
                    mean += px.probs()[x] * chan.get(x, y) * info_density(x, y, &px, &ps, &avc).unwrap();
                }
            }
            prop_assert!((mi - mean).abs() < 1e-12);
            prop_assert!(mi <= 1.0 + 1e-12);
        }

        #[test]
        fn linear_in_state_mixture(
            w in proptest::collection::vec(0.05f64..1.0, 12),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
            t in 0.0f64..1.0,
        ) {
            let avc = random_avc(&w);
            let (pa, pb) = (d(&[1.0 - a, a]), d(&[1.0 - b, b]));
            let mixed = avc.induced_channel(&pa.mix(&pb, t).unwrap()).unwrap();
            let ca = avc.induced_channel(&pa).unwrap();
            let cb = avc.induced_channel(&pb).unwrap();
            for x in 0..2 {
                for y in 0..3 {
                    let lin = (1.0 - t) * ca.get(x, y) + t * cb.get(x, y);
                    prop_assert!((mixed.get(x, y) - lin).abs() < 1e-12);
                }
            }
            let px = d(&[0.3, 0.7]);
            let qa = avc.output_dist(&px, &pa).unwrap();
            let qb = avc.output_dist(&px, &pb).unwrap();
            let qm = avc.output_dist(&px, &pa.mix(&pb, t).unwrap()).unwrap();
            prop_assert!(qm.linf_distance(&qa.mix(&qb, t).unwrap()) < 1e-12);
        }

        #[test]
        fn dispersion_invariant_under_relabeling(
            w in proptest::collection::vec(0.05f64..1.0, 12),
            p in 0.05f64..0.95,
            q in 0.05f64..0.95,
        ) {
            let avc = random_avc(&w);
            // swap input labels, state labels and reverse outputs
            let relabeled = Avc::from_fn(2, 2, 3, |x, s, y| avc.w(1 - x, 1 - s, 2 - y),
                vec![0.0, 1.0], vec![0.0, 1.0], 1.0, 1.0).unwrap();
            let v = dispersion_v(&d(&[1.0 - p, p]), &d(&[1.0 - q, q]), &avc).unwrap();
            let vr = dispersion_v(&d(&[p, 1.0 - p]), &d(&[q, 1.0 - q]), &relabeled).unwrap();
            prop_assert!((v - vr).abs() < 1e-12);
        }

        #[test]
        fn sigma_n_sandwich_on_random_channels(
            w in proptest::collection::vec(0.05f64..1.0, 12),
            n in 2usize..7,
            a in 1usize..6,
            b in 1usize..6,
        ) {
            prop_assume!(a < n && b < n);
            let avc = random_avc(&w);
            let px = Dist::from_counts(&[n - a, a]).unwrap();
            let ps = Dist::from_counts(&[n - b, b]).unwrap();
            let sigma = sigma_n_exact(&px, &ps, &avc, n).unwrap();
            let v = dispersion_v(&px, &ps, &avc).unwrap();
            let var = density_variance(&px, &ps, &avc).unwrap();
            prop_assert!(sigma - v >= -1e-10);
            prop_assert!(sigma - v <= 3.0 / (n as f64 - 1.0) * var + 1e-10);
        }
    }
}
