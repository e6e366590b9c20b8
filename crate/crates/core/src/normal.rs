//! Normal approximations to the maximal code size `log M*(n, ε)`.
//!
//! Both expansions drop their `O(1)` terms; every value produced here is an
//! approximation with that constant set to zero.

use rayon::prelude::*;

use crate::channel::Avc;
use crate::error::{AvcError, Result};
use crate::saddle::{analyze, Analysis, Capacity, SaddleOptions};
use crate::symmetrize::{lambda0, DECISION_TOL};

/// Marker attached to every normal-approximation output.
pub const O1_NOTE: &str = "normal approximation, O(1) term omitted";

/// Complementary CDF of the standard Gaussian.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_func`] on `(0, 1)`.
pub fn q_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(AvcError::InvalidArgument(format!("ε = {eps} outside (0, 1)")));
    }
    // Acklam's rational approximation of the normal quantile at 1 - ε.
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p = 1.0 - eps;
    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    let mut x = if eps > 0.97575 {
        tail(1.0 - eps)
    } else if eps < 0.02425 {
        -tail(eps)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..4 {
        let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if phi == 0.0 {
            break;
        }
        x += (q_func(x) - eps) / phi;
    }
    Ok(x)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(AvcError::InvalidArgument(format!("ε = {eps} outside (0, 1/2)")));
    }
    Ok(())
}

/// First- and second-order quantities feeding the two expansions.
#[derive(Clone, Debug)]
pub struct SecondOrder {
    pub capacity: f64,
    pub random_code_capacity: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    pub input_size: usize,
    pub state_size: usize,
    /// Some `V₊`-attaining optimal input has `Λ₀(P_X) > Λ`.
    pub hypothesis_verified: bool,
}

impl SecondOrder {
    pub fn from_analysis(avc: &Avc, analysis: &Analysis) -> Result<Self> {
        let Capacity::Positive(sol) = &analysis.capacity else {
            return Err(AvcError::Symmetrizable);
        };
        let px = &sol.px_opt[sol.v_plus_at];
        let hypothesis_verified = lambda0(px, avc)?.lambda0 > avc.lambda() + DECISION_TOL;
        Ok(Self {
            capacity: sol.value,
            random_code_capacity: analysis.random.value,
            v_plus: sol.v_plus,
            v_minus: analysis.random.v_minus,
            input_size: avc.input_size(),
            state_size: avc.state_size(),
            hypothesis_verified,
        })
    }

    pub fn compute(avc: &Avc, opts: &SaddleOptions) -> Result<Self> {
        Self::from_analysis(avc, &analyze(avc, opts)?)
    }

    /// `|𝒳| + |𝒮| - 3/2`
    pub fn polylog_coeff(&self) -> f64 {
        (self.input_size + self.state_size) as f64 - 1.5
    }

    /// `n C_r - √(n V₋) Q⁻¹(ε) + (|𝒳| + |𝒮| - 3/2) log n`
    pub fn converse(&self, n: u64, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let nf = n as f64;
        Ok(nf * self.random_code_capacity - (nf * self.v_minus).sqrt() * q_inv(eps)?
            + self.polylog_coeff() * nf.log2())
    }

    /// `n C - √(n V₊) Q⁻¹(ε) - (|𝒳| + |𝒮| - 3/2) log n`
    pub fn achievability(&self, n: u64, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let nf = n as f64;
        Ok(nf * self.capacity - (nf * self.v_plus).sqrt() * q_inv(eps)?
            - self.polylog_coeff() * nf.log2())
    }
}

/// Converse expansion for `log M*(n, ε)` in bits.
pub fn converse_na(avc: &Avc, n: u64, eps: f64, opts: &SaddleOptions) -> Result<f64> {
    check_eps(eps)?;
    let random = crate::saddle::random_code_capacity(avc, opts)?;
    let nf = n as f64;
    let coeff = (avc.input_size() + avc.state_size()) as f64 - 1.5;
    Ok(nf * random.value - (nf * random.v_minus).sqrt() * q_inv(eps)? + coeff * nf.log2())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Achievability {
    pub bits: f64,
    pub hypothesis_verified: bool,
}

/// Achievability expansion for `log M*(n, ε)` in bits, with a flag recording
/// whether its hypothesis was verified.
pub fn achievability_na(avc: &Avc, n: u64, eps: f64, opts: &SaddleOptions) -> Result<Achievability> {
    check_eps(eps)?;
    let so = SecondOrder::compute(avc, opts)?;
    Ok(Achievability {
        bits: so.achievability(n, eps)?,
        hypothesis_verified: so.hypothesis_verified,
    })
}

#[derive(Clone, Debug)]
pub struct NaCurve {
    pub n_values: Vec<u64>,
    pub eps: f64,
    pub converse_bits: Vec<f64>,
    pub achievability_bits: Vec<f64>,
    pub polylog_coeff: f64,
    pub hypothesis_verified: bool,
    pub note: &'static str,
}

impl NaCurve {
    pub fn new(so: &SecondOrder, n_values: Vec<u64>, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let rows: Vec<(f64, f64)> = n_values
            .par_iter()
            .map(|&n| Ok((so.converse(n, eps)?, so.achievability(n, eps)?)))
            .collect::<Result<_>>()?;
        let (converse_bits, achievability_bits) = rows.into_iter().unzip();
        Ok(Self {
            n_values,
            eps,
            converse_bits,
            achievability_bits,
            polylog_coeff: so.polylog_coeff(),
            hypothesis_verified: so.hypothesis_verified,
            note: O1_NOTE,
        })
    }
}

/// Sufficient conditions for the two expansions to agree to second order.
#[derive(Clone, Debug, PartialEq)]
pub struct CorollaryCheck {
    pub cr_equals_c: bool,
    pub vplus_equals_vminus: bool,
    /// Some random-code optimal input has `Λ₀(P_X) > Λ`.
    pub cond_i: bool,
    /// One of the optimal input or state sets of the capacity problem is a
    /// singleton.
    pub cond_ii: bool,
    pub symmetrizable: bool,
    pub capacity: f64,
    pub random_code_capacity: f64,
    pub v_plus: Option<f64>,
    pub v_minus: f64,
}

impl CorollaryCheck {
    pub fn all(&self) -> bool {
        self.cr_equals_c && self.vplus_equals_vminus && self.cond_i && self.cond_ii
    }
}

pub fn corollary_check(avc: &Avc, opts: &SaddleOptions) -> Result<CorollaryCheck> {
    corollary_from_analysis(avc, &analyze(avc, opts)?)
}

pub fn corollary_from_analysis(avc: &Avc, analysis: &Analysis) -> Result<CorollaryCheck> {
    let random = &analysis.random;
    let mut cond_i = false;
    for px in &random.px_opt {
        if lambda0(px, avc)?.lambda0 > avc.lambda() + DECISION_TOL {
            cond_i = true;
            break;
        }
    }
    let (capacity, v_plus, cond_ii) = match &analysis.capacity {
        Capacity::Positive(s) => (s.value, Some(s.v_plus), s.px_singleton || s.ps_singleton),
        Capacity::Symmetrizable(_) => (0.0, None, false),
    };
    Ok(CorollaryCheck {
        cr_equals_c: (capacity - random.value).abs() <= 1e-8,
        vplus_equals_vminus: v_plus.is_some_and(|v| (v - random.v_minus).abs() <= 1e-6),
        cond_i: cond_i && v_plus.is_some(),
        cond_ii,
        symmetrizable: v_plus.is_none(),
        capacity,
        random_code_capacity: random.value,
        v_plus,
        v_minus: random.v_minus,
    })
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm {
    pub capacity: f64,
    pub v_plus: f64,
    pub symmetrizable: bool,
}

/// Capacity and dispersion of the binary symmetric AVC. Input budgets above
/// one half are inactive, so the capacity is evaluated at `min{Γ, 1/2}`.
pub fn bsc_avc_closed_form(gamma: f64, lam: f64) -> ClosedForm {
    if lam >= gamma.min(0.5) {
        return ClosedForm {
            capacity: 0.0,
            v_plus: 0.0,
            symmetrizable: true,
        };
    }
    let g = gamma.min(0.5);
    let mix = g * (1.0 - lam) + (1.0 - g) * lam;
    let v_plus = if gamma <= 0.5 {
        let r = (lam + gamma - 2.0 * lam * gamma) / (1.0 - lam - gamma + 2.0 * lam * gamma);
        4.0 * gamma * (1.0 - gamma) * lam * (1.0 - lam) * r.log2().powi(2)
    } else {
        0.0
    };
    ClosedForm {
        capacity: binary_entropy(mix) - binary_entropy(lam),
        v_plus,
        symmetrizable: false,
    }
}

/// Dispersion of the binary symmetric channel with crossover `p`.
pub fn bsc_dispersion(p: f64) -> f64 {
    p * (1.0 - p) * ((1.0 - p) / p).log2().powi(2)
}
