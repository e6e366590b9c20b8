//! Arbitrarily-varying channel model: the transition tensor `W(y|x,s)`, input and
//! state cost functions with their budgets, probability vectors and the channels
//! induced by mixing over states.
//!
//! Alphabets are index sets `0..k`; symbol labels only exist in the spec-file
//! format.

use std::fmt;

use crate::error::{AvcError, Result};
use crate::scalar::Scalar;

/// Probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Dist<T: Scalar = f64> {
    p: Vec<T>,
}

impl<T: Scalar> Dist<T> {
    /// Validates and renormalizes `p`. Entries must be nonnegative and sum to one
    /// within the normalization tolerance.
    pub fn new(p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(AvcError::InvalidDist("empty alphabet".into()));
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite() || *v < T::zero()) {
            return Err(AvcError::InvalidDist(format!("entry {i} is {}", p[i])));
        }
        let total: T = p.iter().copied().sum();
        if (total - T::one()).abs() > T::norm_tol() {
            return Err(AvcError::InvalidDist(format!("entries sum to {total}")));
        }
        Ok(Self {
            p: p.into_iter().map(|v| v / total).collect(),
        })
    }

    /// Builds a distribution from an arbitrary nonnegative weight vector.
    pub fn from_weights(w: &[T]) -> Result<Self> {
        let total: T = w.iter().copied().sum();
        if w.is_empty() || !(total > T::zero()) || w.iter().any(|v| *v < T::zero()) {
            return Err(AvcError::InvalidDist("weights must be nonnegative with positive sum".into()));
        }
        Ok(Self {
            p: w.iter().map(|v| *v / total).collect(),
        })
    }

    pub fn point(size: usize, at: usize) -> Self {
        assert!(at < size, "point mass outside alphabet");
        let mut p = vec![T::zero(); size];
        p[at] = T::one();
        Self { p }
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0);
        Self {
            p: vec![T::one() / T::c(size as f64); size],
        }
    }

    /// Distribution with probabilities `counts[a] / n`.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(AvcError::ZeroBlocklength);
        }
        let nf = T::c(n as f64);
        Ok(Self {
            p: counts.iter().map(|&c| T::c(c as f64) / nf).collect(),
        })
    }

    pub fn probs(&self) -> &[T] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > T::zero())
            .map(|(i, _)| i)
    }

    /// `Σ_a p(a) f(a)`.
    pub fn expect(&self, f: &[T]) -> T {
        self.p.iter().zip(f).map(|(p, f)| *p * *f).sum()
    }

    /// `(1-w)·self + w·other`.
    pub fn mix(&self, other: &Self, w: T) -> Result<Self> {
        check_size(self.len(), other.len())?;
        let p = self
            .p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (T::one() - w) * *a + w * *b)
            .collect();
        Ok(Self { p })
    }

    /// `E cost ≤ budget`, with a normalization-sized allowance for rounding.
    pub fn is_cost_feasible(&self, costs: &[T], budget: T) -> bool {
        self.expect(costs) <= budget + T::norm_tol()
    }

    /// Returns the count vector when every entry is a multiple of `1/n`.
    pub fn as_type(&self, n: usize) -> Option<Vec<usize>> {
        if n == 0 {
            return None;
        }
        let nf = T::c(n as f64);
        let tol = T::c(1e-9).max(T::epsilon() * T::c(16.0) * nf);
        let mut counts = Vec::with_capacity(self.len());
        for &v in &self.p {
            let scaled = v * nf;
            let r = scaled.round();
            if (scaled - r).abs() > tol {
                return None;
            }
            counts.push(r.to_usize()?);
        }
        (counts.iter().sum::<usize>() == n).then_some(counts)
    }

    /// Maximum absolute coordinate difference.
    pub fn linf_distance(&self, other: &Self) -> T {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn cast<U: Scalar>(&self) -> Dist<U> {
        Dist {
            p: self.p.iter().map(|v| U::c(v.to_f64_lossy())).collect(),
        }
    }
}

impl<T: Scalar> fmt::Display for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.p.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:.6}", v.to_f64_lossy())?;
        }
        write!(f, "]")
    }
}

/// Conditional distribution `P(y|x)`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CondDist<T: Scalar = f64> {
    inputs: usize,
    outputs: usize,
    m: Vec<T>,
}

impl<T: Scalar> CondDist<T> {
    pub fn new(inputs: usize, outputs: usize, m: Vec<T>) -> Result<Self> {
        if inputs == 0 || outputs == 0 || m.len() != inputs * outputs {
            return Err(AvcError::InvalidDist("conditional distribution has wrong shape".into()));
        }
        for x in 0..inputs {
            let row = &m[x * outputs..(x + 1) * outputs];
            Dist::new(row.to_vec())?;
        }
        Ok(Self { inputs, outputs, m })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.m[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.m[x * self.outputs..(x + 1) * self.outputs]
    }

    /// Output distribution `(P_X P_{Y|X})(y)`.
    pub fn output_dist(&self, px: &Dist<T>) -> Result<Dist<T>> {
        check_size(self.inputs, px.len())?;
        let mut q = vec![T::zero(); self.outputs];
        for (x, &p) in px.probs().iter().enumerate() {
            if p > T::zero() {
                for (y, qy) in q.iter_mut().enumerate() {
                    *qy = *qy + p * self.get(x, y);
                }
            }
        }
        Ok(Dist { p: q })
    }
}

/// One violated channel invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyAlphabet(&'static str),
    TensorShape { expected: usize, got: usize },
    CostShape { which: &'static str, expected: usize, got: usize },
    NonFinite { what: String },
    NegativeEntry { x: usize, s: usize, y: usize },
    RowNotNormalized { x: usize, s: usize, sum: f64 },
    EmptyInputFeasibleSet,
    EmptyStateFeasibleSet,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyAlphabet(which) => write!(f, "{which} alphabet is empty"),
            Violation::TensorShape { expected, got } => {
                write!(f, "transition tensor has {got} entries, expected {expected}")
            }
            Violation::CostShape {
                which,
                expected,
                got,
            } => write!(f, "cost vector {which} has {got} entries, expected {expected}"),
            Violation::NonFinite { what } => write!(f, "{what} is not finite"),
            Violation::NegativeEntry { x, s, y } => write!(f, "W({y}|{x},{s}) is negative"),
            Violation::RowNotNormalized { x, s, sum } => {
                write!(f, "row (x={x}, s={s}) sums to {sum}")
            }
            Violation::EmptyInputFeasibleSet => {
                write!(f, "empty input feasible set: gamma < min g")
            }
            Violation::EmptyStateFeasibleSet => {
                write!(f, "empty state feasible set: lambda < min ell")
            }
        }
    }
}

/// Unvalidated channel description.
#[derive(Clone, Debug, PartialEq)]
pub struct AvcParts<T: Scalar = f64> {
    pub input_size: usize,
    pub state_size: usize,
    pub output_size: usize,
    /// Row-major `[x][s][y]`.
    pub w: Vec<T>,
    pub g: Vec<T>,
    pub ell: Vec<T>,
    pub gamma: T,
    pub lambda: T,
}

/// Lists every violated channel invariant; empty means valid.
pub fn validate<T: Scalar>(parts: &AvcParts<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    for (size, name) in [
        (parts.input_size, "input"),
        (parts.state_size, "state"),
        (parts.output_size, "output"),
    ] {
        if size == 0 {
            out.push(Violation::EmptyAlphabet(name));
        }
    }
    if !out.is_empty() {
        return out;
    }
    let expected = parts.input_size * parts.state_size * parts.output_size;
    if parts.w.len() != expected {
        out.push(Violation::TensorShape {
            expected,
            got: parts.w.len(),
        });
    }
    if parts.g.len() != parts.input_size {
        out.push(Violation::CostShape {
            which: "g",
            expected: parts.input_size,
            got: parts.g.len(),
        });
    }
    if parts.ell.len() != parts.state_size {
        out.push(Violation::CostShape {
            which: "ell",
            expected: parts.state_size,
            got: parts.ell.len(),
        });
    }
    if !out.is_empty() {
        return out;
    }
    for (what, v) in [("gamma", parts.gamma), ("lambda", parts.lambda)] {
        if !v.is_finite() {
            out.push(Violation::NonFinite { what: what.into() });
        }
    }
    for (i, v) in parts.g.iter().enumerate() {
        if !v.is_finite() {
            out.push(Violation::NonFinite {
                what: format!("g[{i}]"),
            });
        }
    }
    for (i, v) in parts.ell.iter().enumerate() {
        if !v.is_finite() {
            out.push(Violation::NonFinite {
                what: format!("ell[{i}]"),
            });
        }
    }
    let ny = parts.output_size;
    for x in 0..parts.input_size {
        for s in 0..parts.state_size {
            let base = (x * parts.state_size + s) * ny;
            let row = &parts.w[base..base + ny];
            let mut bad = false;
            for (y, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    out.push(Violation::NonFinite {
                        what: format!("W({y}|{x},{s})"),
                    });
                    bad = true;
                } else if *v < T::zero() {
                    out.push(Violation::NegativeEntry { x, s, y });
                    bad = true;
                }
            }
            let sum: T = row.iter().copied().sum();
            if !bad && (sum - T::one()).abs() > T::norm_tol() {
                out.push(Violation::RowNotNormalized {
                    x,
                    s,
                    sum: sum.to_f64_lossy(),
                });
            }
        }
    }
    let min_g = parts.g.iter().copied().fold(T::infinity(), T::min);
    if min_g > parts.gamma {
        out.push(Violation::EmptyInputFeasibleSet);
    }
    let min_l = parts.ell.iter().copied().fold(T::infinity(), T::min);
    if min_l > parts.lambda {
        out.push(Violation::EmptyStateFeasibleSet);
    }
    out
}

/// Discrete memoryless arbitrarily-varying channel with input cost `g`, state cost
/// `ell` and budgets `gamma`, `lambda`. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Avc<T: Scalar = f64> {
    nx: usize,
    ns: usize,
    ny: usize,
    w: Vec<T>,
    g: Vec<T>,
    ell: Vec<T>,
    gamma: T,
    lambda: T,
}

impl<T: Scalar> Avc<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        input_size: usize,
        state_size: usize,
        output_size: usize,
        w: Vec<T>,
        g: Vec<T>,
        ell: Vec<T>,
        gamma: T,
        lambda: T,
    ) -> Result<Self> {
        Self::from_parts(AvcParts {
            input_size,
            state_size,
            output_size,
            w,
            g,
            ell,
            gamma,
            lambda,
        })
    }

    /// Builds a channel from a transition function `W(y|x,s)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fn(
        input_size: usize,
        state_size: usize,
        output_size: usize,
        w: impl Fn(usize, usize, usize) -> T,
        g: Vec<T>,
        ell: Vec<T>,
        gamma: T,
        lambda: T,
    ) -> Result<Self> {
        let mut tensor = Vec::with_capacity(input_size * state_size * output_size);
        for x in 0..input_size {
            for s in 0..state_size {
                for y in 0..output_size {
                    tensor.push(w(x, s, y));
                }
            }
        }
        Self::new(
            input_size,
            state_size,
            output_size,
            tensor,
            g,
            ell,
            gamma,
            lambda,
        )
    }

    pub fn from_parts(parts: AvcParts<T>) -> Result<Self> {
        let violations = validate(&parts);
        if !violations.is_empty() {
            return Err(AvcError::InvalidChannel(
                violations.iter().map(|v| v.to_string()).collect(),
            ));
        }
        let AvcParts {
            input_size: nx,
            state_size: ns,
            output_size: ny,
            mut w,
            g,
            ell,
            gamma,
            lambda,
        } = parts;
        for row in w.chunks_mut(ny) {
            let sum: T = row.iter().copied().sum();
            for v in row.iter_mut() {
                *v = *v / sum;
            }
        }
        Ok(Self {
            nx,
            ns,
            ny,
            w,
            g,
            ell,
            gamma,
            lambda,
        })
    }

    /// Single-state channel with zero costs; a plain DMC viewed as an AVC.
    pub fn from_channel(channel: &CondDist<T>) -> Result<Self> {
        Self::from_fn(
            channel.inputs(),
            1,
            channel.outputs(),
            |x, _, y| channel.get(x, y),
            vec![T::zero(); channel.inputs()],
            vec![T::zero()],
            T::zero(),
            T::zero(),
        )
    }

    pub fn to_parts(&self) -> AvcParts<T> {
        AvcParts {
            input_size: self.nx,
            state_size: self.ns,
            output_size: self.ny,
            w: self.w.clone(),
            g: self.g.clone(),
            ell: self.ell.clone(),
            gamma: self.gamma,
            lambda: self.lambda,
        }
    }

    /// Same channel and costs with different budgets.
    pub fn with_budgets(&self, gamma: T, lambda: T) -> Result<Self> {
        let mut parts = self.to_parts();
        parts.gamma = gamma;
        parts.lambda = lambda;
        Self::from_parts(parts)
    }

    pub fn input_size(&self) -> usize {
        self.nx
    }

    pub fn state_size(&self) -> usize {
        self.ns
    }

    pub fn output_size(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn w(&self, x: usize, s: usize, y: usize) -> T {
        self.w[(x * self.ns + s) * self.ny + y]
    }

    #[inline]
    pub fn row(&self, x: usize, s: usize) -> &[T] {
        let base = (x * self.ns + s) * self.ny;
        &self.w[base..base + self.ny]
    }

    pub fn g(&self) -> &[T] {
        &self.g
    }

    pub fn ell(&self) -> &[T] {
        &self.ell
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// True when every `W(·|x,s)` is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.w.chunks(self.ny).all(|row| {
            row.iter().filter(|v| **v > T::zero()).count() == 1
        })
    }

    /// States whose single-letter cost fits the budget.
    pub fn feasible_states(&self) -> Vec<usize> {
        (0..self.ns).filter(|&s| self.ell[s] <= self.lambda).collect()
    }

    /// `(P_S W)(y|x) = Σ_s P_S(s) W(y|x,s)`.
    pub fn induced_channel(&self, ps: &Dist<T>) -> Result<CondDist<T>> {
        check_size(self.ns, ps.len())?;
        let mut m = vec![T::zero(); self.nx * self.ny];
        for x in 0..self.nx {
            for (s, &p) in ps.probs().iter().enumerate() {
                if p == T::zero() {
                    continue;
                }
                for (y, &w) in self.row(x, s).iter().enumerate() {
                    m[x * self.ny + y] = m[x * self.ny + y] + p * w;
                }
            }
        }
        Ok(CondDist {
            inputs: self.nx,
            outputs: self.ny,
            m,
        })
    }

    /// `(P_X P_S W)(y)`.
    pub fn output_dist(&self, px: &Dist<T>, ps: &Dist<T>) -> Result<Dist<T>> {
        check_size(self.nx, px.len())?;
        self.induced_channel(ps)?.output_dist(px)
    }

    pub fn cast<U: Scalar>(&self) -> Avc<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::c(x.to_f64_lossy())).collect::<Vec<U>>();
        Avc {
            nx: self.nx,
            ns: self.ns,
            ny: self.ny,
            w: conv(&self.w),
            g: conv(&self.g),
            ell: conv(&self.ell),
            gamma: U::c(self.gamma.to_f64_lossy()),
            lambda: U::c(self.lambda.to_f64_lossy()),
        }
    }
}

/// Binary symmetric AVC: `y = x ⊕ s`, `g(x) = x`, `ell(s) = s`.
pub fn bsc_avc(gamma: f64, lambda: f64) -> Result<Avc<f64>> {
    Avc::from_fn(
        2,
        2,
        2,
        |x, s, y| if y == x ^ s { 1.0 } else { 0.0 },
        vec![0.0, 1.0],
        vec![0.0, 1.0],
        gamma,
        lambda,
    )
}

/// Binary adding AVC: `y = x + s` over the integers, `g(x) = x`, `ell(s) = s`.
pub fn adding_avc(gamma: f64, lambda: f64) -> Result<Avc<f64>> {
    Avc::from_fn(
        2,
        2,
        3,
        |x, s, y| if y == x + s { 1.0 } else { 0.0 },
        vec![0.0, 1.0],
        vec![0.0, 1.0],
        gamma,
        lambda,
    )
}

/// Alphabet-checked symbol sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sequence {
    symbols: Vec<usize>,
}

impl Sequence {
    pub fn new(symbols: Vec<usize>, alphabet_size: usize) -> Result<Self> {
        if let Some(&symbol) = symbols.iter().find(|&&a| a >= alphabet_size) {
            return Err(AvcError::SymbolOutOfRange {
                symbol,
                size: alphabet_size,
            });
        }
        Ok(Self { symbols })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// `Σ_i cost(seq_i) ≤ n · budget`, with no slack.
pub fn cost_feasible<T: Scalar>(seq: &[usize], costs: &[T], budget: T, n: usize) -> bool {
    let total: T = seq.iter().map(|&a| costs[a]).sum();
    total <= T::c(n as f64) * budget
}

pub(crate) fn check_size(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(AvcError::AlphabetMismatch { expected, got })
    }
}
