//! Finite-blocklength achievability bound for the AVC without shared
//! randomness: a random-coding-union analogue built from a pairwise test `Z`
//! and a typical set `𝒜`.
//!
//! Sequences of any length are handled uniformly, so the single-shot bound is
//! the `n = 1` case of the `n`-letter evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{Avc, Dist};
use crate::error::{AvcError, Result};
use crate::symmetrize::{eta_star, lambda0};
use crate::types::{
    binomial, canonical_sequence, compositions, sample_type_class, type_class_members,
    type_class_size,
};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Maximum number of `(x, x̄, y)` evaluations in exact mode.
pub const EXACT_LIMIT: u128 = 200_000_000;

/// Maximum number of `x̄` representatives per state in Monte Carlo mode.
pub const CANDIDATE_LIMIT: u128 = 100_000;

/// Triples checked for `Z(x,x̄,y)·Z(x̄,x,y) = 0` in Monte Carlo mode.
pub const UNIQUENESS_SPOT_CHECKS: usize = 10_000;

/// Pairwise decoding test `Z(x, x̄, y) ∈ {0, 1}`.
pub trait PairTest: Sync {
    fn z(&self, x: &[usize], xbar: &[usize], y: &[usize]) -> bool;
}

impl<F> PairTest for F
where
    F: Fn(&[usize], &[usize], &[usize]) -> bool + Sync,
{
    fn z(&self, x: &[usize], xbar: &[usize], y: &[usize]) -> bool {
        self(x, xbar, y)
    }
}

/// Membership predicate for `𝒜 ⊆ 𝒳ⁿ × 𝒴ⁿ`.
pub trait TypicalSet: Sync {
    fn contains(&self, x: &[usize], y: &[usize]) -> bool;

    /// Threshold in bits, when the set is defined by one.
    fn gamma(&self) -> Option<f64> {
        None
    }
}

/// `𝒜 = 𝒳ⁿ × 𝒴ⁿ`.
pub struct Everything;

impl TypicalSet for Everything {
    fn contains(&self, _: &[usize], _: &[usize]) -> bool {
        true
    }
}

/// `𝒜 = ∅`.
pub struct Nothing;

impl TypicalSet for Nothing {
    fn contains(&self, _: &[usize], _: &[usize]) -> bool {
        false
    }
}

/// Letter-wise information density `ı(x;y)` of `(P_X, P_S W)` in bits, summed
/// over positions.
#[derive(Clone, Debug)]
pub struct LetterDensity {
    ny: usize,
    dens: Vec<f64>,
}

impl LetterDensity {
    pub fn new(px: &Dist, ps: &Dist, avc: &Avc) -> Result<Self> {
        let ch = avc.induced_channel(ps)?;
        let q = ch.output_dist(px)?;
        let ny = avc.output_size();
        let mut dens = vec![f64::NEG_INFINITY; avc.input_size() * ny];
        for x in 0..avc.input_size() {
            for y in 0..ny {
                let v = ch.get(x, y);
                if v > 0.0 && q.probs()[y] > 0.0 {
                    dens[x * ny + y] = (v / q.probs()[y]).log2();
                }
            }
        }
        Ok(Self { ny, dens })
    }

    pub fn density(&self, x: &[usize], y: &[usize]) -> f64 {
        x.iter().zip(y).map(|(&a, &b)| self.dens[a * self.ny + b]).sum()
    }
}

/// `Z(x, x̄, y) = 1(ı(x;y) > ı(x̄;y))`.
pub struct DensityTest(pub LetterDensity);

impl PairTest for DensityTest {
    fn z(&self, x: &[usize], xbar: &[usize], y: &[usize]) -> bool {
        self.0.density(x, y) > self.0.density(xbar, y)
    }
}

/// `𝒜 = {ı(x;y) ≥ γ}`.
pub struct DensityThreshold {
    pub density: LetterDensity,
    pub gamma: f64,
}

impl TypicalSet for DensityThreshold {
    fn contains(&self, x: &[usize], y: &[usize]) -> bool {
        self.density.density(x, y) >= self.gamma
    }
    fn gamma(&self) -> Option<f64> {
        Some(self.gamma)
    }
}

/// Typical set of the constant-composition proof: `(xⁿ, yⁿ) ∈ 𝒜` iff for some
/// state type `P_S ∈ 𝒫ₙ(𝒮)`,
/// `log (P_S W)ⁿ(yⁿ|xⁿ) / (U_{P_X} P_Sⁿ Wⁿ)(yⁿ) ≥ γ` with
/// `γ = log(√n·|𝒫ₙ(𝒮)|·M)`.
pub struct TypeTypicalSet {
    ny: usize,
    counts: Vec<usize>,
    log_class: f64,
    /// `(P_S W)(y|x)` for every state type, flattened `[x][y]`.
    channels: Vec<Vec<f64>>,
    gamma: f64,
}

impl TypeTypicalSet {
    pub fn new(avc: &Avc, counts: &[usize], m: u64) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(AvcError::ZeroBlocklength);
        }
        if counts.len() != avc.input_size() {
            return Err(AvcError::AlphabetMismatch {
                expected: avc.input_size(),
                got: counts.len(),
            });
        }
        let (nx, ns, ny) = (avc.input_size(), avc.state_size(), avc.output_size());
        let state_types = compositions(n, ns);
        let channels = state_types
            .iter()
            .map(|c| {
                let mut ch = vec![0.0; nx * ny];
                for x in 0..nx {
                    for s in 0..ns {
                        let p = c[s] as f64 / n as f64;
                        if p > 0.0 {
                            for y in 0..ny {
                                ch[x * ny + y] += p * avc.w(x, s, y);
                            }
                        }
                    }
                }
                ch
            })
            .collect::<Vec<_>>();
        let gamma = ((n as f64).sqrt() * state_types.len() as f64 * m as f64).log2();
        Ok(Self {
            ny,
            counts: counts.to_vec(),
            log_class: type_class_size(counts).log2(),
            channels,
            gamma,
        })
    }

    /// Largest normalized density over the state types, in bits.
    pub fn max_density(&self, x: &[usize], y: &[usize]) -> f64 {
        self.channels
            .iter()
            .map(|ch| {
                let num: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(&a, &b)| ch[a * self.ny + b].log2())
                    .sum();
                if num == f64::NEG_INFINITY {
                    return num;
                }
                num - self.log_output(ch, y)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `log2 (U_{P_X} P_Sⁿ Wⁿ)(yⁿ)` by dynamic programming over partial
    /// compositions.
    fn log_output(&self, ch: &[f64], y: &[usize]) -> f64 {
        let k = self.counts.len();
        let mut stride = vec![1usize; k];
        for a in 1..k {
            stride[a] = stride[a - 1] * (self.counts[a - 1] + 1);
        }
        let size = stride[k - 1] * (self.counts[k - 1] + 1);
        let mut dp = vec![0.0; size];
        dp[0] = 1.0;
        let mut log_scale = 0.0;
        for &b in y {
            let scale = (0..k)
                .map(|a| ch[a * self.ny + b])
                .fold(0.0f64, f64::max);
            if scale == 0.0 {
                return f64::NEG_INFINITY;
            }
            log_scale += scale.log2();
            let mut next = vec![0.0; size];
            for (idx, &v) in dp.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                for a in 0..k {
                    let used = (idx / stride[a]) % (self.counts[a] + 1);
                    if used < self.counts[a] {
                        next[idx + stride[a]] += v * ch[a * self.ny + b] / scale;
                    }
                }
            }
            dp = next;
        }
        let total = dp[size - 1];
        if total == 0.0 {
            return f64::NEG_INFINITY;
        }
        total.log2() + log_scale - self.log_class
    }
}

impl TypicalSet for TypeTypicalSet {
    fn contains(&self, x: &[usize], y: &[usize]) -> bool {
        self.max_density(x, y) >= self.gamma
    }
    fn gamma(&self) -> Option<f64> {
        Some(self.gamma)
    }
}

/// `((x, x̄, y), count, states allowed by W)`
type Group = ((usize, usize, usize), usize, Vec<usize>);

/// `n`-letter test of the constant-composition proof: `Z(xⁿ, x̄ⁿ, yⁿ) = 1` iff
/// `(xⁿ, yⁿ) ∈ 𝒜` and either `(x̄ⁿ, yⁿ) ∉ 𝒜` or some cost-feasible `sⁿ` puts
/// the joint type of `(xⁿ, x̄ⁿ, sⁿ, yⁿ)` in `𝒟_η`.
pub struct EtaTest<'a> {
    avc: &'a Avc,
    px: Vec<f64>,
    eta: f64,
    set: TypeTypicalSet,
}

impl<'a> EtaTest<'a> {
    pub fn new(avc: &'a Avc, counts: &[usize], eta: f64, set: TypeTypicalSet) -> Self {
        let n: usize = counts.iter().sum();
        Self {
            avc,
            px: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            eta,
            set,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn typical_set(&self) -> &TypeTypicalSet {
        &self.set
    }

    /// Whether some cost-feasible state sequence puts the joint type in `𝒟_η`.
    pub fn in_d_eta(&self, x: &[usize], xbar: &[usize], y: &[usize]) -> bool {
        let avc = self.avc;
        let (nx, ns, ny) = (avc.input_size(), avc.state_size(), avc.output_size());
        let n = x.len();
        let mut groups = vec![0usize; nx * nx * ny];
        for i in 0..n {
            groups[(x[i] * nx + xbar[i]) * ny + y[i]] += 1;
        }
        let groups: Vec<Group> = groups
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(g, &c)| {
                let (a, b, yy) = (g / (nx * ny), (g / ny) % nx, g % ny);
                let allowed = (0..ns).filter(|&s| avc.w(a, s, yy) > 0.0).collect();
                ((a, b, yy), c, allowed)
            })
            .collect();
        let budget = n as f64 * avc.lambda() + 1e-9;
        let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
        self.search(&groups, &mut chosen, 0.0, budget, n)
    }

    fn search(
        &self,
        groups: &[Group],
        chosen: &mut Vec<Vec<usize>>,
        cost: f64,
        budget: f64,
        n: usize,
    ) -> bool {
        let g = chosen.len();
        if g == groups.len() {
            return self.divergence(groups, chosen, n) <= self.eta;
        }
        let (_, count, allowed) = &groups[g];
        if allowed.is_empty() {
            return false;
        }
        for comp in compositions(*count, allowed.len()) {
            let extra: f64 = comp
                .iter()
                .zip(allowed)
                .map(|(&c, &s)| c as f64 * self.avc.ell()[s])
                .sum();
            if cost + extra > budget {
                continue;
            }
            let mut full = vec![0usize; self.avc.state_size()];
            for (&c, &s) in comp.iter().zip(allowed) {
                full[s] = c;
            }
            chosen.push(full);
            if self.search(groups, chosen, cost + extra, budget, n) {
                chosen.pop();
                return true;
            }
            chosen.pop();
        }
        false
    }

    /// `D(Q_{XX'SY} ‖ P_X × Q_{X'S} × W)` in bits.
    fn divergence(
        &self,
        groups: &[Group],
        chosen: &[Vec<usize>],
        n: usize,
    ) -> f64 {
        let (nx, ns) = (self.avc.input_size(), self.avc.state_size());
        let nf = n as f64;
        let mut q_xps = vec![0.0; nx * ns];
        for (((_, b, _), _, _), comp) in groups.iter().zip(chosen) {
            for s in 0..ns {
                q_xps[b * ns + s] += comp[s] as f64 / nf;
            }
        }
        let mut d = 0.0;
        for (((a, b, y), _, _), comp) in groups.iter().zip(chosen) {
            for s in 0..ns {
                if comp[s] == 0 {
                    continue;
                }
                let q = comp[s] as f64 / nf;
                let r = self.px[*a] * q_xps[b * ns + s] * self.avc.w(*a, s, *y);
                d += q * (q / r).log2();
            }
        }
        d
    }
}

impl PairTest for EtaTest<'_> {
    fn z(&self, x: &[usize], xbar: &[usize], y: &[usize]) -> bool {
        if !self.set.contains(x, y) {
            return false;
        }
        !self.set.contains(xbar, y) || self.in_d_eta(x, xbar, y)
    }
}

/// Number `N_s` of adversarial events entering `log(3N_s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StateCount {
    /// `|𝒮ⁿ(Λ)|`, the number of admissible state sequences.
    #[default]
    Sequences,
    /// `|𝒫ₙ(𝒮)|`, the number of state types.
    Types,
    /// `n|𝒮|`, giving the factor `log(3n|𝒮|)`.
    Literal,
}

impl StateCount {
    pub fn value(self, avc: &Avc, n: usize) -> f64 {
        let ns = avc.state_size();
        match self {
            StateCount::Sequences => compositions(n, ns)
                .iter()
                .filter(|c| state_type_feasible(avc, c))
                .map(|c| type_class_size(c))
                .sum(),
            StateCount::Types => binomial(n + ns - 1, ns - 1),
            StateCount::Literal => (n * ns) as f64,
        }
    }
}

fn state_type_feasible(avc: &Avc, counts: &[usize]) -> bool {
    let n: usize = counts.iter().sum();
    let cost: f64 = counts
        .iter()
        .zip(avc.ell())
        .map(|(&c, &l)| c as f64 * l)
        .sum();
    cost <= n as f64 * avc.lambda() + 1e-9
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalMode::Exact => "exact",
            EvalMode::MonteCarlo => "monte-carlo",
        })
    }
}

/// Evaluated achievability bound `ε ≤ total`.
#[derive(Clone, Debug, PartialEq)]
pub struct RcuReport {
    /// `max_s P((X,Y_s) ∉ 𝒜)`
    pub term_miss: f64,
    /// `max_s (2 log e)·M·P(Z(X,X̄,Y_s) = 0, (X,Y_s) ∈ 𝒜)`
    pub term_confusion: f64,
    /// `max_s max_x̄ 2 log(3N_s)·P(Z(X,x̄,Y_s) = 0, (X,Y_s) ∈ 𝒜)`
    pub term_esssup: f64,
    /// `√(2 ln(3N_s)/M)`
    pub term_slack: f64,
    /// Sum of the four terms, each maximized over states separately.
    pub total: f64,
    /// The bound with a single state maximizing the first three terms jointly.
    pub total_joint: f64,
    pub n: usize,
    pub m: u64,
    pub n_s: f64,
    pub eval_mode: EvalMode,
    pub mc_samples: usize,
    pub seed: u64,
    /// Standard errors of the first three terms.
    pub term_std_errors: [f64; 3],
    /// Root-sum-square of `term_std_errors`.
    pub std_error: f64,
    /// Threshold of `𝒜`, when it has one.
    pub gamma: Option<f64>,
    /// State sequence attaining the miss term.
    pub worst_state: Vec<usize>,
    pub warnings: Vec<String>,
}

impl RcuReport {
    /// A bound of at least one says nothing.
    pub fn vacuous(&self) -> bool {
        self.total >= 1.0
    }

    pub fn terms(&self) -> [f64; 4] {
        [
            self.term_miss,
            self.term_confusion,
            self.term_esssup,
            self.term_slack,
        ]
    }
}

/// Distribution of the codeword `X` (and of the independent `X̄`).
enum Inputs {
    Explicit { seqs: Vec<Vec<usize>>, probs: Vec<f64> },
    TypeClass(Vec<usize>),
}

impl Inputs {
    fn enumerate(&self) -> Result<(Vec<Vec<usize>>, Vec<f64>)> {
        match self {
            Inputs::Explicit { seqs, probs } => Ok((seqs.clone(), probs.clone())),
            Inputs::TypeClass(c) => {
                let size = type_class_size(c);
                let members = type_class_members(c);
                let p = 1.0 / size;
                let probs = vec![p; members.len()];
                Ok((members, probs))
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        match self {
            Inputs::Explicit { seqs, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (s, &p) in seqs.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return s.clone();
                    }
                }
                let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                seqs[last].clone()
            }
            Inputs::TypeClass(c) => sample_type_class(c, rng),
        }
    }

    fn size(&self) -> f64 {
        match self {
            Inputs::Explicit { seqs, .. } => seqs.len() as f64,
            Inputs::TypeClass(c) => type_class_size(c),
        }
    }

    /// Values of `x̄` among which the maximum of the third term is attained,
    /// given the state sequence.
    fn candidates(&self, state: &[usize], ns: usize) -> Result<Vec<Vec<usize>>> {
        match self {
            Inputs::Explicit { seqs, probs } => Ok(seqs
                .iter()
                .zip(probs)
                .filter(|(_, &p)| p > 0.0)
                .map(|(s, _)| s.clone())
                .collect()),
            Inputs::TypeClass(c) => joint_type_representatives(c, state, ns),
        }
    }
}

/// One `x̄` of type `counts` per joint type of `(x̄, state)`.
fn joint_type_representatives(
    counts: &[usize],
    state: &[usize],
    ns: usize,
) -> Result<Vec<Vec<usize>>> {
    let k = counts.len();
    let positions: Vec<Vec<usize>> = (0..ns)
        .map(|b| (0..state.len()).filter(|&i| state[i] == b).collect())
        .collect();
    let mut needed: u128 = 1;
    for p in &positions {
        needed = needed.saturating_mul(binomial(p.len() + k - 1, k - 1) as u128);
    }
    if needed > CANDIDATE_LIMIT {
        return Err(AvcError::GuardExceeded {
            what: "joint-type representatives".into(),
            needed,
            limit: CANDIDATE_LIMIT,
        });
    }
    let mut out = Vec::new();
    let mut left = counts.to_vec();
    let mut picks: Vec<Vec<usize>> = Vec::new();
    fn rec(
        b: usize,
        positions: &[Vec<usize>],
        left: &mut Vec<usize>,
        picks: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<usize>>,
        n: usize,
    ) {
        if b == positions.len() {
            if left.iter().all(|&c| c == 0) {
                let mut seq = vec![0; n];
                for (pos, pick) in positions.iter().zip(picks.iter()) {
                    for (&i, a) in pos.iter().zip(canonical_sequence(pick)) {
                        seq[i] = a;
                    }
                }
                out.push(seq);
            }
            return;
        }
        for comp in compositions(positions[b].len(), left.len()) {
            if comp.iter().zip(left.iter()).any(|(c, l)| c > l) {
                continue;
            }
            for (l, c) in left.iter_mut().zip(&comp) {
                *l -= c;
            }
            picks.push(comp.clone());
            rec(b + 1, positions, left, picks, out, n);
            picks.pop();
            for (l, c) in left.iter_mut().zip(&comp) {
                *l += c;
            }
        }
    }
    rec(0, &positions, &mut left, &mut picks, &mut out, state.len());
    Ok(out)
}

/// Every output sequence reachable from `(x, s)` with its probability.
fn outputs(avc: &Avc, x: &[usize], s: &[usize]) -> Vec<(Vec<usize>, f64)> {
    let mut out = vec![(Vec::with_capacity(x.len()), 1.0)];
    for (&a, &b) in x.iter().zip(s) {
        let row = avc.row(a, b);
        let mut next = Vec::with_capacity(out.len());
        for (seq, p) in &out {
            for (y, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    let mut t = seq.clone();
                    t.push(y);
                    next.push((t, p * w));
                }
            }
        }
        out = next;
    }
    out
}

fn output_count(avc: &Avc, x: &[usize], s: &[usize]) -> u128 {
    x.iter()
        .zip(s)
        .map(|(&a, &b)| avc.row(a, b).iter().filter(|&&w| w > 0.0).count() as u128)
        .product()
}

fn sample_output(avc: &Avc, x: &[usize], s: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    x.iter()
        .zip(s)
        .map(|(&a, &b)| {
            let row = avc.row(a, b);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (y, &w) in row.iter().enumerate() {
                acc += w;
                if u < acc {
                    return y;
                }
            }
            row.iter().rposition(|&w| w > 0.0).unwrap_or(0)
        })
        .collect()
}

/// Generator for sample `i` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Per-state probabilities of the three events and their standard errors.
#[derive(Clone, Debug, Default)]
struct StateTerms {
    miss: f64,
    conf: f64,
    ess: f64,
    se: [f64; 3],
}

struct Problem<'a> {
    avc: &'a Avc,
    inputs: Inputs,
    states: Vec<Vec<usize>>,
    z: &'a dyn PairTest,
    a: &'a dyn TypicalSet,
    m: u64,
    n_s: f64,
    n: usize,
}

impl Problem<'_> {
    fn exact_state(&self, s: &[usize], xs: &[Vec<usize>], ps: &[f64]) -> Result<StateTerms> {
        let cands = self.inputs.candidates(s, self.avc.state_size())?;
        let per_x: Vec<Result<(f64, f64, Vec<f64>)>> = xs
            .par_iter()
            .zip(ps)
            .map(|(x, &px)| {
                let (mut miss, mut conf) = (0.0, 0.0);
                let mut ess = vec![0.0; cands.len()];
                if px == 0.0 {
                    return Ok((miss, conf, ess));
                }
                for (y, py) in outputs(self.avc, x, s) {
                    let w = px * py;
                    if !self.a.contains(x, &y) {
                        miss += w;
                        continue;
                    }
                    let mut fail = 0.0;
                    for (xb, &pb) in xs.iter().zip(ps) {
                        if pb == 0.0 {
                            continue;
                        }
                        let zf = self.z.z(x, xb, &y);
                        if zf && self.z.z(xb, x, &y) {
                            return Err(AvcError::InvalidTest);
                        }
                        if !zf {
                            fail += pb;
                        }
                    }
                    conf += w * fail;
                    for (e, xb) in ess.iter_mut().zip(&cands) {
                        if !self.z.z(x, xb, &y) {
                            *e += w;
                        }
                    }
                }
                Ok((miss, conf, ess))
            })
            .collect();
        let mut t = StateTerms::default();
        let mut ess = vec![0.0; cands.len()];
        for r in per_x {
            let (mi, co, es) = r?;
            t.miss += mi;
            t.conf += co;
            for (a, b) in ess.iter_mut().zip(es) {
                *a += b;
            }
        }
        t.ess = ess.into_iter().fold(0.0, f64::max);
        Ok(t)
    }

    fn mc_state(&self, s: &[usize], samples: usize, seed: u64) -> Result<StateTerms> {
        let cands = self.inputs.candidates(s, self.avc.state_size())?;
        let draws: Vec<Result<(bool, bool, Vec<bool>)>> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i as u64);
                let x = self.inputs.sample(&mut rng);
                let xb = self.inputs.sample(&mut rng);
                let y = sample_output(self.avc, &x, s, &mut rng);
                if !self.a.contains(&x, &y) {
                    return Ok((true, false, vec![false; cands.len()]));
                }
                let zf = self.z.z(&x, &xb, &y);
                if i < UNIQUENESS_SPOT_CHECKS && zf && self.z.z(&xb, &x, &y) {
                    return Err(AvcError::InvalidTest);
                }
                let ess = cands.iter().map(|c| !self.z.z(&x, c, &y)).collect();
                Ok((false, !zf, ess))
            })
            .collect();
        let (mut miss, mut conf) = (0u64, 0u64);
        let mut ess = vec![0u64; cands.len()];
        for d in draws {
            let (mi, co, es) = d?;
            miss += mi as u64;
            conf += co as u64;
            for (a, b) in ess.iter_mut().zip(es) {
                *a += b as u64;
            }
        }
        let nf = samples as f64;
        let mean_se = |k: u64| {
            let p = k as f64 / nf;
            (p, (p * (1.0 - p) / nf).sqrt())
        };
        let (pm, sm) = mean_se(miss);
        let (pc, sc) = mean_se(conf);
        let best = ess.iter().copied().max().unwrap_or(0);
        let (pe, se) = mean_se(best);
        Ok(StateTerms {
            miss: pm,
            conf: pc,
            ess: pe,
            se: [sm, sc, se],
        })
    }

    fn run(&self, mode: EvalMode, samples: usize, seed: u64) -> Result<RcuReport> {
        if self.m == 0 {
            return Err(AvcError::InvalidArgument("M must be at least 1".into()));
        }
        let per_state: Vec<StateTerms> = match mode {
            EvalMode::Exact => {
                let (xs, ps) = self.inputs.enumerate()?;
                let outs: u128 = self
                    .states
                    .iter()
                    .map(|s| xs.iter().map(|x| output_count(self.avc, x, s)).sum::<u128>())
                    .sum();
                let needed = outs.saturating_mul(xs.len() as u128);
                if needed > EXACT_LIMIT {
                    return Err(AvcError::GuardExceeded {
                        what: "exact bound evaluations".into(),
                        needed,
                        limit: EXACT_LIMIT,
                    });
                }
                self.states
                    .iter()
                    .map(|s| self.exact_state(s, &xs, &ps))
                    .collect::<Result<_>>()?
            }
            EvalMode::MonteCarlo => {
                if samples == 0 {
                    return Err(AvcError::InvalidArgument("Monte Carlo needs samples".into()));
                }
                self.states
                    .iter()
                    .map(|s| self.mc_state(s, samples, seed))
                    .collect::<Result<_>>()?
            }
        };
        let m = self.m as f64;
        let single = self.m == 1;
        let conf_factor = if single { 0.0 } else { 2.0 * LOG2_E * m };
        let ess_factor = if single { 0.0 } else { 2.0 * (3.0 * self.n_s).log2() };
        let argmax = |f: &dyn Fn(&StateTerms) -> f64| {
            (0..per_state.len())
                .max_by(|&a, &b| f(&per_state[a]).total_cmp(&f(&per_state[b])))
                .expect("at least one state")
        };
        let im = argmax(&|t| t.miss);
        let ic = argmax(&|t| t.conf);
        let ie = argmax(&|t| t.ess);
        let term_slack = (2.0 * (3.0 * self.n_s).ln() / m).sqrt();
        let term_miss = per_state[im].miss;
        let term_confusion = conf_factor * per_state[ic].conf;
        let term_esssup = ess_factor * per_state[ie].ess;
        let joint = per_state
            .iter()
            .map(|t| t.miss + conf_factor * t.conf + ess_factor * t.ess)
            .fold(f64::NEG_INFINITY, f64::max);
        let term_std_errors = [
            per_state[im].se[0],
            conf_factor * per_state[ic].se[1],
            ess_factor * per_state[ie].se[2],
        ];
        let std_error = term_std_errors.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(RcuReport {
            term_miss,
            term_confusion,
            term_esssup,
            term_slack,
            total: term_miss + term_confusion + term_esssup + term_slack,
            total_joint: joint + term_slack,
            n: self.n,
            m: self.m,
            n_s: self.n_s,
            eval_mode: mode,
            mc_samples: if mode == EvalMode::Exact { 0 } else { samples },
            seed,
            term_std_errors,
            std_error,
            gamma: self.a.gamma(),
            worst_state: per_state
                .get(im)
                .map(|_| self.states[im].clone())
                .unwrap_or_default(),
            warnings: Vec::new(),
        })
    }
}

fn single_shot<'a>(
    avc: &'a Avc,
    px: &Dist,
    z: &'a dyn PairTest,
    a: &'a dyn TypicalSet,
    m: u64,
    n_s: Option<f64>,
) -> Result<Problem<'a>> {
    crate::channel::check_size(avc.input_size(), px.len())?;
    let states: Vec<Vec<usize>> = avc.feasible_states().into_iter().map(|s| vec![s]).collect();
    if states.is_empty() {
        return Err(AvcError::InfeasibleType("no state meets the budget".into()));
    }
    Ok(Problem {
        avc,
        inputs: Inputs::Explicit {
            seqs: (0..px.len()).map(|x| vec![x]).collect(),
            probs: px.probs().to_vec(),
        },
        n_s: n_s.unwrap_or(avc.state_size() as f64),
        states,
        z,
        a,
        m,
        n: 1,
    })
}

/// Single-shot bound by exhaustive summation over `(x, x̄, s, y)`. `n_s`
/// defaults to `|𝒮|`. Every triple is checked for `Z(x,x̄,y)·Z(x̄,x,y) = 0`.
pub fn rcu_exact_singleshot(
    avc: &Avc,
    px: &Dist,
    z: &dyn PairTest,
    a: &dyn TypicalSet,
    m: u64,
    n_s: Option<f64>,
) -> Result<RcuReport> {
    single_shot(avc, px, z, a, m, n_s)?.run(EvalMode::Exact, 0, 0)
}

/// Monte Carlo estimate of [`rcu_exact_singleshot`].
pub fn rcu_mc_singleshot(
    avc: &Avc,
    px: &Dist,
    z: &dyn PairTest,
    a: &dyn TypicalSet,
    m: u64,
    n_s: Option<f64>,
    samples: usize,
    seed: u64,
) -> Result<RcuReport> {
    single_shot(avc, px, z, a, m, n_s)?.run(EvalMode::MonteCarlo, samples, seed)
}

/// Settings for the `n`-letter bound with constant-composition inputs.
#[derive(Clone, Debug)]
pub struct RcuConfig {
    pub n_s: StateCount,
    /// Radius of `𝒟_η` in bits; defaults to half the lower bound on `η*`.
    pub eta: Option<f64>,
}

impl Default for RcuConfig {
    fn default() -> Self {
        Self {
            n_s: StateCount::Sequences,
            eta: None,
        }
    }
}

/// The pieces of the `n`-letter bound: input type, `𝒜`, `Z` and one
/// representative state sequence per admissible state type.
pub struct NLetterSetup<'a> {
    pub counts: Vec<usize>,
    pub test: EtaTest<'a>,
    pub states: Vec<Vec<usize>>,
    pub n_s: f64,
    pub warnings: Vec<String>,
}

impl<'a> NLetterSetup<'a> {
    pub fn new(avc: &'a Avc, n: usize, px_type: &Dist, m: u64, cfg: &RcuConfig) -> Result<Self> {
        if n == 0 {
            return Err(AvcError::ZeroBlocklength);
        }
        crate::channel::check_size(avc.input_size(), px_type.len())?;
        let counts = px_type
            .as_type(n)
            .ok_or(AvcError::NotAType { n })?;
        if !px_type.is_cost_feasible(avc.g(), avc.gamma()) {
            return Err(AvcError::InfeasibleType(format!(
                "type {:?} exceeds the input budget {}",
                counts,
                avc.gamma()
            )));
        }
        let mut warnings = Vec::new();
        let lam0 = lambda0(px_type, avc)?.lambda0;
        if lam0 <= avc.lambda() {
            warnings.push(format!(
                "Λ₀(P_X) = {lam0} does not exceed Λ = {}; the test Z may not separate messages",
                avc.lambda()
            ));
        }
        let eta = match cfg.eta {
            Some(e) => e,
            None => {
                if px_type.probs().contains(&0.0) {
                    return Err(AvcError::Config(
                        "η must be given for an input type without full support".into(),
                    ));
                }
                let r = eta_star(px_type, avc)?;
                if !(r.eta_star_lower > 0.0) {
                    return Err(AvcError::Config(format!(
                        "η not given and the η* bracket [{}, {}] is degenerate",
                        r.eta_star_lower, r.eta_star_upper
                    )));
                }
                r.eta_star_lower / 2.0
            }
        };
        let set = TypeTypicalSet::new(avc, &counts, m)?;
        let states: Vec<Vec<usize>> = compositions(n, avc.state_size())
            .into_iter()
            .filter(|c| state_type_feasible(avc, c))
            .map(|c| canonical_sequence(&c))
            .collect();
        if states.is_empty() {
            return Err(AvcError::InfeasibleType("no state type meets the budget".into()));
        }
        Ok(Self {
            test: EtaTest::new(avc, &counts, eta, set),
            n_s: cfg.n_s.value(avc, n),
            counts,
            states,
            warnings,
        })
    }

    fn problem(&'a self, avc: &'a Avc, m: u64) -> Problem<'a> {
        Problem {
            avc,
            inputs: Inputs::TypeClass(self.counts.clone()),
            states: self.states.clone(),
            z: &self.test,
            a: self.test.typical_set(),
            m,
            n_s: self.n_s,
            n: self.counts.iter().sum(),
        }
    }
}

/// `n`-letter bound with `Xⁿ` uniform on the type class of `px_type`, by
/// exhaustive enumeration.
pub fn rcu_exact_avc(avc: &Avc, n: usize, px_type: &Dist, m: u64, cfg: &RcuConfig) -> Result<RcuReport> {
    let setup = NLetterSetup::new(avc, n, px_type, m, cfg)?;
    let mut r = setup.problem(avc, m).run(EvalMode::Exact, 0, 0)?;
    r.warnings = setup.warnings.clone();
    Ok(r)
}

/// Seeded Monte Carlo estimate of [`rcu_exact_avc`].
pub fn rcu_mc_avc(
    avc: &Avc,
    n: usize,
    px_type: &Dist,
    m: u64,
    samples: usize,
    seed: u64,
    cfg: &RcuConfig,
) -> Result<RcuReport> {
    let setup = NLetterSetup::new(avc, n, px_type, m, cfg)?;
    let mut r = setup
        .problem(avc, m)
        .run(EvalMode::MonteCarlo, samples, seed)?;
    r.warnings = setup.warnings.clone();
    Ok(r)
}

/// Exact when enumeration fits in [`EXACT_LIMIT`], Monte Carlo otherwise.
pub fn rcu_avc(
    avc: &Avc,
    n: usize,
    px_type: &Dist,
    m: u64,
    samples: usize,
    seed: u64,
    cfg: &RcuConfig,
) -> Result<RcuReport> {
    let setup = NLetterSetup::new(avc, n, px_type, m, cfg)?;
    let counts = &setup.counts;
    let per_state: f64 = setup
        .states
        .iter()
        .map(|s| {
            let x = canonical_sequence(counts);
            output_count(avc, &x, s) as f64
        })
        .sum();
    let class = Inputs::TypeClass(counts.clone()).size();
    let mode = if per_state * class * class <= EXACT_LIMIT as f64 {
        EvalMode::Exact
    } else {
        EvalMode::MonteCarlo
    };
    let mut r = setup.problem(avc, m).run(mode, samples, seed)?;
    r.warnings = setup.warnings.clone();
    Ok(r)
}

fn single_state(channel: &Avc) -> Result<()> {
    if channel.state_size() != 1 {
        return Err(AvcError::InvalidArgument(format!(
            "expected a channel without state, got |S| = {}",
            channel.state_size()
        )));
    }
    Ok(())
}

/// `P(ı(X̄;y) ≥ ı(x;y))` for every `(x, y)`.
fn tie_or_worse(px: &Dist, d: &LetterDensity, nx: usize, ny: usize) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            let own = d.density(&[x], &[y]);
            out[x * ny + y] = (0..nx)
                .filter(|&xb| d.density(&[xb], &[y]) >= own)
                .map(|xb| px.probs()[xb])
                .sum();
        }
    }
    out
}

/// Bound specialized to a channel without state, with the density test and
/// the typical set minimizing the first two terms.
pub fn classical_rcu(channel: &Avc, px: &Dist, m: u64) -> Result<RcuReport> {
    single_state(channel)?;
    let (nx, ny) = (channel.input_size(), channel.output_size());
    let d = LetterDensity::new(px, &Dist::point(1, 0), channel)?;
    let worse = tie_or_worse(px, &d, nx, ny);
    let factor = 2.0 * LOG2_E * m as f64;
    let set = move |x: &[usize], y: &[usize]| factor * worse[x[0] * ny + y[0]] <= 1.0;
    struct Closure<F>(F);
    impl<F: Fn(&[usize], &[usize]) -> bool + Sync> TypicalSet for Closure<F> {
        fn contains(&self, x: &[usize], y: &[usize]) -> bool {
            (self.0)(x, y)
        }
    }
    let test = DensityTest(d);
    rcu_exact_singleshot(channel, px, &test, &Closure(set), m, Some(1.0))
}

/// Standard random coding union bound `E min{1, (M-1) P(ı(X̄;Y) ≥ ı(X;Y) | X, Y)}`.
pub fn standard_rcu(channel: &Avc, px: &Dist, m: u64) -> Result<f64> {
    single_state(channel)?;
    let (nx, ny) = (channel.input_size(), channel.output_size());
    let d = LetterDensity::new(px, &Dist::point(1, 0), channel)?;
    let worse = tie_or_worse(px, &d, nx, ny);
    let mut e = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let p = px.probs()[x] * channel.w(x, 0, y);
            if p > 0.0 {
                e += p * (1.0f64).min((m as f64 - 1.0) * worse[x * ny + y]);
            }
        }
    }
    Ok(e)
}

/// Tail bound for averages of `[0, γ]`-valued variables whose conditional
/// means are at most `μ`:
/// `min{2^{-M(t - μ log₂e)/γ}, e^{-2M((t-μ)/γ)²}}` for `t ∈ [μ, γ]`.
pub fn chernoff_bound(m: u64, mu: f64, gamma: f64, t: f64) -> Result<f64> {
    if !(mu >= 0.0 && mu <= t && t <= gamma && gamma > 0.0) {
        return Err(AvcError::InvalidArgument(format!(
            "need 0 ≤ μ ≤ t ≤ γ with γ > 0, got μ={mu}, t={t}, γ={gamma}"
        )));
    }
    let m = m as f64;
    let first = (-m * (t - mu * LOG2_E) / gamma).exp2();
    let second = (-2.0 * m * ((t - mu) / gamma).powi(2)).exp();
    Ok(first.min(second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bsc_avc;

    fn order_test(x: &[usize], xb: &[usize], _: &[usize]) -> bool {
        x < xb
    }

    #[test]
    fn single_message_degenerate_case() {
        let avc = bsc_avc(0.5, 1.0).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let r = rcu_exact_singleshot(&avc, &px, &order_test, &Everything, 1, None).unwrap();
        assert_eq!(r.term_miss, 0.0);
        assert_eq!(r.term_confusion, 0.0);
        assert!((r.total - (2.0 * 6f64.ln()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_typical_set() {
        let avc = bsc_avc(0.5, 1.0).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let r = rcu_exact_singleshot(&avc, &px, &order_test, &Nothing, 3, None).unwrap();
        assert_eq!(r.term_miss, 1.0);
        assert_eq!(r.term_confusion, 0.0);
        assert_eq!(r.term_esssup, 0.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn uniqueness_violation_is_rejected() {
        let avc = bsc_avc(0.5, 1.0).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let bad = |_: &[usize], _: &[usize], _: &[usize]| true;
        assert!(matches!(
            rcu_exact_singleshot(&avc, &px, &bad, &Everything, 2, None),
            Err(AvcError::InvalidTest)
        ));
        assert!(matches!(
            rcu_mc_singleshot(&avc, &px, &bad, &Everything, 2, None, 1000, 1),
            Err(AvcError::InvalidTest)
        ));
    }

    /// Direct summation over `(x, x̄, s, y)` for binary single-shot channels.
    #[test]
    fn singleshot_matches_brute_force() {
        let avc = bsc_avc(0.5, 1.0).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let ps = Dist::new(vec![0.8, 0.2]).unwrap();
        let d = LetterDensity::new(&px, &ps, &avc).unwrap();
        let gamma = 0.0;
        let set = DensityThreshold {
            density: d.clone(),
            gamma,
        };
        let test = DensityTest(d.clone());
        let r = rcu_exact_singleshot(&avc, &px, &test, &set, 2, Some(2.0)).unwrap();
        let dens = |x: usize, y: usize| d.density(&[x], &[y]);
        let (mut miss, mut conf, mut ess) = (0.0f64, 0.0f64, 0.0f64);
        for s in 0..2 {
            let (mut mi, mut co) = (0.0, 0.0);
            let mut es = [0.0; 2];
            for x in 0..2 {
                for y in 0..2 {
                    let w = 0.5 * avc.w(x, s, y);
                    if w == 0.0 {
                        continue;
                    }
                    if dens(x, y) < gamma {
                        mi += w;
                        continue;
                    }
                    for xb in 0..2 {
                        if !(dens(x, y) > dens(xb, y)) {
                            co += w * 0.5;
                            es[xb] += w;
                        }
                    }
                }
            }
            miss = miss.max(mi);
            conf = conf.max(co);
            ess = ess.max(es[0].max(es[1]));
        }
        assert!((r.term_miss - miss).abs() < 1e-15);
        assert!((r.term_confusion - 2.0 * LOG2_E * 2.0 * conf).abs() < 1e-14);
        assert!((r.term_esssup - 2.0 * 6f64.log2() * ess).abs() < 1e-14);
        assert!((r.term_slack - (6f64.ln()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let avc = bsc_avc(0.5, 1.0).unwrap();
        let px = Dist::new(vec![0.3, 0.7]).unwrap();
        let d = LetterDensity::new(&px, &Dist::uniform(2), &avc).unwrap();
        let set = DensityThreshold { density: d.clone(), gamma: -0.5 };
        let test = DensityTest(d);
        let a = rcu_mc_singleshot(&avc, &px, &test, &set, 4, None, 5000, 9).unwrap();
        let b = rcu_mc_singleshot(&avc, &px, &test, &set, 4, None, 5000, 9).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool
            .install(|| rcu_mc_singleshot(&avc, &px, &test, &set, 4, None, 5000, 9))
            .unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn output_density_dp_matches_enumeration() {
        let avc = Avc::from_fn(
            2,
            2,
            3,
            |x, s, y| [[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.2, 0.2, 0.6], [0.7, 0.1, 0.2]][x * 2 + s][y],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            1.0,
            1.0,
        )
        .unwrap();
        let counts = [3, 2];
        let set = TypeTypicalSet::new(&avc, &counts, 4).unwrap();
        let y = [0, 2, 1, 1, 0];
        let members = type_class_members(&counts);
        for ch in &set.channels {
            let direct: f64 = members
                .iter()
                .map(|x| x.iter().zip(&y).map(|(&a, &b)| ch[a * 3 + b]).product::<f64>())
                .sum::<f64>()
                / members.len() as f64;
            assert!((set.log_output(ch, &y) - direct.log2()).abs() < 1e-12);
        }
        assert!((set.gamma - (5f64.sqrt() * 6.0 * 4.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn joint_type_representatives_cover_all_joint_types() {
        let counts = [2, 2];
        let state = [0, 0, 1, 1];
        let reps = joint_type_representatives(&counts, &state, 2).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for x in type_class_members(&counts) {
            seen.insert(crate::types::joint_counts(&[&x, &state], &[2, 2]));
        }
        let rep_types: std::collections::BTreeSet<_> = reps
            .iter()
            .map(|x| crate::types::joint_counts(&[x, &state], &[2, 2]))
            .collect();
        assert_eq!(seen, rep_types);
        assert_eq!(reps.len(), 3);
    }

    #[test]
    fn eta_test_is_unique_on_all_triples() {
        let avc = bsc_avc(0.5, 0.125).unwrap();
        let n = 8;
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let setup = NLetterSetup::new(&avc, n, &px, 4, &RcuConfig::default()).unwrap();
        let members = type_class_members(&setup.counts);
        for x in members.iter().step_by(7) {
            for xb in &members {
                for s in &setup.states {
                    let y: Vec<usize> = x.iter().zip(s).map(|(a, b)| a ^ b).collect();
                    assert!(!(setup.test.z(x, xb, &y) && setup.test.z(xb, x, &y)));
                }
            }
        }
    }

    #[test]
    fn n_letter_exact_and_monte_carlo_agree() {
        let avc = bsc_avc(0.5, 0.125).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let cfg = RcuConfig::default();
        let exact = rcu_exact_avc(&avc, 6, &px, 4, &cfg).unwrap();
        let mc = rcu_mc_avc(&avc, 6, &px, 4, 20_000, 3, &cfg).unwrap();
        for i in 0..3 {
            let (e, m) = (exact.terms()[i], mc.terms()[i]);
            assert!((e - m).abs() <= 3.0 * mc.term_std_errors[i] + 1e-12, "term {i}: {e} vs {m}");
        }
        assert!(exact.term_confusion <= 2.0 * LOG2_E / 6f64.sqrt() + 1e-12);
    }

    #[test]
    fn state_counts() {
        let avc = bsc_avc(0.5, 0.125).unwrap();
        assert_eq!(StateCount::Sequences.value(&avc, 8), 9.0);
        assert_eq!(StateCount::Types.value(&avc, 8), 9.0);
        assert_eq!(StateCount::Literal.value(&avc, 8), 16.0);
    }

    #[test]
    fn classical_rcu_versus_standard() {
        let p = 0.11;
        let ch = Avc::from_fn(2, 1, 2, |x, _, y| if x == y { 1.0 - p } else { p }, vec![0.0; 2], vec![0.0], 0.0, 0.0)
            .unwrap();
        let px = Dist::uniform(2);
        let r = classical_rcu(&ch, &px, 2).unwrap();
        // Z = 0 iff x̄ = x (densities of distinct inputs differ); 𝒜 is empty
        // because (2 log e)·2·P(X̄ = x) > 1.
        assert!((r.term_miss - 1.0).abs() < 1e-15);
        assert_eq!(r.term_confusion, 0.0);
        let std = standard_rcu(&ch, &px, 2).unwrap();
        assert!((std - (0.89 * 0.5 + 0.11)).abs() < 1e-15);
        assert!(r.term_miss + r.term_confusion >= std);
        let one = classical_rcu(&ch, &px, 1).unwrap();
        assert_eq!(one.term_confusion, 0.0);
    }

    #[test]
    fn chernoff_values() {
        assert_eq!(chernoff_bound(10, 0.3, 1.0, 0.3).unwrap().min(1.0), 1.0);
        let v = chernoff_bound(100, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(v, (-50f64).exp2().min((-50f64).exp()));
        assert!(chernoff_bound(10, 0.5, 1.0, 0.4).is_err());
        let mut last = f64::INFINITY;
        for i in 0..=10 {
            let t = 0.1 + 0.09 * i as f64;
            let v = chernoff_bound(50, 0.1, 1.0, t).unwrap();
            assert!(v <= last);
            last = v;
        }
    }
}
