//! Explicit codebooks, the all-pairs `Z` decoder and worst-case adversarial
//! state search.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{cost_feasible, Avc, Dist};
use crate::error::{AvcError, Result};
use crate::fbl::{rcu_avc, sample_rng, NLetterSetup, PairTest, RcuConfig, RcuReport};
use crate::types::{compositions, feasible_sequences, sample_type_class, type_class_size};

/// Largest state space searched in exhaustive mode.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// Largest output set enumerated per `(codeword, state)` before falling back
/// to Monte Carlo.
pub const OUTPUT_ENUM_LIMIT: u128 = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    codewords: Vec<Vec<usize>>,
}

impl Codebook {
    /// Checks lengths, symbols and the input cost of every codeword.
    pub fn new(codewords: Vec<Vec<usize>>, avc: &Avc) -> Result<Self> {
        let n = codewords.first().map(|c| c.len()).ok_or(AvcError::EmptySequence)?;
        if n == 0 {
            return Err(AvcError::ZeroBlocklength);
        }
        for c in &codewords {
            if c.len() != n {
                return Err(AvcError::InvalidArgument(format!(
                    "codeword length {} differs from {n}",
                    c.len()
                )));
            }
            if let Some(&symbol) = c.iter().find(|&&a| a >= avc.input_size()) {
                return Err(AvcError::SymbolOutOfRange {
                    symbol,
                    size: avc.input_size(),
                });
            }
            if !cost_feasible(c, avc.g(), avc.gamma(), n) {
                return Err(AvcError::InfeasibleType(format!(
                    "codeword {c:?} exceeds the input budget"
                )));
            }
        }
        Ok(Self { n, codewords })
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn blocklength(&self) -> usize {
        self.n
    }

    pub fn codewords(&self) -> &[Vec<usize>] {
        &self.codewords
    }

    pub fn is_constant_composition(&self, alphabet: usize) -> bool {
        let counts = |c: &Vec<usize>| {
            let mut k = vec![0usize; alphabet];
            c.iter().for_each(|&a| k[a] += 1);
            k
        };
        let first = counts(&self.codewords[0]);
        self.codewords.iter().all(|c| counts(c) == first)
    }
}

/// `M` independent uniform draws from the type class of `px_type`.
pub fn sample_codebook(avc: &Avc, px_type: &Dist, m: usize, n: usize, seed: u64) -> Result<Codebook> {
    if n == 0 {
        return Err(AvcError::ZeroBlocklength);
    }
    if m == 0 {
        return Err(AvcError::InvalidArgument("M must be at least 1".into()));
    }
    crate::channel::check_size(avc.input_size(), px_type.len())?;
    let counts = px_type.as_type(n).ok_or(AvcError::NotAType { n })?;
    if !px_type.is_cost_feasible(avc.g(), avc.gamma()) {
        return Err(AvcError::InfeasibleType(format!(
            "type {counts:?} exceeds the input budget {}",
            avc.gamma()
        )));
    }
    let codewords = (0..m)
        .map(|i| sample_type_class(&counts, &mut sample_rng(seed, i as u64)))
        .collect();
    Codebook::new(codewords, avc)
}

/// Index `i` with `Z(c_i, c_j, y) = 1` for every `j ≠ i`, or `None` (an
/// erasure) when no message qualifies. Two qualifying messages mean the test
/// violates `Z(x,x̄,y)·Z(x̄,x,y) = 0`.
pub fn decode(y: &[usize], codebook: &Codebook, z: &dyn PairTest) -> Result<Option<usize>> {
    let cw = &codebook.codewords;
    let mut found = None;
    for i in 0..cw.len() {
        if (0..cw.len()).all(|j| j == i || z.z(&cw[i], &cw[j], y)) {
            if found.is_some() {
                return Err(AvcError::InvalidTest);
            }
            found = Some(i);
        }
    }
    Ok(found)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdversaryMode {
    /// Every admissible state sequence.
    Exhaustive,
    /// One random state sequence per admissible type; a lower bound on the
    /// exhaustive worst case.
    TypeRepresentative,
    /// The given number of random admissible state sequences.
    Sampled(usize),
}

impl std::fmt::Display for AdversaryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdversaryMode::Exhaustive => f.write_str("exhaustive"),
            AdversaryMode::TypeRepresentative => f.write_str("type-representative"),
            AdversaryMode::Sampled(k) => write!(f, "sampled({k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Largest average error over the evaluated states.
    pub worst_error: f64,
    pub worst_state: Vec<usize>,
    pub per_state_errors: Option<Vec<(Vec<usize>, f64)>>,
    pub adversary_mode: AdversaryMode,
    pub states_evaluated: usize,
    /// Monte Carlo trials per `(message, state)`; zero when every error
    /// probability was computed exactly.
    pub trials: usize,
    pub seed: u64,
    /// Set unless the adversary search was exhaustive.
    pub heuristic: bool,
}

fn admissible_types(avc: &Avc, n: usize) -> Vec<Vec<usize>> {
    compositions(n, avc.state_size())
        .into_iter()
        .filter(|c| {
            let cost: f64 = c.iter().zip(avc.ell()).map(|(&k, &l)| k as f64 * l).sum();
            cost <= n as f64 * avc.lambda() + 1e-9
        })
        .collect()
}

fn adversary_states(avc: &Avc, n: usize, mode: AdversaryMode, seed: u64) -> Result<Vec<Vec<usize>>> {
    let types = admissible_types(avc, n);
    if types.is_empty() {
        return Err(AvcError::InfeasibleType("no state sequence meets the budget".into()));
    }
    // Stream ids above 2^62 keep state draws apart from codebook draws.
    let base = 1u64 << 62;
    match mode {
        AdversaryMode::Exhaustive => {
            feasible_sequences(n, avc.ell(), avc.lambda() + 1e-9 / n as f64, EXHAUSTIVE_LIMIT)
        }
        AdversaryMode::TypeRepresentative => Ok(types
            .iter()
            .enumerate()
            .map(|(i, c)| sample_type_class(c, &mut sample_rng(seed, base + i as u64)))
            .collect()),
        AdversaryMode::Sampled(k) => {
            let weights: Vec<f64> = types.iter().map(|c| type_class_size(c)).collect();
            let total: f64 = weights.iter().sum();
            Ok((0..k)
                .map(|i| {
                    let mut rng = sample_rng(seed, base + i as u64);
                    let u = rng.gen::<f64>() * total;
                    let mut acc = 0.0;
                    let mut pick = types.len() - 1;
                    for (t, w) in weights.iter().enumerate() {
                        acc += w;
                        if u < acc {
                            pick = t;
                            break;
                        }
                    }
                    sample_type_class(&types[pick], &mut rng)
                })
                .collect())
        }
    }
}

/// Probability that message `i` is not decoded under state `s`.
fn message_error(
    avc: &Avc,
    codebook: &Codebook,
    z: &dyn PairTest,
    i: usize,
    s: &[usize],
    trials: usize,
    rng_stream: u64,
    seed: u64,
) -> Result<(f64, bool)> {
    let x = &codebook.codewords[i];
    let count: u128 = x
        .iter()
        .zip(s)
        .map(|(&a, &b)| avc.row(a, b).iter().filter(|&&w| w > 0.0).count() as u128)
        .product();
    if count <= OUTPUT_ENUM_LIMIT {
        let mut outs = vec![(Vec::with_capacity(x.len()), 1.0)];
        for (&a, &b) in x.iter().zip(s) {
            let mut next = Vec::new();
            for (seq, p) in &outs {
                for (y, &w) in avc.row(a, b).iter().enumerate() {
                    if w > 0.0 {
                        let mut t: Vec<usize> = seq.clone();
                        t.push(y);
                        next.push((t, p * w));
                    }
                }
            }
            outs = next;
        }
        let mut err = 0.0;
        for (y, p) in outs {
            if decode(&y, codebook, z)? != Some(i) {
                err += p;
            }
        }
        return Ok((err, true));
    }
    if trials == 0 {
        return Err(AvcError::InvalidArgument(
            "output space too large to enumerate; Monte Carlo trials required".into(),
        ));
    }
    let mut rng = sample_rng(seed, rng_stream);
    let mut fails = 0usize;
    for _ in 0..trials {
        let y: Vec<usize> = x
            .iter()
            .zip(s)
            .map(|(&a, &b)| {
                let u: f64 = rng.gen();
                let row = avc.row(a, b);
                let mut acc = 0.0;
                for (y, &w) in row.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return y;
                    }
                }
                row.iter().rposition(|&w| w > 0.0).unwrap_or(0)
            })
            .collect();
        if decode(&y, codebook, z)? != Some(i) {
            fails += 1;
        }
    }
    Ok((fails as f64 / trials as f64, false))
}

/// Worst average error over adversarial states for a fixed codebook and
/// decoder.
pub fn simulate_worst_case(
    avc: &Avc,
    codebook: &Codebook,
    z: &dyn PairTest,
    mode: AdversaryMode,
    trials: usize,
    seed: u64,
    keep_per_state: bool,
) -> Result<SimResult> {
    let n = codebook.blocklength();
    let states = adversary_states(avc, n, mode, seed)?;
    let m = codebook.len();
    let evaluated: Vec<Result<(f64, bool)>> = states
        .par_iter()
        .enumerate()
        .map(|(si, s)| {
            let mut total = 0.0;
            let mut exact = true;
            for i in 0..m {
                let stream = (si as u64) * m as u64 + i as u64;
                let (e, ex) = message_error(avc, codebook, z, i, s, trials, stream, seed)?;
                total += e;
                exact &= ex;
            }
            Ok((total / m as f64, exact))
        })
        .collect();
    let mut errors = Vec::with_capacity(states.len());
    let mut all_exact = true;
    for r in evaluated {
        let (e, ex) = r?;
        errors.push(e);
        all_exact &= ex;
    }
    let (worst_at, worst_error) = errors
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, e)| if e > b.1 { (i, e) } else { b });
    Ok(SimResult {
        worst_error,
        worst_state: states[worst_at].clone(),
        per_state_errors: keep_per_state.then(|| states.iter().cloned().zip(errors.iter().copied()).collect()),
        adversary_mode: mode,
        states_evaluated: states.len(),
        trials: if all_exact { 0 } else { trials },
        seed,
        heuristic: mode != AdversaryMode::Exhaustive,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// The bound is at least one.
    Vacuous,
    Violated,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Vacuous => "VACUOUS (bound ≥ 1)",
            Verdict::Violated => "VIOLATED",
        })
    }
}

#[derive(Clone, Debug)]
pub struct BoundCheck {
    /// Result for the codebook with the smallest worst-case error.
    pub measured: SimResult,
    pub best_codebook: Codebook,
    /// Worst-case error of every sampled codebook, in draw order.
    pub codebook_errors: Vec<f64>,
    pub bound: RcuReport,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub codebooks: usize,
    pub adversary: AdversaryMode,
    /// Monte Carlo size for channel noise and for the bound when exact
    /// evaluation is out of reach.
    pub trials: usize,
    pub seed: u64,
    pub rcu: RcuConfig,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            codebooks: 50,
            adversary: AdversaryMode::Exhaustive,
            trials: 10_000,
            seed: 0,
            rcu: RcuConfig::default(),
        }
    }
}

/// Compares the best of `k` random constant-composition codebooks, decoded
/// with the test of the bound, against the bound itself.
pub fn validate_bound(avc: &Avc, n: usize, px_type: &Dist, m: usize, opts: &ValidateOptions) -> Result<BoundCheck> {
    if opts.codebooks == 0 {
        return Err(AvcError::InvalidArgument("need at least one codebook".into()));
    }
    if opts.adversary == AdversaryMode::Exhaustive {
        let needed: f64 = admissible_types(avc, n).iter().map(|c| type_class_size(c)).sum();
        if needed > EXHAUSTIVE_LIMIT as f64 {
            return Err(AvcError::GuardExceeded {
                what: "exhaustive adversary".into(),
                needed: needed as u128,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
    }
    let setup = NLetterSetup::new(avc, n, px_type, m as u64, &opts.rcu)?;
    let bound = rcu_avc(avc, n, px_type, m as u64, opts.trials, opts.seed, &opts.rcu)?;
    // Codebook c draws its codewords from streams c·M .. c·M + M - 1.
    let books: Vec<Codebook> = (0..opts.codebooks)
        .map(|c| {
            let counts = setup.counts.clone();
            let words = (0..m)
                .map(|i| sample_type_class(&counts, &mut sample_rng(opts.seed, (c * m + i) as u64)))
                .collect();
            Codebook::new(words, avc)
        })
        .collect::<Result<_>>()?;
    let results: Vec<SimResult> = books
        .iter()
        .enumerate()
        .map(|(c, book)| {
            simulate_worst_case(
                avc,
                book,
                &setup.test,
                opts.adversary,
                opts.trials,
                opts.seed.wrapping_add(c as u64),
                false,
            )
        })
        .collect::<Result<_>>()?;
    let codebook_errors: Vec<f64> = results.iter().map(|r| r.worst_error).collect();
    let best = (0..results.len())
        .min_by(|&a, &b| codebook_errors[a].total_cmp(&codebook_errors[b]))
        .expect("at least one codebook");
    let measured = results[best].clone();
    let verdict = if bound.vacuous() {
        Verdict::Vacuous
    } else if measured.worst_error <= bound.total + 3.0 * bound.std_error {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(BoundCheck {
        measured,
        best_codebook: books[best].clone(),
        codebook_errors,
        bound,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bsc_avc;
    use crate::fbl::{DensityTest, LetterDensity};
    use crate::types::type_class_members;

    #[test]
    fn codebook_from_type_class() {
        let avc = bsc_avc(0.5, 0.0).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let book = sample_codebook(&avc, &px, 20, 4, 7).unwrap();
        assert!(book.codewords().iter().all(|c| c.iter().sum::<usize>() == 2));
        assert!(book.is_constant_composition(2));
        assert_eq!(sample_codebook(&avc, &px, 1, 4, 7).unwrap().len(), 1);
        assert_eq!(book, sample_codebook(&avc, &px, 20, 4, 7).unwrap());
        let costly = Dist::new(vec![0.25, 0.75]).unwrap();
        assert!(matches!(
            sample_codebook(&avc, &costly, 2, 4, 0),
            Err(AvcError::InfeasibleType(_))
        ));
    }

    #[test]
    fn codebook_draws_are_uniform() {
        let avc = bsc_avc(0.5, 0.0).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let book = sample_codebook(&avc, &px, 100_000, 4, 11).unwrap();
        let members = type_class_members(&[2, 2]);
        let mut freq = vec![0usize; members.len()];
        for c in book.codewords() {
            freq[members.iter().position(|m| m == c).unwrap()] += 1;
        }
        let expect = 100_000.0 / 6.0;
        let chi2: f64 = freq.iter().map(|&f| (f as f64 - expect).powi(2) / expect).sum();
        // 99.9% quantile of χ² with 5 degrees of freedom
        assert!(chi2 < 20.515, "{chi2}");
    }

    #[test]
    fn decoding_rules() {
        let avc = bsc_avc(0.5, 0.0).unwrap();
        let z = |x: &[usize], xb: &[usize], y: &[usize]| {
            let d = |a: &[usize]| a.iter().zip(y).filter(|(p, q)| p != q).count();
            d(x) < d(xb)
        };
        let one = Codebook::new(vec![vec![0, 1, 1, 0]], &avc).unwrap();
        assert_eq!(decode(&[1, 1, 1, 1], &one, &z).unwrap(), Some(0));
        let twins = Codebook::new(vec![vec![0, 1, 1, 0], vec![0, 1, 1, 0]], &avc).unwrap();
        assert_eq!(decode(&[0, 1, 1, 0], &twins, &z).unwrap(), None);
        let book = Codebook::new(vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0]], &avc).unwrap();
        assert_eq!(decode(&[0, 1, 1, 1], &book, &z).unwrap(), Some(0));
        assert_eq!(decode(&[1, 0, 1, 0], &book, &z).unwrap(), None);
    }

    #[test]
    fn noiseless_channel_has_zero_error() {
        let avc = bsc_avc(0.5, 0.0).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let d = LetterDensity::new(&px, &Dist::point(2, 0), &avc).unwrap();
        let z = DensityTest(d);
        let book = Codebook::new(type_class_members(&[2, 2]), &avc).unwrap();
        let r = simulate_worst_case(&avc, &book, &z, AdversaryMode::Exhaustive, 0, 0, true).unwrap();
        assert_eq!(r.worst_error, 0.0);
        assert_eq!(r.states_evaluated, 1);
        assert_eq!(r.trials, 0);
    }

    #[test]
    fn repetition_code_survives_one_flip() {
        // 1⁸ costs 8, so the input budget must allow it
        let avc = bsc_avc(1.0, 0.125).unwrap();
        let z = |x: &[usize], xb: &[usize], y: &[usize]| {
            let d = |a: &[usize]| a.iter().zip(y).filter(|(p, q)| p != q).count();
            d(x) < d(xb)
        };
        let book = Codebook::new(vec![vec![0; 8], vec![1; 8]], &avc).unwrap();
        let r = simulate_worst_case(&avc, &book, &z, AdversaryMode::Exhaustive, 0, 0, true).unwrap();
        assert_eq!(r.states_evaluated, 9);
        assert_eq!(r.worst_error, 0.0);
    }

    #[test]
    fn partial_adversaries_are_lower_bounds() {
        let avc = bsc_avc(0.5, 0.25).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let d = LetterDensity::new(&px, &Dist::new(vec![0.75, 0.25]).unwrap(), &avc).unwrap();
        let z = DensityTest(d);
        let book = sample_codebook(&avc, &px, 4, 8, 3).unwrap();
        let full = simulate_worst_case(&avc, &book, &z, AdversaryMode::Exhaustive, 0, 5, false).unwrap();
        for mode in [AdversaryMode::TypeRepresentative, AdversaryMode::Sampled(20)] {
            let part = simulate_worst_case(&avc, &book, &z, mode, 0, 5, false).unwrap();
            assert!(part.worst_error <= full.worst_error);
            assert!(part.heuristic);
        }
        let mut last = 0.0;
        for lam in [0.0, 0.125, 0.25, 0.375] {
            let a = avc.with_budgets(0.5, lam).unwrap();
            let r = simulate_worst_case(&a, &book, &z, AdversaryMode::Exhaustive, 0, 5, false).unwrap();
            assert!(r.worst_error >= last);
            last = r.worst_error;
        }
    }

    #[test]
    fn exhaustive_guard() {
        let avc = bsc_avc(0.5, 0.5).unwrap();
        let book = Codebook::new(vec![vec![0; 24]], &avc).unwrap();
        let z = |_: &[usize], _: &[usize], _: &[usize]| false;
        assert!(matches!(
            simulate_worst_case(&avc, &book, &z, AdversaryMode::Exhaustive, 0, 0, false),
            Err(AvcError::GuardExceeded { .. })
        ));
    }

    #[test]
    fn full_orbit_on_noiseless_channel() {
        let avc = bsc_avc(0.5, 0.0).unwrap();
        let px = Dist::new(vec![0.5, 0.5]).unwrap();
        let opts = ValidateOptions {
            codebooks: 3,
            rcu: RcuConfig {
                eta: Some(0.05),
                ..RcuConfig::default()
            },
            ..ValidateOptions::default()
        };
        let r = validate_bound(&avc, 4, &px, 2, &opts).unwrap();
        assert_ne!(r.verdict, Verdict::Violated);
        assert_eq!(r.codebook_errors.len(), 3);
    }
}
