use avckit::fbl::{rcu_avc, rcu_exact_avc, rcu_mc_avc, RcuConfig};
use avckit::normal::{corollary_from_analysis, SecondOrder};
use avckit::sim::{validate_bound, AdversaryMode, ValidateOptions};
use avckit::{analyze, AvcError, Avc, Capacity, ChannelSpec, Dist, NaCurve, SaddleOptions};

use crate::report::{dist, dist_cell, fixed, write_csv, Table};
use crate::{CodeArgs, Common, Failure};

fn load(common: &Common) -> Result<(ChannelSpec, Avc), Failure> {
    let spec = ChannelSpec::load(&common.file)?;
    let avc = spec.to_avc()?;
    Ok((spec, avc))
}

fn saddle_options(tol: f64) -> Result<SaddleOptions, Failure> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Failure::parse(format!("--tol must lie in (0, 1), got {tol}")));
    }
    Ok(SaddleOptions::with_tol(tol))
}

/// Counts summing to `n`, or probabilities.
fn input_type(spec: &str, n: usize) -> Result<Dist, Failure> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::parse(format!("--type {spec:?}: {e}")))?;
    let integral = values.iter().all(|v| v.fract() == 0.0 && *v >= 0.0);
    let total: f64 = values.iter().sum();
    if integral && n > 0 && total == n as f64 {
        let counts: Vec<usize> = values.iter().map(|&v| v as usize).collect();
        Ok(Dist::from_counts(&counts)?)
    } else {
        Ok(Dist::new(values)?)
    }
}

pub fn capacity(common: &Common, tol: f64) -> Result<(), Failure> {
    let (spec, avc) = load(common)?;
    let analysis = analyze(&avc, &saddle_options(tol)?)?;
    let random = &analysis.random;
    let mut t = Table::default();
    t.row("channel", &spec.name);
    let header = [
        "name",
        "symmetrizable",
        "capacity",
        "random_code_capacity",
        "gap",
        "px_set_size",
        "ps_set_size",
        "px_star",
        "ps_star",
        "v_plus",
        "v_minus",
        "heuristic",
    ];
    let row = match &analysis.capacity {
        Capacity::Symmetrizable(d) => {
            t.row("result", "symmetrizable, C = 0");
            t.row("max Λ₀", fixed(d.max_lambda0));
            t.row("C_r", fixed(random.value));
            vec![
                spec.name.clone(),
                "true".into(),
                "0".into(),
                random.value.to_string(),
                random.gap.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                random.v_minus.to_string(),
                d.heuristic.to_string(),
            ]
        }
        Capacity::Positive(c) => {
            let check = corollary_from_analysis(&avc, &analysis)?;
            t.row("C", fixed(c.value));
            t.row("C_r", fixed(random.value));
            t.row("C_r - C", fixed(random.value - c.value));
            t.row("saddle gap", format!("{:.3e}", c.gap.abs().max(random.gap.abs())));
            t.row("|Π_X|", c.px_opt.len());
            t.row("|Π_S|", c.ps_opt.len());
            t.row("P_X*", dist(c.px_star()));
            t.row("P_S*", dist(c.ps_star()));
            t.row("V+", fixed(c.v_plus));
            t.row("V-", fixed(random.v_minus));
            t.row("second-order tight", check.all());
            if c.heuristic || random.heuristic {
                t.row("note", "optimal sets approximated by representatives");
            }
            vec![
                spec.name.clone(),
                "false".into(),
                c.value.to_string(),
                random.value.to_string(),
                c.gap.abs().max(random.gap.abs()).to_string(),
                c.px_opt.len().to_string(),
                c.ps_opt.len().to_string(),
                dist_cell(c.px_star()),
                dist_cell(c.ps_star()),
                c.v_plus.to_string(),
                random.v_minus.to_string(),
                (c.heuristic || random.heuristic).to_string(),
            ]
        }
    };
    t.print();
    if let Some(path) = &common.csv {
        write_csv(path, &header, &[row])?;
    }
    Ok(())
}

pub fn na(common: &Common, eps: f64, n_values: &[u64], tol: f64) -> Result<(), Failure> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Failure::parse(format!("--eps must lie in (0, 1/2), got {eps}")));
    }
    let (spec, avc) = load(common)?;
    let analysis = analyze(&avc, &saddle_options(tol)?)?;
    let so = SecondOrder::from_analysis(&avc, &analysis).map_err(|e| match e {
        AvcError::Symmetrizable => Failure {
            code: 4,
            message: "channel is symmetrizable: C = 0 and no expansion applies".into(),
        },
        other => other.into(),
    })?;
    let curve = NaCurve::new(&so, n_values.to_vec(), eps)?;
    let rows: Vec<Vec<String>> = curve
        .n_values
        .iter()
        .zip(curve.converse_bits.iter().zip(&curve.achievability_bits))
        .map(|(&n, (&c, &a))| {
            vec![
                n.to_string(),
                c.to_string(),
                a.to_string(),
                (c / n as f64).to_string(),
                (a / n as f64).to_string(),
            ]
        })
        .collect();
    let header = [
        "n",
        "converse_bits",
        "achievability_bits",
        "converse_rate",
        "achievability_rate",
    ];
    let mut t = Table::default();
    t.row("channel", &spec.name)
        .row("eps", eps)
        .row("C", fixed(so.capacity))
        .row("C_r", fixed(so.random_code_capacity))
        .row("V+", fixed(so.v_plus))
        .row("V-", fixed(so.v_minus))
        .row("rows", rows.len())
        .row("note", curve.note);
    if !curve.hypothesis_verified {
        t.row("warning", "achievability hypothesis not verified at the V+ input");
    }
    match &common.csv {
        Some(path) if path.as_os_str() == "-" => {}
        Some(path) => {
            t.print();
            write_csv(path, &header, &rows)?;
            return Ok(());
        }
        None => {
            t.print();
            println!();
        }
    }
    write_csv(std::path::Path::new("-"), &header, &rows)
}

fn rcu_config(code: &CodeArgs) -> RcuConfig {
    RcuConfig {
        n_s: code.n_s,
        eta: code.eta,
    }
}

pub fn rcu(
    common: &Common,
    code: &CodeArgs,
    samples: usize,
    exact: bool,
    monte_carlo: bool,
) -> Result<(), Failure> {
    let (spec, avc) = load(common)?;
    let px = input_type(&code.input_type, code.n)?;
    let cfg = rcu_config(code);
    let r = if exact {
        rcu_exact_avc(&avc, code.n, &px, code.m, &cfg)
    } else if monte_carlo {
        rcu_mc_avc(&avc, code.n, &px, code.m, samples, common.seed, &cfg)
    } else {
        rcu_avc(&avc, code.n, &px, code.m, samples, common.seed, &cfg)
    }
    .map_err(|e| guard_hint(e, "drop --exact to use Monte Carlo"))?;
    let mut t = Table::default();
    t.row("channel", &spec.name)
        .row("n", r.n)
        .row("M", r.m)
        .row("N_s", r.n_s)
        .row("mode", r.eval_mode)
        .row("miss", fixed(r.term_miss))
        .row("confusion", fixed(r.term_confusion))
        .row("esssup", fixed(r.term_esssup))
        .row("slack", fixed(r.term_slack))
        .row("total", fixed(r.total))
        .row("total (joint state)", fixed(r.total_joint))
        .row("std_error", fixed(r.std_error));
    if r.vacuous() {
        t.row("note", "vacuous (bound ≥ 1)");
    }
    for w in &r.warnings {
        t.row("warning", w);
    }
    t.print();
    if let Some(path) = &common.csv {
        let header = [
            "n",
            "M",
            "N_s",
            "eval_mode",
            "term_miss",
            "term_confusion",
            "term_esssup",
            "term_slack",
            "total",
            "total_joint",
            "std_error",
            "mc_samples",
            "seed",
            "vacuous",
        ];
        let row = vec![
            r.n.to_string(),
            r.m.to_string(),
            r.n_s.to_string(),
            r.eval_mode.to_string(),
            r.term_miss.to_string(),
            r.term_confusion.to_string(),
            r.term_esssup.to_string(),
            r.term_slack.to_string(),
            r.total.to_string(),
            r.total_joint.to_string(),
            r.std_error.to_string(),
            r.mc_samples.to_string(),
            r.seed.to_string(),
            r.vacuous().to_string(),
        ];
        write_csv(path, &header, &[row])?;
    }
    Ok(())
}

fn guard_hint(e: AvcError, hint: &str) -> Failure {
    let mut f = Failure::from(e);
    if f.code == 5 {
        f.message = format!("{}; {hint}", f.message);
    }
    f
}

pub fn simulate(
    common: &Common,
    code: &CodeArgs,
    codebooks: usize,
    adversary: AdversaryMode,
    trials: usize,
) -> Result<(), Failure> {
    let (spec, avc) = load(common)?;
    let px = input_type(&code.input_type, code.n)?;
    let m = usize::try_from(code.m).map_err(|_| Failure::parse("--M too large"))?;
    let opts = ValidateOptions {
        codebooks,
        adversary,
        trials,
        seed: common.seed,
        rcu: rcu_config(code),
    };
    let check = validate_bound(&avc, code.n, &px, m, &opts)
        .map_err(|e| guard_hint(e, "use --adversary sampled:K"))?;
    let r = &check.measured;
    let b = &check.bound;
    let mut t = Table::default();
    t.row("channel", &spec.name)
        .row("n", code.n)
        .row("M", m)
        .row("codebooks", codebooks)
        .row("adversary", r.adversary_mode)
        .row("states evaluated", r.states_evaluated)
        .row("worst-case error (best codebook)", fixed(r.worst_error))
        .row("worst state", format!("{:?}", r.worst_state))
        .row("bound", fixed(b.total))
        .row("bound std_error", fixed(b.std_error))
        .row("verdict", check.verdict);
    if r.heuristic {
        t.row("note", "adversary search not exhaustive: measured error is a lower bound");
    }
    t.print();
    if let Some(path) = &common.csv {
        let header = [
            "n",
            "M",
            "codebooks",
            "adversary",
            "states_evaluated",
            "trials",
            "worst_error",
            "bound_total",
            "bound_std_error",
            "verdict",
        ];
        let verdict = match check.verdict {
            avckit::Verdict::Holds => "holds",
            avckit::Verdict::Vacuous => "vacuous",
            avckit::Verdict::Violated => "violated",
        };
        let row = vec![
            code.n.to_string(),
            m.to_string(),
            codebooks.to_string(),
            r.adversary_mode.to_string(),
            r.states_evaluated.to_string(),
            r.trials.to_string(),
            r.worst_error.to_string(),
            b.total.to_string(),
            b.std_error.to_string(),
            verdict.to_string(),
        ];
        write_csv(path, &header, &[row])?;
    }
    Ok(())
}
