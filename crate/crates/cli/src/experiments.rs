//! One function per command. Each validates its descriptor, runs, and
//! returns the artifacts to write.

use std::fmt::Write as _;

use mipstar::instances::{arithmetize, best_coloring, is_3colorable, SuccinctGraph};
use mipstar::mlgame::{self, acceptance_exact, play, test_values_exact, GameError, GameTest, MLGameConfig};
use mipstar::protocol::{
    build_strategies, estimate_acceptance, sequential_repeat, ProtocolConfig, ProtocolError, StrategyKind, TestKind,
    TESTS,
};
use mipstar::rng::{derive_seed, rng_from_seed, trial_rng};
use mipstar::smallbias::{bias_audit_csv, bias_bound_check, BiasedSetSpec};
use mipstar::stats::Estimate;
use mipstar_quantum::lemmas::lemma_checks;
use mipstar_quantum::lines::lines_measurement;
use mipstar_quantum::strategy::{embed_classical, random_projective_strategy};
use mipstar_quantum::{cons, game_value_quantum, QuantumError, QuantumStrategy, SubMeasurementFamily};
use num_rational::Ratio;
use rayon::prelude::*;

use crate::descriptor::{Command, Descriptor};
use crate::error::{internal, usage, CliError};

pub const STRATEGY_NAMES: &str = "honest, constant, shared-random, perturbed, honest-on-no-instance";

/// Everything an experiment produces.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub csv: String,
    /// Line-delimited JSON records.
    pub records: Option<String>,
    /// Extra text artifact and the extension it is written under.
    pub extra: Option<(&'static str, String)>,
    pub verdict: String,
}

pub fn run(command: Command, d: &Descriptor) -> Result<Artifacts, CliError> {
    match command {
        Command::GenInstance => gen_instance(d),
        Command::Prove => protocol(command, d, true),
        Command::Estimate => protocol(command, d, false),
        Command::Mlgame => mlgame_exp(d),
        Command::QuantumEval => quantum_eval(d),
        Command::CheckLemmas => check_lemmas(d),
        Command::BiasAudit => bias_audit(d),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn ratio_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn gen_instance(d: &Descriptor) -> Result<Artifacts, CliError> {
    let command = Command::GenInstance;
    let graph = d.graph(command)?;
    let inst = arithmetize(&graph).map_err(usage)?;
    let coloring = is_3colorable(&graph).map_err(usage)?;
    let (_, violated) = best_coloring(&graph).map_err(usage)?;
    let mut csv = String::from("vertices,edges,address_bits,r,m,d,three_colorable,min_violated_edges\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{}",
        graph.vertex_count(),
        graph.edges().count(),
        graph.n(),
        inst.r,
        inst.m(),
        inst.d(),
        yes_no(coloring.is_some()),
        violated
    );
    Ok(Artifacts {
        verdict: format!(
            "{command}: m={} d={} three_colorable={}",
            inst.m(),
            inst.d(),
            yes_no(coloring.is_some())
        ),
        csv,
        records: None,
        extra: Some(("instance", inst.to_text())),
    })
}

fn witness(d: &Descriptor, graph: &SuccinctGraph, name: &str) -> Result<Vec<u8>, CliError> {
    if let Some(colors) = &d.colors {
        return Ok(colors.clone());
    }
    is_3colorable(graph)
        .map_err(usage)?
        .ok_or_else(|| CliError::Usage(format!("strategy `{name}` needs a proper 3-coloring and the instance has none")))
}

fn strategy_kind(name: &str, d: &Descriptor, graph: &SuccinctGraph) -> Result<StrategyKind, CliError> {
    Ok(match name {
        "honest" => StrategyKind::Honest {
            colors: witness(d, graph, name)?,
        },
        "constant" => StrategyKind::Constant {
            value: d.value.unwrap_or(0),
        },
        "shared-random" => StrategyKind::SharedRandomTable,
        "perturbed" => {
            let rate = d
                .rate
                .ok_or_else(|| CliError::Usage("strategy `perturbed` needs `rate`".into()))?;
            if !(0.0..=1.0).contains(&rate) {
                return Err(CliError::Usage(format!("rate {rate} outside [0, 1]")));
            }
            StrategyKind::Perturbed {
                colors: witness(d, graph, name)?,
                rate,
            }
        }
        "honest-on-no-instance" => StrategyKind::HonestOnNoInstance {
            colors: match &d.colors {
                Some(c) => c.clone(),
                None => best_coloring(graph).map_err(usage)?.0,
            },
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown strategy `{other}`; expected one of: {STRATEGY_NAMES}"
            )))
        }
    })
}

/// Checks every strategy name before anything else is validated.
pub fn check_strategy_names(names: &[String]) -> Result<(), CliError> {
    let known = ["honest", "constant", "shared-random", "perturbed", "honest-on-no-instance"];
    match names.iter().find(|n| !known.contains(&n.as_str())) {
        Some(bad) => Err(CliError::Usage(format!(
            "unknown strategy `{bad}`; expected one of: {STRATEGY_NAMES}"
        ))),
        None => Ok(()),
    }
}

fn protocol_error(e: ProtocolError) -> CliError {
    match e {
        ProtocolError::AuditTooLarge(_) | ProtocolError::Instance(_) => internal(e),
        _ => usage(e),
    }
}

fn protocol(command: Command, d: &Descriptor, with_records: bool) -> Result<Artifacts, CliError> {
    let names = d.strategies.clone().unwrap_or_else(|| vec!["honest".into()]);
    check_strategy_names(&names)?;
    let names = match names.len() {
        1 => vec![names[0].clone(); 3],
        3 => names,
        k => return Err(CliError::Usage(format!("give one strategy or three, got {k}"))),
    };
    let seed = d.require_seed(command)?;
    let graph = d.graph(command)?;
    let field = d.field_spec("gf64")?;
    let alpha = match d.alpha {
        Some(bits) => field.element(bits).map_err(usage)?,
        None => field.alpha(),
    };
    let trials = d.trials.unwrap_or(if with_records { 1 } else { 1000 });
    let beta = d.beta.unwrap_or(0.05);
    if !(beta > 0.0 && beta < 1.0) {
        return Err(CliError::Usage(format!("beta {beta} outside (0, 1)")));
    }
    let inst = arithmetize(&graph).map_err(usage)?;
    let config = ProtocolConfig::new(inst, field, alpha, seed)
        .and_then(|c| c.with_repetitions(d.repetitions.unwrap_or(1)))
        .map_err(protocol_error)?;
    let kinds: Vec<StrategyKind> = names
        .iter()
        .map(|n| strategy_kind(n, d, &graph))
        .collect::<Result<_, _>>()?;
    // Building once surfaces witness errors as usage errors.
    build_strategies(&config, &kinds).map_err(protocol_error)?;
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }

    let (per_test, records) = if with_records {
        let runs = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut strategies = build_strategies(&config, &kinds)?;
                let mut rng = trial_rng(seed, t);
                let (accepted, recs) = sequential_repeat(&config, &mut strategies, &mut rng)?;
                let mut lines = String::new();
                for (j, rec) in recs.iter().enumerate() {
                    let mut v = rec.to_json();
                    v["trial"] = t.into();
                    v["repetition"] = j.into();
                    lines.push_str(&v.to_string());
                    lines.push('\n');
                }
                Ok((recs[0].test, accepted, lines))
            })
            .collect::<Result<Vec<(TestKind, bool, String)>, ProtocolError>>()
            .map_err(internal)?;
        let mut counts = [(0u64, 0u64); TESTS];
        let mut out = String::new();
        for (test, accepted, lines) in runs {
            let slot = &mut counts[test.number() - 1];
            slot.0 += accepted as u64;
            slot.1 += 1;
            out.push_str(&lines);
        }
        (counts, Some(out))
    } else {
        let est = estimate_acceptance(&config, || build_strategies(&config, &kinds), trials, beta).map_err(internal)?;
        (est.per_test.map(|b| (b.accepts, b.trials)), None)
    };

    let label = if names.iter().all(|n| *n == names[0]) {
        names[0].clone()
    } else {
        names.join("+")
    };
    let mut csv = String::from("strategy,branch,accepts,trials,rate,lower,upper\n");
    for (i, &(accepts, n)) in per_test.iter().enumerate() {
        let branch = TestKind::from_number(i + 1).expect("five tests").label();
        if n == 0 {
            let _ = writeln!(csv, "{label},{branch},0,0,,,");
        } else {
            let e = Estimate::new(accepts, n, beta);
            let _ = writeln!(csv, "{label},{branch},{accepts},{n},{:.6},{:.6},{:.6}", e.rate, e.lower, e.upper);
        }
    }
    let accepts: u64 = per_test.iter().map(|c| c.0).sum();
    let overall = Estimate::new(accepts, trials, beta);
    let _ = writeln!(
        csv,
        "{label},all,{accepts},{trials},{:.6},{:.6},{:.6}",
        overall.rate, overall.lower, overall.upper
    );
    Ok(Artifacts {
        csv,
        records,
        extra: None,
        verdict: format!(
            "{command}: accept_rate={:.3} accepts={accepts} trials={trials} ci=[{:.3},{:.3}]",
            overall.rate, overall.lower, overall.upper
        ),
    })
}

fn game_error(e: GameError) -> CliError {
    usage(e)
}

fn game_config(d: &Descriptor, command: Command) -> Result<MLGameConfig, CliError> {
    let n = Descriptor::require(&d.variables, "variables", command)?;
    MLGameConfig::new(d.players.unwrap_or(3), n, d.field_spec("gf4")?).map_err(game_error)
}

fn mlgame_exp(d: &Descriptor) -> Result<Artifacts, CliError> {
    let command = Command::Mlgame;
    let seed = d.require_seed(command)?;
    let config = game_config(d, command)?;
    let text = Descriptor::require(&d.strategy, "strategy", command)?;
    let strategy = mlgame::Descriptor::parse(&text)
        .and_then(|desc| desc.realize(&config, seed, &d.base))
        .map_err(game_error)?;
    let trials = d.trials.unwrap_or(0);

    let mut csv = String::from("component,weight,consistency,linearity,value\n");
    let mut verdict = format!("{command}:");
    match acceptance_exact(&config, &strategy) {
        Ok(total) => {
            let mut cons_total = Ratio::from_integer(0u128);
            let mut lin_total = Ratio::from_integer(0u128);
            for (i, (w, tuple)) in strategy.components().iter().enumerate() {
                let (c, l) = test_values_exact(&config, tuple).map_err(internal)?;
                let w128 = Ratio::new(*w.numer() as u128, *w.denom() as u128);
                cons_total += w128 * c;
                lin_total += w128 * l;
                let _ = writeln!(csv, "{i},{w},{c},{l},{}", (c + l) / 2);
            }
            let _ = writeln!(csv, "all,1,{cons_total},{lin_total},{total}");
            let _ = write!(
                verdict,
                " exact={total} ({:.6}) consistency={:.6} linearity={:.6}",
                ratio_f64(&total),
                ratio_f64(&cons_total),
                ratio_f64(&lin_total)
            );
        }
        Err(GameError::TooLarge(work)) => {
            if trials == 0 {
                return Err(CliError::Usage(format!(
                    "exact evaluation needs {work} referee choices; pass --trials for sampling"
                )));
            }
            let _ = write!(verdict, " exact=skipped");
        }
        Err(e) => return Err(internal(e)),
    }

    let mut records = None;
    if trials > 0 {
        let mut rng = rng_from_seed(derive_seed(seed, 1));
        let mut out = String::new();
        let mut accepts = 0u64;
        for t in 0..trials {
            let rec = play(&config, &strategy, &mut rng).map_err(internal)?;
            accepts += rec.accepted as u64;
            let v = match rec.test {
                GameTest::Consistency => serde_json::json!({
                    "trial": t, "component": rec.component, "test": "consistency", "accepted": rec.accepted,
                }),
                GameTest::Linearity { direction, players } => serde_json::json!({
                    "trial": t, "component": rec.component, "test": "linearity",
                    "direction": direction, "players": players, "accepted": rec.accepted,
                }),
            };
            out.push_str(&v.to_string());
            out.push('\n');
        }
        let e = Estimate::new(accepts, trials, d.beta.unwrap_or(0.05));
        let _ = writeln!(csv, "sampled,1,,,{:.6}", e.rate);
        let _ = write!(
            verdict,
            " sampled={:.6} ci=[{:.6},{:.6}] trials={trials}",
            e.rate, e.lower, e.upper
        );
        records = Some(out);
    }
    Ok(Artifacts {
        csv,
        records,
        extra: None,
        verdict,
    })
}

fn quantum_error(e: QuantumError) -> CliError {
    match e {
        QuantumError::TooLarge(_)
        | QuantumError::Parameter(_)
        | QuantumError::Arity(_)
        | QuantumError::Parse { .. }
        | QuantumError::Game(_)
        | QuantumError::DimensionMismatch { .. }
        | QuantumError::NotNormalized(_)
        | QuantumError::NotMeasurement { .. }
        | QuantumError::Io(_) => usage(e),
        _ => internal(e),
    }
}

fn quantum_eval(d: &Descriptor) -> Result<Artifacts, CliError> {
    let command = Command::QuantumEval;
    let sources = [d.strategy_file.is_some(), d.strategy.is_some(), d.dimension.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(CliError::Usage(
            "`quantum-eval` needs exactly one of `strategy-file`, `strategy` or `dimension`".into(),
        ));
    }
    let mut classical = None;
    let strategy = if let Some(path) = &d.strategy_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        QuantumStrategy::parse(&text).map_err(quantum_error)?
    } else if let Some(text) = &d.strategy {
        let seed = d.require_seed(command)?;
        let config = game_config(d, command)?;
        let s = mlgame::Descriptor::parse(text)
            .and_then(|desc| desc.realize(&config, seed, &d.base))
            .map_err(game_error)?;
        classical = Some(acceptance_exact(&config, &s).map_err(game_error)?);
        embed_classical(&config, &s).map_err(quantum_error)?
    } else {
        let seed = d.require_seed(command)?;
        let config = game_config(d, command)?;
        let dim = d.dimension.expect("checked above");
        random_projective_strategy(&config, dim, &mut rng_from_seed(seed)).map_err(quantum_error)?
    };
    let config = *strategy.config();
    let value = game_value_quantum(&config, &strategy).map_err(quantum_error)?;

    let mut csv = String::from("quantity,value\n");
    let _ = writeln!(csv, "players,{}", config.r);
    let _ = writeln!(csv, "variables,{}", config.n);
    let _ = writeln!(csv, "local_dim,{}", strategy.local_dim());
    let _ = writeln!(csv, "projective,{}", yes_no(strategy.is_projective()));
    let _ = writeln!(csv, "permutation_invariant,{}", yes_no(strategy.is_permutation_invariant()));
    let _ = writeln!(csv, "consistency,{:.12}", value.consistency);
    let _ = writeln!(csv, "linearity,{:.12}", value.linearity);
    let _ = writeln!(csv, "value,{:.12}", value.value);
    let rho = strategy.state().reduced(&[0, 1]).map_err(internal)?;
    let a0 = SubMeasurementFamily::from_strategy(&strategy, 0).map_err(quantum_error)?;
    let a1 = SubMeasurementFamily::from_strategy(&strategy, 1).map_err(quantum_error)?;
    let _ = writeln!(csv, "cons_players_0_1,{:.12}", cons(&a0, &a1, &rho).map_err(internal)?);
    if strategy.is_projective() {
        for i in 0..config.n {
            let lines = lines_measurement(&strategy, i).map_err(internal)?;
            let _ = writeln!(csv, "lines_{i}_completeness_error,{:.3e}", lines.report.completeness_error);
            let _ = writeln!(csv, "lines_{i}_defect,{:.3e}", lines.report.defect);
        }
    }
    let mut verdict = format!(
        "{command}: value={:.9} consistency={:.9} linearity={:.9}",
        value.value, value.consistency, value.linearity
    );
    if let Some(exact) = classical {
        let gap = (value.value - ratio_f64(&exact)).abs();
        let _ = writeln!(csv, "classical_exact,{exact}");
        let _ = writeln!(csv, "bridge_error,{gap:.3e}");
        let _ = write!(verdict, " classical={exact} bridge_error={gap:.1e}");
    }
    Ok(Artifacts {
        csv,
        records: None,
        extra: Some(("strategy", strategy.to_text())),
        verdict,
    })
}

fn check_lemmas(d: &Descriptor) -> Result<Artifacts, CliError> {
    let command = Command::CheckLemmas;
    let seed = d.require_seed(command)?;
    let instances = d.instances.unwrap_or(1000);
    let max_dim = d.max_dim.unwrap_or(8);
    if instances == 0 || !(2..=8).contains(&max_dim) {
        return Err(CliError::Usage(
            "`check-lemmas` needs instances ≥ 1 and max-dim between 2 and 8".into(),
        ));
    }
    let report = lemma_checks(instances, seed, max_dim);
    let violations: usize = report.rows.iter().map(|r| r.violations).sum();
    Ok(Artifacts {
        csv: report.to_csv(),
        records: None,
        extra: None,
        verdict: format!(
            "{command}: {} lemmas x {instances} instances, violations={violations} {}",
            report.rows.len(),
            if report.passes() { "pass" } else { "fail" }
        ),
    })
}

fn bias_audit(d: &Descriptor) -> Result<Artifacts, CliError> {
    let command = Command::BiasAudit;
    let indices = Descriptor::require(&d.indices, "indices", command)?;
    if !indices.is_power_of_two() || indices < 2 {
        return Err(CliError::Usage(format!("indices must be a power of two ≥ 2, got {indices}")));
    }
    let k = indices.trailing_zeros();
    let mprime = Descriptor::require(&d.mprime, "mprime", command)?;
    let spec = BiasedSetSpec::new(k, mprime).map_err(usage)?;
    let csv = bias_audit_csv(&spec).map_err(usage)?;
    let (max, worst) = bias_bound_check(&spec).map_err(usage)?;
    let bound = spec.bias_bound();
    let f = |r: Ratio<u64>| *r.numer() as f64 / *r.denom() as f64;
    Ok(Artifacts {
        csv,
        records: None,
        extra: None,
        verdict: format!(
            "{command}: max_bias={max} ({:.6}) at pattern {worst:#x}, bound={bound} ({:.6}) {}",
            f(max),
            f(bound),
            if max <= bound { "pass" } else { "fail" }
        ),
    })
}
