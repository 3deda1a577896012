use mipstar::instances::{arithmetize, best_coloring, is_3colorable, SuccinctGraph};
use mipstar::mlgame::{acceptance_exact, acceptance_monte_carlo, test_values_exact, ClassicalStrategy, FunctionTable, MLGameConfig};
use mipstar::protocol::{
    build_strategies, estimate_acceptance, marginal_audit, run_protocol, ProtocolConfig, ProverStrategy, Role,
    StrategyKind, TestKind,
};
use mipstar::rng::{rng_from_seed, trial_rng};
use mipstar::stats::hoeffding_half_width;
use mipstar::{FieldElement, FieldSpec, MultilinearFn};
use num_rational::Ratio;
use proptest::prelude::*;

fn config(graph: &SuccinctGraph, field: FieldSpec, seed: u64) -> ProtocolConfig {
    ProtocolConfig::new(arithmetize(graph).unwrap(), field, field.alpha(), seed).unwrap()
}

fn honest(graph: &SuccinctGraph) -> Vec<StrategyKind> {
    let colors = is_3colorable(graph).unwrap().unwrap();
    vec![StrategyKind::Honest { colors }; 3]
}

#[test]
fn honest_provers_are_always_accepted() {
    for graph in [SuccinctGraph::triangle(), SuccinctGraph::four_cycle()] {
        let cfg = config(&graph, FieldSpec::gf64(), 3);
        let kinds = honest(&graph);
        let est = estimate_acceptance(&cfg, || build_strategies(&cfg, &kinds), 2000, 0.05).unwrap();
        assert_eq!(est.overall.accepts, 2000);
        assert!(est.per_test.iter().all(|b| b.trials > 0 && b.accepts == b.trials));
        assert!((est.overall.lower - (1.0 - hoeffding_half_width(2000, 0.05))).abs() < 1e-12);
    }
}

#[test]
fn each_and_test_reads_the_input_once() {
    let graph = SuccinctGraph::triangle();
    let cfg = config(&graph, FieldSpec::gf64(), 1);
    let mut strategies = build_strategies(&cfg, &honest(&graph)).unwrap();
    for t in 0..200 {
        let rec = run_protocol(&cfg, &mut strategies, &mut trial_rng(5, t)).unwrap();
        match rec.test {
            TestKind::AndTest { .. } => assert_eq!(rec.oracle_reads, 1),
            _ => assert_eq!(rec.oracle_reads, 0),
        }
    }
}

#[test]
fn distinct_constants_never_pass_consistency() {
    let graph = SuccinctGraph::triangle();
    let cfg = config(&graph, FieldSpec::gf64(), 2);
    let kinds: Vec<StrategyKind> = (0..3).map(|v| StrategyKind::Constant { value: v }).collect();
    let est = estimate_acceptance(&cfg, || build_strategies(&cfg, &kinds), 1000, 0.05).unwrap();
    assert_eq!(est.per_test[0].accepts, 0);
    assert!(est.per_test[0].trials > 0);
}

/// Records the questions a strategy sees and answers from a fixed function.
struct Recorder {
    inner: Box<dyn ProverStrategy>,
    seen: Vec<(Vec<FieldElement>, u64)>,
}

impl ProverStrategy for Recorder {
    fn begin_run(&mut self, role: Role, shared_seed: u64) {
        self.inner.begin_run(role, shared_seed)
    }
    fn lookup(&mut self, x: &[FieldElement]) -> u64 {
        let a = self.inner.lookup(x);
        self.seen.push((x.to_vec(), a));
        a
    }
    fn and_prover(
        &mut self,
        params: &mipstar::smallbias::AndTestParams,
        seed: mipstar::smallbias::Seed,
    ) -> Box<dyn mipstar::sumcheck::RoundProver + '_> {
        self.inner.and_prover(params, seed)
    }
}

#[test]
fn answers_depend_only_on_own_question_and_shared_seed() {
    let graph = SuccinctGraph::triangle();
    let cfg = config(&graph, FieldSpec::gf64(), 4);
    let colors = is_3colorable(&graph).unwrap().unwrap();
    let kinds = vec![StrategyKind::Perturbed { colors, rate: 0.3 }; 3];
    let mut log = Vec::new();
    for t in 0..100 {
        let mut s: Vec<Box<dyn ProverStrategy>> = build_strategies(&cfg, &kinds)
            .unwrap()
            .into_iter()
            .map(|inner| Box::new(Recorder { inner, seen: Vec::new() }) as Box<dyn ProverStrategy>)
            .collect();
        let rec = run_protocol(&cfg, &mut s, &mut trial_rng(8, t)).unwrap();
        for (p, a) in rec.questions.iter().zip(&rec.answers) {
            log.push((rec.shared_seed, p.point.clone(), a.raw));
        }
    }
    // Replay every question alone to a fresh prover with the same shared seed.
    for (shared, x, raw) in log {
        let mut fresh = kinds[0].build(&cfg).unwrap();
        fresh.begin_run(Role::Lookup, shared);
        assert_eq!(fresh.lookup(&x), raw);
    }
}

#[test]
fn permuting_prover_slots_keeps_acceptance_within_ci() {
    let graph = SuccinctGraph::k4();
    let cfg = config(&graph, FieldSpec::gf64(), 6);
    let (colors, _) = best_coloring(&graph).unwrap();
    let no = StrategyKind::HonestOnNoInstance { colors };
    let c = StrategyKind::Constant { value: 1 };
    let orders = [
        vec![no.clone(), no.clone(), c.clone()],
        vec![c.clone(), no.clone(), no.clone()],
        vec![no.clone(), c, no],
    ];
    let trials = 4000;
    let rates: Vec<f64> = orders
        .iter()
        .map(|k| estimate_acceptance(&cfg, || build_strategies(&cfg, k), trials, 0.01).unwrap().overall.rate)
        .collect();
    let half = hoeffding_half_width(trials, 0.01);
    for r in &rates {
        assert!((r - rates[0]).abs() <= 2.0 * half, "{rates:?}");
    }
}

#[test]
fn repetition_follows_the_product_law() {
    let graph = SuccinctGraph::k4();
    let (colors, _) = best_coloring(&graph).unwrap();
    let kinds = vec![StrategyKind::HonestOnNoInstance { colors }; 3];
    let trials = 4000;
    let one = {
        let cfg = config(&graph, FieldSpec::gf64(), 10);
        estimate_acceptance(&cfg, || build_strategies(&cfg, &kinds), trials, 0.01).unwrap().overall.rate
    };
    let cfg = config(&graph, FieldSpec::gf64(), 11).with_repetitions(2).unwrap();
    let two = estimate_acceptance(&cfg, || build_strategies(&cfg, &kinds), trials, 0.01).unwrap().overall.rate;
    let half = hoeffding_half_width(trials, 0.01);
    assert!((two - one * one).abs() <= 3.0 * half, "{two} vs {}", one * one);
}

#[test]
fn lookup_marginals_are_uniform() {
    let graph = SuccinctGraph::new(1, [(0, 1)]).unwrap();
    let field = FieldSpec::gf4();
    let inst = arithmetize(&graph).unwrap();
    let cfg = ProtocolConfig::new(inst, field, field.alpha(), 13).unwrap();
    let kinds = vec![StrategyKind::Honest { colors: vec![0, 1] }; 3];
    let audit = marginal_audit(&cfg, || build_strategies(&cfg, &kinds), 100_000).unwrap();
    assert!(audit.passes(0.001));
}

#[test]
fn multilinear_players_win_with_certainty() {
    let field = FieldSpec::gf4();
    for n in 1..=2 {
        let cfg = MLGameConfig::new(3, n, field).unwrap();
        let mut rng = rng_from_seed(n as u64);
        for _ in 0..10 {
            let g = MultilinearFn::extend((0..1 << n).map(|_| field.random(&mut rng)).collect()).unwrap();
            let s = ClassicalStrategy::symmetric(3, FunctionTable::from_multilinear(field, &g));
            assert_eq!(acceptance_exact(&cfg, &s).unwrap(), Ratio::from_integer(1));
        }
    }
}

/// Hand enumeration of the linearity test for `f(x) = x²` over GF(4), n = 1:
/// over all `x` and ordered `(y, z)` distinct from `x` and each other, count
/// triples whose graph points are collinear.
#[test]
fn quadratic_linearity_matches_hand_enumeration() {
    let field = FieldSpec::gf4();
    let cfg = MLGameConfig::new(3, 1, field).unwrap();
    let f = |x: FieldElement| x * x;
    let elems: Vec<FieldElement> = field.elements().collect();
    let (mut good, mut total) = (0u128, 0u128);
    for &x in &elems {
        for &y in elems.iter().filter(|&&y| y != x) {
            for &z in elems.iter().filter(|&&z| z != x && z != y) {
                total += 1;
                // (f(y) − f(x))(z − x) = (f(z) − f(x))(y − x)
                if (f(y) - f(x)) * (z - x) == (f(z) - f(x)) * (y - x) {
                    good += 1;
                }
            }
        }
    }
    let table = FunctionTable::from_fn(field, 1, |x| f(x[0]));
    let (cons, lin) = test_values_exact(&cfg, &vec![table; 3]).unwrap();
    assert_eq!(cons, Ratio::from_integer(1));
    assert_eq!(lin, Ratio::new(good, total));
}

#[test]
fn distinct_multilinear_functions_agree_on_at_most_n_over_p() {
    let field = FieldSpec::gf4();
    let cfg = MLGameConfig::new(3, 2, field).unwrap();
    let mut rng = rng_from_seed(21);
    for _ in 0..30 {
        let g = MultilinearFn::extend((0..4).map(|_| field.random(&mut rng)).collect()).unwrap();
        let h = MultilinearFn::extend((0..4).map(|_| field.random(&mut rng)).collect()).unwrap();
        if g == h {
            continue;
        }
        let (tg, th) = (FunctionTable::from_multilinear(field, &g), FunctionTable::from_multilinear(field, &h));
        let agree = (0..cfg.points()).filter(|&i| tg.at_index(i) == th.at_index(i)).count() as u128;
        let (cons, _) = test_values_exact(&cfg, &[tg.clone(), tg, th]).unwrap();
        assert_eq!(cons, Ratio::new(agree, cfg.points() as u128));
        assert!(cons <= Ratio::new(2, 4));
    }
}

#[test]
fn random_function_exact_value_matches_sampling() {
    let field = FieldSpec::gf4();
    let cfg = MLGameConfig::new(3, 1, field).unwrap();
    let s = ClassicalStrategy::symmetric(3, FunctionTable::random(field, 1, &mut rng_from_seed(2)));
    let exact = acceptance_exact(&cfg, &s).unwrap();
    let trials = 20_000;
    let rate = acceptance_monte_carlo(&cfg, &s, trials, 3).unwrap() as f64 / trials as f64;
    let exact = *exact.numer() as f64 / *exact.denom() as f64;
    assert!((rate - exact).abs() <= hoeffding_half_width(trials, 0.001));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mixture_value_is_convex_combination(seed in any::<u64>(), w in 1u64..8) {
        let field = FieldSpec::gf4();
        let cfg = MLGameConfig::new(3, 1, field).unwrap();
        let mut rng = rng_from_seed(seed);
        let a: Vec<FunctionTable> = (0..3).map(|_| FunctionTable::random(field, 1, &mut rng)).collect();
        let b: Vec<FunctionTable> = (0..3).map(|_| FunctionTable::random(field, 1, &mut rng)).collect();
        let wa = Ratio::new(w, 8);
        let mix = ClassicalStrategy::mixture(vec![(wa, a.clone()), (Ratio::from_integer(1) - wa, b.clone())]).unwrap();
        let va = acceptance_exact(&cfg, &ClassicalStrategy::deterministic(a)).unwrap();
        let vb = acceptance_exact(&cfg, &ClassicalStrategy::deterministic(b)).unwrap();
        let w128 = Ratio::new(w as u128, 8);
        prop_assert_eq!(acceptance_exact(&cfg, &mix).unwrap(), w128 * va + (Ratio::from_integer(1) - w128) * vb);
    }
}
