//! The three-prover interactive proof for arithmetized coloring instances.
//!
//! Each run picks one of five tests uniformly: a consistency test, a
//! linearity test along a random axis line, or an AND test in which one
//! prover plays the summation-test prover while the other two answer the two
//! implicit-input lookups `b1` and `b2`. Strategies answer with raw words;
//! the verifier rejects anything that is not a field element.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};
use crate::instances::{verify_assignment, Assignment, ColoringInstance, InstanceError};
use crate::poly::{point_index, MultilinearFn, UnivariatePoly};
use crate::rng::{derive_seed, rng_from_seed, trial_rng};
use crate::smallbias::{run_and_test, AndTestParams, AndTranscript, BiasError, Seed};
use crate::stats::{chi_square_critical, chi_square_uniform, Estimate};
use crate::sumcheck::{HonestProver, LazyCheater, RejectReason, Rejection, RoundProver};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("α must differ from 0 and 1 and lie in the working field")]
    BadAlpha,
    #[error("the linearity test needs at least four field elements")]
    FieldTooSmall,
    #[error("the witness does not satisfy the instance")]
    InvalidWitness,
    #[error("expected {expected} strategies, got {got}")]
    StrategyCount { expected: usize, got: usize },
    #[error("repetition count must be at least 1")]
    NoRepetitions,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("marginal audit over {0} cells is too large")]
    AuditTooLarge(u128),
    #[error("{0}")]
    Parameter(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Bias(#[from] BiasError),
}

/// Number of provers.
pub const PROVERS: usize = 3;
/// Number of equally likely tests.
pub const TESTS: usize = 5;

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub instance: Arc<ColoringInstance>,
    pub field: FieldSpec,
    pub alpha: FieldElement,
    pub repetitions: usize,
    pub seed: u64,
    and_params: AndTestParams,
}

impl ProtocolConfig {
    pub fn new(
        instance: ColoringInstance,
        field: FieldSpec,
        alpha: FieldElement,
        seed: u64,
    ) -> Result<Self, ProtocolError> {
        if !field.contains(&alpha) || alpha.is_zero() || alpha.is_one() {
            return Err(ProtocolError::BadAlpha);
        }
        if field.size() < 4 {
            return Err(ProtocolError::FieldTooSmall);
        }
        let and_params = AndTestParams::new(field, instance.m(), instance.d())?;
        Ok(ProtocolConfig {
            instance: Arc::new(instance),
            field,
            alpha,
            repetitions: 1,
            seed,
            and_params,
        })
    }

    pub fn with_repetitions(mut self, repetitions: usize) -> Result<Self, ProtocolError> {
        if repetitions == 0 {
            return Err(ProtocolError::NoRepetitions);
        }
        self.repetitions = repetitions;
        Ok(self)
    }

    /// `m = r + 2n`.
    pub fn m(&self) -> usize {
        self.instance.m()
    }

    /// `d = 2·d_f`.
    pub fn d(&self) -> usize {
        self.instance.d()
    }

    pub fn and_params(&self) -> &AndTestParams {
        &self.and_params
    }

    /// Whether `p > max(8·q, n^(1/c0 + 4))` for a caller-supplied surrogate
    /// `q` of the summation-test slack polynomial.
    pub fn field_rule_holds(&self, q_surrogate: f64, c0: f64) -> bool {
        let p = self.field.size() as f64;
        let n = self.instance.n as f64;
        p > (8.0 * q_surrogate).max(n.powf(1.0 / c0 + 4.0))
    }
}

/// The role a prover is told to play in one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Lookup,
    AndTest,
}

/// A prover. The harness calls [`ProverStrategy::begin_run`] once per run,
/// then either [`ProverStrategy::lookup`] or [`ProverStrategy::and_prover`]
/// according to the role. A strategy only ever sees its own messages.
pub trait ProverStrategy: Send {
    /// Starts a run. `shared_seed` is common to the three provers of the run.
    fn begin_run(&mut self, role: Role, shared_seed: u64);

    /// Answer to a lookup question, as a raw word.
    fn lookup(&mut self, x: &[FieldElement]) -> u64;

    /// Round handler for the AND test under the given sample-space seed.
    fn and_prover(&mut self, params: &AndTestParams, seed: Seed) -> Box<dyn RoundProver + '_>;
}

/// Which of the five tests a run performed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    Consistency,
    Linearity,
    /// AND test with the given prover (0-based) as summation-test prover.
    AndTest { prover: usize },
}

impl TestKind {
    /// Test number 1..=5: consistency, linearity, then the AND test with
    /// P3, P1 and P2 as summation-test prover.
    pub fn number(&self) -> usize {
        match self {
            TestKind::Consistency => 1,
            TestKind::Linearity => 2,
            TestKind::AndTest { prover: 2 } => 3,
            TestKind::AndTest { prover: 0 } => 4,
            TestKind::AndTest { .. } => 5,
        }
    }

    pub fn from_number(number: usize) -> Option<Self> {
        match number {
            1 => Some(TestKind::Consistency),
            2 => Some(TestKind::Linearity),
            3 => Some(TestKind::AndTest { prover: 2 }),
            4 => Some(TestKind::AndTest { prover: 0 }),
            5 => Some(TestKind::AndTest { prover: 1 }),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.number() {
            1 => "consistency",
            2 => "linearity",
            3 => "and-p3",
            4 => "and-p1",
            _ => "and-p2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectCode {
    MalformedAnswer { prover: usize },
    Inconsistent,
    NotCollinear,
    AndTest(Rejection),
}

impl fmt::Display for RejectCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectCode::MalformedAnswer { prover } => write!(f, "malformed answer from P{}", prover + 1),
            RejectCode::Inconsistent => write!(f, "consistency answers differ"),
            RejectCode::NotCollinear => write!(f, "linearity answers not collinear"),
            RejectCode::AndTest(r) => write!(f, "and test round {}: {}", r.round, r.reason),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Question {
    pub prover: usize,
    pub point: Vec<FieldElement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Answer {
    pub prover: usize,
    pub raw: u64,
}

/// Everything exchanged in one run, and the verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRecord {
    pub test: TestKind,
    pub shared_seed: u64,
    /// Axis of the linearity test.
    pub direction: Option<usize>,
    pub questions: Vec<Question>,
    pub answers: Vec<Answer>,
    pub and_test: Option<AndTranscript>,
    /// Implicit-input reads performed by the verifier.
    pub oracle_reads: usize,
    pub accepted: bool,
    pub reason: Option<RejectCode>,
}

fn hex(x: &FieldElement) -> String {
    format!("{:#x}", x.bits())
}

impl RunRecord {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "test": self.test.number(),
            "branch": self.test.label(),
            "shared_seed": format!("{:#x}", self.shared_seed),
            "direction": self.direction,
            "questions": self.questions.iter().map(|q| json!({
                "prover": q.prover + 1,
                "point": q.point.iter().map(hex).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "answers": self.answers.iter().map(|a| json!({
                "prover": a.prover + 1,
                "value": format!("{:#x}", a.raw),
            })).collect::<Vec<_>>(),
            "and_test": self.and_test.as_ref().map(|t| json!({
                "seed_x": hex(&t.seed.x),
                "seed_y": hex(&t.seed.y),
                "q": t.sumcheck.q.iter().map(hex).collect::<Vec<_>>(),
                "rounds": t.sumcheck.rounds.iter().map(|r| json!({
                    "coeffs": r.message.coeffs().iter().map(hex).collect::<Vec<_>>(),
                    "claim": hex(&r.claim),
                    "challenge": hex(&r.challenge),
                })).collect::<Vec<_>>(),
                "final_read": hex(&t.sumcheck.final_read),
            })),
            "oracle_reads": self.oracle_reads,
            "accepted": self.accepted,
            "reason": self.reason.map(|r| r.to_string()),
        })
    }

    /// Recomputes the verdict from the recorded messages alone.
    pub fn replay_verdict(&self, config: &ProtocolConfig) -> bool {
        let field = &config.field;
        let values: Option<Vec<FieldElement>> =
            self.answers.iter().map(|a| field.element(a.raw).ok()).collect();
        let Some(values) = values else {
            return false;
        };
        match self.test {
            TestKind::Consistency => values.windows(2).all(|w| w[0] == w[1]),
            TestKind::Linearity => {
                let i = self.direction.expect("linearity records carry a direction");
                let pts: Vec<FieldElement> = self.questions.iter().map(|q| q.point[i]).collect();
                collinear(
                    (pts[0], values[0]),
                    (pts[1], values[1]),
                    (pts[2], values[2]),
                )
            }
            TestKind::AndTest { .. } => {
                let Some(t) = &self.and_test else {
                    return false;
                };
                let inst = &config.instance;
                let q = &t.sumcheck.q;
                let mut point = Vec::with_capacity(inst.layout().arity());
                point.push(config.alpha);
                point.extend_from_slice(q);
                point.push(values[0]);
                point.push(values[1]);
                let Ok(h) = inst.f.eval(field, &point) else {
                    return false;
                };
                let weights = config.and_params.weights(&t.seed);
                let Ok(z) = weights.eval(q) else {
                    return false;
                };
                let messages = Replay {
                    field: *field,
                    messages: t.sumcheck.rounds.iter().map(|r| r.message.clone()).collect(),
                };
                let replay = crate::sumcheck::run_with_point(
                    field,
                    &config.and_params.sumcheck_params(),
                    q.clone(),
                    z * h,
                    messages,
                );
                replay.map(|r| r.accepted).unwrap_or(false)
            }
        }
    }
}

struct Replay {
    field: FieldSpec,
    messages: Vec<UnivariatePoly>,
}

impl RoundProver for Replay {
    fn round(&mut self, round: usize, _: &[FieldElement]) -> UnivariatePoly {
        self.messages
            .get(round)
            .cloned()
            .unwrap_or_else(|| UnivariatePoly::zero(&self.field))
    }
}

/// Whether three points `(t, value)` with distinct abscissae lie on a line,
/// checked through the three pairwise slopes.
pub fn collinear(
    (x, a): (FieldElement, FieldElement),
    (y, b): (FieldElement, FieldElement),
    (z, c): (FieldElement, FieldElement),
) -> bool {
    let s1 = (b - a) / (y - x);
    let s2 = (c - b) / (z - y);
    let s3 = (c - a) / (z - x);
    s1 == s2 && s2 == s3
}

fn random_point<R: Rng + ?Sized>(field: &FieldSpec, n: usize, rng: &mut R) -> Vec<FieldElement> {
    (0..n).map(|_| field.random(rng)).collect()
}

/// Two distinct elements, both different from `x`, uniformly.
pub fn two_other_values<R: Rng + ?Sized>(
    field: &FieldSpec,
    x: FieldElement,
    rng: &mut R,
) -> (FieldElement, FieldElement) {
    let y = loop {
        let y = field.random(rng);
        if y != x {
            break y;
        }
    };
    let z = loop {
        let z = field.random(rng);
        if z != x && z != y {
            break z;
        }
    };
    (y, z)
}

/// Runs one execution of the protocol.
pub fn run_protocol<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    strategies: &mut [Box<dyn ProverStrategy>],
    rng: &mut R,
) -> Result<RunRecord, ProtocolError> {
    if strategies.len() != PROVERS {
        return Err(ProtocolError::StrategyCount {
            expected: PROVERS,
            got: strategies.len(),
        });
    }
    let field = config.field;
    let n = config.instance.n;
    let test = TestKind::from_number(rng.gen_range(1..=TESTS)).expect("valid test number");
    let shared_seed: u64 = rng.gen();
    for (i, s) in strategies.iter_mut().enumerate() {
        let role = match test {
            TestKind::AndTest { prover } if prover == i => Role::AndTest,
            _ => Role::Lookup,
        };
        s.begin_run(role, shared_seed);
    }
    let mut record = RunRecord {
        test,
        shared_seed,
        direction: None,
        questions: Vec::new(),
        answers: Vec::new(),
        and_test: None,
        oracle_reads: 0,
        accepted: false,
        reason: None,
    };

    let ask = |record: &mut RunRecord, s: &mut Box<dyn ProverStrategy>, prover: usize, point: Vec<FieldElement>| {
        let raw = s.lookup(&point);
        record.questions.push(Question { prover, point });
        record.answers.push(Answer { prover, raw });
        field.element(raw).ok()
    };

    match test {
        TestKind::Consistency => {
            let x = random_point(&field, n, rng);
            let mut values = Vec::with_capacity(PROVERS);
            for (i, s) in strategies.iter_mut().enumerate() {
                values.push(ask(&mut record, s, i, x.clone()));
            }
            record.reason = match values.iter().position(|v| v.is_none()) {
                Some(prover) => Some(RejectCode::MalformedAnswer { prover }),
                None if values.windows(2).all(|w| w[0] == w[1]) => None,
                None => Some(RejectCode::Inconsistent),
            };
        }
        TestKind::Linearity => {
            let i = rng.gen_range(0..n.max(1));
            let x = random_point(&field, n, rng);
            let (yi, zi) = two_other_values(&field, x[i], rng);
            let mut y = x.clone();
            y[i] = yi;
            let mut z = x.clone();
            z[i] = zi;
            record.direction = Some(i);
            let mut values = Vec::with_capacity(PROVERS);
            for ((prover, s), point) in strategies.iter_mut().enumerate().zip([x.clone(), y, z]) {
                values.push(ask(&mut record, s, prover, point));
            }
            record.reason = match values.iter().position(|v| v.is_none()) {
                Some(prover) => Some(RejectCode::MalformedAnswer { prover }),
                None => {
                    let v: Vec<FieldElement> = values.into_iter().flatten().collect();
                    if collinear((x[i], v[0]), (yi, v[1]), (zi, v[2])) {
                        None
                    } else {
                        Some(RejectCode::NotCollinear)
                    }
                }
            };
        }
        TestKind::AndTest { prover } => {
            let first = (prover + 1) % PROVERS;
            let second = (prover + 2) % PROVERS;
            let mut slots: Vec<Option<&mut Box<dyn ProverStrategy>>> =
                strategies.iter_mut().map(Some).collect();
            let and_strategy = slots[prover].take().expect("distinct slots");
            let lookup1 = slots[first].take().expect("distinct slots");
            let lookup2 = slots[second].take().expect("distinct slots");
            let inst = Arc::clone(&config.instance);
            let (r, alpha) = (inst.r, config.alpha);
            let mut malformed = None;
            let mut reads = 0;
            let transcript = {
                let record_ref = &mut record;
                let oracle = |q: &[FieldElement]| {
                    reads += 1;
                    let b1 = q[r..r + n].to_vec();
                    let b2 = q[r + n..r + 2 * n].to_vec();
                    let a1 = ask(record_ref, lookup1, first, b1);
                    let a2 = ask(record_ref, lookup2, second, b2);
                    match (a1, a2) {
                        (Some(a1), Some(a2)) => {
                            inst.eval(&field, alpha, q, a1, a2).expect("verifier-built point")
                        }
                        (None, _) => {
                            malformed = Some(first);
                            field.zero()
                        }
                        (Some(_), None) => {
                            malformed = Some(second);
                            field.zero()
                        }
                    }
                };
                run_and_test(
                    &config.and_params,
                    oracle,
                    move |seed| {
                        let s = and_strategy;
                        s.and_prover(&config.and_params, seed)
                    },
                    rng,
                )?
            };
            record.oracle_reads = reads;
            record.reason = match (malformed, transcript.sumcheck.rejection) {
                (Some(prover), _) => Some(RejectCode::MalformedAnswer { prover }),
                (None, Some(rej)) => Some(RejectCode::AndTest(rej)),
                (None, None) => None,
            };
            record.and_test = Some(transcript);
        }
    }
    record.accepted = record.reason.is_none();
    Ok(record)
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

const CORRUPTION_TAG: u64 = 0x636f_7272_7570_7421;

#[derive(Clone, Debug)]
enum LookupTable {
    Multilinear(MultilinearFn),
    Constant(u64),
    SharedRandom,
    Perturbed { g: MultilinearFn, delta: f64 },
}

#[derive(Clone, Debug)]
struct LookupFn {
    field: FieldSpec,
    table: LookupTable,
    shared_seed: u64,
}

impl LookupFn {
    fn raw(&self, x: &[FieldElement]) -> u64 {
        match &self.table {
            LookupTable::Constant(c) => *c,
            _ => self.value(x).bits(),
        }
    }

    fn fresh(&self, x: &[FieldElement]) -> FieldElement {
        let idx = point_index(&self.field, x);
        self.field.element_reduced(derive_seed(self.shared_seed, idx))
    }

    fn value(&self, x: &[FieldElement]) -> FieldElement {
        match &self.table {
            LookupTable::Multilinear(g) => g.eval(x).expect("question arity n"),
            LookupTable::Constant(c) => self.field.element_reduced(*c),
            LookupTable::SharedRandom => self.fresh(x),
            LookupTable::Perturbed { g, delta } => {
                let idx = point_index(&self.field, x);
                let coin = derive_seed(self.shared_seed ^ CORRUPTION_TAG, idx);
                if ((coin >> 11) as f64 / (1u64 << 53) as f64) < *delta {
                    self.fresh(x)
                } else {
                    g.eval(x).expect("question arity n")
                }
            }
        }
    }
}

/// A prover that answers lookups with a fixed function of the question and
/// the shared seed, and plays the AND test against the summand that function
/// induces: honestly, or by defending the claim 0 with the lazy shift.
pub struct TableStrategy {
    instance: Arc<ColoringInstance>,
    alpha: FieldElement,
    lookup: LookupFn,
    honest_and: bool,
}

impl TableStrategy {
    fn new(config: &ProtocolConfig, table: LookupTable, honest_and: bool) -> Self {
        TableStrategy {
            instance: Arc::clone(&config.instance),
            alpha: config.alpha,
            lookup: LookupFn {
                field: config.field,
                table,
                shared_seed: 0,
            },
            honest_and,
        }
    }

    /// `Z(x)·f(α, x, g(b1), g(b2))` for the strategy's own lookup function `g`.
    fn weighted_summand(&self, weights: MultilinearFn) -> impl Fn(&[FieldElement]) -> FieldElement {
        let inst = Arc::clone(&self.instance);
        let lookup = self.lookup.clone();
        let alpha = self.alpha;
        let field = self.lookup.field;
        move |x: &[FieldElement]| {
            let (r, n) = (inst.r, inst.n);
            let a1 = lookup.value(&x[r..r + n]);
            let a2 = lookup.value(&x[r + n..r + 2 * n]);
            let h = inst.eval(&field, alpha, x, a1, a2).expect("summand arity");
            weights.eval(x).expect("summand arity") * h
        }
    }
}

impl ProverStrategy for TableStrategy {
    fn begin_run(&mut self, _role: Role, shared_seed: u64) {
        self.lookup.shared_seed = shared_seed;
    }

    fn lookup(&mut self, x: &[FieldElement]) -> u64 {
        self.lookup.raw(x)
    }

    fn and_prover(&mut self, params: &AndTestParams, seed: Seed) -> Box<dyn RoundProver + '_> {
        let summand = self.weighted_summand(params.weights(&seed));
        let sc = params.sumcheck_params();
        if self.honest_and {
            Box::new(HonestProver::new(params.field, sc.m, sc.d, summand))
        } else {
            Box::new(LazyCheater::new(params.field, sc.m, sc.d, summand, sc.claimed))
        }
    }
}

/// The honest prover: lookups answer the multilinear extension of a valid
/// witness, the AND role runs the standard summation-test prover.
pub fn honest_strategy(
    config: &ProtocolConfig,
    witness: &Assignment,
) -> Result<TableStrategy, ProtocolError> {
    if !verify_assignment(&config.instance, &config.field, witness, config.alpha)? {
        return Err(ProtocolError::InvalidWitness);
    }
    let g = MultilinearFn::extend(witness.table.clone()).map_err(InstanceError::from)?;
    Ok(TableStrategy::new(config, LookupTable::Multilinear(g), true))
}

/// Answers every lookup with the raw word `c`.
pub fn constant_answerer(config: &ProtocolConfig, c: u64) -> TableStrategy {
    TableStrategy::new(config, LookupTable::Constant(c), false)
}

/// All provers answer with one uniformly random function drawn from the
/// shared seed of the run.
pub fn shared_random_table(config: &ProtocolConfig) -> TableStrategy {
    TableStrategy::new(config, LookupTable::SharedRandom, false)
}

/// The multilinear extension of `witness` with a `delta`-fraction of its
/// values replaced by fresh uniform ones, chosen from the shared seed.
pub fn perturbed_multilinear(
    config: &ProtocolConfig,
    witness: &Assignment,
    delta: f64,
) -> Result<TableStrategy, ProtocolError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(ProtocolError::Parameter(format!("corruption rate {delta} outside [0, 1]")));
    }
    let g = MultilinearFn::extend(witness.table.clone()).map_err(InstanceError::from)?;
    let table = if delta == 0.0 {
        LookupTable::Multilinear(g)
    } else {
        LookupTable::Perturbed { g, delta }
    };
    Ok(TableStrategy::new(config, table, false))
}

/// Honest-looking play with the best improper coloring of a graph that has
/// no proper one: lookups follow its multilinear extension and the AND role
/// defends the false claim.
pub fn honest_on_no_instance(config: &ProtocolConfig, colors: &[u8]) -> Result<TableStrategy, ProtocolError> {
    let witness = Assignment::from_colors(&config.field, config.alpha, colors);
    let g = MultilinearFn::extend(witness.table).map_err(InstanceError::from)?;
    Ok(TableStrategy::new(config, LookupTable::Multilinear(g), false))
}

/// Named strategies, as used by experiment descriptors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    /// Honest play with the given witness colors.
    Honest { colors: Vec<u8> },
    Constant { value: u64 },
    SharedRandomTable,
    Perturbed { colors: Vec<u8>, rate: f64 },
    /// Honest-style play with the given (improper) coloring.
    HonestOnNoInstance { colors: Vec<u8> },
}

impl StrategyKind {
    pub fn build(&self, config: &ProtocolConfig) -> Result<Box<dyn ProverStrategy>, ProtocolError> {
        let witness = |colors: &[u8]| Assignment::from_colors(&config.field, config.alpha, colors);
        Ok(match self {
            StrategyKind::Honest { colors } => Box::new(honest_strategy(config, &witness(colors))?),
            StrategyKind::Constant { value } => Box::new(constant_answerer(config, *value)),
            StrategyKind::SharedRandomTable => Box::new(shared_random_table(config)),
            StrategyKind::Perturbed { colors, rate } => {
                Box::new(perturbed_multilinear(config, &witness(colors), *rate)?)
            }
            StrategyKind::HonestOnNoInstance { colors } => Box::new(honest_on_no_instance(config, colors)?),
        })
    }

    pub fn label(&self) -> String {
        match self {
            StrategyKind::Honest { .. } => "honest".into(),
            StrategyKind::Constant { value } => format!("constant({value:#x})"),
            StrategyKind::SharedRandomTable => "shared_random_table".into(),
            StrategyKind::Perturbed { rate, .. } => format!("perturbed({rate})"),
            StrategyKind::HonestOnNoInstance { .. } => "honest_on_no_instance".into(),
        }
    }
}

/// Builds the three strategies of a run.
pub fn build_strategies(
    config: &ProtocolConfig,
    kinds: &[StrategyKind],
) -> Result<Vec<Box<dyn ProverStrategy>>, ProtocolError> {
    if kinds.len() != PROVERS {
        return Err(ProtocolError::StrategyCount {
            expected: PROVERS,
            got: kinds.len(),
        });
    }
    kinds.iter().map(|k| k.build(config)).collect()
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCount {
    pub accepts: u64,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceEstimate {
    pub overall: Estimate,
    /// Indexed by test number minus one.
    pub per_test: [BranchCount; TESTS],
    pub beta: f64,
}

/// Runs `trials` independent protocol executions. Trial `t` uses the
/// generator derived from `(config.seed, t)` and fresh strategies, so the
/// counts do not depend on the thread count.
pub fn estimate_acceptance<F>(
    config: &ProtocolConfig,
    make_strategies: F,
    trials: u64,
    beta: f64,
) -> Result<AcceptanceEstimate, ProtocolError>
where
    F: Fn() -> Result<Vec<Box<dyn ProverStrategy>>, ProtocolError> + Sync,
{
    if trials == 0 {
        return Err(ProtocolError::NoTrials);
    }
    let per_test = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[BranchCount; TESTS], ProtocolError> {
            let mut strategies = make_strategies()?;
            let mut rng = trial_rng(config.seed, t);
            let mut accepted = true;
            let mut first_test = None;
            for _ in 0..config.repetitions {
                let rec = run_protocol(config, &mut strategies, &mut rng)?;
                first_test.get_or_insert(rec.test);
                accepted &= rec.accepted;
            }
            let mut counts = [BranchCount::default(); TESTS];
            let slot = &mut counts[first_test.expect("at least one repetition").number() - 1];
            slot.trials = 1;
            slot.accepts = accepted as u64;
            Ok(counts)
        })
        .try_reduce(
            || [BranchCount::default(); TESTS],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.accepts += y.accepts;
                    x.trials += y.trials;
                }
                Ok(a)
            },
        )?;
    let accepts = per_test.iter().map(|b| b.accepts).sum();
    Ok(AcceptanceEstimate {
        overall: Estimate::new(accepts, trials, beta),
        per_test,
        beta,
    })
}

/// `R = config.repetitions` independent runs; accepts iff all accept.
pub fn sequential_repeat<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    strategies: &mut [Box<dyn ProverStrategy>],
    rng: &mut R,
) -> Result<(bool, Vec<RunRecord>), ProtocolError> {
    let mut records = Vec::with_capacity(config.repetitions);
    for _ in 0..config.repetitions {
        records.push(run_protocol(config, strategies, rng)?);
    }
    Ok((records.iter().all(|r| r.accepted), records))
}

/// Per-prover histograms of lookup questions, split by test family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalAudit {
    pub cells: usize,
    /// `counts[family][prover][cell]` with families consistency, linearity, AND.
    pub counts: [[Vec<u64>; PROVERS]; 3],
}

impl MarginalAudit {
    fn family(test: TestKind) -> usize {
        match test {
            TestKind::Consistency => 0,
            TestKind::Linearity => 1,
            TestKind::AndTest { .. } => 2,
        }
    }

    /// All lookup questions to `prover`, over every test family.
    pub fn overall(&self, prover: usize) -> Vec<u64> {
        (0..self.cells)
            .map(|c| self.counts.iter().map(|fam| fam[prover][c]).sum())
            .collect()
    }

    pub fn chi_square(&self, prover: usize) -> f64 {
        chi_square_uniform(&self.overall(prover))
    }

    pub fn chi_square_in(&self, family: usize, prover: usize) -> f64 {
        chi_square_uniform(&self.counts[family][prover])
    }

    pub fn critical(&self, significance: f64) -> f64 {
        chi_square_critical(self.cells - 1, significance)
    }

    pub fn passes(&self, significance: f64) -> bool {
        let crit = self.critical(significance);
        (0..PROVERS).all(|p| self.chi_square(p) <= crit)
    }
}

/// Records the lookup questions of `trials` runs with honest-shaped
/// strategies. Needs `p^n ≤ 4096`.
pub fn marginal_audit<F>(
    config: &ProtocolConfig,
    make_strategies: F,
    trials: u64,
) -> Result<MarginalAudit, ProtocolError>
where
    F: Fn() -> Result<Vec<Box<dyn ProverStrategy>>, ProtocolError> + Sync,
{
    let cells = (config.field.size() as u128).pow(config.instance.n as u32);
    if cells > 4096 {
        return Err(ProtocolError::AuditTooLarge(cells));
    }
    let cells = cells as usize;
    let empty = || std::array::from_fn(|_| std::array::from_fn(|_| vec![0u64; cells]));
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[[Vec<u64>; PROVERS]; 3], ProtocolError> {
            let mut strategies = make_strategies()?;
            let mut rng = trial_rng(config.seed, t);
            let rec = run_protocol(config, &mut strategies, &mut rng)?;
            let mut c: [[Vec<u64>; PROVERS]; 3] = empty();
            let fam = MarginalAudit::family(rec.test);
            for q in &rec.questions {
                c[fam][q.prover][point_index(&config.field, &q.point) as usize] += 1;
            }
            Ok(c)
        })
        .try_reduce(empty, |mut a, b| {
            for (fa, fb) in a.iter_mut().zip(b.iter()) {
                for (pa, pb) in fa.iter_mut().zip(fb.iter()) {
                    for (x, y) in pa.iter_mut().zip(pb) {
                        *x += y;
                    }
                }
            }
            Ok(a)
        })?;
    Ok(MarginalAudit { cells, counts })
}

/// Convenience: one seeded run with freshly built strategies.
pub fn run_once(
    config: &ProtocolConfig,
    kinds: &[StrategyKind],
    seed: u64,
) -> Result<RunRecord, ProtocolError> {
    let mut strategies = build_strategies(config, kinds)?;
    run_protocol(config, &mut strategies, &mut rng_from_seed(seed))
}

/// The reject reason of a summation-test rejection, if any.
pub fn and_rejection(record: &RunRecord) -> Option<RejectReason> {
    match record.reason {
        Some(RejectCode::AndTest(r)) => Some(r.reason),
        _ => None,
    }
}
