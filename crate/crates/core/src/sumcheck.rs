//! Interactive summation test over the boolean cube.
//!
//! The verifier draws its whole point `q ∈ F^m` before the first round,
//! consumes one coordinate per round, and reads the summand exactly once, at
//! `q`. Prover messages that exceed the degree bound or come from another
//! field end the run with a recorded rejection.

use std::fmt;

use rand::Rng;
use serde_json::json;
use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};
use crate::poly::UnivariatePoly;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SumcheckError {
    #[error("summation test needs at least one variable")]
    NoVariables,
    #[error("point has {got} coordinates, expected {expected}")]
    PointArity { expected: usize, got: usize },
    #[error("claimed sum is not an element of the working field")]
    ForeignClaim,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumcheckParams {
    pub m: usize,
    pub d: usize,
    pub claimed: FieldElement,
}

impl SumcheckParams {
    pub fn new(m: usize, d: usize, claimed: FieldElement) -> Result<Self, SumcheckError> {
        if m == 0 {
            return Err(SumcheckError::NoVariables);
        }
        Ok(SumcheckParams { m, d, claimed })
    }
}

/// Supplies the round polynomials. `challenges` holds `q_0 .. q_{round-1}`.
pub trait RoundProver {
    fn round(&mut self, round: usize, challenges: &[FieldElement]) -> UnivariatePoly;
}

impl<P: RoundProver + ?Sized> RoundProver for &mut P {
    fn round(&mut self, round: usize, challenges: &[FieldElement]) -> UnivariatePoly {
        (**self).round(round, challenges)
    }
}

impl<P: RoundProver + ?Sized> RoundProver for Box<P> {
    fn round(&mut self, round: usize, challenges: &[FieldElement]) -> UnivariatePoly {
        (**self).round(round, challenges)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectReason {
    /// The round message has degree above the bound.
    DegreeBound { degree: usize, bound: usize },
    /// The round message has coefficients outside the working field.
    ForeignField,
    /// `g(0) + g(1)` differs from the running claim.
    RoundCheck,
    /// The last claim differs from the summand's value at `q`.
    FinalCheck,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::DegreeBound { degree, bound } => {
                write!(f, "degree {degree} exceeds bound {bound}")
            }
            RejectReason::ForeignField => write!(f, "coefficients outside the field"),
            RejectReason::RoundCheck => write!(f, "g(0)+g(1) differs from the claim"),
            RejectReason::FinalCheck => write!(f, "final claim differs from the oracle value"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub round: usize,
    pub reason: RejectReason,
}

/// One completed or failed round: the message, the claim it was checked
/// against, and the challenge consumed by the round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub message: UnivariatePoly,
    pub claim: FieldElement,
    pub challenge: FieldElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumcheckTranscript {
    pub q: Vec<FieldElement>,
    pub rounds: Vec<RoundRecord>,
    pub final_claim: Option<FieldElement>,
    pub final_read: FieldElement,
    pub accepted: bool,
    pub rejection: Option<Rejection>,
}

fn hex(x: &FieldElement) -> String {
    format!("{:#x}", x.bits())
}

impl SumcheckTranscript {
    /// One JSON object per round, followed by a verdict line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (j, r) in self.rounds.iter().enumerate() {
            let line = json!({
                "round": j,
                "coeffs": r.message.coeffs().iter().map(hex).collect::<Vec<_>>(),
                "claim": hex(&r.claim),
                "challenge": hex(&r.challenge),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        let verdict = json!({
            "q": self.q.iter().map(hex).collect::<Vec<_>>(),
            "final_read": hex(&self.final_read),
            "accepted": self.accepted,
            "rejection": self.rejection.map(|r| format!("round {}: {}", r.round, r.reason)),
        });
        out.push_str(&verdict.to_string());
        out.push('\n');
        out
    }
}

/// Runs the verifier with a fresh uniform `q` and a single oracle read at `q`.
pub fn run_summation_test<O, P, R>(
    field: &FieldSpec,
    params: &SumcheckParams,
    h_oracle: O,
    prover: P,
    rng: &mut R,
) -> Result<SumcheckTranscript, SumcheckError>
where
    O: FnOnce(&[FieldElement]) -> FieldElement,
    P: RoundProver,
    R: Rng + ?Sized,
{
    let q: Vec<FieldElement> = (0..params.m).map(|_| field.random(rng)).collect();
    let read = h_oracle(&q);
    run_with_point(field, params, q, read, prover)
}

/// The verifier's decision procedure for a given point `q` and oracle value
/// `h(q)`. Useful when the read is realized by other parties.
pub fn run_with_point<P: RoundProver>(
    field: &FieldSpec,
    params: &SumcheckParams,
    q: Vec<FieldElement>,
    final_read: FieldElement,
    mut prover: P,
) -> Result<SumcheckTranscript, SumcheckError> {
    if q.len() != params.m {
        return Err(SumcheckError::PointArity {
            expected: params.m,
            got: q.len(),
        });
    }
    if !field.contains(&params.claimed) {
        return Err(SumcheckError::ForeignClaim);
    }
    let mut rounds = Vec::with_capacity(params.m);
    let mut claim = params.claimed;
    let mut rejection = None;
    for j in 0..params.m {
        let message = prover.round(j, &q[..j]);
        let challenge = q[j];
        let reason = if message.coeffs().iter().any(|c| !field.contains(c)) {
            Some(RejectReason::ForeignField)
        } else {
            match message.degree() {
                Some(deg) if deg > params.d => Some(RejectReason::DegreeBound {
                    degree: deg,
                    bound: params.d,
                }),
                _ if message.eval(field.zero()) + message.eval(field.one()) != claim => {
                    Some(RejectReason::RoundCheck)
                }
                _ => None,
            }
        };
        let next = if reason.is_none() {
            Some(message.eval(challenge))
        } else {
            None
        };
        rounds.push(RoundRecord {
            message,
            claim,
            challenge,
        });
        if let Some(reason) = reason {
            rejection = Some(Rejection { round: j, reason });
            break;
        }
        claim = next.expect("set when the round passes");
    }
    let final_claim = rejection.is_none().then_some(claim);
    if rejection.is_none() && claim != final_read {
        rejection = Some(Rejection {
            round: params.m,
            reason: RejectReason::FinalCheck,
        });
    }
    Ok(SumcheckTranscript {
        q,
        rounds,
        final_claim,
        final_read,
        accepted: rejection.is_none(),
        rejection,
    })
}

/// Interpolation abscissae for messages of degree at most `d`: the first
/// `min(d, p - 1) + 1` field elements. Over a field with `p ≤ d` elements the
/// message is only determined as a function on `F`, which is all the verifier
/// ever evaluates.
pub fn abscissae(field: &FieldSpec, d: usize) -> Vec<FieldElement> {
    let count = (d as u64).min(field.size() - 1) + 1;
    (0..count).map(|b| field.element_reduced(b)).collect()
}

/// The standard prover for an explicitly evaluable summand:
/// `g_j(X) = Σ_{s ∈ {0,1}^{m-j-1}} h(q_0..q_{j-1}, X, s)`.
pub struct HonestProver<H> {
    field: FieldSpec,
    m: usize,
    d: usize,
    h: H,
}

impl<H: Fn(&[FieldElement]) -> FieldElement> HonestProver<H> {
    pub fn new(field: FieldSpec, m: usize, d: usize, h: H) -> Self {
        HonestProver { field, m, d, h }
    }

    /// `Σ_{x ∈ {0,1}^m} h(x)`.
    pub fn true_sum(&self) -> FieldElement {
        let mut point = vec![self.field.zero(); self.m];
        let mut acc = self.field.zero();
        for b in 0..1usize << self.m {
            for (i, x) in point.iter_mut().enumerate() {
                *x = self.field.element_reduced((b >> i & 1) as u64);
            }
            acc += (self.h)(&point);
        }
        acc
    }

    pub fn message(&self, round: usize, challenges: &[FieldElement]) -> UnivariatePoly {
        let free = self.m - round - 1;
        let mut point = Vec::with_capacity(self.m);
        point.extend_from_slice(&challenges[..round]);
        point.resize(self.m, self.field.zero());
        let samples: Vec<(FieldElement, FieldElement)> = abscissae(&self.field, self.d)
            .into_iter()
            .map(|t| {
                point[round] = t;
                let mut acc = self.field.zero();
                for s in 0..1usize << free {
                    for i in 0..free {
                        point[round + 1 + i] = self.field.element_reduced((s >> i & 1) as u64);
                    }
                    acc += (self.h)(&point);
                }
                (t, acc)
            })
            .collect();
        let bound = samples.len() - 1;
        UnivariatePoly::interpolate(&self.field, &samples, bound)
            .expect("abscissae are distinct and within the bound")
    }
}

impl<H: Fn(&[FieldElement]) -> FieldElement> RoundProver for HonestProver<H> {
    fn round(&mut self, round: usize, challenges: &[FieldElement]) -> UnivariatePoly {
        self.message(round, challenges)
    }
}

/// Defends a false claim by adding `c·X` to each honest message, with `c`
/// chosen to pass the current round check. In characteristic two a constant
/// shift cancels in `g(0) + g(1)`, so the shift is linear. The discrepancy
/// `c` is multiplied by each challenge, so the final check passes exactly when
/// some challenge is zero.
pub struct LazyCheater<H> {
    honest: HonestProver<H>,
    offset: FieldElement,
}

impl<H: Fn(&[FieldElement]) -> FieldElement> LazyCheater<H> {
    pub fn new(field: FieldSpec, m: usize, d: usize, h: H, false_claim: FieldElement) -> Self {
        let honest = HonestProver::new(field, m, d, h);
        let offset = false_claim - honest.true_sum();
        LazyCheater { honest, offset }
    }
}

impl<H: Fn(&[FieldElement]) -> FieldElement> RoundProver for LazyCheater<H> {
    fn round(&mut self, round: usize, challenges: &[FieldElement]) -> UnivariatePoly {
        let base = self.honest.message(round, challenges);
        let field = &self.honest.field;
        if self.honest.d == 0 {
            return base;
        }
        let c = challenges[..round]
            .iter()
            .fold(self.offset, |acc, &q| acc * q);
        base.add(&UnivariatePoly::new(vec![field.zero(), c]))
    }
}
