//! Exact value of a quantum strategy in the multilinearity game.

use mipstar::mlgame::MLGameConfig;
use mipstar::FieldElement;
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::QuantumError;
use crate::linalg::c;
use crate::state::apply_local;
use crate::strategy::QuantumStrategy;

/// Guard on `p^n · n · p^2 · triples`.
pub const MAX_QUANTUM_WORK: u128 = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuantumGameValue {
    /// Probability that all players agree on a uniform point.
    pub consistency: f64,
    /// Acceptance probability of the linearity test.
    pub linearity: f64,
    /// `(consistency + linearity) / 2`.
    pub value: f64,
}

struct Ctx<'a> {
    strategy: &'a QuantumStrategy,
    d: usize,
    r: usize,
    zero: Vec<Vec<Vec<bool>>>,
}

impl Ctx<'_> {
    fn stride(&self, register: usize) -> usize {
        self.d.pow((self.r - 1 - register) as u32)
    }

    /// Applies `A^{player}_x^a` on register `player`, or `None` if the
    /// operator is zero.
    fn apply(&self, v: &DVector<Complex64>, player: usize, x: usize, a: usize) -> Option<DVector<Complex64>> {
        if self.zero[player][x][a] {
            return None;
        }
        Some(apply_local(v, self.d, self.stride(player), self.strategy.op(player, x, a)))
    }
}

/// The exact acceptance probability: consistency term over all points with
/// `r`-fold equal outcomes, linearity term over every direction, point,
/// ordered pair of distinct other values on the line and player triple.
pub fn game_value_quantum(config: &MLGameConfig, strategy: &QuantumStrategy) -> Result<QuantumGameValue, QuantumError> {
    if strategy.config() != config {
        return Err(QuantumError::Arity("strategy was built for a different game".into()));
    }
    let field = config.field;
    let p = field.size() as usize;
    let triples = config.triples();
    let work = config.points() as u128 * config.n as u128 * (p * p) as u128 * triples.len() as u128;
    if work > MAX_QUANTUM_WORK {
        return Err(QuantumError::TooLarge(work as usize));
    }
    let r = config.r;
    let zero = (0..r)
        .map(|j| {
            strategy
                .family(j)
                .iter()
                .map(|povm| povm.iter().map(|m| m.iter().all(|e| *e == c(0.0))).collect())
                .collect()
        })
        .collect();
    let ctx = Ctx {
        strategy,
        d: strategy.local_dim(),
        r,
        zero,
    };
    let psi = strategy.state().amplitudes();

    let cons_terms: Vec<f64> = (0..config.points())
        .into_par_iter()
        .map(|x| {
            let mut total = 0.0;
            for a in 0..p {
                let mut v = Some(psi.clone());
                for j in 0..r {
                    v = v.and_then(|v| ctx.apply(&v, j, x, a));
                }
                if let Some(v) = v {
                    total += psi.dotc(&v).re;
                }
            }
            total
        })
        .collect();
    let consistency = cons_terms.iter().sum::<f64>() / config.points() as f64;

    let elems: Vec<FieldElement> = (0..p as u64).map(|b| field.element_reduced(b)).collect();
    let jobs: Vec<(usize, usize)> = (0..config.n).flat_map(|i| (0..config.points()).map(move |x| (i, x))).collect();
    let lin_terms: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, x)| {
            let stride = p.pow(i as u32);
            let xb = (x / stride) % p;
            let base = x - xb * stride;
            let xi = elems[xb];
            let mut total = 0.0;
            for yb in (0..p).filter(|&yb| yb != xb) {
                for zb in (0..p).filter(|&zb| zb != xb && zb != yb) {
                    let (y, z) = (base + yb * stride, base + zb * stride);
                    let slope_scale = (elems[zb] - xi) / (elems[yb] - xi);
                    for t in &triples {
                        let mut acc = DVector::<Complex64>::zeros(psi.len());
                        for a in 0..p {
                            let Some(va) = ctx.apply(psi, t[0], x, a) else { continue };
                            for b in 0..p {
                                let Some(vb) = ctx.apply(&va, t[1], y, b) else { continue };
                                // Value at z of the line through (x_i, a) and (y_i, b).
                                let cval = elems[a] + (elems[b] - elems[a]) * slope_scale;
                                if let Some(vc) = ctx.apply(&vb, t[2], z, cval.bits() as usize) {
                                    acc += vc;
                                }
                            }
                        }
                        total += psi.dotc(&acc).re;
                    }
                }
            }
            total
        })
        .collect();
    let lin_total = (triples.len() * config.n * config.points() * (p - 1) * (p - 2)) as f64;
    let linearity = lin_terms.iter().sum::<f64>() / lin_total;
    Ok(QuantumGameValue {
        consistency,
        linearity,
        value: (consistency + linearity) / 2.0,
    })
}
