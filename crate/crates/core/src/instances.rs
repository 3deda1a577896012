//! Desk-scale succinct 3-colorability instances and their arithmetization.
//!
//! A graph on `2^n` vertices addresses its vertices by `n`-bit strings. The
//! arithmetized instance is a polynomial `f(α, z, b1, b2, a1, a2)` with two
//! selector bits `z`:
//!
//! ```text
//! f = (1 - z1)·[(1 - z2)·R(a1) + z2·R(a2)] + z1·E(b1, b2)·EQ(a1, a2)
//! R(a)      = a (a - 1)(a - α)
//! EQ(a1,a2) = Σ_{c ∈ {0,1,α}} N_c(a1)·N_c(a2),   N_c(a) = Π_{c' ≠ c} (a - c')
//! ```
//!
//! `E` is the multilinear extension of the (symmetric) edge indicator. With
//! `z1 = 0` the constraint forces every value into `{0, 1, α}`; with `z1 = 1`
//! it forbids equal colors on adjacent vertices. `N_c(c)` is a nonzero
//! constant whenever `α ∉ {0, 1}`, so `EQ` needs no field inverses.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};
use crate::poly::{boolean_point, ArithExpr, PolyError};

/// Largest address width accepted by [`arithmetize`].
pub const MAX_ADDRESS_BITS: usize = 6;
/// Largest vertex count accepted by the exhaustive colorability oracle.
pub const MAX_ORACLE_VERTICES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("address width {0} exceeds the supported maximum")]
    TooLarge(usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} does not fit in {n} address bits")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("α must differ from 0 and 1")]
    BadAlpha,
    #[error("assignment has {got} entries, expected {expected}")]
    AssignmentSize { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// A graph on `2^n` vertices given by an explicit edge list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccinctGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl SuccinctGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, InstanceError> {
        if n > 16 {
            return Err(InstanceError::TooLarge(n));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for w in [u, v] {
                if w >= 1 << n {
                    return Err(InstanceError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(InstanceError::SelfLoop(u));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(SuccinctGraph { n, edges: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        1 << self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Triangle on vertices 0, 1, 2 of a 4-vertex graph.
    pub fn triangle() -> Self {
        SuccinctGraph::new(2, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    /// Complete graph on 4 vertices.
    pub fn k4() -> Self {
        SuccinctGraph::new(2, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    /// The cycle 0-1-2-3-0.
    pub fn four_cycle() -> Self {
        SuccinctGraph::new(2, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    /// Parses the edge-list format: optional `n <bits>` header, then one edge
    /// per line as two binary strings. Character `i` of a string is address
    /// bit `i`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| InstanceError::Parse {
                line: line_no,
                msg: msg.to_string(),
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() == 2 && parts[0] == "n" {
                n = Some(parts[1].parse().map_err(|_| err("bad address width"))?);
                continue;
            }
            if parts.len() != 2 {
                return Err(err("expected two endpoints"));
            }
            let mut ends = [0usize; 2];
            for (slot, word) in ends.iter_mut().zip(&parts) {
                if word.is_empty() || !word.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(err("endpoints must be binary strings"));
                }
                match n {
                    Some(w) if w != word.len() => return Err(err("endpoint width differs from n")),
                    None => n = Some(word.len()),
                    _ => {}
                }
                *slot = word
                    .bytes()
                    .enumerate()
                    .fold(0, |acc, (i, b)| acc | (((b - b'0') as usize) << i));
            }
            edges.push((ends[0], ends[1]));
        }
        let n = n.ok_or(InstanceError::Parse {
            line: 0,
            msg: "empty graph needs an `n` header".into(),
        })?;
        SuccinctGraph::new(n, edges)
    }

    fn address(&self, v: usize) -> String {
        (0..self.n).map(|i| if v >> i & 1 == 1 { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for SuccinctGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for (u, v) in self.edges() {
            writeln!(f, "{} {}", self.address(u), self.address(v))?;
        }
        Ok(())
    }
}

/// Variable layout of the arithmetized constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub r: usize,
    pub n: usize,
}

impl Layout {
    pub const ALPHA: usize = 0;

    pub fn z(&self, i: usize) -> usize {
        1 + i
    }

    pub fn b1(&self, i: usize) -> usize {
        1 + self.r + i
    }

    pub fn b2(&self, i: usize) -> usize {
        1 + self.r + self.n + i
    }

    pub fn a1(&self) -> usize {
        1 + self.r + 2 * self.n
    }

    pub fn a2(&self) -> usize {
        2 + self.r + 2 * self.n
    }

    pub fn arity(&self) -> usize {
        3 + self.r + 2 * self.n
    }
}

/// An instance `(r, n, f)` of the arithmetized coloring problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoringInstance {
    pub r: usize,
    pub n: usize,
    pub f: ArithExpr,
    pub d_f: usize,
}

impl ColoringInstance {
    pub fn new(r: usize, n: usize, f: ArithExpr) -> Result<Self, InstanceError> {
        let layout = Layout { r, n };
        if f.min_arity() > layout.arity() {
            return Err(PolyError::VarOutOfRange {
                index: f.min_arity() - 1,
                arity: layout.arity(),
            }
            .into());
        }
        let d_f = f.degrees(layout.arity()).into_iter().max().unwrap_or(0);
        Ok(ColoringInstance { r, n, f, d_f })
    }

    pub fn layout(&self) -> Layout {
        Layout { r: self.r, n: self.n }
    }

    /// Number of variables of the summand, `r + 2n`.
    pub fn m(&self) -> usize {
        self.r + 2 * self.n
    }

    /// Per-variable degree bound of the summand, `2·d_f`.
    pub fn d(&self) -> usize {
        2 * self.d_f
    }

    /// Evaluates `f(α, z, b1, b2, a1, a2)` where `zb = (z, b1, b2)`.
    pub fn eval(
        &self,
        field: &FieldSpec,
        alpha: FieldElement,
        zb: &[FieldElement],
        a1: FieldElement,
        a2: FieldElement,
    ) -> Result<FieldElement, InstanceError> {
        if zb.len() != self.m() {
            return Err(PolyError::Arity {
                expected: self.m(),
                got: zb.len(),
            }
            .into());
        }
        let mut point = Vec::with_capacity(self.layout().arity());
        point.push(alpha);
        point.extend_from_slice(zb);
        point.push(a1);
        point.push(a2);
        Ok(self.f.eval(field, &point)?)
    }

    /// Text dump: `(r, n, d_f)` header lines followed by the expression.
    pub fn to_text(&self) -> String {
        format!("r {}\nn {}\nd_f {}\nf {}\n", self.r, self.n, self.d_f, self.f)
    }

    pub fn from_text(text: &str) -> Result<Self, InstanceError> {
        let mut r = None;
        let mut n = None;
        let mut d_f = None;
        let mut f = None;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let err = |msg: &str| InstanceError::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let num = || rest.trim().parse::<usize>().map_err(|_| err("bad integer"));
            match key {
                "r" => r = Some(num()?),
                "n" => n = Some(num()?),
                "d_f" => d_f = Some(num()?),
                "f" => f = Some(ArithExpr::parse(rest)?),
                _ => return Err(err("unknown key")),
            }
        }
        let missing = |what: &str| InstanceError::Parse {
            line: 0,
            msg: format!("missing `{what}`"),
        };
        let inst = ColoringInstance::new(
            r.ok_or_else(|| missing("r"))?,
            n.ok_or_else(|| missing("n"))?,
            f.ok_or_else(|| missing("f"))?,
        )?;
        if let Some(d) = d_f {
            if d != inst.d_f {
                return Err(InstanceError::Parse {
                    line: 0,
                    msg: format!("header d_f {d} disagrees with expression degree {}", inst.d_f),
                });
            }
        }
        Ok(inst)
    }
}

fn range_poly(a: usize, alpha: usize) -> ArithExpr {
    ArithExpr::product(vec![
        ArithExpr::var(a),
        ArithExpr::difference(ArithExpr::var(a), ArithExpr::constant(1)),
        ArithExpr::difference(ArithExpr::var(a), ArithExpr::var(alpha)),
    ])
}

/// `Π_{c' ≠ c} (a - c')` over the palette `{0, 1, α}`; `c` is 0, 1 or 2 (= α).
fn palette_numerator(a: usize, alpha: usize, c: usize) -> ArithExpr {
    let root = |c: usize| match c {
        0 => ArithExpr::var(a),
        1 => ArithExpr::difference(ArithExpr::var(a), ArithExpr::constant(1)),
        _ => ArithExpr::difference(ArithExpr::var(a), ArithExpr::var(alpha)),
    };
    ArithExpr::product((0..3).filter(|&o| o != c).map(root).collect())
}

fn bit_indicator(var: usize, bit: usize) -> ArithExpr {
    if bit == 1 {
        ArithExpr::var(var)
    } else {
        ArithExpr::one_minus(ArithExpr::var(var))
    }
}

/// Multilinear extension of the symmetric edge indicator as an expression.
fn edge_indicator(g: &SuccinctGraph, layout: Layout) -> ArithExpr {
    let mut terms = Vec::new();
    for (u, v) in g.edges() {
        for (x, y) in [(u, v), (v, u)] {
            let factors = (0..g.n)
                .map(|i| bit_indicator(layout.b1(i), x >> i & 1))
                .chain((0..g.n).map(|i| bit_indicator(layout.b2(i), y >> i & 1)))
                .collect();
            terms.push(ArithExpr::product(factors));
        }
    }
    ArithExpr::sum(terms)
}

/// Builds the `r = 2` instance described in the module docs.
pub fn arithmetize(g: &SuccinctGraph) -> Result<ColoringInstance, InstanceError> {
    if g.n > MAX_ADDRESS_BITS {
        return Err(InstanceError::TooLarge(g.n));
    }
    let layout = Layout { r: 2, n: g.n };
    let alpha = Layout::ALPHA;
    let (z1, z2) = (ArithExpr::var(layout.z(0)), ArithExpr::var(layout.z(1)));
    let range_part = ArithExpr::product(vec![
        ArithExpr::one_minus(z1.clone()),
        ArithExpr::sum(vec![
            ArithExpr::product(vec![
                ArithExpr::one_minus(z2.clone()),
                range_poly(layout.a1(), alpha),
            ]),
            ArithExpr::product(vec![z2, range_poly(layout.a2(), alpha)]),
        ]),
    ]);
    let eq = ArithExpr::sum(
        (0..3)
            .map(|c| {
                ArithExpr::product(vec![
                    palette_numerator(layout.a1(), alpha, c),
                    palette_numerator(layout.a2(), alpha, c),
                ])
            })
            .collect(),
    );
    let edge_part = ArithExpr::product(vec![z1, edge_indicator(g, layout), eq]);
    ColoringInstance::new(2, g.n, ArithExpr::sum(vec![range_part, edge_part]))
}

/// A mapping `{0,1}^n -> F`, indexed by vertex address.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub table: Vec<FieldElement>,
}

impl Assignment {
    /// Maps colors 0, 1, 2 to the palette `{0, 1, α}`.
    pub fn from_colors(field: &FieldSpec, alpha: FieldElement, colors: &[u8]) -> Self {
        let palette = [field.zero(), field.one(), alpha];
        Assignment {
            table: colors.iter().map(|&c| palette[c as usize % 3]).collect(),
        }
    }
}

/// Checks the arithmetized constraint at every boolean `(z, b1, b2)`.
pub fn verify_assignment(
    inst: &ColoringInstance,
    field: &FieldSpec,
    assignment: &Assignment,
    alpha: FieldElement,
) -> Result<bool, InstanceError> {
    if alpha.is_zero() || alpha.is_one() {
        return Err(InstanceError::BadAlpha);
    }
    if assignment.table.len() != 1 << inst.n {
        return Err(InstanceError::AssignmentSize {
            expected: 1 << inst.n,
            got: assignment.table.len(),
        });
    }
    let m = inst.m();
    let vmask = (1usize << inst.n) - 1;
    for b in 0..1usize << m {
        let zb = boolean_point(field, m, b);
        let v1 = (b >> inst.r) & vmask;
        let v2 = (b >> (inst.r + inst.n)) & vmask;
        let val = inst.eval(field, alpha, &zb, assignment.table[v1], assignment.table[v2])?;
        if !val.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn color_search(g: &SuccinctGraph, colors: &mut Vec<u8>) -> bool {
    let v = colors.len();
    if v == g.vertex_count() {
        return true;
    }
    for c in 0..3u8 {
        if (0..v).all(|u| !(colors[u] == c && g.has_edge(u, v))) {
            colors.push(c);
            if color_search(g, colors) {
                return true;
            }
            colors.pop();
        }
    }
    false
}

/// Exhaustive (backtracking) search for a proper 3-coloring.
pub fn is_3colorable(g: &SuccinctGraph) -> Result<Option<Vec<u8>>, InstanceError> {
    if g.vertex_count() > MAX_ORACLE_VERTICES {
        return Err(InstanceError::TooLarge(g.n));
    }
    let mut colors = Vec::with_capacity(g.vertex_count());
    Ok(color_search(g, &mut colors).then_some(colors))
}

/// A 3-coloring with the fewest monochromatic edges, and that count.
pub fn best_coloring(g: &SuccinctGraph) -> Result<(Vec<u8>, usize), InstanceError> {
    if g.vertex_count() > MAX_ORACLE_VERTICES {
        return Err(InstanceError::TooLarge(g.n));
    }
    let nv = g.vertex_count();
    let mut best: Option<(Vec<u8>, usize)> = None;
    let total = 3usize.pow(nv as u32);
    for code in 0..total {
        let mut c = code;
        let colors: Vec<u8> = (0..nv)
            .map(|_| {
                let d = (c % 3) as u8;
                c /= 3;
                d
            })
            .collect();
        let bad = g.edges().filter(|&(u, v)| colors[u] == colors[v]).count();
        if best.as_ref().map_or(true, |(_, b)| bad < *b) {
            best = Some((colors, bad));
            if bad == 0 {
                break;
            }
        }
    }
    Ok(best.expect("at least one coloring"))
}
