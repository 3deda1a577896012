//! Arithmetic expressions, multilinear functions and univariate polynomials.

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("variable index {index} out of range for arity {arity}")]
    VarOutOfRange { index: usize, arity: usize },
    #[error("table of length {0} is not a power of two")]
    TableSize(usize),
    #[error("duplicate interpolation abscissa {0}")]
    DuplicateAbscissa(FieldElement),
    #[error("{points} points exceed degree bound {bound}")]
    TooManyPoints { points: usize, bound: usize },
    #[error("enumeration of {0} points exceeds the guard of 2^20")]
    DomainTooLarge(u128),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

// ---------------------------------------------------------------------------
// Arithmetic expressions
// ---------------------------------------------------------------------------

/// A rooted tree of additions and multiplications over variables and integer
/// constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArithExpr {
    Const(i64),
    Var(usize),
    Add(Vec<ArithExpr>),
    Mul(Vec<ArithExpr>),
}

impl ArithExpr {
    pub fn var(i: usize) -> Self {
        ArithExpr::Var(i)
    }

    pub fn constant(c: i64) -> Self {
        ArithExpr::Const(c)
    }

    pub fn sum(terms: Vec<ArithExpr>) -> Self {
        ArithExpr::Add(terms)
    }

    pub fn product(factors: Vec<ArithExpr>) -> Self {
        ArithExpr::Mul(factors)
    }

    /// `a - b`, written with an explicit `-1` coefficient.
    pub fn difference(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Add(vec![a, ArithExpr::Mul(vec![ArithExpr::Const(-1), b])])
    }

    /// `1 - e`.
    pub fn one_minus(e: ArithExpr) -> Self {
        ArithExpr::difference(ArithExpr::Const(1), e)
    }

    /// Number of nodes plus the bit length of every constant.
    pub fn size(&self) -> usize {
        match self {
            ArithExpr::Const(c) => 1 + (64 - c.unsigned_abs().leading_zeros()).max(1) as usize,
            ArithExpr::Var(_) => 1,
            ArithExpr::Add(ch) | ArithExpr::Mul(ch) => 1 + ch.iter().map(|c| c.size()).sum::<usize>(),
        }
    }

    /// One more than the largest variable index (0 for a constant expression).
    pub fn min_arity(&self) -> usize {
        match self {
            ArithExpr::Const(_) => 0,
            ArithExpr::Var(i) => i + 1,
            ArithExpr::Add(ch) | ArithExpr::Mul(ch) => {
                ch.iter().map(|c| c.min_arity()).max().unwrap_or(0)
            }
        }
    }

    /// Per-variable degree bound of every variable `< arity`.
    pub fn degrees(&self, arity: usize) -> Vec<usize> {
        match self {
            ArithExpr::Const(_) => vec![0; arity],
            ArithExpr::Var(i) => {
                let mut d = vec![0; arity];
                if *i < arity {
                    d[*i] = 1;
                }
                d
            }
            ArithExpr::Add(ch) => ch.iter().fold(vec![0; arity], |mut acc, c| {
                for (a, b) in acc.iter_mut().zip(c.degrees(arity)) {
                    *a = (*a).max(b);
                }
                acc
            }),
            ArithExpr::Mul(ch) => ch.iter().fold(vec![0; arity], |mut acc, c| {
                for (a, b) in acc.iter_mut().zip(c.degrees(arity)) {
                    *a += b;
                }
                acc
            }),
        }
    }

    /// Upper bound on the degree of the represented polynomial in any single
    /// variable.
    pub fn degree_per_var(&self) -> usize {
        self.degrees(self.min_arity()).into_iter().max().unwrap_or(0)
    }

    /// Evaluates the expression at `point`; integer constants enter the field
    /// through their parity.
    pub fn eval(&self, field: &FieldSpec, point: &[FieldElement]) -> Result<FieldElement, PolyError> {
        let arity = self.min_arity();
        if arity > point.len() {
            return Err(PolyError::VarOutOfRange {
                index: arity - 1,
                arity: point.len(),
            });
        }
        Ok(self.eval_unchecked(field, point))
    }

    fn eval_unchecked(&self, field: &FieldSpec, point: &[FieldElement]) -> FieldElement {
        match self {
            ArithExpr::Const(c) => field.from_int(*c),
            ArithExpr::Var(i) => point[*i],
            ArithExpr::Add(ch) => ch
                .iter()
                .fold(field.zero(), |acc, c| acc + c.eval_unchecked(field, point)),
            ArithExpr::Mul(ch) => {
                let mut acc = field.one();
                for c in ch {
                    acc *= c.eval_unchecked(field, point);
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Parses the prefix form produced by `Display`.
    pub fn parse(text: &str) -> Result<Self, PolyError> {
        let mut parser = Parser { src: text.as_bytes(), pos: 0 };
        let expr = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(expr)
    }
}

impl fmt::Display for ArithExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithExpr::Const(c) => write!(f, "(const {c})"),
            ArithExpr::Var(i) => write!(f, "(var {i})"),
            ArithExpr::Add(ch) | ArithExpr::Mul(ch) => {
                let op = if matches!(self, ArithExpr::Add(_)) { "add" } else { "mul" };
                write!(f, "({op}")?;
                for c in ch {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> PolyError {
        PolyError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), PolyError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", byte as char)))
        }
    }

    fn word(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && !self.src[self.pos].is_ascii_whitespace()
            && self.src[self.pos] != b'('
            && self.src[self.pos] != b')'
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn expr(&mut self) -> Result<ArithExpr, PolyError> {
        self.expect(b'(')?;
        let head = self.word().to_string();
        let node = match head.as_str() {
            "const" => {
                let v = self.word().parse().map_err(|_| self.error("bad constant"))?;
                ArithExpr::Const(v)
            }
            "var" => {
                let v = self.word().parse().map_err(|_| self.error("bad variable index"))?;
                ArithExpr::Var(v)
            }
            "add" | "mul" => {
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    if self.src.get(self.pos) == Some(&b')') {
                        break;
                    }
                    children.push(self.expr()?);
                }
                if head == "add" {
                    ArithExpr::Add(children)
                } else {
                    ArithExpr::Mul(children)
                }
            }
            _ => return Err(self.error(&format!("unknown node '{head}'"))),
        };
        self.expect(b')')?;
        Ok(node)
    }
}

// ---------------------------------------------------------------------------
// Multilinear functions
// ---------------------------------------------------------------------------

/// A multilinear function `F^m -> F` stored as its values on `{0,1}^m`.
///
/// Entry `b` of the table is the value at the boolean point whose coordinate
/// `i` is bit `i` of `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultilinearFn {
    m: usize,
    table: Vec<FieldElement>,
}

impl MultilinearFn {
    /// The unique multilinear extension of a boolean-cube table.
    pub fn extend(table: Vec<FieldElement>) -> Result<Self, PolyError> {
        if table.is_empty() || !table.len().is_power_of_two() {
            return Err(PolyError::TableSize(table.len()));
        }
        let m = table.len().trailing_zeros() as usize;
        Ok(MultilinearFn { m, table })
    }

    pub fn constant(m: usize, value: FieldElement) -> Self {
        MultilinearFn {
            m,
            table: vec![value; 1 << m],
        }
    }

    pub fn arity(&self) -> usize {
        self.m
    }

    pub fn table(&self) -> &[FieldElement] {
        &self.table
    }

    pub fn into_table(self) -> Vec<FieldElement> {
        self.table
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|v| v.is_zero())
    }

    /// `Σ_b table[b] · Π_i (x_i if b_i = 1 else 1 - x_i)`, evaluated by folding
    /// one variable at a time.
    pub fn eval(&self, x: &[FieldElement]) -> Result<FieldElement, PolyError> {
        if x.len() != self.m {
            return Err(PolyError::Arity {
                expected: self.m,
                got: x.len(),
            });
        }
        let mut layer = self.table.clone();
        for &xi in x {
            let half = layer.len() / 2;
            for j in 0..half {
                let (lo, hi) = (layer[2 * j], layer[2 * j + 1]);
                layer[j] = lo + xi * (hi - lo);
            }
            layer.truncate(half);
        }
        Ok(layer[0])
    }

    /// Fixes coordinate `var` to `value`, returning a function of the remaining
    /// `m - 1` coordinates (in their original order).
    pub fn restrict(&self, var: usize, value: FieldElement) -> Result<Self, PolyError> {
        if var >= self.m {
            return Err(PolyError::VarOutOfRange {
                index: var,
                arity: self.m,
            });
        }
        let low_mask = (1usize << var) - 1;
        let table = (0..1usize << (self.m - 1))
            .map(|idx| {
                let base = (idx & low_mask) | ((idx & !low_mask) << 1);
                let lo = self.table[base];
                let hi = self.table[base | (1 << var)];
                lo + value * (hi - lo)
            })
            .collect();
        Ok(MultilinearFn { m: self.m - 1, table })
    }

    /// Fixes the highest coordinates to `values` (coordinate `m - values.len()`
    /// gets `values[0]`, and so on).
    pub fn restrict_top(&self, values: &[FieldElement]) -> Result<Self, PolyError> {
        let mut f = self.clone();
        for &v in values.iter().rev() {
            f = f.restrict(f.m - 1, v)?;
        }
        Ok(f)
    }

    /// Exact fraction of points of `F^m` where the function vanishes.
    pub fn zero_fraction(&self, field: &FieldSpec) -> Result<Ratio<u64>, PolyError> {
        let total = (field.size() as u128).pow(self.m as u32);
        if total > 1 << 20 {
            return Err(PolyError::DomainTooLarge(total));
        }
        let zeros = points(field, self.m)
            .filter(|x| self.eval(x).map(|v| v.is_zero()).unwrap_or(false))
            .count() as u64;
        Ok(Ratio::new(zeros, total as u64))
    }
}

/// Iterates over `F^m` in mixed-radix order (coordinate 0 varies fastest).
pub fn points(field: &FieldSpec, m: usize) -> impl Iterator<Item = Vec<FieldElement>> + '_ {
    let p = field.size();
    let total = p.checked_pow(m as u32).expect("domain size fits in u64");
    (0..total).map(move |mut idx| {
        (0..m)
            .map(|_| {
                let e = field.element_reduced(idx % p);
                idx /= p;
                e
            })
            .collect()
    })
}

/// Mixed-radix index of a point of `F^m`, inverse of [`points`].
pub fn point_index(field: &FieldSpec, x: &[FieldElement]) -> u64 {
    let p = field.size();
    x.iter().rev().fold(0, |acc, e| acc * p + e.bits())
}

/// The boolean point encoded by the bitmask `b`.
pub fn boolean_point(field: &FieldSpec, m: usize, b: usize) -> Vec<FieldElement> {
    (0..m).map(|i| field.element_reduced(((b >> i) & 1) as u64)).collect()
}

// ---------------------------------------------------------------------------
// Univariate polynomials
// ---------------------------------------------------------------------------

/// A univariate polynomial in coefficient form, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnivariatePoly {
    coeffs: Vec<FieldElement>,
}

impl UnivariatePoly {
    /// Builds a polynomial from coefficients; an empty vector is not allowed
    /// since the field could not be recovered from it.
    pub fn new(coeffs: Vec<FieldElement>) -> Self {
        assert!(!coeffs.is_empty(), "use UnivariatePoly::zero for the zero polynomial");
        UnivariatePoly { coeffs }
    }

    pub fn zero(field: &FieldSpec) -> Self {
        UnivariatePoly {
            coeffs: vec![field.zero()],
        }
    }

    pub fn constant(c: FieldElement) -> Self {
        UnivariatePoly { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Degree after dropping zero leading coefficients; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn eval(&self, x: FieldElement) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(x.zero_like(), |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = self.coeffs[0].zero_like();
        let coeffs = (0..n)
            .map(|i| {
                *self.coeffs.get(i).unwrap_or(&zero) + *other.coeffs.get(i).unwrap_or(&zero)
            })
            .collect();
        UnivariatePoly { coeffs }
    }

    pub fn scale(&self, s: FieldElement) -> Self {
        UnivariatePoly {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    fn mul_linear(&self, root: FieldElement) -> Self {
        // (X - root) · self
        let zero = root.zero_like();
        let mut coeffs = vec![zero; self.coeffs.len() + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i + 1] += c;
            coeffs[i] -= c * root;
        }
        UnivariatePoly { coeffs }
    }

    /// The unique polynomial of degree `≤ bound` through `points` (Lagrange).
    pub fn interpolate(
        field: &FieldSpec,
        points: &[(FieldElement, FieldElement)],
        bound: usize,
    ) -> Result<Self, PolyError> {
        if points.len() > bound + 1 {
            return Err(PolyError::TooManyPoints {
                points: points.len(),
                bound,
            });
        }
        for (i, (xi, _)) in points.iter().enumerate() {
            if points[..i].iter().any(|(xj, _)| xj == xi) {
                return Err(PolyError::DuplicateAbscissa(*xi));
            }
        }
        let mut acc = UnivariatePoly::zero(field);
        for (i, &(xi, yi)) in points.iter().enumerate() {
            let mut basis = UnivariatePoly::constant(field.one());
            let mut denom = field.one();
            for (j, &(xj, _)) in points.iter().enumerate() {
                if i != j {
                    basis = basis.mul_linear(xj);
                    denom *= xi - xj;
                }
            }
            acc = acc.add(&basis.scale(yi / denom));
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Multilinear extension through the monomial basis: coefficient of
    /// `Π_{i∈S} x_i` is the Möbius transform `Σ_{T⊆S} table[T]` (char 2 signs vanish).
    fn monomial_oracle(table: &[FieldElement], x: &[FieldElement]) -> FieldElement {
        let m = x.len();
        let mut acc = table[0].zero_like();
        for s in 0..table.len() {
            let mut coeff = table[0].zero_like();
            for t in 0..table.len() {
                if t & !s == 0 {
                    coeff += table[t];
                }
            }
            let mono = (0..m)
                .filter(|i| s >> i & 1 == 1)
                .fold(table[0].one_like(), |p, i| p * x[i]);
            acc += coeff * mono;
        }
        acc
    }

    #[test]
    fn expression_examples() {
        let f = FieldSpec::gf64();
        let t = f.alpha();
        let e = ArithExpr::product(vec![ArithExpr::var(0), ArithExpr::var(1)]);
        assert_eq!(e.eval(&f, &[t, t]).unwrap(), t * t);
        let two_x = ArithExpr::product(vec![ArithExpr::constant(2), ArithExpr::var(0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert!(two_x.eval(&f, &[f.random(&mut rng)]).unwrap().is_zero());
        }
        // R(a) = a (a - 1)(a - α) with α = var 1
        let r = ArithExpr::product(vec![
            ArithExpr::var(0),
            ArithExpr::difference(ArithExpr::var(0), ArithExpr::constant(1)),
            ArithExpr::difference(ArithExpr::var(0), ArithExpr::var(1)),
        ]);
        assert!(r.eval(&f, &[t, t]).unwrap().is_zero());
        assert!(matches!(r.eval(&f, &[t]), Err(PolyError::VarOutOfRange { .. })));
    }

    #[test]
    fn degree_examples() {
        let cube = ArithExpr::product(vec![ArithExpr::var(0); 3]);
        assert_eq!(cube.degree_per_var(), 3);
        let lin = ArithExpr::sum(vec![ArithExpr::var(0), ArithExpr::var(1)]);
        assert_eq!(lin.degree_per_var(), 1);
        let mixed = ArithExpr::product(vec![ArithExpr::var(0), ArithExpr::var(1)]);
        assert_eq!(mixed.degree_per_var(), 1);
    }

    #[test]
    fn expression_text_round_trip() {
        let text = "(mul (var 0) (add (var 1) (const 1)))";
        let e = ArithExpr::parse(text).unwrap();
        assert_eq!(e.to_string(), text);
        assert_eq!(e.size(), 6);
        assert!(ArithExpr::parse("(pow (var 0))").is_err());
        assert!(ArithExpr::parse("(var 0) x").is_err());
    }

    #[test]
    fn extension_examples() {
        let f = FieldSpec::gf4();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = f.random(&mut rng);
        let g = MultilinearFn::constant(3, c);
        for _ in 0..10 {
            let x: Vec<_> = (0..3).map(|_| f.random(&mut rng)).collect();
            assert_eq!(g.eval(&x).unwrap(), c);
        }
        let id = MultilinearFn::extend(vec![f.zero(), f.one()]).unwrap();
        for x in f.elements() {
            assert_eq!(id.eval(&[x]).unwrap(), x);
        }
        let table: Vec<_> = (0..4).map(|_| f.random(&mut rng)).collect();
        let g = MultilinearFn::extend(table.clone()).unwrap();
        for _ in 0..5 {
            let x: Vec<_> = (0..2).map(|_| f.random(&mut rng)).collect();
            assert_eq!(g.eval(&x).unwrap(), monomial_oracle(&table, &x));
        }
        assert!(matches!(g.eval(&[f.one()]), Err(PolyError::Arity { .. })));
        assert!(MultilinearFn::extend(vec![f.one(); 3]).is_err());
    }

    #[test]
    fn extension_fixes_boolean_tables() {
        let f = FieldSpec::gf64();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let table: Vec<_> = (0..16).map(|_| f.random(&mut rng)).collect();
        let g = MultilinearFn::extend(table.clone()).unwrap();
        for b in 0..16 {
            assert_eq!(g.eval(&boolean_point(&f, 4, b)).unwrap(), table[b]);
        }
    }

    #[test]
    fn restriction_examples() {
        let f = FieldSpec::gf64();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let table: Vec<_> = (0..8).map(|_| f.random(&mut rng)).collect();
            let g = MultilinearFn::extend(table.clone()).unwrap();
            let var = rng.gen_range(0..3);
            let v = f.random(&mut rng);
            let r = g.restrict(var, v).unwrap();
            let rest: Vec<_> = (0..2).map(|_| f.random(&mut rng)).collect();
            let mut glued = rest.clone();
            glued.insert(var, v);
            assert_eq!(r.eval(&rest).unwrap(), g.eval(&glued).unwrap());
            // slice oracle
            let slice = g.restrict(var, f.zero()).unwrap();
            let expected: Vec<_> = (0..8).filter(|b| b >> var & 1 == 0).map(|b| table[b]).collect();
            assert_eq!(slice.table(), expected.as_slice());
        }
        let g = MultilinearFn::extend((0..4).map(|i| f.element(i).unwrap()).collect()).unwrap();
        for b in 0..4usize {
            let r = g
                .restrict(0, f.element((b & 1) as u64).unwrap())
                .unwrap()
                .restrict(0, f.element((b >> 1) as u64).unwrap())
                .unwrap();
            assert_eq!(r.table(), &[g.table()[b]]);
        }
        assert!(g.restrict(2, f.one()).is_err());
    }

    #[test]
    fn zero_fraction_examples() {
        let f = FieldSpec::gf4();
        assert_eq!(MultilinearFn::constant(2, f.zero()).zero_fraction(&f).unwrap(), Ratio::from_integer(1));
        let id = MultilinearFn::extend(vec![f.zero(), f.one()]).unwrap();
        assert_eq!(id.zero_fraction(&f).unwrap(), Ratio::new(1, 4));
        let big = MultilinearFn::constant(2, FieldSpec::gf2_18().one());
        assert!(matches!(big.zero_fraction(&FieldSpec::gf2_18()), Err(PolyError::DomainTooLarge(_))));
    }

    #[test]
    fn interpolation_examples() {
        let f = FieldSpec::gf64();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x0, x1) = (f.element(3).unwrap(), f.element(9).unwrap());
        let (y0, y1) = (f.random(&mut rng), f.random(&mut rng));
        let line = UnivariatePoly::interpolate(&f, &[(x0, y0), (x1, y1)], 1).unwrap();
        assert!(line.degree().unwrap_or(0) <= 1);
        assert_eq!((line.eval(x0), line.eval(x1)), (y0, y1));
        let c = f.random(&mut rng);
        let flat = UnivariatePoly::interpolate(&f, &[(f.zero(), c), (f.one(), c)], 1).unwrap();
        assert!(flat.degree().unwrap_or(0) == 0 && flat.eval(f.alpha()) == c);
        let cubic = UnivariatePoly::new((0..4).map(|_| f.random(&mut rng)).collect());
        let pts: Vec<_> = (1..5).map(|i| f.element(i).unwrap()).map(|x| (x, cubic.eval(x))).collect();
        let back = UnivariatePoly::interpolate(&f, &pts, 3).unwrap();
        let probe = f.element(33).unwrap();
        assert_eq!(back.eval(probe), cubic.eval(probe));
        assert!(matches!(
            UnivariatePoly::interpolate(&f, &[(x0, y0), (x0, y1)], 2),
            Err(PolyError::DuplicateAbscissa(_))
        ));
        assert!(matches!(
            UnivariatePoly::interpolate(&f, &pts, 2),
            Err(PolyError::TooManyPoints { .. })
        ));
    }

    use rand::Rng;

    proptest! {
        #[test]
        fn eval_is_affine_in_each_coordinate(seed in any::<u64>(), var in 0usize..3) {
            let f = FieldSpec::gf64();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = MultilinearFn::extend((0..8).map(|_| f.random(&mut rng)).collect()).unwrap();
            let mut x: Vec<_> = (0..3).map(|_| f.random(&mut rng)).collect();
            let u = f.random(&mut rng);
            let at = |x: &mut Vec<FieldElement>, v| { x[var] = v; g.eval(x).unwrap() };
            let (g0, g1, gu) = (at(&mut x, f.zero()), at(&mut x, f.one()), at(&mut x, u));
            prop_assert_eq!(gu, g0 + u * (g1 - g0));
        }

        #[test]
        fn expression_display_parses_back(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            fn gen(rng: &mut ChaCha8Rng, depth: usize) -> ArithExpr {
                match if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..4) } {
                    0 => ArithExpr::Const(rng.gen_range(-5..6)),
                    1 => ArithExpr::Var(rng.gen_range(0..4)),
                    2 => ArithExpr::Add((0..rng.gen_range(1..4)).map(|_| gen(rng, depth - 1)).collect()),
                    _ => ArithExpr::Mul((0..rng.gen_range(1..4)).map(|_| gen(rng, depth - 1)).collect()),
                }
            }
            let e = gen(&mut rng, 3);
            prop_assert_eq!(ArithExpr::parse(&e.to_string()).unwrap(), e);
        }
    }
}
