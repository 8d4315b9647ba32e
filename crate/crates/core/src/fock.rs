//! Deformed ladder operators acting on one charge sector of the two-mode
//! Fock space.
//!
//! A sector of charge `q` is spanned by `|n+q, n⟩` for `q >= 0` and
//! `|n, n-q⟩` for `q <= 0`; the pair index `n = min(n1, n2)` labels the basis
//! vectors. Every operator here maps a basis vector to a multiple of a single
//! basis vector, so they are applied index-locally.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deform::{DeformTable, DeformationSpec};
use crate::error::{Error, Result};

/// Basis vector `(n1, n2)` of pair index `n` in sector `q`.
pub fn sector_basis(q: i64, n: usize) -> (usize, usize) {
    if q >= 0 {
        (n + q as usize, n)
    } else {
        (n, n + q.unsigned_abs() as usize)
    }
}

/// Inverse of [`sector_basis`]: `(charge, pair index)`.
pub fn sector_index(n1: usize, n2: usize) -> (i64, usize) {
    (n1 as i64 - n2 as i64, n1.min(n2))
}

/// Single operators with monomial action on the two-mode basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    A1,
    A2,
    A1Dag,
    A2Dag,
    /// `Ã_i = a_i / f(N_i)`
    TildeA1,
    TildeA2,
    TildeA1Dag,
    TildeA2Dag,
    N1,
    N2,
    /// `K₋ = A₁A₂`
    Km,
    /// `K₊ = Ã₁†Ã₂†`
    Kp,
    /// `K₀ = (N₁ + N₂ + 1)/2`
    K0,
    /// `K₋† = A₂†A₁†`
    KmDag,
    /// `K₊† = Ã₂Ã₁`
    KpDag,
    /// `Q = N₁ − N₂`
    Charge,
    /// `[A₁, A₁†] = (N₁+1)f²(N₁+1) − N₁f²(N₁)`
    Comm1,
    /// `[A₂, A₂†]`
    Comm2,
    /// `[K₋, K₋†]`
    CommK,
}

pub const ALL_OPS: [Op; 19] = [
    Op::A1,
    Op::A2,
    Op::A1Dag,
    Op::A2Dag,
    Op::TildeA1,
    Op::TildeA2,
    Op::TildeA1Dag,
    Op::TildeA2Dag,
    Op::N1,
    Op::N2,
    Op::Km,
    Op::Kp,
    Op::K0,
    Op::KmDag,
    Op::KpDag,
    Op::Charge,
    Op::Comm1,
    Op::Comm2,
    Op::CommK,
];

/// Source of `f(n)` values for operator actions.
pub trait Ladder {
    fn f(&self, n: usize) -> f64;
}

impl Ladder for DeformTable {
    fn f(&self, n: usize) -> f64 {
        DeformTable::f(self, n)
    }
}

/// `√n f(n)`, the lowering factor of `A`.
fn lower<L: Ladder + ?Sized>(l: &L, n: usize) -> f64 {
    (n as f64).sqrt() * l.f(n)
}

/// `√n / f(n)`, the lowering factor of `Ã`.
fn lower_tilde<L: Ladder + ?Sized>(l: &L, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (n as f64).sqrt() / l.f(n)
    }
}

/// `n f²(n)`
fn nf2<L: Ladder + ?Sized>(l: &L, n: usize) -> f64 {
    let f = l.f(n);
    n as f64 * f * f
}

impl Op {
    /// Change of charge `Q` caused by the operator.
    pub fn charge_shift(self) -> i64 {
        match self {
            Op::A1 | Op::TildeA1 | Op::A2Dag | Op::TildeA2Dag => -1,
            Op::A2 | Op::TildeA2 | Op::A1Dag | Op::TildeA1Dag => 1,
            _ => 0,
        }
    }

    /// Largest occupation increase in either mode.
    pub fn raises(self) -> usize {
        match self {
            Op::A1Dag | Op::A2Dag | Op::TildeA1Dag | Op::TildeA2Dag | Op::Kp | Op::KmDag => 1,
            _ => 0,
        }
    }

    pub fn adjoint(self) -> Op {
        match self {
            Op::A1 => Op::A1Dag,
            Op::A1Dag => Op::A1,
            Op::A2 => Op::A2Dag,
            Op::A2Dag => Op::A2,
            Op::TildeA1 => Op::TildeA1Dag,
            Op::TildeA1Dag => Op::TildeA1,
            Op::TildeA2 => Op::TildeA2Dag,
            Op::TildeA2Dag => Op::TildeA2,
            Op::Km => Op::KmDag,
            Op::KmDag => Op::Km,
            Op::Kp => Op::KpDag,
            Op::KpDag => Op::Kp,
            other => other,
        }
    }

    /// Image of `|n1, n2⟩`: `Some((n1', n2', c))` with `op|n1,n2⟩ = c|n1',n2'⟩`,
    /// or `None` when the image vanishes.
    pub fn act<L: Ladder + ?Sized>(self, l: &L, n1: usize, n2: usize) -> Option<(usize, usize, f64)> {
        let r = match self {
            Op::A1 if n1 > 0 => (n1 - 1, n2, lower(l, n1)),
            Op::A2 if n2 > 0 => (n1, n2 - 1, lower(l, n2)),
            Op::A1Dag => (n1 + 1, n2, lower(l, n1 + 1)),
            Op::A2Dag => (n1, n2 + 1, lower(l, n2 + 1)),
            Op::TildeA1 if n1 > 0 => (n1 - 1, n2, lower_tilde(l, n1)),
            Op::TildeA2 if n2 > 0 => (n1, n2 - 1, lower_tilde(l, n2)),
            Op::TildeA1Dag => (n1 + 1, n2, lower_tilde(l, n1 + 1)),
            Op::TildeA2Dag => (n1, n2 + 1, lower_tilde(l, n2 + 1)),
            Op::N1 => (n1, n2, n1 as f64),
            Op::N2 => (n1, n2, n2 as f64),
            Op::Km if n1 > 0 && n2 > 0 => (n1 - 1, n2 - 1, lower(l, n1) * lower(l, n2)),
            Op::Kp => (n1 + 1, n2 + 1, lower_tilde(l, n1 + 1) * lower_tilde(l, n2 + 1)),
            Op::K0 => (n1, n2, 0.5 * (n1 + n2 + 1) as f64),
            Op::KmDag => (n1 + 1, n2 + 1, lower(l, n1 + 1) * lower(l, n2 + 1)),
            Op::KpDag if n1 > 0 && n2 > 0 => (n1 - 1, n2 - 1, lower_tilde(l, n1) * lower_tilde(l, n2)),
            Op::Charge => (n1, n2, n1 as f64 - n2 as f64),
            Op::Comm1 => (n1, n2, nf2(l, n1 + 1) - nf2(l, n1)),
            Op::Comm2 => (n1, n2, nf2(l, n2 + 1) - nf2(l, n2)),
            Op::CommK => (n1, n2, nf2(l, n1 + 1) * nf2(l, n2 + 1) - nf2(l, n1) * nf2(l, n2)),
            _ => return None,
        };
        if r.2 == 0.0 {
            None
        } else {
            Some(r)
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::A1 => "A1",
            Op::A2 => "A2",
            Op::A1Dag => "A1dag",
            Op::A2Dag => "A2dag",
            Op::TildeA1 => "At1",
            Op::TildeA2 => "At2",
            Op::TildeA1Dag => "At1dag",
            Op::TildeA2Dag => "At2dag",
            Op::N1 => "N1",
            Op::N2 => "N2",
            Op::Km => "Km",
            Op::Kp => "Kp",
            Op::K0 => "K0",
            Op::KmDag => "Kmdag",
            Op::KpDag => "Kpdag",
            Op::Charge => "Q",
            Op::Comm1 => "C1",
            Op::Comm2 => "C2",
            Op::CommK => "CK",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Op> {
        ALL_OPS
            .iter()
            .copied()
            .find(|op| op.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownOperator(s.to_string()))
    }
}

/// Linear combination of operator products. Each chain is stored in written
/// order, so `[A, B]` means `A·B` and `B` acts first.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OpExpr {
    pub terms: Vec<(C64, Vec<Op>)>,
}

impl OpExpr {
    pub fn op(op: Op) -> Self {
        OpExpr { terms: vec![(C64::new(1.0, 0.0), vec![op])] }
    }

    pub fn chain(ops: &[Op]) -> Self {
        OpExpr { terms: vec![(C64::new(1.0, 0.0), ops.to_vec())] }
    }

    pub fn identity() -> Self {
        OpExpr { terms: vec![(C64::new(1.0, 0.0), vec![])] }
    }

    pub fn scale(mut self, c: C64) -> Self {
        for t in &mut self.terms {
            t.0 *= c;
        }
        self
    }

    pub fn add(mut self, other: OpExpr) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn sub(self, other: OpExpr) -> Self {
        self.add(other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &OpExpr) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ca, a) in &self.terms {
            for (cb, b) in &other.terms {
                let mut chain = a.clone();
                chain.extend_from_slice(b);
                terms.push((ca * cb, chain));
            }
        }
        OpExpr { terms }
    }

    pub fn adjoint(&self) -> Self {
        OpExpr {
            terms: self
                .terms
                .iter()
                .map(|(c, ch)| (c.conj(), ch.iter().rev().map(|o| o.adjoint()).collect()))
                .collect(),
        }
    }

    pub fn commutator(a: &OpExpr, b: &OpExpr) -> Self {
        a.mul(b).sub(b.mul(a))
    }
}

impl fmt::Display for OpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, ch)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for op in ch {
                write!(f, "·{op}")?;
            }
        }
        Ok(())
    }
}

/// Hermitian quadratures built from the deformed ladder operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    X1,
    X2,
    Y1,
    Y2,
    Z1,
    Z2,
    W1,
    W2,
}

impl Quadrature {
    /// `(P + P†)/2` or `i(P† − P)/2` for the relevant lowering `P`.
    pub fn expr(self) -> OpExpr {
        let half = C64::new(0.5, 0.0);
        let ihalf = C64::new(0.0, 0.5);
        let sum = |p: Op| OpExpr::op(p.adjoint()).add(OpExpr::op(p));
        let diff = |p: Op| OpExpr::op(p.adjoint()).sub(OpExpr::op(p));
        match self {
            Quadrature::X1 => sum(Op::Km).scale(half),
            Quadrature::X2 => diff(Op::Km).scale(ihalf),
            Quadrature::Y1 => sum(Op::A1).scale(half),
            Quadrature::Y2 => diff(Op::A1).scale(ihalf),
            Quadrature::Z1 => sum(Op::A2).scale(half),
            Quadrature::Z2 => diff(Op::A2).scale(ihalf),
            Quadrature::W1 => sum(Op::A1).add(sum(Op::A2)).scale(C64::new(8f64.sqrt().recip(), 0.0)),
            Quadrature::W2 => diff(Op::A1).add(diff(Op::A2)).scale(C64::new(0.0, 8f64.sqrt().recip())),
        }
    }
}

impl FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "X1" => Quadrature::X1,
            "X2" => Quadrature::X2,
            "Y1" => Quadrature::Y1,
            "Y2" => Quadrature::Y2,
            "Z1" => Quadrature::Z1,
            "Z2" => Quadrature::Z2,
            "W1" => Quadrature::W1,
            "W2" => Quadrature::W2,
            _ => return Err(Error::UnknownOperator(s.to_string())),
        })
    }
}

/// Parses a single operator, a quadrature name, or a product written as
/// `A1*A2`.
pub fn parse_operator(s: &str) -> Result<OpExpr> {
    if let Ok(q) = s.parse::<Quadrature>() {
        return Ok(q.expr());
    }
    let ops = s.split('*').map(|t| t.trim().parse::<Op>()).collect::<Result<Vec<_>>>()?;
    Ok(OpExpr::chain(&ops))
}

/// Truncated state of fixed charge, amplitudes indexed by pair index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeSectorState {
    pub charge: i64,
    pub amplitudes: Vec<C64>,
    /// Accumulated squared norm of amplitudes dropped beyond the truncation.
    pub leakage: f64,
}

impl ChargeSectorState {
    pub fn new(charge: i64, amplitudes: Vec<C64>) -> Self {
        assert!(!amplitudes.is_empty(), "a sector state needs at least one amplitude");
        ChargeSectorState { charge, amplitudes, leakage: 0.0 }
    }

    pub fn zero(charge: i64, nmax: usize) -> Self {
        Self::new(charge, vec![C64::new(0.0, 0.0); nmax + 1])
    }

    pub fn basis(charge: i64, n: usize, nmax: usize) -> Self {
        let mut s = Self::zero(charge, nmax);
        s.amplitudes[n] = C64::new(1.0, 0.0);
        s
    }

    pub fn nmax(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        for c in &mut self.amplitudes {
            *c /= n;
        }
        self
    }

    /// `⟨self|other⟩`, zero across sectors.
    pub fn inner(&self, other: &ChargeSectorState) -> C64 {
        if self.charge != other.charge {
            return C64::new(0.0, 0.0);
        }
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(mut self, c: C64) -> Self {
        for a in &mut self.amplitudes {
            *a *= c;
        }
        self
    }

    /// `self + c·other` over the common truncation.
    pub fn axpy(&mut self, c: C64, other: &ChargeSectorState) {
        debug_assert_eq!(self.charge, other.charge);
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += c * b;
        }
        self.leakage += c.norm_sqr() * other.leakage;
    }

    /// Whether amplitudes vanish at the top `k` indices.
    pub fn is_interior(&self, k: usize) -> bool {
        self.amplitudes.iter().rev().take(k).all(|c| *c == C64::new(0.0, 0.0))
    }
}

/// Result of an expectation value with its bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: C64,
    pub leakage: f64,
    /// Set when every term changes the charge, making the value exactly zero.
    pub sector_orthogonal: bool,
}

/// Operator engine for one deformation, with `f` tabulated up to a fixed
/// occupation.
#[derive(Clone, Debug)]
pub struct FockSpace {
    spec: DeformationSpec,
    table: DeformTable,
}

impl Ladder for FockSpace {
    fn f(&self, n: usize) -> f64 {
        self.table.f(n)
    }
}

impl FockSpace {
    /// Covers occupations up to `max_occupation`.
    pub fn new(spec: &DeformationSpec, max_occupation: usize) -> Result<Self> {
        Ok(FockSpace { spec: spec.clone(), table: spec.table(max_occupation, false)? })
    }

    /// Sized for states of charge up to `|q|` truncated at `nmax`, with room
    /// for a few raising steps.
    pub fn for_sector(spec: &DeformationSpec, q: i64, nmax: usize) -> Result<Self> {
        Self::new(spec, nmax + q.unsigned_abs() as usize + 8)
    }

    pub fn spec(&self) -> &DeformationSpec {
        &self.spec
    }

    pub fn max_occupation(&self) -> usize {
        self.table.max_n()
    }

    fn check_range(&self, q: i64, nmax: usize, raises: usize) -> Result<()> {
        let needed = nmax + q.unsigned_abs() as usize + raises;
        if needed > self.table.max_n() {
            return Err(Error::Precondition(format!(
                "operator engine covers occupations up to {}, {} required",
                self.table.max_n(),
                needed
            )));
        }
        Ok(())
    }

    /// Applies one operator; amplitudes pushed beyond the truncation are
    /// dropped and their weight added to `leakage`.
    pub fn apply(&self, op: Op, state: &ChargeSectorState) -> Result<ChargeSectorState> {
        let q = state.charge;
        let nmax = state.nmax();
        self.check_range(q, nmax, op.raises())?;
        let target = q + op.charge_shift();
        let mut out = ChargeSectorState::zero(target, nmax);
        out.leakage = state.leakage;
        for (n, &c) in state.amplitudes.iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let (n1, n2) = sector_basis(q, n);
            if let Some((m1, m2, k)) = op.act(self, n1, n2) {
                let (tq, m) = sector_index(m1, m2);
                debug_assert_eq!(tq, target);
                let v = c * k;
                if m <= nmax {
                    out.amplitudes[m] += v;
                } else {
                    out.leakage += v.norm_sqr();
                }
            }
        }
        Ok(out)
    }

    /// Applies a product in written order (rightmost first).
    pub fn apply_chain(&self, chain: &[Op], state: &ChargeSectorState) -> Result<ChargeSectorState> {
        let mut s = state.clone();
        for &op in chain.iter().rev() {
            s = self.apply(op, &s)?;
        }
        Ok(s)
    }

    /// Applies a linear combination; the images are grouped by charge.
    pub fn apply_expr(&self, expr: &OpExpr, state: &ChargeSectorState) -> Result<Vec<ChargeSectorState>> {
        let mut out: Vec<ChargeSectorState> = Vec::new();
        for (c, chain) in &expr.terms {
            let img = self.apply_chain(chain, state)?;
            match out.iter_mut().find(|s| s.charge == img.charge) {
                Some(s) => s.axpy(*c, &img),
                None => out.push(img.scaled(*c)),
            }
        }
        Ok(out)
    }

    /// `⟨ψ|expr|ψ⟩`. Terms that change the charge contribute exactly zero.
    pub fn expectation(&self, expr: &OpExpr, state: &ChargeSectorState) -> Result<Expectation> {
        let mut value = C64::new(0.0, 0.0);
        let mut leakage = 0.0;
        let mut all_orthogonal = true;
        for (c, chain) in &expr.terms {
            let shift: i64 = chain.iter().map(|o| o.charge_shift()).sum();
            if shift != 0 {
                continue;
            }
            all_orthogonal = false;
            let img = self.apply_chain(chain, state)?;
            leakage += c.norm() * (img.leakage - state.leakage).max(0.0).sqrt();
            value += c * state.inner(&img);
        }
        Ok(Expectation { value, leakage, sector_orthogonal: all_orthogonal })
    }

    pub fn expectation_op(&self, op: Op, state: &ChargeSectorState) -> Result<Expectation> {
        self.expectation(&OpExpr::op(op), state)
    }

    /// `‖([A, B] − R) ψ‖` with `R` the closed form of the commutator.
    pub fn commutator_check(&self, a: Op, b: Op, probe: &ChargeSectorState) -> Result<f64> {
        let rhs = closed_commutator(a, b).ok_or_else(|| Error::NoClosedForm(a.to_string(), b.to_string()))?;
        if !probe.is_interior(2) {
            return Err(Error::ProbeTooCloseToTruncation);
        }
        let lhs = OpExpr::commutator(&OpExpr::op(a), &OpExpr::op(b));
        let diff = lhs.sub(rhs);
        let images = self.apply_expr(&diff, probe)?;
        Ok(images.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt())
    }
}

/// Closed forms of the commutators of the deformed oscillator and of the
/// deformed SU(1,1) generators.
pub fn closed_commutator(a: Op, b: Op) -> Option<OpExpr> {
    if a == b {
        return Some(OpExpr::default());
    }
    if let Some(r) = known_commutator(a, b) {
        return Some(r);
    }
    known_commutator(b, a).map(|r| r.scale(C64::new(-1.0, 0.0)))
}

fn mode(op: Op) -> Option<u8> {
    match op {
        Op::A1 | Op::A1Dag | Op::TildeA1 | Op::TildeA1Dag | Op::N1 | Op::Comm1 => Some(1),
        Op::A2 | Op::A2Dag | Op::TildeA2 | Op::TildeA2Dag | Op::N2 | Op::Comm2 => Some(2),
        _ => None,
    }
}

fn known_commutator(a: Op, b: Op) -> Option<OpExpr> {
    let one = C64::new(1.0, 0.0);
    let e = |op: Op, c: f64| Some(OpExpr::op(op).scale(C64::new(c, 0.0)));
    // Operators on different modes commute.
    if let (Some(ma), Some(mb)) = (mode(a), mode(b)) {
        if ma != mb {
            return Some(OpExpr::default());
        }
    }
    match (a, b) {
        (Op::N1, x) | (Op::N2, x) if mode(x) == mode(a) => match x {
            Op::A1 | Op::A2 | Op::TildeA1 | Op::TildeA2 => e(x, -1.0),
            Op::A1Dag | Op::A2Dag | Op::TildeA1Dag | Op::TildeA2Dag => e(x, 1.0),
            _ => None,
        },
        (Op::Charge, x) => e(x, x.charge_shift() as f64),
        (Op::A1, Op::A1Dag) => e(Op::Comm1, 1.0),
        (Op::A2, Op::A2Dag) => e(Op::Comm2, 1.0),
        (Op::TildeA1, Op::A1Dag) | (Op::A1, Op::TildeA1Dag) | (Op::TildeA2, Op::A2Dag) | (Op::A2, Op::TildeA2Dag) => {
            Some(OpExpr::identity().scale(one))
        }
        (Op::K0, Op::Kp) => e(Op::Kp, 1.0),
        (Op::K0, Op::Km) => e(Op::Km, -1.0),
        (Op::Kp, Op::Km) => e(Op::K0, -2.0),
        (Op::KmDag, Op::KpDag) => e(Op::K0, -2.0),
        (Op::K0, Op::KmDag) => e(Op::KmDag, 1.0),
        (Op::K0, Op::KpDag) => e(Op::KpDag, -1.0),
        (Op::Km, Op::KmDag) => e(Op::CommK, 1.0),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn specs() -> Vec<DeformationSpec> {
        vec![
            DeformationSpec::Identity,
            DeformationSpec::power_law(2.0).unwrap(),
            DeformationSpec::power_law(3.0).unwrap(),
            DeformationSpec::q_deformed(2.0).unwrap(),
            DeformationSpec::q_deformed(0.7).unwrap(),
        ]
    }

    fn random_interior(q: i64, nmax: usize, seed: u64) -> ChargeSectorState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<C64> = (0..=nmax).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        amps[nmax] = c(0.0);
        amps[nmax - 1] = c(0.0);
        ChargeSectorState::new(q, amps).normalized()
    }

    #[test]
    fn basis_round_trip() {
        for q in -5..=5 {
            for n in 0..10 {
                let (n1, n2) = sector_basis(q, n);
                assert_eq!(sector_index(n1, n2), (q, n));
            }
        }
    }

    #[test]
    fn number_operator_on_basis() {
        let fs = FockSpace::for_sector(&DeformationSpec::Identity, 2, 10).unwrap();
        let s = ChargeSectorState::basis(2, 3, 10);
        let out = fs.apply(Op::N1, &s).unwrap();
        assert_eq!(out.amplitudes[3], c(5.0));
        assert_eq!(out.charge, 2);
    }

    #[test]
    fn pair_lowering_on_basis() {
        let fs = FockSpace::for_sector(&DeformationSpec::Identity, 0, 10).unwrap();
        let s = ChargeSectorState::basis(0, 1, 10);
        let out = fs.apply_chain(&[Op::A1, Op::A2], &s).unwrap();
        assert_eq!(out.charge, 0);
        assert!((out.amplitudes[0] - c(1.0)).norm() < 1e-15);
        assert!(out.amplitudes[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn single_operators_move_charge() {
        let fs = FockSpace::for_sector(&DeformationSpec::Identity, 0, 10).unwrap();
        let s = ChargeSectorState::basis(0, 2, 10);
        assert_eq!(fs.apply(Op::A1, &s).unwrap().charge, -1);
        assert_eq!(fs.apply(Op::A2, &s).unwrap().charge, 1);
        for op in [Op::Km, Op::Kp, Op::K0, Op::KmDag, Op::KpDag] {
            assert_eq!(fs.apply(op, &s).unwrap().charge, 0);
        }
    }

    #[test]
    fn leakage_tracks_dropped_weight() {
        let fs = FockSpace::for_sector(&DeformationSpec::Identity, 0, 4).unwrap();
        let s = ChargeSectorState::basis(0, 4, 4);
        let out = fs.apply(Op::KmDag, &s).unwrap();
        assert_eq!(out.norm_sqr(), 0.0);
        assert!((out.leakage - 25.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_structure() {
        for spec in specs() {
            let fs = FockSpace::for_sector(&spec, 1, 20).unwrap();
            for n in 0..18 {
                let s = ChargeSectorState::basis(1, n, 20);
                let out = fs.apply_chain(&[Op::A1Dag, Op::A1], &s).unwrap();
                let (n1, _) = sector_basis(1, n);
                let f = spec.eval_f(n1).unwrap();
                let expect = n1 as f64 * f * f;
                assert!((out.amplitudes[n].re - expect).abs() <= 1e-12 * expect.max(1.0));
            }
        }
    }

    #[test]
    fn tilde_operators_use_inverse_f() {
        let spec = DeformationSpec::power_law(3.0).unwrap();
        let fs = FockSpace::for_sector(&spec, 0, 12).unwrap();
        for n in 0..10 {
            let s = ChargeSectorState::basis(0, n, 12);
            let out = fs.apply(Op::TildeA1Dag, &s).unwrap();
            let (n1, n2) = sector_basis(0, n);
            let (m1, m2) = (n1 + 1, n2);
            let (_, m) = sector_index(m1, m2);
            let expect = ((n1 + 1) as f64).sqrt() / spec.eval_f(n1 + 1).unwrap();
            assert!((out.amplitudes[m].re - expect).abs() < 1e-13 * expect);
        }
    }

    #[test]
    fn charge_expectation_is_q() {
        let fs = FockSpace::for_sector(&DeformationSpec::Identity, -3, 20).unwrap();
        let s = random_interior(-3, 20, 7);
        let n1 = fs.expectation_op(Op::N1, &s).unwrap().value.re;
        let n2 = fs.expectation_op(Op::N2, &s).unwrap().value.re;
        assert!((n1 - n2 + 3.0).abs() < 1e-12);
        let q = fs.expectation_op(Op::Charge, &s).unwrap().value;
        assert!((q - c(-3.0)).norm() < 1e-12);
    }

    #[test]
    fn charge_changing_expectation_is_flagged() {
        let fs = FockSpace::for_sector(&DeformationSpec::Identity, 0, 10).unwrap();
        let s = random_interior(0, 10, 1);
        let e = fs.expectation_op(Op::A1, &s).unwrap();
        assert_eq!(e.value, c(0.0));
        assert!(e.sector_orthogonal);
        assert!(!fs.expectation_op(Op::Km, &s).unwrap().sector_orthogonal);
    }

    #[test]
    fn commutator_identities_hold() {
        let pairs = [
            (Op::N1, Op::A1),
            (Op::N1, Op::A1Dag),
            (Op::N2, Op::TildeA2),
            (Op::A1, Op::A1Dag),
            (Op::A2, Op::A2Dag),
            (Op::TildeA1, Op::A1Dag),
            (Op::A2, Op::TildeA2Dag),
            (Op::K0, Op::Kp),
            (Op::K0, Op::Km),
            (Op::Kp, Op::Km),
            (Op::KmDag, Op::KpDag),
            (Op::K0, Op::KmDag),
            (Op::K0, Op::KpDag),
            (Op::Km, Op::KmDag),
            (Op::A1, Op::A2Dag),
            (Op::Charge, Op::A2),
            (Op::Km, Op::Kp),
        ];
        for spec in specs() {
            for q in [-2, 0, 1, 3] {
                let fs = FockSpace::for_sector(&spec, q, 30).unwrap();
                let probe = random_interior(q, 30, (q + 11) as u64);
                for (a, b) in pairs {
                    let r = fs.commutator_check(a, b, &probe).unwrap();
                    assert!(r < 1e-12 * probe_scale(&fs, &probe), "{spec} q={q} [{a},{b}] residual {r}");
                }
            }
        }
    }

    /// Residuals are absolute; the generators grow like n² f⁴, so compare
    /// against the size of the commutator image itself.
    fn probe_scale(fs: &FockSpace, probe: &ChargeSectorState) -> f64 {
        let img = fs.apply_chain(&[Op::KmDag, Op::Km], probe).unwrap();
        1f64.max(img.norm())
    }

    #[test]
    fn commutator_check_rejects_edge_probe() {
        let fs = FockSpace::for_sector(&DeformationSpec::Identity, 0, 10).unwrap();
        let s = ChargeSectorState::basis(0, 10, 10);
        assert_eq!(fs.commutator_check(Op::N1, Op::A1, &s), Err(Error::ProbeTooCloseToTruncation));
        let s = ChargeSectorState::basis(0, 3, 10);
        assert!(matches!(fs.commutator_check(Op::A1, Op::Kp, &s), Err(Error::NoClosedForm(_, _))));
    }

    #[test]
    fn parse_operators() {
        assert_eq!("Kmdag".parse::<Op>().unwrap(), Op::KmDag);
        assert!("B7".parse::<Op>().is_err());
        let e = parse_operator("A1*A2").unwrap();
        assert_eq!(e, OpExpr::chain(&[Op::A1, Op::A2]));
        assert_eq!(parse_operator("X1").unwrap(), Quadrature::X1.expr());
    }

    #[test]
    fn adjoints_are_involutive() {
        for op in ALL_OPS {
            assert_eq!(op.adjoint().adjoint(), op);
            assert_eq!(op.adjoint().charge_shift(), -op.charge_shift());
        }
    }

    #[test]
    fn adjoint_matches_matrix_transpose() {
        let spec = DeformationSpec::q_deformed(1.7).unwrap();
        let fs = FockSpace::new(&spec, 40).unwrap();
        for op in ALL_OPS {
            for n1 in 0..8 {
                for n2 in 0..8 {
                    if let Some((m1, m2, k)) = op.act(&fs, n1, n2) {
                        let back = op.adjoint().act(&fs, m1, m2).expect("adjoint image");
                        assert_eq!((back.0, back.1), (n1, n2));
                        assert!((back.2 - k).abs() < 1e-13 * k.abs().max(1.0), "{op}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn generators_conserve_charge(q in -6i64..6, n in 0usize..10) {
            let fs = FockSpace::for_sector(&DeformationSpec::power_law(2.0).unwrap(), q, 12).unwrap();
            let s = ChargeSectorState::basis(q, n, 12);
            for op in [Op::Km, Op::Kp, Op::K0, Op::KmDag, Op::KpDag] {
                prop_assert_eq!(fs.apply(op, &s).unwrap().charge, q);
            }
        }

        #[test]
        fn nk_commutator_random(q in -3i64..4, seed in 0u64..1000) {
            let fs = FockSpace::for_sector(&DeformationSpec::q_deformed(1.3).unwrap(), q, 16).unwrap();
            let probe = random_interior(q, 16, seed);
            prop_assert!(fs.commutator_check(Op::N1, Op::A1, &probe).unwrap() < 1e-12);
            prop_assert!(fs.commutator_check(Op::N2, Op::A2Dag, &probe).unwrap() < 1e-12);
        }
    }
}
