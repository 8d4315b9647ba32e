//! Differential-operator realization of the ladder operators on the
//! unnormalized even/odd ket pair `‖q⟩ = (‖q⟩_e, ‖q⟩_o)`.
//!
//! A sector state is written as `Σ_n s_n(ξ) |n⟩_q` where `s_n` is a formal
//! series in `ξ`; for the kets themselves `s_n = c_n ξⁿ`. Fock-side operators
//! move and rescale the `s_n` between basis vectors, differential operators
//! act on each `s_n` in place; the two sides are compared coefficientwise.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deform::{q_bracket, DeformationSpec};
use crate::error::{Error, Result};
use crate::fock::{sector_basis, sector_index, FockSpace, Op};
use crate::states::{unnormalized_amplitudes, Parity};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `Σ_k coeffs[k] ξ^(lo+k)` with integer exponents.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Series {
    pub lo: i64,
    pub coeffs: Vec<C64>,
}

impl Series {
    pub fn zero() -> Self {
        Series::default()
    }

    pub fn monomial(k: i64, c: C64) -> Self {
        Series { lo: k, coeffs: vec![c] }
    }

    pub fn from_coeffs(coeffs: Vec<C64>) -> Self {
        Series { lo: 0, coeffs }
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let i = k - self.lo;
        if i < 0 || i as usize >= self.coeffs.len() {
            ZERO
        } else {
            self.coeffs[i as usize]
        }
    }

    /// Exponents with nonzero coefficients, `(min, max)`.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.coeffs.iter().position(|c| *c != ZERO)?;
        let last = self.coeffs.iter().rposition(|c| *c != ZERO)?;
        Some((self.lo + first as i64, self.lo + last as i64))
    }

    pub fn is_zero(&self) -> bool {
        self.support().is_none()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn span_with(&self, other: &Series) -> (i64, i64) {
        let lo = self.lo.min(other.lo);
        let hi = (self.lo + self.coeffs.len() as i64).max(other.lo + other.coeffs.len() as i64);
        (lo, hi)
    }

    pub fn axpy(&self, c: C64, other: &Series) -> Series {
        if other.coeffs.is_empty() {
            return self.clone();
        }
        if self.coeffs.is_empty() {
            return other.scale(c);
        }
        let (lo, hi) = self.span_with(other);
        Series { lo, coeffs: (lo..hi).map(|k| self.coeff(k) + c * other.coeff(k)).collect() }
    }

    pub fn add(&self, other: &Series) -> Series {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Series) -> Series {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn scale(&self, c: C64) -> Series {
        Series { lo: self.lo, coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn eval(&self, xi: C64) -> C64 {
        self.coeffs.iter().enumerate().map(|(i, c)| c * xi.powi((self.lo + i as i64) as i32)).sum()
    }

    /// Applies `g(k)` to the coefficient of `ξ^k` and shifts exponents by `shift`.
    fn map(&self, shift: i64, mut g: impl FnMut(i64) -> Result<C64>) -> Result<Series> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if *c == ZERO { Ok(ZERO) } else { Ok(c * g(self.lo + i as i64)?) })
            .collect::<Result<Vec<_>>>()?;
        Ok(Series { lo: self.lo + shift, coeffs })
    }
}

/// Elementary differential operators on formal series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffOp {
    /// `f(d/dξ·ξ)^power`: `ξⁿ ↦ f(n+1)^power ξⁿ`.
    FOfDdxiXi { power: i32 },
    /// `f(ξ·d/dξ)^power`: `ξⁿ ↦ f(n)^power ξⁿ`.
    FOfXiDdxi { power: i32 },
    /// `d/dξ`
    Ddxi,
    /// multiplication by `ξ`
    MultXi,
    /// multiplication by `ξ^k`; negative `k` must not create negative exponents.
    PowXi(i64),
    /// `ξ d/dξ + c`
    XiDdxiPlus(f64),
    /// the q-derivative `ξⁿ ↦ [n] ξⁿ⁻¹`
    QDiff(f64),
    /// `[d/dξ·ξ]`: `ξⁿ ↦ [n+1] ξⁿ`
    BracketDdxiXi(f64),
    /// `[ξ·d/dξ]`: `ξⁿ ↦ [n] ξⁿ`
    BracketXiDdxi(f64),
}

fn f_pow(spec: &DeformationSpec, n: i64, power: i32) -> Result<f64> {
    if n < 0 {
        return Err(Error::Precondition(format!("f evaluated at negative index {n}")));
    }
    Ok((power as f64 * spec.ln_f(n as usize)?).exp())
}

/// Applies one differential operator to a series.
pub fn diff_op_apply(op: DiffOp, s: &Series, spec: &DeformationSpec) -> Result<Series> {
    let one = C64::new(1.0, 0.0);
    match op {
        DiffOp::FOfDdxiXi { power } => s.map(0, |n| Ok(one * f_pow(spec, n + 1, power)?)),
        DiffOp::FOfXiDdxi { power } => s.map(0, |n| Ok(one * f_pow(spec, n, power)?)),
        DiffOp::Ddxi => s.map(-1, |n| Ok(one * n as f64)),
        DiffOp::MultXi => s.map(1, |_| Ok(one)),
        DiffOp::PowXi(k) => {
            if let Some((lo, _)) = s.support() {
                if lo + k < 0 {
                    return Err(Error::NotDivisible(-k));
                }
            }
            s.map(k, |_| Ok(one))
        }
        DiffOp::XiDdxiPlus(c) => s.map(0, |n| Ok(one * (n as f64 + c))),
        DiffOp::QDiff(q) => s.map(-1, |n| Ok(one * q_bracket(n as f64, q)?)),
        DiffOp::BracketDdxiXi(q) => s.map(0, |n| Ok(one * q_bracket((n + 1) as f64, q)?)),
        DiffOp::BracketXiDdxi(q) => s.map(0, |n| Ok(one * q_bracket(n as f64, q)?)),
    }
}

/// The q-difference quotient `(g(qξ) − g(ξ/q)) / ((q − 1/q)ξ)` evaluated at a point.
pub fn q_difference_at(s: &Series, q: f64, xi: C64) -> C64 {
    (s.eval(xi * q) - s.eval(xi / q)) / (xi * (q - 1.0 / q))
}

/// A product of differential operators, listed in the order they act, optionally
/// combined with the even/odd swap `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffExpr {
    pub ops: Vec<DiffOp>,
    pub swap: bool,
}

impl DiffExpr {
    pub fn new(ops: Vec<DiffOp>, swap: bool) -> Self {
        DiffExpr { ops, swap }
    }

    pub fn apply_series(&self, s: &Series, spec: &DeformationSpec) -> Result<Series> {
        let mut out = s.clone();
        for &op in &self.ops {
            out = diff_op_apply(op, &out, spec)?;
        }
        Ok(out)
    }

    pub fn apply_ket(&self, k: &KetSeries, spec: &DeformationSpec) -> Result<KetSeries> {
        Ok(KetSeries {
            charge: k.charge,
            comps: k.comps.iter().map(|s| self.apply_series(s, spec)).collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn apply_pair(&self, p: &FormalSeriesPair, spec: &DeformationSpec) -> Result<FormalSeriesPair> {
        let (e, o) = if self.swap { (&p.odd, &p.even) } else { (&p.even, &p.odd) };
        Ok(FormalSeriesPair { charge: p.charge, even: self.apply_ket(e, spec)?, odd: self.apply_ket(o, spec)?, degree: p.degree })
    }
}

/// Sector state with a formal series in `ξ` attached to every basis vector.
#[derive(Clone, Debug, PartialEq)]
pub struct KetSeries {
    pub charge: i64,
    pub comps: Vec<Series>,
}

impl KetSeries {
    pub fn zero(charge: i64, len: usize) -> Self {
        KetSeries { charge, comps: vec![Series::zero(); len] }
    }

    /// Fock-side action of `op`; images beyond the last basis index are dropped.
    pub fn apply_op(&self, fs: &FockSpace, op: Op) -> KetSeries {
        let target = self.charge + op.charge_shift();
        let mut out = KetSeries::zero(target, self.comps.len());
        for (n, s) in self.comps.iter().enumerate() {
            if s.is_zero() {
                continue;
            }
            let (n1, n2) = sector_basis(self.charge, n);
            if let Some((m1, m2, k)) = op.act(fs, n1, n2) {
                let (_, m) = sector_index(m1, m2);
                if m < out.comps.len() {
                    out.comps[m] = out.comps[m].axpy(C64::new(k, 0.0), s);
                }
            }
        }
        out
    }

    /// Bra-side action `⟨ψ| op`: the result's component `m` collects
    /// `Σ_n ψ_n ⟨n|op|m⟩` over the basis of sector `charge − shift(op)`.
    pub fn apply_op_bra(&self, fs: &FockSpace, op: Op) -> KetSeries {
        let source = self.charge - op.charge_shift();
        let mut out = KetSeries::zero(source, self.comps.len());
        for m in 0..out.comps.len() {
            let (m1, m2) = sector_basis(source, m);
            if let Some((n1, n2, k)) = op.act(fs, m1, m2) {
                let (_, n) = sector_index(n1, n2);
                if n < self.comps.len() {
                    out.comps[m] = out.comps[m].axpy(C64::new(k, 0.0), &self.comps[n]);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &KetSeries) -> KetSeries {
        KetSeries { charge: self.charge, comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect() }
    }

    /// Amplitudes at a numerical value of `ξ`.
    pub fn evaluate(&self, xi: C64) -> Vec<C64> {
        self.comps.iter().map(|s| s.eval(xi)).collect()
    }
}

/// The pair `(‖q⟩_e, ‖q⟩_o)` truncated at pair index `degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalSeriesPair {
    pub charge: i64,
    pub even: KetSeries,
    pub odd: KetSeries,
    pub degree: usize,
}

impl FormalSeriesPair {
    /// Unnormalized kets `Σ c_n ξⁿ |n⟩_q` split by parity of `n`.
    pub fn kets(charge: i64, deform: &DeformationSpec, degree: usize) -> Result<Self> {
        let one = C64::new(1.0, 0.0);
        let part = |p: Parity| -> Result<KetSeries> {
            let c = unnormalized_amplitudes(one, charge, p, deform, false, degree)?;
            Ok(KetSeries {
                charge,
                comps: c
                    .iter()
                    .enumerate()
                    .map(|(n, &v)| if v == ZERO { Series::zero() } else { Series::monomial(n as i64, v) })
                    .collect(),
            })
        };
        Ok(FormalSeriesPair { charge, even: part(Parity::Even)?, odd: part(Parity::Odd)?, degree })
    }

    pub fn swapped(&self) -> Self {
        FormalSeriesPair { charge: self.charge, even: self.odd.clone(), odd: self.even.clone(), degree: self.degree }
    }

    pub fn apply_op(&self, fs: &FockSpace, op: Op) -> Self {
        FormalSeriesPair {
            charge: self.charge + op.charge_shift(),
            even: self.even.apply_op(fs, op),
            odd: self.odd.apply_op(fs, op),
            degree: self.degree,
        }
    }

    pub fn apply_op_bra(&self, fs: &FockSpace, op: Op) -> Self {
        FormalSeriesPair {
            charge: self.charge - op.charge_shift(),
            even: self.even.apply_op_bra(fs, op),
            odd: self.odd.apply_op_bra(fs, op),
            degree: self.degree,
        }
    }

    pub fn sub(&self, other: &FormalSeriesPair) -> Self {
        let d = |a: &KetSeries, b: &KetSeries| KetSeries {
            charge: a.charge,
            comps: a.comps.iter().zip(&b.comps).map(|(x, y)| x.sub(y)).collect(),
        };
        FormalSeriesPair { charge: self.charge, even: d(&self.even, &other.even), odd: d(&self.odd, &other.odd), degree: self.degree }
    }

    /// Random coefficients of degree `deg` on every basis component.
    pub fn random(charge: i64, len: usize, deg: usize, rng: &mut impl rand::Rng) -> Self {
        let mut part = || KetSeries {
            charge,
            comps: (0..len)
                .map(|_| Series::from_coeffs((0..=deg).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()))
                .collect(),
        };
        let even = part();
        let odd = part();
        FormalSeriesPair { charge, even, odd, degree: len.saturating_sub(1) }
    }
}

/// Largest per-coefficient relative difference between two pairs, over basis
/// indices `0..=upto`.
pub fn pair_residual(a: &FormalSeriesPair, b: &FormalSeriesPair, upto: usize) -> f64 {
    let mut worst = 0.0f64;
    for (ka, kb) in [(&a.even, &b.even), (&a.odd, &b.odd)] {
        for n in 0..=upto.min(ka.comps.len() - 1) {
            let (sa, sb) = (&ka.comps[n], &kb.comps[n]);
            let (lo, hi) = sa.span_with(sb);
            for k in lo..hi {
                let (x, y) = (sa.coeff(k), sb.coeff(k));
                let scale = x.norm().max(y.norm());
                if scale > 0.0 {
                    worst = worst.max((x - y).norm() / scale);
                }
            }
        }
    }
    worst
}

/// Scaled max-norm `max|a−b| / max(|a|,|b|)` over all coefficients of two pairs.
pub fn pair_residual_scaled(a: &FormalSeriesPair, b: &FormalSeriesPair) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (ka, kb) in [(&a.even, &b.even), (&a.odd, &b.odd)] {
        for (sa, sb) in ka.comps.iter().zip(&kb.comps) {
            diff = diff.max(sa.sub(sb).max_abs());
            scale = scale.max(sa.max_abs()).max(sb.max_abs());
        }
    }
    if scale == 0.0 { 0.0 } else { diff / scale }
}

/// Which sign of the charge a table column is written for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Positive,
    Negative,
}

/// The ten single operators with a differential form.
pub const TABLE_ROWS: [Op; 10] = [
    Op::A1,
    Op::A2,
    Op::A1Dag,
    Op::A2Dag,
    Op::N1,
    Op::N2,
    Op::TildeA1,
    Op::TildeA2,
    Op::TildeA1Dag,
    Op::TildeA2Dag,
];

impl Column {
    /// A column applies when both the source and the target charge have its sign.
    pub fn applies(self, q: i64, target: i64) -> bool {
        match self {
            Column::Positive => q >= 0 && target >= 0,
            Column::Negative => q <= 0 && target <= 0,
        }
    }
}

/// Differential form of `op ‖q⟩` acting on `‖q + shift(op)⟩`.
pub fn action_row(op: Op, col: Column, q: i64) -> Option<DiffExpr> {
    use DiffOp::*;
    let f2 = FOfDdxiXi { power: 2 };
    let fm2 = FOfDdxiXi { power: -2 };
    let qf = q as f64;
    let (ops, swap) = match (col, op) {
        (Column::Positive, Op::A1) => (vec![], false),
        (Column::Positive, Op::A2) => (vec![MultXi], true),
        (Column::Positive, Op::A1Dag) => (vec![PowXi(q + 1), Ddxi, f2, PowXi(-q)], false),
        (Column::Positive, Op::A2Dag) => (vec![Ddxi, f2], true),
        (Column::Positive, Op::N1) => (vec![XiDdxiPlus(qf)], false),
        (Column::Positive, Op::N2) => (vec![XiDdxiPlus(0.0)], false),
        (Column::Positive, Op::TildeA1) => (vec![PowXi(q - 1), fm2, PowXi(1 - q)], false),
        (Column::Positive, Op::TildeA2) => (vec![fm2, MultXi], true),
        (Column::Positive, Op::TildeA1Dag) => (vec![XiDdxiPlus(qf + 1.0)], false),
        (Column::Positive, Op::TildeA2Dag) => (vec![Ddxi], true),
        (Column::Negative, Op::A1) => (vec![MultXi], true),
        (Column::Negative, Op::A2) => (vec![], false),
        (Column::Negative, Op::A1Dag) => (vec![Ddxi, f2], true),
        (Column::Negative, Op::A2Dag) => (vec![PowXi(1 - q), Ddxi, f2, PowXi(q)], false),
        (Column::Negative, Op::N1) => (vec![XiDdxiPlus(0.0)], false),
        (Column::Negative, Op::N2) => (vec![XiDdxiPlus(-qf)], false),
        (Column::Negative, Op::TildeA1) => (vec![fm2, MultXi], true),
        (Column::Negative, Op::TildeA2) => (vec![PowXi(-q - 1), fm2, PowXi(q + 1)], false),
        (Column::Negative, Op::TildeA1Dag) => (vec![Ddxi], true),
        (Column::Negative, Op::TildeA2Dag) => (vec![XiDdxiPlus(1.0 - qf)], false),
        _ => return None,
    };
    Some(DiffExpr::new(ops, swap))
}

/// Differential form of a generator on the ket pair of charge `q`.
pub fn generator_ket_form(op: Op, q: i64) -> Option<DiffExpr> {
    use DiffOp::*;
    let a = q.unsigned_abs() as i64;
    let af = a as f64;
    let f2 = FOfDdxiXi { power: 2 };
    let fm2 = FOfDdxiXi { power: -2 };
    Some(match op {
        Op::Km => DiffExpr::new(vec![MultXi], true),
        Op::Kp => DiffExpr::new(vec![XiDdxiPlus(af), Ddxi], true),
        Op::K0 => DiffExpr::new(vec![XiDdxiPlus((af + 1.0) / 2.0)], false),
        Op::KmDag => DiffExpr::new(vec![Ddxi, f2, PowXi(a + 1), Ddxi, f2, PowXi(-a)], true),
        Op::KpDag => DiffExpr::new(vec![fm2, PowXi(a), fm2, PowXi(1 - a)], true),
        _ => return None,
    })
}

/// Bra-side form: the ket form of the adjoint (coefficients are real, so
/// complex conjugation only renames `ξ` to `ξ*`).
pub fn generator_bra_form(op: Op, q: i64) -> Option<DiffExpr> {
    generator_ket_form(op.adjoint(), q)
}

pub const GENERATORS: [Op; 5] = [Op::Km, Op::Kp, Op::K0, Op::KmDag, Op::KpDag];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowCheck {
    pub operator: String,
    pub column: Column,
    pub charge: i64,
    pub deform: String,
    pub applicable: bool,
    pub residual: Option<f64>,
}

fn interior(degree: usize) -> usize {
    degree.saturating_sub(2)
}

fn engine(deform: &DeformationSpec, q: i64, degree: usize) -> Result<FockSpace> {
    FockSpace::for_sector(deform, q, degree + 2)
}

/// Compares `op ‖q⟩` computed in Fock space with the differential form acting
/// on `‖q ± 1⟩` (or `‖q⟩`).
pub fn verify_action_table(op: Op, col: Column, q: i64, deform: &DeformationSpec, degree: usize) -> Result<RowCheck> {
    if degree < q.unsigned_abs() as usize + 6 {
        return Err(Error::Precondition(format!("degree {degree} below |q| + 6")));
    }
    let expr = action_row(op, col, q).ok_or_else(|| Error::UnknownOperator(op.to_string()))?;
    let target = q + op.charge_shift();
    let mut check = RowCheck {
        operator: op.to_string(),
        column: col,
        charge: q,
        deform: deform.descriptor(),
        applicable: col.applies(q, target),
        residual: None,
    };
    if !check.applicable {
        return Ok(check);
    }
    let fs = engine(deform, q, degree)?;
    let fock = FormalSeriesPair::kets(q, deform, degree)?.apply_op(&fs, op);
    let diff = expr.apply_pair(&FormalSeriesPair::kets(target, deform, degree)?, deform)?;
    check.residual = Some(pair_residual(&fock, &diff, interior(degree)));
    Ok(check)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCheck {
    pub generator: String,
    /// `ket` or `bra`
    pub side: String,
    pub charge: i64,
    pub deform: String,
    pub residual: f64,
}

/// Checks the ket and bra forms of the five generators at charge `q`.
pub fn d_algebra_generators(q: i64, deform: &DeformationSpec, degree: usize) -> Result<Vec<GeneratorCheck>> {
    let fs = engine(deform, q, degree)?;
    let kets = FormalSeriesPair::kets(q, deform, degree)?;
    let mut out = Vec::new();
    for g in GENERATORS {
        let ket_form = generator_ket_form(g, q).expect("generator");
        let r = pair_residual(&kets.apply_op(&fs, g), &ket_form.apply_pair(&kets, deform)?, interior(degree));
        out.push(GeneratorCheck { generator: g.to_string(), side: "ket".into(), charge: q, deform: deform.descriptor(), residual: r });
        // The bra pair has the same real coefficients, as series in ξ*.
        let bra_form = generator_bra_form(g, q).expect("generator");
        let r = pair_residual(&kets.apply_op_bra(&fs, g), &bra_form.apply_pair(&kets, deform)?, interior(degree));
        out.push(GeneratorCheck { generator: g.to_string(), side: "bra".into(), charge: q, deform: deform.descriptor(), residual: r });
    }
    Ok(out)
}

/// `[D(a), D(b)] p − Σ c·D(r) p` for generator forms acting on a series pair.
pub fn generator_commutator_residual(
    a: Op,
    b: Op,
    rhs: &[(f64, Op)],
    q: i64,
    deform: &DeformationSpec,
    probe: &FormalSeriesPair,
) -> Result<f64> {
    let da = generator_ket_form(a, q).ok_or_else(|| Error::UnknownOperator(a.to_string()))?;
    let db = generator_ket_form(b, q).ok_or_else(|| Error::UnknownOperator(b.to_string()))?;
    let ab = da.apply_pair(&db.apply_pair(probe, deform)?, deform)?;
    let ba = db.apply_pair(&da.apply_pair(probe, deform)?, deform)?;
    let lhs = ab.sub(&ba);
    let mut r = lhs.clone();
    for &(c, op) in rhs {
        let d = generator_ket_form(op, q).ok_or_else(|| Error::UnknownOperator(op.to_string()))?;
        let img = d.apply_pair(probe, deform)?;
        let scaled = FormalSeriesPair {
            charge: img.charge,
            even: KetSeries { charge: img.even.charge, comps: img.even.comps.iter().map(|s| s.scale(C64::new(c, 0.0))).collect() },
            odd: KetSeries { charge: img.odd.charge, comps: img.odd.comps.iter().map(|s| s.scale(C64::new(c, 0.0))).collect() },
            degree: img.degree,
        };
        r = r.sub(&scaled);
    }
    // Scale by the size of the commutator image itself.
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (kr, kl) in [(&r.even, &lhs.even), (&r.odd, &lhs.odd)] {
        for (sr, sl) in kr.comps.iter().zip(&kl.comps) {
            num = num.max(sr.max_abs());
            den = den.max(sl.max_abs());
        }
    }
    Ok(if den == 0.0 { num } else { num / den })
}

/// The map from operators to differential forms reverses products, so the
/// generator relations hold with the opposite sign on the series side:
/// `[D(a), D(b)] = −D([a, b])`.
pub const SERIES_COMMUTATORS: [(Op, Op, &[(f64, Op)]); 4] = [
    (Op::K0, Op::Kp, &[(-1.0, Op::Kp)]),
    (Op::K0, Op::Km, &[(1.0, Op::Km)]),
    (Op::Kp, Op::Km, &[(2.0, Op::K0)]),
    (Op::KmDag, Op::KpDag, &[(2.0, Op::K0)]),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorCheck {
    pub relation: String,
    pub charge: i64,
    pub deform: String,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DalgReport {
    pub degree: usize,
    pub tolerance: f64,
    pub rows: Vec<RowCheck>,
    pub generators: Vec<GeneratorCheck>,
    pub commutators: Vec<CommutatorCheck>,
    pub pass: bool,
}

/// Full verification over the given charges and deformations.
pub fn dalgebra_report(
    charges: &[i64],
    deforms: &[DeformationSpec],
    degree: usize,
    tolerance: f64,
    seed: u64,
) -> Result<DalgReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut generators = Vec::new();
    let mut commutators = Vec::new();
    for spec in deforms {
        for &q in charges {
            let deg = degree.max(q.unsigned_abs() as usize + 6);
            for op in TABLE_ROWS {
                for col in [Column::Positive, Column::Negative] {
                    rows.push(verify_action_table(op, col, q, spec, deg)?);
                }
            }
            generators.extend(d_algebra_generators(q, spec, deg)?);
            let probe = FormalSeriesPair::random(q, 1, 20, &mut rng);
            for (a, b, rhs) in SERIES_COMMUTATORS {
                let residual = generator_commutator_residual(a, b, rhs, q, spec, &probe)?;
                let rel = rhs.iter().map(|(c, o)| format!("{c}·D({o})")).collect::<Vec<_>>().join(" + ");
                commutators.push(CommutatorCheck {
                    relation: format!("[D({a}), D({b})] = {rel}"),
                    charge: q,
                    deform: spec.descriptor(),
                    residual,
                });
            }
        }
    }
    let pass = rows.iter().all(|r| r.residual.map_or(true, |x| x < tolerance))
        && generators.iter().all(|g| g.residual < tolerance)
        && commutators.iter().all(|c| c.residual < tolerance);
    Ok(DalgReport { degree, tolerance, rows, generators, commutators, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_series(seed: u64, deg: usize) -> Series {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Series::from_coeffs((0..=deg).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
    }

    fn max_rel(a: &Series, b: &Series) -> f64 {
        let (lo, hi) = a.span_with(b);
        (lo..hi)
            .map(|k| {
                let (x, y) = (a.coeff(k), b.coeff(k));
                let s = x.norm().max(y.norm());
                if s == 0.0 { 0.0 } else { (x - y).norm() / s }
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn q_derivative_on_monomials() {
        for q in [0.5, 2.0] {
            for n in 1..=30 {
                let s = Series::monomial(n, C64::new(1.0, 0.0));
                let d = diff_op_apply(DiffOp::QDiff(q), &s, &DeformationSpec::Identity).unwrap();
                assert_eq!(d.support(), Some((n - 1, n - 1)));
                assert_eq!(d.coeff(n - 1).re, q_bracket(n as f64, q).unwrap());
            }
        }
    }

    #[test]
    fn q_derivative_matches_difference_quotient() {
        let s = random_series(3, 12);
        for q in [0.5, 2.0, 1.3] {
            let d = diff_op_apply(DiffOp::QDiff(q), &s, &DeformationSpec::Identity).unwrap();
            let xi = C64::new(0.37, 0.21);
            let quotient = q_difference_at(&s, q, xi);
            assert!((d.eval(xi) - quotient).norm() < 1e-12 * quotient.norm().max(1.0));
        }
    }

    #[test]
    fn q_derivative_factorizations() {
        let id = DeformationSpec::Identity;
        let s = random_series(5, 20).axpy(C64::new(0.0, 0.0), &Series::zero());
        let s = diff_op_apply(DiffOp::MultXi, &s, &id).unwrap();
        for q in [0.5, 2.0] {
            let direct = diff_op_apply(DiffOp::QDiff(q), &s, &id).unwrap();
            let left = DiffExpr::new(vec![DiffOp::PowXi(-1), DiffOp::BracketDdxiXi(q)], false).apply_series(&s, &id).unwrap();
            let right = DiffExpr::new(vec![DiffOp::BracketXiDdxi(q), DiffOp::PowXi(-1)], false).apply_series(&s, &id).unwrap();
            assert!(max_rel(&direct, &left) < 1e-14);
            assert!(max_rel(&direct, &right) < 1e-14);
        }
    }

    #[test]
    fn q_derivative_limit() {
        let id = DeformationSpec::Identity;
        let s = random_series(9, 20);
        let d = diff_op_apply(DiffOp::Ddxi, &s, &id).unwrap();
        for q in [1.0 + 1e-5, 1.0 - 1e-5] {
            let dq = diff_op_apply(DiffOp::QDiff(q), &s, &id).unwrap();
            let diff = dq.sub(&d).max_abs() / d.max_abs();
            assert!(diff < 1e-8, "q={q}: {diff}");
        }
    }

    #[test]
    fn identity_f_is_identity_map() {
        let s = random_series(1, 15);
        let out = diff_op_apply(DiffOp::FOfDdxiXi { power: 1 }, &s, &DeformationSpec::Identity).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn xi_intertwines_f_operators() {
        for spec in [DeformationSpec::power_law(2.5).unwrap(), DeformationSpec::q_deformed(1.7).unwrap()] {
            let s = random_series(2, 20);
            let lhs = DiffExpr::new(vec![DiffOp::FOfDdxiXi { power: 1 }, DiffOp::MultXi], false).apply_series(&s, &spec).unwrap();
            let rhs = DiffExpr::new(vec![DiffOp::MultXi, DiffOp::FOfXiDdxi { power: 1 }], false).apply_series(&s, &spec).unwrap();
            assert!(max_rel(&lhs, &rhs) < 1e-14);
        }
    }

    #[test]
    fn negative_power_requires_divisibility() {
        let s = Series::from_coeffs(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        assert_eq!(diff_op_apply(DiffOp::PowXi(-1), &s, &DeformationSpec::Identity), Err(Error::NotDivisible(1)));
        let t = diff_op_apply(DiffOp::PowXi(3), &s, &DeformationSpec::Identity).unwrap();
        assert!(diff_op_apply(DiffOp::PowXi(-3), &t, &DeformationSpec::Identity).is_ok());
    }

    #[test]
    fn swap_squares_to_identity() {
        let p = FormalSeriesPair::kets(2, &DeformationSpec::power_law(2.0).unwrap(), 12).unwrap();
        assert_eq!(p.swapped().swapped(), p);
        assert_ne!(p.swapped(), p);
    }

    #[test]
    fn table_examples() {
        let id = DeformationSpec::Identity;
        let r = verify_action_table(Op::A1, Column::Positive, 3, &id, 20).unwrap();
        assert!(r.residual.unwrap() < 1e-12);
        let r = verify_action_table(Op::N2, Column::Positive, 2, &id, 20).unwrap();
        assert!(r.residual.unwrap() < 1e-12);
        let p2 = DeformationSpec::power_law(2.0).unwrap();
        let r = verify_action_table(Op::TildeA1Dag, Column::Positive, 1, &p2, 20).unwrap();
        assert!(r.residual.unwrap() < 1e-12);
    }

    #[test]
    fn wrong_column_is_not_applicable_and_would_fail() {
        let id = DeformationSpec::Identity;
        let r = verify_action_table(Op::A1, Column::Positive, 0, &id, 20).unwrap();
        assert!(!r.applicable);
        // Forcing the positive-column form at q = 0 gives a different state.
        let fs = FockSpace::for_sector(&id, 0, 22).unwrap();
        let fock = FormalSeriesPair::kets(0, &id, 20).unwrap().apply_op(&fs, Op::A1);
        let diff = action_row(Op::A1, Column::Positive, 0).unwrap().apply_pair(&FormalSeriesPair::kets(-1, &id, 20).unwrap(), &id).unwrap();
        assert!(pair_residual(&fock, &diff, 18) > 0.1);
    }

    #[test]
    fn full_table_all_charges() {
        for spec in [DeformationSpec::power_law(2.0).unwrap(), DeformationSpec::q_deformed(2.0).unwrap()] {
            for q in [0, 1, 3, -2] {
                for op in TABLE_ROWS {
                    for col in [Column::Positive, Column::Negative] {
                        let r = verify_action_table(op, col, q, &spec, 24).unwrap();
                        if let Some(x) = r.residual {
                            assert!(x < 1e-12, "{op} {col:?} q={q} {spec}: {x}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn number_rows_agree_across_columns_at_zero_charge() {
        let spec = DeformationSpec::q_deformed(1.5).unwrap();
        for op in [Op::N1, Op::N2] {
            for col in [Column::Positive, Column::Negative] {
                let r = verify_action_table(op, col, 0, &spec, 20).unwrap();
                assert!(r.applicable);
                assert!(r.residual.unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn generators_ket_and_bra() {
        for spec in [DeformationSpec::Identity, DeformationSpec::power_law(3.0).unwrap(), DeformationSpec::q_deformed(2.0).unwrap()] {
            for q in [-3, 0, 2] {
                for g in d_algebra_generators(q, &spec, 24).unwrap() {
                    assert!(g.residual < 1e-12, "{g:?}");
                }
            }
        }
    }

    #[test]
    fn pair_lowering_swaps_parities() {
        let spec = DeformationSpec::power_law(2.0).unwrap();
        let fs = FockSpace::for_sector(&spec, 1, 22).unwrap();
        let p = FormalSeriesPair::kets(1, &spec, 20).unwrap();
        let img = p.apply_op(&fs, Op::Km);
        // the odd ket is lowered onto ξ times the even ket
        let expect = DiffExpr::new(vec![DiffOp::MultXi], false).apply_ket(&p.even, &spec).unwrap();
        for n in 0..18 {
            assert!(max_rel(&img.odd.comps[n], &expect.comps[n]) < 1e-13);
        }
    }

    #[test]
    fn series_commutators_follow_reversed_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for spec in [DeformationSpec::Identity, DeformationSpec::power_law(2.0).unwrap()] {
            for q in [-2, 0, 3] {
                let probe = FormalSeriesPair::random(q, 1, 20, &mut rng);
                for (a, b, rhs) in SERIES_COMMUTATORS {
                    let r = generator_commutator_residual(a, b, rhs, q, &spec, &probe).unwrap();
                    assert!(r < 1e-12, "[{a},{b}] q={q}: {r}");
                }
                // the unreversed sign is wrong
                let bad = generator_commutator_residual(Op::K0, Op::Kp, &[(1.0, Op::Kp)], q, &spec, &probe).unwrap();
                assert!(bad > 0.5);
            }
        }
    }

    #[test]
    fn kets_evaluate_to_state_amplitudes() {
        let spec = DeformationSpec::q_deformed(1.4).unwrap();
        let xi = C64::from_polar(0.8, 0.6);
        let p = FormalSeriesPair::kets(-2, &spec, 30).unwrap();
        let full = p.even.add(&p.odd).evaluate(xi);
        let direct = unnormalized_amplitudes(xi, -2, Parity::Full, &spec, false, 30).unwrap();
        for (a, b) in full.iter().zip(&direct) {
            assert!((a - b).norm() <= 1e-14 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn report_passes() {
        let r = dalgebra_report(&[0, 1, 3, -2], &[DeformationSpec::Identity, DeformationSpec::power_law(2.0).unwrap()], 24, 1e-12, 1).unwrap();
        assert!(r.pass);
        assert!(r.rows.iter().any(|x| !x.applicable));
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["rows"].as_array().unwrap().len() == 160);
    }

    proptest! {
        #[test]
        fn conjugation_by_powers(n in 1i64..=5, seed in 0u64..500) {
            // ξ^(−n) f(d/dξ·ξ) ξ^n = f(d/dξ·ξ + n)
            let spec = DeformationSpec::q_deformed(1.6).unwrap();
            let s = random_series(seed, 20);
            let lhs = DiffExpr::new(vec![DiffOp::PowXi(n), DiffOp::FOfDdxiXi { power: 1 }, DiffOp::PowXi(-n)], false)
                .apply_series(&s, &spec).unwrap();
            let rhs = s.map(0, |k| Ok(C64::new(spec.eval_f((k + 1 + n) as usize)?, 0.0))).unwrap();
            prop_assert!(max_rel(&lhs, &rhs) < 1e-14);
            let lhs2 = DiffExpr::new(vec![DiffOp::PowXi(n), DiffOp::FOfXiDdxi { power: 1 }, DiffOp::PowXi(-n)], false)
                .apply_series(&s, &spec).unwrap();
            let rhs2 = s.map(0, |k| Ok(C64::new(spec.eval_f((k + n) as usize)?, 0.0))).unwrap();
            prop_assert!(max_rel(&lhs2, &rhs2) < 1e-14);
        }

        #[test]
        fn f_operator_commutes_through_derivative(seed in 0u64..500) {
            // f(d/dξ·ξ) d/dξ = d/dξ f(ξ·d/dξ)
            let spec = DeformationSpec::power_law(1.5).unwrap();
            let s = random_series(seed, 20);
            let lhs = DiffExpr::new(vec![DiffOp::Ddxi, DiffOp::FOfDdxiXi { power: 1 }], false).apply_series(&s, &spec).unwrap();
            let rhs = DiffExpr::new(vec![DiffOp::FOfXiDdxi { power: 1 }, DiffOp::Ddxi], false).apply_series(&s, &spec).unwrap();
            prop_assert!(max_rel(&lhs, &rhs) < 1e-14);
        }
    }
}
