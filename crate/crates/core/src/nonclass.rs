//! Squeezing and antibunching diagnostics of the charge coherent states,
//! each computed from operator expectations and from closed forms in the
//! normalization ratios `tanh̄`, `coth̄`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deform::DeformationSpec;
use crate::error::{Error, Result};
use crate::fock::{ChargeSectorState, FockSpace, Op, OpExpr, Quadrature};
use crate::numeric::{agrees, log_space};
use crate::states::{build_state, resolve_nmax, NormalizationSet, Parity, StateRequest, Truncation};

/// Absolute guard band for the strict squeezing and antibunching inequalities.
pub const GUARD: f64 = 1e-12;
/// Agreement required between the operator and closed-form routes.
pub const CLOSED_FORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "SUf11")]
    SuF11,
    SingleMode1,
    SingleMode2,
    TwoMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Meta {
    /// `[|ξ|, arg ξ]`
    pub xi: [f64; 2],
    pub charge: i64,
    pub deform: String,
    pub parity: Parity,
    pub nmax: usize,
}

impl Meta {
    fn new(req: &StateRequest, nmax: usize) -> Self {
        Meta { xi: [req.xi.norm(), req.xi.arg()], charge: req.charge, deform: req.deform.descriptor(), parity: req.parity, nmax }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadratureVariance {
    pub quadrature: String,
    /// operator route `⟨Q²⟩ − ⟨Q⟩²`
    pub variance: f64,
    pub closed_form: f64,
    /// `variance − commutatorBound`
    pub margin: f64,
    pub squeezed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SqueezingReport {
    pub family: Family,
    pub variances: Vec<QuadratureVariance>,
    pub commutator_bound: f64,
    pub uncertainty_product: f64,
    /// square of the commutator bound
    pub uncertainty_bound: f64,
    pub squeezed: bool,
    /// `(name, |⟨·⟩|)` of expectations that vanish by charge conservation
    pub vanishing: Vec<(String, f64)>,
    pub leakage: f64,
    pub meta: Meta,
    pub note: Option<String>,
}

/// A built state with the operator engine sized for it.
struct Prepared {
    fs: FockSpace,
    state: ChargeSectorState,
    norms: NormalizationSet,
    nmax: usize,
}

fn prepare(req: &StateRequest) -> Result<Prepared> {
    let nmax = resolve_nmax(req)?;
    let req = req.clone().with_truncation(Truncation::Fixed(nmax));
    let (state, norms) = build_state(&req)?;
    let fs = FockSpace::for_sector(&req.deform, req.charge, nmax)?;
    Ok(Prepared { fs, state, norms, nmax })
}

impl Prepared {
    fn expect(&self, expr: &OpExpr) -> Result<(C64, f64)> {
        let e = self.fs.expectation(expr, &self.state)?;
        Ok((e.value, e.leakage))
    }

    fn expect_op(&self, op: Op) -> Result<f64> {
        Ok(self.expect(&OpExpr::op(op))?.0.re)
    }

    fn chain(&self, ops: &[Op]) -> Result<f64> {
        Ok(self.expect(&OpExpr::chain(ops))?.0.re)
    }

    /// `⟨Q²⟩ − ⟨Q⟩²` and the leakage of the second moment.
    fn variance(&self, q: Quadrature) -> Result<(f64, f64)> {
        let e = q.expr();
        let (m1, _) = self.expect(&e)?;
        let (m2, leak) = self.expect(&e.mul(&e))?;
        Ok((m2.re - m1.re * m1.re, leak))
    }
}

fn check(quantity: &str, operator: f64, closed: f64, tol: f64) -> Result<()> {
    if agrees(operator, closed, tol) {
        Ok(())
    } else {
        Err(Error::ClosedFormMismatch { quantity: quantity.into(), operator, closed })
    }
}

fn entry(q: Quadrature, variance: f64, closed_form: f64, bound: f64, tol: f64) -> Result<QuadratureVariance> {
    check(&format!("{q:?} variance"), variance, closed_form, tol)?;
    Ok(QuadratureVariance {
        quadrature: format!("{q:?}"),
        variance,
        closed_form,
        margin: variance - bound,
        squeezed: variance < bound - GUARD,
    })
}

fn finish(
    family: Family,
    variances: Vec<QuadratureVariance>,
    bound: f64,
    vanishing: Vec<(String, f64)>,
    leakage: f64,
    meta: Meta,
    note: Option<String>,
) -> SqueezingReport {
    let squeezed = variances.iter().any(|v| v.squeezed);
    SqueezingReport {
        family,
        uncertainty_product: variances[0].variance * variances[1].variance,
        uncertainty_bound: bound * bound,
        variances,
        commutator_bound: bound,
        squeezed,
        vanishing,
        leakage,
        meta,
        note,
    }
}

/// The ratio entering the closed forms: `tanh̄` for even, `coth̄` for odd and
/// `None` for the full state.
fn parity_ratio(p: Parity, norms: &NormalizationSet) -> Option<f64> {
    match p {
        Parity::Even => Some(norms.tanh_bar()),
        Parity::Odd => Some(norms.coth_bar()),
        Parity::Full => None,
    }
}

/// Variances of `X₁ = (K₋† + K₋)/2`, `X₂ = i(K₋† − K₋)/2`.
pub fn suf11_report(req: &StateRequest) -> Result<SqueezingReport> {
    suf11_report_tol(req, CLOSED_FORM_TOL)
}

/// [`suf11_report`] with a custom closed-form agreement tolerance.
pub fn suf11_report_tol(req: &StateRequest, tol: f64) -> Result<SqueezingReport> {
    let p = prepare(req)?;
    let comm = p.expect_op(Op::CommK)?;
    let bound = 0.25 * comm.abs();
    let x = req.xi.norm_sqr();
    let c2 = (2.0 * req.xi.arg()).cos();
    let mut variances = Vec::new();
    let mut leakage = 0.0f64;
    for (q, sign) in [(Quadrature::X1, 1.0), (Quadrature::X2, -1.0)] {
        let (v, leak) = p.variance(q)?;
        leakage = leakage.max(leak);
        let closed = match parity_ratio(req.parity, &p.norms) {
            Some(r) => 0.25 * comm + 0.5 * x * (sign * c2 + r),
            None => 0.25 * comm,
        };
        variances.push(entry(q, v, closed, bound, tol)?);
    }
    let tk = p.chain(&[Op::KmDag, Op::Km])?;
    if let Some(r) = parity_ratio(req.parity, &p.norms) {
        // |ξ|² tanh̄ on even states, |ξ|² coth̄ on odd ones
        check("⟨K₋†K₋⟩", tk, x * r, tol)?;
    }
    Ok(finish(Family::SuF11, variances, bound, vec![], leakage, Meta::new(req, p.nmax), None))
}

/// Left-hand side of the squeezing condition `±cos 2θ + tanh̄ (coth̄) < 0`
/// for the two sign choices.
pub fn suf11_condition(parity: Parity, xi: C64, norms: &NormalizationSet) -> Option<[f64; 2]> {
    let r = parity_ratio(parity, norms)?;
    let c2 = (2.0 * xi.arg()).cos();
    Some([c2 + r, -c2 + r])
}

/// Variances of `Y₁, Y₂` (mode 1) or `Z₁, Z₂` (mode 2).
pub fn single_mode_report(req: &StateRequest, mode: u8) -> Result<SqueezingReport> {
    single_mode_report_tol(req, mode, CLOSED_FORM_TOL)
}

pub fn single_mode_report_tol(req: &StateRequest, mode: u8, tol: f64) -> Result<SqueezingReport> {
    let p = prepare(req)?;
    let (low, dag, comm_op, quads, family) = match mode {
        1 => (Op::A1, Op::A1Dag, Op::Comm1, [Quadrature::Y1, Quadrature::Y2], Family::SingleMode1),
        2 => (Op::A2, Op::A2Dag, Op::Comm2, [Quadrature::Z1, Quadrature::Z2], Family::SingleMode2),
        _ => return Err(Error::Precondition(format!("mode must be 1 or 2, got {mode}"))),
    };
    let mut vanishing = Vec::new();
    for (name, expr) in [
        (format!("{low}"), OpExpr::op(low)),
        (format!("{low}^2"), OpExpr::chain(&[low, low])),
        ("A1dag*A2".to_string(), OpExpr::chain(&[Op::A1Dag, Op::A2])),
    ] {
        let e = p.fs.expectation(&expr, &p.state)?;
        if !e.sector_orthogonal {
            return Err(Error::Precondition(format!("{name} expected to change the charge")));
        }
        vanishing.push((name, e.value.norm()));
    }
    let comm = p.expect_op(comm_op)?;
    let number = p.chain(&[dag, low])?;
    let bound = 0.25 * comm.abs();
    let closed = 0.25 * (comm + 2.0 * number);
    let mut variances = Vec::new();
    let mut leakage = 0.0f64;
    for q in quads {
        let (v, leak) = p.variance(q)?;
        leakage = leakage.max(leak);
        variances.push(entry(q, v, closed, bound, tol)?);
    }
    Ok(finish(family, variances, bound, vanishing, leakage, Meta::new(req, p.nmax), None))
}

const TWO_MODE_NOTE: &str =
    "two-mode f-squeezing: W variance below one eighth of |<[A1,A1dag]> + <[A2,A2dag]>|";

/// Variances of `W₁ = (Y₁ + Z₁)/√2`, `W₂ = (Y₂ + Z₂)/√2`.
pub fn two_mode_report(req: &StateRequest) -> Result<SqueezingReport> {
    two_mode_report_tol(req, CLOSED_FORM_TOL)
}

pub fn two_mode_report_tol(req: &StateRequest, tol: f64) -> Result<SqueezingReport> {
    let p = prepare(req)?;
    let c1 = p.expect_op(Op::Comm1)?;
    let c2 = p.expect_op(Op::Comm2)?;
    let n1 = p.chain(&[Op::A1Dag, Op::A1])?;
    let n2 = p.chain(&[Op::A2Dag, Op::A2])?;
    let bound = 0.125 * (c1 + c2).abs();
    let base = 0.125 * (c1 + c2 + 2.0 * n1 + 2.0 * n2);
    // ⟨A₁A₂⟩ = ξ on the full state and zero on the even and odd ones
    let pair = if req.parity == Parity::Full { 0.5 * req.xi.re } else { 0.0 };
    let mut variances = Vec::new();
    let mut leakage = 0.0f64;
    for (q, sign) in [(Quadrature::W1, 1.0), (Quadrature::W2, -1.0)] {
        let (v, leak) = p.variance(q)?;
        leakage = leakage.max(leak);
        variances.push(entry(q, v, base + sign * pair, bound, tol)?);
    }
    if req.parity != Parity::Full {
        let (y1, _) = p.variance(Quadrature::Y1)?;
        let (z1, _) = p.variance(Quadrature::Z1)?;
        check("W1 variance vs mean of Y1, Z1", variances[0].variance, 0.5 * (y1 + z1), tol)?;
    }
    Ok(finish(Family::TwoMode, variances, bound, vec![], leakage, Meta::new(req, p.nmax), Some(TWO_MODE_NOTE.into())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SqueezedPoint {
    pub xi: [f64; 2],
    pub charge: i64,
    pub margin: f64,
    pub quadrature: String,
}

/// First full-state parameter point (over the moduli, `θ ∈ {0, π}` and the
/// charges) at which a two-mode quadrature is squeezed.
pub fn full_state_two_mode_scan(deform: &DeformationSpec, charges: &[i64], moduli: &[f64]) -> Result<Option<SqueezedPoint>> {
    for &q in charges {
        for &m in moduli {
            for theta in [0.0, std::f64::consts::PI] {
                let req = StateRequest::new(C64::from_polar(m, theta), q, Parity::Full, deform.clone());
                let r = two_mode_report(&req)?;
                if let Some(v) = r.variances.iter().find(|v| v.squeezed) {
                    return Ok(Some(SqueezedPoint { xi: [m, theta], charge: q, margin: v.margin, quadrature: v.quadrature.clone() }));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AntibunchReport {
    pub g2: f64,
    pub closed_form: f64,
    pub antibunched: bool,
    pub meta: Meta,
}

/// `g⁽²⁾(0) = ⟨K₋†² K₋²⟩ / ⟨K₋†K₋⟩²` with `K₋† K₋ = A₁†A₂†A₁A₂`.
pub fn antibunch_report(req: &StateRequest) -> Result<AntibunchReport> {
    antibunch_report_tol(req, CLOSED_FORM_TOL)
}

pub fn antibunch_report_tol(req: &StateRequest, tol: f64) -> Result<AntibunchReport> {
    let p = prepare(req)?;
    let den = p.chain(&[Op::KmDag, Op::Km])?;
    if !(den > 0.0) {
        return Err(Error::CorrelationUndefined);
    }
    let num = p.chain(&[Op::KmDag, Op::KmDag, Op::Km, Op::Km])?;
    let g2 = num / (den * den);
    let closed_form = match req.parity {
        Parity::Even => p.norms.coth_bar().powi(2),
        Parity::Odd => p.norms.tanh_bar().powi(2),
        Parity::Full => 1.0,
    };
    check("g2", g2, closed_form, tol)?;
    Ok(AntibunchReport { g2, closed_form, antibunched: g2 < 1.0 - GUARD, meta: Meta::new(req, p.nmax) })
}

/// `f(n) = n^((p−1)/2)`, with `p = 1` the undeformed oscillator.
pub fn power_family(p: f64) -> Result<DeformationSpec> {
    if p == 1.0 {
        Ok(DeformationSpec::Identity)
    } else {
        DeformationSpec::power_law(p)
    }
}

/// `x` grid for the `coth̄` scans.
pub fn default_grid() -> Vec<f64> {
    log_space(1e-3, 200.0, 400)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CothRow {
    pub x: f64,
    pub coth: f64,
    pub sub_unity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CothScan {
    pub charge: i64,
    pub deform: String,
    pub rows: Vec<CothRow>,
    /// first and last grid point with `coth̄ < 1`
    pub window: Option<(f64, f64)>,
}

/// `coth̄(x)` at `x = |ξ|²` over a grid.
pub fn coth_scan(q: i64, deform: &DeformationSpec, grid: &[f64]) -> Result<CothScan> {
    let rows = grid
        .iter()
        .map(|&x| {
            let coth = NormalizationSet::compute(x.sqrt(), q, deform, false)?.coth_bar();
            Ok(CothRow { x, coth, sub_unity: coth < 1.0 - GUARD })
        })
        .collect::<Result<Vec<_>>>()?;
    let sub: Vec<f64> = rows.iter().filter(|r| r.sub_unity).map(|r| r.x).collect();
    let window = sub.first().map(|&a| (a, *sub.last().expect("nonempty")));
    Ok(CothScan { charge: q, deform: deform.descriptor(), rows, window })
}

/// CSV with columns `q,p,x,coth,subUnity`; floats in shortest round-trip form.
pub fn coth_csv(scans: &[(f64, CothScan)]) -> String {
    let mut out = String::from("q,p,x,coth,subUnity\n");
    for (p, scan) in scans {
        for r in &scan.rows {
            out.push_str(&format!("{},{},{},{},{}\n", scan.charge, p, r.x, r.coth, r.sub_unity));
        }
    }
    out
}
