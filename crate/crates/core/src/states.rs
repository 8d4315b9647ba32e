//! Nonlinear charge coherent states, their even and odd superpositions, the
//! dual (`1/f`) variants and the single-mode building blocks.
//!
//! Amplitudes are assembled from log magnitudes; the phase `n·arg ξ` is
//! applied separately so that `(2n)!(2n+|q|)!` growth never overflows.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deform::{DeformationSpec, Radius};
use crate::error::{Error, Result};
use crate::fock::{ChargeSectorState, FockSpace, Op};
use crate::numeric::{ln_factorial, log_sum_exp};

/// Relative weight below which the tail of an automatic truncation is dropped.
pub const AUTO_CUTOFF: f64 = 1e-30;
pub const AUTO_MIN_NMAX: usize = 8;
pub const AUTO_CAP: usize = 400;
/// Normalization series are summed independently of the state truncation,
/// until the terms fall this far (in log) below the largest one.
const SERIES_LOG_MARGIN: f64 = 80.0;
const SERIES_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Full,
    Even,
    Odd,
}

impl Parity {
    pub fn admits(self, n: usize) -> bool {
        match self {
            Parity::Full => true,
            Parity::Even => n.is_multiple_of(2),
            Parity::Odd => n % 2 == 1,
        }
    }

    /// Indices admitted by both parities, `None` if disjoint.
    pub fn intersect(self, other: Parity) -> Option<Parity> {
        match (self, other) {
            (Parity::Full, p) | (p, Parity::Full) => Some(p),
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Parity::Full),
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            _ => Err(Error::Precondition(format!("unknown parity `{s}` (expected even|odd|full)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for Truncation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Truncation::Auto);
        }
        s.parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .map(Truncation::Fixed)
            .ok_or_else(|| Error::Precondition(format!("invalid truncation `{s}` (expected auto or a positive integer)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRequest {
    pub xi: C64,
    pub charge: i64,
    pub parity: Parity,
    pub deform: DeformationSpec,
    /// Use `1/f` in place of `f`.
    pub dual: bool,
    pub truncation: Truncation,
}

impl StateRequest {
    pub fn new(xi: C64, charge: i64, parity: Parity, deform: DeformationSpec) -> Self {
        StateRequest { xi, charge, parity, deform, dual: false, truncation: Truncation::Auto }
    }

    pub fn dual(mut self) -> Self {
        self.dual = true;
        self
    }

    pub fn with_truncation(mut self, t: Truncation) -> Self {
        self.truncation = t;
        self
    }

    pub fn with_xi(mut self, xi: C64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_parity(mut self, p: Parity) -> Self {
        self.parity = p;
        self
    }

    pub fn radius(&self) -> Result<Radius> {
        if self.dual {
            self.deform.dual_convergence_radius()
        } else {
            self.deform.convergence_radius()
        }
    }

    /// Rejects requests that do not describe a normalizable state.
    pub fn validate(&self) -> Result<()> {
        self.deform.validate()?;
        if !(self.xi.re.is_finite() && self.xi.im.is_finite()) {
            return Err(Error::Precondition(format!("non-finite ξ = {}", self.xi)));
        }
        if self.parity == Parity::Odd && self.xi.norm() == 0.0 {
            return Err(Error::OddAtOrigin);
        }
        // An undetermined radius (irregular table tail) is left to the
        // truncation convergence check.
        if let Ok(r) = self.radius() {
            if !r.admits(self.xi.norm()) {
                return Err(Error::OutsideRadius { modulus: self.xi.norm(), radius: r.value() });
            }
        }
        Ok(())
    }
}

/// `ln(1/(√n! f(n)!))` for `n = 0, 1, …`, extended on demand. With `dual`,
/// `f` is replaced by `1/f`.
#[derive(Clone, Debug)]
pub struct LogCoefficients {
    spec: DeformationSpec,
    sign: f64,
    ln_f_fact: Vec<f64>,
}

impl LogCoefficients {
    pub fn new(spec: &DeformationSpec, dual: bool) -> Self {
        LogCoefficients { spec: spec.clone(), sign: if dual { -1.0 } else { 1.0 }, ln_f_fact: vec![0.0] }
    }

    fn ln_f_factorial(&mut self, n: usize) -> Result<f64> {
        while self.ln_f_fact.len() <= n {
            let k = self.ln_f_fact.len();
            let next = self.ln_f_fact[k - 1] + self.sign * self.spec.ln_f(k)?;
            self.ln_f_fact.push(next);
        }
        Ok(self.ln_f_fact[n])
    }

    /// Single-mode coefficient `ln(1/(√n! f(n)!))`.
    pub fn single(&mut self, n: usize) -> Result<f64> {
        Ok(-0.5 * ln_factorial(n) - self.ln_f_factorial(n)?)
    }

    /// Two-mode sector coefficient `ln(1/(√(n!(n+a)!) f(n)! f(n+a)!))`.
    pub fn pair(&mut self, n: usize, a: usize) -> Result<f64> {
        Ok(self.single(n)? + self.single(n + a)?)
    }
}

/// `n·ln|ξ|` with the convention `0·ln 0 = 0`.
fn n_ln_modulus(n: usize, modulus: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * modulus.ln()
    }
}

/// Smallest truncation at which the last two retained log weights fall below
/// the cutoff relative to the largest weight seen.
fn auto_nmax(mut ln_weight: impl FnMut(usize) -> Result<f64>) -> Result<usize> {
    let cut = AUTO_CUTOFF.ln();
    let mut max = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for n in 0..=AUTO_CAP {
        let w = ln_weight(n)?;
        max = max.max(w);
        if n >= AUTO_MIN_NMAX && w < max + cut && prev < max + cut && w <= prev {
            return Ok(n);
        }
        prev = w;
    }
    Err(Error::TruncationDidNotConverge { cap: AUTO_CAP })
}

/// Log sums `ln Σ w_n` over all, even and odd `n` of a positive series whose
/// log terms are produced by `ln_weight`; summed until past the peak and far
/// below it.
fn log_sums(mut ln_weight: impl FnMut(usize) -> Result<f64>) -> Result<[f64; 3]> {
    let mut even = Vec::new();
    let mut odd = Vec::new();
    let mut max = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for n in 0..=SERIES_CAP {
        let w = ln_weight(n)?;
        if n % 2 == 0 { even.push(w) } else { odd.push(w) }
        max = max.max(w);
        if n >= 2 && (w == f64::NEG_INFINITY || (w < max - SERIES_LOG_MARGIN && prev < max - SERIES_LOG_MARGIN && w <= prev))
        {
            let e = log_sum_exp(&even);
            let o = log_sum_exp(&odd);
            return Ok([log_sum_exp(&[e, o]), e, o]);
        }
        prev = w;
    }
    Err(Error::TruncationDidNotConverge { cap: SERIES_CAP })
}

/// Normalization constants of the full, even and odd states, kept as the
/// logarithms of their inverse squares `Σ|c_n|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSet {
    /// `ln N⁻²`
    pub ln_sum_full: f64,
    /// `ln (N^e)⁻² = ln cosh̄`
    pub ln_sum_even: f64,
    /// `ln (N^o)⁻² = ln sinh̄`
    pub ln_sum_odd: f64,
}

impl NormalizationSet {
    /// Two-mode sector normalizations at `x = |ξ|²`.
    pub fn compute(modulus: f64, charge: i64, deform: &DeformationSpec, dual: bool) -> Result<Self> {
        let a = charge.unsigned_abs() as usize;
        let mut lc = LogCoefficients::new(deform, dual);
        let [f, e, o] = log_sums(|n| Ok(2.0 * (n_ln_modulus(n, modulus) + lc.pair(n, a)?)))?;
        Ok(NormalizationSet { ln_sum_full: f, ln_sum_even: e, ln_sum_odd: o })
    }

    /// Single-mode normalizations `N_f`, `N_f^e`, `N_f^o`.
    pub fn single_mode(modulus: f64, deform: &DeformationSpec, dual: bool) -> Result<Self> {
        let mut lc = LogCoefficients::new(deform, dual);
        let [f, e, o] = log_sums(|n| Ok(2.0 * (n_ln_modulus(n, modulus) + lc.single(n)?)))?;
        Ok(NormalizationSet { ln_sum_full: f, ln_sum_even: e, ln_sum_odd: o })
    }

    pub fn ln_sum(&self, p: Parity) -> f64 {
        match p {
            Parity::Full => self.ln_sum_full,
            Parity::Even => self.ln_sum_even,
            Parity::Odd => self.ln_sum_odd,
        }
    }

    /// `N`, `N^e` or `N^o` (infinite for the odd state at `ξ = 0`).
    pub fn factor(&self, p: Parity) -> f64 {
        (-0.5 * self.ln_sum(p)).exp()
    }

    pub fn n_full(&self) -> f64 {
        self.factor(Parity::Full)
    }

    pub fn n_even(&self) -> f64 {
        self.factor(Parity::Even)
    }

    pub fn n_odd(&self) -> f64 {
        self.factor(Parity::Odd)
    }

    pub fn cosh_bar(&self) -> f64 {
        self.ln_sum_even.exp()
    }

    pub fn sinh_bar(&self) -> f64 {
        self.ln_sum_odd.exp()
    }

    pub fn tanh_bar(&self) -> f64 {
        (self.ln_sum_odd - self.ln_sum_even).exp()
    }

    pub fn coth_bar(&self) -> f64 {
        (self.ln_sum_even - self.ln_sum_odd).exp()
    }
}

/// Truncation order used for a request.
pub fn resolve_nmax(req: &StateRequest) -> Result<usize> {
    match req.truncation {
        Truncation::Fixed(n) => Ok(n),
        Truncation::Auto => {
            let a = req.charge.unsigned_abs() as usize;
            let m = req.xi.norm();
            let mut lc = LogCoefficients::new(&req.deform, req.dual);
            auto_nmax(|n| Ok(2.0 * (n_ln_modulus(n, m) + lc.pair(n, a)?)))
        }
    }
}

/// Normalized amplitudes from log magnitudes and the phase `n·θ`.
fn assemble(ln_mag: &[f64], theta: f64, parity: Parity) -> Vec<C64> {
    let max = ln_mag
        .iter()
        .enumerate()
        .filter(|(n, _)| parity.admits(*n))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut amps: Vec<C64> = ln_mag
        .iter()
        .enumerate()
        .map(|(n, &l)| {
            if parity.admits(n) && l > f64::NEG_INFINITY {
                C64::from_polar((l - max).exp(), n as f64 * theta)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut amps {
        *c /= norm;
    }
    amps
}

/// Builds the requested sector state, normalized over its truncation, and
/// the series normalization constants.
pub fn build_state(req: &StateRequest) -> Result<(ChargeSectorState, NormalizationSet)> {
    req.validate()?;
    let nmax = resolve_nmax(req)?;
    let a = req.charge.unsigned_abs() as usize;
    let m = req.xi.norm();
    let mut lc = LogCoefficients::new(&req.deform, req.dual);
    let ln_mag = (0..=nmax).map(|n| Ok(n_ln_modulus(n, m) + lc.pair(n, a)?)).collect::<Result<Vec<_>>>()?;
    let amps = assemble(&ln_mag, req.xi.arg(), req.parity);
    let norms = NormalizationSet::compute(m, req.charge, &req.deform, req.dual)?;
    Ok((ChargeSectorState::new(req.charge, amps), norms))
}

/// Unnormalized sector amplitudes `ξⁿ/(√(n!(n+|q|)!) f(n)! f(n+|q|)!)` of the
/// given parity, `n = 0..=nmax`.
pub fn unnormalized_amplitudes(
    xi: C64,
    charge: i64,
    parity: Parity,
    deform: &DeformationSpec,
    dual: bool,
    nmax: usize,
) -> Result<Vec<C64>> {
    let a = charge.unsigned_abs() as usize;
    let m = xi.norm();
    let mut lc = LogCoefficients::new(deform, dual);
    (0..=nmax)
        .map(|n| {
            if !parity.admits(n) || (m == 0.0 && n > 0) {
                return Ok(C64::new(0.0, 0.0));
            }
            Ok(C64::from_polar((n_ln_modulus(n, m) + lc.pair(n, a)?).exp(), n as f64 * xi.arg()))
        })
        .collect()
}

/// `‖(K₋)^k ψ − ξ^k ψ‖` over the indices not reached from beyond the
/// truncation.
pub fn eigen_residual(state: &ChargeSectorState, xi: C64, deform: &DeformationSpec, power: u32) -> Result<f64> {
    let fs = FockSpace::for_sector(deform, state.charge, state.nmax())?;
    let mut img = state.clone();
    for _ in 0..power {
        img = fs.apply(Op::Km, &img)?;
    }
    let target = xi.powu(power);
    let top = state.nmax().saturating_sub(power as usize);
    let r: f64 = (0..=top).map(|n| (img.amplitudes[n] - target * state.amplitudes[n]).norm_sqr()).sum();
    Ok(r.sqrt())
}

/// Even/odd states are eigenstates of `(A₁A₂)²` with eigenvalue `ξ²`.
pub fn check_eigenpair(state: &ChargeSectorState, xi: C64, deform: &DeformationSpec) -> Result<f64> {
    eigen_residual(state, xi, deform, 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// Product of normalizations times the series in `ξ*ξ'`.
    pub closed_form: C64,
    /// Inner product of the truncated amplitude vectors.
    pub direct: C64,
    /// Different charges or disjoint parities.
    pub orthogonal: bool,
}

impl OverlapReport {
    pub fn discrepancy(&self) -> f64 {
        (self.closed_form - self.direct).norm()
    }
}

/// `⟨a|b⟩` by the closed form and by the amplitude inner product.
pub fn overlap(a: &StateRequest, b: &StateRequest) -> Result<OverlapReport> {
    a.validate()?;
    b.validate()?;
    let zero = C64::new(0.0, 0.0);
    let common = match a.parity.intersect(b.parity) {
        Some(p) if a.charge == b.charge => p,
        _ => return Ok(OverlapReport { closed_form: zero, direct: zero, orthogonal: true }),
    };
    let nmax = resolve_nmax(a)?.max(resolve_nmax(b)?);
    let (sa, na) = build_state(&a.clone().with_truncation(Truncation::Fixed(nmax)))?;
    let (sb, nb) = build_state(&b.clone().with_truncation(Truncation::Fixed(nmax)))?;
    let direct = sa.inner(&sb);

    let k = a.charge.unsigned_abs() as usize;
    let z = a.xi.conj() * b.xi;
    let (mz, tz) = (z.norm(), z.arg());
    let mut la = LogCoefficients::new(&a.deform, a.dual);
    let mut lb = LogCoefficients::new(&b.deform, b.dual);
    let mut logs = Vec::new();
    let mut max = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for n in 0..=SERIES_CAP {
        let w = n_ln_modulus(n, mz) + la.pair(n, k)? + lb.pair(n, k)?;
        max = max.max(w);
        if common.admits(n) {
            logs.push((n, w));
        }
        if n >= 2 && (w == f64::NEG_INFINITY || (w < max - SERIES_LOG_MARGIN && prev < max - SERIES_LOG_MARGIN && w <= prev)) {
            break;
        }
        if n == SERIES_CAP {
            return Err(Error::TruncationDidNotConverge { cap: SERIES_CAP });
        }
        prev = w;
    }
    let series: C64 = logs.iter().map(|&(n, w)| C64::from_polar((w - max).exp(), n as f64 * tz)).sum();
    let ln_pref = max - 0.5 * na.ln_sum(a.parity) - 0.5 * nb.ln_sum(b.parity);
    let closed_form = series * ln_pref.exp();
    Ok(OverlapReport { closed_form, direct, orthogonal: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `N/N^e`
    pub weight_even: f64,
    /// `N/N^o`
    pub weight_odd: f64,
    /// Largest amplitude difference between the full state and its
    /// even/odd reconstruction.
    pub reconstruction_residual: f64,
    /// `|(N/N^e)² + (N/N^o)² − 1|`
    pub pythagoras_residual: f64,
}

/// Splits the full state into its even and odd parts.
pub fn decompose_full(xi: C64, charge: i64, deform: &DeformationSpec) -> Result<Decomposition> {
    let full_req = StateRequest::new(xi, charge, Parity::Full, deform.clone());
    let nmax = resolve_nmax(&full_req)?;
    let fixed = full_req.with_truncation(Truncation::Fixed(nmax));
    let (full, norms) = build_state(&fixed)?;
    let (even, _) = build_state(&fixed.clone().with_parity(Parity::Even))?;
    let we = (0.5 * (norms.ln_sum_even - norms.ln_sum_full)).exp();
    let wo = (0.5 * (norms.ln_sum_odd - norms.ln_sum_full)).exp();
    let odd = if xi.norm() == 0.0 {
        ChargeSectorState::zero(charge, nmax)
    } else {
        build_state(&fixed.with_parity(Parity::Odd))?.0
    };
    let residual = (0..=nmax)
        .map(|n| (full.amplitudes[n] - we * even.amplitudes[n] - wo * odd.amplitudes[n]).norm())
        .fold(0.0, f64::max);
    Ok(Decomposition {
        weight_even: we,
        weight_odd: wo,
        reconstruction_residual: residual,
        pythagoras_residual: (we * we + wo * wo - 1.0).abs(),
    })
}

/// Single-mode state `N_f Σ ξⁿ/(√n! f(n)!) |n⟩` (or its even/odd part),
/// normalized over `n = 0..=nmax`.
pub fn build_single_mode(
    xi: C64,
    parity: Parity,
    deform: &DeformationSpec,
    truncation: Truncation,
) -> Result<(Vec<C64>, NormalizationSet)> {
    deform.validate()?;
    let m = xi.norm();
    if parity == Parity::Odd && m == 0.0 {
        return Err(Error::OddAtOrigin);
    }
    if let Ok(r) = deform.convergence_radius() {
        if !r.admits(m) {
            return Err(Error::OutsideRadius { modulus: m, radius: r.value() });
        }
    }
    let mut lc = LogCoefficients::new(deform, false);
    let nmax = match truncation {
        Truncation::Fixed(n) => n,
        Truncation::Auto => auto_nmax(|n| Ok(2.0 * (n_ln_modulus(n, m) + lc.single(n)?)))?,
    };
    let ln_mag = (0..=nmax).map(|n| Ok(n_ln_modulus(n, m) + lc.single(n)?)).collect::<Result<Vec<_>>>()?;
    let norms = NormalizationSet::single_mode(m, deform, false)?;
    Ok((assemble(&ln_mag, xi.arg(), parity), norms))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub state: ChargeSectorState,
    /// `|⟨target|generated⟩|² / ‖generated‖²`
    pub fidelity: f64,
    /// Norm of the generated vector including all prefactors.
    pub norm: f64,
    /// Largest projected amplitude outside the target charge sector.
    pub off_sector: f64,
    pub nodes: usize,
}

/// Minimum number of angular nodes for an exact projection at truncation
/// `nmax` and charge `q`.
pub fn required_nodes(nmax: usize, charge: i64) -> usize {
    2 * nmax + charge.unsigned_abs() as usize + 2
}

/// Generates a sector state by averaging the product of a single-mode full
/// state (amplitude `ξ₁`, carrying the charge) and an even/odd single-mode
/// state (amplitude `ξ₂`) over the U(1) phase, with the trapezoid rule.
pub fn generate_by_projection(
    xi1: C64,
    xi2: C64,
    charge: i64,
    parity: Parity,
    deform: &DeformationSpec,
    nodes: usize,
) -> Result<GenerationReport> {
    if charge != 0 && xi1.norm() == 0.0 {
        return Err(Error::ZeroModeAmplitude(charge));
    }
    let xi = xi1 * xi2;
    let target_req = StateRequest::new(xi, charge, parity, deform.clone());
    let (target, norms) = build_state(&target_req)?;
    let nmax = target.nmax();
    let need = required_nodes(nmax, charge);
    if nodes < need {
        return Err(Error::InsufficientNodes { given: nodes, required: need });
    }
    let a = charge.unsigned_abs() as usize;
    let (u, nu) = build_single_mode(xi1, Parity::Full, deform, Truncation::Fixed(nmax + a))?;
    let (v, nv) = build_single_mode(xi2, parity, deform, Truncation::Fixed(nmax))?;

    // (mode of u, mode of v): u carries the charge, sits in mode 1 for q >= 0.
    let (lu, lv) = (u.len(), v.len());
    let mut acc = vec![C64::new(0.0, 0.0); lu * lv];
    for k in 0..nodes {
        let alpha = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
        // e^{+iqα} for q >= 0, e^{-iqα} for q <= 0; both equal e^{i|q|α}.
        let w = C64::from_polar(1.0 / nodes as f64, a as f64 * alpha);
        for (m, um) in u.iter().enumerate() {
            if *um == C64::new(0.0, 0.0) {
                continue;
            }
            let rm = w * um * C64::from_polar(1.0, -(m as f64) * alpha);
            for (j, vj) in v.iter().enumerate() {
                acc[m * lv + j] += rm * vj * C64::from_polar(1.0, j as f64 * alpha);
            }
        }
    }
    let pref = (0.5 * (nu.ln_sum_full + nv.ln_sum(parity) - norms.ln_sum(parity))).exp();
    let xi1_pow = xi1.powi(-(a as i32));
    let mut amps = vec![C64::new(0.0, 0.0); nmax + 1];
    let mut off = 0.0f64;
    for m in 0..lu {
        for j in 0..lv {
            let val = acc[m * lv + j] * pref * xi1_pow;
            if m == j + a {
                amps[j] = val;
            } else {
                off = off.max(val.norm());
            }
        }
    }
    let state = ChargeSectorState::new(charge, amps);
    let norm = state.norm();
    let fidelity = target.inner(&state).norm_sqr() / state.norm_sqr();
    Ok(GenerationReport { state, fidelity, norm, off_sector: off, nodes })
}

/// `½(N^P/N)(|ξ⟩ ± |−ξ⟩)` and its largest deviation from the directly built
/// even or odd state.
pub fn combine_parity(xi: C64, charge: i64, parity: Parity, deform: &DeformationSpec) -> Result<(ChargeSectorState, f64)> {
    if parity == Parity::Full {
        return Err(Error::Precondition("combination defines only even and odd states".into()));
    }
    let req = StateRequest::new(xi, charge, parity, deform.clone());
    let nmax = resolve_nmax(&req)?;
    let req = req.with_truncation(Truncation::Fixed(nmax));
    let (direct, norms) = build_state(&req)?;
    let full = req.clone().with_parity(Parity::Full);
    let (plus, _) = build_state(&full)?;
    let (minus, _) = build_state(&full.with_xi(-xi))?;
    let s = if parity == Parity::Even { 1.0 } else { -1.0 };
    let c = 0.5 * (0.5 * (norms.ln_sum_full - norms.ln_sum(parity))).exp();
    let mut combined = plus.scaled(C64::new(c, 0.0));
    combined.axpy(C64::new(s * c, 0.0), &minus);
    let dev = combined
        .amplitudes
        .iter()
        .zip(&direct.amplitudes)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Ok((combined, dev))
}

/// Schmidt data of a sector state; its expansion is already biorthogonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtProfile {
    /// Nonzero `|c_n|`, descending.
    pub coefficients: Vec<f64>,
    /// `−Σ p ln p` with `p = |c_n|²`.
    pub entropy: f64,
    /// `1/Σ p²`
    pub schmidt_number: f64,
}

pub fn schmidt_profile(state: &ChargeSectorState) -> SchmidtProfile {
    let mut coefficients: Vec<f64> = state.amplitudes.iter().map(|c| c.norm()).filter(|&c| c > 0.0).collect();
    coefficients.sort_by(|a, b| b.total_cmp(a));
    let entropy = coefficients
        .iter()
        .map(|c| {
            let p = c * c;
            if p > 0.0 { -p * p.ln() } else { 0.0 }
        })
        .sum::<f64>()
        .max(0.0);
    let purity: f64 = coefficients.iter().map(|c| c.powi(4)).sum();
    SchmidtProfile { coefficients, entropy, schmidt_number: 1.0 / purity }
}

/// Serialized form of a built state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub charge: i64,
    pub parity: Parity,
    pub xi: [f64; 2],
    pub deform: String,
    pub dual: bool,
    pub amplitudes: Vec<[f64; 2]>,
    pub nmax: usize,
    pub leakage: f64,
}

impl StateRecord {
    pub fn new(req: &StateRequest, state: &ChargeSectorState) -> Self {
        StateRecord {
            charge: state.charge,
            parity: req.parity,
            xi: [req.xi.re, req.xi.im],
            deform: req.deform.descriptor(),
            dual: req.dual,
            amplitudes: state.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
            nmax: state.nmax(),
            leakage: state.leakage,
        }
    }
}
