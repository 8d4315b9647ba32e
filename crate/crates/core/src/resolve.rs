//! Numerical check of the resolution of the identity by f-states paired with
//! dual (1/f) bras under the weight `2|ξ|^|q| K_q(2|ξ|) d²ξ/π`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deform::DeformationSpec;
use crate::error::{Error, Result};
use crate::numeric::ln_factorial;
use crate::states::LogCoefficients;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Boundary between the power series and the continued fraction.
pub const SERIES_SWITCH: f64 = 2.0;
/// Above this argument `K_n(z)` underflows and is flushed to zero.
pub const UNDERFLOW_Z: f64 = 700.0;

/// `e^z K_0(z)` and `e^z K_1(z)` from the small-argument series.
fn k01_series_scaled(z: f64) -> (f64, f64) {
    let y = 0.25 * z * z;
    let ln_half = (0.5 * z).ln();
    let (mut i0, mut i1) = (0.0, 0.0);
    let (mut s0, mut s1) = (0.0, 0.0);
    let mut t0 = 1.0; // y^k / k!²
    let mut t1 = 1.0; // y^k / (k!(k+1)!)
    let mut h = 0.0; // H_k
    for k in 0..200 {
        let kf = k as f64;
        if k > 0 {
            h += 1.0 / kf;
            t0 *= y / (kf * kf);
            t1 *= y / (kf * (kf + 1.0));
        }
        i0 += t0;
        i1 += t1;
        s0 += h * t0;
        // ψ(k+1) + ψ(k+2) = 2H_k + 1/(k+1) − 2γ
        s1 += (2.0 * h + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA) * t1;
        if t0 < 1e-18 * i0 && k > 2 {
            break;
        }
    }
    let i1 = 0.5 * z * i1;
    let k0 = -(ln_half + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / z + ln_half * i1 - 0.25 * z * s1;
    let e = z.exp();
    (k0 * e, k1 * e)
}

/// `e^z K_0(z)` and `e^z K_1(z)` by Steed's evaluation of the second
/// continued fraction (Temme's form), valid for `z > 1`.
fn k01_cf2_scaled(x: f64) -> (f64, f64) {
    let v = 0.0f64;
    let mut a = v * v - 0.25;
    let mut b = 2.0 * (x + 1.0);
    let mut d = 1.0 / b;
    let mut delta = d;
    let mut f = d;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut q = -a;
    let mut c = -a;
    let mut s = 1.0 + q * delta;
    for k in 2..10_000 {
        let kf = k as f64;
        a -= 2.0 * (kf - 1.0);
        b += 2.0;
        d = 1.0 / (b + a * d);
        delta *= b * d - 1.0;
        f += delta;
        let t = (prev - (b - 2.0) * cur) / a;
        prev = cur;
        cur = t;
        c *= -a / kf;
        q += c * t;
        s += q * delta;
        if (q * delta).abs() < s.abs() * f64::EPSILON * 0.5 {
            break;
        }
    }
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (0.5 + v + x + (v * v - 0.25) * f) / x;
    (k0, k1)
}

fn k01_scaled(z: f64) -> (f64, f64) {
    if z <= SERIES_SWITCH {
        k01_series_scaled(z)
    } else {
        k01_cf2_scaled(z)
    }
}

/// `e^z K_n(z)` for integer order, by upward recurrence from `K_0, K_1`.
pub fn bessel_k_scaled(n: u32, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::BesselDomain(z));
    }
    let (mut km, mut k) = k01_scaled(z);
    if n == 0 {
        return Ok(km);
    }
    for j in 1..n {
        let next = km + 2.0 * j as f64 / z * k;
        km = k;
        k = next;
    }
    Ok(k)
}

/// `K_n(z)` and whether the value was flushed to zero by underflow.
pub fn bessel_k_flushed(n: u32, z: f64) -> Result<(f64, bool)> {
    let s = bessel_k_scaled(n, z)?;
    let v = s * (-z).exp();
    Ok((v, z > UNDERFLOW_Z && (v == 0.0 || !v.is_normal())))
}

/// Modified Bessel function of the second kind of integer order.
pub fn bessel_k(n: u32, z: f64) -> Result<f64> {
    Ok(bessel_k_flushed(n, z)?.0)
}

/// Large-argument expansion of `e^z K_n(z)`, truncated at its smallest term.
pub fn bessel_k_asymptotic_scaled(n: u32, z: f64) -> f64 {
    let mu = 4.0 * (n as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
        // terms only start decreasing once 2k − 1 exceeds 2n
        if kf > n as f64 + 1.0 && next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
    }
    (PI / (2.0 * z)).sqrt() * sum
}

/// Modified Bessel function of the first kind by its power series.
pub fn bessel_i(n: u32, z: f64) -> f64 {
    let y = 0.25 * z * z;
    let mut t = (n as f64 * (0.5 * z).ln() - ln_factorial(n as usize)).exp();
    let mut s = t;
    for k in 1..1000 {
        t *= y / (k as f64 * (k + n as usize) as f64);
        s += t;
        if t < 1e-17 * s {
            break;
        }
    }
    s
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

const PANEL_ORDER: usize = 20;

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Normalized radial moment integrands
/// `4 t^(2k+a+1) K_a(2t) / (k!(k+a)!)`, `k = 0..=kmax`, each integrating to 1.
fn moment_integrands(a: u32, kmax: usize, t: f64) -> Result<Vec<f64>> {
    let ka = bessel_k_scaled(a, 2.0 * t)?;
    let lt = t.ln();
    Ok((0..=kmax)
        .map(|k| {
            let ln = (2 * k + a as usize + 1) as f64 * lt - 2.0 * t + 4f64.ln()
                - ln_factorial(k)
                - ln_factorial(k + a as usize);
            ka * ln.exp()
        })
        .collect())
}

fn panel(a: u32, kmax: usize, lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<(f64, f64)>)> {
    let (x, w) = gl20();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc = vec![0.0; kmax + 1];
    let mut nodes = Vec::with_capacity(PANEL_ORDER);
    for (xi, wi) in x.iter().zip(w) {
        let t = mid + half * xi;
        for (s, v) in acc.iter_mut().zip(moment_integrands(a, kmax, t)?) {
            *s += half * wi * v;
        }
        nodes.push((t, half * wi));
    }
    Ok((acc, nodes))
}

/// Radial and angular quadrature for integrands `|ξ|^m K_a(2|ξ|)` times
/// trigonometric polynomials in `arg ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub order: u32,
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub angular_nodes: usize,
    pub cutoff: f64,
    pub panels: usize,
    /// Largest power `m` the scheme was validated for.
    pub max_moment: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub order: u32,
    pub moment: usize,
    pub relative_error: f64,
}

/// Panel agreement required before a panel is accepted.
const PANEL_TOL: f64 = 1e-14;
const MAX_DEPTH: u32 = 48;
pub const MOMENT_TOL: f64 = 1e-9;

impl QuadratureScheme {
    /// Adaptive composite Gauss-Legendre rule on `[0, R]` for order `a`,
    /// validated on every moment `m = 2k + a + 1 ≤ 4·n_check + a + 1`.
    pub fn build(order: u32, n_check: usize) -> Result<Self> {
        let kmax = 2 * n_check;
        let mmax = 2 * kmax + order as usize + 1;
        // cutoff where t^mmax K_a(2t) < 1e-18, past the peak
        let target = 1e-18f64.ln();
        let mut r = (0.5 * mmax as f64).max(1.0);
        loop {
            let v = mmax as f64 * r.ln() + bessel_k_scaled(order, 2.0 * r)?.ln() - 2.0 * r;
            if v < target {
                break;
            }
            r += 0.5;
        }
        let mut stack: Vec<(f64, f64, u32)> = Vec::new();
        let edges: Vec<f64> = std::iter::once(0.0).chain((0..).map(|i| 0.5 * 2f64.powi(i)).take_while(|&e| e < r)).chain([r]).collect();
        for wnd in edges.windows(2).rev() {
            stack.push((wnd[0], wnd[1], 0));
        }
        let mut nodes = Vec::new();
        let mut panels = 0;
        while let Some((lo, hi, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let (whole, _) = panel(order, kmax, lo, hi)?;
            let (left, ln) = panel(order, kmax, lo, mid)?;
            let (right, rn) = panel(order, kmax, mid, hi)?;
            let err = whole.iter().zip(left.iter().zip(&right)).map(|(w, (l, r))| (w - l - r).abs()).fold(0.0, f64::max);
            if err < PANEL_TOL || depth >= MAX_DEPTH {
                nodes.extend(ln);
                nodes.extend(rn);
                panels += 2;
            } else {
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        let scheme = QuadratureScheme {
            order,
            radial_nodes: nodes.iter().map(|n| n.0).collect(),
            radial_weights: nodes.iter().map(|n| n.1).collect(),
            angular_nodes: 2 * n_check + 2,
            cutoff: r,
            panels,
            max_moment: mmax,
        };
        if let Some(bad) = scheme.moment_checks()?.into_iter().find(|m| !(m.relative_error < MOMENT_TOL)) {
            return Err(Error::QuadratureMoment { moment: bad.moment, error: bad.relative_error });
        }
        Ok(scheme)
    }

    /// Quadrature of each normalized moment against its closed form
    /// `∫ t^(2k+a+1) K_a(2t) dt = k!(k+a)!/4`.
    pub fn moment_checks(&self) -> Result<Vec<MomentCheck>> {
        let kmax = (self.max_moment - self.order as usize - 1) / 2;
        let mut acc = vec![0.0; kmax + 1];
        for (&t, &w) in self.radial_nodes.iter().zip(&self.radial_weights) {
            for (s, v) in acc.iter_mut().zip(moment_integrands(self.order, kmax, t)?) {
                *s += w * v;
            }
        }
        Ok(acc
            .into_iter()
            .enumerate()
            .map(|(k, v)| MomentCheck { order: self.order, moment: 2 * k + self.order as usize + 1, relative_error: (v - 1.0).abs() })
            .collect())
    }

    /// Uniform angular nodes on `[−π, π)` with weights for `dθ/π`.
    pub fn angles(&self) -> Vec<(f64, f64)> {
        let n = self.angular_nodes;
        (0..n).map(|j| (-PI + 2.0 * PI * j as f64 / n as f64, 2.0 / n as f64)).collect()
    }
}

/// Which side carries the deformation `f`; the other carries `1/f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// f-deformed ket with the dual bra
    KetF,
    /// dual ket with the f-deformed bra
    KetDual,
}

pub type Matrix = Vec<Vec<C64>>;

/// Even and odd halves of the assembled sector resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub charge: i64,
    pub even: Matrix,
    pub odd: Matrix,
}

impl Resolution {
    pub fn total(&self) -> Matrix {
        add(&self.even, &self.odd)
    }

    pub fn part(&self, j: usize) -> &Matrix {
        if j == 0 { &self.even } else { &self.odd }
    }
}

fn zeros(n: usize) -> Matrix {
    vec![vec![C64::new(0.0, 0.0); n]; n]
}

fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

fn sub(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn identity(n: usize) -> Matrix {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

fn diagonal_projector(n: usize, j: usize) -> Matrix {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        if i % 2 == j {
            row[i] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// Largest entry modulus.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Integrates the ket–bra density of charge `q` over the plane on the first
/// `n_check + 1` sector basis vectors.
pub fn assemble_resolution(
    q: i64,
    deform: &DeformationSpec,
    n_check: usize,
    scheme: &QuadratureScheme,
    pairing: Pairing,
) -> Result<Resolution> {
    let a = q.unsigned_abs() as usize;
    if scheme.order as usize != a {
        return Err(Error::Precondition(format!("scheme built for order {}, sector needs {a}", scheme.order)));
    }
    if scheme.max_moment < 2 * n_check + a + 1 || scheme.angular_nodes < 2 * n_check + 2 {
        return Err(Error::InsufficientNodes { given: scheme.angular_nodes, required: 2 * n_check + 2 });
    }
    let ket_dual = pairing == Pairing::KetDual;
    let mut ket_lc = LogCoefficients::new(deform, ket_dual);
    let mut bra_lc = LogCoefficients::new(deform, !ket_dual);
    let ket_c = (0..=n_check).map(|n| ket_lc.pair(n, a)).collect::<Result<Vec<_>>>()?;
    let bra_c = (0..=n_check).map(|n| bra_lc.pair(n, a)).collect::<Result<Vec<_>>>()?;
    let dim = n_check + 1;
    let mut even = zeros(dim);
    let mut odd = zeros(dim);
    let angles = scheme.angles();
    for (&r, &wr) in scheme.radial_nodes.iter().zip(&scheme.radial_weights) {
        // 2 r^a K_a(2r) · r dr
        let radial = wr * 2.0 * bessel_k_scaled(a as u32, 2.0 * r)? * ((a + 1) as f64 * r.ln() - 2.0 * r).exp();
        let lr = r.ln();
        for &(theta, wt) in &angles {
            let w = radial * wt;
            let ket: Vec<C64> = (0..dim).map(|n| C64::from_polar((n as f64 * lr + ket_c[n]).exp(), n as f64 * theta)).collect();
            let bra: Vec<C64> = (0..dim).map(|m| C64::from_polar((m as f64 * lr + bra_c[m]).exp(), -(m as f64) * theta)).collect();
            for n in 0..dim {
                let target = if n % 2 == 0 { &mut even } else { &mut odd };
                for m in (n % 2..dim).step_by(2) {
                    target[n][m] += w * ket[n] * bra[m];
                }
            }
        }
    }
    Ok(Resolution { charge: q, even, odd })
}

/// Residuals of the projector algebra of the two halves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorCheck {
    pub charge: i64,
    pub parity_index: usize,
    /// `‖P_j² − P_j‖`
    pub idempotence: f64,
    /// `‖P_j P_(1−j)‖`
    pub orthogonality: f64,
    /// `‖P_j − diag(n ≡ j mod 2)‖`
    pub projector: f64,
}

impl ProjectorCheck {
    pub fn worst(&self) -> f64 {
        self.idempotence.max(self.orthogonality).max(self.projector)
    }
}

pub fn sector_projector_check(res: &Resolution, j: usize) -> ProjectorCheck {
    let p = res.part(j);
    let other = res.part(1 - j);
    let n = p.len();
    ProjectorCheck {
        charge: res.charge,
        parity_index: j,
        idempotence: max_abs(&sub(&matmul(p, p), p)),
        orthogonality: max_abs(&matmul(p, other)),
        projector: max_abs(&sub(p, &diagonal_projector(n, j))),
    }
}

/// `max |I_q − 1|` elementwise.
pub fn identity_residual(res: &Resolution) -> f64 {
    let t = res.total();
    max_abs(&sub(&t, &identity(t.len())))
}

/// Schemes keyed by `|q|`, built once per order.
#[derive(Default)]
pub struct SchemeCache {
    n_check: usize,
    schemes: Vec<Option<QuadratureScheme>>,
}

impl SchemeCache {
    pub fn new(n_check: usize) -> Self {
        SchemeCache { n_check, schemes: Vec::new() }
    }

    pub fn get(&mut self, order: u32) -> Result<&QuadratureScheme> {
        let i = order as usize;
        if self.schemes.len() <= i {
            self.schemes.resize(i + 1, None);
        }
        if self.schemes[i].is_none() {
            self.schemes[i] = Some(QuadratureScheme::build(order, self.n_check)?);
        }
        Ok(self.schemes[i].as_ref().expect("built"))
    }
}

/// Sum of the sector resolutions for `|q| ≤ q_max`, restricted to the
/// two-mode box `n1, n2 ≤ n_box`; returns `max |Σ I_q − 1|` on the box.
pub fn box_check(deform: &DeformationSpec, n_box: usize, q_max: usize, cache: &mut SchemeCache) -> Result<f64> {
    let side = n_box + 1;
    let dim = side * side;
    let mut sum = zeros(dim);
    for q in -(q_max as i64)..=(q_max as i64) {
        let scheme = cache.get(q.unsigned_abs() as u32)?;
        let res = assemble_resolution(q, deform, n_box, scheme, Pairing::KetF)?;
        let total = res.total();
        let flat = |n: usize| {
            let (n1, n2) = crate::fock::sector_basis(q, n);
            (n1 <= n_box && n2 <= n_box).then_some(n1 * side + n2)
        };
        for (n, row) in total.iter().enumerate() {
            let Some(i) = flat(n) else { continue };
            for (m, v) in row.iter().enumerate() {
                if let Some(j) = flat(m) {
                    sum[i][j] += v;
                }
            }
        }
    }
    Ok(max_abs(&sub(&sum, &identity(dim))))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub charge: i64,
    pub deform: String,
    pub identity_residual: f64,
    pub conjugate_residual: f64,
    pub projectors: [ProjectorCheck; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub order: u32,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub panels: usize,
    pub cutoff: f64,
    pub max_moment: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxReport {
    pub deform: String,
    pub n_box: usize,
    pub q_max: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub n_check: usize,
    pub tolerance: f64,
    pub sectors: Vec<SectorReport>,
    pub moments: Vec<MomentCheck>,
    pub schemes: Vec<SchemeSummary>,
    pub boxes: Vec<BoxReport>,
    /// `max` over sectors of the spread of `I_q` across deformations
    pub deformation_spread: f64,
    pub pass: bool,
}

/// Resolution, projector, moment and box checks over a range of charges.
pub fn completeness_report(
    charges: &[i64],
    deforms: &[DeformationSpec],
    n_check: usize,
    n_box: usize,
    q_max: usize,
    tolerance: f64,
) -> Result<CompletenessReport> {
    let mut cache = SchemeCache::new(n_check.max(n_box));
    let mut sectors = Vec::new();
    let mut spread = 0.0f64;
    for &q in charges {
        let scheme = cache.get(q.unsigned_abs() as u32)?.clone();
        let mut reference: Option<Matrix> = None;
        for spec in deforms {
            let res = assemble_resolution(q, spec, n_check, &scheme, Pairing::KetF)?;
            let conj = assemble_resolution(q, spec, n_check, &scheme, Pairing::KetDual)?;
            let total = res.total();
            if let Some(r) = &reference {
                spread = spread.max(max_abs(&sub(r, &total)));
            } else {
                reference = Some(total);
            }
            sectors.push(SectorReport {
                charge: q,
                deform: spec.descriptor(),
                identity_residual: identity_residual(&res),
                conjugate_residual: identity_residual(&conj),
                projectors: [sector_projector_check(&res, 0), sector_projector_check(&res, 1)],
            });
        }
    }
    let mut boxes = Vec::new();
    if n_box > 0 {
        for spec in deforms {
            boxes.push(BoxReport { deform: spec.descriptor(), n_box, q_max, residual: box_check(spec, n_box, q_max, &mut cache)? });
        }
    }
    let mut moments = Vec::new();
    let mut schemes = Vec::new();
    for s in cache.schemes.iter().flatten() {
        moments.extend(s.moment_checks()?);
        schemes.push(SchemeSummary {
            order: s.order,
            radial_nodes: s.radial_nodes.len(),
            angular_nodes: s.angular_nodes,
            panels: s.panels,
            cutoff: s.cutoff,
            max_moment: s.max_moment,
        });
    }
    let pass = sectors.iter().all(|s| {
        s.identity_residual < tolerance && s.conjugate_residual < tolerance && s.projectors.iter().all(|p| p.worst() < tolerance)
    }) && boxes.iter().all(|b| b.residual < tolerance)
        && moments.iter().all(|m| m.relative_error < MOMENT_TOL)
        && spread < tolerance;
    Ok(CompletenessReport { n_check, tolerance, sectors, moments, schemes, boxes, deformation_spread: spread, pass })
}
