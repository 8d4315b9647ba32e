use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use charge_coherent::dalg::dalgebra_report;
use charge_coherent::nonclass::{
    antibunch_report_tol, coth_csv, coth_scan, power_family, single_mode_report_tol, suf11_report_tol,
    two_mode_report_tol, CLOSED_FORM_TOL,
};
use charge_coherent::numeric::log_space;
use charge_coherent::resolve::completeness_report;
use charge_coherent::states::{
    build_state, generate_by_projection, overlap, required_nodes, schmidt_profile, Parity, StateRecord, StateRequest,
    Truncation,
};
use charge_coherent::{fock::sector_basis, DeformationSpec, Error, C64};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ccs", version, about = "Charge coherent state verifications and scans")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// identity | qdef:<q> | power:<p> | table:<path>
    #[arg(long, global = true)]
    deform: Option<String>,
    /// |ξ|
    #[arg(long, global = true, conflicts_with = "xi")]
    xi_mod: Option<f64>,
    /// arg ξ in radians
    #[arg(long, global = true, conflicts_with = "xi")]
    xi_arg: Option<f64>,
    /// ξ in Cartesian form: `re` or `re,im`
    #[arg(long, global = true, allow_hyphen_values = true)]
    xi: Option<String>,
    #[arg(long, global = true, default_value_t = 0, allow_negative_numbers = true)]
    charge: i64,
    #[arg(long, global = true, default_value = "even")]
    parity: String,
    /// auto | <int>
    #[arg(long, global = true, default_value = "auto")]
    nmax: String,
    /// output file (a directory for `cothscan` CSV)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// override the command's default tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SqueezeFamily {
    Suf11,
    Single,
    Two,
}

#[derive(Subcommand)]
enum Command {
    /// Build a state and write its amplitudes
    State,
    /// Closed-form against direct overlap of two states
    Overlap {
        #[arg(long)]
        xi2_mod: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        xi2_arg: f64,
        /// parity of the second state (defaults to the first one's)
        #[arg(long)]
        parity2: Option<String>,
    },
    /// Quadrature variances and squeezing verdicts
    Squeeze {
        #[arg(long, value_enum)]
        family: SqueezeFamily,
        /// mode for `--family single`
        #[arg(long, default_value_t = 1)]
        mode: u8,
    },
    /// Two-mode correlation g2(0)
    Antibunch,
    /// coth̄ against x, one CSV per |q| panel
    Cothscan {
        /// |q| panels; each covers q and −q
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        q: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        p: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        x_min: f64,
        #[arg(long, default_value_t = 200.0)]
        x_max: f64,
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
    /// Resolution of the identity, projector algebra and box check
    Completeness {
        /// inclusive charge range `lo..hi`
        #[arg(long, default_value = "-4..4", allow_hyphen_values = true)]
        q_range: String,
        #[arg(long, default_value_t = 6)]
        n_check: usize,
        #[arg(long, default_value_t = 6)]
        n_box: usize,
        #[arg(long, default_value_t = 12)]
        q_max: usize,
    },
    /// Differential-operator realization of the ladder operators
    Dalgebra {
        #[arg(long, value_delimiter = ',', default_value = "0,1,3,-2", allow_hyphen_values = true)]
        charges: Vec<i64>,
        #[arg(long, default_value_t = 24)]
        degree: usize,
    },
    /// Sector state by phase averaging of single-mode states
    Generate {
        #[arg(long)]
        xi1_mod: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        xi1_arg: f64,
        #[arg(long)]
        xi2_mod: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        xi2_arg: f64,
        /// angular nodes (default: the minimum for exactness)
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Schmidt coefficients and entanglement entropy
    Schmidt,
}

enum Failure {
    Usage(String),
    Tolerance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ClosedFormMismatch { .. } | Error::QuadratureMoment { .. } | Error::TruncationDidNotConverge { .. } => {
                Failure::Tolerance(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Run = Result<(), Failure>;

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    command: &'static str,
    tolerance: Option<f64>,
    pass: bool,
    failures: Vec<String>,
    report: T,
}

fn write_out(out: Option<&Path>, text: &str) -> Run {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit<T: Serialize>(c: &Common, command: &'static str, tolerance: Option<f64>, failures: Vec<String>, report: T) -> Run {
    if c.format == Format::Csv {
        return Err(Failure::Usage(format!("--format csv is not available for `{command}`")));
    }
    let pass = failures.is_empty();
    let env = Envelope { command, tolerance, pass, failures: failures.clone(), report };
    let text = serde_json::to_string_pretty(&env).expect("serializable report") + "\n";
    write_out(c.out.as_deref(), &text)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Tolerance(failures.join("; ")))
    }
}

impl Common {
    fn deform(&self) -> Result<DeformationSpec, Failure> {
        Ok(self.deform.as_deref().unwrap_or("identity").parse::<DeformationSpec>()?)
    }

    fn xi(&self) -> Result<C64, Failure> {
        if let Some(s) = &self.xi {
            let parts: Vec<&str> = s.split(',').collect();
            let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("invalid --xi `{s}`")));
            return match parts.as_slice() {
                [re] => Ok(C64::new(num(re)?, 0.0)),
                [re, im] => Ok(C64::new(num(re)?, num(im)?)),
                _ => Err(Failure::Usage(format!("invalid --xi `{s}` (expected re or re,im)"))),
            };
        }
        Ok(C64::from_polar(self.xi_mod.unwrap_or(1.0), self.xi_arg.unwrap_or(0.0)))
    }

    fn request(&self) -> Result<StateRequest, Failure> {
        let parity: Parity = self.parity.parse()?;
        let truncation: Truncation = self.nmax.parse()?;
        Ok(StateRequest::new(self.xi()?, self.charge, parity, self.deform()?).with_truncation(truncation))
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

fn state(c: &Common) -> Run {
    let req = c.request()?;
    let (s, _) = build_state(&req)?;
    if c.format == Format::Csv {
        let mut text = String::from("n,n1,n2,re,im\n");
        for (n, a) in s.amplitudes.iter().enumerate() {
            let (n1, n2) = sector_basis(s.charge, n);
            text.push_str(&format!("{n},{n1},{n2},{},{}\n", a.re, a.im));
        }
        return write_out(c.out.as_deref(), &text);
    }
    emit(c, "state", None, vec![], StateRecord::new(&req, &s))
}

#[derive(Serialize)]
struct OverlapOut {
    closed_form: [f64; 2],
    direct: [f64; 2],
    orthogonal: bool,
    discrepancy: f64,
}

fn overlap_cmd(c: &Common, xi2_mod: f64, xi2_arg: f64, parity2: &Option<String>) -> Run {
    let a = c.request()?;
    let mut b = a.clone().with_xi(C64::from_polar(xi2_mod, xi2_arg));
    if let Some(p) = parity2 {
        b = b.with_parity(p.parse()?);
    }
    let r = overlap(&a, &b)?;
    let tol = c.tol(1e-12);
    let d = r.discrepancy();
    let failures = if d < tol { vec![] } else { vec![format!("overlap discrepancy {d:e}")] };
    let out = OverlapOut { closed_form: [r.closed_form.re, r.closed_form.im], direct: [r.direct.re, r.direct.im], orthogonal: r.orthogonal, discrepancy: d };
    emit(c, "overlap", Some(tol), failures, out)
}

fn squeeze(c: &Common, family: SqueezeFamily, mode: u8) -> Run {
    let req = c.request()?;
    let tol = c.tol(CLOSED_FORM_TOL);
    let report = match family {
        SqueezeFamily::Suf11 => suf11_report_tol(&req, tol)?,
        SqueezeFamily::Single => single_mode_report_tol(&req, mode, tol)?,
        SqueezeFamily::Two => two_mode_report_tol(&req, tol)?,
    };
    emit(c, "squeeze", Some(tol), vec![], report)
}

fn antibunch(c: &Common) -> Run {
    let req = c.request()?;
    let tol = c.tol(CLOSED_FORM_TOL);
    emit(c, "antibunch", Some(tol), vec![], antibunch_report_tol(&req, tol)?)
}

#[derive(Serialize)]
struct Panel {
    abs_charge: u32,
    p: f64,
    charge: i64,
    window: Option<(f64, f64)>,
    x: Vec<f64>,
    coth: Vec<f64>,
}

fn cothscan(c: &Common, qs: &[u32], ps: &[f64], x_min: f64, x_max: f64, points: usize) -> Run {
    if !(x_min > 0.0 && x_max > x_min && points >= 2) {
        return Err(Failure::Usage("grid needs 0 < x-min < x-max and at least 2 points".into()));
    }
    let grid = log_space(x_min, x_max, points);
    let tol = c.tol(1e-12);
    let mut failures = Vec::new();
    let mut panels = Vec::new();
    let mut files = Vec::new();
    for &a in qs {
        let mut scans = Vec::new();
        let charges: Vec<i64> = if a == 0 { vec![0] } else { vec![a as i64, -(a as i64)] };
        for &p in ps {
            let spec = power_family(p)?;
            let mut by_sign = Vec::new();
            for &q in &charges {
                let s = coth_scan(q, &spec, &grid)?;
                panels.push(Panel {
                    abs_charge: a,
                    p,
                    charge: q,
                    window: s.window,
                    x: s.rows.iter().map(|r| r.x).collect(),
                    coth: s.rows.iter().map(|r| r.coth).collect(),
                });
                by_sign.push(s.clone());
                scans.push((p, s));
            }
            if let [plus, minus] = by_sign.as_slice() {
                let spread = plus.rows.iter().zip(&minus.rows).map(|(u, v)| ((u.coth - v.coth) / u.coth).abs()).fold(0.0, f64::max);
                if spread > tol {
                    failures.push(format!("±{a} curves differ by {spread:e} at p={p}"));
                }
            }
        }
        files.push((a, coth_csv(&scans)));
    }
    if c.format == Format::Csv {
        match &c.out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
                for (a, text) in &files {
                    write_out(Some(&dir.join(format!("coth_q{a}.csv"))), text)?;
                }
            }
            None => {
                for (_, text) in &files {
                    print!("{text}");
                }
            }
        }
        return if failures.is_empty() { Ok(()) } else { Err(Failure::Tolerance(failures.join("; "))) };
    }
    emit(c, "cothscan", Some(tol), failures, panels)
}

fn parse_range(s: &str) -> Result<Vec<i64>, Failure> {
    let bad = || Failure::Usage(format!("invalid range `{s}` (expected lo..hi)"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn default_families(c: &Common) -> Result<Vec<DeformationSpec>, Failure> {
    match &c.deform {
        Some(_) => Ok(vec![c.deform()?]),
        None => Ok(vec![
            DeformationSpec::Identity,
            DeformationSpec::power_law(2.0)?,
            DeformationSpec::q_deformed(2.0)?,
        ]),
    }
}

fn completeness(c: &Common, q_range: &str, n_check: usize, n_box: usize, q_max: usize) -> Run {
    let charges = parse_range(q_range)?;
    let tol = c.tol(1e-8);
    let r = completeness_report(&charges, &default_families(c)?, n_check, n_box, q_max, tol)?;
    let failures = if r.pass { vec![] } else { vec!["completeness residual above tolerance".into()] };
    emit(c, "completeness", Some(tol), failures, r)
}

fn dalgebra(c: &Common, charges: &[i64], degree: usize) -> Run {
    let tol = c.tol(1e-12);
    let specs = match &c.deform {
        Some(_) => vec![c.deform()?],
        None => vec![DeformationSpec::power_law(2.0)?, DeformationSpec::q_deformed(2.0)?],
    };
    let r = dalgebra_report(charges, &specs, degree, tol, c.seed)?;
    let failures = if r.pass { vec![] } else { vec!["coefficient residual above tolerance".into()] };
    emit(c, "dalgebra", Some(tol), failures, r)
}

#[derive(Serialize)]
struct GenerateOut {
    fidelity: f64,
    norm: f64,
    off_sector: f64,
    nodes: usize,
    nmax: usize,
}

fn generate(c: &Common, xi1: C64, xi2: C64, nodes: Option<usize>) -> Run {
    let parity: Parity = c.parity.parse()?;
    let deform = c.deform()?;
    let (target, _) = build_state(&StateRequest::new(xi1 * xi2, c.charge, parity, deform.clone()))?;
    let nodes = nodes.unwrap_or_else(|| required_nodes(target.nmax(), c.charge));
    let r = generate_by_projection(xi1, xi2, c.charge, parity, &deform, nodes)?;
    let tol = c.tol(1e-10);
    let failures = if r.fidelity > 1.0 - tol { vec![] } else { vec![format!("fidelity 1 − {:e}", 1.0 - r.fidelity)] };
    let out = GenerateOut { fidelity: r.fidelity, norm: r.norm, off_sector: r.off_sector, nodes: r.nodes, nmax: r.state.nmax() };
    emit(c, "generate", Some(tol), failures, out)
}

fn schmidt(c: &Common) -> Run {
    let (s, _) = build_state(&c.request()?)?;
    let profile = schmidt_profile(&s);
    if c.format == Format::Csv {
        let mut text = String::from("k,coefficient\n");
        for (k, v) in profile.coefficients.iter().enumerate() {
            text.push_str(&format!("{k},{v}\n"));
        }
        return write_out(c.out.as_deref(), &text);
    }
    emit(c, "schmidt", None, vec![], profile)
}

fn run(cli: &Cli) -> Run {
    let c = &cli.common;
    match &cli.command {
        Command::State => state(c),
        Command::Overlap { xi2_mod, xi2_arg, parity2 } => overlap_cmd(c, *xi2_mod, *xi2_arg, parity2),
        Command::Squeeze { family, mode } => squeeze(c, *family, *mode),
        Command::Antibunch => antibunch(c),
        Command::Cothscan { q, p, x_min, x_max, points } => cothscan(c, q, p, *x_min, *x_max, *points),
        Command::Completeness { q_range, n_check, n_box, q_max } => completeness(c, q_range, *n_check, *n_box, *q_max),
        Command::Dalgebra { charges, degree } => dalgebra(c, charges, *degree),
        Command::Generate { xi1_mod, xi1_arg, xi2_mod, xi2_arg, nodes } => {
            generate(c, C64::from_polar(*xi1_mod, *xi1_arg), C64::from_polar(*xi2_mod, *xi2_arg), *nodes)
        }
        Command::Schmidt => schmidt(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance(msg)) => {
            eprintln!("tolerance failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
