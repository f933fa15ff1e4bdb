//! `conelab` command-line driver.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conelab::certificate::{self, Certificate};
use conelab::compalg::{self, AlgebraKind, ProtocolCone};
use conelab::cones::{self, ConeHandle, IsotropicMap, LinearMapDense};
use conelab::hurwitz;
use conelab::jordan::JordanElement;
use conelab::norms::{self, Space};
use conelab::psdmaps::{self, HermMap};
use conelab::serde_util;
use conelab::sinkhorn;
use conelab::suite::{self, SuiteConfig};
use conelab::tensor::Tensor;
use conelab::Error;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "conelab", version, about = "Numerical experiments on cone tensor products and positive maps")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Seed for every sampled quantity.
    #[arg(long, global = true, env = "CONELAB_SEED", default_value_t = suite::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Cap on enumeration work for exponential searches.
    #[arg(long, global = true, default_value_t = 1 << 30)]
    budget: u128,
    #[arg(long, global = true, value_enum)]
    output: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long = "out", global = true)]
    out_path: Option<PathBuf>,
    /// Record wall-clock timings in the report.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Protocol step, iteration and threshold on the Lorentz cone of A1 ⊕ A2.
    Protocol {
        #[arg(long)]
        alg1: AlgebraKind,
        #[arg(long)]
        alg2: AlgebraKind,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        beta: Option<f64>,
        /// Iterate from BETA0 for STEPS steps.
        #[arg(long, num_args = 2, value_names = ["BETA0", "STEPS"])]
        iterate: Option<Vec<f64>>,
        #[arg(long)]
        threshold: bool,
    },
    /// Hurwitz witness tensor z_{n,k}.
    Witness {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Also emit z± = e0^{⊗k} ± z.
        #[arg(long)]
        pair: bool,
        /// Necessary annihilation bounds for I_{alpha,beta} up to this k.
        #[arg(long)]
        eb_bounds: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Bounds on τ_k of a map (the identity unless --map is given).
    Tau {
        #[arg(long, value_parser = ["l1", "l2", "linf"])]
        space: String,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        kmax: usize,
        /// Matrix file `[[f64]]`.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Tensor and operator norms.
    Norm {
        #[arg(long, value_parser = ["eps", "pi", "nuclear", "op"])]
        kind: String,
        /// Nested-array tensor (eps, pi) or matrix (nuclear, op).
        #[arg(long)]
        file: PathBuf,
        /// Space kind for tensor norms; the dimension comes from the tensor.
        #[arg(long, default_value = "l2")]
        space: String,
        /// Domain space for operator norms, e.g. `l1:3`.
        #[arg(long)]
        from: Option<Space>,
        /// Codomain space for operator norms.
        #[arg(long)]
        to: Option<Space>,
    },
    /// Scale a strictly positive map to be unital and trace preserving.
    Sinkhorn {
        #[arg(long)]
        cone: ConeHandle,
        /// Matrix file `{matrix: [[f64]]}` or `[[f64]]` in cone coordinates.
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
    },
    /// Explicit minimal-product decomposition of (id ⊗ I_{√k})(x).
    Ell1break {
        #[arg(long)]
        cone: ConeHandle,
        #[arg(long)]
        k: usize,
        /// `[x0, x1, …, xk]` as coordinate vectors.
        #[arg(long)]
        input: PathBuf,
    },
    /// Lorentz-cone factorization of a map on Hermitian matrices.
    Factorize {
        /// `reduction:d`, `breuer-hall` or a map file `{d_in, d_out, matrix}`.
        #[arg(long)]
        map: String,
    },
    /// Maximal tensor product membership tests.
    Membership {
        /// `[X0, X1, …]` in Hermitian-basis coordinates.
        #[arg(long, conflicts_with = "ell1")]
        psd_lorentz: Option<PathBuf>,
        /// `[x0, x1, …, xk]` tested against C ⊗max C_{ℓ1^k}.
        #[arg(long, requires = "cone")]
        ell1: Option<PathBuf>,
        #[arg(long)]
        cone: Option<ConeHandle>,
    },
    /// Issue or re-check a non-annihilation certificate.
    Certify {
        /// Re-check a certificate file instead of issuing one.
        #[arg(long)]
        check: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Run the acceptance battery.
    Suite {
        #[arg(long)]
        quick: bool,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<usize>>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Protocol { .. } => "protocol",
            Command::Witness { .. } => "witness",
            Command::Tau { .. } => "tau",
            Command::Norm { .. } => "norm",
            Command::Sinkhorn { .. } => "sinkhorn",
            Command::Ell1break { .. } => "ell1break",
            Command::Factorize { .. } => "factorize",
            Command::Membership { .. } => "membership",
            Command::Certify { .. } => "certify",
            Command::Suite { .. } => "suite",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RunConfig {
    seed: u64,
    tol: f64,
    budget: u128,
    output: Format,
    out_path: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Report {
    command: String,
    config: RunConfig,
    results: Value,
    certificates: Vec<Certificate>,
    timings: BTreeMap<String, f64>,
}

/// What a subcommand produced: its payload, any certificates, an optional
/// CSV projection and whether it counts as a verification failure.
struct Outcome {
    results: Value,
    certificates: Vec<Certificate>,
    csv: Option<String>,
    failed: Option<String>,
}

impl Outcome {
    fn ok(results: Value) -> Self {
        Self { results, certificates: Vec::new(), csv: None, failed: None }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::OutOfRange(_) | Error::DimensionMismatch { .. } | Error::Unsupported(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

/// A matrix file: either `[[f64]]` or an object with a `matrix` field.
fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let v: Value = read_json(path)?;
    let rows = v.get("matrix").cloned().unwrap_or(v);
    let rows: Vec<Vec<f64>> = serde_json::from_value(rows).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_util::matrix_from_rows(&rows).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn parse_space(kind: &str, n: usize) -> Result<Space, CliError> {
    Ok(Space::from_kind(kind, n)?)
}

fn run(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cmd {
        Command::Protocol { alg1, alg2, alpha, beta, iterate, threshold } => {
            let p = ProtocolCone::new(*alg1, *alg2)?;
            let step = beta.map(|b| p.step(*alpha, b));
            let trajectory = match iterate.as_deref() {
                Some([b0, steps]) => p.iterate(*b0, *steps as usize),
                _ => Vec::new(),
            };
            let threshold = if *threshold { Some(compalg::protocol_threshold(&p, cfg.tol.min(1e-12))?) } else { None };
            Ok(Outcome::ok(json!({
                "N": p.big_n(),
                "n": p.n(),
                "alpha_prime": step.map(|s| s.alpha_prime),
                "beta_prime": step.map(|s| s.beta_prime),
                "threshold": threshold,
                "trajectory": trajectory,
            })))
        }
        Command::Witness { n, k, pair, eb_bounds, alpha, beta } => {
            let w = hurwitz::witness_tensor_with_budget(*n, *k, cfg.budget)?;
            let mut out = json!({
                "n": w.n,
                "k": w.k,
                "N": w.big_n,
                "sq_norm": w.sq_norm,
                "i0": w.source.0,
                "j0": w.source.1,
                "total_sq_norm": w.total_sq_norm as f64,
                "tensor": {"dims": w.coords.dims(), "index_order": "row-major", "data": w.coords.data()},
            });
            if *pair {
                let p = hurwitz::lorentz_witness_pair(*n, *k)?;
                out["pair"] = json!({
                    "dims": p.z_plus.dims(),
                    "index_order": "row-major",
                    "z_plus": p.z_plus.data(),
                    "z_minus": p.z_minus.data(),
                });
            }
            if let Some(kmax) = eb_bounds {
                let ks: Vec<usize> = (1..=*kmax).collect();
                out["bounds"] = to_value(&hurwitz::eb_bound_from_witness(*n, *alpha, *beta, &ks)?)?;
            }
            Ok(Outcome::ok(out))
        }
        Command::Tau { space, dim, kmax, map } => {
            let x = parse_space(space, *dim)?;
            let t = match map {
                Some(path) => read_matrix(path)?,
                None => DMatrix::identity(*dim, *dim),
            };
            let mut rows = Vec::new();
            let mut csv = String::from("k,lower,upper\n");
            for k in 1..=*kmax {
                let b = norms::tau_bounds(&t, x, x, k)?;
                csv.push_str(&format!("{},{},{}\n", b.k, b.lower, b.upper));
                rows.push(b);
            }
            Ok(Outcome { csv: Some(csv), ..Outcome::ok(to_value(&rows)?) })
        }
        Command::Norm { kind, file, space, from, to } => match kind.as_str() {
            "eps" | "pi" => {
                let v: Value = read_json(file)?;
                let t = Tensor::from_nested(&v)?;
                let n = t.dims().first().copied().unwrap_or(0);
                let x = parse_space(space, n)?;
                let value = if kind == "eps" {
                    norms::injective_norm_with_budget(&t, x, t.order(), cfg.budget)?
                } else {
                    norms::projective_norm(&t, x, t.order())?
                };
                Ok(Outcome::ok(json!({"kind": kind, "space": x, "k": t.order(), "norm": value})))
            }
            _ => {
                let p = read_matrix(file)?;
                let x = from.unwrap_or(Space::L2(p.ncols()));
                let y = to.unwrap_or(Space::L2(p.nrows()));
                let value = if kind == "op" {
                    let v = norms::operator_norm(&p, x, y)?;
                    json!({"value": v, "exact": true, "lower": v, "upper": v})
                } else {
                    to_value(&norms::nuclear_norm(&p, x, y)?)?
                };
                Ok(Outcome::ok(json!({"kind": kind, "from": x, "to": y, "norm": value})))
            }
        },
        Command::Sinkhorn { cone, map, max_iter } => {
            let m = read_matrix(map)?;
            let p = LinearMapDense::new(m, *cone, *cone)?;
            let r = sinkhorn::sinkhorn_scale(&p, cfg.tol, *max_iter)?;
            let failed = (r.residual_unital > cfg.tol || r.residual_trace > cfg.tol)
                .then(|| format!("residuals {:e}, {:e} exceed tol", r.residual_unital, r.residual_trace));
            Ok(Outcome { failed, ..Outcome::ok(to_value(&r)?) })
        }
        Command::Ell1break { cone, k, input } => {
            let algebra = cone.algebra().ok_or_else(|| CliError::Usage(format!("{cone} is not a symmetric cone")))?;
            let coords: Vec<Vec<f64>> = read_json(input)?;
            if coords.len() != k + 1 {
                return Err(CliError::Usage(format!("expected {} vectors, found {}", k + 1, coords.len())));
            }
            let xs = coords.iter().map(|c| JordanElement::new(algebra, c.clone())).collect::<Result<Vec<_>, _>>()?;
            match sinkhorn::ell1_break_decompose(&xs, cfg.tol) {
                Ok(d) => {
                    let check = d.verify(1e-10)?;
                    let cert = d.to_certificate(cfg.tol)?;
                    let failed = (!check.valid).then(|| format!("decomposition residual {:e}", check.residual));
                    Ok(Outcome {
                        results: json!({"decomposition": d, "verification": check}),
                        certificates: vec![cert],
                        csv: None,
                        failed,
                    })
                }
                Err(Error::MaxMembershipViolated { sign }) => {
                    let cert = Certificate::max_violation(*cone, coords, sign.clone(), cfg.tol)?;
                    Ok(Outcome {
                        results: json!({"accepted": false, "violating_sign": sign}),
                        certificates: vec![cert],
                        csv: None,
                        failed: Some("input is not in the maximal tensor product".into()),
                    })
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Factorize { map } => {
            let p = match map.as_str() {
                "breuer-hall" => psdmaps::breuer_hall(),
                s if s.starts_with("reduction:") => {
                    let d = s["reduction:".len()..].parse().map_err(|_| CliError::Usage(format!("bad map '{s}'")))?;
                    psdmaps::reduction(d)
                }
                path => read_json::<HermMap>(Path::new(path))?,
            };
            let report = psdmaps::lorentz_factorize(&p, cfg.tol)?;
            let spectrum = psdmaps::spectrum(&p, cfg.tol)?;
            let theta = psdmaps::transpose_composed_spectrum(&p, cfg.tol).ok();
            Ok(Outcome::ok(json!({
                "k": report.k,
                "lambdas": report.lambdas,
                "residual": report.residual,
                "accepted": report.accepted,
                "refusal": report.refusal,
                "spectrum": spectrum,
                "transpose_composed_spectrum": theta,
                "factorization": report.factorization,
            })))
        }
        Command::Membership { psd_lorentz, ell1, cone } => {
            if let Some(path) = psd_lorentz {
                let coords: Vec<Vec<f64>> = read_json(path)?;
                let mats = coords
                    .iter()
                    .map(|c| {
                        let d = (c.len() as f64).sqrt().round() as usize;
                        Ok(JordanElement::new(conelab::jordan::Algebra::Hermitian(d), c.clone())?.to_matrix()?)
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let m = psdmaps::lorentz_psd_max_membership(&mats, cfg.tol)?;
                Ok(Outcome::ok(to_value(&m)?))
            } else if let (Some(path), Some(cone)) = (ell1, cone) {
                let xs: Vec<Vec<f64>> = read_json(path)?;
                let m = cones::max_membership_ell1_factor(cone, &xs, cfg.tol)?;
                let mut out = Outcome::ok(to_value(&m)?);
                if let Some(sign) = &m.violating_sign {
                    out.certificates.push(Certificate::max_violation(*cone, xs, sign.clone(), cfg.tol)?);
                }
                Ok(out)
            } else {
                Err(CliError::Usage("membership needs --psd-lorentz FILE or --cone C --ell1 FILE".into()))
            }
        }
        Command::Certify { check, n, k, alpha, beta } => {
            if let Some(path) = check {
                // Either a bare certificate or a report carrying `certificates`.
                let v: Value = read_json(path)?;
                let certs: Vec<Certificate> = match v.get("certificates") {
                    Some(list) => serde_json::from_value(list.clone()),
                    None => serde_json::from_value(v).map(|c| vec![c]),
                }
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                if certs.is_empty() {
                    return Err(CliError::Usage(format!("{}: no certificates", path.display())));
                }
                let checks: Vec<_> = certs.iter().map(Certificate::verify).collect();
                let failed = checks.iter().find(|c| !c.valid).map(|c| c.detail.clone());
                return Ok(Outcome { failed, ..Outcome::ok(to_value(&checks)?) });
            }
            let pair = hurwitz::lorentz_witness_pair(*n, *k)?;
            let cone = ConeHandle::Lorentz(*n);
            let p = IsotropicMap::new(*alpha, *beta, *n).as_map(cone)?;
            let value = certificate::pairing(&p, *k, &pair.z_plus, &pair.z_minus)?;
            let cert = certificate::certify_not_annihilating(&p, *k, &pair.z_plus, &pair.z_minus, cfg.tol)?;
            let mut out = Outcome::ok(json!({"pairing": value, "issued": cert.is_some()}));
            if let Some(c) = cert {
                let check = c.verify();
                out.results["check"] = to_value(&check)?;
                if !check.valid {
                    out.failed = Some(check.detail.clone());
                }
                out.certificates.push(c.with_seed(cfg.seed));
            }
            Ok(out)
        }
        Command::Suite { quick, only } => {
            let sc = SuiteConfig { seed: cfg.seed, quick: *quick };
            let ids: Vec<usize> = only.clone().unwrap_or_else(|| (1..=suite::CRITERIA).collect());
            let outcomes: Vec<_> = ids.iter().map(|&id| suite::run_criterion(id, &sc)).collect();
            let mut csv = String::from("id,name,passed,seconds\n");
            for o in &outcomes {
                eprintln!("{o}");
                csv.push_str(&format!("{},{},{},{}\n", o.id, o.name, o.passed, o.seconds));
            }
            let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
            Ok(Outcome {
                results: to_value(&outcomes)?,
                certificates: Vec::new(),
                csv: Some(csv),
                failed: (!failed.is_empty()).then(|| format!("criteria {failed:?} failed")),
            })
        }
    }
}

/// Writes via a temporary file and a rename so readers never see a partial
/// report.
fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let default_format = if matches!(cli.command, Command::Tau { .. }) { Format::Csv } else { Format::Json };
    let cfg = RunConfig {
        seed: cli.config.seed,
        tol: cli.config.tol,
        budget: cli.config.budget,
        output: cli.config.output.unwrap_or(default_format),
        out_path: cli.config.out_path.clone(),
    };
    let start = Instant::now();
    let outcome = match run(&cli.command, &cfg) {
        Ok(o) => o,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let mut timings = BTreeMap::new();
    if cli.config.timings {
        timings.insert("total_seconds".to_string(), start.elapsed().as_secs_f64());
    }
    let text = match (cfg.output, &outcome.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        (Format::Csv, None) => {
            eprintln!("error: {} has no CSV form", cli.command.name());
            return ExitCode::from(2);
        }
        (Format::Json, _) => {
            let report = Report {
                command: cli.command.name().to_string(),
                config: cfg.clone(),
                results: outcome.results,
                certificates: outcome.certificates,
                timings,
            };
            match serde_json::to_string_pretty(&report) {
                Ok(s) => s + "\n",
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
        }
    };
    let written = match &cfg.out_path {
        Some(path) => write_atomic(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match outcome.failed {
        Some(msg) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        None => ExitCode::SUCCESS,
    }
}
