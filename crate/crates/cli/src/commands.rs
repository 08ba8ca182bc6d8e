use std::fs;
use std::path::Path;

use serde::Serialize;

use tndg::census::{self, CensusConfig, CensusKind, ECount, SweepResult};
use tndg::heigen::{self, HEigenPairRecord};
use tndg::io::{self, LoadedTensor};
use tndg::odeco::{self, OdecoEigenpairSet, SymOdecoSpec};
use tndg::svt::{self, SingularTupleRecord, SvtMultistartOptions};
use tndg::zeigen::{self, CertificationReport, MultistartOptions};
use tndg::SymmetricTensor;

use crate::{CensusArgs, Common, Failure, OdecoAction, OracleKind, SolveKind, SpecArgs};

const VERSION: &str = concat!("tndg ", env!("CARGO_PKG_VERSION"));

/// Resolved settings echoed into every report.
#[derive(Debug, Serialize)]
struct RunConfig {
    command: String,
    input: Option<String>,
    output: Option<String>,
    seed: u64,
    tol: f64,
    cert_tol: f64,
    maxit: usize,
    starts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
}

impl RunConfig {
    fn new(command: String, common: &Common, tol: f64) -> Result<Self, Failure> {
        for (name, t) in [("--tol", tol), ("--cert-tol", common.cert_tol)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Failure::Input(format!(
                    "{name} must be positive and finite, got {t}"
                )));
            }
        }
        Ok(Self {
            command,
            input: common.input.as_ref().map(|p| p.display().to_string()),
            output: common.out.as_ref().map(|p| p.display().to_string()),
            seed: common.seed,
            tol,
            cert_tol: common.cert_tol,
            maxit: common.maxit,
            starts: common.starts,
            grid: None,
            trials: None,
        })
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    version: &'static str,
    config: &'a RunConfig,
    result: T,
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report<T: Serialize>(config: &RunConfig, common: &Common, result: T) -> Result<(), Failure> {
    emit(
        common.out.as_deref(),
        &Report {
            version: VERSION,
            config,
            result,
        },
    )
}

fn read_input(common: &Common) -> Result<String, Failure> {
    let path = common
        .input
        .as_ref()
        .ok_or_else(|| Failure::Input("missing --in".into()))?;
    fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_tensor(common: &Common) -> Result<LoadedTensor, Failure> {
    Ok(io::parse_tensor(&read_input(common)?)?)
}

/// Symmetric view of a loaded tensor; files not flagged symmetric are
/// accepted when their entries pass the symmetry check.
fn symmetric(loaded: LoadedTensor) -> Result<SymmetricTensor, Failure> {
    if let Some(s) = loaded.symmetric {
        return Ok(s);
    }
    if !loaded.tensor.has_equal_dims() {
        return Err(Failure::Input(format!(
            "field `dims`: {:?} is not symmetric-shaped",
            loaded.tensor.dims()
        )));
    }
    SymmetricTensor::from_dense(loaded.tensor, tndg::SymmetryMode::verify())
        .map_err(|e| Failure::Input(format!("field `entries`: {e}")))
}

#[derive(Serialize)]
struct ZPairReport {
    lambda: f64,
    x: Vec<f64>,
    residual: f64,
    certification: CertificationReport,
}

#[derive(Serialize)]
struct SolveZResult {
    pairs: Vec<ZPairReport>,
    unconverged_starts: usize,
}

#[derive(Serialize)]
struct TupleReport {
    #[serde(flatten)]
    tuple: SingularTupleRecord,
    certification: CertificationReport,
}

#[derive(Serialize)]
struct SolveSvtResult {
    tuples: Vec<TupleReport>,
    unconverged_starts: usize,
}

#[derive(Serialize)]
struct HPairReport {
    #[serde(flatten)]
    pair: HEigenPairRecord,
    /// Absent for merged roots and positive-dimensional eigenvalues.
    nondegenerate: Option<bool>,
}

#[derive(Serialize)]
struct SolveHResult {
    charpoly: Vec<f64>,
    degree: usize,
    expected_degree: usize,
    deficient: bool,
    eigenvalues: Vec<([f64; 2], usize)>,
    pairs: Vec<HPairReport>,
}

pub fn solve(kind: SolveKind, common: &Common) -> Result<(), Failure> {
    let name = match kind {
        SolveKind::Z => "solve z",
        SolveKind::Svt => "solve svt",
        SolveKind::H => "solve h",
    };
    let default_tol = match kind {
        SolveKind::H => 1e-8,
        _ => 1e-12,
    };
    let config = RunConfig::new(name.into(), common, common.tol.unwrap_or(default_tol))?;
    let loaded = load_tensor(common)?;
    match kind {
        SolveKind::Z => {
            let a = symmetric(loaded)?;
            let found = zeigen::multistart_z(
                &a,
                MultistartOptions {
                    starts: common.starts,
                    tol: config.tol,
                    maxit: common.maxit,
                    ..MultistartOptions::default()
                },
            )?;
            if found.pairs.is_empty() {
                return Err(Failure::Unconverged("no Z-eigenpair converged".into()));
            }
            let pairs = found
                .pairs
                .into_iter()
                .map(|p| {
                    let certification = zeigen::certify_z(&a, &p.x, config.cert_tol)?;
                    Ok(ZPairReport {
                        lambda: p.lambda,
                        x: p.x,
                        residual: p.residual,
                        certification,
                    })
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            report(
                &config,
                common,
                SolveZResult {
                    pairs,
                    unconverged_starts: found.unconverged,
                },
            )
        }
        SolveKind::Svt => {
            let a = loaded.tensor;
            let found = svt::multistart_svt(
                &a,
                SvtMultistartOptions {
                    starts: common.starts,
                    tol: config.tol,
                    maxit: common.maxit,
                    ..SvtMultistartOptions::default()
                },
            )?;
            if found.tuples.is_empty() {
                return Err(Failure::Unconverged("no singular tuple converged".into()));
            }
            let tuples = found
                .tuples
                .iter()
                .map(|t| {
                    Ok(TupleReport {
                        tuple: t.into(),
                        certification: svt::certify_svt(&a, &t.blocks, config.cert_tol)?,
                    })
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            report(
                &config,
                common,
                SolveSvtResult {
                    tuples,
                    unconverged_starts: found.unconverged,
                },
            )
        }
        SolveKind::H => {
            let a = loaded.tensor;
            let sol = heigen::solve_h_n2(&a)?;
            let mut pairs = Vec::new();
            for p in &sol.pairs {
                let nondegenerate = if p.residual > config.tol {
                    None
                } else if p.multiplicity == 1 && !p.positive_dimensional {
                    Some(heigen::h_nondegenerate(
                        &a,
                        &p.x,
                        p.lambda,
                        config.cert_tol,
                    )?)
                } else {
                    None
                };
                pairs.push(HPairReport {
                    pair: p.into(),
                    nondegenerate,
                });
            }
            if sol.pairs.iter().all(|p| p.residual > config.tol) {
                return Err(Failure::Unconverged(
                    "no H-eigenpair reached the residual tolerance".into(),
                ));
            }
            let result = SolveHResult {
                charpoly: sol.charpoly.coeffs.clone(),
                degree: sol.charpoly.degree,
                expected_degree: sol.charpoly.expected_degree,
                deficient: sol.deficient,
                eigenvalues: sol
                    .eigenvalues
                    .iter()
                    .map(|(z, m)| ([z.re, z.im], *m))
                    .collect(),
                pairs,
            };
            report(&config, common, result)
        }
    }
}

fn load_spec(spec: &SpecArgs, common: &Common) -> Result<(SymOdecoSpec, usize), Failure> {
    if common.input.is_some() {
        if spec.n.is_some() || spec.r.is_some() || spec.k.is_some() {
            return Err(Failure::Input(
                "--in cannot be combined with --n/--r/--k".into(),
            ));
        }
        return Ok(io::parse_odeco_spec(&read_input(common)?)?);
    }
    let n = spec
        .n
        .ok_or_else(|| Failure::Input("either --in or --n and --k are required".into()))?;
    let k = spec.k.ok_or_else(|| Failure::Input("missing --k".into()))?;
    if k < 3 {
        return Err(Failure::Input(format!("--k must be at least 3, got {k}")));
    }
    let r = spec.r.unwrap_or(n);
    Ok((SymOdecoSpec::random(n, r, common.seed)?, k))
}

#[derive(Serialize)]
struct CertifyResult {
    k: usize,
    pairs: usize,
    degenerate: usize,
    reports: Vec<CertificationReport>,
}

pub fn odeco(action: OdecoAction, spec_args: &SpecArgs, common: &Common) -> Result<(), Failure> {
    let name = match action {
        OdecoAction::Build => "odeco build",
        OdecoAction::Enumerate => "odeco enumerate",
        OdecoAction::Certify => "odeco certify",
    };
    let config = RunConfig::new(
        name.into(),
        common,
        common.tol.unwrap_or(odeco::ENUM_RESIDUAL_TOL),
    )?;
    let (spec, k) = load_spec(spec_args, common)?;
    match action {
        OdecoAction::Build => {
            let a = odeco::odeco_build_sym(&spec, k)?;
            let mut text = io::tensor_to_json(a.as_dense(), true);
            text.push('\n');
            match &common.out {
                Some(path) => fs::write(path, text)
                    .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        OdecoAction::Enumerate => {
            let set: OdecoEigenpairSet = odeco::enumerate_z_eigenpairs(&spec, k)?;
            report(&config, common, set)
        }
        OdecoAction::Certify => {
            let reports = odeco::certify_all(&spec, k, config.cert_tol)
                .map_err(|e| Failure::Contradiction(format!("certification failed: {e}")))?;
            let degenerate = reports.iter().filter(|r| !r.nondegenerate).count();
            let result = CertifyResult {
                k,
                pairs: reports.len(),
                degenerate,
                reports,
            };
            report(&config, common, &result)?;
            if degenerate > 0 {
                return Err(Failure::Contradiction(format!(
                    "{degenerate} of {} odeco eigenpairs certified degenerate",
                    result.pairs
                )));
            }
            Ok(())
        }
    }
}

pub fn census(args: &CensusArgs) -> Result<(), Failure> {
    let common = &args.common;
    let kind = match args.kind {
        SolveKind::Z => CensusKind::Z,
        SolveKind::Svt => CensusKind::Svt,
        SolveKind::H => CensusKind::H,
    };
    let dims = match (&args.dims, args.n, args.k) {
        (Some(d), None, None) => d.clone(),
        (None, Some(n), Some(k)) => vec![n; k],
        (None, None, Some(k)) if kind != CensusKind::Svt => vec![2; k],
        _ => {
            return Err(Failure::Input(
                "give either --dims or --k (with optional --n)".into(),
            ))
        }
    };
    let mut cfg = CensusConfig::new(kind, dims, args.trials, common.seed);
    cfg.tol = common.tol.unwrap_or(cfg.tol);
    cfg.cert_tol = common.cert_tol;
    cfg.grid = args.grid;
    cfg.maxit = common.maxit;
    cfg.starts = common.starts;
    let mut config = RunConfig::new("census".into(), common, cfg.tol)?;
    config.grid = Some(args.grid);
    config.trials = Some(args.trials);
    cfg.validate()?;
    let result = census::run_census(&cfg)?;
    let envelope = Report {
        version: VERSION,
        config: &config,
        result: &result,
    };
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
            emit(Some(&dir.join("census.json")), &envelope)?;
        }
        None => emit(None, &envelope)?,
    }
    if result.degenerate_trials > 0 {
        return Err(Failure::Contradiction(format!(
            "{} of {} trials contain a certified degenerate eigen-object",
            result.degenerate_trials, result.trials
        )));
    }
    if !result.invariants_ok {
        return Err(Failure::CensusInvariant(format!(
            "{} trials exceed the complex count bound",
            result.bound_violations
        )));
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(untagged)]
enum OracleResult {
    Sweep(SweepResult),
    Ecount(ECount),
}

pub fn oracle(kind: OracleKind, common: &Common, grid: usize) -> Result<(), Failure> {
    let (name, default_tol) = match kind {
        OracleKind::Sweep => ("oracle sweep", census::DEFAULT_SWEEP_TOL),
        OracleKind::Ecount => ("oracle ecount", 1e-12),
    };
    let mut config = RunConfig::new(name.into(), common, common.tol.unwrap_or(default_tol))?;
    let a = symmetric(load_tensor(common)?)?;
    let result = match kind {
        OracleKind::Sweep => {
            config.grid = Some(grid);
            OracleResult::Sweep(census::sweep_z_n2(&a, grid, config.tol)?)
        }
        OracleKind::Ecount => OracleResult::Ecount(census::e_count_n2(&a)?),
    };
    report(&config, common, result)
}
