//! `tomo` — seeded experiment runner for the phaseless tomography toolkit.
//!
//! Every subcommand is fully determined by its parameters and seed:
//! identical configuration produces identical report content (wall-clock
//! fields aside). Reports are JSON or JSON lines with floats at 17
//! significant digits, written atomically.
//!
//! Exit codes: 0 nominal (for `certify`: no collision found), 2 a collision
//! was found and certified, 1 usage or runtime error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tomo_core::injectivity::{certify, CertifyConfig, Verdict};
use tomo_core::linalg::{random_unit_vector, rank_with_tol};
use tomo_core::measurement::StructuredKind;
use tomo_core::recovery::{recover, RecoveryConfig};
use tomo_core::report::{write_atomic, write_json_atomic, write_jsonl_atomic};
use tomo_core::varieties::{
    dimension_ledger, jacobian_rank_report, sample_variety_point, VarietyKind,
};
use tomo_core::{CVector, Complex64, MeasurementVector, SeededRng, UnitaryEnsemble};

use config::{resolve, resolve_seed, FileConfig};

#[derive(Parser)]
#[command(
    name = "tomo",
    version,
    about = "Phaseless pure-state tomography experiments: ensembles, certification, varieties, recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a unitary ensemble and write it to a file.
    Gen(GenArgs),
    /// Measure a state under an ensemble; writes the measurement vector.
    Measure(MeasureArgs),
    /// Certify injectivity mod phase; exit code 2 when a collision is found.
    Certify(CertifyArgs),
    /// Sample variety points and report Jacobian ranks as JSON lines.
    VarietyCheck(VarietyArgs),
    /// Emit the dimension-bound ledger.
    Ledger(LedgerArgs),
    /// Recover a state from phaseless measurements.
    Recover(RecoverArgs),
    /// Probe the projective embedding: pair separation and differential rank.
    EmbedCheck(EmbedArgs),
}

#[derive(Args)]
struct GenArgs {
    /// haar | diagonal | shared-eigenbasis | fourier-masked
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Number of unitaries (default 4).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    /// Output ensemble file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    /// Ensemble file produced by `gen`.
    #[arg(long)]
    ensemble: Option<PathBuf>,
    /// State file (first line n, then n lines `re,im`).
    #[arg(long)]
    state: Option<PathBuf>,
    /// Draw a seeded random unit state instead of reading one.
    #[arg(long, default_value_t = false)]
    random_state: bool,
    /// Where to save the drawn random state, if wanted.
    #[arg(long)]
    state_out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Ensemble file; alternatively give --kind and --n to generate one.
    #[arg(long)]
    ensemble: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    multistarts: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VarietyArgs {
    /// x | y
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LedgerArgs {
    /// Single dimension to tabulate; otherwise the [n-min, n-max] range.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    ensemble: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Measurement JSON produced by `measure`; otherwise a seeded random
    /// truth state is drawn, measured, and compared against.
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// L2 norm of additive noise applied to generated measurements.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Disable the nonconvex polish after the lifted solve.
    #[arg(long, default_value_t = false)]
    no_refine: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    ensemble: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Random projective pairs to separate.
    #[arg(long)]
    pairs: Option<usize>,
    /// Points at which to rank the finite-difference differential.
    #[arg(long)]
    diff_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Route clap's help/version through stdout with success, and
            // real usage errors to the exit-1 contract.
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return ExitCode::SUCCESS;
                }
                _ => {
                    eprint!("{e}");
                    return ExitCode::from(1);
                }
            }
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Measure(args) => run_measure(args),
        Command::Certify(args) => run_certify(args),
        Command::VarietyCheck(args) => run_variety_check(args),
        Command::Ledger(args) => run_ledger(args),
        Command::Recover(args) => run_recover(args),
        Command::EmbedCheck(args) => run_embed_check(args),
    }
}

fn parse_kind(kind: &str) -> Result<Option<StructuredKind>> {
    match kind {
        "haar" => Ok(None),
        "diagonal" => Ok(Some(StructuredKind::Diagonal)),
        "shared-eigenbasis" => Ok(Some(StructuredKind::SharedEigenbasis)),
        "fourier-masked" => Ok(Some(StructuredKind::FourierMasked)),
        other => bail!(
            "unknown ensemble kind `{other}` (expected haar, diagonal, shared-eigenbasis, fourier-masked)"
        ),
    }
}

fn generate_ensemble(
    kind: &str,
    n: usize,
    m: usize,
    rng: &mut SeededRng,
) -> Result<UnitaryEnsemble> {
    if n < 1 || m < 1 {
        bail!("n and m must be positive, got n={n} m={m}");
    }
    Ok(match parse_kind(kind)? {
        None => UnitaryEnsemble::haar(n, m, rng),
        Some(kind) => UnitaryEnsemble::structured(kind, n, m, rng),
    })
}

/// Load the ensemble file when given, otherwise generate from kind/n/m on a
/// derived stream so downstream draws stay independent of the generation.
fn obtain_ensemble(
    ensemble: Option<&Path>,
    kind: Option<String>,
    n: Option<usize>,
    m: usize,
    base_rng: &SeededRng,
) -> Result<UnitaryEnsemble> {
    match ensemble {
        Some(path) => UnitaryEnsemble::load(path)
            .with_context(|| format!("loading ensemble {}", path.display())),
        None => {
            let kind = kind.context("need either --ensemble or --kind")?;
            let n = n.context("need --n when generating an ensemble")?;
            let mut gen_rng = base_rng.substream(7001);
            generate_ensemble(&kind, n, m, &mut gen_rng)
        }
    }
}

fn write_state_file(path: &Path, x: &CVector) -> Result<()> {
    let mut body = format!("{}\n", x.len());
    for z in x.iter() {
        body.push_str(&format!("{:.16e},{:.16e}\n", z.re, z.im));
    }
    write_atomic(path, &body).with_context(|| format!("writing state {}", path.display()))
}

fn read_state_file(path: &Path) -> Result<CVector> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading state {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let n: usize = lines
        .next()
        .context("state file is empty")?
        .trim()
        .parse()
        .context("bad state header")?;
    let mut values = Vec::with_capacity(n);
    for line in lines {
        let (re, im) = line
            .trim()
            .split_once(',')
            .with_context(|| format!("state entry `{line}` is not re,im"))?;
        values.push(Complex64::new(re.trim().parse()?, im.trim().parse()?));
    }
    if values.len() != n {
        bail!("state file declares {n} entries but has {}", values.len());
    }
    Ok(CVector::from_vec(values))
}

fn run_gen(args: GenArgs) -> Result<ExitCode> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let kind: String = resolve(args.kind, cfg.get("kind")?, Some("haar".into()), "kind")?;
    let n = resolve(args.n, cfg.get("n")?, None, "n")?;
    let m = resolve(args.m, cfg.get("m")?, Some(4), "m")?;
    let seed = resolve_seed(args.seed, cfg.get("seed")?)?;
    let stream = resolve(args.stream, cfg.get("stream")?, Some(0), "stream")?;
    let out: PathBuf = resolve(args.out, cfg.get("out")?, None, "out")?;

    let mut rng = SeededRng::new(seed, stream);
    let ensemble = generate_ensemble(&kind, n, m, &mut rng)?;
    ensemble
        .save(&out)
        .with_context(|| format!("writing ensemble {}", out.display()))?;
    println!(
        "wrote {} ensemble (n={n}, m={m}, seed={seed}, stream={stream}) to {}",
        kind,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_measure(args: MeasureArgs) -> Result<ExitCode> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let ensemble_path: PathBuf = resolve(args.ensemble, cfg.get("ensemble")?, None, "ensemble")?;
    let seed = resolve_seed(args.seed, cfg.get("seed")?)?;
    let stream = resolve(args.stream, cfg.get("stream")?, Some(0), "stream")?;
    let out: PathBuf = resolve(args.out, cfg.get("out")?, None, "out")?;

    let ensemble = UnitaryEnsemble::load(&ensemble_path)
        .with_context(|| format!("loading ensemble {}", ensemble_path.display()))?;
    let state = match (&args.state, args.random_state) {
        (Some(path), false) => read_state_file(path)?,
        (None, true) => {
            let mut rng = SeededRng::new(seed, stream);
            random_unit_vector(ensemble.n(), &mut rng)
        }
        (None, false) => bail!("need either --state <file> or --random-state"),
        (Some(_), true) => bail!("--state and --random-state are mutually exclusive"),
    };
    if let Some(state_out) = &args.state_out {
        write_state_file(state_out, &state)?;
    }
    let meas = ensemble.measure_state(&state)?.clamped();
    write_json_atomic(&out, &meas)?;
    println!(
        "measured state under {} (n={}, m={}) -> {}",
        ensemble_path.display(),
        ensemble.n(),
        ensemble.m(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_certify(args: CertifyArgs) -> Result<ExitCode> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let seed = resolve_seed(args.seed, cfg.get("seed")?)?;
    let stream = resolve(args.stream, cfg.get("stream")?, Some(0), "stream")?;
    let out: PathBuf = resolve(args.out, cfg.get("out")?, None, "out")?;
    let m = resolve(args.m, cfg.get("m")?, Some(4), "m")?;

    let base_rng = SeededRng::new(seed, stream);
    let ensemble_path = args.ensemble.or(cfg.get("ensemble")?);
    let ensemble = obtain_ensemble(
        ensemble_path.as_deref(),
        args.kind.or(cfg.get("kind")?),
        args.n.or(cfg.get("n")?),
        m,
        &base_rng,
    )?;

    let mut config = CertifyConfig::default();
    if let Some(ms) = args.multistarts.or(cfg.get("multistarts")?) {
        config.search.multistarts = ms;
    }
    if let Some(mi) = args.max_iterations.or(cfg.get("max_iterations")?) {
        config.search.max_iterations = mi;
    }

    let report = certify(&ensemble, &config, &base_rng)?;
    write_json_atomic(&out, &report)?;
    let verdict = report.verdict;
    println!(
        "verdict: {} (nullspace dimension {}) -> {}",
        match verdict {
            Verdict::CollisionFound => "collision_found",
            Verdict::NoCollisionFound => "no_collision_found",
        },
        report.nullspace_dimension,
        out.display()
    );
    Ok(match verdict {
        Verdict::CollisionFound => ExitCode::from(2),
        Verdict::NoCollisionFound => ExitCode::SUCCESS,
    })
}

fn run_variety_check(args: VarietyArgs) -> Result<ExitCode> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let kind: String = resolve(args.kind, cfg.get("kind")?, Some("x".into()), "kind")?;
    let kind = match kind.as_str() {
        "x" | "X" => VarietyKind::X,
        "y" | "Y" => VarietyKind::Y,
        other => bail!("unknown variety kind `{other}` (expected x or y)"),
    };
    let n = resolve(args.n, cfg.get("n")?, None, "n")?;
    let points = resolve(args.points, cfg.get("points")?, Some(100), "points")?;
    let seed = resolve_seed(args.seed, cfg.get("seed")?)?;
    let stream = resolve(args.stream, cfg.get("stream")?, Some(0), "stream")?;
    let out: PathBuf = resolve(args.out, cfg.get("out")?, None, "out")?;

    let mut rng = SeededRng::new(seed, stream);
    let mut reports = Vec::with_capacity(points);
    for _ in 0..points {
        let p = sample_variety_point(kind, n, &mut rng)?;
        reports.push(jacobian_rank_report(&p)?);
    }
    let expected = match kind {
        VarietyKind::X => n + 3,
        VarietyKind::Y => n + 5,
    };
    let off = reports.iter().filter(|r| r.rank != expected).count();
    write_jsonl_atomic(&out, reports.iter())?;
    println!(
        "sampled {points} points on {kind:?} (n={n}); rank {expected} at {}/{points} -> {}",
        points - off,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_ledger(args: LedgerArgs) -> Result<ExitCode> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let out: PathBuf = resolve(args.out, cfg.get("out")?, None, "out")?;
    let single = args.n.or(cfg.get("n")?);
    let (lo, hi) = match single {
        Some(n) => (n, n),
        None => (
            resolve(args.n_min, cfg.get("n_min")?, Some(2), "n_min")?,
            resolve(args.n_max, cfg.get("n_max")?, Some(50), "n_max")?,
        ),
    };
    if lo < 2 || hi < lo {
        bail!("ledger range must satisfy 2 <= n_min <= n_max, got [{lo}, {hi}]");
    }
    let rows: Vec<_> = (lo..=hi)
        .map(dimension_ledger)
        .collect::<Result<_, _>>()?;
    write_jsonl_atomic(&out, rows.iter())?;
    println!("n   dimW  dimWij  dimP'a  dimPa  dimPa/G'  dimM/G");
    for r in &rows {
        println!(
            "{:<3} {:<5} {:<7} {:<7} {:<6} {:<9} {}",
            r.n,
            r.dim_w_bound,
            r.dim_wij_bound,
            r.dim_p_alpha_prime_bound,
            r.dim_p_alpha_bound,
            r.dim_p_alpha_mod_gprime,
            r.dim_m_mod_g
        );
    }
    println!("-> {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn run_recover(args: RecoverArgs) -> Result<ExitCode> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let seed = resolve_seed(args.seed, cfg.get("seed")?)?;
    let stream = resolve(args.stream, cfg.get("stream")?, Some(0), "stream")?;
    let out: PathBuf = resolve(args.out, cfg.get("out")?, None, "out")?;
    let m = resolve(args.m, cfg.get("m")?, Some(4), "m")?;

    let base_rng = SeededRng::new(seed, stream);
    let ensemble_path = args.ensemble.clone().or(cfg.get("ensemble")?);
    let ensemble = obtain_ensemble(
        ensemble_path.as_deref(),
        args.kind.or(cfg.get("kind")?),
        args.n.or(cfg.get("n")?),
        m,
        &base_rng,
    )?;

    let mut config = RecoveryConfig::default();
    if let Some(mi) = args.max_iterations.or(cfg.get("max_iterations")?) {
        config.max_iterations = mi;
    }
    if args.no_refine {
        config.refinement = false;
    }

    let (measurements, truth) = match &args.measurements {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading measurements {}", path.display()))?;
            let meas: MeasurementVector = serde_json::from_str(&text)
                .with_context(|| format!("parsing measurements {}", path.display()))?;
            (meas, None)
        }
        None => {
            let mut state_rng = base_rng.substream(7002);
            let truth = random_unit_vector(ensemble.n(), &mut state_rng);
            let mut meas = ensemble.measure_state(&truth)?;
            let noise = args.noise.or(cfg.get("noise")?).unwrap_or(0.0);
            if noise > 0.0 {
                use rand::Rng;
                let mut noise_rng = base_rng.substream(7003);
                let raw: Vec<f64> = (0..meas.values.len())
                    .map(|_| noise_rng.gen_range(-1.0..1.0))
                    .collect();
                let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (value, delta) in meas.values.iter_mut().zip(&raw) {
                    *value += delta * noise / norm;
                }
            }
            (meas, Some(truth))
        }
    };

    let result = recover(&ensemble, &measurements, &config, truth.as_ref())?;
    write_json_atomic(&out, &result)?;
    match result.dist_mod_phase {
        Some(d) => println!(
            "recovered (residual {:.3e}, dist mod phase {:.3e}) -> {}",
            result.residual,
            d,
            out.display()
        ),
        None => println!(
            "recovered (residual {:.3e}) -> {}",
            result.residual,
            out.display()
        ),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EmbedCheckReport {
    n: usize,
    m: usize,
    pairs: usize,
    /// Smallest embedding distance among tested distinct projective pairs.
    min_pair_distance: f64,
    /// Lift distance of the pair realizing the minimum.
    lift_distance_at_min: f64,
    diff_points: usize,
    expected_rank: usize,
    ranks_all_expected: bool,
    min_spectral_gap: f64,
    seed: u64,
    stream: u64,
}

fn run_embed_check(args: EmbedArgs) -> Result<ExitCode> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let seed = resolve_seed(args.seed, cfg.get("seed")?)?;
    let stream = resolve(args.stream, cfg.get("stream")?, Some(0), "stream")?;
    let out: PathBuf = resolve(args.out, cfg.get("out")?, None, "out")?;
    let m = resolve(args.m, cfg.get("m")?, Some(4), "m")?;
    let pairs = resolve(args.pairs, cfg.get("pairs")?, Some(10_000), "pairs")?;
    let diff_points = resolve(args.diff_points, cfg.get("diff_points")?, Some(100), "diff_points")?;

    let base_rng = SeededRng::new(seed, stream);
    let ensemble_path = args.ensemble.clone().or(cfg.get("ensemble")?);
    let ensemble = obtain_ensemble(
        ensemble_path.as_deref(),
        Some("haar".to_string()),
        args.n.or(cfg.get("n")?),
        m,
        &base_rng,
    )?;
    let n = ensemble.n();
    if n < 2 {
        bail!("embed-check requires n >= 2");
    }

    let mut pair_rng = base_rng.substream(7004);
    let mut min_pair_distance = f64::INFINITY;
    let mut lift_at_min = f64::NAN;
    for _ in 0..pairs {
        let x = random_unit_vector(n, &mut pair_rng);
        let y = random_unit_vector(n, &mut pair_rng);
        let lift_gap = tomo_core::recovery::dist_mod_phase(&x, &y);
        if lift_gap < 1e-6 {
            continue; // same projective point, not a separation case
        }
        let d = (ensemble.embedding(&x)? - ensemble.embedding(&y)?).norm();
        if d < min_pair_distance {
            min_pair_distance = d;
            lift_at_min = lift_gap;
        }
    }

    let mut diff_rng = base_rng.substream(7005);
    let expected_rank = 2 * (n - 1);
    let mut ranks_all_expected = true;
    let mut min_spectral_gap = f64::INFINITY;
    for _ in 0..diff_points {
        let x = random_unit_vector(n, &mut diff_rng);
        let jac = ensemble.embedding_differential(&x, 1e-5)?;
        let report = rank_with_tol(&jac, 1e-10);
        if report.rank != expected_rank {
            ranks_all_expected = false;
        }
        min_spectral_gap = min_spectral_gap.min(report.spectral_gap());
    }

    let report = EmbedCheckReport {
        n,
        m: ensemble.m(),
        pairs,
        min_pair_distance,
        lift_distance_at_min: lift_at_min,
        diff_points,
        expected_rank,
        ranks_all_expected,
        min_spectral_gap,
        seed,
        stream,
    };
    write_json_atomic(&out, &report)?;
    println!(
        "embedding: min pair distance {:.3e}, differential rank {} at all {} points: {} -> {}",
        report.min_pair_distance,
        expected_rank,
        diff_points,
        report.ranks_all_expected,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
