use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use postlab::certify::{
    build_witness_b, build_witness_h, build_witness_r, certify_maximal_rank, render_sweep_csv, render_sweep_markdown,
    run_sweep, CertifyError, CertifyOptions, Certificate, Status, Strategy, SweepOptions, WitnessConfig,
    WitnessOptions, DEFAULT_PROBE_SAMPLES, DEFAULT_RETRIES,
};
use postlab::exactlin::DEFAULT_PRIME;
use postlab::postnum::{ab, reconcile, render_reconciliation};
use postlab_cli::record::{read_records, render_csv, render_markdown, Appender, RunRecord};
use serde_json::json;

const EXIT_USAGE: u8 = 1;
const EXIT_UNCONFIRMED: u8 = 2;

#[derive(Parser)]
#[command(name = "postlab", version, about = "Certify the postulation of a fat point and general lines in P3")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct FieldArgs {
    /// Master seed
    #[arg(long, env = "POSTLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Prime modulus, below 2^32
    #[arg(long, env = "POSTLAB_PRIME", default_value_t = DEFAULT_PRIME)]
    prime: u64,
}

#[derive(Args)]
struct OutArgs {
    /// JSONL file records are appended to
    #[arg(long, default_value = "results.jsonl")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Certify one (m, d, t) cell
    Check {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value_t = DEFAULT_RETRIES)]
        retries: u32,
        #[arg(long, default_value_t = Strategy::Random)]
        strategy: Strategy,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Verify every theorem cell up to the given bounds
    Sweep {
        #[arg(long)]
        m_max: u64,
        #[arg(long)]
        t_max: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = DEFAULT_RETRIES)]
        retries: u32,
        #[arg(long, default_value_t = DEFAULT_PROBE_SAMPLES)]
        probe_samples: u32,
        /// Also write the table as Markdown
        #[arg(long)]
        md: Option<PathBuf>,
        /// Also write the table as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Build and check a witness configuration
    Witness {
        kind: WitnessArg,
        #[arg(long)]
        m: u64,
        /// Degree for the H witness
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, default_value_t = WitnessOptions::default().attempts)]
        attempts: u32,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print one ledger cell as JSON
    Comb {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        k: u64,
    },
    /// Print the ledger reconciliation report
    Reconcile {
        #[arg(long, default_value_t = 60)]
        m_max: u64,
    },
    /// Render tables from a results file
    Report {
        #[arg(long, default_value = "results.jsonl")]
        input: PathBuf,
        #[arg(long)]
        md: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WitnessArg {
    B,
    R,
    H,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Unconfirmed(String),
}

impl From<CertifyError> for Failure {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::WitnessFailed { .. } => Failure::Unconfirmed(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn status_line(c: &Certificate) -> String {
    let status = match c.status {
        Status::MaximalRankCertified => "MaximalRankCertified".to_string(),
        Status::DeficitObserved { h0, h1 } => format!("DeficitObserved({h0},{h1})"),
        Status::Unconfirmed => "Unconfirmed".to_string(),
    };
    let flag = if c.exceptional { " exceptional" } else { "" };
    format!(
        "m={} d={} t={} N={} deg={} rank={} h0={} h1={} {status}{flag} (prime {}, attempts {})",
        c.m, c.d, c.t, c.n_forms, c.degree, c.rank, c.h0, c.h1, c.prime, c.attempts
    )
}

fn cmd_check(m: u64, d: u64, t: u64, retries: u32, strategy: Strategy, field: FieldArgs, out: &Path) -> Result<(), Failure> {
    let started = Utc::now();
    let opts = CertifyOptions {
        prime: field.prime,
        seed: field.seed,
        retries,
        strategy,
    };
    let cert = certify_maximal_rank(m, d, t, &opts)?;
    println!("{}", status_line(&cert));
    let mut rec = RunRecord::new(
        "check",
        json!({"m": m, "d": d, "t": t, "seed": field.seed, "prime": field.prime, "retries": retries, "strategy": strategy}),
        started,
    );
    rec.certificates.push(cert.canonical());
    Appender::open(out)?.append(&rec)?;
    if !cert.agrees_with_classification() {
        return Err(Failure::Unconfirmed(format!("cell ({m},{d},{t}) not confirmed")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    m_max: u64,
    t_max: u64,
    jobs: usize,
    retries: u32,
    probe_samples: u32,
    md: Option<&Path>,
    csv: Option<&Path>,
    field: FieldArgs,
    out: &Path,
) -> Result<(), Failure> {
    let started = Utc::now();
    let clock = Instant::now();
    let opts = SweepOptions {
        m_max,
        t_max,
        seed: field.seed,
        prime: field.prime,
        retries,
        jobs: jobs.max(1),
        probe_samples,
    };
    let result = run_sweep(&opts)?;
    let mut appender = Appender::open(out)?;
    let shared = json!({"m_max": m_max, "t_max": t_max, "seed": field.seed, "prime": field.prime, "retries": retries});
    for v in &result.cells {
        let mut params = shared.clone();
        params["m"] = json!(v.m);
        params["d"] = json!(v.d);
        params["k"] = json!(v.k);
        let mut rec = RunRecord::new("sweep", params, started);
        rec.certificates = v.certificates().map(Certificate::canonical).collect();
        appender.append(&rec)?;
    }
    for p in &result.probes {
        let mut params = shared.clone();
        params["m"] = json!(p.m);
        params["d"] = json!(p.d);
        let mut rec = RunRecord::new("sweep-probe", params, started);
        rec.probe = Some(p.clone());
        appender.append(&rec)?;
    }
    let table = render_sweep_markdown(&result);
    print!("{table}");
    for p in &result.probes {
        println!(
            "probe m={} d={} t={}: ({}, {}) {}",
            p.m, p.d, p.t, p.h0, p.h1, p.caveat
        );
    }
    if let Some(path) = md {
        write_file(path, &table)?;
    }
    if let Some(path) = csv {
        write_file(path, &render_sweep_csv(&result))?;
    }
    let failed = result.cells.iter().filter(|v| !v.passed()).count();
    println!("{} cells, {failed} unconfirmed, {:.2?}", result.cells.len(), clock.elapsed());
    if failed > 0 {
        return Err(Failure::Unconfirmed(format!("{failed} cells unconfirmed")));
    }
    Ok(())
}

fn print_witness(w: &WitnessConfig) {
    println!("witness {} m={} t={} prime={} seed={} attempts={}", w.kind, w.m, w.t, w.prime, w.seed, w.attempts);
    println!("digest {}", w.digest());
    println!(
        "lines {} (special {}, ruling {}), points {}, tangent vectors {}",
        w.lines.len(),
        w.special_lines.len(),
        w.ruling_lines.len(),
        w.special_points.len(),
        w.tangent_vectors.len()
    );
    for note in &w.notes {
        println!("note: {note}");
    }
    for c in &w.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        println!("{mark} {}: expected {}, observed {}", c.name, c.expected, c.observed);
    }
}

fn cmd_witness(kind: WitnessArg, m: u64, k: Option<u64>, attempts: u32, field: FieldArgs, out: &Path) -> Result<(), Failure> {
    let started = Utc::now();
    let opts = WitnessOptions {
        prime: field.prime,
        seed: field.seed,
        attempts,
    };
    let (name, result) = match kind {
        WitnessArg::B => ("b", build_witness_b(m, &opts)),
        WitnessArg::R => ("r", build_witness_r(m, &opts)),
        WitnessArg::H => {
            let k = k.ok_or_else(|| Failure::Usage("witness h needs --k".into()))?;
            ("h", build_witness_h(m, k, &opts))
        }
    };
    let (witness, failure) = match result {
        Ok(w) => (w, None),
        Err(CertifyError::WitnessFailed { report, .. }) => {
            let msg = report
                .first_failure()
                .map(|c| format!("check `{}` failed", c.name))
                .unwrap_or_else(|| "witness failed".into());
            (*report, Some(Failure::Unconfirmed(msg)))
        }
        Err(e) => return Err(e.into()),
    };
    print_witness(&witness);
    let mut rec = RunRecord::new(
        "witness",
        json!({"kind": name, "m": m, "k": k, "seed": field.seed, "prime": field.prime, "attempts": attempts}),
        started,
    );
    rec.witness = Some(witness);
    Appender::open(out)?.append(&rec)?;
    failure.map_or(Ok(()), Err)
}

fn cmd_comb(m: u64, k: u64) -> Result<(), Failure> {
    let cell = ab(m, k).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{}", serde_json::to_string(&cell).expect("cell serializes"));
    Ok(())
}

fn cmd_report(input: &Path, md: Option<&Path>, csv: Option<&Path>) -> Result<(), Failure> {
    let records = read_records(input).map_err(|e| Failure::Usage(format!("{}: {e}", input.display())))?;
    let table = render_markdown(&records);
    match md {
        Some(path) => write_file(path, &table)?,
        None => print!("{table}"),
    }
    if let Some(path) = csv {
        write_file(path, &render_csv(&records))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { m, d, t, retries, strategy, field, out } => cmd_check(m, d, t, retries, strategy, field, &out.out),
        Command::Sweep { m_max, t_max, jobs, retries, probe_samples, md, csv, field, out } => cmd_sweep(
            m_max,
            t_max,
            jobs,
            retries,
            probe_samples,
            md.as_deref(),
            csv.as_deref(),
            field,
            &out.out,
        ),
        Command::Witness { kind, m, k, attempts, field, out } => cmd_witness(kind, m, k, attempts, field, &out.out),
        Command::Comb { m, k } => cmd_comb(m, k),
        Command::Reconcile { m_max } => {
            print!("{}", render_reconciliation(&reconcile(m_max)));
            Ok(())
        }
        Command::Report { input, md, csv } => cmd_report(&input, md.as_deref(), csv.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Unconfirmed(msg)) => {
            eprintln!("unconfirmed: {msg}");
            ExitCode::from(EXIT_UNCONFIRMED)
        }
    }
}
