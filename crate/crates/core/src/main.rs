//! Batch command-line front end: run scenarios, benchmark puzzle solving,
//! generate key fixtures, and report puzzle-set overhead.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use adhoc_auth::gqid;
use adhoc_auth::puzzle::{self, PuzzleParams};
use adhoc_auth::simnet::runner::{self, RunReport};

#[derive(Parser)]
#[command(name = "adhoc-auth", version, about = "Anonymous, revocable authentication over a simulated ad-hoc network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario script; exit 0 only if every expect passes.
    Run {
        /// Scenario script path.
        scenario: PathBuf,
        /// Directory to write transcript, chat logs, and audit log into
        /// (a subdirectory named after the scenario is created).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure brute-force effort to solve puzzles.
    BenchPuzzles {
        /// Effective key bits per puzzle.
        #[arg(long, default_value_t = 12)]
        bits: u32,
        /// Solves per seed.
        #[arg(long, default_value_t = 50)]
        count: u32,
        /// Number of independent seeds.
        #[arg(long, default_value_t = 4)]
        seeds: u64,
    },
    /// Generate a deterministic key fixture file.
    Keygen {
        #[arg(long, default_value_t = 64)]
        bits: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixture file to write.
        #[arg(long)]
        out: PathBuf,
        /// Force this prime p instead of generating one.
        #[arg(long)]
        force_p: Option<u64>,
        /// Force this prime q instead of generating one.
        #[arg(long)]
        force_q: Option<u64>,
        #[arg(long, default_value_t = 65537)]
        public_exp: u64,
    },
    /// Run a scenario and report puzzle-set bytes against message bytes.
    SizeReport {
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { scenario, out } => cmd_run(&scenario, out.as_deref()),
        Command::BenchPuzzles { bits, count, seeds } => cmd_bench(bits, count, seeds),
        Command::Keygen {
            bits,
            seed,
            out,
            force_p,
            force_q,
            public_exp,
        } => cmd_keygen(bits, seed, &out, force_p, force_q, public_exp),
        Command::SizeReport { scenario } => cmd_size_report(&scenario),
    }
}

fn load_and_run(path: &Path) -> Result<(String, RunReport), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    let report = runner::run_scenario(&name, &text).map_err(|e| e.to_string())?;
    Ok((name, report))
}

fn print_expects(report: &RunReport) {
    for e in &report.expects {
        if e.pass {
            println!("line {}: expect {} -> {} [ok]", e.line, e.expected, e.observed);
        } else {
            println!(
                "line {}: expect {} -> {} [FAIL]",
                e.line, e.expected, e.observed
            );
        }
    }
    let passed = report.expects.iter().filter(|e| e.pass).count();
    println!("{passed}/{} expects passed", report.expects.len());
}

fn cmd_run(scenario: &Path, out: Option<&Path>) -> ExitCode {
    let (name, report) = match load_and_run(scenario) {
        Ok(pair) => pair,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    print_expects(&report);
    if let Some(out_dir) = out {
        let dir = out_dir.join(&name);
        if let Err(e) = write_artifacts(&dir, &report) {
            eprintln!("error: cannot write artifacts: {e}");
            return ExitCode::from(2);
        }
        println!("artifacts written to {}", dir.display());
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn write_artifacts(dir: &Path, report: &RunReport) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut transcript = report.transcript_lines().join("\n");
    if !transcript.is_empty() {
        transcript.push('\n');
    }
    std::fs::write(dir.join("transcript.txt"), transcript)?;
    let mut audit = report.audit.join("\n");
    if !audit.is_empty() {
        audit.push('\n');
    }
    std::fs::write(dir.join("audit.log"), audit)?;
    for (conversation_id, lines) in &report.logs {
        let mut content = lines.join("\n");
        if !content.is_empty() {
            content.push('\n');
        }
        std::fs::write(dir.join(format!("{conversation_id}.log")), content)?;
    }
    Ok(())
}

fn cmd_bench(bits: u32, count: u32, seeds: u64) -> ExitCode {
    let params = match PuzzleParams::new(1, bits) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let started = std::time::Instant::now();
    let mut trials = Vec::with_capacity((count as u64 * seeds) as usize);
    for seed in 0..seeds {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let keys = gqid::keygen(64, BigUint::from(65537u32), &mut rng)
            .expect("64-bit keygen");
        let gq = keys.params();
        let f_secret = [0x5cu8; 32];
        for _ in 0..count {
            let (set, _) = puzzle::make_puzzle_set(&params, &gq, &f_secret, &mut rng)
                .expect("valid params");
            let (_, t) = puzzle::solve_one(&set, &params, &mut rng).expect("own puzzle");
            trials.push(t);
        }
    }
    let elapsed = started.elapsed();
    let total: u64 = trials.iter().sum();
    let mean = total as f64 / trials.len() as f64;
    let min = trials.iter().min().copied().unwrap_or(0);
    let max = trials.iter().max().copied().unwrap_or(0);
    println!("bits={bits} count={count} seeds={seeds} solves={}", trials.len());
    println!("mean trials: {mean:.1}");
    println!("min trials:  {min}");
    println!("max trials:  {max}");
    println!("expected (0.5 * 2^{bits}): {:.1}", 0.5 * (1u64 << bits) as f64);
    println!("wall time: {:.3}s", elapsed.as_secs_f64());
    println!(
        "analytic reference: 32 effective key bits => 0.5 * 2^32 = {} (~2^31) trials per solve, not executed",
        1u64 << 31
    );
    ExitCode::SUCCESS
}

fn cmd_keygen(
    bits: u32,
    seed: u64,
    out: &Path,
    force_p: Option<u64>,
    force_q: Option<u64>,
    public_exp: u64,
) -> ExitCode {
    let exp = BigUint::from(public_exp);
    let keys = match (force_p, force_q) {
        (Some(p), Some(q)) => {
            gqid::keygen_with_primes(BigUint::from(p), BigUint::from(q), exp)
        }
        (None, None) => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            gqid::keygen(bits, exp, &mut rng)
        }
        _ => {
            eprintln!("error: --force-p and --force-q must be given together");
            return ExitCode::from(2);
        }
    };
    let keys = match keys {
        Ok(k) => k,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (p, q) = keys.factors();
    let fixture = format!(
        "bits {}\npublic-exp {}\np {}\nq {}\nn {}\nprivate-exp {}\n",
        keys.modulus().bits(),
        hex(&BigUint::from(public_exp)),
        hex(p),
        hex(q),
        hex(keys.modulus()),
        hex(keys.private_exp()),
    );
    if let Err(e) = std::fs::write(out, fixture) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return ExitCode::from(2);
    }
    println!("fixture written to {}", out.display());
    ExitCode::SUCCESS
}

fn hex(n: &BigUint) -> String {
    n.to_str_radix(16)
}

fn cmd_size_report(scenario: &Path) -> ExitCode {
    let (_, report) = match load_and_run(scenario) {
        Ok(pair) => pair,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    println!("puzzle-bytes {}", report.puzzle_bytes);
    println!("message-bytes {}", report.message_bytes);
    match report.size_ratio() {
        Some(ratio) => println!("ratio {ratio:.6}"),
        None => println!("ratio undefined (no accepted private message bytes)"),
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
