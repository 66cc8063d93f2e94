//! Command-line frontend: reproducible experiments over balanced tables with
//! file-based inputs and line-oriented JSON outputs.
//!
//! Exit codes: 0 success, 1 negative verdict (a violation, a failed search,
//! or an observation inconsistent with a bound), 2 usage or validation
//! error, 3 work-guard exceeded (override with BTBL_GUARD_LIMIT).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use btbl::balance::{
    is_balanced_exact_scaled, is_balanced_full_scaled, sampled_balance_estimate, ThresholdScale,
    Violation,
};
use btbl::bits::Bits;
use btbl::circuit::{build_balance_circuit, circuit_accepts, Circuit};
use btbl::codec::{decode_pair, encode_pair};
use btbl::compress::{decode_seed_rank, encode_seed_rank, exists_escaping_advice};
use btbl::construct::{brute_force_construct, empirical_balance_rate, probabilistic_construct};
use btbl::nw::{derandomized_construct, greedy_design, CheckMode};
use btbl::params::{
    advice_lower_bound, advice_regime_params, chernoff_upper_tail, existence_log_bound,
    BoundsInput, Params, ParamsFile,
};
use btbl::ratio::parse_decimal;
use btbl::table::{ColorSet, Table};
use btbl::{Error, Guards};

#[derive(Parser)]
#[command(
    name = "btbl",
    version,
    about = "Construct, verify, and measure (K, D, Delta)-balanced tables"
)]
struct Cli {
    /// Cap worker threads (default: one per core); results never depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a table and write it with a provenance sidecar.
    GenTable(GenTableArgs),
    /// Check a table file for balance violations.
    Check(CheckArgs),
    /// Read one cell of a table.
    Extract(ExtractArgs),
    /// Quantitative bound calculators.
    Bounds {
        #[command(subcommand)]
        which: BoundsCmd,
    },
    /// Rank certificates for cells relative to a color set.
    Rank {
        #[command(subcommand)]
        which: RankCmd,
    },
    /// Advice-string probes over a table.
    Advice {
        #[command(subcommand)]
        which: AdviceCmd,
    },
    /// The constant-depth balance-checking circuit.
    Circuit {
        #[command(subcommand)]
        which: CircuitCmd,
    },
    /// Combinatorial designs for the seed-efficient generator.
    Design {
        #[command(subcommand)]
        which: DesignCmd,
    },
    /// Self-delimiting pair encoding of bit strings.
    Codec {
        #[command(subcommand)]
        which: CodecCmd,
    },
    /// Empirical balance rate of random tables versus the existence bound.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Random,
    Brute,
    Nw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Direct,
    Circuit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Checker {
    Exact,
    Full,
    Sample,
}

#[derive(Args)]
struct GenTableArgs {
    /// Parameter file (JSON: n, n1, m, k, d, delta, optional c).
    #[arg(long)]
    params: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Base seed for randomized attempts.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Attempt budget for --method random.
    #[arg(long, default_value_t = 10_000)]
    max_tries: u64,
    /// Seed length for --method nw.
    #[arg(long, default_value_t = 16)]
    t: u32,
    /// Design set size for --method nw.
    #[arg(long, default_value_t = 2)]
    l: u32,
    /// Design intersection bound for --method nw.
    #[arg(long, default_value_t = 1)]
    r: u32,
    /// Acceptance test used during the seed sweep.
    #[arg(long, value_enum, default_value = "direct")]
    mode: Mode,
    /// Output table file; the provenance sidecar gets a .json suffix.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    checker: Checker,
    /// Pair samples for --checker sample.
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Rational multiplier on the slack, e.g. 1.03.
    #[arg(long, default_value = "1")]
    delta_scale: String,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    x: u64,
    #[arg(long)]
    y: u64,
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Log-space existence bound for a parameter file.
    Existence {
        #[arg(long)]
        params: PathBuf,
    },
    /// Error forced by advice: (1 − sigma)/(2^(h+1) − 1) − (h + log₂ n)/m.
    Advice {
        /// Min-entropy rate, a decimal in (0, 1), e.g. 0.5.
        #[arg(long)]
        sigma: String,
        #[arg(long)]
        h: u32,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
    /// Upper tail bound exp(−t·ln(t/3)·mu), clamped to 1.
    Chernoff {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        t: f64,
    },
    /// Parameter choice matching m extracted bits against h advice bits.
    Regime {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        h: u32,
        /// Density headroom added on top of the slack.
        #[arg(long, default_value_t = 1)]
        c: u32,
    },
}

#[derive(Subcommand)]
enum RankCmd {
    /// Certificate for the A-cell at (x, y): its rank among the row's A-cells.
    Encode {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        y: u64,
        /// Color set, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        colors: Vec<u32>,
    },
    /// Column holding the rank-th A-cell of row x.
    Decode {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        x: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        colors: Vec<u32>,
        #[arg(long)]
        rank: u64,
    },
}

#[derive(Subcommand)]
enum AdviceCmd {
    /// Smallest column of row x whose color escapes the color set.
    Find {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        x: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        colors: Vec<u32>,
    },
}

#[derive(Subcommand)]
enum CircuitCmd {
    /// Build the balance checker for a parameter file as a JSON gate list.
    Build {
        #[arg(long)]
        params: PathBuf,
        /// Write the gate list here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a built circuit on a table's encoding.
    Eval {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        table: PathBuf,
    },
    /// Size, depth, and threshold of the checker for a parameter file.
    Stats {
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Subcommand)]
enum DesignCmd {
    /// Greedy family of l-subsets of [t] with pairwise intersections <= r.
    Gen {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        count: u64,
    },
}

#[derive(Subcommand)]
enum CodecCmd {
    /// Encode a pair of ASCII bit strings self-delimitingly.
    EncodePair {
        #[arg(long, default_value = "")]
        x1: String,
        #[arg(long, default_value = "")]
        x2: String,
    },
    /// Split an encoded string back into its two components.
    DecodePair {
        #[arg(long)]
        bits: String,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

/// Provenance sidecar written next to every generated table.
#[derive(Serialize)]
struct Provenance {
    method: &'static str,
    params: ParamsFile,
    rng_seed: Option<u64>,
    max_tries: Option<u64>,
    tries_used: Option<u64>,
    nw: Option<NwProvenance>,
}

#[derive(Serialize)]
struct NwProvenance {
    t: u32,
    l: u32,
    r: u32,
    mode: &'static str,
    seed: u64,
}

#[derive(Serialize)]
struct CheckVerdict<'a> {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<&'a Violation>,
}

fn read_params(path: &PathBuf) -> Result<(Params, ParamsFile), Error> {
    let text = fs::read_to_string(path)?;
    let file: ParamsFile = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("parameter file {}: {e}", path.display())))?;
    let params = file.params();
    let report = params.validate();
    if !report.is_valid() {
        let messages: Vec<&str> = report.violations.iter().map(|v| v.constraint).collect();
        return Err(Error::Domain(format!(
            "parameter file {}: violated constraints: {}",
            path.display(),
            messages.join(", ")
        )));
    }
    Ok((params, file))
}

fn parse_ratio_u64(text: &str) -> Result<(u64, u64), Error> {
    let (num, den) = parse_decimal(text)?;
    let num = u64::try_from(num).map_err(|_| Error::Overflow("decimal literal"))?;
    let den = u64::try_from(den).map_err(|_| Error::Overflow("decimal literal"))?;
    Ok((num, den))
}

fn parse_scale(text: &str) -> Result<ThresholdScale, Error> {
    let (num, den) = parse_ratio_u64(text)?;
    if num == 0 {
        return Err(Error::Domain("scale must be positive".into()));
    }
    Ok(ThresholdScale { num, den })
}

fn color_set(table: &Table, colors: &[u32]) -> Result<ColorSet, Error> {
    ColorSet::from_colors(table.dims().colors, colors)
}

fn emit<T: Serialize>(value: &T) -> Result<(), Error> {
    let line = serde_json::to_string(value)
        .map_err(|e| Error::Format(format!("serialization: {e}")))?;
    println!("{line}");
    Ok(())
}

/// Ok(0) success, Ok(1) negative verdict; Err(_) maps onto exit codes 2/3.
fn run(cli: Cli) -> Result<u8, Error> {
    let guards = Guards::from_env();
    match cli.command {
        Command::GenTable(args) => gen_table(args, &guards),
        Command::Check(args) => check(args, &guards),
        Command::Extract(args) => {
            let table = Table::load(&args.table)?;
            let color = table.extract(args.x, args.y)?;
            #[derive(Serialize)]
            struct Cell {
                x: u64,
                y: u64,
                color: u32,
            }
            emit(&Cell { x: args.x, y: args.y, color })?;
            Ok(0)
        }
        Command::Bounds { which } => bounds(which),
        Command::Rank { which } => rank(which),
        Command::Advice { which } => advice(which),
        Command::Circuit { which } => circuit(which, &guards),
        Command::Design { which } => design(which, &guards),
        Command::Codec { which } => codec(which),
        Command::Bench(args) => {
            let (params, _) = read_params(&args.params)?;
            let report = empirical_balance_rate(params, args.trials, args.rng_seed, &guards)?;
            emit(&report)?;
            Ok(if report.consistent_with_bound == Some(false) { 1 } else { 0 })
        }
    }
}

fn gen_table(args: GenTableArgs, guards: &Guards) -> Result<u8, Error> {
    let (params, file) = read_params(&args.params)?;
    let (table, provenance) = match args.method {
        Method::Random => {
            let outcome = probabilistic_construct(params, args.rng_seed, args.max_tries, guards)?;
            let provenance = Provenance {
                method: "random",
                params: file,
                rng_seed: Some(args.rng_seed),
                max_tries: Some(args.max_tries),
                tries_used: Some(outcome.tries_used),
                nw: None,
            };
            (outcome.table, provenance)
        }
        Method::Brute => {
            let Some(table) = brute_force_construct(params, guards)? else {
                #[derive(Serialize)]
                struct NotFound {
                    found: bool,
                }
                emit(&NotFound { found: false })?;
                return Ok(1);
            };
            let provenance = Provenance {
                method: "brute",
                params: file,
                rng_seed: None,
                max_tries: None,
                tries_used: None,
                nw: None,
            };
            (table, provenance)
        }
        Method::Nw => {
            let mode = match args.mode {
                Mode::Direct => CheckMode::Direct,
                Mode::Circuit => CheckMode::Circuit,
            };
            let outcome = derandomized_construct(&params, args.t, args.l, args.r, mode, guards)?;
            let Some(outcome) = outcome else {
                #[derive(Serialize)]
                struct NotFound {
                    found: bool,
                }
                emit(&NotFound { found: false })?;
                return Ok(1);
            };
            let provenance = Provenance {
                method: "nw",
                params: file,
                rng_seed: None,
                max_tries: None,
                tries_used: None,
                nw: Some(NwProvenance {
                    t: args.t,
                    l: args.l,
                    r: args.r,
                    mode: match args.mode {
                        Mode::Direct => "direct",
                        Mode::Circuit => "circuit",
                    },
                    seed: outcome.seed,
                }),
            };
            (outcome.table, provenance)
        }
    };
    table.save(&args.out)?;
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".json");
    let text = serde_json::to_string(&provenance)
        .map_err(|e| Error::Format(format!("serialization: {e}")))?;
    fs::write(&sidecar, format!("{text}\n"))?;
    emit(&provenance)?;
    Ok(0)
}

fn check(args: CheckArgs, guards: &Guards) -> Result<u8, Error> {
    let table = Table::load(&args.table)?;
    let scale = parse_scale(&args.delta_scale)?;
    let verdict = match args.checker {
        Checker::Exact => is_balanced_exact_scaled(&table, scale, guards)?,
        Checker::Full => is_balanced_full_scaled(&table, scale, guards)?,
        Checker::Sample => {
            let estimate = sampled_balance_estimate(&table, args.samples, args.rng_seed, scale)?;
            emit(&estimate)?;
            return Ok(if estimate.violations > 0 { 1 } else { 0 });
        }
    };
    match verdict {
        None => {
            emit(&CheckVerdict { verdict: "balanced", witness: None })?;
            Ok(0)
        }
        Some(violation) => {
            emit(&CheckVerdict {
                verdict: "violation",
                witness: Some(&violation),
            })?;
            Ok(1)
        }
    }
}

fn bounds(which: BoundsCmd) -> Result<u8, Error> {
    match which {
        BoundsCmd::Existence { params } => {
            let (p, _) = read_params(&params)?;
            let bound = existence_log_bound(&p)?;
            #[derive(Serialize)]
            struct Out {
                log_bound: f64,
                meaningful: bool,
            }
            emit(&Out {
                log_bound: bound.log_bound,
                meaningful: bound.meaningful,
            })?;
            Ok(0)
        }
        BoundsCmd::Advice { sigma, h, n, m } => {
            let (sigma_num, sigma_den) = parse_ratio_u64(&sigma)?;
            let bound = advice_lower_bound(&BoundsInput { sigma_num, sigma_den, h, n, m })?;
            #[derive(Serialize)]
            struct Out {
                main_term_num: u128,
                main_term_den: u128,
                main_term: f64,
                correction: f64,
                lower_bound: f64,
            }
            emit(&Out {
                main_term_num: bound.main_term_num,
                main_term_den: bound.main_term_den,
                main_term: bound.main_term,
                correction: bound.correction,
                lower_bound: bound.lower_bound(),
            })?;
            Ok(0)
        }
        BoundsCmd::Chernoff { mu, t } => {
            let upper_tail = chernoff_upper_tail(mu, t)?;
            #[derive(Serialize)]
            struct Out {
                mu: f64,
                t: f64,
                upper_tail: f64,
            }
            emit(&Out { mu, t, upper_tail })?;
            Ok(0)
        }
        BoundsCmd::Regime { n, m, h, c } => {
            let params = advice_regime_params(n, m, h, c);
            emit(&ParamsFile::from_params(&params, c))?;
            Ok(0)
        }
    }
}

fn rank(which: RankCmd) -> Result<u8, Error> {
    match which {
        RankCmd::Encode { table, x, y, colors } => {
            let table = Table::load(&table)?;
            let set = color_set(&table, &colors)?;
            let certificate = encode_seed_rank(&table, x, y, &set)?;
            emit(&certificate)?;
            Ok(0)
        }
        RankCmd::Decode { table, x, colors, rank } => {
            let table = Table::load(&table)?;
            let set = color_set(&table, &colors)?;
            let column = decode_seed_rank(&table, x, &set, rank)?;
            #[derive(Serialize)]
            struct Out {
                row: u64,
                colors: Vec<u32>,
                rank: u64,
                column: u64,
            }
            emit(&Out { row: x, colors: set.colors(), rank, column })?;
            Ok(0)
        }
    }
}

fn advice(which: AdviceCmd) -> Result<u8, Error> {
    match which {
        AdviceCmd::Find { table, x, colors } => {
            let table = Table::load(&table)?;
            let set = color_set(&table, &colors)?;
            let escaping = exists_escaping_advice(&table, x, &set)?;
            #[derive(Serialize)]
            struct Out {
                row: u64,
                colors: Vec<u32>,
                escaping_column: Option<u64>,
            }
            emit(&Out {
                row: x,
                colors: set.colors(),
                escaping_column: escaping,
            })?;
            Ok(if escaping.is_some() { 0 } else { 1 })
        }
    }
}

fn circuit(which: CircuitCmd, guards: &Guards) -> Result<u8, Error> {
    match which {
        CircuitCmd::Build { params, out } => {
            let (p, _) = read_params(&params)?;
            let circuit = build_balance_circuit(&p, guards)?;
            match out {
                Some(path) => {
                    let text = serde_json::to_string(&circuit)
                        .map_err(|e| Error::Format(format!("serialization: {e}")))?;
                    fs::write(&path, format!("{text}\n"))?;
                    #[derive(Serialize)]
                    struct Written {
                        written: String,
                        size: usize,
                        depth: u32,
                    }
                    emit(&Written {
                        written: path.display().to_string(),
                        size: circuit.size(),
                        depth: circuit.depth(),
                    })?;
                }
                None => emit(&circuit)?,
            }
            Ok(0)
        }
        CircuitCmd::Eval { circuit, table } => {
            let text = fs::read_to_string(&circuit)?;
            let circuit: Circuit = serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("circuit file: {e}")))?;
            let table = Table::load(&table)?;
            let accepts = circuit_accepts(&circuit, &table)?;
            #[derive(Serialize)]
            struct Out {
                accepts: bool,
            }
            emit(&Out { accepts })?;
            Ok(if accepts { 0 } else { 1 })
        }
        CircuitCmd::Stats { params } => {
            let (p, _) = read_params(&params)?;
            let circuit = build_balance_circuit(&p, guards)?;
            emit(&circuit.stats())?;
            Ok(0)
        }
    }
}

fn design(which: DesignCmd, guards: &Guards) -> Result<u8, Error> {
    match which {
        DesignCmd::Gen { t, l, r, count } => {
            let design = greedy_design(t, l, r, count, guards)?;
            emit(&design)?;
            Ok(0)
        }
    }
}

fn codec(which: CodecCmd) -> Result<u8, Error> {
    match which {
        CodecCmd::EncodePair { x1, x2 } => {
            let x1 = Bits::from_binary_str(&x1)?;
            let x2 = Bits::from_binary_str(&x2)?;
            let encoded = encode_pair(&x1, &x2);
            #[derive(Serialize)]
            struct Out {
                encoded: String,
                length: usize,
            }
            emit(&Out {
                length: encoded.len(),
                encoded: encoded.to_string(),
            })?;
            Ok(0)
        }
        CodecCmd::DecodePair { bits } => {
            let bits = Bits::from_binary_str(&bits)?;
            let (x1, x2) = decode_pair(&bits)?;
            #[derive(Serialize)]
            struct Out {
                x1: String,
                x2: String,
            }
            emit(&Out {
                x1: x1.to_string(),
                x2: x2.to_string(),
            })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::GuardExceeded { .. } => 3,
                Error::TriesExhausted { .. } | Error::DesignExhausted { .. } => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
