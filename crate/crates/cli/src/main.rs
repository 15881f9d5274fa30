use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use bfclock::format::{
    emit_instance, emit_outcome, emit_transcript, instance_hash, parse_instance, parse_outcome,
    parse_transcript, OutcomeFile,
};
use bfclock::harness::{bench, run_mechanism};
use bfclock::lower_bounds::{gen_additive_sqrt_instances, gen_lemma3_instance, gen_symmetric_log_instance_with};
use bfclock::random::{generate, RandomFamily, RandomSpec};
use bfclock::{audit_transcript, AuctionError, Instance, Mechanism, MechanismConfig, ValuationError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bfclock", version, about = "Budget-feasible clock auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on an instance file and write outcome and transcript files.
    Run {
        instance: PathBuf,
        #[arg(long)]
        mechanism: Mechanism,
        /// Output directory (defaults to the instance's directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate instance files.
    Gen(GenArgs),
    /// Run a mechanism on every instance matching a glob and report ratios.
    Bench {
        pattern: String,
        #[arg(long)]
        mechanism: Mechanism,
        /// Slack added to the declared bound before a row counts as a violation.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Also write the report as JSON to this path.
        #[arg(long)]
        json_report: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Check a transcript and outcome against the clock rules.
    Audit {
        instance: PathBuf,
        transcript: PathBuf,
        outcome: PathBuf,
        #[arg(long)]
        json_report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Largest ground set solved exactly by the unconstrained subroutine.
    #[arg(long, default_value_t = MechanismConfig::default().exact_submax_cap)]
    exact_submax_cap: usize,
}

impl ConfigArgs {
    fn config(&self) -> MechanismConfig {
        MechanismConfig {
            exact_submax_cap: self.exact_submax_cap,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// lemma3, additive-sqrt, symmetric-log or one of the random-* families.
    family: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds for random families.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    /// Accepts decimals or fractions such as 1/75.
    #[arg(long, value_parser = parse_ratio)]
    epsilon: Option<f64>,
    #[arg(long, value_parser = parse_ratio)]
    delta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_ratio)]
    probe: Option<f64>,
    /// Number of cost-B bidders in symmetric-log instances (default: fill to n).
    #[arg(long)]
    expensive: Option<usize>,
    #[arg(long, default_value_t = 4)]
    max_clauses: usize,
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{s}: {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s} is not a finite number"))
    }
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn parse(error: anyhow::Error) -> Self {
        Self { code: 2, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

fn mechanism_failure(e: AuctionError) -> Failure {
    let code = match &e {
        AuctionError::Unsupported { .. }
        | AuctionError::Precondition(_)
        | AuctionError::Valuation(ValuationError::Unsupported { .. }) => 3,
        _ => 1,
    };
    Failure {
        code,
        error: e.into(),
    }
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::parse)?;
    parse_instance(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::parse)
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(instance_path: &Path, mechanism: Mechanism, out: Option<&Path>, config: MechanismConfig) -> Result<(), Failure> {
    let instance = read_instance(instance_path)?;
    let summary = run_mechanism(mechanism, &instance, &config).map_err(mechanism_failure)?;
    let dir = match out {
        Some(dir) => dir.to_path_buf(),
        None => instance_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = instance_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("instance");
    let outcome_path = dir.join(format!("{stem}.{mechanism}.outcome.json"));
    let transcript_path = dir.join(format!("{stem}.{mechanism}.transcript.tsv"));
    let file = OutcomeFile {
        instance: instance_hash(&instance),
        mechanism: mechanism.name().to_string(),
        phases: summary.phases,
        value_queries: summary.value_queries,
        outcome: summary.outcome,
    };
    write(&outcome_path, &emit_outcome(&file))?;
    write(&transcript_path, &emit_transcript(&summary.transcript))?;
    println!(
        "{}\tvalue={}\tpayment={}\twinners={}",
        mechanism,
        file.outcome.value,
        file.outcome.total_payment,
        file.outcome.winners.len()
    );
    println!("{}", outcome_path.display());
    println!("{}", transcript_path.display());
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let params = |e: anyhow::Error| Failure::parse(e);
    let mut files: Vec<(String, Instance)> = Vec::new();
    match args.family.as_str() {
        "lemma3" => {
            let eps = args.epsilon.unwrap_or(1.0 / 75.0);
            let delta = args.delta.unwrap_or(eps / 7500.0);
            let inst = gen_lemma3_instance(eps, delta, args.budget).map_err(|e| params(e.into()))?;
            files.push(("lemma3.toml".into(), inst));
        }
        "additive-sqrt" => {
            let n = args.n.ok_or_else(|| params(anyhow!("additive-sqrt needs --n")))?;
            for (case, inst) in gen_additive_sqrt_instances(n, args.budget, args.probe).map_err(|e| params(e.into()))? {
                files.push((format!("additive-sqrt-n{n}-{}.toml", case.label()), inst));
            }
        }
        "symmetric-log" => {
            let n = args.n.ok_or_else(|| params(anyhow!("symmetric-log needs --n")))?;
            let k = args.k.ok_or_else(|| params(anyhow!("symmetric-log needs --k")))?;
            let inst = gen_symmetric_log_instance_with(n, k, args.budget, args.expensive)
                .map_err(|e| params(e.into()))?;
            files.push((format!("symmetric-log-n{n}-k{k}.toml"), inst));
        }
        other => {
            let family: RandomFamily = other.parse().map_err(|e: String| params(anyhow!(e)))?;
            let n = args.n.ok_or_else(|| params(anyhow!("{other} needs --n")))?;
            if !(args.budget >= 0.0 && args.budget.is_finite()) {
                return Err(params(anyhow!("budget {} must be non-negative", args.budget)));
            }
            for seed in args.seed..args.seed + args.count {
                let spec = RandomSpec {
                    budget: args.budget,
                    max_clauses: args.max_clauses,
                    ..RandomSpec::new(n, seed)
                };
                let inst = generate(family, spec).map_err(|e| params(e.into()))?;
                files.push((format!("{other}-n{n}-s{seed}.toml"), inst));
            }
        }
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for (name, inst) in files {
        let path = args.out.join(name);
        write(&path, &emit_instance(&inst))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_bench(
    pattern: &str,
    mechanism: Mechanism,
    tolerance: f64,
    json_report: Option<&Path>,
    config: MechanismConfig,
) -> Result<(), Failure> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| Failure::parse(anyhow!("bad glob {pattern}: {e}")))?
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::from(anyhow::Error::from(e)))?;
    paths.sort();
    let mut instances = Vec::with_capacity(paths.len());
    for path in &paths {
        instances.push((path.display().to_string(), read_instance(path)?));
    }
    let report = bench(&instances, mechanism, &config, tolerance);
    print!("{}", report.to_text());
    if let Some(path) = json_report {
        write(path, &report.to_json())?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(anyhow!("{} row(s) exceed the declared bound", report.violations()).into())
    }
}

fn cmd_audit(instance_path: &Path, transcript_path: &Path, outcome_path: &Path, json_report: Option<&Path>) -> Result<(), Failure> {
    let instance = read_instance(instance_path)?;
    let read = |p: &Path| {
        fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))
            .map_err(Failure::parse)
    };
    let transcript = parse_transcript(&read(transcript_path)?)
        .with_context(|| format!("parsing {}", transcript_path.display()))
        .map_err(Failure::parse)?;
    let outcome = parse_outcome(&read(outcome_path)?)
        .with_context(|| format!("parsing {}", outcome_path.display()))
        .map_err(Failure::parse)?;
    let hash = instance_hash(&instance);
    let mut problems = Vec::new();
    if transcript.instance_hash != hash {
        problems.push(format!("transcript was produced for instance {}", transcript.instance_hash));
    }
    if outcome.instance != hash {
        problems.push(format!("outcome was produced for instance {}", outcome.instance));
    }
    let report = audit_transcript(&transcript, &instance, &outcome.outcome);
    if let Some(path) = json_report {
        let json = serde_json::to_string_pretty(&report).context("serializing audit")?;
        write(path, &(json + "\n"))?;
    }
    println!("events={}\twinners={}\tviolations={}", report.events, report.winners, report.violations.len());
    for v in &report.violations {
        println!("violation\t{v}");
    }
    for p in &problems {
        println!("mismatch\t{p}");
    }
    if report.is_clean() && problems.is_empty() {
        Ok(())
    } else {
        Err(anyhow!("audit failed").into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            instance,
            mechanism,
            out,
            config,
        } => cmd_run(instance, *mechanism, out.as_deref(), config.config()),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench {
            pattern,
            mechanism,
            tolerance,
            json_report,
            config,
        } => cmd_bench(pattern, *mechanism, *tolerance, json_report.as_deref(), config.config()),
        Command::Audit {
            instance,
            transcript,
            outcome,
            json_report,
        } => cmd_audit(instance, transcript, outcome, json_report.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
