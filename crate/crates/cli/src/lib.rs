//! Command-line front end: flag parsing, experiment execution, and report
//! emission.
//!
//! Five subcommands cover the batch workflows: `run` executes one session
//! and emits a CSV row (plus an optional transcript log), `sweep` scans one
//! parameter across a grid of Monte Carlo batches, `keyrate` prints the
//! key-rate table with its threshold row, `codes` prints code parameters,
//! and `fidelity` estimates the purification success probability.
//!
//! Output is deterministic: a repeated invocation with the same flags and
//! seed produces byte-identical bytes. CSV columns are fixed and documented
//! on each writer; nothing depends on map iteration order or wall-clock
//! time.

use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qkdsim::bell::{derive_seed, ChannelModel};
use qkdsim::code::{CssCode, LinearCode};
use qkdsim::gf2::BinaryMatrix;
use qkdsim::protocol::{
    run_protocol1, run_protocol2, KeySource, SessionConfig, SessionResult,
};
use qkdsim::{estimate_fidelity, threshold_solve, AttackKind, EveStrategy, LegSelection};

/// Errors split by exit code: usage problems (exit 2) name the offending
/// flag, runtime problems (exit 1) cover I/O and data failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qkdsim", version, about = "Two-step EPR-pair QKD protocol simulator")]
pub struct Cli {
    /// Write the primary report here instead of stdout. Relative paths are
    /// resolved against $QKDSIM_OUT_DIR when it is set.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session and emit a CSV row.
    Run(RunArgs),
    /// Scan one parameter over a grid, many sessions per point.
    Sweep(SweepArgs),
    /// Emit the key-rate table and its zero-crossing threshold.
    Keyrate(KeyrateArgs),
    /// Print code parameters (name, n, k1, k2, logical qubits, t).
    Codes(CodesArgs),
    /// Estimate the probability that purification leaves perfect pairs.
    Fidelity(FidelityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolChoice {
    /// The noise-hardened two-stage protocol.
    TwoStage,
    /// The ideal-channel protocol (no twirl, no purification).
    Ideal,
}

/// Session parameters shared by `run`, `sweep`, and `fidelity`.
#[derive(Debug, Args, Clone)]
pub struct SessionArgs {
    /// Number of EPR pairs (N).
    #[arg(long = "n-pairs", default_value_t = 896)]
    pub n_pairs: usize,

    /// Channel probabilities "pI,pX,pZ,pY"; must sum to 1 within 1e-9.
    #[arg(long, default_value = "1,0,0,0")]
    pub channel: String,

    /// Session seed; fixes every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Fraction of pairs sacrificed to the first check.
    #[arg(long = "check-fraction", default_value_t = 0.25)]
    pub check_fraction: f64,

    /// Target fraction of purified pairs sacrificed to the stage-2 check.
    #[arg(long = "stage2-check-fraction", default_value_t = 0.25)]
    pub stage2_check_fraction: f64,

    /// Abort when a check's disagreement rate exceeds this.
    #[arg(long, default_value_t = 0.11)]
    pub threshold: f64,

    /// Eavesdropper: none, intercept-resend-z, intercept-resend-random, or
    /// pair-capture:<fraction>.
    #[arg(long, default_value = "none")]
    pub eve: String,

    /// Which transmissions the eavesdropper attacks: both, first-sequence,
    /// or second-sequence.
    #[arg(long = "eve-leg", default_value = "both")]
    pub eve_leg: String,

    /// Key string: "random" or a quaternary digit string, one digit per pair.
    #[arg(long, default_value = "random")]
    pub key: String,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub session: SessionArgs,

    /// Which protocol to run.
    #[arg(long, value_enum, default_value_t = ProtocolChoice::TwoStage)]
    pub protocol: ProtocolChoice,

    /// Also write the classical transcript to this file.
    #[arg(long)]
    pub transcript: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub session: SessionArgs,

    /// Which protocol to run.
    #[arg(long, value_enum, default_value_t = ProtocolChoice::TwoStage)]
    pub protocol: ProtocolChoice,

    /// Swept parameter: channel.pX, channel.pZ, channel.pY,
    /// check-fraction, or threshold.
    #[arg(long)]
    pub axis: String,

    #[arg(long)]
    pub from: f64,

    #[arg(long)]
    pub to: f64,

    #[arg(long)]
    pub step: f64,

    /// Sessions per grid point.
    #[arg(long, default_value_t = 200)]
    pub sessions: u64,
}

#[derive(Debug, Args)]
pub struct KeyrateArgs {
    /// Largest error rate in the table.
    #[arg(long = "delta-max", default_value_t = 0.2)]
    pub delta_max: f64,

    /// Grid spacing.
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct CodesArgs {
    /// Parity-check matrix file for the outer code (plain text: "r n" then
    /// r rows of n space-separated bits).
    #[arg(long, requires = "c2")]
    pub c1: Option<std::path::PathBuf>,

    /// Parity-check matrix file for the inner code.
    #[arg(long, requires = "c1")]
    pub c2: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct FidelityArgs {
    #[command(flatten)]
    pub session: SessionArgs,

    /// Completed (non-aborted) stage-1 trials to run.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

/// What an execution produced: the primary report and, for `run`, an
/// optional rendered transcript.
#[derive(Debug)]
pub struct Outputs {
    pub primary: String,
    pub transcript: Option<String>,
}

/// Executes a parsed invocation. Pure except for `codes --c1/--c2` file
/// reads; writing outputs is the caller's job.
pub fn execute(cli: &Cli) -> Result<Outputs, CliError> {
    match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
        Command::Keyrate(args) => keyrate_command(args),
        Command::Codes(args) => codes_command(args),
        Command::Fidelity(args) => fidelity_command(args),
    }
}

fn parse_channel(spec: &str) -> Result<ChannelModel, CliError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "--channel expects four comma-separated probabilities, got `{spec}`"
        )));
    }
    let mut p = [0.0f64; 4];
    for (slot, part) in p.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            CliError::Usage(format!("--channel contains a malformed number: `{part}`"))
        })?;
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CliError::Usage(format!(
            "--channel probabilities must sum to 1 within 1e-9, got {sum}"
        )));
    }
    // normalize away the last few ulps so the model's strict tolerance holds
    ChannelModel::new(p[0] / sum, p[1] / sum, p[2] / sum, p[3] / sum)
        .map_err(|e| CliError::Usage(format!("--channel rejected: {e}")))
}

fn parse_key(spec: &str) -> Result<KeySource, CliError> {
    if spec == "random" {
        return Ok(KeySource::Random);
    }
    let mut symbols = Vec::with_capacity(spec.len());
    for c in spec.chars() {
        match c {
            '0'..='3' => symbols.push(c as u8 - b'0'),
            other => {
                return Err(CliError::Usage(format!(
                    "--key must be `random` or quaternary digits, found `{other}`"
                )))
            }
        }
    }
    Ok(KeySource::Fixed(symbols))
}

fn parse_eve(args: &SessionArgs, seed: u64) -> Result<EveStrategy, CliError> {
    let kind: AttackKind = args
        .eve
        .parse()
        .map_err(|e| CliError::Usage(format!("--eve rejected: {e}")))?;
    let legs: LegSelection = args
        .eve_leg
        .parse()
        .map_err(|e| CliError::Usage(format!("--eve-leg rejected: {e}")))?;
    // the adversary stream is separated from the session stream by a fixed
    // stream index that batch runners never use
    Ok(EveStrategy::new(kind, legs, derive_seed(seed, u64::MAX)))
}

fn build_config(args: &SessionArgs, seed: u64) -> Result<SessionConfig, CliError> {
    let mut cfg = SessionConfig::new(args.n_pairs, CssCode::steane(), seed);
    cfg.check_fraction = args.check_fraction;
    cfg.stage2_check_fraction = args.stage2_check_fraction;
    cfg.abort_threshold = args.threshold;
    cfg.key = parse_key(&args.key)?;
    Ok(cfg)
}

fn run_session(
    protocol: ProtocolChoice,
    cfg: &SessionConfig,
    channel: &ChannelModel,
    eve: &mut EveStrategy,
) -> Result<SessionResult, CliError> {
    let result = match protocol {
        ProtocolChoice::TwoStage => run_protocol2(cfg, channel, eve),
        ProtocolChoice::Ideal => run_protocol1(cfg, channel, eve),
    };
    result.map_err(|e| CliError::Usage(format!("configuration rejected: {e}")))
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn key_digits(key: &[u8]) -> String {
    key.iter().map(|s| char::from(b'0' + s)).collect()
}

/// Writes string records through the CSV writer (RFC-4180 quoting) and
/// returns the finished text.
fn csv_from_records(records: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in records {
        writer
            .write_record(&record)
            .map_err(|e| CliError::Runtime(format!("csv write failed: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(format!("csv encoding failed: {e}")))
}

const RUN_HEADER: [&str; 11] = [
    "protocol",
    "seed",
    "n_pairs",
    "aborted",
    "abort_stage",
    "qber1",
    "qber2",
    "purified_k",
    "purified_m",
    "key_len",
    "raw_key",
];

fn run_record(cfg: &SessionConfig, result: &SessionResult) -> Vec<String> {
    vec![
        result.protocol.to_string(),
        cfg.seed.to_string(),
        cfg.n_pairs.to_string(),
        result.aborted.is_some().to_string(),
        result.aborted.map(|s| s.to_string()).unwrap_or_default(),
        fmt_opt_f64(result.qber_stage1),
        fmt_opt_f64(result.qber_stage2),
        fmt_opt_usize(result.purified_stage1),
        fmt_opt_usize(result.purified_stage2),
        result.raw_key.len().to_string(),
        key_digits(&result.raw_key),
    ]
}

fn run_command(args: &RunArgs) -> Result<Outputs, CliError> {
    let channel = parse_channel(&args.session.channel)?;
    let cfg = build_config(&args.session, args.session.seed)?;
    let mut eve = parse_eve(&args.session, args.session.seed)?;
    let result = run_session(args.protocol, &cfg, &channel, &mut eve)?;
    let primary = csv_from_records(vec![
        RUN_HEADER.iter().map(|s| s.to_string()).collect(),
        run_record(&cfg, &result),
    ])?;
    let transcript = args
        .transcript
        .as_ref()
        .map(|_| result.transcript.render_log());
    Ok(Outputs {
        primary,
        transcript,
    })
}

/// One swept parameter applied to a (channel, config) pair.
fn apply_axis(
    axis: &str,
    value: f64,
    base_channel: &ChannelModel,
    cfg: &mut SessionConfig,
) -> Result<ChannelModel, CliError> {
    let mut p = [
        base_channel.p_identity,
        base_channel.p_x,
        base_channel.p_z,
        base_channel.p_y,
    ];
    let channel_slot = match axis {
        "channel.pX" => Some(1),
        "channel.pZ" => Some(2),
        "channel.pY" => Some(3),
        "check-fraction" => {
            cfg.check_fraction = value;
            None
        }
        "threshold" => {
            cfg.abort_threshold = value;
            None
        }
        other => {
            return Err(CliError::Usage(format!(
                "--axis `{other}` is not one of channel.pX, channel.pZ, channel.pY, check-fraction, threshold"
            )))
        }
    };
    if let Some(slot) = channel_slot {
        p[slot] = value;
        p[0] = 1.0 - (p[1] + p[2] + p[3]);
        if p[0] < -1e-12 {
            return Err(CliError::Usage(format!(
                "--axis {axis}: value {value} pushes the channel weights past 1"
            )));
        }
        p[0] = p[0].max(0.0);
        return ChannelModel::new(p[0], p[1], p[2], p[3])
            .map_err(|e| CliError::Usage(format!("--axis {axis} rejected: {e}")));
    }
    Ok(*base_channel)
}

const SWEEP_HEADER: [&str; 8] = [
    "axis",
    "value",
    "sessions",
    "aborts",
    "abort_rate",
    "mean_qber1",
    "mean_qber2",
    "mean_key_len",
];

fn sweep_command(args: &SweepArgs) -> Result<Outputs, CliError> {
    if !(args.step > 0.0) || !args.step.is_finite() {
        return Err(CliError::Usage(format!(
            "--step must be positive and finite, got {}",
            args.step
        )));
    }
    if !args.from.is_finite() || !args.to.is_finite() || args.to < args.from {
        return Err(CliError::Usage(format!(
            "--from/--to describe an empty or non-finite range: {} .. {}",
            args.from, args.to
        )));
    }
    if args.sessions == 0 {
        return Err(CliError::Usage("--sessions must be at least 1".into()));
    }
    let base_channel = parse_channel(&args.session.channel)?;
    let points = ((args.to - args.from) / args.step).round() as u64 + 1;

    let mut records = vec![SWEEP_HEADER.iter().map(|s| s.to_string()).collect()];
    for point in 0..points {
        let value = args.from + point as f64 * args.step;
        let mut aborts = 0u64;
        let mut qber1_sum = 0.0;
        let mut qber1_count = 0u64;
        let mut qber2_sum = 0.0;
        let mut qber2_count = 0u64;
        let mut key_len_sum = 0u64;
        let point_seed = derive_seed(args.session.seed, point);
        for s in 0..args.sessions {
            let session_seed = derive_seed(point_seed, s);
            let mut cfg = build_config(&args.session, session_seed)?;
            let channel = apply_axis(&args.axis, value, &base_channel, &mut cfg)?;
            let mut eve = parse_eve(&args.session, session_seed)?;
            let result = run_session(args.protocol, &cfg, &channel, &mut eve)?;
            if result.aborted.is_some() {
                aborts += 1;
            }
            if let Some(q) = result.qber_stage1 {
                qber1_sum += q;
                qber1_count += 1;
            }
            if let Some(q) = result.qber_stage2 {
                qber2_sum += q;
                qber2_count += 1;
            }
            key_len_sum += result.raw_key.len() as u64;
        }
        let mean = |sum: f64, count: u64| {
            if count == 0 {
                String::new()
            } else {
                format!("{:.6}", sum / count as f64)
            }
        };
        records.push(vec![
            args.axis.clone(),
            format!("{value:.6}"),
            args.sessions.to_string(),
            aborts.to_string(),
            format!("{:.6}", aborts as f64 / args.sessions as f64),
            mean(qber1_sum, qber1_count),
            mean(qber2_sum, qber2_count),
            format!("{:.6}", key_len_sum as f64 / args.sessions as f64),
        ]);
    }
    Ok(Outputs {
        primary: csv_from_records(records)?,
        transcript: None,
    })
}

fn keyrate_command(args: &KeyrateArgs) -> Result<Outputs, CliError> {
    if !(args.step > 0.0) || !args.step.is_finite() {
        return Err(CliError::Usage(format!(
            "--step must be positive and finite, got {}",
            args.step
        )));
    }
    if !(0.0..=0.5).contains(&args.delta_max) {
        return Err(CliError::Usage(format!(
            "--delta-max must lie in [0, 0.5], got {}",
            args.delta_max
        )));
    }
    let mut out = String::from("delta,rate\n");
    let points = (args.delta_max / args.step).round() as u64 + 1;
    for i in 0..points {
        let delta = (i as f64 * args.step).min(0.5);
        let rate = qkdsim::css_key_rate(delta)
            .map_err(|e| CliError::Usage(format!("--delta-max rejected: {e}")))?;
        let _ = writeln!(out, "{delta:.4},{rate:.6}");
    }
    let _ = writeln!(out, "threshold,{:.4}", threshold_solve());
    Ok(Outputs {
        primary: out,
        transcript: None,
    })
}

fn code_line(name: &str, css: &CssCode) -> String {
    format!(
        "{name},{},{},{},{},{}",
        css.block_length(),
        css.outer().dimension(),
        css.inner().dimension(),
        css.logical_dimension(),
        css.correctable_weight()
    )
}

fn codes_command(args: &CodesArgs) -> Result<Outputs, CliError> {
    let primary = match (&args.c1, &args.c2) {
        (Some(c1_path), Some(c2_path)) => {
            let load = |path: &std::path::PathBuf, flag: &str| -> Result<LinearCode, CliError> {
                let matrix = BinaryMatrix::from_path(path).map_err(|e| {
                    CliError::Runtime(format!("{flag} {}: {e}", path.display()))
                })?;
                LinearCode::from_parity_check(matrix)
                    .map_err(|e| CliError::Runtime(format!("{flag} {}: {e}", path.display())))
            };
            let outer = load(c1_path, "--c1")?;
            let inner = load(c2_path, "--c2")?;
            let css = CssCode::new(outer, inner)
                .map_err(|e| CliError::Runtime(format!("code pair rejected: {e}")))?;
            format!("{}\n", code_line("custom", &css))
        }
        _ => format!("{}\n", code_line("steane", &CssCode::steane())),
    };
    Ok(Outputs {
        primary,
        transcript: None,
    })
}

const FIDELITY_HEADER: [&str; 4] = ["trials", "successes", "rate", "lower95"];

fn fidelity_command(args: &FidelityArgs) -> Result<Outputs, CliError> {
    let channel = parse_channel(&args.session.channel)?;
    let cfg = build_config(&args.session, args.session.seed)?;
    let estimate = estimate_fidelity(&cfg, &channel, args.trials)
        .map_err(|e| CliError::Usage(format!("fidelity estimation rejected: {e}")))?;
    let primary = csv_from_records(vec![
        FIDELITY_HEADER.iter().map(|s| s.to_string()).collect(),
        vec![
            estimate.trials.to_string(),
            estimate.successes.to_string(),
            format!("{:.6}", estimate.point),
            format!("{:.6}", estimate.lower_bound95),
        ],
    ])?;
    Ok(Outputs {
        primary,
        transcript: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Cli {
        Cli::try_parse_from(argv).expect("argv parses")
    }

    #[test]
    fn run_flags_parse_into_a_session_spec() {
        let cli = parse(&[
            "qkdsim",
            "run",
            "--n-pairs",
            "896",
            "--channel",
            "0.97,0.01,0.01,0.01",
            "--seed",
            "42",
        ]);
        let Command::Run(args) = &cli.command else {
            panic!("expected run");
        };
        assert_eq!(args.session.n_pairs, 896);
        assert_eq!(args.session.seed, 42);
        assert_eq!(args.session.channel, "0.97,0.01,0.01,0.01");
        assert_eq!(args.protocol, ProtocolChoice::TwoStage);
        assert_eq!(args.session.threshold, 0.11);
    }

    #[test]
    fn keyrate_table_has_21_rows_plus_threshold() {
        let cli = parse(&["qkdsim", "keyrate", "--delta-max", "0.2", "--step", "0.01"]);
        let out = execute(&cli).unwrap();
        let lines: Vec<&str> = out.primary.trim_end().lines().collect();
        assert_eq!(lines[0], "delta,rate");
        assert_eq!(lines.len(), 1 + 21 + 1);
        assert_eq!(lines[lines.len() - 1], "threshold,0.1100");
        // the 0.11 row sits just above zero
        let row_011 = lines.iter().find(|l| l.starts_with("0.1100,")).unwrap();
        let rate: f64 = row_011.split(',').nth(1).unwrap().parse().unwrap();
        assert!(rate > 0.0 && rate < 0.001, "rate at 0.11 is {rate}");
    }

    #[test]
    fn sweep_flags_parse() {
        let cli = parse(&[
            "qkdsim",
            "sweep",
            "--axis",
            "channel.pX",
            "--from",
            "0",
            "--to",
            "0.2",
            "--step",
            "0.02",
            "--sessions",
            "200",
        ]);
        let Command::Sweep(args) = &cli.command else {
            panic!("expected sweep");
        };
        assert_eq!(args.axis, "channel.pX");
        assert_eq!(args.sessions, 200);
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(Cli::try_parse_from(["qkdsim", "run", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["qkdsim", "teleport"]).is_err());
    }

    #[test]
    fn default_codes_line() {
        let cli = parse(&["qkdsim", "codes"]);
        let out = execute(&cli).unwrap();
        assert_eq!(out.primary, "steane,7,4,3,1,1\n");
    }

    #[test]
    fn channel_validation_names_the_flag() {
        let cli = parse(&["qkdsim", "run", "--channel", "0.5,0.2,0.2,0.2"]);
        let err = execute(&cli).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message().contains("--channel"), "{}", err.message());

        let cli = parse(&["qkdsim", "run", "--channel", "a,b,c,d"]);
        let err = execute(&cli).unwrap_err();
        assert!(err.message().contains("--channel"));
    }

    #[test]
    fn misaligned_session_is_a_usage_error() {
        let cli = parse(&["qkdsim", "run", "--n-pairs", "900"]);
        let err = execute(&cli).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn run_emits_one_row_and_abort_is_data() {
        let cli = parse(&[
            "qkdsim",
            "run",
            "--eve",
            "intercept-resend-random",
            "--seed",
            "7",
        ]);
        let out = execute(&cli).unwrap();
        let lines: Vec<&str> = out.primary.trim_end().lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], RUN_HEADER.join(","));
        assert!(lines[1].contains("true,stage1-check"));
    }

    #[test]
    fn fixed_key_round_trips_through_a_run() {
        let key: String = std::iter::repeat("0123").take(224).collect::<String>();
        let cli = parse(&["qkdsim", "run", "--key", &key, "--seed", "3"]);
        let out = execute(&cli).unwrap();
        let row = out.primary.trim_end().lines().nth(1).unwrap();
        let raw_key = row.split(',').nth(10).unwrap();
        assert_eq!(raw_key.len(), 10);
        assert!(raw_key.chars().all(|c| ('0'..='3').contains(&c)));
    }

    #[test]
    fn eve_leg_strings_parse() {
        let cli = parse(&[
            "qkdsim",
            "run",
            "--eve",
            "pair-capture:0.3",
            "--eve-leg",
            "second-sequence",
        ]);
        assert!(execute(&cli).is_ok());

        let cli = parse(&["qkdsim", "run", "--eve", "mitm"]);
        let err = execute(&cli).unwrap_err();
        assert!(err.message().contains("--eve"));
    }
}
