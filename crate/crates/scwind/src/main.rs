//! `scwind` — windowed SC-LDPC decoding experiments from the command line.

use clap::{Args, Parser, Subcommand, ValueEnum};
use scwind::bp_engine::CnRule;
use scwind::channel::{awgn_llrs, channel_stream};
use scwind::harness::{
    build_testset, manipulation_experiment, render_report, replay_testset, run_ber_sweep,
    ManipConfig, StatsReport, SweepConfig, TestSet, TestsetBuildConfig, TestsetFrame,
    TestsetHeader,
};
use scwind::sc_code::{CodeSpec, CoupledCode};
use scwind::window_decoder::{
    average_complexity, DecoderConfig, DetectorKind, Scheme, WindowDecoder,
};
use scwind::{Error, Result};
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "scwind", version, about = "Windowed decoding of spatially coupled LDPC codes")]
struct Cli {
    /// Master seed for every pseudo-random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Default code parameters when --code is not given.
    #[arg(long, global = true, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    /// Z = 96 sub-matrices (fast desk experiments).
    Desk,
    /// Z = 960 sub-matrices (full published size).
    Paper,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct codes and export them as alist + JSON descriptor.
    #[command(subcommand)]
    Code(CodeCmd),
    /// Sample channel LLR frames.
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Decode stored frames with one scheme, exporting JSONL traces.
    Decode(DecodeArgs),
    /// Monte Carlo BER sweep over SNRs and schemes.
    Sweep(SweepArgs),
    /// Build or replay stall test-sets.
    #[command(subcommand)]
    Testset(TestsetCmd),
    /// Manipulated-block stall experiment.
    Manip(ManipArgs),
    /// Render summary tables from sweep stats files.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum CodeCmd {
    /// Build a code and write h<i>.alist plus descriptor.json.
    Build(CodeBuildArgs),
}

#[derive(Args)]
struct CodeBuildArgs {
    #[arg(long)]
    dv: Option<u32>,
    #[arg(long)]
    dc: Option<u32>,
    #[arg(long)]
    mu: Option<u32>,
    /// Edge-spreading split, e.g. 3,2.
    #[arg(long, value_delimiter = ',')]
    spread: Option<Vec<u32>>,
    #[arg(long)]
    z: Option<usize>,
    #[arg(long = "L", alias = "l")]
    l: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ChannelCmd {
    /// Draw AWGN frames for the all-zero codeword.
    Sample(ChannelSampleArgs),
}

#[derive(Args)]
struct ChannelSampleArgs {
    /// Eb/N0 in dB.
    #[arg(long)]
    snr: f64,
    #[arg(long)]
    trials: usize,
    /// Code directory (descriptor + alists); defaults to the --scale code.
    #[arg(long)]
    code: Option<PathBuf>,
    /// Output file (test-set format, stall position 0).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecoderArgs {
    /// Window size in check-block rows.
    #[arg(long, default_value_t = 9)]
    w: usize,
    #[arg(long, default_value_t = 3)]
    imin: u32,
    #[arg(long, default_value_t = 6)]
    imax: u32,
    /// Backward-shift distance.
    #[arg(long, default_value_t = 2)]
    nb: usize,
    /// Stall detector: parity | llr.
    #[arg(long, default_value = "llr")]
    detector: String,
    #[arg(long = "delta-ber", default_value_t = 1e-7)]
    delta_ber: f64,
    /// Inspected window position (1 = leftmost).
    #[arg(long = "detect-position", default_value_t = 3)]
    detect_position: usize,
    /// Consecutive erroneous blocks that mark a stall.
    #[arg(long, default_value_t = 1)]
    eta: usize,
    /// Per-block error fraction above which a block is erroneous.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Check-node rule: sum-product | min-sum[:offset].
    #[arg(long = "cn-rule", default_value = "sum-product")]
    cn_rule: String,
}

impl DecoderArgs {
    fn to_config(&self) -> Result<DecoderConfig> {
        let detector = match self.detector.as_str() {
            "parity" => DetectorKind::Parity,
            "llr" => DetectorKind::Llr,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown detector {other:?} (expected parity | llr)"
                )))
            }
        };
        let cn_rule = match self.cn_rule.as_str() {
            "sum-product" => CnRule::SumProduct,
            other => {
                if let Some(rest) = other.strip_prefix("min-sum") {
                    let offset = match rest.strip_prefix(':') {
                        Some(v) => v.parse().map_err(|_| {
                            Error::InvalidConfig(format!("bad min-sum offset in {other:?}"))
                        })?,
                        None => 0.0,
                    };
                    CnRule::OffsetMinSum(offset)
                } else {
                    return Err(Error::InvalidConfig(format!(
                        "unknown cn rule {other:?} (expected sum-product | min-sum[:offset])"
                    )));
                }
            }
        };
        Ok(DecoderConfig {
            w: self.w,
            i_min: self.imin,
            i_max: self.imax,
            n_b: self.nb,
            detector,
            delta_ber: self.delta_ber,
            detect_position: self.detect_position,
            eta: self.eta,
            delta: self.delta,
            cn_rule,
            ..DecoderConfig::new(self.w)
        })
    }
}

#[derive(Args)]
struct DecodeArgs {
    /// Scheme: fixed | fixedN | aid | wsd | wtd ("fixed" uses --imin).
    #[arg(long)]
    scheme: String,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long)]
    code: Option<PathBuf>,
    /// Input frames (test-set format).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output JSONL: one line per outer window step.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// SNR points in dB, e.g. 2.6,2.8,3.0.
    #[arg(long, value_delimiter = ',')]
    snrs: Vec<f64>,
    /// Trials per (SNR, scheme) point.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Schemes, e.g. fixed3,fixed4,aid,wsd,wtd.
    #[arg(long, value_delimiter = ',', default_value = "fixed3,fixed4,aid,wsd,wtd")]
    schemes: Vec<String>,
    /// Stop a point after this many frame errors.
    #[arg(long = "max-events", default_value_t = 100)]
    max_events: usize,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long)]
    code: Option<PathBuf>,
    /// CSV output path; full stats land next to it as <out>.stats.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TestsetCmd {
    /// Collect frames that stall under the fixed baseline decoder.
    Build(TestsetBuildArgs),
    /// Decode a stored test-set with one or more schemes.
    Replay(TestsetReplayArgs),
}

#[derive(Args)]
struct TestsetBuildArgs {
    #[arg(long)]
    snr: f64,
    /// Stalled frames to collect.
    #[arg(long)]
    count: usize,
    /// Baseline fixed iteration count.
    #[arg(long, default_value_t = 3)]
    iters: u32,
    /// Give up after this many generated frames.
    #[arg(long = "max-attempts", default_value_t = 1_000_000)]
    max_attempts: usize,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TestsetReplayArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "fixed3,fixed4,aid,wsd,wtd")]
    schemes: Vec<String>,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long)]
    code: Option<PathBuf>,
    /// Optional JSON report output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ManipArgs {
    /// Nominal Eb/N0 in dB.
    #[arg(long)]
    snr: f64,
    /// Reduced SNR of the manipulated block.
    #[arg(long = "snr-manip")]
    snr_manip: f64,
    /// Manipulated block (1-based).
    #[arg(long, default_value_t = 10)]
    block: usize,
    /// Cleanly decodable codewords to manipulate.
    #[arg(long, default_value_t = 500)]
    count: usize,
    /// Baseline fixed iteration count.
    #[arg(long, default_value_t = 3)]
    iters: u32,
    /// Locally boosted iteration count.
    #[arg(long, default_value_t = 4)]
    boost: u32,
    /// First boosted output position.
    #[arg(long, default_value_t = 8)]
    ls: usize,
    /// Last boosted output position.
    #[arg(long, default_value_t = 12)]
    le: usize,
    #[arg(long = "max-attempts", default_value_t = 1_000_000)]
    max_attempts: usize,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long)]
    code: Option<PathBuf>,
    /// Optional JSON report output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Stats files written by `sweep` (<out>.stats.json).
    files: Vec<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("rayon pool: {e}")))?;
    }
    match &cli.cmd {
        Cmd::Code(CodeCmd::Build(args)) => code_build(&cli, args),
        Cmd::Channel(ChannelCmd::Sample(args)) => channel_sample(&cli, args),
        Cmd::Decode(args) => decode(&cli, args),
        Cmd::Sweep(args) => sweep(&cli, args),
        Cmd::Testset(TestsetCmd::Build(args)) => testset_build(&cli, args),
        Cmd::Testset(TestsetCmd::Replay(args)) => testset_replay(&cli, args),
        Cmd::Manip(args) => manip(&cli, args),
        Cmd::Report(args) => report(args),
    }
}

fn default_spec(cli: &Cli) -> CodeSpec {
    match cli.scale {
        Scale::Desk => CodeSpec::desk_default(cli.seed),
        Scale::Paper => CodeSpec::paper_scale(cli.seed),
    }
}

fn load_code(cli: &Cli, dir: &Option<PathBuf>) -> Result<CoupledCode> {
    match dir {
        Some(dir) => CoupledCode::import(dir),
        None => CoupledCode::build(&default_spec(cli)),
    }
}

fn parse_schemes(names: &[String], imin: u32) -> Result<Vec<Scheme>> {
    names
        .iter()
        .map(|s| {
            if s == "fixed" {
                Ok(Scheme::Fixed { iters: imin })
            } else {
                s.parse()
            }
        })
        .collect()
}

fn code_build(cli: &Cli, args: &CodeBuildArgs) -> Result<()> {
    let defaults = default_spec(cli);
    let spec = CodeSpec {
        dv: args.dv.unwrap_or(defaults.dv),
        dc: args.dc.unwrap_or(defaults.dc),
        mu: args.mu.unwrap_or(defaults.mu),
        spread: args.spread.clone().unwrap_or(defaults.spread),
        z: args.z.unwrap_or(defaults.z),
        l: args.l.unwrap_or(defaults.l),
        seed: cli.seed,
    };
    let code = CoupledCode::build(&spec)?;
    let report = code.validate();
    code.export(&args.out)?;
    println!(
        "wrote {} (m = {}, n = {}, L = {}, rate = {:.5})",
        args.out.display(),
        code.m,
        code.n,
        spec.l,
        code.rate
    );
    for check in &report.checks {
        println!("  [{}] {}", if check.pass { "ok" } else { "FAIL" }, check.name);
    }
    if report.degraded_girth {
        println!("  warning: lift retry budget exhausted, block girth degraded");
    }
    if !report.all_ok() {
        return Err(Error::InvalidSpec("construction produced an invalid code".into()));
    }
    Ok(())
}

fn channel_sample(cli: &Cli, args: &ChannelSampleArgs) -> Result<()> {
    let code = load_code(cli, &args.code)?;
    let (l, n) = (code.spec.l, code.n);
    let mut frames = Vec::with_capacity(args.trials);
    for t in 0..args.trials {
        let frame = awgn_llrs(l, n, args.snr, code.rate, cli.seed, channel_stream(t as u64))?;
        frames.push(TestsetFrame {
            s: 0,
            llrs: frame.llr.iter().map(|&v| v as f32).collect(),
        });
    }
    let set = TestSet {
        header: TestsetHeader {
            code: code.spec.clone(),
            snr_db: args.snr,
            seed: cli.seed,
            frame_count: frames.len(),
            l,
            n,
            e_s: None,
            histogram: vec![0; l],
        },
        frames,
    };
    set.write(&args.out)?;
    println!("wrote {} frames to {}", args.trials, args.out.display());
    Ok(())
}

fn decode(cli: &Cli, args: &DecodeArgs) -> Result<()> {
    let code = load_code(cli, &args.code)?;
    let config = args.decoder.to_config()?;
    let scheme = if args.scheme == "fixed" {
        Scheme::Fixed { iters: config.i_min }
    } else {
        args.scheme.parse()?
    };
    let set = TestSet::read(&args.input)?;
    set.check_matches(&code)?;
    let dec = WindowDecoder::new(&code, config)?;

    let mut out = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    let mut stalls = 0usize;
    let mut errors = 0u64;
    let mut cbar_sum = 0.0;
    for i in 0..set.frames.len() {
        let frame = set.frame(i, &code);
        let result = dec.decode(&frame, scheme)?;
        for step in &result.trace {
            let line = serde_json::json!({
                "frame": i,
                "p_win": step.p_win,
                "iterations": step.iterations,
                "detector_fired": step.detector_fired,
                "shifts": step.shifts,
            });
            writeln!(out, "{line}")?;
        }
        let cbar = average_complexity(&result.ledger)?;
        println!(
            "frame {i}: errors = {}, stall = {}, cbar = {cbar:.3}",
            result.bit_errors(),
            result.stall.s.map_or("none".into(), |s| s.to_string()),
        );
        stalls += usize::from(result.stall.s.is_some());
        errors += result.bit_errors();
        cbar_sum += cbar;
    }
    out.flush()?;
    let count = set.frames.len().max(1);
    println!(
        "{} frames: {stalls} stalls, ber = {:.3e}, mean cbar = {:.3}",
        set.frames.len(),
        errors as f64 / (count * code.num_vars()) as f64,
        cbar_sum / count as f64,
    );
    Ok(())
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let code = load_code(cli, &args.code)?;
    let decoder = args.decoder.to_config()?;
    let cfg = SweepConfig {
        snrs_db: args.snrs.clone(),
        trials: args.trials,
        master_seed: cli.seed,
        schemes: parse_schemes(&args.schemes, decoder.i_min)?,
        decoder,
        max_error_events: args.max_events,
    };
    let report = run_ber_sweep(&code, &cfg)?;
    std::fs::write(&args.out, report.to_csv())?;
    let stats_path = stats_path_for(&args.out);
    std::fs::write(&stats_path, serde_json::to_string_pretty(&report)?)?;
    println!("wrote {} and {}", args.out.display(), stats_path.display());
    print!("{}", render_report(&[report], code.spec.l));
    Ok(())
}

fn stats_path_for(csv: &Path) -> PathBuf {
    let mut name = csv.file_stem().unwrap_or_default().to_os_string();
    name.push(".stats.json");
    csv.with_file_name(name)
}

fn testset_build(cli: &Cli, args: &TestsetBuildArgs) -> Result<()> {
    let code = load_code(cli, &args.code)?;
    let cfg = TestsetBuildConfig {
        snr_db: args.snr,
        master_seed: cli.seed,
        target: args.count,
        baseline_iters: args.iters,
        decoder: args.decoder.to_config()?,
        max_attempts: args.max_attempts,
    };
    let set = build_testset(&code, &cfg)?;
    set.write(&args.out)?;
    println!(
        "collected {} stalls in {} (E[s] = {:.2})",
        set.frames.len(),
        args.out.display(),
        set.header.e_s.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn testset_replay(cli: &Cli, args: &TestsetReplayArgs) -> Result<()> {
    let code = load_code(cli, &args.code)?;
    let decoder = args.decoder.to_config()?;
    let schemes = parse_schemes(&args.schemes, decoder.i_min)?;
    let set = TestSet::read(&args.input)?;
    let report = replay_testset(&code, &set, &schemes, &decoder)?;
    println!(
        "{:>10} {:>8} {:>10} {:>8} {:>10}",
        "scheme", "frames", "survival", "E[s]", "cbar"
    );
    for e in &report.entries {
        println!(
            "{:>10} {:>8} {:>10.4} {:>8.2} {:>10.3}",
            e.scheme,
            e.frames,
            e.survival_rate(),
            e.e_s,
            e.cbar
        );
    }
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn manip(cli: &Cli, args: &ManipArgs) -> Result<()> {
    let code = load_code(cli, &args.code)?;
    let cfg = ManipConfig {
        snr_db: args.snr,
        snr_manip_db: args.snr_manip,
        block: args.block,
        count: args.count,
        master_seed: cli.seed,
        baseline_iters: args.iters,
        boost_iters: args.boost,
        boost_from: args.ls,
        boost_to: args.le,
        decoder: args.decoder.to_config()?,
        max_attempts: args.max_attempts,
    };
    let report = manipulation_experiment(&code, &cfg)?;
    println!(
        "manipulated block {} at {} dB ({} clean frames from {} attempts)",
        args.block, args.snr_manip, report.clean_frames_used, report.attempts
    );
    println!(
        "{:>16} {:>8} {:>12} {:>8} {:>10}",
        "variant", "stalls", "stall_frac", "E[s]", "cbar"
    );
    for v in &report.variants {
        println!(
            "{:>16} {:>8} {:>12.4} {:>8.2} {:>10.3}",
            v.name,
            v.stalls,
            v.stall_fraction(),
            v.e_s,
            v.cbar
        );
    }
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    if args.files.is_empty() {
        return Err(Error::EmptyInput("no stats files given"));
    }
    let mut reports = Vec::new();
    for path in &args.files {
        let text = std::fs::read_to_string(path)?;
        reports.push(serde_json::from_str::<StatsReport>(&text)?);
    }
    let l = reports
        .iter()
        .flat_map(|r| r.points.iter())
        .map(|p| p.s_hist.len())
        .max()
        .unwrap_or(0);
    print!("{}", render_report(&reports, l));
    Ok(())
}
