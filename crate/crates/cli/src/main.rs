mod config;
mod manifest;
mod reproduce;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use realq::moment::{real_bound, PptMode, RealBoundOptions, RelaxationLevel};
use realq::sdp::SolveStatus;
use realq::search::{ratio_scan, survey_point, ScanCandidate, SurveyPoint, SurveySummary};
use realq::witness::{BoundsReport, FMatrix, FamilyParams, RealBoundSummary, SignTable};
use serde_json::json;

use config::{Config, FULL_SCALE_POINTS, THREADS_ENV};
use manifest::{write_output, RunManifest};

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "realq", version, about = "Real versus complex bounds for a bilocal network witness")]
struct Cli {
    /// Worker threads (default: $REALQ_THREADS, else all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file overriding any subset of the defaults shown by `realq config`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical, complex and real bounds of one witness.
    Bounds(BoundsArgs),
    /// Recompute anchored reference values and compare.
    Reproduce {
        /// A check id, or `all`. `list` prints the ids.
        target: String,
        /// Skip checks that take minutes.
        #[arg(long)]
        quick: bool,
    },
    /// Random scan of F_q/F_r over 3x3 witnesses.
    Scan(ScanArgs),
    /// Survey of random two-setting functionals.
    Survey(SurveyArgs),
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Args)]
struct BoundsArgs {
    /// Witness file: JSON rows or CSV.
    #[arg(long, group = "source")]
    f: Option<PathBuf>,
    /// Family parameters `alpha,beta,gamma`; normalized before use.
    #[arg(long, group = "source", allow_hyphen_values = true)]
    family: Option<String>,
    /// Level `n` or `n_a,n_c`.
    #[arg(long)]
    level: Option<String>,
    /// Sign table override `s0,s1,s2` (entries ±1).
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
    #[arg(long, value_enum)]
    ppt: Option<PptArg>,
    /// Skip the moment relaxation.
    #[arg(long)]
    no_real: bool,
    /// Print JSON instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PptArg {
    Summed,
    PerBlock,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    refine_top: Option<usize>,
    /// Entries drawn from [-range, range].
    #[arg(long)]
    range: Option<f64>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long, default_value = "scan-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SurveyArgs {
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Run the full 40000-point survey.
    #[arg(long, conflicts_with = "points")]
    full_scale: bool,
    #[arg(long, default_value = "survey-out")]
    out: PathBuf,
}

type CmdResult = Result<(), (u8, String)>;

fn input_err(e: impl std::fmt::Display) -> (u8, String) {
    (EXIT_INPUT, e.to_string())
}

fn parse_level(s: &str) -> Result<RelaxationLevel, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<usize>().map_err(|e| format!("level '{s}': {e}"));
    let l = match parts.as_slice() {
        [n] => RelaxationLevel::uniform(num(n)?),
        [a, c] => RelaxationLevel::new(num(a)?, num(c)?),
        _ => return Err(format!("level '{s}': expected n or n_a,n_c")),
    };
    l.map_err(|e| e.to_string())
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 3 values, got {}", v.len()))
}

fn parse_sign(s: &str) -> Result<SignTable, String> {
    let [a, b, c] = parse_triple(s)?;
    let to_i8 = |v: f64| match v {
        1.0 => Ok(1i8),
        -1.0 => Ok(-1i8),
        _ => Err(format!("sign entries must be ±1, got {v}")),
    };
    SignTable::structured(to_i8(a)?, to_i8(b)?, to_i8(c)?).map_err(|e| e.to_string())
}

fn load_f(args: &BoundsArgs) -> Result<FMatrix, String> {
    if let Some(path) = &args.f {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        return text.parse::<FMatrix>().map_err(|e| format!("{}: {e}", path.display()));
    }
    if let Some(s) = &args.family {
        let [a, b, g] = parse_triple(s)?;
        let n = (a * a + b * b + g * g).sqrt();
        if !(n > 0.0) {
            return Err("family parameters must not all vanish".into());
        }
        let p = FamilyParams::new(a / n, b / n, g / n).map_err(|e| e.to_string())?;
        return Ok(FMatrix::family(&p));
    }
    Err("one of --f or --family is required".into())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_bounds(args: &BoundsArgs, cfg: &Config) -> CmdResult {
    let f = load_f(args).map_err(input_err)?;
    let sign = match &args.sign {
        Some(s) => parse_sign(s).map_err(input_err)?,
        None => SignTable::RESOLVED,
    };
    let level = match &args.level {
        Some(s) => parse_level(s).map_err(input_err)?,
        None => cfg.level,
    };
    let ppt = match args.ppt {
        Some(PptArg::Summed) => PptMode::Summed,
        Some(PptArg::PerBlock) => PptMode::PerBlock,
        None => cfg.ppt,
    };
    let mut report = BoundsReport::new(&f, &sign, &cfg.optimizer);
    let mut solver_failed = None;
    if !args.no_real {
        let opts = RealBoundOptions {
            level,
            ppt,
            use_symmetry: cfg.use_symmetry,
            tolerances: cfg.tolerances,
        };
        match real_bound(&f, &sign, &opts) {
            Ok(r) => {
                if r.status != SolveStatus::Optimal || !r.verification.verified {
                    solver_failed = Some(format!(
                        "moment relaxation: status {:?}, verified {}",
                        r.status, r.verification.verified
                    ));
                }
                report = report.with_real(RealBoundSummary {
                    value: r.value,
                    level: level.n_a.max(level.n_c),
                    status: format!("{:?}", r.status),
                    duality_gap: r.relative_gap,
                    primal_value: r.value,
                    dual_value: r.dual_value,
                });
            }
            Err(e) => solver_failed = Some(format!("moment relaxation: {e}")),
        }
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print_table(&report);
    }
    match solver_failed {
        Some(msg) => Err((EXIT_SOLVER, msg)),
        None => Ok(()),
    }
}

fn print_table(r: &BoundsReport) {
    println!("f");
    for row in r.f.rows() {
        println!("  {}", fmt_vec(&row));
    }
    let e = r.sign_table.entries();
    println!("sign[b][x]  {:?}", e);
    let s: Vec<f64> = r.classical.s.iter().map(|&v| f64::from(v)).collect();
    let t: Vec<f64> = r.classical.t.iter().map(|&v| f64::from(v)).collect();
    println!("F_c      {:<22} s = {}  t = {}", r.classical.value, fmt_vec(&s), fmt_vec(&t));
    if let Some(c) = &r.complex {
        println!(
            "F_q      {:<22} {} (construction {}, converged {})",
            c.value, c.method, c.settings.value, c.settings.converged
        );
    }
    if let Some(re) = &r.real {
        println!(
            "F_r      {:<22} level {}, {}, gap {:.3e}, dual {}",
            re.value, re.level, re.status, re.duality_gap, re.dual_value
        );
    }
    if let Some(q) = r.ratio_qr {
        println!("F_q/F_r  {q}");
    }
}

fn cmd_reproduce(target: &str, quick: bool, cfg: &Config) -> CmdResult {
    let all = reproduce::checks();
    if target == "list" {
        for c in &all {
            println!("{:<14} {}{}", c.id, c.description, if c.slow { " (slow)" } else { "" });
        }
        return Ok(());
    }
    let selected: Vec<_> = if target == "all" {
        all.iter().filter(|c| !(quick && c.slow)).collect()
    } else {
        let found: Vec<_> = all.iter().filter(|c| c.id == target).collect();
        if found.is_empty() {
            return Err(input_err(format!("unknown check '{target}'; try `realq reproduce list`")));
        }
        found
    };
    let mut failed = 0;
    let mut results = Vec::new();
    for c in selected {
        let r = c.run(cfg);
        println!(
            "{} {:<14} achieved {:<22} expected {:<28} {:.1}s  {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.achieved,
            r.expected,
            r.seconds,
            r.detail
        );
        failed += usize::from(!r.pass);
        results.push(r);
    }
    eprintln!("{}", serde_json::to_string(&results).expect("results serialize"));
    if failed > 0 {
        Err((1, format!("{failed} check(s) failed")))
    } else {
        Ok(())
    }
}

fn prepare_out(dir: &Path) -> Result<(), (u8, String)> {
    std::fs::create_dir_all(dir).map_err(|e| input_err(format!("{}: {e}", dir.display())))
}

fn io_err(e: std::io::Error) -> (u8, String) {
    (1, e.to_string())
}

fn scan_row(w: &mut csv::Writer<Vec<u8>>, rank: usize, kind: &str, c: &ScanCandidate) -> csv::Result<()> {
    let mut rec = vec![
        rank.to_string(),
        c.index.to_string(),
        kind.to_string(),
        c.ratio.to_string(),
        c.f_c.to_string(),
        c.f_q.to_string(),
        c.f_r.to_string(),
        c.relative_gap.to_string(),
        c.ascent_steps.to_string(),
    ];
    rec.extend(c.f.as_slice().iter().map(|v| v.to_string()));
    w.write_record(&rec)
}

fn cmd_scan(args: &ScanArgs, cfg: &Config, argv: Vec<String>) -> CmdResult {
    let mut sc = cfg.scan;
    if let Some(v) = args.samples {
        sc.samples = v;
    }
    if let Some(v) = args.seed {
        sc.seed = v;
    }
    if let Some(v) = args.refine_top {
        sc.refine_top = v;
    }
    if let Some(v) = args.range {
        sc.entry_range = v;
    }
    sc.level = match &args.level {
        Some(s) => parse_level(s).map_err(input_err)?,
        None => cfg.level,
    };
    sc.validate().map_err(input_err)?;
    prepare_out(&args.out)?;
    let t = Instant::now();
    let report = ratio_scan(&sc);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["rank", "index", "kind", "ratio", "f_c", "f_q", "f_r", "relative_gap", "ascent_steps"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for x in 1..=3 {
        for z in 1..=3 {
            header.push(format!("f{x}{z}"));
        }
    }
    w.write_record(&header).map_err(|e| (1, e.to_string()))?;
    for (i, c) in report.ranked.iter().enumerate() {
        scan_row(&mut w, i + 1, "sample", c).map_err(|e| (1, e.to_string()))?;
    }
    for (i, c) in report.refined.iter().enumerate() {
        scan_row(&mut w, i + 1, "refined", c).map_err(|e| (1, e.to_string()))?;
    }
    let csv_bytes = w.into_inner().map_err(|e| (1, e.to_string()))?;
    let summary = json!({
        "config": sc,
        "samples": sc.samples,
        "succeeded": report.ranked.len(),
        "failures": report.failures,
        "best_ratio": report.best_ratio(),
        "top": report.ranked.iter().take(10).collect::<Vec<_>>(),
        "refined": report.refined,
    });
    let outputs = vec![
        write_output(&args.out, "scan.csv", &csv_bytes).map_err(io_err)?,
        write_output(&args.out, "scan.json", &serde_json::to_vec_pretty(&summary).expect("json")).map_err(io_err)?,
    ];
    RunManifest {
        command: argv,
        config: serde_json::to_value(sc).expect("json"),
        seed: sc.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        elapsed_seconds: t.elapsed().as_secs_f64(),
        outputs,
    }
    .write(&args.out)
    .map_err(io_err)?;
    println!(
        "{} of {} samples solved, best ratio {}",
        report.ranked.len(),
        sc.samples,
        report.best_ratio().map_or("n/a".to_string(), |r| r.to_string())
    );
    for f in &report.failures {
        eprintln!("sample {}: {}", f.index, f.error);
    }
    Ok(())
}

fn survey_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "index", "value", "a_i", "c_i", "both_large", "separated", "converged", "restarts", "lambda_l0", "lambda_l1",
        "lambda_r0", "lambda_r1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for b in 0..4 {
        for x in 0..3 {
            for z in 0..3 {
                h.push(format!("f_{b}{x}{z}"));
            }
        }
    }
    h
}

fn survey_record(p: &SurveyPoint) -> Vec<String> {
    let m = &p.model;
    let mut r = vec![
        p.index.to_string(),
        p.value.to_string(),
        p.a_i.to_string(),
        p.c_i.to_string(),
        p.both_large().to_string(),
        p.separated().to_string(),
        p.converged.to_string(),
        p.restarts.to_string(),
        m.lambda_l[0].to_string(),
        m.lambda_l[1].to_string(),
        m.lambda_r[0].to_string(),
        m.lambda_r[1].to_string(),
    ];
    for b in 0..4 {
        for x in 0..3 {
            for z in 0..3 {
                r.push(p.functional.f[b][x][z].to_string());
            }
        }
    }
    r
}

fn cmd_survey(args: &SurveyArgs, cfg: &Config, argv: Vec<String>) -> CmdResult {
    use rayon::prelude::*;

    let mut sc = cfg.survey;
    if let Some(v) = args.seed {
        sc.seed = v;
    }
    if let Some(v) = args.restarts {
        sc.restarts = v;
    }
    let n = if args.full_scale {
        FULL_SCALE_POINTS
    } else {
        args.points.unwrap_or(cfg.survey_points)
    };
    prepare_out(&args.out)?;
    let t = Instant::now();
    let mut points: Vec<SurveyPoint> = Vec::with_capacity(n);
    let chunk = 64.max(rayon::current_num_threads());
    let mut done = 0;
    while done < n {
        let end = (done + chunk).min(n);
        points.extend((done..end).into_par_iter().map(|i| survey_point(i, &sc)).collect::<Vec<_>>());
        if done == 0 && n > end {
            let per = t.elapsed().as_secs_f64() / end as f64;
            eprintln!("estimated total time {:.1} min for {n} points", per * n as f64 / 60.0);
        }
        done = end;
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(survey_header()).map_err(|e| (1, e.to_string()))?;
    for p in &points {
        w.write_record(survey_record(p)).map_err(|e| (1, e.to_string()))?;
    }
    let csv_bytes = w.into_inner().map_err(|e| (1, e.to_string()))?;
    let s = SurveySummary::of(&points);
    let note = if n < FULL_SCALE_POINTS {
        format!("desk-scale run of {n} points; the {FULL_SCALE_POINTS}-point claim is reproduced only qualitatively")
    } else {
        format!("full-scale run of {n} points")
    };
    let summary = json!({
        "config": sc,
        "points": n,
        "summary": s,
        "separated_fraction": s.separated_fraction(),
        "note": note,
        "both_large_points": points.iter().filter(|p| p.both_large()).map(|p| p.index).collect::<Vec<_>>(),
    });
    let outputs = vec![
        write_output(&args.out, "survey.csv", &csv_bytes).map_err(io_err)?,
        write_output(&args.out, "survey.json", &serde_json::to_vec_pretty(&summary).expect("json")).map_err(io_err)?,
    ];
    RunManifest {
        command: argv,
        config: json!({ "survey": sc, "points": n }),
        seed: sc.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        elapsed_seconds: t.elapsed().as_secs_f64(),
        outputs,
    }
    .write(&args.out)
    .map_err(io_err)?;
    println!(
        "{n} points: {} with both |a_i|, |c_i| > 0.01; {:.1}% separated; {} not converged. {note}",
        s.both_large,
        100.0 * s.separated_fraction(),
        s.not_converged
    );
    Ok(())
}

fn init_threads(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|e| format!("{THREADS_ENV}='{v}': {e}"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err("thread count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    init_threads(cli.threads).map_err(input_err)?;
    let cfg = Config::load(cli.config.as_deref()).map_err(input_err)?;
    let argv: Vec<String> = std::env::args().collect();
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a, &cfg),
        Command::Reproduce { target, quick } => cmd_reproduce(target, *quick, &cfg),
        Command::Scan(a) => cmd_scan(a, &cfg, argv),
        Command::Survey(a) => cmd_survey(a, &cfg, argv),
        Command::Config => {
            println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
