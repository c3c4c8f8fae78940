//! `dejong`: batch front-end over spec and family files.
//!
//! Exit codes: 0 pass, 1 violated identity or bound, 2 unreadable or invalid
//! input, 3 resource guard, 4 missing `κ`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use dejong::bounds::{kappa_policy, BoundError, BoundInputs, BoundReport, Verdict};
use dejong::engine::{EngineError, Limits, OutcomeSpace};
use dejong::families::{parse_family, sweep, sweep_csv};
use dejong::hoeffding::{component_variances, hoeffding_decompose};
use dejong::mc::{McError, RunConfig, SampleSummary};
use dejong::model::UStatisticSpec;
use dejong::pair::{identity_checks, PairContext, PairError, PairReport};
use dejong::report::{
    bound_report_json, bound_with_summary_json, decomposition_json, pair_report_json, sample_summary_json,
    summary_json, sweep_json,
};
use dejong::scalar::Scalar;
use dejong::spec_json::{parse_spec, AnySpec};
use dejong::study::{bound_report, simulate, summarize_spec, StudyError, StudyOptions};

#[derive(Parser)]
#[command(name = "dejong", version, about = "Exact and Monte Carlo checks of normal approximation for degenerate U-statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct McArgs {
    /// Monte Carlo sample count.
    #[arg(long = "mc")]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Confidence level parameter of the DKW band.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl McArgs {
    fn config(&self) -> Option<RunConfig> {
        self.samples
            .map(|m| RunConfig::new(self.seed, m).with_delta(self.delta).with_workers(self.workers))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Hoeffding decomposition of an enumerable spec.
    Decompose { spec: PathBuf },
    /// Exact identities and inequalities of the exchangeable pair.
    Verify {
        spec: PathBuf,
        #[arg(long)]
        kappa: Option<String>,
    },
    /// Bounds, distances and verdicts.
    Bound {
        /// Spec file; omit with `--inputs-only`.
        spec: Option<PathBuf>,
        #[arg(long)]
        kappa: Option<String>,
        #[command(flatten)]
        mc: McArgs,
        /// Evaluate the bounds on the given moments alone.
        #[arg(long, requires_all = ["e4", "rho", "p", "n"])]
        inputs_only: bool,
        #[arg(long)]
        e4: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        symmetric: bool,
    },
    /// Distances of the normalized statistic to N(0, 1).
    Distance {
        spec: PathBuf,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Monte Carlo summary of the normalized statistic.
    Simulate {
        spec: PathBuf,
        #[command(flatten)]
        mc: McArgs,
    },
    /// One row per member of a spec family.
    Sweep { family: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Guard(String),
    MissingKappa(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Guard(_) => 3,
            Failure::MissingKappa(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Guard(m) | Failure::MissingKappa(m) => m,
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::SpaceTooLarge { .. } | EngineError::SubsetBudgetExceeded { .. } => Failure::Guard(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<PairError> for Failure {
    fn from(e: PairError) -> Self {
        match e {
            PairError::Engine(e) => e.into(),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::KappaUnknown => Failure::MissingKappa(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Engine(e) => e.into(),
            StudyError::Bound(e) => e.into(),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<McError> for Failure {
    fn from(e: McError) -> Self {
        Failure::Input(e.to_string())
    }
}

/// A finished report and the exit code it carries.
struct Output {
    body: String,
    code: u8,
}

impl Output {
    fn json(v: &Value, code: u8) -> Self {
        let mut body = serde_json::to_string_pretty(v).expect("json values serialize");
        body.push('\n');
        Output { body, code }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<AnySpec, Failure> {
    parse_spec(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_kappa<S: Scalar>(kappa: Option<&str>) -> Result<Option<S>, Failure> {
    kappa
        .map(|k| S::parse(k).map_err(|e| Failure::Input(format!("--kappa: {e}"))))
        .transpose()
}

fn json_only(format: Option<Format>, command: &str) -> Result<(), Failure> {
    match format {
        Some(Format::Csv) => Err(Failure::Input(format!("{command} only writes JSON"))),
        _ => Ok(()),
    }
}

fn decompose<S: Scalar>(spec: &UStatisticSpec<S>, limits: Limits) -> Result<Output, Failure> {
    let space = OutcomeSpace::for_spec(spec, limits)?;
    let w = space.statistic_table(spec);
    let components = hoeffding_decompose(&space, &w)?;
    let variances = component_variances(&components);
    Ok(Output::json(&decomposition_json(&components, &variances, spec.n), 0))
}

fn verify<S: Scalar>(spec: &UStatisticSpec<S>, kappa: Option<&str>, limits: Limits) -> Result<Output, Failure> {
    let user = parse_kappa::<S>(kappa)?;
    let choice = match kappa_policy(spec, user) {
        Ok(c) => Some(c),
        Err(BoundError::KappaUnknown) => None,
        Err(e) => return Err(e.into()),
    };
    let ctx = PairContext::new(spec, limits)?;
    let k = choice.as_ref().map(|c| c.value.clone());
    let report = PairReport::compute(&ctx, k.clone());
    let checks = identity_checks(&ctx, k.as_ref())?;
    let holds = report.identities_hold() && report.slacks.all_nonnegative() && checks.all_hold();
    let code = if !holds {
        1
    } else if choice.is_none() {
        4
    } else {
        0
    };
    let doc = pair_report_json(&report, choice.map(|c| c.source), Some(&checks));
    Ok(Output::json(&doc, code))
}

fn verdict_code(v: Verdict) -> u8 {
    u8::from(v == Verdict::Violated)
}

fn bound<S: Scalar>(
    id: &str,
    spec: &UStatisticSpec<S>,
    kappa: Option<&str>,
    opts: &StudyOptions,
    format: Option<Format>,
) -> Result<Output, Failure> {
    let (summary, _, report) = bound_report(spec, parse_kappa::<S>(kappa)?, opts)?;
    let code = verdict_code(report.verdict());
    Ok(match format {
        Some(Format::Csv) => Output {
            body: format!("{}\n{}\n", BoundReport::CSV_HEADER, report.csv_row(id)),
            code,
        },
        _ => Output::json(&bound_with_summary_json(&report, &summary), code),
    })
}

fn distance<S: Scalar>(spec: &UStatisticSpec<S>, opts: &StudyOptions) -> Result<Output, Failure> {
    Ok(Output::json(&summary_json(&summarize_spec(spec, opts)?), 0))
}

fn simulate_spec<S: Scalar>(spec: &UStatisticSpec<S>, cfg: &RunConfig, format: Option<Format>) -> Result<Output, Failure> {
    let s = simulate(spec, cfg)?;
    Ok(match format {
        Some(Format::Csv) => Output {
            body: format!("{}\n{}\n", SampleSummary::CSV_HEADER, s.csv_row()),
            code: 0,
        },
        _ => Output::json(&sample_summary_json(&s), 0),
    })
}

macro_rules! with_spec {
    ($spec:expr, |$s:ident| $body:expr) => {
        match &$spec {
            AnySpec::Rational($s) => $body,
            AnySpec::Real($s) => $body,
        }
    };
}

fn spec_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let limits = Limits::from_env();
    match &cli.command {
        Command::Decompose { spec } => {
            json_only(cli.format, "decompose")?;
            let spec = load_spec(spec)?;
            with_spec!(spec, |s| decompose(s, limits))
        }
        Command::Verify { spec, kappa } => {
            json_only(cli.format, "verify")?;
            let spec = load_spec(spec)?;
            with_spec!(spec, |s| verify(s, kappa.as_deref(), limits))
        }
        Command::Bound {
            spec,
            kappa,
            inputs_only: true,
            e4,
            rho,
            p,
            n,
            symmetric,
            ..
        } => {
            if spec.is_some() {
                return Err(Failure::Input("--inputs-only takes no spec file".into()));
            }
            let kappa = match kappa {
                Some(k) => k
                    .parse::<f64>()
                    .map_err(|e| Failure::Input(format!("--kappa: {e}")))?,
                None if *symmetric => 2.0 * p.unwrap_or(0) as f64,
                None => return Err(BoundError::KappaUnknown.into()),
            };
            let inputs = BoundInputs {
                fourth_moment: e4.unwrap_or_default(),
                rho: rho.unwrap_or_default(),
                kappa,
                p: p.unwrap_or_default(),
                n: n.unwrap_or_default(),
                symmetric: *symmetric,
            };
            let report = BoundReport::new(inputs, None, Default::default())?;
            Ok(match cli.format {
                Some(Format::Csv) => Output {
                    body: format!("{}\n{}\n", BoundReport::CSV_HEADER, report.csv_row("inputs")),
                    code: 0,
                },
                _ => Output::json(&bound_report_json(&report), 0),
            })
        }
        Command::Bound { spec, kappa, mc, .. } => {
            let path = spec
                .as_ref()
                .ok_or_else(|| Failure::Input("bound needs a spec file or --inputs-only".into()))?;
            let spec = load_spec(path)?;
            let opts = StudyOptions { limits, mc: mc.config() };
            let id = spec_id(path);
            with_spec!(spec, |s| bound(&id, s, kappa.as_deref(), &opts, cli.format))
        }
        Command::Distance { spec, mc } => {
            json_only(cli.format, "distance")?;
            let spec = load_spec(spec)?;
            let opts = StudyOptions { limits, mc: mc.config() };
            with_spec!(spec, |s| distance(s, &opts))
        }
        Command::Simulate { spec, mc } => {
            let cfg = mc.config().ok_or_else(|| Failure::Input("simulate needs --mc <samples>".into()))?;
            let spec = load_spec(spec)?;
            with_spec!(spec, |s| simulate_spec(s, &cfg, cli.format))
        }
        Command::Sweep { family } => {
            let f = parse_family(&read(family)?).map_err(|e| Failure::Input(format!("{}: {e}", family.display())))?;
            let base = family.parent().unwrap_or(Path::new("."));
            let rows = sweep(&f, base, limits);
            Ok(match cli.format {
                Some(Format::Json) => Output::json(&sweep_json(&rows), 0),
                _ => Output {
                    body: sweep_csv(&rows),
                    code: 0,
                },
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.code());
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &out.body).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{}", out.body);
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match out.code {
        1 => eprintln!("violation: see report"),
        4 => eprintln!("no kappa for a non-symmetric statistic; pass --kappa"),
        _ => {}
    }
    ExitCode::from(out.code)
}
