mod emit;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use idealcast::elicitation::{make_loss, minimizer_interval, LossFunction, LossKind};
use idealcast::functionals::{
    composed_evaluations, covar_coes, covar_conditional, expectile, expected_shortfall_lower,
    expected_shortfall_upper, moment_stats, quantile_lower, quantiles, range_value_at_risk,
};
use idealcast::prediction_space::{
    best_measurable_forecast, conditional_kernel, expected_point_score,
    expected_probabilistic_score, ideal_point_forecast, is_measurable, FinitePredictionSpace,
    Functional, PointForecast,
};
use idealcast::scoring::{diebold_mariano, score_series, ScoreSeries, ScoringRule};
use idealcast::{io, selftest, DiscreteDistribution, Error};

use emit::{Doc, Format, Output, Table};

#[derive(Parser)]
#[command(name = "idealcast", version, about = "Evaluate forecast functionals, scores and ideal forecasts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    output: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a functional of a distribution file.
    Functional(FunctionalArgs),
    /// Score forecasts against observations, optionally comparing two forecast files.
    Score(ScoreArgs),
    /// Conditional law, CoVaR and CoES of a bivariate distribution.
    Covar(CovarArgs),
    /// Ideal forecasts, measurability and expected scores on a prediction space.
    Predict(PredictArgs),
    /// Run the built-in randomized verification suites.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Op {
    Quantiles,
    Var,
    #[value(alias = "es_upper", alias = "es-upper")]
    Es,
    #[value(alias = "es_lower")]
    EsLower,
    Rvar,
    Expectile,
    Mean,
    Moments,
    #[value(alias = "minimizer_interval", alias = "minimizer-interval")]
    Minimizer,
    Composed,
    Canonical,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FunctionalName {
    Mean,
    Quantile,
    Expectile,
    Es,
    Minimizer,
}

#[derive(Args)]
struct FunctionalArgs {
    /// Distribution file: JSON atoms or a CSV column of samples.
    #[arg(long)]
    dist: PathBuf,
    #[arg(long, value_enum)]
    op: Op,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Loss spec: a JSON file or inline JSON such as '{"kind": "squared"}'.
    #[arg(long)]
    loss: Option<String>,
    /// Functional that locates the split point for `--op composed`.
    #[arg(long, value_enum)]
    functional: Option<FunctionalName>,
}

#[derive(Args)]
struct ScoreArgs {
    /// `crps`, `twcrps`, `logscore`, or a score-request JSON file.
    #[arg(long)]
    rule: String,
    /// Forecast list file; give it twice to run a Diebold-Mariano comparison.
    #[arg(long, required = true, num_args = 1)]
    forecasts: Vec<PathBuf>,
    /// Observations: a CSV column or a JSON array.
    #[arg(long)]
    obs: PathBuf,
    #[arg(long)]
    hac_lag: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CovarOp {
    Conditional,
    Covar,
}

#[derive(Args)]
struct CovarArgs {
    /// Bivariate file: JSON joint atoms or two CSV columns.
    #[arg(long)]
    bivariate: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    op: Option<CovarOp>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    space: PathBuf,
    /// Restrict the report to one partition.
    #[arg(long)]
    partition: Option<String>,
    #[arg(long, value_enum, default_value = "mean")]
    functional: FunctionalName,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Loss for point scores; defaults to the consistent loss of the functional.
    #[arg(long)]
    loss: Option<String>,
    /// Rule for the probabilistic score of the ideal kernel.
    #[arg(long, default_value = "crps")]
    rule: String,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = selftest::DEFAULT_SEED)]
    seed: u64,
    /// Run a single suite (1 to 10).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=10))]
    suite: Option<u8>,
}

struct Failure {
    code: String,
    message: String,
    exit: u8,
}

impl Failure {
    fn schema(message: impl Into<String>) -> Self {
        Self {
            code: "SchemaError".into(),
            message: message.into(),
            exit: 1,
        }
    }
}

/// Bad inputs and parameters exit with 1; failures of the computation
/// itself (no minimizer found, infinite scores in a test, ...) exit with 2.
fn failure(e: Error) -> Failure {
    let exit = match e {
        Error::ShapeViolation(_)
        | Error::Unbracketed
        | Error::InfiniteScore
        | Error::DegenerateSeries(_)
        | Error::NonFiniteValue(_)
        | Error::ActionOutOfDomain(_) => 2,
        _ => 1,
    };
    Failure {
        code: e.code().into(),
        message: e.to_string(),
        exit,
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: "IoError".into(),
        message: format!("{}: {e}", path.display()),
        exit: 1,
    })
}

fn load_loss(spec: &str) -> Outcome<LossFunction> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        read(Path::new(spec))?
    };
    let kind = io::parse_loss_spec(&text).map_err(failure)?;
    make_loss(kind).map_err(failure)
}

fn load_rule(spec: &str) -> Outcome<ScoringRule> {
    match spec {
        "crps" | "twcrps" | "logscore" => io::scoring_rule(spec, &Default::default()).map_err(failure),
        path if Path::new(path).exists() => {
            io::parse_score_request(&read(Path::new(path))?).map_err(failure)
        }
        other => Err(Failure::schema(format!(
            "unknown scoring rule '{other}' (expected crps, twcrps, logscore or a request file)"
        ))),
    }
}

fn require(value: Option<f64>, flag: &str, context: &str) -> Outcome<f64> {
    value.ok_or_else(|| Failure::schema(format!("{context} requires --{flag}")))
}

fn reject(present: bool, flag: &str, context: &str) -> Outcome<()> {
    if present {
        Err(Failure::schema(format!("unknown param --{flag} for {context}")))
    } else {
        Ok(())
    }
}

fn point_functional(
    name: FunctionalName,
    alpha: Option<f64>,
    tau: Option<f64>,
    loss: Option<&LossFunction>,
) -> Outcome<Functional> {
    let ctx = &format!("functional {}", functional_label(name));
    Ok(match name {
        FunctionalName::Mean => Functional::Mean,
        FunctionalName::Quantile => Functional::QuantileLower(require(alpha, "alpha", ctx)?),
        FunctionalName::Expectile => Functional::Expectile(require(tau, "tau", ctx)?),
        FunctionalName::Es => Functional::EsUpper(require(alpha, "alpha", ctx)?),
        FunctionalName::Minimizer => Functional::Minimizer(
            loss.cloned()
                .ok_or_else(|| Failure::schema("the minimizer functional requires --loss"))?,
        ),
    })
}

fn functional_label(name: FunctionalName) -> &'static str {
    match name {
        FunctionalName::Mean => "mean",
        FunctionalName::Quantile => "quantile",
        FunctionalName::Expectile => "expectile",
        FunctionalName::Es => "es",
        FunctionalName::Minimizer => "minimizer",
    }
}

fn run_functional(args: FunctionalArgs) -> Outcome<Output> {
    let op = args.op;
    let op_name = op.to_possible_value().expect("no skipped variants");
    let ctx = &format!("op {}", op_name.get_name());
    let uses_alpha = matches!(op, Op::Quantiles | Op::Var | Op::Es | Op::EsLower | Op::Rvar)
        || (op == Op::Composed
            && matches!(args.functional, Some(FunctionalName::Quantile | FunctionalName::Es)));
    let uses_tau = op == Op::Expectile
        || (op == Op::Composed && args.functional == Some(FunctionalName::Expectile));
    let uses_loss = op == Op::Minimizer
        || (op == Op::Composed && args.functional == Some(FunctionalName::Minimizer));
    reject(args.alpha.is_some() && !uses_alpha, "alpha", ctx)?;
    reject(args.beta.is_some() && op != Op::Rvar, "beta", ctx)?;
    reject(args.tau.is_some() && !uses_tau, "tau", ctx)?;
    reject(args.loss.is_some() && !uses_loss, "loss", ctx)?;
    reject(args.functional.is_some() && op != Op::Composed, "functional", ctx)?;
    let loss = args.loss.as_deref().map(load_loss).transpose()?;
    let composed_by = if op == Op::Composed {
        Some(point_functional(
            args.functional.unwrap_or(FunctionalName::Mean),
            args.alpha,
            args.tau,
            loss.as_ref(),
        )?)
    } else {
        None
    };
    let alpha = if uses_alpha && op != Op::Composed {
        Some(require(args.alpha, "alpha", ctx)?)
    } else {
        None
    };
    let beta = if op == Op::Rvar {
        Some(require(args.beta, "beta", ctx)?)
    } else {
        None
    };
    let tau = if op == Op::Expectile {
        Some(require(args.tau, "tau", ctx)?)
    } else {
        None
    };
    if op == Op::Minimizer && loss.is_none() {
        return Err(Failure::schema(format!("{ctx} requires --loss")));
    }

    let dist = io::parse_distribution(&read(&args.dist)?).map_err(failure)?;
    let num = |name: &str, v: f64| Output::flat(Doc::obj([(name.to_string(), Doc::Num(v))]));
    let out = match op {
        Op::Quantiles => {
            let q = quantiles(&dist, alpha.unwrap()).map_err(failure)?;
            Output::flat(Doc::obj([
                ("lower", Doc::Num(q.lower.to_f64())),
                ("upper", Doc::Num(q.upper.to_f64())),
            ]))
        }
        Op::Var => num("var", quantile_lower(&dist, alpha.unwrap()).map_err(failure)?),
        Op::Es => num("es_upper", expected_shortfall_upper(&dist, alpha.unwrap()).map_err(failure)?),
        Op::EsLower => num("es_lower", expected_shortfall_lower(&dist, alpha.unwrap()).map_err(failure)?),
        Op::Rvar => num(
            "rvar",
            range_value_at_risk(&dist, alpha.unwrap(), beta.unwrap()).map_err(failure)?,
        ),
        Op::Expectile => num("expectile", expectile(&dist, tau.unwrap()).map_err(failure)?),
        Op::Mean => num("mean", dist.mean()),
        Op::Moments => {
            let m = moment_stats(&dist);
            Output::flat(Doc::obj([
                ("mean", Doc::Num(m.mean)),
                ("variance", Doc::Num(m.variance)),
                ("skewness", Doc::opt(m.skewness)),
                ("kurtosis", Doc::opt(m.kurtosis)),
                ("sharpe_ratio", Doc::opt(m.sharpe_ratio)),
            ]))
        }
        Op::Minimizer => {
            let mi = minimizer_interval(loss.as_ref().unwrap(), &dist).map_err(failure)?;
            Output::flat(Doc::obj([
                ("t_min", Doc::Num(mi.t_min)),
                ("t_max", Doc::Num(mi.t_max)),
                ("bayes_risk", Doc::Num(mi.bayes_risk)),
            ]))
        }
        Op::Composed => {
            let t = composed_by.unwrap().evaluate(&dist).map_err(failure)?;
            let c = composed_evaluations(&dist, t).map_err(failure)?;
            Output::flat(Doc::obj([
                ("t", Doc::Num(t)),
                ("upper_tail", Doc::Num(c.upper_tail)),
                ("lower_tail", Doc::Num(c.lower_tail)),
                ("point", Doc::Num(c.point)),
            ]))
        }
        Op::Canonical => distribution_output(&dist),
    };
    Ok(out)
}

fn distribution_output(dist: &DiscreteDistribution) -> Output {
    let mut table = Table::new(["x", "p"]);
    for (x, p) in dist.atoms() {
        table.push(vec![Doc::Num(x), Doc::Num(p)]);
    }
    Output {
        doc: Doc::distribution(dist),
        table,
    }
}

fn summary(series: &ScoreSeries) -> Doc {
    Doc::obj([
        ("mean", Doc::Num(series.mean().value())),
        ("n", Doc::Int(series.len())),
        ("infinite_count", Doc::Int(series.infinite_count())),
    ])
}

fn run_score(args: ScoreArgs) -> Outcome<Output> {
    if args.forecasts.len() > 2 {
        return Err(Failure::schema("--forecasts may be given at most twice"));
    }
    reject(args.hac_lag.is_some() && args.forecasts.len() < 2, "hac-lag", "a single forecast file")?;
    let rule = load_rule(&args.rule)?;
    let observations = io::parse_observations(&read(&args.obs)?).map_err(failure)?;
    let forecast_sets = args
        .forecasts
        .iter()
        .map(|p| io::parse_forecasts(&read(p)?).map_err(failure))
        .collect::<Outcome<Vec<_>>>()?;
    for set in &forecast_sets {
        if set.len() != observations.len() {
            return Err(failure(Error::LengthMismatch {
                left: set.len(),
                right: observations.len(),
            }));
        }
    }
    let series = forecast_sets
        .iter()
        .map(|set| score_series(&rule, set, &observations).map_err(failure))
        .collect::<Outcome<Vec<_>>>()?;

    if let [only] = series.as_slice() {
        let mut table = Table::new(["index", "score", "observation"]);
        for (i, e) in only.entries().iter().enumerate() {
            table.push(vec![Doc::Int(i), Doc::Num(e.score.value()), Doc::Num(e.observation)]);
        }
        return Ok(Output {
            doc: summary(only),
            table,
        });
    }
    let (a, b) = (&series[0], &series[1]);
    let lag = args.hac_lag.unwrap_or(0);
    let dm = diebold_mariano(a, b, lag).map_err(failure)?;
    let mut table = Table::new(["index", "score_a", "score_b", "observation"]);
    for (i, (ea, eb)) in a.entries().iter().zip(b.entries()).enumerate() {
        table.push(vec![
            Doc::Int(i),
            Doc::Num(ea.score.value()),
            Doc::Num(eb.score.value()),
            Doc::Num(ea.observation),
        ]);
    }
    Ok(Output {
        doc: Doc::obj([
            ("a", summary(a)),
            ("b", summary(b)),
            (
                "diebold_mariano",
                Doc::obj([
                    ("statistic", Doc::Num(dm.statistic)),
                    ("p_value", Doc::Num(dm.p_value)),
                    ("hac_lag", Doc::Int(lag)),
                ]),
            ),
        ]),
        table,
    })
}

fn run_covar(args: CovarArgs) -> Outcome<Output> {
    let op = args.op.unwrap_or(if args.alpha.is_some() {
        CovarOp::Covar
    } else {
        CovarOp::Conditional
    });
    let alpha = match op {
        CovarOp::Covar => Some(require(args.alpha, "alpha", "op covar")?),
        CovarOp::Conditional => {
            reject(args.alpha.is_some(), "alpha", "op conditional")?;
            None
        }
    };
    let joint = io::parse_bivariate(&read(&args.bivariate)?).map_err(failure)?;
    let eta = covar_conditional(&joint, args.beta).map_err(failure)?;
    let Some(alpha) = alpha else {
        return Ok(distribution_output(&eta));
    };
    let r = covar_coes(&joint, alpha, args.beta).map_err(failure)?;
    let doc = Doc::obj([
        ("covar", Doc::Num(r.covar)),
        ("coes", Doc::Num(r.coes)),
        ("eta", Doc::distribution(&eta)),
    ]);
    let mut table = Table::new(["covar", "coes"]);
    table.push(vec![Doc::Num(r.covar), Doc::Num(r.coes)]);
    Ok(Output { doc, table })
}

fn by_label(forecast: &PointForecast) -> Doc {
    Doc::Obj(
        forecast
            .labels()
            .iter()
            .cloned()
            .zip(forecast.values().iter().map(|&v| Doc::Num(v)))
            .collect(),
    )
}

fn run_predict(args: PredictArgs) -> Outcome<Output> {
    let ctx = &format!("functional {}", functional_label(args.functional));
    let needs_alpha = matches!(args.functional, FunctionalName::Quantile | FunctionalName::Es);
    reject(args.alpha.is_some() && !needs_alpha, "alpha", ctx)?;
    reject(args.tau.is_some() && args.functional != FunctionalName::Expectile, "tau", ctx)?;
    let explicit_loss = args.loss.as_deref().map(load_loss).transpose()?;
    let functional = point_functional(args.functional, args.alpha, args.tau, explicit_loss.as_ref())?;
    let loss = match (&explicit_loss, args.functional) {
        (Some(l), _) => Some(l.clone()),
        (None, FunctionalName::Mean) => Some(make_loss(LossKind::Squared).map_err(failure)?),
        (None, FunctionalName::Quantile) => Some(
            make_loss(LossKind::Pinball {
                alpha: args.alpha.unwrap(),
            })
            .map_err(failure)?,
        ),
        (None, FunctionalName::Expectile) => Some(
            make_loss(LossKind::AsymmetricSquared {
                tau: args.tau.unwrap(),
            })
            .map_err(failure)?,
        ),
        (None, _) => None,
    };
    let rule = load_rule(&args.rule)?;
    let space: FinitePredictionSpace = io::parse_space(&read(&args.space)?).map_err(failure)?;
    let partitions: Vec<String> = match &args.partition {
        Some(p) => vec![p.clone()],
        None => space.partition_names().map(str::to_string).collect(),
    };
    if partitions.is_empty() {
        return Err(failure(Error::InvalidSpace("the space defines no partitions".into())));
    }

    let mut reports = Vec::new();
    let mut table = Table::new([
        "partition",
        "label",
        "cell",
        "y",
        "forecast",
        "best_forecast",
        "measurable",
        "expected_point_score",
        "best_value",
        "expected_probabilistic_score",
    ]);
    for name in &partitions {
        let kernel = conditional_kernel(&space, name).map_err(failure)?;
        let ideal = ideal_point_forecast(&space, name, &functional).map_err(failure)?;
        let measurable = is_measurable(&ideal, &space, name).map_err(failure)?;
        let point_score = loss
            .as_ref()
            .map(|l| expected_point_score(&space, &ideal, l))
            .transpose()
            .map_err(failure)?;
        let best = loss
            .as_ref()
            .map(|l| best_measurable_forecast(&space, name, l))
            .transpose()
            .map_err(failure)?;
        let prob = expected_probabilistic_score(&space, &kernel, &rule).map_err(failure)?;

        let cells = space.cells(name).map_err(failure)?;
        let assignment = space.assignment(name).map_err(failure)?;
        for (i, o) in space.outcomes().iter().enumerate() {
            table.push(vec![
                Doc::Str(name.clone()),
                Doc::Str(o.label.clone()),
                Doc::Str(cells[assignment[i]].clone()),
                Doc::Num(o.y),
                Doc::Num(ideal.values()[i]),
                best.as_ref().map_or(Doc::Null, |(f, _)| Doc::Num(f.values()[i])),
                Doc::Bool(measurable),
                Doc::opt(point_score),
                Doc::opt(best.as_ref().map(|b| b.1)),
                Doc::Num(prob.value()),
            ]);
        }
        let kernel_doc = Doc::Obj(
            kernel
                .cells()
                .map(|(c, law)| (c.to_string(), Doc::distribution(law)))
                .collect(),
        );
        reports.push(Doc::obj([
            ("partition", Doc::Str(name.clone())),
            ("kernel", kernel_doc),
            ("forecast", by_label(&ideal)),
            ("measurable", Doc::Bool(measurable)),
            ("expected_point_score", Doc::opt(point_score)),
            (
                "best_measurable",
                best.as_ref().map_or(Doc::Null, |(f, v)| {
                    Doc::obj([("forecast", by_label(f)), ("value", Doc::Num(*v))])
                }),
            ),
            ("expected_probabilistic_score", Doc::Num(prob.value())),
        ]));
    }
    Ok(Output {
        doc: Doc::obj([
            ("functional", Doc::Str(functional_label(args.functional).into())),
            ("loss", loss.as_ref().map_or(Doc::Null, |l| Doc::Str(l.name().into()))),
            ("rule", Doc::Str(rule.name().into())),
            ("partitions", Doc::Arr(reports)),
        ]),
        table,
    })
}

fn run_selftest(args: SelftestArgs) -> (Output, usize) {
    let reports = match args.suite {
        Some(id) => vec![selftest::run_suite(id, args.seed)],
        None => selftest::run_all(args.seed),
    };
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let mut table = Table::new(["suite", "name", "status", "cases", "failures", "detail"]);
    let mut suites = Vec::new();
    for r in &reports {
        let status = if r.passed() { "pass" } else { "fail" };
        table.push(vec![
            Doc::Int(usize::from(r.id)),
            Doc::Str(r.name.into()),
            Doc::Str(status.into()),
            Doc::Int(r.cases),
            Doc::Int(r.failures),
            Doc::Str(r.detail.clone()),
        ]);
        suites.push(Doc::obj([
            ("suite", Doc::Int(usize::from(r.id))),
            ("name", Doc::Str(r.name.into())),
            ("passed", Doc::Bool(r.passed())),
            ("cases", Doc::Int(r.cases)),
            ("failures", Doc::Int(r.failures)),
            ("detail", Doc::Str(r.detail.clone())),
        ]));
    }
    let doc = Doc::obj([
        ("seed", Doc::Str(args.seed.to_string())),
        ("passed", Doc::Int(reports.len() - failed)),
        ("failed", Doc::Int(failed)),
        ("suites", Doc::Arr(suites)),
    ]);
    (Output { doc, table }, failed)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
                || matches!(e.kind(), ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand)
            {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("ERROR SchemaError: {}", one_line(first));
            return ExitCode::from(1);
        }
    };
    let format = cli.output;
    let result = match cli.command {
        Command::Functional(a) => run_functional(a),
        Command::Score(a) => run_score(a),
        Command::Covar(a) => run_covar(a),
        Command::Predict(a) => run_predict(a),
        Command::Selftest(a) => {
            let (out, failed) = run_selftest(a);
            println!("{}", out.render(format));
            if failed > 0 {
                eprintln!("ERROR SelftestFailed: {failed} suite(s) failed");
                return ExitCode::from(2);
            }
            return ExitCode::SUCCESS;
        }
    };
    match result {
        Ok(out) => {
            println!("{}", out.render(format));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("ERROR {}: {}", f.code, one_line(&f.message));
            ExitCode::from(f.exit)
        }
    }
}
