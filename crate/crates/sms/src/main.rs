use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sms_core::eval::avg_test_logprob;
use sms_core::synth::random_mixed_tree;
use sms_core::{CopulaFamily, FittedModel};

use sms::compare::{crossval_report, learn_timed, metric_mean, write_report, CrossvalConfig, Metric};
use sms::config::{FileConfig, Overrides, Settings};
use sms::data::{read_dataset, write_atomic, write_comments, write_dataset};
use sms::formats::{load_curves, load_tree, save_curves, save_tree, write_plot_csv};
use sms::parallel::{par_build_curves, thread_pool};
use sms::synth::{synthesize, Margins};
use sms::verifier::{run_verifier, write_verify_csv, VerifyConfig};
use sms::{Error, Result};

/// Copula-tree learning with characteristic-curve family selection.
#[derive(Debug, Parser)]
#[command(name = "sms", version)]
struct Cli {
    /// TOML settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated family tokens, e.g. gaussian,gumbel,clayton.
    #[arg(long, global = true)]
    families: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build characteristic curves and their plot table.
    Curves(CurvesArgs),
    /// Learn a tree from a dataset, or generate a synthetic dataset.
    Learn(LearnArgs),
    /// Average held-out log probability of a model.
    Eval(EvalArgs),
    /// Repeated random splits comparing SMS with the exact learner.
    Compare(CompareArgs),
    /// Dependence-ordering, TP2 and entropy checks over parameter grids.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct CurvesArgs {
    #[arg(long)]
    output: PathBuf,
    /// Plot table path (default: the output path with a `.plot.csv` suffix).
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Rho grid spacing.
    #[arg(long)]
    step: Option<f64>,
    /// Quadrature nodes per axis.
    #[arg(long)]
    nodes: Option<usize>,
    /// Prior override `family=form[:param][:no_jacobian]`; repeatable.
    #[arg(long = "prior")]
    priors: Vec<String>,
    /// Use theta priors as densities in rho directly.
    #[arg(long)]
    no_jacobian: bool,
}

#[derive(Debug, Args)]
struct LearnArgs {
    /// Dataset CSV; with --synthesize, an optional ground-truth model.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Curve file (required for --method sms).
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    /// sms or mle.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    mle_tolerance: Option<f64>,
    /// Re-fit each SMS edge parameter by maximum likelihood.
    #[arg(long)]
    refine_theta: bool,
    /// Write a dataset sampled from a ground-truth tree instead of learning.
    #[arg(long)]
    synthesize: bool,
    /// Rows to sample (--synthesize).
    #[arg(long, default_value_t = 1000)]
    rows: usize,
    /// Variables of a random ground-truth tree when no --input model is given.
    #[arg(long, default_value_t = 10)]
    vars: usize,
    /// Rho range of the random tree's edges.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.3, 0.8])]
    rho_range: Vec<f64>,
    /// uniform or normal.
    #[arg(long, default_value = "uniform")]
    margins: String,
    /// Where to save the ground-truth model.
    #[arg(long)]
    truth_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Model file.
    #[arg(long)]
    input: PathBuf,
    /// Test CSV.
    #[arg(long)]
    data: PathBuf,
    /// CSV to fit the marginals on (default: the test CSV).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Dataset CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    folds: Option<usize>,
    /// Also score a Gaussian-only SMS model.
    #[arg(long)]
    baseline: bool,
    #[arg(long)]
    mle_tolerance: Option<f64>,
    #[arg(long)]
    refine_theta: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// TP2 parameters, comma-separated (default: each family's grid).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Vec<f64>,
    /// Points per axis of the TP2 and ordering grids.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// CSV path (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut over = Overrides {
        families: cli.families.clone(),
        seed: cli.seed,
        threads: cli.threads,
        ..Overrides::default()
    };
    match &cli.command {
        Command::Curves(a) => {
            over.step = a.step;
            over.nodes = a.nodes;
            over.priors = a.priors.clone();
            over.no_jacobian = a.no_jacobian;
        }
        Command::Learn(a) => {
            over.method = a.method.clone();
            over.mle_tolerance = a.mle_tolerance;
            over.refine_theta = a.refine_theta;
        }
        Command::Compare(a) => {
            over.folds = a.folds;
            over.baseline = a.baseline;
            over.mle_tolerance = a.mle_tolerance;
            over.refine_theta = a.refine_theta;
        }
        Command::Verify(a) => {
            over.grid = a.grid;
            over.nodes = a.nodes;
            if over.families.is_none() && file.families.is_none() {
                let all: Vec<&str> = CopulaFamily::ALL.iter().map(|f| f.token()).collect();
                over.families = Some(all.join(","));
            }
        }
        Command::Eval(_) => {}
    }
    let settings = Settings::resolve(&file, &over)?;
    let pool = thread_pool(settings.threads)?;
    pool.install(|| match cli.command {
        Command::Curves(a) => cmd_curves(&settings, a),
        Command::Learn(a) if a.synthesize => cmd_synthesize(&settings, a),
        Command::Learn(a) => cmd_learn(&settings, a),
        Command::Eval(a) => cmd_eval(&settings, a),
        Command::Compare(a) => cmd_compare(&settings, a),
        Command::Verify(a) => cmd_verify(&settings, a),
    })
}

fn with_inputs(mut comments: Vec<String>, inputs: &[(&str, &Path)]) -> Vec<String> {
    comments.extend(inputs.iter().map(|(k, p)| format!("{k} = {}", p.display())));
    comments
}

fn cmd_curves(s: &Settings, a: CurvesArgs) -> Result<u8> {
    let curves = par_build_curves(&s.priors, s.step, s.resolution)?;
    let comments = s.comments("curves");
    let plot = a.plot.unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".plot.csv");
        PathBuf::from(p)
    });
    save_curves(&a.output, &curves, &comments)?;
    write_atomic(&plot, |w| write_plot_csv(w, &curves, &comments))?;
    let points: usize = curves.iter().map(|c| c.rho_grid.len()).sum();
    println!("families = {}", curves.len());
    println!("grid_points = {points}");
    println!("curves = {}", a.output.display());
    println!("plot = {}", plot.display());
    Ok(0)
}

fn cmd_learn(s: &Settings, a: LearnArgs) -> Result<u8> {
    let input = a
        .input
        .ok_or_else(|| Error::Config("learn needs --input <dataset.csv>".into()))?;
    let cfg = s.learn_config();
    let curves = match (&a.curves, cfg.method) {
        (Some(p), _) => load_curves(p)?,
        (None, sms_core::LearnMethod::Mle) => Vec::new(),
        (None, sms_core::LearnMethod::Sms) => {
            return Err(Error::Config("--method sms needs --curves <file>".into()))
        }
    };
    let d = read_dataset(&input)?;
    let scored = learn_timed(&d, &curves, &cfg)?;
    let mut inputs = vec![("input", input.as_path())];
    if let Some(p) = &a.curves {
        inputs.push(("curves", p.as_path()));
    }
    save_tree(&a.output, &scored.tree, &with_inputs(s.comments("learn"), &inputs))?;
    println!("n = {}", d.n_vars());
    println!("M = {}", d.n_samples());
    println!("edges = {}", scored.tree.edges().len());
    println!("scoring_seconds = {:.6}", scored.scoring_seconds);
    Ok(0)
}

fn cmd_synthesize(s: &Settings, a: LearnArgs) -> Result<u8> {
    let margins: Margins = a.margins.parse()?;
    let truth = match &a.input {
        Some(p) => load_tree(p)?,
        None => random_mixed_tree(a.vars, &s.families, a.rho_range[0], a.rho_range[1], s.seed)?,
    };
    let d = synthesize(&truth, a.rows, s.seed, margins)?;
    let mut comments = vec![
        "command = learn --synthesize".to_string(),
        format!("seed = {}", s.seed),
        format!("rows = {}", a.rows),
        format!("margins = {}", a.margins),
    ];
    match &a.input {
        Some(p) => comments.push(format!("truth = {}", p.display())),
        None => {
            let fams: Vec<&str> = s.families.iter().map(|f| f.token()).collect();
            comments.push(format!("families = {}", fams.join(",")));
            comments.push(format!("vars = {}", a.vars));
            comments.push(format!("rho_range = {} {}", a.rho_range[0], a.rho_range[1]));
        }
    }
    if let Some(p) = &a.truth_output {
        save_tree(p, &truth, &comments)?;
    }
    write_atomic(&a.output, |w| write_dataset(w, &d, &comments))?;
    println!("n = {}", d.n_vars());
    println!("M = {}", d.n_samples());
    Ok(0)
}

fn cmd_eval(s: &Settings, a: EvalArgs) -> Result<u8> {
    let tree = load_tree(&a.input)?;
    let test = read_dataset(&a.data)?;
    let train = match &a.train {
        Some(p) => read_dataset(p)?,
        None => test.clone(),
    };
    let model = FittedModel::fit(tree, &train)?;
    let v = avg_test_logprob(&model, &test)?;
    let mut inputs = vec![("model", a.input.as_path()), ("data", a.data.as_path())];
    if let Some(p) = &a.train {
        inputs.push(("train", p.as_path()));
    }
    let mut comments = with_inputs(vec!["command = eval".into()], &inputs);
    comments.insert(1, format!("seed = {}", s.seed));
    if let Some(p) = &a.output {
        write_atomic(p, |w| {
            write_comments(w, &comments)?;
            writeln!(w, "metric,value")?;
            writeln!(w, "avg_logprob,{v:.17e}")?;
            writeln!(w, "rows,{}", test.n_samples())
        })?;
    }
    println!("avg_logprob = {v}");
    Ok(0)
}

fn cmd_compare(s: &Settings, a: CompareArgs) -> Result<u8> {
    let curves = load_curves(&a.curves)?;
    let d = read_dataset(&a.input)?;
    let cfg = CrossvalConfig {
        splits: s.folds,
        seed: s.seed,
        learn: s.learn_config(),
        gaussian_baseline: s.baseline,
    };
    let rows = crossval_report(&d, &curves, &cfg)?;
    let comments = with_inputs(
        s.comments("compare"),
        &[("input", a.input.as_path()), ("curves", a.curves.as_path())],
    );
    write_atomic(&a.output, |w| write_report(w, &rows, &comments))?;
    let mut methods = vec!["sms", "mle"];
    if s.baseline {
        methods.push("gaussian");
    }
    for m in methods {
        for metric in [Metric::AvgLogprob, Metric::OverlapVsMle, Metric::FamilyAgreementVsMle, Metric::ScoringSeconds] {
            if let Some(v) = metric_mean(&rows, m, metric) {
                println!("{m} mean {metric} = {v:.6}");
            }
        }
    }
    Ok(0)
}

fn cmd_verify(s: &Settings, a: VerifyArgs) -> Result<u8> {
    let cfg = VerifyConfig {
        families: s.families.clone(),
        tp2_thetas: a.theta.clone(),
        grid_n: s.grid,
        resolution: s.resolution,
    };
    let rows = run_verifier(&cfg);
    let mut comments = s.comments("verify");
    if !a.theta.is_empty() {
        let t: Vec<String> = a.theta.iter().map(f64::to_string).collect();
        comments.push(format!("theta = {}", t.join(",")));
    }
    match &a.output {
        Some(p) => write_atomic(p, |w| write_verify_csv(w, &rows, &comments))?,
        None => {
            let mut out = std::io::stdout().lock();
            write_verify_csv(&mut out, &rows, &comments).map_err(|e| Error::io(Path::new("<stdout>"), e))?;
        }
    }
    let failed = rows.iter().filter(|r| matches!(&r.outcome, Ok(rep) if !rep.passed)).count();
    let errored = rows.iter().filter(|r| r.outcome.is_err()).count();
    for r in rows.iter().filter(|r| !r.passed()) {
        eprintln!("{} {} {} {}: {}", r.family, r.check.token(), r.theta1, r.theta2, r.verdict());
    }
    eprintln!("{} checks, {failed} failed, {errored} errors", rows.len());
    Ok(if failed > 0 {
        1
    } else if errored > 0 {
        5
    } else {
        0
    })
}
