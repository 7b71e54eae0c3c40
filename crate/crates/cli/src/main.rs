use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mimreg::classifier::model_to_json;
use mimreg::data::load_feature_rows;
use mimreg::metrics::{pr_curve, report_json, write_pr_csv, write_roc_csv, FoldResult};
use mimreg::optimizer::{
    DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_ETA, DEFAULT_GRAD_TOL, DEFAULT_MAX_ITERS, DEFAULT_VARSIGMA,
};
use mimreg::{
    cross_validate, cross_validate_compare, fit_binary_with, fit_one_vs_all_with, load_csv,
    load_model, mutual_information, roc_curve, Bandwidth64, CvOptions, Dataset64, FitOptions, Init,
    LabelColumn, LossKind, Model64, Responses, SigmaPolicy, TrainConfig64, TrainTrace64,
};

mod manifest;

use manifest::{commit_with_manifest, sibling, Outputs, Run};

#[derive(Parser)]
#[command(
    name = "mimreg",
    version,
    about = "Linear classifiers with a mutual-information regularizer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a binary or one-vs-all model on a labelled CSV.
    Train(TrainArgs),
    /// Score a CSV with a saved model.
    Predict(PredictArgs),
    /// k-fold cross validation, optionally against the β = 0 baseline.
    Cv(CvArgs),
    /// Kernel-density mutual information between responses and labels.
    Mi(MiArgs),
    /// ROC (or recall-precision) curve from responses and labels.
    Roc(RocArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Hinge,
    Squared,
    Logistic,
    Exponential,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Hinge => LossKind::Hinge,
            LossArg::Squared => LossKind::Squared,
            LossArg::Logistic => LossKind::Logistic,
            LossArg::Exponential => LossKind::Exponential,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Zeros,
    Random,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "hinge")]
    loss: LossArg,
    /// Weight of the ℓ2 term.
    #[arg(long, default_value_t = DEFAULT_ALPHA, allow_negative_numbers = true)]
    alpha: f64,
    /// Weight of the mutual-information term; 0 trains on the loss alone.
    #[arg(long, default_value_t = DEFAULT_BETA, allow_negative_numbers = true)]
    beta: f64,
    /// Gradient-descent step size.
    #[arg(long, default_value_t = DEFAULT_ETA, allow_negative_numbers = true)]
    eta: f64,
    /// Fixed kernel bandwidth.
    #[arg(long, conflicts_with = "varsigma", allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Bandwidth as a multiple of the median pairwise feature distance.
    #[arg(long, allow_negative_numbers = true)]
    varsigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_GRAD_TOL, allow_negative_numbers = true)]
    grad_tol: f64,
    #[arg(long, value_enum, default_value = "zeros")]
    init: InitArg,
    /// Half-width of the uniform random initialization.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    init_scale: f64,
    /// Drop the loss term and train on `α/2 ‖w‖² − β I` only.
    #[arg(long)]
    mi_only: bool,
    /// Append a constant-1 feature after scaling.
    #[arg(long)]
    augment_bias: bool,
    /// Seeds random initialization and fold assignment.
    #[arg(long, env = "MIMREG_SEED", default_value_t = 42)]
    seed: u64,
    /// Label column: zero-based index, header name, or `last`.
    #[arg(long, default_value = "last")]
    label_col: LabelColumn,
}

impl ModelArgs {
    fn config(&self) -> TrainConfig64 {
        let sigma_policy = match (self.sigma, self.varsigma) {
            (Some(sigma), _) => SigmaPolicy::Fixed { sigma },
            (None, v) => SigmaPolicy::MedianScaled {
                varsigma: v.unwrap_or(DEFAULT_VARSIGMA),
            },
        };
        let init = match self.init {
            InitArg::Zeros => Init::Zeros,
            InitArg::Random => Init::SeededRandom {
                scale: self.init_scale,
                seed: self.seed,
            },
        };
        TrainConfig64 {
            loss: self.loss.into(),
            include_loss: !self.mi_only,
            alpha: self.alpha,
            beta: self.beta,
            eta: self.eta,
            sigma_policy,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            init,
        }
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions {
            augment_bias: self.augment_bias,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Labelled training CSV.
    #[arg(long)]
    data: PathBuf,
    /// Where to write the model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Per-iteration trace (JSON lines); defaults next to the model.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Run manifest; defaults next to the model.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Fit one-vs-all on labels `0..C`.
    #[arg(long)]
    multiclass: bool,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV.
    #[arg(long)]
    input: PathBuf,
    /// Column to drop before scoring, if the input carries labels.
    #[arg(long)]
    label_col: Option<LabelColumn>,
    /// Predictions CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Keep class proportions equal across folds.
    #[arg(long)]
    stratified: bool,
    /// Also run β = 0 on the same folds and pair the results.
    #[arg(long)]
    compare_baseline: bool,
    /// Write per-fold ROC and recall-precision CSVs here.
    #[arg(long)]
    curves_dir: Option<PathBuf>,
    /// Report JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Args)]
struct MiArgs {
    /// CSV of `response,label` rows.
    #[arg(long, conflicts_with_all = ["model", "data"], required_unless_present = "model")]
    responses: Option<PathBuf>,
    /// Binary model whose responses on `--data` are used.
    #[arg(long, requires = "data")]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Kernel bandwidth; defaults to the model's σ in model mode.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, default_value = "last")]
    label_col: LabelColumn,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct RocArgs {
    /// CSV of `response,label` rows.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "last")]
    label_col: LabelColumn,
    /// Emit the recall-precision sweep instead of the ROC curve.
    #[arg(long)]
    pr: bool,
    /// Curve CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn trace_lines(traces: &[TrainTrace64], multiclass: bool) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (class, trace) in traces.iter().enumerate() {
        if multiclass {
            for rec in &trace.records {
                let mut v = serde_json::to_value(rec)?;
                v.as_object_mut()
                    .expect("record is an object")
                    .insert("class".into(), json!(class));
                serde_json::to_writer(&mut out, &v)?;
                out.push(b'\n');
            }
        } else {
            trace.write_json_lines(&mut out)?;
        }
    }
    Ok(out)
}

fn train(args: TrainArgs) -> Result<()> {
    let mut run = Run::start("train");
    let cfg = args.model_args.config();
    cfg.validate()?;
    run.input(&args.data)?;
    let ds: Dataset64 = load_csv(&args.data, &args.model_args.label_col)
        .with_context(|| format!("loading {}", args.data.display()))?;
    let opts = args.model_args.fit_options();

    let (model, traces) = if args.multiclass {
        let (m, t) = fit_one_vs_all_with(&ds, &cfg, opts).context("training one-vs-all model")?;
        (Model64::OneVsAll(m), t)
    } else {
        let (m, t) = fit_binary_with(&ds, &cfg, opts).context("training binary model")?;
        (Model64::Binary(m), vec![t])
    };
    for (c, t) in traces.iter().enumerate() {
        log::info!(
            "model {c}: {} iterations, {:?}",
            t.records.len(),
            t.termination
        );
    }

    let mut outputs = Outputs::default();
    outputs.add(&args.model, model_to_json(&model) + "\n");
    let trace_path = args
        .trace
        .unwrap_or_else(|| sibling(&args.model, "trace.jsonl"));
    outputs.add(trace_path, trace_lines(&traces, args.multiclass)?);
    let manifest = args
        .manifest
        .unwrap_or_else(|| sibling(&args.model, "manifest.json"));
    let config = json!({
        "train": cfg,
        "fit": opts,
        "multiclass": args.multiclass,
        "label_col": args.model_args.label_col.to_string(),
        "sigma": model.sigma().get(),
    });
    commit_with_manifest(
        outputs,
        run,
        config,
        json!({ "seed": args.model_args.seed }),
        Some(manifest),
    )
}

fn predict(args: PredictArgs) -> Result<()> {
    let mut run = Run::start("predict");
    run.input(&args.model)?;
    run.input(&args.input)?;
    let model: Model64 =
        load_model(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let rows: Vec<Vec<f64>> = load_feature_rows(&args.input, args.label_col.as_ref())
        .with_context(|| format!("loading {}", args.input.display()))?;

    let mut csv = String::from("index,response,label\n");
    for (i, row) in rows.iter().enumerate() {
        if row.len() != model.d() {
            bail!(
                "row {}: model expects d = {} features, input has {}",
                i + 1,
                model.d(),
                row.len()
            );
        }
        let (f, label) = model.predict(ndarray::ArrayView1::from(row.as_slice()))?;
        writeln!(csv, "{i},{f},{label}").expect("string write");
    }

    let config = json!({ "label_col": args.label_col.map(|c| c.to_string()) });
    let mut outputs = Outputs::default();
    let manifest = match &args.out {
        Some(out) => {
            outputs.add(out, csv);
            Some(
                args.manifest
                    .unwrap_or_else(|| sibling(out, "manifest.json")),
            )
        }
        None => {
            print!("{csv}");
            args.manifest
        }
    };
    commit_with_manifest(outputs, run, config, json!({}), manifest)
}

fn fold_curves(
    outputs: &mut Outputs,
    dir: &Path,
    prefix: &str,
    folds: &[FoldResult<f64>],
) -> Result<()> {
    for fold in folds {
        if fold.auc.is_none() {
            continue;
        }
        let roc = roc_curve(&fold.responses, &fold.labels)?;
        let mut buf = Vec::new();
        write_roc_csv(&roc, &mut buf)?;
        outputs.add(dir.join(format!("{prefix}fold{}_roc.csv", fold.fold)), buf);
        let pr = pr_curve(&fold.responses, &fold.labels)?;
        let mut buf = Vec::new();
        write_pr_csv(&pr, &mut buf)?;
        outputs.add(dir.join(format!("{prefix}fold{}_pr.csv", fold.fold)), buf);
    }
    Ok(())
}

fn cv(args: CvArgs) -> Result<()> {
    let mut run = Run::start("cv");
    let cfg = args.model_args.config();
    cfg.validate()?;
    ensure!(args.k >= 2, "k must be at least 2");
    run.input(&args.data)?;
    let ds: Dataset64 = load_csv(&args.data, &args.model_args.label_col)
        .with_context(|| format!("loading {}", args.data.display()))?;
    let opts = CvOptions {
        k: args.k,
        seed: args.model_args.seed,
        stratified: args.stratified,
        fit: args.model_args.fit_options(),
    };

    let mut outputs = Outputs::default();
    let report = if args.compare_baseline {
        let r = cross_validate_compare(&ds, &cfg, &opts).context("cross validation")?;
        if let Some(dir) = &args.curves_dir {
            fold_curves(&mut outputs, dir, "", &r.mi.folds)?;
            fold_curves(&mut outputs, dir, "baseline_", &r.baseline.folds)?;
        }
        report_json(&r)
    } else {
        let r = cross_validate(&ds, &cfg, &opts).context("cross validation")?;
        if let Some(dir) = &args.curves_dir {
            fold_curves(&mut outputs, dir, "", &r.folds)?;
        }
        report_json(&r)
    } + "\n";

    let config = json!({
        "train": cfg,
        "cv": opts,
        "compare_baseline": args.compare_baseline,
        "label_col": args.model_args.label_col.to_string(),
    });
    let manifest = match &args.out {
        Some(out) => {
            outputs.add(out, report);
            Some(
                args.manifest
                    .unwrap_or_else(|| sibling(out, "manifest.json")),
            )
        }
        None => {
            print!("{report}");
            args.manifest
        }
    };
    commit_with_manifest(
        outputs,
        run,
        config,
        json!({ "seed": args.model_args.seed }),
        manifest,
    )
}

fn responses_file(path: &Path, label_col: &LabelColumn) -> Result<Dataset64> {
    let ds: Dataset64 =
        load_csv(path, label_col).with_context(|| format!("loading {}", path.display()))?;
    ensure!(
        ds.d() == 1,
        "{}: expected one response column besides the label, found {}",
        path.display(),
        ds.d()
    );
    Ok(ds)
}

fn require_both_classes(labels: &[i64]) -> Result<()> {
    for c in [1, -1] {
        ensure!(
            labels.contains(&c),
            "labels must include both +1 and -1; class {c} is absent"
        );
    }
    ensure!(
        labels.iter().all(|&y| y == 1 || y == -1),
        "labels must be +1 or -1"
    );
    Ok(())
}

fn mi(args: MiArgs) -> Result<()> {
    let mut run = Run::start("mi");
    let (values, labels, sigma) = match (&args.responses, &args.model, &args.data) {
        (Some(path), _, _) => {
            run.input(path)?;
            let ds = responses_file(path, &args.label_col)?;
            let sigma = args.sigma.context("--sigma is required with --responses")?;
            (
                ds.features().column(0).to_vec(),
                ds.labels().to_vec(),
                sigma,
            )
        }
        (None, Some(model_path), Some(data)) => {
            run.input(model_path)?;
            run.input(data)?;
            let model: Model64 = load_model(model_path)
                .with_context(|| format!("loading {}", model_path.display()))?;
            let Model64::Binary(m) = &model else {
                bail!("mutual information needs a binary model");
            };
            let ds: Dataset64 = load_csv(data, &args.label_col)
                .with_context(|| format!("loading {}", data.display()))?;
            let values = (0..ds.n())
                .map(|i| mimreg::response(m, ds.row(i)))
                .collect::<mimreg::Result<Vec<_>>>()?;
            (
                values,
                ds.labels().to_vec(),
                args.sigma.unwrap_or(m.sigma.get()),
            )
        }
        _ => bail!("pass --responses, or --model with --data"),
    };
    require_both_classes(&labels)?;
    let sigma = Bandwidth64::new(sigma)?;
    let est = mutual_information(&Responses::new(&values, &labels)?, sigma);
    println!(
        "{}",
        serde_json::to_string(&json!({
            "h_f": est.h_f,
            "h_f_given_y": est.h_f_given_y,
            "mi": est.mi,
            "sigma": sigma.get(),
        }))?
    );
    let config = json!({ "sigma": sigma.get(), "label_col": args.label_col.to_string() });
    commit_with_manifest(Outputs::default(), run, config, json!({}), args.manifest)
}

fn roc(args: RocArgs) -> Result<()> {
    let mut run = Run::start("roc");
    run.input(&args.input)?;
    let ds = responses_file(&args.input, &args.label_col)?;
    require_both_classes(ds.labels())?;
    let values = ds.features().column(0).to_vec();
    let curve = roc_curve(&values, ds.labels())?;
    let mut buf = Vec::new();
    if args.pr {
        write_pr_csv(&pr_curve(&values, ds.labels())?, &mut buf)?;
    } else {
        write_roc_csv(&curve, &mut buf)?;
    }
    let mut outputs = Outputs::default();
    outputs.add(&args.out, buf);
    let manifest = args
        .manifest
        .unwrap_or_else(|| sibling(&args.out, "manifest.json"));
    let config = json!({ "pr": args.pr, "label_col": args.label_col.to_string() });
    commit_with_manifest(outputs, run, config, json!({}), Some(manifest))?;
    println!("auc={}", curve.auc);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a),
        Command::Mi(a) => mi(a),
        Command::Roc(a) => roc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
