//! The `ortho-transfer` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 numerical
//! failure (a non-finite loss during training).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{
    generate_synthetic, ExpressionDataset, Labels, PhenotypeTable, SyntheticSpec, SOURCE_SPECIES,
    TARGET_SPECIES,
};
use crate::error::Error;
use crate::graph::{build_rbh_graph, read_score_table, BiadjacencyMatrix, RbhConfig};
use crate::interpret::{support_summary, top_contributors, OrthologyWeightTable};
use crate::layer::{Init, Mode};
use crate::loss::LossKind;
use crate::mlp::{Activation, FeedforwardNetwork};
use crate::model::Model;
use crate::train::{self, OptimizerKind, TrainConfig};
use crate::tsv::{fmt_f64, read_gene_list};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ortho-transfer",
    version,
    about = "Orthology-masked cross-species transfer of phenotype predictors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the reciprocal-best-hit orthology graph from two score tables.
    BuildGraph(BuildGraphArgs),
    /// Generate a synthetic transfer task with known ground truth.
    Synth(SynthArgs),
    /// Train a phenotype network on its own species' expression data.
    TrainBase(TrainBaseArgs),
    /// Train the conversion layer in front of a frozen phenotype network.
    TrainConversion(TrainConversionArgs),
    /// Write per-sample predictions.
    Predict(PredictArgs),
    /// Export the learned conversion weights.
    InspectWeights(InspectArgs),
    /// Print the mean loss of a model on labelled data.
    Eval(EvalArgs),
}

#[derive(Debug, clap::Args)]
struct BuildGraphArgs {
    /// Target-vs-source scores (`query`, `subject`, `score` columns).
    #[arg(long = "scores-tq")]
    scores_tq: PathBuf,
    /// Source-vs-target scores.
    #[arg(long = "scores-qt")]
    scores_qt: PathBuf,
    #[arg(long = "target-genes")]
    target_genes: PathBuf,
    #[arg(long = "source-genes")]
    source_genes: PathBuf,
    #[arg(long)]
    threshold: f64,
    #[arg(long = "tie-tol", default_value_t = 0.0)]
    tie_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct SynthArgs {
    #[arg(long = "n-s")]
    n_s: usize,
    #[arg(long = "n-t")]
    n_t: usize,
    #[arg(long)]
    density: f64,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    noise: f64,
    #[arg(long)]
    hidden: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    Mse,
    Ce,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    RowUniform,
    ScaledRandom,
}

#[derive(Debug, clap::Args)]
struct OptimArgs {
    #[arg(long)]
    lr: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "adam")]
    optimizer: OptimizerArg,
    /// Samples per step; defaults to the full training set.
    #[arg(long = "batch-size")]
    batch_size: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct TrainBaseArgs {
    #[arg(long)]
    expr: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    hidden: usize,
    #[arg(long, value_enum)]
    loss: LossArg,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct TrainConversionArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    expr: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long, value_enum, default_value = "row-uniform")]
    init: InitArg,
    /// Target gene universe; defaults to the model's network input genes.
    #[arg(long = "target-genes")]
    target_genes: Option<PathBuf>,
    /// Source gene universe; defaults to the expression file's gene order.
    #[arg(long = "source-genes")]
    source_genes: Option<PathBuf>,
    /// Start from the conversion layer already stored in the model.
    #[arg(long = "warm-start")]
    warm_start: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, clap::Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    expr: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "target-gene")]
    target_gene: Option<String>,
    #[arg(long, requires = "target_gene")]
    top: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    expr: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

/// A failure with its exit code and a message naming the file or flag involved.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn code_of(err: &Error) -> i32 {
    match err {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

/// Attaches a context (file path or flag) to library errors.
trait Context<T> {
    fn context(self, what: impl std::fmt::Display) -> CliResult<T>;
}

impl<T> Context<T> for crate::error::Result<T> {
    fn context(self, what: impl std::fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure {
            code: code_of(&e),
            message: format!("{what}: {e}"),
        })
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    })
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut Vec<u8>) -> crate::error::Result<()>,
) -> CliResult<()> {
    let mut buf = Vec::new();
    f(&mut buf).context(path.display())?;
    std::fs::write(path, buf).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    })
}

fn read_model(path: &Path) -> CliResult<Model> {
    Model::read(open(path)?).context(path.display())
}

fn read_genes(path: &Path) -> CliResult<Vec<String>> {
    read_gene_list(open(path)?).context(path.display())
}

fn read_expression(path: &Path, species: &str) -> CliResult<ExpressionDataset> {
    ExpressionDataset::read_tsv(open(path)?, species).context(path.display())
}

fn read_labelled(
    expr: &Path,
    labels: &Path,
    species: &str,
    kind: LossKind,
) -> CliResult<ExpressionDataset> {
    let data = read_expression(expr, species)?;
    let table = PhenotypeTable::read_tsv(open(labels)?, kind).context(labels.display())?;
    data.attach_phenotypes(&table).context(labels.display())
}

fn align(
    data: ExpressionDataset,
    genes: &[String],
    path: &Path,
    err: &mut dyn Write,
) -> CliResult<ExpressionDataset> {
    let (aligned, dropped) = data.align_to_genes(genes).context(path.display())?;
    if dropped > 0 {
        let _ = writeln!(
            err,
            "warning: {}: dropped {dropped} genes not used by the model",
            path.display()
        );
    }
    Ok(aligned)
}

fn positive(flag: &str, value: f64) -> CliResult<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(usage(format!(
            "--{flag} must be a positive number, got {value}"
        )))
    }
}

fn train_config(
    optim: &OptimArgs,
    mode: Mode,
    loss: LossKind,
    alpha: f64,
    beta: f64,
    init: Init,
) -> CliResult<TrainConfig> {
    positive("lr", optim.lr)?;
    if optim.steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    if optim.batch_size == Some(0) {
        return Err(usage("--batch-size must be at least 1"));
    }
    for (flag, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(usage(format!("--{flag} must be finite and >= 0, got {v}")));
        }
    }
    Ok(TrainConfig {
        mode,
        learning_rate: optim.lr,
        steps: optim.steps,
        batch_size: optim.batch_size.unwrap_or(usize::MAX),
        alpha,
        beta,
        loss,
        optimizer: match optim.optimizer {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::ADAM,
        },
        seed: optim.seed,
        init,
    })
}

fn build_graph(args: &BuildGraphArgs) -> CliResult<()> {
    let cfg = RbhConfig::new(args.threshold, args.tie_tol)
        .map_err(|e| usage(format!("--threshold/--tie-tol: {e}")))?;
    let targets = read_genes(&args.target_genes)?;
    let sources = read_genes(&args.source_genes)?;
    let tq = read_score_table(open(&args.scores_tq)?, TARGET_SPECIES, SOURCE_SPECIES)
        .context(args.scores_tq.display())?;
    let qt = read_score_table(open(&args.scores_qt)?, SOURCE_SPECIES, TARGET_SPECIES)
        .context(args.scores_qt.display())?;
    let graph = build_rbh_graph(&tq, &qt, &cfg, &targets, &sources).context(format!(
        "{} / {}",
        args.scores_tq.display(),
        args.scores_qt.display()
    ))?;
    write_file(&args.out, |w| graph.write_tsv(w))
}

fn synth(args: &SynthArgs) -> CliResult<()> {
    let spec = SyntheticSpec {
        n_s: args.n_s,
        n_t: args.n_t,
        orthology_density: args.density,
        num_samples: args.samples,
        noise_sigma: args.noise,
        hidden_dim: args.hidden,
        seed: args.seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let bundle = generate_synthetic(&spec).context("synth")?;
    bundle
        .write_dir(&args.out_dir)
        .context(args.out_dir.display())
}

fn train_base(args: &TrainBaseArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.hidden == 0 {
        return Err(usage("--hidden must be at least 1"));
    }
    let loss = match args.loss {
        LossArg::Mse => LossKind::Mse,
        LossArg::Ce => LossKind::CrossEntropy,
    };
    let cfg = train_config(&args.optim, Mode::Hard, loss, 0.0, 0.0, Init::RowUniform)?;
    let data = read_labelled(&args.expr, &args.labels, TARGET_SPECIES, loss)?;
    let outputs = match data.labels() {
        Some(Labels::Classes(c)) => c.iter().max().map_or(2, |m| (m + 1).max(2)),
        _ => 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.optim.seed);
    let net = FeedforwardNetwork::random(
        &[data.n_genes(), args.hidden, outputs],
        &[Activation::Relu, Activation::Identity],
        &mut rng,
    )
    .context("--hidden")?;
    let (net, report) = train::train_base(net, &data, &cfg).context(args.expr.display())?;
    let mut model = Model::new(net, loss);
    model.input_gene_ids = Some(data.gene_ids().to_vec());
    write_file(&args.out, |w| model.write(w))?;
    if let Some(path) = &args.report {
        write_file(path, |w| report.write_tsv(w))?;
    }
    let _ = writeln!(out, "final_eval\t{}", report.final_eval);
    Ok(())
}

fn train_conversion(
    args: &TrainConversionArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let mut model = read_model(&args.model)?;
    let mode = match args.mode {
        ModeArg::Hard => Mode::Hard,
        ModeArg::Soft => Mode::Soft,
    };
    let init = match args.init {
        InitArg::RowUniform => Init::RowUniform,
        InitArg::ScaledRandom => Init::ScaledRandom,
    };
    let cfg = train_config(&args.optim, mode, model.loss, args.alpha, args.beta, init)?;

    let targets = match (&args.target_genes, &model.input_gene_ids) {
        (Some(path), _) => read_genes(path)?,
        (None, Some(ids)) => ids.clone(),
        (None, None) => {
            return Err(usage(format!(
                "{} does not record its input genes; pass --target-genes",
                args.model.display()
            )))
        }
    };
    let data = read_labelled(&args.expr, &args.labels, SOURCE_SPECIES, model.loss)?;
    let sources = match &args.source_genes {
        Some(path) => read_genes(path)?,
        None => data.gene_ids().to_vec(),
    };
    let data = align(data, &sources, &args.expr, err)?;
    let graph = BiadjacencyMatrix::read_tsv(open(&args.graph)?, targets, sources)
        .context(args.graph.display())?;

    let mut net = model.network.clone();
    net.set_frozen(true);
    let (layer, report) = if args.warm_start {
        let previous = model.conversion.take().ok_or_else(|| {
            usage(format!(
                "--warm-start: {} has no conversion layer",
                args.model.display()
            ))
        })?;
        if previous.mask() != &graph {
            return Err(Failure {
                code: EXIT_DATA,
                message: format!(
                    "--warm-start: {} differs from the model's orthology graph",
                    args.graph.display()
                ),
            });
        }
        let layer = previous.with_mode(mode);
        train::train_conversion(layer, &net, &data, &cfg).context(args.expr.display())?
    } else {
        train::fit_conversion(graph, &net, &data, &cfg).context(args.expr.display())?
    };

    model.network = net;
    model.input_gene_ids = Some(layer.mask().target_gene_ids().to_vec());
    model.conversion = Some(layer);
    write_file(&args.out, |w| model.write(w))?;
    write_file(&args.report, |w| report.write_tsv(w))?;
    let _ = writeln!(out, "final_eval\t{}", report.final_eval);
    Ok(())
}

/// Aligns `data` to whatever the model consumes first.
fn model_input(
    model: &Model,
    data: ExpressionDataset,
    path: &Path,
    err: &mut dyn Write,
) -> CliResult<ExpressionDataset> {
    let genes = match (&model.conversion, &model.input_gene_ids) {
        (Some(layer), _) => Some(layer.mask().source_gene_ids().to_vec()),
        (None, Some(ids)) => Some(ids.clone()),
        (None, None) => None,
    };
    match genes {
        Some(genes) => align(data, &genes, path, err),
        None => Ok(data),
    }
}

fn model_output(model: &Model, x: &[f64]) -> crate::error::Result<Vec<f64>> {
    match &model.conversion {
        Some(layer) => model.network.predict(&layer.forward(x)?),
        None => model.network.predict(x),
    }
}

fn predict(args: &PredictArgs, err: &mut dyn Write) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let data = read_expression(&args.expr, SOURCE_SPECIES)?;
    let data = model_input(&model, data, &args.expr, err)?;
    let mut lines = Vec::with_capacity(data.n_samples());
    for (k, sample) in data.sample_ids().iter().enumerate() {
        let y = model_output(&model, data.row(k)).context(args.expr.display())?;
        let cell = match model.loss {
            LossKind::Mse => fmt_f64(y[0]),
            LossKind::CrossEntropy => {
                let best = (0..y.len()).fold(0, |b, c| if y[c] > y[b] { c } else { b });
                best.to_string()
            }
        };
        lines.push(format!("{sample}\t{cell}"));
    }
    write_file(&args.out, |w| {
        writeln!(w, "sample_id\tprediction")?;
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

fn inspect_weights(args: &InspectArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let layer = model.conversion.as_ref().ok_or_else(|| Failure {
        code: EXIT_DATA,
        message: format!("{}: model has no conversion layer", args.model.display()),
    })?;
    match &args.target_gene {
        Some(gene) => {
            let k = args.top.unwrap_or(usize::MAX);
            if k == 0 {
                return Err(usage("--top must be at least 1"));
            }
            let top = top_contributors(layer, gene, k).context("--target-gene")?;
            write_file(&args.out, |w| {
                writeln!(w, "source_gene\tweight")?;
                for (s, v) in &top {
                    writeln!(w, "{s}\t{}", fmt_f64(*v))?;
                }
                Ok(())
            })?;
        }
        None => {
            let table = OrthologyWeightTable::from_layer(layer);
            write_file(&args.out, |w| table.write_tsv(w))?;
        }
    }
    let s = support_summary(layer);
    let _ = writeln!(
        out,
        "on_support\t{}\t{}\noff_support\t{}\t{}",
        s.on_support_count, s.on_support_mean_abs, s.off_support_count, s.off_support_mean_abs
    );
    Ok(())
}

fn eval(args: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let data = read_labelled(&args.expr, &args.labels, SOURCE_SPECIES, model.loss)?;
    let data = model_input(&model, data, &args.expr, err)?;
    let value = match &model.conversion {
        Some(layer) => train::evaluate(&model.network, layer, &data),
        None => train::evaluate_network(&model.network, &data),
    }
    .context(args.expr.display())?;
    let _ = writeln!(out, "{value}");
    Ok(())
}

/// Runs the command line with explicit output streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::BuildGraph(a) => build_graph(a),
        Command::Synth(a) => synth(a),
        Command::TrainBase(a) => train_base(a, out),
        Command::TrainConversion(a) => train_conversion(a, out, err),
        Command::Predict(a) => predict(a, err),
        Command::InspectWeights(a) => inspect_weights(a, out),
        Command::Eval(a) => eval(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
