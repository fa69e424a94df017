//! `adjorder`: train and evaluate latent-class adjective-ordering models
//! from dependency treebanks and aligned word embeddings.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use adjorder::conllu::{extract_phrases, parse_conllu, ExtractionConfig};
use adjorder::dataset::{
    dataset_stats, split_by_token, split_by_type, SplitMode, SplitSpec, TrainSize,
};
use adjorder::embeddings::{filter_phrases_by_vocab, load_embeddings, EmbeddingTable};
use adjorder::evaluation::{
    class_report, evaluate, evaluate_pairs, paired_permutation_test, parse_pairs, EvalReport,
    DEFAULT_ALPHA, DEFAULT_PERMUTATIONS,
};
use adjorder::manifest::RunManifest;
use adjorder::model::{load_model, predict_order, save_model, ModelConfig, WMode};
use adjorder::phrase::{read_phrases, write_phrases, Phrase};
use adjorder::scenario::{evaluate_on_language, run_scenario, write_artifacts, ScenarioSpec};
use adjorder::training::{train, TrainConfig};

#[derive(Parser)]
#[command(
    name = "adjorder",
    version,
    about = "Cross-lingual adjective ordering toolkit"
)]
struct Cli {
    /// Seed for every randomized operation in this run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Log level: error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract multi-adjective noun phrases from a CoNLL-U treebank.
    Extract(ExtractArgs),
    /// Split a phrase file into train/test (and optionally dev) sets.
    Split(SplitArgs),
    /// Summarize a phrase file.
    Stats(StatsArgs),
    /// Train an ordering model on a phrase file.
    Train(TrainArgs),
    /// Order an ad-hoc list of adjectives with a trained model.
    Predict(PredictArgs),
    /// Score a trained model on a test phrase file.
    Eval(EvalArgs),
    /// Report latent-class memberships for adjectives.
    Classes(ClassesArgs),
    /// Score a model against a pairs file of expected precedences.
    Pairs(PairsArgs),
    /// Paired permutation test between two evaluation reports.
    Significance(SignificanceArgs),
    /// Run a full experiment described by a scenario file.
    Scenario(ScenarioArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// CoNLL-U input file.
    #[arg(long)]
    input: PathBuf,
    /// ISO language code to tag extracted phrases with.
    #[arg(long)]
    lang: String,
    /// Output phrase file (one JSON record per line).
    #[arg(long)]
    out: PathBuf,
    /// Optional embedding table; phrases with out-of-vocabulary adjectives
    /// are dropped when given.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Keep adjectives that are adjacent to the noun but not amod-attached.
    #[arg(long)]
    no_require_amod: bool,
    /// Minimum length of the longer adjective run.
    #[arg(long, default_value_t = 2)]
    min_side: usize,
    /// Maximum total adjectives per phrase.
    #[arg(long, default_value_t = 6)]
    max_total: usize,
    /// Keep original casing instead of lowercasing.
    #[arg(long)]
    no_lowercase: bool,
    /// Keep phrases that repeat an adjective form.
    #[arg(long)]
    keep_duplicates: bool,
    /// Load at most this many embedding rows.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct SplitArgs {
    /// Phrase file to split.
    #[arg(long)]
    input: PathBuf,
    /// token: uniform random partition; type: hold out adjective types.
    #[arg(long, value_enum)]
    mode: Mode,
    /// Training set size as a phrase count (token mode).
    #[arg(long, conflicts_with = "train_fraction")]
    train_count: Option<usize>,
    /// Training fraction: of phrases in token mode, of adjective types in
    /// type mode.
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Development phrases carved out before the split.
    #[arg(long)]
    dev_count: Option<usize>,
    /// Directory for train.jsonl / test.jsonl / dev.jsonl and the manifest.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Token,
    Type,
}

#[derive(Args)]
struct StatsArgs {
    /// Phrase file to summarize.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training phrase file.
    #[arg(long)]
    train: PathBuf,
    /// Embedding tables as lang=path, one per language in the data.
    #[arg(long = "embeddings", value_name = "LANG=PATH", required = true)]
    embeddings: Vec<String>,
    /// Model variant: EL/ML learn the interaction matrices, EF/MF fix them
    /// to the total order.
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Number of latent classes.
    #[arg(long, default_value_t = 15)]
    classes: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    /// Sides up to this length marginalize exactly.
    #[arg(long, default_value_t = 4)]
    exact_side_limit: usize,
    /// Classes kept per adjective beyond the exact limit
    /// (default: min(5, classes)).
    #[arg(long)]
    prune_top: Option<usize>,
    /// Load at most this many rows per embedding table.
    #[arg(long)]
    limit: Option<usize>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-batch loss trace (one JSON record per line).
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    El,
    Ef,
    Ml,
    Mf,
}

impl VariantArg {
    fn w_mode(self) -> WMode {
        match self {
            VariantArg::El | VariantArg::Ml => WMode::Learned,
            VariantArg::Ef | VariantArg::Mf => WMode::FixedTotalOrder,
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Embedding table for the adjectives' language.
    #[arg(long)]
    embeddings: PathBuf,
    /// Comma-separated adjectives, e.g. "small,black,beautiful".
    #[arg(long)]
    adjectives: String,
    /// Which side of the noun the adjectives sit on.
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    side: SideArg,
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Test phrase file.
    #[arg(long)]
    test: PathBuf,
    /// Embedding tables as lang=path.
    #[arg(long = "embeddings", value_name = "LANG=PATH", required = true)]
    embeddings: Vec<String>,
    #[arg(long)]
    limit: Option<usize>,
    /// Output report file (accuracy, exact baseline, per-phrase results).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassesArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Comma-separated adjectives to classify.
    #[arg(long, conflicts_with_all = ["from_corpus", "top"])]
    adjectives: Option<String>,
    /// Rank adjectives by frequency in this phrase file instead.
    #[arg(long)]
    from_corpus: Option<PathBuf>,
    /// How many of the most frequent corpus adjectives to classify.
    #[arg(long, default_value_t = 100)]
    top: usize,
    #[arg(long)]
    limit: Option<usize>,
    /// Optional JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PairsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Pairs file: `first<TAB>second` per line, '#' comments; each row
    /// asserts that `first` precedes `second` before a noun.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SignificanceArgs {
    /// Evaluation report of system A.
    #[arg(long)]
    report_a: PathBuf,
    /// Evaluation report of system B.
    #[arg(long)]
    report_b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    permutations: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file: the experiment spec plus corpus and embedding paths.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for model, report, metrics, and manifest.
    #[arg(long)]
    out_dir: PathBuf,
}

/// On-disk scenario description consumed by `adjorder scenario`.
#[derive(serde::Serialize, serde::Deserialize)]
struct ScenarioFile {
    scenario: ScenarioSpec,
    /// Phrase files per language.
    corpora: BTreeMap<String, PathBuf>,
    /// Embedding tables per language.
    embeddings: BTreeMap<String, PathBuf>,
    /// Row cap applied to every embedding table.
    #[serde(default)]
    embedding_limit: Option<usize>,
    /// After training, also evaluate the trained model on these languages
    /// (additional-languages style reuse).
    #[serde(default)]
    extra_test_languages: Vec<String>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log_level))
        .format_timestamp(None)
        .init();

    match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Split(args) => cmd_split(args, cli.seed),
        Command::Stats(args) => cmd_stats(args),
        Command::Train(args) => cmd_train(args, cli.seed),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Classes(args) => cmd_classes(args),
        Command::Pairs(args) => cmd_pairs(args),
        Command::Significance(args) => cmd_significance(args, cli.seed),
        Command::Scenario(args) => cmd_scenario(args),
    }
}

// ---------------------------------------------------------------------------
// Helpers

fn parse_table_arg(arg: &str) -> Result<(String, PathBuf)> {
    match arg.split_once('=') {
        Some((lang, path)) if !lang.is_empty() && !path.is_empty() => {
            Ok((lang.to_string(), PathBuf::from(path)))
        }
        _ => bail!("expected LANG=PATH, got {arg:?}"),
    }
}

fn load_table(path: &Path, language: &str, limit: Option<usize>) -> Result<EmbeddingTable> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let table = load_embeddings(BufReader::new(file), language, limit)
        .with_context(|| format!("loading embeddings from {}", path.display()))?;
    info!(
        "loaded {} vectors (dim {}) for {language} from {}",
        table.len(),
        table.dim(),
        path.display()
    );
    Ok(table)
}

fn load_tables(args: &[String], limit: Option<usize>) -> Result<BTreeMap<String, EmbeddingTable>> {
    let mut tables = BTreeMap::new();
    for arg in args {
        let (lang, path) = parse_table_arg(arg)?;
        let table = load_table(&path, &lang, limit)?;
        tables.insert(lang, table);
    }
    Ok(tables)
}

fn read_phrase_file(path: &Path) -> Result<Vec<Phrase>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_phrases(BufReader::new(file))?)
}

fn write_phrase_file(path: &Path, phrases: &[Phrase]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_phrases(std::io::BufWriter::new(file), phrases)?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn model_dim(tables: &BTreeMap<String, EmbeddingTable>) -> Result<usize> {
    let mut dims = tables.values().map(EmbeddingTable::dim);
    let first = dims
        .next()
        .context("at least one embedding table required")?;
    if dims.any(|d| d != first) {
        bail!("embedding tables disagree on dimensionality");
    }
    Ok(first)
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let config = ExtractionConfig {
        require_amod: !args.no_require_amod,
        min_side: args.min_side,
        max_total_adjectives: args.max_total,
        lowercase: !args.no_lowercase,
        drop_duplicate_adjectives: !args.keep_duplicates,
    };
    let file =
        File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let sentences = parse_conllu(BufReader::new(file))?;
    let mut phrases = extract_phrases(&sentences, &config, &args.lang)?;
    let extracted = phrases.len();
    info!(
        "extracted {extracted} phrases from {} sentences",
        sentences.len()
    );

    if let Some(vec_path) = &args.embeddings {
        let table = load_table(vec_path, &args.lang, args.limit)?;
        let mut tables = BTreeMap::new();
        tables.insert(args.lang.clone(), table);
        phrases = filter_phrases_by_vocab(&phrases, &tables)?;
        info!("{} phrases survive the vocabulary filter", phrases.len());
    }

    write_phrase_file(&args.out, &phrases)?;

    let mut manifest = RunManifest::new("extract");
    manifest.set_param("language", &args.lang);
    manifest.set_param("config", &config);
    manifest.set_param("extracted", extracted);
    manifest.set_param("kept", phrases.len());
    manifest.record_input(&args.input)?;
    if let Some(vec_path) = &args.embeddings {
        manifest.record_input(vec_path)?;
    }
    manifest.record_output(&args.out)?;
    manifest.write(&manifest_path(&args.out))?;

    println!("{} phrases -> {}", phrases.len(), args.out.display());
    Ok(())
}

fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

fn cmd_split(args: SplitArgs, seed: u64) -> Result<()> {
    let phrases = read_phrase_file(&args.input)?;
    let train = match (args.train_count, args.train_fraction) {
        (Some(count), None) => TrainSize::Count(count),
        (None, Some(fraction)) => TrainSize::Fraction(fraction),
        (None, None) => TrainSize::Fraction(0.9),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let spec = SplitSpec {
        mode: match args.mode {
            Mode::Token => SplitMode::Token,
            Mode::Type => SplitMode::Type,
        },
        train,
        dev_count: args.dev_count,
        seed,
    };
    let split = match args.mode {
        Mode::Token => split_by_token(&phrases, &spec)?,
        Mode::Type => split_by_type(&phrases, &spec)?,
    };

    fs::create_dir_all(&args.out_dir)?;
    let train_path = args.out_dir.join("train.jsonl");
    let test_path = args.out_dir.join("test.jsonl");
    write_phrase_file(&train_path, &split.train)?;
    write_phrase_file(&test_path, &split.test)?;

    let mut manifest = RunManifest::new("split").with_seed(seed);
    manifest.set_param("spec", &spec);
    manifest.record_input(&args.input)?;
    manifest.record_output(&train_path)?;
    manifest.record_output(&test_path)?;
    if let Some(dev) = &split.dev {
        let dev_path = args.out_dir.join("dev.jsonl");
        write_phrase_file(&dev_path, dev)?;
        manifest.record_output(&dev_path)?;
    }
    manifest.write(&args.out_dir.join("manifest.json"))?;

    println!(
        "train {} / test {}{} -> {}",
        split.train.len(),
        split.test.len(),
        split
            .dev
            .as_ref()
            .map(|d| format!(" / dev {}", d.len()))
            .unwrap_or_default(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let phrases = read_phrase_file(&args.input)?;
    let stats = dataset_stats(&phrases);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

fn cmd_train(args: TrainArgs, seed: u64) -> Result<()> {
    let tables = load_tables(&args.embeddings, args.limit)?;
    let phrases = read_phrase_file(&args.train)?;

    let model_config = ModelConfig {
        num_classes: args.classes,
        dim: model_dim(&tables)?,
        w_mode: args.variant.w_mode(),
        exact_side_limit: args.exact_side_limit,
        prune_top_m: args.prune_top.unwrap_or(5.min(args.classes)),
    };
    let train_config = TrainConfig {
        learning_rate: args.lr,
        batch_size: args.batch,
        epochs: args.epochs,
        seed,
        init_scale: args.init_scale,
    };
    let (params, report) = train(&phrases, &tables, &model_config, &train_config)?;

    let mut bytes = Vec::new();
    save_model(&params, &mut bytes)?;
    fs::write(&args.out, &bytes)?;

    if let Some(metrics_path) = &args.metrics {
        let mut out = String::new();
        for (batch, nll) in report.batch_nll.iter().enumerate() {
            out.push_str(&serde_json::json!({ "batch": batch, "nll": nll }).to_string());
            out.push('\n');
        }
        fs::write(metrics_path, out)?;
    }

    let mut manifest = RunManifest::new("train").with_seed(seed);
    manifest.set_param("model_config", &model_config);
    manifest.set_param("train_config", &train_config);
    manifest.set_param("skipped_phrases", report.skipped);
    manifest.set_param("params_digest", &report.params_digest);
    manifest.record_input(&args.train)?;
    for arg in &args.embeddings {
        let (_, path) = parse_table_arg(arg)?;
        manifest.record_input(&path)?;
    }
    manifest.record_output(&args.out)?;
    if let Some(metrics_path) = &args.metrics {
        manifest.record_output(metrics_path)?;
    }
    manifest.write(&manifest_path(&args.out))?;

    let final_nll = report.batch_nll.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained on {} phrases ({} skipped), final batch NLL {final_nll:.4} -> {}",
        phrases.len() - report.skipped,
        report.skipped,
        args.out.display()
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let params = load_model(BufReader::new(File::open(&args.model)?))?;
    let table = load_table(&args.embeddings, "query", args.limit)?;

    let words: Vec<String> = args
        .adjectives
        .split(',')
        .map(|w| w.trim().to_string())
        .filter(|w| !w.is_empty())
        .collect();
    if words.len() < 2 {
        bail!("need at least two comma-separated adjectives");
    }
    let missing: Vec<&String> = words.iter().filter(|w| !table.contains(w)).collect();
    if !missing.is_empty() {
        bail!(
            "no embedding for {:?}; out-of-vocabulary words cannot be ordered",
            missing
        );
    }

    let (left, right): (Vec<String>, Vec<String>) = match args.side {
        SideArg::Left => (words.clone(), Vec::new()),
        SideArg::Right => (Vec::new(), words.clone()),
    };
    let prediction = predict_order(&left, &right, &table, &params)?;
    let sequence = match args.side {
        SideArg::Left => prediction.ordered_left(&left),
        SideArg::Right => prediction.ordered_right(&right),
    };
    println!("{}", sequence.join(" "));
    info!(
        "log_prob {:.6}, tied: {}",
        prediction.log_prob, prediction.tied
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let params = load_model(BufReader::new(File::open(&args.model)?))?;
    let tables = load_tables(&args.embeddings, args.limit)?;
    let test = read_phrase_file(&args.test)?;
    let report = evaluate(&test, &tables, &params)?;

    write_json(&args.out, &report)?;

    let mut manifest = RunManifest::new("eval");
    manifest.set_param("accuracy", report.accuracy);
    manifest.set_param("random_baseline", report.random_baseline);
    manifest.set_param("n", report.n);
    manifest.set_param("ties", report.ties);
    manifest.record_input(&args.model)?;
    manifest.record_input(&args.test)?;
    for arg in &args.embeddings {
        let (_, path) = parse_table_arg(arg)?;
        manifest.record_input(&path)?;
    }
    manifest.record_output(&args.out)?;
    manifest.write(&manifest_path(&args.out))?;

    println!(
        "accuracy {:.4} (random baseline {:.4}, n = {}, ties = {})",
        report.accuracy, report.random_baseline, report.n, report.ties
    );
    Ok(())
}

fn cmd_classes(args: ClassesArgs) -> Result<()> {
    let params = load_model(BufReader::new(File::open(&args.model)?))?;
    let table = load_table(&args.embeddings, "query", args.limit)?;

    let adjectives: Vec<String> = if let Some(list) = &args.adjectives {
        list.split(',')
            .map(|w| w.trim().to_string())
            .filter(|w| !w.is_empty())
            .collect()
    } else if let Some(corpus) = &args.from_corpus {
        let phrases = read_phrase_file(corpus)?;
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for phrase in &phrases {
            for adj in phrase.adjectives() {
                *counts.entry(adj.to_string()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.into_iter().take(args.top).map(|(w, _)| w).collect()
    } else {
        bail!("pass --adjectives or --from-corpus");
    };

    let report = class_report(&adjectives, &table, &params)?;
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    for row in &report.rows {
        let top = row
            .posterior
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        println!("{}\t{}\t{top:.4}", row.class, row.adjective);
    }
    if !report.skipped.is_empty() {
        eprintln!("skipped (no embedding): {}", report.skipped.join(", "));
    }
    Ok(())
}

fn cmd_pairs(args: PairsArgs) -> Result<()> {
    let params = load_model(BufReader::new(File::open(&args.model)?))?;
    let table = load_table(&args.embeddings, "query", args.limit)?;
    let pairs = parse_pairs(BufReader::new(File::open(&args.pairs)?))?;
    let report = evaluate_pairs(&pairs, &table, &params)?;
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    println!(
        "pairs accuracy {:.4} ({} evaluated, {} skipped)",
        report.accuracy, report.evaluated, report.skipped
    );
    Ok(())
}

fn cmd_significance(args: SignificanceArgs, seed: u64) -> Result<()> {
    let report_a: EvalReport =
        serde_json::from_reader(BufReader::new(File::open(&args.report_a)?))?;
    let report_b: EvalReport =
        serde_json::from_reader(BufReader::new(File::open(&args.report_b)?))?;
    let result = paired_permutation_test(
        &report_a.correct,
        &report_b.correct,
        args.permutations,
        seed,
        args.alpha,
    )?;
    if let Some(out) = &args.out {
        write_json(out, &result)?;
    }
    println!(
        "observed diff {:+.4}, p = {:.6} ({} permutations): {}",
        result.observed_diff,
        result.p_value,
        result.permutations,
        if result.significant() {
            "significant"
        } else {
            "not significant"
        }
    );
    Ok(())
}

fn cmd_scenario(args: ScenarioArgs) -> Result<()> {
    let file: ScenarioFile = serde_json::from_reader(BufReader::new(File::open(&args.spec)?))
        .with_context(|| format!("parsing scenario file {}", args.spec.display()))?;

    let mut corpora = BTreeMap::new();
    for (lang, path) in &file.corpora {
        corpora.insert(lang.clone(), read_phrase_file(path)?);
    }
    let mut tables = BTreeMap::new();
    for (lang, path) in &file.embeddings {
        tables.insert(lang.clone(), load_table(path, lang, file.embedding_limit)?);
    }

    let run = run_scenario(&file.scenario, &corpora, &tables)?;
    write_artifacts(&run, &args.out_dir)?;
    println!(
        "{:?} {:?} -> {}: accuracy {:.4} (baseline {:.4}, n = {})",
        file.scenario.name,
        file.scenario.variant,
        file.scenario.test_language,
        run.report.accuracy,
        run.report.random_baseline,
        run.report.n
    );

    for language in &file.extra_test_languages {
        let (report, _) =
            evaluate_on_language(&file.scenario, &run.params, language, &corpora, &tables)?;
        let out = args.out_dir.join(format!("report_{language}.json"));
        write_json(&out, &report)?;
        println!(
            "  {language}: accuracy {:.4} (baseline {:.4}, n = {})",
            report.accuracy, report.random_baseline, report.n
        );
    }

    // Record the extract-side inputs so the run can be replayed exactly.
    let mut manifest = RunManifest::new("scenario-inputs").with_seed(file.scenario.seed);
    manifest.set_param("spec_file", args.spec.display().to_string());
    manifest.record_input(&args.spec)?;
    for path in file.corpora.values() {
        manifest.record_input(path)?;
    }
    for path in file.embeddings.values() {
        manifest.record_input(path)?;
    }
    manifest.write(&args.out_dir.join("inputs.manifest.json"))?;
    Ok(())
}
