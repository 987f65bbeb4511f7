use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crowdscribe::aggregate::{
    aggregate_oracle, aggregate_random_all, evaluate, hrrasa, rasa, rover, AlignmentOrder,
    AnnotatedItem, Embedder, FileEmbedder, HashedNgramEmbedder, ItemId, RasaConfig, RoverConfig,
};
use crowdscribe::agreement::{alpha_sampled, AlphaSampleConfig, DiffMode, TextDistance};
use crowdscribe::dataio::{
    self, atomic_write, error_breakdown, read_annotations, read_annotations_mapped, read_truths,
    summary_stats, ColumnMapping, CrowdClass,
};
use crowdscribe::kvfile;
use crowdscribe::qcsim::{build_pool, simulate_project, PoolConfig, ProjectConfig, SimOutput};
use crowdscribe::textnorm::{filter_corpus, normalize, Alphabet, FilterRuleSet, NormalizedText};

use crate::manifest::RunManifest;

/// Environment variable naming a directory in which relative input paths
/// are looked up when they do not exist as given.
const DATA_DIR_ENV: &str = "CROWDSCRIBE_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "crowdscribe",
    version,
    about = "Crowdsourced-transcription toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Aggregate worker annotations into one output per item.
    Aggregate(AggregateArgs),
    /// Score aggregated outputs against ground truths (mean WER).
    Eval(EvalArgs),
    /// Estimate inter-rater agreement (Krippendorff's alpha, sampled).
    Alpha(AlphaArgs),
    /// Run the quality-controlled annotation-pipeline simulator.
    Simulate(SimulateArgs),
    /// Dataset summary statistics.
    Stats(StatsArgs),
    /// Cross-tabulate method correctness against crowd correctness.
    Breakdown(BreakdownArgs),
    /// Screen a sentence corpus for digits, abbreviations, and foreign
    /// alphabets.
    Filter(FilterArgs),
    /// Convert an external release to the canonical TSV layout.
    Convert(ConvertArgs),
    /// Re-run a command from its manifest.
    Rerun(RerunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Random,
    Oracle,
    Rover,
    Rasa,
    Hrrasa,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Oracle => "oracle",
            Method::Rover => "rover",
            Method::Rasa => "rasa",
            Method::Hrrasa => "hrrasa",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphabetArg {
    Latin,
    Cyrillic,
}

impl From<AlphabetArg> for Alphabet {
    fn from(a: AlphabetArg) -> Alphabet {
        match a {
            AlphabetArg::Latin => Alphabet::Latin,
            AlphabetArg::Cyrillic => Alphabet::Cyrillic,
        }
    }
}

#[derive(Args, Serialize)]
pub struct AggregateArgs {
    /// Annotations file (canonical TSV, or external format with --mapping).
    #[arg(long)]
    pub input: PathBuf,
    /// Ground-truth file; required for the oracle method.
    #[arg(long)]
    pub truths: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value = "outputs.tsv")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "latin")]
    pub alphabet: AlphabetArg,
    /// Column-mapping file for non-canonical annotation releases.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Alignment order for rover: input or worker-id.
    #[arg(long, default_value = "input")]
    pub rover_order: String,
    /// NULL-vote bias for rover, as a fraction of total votes.
    #[arg(long, default_value_t = 0.0)]
    pub null_preference: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Dimension of the built-in hashed n-gram embedder.
    #[arg(long, default_value_t = 256)]
    pub embed_dim: usize,
    /// External embedding table (TSV: text_hash, dim, v1..vdim); replaces
    /// the built-in embedder for rasa/hrrasa.
    #[arg(long)]
    pub embeddings_file: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct EvalArgs {
    /// Aggregated outputs (TSV: item_id, text).
    #[arg(long)]
    pub outputs: PathBuf,
    #[arg(long)]
    pub truths: PathBuf,
    /// Write the per-item WER table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "latin")]
    pub alphabet: AlphabetArg,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Args, Serialize)]
pub struct AlphaArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "lev-char")]
    pub distance: DistanceArg,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 100)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the raw distance as the difference function instead of its
    /// square.
    #[arg(long)]
    pub unsquared: bool,
    #[arg(long, value_enum, default_value = "latin")]
    pub alphabet: AlphabetArg,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Write the report as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum DistanceArg {
    #[value(name = "lev-char")]
    LevChar,
    #[value(name = "lev-word")]
    LevWord,
}

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    /// Ground-truth corpus: UTF-8 text, one sentence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Worker pool configuration (key: value); defaults when omitted.
    #[arg(long)]
    pub pool_config: Option<PathBuf>,
    /// Project configuration (key: value); defaults when omitted.
    #[arg(long)]
    pub project_config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for annotations.tsv, truths.tsv, ledger.tsv,
    /// stats.txt.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "latin")]
    pub alphabet: AlphabetArg,
}

#[derive(Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub truths: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "latin")]
    pub alphabet: AlphabetArg,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Write a tasks-per-worker histogram TSV here.
    #[arg(long)]
    pub hist: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Args, Serialize)]
pub struct BreakdownArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub truths: PathBuf,
    /// Method outputs as name=path; repeatable.
    #[arg(long = "outputs", value_parser = parse_method_output)]
    pub outputs: Vec<(String, PathBuf)>,
    #[arg(long, value_enum, default_value = "latin")]
    pub alphabet: AlphabetArg,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Args, Serialize)]
pub struct FilterArgs {
    /// Sentence corpus: UTF-8 text, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "latin")]
    pub alphabet: AlphabetArg,
    /// Keep sentences containing digits.
    #[arg(long)]
    pub allow_digits: bool,
    /// Literal abbreviation pattern to reject; repeatable.
    #[arg(long = "pattern")]
    pub patterns: Vec<String>,
    /// File of abbreviation patterns, one per line.
    #[arg(long)]
    pub patterns_file: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write rejected sentences and their reasons here.
    #[arg(long)]
    pub rejected: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ConvertArgs {
    /// External annotations file.
    #[arg(long)]
    pub input: PathBuf,
    /// Column mapping for the annotations file.
    #[arg(long)]
    pub mapping: PathBuf,
    /// Canonical annotations TSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// External ground-truth file, if any.
    #[arg(long)]
    pub truths_input: Option<PathBuf>,
    /// Column mapping for the ground-truth file (item_id and text keys).
    #[arg(long)]
    pub truths_mapping: Option<PathBuf>,
    /// Canonical ground-truth TSV to write.
    #[arg(long)]
    pub truths_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "latin")]
    pub alphabet: AlphabetArg,
}

#[derive(Args, Serialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
}

fn parse_method_output(s: &str) -> Result<(String, PathBuf), String> {
    s.split_once('=')
        .map(|(name, path)| (name.to_string(), PathBuf::from(path)))
        .ok_or_else(|| format!("expected name=path, got `{s}`"))
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    dispatch(cli.command, argv)
}

fn dispatch(command: Command, argv: Vec<String>) -> anyhow::Result<()> {
    match command {
        Command::Aggregate(args) => cmd_aggregate(args, argv),
        Command::Eval(args) => cmd_eval(args, argv),
        Command::Alpha(args) => cmd_alpha(args, argv),
        Command::Simulate(args) => cmd_simulate(args, argv),
        Command::Stats(args) => cmd_stats(args, argv),
        Command::Breakdown(args) => cmd_breakdown(args, argv),
        Command::Filter(args) => cmd_filter(args, argv),
        Command::Convert(args) => cmd_convert(args, argv),
        Command::Rerun(args) => cmd_rerun(args),
    }
}

/// Resolve an input path, falling back to $CROWDSCRIBE_DATA_DIR.
fn resolve(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => {
            let candidate = PathBuf::from(dir).join(path);
            if candidate.exists() {
                candidate
            } else {
                path.to_path_buf()
            }
        }
        None => path.to_path_buf(),
    }
}

fn load_annotations(
    input: &Path,
    mapping: Option<&PathBuf>,
    alphabet: Alphabet,
) -> anyhow::Result<Vec<AnnotatedItem>> {
    let input = resolve(input);
    let items = match mapping {
        Some(m) => {
            read_annotations_mapped(&input, &ColumnMapping::from_file(&resolve(m))?, alphabet)?
        }
        None => read_annotations(&input, alphabet)?,
    };
    Ok(items)
}

fn read_corpus_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    let path = resolve(path);
    let raw = std::fs::read_to_string(&path)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    Ok(raw.lines().map(str::to_string).collect())
}

fn write_outputs_tsv(
    items: &[AnnotatedItem],
    outputs: &BTreeMap<ItemId, NormalizedText>,
    path: &Path,
) -> anyhow::Result<()> {
    let mut body = String::from("item_id\ttext\n");
    for item in items {
        let text = &outputs[&item.item_id];
        body.push_str(&format!("{}\t{}\n", item.item_id, text.joined()));
    }
    atomic_write(path, &body)?;
    Ok(())
}

fn cmd_aggregate(args: AggregateArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let start = Instant::now();
    let alphabet = args.alphabet.into();
    let mut items = load_annotations(&args.input, args.mapping.as_ref(), alphabet)?;
    if let Some(truths_path) = &args.truths {
        let truths = read_truths(&resolve(truths_path), alphabet)?;
        dataio::attach_truths(&mut items, &truths);
    }
    let outputs = match args.method {
        Method::Random => aggregate_random_all(&items, args.seed)?,
        Method::Oracle => {
            if args.truths.is_none() {
                bail!(crowdscribe::Error::contract("oracle requires --truths"));
            }
            let mut out = BTreeMap::new();
            for item in &items {
                out.insert(item.item_id.clone(), aggregate_oracle(item)?);
            }
            out
        }
        Method::Rover => {
            let order = match args.rover_order.as_str() {
                "input" => AlignmentOrder::Input,
                "worker-id" => AlignmentOrder::WorkerId,
                other => bail!(crowdscribe::Error::contract(format!(
                    "--rover-order: expected input or worker-id, got `{other}`"
                ))),
            };
            let config = RoverConfig {
                null_preference: args.null_preference,
                order,
            };
            let mut out = BTreeMap::new();
            for item in &items {
                out.insert(item.item_id.clone(), rover(item, &config)?);
            }
            out
        }
        Method::Rasa | Method::Hrrasa => {
            let config = RasaConfig {
                max_iter: args.max_iter,
                tol: args.tol,
                ..RasaConfig::default()
            };
            let embedder: Box<dyn Embedder> = match &args.embeddings_file {
                Some(path) => Box::new(FileEmbedder::from_path(&resolve(path))?),
                None => Box::new(HashedNgramEmbedder::new(args.embed_dim)),
            };
            let (out, _state) = if args.method == Method::Rasa {
                rasa(&items, embedder.as_ref(), &config)?
            } else {
                hrrasa(&items, embedder.as_ref(), &config)?
            };
            out
        }
    };
    write_outputs_tsv(&items, &outputs, &args.out)?;

    let mut manifest = RunManifest::new("aggregate", argv);
    manifest.seed = Some(args.seed);
    manifest.inputs = [
        Some(args.input.clone()),
        args.truths.clone(),
        args.mapping.clone(),
    ]
    .into_iter()
    .flatten()
    .collect();
    manifest.outputs = vec![args.out.clone()];
    manifest.config = serde_json::to_value(&args)?;
    manifest.wall_time_ms = start.elapsed().as_millis();
    manifest.write_alongside(&args.out)?;
    println!(
        "{} items aggregated with {}",
        items.len(),
        args.method.name()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let start = Instant::now();
    let alphabet = args.alphabet.into();
    let outputs = read_truths(&resolve(&args.outputs), alphabet)?;
    let truths = read_truths(&resolve(&args.truths), alphabet)?;
    let items: Vec<AnnotatedItem> = truths
        .iter()
        .map(|(id, text)| AnnotatedItem {
            item_id: id.clone(),
            ground_truth: Some(text.clone()),
            annotations: Vec::new(),
        })
        .collect();
    let report = evaluate(&outputs, &items, "eval")?;
    match args.format {
        OutputFormat::Text => println!("mean WER {:.2}", report.mean_wer * 100.0),
        OutputFormat::Json => println!("{}", serde_json::to_string(&report)?),
    }
    if let Some(out) = &args.out {
        let mut body = String::from("item_id\twer\n");
        for (id, value) in &report.per_item {
            body.push_str(&format!("{id}\t{value}\n"));
        }
        atomic_write(out, &body)?;
        let mut manifest = RunManifest::new("eval", argv);
        manifest.inputs = vec![args.outputs.clone(), args.truths.clone()];
        manifest.outputs = vec![out.clone()];
        manifest.config = serde_json::to_value(&args)?;
        manifest.wall_time_ms = start.elapsed().as_millis();
        manifest.write_alongside(out)?;
    }
    Ok(())
}

fn cmd_alpha(args: AlphaArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let start = Instant::now();
    let alphabet = args.alphabet.into();
    let items = load_annotations(&args.input, args.mapping.as_ref(), alphabet)?;
    let config = AlphaSampleConfig {
        n_samples: args.samples,
        sample_size: args.sample_size,
        seed: args.seed,
        distance: match args.distance {
            DistanceArg::LevChar => TextDistance::LevChar,
            DistanceArg::LevWord => TextDistance::LevWord,
        },
        mode: if args.unsquared {
            DiffMode::Plain
        } else {
            DiffMode::Squared
        },
        ..AlphaSampleConfig::default()
    };
    let report = alpha_sampled(&items, &config)?;
    match args.format {
        OutputFormat::Text => {
            println!("alpha {:.2}", report.alpha);
            println!(
                "samples: {}  sample_size: {}  seed: {}  std_dev: {:.4}  skipped: {}",
                report.n_samples, report.sample_size, report.seed, report.std_dev, report.n_skipped
            );
        }
        OutputFormat::Json => println!("{}", serde_json::to_string(&report)?),
    }
    if let Some(out) = &args.out {
        atomic_write(out, &serde_json::to_string_pretty(&report)?)?;
        let mut manifest = RunManifest::new("alpha", argv);
        manifest.seed = Some(args.seed);
        manifest.inputs = vec![args.input.clone()];
        manifest.outputs = vec![out.clone()];
        manifest.config = serde_json::to_value(&args)?;
        manifest.wall_time_ms = start.elapsed().as_millis();
        manifest.write_alongside(out)?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let start = Instant::now();
    let alphabet: Alphabet = args.alphabet.into();
    let corpus: Vec<NormalizedText> = read_corpus_lines(&args.corpus)?
        .iter()
        .map(|line| normalize(line, alphabet))
        .collect();
    let project = match &args.project_config {
        Some(path) => ProjectConfig::from_kv(&kvfile::read_kv_file(&resolve(path))?)?,
        None => ProjectConfig::default(),
    };
    let pool_config = match &args.pool_config {
        Some(path) => PoolConfig::from_kv(&kvfile::read_kv_file(&resolve(path))?)?,
        None => PoolConfig::default(),
    };
    // The pool is derived from the same seed as the run, so one seed fully
    // determines the output.
    let mut pool_rng = rand_seed(args.seed);
    let pool = build_pool(&pool_config, &mut pool_rng)?;
    let output = simulate_project(&corpus, &pool, &project, args.seed)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let ann_path = args.out.join("annotations.tsv");
    let truth_path = args.out.join("truths.tsv");
    let ledger_path = args.out.join("ledger.tsv");
    let stats_path = args.out.join("stats.txt");
    dataio::write_annotations(&output.dataset, &ann_path)?;
    dataio::write_truths(&output.dataset, &truth_path)?;
    atomic_write(&ledger_path, &ledger_tsv(&output))?;
    let stats = stats_kv(&output);
    atomic_write(&stats_path, &stats)?;
    print!("{stats}");

    let mut manifest = RunManifest::new("simulate", argv);
    manifest.seed = Some(args.seed);
    manifest.inputs = [
        Some(args.corpus.clone()),
        args.pool_config.clone(),
        args.project_config.clone(),
    ]
    .into_iter()
    .flatten()
    .collect();
    manifest.outputs = vec![ann_path, truth_path, ledger_path, stats_path.clone()];
    manifest.config = serde_json::json!({
        "args": serde_json::to_value(&args)?,
        "project": serde_json::to_value(&project)?,
        "pool": serde_json::to_value(&pool_config)?,
    });
    manifest.wall_time_ms = start.elapsed().as_millis();
    manifest.write_alongside(&stats_path)?;
    Ok(())
}

fn rand_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x706f_6f6c)
}

fn ledger_tsv(output: &SimOutput) -> String {
    let mut body = String::from("worker_id\texam_attempts\texam_pay\taccepted_tasks\ttask_pay\n");
    for (worker, entry) in &output.ledger.entries {
        body.push_str(&format!(
            "{worker}\t{}\t{}\t{}\t{}\n",
            entry.exam_attempts, entry.exam_pay, entry.accepted_tasks, entry.task_pay
        ));
    }
    body
}

fn stats_kv(output: &SimOutput) -> String {
    let s = &output.stats;
    format!(
        "exam_attempts: {}\nexam_passes: {}\nexam_acceptance_rate: {:.4}\n\
         blocks_spam: {}\nblocks_golden: {}\nreassignments: {}\n\
         n_items: {}\nn_annotations: {}\nmean_annotation_wer: {:.4}\ntotal_payout: {}\n",
        s.exam_attempts,
        s.exam_passes,
        s.exam_acceptance_rate,
        s.blocks_spam,
        s.blocks_golden,
        s.reassignments,
        s.n_items,
        s.n_annotations,
        s.mean_annotation_wer,
        output.ledger.total,
    )
}

fn cmd_stats(args: StatsArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let start = Instant::now();
    let alphabet = args.alphabet.into();
    let mut items = load_annotations(&args.input, args.mapping.as_ref(), alphabet)?;
    if let Some(truths_path) = &args.truths {
        let truths = read_truths(&resolve(truths_path), alphabet)?;
        dataio::attach_truths(&mut items, &truths);
    }
    let summary = summary_stats(&items);
    match args.format {
        OutputFormat::Text => {
            print!(
            "n_items: {}\nn_workers: {}\nn_answers: {}\nmean_gt_len: {:.2}\nmean_ann_len: {:.2}\n",
            summary.n_items, summary.n_workers, summary.n_answers, summary.mean_gt_len,
            summary.mean_ann_len
        )
        }
        OutputFormat::Json => println!("{}", serde_json::to_string(&summary)?),
    }
    if let Some(hist_path) = &args.hist {
        let mut per_worker: BTreeMap<&crowdscribe::aggregate::WorkerId, usize> = BTreeMap::new();
        for item in &items {
            for ann in &item.annotations {
                *per_worker.entry(&ann.worker_id).or_insert(0) += 1;
            }
        }
        let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
        for count in per_worker.values() {
            *histogram.entry(*count).or_insert(0) += 1;
        }
        let mut body = String::from("tasks_completed\tn_workers\n");
        for (tasks, workers) in histogram {
            body.push_str(&format!("{tasks}\t{workers}\n"));
        }
        atomic_write(hist_path, &body)?;
        let mut manifest = RunManifest::new("stats", argv);
        manifest.inputs = vec![args.input.clone()];
        manifest.outputs = vec![hist_path.clone()];
        manifest.config = serde_json::to_value(&args)?;
        manifest.wall_time_ms = start.elapsed().as_millis();
        manifest.write_alongside(hist_path)?;
    }
    Ok(())
}

fn cmd_breakdown(args: BreakdownArgs, _argv: Vec<String>) -> anyhow::Result<()> {
    let alphabet = args.alphabet.into();
    let mut items = load_annotations(&args.input, args.mapping.as_ref(), alphabet)?;
    let truths = read_truths(&resolve(&args.truths), alphabet)?;
    dataio::attach_truths(&mut items, &truths);
    if args.outputs.is_empty() {
        bail!(crowdscribe::Error::contract(
            "breakdown needs at least one --outputs name=path"
        ));
    }
    let mut method_outputs = BTreeMap::new();
    for (name, path) in &args.outputs {
        method_outputs.insert(name.clone(), read_truths(&resolve(path), alphabet)?);
    }
    let table = error_breakdown(&items, &method_outputs)?;
    match args.format {
        OutputFormat::Json => println!("{}", serde_json::to_string(&table)?),
        OutputFormat::Text => {
            print!("class\tsize");
            for method in table.methods.keys() {
                print!("\t{method}+\t{method}-");
            }
            println!();
            for class in [
                CrowdClass::AllCorrect,
                CrowdClass::HasCorrect,
                CrowdClass::AllIncorrect,
            ] {
                print!("{}\t{}", class.label(), table.class_sizes[&class]);
                for breakdown in table.methods.values() {
                    let cell = match class {
                        CrowdClass::AllCorrect => breakdown.all_correct,
                        CrowdClass::HasCorrect => breakdown.has_correct,
                        CrowdClass::AllIncorrect => breakdown.all_incorrect,
                    };
                    print!("\t{}\t{}", cell.correct, cell.incorrect);
                }
                println!();
            }
        }
    }
    Ok(())
}

fn cmd_filter(args: FilterArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let start = Instant::now();
    let sentences = read_corpus_lines(&args.input)?;
    let mut patterns = args.patterns.clone();
    if let Some(pf) = &args.patterns_file {
        patterns.extend(read_corpus_lines(pf)?.into_iter().filter(|l| !l.is_empty()));
    }
    let rules = FilterRuleSet::new(!args.allow_digits, patterns, vec![args.alphabet.into()])?;
    let (kept, rejected) = filter_corpus(&sentences, &rules);
    let mut body = kept.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    atomic_write(&args.out, &body)?;
    if let Some(rej_path) = &args.rejected {
        let mut rej = String::from("sentence\treason\n");
        for (sentence, reason) in &rejected {
            rej.push_str(&format!("{sentence}\t{reason}\n"));
        }
        atomic_write(rej_path, &rej)?;
    }
    println!("kept {} of {} sentences", kept.len(), sentences.len());
    let mut manifest = RunManifest::new("filter", argv);
    manifest.inputs = vec![args.input.clone()];
    manifest.outputs = vec![args.out.clone()];
    manifest.config = serde_json::to_value(&args)?;
    manifest.wall_time_ms = start.elapsed().as_millis();
    manifest.write_alongside(&args.out)?;
    Ok(())
}

fn cmd_convert(args: ConvertArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let start = Instant::now();
    let alphabet: Alphabet = args.alphabet.into();
    let mapping = ColumnMapping::from_file(&resolve(&args.mapping))?;
    let mut items = read_annotations_mapped(&resolve(&args.input), &mapping, alphabet)?;
    let mut outputs = vec![args.out.clone()];
    if let Some(truths_input) = &args.truths_input {
        let truths_out = args
            .truths_out
            .clone()
            .ok_or_else(|| crowdscribe::Error::contract("--truths-input requires --truths-out"))?;
        let tm = match &args.truths_mapping {
            Some(path) => ColumnMapping::from_file(&resolve(path))?,
            None => mapping.clone(),
        };
        let truths = dataio::read_truths_mapped(&resolve(truths_input), &tm, alphabet)?;
        dataio::attach_truths(&mut items, &truths);
        dataio::write_truths(&items, &truths_out)?;
        outputs.push(truths_out);
    }
    dataio::write_annotations(&items, &args.out)?;
    println!(
        "converted {} items, {} annotations",
        items.len(),
        items.iter().map(|i| i.annotations.len()).sum::<usize>()
    );
    let mut manifest = RunManifest::new("convert", argv);
    manifest.inputs = vec![args.input.clone(), args.mapping.clone()];
    manifest.outputs = outputs;
    manifest.config = serde_json::to_value(&args)?;
    manifest.wall_time_ms = start.elapsed().as_millis();
    manifest.write_alongside(&args.out)?;
    Ok(())
}

fn cmd_rerun(args: RerunArgs) -> anyhow::Result<()> {
    let manifest = RunManifest::load(&args.manifest)?;
    let mut argv = vec!["crowdscribe".to_string()];
    argv.extend(manifest.argv.iter().cloned());
    let cli = Cli::try_parse_from(&argv).with_context(|| {
        format!(
            "manifest {} holds an unparsable command",
            args.manifest.display()
        )
    })?;
    dispatch(cli.command, manifest.argv)
}
