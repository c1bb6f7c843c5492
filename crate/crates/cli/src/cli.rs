use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "headline-bench",
    version,
    about = "Benchmark pipelines for Russian news headline generation",
    propagate_version = true
)]
pub struct Cli {
    /// File of `key=value` lines used for flags not given on the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Where to write the run manifest [default: <output>.run.json].
    #[arg(long, global = true, value_name = "FILE")]
    pub run_manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a raw RIA (JSONL) or Lenta (CSV) dump into the articles format.
    Ingest(IngestArgs),
    /// Assign articles to train/val/test partitions.
    Split(SplitArgs),
    /// Learn byte-pair merges from titles and texts.
    TrainBpe(TrainBpeArgs),
    /// Write first-sentence headlines.
    Baseline(BaselineArgs),
    /// Score predictions against reference headlines.
    Evaluate(EvaluateArgs),
    /// Novel n-gram proportions of reference (and predicted) headlines.
    Novelty(NoveltyArgs),
    /// Apply a document corruption to every article.
    Corrupt(CorruptArgs),
    /// Train a pointer-generator model.
    TrainPgn(TrainPgnArgs),
    /// Generate headlines with a trained pointer-generator checkpoint.
    Decode(DecodeArgs),
    /// Compare analytic and finite-difference gradients on a tiny model.
    GradCheck(GradCheckArgs),
    /// Export blind pairwise comparison tasks and their key.
    HumevalExport(HumevalExportArgs),
    /// Aggregate annotator votes into win/draw/loss rates.
    HumevalAggregate(HumevalAggregateArgs),
    /// Side-by-side table of several evaluation reports.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Split(_) => "split",
            Command::TrainBpe(_) => "train-bpe",
            Command::Baseline(_) => "baseline",
            Command::Evaluate(_) => "evaluate",
            Command::Novelty(_) => "novelty",
            Command::Corrupt(_) => "corrupt",
            Command::TrainPgn(_) => "train-pgn",
            Command::Decode(_) => "decode",
            Command::GradCheck(_) => "grad-check",
            Command::HumevalExport(_) => "humeval-export",
            Command::HumevalAggregate(_) => "humeval-aggregate",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Ria,
    Lenta,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionArg {
    Train,
    Val,
    Test,
}

impl From<PartitionArg> for headline_core::corpus::Partition {
    fn from(p: PartitionArg) -> Self {
        use headline_core::corpus::Partition;
        match p {
            PartitionArg::Train => Partition::Train,
            PartitionArg::Val => Partition::Val,
            PartitionArg::Test => Partition::Test,
        }
    }
}

/// Optional restriction of an articles file to one partition of a split.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Selection {
    /// Split manifest produced by `split`.
    #[arg(long, value_name = "FILE")]
    pub split: Option<PathBuf>,
    /// Partition to use when --split is given.
    #[arg(long, value_enum, default_value = "test", requires = "split")]
    pub partition: PartitionArg,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub format: CorpusFormat,
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Articles JSONL to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Store normalized (lowercased, NFC) title and text.
    #[arg(long)]
    pub normalize: bool,
}

fn parse_ratios(s: &str) -> Result<[u32; 3], String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected TRAIN:VAL:TEST, got `{s}`"));
    }
    let mut out = [0u32; 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.trim().parse().map_err(|_| format!("`{p}` is not a whole number"))?;
    }
    Ok(out)
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Split manifest JSON to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Percentages summing to 100.
    #[arg(long, default_value = "90:5:5", value_parser = parse_ratios)]
    pub ratios: [u32; 3],
    /// Also write train.jsonl, val.jsonl and test.jsonl into this directory.
    #[arg(long, value_name = "DIR")]
    pub partitions_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainBpeArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    /// Merge list to write; the sidecar goes to <output>.json.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 30_000)]
    pub num_merges: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    /// Predictions file, one headline per line.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, default_value = "first_sentence")]
    pub generator: String,
    /// Cut headlines to at most this many word tokens.
    #[arg(long)]
    pub max_tokens: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Articles JSONL (titles are references) or plain text, one per line.
    #[arg(long, value_name = "FILE")]
    pub refs: PathBuf,
    /// Predictions, one per line, aligned with the references.
    #[arg(long, value_name = "FILE")]
    pub hyps: PathBuf,
    /// Source texts for novelty, one per line [default: article texts when --refs is JSONL].
    #[arg(long, value_name = "FILE")]
    pub sources: Option<PathBuf>,
    #[command(flatten)]
    pub selection: Selection,
    /// Row label in tables.
    #[arg(long)]
    pub label: Option<String>,
    /// Score case-sensitively.
    #[arg(long)]
    pub no_lowercase: bool,
    /// Report JSON to write; printed to stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Scoring threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct NoveltyArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Predicted headlines to profile next to the references.
    #[arg(long, value_name = "FILE")]
    pub hyps: Option<PathBuf>,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long, default_value_t = 4)]
    pub max_n: usize,
    /// CSV with columns n, reference[, system].
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseArg {
    ShuffleSentences,
    Rotate,
    Infill,
}

#[derive(Debug, Args, Serialize)]
pub struct CorruptArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub kind: NoiseArg,
    /// Base seed; article i uses seed + i.
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub span_length_mean: f64,
    #[arg(long, default_value_t = 0.3)]
    pub mask_fraction: f64,
    #[arg(long, default_value = headline_core::mechanisms::MASK)]
    pub mask_token: String,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellArg {
    Lstm,
    Gru,
}

impl From<CellArg> for headline_pgn::CellKind {
    fn from(c: CellArg) -> Self {
        match c {
            CellArg::Lstm => headline_pgn::CellKind::Lstm,
            CellArg::Gru => headline_pgn::CellKind::Gru,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainPgnArgs {
    /// Articles JSONL (texts are sources, titles targets). Omit with --copy-task.
    #[arg(long, value_name = "FILE", required_unless_present = "copy_task")]
    pub input: Option<PathBuf>,
    /// Split manifest; trains on `train` and validates on `val`.
    #[arg(long, value_name = "FILE", conflicts_with = "copy_task")]
    pub split: Option<PathBuf>,
    /// Train on the synthetic copy-first-k-tokens task instead of a corpus.
    #[arg(long)]
    pub copy_task: bool,
    /// Synthetic examples; the last tenth is held out for validation.
    #[arg(long, default_value_t = 5000)]
    pub examples: usize,
    /// Tokens to copy in the synthetic task.
    #[arg(long, default_value_t = 3)]
    pub copy_k: usize,
    /// Checkpoint JSON to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Loss curve CSV [default: <output>.loss.csv].
    #[arg(long, value_name = "FILE")]
    pub loss_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 16)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = 10)]
    pub max_src_len: usize,
    #[arg(long, default_value_t = 4)]
    pub max_tgt_len: usize,
    #[arg(long, value_enum, default_value = "lstm")]
    pub cell: CellArg,
    #[arg(long, default_value_t = 1.0)]
    pub coverage_weight: f64,
    /// Disable the coverage mechanism entirely.
    #[arg(long)]
    pub no_coverage: bool,
    /// Step at which the coverage mechanism switches on.
    #[arg(long, default_value_t = 0)]
    pub coverage_start: usize,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1)]
    pub grad_accum: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    #[arg(long, default_value_t = 2.0)]
    pub clip_norm: f64,
    #[arg(long, default_value_t = 100)]
    pub eval_every: usize,
    /// Seed for initialization, data order and synthetic data.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DecodeArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub beam_size: usize,
    /// Longest headline in tokens, EOS included [default: the model's max_tgt_len].
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Length-normalization exponent.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Decoding threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct GradCheckArgs {
    #[arg(long, value_enum, default_value = "lstm")]
    pub cell: CellArg,
    /// Coverage loss weight λ.
    #[arg(long, default_value_t = 1.0)]
    pub coverage_weight: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Check a random subset of this many coordinates.
    #[arg(long)]
    pub max_coords: Option<usize>,
    #[arg(long, default_value_t = 11)]
    pub seed: u64,
    /// Report JSON to write; printed to stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct HumevalExportArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Model headlines aligned with the selected articles.
    #[arg(long, value_name = "FILE")]
    pub hyps: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    /// Task TSV shown to annotators.
    #[arg(long, value_name = "FILE")]
    pub tasks: PathBuf,
    /// Key TSV recording which side holds the model headline.
    #[arg(long, value_name = "FILE")]
    pub key: PathBuf,
    /// Export only the first N items.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct HumevalAggregateArgs {
    /// Votes TSV: item_id, annotator_id, choice.
    #[arg(long, value_name = "FILE")]
    pub votes: PathBuf,
    #[arg(long, default_value_t = 9)]
    pub quorum: usize,
    #[arg(long, default_value_t = 5)]
    pub supermajority: usize,
    /// `plurality`, or `threshold:K` for at-least-K-votes wins.
    #[arg(long, default_value = "plurality")]
    pub rule: String,
    /// Summary JSON to write; printed to stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Evaluation reports written by `evaluate`.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    /// Table to write; printed to stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}
