//! Command-line entry point for the full pipeline: data generation,
//! similarity-matrix construction, pre-training, training, evaluation,
//! ablations and attention export.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vsdn::evalbench::{evaluate_model, export_attention, run_ablation, AblationSuite};
use vsdn::glyphforge::{
    build_vocab_subset, dataset_digest, read_pgm, synthesize_dataset, Dataset, Geometry,
    GlyphFont, StyleRanges, TestSpec, Vocabulary,
};
use vsdn::lexnoise::{
    build_similarity, glyph_proxy_similarity, make_correction_corpus, save_corpus,
    save_similarity, CorruptionConfig, DEFAULT_K,
};
use vsdn::netcore::checkpoint::load_checkpoint;
use vsdn::netcore::Model;
use vsdn::trainkit::{pretrain_semantic, render_epochs, train_joint};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "vsdn",
    about = "Scene-text recognition with decoupled visual and semantic decoding",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a word-image dataset with train and test splits.
    GenData(GenDataArgs),
    /// Build the character-confusion similarity matrix.
    BuildSim(BuildSimArgs),
    /// Pre-train the semantic module on a word-correction corpus.
    PretrainSem(PretrainArgs),
    /// Jointly train the full network on a dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset's test split.
    Eval(EvalArgs),
    /// Train and compare controlled variants.
    Ablate(AblateArgs),
    /// Export per-step attention maps for one image.
    ExportAttention(ExportArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Plain-text `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_overrides(&self.sets)?;
        cfg.finalize()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenDataArgs {
    /// Word-list file (one word per line), or "builtin".
    #[arg(long)]
    words: String,
    /// Fraction of the base vocabulary to train on.
    #[arg(long, default_value_t = 1.0)]
    fraction: f64,
    #[arg(long, default_value_t = 50)]
    samples_per_word: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop base words longer than this.
    #[arg(long, default_value_t = 10)]
    max_word_len: usize,
    /// Random digit strings appended to the base list.
    #[arg(long, default_value_t = 200)]
    digit_strings: usize,
    /// Held-out test words drawn from the training vocabulary.
    #[arg(long, default_value_t = 150)]
    test_invoc_words: usize,
    /// Held-out test words outside the training vocabulary.
    #[arg(long, default_value_t = 150)]
    test_outvoc_words: usize,
    #[arg(long, default_value_t = 3)]
    test_samples_per_word: usize,
    /// Custom bitmap font file instead of the built-in face.
    #[arg(long)]
    font: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct BuildSimArgs {
    /// Derive weight rows from a trained checkpoint's CTC classifier.
    #[arg(long, conflicts_with = "from_glyphs")]
    from_checkpoint: Option<PathBuf>,
    /// Derive weight rows from the built-in glyph bitmaps.
    #[arg(long)]
    from_glyphs: bool,
    /// Softmax temperature.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PretrainArgs {
    /// Word-list file or "builtin".
    #[arg(long)]
    words: String,
    #[arg(long, default_value_t = 10)]
    pairs_per_word: usize,
    /// Similarity matrix file; defaults to the glyph proxy.
    #[arg(long)]
    sim: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    max_word_len: usize,
    /// Also write the generated corpus as TSV.
    #[arg(long)]
    save_corpus: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory from gen-data.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Semantic-module checkpoint to initialize from.
    #[arg(long)]
    sem_init: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Training vocabulary for the in/out-of-vocabulary split; without
    /// it only the total accuracy is reported.
    #[arg(long)]
    train_vocab: Option<PathBuf>,
    /// Top-k values for the semantic decoder.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3, 5])]
    topk: Vec<usize>,
    /// Write the TSV report here as well as stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    /// One of: loss_terms, query_mode, coupled_baseline.
    #[arg(long)]
    suite: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Semantic checkpoint; adds the pre-trained variant where relevant.
    #[arg(long)]
    sem_init: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// PGM image to decode.
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Relative output paths land under VSDN_RUN_DIR when it is set.
fn out_root(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("VSDN_RUN_DIR") {
        Some(root) => PathBuf::from(root).join(path),
        None => path.to_path_buf(),
    }
}

fn load_words(spec: &str, max_len: usize) -> Result<Vocabulary, CliError> {
    let vocab = if spec == "builtin" {
        Vocabulary::bundled()
    } else {
        Vocabulary::load(Path::new(spec))?
    };
    Ok(vocab.filter_max_len(max_len)?)
}

fn write_config_echo(dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", dir.display()))?;
    std::fs::write(dir.join("config.txt"), cfg.echo())
        .map_err(|e| anyhow::anyhow!("writing config echo: {e}"))?;
    Ok(())
}

fn load_model(path: &Path) -> Result<Model, CliError> {
    let (cfg, params, _) = load_checkpoint(path)?;
    Ok(Model::from_parts(cfg, params)?)
}

fn gen_data(args: GenDataArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let base = load_words(&args.words, args.max_word_len)?;
    let base = base.filter_decodable(cfg.model.t_max)?;
    let base = if args.digit_strings > 0 {
        base.with_digit_strings(args.digit_strings, (2, args.max_word_len.min(6)), args.seed)
            .filter_decodable(cfg.model.t_max)?
    } else {
        base
    };
    let vocab = build_vocab_subset(&base, args.fraction, args.seed)?;
    let font = match &args.font {
        Some(p) => GlyphFont::load(p)?,
        None => GlyphFont::builtin(),
    };
    let geometry = Geometry { height: cfg.model.img_h, width: cfg.model.img_w };
    let test = (args.test_invoc_words + args.test_outvoc_words > 0).then(|| TestSpec {
        invoc_words: args.test_invoc_words,
        outvoc_words: args.test_outvoc_words,
        samples_per_word: args.test_samples_per_word,
        base: base.clone(),
    });
    let out = out_root(&args.out);
    eprintln!(
        "synthesizing {} words x {} samples into {}",
        vocab.len(),
        args.samples_per_word,
        out.display()
    );
    let manifest = synthesize_dataset(
        &vocab,
        args.samples_per_word,
        &StyleRanges::default(),
        geometry,
        args.seed,
        test.as_ref(),
        &font,
        &out,
    )?;
    write_config_echo(&out, &cfg)?;
    let digest = dataset_digest(&out)?;
    println!("manifest\t{}", out.join("manifest.tsv").display());
    println!("entries\t{}", manifest.entries.len());
    println!("vocab_words\t{}", vocab.len());
    println!("digest\t{digest}");
    Ok(())
}

fn build_sim(args: BuildSimArgs) -> Result<(), CliError> {
    let sim = if let Some(ckpt) = &args.from_checkpoint {
        let (_, params, _) = load_checkpoint(ckpt)?;
        let w = params.ctc_char_weight_rows();
        build_similarity(&w, args.k, &format!("ctc-classifier:{}", ckpt.display()))?
    } else if args.from_glyphs {
        glyph_proxy_similarity(&GlyphFont::builtin(), args.k)?
    } else {
        return Err(CliError::usage("one of --from-checkpoint or --from-glyphs is required"));
    };
    let out = out_root(&args.out);
    save_similarity(&sim, &out)?;
    println!("similarity\t{}", out.display());
    println!("k\t{}", sim.k);
    println!("source\t{}", sim.source);
    Ok(())
}

fn pretrain_sem(args: PretrainArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let vocab = load_words(&args.words, args.max_word_len)?.filter_decodable(cfg.model.t_max)?;
    let sim = match &args.sim {
        Some(p) => vsdn::lexnoise::load_similarity(p)?,
        None => glyph_proxy_similarity(&GlyphFont::builtin(), DEFAULT_K)?,
    };
    let corrupt_cfg = CorruptionConfig { seed: args.seed, ..Default::default() };
    let pairs = make_correction_corpus(&vocab, args.pairs_per_word, &sim, &corrupt_cfg)?;
    let out_dir = out_root(&args.out_dir);
    write_config_echo(&out_dir, &cfg)?;
    if args.save_corpus {
        save_corpus(&pairs, &out_dir.join("corpus.tsv"))?;
    }
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = args.seed;
    eprintln!(
        "pre-training on {} pairs ({} words x {}) for {} epochs",
        pairs.len(),
        vocab.len(),
        args.pairs_per_word,
        train_cfg.epochs
    );
    let ckpt = out_dir.join("semantic.ckpt");
    let outcome = pretrain_semantic(&pairs, &cfg.model, &train_cfg, &ckpt)?;
    println!("checkpoint\t{}", outcome.checkpoint.display());
    for (i, loss) in outcome.epoch_losses.iter().enumerate() {
        println!("epoch_loss\t{}\t{loss:.6}", i + 1);
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let mut cfg = args.config.resolve()?;
    let dataset = Dataset::load(&args.data)?;
    let out_dir = out_root(&args.out_dir);
    cfg.train.sem_init = args.sem_init.clone();
    write_config_echo(&out_dir, &cfg)?;
    eprintln!(
        "training on {} images for {} epochs into {}",
        dataset.split_indices(vsdn::glyphforge::Split::Train).len(),
        cfg.train.epochs,
        out_dir.display()
    );
    let outcome = train_joint(&dataset, &cfg.model, &cfg.train, &out_dir)?;
    eprint!("{}", render_epochs(&outcome.epochs));
    println!("best_checkpoint\t{}", outcome.best_checkpoint.display());
    println!("last_checkpoint\t{}", outcome.last_checkpoint.display());
    println!("run_manifest\t{}", outcome.manifest_path.display());
    if let Some(v) = outcome.best_val_acc {
        println!("best_val_acc\t{v:.4}");
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let model = load_model(&args.checkpoint)?;
    let dataset = Dataset::load(&args.data)?;
    let vocab = match &args.train_vocab {
        Some(p) => Some(Vocabulary::load(p)?),
        None => None,
    };
    let digest = dataset_digest(&args.data)?;
    let report = evaluate_model(&model, &dataset, vocab.as_ref(), &args.topk, digest)?;
    eprint!("{}", report.render_text());
    print!("{}", report.to_tsv());
    if let Some(out) = &args.out {
        let out = out_root(out);
        std::fs::write(&out, report.to_tsv())
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", out.display()))?;
    }
    Ok(())
}

fn ablate(args: AblateArgs) -> Result<(), CliError> {
    let mut cfg = args.config.resolve()?;
    let suite = AblationSuite::parse(&args.suite)
        .map_err(|_| CliError::usage(format!("unknown suite {:?}", args.suite)))?;
    let dataset = Dataset::load(&args.data)?;
    let out_dir = out_root(&args.out_dir);
    cfg.train.sem_init = args.sem_init.clone();
    write_config_echo(&out_dir, &cfg)?;
    let outcome = run_ablation(suite, &dataset, &cfg.model, &cfg.train, &[1, 3, 5], &out_dir)?;
    print!("{}", outcome.render_text());
    eprintln!("written to {}", out_dir.join("ablation.tsv").display());
    Ok(())
}

fn export(args: ExportArgs) -> Result<(), CliError> {
    let model = load_model(&args.checkpoint)?;
    let img = read_pgm(&args.image)?;
    let out_dir = out_root(&args.out_dir);
    let export = export_attention(&model, &img.to_f64(), &out_dir)?;
    println!("steps\t{}", export.steps);
    println!("overlay\t{}", export.overlay_path.display());
    println!("csv\t{}", export.csv_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::BuildSim(a) => build_sim(a),
        Command::PretrainSem(a) => pretrain_sem(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::ExportAttention(a) => export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
