// Pilot for the vocabulary-reliance experiment: trains model variants on
// a 300-word x 50-image set and reports per-split accuracies.
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vsdn::evalbench::evaluate_model;
use vsdn::glyphforge::{
    dataset_digest, synthesize_dataset, Dataset, Geometry, GlyphFont, StyleRanges, TestSpec,
    Vocabulary,
};
use vsdn::lexnoise::{glyph_proxy_similarity, make_correction_corpus, CorruptionConfig};
use vsdn::netcore::checkpoint::load_checkpoint;
use vsdn::netcore::{Model, ModelConfig, QueryMode};
use vsdn::trainkit::{pretrain_semantic, train_joint, TrainConfig};

fn mid_config() -> ModelConfig {
    ModelConfig {
        img_h: 32,
        img_w: 64,
        t_max: 8,
        feat_dim: 64,
        sem_dim: 48,
        embed_dim: 32,
        attn_dim: 48,
        step_embed_dim: 16,
        conv_channels: vec![8, 16, 24, 32],
        ctc_hidden: 32,
        ..ModelConfig::default()
    }
}

fn base_vocab(n: usize, seed: u64) -> Vocabulary {
    let all = Vocabulary::bundled();
    let all = all.filter_decodable(8).unwrap();
    let mut words: Vec<String> = all
        .words()
        .iter()
        .filter(|w| w.chars().count() >= 3)
        .cloned()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    words.shuffle(&mut rng);
    words.truncate(n);
    Vocabulary::from_words(words.iter(), "crit7-base").unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1);
    let epochs: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(5);
    let spw: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(50);
    let which: String = args.get(4).cloned().unwrap_or_else(|| "all".into());
    let root = Path::new("/tmp/crit7_pilot");
    let _ = std::fs::remove_dir_all(root);
    std::fs::create_dir_all(root).unwrap();

    let base = base_vocab(3000, 100 + seed);
    let train_vocab = vsdn::glyphforge::build_vocab_subset(&base, 0.1, seed).unwrap();
    eprintln!("train vocab: {} words", train_vocab.len());

    let geometry = Geometry { height: 32, width: 64 };
    let spec = TestSpec {
        invoc_words: 150,
        outvoc_words: 150,
        samples_per_word: 3,
        base: base.clone(),
    };
    let ds_dir = root.join("data");
    let t0 = std::time::Instant::now();
    synthesize_dataset(
        &train_vocab,
        spw,
        &StyleRanges::default(),
        geometry,
        seed,
        Some(&spec),
        &GlyphFont::builtin(),
        &ds_dir,
    )
    .unwrap();
    let dataset = Dataset::load(&ds_dir).unwrap();
    eprintln!("dataset: {} entries in {:.1}s", dataset.entries.len(), t0.elapsed().as_secs_f64());

    // Pretrained semantic module on the full base vocabulary.
    let model_cfg = mid_config();
    let sem_path = root.join("sem.ckpt");
    if which == "all" || which == "vsdn_pre" {
        let sim = glyph_proxy_similarity(&GlyphFont::builtin(), 3.0).unwrap();
        let pairs = make_correction_corpus(
            &base,
            10,
            &sim,
            &CorruptionConfig { seed, ..Default::default() },
        )
        .unwrap();
        let t0 = std::time::Instant::now();
        let cfg = TrainConfig { epochs: 6, batch_size: 64, seed, ..Default::default() };
        let out = pretrain_semantic(&pairs, &model_cfg, &cfg, &sem_path).unwrap();
        eprintln!(
            "pretrain: losses {:?} in {:.0}s",
            out.epoch_losses
                .iter()
                .map(|l| format!("{l:.3}"))
                .collect::<Vec<_>>(),
            t0.elapsed().as_secs_f64()
        );
    }

    let variants: Vec<(&str, bool, QueryMode, bool)> = vec![
        // (name, coupled, query, use_sem_init)
        ("aster", true, QueryMode::PreviousVisual, false),
        ("aster_star", false, QueryMode::PreviousVisual, false),
        ("vsdn", false, QueryMode::Semantic, false),
        ("vsdn_pre", false, QueryMode::Semantic, true),
    ];

    for (name, coupled, query, pre) in variants {
        if which != "all" && which != name {
            continue;
        }
        let mcfg = ModelConfig { coupled_baseline: coupled, query_mode: query, ..model_cfg.clone() };
        let lr: f64 = std::env::var("PILOT_LR").ok().and_then(|v| v.parse().ok()).unwrap_or(1e-3);
        let batch: usize = std::env::var("PILOT_BATCH").ok().and_then(|v| v.parse().ok()).unwrap_or(64);
        let flat = std::env::var("PILOT_FLAT").is_ok();
        let tcfg = TrainConfig {
            epochs,
            batch_size: batch,
            seed,
            optimizer: vsdn::trainkit::OptimizerKind::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 },
            lr_schedule: flat.then(std::collections::BTreeMap::new),
            sem_init: pre.then(|| sem_path.clone()),
            freeze_semantic: pre && std::env::var("PILOT_FREEZE").is_ok(),
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        let out = train_joint(&dataset, &mcfg, &tcfg, &root.join(name)).unwrap();
        let (cfg2, params, _) = load_checkpoint(&out.best_checkpoint).unwrap();
        let model = Model::from_parts(cfg2, params).unwrap();
        let digest = dataset_digest(&ds_dir).unwrap();
        let report = evaluate_model(&model, &dataset, Some(&train_vocab), &[1, 5], digest).unwrap();
        let iv = report.invoc.unwrap();
        let ov = report.outvoc.unwrap();
        println!(
            "{name:<12} invoc {:.1}% outvoc {:.1}% total {:.1}% ctc {:.1}% vd {:.1}% sd1 {:.1}% sd5 {:.1}%  ({:.0}s; val curve {})",
            100.0 * iv.accuracy(),
            100.0 * ov.accuracy(),
            100.0 * report.total.accuracy(),
            100.0 * report.ctc.accuracy(),
            100.0 * report.visual.accuracy(),
            100.0 * report.semantic_topk[0].1.accuracy(),
            100.0 * report.semantic_topk[1].1.accuracy(),
            t0.elapsed().as_secs_f64(),
            out.epochs
                .iter()
                .map(|r| r.val_word_acc.map_or("-".into(), |v| format!("{:.0}%", 100.0 * v)))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
}
