// Rough per-image training cost at candidate configurations.
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vsdn::netcore::{LossWeights, Model, ModelConfig, Params};

fn bench(name: &str, cfg: ModelConfig, label: &str) {
    let model = Model::new(cfg.clone(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let img = Array2::from_shape_fn((cfg.img_h, cfg.img_w), |_| rng.random_range(0.0..1.0));
    let w = LossWeights::default();
    let mut grads = Params::zeros(&cfg);
    // Warm up.
    for _ in 0..3 {
        let s = model.train_forward(&img, label, None, true).unwrap();
        model.train_backward(&s, &w, &mut grads);
    }
    let n = 40;
    let t0 = Instant::now();
    for _ in 0..n {
        let s = model.train_forward(&img, label, None, true).unwrap();
        model.train_backward(&s, &w, &mut grads);
    }
    let per = t0.elapsed().as_secs_f64() / n as f64;
    let t1 = Instant::now();
    for _ in 0..n {
        let _ = model.decode_sequence(&img, vsdn::netcore::DecodeMode::FreeRunning).unwrap();
    }
    let per_eval = t1.elapsed().as_secs_f64() / n as f64;
    println!("{name}: train {:.2} ms/img, eval {:.2} ms/img -> 15000 imgs/epoch = {:.0}s", per * 1e3, per_eval * 1e3, per * 15000.0);
}

fn bench_sem(name: &str, cfg: ModelConfig) {
    let model = Model::new(cfg.clone(), 1).unwrap();
    let mut grads = Params::zeros(&cfg);
    let n = 200;
    let t0 = Instant::now();
    for _ in 0..n {
        let s = model.sem_train_forward("streat", "street").unwrap();
        model.sem_train_backward(&s, &mut grads);
    }
    let per = t0.elapsed().as_secs_f64() / n as f64;
    println!("{name}: sem pretrain {:.3} ms/pair -> 20000 pairs/epoch = {:.1}s", per * 1e3, per * 20000.0);
}

fn main() {
    bench("desk 32x96 D96", ModelConfig::default(), "street");
    let mid = ModelConfig {
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
    };
    bench("mid 24x64 D64", mid, "street");
    let small = ModelConfig {
        img_h: 16,
        img_w: 64,
        t_max: 8,
        feat_dim: 48,
        sem_dim: 32,
        embed_dim: 24,
        attn_dim: 32,
        step_embed_dim: 16,
        conv_channels: vec![6, 12, 24],
        ctc_hidden: 24,
        ..ModelConfig::default()
    };
    bench("small 16x64 D48", small.clone(), "street");
    bench_sem("desk", ModelConfig::default());
    bench_sem("small", small);
}
