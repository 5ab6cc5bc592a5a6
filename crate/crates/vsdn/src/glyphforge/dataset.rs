//! Dataset synthesis, manifest management and on-disk layout.
//!
//! A dataset directory holds:
//!   header.txt    - generation parameters, enough for bit-exact regeneration
//!   manifest.tsv  - `id<TAB>label<TAB>split` per image
//!   vocab.txt     - the training vocabulary
//!   images/       - one 8-bit grayscale PGM per entry

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::seeds::derive_seed;
use super::{
    render_word, GlyphError, GlyphFont, Geometry, StyleRanges, Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub label: String,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn parse(s: &str) -> Result<Self, GlyphError> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(GlyphError::ManifestFormat(format!("unknown split {other:?}"))),
        }
    }
}

/// Everything recorded about a synthesized dataset.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub vocab: Vocabulary,
    pub seed: u64,
    pub samples_per_word: usize,
    pub geometry: Geometry,
    pub styles: StyleRanges,
    pub font_name: String,
}

/// Optional held-out test split mixing in- and out-of-vocabulary words.
#[derive(Debug, Clone)]
pub struct TestSpec {
    pub invoc_words: usize,
    pub outvoc_words: usize,
    pub samples_per_word: usize,
    /// Pool that out-of-vocabulary words are drawn from (minus the
    /// training vocabulary).
    pub base: Vocabulary,
}

/// Synthesize `samples_per_word` images per vocabulary word (plus an
/// optional test split) into `out_dir`. The directory is created fresh;
/// a partial failure leaves nothing behind.
pub fn synthesize_dataset(
    vocab: &Vocabulary,
    samples_per_word: usize,
    styles: &StyleRanges,
    geometry: Geometry,
    seed: u64,
    test: Option<&TestSpec>,
    font: &GlyphFont,
    out_dir: &Path,
) -> Result<DatasetManifest, GlyphError> {
    if samples_per_word == 0 {
        return Err(GlyphError::BadSampleCount);
    }
    if vocab.is_empty() {
        return Err(GlyphError::EmptyVocabulary);
    }
    if out_dir.exists() {
        return Err(GlyphError::OutputExists(out_dir.display().to_string()));
    }

    // Stage into a sibling temp dir, rename on success.
    let part = out_dir.with_extension("part");
    if part.exists() {
        fs::remove_dir_all(&part).map_err(|e| GlyphError::Io(part.display().to_string(), e))?;
    }
    let result = build_into(vocab, samples_per_word, styles, geometry, seed, test, font, &part);
    match result {
        Ok(manifest) => {
            fs::rename(&part, out_dir)
                .map_err(|e| GlyphError::Io(out_dir.display().to_string(), e))?;
            Ok(manifest)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&part);
            Err(e)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_into(
    vocab: &Vocabulary,
    samples_per_word: usize,
    styles: &StyleRanges,
    geometry: Geometry,
    seed: u64,
    test: Option<&TestSpec>,
    font: &GlyphFont,
    dir: &Path,
) -> Result<DatasetManifest, GlyphError> {
    let img_dir = dir.join("images");
    fs::create_dir_all(&img_dir).map_err(|e| GlyphError::Io(dir.display().to_string(), e))?;

    let mut entries = Vec::new();
    let mut render_entry = |word: &str,
                            id: String,
                            split: Split,
                            stream: (u64, u64, u64)|
     -> Result<(), GlyphError> {
        let style_seed = derive_seed(seed, &[stream.0, stream.1, stream.2, 0]);
        let render_seed = derive_seed(seed, &[stream.0, stream.1, stream.2, 1]);
        let mut style_rng = ChaCha8Rng::seed_from_u64(style_seed);
        let style = styles.sample(&mut style_rng);
        let img = render_word(word, font, geometry, &style, render_seed)?;
        write_pgm(&img_dir.join(format!("{id}.pgm")), &img.pixels)?;
        entries.push(ManifestEntry { id, label: word.to_string(), split });
        Ok(())
    };

    for (wi, word) in vocab.words().iter().enumerate() {
        for si in 0..samples_per_word {
            let id = format!("tr_{wi:05}_{si:03}");
            render_entry(word, id, Split::Train, (0, wi as u64, si as u64))?;
        }
    }

    if let Some(spec) = test {
        let (invoc, outvoc) = pick_test_words(vocab, spec, seed)?;
        for (wi, word) in invoc.iter().chain(outvoc.iter()).enumerate() {
            for si in 0..spec.samples_per_word {
                let id = format!("te_{wi:05}_{si:03}");
                render_entry(word, id, Split::Test, (1, wi as u64, si as u64))?;
            }
        }
    }

    let manifest = DatasetManifest {
        entries,
        vocab: vocab.clone(),
        seed,
        samples_per_word,
        geometry,
        styles: styles.clone(),
        font_name: font.name.clone(),
    };
    write_manifest_files(&manifest, dir, test)?;
    Ok(manifest)
}

fn pick_test_words(
    vocab: &Vocabulary,
    spec: &TestSpec,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>), GlyphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2]));
    let mut invoc: Vec<String> = vocab.words().to_vec();
    invoc.shuffle(&mut rng);
    invoc.truncate(spec.invoc_words);
    let mut pool: Vec<String> = spec
        .base
        .words()
        .iter()
        .filter(|w| !vocab.contains(w))
        .cloned()
        .collect();
    if pool.len() < spec.outvoc_words {
        return Err(GlyphError::ManifestFormat(format!(
            "base pool has only {} out-of-vocabulary words, need {}",
            pool.len(),
            spec.outvoc_words
        )));
    }
    pool.shuffle(&mut rng);
    pool.truncate(spec.outvoc_words);
    Ok((invoc, pool))
}

fn write_manifest_files(
    manifest: &DatasetManifest,
    dir: &Path,
    test: Option<&TestSpec>,
) -> Result<(), GlyphError> {
    let mut tsv = String::new();
    for e in &manifest.entries {
        writeln!(tsv, "{}\t{}\t{}", e.id, e.label, e.split.as_str()).unwrap();
    }
    fs::write(dir.join("manifest.tsv"), tsv)
        .map_err(|e| GlyphError::Io("manifest.tsv".into(), e))?;

    manifest.vocab.save(&dir.join("vocab.txt"))?;

    let s = &manifest.styles;
    let mut hdr = String::new();
    writeln!(hdr, "seed = {}", manifest.seed).unwrap();
    writeln!(hdr, "samples_per_word = {}", manifest.samples_per_word).unwrap();
    writeln!(hdr, "height = {}", manifest.geometry.height).unwrap();
    writeln!(hdr, "width = {}", manifest.geometry.width).unwrap();
    writeln!(hdr, "font = {}", manifest.font_name).unwrap();
    writeln!(hdr, "scale = {} {}", s.scale.0, s.scale.1).unwrap();
    writeln!(hdr, "jitter_px = {} {}", s.jitter_px.0, s.jitter_px.1).unwrap();
    writeln!(hdr, "vjitter_px = {} {}", s.vjitter_px.0, s.vjitter_px.1).unwrap();
    writeln!(hdr, "noise_sigma = {} {}", s.noise_sigma.0, s.noise_sigma.1).unwrap();
    writeln!(hdr, "blur_radius = {} {}", s.blur_radius.0, s.blur_radius.1).unwrap();
    writeln!(hdr, "occlusion_prob = {}", s.occlusion_prob).unwrap();
    writeln!(hdr, "contrast = {} {}", s.contrast.0, s.contrast.1).unwrap();
    if let Some(t) = test {
        writeln!(hdr, "test_invoc_words = {}", t.invoc_words).unwrap();
        writeln!(hdr, "test_outvoc_words = {}", t.outvoc_words).unwrap();
        writeln!(hdr, "test_samples_per_word = {}", t.samples_per_word).unwrap();
    }
    fs::write(dir.join("header.txt"), hdr).map_err(|e| GlyphError::Io("header.txt".into(), e))
}

/// An in-memory dataset: images stored as 8-bit grayscale.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub entries: Vec<ManifestEntry>,
    pub images: Vec<GrayImage>,
    pub vocab: Vocabulary,
    pub geometry: Geometry,
    pub dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn to_f64(&self) -> Array2<f64> {
        Array2::from_shape_vec(
            (self.height, self.width),
            self.data.iter().map(|&b| b as f64 / 255.0).collect(),
        )
        .expect("image shape")
    }

    pub fn from_f64(pixels: &Array2<f64>) -> Self {
        let (h, w) = pixels.dim();
        GrayImage {
            height: h,
            width: w,
            data: pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect(),
        }
    }
}

impl Dataset {
    /// Load a dataset directory produced by [`synthesize_dataset`].
    pub fn load(dir: &Path) -> Result<Self, GlyphError> {
        let tsv = fs::read_to_string(dir.join("manifest.tsv"))
            .map_err(|e| GlyphError::Io(dir.join("manifest.tsv").display().to_string(), e))?;
        let mut entries = Vec::new();
        for (ln, line) in tsv.lines().enumerate() {
            let mut parts = line.split('\t');
            let (id, label, split) = (parts.next(), parts.next(), parts.next());
            match (id, label, split) {
                (Some(id), Some(label), Some(split)) => entries.push(ManifestEntry {
                    id: id.to_string(),
                    label: label.to_string(),
                    split: Split::parse(split)?,
                }),
                _ => {
                    return Err(GlyphError::ManifestFormat(format!(
                        "manifest.tsv line {}: expected 3 tab-separated fields",
                        ln + 1
                    )))
                }
            }
        }
        let vocab = Vocabulary::load(&dir.join("vocab.txt"))?;
        let header = fs::read_to_string(dir.join("header.txt"))
            .map_err(|e| GlyphError::Io("header.txt".into(), e))?;
        let kv: BTreeMap<&str, &str> = header
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim(), v.trim()))
            .collect();
        let geometry = Geometry {
            height: kv
                .get("height")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| GlyphError::ManifestFormat("header missing height".into()))?,
            width: kv
                .get("width")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| GlyphError::ManifestFormat("header missing width".into()))?,
        };
        let mut images = Vec::with_capacity(entries.len());
        for e in &entries {
            let img = read_pgm(&dir.join("images").join(format!("{}.pgm", e.id)))?;
            if img.height != geometry.height || img.width != geometry.width {
                return Err(GlyphError::ManifestFormat(format!(
                    "image {} is {}x{}, dataset is {}x{}",
                    e.id, img.height, img.width, geometry.height, geometry.width
                )));
            }
            images.push(img);
        }
        Ok(Dataset { entries, images, vocab, geometry, dir: dir.to_path_buf() })
    }

    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.entries[i].split == split).collect()
    }
}

/// SHA-256 over header, manifest and all image bytes in manifest order.
pub fn dataset_digest(dir: &Path) -> Result<String, GlyphError> {
    let mut hasher = Sha256::new();
    for name in ["header.txt", "manifest.tsv", "vocab.txt"] {
        let bytes = fs::read(dir.join(name)).map_err(|e| GlyphError::Io(name.into(), e))?;
        hasher.update(&bytes);
    }
    let tsv = fs::read_to_string(dir.join("manifest.tsv"))
        .map_err(|e| GlyphError::Io("manifest.tsv".into(), e))?;
    for line in tsv.lines() {
        if let Some((id, _)) = line.split_once('\t') {
            let p = dir.join("images").join(format!("{id}.pgm"));
            let bytes = fs::read(&p).map_err(|e| GlyphError::Io(p.display().to_string(), e))?;
            hasher.update(&bytes);
        }
    }
    Ok(hex_digest(&hasher.finalize()))
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write an 8-bit binary PGM (P5).
pub fn write_pgm(path: &Path, pixels: &Array2<f64>) -> Result<(), GlyphError> {
    let (h, w) = pixels.dim();
    let mut f = fs::File::create(path)
        .map_err(|e| GlyphError::Io(path.display().to_string(), e))?;
    let io = |e| GlyphError::Io(path.display().to_string(), e);
    write!(f, "P5\n{w} {h}\n255\n").map_err(io)?;
    let bytes: Vec<u8> =
        pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    f.write_all(&bytes).map_err(io)
}

/// Read an 8-bit binary PGM (P5).
pub fn read_pgm(path: &Path) -> Result<GrayImage, GlyphError> {
    let bytes = fs::read(path).map_err(|e| GlyphError::Io(path.display().to_string(), e))?;
    let bad = |m: &str| GlyphError::PgmFormat(path.display().to_string(), m.into());
    // Header: magic, width, height, maxval as whitespace-separated tokens.
    let mut pos = 0usize;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-utf8"))?);
    }
    if tokens[0] != "P5" {
        return Err(bad("not a P5 PGM"));
    }
    let w: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    if tokens[3] != "255" {
        return Err(bad("maxval must be 255"));
    }
    pos += 1; // single whitespace after maxval
    if bytes.len() < pos + w * h {
        return Err(bad("truncated pixel data"));
    }
    Ok(GrayImage { height: h, width: w, data: bytes[pos..pos + w * h].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glyphforge::DistortionParams;

    fn small_vocab() -> Vocabulary {
        Vocabulary::from_words(["cat", "dog", "bird"], "t").unwrap()
    }

    #[test]
    fn pgm_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let font = GlyphFont::builtin();
        let img = render_word(
            "ab",
            &font,
            Geometry::default(),
            &DistortionParams { noise_sigma: 0.2, ..DistortionParams::none() },
            3,
        )
        .unwrap();
        let p = dir.path().join("x.pgm");
        write_pgm(&p, &img.pixels).unwrap();
        let back = read_pgm(&p).unwrap();
        assert_eq!(back.height, 32);
        assert_eq!(back.width, 96);
        let expected: Vec<u8> =
            img.pixels.iter().map(|&v| (v * 255.0).round() as u8).collect();
        assert_eq!(back.data, expected);
    }

    #[test]
    fn synthesize_counts_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ds");
        let vocab = small_vocab();
        let m = synthesize_dataset(
            &vocab,
            4,
            &StyleRanges::default(),
            Geometry::default(),
            11,
            None,
            &GlyphFont::builtin(),
            &out,
        )
        .unwrap();
        assert_eq!(m.entries.len(), 12);
        // Per-word histogram is constant.
        let mut counts = std::collections::HashMap::new();
        for e in &m.entries {
            *counts.entry(e.label.clone()).or_insert(0usize) += 1;
        }
        assert!(counts.values().all(|&c| c == 4));

        let ds = Dataset::load(&out).unwrap();
        assert_eq!(ds.entries.len(), 12);
        assert_eq!(ds.vocab.words(), vocab.words());
        for (e, m_e) in ds.entries.iter().zip(&m.entries) {
            assert_eq!(e, m_e);
        }
    }

    #[test]
    fn regeneration_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = small_vocab();
        let spec = TestSpec {
            invoc_words: 2,
            outvoc_words: 2,
            samples_per_word: 1,
            base: Vocabulary::from_words(["cat", "dog", "bird", "fish", "wolf"], "b").unwrap(),
        };
        let mk = |out: &Path| {
            synthesize_dataset(
                &vocab,
                3,
                &StyleRanges::default(),
                Geometry::default(),
                5,
                Some(&spec),
                &GlyphFont::builtin(),
                out,
            )
            .unwrap()
        };
        mk(&dir.path().join("a"));
        mk(&dir.path().join("b"));
        let da = dataset_digest(&dir.path().join("a")).unwrap();
        let db = dataset_digest(&dir.path().join("b")).unwrap();
        assert_eq!(da, db);
    }

    #[test]
    fn refuses_existing_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ds");
        fs::create_dir(&out).unwrap();
        let err = synthesize_dataset(
            &small_vocab(),
            1,
            &StyleRanges::default(),
            Geometry::default(),
            0,
            None,
            &GlyphFont::builtin(),
            &out,
        );
        assert!(matches!(err, Err(GlyphError::OutputExists(_))));
    }

    #[test]
    fn test_split_mixes_in_and_out_of_vocab() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ds");
        let vocab = small_vocab();
        let base = Vocabulary::from_words(
            ["cat", "dog", "bird", "fish", "wolf", "bear", "lion"],
            "b",
        )
        .unwrap();
        let spec =
            TestSpec { invoc_words: 2, outvoc_words: 3, samples_per_word: 2, base };
        let m = synthesize_dataset(
            &vocab,
            1,
            &StyleRanges::default(),
            Geometry::default(),
            1,
            Some(&spec),
            &GlyphFont::builtin(),
            &out,
        )
        .unwrap();
        let test_entries: Vec<_> =
            m.entries.iter().filter(|e| e.split == Split::Test).collect();
        assert_eq!(test_entries.len(), 10);
        let invoc = test_entries.iter().filter(|e| vocab.contains(&e.label)).count();
        assert_eq!(invoc, 4);
    }
}
