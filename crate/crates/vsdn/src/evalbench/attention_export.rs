//! Attention-map export: one heat strip per decode step plus an overlay.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::glyphforge::write_pgm;
use crate::netcore::{DecodeMode, Model};
use super::EvalError;

const STRIP_HEIGHT: usize = 12;

#[derive(Debug, Clone)]
pub struct AttentionExport {
    pub steps: usize,
    pub strip_paths: Vec<PathBuf>,
    pub overlay_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Render a strip: attention weights upsampled across the image width,
/// scaled by the row maximum. Intensity is monotone in the weight.
fn render_strip(alpha: &[f64], width: usize) -> Array2<f64> {
    let t = alpha.len();
    let max = alpha.iter().cloned().fold(f64::MIN, f64::max).max(1e-12);
    let mut strip = Array2::<f64>::zeros((STRIP_HEIGHT, width));
    for x in 0..width {
        let i = (x * t / width).min(t - 1);
        let v = alpha[i] / max;
        for y in 0..STRIP_HEIGHT {
            strip[(y, x)] = v;
        }
    }
    strip
}

/// Free-run the model on an image and write per-step strips, a stacked
/// overlay and the raw weights as CSV.
pub fn export_attention(
    model: &Model,
    image: &Array2<f64>,
    out_dir: &Path,
) -> Result<AttentionExport, EvalError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| EvalError::Io(out_dir.display().to_string(), e))?;
    let trace = model.decode_sequence(image, DecodeMode::FreeRunning)?;
    let width = image.ncols();

    let mut strip_paths = Vec::new();
    let mut csv = String::new();
    let mut overlay =
        Array2::<f64>::zeros((image.nrows() + trace.steps.len() * STRIP_HEIGHT, width));
    overlay.slice_mut(ndarray::s![..image.nrows(), ..]).assign(image);

    for (t, step) in trace.steps.iter().enumerate() {
        let alpha = step.alpha.as_slice().unwrap();
        let strip = render_strip(alpha, width);
        let path = out_dir.join(format!("step_{t:02}.pgm"));
        write_pgm(&path, &strip)?;
        strip_paths.push(path);
        let y0 = image.nrows() + t * STRIP_HEIGHT;
        overlay.slice_mut(ndarray::s![y0..y0 + STRIP_HEIGHT, ..]).assign(&strip);
        let row: Vec<String> = alpha.iter().map(|v| format!("{v}")).collect();
        writeln!(csv, "{}", row.join(",")).unwrap();
    }

    let overlay_path = out_dir.join("overlay.pgm");
    write_pgm(&overlay_path, &overlay)?;
    let csv_path = out_dir.join("attention.csv");
    std::fs::write(&csv_path, csv).map_err(|e| EvalError::Io("attention.csv".into(), e))?;

    Ok(AttentionExport {
        steps: trace.steps.len(),
        strip_paths,
        overlay_path,
        csv_path,
    })
}
