//! Checkpoint container: text header (config echo, run metadata, array
//! directory) followed by raw little-endian float32 arrays.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write as _};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::params::{ModelConfig, Params, QueryMode};
use super::NetError;

const MAGIC: &str = "vsdn-ckpt v1";

/// Name prefix of the semantic module's parameter groups (the part the
/// word-correction pre-training produces).
pub const SEMANTIC_PREFIX: &str = "sem.";

fn config_line(cfg: &ModelConfig) -> String {
    let channels: Vec<String> = cfg.conv_channels.iter().map(|c| c.to_string()).collect();
    format!(
        "config img_h={} img_w={} t_max={} feat_dim={} sem_dim={} embed_dim={} attn_dim={} \
         step_embed_dim={} conv_channels={} ctc_hidden={} coupled_baseline={} query_mode={}",
        cfg.img_h,
        cfg.img_w,
        cfg.t_max,
        cfg.feat_dim,
        cfg.sem_dim,
        cfg.embed_dim,
        cfg.attn_dim,
        cfg.step_embed_dim,
        channels.join(","),
        cfg.ctc_hidden,
        cfg.coupled_baseline,
        cfg.query_mode.as_str()
    )
}

fn parse_config_line(line: &str) -> Result<ModelConfig, NetError> {
    let mut kv = BTreeMap::new();
    for tok in line.split_whitespace().skip(1) {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| NetError::Checkpoint(format!("bad config token {tok:?}")))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<String, NetError> {
        kv.get(k).cloned().ok_or_else(|| NetError::Checkpoint(format!("config missing {k}")))
    };
    let num = |k: &str| -> Result<usize, NetError> {
        get(k)?.parse().map_err(|_| NetError::Checkpoint(format!("bad config value for {k}")))
    };
    Ok(ModelConfig {
        img_h: num("img_h")?,
        img_w: num("img_w")?,
        t_max: num("t_max")?,
        feat_dim: num("feat_dim")?,
        sem_dim: num("sem_dim")?,
        embed_dim: num("embed_dim")?,
        attn_dim: num("attn_dim")?,
        step_embed_dim: num("step_embed_dim")?,
        conv_channels: get("conv_channels")?
            .split(',')
            .map(|c| c.parse().map_err(|_| NetError::Checkpoint("bad conv_channels".into())))
            .collect::<Result<_, _>>()?,
        ctc_hidden: num("ctc_hidden")?,
        coupled_baseline: get("coupled_baseline")? == "true",
        query_mode: QueryMode::parse(&get("query_mode")?)?,
    })
}

/// Write a checkpoint. `meta` lines (e.g. seed, epoch, RNG position) are
/// echoed verbatim; `prefix` restricts the saved arrays (the semantic
/// subset uses [`SEMANTIC_PREFIX`]).
pub fn save_checkpoint(
    path: &Path,
    cfg: &ModelConfig,
    params: &Params,
    meta: &[(String, String)],
    prefix: Option<&str>,
) -> Result<(), NetError> {
    let fields = params.fields();
    let mut header = String::new();
    writeln!(header, "{MAGIC}").unwrap();
    writeln!(header, "{}", config_line(cfg)).unwrap();
    for (k, v) in meta {
        writeln!(header, "meta {k}={v}").unwrap();
    }
    let mut offset = 0usize;
    let mut blobs: Vec<&[f64]> = Vec::new();
    for (name, view) in &fields {
        if let Some(p) = prefix {
            if !name.starts_with(p) {
                continue;
            }
        }
        let data = view.as_slice();
        let shape = view.shape();
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        let bytes = data.len() * 4;
        writeln!(header, "array {name} f32 {} {offset} {bytes}", dims.join("x")).unwrap();
        offset += bytes;
        blobs.push(data);
    }
    writeln!(header, "data {offset}").unwrap();

    let io = |e: std::io::Error| NetError::Io(path.display().to_string(), e);
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(header.as_bytes()).map_err(io)?;
    let mut buf = Vec::with_capacity(offset);
    for blob in blobs {
        for &v in blob {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    f.write_all(&buf).map_err(io)
}

struct RawCheckpoint {
    cfg: ModelConfig,
    meta: Vec<(String, String)>,
    arrays: BTreeMap<String, (Vec<usize>, Vec<f64>)>,
}

fn read_raw(path: &Path) -> Result<RawCheckpoint, NetError> {
    let io = |e: std::io::Error| NetError::Io(path.display().to_string(), e);
    let mut bytes = Vec::new();
    std::fs::File::open(path).map_err(io)?.read_to_end(&mut bytes).map_err(io)?;

    // The header is newline-delimited ASCII up to and including the
    // `data N` line.
    let mut line_start = 0usize;
    let mut cfg = None;
    let mut meta = Vec::new();
    let mut dir: Vec<(String, Vec<usize>, usize, usize)> = Vec::new();
    let mut data_start = None;
    let mut first = true;
    while line_start < bytes.len() {
        let rel_end = bytes[line_start..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| NetError::Checkpoint("truncated header".into()))?;
        let line_end = line_start + rel_end;
        let line = std::str::from_utf8(&bytes[line_start..line_end])
            .map_err(|_| NetError::Checkpoint("non-utf8 header".into()))?;
        line_start = line_end + 1;
        if first {
            if line != MAGIC {
                return Err(NetError::Checkpoint(format!("bad magic {line:?}")));
            }
            first = false;
            continue;
        }
        if line.starts_with("config ") {
            cfg = Some(parse_config_line(line)?);
        } else if let Some(rest) = line.strip_prefix("meta ") {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.to_string(), v.to_string()));
            }
        } else if let Some(rest) = line.strip_prefix("array ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 5 || parts[1] != "f32" {
                return Err(NetError::Checkpoint(format!("bad array line {line:?}")));
            }
            let shape: Vec<usize> = parts[2]
                .split('x')
                .map(|d| d.parse().map_err(|_| NetError::Checkpoint("bad shape".into())))
                .collect::<Result<_, _>>()?;
            let off: usize =
                parts[3].parse().map_err(|_| NetError::Checkpoint("bad offset".into()))?;
            let len: usize =
                parts[4].parse().map_err(|_| NetError::Checkpoint("bad length".into()))?;
            dir.push((parts[0].to_string(), shape, off, len));
        } else if let Some(rest) = line.strip_prefix("data ") {
            let total: usize =
                rest.trim().parse().map_err(|_| NetError::Checkpoint("bad data size".into()))?;
            data_start = Some((line_start, total));
            break;
        } else {
            return Err(NetError::Checkpoint(format!("unexpected header line {line:?}")));
        }
    }
    let (data_start, total) =
        data_start.ok_or_else(|| NetError::Checkpoint("missing data section".into()))?;
    if bytes.len() < data_start + total {
        return Err(NetError::Checkpoint(format!(
            "payload truncated: header promises {total} bytes, file has {}",
            bytes.len() - data_start
        )));
    }
    let cfg = cfg.ok_or_else(|| NetError::Checkpoint("missing config line".into()))?;

    let mut arrays = BTreeMap::new();
    for (name, shape, off, len) in dir {
        let n = shape.iter().product::<usize>();
        if len != n * 4 || off + len > total {
            return Err(NetError::Checkpoint(format!("array {name} directory inconsistent")));
        }
        let raw = &bytes[data_start + off..data_start + off + len];
        let vals: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        arrays.insert(name, (shape, vals));
    }
    Ok(RawCheckpoint { cfg, meta, arrays })
}

/// Load a full checkpoint into fresh parameters.
pub fn load_checkpoint(
    path: &Path,
) -> Result<(ModelConfig, Params, Vec<(String, String)>), NetError> {
    let raw = read_raw(path)?;
    raw.cfg.validate()?;
    let mut params = Params::zeros(&raw.cfg);
    let n = apply(&mut params, &raw, None, true)?;
    debug_assert!(n > 0);
    Ok((raw.cfg, params, raw.meta))
}

/// Copy arrays whose names start with `prefix` into existing parameters.
/// The file is fully parsed and validated before any mutation. Returns
/// the number of arrays loaded.
pub fn load_into(
    params: &mut Params,
    cfg: &ModelConfig,
    path: &Path,
    prefix: &str,
) -> Result<usize, NetError> {
    let raw = read_raw(path)?;
    // Shape compatibility of the loaded subset is the only requirement;
    // the donor checkpoint may come from a different variant.
    let _ = cfg;
    apply(params, &raw, Some(prefix), false)
}

fn apply(
    params: &mut Params,
    raw: &RawCheckpoint,
    prefix: Option<&str>,
    require_all: bool,
) -> Result<usize, NetError> {
    // Validate everything first: no partial mutation on error.
    {
        let fields = params.fields();
        for (name, view) in &fields {
            let wanted = prefix.map(|p| name.starts_with(p)).unwrap_or(true);
            match raw.arrays.get(name.as_str()) {
                Some((shape, _)) => {
                    if wanted && *shape != view.shape() {
                        return Err(NetError::Checkpoint(format!(
                            "array {name}: shape {shape:?} != expected {:?}",
                            view.shape()
                        )));
                    }
                }
                None if wanted && require_all => {
                    return Err(NetError::Checkpoint(format!("missing array {name}")));
                }
                None => {}
            }
        }
    }
    let mut loaded = 0usize;
    for (name, mut view) in params.fields_mut() {
        if let Some(p) = prefix {
            if !name.starts_with(p) {
                continue;
            }
        }
        if let Some((_, vals)) = raw.arrays.get(name.as_str()) {
            view.as_slice_mut().copy_from_slice(vals);
            loaded += 1;
        }
    }
    Ok(loaded)
}

/// SHA-256 of the checkpoint file.
pub fn checkpoint_digest(path: &Path) -> Result<String, NetError> {
    let bytes =
        std::fs::read(path).map_err(|e| NetError::Io(path.display().to_string(), e))?;
    Ok(crate::glyphforge::hex_digest(&Sha256::digest(&bytes)))
}

/// SHA-256 of the canonical configuration echo.
pub fn config_digest(cfg: &ModelConfig) -> String {
    crate::glyphforge::hex_digest(&Sha256::digest(config_line(cfg).as_bytes()))
}
