pub mod fit;
pub mod run;
pub mod simulate;

use std::path::{Path, PathBuf};

use sivsim::rng::SplitMix64;
use sivsim::Trace;

use crate::config::{sidecar_json, RunConfig};
use crate::AppError;

/// Inject Gaussian noise when configured; default runs are noiseless.
pub fn apply_noise(trace: &mut Trace, config: &RunConfig) -> Result<(), AppError> {
    let sigma = config.get_f64("noise_sigma")?;
    if sigma <= 0.0 {
        return Ok(());
    }
    let seed = config.get_f64("seed")? as u64;
    let mut rng = SplitMix64::new(seed);
    for y in &mut trace.y {
        *y += sigma * rng.gaussian();
    }
    trace.set_meta("noise_sigma", sigma);
    trace.set_meta("noise_seed", seed);
    Ok(())
}

/// Write the trace (CSV or JSON per the `format` key) plus the sidecar.
pub fn emit(
    command: &str,
    trace: &Trace,
    config: &RunConfig,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let out: PathBuf = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("sivsim_{command}.csv")));
    let format = config.get_str("format");
    let body = match format {
        "csv" => trace.to_csv(),
        "json" => trace_json(trace),
        other => return Err(AppError::Config(format!("unknown format `{other}`"))),
    };
    std::fs::write(&out, body)
        .map_err(|e| AppError::Config(format!("cannot write {}: {e}", out.display())))?;
    let sidecar = out.with_extension("json.sidecar");
    // Keep the conventional name `<stem>.json` unless the data itself is
    // JSON, in which case the sidecar gets a distinct suffix.
    let sidecar = if format == "json" {
        sidecar
    } else {
        out.with_extension("json")
    };
    std::fs::write(&sidecar, sidecar_json(command, config))
        .map_err(|e| AppError::Config(format!("cannot write {}: {e}", sidecar.display())))?;
    Ok(())
}

fn trace_json(trace: &Trace) -> String {
    let mut meta = serde_json::Map::new();
    for (k, v) in &trace.meta {
        meta.insert(k.clone(), serde_json::Value::String(v.clone()));
    }
    let doc = serde_json::json!({
        "x_label": trace.x_label,
        "x_unit": trace.x_unit,
        "y_label": trace.y_label,
        "y_unit": trace.y_unit,
        "meta": meta,
        "x": trace.x,
        "y": trace.y,
        "sigma": trace.sigma,
    });
    serde_json::to_string_pretty(&doc).expect("trace serialization")
}
