use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use trajeval_core::generators::GeneratorSpec;
use trajeval_core::metrics::ConstraintLayers;
use trajeval_core::mobility::{ingest_csv, read_metadata, Crs, CsvSchema, Dataset, IngestOptions};

use crate::args::GeneratorArgs;

/// `data.csv` -> `data.meta.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Reads a dataset CSV. A metadata sidecar, when present, fixes the name, CRS and
/// vocabulary; otherwise `like` (the real dataset) supplies the CRS and the
/// initial vocabulary so that both sides share projection and category ids.
pub fn dataset(path: &Path, like: Option<&Dataset>) -> Result<Dataset> {
    let meta = sidecar(path);
    let mut opts = IngestOptions {
        name: Some(stem(path)),
        ..IngestOptions::default()
    };
    if meta.exists() {
        let m = read_metadata(&meta)?;
        opts.crs = Some(m.crs);
        opts.vocabulary = Some(m.vocabulary);
        opts.name = Some(m.name);
    } else if let Some(real) = like {
        opts.crs = Some(real.meta().crs);
        opts.vocabulary = Some(real.vocabulary().clone());
    }
    ingest_csv(path, &CsvSchema::default(), &opts)
        .with_context(|| format!("loading {}", path.display()))
}

pub fn layers(dir: &Path, crs: &Crs) -> Result<ConstraintLayers> {
    ConstraintLayers::load_dir(dir, crs)
        .with_context(|| format!("loading layers from {}", dir.display()))
}

/// Turns `kind:key=value,key=value` into a generator spec.
pub fn parse_model(s: &str) -> Result<GeneratorSpec> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut toml = format!("kind = {:?}\n", kind.trim());
    for kv in rest.split(',').filter(|kv| !kv.trim().is_empty()) {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("generator parameter `{kv}` is not key=value");
        };
        let v = v.trim();
        if v.parse::<f64>().is_err() {
            bail!("generator parameter `{k}` needs a number, got `{v}`");
        }
        // integers become floats so every numeric field accepts them
        let v = if v.contains('.') || v.contains('e') {
            v.to_string()
        } else {
            format!("{v}.0")
        };
        toml.push_str(&format!("{} = {v}\n", k.trim()));
    }
    Ok(GeneratorSpec::from_toml_str(&toml)?)
}

pub fn generator(args: &GeneratorArgs) -> Result<GeneratorSpec> {
    match (&args.model, &args.generator) {
        (Some(m), _) => parse_model(m),
        (None, Some(p)) => {
            let s =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(GeneratorSpec::from_toml_str(&s)?)
        }
        (None, None) => bail!("choose a generator with --model or --generator"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_models() {
        assert_eq!(parse_model("identity").unwrap(), GeneratorSpec::Identity);
        assert_eq!(
            parse_model("gaussian-jitter:sigma_m=50").unwrap(),
            GeneratorSpec::GaussianJitter {
                sigma_m: 50.0,
                flip_prob: 0.0
            }
        );
        assert_eq!(
            parse_model("grid-snap:cell_edge_m=2.5e2").unwrap(),
            GeneratorSpec::GridSnap { cell_edge_m: 250.0 }
        );
        assert!(parse_model("gaussian-jitter:sigma_m").is_err());
        assert!(parse_model("gaussian-jitter:sigma_m=x").is_err());
        assert!(parse_model("warp-drive").is_err());
    }
}
