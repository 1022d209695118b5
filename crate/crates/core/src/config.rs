//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment. Unknown or repeated keys are
//! errors. Every key has a default, and [`RunConfig::resolved_pairs`]
//! writes all of them back out, so a resolved config replays a run exactly.
//!
//! Training keys: `dataset`, `epochs`, `hidden_dim`, `layers`, `lr`,
//! `lambda1`, `lambda2`, `negatives`, `seed`, `propagation`, `threshold`,
//! `beta1`, `beta2`, `eps`. Experiment keys: `seeds`, `fractions`,
//! `gradcheck_step`. Synthetic-graph keys (used by `gen` and by
//! `dataset = synthetic`): `synth_n`, `synth_classes`, `synth_corr_pairs`,
//! `synth_p_in`, `synth_p_out`, `synth_noise_dims`, `synth_train_fraction`,
//! `synth_seed`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::DEFAULT_FRACTIONS;
use crate::graph::{generate_synthetic, load_dataset, CorrPair, Graph, SyntheticSpec};
use crate::trainer::TrainConfig;

pub const KEYS: &[&str] = &[
    "dataset",
    "epochs",
    "hidden_dim",
    "layers",
    "lr",
    "lambda1",
    "lambda2",
    "negatives",
    "seed",
    "propagation",
    "threshold",
    "beta1",
    "beta2",
    "eps",
    "seeds",
    "fractions",
    "gradcheck_step",
    "synth_n",
    "synth_classes",
    "synth_corr_pairs",
    "synth_p_in",
    "synth_p_out",
    "synth_noise_dims",
    "synth_train_fraction",
    "synth_seed",
];

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Directory(PathBuf),
    Synthetic,
}

/// The planted-correlation benchmark: 600 nodes, 6 classes, three planted
/// pairs at 0.8, 15% of nodes for training.
pub fn benchmark_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n: 600,
        c: 6,
        corr_pairs: vec![
            CorrPair { a: 0, b: 1, rho: 0.8 },
            CorrPair { a: 2, b: 3, rho: 0.8 },
            CorrPair { a: 4, b: 5, rho: 0.8 },
        ],
        p_in: 0.05,
        p_out: 0.005,
        noise_dims: 64,
        train_fraction: 0.15,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<DatasetSource>,
    pub train: TrainConfig,
    /// Number of consecutive seeds (starting at `train.seed`) for sweeps.
    pub seeds: usize,
    pub fractions: Vec<f64>,
    pub gradcheck_step: f64,
    pub synthetic: SyntheticSpec,
    /// Non-fatal remarks collected while parsing.
    pub warnings: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            train: TrainConfig::default(),
            seeds: 1,
            fractions: DEFAULT_FRACTIONS.to_vec(),
            gradcheck_step: 1e-5,
            synthetic: benchmark_spec(0),
            warnings: Vec::new(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for key `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_corr_pairs(value: &str) -> Result<Vec<CorrPair>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!(
                    "synth_corr_pairs entries look like `a:b:rho`, got `{item}`"
                )));
            }
            Ok(CorrPair {
                a: parse_value("synth_corr_pairs", parts[0])?,
                b: parse_value("synth_corr_pairs", parts[1])?,
                rho: parse_value("synth_corr_pairs", parts[2])?,
            })
        })
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses config text. Relative dataset paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", ln + 1))
            })?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        Self::from_pairs(pairs, base_dir)
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (String, String)>,
        base_dir: &Path,
    ) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (key, value) in pairs {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::UnknownKey(key));
            }
            if seen.insert(key.clone(), ()).is_some() {
                return Err(Error::Config(format!("key `{key}` given twice")));
            }
            cfg.set(&key, &value, base_dir)?;
        }
        for (name, v) in [("lambda1", cfg.train.lambda1), ("lambda2", cfg.train.lambda2)] {
            if v < 0.0 {
                cfg.warnings.push(format!(
                    "{name} = {v} is negative: that loss term will be maximised"
                ));
            }
        }
        cfg.train.validate()?;
        if cfg.seeds < 1 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        if cfg.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::Config("fractions must lie in (0, 1]".into()));
        }
        if !(cfg.gradcheck_step > 0.0) {
            return Err(Error::Config("gradcheck_step must be > 0".into()));
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        let t = &mut self.train;
        let s = &mut self.synthetic;
        match key {
            "dataset" => {
                self.dataset = Some(if value == "synthetic" {
                    DatasetSource::Synthetic
                } else {
                    let p = Path::new(value);
                    DatasetSource::Directory(if p.is_absolute() {
                        p.to_path_buf()
                    } else {
                        base_dir.join(p)
                    })
                })
            }
            "epochs" => t.epochs = parse_value(key, value)?,
            "hidden_dim" => t.hidden_dim = parse_value(key, value)?,
            "layers" => t.layers = parse_value(key, value)?,
            "lr" => t.lr = parse_value(key, value)?,
            "lambda1" => t.lambda1 = parse_value(key, value)?,
            "lambda2" => t.lambda2 = parse_value(key, value)?,
            "negatives" => t.negatives = parse_value(key, value)?,
            "seed" => t.seed = parse_value(key, value)?,
            "propagation" => t.propagation = value.parse()?,
            "threshold" => t.threshold = parse_value(key, value)?,
            "beta1" => t.beta1 = parse_value(key, value)?,
            "beta2" => t.beta2 = parse_value(key, value)?,
            "eps" => t.eps = parse_value(key, value)?,
            "seeds" => self.seeds = parse_value(key, value)?,
            "fractions" => self.fractions = parse_list(key, value)?,
            "gradcheck_step" => self.gradcheck_step = parse_value(key, value)?,
            "synth_n" => s.n = parse_value(key, value)?,
            "synth_classes" => s.c = parse_value(key, value)?,
            "synth_corr_pairs" => s.corr_pairs = parse_corr_pairs(value)?,
            "synth_p_in" => s.p_in = parse_value(key, value)?,
            "synth_p_out" => s.p_out = parse_value(key, value)?,
            "synth_noise_dims" => s.noise_dims = parse_value(key, value)?,
            "synth_train_fraction" => s.train_fraction = parse_value(key, value)?,
            "synth_seed" => s.seed = parse_value(key, value)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Reads a config file. A `.json` file is taken to be a run manifest and
    /// its resolved `config` object is replayed.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let obj = manifest
                .get("config")
                .and_then(|c| c.as_object())
                .ok_or_else(|| Error::Config("manifest has no `config` object".into()))?;
            let pairs = obj.iter().map(|(k, v)| {
                let v = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
                (k.clone(), v)
            });
            return Self::from_pairs(pairs, base);
        }
        Self::parse(&text, base)
    }

    /// Every key with its effective value, in [`KEYS`] order.
    pub fn resolved_pairs(&self) -> Vec<(String, String)> {
        let t = &self.train;
        let s = &self.synthetic;
        let dataset = match &self.dataset {
            None => String::new(),
            Some(DatasetSource::Synthetic) => "synthetic".into(),
            Some(DatasetSource::Directory(p)) => {
                fs::canonicalize(p).unwrap_or_else(|_| p.clone()).display().to_string()
            }
        };
        let corr = s
            .corr_pairs
            .iter()
            .map(|p| format!("{}:{}:{}", p.a, p.b, p.rho))
            .collect::<Vec<_>>()
            .join(",");
        let values = [
            dataset,
            t.epochs.to_string(),
            t.hidden_dim.to_string(),
            t.layers.to_string(),
            t.lr.to_string(),
            t.lambda1.to_string(),
            t.lambda2.to_string(),
            t.negatives.to_string(),
            t.seed.to_string(),
            t.propagation.as_str().to_string(),
            t.threshold.to_string(),
            t.beta1.to_string(),
            t.beta2.to_string(),
            t.eps.to_string(),
            self.seeds.to_string(),
            join(&self.fractions),
            self.gradcheck_step.to_string(),
            s.n.to_string(),
            s.c.to_string(),
            corr,
            s.p_in.to_string(),
            s.p_out.to_string(),
            s.noise_dims.to_string(),
            s.train_fraction.to_string(),
            s.seed.to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .filter(|(k, v)| **k != "dataset" || !v.is_empty())
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    /// Loads or generates the configured graph.
    pub fn graph(&self) -> Result<Graph> {
        match &self.dataset {
            None => Err(Error::Config("missing key `dataset`".into())),
            Some(DatasetSource::Directory(p)) => load_dataset(p),
            Some(DatasetSource::Synthetic) => generate_synthetic(&self.synthetic),
        }
    }

    /// `seeds` consecutive seeds starting at `train.seed`.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.train.seed + i).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::Propagation;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("/base"))
    }

    #[test]
    fn empty_config_has_paper_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.train.lambda1, 0.25);
        assert_eq!(c.train.lambda2, 0.25);
        assert_eq!(c.train.negatives, 5);
        assert_eq!(c.train.lr, 0.01);
        assert_eq!(c.train.threshold, 0.5);
        assert_eq!(c.train.layers, 2);
    }

    #[test]
    fn parses_keys_and_comments() {
        let c = parse(
            "# comment\n dataset = data/x \nepochs=3 # trailing\npropagation = identity\n\
             fractions = 0.1, 0.3\nsynth_corr_pairs = 0:1:0.5,2:3:1\n",
        )
        .unwrap();
        assert_eq!(c.dataset, Some(DatasetSource::Directory("/base/data/x".into())));
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.propagation, Propagation::Identity);
        assert_eq!(c.fractions, vec![0.1, 0.3]);
        assert_eq!(c.synthetic.corr_pairs[1], CorrPair { a: 2, b: 3, rho: 1.0 });
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse("lamda1 = 0.3").unwrap_err();
        assert!(matches!(&e, Error::UnknownKey(k) if k == "lamda1"));
        assert!(e.to_string().contains("unknown key"));
    }

    #[test]
    fn bad_values_and_duplicates() {
        assert!(parse("epochs = many").is_err());
        assert!(parse("epochs = 0").is_err());
        assert!(parse("layers = 3").is_err());
        assert!(parse("seed = 1\nseed = 2").is_err());
        assert!(parse("just text").is_err());
        assert!(parse("propagation = spectral").is_err());
    }

    #[test]
    fn negative_lambda_warns() {
        let c = parse("lambda1 = -1").unwrap();
        assert_eq!(c.train.lambda1, -1.0);
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn resolved_pairs_replay_exactly() {
        let c = parse("dataset = synthetic\nlr = 0.003\nseed = 9\nsynth_n = 40\nfractions = 0.25,0.5")
            .unwrap();
        let again = RunConfig::from_pairs(c.resolved_pairs(), Path::new("/")).unwrap();
        assert_eq!(again, c);
        assert_eq!(c.resolved_pairs().len(), KEYS.len());
    }
}
