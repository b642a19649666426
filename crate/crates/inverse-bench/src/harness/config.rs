//! Line-oriented experiment configuration: `[section]` headers over
//! `key = value` pairs, booleans as true/false, lists comma-separated,
//! layer-width lists like `64x64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::autodiff::Activation;
use crate::solvers::{SolverConfig, SolverKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key [{section}] {key}")]
    Missing { section: String, key: String },
    #[error("bad value for [{section}] {key}: '{value}' ({expected})")]
    BadValue { section: String, key: String, value: String, expected: &'static str },
    #[error("bad override '{0}': expected section.key=value")]
    BadOverride(String),
    #[error("io error reading config: {0}")]
    Io(#[from] std::io::Error),
}

/// Parsed configuration: ordered sections of ordered keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                    line: lineno + 1,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
                line: lineno + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            if section.is_empty() {
                return Err(ConfigError::Parse {
                    line: lineno + 1,
                    message: "key outside any [section]".into(),
                });
            }
            cfg.sections
                .get_mut(&section)
                .unwrap()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        Config::parse(&fs::read_to_string(path)?)
    }

    /// Canonical text form: sections and keys sorted, one pair per line.
    /// Hashing this string gives a stable config fingerprint.
    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        for (section, pairs) in &self.sections {
            writeln!(out, "[{section}]").unwrap();
            for (key, value) in pairs {
                writeln!(out, "{key} = {value}").unwrap();
            }
        }
        out
    }

    /// Apply a `section.key=value` override.
    pub fn set(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (path, value) =
            spec.split_once('=').ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.get(section, key).ok_or_else(|| ConfigError::Missing {
            section: section.to_string(),
            key: key.to_string(),
        })
    }

    fn typed<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        expected: &'static str,
    ) -> Result<Option<T>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::BadValue {
                section: section.to_string(),
                key: key.to_string(),
                value: v.to_string(),
                expected,
            }),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.typed(section, key, "float")
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.typed(section, key, "unsigned integer")
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        self.typed(section, key, "unsigned integer")
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(v) => Err(ConfigError::BadValue {
                section: section.to_string(),
                key: key.to_string(),
                value: v.to_string(),
                expected: "true or false",
            }),
        }
    }

    /// Comma-separated floats, e.g. `0.7,0.2,0.1`.
    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<Result<Vec<f64>, _>>()
                .map(Some)
                .map_err(|_| ConfigError::BadValue {
                    section: section.to_string(),
                    key: key.to_string(),
                    value: v.to_string(),
                    expected: "comma-separated floats",
                }),
        }
    }

    /// `x`-separated widths, e.g. `64x64` or `32`.
    pub fn parse_widths(
        &self,
        section: &str,
        key: &str,
        value: &str,
    ) -> Result<Vec<usize>, ConfigError> {
        value
            .split('x')
            .map(|t| t.trim().parse())
            .collect::<Result<Vec<usize>, _>>()
            .map_err(|_| ConfigError::BadValue {
                section: section.to_string(),
                key: key.to_string(),
                value: value.to_string(),
                expected: "widths like 64x64",
            })
    }

    /// Build the solver configuration from the `[solver]` section.
    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        let sec = "solver";
        let mut cfg = SolverConfig::default();
        let kind_str = self.require(sec, "kind")?;
        cfg.kind = SolverKind::parse(kind_str).ok_or(ConfigError::BadValue {
            section: sec.into(),
            key: "kind".into(),
            value: kind_str.into(),
            expected: "nn|tandem|na|ga|mdn|vae|inn|cinn",
        })?;
        if let Some(h) = self.get(sec, "hidden") {
            cfg.hidden = if h.is_empty() { Vec::new() } else { self.parse_widths(sec, "hidden", h)? };
        }
        if let Some(a) = self.get(sec, "activation") {
            cfg.activation = Activation::parse(a).ok_or(ConfigError::BadValue {
                section: sec.into(),
                key: "activation".into(),
                value: a.into(),
                expected: "relu|tanh|linear",
            })?;
        }
        if let Some(b) = self.get_bool(sec, "batchnorm")? {
            cfg.batchnorm = b;
        }
        if let Some(v) = self.get_usize(sec, "epochs")? {
            cfg.epochs = v;
        }
        if let Some(v) = self.get_usize(sec, "batch")? {
            cfg.batch_size = v;
        }
        if let Some(v) = self.get_f64(sec, "lr")? {
            cfg.lr = v;
        }
        if let Some(v) = self.get_usize(sec, "patience")? {
            cfg.patience = v;
        }
        if let Some(v) = self.get_f64(sec, "decay")? {
            cfg.decay_factor = v;
        }
        if let Some(v) = self.get_u64(sec, "seed")? {
            cfg.seed = v;
        }
        if let Some(v) = self.get_f64(sec, "boundary_weight")? {
            cfg.boundary_weight = v;
        }
        if let Some(v) = self.get_usize(sec, "iterations")? {
            cfg.iterations = v;
        }
        if let Some(v) = self.get_usize(sec, "population")? {
            cfg.population = v;
        }
        if let Some(v) = self.get_usize(sec, "oversample")? {
            cfg.na_oversample = v;
        }
        if let Some(v) = self.get_f64(sec, "na_lr")? {
            cfg.na_lr = v;
        }
        if let Some(v) = self.get_f64(sec, "crossover")? {
            cfg.crossover_rate = v;
        }
        if let Some(v) = self.get_f64(sec, "mutation")? {
            cfg.mutation_rate = v;
        }
        if let Some(v) = self.get_usize(sec, "elitism")? {
            cfg.elitism = v;
        }
        if let Some(v) = self.get_usize(sec, "components")? {
            cfg.components = v;
        }
        if let Some(v) = self.get_bool(sec, "mdn_norm_constant")? {
            cfg.mdn_norm_constant = v;
        }
        if let Some(v) = self.get_usize(sec, "latent")? {
            cfg.latent_dim = v;
        }
        if let Some(v) = self.get_f64(sec, "kl_weight")? {
            cfg.kl_weight = v;
        }
        if let Some(v) = self.get_usize(sec, "blocks")? {
            cfg.blocks = v;
        }
        if let Some(v) = self.get_f64(sec, "sigma")? {
            cfg.sigma_fit = v;
        }
        if let Some(v) = self.get_usize(sec, "inn_latent")? {
            cfg.inn_latent = v;
        }
        Ok(cfg)
    }
}

/// Render a `SolverConfig` back into `[solver]` section pairs so manifests can
/// reconstruct solvers at load time.
pub fn solver_config_pairs(cfg: &SolverConfig) -> Vec<(String, String)> {
    let widths =
        cfg.hidden.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("x");
    vec![
        ("kind".into(), cfg.kind.name().into()),
        ("hidden".into(), if widths.is_empty() { "".into() } else { widths }),
        ("activation".into(), cfg.activation.name().into()),
        ("batchnorm".into(), cfg.batchnorm.to_string()),
        ("epochs".into(), cfg.epochs.to_string()),
        ("batch".into(), cfg.batch_size.to_string()),
        ("lr".into(), cfg.lr.to_string()),
        ("patience".into(), cfg.patience.to_string()),
        ("decay".into(), cfg.decay_factor.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("boundary_weight".into(), cfg.boundary_weight.to_string()),
        ("iterations".into(), cfg.iterations.to_string()),
        ("population".into(), cfg.population.to_string()),
        ("oversample".into(), cfg.na_oversample.to_string()),
        ("na_lr".into(), cfg.na_lr.to_string()),
        ("crossover".into(), cfg.crossover_rate.to_string()),
        ("mutation".into(), cfg.mutation_rate.to_string()),
        ("elitism".into(), cfg.elitism.to_string()),
        ("components".into(), cfg.components.to_string()),
        ("mdn_norm_constant".into(), cfg.mdn_norm_constant.to_string()),
        ("latent".into(), cfg.latent_dim.to_string()),
        ("kl_weight".into(), cfg.kl_weight.to_string()),
        ("blocks".into(), cfg.blocks.to_string()),
        ("sigma".into(), cfg.sigma_fit.to_string()),
        ("inn_latent".into(), cfg.inn_latent.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# experiment
[task]
name = toy

[solver]
kind = mdn
hidden = 32x16
components = 3
lr = 5e-3
batchnorm = false
";

    #[test]
    fn parses_sections_and_values() {
        let cfg = Config::parse(SAMPLE).unwrap();
        assert_eq!(cfg.get("task", "name"), Some("toy"));
        let solver = cfg.solver_config().unwrap();
        assert_eq!(solver.kind, SolverKind::Mdn);
        assert_eq!(solver.hidden, vec![32, 16]);
        assert_eq!(solver.components, 3);
        assert_eq!(solver.lr, 5e-3);
        assert!(!solver.batchnorm);
    }

    #[test]
    fn canonical_string_is_sorted_and_stable() {
        let a = Config::parse("[b]\nz = 1\na = 2\n[a]\nk = v\n").unwrap();
        let b = Config::parse("[a]\nk = v\n[b]\na = 2\nz = 1\n").unwrap();
        assert_eq!(a.canonical_string(), b.canonical_string());
        assert_eq!(a.canonical_string(), "[a]\nk = v\n[b]\na = 2\nz = 1\n");
    }

    #[test]
    fn overrides_create_and_replace() {
        let mut cfg = Config::parse(SAMPLE).unwrap();
        cfg.set("solver.lr=1e-4").unwrap();
        cfg.set("eval.t_max=25").unwrap();
        assert_eq!(cfg.get("solver", "lr"), Some("1e-4"));
        assert_eq!(cfg.get("eval", "t_max"), Some("25"));
        assert!(cfg.set("garbage").is_err());
    }

    #[test]
    fn bad_values_are_reported_with_context() {
        let cfg = Config::parse("[solver]\nkind = nn\nlr = fast\n").unwrap();
        match cfg.solver_config() {
            Err(ConfigError::BadValue { section, key, .. }) => {
                assert_eq!(section, "solver");
                assert_eq!(key, "lr");
            }
            other => panic!("expected BadValue, got {other:?}"),
        }
    }

    #[test]
    fn solver_config_round_trips_through_pairs() {
        let cfg = Config::parse(SAMPLE).unwrap();
        let solver = cfg.solver_config().unwrap();
        let mut text = String::from("[solver]\n");
        for (k, v) in solver_config_pairs(&solver) {
            text.push_str(&format!("{k} = {v}\n"));
        }
        let back = Config::parse(&text).unwrap().solver_config().unwrap();
        assert_eq!(solver, back);
    }
}
