use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::annotator::AnnotationRules;
use crate::dedup::{Blocking, DedupConfig, DedupScope};
use crate::error::{Error, Result};
use crate::ingest::Replacements;
use crate::sampler::{BalanceMode, PlanVariant};
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedFiles {
    pub positive: PathBuf,
    pub negative: PathBuf,
}

/// A gazetteer or annotation file and the topic its organizations belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicSource {
    pub path: PathBuf,
    pub topic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LengthConfig {
    /// Example or sentence JSONL files whose `text` lengths set the bounds.
    pub reference: Vec<PathBuf>,
    pub lower_quantile: f64,
    pub upper_quantile: f64,
    /// Fixed bounds; used instead of quantiles when both are set.
    pub min_tokens: Option<usize>,
    pub max_tokens: Option<usize>,
}

impl Default for LengthConfig {
    fn default() -> Self {
        LengthConfig {
            reference: Vec::new(),
            lower_quantile: 0.05,
            upper_quantile: 0.95,
            min_tokens: None,
            max_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub abbreviations: Option<PathBuf>,
    pub normalize: bool,
    pub replacements: Replacements,
    pub length: LengthConfig,
    /// Documents handed to the worker pool at a time.
    pub batch_size: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            abbreviations: None,
            normalize: true,
            replacements: Replacements::default(),
            length: LengthConfig::default(),
            batch_size: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSettings {
    pub enabled: bool,
    pub threshold: f64,
    pub blocking: Blocking,
    pub scope: DedupScope,
    pub keep_same_source: bool,
}

impl Default for DedupSettings {
    fn default() -> Self {
        let d = DedupConfig::default();
        DedupSettings {
            enabled: true,
            threshold: d.threshold,
            blocking: Blocking::PrefixFilter,
            scope: d.scope,
            keep_same_source: d.keep_same_source,
        }
    }
}

impl DedupSettings {
    pub fn to_config(&self, rng_seed: u64) -> DedupConfig {
        DedupConfig {
            threshold: self.threshold,
            rng_seed,
            blocking: self.blocking,
            scope: self.scope,
            keep_same_source: self.keep_same_source,
        }
    }
}

/// Balancing for one output file; unset fields fall back to the variant's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBalance {
    pub mode: BalanceMode,
    pub proportions: Option<BTreeMap<Label, f64>>,
    pub total: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub variant: PlanVariant,
    /// Keyed by output name: `additional`, `general` or `thematic`.
    pub balance: BTreeMap<String, OutputBalance>,
    pub flatten_triggers: bool,
    /// Fixed per-trigger cap; computed per class when unset.
    pub per_trigger_cap: Option<usize>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            variant: PlanVariant::default(),
            balance: BTreeMap::new(),
            flatten_triggers: true,
            per_trigger_cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: Vec<PathBuf>,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub seeds: Option<SeedFiles>,
    #[serde(default)]
    pub gazetteers: Vec<TopicSource>,
    #[serde(default)]
    pub annotations: Vec<TopicSource>,
    #[serde(default)]
    pub benchmark_train: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub rules: AnnotationRules,
    #[serde(default)]
    pub dedup: DedupSettings,
    #[serde(default)]
    pub sampling: SamplingConfig,
}

/// Parses a `key.path=value` override. The value is read as JSON when it
/// parses, otherwise taken as a plain string.
pub fn parse_override(spec: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(Error::Config(format!("override {spec:?} has an empty key segment")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((path, value))
}

pub fn apply_override(doc: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut node = doc;
    for (i, key) in path.iter().enumerate() {
        if !node.is_object() {
            return Err(Error::Config(format!(
                "cannot set {}: {} is not a table",
                path.join("."),
                path[..i].join(".")
            )));
        }
        let map = node.as_object_mut().expect("checked above");
        if i + 1 == path.len() {
            map.insert(key.clone(), value);
            return Ok(());
        }
        node = map
            .entry(key.clone())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Parses TOML or JSON (by extension), applies overrides and resolves
    /// relative paths against the config file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut doc: Value = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            Some("json") => serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            _ => {
                return Err(Error::Config(format!(
                    "{}: config must be .toml or .json",
                    path.display()
                )))
            }
        };
        for spec in overrides {
            let (key, value) = parse_override(spec)?;
            apply_override(&mut doc, &key, value)?;
        }
        let mut config: RunConfig = serde_json::from_value(doc)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in &mut self.corpus {
            resolve(base, p);
        }
        resolve(base, &mut self.lexicon);
        if let Some(s) = &mut self.seeds {
            resolve(base, &mut s.positive);
            resolve(base, &mut s.negative);
        }
        for g in self.gazetteers.iter_mut().chain(&mut self.annotations) {
            resolve(base, &mut g.path);
        }
        if let Some(b) = &mut self.benchmark_train {
            resolve(base, b);
        }
        resolve(base, &mut self.output_dir);
        if let Some(a) = &mut self.ingest.abbreviations {
            resolve(base, a);
        }
        for r in &mut self.ingest.length.reference {
            resolve(base, r);
        }
    }

    fn input_files(&self) -> Vec<&Path> {
        let mut files: Vec<&Path> = self.corpus.iter().map(PathBuf::as_path).collect();
        files.push(&self.lexicon);
        if let Some(s) = &self.seeds {
            files.extend([s.positive.as_path(), s.negative.as_path()]);
        }
        files.extend(self.gazetteers.iter().chain(&self.annotations).map(|g| g.path.as_path()));
        files.extend(self.benchmark_train.as_deref());
        files.extend(self.ingest.abbreviations.as_deref());
        files.extend(self.ingest.length.reference.iter().map(PathBuf::as_path));
        files
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus.is_empty() {
            return Err(Error::Config("no corpus files configured".into()));
        }
        for f in self.input_files() {
            if !f.is_file() {
                return Err(Error::Config(format!("input file not found: {}", f.display())));
            }
        }
        self.rules.validate()?;
        self.dedup.to_config(self.seed).validate()?;
        if self.ingest.batch_size == 0 {
            return Err(Error::Config("ingest.batch_size must be at least 1".into()));
        }
        let len = &self.ingest.length;
        match (len.min_tokens, len.max_tokens) {
            (Some(lo), Some(hi)) if lo < 1 || hi < lo => {
                return Err(Error::Config(format!("invalid token bounds {lo}..={hi}")));
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(Error::Config("min_tokens and max_tokens must be set together".into()));
            }
            _ => {}
        }
        let variant = self.sampling.variant;
        if variant.needs_benchmark() && self.benchmark_train.is_none() {
            return Err(Error::Config(format!("variant {variant} needs benchmark_train")));
        }
        let outputs = super::balanced_outputs(variant);
        for name in self.sampling.balance.keys() {
            if !outputs.iter().any(|(n, _)| n == name) {
                return Err(Error::Config(format!(
                    "sampling.balance.{name} is not an output of variant {variant}"
                )));
            }
        }
        if self.sampling.per_trigger_cap == Some(0) {
            return Err(Error::Config("per_trigger_cap must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the configuration with the output directory left out, so
    /// the same run written to two places has the same digest.
    pub fn digest(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        let bytes = serde_json::to_vec(&value).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
