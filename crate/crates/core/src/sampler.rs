//! Class balancing, trigger flattening and training stage plans.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotator::LabeledExample;
use crate::error::{Error, Result};
use crate::Label;

/// Train-split class shares (%, positive/negative/neutral) of the five
/// Russian benchmark sets: ROMIP-2013, SentiRuEval-2015 banks and telecom,
/// SentiRuEval-2016 banks and telecom.
pub const BENCHMARK_TRAIN_SHARES: [[u32; 3]; 5] = [
    [26, 44, 30],
    [7, 36, 57],
    [19, 34, 47],
    [7, 26, 67],
    [15, 28, 57],
];

pub const ADDITIONAL_TOTAL: usize = 15_000;
pub const TWO_STEP_TOTAL: usize = 27_000;
pub const THREE_STEP_GENERAL_TOTAL: usize = 18_000;
pub const THREE_STEP_THEMATIC_TOTAL: usize = 9_000;

/// Mean benchmark class proportions, as fractions.
pub fn benchmark_mean_proportions() -> BTreeMap<Label, f64> {
    let n = BENCHMARK_TRAIN_SHARES.len() as f64;
    Label::ALL
        .iter()
        .map(|&l| {
            let sum: u32 = BENCHMARK_TRAIN_SHARES.iter().map(|row| row[l.index()]).sum();
            (l, sum as f64 / n / 100.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMode {
    #[default]
    Uniform,
    Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSpec {
    #[serde(default)]
    pub mode: BalanceMode,
    /// Required for `distribution` mode.
    #[serde(default)]
    pub proportions: Option<BTreeMap<Label, f64>>,
    pub total: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

impl BalanceSpec {
    pub fn uniform(total: usize, rng_seed: u64) -> Self {
        BalanceSpec {
            mode: BalanceMode::Uniform,
            proportions: None,
            total,
            rng_seed,
        }
    }

    pub fn distribution(proportions: BTreeMap<Label, f64>, total: usize, rng_seed: u64) -> Self {
        BalanceSpec {
            mode: BalanceMode::Distribution,
            proportions: Some(proportions),
            total,
            rng_seed,
        }
    }

    fn fractions(&self) -> Result<[f64; 3]> {
        if self.total < 3 {
            return Err(Error::Config(format!("balance total must be at least 3, got {}", self.total)));
        }
        match (self.mode, &self.proportions) {
            (BalanceMode::Uniform, None) => Ok([1.0 / 3.0; 3]),
            (BalanceMode::Uniform, Some(_)) => {
                Err(Error::Config("proportions are only allowed in distribution mode".into()))
            }
            (BalanceMode::Distribution, None) => {
                Err(Error::Config("distribution mode needs proportions".into()))
            }
            (BalanceMode::Distribution, Some(p)) => {
                let mut f = [0.0; 3];
                for (&label, &v) in p {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Config(format!("proportion for {label} out of range: {v}")));
                    }
                    f[label.index()] = v;
                }
                let sum: f64 = f.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("proportions sum to {sum}, not 1")));
                }
                Ok(f)
            }
        }
    }

    /// Per-class targets: `round(total * fraction)`, with any rounding residue
    /// added to (or taken from) the class with the largest fraction, ties
    /// going to the first label in positive/negative/neutral order.
    pub fn class_targets(&self) -> Result<[usize; 3]> {
        let f = self.fractions()?;
        let mut counts = f.map(|x| (self.total as f64 * x).round() as i64);
        let residue = self.total as i64 - counts.iter().sum::<i64>();
        let largest = (0..3).fold(0, |best, i| if f[i] > f[best] { i } else { best });
        counts[largest] += residue;
        if counts.iter().any(|&c| c < 0) {
            return Err(Error::Config("balance targets round below zero".into()));
        }
        Ok(counts.map(|c| c as usize))
    }
}

fn class_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn check_unique_ids(pool: &[LabeledExample]) -> Result<()> {
    let mut seen = HashSet::with_capacity(pool.len());
    for ex in pool {
        if !seen.insert(ex.id.as_str()) {
            return Err(Error::Data(format!("duplicate example id {:?}", ex.id)));
        }
    }
    Ok(())
}

/// Draws the per-class targets from the pool. Within a class, candidates are
/// sorted by id and shuffled with a seeded RNG, so the chosen set does not
/// depend on pool order. Output is sorted by id.
pub fn balance(pool: &[LabeledExample], spec: &BalanceSpec) -> Result<Vec<LabeledExample>> {
    let targets = spec.class_targets()?;
    check_unique_ids(pool)?;
    let mut chosen: Vec<&LabeledExample> = Vec::with_capacity(spec.total);
    for label in Label::ALL {
        let need = targets[label.index()];
        let mut class: Vec<&LabeledExample> = pool.iter().filter(|e| e.label == label).collect();
        if class.len() < need {
            return Err(Error::InsufficientClass {
                label,
                needed: need,
                available: class.len(),
            });
        }
        class.sort_by(|a, b| a.id.cmp(&b.id));
        class.shuffle(&mut class_rng(spec.rng_seed, label.index() as u64));
        chosen.extend(class.into_iter().take(need));
    }
    chosen.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(chosen.into_iter().cloned().collect())
}

/// Keeps at most `cap` examples per (label, trigger term), chosen by seeded
/// shuffle.
/// Examples without a trigger pass through. Pool order is preserved.
pub fn flatten_triggers(pool: Vec<LabeledExample>, cap: usize, rng_seed: u64) -> Result<Vec<LabeledExample>> {
    if cap < 1 {
        return Err(Error::Config("per-trigger cap must be at least 1".into()));
    }
    let mut by_trigger: BTreeMap<(Label, &str), Vec<usize>> = BTreeMap::new();
    for (i, ex) in pool.iter().enumerate() {
        if let Some(t) = &ex.trigger {
            by_trigger.entry((ex.label, t.as_str())).or_default().push(i);
        }
    }
    let mut drop = vec![false; pool.len()];
    for (n, (_, mut members)) in by_trigger.into_iter().enumerate() {
        if members.len() <= cap {
            continue;
        }
        members.sort_by(|&a, &b| pool[a].id.cmp(&pool[b].id));
        members.shuffle(&mut class_rng(rng_seed, n as u64));
        for &i in &members[cap..] {
            drop[i] = true;
        }
    }
    Ok(pool
        .into_iter()
        .zip(drop)
        .filter_map(|(ex, d)| (!d).then_some(ex))
        .collect())
}

/// Default cap for one class: `ceil(2 * target / distinct triggers)`, raised
/// if needed so that the capped class still holds `target` examples.
pub fn default_trigger_cap(class: &[LabeledExample], target: usize) -> usize {
    let mut sizes: HashMap<&str, usize> = HashMap::new();
    for ex in class {
        if let Some(t) = &ex.trigger {
            *sizes.entry(t.as_str()).or_default() += 1;
        }
    }
    if sizes.is_empty() {
        return target.max(1);
    }
    let untriggered = class.iter().filter(|e| e.trigger.is_none()).count();
    let base = (2 * target).div_ceil(sizes.len()).max(1);
    let kept = |cap: usize| untriggered + sizes.values().map(|&n| n.min(cap)).sum::<usize>();
    let largest = sizes.values().copied().max().unwrap_or(1);
    if kept(base) >= target || kept(largest) < target {
        return base.max(if kept(largest) < target { largest } else { 1 });
    }
    // smallest cap that still fills the class
    let (mut lo, mut hi) = (base, largest);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if kept(mid) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanVariant {
    AdditionalOnly,
    MixedGeneral,
    MixedFull,
    TwoStep,
    #[default]
    ThreeStep,
}

impl PlanVariant {
    pub const ALL: [PlanVariant; 5] = [
        PlanVariant::AdditionalOnly,
        PlanVariant::MixedGeneral,
        PlanVariant::MixedFull,
        PlanVariant::TwoStep,
        PlanVariant::ThreeStep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlanVariant::AdditionalOnly => "additional_only",
            PlanVariant::MixedGeneral => "mixed_general",
            PlanVariant::MixedFull => "mixed_full",
            PlanVariant::TwoStep => "two_step",
            PlanVariant::ThreeStep => "three_step",
        }
    }

    pub fn needs_benchmark(self) -> bool {
        self != PlanVariant::AdditionalOnly
    }
}

impl fmt::Display for PlanVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlanVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlanVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown plan variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub dataset_path: String,
    pub freeze_before: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagePlan {
    pub description: String,
    pub stages: Vec<Stage>,
}

/// Dataset files a plan may refer to.
#[derive(Debug, Clone, Default)]
pub struct PlanPaths {
    pub additional: Option<PathBuf>,
    pub general: Option<PathBuf>,
    pub thematic: Option<PathBuf>,
    pub benchmark_train: Option<PathBuf>,
    pub mixed: Option<PathBuf>,
}

/// Builds the stage list for a variant. Relative paths are checked against
/// `base`; every referenced file must exist and be non-empty.
pub fn make_plan(variant: PlanVariant, paths: &PlanPaths, base: &Path) -> Result<StagePlan> {
    let stage = |name: &str, path: &Option<PathBuf>, freeze_before: bool| -> Result<Stage> {
        let path = path
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{variant} plan needs a {name} dataset path")))?;
        let on_disk = base.join(path);
        let len = std::fs::metadata(&on_disk).map(|m| m.len()).unwrap_or(0);
        if len == 0 {
            return Err(Error::Data(format!(
                "missing dataset file for stage {name}: {}",
                on_disk.display()
            )));
        }
        Ok(Stage {
            name: name.to_string(),
            dataset_path: path.to_string_lossy().into_owned(),
            freeze_before,
        })
    };
    let (description, stages) = match variant {
        PlanVariant::AdditionalOnly => (
            "train on the automatically annotated sample only",
            vec![stage("additional", &paths.additional, false)?],
        ),
        PlanVariant::MixedGeneral => (
            "general and neutral thematic examples mixed with the benchmark train set",
            vec![stage("mixed", &paths.mixed, false)?],
        ),
        PlanVariant::MixedFull => (
            "general and thematic examples mixed with the benchmark train set",
            vec![stage("mixed", &paths.mixed, false)?],
        ),
        PlanVariant::TwoStep => (
            "additional sample, then the benchmark train set; weights frozen between stages",
            vec![
                stage("additional", &paths.additional, false)?,
                stage("benchmark_train", &paths.benchmark_train, true)?,
            ],
        ),
        PlanVariant::ThreeStep => (
            "general sample, then thematic sample, then the benchmark train set; weights frozen before each later stage",
            vec![
                stage("general", &paths.general, false)?,
                stage("thematic", &paths.thematic, true)?,
                stage("benchmark_train", &paths.benchmark_train, true)?,
            ],
        ),
    };
    Ok(StagePlan {
        description: description.to_string(),
        stages,
    })
}
