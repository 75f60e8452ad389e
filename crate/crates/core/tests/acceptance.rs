//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.

mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use dsf_core::annotator::{Annotation, LabeledExample, Part};
use dsf_core::dedup::{dedup, Blocking, DedupConfig};
use dsf_core::ingest::Sentence;
use dsf_core::metrics::{score, ConfusionCounts, MetricsReport};
use dsf_core::pipeline::{self, Resources, RunConfig};
use dsf_core::sampler::{
    balance, make_plan, BalanceSpec, PlanPaths, PlanVariant, BENCHMARK_TRAIN_SHARES,
};
use dsf_core::synth::{self, write_fixture, SynthOptions};
use dsf_core::Label;

use support::Oracle;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle() -> Oracle {
    Oracle::new(
        synth::LEXICON_TSV,
        &[("banks", synth::BANKS_TSV), ("telecom", synth::TELECOM_TSV), ("persons", synth::PERSONS_TSV)],
    )
}

fn fixture(dir: &Path, opts: &SynthOptions, extra: &str) -> RunConfig {
    let paths = write_fixture(dir, opts, extra).unwrap();
    RunConfig::load(&paths.config, &[]).unwrap()
}

/// Sentences after ingest, with the library annotations for each.
fn annotated(cfg: &RunConfig) -> (Vec<Sentence>, Vec<Vec<Annotation>>) {
    let res = Resources::load(cfg).unwrap();
    let mut sentences = Vec::new();
    pipeline::stream_sentences(&cfg.corpus, cfg.ingest.batch_size, &res, |batch| {
        sentences.extend(batch);
        Ok(())
    })
    .unwrap();
    let annotations = sentences
        .iter()
        .map(|s| res.annotator.annotate(s).unwrap())
        .collect();
    (sentences, annotations)
}

fn json_lines(rows: &[LabeledExample]) -> Vec<String> {
    let mut out: Vec<String> = rows.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
    out.sort();
    out
}

fn annotator_oracle() -> Outcome {
    let started = Instant::now();
    let oracle = oracle();
    let mut total = 0;
    let mut mismatched = Vec::new();
    for seed in [3, 17, 2024] {
        let dir = tempfile::tempdir().unwrap();
        let opts = SynthOptions {
            sentences: 1000,
            seed,
            ..Default::default()
        };
        let cfg = fixture(dir.path(), &opts, "");
        let (sentences, annotations) = annotated(&cfg);
        let lib: Vec<LabeledExample> = annotations.into_iter().flatten().map(|a| a.example).collect();
        let want: Vec<LabeledExample> = sentences.iter().flat_map(|s| oracle.annotate(s)).collect();
        let (lib, want) = (json_lines(&lib), json_lines(&want));
        total += want.len();
        if lib != want {
            let a: BTreeSet<_> = lib.iter().collect();
            let b: BTreeSet<_> = want.iter().collect();
            let first = a.symmetric_difference(&b).next().map(|s| s.to_string());
            mismatched.push(format!("seed {seed}: {} vs {} ({first:?})", lib.len(), want.len()));
        }
    }
    let elapsed = started.elapsed();
    check(
        mismatched.is_empty() && elapsed < Duration::from_secs(10),
        format!("{total} examples over 3 x 1000 sentences, {elapsed:.2?}; mismatches: {mismatched:?}"),
    )
}

fn rule_invariants() -> Outcome {
    let oracle = oracle();
    let dir = tempfile::tempdir().unwrap();
    let opts = SynthOptions {
        sentences: 10_000,
        seed: 99,
        ..Default::default()
    };
    let cfg = fixture(dir.path(), &opts, "");
    let (sentences, annotations) = annotated(&cfg);
    let mut checked = 0;
    let mut violations: BTreeMap<&str, usize> = BTreeMap::new();
    let mut flag = |name: &'static str, bad: bool| {
        if bad {
            *violations.entry(name).or_default() += 1;
        }
    };
    for (s, anns) in sentences.iter().zip(&annotations) {
        let words = support::words(s);
        for a in anns {
            checked += 1;
            let ex = &a.example;
            let masks = ex
                .text
                .split(|c: char| !c.is_alphanumeric())
                .filter(|w| *w == "MASK")
                .count();
            flag("one MASK", masks != 1);
            flag("surface", ex.target_surface != s.text[s.tokens[a.target.0].start..s.tokens[a.target.1].end]);
            let Some(trigger) = a.trigger else {
                flag("neutral has no trigger", ex.label != Label::Neutral || ex.trigger.is_some());
                continue;
            };
            let term = ex.trigger.as_deref().unwrap_or("");
            flag("polarity", oracle.polarity.get(term).copied().flatten() != Some(ex.label));
            let w = words.iter().position(|(i, _)| *i == trigger.0).unwrap();
            flag("negation", support::negated(&words, w));
            flag("quotes", support::quoted(s, trigger.0, trigger.1));
            if ex.part == Part::Thematic {
                let gap = support::word_gap(s, a.target, trigger);
                flag("distance", gap.is_none_or(|g| g > support::MAX_DISTANCE));
            }
        }
    }
    check(
        violations.is_empty() && checked > 0,
        format!("{} sentences, {checked} examples, violations {violations:?}", sentences.len()),
    )
}

fn dedup_examples(n_sentences: usize, seed: u64, dup_rate: f64, cap: usize) -> Vec<LabeledExample> {
    let dir = tempfile::tempdir().unwrap();
    let opts = SynthOptions {
        sentences: n_sentences,
        seed,
        near_duplicate_rate: dup_rate,
        filler_vocabulary: Some(300),
        ..Default::default()
    };
    let cfg = fixture(dir.path(), &opts, "");
    let (_, annotations) = annotated(&cfg);
    annotations.into_iter().flatten().map(|a| a.example).take(cap).collect()
}

/// Survivor ids from the documented removal rule, with oracle cosines.
fn oracle_dedup(examples: &[LabeledExample], cfg: &DedupConfig) -> BTreeSet<String> {
    let mut sorted: Vec<&LabeledExample> = examples.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let texts: Vec<&str> = sorted.iter().map(|e| e.text.as_str()).collect();
    let vecs = support::tfidf(&texts);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut alive = vec![true; sorted.len()];
    for a in 0..sorted.len() {
        for b in a + 1..sorted.len() {
            let same = cfg.keep_same_source && sorted[a].source_sentence_id == sorted[b].source_sentence_id;
            let over = support::cos(&vecs[a], &vecs[b]).is_some_and(|c| c > cfg.threshold);
            if over && !same && alive[a] && alive[b] {
                let loser = if rng.random_bool(0.5) { a } else { b };
                alive[loser] = false;
            }
        }
    }
    sorted
        .iter()
        .zip(alive)
        .filter(|(_, keep)| *keep)
        .map(|(e, _)| e.id.clone())
        .collect()
}

fn max_cosine(examples: &[LabeledExample], survivors: &BTreeSet<String>, cross_source_only: bool) -> f64 {
    let texts: Vec<&str> = examples.iter().map(|e| e.text.as_str()).collect();
    let vecs = support::tfidf(&texts);
    let keep: Vec<usize> = (0..examples.len()).filter(|&i| survivors.contains(&examples[i].id)).collect();
    let mut worst: f64 = 0.0;
    for (k, &a) in keep.iter().enumerate() {
        for &b in &keep[k + 1..] {
            if cross_source_only && examples[a].source_sentence_id == examples[b].source_sentence_id {
                continue;
            }
            if let Some(c) = support::cos(&vecs[a], &vecs[b]) {
                worst = worst.max(c);
            }
        }
    }
    worst
}

fn dedup_cosine_bound() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, seed, rate, cap) in [(200, 1, 0.3, 300), (600, 2, 0.2, 1000), (900, 3, 0.05, 1000), (700, 4, 0.5, 1000)] {
        let examples = dedup_examples(n, seed, rate, cap);
        for keep_same_source in [false, true] {
            let run = |blocking| {
                let cfg = DedupConfig {
                    rng_seed: seed * 31,
                    blocking,
                    keep_same_source,
                    ..Default::default()
                };
                let out = dedup(examples.clone(), &cfg).unwrap();
                (cfg, out.survivors.into_iter().map(|e| e.id).collect::<BTreeSet<_>>())
            };
            let (cfg, brute) = run(Blocking::None);
            let (_, prefix) = run(Blocking::PrefixFilter);
            let (_, bands) = run(Blocking::LengthBands);
            let expected = oracle_dedup(&examples, &cfg);
            let worst = max_cosine(&examples, &brute, keep_same_source);
            let good = worst <= 0.8 && brute == expected && prefix == brute;
            ok &= good;
            lines.push(format!(
                "n={} same_source_exempt={keep_same_source}: kept {} max cos {worst:.4}, oracle {}, prefix {}, length_bands {}",
                examples.len(),
                brute.len(),
                if brute == expected { "=" } else { "!=" },
                if prefix == brute { "=" } else { "!=" },
                if bands == brute { "=" } else { "!= (informational)" },
            ));
        }
    }
    check(ok, lines.join("; "))
}

fn labeled_pool(per_class: usize) -> Vec<LabeledExample> {
    let mut out = Vec::new();
    for label in Label::ALL {
        for i in 0..per_class {
            out.push(LabeledExample {
                id: format!("{label}-{i:06}"),
                text: format!("MASK {i}"),
                label,
                part: Part::Thematic,
                topic: "banks".into(),
                target_surface: "x".into(),
                source_sentence_id: format!("s{i}"),
                trigger: (label != Label::Neutral).then(|| format!("t{}", i % 40)),
            });
        }
    }
    out
}

fn class_counts(rows: &[LabeledExample]) -> [usize; 3] {
    let mut c = [0; 3];
    for r in rows {
        c[r.label.index()] += 1;
    }
    c
}

fn balancing() -> Outcome {
    let pool = labeled_pool(16_000);
    let mut lines = Vec::new();
    let mut ok = true;
    for (total, want) in [(15_000, [5000; 3]), (27_000, [9000; 3])] {
        let got = class_counts(&balance(&pool, &BalanceSpec::uniform(total, 5)).unwrap());
        let flat = pipeline::sample_output(pool.clone(), &BalanceSpec::uniform(total, 5), true, None, 6).unwrap();
        let flat = class_counts(&flat);
        ok &= got == want && flat == want;
        lines.push(format!("uniform {total}: {got:?}, after flattening {flat:?}"));
    }
    // Per-dataset class shares of the benchmark train sets, in percent.
    let rows: [[u32; 3]; 5] = [[26, 44, 30], [7, 36, 57], [19, 34, 47], [7, 26, 67], [15, 28, 57]];
    ok &= BENCHMARK_TRAIN_SHARES == rows;
    let mean: Vec<f64> = (0..3).map(|c| rows.iter().map(|r| r[c]).sum::<u32>() as f64 / 500.0).collect();
    let proportions: BTreeMap<Label, f64> = Label::ALL.iter().map(|&l| (l, mean[l.index()])).collect();
    for (total, want) in [(15_000, [2220, 5040, 7740]), (27_000, [3996, 9072, 13_932])] {
        let spec = BalanceSpec::distribution(proportions.clone(), total, 8);
        let got = class_counts(&balance(&pool, &spec).unwrap());
        ok &= got == want;
        lines.push(format!("distribution {total}: {got:?} (want {want:?})"));
    }
    check(ok, lines.join("; "))
}

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut worst: f64 = 0.0;
    let mut scored = 0;
    while scored < 1000 {
        let mut m = [[0u64; 3]; 3];
        for cell in m.iter_mut().flatten() {
            *cell = if rng.random_bool(0.2) { 0 } else { rng.random_range(0..60) };
        }
        if m.iter().flatten().sum::<u64>() == 0 {
            continue;
        }
        scored += 1;
        let r = score(&ConfusionCounts(m)).unwrap();
        let want = support::reference_scores(&m);
        let got = [r.accuracy, r.f1_macro, r.f1_pm_macro, r.f1_pm_micro];
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
    }
    let fixture = score(&ConfusionCounts([[5, 1, 0], [2, 6, 1], [1, 1, 8]])).unwrap();
    let exact = [19.0 / 25.0, 1705.0 / 2261.0, 169.0 / 238.0, 22.0 / 31.0];
    let fixture_ok = [fixture.accuracy, fixture.f1_macro, fixture.f1_pm_macro, fixture.f1_pm_micro]
        .iter()
        .zip(exact)
        .all(|(g, w)| (g - w).abs() < 1e-12);
    let perfect = score(&ConfusionCounts([[4, 0, 0], [0, 4, 0], [0, 0, 4]])).unwrap();
    let perfect_ok = perfect
        == MetricsReport {
            accuracy: 1.0,
            f1_macro: 1.0,
            f1_pm_macro: 1.0,
            f1_pm_micro: 1.0,
        };
    let neutral = score(&ConfusionCounts([[0, 0, 4], [0, 0, 4], [0, 0, 4]])).unwrap();
    let neutral_ok = (neutral.accuracy - 1.0 / 3.0).abs() < 1e-15
        && neutral.f1_pm_micro == 0.0
        && neutral.f1_pm_macro == 0.0
        && (neutral.f1_macro - 1.0 / 6.0).abs() < 1e-15;
    check(
        worst < 1e-9 && fixture_ok && perfect_ok && neutral_ok,
        format!(
            "1000 random matrices, max deviation {worst:.2e}; fixture {fixture_ok}; perfect {perfect_ok}; all-neutral {neutral_ok}"
        ),
    )
}

fn tree_digest(root: &Path) -> String {
    let mut files: Vec<_> = std::fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.file_name().unwrap().to_string_lossy().as_bytes());
        h.update([0]);
        h.update(std::fs::read(&f).unwrap());
        h.update([0]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let opts = SynthOptions {
        sentences: 4000,
        seed: 5,
        ..Default::default()
    };
    let extra = "[sampling.balance.general]\ntotal = 600\n[sampling.balance.thematic]\ntotal = 300\n";
    let cfg = fixture(dir.path(), &opts, extra);
    let mut digests = Vec::new();
    for (threads, out) in [(1, "out-a"), (4, "out-b")] {
        let mut c = cfg.clone();
        c.output_dir = dir.path().join(out);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| pipeline::run(&c)).unwrap();
        digests.push(tree_digest(&c.output_dir));
    }
    check(
        digests[0] == digests[1],
        format!("1 thread {}, 4 threads {}", &digests[0][..16], &digests[1][..16]),
    )
}

fn throughput() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path(), &SynthOptions { sentences: 200_000, seed: 1, ..Default::default() }, "");
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let rate = single.install(|| {
        let res = Resources::load(&cfg).unwrap();
        let started = Instant::now();
        let mut examples = 0;
        let stats = pipeline::stream_sentences(&cfg.corpus, cfg.ingest.batch_size, &res, |batch| {
            examples += res.annotate_batch(&batch)?.len();
            Ok(())
        })
        .unwrap();
        stats.sentences as f64 / started.elapsed().as_secs_f64()
    });
    drop(dir);

    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path(), &SynthOptions { sentences: 1_000_000, seed: 7, ..Default::default() }, "");
    let started = Instant::now();
    let manifest = pipeline::run(&cfg).unwrap();
    let elapsed = started.elapsed();
    let sizes: Vec<[u64; 3]> = ["general.jsonl", "thematic.jsonl"]
        .iter()
        .map(|f| {
            let by = &manifest.files[*f].by_label;
            Label::ALL.map(|l| by[l.as_str()] as u64)
        })
        .collect();
    check(
        rate >= 50_000.0 && elapsed < Duration::from_secs(300) && sizes == [[6000; 3], [3000; 3]],
        format!(
            "ingest+annotate {rate:.0} sentences/s on one thread; 1M sentences end to end in {elapsed:.1?} ({} sentences, {} examples, outputs {sizes:?})",
            manifest.ingest.sentences, manifest.annotated.examples
        ),
    )
}

const TWO_STEP: &str = r#"{
  "description": "additional sample, then the benchmark train set; weights frozen between stages",
  "stages": [
    {
      "name": "additional",
      "dataset_path": "additional.jsonl",
      "freeze_before": false
    },
    {
      "name": "benchmark_train",
      "dataset_path": "benchmark_train.jsonl",
      "freeze_before": true
    }
  ]
}"#;

const THREE_STEP: &str = r#"{
  "description": "general sample, then thematic sample, then the benchmark train set; weights frozen before each later stage",
  "stages": [
    {
      "name": "general",
      "dataset_path": "general.jsonl",
      "freeze_before": false
    },
    {
      "name": "thematic",
      "dataset_path": "thematic.jsonl",
      "freeze_before": true
    },
    {
      "name": "benchmark_train",
      "dataset_path": "benchmark_train.jsonl",
      "freeze_before": true
    }
  ]
}"#;

fn stage_plans() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    for f in ["additional.jsonl", "general.jsonl", "thematic.jsonl", "benchmark_train.jsonl"] {
        std::fs::write(dir.path().join(f), "{}\n").unwrap();
    }
    let paths = PlanPaths {
        additional: Some("additional.jsonl".into()),
        general: Some("general.jsonl".into()),
        thematic: Some("thematic.jsonl".into()),
        benchmark_train: Some("benchmark_train.jsonl".into()),
        mixed: None,
    };
    let render = |v| serde_json::to_string_pretty(&make_plan(v, &paths, dir.path()).unwrap()).unwrap();
    let two = render(PlanVariant::TwoStep) == TWO_STEP;
    let three = render(PlanVariant::ThreeStep) == THREE_STEP;
    let sizes_two = pipeline::balanced_outputs(PlanVariant::TwoStep);
    let sizes_three = pipeline::balanced_outputs(PlanVariant::ThreeStep);
    let sizes_ok = sizes_two == [("additional", 27_000)]
        && sizes_three == [("general", 18_000), ("thematic", 9000)];
    check(
        two && three && sizes_ok,
        format!("two_step golden {two}, three_step golden {three}, first-stage sizes {sizes_two:?} / {sizes_three:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("annotator oracle equivalence", annotator_oracle),
        ("distance/negation/quotation invariants", rule_invariants),
        ("dedup cosine bound and blocked-mode agreement", dedup_cosine_bound),
        ("balancing", balancing),
        ("metrics", metrics),
        ("determinism", determinism),
        ("throughput", throughput),
        ("stage plans", stage_plans),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
