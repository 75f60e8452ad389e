//! Times each pipeline stage on a run config.
//!
//! `cargo run --release -p dsf-core --example stage_times -- <run.toml>`

use std::time::Instant;

use dsf_core::dedup::{dedup, similar_pairs, TfIdfModel};
use dsf_core::ingest::Tokenizer;
use dsf_core::pipeline::{self, Resources, RunConfig};

fn main() {
    let path = std::env::args().nth(1).expect("usage: stage_times <run.toml>");
    let cfg = RunConfig::load(path.as_ref(), &[]).expect("config");
    let t = Instant::now();
    let res = Resources::load(&cfg).expect("resources");
    println!("load      {:>8.2?}", t.elapsed());

    let t = Instant::now();
    let mut n = 0;
    let stats = pipeline::stream_sentences(&cfg.corpus, cfg.ingest.batch_size, &res, |b| {
        n += b.len();
        Ok(())
    })
    .expect("ingest");
    let ingest = t.elapsed();
    println!("ingest    {ingest:>8.2?}  {} sentences", stats.sentences);

    let t = Instant::now();
    let mut examples = Vec::new();
    pipeline::stream_sentences(&cfg.corpus, cfg.ingest.batch_size, &res, |b| {
        examples.extend(res.annotate_batch(&b)?);
        Ok(())
    })
    .expect("annotate");
    let both = t.elapsed();
    println!("ingest+annotate {both:>8.2?}  {:.0} sentences/s", n as f64 / both.as_secs_f64());

    let t = Instant::now();
    let texts: Vec<&str> = examples.iter().map(|e| e.text.as_str()).collect();
    let model = TfIdfModel::fit(&texts).expect("fit");
    let tok = Tokenizer::default();
    let vectors: Vec<_> = texts.iter().map(|x| model.vectorize(&tok, x)).collect();
    println!("  tf-idf  {:>8.2?}", t.elapsed());
    let t = Instant::now();
    let group: Vec<usize> = (0..vectors.len()).collect();
    let pairs = similar_pairs(&vectors, &group, cfg.dedup.threshold, cfg.dedup.blocking);
    println!("  pairs   {:>8.2?}  {} over threshold", t.elapsed(), pairs.len());

    let t = Instant::now();
    let out = dedup(examples, &cfg.dedup.to_config(cfg.seed)).expect("dedup");
    println!("dedup     {:>8.2?}  removed {}", t.elapsed(), out.removed.len());
}
