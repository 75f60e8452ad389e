//! Runs ingest and annotation only, reporting sentences per second.
//!
//! `cargo run --release -p dsf-core --example ingest_annotate -- <run.toml>`

use std::time::Instant;

use dsf_core::pipeline::{self, Resources, RunConfig};

fn main() {
    let path = std::env::args().nth(1).expect("usage: ingest_annotate <run.toml>");
    let cfg = RunConfig::load(path.as_ref(), &[]).expect("config");
    let res = Resources::load(&cfg).expect("resources");
    let t = Instant::now();
    let mut examples = 0;
    let stats = pipeline::stream_sentences(&cfg.corpus, cfg.ingest.batch_size, &res, |b| {
        examples += res.annotate_batch(&b)?.len();
        Ok(())
    })
    .expect("ingest");
    let secs = t.elapsed().as_secs_f64();
    println!(
        "{} sentences, {examples} examples, {secs:.2}s, {:.0} sentences/s",
        stats.sentences,
        stats.sentences as f64 / secs
    );
}
