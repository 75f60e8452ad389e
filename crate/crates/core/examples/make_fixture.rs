//! Writes a synthetic fixture (corpus, lexicon, gazetteers, run config) to a directory.
//!
//! `cargo run -p dsf-core --example make_fixture -- <dir> [sentences] [seed]`

use dsf_core::synth::{write_fixture, SynthOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = args.next().expect("usage: make_fixture <dir> [sentences] [seed]");
    let sentences = args.next().map_or(2000, |s| s.parse().expect("sentence count"));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed"));
    std::fs::create_dir_all(&dir).expect("create dir");
    let opts = SynthOptions { sentences, seed, ..Default::default() };
    let paths = write_fixture(dir.as_ref(), &opts, "").expect("write fixture");
    println!("{}", paths.config.display());
}
