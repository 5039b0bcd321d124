//! Write the bundled synthetic corpus: `cargo run --example make_synthetic -- <path> [seed]`.

use poptopic::corpus::write_record_lines;
use poptopic::synth::{generate, SyntheticSpec};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/synthetic_5topics.jsonl".into());
    let seed: u64 = args.next().map_or(1000, |s| s.parse().expect("seed must be an integer"));
    let posts = generate(&SyntheticSpec::default(), seed).posts();
    write_record_lines(std::io::BufWriter::new(std::fs::File::create(&path)?), &posts)
}
