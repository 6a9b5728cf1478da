//! Regenerates the synthetic timeline fixtures under `fixtures/`.
//!
//! cargo run -p occuprof --example make_fixtures -- fixtures

use std::path::PathBuf;

use occuprof::corpus::write_timelines;
use occuprof::synth::{planted_timelines, PlantedSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;

    let pool = PlantedSpec {
        users: 200,
        seed: 7,
        ..PlantedSpec::default()
    };
    write_timelines(
        dir.join("timelines_200.jsonl"),
        &planted_timelines(&pool, false),
    )?;

    let labeled = PlantedSpec {
        users: 120,
        tweets_per_user: 30,
        seed: 11,
        ..PlantedSpec::default()
    };
    write_timelines(
        dir.join("labeled_120.jsonl"),
        &planted_timelines(&labeled, true),
    )?;
    Ok(())
}
