//! Join votes to location, room sensors and wearable samples.
use comfortsense::fusion::{fuse_dataset, FusionConfig};
use comfortsense::synth::{simulate, SimConfig};

fn main() -> comfortsense::Result<()> {
    let sim = simulate(&SimConfig {
        n_occupants: 6,
        days: 3,
        wearable_dropout: 0.3,
        ..Default::default()
    })?;
    for window in [60, 300, 900] {
        let cfg = FusionConfig {
            env_window: window,
            ..Default::default()
        };
        let (records, stats) = fuse_dataset(&sim.votes, &sim.fixes, &sim.readings, &sim.wearables, &sim.zones, &cfg);
        println!(
            "env window {window:>4} s: {} records, {} env-matched, {} wearable-matched",
            records.len(),
            stats.env_matched,
            stats.wearable_matched
        );
    }
    Ok(())
}
