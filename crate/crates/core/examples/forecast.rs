//! Weekly preference forecast for one zone, with low-support flags.
use comfortsense::eval::{zone_forecast, EvalConfig, ForecastConfig};
use comfortsense::forest::ForestConfig;
use comfortsense::fusion::{fuse_dataset, FusionConfig};
use comfortsense::preference::Dimension;
use comfortsense::synth::{simulate, SimConfig};

fn main() -> comfortsense::Result<()> {
    let sim = simulate(&SimConfig::default())?;
    let (fused, _) = fuse_dataset(&sim.votes, &sim.fixes, &sim.readings, &sim.wearables, &sim.zones, &FusionConfig::default());
    let cfg = EvalConfig {
        forest: ForestConfig { n_trees: 100, ..Default::default() },
        ..Default::default()
    };
    let fc = ForecastConfig {
        grid_minutes: 120,
        ..Default::default()
    };
    let f = zone_forecast(&fused, "z01", Dimension::Thermal, &cfg, &fc)?;
    println!("{} {}: {:?}", f.zone_id, f.dimension, f.class_labels);
    // Monday only
    for p in f.points.iter().take(12) {
        let flag = if p.low_confidence { "  (no nearby votes)" } else { "" };
        println!("{} {:.2?} support {}{flag}", p.timestamp.format("%a %H:%M"), p.probabilities, p.support);
    }
    Ok(())
}
