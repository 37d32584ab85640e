//! Cold-start curves: how many peers does it take to predict a newcomer?
use comfortsense::eval::{coldstart_curve, ColdStartConfig, EvalConfig};
use comfortsense::features::FeatureSetSpec;
use comfortsense::forest::ForestConfig;
use comfortsense::fusion::{fuse_dataset, FusionConfig};
use comfortsense::preference::Dimension;
use comfortsense::synth::{Archetype, SimConfig, simulate};

fn main() -> comfortsense::Result<()> {
    // everyone shares one archetype, so peers are informative
    let sim = simulate(&SimConfig {
        n_occupants: 12,
        days: 10,
        archetypes: vec![Archetype::neutral()],
        archetype_weights: vec![1.0],
        ..Default::default()
    })?;
    let (fused, _) = fuse_dataset(&sim.votes, &sim.fixes, &sim.readings, &sim.wearables, &sim.zones, &FusionConfig::default());
    let cfg = EvalConfig {
        forest: ForestConfig { n_trees: 50, ..Default::default() },
        ..Default::default()
    };
    let cs = ColdStartConfig {
        permutations: 5,
        k_grid: Some(vec![1, 2, 5, 11]),
        max_targets: Some(2),
        ..Default::default()
    };
    let spec = FeatureSetSpec::default_named("fs1").expect("default set");
    let report = coldstart_curve(&fused, &spec, Dimension::Thermal, &cfg, &cs)?;
    for c in &report.curves {
        for p in &c.points {
            println!("{} k={:>2}: excluded {:.3}  included {:.3}", c.occupant_id, p.k, p.f1_excluded, p.f1_included);
        }
    }
    Ok(())
}
