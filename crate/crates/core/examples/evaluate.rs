//! Individual vs grouped models over the default feature sets, F1-micro.
use comfortsense::eval::{eval_grouped, eval_individual, EvalConfig};
use comfortsense::features::FeatureSetSpec;
use comfortsense::forest::ForestConfig;
use comfortsense::fusion::{fuse_dataset, FusionConfig};
use comfortsense::preference::Dimension;
use comfortsense::synth::{simulate, SimConfig};

fn main() -> comfortsense::Result<()> {
    let sim = simulate(&SimConfig::default().with_response_noise(0.1))?;
    let (fused, _) = fuse_dataset(&sim.votes, &sim.fixes, &sim.readings, &sim.wearables, &sim.zones, &FusionConfig::default());
    let cfg = EvalConfig {
        forest: ForestConfig { n_trees: 100, ..Default::default() },
        ..Default::default()
    };
    println!("{:<5} {:<8} {:>10} {:>8}", "set", "dim", "individual", "grouped");
    for spec in FeatureSetSpec::defaults() {
        for dim in Dimension::ALL {
            let ind = eval_individual(&fused, &spec, dim, &cfg)?;
            let grp = eval_grouped(&fused, &spec, dim, &cfg)?;
            println!(
                "{:<5} {:<8} {:>10.3} {:>8.3}",
                spec.name,
                dim,
                ind.f1_micro().unwrap_or(f64::NAN),
                grp.f1_micro().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
