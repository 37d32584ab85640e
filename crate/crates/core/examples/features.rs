//! Build the six default feature matrices and show what each contains.
use comfortsense::features::{build_matrix, encode_time_cyclical, FeatureContext, FeatureSetSpec, RoomEncoding, DEFAULT_TIMEZONE};
use comfortsense::fusion::{fuse_dataset, FusionConfig};
use comfortsense::preference::Dimension;
use comfortsense::synth::{simulate, SimConfig};

fn main() -> comfortsense::Result<()> {
    let sim = simulate(&SimConfig {
        n_occupants: 8,
        days: 5,
        ..Default::default()
    })?;
    let (fused, _) = fuse_dataset(&sim.votes, &sim.fixes, &sim.readings, &sim.wearables, &sim.zones, &FusionConfig::default());
    let ctx = FeatureContext::new(&fused, DEFAULT_TIMEZONE, RoomEncoding::Ratios)?;

    let t = &fused[0].vote.timestamp;
    println!("{t}: hour/day-of-week cyclical = {:.3?}", encode_time_cyclical(t, DEFAULT_TIMEZONE));
    for spec in FeatureSetSpec::defaults() {
        let m = build_matrix(&fused, &spec, Dimension::Thermal, &ctx)?;
        println!("{}: {} rows x {} features", spec.name, m.rows.len(), m.feature_names.len());
    }
    Ok(())
}
