//! Tendency clustering of occupants, scored against the generator's archetypes.
use comfortsense::fusion::{fuse_dataset, FusionConfig};
use comfortsense::synth::{simulate, SimConfig};
use comfortsense::tendency::{adjusted_rand_index, kmeans_fit, vote_ratios, ClusterSpace, SubjectKind};

fn main() -> comfortsense::Result<()> {
    let sim = simulate(&SimConfig::default())?;
    let (fused, _) = fuse_dataset(&sim.votes, &sim.fixes, &sim.readings, &sim.wearables, &sim.zones, &FusionConfig::default());
    let vectors = vote_ratios(&fused, SubjectKind::Occupant);

    // one cluster per response class; nobody asks for louder, so 9 becomes 8
    let joint = kmeans_fit(&vectors, ClusterSpace::Joint, 9, 0, 10)?;
    println!("joint space: k = {} (requested {}), dropped {:?}", joint.k, joint.requested_k, joint.dropped_classes);

    let three = kmeans_fit(&vectors, ClusterSpace::Joint, 3, 0, 10)?;
    let predicted: Vec<usize> = vectors.iter().map(|v| three.assignments[&v.subject_id]).collect();
    println!("k = 3 vs archetypes: ARI {:.3}", adjusted_rand_index(&predicted, &sim.truth.labels()));
    Ok(())
}
