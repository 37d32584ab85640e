//! Generate a small synthetic study and write it as input files.
use comfortsense::synth::{simulate, write_simulation, SimConfig};

fn main() -> comfortsense::Result<()> {
    let cfg = SimConfig {
        n_occupants: 9,
        days: 7,
        seed: 7,
        ..Default::default()
    };
    let out = simulate(&cfg)?;
    let dir = std::env::temp_dir().join("comfortsense-example-sim");
    let paths = write_simulation(&dir, &out)?;
    println!("{} votes from {} occupants", out.votes.len(), out.truth.occupants.len());
    for o in out.truth.occupants.iter().take(3) {
        println!("  {} is {} (home zone {})", o.occupant_id, o.archetype, o.home_zone);
    }
    println!("files written to {}", paths.votes.parent().unwrap().display());
    Ok(())
}
