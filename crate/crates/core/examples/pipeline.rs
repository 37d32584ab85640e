//! The whole staged run on a generated study, driven by a TOML config.
use comfortsense::pipeline::{read_manifest, run_pipeline, RunConfig};

fn main() -> comfortsense::Result<()> {
    let out = std::env::temp_dir().join("comfortsense-example-run");
    let mut cfg = RunConfig::from_toml(
        r#"
        seed = 3
        [simulate]
        n_occupants = 12
        days = 7
        [forest]
        n_trees = 50
        [cluster]
        k = 3
        [coldstart]
        dimensions = ["thermal"]
        "#,
    )?;
    cfg.out_dir = out.clone();
    for s in run_pipeline(&cfg)? {
        println!("{:>9}: {}", s.stage.name(), s.summary);
    }
    let manifest = read_manifest(&out)?;
    println!("{} files hashed in {}", manifest.files.len(), out.join("manifest.json").display());
    Ok(())
}
