//! Fit a random forest, predict, and round-trip the binary model file.
use comfortsense::forest::{fit_forest, ForestConfig, RandomForestModel, TrainingSet};

fn main() -> comfortsense::Result<()> {
    // prefer_warmer below 22, prefer_cooler above 26
    let temps: Vec<f64> = (0..300).map(|i| 18.0 + i as f64 * 0.04).collect();
    let data = TrainingSet {
        feature_names: vec!["temperature".into()],
        class_labels: vec!["prefer_warmer".into(), "no_change".into(), "prefer_cooler".into()],
        x: temps.iter().map(|&t| vec![t]).collect(),
        y: temps.iter().map(|&t| if t < 22.0 { 0 } else if t > 26.0 { 2 } else { 1 }).collect(),
    };
    let model = fit_forest(&data, &ForestConfig { n_trees: 100, ..Default::default() })?;
    let probe = vec![vec![19.0], vec![24.0], vec![29.0]];
    for (row, p) in probe.iter().zip(model.predict_proba(&probe)?) {
        println!("{:>4.1} C -> {:.2?}", row[0], p);
    }
    let path = std::env::temp_dir().join("comfortsense-example.csrf");
    model.save(&path)?;
    let back = RandomForestModel::load(&path)?;
    println!("reloaded {} trees, identical: {}", back.trees.len(), back == model);
    Ok(())
}
