//! Point-in-polygon zone assignment on a two-room floor plan.
use comfortsense::ingest::{Zone, ZoneMap};

fn main() -> comfortsense::Result<()> {
    let zones = ZoneMap::new(vec![
        Zone {
            zone_id: "office".into(),
            floor: 3,
            polygon: vec![(0.0, 0.0), (10.0, 0.0), (10.0, 8.0), (0.0, 8.0)],
            label: "open office".into(),
        },
        Zone {
            zone_id: "pantry".into(),
            floor: 3,
            // L-shaped
            polygon: vec![(10.0, 0.0), (16.0, 0.0), (16.0, 8.0), (13.0, 8.0), (13.0, 3.0), (10.0, 3.0)],
            label: "pantry".into(),
        },
    ])?;
    for (x, y) in [(2.0, 2.0), (11.0, 1.0), (11.0, 6.0), (30.0, 1.0)] {
        let hit = zones.locate(x, y, 3)?.map(|z| z.zone_id.as_str());
        println!("({x:>4}, {y:>4}) -> {}", hit.unwrap_or("outside"));
    }
    println!("{}", zones.to_geojson());
    Ok(())
}
