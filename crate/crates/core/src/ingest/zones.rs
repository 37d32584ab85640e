//! Building zones and the planar geometry used for geofencing.

use std::collections::BTreeSet;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub zone_id: String,
    pub floor: i32,
    /// Open ring (the closing vertex is not repeated), meters.
    pub polygon: Vec<(f64, f64)>,
    pub label: String,
}

impl Zone {
    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        point_in_polygon(&self.polygon, x, y)
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.polygon.len() as f64;
        let (sx, sy) = self
            .polygon
            .iter()
            .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
        (sx / n, sy / n)
    }
}

/// Validated set of zones, ordered by `zone_id`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneMap {
    zones: Vec<Zone>,
}

impl ZoneMap {
    pub fn new(mut zones: Vec<Zone>) -> Result<ZoneMap> {
        let mut seen = BTreeSet::new();
        for zone in &mut zones {
            if zone.zone_id.is_empty() {
                return Err(Error::InvalidZoneMap("empty zone_id".into()));
            }
            if !seen.insert(zone.zone_id.clone()) {
                return Err(Error::InvalidZoneMap(format!(
                    "duplicate zone_id {:?}",
                    zone.zone_id
                )));
            }
            if zone.polygon.len() > 1 && zone.polygon.first() == zone.polygon.last() {
                zone.polygon.pop();
            }
            if !is_simple_polygon(&zone.polygon) {
                return Err(Error::InvalidZoneMap(format!(
                    "polygon of zone {:?} is not simple",
                    zone.zone_id
                )));
            }
        }
        zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
        Ok(ZoneMap { zones })
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn get(&self, zone_id: &str) -> Option<&Zone> {
        self.zones
            .binary_search_by(|z| z.zone_id.as_str().cmp(zone_id))
            .ok()
            .map(|i| &self.zones[i])
    }

    pub fn contains_id(&self, zone_id: &str) -> bool {
        self.get(zone_id).is_some()
    }

    /// Zone on `floor` containing `(x, y)`. Overlaps resolve to the smallest
    /// polygon; an exact area tie between the smallest candidates is an error.
    pub fn locate(&self, x: f64, y: f64, floor: i32) -> Result<Option<&Zone>> {
        let mut hits: Vec<&Zone> = self
            .zones
            .iter()
            .filter(|z| z.floor == floor && z.contains(x, y))
            .collect();
        if hits.len() <= 1 {
            return Ok(hits.pop());
        }
        hits.sort_by(|a, b| a.area().total_cmp(&b.area()));
        if hits[0].area() == hits[1].area() {
            let smallest = hits[0].area();
            return Err(Error::AmbiguousZone {
                x,
                y,
                floor,
                zones: hits
                    .iter()
                    .filter(|z| z.area() == smallest)
                    .map(|z| z.zone_id.clone())
                    .collect(),
            });
        }
        Ok(Some(hits[0]))
    }

    pub fn from_geojson(text: &str) -> Result<ZoneMap> {
        let bad = |msg: &str| Error::InvalidZoneMap(msg.to_string());
        let doc: Value = serde_json::from_str(text)?;
        let features = doc
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("expected a FeatureCollection with a features array"))?;
        let mut zones = Vec::with_capacity(features.len());
        for feature in features {
            let props = feature
                .get("properties")
                .ok_or_else(|| bad("feature without properties"))?;
            let zone_id = props
                .get("zone_id")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("feature without string zone_id"))?
                .to_string();
            let floor = props
                .get("floor")
                .and_then(Value::as_i64)
                .ok_or_else(|| bad("feature without integer floor"))? as i32;
            let label = props
                .get("label")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string();
            let geometry = feature
                .get("geometry")
                .ok_or_else(|| bad("feature without geometry"))?;
            if geometry.get("type").and_then(Value::as_str) != Some("Polygon") {
                return Err(bad("only Polygon geometries are supported"));
            }
            let rings = geometry
                .get("coordinates")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("polygon without coordinates"))?;
            if rings.len() != 1 {
                return Err(Error::InvalidZoneMap(format!(
                    "zone {zone_id:?}: polygons with holes are not supported"
                )));
            }
            let polygon = rings[0]
                .as_array()
                .ok_or_else(|| bad("ring is not an array"))?
                .iter()
                .map(|pt| {
                    let xy = pt.as_array().filter(|a| a.len() >= 2);
                    match xy.map(|a| (a[0].as_f64(), a[1].as_f64())) {
                        Some((Some(x), Some(y))) => Ok((x, y)),
                        _ => Err(bad("vertex is not a numeric [x, y] pair")),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            zones.push(Zone {
                zone_id,
                floor,
                polygon,
                label,
            });
        }
        ZoneMap::new(zones)
    }

    pub fn load(path: &Path) -> Result<ZoneMap> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::MalformedFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        ZoneMap::from_geojson(&text)
    }

    pub fn to_geojson(&self) -> String {
        let features: Vec<Value> = self
            .zones
            .iter()
            .map(|z| {
                let mut ring: Vec<Value> = z.polygon.iter().map(|&(x, y)| json!([x, y])).collect();
                if let Some(first) = ring.first().cloned() {
                    ring.push(first);
                }
                json!({
                    "type": "Feature",
                    "properties": {"zone_id": z.zone_id, "floor": z.floor, "label": z.label},
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                })
            })
            .collect();
        let doc = json!({"type": "FeatureCollection", "features": features});
        serde_json::to_string_pretty(&doc).expect("zone map serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_geojson()).map_err(|e| Error::io(path, e))
    }
}

/// Unsigned shoelace area.
pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (x0, y0) = poly[i];
            let (x1, y1) = poly[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum();
    twice.abs() / 2.0
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    cross.abs() <= EPS * len.max(1.0)
        && p.0 >= a.0.min(b.0) - EPS
        && p.0 <= a.0.max(b.0) + EPS
        && p.1 >= a.1.min(b.1) - EPS
        && p.1 <= a.1.max(b.1) + EPS
}

/// Even-odd containment; points on the boundary count as inside.
pub fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if on_segment((xj, yj), (xi, yi), (x, y)) {
            return true;
        }
        if (yi > y) != (yj > y) {
            let x_cross = xi + (y - yi) * (xj - xi) / (yj - yi);
            if x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orientation(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> i8 {
    let v = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    if v.abs() <= EPS {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let (o1, o2) = (orientation(p1, p2, q1), orientation(p1, p2, q2));
    let (o3, o4) = (orientation(q1, q2, p1), orientation(q1, q2, p2));
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, p2, q2))
        || (o3 == 0 && on_segment(q1, q2, p1))
        || (o4 == 0 && on_segment(q1, q2, p2))
}

/// At least three vertices, non-zero area, and no two non-adjacent edges touch.
pub fn is_simple_polygon(poly: &[(f64, f64)]) -> bool {
    let n = poly.len();
    if n < 3 || polygon_area(poly) <= EPS {
        return false;
    }
    for i in 0..n {
        let a = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let b = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a.0, a.1, b.0, b.1) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(id: &str, x0: f64, y0: f64, side: f64) -> Zone {
        Zone {
            zone_id: id.into(),
            floor: 1,
            polygon: vec![(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)],
            label: id.into(),
        }
    }

    #[test]
    fn centroid_of_square_resolves() {
        let map = ZoneMap::new(vec![square("A", 0.0, 0.0, 10.0)]).unwrap();
        let hit = map.locate(5.0, 5.0, 1).unwrap().unwrap();
        assert_eq!(hit.zone_id, "A");
    }

    #[test]
    fn outside_every_polygon_is_none() {
        let map = ZoneMap::new(vec![square("A", 0.0, 0.0, 10.0)]).unwrap();
        assert!(map.locate(15.0, 5.0, 1).unwrap().is_none());
        // right floor matters
        assert!(map.locate(5.0, 5.0, 2).unwrap().is_none());
    }

    #[test]
    fn shared_edge_of_equal_zones_is_ambiguous() {
        let map = ZoneMap::new(vec![square("A", 0.0, 0.0, 10.0), square("B", 10.0, 0.0, 10.0)]).unwrap();
        match map.locate(10.0, 5.0, 1) {
            Err(Error::AmbiguousZone { zones, .. }) => assert_eq!(zones, ["A", "B"]),
            other => panic!("expected AmbiguousZone, got {other:?}"),
        }
    }

    #[test]
    fn overlap_resolves_to_smallest() {
        let map = ZoneMap::new(vec![square("hall", 0.0, 0.0, 20.0), square("booth", 2.0, 2.0, 3.0)]).unwrap();
        assert_eq!(map.locate(3.0, 3.0, 1).unwrap().unwrap().zone_id, "booth");
        assert_eq!(map.locate(15.0, 15.0, 1).unwrap().unwrap().zone_id, "hall");
    }

    #[test]
    fn boundary_and_vertex_are_inside() {
        let z = square("A", 0.0, 0.0, 4.0);
        assert!(z.contains(0.0, 2.0));
        assert!(z.contains(4.0, 4.0));
        assert!(!z.contains(4.000001, 2.0));
    }

    #[test]
    fn concave_polygon_even_odd() {
        // U shape: the notch at (2, 3) is outside
        let u = vec![(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (3.0, 4.0), (3.0, 1.0), (1.0, 1.0), (1.0, 4.0), (0.0, 4.0)];
        assert!(point_in_polygon(&u, 0.5, 3.0));
        assert!(!point_in_polygon(&u, 2.0, 3.0));
        assert!(point_in_polygon(&u, 2.0, 0.5));
    }

    #[test]
    fn bowtie_is_rejected() {
        let bowtie = vec![(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)];
        assert!(!is_simple_polygon(&bowtie));
        let zone = Zone { zone_id: "x".into(), floor: 0, polygon: bowtie, label: String::new() };
        assert!(ZoneMap::new(vec![zone]).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = ZoneMap::new(vec![square("A", 0.0, 0.0, 1.0), square("A", 5.0, 0.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidZoneMap(_)));
    }

    #[test]
    fn geojson_round_trip() {
        let map = ZoneMap::new(vec![square("office-1", 0.0, 0.0, 8.5), square("pantry", 8.5, 0.0, 4.25)]).unwrap();
        let back = ZoneMap::from_geojson(&map.to_geojson()).unwrap();
        assert_eq!(map, back);
    }
}
