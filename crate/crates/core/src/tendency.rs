//! Vote-ratio profiles for occupants and rooms, and k-means over them.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FusedRecord;
use crate::preference::{Dimension, ResponseClass};

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubjectKind {
    Occupant,
    Room,
}

impl SubjectKind {
    pub fn name(self) -> &'static str {
        match self {
            SubjectKind::Occupant => "occupant",
            SubjectKind::Room => "room",
        }
    }
}

/// Share of a subject's votes falling in each of the nine response classes,
/// in [`ResponseClass::all`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TendencyVector {
    pub subject_id: String,
    pub kind: SubjectKind,
    pub ratios: [f64; 9],
    pub vote_count: usize,
}

impl TendencyVector {
    pub fn dimension(&self, dim: Dimension) -> &[f64] {
        &self.ratios[dim.index() * 3..dim.index() * 3 + 3]
    }
}

/// Per-subject class counts, nine per subject.
pub(crate) fn class_counts<'a>(
    records: impl IntoIterator<Item = &'a FusedRecord>,
    key: impl Fn(&'a FusedRecord) -> &'a str,
) -> BTreeMap<&'a str, [usize; 9]> {
    let mut counts: BTreeMap<&str, [usize; 9]> = BTreeMap::new();
    for r in records {
        let c = counts.entry(key(r)).or_insert([0; 9]);
        for dim in Dimension::ALL {
            c[dim.index() * 3 + r.preference(dim).index()] += 1;
        }
    }
    counts
}

/// One vector per subject, sorted by subject id.
pub fn vote_ratios(records: &[FusedRecord], kind: SubjectKind) -> Vec<TendencyVector> {
    fn occupant(r: &FusedRecord) -> &str {
        &r.vote.occupant_id
    }
    fn room(r: &FusedRecord) -> &str {
        &r.zone_id
    }
    let key: fn(&FusedRecord) -> &str = match kind {
        SubjectKind::Occupant => occupant,
        SubjectKind::Room => room,
    };
    class_counts(records, key)
        .into_iter()
        .map(|(subject, counts)| {
            // every vote answers all three dimensions
            let total: usize = counts[..3].iter().sum();
            TendencyVector {
                subject_id: subject.to_string(),
                kind,
                ratios: counts.map(|c| c as f64 / total as f64),
                vote_count: total,
            }
        })
        .collect()
}

pub fn room_profiles(records: &[FusedRecord]) -> Vec<TendencyVector> {
    vote_ratios(records, SubjectKind::Room)
}

/// Which ratio columns feed the clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterSpace {
    /// All nine classes together.
    Joint,
    /// The three classes of one dimension.
    Dimension(Dimension),
}

impl ClusterSpace {
    fn classes(self) -> Vec<ResponseClass> {
        match self {
            ClusterSpace::Joint => ResponseClass::all().collect(),
            ClusterSpace::Dimension(d) => ResponseClass::all().filter(|c| c.dimension == d).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub space: ClusterSpace,
    pub requested_k: usize,
    pub k: usize,
    /// Class labels of the columns kept, in centroid coordinate order.
    pub classes: Vec<String>,
    pub dropped_classes: Vec<String>,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: BTreeMap<String, usize>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
    pub winning_restart: usize,
}

impl ClusterModel {
    /// Nearest centroid for an arbitrary tendency vector (ties to the lower index).
    pub fn assign(&self, v: &TendencyVector) -> usize {
        let kept = self.kept_indices();
        let p: Vec<f64> = kept.iter().map(|&i| v.ratios[i]).collect();
        nearest(&p, &self.centroids).0
    }

    fn kept_indices(&self) -> Vec<usize> {
        self.space
            .classes()
            .into_iter()
            .filter(|c| self.classes.contains(&c.label()))
            .map(|c| c.index())
            .collect()
    }
}

/// Clusters `vectors` in `space`.
///
/// Classes nobody voted for are dropped from the feature space first. When
/// `k` equals the number of classes in the space (one cluster per possible
/// response), it shrinks by the number of dropped classes; an explicit other
/// `k` is kept as given.
pub fn kmeans_fit(
    vectors: &[TendencyVector],
    space: ClusterSpace,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel> {
    if vectors.is_empty() {
        return Err(Error::DegenerateInput("no vectors to cluster".into()));
    }
    let classes = space.classes();
    let (kept, dropped): (Vec<ResponseClass>, Vec<ResponseClass>) = classes
        .iter()
        .partition(|c| vectors.iter().any(|v| v.ratios[c.index()] > 0.0));
    if kept.is_empty() {
        return Err(Error::DegenerateInput("every class is empty".into()));
    }
    let effective_k = if k == classes.len() { k - dropped.len() } else { k };

    // order by position, not by id, so relabeling subjects cannot change the result
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let point = |i: usize| -> Vec<f64> { kept.iter().map(|c| vectors[i].ratios[c.index()]).collect() };
    let points: Vec<Vec<f64>> = (0..vectors.len()).map(point).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| vectors[a].subject_id.cmp(&vectors[b].subject_id))
    });
    let ordered: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();

    let fit = kmeans(&ordered, effective_k, seed, restarts, MAX_ITERATIONS)?;
    let assignments = order
        .iter()
        .zip(&fit.labels)
        .map(|(&i, &label)| (vectors[i].subject_id.clone(), label))
        .collect();
    Ok(ClusterModel {
        space,
        requested_k: k,
        k: effective_k,
        classes: kept.iter().map(|c| c.label()).collect(),
        dropped_classes: dropped.iter().map(|c| c.label()).collect(),
        centroids: fit.centroids,
        assignments,
        inertia: fit.inertia,
        inertia_trace: fit.inertia_trace,
        winning_restart: fit.restart,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub restart: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assign_all(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (i, d) = nearest(p, centroids);
            inertia += d;
            i
        })
        .collect();
    (labels, inertia)
}

fn kmeans_pp<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 {
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
        }
        // distinct points >= k, so some point is still uncovered
        let pick = pick.expect("an uncovered point remains");
        let c = points[pick].clone();
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize, restart: usize) -> KMeansFit {
    let dim = points[0].len();
    let k = centroids.len();
    let (mut labels, mut inertia) = assign_all(points, &centroids);
    let mut trace = vec![inertia];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            // an emptied cluster keeps its old centroid
            if n > 0 {
                *c = s.into_iter().map(|x| x / n as f64).collect();
            }
        }
        let (new_labels, new_inertia) = assign_all(points, &centroids);
        trace.push(new_inertia);
        inertia = new_inertia;
        if new_labels == labels {
            break;
        }
        labels = new_labels;
    }
    KMeansFit {
        centroids,
        labels,
        inertia,
        inertia_trace: trace,
        iterations,
        restart,
    }
}

/// Best of `restarts` k-means++ initialisations followed by Lloyd iterations.
/// Restart `r` is seeded with `seed + r`; the lowest inertia wins, ties to the
/// lowest restart index.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize, max_iter: usize) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::DegenerateInput("k must be at least 1".into()));
    }
    let mut distinct: Vec<&Vec<f64>> = points.iter().collect();
    distinct.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::DegenerateInput(format!(
            "{} distinct points for k = {k}",
            distinct.len()
        )));
    }
    let fits: Vec<KMeansFit> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            lloyd(points, kmeans_pp(points, k, &mut rng), max_iter, r)
        })
        .collect();
    Ok(fits
        .into_iter()
        .reduce(|best, f| if f.inertia < best.inertia { f } else { best })
        .expect("at least one restart"))
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len();
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sum_rows * sum_cols / choose2(n as u64);
    let max = (sum_rows + sum_cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

pub fn write_tendencies(path: &Path, vectors: &[TendencyVector]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["subject".to_string(), "kind".to_string()];
    header.extend(ResponseClass::all().map(|c| c.column()));
    header.push("vote_count".into());
    w.write_record(&header)?;
    for v in vectors {
        let mut row = vec![v.subject_id.clone(), v.kind.name().to_string()];
        row.extend(v.ratios.iter().map(|r| r.to_string()));
        row.push(v.vote_count.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FeedbackVote;
    use crate::preference::Preference::{self, *};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn rec(occ: &str, zone: &str, i: usize, t: Preference, l: Preference, n: Preference) -> FusedRecord {
        FusedRecord {
            vote: FeedbackVote {
                vote_id: format!("{occ}-{zone}-{i}"),
                occupant_id: occ.into(),
                timestamp: Utc.timestamp_opt(1_700_000_000 + i as i64 * 60, 0).unwrap(),
                thermal: t,
                light: l,
                noise: n,
                zone_id: None,
            },
            zone_id: zone.into(),
            env: None,
            near_body_temperature: None,
            heart_rate: None,
        }
    }

    #[test]
    fn thermal_ratios_direct_count() {
        let recs: Vec<FusedRecord> = [Less, Less, NoChange, More]
            .iter()
            .enumerate()
            .map(|(i, &t)| rec("a", "z", i, t, NoChange, NoChange))
            .collect();
        let v = &vote_ratios(&recs, SubjectKind::Occupant)[0];
        assert_eq!(v.dimension(Dimension::Thermal), [0.5, 0.25, 0.25]);
        assert_eq!(v.dimension(Dimension::Light), [0.0, 1.0, 0.0]);
        assert_eq!(v.vote_count, 4);
    }

    #[test]
    fn room_profiles_examples() {
        let recs = vec![
            rec("a", "z1", 0, NoChange, NoChange, Less),
            rec("b", "z1", 1, NoChange, NoChange, NoChange),
            rec("a", "z2", 2, More, NoChange, NoChange),
            rec("c", "z3", 3, NoChange, NoChange, Less),
            rec("c", "z3", 4, NoChange, NoChange, NoChange),
        ];
        let rooms = room_profiles(&recs);
        assert_eq!(rooms[0].dimension(Dimension::Noise), [0.5, 0.5, 0.0]);
        assert_eq!(rooms[1].dimension(Dimension::Thermal), [0.0, 0.0, 1.0]);
        // same multiset, same vector
        assert_eq!(rooms[0].ratios, rooms[2].ratios);
    }

    fn tv(id: &str, ratios: [f64; 9]) -> TendencyVector {
        TendencyVector { subject_id: id.into(), kind: SubjectKind::Occupant, ratios, vote_count: 1 }
    }

    #[test]
    fn empty_class_drops_column_and_k() {
        let vs: Vec<TendencyVector> = (0..12)
            .map(|i| {
                let a = i as f64 / 12.0;
                let b = (i % 5) as f64 / 5.0;
                let c = (i % 3) as f64 / 3.0;
                tv(&format!("s{i}"), [a, 1.0 - a, 0.0, b / 2.0, 1.0 - b, b / 2.0, c, 1.0 - c, 0.0])
            })
            .collect();
        let m = kmeans_fit(&vs, ClusterSpace::Joint, 9, 7, 10).unwrap();
        assert_eq!(m.dropped_classes, ["prefer_warmer", "prefer_louder"]);
        assert_eq!(m.k, 7);
        assert_eq!(m.centroids[0].len(), 7);

        // a k that is not the class count stays put
        let m = kmeans_fit(&vs, ClusterSpace::Joint, 3, 7, 10).unwrap();
        assert_eq!(m.k, 3);

        let m = kmeans_fit(&vs, ClusterSpace::Dimension(Dimension::Noise), 3, 7, 10).unwrap();
        assert_eq!((m.k, m.dropped_classes.clone()), (2, vec!["prefer_louder".to_string()]));
    }

    #[test]
    fn k_equal_to_distinct_points_gives_zero_inertia() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let fit = kmeans(&pts, 3, 1, 5, 300).unwrap();
        assert_eq!(fit.inertia, 0.0);
        assert_eq!(fit.labels[1], fit.labels[3]);
        let mut used = fit.labels.clone();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), 3);
        assert!(matches!(kmeans(&pts, 4, 1, 5, 300), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn ari_known_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        // sklearn: adjusted_rand_score([0,0,1,1],[0,0,1,2]) = 0.5714285714285715
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 2]) - 4.0 / 7.0).abs() < 1e-12);
        // sklearn: adjusted_rand_score([0,0,1,2],[0,1,0,1]) = -0.2857142857142857
        assert!((adjusted_rand_index(&[0, 0, 1, 2], &[0, 1, 0, 1]) + 2.0 / 7.0).abs() < 1e-12);
        // sklearn: adjusted_rand_score([0,0,0,1,1,2],[1,1,0,0,2,2]) = 0.07407407407407407
        assert!((adjusted_rand_index(&[0, 0, 0, 1, 1, 2], &[1, 1, 0, 0, 2, 2]) - 2.0 / 27.0).abs() < 1e-12);
    }

    fn arb_points() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 6..40)
    }

    proptest! {
        #[test]
        fn inertia_trace_never_increases(points in arb_points(), seed in 0u64..1000) {
            let fit = kmeans(&points, 3, seed, 1, 300).unwrap();
            for w in fit.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", fit.inertia_trace);
            }
            let recomputed: f64 = points.iter().zip(&fit.labels).map(|(p, &l)| sq_dist(p, &fit.centroids[l])).sum();
            prop_assert!((recomputed - fit.inertia).abs() < 1e-9);
        }

        #[test]
        fn restarts_are_deterministic(points in arb_points(), seed in 0u64..1000) {
            let a = kmeans(&points, 3, seed, 4, 300).unwrap();
            let b = kmeans(&points, 3, seed, 4, 300).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn best_of_restarts_matches_serial_minimum(points in arb_points(), seed in 0u64..1000) {
            let best = kmeans(&points, 3, seed, 5, 300).unwrap();
            let serial_min = (0..5)
                .map(|r| kmeans(&points, 3, seed + r, 1, 300).unwrap().inertia)
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(best.inertia, serial_min);
        }

        #[test]
        fn relabeling_subjects_keeps_partition(raw in prop::collection::vec(prop::collection::vec(0u32..5, 3), 8..25), seed in 0u64..100) {
            let vs: Vec<TendencyVector> = raw.iter().enumerate().map(|(i, c)| {
                let t: u32 = c.iter().sum::<u32>().max(1);
                let mut r = [0.0; 9];
                for (j, &x) in c.iter().enumerate() { r[j] = x as f64 / t as f64; }
                if c.iter().all(|&x| x == 0) { r[1] = 1.0; }
                r[4] = 1.0; r[7] = 1.0;
                tv(&format!("a{i:03}"), r)
            }).collect();
            let Ok(m1) = kmeans_fit(&vs, ClusterSpace::Joint, 2, seed, 3) else { return Ok(()); };
            let renamed: Vec<TendencyVector> = vs.iter().rev().enumerate()
                .map(|(i, v)| TendencyVector { subject_id: format!("b{:03}", 999 - i), ..v.clone() })
                .collect();
            let m2 = kmeans_fit(&renamed, ClusterSpace::Joint, 2, seed, 3).unwrap();
            let l1: Vec<usize> = vs.iter().map(|v| m1.assignments[&v.subject_id]).collect();
            let l2: Vec<usize> = (0..vs.len()).map(|i| m2.assignments[&format!("b{:03}", 999 - (vs.len() - 1 - i))]).collect();
            prop_assert_eq!(adjusted_rand_index(&l1, &l2), 1.0);
            prop_assert_eq!(m1.inertia, m2.inertia);
        }

        #[test]
        fn ratios_are_count_scale_invariant(prefs in prop::collection::vec((0usize..3, 0usize..3, 0usize..3), 1..30), scale in 1usize..5) {
            let p = |i| Preference::from_index(i).unwrap();
            let once: Vec<FusedRecord> = prefs.iter().enumerate().map(|(i, &(t, l, n))| rec("a", "z", i, p(t), p(l), p(n))).collect();
            let scaled: Vec<FusedRecord> = (0..scale).flat_map(|s| prefs.iter().enumerate().map(move |(i, &(t, l, n))| rec("a", "z", s * 1000 + i, p(t), p(l), p(n)))).collect();
            let a = &vote_ratios(&once, SubjectKind::Occupant)[0];
            let b = &vote_ratios(&scaled, SubjectKind::Occupant)[0];
            for (x, y) in a.ratios.iter().zip(&b.ratios) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            for dim in Dimension::ALL {
                prop_assert!((a.dimension(dim).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
