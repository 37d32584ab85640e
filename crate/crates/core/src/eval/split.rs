use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::fusion::{sort_records, FusedRecord};

/// Occupants with fewer votes are left out of model evaluation.
pub const MIN_VOTES: usize = 5;
pub const TRAIN_FRACTION: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Train,
    Test,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Train => "train",
            Side::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "train" => Some(Side::Train),
            "test" => Some(Side::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedOccupant {
    pub occupant_id: String,
    pub votes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupantSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Per-occupant chronological partition of vote ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub occupants: BTreeMap<String, OccupantSplit>,
    pub excluded: Vec<ExcludedOccupant>,
    #[serde(skip)]
    sides: HashMap<String, Side>,
}

impl SplitPlan {
    pub fn side(&self, vote_id: &str) -> Option<Side> {
        self.sides.get(vote_id).copied()
    }

    pub fn occupant_ids(&self) -> impl Iterator<Item = &str> {
        self.occupants.keys().map(String::as_str)
    }

    /// Records of planned occupants, tagged, in input order.
    pub fn tag<'a>(&self, records: &'a [FusedRecord]) -> Vec<(&'a FusedRecord, Side)> {
        records
            .iter()
            .filter_map(|r| self.side(&r.vote.vote_id).map(|s| (r, s)))
            .collect()
    }

    pub fn records_on(&self, records: &[FusedRecord], side: Side) -> Vec<FusedRecord> {
        records
            .iter()
            .filter(|r| self.side(&r.vote.vote_id) == Some(side))
            .cloned()
            .collect()
    }
}

/// Number of training votes for an occupant with `n` votes: `ceil(0.6 n)`.
pub fn train_count(n: usize) -> usize {
    // integer form of ceil(0.6 n) avoids float rounding at exact multiples
    (3 * n).div_ceil(5)
}

/// First 60% of each occupant's votes (by time) train, the rest test.
pub fn temporal_split(records: &[FusedRecord]) -> SplitPlan {
    let mut sorted: Vec<FusedRecord> = records.to_vec();
    sort_records(&mut sorted);
    let mut by_occupant: BTreeMap<&str, Vec<&FusedRecord>> = BTreeMap::new();
    for r in &sorted {
        by_occupant.entry(r.vote.occupant_id.as_str()).or_default().push(r);
    }
    let mut plan = SplitPlan {
        occupants: BTreeMap::new(),
        excluded: Vec::new(),
        sides: HashMap::new(),
    };
    for (occ, mut recs) in by_occupant {
        if recs.len() < MIN_VOTES {
            plan.excluded.push(ExcludedOccupant {
                occupant_id: occ.to_string(),
                votes: recs.len(),
            });
            continue;
        }
        recs.sort_by(|a, b| (a.vote.timestamp, &a.vote.vote_id).cmp(&(b.vote.timestamp, &b.vote.vote_id)));
        let cut = train_count(recs.len());
        let ids = |rs: &[&FusedRecord]| rs.iter().map(|r| r.vote.vote_id.clone()).collect::<Vec<_>>();
        let split = OccupantSplit {
            train: ids(&recs[..cut]),
            test: ids(&recs[cut..]),
        };
        for id in &split.train {
            plan.sides.insert(id.clone(), Side::Train);
        }
        for id in &split.test {
            plan.sides.insert(id.clone(), Side::Test);
        }
        plan.occupants.insert(occ.to_string(), split);
    }
    if !plan.excluded.is_empty() {
        log::info!("{} occupant(s) with fewer than {MIN_VOTES} votes left out of evaluation", plan.excluded.len());
    }
    plan
}
