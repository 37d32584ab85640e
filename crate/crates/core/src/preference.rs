//! Comfort dimensions and the three-way preference vocabulary.
//!
//! Every dimension has the same shape: a "less" response, `no_change`, and a
//! "more" response. The wire strings differ per dimension ("prefer_cooler" is
//! only valid for thermal votes), so parsing always happens against a
//! [`Dimension`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Thermal,
    Light,
    Noise,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Thermal, Dimension::Light, Dimension::Noise];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Thermal => "thermal",
            Dimension::Light => "light",
            Dimension::Noise => "noise",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Wire strings for this dimension's classes in [`Preference::ALL`] order.
    pub fn class_labels(self) -> [&'static str; 3] {
        Preference::ALL.map(|p| p.label(self))
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thermal" => Ok(Dimension::Thermal),
            "light" => Ok(Dimension::Light),
            "noise" => Ok(Dimension::Noise),
            other => Err(format!("unknown dimension {other:?}")),
        }
    }
}

/// One response on one dimension. `Less` is cooler / dimmer / quieter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Preference {
    Less,
    NoChange,
    More,
}

impl Preference {
    pub const ALL: [Preference; 3] = [Preference::Less, Preference::NoChange, Preference::More];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Preference> {
        Preference::ALL.get(i).copied()
    }

    pub fn label(self, dim: Dimension) -> &'static str {
        match (dim, self) {
            (_, Preference::NoChange) => "no_change",
            (Dimension::Thermal, Preference::Less) => "prefer_cooler",
            (Dimension::Thermal, Preference::More) => "prefer_warmer",
            (Dimension::Light, Preference::Less) => "prefer_dimmer",
            (Dimension::Light, Preference::More) => "prefer_brighter",
            (Dimension::Noise, Preference::Less) => "prefer_quieter",
            (Dimension::Noise, Preference::More) => "prefer_louder",
        }
    }

    /// Parses a wire string, rejecting classes that belong to another dimension.
    pub fn parse(dim: Dimension, s: &str) -> Result<Preference, String> {
        Preference::ALL
            .into_iter()
            .find(|p| p.label(dim) == s)
            .ok_or_else(|| "invalid class for dimension".to_string())
    }
}

/// A (dimension, preference) pair; nine in total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResponseClass {
    pub dimension: Dimension,
    pub preference: Preference,
}

impl ResponseClass {
    pub fn all() -> impl Iterator<Item = ResponseClass> {
        Dimension::ALL.into_iter().flat_map(|dimension| {
            Preference::ALL.into_iter().map(move |preference| ResponseClass {
                dimension,
                preference,
            })
        })
    }

    /// Position in the nine-class layout (dimension-major).
    pub fn index(self) -> usize {
        self.dimension.index() * 3 + self.preference.index()
    }

    /// Column name, e.g. `thermal_prefer_cooler`.
    pub fn column(self) -> String {
        format!("{}_{}", self.dimension, self.preference.label(self.dimension))
    }

    /// Short label: the bare wire string for directional classes (they are
    /// unique across dimensions), `<dim>_no_change` otherwise.
    pub fn label(self) -> String {
        match self.preference {
            Preference::NoChange => self.column(),
            p => p.label(self.dimension).to_string(),
        }
    }
}

/// The six directional responses used by the Room and History features.
pub const DIRECTIONAL: [ResponseClass; 6] = [
    ResponseClass { dimension: Dimension::Thermal, preference: Preference::Less },
    ResponseClass { dimension: Dimension::Thermal, preference: Preference::More },
    ResponseClass { dimension: Dimension::Light, preference: Preference::Less },
    ResponseClass { dimension: Dimension::Light, preference: Preference::More },
    ResponseClass { dimension: Dimension::Noise, preference: Preference::Less },
    ResponseClass { dimension: Dimension::Noise, preference: Preference::More },
];

/// Suffixes for directional ratio features, in [`DIRECTIONAL`] order.
pub const DIRECTIONAL_SUFFIXES: [&str; 6] =
    ["cooler", "warmer", "dimmer", "brighter", "quieter", "louder"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip_per_dimension() {
        for dim in Dimension::ALL {
            for p in Preference::ALL {
                assert_eq!(Preference::parse(dim, p.label(dim)), Ok(p));
            }
        }
    }

    #[test]
    fn cross_dimension_class_is_rejected() {
        let err = Preference::parse(Dimension::Thermal, "prefer_louder").unwrap_err();
        assert_eq!(err, "invalid class for dimension");
        assert!(Preference::parse(Dimension::Light, "Prefer_Dimmer").is_err());
    }

    #[test]
    fn nine_classes_in_dimension_major_order() {
        let cols: Vec<String> = ResponseClass::all().map(|c| c.column()).collect();
        assert_eq!(cols.len(), 9);
        assert_eq!(cols[0], "thermal_prefer_cooler");
        assert_eq!(cols[4], "light_no_change");
        assert_eq!(cols[8], "noise_prefer_louder");
        for (i, c) in ResponseClass::all().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn directional_labels() {
        let labels: Vec<String> = DIRECTIONAL.iter().map(|c| c.label()).collect();
        assert_eq!(
            labels,
            ["prefer_cooler", "prefer_warmer", "prefer_dimmer", "prefer_brighter", "prefer_quieter", "prefer_louder"]
        );
    }
}
