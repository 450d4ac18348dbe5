use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The 14 CheXpert observations in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    Atelectasis,
    Cardiomegaly,
    Consolidation,
    Edema,
    EnlargedCardiomediastinum,
    Fracture,
    LungLesion,
    LungOpacity,
    NoFinding,
    PleuralEffusion,
    PleuralOther,
    Pneumonia,
    Pneumothorax,
    SupportDevices,
}

pub const OBSERVATION_COUNT: usize = 14;

impl Observation {
    pub const ALL: [Observation; OBSERVATION_COUNT] = [
        Observation::Atelectasis,
        Observation::Cardiomegaly,
        Observation::Consolidation,
        Observation::Edema,
        Observation::EnlargedCardiomediastinum,
        Observation::Fracture,
        Observation::LungLesion,
        Observation::LungOpacity,
        Observation::NoFinding,
        Observation::PleuralEffusion,
        Observation::PleuralOther,
        Observation::Pneumonia,
        Observation::Pneumothorax,
        Observation::SupportDevices,
    ];

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Name as it appears in image descriptions ("Enlarged Cardiomediastinum").
    pub fn display_name(self) -> &'static str {
        match self {
            Observation::Atelectasis => "Atelectasis",
            Observation::Cardiomegaly => "Cardiomegaly",
            Observation::Consolidation => "Consolidation",
            Observation::Edema => "Edema",
            Observation::EnlargedCardiomediastinum => "Enlarged Cardiomediastinum",
            Observation::Fracture => "Fracture",
            Observation::LungLesion => "Lung Lesion",
            Observation::LungOpacity => "Lung Opacity",
            Observation::NoFinding => "No Finding",
            Observation::PleuralEffusion => "Pleural Effusion",
            Observation::PleuralOther => "Pleural Other",
            Observation::Pneumonia => "Pneumonia",
            Observation::Pneumothorax => "Pneumothorax",
            Observation::SupportDevices => "Support Devices",
        }
    }

    /// Column key used in CSV sidecars ("enlarged_cardiomediastinum").
    pub fn key(self) -> &'static str {
        match self {
            Observation::Atelectasis => "atelectasis",
            Observation::Cardiomegaly => "cardiomegaly",
            Observation::Consolidation => "consolidation",
            Observation::Edema => "edema",
            Observation::EnlargedCardiomediastinum => "enlarged_cardiomediastinum",
            Observation::Fracture => "fracture",
            Observation::LungLesion => "lung_lesion",
            Observation::LungOpacity => "lung_opacity",
            Observation::NoFinding => "no_finding",
            Observation::PleuralEffusion => "pleural_effusion",
            Observation::PleuralOther => "pleural_other",
            Observation::Pneumonia => "pneumonia",
            Observation::Pneumothorax => "pneumothorax",
            Observation::SupportDevices => "support_devices",
        }
    }

    /// Short column header used in per-disease tables, where one exists.
    pub fn abbreviation(self) -> Option<&'static str> {
        match self {
            Observation::Cardiomegaly => Some("CMG"),
            Observation::Edema => Some("Edema"),
            Observation::Consolidation => Some("Consol"),
            Observation::Atelectasis => Some("Atelect"),
            Observation::PleuralEffusion => Some("PE"),
            _ => None,
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown observation {0:?}")]
pub struct UnknownObservation(pub String);

impl FromStr for Observation {
    type Err = UnknownObservation;

    /// Accepts the display name, the snake_case key, or either in any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_lowercase().replace([' ', '-'], "_");
        Observation::ALL
            .into_iter()
            .find(|o| o.key() == wanted)
            .ok_or_else(|| UnknownObservation(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_matches_indices() {
        for (i, o) in Observation::ALL.iter().enumerate() {
            assert_eq!(o.index(), i);
        }
        assert_eq!(Observation::ALL[0].display_name(), "Atelectasis");
        assert_eq!(Observation::ALL[13].display_name(), "Support Devices");
    }

    #[test]
    fn parses_display_names_and_keys() {
        assert_eq!("Pleural Effusion".parse::<Observation>().unwrap(), Observation::PleuralEffusion);
        assert_eq!("lung_opacity".parse::<Observation>().unwrap(), Observation::LungOpacity);
        assert!("spleen".parse::<Observation>().is_err());
    }
}
