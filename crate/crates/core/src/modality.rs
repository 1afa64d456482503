use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One evidence source of a video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Metadata,
    Transcript,
    Thumbnail,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Metadata, Modality::Transcript, Modality::Thumbnail];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Metadata => "metadata",
            Modality::Transcript => "transcript",
            Modality::Thumbnail => "thumbnail",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "metadata" => Ok(Modality::Metadata),
            "transcript" => Ok(Modality::Transcript),
            "thumbnail" => Ok(Modality::Thumbnail),
            other => Err(Error::Config(format!(
                "unknown modality `{other}` (expected metadata, transcript or thumbnail)"
            ))),
        }
    }
}
