use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

/// Identifier of a resource profile or technology: ASCII letters, digits and `_`.
///
/// The same id links a capacity-factor column of the input data to the catalog entry that
/// prices it, and is embedded in solver variable names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct TechId(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid id `{0}`: use ASCII letters, digits and `_` only")]
pub struct InvalidId(pub String);

impl TechId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidId> {
        let id = id.into();
        if !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            Ok(TechId(id))
        } else {
            Err(InvalidId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TechId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for TechId {
    type Err = InvalidId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TechId::new(s)
    }
}

impl<'de> Deserialize<'de> for TechId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        TechId::new(s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_characters() {
        assert!(TechId::new("wind_2").is_ok());
        assert!(TechId::new("").is_err());
        assert!(TechId::new("pv-1").is_err());
        assert!(serde_json::from_str::<TechId>("\"a b\"").is_err());
    }
}
