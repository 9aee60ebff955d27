use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PromotionType {
    #[serde(rename = "development-to-staging")]
    DevelopmentToStaging,
    #[serde(rename = "staging-to-production")]
    StagingToProduction,
}

impl PromotionType {
    pub fn as_str(self) -> &'static str {
        match self {
            PromotionType::DevelopmentToStaging => "development-to-staging",
            PromotionType::StagingToProduction => "staging-to-production",
        }
    }
}

impl fmt::Display for PromotionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromotionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "development-to-staging" => Ok(PromotionType::DevelopmentToStaging),
            "staging-to-production" => Ok(PromotionType::StagingToProduction),
            other => Err(format!(
                "unknown promotion type `{other}` (expected development-to-staging or staging-to-production)"
            )),
        }
    }
}

/// Branch names of the three environments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchNames {
    pub development: String,
    pub staging: String,
    pub production: String,
}

impl Default for BranchNames {
    fn default() -> Self {
        Self {
            development: "development".into(),
            staging: "staging".into(),
            production: "production".into(),
        }
    }
}

impl BranchNames {
    /// (source, target) for a promotion.
    pub fn endpoints(&self, promotion: PromotionType) -> (&str, &str) {
        match promotion {
            PromotionType::DevelopmentToStaging => (&self.development, &self.staging),
            PromotionType::StagingToProduction => (&self.staging, &self.production),
        }
    }
}
