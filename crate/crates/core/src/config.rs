use serde::{Deserialize, Serialize};

use crate::classify::ClassifierParams;
use crate::cleanse::CorrectionConfig;
use crate::ensemble::BoostConfig;
use crate::error::Result;
use crate::featsel::GaConfig;
use crate::rulemine::RuleMineConfig;

/// Every tunable of the training pipeline. Defaults reproduce the
/// reference settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RshConfig {
    pub rulemine: RuleMineConfig,
    pub correction: CorrectionConfig,
    pub classifiers: ClassifierParams,
    pub ga: GaConfig,
    pub boost: BoostConfig,
}

impl RshConfig {
    pub fn validate(&self) -> Result<()> {
        self.rulemine.validate()?;
        self.correction.validate()?;
        self.classifiers.validate()?;
        self.ga.validate()?;
        self.boost.validate()
    }
}
