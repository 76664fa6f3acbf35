use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rsh::classify::{ClassifierParams, KnnParams, TreeParams};
use rsh::cleanse::CorrectionConfig;
use rsh::ensemble::BoostConfig;
use rsh::featsel::GaConfig;
use rsh::rulemine::RuleMineConfig;
use rsh::tabular::{Attribute, CsvOptions, MissingPolicy, Schema};
use rsh::{pima, RshConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Pima,
}

/// Input layout. Without `attributes` the Pima preset is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub preset: Option<Preset>,
    pub attributes: Vec<Attribute>,
    /// Name of the class attribute; defaults to the last attribute.
    pub class: Option<String>,
    pub class_labels: Vec<String>,
    /// Defaults to the second declared label.
    pub positive_label: Option<String>,
    /// Raw values read as MISSING, per column. Defaults to the preset's
    /// sentinels, none for an explicit schema.
    pub missing: Option<MissingPolicy>,
    pub has_header: bool,
    pub missing_token: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            preset: None,
            attributes: Vec::new(),
            class: None,
            class_labels: Vec::new(),
            positive_label: None,
            missing: None,
            has_header: true,
            missing_token: String::new(),
        }
    }
}

/// Resolved input layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub schema: Schema,
    pub missing: MissingPolicy,
    pub csv: CsvOptions,
    pub positive: usize,
}

impl DataConfig {
    pub fn resolve(&self) -> Result<DataSpec> {
        let (schema, default_missing) = if self.attributes.is_empty() {
            if self.class.is_some() || !self.class_labels.is_empty() {
                bail!("data.class and data.class_labels need data.attributes");
            }
            (pima::schema(), pima::missing_policy())
        } else {
            if self.preset.is_some() {
                bail!("data.preset and data.attributes are mutually exclusive");
            }
            let class_index = match &self.class {
                Some(name) => self
                    .attributes
                    .iter()
                    .position(|a| &a.name == name)
                    .with_context(|| format!("data.class `{name}` is not a declared attribute"))?,
                None => self.attributes.len().saturating_sub(1),
            };
            let schema = Schema::new(
                self.attributes.clone(),
                class_index,
                self.class_labels.clone(),
            )?;
            (schema, MissingPolicy::none())
        };
        let missing = self.missing.clone().unwrap_or(default_missing);
        missing.validate(&schema)?;
        let labels = schema.class_labels();
        let positive = match &self.positive_label {
            Some(l) => schema
                .label_index(l)
                .with_context(|| format!("data.positive_label `{l}` is not a class label"))?,
            None if labels.len() >= 2 => 1,
            None => bail!("at least two class labels are needed"),
        };
        Ok(DataSpec {
            schema,
            missing,
            csv: CsvOptions {
                has_header: self.has_header,
                missing_token: self.missing_token.clone(),
            },
            positive,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { k: 10, seed: 0 }
    }
}

/// Output directory and file names inside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub dir: PathBuf,
    pub cleaned: String,
    pub corrections: String,
    pub summary: String,
    pub table: String,
    pub rules: String,
    pub masks: String,
    pub model: String,
    pub predictions: String,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            dir: PathBuf::from("rsh-out"),
            cleaned: "cleaned.csv".into(),
            corrections: "correction-report.json".into(),
            summary: "eval-summary.json".into(),
            table: "table.txt".into(),
            rules: "rules.json".into(),
            masks: "masks.json".into(),
            model: "model.json".into(),
            predictions: "predictions.csv".into(),
        }
    }
}

impl ReportConfig {
    fn validate(&self) -> Result<()> {
        for (key, name) in [
            ("cleaned", &self.cleaned),
            ("corrections", &self.corrections),
            ("summary", &self.summary),
            ("table", &self.table),
            ("rules", &self.rules),
            ("masks", &self.masks),
            ("model", &self.model),
            ("predictions", &self.predictions),
        ] {
            let p = Path::new(name);
            if name.is_empty() || p.components().count() != 1 || p.is_absolute() {
                bail!("report.{key} must be a plain file name, got `{name}`");
            }
        }
        Ok(())
    }
}

/// Parameters of the plain classifiers rerun by `evaluate --baselines`.
pub fn baseline_params() -> ClassifierParams {
    ClassifierParams {
        knn: KnnParams { k: 1 },
        decision_tree: TreeParams {
            max_depth: 5,
            min_leaf: 15,
        },
        ..ClassifierParams::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub rulemine: RuleMineConfig,
    pub correction: CorrectionConfig,
    pub classifiers: ClassifierParams,
    pub ga: GaConfig,
    pub boost: BoostConfig,
    pub baselines: ClassifierParams,
    pub cv: CvConfig,
    pub report: ReportConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: DataConfig::default(),
            rulemine: RuleMineConfig::default(),
            correction: CorrectionConfig::default(),
            classifiers: ClassifierParams::default(),
            ga: GaConfig::default(),
            boost: BoostConfig::default(),
            baselines: baseline_params(),
            cv: CvConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                Self::from_toml(&text)
                    .with_context(|| format!("invalid configuration {}", p.display()))
            }
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rsh().validate()?;
        self.baselines.validate()?;
        self.data.resolve()?;
        if self.cv.k < 2 {
            bail!("cv.k must be at least 2, got {}", self.cv.k);
        }
        self.report.validate()
    }

    pub fn rsh(&self) -> RshConfig {
        RshConfig {
            rulemine: self.rulemine.clone(),
            correction: self.correction.clone(),
            classifiers: self.classifiers.clone(),
            ga: self.ga.clone(),
            boost: self.boost.clone(),
        }
    }
}
