use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use rsh::classify::{ClassifierKind, FeatureMask};
use rsh::cleanse::{self, CorrectionReport, NormalizationParams};
use rsh::ensemble::{feature_names, select_features, train_rsh, RshModel};
use rsh::featsel::GenerationStats;
use rsh::metrics::{baselines, cross_validate, render_table};
use rsh::rulemine::{self, RuleBook};
use rsh::tabular::{load_csv, read_csv, save_csv, Dataset, MissingPolicy};
use rsh::{Error, Stage};
use serde::{Deserialize, Serialize};

use crate::config::{DataSpec, PipelineConfig};
use crate::{Cli, Command};

/// Exit status when some prediction rows could not be served.
const EXIT_ROW_ERRORS: u8 = 3;

const BASELINE_KINDS: [ClassifierKind; 4] = [
    ClassifierKind::NaiveBayes,
    ClassifierKind::Knn,
    ClassifierKind::DecisionTree,
    ClassifierKind::Svm,
];

struct Ctx {
    cfg: PipelineConfig,
    data: DataSpec,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn load(&self, input: &Path, missing: &MissingPolicy) -> Result<Dataset> {
        load_csv(input, &self.data.schema, missing, &self.data.csv)
            .map_err(|e| e.at(Stage::Load))
            .with_context(|| format!("loading {}", input.display()))
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = PipelineConfig::load(cli.config.as_deref())?;
    let data = cfg.data.resolve()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(cfg.cv.seed),
        out: cli.out.unwrap_or_else(|| cfg.report.dir.clone()),
        data,
        cfg,
    };
    fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    match cli.command {
        Command::Clean { input, normalize } => clean(&ctx, &input, normalize),
        Command::Evaluate { input, baselines } => evaluate(&ctx, &input, baselines),
        Command::Train { input } => train(&ctx, &input),
        Command::Predict {
            model,
            records,
            repair,
        } => predict(&ctx, &model, &records, repair),
        Command::MineRules { input } => mine_rules(&ctx, &input),
        Command::SelectFeatures { input } => select(&ctx, &input),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, &text)
}

#[derive(Serialize)]
struct CleanReport {
    seed: u64,
    input_records: usize,
    retained_records: usize,
    pruned_records: usize,
    corrected_cells: usize,
    unresolved_cells: usize,
    crisp_rules: usize,
    fuzzy_rules: usize,
    stages: Vec<CorrectionReport>,
    normalization: Option<NormalizationParams>,
}

fn clean(ctx: &Ctx, input: &Path, normalize: bool) -> Result<ExitCode> {
    let raw = ctx.load(input, &ctx.data.missing)?;
    let rsh = ctx.cfg.rsh();
    let book = rulemine::mine(&raw, &rsh.rulemine).map_err(|e| e.at(Stage::MineRules))?;
    let cleansed = cleanse::cleanse(&raw, &book, &rsh.correction)?;
    let (data, normalization) = if normalize {
        let params = cleanse::zscore_fit(&cleansed.data).map_err(|e| e.at(Stage::Normalize))?;
        (cleanse::zscore_apply(&cleansed.data, &params), Some(params))
    } else {
        (cleansed.data, None)
    };
    let report = CleanReport {
        seed: ctx.seed,
        input_records: raw.len(),
        retained_records: data.len(),
        pruned_records: raw.len() - data.len(),
        corrected_cells: cleansed.reports.iter().map(|r| r.corrected_cells).sum(),
        unresolved_cells: cleansed.reports.iter().map(|r| r.unresolved.len()).sum(),
        crisp_rules: book.crisp.len(),
        fuzzy_rules: book.fuzzy.len(),
        stages: cleansed.reports,
        normalization,
    };
    save_csv(&data, ctx.path(&ctx.cfg.report.cleaned), &ctx.data.csv)?;
    write_json(&ctx.path(&ctx.cfg.report.corrections), &report)?;
    eprintln!(
        "{} records in, {} retained, {} cells corrected",
        report.input_records, report.retained_records, report.corrected_cells
    );
    Ok(ExitCode::SUCCESS)
}

fn evaluate(ctx: &Ctx, input: &Path, with_baselines: bool) -> Result<ExitCode> {
    let raw = ctx.load(input, &ctx.data.missing)?;
    let k = ctx.cfg.cv.k;
    let mut summary = cross_validate(&raw, &ctx.cfg.rsh(), k, ctx.seed, ctx.data.positive)?;
    if with_baselines {
        let literal = ctx.load(input, &MissingPolicy::none())?;
        summary.baselines = Some(baselines(
            &literal,
            &ctx.cfg.baselines,
            &BASELINE_KINDS,
            k,
            ctx.seed,
            ctx.data.positive,
        )?);
    }
    let table = render_table(&summary);
    write_json(&ctx.path(&ctx.cfg.report.summary), &summary)?;
    write(&ctx.path(&ctx.cfg.report.table), &table)?;
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

const BUNDLE_VERSION: u32 = 1;

/// A trained model plus the input layout it expects.
#[derive(Serialize, Deserialize)]
struct ModelBundle {
    version: u32,
    data: DataSpec,
    model: RshModel,
}

fn train(ctx: &Ctx, input: &Path) -> Result<ExitCode> {
    let raw = ctx.load(input, &ctx.data.missing)?;
    let model = train_rsh(&raw, &ctx.cfg.rsh(), ctx.seed)?;
    eprintln!(
        "trained on {} of {} records; required features: {}",
        model.training_records.len(),
        raw.len(),
        feature_names(&model.schema, &model.required_features()).join(", ")
    );
    let bundle = ModelBundle {
        version: BUNDLE_VERSION,
        data: ctx.data.clone(),
        model,
    };
    write_json(&ctx.path(&ctx.cfg.report.model), &bundle)?;
    Ok(ExitCode::SUCCESS)
}

fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let bundle: ModelBundle = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a model bundle", path.display()))?;
    if bundle.version != BUNDLE_VERSION {
        bail!("unsupported model bundle version {}", bundle.version);
    }
    // re-run the model's own checks
    RshModel::from_json(&serde_json::to_string(&bundle.model)?)?;
    Ok(bundle)
}

/// Reads prediction records. The class column may be left out entirely.
fn read_records(path: &Path, data: &DataSpec) -> Result<Dataset> {
    let schema = &data.schema;
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_slice());
    let rows: Vec<csv::StringRecord> = rdr
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| Error::from(e).at(Stage::Load))?;
    let without_class = schema.len() - 1;
    let short = match rows.first() {
        Some(first) if data.csv.has_header => {
            let names: Vec<&str> = first.iter().map(str::trim).collect();
            names.len() == without_class && !names.contains(&schema.name(schema.class_index()))
        }
        Some(first) => first.len() == without_class,
        None => false,
    };
    if !short {
        return read_csv(bytes.as_slice(), schema, &data.missing, &data.csv)
            .map_err(|e| e.at(Stage::Load).into());
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for (i, row) in rows.iter().enumerate() {
        let mut fields: Vec<&str> = row.iter().collect();
        if fields.len() == without_class {
            let class = if i == 0 && data.csv.has_header {
                schema.name(schema.class_index())
            } else {
                ""
            };
            fields.insert(schema.class_index(), class);
        }
        w.write_record(&fields)?;
    }
    let buf = w
        .into_inner()
        .map_err(|e| anyhow::anyhow!("buffering records: {e}"))?;
    read_csv(buf.as_slice(), schema, &data.missing, &data.csv).map_err(|e| e.at(Stage::Load).into())
}

fn predict(ctx: &Ctx, model_path: &Path, records: &Path, repair: bool) -> Result<ExitCode> {
    let bundle = load_bundle(model_path)?;
    let ds = read_records(records, &bundle.data)
        .with_context(|| format!("loading {}", records.display()))?;
    let model = &bundle.model;
    let labels = model.schema.class_labels();
    let mut out = String::new();
    let mut failed = 0usize;
    if !ds.is_empty() {
        out.push_str("row,label,error\n");
    }
    for (i, record) in ds.records.iter().enumerate() {
        let record = if repair {
            cleanse::repair_record(record, &ds, &model.rules, &model.config.correction)
        } else {
            record.clone()
        };
        let absent = model.missing_required(&record);
        if !absent.is_empty() {
            failed += 1;
            eprintln!("row {i}: missing required feature(s) {}", absent.join(", "));
            out.push_str(&format!("{i},,missing {}\n", absent.join(" ")));
            continue;
        }
        let label = model
            .predict_at(&record, i)
            .map_err(|e| e.at(Stage::Predict))?;
        out.push_str(&format!("{i},{},\n", labels[label]));
    }
    write(&ctx.path(&ctx.cfg.report.predictions), &out)?;
    if failed > 0 {
        eprintln!("{failed} of {} rows could not be predicted", ds.len());
        return Ok(ExitCode::from(EXIT_ROW_ERRORS));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RulesReport<'a> {
    seed: u64,
    input_records: usize,
    crisp_rules: usize,
    fuzzy_rules: usize,
    rules: &'a RuleBook,
}

fn mine_rules(ctx: &Ctx, input: &Path) -> Result<ExitCode> {
    let raw = ctx.load(input, &ctx.data.missing)?;
    let book = rulemine::mine(&raw, &ctx.cfg.rulemine).map_err(|e| e.at(Stage::MineRules))?;
    write_json(
        &ctx.path(&ctx.cfg.report.rules),
        &RulesReport {
            seed: ctx.seed,
            input_records: raw.len(),
            crisp_rules: book.crisp.len(),
            fuzzy_rules: book.fuzzy.len(),
            rules: &book,
        },
    )?;
    eprintln!(
        "{} crisp and {} fuzzy rules",
        book.crisp.len(),
        book.fuzzy.len()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SelectedMask {
    kind: ClassifierKind,
    mask: FeatureMask,
    selected_features: Vec<String>,
    fitness: f64,
    evaluations: usize,
    trace: Vec<GenerationStats>,
}

#[derive(Serialize)]
struct MasksReport {
    seed: u64,
    input_records: usize,
    members: Vec<SelectedMask>,
}

fn select(ctx: &Ctx, input: &Path) -> Result<ExitCode> {
    let raw = ctx.load(input, &ctx.data.missing)?;
    let members = select_features(&raw, &ctx.cfg.rsh(), ctx.seed)?
        .into_iter()
        .map(|(kind, o)| SelectedMask {
            kind,
            selected_features: feature_names(&raw.schema, &o.mask),
            mask: o.mask,
            fitness: o.fitness,
            evaluations: o.evaluations,
            trace: o.trace,
        })
        .collect::<Vec<_>>();
    for m in &members {
        eprintln!("{:<14} {} fitness {:.4}", m.kind.name(), m.mask, m.fitness);
    }
    write_json(
        &ctx.path(&ctx.cfg.report.masks),
        &MasksReport {
            seed: ctx.seed,
            input_records: raw.len(),
            members,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DataConfig;
    use rsh::tabular::Cell;

    #[test]
    fn records_may_omit_the_class_column() {
        let data = DataConfig::default().resolve().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        fs::write(
            &p,
            "pregnancies,glucose,blood_pressure,skin_thickness,insulin,bmi,pedigree,age\n1,0,70,20,80,30,0.5,40\n",
        )
        .unwrap();
        let ds = read_records(&p, &data).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.records[0].cells[1], Cell::Missing);
        assert_eq!(ds.records[0].cells[8], Cell::Missing);
    }
}
