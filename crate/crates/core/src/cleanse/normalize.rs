use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{AttributeKind, Cell, Dataset, Record};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub column: usize,
    pub name: String,
    pub mean: f64,
    /// Population standard deviation; always > 0.
    pub std: f64,
}

/// Per-column z-score parameters for the numeric non-class columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub columns: Vec<ColumnStats>,
}

impl NormalizationParams {
    /// Identity transform (no columns normalized).
    pub fn identity() -> Self {
        NormalizationParams {
            columns: Vec::new(),
        }
    }

    pub fn apply_record(&self, record: &Record) -> Record {
        let mut out = record.clone();
        for s in &self.columns {
            if let Cell::Num(v) = out.cells[s.column] {
                out.cells[s.column] = Cell::Num((v - s.mean) / s.std);
            }
        }
        out
    }
}

pub fn zscore_fit(ds: &Dataset) -> Result<NormalizationParams> {
    if ds.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "z-score fit needs at least 2 records, got {}",
            ds.len()
        )));
    }
    let mut columns = Vec::new();
    for c in ds.schema.columns_of_kind(AttributeKind::Numeric) {
        let mut values = Vec::with_capacity(ds.len());
        for (i, r) in ds.records.iter().enumerate() {
            values.push(r.cells[c].as_num().ok_or_else(|| Error::MissingValue {
                record: i,
                column: ds.schema.name(c).to_string(),
            })?);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) {
            return Err(Error::ConstantColumn(ds.schema.name(c).to_string()));
        }
        columns.push(ColumnStats {
            column: c,
            name: ds.schema.name(c).to_string(),
            mean,
            std,
        });
    }
    Ok(NormalizationParams { columns })
}

/// Applies `params` (not `ds`'s own statistics). Missing cells stay missing.
pub fn zscore_apply(ds: &Dataset, params: &NormalizationParams) -> Dataset {
    ds.with_records(ds.records.iter().map(|r| params.apply_record(r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Attribute, Schema};

    fn column(values: &[f64]) -> Dataset {
        let schema = Schema::new(
            vec![Attribute::numeric("x"), Attribute::categorical("class")],
            1,
            vec!["k".into()],
        )
        .unwrap();
        let recs = values
            .iter()
            .map(|&v| Record::new(vec![Cell::Num(v), Cell::text("k")]))
            .collect();
        Dataset::new(schema, recs).unwrap()
    }

    #[test]
    fn two_four_six() {
        let ds = column(&[2.0, 4.0, 6.0]);
        let p = zscore_fit(&ds).unwrap();
        assert_eq!(p.columns[0].mean, 4.0);
        assert!((p.columns[0].std - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let z = zscore_apply(&ds, &p);
        assert_eq!(z.records[1].cells[0], Cell::Num(0.0));
        assert!((z.records[2].cells[0].as_num().unwrap() - 1.224_744_871_391_589).abs() < 1e-12);
        assert_eq!(z.records[0].cells[1], Cell::text("k"));
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            zscore_fit(&column(&[1.0])),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            zscore_fit(&column(&[3.0, 3.0])),
            Err(Error::ConstantColumn(_))
        ));
        let mut ds = column(&[1.0, 2.0]);
        ds.records[0].cells[0] = Cell::Missing;
        assert!(matches!(
            zscore_fit(&ds),
            Err(Error::MissingValue { record: 0, .. })
        ));
    }

    #[test]
    fn apply_uses_supplied_params() {
        let train = column(&[0.0, 10.0]);
        let p = zscore_fit(&train).unwrap();
        let test = column(&[5.0, 15.0]);
        let z = zscore_apply(&test, &p);
        assert_eq!(z.records[0].cells[0], Cell::Num(0.0));
        assert_eq!(z.records[1].cells[0], Cell::Num(2.0));
    }
}
