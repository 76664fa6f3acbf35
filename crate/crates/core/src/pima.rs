//! Layout and missing-value convention of the Pima Indians diabetes data.

use crate::tabular::{Attribute, MissingPolicy, Schema};

pub const COLUMNS: [&str; 8] = [
    "pregnancies",
    "glucose",
    "blood_pressure",
    "skin_thickness",
    "insulin",
    "bmi",
    "pedigree",
    "age",
];

pub const CLASS: &str = "class";
pub const NEGATIVE: &str = "tested_negative";
pub const POSITIVE: &str = "tested_positive";

/// Columns where a literal zero is physiologically impossible.
pub const ZERO_IS_MISSING: [&str; 5] = [
    "glucose",
    "blood_pressure",
    "skin_thickness",
    "insulin",
    "bmi",
];

pub fn schema() -> Schema {
    let mut attrs: Vec<Attribute> = COLUMNS.iter().map(|c| Attribute::numeric(*c)).collect();
    attrs.push(Attribute::categorical(CLASS));
    Schema::new(attrs, COLUMNS.len(), vec![NEGATIVE.into(), POSITIVE.into()])
        .expect("static schema is valid")
}

pub fn missing_policy() -> MissingPolicy {
    ZERO_IS_MISSING
        .iter()
        .fold(MissingPolicy::none(), |p, c| p.with(c, &["0"]))
}
