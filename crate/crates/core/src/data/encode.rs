use crate::data::{AttributeKind, Dataset, RawTable, Schema, MISSING_CODE};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Cell spellings treated as absent.
pub const MISSING_TOKENS: &[&str] = &["", "NA"];

pub fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell.trim())
}

/// Label-encodes the feature columns of `raw` and maps the target column to
/// {0, 1}. Missing cells become -1 before encoding; categorical values become
/// their 0-based index in the schema's category list.
pub fn label_encode(raw: &RawTable, schema: &Schema) -> Result<Dataset> {
    let column_of = |name: &str| {
        raw.column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let features: Vec<_> = schema.features().collect();
    let feature_cols = features
        .iter()
        .map(|a| column_of(&a.name))
        .collect::<Result<Vec<_>>>()?;
    let target = schema.target_attribute()?;
    let target_col = column_of(&target.name)?;

    let k = features.len();
    let mut data = Vec::with_capacity(raw.len() * k);
    let mut labels = Vec::with_capacity(raw.len());
    for (r, row) in raw.rows.iter().enumerate() {
        if row.len() != raw.columns.len() {
            return Err(Error::Data(format!(
                "row {r} has {} cells, expected {}",
                row.len(),
                raw.columns.len()
            )));
        }
        for (attr, &c) in features.iter().zip(&feature_cols) {
            let cell = row[c].trim();
            let value = if is_missing(cell) {
                MISSING_CODE
            } else {
                match attr.kind {
                    AttributeKind::Categorical => attr.category_index(cell).ok_or_else(|| Error::UnknownCategory {
                        attribute: attr.name.clone(),
                        value: cell.to_string(),
                    })? as f64,
                    AttributeKind::Numeric => match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() => v,
                        _ => {
                            return Err(Error::Parse {
                                row: r,
                                column: attr.name.clone(),
                                value: cell.to_string(),
                            })
                        }
                    },
                }
            };
            data.push(value);
        }

        let cell = row[target_col].trim();
        if is_missing(cell) {
            return Err(Error::Data(format!("row {r}: missing {}", target.name)));
        }
        let label = target.category_index(cell).ok_or_else(|| Error::UnknownCategory {
            attribute: target.name.clone(),
            value: cell.to_string(),
        })?;
        labels.push(label as u8);
    }

    let features_m = Matrix::new(raw.len(), k, data)?;
    Dataset::new(features_m, labels, features.into_iter().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_schema() -> Schema {
        Schema::from_json(
            r#"{"version":1,"target":"DX","attributes":[
            {"name":"SPEECH","kind":"categorical","categories":["normal","mute","irrelevant"],"is_feature":true},
            {"name":"DUR","kind":"numeric","is_feature":true},
            {"name":"AGE","kind":"numeric","is_feature":false},
            {"name":"DX","kind":"categorical","categories":["negative","schizophrenia"],"is_feature":false}]}"#,
        )
        .unwrap()
    }

    fn table(rows: &[[&str; 4]]) -> RawTable {
        RawTable {
            columns: ["SPEECH", "DUR", "AGE", "DX"].map(String::from).to_vec(),
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    #[test]
    fn category_index_encoding() {
        let ds = label_encode(&table(&[["mute", "3", "40", "schizophrenia"]]), &toy_schema()).unwrap();
        assert_eq!(ds.features.as_slice(), &[1.0, 3.0]);
        assert_eq!(ds.labels, vec![1]);
        assert_eq!(ds.feature_names(), vec!["SPEECH", "DUR"]);
    }

    #[test]
    fn missing_cells_become_minus_one() {
        let raw = table(&[
            ["", "2", "", "negative"],
            ["normal", "", "30", "schizophrenia"],
            ["NA", "5.5", "31", "negative"],
        ]);
        let ds = label_encode(&raw, &toy_schema()).unwrap();
        // AGE is not a feature, so its blank does not count
        let minus_ones = ds.features.as_slice().iter().filter(|&&v| v == -1.0).count();
        assert_eq!(minus_ones, 3);
        assert_eq!(ds.features.row(0), &[-1.0, 2.0]);
        assert_eq!(ds.labels, vec![0, 1, 0]);
    }

    #[test]
    fn unknown_category_names_attribute_and_value() {
        let err = label_encode(&table(&[["shouting", "1", "1", "negative"]]), &toy_schema()).unwrap_err();
        match err {
            Error::UnknownCategory { attribute, value } => {
                assert_eq!(attribute, "SPEECH");
                assert_eq!(value, "shouting");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unparseable_numeric_reports_position() {
        let err = label_encode(
            &table(&[["mute", "1", "1", "negative"], ["mute", "ten", "1", "negative"]]),
            &toy_schema(),
        )
        .unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "DUR");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_label_is_an_error() {
        assert!(label_encode(&table(&[["mute", "1", "1", ""]]), &toy_schema()).is_err());
    }
}
