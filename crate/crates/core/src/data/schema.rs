use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_SCHEMA: &str = include_str!("../../assets/schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    pub is_feature: bool,
}

impl AttributeSchema {
    pub fn category_index(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }
}

/// Ordered attribute list. The attribute order is the canonical column order
/// and category order fixes the label encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub version: u32,
    pub target: String,
    pub attributes: Vec<AttributeSchema>,
}

impl Schema {
    /// The bundled clinical attribute schema (36 attributes, 31 features).
    pub fn clinical() -> Self {
        Self::from_json(DEFAULT_SCHEMA).expect("bundled schema is valid")
    }

    pub fn canonical_json() -> &'static str {
        DEFAULT_SCHEMA
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Schema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schema serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Data(format!("duplicate attribute {}", attr.name)));
            }
            match attr.kind {
                AttributeKind::Categorical => {
                    if attr.categories.is_empty() {
                        return Err(Error::Data(format!(
                            "categorical attribute {} has no categories",
                            attr.name
                        )));
                    }
                    let mut cats = std::collections::HashSet::new();
                    if let Some(dup) = attr.categories.iter().find(|c| !cats.insert(c.as_str())) {
                        return Err(Error::Data(format!(
                            "attribute {} lists category {dup:?} twice",
                            attr.name
                        )));
                    }
                }
                AttributeKind::Numeric => {
                    if !attr.categories.is_empty() {
                        return Err(Error::Data(format!("numeric attribute {} has categories", attr.name)));
                    }
                }
            }
        }
        let target = self.target_attribute()?;
        if target.is_feature {
            return Err(Error::Data("target attribute cannot be a feature".into()));
        }
        if target.kind != AttributeKind::Categorical || target.categories.len() != 2 {
            return Err(Error::Data(
                "target attribute must be categorical with two classes".into(),
            ));
        }
        Ok(())
    }

    pub fn target_attribute(&self) -> Result<&AttributeSchema> {
        self.attribute(&self.target)
            .ok_or_else(|| Error::Data(format!("target {} not in schema", self.target)))
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSchema> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn features(&self) -> impl Iterator<Item = &AttributeSchema> {
        self.attributes.iter().filter(|a| a.is_feature)
    }

    pub fn feature_count(&self) -> usize {
        self.features().count()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features().map(|a| a.name.clone()).collect()
    }

    /// Drops an attribute from the feature set (it stays in the schema so CSV
    /// files carrying it still load).
    pub fn exclude_feature(mut self, name: &str) -> Result<Self> {
        let attr = self
            .attributes
            .iter_mut()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Data(format!("unknown attribute {name}")))?;
        attr.is_feature = false;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clinical_schema_shape() {
        let s = Schema::clinical();
        assert_eq!(s.attributes.len(), 36);
        assert_eq!(s.feature_count(), 31);
        for name in ["AGE", "SEX", "OCCUP_HX", "MAR_STA", "DIAGNOSIS"] {
            assert!(!s.attribute(name).unwrap().is_feature, "{name}");
        }
        assert_eq!(s.target, "DIAGNOSIS");
        assert_eq!(
            s.target_attribute().unwrap().categories,
            vec!["negative", "schizophrenia"]
        );
    }

    #[test]
    fn asset_is_in_canonical_form() {
        assert_eq!(Schema::clinical().to_json(), Schema::canonical_json());
    }

    #[test]
    fn eeg_can_be_excluded() {
        let s = Schema::clinical().exclude_feature("EEG").unwrap();
        assert_eq!(s.feature_count(), 30);
        assert!(s.attribute("EEG").is_some());
        assert!(Schema::clinical().exclude_feature("NOPE").is_err());
    }

    #[test]
    fn duplicate_categories_rejected() {
        let text = r#"{"version":1,"target":"Y","attributes":[
            {"name":"A","kind":"categorical","categories":["x","x"],"is_feature":true},
            {"name":"Y","kind":"categorical","categories":["n","p"],"is_feature":false}]}"#;
        assert!(Schema::from_json(text).is_err());
    }

    #[test]
    fn empty_categories_rejected() {
        let text = r#"{"version":1,"target":"Y","attributes":[
            {"name":"A","kind":"categorical","is_feature":true},
            {"name":"Y","kind":"categorical","categories":["n","p"],"is_feature":false}]}"#;
        assert!(Schema::from_json(text).is_err());
    }
}
