//! On-disk JSON shapes. Terms are surface-syntax strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::knowledge::Hook;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryFile {
    #[serde(default)]
    pub imports: Vec<String>,
    #[serde(default)]
    pub types: Vec<String>,
    #[serde(default)]
    pub constants: BTreeMap<String, ConstFile>,
    #[serde(default)]
    pub definitions: BTreeMap<String, DefinitionFile>,
    #[serde(default)]
    pub theorems: BTreeMap<String, TheoremFile>,
    #[serde(default)]
    pub rulesets: BTreeMap<String, RuleSetFile>,
    #[serde(default)]
    pub error_patterns: Vec<ErrorPatternFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstFile {
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default)]
    pub infix: Option<u8>,
    #[serde(default)]
    pub assoc: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefinitionFile {
    pub formal: String,
    #[serde(default)]
    pub explanation: String,
    /// Constant this definition explains, for click-to-definition.
    #[serde(default)]
    pub symbol: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremFile {
    pub rule: String,
    #[serde(default, rename = "if")]
    pub conditions: Vec<String>,
    #[serde(default)]
    pub explanation: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSetFile {
    #[serde(default)]
    pub rules: Vec<String>,
    #[serde(default)]
    pub include: Vec<String>,
    #[serde(default)]
    pub hooks: Vec<Hook>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub conditions: Option<String>,
    #[serde(default)]
    pub explanation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorPatternFile {
    pub id: String,
    pub lhs: String,
    pub rhs: String,
    pub feedback: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub given: Vec<String>,
    #[serde(default, rename = "where")]
    pub where_: Vec<String>,
    #[serde(default)]
    pub find: Vec<String>,
    #[serde(default)]
    pub relate: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub key: Vec<String>,
    /// Parent declared elsewhere; the node is attached as its last child.
    #[serde(default)]
    pub extends: Option<Vec<String>>,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub model_pattern: ModelFile,
    #[serde(default)]
    pub methods: Vec<Vec<String>>,
    #[serde(default)]
    pub children: Vec<ProblemFile>,
    #[serde(default)]
    pub explanation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodFile {
    pub key: Vec<String>,
    pub program: String,
    /// Rule set deciding equality of input terms.
    #[serde(default)]
    pub check: Option<String>,
    #[serde(default)]
    pub explanation: String,
}
