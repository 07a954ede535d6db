use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Model;
use crate::knowledge::files::ModelFile;
use crate::knowledge::KbError;
use crate::program::Key;
use crate::terms::{parse, Signature, Term};

/// References chosen for an instance: theory, problem and method.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<Key>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Key>,
}

impl Refs {
    pub fn is_complete(&self) -> bool {
        self.theory.is_some() && self.problem.is_some() && self.method.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub statement: String,
    pub formalisation: ModelFile,
    #[serde(default)]
    pub refs: Refs,
    /// Facts the problem statement takes for granted, such as `L > 0`.
    #[serde(default)]
    pub assumptions: Vec<String>,
}

/// A problem as posed to the student. The formalisation stays hidden and
/// serves as reference when checking the student's model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub id: String,
    pub statement: String,
    pub formalisation: Model,
    pub refs: Refs,
    pub assumptions: Vec<Term>,
}

fn parse_err(file: &str, position: String, message: String) -> KbError {
    KbError::Parse { file: file.to_string(), position, message }
}

impl ProblemInstance {
    pub fn to_file(&self, sig: &Signature) -> InstanceFile {
        InstanceFile {
            statement: self.statement.clone(),
            formalisation: self.formalisation.to_file(sig),
            refs: self.refs.clone(),
            assumptions: self.assumptions.iter().map(|t| crate::terms::render(t, sig)).collect(),
        }
    }

    pub fn from_file(id: &str, f: &InstanceFile, sig: &Signature) -> Result<ProblemInstance, KbError> {
        let formalisation = Model::parse(&f.formalisation, sig)
            .map_err(|(field, i, e)| parse_err(id, format!("{field:?} item {}", i + 1), e.to_string()))?;
        let assumptions = f
            .assumptions
            .iter()
            .enumerate()
            .map(|(i, a)| {
                parse(a, sig).map(|t| t.stripped()).map_err(|e| parse_err(id, format!("assumption {}", i + 1), e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(ProblemInstance {
            id: id.to_string(),
            statement: f.statement.clone(),
            formalisation,
            refs: f.refs.clone(),
            assumptions,
        })
    }

    /// Reads `<path>`; the id is the file stem.
    pub fn load(path: &Path, sig: &Signature) -> Result<ProblemInstance, KbError> {
        let text = fs::read_to_string(path)
            .map_err(|e| KbError::Io { file: path.display().to_string(), message: e.to_string() })?;
        let f: InstanceFile = serde_json::from_str(&text).map_err(|e| {
            parse_err(&path.display().to_string(), format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        let id = path.file_stem().unwrap_or_default().to_string_lossy().to_string();
        ProblemInstance::from_file(&id, &f, sig)
    }
}
