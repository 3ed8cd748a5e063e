use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArmModel, Belief, JointBelief, RmabInstance, Violation};
use crate::error::{invalid, Error, Result};

pub const INSTANCE_VERSION: u32 = 1;

/// On-disk arm layout. Tensors are nested lists: `transition` J×M×M,
/// `observation` J×M×K, `reward` M×J.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_observations: usize,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub observation: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
}

/// On-disk instance document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub discount: f64,
    pub budget: usize,
    pub arms: Vec<ArmFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_belief: Option<Vec<Vec<f64>>>,
}

impl From<&ArmModel> for ArmFile {
    fn from(m: &ArmModel) -> Self {
        Self {
            num_states: m.num_states(),
            num_actions: m.num_actions(),
            num_observations: m.num_observations(),
            transition: m.transition_nested(),
            observation: m.observation_nested(),
            reward: m.reward_nested(),
        }
    }
}

impl From<&RmabInstance> for InstanceFile {
    fn from(inst: &RmabInstance) -> Self {
        Self {
            version: INSTANCE_VERSION,
            discount: inst.discount,
            budget: inst.budget,
            arms: inst.arms.iter().map(ArmFile::from).collect(),
            initial_belief: inst
                .initial_belief
                .as_ref()
                .map(|jb| jb.per_arm.iter().map(|b| b.probs().to_vec()).collect()),
        }
    }
}

/// Outcome of reading an instance document without rejecting it.
pub enum Loaded {
    Valid(RmabInstance),
    /// Per-arm violations, labelled `arms[n].<path>`.
    Invalid(Vec<Violation>),
}

impl InstanceFile {
    /// Converts to an instance, collecting every probability violation.
    pub fn into_instance(self) -> Result<Loaded> {
        if self.version != INSTANCE_VERSION {
            return Err(invalid(format!("unsupported instance version {} (expected {INSTANCE_VERSION})", self.version)));
        }
        let mut arms = Vec::with_capacity(self.arms.len());
        let mut violations = Vec::new();
        for (n, a) in self.arms.iter().enumerate() {
            let model = ArmModel::from_nested(&a.transition, &a.observation, &a.reward)
                .map_err(|e| invalid(format!("arms[{n}]: {e}")))?;
            if (model.num_states(), model.num_actions(), model.num_observations()) != (a.num_states, a.num_actions, a.num_observations) {
                return Err(invalid(format!("arms[{n}]: declared dimensions do not match tensor shapes")));
            }
            for mut v in model.validate() {
                v.path = format!("arms[{n}].{}", v.path);
                violations.push(v);
            }
            arms.push(model);
        }
        if !violations.is_empty() {
            return Ok(Loaded::Invalid(violations));
        }
        let mut inst = RmabInstance::new(arms, self.budget, self.discount)?;
        if let Some(beliefs) = self.initial_belief {
            let per_arm = beliefs.into_iter().map(Belief::new).collect::<Result<Vec<_>>>()?;
            let jb = JointBelief::new(per_arm);
            inst.check_belief(&jb)?;
            inst.initial_belief = Some(jb);
        }
        Ok(Loaded::Valid(inst))
    }
}

/// Parses an instance document, returning violations as data.
pub fn read_instance(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.display().to_string(),
        source,
    })?;
    file.into_instance()
}

/// Loads an instance and refuses invalid files.
pub fn load_instance(path: &Path) -> Result<RmabInstance> {
    match read_instance(path)? {
        Loaded::Valid(inst) => Ok(inst),
        Loaded::Invalid(v) => Err(Error::InvalidModel(v)),
    }
}

pub fn write_instance(inst: &RmabInstance) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&InstanceFile::from(inst))?;
    s.push('\n');
    Ok(s)
}
