//! What a `train` run leaves behind in `checkpoint.json`.

use std::path::Path;

use anyhow::{Context, Result};
use genbayes_core::causal::CausalQuantileNet;
use genbayes_core::dgp::ConjugateModel;
use genbayes_core::engine::InverseMap;
use genbayes_core::metrics::OracleModel;
use genbayes_core::nn::Checkpoint;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SavedModel {
    Causal { net: CausalQuantileNet },
    Engine { map: InverseMap, model: ConjugateModel },
    /// Plug-in model holding the generating surfaces.
    Oracle { oracle: OracleModel },
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Causal { .. } => "causal",
            SavedModel::Engine { .. } => "engine",
            SavedModel::Oracle { .. } => "oracle",
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Checkpoint::new(self.clone())
            .save(path)
            .with_context(|| format!("writing checkpoint {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<SavedModel> {
        let ck = Checkpoint::<SavedModel>::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
        Ok(ck.model)
    }
}
