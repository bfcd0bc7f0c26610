//! Versioned text checkpoints.
//!
//! A checkpoint is a JSON document with a format tag and version, the model
//! payload, and optionally the optimizer and RNG state. Floats are written
//! in shortest round-trip form and parsed with correct rounding, so a
//! save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::optim::OptState;
use crate::rng::RngState;
use crate::{Error, Result};

pub const FORMAT_TAG: &str = "genbayes-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<M> {
    pub format: String,
    pub version: u32,
    pub model: M,
    pub optimizer: Option<OptState>,
    pub rng: Option<RngState>,
}

impl<M> Checkpoint<M> {
    pub fn new(model: M) -> Self {
        Checkpoint {
            format: FORMAT_TAG.to_owned(),
            version: FORMAT_VERSION,
            model,
            optimizer: None,
            rng: None,
        }
    }

    pub fn with_optimizer(mut self, state: OptState) -> Self {
        self.optimizer = Some(state);
        self
    }

    pub fn with_rng(mut self, state: RngState) -> Self {
        self.rng = Some(state);
        self
    }
}

impl<M: Serialize> Checkpoint<M> {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

impl<M: DeserializeOwned> Checkpoint<M> {
    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint<M> = serde_json::from_str(text)?;
        if ck.format != FORMAT_TAG {
            return Err(Error::Parse(format!("not a checkpoint (format `{}`)", ck.format)));
        }
        if ck.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported checkpoint version {} (expected {FORMAT_VERSION})",
                ck.version
            )));
        }
        Ok(ck)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Mlp};
    use crate::rng::Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = Rng::new(77);
        let net = Mlp::build(3, &[5, 4], Activation::Relu, 2, Activation::Identity, &mut rng);
        let state = OptState {
            step: 3,
            first: vec![vec![1e-300, -0.0, 0.1 + 0.2]],
            second: vec![vec![f64::MIN_POSITIVE, 1.0 / 3.0, 2.5e-17]],
        };
        rng.gaussian();
        let ck = Checkpoint::new(net.clone())
            .with_optimizer(state.clone())
            .with_rng(rng.state());
        let text = ck.to_json().unwrap();
        let back: Checkpoint<Mlp> = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        for (a, b) in back.model.layers().iter().zip(net.layers()) {
            let bits = |m: &crate::Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.weights), bits(&b.weights));
        }
        let o = back.optimizer.unwrap();
        assert_eq!(o.first[0][1].to_bits(), (-0.0f64).to_bits());
        assert_eq!(o.second, state.second);
        assert_eq!(Rng::from_state(&back.rng.unwrap()).next_u64(), rng.next_u64());
    }

    #[test]
    fn rejects_foreign_documents() {
        let wrong_tag = r#"{"format":"other","version":1,"model":0,"optimizer":null,"rng":null}"#;
        assert!(Checkpoint::<u32>::from_json(wrong_tag).is_err());
        let wrong_version = r#"{"format":"genbayes-checkpoint","version":9,"model":0,"optimizer":null,"rng":null}"#;
        assert!(Checkpoint::<u32>::from_json(wrong_version).is_err());
    }
}
