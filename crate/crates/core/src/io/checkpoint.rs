//! Optimized circuit angles as JSON. Floats are written in shortest
//! round-trip form, so a reload reproduces the parameters bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "qcex-params";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// Free-form description of the circuit the angles belong to.
    pub circuit: String,
    pub num_qubits: usize,
    pub params: Vec<f64>,
    pub energy: f64,
}

impl Checkpoint {
    pub fn new(circuit: impl Into<String>, num_qubits: usize, params: Vec<f64>, energy: f64) -> Self {
        Checkpoint { format: CHECKPOINT_FORMAT.into(), version: 1, circuit: circuit.into(), num_qubits, params, energy }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT || c.version != 1 {
            return Err(Error::Format(format!("unsupported checkpoint {} v{}", c.format, c.version)));
        }
        if c.params.iter().any(|p| !p.is_finite()) || !c.energy.is_finite() {
            return Err(Error::Format("non-finite checkpoint value".into()));
        }
        Ok(c)
    }

    /// Checks that the checkpoint fits a circuit.
    pub fn check(&self, circuit: &str, num_qubits: usize, num_params: usize) -> Result<()> {
        if self.circuit != circuit {
            return Err(Error::Format(format!("checkpoint is for '{}', not '{circuit}'", self.circuit)));
        }
        if self.num_qubits != num_qubits {
            return Err(Error::DimensionMismatch { expected: num_qubits, found: self.num_qubits });
        }
        if self.params.len() != num_params {
            return Err(Error::ParameterCount { expected: num_params, found: self.params.len() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_round_trip_exactly() {
        let params: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7311).sin() / 3.0 + 1e-17 * i as f64).collect();
        let c = Checkpoint::new("tfi_chain n=8", 8, params, -10.251661790966);
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(back.check("tfi_chain n=8", 8, 50).is_ok());
        assert!(back.check("tfi_chain n=8", 8, 49).is_err());
    }
}
