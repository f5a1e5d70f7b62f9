//! Sector matrices N and H with their metadata.
//!
//! Binary layout (little endian):
//!
//! ```text
//! "QCEXSUB1"          8 bytes
//! header length       u32
//! header              UTF-8 JSON (ContainerHeader)
//! N                   dim * dim (re, im) f64 pairs, row-major
//! H                   same
//! ```
//!
//! The JSON form carries the same header fields plus `norm` and `ham` as
//! row-major arrays of `[re, im]` pairs.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hadamard::NoisyProblem;
use crate::linalg::CMat;
use crate::symmetry::{SectorLabel, SymmetrySpec};
use crate::tangent::SubspaceProblem;

pub const MAGIC: &[u8; 8] = b"QCEXSUB1";

/// Largest header accepted by the decoder.
const MAX_HEADER: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub dim: usize,
    pub label: SectorLabel,
    pub delta_sz: Option<i32>,
    pub configs: Vec<usize>,
    pub translation_count: usize,
    pub symmetry: SymmetrySpec,
    pub hermitian_deviation: f64,
    /// Threshold the matrices were (or are meant to be) solved with.
    pub tau: Option<f64>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct SubspaceContainer {
    pub header: ContainerHeader,
    pub norm: CMat,
    pub ham: CMat,
}

#[derive(Serialize, Deserialize)]
struct JsonForm {
    #[serde(flatten)]
    header: ContainerHeader,
    norm: Vec<[f64; 2]>,
    ham: Vec<[f64; 2]>,
}

impl SubspaceContainer {
    pub fn from_problem(problem: &SubspaceProblem, tau: Option<f64>) -> Self {
        SubspaceContainer {
            header: ContainerHeader {
                dim: problem.dim(),
                label: problem.label.clone(),
                delta_sz: problem.delta_sz,
                configs: problem.configs.clone(),
                translation_count: problem.translation_count,
                symmetry: problem.symmetry.clone(),
                hermitian_deviation: problem.hermitian_deviation,
                tau,
                shots: None,
                seed: None,
            },
            norm: problem.norm.clone(),
            ham: problem.ham.clone(),
        }
    }

    /// The sampled matrices with shot metadata.
    pub fn from_noisy(problem: &NoisyProblem) -> Self {
        let mut c = Self::from_problem(&problem.sampled, Some(problem.tau));
        c.header.shots = problem.plan.shots_per_element;
        c.header.seed = Some(problem.plan.seed);
        c
    }

    pub fn into_problem(self) -> SubspaceProblem {
        SubspaceProblem {
            label: self.header.label,
            delta_sz: self.header.delta_sz,
            configs: self.header.configs,
            norm: self.norm,
            ham: self.ham,
            translation_count: self.header.translation_count,
            symmetry: self.header.symmetry,
            hermitian_deviation: self.header.hermitian_deviation,
        }
    }

    fn check(&self) -> Result<()> {
        let h = &self.header;
        if h.configs.len() != h.dim {
            return Err(Error::DimensionMismatch { expected: h.dim, found: h.configs.len() });
        }
        for m in [&self.norm, &self.ham] {
            if m.nrows() != h.dim || m.ncols() != h.dim {
                return Err(Error::DimensionMismatch { expected: h.dim, found: m.nrows() });
            }
        }
        if h.translation_count == 0 {
            return Err(Error::Format("translation_count must be positive".into()));
        }
        if !h.hermitian_deviation.is_finite() || h.tau.is_some_and(|t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::Format("non-finite header value".into()));
        }
        Ok(())
    }

    pub fn encode_binary(&self) -> Result<Vec<u8>> {
        self.check()?;
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        let d = self.header.dim;
        let mut out = Vec::with_capacity(12 + header.len() + 32 * d * d);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for m in [&self.norm, &self.ham] {
            for i in 0..d {
                for j in 0..d {
                    out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                    out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn decode_binary(bytes: &[u8]) -> Result<Self> {
        let rest = bytes.strip_prefix(MAGIC.as_slice()).ok_or_else(|| Error::Format("bad magic".into()))?;
        if rest.len() < 4 {
            return Err(Error::Format("truncated header length".into()));
        }
        let hlen = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes")) as usize;
        let rest = &rest[4..];
        if hlen > MAX_HEADER || hlen > rest.len() {
            return Err(Error::Format(format!("header length {hlen} exceeds input")));
        }
        let header: ContainerHeader = serde_json::from_slice(&rest[..hlen]).map_err(|e| Error::Format(e.to_string()))?;
        let body = &rest[hlen..];
        let d = header.dim;
        let need = d.checked_mul(d).and_then(|x| x.checked_mul(32)).ok_or_else(|| Error::Format("dimension overflow".into()))?;
        if body.len() != need {
            return Err(Error::Format(format!("matrix block has {} bytes, expected {need}", body.len())));
        }
        let mut vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut read = || -> Result<CMat> {
            let mut entries = Vec::with_capacity(d * d);
            for _ in 0..d * d {
                let re = vals.next().expect("length checked");
                let im = vals.next().expect("length checked");
                entries.push(C64::new(re, im));
            }
            matrix(d, &entries)
        };
        let norm = read()?;
        let ham = read()?;
        let c = SubspaceContainer { header, norm, ham };
        c.check()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        self.check()?;
        let flat = |m: &CMat| {
            let d = m.nrows();
            (0..d * d).map(|k| [m[(k / d, k % d)].re, m[(k / d, k % d)].im]).collect::<Vec<_>>()
        };
        let form = JsonForm { header: self.header.clone(), norm: flat(&self.norm), ham: flat(&self.ham) };
        serde_json::to_string_pretty(&form).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let form: JsonForm = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let d = form.header.dim;
        let unpack = |v: &[[f64; 2]]| -> Result<CMat> {
            if Some(v.len()) != d.checked_mul(d) {
                return Err(Error::DimensionMismatch { expected: d.saturating_mul(d), found: v.len() });
            }
            let entries: Vec<C64> = v.iter().map(|p| C64::new(p[0], p[1])).collect();
            matrix(d, &entries)
        };
        let c = SubspaceContainer { norm: unpack(&form.norm)?, ham: unpack(&form.ham)?, header: form.header };
        c.check()?;
        Ok(c)
    }
}

fn matrix(d: usize, entries: &[C64]) -> Result<CMat> {
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Format("non-finite matrix entry".into()));
    }
    Ok(CMat::from_fn(d, d, |i, j| entries[i * d + j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SubspaceContainer {
        let d = 3;
        let norm = CMat::from_fn(d, d, |i, j| C64::new((i + j) as f64 + 0.25, i as f64 - j as f64));
        let ham = CMat::from_fn(d, d, |i, j| C64::new(-(i as f64) * 1.5 + j as f64, 0.125 * (i * j) as f64));
        SubspaceContainer {
            header: ContainerHeader {
                dim: d,
                label: SectorLabel { momentum: vec![3], parity: Some(-1), popcount: None },
                delta_sz: None,
                configs: vec![0, 4, 7],
                translation_count: 8,
                symmetry: SymmetrySpec { translations: true, parity: true, popcount: None },
                hermitian_deviation: 0.0,
                tau: Some(1e-10),
                shots: Some(1_000_000),
                seed: Some(7),
            },
            norm,
            ham,
        }
    }

    fn same(a: &SubspaceContainer, b: &SubspaceContainer) {
        assert_eq!(a.header, b.header);
        assert_eq!(a.norm, b.norm);
        assert_eq!(a.ham, b.ham);
    }

    #[test]
    fn binary_round_trip() {
        let c = sample();
        let bytes = c.encode_binary().unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        same(&c, &SubspaceContainer::decode_binary(&bytes).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let c = sample();
        same(&c, &SubspaceContainer::from_json(&c.to_json().unwrap()).unwrap());
    }

    #[test]
    fn truncated_input_is_rejected() {
        let bytes = sample().encode_binary().unwrap();
        for cut in [0, 7, 11, 20, bytes.len() - 1] {
            assert!(SubspaceContainer::decode_binary(&bytes[..cut]).is_err());
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(SubspaceContainer::decode_binary(&extra).is_err());
    }
}
