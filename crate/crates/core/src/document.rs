//! The JSON input document: a bipartite system plus a state.
//!
//! ```json
//! {
//!   "ambient_dim": 4,
//!   "tensor": [2, 2],
//!   "density": [[[0.25, 0.0], ...], ...],
//!   "separable_certificate": { "terms": [...] }
//! }
//! ```
//!
//! `alice` and `bob` (each `{"generators": [...]}`) may replace or accompany
//! `tensor`; with both present the generated algebras are checked to be the
//! tensor factors.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bipartite::{BipartiteSystem, SeparableCertificate, State, DEFAULT_SIZE_LIMIT};
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Tolerances};
use crate::star_algebra::AlgebraDoc;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub ambient_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice: Option<AlgebraDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob: Option<AlgebraDoc>,
    #[serde(with = "crate::serial::matrix")]
    pub density: CMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separable_certificate: Option<SeparableCertificate>,
}

/// `sha256:<hex>` of the given bytes.
pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

impl Document {
    /// Parses JSON; errors carry serde's line and column.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a file and returns the document with the digest of its bytes.
    pub fn read(path: &Path) -> Result<(Self, String)> {
        let bytes = std::fs::read(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse(format!("input is not UTF-8: {e}")))?;
        Ok((Self::parse(text)?, digest(&bytes)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// A tensor-system document for `density` on `C^dA ⊗ C^dB`.
    pub fn tensor(d_a: usize, d_b: usize, density: CMatrix) -> Self {
        Document {
            ambient_dim: d_a * d_b,
            tensor: Some([d_a, d_b]),
            alice: None,
            bob: None,
            density,
            separable_certificate: None,
        }
    }

    pub fn from_system(sys: &BipartiteSystem, state: &State) -> Self {
        Document {
            ambient_dim: sys.dim(),
            tensor: sys.tensor_dims().map(|(a, b)| [a, b]),
            alice: Some(sys.alice().to_doc()),
            bob: Some(sys.bob().to_doc()),
            density: state.density().clone(),
            separable_certificate: state.certificate().cloned(),
        }
    }

    /// Builds and validates the system and the state.
    pub fn load(&self, tol: &Tolerances) -> Result<(BipartiteSystem, State)> {
        let d = self.ambient_dim;
        if d == 0 {
            return Err(Error::DimensionMismatch("ambient_dim must be positive".into()));
        }
        if d > DEFAULT_SIZE_LIMIT {
            return Err(Error::SizeLimit { dim: d, limit: DEFAULT_SIZE_LIMIT });
        }
        if self.density.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "density is {}x{}, ambient_dim is {d}",
                self.density.nrows(),
                self.density.ncols()
            )));
        }
        if let Some([a, b]) = self.tensor {
            if a * b != d {
                return Err(Error::DimensionMismatch(format!("tensor dims {a}x{b} do not multiply to ambient_dim {d}")));
            }
        }
        let sys = match (&self.alice, &self.bob, self.tensor) {
            (Some(a), Some(b), tensor) => {
                let sys = BipartiteSystem::new(d, a.load(d, tol)?, b.load(d, tol)?, tol)?;
                match tensor {
                    Some([da, db]) => sys.with_tensor_dims(da, db, tol)?,
                    None => sys,
                }
            }
            (None, None, Some([da, db])) => BipartiteSystem::tensor(da, db),
            _ => {
                return Err(Error::Parse(
                    "a document needs both `alice` and `bob`, or a `tensor` split".into(),
                ))
            }
        };
        let mut state = State::new(self.density.clone(), tol)?;
        if let Some(cert) = &self.separable_certificate {
            state = state.with_certificate(cert.clone(), tol)?;
        }
        Ok((sys, state))
    }
}
