//! JSON file formats for posets, measures and kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::MarkovKernel;
use crate::measure::Measure;
use crate::poset::{Poset, PosetSpec};

/// A poset given either by name (`"chain:N"`, `"antichain:N"`) or inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PosetRef {
    Named(String),
    Inline(PosetSpec),
}

impl PosetRef {
    pub fn resolve(&self) -> Result<Poset> {
        match self {
            PosetRef::Inline(spec) => Poset::from_spec(spec),
            PosetRef::Named(name) => {
                let (kind, size) = name
                    .split_once(':')
                    .ok_or_else(|| Error::BadParams(format!("unknown poset '{name}'")))?;
                let n: usize = size
                    .trim()
                    .parse()
                    .map_err(|_| Error::BadParams(format!("bad poset size in '{name}'")))?;
                match kind.trim() {
                    "chain" => Ok(Poset::chain(n)),
                    "antichain" | "identity" => Ok(Poset::antichain(n)),
                    _ => Err(Error::BadParams(format!("unknown poset kind '{kind}'"))),
                }
            }
        }
    }
}

/// `{"poset": ..., "rows": [[...], ...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub poset: PosetRef,
    pub rows: Vec<Vec<f64>>,
}

impl KernelFile {
    pub fn new(poset: &Poset, kernel: &MarkovKernel) -> Self {
        KernelFile {
            poset: PosetRef::Inline(poset.to_spec()),
            rows: kernel.rows(),
        }
    }

    pub fn load(&self) -> Result<(Poset, MarkovKernel)> {
        let poset = self.poset.resolve()?;
        let kernel = MarkovKernel::new(self.rows.clone())?;
        if kernel.len() != poset.len() {
            return Err(Error::DimMismatch(kernel.len(), poset.len()));
        }
        Ok((poset, kernel))
    }
}

/// `{"poset": ..., "mu": [...], "nu": [...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurePairFile {
    pub poset: PosetRef,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl MeasurePairFile {
    pub fn load(&self) -> Result<(Poset, Measure, Measure)> {
        let poset = self.poset.resolve()?;
        let mu = Measure::new(self.mu.clone())?;
        let nu = Measure::new(self.nu.clone())?;
        for m in [&mu, &nu] {
            if m.len() != poset.len() {
                return Err(Error::DimMismatch(m.len(), poset.len()));
            }
        }
        Ok((poset, mu, nu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_posets() {
        let r: PosetRef = serde_json::from_str("\"chain:3\"").unwrap();
        assert!(r.resolve().unwrap().is_total_order());
        let r: PosetRef = serde_json::from_str("\"antichain:4\"").unwrap();
        assert!(r.resolve().unwrap().is_identity_order());
        let r: PosetRef = serde_json::from_str("\"tree:4\"").unwrap();
        assert!(r.resolve().is_err());
    }

    #[test]
    fn inline_kernel_round_trip() {
        let text = r#"{"poset": {"labels": ["lo", "hi"], "covers": [[0, 1]]},
                       "rows": [[0.7, 0.3], [0.2, 0.8]]}"#;
        let f: KernelFile = serde_json::from_str(text).unwrap();
        let (p, k) = f.load().unwrap();
        assert!(p.leq(0, 1));
        let again: KernelFile =
            serde_json::from_str(&serde_json::to_string(&KernelFile::new(&p, &k)).unwrap())
                .unwrap();
        assert_eq!(again.load().unwrap().1, k);
    }

    #[test]
    fn size_mismatch() {
        let f = KernelFile {
            poset: PosetRef::Named("chain:3".into()),
            rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        assert_eq!(f.load().unwrap_err(), Error::DimMismatch(2, 3));
    }
}
