//! Field specifications: JSON or TOML files listing monomials per component.

use std::path::Path;

use anyhow::{bail, Context};
use foliation_core::series::json_to_scalar;
use foliation_core::{Coeff, Multidegree, TruncatedSeries, VectorField};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
pub struct TermSpec {
    pub k: Vec<u32>,
    pub re: serde_json::Value,
    #[serde(default)]
    pub im: serde_json::Value,
}

#[derive(Clone, Debug, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub nvars: Option<usize>,
    pub components: Option<Vec<Vec<TermSpec>>>,
    pub integrals: Option<Vec<Vec<TermSpec>>>,
}

impl FieldSpec {
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let spec = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        };
        Ok(spec)
    }

    pub fn nvars(&self) -> anyhow::Result<usize> {
        let from_components = self.components.as_ref().map(Vec::len);
        let from_terms = self
            .components
            .iter()
            .chain(&self.integrals)
            .flatten()
            .flatten()
            .map(|t| t.k.len())
            .next();
        let n = self.nvars.or(from_components).or(from_terms).unwrap_or(0);
        if n == 0 {
            bail!("{}: cannot determine the number of variables", self.name);
        }
        if from_components.is_some_and(|c| c != n) {
            bail!("{}: {} components for {n} variables", self.name, from_components.unwrap());
        }
        for t in self.components.iter().chain(&self.integrals).flatten().flatten() {
            if t.k.len() != n {
                bail!("{}: exponent {:?} has the wrong length", self.name, t.k);
            }
        }
        Ok(n)
    }

    /// The vector field at `cap`; terms above the cap are dropped.
    pub fn field<K: Coeff>(&self, cap: u32) -> anyhow::Result<Option<VectorField<K>>> {
        let Some(components) = &self.components else {
            return Ok(None);
        };
        let n = self.nvars()?;
        let comps = components
            .iter()
            .map(|terms| series::<K>(n, cap, terms))
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(Some(VectorField::new(comps)?))
    }

    pub fn integrals<K: Coeff>(&self, cap: u32) -> anyhow::Result<Vec<TruncatedSeries<K>>> {
        let n = self.nvars()?;
        self.integrals
            .iter()
            .flatten()
            .map(|terms| series::<K>(n, cap, terms))
            .collect()
    }
}

fn series<K: Coeff>(n: usize, cap: u32, terms: &[TermSpec]) -> anyhow::Result<TruncatedSeries<K>> {
    let mut s = TruncatedSeries::zero(n, cap);
    for t in terms {
        let c = K::from_scalar(&json_to_scalar(&t.re, &t.im, K::MODE)?)?;
        let k = Multidegree::new(&t.k);
        if k.total() <= cap {
            s.add_term(k, c);
        }
    }
    Ok(s)
}
