use crate::model::Network;
use crate::uncertainty::{base_weights, PolytopeSpec};
use crate::{Error, Result};

/// A network together with the dependency-weight polytope of every asset.
///
/// `specs[f]` is `None` when `f` has no uncertain upstream dependency; such
/// an asset only loses service by being attacked directly.
#[derive(Clone, Debug)]
pub struct Instance {
    network: Network,
    specs: Vec<Option<PolytopeSpec>>,
    warnings: Vec<String>,
}

impl Instance {
    /// Builds inverse-distance polytopes from the network's uncertainty
    /// settings, then applies any explicit half-space polytopes it carries.
    pub fn new(network: Network) -> Result<Self> {
        let built = base_weights(&network, network.uncertainty());
        let mut specs = built.specs;
        for p in network.polytopes() {
            let upstream = p
                .upstream
                .clone()
                .unwrap_or_else(|| network.upstream(p.asset).to_vec());
            specs[p.asset] = (!upstream.is_empty()).then(|| PolytopeSpec::Generic {
                upstream,
                rows: p.rows.clone(),
                rhs: p.rhs.clone(),
            });
        }
        Ok(Instance {
            network,
            specs,
            warnings: built.warnings,
        })
    }

    /// Uses caller-supplied polytopes; each must range over exactly the
    /// asset's upstream set.
    pub fn with_specs(network: Network, specs: Vec<Option<PolytopeSpec>>) -> Result<Self> {
        if specs.len() != network.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} polytopes for {} assets",
                specs.len(),
                network.len()
            )));
        }
        for (f, spec) in specs.iter().enumerate() {
            if let Some(spec) = spec {
                let mut cols = spec.upstream().to_vec();
                cols.sort_unstable();
                if cols != network.upstream(f) {
                    return Err(Error::InvalidNetwork(format!(
                        "polytope of asset {f} does not cover its upstream set"
                    )));
                }
            }
        }
        Ok(Instance {
            network,
            specs,
            warnings: Vec::new(),
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn specs(&self) -> &[Option<PolytopeSpec>] {
        &self.specs
    }

    pub fn spec(&self, f: usize) -> Option<&PolytopeSpec> {
        self.specs[f].as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.network.len()
    }

    pub fn is_empty(&self) -> bool {
        self.network.is_empty()
    }
}
