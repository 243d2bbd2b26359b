use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ThinRep;
use crate::quiver::{EdgeId, NetworkQuiver};
use crate::C64;

/// Constraints on how weights may be chosen: classes of edges sharing one
/// value, and edges pinned to a fixed value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightArchitecture {
    #[serde(default)]
    pub tie_classes: Vec<Vec<EdgeId>>,
    #[serde(default)]
    pub fixed: BTreeMap<EdgeId, C64>,
}

impl WeightArchitecture {
    pub fn is_empty(&self) -> bool {
        self.tie_classes.is_empty() && self.fixed.is_empty()
    }

    /// Checks that every edge exists, tie classes are disjoint, and no class
    /// mixes different fixed values.
    pub fn validate(&self, nq: &NetworkQuiver) -> Result<()> {
        let mut seen = HashSet::new();
        for class in &self.tie_classes {
            let mut pinned: Option<C64> = None;
            for e in class {
                if nq.edge_position(e).is_none() {
                    return Err(Error::UnknownEdge(e.clone()));
                }
                if !seen.insert(e.as_str()) {
                    return Err(Error::ConflictingConstraint(e.clone()));
                }
                if let Some(v) = self.fixed.get(e) {
                    match pinned {
                        Some(p) if p != *v => return Err(Error::ConflictingConstraint(e.clone())),
                        _ => pinned = Some(*v),
                    }
                }
            }
        }
        for e in self.fixed.keys() {
            if nq.edge_position(e).is_none() {
                return Err(Error::UnknownEdge(e.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// `tie class <n> (<first edge>)` or the fixed edge id.
    pub location: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArchReport {
    pub violations: Vec<Violation>,
}

impl ArchReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> Option<&Violation> {
        self.violations
            .iter()
            .max_by(|a, b| a.residual.total_cmp(&b.residual))
    }
}

/// Lists every tie class whose members differ and every fixed edge off its
/// value, by more than `tol · max(1, |reference|)`.
pub fn check_weight_architecture(rep: &ThinRep, arch: &WeightArchitecture, tol: f64) -> ArchReport {
    let mut report = ArchReport::default();
    for (k, class) in arch.tie_classes.iter().enumerate() {
        let ws: Vec<C64> = class.iter().filter_map(|e| rep.weight(e)).collect();
        let Some(&first) = ws.first() else { continue };
        let residual = ws.iter().map(|w| (w - first).norm()).fold(0.0, f64::max);
        if residual > tol * first.norm().max(1.0) || residual.is_nan() {
            report.violations.push(Violation {
                location: format!("tie class {k} ({})", class[0]),
                residual,
            });
        }
    }
    for (e, value) in &arch.fixed {
        let Some(w) = rep.weight(e) else { continue };
        let residual = (w - value).norm();
        if residual > tol * value.norm().max(1.0) || residual.is_nan() {
            report.violations.push(Violation {
                location: e.clone(),
                residual,
            });
        }
    }
    report
}
