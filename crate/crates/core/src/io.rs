//! JSON forms of spaces, families, maps, witnesses and trees. Sets are
//! written as sorted label arrays and read back through the owning space.

use serde::{Deserialize, Serialize};

use crate::covers::Family;
use crate::dimension::{ApcWitness, DimSequenceWitness, FamilyCertificate};
use crate::error::{Error, Result};
use crate::metric::{Label, PointSet, Space, SpaceDescriptor};
use crate::trees::{Containment, DecompositionTree, TreeMode};

/// Version tag carried by every report.
pub const SCHEMA: &str = "coarse-kit/1";

/// The matrix form of a space, labels included.
pub fn descriptor_of(space: &Space) -> SpaceDescriptor {
    SpaceDescriptor::Matrix {
        labels: Some(space.labels().to_vec()),
        matrix: space.matrix(),
    }
}

pub fn labels_of(space: &Space, set: &PointSet) -> Vec<Label> {
    set.iter().map(|x| space.label(x).clone()).collect()
}

pub fn resolve_set(space: &Space, labels: &[Label]) -> Result<PointSet> {
    labels
        .iter()
        .map(|l| space.index_of(l).ok_or_else(|| Error::UnknownLabel(l.to_string())))
        .collect()
}

/// A space given inline or by a path relative to the referring file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Path(String),
    Inline(SpaceDescriptor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub sets: Vec<Vec<Label>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<usize>>,
}

impl FamilyJson {
    pub fn from_family(space: &Space, fam: &Family) -> Self {
        Self {
            sets: fam.sets.iter().map(|s| labels_of(space, s)).collect(),
            colors: fam.colors.clone(),
        }
    }

    pub fn resolve(&self, space: &Space) -> Result<Family> {
        let sets = self.sets.iter().map(|s| resolve_set(space, s)).collect::<Result<Vec<_>>>()?;
        match &self.colors {
            Some(c) => Family::colored(sets, c.clone()),
            None => Ok(Family::new(sets)),
        }
    }
}

/// `assign[i]` is the codomain index of domain point `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub domain: SpaceRef,
    pub codomain: SpaceRef,
    pub assign: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub scales: Vec<f64>,
    pub families: Vec<FamilyJson>,
    /// Ignored on input; recomputed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<FamilyCertificate>,
}

impl WitnessJson {
    pub fn from_witness(space: &Space, w: &ApcWitness) -> Self {
        Self {
            scales: w.scales.clone(),
            families: w.families.iter().map(|f| FamilyJson::from_family(space, f)).collect(),
            certificates: w.certificates.clone(),
        }
    }

    pub fn resolve(&self, space: &Space) -> Result<ApcWitness> {
        let families = self.families.iter().map(|f| f.resolve(space)).collect::<Result<Vec<_>>>()?;
        ApcWitness::certify(space, self.scales.clone(), families)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimWitnessJson {
    pub dims: Vec<usize>,
    pub families: Vec<FamilyJson>,
}

impl DimWitnessJson {
    pub fn resolve(&self, space: &Space) -> Result<DimSequenceWitness> {
        Ok(DimSequenceWitness {
            dims: self.dims.clone(),
            families: self.families.iter().map(|f| f.resolve(space)).collect::<Result<Vec<_>>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    /// The space the tree lives on, when not supplied separately.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceRef>,
    pub levels: Vec<FamilyJson>,
    pub scales: Vec<f64>,
    pub branching: Vec<usize>,
    /// `splits[i][u][j]`: indices into level `i + 1` of subfamily `j` of element `u`.
    pub splits: Vec<Vec<Vec<Vec<usize>>>>,
    pub terminal_mesh: f64,
    #[serde(default)]
    pub containment: Containment,
    #[serde(default)]
    pub mode: TreeMode,
}

impl TreeJson {
    pub fn from_tree(space: &Space, t: &DecompositionTree) -> Self {
        Self {
            space: None,
            levels: t.levels.iter().map(|l| FamilyJson::from_family(space, l)).collect(),
            scales: t.scales.clone(),
            branching: t.branching.clone(),
            splits: t.splits.clone(),
            terminal_mesh: t.terminal_mesh,
            containment: t.containment,
            mode: t.mode,
        }
    }

    pub fn resolve(&self, space: &Space) -> Result<DecompositionTree> {
        Ok(DecompositionTree {
            levels: self.levels.iter().map(|l| l.resolve(space)).collect::<Result<Vec<_>>>()?,
            scales: self.scales.clone(),
            branching: self.branching.clone(),
            splits: self.splits.clone(),
            terminal_mesh: self.terminal_mesh,
            containment: self.containment,
            mode: self.mode,
        })
    }
}
