use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use coarse_kit::covers::Family;
use coarse_kit::io::{FamilyJson, MapJson, SpaceRef};
use coarse_kit::maps::{n_to_1_control, CoarseMap, Control};
use coarse_kit::msp::Measure;
use coarse_kit::{Label, PointSet, Space, SpaceDescriptor};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Reads every input once and remembers its digest for the report.
#[derive(Default)]
pub struct Inputs {
    pub digests: BTreeMap<String, InputDigest>,
}

impl Inputs {
    fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        self.digests.insert(
            role.to_string(),
            InputDigest {
                path: path.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            },
        );
        Ok(bytes)
    }

    pub fn json<T: DeserializeOwned>(&mut self, role: &str, path: &Path) -> Result<T, CliError> {
        let bytes = self.read(role, path)?;
        serde_json::from_slice(&bytes).map_err(|e| {
            CliError::Usage(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
        })
    }

    pub fn space(&mut self, role: &str, path: &Path) -> Result<Arc<Space>, CliError> {
        let desc: SpaceDescriptor = self.json(role, path)?;
        build(&desc, path)
    }

    /// Resolves a space reference; paths are relative to `base`'s directory.
    pub fn space_ref(&mut self, role: &str, r: &SpaceRef, base: &Path) -> Result<Arc<Space>, CliError> {
        match r {
            SpaceRef::Path(p) => {
                let full = relative_to(base, p);
                self.space(role, &full)
            }
            SpaceRef::Inline(desc) => build(desc, base),
        }
    }

    pub fn map(&mut self, path: &Path) -> Result<CoarseMap, CliError> {
        let m: MapJson = self.json("map", path)?;
        let x = self.space_ref("map.domain", &m.domain, path)?;
        let y = self.space_ref("map.codomain", &m.codomain, path)?;
        CoarseMap::new(x, y, m.assign).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn family(&mut self, role: &str, path: &Path, space: &Space) -> Result<Family, CliError> {
        let f: FamilyJson = self.json(role, path)?;
        f.resolve(space).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn measure(&mut self, role: &str, path: &Path, space: &Space) -> Result<Measure, CliError> {
        #[derive(serde::Deserialize)]
        struct Raw {
            weights: Vec<f64>,
        }
        let raw: Raw = self.json(role, path)?;
        if raw.weights.len() != space.len() {
            return Err(CliError::Usage(format!(
                "{}: {} weights for a space of {} points",
                path.display(),
                raw.weights.len(),
                space.len()
            )));
        }
        Measure::new(raw.weights).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// `identity`, `linear:S`, `affine:S,O`, `measured` or a JSON file.
    pub fn control(&mut self, spec: &str, f: &CoarseMap, n: usize) -> Result<Control, CliError> {
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number {s:?} in control {spec:?}")))
        };
        if spec == "identity" {
            return Ok(Control::identity());
        }
        if spec == "measured" {
            return match n_to_1_control(f, n, None).map_err(CliError::Op)? {
                Ok(c) => Ok(c.control()),
                Err(r) => Err(CliError::Usage(format!("no control measured at scale {}", r.r))),
            };
        }
        if let Some(s) = spec.strip_prefix("linear:") {
            return Ok(Control::linear(num(s)?));
        }
        if let Some(s) = spec.strip_prefix("affine:") {
            let (a, b) = s
                .split_once(',')
                .ok_or_else(|| CliError::Usage(format!("affine control needs slope,offset: {spec:?}")))?;
            return Ok(Control::Affine {
                slope: num(a)?,
                offset: num(b)?,
            });
        }
        self.json("control", Path::new(spec))
    }
}

fn build(desc: &SpaceDescriptor, origin: &Path) -> Result<Arc<Space>, CliError> {
    Space::from_descriptor(desc)
        .map(Arc::new)
        .map_err(|e| CliError::Usage(format!("{}: {e}", origin.display())))
}

fn relative_to(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new("")).join(p)
    }
}

/// Integers become integer labels, anything else a string label.
pub fn parse_label(s: &str) -> Label {
    match s.trim().parse::<i64>() {
        Ok(v) => Label::Int(v),
        Err(_) => Label::Str(s.trim().to_string()),
    }
}

pub fn parse_subset(space: &Space, list: &str) -> Result<PointSet, CliError> {
    let labels: Vec<Label> = list.split(',').filter(|s| !s.trim().is_empty()).map(parse_label).collect();
    coarse_kit::io::resolve_set(space, &labels).map_err(|e| CliError::Usage(e.to_string()))
}
