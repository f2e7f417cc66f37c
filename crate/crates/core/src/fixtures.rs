//! Named spaces, group actions and maps used by the suites and the CLI.

use std::sync::Arc;

use crate::error::Result;
use crate::maps::{group_quotient, CoarseMap, Control, GroupAction, Quotient};
use crate::metric::Space;

pub struct GroupFixture {
    pub name: &'static str,
    pub space: Arc<Space>,
    pub action: GroupAction,
}

impl GroupFixture {
    pub fn quotient(&self) -> Result<Quotient> {
        group_quotient(self.space.clone(), &self.action)
    }
}

/// Isometric finite group actions on small spaces (all at most 16 points).
pub fn group_fixtures() -> Vec<GroupFixture> {
    vec![
        GroupFixture {
            name: "c6-z2",
            space: Arc::new(Space::cycle(6)),
            action: GroupAction::cyclic_rotation(6, 2),
        },
        GroupFixture {
            name: "line7-reflection",
            space: Arc::new(Space::integer_interval(-3, 3)),
            action: GroupAction::reversal(7),
        },
        GroupFixture {
            name: "c8-z4",
            space: Arc::new(Space::cycle(8)),
            action: GroupAction::cyclic_rotation(8, 4),
        },
        GroupFixture {
            name: "line10-reflection",
            space: Arc::new(Space::integer_interval(0, 9)),
            action: GroupAction::reversal(10),
        },
        GroupFixture {
            name: "c12-z3",
            space: Arc::new(Space::cycle(12)),
            action: GroupAction::cyclic_rotation(12, 3),
        },
        GroupFixture {
            name: "c16-z2",
            space: Arc::new(Space::cycle(16)),
            action: GroupAction::cyclic_rotation(16, 2),
        },
    ]
}

/// A map with the `n` and control it is known to satisfy.
pub struct MapFixture {
    pub name: String,
    pub map: CoarseMap,
    pub n: usize,
    pub control: Control,
}

/// `x ↦ |x|` from `{-k..k}` onto `{0..k}`.
pub fn abs_map(k: i64) -> CoarseMap {
    let x = Arc::new(Space::integer_interval(-k, k));
    let y = Arc::new(Space::integer_interval(0, k));
    let assign = (-k..=k).map(|v| v.unsigned_abs() as usize).collect();
    CoarseMap::new(x, y, assign).expect("valid by construction")
}

pub fn map_fixtures() -> Result<Vec<MapFixture>> {
    let mut out = vec![
        MapFixture {
            name: "identity-line16".into(),
            map: CoarseMap::identity(Arc::new(Space::integer_interval(0, 15))),
            n: 1,
            control: Control::identity(),
        },
        MapFixture {
            name: "abs-15".into(),
            map: abs_map(15),
            n: 2,
            control: Control::identity(),
        },
    ];
    for g in group_fixtures().into_iter().take(3) {
        let q = g.quotient()?;
        out.push(MapFixture {
            name: format!("{}-quotient", g.name),
            map: q.proj,
            n: q.group_order,
            control: Control::linear(2.0),
        });
    }
    Ok(out)
}

/// Every space of at most 16 points among the fixtures.
pub fn small_spaces() -> Vec<(String, Space)> {
    let mut out: Vec<(String, Space)> = vec![
        ("line12".into(), Space::integer_interval(0, 11)),
        ("line16".into(), Space::integer_interval(0, 15)),
    ];
    for g in group_fixtures() {
        out.push((g.name.to_string(), (*g.space).clone()));
    }
    out
}
