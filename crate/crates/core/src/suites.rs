//! Seeded property suites. Each instance runs a handful of named checks; a
//! report tallies them and keeps the first failures with enough context to
//! regenerate the instance (suite, seed, index).

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::covers::{check_r_disjoint, classes_r_disjoint, dim_at_scale, make_disjoint, mesh, Family};
use crate::dimension::{apc_witness, asdim_at_scale, ApcOutcome, RefusalReason, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::fixtures::{group_fixtures, map_fixtures};
use crate::gen::{self, instance_rng, Rand};
use crate::maps::{
    asdim_zero_witness, check_control, control_upper_strict, factorize, group_quotient, pushforward_cover, worst_split,
    CoarseMap, Control, GroupAction,
};
use crate::metric::Space;
use crate::msp::{
    asdim_to_msp, best_mass_family, best_mass_union, greedy_mass_union, least_selection, msp_pullback_searched,
    msp_pushforward, pushforward_measure, transfer_measure_selection, Link, MASS_EPS,
};
use crate::oracles;
use crate::util::cliques::MAX_VERTICES;
use crate::trees::{
    casdim_to_sfdc, net_tree, partition_refine, tree_pullback, tree_pushforward, verify_tree, DecompositionTree, TreeMode,
};

/// Failures kept per report.
pub const FAILURE_CAP: usize = 20;

/// Slack on compared masses, which are float sums in different orders.
pub const MASS_TOL: f64 = 1e-12;

pub const SUITES: &[&str] = &[
    "lemma-disjointify",
    "fibers",
    "pushforward-dim",
    "quotient-sandwich",
    "sandwich",
    "sfdc",
    "tree-transfer",
    "msp-pipelines",
    "oracles",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Instances; `None` for the suite default.
    pub count: Option<usize>,
    /// Largest random space; `None` for the suite default.
    pub max_points: Option<usize>,
}

impl SuiteConfig {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            count: None,
            max_points: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    /// Heuristic answers reported as bounds, and checks skipped for lack of
    /// an exact answer.
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub instance: usize,
    pub check: String,
    pub detail: String,
    pub context: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub config: SuiteConfig,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub checks: BTreeMap<String, Tally>,
    pub failures: Vec<Failure>,
    /// Aggregates that are not pass/fail, such as extreme values seen.
    pub notes: BTreeMap<String, Value>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    /// Checks failed by at least one instance.
    pub fn failing_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, t)| t.failed > 0)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Outcome of one instance.
pub struct Checks {
    context: Value,
    entries: Vec<(String, Option<std::result::Result<(), String>>)>,
}

impl Checks {
    fn new() -> Self {
        Self {
            context: Value::Null,
            entries: Vec::new(),
        }
    }

    pub fn context(&mut self, v: Value) {
        self.context = v;
    }

    pub fn check(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        let r = if ok { Ok(()) } else { Err(detail()) };
        self.entries.push((name.to_string(), Some(r)));
    }

    pub fn flag(&mut self, name: &str) {
        self.entries.push((name.to_string(), None));
    }

    pub fn fail(&mut self, name: &str, detail: String) {
        self.entries.push((name.to_string(), Some(Err(detail))));
    }
}

struct Runner {
    report: SuiteReport,
}

impl Runner {
    fn new(suite: &str, config: SuiteConfig) -> Self {
        Self {
            report: SuiteReport {
                suite: suite.to_string(),
                config,
                instances: 0,
                passed: 0,
                failed: 0,
                checks: BTreeMap::new(),
                failures: Vec::new(),
                notes: BTreeMap::new(),
            },
        }
    }

    fn instance(&mut self, i: usize, body: impl FnOnce(&mut Checks) -> Result<()>) {
        let mut c = Checks::new();
        if let Err(e) = body(&mut c) {
            c.fail("no-error", e.to_string());
        }
        let r = &mut self.report;
        r.instances += 1;
        let mut bad = false;
        for (name, outcome) in c.entries {
            let t = r.checks.entry(name.clone()).or_default();
            match outcome {
                None => t.flagged += 1,
                Some(Ok(())) => t.passed += 1,
                Some(Err(detail)) => {
                    t.failed += 1;
                    bad = true;
                    if r.failures.len() < FAILURE_CAP {
                        r.failures.push(Failure {
                            instance: i,
                            check: name,
                            detail,
                            context: c.context.clone(),
                        });
                    }
                }
            }
        }
        if bad {
            r.failed += 1;
        } else {
            r.passed += 1;
        }
    }

    fn note(&mut self, key: &str, v: Value) {
        self.report.notes.insert(key.to_string(), v);
    }
}

/// Runs a named suite. Unknown names are an error.
pub fn run_suite(name: &str, config: SuiteConfig) -> Result<SuiteReport> {
    let report = match name {
        "lemma-disjointify" => disjointify(config),
        "fibers" => fibers(config),
        "pushforward-dim" => pushforward_dim(config),
        "quotient-sandwich" => quotient_sandwich(config)?,
        "sandwich" | "asdim-sandwich" => sandwich(config)?,
        "sfdc" => sfdc(config),
        "tree-transfer" => tree_transfer(config)?,
        "msp-pipelines" => msp_pipelines(config),
        "oracles" => oracle_suite(config),
        _ => return Err(Error::Invalid(format!("unknown suite {name:?}; known: {}", SUITES.join(", ")))),
    };
    Ok(report)
}

fn space_json(space: &Space) -> Value {
    json!(space.matrix())
}

fn sets_json(fam: &Family) -> Value {
    json!(fam.sets.iter().map(|s| s.as_slice().to_vec()).collect::<Vec<_>>())
}

fn map_json(f: &CoarseMap) -> Value {
    json!({
        "domain": space_json(f.domain()),
        "codomain": space_json(f.codomain()),
        "assign": f.assign(),
    })
}

/// A positive scale drawn from the realized distances of `space`.
fn pick_scale(rng: &mut Rand, space: &Space) -> f64 {
    let d = space.realized_distances(&space.all());
    if d.is_empty() {
        1.0
    } else {
        d[rng.gen_range(0..d.len())]
    }
}

/// The constant control equal to the split diameter measured at `scale`.
fn constant_control(f: &CoarseMap, n: usize, scale: f64) -> Control {
    Control::Affine {
        slope: 0.0,
        offset: worst_split(f, n, scale).0,
    }
}

fn control_for(m: &gen::RandomMap, scale: f64) -> Control {
    m.control.clone().unwrap_or_else(|| constant_control(&m.map, m.n, scale))
}

fn disjointify(config: SuiteConfig) -> SuiteReport {
    let count = config.count.unwrap_or(200);
    let max = config.max_points.unwrap_or(128).max(2);
    let mut run = Runner::new("lemma-disjointify", config);
    let mut colors_seen = 0usize;
    for i in 0..count {
        let mut rng = instance_rng(config.seed, "lemma-disjointify", i);
        run.instance(i, |c| {
            let space = gen::random_space(&mut rng, 2.min(max), max);
            // scales at which the cover has dim at most 3; singletons always qualify
            let mut cover = gen::random_cover(&mut rng, &space);
            let mut scales = Vec::new();
            for attempt in 0..10 {
                if attempt == 9 {
                    cover = Family::singletons(&space.all());
                }
                scales = space.realized_distances(&space.all());
                scales.retain(|&r| dim_at_scale(&space, &cover, r) <= 3);
                if !scales.is_empty() {
                    break;
                }
                cover = gen::random_cover(&mut rng, &space);
            }
            let r = scales[rng.gen_range(0..scales.len())];
            let dim = dim_at_scale(&space, &cover, r).max(0) as usize;
            let n = rng.gen_range(dim..=3);
            c.context(json!({"space": space_json(&space), "cover": sets_json(&cover), "r": r, "n": n}));
            let out = make_disjoint(&space, &cover, r, Some(n))?;
            let fam = &out.family;

            c.check("a-covers", fam.uncovered(&space.all()).is_none(), || {
                format!("point {:?} uncovered", fam.uncovered(&space.all()))
            });
            let used = (0..fam.len()).map(|k| fam.color(k) + 1).max().unwrap_or(0);
            colors_seen = colors_seen.max(fam.used_colors());
            c.check("b-colors", used <= n + 1, || format!("color {} used with n = {n}", used - 1));
            let scale = r / (n + 1) as f64;
            c.check("b-disjoint", classes_r_disjoint(&space, fam, scale).is_ok(), || {
                let (k, v) = classes_r_disjoint(&space, fam, scale).unwrap_err();
                format!("class {k}: {} and {} at {} < {scale}", v.x, v.y, v.dist)
            });
            let (m_in, m_out) = (mesh(&space, &cover)?, mesh(&space, fam)?);
            c.check("c-mesh", m_out <= m_in + 2.0 * r, || format!("mesh {m_out} > {m_in} + 2·{r}"));
            let mut inside = Ok(());
            for (k, set) in fam.sets.iter().enumerate() {
                let Some(core) = out.trace.cores.get(k) else {
                    inside = Err(format!("set {k} has no key"));
                    break;
                };
                if &core.set != set {
                    inside = Err(format!("set {k} differs from its traced core"));
                    break;
                }
                for &t in &core.key {
                    let ball = space.neighborhood(&cover.sets[t], r);
                    if let Some(x) = set.iter().find(|&x| !ball.contains(x)) {
                        inside = Err(format!("point {x} of set {k} is outside B(U_{t}, {r})"));
                        break;
                    }
                }
                if inside.is_err() {
                    break;
                }
            }
            match inside {
                Ok(()) => c.check("d-inside", true, String::new),
                Err(e) => c.fail("d-inside", e),
            }
            Ok(())
        });
    }
    run.note("max_colors_used", json!(colors_seen));
    run.report
}

fn fibers(config: SuiteConfig) -> SuiteReport {
    let count = config.count.unwrap_or(100);
    let max = config.max_points.unwrap_or(128).max(4);
    let mut run = Runner::new("fibers", config);
    let mut relaxed = 0usize;
    for i in 0..count {
        let mut rng = instance_rng(config.seed, "fibers", i);
        run.instance(i, |c| {
            // codomains within the clique cap, so every maximal bounded set is enumerated
            let m = loop {
                let m = gen::random_map(&mut rng, max);
                if m.map.codomain().len() <= MAX_VERTICES {
                    break m;
                }
            };
            let f = &m.map;
            let r = pick_scale(&mut rng, f.codomain());
            let (cr, _, exact) = worst_split(f, m.n, r);
            relaxed += usize::from(!exact);
            c.context(json!({"map": map_json(f), "n": m.n, "r": r, "C(r)": cr}));
            let control = Control::Affine { slope: 0.0, offset: cr };
            let above = f
                .domain()
                .realized_distances(&f.domain().all())
                .into_iter()
                .find(|&d| d > cr)
                .unwrap_or(cr + 1.0);
            for big_r in [cr, above, 2.0 * cr + 1.0] {
                let w = asdim_zero_witness(f, m.n, &control, r, big_r)?;
                if !w.exact {
                    c.flag("bounded-sets-enumerated");
                    continue;
                }
                c.check("components", w.worst_components <= m.n, || {
                    format!("R = {big_r}: {} components over {:?}", w.worst_components, w.witness.as_slice())
                });
                c.check("diameter", w.worst_diam <= w.diam_bound, || {
                    format!("R = {big_r}: component diameter {} > {}", w.worst_diam, w.diam_bound)
                });
            }
            Ok(())
        });
    }
    run.note("relaxed_controls", json!(relaxed));
    run.report
}

fn pushforward_dim(config: SuiteConfig) -> SuiteReport {
    let count = config.count.unwrap_or(500);
    let max = config.max_points.unwrap_or(128).max(4);
    let mut run = Runner::new("pushforward-dim", config);
    let mut slack = i64::MAX;
    for i in 0..count {
        let mut rng = instance_rng(config.seed, "pushforward-dim", i);
        run.instance(i, |c| {
            let m = gen::random_map(&mut rng, max);
            let f = &m.map;
            let cover = gen::random_cover(&mut rng, f.domain());
            let r = pick_scale(&mut rng, f.codomain());
            let control = control_for(&m, 2.0 * r);
            c.context(json!({"map": map_json(f), "n": m.n, "cover": sets_json(&cover), "r": r, "control": control}));
            let p = pushforward_cover(f, &cover, r, m.n, &control)?;
            slack = slack.min(p.bound - p.image_dim);
            c.check("dimension-bound", p.holds(), || {
                format!("image dim {} > ({} + 1)·{} − 1", p.image_dim, p.source_dim, m.n)
            });
            let image = f.image_family(&cover);
            c.check("image-recomputed", p.family == image, || "image family differs".into());
            Ok(())
        });
    }
    run.note("min_slack", json!(slack));
    run.report
}

/// Exhaustive checks of one quotient by an isometric action.
fn check_quotient(c: &mut Checks, space: &Arc<Space>, action: &GroupAction) -> Result<()> {
    let q = group_quotient(space.clone(), action)?;
    let sym = &q.symmetrized;
    let n = sym.len();
    let mut invariant = true;
    for p in &action.perms {
        for x in 0..n {
            for y in 0..n {
                invariant &= sym.d(p[x], p[y]) == sym.d(x, y);
            }
        }
    }
    c.check("isometric-action", invariant, || "symmetrized metric is not invariant".into());
    let orbit_diam = q.orbits.iter().map(|o| sym.diameter(o).unwrap_or(0.0)).fold(0.0, f64::max);
    let mut hausdorff_ok = true;
    let mut lipschitz = true;
    let mut lower = true;
    for x in 0..n {
        for y in 0..n {
            let (a, b) = (q.proj.at(x), q.proj.at(y));
            let dq = q.space.d(a, b);
            hausdorff_ok &= dq == oracles::hausdorff(sym, q.orbits[a].as_slice(), q.orbits[b].as_slice());
            lipschitz &= dq <= sym.d(x, y);
            lower &= sym.d(x, y) - 2.0 * orbit_diam <= dq;
        }
    }
    c.check("quotient-hausdorff", hausdorff_ok, || "quotient distance differs from orbit Hausdorff".into());
    c.check("projection-1-lipschitz", lipschitz, || "projection expands a distance".into());
    c.check("quotient-lower", lower, || format!("d − 2·{orbit_diam} exceeds a quotient distance"));
    let mut scales = vec![0.0];
    scales.extend(q.space.realized_distances(&q.space.all()));
    for r in scales {
        match check_control(&q.proj, q.group_order, &Control::linear(2.0), r) {
            Ok(chk) if chk.exact => c.check("projection-control-2r", true, String::new),
            Ok(_) => c.flag("projection-control-2r"),
            Err(e) => c.fail("projection-control-2r", e.to_string()),
        }
    }
    Ok(())
}

fn check_factorization(c: &mut Checks, f: &CoarseMap, n: usize, big_r: f64) -> Result<()> {
    let fz = factorize(f, n, big_r)?;
    let x = &fz.adjusted;
    let r = fz.class_diam;
    let mut sandwich = true;
    let mut hausdorff_ok = true;
    for a in 0..x.len() {
        for b in 0..x.len() {
            let (ca, cb) = (fz.p.at(a), fz.p.at(b));
            let dz = fz.z.d(ca, cb);
            let d = x.d(a, b);
            sandwich &= d - 2.0 * r <= dz && dz <= d + 2.0 * r;
            hausdorff_ok &= dz == oracles::hausdorff(x, fz.classes[ca].as_slice(), fz.classes[cb].as_slice());
        }
    }
    c.check("factor-sandwich", sandwich, || format!("|d_H − d| > 2·{r} for some pair"));
    c.check("factor-hausdorff", hausdorff_ok, || "class distance differs from Hausdorff".into());
    let composed = fz.p.then(&fz.q)?;
    c.check("factor-composes", composed.assign() == f.assign(), || "q ∘ p differs from f".into());
    let section = fz.selection.iter().enumerate().all(|(z, &s)| fz.p.at(s) == z);
    c.check("selection-section", section, || "p ∘ s is not the identity".into());
    c.check("selection-offset", fz.selection_offset() <= r, || {
        format!("selection offset {} > class diameter {r}", fz.selection_offset())
    });
    c.check("factor-fiber-classes", fz.max_fiber_classes <= n, || {
        format!("{} classes in a fiber, n = {n}", fz.max_fiber_classes)
    });
    Ok(())
}

fn quotient_sandwich(config: SuiteConfig) -> Result<SuiteReport> {
    let count = config.count.unwrap_or(50);
    let max = config.max_points.unwrap_or(64).max(4);
    let mut run = Runner::new("quotient-sandwich", config);
    let fixtures = group_fixtures();
    for (i, g) in fixtures.iter().enumerate() {
        run.instance(i, |c| {
            c.context(json!({"fixture": g.name}));
            check_quotient(c, &g.space, &g.action)?;
            let q = g.quotient()?;
            check_factorization(c, &q.proj, q.group_order, q.orbits.iter().map(|o| q.symmetrized.diam_or_zero(o)).fold(0.0, f64::max))
        });
    }
    for fx in map_fixtures()? {
        let i = run.report.instances;
        run.instance(i, |c| {
            c.context(json!({"fixture": fx.name}));
            let big_r = worst_split(&fx.map, fx.n, 0.0).0;
            check_factorization(c, &fx.map, fx.n, big_r)
        });
    }
    let base = run.report.instances;
    for i in 0..count {
        let mut rng = instance_rng(config.seed, "quotient-sandwich", i);
        run.instance(base + i, |c| {
            let m = gen::random_map(&mut rng, max);
            let big_r = worst_split(&m.map, m.n, 0.0).0.max(pick_scale(&mut rng, m.map.domain()));
            c.context(json!({"map": map_json(&m.map), "n": m.n, "R": big_r}));
            check_factorization(c, &m.map, m.n, big_r)
        });
    }
    Ok(run.report)
}

/// `(name, space, action)` for every fixture space of at most `max` points;
/// spaces without a group get the trivial one.
fn sandwich_cases(max: usize) -> Vec<(String, Arc<Space>, GroupAction)> {
    let mut out: Vec<(String, Arc<Space>, GroupAction)> = group_fixtures()
        .into_iter()
        .map(|g| (g.name.to_string(), g.space, g.action))
        .collect();
    for (name, len) in [("line12", 12), ("line16", 16)] {
        let s = Arc::new(Space::integer_interval(0, len - 1));
        out.push((format!("{name}-trivial"), s, GroupAction::trivial(len as usize)));
    }
    out.retain(|(_, s, _)| s.len() <= max);
    out
}

fn sandwich(config: SuiteConfig) -> Result<SuiteReport> {
    let max = config.max_points.unwrap_or(16);
    let mut run = Runner::new("sandwich", config);
    let mut exact = 0usize;
    for (i, (name, space, action)) in sandwich_cases(max).into_iter().enumerate() {
        run.instance(i, |c| {
            let q = group_quotient(space, &action)?;
            let x = &q.symmetrized;
            let g = q.group_order as i64;
            let unit = x.realized_distances(&x.all()).first().copied().unwrap_or(1.0);
            let orbit_diam = q.orbits.iter().map(|o| x.diam_or_zero(o)).fold(0.0, f64::max);
            c.context(json!({"fixture": name, "unit": unit, "orbit_diam": orbit_diam}));
            for (rf, cf) in [(1.0, 1.0), (2.0, 2.0), (2.0, 4.0)] {
                let (r, cap) = (rf * unit, cf * unit);
                let a = asdim_at_scale(x, r, cap, DEFAULT_BUDGET)?;
                let b = asdim_at_scale(&q.space, r, cap, DEFAULT_BUDGET)?;
                let up = asdim_at_scale(x, r, cap + orbit_diam, DEFAULT_BUDGET)?;
                let name = format!("r={r},cap={cap}");
                if a.exact && b.exact {
                    exact += 1;
                    c.check("quotient-upper", b.dim <= (a.dim + 1) * g - 1, || {
                        format!("{name}: asdim(X/G) = {} > ({} + 1)·{g} − 1", b.dim, a.dim)
                    });
                } else {
                    c.flag("quotient-upper");
                }
                if up.exact && b.exact {
                    c.check("space-upper", up.dim <= b.dim, || {
                        format!("{name}: asdim(X, cap + {orbit_diam}) = {} > asdim(X/G) = {}", up.dim, b.dim)
                    });
                } else {
                    c.flag("space-upper");
                }
            }
            Ok(())
        });
    }
    run.note("exact_settings", json!(exact));
    Ok(run.report)
}

fn sfdc(config: SuiteConfig) -> SuiteReport {
    let count = config.count.unwrap_or(200);
    let max = config.max_points.unwrap_or(128).max(2);
    let mut run = Runner::new("sfdc", config);
    let mut deepest = 0usize;
    for i in 0..count {
        let mut rng = instance_rng(config.seed, "sfdc", i);
        run.instance(i, |c| {
            let space = gen::random_space(&mut rng, 2.min(max), max);
            let t = gen::random_tree(&mut rng, &space, 0.3)?;
            c.context(json!({"space": space_json(&space), "tree": t}));
            if let Err(v) = verify_tree(&space, &t, TreeMode::Casdim) {
                c.fail("input-valid", v.to_string());
                return Ok(());
            }
            let refined = partition_refine(&space, &t)?;
            let partitions = refined.tree.levels.iter().all(|l| is_partition(&space, l));
            c.check("refine-partition", partitions, || "a refined level is not a partition".into());
            let same_scales = refined.tree.scales == t.scales;
            let refined_ok = verify_tree(&space, &refined.tree, TreeMode::Casdim);
            c.check("refine-disjoint", same_scales && refined_ok.is_ok(), || match refined_ok {
                Err(v) => v.to_string(),
                Ok(_) => "scales changed".into(),
            });
            let inside = refined.origins.iter().enumerate().all(|(lvl, o)| {
                o.iter()
                    .enumerate()
                    .all(|(k, &u)| refined.tree.levels[lvl].sets[k].is_subset(&t.levels[lvl].sets[u]))
            });
            c.check("refine-origins", inside, || "a refined element leaves its origin".into());
            let s = casdim_to_sfdc(&space, &t, None)?;
            deepest = deepest.max(s.depth());
            match verify_tree(&space, &s, TreeMode::Sfdc) {
                Ok(_) => c.check("sfdc-valid", true, String::new),
                Err(v) => c.fail("sfdc-valid", v.to_string()),
            }
            Ok(())
        });
    }
    run.note("deepest_sfdc_tree", json!(deepest));
    run.report
}

fn is_partition(space: &Space, fam: &Family) -> bool {
    let mut count = vec![0usize; space.len()];
    for s in &fam.sets {
        for x in s {
            count[x] += 1;
        }
    }
    count.iter().all(|&k| k == 1)
}

/// Per split level of `t`, the largest realized domain distance `d` whose
/// strict control `E⁻(d)` stays below the level's least cross gap.
fn pullback_scales(f: &CoarseMap, t: &DecompositionTree, split_levels: usize) -> Vec<f64> {
    let x = f.domain();
    let dists = x.realized_distances(&x.all());
    (0..split_levels)
        .map(|i| {
            let mut gap = f64::INFINITY;
            for (u, subs) in t.splits[i].iter().enumerate() {
                for j in 0..subs.len() {
                    let fam = t.subfamily(i, u, j);
                    let hit = Family::new(fam.sets.into_iter().filter(|s| !f.preimage(s).is_empty()).collect());
                    if let Some((d, _, _)) = crate::covers::min_cross_distance(f.codomain(), &hit) {
                        gap = gap.min(d);
                    }
                }
            }
            dists
                .iter()
                .copied()
                .filter(|&d| control_upper_strict(f, d) < gap)
                .fold(dists.first().copied().unwrap_or(1.0), f64::max)
        })
        .collect()
}

fn tree_transfer(config: SuiteConfig) -> Result<SuiteReport> {
    let mut run = Runner::new("tree-transfer", config);
    let settings: [(&[f64], &[f64]); 3] = [(&[2.0], &[2.0]), (&[4.0, 1.0], &[4.0, 2.0]), (&[3.0, 1.0, 0.0], &[3.0, 2.0, 1.0])];
    let mut i = 0;
    let mut audited = 0usize;
    for fx in map_fixtures()? {
        for (radii, scales) in settings {
            run.instance(i, |c| {
                c.context(json!({"fixture": fx.name, "radii": radii, "scales": scales}));
                let (x, y) = (fx.map.domain(), fx.map.codomain());

                let ty = net_tree(y, radii, scales)?;
                let cert = verify_tree(y, &ty, TreeMode::Casdim).map_err(|v| Error::Tree(v.to_string()))?;
                let split = cert.bounded_level - 1;
                let sx = pullback_scales(&fx.map, &ty, split);
                let pulled = tree_pullback(&fx.map, fx.n, &fx.control, &ty, &sx)?;
                match verify_tree(x, &pulled.tree, TreeMode::Casdim) {
                    Ok(_) => c.check("pullback-valid", true, String::new),
                    Err(v) => c.fail("pullback-valid", v.to_string()),
                }

                let tx = net_tree(x, radii, scales)?;
                let cert = verify_tree(x, &tx, TreeMode::Casdim).map_err(|v| Error::Tree(v.to_string()))?;
                let b = partition_refine(x, &tx)?.tree.truncated(cert.bounded_level - 1).depth() - 1;
                let mut unit = 1.0;
                let mut pushed = None;
                for _ in 0..40 {
                    let targets: Vec<f64> = (0..b).map(|k| unit * (k + 1) as f64).collect();
                    match tree_pushforward(&fx.map, fx.n, &fx.control, &tx, &targets) {
                        Ok(p) => {
                            pushed = Some(p);
                            break;
                        }
                        Err(Error::Scales(_)) => unit /= 2.0,
                        Err(e) => return Err(e),
                    }
                }
                let Some(p) = pushed else {
                    c.fail("pushforward-scales", "no target scales satisfy the gap rule".into());
                    return Ok(());
                };
                match verify_tree(y, &p.tree, TreeMode::Casdim) {
                    Ok(_) => c.check("pushforward-valid", true, String::new),
                    Err(v) => c.fail("pushforward-valid", v.to_string()),
                }
                // containment audit, redone here from the origins
                let refined = partition_refine(x, &tx)?.tree;
                let mut contained = true;
                for (lvl, a) in p.audit.iter().enumerate() {
                    for (k, set) in p.tree.levels[lvl + 1].sets.iter().enumerate() {
                        let w = &refined.levels[lvl + 1].sets[p.origins[lvl + 1][k]];
                        let ball = y.neighborhood(&fx.map.image(w), a.slack);
                        contained &= set.is_subset(&ball);
                        audited += 1;
                    }
                }
                c.check("pushforward-containment", contained, || "an output set leaves B(f(W), L)".into());
                Ok(())
            });
            i += 1;
        }
    }
    run.note("containments_checked", json!(audited));
    Ok(run.report)
}

/// Smallest value in `sorted` accepted by a monotone predicate.
fn least_accepted(sorted: &[f64], mut ok: impl FnMut(f64) -> bool) -> Option<f64> {
    let (mut lo, mut hi) = (0, sorted.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(sorted[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    sorted.get(lo).copied()
}

fn with_zero(mut d: Vec<f64>) -> Vec<f64> {
    d.insert(0, 0.0);
    d
}

fn msp_pipelines(config: SuiteConfig) -> SuiteReport {
    let count = config.count.unwrap_or(50);
    let max = config.max_points.unwrap_or(16).max(4);
    let mut run = Runner::new("msp-pipelines", config);
    let mut tight = (0usize, 0usize);
    let mut least = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for i in 0..count {
        let mut rng = instance_rng(config.seed, "msp-pipelines", i);
        run.instance(i, |c| {
            let m = gen::random_map(&mut rng, max);
            let f = &m.map;
            let (x, y) = (f.domain().clone(), f.codomain().clone());
            let (kind_x, mu_x) = gen::random_measure(&mut rng, x.len());
            let (kind_y, mu_y) = gen::random_measure(&mut rng, y.len());
            c.context(json!({"map": map_json(f), "n": m.n, "mu_x": mu_x.weights, "mu_y": mu_y.weights,
                "kinds": [kind_x, kind_y]}));

            // color classes of a disjointified cover
            let cover = gen::random_cover(&mut rng, &x);
            let r = pick_scale(&mut rng, &x);
            let dim = dim_at_scale(&x, &cover, r).max(0) as usize;
            let out = make_disjoint(&x, &cover, r, Some(dim))?;
            let choice = asdim_to_msp(&x, &out.family, r / (dim + 1) as f64, &mu_x)?;
            let mass = mu_x.mass(&choice.family.family.union());
            least.0 = least.0.min(mass * (dim + 1) as f64);
            c.check("color-mass", mass >= 1.0 / (dim + 1) as f64 - MASS_EPS, || {
                format!("heaviest color has mass {mass} < 1/{}", dim + 1)
            });

            // pushforward of a heavy domain witness
            let big_r = pick_scale(&mut rng, &y);
            let n = m.n;
            let control = control_for(&m, 2.0 * n as f64 * big_r);
            let gap = control.eval(2.0 * n as f64 * big_r).next_up();
            let selection = least_selection(f)?;
            let lambda = transfer_measure_selection(f, &mu_y, &selection)?;
            let bounds = with_zero(x.realized_distances(&x.all()));
            let b = least_accepted(&bounds, |s| {
                best_mass_family(&x, &lambda, gap, s).is_ok_and(|w| w.family.mass >= 0.5 - MASS_EPS)
            })
            .ok_or_else(|| Error::Invalid("no witness bound reaches mass 1/2".into()))?;
            let witness = best_mass_family(&x, &lambda, gap, b)?;
            let pushed = msp_pushforward(f, n, &control, &mu_y, big_r, &selection, &witness.family.family)?;
            let pm = mu_y.mass(&pushed.family.family.union());
            least.1 = least.1.min(pm * (2 * n) as f64);
            c.check("push-mass", pm >= 1.0 / (2 * n) as f64 - MASS_EPS, || format!("mass {pm} < 1/(2·{n})"));
            c.check("push-disjoint", check_r_disjoint(&y, &pushed.family.family, big_r).is_ok(), || {
                "output is not R-disjoint".into()
            });
            let out_mesh = mesh(&y, &pushed.family.family)?;
            c.check("push-mesh", out_mesh <= pushed.family.bound, || {
                format!("mesh {out_mesh} > {}", pushed.family.bound)
            });
            tight.1 += 1;
            if pushed.tight_bound_holds {
                tight.0 += 1;
            }

            // pullback through exhaustive routines
            let scale_x = pick_scale(&mut rng, &x);
            let scale_y = crate::maps::control_upper(f).eval(scale_x);
            let pushed_mu = pushforward_measure(f, &mu_x)?;
            let ky = with_zero(y.realized_distances(&y.all()));
            let k = least_accepted(&ky, |k| {
                best_mass_union(&y, &pushed_mu, scale_y, k, Link::Closed).is_ok_and(|u| u.mass >= 0.5 - MASS_EPS)
            })
            .ok_or_else(|| Error::Invalid("no codomain bound reaches mass 1/2".into()))?;
            let sx = with_zero(x.realized_distances(&x.all()));
            let s = least_accepted(&sx, |s| msp_pullback_searched(f, &mu_x, scale_x, k, s).is_ok())
                .ok_or_else(|| Error::Invalid("no fiber bound reaches mass 1/2".into()))?;
            let pulled = msp_pullback_searched(f, &mu_x, scale_x, k, s)?;
            let pm = mu_x.mass(&pulled.omega);
            least.2 = least.2.min(pm * 4.0);
            c.check("pull-mass", pm >= 0.25 - MASS_EPS, || format!("mass {pm} < 1/4"));
            let comps = x.components(&pulled.omega, scale_x);
            let bound = comps.iter().map(|cc| x.diameter(cc).unwrap_or(0.0)).fold(0.0, f64::max);
            c.check("pull-bound", comps == pulled.components && bound <= pulled.bound, || {
                "components or their bound differ".into()
            });
            Ok(())
        });
    }
    run.note("tight_mesh_held", json!({"held": tight.0, "of": tight.1}));
    run.note(
        "least_mass_over_bound",
        json!({"color": least.0, "pushforward": least.1, "pullback": least.2}),
    );
    run.report
}

fn oracle_suite(config: SuiteConfig) -> SuiteReport {
    let count = config.count.unwrap_or(60);
    let max = config.max_points.unwrap_or(12).clamp(2, oracles::ORACLE_CAP);
    let mut run = Runner::new("oracles", config);
    for i in 0..count {
        let mut rng = instance_rng(config.seed, "oracles", i);
        run.instance(i, |c| {
            let space = gen::random_space(&mut rng, 2.min(max), max);
            let r = pick_scale(&mut rng, &space);
            let cap = pick_scale(&mut rng, &space) * rng.gen_range(0..3) as f64;
            c.context(json!({"space": space_json(&space), "r": r, "cap": cap}));

            let truth = oracles::min_partition_dim(&space, r, cap);
            for (label, budget) in [("asdim", DEFAULT_BUDGET), ("asdim-starved", 20)] {
                let a = asdim_at_scale(&space, r, cap, budget)?;
                let cover_ok = a.cover.uncovered(&space.all()).is_none()
                    && mesh(&space, &a.cover)? <= cap
                    && dim_at_scale(&space, &a.cover, r) == a.dim;
                c.check(&format!("{label}-certificate"), cover_ok, || "returned cover does not certify".into());
                if a.exact {
                    c.check(label, a.dim == truth, || format!("dim {} but the oracle finds {truth}", a.dim));
                } else {
                    c.check(label, a.dim >= truth, || format!("bound {} below the optimum {truth}", a.dim));
                    c.flag(&format!("{label}-bound"));
                }
            }

            let (_, mu) = gen::random_measure(&mut rng, space.len());
            let s = pick_scale(&mut rng, &space) * rng.gen_range(0..2) as f64;
            let best = oracles::max_family_mass(&space, &mu.weights, r, s);
            let got = best_mass_family(&space, &mu, r, s)?;
            if got.exact {
                c.check("best-mass", (got.family.mass - best).abs() <= MASS_TOL, || {
                    format!("mass {} but the oracle finds {best}", got.family.mass)
                });
            } else {
                c.check("best-mass", got.family.mass <= best + MASS_TOL, || "greedy mass above optimum".into());
                c.flag("best-mass-bound");
            }
            let g = greedy_mass_union(&space, &mu, r, s, Link::Strict);
            let agrees = (g.mass - best).abs() <= MASS_TOL;
            c.check("greedy-mass", g.mass <= best + MASS_TOL && (agrees || !g.exact), || {
                format!("greedy mass {} against optimum {best}, exact = {}", g.mass, g.exact)
            });
            if !agrees {
                c.flag("greedy-mass-bound");
            }

            let k = rng.gen_range(1..=3usize.min(space.len()));
            let mut scales: Vec<f64> = space.realized_distances(&space.all());
            scales.dedup();
            let mut pick: Vec<f64> = (0..k).map(|_| scales[rng.gen_range(0..scales.len())]).collect();
            pick.sort_by(f64::total_cmp);
            pick.dedup();
            let apc_cap = pick_scale(&mut rng, &space);
            let feasible = oracles::families_exist(&space, &pick, apc_cap);
            for (label, budget) in [("apc", DEFAULT_BUDGET), ("apc-starved", 5)] {
                match apc_witness(&space, &pick, apc_cap, budget)? {
                    ApcOutcome::Found { witness, .. } => {
                        let valid = witness.holds(&space) && witness.mesh() <= apc_cap;
                        c.check(label, valid && feasible, || {
                            format!("witness valid = {valid}, oracle feasible = {feasible}")
                        });
                    }
                    ApcOutcome::Refused {
                        reason: RefusalReason::Impossible,
                        ..
                    } => c.check(label, !feasible, || "refused as impossible but the oracle finds one".into()),
                    ApcOutcome::Refused {
                        reason: RefusalReason::BudgetExhausted,
                        ..
                    } => c.flag(&format!("{label}-bound")),
                }
            }
            Ok(())
        });
    }
    run.report
}

/// Reruns a suite and compares the serialized reports byte for byte.
pub fn rerun_identical(name: &str, config: SuiteConfig) -> Result<bool> {
    let a = serde_json::to_string(&run_suite(name, config)?).map_err(|e| Error::Invalid(e.to_string()))?;
    let b = serde_json::to_string(&run_suite(name, config)?).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(a == b)
}
