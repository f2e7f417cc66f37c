mod input;
mod report;

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use coarse_kit::covers::{dim_at_scale, lebesgue_number, make_disjoint, max_multiplicity_on, mesh, Family};
use coarse_kit::dimension::{apc_normalize, apc_pullback, apc_pushforward, apc_witness, ApcOutcome, DEFAULT_BUDGET};
use coarse_kit::io::{descriptor_of, labels_of, DimWitnessJson, FamilyJson, TreeJson, WitnessJson, SCHEMA};
use coarse_kit::maps::{
    check_control, factorize, group_quotient, n_to_1_control, n_to_1_profile, pushforward_cover,
    pushforward_disjointify, CoarseMap, GroupAction,
};
use coarse_kit::msp::{
    asdim_to_msp, best_mass_family, least_selection, map_msp_check, msp_pullback_searched, msp_pushforward, Measure,
    Verdict,
};
use coarse_kit::suites::{run_suite, SuiteConfig};
use coarse_kit::trees::{
    casdim_to_sfdc, partition_refine, tree_pullback, tree_pushforward, tree_to_cover, verify_tree, DecompositionTree,
    TreeMode,
};
use coarse_kit::{Error, Space};
use serde_json::{json, Value};

use input::{parse_subset, Inputs};
use report::{Outcome, Report, Status};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable input; exit 2.
    Usage(String),
    /// An operation refused its input.
    Op(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Op(e)
    }
}

#[derive(Parser)]
#[command(name = "coarse-kit", version, about = "Finite-scale coarse geometry checks with JSON reports")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reports are always JSON; accepted for scripts that pass it.
    #[arg(long, global = true)]
    json: bool,
    /// Add wall-clock time to the report. Breaks byte-identical reruns.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a space and summarize it.
    Space {
        #[arg(long)]
        space: PathBuf,
    },
    #[command(subcommand)]
    Cover(CoverCmd),
    #[command(subcommand)]
    Map(MapCmd),
    /// Orbit space of a group action with the Hausdorff metric.
    Quotient {
        #[arg(long)]
        space: PathBuf,
        /// JSON `{"table": [[..]], "perms": [[..]]}`.
        #[arg(long)]
        action: PathBuf,
    },
    #[command(subcommand)]
    Apc(ApcCmd),
    #[command(subcommand)]
    Tree(TreeCmd),
    #[command(subcommand)]
    Msp(MspCmd),
    /// Run a seeded property suite.
    Suite {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        max_points: Option<usize>,
    },
}

#[derive(Args)]
struct SpaceCover {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    cover: PathBuf,
}

#[derive(Subcommand)]
enum CoverCmd {
    /// Dimension of a cover at a scale.
    Dim {
        #[command(flatten)]
        io: SpaceCover,
        #[arg(long)]
        scale: f64,
    },
    /// Split a cover into disjoint color classes.
    Disjointify {
        #[command(flatten)]
        io: SpaceCover,
        #[arg(long)]
        scale: f64,
        /// Dimension bound; measured when absent.
        #[arg(long)]
        n: Option<usize>,
    },
    Lebesgue {
        #[command(flatten)]
        io: SpaceCover,
    },
}

#[derive(Args)]
struct MapControl {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    n: usize,
    /// identity | linear:S | affine:S,O | measured | path to a control JSON.
    #[arg(long, default_value = "measured")]
    control: String,
}

#[derive(Subcommand)]
enum MapCmd {
    /// Measure the least control, or check a given one at a scale.
    Control {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        control: Option<String>,
        /// Scale at which a given control is checked.
        #[arg(long)]
        scale: Option<f64>,
        /// Refuse once a part diameter above this is needed.
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Components of preimages of bounded sets.
    Profile {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        scale: f64,
        #[arg(long)]
        big_r: f64,
    },
    /// Push a domain cover to the codomain.
    Push {
        #[command(flatten)]
        m: MapControl,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        scale: f64,
        #[arg(long)]
        disjointify: bool,
    },
    /// Factor through the classes of fiber components.
    Factor {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        big_r: f64,
    },
}

#[derive(Subcommand)]
enum ApcCmd {
    /// Search for families disjoint at the given scales.
    Witness {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_delimiter = ',')]
        scales: Vec<f64>,
        #[arg(long)]
        mesh_cap: f64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Turn families of bounded dimension into disjoint ones.
    Normalize {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, value_delimiter = ',')]
        gaps: Vec<f64>,
    },
    Push {
        #[command(flatten)]
        m: MapControl,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
    },
    Pull {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, value_delimiter = ',')]
        scales: Vec<f64>,
        #[arg(long)]
        bound: Option<f64>,
    },
}

#[derive(Args)]
struct TreeIn {
    #[arg(long)]
    tree: PathBuf,
    /// Overrides the space named inside the tree file.
    #[arg(long)]
    space: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Sfdc,
    Casdim,
}

impl From<ModeArg> for TreeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sfdc => TreeMode::Sfdc,
            ModeArg::Casdim => TreeMode::Casdim,
        }
    }
}

#[derive(Subcommand)]
enum TreeCmd {
    Verify {
        #[command(flatten)]
        t: TreeIn,
        /// Defaults to the mode recorded in the tree.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Make every level a partition.
    Refine {
        #[command(flatten)]
        t: TreeIn,
    },
    /// Convert a valid tree to one with binary branching.
    Convert {
        #[command(flatten)]
        t: TreeIn,
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<f64>>,
    },
    /// Flatten to a colored cover.
    Cover {
        #[command(flatten)]
        t: TreeIn,
        #[arg(long)]
        scale: f64,
    },
    /// Image tree of a domain tree.
    Push {
        #[command(flatten)]
        m: MapControl,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
    },
    /// Preimage tree of a codomain tree.
    Pull {
        #[command(flatten)]
        m: MapControl,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_delimiter = ',')]
        scales: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum MspCmd {
    /// Heaviest disjoint family of bounded sets; with --cover, the heaviest color class.
    Family {
        #[arg(long)]
        space: PathBuf,
        /// JSON `{"weights": [..]}`; uniform when absent.
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        scale: f64,
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long)]
        cover: Option<PathBuf>,
    },
    Push {
        #[command(flatten)]
        m: MapControl,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        scale: f64,
        /// Domain family; searched at the required gap when absent. The
        /// measure lives on the codomain.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Bound on witness members when searching.
        #[arg(long)]
        bound: Option<f64>,
    },
    Pull {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        scale: f64,
        /// Bound on codomain components.
        #[arg(long)]
        k: f64,
        /// Bound on domain components.
        #[arg(long)]
        s: f64,
    },
    /// Whether preimages of small sets carry heavy bounded families.
    Check {
        #[arg(long)]
        map: PathBuf,
        /// Comma-separated codomain labels.
        #[arg(long)]
        subset: String,
        #[arg(long)]
        scale: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn family_json(space: &Space, fam: &Family) -> Value {
    to_value(&FamilyJson::from_family(space, fam))
}

fn tree_json(space: &Space, t: &DecompositionTree) -> Value {
    to_value(&TreeJson::from_tree(space, t))
}

fn measure_or_uniform(inputs: &mut Inputs, path: &Option<PathBuf>, space: &Space) -> Result<Measure, CliError> {
    match path {
        Some(p) => inputs.measure("measure", p, space),
        None => Ok(Measure::uniform(space.len())?),
    }
}

fn load_tree(inputs: &mut Inputs, t: &TreeIn) -> Result<(Arc<Space>, DecompositionTree), CliError> {
    let raw: TreeJson = inputs.json("tree", &t.tree)?;
    let space = match (&t.space, &raw.space) {
        (Some(p), _) => inputs.space("space", p)?,
        (None, Some(r)) => inputs.space_ref("tree.space", r, &t.tree)?,
        (None, None) => return Err(CliError::Usage(format!("{}: no space given", t.tree.display()))),
    };
    let tree = raw
        .resolve(&space)
        .map_err(|e| CliError::Usage(format!("{}: {e}", t.tree.display())))?;
    Ok((space, tree))
}

fn tree_on(inputs: &mut Inputs, path: &PathBuf, space: &Space) -> Result<DecompositionTree, CliError> {
    let raw: TreeJson = inputs.json("tree", path)?;
    raw.resolve(space).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn map_control(inputs: &mut Inputs, m: &MapControl) -> Result<(CoarseMap, coarse_kit::maps::Control), CliError> {
    let f = inputs.map(&m.map)?;
    let control = inputs.control(&m.control, &f, m.n)?;
    Ok((f, control))
}

fn run(cmd: &Command, inputs: &mut Inputs) -> Result<(String, Value, Outcome), CliError> {
    Ok(match cmd {
        Command::Space { space } => {
            let x = inputs.space("space", space)?;
            let all = x.all();
            let distances = x.realized_distances(&all);
            (
                "space".into(),
                json!({}),
                Outcome::ok(json!({
                    "points": x.len(),
                    "labels": x.labels(),
                    "diameter": x.diameter(&all).ok(),
                    "min_distance": distances.iter().copied().find(|&d| d > 0.0),
                    "distinct_distances": distances.len(),
                    "origin": x.origin(),
                    "matrix": descriptor_of(&x),
                })),
            )
        }
        Command::Cover(c) => cover(c, inputs)?,
        Command::Map(c) => map(c, inputs)?,
        Command::Quotient { space, action } => {
            let x = inputs.space("space", space)?;
            let g: GroupAction = inputs.json("action", action)?;
            let q = group_quotient(x, &g)?;
            (
                "quotient".into(),
                json!({}),
                Outcome::ok(json!({
                    "group_order": q.group_order,
                    "orbits": q.orbits.iter().map(|o| labels_of(&q.symmetrized, o)).collect::<Vec<_>>(),
                    "quotient": descriptor_of(&q.space),
                    "symmetrized": descriptor_of(&q.symmetrized),
                    "projection": q.proj.assign(),
                })),
            )
        }
        Command::Apc(c) => apc(c, inputs)?,
        Command::Tree(c) => tree(c, inputs)?,
        Command::Msp(c) => msp(c, inputs)?,
        Command::Suite {
            name,
            seed,
            count,
            max_points,
        } => {
            let config = SuiteConfig {
                seed: *seed,
                count: *count,
                max_points: *max_points,
            };
            let r = run_suite(name, config)?;
            let params = json!({"name": name, "seed": seed, "count": count, "max_points": max_points});
            ("suite".into(), params, Outcome::holds(r.ok(), to_value(&r)))
        }
    })
}

fn cover(c: &CoverCmd, inputs: &mut Inputs) -> Result<(String, Value, Outcome), CliError> {
    let io = match c {
        CoverCmd::Dim { io, .. } | CoverCmd::Disjointify { io, .. } | CoverCmd::Lebesgue { io } => io,
    };
    let x = inputs.space("space", &io.space)?;
    let fam = inputs.family("cover", &io.cover, &x)?;
    Ok(match c {
        CoverCmd::Dim { scale, .. } => {
            let all = x.all();
            (
                "cover dim".into(),
                json!({"scale": scale}),
                Outcome::ok(json!({
                    "dim": dim_at_scale(&x, &fam, *scale),
                    "multiplicity": max_multiplicity_on(&x, &all, &fam, *scale),
                    "mesh": mesh(&x, &fam).ok(),
                    "covers": fam.uncovered(&all).is_none(),
                })),
            )
        }
        CoverCmd::Disjointify { scale, n, .. } => {
            let out = make_disjoint(&x, &fam, *scale, *n)?;
            let colors = out.family.color_count();
            (
                "cover disjointify".into(),
                json!({"scale": scale, "n": n}),
                Outcome::ok(json!({
                    "family": family_json(&x, &out.family),
                    "colors": colors,
                    "class_scale": scale / colors.max(1) as f64,
                    "mesh": mesh(&x, &out.family).ok(),
                    "input_mesh": mesh(&x, &fam).ok(),
                    "trace": to_value(&out.trace),
                })),
            )
        }
        CoverCmd::Lebesgue { .. } => (
            "cover lebesgue".into(),
            json!({}),
            Outcome::ok(json!({ "lebesgue": lebesgue_number(&x, &fam)? })),
        ),
    })
}

fn map(c: &MapCmd, inputs: &mut Inputs) -> Result<(String, Value, Outcome), CliError> {
    Ok(match c {
        MapCmd::Control {
            map,
            n,
            control,
            scale,
            cap,
        } => {
            let f = inputs.map(map)?;
            let params = json!({"n": n, "control": control, "scale": scale, "cap": cap});
            match (control, scale) {
                (Some(spec), Some(s)) => {
                    let ctl = inputs.control(spec, &f, *n)?;
                    let check = check_control(&f, *n, &ctl, *s)?;
                    ("map control".into(), params, Outcome::ok(to_value(&check)))
                }
                (Some(_), None) => return Err(CliError::Usage("--control needs --scale".into())),
                (None, _) => match n_to_1_control(&f, *n, *cap)? {
                    Ok(c) => ("map control".into(), params, Outcome::ok(to_value(&c))),
                    Err(r) => ("map control".into(), params, Outcome::with(Status::Refused, to_value(&r))),
                },
            }
        }
        MapCmd::Profile { map, scale, big_r } => {
            let f = inputs.map(map)?;
            let p = n_to_1_profile(&f, *scale, *big_r);
            ("map profile".into(), json!({"scale": scale, "big_r": big_r}), Outcome::ok(to_value(&p)))
        }
        MapCmd::Push {
            m,
            cover,
            scale,
            disjointify,
        } => {
            let (f, ctl) = map_control(inputs, m)?;
            let fam = inputs.family("cover", cover, f.domain())?;
            let y = f.codomain();
            let params = json!({"n": m.n, "control": to_value(&ctl), "scale": scale, "disjointify": disjointify});
            let out = if *disjointify {
                let p = pushforward_disjointify(&f, &fam, *scale, m.n, &ctl)?;
                let mut v = to_value(&p);
                v["family"] = family_json(y, &p.family);
                Outcome::ok(v)
            } else {
                let p = pushforward_cover(&f, &fam, *scale, m.n, &ctl)?;
                let mut v = to_value(&p);
                v["family"] = family_json(y, &p.family);
                Outcome::holds(p.holds(), v)
            };
            ("map push".into(), params, out)
        }
        MapCmd::Factor { map, n, big_r } => {
            let f = inputs.map(map)?;
            let fz = factorize(&f, *n, *big_r)?;
            let holds = fz.max_fiber_classes <= *n;
            (
                "map factor".into(),
                json!({"n": n, "big_r": big_r}),
                Outcome::holds(
                    holds,
                    json!({
                        "classes": fz.classes.iter().map(|c| labels_of(&fz.adjusted, c)).collect::<Vec<_>>(),
                        "z": descriptor_of(&fz.z),
                        "p": fz.p.assign(),
                        "q": fz.q.assign(),
                        "selection": fz.selection,
                        "class_diam": fz.class_diam,
                        "max_fiber_classes": fz.max_fiber_classes,
                        "max_distortion": fz.max_distortion(),
                        "selection_offset": fz.selection_offset(),
                    }),
                ),
            )
        }
    })
}

fn witness_value(space: &Space, w: &coarse_kit::dimension::ApcWitness) -> Value {
    to_value(&WitnessJson::from_witness(space, w))
}

fn apc(c: &ApcCmd, inputs: &mut Inputs) -> Result<(String, Value, Outcome), CliError> {
    Ok(match c {
        ApcCmd::Witness {
            space,
            scales,
            mesh_cap,
            budget,
        } => {
            let x = inputs.space("space", space)?;
            let params = json!({"scales": scales, "mesh_cap": mesh_cap, "budget": budget});
            let out = match apc_witness(&x, scales, *mesh_cap, *budget)? {
                ApcOutcome::Found { witness, method } => Outcome::holds(
                    witness.holds(&x),
                    json!({"witness": witness_value(&x, &witness), "method": method}),
                ),
                ApcOutcome::Refused { reason, residue } => Outcome::with(
                    Status::Refused,
                    json!({"reason": reason, "residue": labels_of(&x, &residue)}),
                ),
            };
            ("apc witness".into(), params, out)
        }
        ApcCmd::Normalize { space, witness, gaps } => {
            let x = inputs.space("space", space)?;
            let w: DimWitnessJson = inputs.json("witness", witness)?;
            let w = w
                .resolve(&x)
                .map_err(|e| CliError::Usage(format!("{}: {e}", witness.display())))?;
            let out = apc_normalize(&x, &w, gaps)?;
            (
                "apc normalize".into(),
                json!({"gaps": gaps}),
                Outcome::holds(
                    out.witness.holds(&x),
                    json!({
                        "witness": witness_value(&x, &out.witness),
                        "level_scales": out.level_scales,
                        "origin": out.origin,
                    }),
                ),
            )
        }
        ApcCmd::Push { m, witness, targets } => {
            let (f, ctl) = map_control(inputs, m)?;
            let w: WitnessJson = inputs.json("witness", witness)?;
            let w = w
                .resolve(f.domain())
                .map_err(|e| CliError::Usage(format!("{}: {e}", witness.display())))?;
            let out = apc_pushforward(&f, m.n, &ctl, &w, targets)?;
            let y = f.codomain();
            (
                "apc push".into(),
                json!({"n": m.n, "control": to_value(&ctl), "targets": targets}),
                Outcome::holds(
                    out.witness.holds(y),
                    json!({"witness": witness_value(y, &out.witness), "audit": out.audit}),
                ),
            )
        }
        ApcCmd::Pull {
            map,
            witness,
            scales,
            bound,
        } => {
            let f = inputs.map(map)?;
            let w: WitnessJson = inputs.json("witness", witness)?;
            let w = w
                .resolve(f.codomain())
                .map_err(|e| CliError::Usage(format!("{}: {e}", witness.display())))?;
            let out = apc_pullback(&f, &w, scales, *bound)?;
            let x = f.domain();
            (
                "apc pull".into(),
                json!({"scales": scales, "bound": bound}),
                Outcome::holds(out.holds(x), json!({"witness": witness_value(x, &out)})),
            )
        }
    })
}

fn verified(space: &Space, t: &DecompositionTree, mode: TreeMode) -> Outcome {
    match verify_tree(space, t, mode) {
        Ok(cert) => Outcome::ok(json!({"tree": tree_json(space, t), "certificate": cert})),
        Err(v) => Outcome::with(Status::Violation, json!({"tree": tree_json(space, t), "violation": v})),
    }
}

fn tree(c: &TreeCmd, inputs: &mut Inputs) -> Result<(String, Value, Outcome), CliError> {
    Ok(match c {
        TreeCmd::Verify { t, mode } => {
            let (x, tree) = load_tree(inputs, t)?;
            let mode = mode.map(TreeMode::from).unwrap_or(tree.mode);
            let out = match verify_tree(&x, &tree, mode) {
                Ok(cert) => Outcome::ok(json!({ "certificate": cert })),
                Err(v) => Outcome::with(Status::Violation, json!({ "violation": v })),
            };
            ("tree verify".into(), json!({ "mode": mode }), out)
        }
        TreeCmd::Refine { t } => {
            let (x, tree) = load_tree(inputs, t)?;
            let r = partition_refine(&x, &tree)?;
            let mut out = verified(&x, &r.tree, r.tree.mode);
            out.result["origins"] = to_value(&r.origins);
            ("tree refine".into(), json!({}), out)
        }
        TreeCmd::Convert { t, targets } => {
            let (x, tree) = load_tree(inputs, t)?;
            let out = casdim_to_sfdc(&x, &tree, targets.as_deref())?;
            ("tree convert".into(), json!({ "targets": targets }), verified(&x, &out, TreeMode::Sfdc))
        }
        TreeCmd::Cover { t, scale } => {
            let (x, tree) = load_tree(inputs, t)?;
            let tc = tree_to_cover(&x, &tree, *scale)?;
            (
                "tree cover".into(),
                json!({ "scale": scale }),
                Outcome::ok(json!({
                    "family": family_json(&x, &tc.family),
                    "paths": tc.paths,
                    "mesh": tc.mesh,
                })),
            )
        }
        TreeCmd::Push { m, tree, targets } => {
            let (f, ctl) = map_control(inputs, m)?;
            let t = tree_on(inputs, tree, f.domain())?;
            let p = tree_pushforward(&f, m.n, &ctl, &t, targets)?;
            let mut out = verified(f.codomain(), &p.tree, p.tree.mode);
            out.result["audit"] = to_value(&p.audit);
            out.result["origins"] = to_value(&p.origins);
            ("tree push".into(), json!({"n": m.n, "control": to_value(&ctl), "targets": targets}), out)
        }
        TreeCmd::Pull { m, tree, scales } => {
            let (f, ctl) = map_control(inputs, m)?;
            let t = tree_on(inputs, tree, f.codomain())?;
            let p = tree_pullback(&f, m.n, &ctl, &t, scales)?;
            let mut out = verified(f.domain(), &p.tree, p.tree.mode);
            out.result["required_gaps"] = to_value(&p.required_gaps);
            out.result["fix_scale"] = json!(p.fix_scale);
            out.result["piece_bound"] = json!(p.piece_bound);
            ("tree pull".into(), json!({"n": m.n, "control": to_value(&ctl), "scales": scales}), out)
        }
    })
}

fn msp(c: &MspCmd, inputs: &mut Inputs) -> Result<(String, Value, Outcome), CliError> {
    Ok(match c {
        MspCmd::Family {
            space,
            measure,
            scale,
            bound,
            cover,
        } => {
            let x = inputs.space("space", space)?;
            let mu = measure_or_uniform(inputs, measure, &x)?;
            let params = json!({"scale": scale, "bound": bound});
            let result = match (cover, bound) {
                (Some(p), _) => {
                    let fam = inputs.family("cover", p, &x)?;
                    let choice = asdim_to_msp(&x, &fam, *scale, &mu)?;
                    let mut v = to_value(&choice);
                    v["family"]["family"] = family_json(&x, &choice.family.family);
                    Outcome::holds(choice.family.mass >= choice.lower_bound - coarse_kit::msp::MASS_EPS, v)
                }
                (None, Some(s)) => {
                    let best = best_mass_family(&x, &mu, *scale, *s)?;
                    let mut v = to_value(&best);
                    v["family"]["family"] = family_json(&x, &best.family.family);
                    Outcome::ok(v)
                }
                (None, None) => return Err(CliError::Usage("msp family needs --bound or --cover".into())),
            };
            ("msp family".into(), params, result)
        }
        MspCmd::Push {
            m,
            measure,
            scale,
            witness,
            bound,
        } => {
            let (f, ctl) = map_control(inputs, m)?;
            let x = f.domain().clone();
            let mu = measure_or_uniform(inputs, measure, f.codomain())?;
            let selection = least_selection(&f)?;
            let fam = match (witness, bound) {
                (Some(p), _) => inputs.family("witness", p, &x)?,
                (None, Some(b)) => {
                    let gap = ctl.eval(2.0 * m.n as f64 * scale);
                    let transferred = coarse_kit::msp::transfer_measure_selection(&f, &mu, &selection)?;
                    best_mass_family(&x, &transferred, gap.next_up(), *b)?.family.family
                }
                (None, None) => return Err(CliError::Usage("msp push needs --witness or --bound".into())),
            };
            let p = msp_pushforward(&f, m.n, &ctl, &mu, *scale, &selection, &fam)?;
            let mut v = to_value(&p);
            v["family"]["family"] = family_json(f.codomain(), &p.family.family);
            v["witness"] = family_json(&x, &fam);
            (
                "msp push".into(),
                json!({"n": m.n, "control": to_value(&ctl), "scale": scale, "bound": bound}),
                Outcome::holds(p.family.mass >= p.lower_bound - coarse_kit::msp::MASS_EPS, v),
            )
        }
        MspCmd::Pull {
            map,
            measure,
            scale,
            k,
            s,
        } => {
            let f = inputs.map(map)?;
            let mu = measure_or_uniform(inputs, measure, f.domain())?;
            let p = msp_pullback_searched(&f, &mu, *scale, *k, *s)?;
            let mut v = to_value(&p);
            v["omega"] = to_value(&labels_of(f.domain(), &p.omega));
            ("msp pull".into(), json!({"scale": scale, "k": k, "s": s}), Outcome::ok(v))
        }
        MspCmd::Check {
            map,
            subset,
            scale,
            s,
            c,
            k,
            seed,
        } => {
            let f = inputs.map(map)?;
            let a = parse_subset(f.codomain(), subset)?;
            let r = map_msp_check(&f, &a, *scale, *s, *c, *k, *seed)?;
            let status = match r.verdict {
                Verdict::Achievable => Status::Ok,
                Verdict::NotAchievable => Status::Violation,
                Verdict::Inconclusive => Status::Refused,
            };
            (
                "msp check".into(),
                json!({"subset": subset, "scale": scale, "s": s, "c": c, "k": k, "seed": seed}),
                Outcome::with(status, to_value(&r)),
            )
        }
    })
}

/// Errors that mean the input itself is malformed rather than refused.
fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Shape(_)
            | Error::BadDistance(..)
            | Error::NonZeroDiagonal(_)
            | Error::ZeroDistance(..)
            | Error::Asymmetric(..)
            | Error::Triangle(..)
            | Error::Disconnected(_)
            | Error::PointOutOfRange { .. }
            | Error::UnknownLabel(_)
            | Error::DuplicateLabel(_)
            | Error::Empty(_)
            | Error::BadScale(_)
            | Error::Measure(_)
            | Error::GroupAction(_)
            | Error::Invalid(_)
    )
}

/// Failed preconditions that are checkable properties of the input.
fn is_violation(e: &Error) -> bool {
    matches!(
        e,
        Error::NotACover(_)
            | Error::DimensionTooHigh { .. }
            | Error::NotDisjoint { .. }
            | Error::NotSurjective(_)
            | Error::Control(_)
            | Error::TooManyComponents { .. }
            | Error::MassThreshold { .. }
            | Error::Tree(_)
    )
}

fn command_name(cmd: &Command) -> String {
    let sub = |s: &str| s.to_string();
    match cmd {
        Command::Space { .. } => sub("space"),
        Command::Cover(_) => sub("cover"),
        Command::Map(_) => sub("map"),
        Command::Quotient { .. } => sub("quotient"),
        Command::Apc(_) => sub("apc"),
        Command::Tree(_) => sub("tree"),
        Command::Msp(_) => sub("msp"),
        Command::Suite { .. } => sub("suite"),
    }
}

fn emit(report: &Report, out: &Option<PathBuf>) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut inputs = Inputs::default();
    let (command, params, outcome) = match run(&cli.command, &mut inputs) {
        Ok(v) => v,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(CliError::Op(e)) if is_input_error(&e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(CliError::Op(e)) => {
            let status = if is_violation(&e) { Status::Violation } else { Status::Refused };
            (command_name(&cli.command), json!({}), Outcome::with(status, json!({ "error": e.to_string() })))
        }
    };
    let report = Report {
        schema: SCHEMA,
        command,
        inputs: inputs.digests,
        params,
        status: outcome.status,
        result: outcome.result,
        timing_ms: cli.timing.then(|| started.elapsed().as_millis()),
    };
    if let Err(msg) = emit(&report, &cli.out) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    ExitCode::from(report.status.exit_code())
}
