//! Command-line surface over the normal-surface toolkit.
//!
//! Reports are JSON on stdout (JSONL for streams).  Domain failures exit 1
//! with a machine-readable error object on stdout; usage errors exit 2.
//! Runs are reproducible for any worker count: all parallel stages merge
//! results in canonical order.

use clap::{Parser, Subcommand, ValueEnum};
use normsurf::carrier::{
    build_carrier, disk_search, vertical_boundary_components, DiskDirection,
};
use normsurf::coords::{
    check_admissible, euler_linear, haken_sum, matching_system, vertex_link, vertex_links,
    weight, SurfaceVector,
};
use normsurf::hilbert::{
    decompose, enumerate_fundamental, enumerate_vertex_solutions, EnumLimits, MidKind,
    SupportFace,
};
use normsurf::intersect::intersection_complexity;
use normsurf::pipeline::{
    balanced_reduce, candidate_stream, regular_set_check, BalancedSequence,
};
use normsurf::topology::{classify_vector, reconstruct};
use normsurf::tri::{compute_skeleton, is_one_vertex, is_orientable, parse_triangulation, Triangulation};
use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "normsurf", version, about = "Normal and almost-normal surface toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for enumeration caches (default: NORMSURF_CACHE).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads; output is identical for any count.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Weight cap for bounded searches.
    #[arg(long, global = true, default_value_t = 20)]
    max_weight: u64,
    /// Cap on intermediate rays in enumeration.
    #[arg(long, global = true, default_value_t = 100_000)]
    max_rays: usize,
    /// Output format for streaming commands.
    #[arg(long, global = true, value_enum, default_value_t = Emit::Json)]
    emit: Emit,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Json,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a triangulation document.
    Validate { tri: PathBuf },
    /// Vertex/edge orbits and face pairs.
    Skeleton { tri: PathBuf },
    /// The vertex-linking surface (per vertex orbit when several).
    VertexLink { tri: PathBuf },
    /// The matching equation system.
    MatchEqs { tri: PathBuf },
    /// Enumerate vertex or fundamental solutions.
    Enum {
        tri: PathBuf,
        #[arg(long, value_enum, default_value_t = EnumMode::Fundamental)]
        mode: EnumMode,
    },
    /// Classify the components of a surface vector.
    Classify { tri: PathBuf, vec: PathBuf },
    /// Haken sum of two admissible vectors.
    Sum { tri: PathBuf, a: PathBuf, b: PathBuf },
    /// Decompose a vector over the fundamental solutions.
    Decompose { tri: PathBuf, vec: PathBuf },
    /// Build a branched carrier from a support description.
    Carrier {
        tri: PathBuf,
        #[arg(long)]
        support: PathBuf,
    },
    /// Bounded disk-of-contact / flare-base search at a vertical boundary
    /// component.
    FlareCheck {
        tri: PathBuf,
        #[arg(long)]
        support: PathBuf,
        #[arg(long)]
        component: usize,
        #[arg(long, value_enum, default_value_t = Direction::Outward)]
        direction: Direction,
    },
    /// Intersection complexity of two or three vectors.
    Intersect {
        tri: PathBuf,
        vecs: Vec<PathBuf>,
    },
    /// Reduction constant of a balanced sign sequence.
    BalancedReduce {
        #[arg(long)]
        signs: String,
    },
    /// Regular-set check over a list of torus vectors.
    RegularCheck { tri: PathBuf, vecs: Vec<PathBuf> },
    /// Stream coefficient-bounded decompositions.
    GenusScan {
        tri: PathBuf,
        #[arg(long)]
        genus: u64,
        #[arg(long, default_value_t = 3)]
        coeff_bound: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnumMode {
    Vertex,
    Fundamental,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Inward,
    Outward,
}

struct DomainError {
    kind: &'static str,
    message: String,
}

impl DomainError {
    fn new(kind: &'static str, err: impl std::fmt::Display) -> DomainError {
        DomainError { kind, message: err.to_string() }
    }
}

type Out = Result<Vec<String>, DomainError>;

fn read(path: &PathBuf) -> Result<String, DomainError> {
    std::fs::read_to_string(path)
        .map_err(|e| DomainError::new("io", format!("{}: {e}", path.display())))
}

fn load_tri(path: &PathBuf) -> Result<Triangulation, DomainError> {
    parse_triangulation(&read(path)?).map_err(|e| DomainError::new("triangulation", e))
}

fn load_vec(tri: &Triangulation, path: &PathBuf) -> Result<SurfaceVector, DomainError> {
    let v = SurfaceVector::from_json(&read(path)?)
        .map_err(|e| DomainError::new("surface-vector", format!("{}: {e}", path.display())))?;
    if v.num_tets() != tri.num_tets() {
        return Err(DomainError::new(
            "surface-vector",
            format!(
                "{}: vector covers {} tetrahedra, triangulation has {}",
                path.display(),
                v.num_tets(),
                tri.num_tets()
            ),
        ));
    }
    Ok(v)
}

#[derive(Deserialize)]
struct MidDoc {
    kind: String,
    #[serde(rename = "type")]
    type_: usize,
}

#[derive(Deserialize)]
struct SupportTetDoc {
    tris: [bool; 4],
    #[serde(default)]
    mids: Vec<MidDoc>,
}

#[derive(Deserialize)]
struct SupportDoc {
    support: Vec<SupportTetDoc>,
}

fn load_support(path: &PathBuf) -> Result<SupportFace, DomainError> {
    let doc: SupportDoc = serde_json::from_str(&read(path)?)
        .map_err(|e| DomainError::new("support", format!("{}: {e}", path.display())))?;
    let mut tris = Vec::new();
    let mut mid = Vec::new();
    for (t, row) in doc.support.iter().enumerate() {
        if row.mids.len() > 1 {
            return Err(DomainError::new(
                "support",
                format!("tetrahedron {t} lists {} mid types; at most one is admissible", row.mids.len()),
            ));
        }
        tris.push(row.tris);
        mid.push(match row.mids.first() {
            None => None,
            Some(m) => {
                let kind = match m.kind.as_str() {
                    "quad" => MidKind::Quad,
                    "oct" => MidKind::Oct,
                    other => {
                        return Err(DomainError::new(
                            "support",
                            format!("tetrahedron {t}: unknown mid kind {other:?}"),
                        ))
                    }
                };
                if m.type_ > 2 {
                    return Err(DomainError::new(
                        "support",
                        format!("tetrahedron {t}: mid type {} out of range", m.type_),
                    ));
                }
                Some((kind, m.type_))
            }
        });
    }
    Ok(SupportFace { tris, mid })
}

fn limits(cli: &Cli) -> EnumLimits {
    EnumLimits { max_rays: cli.max_rays, max_box_weight: 100_000 }
}

fn cache_key(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    format!("{:x}", h.finalize())
}

fn cached_enum(
    cli: &Cli,
    tri: &Triangulation,
    mode: EnumMode,
) -> Result<Vec<SurfaceVector>, DomainError> {
    let lim = limits(cli);
    let cache_dir = cli
        .cache
        .clone()
        .or_else(|| std::env::var_os("NORMSURF_CACHE").map(PathBuf::from));
    let key = cache_key(&[
        &tri.to_json(),
        if mode == EnumMode::Vertex { "vertex" } else { "fundamental" },
        &format!("rays={},box={}", lim.max_rays, lim.max_box_weight),
    ]);
    if let Some(dir) = &cache_dir {
        let path = dir.join(format!("{key}.json"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(v) = serde_json::from_str::<Vec<SurfaceVector>>(&text) {
                return Ok(v);
            }
        }
    }
    let sys = matching_system(tri);
    let members = match mode {
        EnumMode::Vertex => enumerate_vertex_solutions(tri, &sys, &lim),
        EnumMode::Fundamental => enumerate_fundamental(tri, &sys, &lim).map(|f| f.members),
    }
    .map_err(|e| DomainError::new("enumeration", e))?;
    if let Some(dir) = &cache_dir {
        let _ = std::fs::create_dir_all(dir);
        let _ = std::fs::write(
            dir.join(format!("{key}.json")),
            serde_json::to_string(&members).expect("serializable"),
        );
    }
    Ok(members)
}

fn single(value: serde_json::Value) -> Out {
    Ok(vec![serde_json::to_string(&value).expect("serializable")])
}

fn run(cli: &Cli) -> Out {
    match &cli.command {
        Command::Validate { tri } => {
            let t = load_tri(tri)?;
            let skel = compute_skeleton(&t);
            single(json!({
                "valid": true,
                "tets": t.num_tets(),
                "vertices": skel.num_vertex_orbits,
                "edges": skel.num_edge_orbits,
                "faces": skel.face_pairs.len(),
                "orientable": is_orientable(&t),
                "one_vertex": is_one_vertex(&t),
            }))
        }
        Command::Skeleton { tri } => {
            let t = load_tri(tri)?;
            let skel = compute_skeleton(&t);
            single(json!({
                "vertices": skel.num_vertex_orbits,
                "edges": skel.num_edge_orbits,
                "faces": skel.face_pairs.len(),
                "tets": t.num_tets(),
                "vertex_orbit": skel.vertex_orbit,
                "edge_orbit": skel.edge_orbit,
                "face_pairs": skel.face_pairs,
            }))
        }
        Command::VertexLink { tri } => {
            let t = load_tri(tri)?;
            match vertex_link(&t) {
                Ok(link) => single(serde_json::to_value(&link).expect("serializable")),
                Err(_) => {
                    let links = vertex_links(&t);
                    single(json!({ "per_vertex": links }))
                }
            }
        }
        Command::MatchEqs { tri } => {
            let t = load_tri(tri)?;
            let sys = matching_system(&t);
            let rows: Vec<serde_json::Value> = sys
                .rows
                .iter()
                .map(|r| json!({ "pos": r.pos, "neg": r.neg, "coefficients": sys.row_coefficients(r) }))
                .collect();
            single(json!({ "rows": rows.len(), "columns": 10 * t.num_tets(), "equations": rows }))
        }
        Command::Enum { tri, mode } => {
            let t = load_tri(tri)?;
            let members = cached_enum(cli, &t, *mode)?;
            if cli.emit == Emit::Jsonl {
                Ok(members
                    .iter()
                    .map(|m| serde_json::to_string(m).expect("serializable"))
                    .collect())
            } else {
                single(serde_json::to_value(&members).expect("serializable"))
            }
        }
        Command::Classify { tri, vec } => {
            let t = load_tri(tri)?;
            let v = load_vec(&t, vec)?;
            let sys = matching_system(&t);
            if let Err(viol) = check_admissible(&v, &sys)
                .map_err(|e| DomainError::new("dimension", e))?
            {
                return Err(DomainError::new(
                    "admissibility",
                    serde_json::to_string(&viol).expect("serializable"),
                ));
            }
            let s = reconstruct(&t, &v);
            let reports = classify_vector(&t, &v);
            single(json!({
                "weight": weight(&v),
                "euler_linear": euler_linear(&t, &v),
                "euler_cellular": s.euler(),
                "components": reports,
            }))
        }
        Command::Sum { tri, a, b } => {
            let t = load_tri(tri)?;
            let va = load_vec(&t, a)?;
            let vb = load_vec(&t, b)?;
            let sum = haken_sum(&va, &vb).map_err(|e| DomainError::new("haken-sum", e))?;
            single(serde_json::to_value(&sum).expect("serializable"))
        }
        Command::Decompose { tri, vec } => {
            let t = load_tri(tri)?;
            let v = load_vec(&t, vec)?;
            let sys = matching_system(&t);
            let fund = enumerate_fundamental(&t, &sys, &limits(cli))
                .map_err(|e| DomainError::new("enumeration", e))?;
            let parts = decompose(&v, &fund).map_err(|e| DomainError::new("decompose", e))?;
            let rendered: Vec<serde_json::Value> = parts
                .iter()
                .map(|&(c, i)| json!({ "coefficient": c, "member": fund.members[i] }))
                .collect();
            single(json!({ "parts": rendered }))
        }
        Command::Carrier { tri, support } => {
            let t = load_tri(tri)?;
            let sup = load_support(support)?;
            let carrier = build_carrier(&t, &sup).map_err(|e| DomainError::new("carrier", e))?;
            let sys = matching_system(&t);
            single(json!({
                "sectors": carrier.sectors,
                "branch_arcs": carrier.branch_arcs,
                "branch_equations": carrier.branch_rows(&sys),
                "circuits": carrier.circuits,
                "has_defect": carrier.has_defect,
            }))
        }
        Command::FlareCheck { tri, support, component, direction } => {
            let t = load_tri(tri)?;
            let sup = load_support(support)?;
            let carrier = build_carrier(&t, &sup).map_err(|e| DomainError::new("carrier", e))?;
            let dir = match direction {
                Direction::Inward => DiskDirection::Inward,
                Direction::Outward => DiskDirection::Outward,
            };
            let result = disk_search(&t, &carrier, *component, dir, cli.max_weight)
                .map_err(|e| DomainError::new("disk-search", e))?;
            single(json!({
                "component": component,
                "direction": if dir == DiskDirection::Inward { "inward" } else { "outward" },
                "max_weight": cli.max_weight,
                "result": result,
                "circuits": vertical_boundary_components(&carrier).len(),
            }))
        }
        Command::Intersect { tri, vecs } => {
            let t = load_tri(tri)?;
            let vs: Vec<SurfaceVector> = vecs
                .iter()
                .map(|p| load_vec(&t, p))
                .collect::<Result<_, _>>()?;
            let report = intersection_complexity(&t, &vs)
                .map_err(|e| DomainError::new("intersection", e))?;
            single(serde_json::to_value(&report).expect("serializable"))
        }
        Command::BalancedReduce { signs } => {
            let seq = BalancedSequence::parse(signs)
                .ok_or_else(|| DomainError::new("balanced", "signs must be drawn from + and -"))?;
            let k = balanced_reduce(&seq).map_err(|e| DomainError::new("balanced", e))?;
            single(json!({ "k": k, "length": seq.signs.len() }))
        }
        Command::RegularCheck { tri, vecs } => {
            let t = load_tri(tri)?;
            let vs: Vec<SurfaceVector> = vecs
                .iter()
                .map(|p| load_vec(&t, p))
                .collect::<Result<_, _>>()?;
            let report = regular_set_check(&t, &vs);
            single(serde_json::to_value(&report).expect("serializable"))
        }
        Command::GenusScan { tri, genus, coeff_bound } => {
            let t = load_tri(tri)?;
            let sys = matching_system(&t);
            let fund = enumerate_fundamental(&t, &sys, &limits(cli))
                .map_err(|e| DomainError::new("enumeration", e))?;
            let stream = candidate_stream(&t, &fund, *genus, *coeff_bound);
            let lines: Vec<String> = stream
                .map(|d| serde_json::to_string(&d).expect("serializable"))
                .collect();
            if cli.emit == Emit::Jsonl {
                Ok(lines)
            } else {
                Ok(vec![format!("[{}]", lines.join(","))])
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let workers = cli.workers.max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .expect("thread pool initialises once");
    let (lines, code) = match run(&cli) {
        Ok(lines) => (lines, 0),
        Err(e) => (
            vec![serde_json::to_string(&json!({
                "error": { "kind": e.kind, "message": e.message }
            }))
            .expect("serializable")],
            1,
        ),
    };
    let body = lines.join("\n") + "\n";
    match &cli.out {
        Some(path) => {
            if std::fs::write(path, &body).is_err() {
                eprintln!("cannot write {}", path.display());
                std::process::exit(1);
            }
        }
        None => print!("{body}"),
    }
    std::process::exit(code);
}
