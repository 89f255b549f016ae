//! Branched surfaces assembled from disk-type supports: branch sectors,
//! branch equations, sub-branched surfaces, vertical-boundary circuits and
//! bounded flare / disk-of-contact searches.
//!
//! A carrier has one sector per supported disk type.  Along a glued face,
//! the sector arcs of one arc type stack as [triangle, mid]; when one side
//! stacks two sheets and the other one, the extra sheet merges and the arc
//! carries a cusp (a branch arc), directed toward the merged side.  The
//! branch equations are exactly the matching equations restricted to the
//! support, each branching row of the shape x_i + x_j = x_k.
//!
//! Vertical-boundary components are modelled combinatorially: the cusp of a
//! branch arc ends on two edges; between consecutive sheet crossings of an
//! edge lives a gap, gaps propagate around an edge through the face
//! correspondences until the bounding sheets merge, and each such gap path
//! connects two branch-arc endpoints.  The resulting circuits are the
//! models of the vertical boundary annuli.
//!
//! A surface with boundary along a circuit keeps every restricted matching
//! row except at the circuit's branch arcs, where the row picks up a
//! deficit of one: with branch equation x_i + x_j = x_k, a disk of contact
//! (inward) satisfies x_i + x_j + 1 = x_k, a flare base candidate (outward)
//! satisfies x_i + x_j = x_k + 1.  Unmatched arc slots sit at the cusp:
//! inward deficits take the middle slots of the merged side, outward
//! deficits the slots adjacent to the cusp on the split side.

use crate::coords::{MatchingSystem, SurfaceVector, COORDS_PER_TET};
use crate::hilbert::{face_fundamentals, EnumError, EnumLimits, MidKind, SupportFace};
use crate::topology::{boundary_cycle, classify_vector, PieceKind, SurfaceKind};
use crate::tri::{edge_index, Triangulation, EDGE_ENDS};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CarrierError {
    #[error("empty or inadmissible support: {0}")]
    EmptySupport(String),
    #[error("vector is not carried by the branched surface")]
    NotCarried,
    #[error("no vertical boundary component with index {0}")]
    UnknownComponent(usize),
}

/// One branch arc: the two-sheet (split) side and the merged side of a glued
/// face arc type, with the branch direction toward the merged side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BranchArc {
    pub split: (usize, usize, usize),
    pub merged: (usize, usize, usize),
}

/// A vertical-boundary circuit: branch arcs in traversal order, each entered
/// at one of its two endpoint edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Circuit {
    /// (branch arc index, entry endpoint 0/1).
    pub arcs: Vec<(usize, u8)>,
}

/// Direction of a disk search relative to the cusp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiskDirection {
    /// Disk of contact: approaches the cusp from the merged side.
    Inward,
    /// Flare base candidate: the branch direction points out of the disk.
    Outward,
}

/// Outcome of a bounded disk search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum DiskSearchResult {
    Found(SurfaceVector),
    NotFound,
    /// The weight bound was exhausted with unexplored assignments left.
    Inconclusive(u64),
}

/// A branched surface built from a disk-type support.
#[derive(Clone, Debug)]
pub struct BranchedCarrier {
    pub support: SupportFace,
    /// One sector per supported disk type.
    pub sectors: Vec<(usize, PieceKind)>,
    pub branch_arcs: Vec<BranchArc>,
    pub circuits: Vec<Circuit>,
    /// Arc classes where one side has sheets and the other none; such a
    /// carrier cannot fully carry anything.
    pub has_defect: bool,
}

fn sector_kinds(support: &SupportFace, t: usize) -> Vec<PieceKind> {
    let mut out = Vec::new();
    for v in 0..4 {
        if support.tris[t][v] {
            out.push(PieceKind::Tri(v));
        }
    }
    match support.mid[t] {
        Some((MidKind::Quad, k)) => out.push(PieceKind::Quad(k)),
        Some((MidKind::Oct, k)) => out.push(PieceKind::Oct(k)),
        None => {}
    }
    out
}

/// Sheets of the support contributing an arc of type (face, cut) from one
/// tetrahedron, in stack order (triangle first).
fn sheet_stack(support: &SupportFace, t: usize, f: usize, v: usize) -> Vec<PieceKind> {
    let mut out = Vec::new();
    if support.tris[t][v] {
        out.push(PieceKind::Tri(v));
    }
    match support.mid[t] {
        Some((MidKind::Quad, k)) if crate::coords::PAIRING_PARTNER[k][f] == v => {
            out.push(PieceKind::Quad(k))
        }
        Some((MidKind::Oct, k)) if crate::coords::PAIRING_PARTNER[k][f] != v => {
            out.push(PieceKind::Oct(k))
        }
        _ => {}
    }
    out
}

/// Sheets of the support crossing an edge, ordered from the edge's smaller
/// vertex; octagon pair-edge crossings appear twice with their near tag.
fn sheet_crossings(support: &SupportFace, t: usize, e: usize) -> Vec<(PieceKind, usize)> {
    let (a, b) = EDGE_ENDS[e];
    let mut out = Vec::new();
    if support.tris[t][a] {
        out.push((PieceKind::Tri(a), a));
    }
    match support.mid[t] {
        Some((MidKind::Quad, k)) if crate::coords::PAIRING_PARTNER[k][a] != b => {
            out.push((PieceKind::Quad(k), usize::MAX))
        }
        Some((MidKind::Oct, k)) => {
            if crate::coords::PAIRING_PARTNER[k][a] == b {
                out.push((PieceKind::Oct(k), a));
                out.push((PieceKind::Oct(k), b));
            } else {
                out.push((PieceKind::Oct(k), usize::MAX));
            }
        }
        _ => {}
    }
    if support.tris[t][b] {
        out.push((PieceKind::Tri(b), b));
    }
    out
}

/// The boundary arc of a sector ending at a given edge crossing inside a
/// given face.
fn arc_at_crossing(kind: PieceKind, face: usize, e: usize, near: usize) -> (usize, usize) {
    // Returns (cut vertex, arc index in the boundary cycle).
    for (ai, arc) in boundary_cycle(kind).iter().enumerate() {
        if arc.face != face {
            continue;
        }
        for end in [arc.from_edge, arc.to_edge] {
            if edge_index(end.0, end.1) != e {
                continue;
            }
            match kind {
                PieceKind::Oct(k) => {
                    let (a, b) = EDGE_ENDS[e];
                    if crate::coords::PAIRING_PARTNER[k][a] == b && arc.cut != near {
                        continue;
                    }
                    return (arc.cut, ai);
                }
                _ => return (arc.cut, ai),
            }
        }
    }
    unreachable!("sector crosses the edge inside this face")
}

/// Construct the carrier of a support: sectors, branch arcs, circuits.
pub fn build_carrier(
    tri: &Triangulation,
    support: &SupportFace,
) -> Result<BranchedCarrier, CarrierError> {
    if support.num_tets() != tri.num_tets() {
        return Err(CarrierError::EmptySupport(format!(
            "support covers {} tetrahedra, triangulation has {}",
            support.num_tets(),
            tri.num_tets()
        )));
    }
    if support.oct_tets() > 1 {
        return Err(CarrierError::EmptySupport(
            "more than one octagon-carrying tetrahedron".into(),
        ));
    }
    let mut sectors = Vec::new();
    for t in 0..tri.num_tets() {
        for kind in sector_kinds(support, t) {
            sectors.push((t, kind));
        }
    }
    if sectors.is_empty() {
        return Err(CarrierError::EmptySupport("support has no sectors".into()));
    }

    // Branch arcs from the stack shapes across each glued face.
    let mut branch_arcs = Vec::new();
    let mut has_defect = false;
    for t in 0..tri.num_tets() {
        for f in 0..4 {
            let (tt, tf, p) = tri.gluing(t, f);
            if (t, f) > (tt, tf) {
                continue;
            }
            for v in 0..4 {
                if v == f {
                    continue;
                }
                let w = p.apply(v);
                let na = sheet_stack(support, t, f, v).len();
                let nb = sheet_stack(support, tt, tf, w).len();
                match (na, nb) {
                    (2, 1) => branch_arcs.push(BranchArc {
                        split: (t, f, v),
                        merged: (tt, tf, w),
                    }),
                    (1, 2) => branch_arcs.push(BranchArc {
                        split: (tt, tf, w),
                        merged: (t, f, v),
                    }),
                    (0, 0) | (1, 1) | (2, 2) => {}
                    _ => has_defect = true,
                }
            }
        }
    }
    branch_arcs.sort_by_key(|a| (a.split, a.merged));

    let circuits = trace_circuits(tri, support, &branch_arcs);
    Ok(BranchedCarrier {
        support: support.clone(),
        sectors,
        branch_arcs,
        circuits,
        has_defect,
    })
}

/// The two endpoint edges of a branch arc, in the split tetrahedron's
/// labels: the edges of the split face at the cut vertex, smaller first.
pub fn branch_arc_ends(arc: &BranchArc) -> [usize; 2] {
    let (_, f, v) = arc.split;
    let mut ends: Vec<usize> = (0..4)
        .filter(|&x| x != f && x != v)
        .map(|x| edge_index(v, x))
        .collect();
    ends.sort_unstable();
    [ends[0], ends[1]]
}

/// Walk a gap around an edge from a branch-arc endpoint to its partner.
///
/// State: (tet, local edge, positions of the two bounding crossings in the
/// tet's own crossing order, face to cross next).
fn trace_circuits(
    tri: &Triangulation,
    support: &SupportFace,
    branch_arcs: &[BranchArc],
) -> Vec<Circuit> {
    // Map crossing -> image interval across one face gluing.
    let image = |t: usize,
                 f: usize,
                 e: usize,
                 kind: PieceKind,
                 near: usize|
     -> Vec<(PieceKind, usize)> {
        let (tt, tf, p) = tri.gluing(t, f);
        let _ = tt;
        let (cut, _) = arc_at_crossing(kind, f, e, near);
        let stack_a = sheet_stack(support, t, f, cut);
        let pos = stack_a.iter().position(|&k| k == kind).expect("sheet in stack");
        let w = p.apply(cut);
        let stack_b = sheet_stack(support, tri.gluing(t, f).0, tf, w);
        let targets: Vec<PieceKind> = match (stack_a.len(), stack_b.len()) {
            (1, 1) | (2, 2) => vec![stack_b[pos]],
            (2, 1) => vec![stack_b[0]],
            (1, 2) => stack_b.clone(),
            _ => vec![],
        };
        // The image crossings sit on the glued edge.
        let (ea, eb) = EDGE_ENDS[e];
        let img_e = edge_index(p.apply(ea), p.apply(eb));
        targets
            .into_iter()
            .map(|k| {
                let near_img = match k {
                    PieceKind::Tri(tv) => tv,
                    PieceKind::Quad(_) => usize::MAX,
                    PieceKind::Oct(ko) => {
                        let (ia, ib) = EDGE_ENDS[img_e];
                        if crate::coords::PAIRING_PARTNER[ko][ia] == ib {
                            w // the image arc cuts the image of the cut vertex
                        } else {
                            usize::MAX
                        }
                    }
                };
                (k, near_img)
            })
            .collect()
    };

    // Endpoint -> matched endpoint, via the gap walk.
    let endpoint_gap = |arc: &BranchArc, end: usize| -> (usize, usize, usize, usize) {
        // Returns (tet, local edge, lower crossing pos, face to cross next).
        let (t, f, v) = arc.split;
        let e = branch_arc_ends(arc)[end];
        let crossings = sheet_crossings(support, t, e);
        let stack = sheet_stack(support, t, f, v);
        let (sheet_a, sheet_b) = (stack[0], stack[1]);
        let find = |kind: PieceKind| -> usize {
            let (cut, _) = arc_at_crossing(kind, f, e, match kind {
                PieceKind::Oct(_) => v,
                _ => usize::MAX,
            });
            let _ = cut;
            crossings
                .iter()
                .position(|&(k, near)| {
                    k == kind
                        && match kind {
                            PieceKind::Oct(ko) => {
                                let (a, b) = EDGE_ENDS[e];
                                if crate::coords::PAIRING_PARTNER[ko][a] == b {
                                    near == v
                                } else {
                                    true
                                }
                            }
                            _ => true,
                        }
                })
                .expect("sheet crosses endpoint edge")
        };
        let (pa, pb) = (find(sheet_a), find(sheet_b));
        let lo = pa.min(pb);
        debug_assert_eq!(pa.max(pb), lo + 1, "cusp sheets are adjacent on the edge");
        // Walk away from the branch face: the other face of t containing e.
        let (a, b) = EDGE_ENDS[e];
        let g = (0..4).find(|&h| h != a && h != b && h != f).expect("other face");
        (t, e, lo, g)
    };

    let mut endpoint_ids: Vec<((usize, usize), (usize, usize, usize, usize))> = Vec::new();
    for (ai, arc) in branch_arcs.iter().enumerate() {
        for end in 0..2 {
            endpoint_ids.push(((ai, end), endpoint_gap(arc, end)));
        }
    }
    // Terminal cusp lookup: (tet, edge, lower pos, face crossed) for each
    // endpoint, from the split side.
    let mut terminal: BTreeMap<(usize, usize, usize, usize), (usize, usize)> = BTreeMap::new();
    for (ai, arc) in branch_arcs.iter().enumerate() {
        for end in 0..2 {
            let (t, f, _) = arc.split;
            let e = branch_arc_ends(arc)[end];
            let (tt, ee, lo, _) = endpoint_gap(arc, end);
            debug_assert_eq!((tt, ee), (t, e));
            terminal.insert((t, e, lo, f), (ai, end));
        }
    }

    let step_limit = 64 * tri.num_tets().max(1) * 16;
    let walk = |start: (usize, usize, usize, usize)| -> (usize, usize) {
        let (mut t, mut e, mut lo, mut g) = start;
        for _ in 0..step_limit {
            let crossings = sheet_crossings(support, t, e);
            let (c1, c2) = (crossings[lo], crossings[lo + 1]);
            let img1 = image(t, g, e, c1.0, c1.1);
            let img2 = image(t, g, e, c2.0, c2.1);
            if img1.iter().any(|x| img2.contains(x)) {
                // The gap closes: a cusp on the (t, g) side.
                return *terminal
                    .get(&(t, e, lo, g))
                    .expect("merge comes from a recorded branch arc");
            }
            let (tt, tf, p) = tri.gluing(t, g);
            let (a, b) = EDGE_ENDS[e];
            let e2 = edge_index(p.apply(a), p.apply(b));
            let cr2 = sheet_crossings(support, tt, e2);
            let pos_of = |item: &(PieceKind, usize)| -> usize {
                cr2.iter().position(|x| x == item).expect("image crossing exists")
            };
            // The images of the two bounding sheets tile adjacent intervals
            // of the glued edge's crossing list; the gap continues between
            // them, whichever order the gluing put them in.
            let mut b1: Vec<usize> = img1.iter().map(&pos_of).collect();
            let mut b2: Vec<usize> = img2.iter().map(&pos_of).collect();
            b1.sort_unstable();
            b2.sort_unstable();
            let lo2 = if b1.last() < b2.first() {
                *b1.last().expect("nonempty")
            } else {
                debug_assert!(b2.last() < b1.first());
                *b2.last().expect("nonempty")
            };
            let new_g = {
                let (a2, b2) = EDGE_ENDS[e2];
                (0..4)
                    .find(|&h| h != a2 && h != b2 && h != tf)
                    .expect("other face")
            };
            t = tt;
            e = e2;
            lo = lo2;
            g = new_g;
        }
        panic!("gap walk did not terminate; carrier structure inconsistent");
    };

    let mut partner: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for &((ai, end), start) in &endpoint_ids {
        partner.insert((ai, end), walk(start));
    }
    // Assemble circuits: alternate between traversing an arc (end -> other
    // end) and jumping along a gap path (endpoint -> partner endpoint).
    let mut visited: std::collections::BTreeSet<(usize, usize)> = Default::default();
    let mut circuits = Vec::new();
    for ai in 0..branch_arcs.len() {
        for end in 0..2usize {
            if visited.contains(&(ai, end)) {
                continue;
            }
            let mut arcs = Vec::new();
            let (mut ca, mut centry) = (ai, end);
            loop {
                visited.insert((ca, centry));
                visited.insert((ca, 1 - centry));
                arcs.push((ca, centry as u8));
                let exit = (ca, 1 - centry);
                let (na, nend) = partner[&exit];
                if (na, nend) == (ai, end) {
                    break;
                }
                ca = na;
                centry = nend;
            }
            circuits.push(Circuit { arcs });
        }
    }
    circuits
}

impl BranchedCarrier {
    /// A vector is carried iff admissible with support inside the carrier's.
    pub fn carries(&self, sys: &MatchingSystem, vec: &SurfaceVector) -> bool {
        crate::coords::is_admissible(vec, sys) && self.support.contains(vec)
    }

    /// Fully carried: carried and strictly positive on every sector.
    pub fn fully_carries(&self, sys: &MatchingSystem, vec: &SurfaceVector) -> bool {
        self.carries(sys, vec)
            && self.sectors.iter().all(|&(t, kind)| sector_weight(vec, t, kind) > 0)
    }

    /// The restricted matching rows: the branch equation system.
    pub fn branch_rows(&self, sys: &MatchingSystem) -> Vec<Vec<i64>> {
        let cols = self.sector_columns();
        sys.rows
            .iter()
            .map(|row| {
                let dense = sys.row_coefficients(row);
                cols.iter().map(|&c| dense[c]).collect()
            })
            .collect()
    }

    pub fn sector_columns(&self) -> Vec<usize> {
        self.sectors
            .iter()
            .map(|&(t, kind)| {
                COORDS_PER_TET * t
                    + match kind {
                        PieceKind::Tri(v) => v,
                        PieceKind::Quad(k) => 4 + k,
                        PieceKind::Oct(k) => 7 + k,
                    }
            })
            .collect()
    }

    /// Fundamental solutions of the carried cone contain a sphere component.
    pub fn carries_sphere(
        &self,
        tri: &Triangulation,
        sys: &MatchingSystem,
        limits: &EnumLimits,
    ) -> Result<bool, EnumError> {
        let members = face_fundamentals(tri, sys, &self.support, limits)?;
        Ok(members.iter().any(|m| {
            classify_vector(tri, m).iter().any(|r| r.kind == SurfaceKind::Sphere)
        }))
    }
}

fn sector_weight(vec: &SurfaceVector, t: usize, kind: PieceKind) -> u64 {
    match kind {
        PieceKind::Tri(v) => vec.tri(t, v),
        PieceKind::Quad(k) => vec.quad(t, k),
        PieceKind::Oct(k) => vec.oct(t, k),
    }
}

/// Restrict the carrier to the sectors a carried vector passes through.
pub fn sub_branched(
    tri: &Triangulation,
    carrier: &BranchedCarrier,
    sys: &MatchingSystem,
    vec: &SurfaceVector,
) -> Result<BranchedCarrier, CarrierError> {
    if !carrier.carries(sys, vec) {
        return Err(CarrierError::NotCarried);
    }
    build_carrier(tri, &SupportFace::of_vector(vec))
}

/// Vertical-boundary circuits of the carrier, in deterministic order.
pub fn vertical_boundary_components(carrier: &BranchedCarrier) -> &[Circuit] {
    &carrier.circuits
}

/// Row data of the search system: coefficients over sectors plus the
/// right-hand side.
fn search_rows(
    tri: &Triangulation,
    carrier: &BranchedCarrier,
    circuit: &Circuit,
    direction: DiskDirection,
) -> Vec<(Vec<i64>, i64)> {
    let support = &carrier.support;
    let sector_index: BTreeMap<(usize, PieceKind), usize> = carrier
        .sectors
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i))
        .collect();
    let circuit_arcs: std::collections::BTreeSet<usize> =
        circuit.arcs.iter().map(|&(a, _)| a).collect();
    let mut rows = Vec::new();
    for t in 0..tri.num_tets() {
        for f in 0..4 {
            let (tt, tf, p) = tri.gluing(t, f);
            if (t, f) > (tt, tf) {
                continue;
            }
            for v in 0..4 {
                if v == f {
                    continue;
                }
                let w = p.apply(v);
                let mut coeff = vec![0i64; carrier.sectors.len()];
                for kind in sheet_stack(support, t, f, v) {
                    coeff[sector_index[&(t, kind)]] += 1;
                }
                for kind in sheet_stack(support, tt, tf, w) {
                    coeff[sector_index[&(tt, kind)]] -= 1;
                }
                // Deficit at the circuit's branch arcs: with the row written
                // split-minus-merged, inward gives -1, outward +1 on the
                // split side.
                let mut rhs = 0i64;
                for &ai in &circuit_arcs {
                    let arc = &carrier.branch_arcs[ai];
                    if arc.split == (t, f, v) || arc.merged == (t, f, v) {
                        let split_is_pos = arc.split == (t, f, v);
                        let s = match direction {
                            DiskDirection::Inward => -1,
                            DiskDirection::Outward => 1,
                        };
                        rhs += if split_is_pos { s } else { -s };
                    }
                }
                // row: coeff . y = rhs  (split side positive)
                rows.push((coeff, -rhs));
            }
        }
    }
    rows
}

/// Bounded search for a carried disk with boundary the circuit's circle.
///
/// Enumerates sector weights in canonical order under the weight bound;
/// every hit is re-checked by [`verify_disk`].  `Inconclusive` reports a
/// weight-pruned frontier.
pub fn disk_search(
    tri: &Triangulation,
    carrier: &BranchedCarrier,
    component: usize,
    direction: DiskDirection,
    max_weight: u64,
) -> Result<DiskSearchResult, CarrierError> {
    let circuit = carrier
        .circuits
        .get(component)
        .ok_or(CarrierError::UnknownComponent(component))?;
    let rows = search_rows(tri, carrier, circuit, direction);
    let n = carrier.sectors.len();
    // DFS in canonical sector order; prune with row range feasibility.
    fn feasible(rows: &[(Vec<i64>, i64)], y: &[u64], fixed: usize, budget: u64) -> bool {
        for (coeff, rhs) in rows {
            let mut val = 0i64;
            for i in 0..fixed {
                val += coeff[i] * y[i] as i64;
            }
            let mut lo = val;
            let mut hi = val;
            for (i, &c) in coeff.iter().enumerate().skip(fixed) {
                let _ = i;
                if c > 0 {
                    hi += c * budget as i64;
                } else if c < 0 {
                    lo += c * budget as i64;
                }
            }
            if *rhs < lo || *rhs > hi {
                return false;
            }
        }
        true
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        tri: &Triangulation,
        carrier: &BranchedCarrier,
        component: usize,
        direction: DiskDirection,
        rows: &[(Vec<i64>, i64)],
        y: &mut Vec<u64>,
        i: usize,
        used: u64,
        max_weight: u64,
        best: &mut Option<SurfaceVector>,
        pruned: &mut bool,
    ) {
        if best.is_some() {
            return;
        }
        let n = y.len();
        if i == n {
            if rows.iter().all(|(coeff, rhs)| {
                coeff
                    .iter()
                    .zip(y.iter())
                    .map(|(&c, &v)| c * v as i64)
                    .sum::<i64>()
                    == *rhs
            }) {
                let vec = carrier_vector(carrier, y);
                if verify_disk(tri, carrier, component, direction, &vec) {
                    *best = Some(vec);
                }
            }
            return;
        }
        let budget = max_weight - used;
        for val in 0..=budget {
            y[i] = val;
            if feasible(rows, y, i + 1, budget - val) {
                rec(
                    tri, carrier, component, direction, rows, y, i + 1, used + val, max_weight,
                    best, pruned,
                );
            }
            if best.is_some() {
                y[i] = 0;
                return;
            }
        }
        // Larger values exist beyond the budget whenever a positive
        // coefficient could still help some row; report the cut frontier.
        if feasible(rows, y, i, u64::MAX / 4) && !feasible(rows, y, i, budget) {
            *pruned = true;
        }
        y[i] = 0;
    }
    // Branches of the first sector run in parallel; results merge by
    // canonical order, so the outcome is schedule-independent.
    if n == 0 {
        return Ok(DiskSearchResult::NotFound);
    }
    let branch_results: Vec<(Option<SurfaceVector>, bool)> = {
        use rayon::prelude::*;
        (0..=max_weight)
            .into_par_iter()
            .map(|val| {
                let mut y = vec![0u64; n];
                y[0] = val;
                let mut best = None;
                let mut pruned = false;
                if feasible(&rows, &y, 1, max_weight - val) {
                    rec(
                        tri,
                        carrier,
                        component,
                        direction,
                        &rows,
                        &mut y,
                        1,
                        val,
                        max_weight,
                        &mut best,
                        &mut pruned,
                    );
                }
                (best, pruned)
            })
            .collect()
    };
    let mut found: Vec<SurfaceVector> =
        branch_results.iter().filter_map(|(b, _)| b.clone()).collect();
    found.sort();
    let pruned = branch_results.iter().any(|&(_, p)| p) || {
        // Values of the first sector beyond the bound were never explored.
        let zeros = vec![0u64; n];
        feasible(&rows, &zeros, 0, u64::MAX / 4) && !feasible(&rows, &zeros, 0, max_weight)
    };
    if let Some(v) = found.into_iter().next() {
        Ok(DiskSearchResult::Found(v))
    } else if pruned {
        Ok(DiskSearchResult::Inconclusive(max_weight))
    } else {
        Ok(DiskSearchResult::NotFound)
    }
}

/// Sector weights as a full coordinate vector.
pub fn carrier_vector(carrier: &BranchedCarrier, y: &[u64]) -> SurfaceVector {
    let mut v = SurfaceVector::zero(carrier.support.num_tets());
    for (&(t, kind), &val) in carrier.sectors.iter().zip(y) {
        match kind {
            PieceKind::Tri(x) => v.coords[t][x] = val,
            PieceKind::Quad(k) => v.coords[t][4 + k] = val,
            PieceKind::Oct(k) => v.coords[t][7 + k] = val,
        }
    }
    v
}

/// Independent verifier for disk-search hits: branch equations with the
/// deficit, Euler characteristic one, and a single boundary cycle matching
/// the queried circuit.  Separate from the searcher by construction: it
/// rebuilds the bounded complex and counts cells.
pub fn verify_disk(
    tri: &Triangulation,
    carrier: &BranchedCarrier,
    component: usize,
    direction: DiskDirection,
    vec: &SurfaceVector,
) -> bool {
    let Some(circuit) = carrier.circuits.get(component) else {
        return false;
    };
    if vec.is_zero() || !carrier.support.contains(vec) {
        return false;
    }
    // Equations with deficit.
    let rows = search_rows(tri, carrier, circuit, direction);
    let y: Vec<u64> = carrier
        .sectors
        .iter()
        .map(|&(t, kind)| sector_weight(vec, t, kind))
        .collect();
    for (coeff, rhs) in &rows {
        let val: i64 = coeff.iter().zip(&y).map(|(&c, &v)| c * v as i64).sum();
        if val != *rhs {
            return false;
        }
    }
    // Bounded complex: pieces, gluings with unmatched slots at the cusp.
    let bounded = build_bounded_complex(tri, carrier, circuit, direction, vec);
    let Some(bc) = bounded else { return false };
    if bc.euler != 1 || bc.components != 1 {
        return false;
    }
    // One boundary cycle whose arc classes are the circuit's arcs.
    bc.boundary_cycles == 1 && bc.boundary_arcs == circuit.arcs.len()
}

struct BoundedComplex {
    euler: i64,
    components: usize,
    boundary_cycles: usize,
    boundary_arcs: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{matching_system, vertex_link};
    use crate::tri::parse_triangulation;

    fn fixture(name: &str) -> Triangulation {
        let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        parse_triangulation(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn vec_of(rows: Vec<[u64; 10]>) -> SurfaceVector {
        SurfaceVector { coords: rows }
    }

    fn tri_support(num_tets: usize) -> SupportFace {
        SupportFace { tris: vec![[true; 4]; num_tets], mid: vec![None; num_tets] }
    }

    #[test]
    fn all_triangle_support_has_empty_branch_locus() {
        for name in ["one_tet.json", "two_tet.json", "three_tet.json"] {
            let tri = fixture(name);
            let carrier = build_carrier(&tri, &tri_support(tri.num_tets())).unwrap();
            assert!(carrier.branch_arcs.is_empty(), "{name}");
            assert!(carrier.circuits.is_empty(), "{name}");
            assert!(!carrier.has_defect, "{name}");
            // Carried vectors are exactly the multiples of the vertex link:
            // check against a small lattice scan of the restricted system.
            let sys = matching_system(&tri);
            let link = vertex_link(&tri).unwrap();
            for c in 0..4u64 {
                assert!(carrier.carries(&sys, &link.scaled(c)), "{name} x{c}");
            }
            let members =
                face_fundamentals(&tri, &sys, &carrier.support, &EnumLimits::default()).unwrap();
            assert_eq!(members, vec![link], "{name}");
            // No boundary circles exist, so every disk query is rejected.
            assert!(matches!(
                disk_search(&tri, &carrier, 0, DiskDirection::Inward, 5),
                Err(CarrierError::UnknownComponent(0))
            ));
        }
    }

    #[test]
    fn empty_support_is_rejected() {
        let tri = fixture("one_tet.json");
        let support = SupportFace { tris: vec![[false; 4]], mid: vec![None] };
        assert!(matches!(
            build_carrier(&tri, &support),
            Err(CarrierError::EmptySupport(_))
        ));
    }

    #[test]
    fn fundamental_torus_support_fully_carries_it() {
        let tri = fixture("genus2.json");
        let sys = matching_system(&tri);
        let torus = vec_of(vec![
            [1, 1, 0, 0, 1, 0, 0, 0, 0, 0],
            [1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
        ]);
        let support = SupportFace::of_vector(&torus);
        let carrier = build_carrier(&tri, &support).unwrap();
        assert!(carrier.fully_carries(&sys, &torus));
        // dropping one sector breaks full carrying
        let mut partial = torus.clone();
        partial.coords[0][4] = 0;
        assert!(!carrier.fully_carries(&sys, &partial));
        // positivity is additive
        let doubled = torus.checked_add(&torus).unwrap();
        assert!(carrier.fully_carries(&sys, &doubled));
    }

    #[test]
    fn sub_branched_restricts_support_and_is_idempotent() {
        let tri = fixture("genus2.json");
        let sys = matching_system(&tri);
        let carrier = build_carrier(&tri, &tri_support(2)).unwrap();
        let link = vertex_link(&tri).unwrap();
        let sub = sub_branched(&tri, &carrier, &sys, &link).unwrap();
        assert!(sub.fully_carries(&sys, &link));
        let sub2 = sub_branched(&tri, &sub, &sys, &link).unwrap();
        assert_eq!(sub.sectors, sub2.sectors);
        // a vector outside the support is not carried
        let torus = vec_of(vec![
            [1, 1, 0, 0, 1, 0, 0, 0, 0, 0],
            [1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
        ]);
        assert!(matches!(
            sub_branched(&tri, &sub, &sys, &torus),
            Err(CarrierError::NotCarried)
        ));
    }

    fn transverse_union_carrier() -> (Triangulation, MatchingSystem, BranchedCarrier) {
        let tri = fixture("three_tet.json");
        let sys = matching_system(&tri);
        // Union support of the two transverse tori: all triangles of b plus
        // the quads of a and b cannot mix, so take b's support alone which
        // still branches (triangle and quad stacks merge across faces).
        let b = vec_of(vec![
            [1, 0, 1, 0, 0, 1, 0, 0, 0, 0],
            [1, 0, 1, 0, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 2, 0, 0, 0],
        ]);
        let support = SupportFace::of_vector(&b);
        let carrier = build_carrier(&tri, &support).unwrap();
        (tri, sys, carrier)
    }

    #[test]
    fn torus_carrier_has_branch_arcs_and_circuits() {
        let (_tri, _sys, carrier) = transverse_union_carrier();
        assert!(!carrier.branch_arcs.is_empty());
        assert!(!carrier.circuits.is_empty());
        // partition property: every arc lies in exactly one circuit, with
        // both endpoints consumed.
        let mut seen = std::collections::BTreeMap::new();
        for (ci, c) in carrier.circuits.iter().enumerate() {
            for &(ai, _) in &c.arcs {
                *seen.entry(ai).or_insert(0usize) += 1;
                let _ = ci;
            }
        }
        for ai in 0..carrier.branch_arcs.len() {
            assert_eq!(seen.get(&ai), Some(&1), "arc {ai}");
        }
    }

    #[test]
    fn circuits_are_deterministic() {
        let (_, _, c1) = transverse_union_carrier();
        let (_, _, c2) = transverse_union_carrier();
        assert_eq!(c1.circuits, c2.circuits);
        assert_eq!(c1.branch_arcs, c2.branch_arcs);
    }

    #[test]
    fn zero_weight_search_is_inconclusive() {
        let (tri, _, carrier) = transverse_union_carrier();
        assert!(!carrier.circuits.is_empty());
        let r = disk_search(&tri, &carrier, 0, DiskDirection::Inward, 0).unwrap();
        assert_eq!(r, DiskSearchResult::Inconclusive(0));
    }

    #[test]
    fn found_disks_pass_the_verifier() {
        let (tri, _, carrier) = transverse_union_carrier();
        for comp in 0..carrier.circuits.len() {
            for dir in [DiskDirection::Inward, DiskDirection::Outward] {
                if let DiskSearchResult::Found(v) =
                    disk_search(&tri, &carrier, comp, dir, 12).unwrap()
                {
                    assert!(verify_disk(&tri, &carrier, comp, dir, &v));
                }
            }
        }
    }

    #[test]
    fn sphere_gate_on_fixture_carriers() {
        let tri = fixture("two_tet.json");
        let sys = matching_system(&tri);
        let limits = EnumLimits::default();
        // The all-triangle carrier carries the vertex-linking sphere.
        let full = build_carrier(&tri, &tri_support(2)).unwrap();
        assert!(full.carries_sphere(&tri, &sys, &limits).unwrap());
        // The quad torus support carries no sphere.
        let torus = vec_of(vec![
            [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
        ]);
        let carrier = build_carrier(&tri, &SupportFace::of_vector(&torus)).unwrap();
        assert!(!carrier.carries_sphere(&tri, &sys, &limits).unwrap());
    }

    #[test]
    fn branch_equations_have_merge_shape() {
        // Every branching row of the restricted system relates three sector
        // coordinates as x_i + x_j = x_k.
        let (_, sys, carrier) = transverse_union_carrier();
        let rows = carrier.branch_rows(&sys);
        let mut saw_merge = false;
        for row in &rows {
            let pos: i64 = row.iter().filter(|&&c| c > 0).sum();
            let neg: i64 = -row.iter().filter(|&&c| c < 0).sum::<i64>();
            let nonzero = row.iter().filter(|&&c| c != 0).count();
            if nonzero == 3 {
                assert!((pos == 2 && neg == 1) || (pos == 1 && neg == 2));
                saw_merge = true;
            }
        }
        assert!(saw_merge);
    }
}

fn build_bounded_complex(
    tri: &Triangulation,
    carrier: &BranchedCarrier,
    circuit: &Circuit,
    direction: DiskDirection,
    vec: &SurfaceVector,
) -> Option<BoundedComplex> {
    use crate::topology::{reconstruct_pieces_for, ArcSlot};
    let (pieces, boundaries, mut stacks) = reconstruct_pieces_for(vec);
    let circuit_arcs: std::collections::BTreeSet<usize> =
        circuit.arcs.iter().map(|&(a, _)| a).collect();
    let mut gluings: Vec<((usize, usize), (usize, usize))> = Vec::new();
    let mut unmatched: Vec<(usize, usize)> = Vec::new();
    for t in 0..tri.num_tets() {
        for f in 0..4 {
            let (tt, tf, p) = tri.gluing(t, f);
            if (t, f) > (tt, tf) {
                continue;
            }
            for v in 0..4 {
                if v == f {
                    continue;
                }
                let w = p.apply(v);
                let mut sa: Vec<ArcSlot> = std::mem::take(&mut stacks[t][4 * f + v]);
                let mut sb: Vec<ArcSlot> = std::mem::take(&mut stacks[tt][4 * tf + w]);
                // Deficits at this arc class?
                let mut deficit_here = 0i64;
                let mut split_side_a = true;
                for &ai in &circuit_arcs {
                    let arc = &carrier.branch_arcs[ai];
                    if arc.split == (t, f, v) {
                        deficit_here += 1;
                        split_side_a = true;
                    } else if arc.split == (tt, tf, w) {
                        deficit_here += 1;
                        split_side_a = false;
                    }
                }
                if deficit_here > 0 {
                    let b = deficit_here as usize;
                    // The longer side holds the unmatched slots at the cusp:
                    // between the triangle group and the mid group.
                    let (longer, shorter, longer_piece_is_a) = match direction {
                        DiskDirection::Inward => {
                            // merged side has the extra arcs
                            if split_side_a {
                                (&mut sb, &mut sa, false)
                            } else {
                                (&mut sa, &mut sb, true)
                            }
                        }
                        DiskDirection::Outward => {
                            if split_side_a {
                                (&mut sa, &mut sb, true)
                            } else {
                                (&mut sb, &mut sa, false)
                            }
                        }
                    };
                    let _ = longer_piece_is_a;
                    if longer.len() != shorter.len() + b {
                        return None;
                    }
                    // Split of the shorter side into triangle-first group:
                    // the split side's stack is [tri-copies, mid-copies]; in
                    // the inward case the shorter side is the split side, in
                    // the outward case the shorter side is the merged side
                    // and the cusp slots sit after the image of the split
                    // triangles.
                    let tri_count = |slots: &Vec<ArcSlot>| -> usize {
                        slots
                            .iter()
                            .take_while(|&&(pi, _)| {
                                matches!(pieces[pi].kind, PieceKind::Tri(_))
                            })
                            .count()
                    };
                    let cut_at = match direction {
                        DiskDirection::Inward => tri_count(shorter),
                        DiskDirection::Outward => {
                            let tcount = tri_count(longer);
                            tcount.saturating_sub(b).max(0)
                        }
                    };
                    for (i, &slot) in longer.iter().enumerate() {
                        if i >= cut_at && i < cut_at + b {
                            unmatched.push(slot);
                        } else {
                            let j = if i < cut_at { i } else { i - b };
                            let other = shorter[j];
                            gluings.push((slot, other));
                        }
                    }
                } else {
                    if sa.len() != sb.len() {
                        return None;
                    }
                    for (&x, &yy) in sa.iter().zip(&sb) {
                        gluings.push((x, yy));
                    }
                }
            }
        }
    }
    // Cells: corner classes via glued identifications.
    let corner_offsets: Vec<usize> = boundaries
        .iter()
        .scan(0usize, |acc, b| {
            let off = *acc;
            *acc += b.len();
            Some(off)
        })
        .collect();
    let total: usize = boundaries.iter().map(|b| b.len()).sum();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    let cid = |pi: usize, ci: usize, boundaries: &Vec<Vec<crate::topology::BoundaryArc>>| {
        corner_offsets[pi] + ci % boundaries[pi].len()
    };
    let mut piece_parent: Vec<usize> = (0..pieces.len()).collect();
    for &((pa, aa), (pb, ab)) in &gluings {
        // Corner matching as in the closed reconstruction, via the glued
        // face's vertex map.
        let t = pieces[pa].tet;
        let arc_a = boundaries[pa][aa];
        let (_, _, p) = tri.gluing(t, arc_a.face);
        let arc_b = boundaries[pb][ab];
        let img = {
            let (x, yv) = arc_a.from_edge;
            let (ix, iy) = (p.apply(x), p.apply(yv));
            if ix < iy {
                (ix, iy)
            } else {
                (iy, ix)
            }
        };
        let fe_b = {
            let (x, yv) = arc_b.from_edge;
            if x < yv {
                (x, yv)
            } else {
                (yv, x)
            }
        };
        let (c1, c2, c3, c4) = if img == fe_b {
            (cid(pa, aa, &boundaries), cid(pb, ab, &boundaries), cid(pa, aa + 1, &boundaries), cid(pb, ab + 1, &boundaries))
        } else {
            (cid(pa, aa, &boundaries), cid(pb, ab + 1, &boundaries), cid(pa, aa + 1, &boundaries), cid(pb, ab, &boundaries))
        };
        let (r1, r2) = (find(&mut parent, c1), find(&mut parent, c2));
        if r1 != r2 {
            parent[r1] = r2;
        }
        let (r3, r4) = (find(&mut parent, c3), find(&mut parent, c4));
        if r3 != r4 {
            parent[r3] = r4;
        }
        let (ra, rb) = {
            fn findp(p: &mut Vec<usize>, x: usize) -> usize {
                if p[x] != x {
                    let r = findp(p, p[x]);
                    p[x] = r;
                }
                p[x]
            }
            (findp(&mut piece_parent, pa), findp(&mut piece_parent, pb))
        };
        if ra != rb {
            piece_parent[ra] = rb;
        }
    }
    let vcount = {
        let mut set = std::collections::BTreeSet::new();
        for x in 0..total {
            let r = find(&mut parent, x);
            set.insert(r);
        }
        set.len() as i64
    };
    let ecount = gluings.len() as i64 + unmatched.len() as i64;
    let fcount = pieces.len() as i64;
    let components = {
        let mut set = std::collections::BTreeSet::new();
        fn findp(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = findp(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for x in 0..pieces.len() {
            let r = findp(&mut piece_parent, x);
            set.insert(r);
        }
        set.len()
    };
    // Boundary cycles: unmatched arcs chained through shared corner classes.
    let mut cycles = 0usize;
    if !unmatched.is_empty() {
        let mut ends: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (ui, &(pi, ai)) in unmatched.iter().enumerate() {
            let c1 = find(&mut parent, cid(pi, ai, &boundaries));
            let c2 = find(&mut parent, cid(pi, ai + 1, &boundaries));
            ends.entry(c1).or_default().push(ui);
            ends.entry(c2).or_default().push(ui);
        }
        if ends.values().any(|v| v.len() != 2) {
            return None;
        }
        let mut seen = vec![false; unmatched.len()];
        for start in 0..unmatched.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut at = start;
            let mut from_corner = {
                let (pi, ai) = unmatched[at];
                find(&mut parent, cid(pi, ai, &boundaries))
            };
            loop {
                seen[at] = true;
                let (pi, ai) = unmatched[at];
                let c1 = find(&mut parent, cid(pi, ai, &boundaries));
                let c2 = find(&mut parent, cid(pi, ai + 1, &boundaries));
                let next_corner = if c1 == from_corner { c2 } else { c1 };
                let &next = ends[&next_corner]
                    .iter()
                    .find(|&&u| u != at)
                    .unwrap_or(&start);
                if next == start {
                    break;
                }
                at = next;
                from_corner = next_corner;
            }
        }
    }
    Some(BoundedComplex {
        euler: vcount - ecount + fcount,
        components,
        boundary_cycles: cycles,
        boundary_arcs: unmatched.len(),
    })
}
