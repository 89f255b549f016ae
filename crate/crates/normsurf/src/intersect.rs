//! Intersections of carried surfaces: double-curve tracing, conservative
//! triple-point counts, and homology classes of intersection curves.
//!
//! Each input surface is positioned by its own stacking convention; the
//! joint position is fixed by a global order of the crossing points along
//! every edge orbit.  Crossing points are identified across faces through
//! the per-surface arc gluings, the forced nesting constraints (a surface's
//! own copies, and triangle-corner-before-mid blocks) are closed
//! transitively, and the remaining freedom is resolved canonically, smaller
//! surface first in the canonical vector order.  Two arcs in a face cross
//! exactly when their positions along the shared edge interleave, so the
//! computed double curves are a genuine transverse position of the union.

use crate::coords::{SurfaceVector, PAIRING_PARTNER};
use crate::topology::{
    classify_components, reconstruct, CarriedSurface, PieceKind, SurfaceKind,
};
use crate::tri::{compute_skeleton, edge_index, Triangulation, EDGE_ENDS};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntersectError {
    #[error("intersection complexity supports 2 or 3 surfaces, got {0}")]
    Unsupported(usize),
    #[error("curve side does not lie in a torus component")]
    NotATorus,
    #[error("dimension mismatch between surfaces")]
    DimensionMismatch,
}

/// Homology data of one double curve inside one of the two surfaces.
#[derive(Clone, Debug, Serialize)]
pub struct CurveSide {
    /// Index of the surface in the input list.
    pub surface: usize,
    /// Component of that surface containing the curve.
    pub component: usize,
    pub component_kind: SurfaceKind,
    /// Homology class in a fixed basis, for torus components only.
    pub class: Option<(i64, i64)>,
    /// Essential flag (class != 0), for torus components only.
    pub essential: Option<bool>,
    pub null_homologous: bool,
    /// Meridian detection needs solid-torus recognition; always "unknown".
    pub meridian: &'static str,
}

/// One traced double curve.
#[derive(Clone, Debug, Serialize)]
pub struct TracedCurve {
    /// The pair of input surfaces whose intersection this curve belongs to.
    pub surfaces: (usize, usize),
    /// Number of tetrahedron arcs the curve passes through.
    pub length: usize,
    pub sides: Vec<CurveSide>,
}

/// Intersection complexity report: `(t, d)` in lexicographic order.
#[derive(Clone, Debug, Serialize)]
pub struct IntersectionReport {
    pub double_curve_count: usize,
    pub triple_points: u64,
    pub complexity: (u64, usize),
    pub curves: Vec<TracedCurve>,
    /// The triple-point count is the stacking-convention product bound, not
    /// an isotopy-minimal count.
    pub conservative: bool,
}

/// Homology class and essentiality of a traced curve in one of its surfaces.
pub fn curve_class(
    curve: &TracedCurve,
    surface: usize,
) -> Result<((i64, i64), bool), IntersectError> {
    curve
        .sides
        .iter()
        .find(|s| s.surface == surface)
        .and_then(|s| s.class.map(|c| (c, s.essential.unwrap_or(false))))
        .ok_or(IntersectError::NotATorus)
}

// ---------------------------------------------------------------------------
// Edge crossing classes and the global order
// ---------------------------------------------------------------------------

/// One crossing of a piece with an edge of its tetrahedron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Crossing {
    surface: usize,
    piece: usize,
    /// Edge index 0..5 within the tetrahedron.
    edge: usize,
    /// Disambiguates the two crossings of an octagon with a pair edge: the
    /// vertex the crossing is near; `usize::MAX` elsewhere.
    near: usize,
}

fn piece_edge_crossings(kind: PieceKind, edge: usize) -> Vec<usize> {
    // Returns the `near` tags of the crossings of this piece kind with the
    // given tetrahedron edge (empty when disjoint).
    let (a, b) = EDGE_ENDS[edge];
    match kind {
        PieceKind::Tri(v) => {
            if v == a || v == b {
                vec![usize::MAX]
            } else {
                vec![]
            }
        }
        PieceKind::Quad(k) => {
            if PAIRING_PARTNER[k][a] != b {
                vec![usize::MAX]
            } else {
                vec![]
            }
        }
        PieceKind::Oct(k) => {
            if PAIRING_PARTNER[k][a] == b {
                vec![a, b]
            } else {
                vec![usize::MAX]
            }
        }
    }
}

/// The crossing a boundary-arc endpoint sits on.
fn endpoint_crossing(
    surface: usize,
    piece: usize,
    kind: PieceKind,
    cut: usize,
    edge_pair: (usize, usize),
) -> Crossing {
    let e = edge_index(edge_pair.0, edge_pair.1);
    let near = match kind {
        PieceKind::Oct(k) => {
            let (a, b) = EDGE_ENDS[e];
            if PAIRING_PARTNER[k][a] == b {
                cut
            } else {
                usize::MAX
            }
        }
        _ => usize::MAX,
    };
    Crossing { surface, piece, edge: e, near }
}

/// Block of a crossing along its edge: triangle nest at the low end, mids,
/// triangle nest at the high end.
fn crossing_block(kind: PieceKind, edge: usize, near: usize) -> u8 {
    let (a, b) = EDGE_ENDS[edge];
    match kind {
        PieceKind::Tri(v) => {
            if v == a {
                0
            } else {
                debug_assert_eq!(v, b);
                2
            }
        }
        PieceKind::Quad(_) | PieceKind::Oct(_) => {
            let _ = near;
            1
        }
    }
}

/// Order key of a crossing within its surface along the edge, from the
/// edge's smaller vertex.
fn within_surface_key(
    kind: PieceKind,
    level: u64,
    edge: usize,
    near: usize,
    quad_count: u64,
) -> (u8, u64) {
    let (a, _b) = EDGE_ENDS[edge];
    match kind {
        PieceKind::Tri(v) => {
            if v == a {
                (0, level)
            } else {
                (2, u64::MAX - level)
            }
        }
        PieceKind::Quad(k) => {
            // Copies indexed from the pair containing vertex 0.
            let a_on_side0 = a == 0 || PAIRING_PARTNER[k][a] == 0;
            let sub = if a_on_side0 { level } else { quad_count - 1 - level };
            (1, sub)
        }
        PieceKind::Oct(_) => (1, if near == a { 0 } else { 1 }),
    }
}

struct EdgeOrder {
    /// Global rank of every crossing class; indexed by class id.
    rank: Vec<usize>,
    /// Class id per crossing.
    class_of: BTreeMap<Crossing, usize>,
}

/// A joint transverse position of several admissible surfaces.
pub struct JointPosition<'a> {
    pub tri: &'a Triangulation,
    pub complexes: Vec<CarriedSurface>,
    order: EdgeOrder,
}

struct Uf(Vec<usize>);
impl Uf {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

impl<'a> JointPosition<'a> {
    pub fn build(tri: &'a Triangulation, vecs: &[SurfaceVector]) -> JointPosition<'a> {
        let complexes: Vec<CarriedSurface> = vecs.iter().map(|v| reconstruct(tri, v)).collect();
        let skel = compute_skeleton(tri);

        // All crossings, and the per-(tet, edge) lists in forced order.
        let mut all: Vec<Crossing> = Vec::new();
        let mut per_edge: Vec<Vec<Vec<Crossing>>> = vec![vec![Vec::new(); 6]; tri.num_tets()];
        for (s, cx) in complexes.iter().enumerate() {
            for (pi, piece) in cx.pieces.iter().enumerate() {
                for e in 0..6 {
                    for near in piece_edge_crossings(piece.kind, e) {
                        per_edge[piece.tet][e].push(Crossing { surface: s, piece: pi, edge: e, near });
                    }
                }
            }
        }
        for t in 0..tri.num_tets() {
            for e in 0..6 {
                per_edge[t][e].sort_by_key(|c| {
                    let piece = complexes[c.surface].pieces[c.piece];
                    let qc = match piece.kind {
                        PieceKind::Quad(k) => vecs[c.surface].quad(t, k),
                        _ => 0,
                    };
                    let (blk, sub) = within_surface_key(piece.kind, piece.level, e, c.near, qc);
                    (c.surface, blk, sub, c.piece, c.near)
                });
                all.extend(per_edge[t][e].iter().copied());
            }
        }
        let mut id_of: BTreeMap<Crossing, usize> = BTreeMap::new();
        for (i, c) in all.iter().enumerate() {
            id_of.insert(*c, i);
        }

        // Identify crossings across face gluings, per surface, rank by rank.
        let mut uf = Uf((0..all.len()).collect());
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
                    for (s, cx) in complexes.iter().enumerate() {
                        let sa = cx.arc_stack(t, f, v);
                        let sb = cx.arc_stack(tt, tf, p.apply(v));
                        for (&(pa, aa), &(pb, ab)) in sa.iter().zip(sb) {
                            let arc_a = cx.boundaries[pa][aa];
                            let arc_b = cx.boundaries[pb][ab];
                            for end_a in [arc_a.from_edge, arc_a.to_edge] {
                                let img = (p.apply(end_a.0), p.apply(end_a.1));
                                let img_e = edge_index(img.0, img.1);
                                let end_b = if edge_index(arc_b.from_edge.0, arc_b.from_edge.1)
                                    == img_e
                                {
                                    arc_b.from_edge
                                } else {
                                    arc_b.to_edge
                                };
                                let ca = endpoint_crossing(
                                    s,
                                    pa,
                                    cx.pieces[pa].kind,
                                    arc_a.cut,
                                    end_a,
                                );
                                let cb = endpoint_crossing(
                                    s,
                                    pb,
                                    cx.pieces[pb].kind,
                                    arc_b.cut,
                                    end_b,
                                );
                                uf.union(id_of[&ca], id_of[&cb]);
                            }
                        }
                    }
                }
            }
        }
        let mut class_of: BTreeMap<Crossing, usize> = BTreeMap::new();
        let mut class_ids: BTreeMap<usize, usize> = BTreeMap::new();
        for c in &all {
            let r = uf.find(id_of[c]);
            let next = class_ids.len();
            class_of.insert(*c, *class_ids.entry(r).or_insert(next));
        }
        let num_classes = class_ids.len();

        // Precedence constraints per edge instance, expressed in each edge
        // orbit's reference orientation, then a canonical topological order.
        let mut succ: Vec<std::collections::BTreeSet<usize>> =
            vec![std::collections::BTreeSet::new(); num_classes];
        let mut pred_count = vec![0usize; num_classes];
        let add_edge = |succ: &mut Vec<std::collections::BTreeSet<usize>>,
                            pred_count: &mut Vec<usize>,
                            x: usize,
                            y: usize| {
            if x != y && succ[x].insert(y) {
                pred_count[y] += 1;
            }
        };
        // Surface priority: canonical vector order, so results are invariant
        // under permuting the input list.
        let mut surf_rank: Vec<usize> = (0..vecs.len()).collect();
        surf_rank.sort_by(|&i, &j| vecs[i].cmp(&vecs[j]).then(i.cmp(&j)));
        let priority_of = {
            let mut pr = vec![0usize; vecs.len()];
            for (rank, &s) in surf_rank.iter().enumerate() {
                pr[s] = rank;
            }
            pr
        };
        // Hard constraints: only each surface's own per-instance order.  A
        // crossing class can stack as a triangle near one end of the edge in
        // one tetrahedron and as a mid crossing in another, so cross-surface
        // block relations are not jointly forced; they enter only as the
        // tie-break preference below.
        for t in 0..tri.num_tets() {
            for e in 0..6 {
                let list = &per_edge[t][e];
                let (_, sign) = skel.edge_orbit[t][e];
                for i in 0..list.len() {
                    for j in (i + 1)..list.len() {
                        let (ci, cj) = (list[i], list[j]);
                        if ci.surface != cj.surface {
                            continue;
                        }
                        let (x, y) = (class_of[&ci], class_of[&cj]);
                        if sign > 0 {
                            add_edge(&mut succ, &mut pred_count, x, y);
                        } else {
                            add_edge(&mut succ, &mut pred_count, y, x);
                        }
                    }
                }
            }
        }
        // Soft preference: triangle nests at the edge ends first and last,
        // then canonical surface priority; realised by the topo-sort key.
        let class_key: Vec<(u8, usize, usize)> = {
            let mut key = vec![(u8::MAX, usize::MAX, usize::MAX); num_classes];
            for t in 0..tri.num_tets() {
                for e in 0..6 {
                    let (_, sign) = skel.edge_orbit[t][e];
                    for c in &per_edge[t][e] {
                        let piece = complexes[c.surface].pieces[c.piece];
                        let blk = crossing_block(piece.kind, e, c.near);
                        let eff = if sign > 0 { blk } else { 2 - blk };
                        let k = (eff, priority_of[c.surface], id_of[c]);
                        let cl = class_of[c];
                        if k < key[cl] {
                            key[cl] = k;
                        }
                    }
                }
            }
            key
        };
        let mut heap: std::collections::BinaryHeap<
            std::cmp::Reverse<((u8, usize, usize), usize)>,
        > = (0..num_classes)
            .filter(|&c| pred_count[c] == 0)
            .map(|c| std::cmp::Reverse((class_key[c], c)))
            .collect();
        let mut rank = vec![usize::MAX; num_classes];
        let mut next_rank = 0usize;
        while let Some(std::cmp::Reverse((_, c))) = heap.pop() {
            rank[c] = next_rank;
            next_rank += 1;
            for &d in &succ[c] {
                pred_count[d] -= 1;
                if pred_count[d] == 0 {
                    heap.push(std::cmp::Reverse((class_key[d], d)));
                }
            }
        }
        assert_eq!(next_rank, num_classes, "edge order constraints are acyclic");

        JointPosition { tri, complexes, order: EdgeOrder { rank, class_of } }
    }

    /// Position of a crossing along the oriented reference edge of its orbit.
    fn pos(&self, c: &Crossing) -> usize {
        self.order.rank[self.order.class_of[c]]
    }
}

// ---------------------------------------------------------------------------
// Face crossings and curve tracing
// ---------------------------------------------------------------------------

/// One transversal intersection point of two arcs in a face.
#[derive(Clone, Debug)]
struct FaceCrossing {
    /// Arc occurrences on the `(t, f)` side, as (surface, piece, arc index).
    t_side: [(usize, usize, usize); 2],
    /// Arc occurrences on the glued side.
    o_side: [(usize, usize, usize); 2],
}

fn face_crossings(jp: &JointPosition, skel_sign: &dyn Fn(usize, usize) -> i8) -> Vec<FaceCrossing> {
    let tri = jp.tri;
    let mut out = Vec::new();
    for t in 0..tri.num_tets() {
        for f in 0..4 {
            let (tt, tf, p) = tri.gluing(t, f);
            if (t, f) > (tt, tf) {
                continue;
            }
            let verts: Vec<usize> = (0..4).filter(|&v| v != f).collect();
            for &u in &verts {
                for &w in &verts {
                    if u == w {
                        continue;
                    }
                    let e = edge_index(u, w);
                    let (a, _) = EDGE_ENDS[e];
                    let sign = skel_sign(t, e);
                    for su in 0..jp.complexes.len() {
                        for sv in 0..jp.complexes.len() {
                            if su >= sv {
                                continue;
                            }
                            // alpha around u from surface su, beta around w
                            // from surface sv; the symmetric roles come from
                            // the (w, u) iteration.
                            let cu = &jp.complexes[su];
                            let cv = &jp.complexes[sv];
                            for (ia, &(pa, aa)) in cu.arc_stack(t, f, u).iter().enumerate() {
                                let arc_a = cu.boundaries[pa][aa];
                                let end_a = if edge_index(arc_a.from_edge.0, arc_a.from_edge.1)
                                    == e
                                {
                                    arc_a.from_edge
                                } else {
                                    arc_a.to_edge
                                };
                                let ca = endpoint_crossing(
                                    su,
                                    pa,
                                    cu.pieces[pa].kind,
                                    arc_a.cut,
                                    end_a,
                                );
                                for (ib, &(pb, ab)) in
                                    cv.arc_stack(t, f, w).iter().enumerate()
                                {
                                    let arc_b = cv.boundaries[pb][ab];
                                    let end_b = if edge_index(
                                        arc_b.from_edge.0,
                                        arc_b.from_edge.1,
                                    ) == e
                                    {
                                        arc_b.from_edge
                                    } else {
                                        arc_b.to_edge
                                    };
                                    let cb = endpoint_crossing(
                                        sv,
                                        pb,
                                        cv.pieces[pb].kind,
                                        arc_b.cut,
                                        end_b,
                                    );
                                    // alpha crosses beta iff alpha's crossing
                                    // is farther from u along the edge.
                                    let (ra, rb) = (jp.pos(&ca), jp.pos(&cb));
                                    let from_u_greater = if (u == a) == (sign > 0) {
                                        ra > rb
                                    } else {
                                        ra < rb
                                    };
                                    if !from_u_greater {
                                        continue;
                                    }
                                    // Each unordered arc pair is visited once:
                                    // the surface roles are fixed by su < sv.
                                    let oa = cu.arc_stack(tt, tf, p.apply(u))[ia];
                                    let ob = cv.arc_stack(tt, tf, p.apply(w))[ib];
                                    out.push(FaceCrossing {
                                        t_side: [(su, pa, aa), (sv, pb, ab)],
                                        o_side: [(su, oa.0, oa.1), (sv, ob.0, ob.1)],
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// The chords of all pairwise piece intersections inside the tetrahedra,
/// as index pairs into the face-crossing list, plus the (surface, piece)
/// pair each chord belongs to.
fn chords(
    jp: &JointPosition,
    crossings: &[FaceCrossing],
) -> Vec<((usize, usize), (usize, usize), usize, usize)> {
    // Group crossing endpoints by (tet-side piece pair).  Each crossing
    // contributes one endpoint on each adjacent side.
    #[derive(Clone)]
    struct Endpoint {
        crossing: usize,
        /// position of the crossing along the boundary of the first piece
        /// of the pair: (arc index, side, nest rank)
        along: (usize, u8, i64),
    }
    let mut groups: BTreeMap<((usize, usize), (usize, usize)), Vec<Endpoint>> = BTreeMap::new();
    for (ci, fc) in crossings.iter().enumerate() {
        for side in [&fc.t_side, &fc.o_side] {
            let [(su, pa, aa), (sv, pb, ab)] = *side;
            let key = ((su, pa), (sv, pb));
            let cu = &jp.complexes[su];
            let arc_a = cu.boundaries[pa][aa];
            // Which endpoint of alpha's arc the crossing is near: the shared
            // edge holds it.
            let cv = &jp.complexes[sv];
            let arc_b = cv.boundaries[pb][ab];
            let shared_e = {
                // common edge of the two arcs' faces: the edge joining the
                // two cut vertices.
                edge_index(arc_a.cut, arc_b.cut)
            };
            let side_tag = if edge_index(arc_a.from_edge.0, arc_a.from_edge.1) == shared_e {
                0u8
            } else {
                1u8
            };
            let cb = endpoint_crossing(sv, pb, cv.pieces[pb].kind, arc_b.cut, {
                if edge_index(arc_b.from_edge.0, arc_b.from_edge.1) == shared_e {
                    arc_b.from_edge
                } else {
                    arc_b.to_edge
                }
            });
            let beta_pos = jp.pos(&cb) as i64;
            // From-side crossings are passed in decreasing beta position,
            // to-side in increasing order.
            let nest = if side_tag == 0 { -beta_pos } else { beta_pos };
            groups
                .entry(key)
                .or_default()
                .push(Endpoint { crossing: ci, along: (aa, side_tag, nest) });
        }
    }
    let mut out = Vec::new();
    for (((su, pa), (sv, pb)), mut eps) in groups {
        eps.sort_by_key(|e| e.along);
        assert!(eps.len() % 2 == 0, "piece-pair boundary crossings pair up");
        // Nested matching along the first piece's boundary; transverse quads
        // and octagons meet in a single chord per copy pair (two crossings).
        for pair in eps.chunks(2) {
            out.push((
                (su, pa),
                (sv, pb),
                pair[0].crossing,
                pair[1].crossing,
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Homology of curves in a surface component
// ---------------------------------------------------------------------------

/// Smith-normal-form row reduction: returns the diagonal entries and the
/// accumulated left transform L with W = L * M * R.
fn smith_with_left(mut m: Vec<Vec<i64>>, rows: usize, cols: usize) -> (Vec<i64>, Vec<Vec<i64>>) {
    let mut l: Vec<Vec<i64>> = (0..rows)
        .map(|i| (0..rows).map(|j| (i == j) as i64).collect())
        .collect();
    let mut diag = Vec::new();
    let mut r0 = 0;
    let mut c0 = 0;
    while r0 < rows && c0 < cols {
        // find pivot with smallest nonzero absolute value
        let mut pivot: Option<(usize, usize)> = None;
        for i in r0..rows {
            for j in c0..cols {
                if m[i][j] != 0
                    && pivot.is_none_or(|(pi, pj)| m[i][j].abs() < m[pi][pj].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        m.swap(r0, pi);
        l.swap(r0, pi);
        for row in m.iter_mut() {
            row.swap(c0, pj);
        }
        loop {
            let mut clean = true;
            for i in (r0 + 1)..rows {
                let q = m[i][c0].div_euclid(m[r0][c0]);
                if q != 0 {
                    for j in 0..cols {
                        m[i][j] -= q * m[r0][j];
                    }
                    for j in 0..rows {
                        l[i][j] -= q * l[r0][j];
                    }
                }
                if m[i][c0] != 0 {
                    clean = false;
                    m.swap(r0, i);
                    l.swap(r0, i);
                }
            }
            for j in (c0 + 1)..cols {
                let q = m[r0][j].div_euclid(m[r0][c0]);
                if q != 0 {
                    for i in 0..rows {
                        m[i][j] -= q * m[i][c0];
                    }
                }
                if m[r0][j] != 0 {
                    clean = false;
                    for row in m.iter_mut() {
                        row.swap(c0, j);
                    }
                }
            }
            if clean {
                break;
            }
        }
        diag.push(m[r0][c0].abs());
        r0 += 1;
        c0 += 1;
    }
    (diag, l)
}

/// Homology solver for one component of one reconstructed surface.
struct ComponentHomology {
    /// 1-cell (gluing index) -> column in the reduced coordinates, or tree.
    nontree_col: BTreeMap<usize, usize>,
    diag: Vec<i64>,
    left: Vec<Vec<i64>>,
    rank_free: Vec<usize>,
}

impl ComponentHomology {
    fn build(cx: &CarriedSurface, component: usize) -> ComponentHomology {
        // Vertex-edge graph of the component.
        let mut edges = Vec::new();
        for (gi, g) in cx.gluings.iter().enumerate() {
            if cx.component_of[g.a.0] == component {
                let u = cx.corner_class(g.a.0, g.a.1);
                let v = cx.corner_class(g.a.0, g.a.1 + 1);
                edges.push((gi, u, v));
            }
        }
        // BFS spanning tree over corner classes.
        let mut adj: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for &(gi, u, v) in &edges {
            adj.entry(u).or_default().push((v, gi));
            adj.entry(v).or_default().push((u, gi));
        }
        let mut in_tree: std::collections::BTreeSet<usize> = Default::default();
        let mut seen: std::collections::BTreeSet<usize> = Default::default();
        if let Some((&root, _)) = adj.iter().next() {
            let mut queue = std::collections::VecDeque::from([root]);
            seen.insert(root);
            while let Some(u) = queue.pop_front() {
                if let Some(nbrs) = adj.get(&u) {
                    for &(v, gi) in nbrs {
                        if seen.insert(v) {
                            in_tree.insert(gi);
                            queue.push_back(v);
                        }
                    }
                }
            }
        }
        let mut nontree_col = BTreeMap::new();
        for &(gi, _, _) in &edges {
            if !in_tree.contains(&gi) {
                let next = nontree_col.len();
                nontree_col.insert(gi, next);
            }
        }
        let nt = nontree_col.len();
        // Boundary rows of the component's 2-cells in non-tree coordinates.
        let mut rows_m: Vec<Vec<i64>> = Vec::new();
        let mut arc_cell: BTreeMap<(usize, usize), (usize, i64)> = BTreeMap::new();
        for (gi, g) in cx.gluings.iter().enumerate() {
            arc_cell.insert(g.a, (gi, 1));
            arc_cell.insert(g.b, (gi, if g.flip { 1 } else { -1 }));
        }
        for (pi, b) in cx.boundaries.iter().enumerate() {
            if cx.component_of[pi] != component {
                continue;
            }
            let mut row = vec![0i64; nt];
            for ai in 0..b.len() {
                let (gi, sign) = arc_cell[&(pi, ai)];
                if let Some(&col) = nontree_col.get(&gi) {
                    row[col] += sign;
                }
            }
            rows_m.push(row);
        }
        // Work with columns: SNF of the transpose (nt x F).
        let f = rows_m.len();
        let mt: Vec<Vec<i64>> = (0..nt)
            .map(|i| (0..f).map(|j| rows_m[j][i]).collect())
            .collect();
        let (diag, left) = smith_with_left(mt, nt, f);
        let rank_free = (diag.len()..nt).collect();
        ComponentHomology { nontree_col, diag, left, rank_free }
    }

    /// Reduce a cycle 1-chain (coefficients per gluing index) to its
    /// invariant coordinates; `None` entries are free coordinates.
    fn reduce(&self, chain: &BTreeMap<usize, i64>) -> (Vec<i64>, Vec<i64>) {
        let nt = self.nontree_col.len();
        let mut z = vec![0i64; nt];
        for (&gi, &c) in chain {
            if let Some(&col) = self.nontree_col.get(&gi) {
                z[col] += c;
            }
        }
        let y: Vec<i64> = (0..nt)
            .map(|i| (0..nt).map(|j| self.left[i][j] * z[j]).sum())
            .collect();
        let torsion: Vec<i64> = self
            .diag
            .iter()
            .enumerate()
            .map(|(i, &d)| if d != 0 { y[i].rem_euclid(d) } else { y[i] })
            .collect();
        let free: Vec<i64> = self.rank_free.iter().map(|&i| y[i]).collect();
        (torsion, free)
    }
}

// ---------------------------------------------------------------------------
// Top-level operation
// ---------------------------------------------------------------------------

/// Conservative triple-point count: per tetrahedron, the product of the
/// multiplicities of three pairwise-incompatible mid types summed over the
/// surface triples.  An upper count under the stacking convention, not an
/// isotopy-minimal one.
pub fn conservative_triple_points(vecs: &[SurfaceVector], num_tets: usize) -> u64 {
    if vecs.len() < 3 {
        return 0;
    }
    let mut total = 0u64;
    for t in 0..num_tets {
        let mids: Vec<Option<(u8, usize, u64)>> = vecs.iter().map(|v| v.mid_type(t)).collect();
        for i in 0..vecs.len() {
            for j in (i + 1)..vecs.len() {
                for k in (j + 1)..vecs.len() {
                    if let (Some((_, ki, mi)), Some((_, kj, mj)), Some((_, kk, mk))) =
                        (mids[i], mids[j], mids[k])
                    {
                        if ki != kj && kj != kk && ki != kk {
                            total += mi * mj * mk;
                        }
                    }
                }
            }
        }
    }
    total
}

/// Trace the double curves of a joint position and compute the intersection
/// complexity `(t, d)`.
pub fn intersection_complexity(
    tri: &Triangulation,
    vecs: &[SurfaceVector],
) -> Result<IntersectionReport, IntersectError> {
    if vecs.len() < 2 || vecs.len() > 3 {
        return Err(IntersectError::Unsupported(vecs.len()));
    }
    if vecs.iter().any(|v| v.num_tets() != tri.num_tets()) {
        return Err(IntersectError::DimensionMismatch);
    }
    let jp = JointPosition::build(tri, vecs);
    let skel = compute_skeleton(tri);
    let sign_fn = |t: usize, e: usize| skel.edge_orbit[t][e].1;
    let crossings = face_crossings(&jp, &sign_fn);
    let chord_list = chords(&jp, &crossings);

    // Each crossing carries exactly two chord ends (a closed curve may even
    // use both ends of a single chord); curves are the cycles of the
    // half-edge pairing.
    let mut incident: Vec<Vec<(usize, u8)>> = vec![Vec::new(); crossings.len()];
    for (ci, &(_, _, x, y)) in chord_list.iter().enumerate() {
        incident[x].push((ci, 0));
        incident[y].push((ci, 1));
    }
    debug_assert!(incident.iter().all(|v| v.len() == 2 || v.is_empty()));
    let mut end_seen = vec![[false; 2]; chord_list.len()];
    let mut curves_raw: Vec<Vec<usize>> = Vec::new();
    for start in 0..chord_list.len() {
        if end_seen[start][0] {
            continue;
        }
        let mut cycle = Vec::new();
        // Walk: traverse a chord from one end to the other, then switch to
        // the crossing's other chord end.
        let (mut chord, mut enter) = (start, 0u8);
        loop {
            end_seen[chord][enter as usize] = true;
            end_seen[chord][1 - enter as usize] = true;
            cycle.push(chord);
            let exit = 1 - enter;
            let exit_pt = if exit == 0 { chord_list[chord].2 } else { chord_list[chord].3 };
            let &(next_chord, next_end) = incident[exit_pt]
                .iter()
                .find(|&&(c, e)| (c, e) != (chord, exit))
                .expect("two chord ends per crossing");
            if (next_chord, next_end) == (start, 0) {
                break;
            }
            chord = next_chord;
            enter = next_end;
        }
        curves_raw.push(cycle);
    }

    // Classification data and homology solvers, built lazily per component.
    let reports: Vec<Vec<crate::topology::ComponentReport>> = jp
        .complexes
        .iter()
        .map(|cx| classify_components(tri, cx))
        .collect();
    let mut homology: BTreeMap<(usize, usize), ComponentHomology> = BTreeMap::new();

    let mut curves = Vec::new();
    for cycle in &curves_raw {
        let ((su, _), (sv, _), _, _) = chord_list[cycle[0]];
        let mut sides = Vec::new();
        for s in [su, sv] {
            let cx = &jp.complexes[s];
            // 1-chain: route each chord through its piece of surface s.
            let mut chain: BTreeMap<usize, i64> = BTreeMap::new();
            let mut arc_cell: BTreeMap<(usize, usize), (usize, i64)> = BTreeMap::new();
            for (gi, g) in cx.gluings.iter().enumerate() {
                arc_cell.insert(g.a, (gi, 1));
                arc_cell.insert(g.b, (gi, if g.flip { 1 } else { -1 }));
            }
            let mut component = None;
            for &ch in cycle {
                let ((csu, pu), (csv, pv), x, y) = chord_list[ch];
                let piece = if csu == s {
                    pu
                } else {
                    debug_assert_eq!(csv, s);
                    pv
                };
                component.get_or_insert(cx.component_of[piece]);
                // The chord's endpoints lie on arcs of `piece`.
                let arc_of = |cr: usize| -> usize {
                    let fc = &crossings[cr];
                    for side in [&fc.t_side, &fc.o_side] {
                        for &(ss, pp, aa) in side.iter() {
                            if ss == s && pp == piece {
                                return aa;
                            }
                        }
                    }
                    unreachable!("crossing touches the piece");
                };
                let (a1, a2) = (arc_of(x), arc_of(y));
                // Route forward along the piece boundary from the canonical
                // corner of a1's 1-cell to that of a2's; in homology any
                // boundary route is equivalent.
                let n = cx.boundaries[piece].len();
                let canon_corner = |ai: usize| -> usize {
                    let (gi, _) = arc_cell[&(piece, ai)];
                    let g = &cx.gluings[gi];
                    if g.a == (piece, ai) {
                        ai // start corner of the canonical side
                    } else if g.flip {
                        ai
                    } else {
                        (ai + 1) % n
                    }
                };
                let mut at = canon_corner(a1);
                let target = canon_corner(a2);
                while at != target {
                    let (gi, sign) = arc_cell[&(piece, at)];
                    *chain.entry(gi).or_insert(0) += sign;
                    at = (at + 1) % n;
                }
            }
            let component = component.expect("nonempty cycle");
            let hom = homology
                .entry((s, component))
                .or_insert_with(|| ComponentHomology::build(cx, component));
            let (torsion, free) = hom.reduce(&chain);
            let null = torsion.iter().all(|&x| x == 0) && free.iter().all(|&x| x == 0);
            let kind = reports[s][component].kind;
            let (class, essential) = if kind == SurfaceKind::Torus {
                debug_assert_eq!(free.len(), 2);
                let mut c = (free[0], free[1]);
                // canonical sign: first nonzero positive
                if c.0 < 0 || (c.0 == 0 && c.1 < 0) {
                    c = (-c.0, -c.1);
                }
                (Some(c), Some(c != (0, 0)))
            } else {
                (None, None)
            };
            sides.push(CurveSide {
                surface: s,
                component,
                component_kind: kind,
                class,
                essential,
                null_homologous: null,
                meridian: "unknown",
            });
        }
        curves.push(TracedCurve { surfaces: (su, sv), length: cycle.len(), sides });
    }
    curves.sort_by(|a, b| {
        (a.surfaces, a.length, format!("{:?}", a.sides.first().map(|s| s.class)))
            .cmp(&(b.surfaces, b.length, format!("{:?}", b.sides.first().map(|s| s.class))))
    });

    let t = conservative_triple_points(vecs, tri.num_tets());
    let d = curves.len();
    Ok(IntersectionReport {
        double_curve_count: d,
        triple_points: t,
        complexity: (t, d),
        curves,
        conservative: true,
    })
}

/// The number of traced double curves that are null-homologous in the first
/// surface; the polygonal proxy for curves trivial in `F`.
pub fn trivial_curves_in_first(
    tri: &Triangulation,
    f: &SurfaceVector,
    lambda: &SurfaceVector,
) -> Result<usize, IntersectError> {
    let report = intersection_complexity(tri, &[f.clone(), lambda.clone()])?;
    Ok(report
        .curves
        .iter()
        .filter(|c| c.sides.iter().any(|s| s.surface == 0 && s.null_homologous))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{is_admissible, matching_system, vertex_link};
    use crate::tri::parse_triangulation;

    fn fixture(name: &str) -> Triangulation {
        let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        parse_triangulation(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn vec_of(rows: Vec<[u64; 10]>) -> SurfaceVector {
        SurfaceVector { coords: rows }
    }

    fn three_tet_tori() -> (Triangulation, SurfaceVector, SurfaceVector) {
        let tri = fixture("three_tet.json");
        // Frozen from the fixture probe: both are connected orientable tori.
        let a = vec_of(vec![
            [0, 0, 0, 0, 0, 0, 2, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 2, 0, 0, 0],
            [0, 0, 0, 0, 2, 0, 0, 0, 0, 0],
        ]);
        let b = vec_of(vec![
            [1, 0, 1, 0, 0, 1, 0, 0, 0, 0],
            [1, 0, 1, 0, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 2, 0, 0, 0],
        ]);
        (tri, a, b)
    }

    #[test]
    fn disjoint_supports_have_zero_complexity() {
        let tri = fixture("two_tet.json");
        let link = vertex_link(&tri).unwrap();
        let torus = vec_of(vec![
            [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
        ]);
        let r = intersection_complexity(&tri, &[link, torus]).unwrap();
        assert_eq!(r.complexity, (0, 0));
        assert!(r.curves.is_empty());
    }

    #[test]
    fn self_intersection_is_empty() {
        let tri = fixture("two_tet.json");
        let torus = vec_of(vec![
            [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
        ]);
        let r = intersection_complexity(&tri, &[torus.clone(), torus]).unwrap();
        assert_eq!(r.complexity, (0, 0));
    }

    #[test]
    fn transverse_tori_have_curves_and_are_symmetric() {
        let (tri, a, b) = three_tet_tori();
        let sys = matching_system(&tri);
        assert!(is_admissible(&a, &sys) && is_admissible(&b, &sys));
        let r1 = intersection_complexity(&tri, &[a.clone(), b.clone()]).unwrap();
        let r2 = intersection_complexity(&tri, &[b, a]).unwrap();
        assert_eq!(r1.triple_points, 0);
        assert!(r1.double_curve_count > 0);
        assert_eq!(r1.complexity, r2.complexity);
    }

    #[test]
    fn two_surfaces_never_have_triple_points() {
        let (tri, a, b) = three_tet_tori();
        let r = intersection_complexity(&tri, &[a, b]).unwrap();
        assert_eq!(r.triple_points, 0);
    }

    #[test]
    fn triple_point_count_is_the_product_bound() {
        // Three pairwise-distinct quad pairings in one tetrahedron: the
        // count is the product of the multiplicities; compatible or missing
        // mid triples contribute nothing.
        let q = |k: usize, m: u64| -> [u64; 10] {
            let mut row = [0u64; 10];
            row[4 + k] = m;
            row
        };
        let u = SurfaceVector { coords: vec![q(0, 2), q(0, 1)] };
        let v = SurfaceVector { coords: vec![q(1, 3), q(0, 5)] };
        let w = SurfaceVector { coords: vec![q(2, 4), [0; 10]] };
        assert_eq!(conservative_triple_points(&[u.clone(), v.clone(), w], 2), 2 * 3 * 4);
        let w2 = SurfaceVector { coords: vec![q(1, 4), [0; 10]] };
        assert_eq!(conservative_triple_points(&[u.clone(), v.clone(), w2], 2), 0);
        assert_eq!(conservative_triple_points(&[u, v], 2), 0);
    }

    #[test]
    fn more_than_three_surfaces_is_unsupported() {
        let tri = fixture("one_tet.json");
        let z = SurfaceVector::zero(1);
        assert!(matches!(
            intersection_complexity(&tri, &[z.clone(), z.clone(), z.clone(), z.clone()]),
            Err(IntersectError::Unsupported(4))
        ));
    }

    #[test]
    fn parallel_curves_share_their_class() {
        // Doubling one side doubles each curve into parallel copies with
        // equal homology classes in the other (torus) side.
        let (tri, a, b) = three_tet_tori();
        let a2 = a.scaled(2);
        let r1 = intersection_complexity(&tri, &[a.clone(), b.clone()]).unwrap();
        let r2 = intersection_complexity(&tri, &[a2, b]).unwrap();
        assert_eq!(r2.double_curve_count, 2 * r1.double_curve_count);
        // classes of curves in b (surface index 1) come in equal pairs
        let mut classes: Vec<Option<(i64, i64)>> = r2
            .curves
            .iter()
            .map(|c| c.sides.iter().find(|s| s.surface == 1).unwrap().class)
            .collect();
        classes.sort();
        for pair in classes.chunks(2) {
            assert_eq!(pair[0], pair[1]);
        }
    }

    #[test]
    fn frozen_transverse_counts() {
        // Frozen after doubling/symmetry/parity cross-checks: the Klein
        // member u meets the torus b in one length-4 curve, essential of
        // class (1,-1) in b; its double meets b in two parallel copies.
        let (tri, a, b) = three_tet_tori();
        let u = vec_of(vec![
            [0, 0, 0, 0, 0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
        ]);
        let r1 = intersection_complexity(&tri, &[u, b.clone()]).unwrap();
        assert_eq!(r1.complexity, (0, 1));
        assert_eq!(r1.curves[0].length, 4);
        assert_eq!(curve_class(&r1.curves[0], 1).unwrap(), ((1, -1), true));
        let r2 = intersection_complexity(&tri, &[a, b]).unwrap();
        assert_eq!(r2.complexity, (0, 2));
        for c in &r2.curves {
            assert_eq!(curve_class(c, 1).unwrap(), ((1, -1), true));
        }
    }

    #[test]
    fn curve_classes_in_tori_are_defined_and_consistent() {
        let (tri, a, b) = three_tet_tori();
        let r = intersection_complexity(&tri, &[a, b]).unwrap();
        for c in &r.curves {
            for side in &c.sides {
                assert_eq!(side.component_kind, SurfaceKind::Torus);
                let (class, essential) = curve_class(c, side.surface).unwrap();
                assert_eq!(essential, class != (0, 0));
                assert_eq!(side.null_homologous, class == (0, 0));
                assert_eq!(side.meridian, "unknown");
            }
        }
    }
}
