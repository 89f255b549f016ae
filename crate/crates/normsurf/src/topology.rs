//! Cellular reconstruction of the surface a coordinate vector represents,
//! and classification of its components.
//!
//! Stacking convention: within a tetrahedron, parallel copies of each piece
//! type are ordered by distance to a reference corner.  Triangle copies nest
//! inside their vertex corner (level 0 innermost).  Quad copies are indexed
//! from the side of the vertex pairing that contains vertex 0.  When several
//! surfaces are positioned together, copies from an earlier surface sit
//! closer to the reference than copies from a later one, block by block.
//! This fixes every arc ordering on every face; arcs are glued slot by slot.

use crate::coords::{SurfaceVector, PAIRING_PARTNER};
use crate::tri::Triangulation;
use crate::coords;
use serde::Serialize;

/// A normal disk or almost-normal octagon type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PieceKind {
    /// Triangle linking the given vertex.
    Tri(usize),
    /// Quadrilateral of the given pairing type.
    Quad(usize),
    /// Octagon of the given pairing type.
    Oct(usize),
}

/// One cell of a carried surface: a copy of a piece type in a tetrahedron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Piece {
    pub tet: usize,
    pub kind: PieceKind,
    /// Copy index within (tet, kind).
    pub level: u64,
}

/// One boundary arc of a piece, as traversed in the piece's boundary cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryArc {
    /// Face of the tetrahedron the arc lies in.
    pub face: usize,
    /// Vertex the arc cuts off.
    pub cut: usize,
    /// Edge (vertex pair of the tetrahedron) holding the start corner.
    pub from_edge: (usize, usize),
    /// Edge holding the end corner.
    pub to_edge: (usize, usize),
}

/// An identification of two boundary arcs across a glued face pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ArcGluing {
    pub a: (usize, usize),
    pub b: (usize, usize),
    /// True when the two pieces traverse the shared arc in the same
    /// direction (an orientation flip for coherent orientations).
    pub flip: bool,
}

/// The cell complex of an admissible surface vector positioned under the
/// stacking convention.
#[derive(Clone, Debug)]
pub struct CarriedSurface {
    pub num_tets: usize,
    pub pieces: Vec<Piece>,
    pub boundaries: Vec<Vec<BoundaryArc>>,
    /// Arc identifications; both `(piece, arc-index)` sides.
    pub gluings: Vec<ArcGluing>,
    pub component_of: Vec<usize>,
    pub num_components: usize,
    /// Arc stacks per tetrahedron, indexed `4*face + cut`, ordered from the
    /// cut vertex outward.
    stacks: Vec<Vec<Vec<(usize, usize)>>>,
    /// Corner-class id per (piece, corner index), flattened.
    corner_class: Vec<Vec<usize>>,
    num_corner_classes: usize,
    /// Orientation sign per piece when its component is orientable.
    orientation: Vec<i8>,
    component_orientable: Vec<bool>,
}

fn sorted_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// The two pairs of pairing `k` as `(a, b, c, d)` with `{a,b}` the pair
/// containing vertex 0.
pub fn pairing_pairs(k: usize) -> (usize, usize, usize, usize) {
    let b = PAIRING_PARTNER[k][0];
    let mut rest = (1..4).filter(|&v| v != b);
    let c = rest.next().unwrap();
    let d = rest.next().unwrap();
    (0, b, c, d)
}

/// Boundary cycle of a piece kind, traversed in a fixed order.
pub fn boundary_cycle(kind: PieceKind) -> Vec<BoundaryArc> {
    match kind {
        PieceKind::Tri(v) => {
            let others: Vec<usize> = (0..4).filter(|&x| x != v).collect();
            let (p, q, r) = (others[0], others[1], others[2]);
            vec![
                BoundaryArc { face: r, cut: v, from_edge: (v, p), to_edge: (v, q) },
                BoundaryArc { face: p, cut: v, from_edge: (v, q), to_edge: (v, r) },
                BoundaryArc { face: q, cut: v, from_edge: (v, r), to_edge: (v, p) },
            ]
        }
        PieceKind::Quad(k) => {
            let (a, b, c, d) = pairing_pairs(k);
            vec![
                BoundaryArc { face: b, cut: a, from_edge: (a, c), to_edge: (a, d) },
                BoundaryArc { face: c, cut: d, from_edge: (a, d), to_edge: (b, d) },
                BoundaryArc { face: a, cut: b, from_edge: (b, d), to_edge: (b, c) },
                BoundaryArc { face: d, cut: c, from_edge: (b, c), to_edge: (a, c) },
            ]
        }
        PieceKind::Oct(k) => {
            let (a, b, c, d) = pairing_pairs(k);
            // Pair edges (a,b) and (c,d) are crossed twice; the crossing an
            // arc uses is the one nearer the arc's cut vertex.
            vec![
                BoundaryArc { face: c, cut: a, from_edge: (a, b), to_edge: (a, d) },
                BoundaryArc { face: b, cut: d, from_edge: (a, d), to_edge: (c, d) },
                BoundaryArc { face: a, cut: d, from_edge: (c, d), to_edge: (b, d) },
                BoundaryArc { face: c, cut: b, from_edge: (b, d), to_edge: (a, b) },
                BoundaryArc { face: d, cut: b, from_edge: (a, b), to_edge: (b, c) },
                BoundaryArc { face: a, cut: c, from_edge: (b, c), to_edge: (c, d) },
                BoundaryArc { face: b, cut: c, from_edge: (c, d), to_edge: (a, c) },
                BoundaryArc { face: d, cut: a, from_edge: (a, c), to_edge: (a, b) },
            ]
        }
    }
}

/// Sorting key of an arc slot within its (tet, face, cut-vertex) stack,
/// counted from the cut vertex outward.
fn stack_key(piece: &Piece, face: usize, cut: usize, vec: &SurfaceVector) -> (u8, u64) {
    match piece.kind {
        PieceKind::Tri(_) => (0, piece.level),
        PieceKind::Quad(k) => {
            // Copies are indexed from the pair containing vertex 0; the pair
            // being cut here is {face, cut}, so the order reverses on the
            // other side.
            let ascending = face == 0 || cut == 0;
            let n = vec.quad(piece.tet, k);
            let sub = if ascending { piece.level } else { n - 1 - piece.level };
            (1, sub)
        }
        PieceKind::Oct(_) => (1, piece.level),
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// A `(piece index, boundary-arc index)` slot.
pub type ArcSlot = (usize, usize);

/// Pieces, boundary cycles and sorted arc stacks of a vector, before any
/// gluing; shared by the closed reconstruction and the bounded complexes of
/// disk searches.
pub fn reconstruct_pieces_for(
    vec: &SurfaceVector,
) -> (Vec<Piece>, Vec<Vec<BoundaryArc>>, Vec<Vec<Vec<ArcSlot>>>) {
    let num_tets = vec.num_tets();
    let mut pieces = Vec::new();
    for t in 0..num_tets {
        for v in 0..4 {
            for level in 0..vec.tri(t, v) {
                pieces.push(Piece { tet: t, kind: PieceKind::Tri(v), level });
            }
        }
        for k in 0..3 {
            for level in 0..vec.quad(t, k) {
                pieces.push(Piece { tet: t, kind: PieceKind::Quad(k), level });
            }
            for level in 0..vec.oct(t, k) {
                pieces.push(Piece { tet: t, kind: PieceKind::Oct(k), level });
            }
        }
    }
    let boundaries: Vec<Vec<BoundaryArc>> =
        pieces.iter().map(|p| boundary_cycle(p.kind)).collect();
    let mut stacks: Vec<Vec<Vec<ArcSlot>>> = vec![vec![Vec::new(); 16]; num_tets];
    for (pi, piece) in pieces.iter().enumerate() {
        for (ai, arc) in boundaries[pi].iter().enumerate() {
            stacks[piece.tet][4 * arc.face + arc.cut].push((pi, ai));
        }
    }
    for (t, tet_stacks) in stacks.iter_mut().enumerate() {
        for f in 0..4 {
            for v in 0..4 {
                if v == f {
                    continue;
                }
                tet_stacks[4 * f + v]
                    .sort_by_key(|&(pi, _)| stack_key(&pieces[pi], f, v, vec));
                let _ = t;
            }
        }
    }
    (pieces, boundaries, stacks)
}

/// Reconstruct the cell complex of a single admissible vector.
pub fn reconstruct(tri: &Triangulation, vec: &SurfaceVector) -> CarriedSurface {
    let num_tets = tri.num_tets();
    let (pieces, boundaries, stacks) = reconstruct_pieces_for(vec);

    // Glue stacks slot by slot across each face pair.
    let mut gluings = Vec::new();
    for t in 0..num_tets {
        for f in 0..4 {
            let (tt, tf, p) = tri.gluing(t, f);
            if (t, f) > (tt, tf) {
                continue;
            }
            for v in 0..4 {
                if v == f {
                    continue;
                }
                let sa = &stacks[t][4 * f + v];
                let sb = &stacks[tt][4 * tf + p.apply(v)];
                assert_eq!(
                    sa.len(),
                    sb.len(),
                    "matching equations hold for admissible input"
                );
                for (&a, &b) in sa.iter().zip(sb) {
                    let arc_a = boundaries[a.0][a.1];
                    let arc_b = boundaries[b.0][b.1];
                    let image = sorted_pair(p.apply(arc_a.from_edge.0), p.apply(arc_a.from_edge.1));
                    let flip = if image == sorted_pair(arc_b.from_edge.0, arc_b.from_edge.1) {
                        true
                    } else {
                        debug_assert_eq!(
                            image,
                            sorted_pair(arc_b.to_edge.0, arc_b.to_edge.1)
                        );
                        false
                    };
                    gluings.push(ArcGluing { a, b, flip });
                }
            }
        }
    }

    // Components of the piece adjacency graph.
    let mut comp = DisjointSets::new(pieces.len());
    for g in &gluings {
        comp.union(g.a.0, g.b.0);
    }
    let mut component_of = vec![0usize; pieces.len()];
    let mut comp_ids = std::collections::BTreeMap::new();
    for i in 0..pieces.len() {
        let r = comp.find(i);
        let next = comp_ids.len();
        component_of[i] = *comp_ids.entry(r).or_insert(next);
    }
    let num_components = comp_ids.len();

    // Corner classes: identify matched arc endpoints.
    let corner_offsets: Vec<usize> = boundaries
        .iter()
        .scan(0usize, |acc, b| {
            let off = *acc;
            *acc += b.len();
            Some(off)
        })
        .collect();
    let total_corners: usize = boundaries.iter().map(|b| b.len()).sum();
    let mut corners = DisjointSets::new(total_corners);
    let corner_id = |pi: usize, ci: usize, boundaries: &Vec<Vec<BoundaryArc>>| {
        corner_offsets[pi] + ci % boundaries[pi].len()
    };
    for g in &gluings {
        let (pa, aa) = g.a;
        let (pb, ab) = g.b;
        if g.flip {
            // Same traversal direction: start matches start.
            corners.union(corner_id(pa, aa, &boundaries), corner_id(pb, ab, &boundaries));
            corners.union(corner_id(pa, aa + 1, &boundaries), corner_id(pb, ab + 1, &boundaries));
        } else {
            corners.union(corner_id(pa, aa, &boundaries), corner_id(pb, ab + 1, &boundaries));
            corners.union(corner_id(pa, aa + 1, &boundaries), corner_id(pb, ab, &boundaries));
        }
    }
    let mut corner_class = Vec::with_capacity(pieces.len());
    let mut class_ids = std::collections::BTreeMap::new();
    for (pi, b) in boundaries.iter().enumerate() {
        let mut row = Vec::with_capacity(b.len());
        for ci in 0..b.len() {
            let r = corners.find(corner_offsets[pi] + ci);
            let next = class_ids.len();
            row.push(*class_ids.entry(r).or_insert(next));
        }
        corner_class.push(row);
    }
    let num_corner_classes = class_ids.len();

    // Orientations: propagate signs over gluings; a conflict marks the whole
    // component non-orientable.
    let mut orientation = vec![0i8; pieces.len()];
    let mut component_orientable = vec![true; num_components];
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); pieces.len()];
    for g in &gluings {
        adj[g.a.0].push((g.b.0, g.flip));
        adj[g.b.0].push((g.a.0, g.flip));
    }
    for start in 0..pieces.len() {
        if orientation[start] != 0 {
            continue;
        }
        orientation[start] = 1;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &(q, flip) in &adj[p] {
                let want = if flip { -orientation[p] } else { orientation[p] };
                if orientation[q] == 0 {
                    orientation[q] = want;
                    queue.push_back(q);
                } else if orientation[q] != want {
                    component_orientable[component_of[p]] = false;
                }
            }
        }
    }

    CarriedSurface {
        num_tets,
        pieces,
        boundaries,
        gluings,
        component_of,
        num_components,
        stacks,
        corner_class,
        num_corner_classes,
        orientation,
        component_orientable,
    }
}

impl CarriedSurface {
    /// The arcs of type (face, cut vertex) in a tetrahedron, ordered from the
    /// cut vertex outward.
    pub fn arc_stack(&self, t: usize, f: usize, v: usize) -> &[(usize, usize)] {
        &self.stacks[t][4 * f + v]
    }

    /// Corner-class id of a (piece, corner index).
    pub fn corner_class(&self, piece: usize, corner: usize) -> usize {
        self.corner_class[piece][corner % self.boundaries[piece].len()]
    }

    /// Cellular Euler characteristic of the whole complex.
    pub fn euler(&self) -> i64 {
        self.num_corner_classes as i64 - self.gluings.len() as i64 + self.pieces.len() as i64
    }

    /// Cellular Euler characteristic of one component.
    pub fn euler_of_component(&self, c: usize) -> i64 {
        let f = self.component_of.iter().filter(|&&x| x == c).count() as i64;
        let e = self
            .gluings
            .iter()
            .filter(|g| self.component_of[g.a.0] == c)
            .count() as i64;
        let mut seen = std::collections::BTreeSet::new();
        for (pi, row) in self.corner_class.iter().enumerate() {
            if self.component_of[pi] == c {
                seen.extend(row.iter().copied());
            }
        }
        seen.len() as i64 - e + f
    }

    pub fn component_orientable(&self, c: usize) -> bool {
        self.component_orientable[c]
    }

    /// Orientation sign of a piece (meaningful when its component is
    /// orientable).
    pub fn orientation(&self, piece: usize) -> i8 {
        self.orientation[piece]
    }

    /// The coordinate vector of one component.
    pub fn component_vector(&self, c: usize) -> SurfaceVector {
        let mut v = SurfaceVector::zero(self.num_tets);
        for (pi, piece) in self.pieces.iter().enumerate() {
            if self.component_of[pi] != c {
                continue;
            }
            let row = &mut v.coords[piece.tet];
            match piece.kind {
                PieceKind::Tri(x) => row[x] += 1,
                PieceKind::Quad(k) => row[4 + k] += 1,
                PieceKind::Oct(k) => row[7 + k] += 1,
            }
        }
        v
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

/// Coarse classification of a closed component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "param")]
pub enum SurfaceKind {
    Sphere,
    Torus,
    /// Closed orientable of the given genus >= 2.
    HigherGenus(u64),
    /// Non-orientable with the given cross-cap number.
    NonOrientable(u64),
}

/// Classification record for one component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentReport {
    pub euler: i64,
    pub orientable: bool,
    /// Genus for closed orientable components, cross-cap count otherwise.
    pub genus: u64,
    pub kind: SurfaceKind,
    pub is_vertex_linking: bool,
    pub has_octagon: bool,
}

/// Classify every component of a reconstructed surface.
pub fn classify_components(tri: &Triangulation, surface: &CarriedSurface) -> Vec<ComponentReport> {
    let links = coords::vertex_links(tri);
    (0..surface.num_components)
        .map(|c| {
            let chi = surface.euler_of_component(c);
            let orientable = surface.component_orientable(c);
            let vecc = surface.component_vector(c);
            let has_octagon = vecc.oct_total() > 0;
            let (genus, kind) = if orientable {
                let g = ((2 - chi) / 2) as u64;
                let kind = match chi {
                    2 => SurfaceKind::Sphere,
                    0 => SurfaceKind::Torus,
                    _ => SurfaceKind::HigherGenus(g),
                };
                (g, kind)
            } else {
                let k = (2 - chi) as u64;
                (k, SurfaceKind::NonOrientable(k))
            };
            ComponentReport {
                euler: chi,
                orientable,
                genus,
                kind,
                is_vertex_linking: links.contains(&vecc),
                has_octagon,
            }
        })
        .collect()
}

/// Convenience: classify a vector directly.
pub fn classify_vector(tri: &Triangulation, vec: &SurfaceVector) -> Vec<ComponentReport> {
    classify_components(tri, &reconstruct(tri, vec))
}

/// True when the triangulation's only admissible sphere among the given
/// vectors is vertex-linking; used by the sphere census.
pub fn sphere_census(tri: &Triangulation, vecs: &[SurfaceVector]) -> Vec<(SurfaceVector, bool)> {
    let mut out = Vec::new();
    for v in vecs {
        let reports = classify_vector(tri, v);
        if reports.iter().any(|r| r.kind == SurfaceKind::Sphere) {
            let vertex_linking = reports.iter().all(|r| r.is_vertex_linking);
            out.push((v.clone(), vertex_linking));
        }
    }
    out
}

/// Sanity hook used by tests and tools: checks that the traversal of tri
/// orbits around every corner class is consistent (every arc slot matched).
pub fn _complex_is_closed(surface: &CarriedSurface) -> bool {
    let total: usize = surface.boundaries.iter().map(|b| b.len()).sum();
    2 * surface.gluings.len() == total
}
