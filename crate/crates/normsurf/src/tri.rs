//! Gluing tables of closed orientable triangulations and their skeletal
//! structure (vertex/edge orbits, face pairs).
//!
//! Conventions: face `k` of a tetrahedron is the face opposite vertex `k`;
//! a gluing permutation stores the images of vertices `0..3` of the source
//! tetrahedron inside the target tetrahedron.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// A permutation of the vertex labels `{0,1,2,3}`, stored as images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Perm(pub [u8; 4]);

impl Perm {
    pub const IDENTITY: Perm = Perm([0, 1, 2, 3]);

    pub fn is_bijection(&self) -> bool {
        let mut seen = [false; 4];
        for &i in &self.0 {
            if i > 3 || seen[i as usize] {
                return false;
            }
            seen[i as usize] = true;
        }
        true
    }

    pub fn apply(&self, v: usize) -> usize {
        self.0[v] as usize
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = [0u8; 4];
        for (i, &img) in self.0.iter().enumerate() {
            inv[img as usize] = i as u8;
        }
        Perm(inv)
    }

    /// Parity: `true` for odd permutations.
    pub fn is_odd(&self) -> bool {
        let mut inversions = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if self.0[i] > self.0[j] {
                    inversions += 1;
                }
            }
        }
        inversions % 2 == 1
    }
}

/// One record of the gluing table: face `face` of `tet` is glued to face
/// `to_face` of `to_tet` via `perm`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gluing {
    pub tet: usize,
    pub face: usize,
    pub to_tet: usize,
    pub to_face: usize,
    pub perm: Perm,
}

/// Triangulation File Format document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriangulationDoc {
    pub tets: usize,
    pub gluings: Vec<Gluing>,
}

#[derive(Debug, Error)]
pub enum TriError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("gluing error: {0}")]
    Gluing(String),
}

/// A validated gluing table of a closed triangulation.
///
/// Immutable after construction; safe to share across workers.
#[derive(Clone, Debug)]
pub struct Triangulation {
    num_tets: usize,
    /// `glue[t][f] = (to_tet, to_face, perm)` for every face.
    glue: Vec<[(usize, usize, Perm); 4]>,
    records: Vec<Gluing>,
}

/// Vertex and edge orbits plus the matched face pairs of a triangulation.
#[derive(Clone, Debug)]
pub struct Skeleton {
    /// One entry per (tet, vertex) corner: the orbit id it belongs to.
    pub vertex_orbit: Vec<[usize; 4]>,
    pub num_vertex_orbits: usize,
    /// One entry per (tet, edge 0..5): (orbit id, sign relative to the orbit
    /// representative's orientation; +1 or -1).
    pub edge_orbit: Vec<[(usize, i8); 6]>,
    pub num_edge_orbits: usize,
    /// Each glued face pair once, keyed by its lexicographically smaller side.
    pub face_pairs: Vec<((usize, usize), (usize, usize))>,
}

/// Edge `0..5` of a tetrahedron as an ordered vertex pair `(a, b)`, `a < b`.
pub const EDGE_ENDS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Index of the edge joining two distinct vertices.
pub fn edge_index(a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    EDGE_ENDS.iter().position(|&e| e == (a, b)).expect("distinct vertices")
}

struct UnionFind {
    parent: Vec<usize>,
    /// Sign of the element relative to its root (for edge orientations).
    sign: Vec<i8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), sign: vec![1; n] }
    }

    fn find(&mut self, x: usize) -> (usize, i8) {
        if self.parent[x] == x {
            return (x, 1);
        }
        let (root, s) = self.find(self.parent[x]);
        self.parent[x] = root;
        self.sign[x] *= s;
        (root, self.sign[x])
    }

    /// Unites `x` and `y` with relative sign `s` (sign(x) = s * sign(y)).
    /// Returns false on a sign conflict.
    fn union(&mut self, x: usize, y: usize, s: i8) -> bool {
        let (rx, sx) = self.find(x);
        let (ry, sy) = self.find(y);
        if rx == ry {
            return sx == s * sy;
        }
        self.parent[rx] = ry;
        self.sign[rx] = sx * s * sy;
        true
    }
}

/// Parse and validate a Triangulation File Format document.
pub fn parse_triangulation(text: &str) -> Result<Triangulation, TriError> {
    let doc: TriangulationDoc =
        serde_json::from_str(text).map_err(|e| TriError::Parse(e.to_string()))?;
    Triangulation::from_document(&doc)
}

impl Triangulation {
    pub fn from_document(doc: &TriangulationDoc) -> Result<Triangulation, TriError> {
        if doc.tets == 0 {
            return Err(TriError::Parse("triangulation has no tetrahedra".into()));
        }
        if doc.gluings.len() != 2 * doc.tets {
            return Err(TriError::Gluing(format!(
                "expected {} gluing records for a closed triangulation, found {}",
                2 * doc.tets,
                doc.gluings.len()
            )));
        }
        let mut glue: Vec<[Option<(usize, usize, Perm)>; 4]> = vec![[None; 4]; doc.tets];
        let mut set = |t: usize, f: usize, tt: usize, tf: usize, p: Perm| -> Result<(), TriError> {
            if t >= doc.tets || f > 3 {
                return Err(TriError::Gluing(format!("face ({t},{f}) out of range")));
            }
            if glue[t][f].is_some() {
                return Err(TriError::Gluing(format!("face ({t},{f}) appears in two gluings")));
            }
            glue[t][f] = Some((tt, tf, p));
            Ok(())
        };
        for g in &doc.gluings {
            if !g.perm.is_bijection() {
                return Err(TriError::Gluing(format!(
                    "gluing ({},{}): perm {:?} is not a bijection",
                    g.tet, g.face, g.perm.0
                )));
            }
            if g.to_tet >= doc.tets || g.to_face > 3 {
                return Err(TriError::Gluing(format!(
                    "gluing ({},{}): target ({},{}) out of range",
                    g.tet, g.face, g.to_tet, g.to_face
                )));
            }
            if g.perm.apply(g.face) != g.to_face {
                return Err(TriError::Gluing(format!(
                    "gluing ({},{}): perm does not map face {} onto face {}",
                    g.tet, g.face, g.face, g.to_face
                )));
            }
            if (g.tet, g.face) == (g.to_tet, g.to_face) {
                return Err(TriError::Gluing(format!(
                    "face ({},{}) glued to itself",
                    g.tet, g.face
                )));
            }
            set(g.tet, g.face, g.to_tet, g.to_face, g.perm)?;
            set(g.to_tet, g.to_face, g.tet, g.face, g.perm.inverse())?;
        }
        let mut full = Vec::with_capacity(doc.tets);
        for (t, faces) in glue.iter().enumerate() {
            let mut row = [(0usize, 0usize, Perm::IDENTITY); 4];
            for (f, entry) in faces.iter().enumerate() {
                row[f] = entry.ok_or_else(|| {
                    TriError::Gluing(format!("face ({t},{f}) is unglued; triangulation not closed"))
                })?;
            }
            full.push(row);
        }
        let tri = Triangulation { num_tets: doc.tets, glue: full, records: doc.gluings.clone() };
        // Involution consistency of the full table.
        for t in 0..tri.num_tets {
            for f in 0..4 {
                let (tt, tf, p) = tri.glue[t][f];
                let (bt, bf, q) = tri.glue[tt][tf];
                if (bt, bf) != (t, f) || q != p.inverse() {
                    return Err(TriError::Gluing(format!(
                        "gluing at ({t},{f}) is not an involution"
                    )));
                }
            }
        }
        // Reject edges identified with themselves in reverse, and non-sphere
        // vertex links (V - E + F - T = 0 characterises closed manifolds once
        // the edges are valid).
        let skel = tri.skeleton_checked()?;
        let v = skel.num_vertex_orbits as i64;
        let e = skel.num_edge_orbits as i64;
        let f = skel.face_pairs.len() as i64;
        let t = tri.num_tets as i64;
        if v - e + f - t != 0 {
            return Err(TriError::Gluing(format!(
                "V - E + F - T = {} != 0: not a closed 3-manifold triangulation",
                v - e + f - t
            )));
        }
        Ok(tri)
    }

    pub fn num_tets(&self) -> usize {
        self.num_tets
    }

    /// The gluing partner of face `f` of tet `t`.
    pub fn gluing(&self, t: usize, f: usize) -> (usize, usize, Perm) {
        self.glue[t][f]
    }

    /// The document with gluing records sorted canonically (each pair listed
    /// once, keyed by its smaller side).
    pub fn to_document(&self) -> TriangulationDoc {
        let mut gluings = Vec::new();
        for t in 0..self.num_tets {
            for f in 0..4 {
                let (tt, tf, p) = self.glue[t][f];
                if (t, f) <= (tt, tf) {
                    gluings.push(Gluing { tet: t, face: f, to_tet: tt, to_face: tf, perm: p });
                }
            }
        }
        TriangulationDoc { tets: self.num_tets, gluings }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("serializable")
    }

    /// The raw records as given in the source document.
    pub fn records(&self) -> &[Gluing] {
        &self.records
    }

    fn skeleton_checked(&self) -> Result<Skeleton, TriError> {
        // Vertex orbits: close (t, v) ~ (t', perm(v)) over gluings, for the
        // three vertices on each glued face.
        let n = self.num_tets;
        let mut vuf = UnionFind::new(4 * n);
        let mut euf = UnionFind::new(6 * n);
        for t in 0..n {
            for f in 0..4 {
                let (tt, tf, p) = self.glue[t][f];
                let _ = tf;
                for v in 0..4 {
                    if v == f {
                        continue;
                    }
                    vuf.union(4 * t + v, 4 * tt + p.apply(v), 1);
                }
                for (ei, &(a, b)) in EDGE_ENDS.iter().enumerate() {
                    if a == f || b == f {
                        continue;
                    }
                    let (ia, ib) = (p.apply(a), p.apply(b));
                    let sign = if ia < ib { 1 } else { -1 };
                    let ej = edge_index(ia, ib);
                    if !euf.union(6 * t + ei, 6 * tt + ej, sign) {
                        return Err(TriError::Gluing(format!(
                            "edge {:?} of tet {t} is identified with itself in reverse",
                            EDGE_ENDS[ei]
                        )));
                    }
                }
            }
        }
        let mut vertex_orbit = vec![[0usize; 4]; n];
        let mut vmap = BTreeMap::new();
        for t in 0..n {
            for v in 0..4 {
                let (root, _) = vuf.find(4 * t + v);
                let next = vmap.len();
                let id = *vmap.entry(root).or_insert(next);
                vertex_orbit[t][v] = id;
            }
        }
        let mut edge_orbit = vec![[(0usize, 1i8); 6]; n];
        let mut emap = BTreeMap::new();
        for t in 0..n {
            for e in 0..6 {
                let (root, s) = euf.find(6 * t + e);
                let next = emap.len();
                let id = *emap.entry(root).or_insert(next);
                edge_orbit[t][e] = (id, s);
            }
        }
        let mut face_pairs = Vec::new();
        for t in 0..n {
            for f in 0..4 {
                let (tt, tf, _) = self.glue[t][f];
                if (t, f) <= (tt, tf) {
                    face_pairs.push(((t, f), (tt, tf)));
                }
            }
        }
        Ok(Skeleton {
            vertex_orbit,
            num_vertex_orbits: vmap.len(),
            edge_orbit,
            num_edge_orbits: emap.len(),
            face_pairs,
        })
    }
}

/// Derive vertex/edge orbits and face pairs by closing the corner and edge
/// identifications under the gluing maps.
pub fn compute_skeleton(tri: &Triangulation) -> Skeleton {
    tri.skeleton_checked().expect("validated triangulation")
}

/// Decide orientability by 2-colouring tetrahedra under the parity
/// constraints of the gluing permutations.
pub fn is_orientable(tri: &Triangulation) -> bool {
    // sign(t) * sign(t') must equal -sgn(perm) across every gluing.
    let n = tri.num_tets();
    let mut color = vec![0i8; n];
    let mut stack = vec![0usize];
    color[0] = 1;
    while let Some(t) = stack.pop() {
        for f in 0..4 {
            let (tt, _, p) = tri.gluing(t, f);
            let want = if p.is_odd() { color[t] } else { -color[t] };
            if color[tt] == 0 {
                color[tt] = want;
                stack.push(tt);
            } else if color[tt] != want {
                return false;
            }
        }
    }
    // Gluing tables of closed triangulations are connected in practice, but
    // handle stray components the same way.
    for t in 0..n {
        if color[t] == 0 {
            color[t] = 1;
            stack.push(t);
            while let Some(s) = stack.pop() {
                for f in 0..4 {
                    let (tt, _, p) = tri.gluing(s, f);
                    let want = if p.is_odd() { color[s] } else { -color[s] };
                    if color[tt] == 0 {
                        color[tt] = want;
                        stack.push(tt);
                    } else if color[tt] != want {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn is_one_vertex(tri: &Triangulation) -> bool {
    compute_skeleton(tri).num_vertex_orbits == 1
}
