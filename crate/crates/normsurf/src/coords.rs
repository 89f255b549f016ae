//! Normal and almost-normal coordinate vectors, matching equations,
//! admissibility, vertex links, weight and Haken sums.
//!
//! Per tetrahedron the ten coordinates are ordered
//! `[t0,t1,t2,t3, q0,q1,q2, o0,o1,o2]`: four triangle types linking a vertex,
//! three quadrilateral types indexed by the vertex pairing they induce
//! (`0: {0,1}|{2,3}`, `1: {0,2}|{1,3}`, `2: {0,3}|{1,2}`), and three octagon
//! types indexed like quads.  An octagon of type `k` meets each face in two
//! normal arcs, of the two arc types other than the one the quad of type `k`
//! would give; this incidence table drives the matching equations below.

use crate::tri::{compute_skeleton, Triangulation, EDGE_ENDS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `PAIRING_PARTNER[k][v]` is the vertex paired with `v` under pairing `k`.
pub const PAIRING_PARTNER: [[usize; 4]; 3] =
    [[1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];

/// The pairing index that puts `a` and `b` in the same pair.
pub fn pairing_of(a: usize, b: usize) -> usize {
    (0..3).find(|&k| PAIRING_PARTNER[k][a] == b).expect("distinct vertices")
}

pub const COORDS_PER_TET: usize = 10;

#[derive(Debug, Error)]
pub enum CoordError {
    #[error("dimension mismatch: vector has {got} tetrahedra, system expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("triangulation has {0} vertices, not one")]
    NotOneVertex(usize),
    #[error("incompatible summands in tetrahedron {tet}: {reason}")]
    IncompatibleSummands { tet: usize, reason: String },
}

/// Exact non-negative integer normal/almost-normal coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SurfaceVector {
    /// One row of ten coordinates per tetrahedron.
    pub coords: Vec<[u64; COORDS_PER_TET]>,
}

impl SurfaceVector {
    pub fn zero(num_tets: usize) -> SurfaceVector {
        SurfaceVector { coords: vec![[0; COORDS_PER_TET]; num_tets] }
    }

    pub fn num_tets(&self) -> usize {
        self.coords.len()
    }

    pub fn tri(&self, t: usize, v: usize) -> u64 {
        self.coords[t][v]
    }

    pub fn quad(&self, t: usize, k: usize) -> u64 {
        self.coords[t][4 + k]
    }

    pub fn oct(&self, t: usize, k: usize) -> u64 {
        self.coords[t][7 + k]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.iter().all(|&x| x == 0))
    }

    /// Total octagon coordinate over all tetrahedra.
    pub fn oct_total(&self) -> u64 {
        self.coords.iter().map(|c| c[7] + c[8] + c[9]).sum()
    }

    /// Count of arcs of type (face `f`, cutting off vertex `v`) contributed
    /// from tetrahedron `t`'s side.
    pub fn arc_count(&self, t: usize, f: usize, v: usize) -> u64 {
        debug_assert_ne!(f, v);
        let k = pairing_of(f, v);
        let c = &self.coords[t];
        let oct: u64 = (0..3).filter(|&j| j != k).map(|j| c[7 + j]).sum();
        c[v] + c[4 + k] + oct
    }

    /// Number of times the pieces in tetrahedron `t` cross edge `{a,b}`.
    pub fn edge_crossings(&self, t: usize, a: usize, b: usize) -> u64 {
        let c = &self.coords[t];
        let mut n = c[a] + c[b];
        for k in 0..3 {
            if PAIRING_PARTNER[k][a] != b {
                n += c[4 + k]; // quad separates a from b
                n += c[7 + k];
            } else {
                n += 2 * c[7 + k]; // octagon crosses its pair edges twice
            }
        }
        n
    }

    /// The mid (quad or oct) type carried in tetrahedron `t`, if any.
    /// `(kind, pairing, count)` with kind 0 = quad, 1 = oct.
    pub fn mid_type(&self, t: usize) -> Option<(u8, usize, u64)> {
        let c = &self.coords[t];
        for k in 0..3 {
            if c[4 + k] > 0 {
                return Some((0, k, c[4 + k]));
            }
            if c[7 + k] > 0 {
                return Some((1, k, c[7 + k]));
            }
        }
        None
    }

    pub fn checked_add(&self, other: &SurfaceVector) -> Option<SurfaceVector> {
        if self.num_tets() != other.num_tets() {
            return None;
        }
        let mut out = self.clone();
        for (row, orow) in out.coords.iter_mut().zip(&other.coords) {
            for (x, y) in row.iter_mut().zip(orow) {
                *x += y;
            }
        }
        Some(out)
    }

    /// Componentwise difference; `None` if any coordinate would go negative.
    pub fn checked_sub(&self, other: &SurfaceVector) -> Option<SurfaceVector> {
        if self.num_tets() != other.num_tets() {
            return None;
        }
        let mut out = self.clone();
        for (row, orow) in out.coords.iter_mut().zip(&other.coords) {
            for (x, y) in row.iter_mut().zip(orow) {
                *x = x.checked_sub(*y)?;
            }
        }
        Some(out)
    }

    pub fn scaled(&self, c: u64) -> SurfaceVector {
        let mut out = self.clone();
        for row in out.coords.iter_mut() {
            for x in row.iter_mut() {
                *x *= c;
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<SurfaceVector, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Sum of all coordinates.
pub fn weight(vec: &SurfaceVector) -> u64 {
    vec.coords.iter().map(|c| c.iter().sum::<u64>()).sum()
}

/// One matching-equation row: arc counts agree across a glued face pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingRow {
    /// Positive side: (tet, face, cut vertex).
    pub pos: (usize, usize, usize),
    /// Negative side: (tet, face, cut vertex).
    pub neg: (usize, usize, usize),
}

/// The 6T-row integer system forcing normal-arc counts to agree across glued
/// faces.  Three rows per glued face pair, one per arc type.
#[derive(Clone, Debug)]
pub struct MatchingSystem {
    pub num_tets: usize,
    pub rows: Vec<MatchingRow>,
}

impl MatchingSystem {
    /// Evaluate a row on a vector: positive-side count minus negative-side.
    pub fn eval_row(&self, row: &MatchingRow, vec: &SurfaceVector) -> i64 {
        let (t, f, v) = row.pos;
        let (tt, tf, tv) = row.neg;
        vec.arc_count(t, f, v) as i64 - vec.arc_count(tt, tf, tv) as i64
    }

    /// The row as a dense coefficient vector over the 10T coordinates.
    pub fn row_coefficients(&self, row: &MatchingRow) -> Vec<i64> {
        let mut out = vec![0i64; COORDS_PER_TET * self.num_tets];
        let mut add = |(t, f, v): (usize, usize, usize), sign: i64| {
            let base = COORDS_PER_TET * t;
            out[base + v] += sign;
            let k = pairing_of(f, v);
            out[base + 4 + k] += sign;
            for j in 0..3 {
                if j != k {
                    out[base + 7 + j] += sign;
                }
            }
        };
        add(row.pos, 1);
        add(row.neg, -1);
        out
    }
}

/// Build the matching system of a triangulation.
pub fn matching_system(tri: &Triangulation) -> MatchingSystem {
    let mut rows = Vec::with_capacity(6 * tri.num_tets());
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
                rows.push(MatchingRow { pos: (t, f, v), neg: (tt, tf, p.apply(v)) });
            }
        }
    }
    MatchingSystem { num_tets: tri.num_tets(), rows }
}

/// Why a vector fails admissibility.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum AdmissibilityViolation {
    /// A matching row is violated; carries the row's defining data and the
    /// residual value.
    Matching { pos: (usize, usize, usize), neg: (usize, usize, usize), residual: i64 },
    /// Two distinct quad/oct types are present in one tetrahedron.
    MixedTypes { tet: usize },
    /// Total octagon coordinate exceeds one.
    OctTotal { total: u64 },
}

/// Full admissibility check with a violation report.
pub fn check_admissible(
    vec: &SurfaceVector,
    sys: &MatchingSystem,
) -> Result<Result<(), AdmissibilityViolation>, CoordError> {
    if vec.num_tets() != sys.num_tets {
        return Err(CoordError::DimensionMismatch { got: vec.num_tets(), want: sys.num_tets });
    }
    for t in 0..vec.num_tets() {
        let c = &vec.coords[t];
        let nonzero_mids = (0..6).filter(|&i| c[4 + i] > 0).count();
        if nonzero_mids > 1 {
            return Ok(Err(AdmissibilityViolation::MixedTypes { tet: t }));
        }
    }
    let oct = vec.oct_total();
    if oct > 1 {
        return Ok(Err(AdmissibilityViolation::OctTotal { total: oct }));
    }
    for row in &sys.rows {
        let r = sys.eval_row(row, vec);
        if r != 0 {
            return Ok(Err(AdmissibilityViolation::Matching {
                pos: row.pos,
                neg: row.neg,
                residual: r,
            }));
        }
    }
    Ok(Ok(()))
}

/// True iff the matching equations, the one-type-per-tetrahedron constraint
/// and the octagon-total constraint all hold.
pub fn is_admissible(vec: &SurfaceVector, sys: &MatchingSystem) -> bool {
    matches!(check_admissible(vec, sys), Ok(Ok(())))
}

/// The vertex-linking surface of a one-vertex triangulation: every triangle
/// coordinate 1, everything else 0.
pub fn vertex_link(tri: &Triangulation) -> Result<SurfaceVector, CoordError> {
    let skel = compute_skeleton(tri);
    if skel.num_vertex_orbits != 1 {
        return Err(CoordError::NotOneVertex(skel.num_vertex_orbits));
    }
    let mut v = SurfaceVector::zero(tri.num_tets());
    for row in v.coords.iter_mut() {
        row[..4].fill(1);
    }
    Ok(v)
}

/// Per-vertex-orbit links, for triangulations with any number of vertices.
pub fn vertex_links(tri: &Triangulation) -> Vec<SurfaceVector> {
    let skel = compute_skeleton(tri);
    let mut out = vec![SurfaceVector::zero(tri.num_tets()); skel.num_vertex_orbits];
    for t in 0..tri.num_tets() {
        for v in 0..4 {
            out[skel.vertex_orbit[t][v]].coords[t][v] = 1;
        }
    }
    out
}

/// Coordinate-wise Haken sum of two admissible vectors.  Fails when the sum
/// would violate admissibility, naming the offending tetrahedron.
pub fn haken_sum(
    v1: &SurfaceVector,
    v2: &SurfaceVector,
) -> Result<SurfaceVector, CoordError> {
    if v1.num_tets() != v2.num_tets() {
        return Err(CoordError::DimensionMismatch { got: v2.num_tets(), want: v1.num_tets() });
    }
    let sum = v1.checked_add(v2).expect("same dimensions");
    for t in 0..sum.num_tets() {
        let c = &sum.coords[t];
        let nonzero_mids = (0..6).filter(|&i| c[4 + i] > 0).count();
        if nonzero_mids > 1 {
            return Err(CoordError::IncompatibleSummands {
                tet: t,
                reason: "distinct quad/oct types meet in this tetrahedron".into(),
            });
        }
    }
    if sum.oct_total() > 1 {
        return Err(CoordError::IncompatibleSummands {
            tet: sum
                .coords
                .iter()
                .position(|c| c[7] + c[8] + c[9] > 0)
                .unwrap_or(0),
            reason: format!("total octagon coordinate {} exceeds one", sum.oct_total()),
        });
    }
    Ok(sum)
}

/// The linear Euler functional: points on edge orbits minus arcs on face
/// pairs plus pieces.  Agrees with the cellular Euler characteristic of the
/// reconstructed surface on every admissible vector.
pub fn euler_linear(tri: &Triangulation, vec: &SurfaceVector) -> i64 {
    let skel = compute_skeleton(tri);
    let mut rep: Vec<Option<(usize, usize)>> = vec![None; skel.num_edge_orbits];
    for t in 0..tri.num_tets() {
        for e in 0..6 {
            let (orbit, _) = skel.edge_orbit[t][e];
            rep[orbit].get_or_insert((t, e));
        }
    }
    let points: i64 = rep
        .iter()
        .map(|r| {
            let (t, e) = r.expect("orbit nonempty");
            let (a, b) = EDGE_ENDS[e];
            vec.edge_crossings(t, a, b) as i64
        })
        .sum();
    let arcs: i64 = skel
        .face_pairs
        .iter()
        .map(|&((t, f), _)| (0..4).filter(|&v| v != f).map(|v| vec.arc_count(t, f, v) as i64).sum::<i64>())
        .sum();
    points - arcs + weight(vec) as i64
}
