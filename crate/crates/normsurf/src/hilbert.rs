//! Exact enumeration of the admissible solution cone: vertex solutions,
//! fundamental (Hilbert-basis) solutions, and decomposition over them.
//!
//! The admissible set is a union of faces, one per choice of at most one
//! quad/oct type per tetrahedron (with at most one octagon-carrying
//! tetrahedron).  Each maximal face is a pointed rational cone; extreme rays
//! come from the double description method over arbitrary-precision
//! integers, and the Hilbert basis from lattice points inside the zonotope
//! spanned by the extreme rays, filtered to minimal elements.  Results are
//! merged over faces and canonically sorted, so output is identical for any
//! worker count.

use crate::coords::{
    is_admissible, MatchingSystem, SurfaceVector, COORDS_PER_TET, PAIRING_PARTNER,
};
use crate::topology::{classify_vector, SurfaceKind};
use crate::tri::Triangulation;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("vector does not decompose over the fundamental set")]
    NotDecomposable,
}

/// Resource caps; enumeration fails hard rather than truncating silently.
#[derive(Clone, Copy, Debug)]
pub struct EnumLimits {
    /// Cap on intermediate ray count in the double description sweep.
    pub max_rays: usize,
    /// Cap on the total weight of the zonotope bounding box per face.
    pub max_box_weight: u64,
}

impl Default for EnumLimits {
    fn default() -> Self {
        EnumLimits { max_rays: 100_000, max_box_weight: 100_000 }
    }
}

/// Which kind of mid piece a support allows in a tetrahedron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum MidKind {
    Quad,
    Oct,
}

/// A support face: per tetrahedron, any subset of triangle types plus at
/// most one quad-or-oct type; at most one octagon-carrying tetrahedron.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupportFace {
    pub tris: Vec<[bool; 4]>,
    pub mid: Vec<Option<(MidKind, usize)>>,
}

impl SupportFace {
    pub fn num_tets(&self) -> usize {
        self.tris.len()
    }

    /// The support of an admissible vector.
    pub fn of_vector(vec: &SurfaceVector) -> SupportFace {
        let mut tris = Vec::with_capacity(vec.num_tets());
        let mut mid = Vec::with_capacity(vec.num_tets());
        for t in 0..vec.num_tets() {
            tris.push([
                vec.tri(t, 0) > 0,
                vec.tri(t, 1) > 0,
                vec.tri(t, 2) > 0,
                vec.tri(t, 3) > 0,
            ]);
            mid.push(vec.mid_type(t).map(|(kind, k, _)| {
                (if kind == 0 { MidKind::Quad } else { MidKind::Oct }, k)
            }));
        }
        SupportFace { tris, mid }
    }

    /// All triangles allowed, mids as given.
    pub fn with_mids(mids: Vec<Option<(MidKind, usize)>>) -> SupportFace {
        SupportFace { tris: vec![[true; 4]; mids.len()], mid: mids }
    }

    pub fn oct_tets(&self) -> usize {
        self.mid.iter().filter(|m| matches!(m, Some((MidKind::Oct, _)))).count()
    }

    /// True when `vec`'s support is contained in this face.
    pub fn contains(&self, vec: &SurfaceVector) -> bool {
        if vec.num_tets() != self.num_tets() {
            return false;
        }
        for t in 0..vec.num_tets() {
            for v in 0..4 {
                if vec.tri(t, v) > 0 && !self.tris[t][v] {
                    return false;
                }
            }
            for k in 0..3 {
                if vec.quad(t, k) > 0 && self.mid[t] != Some((MidKind::Quad, k)) {
                    return false;
                }
                if vec.oct(t, k) > 0 && self.mid[t] != Some((MidKind::Oct, k)) {
                    return false;
                }
            }
        }
        true
    }

    /// Columns of the 10T coordinate system this face allows, in order.
    fn columns(&self) -> Vec<usize> {
        let mut cols = Vec::new();
        for t in 0..self.num_tets() {
            for v in 0..4 {
                if self.tris[t][v] {
                    cols.push(COORDS_PER_TET * t + v);
                }
            }
            match self.mid[t] {
                Some((MidKind::Quad, k)) => cols.push(COORDS_PER_TET * t + 4 + k),
                Some((MidKind::Oct, k)) => cols.push(COORDS_PER_TET * t + 7 + k),
                None => {}
            }
        }
        cols
    }
}

/// Enumerate the maximal support faces: one quad type per tetrahedron, or
/// exactly one octagon-carrying tetrahedron and quads elsewhere.
pub fn maximal_support_faces(num_tets: usize) -> Vec<SupportFace> {
    let mut faces = Vec::new();
    let mut mids = vec![0usize; num_tets];
    loop {
        faces.push(SupportFace::with_mids(
            mids.iter().map(|&k| Some((MidKind::Quad, k))).collect(),
        ));
        for oct_tet in 0..num_tets {
            for oct_k in 0..3 {
                let assign: Vec<Option<(MidKind, usize)>> = (0..num_tets)
                    .map(|t| {
                        if t == oct_tet {
                            Some((MidKind::Oct, oct_k))
                        } else {
                            Some((MidKind::Quad, mids[t]))
                        }
                    })
                    .collect();
                // The octagon tet's quad choice is immaterial; emit once.
                if mids[oct_tet] == 0 {
                    faces.push(SupportFace::with_mids(assign));
                }
            }
        }
        // odometer over quad choices
        let mut i = 0;
        while i < num_tets {
            mids[i] += 1;
            if mids[i] < 3 {
                break;
            }
            mids[i] = 0;
            i += 1;
        }
        if i == num_tets {
            break;
        }
    }
    faces.sort();
    faces.dedup();
    faces
}

/// The matching rows as dense integer coefficient rows over the face's
/// columns.
fn restricted_rows(sys: &MatchingSystem, face: &SupportFace) -> Vec<Vec<i64>> {
    let cols = face.columns();
    sys.rows
        .iter()
        .map(|row| {
            let dense = sys.row_coefficients(row);
            cols.iter().map(|&c| dense[c]).collect()
        })
        .collect()
}

fn dot(a: &[i64], x: &[BigInt]) -> BigInt {
    a.iter().zip(x).map(|(&c, v)| v * c).sum()
}

fn reduce_primitive(v: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in v.iter() {
        g = g.gcd(x);
    }
    if !g.is_zero() {
        for x in v.iter_mut() {
            *x /= &g;
        }
    }
}

fn support_bits(v: &[BigInt]) -> u128 {
    let mut bits = 0u128;
    for (i, x) in v.iter().enumerate() {
        if !x.is_zero() {
            bits |= 1 << i;
        }
    }
    bits
}

/// Double description sweep: extreme rays of `{x >= 0 : rows . x = 0}`.
fn extreme_rays(
    rows: &[Vec<i64>],
    dim: usize,
    limits: &EnumLimits,
) -> Result<Vec<Vec<BigInt>>, EnumError> {
    assert!(dim <= 128, "support faces have at most 5 coordinates per tet");
    let mut rays: Vec<Vec<BigInt>> = (0..dim)
        .map(|i| {
            let mut e = vec![BigInt::zero(); dim];
            e[i] = BigInt::from(1);
            e
        })
        .collect();
    for row in rows {
        let mut zero = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for r in rays.drain(..) {
            let d = dot(row, &r);
            if d.is_zero() {
                zero.push(r);
            } else if d.is_positive() {
                pos.push((d, r));
            } else {
                neg.push((d, r));
            }
        }
        let supports: Vec<u128> = zero
            .iter()
            .map(|r| support_bits(r))
            .chain(pos.iter().map(|(_, r)| support_bits(r)))
            .chain(neg.iter().map(|(_, r)| support_bits(r)))
            .collect();
        let mut next = zero;
        for (dp, p) in &pos {
            for (dn, n) in &neg {
                let union = support_bits(p) | support_bits(n);
                let adjacent = !supports.iter().any(|&s| {
                    s & !union == 0 && s != support_bits(p) && s != support_bits(n)
                });
                if !adjacent {
                    continue;
                }
                let mut w: Vec<BigInt> =
                    p.iter().zip(n).map(|(pi, ni)| pi * (-dn.clone()) + ni * dp).collect();
                reduce_primitive(&mut w);
                next.push(w);
            }
        }
        // Dedupe combinatorially equal rays.
        next.sort();
        next.dedup();
        if next.len() > limits.max_rays {
            return Err(EnumError::ResourceLimit(format!(
                "double description produced {} intermediate rays (cap {})",
                next.len(),
                limits.max_rays
            )));
        }
        rays = next;
    }
    Ok(rays)
}

fn ray_to_vector(face: &SupportFace, ray: &[BigInt]) -> Option<SurfaceVector> {
    let cols = face.columns();
    let mut v = SurfaceVector::zero(face.num_tets());
    for (&col, x) in cols.iter().zip(ray) {
        let val = u64::try_from(x.clone()).ok()?;
        v.coords[col / COORDS_PER_TET][col % COORDS_PER_TET] = val;
    }
    Some(v)
}

/// Minimal integer representatives of the extreme rays of the admissible
/// cone, computed per maximal support face and deduplicated.
pub fn enumerate_vertex_solutions(
    tri: &Triangulation,
    sys: &MatchingSystem,
    limits: &EnumLimits,
) -> Result<Vec<SurfaceVector>, EnumError> {
    let faces = maximal_support_faces(tri.num_tets());
    let per_face: Vec<Result<Vec<SurfaceVector>, EnumError>> = faces
        .par_iter()
        .map(|face| {
            let rows = restricted_rows(sys, face);
            let rays = extreme_rays(&rows, face.columns().len(), limits)?;
            Ok(rays
                .iter()
                .filter_map(|r| ray_to_vector(face, r))
                .filter(|v| !v.is_zero() && is_admissible(v, sys))
                .collect())
        })
        .collect();
    let mut out = BTreeSet::new();
    for r in per_face {
        out.extend(r?);
    }
    Ok(out.into_iter().collect())
}

/// Lattice points of the face cone inside the box `0 <= x <= bound`.
///
/// With the mid coordinates fixed, every matching row reduces to a
/// difference constraint between two triangle coordinates, so the triangle
/// part splits into connected components with fixed offsets; each component
/// contributes one free base value.
fn face_lattice_points(
    tri: &Triangulation,
    face: &SupportFace,
    bound: &SurfaceVector,
) -> Vec<SurfaceVector> {
    let num_tets = face.num_tets();
    // Mid contribution of tet t to arc type (f, v), per unit of mid weight.
    let mid_coeff = |t: usize, f: usize, v: usize| -> u64 {
        match face.mid[t] {
            Some((MidKind::Quad, k)) => (PAIRING_PARTNER[k][f] == v) as u64,
            Some((MidKind::Oct, k)) => (PAIRING_PARTNER[k][f] != v) as u64,
            None => 0,
        }
    };
    let mid_bound: Vec<u64> = (0..num_tets)
        .map(|t| match face.mid[t] {
            Some((MidKind::Quad, k)) => bound.quad(t, k),
            Some((MidKind::Oct, k)) => bound.oct(t, k),
            None => 0,
        })
        .collect();
    let mut out = Vec::new();
    let mut mids = vec![0u64; num_tets];
    'mid_combo: loop {
        // Difference constraints tri[t][v] - tri[t'][v'] = d over all rows.
        let mut parent: Vec<usize> = (0..4 * num_tets).collect();
        let mut offset: Vec<i64> = vec![0; 4 * num_tets];
        fn find(parent: &mut [usize], offset: &mut [i64], x: usize) -> (usize, i64) {
            if parent[x] == x {
                return (x, 0);
            }
            let (r, o) = find(parent, offset, parent[x]);
            parent[x] = r;
            offset[x] += o;
            (r, offset[x])
        }
        let mut consistent = true;
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
                    let w = p.apply(v);
                    let d = mid_coeff(tt, tf, w) as i64 * mids[tt] as i64
                        - mid_coeff(t, f, v) as i64 * mids[t] as i64;
                    // tri[t][v] = tri[tt][w] + d
                    let (ra, oa) = find(&mut parent, &mut offset, 4 * t + v);
                    let (rb, ob) = find(&mut parent, &mut offset, 4 * tt + w);
                    if ra == rb {
                        if oa != ob + d {
                            consistent = false;
                        }
                    } else {
                        parent[ra] = rb;
                        offset[ra] = ob + d - oa;
                    }
                }
            }
        }
        if consistent {
            let mut comps: std::collections::BTreeMap<usize, Vec<(usize, i64)>> =
                std::collections::BTreeMap::new();
            for x in 0..4 * num_tets {
                let (r, o) = find(&mut parent, &mut offset, x);
                comps.entry(r).or_default().push((x, o));
            }
            let comp_list: Vec<Vec<(usize, i64)>> = comps.into_values().collect();
            // Base range per component from box and support constraints.
            let ranges: Vec<Option<(i64, i64)>> = comp_list
                .iter()
                .map(|c| {
                    let mut lo = 0i64;
                    let mut hi = i64::MAX;
                    for &(x, o) in c {
                        let (t, v) = (x / 4, x % 4);
                        let cap = if face.tris[t][v] { bound.tri(t, v) as i64 } else { 0 };
                        lo = lo.max(-o);
                        hi = hi.min(cap - o);
                    }
                    (lo <= hi).then_some((lo, hi))
                })
                .collect();
            if ranges.iter().all(|r| r.is_some()) {
                let ranges: Vec<(i64, i64)> = ranges.into_iter().map(|r| r.unwrap()).collect();
                let mut bases: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                'base_combo: loop {
                    let mut v = SurfaceVector::zero(num_tets);
                    for (c, &b) in comp_list.iter().zip(&bases) {
                        for &(x, o) in c {
                            v.coords[x / 4][x % 4] = (b + o) as u64;
                        }
                    }
                    for t in 0..num_tets {
                        match face.mid[t] {
                            Some((MidKind::Quad, k)) => v.coords[t][4 + k] = mids[t],
                            Some((MidKind::Oct, k)) => v.coords[t][7 + k] = mids[t],
                            None => {}
                        }
                    }
                    if !v.is_zero() {
                        out.push(v);
                    }
                    let mut i = 0;
                    while i < bases.len() {
                        bases[i] += 1;
                        if bases[i] <= ranges[i].1 {
                            continue 'base_combo;
                        }
                        bases[i] = ranges[i].0;
                        i += 1;
                    }
                    break;
                }
            }
        }
        let mut i = 0;
        while i < num_tets {
            mids[i] += 1;
            if mids[i] <= mid_bound[i] {
                continue 'mid_combo;
            }
            mids[i] = 0;
            i += 1;
        }
        break;
    }
    out
}

/// The Hilbert basis of one maximal face's cone, as admissible vectors.
pub(crate) fn face_fundamentals(
    tri: &Triangulation,
    sys: &MatchingSystem,
    face: &SupportFace,
    limits: &EnumLimits,
) -> Result<Vec<SurfaceVector>, EnumError> {
    let rows = restricted_rows(sys, face);
    let rays = extreme_rays(&rows, face.columns().len(), limits)?;
    if rays.is_empty() {
        return Ok(Vec::new());
    }
    // Zonotope bounding box: the sum of all extreme rays.
    let mut bound = SurfaceVector::zero(face.num_tets());
    for r in &rays {
        let v = ray_to_vector(face, r).ok_or_else(|| {
            EnumError::ResourceLimit("extreme ray exceeds u64 coordinates".into())
        })?;
        bound = bound.checked_add(&v).expect("same dims");
    }
    let total: u64 = crate::coords::weight(&bound);
    if total > limits.max_box_weight {
        return Err(EnumError::ResourceLimit(format!(
            "zonotope box weight {total} exceeds cap {}",
            limits.max_box_weight
        )));
    }
    let candidates = face_lattice_points(tri, face, &bound);
    // Keep minimal elements of the solution monoid.  Weight order guarantees
    // any dominating witness is already in `minimal`.
    let mut sorted = candidates;
    sorted.sort_by_key(crate::coords::weight);
    let mut minimal: Vec<SurfaceVector> = Vec::new();
    'cand: for v in sorted {
        for m in &minimal {
            if v.checked_sub(m).is_some() {
                continue 'cand;
            }
        }
        minimal.push(v);
    }
    Ok(minimal.into_iter().filter(|v| is_admissible(v, sys)).collect())
}

/// The Hilbert basis of the admissible monoid together with a
/// classification-based partition of its members.
#[derive(Clone, Debug)]
pub struct FundamentalSet {
    /// Canonically ordered admissible members.
    pub members: Vec<SurfaceVector>,
    /// Indices of connected orientable chi = 0 members without octagons.
    pub tori: Vec<usize>,
    /// Indices of everything else with chi <= 0 or spheres; includes all
    /// octagon-carrying members.
    pub non_tori: Vec<usize>,
    /// Indices of non-orientable chi = 0 members (one-sided Klein bottles).
    pub other: Vec<usize>,
}

impl FundamentalSet {
    pub fn torus_members(&self) -> Vec<&SurfaceVector> {
        self.tori.iter().map(|&i| &self.members[i]).collect()
    }
}

/// Hilbert basis of the admissible monoid, partitioned after classification.
pub fn enumerate_fundamental(
    tri: &Triangulation,
    sys: &MatchingSystem,
    limits: &EnumLimits,
) -> Result<FundamentalSet, EnumError> {
    let faces = maximal_support_faces(tri.num_tets());
    let per_face: Vec<Result<Vec<SurfaceVector>, EnumError>> = faces
        .par_iter()
        .map(|face| face_fundamentals(tri, sys, face, limits))
        .collect();
    let mut set = BTreeSet::new();
    for r in per_face {
        set.extend(r?);
    }
    let members: Vec<SurfaceVector> = set.into_iter().collect();
    let mut tori = Vec::new();
    let mut non_tori = Vec::new();
    let mut other = Vec::new();
    for (i, m) in members.iter().enumerate() {
        let reports = classify_vector(tri, m);
        debug_assert_eq!(reports.len(), 1, "fundamental members are connected");
        let r = &reports[0];
        if m.oct_total() > 0 {
            non_tori.push(i);
        } else if r.kind == SurfaceKind::Torus {
            tori.push(i);
        } else if r.euler == 0 && !r.orientable {
            other.push(i);
        } else {
            non_tori.push(i);
        }
    }
    Ok(FundamentalSet { members, tori, non_tori, other })
}

/// Express an admissible vector as a non-negative combination of fundamental
/// members: greedy on canonical member order with backtracking.  Returns
/// `(coefficient, member index)` pairs with positive coefficients.
pub fn decompose(
    vec: &SurfaceVector,
    fund: &FundamentalSet,
) -> Result<Vec<(u64, usize)>, EnumError> {
    fn rec(
        rem: SurfaceVector,
        start: usize,
        fund: &FundamentalSet,
        acc: &mut Vec<(u64, usize)>,
    ) -> bool {
        if rem.is_zero() {
            return true;
        }
        if start >= fund.members.len() {
            return false;
        }
        let m = &fund.members[start];
        // Largest multiple of m that fits under rem.
        let mut cap = u64::MAX;
        for t in 0..rem.num_tets() {
            for i in 0..COORDS_PER_TET {
                if m.coords[t][i] > 0 {
                    cap = cap.min(rem.coords[t][i] / m.coords[t][i]);
                }
            }
        }
        if cap == u64::MAX {
            cap = 0; // zero member cannot occur; defensive
        }
        let mut c = cap;
        loop {
            let left = rem.checked_sub(&m.scaled(c)).expect("cap bounds");
            if c > 0 {
                acc.push((c, start));
            }
            if rec(left, start + 1, fund, acc) {
                return true;
            }
            if c > 0 {
                acc.pop();
            }
            if c == 0 {
                return false;
            }
            c -= 1;
        }
    }
    let mut acc = Vec::new();
    if rec(vec.clone(), 0, fund, &mut acc) {
        Ok(acc)
    } else {
        Err(EnumError::NotDecomposable)
    }
}

/// Re-sum a decomposition.
pub fn resum(parts: &[(u64, usize)], fund: &FundamentalSet, num_tets: usize) -> SurfaceVector {
    let mut v = SurfaceVector::zero(num_tets);
    for &(c, i) in parts {
        v = v.checked_add(&fund.members[i].scaled(c)).expect("same dims");
    }
    v
}
