//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here goes through the production enumeration or tracing paths:
//! the lattice scan assigns tetrahedra one at a time against raw arc-count
//! equations, and the balanced-curve oracle simulates the cut-and-paste of
//! arcs with parallel copies of the core curve segment by segment.

use normsurf::coords::{pairing_of, SurfaceVector, PAIRING_PARTNER};
use normsurf::tri::Triangulation;

pub fn fixture(name: &str) -> Triangulation {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    normsurf::tri::parse_triangulation(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Arc count of type (face, cut) from a single tetrahedron's coordinates.
fn arc_count(row: &[u64; 10], f: usize, v: usize) -> u64 {
    let k = pairing_of(f, v);
    let oct: u64 = (0..3).filter(|&j| j != k).map(|j| row[7 + j]).sum();
    row[v] + row[4 + k] + oct
}

fn tet_weight(row: &[u64; 10]) -> u64 {
    row.iter().sum()
}

/// Mid choices: none, three quads, three octs.
const MIDS: [Option<(bool, usize)>; 7] = [
    None,
    Some((false, 0)),
    Some((false, 1)),
    Some((false, 2)),
    Some((true, 0)),
    Some((true, 1)),
    Some((true, 2)),
];

fn assemble(tris: [u64; 4], mid: Option<(bool, usize)>, m: u64) -> [u64; 10] {
    let mut row = [0u64; 10];
    row[..4].copy_from_slice(&tris);
    if let Some((oct, k)) = mid {
        row[if oct { 7 } else { 4 } + k] = m;
    }
    row
}

/// Every admissible nonzero lattice vector with weight at most `max_weight`,
/// by exhaustive per-tetrahedron assignment with equation filtering.
pub fn brute_force_admissible(tri: &Triangulation, max_weight: u64) -> Vec<SurfaceVector> {
    let n = tri.num_tets();
    // Process tets so each one after the first touches an assigned one.
    let mut order = vec![0usize];
    while order.len() < n {
        let next = (0..n)
            .find(|t| {
                !order.contains(t)
                    && (0..4).any(|f| order.contains(&tri.gluing(*t, f).0))
            })
            .expect("connected gluing graph");
        order.push(next);
    }
    let mut out = Vec::new();
    let mut rows: Vec<[u64; 10]> = vec![[0; 10]; n];
    fn equations_hold(
        tri: &Triangulation,
        rows: &[[u64; 10]],
        assigned: &[usize],
    ) -> bool {
        for &t in assigned {
            for f in 0..4 {
                let (tt, tf, p) = tri.gluing(t, f);
                if !assigned.contains(&tt) {
                    continue;
                }
                for v in 0..4 {
                    if v == f {
                        continue;
                    }
                    if arc_count(&rows[t], f, v) != arc_count(&rows[tt], tf, p.apply(v)) {
                        return false;
                    }
                }
            }
        }
        true
    }
    fn rec(
        tri: &Triangulation,
        order: &[usize],
        idx: usize,
        rows: &mut Vec<[u64; 10]>,
        used: u64,
        oct_used: bool,
        max_weight: u64,
        out: &mut Vec<SurfaceVector>,
    ) {
        if idx == order.len() {
            let v = SurfaceVector { coords: rows.clone() };
            if !v.is_zero() {
                out.push(v);
            }
            return;
        }
        let t = order[idx];
        let assigned: Vec<usize> = order[..=idx].to_vec();
        let budget = max_weight - used;
        // Known arc counts from earlier tets, if any.
        let known: Vec<(usize, usize, u64)> = (0..4)
            .flat_map(|f| {
                let (tt, tf, p) = tri.gluing(t, f);
                if order[..idx].contains(&tt) {
                    (0..4)
                        .filter(|&v| v != f)
                        .map(|v| (f, v, arc_count(&rows[tt], tf, p.apply(v))))
                        .collect::<Vec<_>>()
                } else {
                    Vec::new()
                }
            })
            .collect();
        for mid in MIDS {
            if let Some((true, _)) = mid {
                if oct_used {
                    continue;
                }
            }
            let m_max = match mid {
                None => 0,
                Some((true, _)) => 1.min(budget),
                Some((false, _)) => budget,
            };
            let m_min = if mid.is_some() { 1 } else { 0 };
            for m in m_min..=m_max {
                let midc = |f: usize, v: usize| -> u64 {
                    match mid {
                        Some((false, k)) => (PAIRING_PARTNER[k][f] == v) as u64 * m,
                        Some((true, k)) => (PAIRING_PARTNER[k][f] != v) as u64 * m,
                        None => 0,
                    }
                };
                // Determine triangle coordinates from known faces where
                // possible; enumerate the rest.
                let mut tris = [u64::MAX; 4];
                let mut bad = false;
                for &(f, v, count) in &known {
                    let c = midc(f, v);
                    let Some(tv) = count.checked_sub(c) else {
                        bad = true;
                        break;
                    };
                    if tris[v] != u64::MAX && tris[v] != tv {
                        bad = true;
                        break;
                    }
                    tris[v] = tv;
                }
                if bad {
                    continue;
                }
                let free: Vec<usize> = (0..4).filter(|&v| tris[v] == u64::MAX).collect();
                let fixed_sum: u64 =
                    (0..4).filter(|&v| tris[v] != u64::MAX).map(|v| tris[v]).sum();
                if fixed_sum + m > budget {
                    continue;
                }
                let rem = budget - fixed_sum - m;
                // enumerate the free triangle coordinates
                let mut free_vals = vec![0u64; free.len()];
                loop {
                    let mut t4 = [0u64; 4];
                    for v in 0..4 {
                        t4[v] = if tris[v] != u64::MAX { tris[v] } else { 0 };
                    }
                    for (fv, &v) in free_vals.iter().zip(&free) {
                        t4[v] = *fv;
                    }
                    let row = assemble(t4, mid, m);
                    let w = tet_weight(&row);
                    if w <= budget {
                        rows[t] = row;
                        if equations_hold(tri, rows, &assigned) {
                            rec(
                                tri,
                                order,
                                idx + 1,
                                rows,
                                used + w,
                                oct_used || matches!(mid, Some((true, _))),
                                max_weight,
                                out,
                            );
                        }
                        rows[t] = [0; 10];
                    }
                    // odometer over free values, bounded by rem
                    let mut i = 0;
                    loop {
                        if i == free_vals.len() {
                            break;
                        }
                        free_vals[i] += 1;
                        if free_vals.iter().sum::<u64>() <= rem {
                            break;
                        }
                        free_vals[i] = 0;
                        i += 1;
                    }
                    if free_vals.iter().all(|&x| x == 0) {
                        break;
                    }
                }
            }
        }
    }
    rec(tri, &order, 0, &mut rows, 0, false, max_weight, &mut out);
    out.sort();
    out.dedup();
    out
}

/// The sign-sequence resolution oracle: cut and paste the arcs with `m`
/// parallel copies of the core curve and report the component census.
///
/// Returns (boundary-parallel arcs, spiral arcs, circles).
pub fn resolve_with_core(signs: &[bool], m: usize) -> (usize, usize, usize) {
    let n = signs.len();
    if n == 0 {
        return (0, 0, m);
    }
    // Undirected segments: ("lam", i, level 0..=m) and ("alpha", j 1..=m,
    // slot 0..n).  Directed travel follows the canonical resolution: going
    // up a positive arc turns east at each copy, a negative arc west.
    #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
    enum Seg {
        Lam(usize, usize),
        Alpha(usize, usize),
    }
    #[derive(Clone, Copy, Debug)]
    enum State {
        LamUp(usize, usize),
        LamDown(usize, usize),
        AlphaEast(usize, usize),
        AlphaWest(usize, usize),
    }
    let seg_of = |s: &State| -> Seg {
        match *s {
            State::LamUp(i, l) | State::LamDown(i, l) => Seg::Lam(i, l),
            State::AlphaEast(j, k) | State::AlphaWest(j, k) => Seg::Alpha(j, k),
        }
    };
    // step returns None at a boundary endpoint (false = bottom, true = top)
    let step = |s: &State| -> Result<State, bool> {
        match *s {
            State::LamUp(i, l) => {
                if l == m {
                    Err(true)
                } else if signs[i] {
                    Ok(State::AlphaEast(l + 1, i))
                } else {
                    Ok(State::AlphaWest(l + 1, (i + n - 1) % n))
                }
            }
            State::LamDown(i, l) => {
                if l == 0 {
                    Err(false)
                } else if signs[i] {
                    Ok(State::AlphaWest(l, (i + n - 1) % n))
                } else {
                    Ok(State::AlphaEast(l, i))
                }
            }
            State::AlphaEast(j, k) => {
                let i2 = (k + 1) % n;
                if signs[i2] {
                    Ok(State::LamUp(i2, j))
                } else {
                    Ok(State::LamDown(i2, j - 1))
                }
            }
            State::AlphaWest(j, k) => {
                let i2 = k;
                if signs[i2] {
                    Ok(State::LamDown(i2, j - 1))
                } else {
                    Ok(State::LamUp(i2, j))
                }
            }
        }
    };
    let mut visited: std::collections::BTreeSet<Seg> = Default::default();
    let mut par = 0usize;
    let mut spiral = 0usize;
    let mut circles = 0usize;
    // Arcs from boundary endpoints.
    let mut starts: Vec<(State, bool)> = Vec::new();
    for i in 0..n {
        starts.push((State::LamUp(i, 0), false)); // entering from the bottom
        starts.push((State::LamDown(i, m), true)); // entering from the top
    }
    for (start, from_top) in starts {
        if visited.contains(&seg_of(&start)) {
            continue;
        }
        let mut s = start;
        loop {
            visited.insert(seg_of(&s));
            match step(&s) {
                Ok(next) => s = next,
                Err(end_top) => {
                    if end_top == from_top {
                        par += 1;
                    } else {
                        spiral += 1;
                    }
                    break;
                }
            }
        }
    }
    // Each arc is traced exactly once: the entry at its other boundary
    // endpoint finds its first segment already visited.  Remaining segments
    // belong to circles.
    let all_lam = (0..n).flat_map(|i| (0..=m).map(move |l| Seg::Lam(i, l)));
    let all_alpha = (1..=m).flat_map(|j| (0..n).map(move |k| Seg::Alpha(j, k)));
    for seg in all_lam.chain(all_alpha) {
        if visited.contains(&seg) {
            continue;
        }
        circles += 1;
        let mut s = match seg {
            Seg::Lam(i, l) => State::LamUp(i, l),
            Seg::Alpha(j, k) => State::AlphaEast(j, k),
        };
        loop {
            visited.insert(seg_of(&s));
            let next = step(&s).expect("circles avoid the boundary");
            if seg_of(&next) == seg {
                break;
            }
            s = next;
        }
    }
    (par, spiral, circles)
}

/// Minimal number of core copies after which the resolution consists of
/// boundary-parallel arcs only, verified stable for two further copies.
pub fn oracle_reduction_constant(signs: &[bool]) -> Option<u64> {
    let n = signs.len();
    for m in 0..=(n + 2) {
        let (_, spiral, circles) = resolve_with_core(signs, m);
        if spiral == 0 {
            // circles must grow one per extra copy from here on
            for extra in 0..=2usize {
                let (_, sp2, c2) = resolve_with_core(signs, m + extra);
                if sp2 != 0 || c2 != circles + extra {
                    return None;
                }
            }
            return Some(m as u64);
        }
    }
    None
}
