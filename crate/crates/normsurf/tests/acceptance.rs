//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line.  Criterion 10 (CLI determinism) lives in the CLI crate's own
//! acceptance target.  Run with `--nocapture` to see every line.

mod common;

use common::{brute_force_admissible, fixture, oracle_reduction_constant};
use normsurf::carrier::{
    build_carrier, disk_search, verify_disk, DiskDirection, DiskSearchResult,
};
use normsurf::coords::{
    euler_linear, haken_sum, is_admissible, matching_system, vertex_link, weight, SurfaceVector,
};
use normsurf::hilbert::{
    decompose, enumerate_fundamental, maximal_support_faces, resum, EnumLimits, FundamentalSet,
    SupportFace,
};
use normsurf::pipeline::{
    balanced_reduce, candidate_stream, split_fundamentals, twist_normalize, BalancedSequence,
    Decomposition,
};
use normsurf::topology::{classify_vector, reconstruct, SurfaceKind};
use normsurf::tri::Triangulation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: usize, name: &str, pass: bool) {
    println!(
        "criterion {criterion:2} {} — {name}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {name}");
}

fn fund_of(tri: &Triangulation) -> FundamentalSet {
    let sys = matching_system(tri);
    enumerate_fundamental(tri, &sys, &EnumLimits::default()).unwrap()
}

/// Random admissible vector: random coefficients over the fundamental
/// members inside one maximal support face.
fn random_admissible(
    tri: &Triangulation,
    fund: &FundamentalSet,
    rng: &mut ChaCha8Rng,
) -> SurfaceVector {
    let faces = maximal_support_faces(tri.num_tets());
    loop {
        let face = &faces[rng.gen_range(0..faces.len())];
        let members: Vec<&SurfaceVector> =
            fund.members.iter().filter(|m| face.contains(m)).collect();
        if members.is_empty() {
            continue;
        }
        let mut v = SurfaceVector::zero(tri.num_tets());
        for m in &members {
            let c = rng.gen_range(0..=3u64);
            let c = if m.oct_total() > 0 { c.min(1) } else { c };
            let scaled = m.scaled(c);
            if v.oct_total() + scaled.oct_total() > 1 {
                continue;
            }
            v = v.checked_add(&scaled).unwrap();
        }
        if !v.is_zero() {
            return v;
        }
    }
}

#[test]
fn criterion_01_fundamental_completeness() {
    let mut pass = true;
    for name in ["one_tet.json", "two_tet.json", "three_tet.json"] {
        let tri = fixture(name);
        let start = std::time::Instant::now();
        let fund = fund_of(&tri);
        let pool = brute_force_admissible(&tri, 20);
        for v in &pool {
            match decompose(v, &fund) {
                Ok(parts) => {
                    if resum(&parts, &fund, tri.num_tets()) != *v {
                        pass = false;
                    }
                }
                Err(_) => pass = false,
            }
        }
        let elapsed = start.elapsed();
        if elapsed.as_secs() >= 60 {
            pass = false;
        }
        if pool.is_empty() {
            pass = false;
        }
    }
    report(
        1,
        "every admissible lattice vector of weight <= 20 decomposes exactly over the fundamental set (3 fixtures, < 60 s each)",
        pass,
    );
}

#[test]
fn criterion_02_chi_additivity() {
    let mut pass = true;
    for name in ["one_tet.json", "two_tet.json", "genus2.json"] {
        let tri = fixture(name);
        let sys = matching_system(&tri);
        let fund = fund_of(&tri);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        let mut done = 0;
        while done < 200 {
            let v1 = random_admissible(&tri, &fund, &mut rng);
            let v2 = random_admissible(&tri, &fund, &mut rng);
            let Ok(sum) = haken_sum(&v1, &v2) else { continue };
            if !is_admissible(&sum, &sys) {
                continue;
            }
            let chi = |v: &SurfaceVector| reconstruct(&tri, v).euler();
            if chi(&sum) != chi(&v1) + chi(&v2) {
                pass = false;
            }
            done += 1;
        }
    }
    report(
        2,
        "chi(v1+v2) = chi(v1) + chi(v2) exactly on 200 random compatible admissible pairs per fixture",
        pass,
    );
}

#[test]
fn criterion_03_linear_vs_cellular_chi() {
    let mut pass = true;
    for name in ["one_tet.json", "two_tet.json", "three_tet.json", "genus2.json"] {
        let tri = fixture(name);
        let fund = fund_of(&tri);
        for m in &fund.members {
            if euler_linear(&tri, m) != reconstruct(&tri, m).euler() {
                pass = false;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
        let samples = if name == "genus2.json" { 500 } else { 125 };
        for _ in 0..samples {
            let v = random_admissible(&tri, &fund, &mut rng);
            if euler_linear(&tri, &v) != reconstruct(&tri, &v).euler() {
                pass = false;
            }
        }
    }
    report(
        3,
        "linear Euler functional equals reconstruction chi on every fundamental and 500+ random admissible vectors",
        pass,
    );
}

#[test]
fn criterion_04_zero_efficiency_scan() {
    // Designated 0-efficient fixture: the sphere census over fundamentals is
    // exactly the vertex link.  Designated non-0-efficient fixture: at least
    // one extra sphere appears.
    let tri = fixture("two_tet.json");
    let fund = fund_of(&tri);
    let link = vertex_link(&tri).unwrap();
    let spheres: Vec<&SurfaceVector> = fund
        .members
        .iter()
        .filter(|m| {
            classify_vector(&tri, m).iter().any(|r| r.kind == SurfaceKind::Sphere)
        })
        .collect();
    let zero_eff_ok = spheres.len() == 1 && *spheres[0] == link;

    let tri2 = fixture("non_efficient.json");
    let fund2 = fund_of(&tri2);
    let link2 = vertex_link(&tri2).unwrap();
    let extra = fund2
        .members
        .iter()
        .filter(|m| {
            **m != link2
                && classify_vector(&tri2, m).iter().any(|r| r.kind == SurfaceKind::Sphere)
        })
        .count();
    report(
        4,
        "sphere census: only the vertex link on the 0-efficient fixture; an extra sphere on the non-efficient one",
        zero_eff_ok && extra >= 1,
    );
}

#[test]
fn criterion_05_balanced_reduce_oracle() {
    let start = std::time::Instant::now();
    let mut pass = true;
    let mut checked = 0usize;
    for n in (0..=12usize).step_by(2) {
        for mask in 0..(1u64 << n) {
            let signs: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            if signs.iter().filter(|&&s| s).count() * 2 != n {
                continue;
            }
            let k = balanced_reduce(&BalancedSequence { signs: signs.clone() }).unwrap();
            match oracle_reduction_constant(&signs) {
                Some(m) if m == k => {}
                _ => pass = false,
            }
            if k > n as u64 / 2 {
                pass = false;
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 10 || checked < 1200 {
        pass = false;
    }
    report(
        5,
        "balanced_reduce equals the cut-and-paste oracle on all balanced sequences of length <= 12, with k <= |seq|/2, in < 10 s",
        pass,
    );
}

#[test]
fn criterion_06_carried_cone_exactness() {
    let mut pass = true;
    let cases: Vec<(&str, SupportFace)> = vec![
        (
            "two_tet.json",
            SupportFace { tris: vec![[true; 4]; 2], mid: vec![None; 2] },
        ),
        (
            "three_tet.json",
            SupportFace::of_vector(&SurfaceVector {
                coords: vec![
                    [1, 0, 1, 0, 0, 1, 0, 0, 0, 0],
                    [1, 0, 1, 0, 0, 1, 0, 0, 0, 0],
                    [0, 0, 0, 0, 0, 0, 2, 0, 0, 0],
                ],
            }),
        ),
        (
            "genus2.json",
            SupportFace::of_vector(&SurfaceVector {
                coords: vec![[1, 1, 0, 0, 1, 0, 0, 0, 0, 0], [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]],
            }),
        ),
    ];
    for (name, support) in cases {
        let tri = fixture(name);
        let sys = matching_system(&tri);
        let carrier = build_carrier(&tri, &support).unwrap();
        let pool = brute_force_admissible(&tri, 15);
        // Oracle accept set: support containment checked on raw coordinates.
        let contained = |v: &SurfaceVector| -> bool {
            (0..tri.num_tets()).all(|t| {
                (0..4).all(|x| v.tri(t, x) == 0 || support.tris[t][x])
                    && (0..3).all(|k| {
                        (v.quad(t, k) == 0
                            || support.mid[t]
                                == Some((normsurf::hilbert::MidKind::Quad, k)))
                            && (v.oct(t, k) == 0
                                || support.mid[t]
                                    == Some((normsurf::hilbert::MidKind::Oct, k)))
                    })
            })
        };
        for v in &pool {
            let oracle_accept = contained(v);
            if carrier.carries(&sys, v) != oracle_accept {
                pass = false;
            }
            if oracle_accept {
                let positive = carrier.sectors.iter().all(|&(t, kind)| {
                    use normsurf::topology::PieceKind;
                    match kind {
                        PieceKind::Tri(x) => v.tri(t, x) > 0,
                        PieceKind::Quad(k) => v.quad(t, k) > 0,
                        PieceKind::Oct(k) => v.oct(t, k) > 0,
                    }
                });
                if carrier.fully_carries(&sys, v) != positive {
                    pass = false;
                }
            }
        }
    }
    report(
        6,
        "carried predicate equals the lattice brute force of the restricted system (weight <= 15); fully_carries is sector positivity",
        pass,
    );
}

#[test]
fn criterion_07_disk_search_soundness() {
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let names = ["two_tet.json", "three_tet.json", "genus2.json"];
    let pools: Vec<rayon::ThreadPool> = [1usize, 2, 8]
        .iter()
        .map(|&n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
        })
        .collect();
    let mut queries = 0usize;
    let mut found_count = 0usize;
    while queries < 100 {
        let name = names[rng.gen_range(0..names.len())];
        let tri = fixture(name);
        // random support: per tet a random mid (or none), all triangles
        let mut oct_used = false;
        let mids: Vec<Option<(normsurf::hilbert::MidKind, usize)>> = (0..tri.num_tets())
            .map(|_| match rng.gen_range(0..8u32) {
                0 => None,
                k if k <= 3 => Some((normsurf::hilbert::MidKind::Quad, (k - 1) as usize)),
                k if !oct_used => {
                    oct_used = true;
                    Some((normsurf::hilbert::MidKind::Oct, (k - 4) as usize % 3))
                }
                k => Some((normsurf::hilbert::MidKind::Quad, (k as usize - 4) % 3)),
            })
            .collect();
        let support = SupportFace::with_mids(mids);
        let Ok(carrier) = build_carrier(&tri, &support) else { continue };
        if carrier.circuits.is_empty() {
            continue;
        }
        let component = rng.gen_range(0..carrier.circuits.len());
        let direction = if rng.gen_bool(0.5) {
            DiskDirection::Inward
        } else {
            DiskDirection::Outward
        };
        let max_weight = rng.gen_range(2..=10u64);
        let results: Vec<DiskSearchResult> = pools
            .iter()
            .map(|pool| {
                pool.install(|| {
                    disk_search(&tri, &carrier, component, direction, max_weight).unwrap()
                })
            })
            .collect();
        if results[0] != results[1] || results[1] != results[2] {
            pass = false;
        }
        if let DiskSearchResult::Found(v) = &results[0] {
            found_count += 1;
            if !verify_disk(&tri, &carrier, component, direction, v) {
                pass = false;
            }
        }
        queries += 1;
    }
    let _ = found_count;
    report(
        7,
        "100 randomized disk searches: every Found passes the independent verifier; identical results for 1, 2, 8 workers",
        pass,
    );
}

#[test]
fn criterion_08_candidate_stream_oracle() {
    // two_tet has four fundamentals; genus bound 2, coefficient bound 3.
    let tri = fixture("two_tet.json");
    let sys = matching_system(&tri);
    let fund = fund_of(&tri);
    let mut pass = fund.members.len() <= 4;
    let (g, cb) = (2u64, 3u64);
    let stream: Vec<Decomposition> = candidate_stream(&tri, &fund, g, cb).collect();
    // Independent tuple enumeration under identical filters.
    let (mut tori, non_tori) = split_fundamentals(&fund);
    tori.sort();
    let members: Vec<SurfaceVector> =
        non_tori.iter().chain(tori.iter()).cloned().collect();
    let chis: Vec<i64> = non_tori.iter().map(|m| euler_linear(&tri, m)).collect();
    let caps: Vec<u64> = members
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let base = if i < non_tori.len() {
                match chis[i].signum() {
                    -1 => ((2 * g as i64 - 2) / -chis[i]).max(0) as u64,
                    1 => 1,
                    _ => cb,
                }
            } else {
                cb
            };
            if m.oct_total() > 0 {
                base.min(1)
            } else {
                base
            }
        })
        .collect();
    let mut expected: Vec<SurfaceVector> = Vec::new();
    let mut tuple = vec![0u64; members.len()];
    'outer: loop {
        if tuple.iter().any(|&c| c > 0) {
            let chi: i64 = tuple[..non_tori.len()]
                .iter()
                .zip(&chis)
                .map(|(&c, &x)| c as i64 * x)
                .sum();
            if chi <= 2 && chi >= 2 - 2 * g as i64 && chi % 2 == 0 {
                let mut total = SurfaceVector::zero(2);
                for (c, m) in tuple.iter().zip(&members) {
                    total = total.checked_add(&m.scaled(*c)).unwrap();
                }
                if is_admissible(&total, &sys) {
                    expected.push(total);
                }
            }
        }
        for i in (0..tuple.len()).rev() {
            tuple[i] += 1;
            if tuple[i] <= caps[i] {
                continue 'outer;
            }
            tuple[i] = 0;
            if i == 0 {
                break 'outer;
            }
        }
    }
    if stream.len() != expected.len() {
        pass = false;
    }
    for (d, want) in stream.iter().zip(&expected) {
        if d.resum() != *want {
            pass = false;
        }
    }
    report(
        8,
        "candidate stream equals brute-force coefficient-tuple enumeration under identical filters, in canonical order",
        pass,
    );
}

#[test]
fn criterion_09_twist_normalize_invariants() {
    let tri = fixture("genus2.json");
    let fund = fund_of(&tri);
    let (tori, non_tori) = split_fundamentals(&fund);
    let mut pass = !tori.is_empty();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    let mut done = 0;
    while done < 100 {
        let torus = &tori[rng.gen_range(0..tori.len())];
        let base = &non_tori[rng.gen_range(0..non_tori.len())];
        if haken_sum(base, torus).is_err() {
            continue;
        }
        let coeff = rng.gen_range(1..=60u64);
        let decomp = Decomposition {
            base: base.clone(),
            torus_terms: vec![(torus.clone(), coeff)],
            audit: Vec::new(),
        };
        let Ok(n1) = twist_normalize(&tri, &decomp, &[torus.clone()]) else {
            continue;
        };
        let Ok(n2) = twist_normalize(&tri, &n1, &[torus.clone()]) else {
            pass = false;
            break;
        };
        // second application is the identity on terms and audit
        if n1.torus_terms != n2.torus_terms || n1.audit != n2.audit {
            pass = false;
        }
        // chi and support preserved
        let (v0, v1) = (decomp.resum(), n1.resum());
        if euler_linear(&tri, &v0) != euler_linear(&tri, &v1) {
            pass = false;
        }
        if SupportFace::of_vector(&v0) != SupportFace::of_vector(&v1) {
            pass = false;
        }
        if (weight(&v0) - weight(&v1)) % weight(torus) != 0 {
            pass = false;
        }
        done += 1;
    }
    report(
        9,
        "twist normalisation preserves chi and support, changes weight by torus multiples, and is idempotent (100 randomized decompositions)",
        pass,
    );
}
