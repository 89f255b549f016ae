//! Candidate generation at desk scale: torus/non-torus splitting,
//! coefficient-bounded decomposition streams, balanced-curve reduction,
//! Dehn-twist coefficient normalisation and regular-set checks.

use crate::coords::{euler_linear, is_admissible, matching_system, SurfaceVector};
use crate::hilbert::FundamentalSet;
use crate::intersect::{intersection_complexity, trivial_curves_in_first};
use crate::tri::Triangulation;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sign sequence is not balanced: {pos} positive vs {neg} negative")]
    NotBalanced { pos: usize, neg: usize },
    #[error("torus term is not isolated: it meets another torus term")]
    NotIsolated,
    #[error("intersection contains open arcs")]
    OpenArcs,
}

// ---------------------------------------------------------------------------
// Balanced sequences
// ---------------------------------------------------------------------------

/// Cyclic sequence of signed intersections of arcs with a core curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BalancedSequence {
    /// `true` for a positive arc.
    pub signs: Vec<bool>,
}

impl BalancedSequence {
    pub fn parse(text: &str) -> Option<BalancedSequence> {
        let mut signs = Vec::new();
        for ch in text.chars() {
            match ch {
                '+' => signs.push(true),
                '-' => signs.push(false),
                c if c.is_whitespace() => {}
                _ => return None,
            }
        }
        Some(BalancedSequence { signs })
    }

    pub fn is_balanced(&self) -> bool {
        let pos = self.signs.iter().filter(|&&s| s).count();
        2 * pos == self.signs.len()
    }
}

/// The reduction constant of a balanced sequence: rounds of removing a
/// maximal set of adjacent (positive, negative) pairs until nothing is
/// left.  Adjacent bottom pairs never overlap, so each round removes all
/// of them at once.
pub fn balanced_reduce(seq: &BalancedSequence) -> Result<u64, PipelineError> {
    let pos = seq.signs.iter().filter(|&&s| s).count();
    let neg = seq.signs.len() - pos;
    if pos != neg {
        return Err(PipelineError::NotBalanced { pos, neg });
    }
    let mut current = seq.signs.clone();
    let mut rounds = 0u64;
    while !current.is_empty() {
        let n = current.len();
        let mut remove = vec![false; n];
        if n == 2 && current[0] != current[1] {
            remove[0] = true;
            remove[1] = true;
        } else {
            for i in 0..n {
                if current[i] && !current[(i + 1) % n] {
                    remove[i] = true;
                    remove[(i + 1) % n] = true;
                }
            }
        }
        debug_assert!(remove.iter().any(|&r| r), "balanced sequences reduce");
        current = current
            .iter()
            .zip(&remove)
            .filter(|&(_, &r)| !r)
            .map(|(&s, _)| s)
            .collect();
        rounds += 1;
    }
    Ok(rounds)
}

// ---------------------------------------------------------------------------
// Decompositions and the candidate stream
// ---------------------------------------------------------------------------

/// A twist-normalisation event in a decomposition's audit trail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditEvent {
    pub torus: SurfaceVector,
    /// Coefficient before normalisation.
    pub from: u64,
    /// The cap it was reduced to.
    pub to: u64,
    /// Number of Dehn twists the reduction corresponds to.
    pub twists: u64,
}

/// A base surface plus integer-weighted torus terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub base: SurfaceVector,
    pub torus_terms: Vec<(SurfaceVector, u64)>,
    pub audit: Vec<AuditEvent>,
}

impl Decomposition {
    /// The represented vector.
    pub fn resum(&self) -> SurfaceVector {
        let mut v = self.base.clone();
        for (t, c) in &self.torus_terms {
            v = v.checked_add(&t.scaled(*c)).expect("same dimensions");
        }
        v
    }
}

/// Partition the fundamental members: normal tori versus everything else.
/// Octagon-carrying members land on the non-torus side regardless of their
/// Euler characteristic, as do one-sided chi = 0 members.
pub fn split_fundamentals(fund: &FundamentalSet) -> (Vec<SurfaceVector>, Vec<SurfaceVector>) {
    let tori: Vec<SurfaceVector> = fund.tori.iter().map(|&i| fund.members[i].clone()).collect();
    let mut non_tori: Vec<SurfaceVector> = fund
        .non_tori
        .iter()
        .chain(fund.other.iter())
        .map(|&i| fund.members[i].clone())
        .collect();
    non_tori.sort();
    (tori, non_tori)
}

/// Per-member coefficient cap used by the candidate stream.
fn coefficient_cap(chi: i64, has_oct: bool, genus_bound: u64, coeff_bound: u64) -> u64 {
    let base = if chi < 0 {
        let budget = 2 * genus_bound as i64 - 2;
        if budget < 0 {
            0
        } else {
            (budget / -chi) as u64
        }
    } else if chi > 0 {
        1
    } else {
        coeff_bound
    };
    if has_oct {
        base.min(1)
    } else {
        base
    }
}

/// Deterministic stream of coefficient-bounded decompositions whose base
/// Euler characteristic matches a genus of at most `genus_bound`.
pub struct CandidateStream<'a> {
    tri: &'a Triangulation,
    non_tori: Vec<SurfaceVector>,
    tori: Vec<SurfaceVector>,
    chis: Vec<i64>,
    caps: Vec<u64>,
    torus_cap: u64,
    genus_bound: u64,
    state: Option<Vec<u64>>,
}

/// Build the candidate stream for a fundamental set.
pub fn candidate_stream<'a>(
    tri: &'a Triangulation,
    fund: &FundamentalSet,
    genus_bound: u64,
    coeff_bound: u64,
) -> CandidateStream<'a> {
    let (mut tori, non_tori) = split_fundamentals(fund);
    tori.sort();
    let chis: Vec<i64> = non_tori.iter().map(|m| euler_linear(tri, m)).collect();
    let caps: Vec<u64> = non_tori
        .iter()
        .zip(&chis)
        .map(|(m, &chi)| coefficient_cap(chi, m.oct_total() > 0, genus_bound, coeff_bound))
        .collect();
    let n = non_tori.len() + tori.len();
    CandidateStream {
        tri,
        non_tori,
        tori,
        chis,
        caps,
        torus_cap: coeff_bound,
        genus_bound,
        state: Some(vec![0; n]),
    }
}

impl CandidateStream<'_> {
    fn cap(&self, i: usize) -> u64 {
        if i < self.non_tori.len() {
            self.caps[i]
        } else {
            let cap = self.torus_cap;
            let m = &self.tori[i - self.non_tori.len()];
            if m.oct_total() > 0 {
                cap.min(1)
            } else {
                cap
            }
        }
    }

    fn advance(&self, state: &mut Vec<u64>) -> bool {
        // odometer, least-significant last
        for i in (0..state.len()).rev() {
            state[i] += 1;
            if state[i] <= self.cap(i) {
                return true;
            }
            state[i] = 0;
        }
        false
    }

    fn emit(&self, state: &[u64]) -> Option<Decomposition> {
        if state.iter().all(|&c| c == 0) {
            return None;
        }
        let chi: i64 = state[..self.non_tori.len()]
            .iter()
            .zip(&self.chis)
            .map(|(&c, &x)| c as i64 * x)
            .sum();
        // chi(base) must equal 2 - 2g' for some 0 <= g' <= genus bound.
        if chi > 2 || chi < 2 - 2 * self.genus_bound as i64 || chi.rem_euclid(2) != 0 {
            return None;
        }
        let mut base = SurfaceVector::zero(self.tri.num_tets());
        for (c, m) in state[..self.non_tori.len()].iter().zip(&self.non_tori) {
            base = base.checked_add(&m.scaled(*c))?;
        }
        let mut total = base.clone();
        let mut torus_terms = Vec::new();
        for (c, m) in state[self.non_tori.len()..].iter().zip(&self.tori) {
            if *c > 0 {
                torus_terms.push((m.clone(), *c));
                total = total.checked_add(&m.scaled(*c))?;
            }
        }
        let sys = matching_system(self.tri);
        if !is_admissible(&total, &sys) {
            return None;
        }
        Some(Decomposition { base, torus_terms, audit: Vec::new() })
    }
}

impl Iterator for CandidateStream<'_> {
    type Item = Decomposition;

    fn next(&mut self) -> Option<Decomposition> {
        let mut state = self.state.take()?;
        loop {
            let out = self.emit(&state);
            if !self.advance(&mut state) {
                self.state = None;
                return out;
            }
            if let Some(d) = out {
                self.state = Some(state);
                return Some(d);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Curve bounds and twist normalisation
// ---------------------------------------------------------------------------

/// Number of intersection curves of `f` and `lambda` that are trivial
/// (null-homologous) in `f`.
pub fn trivial_curve_bound(
    tri: &Triangulation,
    f: &SurfaceVector,
    lambda: &SurfaceVector,
) -> Result<u64, PipelineError> {
    trivial_curves_in_first(tri, f, lambda)
        .map(|n| n as u64)
        .map_err(|_| PipelineError::OpenArcs)
}

/// The twist cap for an isolated torus term: the trivial-curve bound plus
/// the balanced-reduction bound (half the double-curve count) plus a 2g
/// slack from the represented surface's genus.  A sound implementation-level
/// bound, not a closed form from the source material.
pub fn twist_cap(tri: &Triangulation, torus: &SurfaceVector, decomp: &Decomposition) -> u64 {
    let k_trivial = trivial_curve_bound(tri, torus, &decomp.base).unwrap_or(0);
    let d = intersection_complexity(tri, &[decomp.base.clone(), torus.clone()])
        .map(|r| r.double_curve_count as u64)
        .unwrap_or(0);
    let k_balanced = d.div_ceil(2);
    let chi = euler_linear(tri, &decomp.resum());
    let genus = if chi >= 2 { 1 } else { ((2 - chi) / 2) as u64 };
    k_trivial + k_balanced + 2 * genus.max(1)
}

/// Cap the coefficients of isolated torus terms, recording each reduction
/// as a Dehn-twist audit event.  Preserves chi, support, and weight modulo
/// the torus weight; applying it twice is the identity.
pub fn twist_normalize(
    tri: &Triangulation,
    decomp: &Decomposition,
    isolated: &[SurfaceVector],
) -> Result<Decomposition, PipelineError> {
    // Isolation: zero conservative intersection with every other torus term.
    for t in isolated {
        for (other, _) in &decomp.torus_terms {
            if other == t {
                continue;
            }
            let r = intersection_complexity(tri, &[t.clone(), other.clone()])
                .map_err(|_| PipelineError::NotIsolated)?;
            if r.complexity != (0, 0) {
                return Err(PipelineError::NotIsolated);
            }
        }
    }
    let mut out = decomp.clone();
    for (torus, coeff) in out.torus_terms.iter_mut() {
        if !isolated.contains(torus) {
            continue;
        }
        let cap = twist_cap(tri, torus, decomp);
        if *coeff > cap {
            out.audit.push(AuditEvent {
                torus: torus.clone(),
                from: *coeff,
                to: cap,
                twists: *coeff - cap,
            });
            *coeff = cap;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Regular sets
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularVerdict {
    Regular,
    NotRegular,
    RegularModuloMeridian,
}

/// One double curve between a pair of tori in the set.
#[derive(Clone, Debug, Serialize)]
pub struct PairCurve {
    pub pair: (usize, usize),
    pub class_in_first: Option<(i64, i64)>,
    pub class_in_second: Option<(i64, i64)>,
    pub essential: bool,
    pub meridian: &'static str,
}

/// Result of checking a set of tori for regularity: no triple points and
/// essential double curves; the meridian half of the definition stays
/// unresolved, so the best verdict is regular-modulo-meridian.
#[derive(Clone, Debug, Serialize)]
pub struct RegularSetReport {
    pub triple_points: u64,
    pub curves: Vec<PairCurve>,
    pub verdict: RegularVerdict,
    /// Counts come from the conservative stacking convention.
    pub conservative: bool,
}

pub fn regular_set_check(tri: &Triangulation, tori: &[SurfaceVector]) -> RegularSetReport {
    let mut curves = Vec::new();
    let mut essential_ok = true;
    for i in 0..tori.len() {
        for j in (i + 1)..tori.len() {
            if let Ok(r) = intersection_complexity(tri, &[tori[i].clone(), tori[j].clone()]) {
                for c in &r.curves {
                    let first = c.sides.iter().find(|s| s.surface == 0);
                    let second = c.sides.iter().find(|s| s.surface == 1);
                    let ess = first.and_then(|s| s.essential).unwrap_or(false)
                        && second.and_then(|s| s.essential).unwrap_or(false);
                    essential_ok &= ess;
                    curves.push(PairCurve {
                        pair: (i, j),
                        class_in_first: first.and_then(|s| s.class),
                        class_in_second: second.and_then(|s| s.class),
                        essential: ess,
                        meridian: "unknown",
                    });
                }
            }
        }
    }
    let mut triple_points = 0u64;
    for i in 0..tori.len() {
        for j in (i + 1)..tori.len() {
            for k in (j + 1)..tori.len() {
                if let Ok(r) = intersection_complexity(
                    tri,
                    &[tori[i].clone(), tori[j].clone(), tori[k].clone()],
                ) {
                    triple_points += r.triple_points;
                }
            }
        }
    }
    let verdict = if triple_points > 0 || !essential_ok {
        RegularVerdict::NotRegular
    } else {
        RegularVerdict::RegularModuloMeridian
    };
    RegularSetReport { triple_points, curves, verdict, conservative: true }
}

/// Frontier record for a connected union of tori: the engulfing solid-torus
/// property is out of scope and never verified.
#[derive(Clone, Debug, Serialize)]
pub struct EngulfingNote {
    pub component_tori: Vec<usize>,
    pub solid_torus_verified: bool,
}

/// Group a regular set into connected components under nonzero intersection
/// and emit unverified engulfing notes, one per component.
pub fn engulfing_notes(tri: &Triangulation, tori: &[SurfaceVector]) -> Vec<EngulfingNote> {
    let n = tori.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if let Ok(r) = intersection_complexity(tri, &[tori[i].clone(), tori[j].clone()]) {
                if r.double_curve_count > 0 {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .into_values()
        .map(|component_tori| EngulfingNote { component_tori, solid_torus_verified: false })
        .collect()
}
