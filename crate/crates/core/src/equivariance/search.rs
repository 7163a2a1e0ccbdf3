use std::collections::BTreeSet;

use itertools::Itertools;

use super::automorphisms::{automorphisms_with_bound, AutomorphismPair, DEFAULT_TOTAL_BOUND};
use crate::bijection::Bijection;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::model::SockInstance;
use crate::reductions::SockDivider;

/// Largest base the factorial search will take by default.
pub const DEFAULT_BASE_BOUND: usize = 6;

/// Automorphisms whose induced base actions leave no bijection `A -> B`
/// invariant under all of them at once. Usually a single pair suffices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonexistenceCertificate {
    pub witnesses: Vec<AutomorphismPair>,
}

impl NonexistenceCertificate {
    /// Re-checks every witness against the instance and confirms, by
    /// enumeration, that each bijection `g: A -> B` is moved by one of them.
    pub fn replay(&self, inst: &SockInstance) -> bool {
        if self.witnesses.is_empty() || !self.witnesses.iter().all(|w| w.replays(inst)) {
            return false;
        }
        let a: Vec<_> = inst.left().base().into_iter().collect();
        let b: Vec<_> = inst.right().base().into_iter().collect();
        let excluded = all_bijections(&a, &b).all(|g| self.witnesses.iter().any(|w| !is_invariant_under(&g, w)));
        excluded
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Divider(Bijection),
    Certificate(NonexistenceCertificate),
}

/// Every bijection `a -> b` in row-major order: the image list runs through
/// the permutations of `b` lexicographically.
pub fn all_bijections<'a>(a: &'a [Element], b: &'a [Element]) -> impl Iterator<Item = Bijection> + 'a {
    let take = if a.len() == b.len() { b.len() } else { usize::MAX };
    let perms: Box<dyn Iterator<Item = Vec<&Element>>> = if take == usize::MAX {
        Box::new(std::iter::empty())
    } else {
        Box::new(b.iter().permutations(take))
    };
    perms.map(move |image| {
        Bijection::from_pairs(a.iter().cloned().zip(image.into_iter().cloned())).expect("permutation")
    })
}

/// `induced_b ∘ g ∘ induced_a⁻¹ = g`.
pub fn is_invariant_under(g: &Bijection, w: &AutomorphismPair) -> bool {
    g.iter().all(|(a, b)| {
        let a2 = w.induced_a.apply(a).expect("permutes A");
        let b2 = w.induced_b.apply(b).expect("permutes B");
        g.apply(a2) == Some(b2)
    })
}

/// Socks whose `u`-image lies over `g`'s value at their base.
fn support(inst: &SockInstance, g: &Bijection) -> usize {
    inst.u()
        .iter()
        .filter(|(x, y)| {
            let a = inst.left().project(x).expect("total");
            inst.right().project(y) == g.apply(a)
        })
        .count()
}

pub fn search_equivariant_sock_divider(inst: &SockInstance) -> Result<SearchOutcome> {
    search_with_bounds(inst, DEFAULT_BASE_BOUND, DEFAULT_TOTAL_BOUND)
}

/// Looks for a base bijection invariant under the whole automorphism group.
///
/// Candidates are tried by decreasing support (how many socks `u` sends
/// over the candidate's value at their base), then in row-major order over
/// the label-sorted bases. So when `u` respects fibers, the bijection it
/// induces comes first. Ordering only decides which witness is reported,
/// never whether one exists.
pub fn search_with_bounds(inst: &SockInstance, base_bound: usize, total_bound: usize) -> Result<SearchOutcome> {
    let size = inst.left().base_len().max(inst.right().base_len());
    if size > base_bound {
        return Err(Error::SizeBoundExceeded { size, bound: base_bound });
    }
    let group = automorphisms_with_bound(inst, total_bound)?;
    let a: Vec<_> = inst.left().base().into_iter().collect();
    let b: Vec<_> = inst.right().base().into_iter().collect();

    let mut candidates: Vec<(usize, Bijection)> = all_bijections(&a, &b)
        .map(|g| (usize::MAX - support(inst, &g), g))
        .collect();
    // stable: ties keep row-major order
    candidates.sort_by_key(|(s, _)| *s);
    if let Some((_, g)) = candidates
        .iter()
        .find(|(_, g)| group.iter().all(|w| is_invariant_under(g, w)))
    {
        return Ok(SearchOutcome::Divider(g.clone()));
    }
    let candidates: Vec<Bijection> = candidates.into_iter().map(|(_, g)| g).collect();
    Ok(SearchOutcome::Certificate(certify(&group, &candidates)))
}

/// Picks witnesses from the group that jointly exclude every candidate:
/// a single automorphism if one does (preferring those that move the fewest
/// points of `B`, then of `A`), else a greedy cover.
fn certify(group: &[AutomorphismPair], candidates: &[Bijection]) -> NonexistenceCertificate {
    let killed = |w: &AutomorphismPair| -> BTreeSet<usize> {
        candidates
            .iter()
            .enumerate()
            .filter(|(_, g)| !is_invariant_under(g, w))
            .map(|(k, _)| k)
            .collect()
    };
    let kills: Vec<BTreeSet<usize>> = group.iter().map(killed).collect();
    let moved = |p: &Bijection| p.iter().filter(|(x, y)| x != y).count();
    if let Some(k) = (0..group.len())
        .filter(|&k| kills[k].len() == candidates.len())
        .min_by_key(|&k| (moved(&group[k].induced_b), moved(&group[k].induced_a), k))
    {
        return NonexistenceCertificate {
            witnesses: vec![group[k].clone()],
        };
    }
    let mut alive: BTreeSet<usize> = (0..candidates.len()).collect();
    let mut witnesses = Vec::new();
    while !alive.is_empty() {
        let (best, _) = kills
            .iter()
            .enumerate()
            .max_by_key(|(k, s)| (s.intersection(&alive).count(), usize::MAX - k))
            .expect("group is nonempty");
        alive.retain(|k| !kills[best].contains(k));
        witnesses.push(group[best].clone());
    }
    NonexistenceCertificate { witnesses }
}

/// The search packaged as an oracle: a certificate becomes
/// [`Error::NoEquivariantDivider`].
#[derive(Clone, Copy, Debug)]
pub struct EquivariantSearchDivider {
    pub base_bound: usize,
    pub total_bound: usize,
}

impl Default for EquivariantSearchDivider {
    fn default() -> Self {
        EquivariantSearchDivider {
            base_bound: DEFAULT_BASE_BOUND,
            total_bound: DEFAULT_TOTAL_BOUND,
        }
    }
}

impl SockDivider for EquivariantSearchDivider {
    fn divide(&self, inst: &SockInstance) -> Result<Bijection> {
        match search_with_bounds(inst, self.base_bound, self.total_bound)? {
            SearchOutcome::Divider(g) => Ok(g),
            SearchOutcome::Certificate(c) => Err(Error::NoEquivariantDivider(Box::new(c))),
        }
    }
}

/// Sorts both bases by label text and pairs them positionally. Always
/// answers, and is deliberately not equivariant: it reads names.
#[derive(Clone, Copy, Debug, Default)]
pub struct CheatingDivider;

pub fn cheating_sock_divider() -> CheatingDivider {
    CheatingDivider
}

impl SockDivider for CheatingDivider {
    fn divide(&self, inst: &SockInstance) -> Result<Bijection> {
        let sorted = |set: BTreeSet<Element>| {
            let mut v: Vec<Element> = set.into_iter().collect();
            v.sort_by_cached_key(|x| x.to_string());
            v
        };
        Bijection::from_pairs(sorted(inst.left().base()).into_iter().zip(sorted(inst.right().base())))
    }
}
