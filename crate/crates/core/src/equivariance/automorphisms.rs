use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use crate::bijection::{Bijection, Relabeling};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::model::{ShoeInstance, SockInstance};

/// Default cap on the total space of each side for brute-force searches.
pub const DEFAULT_TOTAL_BOUND: usize = 10;

/// A fiber-respecting permutation pair that fixes the instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutomorphismPair {
    pub on_left: Bijection,
    pub on_right: Bijection,
    pub induced_a: Bijection,
    pub induced_b: Bijection,
}

impl AutomorphismPair {
    pub fn identity(inst: &SockInstance) -> Self {
        AutomorphismPair {
            on_left: Bijection::identity(inst.left().total_space()),
            on_right: Bijection::identity(inst.right().total_space()),
            induced_a: Bijection::identity(inst.left().base()),
            induced_b: Bijection::identity(inst.right().base()),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.on_left.is_identity() && self.on_right.is_identity()
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &AutomorphismPair) -> Result<AutomorphismPair> {
        Ok(AutomorphismPair {
            on_left: self.on_left.compose(&first.on_left)?,
            on_right: self.on_right.compose(&first.on_right)?,
            induced_a: self.induced_a.compose(&first.induced_a)?,
            induced_b: self.induced_b.compose(&first.induced_b)?,
        })
    }

    pub fn inverse(&self) -> AutomorphismPair {
        AutomorphismPair {
            on_left: self.on_left.inverse(),
            on_right: self.on_right.inverse(),
            induced_a: self.induced_a.inverse(),
            induced_b: self.induced_b.inverse(),
        }
    }

    /// Replays the pair: both sides carry fibers to fibers as the induced
    /// maps say, and conjugating `u` gives `u` back.
    pub fn replays(&self, inst: &SockInstance) -> bool {
        let fibers_ok = |perm: &Bijection, induced: &Bijection, bundle: &crate::model::SockBundle| {
            perm.has_sets(&bundle.total_space(), &bundle.total_space())
                && induced.has_sets(&bundle.base(), &bundle.base())
                && bundle.fibers().iter().all(|(a, fiber)| {
                    let target = induced.apply(a).expect("checked");
                    fiber
                        .iter()
                        .all(|x| bundle.project(perm.apply(x).expect("checked")) == Some(target))
                })
        };
        fibers_ok(&self.on_left, &self.induced_a, inst.left())
            && fibers_ok(&self.on_right, &self.induced_b, inst.right())
            && inst
                .u()
                .conjugate(&self.on_left, &self.on_right)
                .is_ok_and(|v| v == *inst.u())
    }

    /// The base-level pair as a relabeling.
    pub fn induced(&self) -> Relabeling {
        Relabeling::new(self.induced_a.clone(), self.induced_b.clone()).expect("permutations")
    }
}

fn check_bound(size: usize, bound: usize) -> Result<()> {
    if size > bound {
        return Err(Error::SizeBoundExceeded { size, bound });
    }
    Ok(())
}

/// The full automorphism group of a sock instance, with the default bound.
pub fn automorphisms_of_sock_instance(inst: &SockInstance) -> Result<Vec<AutomorphismPair>> {
    automorphisms_with_bound(inst, DEFAULT_TOTAL_BOUND)
}

/// Brute force over fiber-respecting permutations of the left side. The
/// right side is forced (`u ∘ σ ∘ u⁻¹`), and branches where it stops
/// respecting fibers are cut as soon as they appear.
pub fn automorphisms_with_bound(inst: &SockInstance, bound: usize) -> Result<Vec<AutomorphismPair>> {
    check_bound(inst.left().total_len(), bound)?;
    check_bound(inst.right().total_len(), bound)?;

    let bases: Vec<Element> = inst.left().base().into_iter().collect();
    let mut search = SockSearch {
        inst,
        bases: &bases,
        used_a: BTreeSet::new(),
        on_left: BTreeMap::new(),
        induced_a: BTreeMap::new(),
        induced_b: BTreeMap::new(),
        used_b: BTreeSet::new(),
        found: Vec::new(),
    };
    search.extend(0);
    Ok(search.found)
}

struct SockSearch<'a> {
    inst: &'a SockInstance,
    bases: &'a [Element],
    used_a: BTreeSet<Element>,
    on_left: BTreeMap<Element, Element>,
    induced_a: BTreeMap<Element, Element>,
    induced_b: BTreeMap<Element, Element>,
    used_b: BTreeSet<Element>,
    found: Vec<AutomorphismPair>,
}

impl SockSearch<'_> {
    fn extend(&mut self, depth: usize) {
        if depth == self.bases.len() {
            self.emit();
            return;
        }
        let a = &self.bases[depth];
        let source: Vec<Element> = self.inst.left().fiber(a).expect("base").iter().cloned().collect();
        for target_base in self.bases {
            if self.used_a.contains(target_base) {
                continue;
            }
            let target: Vec<Element> = self.inst.left().fiber(target_base).expect("base").iter().cloned().collect();
            for image in target.iter().permutations(target.len()) {
                let mut added_b = Vec::new();
                let mut ok = true;
                for (x, y) in source.iter().zip(&image) {
                    let b = self.right_fiber_of(x);
                    let b2 = self.right_fiber_of(y);
                    match self.induced_b.get(&b) {
                        Some(prev) if *prev != b2 => ok = false,
                        Some(_) => {}
                        None if self.used_b.contains(&b2) => ok = false,
                        None => {
                            self.induced_b.insert(b.clone(), b2.clone());
                            self.used_b.insert(b2);
                            added_b.push(b);
                        }
                    }
                    if !ok {
                        break;
                    }
                }
                if ok {
                    for (x, y) in source.iter().zip(&image) {
                        self.on_left.insert(x.clone(), (*y).clone());
                    }
                    self.used_a.insert(target_base.clone());
                    self.induced_a.insert(a.clone(), target_base.clone());
                    self.extend(depth + 1);
                    self.used_a.remove(target_base);
                    self.induced_a.remove(a);
                    for x in &source {
                        self.on_left.remove(x);
                    }
                }
                for b in added_b {
                    let b2 = self.induced_b.remove(&b).expect("added");
                    self.used_b.remove(&b2);
                }
            }
        }
    }

    fn right_fiber_of(&self, x: &Element) -> Element {
        let y = self.inst.u().apply(x).expect("total");
        self.inst.right().project(y).expect("total").clone()
    }

    fn emit(&mut self) {
        let u = self.inst.u();
        let on_left = Bijection::from_pairs(self.on_left.clone()).expect("permutation");
        let on_right = Bijection::from_pairs(
            on_left
                .iter()
                .map(|(x, y)| (u.apply(x).expect("total").clone(), u.apply(y).expect("total").clone())),
        )
        .expect("permutation");
        // Every right fiber meets u's image, so induced_b is total here.
        self.found.push(AutomorphismPair {
            on_left,
            on_right,
            induced_a: Bijection::from_pairs(self.induced_a.clone()).expect("permutation"),
            induced_b: Bijection::from_pairs(self.induced_b.clone()).expect("permutation"),
        });
    }
}

/// Relabelings `(σ_A, σ_B)` with `apply_relabeling_shoe(inst, r) = inst`.
/// `σ_B` is forced by `σ_A` and slots must match.
pub fn shoe_automorphisms(inst: &ShoeInstance, bound: usize) -> Result<Vec<Relabeling>> {
    check_bound(inst.a().len(), bound)?;
    let a: Vec<&Element> = inst.a().iter().collect();
    let mut found = Vec::new();
    for perm in a.iter().permutations(a.len()) {
        let mut on_b: BTreeMap<Element, Element> = BTreeMap::new();
        let mut used: BTreeSet<Element> = BTreeSet::new();
        let ok = a.iter().zip(&perm).all(|(x, y)| {
            (1..=inst.n()).all(|i| {
                let (b, j) = inst.image(x, i).expect("validated");
                let (b2, j2) = inst.image(y, i).expect("validated");
                if j != j2 {
                    return false;
                }
                match on_b.get(b) {
                    Some(prev) => prev == b2,
                    None => {
                        if !used.insert(b2.clone()) {
                            return false;
                        }
                        on_b.insert(b.clone(), b2.clone());
                        true
                    }
                }
            })
        });
        if ok {
            let on_a = Bijection::from_pairs(a.iter().zip(&perm).map(|(x, y)| ((*x).clone(), (**y).clone())))
                .expect("permutation");
            found.push(Relabeling::new(on_a, Bijection::from_pairs(on_b).expect("injective"))?);
        }
    }
    Ok(found)
}
