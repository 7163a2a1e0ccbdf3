use std::ops::Range;

use itertools::Itertools;

use crate::bijection::Bijection;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::model::{ShoeInstance, SockBundle, SockInstance};

/// Default cap on the number of instances a single enumeration may yield.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

fn factorial_within(m: usize, budget: u64) -> Result<u64> {
    let mut acc: u64 = 1;
    for k in 2..=m as u64 {
        acc = match acc.checked_mul(k) {
            Some(v) if v <= budget => v,
            _ => {
                return Err(Error::BudgetExceeded {
                    needed: format!("{m}!"),
                    budget,
                })
            }
        };
    }
    if acc > budget {
        return Err(Error::BudgetExceeded {
            needed: format!("{m}!"),
            budget,
        });
    }
    Ok(acc)
}

pub fn left_labels(size: usize) -> Vec<Element> {
    (1..=size).map(|k| Element::atom(format!("a{k}"))).collect()
}

pub fn right_labels(size: usize) -> Vec<Element> {
    (1..=size).map(|k| Element::atom(format!("b{k}"))).collect()
}

/// Canonical left sock bundle: fiber at `a{k}` is `{x{k}_1, …, x{k}_n}`.
pub fn canonical_left_bundle(size: usize, n: usize) -> SockBundle {
    canonical_bundle(&left_labels(size), "x", n)
}

/// Canonical right sock bundle: fiber at `b{k}` is `{y{k}_1, …, y{k}_n}`.
pub fn canonical_right_bundle(size: usize, n: usize) -> SockBundle {
    canonical_bundle(&right_labels(size), "y", n)
}

fn canonical_bundle(base: &[Element], prefix: &str, n: usize) -> SockBundle {
    SockBundle::new(
        n,
        base.iter().enumerate().map(|(k, a)| {
            (
                a.clone(),
                (1..=n).map(|s| Element::atom(format!("{prefix}{}_{s}", k + 1))).collect(),
            )
        }),
    )
    .expect("canonical fibers are disjoint")
}

/// Every shoe instance over `A = {a1..ak}`, `B = {b1..bk}` and slots
/// `1..n`, one per bijection, in lexicographic order of the image list.
pub struct ShoeInstances {
    a: Vec<Element>,
    b: Vec<Element>,
    n: usize,
    perms: itertools::Permutations<Range<usize>>,
    count: u64,
}

impl ShoeInstances {
    pub fn total(&self) -> u64 {
        self.count
    }
}

impl Iterator for ShoeInstances {
    type Item = ShoeInstance;

    fn next(&mut self) -> Option<ShoeInstance> {
        let image = self.perms.next()?;
        let n = self.n;
        let h = image.into_iter().enumerate().map(|(src, dst)| {
            (
                (self.a[src / n].clone(), src % n + 1),
                (self.b[dst / n].clone(), dst % n + 1),
            )
        });
        Some(ShoeInstance::new(self.a.iter().cloned(), self.b.iter().cloned(), n, h).expect("bijection"))
    }
}

pub fn enumerate_shoe_instances(size: usize, n: usize, budget: u64) -> Result<ShoeInstances> {
    if n == 0 {
        return Err(Error::ZeroArity);
    }
    let m = size * n;
    let count = factorial_within(m, budget)?;
    Ok(ShoeInstances {
        a: left_labels(size),
        b: right_labels(size),
        n,
        perms: (0..m).permutations(m),
        count,
    })
}

/// Every sock instance over the canonical bundles of a given size and
/// arity, one per bijection of the total spaces.
pub struct SockInstances {
    left: SockBundle,
    right: SockBundle,
    sources: Vec<Element>,
    targets: Vec<Element>,
    perms: itertools::Permutations<Range<usize>>,
    count: u64,
}

impl SockInstances {
    pub fn total(&self) -> u64 {
        self.count
    }
}

impl Iterator for SockInstances {
    type Item = SockInstance;

    fn next(&mut self) -> Option<SockInstance> {
        let image = self.perms.next()?;
        let u = Bijection::from_pairs(
            image
                .into_iter()
                .enumerate()
                .map(|(src, dst)| (self.sources[src].clone(), self.targets[dst].clone())),
        )
        .expect("permutation");
        Some(SockInstance::new(self.left.clone(), self.right.clone(), u).expect("valid"))
    }
}

pub fn enumerate_sock_instances(size: usize, n: usize, budget: u64) -> Result<SockInstances> {
    if n == 0 {
        return Err(Error::ZeroArity);
    }
    let m = size * n;
    let count = factorial_within(m, budget)?;
    let left = canonical_left_bundle(size, n);
    let right = canonical_right_bundle(size, n);
    let sources = left.total_space().into_iter().collect();
    let targets = right.total_space().into_iter().collect();
    Ok(SockInstances {
        left,
        right,
        sources,
        targets,
        perms: (0..m).permutations(m),
        count,
    })
}
