//! Choice-free division of a shoe instance: from `h: A×n -> B×n` build a
//! bijection `A -> B` using nothing but the slot structure of `h`.
//!
//! Two stages:
//!
//! 1. Slot-priority proposals. Every unmatched `a` proposes along its next
//!    unused shoe `i`; the proposal reaches `b` in slot `j` where
//!    `h(a,i) = (b,j)`. Each `b` keeps the proposal with the smallest `j` and
//!    rejects the rest. Rounds are synchronous, so no ordering of `A` or `B`
//!    is ever consulted.
//! 2. Canonical repair. Proposals can stall with unmatched elements (see
//!    [`proposal_stall_witness`]). Each connected component where that
//!    happens is rebuilt from scratch: the component is numbered canonically
//!    from every possible root, the roots with the least code form one orbit
//!    of its automorphism group, and a perfect matching of the quotient by
//!    that group is lifted back. The lift is invariant under the group and
//!    only depends on the component up to isomorphism.
//!
//! Both stages are functions of the unlabeled structure, so the result
//! commutes with every relabeling of `A` and `B`.

use std::collections::BTreeSet;

use crate::bijection::Bijection;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::model::ShoeInstance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Propose {
        round: usize,
        from: Element,
        shoe: usize,
        to: Element,
        slot: usize,
    },
    Reject {
        round: usize,
        from: Element,
        to: Element,
        slot: usize,
    },
    /// Proposals stalled in this component; it was matched canonically.
    Repair { component: Vec<Element> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisionResult {
    pub matching: Bijection,
    /// Synchronous proposal rounds executed; at most `|A|·n`.
    pub rounds: usize,
    pub trace: Option<Vec<TraceEvent>>,
}

/// Result of the proposal stage alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProposalOutcome {
    /// Pairs `a -> b` held when proposals stopped.
    pub matched: Bijection,
    pub unmatched: Vec<Element>,
    pub rounds: usize,
    pub trace: Vec<TraceEvent>,
}

/// Index form of an instance. Indices follow storage order and are never
/// used to break a tie.
struct Darts<'a> {
    a: Vec<&'a Element>,
    b: Vec<&'a Element>,
    n: usize,
    /// `out[a][i] = (b, j)`, 0-based.
    out: Vec<Vec<(usize, usize)>>,
    /// `inc[b][j] = (a, i)`.
    inc: Vec<Vec<(usize, usize)>>,
}

impl<'a> Darts<'a> {
    fn new(inst: &'a ShoeInstance) -> Self {
        let a: Vec<_> = inst.a().iter().collect();
        let b: Vec<_> = inst.b().iter().collect();
        let n = inst.n();
        let b_index = |x: &Element| b.binary_search(&x).expect("validated");
        let mut out = vec![vec![(0, 0); n]; a.len()];
        let mut inc = vec![vec![(0, 0); n]; b.len()];
        for (ai, x) in a.iter().enumerate() {
            for (i, dart) in out[ai].iter_mut().enumerate() {
                let (y, j) = inst.image(x, i + 1).expect("validated");
                let bi = b_index(y);
                *dart = (bi, j - 1);
                inc[bi][j - 1] = (ai, i);
            }
        }
        Darts { a, b, n, out, inc }
    }

    /// Connected components as (A indices, B indices).
    fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut comp_a = vec![usize::MAX; self.a.len()];
        let mut comp_b = vec![usize::MAX; self.b.len()];
        let mut comps = Vec::new();
        for start in 0..self.a.len() {
            if comp_a[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let (mut ca, mut cb) = (vec![start], vec![]);
            comp_a[start] = id;
            let mut stack = vec![(true, start)];
            while let Some((is_a, v)) = stack.pop() {
                if is_a {
                    for &(bi, _) in &self.out[v] {
                        if comp_b[bi] == usize::MAX {
                            comp_b[bi] = id;
                            cb.push(bi);
                            stack.push((false, bi));
                        }
                    }
                } else {
                    for &(ai, _) in &self.inc[v] {
                        if comp_a[ai] == usize::MAX {
                            comp_a[ai] = id;
                            ca.push(ai);
                            stack.push((true, ai));
                        }
                    }
                }
            }
            comps.push((ca, cb));
        }
        comps
    }
}

/// Runs the slot-priority proposal stage only.
pub fn propose(inst: &ShoeInstance) -> ProposalOutcome {
    let darts = Darts::new(inst);
    let (held, rounds, trace) = run_proposals(&darts);
    let mut matched = Vec::new();
    let mut taken = vec![false; darts.a.len()];
    for (bi, h) in held.iter().enumerate() {
        if let Some((ai, _)) = h {
            taken[*ai] = true;
            matched.push((darts.a[*ai].clone(), darts.b[bi].clone()));
        }
    }
    let unmatched = (0..darts.a.len())
        .filter(|&ai| !taken[ai])
        .map(|ai| darts.a[ai].clone())
        .collect();
    ProposalOutcome {
        matched: Bijection::from_pairs(matched).expect("each b holds one proposal"),
        unmatched,
        rounds,
        trace,
    }
}

/// `held[b] = Some((a, j))` after proposals stop.
type Held = Vec<Option<(usize, usize)>>;

fn run_proposals(darts: &Darts) -> (Held, usize, Vec<TraceEvent>) {
    let n = darts.n;
    let mut next_shoe = vec![0usize; darts.a.len()];
    let mut held: Held = vec![None; darts.b.len()];
    let mut free: Vec<usize> = (0..darts.a.len()).collect();
    let mut rounds = 0;
    let mut trace = Vec::new();

    loop {
        let proposers: Vec<usize> = free.iter().copied().filter(|&a| next_shoe[a] < n).collect();
        if proposers.is_empty() {
            break;
        }
        rounds += 1;
        free.retain(|&a| next_shoe[a] >= n);

        // Every b sees all of this round's offers at once.
        let mut offers: Vec<Vec<(usize, usize)>> = vec![Vec::new(); darts.b.len()];
        for &a in &proposers {
            let shoe = next_shoe[a];
            let (b, j) = darts.out[a][shoe];
            trace.push(TraceEvent::Propose {
                round: rounds,
                from: darts.a[a].clone(),
                shoe: shoe + 1,
                to: darts.b[b].clone(),
                slot: j + 1,
            });
            offers[b].push((a, j));
        }
        for (b, mut incoming) in offers.into_iter().enumerate() {
            if incoming.is_empty() {
                continue;
            }
            incoming.extend(held[b]);
            // slots at one b are distinct, so this is a strict order
            incoming.sort_by_key(|&(_, j)| j);
            held[b] = Some(incoming[0]);
            for &(a, j) in &incoming[1..] {
                trace.push(TraceEvent::Reject {
                    round: rounds,
                    from: darts.a[a].clone(),
                    to: darts.b[b].clone(),
                    slot: j + 1,
                });
                next_shoe[a] += 1;
                free.push(a);
            }
        }
    }
    (held, rounds, trace)
}

/// Divides a shoe instance. See the module docs for the procedure.
pub fn shoe_divide(inst: &ShoeInstance) -> Result<DivisionResult> {
    divide(inst, false)
}

/// Like [`shoe_divide`], keeping the proposal/rejection trace.
pub fn shoe_divide_traced(inst: &ShoeInstance) -> Result<DivisionResult> {
    divide(inst, true)
}

fn divide(inst: &ShoeInstance, keep_trace: bool) -> Result<DivisionResult> {
    let darts = Darts::new(inst);
    let (held, rounds, mut trace) = run_proposals(&darts);

    let mut partner: Vec<Option<usize>> = vec![None; darts.a.len()];
    for (b, h) in held.iter().enumerate() {
        if let Some((a, _)) = h {
            partner[*a] = Some(b);
        }
    }

    for (ca, cb) in darts.components() {
        if ca.iter().all(|&a| partner[a].is_some()) {
            continue;
        }
        let repaired = canonical_component_matching(&darts, &ca);
        for (a, b) in repaired {
            partner[a] = b;
        }
        let mut component: Vec<Element> = ca.iter().map(|&a| darts.a[a].clone()).collect();
        component.extend(cb.iter().map(|&b| darts.b[b].clone()));
        component.sort();
        trace.push(TraceEvent::Repair { component });
    }

    let unmatched: Vec<Element> = partner
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_none())
        .map(|(a, _)| darts.a[a].clone())
        .collect();
    if !unmatched.is_empty() {
        return Err(Error::IncompleteMatching { unmatched });
    }
    let matching = Bijection::from_pairs(
        partner
            .iter()
            .enumerate()
            .map(|(a, b)| (darts.a[a].clone(), darts.b[b.expect("checked")].clone())),
    )
    .map_err(|_| Error::IncompleteMatching { unmatched: vec![] })?;

    Ok(DivisionResult {
        matching,
        rounds,
        trace: keep_trace.then_some(trace),
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Vertex {
    A(usize),
    B(usize),
}

/// Breadth-first numbering of a component from `root`, following darts in
/// slot order. Returns the code word and the vertex order.
fn canonical_code(darts: &Darts, root: usize, num_a: &mut [usize], num_b: &mut [usize]) -> (Vec<usize>, Vec<Vertex>) {
    let mut order = vec![Vertex::A(root)];
    let mut code = Vec::new();
    num_a[root] = 0;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        match v {
            Vertex::A(a) => {
                for &(b, j) in &darts.out[a] {
                    if num_b[b] == usize::MAX {
                        num_b[b] = order.len();
                        order.push(Vertex::B(b));
                    }
                    code.push(j);
                    code.push(num_b[b]);
                }
            }
            Vertex::B(b) => {
                for &(a, i) in &darts.inc[b] {
                    if num_a[a] == usize::MAX {
                        num_a[a] = order.len();
                        order.push(Vertex::A(a));
                    }
                    code.push(i);
                    code.push(num_a[a]);
                }
            }
        }
    }
    for v in &order {
        match *v {
            Vertex::A(a) => num_a[a] = usize::MAX,
            Vertex::B(b) => num_b[b] = usize::MAX,
        }
    }
    (code, order)
}

/// A perfect matching of one connected component that is invariant under
/// the component's automorphisms and depends only on its isomorphism type.
fn canonical_component_matching(darts: &Darts, ca: &[usize]) -> Vec<(usize, Option<usize>)> {
    let mut num_a = vec![usize::MAX; darts.a.len()];
    let mut num_b = vec![usize::MAX; darts.b.len()];

    // Roots with the least code form one orbit of the automorphism group.
    let mut best: Option<Vec<usize>> = None;
    let mut roots: Vec<Vec<Vertex>> = Vec::new();
    for &r in ca {
        let (code, order) = canonical_code(darts, r, &mut num_a, &mut num_b);
        match best.as_ref().map(|b| code.cmp(b)) {
            Some(std::cmp::Ordering::Greater) => {}
            Some(std::cmp::Ordering::Equal) => roots.push(order),
            _ => {
                best = Some(code);
                roots = vec![order];
            }
        }
    }
    let reference = &roots[0];
    let size = reference.len();

    // Canonical position of every vertex.
    let mut pos_a = vec![usize::MAX; darts.a.len()];
    let mut pos_b = vec![usize::MAX; darts.b.len()];
    for (k, v) in reference.iter().enumerate() {
        match *v {
            Vertex::A(a) => pos_a[a] = k,
            Vertex::B(b) => pos_b[b] = k,
        }
    }

    // Orbit id of a position = least position in its orbit. The automorphism
    // for root `s` maps reference[k] to s_order[k].
    let mut orbit = (0..size).collect::<Vec<_>>();
    for other in &roots[1..] {
        for (k, v) in other.iter().enumerate() {
            let image = match *v {
                Vertex::A(a) => pos_a[a],
                Vertex::B(b) => pos_b[b],
            };
            orbit[image] = orbit[image].min(k);
        }
    }
    // Every orbit meets the reference at its least member, and the group is
    // closed, so `orbit[k]` is already the minimum after one pass.

    let a_orbits: Vec<usize> = (0..size)
        .filter(|&k| matches!(reference[k], Vertex::A(_)) && orbit[k] == k)
        .collect();
    let b_orbits: Vec<usize> = (0..size)
        .filter(|&k| matches!(reference[k], Vertex::B(_)) && orbit[k] == k)
        .collect();
    debug_assert_eq!(a_orbits.len(), b_orbits.len());

    // Quotient graph: orbit reps of A, each with n darts to B-orbit ids.
    let quotient: Vec<Vec<usize>> = a_orbits
        .iter()
        .map(|&k| {
            let Vertex::A(a) = reference[k] else { unreachable!() };
            darts.out[a].iter().map(|&(b, _)| orbit[pos_b[b]]).collect()
        })
        .collect();

    // Augmenting paths over canonical positions; the quotient is regular,
    // so the result is perfect.
    let mut owner: std::collections::BTreeMap<usize, (usize, usize)> = Default::default();
    for qa in 0..quotient.len() {
        let mut visited = BTreeSet::new();
        augment(qa, &quotient, &mut owner, &mut visited);
    }
    let mut via_shoe = vec![None; quotient.len()];
    for &(qa, shoe) in owner.values() {
        via_shoe[qa] = Some(shoe);
    }

    // Lift: every a in an orbit uses the same shoe as its representative.
    let orbit_index: std::collections::BTreeMap<usize, usize> =
        a_orbits.iter().enumerate().map(|(q, &k)| (k, q)).collect();
    let mut result = Vec::with_capacity(ca.len());
    let mut used = BTreeSet::new();
    for &a in ca {
        let q = orbit_index[&orbit[pos_a[a]]];
        let b = via_shoe[q].map(|shoe| darts.out[a][shoe].0);
        let b = b.filter(|b| used.insert(*b));
        result.push((a, b));
    }
    result
}

fn augment(
    qa: usize,
    quotient: &[Vec<usize>],
    owner: &mut std::collections::BTreeMap<usize, (usize, usize)>,
    visited: &mut BTreeSet<usize>,
) -> bool {
    for (shoe, &qb) in quotient[qa].iter().enumerate() {
        if !visited.insert(qb) {
            continue;
        }
        let free = match owner.get(&qb) {
            None => true,
            Some(&(other, _)) => augment(other, quotient, owner, visited),
        };
        if free {
            owner.insert(qb, (qa, shoe));
            return true;
        }
    }
    false
}

/// True iff `m` is a bijection `A -> B` using only edges of `h`.
pub fn verify_division(inst: &ShoeInstance, m: &Bijection) -> Result<bool> {
    if m.domain().ne(inst.a().iter()) {
        return Err(Error::DomainMismatch("matching is not defined on A".into()));
    }
    if !m.has_sets(inst.a(), inst.b()) {
        return Ok(false);
    }
    Ok(m.iter().all(|(a, b)| inst.has_edge(a, b)))
}

/// One dart of `h`: `(a, shoe) -> (b, slot)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dart {
    pub a: Element,
    pub shoe: usize,
    pub b: Element,
    pub slot: usize,
}

/// An alternating A/B cycle of darts, in traversal order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DartCycle {
    pub darts: Vec<Dart>,
}

impl DartCycle {
    pub fn len(&self) -> usize {
        self.darts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.darts.is_empty()
    }

    /// Visited vertices `a, b, a', b', …`.
    pub fn vertices(&self) -> Vec<Element> {
        let mut out = Vec::with_capacity(self.darts.len());
        for (k, d) in self.darts.iter().enumerate() {
            out.push(if k % 2 == 0 { d.a.clone() } else { d.b.clone() });
        }
        out
    }
}

/// For `n = 2` every vertex has degree two, so the darts of `h` split into
/// alternating cycles. Leaves `a` by one shoe and `b` by the other slot.
pub fn divide_by_two_cycle_decomposition(inst: &ShoeInstance) -> Result<Vec<DartCycle>> {
    if inst.n() != 2 {
        return Err(Error::ArityMismatch(format!(
            "cycle decomposition needs n = 2, got {}",
            inst.n()
        )));
    }
    let mut seen = BTreeSet::new();
    let mut cycles = Vec::new();
    for a in inst.a() {
        for shoe in 1..=2 {
            if seen.contains(&(a.clone(), shoe)) {
                continue;
            }
            let mut darts = Vec::new();
            let (mut cur_a, mut cur_shoe) = (a.clone(), shoe);
            loop {
                seen.insert((cur_a.clone(), cur_shoe));
                let (b, slot) = inst.image(&cur_a, cur_shoe).expect("validated");
                let b = b.clone();
                darts.push(Dart {
                    a: cur_a.clone(),
                    shoe: cur_shoe,
                    b: b.clone(),
                    slot,
                });
                let (next_a, next_shoe) = inst.preimage(&b, 3 - slot).expect("validated");
                let next_a = next_a.clone();
                seen.insert((next_a.clone(), next_shoe));
                darts.push(Dart {
                    a: next_a.clone(),
                    shoe: next_shoe,
                    b,
                    slot: 3 - slot,
                });
                cur_a = next_a;
                cur_shoe = 3 - next_shoe;
                if cur_a == *a && cur_shoe == shoe {
                    break;
                }
            }
            cycles.push(DartCycle { darts });
        }
    }
    Ok(cycles)
}

/// An instance on which proposals alone stall: `a3`'s shoes land in the
/// second slots of `b1` and `b2`, which already hold first-slot offers from
/// `a1` and `a2`, while `b3` is only reachable by their second shoes.
pub fn proposal_stall_witness() -> ShoeInstance {
    let d = |a: &str, i, b: &str, j| ((Element::atom(a), i), (Element::atom(b), j));
    ShoeInstance::new(
        crate::element::atoms(["a1", "a2", "a3"]),
        crate::element::atoms(["b1", "b2", "b3"]),
        2,
        [
            d("a1", 1, "b1", 1),
            d("a1", 2, "b3", 1),
            d("a2", 1, "b2", 1),
            d("a2", 2, "b3", 2),
            d("a3", 1, "b1", 2),
            d("a3", 2, "b2", 2),
        ],
    )
    .expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::atoms;

    fn e(s: &str) -> Element {
        Element::atom(s)
    }

    fn d(a: &str, i: usize, b: &str, j: usize) -> ((Element, usize), (Element, usize)) {
        ((e(a), i), (e(b), j))
    }

    fn pairs(list: &[(&str, &str)]) -> Bijection {
        Bijection::from_pairs(list.iter().map(|(x, y)| (e(x), e(y)))).unwrap()
    }

    fn small_shoes() -> ShoeInstance {
        ShoeInstance::new(
            atoms(["a1", "a2"]),
            atoms(["b1", "b2"]),
            2,
            [d("a1", 1, "b1", 1), d("a1", 2, "b2", 1), d("a2", 1, "b1", 2), d("a2", 2, "b2", 2)],
        )
        .unwrap()
    }

    fn small_shoes_swapped() -> ShoeInstance {
        ShoeInstance::new(
            atoms(["a1", "a2"]),
            atoms(["b1", "b2"]),
            2,
            [d("a1", 1, "b1", 2), d("a2", 1, "b1", 1), d("a1", 2, "b2", 1), d("a2", 2, "b2", 2)],
        )
        .unwrap()
    }

    #[test]
    fn n_one_reads_off_h() {
        let inst = ShoeInstance::new(atoms(["a"]), atoms(["b"]), 1, [d("a", 1, "b", 1)]).unwrap();
        let res = shoe_divide(&inst).unwrap();
        assert_eq!(res.matching, pairs(&[("a", "b")]));
    }

    #[test]
    fn slot_two_loses() {
        let res = shoe_divide_traced(&small_shoes()).unwrap();
        assert_eq!(res.matching, pairs(&[("a1", "b1"), ("a2", "b2")]));
        assert_eq!(res.rounds, 2);
        let trace = res.trace.unwrap();
        assert!(trace.contains(&TraceEvent::Reject {
            round: 1,
            from: e("a2"),
            to: e("b1"),
            slot: 2
        }));
    }

    #[test]
    fn slot_one_wins_after_swap() {
        let res = shoe_divide(&small_shoes_swapped()).unwrap();
        assert_eq!(res.matching, pairs(&[("a2", "b1"), ("a1", "b2")]));
    }

    #[test]
    fn verify_examples() {
        let inst = small_shoes();
        assert!(verify_division(&inst, &pairs(&[("a1", "b2"), ("a2", "b1")])).unwrap());
        let split = ShoeInstance::new(
            atoms(["a1", "a2"]),
            atoms(["b1", "b2"]),
            2,
            [d("a1", 1, "b1", 1), d("a1", 2, "b1", 2), d("a2", 1, "b2", 1), d("a2", 2, "b2", 2)],
        )
        .unwrap();
        assert!(!verify_division(&split, &pairs(&[("a1", "b2"), ("a2", "b1")])).unwrap());
        assert!(matches!(
            verify_division(&split, &pairs(&[("z", "b1")])),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn empty_instance_divides_to_empty() {
        let inst = ShoeInstance::new([], [], 2, []).unwrap();
        assert!(shoe_divide(&inst).unwrap().matching.is_empty());
    }

    #[test]
    fn stall_witness_needs_repair() {
        let inst = proposal_stall_witness();
        let stalled = propose(&inst);
        assert_eq!(stalled.unmatched, vec![e("a3")]);

        let res = shoe_divide_traced(&inst).unwrap();
        assert!(verify_division(&inst, &res.matching).unwrap());
        assert!(res
            .trace
            .unwrap()
            .iter()
            .any(|t| matches!(t, TraceEvent::Repair { .. })));
    }

    #[test]
    fn cycles_of_small_shoes() {
        let cycles = divide_by_two_cycle_decomposition(&small_shoes()).unwrap();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 4);
        assert_eq!(cycles[0].vertices(), atoms(["a1", "b1", "a2", "b2"]));
    }

    #[test]
    fn double_edge_is_a_two_cycle() {
        let inst = ShoeInstance::new(atoms(["a"]), atoms(["b"]), 2, [d("a", 1, "b", 1), d("a", 2, "b", 2)]).unwrap();
        let cycles = divide_by_two_cycle_decomposition(&inst).unwrap();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 2);
    }

    #[test]
    fn disjoint_union_gives_two_cycles() {
        let inst = ShoeInstance::new(
            atoms(["a", "c"]),
            atoms(["b", "d"]),
            2,
            [d("a", 1, "b", 1), d("a", 2, "b", 2), d("c", 1, "d", 1), d("c", 2, "d", 2)],
        )
        .unwrap();
        assert_eq!(divide_by_two_cycle_decomposition(&inst).unwrap().len(), 2);
    }

    #[test]
    fn cycle_decomposition_needs_n_two() {
        let inst = ShoeInstance::new(atoms(["a"]), atoms(["b"]), 1, [d("a", 1, "b", 1)]).unwrap();
        assert!(matches!(
            divide_by_two_cycle_decomposition(&inst),
            Err(Error::ArityMismatch(_))
        ));
    }
}
