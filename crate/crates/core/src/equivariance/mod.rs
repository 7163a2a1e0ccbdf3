//! Choice-freeness made checkable: automorphism groups, equivariance
//! reports, exhaustive instance streams and the search for symmetric sock
//! dividers.

mod automorphisms;
mod check;
mod enumerate;
mod search;

pub use automorphisms::{
    automorphisms_of_sock_instance, automorphisms_with_bound, shoe_automorphisms, AutomorphismPair,
    DEFAULT_TOTAL_BOUND,
};
pub use check::{all_relabelings, check_divider_equivariance, EquivarianceReport, Violation};
pub use enumerate::{
    canonical_left_bundle, canonical_right_bundle, enumerate_shoe_instances, enumerate_sock_instances,
    left_labels, right_labels, ShoeInstances, SockInstances, DEFAULT_BUDGET,
};
pub use search::{
    all_bijections, cheating_sock_divider, is_invariant_under, search_equivariant_sock_divider,
    search_with_bounds, CheatingDivider, EquivariantSearchDivider, NonexistenceCertificate, SearchOutcome,
    DEFAULT_BASE_BOUND,
};

use crate::element::{atoms, Element};
use crate::model::SockInstance;

/// Two pairs of socks over `{a1, a2}` and `{b1, b2}` where `u` sends one
/// sock of each left pair into each right pair:
/// `p→t, q→v, r→u, s→w`. Swapping the left pairs is a symmetry that fixes
/// both right pairs, so no base bijection is symmetric.
pub fn symmetric_socks() -> SockInstance {
    let e = Element::atom;
    SockInstance::from_raw(
        2,
        [(e("a1"), atoms(["p", "q"])), (e("a2"), atoms(["r", "s"]))],
        [(e("b1"), atoms(["t", "u"])), (e("b2"), atoms(["v", "w"]))],
        [(e("p"), e("t")), (e("q"), e("v")), (e("r"), e("u")), (e("s"), e("w"))],
    )
    .expect("valid by construction")
}
