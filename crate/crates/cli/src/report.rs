use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sockdiv::element::times_slots;
use sockdiv::equivariance::{
    automorphisms_of_sock_instance, enumerate_shoe_instances, enumerate_sock_instances, AutomorphismPair,
    NonexistenceCertificate,
};
use sockdiv::model::{is_bundle_isomorphism, trivial_bundle};
use sockdiv::reductions::{
    check_strong_witness, check_weak_witness, columns_bundle, doubled_instance, rows_bundle, rows_columns_instance,
    StrongWitness,
};
use sockdiv::shoe::{verify_division, TraceEvent};
use sockdiv::{apply_relabeling_shoe, Bijection, ChoiceAssignment, Element, Relabeling, SockBundle, SockInstance};

use crate::format::{emit, fiber_map, key_text, pairs_of, El, InstanceFile};

pub type Pairs = Vec<(El, El)>;

/// What a command produced and how it was checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// The arguments as given, program name excluded.
    pub command: Vec<String>,
    pub subcommand: String,
    pub instance: Option<InstanceDigest>,
    pub result: Outcome,
    pub checks: Vec<Check>,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDigest {
    pub kind: String,
    /// SHA-256 of the canonical file text, in hex.
    pub sha256: String,
}

impl InstanceDigest {
    pub fn of(file: &InstanceFile) -> Self {
        InstanceDigest {
            kind: file.kind().to_string(),
            sha256: sha256_hex(emit(file).as_bytes()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceLine {
    Propose {
        round: usize,
        from: El,
        shoe: usize,
        to: El,
        slot: usize,
    },
    Reject {
        round: usize,
        from: El,
        to: El,
        slot: usize,
    },
    Repair {
        component: Vec<El>,
    },
}

impl From<&TraceEvent> for TraceLine {
    fn from(e: &TraceEvent) -> Self {
        match e {
            TraceEvent::Propose {
                round,
                from,
                shoe,
                to,
                slot,
            } => TraceLine::Propose {
                round: *round,
                from: El(from.clone()),
                shoe: *shoe,
                to: El(to.clone()),
                slot: *slot,
            },
            TraceEvent::Reject { round, from, to, slot } => TraceLine::Reject {
                round: *round,
                from: El(from.clone()),
                to: El(to.clone()),
                slot: *slot,
            },
            TraceEvent::Repair { component } => TraceLine::Repair {
                component: component.iter().cloned().map(El).collect(),
            },
        }
    }
}

/// An automorphism pair on the wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub on_left: Pairs,
    pub on_right: Pairs,
    pub induced_a: Pairs,
    pub induced_b: Pairs,
}

impl From<&AutomorphismPair> for Witness {
    fn from(w: &AutomorphismPair) -> Self {
        Witness {
            on_left: pairs_of(&w.on_left),
            on_right: pairs_of(&w.on_right),
            induced_a: pairs_of(&w.induced_a),
            induced_b: pairs_of(&w.induced_b),
        }
    }
}

impl Witness {
    pub fn to_pair(&self) -> Result<AutomorphismPair, String> {
        Ok(AutomorphismPair {
            on_left: bijection(&self.on_left)?,
            on_right: bijection(&self.on_right)?,
            induced_a: bijection(&self.induced_a)?,
            induced_b: bijection(&self.induced_b)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShoeSymmetry {
    pub on_a: Pairs,
    pub on_b: Pairs,
}

/// Counts from an exhaustive run over one enumerated family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SuiteSummary {
    Shoe {
        instances: u64,
        verified: u64,
        incomplete: u64,
        /// Instances where proposals stalled and the canonical repair ran.
        repaired: u64,
        relabelings_checked: u64,
        equivariance_violations: u64,
    },
    Sock {
        instances: u64,
        dividers: u64,
        certificates: u64,
        certificates_replayed: u64,
        sockdivide_bijections: u64,
        fiber_respecting: u64,
        fiber_respecting_exact: u64,
    },
}

impl SuiteSummary {
    pub fn is_clean(&self) -> bool {
        match *self {
            SuiteSummary::Shoe {
                instances,
                verified,
                incomplete,
                equivariance_violations,
                ..
            } => verified == instances && incomplete == 0 && equivariance_violations == 0,
            SuiteSummary::Sock {
                instances,
                dividers,
                certificates,
                certificates_replayed,
                sockdivide_bijections,
                fiber_respecting,
                fiber_respecting_exact,
            } => {
                dividers + certificates == instances
                    && certificates_replayed == certificates
                    && sockdivide_bijections == instances
                    && fiber_respecting_exact == fiber_respecting
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Outcome {
    Valid {
        summary: String,
    },
    Matching {
        pairs: Pairs,
        rounds: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace: Option<Vec<TraceLine>>,
    },
    Bijection {
        pairs: Pairs,
    },
    Choice {
        selection: Pairs,
    },
    Bundle {
        n: usize,
        fibers: BTreeMap<String, Vec<El>>,
    },
    Certificate {
        witnesses: Vec<Witness>,
    },
    SockAutomorphisms {
        members: Vec<Witness>,
    },
    ShoeAutomorphisms {
        members: Vec<ShoeSymmetry>,
    },
    Divisibility {
        n: usize,
        divisible: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quotient: Option<Vec<El>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pairing: Option<Pairs>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fibers: Option<BTreeMap<String, Vec<El>>>,
    },
    Enumeration {
        family: String,
        size: usize,
        n: usize,
        count: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        instances: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        suite: Option<SuiteSummary>,
    },
}

pub fn bijection(pairs: &Pairs) -> Result<Bijection, String> {
    Bijection::from_pairs(pairs.iter().map(|(x, y)| (x.0.clone(), y.0.clone()))).map_err(|e| e.to_string())
}

pub fn bundle_outcome(bundle: &SockBundle) -> Outcome {
    Outcome::Bundle {
        n: bundle.arity(),
        fibers: fiber_map(bundle.fibers()),
    }
}

pub fn certificate_outcome(cert: &NonexistenceCertificate) -> Outcome {
    Outcome::Certificate {
        witnesses: cert.witnesses.iter().map(Witness::from).collect(),
    }
}

/// The sock instance a certificate from `subcommand` speaks about.
fn certified_instance(subcommand: &str, file: &InstanceFile) -> Result<SockInstance, String> {
    match (subcommand, file) {
        (_, InstanceFile::Sock(inst)) => Ok(inst.clone()),
        ("choose" | "search-equivariant", InstanceFile::PairFamily(family)) => Ok(rows_columns_instance(family)),
        ("mra", InstanceFile::Bundle { bundle, .. }) => doubled_instance(bundle).map_err(|e| e.to_string()),
        _ => Err(format!("no certificate expected from {subcommand} on a {} file", file.kind())),
    }
}

fn invariant(g: &Bijection, group: &[AutomorphismPair]) -> bool {
    group
        .iter()
        .all(|w| w.induced().transport(g).is_ok_and(|t| t == *g))
}

/// Re-checks a report's result against the instance it names, from the
/// serialized data alone. `Err` means the report could not be read back.
pub fn reverify(report: &RunReport, file: Option<&InstanceFile>) -> Result<bool, String> {
    if let (Some(digest), Some(file)) = (&report.instance, file) {
        if *digest != InstanceDigest::of(file) {
            return Ok(false);
        }
    }
    let sub = report.subcommand.as_str();
    let need = || file.ok_or_else(|| format!("{sub} reports need their instance"));
    match &report.result {
        Outcome::Valid { .. } => Ok(file.is_some()),
        Outcome::Matching { pairs, .. } => match need()? {
            InstanceFile::Shoe(inst) => verify_division(inst, &bijection(pairs)?).map_err(|e| e.to_string()),
            other => Err(format!("a matching needs a shoe file, not {}", other.kind())),
        },
        Outcome::Bijection { pairs } => {
            let g = bijection(pairs)?;
            match (sub, need()?) {
                ("sockdivide", InstanceFile::Sock(inst)) => Ok(g
                    .has_sets(&inst.left().base(), &inst.right().base())
                    && inst.induced_base_map().is_none_or(|induced| induced == g)),
                ("search-equivariant", InstanceFile::Sock(inst)) => {
                    let group = automorphisms_of_sock_instance(inst).map_err(|e| e.to_string())?;
                    Ok(g.has_sets(&inst.left().base(), &inst.right().base()) && invariant(&g, &group))
                }
                ("search-equivariant", InstanceFile::PairFamily(family)) => {
                    let inst = rows_columns_instance(family);
                    let group = automorphisms_of_sock_instance(&inst).map_err(|e| e.to_string())?;
                    Ok(g.has_sets(&inst.left().base(), &inst.right().base()) && invariant(&g, &group))
                }
                ("mra", InstanceFile::Bundle { bundle, .. }) => {
                    let target: BTreeSet<Element> = times_slots(bundle.base(), bundle.arity()).into_iter().collect();
                    Ok(g.has_sets(&bundle.total_space(), &target))
                }
                ("trivialize", InstanceFile::Bundle { bundle, .. }) => {
                    let target = trivial_bundle(bundle.base(), bundle.arity()).map_err(|e| e.to_string())?;
                    is_bundle_isomorphism(&g, bundle, &target).map_err(|e| e.to_string())
                }
                (sub, file) => Err(format!("no bijection expected from {sub} on a {} file", file.kind())),
            }
        }
        Outcome::Choice { selection } => match need()? {
            InstanceFile::PairFamily(family) => {
                let selection: BTreeMap<Element, Element> =
                    selection.iter().map(|(i, x)| (i.0.clone(), x.0.clone())).collect();
                Ok(ChoiceAssignment::new(selection, family.pairs()).is_ok())
            }
            other => Err(format!("a choice needs a pair-family file, not {}", other.kind())),
        },
        Outcome::Bundle { n, fibers } => match need()? {
            InstanceFile::PairFamily(family) => {
                let expected = if sub == "rows" { rows_bundle(family) } else { columns_bundle(family) };
                Ok(*n == expected.arity() && *fibers == fiber_map(expected.fibers()))
            }
            other => Err(format!("a bundle result needs a pair-family file, not {}", other.kind())),
        },
        Outcome::Certificate { witnesses } => {
            let inst = certified_instance(sub, need()?)?;
            let cert = NonexistenceCertificate {
                witnesses: witnesses.iter().map(Witness::to_pair).collect::<Result<_, _>>()?,
            };
            Ok(cert.replay(&inst))
        }
        Outcome::SockAutomorphisms { members } => {
            let inst = certified_instance("search-equivariant", need()?)?;
            let pairs: Vec<AutomorphismPair> = members.iter().map(Witness::to_pair).collect::<Result<_, _>>()?;
            let distinct: BTreeSet<String> = pairs.iter().map(|p| p.on_left.to_string()).collect();
            Ok(distinct.len() == pairs.len()
                && pairs.iter().all(|p| p.replays(&inst))
                && pairs.iter().any(AutomorphismPair::is_identity))
        }
        Outcome::ShoeAutomorphisms { members } => match need()? {
            InstanceFile::Shoe(inst) => {
                for m in members {
                    let r = Relabeling::new(bijection(&m.on_a)?, bijection(&m.on_b)?).map_err(|e| e.to_string())?;
                    if apply_relabeling_shoe(inst, &r).map_err(|e| e.to_string())? != *inst {
                        return Ok(false);
                    }
                }
                Ok(!members.is_empty())
            }
            other => Err(format!("shoe symmetries need a shoe file, not {}", other.kind())),
        },
        Outcome::Divisibility {
            n,
            divisible,
            quotient,
            pairing,
            fibers,
        } => {
            let set = divisible_set(need()?).ok_or("divisibility needs a set or bundle file")?;
            if *divisible != (*n > 0 && set.len().is_multiple_of(*n)) {
                return Ok(false);
            }
            if let (Some(q), Some(p)) = (quotient, pairing) {
                let w = StrongWitness {
                    quotient: q.iter().map(|e| e.0.clone()).collect(),
                    pairing: bijection(p)?,
                };
                return Ok(*divisible && check_strong_witness(&set, *n, &w));
            }
            if let Some(fibers) = fibers {
                let bundle = SockBundle::new(
                    *n,
                    fibers
                        .iter()
                        .map(|(k, xs)| Ok((crate::format::parse_key(k)?, xs.iter().map(|e| e.0.clone()).collect())))
                        .collect::<Result<Vec<_>, String>>()?,
                )
                .map_err(|e| e.to_string())?;
                return Ok(*divisible && check_weak_witness(&set, *n, &bundle));
            }
            Ok(!*divisible)
        }
        Outcome::Enumeration {
            family,
            size,
            n,
            count,
            instances,
            suite,
        } => {
            let expected = match family.as_str() {
                "shoe" => enumerate_shoe_instances(*size, *n, u64::MAX).map(|e| e.total()),
                "sock" => enumerate_sock_instances(*size, *n, u64::MAX).map(|e| e.total()),
                other => return Err(format!("unknown family {other}")),
            }
            .map_err(|e| e.to_string())?;
            let listed_ok = instances.as_ref().is_none_or(|list| {
                list.len() as u64 == expected
                    && list
                        .iter()
                        .all(|t| crate::format::parse_instance(t).is_ok_and(|f| f.kind() == family))
            });
            Ok(*count == expected && listed_ok && suite.as_ref().is_none_or(SuiteSummary::is_clean))
        }
    }
}

/// The set a divisibility question is about: a set file, or a bundle's
/// total space.
pub fn divisible_set(file: &InstanceFile) -> Option<BTreeSet<Element>> {
    match file {
        InstanceFile::Set(s) => Some(s.clone()),
        InstanceFile::Bundle { bundle, .. } => Some(bundle.total_space()),
        _ => None,
    }
}

fn show_pairs(pairs: &Pairs) -> String {
    let body: Vec<String> = pairs.iter().map(|(x, y)| format!("{}→{}", x.0, y.0)).collect();
    format!("{{{}}}", body.join(", "))
}

fn cycles(pairs: &Pairs) -> String {
    bijection(pairs).map(|b| b.cycle_notation()).unwrap_or_else(|e| e)
}

fn show_fibers(fibers: &BTreeMap<String, Vec<El>>) -> String {
    fibers
        .iter()
        .map(|(k, xs)| {
            let xs: Vec<String> = xs.iter().map(|e| e.0.to_string()).collect();
            format!("  {k}: {{{}}}\n", xs.join(", "))
        })
        .collect()
}

/// Human-readable rendering.
pub fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "command   sockdiv {}", report.command.join(" "));
    if let Some(d) = &report.instance {
        let _ = writeln!(out, "instance  {} sha256:{}", d.kind, d.sha256);
    }
    match &report.result {
        Outcome::Valid { summary } => {
            let _ = writeln!(out, "result    valid: {summary}");
        }
        Outcome::Matching { pairs, rounds, trace } => {
            let _ = writeln!(out, "result    matching {} after {rounds} round(s)", show_pairs(pairs));
            for line in trace.iter().flatten() {
                let text = match line {
                    TraceLine::Propose {
                        round,
                        from,
                        shoe,
                        to,
                        slot,
                    } => format!("round {round}: {} proposes along shoe {shoe} to {} slot {slot}", from.0, to.0),
                    TraceLine::Reject { round, from, to, slot } => {
                        format!("round {round}: {} rejects {} at slot {slot}", to.0, from.0)
                    }
                    TraceLine::Repair { component } => {
                        let names: Vec<String> = component.iter().map(|e| e.0.to_string()).collect();
                        format!("repair: proposals stalled on {{{}}}; matched canonically", names.join(", "))
                    }
                };
                let _ = writeln!(out, "  {text}");
            }
        }
        Outcome::Bijection { pairs } => {
            let _ = writeln!(out, "result    bijection {}", show_pairs(pairs));
        }
        Outcome::Choice { selection } => {
            let _ = writeln!(out, "result    choice {}", show_pairs(selection));
        }
        Outcome::Bundle { n, fibers } => {
            let _ = writeln!(out, "result    bundle of arity {n} over {} point(s)", fibers.len());
            out.push_str(&show_fibers(fibers));
        }
        Outcome::Certificate { witnesses } => {
            let _ = writeln!(
                out,
                "result    no equivariant divider: {} automorphism(s) leave no bijection A → B fixed",
                witnesses.len()
            );
            for w in witnesses {
                let _ = writeln!(out, "  left  {}", cycles(&w.on_left));
                let _ = writeln!(out, "  right {}", cycles(&w.on_right));
                let _ = writeln!(out, "  on A  {}", cycles(&w.induced_a));
                let _ = writeln!(out, "  on B  {}", cycles(&w.induced_b));
            }
        }
        Outcome::SockAutomorphisms { members } => {
            let _ = writeln!(out, "result    {} automorphism(s)", members.len());
            for w in members {
                let _ = writeln!(
                    out,
                    "  {} | {}   (A: {}, B: {})",
                    cycles(&w.on_left),
                    cycles(&w.on_right),
                    cycles(&w.induced_a),
                    cycles(&w.induced_b)
                );
            }
        }
        Outcome::ShoeAutomorphisms { members } => {
            let _ = writeln!(out, "result    {} symmetry(ies)", members.len());
            for m in members {
                let _ = writeln!(out, "  A: {}  B: {}", cycles(&m.on_a), cycles(&m.on_b));
            }
        }
        Outcome::Divisibility {
            n,
            divisible,
            quotient,
            pairing,
            fibers,
        } => {
            let _ = writeln!(
                out,
                "result    {} by {n}",
                if *divisible { "divisible" } else { "not divisible" }
            );
            if let (Some(q), Some(p)) = (quotient, pairing) {
                let q: Vec<String> = q.iter().map(|e| e.0.to_string()).collect();
                let _ = writeln!(out, "  quotient {{{}}}", q.join(", "));
                let _ = writeln!(out, "  pairing  {}", show_pairs(p));
            }
            if let Some(fibers) = fibers {
                out.push_str(&show_fibers(fibers));
            }
        }
        Outcome::Enumeration {
            family,
            size,
            n,
            count,
            instances,
            suite,
        } => {
            let _ = writeln!(out, "result    {count} {family} instance(s) with |A| = {size}, n = {n}");
            for t in instances.iter().flatten() {
                out.push_str("  ");
                out.push_str(t.trim_end());
                out.push('\n');
            }
            if let Some(s) = suite {
                let _ = writeln!(out, "  suite {}", serde_json::to_string(s).expect("serializes"));
            }
        }
    }
    for c in &report.checks {
        let _ = writeln!(out, "check     {}: {}", c.name, if c.passed { "ok" } else { "FAILED" });
    }
    let _ = writeln!(out, "elapsed   {:.3} ms", report.elapsed_ms);
    out
}

/// Key text of every element, for summaries.
pub fn names<'a>(xs: impl IntoIterator<Item = &'a Element>) -> String {
    xs.into_iter().map(key_text).collect::<Vec<_>>().join(", ")
}
