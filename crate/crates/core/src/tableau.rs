//! Matroid tableaux `(G, 𝒢, ℳ, 𝒳, ≃)` and their valid derivations.
//!
//! Every matroid in a tableau is identified with its isomorphism class and
//! stored under its [`CanonicalKey`]; the key decodes back to a matroid, so
//! the families only record keys and the certificate that justified each
//! placement. The equivalence is a union-find over keys whose class
//! representative is always the smallest key of the class.
//!
//! "All minors of G" enters the tableau lazily: the goal is registered as a
//! minor of itself, further minors are registered on demand, and the
//! conclusion of a case-(i) tableau marks its goal as *minor-closed*, meaning
//! every minor of it counts as a member of 𝒢.
//!
//! Each derivation appends a [`DerivationRecord`] listing the primitive
//! [`Effect`]s it applied, so [`Tableau::replay`] rebuilds the same tableau
//! from the bare goal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::canonical::{canonical_form, canonical_key, CanonicalKey, CANONICAL_CAP};
use crate::error::{Error, Result};
use crate::extension::{deflate_isomorphic_to, extensions_up_to_iso, size_bound};
use crate::invariants::{
    alpha_non_negative, rank3_contraction_witness, series_parallel_gammoid_test,
    strongly_base_orderable, verify_rank3_witness, verify_sbo_pair, SboVerdict,
    SeriesParallelOutcome,
};
use crate::matroid::{Matroid, MinorSpec};
use crate::minors::{has_minor_isomorphic_to, mk4, verify_minor_witness};
use crate::set::ElementSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Gammoids,
    Intermediates,
    Excluded,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gammoids, Family::Intermediates, Family::Excluded];

    pub fn tag(self) -> char {
        match self {
            Family::Gammoids => 'G',
            Family::Intermediates => 'M',
            Family::Excluded => 'X',
        }
    }

    pub fn from_tag(tag: &str) -> Option<Family> {
        match tag {
            "G" => Some(Family::Gammoids),
            "M" => Some(Family::Intermediates),
            "X" => Some(Family::Excluded),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Why a matroid sits in its family. Element sets refer to the element
/// numbering of the canonical matroid `key.to_matroid()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// `α ≥ 0`: a strict gammoid.
    AlphaNonNegative,
    /// `α(X) < 0`: not a strict gammoid.
    AlphaNegative(ElementSet),
    /// No minor isomorphic to `M(K₄)` or `U₂,₄`.
    NoSmallExcludedMinor,
    /// A minor isomorphic to `M(K₄)`.
    Mk4Minor(MinorSpec),
    /// `M / contract` has rank 3 and `α(set) < 0` there.
    Rank3Contraction {
        contract: ElementSet,
        set: ElementSet,
    },
    /// A basis pair admitting no strong exchange bijection.
    NotStronglyBaseOrderable(ElementSet, ElementSet),
    /// Dual of the named member of the same family.
    Dual(CanonicalKey),
    /// Equivalent to the named member of the same family.
    Equivalent(CanonicalKey),
    /// Intermediate because it is excluded.
    FromExcluded,
    /// Minor of the named gammoid.
    MinorOf(CanonicalKey),
    /// Goal of a tableau decided by case (i) through the named member.
    CaseI(CanonicalKey),
    /// Goal of a tableau decided by case (ii) through the named excluded
    /// matroid and minor.
    CaseII(CanonicalKey, MinorSpec),
    /// Goal of a tableau decided by case (iii) at the given size.
    CaseIII(usize),
    /// Inserted without justification.
    Asserted,
}

impl Certificate {
    /// Short name of the certificate kind.
    pub fn tag(&self) -> &'static str {
        match self {
            Certificate::AlphaNonNegative => "alpha-nonneg",
            Certificate::AlphaNegative(_) => "alpha-neg",
            Certificate::NoSmallExcludedMinor => "no-small-minor",
            Certificate::Mk4Minor(_) => "mk4-minor",
            Certificate::Rank3Contraction { .. } => "rank3",
            Certificate::NotStronglyBaseOrderable(..) => "not-sbo",
            Certificate::Dual(_) => "dual",
            Certificate::Equivalent(_) => "equiv",
            Certificate::FromExcluded => "from-excluded",
            Certificate::MinorOf(_) => "minor-of",
            Certificate::CaseI(_) => "case-i",
            Certificate::CaseII(..) => "case-ii",
            Certificate::CaseIII(_) => "case-iii",
            Certificate::Asserted => "asserted",
        }
    }

    /// Certificates that stand on their own rather than referring to
    /// another member.
    pub fn is_primary(&self) -> bool {
        !matches!(
            self,
            Certificate::Dual(_)
                | Certificate::Equivalent(_)
                | Certificate::FromExcluded
                | Certificate::Asserted
        )
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())?;
        match self {
            Certificate::AlphaNegative(x) => write!(f, " {}", x.bits()),
            Certificate::Mk4Minor(s) => write!(f, " {} {}", s.contract.bits(), s.delete.bits()),
            Certificate::Rank3Contraction { contract, set } => {
                write!(f, " {} {}", contract.bits(), set.bits())
            }
            Certificate::NotStronglyBaseOrderable(a, b) => write!(f, " {} {}", a.bits(), b.bits()),
            Certificate::Dual(k)
            | Certificate::Equivalent(k)
            | Certificate::MinorOf(k)
            | Certificate::CaseI(k) => {
                write!(f, " {k}")
            }
            Certificate::CaseII(k, s) => {
                write!(f, " {k} {} {}", s.contract.bits(), s.delete.bits())
            }
            Certificate::CaseIII(bound) => write!(f, " {bound}"),
            _ => Ok(()),
        }
    }
}

impl FromStr for Certificate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let bad = || Error::Invalid(format!("malformed certificate {s:?}"));
        let set = |i: usize| -> Result<ElementSet> {
            tokens
                .get(i)
                .and_then(|t| t.parse::<u32>().ok())
                .map(ElementSet)
                .ok_or_else(bad)
        };
        let key = |i: usize| -> Result<CanonicalKey> {
            CanonicalKey::from_hex(tokens.get(i).ok_or_else(bad)?)
        };
        let arity = |n: usize| {
            if tokens.len() == n + 1 {
                Ok(())
            } else {
                Err(bad())
            }
        };
        let head = *tokens.first().ok_or_else(bad)?;
        let cert = match head {
            "alpha-nonneg" => {
                arity(0)?;
                Certificate::AlphaNonNegative
            }
            "alpha-neg" => {
                arity(1)?;
                Certificate::AlphaNegative(set(1)?)
            }
            "no-small-minor" => {
                arity(0)?;
                Certificate::NoSmallExcludedMinor
            }
            "mk4-minor" => {
                arity(2)?;
                Certificate::Mk4Minor(MinorSpec::new(set(1)?, set(2)?)?)
            }
            "rank3" => {
                arity(2)?;
                Certificate::Rank3Contraction {
                    contract: set(1)?,
                    set: set(2)?,
                }
            }
            "not-sbo" => {
                arity(2)?;
                Certificate::NotStronglyBaseOrderable(set(1)?, set(2)?)
            }
            "dual" => {
                arity(1)?;
                Certificate::Dual(key(1)?)
            }
            "equiv" => {
                arity(1)?;
                Certificate::Equivalent(key(1)?)
            }
            "from-excluded" => {
                arity(0)?;
                Certificate::FromExcluded
            }
            "minor-of" => {
                arity(1)?;
                Certificate::MinorOf(key(1)?)
            }
            "case-i" => {
                arity(1)?;
                Certificate::CaseI(key(1)?)
            }
            "case-ii" => {
                arity(3)?;
                Certificate::CaseII(key(1)?, MinorSpec::new(set(2)?, set(3)?)?)
            }
            "case-iii" => {
                arity(1)?;
                Certificate::CaseIII(tokens[1].parse().map_err(|_| bad())?)
            }
            "asserted" => {
                arity(0)?;
                Certificate::Asserted
            }
            _ => return Err(bad()),
        };
        Ok(cert)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DerivationKind {
    Join,
    Sub,
    Expansion,
    Extended,
    Conclusion,
    Identified,
    Seed,
    /// Registers further minors of the goal; does not change any family.
    Register,
    /// Unchecked insertion, used to build test fixtures.
    Asserted,
}

impl DerivationKind {
    pub fn name(self) -> &'static str {
        match self {
            DerivationKind::Join => "join",
            DerivationKind::Sub => "sub",
            DerivationKind::Expansion => "expansion",
            DerivationKind::Extended => "extended",
            DerivationKind::Conclusion => "conclusion",
            DerivationKind::Identified => "identified",
            DerivationKind::Seed => "seed",
            DerivationKind::Register => "register",
            DerivationKind::Asserted => "asserted",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            DerivationKind::Join,
            DerivationKind::Sub,
            DerivationKind::Expansion,
            DerivationKind::Extended,
            DerivationKind::Conclusion,
            DerivationKind::Identified,
            DerivationKind::Seed,
            DerivationKind::Register,
            DerivationKind::Asserted,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

/// A primitive state change. Applying an effect twice has no further effect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Effect {
    /// Back to the bare goal tableau.
    Reset,
    Register(CanonicalKey),
    RegisterMinor(CanonicalKey),
    Add(Family, CanonicalKey, Certificate),
    Union(CanonicalKey, CanonicalKey),
    Close(CanonicalKey),
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effect::Reset => f.write_str("reset"),
            Effect::Register(k) => write!(f, "register {k}"),
            Effect::RegisterMinor(k) => write!(f, "minor {k}"),
            Effect::Add(fam, k, c) => write!(f, "add {} {k} {c}", fam.tag()),
            Effect::Union(a, b) => write!(f, "union {a} {b}"),
            Effect::Close(k) => write!(f, "close {k}"),
        }
    }
}

impl FromStr for Effect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("malformed effect {s:?}"));
        let mut parts = s.splitn(2, ' ');
        let head = parts.next().ok_or_else(bad)?;
        let rest = parts.next().unwrap_or("");
        let keys = |n: usize| -> Result<Vec<CanonicalKey>> {
            let ks: Vec<&str> = rest.split_whitespace().collect();
            if ks.len() != n {
                return Err(bad());
            }
            ks.into_iter().map(CanonicalKey::from_hex).collect()
        };
        Ok(match head {
            "reset" if rest.is_empty() => Effect::Reset,
            "register" => Effect::Register(keys(1)?.remove(0)),
            "minor" => Effect::RegisterMinor(keys(1)?.remove(0)),
            "close" => Effect::Close(keys(1)?.remove(0)),
            "union" => {
                let mut ks = keys(2)?;
                let b = ks.pop().unwrap();
                Effect::Union(ks.pop().unwrap(), b)
            }
            "add" => {
                let mut p = rest.splitn(3, ' ');
                let fam = p.next().and_then(Family::from_tag).ok_or_else(bad)?;
                let key = CanonicalKey::from_hex(p.next().ok_or_else(bad)?)?;
                let cert = p.next().ok_or_else(bad)?.parse()?;
                Effect::Add(fam, key, cert)
            }
            _ => return Err(bad()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationRecord {
    pub kind: DerivationKind,
    /// One line of text naming the rule and its parameters.
    pub justification: String,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Gammoid,
    NotGammoid,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Case (i): a member of 𝒢 equivalent to the goal.
    Gammoid { member: CanonicalKey },
    /// Case (ii): an excluded matroid and a minor of the goal isomorphic to
    /// it, in the goal's own element numbering.
    ExcludedMinor {
        excluded: CanonicalKey,
        spec: MinorSpec,
    },
    /// Case (iii): every extension class of the given size lies in ℳ.
    Exhaustion { size: usize, classes: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub decision: Decision,
    pub witness: Witness,
}

impl Verdict {
    /// Which case of decisiveness produced the verdict: 1, 2 or 3.
    pub fn case(&self) -> u8 {
        match self.witness {
            Witness::Gammoid { .. } => 1,
            Witness::ExcludedMinor { .. } => 2,
            Witness::Exhaustion { .. } => 3,
        }
    }
}

#[derive(Debug)]
struct Known {
    matroid: Arc<Matroid>,
    dual: CanonicalKey,
}

/// Subsets of a tableau's families and equivalences, for [`sub_tableau`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Selection {
    pub gammoids: BTreeSet<CanonicalKey>,
    pub intermediates: BTreeSet<CanonicalKey>,
    pub excluded: BTreeSet<CanonicalKey>,
    pub closed: BTreeSet<CanonicalKey>,
    /// Pairs to keep equivalent; each must already be equivalent.
    pub equivalences: Vec<(CanonicalKey, CanonicalKey)>,
}

impl Selection {
    /// Selects everything in `t`.
    pub fn full(t: &Tableau) -> Self {
        Selection {
            gammoids: t.family(Family::Gammoids).keys().cloned().collect(),
            intermediates: t.family(Family::Intermediates).keys().cloned().collect(),
            excluded: t.family(Family::Excluded).keys().cloned().collect(),
            closed: t.closed.clone(),
            equivalences: t.equivalence_pairs(),
        }
    }

    fn family(&self, fam: Family) -> &BTreeSet<CanonicalKey> {
        match fam {
            Family::Gammoids => &self.gammoids,
            Family::Intermediates => &self.intermediates,
            Family::Excluded => &self.excluded,
        }
    }
}

/// Key sets and partition of a tableau, ignoring goal, certificates and log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summary {
    pub gammoids: BTreeSet<CanonicalKey>,
    pub intermediates: BTreeSet<CanonicalKey>,
    pub excluded: BTreeSet<CanonicalKey>,
    pub closed: BTreeSet<CanonicalKey>,
    pub partition: BTreeSet<BTreeSet<CanonicalKey>>,
}

#[derive(Clone)]
pub struct Tableau {
    goal: Matroid,
    goal_key: CanonicalKey,
    /// Canonical index to goal index.
    to_goal: Vec<usize>,
    known: BTreeMap<CanonicalKey, Arc<Known>>,
    goal_minors: BTreeSet<CanonicalKey>,
    closed: BTreeSet<CanonicalKey>,
    families: [BTreeMap<CanonicalKey, Certificate>; 3],
    root: BTreeMap<CanonicalKey, CanonicalKey>,
    classes: BTreeMap<CanonicalKey, BTreeSet<CanonicalKey>>,
    log: Vec<DerivationRecord>,
}

impl fmt::Debug for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tableau")
            .field("goal", &self.goal_key)
            .field("gammoids", &self.families[0].len())
            .field("intermediates", &self.families[1].len())
            .field("excluded", &self.families[2].len())
            .field("classes", &self.classes.len())
            .field("log", &self.log.len())
            .finish()
    }
}

impl PartialEq for Tableau {
    /// Equal goals (up to isomorphism), registered keys, families with
    /// certificates and partitions. Logs are not compared.
    fn eq(&self, other: &Self) -> bool {
        self.goal_key == other.goal_key
            && self.known.keys().eq(other.known.keys())
            && self.goal_minors == other.goal_minors
            && self.closed == other.closed
            && self.families == other.families
            && self.root == other.root
    }
}

impl Tableau {
    /// The bare tableau `(G, ∅, ∅, ∅, ⟨⟩)`.
    pub fn new(goal: Matroid) -> Result<Self> {
        let (goal_key, perm) = canonical_form(&goal)?;
        let mut to_goal = vec![0; perm.len()];
        for (e, &p) in perm.iter().enumerate() {
            to_goal[p] = e;
        }
        let mut t = Tableau {
            goal,
            goal_key: goal_key.clone(),
            to_goal,
            known: BTreeMap::new(),
            goal_minors: BTreeSet::new(),
            closed: BTreeSet::new(),
            families: Default::default(),
            root: BTreeMap::new(),
            classes: BTreeMap::new(),
            log: Vec::new(),
        };
        t.apply(&Effect::RegisterMinor(goal_key))?;
        Ok(t)
    }

    /// Rebuilds a tableau from the bare goal by applying every logged effect.
    pub fn replay(goal: Matroid, log: &[DerivationRecord]) -> Result<Self> {
        let mut t = Tableau::new(goal)?;
        for record in log {
            for e in &record.effects {
                t.apply(e)?;
            }
        }
        t.log = log.to_vec();
        Ok(t)
    }

    pub fn goal(&self) -> &Matroid {
        &self.goal
    }

    pub fn goal_key(&self) -> &CanonicalKey {
        &self.goal_key
    }

    pub fn log(&self) -> &[DerivationRecord] {
        &self.log
    }

    pub(crate) fn set_log(&mut self, log: Vec<DerivationRecord>) {
        self.log = log;
    }

    pub fn family(&self, fam: Family) -> &BTreeMap<CanonicalKey, Certificate> {
        &self.families[fam.index()]
    }

    pub fn contains(&self, fam: Family, key: &CanonicalKey) -> bool {
        self.families[fam.index()].contains_key(key)
    }

    pub fn certificate(&self, fam: Family, key: &CanonicalKey) -> Option<&Certificate> {
        self.families[fam.index()].get(key)
    }

    pub fn is_known(&self, key: &CanonicalKey) -> bool {
        self.known.contains_key(key)
    }

    pub fn known_keys(&self) -> impl Iterator<Item = &CanonicalKey> {
        self.known.keys()
    }

    pub fn goal_minors(&self) -> &BTreeSet<CanonicalKey> {
        &self.goal_minors
    }

    pub fn closed(&self) -> &BTreeSet<CanonicalKey> {
        &self.closed
    }

    /// The canonical matroid of a registered key.
    pub fn matroid(&self, key: &CanonicalKey) -> Option<Arc<Matroid>> {
        self.known.get(key).map(|k| k.matroid.clone())
    }

    pub fn dual_key(&self, key: &CanonicalKey) -> Option<&CanonicalKey> {
        self.known.get(key).map(|k| &k.dual)
    }

    /// Representative (smallest key) of the class of `key`.
    pub fn find(&self, key: &CanonicalKey) -> CanonicalKey {
        self.root.get(key).cloned().unwrap_or_else(|| key.clone())
    }

    pub fn equivalent(&self, a: &CanonicalKey, b: &CanonicalKey) -> bool {
        a == b || (self.is_known(a) && self.is_known(b) && self.find(a) == self.find(b))
    }

    pub fn class_of(&self, key: &CanonicalKey) -> BTreeSet<CanonicalKey> {
        match self.classes.get(&self.find(key)) {
            Some(c) => c.clone(),
            None => BTreeSet::from([key.clone()]),
        }
    }

    pub fn classes(&self) -> impl Iterator<Item = &BTreeSet<CanonicalKey>> {
        self.classes.values()
    }

    /// `(representative, member)` for every member that is not its own
    /// representative, in key order.
    pub fn equivalence_pairs(&self) -> Vec<(CanonicalKey, CanonicalKey)> {
        let mut pairs = Vec::new();
        for (rep, members) in &self.classes {
            for m in members {
                if m != rep {
                    pairs.push((rep.clone(), m.clone()));
                }
            }
        }
        pairs
    }

    pub fn summary(&self) -> Summary {
        let keys = |fam: Family| self.family(fam).keys().cloned().collect();
        Summary {
            gammoids: keys(Family::Gammoids),
            intermediates: keys(Family::Intermediates),
            excluded: keys(Family::Excluded),
            closed: self.closed.clone(),
            partition: self.classes.values().cloned().collect(),
        }
    }

    /// Counts that only grow along valid updates; a change in any of them
    /// means the tableau gained information.
    pub fn progress(&self) -> [usize; 6] {
        [
            self.families[0].len(),
            self.families[1].len(),
            self.families[2].len(),
            self.known.len(),
            self.known.len() - self.classes.len(),
            self.closed.len(),
        ]
    }

    /// Maps a set of the canonical goal matroid to the goal's numbering.
    pub fn to_goal_set(&self, x: ElementSet) -> ElementSet {
        x.permute(&self.to_goal)
    }

    fn register(&mut self, key: &CanonicalKey) -> Result<bool> {
        if self.known.contains_key(key) {
            return Ok(false);
        }
        let matroid = key.to_matroid()?;
        let dual = canonical_key(&matroid.dual())?;
        self.known.insert(
            key.clone(),
            Arc::new(Known {
                matroid: Arc::new(matroid),
                dual,
            }),
        );
        self.root.insert(key.clone(), key.clone());
        self.classes
            .insert(key.clone(), BTreeSet::from([key.clone()]));
        Ok(true)
    }

    fn union(&mut self, a: &CanonicalKey, b: &CanonicalKey) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
        let moved = self.classes.remove(&gone).unwrap_or_default();
        for m in &moved {
            self.root.insert(m.clone(), keep.clone());
        }
        self.classes.entry(keep).or_default().extend(moved);
        true
    }

    /// Applies one effect; returns whether the state changed.
    fn apply(&mut self, effect: &Effect) -> Result<bool> {
        Ok(match effect {
            Effect::Reset => {
                let bare = Tableau::new(self.goal.clone())?;
                let changed = *self != bare;
                let log = std::mem::take(&mut self.log);
                *self = bare;
                self.log = log;
                changed
            }
            Effect::Register(k) => self.register(k)?,
            Effect::RegisterMinor(k) => {
                let a = self.register(k)?;
                self.goal_minors.insert(k.clone()) || a
            }
            Effect::Add(fam, k, cert) => {
                let a = self.register(k)?;
                let slot = &mut self.families[fam.index()];
                if slot.contains_key(k) {
                    a
                } else {
                    slot.insert(k.clone(), cert.clone());
                    true
                }
            }
            Effect::Union(a, b) => {
                let ra = self.register(a)?;
                let rb = self.register(b)?;
                self.union(a, b) || ra || rb
            }
            Effect::Close(k) => {
                let a = self.register(k)?;
                self.closed.insert(k.clone()) || a
            }
        })
    }

    /// Applies `effects`, keeping the ones that changed something, and logs
    /// them as one derivation.
    fn commit(
        &mut self,
        kind: DerivationKind,
        justification: impl Into<String>,
        effects: Vec<Effect>,
    ) -> Result<()> {
        let mut kept = Vec::new();
        for e in effects {
            if self.apply(&e)? {
                kept.push(e);
            }
        }
        let justification = justification.into().replace(['\n', '\r'], " ");
        self.log.push(DerivationRecord {
            kind,
            justification,
            effects: kept,
        });
        Ok(())
    }

    /// Same tableau with a different goal; the new goal is registered as a
    /// minor of itself and the old goal's minors stay merely registered.
    pub fn with_goal(&self, goal: Matroid) -> Result<Tableau> {
        let mut t = Tableau::new(goal)?;
        let effects = self.state_effects(false);
        for e in &effects {
            t.apply(e)?;
        }
        Ok(t)
    }

    /// Effects that rebuild the state of `self` on top of another tableau.
    fn state_effects(&self, include_minors: bool) -> Vec<Effect> {
        let mut effects = Vec::new();
        for k in self.known.keys() {
            if include_minors && self.goal_minors.contains(k) {
                effects.push(Effect::RegisterMinor(k.clone()));
            } else {
                effects.push(Effect::Register(k.clone()));
            }
        }
        for fam in Family::ALL {
            for (k, c) in self.family(fam) {
                effects.push(Effect::Add(fam, k.clone(), c.clone()));
            }
        }
        for k in &self.closed {
            effects.push(Effect::Close(k.clone()));
        }
        for (a, b) in self.equivalence_pairs() {
            effects.push(Effect::Union(a, b));
        }
        effects
    }

    /// Registers `minor`, which must be isomorphic to a minor of the goal.
    pub fn register_minor(&self, minor: &Matroid) -> Result<Tableau> {
        let key = canonical_key(minor)?;
        if !self.goal_minors.contains(&key) {
            let canon = key.to_matroid()?;
            let goal = self.matroid(&self.goal_key).expect("goal is registered");
            if has_minor_isomorphic_to(&goal, &canon)?.is_none() {
                return Err(Error::Invalid("not a minor of the goal".into()));
            }
        }
        let mut t = self.clone();
        t.commit(
            DerivationKind::Register,
            format!("{key} is a minor of the goal"),
            vec![Effect::RegisterMinor(key)],
        )?;
        Ok(t)
    }

    /// Adds `m` to `fam` without any check. Only meant for building fixtures.
    pub fn insert_unchecked(&self, fam: Family, m: &Matroid) -> Result<Tableau> {
        let key = canonical_key(m)?;
        let mut t = self.clone();
        t.commit(
            DerivationKind::Asserted,
            format!("unchecked insertion into {}", fam.tag()),
            vec![Effect::Add(fam, key, Certificate::Asserted)],
        )?;
        Ok(t)
    }

    /// Merges two classes without any check. Only meant for building fixtures.
    pub fn union_unchecked(&self, a: &Matroid, b: &Matroid) -> Result<Tableau> {
        let (ka, kb) = (canonical_key(a)?, canonical_key(b)?);
        let mut t = self.clone();
        t.commit(
            DerivationKind::Asserted,
            "unchecked equivalence",
            vec![Effect::Union(ka, kb)],
        )?;
        Ok(t)
    }

    pub(crate) fn import_state(
        goal: Matroid,
        known: &[CanonicalKey],
        minors: &[CanonicalKey],
        entries: &[(Family, CanonicalKey, Certificate)],
        closed: &[CanonicalKey],
        equivalences: &[(CanonicalKey, CanonicalKey)],
    ) -> Result<Tableau> {
        let mut t = Tableau::new(goal)?;
        for k in known {
            t.apply(&Effect::Register(k.clone()))?;
        }
        for k in minors {
            t.apply(&Effect::RegisterMinor(k.clone()))?;
        }
        for (fam, k, c) in entries {
            t.apply(&Effect::Add(*fam, k.clone(), c.clone()))?;
        }
        for k in closed {
            t.apply(&Effect::Close(k.clone()))?;
        }
        for (a, b) in equivalences {
            t.apply(&Effect::Union(a.clone(), b.clone()))?;
        }
        Ok(t)
    }
}

/// The joint tableau: goal of `ts[0]`, unions of the families, and the
/// equivalence generated by all input equivalences.
pub fn join(ts: &[&Tableau]) -> Result<Tableau> {
    let (first, rest) = ts
        .split_first()
        .ok_or_else(|| Error::Invalid("join needs at least one tableau".into()))?;
    let mut t = (*first).clone();
    if rest.is_empty() {
        return Ok(t);
    }
    let mut effects = Vec::new();
    for other in rest {
        effects.extend(other.state_effects(false));
    }
    let goals: Vec<String> = rest.iter().map(|o| o.goal_key.to_string()).collect();
    t.commit(
        DerivationKind::Join,
        format!("join with tableaux for {}", goals.join(", ")),
        effects,
    )?;
    Ok(t)
}

/// The sub-tableau picked by `sel`.
pub fn sub_tableau(t: &Tableau, sel: &Selection) -> Result<Tableau> {
    for fam in Family::ALL {
        if let Some(k) = sel.family(fam).iter().find(|k| !t.contains(fam, k)) {
            return Err(Error::InvalidSelection(format!(
                "{k} is not in family {}",
                fam.tag()
            )));
        }
    }
    if let Some(k) = sel.closed.iter().find(|k| !t.closed.contains(*k)) {
        return Err(Error::InvalidSelection(format!("{k} is not minor-closed")));
    }
    for (a, b) in &sel.equivalences {
        if !t.equivalent(a, b) {
            return Err(Error::InvalidSelection(format!(
                "{a} and {b} are not equivalent"
            )));
        }
    }
    let mut effects = vec![Effect::Reset];
    for k in t.known.keys() {
        effects.push(if t.goal_minors.contains(k) {
            Effect::RegisterMinor(k.clone())
        } else {
            Effect::Register(k.clone())
        });
    }
    for fam in Family::ALL {
        for k in sel.family(fam) {
            effects.push(Effect::Add(fam, k.clone(), t.family(fam)[k].clone()));
        }
    }
    effects.extend(sel.closed.iter().cloned().map(Effect::Close));
    effects.extend(
        sel.equivalences
            .iter()
            .map(|(a, b)| Effect::Union(a.clone(), b.clone())),
    );
    let mut out = t.clone();
    out.commit(DerivationKind::Sub, "sub-tableau by selection", effects)?;
    Ok(out)
}

/// The expansion tableau: 𝒢 and 𝒳 absorb the classes of their members.
pub fn expansion(t: &Tableau) -> Result<Tableau> {
    let mut effects = Vec::new();
    for fam in [Family::Gammoids, Family::Excluded] {
        for m in t.family(fam).keys() {
            for k in t.class_of(m) {
                if !t.contains(fam, &k) {
                    effects.push(Effect::Add(fam, k, Certificate::Equivalent(m.clone())));
                }
            }
        }
    }
    let mut out = t.clone();
    out.commit(
        DerivationKind::Expansion,
        "expansion by equivalence classes",
        effects,
    )?;
    Ok(out)
}

/// The extended tableau: duals join 𝒢 and 𝒳, 𝒳 joins ℳ, and every
/// registered matroid is merged with its dual when that is registered too.
pub fn extended(t: &Tableau) -> Result<Tableau> {
    let mut out = t.clone();
    let mut effects = Vec::new();
    for fam in [Family::Gammoids, Family::Excluded] {
        for m in t.family(fam).keys() {
            let d = t.dual_key(m).expect("members are registered").clone();
            if !t.contains(fam, &d) {
                effects.push(Effect::Add(fam, d, Certificate::Dual(m.clone())));
            }
        }
    }
    out.commit(DerivationKind::Extended, "extended tableau", effects)?;
    // Continue in the same record: ℳ ⊇ 𝒳′ and M ≃ M*.
    let mut more = Vec::new();
    for m in out.family(Family::Excluded).keys() {
        if !out.contains(Family::Intermediates, m) {
            more.push(Effect::Add(
                Family::Intermediates,
                m.clone(),
                Certificate::FromExcluded,
            ));
        }
    }
    for (k, known) in &out.known {
        if out.known.contains_key(&known.dual) && !out.equivalent(k, &known.dual) {
            more.push(Effect::Union(k.clone(), known.dual.clone()));
        }
    }
    let record = out.log.pop().expect("just committed");
    out.commit(DerivationKind::Extended, record.justification, more)?;
    let merged = out.log.last_mut().expect("just committed");
    let mut effects = record.effects;
    effects.append(&mut merged.effects);
    merged.effects = effects;
    Ok(out)
}

/// The usual update `[[t ∪ u]_≡]_≃`.
pub fn update(t: &Tableau, u: &Tableau) -> Result<Tableau> {
    expansion(&extended(&join(&[t, u])?)?)
}

/// Default number of extension classes examined by the case-(iii) test.
pub const DEFAULT_EXHAUSTION_BUDGET: usize = 100_000;

/// Decisiveness with the default case-(iii) budget.
pub fn is_decisive(t: &Tableau) -> Option<Verdict> {
    is_decisive_with(t, DEFAULT_EXHAUSTION_BUDGET)
}

/// Checks cases (i), (ii) and (iii) in this order. Case (iii) gives up
/// ("not decisive") when the size bound exceeds the canonical cap, when ℳ
/// holds nothing of that size, or after `budget` classes.
pub fn is_decisive_with(t: &Tableau, budget: usize) -> Option<Verdict> {
    if let Some(member) = case_one_member(t) {
        return Some(Verdict {
            decision: Decision::Gammoid,
            witness: Witness::Gammoid { member },
        });
    }
    if let Some((excluded, spec)) = case_two(t) {
        return Some(Verdict {
            decision: Decision::NotGammoid,
            witness: Witness::ExcludedMinor { excluded, spec },
        });
    }
    case_three(t, budget).map(|(size, classes)| Verdict {
        decision: Decision::NotGammoid,
        witness: Witness::Exhaustion { size, classes },
    })
}

/// The member of 𝒢 in the goal's class with the most direct certificate,
/// then the smallest.
fn case_one_member(t: &Tableau) -> Option<CanonicalKey> {
    let gammoids = t.family(Family::Gammoids);
    let best = t
        .class_of(&t.goal_key)
        .into_iter()
        .filter_map(|k| gammoids.get(&k).map(|c| (k, c)))
        .min_by_key(|(k, c)| {
            let rank = match c {
                c if c.is_primary() => 0,
                Certificate::Dual(_) => 1,
                _ => 2,
            };
            (rank, k.size(), k.clone())
        })
        .map(|(k, _)| k);
    if best.is_some() {
        return best;
    }
    let goal = t.matroid(&t.goal_key)?;
    for c in &t.closed {
        if c.size() < goal.size() {
            continue;
        }
        let closed = t.matroid(c)?;
        if matches!(has_minor_isomorphic_to(&closed, &goal), Ok(Some(_))) {
            return Some(t.goal_key.clone());
        }
    }
    None
}

fn case_two(t: &Tableau) -> Option<(CanonicalKey, MinorSpec)> {
    let goal = t.matroid(&t.goal_key)?;
    let mut excluded: Vec<&CanonicalKey> = t
        .family(Family::Excluded)
        .keys()
        .filter(|k| k.size() <= goal.size() && k.rank() <= goal.rank())
        .collect();
    excluded.sort_by_key(|k| (k.size(), (*k).clone()));
    for x in excluded {
        let pattern = t.matroid(x)?;
        if let Ok(Some(spec)) = has_minor_isomorphic_to(&goal, &pattern) {
            let spec = MinorSpec {
                contract: t.to_goal_set(spec.contract),
                delete: t.to_goal_set(spec.delete),
            };
            return Some((x.clone(), spec));
        }
    }
    None
}

fn case_three(t: &Tableau, budget: usize) -> Option<(usize, usize)> {
    let goal = t.matroid(&t.goal_key)?;
    let bound = size_bound(&goal);
    if bound > CANONICAL_CAP {
        return None;
    }
    let intermediates = t.family(Family::Intermediates);
    if !intermediates.keys().any(|k| k.size() == bound) {
        return None;
    }
    let mut classes = 0;
    for n in extensions_up_to_iso(&goal, bound) {
        let n = n.ok()?;
        classes += 1;
        if classes > budget || !intermediates.contains_key(&canonical_key(&n).ok()?) {
            return None;
        }
    }
    Some((bound, classes))
}

/// The conclusion tableau of a decisive tableau.
pub fn conclusion(t: &Tableau) -> Result<Tableau> {
    let verdict = is_decisive(t).ok_or(Error::NotDecisive)?;
    conclusion_with(t, &verdict)
}

/// The conclusion tableau for an already computed verdict of `t`.
pub fn conclusion_with(t: &Tableau, verdict: &Verdict) -> Result<Tableau> {
    let goal = t.goal_key.clone();
    let effects = match &verdict.witness {
        Witness::Gammoid { member } => vec![
            Effect::Add(
                Family::Gammoids,
                goal.clone(),
                Certificate::CaseI(member.clone()),
            ),
            Effect::Close(goal),
        ],
        Witness::ExcludedMinor { excluded, spec } => {
            let inverse = invert(&t.to_goal);
            let spec = MinorSpec {
                contract: spec.contract.permute(&inverse),
                delete: spec.delete.permute(&inverse),
            };
            vec![Effect::Add(
                Family::Excluded,
                goal,
                Certificate::CaseII(excluded.clone(), spec),
            )]
        }
        Witness::Exhaustion { size, .. } => {
            vec![Effect::Add(
                Family::Excluded,
                goal,
                Certificate::CaseIII(*size),
            )]
        }
    };
    let mut out = t.clone();
    out.commit(
        DerivationKind::Conclusion,
        format!("conclusion by case {}", roman(verdict.case())),
        effects,
    )?;
    Ok(out)
}

fn roman(case: u8) -> &'static str {
    ["", "i", "ii", "iii"][case as usize]
}

fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// The identified tableau `t(m1 ≃ m2)`; one of the two must be a deflate of
/// the other.
pub fn identify(t: &Tableau, m1: &CanonicalKey, m2: &CanonicalKey) -> Result<Tableau> {
    for k in [m1, m2] {
        if !t.is_known(k) {
            return Err(Error::UnknownMatroid);
        }
    }
    if t.equivalent(m1, m2) {
        return Ok(t.clone());
    }
    let a = t.matroid(m1).expect("known");
    let b = t.matroid(m2).expect("known");
    let (big, small, big_key, small_key) = if a.size() >= b.size() {
        (a, b, m1, m2)
    } else {
        (b, a, m2, m1)
    };
    let cert = deflate_isomorphic_to(&big, &small)?.ok_or(Error::NotADeflate)?;
    let order: Vec<String> = cert.removal_order.iter().map(|e| e.to_string()).collect();
    let mut out = t.clone();
    out.commit(
        DerivationKind::Identified,
        format!(
            "{small_key} is the deflate of {big_key} on {} re-adding [{}]",
            cert.kept,
            order.join(" ")
        ),
        vec![Effect::Union(small_key.clone(), big_key.clone())],
    )?;
    Ok(out)
}

/// Adds `m` to 𝒢 as a minor of the 𝒢 member `n`.
pub fn minor_of_gammoid(t: &Tableau, n: &CanonicalKey, m: &CanonicalKey) -> Result<Tableau> {
    if !t.contains(Family::Gammoids, n) {
        return Err(Error::Invalid("not a member of the gammoid family".into()));
    }
    let (big, small) = match (t.matroid(n), t.matroid(m)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::UnknownMatroid),
    };
    if has_minor_isomorphic_to(&big, &small)?.is_none() {
        return Err(Error::Invalid("not a minor of the gammoid".into()));
    }
    let mut out = t.clone();
    out.commit(
        DerivationKind::Conclusion,
        format!("minor of the gammoid {n}"),
        vec![Effect::Add(
            Family::Gammoids,
            m.clone(),
            Certificate::MinorOf(n.clone()),
        )],
    )?;
    Ok(out)
}

/// `(m, fam ∋ m [and m*], ∅, ⟨⟩)` with the given certificate on `m`.
pub fn seed_with(
    m: &Matroid,
    fam: Family,
    with_dual: bool,
    cert: Certificate,
    why: &str,
) -> Result<Tableau> {
    let mut t = Tableau::new(m.clone())?;
    let key = t.goal_key.clone();
    let mut effects = vec![Effect::Add(fam, key.clone(), cert)];
    if with_dual {
        let d = t.dual_key(&key).expect("goal registered").clone();
        effects.push(Effect::Add(fam, d, Certificate::Dual(key)));
    }
    t.commit(DerivationKind::Seed, why, effects)?;
    Ok(t)
}

/// The strongest seed tableau for `m`, trying in order: `α ≥ 0`, rank 3
/// with `α < 0`, excluded minors, strong base-orderability, and finally
/// ℳ = {M}.
pub fn seed_tableau(m: &Matroid) -> Result<Tableau> {
    let key = canonical_key(m)?;
    let cm = key.to_matroid()?;
    let negative = match alpha_non_negative(&cm) {
        None => {
            return seed_with(
                m,
                Family::Gammoids,
                true,
                Certificate::AlphaNonNegative,
                "alpha is non-negative",
            );
        }
        Some(x) => x,
    };
    if cm.rank() == 3 {
        return seed_with(
            m,
            Family::Excluded,
            true,
            Certificate::Rank3Contraction {
                contract: ElementSet::EMPTY,
                set: negative,
            },
            "rank 3 and alpha is negative",
        );
    }
    match series_parallel_gammoid_test(&cm) {
        SeriesParallelOutcome::Gammoid => {
            return seed_with(
                m,
                Family::Gammoids,
                true,
                Certificate::NoSmallExcludedMinor,
                "no M(K4) and no U(2,4) minor",
            );
        }
        SeriesParallelOutcome::NotGammoid(spec) => {
            return seed_with(
                m,
                Family::Excluded,
                true,
                Certificate::Mk4Minor(spec),
                "M(K4) minor",
            );
        }
        SeriesParallelOutcome::Inconclusive(_) => {}
    }
    let sbo = strongly_base_orderable(&cm);
    if sbo.verdict == SboVerdict::NotOrderable {
        let (b1, b2) = sbo.basis_pair;
        return seed_with(
            m,
            Family::Excluded,
            true,
            Certificate::NotStronglyBaseOrderable(b1, b2),
            "not strongly base-orderable",
        );
    }
    seed_with(
        m,
        Family::Intermediates,
        false,
        Certificate::AlphaNegative(negative),
        "alpha is negative",
    )
}

/// Limits on the expensive re-checks performed by [`is_valid`].
#[derive(Clone, Copy, Debug)]
pub struct AuditBudget {
    /// Minor searches and base-orderability scans allowed.
    pub expensive_checks: usize,
}

impl Default for AuditBudget {
    fn default() -> Self {
        AuditBudget {
            expensive_checks: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntryStatus {
    Verified,
    Unverified(String),
    Failed(String),
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub entries: Vec<(Family, CanonicalKey, EntryStatus)>,
    /// Classes that contain both a member of 𝒢 and a member of 𝒳.
    pub conflicts: Vec<BTreeSet<CanonicalKey>>,
    /// Non-trivial classes with no member in 𝒢 or 𝒳.
    pub open_classes: Vec<BTreeSet<CanonicalKey>>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.conflicts.is_empty()
            && !self
                .entries
                .iter()
                .any(|(_, _, s)| matches!(s, EntryStatus::Failed(_)))
    }

    pub fn failures(&self) -> impl Iterator<Item = &(Family, CanonicalKey, EntryStatus)> {
        self.entries
            .iter()
            .filter(|(_, _, s)| matches!(s, EntryStatus::Failed(_)))
    }

    pub fn unverified(&self) -> impl Iterator<Item = &(Family, CanonicalKey, EntryStatus)> {
        self.entries
            .iter()
            .filter(|(_, _, s)| matches!(s, EntryStatus::Unverified(_)))
    }
}

/// Re-checks every entry of `t` against its certificate, within `budget`.
/// Entries whose certificate cannot be re-checked are reported as
/// unverified; only disproved entries and 𝒢/𝒳 clashes fail the audit.
pub fn is_valid(t: &Tableau, budget: AuditBudget) -> AuditReport {
    let mut audit = Audit {
        t,
        left: budget.expensive_checks,
    };
    let mut report = AuditReport::default();
    for fam in Family::ALL {
        for (k, cert) in t.family(fam) {
            let status = match fam {
                Family::Gammoids => audit.gammoid(k, cert),
                Family::Intermediates => audit.intermediate(k),
                Family::Excluded => audit.excluded(k, cert),
            };
            report.entries.push((fam, k.clone(), status));
        }
    }
    for k in &t.closed {
        if !t.contains(Family::Gammoids, k) {
            report.entries.push((
                Family::Gammoids,
                k.clone(),
                EntryStatus::Failed("minor-closed but not a member".into()),
            ));
        }
    }
    for class in t.classes() {
        let g = class.iter().any(|k| t.contains(Family::Gammoids, k));
        let x = class.iter().any(|k| t.contains(Family::Excluded, k));
        if g && x {
            report.conflicts.push(class.clone());
        } else if !g && !x && class.len() > 1 {
            report.open_classes.push(class.clone());
        }
    }
    report
}

struct Audit<'a> {
    t: &'a Tableau,
    left: usize,
}

impl Audit<'_> {
    fn spend(&mut self) -> bool {
        if self.left == 0 {
            return false;
        }
        self.left -= 1;
        true
    }

    fn m(&self, k: &CanonicalKey) -> Arc<Matroid> {
        self.t.matroid(k).expect("members are registered")
    }

    fn gammoid(&mut self, k: &CanonicalKey, cert: &Certificate) -> EntryStatus {
        let m = self.m(k);
        let strict = alpha_non_negative(&m).is_none();
        let dual_strict = alpha_non_negative(&m.dual()).is_none();
        if !strict && !dual_strict && (m.rank() == 3 || m.size() - m.rank() == 3) {
            return EntryStatus::Failed(
                "rank or corank 3 and not strict, hence not a gammoid".into(),
            );
        }
        let t = self.t;
        let fallback = |audit: &mut Self| {
            if strict || dual_strict {
                return EntryStatus::Verified;
            }
            if !audit.spend() {
                return EntryStatus::Unverified("budget exhausted".into());
            }
            match series_parallel_gammoid_test(&m) {
                SeriesParallelOutcome::Gammoid => EntryStatus::Verified,
                SeriesParallelOutcome::NotGammoid(_) => {
                    EntryStatus::Failed("has an M(K4) minor".into())
                }
                SeriesParallelOutcome::Inconclusive(_) => {
                    EntryStatus::Unverified("no certificate found".into())
                }
            }
        };
        match cert {
            Certificate::AlphaNonNegative if strict => EntryStatus::Verified,
            Certificate::AlphaNonNegative => {
                EntryStatus::Failed("alpha is negative somewhere".into())
            }
            Certificate::Dual(of) => self
                .relative(Family::Gammoids, k, of, true)
                .unwrap_or_else(|| fallback(self)),
            Certificate::Equivalent(of) | Certificate::CaseI(of) => self
                .relative(Family::Gammoids, k, of, false)
                .unwrap_or_else(|| fallback(self)),
            Certificate::MinorOf(of) if t.contains(Family::Gammoids, of) => {
                if !self.spend() {
                    return EntryStatus::Unverified("budget exhausted".into());
                }
                match has_minor_isomorphic_to(&self.m(of), &m) {
                    Ok(Some(_)) => EntryStatus::Verified,
                    Ok(None) => EntryStatus::Failed(format!("not a minor of {of}")),
                    Err(e) => EntryStatus::Unverified(e.to_string()),
                }
            }
            Certificate::NoSmallExcludedMinor => self.no_small_minor(&m),
            _ => fallback(self),
        }
    }

    fn no_small_minor(&mut self, m: &Matroid) -> EntryStatus {
        if !self.spend() {
            return EntryStatus::Unverified("budget exhausted".into());
        }
        match series_parallel_gammoid_test(m) {
            SeriesParallelOutcome::Gammoid => EntryStatus::Verified,
            SeriesParallelOutcome::NotGammoid(_) => {
                EntryStatus::Failed("has an M(K4) minor".into())
            }
            SeriesParallelOutcome::Inconclusive(_) => {
                EntryStatus::Failed("has a U(2,4) minor".into())
            }
        }
    }

    /// Certificates resting on another member of the same family. `None`
    /// when the referent is gone or no longer related, as happens in a
    /// sub-tableau; the caller then checks the entry on its own.
    fn relative(
        &self,
        fam: Family,
        k: &CanonicalKey,
        of: &CanonicalKey,
        dual: bool,
    ) -> Option<EntryStatus> {
        let t = self.t;
        let related = if dual {
            t.dual_key(of) == Some(k)
        } else {
            t.equivalent(k, of)
        };
        (t.contains(fam, of) && related).then_some(EntryStatus::Verified)
    }

    fn intermediate(&self, k: &CanonicalKey) -> EntryStatus {
        match alpha_non_negative(&self.m(k)) {
            Some(_) => EntryStatus::Verified,
            None => EntryStatus::Failed("alpha is non-negative, so it is a strict gammoid".into()),
        }
    }

    fn excluded(&mut self, k: &CanonicalKey, cert: &Certificate) -> EntryStatus {
        let m = self.m(k);
        if alpha_non_negative(&m).is_none() {
            return EntryStatus::Failed("alpha is non-negative, so it is a gammoid".into());
        }
        if alpha_non_negative(&m.dual()).is_none() {
            return EntryStatus::Failed(
                "the dual has non-negative alpha, so it is a gammoid".into(),
            );
        }
        let t = self.t;
        match cert {
            Certificate::Rank3Contraction { contract, set } => {
                if verify_rank3_witness(&m, *contract, *set) {
                    EntryStatus::Verified
                } else {
                    EntryStatus::Failed("rank-3 witness does not check".into())
                }
            }
            Certificate::NotStronglyBaseOrderable(b1, b2) => {
                if m.is_basis(*b1) && m.is_basis(*b2) && verify_sbo_pair(&m, *b1, *b2).is_none() {
                    EntryStatus::Verified
                } else {
                    EntryStatus::Failed("basis pair has an exchange bijection".into())
                }
            }
            Certificate::Mk4Minor(spec) => {
                if !self.spend() {
                    return EntryStatus::Unverified("budget exhausted".into());
                }
                match verify_minor_witness(&m, &mk4(), spec) {
                    Ok(true) => EntryStatus::Verified,
                    _ => EntryStatus::Failed("minor is not M(K4)".into()),
                }
            }
            Certificate::CaseII(of, spec) => {
                if !t.contains(Family::Excluded, of) {
                    return self.excluded_fallback(&m);
                }
                if !self.spend() {
                    return EntryStatus::Unverified("budget exhausted".into());
                }
                match verify_minor_witness(&m, &self.m(of), spec) {
                    Ok(true) => EntryStatus::Verified,
                    _ => EntryStatus::Failed(format!("minor is not isomorphic to {of}")),
                }
            }
            Certificate::Dual(of) => self
                .relative(Family::Excluded, k, of, true)
                .unwrap_or_else(|| self.excluded_fallback(&m)),
            Certificate::Equivalent(of) => self
                .relative(Family::Excluded, k, of, false)
                .unwrap_or_else(|| self.excluded_fallback(&m)),
            Certificate::CaseIII(_) => EntryStatus::Unverified("exhaustion record".into()),
            _ => self.excluded_fallback(&m),
        }
    }

    fn excluded_fallback(&mut self, m: &Matroid) -> EntryStatus {
        if m.rank() == 3 || m.size() - m.rank() == 3 {
            return EntryStatus::Verified;
        }
        if !self.spend() {
            return EntryStatus::Unverified("budget exhausted".into());
        }
        if let SeriesParallelOutcome::NotGammoid(_) = series_parallel_gammoid_test(m) {
            return EntryStatus::Verified;
        }
        if strongly_base_orderable(m).verdict == SboVerdict::NotOrderable {
            return EntryStatus::Verified;
        }
        if let Ok(Some(_)) = rank3_contraction_witness(m) {
            return EntryStatus::Verified;
        }
        EntryStatus::Unverified("no non-gammoid certificate found".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{g841, g841_dual};
    use crate::extension::minimal_deflate;

    fn key(m: &Matroid) -> CanonicalKey {
        canonical_key(m).unwrap()
    }

    #[test]
    fn seeds_of_the_worked_example() {
        let g = g841();
        let t = seed_tableau(&g).unwrap();
        let s = t.summary();
        assert!(s.gammoids.is_empty() && s.excluded.is_empty());
        assert_eq!(s.intermediates, BTreeSet::from([key(&g)]));

        let (g7_star, _) = minimal_deflate(&g841_dual());
        let g7 = g7_star.dual();
        let t7 = seed_tableau(&g7).unwrap();
        assert!(t7.contains(Family::Gammoids, &key(&g7)));
        assert_eq!(
            t7.certificate(Family::Gammoids, &key(&g7)),
            Some(&Certificate::AlphaNonNegative)
        );

        let k4 = seed_tableau(&Matroid::mk4()).unwrap();
        assert_eq!(
            k4.summary().excluded,
            BTreeSet::from([key(&Matroid::mk4())])
        );
    }

    #[test]
    fn worked_example_derivation() {
        let g = g841();
        let gs = g841_dual();
        let t1 =
            extended(&join(&[&seed_tableau(&g).unwrap(), &seed_tableau(&gs).unwrap()]).unwrap())
                .unwrap();
        assert!(t1.family(Family::Gammoids).is_empty());
        assert!(t1.equivalent(&key(&g), &key(&gs)));
        assert!(is_decisive(&t1).is_none());

        let (g7s, _) = minimal_deflate(&gs);
        assert_eq!(g7s.size(), 7);
        let t2 = identify(
            &join(&[&t1, &seed_tableau(&g7s).unwrap()]).unwrap(),
            &key(&gs),
            &key(&g7s),
        )
        .unwrap();
        assert_eq!(t2.class_of(&key(&g)).len(), 3);
        assert!(is_decisive(&t2).is_none());

        let g7 = g7s.dual();
        let t3 = expansion(&extended(&join(&[&t2, &seed_tableau(&g7).unwrap()]).unwrap()).unwrap())
            .unwrap();
        let v = is_decisive(&t3).unwrap();
        assert_eq!(v.decision, Decision::Gammoid);
        assert_eq!(v.witness, Witness::Gammoid { member: key(&g7) });
        let done = conclusion(&t3).unwrap();
        assert!(done.contains(Family::Gammoids, &key(&g)));
        assert!(is_valid(&done, AuditBudget::default()).passed());
    }

    #[test]
    fn identify_guards() {
        let t = join(&[
            &seed_tableau(&g841()).unwrap(),
            &seed_tableau(&Matroid::uniform(2, 4)).unwrap(),
        ])
        .unwrap();
        let g = key(&g841());
        assert_eq!(identify(&t, &g, &g).unwrap(), t);
        assert!(matches!(
            identify(&t, &g, &key(&Matroid::uniform(2, 4))),
            Err(Error::NotADeflate)
        ));
        assert!(matches!(
            identify(&t, &g, &key(&Matroid::uniform(1, 3))),
            Err(Error::UnknownMatroid)
        ));
    }

    #[test]
    fn extended_moves_excluded_into_intermediates() {
        let t = extended(&seed_tableau(&Matroid::mk4()).unwrap()).unwrap();
        assert!(t.contains(Family::Intermediates, &key(&Matroid::mk4())));
        let u = extended(&seed_tableau(&Matroid::uniform(2, 4)).unwrap()).unwrap();
        assert_eq!(u.family(Family::Gammoids).len(), 1);
    }

    #[test]
    fn conclusion_cases() {
        let k4 = seed_tableau(&Matroid::mk4()).unwrap();
        let v = is_decisive(&k4).unwrap();
        assert_eq!(v.case(), 2);
        assert_eq!(
            v.witness,
            Witness::ExcludedMinor {
                excluded: key(&Matroid::mk4()),
                spec: MinorSpec::identity()
            }
        );
        assert!(matches!(
            conclusion(&Tableau::new(g841()).unwrap()),
            Err(Error::NotDecisive)
        ));
    }

    #[test]
    fn case_three_on_a_loop() {
        // U(0,1) has bound 1: its only extension of that size is itself.
        let m = Matroid::uniform(0, 1);
        let t = Tableau::new(m.clone()).unwrap();
        let t = t.insert_unchecked(Family::Intermediates, &m).unwrap();
        let v = is_decisive(&t).unwrap();
        assert_eq!(
            v.witness,
            Witness::Exhaustion {
                size: 1,
                classes: 1
            }
        );
        let c = conclusion(&t).unwrap();
        assert!(c.contains(Family::Excluded, &key(&m)));
    }

    #[test]
    fn audit_flags_u24_in_excluded() {
        let t = Tableau::new(Matroid::uniform(2, 4)).unwrap();
        assert!(is_valid(&t, AuditBudget::default()).passed());
        let bad = t
            .insert_unchecked(Family::Excluded, &Matroid::uniform(2, 4))
            .unwrap();
        assert!(!is_valid(&bad, AuditBudget::default()).passed());
    }

    #[test]
    fn replay_and_text_forms() {
        let t = update(
            &seed_tableau(&g841()).unwrap(),
            &seed_tableau(&g841_dual()).unwrap(),
        )
        .unwrap();
        let again = Tableau::replay(g841(), t.log()).unwrap();
        assert_eq!(again, t);
        for record in t.log() {
            for e in &record.effects {
                assert_eq!(&e.to_string().parse::<Effect>().unwrap(), e);
            }
        }
    }

    #[test]
    fn sub_tableau_checks_relation() {
        let t = update(
            &seed_tableau(&g841()).unwrap(),
            &seed_tableau(&g841_dual()).unwrap(),
        )
        .unwrap();
        assert_eq!(
            sub_tableau(&t, &Selection::full(&t)).unwrap().summary(),
            t.summary()
        );
        let bare = sub_tableau(&t, &Selection::default()).unwrap();
        assert!(bare.summary().intermediates.is_empty());
        let mut bad = Selection::default();
        bad.equivalences
            .push((key(&g841()), key(&Matroid::uniform(2, 4))));
        assert!(matches!(
            sub_tableau(&t, &bad),
            Err(Error::InvalidSelection(_))
        ));
    }
}
