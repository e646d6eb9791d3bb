//! The decision procedure.
//!
//! Starting from `(G, ∅, ∅, ∅, ⟨⟩)` (joined with a knowledge base when one
//! is given), the engine repeats:
//!
//! 1. stop if the tableau is decisive;
//! 2. pick an intermediate goal `M` among the registered minors of `G` and
//!    ℳ, outside 𝒢 ∪ 𝒳;
//! 3. if the tableau is decisive for goal `M`, join its conclusion;
//! 4. `M(K₄)` minor → `M, M*` excluded;
//! 5. no `U₂,₄` minor → `M, M*` gammoids;
//! 6. / 7. `α_M ≥ 0` or `α_{M*} ≥ 0` → gammoids;
//! 8. not strongly base-orderable → excluded;
//! 9. / 10. rank-3 contraction witness for `M` or `M*` → excluded;
//! 11. / 12. identify `M` or `M*` with a smallest deflate;
//! 13. add extensions of `M` not yet in any family, classified by `α`.
//!
//! A step that adds information sends the loop back to step 1; every update
//! is a join followed by the extended and the expansion tableau. Steps 6 and
//! 7 also record `M` (resp. `M*`) in ℳ when `α` is negative, then carry on.
//! Step 13 enumerates extensions breadth first up to the size bound of the
//! goal; an extension with `α ≥ 0` is a gammoid containing `M` as a
//! restriction, so the conclusion of its seed tableau puts `M` into 𝒢.
//! When the extensions of `M` run out, the step continues with `M := G`
//! from the `U₂,₄` test on.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::canonical::{canonical_key, CanonicalKey, CANONICAL_CAP};
use crate::error::{Error, Result};
use crate::extension::{
    extend_by_cut, minimal_deflate, modular_cuts, size_bound, ModularCut, DEFAULT_FLAT_CAP,
};
use crate::invariants::{
    alpha_non_negative, rank3_contraction_witness, strongly_base_orderable, SboVerdict,
};
use crate::matroid::Matroid;
use crate::minors::{has_minor_isomorphic_to, mk4, u24};
use crate::tableau::{
    conclusion, conclusion_with, expansion, extended, identify, is_decisive, join,
    minor_of_gammoid, seed_with, update, Certificate, Family, Tableau, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GoalSelection {
    /// Matroids equivalent to the goal first, then by size, rank and key.
    #[default]
    EquivalentFirst,
    /// By size, rank and key only.
    Smallest,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub workers: usize,
    /// Extension classes added per visit of step 13.
    pub batch: usize,
    pub goal_selection: GoalSelection,
    /// Passes through step 1 before giving up.
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
    /// Largest extension considered by step 13; at most the canonical cap.
    pub max_extension_size: usize,
    /// Shuffles candidate order for workers other than the first.
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: 1,
            batch: 8,
            goal_selection: GoalSelection::default(),
            max_iterations: 10_000,
            time_limit: None,
            max_extension_size: CANONICAL_CAP,
            seed: 0,
        }
    }
}

/// What one step did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Decisive(Verdict),
    NotDecisive,
    Chosen,
    /// Step 6 or 7 skipped because the matroid is already in ℳ.
    Skipped,
    /// The step's test did not apply.
    Negative,
    /// A seed tableau for the matroid (or its dual) was joined.
    Added(Family),
    Identified {
        big: CanonicalKey,
        small: CanonicalKey,
    },
    Extensions {
        added: usize,
    },
    /// No unseen extension is left; continue with the goal.
    Reset,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Decisive(v) => write!(
                f,
                "decisive by case {}",
                ["", "i", "ii", "iii"][v.case() as usize]
            ),
            Outcome::NotDecisive => f.write_str("not decisive"),
            Outcome::Chosen => f.write_str("chosen"),
            Outcome::Skipped => f.write_str("skipped"),
            Outcome::Negative => f.write_str("negative"),
            Outcome::Added(fam) => write!(f, "added to {}", fam.tag()),
            Outcome::Identified { big, small } => {
                write!(
                    f,
                    "identified {} with its deflate {} ({} elements)",
                    short(big),
                    short(small),
                    small.size()
                )
            }
            Outcome::Extensions { added } => write!(f, "{added} extension classes"),
            Outcome::Reset => f.write_str("extensions exhausted"),
        }
    }
}

fn short(k: &CanonicalKey) -> String {
    let hex = k.to_string();
    match hex.get(..16) {
        Some(head) if hex.len() > 16 => format!("{head}.."),
        _ => hex,
    }
}

/// Family growth caused by one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Delta {
    pub gammoids: usize,
    pub intermediates: usize,
    pub excluded: usize,
    pub merges: usize,
}

impl Delta {
    fn between(before: &Tableau, after: &Tableau) -> Self {
        let (a, b) = (before.progress(), after.progress());
        Delta {
            gammoids: b[0] - a[0],
            intermediates: b[1] - a[1],
            excluded: b[2] - a[2],
            merges: b[4].saturating_sub(a[4]),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Delta::default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub worker: usize,
    pub step: u8,
    pub goal: Option<CanonicalKey>,
    pub outcome: Outcome,
    pub delta: Delta,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {:>2}", self.step)?;
        if let Some(k) = &self.goal {
            write!(f, " [{} elements, rank {}]", k.size(), k.rank())?;
        }
        write!(f, " {}", self.outcome)?;
        let d = self.delta;
        if !d.is_empty() {
            write!(
                f,
                " (+{} G, +{} M, +{} X, {} merges)",
                d.gammoids, d.intermediates, d.excluded, d.merges
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    /// `(big, small)` for every identification with a deflate.
    pub fn identifications(&self) -> impl Iterator<Item = (&CanonicalKey, &CanonicalKey)> {
        self.steps.iter().filter_map(|s| match &s.outcome {
            Outcome::Identified { big, small } => Some((big, small)),
            _ => None,
        })
    }

    pub fn final_verdict(&self) -> Option<&Verdict> {
        match self.steps.last().map(|s| &s.outcome) {
            Some(Outcome::Decisive(v)) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("resource exhausted: {reason}")]
    ResourceExhausted {
        reason: String,
        partial: Box<Tableau>,
        trace: Trace,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

pub type Decided = (Verdict, Trace, Tableau);

/// Ranked intermediate-goal candidates: registered minors of the goal and
/// members of ℳ that are in neither 𝒢 nor 𝒳.
pub fn ranked_candidates(t: &Tableau, selection: GoalSelection) -> Vec<CanonicalKey> {
    let pool: BTreeSet<&CanonicalKey> = t
        .goal_minors()
        .iter()
        .chain(t.family(Family::Intermediates).keys())
        .filter(|k| !t.contains(Family::Gammoids, k) && !t.contains(Family::Excluded, k))
        .collect();
    let goal = t.goal_key();
    let mut ranked: Vec<CanonicalKey> = pool.into_iter().cloned().collect();
    ranked.sort_by_key(|k| {
        let off = selection == GoalSelection::EquivalentFirst && !t.equivalent(k, goal);
        (off, k.size(), k.rank(), k.clone())
    });
    ranked
}

pub fn select_intermediate_goal(t: &Tableau, cfg: &EngineConfig) -> Option<CanonicalKey> {
    ranked_candidates(t, cfg.goal_selection).into_iter().next()
}

/// Result of one of steps 3–12.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub tableau: Tableau,
    pub outcome: Outcome,
    /// Whether the procedure goes back to step 1.
    pub restart: bool,
}

fn canonical(t: &Tableau, k: &CanonicalKey) -> Result<Arc<Matroid>> {
    t.matroid(k).ok_or(Error::UnknownMatroid)
}

/// Seed by `α` alone: `(N, {N, N*}, ∅, ∅)` if `α_N ≥ 0`, else `(N, ∅, {N}, ∅)`.
fn classify(n: &Matroid) -> Result<(Tableau, bool)> {
    match alpha_non_negative(n) {
        None => Ok((
            seed_with(
                n,
                Family::Gammoids,
                true,
                Certificate::AlphaNonNegative,
                "alpha is non-negative",
            )?,
            true,
        )),
        Some(x) => Ok((
            seed_with(
                n,
                Family::Intermediates,
                false,
                Certificate::AlphaNegative(x),
                "alpha is negative",
            )?,
            false,
        )),
    }
}

/// Runs step `step` (3 to 12) on the registered intermediate goal `m`.
pub fn run_step(t: &Tableau, m: &CanonicalKey, step: u8) -> Result<StepResult> {
    let mm = canonical(t, m)?;
    let dk = t.dual_key(m).ok_or(Error::UnknownMatroid)?.clone();
    let joined = |seed: Tableau, fam: Family| -> Result<StepResult> {
        let u = update(t, &seed)?;
        let restart = u.progress() != t.progress();
        Ok(StepResult {
            tableau: u,
            outcome: if restart {
                Outcome::Added(fam)
            } else {
                Outcome::Negative
            },
            restart,
        })
    };
    let negative = || StepResult {
        tableau: t.clone(),
        outcome: Outcome::Negative,
        restart: false,
    };
    match step {
        3 => {
            let tm = t.with_goal((*mm).clone())?;
            match is_decisive(&tm) {
                Some(v) => {
                    let u = update(t, &conclusion_with(&tm, &v)?)?;
                    let restart = u.progress() != t.progress();
                    Ok(StepResult {
                        tableau: u,
                        outcome: Outcome::Decisive(v),
                        restart,
                    })
                }
                None => Ok(StepResult {
                    tableau: t.clone(),
                    outcome: Outcome::NotDecisive,
                    restart: false,
                }),
            }
        }
        4 => match has_minor_isomorphic_to(&mm, &mk4())? {
            Some(spec) => joined(
                seed_with(
                    &mm,
                    Family::Excluded,
                    true,
                    Certificate::Mk4Minor(spec),
                    "M(K4) minor",
                )?,
                Family::Excluded,
            ),
            None => Ok(negative()),
        },
        5 => match has_minor_isomorphic_to(&mm, &u24())? {
            None => joined(
                seed_with(
                    &mm,
                    Family::Gammoids,
                    true,
                    Certificate::NoSmallExcludedMinor,
                    "no U(2,4) minor",
                )?,
                Family::Gammoids,
            ),
            Some(_) => Ok(negative()),
        },
        6 | 7 => {
            let (key, target) = if step == 6 {
                (m.clone(), mm.clone())
            } else {
                (
                    dk.clone(),
                    canonical(t, &dk).or_else(|_| dk.to_matroid().map(Arc::new))?,
                )
            };
            if t.contains(Family::Intermediates, &key) {
                return Ok(StepResult {
                    tableau: t.clone(),
                    outcome: Outcome::Skipped,
                    restart: false,
                });
            }
            let (seed, strict) = classify(&target)?;
            let mut r = joined(
                seed,
                if strict {
                    Family::Gammoids
                } else {
                    Family::Intermediates
                },
            )?;
            // A negative α only records the matroid in ℳ; the procedure
            // carries on with the next step.
            r.restart = strict && r.restart;
            Ok(r)
        }
        8 => {
            let w = strongly_base_orderable(&mm);
            if w.verdict == SboVerdict::NotOrderable {
                let (b1, b2) = w.basis_pair;
                joined(
                    seed_with(
                        &mm,
                        Family::Excluded,
                        true,
                        Certificate::NotStronglyBaseOrderable(b1, b2),
                        "not strongly base-orderable",
                    )?,
                    Family::Excluded,
                )
            } else {
                Ok(negative())
            }
        }
        9 | 10 => {
            let target = if step == 9 {
                mm.clone()
            } else {
                Arc::new(dk.to_matroid()?)
            };
            if target.rank() < 3 {
                return Ok(negative());
            }
            match rank3_contraction_witness(&target)? {
                Some((contract, set)) => joined(
                    seed_with(
                        &target,
                        Family::Excluded,
                        true,
                        Certificate::Rank3Contraction { contract, set },
                        "rank-3 contraction with negative alpha",
                    )?,
                    Family::Excluded,
                ),
                None => Ok(negative()),
            }
        }
        11 | 12 => {
            let (key, target) = if step == 11 {
                (m.clone(), mm.clone())
            } else {
                (dk.clone(), Arc::new(dk.to_matroid()?))
            };
            let (n, cert) = minimal_deflate(&target);
            if cert.is_trivial() {
                return Ok(negative());
            }
            let nk = canonical_key(&n)?;
            let mut u = t.clone();
            if !u.is_known(&key) {
                u = join(&[&u, &classify(&target)?.0])?;
            }
            u = join(&[&u, &classify(&n)?.0])?;
            u = identify(&u, &key, &nk)?;
            u = expansion(&extended(&u)?)?;
            let restart = u.progress() != t.progress();
            Ok(StepResult {
                tableau: u,
                outcome: Outcome::Identified {
                    big: key,
                    small: nk,
                },
                restart,
            })
        }
        _ => Err(Error::Invalid(format!("step {step} is not one of 3 to 12"))),
    }
}

/// Breadth-first enumeration of extension classes of one matroid, one
/// class per isomorphism type and size, up to a size bound.
pub struct Frontier {
    bound: usize,
    cap: usize,
    level: Vec<Arc<Matroid>>,
    pos: usize,
    cuts: Option<(Vec<ModularCut>, usize)>,
    next_level: Vec<Arc<Matroid>>,
    seen: HashSet<CanonicalKey>,
}

impl Frontier {
    pub fn new(m: &Matroid, bound: usize, cap: usize) -> Self {
        Frontier {
            bound,
            cap: cap.min(CANONICAL_CAP),
            level: vec![Arc::new(m.clone())],
            pos: 0,
            cuts: None,
            next_level: Vec::new(),
            seen: HashSet::new(),
        }
    }
}

impl Iterator for Frontier {
    type Item = Result<(Matroid, CanonicalKey)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.pos >= self.level.len() {
                if self.next_level.is_empty() {
                    return None;
                }
                self.level = std::mem::take(&mut self.next_level);
                self.pos = 0;
                self.seen.clear();
                continue;
            }
            let cur = self.level[self.pos].clone();
            if cur.size() >= self.bound {
                self.level.clear();
                continue;
            }
            if cur.size() + 1 > self.cap {
                return Some(Err(Error::SizeExceeded {
                    size: cur.size() + 1,
                    cap: self.cap,
                }));
            }
            if self.cuts.is_none() {
                match modular_cuts(&cur, DEFAULT_FLAT_CAP) {
                    Ok(c) => self.cuts = Some((c, 0)),
                    Err(e) => return Some(Err(e)),
                }
            }
            let (cuts, idx) = self.cuts.as_mut().expect("set above");
            if *idx == cuts.len() {
                self.cuts = None;
                self.pos += 1;
                continue;
            }
            let cut = cuts[*idx].clone();
            *idx += 1;
            let child = match extend_by_cut(&cur, &cut).and_then(|c| Ok((canonical_key(&c)?, c))) {
                Ok((k, c)) => (c.without_labels(), k),
                Err(e) => return Some(Err(e)),
            };
            if self.seen.insert(child.1.clone()) {
                self.next_level.push(Arc::new(child.0.clone()));
                return Some(Ok(child));
            }
        }
    }
}

/// Step-13 state: one frontier per intermediate goal.
#[derive(Default)]
pub struct ExhaustCursor {
    frontiers: HashMap<CanonicalKey, Frontier>,
}

#[derive(Debug)]
pub struct ExhaustResult {
    pub tableau: Tableau,
    /// New extension classes, in enumeration order.
    pub added: Vec<CanonicalKey>,
    /// Every class pulled from the enumeration, including skipped ones.
    pub visited: Vec<CanonicalKey>,
    /// No unseen extension is left.
    pub reset: bool,
}

/// Adds up to `cfg.batch` extension classes of `m` that are in no family yet.
pub fn exhaust_step(
    t: &Tableau,
    m: &CanonicalKey,
    cfg: &EngineConfig,
    cursor: &mut ExhaustCursor,
) -> std::result::Result<ExhaustResult, EngineError> {
    let mm = canonical(t, m)?;
    let bound = size_bound(t.goal());
    let frontier = cursor
        .frontiers
        .entry(m.clone())
        .or_insert_with(|| Frontier::new(&mm, bound, cfg.max_extension_size));
    let mut u = t.clone();
    let mut added = Vec::new();
    let mut visited = Vec::new();
    let mut reset = false;
    while added.len() < cfg.batch.max(1) {
        let (n, nk) = match frontier.next() {
            None => {
                reset = true;
                break;
            }
            Some(Ok(item)) => item,
            Some(Err(e)) if added.is_empty() => {
                return Err(EngineError::ResourceExhausted {
                    reason: format!("extensions of a {}-element matroid: {e}", mm.size()),
                    partial: Box::new(t.clone()),
                    trace: Trace::default(),
                })
            }
            Some(Err(_)) => break,
        };
        visited.push(nk.clone());
        if u.contains(Family::Gammoids, &nk) {
            u = minor_of_gammoid(&u, &nk, m)?;
            continue;
        }
        if u.contains(Family::Intermediates, &nk) || u.contains(Family::Excluded, &nk) {
            continue;
        }
        let (seed, strict) = classify(&n)?;
        if strict {
            u = join(&[&u, &conclusion(&seed)?])?;
            u = minor_of_gammoid(&u, &nk, m)?;
        } else {
            u = join(&[&u, &seed])?;
        }
        added.push(nk);
    }
    let u = expansion(&extended(&u)?)?;
    Ok(ExhaustResult {
        tableau: u,
        added,
        visited,
        reset,
    })
}

struct Budget {
    start: Instant,
    iterations: usize,
}

impl Budget {
    fn new() -> Self {
        Budget {
            start: Instant::now(),
            iterations: 0,
        }
    }

    fn exceeded(&self, cfg: &EngineConfig) -> Option<String> {
        if self.iterations >= cfg.max_iterations {
            return Some(format!("{} iterations", cfg.max_iterations));
        }
        match cfg.time_limit {
            Some(limit) if self.start.elapsed() >= limit => {
                Some(format!("time limit of {limit:?}"))
            }
            _ => None,
        }
    }
}

fn initial(goal: &Matroid, kb: Option<&Tableau>) -> Result<Tableau> {
    let bare = Tableau::new(goal.clone())?;
    match kb {
        Some(kb) => join(&[&bare, kb]),
        None => Ok(bare),
    }
}

/// Sequential state of one worker.
#[derive(Default)]
struct WorkerState {
    cursor: ExhaustCursor,
    /// Intermediate goals on which steps 4 to 12 changed nothing.
    settled: HashSet<CanonicalKey>,
}

/// Runs steps 3 to 12 from `from`, stopping at the first restart.
fn run_steps(
    t: &mut Tableau,
    m: &CanonicalKey,
    from: u8,
    settled: &HashSet<CanonicalKey>,
    worker: usize,
    trace: &mut Vec<TraceStep>,
) -> Result<bool> {
    for step in from..=12 {
        if step >= 4 && settled.contains(m) {
            break;
        }
        let r = run_step(t, m, step)?;
        trace.push(TraceStep {
            worker,
            step,
            goal: Some(m.clone()),
            outcome: r.outcome,
            delta: Delta::between(t, &r.tableau),
        });
        *t = r.tableau;
        if r.restart {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Decides whether `goal` is a gammoid. With `cfg.workers > 1` this is
/// [`run_parallel`].
pub fn decide(
    goal: &Matroid,
    cfg: &EngineConfig,
    kb: Option<&Tableau>,
) -> std::result::Result<Decided, EngineError> {
    if cfg.workers > 1 {
        return run_parallel(goal, cfg, kb);
    }
    let mut t = initial(goal, kb)?;
    let mut trace = Vec::new();
    let mut state = WorkerState::default();
    let mut spent: HashSet<CanonicalKey> = HashSet::new();
    let mut budget = Budget::new();
    let exhausted =
        |reason: String, t: &Tableau, trace: Vec<TraceStep>| EngineError::ResourceExhausted {
            reason,
            partial: Box::new(t.clone()),
            trace: Trace { steps: trace },
        };
    loop {
        if let Some(reason) = budget.exceeded(cfg) {
            return Err(exhausted(reason, &t, trace));
        }
        budget.iterations += 1;
        if let Some(v) = is_decisive(&t) {
            trace.push(TraceStep {
                worker: 0,
                step: 1,
                goal: None,
                outcome: Outcome::Decisive(v.clone()),
                delta: Delta::default(),
            });
            let done = conclusion_with(&t, &v)?;
            return Ok((v, Trace { steps: trace }, done));
        }
        let Some(mut m) = ranked_candidates(&t, cfg.goal_selection)
            .into_iter()
            .find(|k| !spent.contains(k))
        else {
            return Err(exhausted("no intermediate goal left".into(), &t, trace));
        };
        trace.push(TraceStep {
            worker: 0,
            step: 2,
            goal: Some(m.clone()),
            outcome: Outcome::Chosen,
            delta: Delta::default(),
        });
        let mut from = 3;
        loop {
            if run_steps(&mut t, &m, from, &state.settled, 0, &mut trace)? {
                break;
            }
            state.settled.insert(m.clone());
            let r = match exhaust_step(&t, &m, cfg, &mut state.cursor) {
                Ok(r) => r,
                Err(EngineError::ResourceExhausted { reason, .. }) => {
                    return Err(exhausted(reason, &t, trace))
                }
                Err(e) => return Err(e),
            };
            let delta = Delta::between(&t, &r.tableau);
            t = r.tableau;
            if r.reset {
                trace.push(TraceStep {
                    worker: 0,
                    step: 13,
                    goal: Some(m.clone()),
                    outcome: Outcome::Reset,
                    delta,
                });
                spent.insert(m.clone());
                let goal_key = t.goal_key().clone();
                if m != goal_key && !spent.contains(&goal_key) && !delta_changed(&delta) {
                    m = goal_key;
                    from = 5;
                    continue;
                }
            } else {
                trace.push(TraceStep {
                    worker: 0,
                    step: 13,
                    goal: Some(m.clone()),
                    outcome: Outcome::Extensions {
                        added: r.added.len(),
                    },
                    delta,
                });
            }
            break;
        }
    }
}

fn delta_changed(d: &Delta) -> bool {
    !d.is_empty()
}

struct Shared {
    t: Tableau,
    trace: Vec<TraceStep>,
    result: Option<std::result::Result<Decided, EngineError>>,
    claimed: HashSet<CanonicalKey>,
    settled: HashSet<CanonicalKey>,
    spent: HashSet<CanonicalKey>,
    budget: Budget,
    generation: u64,
}

/// Several workers share one tableau. Each takes a snapshot, runs steps on
/// its own intermediate goal, and commits the result as a join into the
/// shared tableau. Worker 0 alone runs step 13; the others wait for new
/// candidates when they have none.
pub fn run_parallel(
    goal: &Matroid,
    cfg: &EngineConfig,
    kb: Option<&Tableau>,
) -> std::result::Result<Decided, EngineError> {
    let shared = Mutex::new(Shared {
        t: initial(goal, kb)?,
        trace: Vec::new(),
        result: None,
        claimed: HashSet::new(),
        settled: HashSet::new(),
        spent: HashSet::new(),
        budget: Budget::new(),
        generation: 0,
    });
    let wake = Condvar::new();
    let workers = cfg.workers.max(1);
    std::thread::scope(|scope| {
        for id in 0..workers {
            let (shared, wake) = (&shared, &wake);
            scope.spawn(move || {
                if let Err(e) = worker_loop(id, cfg, shared, wake) {
                    let mut s = shared.lock().unwrap();
                    if s.result.is_none() {
                        s.result = Some(Err(e));
                    }
                    wake.notify_all();
                }
            });
        }
    });
    let s = shared.into_inner().unwrap();
    s.result.expect("workers stop only with a result")
}

fn worker_loop(
    id: usize,
    cfg: &EngineConfig,
    shared: &Mutex<Shared>,
    wake: &Condvar,
) -> std::result::Result<(), EngineError> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(cfg.seed ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut cursor = ExhaustCursor::default();
    let finish = |s: &mut Shared, r: std::result::Result<Decided, EngineError>| {
        if s.result.is_none() {
            s.result = Some(r);
        }
        wake.notify_all();
    };
    loop {
        let (snapshot, m, settled) = {
            let mut s = shared.lock().unwrap();
            loop {
                if s.result.is_some() {
                    return Ok(());
                }
                if let Some(reason) = s.budget.exceeded(cfg) {
                    let err = EngineError::ResourceExhausted {
                        reason,
                        partial: Box::new(s.t.clone()),
                        trace: Trace {
                            steps: s.trace.clone(),
                        },
                    };
                    finish(&mut s, Err(err));
                    return Ok(());
                }
                s.budget.iterations += 1;
                if let Some(v) = is_decisive(&s.t) {
                    s.trace.push(TraceStep {
                        worker: id,
                        step: 1,
                        goal: None,
                        outcome: Outcome::Decisive(v.clone()),
                        delta: Delta::default(),
                    });
                    let done = conclusion_with(&s.t, &v)?;
                    let trace = Trace {
                        steps: s.trace.clone(),
                    };
                    finish(&mut s, Ok((v, trace, done)));
                    return Ok(());
                }
                let mut ranked: Vec<CanonicalKey> = ranked_candidates(&s.t, cfg.goal_selection)
                    .into_iter()
                    .filter(|k| !s.spent.contains(k))
                    .collect();
                if id > 0 && ranked.len() > 1 {
                    ranked[1..].shuffle(&mut rng);
                }
                let pick = if id == 0 {
                    ranked
                        .iter()
                        .find(|k| !s.claimed.contains(*k))
                        .or(ranked.first())
                        .cloned()
                } else {
                    ranked
                        .iter()
                        .find(|k| !s.claimed.contains(*k) && !s.settled.contains(*k))
                        .cloned()
                };
                match pick {
                    Some(m) => {
                        s.claimed.insert(m.clone());
                        s.trace.push(TraceStep {
                            worker: id,
                            step: 2,
                            goal: Some(m.clone()),
                            outcome: Outcome::Chosen,
                            delta: Delta::default(),
                        });
                        break (s.t.clone(), m, s.settled.clone());
                    }
                    None if id == 0 && ranked.is_empty() => {
                        let err = EngineError::ResourceExhausted {
                            reason: "no intermediate goal left".into(),
                            partial: Box::new(s.t.clone()),
                            trace: Trace {
                                steps: s.trace.clone(),
                            },
                        };
                        finish(&mut s, Err(err));
                        return Ok(());
                    }
                    None => {
                        // Nothing to do until another worker commits.
                        s.budget.iterations -= 1;
                        let seen = s.generation;
                        while s.generation == seen && s.result.is_none() {
                            s = wake.wait(s).unwrap();
                        }
                    }
                }
            }
        };

        let mut local = snapshot.clone();
        let mut steps = Vec::new();
        let restarted = run_steps(&mut local, &m, 3, &settled, id, &mut steps)?;
        let mut reset = false;
        if !restarted && id == 0 {
            match exhaust_step(&local, &m, cfg, &mut cursor) {
                Ok(r) => {
                    let delta = Delta::between(&local, &r.tableau);
                    steps.push(TraceStep {
                        worker: id,
                        step: 13,
                        goal: Some(m.clone()),
                        outcome: if r.reset {
                            Outcome::Reset
                        } else {
                            Outcome::Extensions {
                                added: r.added.len(),
                            }
                        },
                        delta,
                    });
                    reset = r.reset && delta.is_empty();
                    local = r.tableau;
                }
                Err(EngineError::ResourceExhausted { reason, .. }) => {
                    let mut s = shared.lock().unwrap();
                    let err = EngineError::ResourceExhausted {
                        reason,
                        partial: Box::new(s.t.clone()),
                        trace: Trace {
                            steps: s.trace.clone(),
                        },
                    };
                    finish(&mut s, Err(err));
                    return Ok(());
                }
                Err(e) => return Err(e),
            }
        }

        let mut s = shared.lock().unwrap();
        s.claimed.remove(&m);
        if !restarted {
            s.settled.insert(m.clone());
        }
        if reset {
            s.spent.insert(m.clone());
        }
        if local.progress() != snapshot.progress() {
            s.t = update(&s.t, &local)?;
        }
        s.trace.extend(steps);
        s.generation += 1;
        wake.notify_all();
    }
}
