//! Forward/backward search over sets of knowledge posets.
//!
//! `S_0` holds the total disorder. `S_c` is built from `S_{c-1}` by trying
//! every incomparable pair of every poset: a pair is dropped when either
//! outcome has more than `2^(C-c)` linear extensions, otherwise the outcome
//! with more extensions is kept. Posets are stored by their dedup key, so
//! isomorphic and dual posets collapse. An empty `S_c` proves the budget
//! infeasible.
//!
//! Backward, `S*_C` is the set of linear orders in `S_C` and `S*_c` keeps a
//! poset of `S_c` iff some comparison has one outcome in `S*_{c+1}` and the
//! other outcome sortable in `C-c-1` comparisons (checked recursively). The
//! budget suffices iff `S*_0` is nonempty.
//!
//! Linear posets carry forward unchanged, so a budget larger than necessary
//! is handled by idle steps at the end.

mod checkpoint;
mod sortable;
mod spill;

pub use checkpoint::{
    checkpoint, fnv1a64, resume, resume_expecting, CheckpointError, MAGIC, VERSION,
};
pub use sortable::{is_sortable, DecisionTree, SortabilityCache, Sorter, TouchBound};

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linext::count_linext;
use crate::poset::{CanonicalCode, Poset, MAX_ELEMENTS};
use sortable::{branchings, capacity, pair_table, Settled};
use spill::SetBuilder;

/// Largest accepted comparison budget.
pub const MAX_BUDGET: usize = 255;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("element count {0} outside 1..={MAX_ELEMENTS}")]
    ElementCount(usize),
    #[error("comparison budget {0} above {MAX_BUDGET}")]
    Budget(usize),
    #[error("touch bound {lo}..={hi} invalid for {n} elements")]
    TouchBound { lo: usize, hi: usize, n: usize },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint directory {path}: {message}")]
    Resume { path: PathBuf, message: String },
    #[error("spill storage: {0}")]
    Spill(#[from] std::io::Error),
    #[error("building worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Forward = 0,
    Backward = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Sortable,
    NotSortable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct SetStats {
    pub count: usize,
    pub min_e: Option<u64>,
    pub max_e: Option<u64>,
}

/// A deduplicated set of posets, one canonical code per class of
/// isomorphic-or-dual posets, in ascending code order.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub n: usize,
    pub budget: usize,
    pub step: usize,
    pub phase: Phase,
    codes: Vec<CanonicalCode>,
    witnesses: Option<Vec<Option<(u8, u8)>>>,
    stats: SetStats,
}

impl CandidateSet {
    fn from_entries(
        n: usize,
        budget: usize,
        step: usize,
        phase: Phase,
        entries: Vec<(CanonicalCode, u64)>,
    ) -> Self {
        let stats = SetStats {
            count: entries.len(),
            min_e: entries.iter().map(|e| e.1).min(),
            max_e: entries.iter().map(|e| e.1).max(),
        };
        CandidateSet {
            n,
            budget,
            step,
            phase,
            codes: entries.into_iter().map(|e| e.0).collect(),
            witnesses: None,
            stats,
        }
    }

    /// Builds a set from codes in any order, recounting extensions for the
    /// statistics.
    pub fn from_codes(
        n: usize,
        budget: usize,
        step: usize,
        phase: Phase,
        mut codes: Vec<CanonicalCode>,
    ) -> Self {
        codes.sort_unstable();
        codes.dedup();
        let entries = codes
            .into_par_iter()
            .map(|c| {
                let p = c.to_poset();
                let e = sortable::with_counter(|t| count_linext(&p, t));
                (c, e)
            })
            .collect();
        Self::from_entries(n, budget, step, phase, entries)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[CanonicalCode] {
        &self.codes
    }

    pub fn stats(&self) -> SetStats {
        self.stats
    }

    pub fn contains(&self, key: &CanonicalCode) -> bool {
        self.codes.binary_search(key).is_ok()
    }

    pub fn posets(&self) -> impl Iterator<Item = Poset> + '_ {
        self.codes.iter().map(CanonicalCode::to_poset)
    }

    /// For backward sets built with witnesses: the comparison, in the
    /// labeling of the stored representative, that proves sortability.
    /// `None` for linear posets and sets built without witnesses.
    pub fn witness(&self, key: &CanonicalCode) -> Option<(usize, usize)> {
        let i = self.codes.binary_search(key).ok()?;
        let (j, k) = self.witnesses.as_ref()?[i]?;
        Some((j as usize, k as usize))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOptions {
    /// worker threads; `None` uses every core
    pub workers: Option<usize>,
    /// in-memory bytes for a set under construction before spilling
    pub mem_budget: usize,
    pub use_cache: bool,
    pub checkpoint_dir: Option<PathBuf>,
    pub resume: bool,
    pub record_witnesses: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            workers: None,
            mem_budget: 2 << 30,
            use_cache: true,
            checkpoint_dir: None,
            resume: false,
            record_witnesses: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelStats {
    pub step: usize,
    pub forward: usize,
    pub backward: Option<usize>,
    pub min_e: Option<u64>,
    pub max_e: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchVerdict {
    pub n: usize,
    pub budget: usize,
    pub touch: Option<TouchBound>,
    pub outcome: Outcome,
    /// step of the first empty set, if the search ended on one
    pub first_empty: Option<usize>,
    /// phase that decided the outcome
    pub phase: Phase,
    pub per_level: Vec<LevelStats>,
}

/// Identifies a run inside a checkpoint directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RunManifest {
    n: usize,
    budget: usize,
    touch: Option<TouchBound>,
}

const MANIFEST: &str = "run.json";
const BATCH: usize = 4096;

/// One search run: element count, budget, optional touch bound, options.
pub struct Search {
    n: usize,
    budget: usize,
    touch: Option<TouchBound>,
    opts: SearchOptions,
    cache: SortabilityCache,
    pool: rayon::ThreadPool,
}

impl Search {
    pub fn new(
        n: usize,
        budget: usize,
        touch: Option<TouchBound>,
        opts: SearchOptions,
    ) -> Result<Self, SearchError> {
        if !(1..=MAX_ELEMENTS).contains(&n) {
            return Err(SearchError::ElementCount(n));
        }
        if budget > MAX_BUDGET {
            return Err(SearchError::Budget(budget));
        }
        if let Some(t) = touch {
            if t.lo > t.hi || t.hi > n {
                return Err(SearchError::TouchBound {
                    lo: t.lo,
                    hi: t.hi,
                    n,
                });
            }
        }
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(w) = opts.workers {
            pool = pool.num_threads(w.max(1));
        }
        Ok(Search {
            n,
            budget,
            touch,
            opts,
            cache: SortabilityCache::new(),
            pool: pool.build()?,
        })
    }

    fn sorter(&self) -> Sorter<'_> {
        Sorter::new(
            self.budget,
            self.touch,
            self.opts.use_cache.then_some(&self.cache),
        )
    }

    /// `S_0`.
    pub fn initial(&self) -> CandidateSet {
        let p = Poset::new_antichain(self.n).expect("n validated");
        let e = (1..=self.n as u64).product();
        let entries = if self.touch.is_none_or(|t| t.admits(&p, 0)) {
            vec![(p.dedup_key(), e)]
        } else {
            Vec::new()
        };
        CandidateSet::from_entries(self.n, self.budget, 0, Phase::Forward, entries)
    }

    /// Outcomes of `p` kept at step `step`.
    fn expand(&self, p: &Poset, step: usize, out: &mut Vec<(CanonicalCode, u64)>) {
        let admit = |q: &Poset| self.touch.is_none_or(|t| t.admits(q, step));
        if p.is_linear() {
            if admit(p) {
                out.push((p.dedup_key(), 1));
            }
            return;
        }
        let limit = capacity(self.budget - step);
        let pt = pair_table(p);
        for b in branchings(p, &pt, limit) {
            // both outcomes touch the same elements
            if !admit(&b.less) {
                continue;
            }
            let (key, e, _) = b.stored();
            let entry = (key, e);
            out.push(entry);
        }
    }

    /// `S_c` from `S_{c-1}`.
    pub fn forward_step(&self, prev: &CandidateSet) -> Result<CandidateSet, SearchError> {
        let step = prev.step + 1;
        assert!(step <= self.budget, "forward step past the budget");
        let mut builder = SetBuilder::new(
            self.n,
            self.opts.mem_budget,
            self.opts.checkpoint_dir.clone(),
        );
        self.pool.install(|| -> Result<(), SearchError> {
            for batch in prev.codes.chunks(BATCH) {
                let mut found: Vec<(CanonicalCode, u64)> = batch
                    .par_iter()
                    .fold(Vec::new, |mut acc, code| {
                        self.expand(&code.to_poset(), step, &mut acc);
                        acc
                    })
                    .reduce(Vec::new, |mut a, mut b| {
                        a.append(&mut b);
                        a
                    });
                found.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));
                found.dedup_by(|a, b| a.0 == b.0);
                builder.extend(found)?;
            }
            Ok(())
        })?;
        Ok(CandidateSet::from_entries(
            self.n,
            self.budget,
            step,
            Phase::Forward,
            builder.finish()?,
        ))
    }

    /// Whether `p` (at step `step`) has a comparison witnessing sortability
    /// in the remaining budget.
    fn survives(&self, p: &Poset, step: usize, settled: Settled<'_>) -> Option<Option<(u8, u8)>> {
        if p.is_linear() {
            return Some(None);
        }
        let remaining = self.budget - step;
        if remaining == 0 {
            return None;
        }
        // Every outcome recorded forward is in S_{step+1}, so it is sortable
        // exactly when it made it into S*_{step+1}.
        let next_star = &settled.star[settled.star.len() - 1];
        let pt = pair_table(p);
        let sorter = self.sorter().with_settled(settled);
        for b in branchings(p, &pt, capacity(remaining - 1)) {
            let (key, _, other) = b.stored();
            if next_star.contains(&key) && sorter.is_sortable(other, remaining - 1) {
                return Some(Some((b.j as u8, b.k as u8)));
            }
        }
        None
    }

    /// `S*_c` for `c = stars.last().step - 1`, given the forward sets up to
    /// step `C` (indexed by step) and `S*_C`, `S*_{C-1}`, ..., `S*_{c+1}`.
    pub fn backward_step(&self, forward: &[CandidateSet], stars: &[CandidateSet]) -> CandidateSet {
        let next = stars.last().expect("at least S*_C");
        let step = next.step - 1;
        let current = &forward[step];
        let settled = Settled {
            first: next.step,
            forward,
            star: stars,
        };
        let kept: Vec<(usize, Option<(u8, u8)>)> = self.pool.install(|| {
            current
                .codes
                .par_iter()
                .enumerate()
                .filter_map(|(i, code)| {
                    self.survives(&code.to_poset(), step, settled)
                        .map(|w| (i, w))
                })
                .collect()
        });
        let codes: Vec<CanonicalCode> = kept.iter().map(|&(i, _)| current.codes[i]).collect();
        let witnesses = self
            .opts
            .record_witnesses
            .then(|| kept.iter().map(|&(_, w)| w).collect());
        let mut set = CandidateSet {
            n: self.n,
            budget: self.budget,
            step,
            phase: Phase::Backward,
            codes,
            witnesses,
            stats: SetStats::default(),
        };
        set.stats = current.stats_of(&set.codes);
        set
    }

    /// `S*_C`: the linear orders among `S_C`.
    pub fn final_star(&self, last: &CandidateSet) -> CandidateSet {
        let codes: Vec<CanonicalCode> = last
            .codes
            .iter()
            .copied()
            .filter(|c| c.to_poset().is_linear())
            .collect();
        let mut set = CandidateSet {
            n: self.n,
            budget: self.budget,
            step: last.step,
            phase: Phase::Backward,
            codes,
            witnesses: None,
            stats: SetStats::default(),
        };
        set.stats = last.stats_of(&set.codes);
        set
    }

    /// Exact sortability of `p` with `r` comparisons left, under this run's
    /// touch bound and cache.
    pub fn is_sortable(&self, p: &Poset, r: usize) -> bool {
        self.pool.install(|| self.sorter().is_sortable(p, r))
    }

    pub fn decision_tree(&self, p: &Poset, r: usize) -> Option<DecisionTree> {
        self.pool.install(|| self.sorter().decision_tree(p, r))
    }

    fn save(&self, set: &CandidateSet) -> Result<(), SearchError> {
        if let Some(dir) = &self.opts.checkpoint_dir {
            checkpoint(set, &dir.join(checkpoint::file_name(set.phase, set.step)))?;
        }
        Ok(())
    }

    fn prepare_dir(&self) -> Result<(), SearchError> {
        let Some(dir) = &self.opts.checkpoint_dir else {
            return Ok(());
        };
        let resume_err = |message: String| SearchError::Resume {
            path: dir.clone(),
            message,
        };
        fs::create_dir_all(dir).map_err(|e| resume_err(e.to_string()))?;
        let manifest = RunManifest {
            n: self.n,
            budget: self.budget,
            touch: self.touch,
        };
        let path = dir.join(MANIFEST);
        if self.opts.resume && path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| resume_err(e.to_string()))?;
            let found: RunManifest =
                serde_json::from_str(&text).map_err(|e| resume_err(format!("{MANIFEST}: {e}")))?;
            if found != manifest {
                return Err(resume_err(format!(
                    "holds a run for n={} C={} touch={:?}",
                    found.n, found.budget, found.touch
                )));
            }
        } else {
            for entry in fs::read_dir(dir).map_err(|e| resume_err(e.to_string()))? {
                let path = entry.map_err(|e| resume_err(e.to_string()))?.path();
                if path.extension().is_some_and(|x| x == "sbnd") {
                    fs::remove_file(&path).map_err(|e| resume_err(e.to_string()))?;
                }
            }
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            fs::write(&path, text).map_err(|e| resume_err(e.to_string()))?;
        }
        Ok(())
    }

    fn load(
        &self,
        dir: &Path,
        phase: Phase,
        step: usize,
    ) -> Result<Option<CandidateSet>, SearchError> {
        let path = dir.join(checkpoint::file_name(phase, step));
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(resume_expecting(
            &path,
            self.n,
            self.budget,
            phase,
            step,
        )?))
    }

    /// Runs both phases to a verdict.
    pub fn run(&self) -> Result<SearchVerdict, SearchError> {
        self.prepare_dir()?;
        let resume_dir = self
            .opts
            .checkpoint_dir
            .as_deref()
            .filter(|_| self.opts.resume);

        let mut forward = Vec::with_capacity(self.budget + 1);
        if let Some(dir) = resume_dir {
            while let Some(set) = self.load(dir, Phase::Forward, forward.len())? {
                let empty = set.is_empty();
                forward.push(set);
                if empty || forward.len() > self.budget {
                    break;
                }
            }
        }
        if forward.is_empty() {
            let s0 = self.initial();
            self.save(&s0)?;
            forward.push(s0);
        }
        while !forward.last().unwrap().is_empty() && forward.len() <= self.budget {
            let next = self.forward_step(forward.last().unwrap())?;
            self.save(&next)?;
            forward.push(next);
        }

        let mut levels: Vec<LevelStats> = forward
            .iter()
            .map(|s| LevelStats {
                step: s.step,
                forward: s.len(),
                backward: None,
                min_e: s.stats.min_e,
                max_e: s.stats.max_e,
            })
            .collect();
        let verdict = |outcome, first_empty, phase, per_level| SearchVerdict {
            n: self.n,
            budget: self.budget,
            touch: self.touch,
            outcome,
            first_empty,
            phase,
            per_level,
        };
        let last = forward.last().unwrap();
        if last.is_empty() {
            return Ok(verdict(
                Outcome::NotSortable,
                Some(last.step),
                Phase::Forward,
                levels,
            ));
        }

        let last_star = match resume_dir.map(|d| self.load(d, Phase::Backward, self.budget)) {
            Some(Ok(Some(s))) => s,
            Some(Err(e)) => return Err(e),
            _ => {
                let s = self.final_star(last);
                self.save(&s)?;
                s
            }
        };
        levels[self.budget].backward = Some(last_star.len());
        let mut stars = vec![last_star];
        loop {
            let star = stars.last().unwrap();
            if star.is_empty() || star.step == 0 {
                break;
            }
            let step = star.step - 1;
            let resumed = match resume_dir {
                Some(d) => self.load(d, Phase::Backward, step)?,
                None => None,
            };
            let next = match resumed {
                Some(s) => s,
                None => {
                    let s = self.backward_step(&forward, &stars);
                    self.save(&s)?;
                    s
                }
            };
            levels[step].backward = Some(next.len());
            stars.push(next);
        }
        let star = stars.last().unwrap();
        if star.is_empty() {
            Ok(verdict(
                Outcome::NotSortable,
                Some(star.step),
                Phase::Backward,
                levels,
            ))
        } else {
            Ok(verdict(Outcome::Sortable, None, Phase::Backward, levels))
        }
    }
}

impl CandidateSet {
    /// Statistics of a subset, reusing nothing but the codes.
    fn stats_of(&self, codes: &[CanonicalCode]) -> SetStats {
        let es: Vec<u64> = codes
            .par_iter()
            .map(|c| sortable::with_counter(|t| count_linext(&c.to_poset(), t)))
            .collect();
        SetStats {
            count: codes.len(),
            min_e: es.iter().copied().min(),
            max_e: es.iter().copied().max(),
        }
    }
}

/// Whether `n` elements can be sorted with `budget` comparisons.
pub fn decide(n: usize, budget: usize, opts: &SearchOptions) -> Result<SearchVerdict, SearchError> {
    Search::new(n, budget, None, opts.clone())?.run()
}

/// [`decide`] restricted to sorting algorithms that have touched between
/// `lo` and `hi` elements after `step` comparisons.
pub fn decide_touch_bounded(
    n: usize,
    budget: usize,
    step: usize,
    lo: usize,
    hi: usize,
    opts: &SearchOptions,
) -> Result<SearchVerdict, SearchError> {
    let touch = TouchBound { step, lo, hi };
    Search::new(n, budget, Some(touch), opts.clone())?.run()
}
