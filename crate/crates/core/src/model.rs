//! Base vocabulary of the solver: steps, users, weights, step sets, plans
//! and patterns.
//!
//! A *plan* maps steps to users; a *pattern* is the partition of the
//! assigned steps into same-user blocks. Two plans that differ only by a
//! permutation of users have the same pattern, which is what makes patterns
//! the right search-tree node for user-independent constraints.

use std::fmt;

use crate::error::Error;

/// Index of a workflow step, in `[0, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepId(pub u32);

impl StepId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Index of a user, in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl UserId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

/// A penalty amount in dimensionless units.
///
/// All weight-function outputs are non-negative; instance validation caps
/// the largest possible plan weight well below `i64::MAX` so plain addition
/// never overflows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Weight(pub i64);

impl Weight {
    pub const ZERO: Weight = Weight(0);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::Add for Weight {
    type Output = Weight;
    #[inline]
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Weight {
    #[inline]
    fn add_assign(&mut self, rhs: Weight) {
        self.0 += rhs.0;
    }
}

impl std::ops::Sub for Weight {
    type Output = Weight;
    #[inline]
    fn sub(self, rhs: Weight) -> Weight {
        Weight(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        Weight(iter.map(|w| w.0).sum())
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Maximum number of steps an instance may have.
///
/// Step sets are stored as 128-bit masks; this covers every instance size
/// used in practice (the benchmark generator tops out around k = 64) while
/// keeping set operations branch-free.
pub const MAX_STEPS: u32 = 128;

/// A set of steps, stored as a bit mask over step indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct StepSet(pub u128);

impl StepSet {
    pub const EMPTY: StepSet = StepSet(0);

    /// The full set `{0, .., k-1}`.
    #[inline]
    pub fn all(k: u32) -> StepSet {
        debug_assert!(k <= MAX_STEPS);
        if k == 128 {
            StepSet(u128::MAX)
        } else {
            StepSet((1u128 << k) - 1)
        }
    }

    #[inline]
    pub fn singleton(s: StepId) -> StepSet {
        StepSet(1u128 << s.0)
    }

    pub fn from_steps<I: IntoIterator<Item = StepId>>(steps: I) -> StepSet {
        let mut set = StepSet::EMPTY;
        for s in steps {
            set.insert(s);
        }
        set
    }

    #[inline]
    pub fn contains(self, s: StepId) -> bool {
        self.0 >> s.0 & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, s: StepId) {
        self.0 |= 1u128 << s.0;
    }

    #[inline]
    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn union(self, other: StepSet) -> StepSet {
        StepSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: StepSet) -> StepSet {
        StepSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: StepSet) -> StepSet {
        StepSet(self.0 & !other.0)
    }

    #[inline]
    pub fn intersects(self, other: StepSet) -> bool {
        self.0 & other.0 != 0
    }

    #[inline]
    pub fn is_subset_of(self, other: StepSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest step index in the set, if any.
    pub fn min_step(self) -> Option<StepId> {
        if self.0 == 0 {
            None
        } else {
            Some(StepId(self.0.trailing_zeros()))
        }
    }

    /// Iterate over members in ascending index order.
    pub fn iter(self) -> impl Iterator<Item = StepId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let s = bits.trailing_zeros();
                bits &= bits - 1;
                Some(StepId(s))
            }
        })
    }
}

impl fmt::Display for StepSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", s)?;
        }
        write!(f, "}}")
    }
}

/// A (possibly partial) assignment of steps to users.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    assignment: Vec<Option<UserId>>,
}

impl Plan {
    /// An empty plan over `k` steps.
    pub fn empty(k: u32) -> Plan {
        Plan {
            assignment: vec![None; k as usize],
        }
    }

    /// A complete plan given one user per step.
    pub fn complete_from(users: Vec<UserId>) -> Plan {
        Plan {
            assignment: users.into_iter().map(Some).collect(),
        }
    }

    pub fn step_count(&self) -> u32 {
        self.assignment.len() as u32
    }

    pub fn get(&self, s: StepId) -> Option<UserId> {
        self.assignment[s.index()]
    }

    pub fn assign(&mut self, s: StepId, u: UserId) {
        self.assignment[s.index()] = Some(u);
    }

    /// Domain of the plan as a step set.
    pub fn domain(&self) -> StepSet {
        let mut set = StepSet::EMPTY;
        for (i, a) in self.assignment.iter().enumerate() {
            if a.is_some() {
                set.insert(StepId(i as u32));
            }
        }
        set
    }

    pub fn is_complete(&self) -> bool {
        self.assignment.iter().all(|a| a.is_some())
    }

    /// Users of a complete plan, indexed by step. Errors on a partial plan.
    pub fn users(&self) -> Result<Vec<UserId>, Error> {
        self.assignment
            .iter()
            .map(|a| a.ok_or(Error::IncompletePlan))
            .collect()
    }

    /// Steps assigned to `u`.
    pub fn preimage(&self, u: UserId) -> StepSet {
        let mut set = StepSet::EMPTY;
        for (i, a) in self.assignment.iter().enumerate() {
            if *a == Some(u) {
                set.insert(StepId(i as u32));
            }
        }
        set
    }

    /// Number of distinct users assigned to steps of `scope`.
    ///
    /// Steps of the scope outside the plan's domain are ignored.
    pub fn distinct_users_on(&self, scope: StepSet) -> u32 {
        let mut users: Vec<UserId> = scope
            .iter()
            .filter_map(|s| self.assignment[s.index()])
            .collect();
        users.sort_unstable();
        users.dedup();
        users.len() as u32
    }
}

/// A partition of a subset of the steps into non-empty blocks.
///
/// Block order is creation order and drives all deterministic iteration
/// (child generation, matching rows). Equality and hashing treat a pattern
/// as a partition, ignoring block order.
#[derive(Debug, Clone)]
pub struct Pattern {
    blocks: Vec<StepSet>,
    covered: StepSet,
}

impl Pattern {
    pub fn empty() -> Pattern {
        Pattern {
            blocks: Vec::new(),
            covered: StepSet::EMPTY,
        }
    }

    /// Build a pattern from blocks in the given creation order.
    ///
    /// Blocks must be non-empty and pairwise disjoint.
    pub fn from_blocks(blocks: Vec<StepSet>) -> Result<Pattern, Error> {
        let mut covered = StepSet::EMPTY;
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::Validation("pattern block is empty".into()));
            }
            if covered.intersects(*b) {
                return Err(Error::Validation("pattern blocks overlap".into()));
            }
            covered = covered.union(*b);
        }
        Ok(Pattern { blocks, covered })
    }

    pub fn blocks(&self) -> &[StepSet] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Steps covered by the pattern, `T(P)`.
    pub fn covered(&self) -> StepSet {
        self.covered
    }

    /// Complete over a workflow with `k` steps?
    pub fn is_complete(&self, k: u32) -> bool {
        self.covered == StepSet::all(k)
    }

    /// Blocks sorted by smallest contained step: the canonical partition form.
    pub fn canonical_blocks(&self) -> Vec<StepSet> {
        let mut blocks = self.blocks.clone();
        blocks.sort_unstable_by_key(|b| b.min_step());
        blocks
    }

    /// The pattern of a complete plan: the non-empty user preimages, ordered
    /// by smallest contained step index.
    pub fn of_plan(plan: &Plan) -> Result<Pattern, Error> {
        if !plan.is_complete() {
            return Err(Error::IncompletePlan);
        }
        let mut users: Vec<UserId> = (0..plan.step_count())
            .map(|s| plan.get(StepId(s)).unwrap())
            .collect();
        users.sort_unstable();
        users.dedup();
        let mut blocks: Vec<StepSet> = users.iter().map(|&u| plan.preimage(u)).collect();
        blocks.sort_unstable_by_key(|b| b.min_step());
        let covered = StepSet::all(plan.step_count());
        Ok(Pattern { blocks, covered })
    }

    /// All extensions of this pattern with step `s`: `s` appended to each
    /// existing block in block order, then `{s}` as a new last block.
    pub fn extensions(&self, s: StepId) -> Result<Vec<Pattern>, Error> {
        if self.covered.contains(s) {
            return Err(Error::Validation(format!(
                "step {} is already covered by the pattern",
                s
            )));
        }
        let mut children = Vec::with_capacity(self.blocks.len() + 1);
        for i in 0..self.blocks.len() {
            let mut blocks = self.blocks.clone();
            blocks[i].insert(s);
            children.push(Pattern {
                blocks,
                covered: self.covered.union(StepSet::singleton(s)),
            });
        }
        let mut blocks = self.blocks.clone();
        blocks.push(StepSet::singleton(s));
        children.push(Pattern {
            blocks,
            covered: self.covered.union(StepSet::singleton(s)),
        });
        Ok(children)
    }

    /// Does restricting this pattern to `T(base)` give exactly `base`?
    ///
    /// True when this pattern can be reached from `base` by repeated
    /// extension (blocks never merge).
    pub fn extends(&self, base: &Pattern) -> bool {
        if !base.covered.is_subset_of(self.covered) {
            return false;
        }
        let mut restricted: Vec<StepSet> = self
            .blocks
            .iter()
            .map(|b| b.intersection(base.covered))
            .filter(|b| !b.is_empty())
            .collect();
        restricted.sort_unstable_by_key(|b| b.min_step());
        let mut base_blocks = base.canonical_blocks();
        base_blocks.sort_unstable_by_key(|b| b.min_step());
        restricted == base_blocks
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Pattern) -> bool {
        self.covered == other.covered && self.canonical_blocks() == other.canonical_blocks()
    }
}

impl Eq for Pattern {}

impl std::hash::Hash for Pattern {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical_blocks().hash(state);
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", b)?;
        }
        write!(f, "}}")
    }
}

/// Enumerate every partition of `{0, .., k-1}` into non-empty blocks,
/// exactly once each.
///
/// The order is the one induced by depth-first pattern extension on steps
/// `0..k` (equivalently, restricted-growth strings in lexicographic order),
/// and the number of partitions yielded is the Bell number `B_k`.
pub fn enumerate_complete_patterns(k: u32) -> CompletePatterns {
    debug_assert!(k >= 1, "enumeration requires at least one step");
    CompletePatterns {
        k,
        rgs: Vec::new(),
        started: false,
    }
}

/// Iterator over complete patterns; see [`enumerate_complete_patterns`].
pub struct CompletePatterns {
    k: u32,
    rgs: Vec<u32>,
    started: bool,
}

impl CompletePatterns {
    fn emit(&self) -> Pattern {
        let block_count = self.rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![StepSet::EMPTY; block_count as usize];
        for (step, &block) in self.rgs.iter().enumerate() {
            blocks[block as usize].insert(StepId(step as u32));
        }
        Pattern {
            blocks,
            covered: StepSet::all(self.k),
        }
    }
}

impl Iterator for CompletePatterns {
    type Item = Pattern;

    fn next(&mut self) -> Option<Pattern> {
        if self.k == 0 {
            return None;
        }
        if !self.started {
            self.started = true;
            self.rgs = vec![0; self.k as usize];
            return Some(self.emit());
        }
        // Advance the restricted-growth string: a[i] may grow up to
        // 1 + max(a[0..i]).
        let mut prefix_max = vec![0u32; self.k as usize];
        for i in 1..self.k as usize {
            prefix_max[i] = prefix_max[i - 1].max(self.rgs[i - 1]);
        }
        for i in (1..self.k as usize).rev() {
            if self.rgs[i] <= prefix_max[i] {
                self.rgs[i] += 1;
                for j in i + 1..self.k as usize {
                    self.rgs[j] = 0;
                }
                return Some(self.emit());
            }
        }
        None
    }
}
