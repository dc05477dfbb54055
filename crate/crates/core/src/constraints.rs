//! Weighted user-independent constraints and their branch-and-bound lower
//! bounds.
//!
//! Every constraint here is a *counting* constraint: its weight on a
//! complete plan depends only on the number of distinct users assigned to
//! its scope. Not-equals (separation-of-duty) is kept as its own kind but
//! evaluated through the at-least-2 reduction.

use crate::error::Error;
use crate::model::{Pattern, StepSet, Weight};

/// The supported constraint kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// Two scope steps must be performed by different users.
    NotEquals,
    /// At most `r` distinct users over the scope.
    AtMost,
    /// At least `r` distinct users over the scope.
    AtLeast,
}

impl ConstraintKind {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::NotEquals => "not-equals",
            ConstraintKind::AtMost => "at-most",
            ConstraintKind::AtLeast => "at-least",
        }
    }
}

/// Statistics of a pattern relative to one constraint scope: the number of
/// pattern blocks intersecting the scope and the number of scope steps
/// covered so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScopeStats {
    /// Blocks of the pattern that intersect the scope (`q`).
    pub intersecting_blocks: u32,
    /// Scope steps covered by the pattern (`a`).
    pub covered_scope: u32,
}

/// A weighted user-independent counting constraint.
///
/// The penalty table maps the number `q` of distinct users assigned to the
/// scope to a non-negative weight, zero exactly when the constraint is
/// satisfied. The table is validated for the monotonicity each kind
/// requires, and the pruning lower bound `l(q, a)` is memoised eagerly at
/// construction so later evaluation is a read-only lookup.
#[derive(Debug, Clone)]
pub struct WeightedConstraint {
    kind: ConstraintKind,
    scope: StepSet,
    threshold: u32,
    /// Penalty per user count, indexed 0..=|scope|. Index 0 is the vacuous
    /// extension used only by the bound recursion.
    penalties: Vec<i64>,
    /// Memoised l(q, a), stored row-major with stride |scope| + 1.
    bound_table: Vec<i64>,
}

impl WeightedConstraint {
    /// A not-equals constraint over two steps.
    pub fn not_equals(scope: StepSet, penalty: Weight) -> Result<WeightedConstraint, Error> {
        if scope.len() != 2 {
            return Err(Error::Validation(format!(
                "not-equals scope must have exactly 2 steps, got {}",
                scope.len()
            )));
        }
        if penalty.0 <= 0 {
            return Err(Error::Validation(
                "not-equals penalty must be positive".into(),
            ));
        }
        // Evaluated as at-least-2: one shared user costs the penalty.
        let penalties = vec![penalty.0, penalty.0, 0];
        Ok(Self::build(ConstraintKind::NotEquals, scope, 2, penalties))
    }

    /// An at-most-`r` constraint with explicit level penalties.
    ///
    /// `levels` maps user counts to penalties; counts up to `r` must be
    /// absent or zero, counts above `r` must be present, positive and
    /// non-decreasing.
    pub fn at_most(
        scope: StepSet,
        r: u32,
        levels: &[(u32, Weight)],
    ) -> Result<WeightedConstraint, Error> {
        let size = Self::check_scope_threshold("at-most", scope, r)?;
        let table = Self::spread_levels("at-most", size, levels)?;
        for q in 1..=size {
            let w = table[q as usize];
            if q <= r {
                if w != 0 {
                    return Err(Error::Validation(format!(
                        "at-most-{} penalty at level {} must be 0, got {}",
                        r, q, w
                    )));
                }
            } else {
                if w <= 0 {
                    return Err(Error::Validation(format!(
                        "at-most-{} penalty at level {} must be positive",
                        r, q
                    )));
                }
                if w < table[(q - 1) as usize] {
                    return Err(Error::Validation(format!(
                        "at-most-{} penalties must not decrease: level {} below level {}",
                        r,
                        q,
                        q - 1
                    )));
                }
            }
        }
        Ok(Self::build(ConstraintKind::AtMost, scope, r, table))
    }

    /// An at-least-`r` constraint with explicit level penalties.
    ///
    /// Counts of `r` and above must be absent or zero, counts below `r`
    /// must be present, positive and non-increasing in the count.
    pub fn at_least(
        scope: StepSet,
        r: u32,
        levels: &[(u32, Weight)],
    ) -> Result<WeightedConstraint, Error> {
        let size = Self::check_scope_threshold("at-least", scope, r)?;
        let mut table = Self::spread_levels("at-least", size, levels)?;
        for q in 1..=size {
            let w = table[q as usize];
            if q >= r {
                if w != 0 {
                    return Err(Error::Validation(format!(
                        "at-least-{} penalty at level {} must be 0, got {}",
                        r, q, w
                    )));
                }
            } else {
                if w <= 0 {
                    return Err(Error::Validation(format!(
                        "at-least-{} penalty at level {} must be positive",
                        r, q
                    )));
                }
                if q > 1 && w > table[(q - 1) as usize] {
                    return Err(Error::Validation(format!(
                        "at-least-{} penalties must not increase: level {} above level {}",
                        r,
                        q,
                        q - 1
                    )));
                }
            }
        }
        // The vacuous level 0 extends the anti-monotone table.
        table[0] = table[1];
        Ok(Self::build(ConstraintKind::AtLeast, scope, r, table))
    }

    fn check_scope_threshold(kind: &str, scope: StepSet, r: u32) -> Result<u32, Error> {
        let size = scope.len();
        if size == 0 {
            return Err(Error::Validation(format!("{} scope is empty", kind)));
        }
        if r == 0 || r > size {
            return Err(Error::Validation(format!(
                "{} threshold {} out of range [1, {}]",
                kind, r, size
            )));
        }
        Ok(size)
    }

    fn spread_levels(kind: &str, size: u32, levels: &[(u32, Weight)]) -> Result<Vec<i64>, Error> {
        let mut table = vec![0i64; size as usize + 1];
        for &(q, w) in levels {
            if q == 0 || q > size {
                return Err(Error::Validation(format!(
                    "{} penalty level {} out of range [1, {}]",
                    kind, q, size
                )));
            }
            if w.0 < 0 {
                return Err(Error::Validation(format!(
                    "{} penalty at level {} is negative",
                    kind, q
                )));
            }
            table[q as usize] = w.0;
        }
        Ok(table)
    }

    fn build(
        kind: ConstraintKind,
        scope: StepSet,
        threshold: u32,
        penalties: Vec<i64>,
    ) -> WeightedConstraint {
        let bound_table = compute_bound_table(&penalties, scope.len());
        WeightedConstraint {
            kind,
            scope,
            threshold,
            penalties,
            bound_table,
        }
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn scope(&self) -> StepSet {
        self.scope
    }

    pub fn scope_size(&self) -> u32 {
        self.scope.len()
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    /// Penalty for `q` distinct users over the scope.
    pub fn penalty_at(&self, q: u32) -> Weight {
        Weight(self.penalties[q as usize])
    }

    /// Largest penalty of the table.
    pub fn max_penalty(&self) -> Weight {
        Weight(self.penalties.iter().copied().max().unwrap_or(0))
    }

    /// The explicitly penalised levels, ascending.
    pub fn positive_levels(&self) -> Vec<(u32, Weight)> {
        (1..=self.scope_size())
            .filter(|&q| self.penalties[q as usize] > 0)
            .map(|q| (q, Weight(self.penalties[q as usize])))
            .collect()
    }

    /// Scope statistics of a pattern with respect to this constraint.
    pub fn stats_of(&self, pattern: &Pattern) -> ScopeStats {
        let mut q = 0;
        for b in pattern.blocks() {
            if b.intersects(self.scope) {
                q += 1;
            }
        }
        ScopeStats {
            intersecting_blocks: q,
            covered_scope: self.scope.intersection(pattern.covered()).len(),
        }
    }

    /// Weight of the constraint for any complete plan with this pattern.
    pub fn weight_of_pattern(&self, pattern: &Pattern) -> Weight {
        let stats = self.stats_of(pattern);
        debug_assert_eq!(stats.covered_scope, self.scope_size());
        self.penalty_at(stats.intersecting_blocks)
    }

    /// Lower bound `l(q, a)` on the constraint weight of any complete
    /// pattern extending one with the given scope statistics.
    pub fn lower_bound(&self, stats: ScopeStats) -> Weight {
        let stride = self.scope_size() as usize + 1;
        debug_assert!(stats.intersecting_blocks <= stats.covered_scope);
        debug_assert!(stats.covered_scope <= self.scope_size());
        Weight(
            self.bound_table
                [stats.covered_scope as usize * stride + stats.intersecting_blocks as usize],
        )
    }
}

/// Tabulate l(q, a) = penalties[q] if a = |scope|, else
/// min(l(q, a+1), l(q+1, a+1)), for 0 <= q <= a <= |scope|.
fn compute_bound_table(penalties: &[i64], scope_size: u32) -> Vec<i64> {
    let size = scope_size as usize;
    let stride = size + 1;
    let mut table = vec![0i64; stride * stride];
    for q in 0..=size {
        table[size * stride + q] = penalties[q];
    }
    for a in (0..size).rev() {
        for q in 0..=a {
            let keep = table[(a + 1) * stride + q];
            let grow = table[(a + 1) * stride + q + 1];
            table[a * stride + q] = keep.min(grow);
        }
    }
    table
}
