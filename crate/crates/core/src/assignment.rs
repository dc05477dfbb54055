//! Minimum-weight realisation of a complete pattern.
//!
//! Each block of the pattern must go to a distinct user; the cost of giving
//! block `q` to user `u` is the set-authorisation weight of the block for
//! that user. A rectangular Hungarian method over blocks x users finds the
//! cheapest such assignment in O(n^3).

use crate::error::Error;
use crate::instance::WorkflowInstance;
use crate::model::{Pattern, Plan, UserId, Weight};

const INF: i128 = i128::MAX / 4;

/// Minimum-cost assignment of every row to a distinct column.
///
/// `cost` is row-major with `cols` entries per row; entries of `i64::MAX`
/// mark forbidden edges. Returns the total cost and the chosen column per
/// row, or `None` when no finite assignment exists.
fn hungarian(cost: &[i64], rows: usize, cols: usize) -> Option<(i64, Vec<usize>)> {
    debug_assert!(rows <= cols);
    debug_assert_eq!(cost.len(), rows * cols);
    let at = |r: usize, c: usize| -> i128 {
        let v = cost[r * cols + c];
        if v == i64::MAX {
            INF
        } else {
            v as i128
        }
    };

    // Potentials and matching, 1-indexed with column 0 as the virtual
    // source of each augmenting search.
    let mut row_pot = vec![0i128; rows + 1];
    let mut col_pot = vec![0i128; cols + 1];
    let mut matched_row = vec![0usize; cols + 1];
    let mut came_from = vec![0usize; cols + 1];

    for r in 1..=rows {
        matched_row[0] = r;
        let mut j0 = 0usize;
        let mut min_to = vec![INF; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - row_pot[i0] - col_pot[j];
                if cur < min_to[j] {
                    min_to[j] = cur;
                    came_from[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            if delta >= INF {
                // Every reachable edge is forbidden.
                return None;
            }
            for j in 0..=cols {
                if used[j] {
                    row_pot[matched_row[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = came_from[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut assignment = vec![usize::MAX; rows];
    for j in 1..=cols {
        if matched_row[j] != 0 {
            assignment[matched_row[j] - 1] = j - 1;
        }
    }
    let mut total = 0i128;
    for (r, &c) in assignment.iter().enumerate() {
        let v = at(r, c);
        if v >= INF {
            return None;
        }
        total += v;
    }
    Some((total as i64, assignment))
}

/// Block-by-user cost matrix of a pattern, with edges at or above `bound`
/// removed (they cannot take part in any assignment cheaper than `bound`).
fn cost_matrix(instance: &WorkflowInstance, pattern: &Pattern, bound: Option<Weight>) -> Vec<i64> {
    let n = instance.user_count() as usize;
    let mut cost = Vec::with_capacity(pattern.block_count() * n);
    for &block in pattern.blocks() {
        for u in 0..n {
            let w = instance
                .authorisations()
                .set_weight(block, UserId(u as u32))
                .0;
            match bound {
                Some(b) if w >= b.0 => cost.push(i64::MAX),
                _ => cost.push(w),
            }
        }
    }
    cost
}

fn check_realisable(instance: &WorkflowInstance, pattern: &Pattern) -> Result<(), Error> {
    if pattern.block_count() as u32 > instance.user_count() {
        return Err(Error::PatternUnrealisable {
            blocks: pattern.block_count(),
            users: instance.user_count(),
        });
    }
    Ok(())
}

/// Minimum authorisation weight over all plans realising `pattern`, if it
/// is below `bound`.
///
/// A `None` bound computes the exact optimum; with a bound, users whose
/// block cost already reaches the bound are never considered, and `None`
/// is returned when every realisation costs at least the bound.
pub fn assignment_weight(
    instance: &WorkflowInstance,
    pattern: &Pattern,
    bound: Option<Weight>,
) -> Result<Option<Weight>, Error> {
    check_realisable(instance, pattern)?;
    if pattern.block_count() == 0 {
        return Ok(Some(Weight(0)));
    }
    let cost = cost_matrix(instance, pattern, bound);
    match hungarian(&cost, pattern.block_count(), instance.user_count() as usize) {
        Some((total, _)) => match bound {
            Some(b) if total >= b.0 => Ok(None),
            _ => Ok(Some(Weight(total))),
        },
        None => Ok(None),
    }
}

/// The optimal plan realising a complete pattern, together with its
/// authorisation weight.
///
/// Among all minimum-weight realisations, ties are resolved toward the
/// lexicographically smallest user sequence in block order: the first
/// block gets the smallest user that still allows an optimal completion,
/// then the second, and so on.
pub fn optimal_plan_for_pattern(
    instance: &WorkflowInstance,
    pattern: &Pattern,
) -> Result<(Plan, Weight), Error> {
    check_realisable(instance, pattern)?;
    let rows = pattern.block_count();
    let n = instance.user_count() as usize;
    if rows == 0 {
        return Ok((Plan::empty(instance.step_count()), Weight(0)));
    }
    let cost = cost_matrix(instance, pattern, None);
    let (optimum, _) = hungarian(&cost, rows, n).expect("unbounded matching is always feasible");

    // Lexicographic refinement: fix blocks in order, each to the smallest
    // user that keeps an exact-optimum completion of the remaining blocks.
    let mut chosen: Vec<usize> = Vec::with_capacity(rows);
    let mut taken = vec![false; n];
    let mut budget = optimum;
    for q in 0..rows {
        let remaining = rows - q - 1;
        let mut fixed = None;
        for u in 0..n {
            if taken[u] {
                continue;
            }
            let edge = cost[q * n + u];
            if edge > budget {
                continue;
            }
            let completion = if remaining == 0 {
                Some(0)
            } else {
                let mut sub = Vec::with_capacity(remaining * (n - q - 1));
                for r in q + 1..rows {
                    for v in 0..n {
                        if !taken[v] && v != u {
                            sub.push(cost[r * n + v]);
                        }
                    }
                }
                hungarian(&sub, remaining, n - q - 1).map(|(t, _)| t)
            };
            if completion == Some(budget - edge) {
                fixed = Some(u);
                break;
            }
        }
        let u = fixed.expect("an optimal completion exists by construction");
        taken[u] = true;
        budget -= cost[q * n + u];
        chosen.push(u);
    }

    let mut plan = Plan::empty(instance.step_count());
    for (q, &block) in pattern.blocks().iter().enumerate() {
        for s in block.iter() {
            plan.assign(s, UserId(chosen[q] as u32));
        }
    }
    Ok((plan, Weight(optimum)))
}
