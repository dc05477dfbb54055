//! Exhaustive reference solvers.
//!
//! Two independent routes to the optimum, used as ground truth everywhere
//! else: one enumerates every plan and evaluates the weight definitions
//! directly (no patterns, no matching), the other enumerates every complete
//! pattern and realises each with the matching code. A bug in either route
//! cannot mask itself in the other.

use crate::assignment;
use crate::error::Error;
use crate::instance::WorkflowInstance;
use crate::model::{enumerate_complete_patterns, Pattern, Plan, StepSet, UserId, Weight};

/// Plans are refused above this enumeration size.
pub const MAX_PLAN_ENUMERATION: u64 = 10_000_000;
/// Patterns are refused above this Bell number.
pub const MAX_PATTERN_ENUMERATION: u64 = 1_000_000;

/// What an oracle found.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub weight: Weight,
    /// One optimal plan (the first one in the oracle's enumeration order).
    pub plan: Plan,
    /// How many complete plans attain the optimal weight.
    pub optimal_count: u64,
    /// Candidates enumerated: plans for the plan oracle, patterns for the
    /// pattern oracle.
    pub candidates_evaluated: u64,
}

fn checked_plan_space(instance: &WorkflowInstance) -> Result<u64, Error> {
    let n = instance.user_count() as u64;
    let mut total = 1u64;
    for _ in 0..instance.step_count() {
        total = total.saturating_mul(n);
        if total > MAX_PLAN_ENUMERATION {
            return Err(Error::TooLarge {
                what: "plan enumeration",
                detail: format!(
                    "n^k = {}^{} exceeds {}",
                    n,
                    instance.step_count(),
                    MAX_PLAN_ENUMERATION
                ),
            });
        }
    }
    Ok(total)
}

fn bell_number_checked(k: u32) -> Option<u64> {
    // Bell triangle, bailing out once the guard is passed.
    let mut row = vec![1u64];
    for _ in 1..=k {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let sum = next.last().unwrap().checked_add(x)?;
            if sum > MAX_PATTERN_ENUMERATION {
                return None;
            }
            next.push(sum);
        }
        row = next;
    }
    Some(row[0])
}

/// Enumerate all `n^k` complete plans and take the cheapest, evaluating
/// weights straight from the definitions.
pub fn oracle_by_plans(instance: &WorkflowInstance) -> Result<OracleResult, Error> {
    let total = checked_plan_space(instance)?;
    let k = instance.step_count() as usize;
    let n = instance.user_count();
    let scopes: Vec<Vec<usize>> = instance
        .constraints()
        .iter()
        .map(|c| c.scope().iter().map(|s| s.index()).collect())
        .collect();

    let mut users = vec![UserId(0); k];
    let mut preimages = vec![StepSet::EMPTY; n as usize];
    let mut best = i64::MAX;
    let mut best_plan: Option<Vec<UserId>> = None;
    let mut optimal_count = 0u64;
    let mut scratch: Vec<u32> = Vec::with_capacity(k);

    for _ in 0..total {
        // Constraint weight: the penalty of each constraint at the number
        // of distinct users over its scope.
        let mut weight = 0i64;
        for (c, scope) in instance.constraints().iter().zip(&scopes) {
            scratch.clear();
            scratch.extend(scope.iter().map(|&s| users[s].0));
            scratch.sort_unstable();
            scratch.dedup();
            weight += c.penalty_at(scratch.len() as u32).0;
        }
        // Authorisation weight: the set weight of each non-empty preimage.
        for p in preimages.iter_mut() {
            *p = StepSet::EMPTY;
        }
        for (s, u) in users.iter().enumerate() {
            preimages[u.index()].insert(crate::model::StepId(s as u32));
        }
        for (u, &p) in preimages.iter().enumerate() {
            if !p.is_empty() {
                weight += instance
                    .authorisations()
                    .set_weight(p, UserId(u as u32))
                    .0;
            }
        }

        if weight < best {
            best = weight;
            best_plan = Some(users.clone());
            optimal_count = 1;
        } else if weight == best {
            optimal_count += 1;
        }

        // Advance the user odometer, last step fastest: lexicographic
        // order over (u(s0), u(s1), ..).
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if users[pos].0 + 1 < n {
                users[pos].0 += 1;
                break;
            }
            users[pos] = UserId(0);
        }
    }

    let plan = Plan::complete_from(best_plan.expect("at least one plan exists"));
    Ok(OracleResult {
        weight: Weight(best),
        plan,
        optimal_count,
        candidates_evaluated: total,
    })
}

/// Sweep every complete pattern once: the optimal weight, the first
/// pattern attaining it, and the number of patterns enumerated.
fn pattern_sweep(instance: &WorkflowInstance) -> Result<(i64, Option<Pattern>, u64), Error> {
    let k = instance.step_count();
    let bell = bell_number_checked(k).ok_or_else(|| Error::TooLarge {
        what: "pattern enumeration",
        detail: format!("B_{} exceeds {}", k, MAX_PATTERN_ENUMERATION),
    })?;
    let mut best = i64::MAX;
    let mut best_pattern: Option<Pattern> = None;
    let mut evaluated = 0u64;
    for pattern in enumerate_complete_patterns(k) {
        evaluated += 1;
        if pattern.block_count() as u32 > instance.user_count() {
            continue;
        }
        let constraint_term = instance.constraint_weight_of_pattern(&pattern).0;
        let matching = assignment::assignment_weight(instance, &pattern, None)?
            .expect("unbounded matching of a realisable pattern");
        let total = constraint_term + matching.0;
        if total < best {
            best = total;
            best_pattern = Some(pattern);
        }
    }
    debug_assert_eq!(evaluated, bell);
    Ok((best, best_pattern, evaluated))
}

/// Optimal weight by pattern enumeration alone, without counting the
/// optimal plans; usable when the ties are innumerable.
pub fn optimal_weight_by_patterns(instance: &WorkflowInstance) -> Result<Weight, Error> {
    let (best, best_pattern, _) = pattern_sweep(instance)?;
    best_pattern.ok_or_else(|| {
        Error::Validation("no realisable pattern; the instance has no users".into())
    })?;
    Ok(Weight(best))
}

/// Enumerate all `B_k` complete patterns, realise each with a matching and
/// take the cheapest.
pub fn oracle_by_patterns(instance: &WorkflowInstance) -> Result<OracleResult, Error> {
    let k = instance.step_count();
    let (best, best_pattern, evaluated) = pattern_sweep(instance)?;

    // Second pass: plans of weight exactly `best` are the minimum-cost
    // realisations of the patterns whose own optimum equals `best`. The
    // count can be astronomically large (think every plan of a fully
    // authorised instance), so the backtracking runs on a work budget and
    // refuses rather than stalling.
    let mut optimal_count = 0u64;
    let mut budget = MAX_COUNTING_STEPS;
    for pattern in enumerate_complete_patterns(k) {
        if pattern.block_count() as u32 > instance.user_count() {
            continue;
        }
        let constraint_term = instance.constraint_weight_of_pattern(&pattern).0;
        let matching = assignment::assignment_weight(instance, &pattern, None)?
            .expect("unbounded matching of a realisable pattern");
        if constraint_term + matching.0 == best {
            optimal_count += count_min_cost_assignments(instance, &pattern, matching.0, &mut budget)
                .ok_or_else(|| Error::TooLarge {
                    what: "optimal-plan counting",
                    detail: format!(
                        "more than {} enumeration steps needed to count the optimal plans",
                        MAX_COUNTING_STEPS
                    ),
                })?;
        }
    }

    let pattern = best_pattern.ok_or_else(|| {
        Error::Validation("no realisable pattern; the instance has no users".into())
    })?;
    let (plan, matching) = assignment::optimal_plan_for_pattern(instance, &pattern)?;
    debug_assert_eq!(
        matching.0 + instance.constraint_weight_of_pattern(&pattern).0,
        best
    );
    Ok(OracleResult {
        weight: Weight(best),
        plan,
        optimal_count,
        candidates_evaluated: evaluated,
    })
}

/// Work ceiling for counting optimal realisations; the count itself stays
/// below this, so it can never overflow.
pub const MAX_COUNTING_STEPS: u64 = 100_000_000;

/// Number of injective block-to-user assignments of total cost exactly
/// `target`, where `target` is the minimum. Backtracking with the
/// remaining per-block minima as an admissible bound; `None` when the
/// shared work budget runs out.
fn count_min_cost_assignments(
    instance: &WorkflowInstance,
    pattern: &Pattern,
    target: i64,
    budget: &mut u64,
) -> Option<u64> {
    let blocks = pattern.blocks();
    let n = instance.user_count() as usize;
    let cost: Vec<Vec<i64>> = blocks
        .iter()
        .map(|&b| {
            (0..n)
                .map(|u| instance.authorisations().set_weight(b, UserId(u as u32)).0)
                .collect()
        })
        .collect();
    // Suffix sums of per-block minima (over all users): a lower bound on
    // the cost of completing from block q.
    let mut suffix_min = vec![0i64; blocks.len() + 1];
    for q in (0..blocks.len()).rev() {
        let row_min = cost[q].iter().copied().min().unwrap_or(0);
        suffix_min[q] = suffix_min[q + 1] + row_min;
    }

    fn rec(
        cost: &[Vec<i64>],
        suffix_min: &[i64],
        used: &mut Vec<bool>,
        q: usize,
        spent: i64,
        target: i64,
        budget: &mut u64,
    ) -> Option<u64> {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        if q == cost.len() {
            return Some(u64::from(spent == target));
        }
        let mut count = 0;
        for u in 0..used.len() {
            if used[u] {
                continue;
            }
            let next = spent + cost[q][u];
            if next + suffix_min[q + 1] > target {
                continue;
            }
            used[u] = true;
            let below = rec(cost, suffix_min, used, q + 1, next, target, budget);
            used[u] = false;
            count += below?;
        }
        Some(count)
    }

    let mut used = vec![false; n];
    rec(&cost, &suffix_min, &mut used, 0, 0, target, budget)
}

/// Random-instance sampler shared by the unit tests of several modules.
#[cfg(test)]
pub(crate) mod tests_support {
    use crate::authorisation::{AuthorisationModel, UserAuthorisation};
    use crate::constraints::WeightedConstraint;
    use crate::instance::WorkflowInstance;
    use crate::model::{StepId, StepSet, Weight};
    use crate::rng::SplitMix64;

    pub fn random_step_set(rng: &mut SplitMix64, k: u32, size: u32) -> StepSet {
        let candidates: Vec<u32> = (0..k).collect();
        StepSet::from_steps(
            rng.subset(&candidates, size as usize)
                .into_iter()
                .map(StepId),
        )
    }

    /// A small instance mixing all constraint kinds and authorisation
    /// forms; sizes bounded by `max_k` and `max_n`.
    pub fn random_small_instance(seed: u64, max_k: u32, max_n: u32) -> WorkflowInstance {
        let mut rng = SplitMix64::new(seed);
        let k = rng.uniform(2, max_k as u64) as u32;
        let n = rng.uniform(1, max_n as u64) as u32;
        random_small_instance_sized(&mut rng, k, n)
    }

    pub fn random_small_instance_sized(rng: &mut SplitMix64, k: u32, n: u32) -> WorkflowInstance {
        let users = (0..n)
            .map(|_| match rng.uniform(0, 3) {
                0 => UserAuthorisation::Additive {
                    step_weights: (0..k)
                        .map(|_| if rng.uniform(0, 2) == 0 { 0 } else { rng.uniform(1, 9) as i64 })
                        .collect(),
                },
                1 => {
                    let a_size = rng.uniform(0, k as u64 - 1) as u32;
                    let a = random_step_set(rng, k, a_size);
                    let rest: Vec<u32> =
                        (0..k).filter(|&s| !a.contains(StepId(s))).collect();
                    let b_size = rng.uniform(0, rest.len().min(2) as u64) as usize;
                    let b = StepSet::from_steps(
                        rng.subset(&rest, b_size).into_iter().map(StepId),
                    );
                    UserAuthorisation::Employee {
                        primary: a,
                        secondary: b,
                    }
                }
                2 => {
                    let size = rng.uniform(1, k as u64) as u32;
                    UserAuthorisation::Consultant {
                        available: random_step_set(rng, k, size),
                    }
                }
                _ => {
                    // Monotone but non-additive: the weight of a set is the
                    // largest per-step base weight it contains.
                    let base: Vec<i64> = (0..k).map(|_| rng.uniform(0, 6) as i64).collect();
                    let weights = (0..1usize << k)
                        .map(|mask| {
                            (0..k)
                                .filter(|&s| mask >> s & 1 == 1)
                                .map(|s| base[s as usize])
                                .max()
                                .unwrap_or(0)
                        })
                        .collect();
                    UserAuthorisation::Table { weights }
                }
            })
            .collect();

        let constraint_count = rng.uniform(0, 4);
        let mut constraints = Vec::new();
        for _ in 0..constraint_count {
            match rng.uniform(0, 2) {
                0 if k >= 2 => {
                    let scope = random_step_set(rng, k, 2);
                    let penalty = [1, 5, 1_000_000][rng.uniform(0, 2) as usize];
                    constraints
                        .push(WeightedConstraint::not_equals(scope, Weight(penalty)).unwrap());
                }
                1 if k >= 2 => {
                    let size = rng.uniform(2, k.min(5) as u64) as u32;
                    let scope = random_step_set(rng, k, size);
                    let r = rng.uniform(1, size as u64 - 1) as u32;
                    let base = rng.uniform(1, 20) as i64;
                    let levels: Vec<(u32, Weight)> = (r + 1..=size)
                        .map(|q| (q, Weight(base * (q - r) as i64)))
                        .collect();
                    constraints.push(WeightedConstraint::at_most(scope, r, &levels).unwrap());
                }
                _ if k >= 2 => {
                    let size = rng.uniform(2, k.min(5) as u64) as u32;
                    let scope = random_step_set(rng, k, size);
                    let r = rng.uniform(2, size as u64) as u32;
                    let base = rng.uniform(1, 20) as i64;
                    let levels: Vec<(u32, Weight)> = (1..r)
                        .map(|q| (q, Weight(base * (r - q) as i64)))
                        .collect();
                    constraints.push(WeightedConstraint::at_least(scope, r, &levels).unwrap());
                }
                _ => {}
            }
        }
        WorkflowInstance::new(k, AuthorisationModel::new(users), constraints, None).unwrap()
    }
}
