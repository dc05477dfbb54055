//! Shared samplers for the integration and acceptance suites.

use vwsp::authorisation::{AuthorisationModel, UserAuthorisation};
use vwsp::constraints::WeightedConstraint;
use vwsp::model::{Plan, StepId, StepSet, UserId, Weight};
use vwsp::rng::SplitMix64;
use vwsp::WorkflowInstance;

pub fn step_set(rng: &mut SplitMix64, k: u32, size: u32) -> StepSet {
    let candidates: Vec<u32> = (0..k).collect();
    StepSet::from_steps(
        rng.subset(&candidates, size as usize)
            .into_iter()
            .map(StepId),
    )
}

pub fn random_user(rng: &mut SplitMix64, k: u32) -> UserAuthorisation {
    match rng.uniform(0, 3) {
        0 => UserAuthorisation::Additive {
            step_weights: (0..k)
                .map(|_| {
                    if rng.uniform(0, 2) == 0 {
                        0
                    } else {
                        rng.uniform(1, 12) as i64
                    }
                })
                .collect(),
        },
        1 => {
            let a_size = rng.uniform(0, (k - 1) as u64) as u32;
            let a = step_set(rng, k, a_size);
            let rest: Vec<u32> = (0..k).filter(|&s| !a.contains(StepId(s))).collect();
            let b_size = rng.uniform(0, rest.len().min(2) as u64) as usize;
            let b = StepSet::from_steps(rng.subset(&rest, b_size).into_iter().map(StepId));
            UserAuthorisation::Employee {
                primary: a,
                secondary: b,
            }
        }
        2 => {
            let size = rng.uniform(1, k as u64) as u32;
            UserAuthorisation::Consultant {
                available: step_set(rng, k, size),
            }
        }
        _ => {
            // Monotone non-additive table: a set weighs as much as its
            // heaviest step.
            let base: Vec<i64> = (0..k).map(|_| rng.uniform(0, 8) as i64).collect();
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
    }
}

pub fn random_constraint(rng: &mut SplitMix64, k: u32) -> Option<WeightedConstraint> {
    match rng.uniform(0, 2) {
        0 => {
            let scope = step_set(rng, k, 2);
            let penalty = [1, 5, 100, 1_000_000][rng.uniform(0, 3) as usize];
            Some(WeightedConstraint::not_equals(scope, Weight(penalty)).unwrap())
        }
        1 => {
            let size = rng.uniform(2, k.min(5) as u64) as u32;
            let scope = step_set(rng, k, size);
            let r = rng.uniform(1, (size - 1) as u64) as u32;
            let base = rng.uniform(1, 30) as i64;
            let levels: Vec<(u32, Weight)> = (r + 1..=size)
                .map(|q| (q, Weight(base * (q - r) as i64)))
                .collect();
            Some(WeightedConstraint::at_most(scope, r, &levels).unwrap())
        }
        _ => {
            let size = rng.uniform(2, k.min(5) as u64) as u32;
            let scope = step_set(rng, k, size);
            let r = rng.uniform(2, size as u64) as u32;
            let base = rng.uniform(1, 30) as i64;
            let levels: Vec<(u32, Weight)> = (1..r)
                .map(|q| (q, Weight(base * (r - q) as i64)))
                .collect();
            Some(WeightedConstraint::at_least(scope, r, &levels).unwrap())
        }
    }
}

/// A random instance with mixed constraint kinds and authorisation forms.
pub fn random_instance_sized(rng: &mut SplitMix64, k: u32, n: u32) -> WorkflowInstance {
    let users = (0..n).map(|_| random_user(rng, k)).collect();
    let constraints = (0..rng.uniform(0, 5))
        .filter_map(|_| random_constraint(rng, k))
        .collect();
    WorkflowInstance::new(k, AuthorisationModel::new(users), constraints, None).unwrap()
}

pub fn random_plan(rng: &mut SplitMix64, instance: &WorkflowInstance) -> Plan {
    Plan::complete_from(
        (0..instance.step_count())
            .map(|_| UserId(rng.uniform(0, instance.user_count() as u64 - 1) as u32))
            .collect(),
    )
}
