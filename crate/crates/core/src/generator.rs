//! Pseudo-random benchmark instance generator.
//!
//! Given the step count `k`, the not-equals density `d`, the constraint
//! multiplier `alpha` and a seed, produces a workflow with `10k + 10`
//! users: `10k` employees and 10 external consultants, plus not-equals and
//! counting constraints. All draws happen in a fixed documented order from
//! a single SplitMix64 stream so the same parameters always yield a
//! byte-identical instance file.

use crate::authorisation::{AuthorisationModel, UserAuthorisation, HARD_PENALTY};
use crate::constraints::WeightedConstraint;
use crate::error::Error;
use crate::instance::{GeneratorParams, WorkflowInstance};
use crate::model::{StepId, StepSet, Weight};
use crate::rng::SplitMix64;

pub const CONSULTANT_COUNT: u32 = 10;
pub const EMPLOYEES_PER_STEP: u32 = 10;

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.k < 6 {
            return Err(Error::Validation(format!(
                "generator needs k >= 6 so the employee authorised-set size range \
                 [1, ceil((k-4)/2)] is non-trivial, got k = {}",
                self.k
            )));
        }
        if self.k > crate::model::MAX_STEPS {
            return Err(Error::Validation(format!(
                "generator k = {} exceeds the supported maximum {}",
                self.k,
                crate::model::MAX_STEPS
            )));
        }
        if !(0.0..=1.0).contains(&self.d) {
            return Err(Error::Validation(format!(
                "not-equals density d = {} outside [0, 1]",
                self.d
            )));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::Validation(format!(
                "constraint multiplier alpha = {} must be finite and non-negative",
                self.alpha
            )));
        }
        if self.alpha > 0.0 && self.k < 5 {
            return Err(Error::Validation(
                "counting constraints need scopes of 5 steps, so alpha > 0 requires k >= 5"
                    .into(),
            ));
        }
        if self.alpha * self.k as f64 > 1_000_000.0 {
            return Err(Error::Validation(format!(
                "alpha = {} would generate over a million counting constraints",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Number of not-equals constraints for the given parameters:
/// floor((d * k * (k - 1) + 1) / 2).
pub fn not_equals_count(k: u32, d: f64) -> u64 {
    ((d * (k as f64) * ((k - 1) as f64) + 1.0) / 2.0).floor() as u64
}

/// Number of at-most-3 constraints (and, equally, at-least-3 constraints):
/// alpha * k rounded to the nearest integer, ties up.
pub fn counting_constraint_count(k: u32, alpha: f64) -> u64 {
    (alpha * k as f64 + 0.5).floor() as u64
}

/// Generate the benchmark instance for `params`.
pub fn generate(params: GeneratorParams) -> Result<WorkflowInstance, Error> {
    params.validate()?;
    let k = params.k;
    let mut rng = SplitMix64::new(params.seed);
    let steps: Vec<u32> = (0..k).collect();

    // 1. Employees: |A| uniform in [1, ceil((k-4)/2)], then A, then B of
    //    size 2 disjoint from A.
    let employee_max_a = (k - 4).div_ceil(2) as usize;
    let mut users = Vec::with_capacity((EMPLOYEES_PER_STEP * k + CONSULTANT_COUNT) as usize);
    for _ in 0..EMPLOYEES_PER_STEP * k {
        let size_a = rng.uniform_usize(1, employee_max_a);
        let a = rng.subset(&steps, size_a);
        let a_set = StepSet::from_steps(a.iter().map(|&s| StepId(s)));
        let rest: Vec<u32> = (0..k).filter(|&s| !a_set.contains(StepId(s))).collect();
        let b = rng.subset(&rest, 2);
        users.push(UserAuthorisation::Employee {
            primary: a_set,
            secondary: StepSet::from_steps(b.iter().map(|&s| StepId(s))),
        });
    }

    // 2. Consultants: |A| uniform in [1, ceil(k/4)].
    let consultant_max_a = k.div_ceil(4) as usize;
    for _ in 0..CONSULTANT_COUNT {
        let size_a = rng.uniform_usize(1, consultant_max_a);
        let a = rng.subset(&steps, size_a);
        users.push(UserAuthorisation::Consultant {
            available: StepSet::from_steps(a.iter().map(|&s| StepId(s))),
        });
    }

    // 3. Distinct not-equals constraints, drawn by rejection.
    let mut constraints = Vec::new();
    let mut seen_pairs = std::collections::HashSet::new();
    for _ in 0..not_equals_count(k, params.d) {
        loop {
            let pair = rng.subset(&steps, 2);
            if seen_pairs.insert((pair[0], pair[1])) {
                let scope = StepSet::from_steps(pair.iter().map(|&s| StepId(s)));
                constraints.push(WeightedConstraint::not_equals(scope, Weight(HARD_PENALTY))?);
                break;
            }
        }
    }

    // 4. Counting constraints over uniform 5-step scopes; duplicates among
    //    scopes are permitted. All at-most-3 first, then all at-least-3.
    let counting = counting_constraint_count(k, params.alpha);
    for _ in 0..counting {
        let scope = rng.subset(&steps, 5);
        let scope = StepSet::from_steps(scope.iter().map(|&s| StepId(s)));
        constraints.push(WeightedConstraint::at_most(
            scope,
            3,
            &[(4, Weight(5)), (5, Weight(10))],
        )?);
    }
    for _ in 0..counting {
        let scope = rng.subset(&steps, 5);
        let scope = StepSet::from_steps(scope.iter().map(|&s| StepId(s)));
        constraints.push(WeightedConstraint::at_least(
            scope,
            3,
            &[(1, Weight(HARD_PENALTY)), (2, Weight(1))],
        )?);
    }

    WorkflowInstance::new(
        k,
        AuthorisationModel::new(users),
        constraints,
        Some(params),
    )
}
