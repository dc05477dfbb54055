//! The full problem instance: steps, users, authorisations and weighted
//! constraints, plus the weight decomposition of complete plans.

use crate::authorisation::AuthorisationModel;
use crate::constraints::WeightedConstraint;
use crate::error::Error;
use crate::model::{Pattern, Plan, StepSet, Weight, MAX_STEPS};

/// Parameters the benchmark generator was invoked with, carried as
/// instance metadata.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GeneratorParams {
    pub k: u32,
    pub d: f64,
    pub alpha: f64,
    pub seed: u64,
}

/// A complete problem instance.
///
/// Immutable after construction; all operations on it are pure functions,
/// so instances can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct WorkflowInstance {
    step_count: u32,
    authorisations: AuthorisationModel,
    constraints: Vec<WeightedConstraint>,
    meta: Option<GeneratorParams>,
}

impl WorkflowInstance {
    /// Build and validate an instance.
    pub fn new(
        step_count: u32,
        authorisations: AuthorisationModel,
        constraints: Vec<WeightedConstraint>,
        meta: Option<GeneratorParams>,
    ) -> Result<WorkflowInstance, Error> {
        let instance = WorkflowInstance {
            step_count,
            authorisations,
            constraints,
            meta,
        };
        instance.validate()?;
        Ok(instance)
    }

    fn validate(&self) -> Result<(), Error> {
        if self.step_count == 0 || self.step_count > MAX_STEPS {
            return Err(Error::Validation(format!(
                "step count {} out of range [1, {}]",
                self.step_count, MAX_STEPS
            )));
        }
        self.authorisations.validate(self.step_count)?;
        let full = StepSet::all(self.step_count);
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.scope().is_subset_of(full) {
                return Err(Error::Validation(format!(
                    "constraint {}: scope {} mentions steps outside the workflow",
                    i,
                    c.scope()
                )));
            }
        }
        // Cap the largest possible plan weight so sums cannot overflow:
        // (constraint count + step count) * the largest single penalty must
        // stay below 2^62.
        let max_penalty = self.max_penalty().0.max(1);
        let terms = self.constraints.len() as i64 + self.step_count as i64;
        if terms.checked_mul(max_penalty).is_none() || terms * max_penalty >= 1i64 << 62 {
            return Err(Error::Validation(format!(
                "weights too large: ({} constraints + {} steps) x max penalty {} reaches 2^62",
                self.constraints.len(),
                self.step_count,
                max_penalty
            )));
        }
        Ok(())
    }

    /// Largest penalty appearing anywhere in the instance: constraint
    /// levels and full-set authorisation weights.
    pub fn max_penalty(&self) -> Weight {
        let c = self
            .constraints
            .iter()
            .map(|c| c.max_penalty().0)
            .max()
            .unwrap_or(0);
        let a = self
            .authorisations
            .users()
            .iter()
            .map(|u| u.max_weight(self.step_count).0)
            .max()
            .unwrap_or(0);
        Weight(c.max(a))
    }

    pub fn step_count(&self) -> u32 {
        self.step_count
    }

    pub fn user_count(&self) -> u32 {
        self.authorisations.user_count()
    }

    pub fn authorisations(&self) -> &AuthorisationModel {
        &self.authorisations
    }

    pub fn constraints(&self) -> &[WeightedConstraint] {
        &self.constraints
    }

    pub fn meta(&self) -> Option<&GeneratorParams> {
        self.meta.as_ref()
    }

    /// Constraint weight of a complete plan, straight from the counting
    /// definition.
    pub fn constraint_weight(&self, plan: &Plan) -> Result<Weight, Error> {
        if !plan.is_complete() {
            return Err(Error::IncompletePlan);
        }
        Ok(self
            .constraints
            .iter()
            .map(|c| c.penalty_at(plan.distinct_users_on(c.scope())))
            .sum())
    }

    /// Authorisation weight of a complete plan.
    pub fn authorisation_weight(&self, plan: &Plan) -> Result<Weight, Error> {
        self.authorisations.plan_weight(plan)
    }

    /// Total weight of a complete plan. Zero exactly when the plan is
    /// valid: it satisfies every constraint and only uses authorised users.
    pub fn total_weight(&self, plan: &Plan) -> Result<Weight, Error> {
        Ok(self.constraint_weight(plan)? + self.authorisation_weight(plan)?)
    }

    /// Constraint weight shared by every complete plan with this pattern.
    pub fn constraint_weight_of_pattern(&self, pattern: &Pattern) -> Weight {
        self.constraints
            .iter()
            .map(|c| c.weight_of_pattern(pattern))
            .sum()
    }

    /// The pruning lower bound `L(P)`: the sum of per-constraint bounds
    /// plus, for each block, the cheapest user that could take it.
    ///
    /// For every complete plan whose pattern extends `pattern`, the total
    /// weight is at least this value (authorisation monotonicity makes the
    /// block terms admissible).
    pub fn pattern_lower_bound(&self, pattern: &Pattern) -> Weight {
        let constraint_term: Weight = self
            .constraints
            .iter()
            .map(|c| c.lower_bound(c.stats_of(pattern)))
            .sum();
        let auth_term: Weight = pattern
            .blocks()
            .iter()
            .map(|&b| self.authorisations.block_min_weight(b).0)
            .sum();
        constraint_term + auth_term
    }
}
