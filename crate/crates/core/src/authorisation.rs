//! The weighted set-authorisation function: the penalty for a user
//! executing exactly a given set of steps.
//!
//! The function is kept in structured per-user closed forms rather than an
//! exhaustive table; the table form exists for tiny hand-built instances
//! and oracle tests only. Every form is monotone in the step set, which is
//! the load-bearing property behind lower-bound admissibility.

use crate::error::Error;
use crate::model::{Plan, StepSet, UserId, Weight, MAX_STEPS};

pub const SOFT_UNIT: i64 = 10;
pub const CONSULTANT_FEE: i64 = 20;
pub const HARD_PENALTY: i64 = 1_000_000;

/// Largest k for which a table-form user is accepted: the table must list
/// all 2^k subsets.
pub const MAX_TABLE_STEPS: u32 = 16;

/// The authorisation weight function of a single user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UserAuthorisation {
    /// Per-step weights; the weight of a set is the sum over its members.
    Additive { step_weights: Vec<i64> },
    /// Employee: steps in `primary` are free, steps in `secondary` cost 10
    /// each, anything else costs 10^6 per step.
    Employee { primary: StepSet, secondary: StepSet },
    /// External consultant: a flat fee of 20 for touching `available` at
    /// all, plus 10^6 per step outside it.
    Consultant { available: StepSet },
    /// Explicit weight per subset, indexed by step-set mask. Must be total
    /// over 2^k and monotone.
    Table { weights: Vec<i64> },
}

impl UserAuthorisation {
    /// The weight this user incurs for executing exactly the steps `t`.
    pub fn set_weight(&self, t: StepSet) -> Weight {
        match self {
            UserAuthorisation::Additive { step_weights } => {
                Weight(t.iter().map(|s| step_weights[s.index()]).sum())
            }
            UserAuthorisation::Employee { primary, secondary } => {
                let soft = t.intersection(*secondary).len() as i64;
                let hard = t.difference(primary.union(*secondary)).len() as i64;
                Weight(soft * SOFT_UNIT + hard * HARD_PENALTY)
            }
            UserAuthorisation::Consultant { available } => {
                if t.is_empty() {
                    Weight(0)
                } else {
                    let outside = t.difference(*available).len() as i64;
                    if t.intersects(*available) {
                        Weight(outside * HARD_PENALTY + CONSULTANT_FEE)
                    } else {
                        Weight(outside * HARD_PENALTY)
                    }
                }
            }
            UserAuthorisation::Table { weights } => Weight(weights[t.0 as usize]),
        }
    }

    /// Steps this user can execute at zero cost when assigned alone.
    ///
    /// Used by the decision-problem reduction; for consultants this is
    /// empty because any non-empty assignment costs at least the fee.
    pub fn zero_cost_steps(&self, k: u32) -> StepSet {
        match self {
            UserAuthorisation::Additive { step_weights } => StepSet::from_steps(
                (0..k)
                    .filter(|&s| step_weights[s as usize] == 0)
                    .map(crate::model::StepId),
            ),
            UserAuthorisation::Employee { primary, .. } => *primary,
            UserAuthorisation::Consultant { .. } => StepSet::EMPTY,
            UserAuthorisation::Table { weights } => StepSet::from_steps(
                (0..k)
                    .filter(|&s| weights[1usize << s] == 0)
                    .map(crate::model::StepId),
            ),
        }
    }

    /// Weight of the full step set: by monotonicity, the largest value the
    /// form can take.
    pub fn max_weight(&self, k: u32) -> Weight {
        self.set_weight(StepSet::all(k))
    }

    pub fn validate(&self, k: u32) -> Result<(), Error> {
        match self {
            UserAuthorisation::Additive { step_weights } => {
                if step_weights.len() != k as usize {
                    return Err(Error::Validation(format!(
                        "additive weight vector has {} entries, expected {}",
                        step_weights.len(),
                        k
                    )));
                }
                if let Some(s) = step_weights.iter().position(|&w| w < 0) {
                    return Err(Error::Validation(format!(
                        "additive weight for step {} is negative",
                        s
                    )));
                }
            }
            UserAuthorisation::Employee { primary, secondary } => {
                let full = StepSet::all(k);
                if !primary.is_subset_of(full) || !secondary.is_subset_of(full) {
                    return Err(Error::Validation(
                        "employee step sets mention steps outside the workflow".into(),
                    ));
                }
                if primary.intersects(*secondary) {
                    return Err(Error::Validation(
                        "employee primary and secondary step sets must be disjoint".into(),
                    ));
                }
            }
            UserAuthorisation::Consultant { available } => {
                if !available.is_subset_of(StepSet::all(k)) {
                    return Err(Error::Validation(
                        "consultant step set mentions steps outside the workflow".into(),
                    ));
                }
            }
            UserAuthorisation::Table { weights } => {
                if k > MAX_TABLE_STEPS {
                    return Err(Error::TooLarge {
                        what: "table-form authorisation",
                        detail: format!("k = {} exceeds the table limit {}", k, MAX_TABLE_STEPS),
                    });
                }
                if weights.len() != 1usize << k {
                    return Err(Error::Validation(format!(
                        "authorisation table has {} entries, expected {} (total over all subsets)",
                        weights.len(),
                        1usize << k
                    )));
                }
                if weights[0] != 0 {
                    return Err(Error::Validation(
                        "authorisation table must give the empty set weight 0".into(),
                    ));
                }
                for mask in 0..weights.len() {
                    if weights[mask] < 0 {
                        return Err(Error::Validation(format!(
                            "authorisation table weight for mask {:#x} is negative",
                            mask
                        )));
                    }
                    for s in 0..k {
                        let with = mask | 1usize << s;
                        if with != mask && weights[mask] > weights[with] {
                            return Err(Error::Validation(format!(
                                "authorisation table is not monotone: weight of mask {:#x} \
                                 exceeds weight of mask {:#x}",
                                mask, with
                            )));
                        }
                    }
                }
                // A set weighs zero exactly when every step in it is free
                // on its own; monotonicity gives one direction, this checks
                // the other.
                let free_steps = (0..k)
                    .filter(|&s| weights[1usize << s] == 0)
                    .fold(0usize, |m, s| m | 1usize << s);
                for (mask, &weight) in weights.iter().enumerate() {
                    if mask & !free_steps == 0 && weight != 0 {
                        return Err(Error::Validation(format!(
                            "authorisation table gives mask {:#x} weight {} although every \
                             step in it is individually free",
                            mask, weight
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The authorisation side of an instance: one weight form per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorisationModel {
    users: Vec<UserAuthorisation>,
}

impl AuthorisationModel {
    pub fn new(users: Vec<UserAuthorisation>) -> AuthorisationModel {
        AuthorisationModel { users }
    }

    pub fn user_count(&self) -> u32 {
        self.users.len() as u32
    }

    pub fn user(&self, u: UserId) -> &UserAuthorisation {
        &self.users[u.index()]
    }

    pub fn users(&self) -> &[UserAuthorisation] {
        &self.users
    }

    /// ω(T, u).
    #[inline]
    pub fn set_weight(&self, t: StepSet, u: UserId) -> Weight {
        self.users[u.index()].set_weight(t)
    }

    /// Authorisation weight of a complete plan: the sum of set weights over
    /// the non-empty user preimages.
    pub fn plan_weight(&self, plan: &Plan) -> Result<Weight, Error> {
        if !plan.is_complete() {
            return Err(Error::IncompletePlan);
        }
        let mut per_user = vec![StepSet::EMPTY; self.users.len()];
        for s in 0..plan.step_count() {
            let step = crate::model::StepId(s);
            per_user[plan.get(step).unwrap().index()].insert(step);
        }
        Ok((0..self.users.len())
            .filter(|&u| !per_user[u].is_empty())
            .map(|u| self.users[u].set_weight(per_user[u]))
            .sum())
    }

    /// Minimum set weight of `t` over all users, with the smallest-index
    /// user attaining it.
    pub fn block_min_weight(&self, t: StepSet) -> (Weight, UserId) {
        debug_assert!(!t.is_empty());
        let mut best = Weight(i64::MAX);
        let mut who = UserId(0);
        for (u, auth) in self.users.iter().enumerate() {
            let w = auth.set_weight(t);
            if w < best {
                best = w;
                who = UserId(u as u32);
            }
        }
        (best, who)
    }

    pub fn validate(&self, k: u32) -> Result<(), Error> {
        if self.users.is_empty() {
            return Err(Error::Validation("instance has no users".into()));
        }
        if k == 0 || k > MAX_STEPS {
            return Err(Error::Validation(format!(
                "step count {} out of range [1, {}]",
                k, MAX_STEPS
            )));
        }
        for (u, auth) in self.users.iter().enumerate() {
            auth.validate(k)
                .map_err(|e| Error::Validation(format!("user {}: {}", u, e)))?;
        }
        Ok(())
    }
}
