//! Mixed integer program export in LP text format, plus a solver-free
//! cross-check that evaluates a plan against the emitted model.
//!
//! The encoding uses one binary `x_s{i}_u{j}` per step-user pair, relaxed
//! `y_c{i}_u{j}` indicators for "user j touches the scope of constraint i",
//! binary penalty steps `p_c{i}_q{q}` whose marginal objective coefficients
//! telescope to the level penalties, and relaxed `z_u{j}` consultant-fee
//! indicators. The exact token grammar is documented in
//! `docs/mip-lp-format.md`.

use std::fmt::Write as _;

use crate::authorisation::{UserAuthorisation, CONSULTANT_FEE, HARD_PENALTY, SOFT_UNIT};
use crate::constraints::{ConstraintKind, WeightedConstraint};
use crate::error::Error;
use crate::instance::WorkflowInstance;
use crate::model::{Plan, StepId, StepSet, UserId, Weight};

/// Additive per-step weights of a user, with the zero-cost steps implied:
/// the MIP objective only carries the positive entries.
enum MipUser {
    /// Employees and additive users: positive per-step weights.
    PerStep(Vec<i64>),
    /// Consultants: a one-off fee for touching `available` plus a per-step
    /// weight outside it.
    Fee {
        available: StepSet,
        fee: i64,
        outside: i64,
    },
}

fn lower_user(user: &UserAuthorisation, k: u32) -> Result<MipUser, Error> {
    match user {
        UserAuthorisation::Additive { step_weights } => Ok(MipUser::PerStep(step_weights.clone())),
        UserAuthorisation::Employee { primary, secondary } => Ok(MipUser::PerStep(
            (0..k)
                .map(|s| {
                    let step = StepId(s);
                    if secondary.contains(step) {
                        SOFT_UNIT
                    } else if !primary.contains(step) {
                        HARD_PENALTY
                    } else {
                        0
                    }
                })
                .collect(),
        )),
        UserAuthorisation::Consultant { available } => Ok(MipUser::Fee {
            available: *available,
            fee: CONSULTANT_FEE,
            outside: HARD_PENALTY,
        }),
        UserAuthorisation::Table { .. } => Err(Error::Unsupported(
            "table-form authorisations have no per-step structure".into(),
        )),
    }
}

/// A constraint lowered for the MIP: not-equals becomes at-least-2.
struct MipConstraint {
    kind: ConstraintKind,
    scope: StepSet,
    threshold: u32,
    penalties: Vec<i64>,
}

fn lower_constraint(c: &WeightedConstraint) -> MipConstraint {
    let size = c.scope_size();
    let penalties = (0..=size).map(|q| c.penalty_at(q).0).collect();
    MipConstraint {
        kind: match c.kind() {
            ConstraintKind::AtMost => ConstraintKind::AtMost,
            // Not-equals is exactly at-least-2 over its two steps.
            ConstraintKind::NotEquals | ConstraintKind::AtLeast => ConstraintKind::AtLeast,
        },
        scope: c.scope(),
        threshold: c.threshold(),
        penalties,
    }
}

/// Penalty-step variables of a lowered constraint, in emission order.
fn penalty_levels(c: &MipConstraint) -> Vec<u32> {
    match c.kind {
        ConstraintKind::AtMost => (c.threshold + 1..=c.scope.len()).collect(),
        ConstraintKind::AtLeast => (1..c.threshold).collect(),
        ConstraintKind::NotEquals => unreachable!("lowered away"),
    }
}

/// Marginal objective coefficient of `p_cq`.
fn marginal(c: &MipConstraint, q: u32) -> i64 {
    match c.kind {
        ConstraintKind::AtMost => c.penalties[q as usize] - c.penalties[q as usize - 1],
        ConstraintKind::AtLeast => c.penalties[q as usize] - c.penalties[q as usize + 1],
        ConstraintKind::NotEquals => unreachable!("lowered away"),
    }
}

/// Emit the instance as an LP-format text model whose optimal objective
/// value equals the instance's optimal plan weight.
pub fn export_mip(instance: &WorkflowInstance) -> Result<String, Error> {
    let k = instance.step_count();
    let n = instance.user_count();
    let users: Vec<MipUser> = instance
        .authorisations()
        .users()
        .iter()
        .map(|u| lower_user(u, k))
        .collect::<Result<_, _>>()?;
    let constraints: Vec<MipConstraint> = instance
        .constraints()
        .iter()
        .map(lower_constraint)
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "\\ valued workflow satisfiability instance");
    let _ = writeln!(
        out,
        "\\ k={} n={} constraints={}",
        k,
        n,
        constraints.len()
    );
    let _ = writeln!(out, "Minimize");
    let mut terms: Vec<String> = Vec::new();
    for (ci, c) in constraints.iter().enumerate() {
        for q in penalty_levels(c) {
            terms.push(format!("{} p_c{}_q{}", marginal(c, q), ci, q));
        }
    }
    for (u, user) in users.iter().enumerate() {
        if let MipUser::PerStep(weights) = user {
            for (s, &w) in weights.iter().enumerate() {
                if w > 0 {
                    terms.push(format!("{} x_s{}_u{}", w, s, u));
                }
            }
        }
    }
    for (u, user) in users.iter().enumerate() {
        if let MipUser::Fee { fee, .. } = user {
            terms.push(format!("{} z_u{}", fee, u));
        }
    }
    for (u, user) in users.iter().enumerate() {
        if let MipUser::Fee {
            available, outside, ..
        } = user
        {
            for s in 0..k {
                if !available.contains(StepId(s)) {
                    terms.push(format!("{} x_s{}_u{}", outside, s, u));
                }
            }
        }
    }
    if terms.is_empty() {
        terms.push("0 x_s0_u0".to_string());
    }
    let _ = writeln!(out, " obj: {}", terms.join(" + "));

    let _ = writeln!(out, "Subject To");
    // One user per step.
    for s in 0..k {
        let row: Vec<String> = (0..n).map(|u| format!("x_s{}_u{}", s, u)).collect();
        let _ = writeln!(out, " assign_s{}: {} = 1", s, row.join(" + "));
    }
    // Counting rows and their ordering rows.
    for (ci, c) in constraints.iter().enumerate() {
        let levels = penalty_levels(c);
        match c.kind {
            ConstraintKind::AtMost => {
                let mut row: Vec<String> = (0..n).map(|u| format!("y_c{}_u{}", ci, u)).collect();
                row.extend(levels.iter().map(|q| format!("- p_c{}_q{}", ci, q)));
                let _ = writeln!(
                    out,
                    " atmost_c{}: {} <= {}",
                    ci,
                    row.join(" + ").replace("+ -", "-"),
                    c.threshold
                );
                for q in c.threshold + 1..c.scope.len() {
                    let _ = writeln!(
                        out,
                        " ord_c{}_q{}: p_c{}_q{} - p_c{}_q{} >= 0",
                        ci,
                        q,
                        ci,
                        q,
                        ci,
                        q + 1
                    );
                }
            }
            ConstraintKind::AtLeast => {
                let mut row: Vec<String> = (0..n).map(|u| format!("y_c{}_u{}", ci, u)).collect();
                row.extend(levels.iter().map(|q| format!("p_c{}_q{}", ci, q)));
                let _ = writeln!(
                    out,
                    " atleast_c{}: {} >= {}",
                    ci,
                    row.join(" + "),
                    c.threshold
                );
                for q in 1..c.threshold.saturating_sub(1) {
                    let _ = writeln!(
                        out,
                        " ord_c{}_q{}: p_c{}_q{} - p_c{}_q{} <= 0",
                        ci,
                        q,
                        ci,
                        q,
                        ci,
                        q + 1
                    );
                }
            }
            ConstraintKind::NotEquals => unreachable!("lowered away"),
        }
    }
    // Scope indicators.
    for (ci, c) in constraints.iter().enumerate() {
        match c.kind {
            ConstraintKind::AtMost => {
                for u in 0..n {
                    for s in c.scope.iter() {
                        let _ = writeln!(
                            out,
                            " ycover_c{}_u{}_s{}: y_c{}_u{} - x_s{}_u{} >= 0",
                            ci, u, s.0, ci, u, s.0, u
                        );
                    }
                }
            }
            ConstraintKind::AtLeast => {
                for u in 0..n {
                    let xs: Vec<String> =
                        c.scope.iter().map(|s| format!("- x_s{}_u{}", s.0, u)).collect();
                    let _ = writeln!(
                        out,
                        " ysum_c{}_u{}: y_c{}_u{} {} <= 0",
                        ci,
                        u,
                        ci,
                        u,
                        xs.join(" ")
                    );
                }
            }
            ConstraintKind::NotEquals => unreachable!("lowered away"),
        }
    }
    // Consultant fee triggers.
    for (u, user) in users.iter().enumerate() {
        if let MipUser::Fee { available, .. } = user {
            for s in available.iter() {
                let _ = writeln!(
                    out,
                    " zlink_u{}_s{}: z_u{} - x_s{}_u{} >= 0",
                    u, s.0, u, s.0, u
                );
            }
        }
    }

    let _ = writeln!(out, "Bounds");
    for ci in 0..constraints.len() {
        for u in 0..n {
            let _ = writeln!(out, " 0 <= y_c{}_u{} <= 1", ci, u);
        }
    }
    for (u, user) in users.iter().enumerate() {
        if matches!(user, MipUser::Fee { .. }) {
            let _ = writeln!(out, " 0 <= z_u{} <= 1", u);
        }
    }

    let _ = writeln!(out, "Binary");
    for s in 0..k {
        for u in 0..n {
            let _ = writeln!(out, " x_s{}_u{}", s, u);
        }
    }
    for (ci, c) in constraints.iter().enumerate() {
        for q in penalty_levels(c) {
            let _ = writeln!(out, " p_c{}_q{}", ci, q);
        }
    }
    let _ = writeln!(out, "End");
    Ok(out)
}

/// Evaluate a complete plan against the MIP: fix the `x` variables, derive
/// the cheapest feasible `y`, `p` and `z`, verify every row and return the
/// objective value. The result must equal the plan's total weight.
pub fn check_plan_against_mip(instance: &WorkflowInstance, plan: &Plan) -> Result<Weight, Error> {
    if !plan.is_complete() {
        return Err(Error::IncompletePlan);
    }
    let k = instance.step_count();
    let n = instance.user_count();
    let users: Vec<MipUser> = instance
        .authorisations()
        .users()
        .iter()
        .map(|u| lower_user(u, k))
        .collect::<Result<_, _>>()?;
    let constraints: Vec<MipConstraint> = instance
        .constraints()
        .iter()
        .map(lower_constraint)
        .collect();

    let assigned = |s: u32, u: u32| plan.get(StepId(s)) == Some(UserId(u));

    // Row (2): one user per step, guaranteed by completeness.
    for s in 0..k {
        let total: u32 = (0..n).map(|u| u32::from(assigned(s, u))).sum();
        if total != 1 {
            return Err(Error::MipInconsistent {
                row: format!("assign_s{}", s),
                detail: format!("step assigned to {} users", total),
            });
        }
    }

    let mut objective = 0i64;
    for (ci, c) in constraints.iter().enumerate() {
        // Minimal y for at-most, maximal y for at-least: both equal the
        // scope indicator of the user. Rows (7) and (8) hold for it by
        // definition, checked here all the same.
        let indicator =
            |u: u32| i64::from(c.scope.iter().any(|s| assigned(s.0, u)));
        for u in 0..n {
            let y = indicator(u);
            match c.kind {
                ConstraintKind::AtMost => {
                    for s in c.scope.iter() {
                        if y < i64::from(assigned(s.0, u)) {
                            return Err(Error::MipInconsistent {
                                row: format!("ycover_c{}_u{}_s{}", ci, u, s.0),
                                detail: "scope indicator below an assignment".into(),
                            });
                        }
                    }
                }
                ConstraintKind::AtLeast => {
                    let in_scope: i64 = c
                        .scope
                        .iter()
                        .map(|s| i64::from(assigned(s.0, u)))
                        .sum();
                    if y > in_scope {
                        return Err(Error::MipInconsistent {
                            row: format!("ysum_c{}_u{}", ci, u),
                            detail: "scope indicator above the assignment sum".into(),
                        });
                    }
                }
                ConstraintKind::NotEquals => unreachable!("lowered away"),
            }
        }
        let distinct = plan.distinct_users_on(c.scope);
        debug_assert_eq!(
            distinct as i64,
            (0..n).map(indicator).sum::<i64>()
        );
        let levels = penalty_levels(c);
        // Minimal feasible penalty steps.
        let active: Vec<u32> = match c.kind {
            ConstraintKind::AtMost => levels
                .iter()
                .copied()
                .filter(|&q| q <= distinct)
                .collect(),
            ConstraintKind::AtLeast => levels
                .iter()
                .copied()
                .filter(|&q| q >= distinct)
                .collect(),
            ConstraintKind::NotEquals => unreachable!("lowered away"),
        };
        // Rows (3) / (5) with the derived p.
        match c.kind {
            ConstraintKind::AtMost => {
                if distinct as i64 - active.len() as i64 > c.threshold as i64 {
                    return Err(Error::MipInconsistent {
                        row: format!("atmost_c{}", ci),
                        detail: format!(
                            "{} users minus {} penalty steps exceeds {}",
                            distinct,
                            active.len(),
                            c.threshold
                        ),
                    });
                }
            }
            ConstraintKind::AtLeast => {
                if (distinct as i64 + active.len() as i64) < c.threshold as i64 {
                    return Err(Error::MipInconsistent {
                        row: format!("atleast_c{}", ci),
                        detail: format!(
                            "{} users plus {} penalty steps below {}",
                            distinct,
                            active.len(),
                            c.threshold
                        ),
                    });
                }
            }
            ConstraintKind::NotEquals => unreachable!("lowered away"),
        }
        // Ordering rows (4) / (6) hold for the derived p because the active
        // set is a contiguous run ending at the scope size (at-most) or
        // starting at one (at-least, upward run towards the threshold).
        let contribution: i64 = active.iter().map(|&q| marginal(c, q)).sum();
        // The marginals telescope to the exact level penalty.
        debug_assert_eq!(contribution, c.penalties[distinct as usize]);
        objective += contribution;
    }

    for (u, user) in users.iter().enumerate() {
        let preimage = plan.preimage(UserId(u as u32));
        match user {
            MipUser::PerStep(weights) => {
                objective += preimage.iter().map(|s| weights[s.index()]).sum::<i64>();
            }
            MipUser::Fee {
                available,
                fee,
                outside,
            } => {
                let touches = preimage.intersects(*available);
                // Row (9): z_u >= x_su for steps in the available set.
                let z = i64::from(touches);
                for s in available.iter() {
                    if assigned(s.0, u as u32) && z < 1 {
                        return Err(Error::MipInconsistent {
                            row: format!("zlink_u{}_s{}", u, s.0),
                            detail: "consultant fee indicator not set".into(),
                        });
                    }
                }
                objective += z * fee;
                objective += preimage.difference(*available).len() as i64 * outside;
            }
        }
    }

    let expected = instance.total_weight(plan)?;
    if objective != expected.0 {
        return Err(Error::MipInconsistent {
            row: "obj".into(),
            detail: format!(
                "objective {} differs from plan weight {}",
                objective, expected.0
            ),
        });
    }
    Ok(Weight(objective))
}

/// Variable counts of the emitted model, used by tests and documentation.
pub struct MipDimensions {
    pub x_vars: u64,
    pub y_vars: u64,
    pub p_vars: u64,
    pub z_vars: u64,
}

pub fn mip_dimensions(instance: &WorkflowInstance) -> Result<MipDimensions, Error> {
    let k = instance.step_count() as u64;
    let n = instance.user_count() as u64;
    let users: Vec<MipUser> = instance
        .authorisations()
        .users()
        .iter()
        .map(|u| lower_user(u, instance.step_count()))
        .collect::<Result<_, _>>()?;
    let constraints: Vec<MipConstraint> = instance
        .constraints()
        .iter()
        .map(lower_constraint)
        .collect();
    Ok(MipDimensions {
        x_vars: k * n,
        y_vars: constraints.len() as u64 * n,
        p_vars: constraints
            .iter()
            .map(|c| penalty_levels(c).len() as u64)
            .sum(),
        z_vars: users
            .iter()
            .filter(|u| matches!(u, MipUser::Fee { .. }))
            .count() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator;
    use crate::instance::GeneratorParams;
    use crate::rng::SplitMix64;

    fn generated(k: u32, seed: u64) -> WorkflowInstance {
        generator::generate(GeneratorParams {
            k,
            d: 0.2,
            alpha: 1.0,
            seed,
        })
        .unwrap()
    }

    fn random_plan(instance: &WorkflowInstance, rng: &mut SplitMix64) -> Plan {
        Plan::complete_from(
            (0..instance.step_count())
                .map(|_| UserId(rng.uniform(0, instance.user_count() as u64 - 1) as u32))
                .collect(),
        )
    }

    #[test]
    fn x_variable_count() {
        let instance = generated(20, 1);
        let dims = mip_dimensions(&instance).unwrap();
        assert_eq!(dims.x_vars, 20 * 210);
        assert_eq!(dims.z_vars, 10);
    }

    #[test]
    fn at_most_marginals() {
        let c = WeightedConstraint::at_most(
            StepSet::from_steps((0..5).map(StepId)),
            3,
            &[(4, Weight(5)), (5, Weight(10))],
        )
        .unwrap();
        let lowered = lower_constraint(&c);
        assert_eq!(penalty_levels(&lowered), vec![4, 5]);
        assert_eq!(marginal(&lowered, 4), 5);
        assert_eq!(marginal(&lowered, 5), 5);
    }

    #[test]
    fn at_least_marginals() {
        let c = WeightedConstraint::at_least(
            StepSet::from_steps((0..5).map(StepId)),
            3,
            &[(1, Weight(1_000_000)), (2, Weight(1))],
        )
        .unwrap();
        let lowered = lower_constraint(&c);
        assert_eq!(penalty_levels(&lowered), vec![1, 2]);
        assert_eq!(marginal(&lowered, 1), 999_999);
        assert_eq!(marginal(&lowered, 2), 1);
    }

    #[test]
    fn objective_matches_total_weight_on_random_plans() {
        let mut rng = SplitMix64::new(0xBEEF);
        for seed in 0..4 {
            let instance = generated(8, seed);
            for _ in 0..40 {
                let plan = random_plan(&instance, &mut rng);
                let objective = check_plan_against_mip(&instance, &plan).unwrap();
                assert_eq!(objective, instance.total_weight(&plan).unwrap());
            }
        }
    }

    #[test]
    fn not_equals_violation_appears_in_objective() {
        let mut users = vec![
            UserAuthorisation::Additive {
                step_weights: vec![0, 0],
            };
            2
        ];
        users.push(UserAuthorisation::Additive {
            step_weights: vec![0, 0],
        });
        let c = crate::constraints::WeightedConstraint::not_equals(
            StepSet::from_steps([StepId(0), StepId(1)]),
            Weight(1_000_000),
        )
        .unwrap();
        let instance = WorkflowInstance::new(
            2,
            crate::authorisation::AuthorisationModel::new(users),
            vec![c],
            None,
        )
        .unwrap();
        let violating = Plan::complete_from(vec![UserId(0), UserId(0)]);
        assert_eq!(
            check_plan_against_mip(&instance, &violating).unwrap(),
            Weight(1_000_000)
        );
        let fine = Plan::complete_from(vec![UserId(0), UserId(1)]);
        assert_eq!(check_plan_against_mip(&instance, &fine).unwrap(), Weight(0));
    }

    #[test]
    fn ordering_rows_are_redundant_for_generator_penalties() {
        // Without the p-ordering rows, the model would activate the
        // cheapest marginals subject only to the counting row. For
        // monotone marginal penalties that choice coincides with the
        // contiguous run the ordered derivation uses, so dropping the
        // rows changes nothing.
        let mut rng = SplitMix64::new(0x0D6);
        for seed in 0..3 {
            let instance = generated(8, 60 + seed);
            let constraints: Vec<MipConstraint> = instance
                .constraints()
                .iter()
                .map(lower_constraint)
                .collect();
            for _ in 0..30 {
                let plan = random_plan(&instance, &mut rng);
                for c in &constraints {
                    let distinct = plan.distinct_users_on(c.scope);
                    let ordered: i64 = penalty_levels(c)
                        .into_iter()
                        .filter(|&q| match c.kind {
                            ConstraintKind::AtMost => q <= distinct,
                            ConstraintKind::AtLeast => q >= distinct,
                            ConstraintKind::NotEquals => unreachable!(),
                        })
                        .map(|q| marginal(c, q))
                        .sum();
                    let needed = match c.kind {
                        ConstraintKind::AtMost => distinct.saturating_sub(c.threshold),
                        ConstraintKind::AtLeast => c.threshold.saturating_sub(distinct),
                        ConstraintKind::NotEquals => unreachable!(),
                    } as usize;
                    let mut marginals: Vec<i64> =
                        penalty_levels(c).into_iter().map(|q| marginal(c, q)).collect();
                    marginals.sort_unstable();
                    let unordered: i64 = marginals[..needed].iter().sum();
                    assert_eq!(ordered, unordered);
                }
            }
        }
    }

    #[test]
    fn table_form_is_not_encodable() {
        let users = vec![UserAuthorisation::Table {
            weights: vec![0, 1],
        }];
        let instance = WorkflowInstance::new(
            1,
            crate::authorisation::AuthorisationModel::new(users),
            vec![],
            None,
        )
        .unwrap();
        assert!(matches!(export_mip(&instance), Err(Error::Unsupported(_))));
    }

    #[test]
    fn every_variable_appears_in_the_model() {
        let instance = generated(8, 3);
        let text = export_mip(&instance).unwrap();
        let dims = mip_dimensions(&instance).unwrap();
        let count = |prefix: &str| {
            let mut names: Vec<&str> = text
                .split_whitespace()
                .filter(|t| t.starts_with(prefix))
                .collect();
            names.sort_unstable();
            names.dedup();
            names.len() as u64
        };
        assert_eq!(count("x_s"), dims.x_vars);
        assert_eq!(count("y_c"), dims.y_vars);
        assert_eq!(count("p_c"), dims.p_vars);
        assert_eq!(count("z_u"), dims.z_vars);
    }

    #[test]
    fn export_is_deterministic() {
        let a = export_mip(&generated(8, 5)).unwrap();
        let b = export_mip(&generated(8, 5)).unwrap();
        assert_eq!(a, b);
    }
}
