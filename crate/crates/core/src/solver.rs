//! Pattern branch and bound.
//!
//! Depth-first search over patterns: the root is the empty pattern, each
//! node extends its pattern with one uncovered step (chosen by a dynamic
//! importance score) and leaves are complete patterns, realised by a
//! minimum-weight matching. A child is explored only while its lower bound
//! stays below the incumbent weight and the incumbent stays above the
//! global lower bound.
//!
//! The global bounds come from two decision-problem probes: hardening every
//! positive penalty (satisfiable means the optimum is zero and we are done)
//! and hardening nothing (whose plan seeds the incumbent). Both probes are
//! solved by this same engine with unit penalties and a zero-weight early
//! exit.

use std::time::{Duration, Instant};

use crate::assignment;
use crate::authorisation::{AuthorisationModel, UserAuthorisation, CONSULTANT_FEE, HARD_PENALTY, SOFT_UNIT};
use crate::constraints::{ConstraintKind, ScopeStats, WeightedConstraint};
use crate::error::Error;
use crate::instance::WorkflowInstance;
use crate::model::{Pattern, Plan, StepId, StepSet, Weight};

/// Weights of the step-importance score. The defaults favour
/// separation-of-duty steps and conflicting scopes; all of them can be
/// overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImportanceParams {
    pub not_equals: f64,
    pub at_most: f64,
    pub at_least: f64,
    /// Added once per (at-most, not-equals) or (at-most, at-least) pair of
    /// constraints whose scopes share the step.
    pub conflict_bonus: f64,
}

impl Default for ImportanceParams {
    fn default() -> Self {
        ImportanceParams {
            not_equals: 3.0,
            at_most: 2.0,
            at_least: 1.0,
            conflict_bonus: 2.0,
        }
    }
}

/// How the next step to branch on is chosen.
#[derive(Debug, Clone, Default)]
pub enum StepSelection {
    /// Maximise the importance score, ties to the smallest step index.
    #[default]
    Importance,
    /// Follow a fixed order (testing hook; any order yields the same
    /// optimum).
    Static(Vec<StepId>),
}

/// Pruning toggles, for testing; production solves keep everything on.
#[derive(Debug, Clone, Copy)]
pub struct PruneConfig {
    /// Use the pattern lower bound L(P') in the child guard.
    pub lower_bound: bool,
    /// Compare bounds against the incumbent at all.
    pub incumbent_bound: bool,
    /// Run the decision-problem probes; without them the global lower
    /// bound is the constant zero.
    pub global_bounds: bool,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            lower_bound: true,
            incumbent_bound: true,
            global_bounds: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveConfig {
    pub time_limit: Option<Duration>,
    pub importance: ImportanceParams,
    pub selection: StepSelection,
    pub prune: PruneConfig,
}

/// Why the search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The pattern space was exhausted; the reported weight is optimal.
    Optimal,
    /// The incumbent met the global lower bound, which also proves
    /// optimality without exhausting the space.
    BoundMet,
    /// The time limit expired; the report carries the best plan so far.
    TimeLimit,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Optimal => "optimal",
            Termination::BoundMet => "bound-met",
            Termination::TimeLimit => "time-limit",
        }
    }
}

/// Outcome of a solve: the best plan found, its weight decomposition and
/// search statistics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub plan: Plan,
    pub weight: Weight,
    pub constraint_weight: Weight,
    pub authorisation_weight: Weight,
    /// The global lower bound established before the search.
    pub global_lower_bound: Weight,
    /// Search-tree nodes visited, including the root and leaves.
    pub nodes_expanded: u64,
    /// Complete patterns reached.
    pub leaves_evaluated: u64,
    /// Assignment problems solved at leaves.
    pub matchings_run: u64,
    pub wall_time: Duration,
    pub termination: Termination,
}

/// The plan assigning every step to the single user with the cheapest
/// full-set weight; the heuristic of last resort.
pub fn trivial_plan(instance: &WorkflowInstance) -> Plan {
    let all = StepSet::all(instance.step_count());
    let (_, user) = instance.authorisations().block_min_weight(all);
    Plan::complete_from(vec![user; instance.step_count() as usize])
}

/// The decision instance WSP(W, x): every violation level or authorisation
/// membership with penalty at least `x` becomes a unit-penalty hard
/// restriction, everything cheaper becomes free.
///
/// A complete plan of the original instance avoids all penalties of `x` or
/// more exactly when it has weight zero in the reduced instance (for the
/// structured forms; table forms are hardened per single step).
pub fn reduce_to_wsp(instance: &WorkflowInstance, x: Weight) -> Result<WorkflowInstance, Error> {
    let x = x.0;
    if x < 1 {
        return Err(Error::Validation(format!(
            "WSP(W, x) requires x >= 1, got {}",
            x
        )));
    }
    let k = instance.step_count();
    let mut constraints = Vec::new();
    for c in instance.constraints() {
        match c.kind() {
            ConstraintKind::NotEquals => {
                if c.penalty_at(1).0 >= x {
                    constraints.push(WeightedConstraint::not_equals(c.scope(), Weight(1))?);
                }
            }
            ConstraintKind::AtMost => {
                // Monotone table: levels at or above x form a suffix.
                let first_hard = (c.threshold() + 1..=c.scope_size())
                    .find(|&q| c.penalty_at(q).0 >= x);
                if let Some(q0) = first_hard {
                    let levels: Vec<(u32, Weight)> = (q0..=c.scope_size())
                        .map(|q| (q, Weight(1)))
                        .collect();
                    constraints.push(WeightedConstraint::at_most(c.scope(), q0 - 1, &levels)?);
                }
            }
            ConstraintKind::AtLeast => {
                // Anti-monotone table: hard levels form a prefix.
                let last_hard = (1..c.threshold())
                    .rev()
                    .find(|&q| c.penalty_at(q).0 >= x);
                if let Some(q0) = last_hard {
                    let levels: Vec<(u32, Weight)> =
                        (1..=q0).map(|q| (q, Weight(1))).collect();
                    constraints.push(WeightedConstraint::at_least(c.scope(), q0 + 1, &levels)?);
                }
            }
        }
    }

    let users = instance
        .authorisations()
        .users()
        .iter()
        .map(|user| {
            let step_weights: Vec<i64> = (0..k)
                .map(|s| {
                    let hard = match user {
                        UserAuthorisation::Additive { step_weights } => {
                            step_weights[s as usize] >= x
                        }
                        UserAuthorisation::Employee { primary, secondary } => {
                            let step = StepSet::singleton(StepId(s));
                            if step.intersects(*secondary) {
                                SOFT_UNIT >= x
                            } else if !step.intersects(*primary) {
                                HARD_PENALTY >= x
                            } else {
                                false
                            }
                        }
                        UserAuthorisation::Consultant { available } => {
                            if CONSULTANT_FEE >= x {
                                true
                            } else if !available.contains(StepId(s)) {
                                HARD_PENALTY >= x
                            } else {
                                false
                            }
                        }
                        UserAuthorisation::Table { weights } => weights[1usize << s] >= x,
                    };
                    if hard {
                        1
                    } else {
                        0
                    }
                })
                .collect();
            UserAuthorisation::Additive { step_weights }
        })
        .collect();

    WorkflowInstance::new(k, AuthorisationModel::new(users), constraints, None)
}

/// Importance score of extending `pattern` with `s`: each constraint whose
/// scope contains `s` contributes its type weight scaled by how much of the
/// scope is already covered, plus a bonus per conflicting constraint pair
/// sharing the step.
pub fn step_importance(
    instance: &WorkflowInstance,
    pattern: &Pattern,
    s: StepId,
    params: &ImportanceParams,
) -> f64 {
    let covered = pattern.covered();
    let mut score = 0.0;
    for c in instance.constraints() {
        if !c.scope().contains(s) {
            continue;
        }
        let type_weight = match c.kind() {
            ConstraintKind::NotEquals => params.not_equals,
            ConstraintKind::AtMost => params.at_most,
            ConstraintKind::AtLeast => params.at_least,
        };
        let a = c.scope().intersection(covered).len();
        score += type_weight * (1.0 + a as f64 / c.scope_size() as f64);
    }
    score + params.conflict_bonus * conflict_pairs_at(instance, s) as f64
}

fn conflict_pairs_at(instance: &WorkflowInstance, s: StepId) -> u64 {
    let mut at_most = 0u64;
    let mut others = 0u64;
    for c in instance.constraints() {
        if !c.scope().contains(s) {
            continue;
        }
        match c.kind() {
            ConstraintKind::AtMost => at_most += 1,
            ConstraintKind::NotEquals | ConstraintKind::AtLeast => others += 1,
        }
    }
    at_most * others
}

/// Result of a decision-problem probe.
enum Decision {
    Satisfiable(Plan),
    Unsatisfiable,
    TimedOut,
}

/// Outcome of the WSP(W, 1) probe: the global lower bound, with the valid
/// plan when one exists.
pub enum GlobalBound {
    /// Satisfiable: the bound is zero and the plan is a zero-weight
    /// incumbent.
    Zero(Plan),
    /// Unsatisfiable: every complete plan weighs at least one.
    One,
    /// The probe ran out of time; zero remains a valid bound.
    Unknown,
}

/// Solve the WSP(W, 1) probe. See [`GlobalBound`].
pub fn global_lower_bound(instance: &WorkflowInstance) -> Result<GlobalBound, Error> {
    global_lower_bound_at(instance, &SolveConfig::default(), None)
}

fn global_lower_bound_at(
    instance: &WorkflowInstance,
    config: &SolveConfig,
    deadline: Option<Instant>,
) -> Result<GlobalBound, Error> {
    let reduced = reduce_to_wsp(instance, Weight(1))?;
    Ok(match solve_decision(&reduced, config, deadline) {
        Decision::Satisfiable(plan) => GlobalBound::Zero(plan),
        Decision::Unsatisfiable => GlobalBound::One,
        Decision::TimedOut => GlobalBound::Unknown,
    })
}

/// Upper-bound heuristic: solve WSP(W, M) for M one above the largest
/// penalty and return its plan; fall back to the trivial plan when the
/// probe yields nothing.
pub fn heuristic_upper_bound(instance: &WorkflowInstance) -> Result<Plan, Error> {
    heuristic_upper_bound_at(instance, &SolveConfig::default(), None)
}

fn heuristic_upper_bound_at(
    instance: &WorkflowInstance,
    config: &SolveConfig,
    deadline: Option<Instant>,
) -> Result<Plan, Error> {
    let m = Weight(instance.max_penalty().0 + 1);
    let reduced = reduce_to_wsp(instance, m)?;
    Ok(match solve_decision(&reduced, config, deadline) {
        Decision::Satisfiable(plan) => plan,
        Decision::Unsatisfiable | Decision::TimedOut => trivial_plan(instance),
    })
}

/// Solve a unit-penalty decision instance: satisfiable iff a zero-weight
/// plan exists. Runs the branch and bound with a zero global lower bound,
/// which stops the search at the first zero-weight incumbent.
fn solve_decision(
    reduced: &WorkflowInstance,
    config: &SolveConfig,
    deadline: Option<Instant>,
) -> Decision {
    let mut search = Search::new(reduced, config, deadline, 0);
    search.run();
    if search.timed_out && search.best_weight != 0 {
        return Decision::TimedOut;
    }
    match search.best_weight {
        0 => {
            let pattern = search.best_pattern.expect("zero-weight incumbent has a pattern");
            let (plan, _) = assignment::optimal_plan_for_pattern(reduced, &pattern)
                .expect("incumbent pattern is realisable");
            Decision::Satisfiable(plan)
        }
        _ => Decision::Unsatisfiable,
    }
}

/// Solve a valued instance to optimality (or until the time limit).
pub fn solve(instance: &WorkflowInstance, config: &SolveConfig) -> Result<SolveReport, Error> {
    let start = Instant::now();
    let deadline = config.time_limit.map(|limit| start + limit);

    let mut lambda = 0i64;
    let mut incumbent_plan: Option<Plan> = None;
    let mut incumbent_weight = i64::MAX;
    let mut probes_timed_out = false;

    if config.prune.global_bounds {
        match global_lower_bound_at(instance, config, deadline)? {
            GlobalBound::Zero(plan) => {
                let weight = instance.total_weight(&plan)?;
                debug_assert!(weight.is_zero());
                incumbent_weight = weight.0;
                incumbent_plan = Some(plan);
            }
            GlobalBound::One => {
                lambda = 1;
                let plan = heuristic_upper_bound_at(instance, config, deadline)?;
                incumbent_weight = instance.total_weight(&plan)?.0;
                incumbent_plan = Some(plan);
            }
            GlobalBound::Unknown => {
                probes_timed_out = true;
                let plan = trivial_plan(instance);
                incumbent_weight = instance.total_weight(&plan)?.0;
                incumbent_plan = Some(plan);
            }
        }
    }

    let mut search = Search::new(instance, config, deadline, lambda);
    search.best_weight = incumbent_weight;
    if !probes_timed_out && incumbent_weight > lambda {
        search.run();
    }

    // Materialise the final plan: a pattern found by the search beats the
    // probe plan exactly when the search improved on it.
    let (plan, weight) = match search.best_pattern {
        Some(pattern) => {
            let (plan, _) = assignment::optimal_plan_for_pattern(instance, &pattern)?;
            let weight = instance.total_weight(&plan)?;
            debug_assert_eq!(weight.0, search.best_weight);
            (plan, weight)
        }
        None => {
            let plan = incumbent_plan.unwrap_or_else(|| trivial_plan(instance));
            let weight = instance.total_weight(&plan)?;
            (plan, weight)
        }
    };

    let termination = if search.timed_out || probes_timed_out {
        Termination::TimeLimit
    } else if config.prune.global_bounds && weight.0 == lambda {
        Termination::BoundMet
    } else {
        Termination::Optimal
    };

    Ok(SolveReport {
        constraint_weight: instance.constraint_weight(&plan)?,
        authorisation_weight: instance.authorisation_weight(&plan)?,
        plan,
        weight,
        global_lower_bound: Weight(lambda),
        nodes_expanded: search.nodes,
        leaves_evaluated: search.leaves,
        matchings_run: search.matchings,
        wall_time: start.elapsed(),
        termination,
    })
}

/// Per-user fast path for incremental block-cost updates.
enum FastUser {
    /// Additive and employee forms: adding a step adds its per-step cost.
    PerStep,
    /// Consultant: a per-step hard cost outside the set plus a one-off fee
    /// the first time the set is touched.
    Consultant { available: StepSet },
    /// Table lookup by block mask.
    Table { weights: Vec<i64> },
}

/// What [`Search::apply`] needs to revert one extension.
struct Undo {
    step: StepId,
    target: usize,
    new_block: bool,
    old_block_min: i64,
    old_auth_bound: i64,
    old_constraint_bound: i64,
}

/// Depth-first search state, mutated in place with undo on backtrack; the
/// per-depth save areas avoid any allocation on the hot path.
struct Search<'a> {
    instance: &'a WorkflowInstance,
    config: &'a SolveConfig,
    deadline: Option<Instant>,
    lambda: i64,
    n: usize,
    /// Constraint indices whose scope contains each step.
    step_constraints: Vec<Vec<u32>>,
    /// Importance type weight of each constraint.
    type_weights: Vec<f64>,
    /// Coverage-independent importance per step: the summed type weights
    /// plus the conflict bonus.
    static_score: Vec<f64>,
    fast_users: Vec<FastUser>,
    /// singleton_cost[s * n + u] = weight of user `u` taking exactly
    /// step `s`; doubles as the per-step cost increment for per-step
    /// users.
    singleton_cost: Vec<i64>,
    /// min over users of the singleton cost, per step.
    singleton_min: Vec<i64>,

    // Current pattern and its cached bound data.
    blocks: Vec<StepSet>,
    covered: StepSet,
    stats: Vec<ScopeStats>,
    constraint_bound: i64,
    block_mins: Vec<i64>,
    auth_bound: i64,
    dynamic_score: Vec<f64>,
    /// cost[b * n + u] = weight of user `u` taking block `b`; rows `k..2k`
    /// are the per-depth undo copies of the modified row.
    cost: Vec<i64>,
    /// Per-depth undo copies of the dynamic importance scores.
    score_save: Vec<f64>,
    /// Per-depth scratch for the candidate step's constraints: scope mask
    /// and the bound change when the step joins an intersecting block
    /// versus a block new to the scope.
    delta_save: Vec<(u128, i64, i64)>,

    best_pattern: Option<Pattern>,
    best_weight: i64,
    nodes: u64,
    leaves: u64,
    matchings: u64,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn new(
        instance: &'a WorkflowInstance,
        config: &'a SolveConfig,
        deadline: Option<Instant>,
        lambda: i64,
    ) -> Search<'a> {
        let k = instance.step_count() as usize;
        let n = instance.user_count() as usize;
        let params = &config.importance;
        let mut step_constraints = vec![Vec::new(); k];
        let mut type_weights = Vec::with_capacity(instance.constraints().len());
        for (i, c) in instance.constraints().iter().enumerate() {
            for s in c.scope().iter() {
                step_constraints[s.index()].push(i as u32);
            }
            type_weights.push(match c.kind() {
                ConstraintKind::NotEquals => params.not_equals,
                ConstraintKind::AtMost => params.at_most,
                ConstraintKind::AtLeast => params.at_least,
            });
        }
        let static_score = (0..k)
            .map(|s| {
                let base: f64 = step_constraints[s]
                    .iter()
                    .map(|&ci| type_weights[ci as usize])
                    .sum();
                base + params.conflict_bonus
                    * conflict_pairs_at(instance, StepId(s as u32)) as f64
            })
            .collect();
        let fast_users = instance
            .authorisations()
            .users()
            .iter()
            .map(|user| match user {
                UserAuthorisation::Additive { .. } | UserAuthorisation::Employee { .. } => {
                    FastUser::PerStep
                }
                UserAuthorisation::Consultant { available } => FastUser::Consultant {
                    available: *available,
                },
                UserAuthorisation::Table { weights } => FastUser::Table {
                    weights: weights.clone(),
                },
            })
            .collect();
        let mut singleton_cost = vec![0i64; k * n];
        let mut singleton_min = vec![i64::MAX; k];
        for s in 0..k {
            for u in 0..n {
                let w = instance
                    .authorisations()
                    .set_weight(StepSet::singleton(StepId(s as u32)), crate::model::UserId(u as u32))
                    .0;
                singleton_cost[s * n + u] = w;
                singleton_min[s] = singleton_min[s].min(w);
            }
        }
        let constraint_bound = instance
            .constraints()
            .iter()
            .map(|c| c.lower_bound(ScopeStats::default()).0)
            .sum();
        Search {
            instance,
            config,
            deadline,
            lambda,
            n,
            step_constraints,
            type_weights,
            static_score,
            fast_users,
            singleton_cost,
            singleton_min,
            blocks: Vec::with_capacity(k),
            covered: StepSet::EMPTY,
            stats: vec![ScopeStats::default(); instance.constraints().len()],
            constraint_bound,
            block_mins: Vec::with_capacity(k),
            auth_bound: 0,
            dynamic_score: vec![0.0; k],
            cost: vec![0; 2 * k * n],
            score_save: vec![0.0; k * k],
            delta_save: vec![(0, 0, 0); k * instance.constraints().len().max(1)],
            best_pattern: None,
            best_weight: i64::MAX,
            nodes: 0,
            leaves: 0,
            matchings: 0,
            timed_out: false,
        }
    }

    fn run(&mut self) {
        self.explore();
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.timed_out = true;
                return true;
            }
        }
        false
    }

    fn lower_bound(&self) -> i64 {
        self.constraint_bound + self.auth_bound
    }

    fn explore(&mut self) {
        if self.out_of_time() {
            return;
        }
        self.nodes += 1;
        if self.covered == StepSet::all(self.instance.step_count()) {
            self.evaluate_leaf();
            return;
        }

        let step = self.select_step();
        let prune = self.config.prune;
        // The bound change of each constraint containing the step depends
        // only on whether the target block already intersects its scope;
        // tabulate both cases once for this node.
        let depth = self.covered.len() as usize;
        let touched = self.step_constraints[step.index()].len();
        let delta_base = depth * self.instance.constraints().len().max(1);
        for (i, &ci) in self.step_constraints[step.index()].iter().enumerate() {
            let c = &self.instance.constraints()[ci as usize];
            let old = self.stats[ci as usize];
            let current = c.lower_bound(old).0;
            let joined = c
                .lower_bound(ScopeStats {
                    covered_scope: old.covered_scope + 1,
                    intersecting_blocks: old.intersecting_blocks,
                })
                .0;
            let grown = c
                .lower_bound(ScopeStats {
                    covered_scope: old.covered_scope + 1,
                    intersecting_blocks: old.intersecting_blocks + 1,
                })
                .0;
            self.delta_save[delta_base + i] =
                (c.scope().0, joined - current, grown - current);
        }

        for target in 0..=self.blocks.len() {
            if prune.global_bounds && self.best_weight <= self.lambda {
                // The incumbent met the global lower bound; nothing below
                // can improve on it.
                return;
            }
            let new_block = target == self.blocks.len();
            if new_block && self.blocks.len() + 1 > self.n {
                // More blocks than users can never be realised.
                continue;
            }
            let target_bits = if new_block {
                0u128
            } else {
                self.blocks[target].0
            };
            let mut constraint_delta = 0i64;
            for &(scope, joined, grown) in
                &self.delta_save[delta_base..delta_base + touched]
            {
                constraint_delta += if scope & target_bits != 0 { joined } else { grown };
            }

            // Guard on a cheap bound first: the constraint term is exact,
            // the target block keeps its old minimum (a valid lower bound
            // by monotonicity). Surviving children get the refined bound.
            if prune.incumbent_bound && prune.lower_bound {
                let quick_auth = if new_block {
                    self.auth_bound + self.singleton_min[step.index()]
                } else {
                    self.auth_bound
                };
                if self.constraint_bound + constraint_delta + quick_auth >= self.best_weight {
                    continue;
                }
            }
            let undo = self.apply(step, target, constraint_delta);
            let pruned = prune.incumbent_bound
                && prune.lower_bound
                && self.lower_bound() >= self.best_weight;
            if !pruned {
                self.explore();
            }
            self.undo(undo);
            if self.timed_out {
                return;
            }
        }
    }

    /// Extend the pattern with `step` in block `target` (or a fresh block),
    /// updating every cached quantity in place.
    fn apply(&mut self, step: StepId, target: usize, constraint_delta: i64) -> Undo {
        let k = self.instance.step_count() as usize;
        let n = self.n;
        let depth = self.covered.len() as usize;
        let new_block = target == self.blocks.len();

        let undo = Undo {
            step,
            target,
            new_block,
            old_block_min: if new_block { 0 } else { self.block_mins[target] },
            old_auth_bound: self.auth_bound,
            old_constraint_bound: self.constraint_bound,
        };

        let block_before = if new_block {
            StepSet::EMPTY
        } else {
            self.blocks[target]
        };

        // Block costs and minimum.
        let row = target * n;
        let new_min;
        if new_block {
            self.blocks.push(StepSet::singleton(step));
            // The singleton row is rebuilt from the precomputed costs, so
            // nothing needs saving; only existing rows get an undo copy.
            self.cost[row..row + n]
                .copy_from_slice(&self.singleton_cost[step.index() * n..step.index() * n + n]);
            new_min = self.singleton_min[step.index()];
            self.block_mins.push(new_min);
        } else {
            let save = (k + depth) * n;
            self.cost.copy_within(row..row + n, save);
            self.blocks[target].insert(step);
            let block_after = self.blocks[target];
            let mut min = i64::MAX;
            for u in 0..n {
                let value = &mut self.cost[row + u];
                match &self.fast_users[u] {
                    FastUser::PerStep => *value += self.singleton_cost[step.index() * n + u],
                    FastUser::Consultant { available } => {
                        if available.contains(step) {
                            if !block_before.intersects(*available) {
                                *value += crate::authorisation::CONSULTANT_FEE;
                            }
                        } else {
                            *value += crate::authorisation::HARD_PENALTY;
                        }
                    }
                    FastUser::Table { weights } => *value = weights[block_after.0 as usize],
                }
                min = min.min(*value);
            }
            new_min = min;
            self.block_mins[target] = new_min;
        }
        self.auth_bound = self.auth_bound - undo.old_block_min + new_min;

        // Scope statistics, their bound sum and the importance scores.
        self.score_save[depth * k..(depth + 1) * k].copy_from_slice(&self.dynamic_score);
        for &ci in &self.step_constraints[step.index()] {
            let c = &self.instance.constraints()[ci as usize];
            self.stats[ci as usize].covered_scope += 1;
            if !block_before.intersects(c.scope()) {
                self.stats[ci as usize].intersecting_blocks += 1;
            }
            let per_step = self.type_weights[ci as usize] / c.scope_size() as f64;
            for affected in c.scope().iter() {
                self.dynamic_score[affected.index()] += per_step;
            }
        }
        self.constraint_bound += constraint_delta;
        self.covered.insert(step);
        undo
    }

    fn undo(&mut self, undo: Undo) {
        let k = self.instance.step_count() as usize;
        let n = self.n;
        let step = undo.step;

        self.covered = self.covered.difference(StepSet::singleton(step));
        let depth = self.covered.len() as usize;
        self.constraint_bound = undo.old_constraint_bound;
        self.auth_bound = undo.old_auth_bound;
        self.dynamic_score
            .copy_from_slice(&self.score_save[depth * k..(depth + 1) * k]);

        let block_without = self.blocks[undo.target].difference(StepSet::singleton(step));
        for &ci in &self.step_constraints[step.index()] {
            let c = &self.instance.constraints()[ci as usize];
            self.stats[ci as usize].covered_scope -= 1;
            if !block_without.intersects(c.scope()) {
                self.stats[ci as usize].intersecting_blocks -= 1;
            }
        }

        if undo.new_block {
            self.blocks.pop();
            self.block_mins.pop();
        } else {
            self.blocks[undo.target] = block_without;
            self.block_mins[undo.target] = undo.old_block_min;
            let row = undo.target * n;
            let save = (k + depth) * n;
            self.cost.copy_within(save..save + n, row);
        }
    }

    fn evaluate_leaf(&mut self) {
        self.leaves += 1;
        let constraint_term: i64 = self
            .instance
            .constraints()
            .iter()
            .zip(&self.stats)
            .map(|(c, st)| c.penalty_at(st.intersecting_blocks).0)
            .sum();
        let bound = if self.config.prune.incumbent_bound {
            if constraint_term >= self.best_weight {
                return;
            }
            Some(Weight(self.best_weight - constraint_term))
        } else {
            None
        };
        let pattern =
            Pattern::from_blocks(self.blocks.clone()).expect("search blocks are disjoint");
        self.matchings += 1;
        let matched = assignment::assignment_weight(self.instance, &pattern, bound)
            .expect("leaf block count was bounded during branching");
        if let Some(auth_term) = matched {
            let total = constraint_term + auth_term.0;
            if total < self.best_weight {
                self.best_weight = total;
                self.best_pattern = Some(pattern);
            }
        }
    }

    fn select_step(&self) -> StepId {
        match &self.config.selection {
            StepSelection::Static(order) => *order
                .iter()
                .find(|s| !self.covered.contains(**s))
                .expect("static order covers all steps"),
            StepSelection::Importance => {
                let mut best_step = None;
                let mut best_score = f64::NEG_INFINITY;
                for s in 0..self.instance.step_count() {
                    let step = StepId(s);
                    if self.covered.contains(step) {
                        continue;
                    }
                    let score = self.static_score[s as usize] + self.dynamic_score[s as usize];
                    if score > best_score {
                        best_score = score;
                        best_step = Some(step);
                    }
                }
                best_step.expect("an uncovered step exists at a non-leaf node")
            }
        }
    }
}
