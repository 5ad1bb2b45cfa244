//! Constraint retraction driven by the removal log.
//!
//! Retracting `c` puts back every removed element whose justification
//! depends, directly or through antecedents, on an operator of `c`. The
//! remaining log entries stay valid since none of their antecedents are
//! reinserted. Operators that read or write a variable touched by the
//! reinsertion are then re-run to reach the new closure.

use std::collections::BTreeSet;

use crate::csp::{Csp, DomainElement, Environment, VarId};
use crate::error::{Error, Result};
use crate::operators::{local_operators, LocalOperator};
use crate::propagation::{as_operators, closure_bruteforce, propagate, ClosureOptions, RemovalLog};

/// A propagated store: all the state retraction needs.
#[derive(Debug, Clone)]
pub struct SolverState {
    csp: Csp,
    operators: Vec<LocalOperator>,
    /// Constraint ids still in force.
    active: BTreeSet<String>,
    /// Starting environment, after restrictions.
    restricted: Environment,
    env: Environment,
    log: RemovalLog,
    last_step: usize,
}

impl SolverState {
    /// Closure of the full environment under every constraint of `csp`.
    pub fn new(csp: &Csp) -> SolverState {
        SolverState::from_restricted(csp, csp.full_env()).expect("full environment belongs to the problem")
    }

    /// Closure of `restricted` under every constraint of `csp`.
    pub fn from_restricted(csp: &Csp, restricted: Environment) -> Result<SolverState> {
        if restricted.universe() != csp.domain() {
            return Err(Error::usage("environment is over a different domain"));
        }
        let operators = local_operators(csp);
        let seed: Vec<usize> = (0..operators.len()).collect();
        let res = propagate(restricted.clone(), &operators, &seed, ClosureOptions::default());
        Ok(SolverState {
            csp: csp.clone(),
            active: csp.constraints().iter().map(|c| c.id.clone()).collect(),
            operators,
            restricted,
            env: res.env,
            log: res.log,
            last_step: res.steps,
        })
    }

    pub fn csp(&self) -> &Csp {
        &self.csp
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn restricted(&self) -> &Environment {
        &self.restricted
    }

    pub fn log(&self) -> &RemovalLog {
        &self.log
    }

    pub fn active_constraints(&self) -> &BTreeSet<String> {
        &self.active
    }

    /// Operators of the constraints still in force.
    pub fn active_operators(&self) -> Vec<LocalOperator> {
        self.operators
            .iter()
            .filter(|o| self.active.contains(o.constraint_id()))
            .cloned()
            .collect()
    }

    fn check_active(&self, constraint: &str) -> Result<()> {
        self.csp.constraint(constraint)?;
        if !self.active.contains(constraint) {
            return Err(Error::usage(format!("constraint `{constraint}` already retracted")));
        }
        Ok(())
    }
}

/// What a retraction will do, before doing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetractionPlan {
    pub constraint: String,
    /// Elements to put back.
    pub reintroduce: BTreeSet<DomainElement>,
    /// Ids of the operators to re-run, among those still active.
    pub wake: BTreeSet<String>,
}

/// Elements whose justification transitively involves `constraint`.
pub fn dependent_removals(log: &RemovalLog, constraint: &str) -> BTreeSet<DomainElement> {
    let mut out = BTreeSet::new();
    // antecedents are always logged before their consequences
    for entry in log.iter() {
        let direct = entry.rule.origin.constraint_id() == Some(constraint);
        if direct || entry.rule.antecedents.iter().any(|a| out.contains(a)) {
            out.insert(entry.element);
        }
    }
    out
}

pub fn plan_retraction(state: &SolverState, constraint: &str) -> Result<RetractionPlan> {
    state.check_active(constraint)?;
    let reintroduce = dependent_removals(&state.log, constraint);
    let touched: BTreeSet<VarId> = reintroduce.iter().map(|h| h.var).collect();
    let wake = state
        .operators
        .iter()
        .filter(|o| o.constraint_id() != constraint && state.active.contains(o.constraint_id()))
        .filter(|o| touched.contains(&o.target()) || o.inputs().any(|v| touched.contains(&v)))
        .map(|o| o.id().to_string())
        .collect();
    Ok(RetractionPlan {
        constraint: constraint.to_string(),
        reintroduce,
        wake,
    })
}

/// Carries out `plan`, which need not come from [`plan_retraction`].
pub fn apply_plan(state: &SolverState, plan: &RetractionPlan) -> Result<SolverState> {
    state.check_active(&plan.constraint)?;
    let mut next = state.clone();
    next.active.remove(&plan.constraint);
    for &h in &plan.reintroduce {
        if !state.restricted.contains(h) {
            return Err(Error::usage(format!(
                "{} lies outside the restricted environment",
                state.csp.domain().display_element(h)
            )));
        }
        next.env.insert(h);
    }
    next.log.entries.retain(|e| !plan.reintroduce.contains(&e.element));

    let ops = next.active_operators();
    let seed: Vec<usize> = ops
        .iter()
        .enumerate()
        .filter(|(_, o)| plan.wake.contains(o.id()))
        .map(|(i, _)| i)
        .collect();
    let res = propagate(
        next.env.clone(),
        &ops,
        &seed,
        ClosureOptions {
            first_step: next.last_step,
            ..Default::default()
        },
    );
    next.env = res.env;
    next.log.extend(res.log);
    next.last_step += res.steps;
    Ok(next)
}

/// Removes `constraint` from the store and repropagates.
pub fn retract(state: &SolverState, constraint: &str) -> Result<SolverState> {
    let plan = plan_retraction(state, constraint)?;
    apply_plan(state, &plan)
}

/// Compares `after` with the closure from scratch without `constraint`, and
/// checks that its log still justifies every removal.
pub fn verify_retraction(before: &SolverState, constraint: &str, after: &SolverState) -> Result<bool> {
    before.check_active(constraint)?;
    let ops: Vec<LocalOperator> = before
        .active_operators()
        .into_iter()
        .filter(|o| o.constraint_id() != constraint)
        .collect();
    let expected = closure_bruteforce(&before.restricted, &as_operators(&ops));
    let logged: BTreeSet<DomainElement> = after.log.removed().collect();
    let missing: BTreeSet<DomainElement> = before.restricted.difference(&after.env).elements().collect();
    Ok(after.env == expected
        && logged == missing
        && after.log.check_well_founded(&before.restricted).is_ok()
        && after
            .log
            .iter()
            .all(|e| e.rule.origin.constraint_id() != Some(constraint)))
}
