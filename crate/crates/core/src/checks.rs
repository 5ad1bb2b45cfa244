//! Oracle suites: each property is checked against brute-force references.
//!
//! Used by the `check` verb and by the integration tests.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csp::{solutions_bruteforce, Csp, Environment, DEFAULT_ENUMERATION_CAP};
use crate::error::Result;
use crate::explanations::{verify_proof_tree, Explanations};
use crate::operators::{local_operators, make_restriction, Operator, RestrictionOperator, RuleOrigin};
use crate::propagation::{as_operators, chaotic_iterate, closure, closure_bruteforce};
use crate::retraction::{retract, verify_retraction, SolverState};
use crate::search::{partition, solve, LabelDirective, SearchTree, Strategy};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str, failures: Vec<String>, cases: usize) -> Self {
        CheckReport {
            name,
            passed: failures.is_empty(),
            detail: if failures.is_empty() {
                format!("{cases} cases")
            } else {
                format!("{} of {cases} cases failed; first: {}", failures.len(), failures[0])
            },
        }
    }
}

/// A schedule that applies `ops` randomly, then in shuffled full sweeps
/// until none can change anything.
pub fn random_fair_schedule(n_ops: usize, domain_len: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut schedule: Vec<usize> = (0..rng.random_range(0..=2 * n_ops))
        .map(|_| rng.random_range(0..n_ops.max(1)))
        .filter(|_| n_ops > 0)
        .collect();
    for _ in 0..=domain_len {
        let mut sweep: Vec<usize> = (0..n_ops).collect();
        sweep.shuffle(rng);
        schedule.extend(sweep);
    }
    schedule
}

/// Random restriction operators over `csp`'s variables.
pub fn random_restrictions(csp: &Csp, rng: &mut impl Rng) -> Vec<RestrictionOperator> {
    let dom = csp.domain();
    let mut out = Vec::new();
    for x in dom.vars() {
        if rng.random_bool(0.5) {
            let mut kept: BTreeSet<i64> = dom.values(x).iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            if kept.is_empty() {
                kept.insert(dom.values(x)[0]);
            }
            out.push(make_restriction(dom, x, kept).expect("kept values are in the domain"));
        }
    }
    out
}

/// Every fair schedule over `L ∪ R` reaches `closure_bruteforce`.
pub fn check_confluence(csp: &Csp, schedules: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = as_operators(&local_operators(csp));
    ops.extend(
        random_restrictions(csp, &mut rng)
            .into_iter()
            .map(Operator::Restriction),
    );
    let d = csp.full_env();
    let expected = closure_bruteforce(&d, &ops);
    let mut failures = Vec::new();
    for k in 0..schedules {
        let schedule = random_fair_schedule(ops.len(), d.len(), &mut rng);
        match chaotic_iterate(&d, &ops, &schedule) {
            Ok(env) if env == expected => {}
            Ok(env) => failures.push(format!("schedule #{k}: {env} != {expected}")),
            Err(e) => failures.push(format!("schedule #{k}: {e}")),
        }
    }
    if closure(&d, &ops).env != expected {
        failures.push("queue closure differs".into());
    }
    CheckReport::new("confluence", failures, schedules + 1)
}

/// `CL↓(d, L ∪ R) = CL↓(CL↓(d, R), L)`.
pub fn check_factoring(csp: &Csp, trials: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locals = as_operators(&local_operators(csp));
    let d = csp.full_env();
    let mut failures = Vec::new();
    for k in 0..trials {
        let rs: Vec<Operator> = random_restrictions(csp, &mut rng)
            .into_iter()
            .map(Operator::Restriction)
            .collect();
        let mut all = locals.clone();
        all.extend(rs.iter().cloned());
        all.shuffle(&mut rng);
        let joint = closure_bruteforce(&d, &all);
        let staged = closure_bruteforce(&closure_bruteforce(&d, &rs), &locals);
        if joint != staged {
            failures.push(format!("trial #{k}: {joint} != {staged}"));
        }
    }
    CheckReport::new("factoring", failures, trials)
}

/// No solution is lost by any partition of any search node, for every
/// variable and both strategies.
pub fn check_partitions_keep_solutions(csp: &Csp, tree: &SearchTree) -> Result<CheckReport> {
    let sols = solutions_bruteforce(csp, DEFAULT_ENUMERATION_CAP)?;
    let locals = as_operators(tree.operators());
    let dom = csp.domain();
    let mut failures = Vec::new();
    let mut cases = 0;
    for node in tree.nodes() {
        let d = &node.env;
        if d.has_empty_var() {
            continue;
        }
        for x in dom.vars() {
            for strategy in [Strategy::Enumerate, Strategy::Split] {
                let part = partition(d, x, strategy)?;
                let closed: Vec<Environment> = part
                    .cells
                    .iter()
                    .map(|cell| {
                        let r = make_restriction(dom, x, cell.clone()).expect("cells are non-empty");
                        closure_bruteforce(&r.reduce(d), &locals)
                    })
                    .collect();
                for t in &sols {
                    let inside = t.elements().all(|h| d.contains(h));
                    if !inside {
                        continue;
                    }
                    cases += 1;
                    if !closed.iter().any(|e| t.elements().all(|h| e.contains(h))) {
                        failures.push(format!(
                            "{} lost at {} splitting {}",
                            t.display(dom),
                            node.branch.label(dom),
                            dom.name(x)
                        ));
                    }
                }
            }
        }
    }
    Ok(CheckReport::new("partitions keep solutions", failures, cases))
}

/// The search tree is complete and its solutions are exactly the brute-force ones.
pub fn check_search(csp: &Csp, tree: &SearchTree) -> Result<CheckReport> {
    let mut failures = Vec::new();
    if !tree.is_complete() {
        failures.push("some leaf is not closed".into());
    }
    let labeled_all = tree.labeling().iter().map(|l| l.var).collect::<BTreeSet<_>>().len() == csp.domain().var_count();
    if labeled_all && tree.solutions() != solutions_bruteforce(csp, DEFAULT_ENUMERATION_CAP)? {
        failures.push("solutions differ from enumeration".into());
    }
    Ok(CheckReport::new("search", failures, 1))
}

/// Maximal contexts are exactly the leaves whose closure lacks the element,
/// and every emitted root is justified by those closures.
pub fn check_explanations(tree: &SearchTree, ex: &Explanations) -> CheckReport {
    let csp = tree.csp();
    let dom = csp.domain();
    let locals = as_operators(tree.operators());
    let closures: Vec<(usize, Environment)> = tree
        .leaves()
        .map(|i| (i, closure_bruteforce(&tree.node(i).restricted, &locals)))
        .collect();
    let mut failures = Vec::new();
    let mut cases = 0;
    for i in 0..dom.len() {
        let h = dom.element(i);
        cases += 1;
        let expected: BTreeSet<_> = closures
            .iter()
            .filter(|(_, e)| !e.contains(h))
            .map(|(leaf, _)| tree.node(*leaf).branch.clone())
            .collect();
        let got = ex.explain(h).map(|t| t.context().0.clone()).unwrap_or_default();
        if got != expected {
            failures.push(format!("{}: maximal context differs", dom.display_element(h)));
        }
    }
    for t in ex.s_up() {
        cases += 1;
        let h = t.element();
        for b in t.context().branches() {
            let Some(leaf) = tree.find(b) else {
                failures.push(format!("{}: unknown branch", t.judgment.display(dom)));
                continue;
            };
            let e = closure_bruteforce(&tree.node(leaf).restricted, &locals);
            if e.contains(h) {
                failures.push(format!("{}: unjustified", t.judgment.display(dom)));
            }
        }
        if !verify_proof_tree(t, csp, tree.operators()) {
            failures.push(format!("{}: does not verify", t.judgment.display(dom)));
        }
    }
    CheckReport::new("explanations", failures, cases)
}

/// Every logged rule instance is sound for its operator.
pub fn check_rule_soundness(tree: &SearchTree) -> CheckReport {
    let dom = tree.csp().domain();
    let mut failures = Vec::new();
    let mut cases = 0;
    for node in tree.nodes() {
        for entry in node.log.iter() {
            cases += 1;
            let ok = match &entry.rule.origin {
                RuleOrigin::Local { operator, .. } => tree
                    .operators()
                    .iter()
                    .find(|o| o.id() == operator)
                    .is_some_and(|o| o.rule_is_sound(&entry.rule.antecedents, entry.element)),
                RuleOrigin::Restriction { var, kept, .. } => {
                    entry.rule.antecedents.is_empty()
                        && entry.element.var == *var
                        && !kept.contains(&entry.element.value)
                }
            };
            if !ok {
                failures.push(format!(
                    "{} by {}",
                    dom.display_element(entry.element),
                    entry.rule.origin.operator_id()
                ));
            }
        }
    }
    CheckReport::new("rule soundness", failures, cases)
}

/// Retracting each constraint matches the closure without it.
pub fn check_retraction(csp: &Csp) -> Result<CheckReport> {
    let state = SolverState::new(csp);
    let mut failures = Vec::new();
    for c in csp.constraints() {
        let after = retract(&state, &c.id)?;
        if !verify_retraction(&state, &c.id, &after)? {
            failures.push(format!("retracting {}", c.id));
        }
    }
    Ok(CheckReport::new("retraction", failures, csp.constraints().len()))
}

/// Runs every suite on one problem.
pub fn run_all(csp: &Csp, labeling: &[LabelDirective]) -> Result<Vec<CheckReport>> {
    let tree = solve(csp, labeling);
    let ex = Explanations::build(&tree)?;
    Ok(vec![
        check_confluence(csp, 5, 1),
        check_factoring(csp, 5, 2),
        check_search(csp, &tree)?,
        check_partitions_keep_solutions(csp, &tree)?,
        check_explanations(&tree, &ex),
        check_rule_soundness(&tree),
        check_retraction(csp)?,
    ])
}
