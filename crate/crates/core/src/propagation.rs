//! Downward closure by a FIFO propagation queue, with a removal log.
//!
//! Restriction operators are constant, so they are applied once up front and
//! only local consistency operators are scheduled. The queue is seeded with
//! every local operator; an operator is re-enqueued when one of its input
//! variables loses a value. Since the global domain is finite the iteration
//! is stationary, and an exhausted queue means every operator is at a fixpoint.

use std::collections::{BTreeSet, VecDeque};

use crate::csp::{DomainElement, Environment};
use crate::error::{Error, Result};
use crate::operators::{LocalOperator, Operator, RuleInstance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    /// Index of the operator application that removed the element.
    pub step: usize,
    pub element: DomainElement,
    pub rule: RuleInstance,
}

/// Chronological record of removals; each element appears at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemovalLog {
    pub entries: Vec<LogEntry>,
}

impl RemovalLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter()
    }

    pub fn removed(&self) -> impl Iterator<Item = DomainElement> + '_ {
        self.entries.iter().map(|e| e.element)
    }

    pub fn entry_for(&self, element: DomainElement) -> Option<&LogEntry> {
        self.entries.iter().find(|e| e.element == element)
    }

    pub fn extend(&mut self, other: RemovalLog) {
        self.entries.extend(other.entries);
    }

    fn push(&mut self, step: usize, rule: RuleInstance) {
        self.entries.push(LogEntry {
            step,
            element: rule.conclusion,
            rule,
        });
    }

    /// Checks that every antecedent was absent from `start` or logged earlier,
    /// and that no element is logged twice.
    pub fn check_well_founded(&self, start: &Environment) -> Result<()> {
        let mut seen = BTreeSet::new();
        for entry in &self.entries {
            if !start.contains(entry.element) {
                return Err(Error::LogCorruption(format!(
                    "{} logged but absent at start",
                    start.universe().display_element(entry.element)
                )));
            }
            for a in &entry.rule.antecedents {
                if start.contains(*a) && !seen.contains(a) {
                    return Err(Error::LogCorruption(format!(
                        "antecedent {} of {} not yet removed",
                        start.universe().display_element(*a),
                        start.universe().display_element(entry.element)
                    )));
                }
            }
            if !seen.insert(entry.element) {
                return Err(Error::LogCorruption(format!(
                    "{} logged twice",
                    start.universe().display_element(entry.element)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureResult {
    pub env: Environment,
    pub log: RemovalLog,
    /// Number of operator applications performed.
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ClosureOptions {
    /// Stop as soon as some variable's environment becomes empty.
    pub fast_fail: bool,
    /// Offset added to logged step indices.
    pub first_step: usize,
}

/// `CL↓(d, ops)` with every removal justified.
pub fn closure(d: &Environment, ops: &[Operator]) -> ClosureResult {
    closure_with(d, ops, ClosureOptions::default())
}

pub fn closure_with(d: &Environment, ops: &[Operator], options: ClosureOptions) -> ClosureResult {
    let mut env = d.clone();
    let mut log = RemovalLog::default();
    let mut step = options.first_step;
    let mut locals = Vec::new();
    for op in ops {
        match op {
            Operator::Restriction(r) => {
                step += 1;
                for fact in r.rules() {
                    if env.remove(fact.conclusion) {
                        log.push(step, fact);
                    }
                }
            }
            Operator::Local(l) => locals.push(l.clone()),
        }
    }
    let restriction_steps = step - options.first_step;
    let seed: Vec<usize> = (0..locals.len()).collect();
    let res = propagate(
        env,
        &locals,
        &seed,
        ClosureOptions {
            first_step: step,
            ..options
        },
    );
    log.extend(res.log);
    ClosureResult {
        env: res.env,
        log,
        steps: restriction_steps + res.steps,
    }
}

/// Runs the queue over local operators only, starting with `seed` enqueued.
///
/// The result is a common fixpoint only if every operator not in `seed` is
/// already at a fixpoint of `start` (or gets woken by a change).
pub fn propagate(start: Environment, ops: &[LocalOperator], seed: &[usize], options: ClosureOptions) -> ClosureResult {
    let universe = start.universe().clone();
    let mut watchers: Vec<Vec<usize>> = vec![Vec::new(); universe.var_count()];
    for (i, op) in ops.iter().enumerate() {
        for v in op.inputs() {
            watchers[v.0].push(i);
        }
    }
    let mut env = start;
    let mut log = RemovalLog::default();
    let mut queued = vec![false; ops.len()];
    let mut queue = VecDeque::new();
    for &i in seed {
        if !queued[i] {
            queued[i] = true;
            queue.push_back(i);
        }
    }
    let mut step = options.first_step;
    while let Some(i) = queue.pop_front() {
        queued[i] = false;
        let op = &ops[i];
        step += 1;
        let before = env.clone();
        let removed = op.revise(&mut env);
        if removed.is_empty() {
            continue;
        }
        for h in removed {
            let rule = op
                .explain_removal(&before, h)
                .expect("revise only removes unsupported values");
            log.push(step, rule);
        }
        if options.fast_fail && env.var_len(op.target()) == 0 {
            break;
        }
        for &w in &watchers[op.target().0] {
            if !queued[w] {
                queued[w] = true;
                queue.push_back(w);
            }
        }
    }
    ClosureResult {
        env,
        log,
        steps: step - options.first_step,
    }
}

/// Applies `schedule` (indices into `ops`) in order and returns the limit.
///
/// The suffix after the last change must apply every operator at least once,
/// which certifies the limit as a common fixpoint.
pub fn chaotic_iterate(d: &Environment, ops: &[Operator], schedule: &[usize]) -> Result<Environment> {
    if let Some(&bad) = schedule.iter().find(|&&i| i >= ops.len()) {
        return Err(Error::usage(format!("schedule refers to operator #{bad}")));
    }
    let mut env = d.clone();
    let mut last_change = None;
    for (pos, &i) in schedule.iter().enumerate() {
        let next = ops[i].reduce(&env);
        if next != env {
            last_change = Some(pos);
            env = next;
        }
    }
    let tail = match last_change {
        Some(p) => &schedule[p + 1..],
        None => schedule,
    };
    let covered: BTreeSet<usize> = tail.iter().copied().collect();
    if covered.len() != ops.len() {
        return Err(Error::usage(
            "schedule does not sweep every operator after its last change",
        ));
    }
    Ok(env)
}

/// Reference closure: full sweeps in order until a sweep changes nothing.
pub fn closure_bruteforce(d: &Environment, ops: &[Operator]) -> Environment {
    let mut env = d.clone();
    loop {
        let mut changed = false;
        for op in ops {
            let next = op.reduce(&env);
            if next != env {
                env = next;
                changed = true;
            }
        }
        if !changed {
            return env;
        }
    }
}

/// Wraps local operators for the generic entry points.
pub fn as_operators(ops: &[LocalOperator]) -> Vec<Operator> {
    ops.iter().cloned().map(Operator::Local).collect()
}
