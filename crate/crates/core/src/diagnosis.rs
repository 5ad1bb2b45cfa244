//! Declarative diagnosis: from a wrong removal down to the rule behind it.
//!
//! A session walks a proof tree whose root is a symptom (a removal the user
//! did not expect). Each answer marks a judgment CORRECT or INCORRECT; the
//! session ends at an INCORRECT node whose children are all CORRECT, and the
//! rule that produced that node is to blame.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use crate::csp::{ConstraintSpec, Csp, Environment};
use crate::error::{Error, Result};
use crate::explanations::{verify_proof_tree, Judgment, ProofTree, RuleKind, TreeOrigin};
use crate::operators::{local_operators, LocalOperator, RuleOrigin};
use crate::propagation::{as_operators, closure};
use crate::search::BranchId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Unknown,
    Correct,
    Incorrect,
}

impl Verdict {
    pub fn tag(self) -> &'static str {
        match self {
            Verdict::Unknown => "UNKNOWN",
            Verdict::Correct => "CORRECT",
            Verdict::Incorrect => "INCORRECT",
        }
    }

    pub fn from_tag(s: &str) -> Option<Verdict> {
        match s {
            "UNKNOWN" => Some(Verdict::Unknown),
            "CORRECT" => Some(Verdict::Correct),
            "INCORRECT" => Some(Verdict::Incorrect),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One judgment of the tree, flattened in pre-order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionNode {
    pub judgment: Judgment,
    pub kind: RuleKind,
    pub origin: TreeOrigin,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlameKind {
    /// A constraint, through one of its operators.
    Constraint {
        operator: String,
        constraint: ConstraintSpec,
    },
    /// A labeling choice, through a restriction fact.
    Restriction { operator: String },
    /// A merge node; carries no constraint.
    Labeling,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blame {
    pub node: usize,
    pub kind: BlameKind,
}

impl Blame {
    pub fn constraint_id(&self) -> Option<&str> {
        match &self.kind {
            BlameKind::Constraint { constraint, .. } => Some(&constraint.id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conclusion {
    Blame(Blame),
    /// The root was judged CORRECT: the symptom was not confirmed.
    NoBlame,
}

#[derive(Debug, Clone)]
pub struct DiagnosisSession {
    csp: Csp,
    nodes: Vec<SessionNode>,
    verdicts: Vec<Verdict>,
    history: Vec<(usize, Verdict)>,
    cursor: Option<usize>,
    conclusion: Option<Conclusion>,
}

/// Opens a session on a verified tree, cursor at the root.
pub fn start_session(pt: &ProofTree, csp: &Csp, operators: &[LocalOperator]) -> Result<DiagnosisSession> {
    if !verify_proof_tree(pt, csp, operators) {
        return Err(Error::usage("proof tree does not verify"));
    }
    let mut nodes = Vec::new();
    flatten(pt, None, 0, &mut nodes);
    Ok(DiagnosisSession {
        csp: csp.clone(),
        verdicts: vec![Verdict::Unknown; nodes.len()],
        nodes,
        history: Vec::new(),
        cursor: Some(0),
        conclusion: None,
    })
}

fn flatten(t: &ProofTree, parent: Option<usize>, depth: usize, out: &mut Vec<SessionNode>) -> usize {
    let idx = out.len();
    out.push(SessionNode {
        judgment: t.judgment.clone(),
        kind: t.kind,
        origin: t.origin.clone(),
        parent,
        children: Vec::new(),
        depth,
    });
    for c in &t.children {
        let ci = flatten(c, Some(idx), depth + 1, out);
        out[idx].children.push(ci);
    }
    idx
}

impl DiagnosisSession {
    /// The same tree with every verdict back to UNKNOWN.
    pub fn restarted(&self) -> DiagnosisSession {
        DiagnosisSession {
            csp: self.csp.clone(),
            nodes: self.nodes.clone(),
            verdicts: vec![Verdict::Unknown; self.nodes.len()],
            history: Vec::new(),
            cursor: Some(0),
            conclusion: None,
        }
    }

    /// Applies `answers` in order.
    pub fn replay(&mut self, answers: &[(usize, Verdict)]) -> Result<()> {
        for &(node, verdict) in answers {
            self.answer(node, verdict)?;
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[SessionNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &SessionNode {
        &self.nodes[idx]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn verdict(&self, idx: usize) -> Verdict {
        self.verdicts[idx]
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    /// Answers given so far, in order.
    pub fn history(&self) -> &[(usize, Verdict)] {
        &self.history
    }

    /// The next suggested query, `None` once concluded.
    pub fn cursor(&self) -> Option<usize> {
        self.cursor
    }

    pub fn conclusion(&self) -> Option<&Conclusion> {
        self.conclusion.as_ref()
    }

    pub fn csp(&self) -> &Csp {
        &self.csp
    }

    /// The root, or an UNKNOWN node whose parent was judged INCORRECT.
    pub fn is_askable(&self, idx: usize) -> bool {
        idx < self.nodes.len()
            && self.verdicts[idx] == Verdict::Unknown
            && match self.nodes[idx].parent {
                None => true,
                Some(p) => self.verdicts[p] == Verdict::Incorrect,
            }
    }

    pub fn answer(&mut self, idx: usize, verdict: Verdict) -> Result<()> {
        if self.conclusion.is_some() {
            return Err(Error::usage("session already concluded"));
        }
        if idx >= self.nodes.len() {
            return Err(Error::usage(format!("no node #{idx}")));
        }
        if verdict == Verdict::Unknown {
            return Err(Error::usage("a verdict must be CORRECT or INCORRECT"));
        }
        if self.verdicts[idx] != Verdict::Unknown {
            return Err(Error::usage(format!("node #{idx} already judged")));
        }
        if !self.is_askable(idx) {
            return Err(Error::usage(format!(
                "node #{idx} cannot be judged before its parent is INCORRECT"
            )));
        }
        self.verdicts[idx] = verdict;
        self.history.push((idx, verdict));
        self.settle();
        Ok(())
    }

    fn settle(&mut self) {
        if self.verdicts[0] == Verdict::Correct {
            self.conclusion = Some(Conclusion::NoBlame);
            self.cursor = None;
            return;
        }
        let minimal = (0..self.nodes.len()).find(|&i| {
            self.verdicts[i] == Verdict::Incorrect
                && self.nodes[i]
                    .children
                    .iter()
                    .all(|&c| self.verdicts[c] == Verdict::Correct)
        });
        if let Some(i) = minimal {
            self.conclusion = Some(Conclusion::Blame(self.blame(i)));
            self.cursor = None;
            return;
        }
        // deepest confirmed symptoms first; among those the shallowest
        let frontier = (0..self.nodes.len())
            .filter(|&i| {
                self.verdicts[i] == Verdict::Incorrect
                    && self.nodes[i]
                        .children
                        .iter()
                        .all(|&c| self.verdicts[c] != Verdict::Incorrect)
            })
            .min_by_key(|&i| (self.nodes[i].depth, i));
        self.cursor = match frontier {
            Some(i) => self.nodes[i]
                .children
                .iter()
                .copied()
                .find(|&c| self.verdicts[c] == Verdict::Unknown),
            None => Some(0),
        };
    }

    fn blame(&self, idx: usize) -> Blame {
        let kind = match &self.nodes[idx].origin {
            TreeOrigin::Rule(RuleOrigin::Local { operator, constraint }) => BlameKind::Constraint {
                operator: operator.clone(),
                constraint: self
                    .csp
                    .constraint(constraint)
                    .expect("verified trees only name known constraints")
                    .clone(),
            },
            TreeOrigin::Rule(RuleOrigin::Restriction { operator, .. }) => BlameKind::Restriction {
                operator: operator.clone(),
            },
            TreeOrigin::Merge => BlameKind::Labeling,
        };
        Blame { node: idx, kind }
    }

    /// Human-readable summary of the conclusion.
    pub fn describe_conclusion(&self) -> Option<String> {
        let dom = self.csp.domain();
        self.conclusion.as_ref().map(|c| match c {
            Conclusion::NoBlame => "no blame: symptom not confirmed".to_string(),
            Conclusion::Blame(b) => {
                let at = self.nodes[b.node].judgment.display(dom);
                match &b.kind {
                    BlameKind::Constraint { operator, constraint } => format!(
                        "blame constraint {} ({}) via {} at {}",
                        constraint.id,
                        constraint.describe(dom),
                        operator,
                        at
                    ),
                    BlameKind::Restriction { operator } => {
                        format!("blame labeling choice {operator} at {at}")
                    }
                    BlameKind::Labeling => format!("blame labeling merge at {at}"),
                }
            }
        })
    }
}

/// Runs a session to its end, asking `oracle` at each cursor.
pub fn diagnose<F>(pt: &ProofTree, csp: &Csp, operators: &[LocalOperator], mut oracle: F) -> Result<Conclusion>
where
    F: FnMut(&Judgment) -> Verdict,
{
    let mut session = start_session(pt, csp, operators)?;
    while let Some(c) = session.cursor() {
        let verdict = match oracle(&session.node(c).judgment) {
            Verdict::Unknown => Verdict::Correct,
            v => v,
        };
        session.answer(c, verdict)?;
    }
    Ok(session.conclusion().cloned().expect("no cursor means concluded"))
}

/// Judges `Γ ⊢ h` against the closures of an intended problem.
#[derive(Debug)]
pub struct IntendedOracle {
    intended: Csp,
    operators: Vec<LocalOperator>,
    cache: RefCell<BTreeMap<BranchId, Environment>>,
}

impl IntendedOracle {
    pub fn new(intended: &Csp) -> IntendedOracle {
        IntendedOracle {
            operators: local_operators(intended),
            intended: intended.clone(),
            cache: RefCell::new(BTreeMap::new()),
        }
    }

    /// CORRECT iff h is withdrawn from every context branch under the
    /// intended constraints.
    pub fn judge(&self, j: &Judgment) -> Verdict {
        let dom = self.intended.domain();
        let ops = as_operators(&self.operators);
        let mut cache = self.cache.borrow_mut();
        for b in j.context.branches() {
            let closed = cache.entry(b.clone()).or_insert_with(|| {
                let e = b
                    .restricted_env(dom)
                    .expect("context branches name values of the domain");
                closure(&e, &ops).env
            });
            if closed.contains(j.element) {
                return Verdict::Incorrect;
            }
        }
        Verdict::Correct
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::CmpOp;
    use crate::explanations::Explanations;
    use crate::instances::conference;
    use crate::search::{solve, LabelDirective, Strategy};

    fn mp2_session() -> (DiagnosisSession, Csp) {
        let csp = conference();
        let pm = csp.var("PM").unwrap();
        let tree = solve(&csp, &[LabelDirective::new(pm, Strategy::Enumerate)]);
        let ex = Explanations::build(&tree).unwrap();
        let pt = ex.explain(csp.element("MP", 2).unwrap()).unwrap();
        (start_session(pt, &csp, tree.operators()).unwrap(), csp)
    }

    fn find(s: &DiagnosisSession, text: &str) -> usize {
        let dom = s.csp().domain().clone();
        (0..s.len())
            .find(|&i| s.node(i).judgment.display(&dom) == text)
            .unwrap_or_else(|| panic!("no node {text}"))
    }

    #[test]
    fn session_shape() {
        let (s, _) = mp2_session();
        assert_eq!(s.len(), 9);
        assert_eq!(s.cursor(), Some(0));
        assert!(s.verdicts().iter().all(|&v| v == Verdict::Unknown));
    }

    #[test]
    fn mp_gt_pm_bug() {
        let (mut s, _) = mp2_session();
        s.answer(0, Verdict::Incorrect).unwrap();
        assert_eq!(s.cursor(), Some(1));
        let e2 = find(&s, "{PM=2} |- (MP,2)");
        s.answer(e2, Verdict::Incorrect).unwrap();
        let pm1 = find(&s, "{PM=2} |- (PM,1)");
        assert_eq!(s.cursor(), Some(pm1));
        s.answer(pm1, Verdict::Correct).unwrap();
        match s.conclusion().unwrap() {
            Conclusion::Blame(b) => {
                assert_eq!(b.node, e2);
                assert_eq!(b.constraint_id(), Some("c4"));
            }
            c => panic!("{c:?}"),
        }
        assert!(s.answer(1, Verdict::Correct).is_err());
    }

    #[test]
    fn root_correct_is_no_blame() {
        let (mut s, _) = mp2_session();
        s.answer(0, Verdict::Correct).unwrap();
        assert_eq!(s.conclusion(), Some(&Conclusion::NoBlame));
        assert_eq!(s.cursor(), None);
    }

    #[test]
    fn descent_to_a_fact() {
        let (mut s, _) = mp2_session();
        while let Some(c) = s.cursor() {
            s.answer(c, Verdict::Incorrect).unwrap();
        }
        match s.conclusion().unwrap() {
            Conclusion::Blame(Blame {
                kind: BlameKind::Restriction { operator },
                ..
            }) => assert_eq!(operator, "PM=1"),
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn illegal_answers() {
        let (mut s, _) = mp2_session();
        assert!(matches!(s.answer(1, Verdict::Correct), Err(Error::Usage(_))));
        assert!(matches!(s.answer(0, Verdict::Unknown), Err(Error::Usage(_))));
        s.answer(0, Verdict::Incorrect).unwrap();
        assert!(matches!(s.answer(0, Verdict::Correct), Err(Error::Usage(_))));
        assert!(matches!(s.answer(99, Verdict::Correct), Err(Error::Usage(_))));
    }

    #[test]
    fn single_fact_session() {
        let (s, csp) = mp2_session();
        let fact = (0..s.len()).find(|&i| s.node(i).kind == RuleKind::Restriction).unwrap();
        let pt = ProofTree {
            judgment: s.node(fact).judgment.clone(),
            kind: RuleKind::Restriction,
            origin: s.node(fact).origin.clone(),
            children: Vec::new(),
        };
        let ops = local_operators(&csp);
        let one = start_session(&pt, &csp, &ops).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn intended_oracle_blames_mp_gt_pm() {
        let csp = conference();
        let intended = Csp::builder()
            .var("AM", 1..=3)
            .var("MP", 1..=3)
            .var("PM", 1..=3)
            .var("MA", 1..=3)
            .compare("MA", CmpOp::Gt, "AM", 0)
            .compare("MA", CmpOp::Gt, "PM", 0)
            .compare("MP", CmpOp::Gt, "AM", 0)
            .compare("MP", CmpOp::Ge, "PM", 0)
            .compare("AM", CmpOp::Ne, "PM", 0)
            .build()
            .unwrap();
        let pm = csp.var("PM").unwrap();
        let tree = solve(&csp, &[LabelDirective::new(pm, Strategy::Enumerate)]);
        let ex = Explanations::build(&tree).unwrap();
        let pt = ex.explain(csp.element("MP", 2).unwrap()).unwrap();
        let oracle = IntendedOracle::new(&intended);
        let mut asked = 0;
        let c = diagnose(pt, &csp, tree.operators(), |j| {
            asked += 1;
            oracle.judge(j)
        })
        .unwrap();
        assert!(asked <= pt.size());
        match c {
            Conclusion::Blame(b) => assert_eq!(b.constraint_id(), Some("c4")),
            c => panic!("{c:?}"),
        }
        let same = IntendedOracle::new(&csp);
        assert_eq!(
            diagnose(pt, &csp, tree.operators(), |j| same.judge(j)).unwrap(),
            Conclusion::NoBlame
        );
        assert_eq!(
            diagnose(pt, &csp, tree.operators(), |_| Verdict::Correct).unwrap(),
            Conclusion::NoBlame
        );
    }

    #[test]
    fn unverified_tree_rejected() {
        let (s, csp) = mp2_session();
        let n = s.node(1);
        let bogus = ProofTree {
            judgment: n.judgment.clone(),
            kind: RuleKind::Local,
            origin: n.origin.clone(),
            children: Vec::new(),
        };
        let ops = local_operators(&csp);
        assert!(matches!(start_session(&bogus, &csp, &ops), Err(Error::Usage(_))));
    }
}
