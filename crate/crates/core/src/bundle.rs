//! JSON export of a solve: problem, search tree, logs, proof trees and an
//! optional diagnosis transcript.
//!
//! Keys are emitted in sorted order and ids are branch labels, so the same
//! input always produces the same bytes. Import re-validates the version tag
//! and every cross reference.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::csp::{ConstraintKind, DomainElement, Environment, GlobalDomain};
use crate::diagnosis::{BlameKind, Conclusion, DiagnosisSession};
use crate::error::{Error, Result};
use crate::explanations::{Explanations, ProofTree, MERGE};
use crate::search::{NodeStatus, SearchTree};

pub const BUNDLE_VERSION: &str = "valex-bundle/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Bundle {
    pub version: String,
    pub csp: CspDesc,
    pub nodes: Vec<NodeDesc>,
    /// Removals logged on the way into each node, keyed by node id.
    pub logs: BTreeMap<String, Vec<LogDesc>>,
    pub solutions: Vec<BTreeMap<String, i64>>,
    pub proof_trees: Vec<TreeDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<Transcript>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CspDesc {
    pub variables: Vec<VarDesc>,
    pub constraints: Vec<ConstraintDesc>,
    pub operators: Vec<OperatorDesc>,
    pub labeling: Vec<LabelDesc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VarDesc {
    pub name: String,
    pub values: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConstraintDesc {
    pub id: String,
    pub scope: Vec<String>,
    /// `COMPARE` or `TABLE`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<Vec<Vec<i64>>>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OperatorDesc {
    pub id: String,
    pub constraint: String,
    pub target: String,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LabelDesc {
    pub var: String,
    pub strategy: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NodeDesc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arriving_op: Option<String>,
    pub env: BTreeMap<String, Vec<i64>>,
    pub restricted_env: BTreeMap<String, Vec<i64>>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionDesc>,
    pub children: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PartitionDesc {
    pub var: String,
    pub cells: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ElementDesc {
    pub var: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LogDesc {
    pub step: usize,
    pub var: String,
    pub value: i64,
    pub rule_kind: String,
    pub origin: String,
    pub antecedents: Vec<ElementDesc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct JudgmentDesc {
    pub context: Vec<String>,
    pub var: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeDesc {
    pub judgment: JudgmentDesc,
    pub rule_kind: String,
    /// Operator id, restriction id, or `MERGE`.
    pub origin: String,
    pub children: Vec<TreeDesc>,
}

/// A diagnosis session on one proof tree of the bundle. Node numbers are
/// pre-order positions in that tree, the root being 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Transcript {
    pub tree: ElementDesc,
    pub steps: Vec<TranscriptStep>,
    pub conclusion: ConclusionDesc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TranscriptStep {
    /// Suggested query before this answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cursor: Option<usize>,
    pub node: usize,
    pub judgment: String,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConclusionDesc {
    /// `PENDING`, `NO_BLAME`, `CONSTRAINT`, `LABELING_CHOICE` or `LABELING_MERGE`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cursor: Option<usize>,
    pub text: String,
}

fn env_desc(env: &Environment) -> BTreeMap<String, Vec<i64>> {
    let dom = env.universe();
    dom.vars()
        .map(|v| (dom.name(v).to_string(), env.values(v).collect()))
        .collect()
}

fn element_desc(dom: &GlobalDomain, h: DomainElement) -> ElementDesc {
    ElementDesc {
        var: dom.name(h.var).to_string(),
        value: h.value,
    }
}

pub fn tree_desc(t: &ProofTree, dom: &GlobalDomain) -> TreeDesc {
    TreeDesc {
        judgment: JudgmentDesc {
            context: t.context().labels(dom),
            var: dom.name(t.element().var).to_string(),
            value: t.element().value,
        },
        rule_kind: t.kind.tag().to_string(),
        origin: t.origin.id().to_string(),
        children: t.children.iter().map(|c| tree_desc(c, dom)).collect(),
    }
}

impl TreeDesc {
    pub fn preorder(&self) -> Vec<&TreeDesc> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.preorder());
        }
        out
    }
}

pub fn transcript(session: &DiagnosisSession) -> Transcript {
    let dom = session.csp().domain();
    // replay to recover the cursor before each answer
    let mut steps = Vec::new();
    let mut cursor = Some(0);
    let mut replay = session.restarted();
    for &(node, verdict) in session.history() {
        steps.push(TranscriptStep {
            cursor,
            node,
            judgment: session.node(node).judgment.display(dom),
            verdict: verdict.tag().to_string(),
        });
        replay
            .answer(node, verdict)
            .expect("history replays on a fresh session");
        cursor = replay.cursor();
    }
    let root = &session.node(0).judgment;
    Transcript {
        tree: element_desc(dom, root.element),
        steps,
        conclusion: conclusion_desc(session),
    }
}

fn conclusion_desc(session: &DiagnosisSession) -> ConclusionDesc {
    let text = session.describe_conclusion().unwrap_or_else(|| "pending".to_string());
    let mut d = ConclusionDesc {
        kind: "PENDING".into(),
        node: None,
        constraint: None,
        operator: None,
        cursor: session.cursor(),
        text,
    };
    match session.conclusion() {
        None => {}
        Some(Conclusion::NoBlame) => d.kind = "NO_BLAME".into(),
        Some(Conclusion::Blame(b)) => {
            d.node = Some(b.node);
            match &b.kind {
                BlameKind::Constraint { operator, constraint } => {
                    d.kind = "CONSTRAINT".into();
                    d.constraint = Some(constraint.id.clone());
                    d.operator = Some(operator.clone());
                }
                BlameKind::Restriction { operator } => {
                    d.kind = "LABELING_CHOICE".into();
                    d.operator = Some(operator.clone());
                }
                BlameKind::Labeling => d.kind = "LABELING_MERGE".into(),
            }
        }
    }
    d
}

impl Bundle {
    /// Builds the bundle of a complete search tree.
    pub fn from_solve(tree: &SearchTree, explanations: &Explanations) -> Bundle {
        let csp = tree.csp();
        let dom = csp.domain();
        let name = |v| dom.name(v).to_string();
        let variables = dom
            .vars()
            .map(|v| VarDesc {
                name: name(v),
                values: dom.values(v).to_vec(),
            })
            .collect();
        let constraints = csp
            .constraints()
            .iter()
            .map(|c| {
                let (kind, op, offset, tuples) = match &c.kind {
                    ConstraintKind::Compare { op, offset } => {
                        ("COMPARE", Some(op.tag().to_string()), Some(*offset), None)
                    }
                    ConstraintKind::Table { tuples } => ("TABLE", None, None, Some(tuples.clone())),
                };
                ConstraintDesc {
                    id: c.id.clone(),
                    scope: c.scope.iter().map(|&v| name(v)).collect(),
                    kind: kind.into(),
                    op,
                    offset,
                    tuples,
                    text: c.describe(dom),
                }
            })
            .collect();
        let operators = tree
            .operators()
            .iter()
            .map(|o| OperatorDesc {
                id: o.id().to_string(),
                constraint: o.constraint_id().to_string(),
                target: name(o.target()),
                inputs: o.inputs().map(name).collect(),
            })
            .collect();
        let labeling = tree
            .labeling()
            .iter()
            .map(|l| LabelDesc {
                var: name(l.var),
                strategy: l.strategy.keyword().to_string(),
            })
            .collect();
        let id = |i: usize| tree.branch_label(i);
        let mut nodes = Vec::new();
        let mut logs = BTreeMap::new();
        for (i, n) in tree.nodes().iter().enumerate() {
            let partition = match &n.status {
                NodeStatus::Interior(p) => Some(PartitionDesc {
                    var: name(p.var),
                    cells: p.cells.iter().map(|c| c.iter().copied().collect()).collect(),
                }),
                _ => None,
            };
            nodes.push(NodeDesc {
                id: id(i),
                parent: n.parent.map(id),
                depth: n.depth,
                arriving_op: n.arrival.operator_id().map(str::to_string),
                env: env_desc(&n.env),
                restricted_env: env_desc(&n.restricted),
                status: n.status.tag().to_string(),
                partition,
                children: n.children.iter().map(|&c| id(c)).collect(),
            });
            let entries = n
                .log
                .iter()
                .map(|e| LogDesc {
                    step: e.step,
                    var: name(e.element.var),
                    value: e.element.value,
                    rule_kind: if e.rule.origin.is_restriction() {
                        "RESTRICTION".into()
                    } else {
                        "LOCAL".into()
                    },
                    origin: e.rule.origin.operator_id().to_string(),
                    antecedents: e.rule.antecedents.iter().map(|&a| element_desc(dom, a)).collect(),
                })
                .collect();
            logs.insert(id(i), entries);
        }
        let solutions = tree
            .solutions()
            .iter()
            .map(|t| t.0.iter().map(|(&v, &x)| (name(v), x)).collect())
            .collect();
        let proof_trees = explanations.maximal_trees().map(|t| tree_desc(t, dom)).collect();
        Bundle {
            version: BUNDLE_VERSION.to_string(),
            csp: CspDesc {
                variables,
                constraints,
                operators,
                labeling,
            },
            nodes,
            logs,
            solutions,
            proof_trees,
            session: None,
        }
    }

    pub fn with_session(mut self, t: Transcript) -> Bundle {
        self.session = Some(t);
        self
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("bundle types serialize");
        let mut s = serde_json::to_string_pretty(&value).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Bundle> {
        let b: Bundle = serde_json::from_str(text).map_err(|e| Error::Bundle(e.to_string()))?;
        if b.version != BUNDLE_VERSION {
            return Err(Error::Bundle(format!(
                "unsupported version `{}` (expected `{BUNDLE_VERSION}`)",
                b.version
            )));
        }
        b.check_integrity()?;
        Ok(b)
    }

    /// The maximal tree for `(var, value)`, if exported.
    pub fn proof_tree(&self, var: &str, value: i64) -> Option<&TreeDesc> {
        self.proof_trees
            .iter()
            .find(|t| t.judgment.var == var && t.judgment.value == value)
    }

    /// Every id used in the bundle resolves within it.
    pub fn check_integrity(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Bundle(m));
        let vars: BTreeMap<&str, BTreeSet<i64>> = self
            .csp
            .variables
            .iter()
            .map(|v| (v.name.as_str(), v.values.iter().copied().collect()))
            .collect();
        if vars.len() != self.csp.variables.len() {
            return bad("duplicate variable".into());
        }
        let has_element = |var: &str, value: i64| vars.get(var).is_some_and(|s| s.contains(&value));
        let constraints: BTreeSet<&str> = self.csp.constraints.iter().map(|c| c.id.as_str()).collect();
        for c in &self.csp.constraints {
            if let Some(v) = c.scope.iter().find(|v| !vars.contains_key(v.as_str())) {
                return bad(format!("constraint {} names unknown variable {v}", c.id));
            }
        }
        let mut local_ops = BTreeSet::new();
        for o in &self.csp.operators {
            if !constraints.contains(o.constraint.as_str()) {
                return bad(format!("operator {} names unknown constraint {}", o.id, o.constraint));
            }
            if !vars.contains_key(o.target.as_str()) || o.inputs.iter().any(|v| !vars.contains_key(v.as_str())) {
                return bad(format!("operator {} names an unknown variable", o.id));
            }
            local_ops.insert(o.id.as_str());
        }
        for l in &self.csp.labeling {
            if !vars.contains_key(l.var.as_str()) {
                return bad(format!("labeling names unknown variable {}", l.var));
            }
        }
        let node_ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        if node_ids.len() != self.nodes.len() {
            return bad("duplicate node id".into());
        }
        let restriction_ops: BTreeSet<&str> = self.nodes.iter().filter_map(|n| n.arriving_op.as_deref()).collect();
        for n in &self.nodes {
            if let Some(p) = &n.parent {
                if !node_ids.contains(p.as_str()) {
                    return bad(format!("node {} has unknown parent {p}", n.id));
                }
            }
            if let Some(c) = n.children.iter().find(|c| !node_ids.contains(c.as_str())) {
                return bad(format!("node {} has unknown child {c}", n.id));
            }
            for env in [&n.env, &n.restricted_env] {
                for (v, vals) in env {
                    if vals.iter().any(|&x| !has_element(v, x)) {
                        return bad(format!("node {} has an environment outside the domain", n.id));
                    }
                }
            }
        }
        let origin_ok = |o: &str| local_ops.contains(o) || restriction_ops.contains(o);
        for (id, entries) in &self.logs {
            if !node_ids.contains(id.as_str()) {
                return bad(format!("log for unknown node {id}"));
            }
            for e in entries {
                if !origin_ok(&e.origin) {
                    return bad(format!("log of {id} names unknown operator {}", e.origin));
                }
                if !has_element(&e.var, e.value) || e.antecedents.iter().any(|a| !has_element(&a.var, a.value)) {
                    return bad(format!("log of {id} names an element outside the domain"));
                }
            }
        }
        for t in &self.proof_trees {
            for n in t.preorder() {
                let ok_origin = if n.rule_kind == "LABELING" {
                    n.origin == MERGE
                } else {
                    origin_ok(&n.origin)
                };
                if !ok_origin {
                    return bad(format!("proof tree names unknown operator {}", n.origin));
                }
                if !has_element(&n.judgment.var, n.judgment.value) {
                    return bad("proof tree names an element outside the domain".into());
                }
                if n.judgment.context.is_empty() {
                    return bad("proof tree node with an empty context".into());
                }
                if let Some(c) = n.judgment.context.iter().find(|c| !node_ids.contains(c.as_str())) {
                    return bad(format!("proof tree context names unknown branch {c}"));
                }
            }
        }
        if let Some(s) = &self.session {
            let Some(t) = self.proof_tree(&s.tree.var, s.tree.value) else {
                return bad("session refers to a missing proof tree".into());
            };
            let size = t.preorder().len();
            let in_range = |i: &Option<usize>| i.is_none_or(|i| i < size);
            if s.steps.iter().any(|st| st.node >= size || !in_range(&st.cursor))
                || !in_range(&s.conclusion.node)
                || !in_range(&s.conclusion.cursor)
            {
                return bad("session refers to a node outside its tree".into());
            }
            if let Some(c) = &s.conclusion.constraint {
                if !constraints.contains(c.as_str()) {
                    return bad(format!("session blames unknown constraint {c}"));
                }
            }
        }
        Ok(())
    }
}
