//! Small worked instances used by tests, the CLI and the docs.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csp::{CmpOp, Csp};
use crate::model::Model;
use crate::search::{LabelDirective, Strategy};

/// The conference scheduling problem: four talks over three half-days.
///
/// Variables are declared `AM, MP, PM, MA`; the constraints, in order, are
/// `MA > AM`, `MA > PM`, `MP > AM`, `MP > PM` and `AM != PM` (ids `c1`..`c5`).
pub fn conference() -> Csp {
    Csp::builder()
        .var("AM", 1..=3)
        .var("MP", 1..=3)
        .var("PM", 1..=3)
        .var("MA", 1..=3)
        .compare("MA", CmpOp::Gt, "AM", 0)
        .compare("MA", CmpOp::Gt, "PM", 0)
        .compare("MP", CmpOp::Gt, "AM", 0)
        .compare("MP", CmpOp::Gt, "PM", 0)
        .compare("AM", CmpOp::Ne, "PM", 0)
        .build()
        .expect("conference model is well formed")
}

/// The conference problem with its `PM` enumeration directive.
pub fn conference_model() -> Model {
    let csp = conference();
    let pm = csp.var("PM").expect("PM declared");
    Model {
        csp,
        labeling: vec![LabelDirective::new(pm, Strategy::Enumerate)],
    }
}

pub const CONFERENCE_MODEL_TEXT: &str = "\
# conference scheduling
var AM in 1..3
var MP in 1..3
var PM in 1..3
var MA in 1..3
constraint MA > AM
constraint MA > PM
constraint MP > AM
constraint MP > PM
constraint AM != PM
label PM enumerate
";

/// `X, Y ∈ 1..3` with `X < Y` (`c1`) and `Y < 3` (`c2`, a unary table).
pub fn chain_with_bound() -> Csp {
    Csp::builder()
        .var("X", 1..=3)
        .var("Y", 1..=3)
        .compare("X", CmpOp::Lt, "Y", 0)
        .table(&["Y"], vec![vec![1], vec![2]])
        .build()
        .expect("well formed")
}

/// A pseudo-random problem with at most 4 variables, 4 values per domain and
/// 5 constraints (comparisons with small offsets, and binary or unary tables).
pub fn random_csp(seed: u64) -> Csp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4usize);
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let mut b = Csp::builder();
    let mut doms = Vec::new();
    for name in &names {
        let k = rng.random_range(2..=4i64);
        let lo = rng.random_range(0..=1i64);
        let vals: Vec<i64> = (lo..lo + k).collect();
        b = b.var(name, vals.iter().copied());
        doms.push(vals);
    }
    let m = rng.random_range(1..=5usize);
    for _ in 0..m {
        let x = rng.random_range(0..n);
        let mut y = rng.random_range(0..n - 1);
        if y >= x {
            y += 1;
        }
        match rng.random_range(0..4u8) {
            0 => {
                let tuples = doms[x]
                    .iter()
                    .flat_map(|&a| doms[y].iter().map(move |&c| vec![a, c]))
                    .filter(|_| rng.random_bool(0.5))
                    .collect::<Vec<_>>();
                b = b.table(&[&names[x], &names[y]], tuples);
            }
            1 if rng.random_bool(0.3) => {
                let tuples = doms[x]
                    .iter()
                    .filter(|_| rng.random_bool(0.6))
                    .map(|&a| vec![a])
                    .collect();
                b = b.table(&[&names[x]], tuples);
            }
            _ => {
                let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
                let op = *ops.choose(&mut rng).expect("non-empty");
                let offset = rng.random_range(-1..=1i64);
                b = b.compare(&names[x], op, &names[y], offset);
            }
        }
    }
    b.build().expect("generated problems are well formed")
}
