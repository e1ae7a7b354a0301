//! MAX/MEAN neighbourhood aggregators and the worked distinguishability
//! cases for negative-sample aggregation.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-wise maximum over a non-empty multiset of vectors.
pub fn aggregate_max(values: &[ArrayView1<f64>]) -> Result<Array1<f64>> {
    let (first, rest) = values.split_first().ok_or(Error::Empty("aggregator input"))?;
    let mut out = first.to_owned();
    for v in rest {
        check_len(&out, v)?;
        out.zip_mut_with(v, |a, &b| *a = a.max(b));
    }
    Ok(out)
}

/// Element-wise arithmetic mean over a non-empty multiset of vectors.
pub fn aggregate_mean(values: &[ArrayView1<f64>]) -> Result<Array1<f64>> {
    let (first, rest) = values.split_first().ok_or(Error::Empty("aggregator input"))?;
    let mut out = first.to_owned();
    for v in rest {
        check_len(&out, v)?;
        out += v;
    }
    Ok(out / values.len() as f64)
}

fn check_len(a: &Array1<f64>, b: &ArrayView1<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot aggregate vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregator {
    Max,
    Mean,
}

fn aggregate_scalars(agg: Aggregator, xs: &[f64]) -> f64 {
    let vs: Vec<Array1<f64>> = xs.iter().map(|&x| Array1::from_elem(1, x)).collect();
    let views: Vec<ArrayView1<f64>> = vs.iter().map(|v| v.view()).collect();
    let out = match agg {
        Aggregator::Max => aggregate_max(&views),
        Aggregator::Mean => aggregate_mean(&views),
    };
    out.expect("case multisets are non-empty")[0]
}

/// One side of a comparison: `agg(neighbours) − μ · agg(negatives)`, or the
/// bare aggregate when there are no negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub neighbours: Vec<f64>,
    pub negatives: Option<Vec<f64>>,
}

impl Structure {
    fn plain(neighbours: &[f64]) -> Self {
        Self {
            neighbours: neighbours.to_vec(),
            negatives: None,
        }
    }

    fn with_negatives(neighbours: &[f64], negatives: &[f64]) -> Self {
        Self {
            neighbours: neighbours.to_vec(),
            negatives: Some(negatives.to_vec()),
        }
    }

    pub fn value(&self, agg: Aggregator, mu: f64) -> f64 {
        let base = aggregate_scalars(agg, &self.neighbours);
        match &self.negatives {
            Some(n) => base - mu * aggregate_scalars(agg, n),
            None => base,
        }
    }
}

/// Expected relation between the two structures' outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equal,
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseCheck {
    pub id: String,
    pub aggregator: Aggregator,
    pub mu: f64,
    pub v: f64,
    pub v_prime: f64,
    pub expected: Relation,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpressivityReport {
    pub checks: Vec<CaseCheck>,
}

impl ExpressivityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// μ values probed for every check; 1 is where the collapse case bites.
pub const MU_GRID: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 1.5];

struct Case {
    id: &'static str,
    aggregator: Aggregator,
    v: Structure,
    v_prime: Structure,
    /// Relation at each μ.
    expected: fn(f64) -> Relation,
}

fn always(r: Relation) -> fn(f64) -> Relation {
    match r {
        Relation::Equal => |_| Relation::Equal,
        Relation::Distinct => |_| Relation::Distinct,
    }
}

fn cases() -> Vec<Case> {
    use Aggregator::{Max, Mean};
    use Relation::{Distinct, Equal};
    let s = Structure::plain;
    let n = Structure::with_negatives;
    vec![
        // Single layer, first pair of structures: MAX alone cannot tell them apart.
        Case { id: "single-layer-a/max", aggregator: Max, v: s(&[2.0, 2.0, 1.0]), v_prime: s(&[2.0, 1.0]), expected: always(Equal) },
        Case {
            id: "single-layer-a/max-negatives",
            aggregator: Max,
            v: n(&[2.0, 2.0, 1.0], &[2.0, 2.0, 0.0]),
            v_prime: n(&[2.0, 1.0], &[0.0, 1.0]),
            expected: always(Distinct),
        },
        // Single layer, second pair: both MAX and MEAN fail without negatives.
        Case { id: "single-layer-b/max", aggregator: Max, v: s(&[1.0, 1.0, 2.0, 2.0]), v_prime: s(&[2.0, 1.0]), expected: always(Equal) },
        Case { id: "single-layer-b/mean", aggregator: Mean, v: s(&[1.0, 1.0, 2.0, 2.0]), v_prime: s(&[1.0, 2.0]), expected: always(Equal) },
        Case {
            id: "single-layer-b/max-negatives",
            aggregator: Max,
            v: n(&[1.0, 1.0, 2.0, 2.0], &[1.0, 1.0, 2.0, 0.0]),
            v_prime: n(&[2.0, 1.0], &[0.0, 1.0]),
            expected: always(Distinct),
        },
        Case {
            id: "single-layer-b/mean-negatives",
            aggregator: Mean,
            v: n(&[1.0, 1.0, 2.0, 2.0], &[1.0, 1.0, 0.0, 2.0]),
            v_prime: n(&[1.0, 2.0], &[0.0, 1.0]),
            expected: always(Distinct),
        },
        // Two layers: the earlier layer's negatives do not help ...
        Case {
            id: "multi-layer/earlier-max",
            aggregator: Max,
            v: n(&[1.0, 1.0, 2.0, 2.0], &[1.0, 1.0, 0.0, 2.0]),
            v_prime: n(&[1.0, 2.0], &[0.0, 2.0]),
            expected: always(Equal),
        },
        Case {
            id: "multi-layer/earlier-mean",
            aggregator: Mean,
            v: n(&[1.0, 1.0, 2.0, 2.0], &[1.0, 1.0, 0.0, 2.0]),
            v_prime: n(&[1.0, 2.0], &[0.0, 2.0]),
            expected: always(Equal),
        },
        // ... but the next layer's different samples do.
        Case {
            id: "multi-layer/next-max",
            aggregator: Max,
            v: n(&[1.0, 1.0, 2.0, 2.0], &[1.0, 0.0, 2.0, 2.0]),
            v_prime: n(&[1.0, 2.0], &[1.0, 0.0]),
            expected: always(Distinct),
        },
        Case {
            id: "multi-layer/next-mean",
            aggregator: Mean,
            v: n(&[1.0, 1.0, 2.0, 2.0], &[1.0, 0.0, 2.0, 2.0]),
            v_prime: n(&[1.0, 2.0], &[1.0, 0.0]),
            expected: always(Distinct),
        },
        // Distinguishable structures that negatives can collapse, but only at μ = 1.
        Case { id: "collapse/max-plain", aggregator: Max, v: s(&[1.0, 1.0, 2.0, 3.0]), v_prime: s(&[1.0, 2.0]), expected: always(Distinct) },
        Case { id: "collapse/mean-plain", aggregator: Mean, v: s(&[1.0, 1.0, 2.0, 3.0]), v_prime: s(&[1.0, 2.0]), expected: always(Distinct) },
        Case {
            id: "collapse/mean-negatives",
            aggregator: Mean,
            v: n(&[1.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 0.0, 3.0]),
            v_prime: n(&[1.0, 2.0], &[0.0, 3.0]),
            expected: |mu| if mu == 1.0 { Equal } else { Distinct },
        },
        Case {
            id: "collapse/mean-next-layer",
            aggregator: Mean,
            v: n(&[1.0, 1.0, 2.0, 3.0], &[1.0, 0.0, 2.0, 2.0]),
            v_prime: n(&[1.0, 2.0], &[0.0, 1.0]),
            expected: always(Distinct),
        },
    ]
}

/// Evaluate every worked case at every μ in [`MU_GRID`]. Values are small
/// dyadic rationals, so equality is tested exactly.
pub fn run_expressivity_cases() -> ExpressivityReport {
    let mut report = ExpressivityReport::default();
    for case in cases() {
        for mu in MU_GRID {
            let v = case.v.value(case.aggregator, mu);
            let v_prime = case.v_prime.value(case.aggregator, mu);
            let expected = (case.expected)(mu);
            let passed = match expected {
                Relation::Equal => v == v_prime,
                Relation::Distinct => v != v_prime,
            };
            report.checks.push(CaseCheck {
                id: case.id.to_string(),
                aggregator: case.aggregator,
                mu,
                v,
                v_prime,
                expected,
                passed,
            });
        }
    }
    report
}
