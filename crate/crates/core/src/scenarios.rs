//! Relabelings between the four scenario bases and the invariance check built on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::measures::{full_report, MeasureReport};
use crate::states::{ScenarioBasis, SingleExcitationState};

/// A basis relabeling taking matrices written in `from` to matrices written in `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioMap {
    from: ScenarioBasis,
    to: ScenarioBasis,
    /// Basis index `k` of `from` becomes index `permutation[k]` of `to`.
    permutation: [usize; 4],
}

impl ScenarioMap {
    /// The relabeling that sends each role (site 1, site 2, both excited,
    /// both ground) of `from` to the same role in `to`.
    pub fn between(from: ScenarioBasis, to: ScenarioBasis) -> Self {
        let mut permutation = [0; 4];
        for (src, dst) in from.layout().roles().into_iter().zip(to.layout().roles()) {
            permutation[src] = dst;
        }
        Self {
            from,
            to,
            permutation,
        }
    }

    /// Checks that `permutation` is a bijection sending the two
    /// single-excitation states of `from` onto those of `to`.
    pub fn with_permutation(
        from: ScenarioBasis,
        to: ScenarioBasis,
        permutation: [usize; 4],
    ) -> Result<Self> {
        let mut seen = [false; 4];
        for &p in &permutation {
            if p >= 4 || seen[p] {
                return Err(Error::InvalidMap(format!(
                    "{permutation:?} is not a bijection on 0..4"
                )));
            }
            seen[p] = true;
        }
        let (fl, tl) = (from.layout(), to.layout());
        let targets = [permutation[fl.site1], permutation[fl.site2]];
        for t in targets {
            if t != tl.site1 && t != tl.site2 {
                return Err(Error::InvalidMap(format!(
                    "{from} single-excitation state sent to {} of {to}",
                    to.labels()[t]
                )));
            }
        }
        Ok(Self {
            from,
            to,
            permutation,
        })
    }

    pub fn from(&self) -> ScenarioBasis {
        self.from
    }

    pub fn to(&self) -> ScenarioBasis {
        self.to
    }

    pub fn permutation(&self) -> [usize; 4] {
        self.permutation
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &ScenarioMap) -> Result<ScenarioMap> {
        if self.to != next.from {
            return Err(Error::InvalidMap(format!(
                "cannot follow a map into {} with a map from {}",
                self.to, next.from
            )));
        }
        let mut permutation = [0; 4];
        for (k, slot) in permutation.iter_mut().enumerate() {
            *slot = next.permutation[self.permutation[k]];
        }
        Ok(ScenarioMap {
            from: self.from,
            to: next.to,
            permutation,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.permutation == [0, 1, 2, 3]
    }
}

/// Rewrites `rho` in the target basis of `map` (conjugation by the permutation matrix).
pub fn map_scenario(rho: &ComplexMatrix, map: &ScenarioMap) -> Result<ComplexMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    Ok(rho.permute(&map.permutation))
}

/// Per-measure comparison of one state's reports across all scenario bases.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub reports: Vec<(ScenarioBasis, MeasureReport)>,
    /// Largest pairwise difference for each report field.
    pub max_discrepancy: Vec<(&'static str, f64)>,
}

impl InvarianceReport {
    pub fn worst(&self) -> f64 {
        self.max_discrepancy
            .iter()
            .map(|(_, d)| *d)
            .fold(0.0, f64::max)
    }
}

fn discrepancy(a: f64, b: f64) -> f64 {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => 0.0,
        (false, false) => (a - b).abs(),
        _ => f64::INFINITY,
    }
}

/// Builds `state` in every scenario basis and compares the full reports.
pub fn verify_invariance(state: &SingleExcitationState) -> Result<InvarianceReport> {
    let reports = ScenarioBasis::ALL
        .iter()
        .map(|&b| full_report(state, b).map(|r| (b, r)))
        .collect::<Result<Vec<_>>>()?;
    let fields: Vec<_> = reports.iter().map(|(_, r)| r.fields()).collect();
    let max_discrepancy = (0..fields[0].len())
        .map(|k| {
            let mut worst: f64 = 0.0;
            for i in 0..fields.len() {
                for j in i + 1..fields.len() {
                    worst = worst.max(discrepancy(fields[i][k].1, fields[j][k].1));
                }
            }
            (fields[0][k].0, worst)
        })
        .collect();
    Ok(InvarianceReport {
        reports,
        max_discrepancy,
    })
}
