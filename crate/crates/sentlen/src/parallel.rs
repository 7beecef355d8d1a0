//! Multi-threaded versions of the per-model loops. Results come back in input
//! order, so output never depends on scheduling.

use rayon::prelude::*;
use sentlen_core::divergence::Tolerance;
use sentlen_core::evidence::{self, EvidenceError, EvidenceScore};
use sentlen_core::fit::{fit, FitConfig};
use sentlen_core::histogram::EmpiricalDistribution;
use sentlen_core::mdl::{self, MdlReport, MdlRow};
use sentlen_core::validation::FitTable;
use sentlen_core::walk::{MixtureModel, ModelStructure};

pub fn fit_templates(
    data: &EmpiricalDistribution,
    templates: &[ModelStructure],
    cfg: &FitConfig,
) -> FitTable {
    templates
        .par_iter()
        .map(|s| (s.clone(), fit(data, s, cfg)))
        .collect()
}

pub fn score_all(
    data: &EmpiricalDistribution,
    models: &[MixtureModel],
    tol: Tolerance,
) -> Result<Vec<EvidenceScore>, EvidenceError> {
    models
        .par_iter()
        .map(|m| evidence::score(data, m, tol))
        .collect()
}

pub fn mdl_compare(
    data: &EmpiricalDistribution,
    models: &[MixtureModel],
    tol: Tolerance,
) -> MdlReport {
    let (naive, rows) = rayon::join(
        || mdl::naive_bits(data, tol),
        || {
            models
                .par_iter()
                .map(|m| MdlRow {
                    structure: m.structure(),
                    quantized: mdl::min_bits(data, m, tol),
                })
                .collect()
        },
    );
    mdl::assemble(rows, naive, tol)
}
