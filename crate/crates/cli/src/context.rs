//! Excitation description files.
//!
//! ```json
//! { "holes": [[-0.4, 0.9]], "strings": {"2": [0.0]}, "twice_q": {"2": [0]} }
//! ```
//! `holes[j]` lists the hole rapidities of the (j+1)-th sea in increasing
//! spin order. `strings` maps a string length (its number of roots, 2r) to
//! the string centers. `twice_q` holds doubled quantum numbers 2Q for the
//! auxiliary equations; when present, the centers are solved for.

use std::collections::BTreeMap;

use betheforge::chain::ChainSpec;
use betheforge::scattering::{solve_aux_constraints, AuxQuantumNumbers};
use betheforge::thermo::ExcitationContext;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextFile {
    pub holes: Vec<Vec<f64>>,
    #[serde(default)]
    pub strings: BTreeMap<u32, Vec<f64>>,
    #[serde(default)]
    pub twice_q: Option<BTreeMap<u32, Vec<i64>>>,
}

pub fn parse(text: &str) -> Result<ContextFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(format!("context file: {e}")))
}

/// Builds the context and, when quantum numbers are given, solves the
/// auxiliary equations gap by gap.
pub fn build(spec: &ChainSpec, file: &ContextFile) -> Result<ExcitationContext, CliError> {
    let mut ctx = ExcitationContext::new(spec, file.holes.clone(), file.strings.clone())?;
    if let Some(q) = &file.twice_q {
        for j in 0..=spec.n_distinct() {
            let lo = spec.sbar(j).doubled;
            let hi = if j < spec.n_distinct() { spec.sbar(j + 1).doubled } else { u32::MAX };
            let gap: AuxQuantumNumbers = q.iter().filter(|(&m, _)| m > lo && m < hi).map(|(&m, v)| (m, v.clone())).collect();
            let has_strings = ctx.new_strings.keys().any(|&m| m > lo && m < hi);
            if has_strings || !gap.is_empty() {
                ctx = solve_aux_constraints(spec, &ctx, j, &gap)?;
            }
        }
    }
    Ok(ctx)
}
