//! One module per subcommand.

use std::path::Path;

use critspec::structure_factors::SampleModel;

use crate::config::Loaded;
use crate::table::{fmt_num, provenance};

pub mod collapse;
pub mod decohere;
pub mod estimate;
pub mod oracle;
pub mod spectrum;
pub mod sweep;

pub struct Context<'a> {
    pub loaded: &'a Loaded,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

impl Context<'_> {
    /// Provenance block for a command's output.
    pub fn header(&self, command: &str) -> Vec<String> {
        let mut h = provenance(command, self.seed, &self.loaded.compact);
        let t = self.loaded.config.tolerances;
        h.push(format!("tolerances: q {} omega {}", fmt_num(t.q), fmt_num(t.omega)));
        if let Some(SampleModel::TfimQc { .. }) = self.loaded.config.model {
            h.push("note: tfim_qc results omit the order-one universal prefactors".into());
        }
        h
    }
}
