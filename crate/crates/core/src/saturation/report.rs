use std::io::Write;

use super::decompose::Decomposition;
use super::frequency::{ChainReport, FrequencySet};
use super::subspace::SaturationChain;
use crate::error::Result;

pub const LEVELS_CSV_HEADER: &str = "level,dimension,max_degree,frequencies";

/// One row per level; frequencies are `;`-separated canonical representatives.
pub fn write_levels_csv<W: Write>(mut w: W, chain: &SaturationChain) -> Result<()> {
    writeln!(w, "{LEVELS_CSV_HEADER}")?;
    for (j, level) in chain.levels.iter().enumerate() {
        let freqs: Vec<String> = level.frequencies().iter().map(|k| k.to_string()).collect();
        writeln!(w, "{j},{},{},\"{}\"", level.len(), level.max_degree(), freqs.join(";"))?;
    }
    Ok(())
}

/// Human-readable summary of a saturation analysis.
pub fn write_text_report<W: Write>(
    mut w: W,
    set: &FrequencySet,
    generator: bool,
    chains: &ChainReport,
    chain: &SaturationChain,
    decompositions: &[(String, Decomposition)],
) -> Result<()> {
    let vs: Vec<String> = set.vectors().iter().map(|k| k.to_string()).collect();
    writeln!(w, "frequency set (d = {}): {}", set.dim(), vs.join(" "))?;
    writeln!(w, "generator of Z^{}: {generator}", set.dim())?;
    writeln!(w, "chain condition (sigma = {}): {}", chains.sigma, chains.holds)?;
    for p in &chains.pairs {
        match &p.chain {
            Some(c) => {
                let c: Vec<String> = c.iter().map(|k| k.to_string()).collect();
                writeln!(w, "  {} -> {}: via {}", p.l, p.m, c.join(" "))?;
            }
            None => writeln!(w, "  {} -> {}: no chain", p.l, p.m)?,
        }
    }
    writeln!(w, "saturating: {}", generator && chains.holds)?;
    for (j, level) in chain.levels.iter().enumerate() {
        writeln!(
            w,
            "level {j}: dimension {}, max degree {}",
            level.len(),
            level.max_degree()
        )?;
    }
    for (name, dec) in decompositions {
        writeln!(
            w,
            "decomposition {name}: {} parts, residual {:.3e}",
            dec.parts.len(),
            dec.residual
        )?;
    }
    Ok(())
}
