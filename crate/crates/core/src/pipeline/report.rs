use std::fmt::Write;

use crate::metrics::{round2, RepairScores};
use crate::select::SelectionManifest;

const PREVIEW: usize = 20;

pub fn render_manifest_human(m: &SelectionManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "strategy        {}", m.strategy);
    let _ = writeln!(out, "alpha           {}", m.alpha);
    if let Some(seed) = m.seed {
        let _ = writeln!(out, "seed            {seed}");
    }
    if let Some(f) = m.boundary_fraction {
        let _ = writeln!(out, "boundary share  {f}");
    }
    let _ = writeln!(
        out,
        "selected        {} of {} (target {})",
        m.actual_size, m.population, m.target_size
    );
    if let Some(per) = &m.per_cluster {
        let _ = writeln!(out, "clusters        {}", per.len());
        for (j, members) in per {
            let _ = writeln!(out, "  cluster {j:>3}   {} selected", members.len());
        }
    }
    let shown: Vec<String> = m.selected.iter().take(PREVIEW).map(|i| i.to_string()).collect();
    let more = m.selected.len().saturating_sub(PREVIEW);
    let _ = write!(out, "indices         {}", shown.join(" "));
    if more > 0 {
        let _ = write!(out, " ... (+{more})");
    }
    out.push('\n');
    if let Some(d) = &m.provenance.embedding_sha256 {
        let _ = writeln!(out, "embeddings      sha256:{d}");
    }
    if let Some(d) = &m.provenance.scores_sha256 {
        let _ = writeln!(out, "scores          sha256:{d}");
    }
    out
}

pub fn render_scores_human(scores: &[RepairScores]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>9} {:>9} {:>9} {:>7} {:>7}",
        "label", "RPS", "RES", "OPS", "alpha", "margin"
    );
    for s in scores {
        let margin = match s.margin_ok {
            Some(true) => "ok",
            Some(false) => "fail",
            None => "-",
        };
        let _ = writeln!(
            out,
            "{:<16} {:>9.2} {:>9.2} {:>9.2} {:>7} {:>7}",
            s.label,
            round2(s.rps),
            round2(s.res),
            round2(s.ops),
            s.alpha,
            margin
        );
    }
    out
}
