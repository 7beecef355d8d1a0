//! Tab-separated reports. Every table starts with a header row; summary and
//! winner lines that do not fit the table are `#` comments after it.

use std::fmt::Write as _;

use sentlen_core::divergence::NoiseEstimate;
use sentlen_core::evidence::{ComparisonReport, Winner};
use sentlen_core::fit::FitError;
use sentlen_core::histogram::{IngestStats, LengthHistogram, SummaryStats};
use sentlen_core::mdl::MdlReport;
use sentlen_core::validation::{FitTable, ValidationReport};
use sentlen_core::SplitKind;

const NA: &str = "NA";

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// `size mean p999 max low_mass high_mass`, plus the mean over all records
/// read (before the length cutoff) and the skip tallies as a comment.
pub fn summary(s: &SummaryStats, h: &LengthHistogram, ingest: &IngestStats) -> String {
    let mut out = String::from("size\tmean\tp999\tmax\tlow_mass\thigh_mass\n");
    let _ = writeln!(
        out,
        "{}\t{:.4}\t{}\t{}\t{:.6}\t{:.6}",
        s.size, s.mean, s.p999, s.max, s.low_bin_mass, s.high_bin_mass
    );
    let before = ingest
        .mean_before_cutoff(h)
        .map_or(NA.to_string(), |m| format!("{m:.4}"));
    let _ = writeln!(
        out,
        "# cutoff={} mean_before_cutoff={before} skipped_long={} skipped_empty={}",
        h.cutoff(),
        ingest.skipped_long,
        ingest.skipped_empty
    );
    out
}

pub fn split_name(s: SplitKind) -> String {
    match s {
        SplitKind::FirstSecond => "first".into(),
        SplitKind::Random(seed) => format!("random:{seed}"),
    }
}

/// `delta split zero_overlap`
pub fn noise(n: &NoiseEstimate) -> String {
    format!(
        "delta\tsplit\tzero_overlap\n{:.6e}\t{}\t{}\n",
        n.delta,
        split_name(n.split_kind),
        yes_no(n.zero_overlap)
    )
}

/// One row per template: `model_id objective iters converged used_fallback
/// grad_norm`, or the error for templates that could not be fitted.
pub fn fits(table: &FitTable) -> String {
    let mut out =
        String::from("model_id\tobjective\titers\tconverged\tused_fallback\tgrad_norm\terror\n");
    for (s, r) in table {
        match r {
            Ok(f) => {
                let _ = writeln!(
                    out,
                    "{}\t{:.9e}\t{}\t{}\t{}\t{:.3e}\t",
                    s,
                    f.objective,
                    f.iters,
                    yes_no(f.converged),
                    yes_no(f.used_fallback),
                    f.grad_norm
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{s}\t{NA}\t{NA}\t{NA}\t{NA}\t{NA}\t{}", error_text(e));
            }
        }
    }
    out
}

fn error_text(e: &FitError) -> String {
    e.to_string().replace(['\t', '\n'], " ")
}

/// Winner id, with `*` when the model is not tolerable at the report's
/// measured tolerance (also for winners picked without tolerance).
fn winner_cell(r: &ComparisonReport, w: Option<&Winner>) -> String {
    let Some(w) = w else { return NA.into() };
    let tolerable = r
        .scores
        .iter()
        .find(|s| s.structure == w.structure)
        .is_some_and(|s| s.tolerable);
    if tolerable {
        w.structure.id()
    } else {
        format!("{}*", w.structure.id())
    }
}

/// `model_id d_prime gkl tolerable ln_vol ln_det_model ln_det_aux
/// total@{n}..`, one row per model in id order. The `total@inf` column holds
/// the limit of the score, `gKL_δ`; the winner at infinity is decided by the
/// lexicographic rule, not by that column.
pub fn comparison(r: &ComparisonReport) -> String {
    let mut out =
        String::from("model_id\td_prime\tgkl\ttolerable\tln_vol\tln_det_model\tln_det_aux");
    for n in &r.n_grid {
        let _ = write!(out, "\ttotal@{n}");
    }
    out.push('\n');
    for s in &r.scores {
        let det = s.ln_det_model.map_or(NA.to_string(), |d| format!("{d:.6}"));
        let _ = write!(
            out,
            "{}\t{}\t{:.6e}\t{}\t{:.6}\t{det}\t{:.6}",
            s.structure,
            s.d_prime,
            s.gkl,
            yes_no(s.tolerable),
            s.ln_vol(),
            s.ln_det_aux
        );
        for &n in &r.n_grid {
            let t = s.total(n).unwrap_or(s.fit_term);
            let _ = write!(out, "\t{t:.9e}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "# tolerance={:.6e}", r.tolerance.delta());
    for (i, n) in r.n_grid.iter().enumerate() {
        let _ = writeln!(
            out,
            "# winner n={n} with_tolerance={} without_tolerance={}",
            winner_cell(r, r.winners.get(i)),
            winner_cell(r, r.winners_without_tolerance.get(i)),
        );
    }
    out
}

/// `model_id mq nq tb pct_size`: bits per stored parameter for the model and
/// the naive description, the model's total bits and its size relative to
/// the naive one.
pub fn mdl(r: &MdlReport) -> String {
    let mut out = String::from("model_id\tmq\tnq\ttb\tpct_size\n");
    let nq = r.naive.map_or(NA.to_string(), |n| n.bits.to_string());
    for row in &r.rows {
        let mq = row.bits().map_or(NA.to_string(), |b| b.to_string());
        let tb = row.total_bits().map_or(NA.to_string(), |b| b.to_string());
        let pct = r
            .naive
            .as_ref()
            .and_then(|n| row.pct_size(n))
            .map_or(NA.to_string(), |p| format!("{p:.3}"));
        let _ = writeln!(out, "{}\t{mq}\t{nq}\t{tb}\t{pct}", row.structure);
    }
    let _ = writeln!(out, "# tolerance={:.6e}", r.tolerance.delta());
    if let Some(n) = r.naive {
        let _ = writeln!(
            out,
            "# naive bits={} params={} total={}",
            n.bits,
            n.params,
            n.total_bits()
        );
    }
    let _ = writeln!(
        out,
        "# winner {}",
        r.winner().map_or(NA.to_string(), |w| w.structure.id())
    );
    out
}

fn grid_row(out: &mut String, label: &str, r: &ComparisonReport, winners: &[Winner]) {
    out.push_str(label);
    for n in &r.n_grid {
        let _ = write!(
            out,
            "\t{}",
            winner_cell(r, winners.iter().find(|w| w.n == *n))
        );
    }
    out.push('\n');
}

/// Winners per sample size in the four settings (with and without
/// tolerance, with and without the true template); `*` marks a winner that
/// is not tolerable at the measured tolerance. Followed by the MDL winners and run facts.
pub fn validation(r: &ValidationReport) -> String {
    let mut out = String::from("setting");
    for n in &r.bayes.n_grid {
        let _ = write!(out, "\t{n}");
    }
    out.push('\n');
    let (all, without) = (&r.bayes, &r.bayes_without_true);
    grid_row(&mut out, "with tolerance", all, &all.winners);
    grid_row(
        &mut out,
        "w/o tolerance",
        all,
        &all.winners_without_tolerance,
    );
    grid_row(&mut out, "with tolerance, -true", without, &without.winners);
    grid_row(
        &mut out,
        "w/o tolerance, -true",
        without,
        &without.winners_without_tolerance,
    );
    let mdl_winner = |m: &MdlReport| m.winner().map_or(NA.to_string(), |w| w.structure.id());
    let _ = writeln!(out, "# true_model={}", r.truth.id());
    let _ = writeln!(
        out,
        "# samples={} rejected={}",
        r.histogram.size(),
        r.rejected
    );
    let _ = writeln!(
        out,
        "# noise={:.6e} split={}",
        r.noise.delta,
        split_name(r.noise.split_kind)
    );
    let _ = writeln!(
        out,
        "# mdl_winner={} mdl_winner_without_true={}",
        mdl_winner(&r.mdl),
        mdl_winner(&r.mdl_without_true)
    );
    let fitted = r.fitted().count();
    let converged = r.fitted().filter(|f| f.converged).count();
    let _ = writeln!(
        out,
        "# fitted={fitted} converged={converged} templates={}",
        r.fits.len()
    );
    out
}

/// `length count` rows.
pub fn lengths(h: &LengthHistogram) -> String {
    let mut out = String::from("length\tcount\n");
    for (x, c) in h.iter() {
        let _ = writeln!(out, "{x}\t{c}");
    }
    out
}
