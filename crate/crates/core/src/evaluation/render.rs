use std::fmt::Write;

use super::{BenchmarkReport, FeatureSetKind};
use crate::dataset::Target;

fn target_title(t: Target) -> &'static str {
    match t {
        Target::Valence => "Valence",
        Target::Arousal => "Arousal",
    }
}

/// Markdown table with one row per benchmark row, scores at 3 decimals.
pub fn to_markdown(report: &BenchmarkReport) -> String {
    let mut out = String::from("| Model | Type | Feature Set | Use Features | Score | STD |\n");
    out.push_str("|---|---|---|---:|---:|---:|\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.3} | {:.3} |",
            row.model.label(),
            target_title(row.target),
            row.feature_set,
            row.n_features,
            row.score,
            row.std
        );
    }
    out
}

/// Per-fold scores, one line per (row, fold). Values are written at full
/// round-trip precision so the summary columns can be recomputed.
pub fn fold_scores_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from("model,target,feature_set,n_features,fold,score,loss\n");
    for row in &report.rows {
        for (fold, (score, loss)) in row.cv.fold_scores.iter().zip(&row.cv.fold_losses).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.model.as_str(),
                row.target,
                row.feature_set,
                row.n_features,
                fold,
                score,
                loss
            );
        }
    }
    out
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const CFS_COLOR: &str = "#4c72b0";
const SFS_COLOR: &str = "#dd8452";
const LINE_COLORS: [&str; 8] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Y-axis range covering `values` and zero, padded to a tenth.
fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((0.0_f64, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let lo = (lo * 10.0).floor() / 10.0;
    let hi = ((hi * 10.0).ceil() / 10.0).max(lo + 0.1);
    (lo, hi)
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn y_axis(out: &mut String, lo: f64, hi: f64, label: &str) -> impl Fn(f64) -> f64 {
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let to_y = move |v: f64| MARGIN + plot_h * (hi - v) / (hi - lo);
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN
    );
    let steps = ((hi - lo) / 0.1).round() as i64;
    let stride = (steps / 10).max(1);
    for i in (0..=steps).step_by(stride as usize) {
        let v = lo + i as f64 * 0.1;
        let y = to_y(v);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#dddddd"/><text x="{}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            MARGIN,
            WIDTH - MARGIN,
            MARGIN - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(label)
    );
    to_y
}

/// Grouped bar chart of mean scores, CFS and SFS side by side per cell.
pub fn score_bars_svg(report: &BenchmarkReport) -> String {
    let mut cells: Vec<_> = Vec::new();
    for row in &report.rows {
        if !cells.contains(&(row.model, row.target)) {
            cells.push((row.model, row.target));
        }
    }
    let mut out = String::new();
    svg_open(&mut out, "Mean R2 by feature set");
    let (lo, hi) = value_range(report.rows.iter().map(|r| r.score));
    let to_y = y_axis(&mut out, lo, hi, "R2");
    let group_w = (WIDTH - 2.0 * MARGIN) / cells.len().max(1) as f64;
    let bar_w = group_w * 0.35;
    for (g, &(model, target)) in cells.iter().enumerate() {
        let x0 = MARGIN + g as f64 * group_w + group_w * 0.15;
        for (i, (set, color)) in [(FeatureSetKind::Complete, CFS_COLOR), (FeatureSetKind::Selected, SFS_COLOR)].into_iter().enumerate() {
            let Some(row) = report.row(model, target, set) else { continue };
            let (top, bottom) = (to_y(row.score.max(0.0)), to_y(row.score.min(0.0)));
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{top:.1}" width="{bar_w:.1}" height="{:.1}" fill="{color}"><title>{} {} {}: {:.3}</title></rect>"#,
                x0 + i as f64 * bar_w,
                (bottom - top).max(0.5),
                model.label(),
                target,
                set,
                row.score
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{} {}</text>"#,
            x0 + bar_w,
            HEIGHT - MARGIN + 18.0,
            model.label(),
            target_title(target)
        );
    }
    let zero = to_y(0.0);
    let _ = writeln!(out, r#"<line x1="{MARGIN}" y1="{zero:.1}" x2="{}" y2="{zero:.1}" stroke="black"/>"#, WIDTH - MARGIN);
    for (i, (name, color)) in [("CFS", CFS_COLOR), ("SFS", SFS_COLOR)].into_iter().enumerate() {
        let x = WIDTH - MARGIN - 120.0 + i as f64 * 60.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="34" width="12" height="12" fill="{color}"/><text x="{}" y="45">{name}</text>"#,
            x + 16.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Line chart of held-out R2 per fold, one series per benchmark row.
pub fn fold_scores_svg(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    svg_open(&mut out, "R2 per fold");
    let (lo, hi) = value_range(report.rows.iter().flat_map(|r| r.cv.fold_scores.iter().copied()));
    let to_y = y_axis(&mut out, lo, hi, "R2");
    let k = report.rows.iter().map(|r| r.cv.fold_scores.len()).max().unwrap_or(1);
    let span = (WIDTH - 2.0 * MARGIN - 140.0) / (k.max(2) - 1) as f64;
    let to_x = |fold: usize| MARGIN + 10.0 + fold as f64 * span;
    for fold in 0..k {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            to_x(fold),
            HEIGHT - MARGIN + 18.0,
            fold + 1
        );
    }
    for (i, row) in report.rows.iter().enumerate() {
        let color = LINE_COLORS[i % LINE_COLORS.len()];
        let points: Vec<String> = row
            .cv
            .fold_scores
            .iter()
            .enumerate()
            .map(|(f, &s)| format!("{:.1},{:.1}", to_x(f), to_y(s)))
            .collect();
        let label = format!("{} {} {}", row.model.label(), target_title(row.target), row.feature_set);
        let dash = if row.feature_set == FeatureSetKind::Selected { "" } else { r#" stroke-dasharray="5,3""# };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}><title>{}</title></polyline>"#,
            points.join(" "),
            escape(&label)
        );
        let ly = MARGIN + 16.0 * i as f64;
        let lx = WIDTH - MARGIN - 120.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">fold</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    out.push_str("</svg>\n");
    out
}
