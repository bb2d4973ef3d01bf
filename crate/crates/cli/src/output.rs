use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Write through a temporary file in the target directory and rename it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents).with_context(|| format!("writing {}", path.display()))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("moving output into {}", path.display()))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Files to be written together once every one of them has been rendered.
#[derive(Default)]
pub struct Pending {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Pending {
    pub fn add(&mut self, path: PathBuf, contents: impl Into<Vec<u8>>) {
        self.files.push((path, contents.into()));
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for (path, contents) in self.files {
            write_atomic(&path, &contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub series: usize,
}

/// Valence/arousal scatter on the unit box with one color per series.
pub fn va_scatter_svg(title: &str, points: &[ScatterPoint], legend: &[(String, String)]) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 50.0;
    const LEGEND_W: f64 = 190.0;
    let to_px = |v: f64| PAD + (v + 1.0) / 2.0 * (SIZE - 2.0 * PAD);
    let to_py = |a: f64| SIZE - PAD - (a + 1.0) / 2.0 * (SIZE - 2.0 * PAD);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{SIZE}" viewBox="0 0 {w} {SIZE}" font-family="sans-serif" font-size="12">"#,
        w = SIZE + LEGEND_W
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, SIZE / 2.0, escape(title));
    let (lo, hi) = (to_px(-1.0), to_px(1.0));
    let _ = writeln!(out, r#"<rect x="{lo}" y="{lo}" width="{}" height="{}" fill="none" stroke="black"/>"#, hi - lo, hi - lo);
    let mid = to_px(0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{lo}" y1="{mid}" x2="{hi}" y2="{mid}" stroke="#888888"/><line x1="{mid}" y1="{lo}" x2="{mid}" y2="{hi}" stroke="#888888"/>"##
    );
    let _ = writeln!(out, r#"<text x="{mid}" y="{}" text-anchor="middle">valence</text>"#, SIZE - 14.0);
    let _ = writeln!(out, r#"<text x="16" y="{mid}" transform="rotate(-90 16 {mid})" text-anchor="middle">arousal</text>"#);
    for p in points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.8"/>"#,
            to_px(p.x),
            to_py(p.y),
            legend[p.series].1
        );
    }
    for (i, (label, color)) in legend.iter().enumerate() {
        let y = PAD + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<g class="legend"><rect x="{}" y="{y}" width="12" height="12" fill="{color}"/><text x="{}" y="{}">{}</text></g>"#,
            SIZE + 4.0,
            SIZE + 22.0,
            y + 10.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
