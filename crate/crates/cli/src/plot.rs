//! Score histograms with the decision threshold, as SVG text.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

const BINS: usize = 30;
const W: f64 = 640.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;

#[derive(Debug, Default, PartialEq)]
pub struct ScoreTable {
    pub member: Vec<f64>,
    pub non_member: Vec<f64>,
    pub tau: Vec<f64>,
}

/// Parses `seed,set,score` rows; `set` is member, non-member or tau. Errors name
/// the offending line of the file.
pub fn read_scores(path: &Path, only_seed: Option<u64>) -> Result<ScoreTable> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["seed", "set", "score"] {
        bail!("{}: expected header seed,set,score", path.display());
    }
    let mut t = ScoreTable::default();
    for record in reader.records() {
        let record = record.map_err(|e| anyhow!("{}: {e}", path.display()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |what: &str| anyhow!("{}: row {line}: {what}", path.display());
        if record.len() != 3 {
            return Err(bad("expected 3 fields"));
        }
        let seed: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| bad("seed is not an integer"))?;
        let score: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| bad("score is not a number"))?;
        if !score.is_finite() {
            return Err(bad("score is not finite"));
        }
        if only_seed.is_some_and(|s| s != seed) {
            continue;
        }
        match record[1].trim() {
            "member" => t.member.push(score),
            "non-member" => t.non_member.push(score),
            "tau" => t.tau.push(score),
            other => return Err(bad(&format!("unknown set `{other}`"))),
        }
    }
    if t.member.is_empty() && t.non_member.is_empty() {
        bail!("{}: no scores to plot", path.display());
    }
    Ok(t)
}

fn counts(v: &[f64], lo: f64, width: f64) -> [usize; BINS] {
    let mut c = [0; BINS];
    for &x in v {
        let b = (((x - lo) / width) as usize).min(BINS - 1);
        c[b] += 1;
    }
    c
}

/// Overlaid member / non-member histograms and one dashed marker per threshold.
pub fn histogram_svg(t: &ScoreTable) -> String {
    let all = t.member.iter().chain(&t.non_member).chain(&t.tau);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in all {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / BINS as f64;
    let cm = counts(&t.member, lo, width);
    let cn = counts(&t.non_member, lo, width);
    let peak = cm.iter().chain(&cn).copied().max().unwrap_or(1).max(1) as f64;
    let plot_w = W - 2.0 * MARGIN;
    let plot_h = H - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - lo) / (hi - lo) * plot_w;
    let bar_w = plot_w / BINS as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    for (c, colour, name) in [(&cm, "#1f77b4", "member"), (&cn, "#d62728", "non-member")] {
        let _ = writeln!(
            s,
            r#"<g class="{name}" fill="{colour}" fill-opacity="0.5">"#
        );
        for (i, &n) in c.iter().enumerate().filter(|(_, &n)| n > 0) {
            let h = n as f64 / peak * plot_h;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                MARGIN + i as f64 * bar_w,
                H - MARGIN - h,
                bar_w,
                h
            );
        }
        let _ = writeln!(s, "</g>");
    }
    for &tau in &t.tau {
        let x = sx(tau);
        let _ = writeln!(
            s,
            r##"<line class="tau" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000" stroke-dasharray="4 3"/>"##,
            MARGIN - 8.0,
            H - MARGIN
        );
    }
    if let Some(&tau) = t.tau.first() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">τ = {tau:.3}</text>"#,
            sx(tau) + 4.0,
            MARGIN - 10.0
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="#333"/>"##,
        H - MARGIN,
        W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{:.2}">{lo:.3}</text>"#,
        H - MARGIN + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{hi:.3}</text>"#,
        W - MARGIN,
        H - MARGIN + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">minimum distance α (km)</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r##"<text x="{:.2}" y="20" fill="#1f77b4">member (n = {})</text><text x="{:.2}" y="20" fill="#d62728">non-member (n = {})</text>"##,
        MARGIN,
        t.member.len(),
        MARGIN + 160.0,
        t.non_member.len()
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn histogram_has_a_tau_marker_and_is_deterministic() {
        let f = csv("seed,set,score\n0,member,0\n0,member,0.1\n0,non-member,2\n0,non-member,2.5\n0,tau,1.15\n");
        let t = read_scores(f.path(), None).unwrap();
        assert_eq!(t.tau, vec![1.15]);
        let svg = histogram_svg(&t);
        assert_eq!(svg.matches(r#"class="tau""#).count(), 1);
        assert!(svg.contains("τ = 1.150"));
        assert_eq!(svg, histogram_svg(&read_scores(f.path(), None).unwrap()));
    }

    #[test]
    fn malformed_rows_are_reported_with_their_line() {
        let f = csv("seed,set,score\n0,member,0\n0,member,abc\n");
        let e = read_scores(f.path(), None).unwrap_err().to_string();
        assert!(e.contains("row 3"), "{e}");
        let f = csv("seed,set,score\n0,member,0\n0,other,1\n");
        assert!(read_scores(f.path(), None)
            .unwrap_err()
            .to_string()
            .contains("row 3"));
        let f = csv("a,b\n1,2\n");
        assert!(read_scores(f.path(), None).is_err());
    }

    #[test]
    fn seed_filter() {
        let f = csv("seed,set,score\n0,member,0\n1,member,5\n1,tau,3\n");
        let t = read_scores(f.path(), Some(1)).unwrap();
        assert_eq!(t.member, vec![5.0]);
        assert_eq!(t.tau, vec![3.0]);
    }
}
