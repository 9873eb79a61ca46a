use connprof_core::dialog::format_minutes_seconds;
use connprof_service::{ComparisonView, ReportView};

fn render(header: &[String], rows: &[(String, Vec<String>)]) -> String {
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| rows.iter().map(|(_, c)| c[i].len()).chain([h.len()]).max().unwrap_or(0))
        .collect();
    let mut out = format!("{:label_w$}", "");
    for (h, w) in header.iter().zip(&widths) {
        out.push_str(&format!("  {h:>w$}"));
    }
    out.push('\n');
    for (label, cells) in rows {
        out.push_str(&format!("{label:label_w$}"));
        for (c, w) in cells.iter().zip(&widths) {
            out.push_str(&format!("  {c:>w$}"));
        }
        out.push('\n');
    }
    out
}

/// One column per report; rows mean(cat), mean(con), time (m:s), backtracks.
pub fn reports(views: &[ReportView], precision: usize) -> String {
    let header: Vec<String> = views.iter().map(|v| v.label.clone()).collect();
    let num = |x: f64| format!("{x:.precision$}");
    let rows = vec![
        ("mean(cat)".to_string(), views.iter().map(|v| num(v.mean_cat)).collect()),
        ("mean(con)".to_string(), views.iter().map(|v| num(v.mean_con)).collect()),
        (
            "time (m:s)".to_string(),
            views
                .iter()
                .map(|v| v.mean_time_ms.map_or("-".into(), format_minutes_seconds))
                .collect(),
        ),
        (
            "backtracks".to_string(),
            views
                .iter()
                .map(|v| v.mean_backtracks.map_or("-".into(), |b| format!("{b:.1}")))
                .collect(),
        ),
    ];
    render(&header, &rows)
}

pub fn comparison(c: &ComparisonView, precision: usize) -> String {
    let header = vec!["mode A".to_string(), "mode B".to_string(), "agree".to_string()];
    let rows: Vec<(String, Vec<String>)> = c
        .pairs
        .iter()
        .map(|p| {
            (
                format!("pair {}", p.pair_index),
                vec![
                    p.mode_a.clone(),
                    p.mode_b.clone(),
                    if p.agree { "yes" } else { "no" }.to_string(),
                ],
            )
        })
        .collect();
    format!(
        "mode agreement ({}): {}/{} = {:.precision$}\n{}\npooled {}\n{}",
        c.granularity,
        c.pairs_agreeing,
        c.pairs.len(),
        c.agreement,
        render(&header, &rows),
        c.pooled.label,
        reports(std::slice::from_ref(&c.pooled), precision)
    )
}
