//! CSV input and output. Numbers are written with 17 significant digits;
//! provenance goes into leading `#` comment lines, never into the body.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::harness::MCReport;
use crate::sim::LssPath;
use crate::variation::VariationSeries;

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn write_comments<W: Write>(w: &mut W, comments: &[(&str, String)]) -> Result<()> {
    for (key, value) in comments {
        writeln!(w, "# {key}: {}", value.replace('\n', " "))?;
    }
    Ok(())
}

fn table<W: Write>(mut w: W, comments: &[(&str, String)], header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    write_comments(&mut w, comments)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_path_csv<W: Write>(w: W, path: &LssPath) -> Result<()> {
    let p = &path.provenance;
    let comments = [
        ("kernel", format!("{:?}", p.kernel)),
        ("sigma", p.sigma.clone()),
        ("driver", p.driver.clone()),
        ("burn_in", p.burn_in.to_string()),
        ("fine_factor", p.fine_factor.map(|f| f.to_string()).unwrap_or_else(|| "exact".into())),
        ("seed", p.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())),
    ];
    let rows = path.eval_times.iter().zip(&path.values).map(|(&t, &x)| vec![fmt_f64(t), fmt_f64(x)]).collect();
    table(w, &comments, &["t", "x"], rows)
}

/// Reads a `t,x` table, skipping `#` comments.
pub fn read_path_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
    };
    let (ti, xi) = (col("t")?, col("x")?);
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let get = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("row {}: bad number in column {i}", line + 1)))
        };
        times.push(get(ti)?);
        values.push(get(xi)?);
    }
    Ok((times, values))
}

pub fn write_variation_csv<W: Write>(w: W, series: &VariationSeries) -> Result<()> {
    let comments = [
        ("n", series.n.to_string()),
        ("p", series.p.to_string()),
        ("k", series.k.to_string()),
        ("normalization", format!("{:?}", series.normalization)),
    ];
    let normalized = series.normalized_values();
    let rows = series
        .t_grid
        .iter()
        .zip(&series.values)
        .zip(&normalized)
        .map(|((&t, &v), &nv)| vec![fmt_f64(t), fmt_f64(v), fmt_f64(nv)])
        .collect();
    table(w, &comments, &["t", "v", "normalized_v"], rows)
}

pub fn write_estimate_csv<W: Write>(w: W, report: &EstimateReport, h_ratio: Option<f64>) -> Result<()> {
    let mut rows = vec![
        vec!["alpha_hat".into(), fmt_f64(report.alpha_hat)],
        vec!["beta_hat".into(), fmt_f64(report.beta_hat)],
        vec!["h_hat".into(), fmt_f64(report.h_hat)],
        vec!["objective".into(), fmt_f64(report.objective)],
    ];
    if let Some(h) = h_ratio {
        rows.push(vec!["h_hat_ratio".into(), fmt_f64(h)]);
    }
    rows.extend(report.residuals.iter().map(|&(p, r)| vec![format!("residual_p={p}"), fmt_f64(r)]));
    table(w, &[], &["quantity", "value"], rows)
}

fn report_comments(report: &MCReport) -> Vec<(&'static str, String)> {
    vec![
        ("mode", report.mode.to_string()),
        ("config_hash", report.config_hash.clone()),
        ("master_seed", report.master_seed.to_string()),
        ("degenerate", report.degenerate.to_string()),
    ]
}

/// Summary rows of a Monte Carlo report.
pub fn write_report_csv<W: Write>(w: W, report: &MCReport) -> Result<()> {
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.statistic.clone(),
                fmt_f64(r.mean),
                fmt_f64(r.median),
                fmt_f64(r.q05),
                fmt_f64(r.q95),
                fmt_opt(r.target),
                fmt_opt(r.rel_error),
            ]
        })
        .collect();
    table(w, &report_comments(report), &["n", "statistic", "mean", "median", "q05", "q95", "target", "rel_error"], rows)
}

/// Raw per-replication values of a Monte Carlo report.
pub fn write_samples_csv<W: Write>(w: W, report: &MCReport) -> Result<()> {
    let rows = report
        .samples
        .iter()
        .map(|s| {
            vec![s.n.to_string(), s.replication.to_string(), s.statistic.clone(), fmt_f64(s.value), fmt_f64(s.target)]
        })
        .collect();
    table(w, &report_comments(report), &["n", "replication", "statistic", "value", "target"], rows)
}

/// Two-column `name,value` table.
pub fn write_constants_csv<W: Write>(w: W, constants: &[(String, f64)]) -> Result<()> {
    let rows = constants.iter().map(|(k, v)| vec![k.clone(), fmt_f64(*v)]).collect();
    table(w, &[], &["quantity", "value"], rows)
}

/// Drops `#` comment lines, leaving the CSV body.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::sim::Provenance;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn path_round_trip() {
        let path = LssPath {
            eval_times: vec![0.0, 0.5, 1.0],
            values: vec![0.0, 1.0 / 3.0, -2.0],
            provenance: Provenance {
                kernel: KernelSpec::gamma(1.0, 0.5, 1.0).unwrap(),
                sigma: "constant(1)".into(),
                driver: "test".into(),
                burn_in: 10.0,
                fine_factor: Some(8),
                seed: Some(3),
            },
        };
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# kernel:"));
        assert!(csv_body(&text).starts_with("t,x\n"));
        let (t, x) = read_path_csv(text.as_bytes()).unwrap();
        assert_eq!(t, path.eval_times);
        assert_eq!(x, path.values);
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(read_path_csv("t,y\n0,1\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_path_csv("t,x\n0,abc\n".as_bytes()), Err(Error::Parse(_))));
    }
}
