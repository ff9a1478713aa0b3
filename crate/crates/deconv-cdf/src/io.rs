//! CSV outputs and the discretized-problem bundle.
//!
//! A bundle is a directory holding
//!
//! * `signal_edges.csv` and `observation_edges.csv`: header `edge`, one bin edge per row;
//! * `channel.csv`: header `k0,…,k{M−1}`, one row per observation bin;
//! * `functional.csv`: header `g`, one weight per signal bin;
//! * `meta.csv`: header `key,value` with rows `n`, `epsilon` and `t0`.

use std::io::{Read, Write};
use std::path::Path;

use deconv_cdf_core::affine::{AffineEstimator, SolveReport};
use deconv_cdf_core::discretize::{BinGrid, DiscreteProblem};
use deconv_cdf_core::lepski::LepskiTrace;
use deconv_cdf_core::linalg::Matrix;

use crate::error::{HarnessError, Result};
use crate::rate::RateReport;
use crate::scenario::{RiskRow, RiskTable};

fn write_column<P: AsRef<Path>>(path: P, header: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([header])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn read_column<P: AsRef<Path>>(path: P) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| parse_f64(rec?.get(0).unwrap_or("")))
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("not a number: {s:?}")))
}

pub fn write_bundle(dir: &Path, p: &DiscreteProblem) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_column(dir.join("signal_edges.csv"), "edge", p.bins_i.edges())?;
    write_column(dir.join("observation_edges.csv"), "edge", p.bins_j.edges())?;
    write_column(dir.join("functional.csv"), "g", &p.g)?;
    let mut w = csv::Writer::from_path(dir.join("channel.csv"))?;
    w.write_record((0..p.big_m()).map(|k| format!("k{k}")))?;
    for j in 0..p.m() {
        w.write_record(p.a.row(j).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("meta.csv"))?;
    w.write_record(["key", "value"])?;
    w.write_record(["n", &p.n.to_string()])?;
    w.write_record(["epsilon", &p.epsilon.to_string()])?;
    w.write_record(["t0", &p.t0.to_string()])?;
    w.flush()?;
    Ok(())
}

pub fn read_bundle(dir: &Path) -> Result<DiscreteProblem> {
    let bins_i = BinGrid::from_edges(read_column(dir.join("signal_edges.csv"))?)?;
    let bins_j = BinGrid::from_edges(read_column(dir.join("observation_edges.csv"))?)?;
    let g = read_column(dir.join("functional.csv"))?;
    let mut rows = Vec::new();
    let mut r = csv::Reader::from_path(dir.join("channel.csv"))?;
    for rec in r.records() {
        rows.push(rec?.iter().map(parse_f64).collect::<Result<Vec<f64>>>()?);
    }
    let a = Matrix::from_rows(&rows)?;
    let (mut n, mut epsilon, mut t0) = (None, None, None);
    let mut r = csv::Reader::from_path(dir.join("meta.csv"))?;
    for rec in r.records() {
        let rec = rec?;
        let value = rec.get(1).unwrap_or("");
        match rec.get(0).unwrap_or("") {
            "n" => {
                n = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| HarnessError::Config(format!("bad n: {value:?}")))?,
                )
            }
            "epsilon" => epsilon = Some(parse_f64(value)?),
            "t0" => t0 = Some(parse_f64(value)?),
            other => return Err(HarnessError::Config(format!("unknown bundle key {other:?}"))),
        }
    }
    let missing = |k: &str| HarnessError::Config(format!("bundle meta.csv lacks {k}"));
    let p = DiscreteProblem {
        n: n.ok_or_else(|| missing("n"))?,
        epsilon: epsilon.ok_or_else(|| missing("epsilon"))?,
        t0: t0.ok_or_else(|| missing("t0"))?,
        bins_i,
        bins_j,
        a,
        g,
    };
    if p.a.rows() != p.bins_j.count() || p.a.cols() != p.bins_i.count() || p.g.len() != p.bins_i.count() {
        return Err(HarnessError::Config(
            "bundle dimensions disagree: channel must be observation bins x signal bins".into(),
        ));
    }
    Ok(p)
}

/// Reads observations: one value per line, optional header, `#` comments.
pub fn read_observations<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ if i == 0 => continue,
            _ => return Err(HarnessError::Config(format!("line {}: not a finite number: {field:?}", i + 1))),
        }
    }
    Ok(out)
}

pub fn read_observations_file(path: &Path) -> Result<Vec<f64>> {
    read_observations(std::fs::File::open(path)?)
}

/// Header `estimator_id,rep,t0,estimate,truth,error,abs_error,status`.
pub fn write_risk_rows<W: Write>(out: W, rows: &[RiskRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header `estimator_id,statistic,index,value`; `statistic` is `rep_max`,
/// `point_max`, or a five-number summary entry such as `rep_max_median`.
pub fn write_risk_summary<W: Write>(out: W, table: &RiskTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator_id", "statistic", "index", "value"])?;
    for s in &table.summary {
        let id = s.estimator_id.as_str();
        w.write_record([id, "failed_rows", "", &s.failed_rows.to_string()])?;
        for (name, stats) in [("rep_max", s.rep_max_stats), ("point_max", s.point_max_stats)] {
            if let Some(b) = stats {
                for (k, v) in [("min", b.min), ("q1", b.q1), ("median", b.median), ("q3", b.q3), ("max", b.max)] {
                    w.write_record([id, &format!("{name}_{k}"), "", &v.to_string()])?;
                }
            }
        }
        for (i, v) in s.rep_max.iter().enumerate() {
            w.write_record([id, "rep_max", &i.to_string(), &v.to_string()])?;
        }
        for (i, v) in s.point_max.iter().enumerate() {
            w.write_record([id, "point_max", &i.to_string(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Header `lambda,estimate,sigma_sq,big_sigma_sq,v_sq,lo,hi,selected`.
pub fn write_lepski_trace<W: Write>(out: W, trace: &LepskiTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "estimate", "sigma_sq", "big_sigma_sq", "v_sq", "lo", "hi", "selected"])?;
    for (i, r) in trace.per_lambda.iter().enumerate() {
        w.write_record([
            r.lambda.to_string(),
            r.estimate.to_string(),
            r.sigma_sq.to_string(),
            r.big_sigma_sq.to_string(),
            r.v_sq.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            u8::from(i == trace.selected_index).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Header `class,s_bar,nu,h_residual,iterations,converged,c,estimate,selected`;
/// `estimate` is empty without data and `selected` marks the adaptive choice.
pub fn write_affine_reports<W: Write>(
    out: W,
    labels: &[String],
    reports: &[SolveReport],
    estimators: &[AffineEstimator],
    estimates: Option<&[f64]>,
    selected: Option<usize>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "class",
        "s_bar",
        "nu",
        "h_residual",
        "iterations",
        "converged",
        "c",
        "estimate",
        "selected",
    ])?;
    for (i, (r, e)) in reports.iter().zip(estimators).enumerate() {
        w.write_record([
            labels[i].clone(),
            r.s_bar.to_string(),
            r.nu.to_string(),
            r.h_residual.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            e.c.to_string(),
            estimates.map(|v| v[i].to_string()).unwrap_or_default(),
            u8::from(selected == Some(i)).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Header `class,k,phi,x_bar,y_bar`.
pub fn write_affine_weights<W: Write>(
    out: W,
    labels: &[String],
    reports: &[SolveReport],
    estimators: &[AffineEstimator],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "k", "phi", "x_bar", "y_bar"])?;
    for (i, (r, e)) in reports.iter().zip(estimators).enumerate() {
        for k in 0..r.x_bar.len().max(e.phi.len()) {
            let at = |v: &[f64]| v.get(k).map(|x| x.to_string()).unwrap_or_default();
            w.write_record([labels[i].clone(), k.to_string(), at(&e.phi), at(&r.x_bar), at(&r.y_bar)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Header `n,lambda,rmse,rmse_se,mean_error`, then a `#` line with the fit.
pub fn write_rate_report<W: Write>(mut out: W, report: &RateReport) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for p in &report.points {
            w.serialize(p)?;
        }
        w.flush()?;
    }
    writeln!(
        out,
        "# slope={} slope_se={} intercept={} nominal_slope={}",
        report.slope, report.slope_se, report.intercept, report.nominal_slope
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observations_skip_header_comments_and_blanks() {
        let text = "y\n# comment\n1.5\n\n-2\n3e-1\n";
        assert_eq!(read_observations(text.as_bytes()).unwrap(), vec![1.5, -2.0, 0.3]);
    }

    #[test]
    fn observations_reject_garbage_after_the_first_line() {
        assert!(read_observations("1.0\nabc\n".as_bytes()).is_err());
        assert!(read_observations("1.0\nNaN\n".as_bytes()).is_err());
    }
}
