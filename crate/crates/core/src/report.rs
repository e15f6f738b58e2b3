//! CSV writers for estimates, density curves and certifications. Every row
//! carries its provenance.

use std::io::Write;

use crate::error::Result;
use crate::inequalities::Certification;
use crate::montecarlo::DensityEstimate;
use crate::stats::Estimate;

/// Writes `estimator, mean, stderr, n, seed, config_hash`.
pub fn write_estimates<W: Write>(out: W, rows: &[(String, Estimate)], config_hash: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator", "mean", "stderr", "n", "seed", "config_hash"])?;
    for (name, e) in rows {
        w.write_record([
            name.clone(),
            e.mean.to_string(),
            e.stderr.to_string(),
            e.n.to_string(),
            e.seed.to_string(),
            config_hash.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `y, p_hat, logderiv_hat, logderiv_fd, seed, n, config_hash`. For
/// `d = 2`, `y` is written as `y1;y2`.
pub fn write_density<W: Write>(
    out: W,
    est: &DensityEstimate,
    n: usize,
    seed: u64,
    config_hash: &str,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y", "p_hat", "logderiv_hat", "logderiv_fd", "seed", "n", "config_hash"])?;
    for i in 0..est.eval_points.len() {
        let y: Vec<String> = est.eval_points[i].iter().map(f64::to_string).collect();
        w.write_record([
            y.join(";"),
            est.density[i].to_string(),
            est.log_deriv[i].to_string(),
            est.log_deriv_fd[i].to_string(),
            seed.to_string(),
            n.to_string(),
            config_hash.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `inequality_id, params_json, lhs, rhs, margin_sigma, pass, seed, n, config_hash`.
pub fn write_certifications<W: Write>(
    out: W,
    rows: &[Certification],
    n: usize,
    seed: u64,
    config_hash: &str,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "inequality_id",
        "params_json",
        "lhs",
        "rhs",
        "margin_sigma",
        "pass",
        "seed",
        "n",
        "config_hash",
    ])?;
    for c in rows {
        w.write_record([
            c.id.clone(),
            c.params_json.clone(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            c.margin_sigma.to_string(),
            c.pass.to_string(),
            seed.to_string(),
            n.to_string(),
            config_hash.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimates_csv_layout() {
        let mut buf = Vec::new();
        let rows = vec![("lhs".to_string(), Estimate { mean: 0.5, stderr: 0.01, n: 10, seed: 7 })];
        write_estimates(&mut buf, &rows, "abc").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "estimator,mean,stderr,n,seed,config_hash\nlhs,0.5,0.01,10,7,abc\n");
    }

    #[test]
    fn certification_json_is_quoted() {
        let mut buf = Vec::new();
        let c = Certification {
            id: "x".into(),
            params_json: r#"{"a":1,"b":2}"#.into(),
            lhs: 1.0,
            rhs: 2.0,
            margin_sigma: 3.0,
            pass: true,
        };
        write_certifications(&mut buf, &[c], 5, 1, "h").unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        let row = r.records().next().unwrap().unwrap();
        assert_eq!(&row[1], r#"{"a":1,"b":2}"#);
        assert_eq!(&row[5], "true");
    }
}
