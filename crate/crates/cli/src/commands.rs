use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use subibp_core::dynamics::simulate;
use subibp_core::inequalities::{
    entropy_bound_check, fit_lp_constant, grad_bound_check, heat_kernel_integral_bound,
    lp_observation, shift_harnack_check, BoundInputs, Certification,
};
use subibp_core::malliavin::ibp_weight;
use subibp_core::montecarlo::density_and_logderiv;
use subibp_core::report::{write_certifications, write_density, write_estimates};
use subibp_core::rng;
use subibp_core::subordinator::{
    discarded_mass, sample_positive_path, sample_terminal_values, truncate_small_jumps,
};
use subibp_core::{Estimate, Model, PathCache, TestFunction, Vector};

use crate::config::{schema, ExperimentConfig};
use crate::CliError;

/// Pass/fail lines and the overall verdict of one command.
#[derive(Debug, Default)]
pub struct Summary {
    pub lines: Vec<String>,
    pub pass: bool,
}

impl Summary {
    fn new() -> Self {
        Self { lines: Vec::new(), pass: true }
    }

    fn info(&mut self, line: String) {
        self.lines.push(line);
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
    }
}

pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub hash: &'a str,
}

impl Context<'_> {
    fn out_file(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let dir = &self.cfg.output.dir;
        fs::create_dir_all(dir)?;
        Ok(BufWriter::new(File::create(dir.join(name))?))
    }

    fn cache(&self, model: &Model) -> Result<PathCache, CliError> {
        Ok(PathCache::simulate(model, &self.cfg.run_config())?)
    }

    fn functions(&self) -> Result<Vec<TestFunction>, CliError> {
        self.cfg.task.f.iter().map(|f| f.parse().map_err(schema)).collect()
    }

    fn estimates(&self, name: &str, rows: &[(String, Estimate)]) -> Result<(), CliError> {
        write_estimates(self.out_file(name)?, rows, self.hash)?;
        Ok(())
    }

    fn certifications(&self, name: &str, rows: &[Certification]) -> Result<(), CliError> {
        let run = &self.cfg.run;
        write_certifications(self.out_file(name)?, rows, run.n_paths, run.seed, self.hash)?;
        Ok(())
    }
}

fn label(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(f64::to_string).collect();
    parts.join(";")
}

fn fmt_est(e: &Estimate) -> String {
    format!("{:.6} ± {:.6}", e.mean, e.stderr)
}

fn cert_line(c: &Certification) -> String {
    format!("{} {}: lhs {:.6} rhs {:.6} margin {:.2}σ", c.id, c.params_json, c.lhs, c.rhs, c.margin_sigma)
}

pub fn simulate_cmd(ctx: &Context) -> Result<Summary, CliError> {
    let model = ctx.cfg.build_model()?;
    let cache = ctx.cache(&model)?;
    let mut rows = Vec::new();
    for i in 0..model.dim() {
        rows.push((format!("X_T[{}]", i + 1), cache.mean_of(|x| x[i])));
    }
    rows.push(("S_T".into(), Estimate::from_samples(&cache.s_terminal(), cache.seed)));
    for m in 0..model.dim() {
        let w: Vec<f64> = cache.samples.iter().map(|s| s.weights[m]).collect();
        rows.push((format!("M[e_{}]", m + 1), Estimate::from_samples(&w, cache.seed)));
    }
    ctx.estimates("simulate.csv", &rows)?;

    // The first paths of batch 0, regenerated from the same stream.
    let n_dump = ctx.cfg.task.dump_paths;
    if n_dump > 0 {
        let mut r = rng::stream(ctx.cfg.run.seed, 0);
        fs::create_dir_all(ctx.cfg.output.dir.join("paths"))?;
        for k in 0..n_dump {
            let (sub, _) =
                sample_positive_path(model.subordinator, model.horizon, ctx.cfg.run.n_steps, &mut r)?;
            let b = simulate(&model.x0, &model.drift, &model.diffusion, &sub, &model.perturbation, &mut r)?;
            b.write_csv(ctx.out_file(&format!("paths/path_{k}.csv"))?)?;
        }
    }

    let mut s = Summary::new();
    for (name, e) in &rows {
        s.info(format!("{name}: {}", fmt_est(e)));
    }
    s.info(format!(
        "{} paths, {} failures, {} subordinator rejections",
        cache.len(),
        cache.failures,
        cache.rejections
    ));
    Ok(s)
}

pub fn verify_ibp(ctx: &Context) -> Result<Summary, CliError> {
    let model = ctx.cfg.build_model()?;
    let cache = ctx.cache(&model)?;
    let mut rows = Vec::new();
    let mut s = Summary::new();
    for f in ctx.functions()? {
        for v in ctx.cfg.directions()? {
            let r = cache.verify_identity(&f, &v)?;
            let tag = format!("f={f};v={}", label(&v));
            rows.push((format!("lhs[{tag}]"), r.lhs));
            rows.push((format!("rhs[{tag}]"), r.rhs));
            rows.push((format!("diff[{tag}]"), r.diff));
            s.check(
                r.pass,
                format!(
                    "identity {tag}: lhs {} rhs {} diff {}",
                    fmt_est(&r.lhs),
                    fmt_est(&r.rhs),
                    fmt_est(&r.diff)
                ),
            );
        }
    }
    ctx.estimates("identity.csv", &rows)?;
    Ok(s)
}

pub fn bounds(ctx: &Context) -> Result<Summary, CliError> {
    let model = ctx.cfg.build_model()?;
    let cache = ctx.cache(&model)?;
    let task = &ctx.cfg.task;
    let p0 = task.p.first().copied().unwrap_or(2.0);
    let mut certs = Vec::new();
    for f in ctx.functions()? {
        for v in ctx.cfg.directions()? {
            let inputs = BoundInputs::from_model(&model, p0, 1.0, v.clone()).map_err(schema)?;
            certs.push(grad_bound_check(&cache, &f, &inputs)?);
            if f.is_positive() {
                for &delta in &task.delta {
                    let inputs = BoundInputs::from_model(&model, p0, delta, v.clone()).map_err(schema)?;
                    certs.push(entropy_bound_check(&cache, &f, &inputs)?);
                }
            }
        }
    }

    if !task.lp_horizons.is_empty() {
        for &p in &task.p {
            let mut obs = Vec::new();
            for &t in &task.lp_horizons {
                let mut m = model.clone();
                m.horizon = t;
                m.validate().map_err(schema)?;
                let c = ctx.cache(&m)?;
                for f in ctx.functions()? {
                    for v in ctx.cfg.directions()? {
                        if v.norm() > 0.0 {
                            let inputs = BoundInputs::from_model(&m, p, 1.0, v).map_err(schema)?;
                            obs.push(lp_observation(&c, &f, &inputs)?);
                        }
                    }
                }
            }
            let fit = fit_lp_constant(&obs)?;
            certs.push(Certification {
                id: "lp_constant_spread".into(),
                params_json: serde_json::json!({
                    "p": p,
                    "horizons": task.lp_horizons,
                    "per_horizon": fit.per_horizon,
                    "constant": fit.constant,
                })
                .to_string(),
                lhs: fit.spread,
                rhs: 3.0,
                margin_sigma: f64::NAN,
                pass: fit.stable,
            });
        }
    }

    ctx.certifications("bounds.csv", &certs)?;
    let mut s = Summary::new();
    for c in &certs {
        s.check(c.pass, cert_line(c));
    }
    Ok(s)
}

pub fn harnack(ctx: &Context) -> Result<Summary, CliError> {
    let model = ctx.cfg.build_model()?;
    let cache = ctx.cache(&model)?;
    let mut certs = Vec::new();
    let mut s = Summary::new();
    for f in ctx.functions()? {
        if !f.is_positive() {
            s.info(format!("skip {f}: shift-Harnack needs a positive test function"));
            continue;
        }
        for &p in &ctx.cfg.task.p {
            for v in ctx.cfg.directions()? {
                let inputs = BoundInputs::from_model(&model, p, 1.0, v).map_err(schema)?;
                certs.push(shift_harnack_check(&cache, &f, &inputs)?);
            }
        }
    }
    ctx.certifications("harnack.csv", &certs)?;
    for c in &certs {
        s.check(c.pass, cert_line(c));
    }

    let mut rows = Vec::new();
    let s_samples = cache.s_terminal();
    for &p in &ctx.cfg.task.p {
        let inputs = BoundInputs::from_model(&model, p, 1.0, Vector::zeros(model.dim())).map_err(schema)?;
        let hk = heat_kernel_integral_bound(&inputs, &s_samples)?;
        rows.push((
            format!("heat_kernel_bound[p={p}]"),
            Estimate { mean: hk.bound, stderr: f64::NAN, n: s_samples.len(), seed: cache.seed },
        ));
        s.info(format!("heat-kernel integral bound p={p}: {:.6} (radius {})", hk.bound, hk.radius));
    }
    ctx.estimates("heat_kernel.csv", &rows)?;
    Ok(s)
}

pub fn density(ctx: &Context) -> Result<Summary, CliError> {
    let model = ctx.cfg.build_model()?;
    let cache = ctx.cache(&model)?;
    let points = ctx.cfg.task.eval_grid.points();
    let mut s = Summary::new();
    for (i, v) in ctx.cfg.directions()?.iter().enumerate() {
        let est = density_and_logderiv(&cache, v, &points, ctx.cfg.task.bandwidth)?;
        let name = if i == 0 { "density.csv".to_string() } else { format!("density_{i}.csv") };
        write_density(ctx.out_file(&name)?, &est, cache.len(), cache.seed, ctx.hash)?;
        let flagged = est.flagged.iter().filter(|&&f| f).count();
        s.info(format!(
            "density v={}: {} points, bandwidth {:.5}, {flagged} empty windows -> {name}",
            label(v),
            points.len(),
            est.bandwidth
        ));
    }
    Ok(s)
}

pub fn moments(ctx: &Context) -> Result<Summary, CliError> {
    let model = ctx.cfg.build_model()?;
    let spec = model.subordinator;
    let t = model.horizon;
    let run = ctx.cfg.run_config();
    let samples = sample_terminal_values(spec, t, run.n_paths, run.seed)?;
    let mut rows = Vec::new();
    let mut s = Summary::new();
    for &p in &ctx.cfg.task.moment_p {
        let closed = spec.neg_moment(t, p).map_err(schema)?;
        let values: Vec<f64> = samples.iter().map(|x| x.powf(-p)).collect();
        let mc = Estimate::from_samples(&values, run.seed);
        rows.push((format!("neg_moment_closed[p={p}]"), Estimate::exact(closed, 0, run.seed)));
        rows.push((format!("neg_moment_mc[p={p}]"), mc));
        s.info(format!("E S({t})^(-{p}) = {closed:.6}"));
        s.check(mc.within(closed, 3.0), format!("Monte Carlo {} vs {closed:.6}", fmt_est(&mc)));
    }
    ctx.estimates("moments.csv", &rows)?;
    Ok(s)
}

pub fn truncation_study(ctx: &Context) -> Result<Summary, CliError> {
    let model = ctx.cfg.build_model()?;
    if model.subordinator.alpha().is_none() {
        return Err(CliError::Schema("truncation-study needs a stable subordinator".into()));
    }
    let v = ctx
        .cfg
        .directions()?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Schema("truncation-study needs a direction".into()))?;
    let seed = ctx.cfg.run.seed;
    let (ell, _) =
        sample_positive_path(model.subordinator, model.horizon, ctx.cfg.run.n_steps, &mut rng::stream(seed, 0))?;
    let eps = &ctx.cfg.task.eps;
    let truncated = eps.iter().map(|&e| truncate_small_jumps(&ell, e)).collect::<Result<Vec<_>, _>>()?;
    let weight = |path, k: u64| -> Result<f64, subibp_core::Error> {
        let b = simulate(
            &model.x0,
            &model.drift,
            &model.diffusion,
            path,
            &model.perturbation,
            &mut rng::stream(seed, k + 1),
        )?;
        Ok(ibp_weight(&b, &model.drift, &model.diffusion, &v)?.total)
    };
    let sq: Vec<Vec<f64>> = (0..ctx.cfg.task.streams as u64)
        .into_par_iter()
        .map(|k| {
            let full = weight(&ell, k)?;
            truncated.iter().map(|p| Ok((weight(p, k)? - full).powi(2))).collect()
        })
        .collect::<Result<_, subibp_core::Error>>()?;

    let mut rows = Vec::new();
    let mut s = Summary::new();
    let mut rms = Vec::new();
    for (i, &e) in eps.iter().enumerate() {
        let col: Vec<f64> = sq.iter().map(|r| r[i]).collect();
        let ms = Estimate::from_samples(&col, seed);
        let r = ms.mean.sqrt();
        let est = Estimate { mean: r, stderr: if r > 0.0 { ms.stderr / (2.0 * r) } else { 0.0 }, ..ms };
        rows.push((format!("rms_weight_gap[eps={e}]"), est));
        rows.push((
            format!("discarded_mass[eps={e}]"),
            Estimate::exact(discarded_mass(&ell, e), 0, seed),
        ));
        s.info(format!(
            "eps {e}: RMS |M^eps - M| {} with {} of {} jumps kept",
            fmt_est(&est),
            truncated[i].jumps().len(),
            ell.jumps().len()
        ));
        rms.push((e, r));
    }
    ctx.estimates("truncation.csv", &rows)?;
    let mut by_eps = rms.clone();
    by_eps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = by_eps.windows(2).all(|w| w[1].1 <= w[0].1);
    s.check(decreasing, "RMS gap decreases as eps shrinks".into());
    Ok(s)
}

pub fn write_summary(dir: &Path, command: &str, hash: &str, summary: &Summary, json: bool) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut text = summary.lines.join("\n");
    text.push('\n');
    fs::write(dir.join("summary.txt"), text)?;
    if json {
        let value = serde_json::json!({
            "command": command,
            "config_hash": hash,
            "pass": summary.pass,
            "lines": summary.lines,
        });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&value).expect("json") + "\n")?;
    }
    Ok(())
}
