use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{bail, Context};
use idfactor::continuous::{
    check_path_hypotheses, parse_samples, verify_path_artifacts, write_samples, CoverConfig, FactorSampleRecord,
};
use idfactor::ensemble::{bench_instance, constant_path, derive_seed, random_normalized_path, rotation_path, seeded};
use idfactor::linalg::io::{matrix_to_string, parse_matrix};
use idfactor::linalg::{operator_norm, ColumnSource, DEFAULT_REL_TOL};
use idfactor::path::{parse_path, path_to_string, uniform};
use idfactor::static_factor::{
    check_hypotheses, continuous_max_rank, max_rank, scaled_factor, verify_artifacts, witness_lower_bound,
};
use idfactor::{
    factor_identity, factor_path_with, fmt_real, CoverPlan, Hypothesis, MatrixF64, MatrixPathF64, PathOptions,
    RankRequest,
};

use crate::out::{read_text, with_suffix, write_atomic, Failure, Summary};
use crate::{BenchArgs, BoundsArgs, FactorArgs, FactorPathArgs, GenPathArgs, PathKind, RankArgs, VerifyArgs,
    VerifyPathArgs, WitnessArgs};

type Outcome = Result<bool, Failure>;

fn rank_request(r: &RankArgs) -> RankRequest {
    match (r.n, r.force) {
        (None, _) => RankRequest::Auto,
        (Some(n), true) => RankRequest::Forced(n),
        (Some(n), false) => RankRequest::Exactly(n),
    }
}

fn check_tol(tol: f64) -> anyhow::Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        bail!("--tol must be positive, got {tol}");
    }
    Ok(())
}

fn check_grid(grid: usize) -> anyhow::Result<()> {
    if grid < 2 {
        bail!("--grid must be at least 2, got {grid}");
    }
    Ok(())
}

fn read_matrix(path: &std::path::Path) -> anyhow::Result<MatrixF64> {
    parse_matrix(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_path(path: &std::path::Path) -> anyhow::Result<MatrixPathF64> {
    parse_path(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn factor(a: FactorArgs, s: &mut Summary) -> Outcome {
    check_tol(a.tol)?;
    let m = read_matrix(&a.input)?;
    let rank = rank_request(&a.rank);
    let (pair, produced) = if a.rescale {
        scaled_factor(&m, rank)?
    } else {
        factor_identity(&m, rank)?
    };
    let cert = verify_artifacts(
        &m,
        pair.l.clone(),
        pair.r.clone(),
        Some(pair.family.clone()),
        produced.scale,
        a.tol,
    )?;
    write_atomic(&with_suffix(&a.output_prefix, "L"), matrix_to_string(&pair.l).as_bytes())?;
    write_atomic(&with_suffix(&a.output_prefix, "R"), matrix_to_string(&pair.r).as_bytes())?;
    write_atomic(&with_suffix(&a.output_prefix, "cert"), cert.to_text().as_bytes())?;
    s.set("n", pair.n());
    s.set("dev", fmt_real(cert.dev));
    s.set("product", fmt_real(cert.product));
    s.set("budget", fmt_real(cert.budget));
    s.set("theta", fmt_real(cert.theta));
    s.set("F", &pair.family);
    Ok(cert.pass)
}

pub fn verify(a: VerifyArgs, s: &mut Summary) -> Outcome {
    check_tol(a.tol)?;
    let m = read_matrix(&a.input)?;
    let scale = if a.rescale {
        let theta = m.min_col_norm();
        if !(theta > 0.0) {
            return Err(Hypothesis::VanishingColumn { theta }.into());
        }
        Some(operator_norm(&m, DEFAULT_REL_TOL)?)
    } else {
        check_hypotheses(&m)?;
        None
    };
    let l = read_matrix(&with_suffix(&a.output_prefix, "L"))?;
    let r = read_matrix(&with_suffix(&a.output_prefix, "R"))?;
    let cert = verify_artifacts(&m, l, r, None, scale, a.tol)?;
    s.set("dev", fmt_real(cert.dev));
    s.set("product", fmt_real(cert.product));
    s.set("budget", fmt_real(cert.budget));
    s.set("conformity", cert.conformity.map_or("none".into(), fmt_real));
    Ok(cert.pass)
}

pub fn factor_path(a: FactorPathArgs, s: &mut Summary) -> Outcome {
    check_tol(a.tol)?;
    check_grid(a.grid)?;
    let path = read_path(&a.input)?;
    let opts = PathOptions {
        grid: a.grid,
        tol: a.tol,
        cover: CoverConfig::default(),
    };
    let (fp, cert) = factor_path_with(&path, rank_request(&a.rank), &opts)?;
    write_atomic(&with_suffix(&a.output_prefix, "plan"), fp.plan.to_text().as_bytes())?;
    write_atomic(&with_suffix(&a.output_prefix, "cert"), cert.to_text().as_bytes())?;
    if a.samples > 0 {
        let (t0, t1) = path.domain();
        let ts = if a.samples == 1 { vec![t0] } else { uniform(t0, t1, a.samples) };
        let records = ts
            .into_iter()
            .map(|t| {
                let e = fp.eval(t)?;
                Ok(FactorSampleRecord { t, l: e.l, r: e.r })
            })
            .collect::<idfactor::Result<Vec<_>>>()?;
        let mut buf = Vec::new();
        write_samples(&mut buf, &records)?;
        write_atomic(&with_suffix(&a.output_prefix, "samples"), &buf)?;
    }
    s.set("n", fp.n());
    s.set("intervals", fp.plan.intervals());
    s.set("max_dev", fmt_real(cert.max_dev));
    s.set("max_product", fmt_real(cert.max_product));
    s.set("budget", fmt_real(cert.budget));
    s.set("max_jump", fmt_real(cert.max_jump));
    s.set("theta", fmt_real(cert.theta));
    Ok(cert.pass)
}

pub fn verify_path(a: VerifyPathArgs, s: &mut Summary) -> Outcome {
    check_tol(a.tol)?;
    check_grid(a.grid)?;
    let path = read_path(&a.input)?;
    check_path_hypotheses(&path)?;
    let plan_file = with_suffix(&a.output_prefix, "plan");
    let plan: CoverPlan<f64> =
        CoverPlan::parse(&read_text(&plan_file)?).with_context(|| format!("parsing {}", plan_file.display()))?;
    let sample_file = with_suffix(&a.output_prefix, "samples");
    let samples = if sample_file.exists() {
        parse_samples(&read_text(&sample_file)?).with_context(|| format!("parsing {}", sample_file.display()))?
    } else {
        Vec::new()
    };
    let cert = verify_path_artifacts(&path, plan, &samples, a.grid, a.tol)?;
    for issue in &cert.issues {
        eprintln!("issue: {issue}");
    }
    s.set("max_dev", fmt_real(cert.max_dev));
    s.set("max_product", fmt_real(cert.max_product));
    s.set("budget", fmt_real(cert.budget));
    s.set("worst_t", fmt_real(cert.worst_t));
    s.set("samples", samples.len());
    s.set("issues", cert.issues.len());
    Ok(cert.pass)
}

pub fn witness(a: WitnessArgs, s: &mut Summary) -> Outcome {
    check_tol(a.tol)?;
    let w: MatrixF64 = witness_lower_bound(a.big_n, a.theta)?;
    write_atomic(&with_suffix(&a.output_prefix, "witness"), matrix_to_string(&w).as_bytes())?;
    let Some(n) = a.n else {
        return Ok(true);
    };
    let (_, cert) = factor_identity(&w, RankRequest::Forced(n))?;
    let (lower, upper) = (if n >= 2 { 1.0 / a.theta } else { 0.0 }, 2.0 / a.theta);
    s.set("n", n);
    s.set("dev", fmt_real(cert.dev));
    s.set("product", fmt_real(cert.product));
    s.set("lower", fmt_real(lower));
    s.set("upper", fmt_real(upper));
    Ok(cert.dev <= a.tol && cert.product >= lower - 1e-9 && cert.product <= upper + 1e-9)
}

pub fn bounds(a: BoundsArgs, s: &mut Summary) -> Outcome {
    s.set("static", max_rank(a.big_n, a.theta)?);
    s.set("continuous", continuous_max_rank(a.big_n, a.theta)?);
    // restricted invertibility rate with its unspecified constant set to 1
    s.set("bt_rate_c1", fmt_real(a.theta * a.theta * a.big_n as f64));
    Ok(true)
}

fn parse_sweep(text: &str) -> anyhow::Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (n, t) = item
            .split_once(':')
            .with_context(|| format!("sweep entry {item:?} is not N:theta"))?;
        let n: usize = n.trim().parse().with_context(|| format!("bad N in {item:?}"))?;
        let t: f64 = t.trim().parse().with_context(|| format!("bad theta in {item:?}"))?;
        if n == 0 || !(t > 0.0 && t <= 1.0) {
            bail!("sweep entry {item:?} needs N >= 1 and theta in (0, 1]");
        }
        out.push((n, t));
    }
    if out.is_empty() {
        bail!("empty sweep");
    }
    Ok(out)
}

pub fn bench(a: BenchArgs, s: &mut Summary) -> Outcome {
    check_tol(a.tol)?;
    let sweep = parse_sweep(&a.sweep)?;
    let mut csv = String::from("N,theta,n,dev,product,millis\n");
    let mut all = true;
    let mut row = 0u64;
    for &(big_n, theta) in &sweep {
        for _ in 0..a.reps {
            let mut rng = seeded(derive_seed(a.seed, row));
            row += 1;
            let m: MatrixF64 = bench_instance(big_n, theta, &mut rng)?;
            let start = Instant::now();
            let (pair, cert) = factor_identity(&m, RankRequest::Auto)?;
            let millis = if a.no_timing { 0.0 } else { start.elapsed().as_secs_f64() * 1e3 };
            all &= cert.dev <= a.tol && cert.product <= 2.0 / theta + a.tol;
            writeln!(
                csv,
                "{big_n},{},{},{},{},{}",
                fmt_real(theta),
                pair.n(),
                fmt_real(cert.dev),
                fmt_real(cert.product),
                fmt_real(millis)
            )?;
        }
    }
    write_atomic(&with_suffix(&a.output_prefix, "csv"), csv.as_bytes())?;
    s.set("rows", row);
    Ok(all)
}

pub fn gen_path(a: GenPathArgs, s: &mut Summary) -> Outcome {
    if a.segments == 0 {
        return Err(anyhow::anyhow!("--segments must be positive").into());
    }
    let mut rng = seeded(a.seed);
    let (path, want): (MatrixPathF64, f64) = match a.kind {
        PathKind::Constant => (constant_path(bench_instance(a.big_n, a.theta, &mut rng)?, 1)?, a.theta),
        PathKind::Rotation => {
            let angle = std::f64::consts::FRAC_PI_2;
            let chord = (angle / (2.0 * a.segments as f64)).cos();
            (rotation_path(a.big_n, a.segments, angle)?, chord)
        }
        PathKind::Random => {
            let rot = a.rotations.unwrap_or(a.big_n / 2);
            (random_normalized_path(a.big_n, a.segments, a.theta, rot, &mut rng)?, a.theta)
        }
    };
    write_atomic(&with_suffix(&a.output_prefix, "path"), path_to_string(&path)?.as_bytes())?;
    let norm = path.path_norm_bound(DEFAULT_REL_TOL)?;
    let theta = path.path_theta();
    s.set("segments", path.segments());
    s.set("norm_bound", fmt_real(norm));
    s.set("theta", fmt_real(theta));
    Ok(norm <= 1.0 + 1e-9 && theta >= want - 1e-9)
}
