//! Command-line entry points.
//!
//! Every subcommand reads an optional key-value config file, applies
//! `--set key=value` overrides, runs, and writes a deterministic report
//! (plus CSV dumps) under `--out`. Reports embed the resolved
//! configuration and the code version; wall-clock data goes to a `.meta`
//! sidecar so identical configurations produce byte-identical reports.
//!
//! Exit codes: `0` every check passed and every target was met, `1` a
//! structural check failed or a solver missed its target (stagnation and
//! guard stops land here, with the run log in the report), `2` bad
//! arguments, config, or input files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::Matrix4;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::disc::{
    admissibility_check, atomic_write, pair_sup, read_map, write_map, MeshMap, OneFormField,
    Point2, DEFAULT_ADMISSIBILITY_TOL,
};
use crate::error::{Error, Result};
use crate::expr::{one_form_from_exprs, parse_coeff_list, vector_field_from_exprs};
use crate::fixtures::{
    complex_line_map, defect_map, legendrian_map, manufactured_solution, perturbed_map,
};
use crate::geometry::{
    bracket_step_two, check_reeb_directions, check_type_constraints, fatness_via_phi,
    holomorphic_contact_model, integrable_pair, is_fat_at, kernel_basis, partially_flat_pair,
    CorankTwoDistribution, Point6, DEFAULT_FAT_TOL,
};
use crate::linearized::{apply_linearization, right_inverse, BoundaryData};
use crate::report::{write_report, ReportBuilder};
use crate::solve::{
    homotopy_family, horizontality_residual, make_cutoff, newton_invert, NewtonStatus,
    SolveOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "fatdisc",
    version,
    about = "Corank-2 fat distributions on R^6 and horizontal discs"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pointwise structural checks of a distribution, or type constraints.
    Check(CheckArgs),
    /// Sample kernel frames and dump their diagnostics to CSV.
    Frames(CommonArgs),
    /// Convergence study of the elliptic right inverse.
    SolveLinearized(CommonArgs),
    /// Damped Newton for a horizontal map from a perturbed start.
    Invert(CommonArgs),
    /// Compactly supported family flattening a pointwise defect.
    Homotopy(CommonArgs),
    /// Write the bundled fixture maps and their diagnostics.
    Fixtures(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Key-value config file (`key = value` lines, `#` comments).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable, wins over the file and the
    /// shorthand flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory for reports and CSV dumps.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Shorthand for --set resolution=N.
    #[arg(long)]
    resolution: Option<u32>,
    /// Shorthand for --set seed=N.
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for --set model=NAME.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Check only the existence constraints for a rank-K fat distribution
    /// on an N-manifold.
    #[arg(long = "type", num_args = 2, value_names = ["K", "N"])]
    type_kn: Option<Vec<u64>>,
}

/// Run a parsed invocation and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Frames(common) => cmd_frames(common),
        Command::SolveLinearized(common) => cmd_solve_linearized(common),
        Command::Invert(common) => cmd_invert(common),
        Command::Homotopy(common) => cmd_homotopy(common),
        Command::Fixtures(common) => cmd_fixtures(common),
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::Domain(_)
        | Error::Capability(_)
        | Error::MissingReeb { .. }
        | Error::Scale { .. } => 2,
        Error::Continuation { source, .. } => exit_code_for(source),
        _ => 1,
    }
}

fn build_config(common: &CommonArgs) -> Result<Config> {
    let mut cfg = Config::new();
    if let Some(path) = &common.config {
        cfg.merge_file(path)?;
    }
    if let Some(r) = common.resolution {
        cfg.apply_set(&format!("resolution={r}"))?;
    }
    if let Some(s) = common.seed {
        cfg.apply_set(&format!("seed={s}"))?;
    }
    if let Some(m) = &common.model {
        cfg.apply_set(&format!("model={m}"))?;
    }
    for spec in &common.sets {
        cfg.apply_set(spec)?;
    }
    std::fs::create_dir_all(&common.out)?;
    Ok(cfg)
}

fn resolve_distribution(cfg: &Config) -> Result<CorankTwoDistribution> {
    match cfg.get_str("model").unwrap_or("holomorphic_contact") {
        "holomorphic_contact" => Ok(holomorphic_contact_model()),
        "integrable" => Ok(integrable_pair()),
        "partially_flat" => Ok(partially_flat_pair()),
        "custom" => {
            let a1 = one_form_from_exprs("alpha1", parse_coeff_list(cfg.require("alpha1")?, "alpha1")?);
            let a2 = one_form_from_exprs("alpha2", parse_coeff_list(cfg.require("alpha2")?, "alpha2")?);
            let mut dist = CorankTwoDistribution::new("custom", a1, a2);
            match (cfg.get_str("reeb1"), cfg.get_str("reeb2")) {
                (Some(z1), Some(z2)) => {
                    dist = dist.with_reeb(
                        vector_field_from_exprs("reeb1", parse_coeff_list(z1, "reeb1")?),
                        vector_field_from_exprs("reeb2", parse_coeff_list(z2, "reeb2")?),
                    );
                }
                (None, None) => {}
                _ => {
                    return Err(Error::Domain(
                        "custom model needs both reeb1 and reeb2, or neither".into(),
                    ))
                }
            }
            Ok(dist)
        }
        other => Err(Error::Domain(format!(
            "unknown model '{other}' \
             (holomorphic_contact, integrable, partially_flat, custom)"
        ))),
    }
}

fn sample_box(rng: &mut ChaCha8Rng, half: f64) -> Point6 {
    Point6::from_fn(|_, _| rng.gen_range(-half..half))
}

fn finish(out_dir: &Path, name: &str, builder: ReportBuilder, cfg: &Config) -> Result<String> {
    let text = builder.finish(cfg);
    write_report(&out_dir.join(name), &text)?;
    print!("{text}");
    Ok(text)
}

fn solve_options(cfg: &Config) -> Result<SolveOptions> {
    let defaults = SolveOptions::default();
    Ok(SolveOptions {
        max_iters: cfg.get_usize("max_iters", defaults.max_iters)?,
        damping: cfg.get_f64("damping", defaults.damping)?,
        residual_target: cfg.get_f64("residual_target", defaults.residual_target)?,
        admissibility_guard: cfg.get_bool("admissibility_guard", defaults.admissibility_guard)?,
        s_order: cfg.get_usize("s_order", defaults.s_order)?,
        smallness_bound: if cfg.contains("smallness_bound") {
            Some(cfg.get_f64("smallness_bound", 0.0)?)
        } else {
            None
        },
        admissibility_tol: cfg.get_f64("admissibility_tol", defaults.admissibility_tol)?,
    })
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let cfg = build_config(&args.common)?;
    let out = &args.common.out;

    if let Some(kn) = &args.type_kn {
        let check = check_type_constraints(kn[0], kn[1])?;
        let mut rb = ReportBuilder::new("type constraints");
        rb.kv("rank k", check.k)
            .kv("dimension n", check.n)
            .kv("radon-hurwitz rho(k)", check.rho);
        rb.section("constraints");
        if check.admissible() {
            rb.line("all constraints hold");
        } else {
            for c in &check.failures {
                rb.line(&format!("violated: {c}"));
            }
        }
        rb.blank()
            .kv("status", if check.admissible() { "PASS" } else { "FAIL" });
        finish(out, "check_report.txt", rb, &cfg)?;
        return Ok(if check.admissible() { 0 } else { 1 });
    }

    let dist = resolve_distribution(&cfg)?;
    let points = cfg.get_usize("points", 200)?;
    let seed = cfg.get_u64("seed", 7)?;
    let half = cfg.get_f64("box", 1.5)?;
    let tol = cfg.get_f64("tol", DEFAULT_FAT_TOL)?;
    let cross_points = cfg.get_usize("cross_checks", 20)?.min(points);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let has_reeb = dist.reeb.is_some();
    let (mut fat_fail, mut reeb_fail, mut bracket_fail, mut phi_disagree) = (0usize, 0, 0, 0);
    let mut cross_total = 0usize;
    let mut min_omega = f64::INFINITY;
    let mut min_im = f64::INFINITY;
    let mut min_sigma = f64::INFINITY;
    let mut worst_reeb = 0.0f64;
    for i in 0..points {
        let x = sample_box(&mut rng, half);
        let fat = is_fat_at(&dist, &x, tol)?;
        if !fat.fat {
            fat_fail += 1;
        }
        min_omega = min_omega.min(fat.omega_sigma_ratio[0].min(fat.omega_sigma_ratio[1]));
        min_im = min_im.min(fat.min_im_ratio);
        let br = bracket_step_two(&dist, &x, tol)?;
        if !br.spans {
            bracket_fail += 1;
        }
        min_sigma = min_sigma.min(br.sigma_ratio);
        if has_reeb {
            let rr = check_reeb_directions(&dist, &x, tol)?;
            if !rr.pass {
                reeb_fail += 1;
            }
            let mut w = rr.bracket.max(rr.cross[0]).max(rr.cross[1]);
            for row in rr.pairing.iter().chain(rr.contraction.iter()) {
                w = w.max(row[0]).max(row[1]);
            }
            worst_reeb = worst_reeb.max(w);
        }
        if i < cross_points {
            // Dual route: the kernel-vector characterization has to agree
            // with the connecting-automorphism test.
            let frame = kernel_basis(&dist, &x)?;
            for _ in 0..3 {
                let c = nalgebra::Vector4::from_fn(|_, _| rng.gen_range(-1.0f64..1.0));
                if c.norm() < 1e-3 {
                    continue;
                }
                let v = frame.ambient(&c);
                cross_total += 1;
                if fatness_via_phi(&dist, &x, &v, tol)? != fat.fat {
                    phi_disagree += 1;
                }
            }
        }
    }

    let mut rb = ReportBuilder::new("structural checks");
    rb.kv("model", &dist.label)
        .kv("points", points)
        .kv("seed", seed)
        .kv("sample box half-width", half)
        .kv("tolerance", format!("{tol:e}"));
    rb.section("results");
    let mut rows = vec![
        vec![
            "fatness".into(),
            points.to_string(),
            fat_fail.to_string(),
            format!("min curvature ratio {min_omega:.3e}, min |Im| ratio {min_im:.3e}"),
        ],
        vec![
            "bracket generation".into(),
            points.to_string(),
            bracket_fail.to_string(),
            format!("min singular-value ratio {min_sigma:.3e}"),
        ],
        vec![
            "kernel-vector cross-check".into(),
            cross_total.to_string(),
            phi_disagree.to_string(),
            "agreement with the fatness route".into(),
        ],
    ];
    if has_reeb {
        rows.insert(
            1,
            vec![
                "reeb directions".into(),
                points.to_string(),
                reeb_fail.to_string(),
                format!("max deviation {worst_reeb:.3e}"),
            ],
        );
    }
    rb.table(&["check", "samples", "failures", "margin"], &rows);
    if !has_reeb {
        rb.line("reeb directions: skipped, the model carries no Reeb pair");
    }
    let failing: Vec<&str> = [
        ("fatness", fat_fail),
        ("reeb directions", reeb_fail),
        ("bracket generation", bracket_fail),
        ("kernel-vector cross-check", phi_disagree),
    ]
    .iter()
    .filter(|(_, n)| *n > 0)
    .map(|(name, _)| *name)
    .collect();
    rb.blank();
    if failing.is_empty() {
        rb.kv("status", "PASS");
    } else {
        rb.kv("status", format!("FAIL ({})", failing.join(", ")));
    }
    finish(out, "check_report.txt", rb, &cfg)?;
    Ok(if failing.is_empty() { 0 } else { 1 })
}

fn cmd_frames(common: &CommonArgs) -> Result<i32> {
    let cfg = build_config(common)?;
    let dist = resolve_distribution(&cfg)?;
    let points = cfg.get_usize("points", 50)?;
    let seed = cfg.get_u64("seed", 7)?;
    let half = cfg.get_f64("box", 1.5)?;
    let tol = cfg.get_f64("tol", DEFAULT_FAT_TOL)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from(
        "x1,x2,y1,y2,z1,z2,kernel_residual,omega1_ratio,omega2_ratio,min_im_ratio,a2_defect\n",
    );
    let mut fat_fail = 0usize;
    let mut worst_kernel = 0.0f64;
    let mut max_a2 = 0.0f64;
    for _ in 0..points {
        let x = sample_box(&mut rng, half);
        let frame = kernel_basis(&dist, &x)?;
        let fat = is_fat_at(&dist, &x, tol)?;
        if !fat.fat {
            fat_fail += 1;
        }
        let kres = frame.kernel_residual(&dist)?;
        worst_kernel = worst_kernel.max(kres);
        let a2 = (frame.connecting * frame.connecting + Matrix4::identity()).amax();
        max_a2 = max_a2.max(a2);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{kres:e},{:e},{:e},{:e},{a2:e}\n",
            x[0],
            x[1],
            x[2],
            x[3],
            x[4],
            x[5],
            fat.omega_sigma_ratio[0],
            fat.omega_sigma_ratio[1],
            fat.min_im_ratio,
        ));
    }
    atomic_write(&common.out.join("frames.csv"), &csv)?;

    let mut rb = ReportBuilder::new("kernel frames");
    rb.kv("model", &dist.label)
        .kv("points", points)
        .kv("seed", seed)
        .kv("csv", "frames.csv");
    rb.section("diagnostics");
    rb.kv("worst kernel residual", format!("{worst_kernel:.3e}"))
        .kv(
            "max |A^2 + Id| (zero on the flat model)",
            format!("{max_a2:.3e}"),
        )
        .kv("points failing fatness", fat_fail);
    rb.blank()
        .kv("status", if fat_fail == 0 { "PASS" } else { "FAIL" });
    finish(&common.out, "frames_report.txt", rb, &cfg)?;
    Ok(if fat_fail == 0 { 0 } else { 1 })
}

fn cmd_solve_linearized(common: &CommonArgs) -> Result<i32> {
    let cfg = build_config(common)?;
    let fixture = cfg.get_str("fixture").unwrap_or("legendrian").to_string();
    let data = cfg.get_str("data").unwrap_or("manufactured").to_string();
    let resolutions = cfg.get_u32_list("resolutions", &[16, 32, 64])?;
    let tol = cfg.get_f64("admissibility_tol", DEFAULT_ADMISSIBILITY_TOL)?;
    let min_order_s = cfg.get_f64("min_order_s", 1.0)?;
    let min_order_a = cfg.get_f64("min_order_a", 1.5)?;
    let dist = holomorphic_contact_model();
    let res0 = *resolutions
        .first()
        .ok_or_else(|| Error::Domain("resolutions list is empty".into()))?;

    let gate_map = match fixture.as_str() {
        "legendrian" => legendrian_map(res0)?,
        "complex_line" => complex_line_map(res0)?,
        other => {
            return Err(Error::Domain(format!(
                "unknown fixture '{other}' (legendrian, complex_line)"
            )))
        }
    };
    let adm = admissibility_check(&dist, &gate_map, tol)?;
    if !adm.admissible {
        let mut csv = String::from("element,condition,value\n");
        for v in &adm.violations {
            csv.push_str(&format!("{},{},{:e}\n", v.element, v.condition, v.value));
        }
        atomic_write(&common.out.join("solve_linearized_violations.csv"), &csv)?;
        let mut rb = ReportBuilder::new("linearized solve");
        rb.kv("fixture", &fixture).kv("resolution", res0);
        rb.section("admissibility");
        rb.kv("admissible elements", format!("{}/{}", 0, adm.elements))
            .kv("immersion violations", adm.counts.immersion)
            .kv("transversality violations", adm.counts.transversality)
            .kv("totally-real violations", adm.counts.totally_real)
            .kv("ellipticity violations", adm.counts.ellipticity)
            .kv("max discriminant", format!("{:.6e}", adm.max_discriminant))
            .kv("violations csv", "solve_linearized_violations.csv");
        rb.blank().kv("status", "FAIL (base map is not admissible)");
        finish(&common.out, "solve_linearized_report.txt", rb, &cfg)?;
        return Ok(1);
    }

    struct Row {
        res: u32,
        h: f64,
        a_l2: f64,
        b_l2: f64,
        s_sup: f64,
        residual: f64,
        bound: f64,
    }
    let mut rows: Vec<Row> = Vec::new();
    for &res in &resolutions {
        let m = manufactured_solution(res)?;
        let mesh = m.map.mesh.clone();
        // The inverse matches Dirichlet traces, so hand it the exact ones.
        let (target, scale, bdry) = match data.as_str() {
            "manufactured" => (
                m.target.clone(),
                pair_sup(&m.target),
                BoundaryData::from_fields(&mesh, &m.a, &m.b),
            ),
            "zero" => {
                let n = mesh.num_elements();
                (
                    [OneFormField::zeros(n), OneFormField::zeros(n)],
                    1.0,
                    BoundaryData::zero(&mesh),
                )
            }
            other => {
                return Err(Error::Domain(format!(
                    "unknown data '{other}' (manufactured, zero)"
                )))
            }
        };
        let sol = right_inverse(&dist, &m.map, &target[0], &target[1], &bdry)?;
        let s = &sol.section;
        let (a_ref, b_ref, d0_ref): (&[f64], &[f64], &[Point6]) = if data == "manufactured" {
            (&m.a, &m.b, &m.d0_ambient)
        } else {
            (&[], &[], &[])
        };
        let mut a_err = vec![0.0; s.a.len()];
        let mut b_err = vec![0.0; s.b.len()];
        let mut s_sup = 0.0f64;
        for i in 0..s.a.len() {
            a_err[i] = s.a[i] - a_ref.get(i).copied().unwrap_or(0.0);
            b_err[i] = s.b[i] - b_ref.get(i).copied().unwrap_or(0.0);
            s_sup = s_sup.max(a_err[i].abs()).max(b_err[i].abs());
        }
        for (e, d0) in s.d0_ambient.iter().enumerate() {
            let want = d0_ref.get(e).copied().unwrap_or_else(Point6::zeros);
            s_sup = s_sup.max((d0 - want).amax());
        }
        let image = apply_linearization(&dist, &m.map, s)?;
        let residual = image[0]
            .sub(&target[0])
            .sup()
            .max(image[1].sub(&target[1]).sup());
        rows.push(Row {
            res,
            h: mesh.h,
            a_l2: crate::disc::mesh_l2(&mesh, &a_err),
            b_l2: crate::disc::mesh_l2(&mesh, &b_err),
            s_sup,
            residual,
            bound: 5.0 * mesh.h * scale,
        });
    }

    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let rate = |pick: &dyn Fn(&Row) -> f64| -> Option<f64> {
        let errs: Vec<f64> = rows.iter().map(|r| pick(r)).collect();
        crate::disc::observed_order(&hs, &errs)
    };

    let mut csv = String::from("resolution,h,a_l2,b_l2,s_sup,residual,bound\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.res, r.h, r.a_l2, r.b_l2, r.s_sup, r.residual, r.bound
        ));
    }
    atomic_write(&common.out.join("solve_linearized.csv"), &csv)?;

    let mut rb = ReportBuilder::new("linearized solve");
    rb.kv("fixture", &fixture)
        .kv("data", &data)
        .kv("csv", "solve_linearized.csv");
    rb.section("convergence");
    rb.table(
        &["res", "h", "|a - a*|_L2", "|b - b*|_L2", "|s - s*|_0", "residual", "bound"],
        &rows
            .iter()
            .map(|r| {
                vec![
                    r.res.to_string(),
                    format!("{:.4e}", r.h),
                    format!("{:.6e}", r.a_l2),
                    format!("{:.6e}", r.b_l2),
                    format!("{:.6e}", r.s_sup),
                    format!("{:.6e}", r.residual),
                    format!("{:.6e}", r.bound),
                ]
            })
            .collect::<Vec<_>>(),
    );

    let pass;
    if data == "manufactured" {
        let a_rate = rate(&|r: &Row| r.a_l2);
        let s_rate = rate(&|r: &Row| r.s_sup);
        let residual_ok = rows.iter().all(|r| r.residual <= r.bound);
        rb.blank();
        match (a_rate, s_rate) {
            (Some(ar), Some(sr)) => {
                rb.kv("observed L2 order of a", format!("{ar:.2}"))
                    .kv("observed sup order of s", format!("{sr:.2}"))
                    .kv("required orders", format!("{min_order_a:.2} / {min_order_s:.2}"));
                pass = ar >= min_order_a && sr >= min_order_s && residual_ok;
            }
            _ => {
                rb.line("not enough resolutions for a rate estimate");
                pass = residual_ok && rows.len() == 1;
            }
        }
        rb.kv(
            "consistency residual within 5h bound",
            if residual_ok { "yes" } else { "no" },
        );
    } else {
        let worst = rows.iter().fold(0.0f64, |m, r| m.max(r.s_sup));
        rb.blank().kv("worst |s|_0 for zero data", format!("{worst:.3e}"));
        pass = worst < 1e-12;
    }
    rb.blank().kv("status", if pass { "PASS" } else { "FAIL" });
    finish(&common.out, "solve_linearized_report.txt", rb, &cfg)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_invert(common: &CommonArgs) -> Result<i32> {
    let cfg = build_config(common)?;
    let resolution = cfg.get_u32("resolution", 32)?;
    let seed = cfg.get_u64("seed", 7)?;
    let amplitude = cfg.get_f64("amplitude", 1e-3)?;
    let min_drop = cfg.get_f64("min_drop", 1e3)?;
    let opts = solve_options(&cfg)?;

    let dist = holomorphic_contact_model();
    let base = legendrian_map(resolution)?;
    let f0 = perturbed_map(&base, seed, amplitude)?;
    let n = f0.mesh.num_elements();
    let zero_target = [OneFormField::zeros(n), OneFormField::zeros(n)];

    let mut rb = ReportBuilder::new("newton inversion");
    rb.kv("resolution", resolution)
        .kv("seed", seed)
        .kv("perturbation |.|_1 amplitude", format!("{amplitude:e}"))
        .kv("max iterations", opts.max_iters)
        .kv("required residual drop", format!("{min_drop:e}"));

    match newton_invert(&dist, &f0, &zero_target, &opts) {
        Ok(outcome) => {
            rb.section("iterations");
            let rows: Vec<Vec<String>> = outcome
                .log
                .residuals
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    vec![
                        i.to_string(),
                        format!("{r:.6e}"),
                        if i == 0 {
                            "-".into()
                        } else {
                            format!("{:.4}", outcome.log.taus[i - 1])
                        },
                    ]
                })
                .collect();
            rb.table(&["iter", "residual", "tau"], &rows);
            let first = outcome.log.residuals[0];
            let last = *outcome.log.residuals.last().unwrap_or(&f64::NAN);
            let drop = if last > 0.0 { first / last } else { f64::INFINITY };
            let adm = admissibility_check(&dist, &outcome.map, opts.admissibility_tol)?;
            write_map(common.out.join("invert_map.json"), &outcome.map)?;
            write_map(common.out.join("invert_map.csv"), &outcome.map)?;
            rb.blank()
                .kv("resolved residual target", format!("{:.6e}", outcome.log.resolved_target))
                .kv("residual drop factor", format!("{drop:.3e}"))
                .kv("increment norm", format!("{:.6e}", outcome.log.increment_norm))
                .kv("final map admissible", if adm.admissible { "yes" } else { "no" })
                .kv("map", "invert_map.json");
            let pass =
                matches!(outcome.status, NewtonStatus::Converged) && drop >= min_drop && adm.admissible;
            rb.blank().kv(
                "status",
                if pass {
                    "PASS".to_string()
                } else {
                    format!(
                        "FAIL ({})",
                        match outcome.status {
                            NewtonStatus::Converged => "insufficient residual drop",
                            NewtonStatus::MaxIters => "iteration budget exhausted",
                        }
                    )
                },
            );
            finish(&common.out, "invert_report.txt", rb, &cfg)?;
            Ok(if pass { 0 } else { 1 })
        }
        Err(err @ (Error::Stagnation { .. } | Error::Guard { .. })) => {
            rb.section("outcome");
            rb.line(&format!("solver stopped: {err}"));
            rb.blank().kv("status", "FAIL");
            finish(&common.out, "invert_report.txt", rb, &cfg)?;
            Ok(1)
        }
        Err(other) => Err(other),
    }
}

fn cmd_homotopy(common: &CommonArgs) -> Result<i32> {
    let cfg = build_config(common)?;
    let resolution = cfg.get_u32("resolution", 32)?;
    let defect_order = cfg.get_u32("defect_order", 2)?;
    let amplitude = cfg.get_f64("amplitude", 1e-4)?;
    let sigma = Point2::new(cfg.get_f64("sigma_x", 0.0)?, cfg.get_f64("sigma_y", 0.0)?);
    let r = cfg.get_usize("order", 2)?;
    let t_samples = cfg.get_usize("t_samples", 5)?;
    let w_max = cfg.get_f64("w_residual_max", 1e-6)?;

    let dist = holomorphic_contact_model();
    let f = match cfg.get_str("map_file") {
        Some(path) => read_map(path)?,
        None => defect_map(resolution, defect_order, amplitude)?,
    };
    let g0 = f.pullback_pair(&dist)?;
    let defect_sup = pair_sup(&g0);

    let mut opts = solve_options(&cfg)?;
    if opts.residual_target == 0.0 {
        // Target relative to the defect size: the discrete elimination
        // cannot resolve below the cutoff's h^2 transition-zone floor.
        opts.residual_target = cfg.get_f64("residual_target_rel", 0.01)? * defect_sup;
    }
    let eps = if cfg.contains("eps") {
        cfg.get_f64("eps", 0.0)?
    } else {
        let probe = make_cutoff(&dist, &f, &sigma, r, f64::INFINITY)?;
        cfg.get_f64("eps_rel", 0.6)? * probe.norm
    };

    let mut rb = ReportBuilder::new("defect homotopy");
    rb.kv("resolution", f.mesh.resolution)
        .kv("marked point", format!("({}, {})", sigma.x, sigma.y))
        .kv("required vanishing order", r)
        .kv("defect sup", format!("{defect_sup:.6e}"))
        .kv("smallness budget eps", format!("{eps:.6e}"))
        .kv("per-step residual target", format!("{:.6e}", opts.residual_target))
        .kv("parameter samples", t_samples);

    match homotopy_family(&dist, &f, &sigma, r, eps, &opts, t_samples) {
        Ok(result) => {
            rb.section("continuation");
            rb.table(
                &["t", "iterations", "residual", "refinements", "admissible"],
                &result
                    .steps
                    .iter()
                    .map(|s| {
                        vec![
                            format!("{:.4}", s.t),
                            s.iterations.to_string(),
                            format!("{:.6e}", s.residual),
                            s.refinements.to_string(),
                            if s.admissible { "yes".into() } else { "no".into() },
                        ]
                    })
                    .collect::<Vec<_>>(),
            );
            write_map(
                common.out.join("homotopy_final.json"),
                result.family.last().expect("nonempty family"),
            )?;
            if cfg.get_bool("export_family", false)? {
                for (i, member) in result.family.iter().enumerate() {
                    write_map(common.out.join(format!("homotopy_map_{i:03}.csv")), member)?;
                }
            }
            let all_admissible = result.steps.iter().all(|s| s.admissible);
            let pass = result.w_residual <= w_max && all_admissible;
            rb.blank()
                .kv("plateau radius", format!("{:.4}", result.w_radius))
                .kv("support radius", format!("{:.4}", result.support_radius))
                .kv("final defect sup on the plateau", format!("{:.6e}", result.w_residual))
                .kv("plateau residual bound", format!("{w_max:e}"))
                .kv("final map", "homotopy_final.json");
            rb.blank().kv("status", if pass { "PASS" } else { "FAIL" });
            finish(&common.out, "homotopy_report.txt", rb, &cfg)?;
            Ok(if pass { 0 } else { 1 })
        }
        Err(
            err @ (Error::Continuation { .. } | Error::Stagnation { .. } | Error::Guard { .. }),
        ) => {
            rb.section("outcome");
            rb.line(&format!("continuation stopped: {err}"));
            rb.blank().kv("status", "FAIL");
            finish(&common.out, "homotopy_report.txt", rb, &cfg)?;
            Ok(1)
        }
        Err(other) => Err(other),
    }
}

fn cmd_fixtures(common: &CommonArgs) -> Result<i32> {
    let cfg = build_config(common)?;
    let resolution = cfg.get_u32("resolution", 16)?;
    let seed = cfg.get_u64("seed", 7)?;
    let amplitude = cfg.get_f64("amplitude", 1e-3)?;
    let defect_order = cfg.get_u32("defect_order", 2)?;
    let defect_amplitude = cfg.get_f64("defect_amplitude", 1e-4)?;
    let tol = cfg.get_f64("admissibility_tol", DEFAULT_ADMISSIBILITY_TOL)?;

    let dist = holomorphic_contact_model();
    let base = legendrian_map(resolution)?;
    let fixtures: Vec<(&str, MeshMap)> = vec![
        ("legendrian", base.clone()),
        ("perturbed", perturbed_map(&base, seed, amplitude)?),
        ("defect", defect_map(resolution, defect_order, defect_amplitude)?),
        ("complex_line", complex_line_map(resolution)?),
    ];

    let mut rb = ReportBuilder::new("fixture maps");
    rb.kv("resolution", resolution).kv("seed", seed);
    rb.section("maps");
    let mut rows = Vec::new();
    for (name, map) in &fixtures {
        write_map(common.out.join(format!("{name}.csv")), map)?;
        write_map(common.out.join(format!("{name}.json")), map)?;
        let (r1, r2) = horizontality_residual(&dist, map)?;
        let adm = admissibility_check(&dist, map, tol)?;
        rows.push(vec![
            (*name).to_string(),
            map.mesh.num_nodes().to_string(),
            format!("{r1:.6e}"),
            format!("{r2:.6e}"),
            if adm.admissible { "yes".into() } else { "no".into() },
            adm.counts.total().to_string(),
        ]);
    }
    rb.table(
        &["fixture", "nodes", "|f*alpha1|_0", "|f*alpha2|_0", "admissible", "violations"],
        &rows,
    );
    rb.blank().kv("status", "PASS");
    finish(&common.out, "fixtures_report.txt", rb, &cfg)?;
    Ok(0)
}
