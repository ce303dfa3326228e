use anyhow::{anyhow, Context, Result};
use rand::{Rng, SeedableRng};
use serde_json::json;
use std::fmt::Write as _;
use std::path::PathBuf;
use tubelab_continuation::compare::{amplitude_samples, onset_slope};
use tubelab_continuation::switch::branch_mode;
use tubelab_continuation::{
    bifurcations_json, branch_csv, constrained_stability, continue_branch, continue_to_lambda2, detect_bifurcations,
    switch_branch, trivial_state, BifurcationPoint, BranchKind, BranchState, ContinuationSettings,
};
use tubelab_core::amplitude::{classify_coil_buckle, coil_buckle_coeffs, pearling_ae, wrinkling_ae, BranchClassification};
use tubelab_core::linstab::{
    bifurcation_point, coil_neutral_lambda2, pearl_extrema, pearl_neutral_lambda2, stability_window, wrinkle_neutral_lambda2,
    POLE_GUARD,
};
use tubelab_core::CoreError;
use tubelab_solver::{perturb_bump, perturb_eigen, run_flow, trajectory_csv, FlowState, StopReason};
use tubelab_surface::deform::displace;
use tubelab_surface::geometry::{gauss_curvature, geometry_report, mean_curvature};
use tubelab_surface::io::write_mesh;
use tubelab_surface::SurfaceMesh;

use crate::config::{
    emit, AeConfig, CompareConfig, ContinueConfig, FlowConfig, MeshConfig, PerturbationSpec, StabilityConfig, StartSpec,
};

/// Output directory, seed and verbosity shared by all commands.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub out: PathBuf,
    pub seed: u64,
    pub verbose: bool,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

pub fn cmd_stability(cfg: &StabilityConfig, ctx: &Ctx) -> Result<String> {
    cfg.validate()?;
    ctx.write("config.json", &emit(cfg))?;
    let wrinkle = wrinkle_neutral_lambda2(cfg.wrinkle_n)?;
    let mut curves = String::from("c0,k,kappa,pearl_lambda2,coil_lambda2,wrinkle_lambda2,pole\n");
    let mut window = String::from("c0,L,lambda2_lo,lo_m,lo_n,lambda2_hi,hi_m,hi_n,stable_window,critical_period\n");
    let mut summary = String::new();
    let mut records = Vec::new();
    for &c0 in &cfg.c0 {
        let mut ks: Vec<f64> = (1..=cfg.k_samples).map(|i| cfg.k_max * i as f64 / cfg.k_samples as f64).collect();
        // The pearling curve has a pole at κ = 1 unless c0 = 1/2; it gets its own
        // marked row so that plots never join the two sides.
        if c0 != 0.5 && cfg.k_max > 1.0 && !ks.iter().any(|k| (k * k - 1.0).abs() < POLE_GUARD) {
            let at = ks.partition_point(|&k| k < 1.0);
            ks.insert(at, 1.0);
        }
        for k in ks {
            let kappa = k * k;
            let (pearl, pole) = match pearl_neutral_lambda2(kappa, c0) {
                Ok(v) => (f(v), 0),
                Err(CoreError::Pole { .. }) => (String::new(), 1),
                Err(e) => return Err(e.into()),
            };
            let _ = writeln!(curves, "{},{},{},{},{},{},{}", f(c0), f(k), f(kappa), pearl, f(coil_neutral_lambda2(k, c0)), f(wrinkle), pole);
        }

        let w = stability_window(c0, cfg.l)?;
        let period = pearl_extrema(c0).filter(|e| e.finite_wavelength).and_then(|e| e.critical_period());
        let mode = |m: Option<tubelab_core::linstab::Mode>| m.map(|m| (m.m.to_string(), m.n.to_string())).unwrap_or_default();
        let (lo_m, lo_n) = mode(w.lo_mode);
        let (hi_m, hi_n) = mode(w.hi_mode);
        let _ = writeln!(
            window,
            "{},{},{},{lo_m},{lo_n},{},{hi_m},{hi_n},{},{}",
            f(c0),
            f(cfg.l),
            f(w.lambda2_lo),
            f(w.lambda2_hi),
            w.exists,
            opt(period)
        );
        if w.exists {
            let _ = writeln!(
                summary,
                "c0 = {c0}  L = {}  window ({:.6}, {:.6})  lo mode ({lo_m},{lo_n})  hi mode ({hi_m},{hi_n})",
                cfg.l, w.lambda2_lo, w.lambda2_hi
            );
        } else {
            let _ = writeln!(summary, "c0 = {c0}  L = {}  no stable window", cfg.l);
        }
        records.push(json!({
            "c0": c0,
            "L": cfg.l,
            "lambda2_lo": w.lambda2_lo,
            "lambda2_hi": w.lambda2_hi,
            "no_stable_window": !w.exists,
            "critical_period": period,
        }));
    }
    ctx.write("neutral_curves.csv", &curves)?;
    ctx.write("window.csv", &window)?;
    ctx.write_json("summary.json", &json!(records))?;
    Ok(summary)
}

fn classification_label(c: &BranchClassification) -> &'static str {
    match (c.coiling_stable, c.buckling_stable) {
        (true, false) => "coiling_stable",
        (false, true) => "buckling_stable",
        (true, true) => "both_stable",
        (false, false) => "none_stable",
    }
}

pub fn cmd_ae(cfg: &AeConfig, ctx: &Ctx) -> Result<String> {
    cfg.validate()?;
    ctx.write("config.json", &emit(cfg))?;
    let mut pearl = String::from("c0,L,m,k,lambda2_crit,lambda1_crit,a,b,beta2,steady_amplitude\n");
    let mut wrinkle = String::from("c0,lambda2_crit,lambda1_crit,a,b,beta2,steady_amplitude\n");
    let mut coil =
        String::from("c0,L,m,k,lambda2_crit,a,b1,b2,beta2_coil,beta2_buckle,sigma2_coil,sigma2_buckle,classification\n");
    let mut summary = String::new();
    for &c0 in &cfg.c0 {
        match pearling_ae(c0, cfg.l, cfg.m) {
            Ok(ae) => {
                let _ = writeln!(
                    pearl,
                    "{},{},{},{},{},{},{},{},{},{}",
                    f(c0),
                    f(cfg.l),
                    cfg.m,
                    f(ae.k),
                    f(ae.lambda2_crit),
                    f(ae.lambda1_crit),
                    f(ae.a),
                    f(ae.b),
                    f(ae.beta2),
                    opt(ae.steady_amplitude())
                );
            }
            Err(e) => {
                let _ = writeln!(pearl, "{},{},{},,,,,,,", f(c0), f(cfg.l), cfg.m);
                let _ = writeln!(summary, "c0 = {c0}: pearling coefficients unavailable ({e})");
            }
        }
        let w = wrinkling_ae(c0);
        let _ = writeln!(
            wrinkle,
            "{},{},{},{},{},{},{}",
            f(c0),
            f(w.lambda2_crit),
            f(w.lambda1_crit),
            f(w.a),
            f(w.b),
            f(w.beta2),
            opt(w.steady_amplitude())
        );
        match coil_buckle_coeffs(c0, cfg.l, cfg.m).and_then(|c| classify_coil_buckle(&c).map(|k| (c, k))) {
            Ok((c, k)) => {
                let label = classification_label(&k);
                let _ = writeln!(
                    coil,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{label}",
                    f(c0),
                    f(cfg.l),
                    cfg.m,
                    f(c.k),
                    f(c.lambda2_crit),
                    f(c.a),
                    f(c.b1),
                    f(c.b2),
                    f(c.beta2_coil),
                    f(c.beta2_buckle),
                    f(k.sigma2_coil),
                    f(k.sigma2_buckle)
                );
                let _ = writeln!(summary, "c0 = {c0}  L = {}  (a, b1, b2) = ({:.4}, {:.4}, {:.4})  {label}", cfg.l, c.a, c.b1, c.b2);
            }
            Err(e) => {
                let _ = writeln!(coil, "{},{},{},,,,,,,,,,", f(c0), f(cfg.l), cfg.m);
                let _ = writeln!(summary, "c0 = {c0}: coil/buckle coefficients unavailable ({e})");
            }
        }
    }
    ctx.write("pearling.csv", &pearl)?;
    ctx.write("wrinkling.csv", &wrinkle)?;
    ctx.write("coil_buckle.csv", &coil)?;
    Ok(summary)
}

fn write_state_mesh(ctx: &Ctx, mesh: &SurfaceMesh, stem: &str) -> Result<()> {
    let dofs = mesh.dofs();
    let h = dofs.to_vertices(&mean_curvature(mesh)?);
    let k = dofs.to_vertices(&gauss_curvature(mesh)?);
    write_mesh(mesh, &ctx.out, stem, &[("H", &h), ("K", &k)])?;
    Ok(())
}

fn report_json(mesh: &SurfaceMesh, c0: f64) -> Result<serde_json::Value> {
    let g = geometry_report(mesh, c0)?;
    Ok(json!({
        "n_dofs": mesh.n_dofs(),
        "area": g.area,
        "volume": g.volume,
        "energy": g.energy,
        "normalized_energy": g.normalized_energy,
        "reduced_volume": g.reduced_volume,
        "mesh_quality": g.mesh_quality,
    }))
}

pub fn cmd_mesh(cfg: &MeshConfig, ctx: &Ctx) -> Result<String> {
    cfg.validate()?;
    ctx.write("config.json", &emit(cfg))?;
    let mut mesh = cfg.mesh.build()?;
    if cfg.jitter > 0.0 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(ctx.seed);
        let u: Vec<f64> = (0..mesh.n_dofs()).map(|_| rng.gen_range(-cfg.jitter..=cfg.jitter)).collect();
        mesh = displace(&mesh, &u)?;
    }
    write_state_mesh(ctx, &mesh, "mesh")?;
    let report = report_json(&mesh, cfg.c0)?;
    ctx.write_json("geometry.json", &report)?;
    Ok(format!("mesh with {} dofs, {} triangles\n", mesh.n_dofs(), mesh.triangles.len()))
}

/// The straight tube at the analytic critical λ₂ of `mode`, standing in for a
/// localized bifurcation point.
fn analytic_bp(mesh: SurfaceMesh, mode: (i32, i32), settings: &ContinuationSettings) -> Result<BifurcationPoint> {
    let lambda2 = bifurcation_point(mode.0, mode.1, mesh.period, settings.c0, mesh.radius)?;
    let state = trivial_state(mesh, lambda2, settings)?;
    let multiplicity = if mode.0 == 0 || mode.1 == 0 { 2 } else { 4 };
    Ok(BifurcationPoint {
        lambda2,
        mode_m: mode.0,
        mode_n: mode.1,
        multiplicity,
        lambda1: state.lambda.0,
        arclength: 0.0,
        state: Some(state),
        kernel: Vec::new(),
    })
}

fn flow_start(cfg: &FlowConfig, ctx: &Ctx) -> Result<(SurfaceMesh, (f64, f64), Option<BranchState>)> {
    let mesh = cfg.mesh.build()?;
    match &cfg.start {
        StartSpec::Cylinder { lambda2 } => {
            // The discrete tube is steady with its own mean curvature.
            let h = mean_curvature(&mesh)?;
            let hbar = h.iter().sum::<f64>() / h.len() as f64;
            let lambda1 = hbar * hbar - cfg.c0 * cfg.c0 - lambda2 / (2.0 * hbar);
            Ok((mesh, (lambda1, *lambda2), None))
        }
        StartSpec::Branch { kind, mode, lambda2, epsilon, ds, max_steps } => {
            let settings = ContinuationSettings { c0: cfg.c0, stability: false, track_mode: (mode[0], mode[1]), ..Default::default() };
            let bp = analytic_bp(mesh, (mode[0], mode[1]), &settings)?;
            ctx.note(format!("switching onto {kind:?} at λ₂ = {:.6}", bp.lambda2));
            let seed = switch_branch(&bp, *kind, *epsilon, &settings)?;
            let branch = continue_to_lambda2(&seed, *lambda2, *max_steps, *ds, &settings)?;
            let state = branch.states.last().unwrap().clone();
            ctx.note(format!("start state at Λ = ({:.6}, {:.6}) after {} steps", state.lambda.0, state.lambda.1, branch.states.len() - 1));
            Ok((state.mesh.clone(), state.lambda, Some(state)))
        }
    }
}

pub fn cmd_flow(cfg: &FlowConfig, ctx: &Ctx) -> Result<String> {
    cfg.validate()?;
    ctx.write("config.json", &emit(cfg))?;
    let (mesh, lambda, state) = flow_start(cfg, ctx)?;
    let perturbed = match cfg.perturbation {
        PerturbationSpec::None => mesh.clone(),
        PerturbationSpec::Bump { delta, xi } => perturb_bump(&mesh, delta, xi)?,
        PerturbationSpec::Eigen { delta } => {
            let st = state.as_ref().ok_or_else(|| anyhow!("eigen perturbation needs a branch start"))?;
            let stab = constrained_stability(st, cfg.c0, ContinuationSettings::default().n_eigs)?;
            let v = stab.vectors.first().ok_or_else(|| anyhow!("no eigenvector at the start state"))?;
            perturb_eigen(&mesh, v, delta)?
        }
    };
    write_state_mesh(ctx, &perturbed, "start")?;
    let flow0 = FlowState::new(perturbed, lambda, cfg.c0, cfg.controls.h0)?;
    let run = run_flow(&flow0, &cfg.controls)?;
    ctx.write("trajectory.csv", &trajectory_csv(&run.rows))?;
    write_state_mesh(ctx, &run.state.mesh, "final")?;
    let max_a = run.rows.iter().map(|r| r.area_rel_err.abs()).fold(0.0, f64::max);
    let max_v = run.rows.iter().map(|r| r.vol_rel_err.abs()).fold(0.0, f64::max);
    let stop = match run.stop {
        StopReason::Converged => "converged",
        StopReason::TimeLimit => "time_limit",
        StopReason::StepLimit => "step_limit",
    };
    ctx.write_json(
        "summary.json",
        &json!({
            "stop": stop,
            "rows": run.rows.len(),
            "lambda_start": [lambda.0, lambda.1],
            "lambda_end": [run.state.lambda.0, run.state.lambda.1],
            "max_area_drift": max_a,
            "max_volume_drift": max_v,
            "energy_violations": run.energy_violations,
            "reduced_steps": run.reduced_steps,
            "warnings": run.warnings,
            "final": report_json(&run.state.mesh, cfg.c0)?,
        }),
    )?;
    let mut s = format!(
        "{stop} after {} rows at t = {:.4}\nΛ: ({:.4}, {:.4}) -> ({:.4}, {:.4})\nmax drift: area {max_a:.2e}, volume {max_v:.2e}\n",
        run.rows.len(),
        run.state.time,
        lambda.0,
        lambda.1,
        run.state.lambda.0,
        run.state.lambda.1
    );
    for w in &run.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    Ok(s)
}

pub fn cmd_continue(cfg: &ContinueConfig, ctx: &Ctx) -> Result<String> {
    cfg.validate()?;
    ctx.write("config.json", &emit(cfg))?;
    let settings = ContinuationSettings { stability: true, ..cfg.settings };
    let start = trivial_state(cfg.mesh.build()?, cfg.lambda2_start, &settings)?;
    let trivial = continue_branch(&start, cfg.direction, cfg.steps, cfg.ds, &settings)?;
    ctx.write("trivial.csv", &branch_csv(&trivial))?;
    let bps = detect_bifurcations(&trivial, &settings)?;
    ctx.write("bifurcations.json", &(bifurcations_json(&bps) + "\n"))?;
    let mut s = String::new();
    if let Some(why) = &trivial.stopped {
        let _ = writeln!(s, "trivial branch stopped early: {why}");
    }
    for bp in &bps {
        let _ = writeln!(s, "bifurcation at λ₂ = {:.6}, mode ({},{}), multiplicity {}", bp.lambda2, bp.mode_m, bp.mode_n, bp.multiplicity);
    }
    for sw in &cfg.switches {
        let Some(bp) = bps.iter().find(|bp| branch_mode(sw.kind, bp).is_ok()) else {
            let _ = writeln!(s, "no bifurcation point fits a {:?} branch", sw.kind);
            continue;
        };
        let (m, n) = (bp.mode_m, bp.mode_n);
        ctx.note(format!("switching onto {:?} at λ₂ = {:.6}", sw.kind, bp.lambda2));
        let local = ContinuationSettings { track_mode: (m, n), ..settings };
        let seed = switch_branch(bp, sw.kind, sw.epsilon, &local)?;
        let branch = continue_branch(&seed, 1.0, sw.steps, sw.ds, &local)?;
        let name = format!("branch_{}_{m}_{n}.csv", format!("{:?}", sw.kind).to_lowercase());
        ctx.write(&name, &branch_csv(&branch))?;
        let last = branch.states.last().unwrap();
        let _ = writeln!(
            s,
            "{:?} branch: {} states to λ₂ = {:.6}, |amplitude| = {:.4}{}",
            sw.kind,
            branch.states.len(),
            last.lambda.1,
            last.amplitude.norm(),
            branch.stopped.as_ref().map(|w| format!(" (stopped: {w})")).unwrap_or_default()
        );
    }
    Ok(s)
}

/// Numerical onset slope of |amplitude|² against λ₂ next to the amplitude-equation one.
pub fn cmd_compare(cfg: &CompareConfig, ctx: &Ctx) -> Result<String> {
    cfg.validate()?;
    ctx.write("config.json", &emit(cfg))?;
    let (mode, ae) = match cfg.kind {
        BranchKind::Pearling => ((1, 0), pearling_ae(cfg.c0, cfg.mesh.l, 1)?),
        _ => ((0, 2), wrinkling_ae(cfg.c0)),
    };
    let amp = ae.steady_amplitude().ok_or_else(|| anyhow!("the amplitude equation has no real steady branch"))?;
    let predicted = amp * amp / ae.beta2;
    let settings = ContinuationSettings { c0: cfg.c0, stability: false, ds_max: cfg.ds_max, track_mode: mode, ..Default::default() };
    let bp = analytic_bp(cfg.mesh.build()?, mode, &settings)?;
    let seed = switch_branch(&bp, cfg.kind, cfg.epsilon, &settings)?;
    let branch = continue_branch(&seed, 1.0, cfg.steps, cfg.ds, &settings)?;
    ctx.write("branch.csv", &branch_csv(&branch))?;
    let samples = amplitude_samples(&branch.states, cfg.max_amp);
    let slope = onset_slope(&samples).ok_or_else(|| anyhow!("only {} states with |amplitude| ≤ {}", samples.len(), cfg.max_amp))?;
    let mut table = String::from("amplitude,lambda2_numeric,lambda2_predicted\n");
    for &(l2, a2) in &samples {
        let _ = writeln!(table, "{},{},{}", f(a2.sqrt()), f(l2), f(ae.lambda2_crit + a2 / predicted));
    }
    ctx.write("compare.csv", &table)?;
    let deviation = (slope - predicted).abs() / predicted.abs();
    ctx.write_json(
        "summary.json",
        &json!({
            "kind": cfg.kind,
            "lambda2_crit": ae.lambda2_crit,
            "slope_numeric": slope,
            "slope_predicted": predicted,
            "max_relative_deviation": deviation,
            "samples": samples.len(),
        }),
    )?;
    Ok(format!(
        "{:?}: d|A|²/dλ₂ numeric {slope:.6}, predicted {predicted:.6}, max relative slope deviation {:.2}%\n",
        cfg.kind,
        100.0 * deviation
    ))
}
