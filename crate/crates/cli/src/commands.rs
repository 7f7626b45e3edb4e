use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use platoon_core::export::{
    write_frequency_response_csv, write_monte_carlo_csv, write_region_csv, write_signal_trace_csv,
    write_trajectory_csv,
};
use platoon_core::noise::{effective_gain, expected_noise_factor, ChannelSpec, Snr};
use platoon_core::platoon::GainSet;
use platoon_core::sim::{communicated_signal_trace, monte_carlo_mean};
use platoon_core::stability::{
    build_tf, frequency_response, log_grid, robust_verdict, Classification, StabilityVerdict,
};
use platoon_core::synthesis::{
    classify_headway, feasible_region, headway_lower_bound, ka_upper_bound, synthesize, GridBox,
    HeadwayStatus, RegionParams, SynthesisResult,
};
use platoon_core::tolerances::{OMEGA_MAX, OMEGA_MIN, RATIO_TOLERANCE};
use platoon_core::trajectory::{
    amplification_ratios, is_string_stable, max_ratio, platoon_length, sup_norm,
};
use platoon_core::{simulate, SimMode, Trajectory};
use serde::Serialize;

use crate::args::{GainArgs, OutputArgs, RegionArgs, RunArgs, ScenarioArgs, SweepArgs, SynthArgs};
use crate::config::RunConfig;
use crate::svg::{self, Series};

pub const OUT_DIR_ENV: &str = "PLATOON_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "platoon-out";
const RESPONSE_POINTS: usize = 400;

/// Loads the config (if any) and applies scenario flags.
pub fn scenario_config(s: &ScenarioArgs) -> Result<RunConfig> {
    let mut cfg = match &s.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(rho) = s.rho {
        cfg.channel.rho = Some(rho);
        cfg.channel.snr_db = None;
    }
    if let Some(db) = s.snr_db {
        cfg.channel.snr_db = Some(db);
        cfg.channel.rho = None;
    }
    if let Some(tau0) = s.tau0 {
        let old = cfg.platoon.tau0;
        cfg.platoon.tau0 = tau0;
        if cfg.platoon.tau == old || cfg.platoon.tau > tau0 {
            cfg.platoon.tau = tau0;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_gains(cfg: &mut RunConfig, g: &GainArgs) {
    let gains = &mut cfg.gains;
    gains.ka = g.ka.or(gains.ka);
    gains.kv = g.kv.or(gains.kv);
    gains.kp = g.kp.or(gains.kp);
    gains.hw = g.hw.or(gains.hw);
}

pub fn run_config(a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = scenario_config(&a.scenario)?;
    apply_gains(&mut cfg, &a.gains);
    if let Some(seed) = a.seed {
        cfg.run.seed = seed;
    }
    if let Some(mode) = a.mode {
        cfg.run.mode = mode;
    }
    if let Some(runs) = a.runs {
        cfg.run.runs = runs;
    }
    if let Some(out) = &a.output.out {
        cfg.run.out_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Where output files go.
struct Output {
    dir: PathBuf,
    svg: bool,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(args: &OutputArgs, cfg: &RunConfig) -> Result<Self> {
        let dir = output_dir(args.out.as_deref(), cfg);
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir,
            svg: args.svg,
            written: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let file =
            File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    fn svg(&mut self, name: &str, render: impl FnOnce() -> String) -> Result<()> {
        if self.svg {
            let text = render();
            self.write(name, |w| w.write_all(text.as_bytes()))?;
        }
        Ok(())
    }

    fn files(&self) -> Vec<String> {
        self.written
            .iter()
            .map(|p| p.display().to_string())
            .collect()
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

fn headway_text(status: Option<HeadwayStatus>, lb: Option<f64>) -> String {
    match (status, lb) {
        (Some(HeadwayStatus::Above), Some(lb)) => format!("above the robust bound {lb:.6}"),
        (Some(HeadwayStatus::Marginal), Some(lb)) => {
            format!("marginal (equal to the bound {lb:.6}); not certified")
        }
        (Some(HeadwayStatus::Below), Some(lb)) => format!("below the robust bound {lb:.6}"),
        _ => "no bound (k_a outside the admissible range)".into(),
    }
}

#[derive(Serialize)]
struct SynthReport {
    snr_db: f64,
    #[serde(flatten)]
    result: SynthesisResult,
    headway: Option<HeadwayStatus>,
    region_nonempty: Option<bool>,
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let cfg = scenario_config(&a.scenario)?;
    let snr = cfg.snr()?;
    let tau0 = cfg.platoon.tau0;
    let ka = a.ka.or(cfg.gains.ka);
    let hw = a.hw.or(cfg.gains.hw);
    let result = synthesize(snr, tau0, ka, hw)?;
    let headway = result
        .hw_lb
        .zip(hw)
        .map(|(lb, hw)| classify_headway(hw, lb));
    let report = SynthReport {
        snr_db: snr.db(),
        region_nonempty: result.region.map(|r| r.is_nonempty()),
        headway,
        result,
    };
    if a.json {
        return print_json(&report);
    }
    let r = &report.result;
    println!("rho            {} ({:.4} dB)", r.rho, report.snr_db);
    println!("tau0           {}", r.tau0);
    println!("k_a range      (0, {:.6})", r.ka_max);
    if let (Some(ka), Some(lb)) = (r.ka, r.hw_lb) {
        println!("h_lb(k_a)      {lb:.6}  at k_a = {ka}");
    }
    let opt = r.optimal;
    if opt.attained {
        println!("optimal k_a    {:.6}", opt.ka);
        println!("optimal h_lb   {:.6}", opt.hw_lb);
    } else {
        println!("optimal k_a    -> {} (limit, not attained)", opt.ka);
        println!("optimal h_lb   -> {} (limit, not attained)", opt.hw_lb);
    }
    if let (Some(hw), Some(region)) = (r.hw, r.region) {
        println!(
            "h_w            {hw}: {}",
            headway_text(report.headway, r.hw_lb)
        );
        print_region(&region);
    }
    Ok(())
}

fn print_region(r: &RegionParams) {
    println!("a1, b1         {:.6}, {:.6}", r.a1, r.b1);
    println!("a2, b2         {:.6}, {:.6}", r.a2, r.b2);
    println!(
        "region         {} (a1/a2 = {:.6})",
        if r.is_nonempty() { "nonempty" } else { "empty" },
        r.ratio()
    );
}

fn parse_grid(spec: &str) -> Result<(usize, usize)> {
    let parse = |s: &str| -> Result<usize> {
        let n: usize = s
            .trim()
            .parse()
            .with_context(|| format!("bad grid size `{s}`"))?;
        if n == 0 {
            bail!("grid size must be positive");
        }
        Ok(n)
    };
    match spec.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let n = parse(spec)?;
            Ok((n, n))
        }
    }
}

fn range(values: &Option<Vec<f64>>, default: (f64, f64), name: &str) -> Result<(f64, f64)> {
    match values.as_deref() {
        None => Ok(default),
        Some([lo, hi]) if lo.is_finite() && hi.is_finite() && lo <= hi => Ok((*lo, *hi)),
        Some(_) => bail!("--{name} needs `lo,hi` with lo ≤ hi"),
    }
}

#[derive(Serialize)]
struct RegionReport {
    ka: f64,
    hw: f64,
    region: RegionParams,
    nonempty: bool,
    polygon: Vec<(f64, f64)>,
    centroid: Option<(f64, f64)>,
    point: Option<PointReport>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct PointReport {
    kp: f64,
    kv: f64,
    in_s1: bool,
    in_s2: bool,
    in_s: bool,
}

pub fn region(a: &RegionArgs) -> Result<()> {
    let mut cfg = scenario_config(&a.scenario)?;
    apply_gains(&mut cfg, &a.gains);
    cfg.validate()?;
    let snr = cfg.snr()?;
    let tau0 = cfg.platoon.tau0;
    let (ka, hw) = cfg.gains.resolve_ka_hw(snr, tau0, &mut Vec::new())?;
    let region = feasible_region(ka, snr, tau0, hw)?;
    let bounds = GridBox {
        kp: range(
            &a.kp_range,
            (0.0, 1.2 * region.b1.max(region.b2)),
            "kp-range",
        )?,
        kv: range(
            &a.kv_range,
            (0.0, 1.2 * region.a1.max(region.a2)),
            "kv-range",
        )?,
    };
    let (n_kp, n_kv) = parse_grid(&a.grid)?;
    let samples = region.grid(&bounds, n_kp, n_kv);

    let mut out = Output::new(&a.output, &cfg)?;
    out.write("region.csv", |w| {
        write_region_csv(w, &samples, !region.is_nonempty())
    })?;
    let polygon = region.polygon(&bounds);
    let point = match (cfg.gains.kp, cfg.gains.kv) {
        (Some(kp), Some(kv)) => Some(PointReport {
            kp,
            kv,
            in_s1: region.in_s1(kp, kv),
            in_s2: region.in_s2(kp, kv),
            in_s: region.contains(kp, kv),
        }),
        _ => None,
    };
    out.svg("region.svg", || {
        svg::region_chart(
            &format!("feasible region, k_a = {ka:.4}, h_w = {hw:.4}"),
            (bounds.kp, bounds.kv),
            &polygon,
            point.as_ref().map(|p| (p.kp, p.kv)),
        )
    })?;
    let report = RegionReport {
        ka,
        hw,
        region,
        nonempty: region.is_nonempty(),
        centroid: region.interior_point(),
        polygon,
        point,
        files: out.files(),
    };
    if a.output.json {
        return print_json(&report);
    }
    println!("k_a, h_w       {ka}, {hw}");
    print_region(&region);
    if let Some((kp, kv)) = report.centroid {
        println!("centroid       k_p = {kp:.6}, k_v = {kv:.6}");
    }
    if let Some(p) = &report.point {
        println!(
            "({}, {})   S1 {}, S2 {}, in S: {}",
            p.kp,
            p.kv,
            yes_no(p.in_s1),
            yes_no(p.in_s2),
            yes_no(p.in_s)
        );
    }
    print_files(&report.files);
    Ok(())
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn print_files(files: &[String]) {
    for f in files {
        println!("wrote          {f}");
    }
}

fn print_notes(notes: &[String]) {
    for n in notes {
        println!("note           {n}");
    }
}

fn save_if_requested(a: &RunArgs, cfg: &RunConfig, gains: &GainSet) -> Result<()> {
    if let Some(path) = &a.save_config {
        let mut resolved = cfg.clone();
        resolved.gains.ka = Some(gains.ka);
        resolved.gains.kv = Some(gains.kv);
        resolved.gains.kp = Some(gains.kp);
        resolved.gains.hw = Some(gains.hw);
        resolved.save(path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckReport<'a> {
    gains: GainSet,
    gamma: f64,
    rho: f64,
    mean_noise_factor: f64,
    ka_interval: (f64, f64),
    verdict: &'a StabilityVerdict,
    notes: Vec<String>,
    files: Vec<String>,
}

pub fn check(a: &RunArgs) -> Result<()> {
    let cfg = run_config(a)?;
    let spec = cfg.channel_spec()?;
    let resolved = cfg.resolve_gains()?;
    let gains = resolved.gains;
    let tau0 = cfg.platoon.tau0;
    save_if_requested(a, &cfg, &gains)?;
    let verdict = robust_verdict(&spec, tau0, &gains)?;
    let eff = effective_gain(gains.ka, &spec)?;

    let omegas = log_grid(OMEGA_MIN, OMEGA_MAX, RESPONSE_POINTS);
    let curves = [
        ("lower", eff.lower),
        ("mean", eff.nominal),
        ("upper", eff.upper),
    ]
    .into_iter()
    .map(|(label, k)| {
        Ok((
            label,
            frequency_response(&build_tf(&gains, k, tau0)?, &omegas)?,
        ))
    })
    .collect::<Result<Vec<_>>>()?;
    let mut out = Output::new(&a.output, &cfg)?;
    out.write("frequency_response.csv", |w| {
        write_frequency_response_csv(w, &curves[1].1)
    })?;
    out.svg("frequency_response.svg", || {
        let series: Vec<Series> = curves
            .iter()
            .map(|(label, pts)| Series {
                label: format!("k̃_a {label}"),
                points: pts,
            })
            .collect();
        svg::line_chart("|H̃(jω; τ0)|", "ω (rad/s)", "magnitude", &series, true)
    })?;

    let report = CheckReport {
        gains,
        gamma: gains.gamma(),
        rho: spec.snr.factor(),
        mean_noise_factor: expected_noise_factor(&spec),
        ka_interval: (eff.lower, eff.upper),
        verdict: &verdict,
        notes: resolved.notes,
        files: out.files(),
    };
    if a.output.json {
        return print_json(&report);
    }
    print_gains(&gains, &report.notes);
    println!(
        "channel        rho = {}, w̄ = {:.6}, k̃_a in [{:.6}, {:.6}], mean {:.6}",
        report.rho, report.mean_noise_factor, eff.lower, eff.upper, eff.nominal
    );
    println!(
        "internal       {} (γ − τ0·k_p = {:.6})",
        if verdict.internally_stable {
            "stable"
        } else {
            "UNSTABLE"
        },
        gains.gamma() - tau0 * gains.kp
    );
    println!(
        "k_a range      {}",
        if verdict.ka_admissible {
            "admissible"
        } else {
            "outside the certified range (k̃_a may reach 1)"
        }
    );
    println!(
        "headway        {}",
        headway_text(verdict.headway, verdict.hw_lb)
    );
    println!(
        "condition A    margin {:+.6e} {}",
        verdict.analytic.a_margin,
        pass_fail(verdict.analytic.a_margin >= 0.0)
    );
    println!(
        "condition B    margin {:+.6e} {}",
        verdict.analytic.b_margin,
        pass_fail(verdict.analytic.b_margin >= 0.0)
    );
    for s in verdict.samples.iter().filter(|s| s.tau == tau0) {
        println!(
            "H∞ at τ0       {:.9} at ω = {:.5}  (k̃_a {:?} = {:.6})",
            s.hinf, s.omega, s.point, s.ka_eff
        );
    }
    let w = verdict.worst;
    println!(
        "worst sample   {:.9} at τ = {:.5}, ω = {:.5} (k̃_a {:?})",
        w.hinf, w.tau, w.omega, w.point
    );
    println!("verdict        {}", verdict.classification);
    print_files(&report.files);
    Ok(())
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn print_gains(g: &GainSet, notes: &[String]) {
    println!(
        "gains          k_a = {}, k_v = {}, k_p = {}, h_w = {} (γ = {:.6})",
        g.ka,
        g.kv,
        g.kp,
        g.hw,
        g.gamma()
    );
    print_notes(notes);
}

#[derive(Serialize)]
struct FollowerSummary {
    follower: usize,
    peak_delta: f64,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct LengthSummary {
    initial: f64,
    min: f64,
    max: f64,
    mean: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    mode: SimMode,
    seed: u64,
    gains: GainSet,
    followers: Vec<FollowerSummary>,
    max_ratio: Option<f64>,
    string_stable: bool,
    length: LengthSummary,
    warnings: Vec<String>,
    notes: Vec<String>,
    files: Vec<String>,
}

fn summarize(
    traj: &Trajectory,
) -> Result<(Vec<FollowerSummary>, Option<f64>, bool, LengthSummary)> {
    let ratios = amplification_ratios(traj.deltas());
    let mut followers = vec![FollowerSummary {
        follower: 1,
        peak_delta: sup_norm(traj.delta(1)),
        ratio: None,
    }];
    followers.extend(ratios.iter().map(|r| FollowerSummary {
        follower: r.follower,
        peak_delta: r.peak,
        ratio: r.ratio,
    }));
    let length = platoon_length(traj)?;
    let summary = LengthSummary {
        initial: length[0],
        min: length.iter().copied().fold(f64::INFINITY, f64::min),
        max: length.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: length.iter().sum::<f64>() / length.len() as f64,
    };
    Ok((
        followers,
        max_ratio(&ratios),
        is_string_stable(&ratios, RATIO_TOLERANCE),
        summary,
    ))
}

fn delta_series(traj: &Trajectory) -> Vec<Vec<(f64, f64)>> {
    traj.deltas()
        .iter()
        .map(|d| {
            traj.times()
                .iter()
                .copied()
                .zip(d.iter().copied())
                .collect()
        })
        .collect()
}

fn delta_chart(title: &str, series: &[Vec<(f64, f64)>]) -> String {
    let s: Vec<Series> = series
        .iter()
        .enumerate()
        .map(|(i, pts)| Series {
            label: format!("δ_{}", i + 1),
            points: pts,
        })
        .collect();
    svg::line_chart(title, "t (s)", "δ (m)", &s, false)
}

pub fn simulate_cmd(a: &RunArgs) -> Result<()> {
    let cfg = run_config(a)?;
    let spec = cfg.channel_spec()?;
    let resolved = cfg.resolve_gains()?;
    let gains = resolved.gains;
    save_if_requested(a, &cfg, &gains)?;
    let (mode, seed) = (cfg.run.mode, cfg.run.seed);
    let traj = simulate(&cfg.platoon, &gains, &spec, mode, seed)?;

    let mut out = Output::new(&a.output, &cfg)?;
    out.write("trajectory.csv", |w| write_trajectory_csv(w, &traj))?;
    if mode == SimMode::Stochastic {
        let link = cfg.platoon.followers.min(2);
        let trace = communicated_signal_trace(&traj, &spec, link, seed)?;
        out.write("signal_trace.csv", |w| write_signal_trace_csv(w, &trace))?;
    }
    out.svg("spacing_errors.svg", || {
        delta_chart(&format!("spacing errors ({mode})"), &delta_series(&traj))
    })?;
    let length: Vec<(f64, f64)> = traj
        .times()
        .iter()
        .copied()
        .zip(platoon_length(&traj).unwrap_or_default())
        .collect();
    out.svg("platoon_length.svg", || {
        svg::line_chart(
            "platoon length",
            "t (s)",
            "x_0 − x_N (m)",
            &[Series {
                label: format!("h_w = {}", gains.hw),
                points: &length,
            }],
            false,
        )
    })?;

    let (followers, worst, stable, length) = summarize(&traj)?;
    let report = SimulateReport {
        mode,
        seed,
        gains,
        followers,
        max_ratio: worst,
        string_stable: stable,
        length,
        warnings: traj.warnings.clone(),
        notes: resolved.notes,
        files: out.files(),
    };
    if a.output.json {
        return print_json(&report);
    }
    print_gains(&gains, &report.notes);
    println!("mode           {mode} (seed {seed})");
    for w in &report.warnings {
        println!("warning        {w}");
    }
    for f in &report.followers {
        println!(
            "follower {:<5} max |δ| = {:.6e}  ratio = {}",
            f.follower,
            f.peak_delta,
            fmt_opt(f.ratio)
        );
    }
    println!(
        "max ratio      {}  ({})",
        fmt_opt(report.max_ratio),
        if report.string_stable {
            "non-amplifying"
        } else {
            "amplifying"
        }
    );
    let l = &report.length;
    println!(
        "length         initial {:.3}, min {:.3}, max {:.3}, mean {:.3} m",
        l.initial, l.min, l.max, l.mean
    );
    print_files(&report.files);
    Ok(())
}

#[derive(Serialize)]
struct MonteCarloReport {
    runs: usize,
    seed: u64,
    gains: GainSet,
    coverage: Option<f64>,
    rms_error: f64,
    max_half_width: Option<f64>,
    notes: Vec<String>,
    files: Vec<String>,
}

pub fn montecarlo(a: &RunArgs) -> Result<()> {
    let cfg = run_config(a)?;
    let spec = cfg.channel_spec()?;
    let resolved = cfg.resolve_gains()?;
    let gains = resolved.gains;
    save_if_requested(a, &cfg, &gains)?;
    let (runs, seed) = (cfg.run.runs, cfg.run.seed);
    let mc = monte_carlo_mean(&cfg.platoon, &gains, &spec, runs, seed)?;
    let reference = simulate(&cfg.platoon, &gains, &spec, SimMode::Averaged, 0)?;

    let mut out = Output::new(&a.output, &cfg)?;
    out.write("montecarlo.csv", |w| {
        write_monte_carlo_csv(w, &mc, Some(&reference))
    })?;
    out.svg("montecarlo.svg", || {
        let series: Vec<Vec<(f64, f64)>> = mc
            .delta_mean
            .iter()
            .map(|d| {
                mc.mean
                    .times()
                    .iter()
                    .copied()
                    .zip(d.iter().copied())
                    .collect()
            })
            .collect();
        delta_chart(&format!("mean spacing errors over {runs} runs"), &series)
    })?;
    let report = MonteCarloReport {
        runs,
        seed,
        gains,
        coverage: mc.coverage(&reference),
        rms_error: mc.rms_error(&reference),
        max_half_width: mc
            .delta_half_width
            .as_ref()
            .map(|h| h.iter().flatten().copied().fold(0.0, f64::max)),
        notes: resolved.notes,
        files: out.files(),
    };
    if a.output.json {
        return print_json(&report);
    }
    print_gains(&gains, &report.notes);
    println!("runs           {runs} (master seed {seed})");
    match report.coverage {
        Some(c) => println!(
            "coverage       {:.4} of samples within 2s/√M of the averaged model",
            c
        ),
        None => println!("coverage       undefined for a single run"),
    }
    println!("rms error      {:.6e} m", report.rms_error);
    println!("max half-width {}", fmt_opt(report.max_half_width));
    print_files(&report.files);
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    ka: f64,
    hw: f64,
    hw_lb: Option<f64>,
    headway: Option<HeadwayStatus>,
    kp: Option<f64>,
    kv: Option<f64>,
    classification: Option<Classification>,
    worst_hinf: Option<f64>,
    max_ratio: Option<f64>,
    note: Option<String>,
}

fn sweep_point(
    cfg: &RunConfig,
    spec: &ChannelSpec,
    snr: Snr,
    ka: f64,
    hw: f64,
    simulate_run: bool,
) -> SweepRow {
    let mut row = SweepRow {
        ka,
        hw,
        hw_lb: None,
        headway: None,
        kp: None,
        kv: None,
        classification: None,
        worst_hinf: None,
        max_ratio: None,
        note: None,
    };
    if ka < ka_upper_bound(snr) {
        if let Ok(lb) = headway_lower_bound(ka, snr, cfg.platoon.tau0) {
            row.hw_lb = Some(lb);
            row.headway = Some(classify_headway(hw, lb));
        }
    }
    let mut gains_cfg = cfg.gains;
    gains_cfg.ka = Some(ka);
    gains_cfg.hw = Some(hw);
    let gains = match gains_cfg.resolve(snr, cfg.platoon.tau0) {
        Ok(r) => r.gains,
        Err(e) => {
            row.note = Some(format!("{e:#}"));
            return row;
        }
    };
    row.kp = Some(gains.kp);
    row.kv = Some(gains.kv);
    match robust_verdict(spec, cfg.platoon.tau0, &gains) {
        Ok(v) => {
            row.classification = Some(v.classification);
            row.worst_hinf = Some(v.worst.hinf);
        }
        Err(e) => row.note = Some(e.to_string()),
    }
    if simulate_run {
        match simulate(&cfg.platoon, &gains, spec, SimMode::Averaged, 0) {
            Ok(t) => row.max_ratio = max_ratio(&amplification_ratios(t.deltas())),
            Err(e) => row.note = Some(e.to_string()),
        }
    }
    row
}

fn csv_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, ToString::to_string)
}

fn write_sweep_csv(w: &mut impl Write, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(
        w,
        "ka,hw,hw_lb,headway,kp,kv,classification,worst_hinf,max_ratio,note"
    )?;
    for r in rows {
        let headway = r.headway.map(|h| match h {
            HeadwayStatus::Above => "above",
            HeadwayStatus::Marginal => "marginal",
            HeadwayStatus::Below => "below",
        });
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.ka,
            r.hw,
            csv_opt(&r.hw_lb),
            csv_opt(&headway),
            csv_opt(&r.kp),
            csv_opt(&r.kv),
            csv_opt(&r.classification),
            csv_opt(&r.worst_hinf),
            csv_opt(&r.max_ratio),
            r.note
                .as_deref()
                .map_or(String::new(), |n| format!("\"{}\"", n.replace('"', "'")))
        )?;
    }
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let mut cfg = scenario_config(&a.scenario)?;
    cfg.gains.kp = a.kp.or(cfg.gains.kp);
    cfg.gains.kv = a.kv.or(cfg.gains.kv);
    cfg.validate()?;
    let snr = cfg.snr()?;
    let spec = cfg.channel_spec()?;
    let (default_ka, default_hw) =
        cfg.gains
            .resolve_ka_hw(snr, cfg.platoon.tau0, &mut Vec::new())?;
    let kas = if a.ka.is_empty() {
        vec![default_ka]
    } else {
        a.ka.clone()
    };
    let hws = if a.hw.is_empty() {
        vec![default_hw]
    } else {
        a.hw.clone()
    };
    for &v in kas.iter().chain(&hws) {
        if !(v.is_finite() && v > 0.0) {
            bail!("sweep values must be positive, got {v}");
        }
    }
    let rows: Vec<SweepRow> = kas
        .iter()
        .flat_map(|&ka| hws.iter().map(move |&hw| (ka, hw)))
        .map(|(ka, hw)| sweep_point(&cfg, &spec, snr, ka, hw, !a.no_sim))
        .collect();
    let mut out = Output::new(&a.output, &cfg)?;
    out.write("sweep.csv", |w| write_sweep_csv(w, &rows))?;
    if a.output.json {
        #[derive(Serialize)]
        struct SweepReport<'a> {
            rows: &'a [SweepRow],
            files: Vec<String>,
        }
        return print_json(&SweepReport {
            rows: &rows,
            files: out.files(),
        });
    }
    println!(
        "{:>10} {:>8} {:>10} {:>10} {:>10} {:>13} {:>12} {:>12}",
        "k_a", "h_w", "h_lb", "k_p", "k_v", "verdict", "worst H∞", "max ratio"
    );
    for r in &rows {
        println!(
            "{:>10.6} {:>8.4} {:>10} {:>10} {:>10} {:>13} {:>12} {:>12}",
            r.ka,
            r.hw,
            r.hw_lb.map_or("-".into(), |v| format!("{v:.6}")),
            r.kp.map_or("-".into(), |v| format!("{v:.6}")),
            r.kv.map_or("-".into(), |v| format!("{v:.6}")),
            r.classification.map_or("-".into(), |c| c.to_string()),
            r.worst_hinf.map_or("-".into(), |v| format!("{v:.8}")),
            r.max_ratio.map_or("-".into(), |v| format!("{v:.8}")),
        );
        if let Some(n) = &r.note {
            println!("{:>10} {n}", "");
        }
    }
    print_files(&out.files());
    Ok(())
}

/// `--out`, then `run.out_dir`, then `$PLATOON_OUT_DIR`, then `platoon-out`.
pub fn output_dir(args_out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    args_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.run.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}
