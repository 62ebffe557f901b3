use crate::{
    AnglesArgs, BoundaryArg, CliError, FitArgs, GaugeArgs, InputArgs, ReconstructArgs, RelaxArgs, SimulateArgs,
    ThetaScanArgs, VERSION,
};
use frenetfold::dynamics::{debye_waller, run_many, MCConfig, Schedule, ThetaScanConfig};
use frenetfold::energy::{Couplings, EnergyParams, SegmentedParams};
use frenetfold::geometry::{
    compute_angles, detect_flattening_points, reconstruct, total_variation, unfold_gauge_with, AngleProfile,
    CalphaChain, UnfoldOptions, CANONICAL_BOND,
};
use frenetfold::io::{
    parse_calpha, profile_from_csv, profile_from_json, profile_to_csv, read_params, trajectory_to_csv, write_chain,
    write_params, ParamsFile,
};
use frenetfold::soliton::{
    fit_multisoliton, relax, relax_newton, seed_segments, soliton_profile, FitOptions, RelaxOptions, SegmentOptions,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Tool version and the fully resolved options, one entry per header line.
fn header(command: &str, args: &impl Serialize) -> Vec<String> {
    vec![
        format!("frenetfold {VERSION} {command}"),
        format!("config: {}", serde_json::to_string(args).expect("options serialize")),
    ]
}

fn with_comments(lines: &[String], prefix: &str, body: &str) -> String {
    let mut out: String = lines.iter().map(|l| format!("{prefix}{l}\n")).collect();
    out.push_str(body);
    out
}

fn residue_range(spec: &str) -> Result<(i32, i32), CliError> {
    let bad = || CliError::Usage(format!("--residues expects FIRST-LAST, got {spec:?}"));
    let spec = spec.trim();
    // Skip a leading sign so negative residue numbers work.
    let dash = spec.get(1..).and_then(|s| s.find('-')).ok_or_else(bad)? + 1;
    let (a, b) = (&spec[..dash], &spec[dash + 1..]);
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn load_chain(input: &InputArgs) -> Result<CalphaChain, CliError> {
    let path = input.pdb.as_deref().ok_or_else(|| CliError::Usage("--pdb is required".into()))?;
    let parsed = parse_calpha(&read(path)?, input.chain, input.model.unwrap_or(0))?;
    let mut chain = match input.fragment {
        Some(i) => parsed
            .fragments
            .get(i)
            .cloned()
            .ok_or_else(|| CliError::Input(format!("chain has {} fragments, asked for {i}", parsed.fragments.len())))?,
        None => parsed.longest().clone(),
    };
    if let Some(spec) = &input.residues {
        let (first, last) = residue_range(spec)?;
        let numbers = chain.residue_numbers.clone().unwrap_or_else(|| (1..=chain.len() as i32).collect());
        let lo = numbers.iter().position(|&n| n >= first);
        let hi = numbers.iter().rposition(|&n| n <= last);
        chain = match (lo, hi) {
            (Some(lo), Some(hi)) if lo <= hi => chain.slice(lo..hi + 1),
            _ => return Err(CliError::Input(format!("no residues in {first}-{last}"))),
        };
    }
    Ok(chain)
}

fn load_profile(input: &InputArgs) -> Result<AngleProfile, CliError> {
    match (&input.profile, &input.pdb) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --profile or --pdb".into())),
        (Some(path), None) => {
            let text = read(path)?;
            let profile = if path.extension().is_some_and(|e| e == "json") {
                profile_from_json(&text)?
            } else {
                profile_from_csv(&text)?
            };
            Ok(profile)
        }
        (None, Some(_)) => Ok(compute_angles(&load_chain(input)?)?),
        (None, None) => Err(CliError::Usage("--profile or --pdb is required".into())),
    }
}

fn load_params(path: Option<&Path>, sites: usize) -> Result<SegmentedParams, CliError> {
    let path = path.ok_or_else(|| CliError::Usage("--params is required".into()))?;
    Ok(read_params(&read(path)?)?.into_segmented(sites))
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

pub fn angles(args: AnglesArgs) -> Result<(), CliError> {
    let profile = load_profile(&args.input)?;
    let lines = header("angles", &args);
    emit(args.out.as_deref(), &profile_to_csv(&profile, &lines))
}

pub fn gauge(mut args: GaugeArgs) -> Result<(), CliError> {
    let defaults = UnfoldOptions::default();
    let opts = UnfoldOptions {
        tau_threshold: *args.tau_threshold.get_or_insert(defaults.tau_threshold),
        cluster_span: *args.cluster_span.get_or_insert(defaults.cluster_span),
    };
    let profile = load_profile(&args.input)?;
    let (unfolded, moves) = unfold_gauge_with(&profile, &opts);
    let mut lines = header("gauge", &args);
    lines.push(format!("flattening points before: {}", list(&detect_flattening_points(&profile))));
    lines.push(format!("flattening points after: {}", list(&detect_flattening_points(&unfolded))));
    lines.push(format!("Z2 moves at sites: {}", list(&moves)));
    lines.push(format!("total variation: {:.6} -> {:.6}", total_variation(&profile), total_variation(&unfolded)));
    if args.out.is_some() {
        for l in &lines[2..] {
            eprintln!("{l}");
        }
    }
    emit(args.out.as_deref(), &profile_to_csv(&unfolded, &lines))
}

pub fn reconstruct_cmd(args: ReconstructArgs) -> Result<(), CliError> {
    let profile = load_profile(&args.input)?;
    let chain = reconstruct(&profile)?;
    let lines = header("reconstruct", &args);
    emit(args.out.as_deref(), &with_comments(&lines, "REMARK   1 ", &write_chain(&chain)))
}

pub fn relax_cmd(mut args: RelaxArgs) -> Result<(), CliError> {
    let defaults = RelaxOptions::default();
    let opts = RelaxOptions {
        epsilon: *args.epsilon.get_or_insert(defaults.epsilon),
        tol: *args.tol.get_or_insert(defaults.tol),
        max_iters: *args.max_iters.get_or_insert(defaults.max_iters),
        record_energy: true,
    };
    let newton = *args.newton.get_or_insert(false);
    let bond = *args.bond_length.get_or_insert(CANONICAL_BOND);
    let start = load_profile(&args.input)?;
    let params = load_params(args.params.as_deref(), start.len())?;
    let solver = if newton { relax_newton } else { relax };
    let (kappa, report) = solver(&start.kappa, &params, &opts)?;
    let profile = soliton_profile(&kappa, &params, bond)?;
    let mut lines = header("relax", &args);
    lines.push(format!("iterations: {}", report.iterations));
    lines.push(format!("final residual: {:e}", report.final_residual));
    lines.push(format!("converged: {}", report.converged));
    if let (Some(first), Some(last)) = (report.energy_series.first(), report.energy_series.last()) {
        lines.push(format!("soliton energy: {first} -> {last}"));
    }
    emit(args.out.as_deref(), &profile_to_csv(&profile, &lines))?;
    if !report.converged {
        return Err(CliError::Numerical(format!(
            "no fixed point within {} iterations (residual {:e})",
            report.iterations, report.final_residual
        )));
    }
    Ok(())
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

pub fn fit(mut args: FitArgs) -> Result<(), CliError> {
    let defaults = FitOptions::default();
    let seeding = SegmentOptions::default();
    let mut opts = defaults.clone();
    opts.relax.tol = *args.tol.get_or_insert(defaults.relax.tol);
    opts.max_iterations = *args.max_iters.get_or_insert(defaults.max_iterations);
    let unfold = *args.unfold.get_or_insert(true);
    if args.segments.is_none() {
        args.kappa_tol.get_or_insert(seeding.kappa_tol);
        args.tau_tol.get_or_insert(seeding.tau_tol);
        args.lambda.get_or_insert(seeding.lambda);
    }
    let chain = load_chain(&args.input)?;
    let mut target = compute_angles(&chain)?;
    if unfold {
        target = unfold_gauge_with(&target, &UnfoldOptions::default()).0;
    }
    let start = match &args.segments {
        Some(path) => read_params(&read(path)?)?.into_segmented(target.len()),
        None => seed_segments(
            &target,
            &SegmentOptions {
                kappa_tol: args.kappa_tol.unwrap_or(seeding.kappa_tol),
                tau_tol: args.tau_tol.unwrap_or(seeding.tau_tol),
                lambda: args.lambda.unwrap_or(seeding.lambda),
            },
        )?,
    };
    let (params, profile, report) = fit_multisoliton(&target, &start, &opts)?;

    let mut lines = header("fit", &args);
    lines.push(format!("segments: {}", params.segments.len()));
    lines.push(format!("initial RMSD: {:.6} A", report.initial_rmsd));
    lines.push(format!("RMSD: {:.6} A", report.rmsd));
    lines.push(format!("iterations: {}, relaxations: {}", report.iterations, report.evaluations));
    eprintln!("RMSD {:.4} A (from {:.4} A) with {} segments", report.rmsd, report.initial_rmsd, params.segments.len());

    let params_text = with_comments(&lines, "# ", &write_params(&ParamsFile::Segmented(params)));
    let Some(prefix) = &args.out else {
        return emit(None, &params_text);
    };
    emit(Some(&with_extension(prefix, ".toml")), &params_text)?;

    // Superpose the fitted chain onto the target for the PDB output.
    let fitted = reconstruct(&profile)?;
    let fit = frenetfold::geometry::kabsch(&fitted.vertices, &chain.vertices)?;
    let mut placed = chain.clone();
    placed.vertices = fitted.vertices.iter().map(|v| fit.apply(v)).collect();
    emit(Some(&with_extension(prefix, ".pdb")), &with_comments(&lines, "REMARK   1 ", &write_chain(&placed)))?;

    let numbers = chain.residue_numbers.clone().unwrap_or_else(|| (1..=chain.len() as i32).collect());
    let mut csv = String::from("residue,deviation_A,debye_waller_A,within_band\n");
    for (i, dev) in report.deviations.iter().enumerate() {
        let band = chain.b_factors.as_ref().map(|b| debye_waller(b[i])).transpose()?;
        let (band, within) = band.map_or((String::new(), String::new()), |w| (format!("{w:.4}"), (*dev <= w).to_string()));
        csv.push_str(&format!("{},{dev:.4},{band},{within}\n", numbers[i]));
    }
    emit(Some(&with_extension(prefix, ".csv")), &with_comments(&lines, "# ", &csv))
}

fn seeded_path(template: &Path, seed: u64, several: bool) -> PathBuf {
    let s = template.to_string_lossy();
    if s.contains("{seed}") {
        return PathBuf::from(s.replace("{seed}", &seed.to_string()));
    }
    if !several {
        return template.to_path_buf();
    }
    let stem = template.file_stem().map_or_else(String::new, |x| x.to_string_lossy().into_owned());
    let name = match template.extension() {
        Some(ext) => format!("{stem}.seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}.seed{seed}"),
    };
    template.with_file_name(name)
}

pub fn simulate(mut args: SimulateArgs) -> Result<(), CliError> {
    let defaults = MCConfig::default();
    let schedule: Schedule = args
        .schedule
        .as_deref()
        .ok_or_else(|| CliError::Usage("--schedule is required".into()))?
        .parse()?;
    let seed = *args.seed.get_or_insert(defaults.seed);
    let runs = *args.runs.get_or_insert(1);
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    if runs > 1 && args.out.is_none() {
        return Err(CliError::Usage("several runs need --out".into()));
    }
    let config = MCConfig {
        schedule,
        sigma_kappa: *args.sigma_kappa.get_or_insert(defaults.sigma_kappa),
        sigma_tau: *args.sigma_tau.get_or_insert(defaults.sigma_tau),
        seed,
        measure_every: *args.measure_every.get_or_insert(defaults.measure_every),
        kappa_only: *args.kappa_only.get_or_insert(defaults.kappa_only),
        boundary: (*args.boundary.get_or_insert(match defaults.boundary {
            frenetfold::Boundary::Open => BoundaryArg::Open,
            frenetfold::Boundary::Soliton => BoundaryArg::Soliton,
        }))
        .into(),
        min_distance: defaults.min_distance,
    };
    let initial = load_profile(&args.input)?;
    let params = load_params(args.params.as_deref(), initial.len())?;
    let reference = reconstruct(&initial)?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| seed + i).collect();
    let trajectories = run_many(&initial, &params, &config, Some(&reference), &seeds)?;
    let lines = header("simulate", &args);
    for t in &trajectories {
        let out = args.out.as_deref().map(|p| seeded_path(p, t.seed, runs > 1));
        emit(out.as_deref(), &trajectory_to_csv(t, &lines))?;
        if let Some(template) = &args.final_profile {
            let mut l = lines.clone();
            l.push(format!("seed: {}", t.seed));
            emit(Some(&seeded_path(template, t.seed, runs > 1)), &profile_to_csv(&t.final_profile, &l))?;
        }
    }
    Ok(())
}

pub fn theta_scan(mut args: ThetaScanArgs) -> Result<(), CliError> {
    let defaults = ThetaScanConfig::default();
    let path = args.params.as_deref().ok_or_else(|| CliError::Usage("--params is required".into()))?;
    let params: EnergyParams = match read_params(&read(path)?)? {
        ParamsFile::Uniform(p) => p,
        ParamsFile::Segmented(s) if s.segments.len() == 1 => *s.at(0),
        ParamsFile::Segmented(_) => return Err(CliError::Input("theta-scan needs uniform parameters".into())),
    };
    let lengths = args.lengths.get_or_insert_with(|| vec![16, 24, 32, 48, 64]).clone();
    let config = ThetaScanConfig {
        kts: args.kts.get_or_insert(defaults.kts.clone()).clone(),
        steps: *args.steps.get_or_insert(defaults.steps),
        burn_in: *args.burn_in.get_or_insert(defaults.burn_in),
        measure_every: *args.measure_every.get_or_insert(defaults.measure_every),
        replicas: *args.replicas.get_or_insert(defaults.replicas),
        seed: *args.seed.get_or_insert(defaults.seed),
        boundary: (*args.boundary.get_or_insert(BoundaryArg::Open)).into(),
        ..defaults
    };
    let scan = frenetfold::dynamics::theta_scan(&params, &config, &lengths)?;
    let mut lines = header("theta-scan", &args);
    lines.push(format!("seed: {}", config.seed));
    for (kt, fit) in &scan.fits {
        lines.push(format!("fit kT={kt}: nu={:.4} R0={:.4} A", fit.nu, fit.r0));
    }
    lines.push(format!("steepest collapse near kT={:.4e}", scan.theta_kt));
    if args.out.is_some() {
        for l in &lines[3..] {
            eprintln!("{l}");
        }
    }
    let mut csv = String::from("n,kT,mean_rg_A,sem_rg_A,acceptance\n");
    for p in &scan.points {
        csv.push_str(&format!("{},{},{},{},{}\n", p.n, p.kt, p.mean_rg, p.sem_rg, p.acceptance));
    }
    emit(args.out.as_deref(), &with_comments(&lines, "# ", &csv))
}
