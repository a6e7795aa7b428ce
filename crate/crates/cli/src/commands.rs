use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use choicekit::attributes::CostBook;
use choicekit::bikeability;
use choicekit::estimation::{estimate, EstimationResult, ModelKind, ModelSpec};
use choicekit::impacts::{impact_grid, write_impacts_csv, EmissionConfig};
use choicekit::metrics::{cv_evaluate, vot, write_cv_csv, FoldPlan, Scoring, VotComponent};
use choicekit::simulation::{simulate_grid, write_shares_csv, write_shifts_csv, AdoptionPolicy, FittedModel, LatentMode, ScenarioGrid};
use choicekit::weighting::{bikeable_reference_targets, ipf_fit, margin_report, IpfOptions, MarginTargets};
use choicekit::{io, synth, Error, ParameterSet};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{Cli, Command, Failure, LatentArg, ModelArg, ScenarioArgs, ScoringArg, SynthKind, EXIT_CONFIG, EXIT_INPUT, EXIT_NONCONVERGED};

type Outcome = std::result::Result<u8, Failure>;

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Estimate {
            model,
            data,
            spec,
            draws,
            seed,
            out,
        } => cmd_estimate(cli, *model, data, spec.as_deref(), *draws, *seed, out),
        Command::Simulate(args) => cmd_simulate(cli, args),
        Command::Impact { scenario, emissions } => cmd_impact(cli, scenario, emissions.as_deref()),
        Command::Weight {
            sample,
            targets,
            tol,
            max_iter,
            trim,
            out,
        } => cmd_weight(cli, sample, targets.as_deref(), *tol, *max_iter, *trim, out),
        Command::Validate {
            model,
            data,
            spec,
            folds,
            seed,
            scoring,
            params,
            out,
        } => cmd_validate(cli, *model, data, spec.as_deref(), *folds, *seed, *scoring, params.as_deref(), out),
        Command::Bikeability {
            data,
            params,
            threshold,
            out,
        } => cmd_bikeability(cli, data, params.as_deref(), *threshold, out),
        Command::Synth {
            kind,
            n,
            seed,
            model,
            preset,
            out,
        } => cmd_synth(cli, *kind, *n, *seed, *model, preset.as_deref(), out),
    }
}

fn config_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn require_file(path: &Path, role: &str) -> std::result::Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(input_failure(format!("{role} file {} does not exist", path.display())))
    }
}

fn require_config(path: &Path, role: &str) -> std::result::Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(config_failure(format!("{role} file {} does not exist", path.display())))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| input_failure(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(path)?))
}

fn load_result(path: &Path) -> std::result::Result<EstimationResult, Failure> {
    require_file(path, "params")?;
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| input_failure(format!("{}: not an estimation result: {e}", path.display())))
}

fn load_spec(model: ModelKind, spec: Option<&Path>, manifest: &mut RunManifest) -> std::result::Result<ModelSpec, Failure> {
    match spec {
        Some(p) => {
            require_config(p, "spec")?;
            manifest.config("spec", p)?;
            let s = ModelSpec::load(p)?;
            if s.model != model {
                return Err(config_failure(format!("spec is for model `{}` but --model is `{model}`", s.model)));
            }
            Ok(s)
        }
        None => Ok(ModelSpec::for_kind(model)),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(cli: &Cli, model: ModelArg, data: &Path, spec: Option<&Path>, draws: Option<usize>, seed: Option<u64>, out: &Path) -> Outcome {
    let kind = ModelKind::from(model);
    let mut manifest = RunManifest::new("estimate", seed, cli.threads);
    manifest.argument("model", kind);
    let mut spec = load_spec(kind, spec, &mut manifest)?;
    if draws.is_some() {
        spec.draws.n = draws;
    }
    if seed.is_some() {
        spec.draws.seed = seed;
    }
    let start = spec.start_parameters()?;
    let config = spec.estimation_config()?;
    manifest.seed = Some(config.plan.seed);
    require_file(data, "data")?;
    manifest.input("data", data)?;
    let result = if kind == ModelKind::Binary {
        let records = io::read_bikeability(data)?;
        bikeability::estimate_bikeability(&records, &start, &config)?
    } else {
        let obs = io::read_observations(data)?;
        estimate(kind, &obs, &start, &config)?
    };
    fs::create_dir_all(out)?;
    write_json(&out.join("result.json"), &result)?;
    manifest.output(out, "result.json")?;
    let converged = result.convergence.converged;
    if !converged {
        manifest.warn(format!("estimation did not converge: {}", result.convergence.message));
    }
    manifest.write(out)?;
    println!(
        "{kind}: LL {:.3} (LL0 {:.3}), K {}, AIC {:.3}, BIC {:.3}, rho-bar^2 {:.4}, converged {converged}",
        result.ll_final, result.ll0, result.k, result.aic, result.bic, result.rho_bar_sq
    );
    Ok(if converged { 0 } else { EXIT_NONCONVERGED })
}

struct Scenario {
    trips: Vec<choicekit::attributes::PopulationTrip>,
    weights: Vec<f64>,
    grid: ScenarioGrid,
    model: FittedModel,
}

fn load_scenario(args: &ScenarioArgs, manifest: &mut RunManifest) -> std::result::Result<Scenario, Failure> {
    let result = load_result(&args.params)?;
    manifest.input("params", &args.params)?;
    if result.model == ModelKind::Binary {
        return Err(config_failure("scenario simulation needs a mode-choice model, not the bikeability logit"));
    }
    let mut plan = result.draws.unwrap_or_default();
    if let Some(n) = args.draws {
        plan.n_draws = n;
    }
    if let Some(s) = args.seed {
        plan.seed = s;
    }
    manifest.seed = Some(plan.seed);
    let grid = match &args.grid {
        Some(p) => {
            require_config(p, "grid")?;
            manifest.config("grid", p)?;
            ScenarioGrid::load(p)?
        }
        None => ScenarioGrid::default(),
    };
    require_file(&args.population, "population")?;
    manifest.input("population", &args.population)?;
    let pop = io::read_population(&args.population)?;
    if pop.n_filtered > 0 {
        manifest.warn(format!("{} population rows outside the distance range were dropped", pop.n_filtered));
    }
    let weights = match &args.weights {
        Some(p) => {
            require_file(p, "weights")?;
            manifest.input("weights", p)?;
            let map: BTreeMap<String, f64> = io::read_weights(p)?.into_iter().collect();
            pop.trips
                .iter()
                .enumerate()
                .map(|(row, t)| {
                    map.get(&t.trip_id)
                        .copied()
                        .ok_or_else(|| Failure::from(Error::data(row, format!("no weight for trip `{}`", t.trip_id))))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?
        }
        None => pop.weights.clone(),
    };
    manifest.check_upstream_inputs(&args.params);
    let latent = match args.latent {
        LatentArg::Integrate => LatentMode::Integrate,
        LatentArg::PointEstimate => LatentMode::PointEstimate,
    };
    let adoption = if args.no_adoption { AdoptionPolicy::Disabled } else { AdoptionPolicy::SpDesign };
    manifest.argument("latent", format!("{latent:?}"));
    manifest.argument("adoption", format!("{adoption:?}"));
    let model = FittedModel::new(result.model, result.params, plan)?
        .with_latent_mode(latent)
        .with_adoption(adoption)
        .with_book(CostBook::default());
    Ok(Scenario {
        trips: pop.trips,
        weights,
        grid,
        model,
    })
}

fn cmd_simulate(cli: &Cli, args: &ScenarioArgs) -> Outcome {
    let mut manifest = RunManifest::new("simulate", args.seed, cli.threads);
    let s = load_scenario(args, &mut manifest)?;
    let cells = simulate_grid(&s.trips, &s.weights, &s.grid, &s.model)?;
    fs::create_dir_all(&args.out)?;
    write_shares_csv(create(&args.out.join("shares.csv"))?, &cells)?;
    write_shifts_csv(create(&args.out.join("shifts.csv"))?, &cells)?;
    manifest.output(&args.out, "shares.csv")?;
    manifest.output(&args.out, "shifts.csv")?;
    manifest.write(&args.out)?;
    println!("simulated {} cells over {} trips", cells.len(), s.trips.len());
    Ok(0)
}

fn cmd_impact(cli: &Cli, args: &ScenarioArgs, emissions: Option<&Path>) -> Outcome {
    let mut manifest = RunManifest::new("impact", args.seed, cli.threads);
    let config = match emissions {
        Some(p) => {
            require_config(p, "emissions")?;
            manifest.config("emissions", p)?;
            EmissionConfig::load(p)?
        }
        None => {
            manifest.warn("no emission config given: using toolkit default transit factors (not published values)".into());
            EmissionConfig::default()
        }
    };
    let s = load_scenario(args, &mut manifest)?;
    let rows = impact_grid(&s.trips, &s.weights, &s.model, &s.grid, &config)?;
    fs::create_dir_all(&args.out)?;
    write_impacts_csv(create(&args.out.join("impacts.csv"))?, &rows)?;
    manifest.output(&args.out, "impacts.csv")?;
    manifest.write(&args.out)?;
    println!("wrote {} impact rows", rows.len());
    Ok(0)
}

fn cmd_weight(cli: &Cli, sample: &Path, targets: Option<&Path>, tol: f64, max_iter: usize, trim: Option<f64>, out: &Path) -> Outcome {
    let mut manifest = RunManifest::new("weight", None, cli.threads);
    let targets = match targets {
        Some(p) => {
            require_config(p, "targets")?;
            manifest.config("targets", p)?;
            MarginTargets::load(p)?
        }
        None => bikeable_reference_targets(),
    };
    require_file(sample, "sample")?;
    manifest.input("sample", sample)?;
    let sample = io::read_sample(sample)?;
    let options = IpfOptions {
        tol,
        max_iter,
        trim_quantile: trim,
    };
    manifest.argument("tol", tol);
    manifest.argument("max_iter", max_iter);
    let fit = ipf_fit(&sample, &targets, &options)?;
    fs::create_dir_all(out)?;
    io::write_weights(&out.join("weights.csv"), sample.ids(), &fit.weights)?;
    let report = margin_report(&sample, &fit.weights, &targets)?;
    let mut w = csv::Writer::from_writer(create(&out.join("margins.csv"))?);
    w.write_record(["variable", "category", "target", "achieved", "deviation"]).map_err(Error::from)?;
    for v in &report {
        for c in &v.categories {
            w.write_record([
                v.variable.clone(),
                c.category.clone(),
                c.target.to_string(),
                c.achieved.to_string(),
                (c.achieved - c.target).to_string(),
            ])
            .map_err(Error::from)?;
        }
    }
    w.flush()?;
    drop(w);
    manifest.output(out, "weights.csv")?;
    manifest.output(out, "margins.csv")?;
    if !fit.converged {
        manifest.warn(format!("raking did not converge: max deviation {:e} after {} sweeps", fit.max_deviation, fit.iterations));
    }
    manifest.write(out)?;
    println!("raked {} respondents in {} sweeps, max deviation {:e}", sample.len(), fit.iterations, fit.max_deviation);
    Ok(if fit.converged { 0 } else { EXIT_NONCONVERGED })
}

#[allow(clippy::too_many_arguments)]
fn cmd_validate(cli: &Cli, model: ModelArg, data: &Path, spec: Option<&Path>, folds: usize, seed: u64, scoring: ScoringArg, params: Option<&Path>, out: &Path) -> Outcome {
    let kind = ModelKind::from(model);
    if kind == ModelKind::Binary {
        return Err(config_failure("cross-validation supports mnl, mixl and hcm"));
    }
    let mut manifest = RunManifest::new("validate", Some(seed), cli.threads);
    let spec = load_spec(kind, spec, &mut manifest)?;
    let start = spec.start_parameters()?;
    let config = spec.estimation_config()?;
    require_file(data, "data")?;
    manifest.input("data", data)?;
    let obs = io::read_observations(data)?;
    let scoring = match scoring {
        ScoringArg::Argmax => Scoring::Argmax,
        ScoringArg::Expected => Scoring::Expected,
    };
    manifest.argument("folds", folds);
    let plan = FoldPlan::new(folds, seed);
    let report = cv_evaluate(&obs, kind, &start, &config, plan, scoring)?;
    fs::create_dir_all(out)?;
    let name = kind.to_string();
    write_cv_csv(create(&out.join("cv.csv"))?, &[(name.as_str(), &report)])?;
    write_json(&out.join("cv.json"), &report)?;
    manifest.output(out, "cv.csv")?;
    manifest.output(out, "cv.json")?;
    if !report.nonconverged_folds.is_empty() {
        manifest.warn(format!("training did not converge in folds {:?}", report.nonconverged_folds));
    }
    if let Some(p) = params {
        let result = load_result(p)?;
        manifest.input("params", p)?;
        manifest.check_upstream_inputs(p);
        let mut w = csv::Writer::from_writer(create(&out.join("vot.csv"))?);
        w.write_record(["component", "coefficient", "usd_per_hour"]).map_err(Error::from)?;
        for c in VotComponent::ALL {
            let v = vot(&result.params, c)?;
            w.write_record([format!("{c:?}").to_lowercase(), c.coefficient().to_string(), v.to_string()])
                .map_err(Error::from)?;
        }
        w.flush()?;
        drop(w);
        manifest.output(out, "vot.csv")?;
    }
    manifest.write(out)?;
    println!(
        "{name}: overall accuracy {:.4} ± {:.4}, share MAD {:.3} ± {:.3} pp",
        report.overall.mean, report.overall.sd, report.share_mad.mean, report.share_mad.sd
    );
    Ok(0)
}

#[derive(Serialize)]
struct BikeabilitySummary {
    n: usize,
    n_bikeable: usize,
    threshold: f64,
    accuracy: Option<f64>,
}

fn cmd_bikeability(cli: &Cli, data: &Path, params: Option<&Path>, threshold: f64, out: &Path) -> Outcome {
    let mut manifest = RunManifest::new("bikeability", None, cli.threads);
    let coefficients: ParameterSet = match params {
        Some(p) => {
            let r = load_result(p)?;
            manifest.input("params", p)?;
            if r.model != ModelKind::Binary {
                return Err(config_failure(format!("{} holds a `{}` model, not the bikeability logit", p.display(), r.model)));
            }
            r.params
        }
        None => bikeability::published_parameters(),
    };
    require_file(data, "data")?;
    manifest.input("data", data)?;
    if let Some(p) = params {
        manifest.check_upstream_inputs(p);
    }
    manifest.argument("threshold", threshold);
    let records = io::read_bikeability(data)?;
    let scored = bikeability::classify_all(&records, &coefficients, threshold)?;
    let accuracy = if records.iter().any(|r| r.label.is_some()) {
        Some(bikeability::accuracy(&records, &coefficients, threshold)?)
    } else {
        None
    };
    fs::create_dir_all(out)?;
    io::write_classified_to(create(&out.join("classified.csv"))?, &records, &scored)?;
    let summary = BikeabilitySummary {
        n: records.len(),
        n_bikeable: scored.iter().filter(|c| c.bikeable).count(),
        threshold,
        accuracy,
    };
    write_json(&out.join("summary.json"), &summary)?;
    manifest.output(out, "classified.csv")?;
    manifest.output(out, "summary.json")?;
    manifest.write(out)?;
    println!("{} of {} trips bikeable at threshold {threshold}", summary.n_bikeable, summary.n);
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(cli: &Cli, kind: SynthKind, n: usize, seed: u64, model: ModelArg, preset: Option<&str>, out: &Path) -> Outcome {
    let mut manifest = RunManifest::new("synth", Some(seed), cli.threads);
    manifest.argument("kind", format!("{kind:?}").to_lowercase());
    manifest.argument("n", n);
    if n == 0 {
        return Err(config_failure("--n must be positive"));
    }
    fs::create_dir_all(out)?;
    let file = match kind {
        SynthKind::Survey => {
            let mk = ModelKind::from(model);
            if mk == ModelKind::Binary {
                return Err(config_failure("use --kind bikeability for bikeability records"));
            }
            let name = preset.unwrap_or(match mk {
                ModelKind::Mnl => "model1",
                ModelKind::Mixl => "model2",
                _ => "model3",
            });
            manifest.argument("model", mk);
            manifest.argument("preset", name);
            let truth = ParameterSet::preset(name)?;
            let data = synth::synth_survey(&synth::SurveyDesign::new(n, seed), &truth, mk, &CostBook::default())?;
            io::write_observations(&out.join("survey.csv"), &data)?;
            "survey.csv"
        }
        SynthKind::Population => {
            let trips = synth::synth_population(n, seed);
            io::write_population(&out.join("population.csv"), &trips, &vec![1.0; trips.len()])?;
            "population.csv"
        }
        SynthKind::Sample => {
            let sample = synth::synth_raking_sample(n, seed)?;
            io::write_sample(&out.join("sample.csv"), &sample)?;
            "sample.csv"
        }
        SynthKind::Bikeability => {
            let records = synth::synth_bikeability(n, seed, &bikeability::published_parameters())?;
            io::write_bikeability_to(create(&out.join("bikeability.csv"))?, &records)?;
            "bikeability.csv"
        }
    };
    manifest.output(out, file)?;
    manifest.write(out)?;
    println!("wrote {}", out.join(file).display());
    Ok(0)
}
