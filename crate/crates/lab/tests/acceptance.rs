//! End-to-end acceptance: every criterion runs from the preset configs in
//! `configs/` and prints one line. The test fails if any criterion fails.

use std::path::{Path, PathBuf};

use fdnls::io::Summary;
use fdnls::runner::{replay, run_experiment, MANIFEST};
use fdnls::{ExperimentConfig, Kind};

fn preset(name: &str) -> ExperimentConfig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"));
    ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

struct Runs {
    dir: tempfile::TempDir,
}

impl Runs {
    fn run(&self, name: &str) -> Summary {
        let out = self.dir.path().join(name);
        run_experiment(&preset(name), &out, 1).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

/// All checks named `names` exist and pass; the detail lists their
/// estimates.
fn judge(s: &Summary, names: &[&str]) -> (bool, String) {
    let mut pass = true;
    let mut detail = Vec::new();
    for name in names {
        let hits: Vec<_> = s.checks.iter().filter(|c| c.check == *name).collect();
        if hits.is_empty() {
            pass = false;
            detail.push(format!("{name}: missing"));
            continue;
        }
        let failed = hits.iter().filter(|c| !c.pass).count();
        pass &= failed == 0;
        if hits.len() == 1 {
            let c = hits[0];
            let est = c.estimate.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
            detail.push(format!("{name} = {est} ({})", c.note));
        } else {
            detail.push(format!("{name}: {} of {} pass", hits.len() - failed, hits.len()));
        }
    }
    (pass, detail.join("; "))
}

fn line(results: &mut Vec<(String, bool)>, id: &str, (pass, detail): (bool, String)) {
    println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    results.push((id.to_string(), pass));
}

fn determinism(runs: &Runs) -> (bool, String) {
    let mut flow = ExperimentConfig::new(Kind::Flow);
    flow.seed = 11;
    flow.physics.cutoff = 64.0;
    flow.numerics.dt_nondim = 1e-2;
    flow.numerics.t_final_nondim = 2.0;
    let mut sde = ExperimentConfig::new(Kind::Sde);
    sde.seed = 12;
    sde.physics.cutoff = 16.0;
    sde.numerics.dt_nondim = 1e-2;
    sde.numerics.t_final_nondim = 2.0;
    sde.statistics.paths = 16;
    let mut mismatches = Vec::new();
    for (name, cfg) in [("det_flow", flow), ("det_sde", sde)] {
        let out = runs.path(name);
        run_experiment(&cfg, &out, 1).unwrap();
        let r = replay(&out.join(MANIFEST), &runs.path(&format!("{name}_replay")), 2).unwrap();
        mismatches.extend(r.mismatches.into_iter().map(|m| format!("{name}/{m}")));
    }
    let pass = mismatches.is_empty();
    let detail = if pass {
        "results/*.csv and summary.json byte-identical on replay".to_string()
    } else {
        format!("differing: {}", mismatches.join(", "))
    };
    (pass, detail)
}

#[test]
fn acceptance() {
    let runs = Runs {
        dir: tempfile::tempdir().unwrap(),
    };
    let mut results = Vec::new();

    let s = runs.run("flow_mass");
    line(&mut results, "mass conservation", judge(&s, &["mass_conservation"]));
    let s = runs.run("flow_plane_wave");
    line(&mut results, "plane wave orbit", judge(&s, &["plane_wave"]));

    let numerics = runs.run("verify_numerics");
    line(&mut results, "splitting order", judge(&numerics, &["strang_order"]));
    let s = runs.run("verify_inequalities");
    line(&mut results, "cordoba inequality", judge(&s, &["cordoba"]));
    line(
        &mut results,
        "discrete duality",
        judge(&numerics, &["duality_mass", "duality_energy"]),
    );

    let s = runs.run("sde_ito");
    line(
        &mut results,
        "ito mass balance",
        judge(&s, &["ito_mass", "ito_mass_bias_halving"]),
    );

    let kb = runs.run("kb_grid");
    line(
        &mut results,
        "stationary identity",
        judge(&kb, &["stationary_identity"]),
    );
    line(&mut results, "energy moment family", judge(&kb, &["energy_moment"]));
    line(&mut results, "tail decay", judge(&kb, &["tail_decay"]));

    let ens = runs.run("ensemble");
    line(
        &mut results,
        "complement decay",
        judge(&ens, &["complement_decay", "complement_floor_sensitivity"]),
    );
    line(&mut results, "growth envelope", judge(&ens, &["growth_envelope"]));

    line(&mut results, "galerkin gap rate", judge(&numerics, &["galerkin_gap"]));
    line(&mut results, "determinism", determinism(&runs));

    assert_eq!(results.len(), 13);
    let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    println!("{} of {} criteria pass", results.len() - failed.len(), results.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
