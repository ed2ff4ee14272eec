use std::time::Instant;

use metasolve::linalg::OpLedger;
use metasolve::lp::rediscover;
use metasolve::meta::{default_presets, enumerate_space, run_meta, setup_smoother, Family, RunOptions, SolverSetup, SpaceFilter};
use metasolve::metrics::{measure, RunOutput};
use metasolve::pareto::{discover, pareto_set, rescale, ObjectiveTable, PreferenceWeights};
use metasolve::problems::{assemble_poisson, Kappa};
use metasolve::smoothers::SmootherKind;

/// Problem, runs, records, front, ranking and rediscovery on a small space.
#[test]
fn small_space_end_to_end() {
    let p = assemble_poisson(2, 15, Kappa::Ramp).unwrap();
    let presets = default_presets();
    let opts = RunOptions {
        max_iters: 20_000,
        ..Default::default()
    };
    for family in [Family::Relax, Family::Krylov] {
        let filter = SpaceFilter {
            providers: Some(vec!["DeepONet".into(), "KAN".into()]),
            smoothers: Some(vec![SmootherKind::GaussSeidel, SmootherKind::Ssor]),
            proportion_exps: Some(vec![2, 4]),
            strategies: Some(vec![1, 5]),
            ..Default::default()
        };
        let configs = enumerate_space(family, &filter);
        let mut table = ObjectiveTable::new(7);
        for c in &configs {
            let preset = presets.iter().find(|q| q.label == c.provider()).unwrap();
            let basis = preset.build_basis(&p).unwrap();
            let setup = SolverSetup::build(&p, basis, c.mg_levels(), setup_smoother(c, &opts)).unwrap();
            let mut ledger = OpLedger::new();
            let start = Instant::now();
            let run = run_meta(c, &p, &setup, &opts, &mut ledger).unwrap();
            let out = RunOutput {
                u: run.u,
                trace: run.trace,
                ledger,
                elapsed: start.elapsed(),
            };
            let r = measure(c, &out, setup.coarse.basis(), &p.u_ref, false).unwrap();
            assert!(r.f2_rel_error < 1e-8, "{}: {}", r.solver_id, r.f2_rel_error);
            assert!(r.f4_conv_rate > 0.0);
            table.push(r.solver_id.clone(), r.objectives().to_vec()).unwrap();
        }

        let front = pareto_set(&table).unwrap();
        assert!(!front.strong.is_empty());
        let rescaled = rescale(&front.front_table()).unwrap();
        let ranked = discover(&rescaled.table, &PreferenceWeights::p1()).unwrap();
        assert_eq!(ranked.len(), front.strong.len());
        let best = &ranked[0].id;
        assert!(front.is_strong(best));

        // A weighted-sum optimum under positive weights always has a
        // supporting hyperplane.
        let r = rediscover(&rescaled.table, best).unwrap();
        assert!(r.found, "{family}: {best}");
    }
}
