//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run a subset with `cargo test --test acceptance -- c3 c9`.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use splinereg::analysis::{condition_number, error_vs_function, grid_sample, lattice_params, strength_field};
use splinereg::datagen::*;
use splinereg::fitting::*;
use splinereg::io;
use splinereg::splinecore::{
    derivative_multi_indices, DomainBox, KnotVector, MultiIndexSpace, TensorSpline,
};
use splinereg::Error;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    ("c1", "sparsity sweep error trend", c1_sparsity_trend),
    ("c2", "sparsity sweep conditioning", c2_conditioning),
    ("c3", "threshold sweep U-shape", c3_threshold_sweep),
    ("c4", "column-sum guarantee", c4_column_sums),
    ("c5", "zero-threshold equivalence", c5_zero_threshold),
    ("c6", "dense least-squares oracle", c6_oracle),
    ("c7", "derivatives vs finite differences", c7_derivatives),
    ("c8", "first-derivative locality", c8_first_derivative_locality),
    ("c9", "hole extrapolation", c9_hole),
    ("c10", "3D hexagonal prism", c10_hex_prism),
    ("c11", "module property suites", c11_properties),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, title, run) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| f == id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} {id:<4} {title}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn polysinc_at(x: &[f64]) -> f64 {
    polysinc(x[0], x[1])
}

const SPARSITIES: [f64; 6] = [0.02, 0.08, 0.16, 0.32, 0.64, 1.0];

fn c1_sparsity_trend() -> Outcome {
    let region = default_void_error_box();
    let mut reg_max = Vec::new();
    let mut lines = Vec::new();
    let mut ratios_ok = true;
    for &sparsity in &SPARSITIES {
        let cloud = sample_voids(&VoidsSpec {
            sparsity,
            seed: 1,
            ..VoidsSpec::default()
        })
        .unwrap();
        let cfg = FitConfig::new(4, vec![120, 120]).with_s_star(1.0);
        let problem = FitProblem::build(&cloud, &cfg).unwrap();
        let (reg, _) = fit_problem(&problem, &cfg).unwrap();
        let e_reg = error_vs_function(&reg, polysinc_at, &[400, 400], Some(&region)).unwrap();
        reg_max.push(e_reg.linf);
        if sparsity <= 0.08 {
            let ucfg = cfg.clone().unregularized().with_solver(SolverKind::Qr);
            let (un, _) = fit_problem(&problem, &ucfg).unwrap();
            let e_un = error_vs_function(&un, polysinc_at, &[400, 400], Some(&region)).unwrap();
            ratios_ok &= e_un.linf >= 10.0 * e_reg.linf;
            lines.push(format!("{sparsity}: unreg {:.2e} reg {:.2e}", e_un.linf, e_reg.linf));
        }
    }
    let spread = reg_max.iter().cloned().fold(0.0, f64::max) / reg_max.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        ratios_ok && spread < 3.0,
        format!("{}; reg max-error spread {spread:.2}x over {SPARSITIES:?}", lines.join(", ")),
    )
}

fn c2_conditioning() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for sparsity in [0.02, 0.08] {
        let cloud = sample_voids(&VoidsSpec {
            sparsity,
            seed: 2,
            points: 4000,
            ..VoidsSpec::default()
        })
        .unwrap();
        let cfg = FitConfig::new(3, vec![40, 40]).with_s_star(1.0);
        let problem = FitProblem::build(&cloud, &cfg).unwrap();
        let (l1, l2) = problem.strengths(&cfg).unwrap();
        let zero = vec![0.0; l1.len()];
        let un = condition_number(&problem.stacked(&zero, &zero)).unwrap();
        let reg = condition_number(&problem.stacked(&l1, &l2)).unwrap();
        pass &= un.singular && !reg.singular && reg.value() < 1e6;
        parts.push(format!(
            "{sparsity}: unreg sigma ratio {:.1e} ({}), reg cond {:.3e}",
            un.sigma_min / un.sigma_max,
            if un.singular { "inf" } else { "finite" },
            reg.value()
        ));
    }
    outcome(pass, format!("1600 columns; {}", parts.join(", ")))
}

fn c3_threshold_sweep() -> Outcome {
    let cloud = sample_quadrant_gradient(&QuadrantSpec::default()).unwrap();
    let cfg = FitConfig::new(3, vec![80, 80]);
    let problem = FitProblem::build(&cloud, &cfg).unwrap();
    let thresholds = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let mut linf = Vec::new();
    for &s in &thresholds {
        let e = fit_problem(&problem, &cfg.clone().with_s_star(s))
            .and_then(|(m, _)| error_vs_function(&m, polysinc_at, &[400, 400], None))
            .map_or(f64::INFINITY, |e| e.linf);
        linf.push(e);
    }
    let (imin, min) = linf
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
    let pass = linf[0] > 2.0 * min && linf[5] > min && (1.0..=4.0).contains(&thresholds[imin]);
    let table: Vec<String> = thresholds.iter().zip(&linf).map(|(s, e)| format!("{s}:{e:.3}")).collect();
    outcome(pass, format!("Linf by s* {}; min at s*={}", table.join(" "), thresholds[imin]))
}

fn c4_column_sums() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let inst = random_instance(1000 + seed, 600, seed % 2 == 0);
        let problem = FitProblem::build(&inst.cloud, &inst.config).unwrap();
        let (_, l2) = problem.strengths(&inst.config).unwrap();
        let s_star = inst.config.s_star;
        let mats = &problem.mats;
        for ((l, &s), abs) in l2.iter().zip(&mats.col_sums).zip(&mats.col_abs_sums_m2) {
            let lifted = s + l * abs;
            let target = s.max(s_star);
            worst = worst.max((lifted - target).abs() / target);
        }
    }
    outcome(worst <= 1e-12, format!("50 instances, worst relative deviation {worst:.1e}"))
}

fn c5_zero_threshold() -> Outcome {
    let mut identical = true;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let inst = random_instance(2000 + seed, 600, false);
        let zero = inst.config.clone().with_s_star(0.0);
        let off = inst.config.clone().unregularized();
        let pz = FitProblem::build(&inst.cloud, &zero).unwrap();
        let po = FitProblem::build(&inst.cloud, &off).unwrap();
        let (l1z, l2z) = pz.strengths(&zero).unwrap();
        let (l1o, l2o) = po.strengths(&off).unwrap();
        identical &= pz.stacked(&l1z, &l2z) == po.stacked(&l1o, &l2o);
        let (mz, _) = fit_problem(&pz, &zero).unwrap();
        let (mo, _) = fit_problem(&po, &off).unwrap();
        worst = worst.max(rel_diff(mz.control_points(), mo.control_points()));
    }
    outcome(
        identical && worst <= 1e-8,
        format!("20 instances, assembled systems bit-identical: {identical}, worst solution difference {worst:.1e}"),
    )
}

fn c6_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_qr = 0.0f64;
    for seed in 0..25 {
        let inst = random_instance(3000 + seed, 400, seed % 2 == 1);
        let problem = FitProblem::build(&inst.cloud, &inst.config).unwrap();
        let (l1, l2) = problem.strengths(&inst.config).unwrap();
        let stacked = problem.stacked(&l1, &l2);
        let oracle = dense_lstsq(&stacked, &stacked_rhs(&problem.values, stacked.nrows()));
        let (direct, _) = fit_problem(&problem, &inst.config.clone().with_solver(SolverKind::Direct)).unwrap();
        let (qr, _) = fit_problem(&problem, &inst.config.clone().with_solver(SolverKind::Qr)).unwrap();
        worst = worst.max(rel_diff(direct.control_points(), &oracle));
        worst_qr = worst_qr.max(rel_diff(qr.control_points(), &oracle));
    }
    outcome(
        worst < 1e-8 && worst_qr < 1e-8,
        format!("25 instances, worst relative error direct {worst:.1e}, qr {worst_qr:.1e}"),
    )
}

fn c7_derivatives() -> Outcome {
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut checks = 0usize;
    for seed in 0..12u64 {
        let mut r = rng(4000 + seed);
        let d = 1 + (seed % 3) as usize;
        let kvs: Vec<KnotVector> = (0..d)
            .map(|_| {
                let p = r.random_range(2..=4usize);
                KnotVector::uniform(p, r.random_range(p + 1..p + 8)).unwrap()
            })
            .collect();
        let n: usize = kvs.iter().map(|kv| kv.basis_count()).product();
        let cp = Array2::from_shape_fn((n, 1), |_| r.random_range(-1.0..1.0));
        let model = TensorSpline::new(kvs.clone(), cp, DomainBox::unit(d)).unwrap();
        let deltas: Vec<Vec<usize>> = (1..=2).flat_map(|o| derivative_multi_indices(d, o)).collect();
        let mut accepted = 0;
        while accepted < 100 {
            let u: Vec<f64> = (0..d).map(|_| r.random_range(0.01..0.99)).collect();
            // keep the stencil inside one polynomial piece
            let near_knot = u
                .iter()
                .zip(&kvs)
                .any(|(x, kv)| kv.knots().iter().any(|t| (x - t).abs() < 3.0 * h));
            if near_knot {
                continue;
            }
            accepted += 1;
            for delta in &deltas {
                let exact = model.eval_partial(&u, delta).unwrap()[0];
                let fd = finite_difference(&model, &u, delta, h);
                worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
                checks += 1;
            }
        }
    }
    outcome(worst < 1e-5, format!("{checks} derivative checks, worst relative error {worst:.1e}"))
}

/// Central differences, applied one axis at a time.
fn finite_difference(model: &TensorSpline, u: &[f64], delta: &[usize], h: f64) -> f64 {
    let Some(k) = delta.iter().position(|&q| q > 0) else {
        return model.eval(u).unwrap()[0];
    };
    let mut rest = delta.to_vec();
    let at = |offset: f64, rest: &[usize]| {
        let mut v = u.to_vec();
        v[k] += offset;
        finite_difference(model, &v, rest, h)
    };
    if delta[k] >= 2 {
        rest[k] -= 2;
        (at(h, &rest) - 2.0 * at(0.0, &rest) + at(-h, &rest)) / (h * h)
    } else {
        rest[k] -= 1;
        (at(h, &rest) - at(-h, &rest)) / (2.0 * h)
    }
}

fn c8_first_derivative_locality() -> Outcome {
    let spec = QuadrantSpec::default();
    let cloud = sample_quadrant_gradient(&spec).unwrap();
    let mut all_ok = true;
    let mut detail = Vec::new();
    for s_star in [0.5, 1.0, 4.0, 16.0] {
        let cfg = FitConfig::new(3, vec![80, 80]).with_s_star(s_star);
        let (model, report) = fit(&cloud, &cfg).unwrap();
        let only_empty = report
            .lambda1
            .iter()
            .zip(&report.col_sums)
            .all(|(l, s)| *l == 0.0 || *s == 0.0);
        let active = report.lambda1.iter().filter(|l| **l > 0.0).count();
        // lattice points whose active bases all have data must see a zero field
        let field = strength_field(&model, &report, 1, &[200, 200]).unwrap();
        let params = lattice_params(&[200, 200]).unwrap();
        let kvs = model.knot_vectors();
        let mut zero_outside = true;

        let corner = corner_box(&spec.domain, spec.empty_corner).unwrap();
        // the empty square dilated by one basis support in each direction
        let support = (kvs[0].degree() + 1) as f64 * model.domain_box().width(0) / (kvs[0].basis_count() - kvs[0].degree()) as f64;
        let near_corner = corner.dilate(support);
        for (i, u) in params.iter().enumerate() {
            let v = field.grid.values[[i, 0]];
            let touches_empty = touches_empty_column(kvs, u, &report.col_sums, model.space());
            if !touches_empty && v != 0.0 {
                zero_outside = false;
            }
        }
        // columns left empty by chance elsewhere are allowed but must be rare
        let anchors: Vec<Vec<f64>> = kvs.iter().map(KnotVector::anchors).collect();
        let empty: Vec<usize> = report.empty_columns().collect();
        let in_corner = empty
            .iter()
            .filter(|&&j| {
                let alpha = model.space().unlex(j).unwrap();
                let u: Vec<f64> = alpha.iter().enumerate().map(|(k, &a)| anchors[k][a]).collect();
                near_corner.contains(&model.domain_box().to_physical(&u))
            })
            .count();
        let corner_only = in_corner as f64 >= 0.95 * empty.len() as f64;
        all_ok &= only_empty && active > 0 && zero_outside && corner_only;
        let mut flags = String::new();
        for (ok, name) in [(only_empty, "lambda1 on data columns"), (zero_outside, "field off empty supports"), (corner_only, "empty columns away from corner")] {
            if !ok {
                flags.push_str(&format!(" [{name}]"));
            }
        }
        detail.push(format!("s*={s_star}: {active} active, {in_corner} of {} empty near corner{flags}", empty.len()));
    }
    outcome(
        all_ok,
        format!(
            "lambda1 > 0 only on empty columns, order-1 field zero wherever all active bases have data ({})",
            detail.join(", ")
        ),
    )
}

fn touches_empty_column(kvs: &[KnotVector], u: &[f64], col_sums: &[f64], space: &MultiIndexSpace) -> bool {
    let firsts: Vec<(usize, usize)> = kvs
        .iter()
        .zip(u)
        .map(|(kv, &x)| (kv.find_span(x).unwrap() - kv.degree(), kv.degree() + 1))
        .collect();
    let mut alpha = vec![0usize; kvs.len()];
    let total: usize = firsts.iter().map(|f| f.1).product();
    (0..total).any(|mut t| {
        for k in (0..kvs.len()).rev() {
            alpha[k] = firsts[k].0 + t % firsts[k].1;
            t /= firsts[k].1;
        }
        col_sums[space.lex_index(&alpha).unwrap()] == 0.0
    })
}

fn c9_hole() -> Outcome {
    let spec = HoleSpec::disk_default();
    let Hole::Disk(disk) = spec.hole else { unreachable!() };
    let cloud = sample_with_hole(&spec).unwrap();
    let (lo, hi) = cloud.value_range(0);
    let range = hi - lo;
    let hole_max = |m: &TensorSpline| {
        let g = grid_sample(m, &[201, 201]).unwrap();
        g.coords
            .rows()
            .into_iter()
            .zip(g.values.column(0))
            .filter(|(x, _)| disk.contains(&x.to_vec()))
            .map(|(_, v)| v.abs())
            .fold(0.0f64, f64::max)
    };
    let cfg = FitConfig::new(2, vec![60, 60]).with_s_star(5.0);
    let problem = FitProblem::build(&cloud, &cfg).unwrap();
    let (reg, _) = fit_problem(&problem, &cfg).unwrap();
    let (un, _) = fit_problem(&problem, &cfg.clone().unregularized().with_solver(SolverKind::Qr)).unwrap();
    let (r, u) = (hole_max(&reg), hole_max(&un));
    outcome(
        u > 10.0 * range && r <= 2.0 * range,
        format!("data range {range:.2}; max |model| in hole: unregularized {u:.3e}, regularized {r:.3}"),
    )
}

fn c10_hex_prism() -> Outcome {
    let spec = HoleSpec::hex_prism_default();
    let cloud = sample_with_hole(&spec).unwrap();
    let (lo, hi) = cloud.value_range(0);
    let range = hi - lo;
    let mut cfg = FitConfig::new(2, vec![16, 16, 8]).with_s_star(10.0);
    cfg.compute_condition = true;
    let problem = FitProblem::build(&cloud, &cfg).unwrap();
    let (model, report) = fit_problem(&problem, &cfg).unwrap();
    let cond = report.stacked_condition.unwrap();
    let corner_max = (0..8)
        .map(|c| {
            let u = [(c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64];
            model.eval(&u).unwrap()[0].abs()
        })
        .fold(0.0f64, f64::max);
    let unreg = fit_problem(&problem, &cfg.clone().unregularized().with_solver(SolverKind::Direct));
    let flagged = matches!(unreg, Err(Error::RankDeficient { .. }));
    let finite = model.control_points().iter().all(|v| v.is_finite());
    outcome(
        !cond.singular && finite && corner_max <= 2.0 * range && flagged,
        format!(
            "{} points, 2048 controls; regularized cond {:.3e}, max |corner| {corner_max:.2e} (range {range:.2}); unregularized normal solve {}",
            cloud.len(),
            cond.value(),
            if flagged { "rank-deficient" } else { "not flagged" }
        ),
    )
}

fn c11_properties() -> Outcome {
    let mut failures = Vec::new();
    let mut r = rng(5000);
    // partition of unity, nonnegativity and local support
    for p in 1..=5 {
        let kv = KnotVector::uniform(p, p + 9).unwrap();
        for _ in 0..10_000 {
            let u: f64 = r.random();
            let (span, vals) = kv.basis_nonzero(u).unwrap();
            let sum: f64 = vals.iter().sum();
            if (sum - 1.0).abs() >= 1e-12 || vals.iter().any(|v| *v < 0.0) {
                failures.push(format!("partition of unity p={p} u={u}"));
                break;
            }
            let t = kv.knots();
            for (i, _) in vals.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                let j = span - p + i;
                if u < t[j] || u > t[j + p + 1] {
                    failures.push(format!("local support p={p} j={j}"));
                }
            }
        }
    }
    // anchor optimality
    for p in 2..=4 {
        let kv = KnotVector::uniform(p, 12).unwrap();
        let t = kv.knots();
        for (j, &wj) in kv.anchors().iter().enumerate() {
            let peak = kv.basis_value(j, wj).unwrap();
            for _ in 0..1000 {
                let u = r.random_range(t[j]..=t[j + p + 1]);
                if kv.basis_value(j, u).unwrap() > peak + 1e-9 {
                    failures.push(format!("anchor p={p} j={j}"));
                    break;
                }
            }
        }
    }
    // lexicographic bijection
    for dims in [vec![5], vec![3, 4], vec![5, 4, 3]] {
        let space = MultiIndexSpace::new(dims.clone()).unwrap();
        for i in 0..space.len() {
            if space.lex_index(&space.unlex(i).unwrap()).unwrap() != i {
                failures.push(format!("lex bijection {dims:?}"));
                break;
            }
        }
    }
    // generator determinism
    let vs = VoidsSpec {
        points: 5000,
        sparsity: 0.1,
        seed: 9,
        ..VoidsSpec::default()
    };
    if sample_voids(&vs).unwrap() != sample_voids(&vs).unwrap() {
        failures.push("voids determinism".into());
    }
    // serialization round trips
    let inst = random_instance(5001, 300, true);
    let (model, report) = fit(&inst.cloud, &inst.config).unwrap();
    let mut buf = Vec::new();
    io::write_model(&mut buf, &model).unwrap();
    if io::read_model(&buf[..]).unwrap() != model {
        failures.push("model round trip".into());
    }
    let mut buf = Vec::new();
    io::write_cloud(&mut buf, &inst.cloud).unwrap();
    if io::read_cloud(&buf[..]).unwrap() != inst.cloud {
        failures.push("cloud round trip".into());
    }
    let mut buf = Vec::new();
    io::write_report(&mut buf, &report).unwrap();
    let back = io::read_report(&buf[..]).unwrap();
    if back.lambda1 != report.lambda1 || back.lambda2 != report.lambda2 || back.col_sums != report.col_sums {
        failures.push("report round trip".into());
    }
    let res = vec![7; model.domain_dim()];
    let grid = grid_sample(&model, &res).unwrap();
    let mut buf = Vec::new();
    io::write_grid(&mut buf, &grid).unwrap();
    if io::read_grid(&buf[..]).unwrap() != grid {
        failures.push("grid round trip".into());
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "partition of unity, local support, anchors, lex bijection, determinism, round trips".into()
        } else {
            failures.join("; ")
        },
    )
}
