//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use aniso_rt::experiments::family::{cap_series, FamilyKind, FamilySpec};
use aniso_rt::experiments::sampling::{
    random_polynomial_field, random_rt_member, random_sweep_simplex, random_tet_of_type,
    random_thin_triangle,
};
use aniso_rt::experiments::study::{run_family_study, summarize};
use aniso_rt::experiments::{check_scaling_lemma, counterexample, BoundVariant, Integrator, ScalingLemma};
use aniso_rt::fields::{field_by_name, FieldRef, PolynomialField, VectorField};
use aniso_rt::geometry::{
    angle_report, canonical_decompose, condition_numbers, param_h_t, param_h_t0, ReferenceElement,
    Simplex, TetCase,
};
use aniso_rt::quadrature::{simplex_rule, MAX_DEGREE};
use aniso_rt::rt_space::{
    interpolate_physical, interpolate_physical_direct, interpolate_reference, rt_dim, RtSpace,
};
use aniso_rt::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SWEEP_SEED: u64 = 20_240_601;
const SWEEP_SAMPLES: usize = 1000;
const SCALING_SEED: u64 = 4_141;
const SCALING_SAMPLES: usize = 500;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn sweep(dim: usize) -> Vec<Simplex> {
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED + dim as u64);
    (0..SWEEP_SAMPLES).map(|_| random_sweep_simplex(&mut rng, dim)).collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn c1_dimensions() -> Outcome {
    let got = [rt_dim(0, 2), rt_dim(1, 2), rt_dim(2, 2), rt_dim(0, 3), rt_dim(1, 3)];
    let want = [3, 8, 15, 4, 15];
    let spaces_agree = [(0, ReferenceElement::Triangle), (1, ReferenceElement::Triangle), (2, ReferenceElement::Triangle)]
        .into_iter()
        .chain([(0, ReferenceElement::TetTypeI), (1, ReferenceElement::TetTypeII)])
        .all(|(k, r)| RtSpace::shared(k, r).map(|s| s.len() == rt_dim(k, r.dim())).unwrap_or(false));
    outcome(
        got == want && spaces_agree,
        format!("rt_dim = {got:?}, expected {want:?}; built spaces match: {spaces_agree}"),
    )
}

fn c2_counterexample() -> Outcome {
    match counterexample(0) {
        Ok(r) => {
            let coeff = r.coefficient_error.unwrap_or(f64::INFINITY);
            let pass = coeff <= 1e-12 && r.first_component_error > 0.1 && r.first_component_seminorm == 0.0;
            outcome(
                pass,
                format!(
                    "coefficient error {coeff:.2e} (tol 1e-12); ||(Iv)_1 - v_1||_L2 = {:.6} (needs > 0.1; exact 1/(6 sqrt 3) = {:.6}); |v_1|_H1 = {}",
                    r.first_component_error,
                    r.exact_error.unwrap_or(f64::NAN),
                    r.first_component_seminorm
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn c3_lemma2(sweeps: &[(usize, Vec<Simplex>)]) -> Outcome {
    let mut violations = 0;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (_, samples) in sweeps {
        for s in samples {
            let d = canonical_decompose(s).expect("sweep sample decomposes");
            let ht = param_h_t(&d, s.volume(), s.diameter());
            let h0 = param_h_t0(s);
            let r = ht / h0;
            lo = lo.min(r);
            hi = hi.max(r);
            if !(r > 0.5 * (1.0 - 1e-12) && r < 2.0 * (1.0 + 1e-12)) {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over 2 x {SWEEP_SAMPLES} samples; H_T/H_T0 in [{lo:.4}, {hi:.4}]"),
    )
}

fn c4_conditioning(sweeps: &[(usize, Vec<Simplex>)]) -> Outcome {
    let mut fails = Vec::new();
    let mut worst_det: f64 = 0.0;
    let mut worst_cond: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut worst_rot: f64 = 0.0;
    for (dim, samples) in sweeps {
        let (norm_bound, cond_factor) = if *dim == 2 { (2f64.sqrt(), 1.0) } else { (2.0, 2.0 / 3.0) };
        for (i, s) in samples.iter().enumerate() {
            let d = canonical_decompose(s).expect("sweep sample decomposes");
            let cn = condition_numbers(&d);
            let h = s.diameter();
            let vol = s.volume();
            let det_err = (cn.det_at.abs() - factorial(*dim) * vol).abs() / (factorial(*dim) * vol);
            let cond_ratio = cn.cond_atilde / (cond_factor * param_h_t(&d, vol, h) / h);
            worst_det = worst_det.max(det_err);
            worst_cond = worst_cond.max(cond_ratio);
            worst_norm = worst_norm.max(cn.norm_atilde / norm_bound);
            worst_rot = worst_rot.max((cn.norm_rotation - 1.0).abs());
            if det_err > 1e-12
                || cn.norm_atilde > norm_bound * (1.0 + 1e-12)
                || cond_ratio > 1.0 + 1e-12
                || (cn.norm_rotation - 1.0).abs() > 1e-12
            {
                fails.push((*dim, i));
            }
        }
    }
    outcome(
        fails.is_empty(),
        format!(
            "{} failing samples; max rel det error {worst_det:.1e}, max |A~|/bound {worst_norm:.4}, max cond/bound {worst_cond:.4}, max ||A_T0|-1| {worst_rot:.1e}",
            fails.len()
        ),
    )
}

fn c5_reconstruction(sweeps: &[(usize, Vec<Simplex>)]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut counts = [0usize; 3];
    for (_, samples) in sweeps {
        for s in samples {
            let d = canonical_decompose(s).expect("sweep sample decomposes");
            worst = worst.max(d.reconstruction_error(s) / s.diameter());
            counts[match d.case() {
                None => 0,
                Some(TetCase::TypeI) => 1,
                Some(TetCase::TypeII) => 2,
            }] += 1;
        }
    }
    outcome(
        worst <= 1e-10 && counts.iter().all(|&c| c > 0),
        format!(
            "max error / h = {worst:.2e} (tol 1e-10); triangles {}, Type i {}, Type ii {}",
            counts[0], counts[1], counts[2]
        ),
    )
}

fn max_abs_diff<F: Fn(&[f64]) -> f64>(integ: &Integrator, f: F) -> f64 {
    integ.points.iter().map(|x| f(x).abs()).fold(0.0, f64::max)
}

fn c6_commuting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut reproduce: f64 = 0.0;
    let mut agree: f64 = 0.0;
    for k in 0..=1 {
        for dim in [2, 3] {
            for i in 0..100 {
                let s = random_sweep_simplex(&mut rng, dim);
                let integ = Integrator::new(&s, 6).unwrap();
                // A member of RT^k in physical coordinates is reproduced.
                let member: FieldRef = Arc::new(PolynomialField::new("member", random_rt_member(&mut rng, k, dim)));
                let interp = interpolate_physical(k, &s, &member).unwrap();
                let scale = max_abs_diff(&integ, |x| member.value(x).amax()).max(1.0);
                reproduce = reproduce.max(
                    max_abs_diff(&integ, |x| (interp.evaluate(x) - member.value(x)).amax()) / scale,
                );
                // Same on the reference element it maps from.
                if i % 10 == 0 {
                    let reference = canonical_decompose(&s).unwrap().reference;
                    let space = RtSpace::shared(k, reference).unwrap();
                    let hat = PolynomialField::new("hat", random_rt_member(&mut rng, k, dim));
                    let ih = interpolate_reference(&space, &hat);
                    let ri = Integrator::new(&reference.simplex(), 6).unwrap();
                    reproduce = reproduce.max(max_abs_diff(&ri, |x| {
                        (ih.evaluate_reference(x) - hat.value(x)).amax()
                    }));
                }
                // Pullback path against moments taken on the physical element.
                let general: FieldRef = Arc::new(random_polynomial_field(&mut rng, dim, 3));
                let a = interpolate_physical(k, &s, &general).unwrap();
                let b = interpolate_physical_direct(k, &s, general.as_ref()).unwrap();
                let scale = max_abs_diff(&integ, |x| a.evaluate(x).amax()).max(1.0);
                agree = agree.max(max_abs_diff(&integ, |x| (a.evaluate(x) - b.evaluate(x)).amax()) / scale);
            }
        }
    }
    outcome(
        reproduce <= 1e-10 && agree <= 1e-9,
        format!("RT^k reproduction error {reproduce:.2e} (tol 1e-10); path disagreement {agree:.2e} (tol 1e-9); 100 elements per (k, d)"),
    )
}

fn c7_needle() -> Outcome {
    let spec = FamilySpec::new(FamilyKind::Needle2d { gamma: 2.0 }, 5);
    let field = field_by_name("trig", 2).unwrap();
    match run_family_study(&spec, 0, &field, 2.0) {
        Ok(rows) => {
            let ratios: Vec<f64> = rows.iter().map(|r| r.ratios.get("rt62").copied().unwrap_or(f64::NAN)).collect();
            let summary = summarize(&rows);
            let growth = summary.growth.get(BoundVariant::Rt62.name()).copied().unwrap_or(f64::INFINITY);
            let max_angle = rows.iter().map(|r| r.max_angle).fold(0.0, f64::max);
            outcome(
                growth <= 1.1 && ratios.iter().all(|r| r.is_finite()),
                format!(
                    "lhs/rt62 per level {:?}; sup growth after level 3 = {growth:.4} (limit 1.1); max angle {:.4}",
                    ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>(),
                    max_angle
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn c8_caps() -> Outcome {
    let series = cap_series(5).unwrap();
    let reports: Vec<_> = series.iter().map(|(_, s)| angle_report(s, 10.0).unwrap()).collect();
    let angles: Vec<f64> = reports.iter().map(|r| r.max_angle).collect();
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio_h).collect();
    let inc = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let growth = ratios[4] / ratios[0];
    outcome(
        inc(&angles) && inc(&ratios) && growth >= 100.0,
        format!(
            "max angle {:?}; H_T0/h {:?}; growth {growth:.1} (needs >= 100)",
            angles.iter().map(|a| format!("{a:.6}")).collect::<Vec<_>>(),
            ratios.iter().map(|a| format!("{a:.4e}")).collect::<Vec<_>>()
        ),
    )
}

fn c9_convergence() -> Outcome {
    let spec = FamilySpec::new(FamilyKind::ShapeRegular { dim: 2 }, 5);
    let field = field_by_name("trig", 2).unwrap();
    match run_family_study(&spec, 0, &field, 2.0) {
        Ok(rows) => {
            let orders: Vec<f64> = rows.iter().filter_map(|r| r.order).collect();
            let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
            outcome(
                orders.len() == 4 && min >= 0.9,
                format!("observed orders {:?}; min {min:.4} (needs >= 0.9)", orders.iter().map(|o| format!("{o:.4}")).collect::<Vec<_>>()),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

/// Sup ratio for every lemma and order over a seeded sample, and the number
/// of samples skipped because the shear bound failed.
fn scaling_sweep(seed: u64) -> Vec<(String, f64, usize)> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Simplex, Simplex, Simplex, PolynomialField, PolynomialField)> = (0..SCALING_SAMPLES)
        .map(|_| {
            (
                random_thin_triangle(&mut rng),
                random_sweep_simplex(&mut rng, 3),
                random_tet_of_type(&mut rng, TetCase::TypeII),
                random_polynomial_field(&mut rng, 2, 3),
                random_polynomial_field(&mut rng, 3, 3),
            )
        })
        .collect();
    let cases: Vec<(ScalingLemma, usize)> = ScalingLemma::ALL
        .iter()
        .flat_map(|&l| (0..=l.max_order()).map(move |o| (l, o)))
        .collect();
    for (lemma, order) in cases {
        let dims: &[usize] = if lemma.needs_type_ii() { &[3] } else { &[2, 3] };
        for &dim in dims {
            let mut sup: f64 = 0.0;
            let mut skipped = 0;
            for (tri, tet, tet2, f2, f3) in &samples {
                let (s, f): (&Simplex, FieldRef) = match dim {
                    2 => (tri, Arc::new(f2.clone())),
                    _ if lemma.needs_type_ii() => (tet2, Arc::new(f3.clone())),
                    _ => (tet, Arc::new(f3.clone())),
                };
                match check_scaling_lemma(s, &f, 2.0, lemma, order, 10.0) {
                    Ok(r) => sup = sup.max(r.ratio),
                    Err(Error::Assumption1Violated { .. }) => skipped += 1,
                    Err(e) => panic!("{lemma} order {order}: {e}"),
                }
            }
            out.push((format!("{lemma}/d{dim}/o{order}"), sup, skipped));
        }
    }
    out
}

fn c10_scaling() -> Outcome {
    let a = scaling_sweep(SCALING_SEED);
    let b = scaling_sweep(SCALING_SEED);
    let same = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits() && x.2 == y.2);
    let finite = a.iter().all(|(_, s, skipped)| s.is_finite() && *skipped < SCALING_SAMPLES);
    let listing: Vec<String> = a
        .iter()
        .map(|(n, s, k)| if *k > 0 { format!("{n}={s:.3e} ({k} skipped)") } else { format!("{n}={s:.3e}") })
        .collect();
    outcome(
        same && finite,
        format!(
            "seed {SCALING_SEED}, {SCALING_SAMPLES} samples; reproducible: {same}; sup ratios: {}",
            listing.join(", ")
        ),
    )
}

fn c11_quadrature() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rules = 0;
    for dim in 1..=3 {
        for degree in 0..=MAX_DEGREE {
            let rule = simplex_rule(dim, degree).unwrap();
            rules += 1;
            for a in 0..=rule.exact_degree {
                for b in 0..=(rule.exact_degree - a) * (dim >= 2) as usize {
                    for c in 0..=(rule.exact_degree - a - b) * (dim >= 3) as usize {
                        let e = [a, b, c];
                        let exact = e[..dim].iter().map(|&n| factorial(n)).product::<f64>()
                            / factorial(e[..dim].iter().sum::<usize>() + dim);
                        let quad: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| w * (0..dim).map(|i| p[i + 1].powi(e[i] as i32)).product::<f64>())
                            .sum();
                        worst = worst.max((quad - exact).abs());
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("{rules} rules, degrees 0..={MAX_DEGREE}; max |error| {worst:.2e} (tol 1e-12)"))
}

fn main() {
    let t = Instant::now();
    let sweeps = vec![(2, sweep(2)), (3, sweep(3))];
    let sample_time = t.elapsed();

    let mut failed = 0;
    let mut total = 0;
    let mut run = |id: usize, name: &str, limit: Option<u64>, extra: Duration, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let elapsed = t.elapsed() + extra;
        let in_time = limit.is_none_or(|l| elapsed <= Duration::from_secs(l));
        let pass = o.pass && in_time;
        total += 1;
        if !pass {
            failed += 1;
        }
        let time = match limit {
            Some(l) => format!("{:.3} s, limit {l} s", elapsed.as_secs_f64()),
            None => format!("{:.3} s", elapsed.as_secs_f64()),
        };
        println!(
            "criterion {id:>2} [{}] {name}: {} ({time})",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    let none = Duration::ZERO;
    run(1, "dimension formula", Some(1), none, &c1_dimensions);
    run(2, "counterexample", Some(1), none, &c2_counterexample);
    // The sweep samples are shared by criteria 3 to 5 and their generation
    // time is charged to each.
    run(3, "lemma 2 equivalence", Some(5), sample_time, &|| c3_lemma2(&sweeps));
    run(4, "determinant and condition numbers", Some(5), sample_time, &|| c4_conditioning(&sweeps));
    run(5, "reconstruction", None, sample_time, &|| c5_reconstruction(&sweeps));
    run(6, "projection and commuting", None, none, &c6_commuting);
    run(7, "needle ratio boundedness", Some(30), none, &c7_needle);
    run(8, "cap co-divergence", Some(5), none, &c8_caps);
    run(9, "shape-regular convergence", Some(30), none, &c9_convergence);
    run(10, "scaling-lemma sweeps", None, none, &c10_scaling);
    run(11, "quadrature exactness", None, none, &c11_quadrature);

    println!("{} of {total} criteria passed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
