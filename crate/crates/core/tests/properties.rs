use proptest::prelude::*;

use nclab::algebra::{eig_hermitian, gram_root, FamilyKind, Filtration, Martingale, Operator};
use nclab::atoms::lemma_alg_bound;
use nclab::decompositions::{algebraic_decomposition, cuculescu, weak_atomic_decomposition};
use nclab::functionals::{hardy_norm, lp_norm, square_function_sq, HardyKind, SquareKind};
use nclab::harness::generate::{generate, standard_filtration, Generator};
use nclab::harness::verify;
use nclab::io::InstanceJson;
use nclab::random;
use nclab::transforms::{difference_projection, zeta_profile};

fn family() -> impl Strategy<Value = FamilyKind> {
    prop_oneof![Just(FamilyKind::TensorDyadic), Just(FamilyKind::BlockPinching), Just(FamilyKind::CommutativePartition)]
}

fn generator() -> impl Strategy<Value = Generator> {
    (0..Generator::ALL.len()).prop_map(|i| Generator::ALL[i])
}

fn p_small() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(0.75), Just(1.0), Just(1.5), 0.3f64..1.9]
}

fn instance(family: FamilyKind, levels: usize, g: Generator, seed: u64) -> Martingale {
    generate(&standard_filtration(family, levels).unwrap(), g, seed, seed % 7).unwrap()
}

/// Block means of a real vector over a partition, computed directly.
fn block_means(blocks: &[Vec<usize>], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for b in blocks {
        let mean = b.iter().map(|&i| x[i]).sum::<f64>() / b.len() as f64;
        for &i in b {
            out[i] = mean;
        }
    }
    out
}

/// `||x||_{h_p^c}` of a real diagonal martingale on a partition filtration,
/// by scalar arithmetic only.
fn scalar_hardy(f: &Filtration, x: &[f64], p: f64) -> f64 {
    let blocks: Vec<_> = (1..=f.levels()).map(|n| f.blocks(n).unwrap().clone()).collect();
    let mut s2 = vec![0.0; x.len()];
    let mut prev = vec![0.0; x.len()];
    for k in 1..=f.levels() {
        let cur = block_means(&blocks[k - 1], x);
        let sq: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).collect();
        let cond = if k == 1 { sq } else { block_means(&blocks[k - 2], &sq) };
        s2.iter_mut().zip(cond).for_each(|(s, c)| *s += c);
        prev = cur;
    }
    (s2.iter().map(|v| v.sqrt().powf(p)).sum::<f64>() / x.len() as f64).powf(1.0 / p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expectations_preserve_trace_and_compose(fam in family(), levels in 1usize..=4, seed in any::<u64>()) {
        let f = standard_filtration(fam, levels).unwrap();
        let x = random::gaussian(&mut random::rng(seed), f.dim());
        for m in 1..=levels {
            let em = f.expect(m, &x);
            prop_assert!((em.tau() - x.tau()).norm() <= 1e-10 * x.norm2());
            prop_assert!(f.subalgebra_deviation(m, &em) <= 1e-9 * x.norm2());
            for n in 1..=levels {
                let lhs = f.expect(m, &f.expect(n, &x));
                prop_assert!((&lhs - &f.expect(m.min(n), &x)).norm2() <= 1e-9 * x.norm2());
            }
        }
    }

    #[test]
    fn generated_instances_are_martingales(fam in family(), g in generator(), levels in 1usize..=4, seed in any::<u64>()) {
        let m = instance(fam, levels, g, seed);
        let f = m.filtration();
        for k in 1..=levels {
            let dx = m.diff(k);
            prop_assert!(f.subalgebra_deviation(k, dx) <= 1e-9 * dx.norm2().max(1.0));
            prop_assert!(f.expect(k - 1, dx).norm2() <= 1e-9 * dx.norm2().max(1.0));
        }
    }

    #[test]
    fn algebraic_decomposition_reconstructs(fam in family(), g in generator(), levels in 2usize..=4, seed in any::<u64>(), p in p_small()) {
        let m = instance(fam, levels, g, seed);
        let x = m.terminal();
        let dec = algebraic_decomposition(&m, p).unwrap();
        let y = dec.y_part();
        prop_assert!((&(&dec.x1 + &y) - &x).norm2() <= 1e-8 * x.norm2().max(1.0));
        prop_assert!(m.filtration().expect(1, &y).norm2() <= 1e-9 * x.norm2().max(1.0));
        prop_assert!(dec.certificate.valid, "{:?}", dec.certificate);
        let energy_bound = (2.0 / p) * (dec.hardy.powf(p) - lp_norm(&dec.x1, p).unwrap().powf(p));
        prop_assert!(dec.alpha_energy() <= energy_bound + 1e-8 * energy_bound.max(1.0));
        let (lhs, rhs) = lemma_alg_bound(&dec.x1, &dec.normalized, p, m.filtration()).unwrap();
        prop_assert!(lhs <= rhs + 1e-7 * rhs.max(1.0));
    }

    #[test]
    fn lp_norm_below_hardy_norm_constant(fam in family(), g in generator(), levels in 1usize..=4, seed in any::<u64>(), p in p_small()) {
        let m = instance(fam, levels, g, seed);
        let h = hardy_norm(&m, HardyKind::ConditionedColumn, p).unwrap();
        let l = lp_norm(&m.terminal(), p).unwrap();
        prop_assert!(l <= (2.0 / p).sqrt() * h * (1.0 + 1e-8) + 1e-12, "{l} > sqrt(2/p) {h}");
    }

    #[test]
    fn classical_hardy_norm_matches_scalar_oracle(levels in 1usize..=5, seed in any::<u64>(), p in p_small()) {
        let f = Filtration::balanced_commutative(levels).unwrap();
        let mut rng = random::rng(seed);
        let x: Vec<f64> = random::gaussian_real_diag(&mut rng, f.dim()).diagonal().iter().map(|z| z.re).collect();
        let m = Martingale::from_operator(f.clone(), &Operator::from_real_diag(&x)).unwrap();
        let want = scalar_hardy(&f, &x, p);
        let got = hardy_norm(&m, HardyKind::ConditionedColumn, p).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
        let lp = (x.iter().map(|v| v.abs().powf(p)).sum::<f64>() / x.len() as f64).powf(1.0 / p);
        prop_assert!((lp_norm(&m.terminal(), p).unwrap() - lp).abs() <= 1e-12 * lp.max(1.0));
    }

    #[test]
    fn two_norms_agree_on_mean_zero(fam in family(), g in generator(), levels in 2usize..=4, seed in any::<u64>()) {
        let m = instance(fam, levels, g, seed).map_diffs(|k, dx| if k == 1 { Operator::zeros(dx.dim()) } else { dx.clone() });
        let x = m.terminal();
        for kind in [HardyKind::Column, HardyKind::ConditionedColumn, HardyKind::Row, HardyKind::ConditionedRow] {
            prop_assert!((hardy_norm(&m, kind, 2.0).unwrap() - x.norm2()).abs() <= 1e-9 * x.norm2().max(1.0));
        }
    }

    #[test]
    fn weak_decomposition_bound(fam in family(), g in generator(), levels in 2usize..=3, seed in any::<u64>(), p in prop_oneof![Just(0.5), Just(1.0)]) {
        let m = instance(fam, levels, g, seed);
        let dec = weak_atomic_decomposition(&m, p, 1.5).unwrap();
        prop_assert!(dec.reconstruction_error(&m.terminal()) <= 1e-8 * m.terminal().norm2().max(1.0));
        prop_assert!(dec.bound_lhs <= dec.bound_rhs * (1.0 + 1e-8) + 1e-12);
        prop_assert!(dec.all_certificates_valid());
    }

    #[test]
    fn instance_json_round_trip_is_bit_exact(fam in family(), g in generator(), levels in 1usize..=3, seed in any::<u64>()) {
        let m = instance(fam, levels, g, seed);
        let text = serde_json::to_string(&InstanceJson::from_martingale(&m)).unwrap();
        let back: InstanceJson = serde_json::from_str(&text).unwrap();
        let m2 = back.to_martingale().unwrap();
        for (a, b) in m.diffs().iter().zip(m2.diffs()) {
            prop_assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn zeta_bounds_the_norm_gap(fam in family(), levels in 1usize..=3, seed in any::<u64>()) {
        let f = standard_filtration(fam, levels).unwrap();
        let zeta = zeta_profile(&f, 0);
        let mut rng = random::rng(seed);
        for n in 1..=levels {
            let Some(z) = zeta.get(n) else { continue };
            prop_assert!(z > 0.0 && z <= 1.0);
            let x = difference_projection(&f, n, &random::gaussian(&mut rng, f.dim()));
            let sup = nclab::functionals::op_norm(&x);
            prop_assert!(sup <= z.powf(-0.5) * x.norm2() * (1.0 + 1e-8));
        }
    }

    #[test]
    fn cuculescu_projections_decrease_and_adapt(fam in family(), g in generator(), seed in any::<u64>(), frac in 0.1f64..1.0) {
        let m = instance(fam, 3, g, seed);
        let f = m.filtration();
        let squares: Vec<Operator> = (1..=3).map(|k| square_function_sq(&m, SquareKind::ConditionedColumn, Some(k))).collect();
        let top = nclab::functionals::op_norm(&squares[2]).sqrt();
        prop_assume!(top > 0.0);
        let t = cuculescu(&squares, &Operator::identity(f.dim()), 1, frac * top, f).unwrap();
        for k in 2..=3 {
            let (q, prev) = (t.at(k), t.at(k - 1));
            prop_assert!((&q.matmul(prev) - q).max_abs() <= 1e-9);
            prop_assert!(f.subalgebra_deviation(k - 1, q) <= 1e-9);
            prop_assert!(q.projection_deviation() <= 1e-9);
        }
    }

    #[test]
    fn gram_root_squares_match_gram_eigenvalues(dim in 1usize..=8, blocks in 1usize..=3, seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let factors: Vec<Operator> = (0..blocks).map(|_| random::gaussian(&mut rng, dim)).collect();
        let gram = factors.iter().fold(Operator::zeros(dim), |acc, f| acc + f.adjoint().matmul(f));
        let columns = (0..dim).map(|j| factors.iter().flat_map(|f| f.column(j)).collect()).collect();
        let (sigma, _) = gram_root(columns);
        let mut want = eig_hermitian(&gram).unwrap().values;
        want.sort_by(|a, b| b.total_cmp(a));
        let top = want[0].max(1.0);
        for (s, l) in sigma.iter().zip(&want) {
            prop_assert!((s * s - l).abs() <= 1e-11 * top, "{s}^2 vs {l}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn verify_is_deterministic(seed in any::<u64>()) {
        let names = vec!["rev-triangle".to_string(), "com-l2".to_string()];
        let a = verify(&names, &FamilyKind::ALL, Some(3), seed).unwrap();
        let b = verify(&names, &FamilyKind::ALL, Some(3), seed).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.rows).unwrap(), serde_json::to_string(&b.rows).unwrap());
    }
}
