//! Seeded random martingales. Instance `index` of master seed `s` is drawn
//! from its own stream, so any instance can be rebuilt on its own.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{spectral_projection, Filtration, FamilyKind, Martingale, Operator};
use crate::error::{NclabError, Result};
use crate::io::family_by_name;
use crate::random;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Complex Gaussian entries, projected onto `M_N`.
    Gaussian,
    /// Hermitian Gaussian.
    Hermitian,
    /// Gaussian differences on a random nonempty subset of levels.
    SparseDifference,
    /// Real diagonal operators.
    Classical,
    /// Each difference is the martingale part of a rank-one matrix.
    LowRank,
    /// `x r + delta x'` with `r` a proper projection of `M_1` and
    /// `delta ∈ {1e-7, 0}` alternating, so `s_N` is (nearly) singular.
    NearSingular,
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::Gaussian,
        Generator::Hermitian,
        Generator::SparseDifference,
        Generator::Classical,
        Generator::LowRank,
        Generator::NearSingular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::Hermitian => "hermitian",
            Generator::SparseDifference => "sparse-difference",
            Generator::Classical => "classical",
            Generator::LowRank => "low-rank",
            Generator::NearSingular => "near-singular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| NclabError::InvalidParameter(format!("unknown generator `{s}`")))
    }
}

/// Largest depth accepted by the generators (`d = 2^N <= 64`).
pub const MAX_LEVELS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceBatch {
    pub family: FamilyKind,
    pub levels: usize,
    pub generator: Generator,
    pub seed: u64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub index: u64,
    pub martingale: Martingale,
}

/// The standard filtration of a family at depth `levels`.
pub fn standard_filtration(family: FamilyKind, levels: usize) -> Result<Filtration> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(NclabError::InvalidParameter(format!("depth {levels} outside 1..={MAX_LEVELS}")));
    }
    family_by_name(family.name(), levels)
}

pub fn instance_id(family: FamilyKind, levels: usize, generator: Generator, seed: u64, index: u64) -> String {
    format!("{}/N{levels}/{}/seed{seed}/{index}", family.name(), generator.name())
}

pub fn generate_instances(batch: &InstanceBatch) -> Result<Vec<Instance>> {
    let f = standard_filtration(batch.family, batch.levels)?;
    (0..batch.count as u64)
        .map(|index| {
            Ok(Instance {
                id: instance_id(batch.family, batch.levels, batch.generator, batch.seed, index),
                index,
                martingale: generate(&f, batch.generator, batch.seed, index)?,
            })
        })
        .collect()
}

/// The `index`-th instance of `generator` on `f` under `seed`.
pub fn generate(f: &Filtration, generator: Generator, seed: u64, index: u64) -> Result<Martingale> {
    let mut rng = random::stream(seed, 2 * index);
    let d = f.dim();
    let top = f.levels();
    let x = match generator {
        Generator::Gaussian => random::in_level(&mut rng, f, top),
        Generator::Hermitian => random::hermitian_in_level(&mut rng, f, top),
        Generator::Classical => f.expect(top, &random::gaussian_real_diag(&mut rng, d)),
        Generator::SparseDifference => {
            let g = random::in_level(&mut rng, f, top);
            let m = Martingale::from_operator(f.clone(), &g)?;
            let keep: Vec<bool> = (0..top).map(|_| rng.gen_bool(0.5)).collect();
            let forced = rng.gen_range(0..top);
            return Ok(m.map_diffs(|k, dx| if keep[k - 1] || k - 1 == forced { dx.clone() } else { Operator::zeros(d) }));
        }
        Generator::LowRank => {
            let mut acc = Operator::zeros(d);
            for n in 1..=top {
                let u = random::gaussian_vector(&mut rng, d);
                let v = random::gaussian_vector(&mut rng, d);
                let r = f.expect(n, &Operator::outer(&u, &v));
                acc += &(&r - &f.expect(n - 1, &r));
            }
            acc
        }
        Generator::NearSingular => {
            let h = random::hermitian_in_level(&mut rng, f, 1);
            let top_eig = crate::algebra::eig_hermitian(&h)?.values[0];
            let r = spectral_projection(&h, top_eig - 1e-9 * top_eig.abs().max(1.0), f64::INFINITY)?;
            let delta = if index.is_multiple_of(2) { 1e-7 } else { 0.0 };
            let main = random::in_level(&mut rng, f, top).matmul(&r);
            let noise = random::in_level(&mut rng, f, top);
            &main + &noise.scale(delta)
        }
    };
    Martingale::from_operator(f.clone(), &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{square_function_sq, SquareKind};

    #[test]
    fn deterministic_given_seed() {
        for family in FamilyKind::ALL {
            for g in Generator::ALL {
                let batch = InstanceBatch { family, levels: 3, generator: g, seed: 9, count: 3 };
                let a = generate_instances(&batch).unwrap();
                let b = generate_instances(&batch).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert_eq!(x.id, y.id);
                    assert_eq!(x.martingale.terminal(), y.martingale.terminal());
                }
                assert_ne!(a[0].martingale.terminal(), a[1].martingale.terminal());
            }
        }
    }

    #[test]
    fn classical_instances_are_diagonal() {
        for family in FamilyKind::ALL {
            let batch = InstanceBatch { family, levels: 3, generator: Generator::Classical, seed: 1, count: 5 };
            for inst in generate_instances(&batch).unwrap() {
                assert!(inst.martingale.diffs().iter().all(|dx| dx.is_diagonal(0.0)));
            }
        }
    }

    #[test]
    fn near_singular_calibration() {
        for family in FamilyKind::ALL {
            let batch = InstanceBatch { family, levels: 3, generator: Generator::NearSingular, seed: 4, count: 20 };
            let hits = generate_instances(&batch)
                .unwrap()
                .iter()
                .filter(|inst| {
                    let s2 = square_function_sq(&inst.martingale, SquareKind::ConditionedColumn, None);
                    let e = crate::algebra::eig_hermitian(&s2).unwrap();
                    let s_max = e.values[0].max(0.0).sqrt();
                    let s_min = e.values.last().unwrap().max(0.0).sqrt();
                    s_min < 1e-6 * s_max
                })
                .count();
            assert!(hits * 2 >= 20, "{family:?}: {hits}");
        }
    }

    #[test]
    fn sparse_instances_skip_levels() {
        let batch = InstanceBatch {
            family: FamilyKind::TensorDyadic,
            levels: 4,
            generator: Generator::SparseDifference,
            seed: 2,
            count: 20,
        };
        let insts = generate_instances(&batch).unwrap();
        assert!(insts.iter().any(|i| i.martingale.diffs().iter().any(|dx| dx.is_zero(0.0))));
        assert!(insts.iter().all(|i| i.martingale.diffs().iter().any(|dx| !dx.is_zero(0.0))));
    }

    #[test]
    fn rejects_bad_sizes() {
        let batch = InstanceBatch { family: FamilyKind::TensorDyadic, levels: 0, generator: Generator::Gaussian, seed: 0, count: 1 };
        assert!(generate_instances(&batch).is_err());
        assert!(standard_filtration(FamilyKind::BlockPinching, 7).is_err());
    }
}
