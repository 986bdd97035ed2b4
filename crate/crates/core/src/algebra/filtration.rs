//! Finite filtrations `M_1 ⊆ ... ⊆ M_N` with their conditional expectations.

use serde::{Deserialize, Serialize};

use super::operator::{Operator, C64};
use crate::error::{NclabError, Result};

/// A partition of `0..d` into blocks of basis indices.
pub type Partition = Vec<Vec<usize>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Family {
    /// `M_n = M_{2^n} ⊗ 1` inside `M_{2^N}`; the first tensor factor is the
    /// most significant index bit.
    TensorDyadic {
        #[serde(rename = "N")]
        levels: usize,
    },
    /// `M_n` is block-diagonal over `partitions[n-1]`; the chain goes from
    /// finest to coarsest.
    BlockPinching { partitions: Vec<Partition> },
    /// `M_n` consists of diagonal matrices constant on the blocks of
    /// `partitions[n-1]`; the chain goes from coarsest to finest.
    CommutativePartition { partitions: Vec<Partition> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    TensorDyadic,
    BlockPinching,
    CommutativePartition,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] =
        [FamilyKind::TensorDyadic, FamilyKind::BlockPinching, FamilyKind::CommutativePartition];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::TensorDyadic => "TensorDyadic",
            FamilyKind::BlockPinching => "BlockPinching",
            FamilyKind::CommutativePartition => "CommutativePartition",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', '_'], "");
        match norm.as_str() {
            "tensordyadic" | "tensor" => Ok(FamilyKind::TensorDyadic),
            "blockpinching" | "block" | "pinching" => Ok(FamilyKind::BlockPinching),
            "commutativepartition" | "commutative" | "classical" => Ok(FamilyKind::CommutativePartition),
            _ => Err(NclabError::InvalidFiltration(format!("unknown family `{s}`"))),
        }
    }
}

/// A validated filtration on `M_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Filtration {
    family: Family,
    dim: usize,
    levels: usize,
    /// Block label of each basis index at each level (partition families).
    labels: Vec<Vec<usize>>,
}

impl Filtration {
    pub fn new(dim: usize, family: Family) -> Result<Self> {
        let (levels, labels) = match &family {
            Family::TensorDyadic { levels } => {
                if *levels == 0 || *levels > 10 {
                    return Err(NclabError::InvalidFiltration(format!("tensor depth {levels} outside 1..=10")));
                }
                if dim != 1 << levels {
                    return Err(NclabError::InvalidFiltration(format!(
                        "tensor depth {levels} needs dimension {}, got {dim}",
                        1usize << levels
                    )));
                }
                (*levels, Vec::new())
            }
            Family::BlockPinching { partitions } => {
                let labels = validate_chain(dim, partitions, false)?;
                (partitions.len(), labels)
            }
            Family::CommutativePartition { partitions } => {
                let labels = validate_chain(dim, partitions, true)?;
                (partitions.len(), labels)
            }
        };
        Ok(Self { family, dim, levels, labels })
    }

    /// `M_{2^N}` with the tensor dyadic chain.
    pub fn tensor_dyadic(levels: usize) -> Result<Self> {
        Self::new(1usize.checked_shl(levels as u32).unwrap_or(0), Family::TensorDyadic { levels })
    }

    /// `M_{2^N}` with level-`n` blocks of size `2^n` (a single block at `n = N`).
    pub fn block_dyadic(levels: usize) -> Result<Self> {
        let d = 1usize << levels;
        let partitions = (1..=levels).map(|n| contiguous_blocks(d, 1 << n)).collect();
        Self::new(d, Family::BlockPinching { partitions })
    }

    /// Diagonal algebra of `C^{2^N}`; level `n` has `2^n` equal blocks.
    pub fn balanced_commutative(levels: usize) -> Result<Self> {
        let d = 1usize << levels;
        let partitions = (1..=levels).map(|n| contiguous_blocks(d, d >> n)).collect();
        Self::new(d, Family::CommutativePartition { partitions })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn kind(&self) -> FamilyKind {
        match self.family {
            Family::TensorDyadic { .. } => FamilyKind::TensorDyadic,
            Family::BlockPinching { .. } => FamilyKind::BlockPinching,
            Family::CommutativePartition { .. } => FamilyKind::CommutativePartition,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn is_commutative(&self) -> bool {
        matches!(self.family, Family::CommutativePartition { .. })
    }

    /// Blocks of the level-`n` partition (partition families only).
    pub fn blocks(&self, n: usize) -> Option<&Partition> {
        match &self.family {
            Family::TensorDyadic { .. } => None,
            Family::BlockPinching { partitions } | Family::CommutativePartition { partitions } => {
                partitions.get(n.checked_sub(1)?)
            }
        }
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.levels {
            return Err(NclabError::LevelOutOfRange { level: n, levels: self.levels });
        }
        Ok(())
    }

    /// `E_n(x)` for `1 <= n <= N`.
    pub fn conditional_expectation(&self, n: usize, x: &Operator) -> Result<Operator> {
        self.check_level(n)?;
        if x.dim() != self.dim {
            return Err(NclabError::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        Ok(self.expect(n, x))
    }

    /// `E_n(x)` without range checks. Level `0` maps to zero.
    pub fn expect(&self, n: usize, x: &Operator) -> Operator {
        let d = self.dim;
        if n == 0 {
            return Operator::zeros(d);
        }
        match &self.family {
            Family::TensorDyadic { levels } => {
                let traced = 1usize << (levels - n);
                if traced == 1 {
                    return x.clone();
                }
                let kept = d / traced;
                let mut reduced = vec![C64::new(0.0, 0.0); kept * kept];
                for a in 0..kept {
                    for a2 in 0..kept {
                        let mut acc = C64::new(0.0, 0.0);
                        for c in 0..traced {
                            acc += x.get(a * traced + c, a2 * traced + c);
                        }
                        reduced[a * kept + a2] = acc / traced as f64;
                    }
                }
                Operator::from_fn(d, |i, j| {
                    if i % traced == j % traced {
                        reduced[(i / traced) * kept + j / traced]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
            Family::BlockPinching { .. } => {
                let lab = &self.labels[n - 1];
                Operator::from_fn(d, |i, j| if lab[i] == lab[j] { x.get(i, j) } else { C64::new(0.0, 0.0) })
            }
            Family::CommutativePartition { partitions } => {
                let mut out = Operator::zeros(d);
                for block in &partitions[n - 1] {
                    let mean: C64 = block.iter().map(|&i| x.get(i, i)).sum::<C64>() / block.len() as f64;
                    for &i in block {
                        out.set(i, i, mean);
                    }
                }
                out
            }
        }
    }

    /// An `F` with `F* F = E_n(y* y)`, built from singular value
    /// decompositions of rearrangements of `y` rather than from `E_n(y* y)`,
    /// so its small singular values are accurate to `eps ||y||`.
    pub fn conditioned_factor(&self, n: usize, y: &Operator) -> Operator {
        let d = self.dim;
        let zero = C64::new(0.0, 0.0);
        if n == 0 {
            return Operator::zeros(d);
        }
        // `R` with `R* R = G* G` for the tall matrix with the given columns.
        let root = |columns: Vec<Vec<C64>>| {
            let (sigma, v) = super::eigen::gram_root(columns);
            let k = sigma.len();
            Operator::from_fn(k, |i, j| v.get(j, i).conj() * sigma[i])
        };
        match &self.family {
            Family::TensorDyadic { levels } => {
                let traced = 1usize << (levels - n);
                let kept = d / traced;
                // tr_B(y* y) = G* G with G[(r, c), a] = y[r, a * traced + c].
                let columns =
                    (0..kept).map(|a| (0..d).flat_map(|r| (0..traced).map(move |c| (r, c))).map(|(r, c)| y.get(r, a * traced + c)).collect()).collect();
                let r = root(columns);
                let scale = 1.0 / (traced as f64).sqrt();
                Operator::from_fn(d, |i, j| if i % traced == j % traced { r.get(i / traced, j / traced) * scale } else { zero })
            }
            Family::BlockPinching { .. } => {
                let mut out = Operator::zeros(d);
                for block in self.blocks(n).expect("partition family") {
                    let r = root(block.iter().map(|&j| y.column(j)).collect());
                    for (a, &i) in block.iter().enumerate() {
                        for (b, &j) in block.iter().enumerate() {
                            out.set(i, j, r.get(a, b));
                        }
                    }
                }
                out
            }
            Family::CommutativePartition { partitions } => {
                let mut out = Operator::zeros(d);
                for block in &partitions[n - 1] {
                    let energy: f64 = block.iter().map(|&j| (0..d).map(|r| y.get(r, j).norm_sqr()).sum::<f64>()).sum();
                    let value = (energy / block.len() as f64).sqrt();
                    for &i in block {
                        out.set(i, i, C64::new(value, 0.0));
                    }
                }
                out
            }
        }
    }

    /// `||E_n(x) - x||_2`.
    pub fn subalgebra_deviation(&self, n: usize, x: &Operator) -> f64 {
        (&self.expect(n, x) - x).norm2()
    }

    /// Fails unless `x ∈ M_n` up to `tol * max(1, ||x||_2)`.
    pub fn require_in_level(&self, n: usize, x: &Operator, tol: f64) -> Result<()> {
        self.check_level(n)?;
        let deviation = self.subalgebra_deviation(n, x);
        if deviation > tol * x.norm2().max(1.0) {
            return Err(NclabError::NotInSubalgebra { level: n, deviation });
        }
        Ok(())
    }
}


pub(crate) fn contiguous_blocks(d: usize, size: usize) -> Partition {
    (0..d / size).map(|b| (b * size..(b + 1) * size).collect()).collect()
}

fn labels_of(dim: usize, partition: &Partition) -> Result<Vec<usize>> {
    let mut labels = vec![usize::MAX; dim];
    for (b, block) in partition.iter().enumerate() {
        if block.is_empty() {
            return Err(NclabError::InvalidFiltration("empty block".into()));
        }
        for &i in block {
            if i >= dim {
                return Err(NclabError::InvalidFiltration(format!("index {i} outside 0..{dim}")));
            }
            if labels[i] != usize::MAX {
                return Err(NclabError::InvalidFiltration(format!("index {i} appears twice")));
            }
            labels[i] = b;
        }
    }
    if labels.contains(&usize::MAX) {
        return Err(NclabError::InvalidFiltration("partition does not cover every index".into()));
    }
    Ok(labels)
}

/// `finer` refines `coarser` when every block of `finer` sits in one block of `coarser`.
fn refines(finer: &[usize], coarser: &[usize]) -> bool {
    let mut map = std::collections::HashMap::new();
    finer.iter().zip(coarser).all(|(&f, &c)| *map.entry(f).or_insert(c) == c)
}

fn validate_chain(dim: usize, partitions: &[Partition], coarse_first: bool) -> Result<Vec<Vec<usize>>> {
    if dim == 0 {
        return Err(NclabError::InvalidFiltration("dimension must be positive".into()));
    }
    if partitions.is_empty() {
        return Err(NclabError::InvalidFiltration("at least one level is required".into()));
    }
    let labels = partitions.iter().map(|p| labels_of(dim, p)).collect::<Result<Vec<_>>>()?;
    for n in 1..labels.len() {
        let ok = if coarse_first {
            refines(&labels[n], &labels[n - 1])
        } else {
            refines(&labels[n - 1], &labels[n])
        };
        if !ok {
            return Err(NclabError::InvalidFiltration(format!("levels {n} and {} are not nested", n + 1)));
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_z() -> Operator {
        Operator::from_real_diag(&[1.0, -1.0])
    }

    fn probe(d: usize) -> Operator {
        Operator::from_fn(d, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64))
    }

    fn all() -> Vec<Filtration> {
        vec![
            Filtration::tensor_dyadic(3).unwrap(),
            Filtration::block_dyadic(3).unwrap(),
            Filtration::balanced_commutative(3).unwrap(),
        ]
    }

    #[test]
    fn partial_trace_kills_second_factor() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let zz = Operator::kron(&pauli_z(), &pauli_z());
        assert!(f.conditional_expectation(1, &zz).unwrap().is_zero(1e-15));
        let zi = Operator::kron(&pauli_z(), &Operator::identity(2));
        assert!((&f.conditional_expectation(1, &zi).unwrap() - &zi).is_zero(1e-15));
    }

    #[test]
    fn unital_and_idempotent() {
        for f in all() {
            let x = probe(f.dim());
            for n in 1..=f.levels() {
                let one = f.conditional_expectation(n, &Operator::identity(f.dim())).unwrap();
                assert!((&one - &Operator::identity(f.dim())).is_zero(1e-15));
                let once = f.expect(n, &x);
                assert!((&f.expect(n, &once) - &once).is_zero(1e-14));
            }
        }
    }

    #[test]
    fn top_level_is_identity_on_ambient() {
        for f in all() {
            let x = f.expect(f.levels(), &probe(f.dim()));
            assert!((&f.expect(f.levels(), &x) - &x).is_zero(0.0));
        }
        let t = Filtration::tensor_dyadic(2).unwrap();
        let x = probe(4);
        assert_eq!(t.expect(2, &x), x);
    }

    #[test]
    fn level_out_of_range() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let x = Operator::identity(4);
        assert!(matches!(f.conditional_expectation(0, &x), Err(NclabError::LevelOutOfRange { .. })));
        assert!(matches!(f.conditional_expectation(3, &x), Err(NclabError::LevelOutOfRange { .. })));
    }

    #[test]
    fn rejects_non_nested_chains() {
        let p1 = vec![vec![0, 1], vec![2, 3]];
        let p2 = vec![vec![0, 2], vec![1, 3]];
        let bad = Family::CommutativePartition { partitions: vec![p1.clone(), p2] };
        assert!(Filtration::new(4, bad).is_err());
        let wrong_order = Family::BlockPinching { partitions: vec![vec![vec![0, 1, 2, 3]], p1] };
        assert!(Filtration::new(4, wrong_order).is_err());
        let uncovered = Family::CommutativePartition { partitions: vec![vec![vec![0, 1]]] };
        assert!(Filtration::new(3, uncovered).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for k in FamilyKind::ALL {
            assert_eq!(FamilyKind::parse(k.name()).unwrap(), k);
        }
        assert!(FamilyKind::parse("hyperfinite").is_err());
    }
}
