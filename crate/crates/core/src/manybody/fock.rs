//! Occupation-number basis of the symmetric `N`-particle space over `M`
//! modes, symmetric states, and their reduced density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// `C(n, k)` as `u128`, saturating on overflow.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Dimension `C(M+N−1, N)` of the symmetric space.
pub fn symmetric_dimension(modes: usize, particles: usize) -> u128 {
    if modes == 0 {
        return u128::from(particles == 0);
    }
    binomial((modes + particles - 1) as u64, particles as u64)
}

/// All occupations `(n₀, …, n_{M−1})` with `Σ n_j = N`, ordered
/// lexicographically from `(N, 0, …, 0)` down to `(0, …, 0, N)`.
#[derive(Clone, Debug)]
pub struct FockBasis {
    modes: usize,
    particles: usize,
    occupations: Vec<u16>,
    /// `ways[j][r]`: number of ways to place `r` particles in modes `j..M`.
    ways: Vec<Vec<usize>>,
}

impl FockBasis {
    pub fn new(modes: usize, particles: usize, cap: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("need at least one mode".into()));
        }
        let dim = symmetric_dimension(modes, particles);
        if dim > cap as u128 {
            return Err(Error::CapExceeded(format!(
                "symmetric space dimension C(M+N-1, N) = C({}, {particles}) = {dim} exceeds the cap \
                 {cap}; reduce the number of modes M = {modes} or particles N = {particles}",
                modes + particles - 1
            )));
        }
        let mut ways = vec![vec![0usize; particles + 1]; modes + 1];
        ways[modes][0] = 1;
        for j in (0..modes).rev() {
            for r in 0..=particles {
                ways[j][r] = (0..=r).map(|v| ways[j + 1][r - v]).sum();
            }
        }
        let mut occupations = Vec::with_capacity(dim as usize * modes);
        let mut current = vec![0u16; modes];
        fill(&mut occupations, &mut current, 0, particles);
        Ok(Self { modes, particles, occupations, ways })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn occupation(&self, index: usize) -> &[u16] {
        &self.occupations[index * self.modes..(index + 1) * self.modes]
    }

    /// Position of an occupation vector in the basis order.
    pub fn index_of(&self, occupation: &[u16]) -> usize {
        let mut index = 0;
        let mut remaining = self.particles;
        for (j, &n) in occupation.iter().enumerate().take(self.modes - 1) {
            let n = n as usize;
            // occupations with a larger entry at slot j come first
            for v in (n + 1)..=remaining {
                index += self.ways[j + 1][remaining - v];
            }
            remaining -= n;
        }
        index
    }
}

fn fill(out: &mut Vec<u16>, current: &mut [u16], slot: usize, remaining: usize) {
    if slot == current.len() - 1 {
        current[slot] = remaining as u16;
        out.extend_from_slice(current);
        return;
    }
    for v in (0..=remaining).rev() {
        current[slot] = v as u16;
        fill(out, current, slot + 1, remaining - v);
    }
    current[slot] = 0;
}

/// A vector in the symmetric `N`-particle space over `M` modes.
#[derive(Clone, Debug)]
pub struct SymmetricState {
    modes: usize,
    particles: usize,
    amplitudes: Vec<Complex64>,
}

impl SymmetricState {
    pub fn new(basis: &FockBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "state has {} amplitudes, basis has {}",
                amplitudes.len(),
                basis.len()
            )));
        }
        if let Some(index) = amplitudes.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { modes: basis.modes(), particles: basis.particles(), amplitudes })
    }

    /// `φ_mode^{⊗N}`.
    pub fn product(basis: &FockBasis, mode: usize) -> Result<Self> {
        if mode >= basis.modes() {
            return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
        }
        let mut occ = vec![0u16; basis.modes()];
        occ[mode] = basis.particles() as u16;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
        amplitudes[basis.index_of(&occ)] = Complex64::new(1.0, 0.0);
        Self::new(basis, amplitudes)
    }

    /// Normalized state with i.i.d. complex Gaussian amplitudes.
    pub fn random(basis: &FockBasis, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amplitudes = (0..basis.len())
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        Self::new(basis, amplitudes)?.normalized()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero state".into()));
        }
        let amplitudes = self.amplitudes.iter().map(|z| z / norm).collect();
        Ok(Self { amplitudes, ..self })
    }

    fn check_basis(&self, basis: &FockBasis) -> Result<()> {
        if basis.modes() != self.modes || basis.particles() != self.particles {
            return Err(Error::InvalidArgument(format!(
                "state over (M, N) = ({}, {}) used with basis ({}, {})",
                self.modes,
                self.particles,
                basis.modes(),
                basis.particles()
            )));
        }
        Ok(())
    }
}

/// `a_i` applied to every component: maps `N`-particle amplitudes to
/// `(N−1)`-particle amplitudes.
fn annihilate(
    from: &FockBasis,
    to: &FockBasis,
    amplitudes: &[Complex64],
    mode: usize,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); to.len()];
    let mut occ = vec![0u16; from.modes()];
    for (index, amp) in amplitudes.iter().enumerate() {
        let src = from.occupation(index);
        let n = src[mode];
        if n == 0 || amp.norm_sqr() == 0.0 {
            continue;
        }
        occ.copy_from_slice(src);
        occ[mode] -= 1;
        out[to.index_of(&occ)] += amp * (n as f64).sqrt();
    }
    out
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `γ^(1)[i,j] = ⟨a†_j a_i⟩/N`, trace one.
pub fn one_body_density(basis: &FockBasis, psi: &SymmetricState) -> Result<DMatrix<Complex64>> {
    psi.check_basis(basis)?;
    let n = basis.particles();
    if n == 0 {
        return Err(Error::InvalidArgument("density matrix of the vacuum".into()));
    }
    let m = basis.modes();
    let lower = FockBasis::new(m, n - 1, usize::MAX)?;
    let reduced: Vec<Vec<Complex64>> =
        (0..m).map(|i| annihilate(basis, &lower, psi.amplitudes(), i)).collect();
    let norm = psi.norm().powi(2);
    Ok(DMatrix::from_fn(m, m, |i, j| inner(&reduced[j], &reduced[i]) / (n as f64 * norm)))
}

/// `γ^(2)[(i,j),(k,l)] = ⟨a†_k a†_l a_j a_i⟩/(N(N−1))` with pair index `i·M + j`.
pub fn two_body_density(basis: &FockBasis, psi: &SymmetricState) -> Result<DMatrix<Complex64>> {
    psi.check_basis(basis)?;
    let n = basis.particles();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "two-body density needs N >= 2, got N = {n}"
        )));
    }
    let m = basis.modes();
    let lower1 = FockBasis::new(m, n - 1, usize::MAX)?;
    let lower2 = FockBasis::new(m, n - 2, usize::MAX)?;
    let single: Vec<Vec<Complex64>> =
        (0..m).map(|i| annihilate(basis, &lower1, psi.amplitudes(), i)).collect();
    let pairs: Vec<Vec<Complex64>> = (0..m * m)
        .map(|p| annihilate(&lower1, &lower2, &single[p / m], p % m))
        .collect();
    let scale = (n * (n - 1)) as f64 * psi.norm().powi(2);
    Ok(DMatrix::from_fn(m * m, m * m, |p, q| inner(&pairs[q], &pairs[p]) / scale))
}

/// `γ^(k)` for `k ∈ {1, 2}`.
pub fn reduced_density(
    basis: &FockBasis,
    psi: &SymmetricState,
    order: usize,
) -> Result<DMatrix<Complex64>> {
    match order {
        1 => one_body_density(basis, psi),
        2 => two_body_density(basis, psi),
        k if k > psi.particles() => Err(Error::InvalidArgument(format!(
            "reduced density of order {k} exceeds N = {}",
            psi.particles()
        ))),
        k => Err(Error::InvalidArgument(format!("reduced densities of order {k} are not supported"))),
    }
}

/// Partial trace over the second slot of a two-body matrix on `M²` pairs.
pub fn partial_trace(gamma2: &DMatrix<Complex64>, modes: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(modes, modes, |i, j| {
        (0..modes).map(|l| gamma2[(i * modes + l, j * modes + l)]).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_ranking() {
        let basis = FockBasis::new(3, 2, 100).unwrap();
        let listed: Vec<Vec<u16>> = (0..basis.len()).map(|i| basis.occupation(i).to_vec()).collect();
        assert_eq!(
            listed,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
        for (i, occ) in listed.iter().enumerate() {
            assert_eq!(basis.index_of(occ), i);
        }
    }

    #[test]
    fn dimension_and_cap() {
        for (m, n) in [(1, 5), (4, 3), (6, 5), (10, 4)] {
            let basis = FockBasis::new(m, n, 1 << 20).unwrap();
            assert_eq!(basis.len() as u128, symmetric_dimension(m, n));
            for i in 0..basis.len() {
                assert_eq!(basis.index_of(basis.occupation(i)), i);
            }
        }
        assert!(matches!(FockBasis::new(40, 6, 200_000), Err(Error::CapExceeded(_))));
        assert_eq!(symmetric_dimension(40, 6), 8_145_060);
    }

    #[test]
    fn product_state_density() {
        let basis = FockBasis::new(3, 4, 100).unwrap();
        let psi = SymmetricState::product(&basis, 0).unwrap();
        let g1 = one_body_density(&basis, &psi).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert_eq!(g1[(i, j)], Complex64::new(expected, 0.0));
            }
        }
    }

    #[test]
    fn cat_state_has_half_occupations() {
        let basis = FockBasis::new(2, 2, 100).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 3];
        amps[basis.index_of(&[2, 0])] = Complex64::new(s, 0.0);
        amps[basis.index_of(&[0, 2])] = Complex64::new(s, 0.0);
        let psi = SymmetricState::new(&basis, amps).unwrap();
        let g1 = one_body_density(&basis, &psi).unwrap();
        assert!((g1[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((g1[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(g1[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn order_checks() {
        let basis = FockBasis::new(2, 1, 100).unwrap();
        let psi = SymmetricState::product(&basis, 1).unwrap();
        assert!(reduced_density(&basis, &psi, 2).is_err());
        assert!(reduced_density(&basis, &psi, 1).is_ok());
    }
}
