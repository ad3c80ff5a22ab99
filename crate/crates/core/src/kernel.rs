//! Pairwise SKU similarity: RX-embedding fidelity simulated on a full
//! statevector, or cosine similarity on the same embeddings.

use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::EmbeddingMatrix;

/// Number of qubits (= PCA components) used by the embedding circuit.
pub const N_QUBITS: usize = 5;

const SIMILARITY_MAGIC: [u8; 4] = *b"SIMM";

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("feature vectors must have length {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("empty embedding matrix")]
    Empty,
    #[error("non-finite rotation angle")]
    NonFinite,
    #[error("malformed similarity file: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` wires.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amplitudes }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, basis_index: usize) -> f64 {
        self.amplitudes[basis_index].norm_sqr()
    }

    /// RX(θ) = [[cos θ/2, −i sin θ/2], [−i sin θ/2, cos θ/2]] on `qubit`
    /// (qubit k is bit k of the basis index).
    pub fn apply_rx(&mut self, qubit: usize, angle: f64) -> Result<(), KernelError> {
        if qubit >= self.n_qubits {
            return Err(KernelError::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        let mask = 1usize << qubit;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = a0 * c + a1 * mis;
                self.amplitudes[i | mask] = a0 * mis + a1 * c;
            }
        }
        Ok(())
    }
}

/// P(|0…0⟩) after RX(x1_k) then RX(−x2_k) on every wire k.
pub fn pair_fidelity(x1: &[f64], x2: &[f64]) -> Result<f64, KernelError> {
    if x1.len() != N_QUBITS {
        return Err(KernelError::Length {
            expected: N_QUBITS,
            got: x1.len(),
        });
    }
    if x2.len() != N_QUBITS {
        return Err(KernelError::Length {
            expected: N_QUBITS,
            got: x2.len(),
        });
    }
    let mut state = StateVector::zero(N_QUBITS);
    for (k, (a, b)) in x1.iter().zip(x2).enumerate() {
        state.apply_rx(k, *a)?;
        state.apply_rx(k, -*b)?;
    }
    Ok(state.probability(0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMethod {
    #[default]
    QuantumFidelity,
    Cosine,
}

impl SimilarityMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityMethod::QuantumFidelity => "quantum",
            SimilarityMethod::Cosine => "cosine",
        }
    }
}

impl FromStr for SimilarityMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "quantum" | "quantum_fidelity" => Ok(Self::QuantumFidelity),
            "cosine" => Ok(Self::Cosine),
            other => Err(format!("unknown similarity method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub method: SimilarityMethod,
    /// Multiplies every embedding coordinate before it is used as a rotation angle.
    pub angle_scale: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            method: SimilarityMethod::QuantumFidelity,
            angle_scale: 1.0,
        }
    }
}

/// Dense symmetric N×N similarity with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub n: usize,
    pub method: SimilarityMethod,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_values(n: usize, method: SimilarityMethod, values: Vec<f64>) -> Result<Self, KernelError> {
        if values.len() != n * n {
            return Err(KernelError::Format(format!(
                "expected {} values for n={n}, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(SimilarityMatrix { n, method, values })
    }

    /// All-zero off-diagonal matrix, for instances without a similarity term.
    pub fn identity(n: usize) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        SimilarityMatrix {
            n,
            method: SimilarityMethod::Cosine,
            values,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:.16e}", self.get(i, j))).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Square submatrix for the given indices (in that order).
    pub fn submatrix(&self, idx: &[usize]) -> SimilarityMatrix {
        let k = idx.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                values.push(self.get(i, j));
            }
        }
        SimilarityMatrix {
            n: k,
            method: self.method,
            values,
        }
    }

    /// 4-byte magic, u32 LE N, then N² f64 LE row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.values.len());
        out.extend_from_slice(&SIMILARITY_MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). The method tag is not stored.
    pub fn from_bytes(bytes: &[u8], method: SimilarityMethod) -> Result<Self, KernelError> {
        if bytes.len() < 8 || bytes[..4] != SIMILARITY_MAGIC {
            return Err(KernelError::Format("bad magic".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let body = &bytes[8..];
        if body.len() != n * n * 8 {
            return Err(KernelError::Format(format!("body length {} for n={n}", body.len())));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(SimilarityMatrix { n, method, values })
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Fills S_ij = S_ji from one evaluation per unordered pair; S_ii = 1.
pub fn similarity_matrix(embeddings: &EmbeddingMatrix, config: &KernelConfig) -> Result<SimilarityMatrix, KernelError> {
    let n = embeddings.rows;
    if n == 0 {
        return Err(KernelError::Empty);
    }
    if config.method == SimilarityMethod::QuantumFidelity && embeddings.dims != N_QUBITS {
        return Err(KernelError::Length {
            expected: N_QUBITS,
            got: embeddings.dims,
        });
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| embeddings.row(i).iter().map(|x| x * config.angle_scale).collect())
        .collect();
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(KernelError::NonFinite);
    }

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| match config.method {
                    SimilarityMethod::QuantumFidelity => pair_fidelity(&rows[i], &rows[j]).expect("length checked"),
                    SimilarityMethod::Cosine => cosine(&rows[i], &rows[j]),
                })
                .collect()
        })
        .collect();

    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for (off, &v) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(SimilarityMatrix {
        n,
        method: config.method,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn closed_form(x1: &[f64], x2: &[f64]) -> f64 {
        x1.iter().zip(x2).map(|(a, b)| ((a - b) / 2.0).cos().powi(2)).product()
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut s = StateVector::zero(3);
        s.apply_rx(1, 0.7).unwrap();
        let before = s.clone();
        s.apply_rx(2, 0.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn rx_pi_flips_the_bit() {
        let mut s = StateVector::zero(1);
        s.apply_rx(0, PI).unwrap();
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rx_half_pi_is_even_superposition() {
        let mut s = StateVector::zero(1);
        s.apply_rx(0, PI / 2.0).unwrap();
        assert!((s.probability(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rx_rejects_bad_qubit() {
        let mut s = StateVector::zero(2);
        assert!(matches!(s.apply_rx(2, 1.0), Err(KernelError::QubitOutOfRange { .. })));
    }

    #[test]
    fn norm_is_conserved_over_ten_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = StateVector::zero(5);
        for _ in 0..10 {
            s.apply_rx(rng.gen_range(0..5), rng.gen_range(-10.0..10.0)).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn fidelity_examples() {
        let x = [0.3, -1.2, 2.0, 0.1, 5.0];
        assert!((pair_fidelity(&x, &x).unwrap() - 1.0).abs() < 1e-14);
        let a = [PI, 0.0, 0.0, 0.0, 0.0];
        assert!(pair_fidelity(&a, &[0.0; 5]).unwrap() < 1e-30);
        assert!(matches!(
            pair_fidelity(&[0.0; 4], &[0.0; 5]),
            Err(KernelError::Length { .. })
        ));
    }

    #[test]
    fn fidelity_matches_product_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a: Vec<f64> = (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let sim = pair_fidelity(&a, &b).unwrap();
            assert!((sim - closed_form(&a, &b)).abs() <= 1e-10);
            assert!((sim - pair_fidelity(&b, &a).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn fidelity_is_two_pi_periodic_in_the_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let k = rng.gen_range(0..5);
            let mut shifted = a.clone();
            shifted[k] += 2.0 * PI;
            let d = (pair_fidelity(&a, &b).unwrap() - pair_fidelity(&shifted, &b).unwrap()).abs();
            assert!(d < 1e-10);
        }
    }

    #[test]
    fn single_row_matrix() {
        let emb = EmbeddingMatrix::from_rows(&[[0.1, 0.2, 0.3, 0.4, 0.5]]);
        let s = similarity_matrix(&emb, &KernelConfig::default()).unwrap();
        assert_eq!(s.values(), &[1.0]);
    }

    #[test]
    fn duplicate_rows_are_fully_similar() {
        let r = [0.4, -0.2, 1.3, 0.0, 0.9];
        let emb = EmbeddingMatrix::from_rows(&[r, [1.0, 1.0, 1.0, 1.0, 1.0], r]);
        for method in [SimilarityMethod::QuantumFidelity, SimilarityMethod::Cosine] {
            let s = similarity_matrix(
                &emb,
                &KernelConfig {
                    method,
                    angle_scale: 1.0,
                },
            )
            .unwrap();
            assert!((s.get(0, 2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_zero_norm_row_is_dissimilar() {
        let emb = EmbeddingMatrix::from_rows(&[[0.0; 5], [1.0, 0.0, 0.0, 0.0, 0.0]]);
        let cfg = KernelConfig {
            method: SimilarityMethod::Cosine,
            angle_scale: 1.0,
        };
        let s = similarity_matrix(&emb, &cfg).unwrap();
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(0, 0), 1.0);
    }

    #[test]
    fn random_matrix_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let emb = EmbeddingMatrix::from_rows(&rows);
        let s = similarity_matrix(&emb, &KernelConfig::default()).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                // independent recomputation of each half
                let expect = if i == j { 1.0 } else { closed_form(&rows[i], &rows[j]) };
                assert!((s.get(i, j) - expect).abs() < 1e-10);
                assert_eq!(s.get(i, j), s.get(j, i));
                assert!((0.0..=1.0).contains(&s.get(i, j)));
            }
        }
    }

    #[test]
    fn binary_round_trip() {
        let emb = EmbeddingMatrix::from_rows(&[[0.1, 0.2, 0.3, 0.4, 0.5], [0.5, 0.4, 0.3, 0.2, 0.1]]);
        let s = similarity_matrix(&emb, &KernelConfig::default()).unwrap();
        let back = SimilarityMatrix::from_bytes(&s.to_bytes(), s.method).unwrap();
        assert_eq!(back, s);
        assert!(SimilarityMatrix::from_bytes(b"nope", s.method).is_err());
    }

    #[test]
    fn non_finite_angles_are_rejected() {
        let emb = EmbeddingMatrix::from_rows(&[[0.1; 5], [0.2; 5]]);
        let cfg = KernelConfig {
            angle_scale: f64::NAN,
            ..KernelConfig::default()
        };
        assert!(matches!(similarity_matrix(&emb, &cfg), Err(KernelError::NonFinite)));
    }
}
