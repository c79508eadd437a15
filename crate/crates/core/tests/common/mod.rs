//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code path it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num::{BigRational, Signed, Zero};
use num_complex::Complex64;
use qklstm::lstm::{ClassicalLstm, QkLstm, GATES};
use qklstm::qkernel::{kernel, FeatureMap};
use qklstm::sim::{Circuit, Gate};
use rand::Rng;

pub fn fixture_csv() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_city_day.csv")
}

pub fn fixture_digest() -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_city_day.sha256");
    std::fs::read_to_string(p).unwrap().trim().to_string()
}

// ---------------------------------------------------------------------------
// dense unitaries

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn hadamard() -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

pub fn ry(theta: f64) -> DMatrix<Complex64> {
    let (s, co) = (theta / 2.0).sin_cos();
    DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

pub fn rz(phi: f64) -> DMatrix<Complex64> {
    let e = |a: f64| Complex64::from_polar(1.0, a);
    DMatrix::from_row_slice(2, 2, &[e(-phi / 2.0), c(0.0, 0.0), c(0.0, 0.0), e(phi / 2.0)])
}

fn pauli_x() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

fn projector(bit: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(2, 2);
    m[(bit, bit)] = c(1.0, 0.0);
    m
}

/// `⊗_q factors[q]`, qubit 0 leftmost (most significant).
fn kron_all(factors: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// Single-qubit operator `u` on qubit `q` of an `n`-qubit register.
pub fn embed(n: usize, q: usize, u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let factors: Vec<_> = (0..n)
        .map(|k| if k == q { u.clone() } else { DMatrix::identity(2, 2) })
        .collect();
    kron_all(&factors)
}

/// `|0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ X_t`.
pub fn cnot(n: usize, control: usize, target: usize) -> DMatrix<Complex64> {
    let term = |bit: usize, on_target: DMatrix<Complex64>| {
        let factors: Vec<_> = (0..n)
            .map(|k| {
                if k == control {
                    projector(bit)
                } else if k == target {
                    on_target.clone()
                } else {
                    DMatrix::identity(2, 2)
                }
            })
            .collect();
        kron_all(&factors)
    };
    term(0, DMatrix::identity(2, 2)) + term(1, pauli_x())
}

pub fn gate_unitary(n: usize, g: &Gate) -> DMatrix<Complex64> {
    match *g {
        Gate::H { target } => embed(n, target, &hadamard()),
        Gate::Ry { target, angle } => embed(n, target, &ry(angle)),
        Gate::Rz { target, angle } => embed(n, target, &rz(angle)),
        Gate::Cnot { control, target } => cnot(n, control, target),
    }
}

/// Product of the gate unitaries, first gate rightmost.
pub fn circuit_unitary(circuit: &Circuit) -> DMatrix<Complex64> {
    let n = circuit.n_qubits();
    let dim = 1 << n;
    circuit
        .gates()
        .iter()
        .fold(DMatrix::identity(dim, dim), |acc, g| gate_unitary(n, g) * acc)
}

pub fn apply_unitary(u: &DMatrix<Complex64>, amps: &[Complex64]) -> Vec<Complex64> {
    let v = DVector::from_column_slice(amps);
    (u * v).iter().copied().collect()
}

pub fn basis_zero(n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

/// Encoding unitary built straight from its definition: H layer, then per
/// qubit `Ry(θ_k)·Rz(φ_k)`, then CNOTs `(0,1)…(n-2,n-1)`.
pub fn encoding_unitary(n: usize, thetas: &[f64], phis: &[f64]) -> DMatrix<Complex64> {
    let dim = 1 << n;
    let mut u = DMatrix::identity(dim, dim);
    for q in 0..n {
        u = embed(n, q, &hadamard()) * u;
    }
    for q in 0..n {
        u = embed(n, q, &(ry(thetas[q]) * rz(phis[q]))) * u;
    }
    for q in 0..n.saturating_sub(1) {
        u = cnot(n, q, q + 1) * u;
    }
    u
}

/// Round-robin slot means, computed without the crate.
pub fn round_robin_angles(v: &[f64], n: usize, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let slots = 2 * n;
    let mut sum = vec![0.0; slots];
    let mut cnt = vec![0usize; slots];
    for (i, x) in v.iter().enumerate() {
        sum[i % slots] += x;
        cnt[i % slots] += 1;
    }
    let angle = |l: usize| {
        if cnt[l] == 0 {
            0.0
        } else {
            scale * sum[l] / cnt[l] as f64
        }
    };
    (
        (0..n).map(|k| angle(2 * k)).collect(),
        (0..n).map(|k| angle(2 * k + 1)).collect(),
    )
}

/// `|⟨0|U(b)† U(a)|0⟩|²` via dense matrices.
pub fn kernel_oracle(a: &[f64], b: &[f64], n: usize, scale: f64) -> f64 {
    let (ta, pa) = round_robin_angles(a, n, scale);
    let (tb, pb) = round_robin_angles(b, n, scale);
    let ua = encoding_unitary(n, &ta, &pa);
    let ub = encoding_unitary(n, &tb, &pb);
    let m = ub.adjoint() * ua;
    m[(0, 0)].norm_sqr()
}

pub fn random_gate(rng: &mut impl Rng, n: usize) -> Gate {
    let q = rng.gen_range(0..n);
    let angle = rng.gen_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI);
    match rng.gen_range(0..if n > 1 { 4 } else { 3 }) {
        0 => Gate::H { target: q },
        1 => Gate::Ry { target: q, angle },
        2 => Gate::Rz { target: q, angle },
        _ => {
            let mut t = rng.gen_range(0..n - 1);
            if t >= q {
                t += 1;
            }
            Gate::Cnot { control: q, target: t }
        }
    }
}

pub fn random_circuit(rng: &mut impl Rng, n: usize, len: usize) -> Circuit {
    Circuit::with_gates(n, (0..len).map(|_| random_gate(rng, n)).collect()).unwrap()
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..1 << n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

// ---------------------------------------------------------------------------
// LSTM dual implementation

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct DualStep {
    v: DVector<f64>,
    c_prev: DVector<f64>,
    c: DVector<f64>,
    gates: [DVector<f64>; 4],
}

fn weight_matrix(m: &ClassicalLstm, gate: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.hidden, m.hidden + m.input_dim, &m.weights[gate])
}

fn dual_forward(m: &ClassicalLstm, seq: &[Vec<f64>]) -> (f64, Vec<DualStep>) {
    let mut h = DVector::zeros(m.hidden);
    let mut c = DVector::zeros(m.hidden);
    let mut steps = Vec::new();
    for x in seq {
        let v = DVector::from_iterator(m.hidden + m.input_dim, h.iter().chain(x.iter()).copied());
        let z: Vec<DVector<f64>> = (0..4)
            .map(|g| weight_matrix(m, g) * &v + DVector::from_column_slice(&m.biases[g]))
            .collect();
        let f = z[0].map(sig);
        let i = z[1].map(sig);
        let g = z[2].map(f64::tanh);
        let o = z[3].map(sig);
        let c_new = f.component_mul(&c) + i.component_mul(&g);
        h = o.component_mul(&c_new.map(f64::tanh));
        steps.push(DualStep {
            v,
            c_prev: c.clone(),
            c: c_new.clone(),
            gates: [f, i, g, o],
        });
        c = c_new;
    }
    let y = DVector::from_column_slice(&m.head_w).dot(&h) + m.head_b;
    (y, steps)
}

/// Straightforward matrix-form LSTM prediction from a zero state.
pub fn dual_classical_predict(m: &ClassicalLstm, seq: &[Vec<f64>]) -> f64 {
    dual_forward(m, seq).0
}

/// Matrix-form BPTT of `prediction` scaled by `d_pred`, returned in the
/// crate's parameter layout.
pub fn dual_classical_grad(m: &ClassicalLstm, seq: &[Vec<f64>], d_pred: f64) -> ClassicalLstm {
    let (_, steps) = dual_forward(m, seq);
    let hid = m.hidden;
    let cols = hid + m.input_dim;
    let last = steps.last().unwrap();
    let h_t = last.gates[3].component_mul(&last.c.map(f64::tanh));

    let mut dw: Vec<DMatrix<f64>> = (0..4).map(|_| DMatrix::zeros(hid, cols)).collect();
    let mut db: Vec<DVector<f64>> = (0..4).map(|_| DVector::zeros(hid)).collect();
    let d_head_w = &h_t * d_pred;
    let mut dh = DVector::from_column_slice(&m.head_w) * d_pred;
    let mut dc = DVector::zeros(hid);

    for s in steps.iter().rev() {
        let [f, i, g, o] = &s.gates;
        let tc = s.c.map(f64::tanh);
        let d_o = dh.component_mul(&tc);
        dc += dh.component_mul(o).component_mul(&tc.map(|t| 1.0 - t * t));
        let d_f = dc.component_mul(&s.c_prev);
        let d_i = dc.component_mul(g);
        let d_g = dc.component_mul(i);
        let dz = [
            d_f.component_mul(&f.map(|s| s * (1.0 - s))),
            d_i.component_mul(&i.map(|s| s * (1.0 - s))),
            d_g.component_mul(&g.map(|t| 1.0 - t * t)),
            d_o.component_mul(&o.map(|s| s * (1.0 - s))),
        ];
        let mut dv = DVector::zeros(cols);
        for k in 0..4 {
            dw[k] += &dz[k] * s.v.transpose();
            db[k] += &dz[k];
            dv += weight_matrix(m, k).transpose() * &dz[k];
        }
        dh = dv.rows(0, hid).into_owned();
        dc = dc.component_mul(f);
    }

    let row_major = |a: &DMatrix<f64>| -> Vec<f64> { a.transpose().iter().copied().collect() };
    ClassicalLstm {
        input_dim: m.input_dim,
        hidden: hid,
        weights: std::array::from_fn(|k| row_major(&dw[k])),
        biases: std::array::from_fn(|k| db[k].iter().copied().collect()),
        head_w: d_head_w.iter().copied().collect(),
        head_b: d_pred,
    }
}

/// QK-LSTM prediction re-evaluated with one independent kernel call per
/// (gate, reference) pair and hand-rolled sums.
pub fn naive_qk_predict(m: &QkLstm, seq: &[Vec<f64>]) -> f64 {
    let hid = m.hidden;
    let n = m.refs.vectors.len();
    let mut h = vec![0.0; hid];
    let mut c = vec![0.0; hid];
    for x in seq {
        let v: Vec<f64> = h.iter().chain(x.iter()).copied().collect();
        let mut gates: Vec<Vec<f64>> = Vec::new();
        for g in 0..GATES {
            let map: &FeatureMap = if m.maps.len() == 1 { &m.maps[0] } else { &m.maps[g] };
            let k: Vec<f64> = m.refs.vectors.iter().map(|r| kernel(&v, r, map).unwrap()).collect();
            let pre: Vec<f64> = (0..hid)
                .map(|u| {
                    if m.biases[g].len() == 1 {
                        let mut s = 0.0;
                        for j in 0..n {
                            s += m.alphas[g][j] * k[j];
                        }
                        s + m.biases[g][0]
                    } else {
                        let mut s = 0.0;
                        for j in 0..n {
                            s += m.alphas[g][u * n + j] * k[j];
                        }
                        s + m.biases[g][u]
                    }
                })
                .collect();
            gates.push(if g == 2 {
                pre.iter().map(|z| z.tanh()).collect()
            } else {
                pre.iter().map(|&z| sig(z)).collect()
            });
        }
        for u in 0..hid {
            c[u] = gates[0][u] * c[u] + gates[1][u] * gates[2][u];
            h[u] = gates[3][u] * c[u].tanh();
        }
    }
    m.head_w.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>() + m.head_b
}

// ---------------------------------------------------------------------------
// preprocessing and metrics

/// Positions whose z-score exceeds `gamma`, decided in exact rational
/// arithmetic: `(x − μ)² > γ² σ²`.
pub fn zscore_oracle(values: &[Option<f64>], gamma: f64) -> Vec<usize> {
    let present: Vec<(usize, BigRational)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, BigRational::from_float(x).unwrap())))
        .collect();
    if present.len() < 2 {
        return Vec::new();
    }
    let n = BigRational::from_integer(present.len().into());
    let mean = present.iter().fold(BigRational::zero(), |a, (_, x)| a + x) / &n;
    let var = present.iter().fold(BigRational::zero(), |a, (_, x)| {
        let d = x - &mean;
        a + &d * &d
    }) / &n;
    if var.is_zero() {
        return Vec::new();
    }
    let g = BigRational::from_float(gamma).unwrap();
    let bound = &g * &g * &var;
    present
        .into_iter()
        .filter(|(_, x)| {
            let d = (x - &mean).abs();
            &d * &d > bound
        })
        .map(|(i, _)| i)
        .collect()
}

pub struct MetricOracle {
    pub rmse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
    pub r2: Option<f64>,
}

/// Residuals first, then each statistic from its own pass.
pub fn metrics_oracle(y: &[f64], y_hat: &[f64]) -> MetricOracle {
    let residuals: Vec<f64> = y.iter().zip(y_hat).map(|(a, p)| p - a).collect();
    let n = y.len() as f64;
    let mean_y = y.iter().sum::<f64>() / n;
    let sq: f64 = residuals.iter().map(|r| r.powi(2)).sum();
    let abs: f64 = residuals.iter().map(|r| r.abs()).sum();
    let pct: Vec<f64> = y
        .iter()
        .zip(&residuals)
        .filter(|(a, _)| a.abs() >= 1e-8)
        .map(|(a, r)| (r / a).abs())
        .collect();
    let tot: f64 = y.iter().map(|a| (a - mean_y).powi(2)).sum();
    MetricOracle {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
        mape: (!pct.is_empty()).then(|| 100.0 * pct.iter().sum::<f64>() / pct.len() as f64),
        r2: (tot > 0.0).then(|| 1.0 - sq / tot),
    }
}

// ---------------------------------------------------------------------------
// numerics

pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `|a − b| ≤ rel · max(|a|, |b|)`, with an absolute floor for entries that
/// are zero in both.
pub fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}

pub fn amp_close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}
