/// Pre-activations are clamped to this magnitude before σ / tanh.
pub const PREACT_CLAMP: f64 = 30.0;

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-PREACT_CLAMP, PREACT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

pub fn tanh(z: f64) -> f64 {
    z.clamp(-PREACT_CLAMP, PREACT_CLAMP).tanh()
}

/// σ'(z) expressed through the output `s = σ(z)`.
pub fn sigmoid_grad(s: f64) -> f64 {
    s * (1.0 - s)
}

/// tanh'(z) expressed through the output `t = tanh(z)`.
pub fn tanh_grad(t: f64) -> f64 {
    1.0 - t * t
}
